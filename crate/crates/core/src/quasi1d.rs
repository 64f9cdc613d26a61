//! Quasi-1D reduction (flow along x³, axisymmetric in momentum) and a
//! first-order finite-volume solver for the reduced system
//!
//! B́⁰ ∂_t Ẃ + B́³ ∂_x Ẃ = Ś.
//!
//! Ẃ = (n, u, θ, Π, f̃_0, …) keeps the m = 0 coefficients; u is the velocity
//! along x³.
//!
//! The solver is Lax–Friedrichs on the quasilinear form followed by exact
//! relaxation of the frozen linear source. The quasilinear update alone does
//! not conserve N⁰, T⁰⁰, T⁰³, so each step finishes by resetting (n, u, θ)
//! of every cell to match the flux-form Lax–Friedrichs update of those three
//! densities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{degree_major, n_moments};
use crate::error::{Error, Result};
use crate::frame_kinematics::{FluidState, MomentPair};
use crate::moment_assembly::{assemble_with, equilibrium_w, moments_of, state_of, SystemMatrices};
use crate::orthopoly::Precision;
use crate::special_functions::{g_ratio, g_ratio_dzeta};

/// Ń_M = (M+1)(M+2)/2.
pub fn n_acute(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// Rows of the full system kept by the reduction (the m = 0 basis functions).
pub fn kept_rows(order: usize) -> Vec<usize> {
    degree_major(order).iter().enumerate().filter(|(_, i)| i.m == 0).map(|(j, _)| j).collect()
}

/// Entries of the full W kept by the reduction.
pub fn kept_w(order: usize) -> Vec<usize> {
    let mut out = vec![0, 3, 4];
    out.extend(kept_rows(order).into_iter().filter(|&j| j >= 5));
    out
}

/// Full W from a reduced one, with u₁ = u₂ = 0 and all m ≠ 0 entries zero.
pub fn embed(order: usize, wq: &[f64]) -> Result<Vec<f64>> {
    if wq.len() != n_acute(order) {
        return Err(Error::contract(format!("reduced W has length {}, expected {}", wq.len(), n_acute(order))));
    }
    let mut w = vec![0.0; n_moments(order)];
    for (&j, &v) in kept_w(order).iter().zip(wq) {
        w[j] = v;
    }
    Ok(w)
}

/// Reduced W from a full one; the discarded entries must vanish.
pub fn restrict(order: usize, w: &[f64]) -> Result<Vec<f64>> {
    if w.len() != n_moments(order) {
        return Err(Error::contract(format!("W has length {}, expected {}", w.len(), n_moments(order))));
    }
    let keep = kept_w(order);
    if let Some(j) = (0..w.len()).find(|j| !keep.contains(j) && w[*j] != 0.0) {
        return Err(Error::contract(format!("entry {j} of W is not quasi-1D (value {})", w[j])));
    }
    Ok(keep.iter().map(|&j| w[j]).collect())
}

/// Reduced matrices at one state.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub order: usize,
    pub w: Vec<f64>,
    pub b0: DMatrix<f64>,
    pub b3: DMatrix<f64>,
    pub m0: DMatrix<f64>,
    pub m3: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// Á⁰ D̃^W restricted, so Ś = −(1/τ) (this) Ẃ.
    pub relax: DMatrix<f64>,
    pub sys: SystemMatrices,
}

fn extract(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

impl Reduced {
    pub fn new(order: usize, wq: &[f64], prec: Precision) -> Result<Self> {
        let w = embed(order, wq)?;
        let sys = assemble_with(order, &w, prec)?;
        let (rows, cols) = (kept_rows(order), kept_w(order));
        let relax = extract(&(&sys.a[0] * sys.dw_tilde()), &rows, &cols);
        Ok(Reduced {
            order,
            w: wq.to_vec(),
            b0: extract(&sys.b[0], &rows, &cols),
            b3: extract(&sys.b[3], &rows, &cols),
            m0: extract(&sys.m[0], &rows, &rows),
            m3: extract(&sys.m[3], &rows, &rows),
            d: extract(&sys.d, &rows, &cols),
            relax,
            sys,
        })
    }

    pub fn state(&self) -> FluidState {
        self.sys.state
    }

    /// Ś = −(1/τ) Á⁰ D̃^W Ẃ.
    pub fn source(&self, tau: f64) -> Vec<f64> {
        (&self.relax * DVector::from_column_slice(&self.w) * (-1.0 / tau)).as_slice().to_vec()
    }

    /// Eigenvalues of (B́⁰)⁻¹B́³ through the symmetric pencil (Ḿ⁰, Ḿ³).
    pub fn speeds(&self) -> Result<Vec<f64>> {
        let mut v = crate::analysis::pencil_eigen(&self.m0, &self.m3)?.0;
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    /// Solution at time dt of B́⁰ dẂ/dt = −(1/τ) Á⁰ D̃^W Ẃ with the
    /// coefficients frozen at this state, applied to `w`.
    pub fn relax_step(&self, w: &[f64], dt: f64, tau: f64) -> Result<Vec<f64>> {
        let k = self
            .b0
            .clone()
            .lu()
            .solve(&self.relax)
            .ok_or_else(|| Error::numerical("B0 singular in relaxation step"))?;
        let e = (k * (-dt / tau)).exp();
        Ok((e * DVector::from_column_slice(w)).as_slice().to_vec())
    }

    /// N^α and T^{αβ} of the projected distribution.
    pub fn moments(&self) -> MomentPair {
        moments_of(&self.sys, &self.sys_w())
    }

    fn sys_w(&self) -> Vec<f64> {
        embed(self.order, &self.w).expect("length checked at construction")
    }
}

/// Π, f̃_0 and the ℓ = 2, k = 0 entry of a reduced W (zero when the order
/// does not carry them).
fn extras(w: &[f64]) -> (f64, f64, f64) {
    let get = |j: usize| w.get(j).copied().unwrap_or(0.0);
    (get(3), get(4), get(5))
}

/// Rest-frame shear stress π³³ per unit ℓ = 2, k = 0 coefficient, 2θ√(G/3),
/// and its θ-derivative.
fn shear_coeff(theta: f64) -> Result<(f64, f64)> {
    let zeta = 1.0 / theta;
    let g = g_ratio(zeta)?;
    let dg = -g_ratio_dzeta(zeta)? * zeta * zeta;
    let r = (g / 3.0).sqrt();
    Ok((2.0 * theta * r, 2.0 * r + theta * dg / (3.0 * r)))
}

/// Densities (N⁰, T⁰⁰, T⁰³) and fluxes (N³, T³⁰, T³³) of a reduced W.
///
/// Only n, u, θ, Π, f̃_0 and the ℓ = 2, k = 0 entry σ contribute:
/// N = nU + f̃_0 e₃ and T = (nG + Π) U U − (nθ + Π) g + s (e₃e₃ − ½(e₁e₁ + e₂e₂))
/// with e₃ = γ(u, 0, 0, 1) and s = 2θ√(G/3) σ.
pub fn conserved(w: &[f64]) -> Result<([f64; 3], [f64; 3])> {
    let (n, u, theta) = (w[0], w[1], w[2]);
    let (pi, q, sigma) = extras(w);
    let st = FluidState::new(n, [0.0, 0.0, u], theta)?;
    let gam = st.gamma();
    let g2 = gam * gam;
    let h = n * g_ratio(st.zeta())? + pi;
    let p = n * theta + pi;
    let s = shear_coeff(theta)?.0 * sigma;
    Ok((
        [gam * (n + u * q), h * g2 - p + s * g2 * u * u, (h + s) * g2 * u],
        [gam * (n * u + q), (h + s) * g2 * u, h * g2 * u * u + p + s * g2],
    ))
}

/// Newton for (n, u, θ) of `w` so that its densities equal `target`, with the
/// other entries held fixed. Starts from the current entries.
pub fn match_densities(w: &mut [f64], target: [f64; 3]) -> Result<()> {
    let (pi, q, sigma) = extras(w);
    let scale = target.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for _ in 0..50 {
        let (dens, _) = conserved(w)?;
        let res: [f64; 3] = std::array::from_fn(|k| dens[k] - target[k]);
        if res.iter().all(|r| r.abs() <= 4.0 * f64::EPSILON * scale) {
            return Ok(());
        }
        let (n, u, theta) = (w[0], w[1], w[2]);
        let gam = 1.0 / (1.0 - u * u).sqrt();
        let g2 = gam * gam;
        let zeta = 1.0 / theta;
        let g = g_ratio(zeta)?;
        let dg = -g_ratio_dzeta(zeta)? * zeta * zeta;
        let (kappa, dkappa) = shear_coeff(theta)?;
        let (s, ds) = (kappa * sigma, dkappa * sigma);
        let hs = n * g + pi + s;
        #[rustfmt::skip]
        let jac = nalgebra::Matrix3::new(
            gam, g2 * gam * u * (n + u * q) + gam * q, 0.0,
            g * g2 - theta, 2.0 * hs * g2 * g2 * u, n * dg * g2 - n + ds * g2 * u * u,
            g * g2 * u, hs * (g2 + 2.0 * g2 * g2 * u * u), (n * dg + ds) * g2 * u,
        );
        let d = jac
            .lu()
            .solve(&nalgebra::Vector3::from(res))
            .ok_or_else(|| Error::numerical("singular Jacobian while matching conserved densities"))?;
        let mut t = 1.0;
        loop {
            let cand = [n - t * d[0], u - t * d[1], theta - t * d[2]];
            if cand[0] > 0.0 && cand[1].abs() < 1.0 && cand[2] > 0.0 {
                w[..3].copy_from_slice(&cand);
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(Error::inadmissible("conserved densities have no admissible (n, u, theta)"));
            }
        }
    }
    let (dens, _) = conserved(w)?;
    if dens.iter().zip(&target).all(|(a, b)| (a - b).abs() <= 1e-12 * scale) {
        return Ok(());
    }
    Err(Error::numerical("matching conserved densities did not converge"))
}

/// Reduced equilibrium W for (n, u, θ).
pub fn equilibrium(order: usize, n: f64, u: f64, theta: f64) -> Result<Vec<f64>> {
    let s = FluidState::new(n, [0.0, 0.0, u], theta)?;
    restrict(order, &equilibrium_w(order, &s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Outflow,
    Periodic,
}

/// Relaxation time: fixed, or Kn/n per cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Relaxation {
    Tau(f64),
    Knudsen(f64),
}

impl Relaxation {
    pub fn tau(&self, n: f64) -> f64 {
        match *self {
            Relaxation::Tau(t) => t,
            Relaxation::Knudsen(kn) => kn / n,
        }
    }
}

/// Solver configuration, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(rename = "M")]
    pub order: usize,
    pub cells: usize,
    pub x_range: [f64; 2],
    pub cfl: f64,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub knudsen: Option<f64>,
    pub t_end: f64,
    /// Steps between snapshots; 0 keeps only the initial and final states.
    #[serde(default)]
    pub snapshot_every: usize,
    /// (n, u, θ) left of the midpoint.
    pub left_state: [f64; 3],
    pub right_state: [f64; 3],
    pub bc: Boundary,
}

impl Config {
    pub fn validate(&self) -> Result<Relaxation> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=10).contains(&self.order) {
            return bad(format!("M must be in 1..=10, got {}", self.order));
        }
        if self.cells < 3 {
            return bad(format!("need at least 3 cells, got {}", self.cells));
        }
        if !(self.x_range[1] > self.x_range[0]) {
            return bad(format!("x_range must be increasing, got {:?}", self.x_range));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return bad(format!("cfl must lie in (0, 0.5], got {}", self.cfl));
        }
        if !(self.t_end >= 0.0) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        for s in [self.left_state, self.right_state] {
            if !(s[0] > 0.0 && s[1].abs() < 1.0 && s[2] > 0.0) {
                return bad(format!("state (n, u, theta) = {s:?} is not admissible"));
            }
        }
        match (self.tau, self.knudsen) {
            (Some(t), None) if t > 0.0 => Ok(Relaxation::Tau(t)),
            (None, Some(k)) if k > 0.0 => Ok(Relaxation::Knudsen(k)),
            (Some(_), Some(_)) => bad("give exactly one of tau and knudsen".into()),
            _ => bad("tau or knudsen must be given and positive".into()),
        }
    }
}

/// Cell averages on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub order: usize,
    pub x0: f64,
    pub dx: f64,
    pub t: f64,
    pub cells: Vec<Vec<f64>>,
}

impl Grid {
    pub fn new(order: usize, x_range: [f64; 2], cells: Vec<Vec<f64>>) -> Result<Self> {
        let nq = n_acute(order);
        if cells.iter().any(|c| c.len() != nq) {
            return Err(Error::contract(format!("every cell needs {nq} entries")));
        }
        let dx = (x_range[1] - x_range[0]) / cells.len() as f64;
        Ok(Grid { order, x0: x_range[0], dx, t: 0.0, cells })
    }

    /// Two equilibrium states split at the midpoint.
    pub fn riemann(cfg: &Config) -> Result<Self> {
        let l = equilibrium(cfg.order, cfg.left_state[0], cfg.left_state[1], cfg.left_state[2])?;
        let r = equilibrium(cfg.order, cfg.right_state[0], cfg.right_state[1], cfg.right_state[2])?;
        let mid = 0.5 * (cfg.x_range[0] + cfg.x_range[1]);
        let dx = (cfg.x_range[1] - cfg.x_range[0]) / cfg.cells as f64;
        let cells = (0..cfg.cells)
            .map(|i| if cfg.x_range[0] + (i as f64 + 0.5) * dx < mid { l.clone() } else { r.clone() })
            .collect();
        Grid::new(cfg.order, cfg.x_range, cells)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.dx
    }

    fn neighbours(&self, i: usize, bc: Boundary) -> (usize, usize) {
        let n = self.cells.len();
        match bc {
            Boundary::Outflow => (i.saturating_sub(1), (i + 1).min(n - 1)),
            Boundary::Periodic => ((i + n - 1) % n, (i + 1) % n),
        }
    }

    /// Σ_i dx (N⁰, T⁰⁰, T⁰³) over the grid.
    pub fn conserved_totals(&self) -> Result<[f64; 3]> {
        let mut tot = [0.0; 3];
        for c in &self.cells {
            let (d, _) = conserved(c)?;
            for k in 0..3 {
                tot[k] += d[k] * self.dx;
            }
        }
        Ok(tot)
    }
}

/// Largest characteristic speed over the grid.
pub fn max_speed(grid: &Grid) -> Result<f64> {
    let mut out: f64 = 0.0;
    for c in &grid.cells {
        let s = Reduced::new(grid.order, c, Precision::Double)?.speeds()?;
        out = out.max(s.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    }
    Ok(out)
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub max_speed: f64,
    /// Net outflow of (N, T⁰⁰, T⁰³) through the two ends during the step.
    pub boundary_outflow: [f64; 3],
}

/// Reduced matrices and max|λ| of every cell.
struct Prepared {
    red: Vec<Reduced>,
    speed: Vec<f64>,
    max_speed: f64,
}

fn prepare(grid: &Grid) -> Result<Prepared> {
    let red = grid
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Reduced::new(grid.order, c, Precision::Double)
                .map_err(|e| Error::inadmissible(format!("cell {i} at x = {}: {e}", grid.x(i))))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut speed = Vec::with_capacity(red.len());
    for (i, r) in red.iter().enumerate() {
        let s = r.speeds()?.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(s < 1.0) {
            return Err(Error::numerical(format!("cell {i}: characteristic speed {s} is not below 1")));
        }
        speed.push(s);
    }
    let max_speed = speed.iter().fold(0.0f64, |a, &v| a.max(v));
    Ok(Prepared { red, speed, max_speed })
}

/// One step of length dt: Lax–Friedrichs on the quasilinear form, then the
/// frozen-coefficient relaxation of the source. `cfl_max` bounds
/// dt · max|λ| / dx with speeds taken at the start of the step.
pub fn step(grid: &mut Grid, dt: f64, relax: Relaxation, bc: Boundary, cfl_max: f64) -> Result<StepInfo> {
    let prep = prepare(grid)?;
    advance(grid, &prep, dt, relax, bc, cfl_max)
}

fn advance(grid: &mut Grid, prep: &Prepared, dt: f64, relax: Relaxation, bc: Boundary, cfl_max: f64) -> Result<StepInfo> {
    let (red, speed) = (&prep.red, &prep.speed);
    let n = grid.cells.len();
    if dt * prep.max_speed > cfl_max * grid.dx * (1.0 + 1e-12) {
        return Err(Error::contract(format!(
            "time step {dt} violates CFL {cfl_max} (dx = {}, max speed {})",
            grid.dx, prep.max_speed
        )));
    }
    let lam = dt / grid.dx;
    let cons = grid.cells.iter().map(|c| conserved(c)).collect::<Result<Vec<_>>>()?;
    let flux = |a: usize, b: usize| -> [f64; 3] {
        let al = speed[a].max(speed[b]);
        std::array::from_fn(|k| 0.5 * (cons[a].1[k] + cons[b].1[k]) - 0.5 * al * (cons[b].0[k] - cons[a].0[k]))
    };
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        let (l, r) = grid.neighbours(i, bc);
        let (wl, wc, wr) = (&grid.cells[l], &grid.cells[i], &grid.cells[r]);
        let alpha = speed[l].max(speed[i]).max(speed[r]);
        let diff = DVector::from_iterator(wc.len(), (0..wc.len()).map(|j| wr[j] - wl[j]));
        let conv = red[i]
            .b0
            .clone()
            .lu()
            .solve(&(&red[i].b3 * diff))
            .ok_or_else(|| Error::numerical(format!("cell {i}: B0 singular")))?;
        let star: Vec<f64> = (0..wc.len())
            .map(|j| wc[j] - 0.5 * lam * conv[j] + 0.5 * lam * alpha * (wr[j] - 2.0 * wc[j] + wl[j]))
            .collect();
        let tau = relax.tau(red[i].state().n);
        let mut new = red[i].relax_step(&star, dt, tau)?;
        let (fl, fr) = (flux(l, i), flux(i, r));
        let target = std::array::from_fn(|k| cons[i].0[k] - lam * (fr[k] - fl[k]));
        match_densities(&mut new, target)
            .map_err(|e| Error::inadmissible(format!("cell {i} at x = {} after step: {e}", grid.x(i))))?;
        state_of(&embed(grid.order, &new)?)
            .map_err(|e| Error::inadmissible(format!("cell {i} at x = {} after step: {e}", grid.x(i))))?;
        next.push(new);
    }
    let boundary_outflow = match bc {
        Boundary::Periodic => [0.0; 3],
        Boundary::Outflow => {
            let (fl, fr) = (cons[0].1, cons[n - 1].1);
            std::array::from_fn(|k| dt * (fr[k] - fl[k]))
        }
    };
    grid.cells = next;
    grid.t += dt;
    Ok(StepInfo { max_speed: prep.max_speed, boundary_outflow })
}

/// Outcome of [`run`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub t: f64,
    pub initial_totals: [f64; 3],
    pub final_totals: [f64; 3],
    pub outflow: [f64; 3],
}

impl RunSummary {
    /// Relative change of each conserved total after crediting boundary outflow.
    pub fn drift(&self) -> [f64; 3] {
        std::array::from_fn(|k| {
            let scale = self.initial_totals[k].abs().max(self.initial_totals[0].abs());
            (self.final_totals[k] + self.outflow[k] - self.initial_totals[k]).abs() / scale
        })
    }
}

/// Evolve `grid` to `t_end`; `snapshot` sees the initial grid, every
/// `snapshot_every`-th step (if nonzero) and the final grid.
pub fn evolve(
    grid: &mut Grid,
    t_end: f64,
    cfl: f64,
    relax: Relaxation,
    bc: Boundary,
    snapshot_every: usize,
    mut snapshot: impl FnMut(&Grid) -> Result<()>,
) -> Result<RunSummary> {
    let initial_totals = grid.conserved_totals()?;
    let mut outflow = [0.0; 3];
    snapshot(grid)?;
    let mut steps = 0;
    while grid.t < t_end * (1.0 - 1e-14) {
        let prep = prepare(grid)?;
        let dt = (cfl * grid.dx / prep.max_speed.max(1e-300)).min(t_end - grid.t);
        let info = advance(grid, &prep, dt, relax, bc, cfl)?;
        for k in 0..3 {
            outflow[k] += info.boundary_outflow[k];
        }
        steps += 1;
        if snapshot_every > 0 && steps % snapshot_every == 0 && grid.t < t_end * (1.0 - 1e-14) {
            snapshot(grid)?;
        }
    }
    if steps > 0 {
        snapshot(grid)?;
    }
    Ok(RunSummary { steps, t: grid.t, initial_totals, final_totals: grid.conserved_totals()?, outflow })
}

/// Run a configuration from its two-state initial data.
pub fn run(cfg: &Config, snapshot: impl FnMut(&Grid) -> Result<()>) -> Result<(Grid, RunSummary)> {
    let relax = cfg.validate()?;
    let mut grid = Grid::riemann(cfg)?;
    let summary = evolve(&mut grid, cfg.t_end, cfg.cfl, relax, cfg.bc, cfg.snapshot_every, snapshot)?;
    Ok((grid, summary))
}

/// CSV of a grid: x, n, u, theta, Pi, then the remaining reduced entries.
pub fn snapshot_csv(grid: &Grid) -> String {
    let mut out = String::from("x");
    for j in 0..n_acute(grid.order) {
        match ["n", "u", "theta", "Pi"].get(j) {
            Some(name) => out.push_str(&format!(",{name}")),
            None => out.push_str(&format!(",w{j}")),
        }
    }
    out.push('\n');
    for (i, c) in grid.cells.iter().enumerate() {
        out.push_str(&format!("{:.16e}", grid.x(i)));
        for v in c {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}
