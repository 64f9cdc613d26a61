//! Generic quadrature: adaptive Gauss–Kronrod (G7/K15), Golub–Welsch rules from
//! Jacobi matrices, Gauss–Legendre.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// (integral, error estimate, integral of |f|) on [a, b].
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        k += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs(), abs * h.abs())
}

#[derive(PartialEq)]
struct Piece {
    lo: f64,
    hi: f64,
    val: f64,
    err: f64,
    abs: f64,
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

const MAX_PIECES: usize = 20_000;

/// Globally adaptive G7/K15 on a finite interval: the piece with the largest
/// error estimate is bisected until the summed estimate drops below `tol` (an
/// absolute tolerance) or below the rounding floor of the sum.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut heap = std::collections::BinaryHeap::new();
    let (val, err, abs) = gk15(&f, a, b);
    heap.push(Piece { lo: a, hi: b, val, err, abs });
    let (mut tot_err, mut tot_abs) = (err, abs);
    loop {
        let floor = 50.0 * f64::EPSILON * tot_abs;
        if tot_err <= tol.max(floor) {
            break;
        }
        if heap.len() >= MAX_PIECES {
            if tot_err > 1e3 * tol.max(floor) {
                return Err(Error::numerical(format!(
                    "adaptive quadrature on [{a}, {b}] stalled at error {tot_err:e}"
                )));
            }
            break;
        }
        let w = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (w.lo + w.hi);
        tot_err -= w.err;
        tot_abs -= w.abs;
        for (lo, hi) in [(w.lo, mid), (mid, w.hi)] {
            let (val, err, abs) = gk15(&f, lo, hi);
            tot_err += err;
            tot_abs += abs;
            heap.push(Piece { lo, hi, val, err, abs });
        }
    }
    // Kahan sum of the pieces
    let (mut total, mut comp) = (0.0f64, 0.0f64);
    for p in heap.into_vec() {
        let y = p.val - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    Ok(total)
}

/// Nodes and weights of the Gauss rule of a symmetric Jacobi matrix with
/// diagonal `b`, off-diagonal `a` and total mass `mu0`.
pub fn golub_welsch(b: &[f64], a: &[f64], mu0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = b.len();
    if n == 0 || a.len() + 1 < n {
        return Err(Error::contract("Jacobi matrix needs n diagonal and n-1 off-diagonal entries"));
    }
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = b[i];
        if i + 1 < n {
            j[(i, i + 1)] = a[i];
            j[(i + 1, i)] = a[i];
        }
    }
    let eig = SymmetricEigen::try_new(j, 1e-15, 10_000)
        .ok_or_else(|| Error::numerical("tridiagonal eigensolver did not converge"))?;
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(pairs.into_iter().unzip())
}

/// Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let b = vec![0.0; n];
    let a: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&b, &a, 2.0).expect("Legendre Jacobi matrix is well posed")
}
