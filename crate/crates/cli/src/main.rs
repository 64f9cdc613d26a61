use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use rmoment::analysis::{certify_hyperbolic, k_grid, stability_scan};
use rmoment::frame_kinematics::{recover_state, FluidState, MomentPair};
use rmoment::moment_assembly::{assemble, state_of};
use rmoment::orthopoly::FamilySet;
use rmoment::quasi1d::{self, snapshot_csv, Config};

mod checks;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] rmoment::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("invalid JSON input: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("{0} of {1} checks failed")]
    ChecksFailed(usize, usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use rmoment::Error as E;
        match self {
            CliError::Core(E::Domain(_) | E::Contract(_) | E::Config(_)) | CliError::Usage(_) | CliError::Json(_) => 2,
            CliError::Core(E::Inadmissible(_)) => 3,
            CliError::Core(E::Numerical(_) | E::IllConditioned { .. } | E::Overflow(_)) => 4,
            CliError::Io(_) | CliError::Csv(_) | CliError::ChecksFailed(..) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Moment closure toolkit for the relativistic Boltzmann equation.
#[derive(Parser, Debug)]
#[command(name = "rmoment", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recurrence and cross coefficients of one polynomial family (CSV).
    Coeffs {
        #[arg(long)]
        ell: usize,
        #[arg(long, allow_negative_numbers = true)]
        zeta: f64,
        /// Highest degree K.
        #[arg(long, short = 'k')]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite and print a pass/fail table (CSV).
    Check {
        #[arg(long = "M", alias = "order")]
        order: usize,
        /// One or more ζ values, comma separated or repeated.
        #[arg(long, value_delimiter = ',', required = true)]
        zeta: Vec<f64>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble the system matrices at one W (JSON).
    Assemble {
        #[command(flatten)]
        w: WArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Characteristic speeds along a direction (CSV: ñ, λ_1..λ_N).
    Spectrum {
        #[command(flatten)]
        w: WArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        nhat: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dispersion relation at an equilibrium (CSV: k, Re ω, Im ω).
    Stability {
        #[arg(long = "M", alias = "order")]
        order: usize,
        /// n,u1,u2,u3,theta
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        state: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long, default_value_t = 1e-2)]
        kmin: f64,
        #[arg(long, default_value_t = 1e2)]
        kmax: f64,
        #[arg(long, default_value_t = 40)]
        count: usize,
        /// Wave-vector direction x,y,z; repeat for several (default: x, z and the diagonal).
        #[arg(long = "dir", value_delimiter = ',', allow_negative_numbers = true)]
        dirs: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover (n, u, θ, ε, Π) from N^α and T^{αβ} given as JSON {"N": [..], "T": [[..]]}.
    Recover {
        /// Input file, or - for stdin.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the quasi-1D solver from a JSON configuration and write snapshot CSVs.
    Solve1d {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args, Debug)]
struct WArgs {
    #[arg(long = "M", alias = "order")]
    order: usize,
    /// n,u1,u2,u3,theta
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    state: Vec<f64>,
    /// Entries of W after the first five (Π, f̃, ...), zero-padded.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    extra: Vec<f64>,
}

impl WArgs {
    fn w(&self) -> Result<Vec<f64>> {
        if !(1..=10).contains(&self.order) {
            return Err(CliError::Usage(format!("M must be in 1..=10, got {}", self.order)));
        }
        let len = rmoment::basis::n_moments(self.order);
        if self.extra.len() > len - 5 {
            return Err(CliError::Usage(format!("--extra has {} entries, W holds only {} after the first five", self.extra.len(), len - 5)));
        }
        need_len("--state", &self.state, 5)?;
        let mut w = vec![0.0; len];
        w[..5].copy_from_slice(&self.state);
        w[5..5 + self.extra.len()].copy_from_slice(&self.extra);
        state_of(&w)?;
        Ok(w)
    }
}

fn need_len(flag: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{flag} takes {n} comma-separated values, got {}", v.len())))
    }
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header)?;
    for r in rows {
        wtr.write_record(r)?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn coeffs(ell: usize, zeta: f64, k: usize) -> Result<String> {
    let set = FamilySet::new(zeta, ell, k)?;
    let f = &set.fams[ell];
    let names = ["k", "a", "b", "c", "p", "q", "r", "ptilde", "qtilde", "rtilde"];
    let cell = |v: Option<&f64>| v.map_or(String::new(), |x| sci(*x));
    let rows = (0..=k)
        .map(|i| {
            let c = &set.cross[ell];
            let mut r = vec![i.to_string(), cell(f.a.get(i)), cell(f.b.get(i)), cell(f.c.get(i))];
            for v in [&c.p, &c.q, &c.r, &c.ptilde, &c.qtilde, &c.rtilde] {
                r.push(cell(v.get(i)));
            }
            r
        })
        .collect::<Vec<_>>();
    csv_text(&names.map(String::from), &rows)
}

#[derive(Serialize)]
struct AssembleOut {
    order: usize,
    w: Vec<f64>,
    a: Vec<Vec<Vec<f64>>>,
    m: Vec<Vec<Vec<f64>>>,
    b: Vec<Vec<Vec<f64>>>,
    d: Vec<Vec<f64>>,
    dw: Vec<Vec<f64>>,
    det_d: f64,
}

fn assemble_json(wa: &WArgs) -> Result<String> {
    let w = wa.w()?;
    let sys = assemble(wa.order, &w)?;
    let out = AssembleOut {
        order: wa.order,
        det_d: sys.det_d(),
        a: sys.a.iter().map(rows_of).collect(),
        m: sys.m.iter().map(rows_of).collect(),
        b: sys.b.iter().map(rows_of).collect(),
        d: rows_of(&sys.d),
        dw: rows_of(&sys.dw),
        w,
    };
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

fn spectrum(wa: &WArgs, nhat: &[f64]) -> Result<String> {
    need_len("--nhat", nhat, 3)?;
    let w = wa.w()?;
    let sys = assemble(wa.order, &w)?;
    let rep = certify_hyperbolic(&sys, [nhat[0], nhat[1], nhat[2]])?;
    let mut header: Vec<String> = ["nhat1", "nhat2", "nhat3"].map(String::from).to_vec();
    header.extend((1..=rep.eigenvalues.len()).map(|i| format!("lambda{i}")));
    let row: Vec<String> = nhat.iter().chain(&rep.eigenvalues).map(|v| sci(*v)).collect();
    csv_text(&header, &[row])
}

#[allow(clippy::too_many_arguments)]
fn stability(order: usize, state: &[f64], tau: f64, kmin: f64, kmax: f64, count: usize, dirs: &[f64]) -> Result<(String, f64)> {
    need_len("--state", state, 5)?;
    if dirs.len() % 3 != 0 {
        return Err(CliError::Usage("--dir takes three components per direction".into()));
    }
    if !(kmin > 0.0 && kmax >= kmin && count > 0) {
        return Err(CliError::Usage("need 0 < kmin <= kmax and count > 0".into()));
    }
    let dirs: Vec<[f64; 3]> = if dirs.is_empty() {
        vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]]
    } else {
        dirs.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
    };
    let s = FluidState::new(state[0], [state[1], state[2], state[3]], state[4]).map_err(|e| rmoment::Error::Inadmissible(e.to_string()))?;
    let mut ks = vec![[0.0; 3]];
    ks.extend(k_grid(kmin, kmax, count, &dirs));
    let scan = stability_scan(order, &s, &ks, tau)?;
    let header = ["k1", "k2", "k3", "re_omega", "im_omega"].map(String::from);
    let mut rows = Vec::new();
    for (k, om) in scan.ks.iter().zip(&scan.omegas) {
        for w in om {
            rows.push(vec![sci(k[0]), sci(k[1]), sci(k[2]), sci(w.re), sci(w.im)]);
        }
    }
    Ok((csv_text(&header, &rows)?, scan.min_im))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecoverIn {
    #[serde(rename = "N")]
    n: [f64; 4],
    #[serde(rename = "T")]
    t: [[f64; 4]; 4],
}

#[derive(Serialize)]
struct RecoverOut {
    n: f64,
    u: [f64; 3],
    theta: f64,
    epsilon: f64,
    pi: f64,
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(fs::read_to_string(path)?)
    }
}

fn recover(path: &Path) -> Result<String> {
    let inp: RecoverIn = serde_json::from_str(&read_input(path)?)?;
    let r = recover_state(&MomentPair { n: inp.n, t: inp.t })?;
    let out = RecoverOut { n: r.state.n, u: r.state.u, theta: r.state.theta, epsilon: r.epsilon, pi: r.pi };
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

#[derive(Serialize)]
struct SolveSummary {
    steps: usize,
    t: f64,
    snapshots: usize,
    initial_totals: [f64; 3],
    final_totals: [f64; 3],
    outflow: [f64; 3],
    drift: [f64; 3],
}

fn solve1d(config: &Path, out_dir: &Path) -> Result<String> {
    let cfg: Config = serde_json::from_str(&read_input(config)?)?;
    fs::create_dir_all(out_dir)?;
    let mut count = 0usize;
    let mut io_err = None;
    let (_, sum) = quasi1d::run(&cfg, |g| {
        let path = out_dir.join(format!("snapshot_{count:05}.csv"));
        if let Err(e) = fs::write(&path, snapshot_csv(g)) {
            io_err = Some(e);
            return Err(rmoment::Error::Contract(format!("cannot write {}", path.display())));
        }
        count += 1;
        Ok(())
    })
    .map_err(|e| io_err.take().map_or(CliError::Core(e), CliError::Io))?;
    let summary = SolveSummary {
        steps: sum.steps,
        t: sum.t,
        snapshots: count,
        initial_totals: sum.initial_totals,
        final_totals: sum.final_totals,
        outflow: sum.outflow,
        drift: sum.drift(),
    };
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    fs::write(out_dir.join("summary.json"), &text)?;
    Ok(text)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Coeffs { ell, zeta, k, out } => emit(&out, &coeffs(ell, zeta, k)?),
        Command::Check { order, zeta, seed, out } => {
            let results = checks::run_suite(order, &zeta, seed)?;
            let header = ["zeta", "check", "value", "criterion", "result"].map(String::from);
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|c| vec![sci(c.zeta), c.name.to_string(), sci(c.value), c.bound.describe(), if c.passed() { "PASS" } else { "FAIL" }.into()])
                .collect();
            emit(&out, &csv_text(&header, &rows)?)?;
            let failed = results.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(CliError::ChecksFailed(failed, results.len()));
            }
            Ok(())
        }
        Command::Assemble { w, out } => emit(&out, &assemble_json(&w)?),
        Command::Spectrum { w, nhat, out } => emit(&out, &spectrum(&w, &nhat)?),
        Command::Stability { order, state, tau, kmin, kmax, count, dirs, out } => {
            let (text, min_im) = stability(order, &state, tau, kmin, kmax, count, &dirs)?;
            emit(&out, &text)?;
            eprintln!("min Im(omega) = {min_im:e}");
            Ok(())
        }
        Command::Recover { input, out } => emit(&out, &recover(&input)?),
        Command::Solve1d { config, out_dir } => {
            let text = solve1d(&config, &out_dir)?;
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
