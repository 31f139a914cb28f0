//! Command-line front end: entropies, exponent curves, finite-n simulation
//! and the invariant suites.

pub mod format;
pub mod state_file;
mod suite;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qprivamp::entropy::{conditional_entropy, EntropyKind, EntropyQuery, SolverOptions};
use qprivamp::exponent::{Exponent, ExponentCurve};
use qprivamp::pa::{best_hash_exhaustive, finite_n_table, oneshot_converse_check, HashFunction, ALPHA_GRID};
use qprivamp::parallel::Execution;
use qprivamp::states::CQState;
use qprivamp::verify::{run_suite, Suite, VerifyConfig};
use qprivamp::{from_base, to_base};

use format::{csv_row, sig9};
use state_file::{load_state, LoadedState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "qprivamp", version, about = "Conditional Rényi entropies and privacy amplification exponents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Conditional entropy of a state.
    Entropy(EntropyArgs),
    /// E_pa on a rate grid, as CSV.
    Curve(CurveArgs),
    /// The rate above which E_pa is linear.
    CriticalRate(StateArgs),
    /// Margins of the one-shot converse for one hash.
    Oneshot(OneshotArgs),
    /// Exhaustive best-hash search for n = 1..nmax.
    Simulate(SimulateArgs),
    /// Randomized invariant suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum LogBase {
    Two,
    E,
}

impl LogBase {
    fn value(self) -> f64 {
        match self {
            LogBase::Two => 2.0,
            LogBase::E => std::f64::consts::E,
        }
    }

    fn unit(self) -> &'static str {
        match self {
            LogBase::Two => "bits",
            LogBase::E => "nats",
        }
    }
}

fn parse_log_base(s: &str) -> Result<LogBase, String> {
    match s {
        "2" => Ok(LogBase::Two),
        "e" => Ok(LogBase::E),
        _ => Err(format!("log base must be 2 or e, got '{s}'")),
    }
}

/// Options shared by every subcommand.
#[derive(Args, Clone, Debug)]
struct RunConfig {
    /// Logarithm base of all printed and parsed entropies and rates.
    #[arg(long, default_value = "2", value_parser = parse_log_base)]
    log_base: LogBase,
    /// Relative objective tolerance of the optimizers.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration budget of each optimizer.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run data-parallel loops on one thread.
    #[arg(long)]
    sequential: bool,
}

impl RunConfig {
    fn solver(&self) -> Result<SolverOptions, Failure> {
        let mut o = SolverOptions::default();
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Failure::invalid(format!("--tol must lie in (0, 1), got {t}")));
            }
            o.tol = t;
        }
        if let Some(m) = self.max_iter {
            if m == 0 {
                return Err(Failure::invalid("--max-iter must be positive"));
            }
            o.max_iter = m;
        }
        if let Some(s) = self.seed {
            o.seed = s;
        }
        Ok(o)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }

    fn show(&self, nats: f64) -> String {
        sig9(to_base(nats, self.log_base.value()))
    }

    fn nats(&self, v: f64) -> f64 {
        from_base(v, self.log_base.value())
    }
}

#[derive(Args, Debug)]
struct StateArgs {
    #[arg(long)]
    state: PathBuf,
    #[command(flatten)]
    cfg: RunConfig,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[arg(long)]
    state: PathBuf,
    /// vn, sandwiched_down, sandwiched_up, petz_down, petz_up, club or le.
    #[arg(long, default_value = "club")]
    kind: String,
    #[arg(long)]
    alpha: Option<f64>,
    /// `auto` selects (1−2α)/(1−α).
    #[arg(long, default_value = "auto")]
    lambda: String,
    #[command(flatten)]
    cfg: RunConfig,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    rmin: f64,
    #[arg(long, default_value_t = 2.0)]
    rmax: f64,
    #[arg(long, default_value_t = 201)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: RunConfig,
}

#[derive(Args, Debug)]
struct OneshotArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    zdim: usize,
    /// Table index as a base-|Z| counter; defaults to the best hash.
    #[arg(long)]
    hash: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: RunConfig,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 3)]
    nmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: RunConfig,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// `all`, `cli` or a module suite such as `conditional-entropy`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    cfg: RunConfig,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<qprivamp::Error> for Failure {
    fn from(e: qprivamp::Error) -> Self {
        Failure::invalid(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let out = match cli.command {
        Command::Entropy(a) => entropy(a),
        Command::Curve(a) => curve(a),
        Command::CriticalRate(a) => critical_rate(a),
        Command::Oneshot(a) => oneshot(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
    };
    match out {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path) -> Result<LoadedState, Failure> {
    load_state(path).map_err(Failure::invalid)
}

fn load_cq(path: &Path) -> Result<CQState, Failure> {
    match load(path)? {
        LoadedState::Cq(c) => Ok(c),
        LoadedState::Density(_) => Err(Failure::invalid(format!(
            "{}: this subcommand needs a cq state file",
            path.display()
        ))),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::invalid(format!("{}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| so.flush())
                .map_err(|e| Failure::invalid(format!("stdout: {e}")))
        }
    }
}

fn not_converged(what: &str) -> i32 {
    eprintln!("warning: {what} did not converge; the printed value is the best found");
    EXIT_NOT_CONVERGED
}

fn entropy(a: EntropyArgs) -> Outcome {
    let opts = a.cfg.solver()?;
    let kind: EntropyKind = a.kind.parse()?;
    let alpha = match (kind, a.alpha) {
        (EntropyKind::Vn, _) => a.alpha.unwrap_or(1.0),
        (_, Some(v)) => v,
        (_, None) => return Err(Failure::invalid(format!("--alpha is required for kind {}", kind.name()))),
    };
    let lambda = match a.lambda.as_str() {
        "auto" => None,
        s => Some(
            s.parse::<f64>()
                .map_err(|_| Failure::invalid(format!("--lambda must be 'auto' or a number, got '{s}'")))?,
        ),
    };
    if lambda.is_some() && !matches!(kind, EntropyKind::Club | EntropyKind::Le) {
        return Err(Failure::invalid(format!("--lambda does not apply to kind {}", kind.name())));
    }
    let mut q = EntropyQuery::new(kind, alpha);
    q.lambda = lambda;
    let rep = match load(&a.state)? {
        LoadedState::Cq(c) => conditional_entropy(&c, &q, &opts)?,
        LoadedState::Density(d) => {
            if d.dims().len() != 2 {
                return Err(Failure::invalid("density state files need dims [A, E] for a conditional entropy"));
            }
            conditional_entropy(&d, &q, &opts)?
        }
    };
    emit(None, &format!("{} {}\n", a.cfg.show(rep.value), a.cfg.log_base.unit()))?;
    Ok(if rep.converged { EXIT_OK } else { not_converged("the optimizer") })
}

/// `R,E_pa,alpha_star` rows in the given base.
fn curve_csv(c: &ExponentCurve, cfg: &RunConfig) -> String {
    let mut s = csv_row(&["R".into(), "E_pa".into(), "alpha_star".into()]);
    for i in 0..c.rates.len() {
        s.push_str(&csv_row(&[cfg.show(c.rates[i]), cfg.show(c.values[i]), sig9(c.alpha_star[i])]));
    }
    s
}

fn curve(a: CurveArgs) -> Outcome {
    let cq = load_cq(&a.state)?;
    let engine = Exponent::new(&cq, a.cfg.solver()?);
    let c = engine.curve(a.cfg.nats(a.rmin), a.cfg.nats(a.rmax), a.steps, a.cfg.exec())?;
    emit(a.out.as_deref(), &curve_csv(&c, &a.cfg))?;
    eprintln!(
        "H(X|E) = {}, H_1/2 = {}, R_c = {} {}",
        a.cfg.show(c.h_vn),
        a.cfg.show(c.h_half),
        a.cfg.show(c.r_critical),
        a.cfg.log_base.unit()
    );
    Ok(if c.converged { EXIT_OK } else { not_converged("an entropy evaluation") })
}

fn critical_rate(a: StateArgs) -> Outcome {
    let cq = load_cq(&a.state)?;
    let engine = Exponent::new(&cq, a.cfg.solver()?);
    let rc = engine.critical_rate()?;
    emit(None, &format!("{} {}\n", a.cfg.show(rc), a.cfg.log_base.unit()))?;
    Ok(if engine.converged() { EXIT_OK } else { not_converged("an entropy evaluation") })
}

fn oneshot(a: OneshotArgs) -> Outcome {
    let cq = load_cq(&a.state)?;
    let opts = a.cfg.solver()?;
    let h = match a.hash {
        Some(i) => HashFunction::from_index(a.n, cq.x_dim(), a.zdim, i)?,
        None => best_hash_exhaustive(&cq, a.n, a.zdim, &opts, a.cfg.exec())?.best_hash,
    };
    let margins = oneshot_converse_check(&cq, a.n, &h, &ALPHA_GRID, &opts)?;
    let mut s = csv_row(
        &["alpha", "lhs", "rhs_hashed", "rhs_additive", "margin_hashed", "margin_additive"].map(String::from),
    );
    for m in &margins {
        s.push_str(&csv_row(&[
            sig9(m.alpha),
            a.cfg.show(m.lhs),
            a.cfg.show(m.rhs_hashed),
            a.cfg.show(m.rhs_additive),
            a.cfg.show(m.margin_hashed),
            a.cfg.show(m.margin_additive),
        ]));
    }
    emit(a.out.as_deref(), &s)?;
    eprintln!("hash index {} table {:?}", h.index(), h.table());
    let worst = margins
        .iter()
        .map(|m| m.margin_hashed.min(m.margin_additive))
        .fold(f64::INFINITY, f64::min);
    if worst < -1e-9 {
        eprintln!("violation: one-shot converse margin {worst:.3e} is negative");
        return Ok(EXIT_VIOLATION);
    }
    Ok(EXIT_OK)
}

fn simulate(a: SimulateArgs) -> Outcome {
    let cq = load_cq(&a.state)?;
    let opts = a.cfg.solver()?;
    let rows = finite_n_table(&cq, a.cfg.nats(a.rate), a.nmax, &opts, a.cfg.exec())?;
    let mut s = csv_row(
        &["n", "z_dim", "rate_nominal", "best_fidelity", "exponent_estimate", "oneshot_bound", "E_pa", "hash_index"]
            .map(String::from),
    );
    let mut ok = true;
    for r in &rows {
        let rep = &r.report;
        ok &= rep.pass;
        s.push_str(&csv_row(&[
            rep.n.to_string(),
            rep.z_dim.to_string(),
            a.cfg.show(rep.rate_nominal),
            sig9(rep.best_fidelity),
            a.cfg.show(rep.exponent_estimate),
            a.cfg.show(rep.oneshot_bound),
            a.cfg.show(r.epa),
            rep.best_hash.index().to_string(),
        ]));
    }
    emit(a.out.as_deref(), &s)?;
    if !ok {
        eprintln!("violation: a finite-n exponent fell below the one-shot converse bound");
        return Ok(EXIT_VIOLATION);
    }
    Ok(EXIT_OK)
}

fn verify(a: VerifyArgs) -> Outcome {
    if a.trials == 0 {
        return Err(Failure::invalid("--trials must be positive"));
    }
    let cfg = VerifyConfig {
        seed: a.cfg.seed.unwrap_or(42),
        trials: a.trials,
        opts: a.cfg.solver()?,
        exec: a.cfg.exec(),
    };
    let (core, with_cli): (Vec<Suite>, bool) = match a.suite.as_str() {
        "all" => (Suite::ALL.to_vec(), true),
        "cli" => (Vec::new(), true),
        s => (vec![s.parse::<Suite>()?], false),
    };
    let mut lines = Vec::new();
    let mut failed = 0;
    for s in core {
        for c in run_suite(s, &cfg) {
            failed += usize::from(!c.passed());
            lines.push(c.summary());
        }
    }
    if with_cli {
        for c in suite::run(&cfg) {
            failed += usize::from(!c.passed());
            lines.push(c.summary());
        }
    }
    let total = lines.len();
    lines.push(format!("{} of {total} checks passed", total - failed));
    emit(None, &(lines.join("\n") + "\n"))?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VIOLATION })
}
