//! Invariants of the command-line layer: table formatting and state files.

use qprivamp::entropy::SolverOptions;
use qprivamp::exponent::Exponent;
use qprivamp::parallel::Execution;
use qprivamp::states::{random_cq, seeded_rng, StateRng};
use qprivamp::verify::VerifyConfig;
use rand::Rng;

use crate::format::sig9;
use crate::state_file::{LoadedState, StateFile};
use crate::{curve_csv, LogBase, RunConfig};

pub struct CliCheck {
    pub property: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub worst_slack: f64,
}

impl CliCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn summary(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{status} [cli] {}: {} trials, worst slack {:.3e}",
            self.property, self.trials, self.worst_slack
        );
        if !self.passed() {
            s.push_str(&format!(", {} violations", self.failures));
        }
        s
    }
}

fn check(cfg: &VerifyConfig, id: u64, property: &'static str, f: impl Fn(&mut StateRng) -> f64) -> CliCheck {
    let slacks: Vec<f64> = (0..cfg.trials)
        .map(|t| f(&mut seeded_rng(cfg.seed ^ (id << 48) ^ t as u64)))
        .collect();
    CliCheck {
        property,
        trials: cfg.trials,
        failures: slacks.iter().filter(|s| !(**s >= 0.0)).count(),
        worst_slack: slacks.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

pub fn run(cfg: &VerifyConfig) -> Vec<CliCheck> {
    let bits = RunConfig {
        log_base: LogBase::Two,
        tol: None,
        max_iter: None,
        seed: None,
        sequential: false,
    };
    vec![
        check(cfg, 1, "table numbers use a dot separator and keep nine significant digits", |rng| {
            let x = (rng.random::<f64>() - 0.5) * 10f64.powi(rng.random_range(-12..20));
            let s = sig9(x);
            if !s.bytes().all(|b| b.is_ascii_digit() || b"-.e".contains(&b)) {
                return -1.0;
            }
            let y: f64 = s.parse().unwrap_or(f64::NAN);
            5e-9 - ((y - x) / x).abs()
        }),
        check(cfg, 2, "curve tables are deterministic for a fixed configuration", |rng| {
            let x = rng.random_range(2..=3);
            let st = random_cq(rng, x, 2);
            let render = |exec| {
                let c = Exponent::new(&st, SolverOptions::default()).curve(0.0, 1.5, 9, exec).unwrap();
                curve_csv(&c, &bits)
            };
            let a = render(Execution::Sequential);
            if a == render(Execution::Parallel) && a == render(Execution::Sequential) && !a.contains('\r') {
                0.0
            } else {
                -1.0
            }
        }),
        check(cfg, 3, "state files round-trip save, load, save", |rng| {
            let (x, e) = (rng.random_range(1..=4), rng.random_range(1..=3));
            let file = StateFile::from_state(&LoadedState::Cq(random_cq(rng, x, e)));
            let text = file.to_json();
            match StateFile::parse(&text).and_then(|f| f.to_state()) {
                Ok(s) if StateFile::from_state(&s).to_json() == text => 0.0,
                _ => -1.0,
            }
        }),
    ]
}
