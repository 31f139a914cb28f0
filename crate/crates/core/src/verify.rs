//! Randomized invariant suites, one per module.
//!
//! Every check draws `trials` seeded instances and reduces each to a slack:
//! nonnegative when the property holds within its tolerance. A check passes
//! iff its worst slack is nonnegative and no trial errored.

use rand::Rng;

use crate::divergence::{fidelity, log_euclidean, log_euclidean_variational, purified_distance, renyi_divergence, DivergenceParams};
use crate::entropy::{
    club_objective_regularized, club_sandwiched, coarse_grain_entropy_check, duality_club, le_cond_entropy,
    vn_cond_entropy, SolverOptions,
};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::linalg::{
    eigh_cluster, matrix_function, max_abs, partial_trace, pinch, schatten_norm, support_projector, CMatrix, FnMode,
    Hermitian, MatrixFn, Subsystem, CLUSTER_TOL, C64,
};
use crate::pa::{apply_hash, best_hash_exhaustive, fidelity_to_ideal, oneshot_converse_check, HashFunction, ALPHA_GRID};
use crate::parallel::Execution;
use crate::states::{
    embed, marginal_e, random_classical, random_cq, random_density, random_hermitian, random_probs, seeded_rng,
    CQState, DensityOperator, StateRng,
};
use crate::symmetric::{dominance_check, twirl, universal_state};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    OperatorCore,
    QuantumStates,
    SymmetricGroup,
    Divergences,
    ConditionalEntropy,
    Exponent,
    PaSimulator,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::OperatorCore,
        Suite::QuantumStates,
        Suite::SymmetricGroup,
        Suite::Divergences,
        Suite::ConditionalEntropy,
        Suite::Exponent,
        Suite::PaSimulator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::OperatorCore => "operator-core",
            Suite::QuantumStates => "quantum-states",
            Suite::SymmetricGroup => "symmetric-group",
            Suite::Divergences => "divergences",
            Suite::ConditionalEntropy => "conditional-entropy",
            Suite::Exponent => "exponent",
            Suite::PaSimulator => "pa-simulator",
        }
    }

    fn index(self) -> u64 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u64
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    pub trials: usize,
    pub opts: SolverOptions,
    pub exec: Execution,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 42,
            trials: 100,
            opts: SolverOptions::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub suite: Suite,
    /// The property, named after the result it comes from.
    pub property: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Smallest slack over the trials; `NaN` when every trial errored.
    pub worst_slack: f64,
    pub worst_trial: Option<usize>,
    pub first_error: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    /// One line: `PASS`/`FAIL`, suite, property and the worst slack.
    pub fn summary(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{status} [{}] {}: {} trials, worst slack {:.3e}",
            self.suite.name(),
            self.property,
            self.trials,
            self.worst_slack
        );
        if !self.passed() {
            line.push_str(&format!(", {} violations", self.failures));
            if let Some(t) = self.worst_trial {
                line.push_str(&format!(", worst at trial {t}"));
            }
            if let Some(e) = &self.first_error {
                line.push_str(&format!(", error: {e}"));
            }
        }
        line
    }
}

/// splitmix64 of the combined key, so checks and trials get independent streams.
fn trial_seed(seed: u64, suite: Suite, check: u64, trial: usize) -> u64 {
    let mut z = seed
        ^ suite.index().wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ check.wrapping_mul(0xbf58_476d_1ce4_e5b9)
        ^ (trial as u64).wrapping_mul(0x94d0_49bb_1331_11eb);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct Runner<'a> {
    cfg: &'a VerifyConfig,
    suite: Suite,
    out: Vec<CheckOutcome>,
}

impl Runner<'_> {
    fn check<F>(&mut self, property: &'static str, f: F)
    where
        F: Fn(&mut StateRng) -> Result<f64> + Sync + Send,
    {
        let id = self.out.len() as u64;
        let (cfg, suite) = (self.cfg, self.suite);
        let slacks = cfg
            .exec
            .map_range(cfg.trials, |t| f(&mut seeded_rng(trial_seed(cfg.seed, suite, id, t))));
        let mut worst = f64::NAN;
        let mut worst_trial = None;
        let mut failures = 0;
        let mut first_error = None;
        for (t, s) in slacks.into_iter().enumerate() {
            match s {
                Ok(v) => {
                    if !(v >= 0.0) {
                        failures += 1;
                    }
                    if worst.is_nan() || v < worst || v.is_nan() {
                        worst = v;
                        worst_trial = Some(t);
                    }
                }
                Err(e) => {
                    failures += 1;
                    first_error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        self.out.push(CheckOutcome {
            suite,
            property,
            trials: cfg.trials,
            failures,
            worst_slack: worst,
            worst_trial,
            first_error,
        });
    }
}

/// Runs one suite.
pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Vec<CheckOutcome> {
    let mut r = Runner {
        cfg,
        suite,
        out: Vec::new(),
    };
    match suite {
        Suite::OperatorCore => operator_core(&mut r),
        Suite::QuantumStates => quantum_states(&mut r),
        Suite::SymmetricGroup => symmetric_group(&mut r),
        Suite::Divergences => divergences(&mut r),
        Suite::ConditionalEntropy => conditional_entropy(&mut r),
        Suite::Exponent => exponent(&mut r),
        Suite::PaSimulator => pa_simulator(&mut r),
    }
    r.out
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<CheckOutcome> {
    Suite::ALL.iter().flat_map(|&s| run_suite(s, cfg)).collect()
}

fn min_eig(m: &CMatrix) -> f64 {
    crate::linalg::eigh_raw(m).0[0]
}

/// A reference operator with a degenerate spectrum half of the time.
fn reference_operator(rng: &mut StateRng) -> Hermitian {
    if rng.random::<bool>() {
        let a = random_density(rng, 2);
        a.op().tensor(a.op())
    } else {
        let d = rng.random_range(2..=4);
        random_density(rng, d).op().clone()
    }
}

fn random_pure(rng: &mut StateRng, d: usize) -> DensityOperator {
    let v = random_density(rng, d);
    let spec = v.op().eigh();
    let psi: Vec<C64> = spec.eigenvectors.column(d - 1).iter().copied().collect();
    DensityOperator::pure(&psi).expect("unit eigenvector")
}

/// CQ state whose conditional states are sometimes rank one.
fn random_cq_mixed_rank(rng: &mut StateRng, x_dim: usize, d_e: usize) -> CQState {
    let probs = random_probs(rng, x_dim);
    let cond = (0..x_dim)
        .map(|_| {
            if rng.random::<bool>() {
                random_pure(rng, d_e)
            } else {
                random_density(rng, d_e)
            }
        })
        .collect();
    CQState::new(probs, cond).expect("valid CQ state")
}

fn random_dims(rng: &mut StateRng) -> (usize, usize) {
    (rng.random_range(2..=3), rng.random_range(2..=3))
}

fn operator_core(r: &mut Runner) {
    r.check("pinching inequality", |rng| {
        let omega = reference_operator(rng);
        let rho = random_density(rng, omega.dim());
        let (_, proj) = eigh_cluster(&omega, CLUSTER_TOL);
        let pinched = pinch(rho.op(), &proj)?;
        let gap = pinched.matrix() * C64::new(proj.len() as f64, 0.0) - rho.matrix();
        Ok(min_eig(&gap) + 1e-10)
    });
    r.check("pinching is a projection", |rng| {
        let omega = reference_operator(rng);
        let a = random_hermitian(rng, omega.dim());
        let (_, proj) = eigh_cluster(&omega, CLUSTER_TOL);
        let once = pinch(&a, &proj)?;
        let twice = pinch(&once, &proj)?;
        Ok(1e-12 - once.max_abs_diff(&twice))
    });
    r.check("support-restricted functions commute with the support projector", |rng| {
        let d = rng.random_range(3..=4);
        let w = rng.random_range(0.1..0.9);
        let (u, v) = (random_pure(rng, d), random_pure(rng, d));
        let a = Hermitian::new(u.matrix() * C64::new(w, 0.0) + v.matrix() * C64::new(1.0 - w, 0.0))?;
        let p = support_projector(&a)?;
        let f = matrix_function(&a, MatrixFn::Power(-0.5), FnMode::OnSupport)?;
        let comm = max_abs(&(p.matrix() * f.matrix() - f.matrix() * p.matrix()));
        let compressed = max_abs(&(p.matrix() * f.matrix() * p.matrix() - f.matrix()));
        let scale = 1e-10 * max_abs(f.matrix()).max(1.0);
        Ok(scale - comm.max(compressed))
    });
    r.check("Schatten norms are nonincreasing in p", |rng| {
        let d = rng.random_range(2..=4);
        let a = CMatrix::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let ps = [1.0, 1.3, 2.0, 3.5, 8.0];
        let norms: Vec<f64> = ps.iter().map(|&p| schatten_norm(&a, p)).collect::<Result<_>>()?;
        Ok(norms
            .windows(2)
            .map(|w| w[0] - w[1] + 1e-12 * w[0])
            .fold(f64::INFINITY, f64::min))
    });
}

fn quantum_states(r: &mut Runner) {
    r.check("embedding preserves trace, positivity and the E marginal", |rng| {
        let (x, e) = random_dims(rng);
        let cq = random_cq_mixed_rank(rng, x, e);
        let rho = embed(&cq);
        let tr = (rho.op().trace() - 1.0).abs();
        let pos = -rho.op().min_eigenvalue();
        let reduced = partial_trace(rho.op(), x, e, Subsystem::A)?;
        let marg = reduced.max_abs_diff(marginal_e(&cq).op());
        Ok(1e-10 - tr.max(pos).max(marg))
    });
    r.check("support lemma: supp ρ_XE lies in supp(I_X ⊗ ρ_E)", |rng| {
        let (x, e) = random_dims(rng);
        let cq = random_cq_mixed_rank(rng, x, e.max(3));
        let rho = embed(&cq);
        let id_marg = Hermitian::identity(x).tensor(marginal_e(&cq).op());
        let p = support_projector(&id_marg)?;
        let outside = rho.matrix() - p.matrix() * rho.matrix() * p.matrix();
        Ok(1e-10 - max_abs(&outside))
    });
}

fn symmetric_group(r: &mut Runner) {
    r.check("universal state commutes with permutation-invariant operators", |rng| {
        let n = rng.random_range(2..=3);
        let u = universal_state(n, 2)?;
        let t = twirl(&random_hermitian(rng, u.omega.dim()), n, 2)?;
        Ok(1e-10 * max_abs(t.matrix()).max(1.0) - u.omega.op().commutator_norm(&t))
    });
    r.check("universal state dominates permutation-invariant states", |rng| {
        let n = rng.random_range(2..=3);
        let u = universal_state(n, 2)?;
        let tau = twirl(random_density(rng, u.omega.dim()).op(), n, 2)?;
        let tau = DensityOperator::new(tau, vec![2; n])?;
        Ok(dominance_check(&tau, &u)? + 1e-10)
    });
}

fn divergences(r: &mut Runner) {
    r.check("fidelity bounds on the purified distance", |rng| {
        let d = rng.random_range(2..=4);
        let (a, b) = (random_density(rng, d), random_density(rng, d));
        let f = fidelity(&a, &b)?;
        let x = 1.0 - purified_distance(&a, &b)?;
        Ok((x - f / 2.0).min(f - x) + 1e-12)
    });
    r.check("data processing under partial trace", |rng| {
        let rho = random_density(rng, 4).with_dims(vec![2, 2])?;
        let sigma = random_density(rng, 4).with_dims(vec![2, 2])?;
        let params = if rng.random::<bool>() {
            DivergenceParams::sandwiched(rng.random_range(0.5..0.99))
        } else {
            DivergenceParams::petz(rng.random_range(0.05..0.99))
        };
        let part = |s: &DensityOperator| DensityOperator::from_hermitian(partial_trace(s.op(), 2, 2, Subsystem::B)?);
        let full = renyi_divergence(&rho, &sigma, params)?.to_f64();
        let reduced = renyi_divergence(&part(&rho)?, &part(&sigma)?, params)?.to_f64();
        Ok(full - reduced + 1e-9)
    });
    r.check("alpha-z coincides with sandwiched at z = alpha and Petz at z = 1", |rng| {
        let d = rng.random_range(2..=3);
        let (rho, sigma) = (random_density(rng, d), random_density(rng, d));
        let a = rng.random_range(0.3..0.95);
        let sw = renyi_divergence(&rho, &sigma, DivergenceParams::sandwiched(a))?.to_f64();
        let az = renyi_divergence(&rho, &sigma, DivergenceParams::alpha_z(a, a))?.to_f64();
        let pz = renyi_divergence(&rho, &sigma, DivergenceParams::petz(a))?.to_f64();
        let az1 = renyi_divergence(&rho, &sigma, DivergenceParams::alpha_z(a, 1.0))?.to_f64();
        Ok(1e-10 - (sw - az).abs().max((pz - az1).abs()))
    });
    r.check("log-Euclidean divergence equals its variational form", |rng| {
        let d = rng.random_range(2..=3);
        let (rho, sigma) = (random_density(rng, d), random_density(rng, d));
        let a = rng.random_range(0.2..0.9);
        let direct = log_euclidean(&rho, &sigma, a)?.to_f64();
        let var = log_euclidean_variational(&rho, &sigma, a)?.value.to_f64();
        Ok(1e-6 - (direct - var).abs())
    });
}

fn conditional_entropy(r: &mut Runner) {
    let opts = r.cfg.opts;
    r.check("club entropy is bounded below by the von Neumann conditional entropy", move |rng| {
        let (x, e) = random_dims(rng);
        let cq = random_cq(rng, x, e);
        let alpha = ALPHA_GRID[rng.random_range(0..ALPHA_GRID.len())].max(0.5 + 1e-3);
        Ok(club_sandwiched(&cq, alpha, None, &opts)?.value - vn_cond_entropy(&cq) + 1e-6)
    });
    r.check("additivity for tensor products", move |rng| {
        let cq = random_cq(rng, 2, 2);
        let one = club_sandwiched(&cq, 0.7, None, &opts)?.value;
        let two = club_sandwiched(&cq.tensor(&cq), 0.7, None, &opts)?.value;
        Ok(1e-5 - (two - 2.0 * one).abs())
    });
    r.check("continuity at the endpoints of the alpha range", move |rng| {
        let (x, e) = random_dims(rng);
        let cq = random_cq(rng, x, e);
        let half = club_sandwiched(&cq, 0.5, None, &opts)?.value;
        let near_half = club_sandwiched(&cq, 0.5 + 1e-4, None, &opts)?.value;
        let near_one = club_sandwiched(&cq, 0.999, None, &opts)?.value;
        let vn = vn_cond_entropy(&cq);
        Ok((1e-3 - (near_half - half).abs()).min(0.05 - (near_one - vn).abs()))
    });
    r.check("duality relation", move |rng| {
        let (x, e) = random_dims(rng);
        let cq = random_cq(rng, x, e);
        let alpha = rng.random_range(0.55..0.95);
        let club = club_sandwiched(&cq, alpha, None, &opts)?.value;
        let dual = duality_club(&cq, alpha, &opts)?.value;
        Ok(1e-4 - (club - dual).abs())
    });
    r.check("log-Euclidean entropy is at most the club entropy", move |rng| {
        let (x, e) = random_dims(rng);
        let cq = random_cq(rng, x, e);
        let alpha = rng.random_range(0.55..0.95);
        let le = le_cond_entropy(&cq, alpha, None, &opts)?.value;
        let club = club_sandwiched(&cq, alpha, None, &opts)?.value;
        Ok(club - le + 1e-6)
    });
    r.check("club objective diverges when the support condition fails", |rng| {
        let (x, e) = random_dims(rng);
        let cq = random_cq(rng, x, e);
        let sigma = random_pure(rng, e);
        let alpha = rng.random_range(0.6..0.95);
        let lambda = crate::entropy::default_lambda(alpha);
        let vals: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&eps| club_objective_regularized(&cq, &sigma, alpha, lambda, eps))
            .collect::<Result<_>>()?;
        Ok(vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min))
    });
    r.check("coarse-graining does not increase the club entropy", move |rng| {
        let x = rng.random_range(2..=4);
        let z = rng.random_range(1..x);
        let cq = random_cq(rng, x, 2);
        let table = (0..x).map(|_| rng.random_range(0..z)).collect();
        let h = HashFunction::new(1, x, z, table)?;
        let alpha = rng.random_range(0.5..0.95);
        let (before, after) = coarse_grain_entropy_check(&cq, &h, alpha, None, &opts)?;
        Ok(before - after + 1e-8)
    });
}

fn exponent(r: &mut Runner) {
    let opts = r.cfg.opts;
    r.check("exponent vanishes below the conditional entropy", move |rng| {
        let cq = random_cq(rng, 2, 2);
        let rate = rng.random::<f64>() * vn_cond_entropy(&cq).max(0.0);
        Ok(1e-9 - Exponent::new(&cq, opts).epa(rate)?.value.abs())
    });
    r.check("concavity of G in t", move |rng| {
        let (x, e) = random_dims(rng);
        let cq = random_classical(rng, x, e);
        let engine = Exponent::new(&cq, opts);
        let (t1, t2) = (rng.random::<f64>(), rng.random::<f64>());
        let rate = rng.random::<f64>() * (x as f64).ln();
        let mid = engine.g(0.5 * (t1 + t2), rate)?;
        Ok(mid - 0.5 * (engine.g(t1, rate)? + engine.g(t2, rate)?) + 1e-9)
    });
    r.check("linear regime above the critical rate", move |rng| {
        let cq = random_cq(rng, 2, 2);
        let engine = Exponent::new(&cq, opts);
        let rc = engine.critical_rate()?;
        let rate = rc + 1e-3 + rng.random::<f64>();
        let half = club_sandwiched(&cq, 0.5, None, &opts)?.value;
        Ok(1e-6 - (engine.epa(rate)?.value - (rate - half)).abs())
    });
    r.check("exponent is nondecreasing and 1-Lipschitz in the rate", move |rng| {
        let cq = random_cq(rng, 2, 2);
        let engine = Exponent::new(&cq, opts);
        let r1 = rng.random::<f64>() * 1.5;
        let r2 = r1 + rng.random::<f64>() * 0.5;
        let step = engine.epa(r2)?.value - engine.epa(r1)?.value;
        Ok(step.min(r2 - r1 - step) + 1e-7)
    });
}

fn pa_simulator(r: &mut Runner) {
    let opts = r.cfg.opts;
    let random_hash = |rng: &mut StateRng, n: usize, x: usize, z: usize| {
        let table = (0..x.pow(n as u32)).map(|_| rng.random_range(0..z)).collect();
        HashFunction::new(n, x, z, table)
    };
    r.check("hashing does not change the E marginal", move |rng| {
        let n = rng.random_range(1..=2);
        let cq = random_cq(rng, 2, 2);
        let h = random_hash(rng, n, 2, 2)?;
        let hashed = apply_hash(&cq, n, &h)?;
        let target = marginal_e(&cq.tensor_power(n));
        Ok(1e-12 - marginal_e(&hashed).op().max_abs_diff(target.op()))
    });
    r.check("one-shot converse", move |rng| {
        let n = rng.random_range(1..=2);
        let cq = random_cq(rng, 2, 2);
        let h = random_hash(rng, n, 2, 2)?;
        let margins = oneshot_converse_check(&cq, n, &h, &ALPHA_GRID, &opts)?;
        Ok(margins
            .iter()
            .map(|m| m.margin_hashed.min(m.margin_additive))
            .fold(f64::INFINITY, f64::min)
            + 1e-9)
    });
    r.check("best fidelity is invariant under relabeling Z", move |rng| {
        let n = rng.random_range(1..=2);
        let z = rng.random_range(2..=3);
        let cq = random_cq(rng, 2, 2);
        let h = random_hash(rng, n, 2, z)?;
        let mut perm: Vec<usize> = (0..z).collect();
        for i in (1..z).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let marginal = marginal_e(&cq.tensor_power(n));
        let f = fidelity_to_ideal(&apply_hash(&cq, n, &h)?, z, &marginal)?;
        let g = fidelity_to_ideal(&apply_hash(&cq, n, &h.relabel(&perm)?)?, z, &marginal)?;
        Ok(1e-12 - (f - g).abs())
    });
    r.check("finite-n exponent dominates the one-shot converse chain", move |rng| {
        let n = rng.random_range(1..=2);
        let cq = random_cq(rng, 2, 2);
        let rep = best_hash_exhaustive(&cq, n, 2, &opts, Execution::Sequential)?;
        Ok(rep.exponent_estimate - rep.oneshot_bound + 1e-9)
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn seeds_are_distinct() {
        let a = trial_seed(42, Suite::Exponent, 0, 0);
        assert_ne!(a, trial_seed(42, Suite::Exponent, 0, 1));
        assert_ne!(a, trial_seed(42, Suite::Exponent, 1, 0));
        assert_ne!(a, trial_seed(42, Suite::PaSimulator, 0, 0));
    }

    #[test]
    fn light_suites_pass() {
        let cfg = VerifyConfig {
            trials: 8,
            ..Default::default()
        };
        for s in [Suite::OperatorCore, Suite::QuantumStates, Suite::SymmetricGroup, Suite::Divergences] {
            for c in run_suite(s, &cfg) {
                assert!(c.passed(), "{}", c.summary());
            }
        }
    }

    #[test]
    fn summary_names_property() {
        let c = CheckOutcome {
            suite: Suite::Divergences,
            property: "duality relation",
            trials: 3,
            failures: 1,
            worst_slack: -1.0,
            worst_trial: Some(2),
            first_error: None,
        };
        let s = c.summary();
        assert!(s.starts_with("FAIL [divergences] duality relation"));
        assert!(s.contains("trial 2"));
    }
}
