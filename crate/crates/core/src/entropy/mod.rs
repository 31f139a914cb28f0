//! Conditional entropies `H(A|E)` of block states.
//!
//! Every quantity is in nats. The optimized entropies minimize or maximize
//! over `σ_E` through [`solver`]; see [`club_sandwiched`] for the main one.

mod blocks;
mod club;
pub(crate) mod le;
pub(crate) mod solver;

pub use blocks::{AsBlockState, BlockState};
pub use club::{
    classical_club_closed_form, classical_club_closed_form_lambda, club_objective, club_objective_regularized,
    club_sandwiched, coarse_grain_entropy_check, duality_club, renyi_cond,
};
pub use le::{gibbs_check, le_cond_entropy, le_objective, variational_le, GibbsCheck};

use crate::divergence::neg_entropy;
use crate::error::{Error, Result};
use crate::states::DensityOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EntropyKind {
    Vn,
    SandwichedDown,
    SandwichedUp,
    PetzDown,
    PetzUp,
    Club,
    Le,
}

impl EntropyKind {
    pub fn name(self) -> &'static str {
        match self {
            EntropyKind::Vn => "vn",
            EntropyKind::SandwichedDown => "sandwiched_down",
            EntropyKind::SandwichedUp => "sandwiched_up",
            EntropyKind::PetzDown => "petz_down",
            EntropyKind::PetzUp => "petz_up",
            EntropyKind::Club => "club",
            EntropyKind::Le => "le",
        }
    }
}

impl std::str::FromStr for EntropyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "vn" => EntropyKind::Vn,
            "sandwiched_down" => EntropyKind::SandwichedDown,
            "sandwiched_up" => EntropyKind::SandwichedUp,
            "petz_down" => EntropyKind::PetzDown,
            "petz_up" => EntropyKind::PetzUp,
            "club" => EntropyKind::Club,
            "le" => EntropyKind::Le,
            other => return Err(Error::validation(format!("unknown entropy kind '{other}'"))),
        })
    }
}

/// Which entropy to compute. `lambda = None` selects `(1−2α)/(1−α)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyQuery {
    pub kind: EntropyKind,
    pub alpha: f64,
    pub lambda: Option<f64>,
}

impl EntropyQuery {
    pub fn new(kind: EntropyKind, alpha: f64) -> Self {
        EntropyQuery {
            kind,
            alpha,
            lambda: None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }
}

/// `(1−2α)/(1−α)`, the boundary of the data-processing region.
pub fn default_lambda(alpha: f64) -> f64 {
    (1.0 - 2.0 * alpha) / (1.0 - alpha)
}

#[derive(Clone, Debug)]
pub struct OptimizerReport {
    pub value: f64,
    /// `σ_E` for the σ-optimized entropies, `τ_AE` for the variational ones.
    pub optimizer: Option<DensityOperator>,
    pub iterations: usize,
    pub converged: bool,
    /// Relative change of the objective over the last accepted step.
    pub objective_delta: f64,
    /// `|value − other|` when a second path was run.
    pub cross_check_gap: Option<f64>,
}

impl OptimizerReport {
    pub(crate) fn exact(value: f64, optimizer: Option<DensityOperator>) -> Self {
        OptimizerReport {
            value,
            optimizer,
            iterations: 0,
            converged: true,
            objective_delta: 0.0,
            cross_check_gap: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Use closed forms for commuting inputs.
    pub classical_shortcut: bool,
    /// Number of σ starts: `ρ_E`, `I/d`, then seeded random states.
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Relative objective tolerance of the fixed-point iterations.
    pub tol: f64,
    /// Run the duality path for the club entropy and record the gap.
    pub cross_check: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            classical_shortcut: true,
            starts: 3,
            seed: 0x5eed,
            max_iter: 10_000,
            tol: 1e-14,
            cross_check: false,
        }
    }
}

impl SolverOptions {
    pub(crate) fn solve_opts(&self) -> solver::SolveOptions {
        solver::SolveOptions {
            max_iter: self.max_iter,
            obj_tol: self.tol,
            ..Default::default()
        }
    }
}

/// `H(A|E) = H(AE) − H(E)`.
pub fn vn_cond_entropy(rho: &impl AsBlockState) -> f64 {
    let bs = rho.block_state();
    let joint: f64 = bs.blocks().iter().map(neg_entropy).sum();
    neg_entropy(&bs.marginal_e()) - joint
}

/// Any entropy of [`EntropyKind`].
pub fn conditional_entropy(
    rho: &impl AsBlockState,
    q: &EntropyQuery,
    opts: &SolverOptions,
) -> Result<OptimizerReport> {
    match q.kind {
        EntropyKind::Vn => Ok(OptimizerReport::exact(vn_cond_entropy(rho), None)),
        EntropyKind::Club => club_sandwiched(rho, q.alpha, q.lambda, opts),
        EntropyKind::Le => le_cond_entropy(rho, q.alpha, q.lambda, opts),
        _ => renyi_cond(rho, q, opts),
    }
}

pub(crate) fn check_alpha_open_unit(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Resolves `λ` and checks `λ ≤ 0`.
pub(crate) fn resolve_lambda(alpha: f64, lambda: Option<f64>) -> Result<f64> {
    let l = lambda.unwrap_or_else(|| default_lambda(alpha));
    if !l.is_finite() || l > 1e-15 {
        return Err(Error::domain(format!(
            "lambda must be finite and at most 0, got {l} (alpha = {alpha})"
        )));
    }
    Ok(l.min(0.0))
}
