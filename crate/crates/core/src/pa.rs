//! Finite-`n` privacy amplification by exhaustive deterministic hashing.

use crate::entropy::{club_sandwiched, BlockState, SolverOptions};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::linalg::{psd_power, CMatrix, SupportThreshold, C64};
use crate::parallel::Execution;
use crate::states::{marginal_e, CQState, DensityOperator};

/// Largest number of hash tables [`best_hash_exhaustive`] will enumerate.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

/// A function `h: X^n → Z` as a table over `X^n` tuples, first copy most
/// significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HashFunction {
    n: usize,
    x_dim: usize,
    z_dim: usize,
    table: Vec<usize>,
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

impl HashFunction {
    pub fn new(n: usize, x_dim: usize, z_dim: usize, table: Vec<usize>) -> Result<Self> {
        if n == 0 || x_dim == 0 || z_dim == 0 {
            return Err(Error::validation("n, |X| and |Z| must be positive"));
        }
        let len = checked_pow(x_dim, n).ok_or_else(|| Error::validation("|X|^n overflows"))?;
        if table.len() != len {
            return Err(Error::validation(format!(
                "hash table has {} entries, expected |X|^n = {len}",
                table.len()
            )));
        }
        if let Some(z) = table.iter().find(|&&z| z >= z_dim) {
            return Err(Error::validation(format!("hash value {z} is outside [0, {z_dim})")));
        }
        Ok(HashFunction {
            n,
            x_dim,
            z_dim,
            table,
        })
    }

    /// The table whose base-`z_dim` digits (first entry most significant) spell `index`.
    pub fn from_index(n: usize, x_dim: usize, z_dim: usize, mut index: u64) -> Result<Self> {
        let len = checked_pow(x_dim, n).ok_or_else(|| Error::validation("|X|^n overflows"))?;
        let mut table = vec![0; len];
        for slot in table.iter_mut().rev() {
            *slot = (index % z_dim as u64) as usize;
            index /= z_dim as u64;
        }
        if index != 0 {
            return Err(Error::validation("hash index exceeds the number of tables"));
        }
        HashFunction::new(n, x_dim, z_dim, table)
    }

    /// `x ↦ x` on `X^n` with `|Z| = |X|^n`.
    pub fn identity(n: usize, x_dim: usize) -> Result<Self> {
        let len = checked_pow(x_dim, n).ok_or_else(|| Error::validation("|X|^n overflows"))?;
        HashFunction::new(n, x_dim, len, (0..len).collect())
    }

    pub fn constant(n: usize, x_dim: usize, z_dim: usize) -> Result<Self> {
        let len = checked_pow(x_dim, n).ok_or_else(|| Error::validation("|X|^n overflows"))?;
        HashFunction::new(n, x_dim, z_dim, vec![0; len])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn z_dim(&self) -> usize {
        self.z_dim
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    /// Position of this table in the enumeration order.
    pub fn index(&self) -> u64 {
        self.table.iter().fold(0u64, |acc, &z| acc * self.z_dim as u64 + z as u64)
    }

    /// `h(x_1, …, x_n)`.
    pub fn apply(&self, word: &[usize]) -> usize {
        let i = word.iter().fold(0, |acc, &x| acc * self.x_dim + x);
        self.table[i]
    }

    /// Output symbols renamed by `perm` (`z ↦ perm[z]`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.z_dim {
            return Err(Error::validation("relabeling must permute all of Z"));
        }
        HashFunction::new(
            self.n,
            self.x_dim,
            self.z_dim,
            self.table.iter().map(|&z| perm[z]).collect(),
        )
    }

    /// Number of tables for the given shape, if it fits in `u64`.
    pub fn count(n: usize, x_dim: usize, z_dim: usize) -> Option<u64> {
        let len = u32::try_from(checked_pow(x_dim, n)?).ok()?;
        (z_dim as u64).checked_pow(len)
    }
}

fn check_hash(rho: &CQState, n: usize, h: &HashFunction) -> Result<()> {
    if h.n() != n || h.x_dim() != rho.x_dim() {
        return Err(Error::validation(format!(
            "hash is defined on {}^{} symbols, state needs {}^{n}",
            h.x_dim(),
            h.n(),
            rho.x_dim()
        )));
    }
    Ok(())
}

/// Unnormalized blocks `A_z = Σ_{x ∈ h⁻¹(z)} p(x) ρ_E(x)` of an `n`-fold power.
fn hashed_blocks(power: &CQState, h: &HashFunction) -> Vec<CMatrix> {
    let d = power.e_dim();
    let mut blocks = vec![CMatrix::zeros(d, d); h.z_dim()];
    for (x, (&p, c)) in power.probs().iter().zip(power.cond()).enumerate() {
        if p > 0.0 {
            blocks[h.table()[x]] += c.matrix() * C64::new(p, 0.0);
        }
    }
    blocks
}

fn blocks_to_cq(blocks: Vec<CMatrix>) -> CQState {
    let d = blocks[0].nrows();
    let (probs, cond) = blocks
        .into_iter()
        .map(|b| {
            let q = crate::linalg::trace_re(&b);
            if q > 0.0 {
                (q, DensityOperator::from_psd_unchecked(b / C64::new(q, 0.0), vec![d]))
            } else {
                (0.0, DensityOperator::maximally_mixed(d))
            }
        })
        .unzip();
    CQState::from_parts_unchecked(probs, cond)
}

/// The CQ state on `Z ⊗ E^n` after hashing `ρ^{⊗n}`; empty outputs carry `I/d`.
pub fn apply_hash(rho: &CQState, n: usize, h: &HashFunction) -> Result<CQState> {
    check_hash(rho, n, h)?;
    Ok(blocks_to_cq(hashed_blocks(&rho.tensor_power(n), h)))
}

/// `Σ_z ‖A_z^{1/2} S‖₁ / √|Z|` for `S = (ρ_E^{⊗n})^{1/2}`; its square is the fidelity.
fn root_fidelity(blocks: &[CMatrix], sqrt_marginal: &CMatrix, z_dim: usize) -> f64 {
    let norm: f64 = blocks
        .iter()
        .map(|a| {
            let prod = psd_power(a, 0.5, SupportThreshold::default()) * sqrt_marginal;
            prod.singular_values().iter().sum::<f64>()
        })
        .sum();
    norm / (z_dim as f64).sqrt()
}

/// Fidelity between the hashed state and `I_Z/|Z| ⊗ ρ_E^{⊗n}`.
pub fn fidelity_to_ideal(hashed: &CQState, z_dim: usize, marginal_power: &DensityOperator) -> Result<f64> {
    if hashed.x_dim() != z_dim || marginal_power.dim() != hashed.e_dim() {
        return Err(Error::validation("hashed state and ideal have different shapes"));
    }
    let blocks: Vec<CMatrix> = hashed
        .probs()
        .iter()
        .zip(hashed.cond())
        .map(|(q, c)| c.matrix() * C64::new(*q, 0.0))
        .collect();
    let s = psd_power(marginal_power.matrix(), 0.5, SupportThreshold::default());
    let r = root_fidelity(&blocks, &s, z_dim);
    Ok((r * r).min(1.0))
}

/// Outcome of an exhaustive search at one blocklength.
#[derive(Clone, Debug)]
pub struct SimReport {
    pub n: usize,
    /// `log |Z| / n` in nats.
    pub rate_nominal: f64,
    pub z_dim: usize,
    pub best_fidelity: f64,
    pub best_hash: HashFunction,
    /// `−log F / n` in nats.
    pub exponent_estimate: f64,
    /// `max_α ((1−α)/α)(log|Z| − n H̃_α(X|E))/n` over [`ALPHA_GRID`].
    pub oneshot_bound: f64,
    pub pass: bool,
}

/// The α values used by the one-shot bound of [`SimReport`].
pub const ALPHA_GRID: [f64; 9] = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9];

/// Tables ordered as base-`|Z|` counters; ties go to the smallest table.
pub fn best_hash_exhaustive(
    rho: &CQState,
    n: usize,
    z_dim: usize,
    opts: &SolverOptions,
    exec: Execution,
) -> Result<SimReport> {
    if n == 0 || z_dim == 0 {
        return Err(Error::validation("n and |Z| must be positive"));
    }
    let total = HashFunction::count(n, rho.x_dim(), z_dim)
        .filter(|&c| c <= ENUMERATION_BUDGET)
        .ok_or_else(|| {
            Error::unsupported(format!(
                "{z_dim}^({}^{n}) hash tables exceed the enumeration budget of {ENUMERATION_BUDGET}",
                rho.x_dim()
            ))
        })?;
    let power = rho.tensor_power(n);
    let s = psd_power(marginal_e(&power).matrix(), 0.5, SupportThreshold::default());
    // Partial sums p(x)ρ_E(x) are recomputed per table; dimensions are tiny.
    let roots = exec.map_range(total as usize, |i| {
        let h = HashFunction::from_index(n, rho.x_dim(), z_dim, i as u64).expect("index in range");
        root_fidelity(&hashed_blocks(&power, &h), &s, z_dim)
    });
    let top = roots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = roots
        .iter()
        .position(|&r| (r * r) >= (top * top) - 1e-12)
        .expect("nonempty enumeration");
    let f = (roots[best] * roots[best]).min(1.0);
    let best_hash = HashFunction::from_index(n, rho.x_dim(), z_dim, best as u64)?;
    let exponent_estimate = -f.ln() / n as f64;
    let oneshot_bound = additive_bound(rho, n, z_dim, opts)?;
    Ok(SimReport {
        n,
        rate_nominal: (z_dim as f64).ln() / n as f64,
        z_dim,
        best_fidelity: f,
        best_hash,
        exponent_estimate,
        oneshot_bound,
        pass: exponent_estimate >= oneshot_bound - 1e-9,
    })
}

fn additive_bound(rho: &CQState, n: usize, z_dim: usize, opts: &SolverOptions) -> Result<f64> {
    let log_z = (z_dim as f64).ln();
    let mut best: f64 = 0.0;
    for &alpha in &ALPHA_GRID {
        let h = club_sandwiched(rho, alpha, None, opts)?.value;
        best = best.max((1.0 - alpha) / alpha * (log_z - n as f64 * h) / n as f64);
    }
    Ok(best)
}

/// Margins of the one-shot converse at one α.
#[derive(Clone, Copy, Debug)]
pub struct OneShotMargin {
    pub alpha: f64,
    /// `−(α/(1−α)) log F`.
    pub lhs: f64,
    /// `log|Z| − H̃_α(Z|E^n)` of the hashed state.
    pub rhs_hashed: f64,
    /// `log|Z| − n H̃_α(X|E)`.
    pub rhs_additive: f64,
    pub margin_hashed: f64,
    pub margin_additive: f64,
}

/// `−(α/(1−α)) log F ≥ log|Z| − H̃_α(Z|E^n) ≥ log|Z| − n H̃_α(X|E)` at each α.
pub fn oneshot_converse_check(
    rho: &CQState,
    n: usize,
    h: &HashFunction,
    alphas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<OneShotMargin>> {
    check_hash(rho, n, h)?;
    if let Some(a) = alphas.iter().find(|a| !(0.5..1.0).contains(*a)) {
        return Err(Error::domain(format!("alpha must lie in [1/2, 1), got {a}")));
    }
    let power = rho.tensor_power(n);
    let blocks = hashed_blocks(&power, h);
    let s = psd_power(marginal_e(&power).matrix(), 0.5, SupportThreshold::default());
    let r = root_fidelity(&blocks, &s, h.z_dim());
    let log_f = (r * r).min(1.0).ln();
    let hashed = BlockState::from_cq(&blocks_to_cq(blocks));
    let log_z = (h.z_dim() as f64).ln();
    alphas
        .iter()
        .map(|&alpha| {
            let lhs = -alpha / (1.0 - alpha) * log_f;
            let rhs_hashed = log_z - club_sandwiched(&hashed, alpha, None, opts)?.value;
            let rhs_additive = log_z - n as f64 * club_sandwiched(rho, alpha, None, opts)?.value;
            Ok(OneShotMargin {
                alpha,
                lhs,
                rhs_hashed,
                rhs_additive,
                margin_hashed: lhs - rhs_hashed,
                margin_additive: lhs - rhs_additive,
            })
        })
        .collect()
}

/// One row of [`finite_n_table`].
#[derive(Clone, Debug)]
pub struct FiniteNRow {
    pub report: SimReport,
    /// The asymptotic exponent at the row's nominal rate.
    pub epa: f64,
}

/// `|Z_n| = max(1, round(exp(nR)))` for a rate in nats.
pub fn z_dim_for_rate(n: usize, rate: f64) -> usize {
    ((n as f64 * rate).exp().round() as usize).max(1)
}

/// Best-hash reports for `n = 1..=n_max` at rate `R` (nats).
pub fn finite_n_table(
    rho: &CQState,
    rate: f64,
    n_max: usize,
    opts: &SolverOptions,
    exec: Execution,
) -> Result<Vec<FiniteNRow>> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!("rate must be finite and nonnegative, got {rate}")));
    }
    let engine = Exponent::new(rho, *opts);
    (1..=n_max)
        .map(|n| {
            let report = best_hash_exhaustive(rho, n, z_dim_for_rate(n, rate), opts, exec)?;
            let epa = engine.epa(rate)?.value;
            Ok(FiniteNRow { report, epa })
        })
        .collect()
}
