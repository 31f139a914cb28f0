//! Fidelity, purified distance and the quantum Rényi divergence families.
//!
//! Values are in nats. A support violation that makes a divergence infinite
//! is reported as [`ExtReal::PosInf`].

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::linalg::{
    eigh_raw, herm_exp, psd_log, psd_power, support_basis, support_contained, trace_psd_power,
    trace_re, CMatrix, Hermitian, SupportThreshold, C64,
};
use crate::states::DensityOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Umegaki,
    Sandwiched,
    Petz,
    AlphaZ,
    LogEuclidean,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceParams {
    pub family: Family,
    pub alpha: f64,
    /// Only read by [`Family::AlphaZ`].
    pub z: f64,
}

impl DivergenceParams {
    pub fn umegaki() -> Self {
        DivergenceParams {
            family: Family::Umegaki,
            alpha: 1.0,
            z: 1.0,
        }
    }

    pub fn sandwiched(alpha: f64) -> Self {
        DivergenceParams {
            family: Family::Sandwiched,
            alpha,
            z: alpha,
        }
    }

    pub fn petz(alpha: f64) -> Self {
        DivergenceParams {
            family: Family::Petz,
            alpha,
            z: 1.0,
        }
    }

    pub fn alpha_z(alpha: f64, z: f64) -> Self {
        DivergenceParams {
            family: Family::AlphaZ,
            alpha,
            z,
        }
    }

    pub fn log_euclidean(alpha: f64) -> Self {
        DivergenceParams {
            family: Family::LogEuclidean,
            alpha,
            z: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::Umegaki {
            return Ok(());
        }
        if !(self.alpha > 0.0) || self.alpha == 1.0 || !self.alpha.is_finite() {
            return Err(Error::domain(format!(
                "Renyi order must be positive, finite and different from 1, got {}",
                self.alpha
            )));
        }
        if self.family == Family::AlphaZ && !(self.z > 0.0 && self.z.is_finite()) {
            return Err(Error::domain(format!("z must be positive and finite, got {}", self.z)));
        }
        Ok(())
    }
}

fn check_dims(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::validation(format!(
            "states have different dimensions ({} vs {})",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

fn thr() -> SupportThreshold {
    SupportThreshold::default()
}

/// Uhlmann fidelity `(Tr|√ρ √σ|)²`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    Ok(fidelity_raw(rho.matrix(), sigma.matrix()))
}

pub(crate) fn fidelity_raw(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let prod = psd_power(rho, 0.5, thr()) * psd_power(sigma, 0.5, thr());
    let s: f64 = prod.singular_values().iter().sum();
    (s * s).clamp(0.0, 1.0)
}

/// `√(1 − F)`.
pub fn purified_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    Ok((1.0 - fidelity(rho, sigma)?).max(0.0).sqrt())
}

/// `Tr ρ (log ρ − log σ)`, infinite unless `supp ρ ⊆ supp σ`.
pub fn umegaki(rho: &DensityOperator, sigma: &DensityOperator) -> Result<ExtReal> {
    check_dims(rho, sigma)?;
    Ok(umegaki_raw(rho.matrix(), sigma.matrix()))
}

pub(crate) fn umegaki_raw(rho: &CMatrix, sigma: &CMatrix) -> ExtReal {
    if !support_contained(rho, sigma, thr()) {
        return ExtReal::PosInf;
    }
    let diff = psd_log(rho, thr()) - psd_log(sigma, thr());
    ExtReal::Finite(trace_re(&(rho * diff)))
}

/// `Tr ρ log ρ`, i.e. minus the von Neumann entropy.
pub(crate) fn neg_entropy(rho: &CMatrix) -> f64 {
    let (vals, _) = eigh_raw(rho);
    let cut = thr().cutoff(vals.last().copied().unwrap_or(0.0).max(0.0));
    vals.iter().filter(|&&v| v > cut).map(|&v| v * v.ln()).sum()
}

/// Rényi quasi-entropy `Q` such that `D = log Q / (α − 1)`, or `None` when the
/// divergence is infinite.
fn quasi(rho: &CMatrix, sigma: &CMatrix, p: &DivergenceParams) -> Option<f64> {
    let a = p.alpha;
    if a > 1.0 && !support_contained(rho, sigma, thr()) {
        return None;
    }
    let q = match p.family {
        Family::Sandwiched => {
            let s = psd_power(sigma, (1.0 - a) / (2.0 * a), thr());
            trace_psd_power(&(&s * rho * &s), a)
        }
        Family::Petz => {
            trace_re(&(psd_power(rho, a, thr()) * psd_power(sigma, 1.0 - a, thr())))
        }
        Family::AlphaZ => {
            let z = p.z;
            let s = psd_power(sigma, (1.0 - a) / (2.0 * z), thr());
            let r = psd_power(rho, a / z, thr());
            trace_psd_power(&(&s * r * &s), z)
        }
        Family::LogEuclidean => le_quasi(rho, sigma, a),
        Family::Umegaki => unreachable!(),
    };
    (q > 0.0).then_some(q)
}

/// `Tr[P exp(P(α log ρ + (1−α) log σ)P)]` with `P` the support intersection.
fn le_quasi(rho: &CMatrix, sigma: &CMatrix, a: f64) -> f64 {
    match le_reduced_generator(rho, sigma, a) {
        Some((_, h)) => trace_re(&herm_exp(&h)),
        None => 0.0,
    }
}

/// Isometry `V` onto `supp ρ ∩ supp σ` and the compressed generator
/// `V†(α log ρ + (1−α) log σ)V`; `None` when the intersection is trivial.
fn le_reduced_generator(rho: &CMatrix, sigma: &CMatrix, a: f64) -> Option<(CMatrix, CMatrix)> {
    let n = rho.nrows();
    let id = CMatrix::identity(n, n);
    let pr = {
        let (b, _) = support_basis(rho, thr());
        &b * b.adjoint()
    };
    let ps = {
        let (b, _) = support_basis(sigma, thr());
        &b * b.adjoint()
    };
    let kernels = (&id - pr) + (&id - ps);
    let (vals, vecs) = eigh_raw(&kernels);
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] <= 1e-9).collect();
    if keep.is_empty() {
        return None;
    }
    let mut v = CMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        v.set_column(c, &vecs.column(i));
    }
    let gen = psd_log(rho, thr()) * C64::new(a, 0.0) + psd_log(sigma, thr()) * C64::new(1.0 - a, 0.0);
    let h = v.adjoint() * gen * &v;
    Some((v, h))
}

/// Divergence selected by `params`.
pub fn renyi_divergence(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    params: DivergenceParams,
) -> Result<ExtReal> {
    check_dims(rho, sigma)?;
    params.validate()?;
    Ok(renyi_raw(rho.matrix(), sigma.matrix(), &params))
}

pub(crate) fn renyi_raw(rho: &CMatrix, sigma: &CMatrix, params: &DivergenceParams) -> ExtReal {
    if params.family == Family::Umegaki {
        return umegaki_raw(rho, sigma);
    }
    match quasi(rho, sigma, params) {
        Some(q) => ExtReal::Finite(q.ln() / (params.alpha - 1.0)),
        None => ExtReal::PosInf,
    }
}

/// `D_{α,∞}` by the direct formula.
pub fn log_euclidean(rho: &DensityOperator, sigma: &DensityOperator, alpha: f64) -> Result<ExtReal> {
    check_alpha_unit(alpha)?;
    renyi_divergence(rho, sigma, DivergenceParams::log_euclidean(alpha))
}

fn check_alpha_unit(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Outcome of a variational optimization over states.
#[derive(Clone, Debug)]
pub struct VariationalReport {
    pub value: ExtReal,
    pub optimizer: Option<DensityOperator>,
    pub iterations: usize,
    pub converged: bool,
}

/// `D_{α,∞}` as `min_τ {α D(τ‖ρ) + (1−α) D(τ‖σ)} / (1−α)`, minimized by a
/// damped Gibbs fixed point on the support intersection.
pub fn log_euclidean_variational(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    alpha: f64,
) -> Result<VariationalReport> {
    check_dims(rho, sigma)?;
    check_alpha_unit(alpha)?;
    let (r, s) = (rho.matrix(), sigma.matrix());
    let Some((v, h)) = le_reduced_generator(r, s, alpha) else {
        return Ok(VariationalReport {
            value: ExtReal::PosInf,
            optimizer: None,
            iterations: 0,
            converged: true,
        });
    };
    let k = v.ncols();
    let objective = |tau_r: &CMatrix| -> f64 {
        let tau = &v * tau_r * v.adjoint();
        let a = umegaki_raw(&tau, r).to_f64();
        let b = umegaki_raw(&tau, s).to_f64();
        alpha * a + (1.0 - alpha) * b
    };
    let damping = 0.5;
    let mut log_tau = CMatrix::identity(k, k) * C64::new(-(k as f64).ln(), 0.0);
    let mut tau = herm_exp(&log_tau);
    let mut f = objective(&tau);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=10_000 {
        iterations = it;
        let mixed = &log_tau * C64::new(1.0 - damping, 0.0) + &h * C64::new(damping, 0.0);
        let unnorm = herm_exp(&mixed);
        let z = trace_re(&unnorm);
        log_tau = mixed - CMatrix::identity(k, k) * C64::new(z.ln(), 0.0);
        tau = unnorm / C64::new(z, 0.0);
        let f_new = objective(&tau);
        let delta = (f - f_new).abs();
        f = f_new;
        if delta <= 1e-12 {
            converged = true;
            break;
        }
    }
    let full = Hermitian::from_matrix_unchecked(&v * &tau * v.adjoint());
    Ok(VariationalReport {
        value: ExtReal::Finite(f / (1.0 - alpha)),
        optimizer: Some(DensityOperator::from_psd_unchecked(full.into_matrix(), rho.dims().to_vec())),
        iterations,
        converged,
    })
}
