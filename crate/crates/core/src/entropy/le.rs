use super::solver::{gibbs_state, log_full_rank, pack_hermitian, unpack_hermitian};
use super::{check_alpha_open_unit, resolve_lambda, vn_cond_entropy, AsBlockState, BlockState, OptimizerReport, SolverOptions};
use crate::divergence::{neg_entropy, umegaki_raw};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::linalg::{
    eigh_raw, herm_exp, kron, max_abs, partial_trace_raw, psd_log, support_basis, support_contained, trace_re, CMatrix,
    Hermitian, Subsystem, SupportThreshold, C64,
};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::states::DensityOperator;

fn thr() -> SupportThreshold {
    SupportThreshold::default()
}

fn diag_log(v: &[f64], c: f64) -> CMatrix {
    let mut m = CMatrix::zeros(v.len(), v.len());
    for (i, &x) in v.iter().enumerate() {
        m[(i, i)] = C64::new(c * x.ln(), 0.0);
    }
    m
}

/// The LE objective in support coordinates: block `x` lives on `supp ρ_x`
/// (isometry `V_x`), `E` on `supp ρ_E` (isometry `W`), and
/// `U_x = (I_B ⊗ W)† V_x`. With `γ = λ(1−α)`,
/// `H_x(σ) = G_x + γ U_x† (I_B ⊗ log σ) U_x`.
pub(crate) struct LeModel {
    v: Vec<CMatrix>,
    u: Vec<CMatrix>,
    g: Vec<CMatrix>,
    w: CMatrix,
    vals_e: Vec<f64>,
    gamma: f64,
    d_b: usize,
}

impl LeModel {
    pub(crate) fn new(bs: &BlockState, alpha: f64, lambda: f64) -> Self {
        let (w, vals_e) = support_basis(&bs.marginal_e(), thr());
        let d_b = bs.d_b();
        let iw = kron(&CMatrix::identity(d_b, d_b), &w);
        let log_e = kron(
            &CMatrix::identity(d_b, d_b),
            &diag_log(&vals_e, (1.0 - alpha) * (1.0 - lambda)),
        );
        let (mut vs, mut us, mut gs) = (Vec::new(), Vec::new(), Vec::new());
        for b in bs.blocks() {
            let (v, vals) = support_basis(b, thr());
            if vals.is_empty() {
                continue;
            }
            let u = iw.adjoint() * &v;
            let g = diag_log(&vals, alpha) + u.adjoint() * &log_e * &u;
            vs.push(v);
            us.push(u);
            gs.push(g);
        }
        LeModel {
            v: vs,
            u: us,
            g: gs,
            w,
            vals_e,
            gamma: lambda * (1.0 - alpha),
            d_b,
        }
    }

    fn rank_e(&self) -> usize {
        self.vals_e.len()
    }

    fn generators(&self, log_sigma: &CMatrix) -> Vec<CMatrix> {
        let ls = kron(&CMatrix::identity(self.d_b, self.d_b), log_sigma) * C64::new(self.gamma, 0.0);
        self.g
            .iter()
            .zip(&self.u)
            .map(|(g, u)| g + u.adjoint() * &ls * u)
            .collect()
    }

    /// `Σ_x Tr exp(H_x(σ))` for full-rank `σ` on `supp ρ_E`.
    fn trace_at(&self, log_sigma: &CMatrix) -> f64 {
        self.generators(log_sigma).iter().map(|h| trace_re(&herm_exp(h))).sum()
    }

    /// `τ_E` of the normalized `⊕_x exp(H_x)`, in `supp ρ_E` coordinates.
    fn marginal(&self, taus: &[CMatrix]) -> CMatrix {
        let r = self.rank_e();
        let mut m = CMatrix::zeros(r, r);
        for (t, u) in taus.iter().zip(&self.u) {
            m += partial_trace_raw(&(u * t * u.adjoint()), self.d_b, r, Subsystem::A);
        }
        m
    }

    fn normalized_exp(hs: &[CMatrix]) -> Vec<CMatrix> {
        let top = hs
            .iter()
            .flat_map(|h| eigh_raw(h).0)
            .fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<CMatrix> = hs
            .iter()
            .map(|h| {
                let k = h.nrows();
                herm_exp(&(h - CMatrix::identity(k, k) * C64::new(top, 0.0)))
            })
            .collect();
        let z: f64 = exps.iter().map(trace_re).sum();
        exps.into_iter().map(|e| e / C64::new(z, 0.0)).collect()
    }

    /// Full-space `τ` from support-coordinate blocks.
    fn embed_tau(&self, bs: &BlockState, taus: &[CMatrix]) -> BlockState {
        let m = bs.d_b() * bs.d_e();
        let mut it = self.v.iter().zip(taus);
        let blocks = bs
            .blocks()
            .iter()
            .map(|b| {
                if support_basis(b, thr()).1.is_empty() {
                    CMatrix::zeros(m, m)
                } else {
                    let (v, t) = it.next().expect("one tau per nonzero block");
                    v * t * v.adjoint()
                }
            })
            .collect();
        BlockState::from_blocks(bs.d_b(), bs.d_e(), blocks)
    }
}

/// `Σ_x Tr exp(α log ρ_x + (1−α) V_x†(I ⊗ ((1−λ) log ρ_E + λ log σ))V_x)` on the
/// support of `ρ`; `+∞` when `supp ρ_E ⊄ supp σ` and `λ < 0`.
///
/// The LE entropy at `σ` is `log(·)/(1−α)`.
pub fn le_objective(rho: &impl AsBlockState, sigma: &DensityOperator, alpha: f64, lambda: f64) -> Result<ExtReal> {
    check_alpha_open_unit(alpha)?;
    let lambda = resolve_lambda(alpha, Some(lambda))?;
    let bs = rho.block_state();
    if sigma.dim() != bs.d_e() {
        return Err(Error::validation(format!(
            "sigma has dimension {}, expected {}",
            sigma.dim(),
            bs.d_e()
        )));
    }
    let rho_e = bs.marginal_e();
    if lambda < 0.0 && !support_contained(&rho_e, sigma.matrix(), thr()) {
        return Ok(ExtReal::PosInf);
    }
    let mix = psd_log(&rho_e, thr()) * C64::new((1.0 - alpha) * (1.0 - lambda), 0.0)
        + psd_log(sigma.matrix(), thr()) * C64::new((1.0 - alpha) * lambda, 0.0);
    let side = kron(&CMatrix::identity(bs.d_b(), bs.d_b()), &mix);
    let total = bs
        .blocks()
        .iter()
        .map(|b| {
            let (v, vals) = support_basis(b, thr());
            if vals.is_empty() {
                return 0.0;
            }
            let h = diag_log(&vals, alpha) + v.adjoint() * &side * &v;
            trace_re(&herm_exp(&h))
        })
        .sum();
    Ok(ExtReal::Finite(total))
}

/// `H^λ_{α,∞}(A|E) = min_σ log(le_objective)/(1−α)`.
///
/// Alternates the Gibbs state `τ(σ)` with `σ ← τ_E` in the log domain; the
/// step `1/(1−γ)` with `γ = λ(1−α)` is exact for commuting inputs.
pub fn le_cond_entropy(
    rho: &impl AsBlockState,
    alpha: f64,
    lambda: Option<f64>,
    opts: &SolverOptions,
) -> Result<OptimizerReport> {
    check_alpha_open_unit(alpha)?;
    let lambda = resolve_lambda(alpha, lambda)?;
    let bs = rho.block_state();
    let model = LeModel::new(&bs, alpha, lambda);
    let r = model.rank_e();
    let embed = |s: &CMatrix| DensityOperator::from_psd_unchecked(&model.w * s * model.w.adjoint(), vec![bs.d_e()]);
    let total_e: f64 = model.vals_e.iter().sum();
    let mut sigma = CMatrix::zeros(r, r);
    for (i, v) in model.vals_e.iter().enumerate() {
        sigma[(i, i)] = C64::new(v / total_e, 0.0);
    }
    let scale = 1.0 / (1.0 - alpha);
    if lambda == 0.0 || r == 1 {
        let q = model.trace_at(&log_full_rank(&sigma));
        return Ok(OptimizerReport::exact(scale * q.ln(), Some(embed(&sigma))));
    }
    let eta0 = 1.0 / (1.0 - model.gamma);
    let mut log_s = log_full_rank(&sigma);
    let mut q = model.trace_at(&log_s);
    let (mut converged, mut iterations, mut delta) = (false, 0, f64::INFINITY);
    for it in 1..=opts.max_iter {
        iterations = it;
        let taus = LeModel::normalized_exp(&model.generators(&log_s));
        let target = log_full_rank(&model.marginal(&taus));
        let mut eta = eta0;
        let mut accepted = None;
        let mut residual = f64::INFINITY;
        while eta >= eta0 / 1024.0 {
            let cand = gibbs_state(&(&log_s * C64::new(1.0 - eta, 0.0) + &target * C64::new(eta, 0.0)));
            if eta == eta0 {
                residual = max_abs(&(&cand - &sigma));
            }
            let lc = log_full_rank(&cand);
            let qc = model.trace_at(&lc);
            if qc.is_finite() && qc <= q * (1.0 + 1e-15) {
                accepted = Some((cand, lc, qc));
                break;
            }
            eta *= 0.5;
        }
        let Some((cand, lc, qc)) = accepted else {
            converged = residual <= 1e-8;
            break;
        };
        delta = (q - qc).abs() / q;
        let dpar = max_abs(&(&cand - &sigma));
        sigma = cand;
        log_s = lc;
        q = qc;
        if delta <= opts.tol && dpar <= 1e-11 {
            converged = true;
            break;
        }
    }
    if !converged {
        let f = |x: &[f64]| {
            let s = gibbs_state(&unpack_hermitian(x, r));
            let v = model.trace_at(&log_full_rank(&s));
            if v > 0.0 && v.is_finite() {
                v.ln()
            } else {
                f64::INFINITY
            }
        };
        let nm = nelder_mead(
            f,
            &pack_hermitian(&log_s),
            NelderMeadOptions {
                initial_step: 0.3,
                f_tol: 1e-15,
                x_tol: 1e-10,
                max_evaluations: 20_000,
            },
        );
        iterations += nm.evaluations;
        let s = gibbs_state(&unpack_hermitian(&nm.x, r));
        let qn = model.trace_at(&log_full_rank(&s));
        if qn < q {
            sigma = s;
            q = qn;
        }
        converged = nm.converged;
    }
    Ok(OptimizerReport {
        value: scale * q.ln(),
        optimizer: Some(embed(&sigma)),
        iterations,
        converged,
        objective_delta: delta,
        cross_check_gap: None,
    })
}

/// Result of the τ iteration behind [`variational_le`].
pub(crate) struct TauOutcome {
    pub tau: BlockState,
    pub phi: f64,
    pub iterations: usize,
    pub converged: bool,
    pub delta: f64,
}

/// `(D(τ_E‖ρ_E), D(τ‖ρ), H(A|E)_τ)` on the full space.
pub(crate) fn variational_terms(tau: &BlockState, rho: &BlockState) -> (f64, f64, f64) {
    let de = umegaki_raw(&tau.marginal_e(), &rho.marginal_e()).to_f64();
    let d: f64 = tau
        .blocks()
        .iter()
        .zip(rho.blocks())
        .map(|(t, r)| {
            if trace_re(t) <= 0.0 {
                0.0
            } else {
                umegaki_raw(t, r).to_f64()
            }
        })
        .sum();
    (de, d, vn_cond_entropy(tau))
}

/// `(1−λ)(1−α) D(τ_E‖ρ_E) + α D(τ‖ρ) + (α−1) H(A|E)_τ`.
fn variational_objective(tau: &BlockState, rho: &BlockState, alpha: f64, lambda: f64) -> f64 {
    let (de, d, h) = variational_terms(tau, rho);
    (1.0 - lambda) * (1.0 - alpha) * de + alpha * d + (alpha - 1.0) * h
}

/// Minimizes the variational objective over block states `τ` supported in
/// `supp ρ` by the damped iteration `log τ ← G + γ log τ_E`.
pub(crate) fn minimize_tau(bs: &BlockState, alpha: f64, lambda: f64, opts: &SolverOptions) -> TauOutcome {
    let model = LeModel::new(bs, alpha, lambda);
    let r = model.rank_e();
    let mut sigma0 = CMatrix::zeros(r, r);
    let total_e: f64 = model.vals_e.iter().sum();
    for (i, v) in model.vals_e.iter().enumerate() {
        sigma0[(i, i)] = C64::new(v / total_e, 0.0);
    }
    let mut taus = LeModel::normalized_exp(&model.generators(&log_full_rank(&sigma0)));
    let mut logs: Vec<CMatrix> = taus.iter().map(log_full_rank).collect();
    let eval = |t: &[CMatrix]| variational_objective(&model.embed_tau(bs, t), bs, alpha, lambda);
    let mut phi = eval(&taus);
    let (mut converged, mut iterations, mut delta) = (model.gamma == 0.0, 0, 0.0);
    let eta0 = 0.5;
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let target = model.generators(&log_full_rank(&model.marginal(&taus)));
        let mut eta = eta0;
        let mut accepted = None;
        let mut residual = f64::INFINITY;
        while eta >= eta0 / 1024.0 {
            let mixed: Vec<CMatrix> = logs
                .iter()
                .zip(&target)
                .map(|(l, t)| l * C64::new(1.0 - eta, 0.0) + t * C64::new(eta, 0.0))
                .collect();
            let cand = LeModel::normalized_exp(&mixed);
            let dpar = cand
                .iter()
                .zip(&taus)
                .map(|(a, b)| max_abs(&(a - b)))
                .fold(0.0, f64::max);
            if eta == eta0 {
                residual = dpar;
            }
            let pc = eval(&cand);
            if pc <= phi + 1e-13 * phi.abs().max(1.0) {
                accepted = Some((cand, pc, dpar));
                break;
            }
            eta *= 0.5;
        }
        let Some((cand, pc, dpar)) = accepted else {
            converged = residual <= 1e-8;
            break;
        };
        delta = (phi - pc).abs();
        logs = cand.iter().map(log_full_rank).collect();
        taus = cand;
        phi = pc;
        if delta <= 1e-13 * phi.abs().max(1.0) && dpar <= 1e-10 {
            converged = true;
        }
    }
    TauOutcome {
        tau: model.embed_tau(bs, &taus),
        phi,
        iterations,
        converged,
        delta,
    }
}

/// `H^λ_{α,∞}(A|E)` as `min_τ {(1−λ)(1−α)D(τ_E‖ρ_E) + αD(τ‖ρ) + (α−1)H(A|E)_τ}/(α−1)`
/// over block states `τ` with `supp τ ⊆ supp ρ`.
pub fn variational_le(
    rho: &impl AsBlockState,
    alpha: f64,
    lambda: Option<f64>,
    opts: &SolverOptions,
) -> Result<OptimizerReport> {
    check_alpha_open_unit(alpha)?;
    let lambda = resolve_lambda(alpha, lambda)?;
    let bs = rho.block_state();
    let out = minimize_tau(&bs, alpha, lambda, opts);
    Ok(OptimizerReport {
        value: out.phi / (alpha - 1.0),
        optimizer: Some(out.tau.embed()),
        iterations: out.iterations,
        converged: out.converged,
        objective_delta: out.delta,
        cross_check_gap: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbsCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// `−log Tr[P exp(−H)]` against `Tr[τ log τ] + Tr[τ H]` at
/// `τ = P exp(−H)/Tr[P exp(−H)]`, with `P` the projector `support`
/// (identity when `None`). `H` is compressed to the range of `P`.
pub fn gibbs_check(h: &Hermitian, support: Option<&Hermitian>) -> Result<GibbsCheck> {
    let d = h.dim();
    let v = match support {
        None => CMatrix::identity(d, d),
        Some(p) => {
            if p.dim() != d {
                return Err(Error::validation("projector and Hamiltonian dimensions differ"));
            }
            let pm = p.matrix();
            if max_abs(&(pm * pm - pm)) > 1e-10 {
                return Err(Error::validation("support operator is not a projector"));
            }
            let (v, _) = support_basis(pm, thr());
            if v.ncols() == 0 {
                return Err(Error::validation("support projector is zero"));
            }
            v
        }
    };
    let hc = v.adjoint() * h.matrix() * &v;
    let (vals, _) = eigh_raw(&hc);
    let low = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let z_shift: f64 = vals.iter().map(|l| (-(l - low)).exp()).sum();
    let lhs = low - z_shift.ln();
    let k = hc.nrows();
    let tau_c = herm_exp(&(-(&hc - CMatrix::identity(k, k) * C64::new(low, 0.0)))) / C64::new(z_shift, 0.0);
    let tau = &v * tau_c * v.adjoint();
    let rhs = gibbs_functional(h, &tau);
    Ok(GibbsCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// `Tr[τ log τ] + Tr[τ H]`.
pub fn gibbs_functional(h: &Hermitian, tau: &CMatrix) -> f64 {
    neg_entropy(tau) + trace_re(&(tau * h.matrix()))
}
