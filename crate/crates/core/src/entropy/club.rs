use super::solver::{self, Sense, SigmaProblem};
use super::{
    check_alpha_open_unit, resolve_lambda, vn_cond_entropy, AsBlockState, BlockState, EntropyKind, EntropyQuery,
    OptimizerReport, SolverOptions,
};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::linalg::{
    partial_trace_raw, psd_power, support_basis, support_contained, support_proj_raw, trace_psd_power,
    trace_re, CMatrix, Subsystem, SupportThreshold, C64,
};
use crate::pa::HashFunction;
use crate::states::{id_tensor, random_density_seeded, DensityOperator};

fn thr() -> SupportThreshold {
    SupportThreshold::default()
}

fn diag(v: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(v.len(), v.len());
    for (i, &x) in v.iter().enumerate() {
        m[(i, i)] = C64::new(x, 0.0);
    }
    m
}

/// `E` restricted to `supp ρ_E`: isometry `W` (`d_E × r`) and eigenvalues.
struct ReducedE {
    w: CMatrix,
    vals: Vec<f64>,
}

impl ReducedE {
    fn of(bs: &BlockState) -> Self {
        let (w, vals) = support_basis(&bs.marginal_e(), thr());
        ReducedE { w, vals }
    }

    fn rank(&self) -> usize {
        self.vals.len()
    }

    fn embed(&self, sigma_r: &CMatrix) -> DensityOperator {
        let full = &self.w * sigma_r * self.w.adjoint();
        DensityOperator::from_psd_unchecked(full, vec![self.w.nrows()])
    }

    fn marginal(&self) -> CMatrix {
        let total: f64 = self.vals.iter().sum();
        diag(&self.vals.iter().map(|v| v / total).collect::<Vec<_>>())
    }

    /// `ρ_E`, `I/r`, then seeded random states.
    fn starts(&self, opts: &SolverOptions) -> Vec<CMatrix> {
        let r = self.rank();
        let mut out = vec![self.marginal()];
        if opts.starts > 1 {
            out.push(CMatrix::identity(r, r) / C64::new(r as f64, 0.0));
        }
        for k in 2..opts.starts {
            out.push(random_density_seeded(opts.seed.wrapping_add(k as u64), r).matrix().clone());
        }
        out
    }
}

/// `V Λ^p` for the support of every nonzero block.
fn block_factors(bs: &BlockState, p: f64) -> Vec<CMatrix> {
    bs.blocks()
        .iter()
        .filter_map(|b| {
            let (v, vals) = support_basis(b, thr());
            if vals.is_empty() {
                return None;
            }
            let mut m = v;
            for (j, l) in vals.iter().enumerate() {
                m.column_mut(j).scale_mut(l.powf(p));
            }
            Some(m)
        })
        .collect()
}

/// `Q(σ) = Σ_x Tr[(M_x† (I_B ⊗ ρ_E^a σ^b ρ_E^a) M_x)^s]` with `M_x = V_x Λ_x^p`,
/// in coordinates of `supp ρ_E`.
fn sandwich_problem(bs: &BlockState, red: &ReducedE, p: f64, a: f64, b: f64, s: f64, sense: Sense) -> SigmaProblem {
    let d_e = bs.d_e();
    let left = diag(&red.vals.iter().map(|v| v.powf(a)).collect::<Vec<_>>()) * red.w.adjoint();
    let terms = block_factors(bs, p)
        .into_iter()
        .map(|m| {
            (0..bs.d_b())
                .map(|i| &left * m.rows(i * d_e, d_e))
                .collect()
        })
        .collect();
    SigmaProblem {
        terms,
        b,
        s,
        sense,
        dim: red.rank(),
    }
}

fn optimize(p: &SigmaProblem, red: &ReducedE, opts: &SolverOptions) -> (f64, OptimizerReport) {
    if p.dim == 1 {
        let one = CMatrix::identity(1, 1);
        let q = p.objective(&one);
        return (q, OptimizerReport::exact(0.0, Some(red.embed(&one))));
    }
    let out = solver::solve(p, &red.starts(opts), &opts.solve_opts());
    let report = OptimizerReport {
        value: 0.0,
        optimizer: Some(red.embed(&out.sigma)),
        iterations: out.iterations,
        converged: out.converged,
        objective_delta: out.objective_delta,
        cross_check_gap: None,
    };
    (out.value, report)
}

fn with_value(mut r: OptimizerReport, value: f64) -> OptimizerReport {
    r.value = value;
    r
}

/// Exponents `(a, b)` of `ρ_E^a σ^b ρ_E^a` in the club objective.
fn club_exponents(alpha: f64, lambda: f64) -> (f64, f64) {
    (
        (1.0 - lambda) * (1.0 - alpha) / (2.0 * alpha),
        lambda * (1.0 - alpha) / alpha,
    )
}

/// `Σ_x Tr[(ρ_x^{1/2} (I ⊗ X) ρ_x^{1/2})^α]` on the full space.
fn sandwich_trace(blocks: &[CMatrix], d_b: usize, x: &CMatrix, alpha: f64) -> f64 {
    let ix = id_tensor(d_b, x);
    blocks
        .iter()
        .map(|b| {
            let r = psd_power(b, 0.5, thr());
            trace_psd_power(&(&r * &ix * &r), alpha)
        })
        .sum()
}

fn check_sigma(bs: &BlockState, sigma: &DensityOperator) -> Result<()> {
    if sigma.dim() != bs.d_e() {
        return Err(Error::validation(format!(
            "sigma has dimension {}, expected {}",
            sigma.dim(),
            bs.d_e()
        )));
    }
    Ok(())
}

/// `Tr[(ρ^{1/2} ρ_E^a σ^b ρ_E^a ρ^{1/2})^α]` with `a = (1−λ)(1−α)/(2α)` and
/// `b = λ(1−α)/α`, powers on supports; `+∞` when `supp ρ_E ⊄ supp σ` and `λ < 0`.
///
/// The club entropy at `σ` is `log(·)/(1−α)`.
pub fn club_objective(rho: &impl AsBlockState, sigma: &DensityOperator, alpha: f64, lambda: f64) -> Result<ExtReal> {
    check_alpha_open_unit(alpha)?;
    let lambda = resolve_lambda(alpha, Some(lambda))?;
    let bs = rho.block_state();
    check_sigma(&bs, sigma)?;
    let rho_e = bs.marginal_e();
    if lambda < 0.0 && !support_contained(&rho_e, sigma.matrix(), thr()) {
        return Ok(ExtReal::PosInf);
    }
    let (a, b) = club_exponents(alpha, lambda);
    let re = psd_power(&rho_e, a, thr());
    let x = if lambda < 0.0 {
        &re * psd_power(sigma.matrix(), b, thr()) * &re
    } else {
        &re * &re
    };
    Ok(ExtReal::Finite(sandwich_trace(bs.blocks(), bs.d_b(), &x, alpha)))
}

fn fill_kernel(m: &CMatrix, eps: f64) -> CMatrix {
    let n = m.nrows();
    let kernel = CMatrix::identity(n, n) - support_proj_raw(m, thr());
    m + kernel * C64::new(eps, 0.0)
}

/// The club trace with every kernel filled by `ε`: `ρ_x + εR_x^⊥`,
/// `ρ_E + εR_E^⊥` and `σ + εS^⊥`. Tends to [`club_objective`] as `ε → 0`
/// when supports comply and diverges otherwise.
pub fn club_objective_regularized(
    rho: &impl AsBlockState,
    sigma: &DensityOperator,
    alpha: f64,
    lambda: f64,
    eps: f64,
) -> Result<f64> {
    check_alpha_open_unit(alpha)?;
    let lambda = resolve_lambda(alpha, Some(lambda))?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("regularization must be positive, got {eps}")));
    }
    let bs = rho.block_state();
    check_sigma(&bs, sigma)?;
    let (a, b) = club_exponents(alpha, lambda);
    let re = psd_power(&fill_kernel(&bs.marginal_e(), eps), a, thr());
    let x = &re * psd_power(&fill_kernel(sigma.matrix(), eps), b, thr()) * &re;
    let blocks: Vec<CMatrix> = bs.blocks().iter().map(|blk| fill_kernel(blk, eps)).collect();
    Ok(sandwich_trace(&blocks, bs.d_b(), &x, alpha))
}

/// `c_y = p(y)^{(1−λ)(1−α)} Σ_x p(x,y)^α` for nonempty columns.
fn classical_weights(p_xy: &[Vec<f64>], alpha: f64, lambda: f64) -> Result<Vec<f64>> {
    let cols = p_xy.first().map_or(0, Vec::len);
    if cols == 0 || p_xy.iter().any(|r| r.len() != cols) {
        return Err(Error::validation("joint distribution must be a nonempty rectangular table"));
    }
    if p_xy.iter().flatten().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::validation("joint probabilities must be finite and nonnegative"));
    }
    let total: f64 = p_xy.iter().flatten().sum();
    if (total - 1.0).abs() > crate::states::TRACE_TOL {
        return Err(Error::validation(format!("joint probabilities sum to {total}, expected 1")));
    }
    Ok((0..cols)
        .filter_map(|y| {
            let py: f64 = p_xy.iter().map(|r| r[y]).sum();
            (py > 0.0).then(|| {
                py.powf((1.0 - lambda) * (1.0 - alpha)) * p_xy.iter().map(|r| r[y].powf(alpha)).sum::<f64>()
            })
        })
        .collect())
}

/// Closed form of the club entropy for a joint distribution `p[x][y]` and
/// any `λ ≤ 0`: with `r = −λ(1−α)`, `((1+r)/(1−α)) log Σ_y c_y^{1/(1+r)}`.
pub fn classical_club_closed_form_lambda(p_xy: &[Vec<f64>], alpha: f64, lambda: f64) -> Result<f64> {
    check_alpha_open_unit(alpha)?;
    let lambda = resolve_lambda(alpha, Some(lambda))?;
    let r = -lambda * (1.0 - alpha);
    let c = classical_weights(p_xy, alpha, lambda)?;
    let sum: f64 = c.iter().map(|v| v.powf(1.0 / (1.0 + r))).sum();
    Ok((1.0 + r) / (1.0 - alpha) * sum.ln())
}

/// `(2α/(1−α)) log Σ_y p(y) (Σ_x p(x|y)^α)^{1/(2α)}`, the club entropy at
/// `λ = (1−2α)/(1−α)` for `α ∈ [1/2, 1)`.
pub fn classical_club_closed_form(p_xy: &[Vec<f64>], alpha: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha must lie in [1/2, 1), got {alpha}")));
    }
    classical_club_closed_form_lambda(p_xy, alpha, super::default_lambda(alpha))
}

/// `H̃_α^λ(A|E) = min_σ log Q(σ)/(1−α)`.
///
/// `α = 1` returns the von Neumann entropy; `λ = 0` needs no optimization.
/// Non-convergence is flagged, the value is still the best found.
pub fn club_sandwiched(
    rho: &impl AsBlockState,
    alpha: f64,
    lambda: Option<f64>,
    opts: &SolverOptions,
) -> Result<OptimizerReport> {
    let bs = rho.block_state();
    if alpha == 1.0 {
        return Ok(OptimizerReport::exact(vn_cond_entropy(&bs), None));
    }
    check_alpha_open_unit(alpha)?;
    let lambda = resolve_lambda(alpha, lambda)?;
    let red = ReducedE::of(&bs);
    let (a, b) = club_exponents(alpha, lambda);
    let p = sandwich_problem(&bs, &red, 0.5, a, b, alpha, Sense::Minimize);
    let mut report = if lambda == 0.0 {
        let sigma = red.marginal();
        let q = p.objective(&sigma);
        OptimizerReport::exact(q.ln() / (1.0 - alpha), Some(red.embed(&sigma)))
    } else if opts.classical_shortcut && bs.is_classical() {
        let table = bs.joint_table().expect("classical");
        let v = classical_club_closed_form_lambda(&table, alpha, lambda)?;
        OptimizerReport::exact(v, None)
    } else {
        let (q, r) = optimize(&p, &red, opts);
        with_value(r, q.ln() / (1.0 - alpha))
    };
    let default = (lambda - super::default_lambda(alpha)).abs() < 1e-15;
    if opts.cross_check && default && alpha >= 0.5 {
        let dual = duality_club(&bs, alpha, opts)?;
        report.cross_check_gap = Some((dual.value - report.value).abs());
        report.converged &= dual.converged;
    }
    Ok(report)
}

/// `ρ_AC` of a purification `ρ_AEC` of `ρ_AE` with `C ≅ supp ρ_AE`.
fn complementary(bs: &BlockState) -> BlockState {
    let full = bs.embed();
    let (d_a, d_e) = (bs.a_dim(), bs.d_e());
    let (v, vals) = support_basis(full.matrix(), thr());
    let c = vals.len();
    // |ψ⟩ = Σ_i √λ_i |v_i⟩_{AE} |i⟩_C, then trace out E.
    let amp = |a: usize, i: usize, e: usize| v[(a * d_e + e, i)] * vals[i].sqrt();
    let n = d_a * c;
    let m = CMatrix::from_fn(n, n, |row, col| {
        let (a, i) = (row / c, row % c);
        let (a2, j) = (col / c, col % c);
        (0..d_e).map(|e| amp(a, i, e) * amp(a2, j, e).conj()).sum()
    });
    BlockState::from_blocks(d_a, c, vec![m])
}

/// The club entropy at `λ = (1−2α)/(1−α)` through the duality with the
/// `α-z` entropy of the purifying system: `−H↑_{β,β/2}(A|C)` with
/// `β = 2α/(3α−1)`, for `α ∈ [1/2, 1)`.
pub fn duality_club(rho: &impl AsBlockState, alpha: f64, opts: &SolverOptions) -> Result<OptimizerReport> {
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha must lie in [1/2, 1), got {alpha}")));
    }
    let bs = complementary(&rho.block_state());
    let beta = 2.0 * alpha / (3.0 * alpha - 1.0);
    let red = ReducedE::of(&bs);
    let p = sandwich_problem(&bs, &red, 1.0, 0.0, 2.0 * (1.0 - beta) / beta, beta / 2.0, Sense::Minimize);
    let (q, r) = optimize(&p, &red, opts);
    Ok(with_value(r, q.ln() / (beta - 1.0)))
}

fn check_family_alpha(kind: EntropyKind, alpha: f64) -> Result<()> {
    let ok = match kind {
        EntropyKind::SandwichedDown | EntropyKind::SandwichedUp => alpha >= 0.5 && alpha.is_finite(),
        EntropyKind::PetzDown | EntropyKind::PetzUp => alpha > 0.0 && alpha <= 2.0,
        _ => true,
    };
    if !ok || alpha == 1.0 {
        return Err(Error::domain(format!("alpha = {alpha} is outside the range of {}", kind.name())));
    }
    Ok(())
}

/// The sandwiched and Petz entropies, `↓` at `σ = ρ_E` and `↑` optimized.
pub fn renyi_cond(rho: &impl AsBlockState, q: &EntropyQuery, opts: &SolverOptions) -> Result<OptimizerReport> {
    let alpha = q.alpha;
    check_family_alpha(q.kind, alpha)?;
    let bs = rho.block_state();
    let red = ReducedE::of(&bs);
    let rho_e = bs.marginal_e();
    let scale = 1.0 / (1.0 - alpha);
    match q.kind {
        EntropyKind::SandwichedDown | EntropyKind::SandwichedUp => {
            let sense = if alpha < 1.0 { Sense::Maximize } else { Sense::Minimize };
            let p = sandwich_problem(&bs, &red, 0.5, 0.0, (1.0 - alpha) / alpha, alpha, sense);
            if q.kind == EntropyKind::SandwichedDown {
                let sigma = red.marginal();
                return Ok(OptimizerReport::exact(
                    scale * p.objective(&sigma).ln(),
                    Some(red.embed(&sigma)),
                ));
            }
            if opts.classical_shortcut && bs.is_classical() {
                let table = bs.joint_table().expect("classical");
                let cols = table[0].len();
                let sum: f64 = (0..cols)
                    .map(|y| table.iter().map(|r| r[y].powf(alpha)).sum::<f64>().powf(1.0 / alpha))
                    .sum();
                return Ok(OptimizerReport::exact(alpha * scale * sum.ln(), None));
            }
            let (qv, r) = optimize(&p, &red, opts);
            Ok(with_value(r, scale * qv.ln()))
        }
        EntropyKind::PetzDown => {
            let ie = id_tensor(bs.d_b(), &psd_power(&rho_e, 1.0 - alpha, thr()));
            let qv: f64 = bs
                .blocks()
                .iter()
                .map(|b| trace_re(&(psd_power(b, alpha, thr()) * &ie)))
                .sum();
            Ok(OptimizerReport::exact(scale * qv.ln(), Some(bs.marginal_e_state())))
        }
        EntropyKind::PetzUp => {
            let mut m = CMatrix::zeros(bs.d_e(), bs.d_e());
            for b in bs.blocks() {
                m += partial_trace_raw(&psd_power(b, alpha, thr()), bs.d_b(), bs.d_e(), Subsystem::A);
            }
            let tr = trace_psd_power(&m, 1.0 / alpha);
            let sigma = psd_power(&m, 1.0 / alpha, thr()) / C64::new(tr, 0.0);
            Ok(OptimizerReport::exact(
                alpha * scale * tr.ln(),
                Some(DensityOperator::from_psd_unchecked(sigma, vec![bs.d_e()])),
            ))
        }
        other => Err(Error::validation(format!("{} is not a Rényi arrow entropy", other.name()))),
    }
}

/// `(H̃_α^λ(X^n B^n|E^n), H̃_α^λ(Z B^n|E^n))` for `Z = h(X^n)`.
pub fn coarse_grain_entropy_check(
    rho: &impl AsBlockState,
    h: &HashFunction,
    alpha: f64,
    lambda: Option<f64>,
    opts: &SolverOptions,
) -> Result<(f64, f64)> {
    let bs = rho.block_state();
    if h.x_dim() != bs.num_blocks() {
        return Err(Error::validation(format!(
            "hash expects |X| = {}, state has {} blocks",
            h.x_dim(),
            bs.num_blocks()
        )));
    }
    let mut power = bs.clone();
    for _ in 1..h.n() {
        power = power.tensor(&bs);
    }
    let before = club_sandwiched(&power, alpha, lambda, opts)?.value;
    let after = club_sandwiched(&power.coarse_grain(h.table())?, alpha, lambda, opts)?.value;
    Ok((before, after))
}

#[cfg(test)]
fn min_eig(m: &CMatrix) -> f64 {
    crate::linalg::eigh_raw(m).0[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{fig1_state, random_classical, random_cq_seeded, seeded_rng, uniform_product, CQState};

    const LN2: f64 = std::f64::consts::LN_2;

    fn no_shortcut() -> SolverOptions {
        SolverOptions {
            classical_shortcut: false,
            ..Default::default()
        }
    }

    #[test]
    fn down_half_of_fig1() {
        let fig = fig1_state();
        let v = club_sandwiched(&fig, 0.5, None, &Default::default()).unwrap().value;
        let expect = 2.0 * 1.314_016_9f64.ln();
        assert!((v - expect).abs() < 1e-7);
        assert!((v / LN2 - 0.787968).abs() < 1e-6);
        let down = renyi_cond(&fig, &EntropyQuery::new(EntropyKind::SandwichedDown, 0.5), &Default::default())
            .unwrap()
            .value;
        assert!((down - v).abs() < 1e-13);
    }

    #[test]
    fn uniform_product_gives_log_x() {
        let sigma = random_density_seeded(7, 2);
        let st = uniform_product(3, &sigma);
        let opts = no_shortcut();
        for alpha in [0.55, 0.8] {
            let v = club_sandwiched(&st, alpha, None, &opts).unwrap();
            assert!(v.converged);
            assert!((v.value - 3f64.ln()).abs() < 1e-9, "{alpha}: {}", v.value);
            let d = duality_club(&st, alpha, &opts).unwrap();
            assert!((d.value - 3f64.ln()).abs() < 1e-8);
        }
        for kind in [
            EntropyKind::SandwichedDown,
            EntropyKind::SandwichedUp,
            EntropyKind::PetzDown,
            EntropyKind::PetzUp,
        ] {
            let v = renyi_cond(&st, &EntropyQuery::new(kind, 0.7), &opts).unwrap().value;
            assert!((v - 3f64.ln()).abs() < 1e-9, "{kind:?}");
        }
    }

    #[test]
    fn classical_matrix_path_matches_closed_form() {
        let mut rng = seeded_rng(11);
        for _ in 0..5 {
            let st = random_classical(&mut rng, 3, 3);
            let table = st.joint_table().unwrap();
            for alpha in [0.55, 0.7, 0.9] {
                let m = club_sandwiched(&st, alpha, None, &no_shortcut()).unwrap();
                let c = classical_club_closed_form(&table, alpha).unwrap();
                assert!(m.converged);
                assert!((m.value - c).abs() < 1e-9, "{alpha}: {} vs {c}", m.value);
            }
            let up = renyi_cond(&st, &EntropyQuery::new(EntropyKind::SandwichedUp, 0.7), &no_shortcut()).unwrap();
            let up_c = renyi_cond(&st, &EntropyQuery::new(EntropyKind::SandwichedUp, 0.7), &Default::default())
                .unwrap();
            assert!((up.value - up_c.value).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_limits() {
        let t = [vec![0.1, 0.1], vec![0.7, 0.1]];
        let half = classical_club_closed_form(&t, 0.5).unwrap();
        assert!((half - 2.0 * 1.314_016_9f64.ln()).abs() < 1e-7);
        let near_one = classical_club_closed_form(&t, 0.999).unwrap() / LN2;
        assert!((near_one - 0.63485).abs() < 1e-3);
        let u = [vec![0.25, 0.125], vec![0.25, 0.125], vec![0.0, 0.25]];
        assert!(classical_club_closed_form(&u, 0.7).is_ok());
        assert!(classical_club_closed_form(&t, 0.4).is_err());
        let uniform = [vec![0.3, 0.2], vec![0.3, 0.2]];
        assert!((classical_club_closed_form(&uniform, 0.7).unwrap() - LN2).abs() < 1e-12);
    }

    #[test]
    fn quantum_duality_and_ordering() {
        let opts = SolverOptions::default();
        for seed in 0..4 {
            let st = random_cq_seeded(100 + seed, 2, 2);
            let vn = vn_cond_entropy(&st);
            for alpha in [0.6, 0.75, 0.9] {
                let club = club_sandwiched(&st, alpha, None, &opts).unwrap();
                let dual = duality_club(&st, alpha, &opts).unwrap();
                assert!(club.converged && dual.converged);
                assert!((club.value - dual.value).abs() < 1e-7, "{} vs {}", club.value, dual.value);
                assert!(club.value >= vn - 1e-9);
                let down = renyi_cond(&st, &EntropyQuery::new(EntropyKind::SandwichedDown, alpha), &opts).unwrap();
                let up = renyi_cond(&st, &EntropyQuery::new(EntropyKind::SandwichedUp, alpha), &opts).unwrap();
                assert!(up.value >= down.value - 1e-10);
                let pd = renyi_cond(&st, &EntropyQuery::new(EntropyKind::PetzDown, alpha), &opts).unwrap();
                let pu = renyi_cond(&st, &EntropyQuery::new(EntropyKind::PetzUp, alpha), &opts).unwrap();
                assert!(pu.value >= pd.value - 1e-10);
            }
        }
    }

    #[test]
    fn objective_support_conventions() {
        let st = random_cq_seeded(5, 2, 2);
        let sigma = DensityOperator::from_diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(club_objective(&st, &sigma, 0.7, -0.5).unwrap(), ExtReal::PosInf);
        let a = club_objective(&st, &sigma, 0.7, 0.0).unwrap();
        let b = club_objective(&st, &DensityOperator::maximally_mixed(2), 0.7, 0.0).unwrap();
        assert!((a.to_f64() - b.to_f64()).abs() < 1e-14);
        let f: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| club_objective_regularized(&st, &sigma, 0.7, -0.5, e).unwrap())
            .collect();
        assert!(f[0] < f[1] && f[1] < f[2]);
        let full = DensityOperator::maximally_mixed(2);
        let exact = club_objective(&st, &full, 0.75, -0.5).unwrap().to_f64();
        let reg = club_objective_regularized(&st, &full, 0.75, -0.5, 1e-6).unwrap();
        assert!((exact - reg).abs() < 1e-3);
    }

    #[test]
    fn objective_matches_solver_value() {
        let st = random_cq_seeded(9, 3, 2);
        let r = club_sandwiched(&st, 0.7, None, &Default::default()).unwrap();
        let sigma = r.optimizer.clone().unwrap();
        let q = club_objective(&st, &sigma, 0.7, super::super::default_lambda(0.7)).unwrap();
        assert!((q.to_f64().ln() / 0.3 - r.value).abs() < 1e-10);
        assert!(min_eig(sigma.matrix()) > -1e-12);
    }

    #[test]
    fn rank_deficient_marginal() {
        // ρ_E(x) all supported on the first two of three levels.
        let c0 = DensityOperator::from_diagonal(&[0.6, 0.4, 0.0]).unwrap();
        let c1 = crate::states::random_density_seeded(3, 2);
        let mut m = CMatrix::zeros(3, 3);
        m.view_mut((0, 0), (2, 2)).copy_from(c1.matrix());
        let c1 = DensityOperator::new(crate::linalg::Hermitian::new(m).unwrap(), vec![3]).unwrap();
        let st = CQState::new(vec![0.3, 0.7], vec![c0, c1]).unwrap();
        let r = club_sandwiched(&st, 0.7, None, &Default::default()).unwrap();
        let d = duality_club(&st, 0.7, &Default::default()).unwrap();
        assert!(r.converged);
        assert!((r.value - d.value).abs() < 1e-7);
    }
}
