//! Optimization of `Q(σ) = Σ_j Tr[(Σ_a K_{ja}† σ^b K_{ja})^s]` over density
//! operators `σ`.
//!
//! Every optimized conditional entropy in this crate reduces to this form.
//! With `T_j = Σ_a K_{ja}† σ^b K_{ja}` and `W = s Σ_{j,a} K_{ja} T_j^{s−1} K_{ja}†`,
//! a full-rank `σ` is stationary on the state space iff `[σ, W] = 0` and
//! `σ ∝ W^{1/(1−b)}`. The primary method iterates that condition in the log
//! domain with over-relaxation; Nelder–Mead over `σ = exp(H)/Tr exp(H)` is
//! the fallback.

use crate::linalg::{eigh_raw, from_spectrum, max_abs, trace_psd_power, CMatrix, C64};
use crate::optimize::{nelder_mead, NelderMeadOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Sense {
    Minimize,
    Maximize,
}

/// Terms `K_{ja}`, each `dim × m_j`.
#[derive(Clone, Debug)]
pub(crate) struct SigmaProblem {
    pub terms: Vec<Vec<CMatrix>>,
    pub b: f64,
    pub s: f64,
    pub sense: Sense,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct SolveOptions {
    pub max_iter: usize,
    pub obj_tol: f64,
    pub param_tol: f64,
    /// Exponents `b` at or above this use Nelder–Mead directly.
    pub nm_threshold_b: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 10_000,
            obj_tol: 1e-14,
            param_tol: 1e-11,
            nm_threshold_b: 0.95,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct SolveOutcome {
    pub sigma: CMatrix,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_delta: f64,
}

fn power_full_rank(m: &CMatrix, p: f64) -> CMatrix {
    let (vals, vecs) = eigh_raw(m);
    let mapped: Vec<f64> = vals.iter().map(|&v| v.max(1e-300).powf(p)).collect();
    from_spectrum(&vecs, &mapped)
}

pub(crate) fn log_full_rank(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh_raw(m);
    let mapped: Vec<f64> = vals.iter().map(|&v| v.max(1e-300).ln()).collect();
    from_spectrum(&vecs, &mapped)
}

/// `exp(L) / Tr exp(L)`, shifted for stability.
pub(crate) fn gibbs_state(l: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh_raw(l);
    let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = vals.iter().map(|v| (v - top).exp()).collect();
    let z: f64 = w.iter().sum();
    let w: Vec<f64> = w.into_iter().map(|v| v / z).collect();
    from_spectrum(&vecs, &w)
}

impl SigmaProblem {
    fn t_matrix(&self, j: usize, sigma_b: &CMatrix) -> CMatrix {
        let terms = &self.terms[j];
        let m = terms[0].ncols();
        let mut t = CMatrix::zeros(m, m);
        for k in terms {
            t += k.adjoint() * sigma_b * k;
        }
        t
    }

    pub fn objective(&self, sigma: &CMatrix) -> f64 {
        let sb = power_full_rank(sigma, self.b);
        (0..self.terms.len())
            .map(|j| trace_psd_power(&self.t_matrix(j, &sb), self.s))
            .sum()
    }

    /// `(Q(σ), W(σ))`.
    fn objective_and_w(&self, sigma: &CMatrix) -> (f64, CMatrix) {
        let sb = power_full_rank(sigma, self.b);
        let mut q = 0.0;
        let mut w = CMatrix::zeros(self.dim, self.dim);
        for j in 0..self.terms.len() {
            let t = self.t_matrix(j, &sb);
            let (vals, vecs) = eigh_raw(&t);
            let top = vals.last().copied().unwrap_or(0.0).max(0.0);
            let cut = 1e-300f64.max(1e-14 * top);
            q += vals.iter().filter(|&&v| v > cut).map(|v| v.powf(self.s)).sum::<f64>();
            let tp: Vec<f64> = vals
                .iter()
                .map(|&v| if v > cut { v.powf(self.s - 1.0) } else { 0.0 })
                .collect();
            let t_pow = from_spectrum(&vecs, &tp);
            for k in &self.terms[j] {
                w += k * &t_pow * k.adjoint();
            }
        }
        (q, w * C64::new(self.s, 0.0))
    }

    fn better(&self, cand: f64, cur: f64, slack: f64) -> bool {
        match self.sense {
            Sense::Minimize => cand <= cur + slack * cur.abs(),
            Sense::Maximize => cand >= cur - slack * cur.abs(),
        }
    }

    fn strictly_better(&self, cand: f64, cur: f64) -> bool {
        match self.sense {
            Sense::Minimize => cand < cur,
            Sense::Maximize => cand > cur,
        }
    }

    /// Over-relaxation making the iteration exact in one step when all
    /// operators commute and there is a single term.
    fn eta0(&self) -> f64 {
        let kappa = self.b * (self.s - 1.0) / (1.0 - self.b);
        if kappa < 1.0 {
            (1.0 / (1.0 - kappa)).min(2.0)
        } else {
            1.0
        }
    }
}

fn normalized(m: &CMatrix) -> CMatrix {
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    m / C64::new(tr, 0.0)
}

pub(crate) fn fixed_point(p: &SigmaProblem, start: &CMatrix, opts: &SolveOptions) -> SolveOutcome {
    let mut sigma = normalized(start);
    let (mut q, mut w) = p.objective_and_w(&sigma);
    let eta0 = p.eta0();
    let mut etas = vec![eta0];
    if eta0 != 1.0 {
        etas.push(1.0);
    }
    let mut e = 0.5;
    while e >= 1.0 / 1024.0 {
        if e < eta0 {
            etas.push(e);
        }
        e *= 0.5;
    }
    let mut converged = false;
    let mut iterations = 0;
    let mut last_delta = f64::INFINITY;
    for it in 1..=opts.max_iter {
        iterations = it;
        let ls = log_full_rank(&sigma);
        let lw = log_full_rank(&w) * C64::new(1.0 / (1.0 - p.b), 0.0);
        let mut accepted = None;
        let mut residual = f64::INFINITY;
        for &eta in &etas {
            let l = &ls * C64::new(1.0 - eta, 0.0) + &lw * C64::new(eta, 0.0);
            let cand = gibbs_state(&l);
            if eta == 1.0 {
                residual = max_abs(&(&cand - &sigma));
            }
            let qc = p.objective(&cand);
            if qc.is_finite() && p.better(qc, q, 1e-15) {
                accepted = Some((cand, qc));
                break;
            }
        }
        let Some((cand, qc)) = accepted else {
            converged = residual <= 1e-8;
            break;
        };
        let dobj = (qc - q).abs() / q.abs().max(1e-300);
        let dpar = max_abs(&(&cand - &sigma));
        last_delta = dobj;
        sigma = cand;
        let (q2, w2) = p.objective_and_w(&sigma);
        q = q2;
        w = w2;
        if dobj <= opts.obj_tol && dpar <= opts.param_tol {
            converged = true;
            break;
        }
    }
    SolveOutcome {
        sigma,
        value: q,
        iterations,
        converged,
        objective_delta: last_delta,
    }
}

/// Hermitian `d × d` matrix from `d²` reals: diagonal, then `(re, im)` of the upper triangle.
pub(crate) fn unpack_hermitian(x: &[f64], d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    let mut k = d;
    for i in 0..d {
        m[(i, i)] = C64::new(x[i], 0.0);
        for j in i + 1..d {
            let z = C64::new(x[k], x[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

pub(crate) fn pack_hermitian(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut x: Vec<f64> = (0..d).map(|i| m[(i, i)].re).collect();
    for i in 0..d {
        for j in i + 1..d {
            x.push(m[(i, j)].re);
            x.push(m[(i, j)].im);
        }
    }
    x
}

/// Nelder–Mead on `log Q(exp(H)/Tr exp(H))` (negated when maximizing).
pub(crate) fn nelder_mead_solve(p: &SigmaProblem, start: &CMatrix, max_evals: usize) -> SolveOutcome {
    let d = p.dim;
    let sign = if p.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let f = |x: &[f64]| {
        let sigma = gibbs_state(&unpack_hermitian(x, d));
        let q = p.objective(&sigma);
        if q > 0.0 && q.is_finite() {
            sign * q.ln()
        } else {
            f64::INFINITY
        }
    };
    let x0 = pack_hermitian(&log_full_rank(&normalized(start)));
    let r = nelder_mead(
        f,
        &x0,
        NelderMeadOptions {
            initial_step: 0.3,
            f_tol: 1e-15,
            x_tol: 1e-10,
            max_evaluations: max_evals,
        },
    );
    let sigma = gibbs_state(&unpack_hermitian(&r.x, d));
    SolveOutcome {
        value: p.objective(&sigma),
        sigma,
        iterations: r.evaluations,
        converged: r.converged,
        objective_delta: 0.0,
    }
}

/// Multistart solve: fixed point from every start, Nelder–Mead when the
/// exponent is too close to 1 or no fixed-point run converged.
pub(crate) fn solve(p: &SigmaProblem, starts: &[CMatrix], opts: &SolveOptions) -> SolveOutcome {
    let mut best: Option<SolveOutcome> = None;
    let mut total_iters = 0;
    let pick = |best: &mut Option<SolveOutcome>, cand: SolveOutcome| match best {
        Some(b) if !p.strictly_better(cand.value, b.value) => {}
        _ => *best = Some(cand),
    };
    if p.b < opts.nm_threshold_b {
        for s in starts {
            let r = fixed_point(p, s, opts);
            total_iters += r.iterations;
            pick(&mut best, r);
        }
    }
    let any_converged = best.as_ref().is_some_and(|b| b.converged);
    if !any_converged {
        let from = best.as_ref().map(|b| b.sigma.clone()).unwrap_or_else(|| starts[0].clone());
        let r = nelder_mead_solve(p, &from, 20_000);
        total_iters += r.iterations;
        let converged = r.converged;
        pick(&mut best, r);
        if let Some(b) = best.as_mut() {
            b.converged = b.converged || converged;
        }
    }
    let mut out = best.expect("at least one start");
    out.iterations = total_iters;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{random_density, seeded_rng};

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0))))
    }

    #[test]
    fn hermitian_packing_round_trip() {
        let mut rng = seeded_rng(1);
        let m = crate::states::random_hermitian(&mut rng, 3).into_matrix();
        let back = unpack_hermitian(&pack_hermitian(&m), 3);
        assert!(max_abs(&(back - m)) < 1e-15);
    }

    #[test]
    fn commuting_problem_is_solved_in_one_step() {
        // min_q Σ_y c_y q_y^b with b < 0 has q ∝ c^{1/(1−b)}.
        let c: [f64; 3] = [0.2, 0.5, 0.3];
        let b = -0.4;
        let terms = vec![(0..3)
            .map(|y| {
                let mut k = CMatrix::zeros(3, 1);
                k[(y, 0)] = C64::new(c[y].sqrt(), 0.0);
                k
            })
            .collect()];
        let p = SigmaProblem {
            terms,
            b,
            s: 1.0,
            sense: Sense::Minimize,
            dim: 3,
        };
        let r = fixed_point(&p, &diag(&[1.0 / 3.0; 3]), &SolveOptions::default());
        assert!(r.converged);
        assert!(r.iterations <= 3);
        let expect = c.iter().map(|v: &f64| v.powf(1.0 / (1.0 - b))).sum::<f64>().powf(1.0 - b);
        assert!((r.value - expect).abs() < 1e-13);
    }

    #[test]
    fn fixed_point_agrees_with_nelder_mead() {
        let mut rng = seeded_rng(2);
        for _ in 0..3 {
            let k = crate::linalg::psd_power(random_density(&mut rng, 4).matrix(), 0.5, Default::default());
            let terms = vec![vec![k.rows(0, 2).into_owned(), k.rows(2, 2).into_owned()]];
            let p = SigmaProblem {
                terms,
                b: -0.3,
                s: 0.7,
                sense: Sense::Minimize,
                dim: 2,
            };
            let start = diag(&[0.5, 0.5]);
            let fp = fixed_point(&p, &start, &SolveOptions::default());
            let nm = nelder_mead_solve(&p, &start, 20_000);
            assert!(fp.converged);
            assert!(fp.value <= nm.value + 1e-12);
            assert!((fp.value - nm.value).abs() < 1e-9);
        }
    }
}
