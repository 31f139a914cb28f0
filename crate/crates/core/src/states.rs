//! Density operators, classical-quantum states and seeded random generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{
    eigh_raw, kron, max_abs, partial_trace_raw, support_contained, trace_re, CMatrix, Hermitian,
    Subsystem, SupportThreshold, C64, PSD_TOL,
};

/// Trace deviation accepted for normalized states.
pub const TRACE_TOL: f64 = 1e-10;
/// Off-diagonal magnitude below which a conditional state counts as diagonal.
pub const CLASSICAL_TOL: f64 = 1e-12;

/// The random generator used throughout the crate; deterministic given a seed.
pub type StateRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> StateRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A unit-trace positive semidefinite operator on a tensor product of factors.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    op: Hermitian,
    dims: Vec<usize>,
}

impl DensityOperator {
    pub fn new(op: Hermitian, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::validation("factor dimensions must be positive"));
        }
        if dims.iter().product::<usize>() != op.dim() {
            return Err(Error::validation(format!(
                "factor dimensions {dims:?} do not multiply to {}",
                op.dim()
            )));
        }
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::validation(format!("trace is {tr}, expected 1")));
        }
        let min = op.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::validation(format!(
                "operator is not positive semidefinite (eigenvalue {min:.3e})"
            )));
        }
        Ok(DensityOperator { op, dims })
    }

    /// Single-factor state.
    pub fn from_hermitian(op: Hermitian) -> Result<Self> {
        let d = op.dim();
        DensityOperator::new(op, vec![d])
    }

    /// Normalizes an internally computed PSD matrix without validation.
    pub(crate) fn from_psd_unchecked(m: CMatrix, dims: Vec<usize>) -> Self {
        let tr = trace_re(&m);
        DensityOperator {
            op: Hermitian::from_matrix_unchecked(m / C64::new(tr, 0.0)),
            dims,
        }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        DensityOperator::from_hermitian(Hermitian::from_real_diagonal(probs))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityOperator {
            op: Hermitian::identity(d).scale(1.0 / d as f64),
            dims: vec![d],
        }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized, nonzero) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        let norm = v.norm();
        if psi.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::validation("pure state vector must be nonzero"));
        }
        let v = v / C64::new(norm, 0.0);
        let m = &v * v.adjoint();
        Ok(DensityOperator {
            op: Hermitian::from_matrix_unchecked(m),
            dims: vec![psi.len()],
        })
    }

    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        DensityOperator::new(self.op, dims)
    }

    pub fn op(&self) -> &Hermitian {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Splits the factors as `(Π dims[..k], Π dims[k..])`.
    pub fn split_at(&self, k: usize) -> (usize, usize) {
        let a = self.dims[..k].iter().product();
        let b = self.dims[k..].iter().product();
        (a, b)
    }

    /// `(d_A, d_E)` for a bipartite reading with the last factor as `E`.
    pub fn bipartite_dims(&self) -> (usize, usize) {
        if self.dims.len() < 2 {
            (1, self.dim())
        } else {
            self.split_at(self.dims.len() - 1)
        }
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityOperator {
            op: self.op.tensor(&other.op),
            dims,
        }
    }

    /// Reduced state on the first `k` factors.
    pub fn reduce_first(&self, k: usize) -> DensityOperator {
        let (a, b) = self.split_at(k);
        DensityOperator {
            op: Hermitian::from_matrix_unchecked(partial_trace_raw(self.matrix(), a, b, Subsystem::B)),
            dims: self.dims[..k].to_vec(),
        }
    }

    /// Reduced state on the factors from `k` onwards.
    pub fn reduce_last(&self, k: usize) -> DensityOperator {
        let (a, b) = self.split_at(k);
        DensityOperator {
            op: Hermitian::from_matrix_unchecked(partial_trace_raw(self.matrix(), a, b, Subsystem::A)),
            dims: self.dims[k..].to_vec(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        let m = self.matrix();
        let n = m.nrows();
        (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].norm() <= CLASSICAL_TOL))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix().diagonal().iter().map(|z| z.re).collect()
    }

    pub fn purity(&self) -> f64 {
        let m = self.matrix();
        trace_re(&(m * m))
    }
}

/// A classical-quantum state `Σ_x p(x)|x⟩⟨x| ⊗ ρ_E(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CQState {
    probs: Vec<f64>,
    cond: Vec<DensityOperator>,
    d_e: usize,
    classical: bool,
}

impl CQState {
    pub fn new(probs: Vec<f64>, cond: Vec<DensityOperator>) -> Result<Self> {
        if probs.is_empty() || probs.len() != cond.len() {
            return Err(Error::validation(
                "need one conditional state per classical symbol, at least one symbol",
            ));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::validation("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::validation(format!("probabilities sum to {total}, expected 1")));
        }
        let d_e = cond[0].dim();
        if cond.iter().any(|c| c.dim() != d_e) {
            return Err(Error::validation("conditional states have different dimensions"));
        }
        let classical = cond.iter().all(DensityOperator::is_diagonal);
        let cond = cond
            .into_iter()
            .map(|c| DensityOperator {
                op: c.op,
                dims: vec![d_e],
            })
            .collect();
        Ok(CQState {
            probs,
            cond,
            d_e,
            classical,
        })
    }

    /// Classical state from a joint table `p[x][e]`.
    pub fn from_joint(joint: &[Vec<f64>]) -> Result<Self> {
        if joint.is_empty() {
            return Err(Error::validation("joint distribution is empty"));
        }
        let d_e = joint[0].len();
        if d_e == 0 || joint.iter().any(|r| r.len() != d_e) {
            return Err(Error::validation("joint distribution rows must have equal positive length"));
        }
        let mut probs = Vec::with_capacity(joint.len());
        let mut cond = Vec::with_capacity(joint.len());
        for row in joint {
            if row.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::validation("joint probabilities must be finite and nonnegative"));
            }
            let px: f64 = row.iter().sum();
            probs.push(px);
            let c = if px > 0.0 {
                row.iter().map(|v| v / px).collect()
            } else {
                vec![1.0 / d_e as f64; d_e]
            };
            cond.push(DensityOperator::from_diagonal(&c)?);
        }
        CQState::new(probs, cond)
    }

    pub(crate) fn from_parts_unchecked(probs: Vec<f64>, cond: Vec<DensityOperator>) -> Self {
        let d_e = cond[0].dim();
        let classical = cond.iter().all(DensityOperator::is_diagonal);
        CQState {
            probs,
            cond,
            d_e,
            classical,
        }
    }

    pub fn x_dim(&self) -> usize {
        self.probs.len()
    }

    pub fn e_dim(&self) -> usize {
        self.d_e
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cond(&self) -> &[DensityOperator] {
        &self.cond
    }

    /// All conditional states are diagonal in a common basis.
    pub fn is_classical(&self) -> bool {
        self.classical
    }

    /// Joint table `p(x, e)` for classical states.
    pub fn joint_table(&self) -> Option<Vec<Vec<f64>>> {
        self.classical.then(|| {
            self.probs
                .iter()
                .zip(&self.cond)
                .map(|(p, c)| c.diagonal().iter().map(|v| p * v).collect())
                .collect()
        })
    }

    /// `ρ_XE^{⊗n}`, indexing `X^n` tuples with the first copy most significant.
    pub fn tensor_power(&self, n: usize) -> CQState {
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        out
    }

    pub fn tensor(&self, other: &CQState) -> CQState {
        let mut probs = Vec::with_capacity(self.x_dim() * other.x_dim());
        let mut cond = Vec::with_capacity(self.x_dim() * other.x_dim());
        for (p, c) in self.probs.iter().zip(&self.cond) {
            for (q, d) in other.probs.iter().zip(&other.cond) {
                probs.push(p * q);
                let t = c.tensor(d);
                cond.push(DensityOperator {
                    dims: vec![t.dim()],
                    op: t.op,
                });
            }
        }
        CQState {
            probs,
            cond,
            d_e: self.d_e * other.d_e,
            classical: self.classical && other.classical,
        }
    }
}

/// Block-diagonal `ρ_XE` on `d_X · d_E`, block `x` equal to `p(x) ρ_E(x)`.
pub fn embed(cq: &CQState) -> DensityOperator {
    let (dx, de) = (cq.x_dim(), cq.e_dim());
    let mut m = CMatrix::zeros(dx * de, dx * de);
    for (x, (p, c)) in cq.probs.iter().zip(&cq.cond).enumerate() {
        let block = c.matrix() * C64::new(*p, 0.0);
        m.view_mut((x * de, x * de), (de, de)).copy_from(&block);
    }
    DensityOperator {
        op: Hermitian::from_matrix_unchecked(m),
        dims: vec![dx, de],
    }
}

/// `ρ_E = Σ_x p(x) ρ_E(x)`.
pub fn marginal_e(cq: &CQState) -> DensityOperator {
    let de = cq.e_dim();
    let mut m = CMatrix::zeros(de, de);
    for (p, c) in cq.probs.iter().zip(&cq.cond) {
        m += c.matrix() * C64::new(*p, 0.0);
    }
    DensityOperator {
        op: Hermitian::from_matrix_unchecked(m),
        dims: vec![de],
    }
}

pub fn marginal_x(cq: &CQState) -> Vec<f64> {
    cq.probs.clone()
}

/// `(1−ε)ρ + ε I/d`.
pub fn depolarize(rho: &DensityOperator, eps: f64) -> Result<DensityOperator> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::domain(format!("depolarizing weight must lie in (0, 1], got {eps}")));
    }
    let d = rho.dim();
    let m = rho.matrix() * C64::new(1.0 - eps, 0.0)
        + CMatrix::identity(d, d) * C64::new(eps / d as f64, 0.0);
    Ok(DensityOperator {
        op: Hermitian::from_matrix_unchecked(m),
        dims: rho.dims.clone(),
    })
}

/// Purification on `dims ⊗ C^{d}` with `d` the full input dimension:
/// `|ψ⟩ = Σ_i √λ_i |v_i⟩|i⟩`, eigenvalues in descending order.
pub fn purify(rho: &DensityOperator) -> DensityOperator {
    let d = rho.dim();
    let (vals, vecs) = eigh_raw(rho.matrix());
    let cut = SupportThreshold::default().cutoff(vals[d - 1]);
    let mut psi = nalgebra::DVector::<C64>::zeros(d * d);
    for (i, k) in (0..d).rev().enumerate() {
        if vals[k] <= cut {
            continue;
        }
        let w = vals[k].sqrt();
        for a in 0..d {
            psi[a * d + i] += vecs[(a, k)] * w;
        }
    }
    let norm = psi.norm();
    let psi = psi / C64::new(norm, 0.0);
    let mut dims = rho.dims.clone();
    dims.push(d);
    DensityOperator {
        op: Hermitian::from_matrix_unchecked(&psi * psi.adjoint()),
        dims,
    }
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Ginibre-distributed (GUE-like) Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Hermitian {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian_complex(rng));
    Hermitian::from_matrix_unchecked(g)
}

/// `GG†/Tr` with `G` a complex Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityOperator {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian_complex(rng));
    DensityOperator::from_psd_unchecked(&g * g.adjoint(), vec![d])
}

pub fn random_density_seeded(seed: u64, d: usize) -> DensityOperator {
    random_density(&mut seeded_rng(seed), d)
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian_complex(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Dirichlet(1, …, 1) probabilities.
pub fn random_probs<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn random_cq<R: Rng + ?Sized>(rng: &mut R, x_dim: usize, d_e: usize) -> CQState {
    let probs = random_probs(rng, x_dim);
    let cond = (0..x_dim).map(|_| random_density(rng, d_e)).collect();
    CQState::from_parts_unchecked(probs, cond)
}

pub fn random_cq_seeded(seed: u64, x_dim: usize, d_e: usize) -> CQState {
    random_cq(&mut seeded_rng(seed), x_dim, d_e)
}

/// Random classical CQ state drawn from a Dirichlet joint distribution.
pub fn random_classical<R: Rng + ?Sized>(rng: &mut R, x_dim: usize, d_e: usize) -> CQState {
    let flat = random_probs(rng, x_dim * d_e);
    let joint: Vec<Vec<f64>> = flat.chunks(d_e).map(|c| c.to_vec()).collect();
    CQState::from_joint(&joint).expect("Dirichlet samples form a valid joint distribution")
}

/// `π_X ⊗ σ_E`.
pub fn uniform_product(x_dim: usize, sigma: &DensityOperator) -> CQState {
    CQState::from_parts_unchecked(vec![1.0 / x_dim as f64; x_dim], vec![sigma.clone(); x_dim])
}

/// `true` iff `supp(a) ⊆ supp(b)` within the default support threshold.
pub fn support_included(a: &DensityOperator, b: &Hermitian) -> bool {
    support_contained(a.matrix(), b.matrix(), SupportThreshold::default())
}

/// Operator-norm distance used by state comparisons.
pub fn max_entry_distance(a: &DensityOperator, b: &DensityOperator) -> f64 {
    max_abs(&(a.matrix() - b.matrix()))
}

/// `I_A ⊗ σ` as a matrix.
pub(crate) fn id_tensor(da: usize, sigma: &CMatrix) -> CMatrix {
    kron(&CMatrix::identity(da, da), sigma)
}

/// The caption state of the exponent-curve figure: `p(x, e) = (0.1, 0.1; 0.7, 0.1)`.
pub fn fig1_state() -> CQState {
    CQState::from_joint(&[vec![0.1, 0.1], vec![0.7, 0.1]]).expect("valid constant state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_trace, Subsystem};

    #[test]
    fn embed_examples() {
        let sigma = random_density_seeded(1, 3);
        let one = CQState::new(vec![1.0], vec![sigma.clone()]).unwrap();
        assert!(embed(&one).op().max_abs_diff(sigma.op()) < 1e-15);
        let fig = fig1_state();
        let e = embed(&fig);
        assert!(e.op().max_abs_diff(&Hermitian::from_real_diagonal(&[0.1, 0.1, 0.7, 0.1])) < 1e-15);
        assert!(fig.is_classical());
    }

    #[test]
    fn marginals() {
        let fig = fig1_state();
        let pe = marginal_e(&fig).diagonal();
        assert!((pe[0] - 0.8).abs() < 1e-15 && (pe[1] - 0.2).abs() < 1e-15);
        let px = marginal_x(&fig);
        assert!((px[0] - 0.2).abs() < 1e-15 && (px[1] - 0.8).abs() < 1e-15);
        let sigma = random_density_seeded(2, 2);
        let prod = uniform_product(3, &sigma);
        assert!(max_entry_distance(&marginal_e(&prod), &sigma) < 1e-15);
        let cq = random_cq_seeded(3, 3, 2);
        let via_embed = partial_trace(embed(&cq).op(), 3, 2, Subsystem::A).unwrap();
        assert!(via_embed.max_abs_diff(marginal_e(&cq).op()) < 1e-14);
        assert!((marginal_e(&cq).op().trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn depolarize_examples() {
        let rho = random_density_seeded(4, 3);
        let full = depolarize(&rho, 1.0).unwrap();
        assert!(max_entry_distance(&full, &DensityOperator::maximally_mixed(3)) < 1e-15);
        let tiny = depolarize(&rho, 1e-9).unwrap();
        assert!(max_entry_distance(&tiny, &rho) < 1e-8);
        let pure = DensityOperator::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let d = depolarize(&pure, 0.3).unwrap();
        assert!(d.op().min_eigenvalue() >= 0.1 - 1e-12);
        assert!(matches!(depolarize(&rho, 0.0), Err(Error::Domain(_))));
        assert!(depolarize(&rho, 1.5).is_err());
    }

    #[test]
    fn purify_examples() {
        let psi = DensityOperator::pure(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let p = purify(&psi);
        let zero = DensityOperator::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(max_entry_distance(&p.clone().with_dims(vec![4]).unwrap(), &psi.tensor(&zero).with_dims(vec![4]).unwrap()) < 1e-12);
        let mixed = purify(&DensityOperator::maximally_mixed(2));
        assert!((mixed.purity() - 1.0).abs() < 1e-12);
        let red = mixed.reduce_last(1);
        let vals = red.op().eigenvalues();
        assert!((vals[0] - 0.5).abs() < 1e-12 && (vals[1] - 0.5).abs() < 1e-12);
        for seed in 0..5 {
            let rho = random_density_seeded(seed, 4).with_dims(vec![2, 2]).unwrap();
            let pur = purify(&rho);
            assert_eq!(pur.dims(), &[2, 2, 4]);
            assert!((pur.purity() - 1.0).abs() < 1e-10);
            assert!(max_entry_distance(&pur.reduce_first(2), &rho) < 1e-10);
        }
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        assert_eq!(random_density_seeded(9, 3), random_density_seeded(9, 3));
        assert_eq!(random_cq_seeded(9, 2, 2), random_cq_seeded(9, 2, 2));
        let rho = random_density_seeded(10, 3);
        assert!(DensityOperator::new(rho.op().clone(), vec![3]).is_ok());
    }

    #[test]
    fn random_mean_is_maximally_mixed() {
        let mut rng = seeded_rng(12);
        let mut acc = CMatrix::zeros(2, 2);
        for _ in 0..1000 {
            acc += random_density(&mut rng, 2).matrix();
        }
        acc /= C64::new(1000.0, 0.0);
        assert!(max_abs(&(acc - CMatrix::identity(2, 2) * C64::new(0.5, 0.0))) < 0.05);
    }

    #[test]
    fn rejects_invalid_states() {
        assert!(DensityOperator::from_diagonal(&[0.5, 0.6]).is_err());
        assert!(DensityOperator::from_diagonal(&[1.2, -0.2]).is_err());
        let ok = DensityOperator::maximally_mixed(2);
        assert!(CQState::new(vec![0.5, 0.6], vec![ok.clone(), ok.clone()]).is_err());
        assert!(CQState::new(vec![1.0], vec![ok.clone(), ok]).is_err());
    }

    #[test]
    fn support_lemma_holds() {
        let mut rng = seeded_rng(13);
        for _ in 0..10 {
            let cq = random_cq(&mut rng, 3, 2);
            let joint = embed(&cq);
            let bound = Hermitian::from_matrix_unchecked(id_tensor(3, marginal_e(&cq).matrix()));
            assert!(support_included(&joint, &bound));
        }
    }

    #[test]
    fn tensor_power_ordering() {
        let fig = fig1_state();
        let t = fig.tensor_power(2);
        assert_eq!(t.x_dim(), 4);
        assert!((t.probs()[1] - 0.2 * 0.8).abs() < 1e-15);
        let d = t.cond()[1].diagonal();
        // x = (0, 1): ρ_E(0) ⊗ ρ_E(1) = diag(0.5, 0.5) ⊗ diag(0.875, 0.125)
        assert!((d[0] - 0.4375).abs() < 1e-15 && (d[1] - 0.0625).abs() < 1e-15);
    }
}
