//! Dense Hermitian linear algebra with explicit support handling.
//!
//! Every entropy formula in this crate takes negative powers and logarithms
//! "on the support" of a positive operator, so rank detection has to be
//! consistent everywhere. [`SupportThreshold`] is the single rule used for
//! that: an eigenvalue `λ` counts as zero iff `λ <= max(abs, rel * λ_max)`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Max-norm Hermiticity defect accepted by [`Hermitian::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted for operators that must be PSD.
pub const PSD_TOL: f64 = 1e-10;
/// Relative eigenvalue gap below which eigenvalues share a spectral projector.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Rule deciding which eigenvalues of a PSD operator are treated as zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportThreshold {
    pub abs: f64,
    pub rel: f64,
}

impl Default for SupportThreshold {
    fn default() -> Self {
        SupportThreshold {
            abs: 1e-12,
            rel: 1e-10,
        }
    }
}

impl SupportThreshold {
    pub fn cutoff(&self, lambda_max: f64) -> f64 {
        self.abs.max(self.rel * lambda_max)
    }
}

/// A dense Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian {
    m: CMatrix,
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

/// Spectral projectors of an operator after merging nearly equal eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralProjectors {
    pub distinct_values: Vec<f64>,
    pub projectors: Vec<Hermitian>,
    pub cluster_tol: f64,
}

/// Scalar function applied through the spectral calculus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixFn {
    Power(f64),
    Log,
    Exp,
}

/// Whether a matrix function acts on the full space or only on the support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FnMode {
    Full,
    OnSupport,
}

/// Tensor factor selector for [`partial_trace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigendecomposition of a matrix assumed Hermitian (it is symmetrized first).
pub(crate) fn eigh_raw(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 1 {
        return (vec![m[(0, 0)].re], CMatrix::identity(1, 1));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vecs)
}

/// `U diag(values) U†`.
pub(crate) fn from_spectrum(vecs: &CMatrix, values: &[f64]) -> CMatrix {
    let mut scaled = vecs.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    let out = &scaled * vecs.adjoint();
    hermitian_part(&out)
}

pub(crate) fn map_spectrum(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = eigh_raw(m);
    let mapped: Vec<f64> = vals.into_iter().map(f).collect();
    from_spectrum(&vecs, &mapped)
}

/// `p`-th power on the support of a PSD matrix; kernel maps to zero.
pub(crate) fn psd_power(m: &CMatrix, p: f64, thr: SupportThreshold) -> CMatrix {
    let (vals, vecs) = eigh_raw(m);
    let cut = thr.cutoff(vals.last().copied().unwrap_or(0.0).max(0.0));
    let mapped: Vec<f64> = vals
        .iter()
        .map(|&v| if v > cut { v.powf(p) } else { 0.0 })
        .collect();
    from_spectrum(&vecs, &mapped)
}

/// Logarithm on the support of a PSD matrix; kernel maps to zero.
pub(crate) fn psd_log(m: &CMatrix, thr: SupportThreshold) -> CMatrix {
    let (vals, vecs) = eigh_raw(m);
    let cut = thr.cutoff(vals.last().copied().unwrap_or(0.0).max(0.0));
    let mapped: Vec<f64> = vals
        .iter()
        .map(|&v| if v > cut { v.ln() } else { 0.0 })
        .collect();
    from_spectrum(&vecs, &mapped)
}

pub(crate) fn herm_exp(m: &CMatrix) -> CMatrix {
    map_spectrum(m, f64::exp)
}

/// Isometry whose columns span the support of a PSD matrix, with the
/// corresponding positive eigenvalues.
pub(crate) fn support_basis(m: &CMatrix, thr: SupportThreshold) -> (CMatrix, Vec<f64>) {
    let (vals, vecs) = eigh_raw(m);
    let cut = thr.cutoff(vals.last().copied().unwrap_or(0.0).max(0.0));
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > cut).collect();
    let mut basis = CMatrix::zeros(m.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &vecs.column(i));
    }
    (basis, keep.iter().map(|&i| vals[i]).collect())
}

pub(crate) fn support_proj_raw(m: &CMatrix, thr: SupportThreshold) -> CMatrix {
    let (basis, _) = support_basis(m, thr);
    &basis * basis.adjoint()
}

/// Trace of `m^s` for PSD `m` (zero eigenvalues contribute nothing for `s > 0`).
pub(crate) fn trace_psd_power(m: &CMatrix, s: f64) -> f64 {
    let (vals, _) = eigh_raw(m);
    vals.iter().map(|&v| if v > 0.0 { v.powf(s) } else { 0.0 }).sum()
}

pub(crate) fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// `true` iff `supp(a) ⊆ supp(b)` for PSD `a`, `b`.
pub(crate) fn support_contained(a: &CMatrix, b: &CMatrix, thr: SupportThreshold) -> bool {
    let pa = support_proj_raw(a, thr);
    let pb = support_proj_raw(b, thr);
    let n = a.nrows();
    let leak = (CMatrix::identity(n, n) - pb) * pa;
    max_abs(&leak) <= 1e-7
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub(crate) fn partial_trace_raw(m: &CMatrix, da: usize, db: usize, traced: Subsystem) -> CMatrix {
    match traced {
        Subsystem::B => CMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Subsystem::A => CMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    }
}

impl Hermitian {
    /// Validates squareness, nonzero dimension and Hermiticity.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::validation(format!(
                "operator must be square with dim >= 1, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = max_abs(&(&m - m.adjoint()));
        if !defect.is_finite() || defect > HERMITICITY_TOL {
            return Err(Error::validation(format!(
                "operator is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Hermitian {
            m: hermitian_part(&m),
        })
    }

    /// Wraps an internally computed matrix, removing round-off anti-Hermitian parts.
    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Hermitian {
            m: hermitian_part(&m),
        }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::validation("matrix rows must all have length equal to the row count"));
        }
        Hermitian::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Hermitian {
            m: CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(diag[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn identity(d: usize) -> Self {
        Hermitian {
            m: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Hermitian {
            m: CMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.m)
    }

    pub fn eigh(&self) -> SpectralDecomposition {
        let (eigenvalues, eigenvectors) = eigh_raw(&self.m);
        SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh_raw(&self.m).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    pub fn scale(&self, c: f64) -> Hermitian {
        Hermitian {
            m: &self.m * C64::new(c, 0.0),
        }
    }

    pub fn add(&self, other: &Hermitian) -> Hermitian {
        Hermitian {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &Hermitian) -> Hermitian {
        Hermitian {
            m: &self.m - &other.m,
        }
    }

    /// `U A U†`.
    pub fn conjugate(&self, u: &CMatrix) -> Hermitian {
        Hermitian::from_matrix_unchecked(u * &self.m * u.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Hermitian) -> f64 {
        max_abs(&(&self.m - &other.m))
    }

    pub fn commutator_norm(&self, other: &Hermitian) -> f64 {
        max_abs(&(&self.m * &other.m - &other.m * &self.m))
    }

    pub fn tensor(&self, other: &Hermitian) -> Hermitian {
        tensor(self, other)
    }
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        from_spectrum(&self.eigenvectors, &self.eigenvalues)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

impl SpectralProjectors {
    /// `|spec(·)|`, the number of distinct eigenvalues after clustering.
    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }
}

/// Eigendecomposition plus spectral projectors, merging eigenvalues whose
/// consecutive gap is at most `cluster_tol * max(1, ‖A‖)`.
pub fn eigh_cluster(a: &Hermitian, cluster_tol: f64) -> (SpectralDecomposition, SpectralProjectors) {
    let spec = a.eigh();
    let n = spec.dim();
    let scale = spec
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let gap = cluster_tol * scale;
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..n {
        if spec.eigenvalues[i] - spec.eigenvalues[i - 1] <= gap {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    let mut distinct_values = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    for g in &groups {
        let mean = g.iter().map(|&i| spec.eigenvalues[i]).sum::<f64>() / g.len() as f64;
        distinct_values.push(mean);
        let mut basis = CMatrix::zeros(n, g.len());
        for (c, &i) in g.iter().enumerate() {
            basis.set_column(c, &spec.eigenvectors.column(i));
        }
        projectors.push(Hermitian::from_matrix_unchecked(&basis * basis.adjoint()));
    }
    (
        spec,
        SpectralProjectors {
            distinct_values,
            projectors,
            cluster_tol,
        },
    )
}

/// Applies `f` through the spectral calculus.
///
/// Negative powers and the logarithm require `FnMode::OnSupport` and a PSD
/// argument; eigenvalues under the support threshold map to zero. The
/// exponential is only defined in full mode.
pub fn matrix_function(a: &Hermitian, f: MatrixFn, mode: FnMode) -> Result<Hermitian> {
    matrix_function_with(a, f, mode, SupportThreshold::default())
}

pub fn matrix_function_with(
    a: &Hermitian,
    f: MatrixFn,
    mode: FnMode,
    thr: SupportThreshold,
) -> Result<Hermitian> {
    let spec = a.eigh();
    let min = spec.eigenvalues[0];
    let max = *spec.eigenvalues.last().unwrap();
    let needs_psd = !matches!(f, MatrixFn::Exp);
    if needs_psd && min < -PSD_TOL {
        return Err(Error::domain(format!(
            "{f:?} requires a PSD argument, found eigenvalue {min:.3e}"
        )));
    }
    let cut = thr.cutoff(max.max(0.0));
    let on_support = mode == FnMode::OnSupport;
    let mapped: Vec<f64> = match f {
        MatrixFn::Exp => {
            if on_support {
                return Err(Error::domain("the exponential is evaluated in full mode only"));
            }
            spec.eigenvalues.iter().map(|v| v.exp()).collect()
        }
        MatrixFn::Log => {
            if !on_support {
                return Err(Error::domain("the logarithm must be evaluated on the support"));
            }
            spec.eigenvalues
                .iter()
                .map(|&v| if v > cut { v.ln() } else { 0.0 })
                .collect()
        }
        MatrixFn::Power(p) => {
            if p < 0.0 && !on_support {
                return Err(Error::domain("negative powers must be evaluated on the support"));
            }
            spec.eigenvalues
                .iter()
                .map(|&v| {
                    if v > cut {
                        v.powf(p)
                    } else if on_support || p > 0.0 {
                        0.0
                    } else {
                        // p == 0 in full mode: the identity.
                        1.0
                    }
                })
                .collect()
        }
    };
    Ok(Hermitian::from_matrix_unchecked(from_spectrum(
        &spec.eigenvectors,
        &mapped,
    )))
}

/// Schatten `p`-norm of a general square matrix; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(a: &CMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::domain(format!("Schatten index must be >= 1, got {p}")));
    }
    let sv = a.clone().singular_values();
    if p.is_infinite() {
        return Ok(sv.iter().fold(0.0, |acc: f64, &s| acc.max(s)));
    }
    Ok(sv.iter().map(|&s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

pub fn tensor(a: &Hermitian, b: &Hermitian) -> Hermitian {
    Hermitian {
        m: kron(&a.m, &b.m),
    }
}

/// Traces out the `traced` factor of an operator on `C^{da} ⊗ C^{db}`.
pub fn partial_trace(a: &Hermitian, da: usize, db: usize, traced: Subsystem) -> Result<Hermitian> {
    if da == 0 || db == 0 || da * db != a.dim() {
        return Err(Error::validation(format!(
            "dimension {} does not factor as {da} x {db}",
            a.dim()
        )));
    }
    Ok(Hermitian::from_matrix_unchecked(partial_trace_raw(
        &a.m, da, db, traced,
    )))
}

/// Pinching map `Σ_i Π_i A Π_i`.
pub fn pinch(a: &Hermitian, omega: &SpectralProjectors) -> Result<Hermitian> {
    if omega.is_empty() || omega.dim() != a.dim() {
        return Err(Error::validation("pinching projectors do not match the operator dimension"));
    }
    let mut out = CMatrix::zeros(a.dim(), a.dim());
    for p in &omega.projectors {
        out += p.matrix() * &a.m * p.matrix();
    }
    Ok(Hermitian::from_matrix_unchecked(out))
}

/// Projector onto the eigenvectors of a PSD operator above the support threshold.
pub fn support_projector(a: &Hermitian) -> Result<Hermitian> {
    support_projector_with(a, SupportThreshold::default())
}

pub fn support_projector_with(a: &Hermitian, thr: SupportThreshold) -> Result<Hermitian> {
    let min = a.min_eigenvalue();
    if min < -PSD_TOL {
        return Err(Error::domain(format!(
            "support projector requires a PSD operator, found eigenvalue {min:.3e}"
        )));
    }
    Ok(Hermitian::from_matrix_unchecked(support_proj_raw(&a.m, thr)))
}

/// Projector onto `supp(P) ∩ supp(Q)`, computed as `I − supp(P^⊥ + Q^⊥)`.
pub fn intersection_projector(p: &Hermitian, q: &Hermitian) -> Result<Hermitian> {
    if p.dim() != q.dim() {
        return Err(Error::validation("projectors have different dimensions"));
    }
    let n = p.dim();
    let id = CMatrix::identity(n, n);
    let kernels = (&id - &p.m) + (&id - &q.m);
    let (vals, _) = eigh_raw(&kernels);
    let out = if vals.last().copied().unwrap_or(0.0) <= 1e-9 {
        id
    } else {
        &id - support_proj_raw(&kernels, SupportThreshold { abs: 1e-9, rel: 1e-9 })
    };
    Ok(Hermitian::from_matrix_unchecked(out))
}
