use crate::error::{Error, Result};
use crate::linalg::{kron, partial_trace_raw, trace_re, CMatrix, Subsystem, C64};
use crate::states::{CQState, DensityOperator, CLASSICAL_TOL, TRACE_TOL};

/// A state `⊕_x ρ_x` on `X ⊗ B ⊗ E` that is block diagonal in a classical
/// register `X`. Blocks carry their weights (`Tr ρ_x = p(x)`).
///
/// A CQ state is the case `d_b = 1`; a general bipartite `ρ_AE` is a single
/// block with `d_b = d_A`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockState {
    d_b: usize,
    d_e: usize,
    blocks: Vec<CMatrix>,
    classical: bool,
}

/// Anything that can be read as a [`BlockState`] with a distinguished `E`.
pub trait AsBlockState {
    fn block_state(&self) -> BlockState;
}

impl AsBlockState for BlockState {
    fn block_state(&self) -> BlockState {
        self.clone()
    }
}

impl AsBlockState for CQState {
    fn block_state(&self) -> BlockState {
        BlockState::from_cq(self)
    }
}

/// Bipartite reading with the last tensor factor as `E`.
impl AsBlockState for DensityOperator {
    fn block_state(&self) -> BlockState {
        BlockState::from_bipartite(self)
    }
}

fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].norm() <= CLASSICAL_TOL))
}

impl BlockState {
    /// Blocks `p(x) ρ_BE(x)`; each `ρ_BE(x)` must be a state on `d_b · d_e`.
    pub fn new(d_b: usize, d_e: usize, probs: &[f64], states: &[DensityOperator]) -> Result<Self> {
        if probs.is_empty() || probs.len() != states.len() {
            return Err(Error::validation("need one block state per probability"));
        }
        if d_b == 0 || d_e == 0 {
            return Err(Error::validation("register dimensions must be positive"));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::validation("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::validation(format!("probabilities sum to {total}, expected 1")));
        }
        if states.iter().any(|s| s.dim() != d_b * d_e) {
            return Err(Error::validation("block states must live on d_b * d_e"));
        }
        let blocks = probs
            .iter()
            .zip(states)
            .map(|(p, s)| s.matrix() * C64::new(*p, 0.0))
            .collect();
        Ok(Self::from_blocks(d_b, d_e, blocks))
    }

    pub(crate) fn from_blocks(d_b: usize, d_e: usize, blocks: Vec<CMatrix>) -> Self {
        let classical = blocks.iter().all(is_diagonal);
        BlockState {
            d_b,
            d_e,
            blocks,
            classical,
        }
    }

    pub fn from_cq(cq: &CQState) -> Self {
        let blocks = cq
            .probs()
            .iter()
            .zip(cq.cond())
            .map(|(p, c)| c.matrix() * C64::new(*p, 0.0))
            .collect();
        BlockState {
            d_b: 1,
            d_e: cq.e_dim(),
            blocks,
            classical: cq.is_classical(),
        }
    }

    pub fn from_bipartite(rho: &DensityOperator) -> Self {
        let (d_a, d_e) = rho.bipartite_dims();
        Self::from_blocks(d_a, d_e, vec![rho.matrix().clone()])
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    /// Dimension of the conditioned system `A = X ⊗ B`.
    pub fn a_dim(&self) -> usize {
        self.blocks.len() * self.d_b
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn weights(&self) -> Vec<f64> {
        self.blocks.iter().map(trace_re).collect()
    }

    /// Every block is diagonal, so the state is a joint distribution.
    pub fn is_classical(&self) -> bool {
        self.classical
    }

    pub fn marginal_e(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.d_e, self.d_e);
        for b in &self.blocks {
            m += partial_trace_raw(b, self.d_b, self.d_e, Subsystem::A);
        }
        m
    }

    pub fn marginal_e_state(&self) -> DensityOperator {
        DensityOperator::from_psd_unchecked(self.marginal_e(), vec![self.d_e])
    }

    /// The full block-diagonal operator on `X ⊗ B ⊗ E`, dims `[d_X·d_B, d_E]`.
    pub fn embed(&self) -> DensityOperator {
        let m = self.d_b * self.d_e;
        let n = self.blocks.len() * m;
        let mut full = CMatrix::zeros(n, n);
        for (x, b) in self.blocks.iter().enumerate() {
            full.view_mut((x * m, x * m), (m, m)).copy_from(b);
        }
        DensityOperator::from_psd_unchecked(full, vec![self.a_dim(), self.d_e])
    }

    /// Joint table `p[(x, b)][e]` for classical states.
    pub fn joint_table(&self) -> Option<Vec<Vec<f64>>> {
        if !self.classical {
            return None;
        }
        let mut rows = Vec::with_capacity(self.a_dim());
        for blk in &self.blocks {
            for b in 0..self.d_b {
                rows.push(
                    (0..self.d_e)
                        .map(|e| blk[(b * self.d_e + e, b * self.d_e + e)].re.max(0.0))
                        .collect(),
                );
            }
        }
        Some(rows)
    }

    /// Sums blocks with equal image under `map`; empty images are dropped.
    pub fn coarse_grain(&self, map: &[usize]) -> Result<BlockState> {
        if map.len() != self.blocks.len() {
            return Err(Error::validation(format!(
                "map has {} entries for {} blocks",
                map.len(),
                self.blocks.len()
            )));
        }
        let z_dim = map.iter().copied().max().unwrap_or(0) + 1;
        let m = self.d_b * self.d_e;
        let mut out = vec![CMatrix::zeros(m, m); z_dim];
        for (x, &z) in map.iter().enumerate() {
            out[z] += &self.blocks[x];
        }
        let out = out.into_iter().filter(|b| trace_re(b) > 0.0).collect();
        Ok(Self::from_blocks(self.d_b, self.d_e, out))
    }

    /// `ρ ⊗ ρ'` read as blocks `(x, x')` on `(B B') ⊗ (E E')`.
    pub fn tensor(&self, other: &BlockState) -> BlockState {
        let (b1, e1, b2, e2) = (self.d_b, self.d_e, other.d_b, other.d_e);
        let perm = |i: usize| -> usize {
            // (b1, e1, b2, e2) -> (b1, b2, e1, e2)
            let q2 = i % e2;
            let r = i / e2;
            let p2 = r % b2;
            let r = r / b2;
            let q1 = r % e1;
            let p1 = r / e1;
            ((p1 * b2 + p2) * e1 + q1) * e2 + q2
        };
        let n = b1 * e1 * b2 * e2;
        let mut blocks = Vec::with_capacity(self.blocks.len() * other.blocks.len());
        for a in &self.blocks {
            for b in &other.blocks {
                let k = kron(a, b);
                let mut out = CMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        out[(perm(i), perm(j))] = k[(i, j)];
                    }
                }
                blocks.push(out);
            }
        }
        BlockState {
            d_b: b1 * b2,
            d_e: e1 * e2,
            blocks,
            classical: self.classical && other.classical,
        }
    }

    /// `(1−ε) ρ + ε I/d` on the whole `X ⊗ B ⊗ E`; stays block diagonal.
    pub fn depolarize(&self, eps: f64) -> Result<BlockState> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::domain(format!("depolarizing weight must lie in (0, 1], got {eps}")));
        }
        let m = self.d_b * self.d_e;
        let total = (self.blocks.len() * m) as f64;
        let blocks = self
            .blocks
            .iter()
            .map(|b| b * C64::new(1.0 - eps, 0.0) + CMatrix::identity(m, m) * C64::new(eps / total, 0.0))
            .collect();
        Ok(Self::from_blocks(self.d_b, self.d_e, blocks))
    }
}
