//! Permutation representations on `(C^d)^{⊗n}`, characters of `S_n` and the
//! universal permutation-invariant state.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{eigh_raw, max_abs, CMatrix, Hermitian, C64};
use crate::states::DensityOperator;

pub const MAX_N: usize = 5;
pub const MAX_LOCAL_DIM: usize = 3;
pub const MAX_TOTAL_DIM: usize = 64;

/// Weakly decreasing positive parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.iter().any(|&p| p == 0) || parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::validation(format!(
                "partition parts must be positive and weakly decreasing, got {parts:?}"
            )));
        }
        Ok(Partition(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn rows(&self) -> usize {
        self.0.len()
    }

    /// All partitions of `n` in decreasing lexicographic order, `(n)` first.
    pub fn all(n: usize) -> Vec<Partition> {
        fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if rem == 0 {
                out.push(Partition(cur.clone()));
                return;
            }
            for p in (1..=rem.min(max)).rev() {
                cur.push(p);
                rec(rem - p, p, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, n, &mut Vec::new(), &mut out);
        out
    }

    /// Size of the conjugacy class with this cycle type: `n! / Π_i i^{m_i} m_i!`.
    pub fn class_size(&self) -> u64 {
        let n = self.n();
        let mut counts: HashMap<usize, u64> = HashMap::new();
        for &p in &self.0 {
            *counts.entry(p).or_insert(0) += 1;
        }
        let mut denom = 1u64;
        for (&len, &m) in &counts {
            denom *= (len as u64).pow(m as u32) * factorial(m as usize);
        }
        factorial(n) / denom
    }
}

/// A permutation `i ↦ map[i]` of `{0, …, n−1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &i in &map {
            if i >= n || seen[i] {
                return Err(Error::validation(format!("{map:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Permutation(map))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn cycle_type(&self) -> Partition {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut lens = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut len = 0;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = self.0[i];
                len += 1;
            }
            lens.push(len);
        }
        lens.sort_unstable_by(|a, b| b.cmp(a));
        Partition(lens)
    }

    /// All `n!` permutations in lexicographic order of their image lists.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::with_capacity(factorial(n) as usize);
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(Permutation(cur.clone()));
            let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
                break;
            };
            let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
            cur.swap(i - 1, j);
            cur[i..].reverse();
        }
        out
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Unitary moving tensor factor `k` to position `π(k)`, so that
/// `U_π U_σ = U_{π∘σ}`.
pub fn permutation_unitary(pi: &Permutation, d: usize) -> CMatrix {
    let n = pi.n();
    let dim = d.pow(n as u32);
    let mut u = CMatrix::zeros(dim, dim);
    let mut digits = vec![0usize; n];
    let mut out = vec![0usize; n];
    for idx in 0..dim {
        let mut r = idx;
        for k in (0..n).rev() {
            digits[k] = r % d;
            r /= d;
        }
        for k in 0..n {
            out[pi.0[k]] = digits[k];
        }
        let j = out.iter().fold(0, |acc, &v| acc * d + v);
        u[(j, idx)] = C64::new(1.0, 0.0);
    }
    u
}

/// Character table of `S_n`.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub n: usize,
    /// Irreducible representations, `(n)` first.
    pub irreps: Vec<Partition>,
    /// Conjugacy classes as cycle types, identity first.
    pub classes: Vec<Partition>,
    pub class_sizes: Vec<u64>,
    /// `values[λ][μ] = χ_λ(μ)`.
    pub values: Vec<Vec<i64>>,
}

impl CharacterTable {
    pub fn character(&self, lambda: &Partition, class: &Partition) -> Option<i64> {
        let i = self.irreps.iter().position(|p| p == lambda)?;
        let j = self.classes.iter().position(|p| p == class)?;
        Some(self.values[i][j])
    }

    /// `dim V_λ = χ_λ(e)`.
    pub fn dimension(&self, lambda: &Partition) -> Option<i64> {
        self.character(lambda, &Partition(vec![1; self.n]))
    }
}

/// Murnaghan–Nakayama on beta-sets: removing a rim hook of length `r`
/// moves one bead `β → β − r`, with sign `(−1)^{#beads strictly between}`.
fn mn_character(beta: &mut Vec<usize>, cycles: &[usize], memo: &mut HashMap<(Vec<usize>, Vec<usize>), i64>) -> i64 {
    if cycles.is_empty() {
        return 1;
    }
    let key = (beta.clone(), cycles.to_vec());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let r = cycles[0];
    let mut total = 0i64;
    for idx in 0..beta.len() {
        let b = beta[idx];
        if b < r || beta.contains(&(b - r)) {
            continue;
        }
        let between = beta.iter().filter(|&&c| c > b - r && c < b).count();
        let sign = if between % 2 == 0 { 1 } else { -1 };
        beta[idx] = b - r;
        total += sign * mn_character(beta, &cycles[1..], memo);
        beta[idx] = b;
    }
    memo.insert(key, total);
    total
}

fn build_table(n: usize) -> CharacterTable {
    let irreps = Partition::all(n);
    let mut classes = Partition::all(n);
    classes.reverse();
    let class_sizes = classes.iter().map(Partition::class_size).collect();
    let mut memo = HashMap::new();
    let values = irreps
        .iter()
        .map(|lam| {
            let k = lam.rows();
            classes
                .iter()
                .map(|mu| {
                    let mut beta: Vec<usize> =
                        lam.parts().iter().enumerate().map(|(i, &p)| p + k - 1 - i).collect();
                    mn_character(&mut beta, mu.parts(), &mut memo)
                })
                .collect()
        })
        .collect();
    CharacterTable {
        n,
        irreps,
        classes,
        class_sizes,
        values,
    }
}

/// Character tables for `1 ≤ n ≤ 5`, built once and shared.
pub fn sn_characters(n: usize) -> Result<&'static CharacterTable> {
    static TABLES: OnceLock<Vec<CharacterTable>> = OnceLock::new();
    if n == 0 || n > MAX_N {
        return Err(Error::unsupported(format!("character tables are available for 1 <= n <= {MAX_N}, got {n}")));
    }
    let tables = TABLES.get_or_init(|| (1..=MAX_N).map(build_table).collect());
    Ok(&tables[n - 1])
}

fn check_limits(n: usize, d: usize) -> Result<()> {
    if n == 0 || n > MAX_N || d == 0 || d > MAX_LOCAL_DIM || d.pow(n as u32) > MAX_TOTAL_DIM {
        return Err(Error::unsupported(format!(
            "need 1 <= n <= {MAX_N}, 1 <= d <= {MAX_LOCAL_DIM}, d^n <= {MAX_TOTAL_DIM}; got n={n}, d={d}"
        )));
    }
    Ok(())
}

/// `P_λ = (dim V_λ / n!) Σ_π χ_λ(π) U_π` for every `λ` with at most `d` rows.
pub fn isotypic_projections(n: usize, d: usize) -> Result<Vec<(Partition, Hermitian)>> {
    check_limits(n, d)?;
    let table = sn_characters(n)?;
    let perms: Vec<(CMatrix, usize)> = Permutation::all(n)
        .iter()
        .map(|p| {
            let ct = p.cycle_type();
            let cls = table.classes.iter().position(|c| *c == ct).unwrap();
            (permutation_unitary(p, d), cls)
        })
        .collect();
    let dim = d.pow(n as u32);
    let nfact = factorial(n) as f64;
    let mut out = Vec::new();
    for (li, lam) in table.irreps.iter().enumerate() {
        if lam.rows() > d {
            continue;
        }
        let dl = table.values[li][0] as f64;
        let mut p = CMatrix::zeros(dim, dim);
        for (u, cls) in &perms {
            p += u * C64::new(table.values[li][*cls] as f64, 0.0);
        }
        p *= C64::new(dl / nfact, 0.0);
        out.push((lam.clone(), Hermitian::from_matrix_unchecked(p)));
    }
    Ok(out)
}

/// `(1/n!) Σ_π U_π A U_π†`.
pub fn twirl(a: &Hermitian, n: usize, d: usize) -> Result<Hermitian> {
    check_limits(n, d)?;
    if a.dim() != d.pow(n as u32) {
        return Err(Error::validation("operator dimension does not match d^n"));
    }
    let perms = Permutation::all(n);
    let mut acc = CMatrix::zeros(a.dim(), a.dim());
    for p in &perms {
        let u = permutation_unitary(p, d);
        acc += &u * a.matrix() * u.adjoint();
    }
    acc /= C64::new(perms.len() as f64, 0.0);
    Ok(Hermitian::from_matrix_unchecked(acc))
}

/// Max-norm distance of `U_π A U_π† − A` over a generating set of `S_n`.
pub fn permutation_defect(a: &CMatrix, n: usize, d: usize) -> f64 {
    let mut gens = Vec::new();
    if n >= 2 {
        let mut swap: Vec<usize> = (0..n).collect();
        swap.swap(0, 1);
        gens.push(Permutation(swap));
        gens.push(Permutation((0..n).map(|i| (i + 1) % n).collect()));
    }
    gens.iter()
        .map(|p| {
            let u = permutation_unitary(p, d);
            max_abs(&(&u * a * u.adjoint() - a))
        })
        .fold(0.0, f64::max)
}

/// A permutation-invariant state `ω` with `τ ≤ g ω` for every permutation-invariant state `τ`.
#[derive(Clone, Debug)]
pub struct UniversalState {
    pub n: usize,
    pub d: usize,
    pub omega: DensityOperator,
    /// `(n+1)^{d²−1}`.
    pub g: f64,
    /// `v · max_λ dim U_λ`, the sharpest constant for this construction.
    pub g_tight: f64,
    /// Number of nonvanishing isotypic blocks.
    pub v: usize,
    pub blocks: Vec<(Partition, Hermitian)>,
}

/// `ω = (1/v) Σ_λ P_λ / Tr P_λ`.
pub fn universal_state(n: usize, d: usize) -> Result<UniversalState> {
    let blocks = isotypic_projections(n, d)?;
    let table = sn_characters(n)?;
    let dim = d.pow(n as u32);
    let v = blocks.len();
    let mut omega = CMatrix::zeros(dim, dim);
    let mut max_mult = 0.0f64;
    for (lam, p) in &blocks {
        let tr = p.trace();
        omega += p.matrix() * C64::new(1.0 / (v as f64 * tr), 0.0);
        let dl = table.dimension(lam).unwrap() as f64;
        max_mult = max_mult.max((tr / dl).round());
    }
    let dims = vec![d; n];
    Ok(UniversalState {
        n,
        d,
        omega: DensityOperator::from_psd_unchecked(omega, dims),
        g: ((n + 1) as f64).powi((d * d - 1) as i32),
        g_tight: v as f64 * max_mult,
        v,
        blocks,
    })
}

/// Minimum eigenvalue of `g ω − τ`; nonnegative (within `-1e-10`) iff dominance holds.
pub fn dominance_check(tau: &DensityOperator, u: &UniversalState) -> Result<f64> {
    dominance_check_with(tau, u, u.g)
}

pub fn dominance_check_with(tau: &DensityOperator, u: &UniversalState, g: f64) -> Result<f64> {
    if tau.dim() != u.omega.dim() {
        return Err(Error::validation("state dimension does not match the universal state"));
    }
    let defect = permutation_defect(tau.matrix(), u.n, u.d);
    if defect > 1e-8 {
        return Err(Error::validation(format!(
            "state is not permutation invariant (defect {defect:.3e})"
        )));
    }
    let diff = u.omega.matrix() * C64::new(g, 0.0) - tau.matrix();
    Ok(eigh_raw(&diff).0[0])
}
