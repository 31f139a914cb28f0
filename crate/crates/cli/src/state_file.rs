//! JSON state files.
//!
//! ```json
//! {"kind": "cq", "x_dim": 2, "e_dim": 2, "probs": [0.2, 0.8],
//!  "cond_states": [[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]], ...]}
//! {"kind": "density", "dims": [2, 2], "matrix": [[[re, im], ...], ...]}
//! ```
//!
//! Matrices are row-major with complex entries as `[re, im]`.

use std::path::Path;

use qprivamp::linalg::{CMatrix, Hermitian, C64};
use qprivamp::states::{CQState, DensityOperator};
use serde::{Deserialize, Serialize};

pub type Matrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateFile {
    Cq {
        x_dim: usize,
        e_dim: usize,
        probs: Vec<f64>,
        cond_states: Vec<Matrix>,
    },
    Density {
        dims: Vec<usize>,
        matrix: Matrix,
    },
}

#[derive(Clone, Debug)]
pub enum LoadedState {
    Cq(CQState),
    Density(DensityOperator),
}

fn to_matrix(m: &Matrix, dim: usize, field: &str) -> Result<CMatrix, String> {
    if m.len() != dim {
        return Err(format!("{field}: expected {dim} rows, found {}", m.len()));
    }
    if let Some((i, r)) = m.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(format!("{field}[{i}]: expected {dim} entries, found {}", r.len()));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| C64::new(m[i][j][0], m[i][j][1])))
}

fn from_matrix(m: &CMatrix) -> Matrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn density(m: &Matrix, dims: Vec<usize>, field: &str) -> Result<DensityOperator, String> {
    let dim = dims.iter().product();
    let op = Hermitian::new(to_matrix(m, dim, field)?).map_err(|e| format!("{field}: {e}"))?;
    DensityOperator::new(op, dims).map_err(|e| format!("{field}: {e}"))
}

impl StateFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("malformed state file: {e}"))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("state files serialize");
        s.push('\n');
        s
    }

    pub fn to_state(&self) -> Result<LoadedState, String> {
        match self {
            StateFile::Cq {
                x_dim,
                e_dim,
                probs,
                cond_states,
            } => {
                if *x_dim == 0 || *e_dim == 0 {
                    return Err("x_dim and e_dim must be positive".into());
                }
                if probs.len() != *x_dim {
                    return Err(format!("probs: expected {x_dim} entries, found {}", probs.len()));
                }
                if cond_states.len() != *x_dim {
                    return Err(format!("cond_states: expected {x_dim} matrices, found {}", cond_states.len()));
                }
                let cond = cond_states
                    .iter()
                    .enumerate()
                    .map(|(x, m)| density(m, vec![*e_dim], &format!("cond_states[{x}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                CQState::new(probs.clone(), cond)
                    .map(LoadedState::Cq)
                    .map_err(|e| format!("probs: {e}"))
            }
            StateFile::Density { dims, matrix } => {
                if dims.is_empty() || dims.contains(&0) {
                    return Err("dims: factor dimensions must be positive".into());
                }
                density(matrix, dims.clone(), "matrix").map(LoadedState::Density)
            }
        }
    }

    pub fn from_cq(cq: &CQState) -> Self {
        StateFile::Cq {
            x_dim: cq.x_dim(),
            e_dim: cq.e_dim(),
            probs: cq.probs().to_vec(),
            cond_states: cq.cond().iter().map(|c| from_matrix(c.matrix())).collect(),
        }
    }

    pub fn from_density(rho: &DensityOperator) -> Self {
        StateFile::Density {
            dims: rho.dims().to_vec(),
            matrix: from_matrix(rho.matrix()),
        }
    }

    pub fn from_state(s: &LoadedState) -> Self {
        match s {
            LoadedState::Cq(c) => Self::from_cq(c),
            LoadedState::Density(d) => Self::from_density(d),
        }
    }
}

pub fn load_state(path: &Path) -> Result<LoadedState, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    StateFile::parse(&text)
        .and_then(|f| f.to_state())
        .map_err(|e| format!("{}: {e}", path.display()))
}

pub fn save_state(state: &LoadedState, path: &Path) -> Result<(), String> {
    std::fs::write(path, StateFile::from_state(state).to_json()).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qprivamp::states::{fig1_state, random_cq_seeded};

    #[test]
    fn bundled_fig1_matches_library_state() {
        let f = StateFile::parse(include_str!("../data/fig1.json")).unwrap();
        let LoadedState::Cq(cq) = f.to_state().unwrap() else {
            panic!("fig1 is a cq file")
        };
        let lib = fig1_state();
        for (a, b) in cq.probs().iter().zip(lib.probs()) {
            assert!((a - b).abs() <= 1e-15);
        }
        for (a, b) in cq.cond().iter().zip(lib.cond()) {
            assert!(qprivamp::states::max_entry_distance(a, b) <= 1e-15);
        }
        assert!(cq.is_classical());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let cq = random_cq_seeded(4, 3, 2);
        let once = StateFile::from_cq(&cq);
        let text = once.to_json();
        let back = StateFile::parse(&text).unwrap();
        assert_eq!(back, once);
        let again = StateFile::from_state(&back.to_state().unwrap());
        assert_eq!(again.to_json(), text);
    }

    #[test]
    fn diagnostics_name_fields() {
        let bad_trace = r#"{"kind": "density", "dims": [2], "matrix": [[[0.6, 0], [0, 0]], [[0, 0], [0.6, 0]]]}"#;
        let e = StateFile::parse(bad_trace).unwrap().to_state().unwrap_err();
        assert!(e.starts_with("matrix:") && e.contains("trace"), "{e}");
        let short = r#"{"kind": "cq", "x_dim": 2, "e_dim": 1, "probs": [1.0], "cond_states": [[[[1, 0]]]]}"#;
        assert!(StateFile::parse(short).unwrap().to_state().unwrap_err().starts_with("probs:"));
        let ragged = r#"{"kind": "density", "dims": [2], "matrix": [[[1, 0]], [[0, 0], [0, 0]]]}"#;
        assert!(StateFile::parse(ragged).unwrap().to_state().unwrap_err().starts_with("matrix[0]"));
        let syntax = "{\n  \"kind\": \"cq\",\n  \"x_dim\": oops\n}";
        assert!(StateFile::parse(syntax).unwrap_err().contains("line 3"));
        let unknown = r#"{"kind": "density", "dims": [1], "matrix": [[[1, 0]]], "extra": 1}"#;
        assert!(StateFile::parse(unknown).unwrap_err().contains("extra"));
    }
}
