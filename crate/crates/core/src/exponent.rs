//! The strong converse exponent
//! `E_pa(ρ, R) = max_{α∈[1/2,1]} ((1−α)/α)(R − H̃_α^{(1−2α)/(1−α)}(X|E))`.
//!
//! The maximization runs over `t = (1−α)/α ∈ [0, 1]` of the concave
//! `G(t) = tR − φ(t)` with `φ(t) = t H̃_{1/(1+t)}`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use crate::entropy::le::{minimize_tau, variational_terms};
use crate::entropy::{club_sandwiched, default_lambda, renyi_cond, vn_cond_entropy, BlockState, EntropyKind, EntropyQuery, SolverOptions};
use crate::error::{Error, Result};
use crate::optimize::golden_section_max;
use crate::parallel::Execution;
use crate::states::CQState;

/// Absolute tolerance in `t` of every scalar maximization.
pub const T_TOL: f64 = 1e-6;

/// Steps of the one-sided differences behind [`Exponent::critical_rate`].
pub const RC_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

#[derive(Clone, Copy, Debug)]
pub struct EpaValue {
    pub value: f64,
    pub alpha_star: f64,
    /// Every entropy evaluation behind the value converged.
    pub converged: bool,
}

/// `E_pa` on a rate grid, with the landmarks of its shape.
#[derive(Clone, Debug)]
pub struct ExponentCurve {
    pub rates: Vec<f64>,
    pub values: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub r_critical: f64,
    pub h_vn: f64,
    /// `H̃↓_{1/2}(X|E)`, the entropy at `t = 1`.
    pub h_half: f64,
    pub converged: bool,
}

/// Evaluates `φ` for one state, memoizing on `t` rounded to `1e-9`.
pub struct Exponent {
    state: BlockState,
    opts: SolverOptions,
    cache: Mutex<HashMap<i64, f64>>,
    all_converged: AtomicBool,
}

impl Exponent {
    pub fn new(rho: &CQState, opts: SolverOptions) -> Self {
        Exponent {
            state: BlockState::from_cq(rho),
            opts,
            cache: Mutex::new(HashMap::new()),
            all_converged: AtomicBool::new(true),
        }
    }

    /// Whether every entropy computed so far converged.
    pub fn converged(&self) -> bool {
        self.all_converged.load(Ordering::Relaxed)
    }

    /// `φ(t) = t H̃_{1/(1+t)}`; `φ(0) = 0`.
    pub fn phi(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain(format!("t must lie in [0, 1], got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let key = (t * 1e9).round() as i64;
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let tk = key as f64 / 1e9;
        let r = club_sandwiched(&self.state, 1.0 / (1.0 + tk), None, &self.opts)?;
        if !r.converged {
            self.all_converged.store(false, Ordering::Relaxed);
        }
        let v = tk * r.value;
        self.cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    /// `G(t) = tR − φ(t)`.
    pub fn g(&self, t: f64, rate: f64) -> Result<f64> {
        Ok(t * rate - self.phi(t)?)
    }

    pub fn epa(&self, rate: f64) -> Result<EpaValue> {
        check_rate(rate)?;
        let err = RefCell::new(None);
        let best = golden_section_max(
            |t| match self.g(t, rate) {
                Ok(v) => v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            0.0,
            1.0,
            T_TOL,
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(EpaValue {
            value: best.value.max(0.0),
            alpha_star: 1.0 / (1.0 + best.x),
            converged: self.converged(),
        })
    }

    /// Left derivative of `φ` at `t = 1`, by backward differences with two
    /// levels of Richardson extrapolation.
    pub fn critical_rate(&self) -> Result<f64> {
        let p1 = self.phi(1.0)?;
        let d: Vec<f64> = RC_STEPS
            .iter()
            .map(|&h| Ok((p1 - self.phi(1.0 - h)?) / h))
            .collect::<Result<_>>()?;
        let r1 = 2.0 * d[1] - d[0];
        let r2 = 2.0 * d[2] - d[1];
        Ok((4.0 * r2 - r1) / 3.0)
    }

    pub fn curve(&self, r_min: f64, r_max: f64, steps: usize, exec: Execution) -> Result<ExponentCurve> {
        check_rate(r_min)?;
        check_rate(r_max)?;
        if r_min > r_max || steps < 2 {
            return Err(Error::validation("need r_min <= r_max and at least 2 steps"));
        }
        let rates: Vec<f64> = (0..steps)
            .map(|i| {
                if i + 1 == steps {
                    r_max
                } else {
                    r_min + (r_max - r_min) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        let points = exec.map(&rates, |&r| self.epa(r));
        let points: Vec<EpaValue> = points.into_iter().collect::<Result<_>>()?;
        Ok(ExponentCurve {
            values: points.iter().map(|p| p.value).collect(),
            alpha_star: points.iter().map(|p| p.alpha_star).collect(),
            rates,
            r_critical: self.critical_rate()?,
            h_vn: vn_cond_entropy(&self.state),
            h_half: self.phi(1.0)?,
            converged: self.converged(),
        })
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!("rate must be finite and nonnegative, got {rate}")));
    }
    Ok(())
}

/// `E_pa(ρ, R)` with default solver options.
pub fn epa(rho: &CQState, rate: f64) -> Result<EpaValue> {
    Exponent::new(rho, SolverOptions::default()).epa(rate)
}

pub fn epa_curve(rho: &CQState, r_min: f64, r_max: f64, steps: usize) -> Result<ExponentCurve> {
    Exponent::new(rho, SolverOptions::default()).curve(r_min, r_max, steps, Execution::default())
}

/// The rate above which `E_pa(R) = R − H̃↓_{1/2}`.
pub fn critical_rate(rho: &CQState) -> Result<f64> {
    Exponent::new(rho, SolverOptions::default()).critical_rate()
}

/// `min_τ {D(τ_E‖ρ_E) + D(τ‖ρ) + |R − H(X|E)_τ|⁺}` over CQ states `τ`,
/// computed as `max_{μ∈[0,1]} min_τ {D(τ_E‖ρ_E) + D(τ‖ρ) + μ(R − H(X|E)_τ)}`.
pub fn g_variational(rho: &CQState, rate: f64, opts: &SolverOptions) -> Result<f64> {
    check_rate(rate)?;
    let bs = BlockState::from_cq(rho);
    let inner = |mu: f64| {
        if mu == 0.0 {
            return 0.0;
        }
        let alpha = 1.0 / (1.0 + mu);
        let out = minimize_tau(&bs, alpha, default_lambda(alpha), opts);
        let (de, d, h) = variational_terms(&out.tau, &bs);
        de + d + mu * (rate - h)
    };
    Ok(golden_section_max(inner, 0.0, 1.0, T_TOL).value.max(0.0))
}

/// Named lower and alternative bounds next to `E_pa`.
#[derive(Clone, Copy, Debug)]
pub struct ComparisonBounds {
    pub epa: f64,
    /// `sup_{α∈(0,1)} (1−α)(R − H̄↓_α)`.
    pub petz_lower: f64,
    /// `max_{α∈[1/2,1]} ((1−α)/α)(R − H̃↑_α)`.
    pub arrow_up: f64,
}

pub fn comparison_bounds(rho: &CQState, rate: f64, opts: &SolverOptions) -> Result<ComparisonBounds> {
    check_rate(rate)?;
    let bs = BlockState::from_cq(rho);
    let err = RefCell::new(None);
    let entropy = |kind: EntropyKind, alpha: f64| match renyi_cond(&bs, &EntropyQuery::new(kind, alpha), opts) {
        Ok(r) => r.value,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    // (1−α)H̄↓_α is convex in α, so the Petz objective is concave.
    let petz = golden_section_max(
        |a| (1.0 - a) * (rate - entropy(EntropyKind::PetzDown, a)),
        1e-6,
        1.0 - 1e-6,
        T_TOL,
    )
    .value
    .max(0.0);
    let up = |t: f64| {
        if t == 0.0 {
            0.0
        } else {
            t * (rate - entropy(EntropyKind::SandwichedUp, 1.0 / (1.0 + t)))
        }
    };
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| up(t)).collect();
    let k = (0..vals.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    let refined = golden_section_max(up, lo, hi, T_TOL).value;
    let arrow_up = vals[k].max(refined).max(0.0);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(ComparisonBounds {
        epa: Exponent::new(rho, *opts).epa(rate)?.value,
        petz_lower: petz,
        arrow_up,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{fig1_state, random_density_seeded, uniform_product};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn fig1_landmarks() {
        let e = Exponent::new(&fig1_state(), SolverOptions::default());
        assert_eq!(e.epa(0.0).unwrap().value, 0.0);
        assert_eq!(e.epa(0.0).unwrap().alpha_star, 1.0);
        assert_eq!(e.epa(0.5 * LN2).unwrap().value, 0.0);
        let h_half = e.phi(1.0).unwrap();
        let rc = e.critical_rate().unwrap();
        let r = (rc + 0.01).max(1.5 * LN2);
        let v = e.epa(r).unwrap();
        assert!((v.value - (r - h_half)).abs() < 1e-9);
        assert!((v.alpha_star - 0.5).abs() < 1e-3);
        assert!(rc > vn_cond_entropy(&fig1_state()));
    }

    #[test]
    fn uniform_product_exponent() {
        let st = uniform_product(2, &random_density_seeded(1, 2));
        let e = Exponent::new(&st, SolverOptions::default());
        for r in [0.3, 0.9, 1.4] {
            let v = e.epa(r).unwrap().value;
            assert!((v - (r - LN2).max(0.0)).abs() < 1e-8, "{r}: {v}");
        }
        assert!((e.critical_rate().unwrap() - LN2).abs() < 1e-6);
    }

    #[test]
    fn cache_is_keyed_on_rounded_t() {
        let e = Exponent::new(&fig1_state(), SolverOptions::default());
        let a = e.phi(0.3).unwrap();
        let b = e.phi(0.3 + 1e-12).unwrap();
        assert_eq!(a, b);
        assert_eq!(e.cache.lock().unwrap().len(), 1);
    }

    #[test]
    fn variational_and_bounds_on_fig1() {
        let st = fig1_state();
        let opts = SolverOptions::default();
        let r = 1.5 * LN2;
        let g = g_variational(&st, r, &opts).unwrap();
        let e = epa(&st, r).unwrap().value;
        assert!(g >= e - 1e-6 && (g - e).abs() < 1e-3, "{g} vs {e}");
        assert_eq!(g_variational(&st, 0.0, &opts).unwrap(), 0.0);
        let b = comparison_bounds(&st, LN2, &opts).unwrap();
        assert!(b.petz_lower <= b.epa + 1e-6);
        assert!(b.arrow_up <= b.epa + 1e-6);
    }
}
