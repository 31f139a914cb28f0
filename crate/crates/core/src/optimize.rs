//! Scalar and derivative-free optimizers.

/// Result of a one-dimensional maximization.
#[derive(Clone, Copy, Debug)]
pub struct ScalarMax {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of a unimodal `f` on `[a, b]` until the
/// bracket is shorter than `tol`, followed by one parabolic step through the
/// final three points. The endpoints are always evaluated, so the returned
/// value is a maximum over every point visited.
pub fn golden_section_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> ScalarMax {
    let mut evals = 0;
    let mut eval = |x: f64| {
        evals += 1;
        f(x)
    };
    let mut best = ScalarMax {
        x: a,
        value: eval(a),
        evaluations: 0,
    };
    let fb = eval(b);
    if fb > best.value {
        best.x = b;
        best.value = fb;
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.value {
            best.x = x;
            best.value = v;
        }
    }
    // Parabola through (x1, f1), (mid, fm), (x2, f2).
    let (xa, xc) = (x1.min(x2), x1.max(x2));
    let (fa, fc) = if x1 < x2 { (f1, f2) } else { (f2, f1) };
    let xm = 0.5 * (xa + xc);
    if xc - xa > 0.0 {
        let fm = eval(xm);
        if fm > best.value {
            best.x = xm;
            best.value = fm;
        }
        let h = 0.5 * (xc - xa);
        let curv = fa - 2.0 * fm + fc;
        if curv < 0.0 {
            let xp = (xm - h * (fc - fa) / (2.0 * curv)).clamp(a, b);
            let fp = eval(xp);
            if fp > best.value {
                best.x = xp;
                best.value = fp;
            }
        }
    }
    best.evaluations = evals;
    best
}

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    /// Absolute spread of simplex values below which the search stops.
    pub f_tol: f64,
    /// Max-norm simplex diameter below which the search stops.
    pub x_tol: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.25,
            f_tol: 1e-10,
            x_tol: 1e-8,
            max_evaluations: 20_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead simplex minimization with standard coefficients and restarts
/// from the best vertex until a restart no longer improves the value.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: NelderMeadOptions) -> NelderMeadResult {
    let mut x = x0.to_vec();
    let mut total = 0;
    let mut value = f(&x);
    total += 1;
    let mut converged = false;
    let mut step = opts.initial_step;
    while total < opts.max_evaluations {
        let r = nm_run(&f, &x, step, &opts, opts.max_evaluations - total);
        total += r.evaluations;
        let improved = r.value < value - opts.f_tol;
        if r.value < value {
            x = r.x;
            value = r.value;
        }
        if !improved && r.converged {
            converged = true;
            break;
        }
        step = (step * 0.5).max(opts.x_tol * 10.0);
    }
    NelderMeadResult {
        x,
        value,
        evaluations: total,
        converged,
    }
}

fn nm_run(
    f: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    opts: &NelderMeadOptions,
    budget: usize,
) -> NelderMeadResult {
    let n = x0.len();
    let mut evals = 0;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    evals += 1;
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        let fv = f(&v);
        evals += 1;
        simplex.push((v, fv));
    }
    let mut converged = false;
    while evals < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diam = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.f_tol && diam <= opts.x_tol {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, vi) in centroid.iter_mut().zip(v) {
                *c += vi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = best.iter().zip(&item.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let fv = f(&v);
                    *item = (v, fv);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        value,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_max() {
        let r = golden_section_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-6);
        assert!((r.x - 0.3).abs() < 1e-6);
        assert!(r.value <= 0.0 && r.value > -1e-12);
    }

    #[test]
    fn golden_keeps_endpoints() {
        let r = golden_section_max(|x| x, 0.0, 1.0, 1e-6);
        assert_eq!(r.x, 1.0);
        let l = golden_section_max(|x| -x, 0.0, 1.0, 1e-6);
        assert_eq!(l.x, 0.0);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let r = nelder_mead(
            |p| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            &[-1.2, 1.0],
            NelderMeadOptions {
                f_tol: 1e-14,
                x_tol: 1e-10,
                ..Default::default()
            },
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5);
    }
}
