//! Bounded Nelder–Mead simplex minimizer.
//!
//! Uses the dimension-adaptive coefficients of Gao & Han (2012). Bounds are
//! enforced by projecting every trial point onto the box. Non-finite
//! objective values are treated as `+∞`.

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Initial simplex edge per dimension.
    pub initial_step: Vec<f64>,
    /// Per-dimension simplex extent below which the search stops.
    pub x_tol: Vec<f64>,
    /// Stop when `f_worst − f_best ≤ f_tol_abs + f_tol_rel·|f_best|`
    /// (in addition to the `x_tol` test, either one suffices).
    pub f_tol_abs: f64,
    pub f_tol_rel: f64,
    pub max_evals: usize,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl NelderMeadOptions {
    pub fn new(initial_step: Vec<f64>, x_tol: Vec<f64>) -> Self {
        Self {
            initial_step,
            x_tol,
            f_tol_abs: 0.0,
            f_tol_rel: 0.0,
            max_evals: 10_000,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evals: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub history: Vec<f64>,
}

struct Problem<'a, F> {
    f: F,
    bounds: Option<&'a [(f64, f64)]>,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Problem<'_, F> {
    fn project(&self, x: &mut [f64]) {
        if let Some(b) = self.bounds {
            for (xi, &(lo, hi)) in x.iter_mut().zip(b) {
                *xi = xi.clamp(lo, hi);
            }
        }
    }

    fn eval(&mut self, x: &mut [f64]) -> f64 {
        self.project(x);
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Minimizes `f` starting from `x0`.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(opts.initial_step.len(), n, "initial_step dimension");
    assert_eq!(opts.x_tol.len(), n, "x_tol dimension");
    let mut prob = Problem {
        f,
        bounds: opts.bounds.as_deref(),
        evals: 0,
    };

    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut start = x0.to_vec();
    let f0 = prob.eval(&mut start);
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), f0)];
    for i in 0..n {
        let mut v = start.clone();
        v[i] += opts.initial_step[i];
        // Step inward when the bound swallows the move.
        if let Some(b) = prob.bounds {
            if v[i] > b[i].1 {
                v[i] = start[i] - opts.initial_step[i];
            }
        }
        let fv = prob.eval(&mut v);
        simplex.push((v, fv));
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));

    loop {
        order(&mut simplex);
        let (f_best, f_worst) = (simplex[0].1, simplex[n].1);
        let x_ok = (0..n).all(|d| {
            let (lo, hi) = simplex
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p.0[d]), hi.max(p.0[d]))
                });
            hi - lo <= opts.x_tol[d]
        });
        let f_ok = f_worst.is_finite()
            && f_worst - f_best <= opts.f_tol_abs + opts.f_tol_rel * f_best.abs();
        if n == 0 || x_ok || f_ok {
            converged = true;
            break;
        }
        if prob.evals >= opts.max_evals {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for p in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(&p.0) {
                *c += x / nf;
            }
        }
        let worst = simplex[n].0.clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let mut xr = along(alpha);
        let fr = prob.eval(&mut xr);
        if fr < simplex[0].1 {
            let mut xe = along(alpha * gamma);
            let fe = prob.eval(&mut xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (mut xc, outside) = if fr < simplex[n].1 {
                (along(alpha * rho), true)
            } else {
                (along(-rho), false)
            };
            let fc = prob.eval(&mut xc);
            let accept = if outside { fc <= fr } else { fc < simplex[n].1 };
            if accept {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let mut xs: Vec<f64> = best
                        .iter()
                        .zip(&p.0)
                        .map(|(b, x)| b + sigma * (x - b))
                        .collect();
                    let fs = prob.eval(&mut xs);
                    *p = (xs, fs);
                }
            }
        }
        let best = simplex.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        history.push(best);
    }

    order(&mut simplex);
    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        f,
        iterations,
        evals: prob.evals,
        converged,
        history,
    }
}
