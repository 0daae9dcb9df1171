//! Derivative-free Nelder–Mead minimization with restarts.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NelderMeadOptions {
    /// Iteration budget per run, shared by restarts.
    pub max_iter: usize,
    /// Converged when the spread of objective values over the simplex
    /// falls below this.
    pub f_tol: f64,
    /// Edge length of the initial simplex.
    pub step: f64,
    /// Restarts from the best vertex after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            f_tol: 1e-8,
            step: 0.3,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Non-finite objective values are treated as `+∞`.
pub fn minimize(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0);
    let mut iterations = 0;
    let mut converged = false;
    for round in 0..=opts.restarts {
        let (x, fx, it, ok) = run(
            &mut eval,
            &best_x,
            best_f,
            opts,
            opts.max_iter - iterations.min(opts.max_iter),
        );
        iterations += it;
        let improved = best_f - fx;
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = ok;
        // a restart that finds nothing new confirms the optimum
        if !ok || (round > 0 && improved.abs() <= opts.f_tol) {
            break;
        }
    }
    Minimum {
        x: best_x,
        f: best_f,
        iterations,
        evaluations: evals,
        converged,
    }
}

fn run(
    eval: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    f0: f64,
    opts: &NelderMeadOptions,
    budget: usize,
) -> (Vec<f64>, f64, usize, bool) {
    let n = x0.len();
    if n == 0 {
        return (Vec::new(), f0, 0, true);
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut it = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.is_finite() && spread <= opts.f_tol {
            let (x, f) = simplex.swap_remove(0);
            return (x, f, it, true);
        }
        if it >= budget {
            let (x, f) = simplex.swap_remove(0);
            return (x, f, it, false);
        }
        it += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v.0[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let x = along(rho * alpha);
            let fx = eval(&x);
            (x, fx)
        } else {
            let x = along(-rho);
            let fx = eval(&x);
            (x, fx)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best
                .iter()
                .zip(&v.0)
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            let fx = eval(&x);
            *v = (x, fx);
        }
    }
}
