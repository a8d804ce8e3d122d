//! Derivative-free simplex minimization.

/// Stopping rules and initial simplex size.
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Converged once every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iter: 2000, diameter_tol: 1e-9, initial_step: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with the adaptive Nelder-Mead coefficients.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    if n == 0 {
        return Minimum { x: vec![], value: f(&[]), iterations: 0, converged: true };
    }
    let nf = n as f64;
    let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf);
    let (rho, sigma) = (0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let toward = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = toward(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = toward(alpha * gamma);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = toward(alpha * rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = toward(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, v)| b + sigma * (v - b)).collect();
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, iterations, converged }
}

/// Runs [`minimize`] repeatedly from the previous optimum with a shrinking
/// simplex until a restart no longer improves the value.
pub fn minimize_polished<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions, restarts: usize) -> Minimum {
    let mut best = minimize(&f, x0, opts);
    let mut step = opts.initial_step;
    for _ in 0..restarts {
        step = (step * 0.3).max(1e-4);
        let o = NelderMeadOptions { initial_step: step, ..*opts };
        let next = minimize(&f, &best.x, &o);
        let improved = next.value < best.value - 1e-15 * best.value.abs().max(1.0);
        let iterations = best.iterations + next.iterations;
        if next.value <= best.value {
            best = Minimum { iterations, ..next };
        } else {
            best.iterations = iterations;
        }
        if !improved && best.converged {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize_polished(f, &[-1.2, 1.0], &NelderMeadOptions::default(), 5);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn quadratic_in_ten_dimensions() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.5).powi(2)).sum();
        let m = minimize_polished(f, &[0.0; 10], &NelderMeadOptions::default(), 8);
        assert!(m.value < 1e-10, "{m:?}");
    }
}
