//! Derivative-free Nelder–Mead simplex minimizer.
//!
//! Objective values may be `+inf`; such vertices are simply the worst ones
//! and get contracted away.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop once `f_worst - f_best` falls below this.
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-8,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of the given
/// per-coordinate `steps`.
pub fn nelder_mead<F>(f: F, x0: &[f64], steps: &[f64], opts: NelderMeadOptions) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for j in 0..n {
        let mut x = x0.to_vec();
        x[j] += steps[j];
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if best.is_finite() && worst - best < opts.f_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64, out: &mut Vec<f64>, worst: &[f64]| {
            for j in 0..n {
                out[j] = centroid[j] + t * (worst[j] - centroid[j]);
            }
        };

        let worst_x = simplex[n].0.clone();
        along(-REFLECT, &mut trial, &worst_x);
        let fr = eval(&trial);
        let second_worst = simplex[n - 1].1;

        if fr < best {
            let reflected = trial.clone();
            along(-EXPAND, &mut trial, &worst_x);
            let fe = eval(&trial);
            simplex[n] = if fe < fr {
                (trial.clone(), fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < second_worst {
            simplex[n] = (trial.clone(), fr);
            continue;
        }
        // contraction, outside if the reflection beat the worst vertex
        let outside = fr < worst;
        along(
            if outside { -CONTRACT } else { CONTRACT },
            &mut trial,
            &worst_x,
        );
        let fc = eval(&trial);
        if (outside && fc <= fr) || (!outside && fc < worst) {
            simplex[n] = (trial.clone(), fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for j in 0..n {
                x[j] = anchor[j] + SHRINK * (x[j] - anchor[j]);
            }
            *v = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        f,
        iterations,
        converged,
    }
}
