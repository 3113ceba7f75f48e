//! Derivative-free simplex minimization.

/// Standard reflection/expansion/contraction/shrink coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Offset along each axis for the initial simplex.
    pub initial_step: f64,
    pub max_evals: usize,
    /// Stop once every vertex is within this distance of the best one.
    pub diameter_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.1,
            max_evals: 10_000,
            diameter_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Minimizes `f` from `x0`. NaN values are treated as `+inf`.
    pub fn minimize<F: Fn(&[f64]) -> f64>(&self, f: F, x0: &[f64]) -> NelderMeadResult {
        let n = x0.len();
        let evals = std::cell::Cell::new(0usize);
        let eval = |x: &[f64]| {
            evals.set(evals.get() + 1);
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), eval(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            let v = eval(&x);
            simplex.push((x, v));
        }

        let mut converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| dist(x, &simplex[0].0))
                .fold(0.0, f64::max);
            if diameter < self.diameter_tol {
                converged = true;
                break;
            }
            if evals.get() >= self.max_evals {
                break;
            }

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let toward = |t: f64, from: &[f64]| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(from)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let worst = simplex[n].clone();
            let best_v = simplex[0].1;
            let second_worst_v = simplex[n - 1].1;

            let xr = toward(self.reflection, &worst.0);
            let fr = eval(&xr);
            if fr < best_v {
                let xe = toward(self.reflection * self.expansion, &worst.0);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < second_worst_v {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let xc = toward(self.reflection * self.contraction, &worst.0);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = toward(-self.contraction, &worst.0);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < fr.min(worst.1) {
                simplex[n] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for (x, v) in simplex.iter_mut().skip(1) {
                for (xi, bi) in x.iter_mut().zip(&best) {
                    *xi = bi + self.shrink * (*xi - bi);
                }
                *v = eval(x);
            }
        }

        let (x, value) = simplex.swap_remove(0);
        NelderMeadResult {
            x,
            value,
            evaluations: evals.get(),
            converged,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
