//! Downhill-simplex minimisation.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadSettings {
    /// Stop when the spread of simplex values falls below this (scaled by
    /// `max(1, |f_best|)`) ...
    pub value_tol: f64,
    /// ... and the simplex diameter falls below this.
    pub param_tol: f64,
    pub max_iter: usize,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadSettings {
    fn default() -> Self {
        NelderMeadSettings {
            value_tol: 1e-10,
            param_tol: 1e-8,
            max_iter: 20_000,
            initial_step: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimises `f` from `x0`, restarting from the best vertex until a restart
/// no longer improves the value.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    settings: &NelderMeadSettings,
) -> Minimum {
    let mut best = run(&mut f, x0, settings, settings.initial_step);
    for _ in 0..8 {
        if best.iterations >= settings.max_iter {
            break;
        }
        let step = (settings.initial_step * 0.1).max(settings.param_tol * 100.0);
        let again = run(&mut f, &best.x, settings, step);
        let improved = again.value < best.value - settings.value_tol * best.value.abs().max(1.0);
        let total_iter = best.iterations + again.iterations;
        let total_eval = best.evaluations + again.evaluations;
        let converged = again.converged;
        if again.value <= best.value {
            best = again;
        }
        best.iterations = total_iter;
        best.evaluations = total_eval;
        best.converged = converged;
        if !improved {
            break;
        }
    }
    best
}

fn run<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    settings: &NelderMeadSettings,
    step: f64,
) -> Minimum {
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let value = eval(x0, &mut evaluations);
        return Minimum {
            x: Vec::new(),
            value,
            iterations: 0,
            evaluations,
            converged: true,
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evaluations)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= settings.value_tol * values[0].abs().max(1.0) && diameter <= settings.param_tol
        {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evaluations);
        if fr < values[0] {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evaluations);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(rho);
            let fc = eval(&xc, &mut evaluations);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evaluations);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for (x, b) in simplex[i].iter_mut().zip(&best) {
                *x = b + sigma * (*x - b);
            }
            values[i] = eval(&simplex[i], &mut evaluations);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let m = minimize(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2) + 0.5,
            &[0.0, 0.0],
            &NelderMeadSettings::default(),
        );
        assert!(m.converged);
        assert!((m.value - 0.5).abs() < 1e-10);
        assert!((m.x[0] - 1.0).abs() < 1e-5);
        assert!((m.x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock() {
        let m = minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &NelderMeadSettings::default(),
        );
        assert!(m.value < 1e-10);
        assert!((m.x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn one_dimensional_periodic() {
        let m = minimize(|x| x[0].cos(), &[2.5], &NelderMeadSettings::default());
        assert!((m.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_dimensional() {
        let m = minimize(|_| 4.0, &[], &NelderMeadSettings::default());
        assert_eq!(m.value, 4.0);
        assert!(m.converged);
    }

    #[test]
    fn nan_is_treated_as_worst() {
        let m = minimize(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 0.5).powi(2)
                }
            },
            &[0.1],
            &NelderMeadSettings::default(),
        );
        assert!(m.value < 1e-12);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let settings = NelderMeadSettings {
            max_iter: 3,
            ..Default::default()
        };
        let m = minimize(
            |x| (x[0] - 10.0).powi(2) + x[1].powi(2),
            &[0.0, 0.0],
            &settings,
        );
        assert!(!m.converged);
    }
}
