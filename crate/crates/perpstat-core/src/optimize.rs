//! Derivative-free simplex search refined by quasi-Newton descent. The
//! likelihood surfaces this crate minimizes are smooth inside the transformed
//! parameter space, so a short Nelder–Mead run to find the basin followed by
//! BFGS polishing is enough.

/// Result of one minimization stage.
#[derive(Debug, Clone)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Nelder–Mead with the standard reflection/expansion/contraction/shrink
/// coefficients. Converges when the simplex function spread falls below
/// `tol` relative to the best value.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> OptimOutcome {
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1.0 { step * v[i].abs() } else { step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| finite_or_inf(f(v))).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        if values[best].is_finite()
            && (values[worst] - values[best]).abs()
                <= tol * (values[best].abs() + tol)
        {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for j in 0..dim {
                centroid[j] += simplex[i][j] / dim as f64;
            }
        }

        let point_at = |coef: f64| -> Vec<f64> {
            (0..dim)
                .map(|j| centroid[j] + coef * (simplex[worst][j] - centroid[j]))
                .collect()
        };

        let reflected = point_at(-1.0);
        let f_ref = finite_or_inf(f(&reflected));
        if f_ref < values[best] {
            let expanded = point_at(-2.0);
            let f_exp = finite_or_inf(f(&expanded));
            if f_exp < f_ref {
                simplex[worst] = expanded;
                values[worst] = f_exp;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_ref;
            }
        } else if f_ref < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_ref;
        } else {
            let contracted = if f_ref < values[worst] {
                point_at(-0.5)
            } else {
                point_at(0.5)
            };
            let f_con = finite_or_inf(f(&contracted));
            if f_con < values[worst].min(f_ref) {
                simplex[worst] = contracted;
                values[worst] = f_con;
            } else {
                // Shrink toward the best vertex.
                let best_point = simplex[best].clone();
                for i in 0..=dim {
                    if i == best {
                        continue;
                    }
                    for j in 0..dim {
                        simplex[i][j] = best_point[j] + 0.5 * (simplex[i][j] - best_point[j]);
                    }
                    values[i] = finite_or_inf(f(&simplex[i]));
                }
            }
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty simplex");
    OptimOutcome {
        x: simplex[best].clone(),
        f: values[best],
        iterations,
        converged,
    }
}

/// BFGS with backtracking Armijo line search. Converges when an iteration
/// improves the objective by less than `tol` (relative) or the gradient norm
/// is negligible.
pub fn bfgs<F, G>(f: F, grad: G, x0: &[f64], tol: f64, max_iter: usize) -> OptimOutcome
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut fx = finite_or_inf(f(&x));
    let mut g = grad(&x);
    // Inverse Hessian approximation, starts at identity.
    let mut h = vec![vec![0.0; dim]; dim];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !grad_norm.is_finite() {
            break;
        }
        if grad_norm < 1e-12 {
            converged = true;
            break;
        }

        // Search direction d = -H g.
        let d: Vec<f64> = (0..dim)
            .map(|i| -(0..dim).map(|j| h[i][j] * g[j]).sum::<f64>())
            .collect();
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        let (d, slope) = if slope >= 0.0 {
            // Not a descent direction; reset to steepest descent.
            for (i, row) in h.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 1.0 } else { 0.0 };
                }
            }
            let d: Vec<f64> = g.iter().map(|v| -v).collect();
            let slope = -grad_norm * grad_norm;
            (d, slope)
        } else {
            (d, slope)
        };

        // Backtracking Armijo search.
        let mut t = 1.0;
        let mut x_new;
        let mut f_new;
        let mut ok = false;
        loop {
            x_new = (0..dim).map(|i| x[i] + t * d[i]).collect::<Vec<f64>>();
            f_new = finite_or_inf(f(&x_new));
            if f_new <= fx + 1e-4 * t * slope {
                ok = true;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                break;
            }
        }
        if !ok {
            converged = true; // cannot improve along the quasi-Newton direction
            break;
        }

        let g_new = grad(&x_new);
        let s: Vec<f64> = (0..dim).map(|i| x_new[i] - x[i]).collect();
        let yv: Vec<f64> = (0..dim).map(|i| g_new[i] - g[i]).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();

        let improved = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;

        if sy > 1e-10 {
            // BFGS inverse update: H <- (I - s yᵀ/sy) H (I - y sᵀ/sy) + s sᵀ/sy.
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..dim)
                .map(|i| (0..dim).map(|j| h[i][j] * yv[j]).sum::<f64>())
                .collect();
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                for j in 0..dim {
                    h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }

        if improved.abs() <= tol * (fx.abs() + tol) {
            converged = true;
            break;
        }
    }

    OptimOutcome {
        x,
        f: fx,
        iterations,
        converged,
    }
}
