//! Smooth convex minimization and logistic-regression fitting.

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Stop once the gradient's infinity norm falls below this.
    pub gradient_tolerance: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5_000,
            gradient_tolerance: 1e-8,
        }
    }
}

/// Gradient descent with Barzilai-Borwein step sizes and an Armijo
/// backtracking safeguard. `objective` returns f(x) and writes ∇f(x) into
/// its second argument. Deterministic for a deterministic objective.
pub fn minimize<F>(mut objective: F, x0: Vec<f64>, options: MinimizeOptions) -> Vec<f64>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut value = objective(&x, &mut grad);
    let mut step = 1.0;

    let mut x_new = vec![0.0; n];
    let mut grad_new = vec![0.0; n];
    for _ in 0..options.max_iterations {
        let grad_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_inf < options.gradient_tolerance || !value.is_finite() {
            break;
        }
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();

        let mut accepted = false;
        let mut value_new = value;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] - step * grad[i];
            }
            value_new = objective(&x_new, &mut grad_new);
            if value_new.is_finite() && value_new <= value - 1e-4 * step * grad_sq {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }

        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = x_new[i] - x[i];
            let y = grad_new[i] - grad[i];
            ss += s * s;
            sy += s * y;
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut grad, &mut grad_new);
        value = value_new;
        if ss == 0.0 {
            break;
        }
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-10, 1e10)
        } else {
            (step * 2.0).min(1e10)
        };
    }
    x
}

/// Binary logistic regression: `P(y = 1 | x) = sigmoid(w·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Minimizes mean log-loss plus `l2 / 2 · ‖w‖²` (bias unpenalized).
pub fn fit_logistic(
    features: &[Vec<f64>],
    labels: &[bool],
    l2: f64,
    options: MinimizeOptions,
) -> LogisticFit {
    assert_eq!(features.len(), labels.len());
    let dim = features.first().map_or(0, Vec::len);
    let n = features.len().max(1) as f64;

    let objective = |params: &[f64], grad: &mut [f64]| {
        let (w, b) = params.split_at(dim);
        let b = b[0];
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (x, &y) in features.iter().zip(labels) {
            let z = dot(w, x) + b;
            let target = if y { 1.0 } else { 0.0 };
            loss += softplus(z) - target * z;
            let residual = sigmoid(z) - target;
            for (g, xi) in grad[..dim].iter_mut().zip(x) {
                *g += residual * xi;
            }
            grad[dim] += residual;
        }
        loss /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        for (g, wi) in grad[..dim].iter_mut().zip(w) {
            *g += l2 * wi;
        }
        loss + 0.5 * l2 * dot(w, w)
    };

    let params = minimize(objective, vec![0.0; dim + 1], options);
    LogisticFit {
        weights: params[..dim].to_vec(),
        bias: params[dim],
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
