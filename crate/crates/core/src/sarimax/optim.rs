//! Quasi-Newton (BFGS) minimization with central-difference gradients.

const GRAD_STEP: f64 = 1e-5;
/// Gradient norm below which a stalled line search still counts as converged;
/// central differences are noisy around 1e-9 on the objectives used here.
const STALL_GRAD_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Largest step (infinity norm) tried by the line search.
    pub max_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn numeric_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = GRAD_STEP * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let up = f(&xp);
            xp[i] = x[i] - h;
            let down = f(&xp);
            xp[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which should return `f64::INFINITY` outside its domain.
pub(crate) fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: BfgsOptions) -> Minimum {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if n == 0 {
        return Minimum {
            x,
            value: fx,
            grad_norm: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut g = numeric_gradient(&f, &x);
    let identity = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        (0..n).for_each(|i| h[i * n + i] = 1.0);
    };
    let mut hinv = vec![0.0; n * n];
    identity(&mut hinv);
    let mut fresh = true;

    for iter in 0..opts.max_iter {
        let gnorm = inf_norm(&g);
        if gnorm < opts.grad_tol {
            return Minimum {
                x,
                value: fx,
                grad_norm: gnorm,
                iterations: iter,
                converged: true,
            };
        }
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            identity(&mut hinv);
            fresh = true;
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = (opts.max_step / inf_norm(&dir)).min(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if fresh {
                return Minimum {
                    x,
                    value: fx,
                    grad_norm: gnorm,
                    iterations: iter,
                    converged: gnorm < STALL_GRAD_TOL,
                };
            }
            identity(&mut hinv);
            fresh = true;
            continue;
        };
        let gn = numeric_gradient(&f, &xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                // Scale the initial inverse Hessian before the first update.
                let scale = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|v| *v *= scale);
            }
            let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
            fresh = false;
        }
        x = xn;
        fx = fnew;
        g = gn;
    }
    let gnorm = inf_norm(&g);
    Minimum {
        x,
        value: fx,
        grad_norm: gnorm,
        iterations: opts.max_iter,
        converged: gnorm < opts.grad_tol,
    }
}
