//! Brute-force reference implementations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Maps partial autocorrelations in (-1, 1) to stationary AR coefficients
/// (Durbin-Levinson), so `1 - Σ φ_k z^k` has all roots outside the unit circle.
pub fn pacf_to_ar(r: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::new();
    for (k, &rk) in r.iter().enumerate() {
        let prev = phi.clone();
        phi.push(rk);
        for j in 0..k {
            phi[j] = prev[j] - rk * prev[k - 1 - j];
        }
    }
    phi
}

/// Coefficients of `1 + sign Σ c_i B^{i·step}` times `1 + sign Σ d_i B^{i·s}`,
/// as a dense polynomial starting with the constant term.
pub fn seasonal_product(regular: &[f64], seasonal: &[f64], season: usize, sign: f64) -> Vec<f64> {
    let expand = |c: &[f64], step: usize| {
        let mut p = vec![0.0; c.len() * step + 1];
        p[0] = 1.0;
        for (i, v) in c.iter().enumerate() {
            p[(i + 1) * step] = sign * v;
        }
        p
    };
    let a = expand(regular, 1);
    let b = expand(seasonal, season);
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Autocovariances `γ(0..=lags)` of `ar(B) u = ma(B) ε` with unit-variance
/// innovations, from a long truncation of the MA(∞) weights.
pub fn arma_autocovariance(ar: &[f64], ma: &[f64], lags: usize) -> Vec<f64> {
    const TERMS: usize = 8000;
    let mut psi = vec![0.0; TERMS];
    for j in 0..TERMS {
        let mut v = ma.get(j).copied().unwrap_or(0.0);
        for k in 1..ar.len().min(j + 1) {
            v -= ar[k] * psi[j - k];
        }
        psi[j] = v;
    }
    (0..=lags)
        .map(|h| psi.iter().zip(&psi[h..]).map(|(a, b)| a * b).sum())
        .collect()
}

/// Log-density of `e ~ N(0, σ² Γ)` with Toeplitz `Γ` built from `gamma`.
pub fn dense_gaussian_loglik(e: &[f64], gamma: &[f64], sigma2: f64) -> f64 {
    let n = e.len();
    let cov = DMatrix::from_fn(n, n, |i, j| sigma2 * gamma[i.abs_diff(j)]);
    let chol = cov.cholesky().expect("autocovariance matrix is positive definite");
    let l = chol.l();
    let logdet: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let ev = DVector::from_column_slice(e);
    let quad = ev.dot(&chol.solve(&ev));
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

/// `(1 - B)^d` applied to `v`.
pub fn naive_difference(v: &[f64], d: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    out
}

pub fn mcp_penalty(b: f64, lambda: f64, gamma: f64) -> f64 {
    let a = b.abs();
    if a <= gamma * lambda {
        lambda * a - a * a / (2.0 * gamma)
    } else {
        gamma * lambda * lambda / 2.0
    }
}

pub fn mcp_objective(x: &DMatrix<f64>, z: &DVector<f64>, beta: &DVector<f64>, lambda: f64, gamma: f64) -> f64 {
    let n = z.len() as f64;
    let r = z - x * beta;
    r.norm_squared() / (2.0 * n) + beta.iter().map(|b| mcp_penalty(*b, lambda, gamma)).sum::<f64>()
}

/// Global minimum of the MCP objective by exhaustive search.
///
/// Each coordinate is either zero, inside the concave part with a fixed sign,
/// or in the flat part `|β| ≥ γλ`. On each such piece the objective is
/// quadratic, and because the penalty is continuously differentiable away
/// from zero a global minimizer is a stationary point of the piece that
/// contains it. Every piece's stationary point is solved for and kept when it
/// lies in its piece.
pub fn mcp_exhaustive(x: &DMatrix<f64>, z: &DVector<f64>, lambda: f64, gamma: f64) -> (DVector<f64>, f64) {
    let (n, p) = x.shape();
    let nf = n as f64;
    let gram = x.transpose() * x / nf;
    let xz = x.transpose() * z / nf;
    let mut best = DVector::zeros(p);
    let mut best_obj = mcp_objective(x, z, &best, lambda, gamma);
    let edge = gamma * lambda;
    // State per coordinate: 0 zero, 1 inner positive, 2 inner negative, 3 flat.
    for code in 0..4usize.pow(p as u32) {
        let states: Vec<usize> = (0..p).map(|j| (code / 4usize.pow(j as u32)) % 4).collect();
        let active: Vec<usize> = (0..p).filter(|&j| states[j] != 0).collect();
        if active.is_empty() {
            continue;
        }
        let k = active.len();
        let mut h = DMatrix::from_fn(k, k, |a, b| gram[(active[a], active[b])]);
        let mut g = DVector::from_fn(k, |a, _| xz[active[a]]);
        for (a, &j) in active.iter().enumerate() {
            match states[j] {
                1 => {
                    h[(a, a)] -= 1.0 / gamma;
                    g[a] -= lambda;
                }
                2 => {
                    h[(a, a)] -= 1.0 / gamma;
                    g[a] += lambda;
                }
                _ => {}
            }
        }
        let Some(sol) = h.lu().solve(&g) else { continue };
        let feasible = active.iter().zip(sol.iter()).all(|(&j, &b)| match states[j] {
            1 => b > 0.0 && b <= edge,
            2 => b < 0.0 && b >= -edge,
            _ => b.abs() >= edge,
        });
        if !feasible {
            continue;
        }
        let mut beta = DVector::zeros(p);
        for (&j, &b) in active.iter().zip(sol.iter()) {
            beta[j] = b;
        }
        let obj = mcp_objective(x, z, &beta, lambda, gamma);
        if obj < best_obj {
            best_obj = obj;
            best = beta;
        }
    }
    (best, best_obj)
}

/// Firm thresholding: the MCP solution for one coordinate with unit scale.
pub fn firm_threshold(c: f64, lambda: f64, gamma: f64) -> f64 {
    if c.abs() <= lambda {
        0.0
    } else if c.abs() <= gamma * lambda {
        c.signum() * (c.abs() - lambda) / (1.0 - 1.0 / gamma)
    } else {
        c
    }
}

/// VAR(q) least squares through explicit normal equations.
///
/// Returns `(delta, lags, sigma)` with `lags[l]` multiplying `y_{t-1-l}` and
/// `sigma` the residual covariance divided by the number of fitted rows.
pub fn var_normal_equations(y: &DMatrix<f64>, q: usize) -> (DVector<f64>, Vec<DMatrix<f64>>, DMatrix<f64>) {
    let (t, n) = y.shape();
    let rows = t - q;
    let k = 1 + n * q;
    let mut x = DMatrix::zeros(rows, k);
    let mut resp = DMatrix::zeros(rows, n);
    for r in 0..rows {
        let tt = r + q;
        x[(r, 0)] = 1.0;
        for l in 0..q {
            for i in 0..n {
                x[(r, 1 + l * n + i)] = y[(tt - 1 - l, i)];
            }
        }
        for i in 0..n {
            resp[(r, i)] = y[(tt, i)];
        }
    }
    let xtx_inv = (x.transpose() * &x).try_inverse().expect("design has full column rank");
    let b = xtx_inv * x.transpose() * &resp;
    let delta = DVector::from_fn(n, |i, _| b[(0, i)]);
    let lags = (0..q)
        .map(|l| DMatrix::from_fn(n, n, |i, j| b[(1 + l * n + j, i)]))
        .collect();
    let resid = &resp - &x * &b;
    let sigma = resid.transpose() * &resid / rows as f64;
    (delta, lags, sigma)
}
