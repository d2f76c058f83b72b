//! Kalman filter for a stationary ARMA process in Harvey's state-space form.
//!
//! For `u_t = Σ a_k u_{t-k} + ε_t + Σ b_k ε_{t-k}` with state dimension
//! `r = max(p, q + 1)`:
//!
//! ```text
//! α_{t+1} = T α_t + R ε_{t+1},   u_t = α_t[0]
//! T = [a | I_{r-1}; 0],          R = (1, b_1, ..., b_{r-1})'
//! ```
//!
//! The filter runs with unit innovation variance so the scale can be
//! concentrated out. Several data columns share one covariance recursion,
//! which is how the regression coefficients are profiled by GLS.

use nalgebra::DMatrix;

use crate::{Error, Result};

const MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Clone)]
pub(crate) struct ArmaStateSpace {
    r: usize,
    /// First column of `T`, length `r`.
    ar: Vec<f64>,
    /// Selection vector `R`, length `r`.
    sel: Vec<f64>,
}

impl ArmaStateSpace {
    pub fn new(ar: &[f64], ma: &[f64]) -> Self {
        let r = ar.len().max(ma.len() + 1).max(1);
        let mut a = vec![0.0; r];
        a[..ar.len()].copy_from_slice(ar);
        let mut sel = vec![0.0; r];
        sel[0] = 1.0;
        sel[1..=ma.len()].copy_from_slice(ma);
        Self { r, ar: a, sel }
    }

    #[cfg(test)]
    pub fn dim(&self) -> usize {
        self.r
    }

    /// `a ← T a`.
    pub fn transition(&self, state: &mut [f64]) {
        let head = state[0];
        for i in 0..self.r {
            let next = if i + 1 < self.r { state[i + 1] } else { 0.0 };
            state[i] = self.ar[i] * head + next;
        }
    }

    /// Unconditional state covariance solving `P = T P T' + R R'`, by doubling.
    pub fn stationary_covariance(&self) -> Result<Vec<f64>> {
        let r = self.r;
        let mut t = DMatrix::zeros(r, r);
        for i in 0..r {
            t[(i, 0)] = self.ar[i];
            if i + 1 < r {
                t[(i, i + 1)] = 1.0;
            }
        }
        let mut p = DMatrix::from_fn(r, r, |i, j| self.sel[i] * self.sel[j]);
        let mut a = t;
        for _ in 0..MAX_DOUBLINGS {
            let inc = &a * &p * a.transpose();
            let inc_max = inc.amax();
            p += inc;
            if !p.iter().all(|v| v.is_finite()) {
                break;
            }
            if inc_max <= 1e-17 * p.amax() {
                let sym = (&p + p.transpose()) * 0.5;
                return Ok(sym.transpose().as_slice().to_vec());
            }
            a = &a * &a;
        }
        Err(Error::Domain("ARMA parameters are not stationary".into()))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct FilterOutput {
    /// One-step prediction errors per column, for `σ² = 1`.
    pub innovations: Vec<Vec<f64>>,
    /// Prediction error variances, shared by all columns.
    pub variances: Vec<f64>,
    /// Predicted state `a_{n+1|n}` per column after the last observation.
    pub next_states: Vec<Vec<f64>>,
}

/// Filters each column through the same state space.
pub(crate) fn filter(ss: &ArmaStateSpace, columns: &[&[f64]]) -> Result<FilterOutput> {
    let r = ss.r;
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension("filter columns differ in length".into()));
    }
    let mut p = ss.stationary_covariance()?;
    let mut states = vec![vec![0.0; r]; columns.len()];
    let mut innovations = vec![Vec::with_capacity(n); columns.len()];
    let mut variances = Vec::with_capacity(n);
    let mut gain = vec![0.0; r];
    let mut m = vec![0.0; r * r];
    let mut pcol = vec![0.0; r];
    let mut steady = false;

    for t in 0..n {
        let f = p[0];
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Domain(format!("non-positive prediction variance at t={t}")));
        }
        for i in 0..r {
            gain[i] = p[i * r] / f;
        }
        for (c, col) in columns.iter().enumerate() {
            let a = &mut states[c];
            let v = col[t] - a[0];
            innovations[c].push(v);
            for i in 0..r {
                a[i] += gain[i] * v;
            }
            ss.transition(a);
        }
        variances.push(f);
        if steady {
            continue;
        }
        // Updated covariance P - P e1 e1' P / F, then M = T P_u, P_next = M T' + R R'.
        pcol.iter_mut().enumerate().for_each(|(i, v)| *v = p[i * r]);
        for (i, row) in p.chunks_exact_mut(r).enumerate() {
            let scale = pcol[i] / f;
            row.iter_mut().zip(&pcol).for_each(|(v, c)| *v -= scale * c);
        }
        // Row i of T P_u is a_i times row 0 plus row i + 1.
        for i in 0..r {
            let ai = ss.ar[i];
            let (head, rest) = p.split_at(r);
            let dst = &mut m[i * r..(i + 1) * r];
            if i + 1 < r {
                let below = &rest[i * r..(i + 1) * r];
                dst.iter_mut()
                    .zip(head.iter().zip(below))
                    .for_each(|(d, (h, b))| *d = ai * h + b);
            } else {
                dst.iter_mut().zip(head).for_each(|(d, h)| *d = ai * h);
            }
        }
        // Row i of M T' is m_i0 times a plus row i of M shifted left by one.
        let mut delta = 0.0f64;
        for i in 0..r {
            let (mi0, si) = (m[i * r], ss.sel[i]);
            let src = &m[i * r..(i + 1) * r];
            let dst = &mut p[i * r..(i + 1) * r];
            let right = src[1..].iter().chain(std::iter::once(&0.0));
            for (((d, a), sj), rt) in dst.iter_mut().zip(&ss.ar).zip(&ss.sel).zip(right) {
                let next = mi0 * a + rt + si * sj;
                delta = delta.max((next - *d).abs());
                *d = next;
            }
        }
        // Once the covariance has converged the gain is fixed.
        if delta < 1e-15 {
            steady = true;
        }
    }
    Ok(FilterOutput {
        innovations,
        variances,
        next_states: states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_covariance_is_unit() {
        let ss = ArmaStateSpace::new(&[], &[]);
        assert_eq!(ss.dim(), 1);
        assert_eq!(ss.stationary_covariance().unwrap(), vec![1.0]);
    }

    #[test]
    fn ar1_variance() {
        let ss = ArmaStateSpace::new(&[0.6], &[]);
        let p = ss.stationary_covariance().unwrap();
        assert!((p[0] - 1.0 / (1.0 - 0.36)).abs() < 1e-12);
    }

    #[test]
    fn nonstationary_rejected() {
        let ss = ArmaStateSpace::new(&[1.0], &[]);
        assert!(ss.stationary_covariance().is_err());
    }

    #[test]
    fn ar1_filter_innovations() {
        // After the first point the AR(1) prediction is φ·u_{t-1} with unit variance.
        let ss = ArmaStateSpace::new(&[0.5], &[]);
        let y = [1.0, 2.0, -1.0];
        let out = filter(&ss, &[&y]).unwrap();
        assert!((out.variances[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((out.innovations[0][1] - 1.5).abs() < 1e-12);
        assert!((out.innovations[0][2] + 2.0).abs() < 1e-12);
        assert!((out.variances[2] - 1.0).abs() < 1e-12);
        assert!((out.next_states[0][0] + 0.5).abs() < 1e-12);
    }
}
