//! Mapping between unconstrained optimizer coordinates and stationary /
//! invertible lag polynomials.
//!
//! Each polynomial block is parameterized by partial autocorrelations
//! `r_k = x_k / sqrt(1 + x_k^2)` in (-1, 1), turned into coefficients by the
//! Durbin-Levinson recursion. Any real input yields a polynomial with all
//! roots outside the unit circle.

use crate::series::poly_mul;

/// Coefficients `φ` of a stationary AR polynomial `1 - φ_1 B - ... - φ_p B^p`.
pub(crate) fn constrain_stationary(unconstrained: &[f64]) -> Vec<f64> {
    let pacf: Vec<f64> = unconstrained.iter().map(|x| x / (1.0 + x * x).sqrt()).collect();
    levinson_from_pacf(&pacf)
}

fn levinson_from_pacf(pacf: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &r) in pacf.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - r * prev[k - 1 - j];
        }
        phi.push(r);
    }
    phi
}

/// Inverse of [`constrain_stationary`]; `None` when `phi` is not stationary.
#[cfg(test)]
pub(crate) fn unconstrain_stationary(phi: &[f64]) -> Option<Vec<f64>> {
    let mut cur = phi.to_vec();
    let mut pacf = vec![0.0; phi.len()];
    for k in (0..phi.len()).rev() {
        let r = cur[k];
        if !(r.abs() < 1.0) {
            return None;
        }
        pacf[k] = r;
        let denom = 1.0 - r * r;
        let prev: Vec<f64> = (0..k).map(|j| (cur[j] + r * cur[k - 1 - j]) / denom).collect();
        cur = prev;
    }
    Some(pacf.iter().map(|r| r / (1.0 - r * r).sqrt()).collect())
}

/// The four coefficient blocks of a seasonal ARMA.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct ArmaCoefficients {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
}

/// Block sizes of the unconstrained parameter vector, in storage order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ArmaOrders {
    pub p: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_q: usize,
    pub season: usize,
}

impl ArmaOrders {
    pub fn n_params(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    /// Unconstrained vector → coefficients. MA blocks are sign-flipped AR
    /// polynomials so `1 + θ_1 B + ...` is invertible.
    pub fn constrain(&self, x: &[f64]) -> ArmaCoefficients {
        let (ar, rest) = x.split_at(self.p);
        let (ma, rest) = rest.split_at(self.q);
        let (sar, sma) = rest.split_at(self.seasonal_p);
        ArmaCoefficients {
            ar: constrain_stationary(ar),
            ma: constrain_stationary(ma).into_iter().map(|v| -v).collect(),
            seasonal_ar: constrain_stationary(sar),
            seasonal_ma: constrain_stationary(sma).into_iter().map(|v| -v).collect(),
        }
    }

    #[cfg(test)]
    pub fn unconstrain(&self, c: &ArmaCoefficients) -> Option<Vec<f64>> {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let mut out = unconstrain_stationary(&c.ar)?;
        out.extend(unconstrain_stationary(&neg(&c.ma))?);
        out.extend(unconstrain_stationary(&c.seasonal_ar)?);
        out.extend(unconstrain_stationary(&neg(&c.seasonal_ma))?);
        Some(out)
    }
}

impl ArmaCoefficients {
    /// Expanded AR coefficients `a_k` of `φ(B)Φ(B^s) = 1 - Σ a_k B^k`.
    pub fn full_ar(&self, season: usize) -> Vec<f64> {
        let reg = lag_poly(&self.ar, 1, -1.0);
        let sea = lag_poly(&self.seasonal_ar, season, -1.0);
        let prod = poly_mul(&reg, &sea);
        trim(prod[1..].iter().map(|v| -v).collect())
    }

    /// Expanded MA coefficients `b_k` of `θ(B)Θ(B^s) = 1 + Σ b_k B^k`.
    pub fn full_ma(&self, season: usize) -> Vec<f64> {
        let reg = lag_poly(&self.ma, 1, 1.0);
        let sea = lag_poly(&self.seasonal_ma, season, 1.0);
        let prod = poly_mul(&reg, &sea);
        trim(prod[1..].to_vec())
    }
}

/// `1 + sign·Σ c_i B^{i·step}` as a dense coefficient vector.
fn lag_poly(coefs: &[f64], step: usize, sign: f64) -> Vec<f64> {
    let mut poly = vec![0.0; coefs.len() * step + 1];
    poly[0] = 1.0;
    for (i, c) in coefs.iter().enumerate() {
        poly[(i + 1) * step] = sign * c;
    }
    poly
}

fn trim(mut v: Vec<f64>) -> Vec<f64> {
    while v.last() == Some(&0.0) {
        v.pop();
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Roots of `1 - Σ φ_k z^k` via the companion matrix eigenvalues.
    fn min_root_modulus(phi: &[f64]) -> f64 {
        let p = phi.len();
        let mut c = nalgebra::DMatrix::zeros(p, p);
        for j in 0..p {
            c[(0, j)] = phi[j];
        }
        for i in 1..p {
            c[(i, i - 1)] = 1.0;
        }
        // Eigenvalues of the companion are reciprocal roots.
        let eig = c.complex_eigenvalues();
        1.0 / eig.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn constrained_polynomials_are_stationary() {
        for x in [
            vec![3.0],
            vec![-5.0, 4.0],
            vec![10.0, -10.0, 10.0, 2.0],
            vec![0.3, 0.2, -0.1],
        ] {
            let phi = constrain_stationary(&x);
            assert!(min_root_modulus(&phi) > 1.0, "{phi:?}");
        }
    }

    #[test]
    fn unconstrain_inverts() {
        let x = vec![0.7, -1.2, 0.4];
        let phi = constrain_stationary(&x);
        let back = unconstrain_stationary(&phi).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(unconstrain_stationary(&[1.5]).is_none());
    }

    #[test]
    fn orders_round_trip() {
        let o = ArmaOrders {
            p: 2,
            q: 1,
            seasonal_p: 1,
            seasonal_q: 1,
            season: 7,
        };
        let x = vec![0.4, -0.9, 1.3, -0.2, 0.6];
        let back = o.unconstrain(&o.constrain(&x)).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ar1_mapping() {
        // Single coefficient: φ = x / sqrt(1 + x²).
        let phi = constrain_stationary(&[1.0]);
        assert!((phi[0] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn multiplicative_expansion() {
        let c = ArmaCoefficients {
            ar: vec![0.5],
            seasonal_ar: vec![0.4],
            ma: vec![0.3],
            seasonal_ma: vec![0.2],
        };
        // (1 - 0.5B)(1 - 0.4B^3) = 1 - 0.5B - 0.4B^3 + 0.2B^4
        assert_eq!(c.full_ar(3), vec![0.5, 0.0, 0.4, -0.2]);
        // (1 + 0.3B)(1 + 0.2B^3) = 1 + 0.3B + 0.2B^3 + 0.06B^4
        let ma = c.full_ma(3);
        assert!((ma[0] - 0.3).abs() < 1e-15 && ma[1] == 0.0);
        assert!((ma[2] - 0.2).abs() < 1e-15 && (ma[3] - 0.06).abs() < 1e-15);
    }
}
