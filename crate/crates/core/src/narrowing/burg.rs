use num_complex::Complex64;

/// Complex Burg (maximum-entropy) linear predictors of every order up to a
/// maximum, from one recursion.
///
/// The order-`p` predictor estimates `x[n] = -sum_{i=1..p} a_i x[n-i]`.
#[derive(Debug, Clone)]
pub struct BurgPredictor {
    coefficients: Vec<Vec<Complex64>>,
    reflection: Vec<Complex64>,
    error_power: Vec<f64>,
}

impl BurgPredictor {
    /// Fits predictors of orders `0..=max_order`; the order is clamped to
    /// `x.len() - 1`.
    pub fn fit(x: &[Complex64], max_order: usize) -> Self {
        let n = x.len();
        let max_order = max_order.min(n.saturating_sub(1));
        let mut f = x.to_vec();
        let mut b = x.to_vec();
        let mut a = vec![Complex64::new(1.0, 0.0)];
        let mut coefficients = vec![Vec::new()];
        let mut reflection = Vec::with_capacity(max_order);
        let mut error_power = vec![x.iter().map(|v| v.norm_sqr()).sum::<f64>() / n.max(1) as f64];

        for m in 1..=max_order {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for i in m..n {
                num += f[i] * b[i - 1].conj();
                den += f[i].norm_sqr() + b[i - 1].norm_sqr();
            }
            let k = if den > 0.0 { -2.0 * num / den } else { Complex64::new(0.0, 0.0) };

            let prev = a.clone();
            a.push(Complex64::new(0.0, 0.0));
            for i in 1..=m {
                a[i] = prev.get(i).copied().unwrap_or_default() + k * prev[m - i].conj();
            }
            for i in (m..n).rev() {
                let fi = f[i];
                f[i] = fi + k * b[i - 1];
                b[i] = b[i - 1] + k.conj() * fi;
            }
            reflection.push(k);
            coefficients.push(a[1..].to_vec());
            let last = *error_power.last().unwrap();
            error_power.push(last * (1.0 - k.norm_sqr()));
        }

        Self {
            coefficients,
            reflection,
            error_power,
        }
    }

    pub fn max_order(&self) -> usize {
        self.reflection.len()
    }

    /// `a_1..a_p` of the order-`p` predictor.
    pub fn coefficients(&self, order: usize) -> &[Complex64] {
        &self.coefficients[order]
    }

    pub fn reflection(&self) -> &[Complex64] {
        &self.reflection
    }

    pub fn error_power(&self, order: usize) -> f64 {
        self.error_power[order]
    }

    /// Minimum-phase check: every reflection coefficient up to `order` has
    /// modulus at most `1 + tol`.
    pub fn is_stable(&self, order: usize, tol: f64) -> bool {
        self.reflection[..order].iter().all(|k| k.norm() <= 1.0 + tol)
    }

    /// Extends `signal` in place to `total_len` samples with the order-`p`
    /// forward predictor. Order 0 extends with zeros.
    pub fn extrapolate(&self, order: usize, signal: &mut Vec<Complex64>, total_len: usize) {
        let a = &self.coefficients[order];
        while signal.len() < total_len {
            let n = signal.len();
            let mut next = Complex64::new(0.0, 0.0);
            for (i, ai) in a.iter().enumerate() {
                if let Some(v) = n.checked_sub(i + 1).map(|j| signal[j]) {
                    next -= ai * v;
                }
            }
            signal.push(next);
        }
    }
}
