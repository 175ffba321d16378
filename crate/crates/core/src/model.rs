//! Spike cost functions and the symmetric-subspace Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of the spike barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpikeWidth {
    /// Surplus on the single site `n/4`.
    WidthOne,
    /// Surplus on `|k - n/4| < n^beta / 2`.
    Exponent(f64),
}

impl SpikeWidth {
    pub fn beta(self) -> Option<f64> {
        match self {
            SpikeWidth::WidthOne => None,
            SpikeWidth::Exponent(b) => Some(b),
        }
    }
}

/// A spike instance: `n` qubits, height `3/4 n^alpha`, centred on `n/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeParams {
    pub n: usize,
    pub alpha: f64,
    pub width: SpikeWidth,
}

impl SpikeParams {
    pub fn new(n: usize, alpha: f64, width: SpikeWidth) -> Result<Self> {
        if n == 0 || n % 4 != 0 {
            return Err(Error::InvalidParameter(format!("n = {n} must be a positive multiple of 4")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be finite and >= 0")));
        }
        if let SpikeWidth::Exponent(beta) = width {
            if !(beta.is_finite() && beta >= 0.0) {
                return Err(Error::InvalidParameter(format!("beta = {beta} must be finite and >= 0")));
            }
        }
        let params = Self { n, alpha, width };
        let (lo, hi) = params.window_unclamped();
        if lo < 0 || hi > n as i64 {
            return Err(Error::InvalidParameter(format!(
                "spike window [{lo}, {hi}] does not fit in [0, {n}]"
            )));
        }
        Ok(params)
    }

    pub fn width_one(n: usize, alpha: f64) -> Result<Self> {
        Self::new(n, alpha, SpikeWidth::WidthOne)
    }

    pub fn beta(&self) -> Option<f64> {
        self.width.beta()
    }

    /// Barrier height `3/4 n^alpha`.
    pub fn height(&self) -> f64 {
        0.75 * (self.n as f64).powf(self.alpha)
    }

    pub fn centre(&self) -> usize {
        self.n / 4
    }

    fn window_unclamped(&self) -> (i64, i64) {
        let c = (self.n / 4) as i64;
        match self.width {
            SpikeWidth::WidthOne => (c, c),
            SpikeWidth::Exponent(beta) => {
                let half = 0.5 * (self.n as f64).powf(beta);
                // Largest integer offset m with m < half.
                let m = half.ceil() as i64 - 1;
                (c - m, c + m)
            }
        }
    }

    /// Inclusive range of sites carrying the surplus.
    pub fn window(&self) -> (usize, usize) {
        let (lo, hi) = self.window_unclamped();
        (lo as usize, hi as usize)
    }

    pub fn in_window(&self, k: usize) -> bool {
        let (lo, hi) = self.window();
        (lo..=hi).contains(&k)
    }
}

/// Diagonal cost family together with its driver coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CostModel {
    Spike(SpikeParams),
    /// Hamming-symmetric cubic cost `(n/2)^3 g(u)` with shape parameter `q`.
    Cubic { n: usize, q: f64, driver: f64, table: Vec<f64> },
    Custom { table: Vec<f64>, driver: f64 },
}

impl CostModel {
    pub fn spike(params: SpikeParams) -> Self {
        CostModel::Spike(params)
    }

    /// The cubic cost with driver coefficient `n^2 / 2`.
    ///
    /// Each monomial `u^m` of `g` becomes the falling-factorial ratio `(w)_m / (n)_m`,
    /// so the binomial expectation of the table reproduces `(n/2)^3 g(u)` exactly.
    pub fn cubic(n: usize, q: f64) -> Result<Self> {
        Self::cubic_with_driver(n, q, 0.5 * (n as f64).powi(2))
    }

    pub fn cubic_with_driver(n: usize, q: f64, driver: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("cubic cost needs n >= 3, got {n}")));
        }
        if !(q.is_finite() && driver.is_finite() && driver > 0.0) {
            return Err(Error::InvalidParameter("cubic q and driver must be finite, driver > 0".into()));
        }
        let coeffs = cubic_coefficients(q);
        let nf = n as f64;
        let scale = (nf / 2.0).powi(3);
        let table = (0..=n)
            .map(|w| {
                let wf = w as f64;
                let f1 = wf / nf;
                let f2 = wf * (wf - 1.0) / (nf * (nf - 1.0));
                let f3 = wf * (wf - 1.0) * (wf - 2.0) / (nf * (nf - 1.0) * (nf - 2.0));
                scale * (coeffs[0] * f1 + coeffs[1] * f2 + coeffs[2] * f3)
            })
            .collect();
        Ok(CostModel::Cubic { n, q, driver, table })
    }

    pub fn custom(table: Vec<f64>, driver: f64) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::InvalidParameter("custom table needs n >= 1".into()));
        }
        if table.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidParameter("custom table entries must be finite".into()));
        }
        if !(driver.is_finite() && driver > 0.0) {
            return Err(Error::InvalidParameter(format!("driver = {driver} must be positive")));
        }
        Ok(CostModel::Custom { table, driver })
    }

    pub fn n(&self) -> usize {
        match self {
            CostModel::Spike(p) => p.n,
            CostModel::Cubic { n, .. } => *n,
            CostModel::Custom { table, .. } => table.len() - 1,
        }
    }

    /// Driver coefficient multiplying `(n/2 - X)`.
    pub fn driver(&self) -> f64 {
        match self {
            CostModel::Spike(_) => 1.0,
            CostModel::Cubic { driver, .. } | CostModel::Custom { driver, .. } => *driver,
        }
    }

    pub fn spike_params(&self) -> Option<&SpikeParams> {
        match self {
            CostModel::Spike(p) => Some(p),
            _ => None,
        }
    }

    /// `h(w)`.
    pub fn cost(&self, w: usize) -> Result<f64> {
        let n = self.n();
        if w > n {
            return Err(Error::OutOfRange { index: w, max: n });
        }
        Ok(match self {
            CostModel::Spike(p) => w as f64 + if p.in_window(w) { p.height() } else { 0.0 },
            CostModel::Cubic { table, .. } | CostModel::Custom { table, .. } => table[w],
        })
    }

    /// The same model with the spike surplus removed, if it is a spike.
    pub fn spikeless(&self) -> CostModel {
        match self {
            CostModel::Spike(p) => {
                CostModel::Custom { table: (0..=p.n).map(|w| w as f64).collect(), driver: 1.0 }
            }
            other => other.clone(),
        }
    }
}

/// `h(w)` for a spike instance.
pub fn cost(params: &SpikeParams, w: usize) -> Result<f64> {
    CostModel::Spike(*params).cost(w)
}

/// Monomial coefficients of `g(u) = 4q u(1-u)^2 + 4u^2(1-u) + 4/3 u^3` in `u, u^2, u^3`.
pub fn cubic_coefficients(q: f64) -> [f64; 3] {
    [4.0 * q, 4.0 - 8.0 * q, 4.0 * q - 4.0 + 4.0 / 3.0]
}

/// `g(u)` evaluated directly.
pub fn cubic_shape(q: f64, u: f64) -> f64 {
    4.0 * q * u * (1.0 - u).powi(2) + 4.0 * u * u * (1.0 - u) + 4.0 / 3.0 * u.powi(3)
}

/// The interpolation coordinate and its angle form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticPoint {
    pub s: f64,
    pub theta: f64,
    pub sin_theta: f64,
    pub cos_theta: f64,
    /// `sqrt(s^2 + (1-s)^2)`; the unnormalised gap is this times the gap of `H(s)`.
    pub norm_factor: f64,
}

impl AdiabaticPoint {
    pub fn new(s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1]")));
        }
        let norm_factor = s.hypot(1.0 - s);
        let sin_theta = (1.0 - s) / norm_factor;
        let cos_theta = s / norm_factor;
        Ok(Self { s, theta: sin_theta.atan2(cos_theta), sin_theta, cos_theta, norm_factor })
    }
}

/// `(sqrt(3) - 1) / 2`, where the spikeless first excited state has its node on `n/4`.
pub fn critical_point() -> f64 {
    (3f64.sqrt() - 1.0) / 2.0
}

/// Symmetric tridiagonal matrix on `|0>, ..., |n>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    /// `offdiag[k - 1]` couples `|k-1>` and `|k>` for `k = 1..=n`.
    pub offdiag: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::InvalidParameter(format!(
                "need diag of length m >= 1 and offdiag of length m - 1, got {} and {}",
                diag.len(),
                offdiag.len()
            )));
        }
        if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("operator entries must be finite".into()));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin interval `[lo, hi]` containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let m = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let r = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 }
                + if i + 1 < m { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Bound on the spectral radius.
    pub fn radius(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < m {
                    y += self.offdiag[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

/// Off-diagonal magnitude `1/2 sqrt(k(n+1-k))` of the collective `X`.
pub fn hopping(n: usize, k: usize) -> f64 {
    0.5 * ((k as f64) * ((n + 1 - k) as f64)).sqrt()
}

/// Normalised `H(s) = -sin(theta) C X + cos(theta) (h(k) - n/2)` in the `|k>` basis.
pub fn build_hamiltonian(cost: &CostModel, point: &AdiabaticPoint) -> TridiagonalOperator {
    let n = cost.n();
    let half = n as f64 / 2.0;
    let drive = point.sin_theta * cost.driver();
    let diag = (0..=n)
        .map(|k| point.cos_theta * (cost.cost(k).expect("k within 0..=n") - half))
        .collect();
    let offdiag = (1..=n).map(|k| -drive * hopping(n, k)).collect();
    TridiagonalOperator { diag, offdiag }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cost_examples() {
        let p = SpikeParams::width_one(100, 1.0).unwrap();
        assert_abs_diff_eq!(cost(&p, 25).unwrap(), 100.0, epsilon = 1e-12);
        assert_eq!(cost(&p, 26).unwrap(), 26.0);
        let q = SpikeParams::new(256, 0.5, SpikeWidth::Exponent(0.25)).unwrap();
        assert_abs_diff_eq!(cost(&q, 64).unwrap(), 64.0 + 0.75 * 16.0, epsilon = 1e-12);
        assert!(matches!(cost(&p, 101), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn window_uses_strict_inequality() {
        // n^beta / 2 = 2 exactly: offsets -1..=1 only.
        let p = SpikeParams::new(16, 1.0, SpikeWidth::Exponent(0.5)).unwrap();
        assert_eq!(p.window(), (3, 5));
        // n^0 / 2 = 1/2: only the centre.
        let p = SpikeParams::new(16, 1.0, SpikeWidth::Exponent(0.0)).unwrap();
        assert_eq!(p.window(), (4, 4));
        let p = SpikeParams::width_one(16, 1.0).unwrap();
        assert_eq!(p.window(), (4, 4));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(SpikeParams::width_one(6, 1.0).is_err());
        assert!(SpikeParams::width_one(8, -1.0).is_err());
        assert!(SpikeParams::new(8, 1.0, SpikeWidth::Exponent(0.99)).is_err());
        assert!(AdiabaticPoint::new(1.5).is_err());
    }

    #[test]
    fn endpoints_of_s() {
        let a = AdiabaticPoint::new(0.0).unwrap();
        assert_abs_diff_eq!(a.theta, std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
        let b = AdiabaticPoint::new(1.0).unwrap();
        assert_eq!(b.theta, 0.0);
    }

    #[test]
    fn critical_point_values() {
        let s = critical_point();
        assert_abs_diff_eq!(s, 0.366_025_403_784_438_6, epsilon = 1e-15);
        let p = AdiabaticPoint::new(s).unwrap();
        assert_abs_diff_eq!(p.cos_theta, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.sin_theta, 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.norm_factor, 3f64.sqrt() - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn builder_limits() {
        let spike = CostModel::spike(SpikeParams::width_one(4, 1.0).unwrap());
        let h0 = build_hamiltonian(&spike, &AdiabaticPoint::new(0.0).unwrap());
        assert!(h0.diag.iter().all(|&d| d == 0.0));
        assert_abs_diff_eq!(h0.offdiag[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h0.offdiag[1], -(6f64).sqrt() / 2.0, epsilon = 1e-15);
        let h1 = build_hamiltonian(&spike, &AdiabaticPoint::new(1.0).unwrap());
        assert!(h1.offdiag.iter().all(|&e| e == 0.0));
        for k in 0..=4 {
            let surplus = if k == 1 { 3.0 } else { 0.0 };
            assert_abs_diff_eq!(h1.diag[k], -(2.0 - k as f64) + surplus, epsilon = 1e-14);
        }
    }

    #[test]
    fn cubic_table_reproduces_polynomial_expectation() {
        // E[(K)_m] = (n)_m p^m for K ~ Bin(n, p).
        let n = 12;
        let q = 3.0;
        let model = CostModel::cubic(n, q).unwrap();
        let u: f64 = 0.37;
        let mut e = 0.0;
        for w in 0..=n {
            let pmf = crate::logdomain::ln_binomial_pmf(n, w, u.ln(), (1.0 - u).ln()).exp();
            e += pmf * model.cost(w).unwrap();
        }
        assert_abs_diff_eq!(e, (n as f64 / 2.0).powi(3) * cubic_shape(q, u), epsilon = 1e-10);
        assert_eq!(model.driver(), 72.0);
    }
}
