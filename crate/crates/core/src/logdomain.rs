//! Log-domain helpers: signed log-magnitudes and binomial weights.

use serde::{Deserialize, Serialize};

/// A real number stored as a sign and the natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedLog {
    pub sign: i8,
    pub log_mag: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { sign: 0, log_mag: f64::NEG_INFINITY };

    pub fn new(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { sign: sign.signum(), log_mag }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self { sign: if x > 0.0 { 1 } else { -1 }, log_mag: x.abs().ln() }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_mag.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn mul(self, other: SignedLog) -> SignedLog {
        SignedLog::new(self.sign * other.sign, self.log_mag + other.log_mag)
    }

    /// Value times `exp(shift)`.
    pub fn scale(self, shift: f64) -> SignedLog {
        SignedLog::new(self.sign, self.log_mag + shift)
    }

    pub fn neg(self) -> SignedLog {
        SignedLog::new(-self.sign, self.log_mag)
    }
}

/// `ln C(n, k)`, or `-inf` outside `0..=n`.
pub fn ln_choose(n: usize, k: i64) -> f64 {
    if k < 0 || k as usize > n {
        return f64::NEG_INFINITY;
    }
    let k = k as usize;
    if k == 0 || k == n {
        return 0.0;
    }
    let nf = n as f64;
    let kf = k as f64;
    libm::lgamma(nf + 1.0) - libm::lgamma(kf + 1.0) - libm::lgamma(nf - kf + 1.0)
}

/// Table of `ln C(n, k)` for `k = 0..=n`, built by exact-ratio accumulation from the centre.
pub fn ln_choose_row(n: usize) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    let mid = n / 2;
    row[mid] = ln_choose(n, mid as i64);
    for k in mid + 1..=n {
        row[k] = row[k - 1] + ((n + 1 - k) as f64).ln() - (k as f64).ln();
    }
    for k in (0..mid).rev() {
        row[k] = row[k + 1] + ((k + 1) as f64).ln() - ((n - k) as f64).ln();
    }
    row
}

/// `ln P(K = k)` for `K ~ Bin(n, p)`, given `ln p` and `ln(1 - p)`.
pub fn ln_binomial_pmf(n: usize, k: usize, ln_p: f64, ln_q: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let a = if k == 0 { 0.0 } else { k as f64 * ln_p };
    let b = if k == n { 0.0 } else { (n - k) as f64 * ln_q };
    ln_choose(n, k as i64) + a + b
}

/// `ln Σ exp(x_i)`, ignoring `-inf` entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Sum of signed-log terms, returned in signed-log form.
pub fn signed_log_sum(terms: &[SignedLog]) -> SignedLog {
    let m = terms.iter().filter(|t| !t.is_zero()).map(|t| t.log_mag).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return SignedLog::ZERO;
    }
    // Neumaier summation of the rescaled terms.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms.iter().filter(|t| !t.is_zero()) {
        let v = f64::from(t.sign) * (t.log_mag - m).exp();
        let s = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - s) + v;
        } else {
            comp += (v - s) + sum;
        }
        sum = s;
    }
    SignedLog::from_f64(sum + comp).scale(m)
}
