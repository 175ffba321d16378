//! Closed-form spikeless states at the critical point and the certified gap bounds built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Flag, GapEstimate, Method};
use crate::logdomain::{ln_choose, SignedLog};
use crate::model::{critical_point, CostModel, SpikeParams, TridiagonalOperator};
use crate::search::golden_section;
use crate::spectrum;

/// Mixing coefficient of the ground state in the trial family `|psi_abs> + x|psi_0>`.
pub type Mix = f64;

/// Which closed-form spikeless state at the critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Ground,
    FirstExcited,
    AbsFirstExcited,
}

/// A spikeless eigenstate at the critical point, evaluated per site on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormState {
    pub kind: StateKind,
    pub n: usize,
}

impl ClosedFormState {
    pub fn new(kind: StateKind, n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self { kind, n })
    }

    pub fn amplitude(&self, k: usize) -> SignedLog {
        if k > self.n {
            return SignedLog::ZERO;
        }
        let n = self.n as f64;
        let ground = 0.5 * ln_choose(self.n, k as i64)
            + k as f64 * 0.5f64.ln()
            + (self.n - k) as f64 * (3f64.sqrt() / 2.0).ln();
        match self.kind {
            StateKind::Ground => SignedLog::new(1, ground),
            StateKind::FirstExcited | StateKind::AbsFirstExcited => {
                let lever = n - 4.0 * k as f64;
                let base = SignedLog::from_f64(lever).scale(ground - 0.5 * (3.0 * n).ln());
                if self.kind == StateKind::AbsFirstExcited && base.sign < 0 {
                    base.neg()
                } else {
                    base
                }
            }
        }
    }

    pub fn amplitudes(&self) -> Vec<SignedLog> {
        (0..=self.n).map(|k| self.amplitude(k)).collect()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n % 4 != 0 {
        return Err(Error::InvalidParameter(format!("n = {n} must be a positive multiple of 4")));
    }
    Ok(())
}

/// `ln P(K = n/4)` for `K ~ Bin(n, 1/4)`, the squared ground amplitude on the spike.
fn ln_centre_weight(n: usize) -> f64 {
    let q = n / 4;
    ln_choose(n, q as i64) + q as f64 * 0.25f64.ln() + (n - q) as f64 * 0.75f64.ln()
}

/// `<psi_abs|psi_0>` at finite `n`.
pub fn overlap_abs_ground(n: usize) -> Result<f64> {
    check_n(n)?;
    Ok((0.5 * (3.0 * n as f64).ln() - 2f64.ln() + ln_centre_weight(n)).exp())
}

/// `<psi_0|H_sp|psi_0>` for the width-one spike of height `3/4 n^alpha`.
pub fn spike_expectation(n: usize, alpha: f64) -> Result<f64> {
    check_n(n)?;
    check_alpha(alpha)?;
    Ok((0.75f64.ln() + alpha * (n as f64).ln() + ln_centre_weight(n)).exp())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be finite and >= 0")));
    }
    Ok(())
}

/// Rayleigh quotient of `|psi_abs> + x|psi_0>` minus the spikeless first excited energy.
pub fn rayleigh_quotient(x: Mix, n: usize, alpha: f64) -> Result<f64> {
    let o = overlap_abs_ground(n)?;
    let sp = spike_expectation(n, alpha)?;
    Ok(quotient(x, o, sp))
}

fn quotient(x: f64, o: f64, sp: f64) -> f64 {
    if x.is_infinite() {
        return 0.5 * sp - 1.0;
    }
    (-2.0 * x * o + x * x * (0.5 * sp - 1.0)) / (1.0 + 2.0 * x * o + x * x)
}

/// The witness mixing `sqrt(3)/2 n^(1/2 - alpha)`.
pub fn witness_mix(n: usize, alpha: f64) -> Mix {
    3f64.sqrt() / 2.0 * (n as f64).powf(0.5 - alpha)
}

/// The variational lower bound with both the optimised and the witness mixing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    pub x_best: Mix,
    pub x_witness: Mix,
    pub value_at_witness: f64,
}

/// `-min_x` of the Rayleigh quotient, a certified lower bound on the gap at the critical point.
pub fn lower_bound(n: usize, alpha: f64) -> Result<LowerBound> {
    let o = overlap_abs_ground(n)?;
    let sp = spike_expectation(n, alpha)?;
    // Unimodal in log x: the quotient has a single positive critical point.
    let (lx, fmin) = golden_section(|lx| quotient(lx.exp(), o, sp), -60.0, 60.0, 1e-12);
    let x_witness = witness_mix(n, alpha);
    Ok(LowerBound {
        value: -fmin,
        x_best: lx.exp(),
        x_witness,
        value_at_witness: -quotient(x_witness, o, sp),
    })
}

fn spike_params(n: usize, alpha: f64) -> Result<SpikeParams> {
    SpikeParams::width_one(n, alpha)
}

/// [`lower_bound`] as a tagged estimate; zero and flagged when it carries no information.
pub fn lower_bound_gap(n: usize, alpha: f64) -> Result<GapEstimate> {
    let params = spike_params(n, alpha)?;
    let lb = lower_bound(n, alpha)?;
    let est = GapEstimate::new(lb.value.max(0.0), Method::VariationalLower, critical_point(), n, Some(params), 53);
    Ok(if lb.value > 0.0 { est } else { est.with_flag(Flag::Vacuous) })
}

/// The two branches of the stoquastic bound for the trial vector `|psi_abs> + x|psi_0>`.
pub fn upper_bound_at(x: Mix, n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let off_spike = x / (4.0 / (3.0 * nf).sqrt() + x);
    let on_spike = 1.0 - 0.375 * nf.powf(alpha) + (3.0 * nf).sqrt() / (2.0 * x);
    off_spike.max(on_spike)
}

/// The upper bound at the closed-form mixing and at the numerically best mixing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub value: f64,
    pub x_best: Mix,
    pub x_closed_form: Mix,
    pub value_at_closed_form: f64,
}

/// Stoquastic upper bound on the gap at the critical point, minimised over the mixing.
pub fn upper_bound(n: usize, alpha: f64) -> Result<UpperBound> {
    spike_params(n, alpha)?;
    let nf = n as f64;
    let denom = 3.0 * nf.powf(alpha) - 8.0;
    if denom <= 0.0 {
        return Err(Error::InvalidParameter(format!("3 n^alpha - 8 = {denom} must be positive")));
    }
    let x_closed_form = 4.0 * (3.0 * nf).sqrt() / denom;
    // One branch increases and the other decreases in x; the minimum of the max is where they cross.
    let (lx, value) = golden_section(|lx| upper_bound_at(lx.exp(), n, alpha), -60.0, 60.0, 1e-13);
    Ok(UpperBound {
        value,
        x_best: lx.exp(),
        x_closed_form,
        value_at_closed_form: upper_bound_at(x_closed_form, n, alpha),
    })
}

/// Largest `n` for which the spike first excited level is cross-checked against the spikeless one.
const FIRST_EXCITED_CHECK_LIMIT: usize = 4096;

/// [`upper_bound`] as a tagged estimate; `+inf` and flagged for `alpha <= 1`.
pub fn upper_bound_gap(n: usize, alpha: f64) -> Result<GapEstimate> {
    let params = spike_params(n, alpha)?;
    let ub = upper_bound(n, alpha)?;
    let s = critical_point();
    if alpha <= 1.0 {
        return Ok(GapEstimate::new(f64::INFINITY, Method::StoquasticUpper, s, n, Some(params), 53).with_flag(Flag::Vacuous));
    }
    let mut est = GapEstimate::new(ub.value, Method::StoquasticUpper, s, n, Some(params), 53);
    if n <= FIRST_EXCITED_CHECK_LIMIT {
        let op = crate::model::build_hamiltonian(&CostModel::Spike(params), &crate::model::AdiabaticPoint::new(s)?);
        let levels = spectrum::lowest_eigenvalues(&op, 2, 53)?;
        let spikeless_first = -(n as f64) / 2.0 + 1.0;
        if (levels[1] - spikeless_first).abs() > 1e-9 * n as f64 {
            est = est.with_flag(Flag::FirstExcitedShifted);
        }
    }
    Ok(est)
}

/// Lower and upper bound with the mixings that achieve them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
    pub x_lower: Mix,
    pub x_upper: Mix,
}

pub fn bounds(n: usize, alpha: f64) -> Result<BoundPair> {
    let lb = lower_bound(n, alpha)?;
    let ub = upper_bound(n, alpha)?;
    let upper = if alpha > 1.0 { ub.value } else { f64::INFINITY };
    Ok(BoundPair { lower: lb.value.max(0.0), upper, x_lower: lb.x_best, x_upper: ub.x_best })
}

/// `min_k (H phi)_k / phi_k` for a stoquastic operator and a positive vector: a lower bound on
/// the ground energy.
pub fn stoquastic_energy_bound(op: &TridiagonalOperator, phi: &[f64]) -> Result<f64> {
    if phi.len() != op.dim() {
        return Err(Error::InvalidParameter(format!("vector length {} != dimension {}", phi.len(), op.dim())));
    }
    if phi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InvalidParameter("trial vector must be strictly positive".into()));
    }
    if op.offdiag.iter().any(|&e| e > 0.0) {
        return Err(Error::InvalidParameter("operator has positive off-diagonal entries".into()));
    }
    let hphi = op.apply(phi);
    Ok(hphi.iter().zip(phi).map(|(h, p)| h / p).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn overlap_small_n_closed_form() {
        assert_abs_diff_eq!(overlap_abs_ground(4).unwrap(), 3f64.sqrt() * 27.0 / 64.0, epsilon = 1e-14);
        assert!(overlap_abs_ground(6).is_err());
    }

    #[test]
    fn spike_expectation_small_n() {
        let expect = 0.75 * 8.0 * 28.0 * (0.25f64).powi(2) * 0.75f64.powi(6);
        assert_abs_diff_eq!(spike_expectation(8, 1.0).unwrap(), expect, epsilon = 1e-14);
        let w = 28.0 * (0.25f64).powi(2) * 0.75f64.powi(6);
        assert_abs_diff_eq!(spike_expectation(8, 0.0).unwrap(), 0.75 * w, epsilon = 1e-14);
    }

    #[test]
    fn quotient_limits() {
        assert_eq!(rayleigh_quotient(0.0, 100, 1.0).unwrap(), 0.0);
        let sp = spike_expectation(100, 1.0).unwrap();
        assert_abs_diff_eq!(rayleigh_quotient(f64::INFINITY, 100, 1.0).unwrap(), 0.5 * sp - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rayleigh_quotient(1e12, 100, 1.0).unwrap(), 0.5 * sp - 1.0, epsilon = 1e-9);
    }

    #[test]
    fn optimised_mixing_matches_stationary_point() {
        // The quotient's derivative vanishes where o(a+1)x^2 + a x - o = 0, a = sp/2 - 1.
        for (n, alpha) in [(100usize, 1.0), (1000, 1.5), (400, 0.3)] {
            let o = overlap_abs_ground(n).unwrap();
            let a = 0.5 * spike_expectation(n, alpha).unwrap() - 1.0;
            let x = (-a + (a * a + 4.0 * o * o * (a + 1.0)).sqrt()) / (2.0 * o * (a + 1.0));
            let lb = lower_bound(n, alpha).unwrap();
            assert!((lb.x_best / x - 1.0).abs() < 1e-6, "n={n}");
            assert_abs_diff_eq!(lb.value, -quotient(x, o, 2.0 * (a + 1.0)), epsilon = 1e-12);
            assert!(lb.value >= lb.value_at_witness);
        }
    }

    #[test]
    fn upper_bound_closed_form_value() {
        let ub = upper_bound(100, 2.0).unwrap();
        assert_abs_diff_eq!(ub.value_at_closed_form, 300.0 / 30292.0, epsilon = 1e-14);
        assert!(ub.value <= ub.value_at_closed_form + 1e-15);
        assert!(matches!(upper_bound(4, 0.5), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn weak_spike_upper_bound_is_vacuous() {
        let est = upper_bound_gap(400, 0.9).unwrap();
        assert!(est.value.is_infinite() && est.has(Flag::Vacuous));
    }

    #[test]
    fn first_excited_amplitude_has_node_on_spike() {
        let st = ClosedFormState::new(StateKind::FirstExcited, 40).unwrap();
        assert!(st.amplitude(10).is_zero());
        assert_eq!(st.amplitude(9).sign, 1);
        assert_eq!(st.amplitude(11).sign, -1);
        let abs = ClosedFormState::new(StateKind::AbsFirstExcited, 40).unwrap();
        assert!(abs.amplitudes().iter().all(|a| a.sign >= 0));
    }
}
