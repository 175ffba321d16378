//! Spikeless excited states, their nodes, and the avoided crossings they
//! predict for the width-one spike.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Flag;
use crate::logdomain::{ln_choose, signed_log_sum, SignedLog};
use crate::model::{build_hamiltonian, AdiabaticPoint, CostModel, SpikeParams};
use crate::search::{bisect, golden_section};
use crate::spectrum::{eigenvector, level_gap};

/// Spikeless cost `h(k) = k` with unit driver.
fn spikeless_cost(n: usize) -> Result<CostModel> {
    CostModel::custom((0..=n).map(|k| k as f64).collect(), 1.0)
}

/// Level `t` of the spikeless Hamiltonian in the symmetric subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikelessEigenstate {
    pub n: usize,
    pub t: usize,
    pub s: f64,
    pub amplitudes: Vec<SignedLog>,
}

impl SpikelessEigenstate {
    /// Continuous node positions in increasing order.
    pub fn nodes(&self) -> Vec<f64> {
        node_positions(&self.amplitudes)
    }

    pub fn node_count(&self) -> usize {
        self.nodes().len()
    }
}

/// Level `t` of the spikeless Hamiltonian at `s`, from its exactly known energy `t - n/2`.
pub fn spikeless_state(n: usize, t: usize, s: f64) -> Result<SpikelessEigenstate> {
    if t > n {
        return Err(Error::OutOfRange { index: t, max: n });
    }
    let point = AdiabaticPoint::new(s)?;
    let op = build_hamiltonian(&spikeless_cost(n)?, &point);
    let pair = eigenvector(&op, t as f64 - n as f64 / 2.0)?;
    Ok(SpikelessEigenstate { n, t, s, amplitudes: pair.vector })
}

/// `tan^2(theta/2)` at `s`.
fn half_angle_tan_sq(point: &AdiabaticPoint) -> f64 {
    (1.0 - point.cos_theta) / (1.0 + point.cos_theta)
}

/// `<k|psi_t>` from the alternating binomial sum; exact in principle but
/// subject to cancellation for large `n`.
pub fn closed_form_amplitude(n: usize, t: usize, k: i64, s: f64) -> Result<SignedLog> {
    if t > n {
        return Err(Error::OutOfRange { index: t, max: n });
    }
    if k < 0 || k as usize > n {
        return Ok(SignedLog::ZERO);
    }
    let point = AdiabaticPoint::new(s)?;
    let ln_tan_sq = half_angle_tan_sq(&point).ln();
    let ln_cos_half_sq = (0.5 * (1.0 + point.cos_theta)).ln();
    let prefactor = 0.5 * (ln_choose(n, t as i64) - ln_choose(n, k))
        + 0.5 * (t as f64 + k as f64) * ln_tan_sq
        + 0.5 * n as f64 * ln_cos_half_sq;
    let terms: Vec<SignedLog> = (0..=t as i64)
        .map(|j| {
            let ln_mag = -(j as f64) * ln_tan_sq + ln_choose(t, j) + ln_choose(n - t, k - j);
            SignedLog::new(if j % 2 == 0 { 1 } else { -1 }, ln_mag)
        })
        .collect();
    Ok(signed_log_sum(&terms).scale(prefactor))
}

/// `ln P_{n,k}`: square root of the binomial weight of `k`.
fn ln_weight(n: usize, k: i64, point: &AdiabaticPoint) -> f64 {
    let ln_sin_sq = (0.5 * (1.0 - point.cos_theta)).ln();
    let ln_cos_sq = (0.5 * (1.0 + point.cos_theta)).ln();
    0.5 * (ln_choose(n, k) + k as f64 * ln_sin_sq + (n as i64 - k) as f64 * ln_cos_sq)
}

/// Weighted sequence `P_{n,k} <k|psi_t^(n)>` for `k = 0..=n`.
pub fn weighted_sequence(state: &SpikelessEigenstate) -> Result<Vec<SignedLog>> {
    let point = AdiabaticPoint::new(state.s)?;
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(k, a)| a.scale(ln_weight(state.n, k as i64, &point)))
        .collect())
}

/// Differences `S'_k - S'_(k-1)` for `k = 0..=len`, with zero outside the sequence.
pub fn difference_sequence(seq: &[SignedLog]) -> Vec<SignedLog> {
    (0..=seq.len())
        .map(|k| {
            let cur = seq.get(k).copied().unwrap_or(SignedLog::ZERO);
            let prev = if k == 0 { SignedLog::ZERO } else { seq[k - 1] };
            signed_log_sum(&[cur, prev.neg()])
        })
        .collect()
}

/// Deviation of the level-raising recurrence at index `k`.
///
/// Both sides are computed from the eigenstates; the proportionality constant
/// is fixed at the index where the difference sequence is largest, and the
/// deviation is measured relative to that largest element.
pub fn recurrence_check(n: usize, t: usize, k: usize, s: f64) -> Result<f64> {
    if t >= n {
        return Err(Error::OutOfRange { index: t, max: n - 1 });
    }
    if k > n + 1 {
        return Err(Error::OutOfRange { index: k, max: n + 1 });
    }
    let lhs = weighted_sequence(&spikeless_state(n + 1, t + 1, s)?)?;
    let rhs = difference_sequence(&weighted_sequence(&spikeless_state(n, t, s)?)?);
    let reference = (0..rhs.len())
        .max_by(|&a, &b| rhs[a].log_mag.total_cmp(&rhs[b].log_mag))
        .expect("nonempty");
    let ratio = SignedLog::new(lhs[reference].sign * rhs[reference].sign, lhs[reference].log_mag - rhs[reference].log_mag);
    let predicted = rhs[k].mul(ratio);
    let deviation = signed_log_sum(&[lhs[k], predicted.neg()]);
    Ok((deviation.log_mag - lhs[reference].log_mag).exp())
}

/// Node positions of a sequence: the first index that is zero or changes
/// sign against the previous nonzero value, interpolated linearly.
pub fn node_positions(seq: &[SignedLog]) -> Vec<f64> {
    let mut nodes = Vec::new();
    let mut prev: Option<(usize, SignedLog)> = None;
    for (k, &a) in seq.iter().enumerate() {
        match prev {
            Some((_, p)) if a.is_zero() => {
                nodes.push(k as f64);
                prev = Some((k, SignedLog::new(-p.sign, p.log_mag)));
            }
            Some((j, p)) if a.sign != p.sign => {
                if j + 1 == k {
                    // Zero of the linear interpolant between k - 1 and k.
                    let r = (a.log_mag - p.log_mag).exp();
                    nodes.push(j as f64 + 1.0 / (1.0 + r));
                } else {
                    nodes.push(k as f64);
                }
                prev = Some((k, a));
            }
            None if !a.is_zero() => prev = Some((k, a)),
            Some(_) if !a.is_zero() => prev = Some((k, a)),
            _ => {}
        }
    }
    nodes
}

/// Signed distance of node `i` (1-based) of level `t` from `n/4`; nodes move
/// towards smaller `k` as `s` grows.
fn node_offset(n: usize, t: usize, i: usize, s: f64) -> Result<f64> {
    let nodes = spikeless_state(n, t, s)?.nodes();
    nodes
        .get(i - 1)
        .map(|x| x - n as f64 / 4.0)
        .ok_or_else(|| Error::NotFound(format!("level {t} has {} nodes at s = {s}, wanted node {i}", nodes.len())))
}

/// `s` at which node `i` of spikeless level `t` sits at `n/4`.
pub fn node_crossing_s(n: usize, t: usize, i: usize) -> Result<f64> {
    if n % 4 != 0 {
        return Err(Error::InvalidParameter(format!("n = {n} is not a multiple of 4")));
    }
    if i == 0 || i > t || t > n {
        return Err(Error::InvalidParameter(format!("need 1 <= i <= t <= n, got i = {i}, t = {t}")));
    }
    let (lo, hi) = (1e-3, 1.0 - 1e-3);
    let f = |s: f64| node_offset(n, t, i, s).unwrap_or(f64::NAN);
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::NotFound(format!("node {i} of level {t} never crosses n/4 in ({lo}, {hi})")));
    }
    bisect(f, lo, hi, 1e-14)
}

/// Predicted and, once verified, measured avoided crossing between levels `t - 1` and `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingPrediction {
    pub t: usize,
    pub i: usize,
    pub s_t_i: f64,
    pub verified_gap: Option<f64>,
    /// Location of the measured minimum.
    pub verified_s: Option<f64>,
    /// Mean spacing half a window either side of the prediction.
    pub off_dip_gap: Option<f64>,
    pub flags: Vec<Flag>,
}

impl CrossingPrediction {
    pub fn new(t: usize, i: usize, s_t_i: f64) -> Self {
        Self { t, i, s_t_i, verified_gap: None, verified_s: None, off_dip_gap: None, flags: Vec::new() }
    }

    /// Dip depth relative to the spacing away from it.
    pub fn dip_ratio(&self) -> Option<f64> {
        Some(self.verified_gap? / self.off_dip_gap?)
    }
}

/// Node-crossing prediction for `(t, i)`.
pub fn predict_crossing(n: usize, t: usize, i: usize) -> Result<CrossingPrediction> {
    Ok(CrossingPrediction::new(t, i, node_crossing_s(n, t, i)?))
}

/// Half-width of the verification grid around a prediction.
pub const VERIFY_HALF_WIDTH: f64 = 0.01;
/// Points on the verification grid.
pub const VERIFY_POINTS: usize = 41;
/// Distance from the prediction at which the reference spacing is taken.
pub const OFF_DIP_DISTANCE: f64 = 0.05;

/// Minimum of `E_t - E_(t-1)` for the width-one spike of height exponent `alpha` near the prediction.
pub fn verify_crossing(n: usize, alpha: f64, prediction: &CrossingPrediction) -> Result<CrossingPrediction> {
    let cost = CostModel::Spike(SpikeParams::width_one(n, alpha)?);
    let t = prediction.t;
    let spacing = |s: f64| level_gap(&cost, s, t, crate::NATIVE_BITS).map(|g| g.value);
    let mut out = prediction.clone();
    let mut half = VERIFY_HALF_WIDTH;
    let centre = prediction.s_t_i;
    let (s_min, g_min) = loop {
        let lo = (centre - half).max(1e-6);
        let hi = (centre + half).min(1.0 - 1e-6);
        let grid: Vec<f64> = (0..VERIFY_POINTS).map(|j| lo + (hi - lo) * j as f64 / (VERIFY_POINTS - 1) as f64).collect();
        let values = grid.iter().map(|&s| spacing(s)).collect::<Result<Vec<_>>>()?;
        let (best, _) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
        let at_edge = best == 0 || best + 1 == grid.len();
        if at_edge && half == VERIFY_HALF_WIDTH {
            half *= 2.0;
            continue;
        }
        if at_edge {
            out.flags.push(Flag::BracketEdge);
        }
        let a = grid[best.saturating_sub(1)];
        let b = grid[(best + 1).min(grid.len() - 1)];
        let (s, g) = golden_section(|s| spacing(s).unwrap_or(f64::INFINITY), a, b, 1e-12);
        break if g <= values[best] { (s, g) } else { (grid[best], values[best]) };
    };
    let sides = [centre - OFF_DIP_DISTANCE, centre + OFF_DIP_DISTANCE]
        .iter()
        .filter(|s| (0.0..=1.0).contains(*s))
        .map(|&s| spacing(s))
        .collect::<Result<Vec<_>>>()?;
    out.verified_gap = Some(g_min);
    out.verified_s = Some(s_min);
    out.off_dip_gap = (!sides.is_empty()).then(|| sides.iter().sum::<f64>() / sides.len() as f64);
    Ok(out)
}

/// Outcome of the first-node ordering check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub n: usize,
    /// First-node crossing points `s_t` for `t = 1..=t_max`.
    pub s_values: Vec<f64>,
    pub strictly_decreasing: bool,
    /// At each `s_t`, the first node of the raised sequence precedes the first node of its source.
    pub difference_nodes_precede: bool,
}

impl OrderingCheck {
    pub fn holds(&self) -> bool {
        self.strictly_decreasing && self.difference_nodes_precede
    }
}

/// Check `s_(t+1) < s_t` for the first nodes, together with the difference-sequence argument.
pub fn ordering_theorem_check(n: usize, t_max: usize) -> Result<OrderingCheck> {
    let s_values = (1..=t_max).map(|t| node_crossing_s(n, t, 1)).collect::<Result<Vec<_>>>()?;
    let strictly_decreasing = s_values.windows(2).all(|w| w[1] < w[0]);
    let mut difference_nodes_precede = true;
    for (idx, &s) in s_values.iter().enumerate() {
        let t = idx + 1;
        if t + 1 > n {
            break;
        }
        let source = weighted_sequence(&spikeless_state(n, t, s)?)?;
        let raised = weighted_sequence(&spikeless_state(n + 1, t + 1, s)?)?;
        let (first_src, first_raised) = (node_positions(&source).first().copied(), node_positions(&raised).first().copied());
        if let (Some(a), Some(b)) = (first_src, first_raised) {
            difference_nodes_precede &= b < a;
        }
    }
    Ok(OrderingCheck { n, s_values, strictly_decreasing, difference_nodes_precede })
}
