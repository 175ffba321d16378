//! Discrete WKB estimate of the gap between the two highest levels of the
//! negated Hamiltonian at the width-one critical point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{critical_point, AdiabaticPoint};
use crate::quadrature::{integrate, integrate_with_root_ends_to};
use crate::scaling::{self, ScalingFit};
use crate::search::bisect;

const QUAD_TOL: f64 = 1e-11;
/// Largest accepted energy offset below the spikeless band top.
pub const MAX_OFFSET: f64 = 2.0;

/// Which side of the abrupt turning point a one-sided quantity is taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Outside the spike, in the classically allowed region.
    Outside,
    /// Inside the spike, in the forbidden region.
    Inside,
}

/// Band functions of the three-term recursion, continued to real `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkbBands {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    sin_theta: f64,
    cos_theta: f64,
}

impl WkbBands {
    pub fn new(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 0.5) {
            return Err(Error::Inapplicable(format!(
                "WKB needs 0 < alpha < 1 and 0 < beta < 1/2, got ({alpha}, {beta})"
            )));
        }
        if n < 16 || n % 4 != 0 {
            return Err(Error::InvalidParameter(format!("n = {n} must be a multiple of 4 and at least 16")));
        }
        let point = AdiabaticPoint::new(critical_point())?;
        Ok(Self { n, alpha, beta, sin_theta: point.sin_theta, cos_theta: point.cos_theta })
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Hopping amplitude `p(j)`.
    pub fn hopping(&self, j: f64) -> f64 {
        0.5 * self.sin_theta * (j * (self.nf() + 1.0 - j)).max(0.0).sqrt()
    }

    fn hopping_slope(&self, j: f64) -> f64 {
        let prod = j * (self.nf() + 1.0 - j);
        0.5 * self.sin_theta * (self.nf() + 1.0 - 2.0 * j) / (2.0 * prod.sqrt())
    }

    /// Depth by which the spike lowers the on-site term.
    pub fn spike_depth(&self) -> f64 {
        self.cos_theta * 0.75 * self.nf().powf(self.alpha)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.nf().powf(self.beta)
    }

    pub fn centre(&self) -> f64 {
        self.nf() / 4.0
    }

    /// Abrupt turning point at the left spike edge.
    pub fn spike_edge(&self) -> f64 {
        self.centre() - self.half_width()
    }

    fn in_spike(&self, j: f64) -> bool {
        (j - self.centre()).abs() < self.half_width()
    }

    fn onsite_with(&self, j: f64, spiked: bool) -> f64 {
        let base = self.cos_theta * (self.nf() / 2.0 - j);
        if spiked {
            base - self.spike_depth()
        } else {
            base
        }
    }

    /// On-site term `w(j)`.
    pub fn onsite(&self, j: f64) -> f64 {
        self.onsite_with(j, self.in_spike(j))
    }

    fn spiked(&self, j: f64, side: Option<Side>) -> bool {
        match side {
            Some(Side::Inside) => true,
            Some(Side::Outside) => false,
            None => self.in_spike(j),
        }
    }

    fn upper_with(&self, j: f64, side: Option<Side>) -> f64 {
        self.onsite_with(j, self.spiked(j, side)) + 2.0 * self.hopping(j + 0.5)
    }

    fn lower_with(&self, j: f64, side: Option<Side>) -> f64 {
        self.onsite_with(j, self.spiked(j, side)) - 2.0 * self.hopping(j + 0.5)
    }

    /// Upper band edge `U+(j)`.
    pub fn upper(&self, j: f64) -> f64 {
        self.upper_with(j, None)
    }

    /// Lower band edge `U-(j)`.
    pub fn lower(&self, j: f64) -> f64 {
        self.lower_with(j, None)
    }

    /// `U+` with the spike removed; peaks at `(n + 1)/2`.
    pub fn spikeless_upper(&self, j: f64) -> f64 {
        self.upper_with(j, Some(Side::Outside))
    }

    fn ratio_with(&self, j: f64, energy: f64, side: Option<Side>) -> f64 {
        (energy - self.onsite_with(j, self.spiked(j, side))) / (2.0 * self.hopping(j + 0.5))
    }

    /// `B(j, E)`.
    pub fn ratio(&self, j: f64, energy: f64) -> f64 {
        self.ratio_with(j, energy, None)
    }

    /// `(U+ - E)(E - U-)`, the signed square of the local velocity.
    pub fn velocity_sq(&self, j: f64, energy: f64) -> f64 {
        (self.upper(j) - energy) * (energy - self.lower(j))
    }

    pub fn is_allowed(&self, j: f64, energy: f64) -> bool {
        self.lower(j) <= energy && energy <= self.upper(j)
    }

    /// `v'/v` (equal to `|v|'/|v|`) from the closed forms, on one side of `j`.
    pub fn log_velocity_slope(&self, j: f64, energy: f64, side: Side) -> f64 {
        let up = self.upper_with(j, Some(side)) - energy;
        let down = energy - self.lower_with(j, Some(side));
        // w' = -cos(theta) on both sides; the spike is a constant shift.
        let dp = 2.0 * self.hopping_slope(j + 0.5);
        let dup = -self.cos_theta + dp;
        let dlow = -self.cos_theta - dp;
        (dup * down - up * dlow) / (2.0 * up * down)
    }

    /// Band top of the spikeless recursion.
    pub fn band_top(&self) -> f64 {
        0.5 * (self.nf() + 1.0)
    }

    pub fn energy(&self, offset: f64) -> f64 {
        self.band_top() - offset
    }

    /// Smooth turning point where `U+ = E` on the rising side of the band.
    pub fn smooth_turning_point(&self, offset: f64) -> f64 {
        let n = self.nf();
        n / 4.0 + offset / 2.0 - 0.25 - 0.5 * (3.0 * offset * (n + 1.0 - offset)).sqrt()
    }

    /// `arccos B` just outside the spike edge.
    pub fn arccos_at_edge(&self, offset: f64) -> f64 {
        let b = self.ratio_with(self.spike_edge(), self.energy(offset), Some(Side::Outside));
        b.clamp(-1.0, 1.0).acos()
    }

    /// `arccosh B` just inside the spike edge.
    pub fn arccosh_at_edge(&self, offset: f64) -> f64 {
        let b = self.ratio_with(self.spike_edge(), self.energy(offset), Some(Side::Inside));
        b.max(1.0).acosh()
    }

    /// Spikeless `U+(j) - E` in factored form, accurate near the smooth
    /// turning point where both terms are close to `(n + 1)/2`.
    pub fn rise_above(&self, j: f64, offset: f64) -> f64 {
        let r = self.band_top();
        let c = r - offset;
        let (a, b) = (self.cos_theta, self.sin_theta);
        let y = j - self.nf() / 2.0;
        let spread = b * (offset * (2.0 * r - offset)).sqrt();
        let far_root = -a * c + spread;
        let near = j - self.smooth_turning_point(offset);
        -near * (y - far_root) / (b * (r * r - y * y).sqrt() + c + a * y)
    }

    /// Phase `int arccos B` between the two turning points.
    pub fn phase_integral(&self, offset: f64) -> Result<f64> {
        let (j1, j2) = (self.smooth_turning_point(offset), self.spike_edge());
        if j1 >= j2 {
            return Ok(0.0);
        }
        let f = |j: f64| {
            let one_minus = (self.rise_above(j, offset) / (2.0 * self.hopping(j + 0.5))).max(0.0);
            2.0 * (0.5 * one_minus).sqrt().min(1.0).asin()
        };
        Ok(integrate_with_root_ends_to(f, j1, j2, QUAD_TOL, 1e-13)?.value)
    }

    /// Left minus right side of the matching condition at the spike edge.
    pub fn connection_residual(&self, offset: f64) -> Result<f64> {
        let e = self.energy(offset);
        let j2 = self.spike_edge();
        let phase = self.phase_integral(offset)?;
        let outside = -0.5 * self.log_velocity_slope(j2, e, Side::Outside)
            - (phase - std::f64::consts::FRAC_PI_4).tan() * self.arccos_at_edge(offset);
        let inside = -0.5 * self.log_velocity_slope(j2, e, Side::Inside) - self.arccosh_at_edge(offset);
        Ok(outside - inside)
    }

    /// Smallest offset at which the allowed region reaches the spike edge.
    pub fn min_offset(&self) -> f64 {
        self.band_top() - self.upper_with(self.spike_edge(), Some(Side::Outside))
    }

    /// Offset at which the energy reaches the spike-lowered band at its edge.
    pub fn barrier_offset(&self) -> f64 {
        self.band_top() - self.upper_with(self.spike_edge(), Some(Side::Inside))
    }

    /// `int arccosh B` across the spike from its edge to `to`.
    fn forbidden_integral(&self, offset: f64, to: f64) -> Result<f64> {
        let e = self.energy(offset);
        let j2 = self.spike_edge();
        let ratio = |j: f64| self.ratio_with(j, e, Some(Side::Inside));
        let probes = 64;
        for i in 0..=probes {
            let j = j2 + (to - j2) * i as f64 / probes as f64;
            if ratio(j) < 1.0 {
                return Err(Error::Inapplicable(format!("no barrier: B = {} < 1 at j = {j}", ratio(j))));
            }
        }
        Ok(integrate(|j| ratio(j).acosh(), j2, to, QUAD_TOL)?.value)
    }

    /// `int_{j2}^{n/4} arccosh B`.
    pub fn tunneling_integral(&self, offset: f64) -> Result<f64> {
        self.forbidden_integral(offset, self.centre())
    }
}

/// Solution of the matching condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub offset: f64,
    /// Leading-order offset from the tangent equation.
    pub leading_offset: f64,
    pub phase_integral: f64,
}

/// Energy offset `d` solving the full matching condition.
pub fn solve_connection(n: usize, alpha: f64, beta: f64) -> Result<Connection> {
    let bands = WkbBands::new(n, alpha, beta)?;
    let lo = bands.min_offset().max(0.0);
    let hi = (bands.barrier_offset() * (1.0 - 1e-12)).min(MAX_OFFSET + 1.0);
    if hi <= lo {
        return Err(Error::Inapplicable(format!("no allowed window below the spike for n = {n}")));
    }
    let phase = |d: f64| bands.phase_integral(d).unwrap_or(f64::NAN);
    let quarter = std::f64::consts::FRAC_PI_4;
    let reach = |target: f64| -> Option<f64> {
        (phase(hi) > target).then(|| bisect(|d| phase(d) - target, lo, hi, 1e-14).ok()).flatten()
    };
    let start = reach(quarter).ok_or_else(|| Error::Inapplicable("phase never reaches pi/4".into()))?;
    let pole = reach(3.0 * quarter).map_or(hi, |d| d * (1.0 - 1e-13));
    let offset = bisect(|d| bands.connection_residual(d).unwrap_or(f64::NAN), start, pole, 1e-14)
        .map_err(|_| Error::Inapplicable(format!("no matching offset in ({start}, {pole})")))?;
    if !(offset > 0.5 && offset <= MAX_OFFSET) {
        return Err(Error::Inapplicable(format!("matching offset {offset} outside (1/2, {MAX_OFFSET}]")));
    }
    Ok(Connection { offset, leading_offset: 1.5, phase_integral: bands.phase_integral(offset)? })
}

/// `int_{j2}^{n/4} arccosh B` at energy offset `offset`.
pub fn tunneling_integral(n: usize, alpha: f64, beta: f64, offset: f64) -> Result<f64> {
    WkbBands::new(n, alpha, beta)?.tunneling_integral(offset)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WkbGapEstimate {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub offset: f64,
    pub leading_offset: f64,
    pub smooth_turning_point: f64,
    pub abrupt_turning_point: f64,
    pub phase_integral: f64,
    pub tunneling_integral: f64,
    /// `ln gap` up to an unknown additive constant.
    pub log_gap_estimate: f64,
    /// Log amplitude decay across the whole spike; the far edge is ignored
    /// in the matching, which needs this to be strongly negative.
    pub far_edge_log_decay: f64,
    pub superpolynomial: bool,
    pub exponent_fit: Option<f64>,
}

/// WKB gap estimate for one size.
pub fn wkb_gap(n: usize, alpha: f64, beta: f64) -> Result<WkbGapEstimate> {
    let bands = WkbBands::new(n, alpha, beta)?;
    let conn = solve_connection(n, alpha, beta)?;
    let integral = bands.tunneling_integral(conn.offset)?;
    let far = bands.forbidden_integral(conn.offset, bands.centre() + bands.half_width())?;
    Ok(WkbGapEstimate {
        n,
        alpha,
        beta,
        offset: conn.offset,
        leading_offset: conn.leading_offset,
        smooth_turning_point: bands.smooth_turning_point(conn.offset),
        abrupt_turning_point: bands.spike_edge(),
        phase_integral: conn.phase_integral,
        tunneling_integral: integral,
        log_gap_estimate: -0.5 * alpha * (n as f64).ln() - 2.0 * integral,
        far_edge_log_decay: -far,
        superpolynomial: alpha + 2.0 * beta > 1.0,
        exponent_fit: None,
    })
}

/// Tunnelling integrals over `sizes` and their log-log fit.
pub fn tunneling_exponent(alpha: f64, beta: f64, sizes: &[usize]) -> Result<(Vec<WkbGapEstimate>, ScalingFit)> {
    let mut estimates = sizes.par_iter().map(|&n| wkb_gap(n, alpha, beta)).collect::<Result<Vec<_>>>()?;
    let samples: Vec<(f64, f64)> = estimates.iter().map(|e| (e.n as f64, e.tunneling_integral)).collect();
    let fit = scaling::fit(&samples)?;
    for e in &mut estimates {
        e.exponent_fit = Some(fit.slope);
    }
    Ok((estimates, fit))
}

/// Exponent `alpha/2 + beta - 1/2` of the tunnelling integral.
pub fn predicted_exponent(alpha: f64, beta: f64) -> f64 {
    0.5 * alpha + beta - 0.5
}
