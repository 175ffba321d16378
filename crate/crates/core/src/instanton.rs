//! Spin-coherent potential, degenerate double wells and the instanton action.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logdomain::{ln_choose, ln_choose_row};
use crate::model::{critical_point, CostModel, SpikeParams, SpikeWidth};
use crate::quadrature::integrate_with_root_ends;
use crate::scaling::{self, ScalingFit, Verdict};
use crate::search::{bisect, golden_section};

/// `U(theta, s)` for a fixed cost and `s`, with binomial weights cached.
#[derive(Debug, Clone)]
pub struct CoherentPotential<'a> {
    pub cost: &'a CostModel,
    pub s: f64,
    ln_choose: Vec<f64>,
}

impl<'a> CoherentPotential<'a> {
    pub fn new(cost: &'a CostModel, s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1]")));
        }
        let ln_choose = match cost {
            CostModel::Spike(_) => Vec::new(),
            _ => ln_choose_row(cost.n()),
        };
        Ok(Self { cost, s, ln_choose })
    }

    /// `U(theta, s)`.
    pub fn at(&self, theta: f64) -> f64 {
        let n = self.cost.n();
        let drive = 0.5 * n as f64 * self.cost.driver() * (1.0 - self.s) * (1.0 - theta.sin());
        drive + self.s * self.mean_cost(theta)
    }

    /// `E[h(K)]` for `K ~ Bin(n, sin^2(theta/2))`.
    pub fn mean_cost(&self, theta: f64) -> f64 {
        let n = self.cost.n();
        let half = 0.5 * theta;
        let p = half.sin().powi(2);
        let ln_p = 2.0 * half.sin().abs().ln();
        let ln_q = 2.0 * half.cos().abs().ln();
        match self.cost {
            CostModel::Spike(params) => n as f64 * p + params.height() * window_mass(params, ln_p, ln_q),
            CostModel::Cubic { table, .. } | CostModel::Custom { table, .. } => {
                if p <= 0.0 {
                    return table[0];
                }
                if p >= 1.0 {
                    return table[n];
                }
                let sd = (n as f64 * p * (1.0 - p)).sqrt();
                let lo = ((n as f64 * p - 14.0 * sd - 10.0).floor().max(0.0)) as usize;
                let hi = ((n as f64 * p + 14.0 * sd + 10.0).ceil() as usize).min(n);
                (lo..=hi)
                    .map(|k| (self.ln_choose[k] + k as f64 * ln_p + (n - k) as f64 * ln_q).exp() * table[k])
                    .sum()
            }
        }
    }
}

/// `P(K in window)` summed term by term in log space.
fn window_mass(params: &SpikeParams, ln_p: f64, ln_q: f64) -> f64 {
    let n = params.n;
    let (lo, hi) = params.window();
    if ln_p == f64::NEG_INFINITY {
        return if lo == 0 { 1.0 } else { 0.0 };
    }
    if ln_q == f64::NEG_INFINITY {
        return if hi == n { 1.0 } else { 0.0 };
    }
    // Consecutive pmf ratios: ln C(n, k+1) - ln C(n, k) = ln((n-k)/(k+1)).
    let mut ln_term = ln_choose(n, lo as i64) + lo as f64 * ln_p + (n - lo) as f64 * ln_q;
    let mut total = 0.0;
    for k in lo..=hi {
        total += ln_term.exp();
        ln_term += ((n - k) as f64 / (k + 1) as f64).ln() + ln_p - ln_q;
    }
    total
}

/// `U(theta, s)` for one point.
pub fn potential(cost: &CostModel, s: f64, theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::InvalidParameter(format!("theta = {theta} outside [0, pi]")));
    }
    Ok(CoherentPotential::new(cost, s)?.at(theta))
}

/// Coherent-state energy `E(theta, phi, s)` with `cos(phi)` supplied directly
/// (`cosh` of the imaginary angle along the instanton).
pub fn coherent_energy(cost: &CostModel, s: f64, theta: f64, cos_phi: f64) -> Result<f64> {
    let pot = CoherentPotential::new(cost, s)?;
    let n = cost.n() as f64;
    Ok(0.5 * n * cost.driver() * (1.0 - s) * (1.0 - theta.sin() * cos_phi) + s * pot.mean_cost(theta))
}

fn theta_grid(n: usize) -> Vec<f64> {
    let m = (40.0 * (n as f64).sqrt()).max(4000.0) as usize;
    let lo = 1e-6;
    let hi = PI - 1e-6;
    (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
}

/// Local minima `(theta, U)` of the potential, in increasing `theta`.
pub fn local_minima(pot: &CoherentPotential<'_>) -> Vec<(f64, f64)> {
    let grid = theta_grid(pot.cost.n());
    let values: Vec<f64> = grid.iter().map(|&t| pot.at(t)).collect();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for i in 1..grid.len() - 1 {
        if values[i] < values[i - 1] && values[i] <= values[i + 1] {
            let (t, u) = golden_section(|t| pot.at(t), grid[i - 1], grid[i + 1], 1e-13);
            if out.last().is_none_or(|last| (t - last.0).abs() > grid[1] - grid[0]) {
                out.push((t, u));
            }
        }
    }
    out
}

/// Two outermost minima of the potential, made degenerate by tuning `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegenerateMinima {
    pub s: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// `U(theta1) - U(theta2)` at `s`.
    pub mismatch: f64,
}

fn outer_split(cost: &CostModel, s: f64) -> Result<Option<(f64, f64, f64, usize)>> {
    let pot = CoherentPotential::new(cost, s)?;
    let minima = local_minima(&pot);
    if minima.len() < 2 {
        return Ok(None);
    }
    let (first, last) = (minima[0], minima[minima.len() - 1]);
    Ok(Some((first.1 - last.1, first.0, last.0, minima.len())))
}

fn global_min_theta(cost: &CostModel, s: f64) -> Result<f64> {
    let pot = CoherentPotential::new(cost, s)?;
    let minima = local_minima(&pot);
    minima
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|m| m.0)
        .ok_or_else(|| Error::NotFound(format!("no interior minimum at s = {s}")))
}

/// Locate `s` near `s_hint` where the outermost minima of `U(., s)` are degenerate.
pub fn find_degenerate_minima(cost: &CostModel, s_hint: f64) -> Result<DegenerateMinima> {
    if !(s_hint > 0.0 && s_hint < 1.0) {
        return Err(Error::InvalidParameter(format!("s_hint = {s_hint} outside (0, 1)")));
    }
    let n = cost.n() as f64;
    let tol = 1e-9 * n;
    let lo = (s_hint - 0.15).max(1e-3);
    let hi = (s_hint + 0.15).min(1.0 - 1e-3);
    let steps = 60;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let mut splits: Vec<Option<Option<(f64, f64, f64, usize)>>> = vec![None; grid.len()];
    let mut split_at = |i: usize| -> Result<Option<(f64, f64, f64, usize)>> {
        if splits[i].is_none() {
            splits[i] = Some(outer_split(cost, grid[i])?);
        }
        Ok(splits[i].flatten())
    };
    // Scan brackets outward from the hint so the nearest degeneracy is found first.
    let mut order: Vec<usize> = (0..steps).collect();
    order.sort_by(|&i, &j| {
        let mid = |k: usize| (0.5 * (grid[k] + grid[k + 1]) - s_hint).abs();
        mid(i).total_cmp(&mid(j))
    });
    for i in order {
        if let (Some(a), Some(b)) = (split_at(i)?, split_at(i + 1)?) {
            for (s, x) in [(grid[i], a), (grid[i + 1], b)] {
                if x.0.abs() <= tol {
                    return Ok(DegenerateMinima { s, theta1: x.1, theta2: x.2, mismatch: x.0 });
                }
            }
            if a.0.signum() != b.0.signum() {
                if let Ok(found) = refine_degeneracy(cost, grid[i], grid[i + 1], tol) {
                    return Ok(found);
                }
            }
        }
    }
    // The coexistence window may be narrower than the grid: follow the jump of the global minimum.
    let thetas = grid.iter().map(|&s| global_min_theta(cost, s)).collect::<Result<Vec<_>>>()?;
    let (jump_at, _) = thetas
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i, (w[1] - w[0]).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::NoDoubleWell { lo, hi })?;
    let (mut a, mut b) = (grid[jump_at], grid[jump_at + 1]);
    let (mut ta, mut tb) = (thetas[jump_at], thetas[jump_at + 1]);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let tm = global_min_theta(cost, m)?;
        if (tm - ta).abs() <= (tm - tb).abs() {
            a = m;
            ta = tm;
        } else {
            b = m;
            tb = tm;
        }
    }
    let spacing = PI / theta_grid(cost.n()).len() as f64;
    if (ta - tb).abs() <= 4.0 * spacing {
        return Err(Error::NoDoubleWell { lo, hi });
    }
    let width = 1e-3 * (hi - lo);
    let fine: Vec<f64> = (0..=40).map(|i| a - width + 2.0 * width * i as f64 / 40.0).collect();
    let fine_splits = fine.iter().map(|&s| outer_split(cost, s)).collect::<Result<Vec<_>>>()?;
    for i in 0..40 {
        if let (Some(x), Some(y)) = (fine_splits[i], fine_splits[i + 1]) {
            if x.0.signum() != y.0.signum() {
                return refine_degeneracy(cost, fine[i], fine[i + 1], tol);
            }
        }
    }
    match outer_split(cost, a)? {
        Some((mismatch, t1, t2, _)) if mismatch.abs() <= tol => Ok(DegenerateMinima { s: a, theta1: t1, theta2: t2, mismatch }),
        _ => Err(Error::NoDoubleWell { lo, hi }),
    }
}

fn refine_degeneracy(cost: &CostModel, a: f64, b: f64, tol: f64) -> Result<DegenerateMinima> {
    let full = |s: f64| outer_split(cost, s).ok().flatten().map_or(f64::NAN, |x| x.0);
    // Coarse bisection on full scans, then follow the two minima locally.
    let (mut lo, mut hi) = (a, b);
    let mut f_lo = full(lo);
    while hi - lo > 1e-5 * (b - a).max(1e-3) {
        let mid = 0.5 * (lo + hi);
        let f_mid = full(mid);
        if f_mid.is_nan() {
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let (_, t1, t2, _) = outer_split(cost, lo)?.ok_or(Error::NoDoubleWell { lo: a, hi: b })?;
    let reach = (64.0 * PI / theta_grid(cost.n()).len() as f64).min(0.25 * (t2 - t1));
    let tracked = |s: f64| -> Option<(f64, f64, f64)> {
        let pot = CoherentPotential::new(cost, s).ok()?;
        let local = |centre: f64| {
            let (l, r) = ((centre - reach).max(1e-6), (centre + reach).min(PI - 1e-6));
            let (t, u) = golden_section(|t| pot.at(t), l, r, 1e-13);
            let edge = 1e-3 * reach;
            ((t - l) > edge && (r - t) > edge).then_some((t, u))
        };
        let (m1, m2) = (local(t1)?, local(t2)?);
        Some((m1.1 - m2.1, m1.0, m2.0))
    };
    let follow = || -> Option<(f64, f64, f64, f64)> {
        let s = bisect(|s| tracked(s).map_or(f64::NAN, |x| x.0), lo, hi, 1e-15).ok()?;
        let (m, t1, t2) = tracked(s)?;
        Some((s, m, t1, t2))
    };
    let (s, mismatch, theta1, theta2) = match follow() {
        Some(found) => found,
        None => {
            let s = bisect(full, lo, hi, 1e-15)?;
            let (m, t1, t2, _) = outer_split(cost, s)?.ok_or(Error::NoDoubleWell { lo: a, hi: b })?;
            (s, m, t1, t2)
        }
    };
    if mismatch.abs() > tol {
        return Err(Error::NotFound(format!("minima mismatch {mismatch:e} above {tol:e} at s = {s}")));
    }
    Ok(DegenerateMinima { s, theta1, theta2, mismatch })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Applicability {
    Ok,
    /// `log S_I` is not linear in `log n`.
    RegionI,
    /// The barrier holds a pit below the outer minima.
    RegionII,
}

impl Applicability {
    pub fn as_str(self) -> &'static str {
        match self {
            Applicability::Ok => "ok",
            Applicability::RegionI => "region_i",
            Applicability::RegionII => "region_ii",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstantonResult {
    pub theta1: f64,
    pub theta2: f64,
    pub s_used: f64,
    /// The action; absent when the barrier contains a lower pit.
    pub action: Option<f64>,
    pub applicability: Applicability,
}

/// Relative tolerance used by [`action`].
pub const ACTION_REL_TOL: f64 = 1e-10;

/// Tunnelling action between the degenerate minima.
pub fn action(cost: &CostModel, minima: &DegenerateMinima) -> Result<InstantonResult> {
    action_with_tolerance(cost, minima, ACTION_REL_TOL)
}

/// [`action`] with an explicit quadrature tolerance.
pub fn action_with_tolerance(cost: &CostModel, minima: &DegenerateMinima, rel_tol: f64) -> Result<InstantonResult> {
    let pot = CoherentPotential::new(cost, minima.s)?;
    let (t1, t2) = (minima.theta1, minima.theta2);
    let u1 = pot.at(t1);
    let n = cost.n() as f64;
    let tol = 1e-9 * n;
    let mut result = InstantonResult { theta1: t1, theta2: t2, s_used: minima.s, action: None, applicability: Applicability::Ok };
    let probes = theta_grid(cost.n()).len();
    let dips = (1..probes).any(|i| {
        let t = t1 + (t2 - t1) * i as f64 / probes as f64;
        pot.at(t) < u1 - tol
    });
    if dips {
        result.applicability = Applicability::RegionII;
        return Ok(result);
    }
    let scale = 0.5 * n * cost.driver() * (1.0 - minima.s);
    let integrand = |t: f64| {
        let arg = 1.0 + ((pot.at(t) - u1) / (scale * t.sin())).max(0.0);
        arg.acosh() * t.sin()
    };
    let value = integrate_with_root_ends(integrand, t1, t2, rel_tol)?.value;
    result.action = Some(0.5 * n * value);
    Ok(result)
}

/// Degenerate minima and action in one step.
pub fn instanton(cost: &CostModel, s_hint: f64) -> Result<InstantonResult> {
    let minima = find_degenerate_minima(cost, s_hint)?;
    action(cost, &minima)
}

/// Actions over a size sweep with the log-log fit of the usable points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSweep {
    pub alpha: f64,
    pub beta: f64,
    pub points: Vec<(usize, f64)>,
    pub excluded: Vec<(usize, String)>,
    pub fit: Option<ScalingFit>,
    pub applicability: Applicability,
}

/// `S_I(n)` for spikes `(alpha, beta)` at their degeneracy points, fitted against `n`.
pub fn action_scaling_sweep(alpha: f64, beta: f64, sizes: &[usize]) -> Result<ActionSweep> {
    let results = sizes
        .par_iter()
        .map(|&n| {
            let cost = CostModel::Spike(SpikeParams::new(n, alpha, SpikeWidth::Exponent(beta))?);
            Ok(instanton(&cost, critical_point()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    let mut pit = false;
    for (&n, result) in sizes.iter().zip(results) {
        match result {
            Ok(InstantonResult { action: Some(a), .. }) if a > 0.0 => points.push((n, a)),
            Ok(r) => {
                pit |= r.applicability == Applicability::RegionII;
                excluded.push((n, r.applicability.as_str().to_string()));
            }
            Err(e) => excluded.push((n, e.to_string())),
        }
    }
    let samples: Vec<(f64, f64)> = points.iter().map(|&(n, a)| (n as f64, a)).collect();
    let fit = scaling::fit(&samples).ok();
    let applicability = match &fit {
        _ if pit => Applicability::RegionII,
        Some(f) if f.verdict == Verdict::PowerLaw => Applicability::Ok,
        _ => Applicability::RegionI,
    };
    Ok(ActionSweep { alpha, beta, points, excluded, fit, applicability })
}
