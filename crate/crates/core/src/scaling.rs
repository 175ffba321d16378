//! Log-log fits and the residue-curvature classifier for power-law versus faster decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use rayon::prelude::*;

use crate::estimate::GapEstimate;
use crate::model::{critical_point, CostModel, SpikeParams, SpikeWidth};
use crate::spectrum;

/// Threshold on `|concavity_score|` separating power laws from stretched exponentials.
///
/// Midpoint of the two score populations of [`calibration_suite`] on [`default_window`];
/// `calibrate_threshold(&default_window())` reproduces it.
pub const DEFAULT_CONCAVITY_THRESHOLD: f64 = 0.005_016;

/// Minimum number of samples for a fit.
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PowerLaw,
    Superpolynomial,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::PowerLaw => "power_law",
            Verdict::Superpolynomial => "superpolynomial",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Least-squares line through `(ln n, ln y)` with its residues and curvature verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub residues: Vec<f64>,
    /// Second derivative in `ln n` of the least-squares parabola through the residues.
    pub concavity_score: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

impl ScalingFit {
    /// Verdict under a different threshold.
    pub fn verdict_at(&self, threshold: f64) -> Verdict {
        classify(self.concavity_score, threshold)
    }

    pub fn max_abs_residue(&self) -> f64 {
        self.residues.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

fn classify(score: f64, threshold: f64) -> Verdict {
    if score < -threshold {
        Verdict::Superpolynomial
    } else if score > threshold {
        Verdict::Inconclusive
    } else {
        Verdict::PowerLaw
    }
}

/// Fit `y ~ b n^c` to `(n, y)` samples with the default threshold.
pub fn fit(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    fit_with_threshold(samples, DEFAULT_CONCAVITY_THRESHOLD)
}

pub fn fit_with_threshold(samples: &[(f64, f64)], threshold: f64) -> Result<ScalingFit> {
    if samples.len() < MIN_POINTS {
        return Err(Error::InsufficientPoints { needed: MIN_POINTS, got: samples.len() });
    }
    for &(n, y) in samples {
        if !(y > 0.0 && y.is_finite()) || !(n > 0.0 && n.is_finite()) {
            return Err(Error::NonPositiveSample { n, value: y });
        }
    }
    let points: Vec<(f64, f64)> = samples.iter().map(|&(n, y)| (n.ln(), y.ln())).collect();
    fit_logs(points, threshold)
}

/// Fit pre-logged `(ln n, ln y)` pairs, e.g. when `y` underflows.
pub fn fit_logs(points: Vec<(f64, f64)>, threshold: f64) -> Result<ScalingFit> {
    if points.len() < MIN_POINTS {
        return Err(Error::InsufficientPoints { needed: MIN_POINTS, got: points.len() });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let line = polyfit(&xs, &ys, 1)?;
    let residues: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - line[0] - line[1] * x).collect();
    let quad = polyfit(&xs, &residues, 2)?;
    let concavity_score = 2.0 * quad[2];
    Ok(ScalingFit {
        points,
        slope: line[1],
        intercept: line[0],
        residues,
        concavity_score,
        threshold,
        verdict: classify(concavity_score, threshold),
    })
}

/// Least-squares polynomial coefficients, lowest degree first, on centred abscissae.
fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    let m = degree + 1;
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let mut ata = vec![vec![0.0; m]; m];
    let mut aty = vec![0.0; m];
    for (&x, &y) in xs.iter().zip(ys) {
        let t = x - mean;
        let powers: Vec<f64> = (0..m).map(|i| t.powi(i as i32)).collect();
        for i in 0..m {
            aty[i] += powers[i] * y;
            for j in 0..m {
                ata[i][j] += powers[i] * powers[j];
            }
        }
    }
    let c = solve(ata, aty).ok_or_else(|| Error::InvalidParameter("degenerate abscissae in fit".into()))?;
    // Expand the centred polynomial back to powers of x.
    let mut out = vec![0.0; m];
    for (i, &ci) in c.iter().enumerate() {
        for j in 0..=i {
            out[j] += ci * binom(i, j) * (-mean).powi((i - j) as i32);
        }
    }
    Ok(out)
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// `count` values from `start` to `stop` with a constant ratio.
pub fn geometric_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let r = (stop / start).ln() / (count - 1) as f64;
    (0..count).map(|i| start * (r * i as f64).exp()).collect()
}

/// Geometric grid rounded to multiples of 4, duplicates removed.
pub fn geometric_sizes(start: f64, stop: f64, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = geometric_grid(start, stop, count)
        .into_iter()
        .map(|x| (((x / 4.0).round() as usize).max(1)) * 4)
        .collect();
    out.dedup();
    out
}

/// The window used to calibrate the classifier: 48 geometric points from 500 to 30000.
pub fn default_window() -> Vec<f64> {
    geometric_grid(500.0, 30_000.0, 48)
}

/// Scores of 20 power laws and 20 stretched exponentials sampled on `window`.
///
/// Stretched exponentials `exp(-b n^c)` take `c` in `[0.1, 0.5]` and `b` chosen so the local
/// log-log slope at the window's geometric centre is one of `{0.1, 0.5, 1, 2}`.
pub fn calibration_suite(window: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut power = Vec::new();
    for i in 0..20 {
        let p = 2.0 * i as f64 / 19.0;
        let amp = 0.5 + i as f64;
        let samples: Vec<(f64, f64)> = window.iter().map(|&n| (n, amp * n.powf(-p))).collect();
        power.push(fit(&samples)?.concavity_score);
    }
    let centre = (window[0] * window[window.len() - 1]).sqrt();
    let mut stretched = Vec::new();
    for i in 0..5 {
        let c = 0.1 + 0.1 * i as f64;
        for slope in [0.1, 0.5, 1.0, 2.0] {
            let b = slope / (c * centre.powf(c));
            let pts: Vec<(f64, f64)> = window.iter().map(|&n| (n.ln(), -b * n.powf(c))).collect();
            stretched.push(fit_logs(pts, DEFAULT_CONCAVITY_THRESHOLD)?.concavity_score);
        }
    }
    Ok((power, stretched))
}

/// Midpoint between the largest power-law score and the smallest stretched score, in magnitude.
pub fn calibrate_threshold(window: &[f64]) -> Result<f64> {
    let (power, stretched) = calibration_suite(window)?;
    let top = power.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let bottom = stretched.iter().fold(f64::INFINITY, |m, s| m.min(s.abs()));
    Ok(0.5 * (top + bottom))
}

/// One point of the slope-versus-height curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopePoint {
    pub alpha: f64,
    pub slope: f64,
    pub fit: ScalingFit,
    /// Sizes whose gap could not be resolved.
    pub omitted: Vec<usize>,
}

/// Exact gaps at the critical point of the width-one spike, fitted against `n` for each height.
pub fn slope_vs_alpha(alphas: &[f64], sizes: &[usize], precision_bits: usize) -> Result<Vec<SlopePoint>> {
    let s = critical_point();
    alphas
        .iter()
        .map(|&alpha| {
            let gaps = sizes
                .par_iter()
                .map(|&n| spectrum::gap(&CostModel::Spike(SpikeParams::width_one(n, alpha)?), s, precision_bits))
                .collect::<Result<Vec<_>>>()?;
            let mut samples = Vec::new();
            let mut omitted = Vec::new();
            for (&n, est) in sizes.iter().zip(&gaps) {
                if est.is_resolved() && est.value > 0.0 {
                    samples.push((n as f64, est.value));
                } else {
                    omitted.push(n);
                }
            }
            let fit = fit(&samples)?;
            Ok(SlopePoint { alpha, slope: fit.slope, fit, omitted })
        })
        .collect()
}

/// Default search grid for the minimum gap: 61 points over `[0.30, 0.45]`.
pub fn default_s_grid() -> Vec<f64> {
    (0..=60).map(|i| 0.30 + 0.15 * i as f64 / 60.0).collect()
}

/// Minimum gap over `s` for one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinGapPoint {
    pub n: usize,
    pub s_min: f64,
    pub gap: GapEstimate,
}

/// Minimum gap for a spike of height exponent `alpha` at each size.
///
/// The minimiser is located in native precision on `s_grid` and the gap there is then
/// re-evaluated starting from `precision_bits`.
pub fn min_gap_series(
    alpha: f64,
    width: SpikeWidth,
    sizes: &[usize],
    s_grid: &[f64],
    precision_bits: usize,
) -> Result<Vec<MinGapPoint>> {
    sizes
        .par_iter()
        .map(|&n| {
            let cost = CostModel::Spike(SpikeParams::new(n, alpha, width)?);
            let (s_min, coarse) = spectrum::min_gap_scan(&cost, s_grid, 1e-9)?;
            let mut gap = spectrum::gap(&cost, s_min, precision_bits)?;
            for flag in coarse.flags {
                gap = gap.with_flag(flag);
            }
            Ok(MinGapPoint { n, s_min, gap })
        })
        .collect()
}

/// Verdict on the decay of the minimum gap with `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapClassification {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub points: Vec<MinGapPoint>,
    pub omitted: Vec<usize>,
    pub fit: ScalingFit,
}

/// Fit and classify the minimum gaps over `sizes`.
pub fn classify_gaps(alpha: f64, width: SpikeWidth, sizes: &[usize], precision_bits: usize) -> Result<GapClassification> {
    let points = min_gap_series(alpha, width, sizes, &default_s_grid(), precision_bits)?;
    let usable = |p: &MinGapPoint| p.gap.is_resolved() && p.gap.value > 0.0;
    let samples: Vec<(f64, f64)> = points.iter().filter(|p| usable(p)).map(|p| (p.n as f64, p.gap.value)).collect();
    let omitted = points.iter().filter(|p| !usable(p)).map(|p| p.n).collect();
    let fit = fit(&samples)?;
    Ok(GapClassification { alpha, beta: width.beta(), points, omitted, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let samples: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0, 1600.0].iter().map(|&n: &f64| (n, 3.0 * n.powi(-2))).collect();
        let f = fit(&samples).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-9);
        assert!(f.residues.iter().all(|r| r.abs() < 1e-9));
        assert_eq!(f.verdict, Verdict::PowerLaw);
    }

    #[test]
    fn stretched_exponential_is_concave() {
        let samples: Vec<(f64, f64)> =
            geometric_grid(500.0, 30_000.0, 24).into_iter().map(|n| (n, (-0.1 * n.sqrt()).exp())).collect();
        assert_eq!(fit(&samples).unwrap().verdict, Verdict::Superpolynomial);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit(&[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]), Err(Error::InsufficientPoints { .. })));
        assert!(matches!(fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)]), Err(Error::NonPositiveSample { .. })));
    }

    #[test]
    fn frozen_threshold_matches_calibration() {
        let t = calibrate_threshold(&default_window()).unwrap();
        assert!((t - DEFAULT_CONCAVITY_THRESHOLD).abs() < 1e-6, "calibrated {t}");
    }

    #[test]
    fn suite_is_fully_separated() {
        let (power, stretched) = calibration_suite(&default_window()).unwrap();
        assert!(power.iter().all(|s| classify(*s, DEFAULT_CONCAVITY_THRESHOLD) == Verdict::PowerLaw));
        assert!(stretched.iter().all(|s| classify(*s, DEFAULT_CONCAVITY_THRESHOLD) == Verdict::Superpolynomial));
    }

    #[test]
    fn sizes_are_multiples_of_four() {
        let sizes = geometric_sizes(500.0, 30_000.0, 24);
        assert!(sizes.iter().all(|n| n % 4 == 0));
        assert_eq!(sizes[0], 500);
        assert_eq!(*sizes.last().unwrap(), 30_000);
    }
}
