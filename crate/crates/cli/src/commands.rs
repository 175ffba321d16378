//! Command handlers: each turns parsed arguments into output rows.

use rayon::prelude::*;
use serde_json::{json, Value};
use spikegap::instanton::{self, Applicability};
use spikegap::model::{critical_point, CostModel, SpikeParams, SpikeWidth};
use spikegap::scaling::{self, ScalingFit, Verdict};
use spikegap::{crossings, spectrum, variational, wkb, Method};

use crate::output::Row;
use crate::range::{parse_reals, parse_sizes};
use crate::{CliError, Command, SpikeArgs};

/// Rows plus an optional structured summary (JSON output only).
#[derive(Debug, Default)]
pub struct Report {
    pub rows: Vec<Row>,
    pub summary: Option<Value>,
}

impl Report {
    fn rows(rows: Vec<Row>) -> Self {
        Self { rows, summary: None }
    }
}

/// One spike instance requested on the command line.
#[derive(Debug, Clone, Copy)]
struct Instance {
    n: usize,
    alpha: f64,
    width: SpikeWidth,
}

impl Instance {
    fn cost(&self) -> Result<CostModel, spikegap::Error> {
        Ok(CostModel::Spike(SpikeParams::new(self.n, self.alpha, self.width)?))
    }

    fn blank(&self, method: Method, quantity: &str, s: Option<f64>) -> Row {
        Row::new(method, quantity).at(Some(self.n), Some(self.alpha), self.width.beta(), s)
    }
}

fn widths(spike: &SpikeArgs) -> Result<Vec<SpikeWidth>, CliError> {
    match &spike.beta {
        Some(spec) => Ok(parse_reals(spec)?.into_iter().map(SpikeWidth::Exponent).collect()),
        None => Ok(vec![SpikeWidth::WidthOne]),
    }
}

/// Cartesian product in the order n, alpha, width.
fn instances(spike: &SpikeArgs) -> Result<Vec<Instance>, CliError> {
    let sizes = parse_sizes(&spike.n)?;
    let alphas = parse_reals(&spike.alpha)?;
    let widths = widths(spike)?;
    let mut out = Vec::new();
    for &n in &sizes {
        for &alpha in &alphas {
            for &width in &widths {
                out.push(Instance { n, alpha, width });
            }
        }
    }
    Ok(out)
}

fn fit_row(method: Method, quantity: &str, alpha: f64, beta: Option<f64>, fit: &ScalingFit) -> Vec<Row> {
    let base = || Row::new(method, quantity).at(None, Some(alpha), beta, None);
    vec![
        base().value(fit.slope).flag(fit.verdict.as_str()),
        Row::new(method, "concavity_score").at(None, Some(alpha), beta, None).value(fit.concavity_score),
        Row::new(method, "max_abs_residue").at(None, Some(alpha), beta, None).value(fit.max_abs_residue()),
    ]
}

/// Runs `command` on the current rayon pool.
pub fn execute(command: &Command) -> Result<Report, CliError> {
    let bits = command.common().precision_bits;
    match command {
        Command::GapCurve { spike, s, level, .. } => gap_curve(spike, s, *level, bits),
        Command::MinGap { spike, s, tol, .. } => min_gap(spike, s, *tol, bits),
        Command::SlopeVsAlpha { alpha, n, .. } => slope_vs_alpha(alpha, n, bits),
        Command::Bounds { n, alpha, exact, .. } => bounds(n, alpha, *exact, bits),
        Command::Instanton { n, alpha, beta, cubic, s_hint, .. } => {
            instanton_cmd(n, alpha.as_deref(), beta.as_deref(), *cubic, *s_hint)
        }
        Command::Wkb { n, alpha, beta, .. } => wkb_cmd(n, alpha, beta),
        Command::Crossings { n, alpha, t_max, all_nodes, verify, .. } => {
            crossings_cmd(n, alpha, *t_max, *all_nodes, *verify)
        }
        Command::Classify { spike, threshold, .. } => classify(spike, *threshold, bits),
    }
}

fn gap_curve(spike: &SpikeArgs, s_spec: &str, level: usize, bits: usize) -> Result<Report, CliError> {
    if level == 0 {
        return Err(CliError::Usage("--level must be at least 1".into()));
    }
    let s_values = parse_reals(s_spec)?;
    let jobs: Vec<(Instance, f64)> =
        instances(spike)?.into_iter().flat_map(|inst| s_values.iter().map(move |&s| (inst, s))).collect();
    let quantity = if level == 1 { "gap".to_string() } else { format!("spacing_{level}") };
    let rows = jobs
        .par_iter()
        .map(|(inst, s)| {
            let result = inst.cost().and_then(|c| spectrum::level_gap(&c, *s, level, bits));
            match result {
                Ok(est) => Row::from_estimate(&est, &quantity),
                Err(e) => inst.blank(Method::Exact, &quantity, Some(*s)).failed(e),
            }
        })
        .collect();
    Ok(Report::rows(rows))
}

fn min_gap(spike: &SpikeArgs, s_spec: &str, tol: f64, bits: usize) -> Result<Report, CliError> {
    let grid = parse_reals(s_spec)?;
    if grid.len() < 3 {
        return Err(CliError::Usage("--s needs at least three points".into()));
    }
    let rows = instances(spike)?
        .par_iter()
        .map(|inst| {
            let result = inst.cost().and_then(|c| {
                let (s_min, coarse) = spectrum::min_gap_scan(&c, &grid, tol)?;
                let est = spectrum::gap(&c, s_min, bits)?;
                Ok(coarse.flags.iter().fold(est, |e, &f| e.with_flag(f)))
            });
            match result {
                Ok(est) => Row::from_estimate(&est, "min_gap"),
                Err(e) => inst.blank(Method::Exact, "min_gap", None).failed(e),
            }
        })
        .collect();
    Ok(Report::rows(rows))
}

fn slope_vs_alpha(alpha_spec: &str, n_spec: &str, bits: usize) -> Result<Report, CliError> {
    let alphas = parse_reals(alpha_spec)?;
    let sizes = parse_sizes(n_spec)?;
    let points = scaling::slope_vs_alpha(&alphas, &sizes, bits)?;
    let mut rows = Vec::new();
    for p in &points {
        let mut slope = Row::new(Method::Exact, "slope").at(None, Some(p.alpha), None, Some(critical_point())).value(p.slope);
        slope = slope.flag(p.fit.verdict.as_str());
        if !p.omitted.is_empty() {
            slope = slope.flag("omitted_sizes");
        }
        rows.push(slope);
    }
    Ok(Report { rows, summary: Some(serde_json::to_value(&points)?) })
}

fn bounds(n_spec: &str, alpha_spec: &str, exact: bool, bits: usize) -> Result<Report, CliError> {
    let sizes = parse_sizes(n_spec)?;
    let alphas = parse_reals(alpha_spec)?;
    let jobs: Vec<(usize, f64)> = sizes.iter().flat_map(|&n| alphas.iter().map(move |&a| (n, a))).collect();
    let s = critical_point();
    let rows = jobs
        .par_iter()
        .flat_map_iter(|&(n, alpha)| {
            let blank = |method, q: &str| Row::new(method, q).at(Some(n), Some(alpha), None, Some(s));
            let mut out = Vec::with_capacity(3);
            out.push(match variational::lower_bound_gap(n, alpha) {
                Ok(est) => Row::from_estimate(&est, "lower_bound"),
                Err(e) => blank(Method::VariationalLower, "lower_bound").failed(e),
            });
            out.push(match variational::upper_bound_gap(n, alpha) {
                Ok(est) => Row::from_estimate(&est, "upper_bound"),
                Err(e) => blank(Method::StoquasticUpper, "upper_bound").failed(e),
            });
            if exact {
                let result = SpikeParams::width_one(n, alpha).and_then(|p| spectrum::gap(&CostModel::Spike(p), s, bits));
                out.push(match result {
                    Ok(est) => Row::from_estimate(&est, "gap"),
                    Err(e) => blank(Method::Exact, "gap").failed(e),
                });
            }
            out
        })
        .collect();
    Ok(Report::rows(rows))
}

fn instanton_rows(n: usize, alpha: Option<f64>, beta: Option<f64>, result: &instanton::InstantonResult) -> Vec<Row> {
    let blank = |q: &str| Row::new(Method::InstantonExponent, q).at(Some(n), alpha, beta, Some(result.s_used));
    let mut action = blank("action");
    action = match result.action {
        Some(a) => action.value(a),
        None => action,
    };
    vec![
        action.flag(result.applicability.as_str()),
        blank("theta1").value(result.theta1),
        blank("theta2").value(result.theta2),
    ]
}

fn instanton_cmd(
    n_spec: &str,
    alpha: Option<&str>,
    beta: Option<&str>,
    cubic: Option<f64>,
    s_hint: Option<f64>,
) -> Result<Report, CliError> {
    let sizes = parse_sizes(n_spec)?;
    let hint = s_hint.unwrap_or_else(critical_point);
    if let Some(q) = cubic {
        let rows = sizes
            .par_iter()
            .flat_map_iter(|&n| {
                match CostModel::cubic(n, q).and_then(|c| instanton::instanton(&c, hint)) {
                    Ok(r) => instanton_rows(n, None, None, &r),
                    Err(e) => vec![Row::new(Method::InstantonExponent, "action").at(Some(n), None, None, None).failed(e)],
                }
            })
            .collect();
        return Ok(Report::rows(rows));
    }
    let (alpha, beta) = match (alpha, beta) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::Usage("--alpha and --beta are required without --cubic".into())),
    };
    let mut rows = Vec::new();
    let mut sweeps = Vec::new();
    for &a in &parse_reals(alpha)? {
        for &b in &parse_reals(beta)? {
            let results: Vec<_> = sizes
                .par_iter()
                .map(|&n| {
                    SpikeParams::new(n, a, SpikeWidth::Exponent(b))
                        .and_then(|p| instanton::instanton(&CostModel::Spike(p), hint))
                })
                .collect();
            let mut samples = Vec::new();
            let mut pit = false;
            for (&n, r) in sizes.iter().zip(&results) {
                match r {
                    Ok(r) => {
                        pit |= r.applicability == Applicability::RegionII;
                        if let Some(action) = r.action.filter(|&v| v > 0.0) {
                            samples.push((n as f64, action));
                        }
                        rows.extend(instanton_rows(n, Some(a), Some(b), r));
                    }
                    Err(e) => rows.push(
                        Row::new(Method::InstantonExponent, "action").at(Some(n), Some(a), Some(b), None).failed(e),
                    ),
                }
            }
            if samples.len() >= scaling::MIN_POINTS {
                let fit = scaling::fit(&samples)?;
                let applicability = if pit {
                    Applicability::RegionII
                } else if fit.verdict == Verdict::PowerLaw {
                    Applicability::Ok
                } else {
                    Applicability::RegionI
                };
                let mut fit_rows = fit_row(Method::InstantonExponent, "action_slope", a, Some(b), &fit);
                fit_rows[0] = fit_rows[0].clone().flag(applicability.as_str());
                rows.extend(fit_rows);
                sweeps.push(json!({ "alpha": a, "beta": b, "applicability": applicability.as_str(), "fit": fit }));
            }
        }
    }
    let summary = (!sweeps.is_empty()).then(|| Value::Array(sweeps));
    Ok(Report { rows, summary })
}

fn wkb_cmd(n_spec: &str, alpha_spec: &str, beta_spec: &str) -> Result<Report, CliError> {
    let sizes = parse_sizes(n_spec)?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &a in &parse_reals(alpha_spec)? {
        for &b in &parse_reals(beta_spec)? {
            let results: Vec<_> = sizes.par_iter().map(|&n| wkb::wkb_gap(n, a, b)).collect();
            let mut samples = Vec::new();
            for (&n, r) in sizes.iter().zip(&results) {
                let blank = |q: &str| Row::new(Method::Wkb, q).at(Some(n), Some(a), Some(b), Some(critical_point()));
                match r {
                    Ok(est) => {
                        samples.push((n as f64, est.tunneling_integral));
                        let class = if est.superpolynomial { "superpolynomial" } else { "power_law" };
                        rows.push(blank("offset").value(est.offset));
                        rows.push(blank("phase_integral").value(est.phase_integral));
                        rows.push(blank("tunneling_integral").value(est.tunneling_integral));
                        rows.push(blank("gap").log_value(est.log_gap_estimate).flag(class));
                    }
                    Err(e) => rows.push(blank("gap").failed(e)),
                }
            }
            if samples.len() >= scaling::MIN_POINTS && samples.iter().all(|&(_, v)| v > 0.0) {
                let fit = scaling::fit(&samples)?;
                rows.extend(fit_row(Method::Wkb, "tunneling_exponent", a, Some(b), &fit));
                rows.push(
                    Row::new(Method::Wkb, "predicted_exponent")
                        .at(None, Some(a), Some(b), None)
                        .value(wkb::predicted_exponent(a, b)),
                );
                fits.push(json!({ "alpha": a, "beta": b, "fit": fit }));
            }
        }
    }
    let summary = (!fits.is_empty()).then(|| Value::Array(fits));
    Ok(Report { rows, summary })
}

fn crossings_cmd(n_spec: &str, alpha_spec: &str, t_max: usize, all_nodes: bool, verify: bool) -> Result<Report, CliError> {
    if t_max == 0 {
        return Err(CliError::Usage("--t-max must be at least 1".into()));
    }
    let sizes = parse_sizes(n_spec)?;
    let alphas = parse_reals(alpha_spec)?;
    let mut jobs = Vec::new();
    for &n in &sizes {
        for &a in &alphas {
            for t in 1..=t_max {
                for i in 1..=(if all_nodes { t } else { 1 }) {
                    jobs.push((n, a, t, i));
                }
            }
        }
    }
    let rows = jobs
        .par_iter()
        .flat_map_iter(|&(n, alpha, t, i)| {
            let tag = format!("t{t}_i{i}");
            let blank = |q: &str, s: Option<f64>| Row::new(Method::Exact, &format!("{q}_{tag}")).at(Some(n), Some(alpha), None, s);
            let predicted = crossings::predict_crossing(n, t, i);
            let prediction = match predicted {
                Ok(p) => p,
                Err(e) => return vec![blank("s_crossing", None).failed(e)],
            };
            let mut out = vec![blank("s_crossing", Some(prediction.s_t_i)).value(prediction.s_t_i)];
            if verify {
                match crossings::verify_crossing(n, alpha, &prediction) {
                    Ok(v) => {
                        let at = v.verified_s;
                        out.push(blank("dip_gap", at).value(v.verified_gap.unwrap_or(f64::NAN)).flags(&v.flags));
                        if let Some(off) = v.off_dip_gap {
                            out.push(blank("off_dip_gap", at).value(off));
                        }
                        if let Some(r) = v.dip_ratio() {
                            out.push(blank("dip_ratio", at).value(r));
                        }
                    }
                    Err(e) => out.push(blank("dip_gap", None).failed(e)),
                }
            }
            out
        })
        .collect();
    Ok(Report::rows(rows))
}

fn classify(spike: &SpikeArgs, threshold: f64, bits: usize) -> Result<Report, CliError> {
    if !(threshold > 0.0) {
        return Err(CliError::Usage("--threshold must be positive".into()));
    }
    let sizes = parse_sizes(&spike.n)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &alpha in &parse_reals(&spike.alpha)? {
        for width in widths(spike)? {
            let c = scaling::classify_gaps(alpha, width, &sizes, bits)?;
            let verdict = c.fit.verdict_at(threshold);
            for p in &c.points {
                rows.push(Row::from_estimate(&p.gap, "min_gap"));
            }
            let mut fit_rows = fit_row(Method::Exact, "slope", alpha, width.beta(), &c.fit);
            fit_rows[0] = Row::new(Method::Exact, "slope").at(None, Some(alpha), width.beta(), None).value(c.fit.slope).flag(verdict.as_str());
            rows.extend(fit_rows);
            summaries.push(json!({
                "alpha": alpha,
                "beta": width.beta(),
                "verdict": verdict.as_str(),
                "threshold": threshold,
                "fit": c.fit,
                "omitted": c.omitted,
            }));
        }
    }
    Ok(Report { rows, summary: Some(Value::Array(summaries)) })
}
