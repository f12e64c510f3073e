use std::io::Write;

use super::experiment::BenchResult;
use super::metrics::median;

pub const RESULTS_HEADER: [&str; 14] = [
    "function",
    "d",
    "n",
    "profile",
    "macrorep",
    "seed",
    "emrmse_gp",
    "emrmse_lm",
    "pmrmse_gp",
    "xi",
    "pi",
    "fit_seconds",
    "predict_seconds",
    "warnings",
];

pub const PLOT_HEADER: [&str; 8] = ["function", "d", "n", "profile", "macrorep", "metric", "value", "style"];

pub const SUMMARY_HEADER: [&str; 8] =
    ["function", "d", "n", "profile", "median_xi", "median_pi", "underestimation_fraction", "failures"];

fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_results<W: Write>(rows: &[BenchResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.function.clone(),
            r.d.to_string(),
            r.n.to_string(),
            r.profile.clone(),
            r.macrorep.to_string(),
            r.seed.to_string(),
            num(r.emrmse_gp),
            num(r.emrmse_lm),
            num(r.pmrmse_gp),
            num(r.xi),
            num(r.pi),
            num(r.fit_seconds),
            num(r.predict_seconds),
            r.warnings.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one line per (row, metric) with ξ drawn solid and π gray.
pub fn write_plot_data<W: Write>(rows: &[BenchResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_HEADER)?;
    for r in rows {
        for (metric, value, style) in [("xi", r.xi, "solid"), ("pi", r.pi, "gray")] {
            w.write_record([
                r.function.clone(),
                r.d.to_string(),
                r.n.to_string(),
                r.profile.clone(),
                r.macrorep.to_string(),
                metric.to_string(),
                num(value),
                style.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Aggregate over the macroreplicates of one (function, d, n, profile) group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub function: String,
    pub d: usize,
    pub n: usize,
    pub profile: String,
    pub median_xi: f64,
    pub median_pi: f64,
    /// Fraction of scored macroreplicates with π < ξ.
    pub underestimation_fraction: f64,
    pub failures: usize,
}

pub fn underestimation_fraction(rows: &[BenchResult]) -> f64 {
    let scored: Vec<&BenchResult> = rows.iter().filter(|r| r.xi.is_finite() && r.pi.is_finite()).collect();
    if scored.is_empty() {
        return f64::NAN;
    }
    scored.iter().filter(|r| r.pi < r.xi).count() as f64 / scored.len() as f64
}

pub fn summarize(rows: &[BenchResult]) -> Vec<GroupSummary> {
    let mut keys: Vec<(String, usize, usize, String)> = Vec::new();
    for r in rows {
        let k = (r.function.clone(), r.d, r.n, r.profile.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(function, d, n, profile)| {
            let group: Vec<BenchResult> = rows
                .iter()
                .filter(|r| r.function == function && r.d == d && r.n == n && r.profile == profile)
                .cloned()
                .collect();
            let xi: Vec<f64> = group.iter().map(|r| r.xi).collect();
            let pi: Vec<f64> = group.iter().map(|r| r.pi).collect();
            GroupSummary {
                median_xi: median(&xi),
                median_pi: median(&pi),
                underestimation_fraction: underestimation_fraction(&group),
                failures: group.iter().filter(|r| r.failed()).count(),
                function,
                d,
                n,
                profile,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(summary: &[GroupSummary], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in summary {
        w.write_record([
            s.function.clone(),
            s.d.to_string(),
            s.n.to_string(),
            s.profile.clone(),
            num(s.median_xi),
            num(s.median_pi),
            num(s.underestimation_fraction),
            s.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
