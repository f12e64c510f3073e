use std::path::Path;

use gpbench::bench::{
    self, run_experiment, run_sk_mm1, stochastic_profiles, BenchResult, ExperimentSpec, SkSpec,
};
use gpbench::designs;
use gpbench::model::io;
use gpbench::testbed::{self, TestFunction};
use gpbench::{FitConfig, FitError, GpModel, Nugget};
use serde::Serialize;

use crate::data::{self, read_table, write_table, x_header};
use crate::manifest::{sibling, RunManifest};
use crate::options::{default_profiles, parse_kernel, parse_nugget, parse_param, parse_profiles};
use crate::{BenchmarkArgs, CliError, DesignArgs, EvalArgs, FitArgs, PredictArgs, SkArgs};

#[derive(Serialize)]
struct Diagnostics<'a> {
    family: String,
    parameterization: &'static str,
    params: &'a [f64],
    theta: &'a [f64],
    nugget: NuggetJson,
    mu_hat: f64,
    sigma2_hat: f64,
    y_mean: f64,
    y_range: f64,
    degenerate: bool,
    deviance: f64,
    search_point: &'a [f64],
    iterations: usize,
    starts: usize,
    failed_starts: usize,
    candidates_evaluated: usize,
    jitter_floor: f64,
    objective_failures: usize,
    termination: &'a str,
}

#[derive(Serialize)]
#[serde(untagged)]
enum NuggetJson {
    Scalar(f64),
    PerPoint(Vec<f64>),
}

fn family_name(f: gpbench::Family) -> String {
    match f {
        gpbench::Family::Matern52 => "matern52".into(),
        gpbench::Family::PowerExponential { exponent } if exponent == 2.0 => "gauss".into(),
        gpbench::Family::PowerExponential { exponent } => format!("pexp:{exponent}"),
    }
}

fn diagnostics(model: &GpModel) -> Diagnostics<'_> {
    let d = model.diagnostics();
    Diagnostics {
        family: family_name(model.kernel().family()),
        parameterization: model.kernel().parameterization().name(),
        params: model.kernel().params(),
        theta: model.theta(),
        nugget: match model.nugget() {
            Nugget::Scalar(v) => NuggetJson::Scalar(*v),
            Nugget::PerPoint(v) => NuggetJson::PerPoint(v.clone()),
        },
        mu_hat: model.scaling().unscale(model.mu_hat()),
        sigma2_hat: model.scaling().unscale_variance(model.sigma2_hat()),
        y_mean: model.scaling().y_mean,
        y_range: model.scaling().y_range,
        degenerate: model.is_degenerate(),
        deviance: d.deviance,
        search_point: &d.search_point,
        iterations: d.iterations,
        starts: d.starts,
        failed_starts: d.failed_starts,
        candidates_evaluated: d.candidates_evaluated,
        jitter_floor: d.jitter_floor,
        objective_failures: d.objective_failures,
        termination: &d.termination,
    }
}

fn fit_error(e: FitError) -> CliError {
    match e {
        FitError::InvalidInput(_) | FitError::Kernel(_) => CliError::Input(format!("fit: {e}")),
        _ => CliError::Numerical(format!("fit: {e}")),
    }
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    let family = parse_kernel(&a.kernel).map_err(CliError::Input)?;
    let nugget = parse_nugget(&a.nugget).map_err(CliError::Input)?;
    let param = parse_param(&a.param).map_err(CliError::Input)?;
    let table = read_table(&a.data)?;
    let cols = table.header.len();
    if cols < 2 || table.header[cols - 1] != "y" {
        return Err(CliError::Input(format!(
            "{}: expected a header x1..xd,y (got {})",
            a.data.display(),
            table.header.join(",")
        )));
    }
    if table.rows.len() < 2 {
        return Err(CliError::Input(format!("{}: at least two data rows are required", a.data.display())));
    }
    let x = table.matrix(cols - 1);
    let y = table.column(cols - 1);
    let mut config = FitConfig::default().with_seed(a.seed).with_nugget(nugget);
    config.n_starts = a.starts;
    let model = gpbench::fit(&x, &y, family, param, &config).map_err(fit_error)?;

    io::save(&model, &a.out).map_err(|e| CliError::Input(format!("cannot write {}: {e}", a.out.display())))?;
    let diag_path = a.diagnostics.clone().unwrap_or_else(|| sibling(&a.out, "diagnostics.json"));
    let json = serde_json::to_string_pretty(&diagnostics(&model)).map_err(|e| CliError::Input(e.to_string()))?;
    data::write_text(&diag_path, &(json + "\n"))?;
    let manifest = sibling(&a.out, "manifest.json");
    RunManifest::new("fit", a).seed("fit", a.seed).output(&a.out).output(&diag_path).output(&manifest).write(&manifest)
}

pub fn predict(a: &PredictArgs) -> Result<(), CliError> {
    let model = io::load(&a.model).map_err(|e| CliError::Input(format!("{}: {e}", a.model.display())))?;
    let d = model.d();
    let table = read_table(&a.points)?;
    if table.header.len() != d {
        return Err(CliError::Input(format!(
            "{}: model has {d} inputs but the points file has {} columns",
            a.points.display(),
            table.header.len()
        )));
    }
    let mut header = x_header(d);
    header.extend(["yhat".to_string(), "mse".to_string()]);
    let rows = table.rows.iter().map(|row| {
        let p = model.predict(row);
        let mut out = row.clone();
        out.extend([p.mean, p.mse]);
        out
    });
    write_table(&a.out, &header, rows)?;
    let manifest = sibling(&a.out, "manifest.json");
    RunManifest::new("predict", a).output(&a.out).output(&manifest).write(&manifest)
}

fn resolve_function(name: &str, d: Option<usize>) -> Result<&'static TestFunction, CliError> {
    testbed::lookup(name, d).ok_or_else(|| {
        let valid: Vec<String> = testbed::functions::ALL
            .iter()
            .map(|f| format!("{} (d={})", f.name, f.dims))
            .collect();
        CliError::Input(match d {
            Some(d) => format!("no test function {name:?} with d={d}; valid: {}", valid.join(", ")),
            None => format!("unknown test function {name:?}; valid: {}", valid.join(", ")),
        })
    })
}

fn write_bench_outputs<A: Serialize>(
    dir: &Path,
    rows: &[BenchResult],
    manifest: RunManifest<'_, A>,
) -> Result<(), CliError> {
    let io_err = |p: &Path, e: csv::Error| CliError::Input(format!("cannot write {}: {e}", p.display()));
    let results = dir.join("results.csv");
    let plot = dir.join("plot_data.csv");
    let summary = dir.join("summary.csv");
    bench::write_results(rows, data::create(&results)?).map_err(|e| io_err(&results, e))?;
    bench::write_plot_data(rows, data::create(&plot)?).map_err(|e| io_err(&plot, e))?;
    bench::write_summary(&bench::summarize(rows), data::create(&summary)?).map_err(|e| io_err(&summary, e))?;
    for r in rows.iter().filter(|r| r.failed()) {
        eprintln!(
            "gpbench: warning: {} n={} macrorep {}: {}",
            r.profile,
            r.n,
            r.macrorep,
            r.failure.as_deref().unwrap_or("")
        );
    }
    let path = dir.join("manifest.json");
    manifest.output(&results).output(&plot).output(&summary).output(&path).write(&path)
}

fn check_jobs(jobs: usize) -> Result<(), CliError> {
    if jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    Ok(())
}

pub fn benchmark(a: &BenchmarkArgs) -> Result<(), CliError> {
    check_jobs(a.jobs)?;
    let function = resolve_function(&a.function, a.d)?;
    let profiles = parse_profiles(a.profiles.as_deref(), default_profiles()).map_err(CliError::Input)?;
    if let Some(p) = profiles.iter().find(|p| p.is_stochastic()) {
        return Err(CliError::Input(format!("profile {} is only valid for sk-mm1", p.label)));
    }
    if a.n < 2 || a.m < 1 || a.macroreps < 1 {
        return Err(CliError::Input("need --n ≥ 2, --m ≥ 1 and --macroreps ≥ 1".into()));
    }
    let spec = ExperimentSpec {
        function,
        n: a.n,
        m: a.m,
        profiles,
        macroreps: a.macroreps,
        base_seed: a.seed,
        jobs: a.jobs,
    };
    let rows = run_experiment(&spec).map_err(CliError::Input)?;
    let mut manifest = RunManifest::new("benchmark", a).seed("base", a.seed);
    for r in &rows {
        manifest = manifest.seed(&format!("{}/{}", r.profile, r.macrorep), r.seed);
    }
    write_bench_outputs(&a.out, &rows, manifest)
}

pub fn sk_mm1(a: &SkArgs) -> Result<(), CliError> {
    check_jobs(a.jobs)?;
    if a.n2 < bench::SK_DESIGN.len() {
        return Err(CliError::Input(format!("--n2 must be at least {} (got {})", bench::SK_DESIGN.len(), a.n2)));
    }
    if a.n1 < 2 || a.macroreps < 1 || a.customers < 1 {
        return Err(CliError::Input("need --n1 ≥ 2, --macroreps ≥ 1 and --customers ≥ 1".into()));
    }
    let profiles = parse_profiles(a.profiles.as_deref(), stochastic_profiles()).map_err(CliError::Input)?;
    if let Some(p) = profiles.iter().find(|p| !p.is_stochastic()) {
        return Err(CliError::Input(format!("profile {} does not model replicate noise", p.label)));
    }
    let spec = SkSpec {
        n1: a.n1,
        n2: a.n2,
        profiles,
        macroreps: a.macroreps,
        seed: a.seed,
        customers: a.customers,
        grid: 200,
        jobs: a.jobs,
    };
    let rows = run_sk_mm1(&spec).map_err(CliError::Input)?;
    let mut manifest = RunManifest::new("sk-mm1", a).seed("base", a.seed);
    for r in &rows {
        manifest = manifest.seed(&format!("{}/{}", r.profile, r.macrorep), r.seed);
    }
    write_bench_outputs(&a.out, &rows, manifest)
}

pub fn gen_design(a: &DesignArgs) -> Result<(), CliError> {
    if a.n == 0 || a.d == 0 {
        return Err(CliError::Input("--n and --d must be positive".into()));
    }
    let x = designs::maximin_lhs(a.n, a.d, a.seed, a.iters);
    write_table(&a.out, &x_header(a.d), (0..a.n).map(|i| x.row(i).iter().copied().collect()))?;
    let manifest = sibling(&a.out, "manifest.json");
    RunManifest::new("gen-design", a).seed("design", a.seed).output(&a.out).output(&manifest).write(&manifest)
}

pub fn eval_fn(a: &EvalArgs) -> Result<(), CliError> {
    let table = read_table(&a.points)?;
    let function = resolve_function(&a.function, a.d.or(Some(table.header.len())))?;
    let mut header = x_header(function.dims);
    header.push("y".into());
    let rows = table.rows.iter().map(|row| {
        let mut out = row.clone();
        out.push(function.eval(row));
        out
    });
    write_table(&a.out, &header, rows)?;
    let manifest = sibling(&a.out, "manifest.json");
    RunManifest::new("eval-fn", a).output(&a.out).output(&manifest).write(&manifest)
}
