//! Subcommand settings and drivers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use coifsolve::benchmarks::{
    convergence_study, make_problem, run_benchmark, Benchmark, BenchmarkKind, BenchmarkName, ErrorNorm, Overrides,
    RunReport,
};
use coifsolve::galerkin::{DEFAULT_QUADRATURE_TOLERANCE, DEFAULT_REFINEMENT};
use coifsolve::integrator::SolverConfig;
use coifsolve::interval::error_study;
use coifsolve::stability::{
    boundary_locus, negative_real_segment, region_grid, winding_agreement, CharacteristicPair, DEFAULT_MARGIN,
};
use coifsolve::toolkit::Toolkit;
use coifsolve::Execution;

use crate::config;
use crate::output::{fmt_f64, Csv, Writer};
use crate::CliError;

pub struct Context {
    pub config: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub sequential: bool,
}

impl Context {
    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn settings<T: Serialize + serde::de::DeserializeOwned>(&self, command: &str, flags: &T) -> Result<T, CliError> {
        config::resolve(flags, config::load(self.config.as_deref(), command)?)
    }
}

/// Comma-separated numbers; each entry may be a fraction such as `1/8`.
pub fn parse_list(s: &str) -> Result<NumList, String> {
    let values = parse_values(s)?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(NumList::Text(s.to_string()))
}

fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("bad number `{s}`"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("bad number `{s}`"))
    }
}

fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_number).collect()
}

/// A list given as text (`1/8,1/16`) or as a JSON array.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumList {
    Values(Vec<f64>),
    Text(String),
}

impl NumList {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            NumList::Values(v) => Ok(v.clone()),
            NumList::Text(s) => parse_values(s).map_err(CliError::Usage),
        }
    }
}

fn parse_number_arg(s: &str) -> Result<f64, String> {
    parse_number(s)
}

fn toolkit(n: Option<usize>, m1: Option<usize>) -> Result<Toolkit, CliError> {
    Ok(Toolkit::reference(n.unwrap_or(6), m1.unwrap_or(7))?)
}

fn bank_tag(tk: &Toolkit) -> String {
    format!("N{}_M1{}", tk.bank.spec.n, tk.bank.spec.m1)
}

fn solver_tolerances(cfg: &SolverConfig) -> Value {
    json!({
        "solver": cfg,
        "assembly": { "refinement": DEFAULT_REFINEMENT, "tolerance": DEFAULT_QUADRATURE_TOLERANCE },
    })
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltersArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long = "M1")]
    #[serde(rename = "M1")]
    pub m1: Option<usize>,
    /// Output JSON file.
    #[arg(long)]
    pub out: Option<String>,
}

pub fn filters(ctx: &Context, flags: FiltersArgs) -> Result<(), CliError> {
    let s = ctx.settings("filters", &flags)?;
    let tk = toolkit(s.n, s.m1)?;
    let mut w = Writer::new(ctx.out_dir.clone())?;
    let name = s.out.clone().unwrap_or_else(|| format!("filters_{}.json", bank_tag(&tk)));
    let doc = tk.tables.to_document();
    let path = w.write_json(&name, &doc)?;
    let residuals = tk.bank.residuals();
    println!("filter residual {:.3e}; wrote {}", residuals.max(), path.display());
    w.finish("filters", serde_json::to_value(&s)?, json!({ "newton_residual": 1e-12 }))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    /// e^x
    Exp,
    /// sin(pi x)
    Sin,
    /// 1 - 2x + 3x^3 - x^5
    Poly,
}

impl TestFunction {
    fn eval(self, x: f64) -> f64 {
        match self {
            TestFunction::Exp => x.exp(),
            TestFunction::Sin => (PI * x).sin(),
            TestFunction::Poly => 1.0 - 2.0 * x + 3.0 * x.powi(3) - x.powi(5),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long = "M1")]
    #[serde(rename = "M1")]
    pub m1: Option<usize>,
    #[arg(long, value_enum)]
    pub function: Option<TestFunction>,
    /// Resolution levels, e.g. `3,4,5,6,7`.
    #[arg(long, value_parser = parse_list)]
    pub levels: Option<NumList>,
    #[arg(long, value_parser = parse_number_arg)]
    pub a: Option<f64>,
    #[arg(long, value_parser = parse_number_arg)]
    pub b: Option<f64>,
    /// Probe points, e.g. `1/2`.
    #[arg(long, value_parser = parse_list)]
    pub probes: Option<NumList>,
    /// Output CSV file; the JSON summary takes the same stem.
    #[arg(long)]
    pub out: Option<String>,
}

fn stem(name: &str) -> &str {
    name.strip_suffix(".csv").or_else(|| name.strip_suffix(".json")).unwrap_or(name)
}

pub fn approx(ctx: &Context, flags: ApproxArgs) -> Result<(), CliError> {
    let s = ctx.settings("approx", &flags)?;
    let tk = toolkit(s.n, s.m1)?;
    let f = s.function.unwrap_or(TestFunction::Exp);
    let levels: Vec<u32> = match &s.levels {
        Some(l) => l
            .values()?
            .into_iter()
            .map(|v| if v >= 0.0 && v.fract() == 0.0 { Ok(v as u32) } else { Err(CliError::Usage(format!("bad level {v}"))) })
            .collect::<Result<_, _>>()?,
        None => (3..=7).collect(),
    };
    let (a, b) = (s.a.unwrap_or(0.0), s.b.unwrap_or(1.0));
    let probes = match &s.probes {
        Some(p) => p.values()?,
        None => vec![0.5 * (a + b)],
    };
    let study = error_study(tk.tables.clone(), tk.ops.clone(), a, b, |x| f.eval(x), |x| f.eval(x), &levels, &probes, ctx.exec())?;
    let mut csv = Csv::new(&["m", "max_error"]);
    for (m, e) in study.levels.iter().zip(&study.max_errors) {
        csv.push_raw(vec![m.to_string(), fmt_f64(*e)]);
    }
    let name = s.out.clone().unwrap_or_else(|| format!("approx_{}.csv", bank_tag(&tk)));
    let mut w = Writer::new(ctx.out_dir.clone())?;
    w.write_csv(&name, &csv)?;
    w.write_json(&format!("{}.json", stem(&name)), &study)?;
    match study.slope {
        Some(sl) => println!("log2-error slope {sl:.4}"),
        None => println!("exact to {:.0e} at every level", coifsolve::interval::EXACT_THRESHOLD),
    }
    w.finish("approx", serde_json::to_value(&s)?, json!({ "exact_threshold": coifsolve::interval::EXACT_THRESHOLD }))?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long = "M1")]
    #[serde(rename = "M1")]
    pub m1: Option<usize>,
    #[arg(long)]
    pub out: Option<String>,
}

pub fn gamma(ctx: &Context, flags: GammaArgs) -> Result<(), CliError> {
    let s = ctx.settings("gamma", &flags)?;
    let tk = toolkit(s.n, s.m1)?;
    let mut csv = Csv::new(&["l", "gamma"]);
    for (l, g) in tk.weights.gamma.iter().enumerate() {
        csv.push_raw(vec![l.to_string(), fmt_f64(*g)]);
    }
    let residuals = tk.weights.moment_residuals(tk.bank.spec.n - 1);
    let name = s.out.clone().unwrap_or_else(|| format!("gamma_{}.csv", bank_tag(&tk)));
    let mut w = Writer::new(ctx.out_dir.clone())?;
    w.write_csv(&name, &csv)?;
    w.write_json(&format!("{}.json", stem(&name)), &json!({ "gamma": tk.weights.gamma, "moment_residuals": residuals }))?;
    let worst = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    println!("{} weights; max moment residual {worst:.3e}", tk.weights.gamma.len());
    w.finish("gamma", serde_json::to_value(&s)?, Value::Null)?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long = "M1")]
    #[serde(rename = "M1")]
    pub m1: Option<usize>,
    /// Number of locus samples.
    #[arg(long)]
    pub locus: Option<usize>,
    /// Grid resolution `nx,ny`; no grid scan when absent.
    #[arg(long, value_parser = parse_list)]
    pub grid: Option<NumList>,
    /// Real range `lo,hi` of the grid.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub re: Option<NumList>,
    /// Imaginary range `lo,hi` of the grid.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub im: Option<NumList>,
    #[arg(long)]
    pub out: Option<String>,
}

fn pair_of(list: &Option<NumList>, default: (f64, f64), what: &str) -> Result<(f64, f64), CliError> {
    match list {
        None => Ok(default),
        Some(l) => match l.values()?.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(CliError::Usage(format!("{what} needs two values"))),
        },
    }
}

pub fn stability(ctx: &Context, flags: StabilityArgs) -> Result<(), CliError> {
    let s = ctx.settings("stability", &flags)?;
    let tk = toolkit(s.n, s.m1)?;
    let pair = CharacteristicPair::new(&tk.weights);
    let locus = boundary_locus(&pair, s.locus.unwrap_or(512))?;
    let mut csv = Csv::new(&["theta", "re", "im"]);
    for (t, z) in locus.theta.iter().zip(&locus.z) {
        csv.push(&[*t, z.re, z.im]);
    }
    let name = s.out.clone().unwrap_or_else(|| format!("stability_{}.csv", bank_tag(&tk)));
    let mut w = Writer::new(ctx.out_dir.clone())?;
    w.write_csv(&name, &csv)?;
    let segment = negative_real_segment(&pair, 4.0, 400)?;
    let mut summary = json!({ "locus_points": locus.z.len(), "poles": locus.poles, "negative_real_segment": segment });
    if s.grid.is_some() {
        let (nx, ny) = pair_of(&s.grid, (0.0, 0.0), "grid")?;
        let re = pair_of(&s.re, (-2.0, 1.0), "re")?;
        let im = pair_of(&s.im, (-2.0, 2.0), "im")?;
        let grid = region_grid(&pair, re, im, (nx as usize, ny as usize), DEFAULT_MARGIN, ctx.exec())?;
        let mut g = Csv::new(&["re", "im", "class"]);
        for (i, row) in grid.class.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let class = c.map_or("failed", |c| c.as_str());
                g.push_raw(vec![fmt_f64(grid.re[j]), fmt_f64(grid.im[i]), class.to_string()]);
            }
        }
        w.write_csv(&format!("{}_grid.csv", stem(&name)), &g)?;
        let agreement = winding_agreement(&grid, &locus, 1e-3);
        summary["grid_failures"] = json!(grid.failures());
        summary["winding_agreement"] = json!({ "compared": agreement.compared, "agreeing": agreement.agreeing });
        println!("winding/root agreement {:.2}%", 100.0 * agreement.fraction());
    }
    w.write_json(&format!("{}.json", stem(&name)), &summary)?;
    println!("locus with {} points; stable negative-real segment [-{segment:.3}, 0)", locus.z.len());
    w.finish("stability", serde_json::to_value(&s)?, json!({ "margin": DEFAULT_MARGIN }))?;
    Ok(())
}

/// Settings shared by the benchmark-running commands.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    #[arg(long)]
    pub bench: Option<String>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long = "M1")]
    #[serde(rename = "M1")]
    pub m1: Option<usize>,
    /// Spatial resolution level (PDE benchmarks).
    #[arg(long = "n")]
    #[serde(rename = "n")]
    pub level: Option<u32>,
    /// Time step; fractions such as `1/64` are accepted.
    #[arg(long, value_parser = parse_number_arg)]
    pub h: Option<f64>,
    /// Final time.
    #[arg(long, value_parser = parse_number_arg)]
    pub t: Option<f64>,
    /// Problem parameters, e.g. `--param re=100 --param eta=10`.
    #[arg(long)]
    pub param: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<String>,
}

pub type IvpArgs = RunArgs;
pub type PdeArgs = RunArgs;

fn overrides(s: &RunArgs) -> Result<Overrides, CliError> {
    let mut o = Overrides::new();
    for p in s.param.iter().flatten() {
        let (k, v) = p.split_once('=').ok_or_else(|| CliError::Usage(format!("parameter `{p}` is not key=value")))?;
        o.insert(k.trim().to_string(), parse_number(v).map_err(CliError::Usage)?);
    }
    if let Some(n) = s.level {
        o.insert("n".into(), n as f64);
    }
    if let Some(h) = s.h {
        o.insert("h".into(), h);
    }
    if let Some(t) = s.t {
        o.insert("t_end".into(), t);
    }
    Ok(o)
}

fn benchmark(s: &RunArgs, default: &str) -> Result<Benchmark, CliError> {
    let name = s.bench.as_deref().unwrap_or(default);
    let mut b = make_problem(name, &overrides(s)?)?;
    // Report every probe time up to the requested end.
    let t_end = b.discretization.t_end;
    b.discretization.probe_times.retain(|&t| t <= t_end + 1e-12);
    if !b.discretization.probe_times.iter().any(|&t| (t - t_end).abs() < 1e-12) {
        b.discretization.probe_times.push(t_end);
    }
    Ok(b)
}

fn report_summary(r: &RunReport) -> Value {
    json!({
        "benchmark": r.benchmark,
        "h": r.h,
        "steps": r.steps,
        "errors": r.errors.iter().map(|(t, e)| json!({ "t": t, "max_nodal_error": e })).collect::<Vec<_>>(),
        "max_abs": r.max_abs,
        "checksums_before": r.checksums_before,
        "checksums_after": r.checksums_after,
        "checksums_equal": r.checksums_before == r.checksums_after,
        "numeric_seeds": r.numeric_seeds,
        "seed_accuracy_warning": r.seed_accuracy_warning,
        "failure": r.failure,
    })
}

fn finish_run(r: &RunReport) -> Result<(), CliError> {
    for (t, e) in &r.errors {
        println!("t = {t}: max error {e:.4e}");
    }
    match &r.failure {
        Some(f) => Err(CliError::RunFailed(f.clone())),
        None => Ok(()),
    }
}

pub fn ivp(ctx: &Context, flags: IvpArgs) -> Result<(), CliError> {
    let s = ctx.settings("ivp", &flags)?;
    let b = benchmark(&s, "oscillator")?;
    let BenchmarkKind::Ode { system, .. } = &b.kind else {
        return Err(CliError::Usage(format!("{} is a PDE benchmark; use `pde`", b.name)));
    };
    let tk = toolkit(s.n, s.m1)?;
    let cfg = SolverConfig::default();
    let mut header = vec!["t".to_string()];
    header.extend((0..system.dim).map(|i| format!("y{i}")));
    if b.reference.is_some() {
        header.push("reference".into());
    }
    let mut csv = Csv::with_header(header);
    let reference = b.reference.clone();
    let r = run_benchmark(&b, &tk, b.discretization.h, ErrorNorm::Nodal, &cfg, |_, t, y, _| {
        let mut row = vec![t];
        row.extend_from_slice(y);
        if let Some(f) = &reference {
            row.push(f(0.0, t));
        }
        csv.push(&row);
    })?;
    let name = s.out.clone().unwrap_or_else(|| format!("ivp_{}_{}.csv", b.name, bank_tag(&tk)));
    let mut w = Writer::new(ctx.out_dir.clone())?;
    w.write_csv(&name, &csv)?;
    w.write_json(&format!("{}.json", stem(&name)), &report_summary(&r))?;
    w.finish("ivp", serde_json::to_value(&s)?, solver_tolerances(&cfg))?;
    finish_run(&r)
}

pub fn pde(ctx: &Context, flags: PdeArgs) -> Result<(), CliError> {
    let s = ctx.settings("pde", &flags)?;
    let b = benchmark(&s, "burgers_a")?;
    if !b.name.is_pde() {
        return Err(CliError::Usage(format!("{} is an ODE benchmark; use `ivp`", b.name)));
    }
    let tk = toolkit(s.n, s.m1)?;
    let cfg = SolverConfig::default();
    let r = run_benchmark(&b, &tk, b.discretization.h, ErrorNorm::Nodal, &cfg, |_, _, _, _| {})?;
    let mut header = vec!["t", "x", "u"];
    if b.reference.is_some() {
        header.push("reference");
    }
    let mut csv = Csv::new(&header);
    for (t, u) in &r.snapshots {
        for (x, v) in r.nodes.iter().zip(u) {
            let mut row = vec![*t, *x, *v];
            if let Some(f) = &b.reference {
                row.push(f(*x, *t));
            }
            csv.push(&row);
        }
    }
    let name = s.out.clone().unwrap_or_else(|| format!("pde_{}_{}.csv", b.name, bank_tag(&tk)));
    let mut w = Writer::new(ctx.out_dir.clone())?;
    w.write_csv(&name, &csv)?;
    w.write_json(&format!("{}.json", stem(&name)), &report_summary(&r))?;
    w.finish("pde", serde_json::to_value(&s)?, solver_tolerances(&cfg))?;
    finish_run(&r)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchArgs {
    /// Benchmark names separated by commas, or `all`.
    #[arg(long)]
    pub bench: Option<String>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long = "M1")]
    #[serde(rename = "M1")]
    pub m1: Option<usize>,
    #[arg(long)]
    pub out: Option<String>,
}

pub fn bench(ctx: &Context, flags: BenchArgs) -> Result<(), CliError> {
    let s = ctx.settings("bench", &flags)?;
    let names: Vec<BenchmarkName> = match s.bench.as_deref().unwrap_or("all") {
        "all" => BenchmarkName::ALL.to_vec(),
        list => list.split(',').map(|n| n.trim().parse()).collect::<Result<_, _>>()?,
    };
    let tk = toolkit(s.n, s.m1)?;
    let cfg = SolverConfig::default();
    let benches = names.iter().map(|n| make_problem(n.as_str(), &Overrides::new())).collect::<Result<Vec<_>, _>>()?;
    let reports = ctx.exec().map(benches.len(), |i| {
        run_benchmark(&benches[i], &tk, benches[i].discretization.h, ErrorNorm::Nodal, &cfg, |_, _, _, _| {})
    });
    let mut summary = BTreeMap::new();
    let mut failed = Vec::new();
    for (b, r) in benches.iter().zip(reports) {
        match r {
            Ok(r) => {
                let worst = r.max_error().map_or("n/a".to_string(), |e| format!("{e:.4e}"));
                println!("{}: h = {}, max error {worst}{}", b.name, r.h, r.failure.as_ref().map_or(String::new(), |f| format!(" (failed: {f})")));
                if r.failure.is_some() {
                    failed.push(b.name.to_string());
                }
                summary.insert(b.name.to_string(), report_summary(&r));
            }
            Err(e) => {
                println!("{}: failed: {e}", b.name);
                failed.push(b.name.to_string());
                summary.insert(b.name.to_string(), json!({ "failure": e.to_string() }));
            }
        }
    }
    let name = s.out.clone().unwrap_or_else(|| format!("bench_{}.json", bank_tag(&tk)));
    let mut w = Writer::new(ctx.out_dir.clone())?;
    w.write_json(&name, &summary)?;
    w.finish("bench", serde_json::to_value(&s)?, solver_tolerances(&cfg))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::RunFailed(format!("{} did not complete", failed.join(", "))))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    Nodal,
    Reconstructed,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub bench: Option<String>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long = "M1")]
    #[serde(rename = "M1")]
    pub m1: Option<usize>,
    #[arg(long = "n")]
    #[serde(rename = "n")]
    pub level: Option<u32>,
    /// Step sizes, e.g. `1/8,1/16,1/32`.
    #[arg(long, value_parser = parse_list)]
    pub h: Option<NumList>,
    /// Probe time.
    #[arg(long, value_parser = parse_number_arg)]
    pub t: Option<f64>,
    #[arg(long, value_enum)]
    pub norm: Option<NormArg>,
    #[arg(long)]
    pub param: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<String>,
}

pub fn converge(ctx: &Context, flags: ConvergeArgs) -> Result<(), CliError> {
    let s = ctx.settings("converge", &flags)?;
    let run = RunArgs {
        bench: s.bench.clone(),
        n: s.n,
        m1: s.m1,
        level: s.level,
        h: None,
        t: None,
        param: s.param.clone(),
        out: None,
    };
    let b = benchmark(&run, "oscillator")?;
    let hs = match &s.h {
        Some(h) => h.values()?,
        None => (3..=7).map(|i| 0.5f64.powi(i)).collect(),
    };
    let t = s.t.unwrap_or(b.discretization.t_end);
    let norm = match s.norm.unwrap_or(NormArg::Nodal) {
        NormArg::Nodal => ErrorNorm::Nodal,
        NormArg::Reconstructed => ErrorNorm::Reconstructed { probes: 64 },
    };
    let tk = toolkit(s.n, s.m1)?;
    let cfg = SolverConfig::default();
    let study = convergence_study(&b, &tk, &hs, norm, t, &cfg, ctx.exec())?;
    let mut csv = Csv::new(&["h", "error"]);
    for (h, e) in study.hs.iter().zip(&study.errors) {
        csv.push_raw(vec![fmt_f64(*h), e.map_or("nan".to_string(), fmt_f64)]);
    }
    let name = s.out.clone().unwrap_or_else(|| format!("converge_{}_{}.csv", b.name, bank_tag(&tk)));
    let mut w = Writer::new(ctx.out_dir.clone())?;
    w.write_csv(&name, &csv)?;
    w.write_json(&format!("{}.json", stem(&name)), &study)?;
    w.finish("converge", serde_json::to_value(&s)?, solver_tolerances(&cfg))?;
    for (h, e) in study.hs.iter().zip(&study.errors) {
        println!("h = {h}: error {}", e.map_or("failed".to_string(), |e| format!("{e:.4e}")));
    }
    match study.slope {
        Some(sl) => println!("fitted slope {sl:.3}"),
        None => println!("fitted slope unavailable"),
    }
    if study.failures.is_empty() {
        Ok(())
    } else {
        let f: Vec<String> = study.failures.iter().map(|(h, e)| format!("h = {h}: {e}")).collect();
        Err(CliError::RunFailed(f.join("; ")))
    }
}
