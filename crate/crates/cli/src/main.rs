use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gaugesim_core::catalog::{self, AnyGaugeSet, AnySystem, CatalogError, Params};
use gaugesim_core::collapse::{
    find_min_steps, plan_with_steps, simulate, CollapseError, CollapsePlan, CompiledPlan, Forcing,
};
use gaugesim_core::gauge::{double_plateau, solve_all_gauges, GaugeError, IgnitionIndex, WorkingSet};
use gaugesim_core::io::{self, IoError, SCHEMA};
use gaugesim_core::metrics::{self, MetricsError, TSIRELSON};
use gaugesim_core::report;
use gaugesim_core::scalar::{parse_rational, rational_to_string, Scalar};
use gaugesim_core::system::{outcome_bits, setting_index, ModelError, ProbabilitySystem};

const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "gaugesim", version, about = "Contextual probability systems, gauge distributions and entanglement metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["system", "catalog"])))]
struct Source {
    /// System JSON file.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Catalog entry name (see `catalog list`).
    #[arg(long)]
    catalog: Option<String>,
    /// Catalog parameter override, `name=value`.
    #[arg(long = "param", requires = "catalog")]
    params: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check shape, normalization and local consistency.
    Validate(Source),
    /// Solve gauge distributions.
    Gauges {
        #[command(flatten)]
        source: Source,
        /// `full`, `double-plateau` or a JSON file listing ignition indices.
        #[arg(long, default_value = "full")]
        support: String,
        /// `1`, a step count, or `auto` for the smallest feasible count.
        #[arg(long, default_value = "1")]
        steps: String,
    },
    /// Simulate classical collapses at one setting vector.
    Collapse {
        #[command(flatten)]
        source: Source,
        /// Setting per region, by index or label.
        #[arg(long)]
        settings: String,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Leading regions then `final`, e.g. `2,final`; `auto` picks the
        /// shortest plan.
        #[arg(long, default_value = "auto")]
        plan: String,
        /// Always use this configuration `region * K + setting` for the final draw.
        #[arg(long = "force-gauge")]
        force_gauge: Option<usize>,
        /// Number of traced runs to include.
        #[arg(long, default_value_t = 3)]
        traces: u64,
    },
    /// Entropies, CHSH and the entanglement scheme.
    Metrics {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        settings: Option<String>,
    },
    /// Separable, quantum compatible or super-quantum.
    Classify(Source),
    /// Evaluate a catalog family over parameter values.
    Sweep {
        #[arg(long)]
        catalog: String,
        /// Swept parameter with its values, `name=v1,v2,...`; other
        /// `--param` flags are held fixed.
        #[arg(long)]
        sweep: String,
        #[arg(long = "param")]
        params: Vec<String>,
        /// Bisect the first crossing of the Tsirelson bound by the largest
        /// conditioned CHSH value.
        #[arg(long)]
        crossing: bool,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Browse the built-in systems.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand, Debug)]
enum CatalogAction {
    List,
    Show {
        name: String,
        #[arg(long = "param")]
        params: Vec<String>,
    },
    Emit {
        name: String,
        #[arg(long = "param")]
        params: Vec<String>,
    },
}

/// A failure with its exit code and an optional report for stdout.
#[derive(Debug)]
struct Exit {
    code: u8,
    message: String,
    report: Option<Value>,
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    Exit { code: EXIT_USAGE, message: message.into(), report: None }.into()
}

fn error_kind(e: &ModelError) -> &'static str {
    match e {
        ModelError::InvalidShape(_) => "InvalidShape",
        ModelError::MissingTarget { .. } => "MissingTarget",
        ModelError::DuplicateTarget { .. } => "DuplicateTarget",
        ModelError::NegativeProbability { .. } => "NegativeProbability",
        ModelError::NormalizationViolation { .. } => "NormalizationViolation",
        ModelError::InconsistentMarginal { .. } => "InconsistentMarginal",
        ModelError::WrongArity { .. } => "WrongArity",
        ModelError::ZeroProbabilityBranch { .. } => "ZeroProbabilityBranch",
    }
}

fn validation(kind: &str, message: String) -> anyhow::Error {
    let report = json!({ "schema": SCHEMA, "valid": false, "error": { "kind": kind, "message": message } });
    Exit { code: EXIT_VALIDATION, message, report: Some(report) }.into()
}

fn from_model(e: ModelError) -> anyhow::Error {
    validation(error_kind(&e), e.to_string())
}

fn from_io(e: IoError) -> anyhow::Error {
    match e {
        IoError::Model(m) => from_model(m),
        IoError::Json(j) => validation("MalformedJson", j.to_string()),
        other => validation("MalformedSystem", other.to_string()),
    }
}

fn from_catalog(e: CatalogError) -> anyhow::Error {
    match e {
        CatalogError::Model(m) => from_model(m),
        CatalogError::ConstraintViolation(_) => validation("ConstraintViolation", e.to_string()),
        CatalogError::NegativeEntry { .. } => validation("NegativeEntry", e.to_string()),
        other => usage(other.to_string()),
    }
}

fn from_metrics(e: MetricsError) -> anyhow::Error {
    match e {
        MetricsError::Model(m) => from_model(m),
        other => usage(other.to_string()),
    }
}

fn infeasible(message: String, report: Value) -> anyhow::Error {
    Exit { code: EXIT_INFEASIBLE, message, report: Some(report) }.into()
}

fn from_gauge(e: GaugeError) -> anyhow::Error {
    match e {
        GaugeError::Infeasible { configs } => {
            let k_list: Vec<Value> = configs.iter().map(|c| json!({ "region": c.region, "setting": c.setting })).collect();
            infeasible(
                format!("no one-step gauge for {} configuration(s)", configs.len()),
                json!({ "schema": SCHEMA, "feasible": false, "infeasible": k_list }),
            )
        }
        GaugeError::NotLocallyConsistent { region, deviation } => {
            from_model(ModelError::InconsistentMarginal { region, deviation })
        }
        other => usage(other.to_string()),
    }
}

fn from_collapse(e: CollapseError) -> anyhow::Error {
    match e {
        CollapseError::InfeasibleBranch { step, ref branch } => infeasible(
            e.to_string(),
            json!({ "schema": SCHEMA, "feasible": false, "step": step, "branch": branch }),
        ),
        CollapseError::Gauge(g) => from_gauge(g),
        CollapseError::Model(m) => from_model(m),
        other => usage(other.to_string()),
    }
}

fn load(source: &Source) -> anyhow::Result<(AnySystem, Option<String>)> {
    if let Some(path) = &source.system {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        return Ok((io::system_from_json(&text).map_err(from_io)?, None));
    }
    let name = source.catalog.as_deref().expect("clap enforces one source");
    let params = Params::parse(&source.params).map_err(from_catalog)?;
    Ok((catalog::build(name, &params).map_err(from_catalog)?, Some(name.to_string())))
}

/// Comma-separated settings by label or index.
fn parse_settings(text: &str, labels: &[String], n: usize) -> anyhow::Result<Vec<usize>> {
    let u = text
        .split(',')
        .map(str::trim)
        .map(|t| {
            labels
                .iter()
                .position(|l| l == t)
                .or_else(|| t.parse().ok().filter(|&s: &usize| s < labels.len()))
                .ok_or_else(|| usage(format!("unknown setting {t:?}; expected one of {labels:?} or an index")))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if u.len() != n {
        return Err(usage(format!("{} settings for {n} regions", u.len())));
    }
    Ok(u)
}

fn require_consistent<S: Scalar>(sys: &ProbabilitySystem<S>) -> anyhow::Result<()> {
    match sys.local_consistency().worst {
        Some(w) => Err(from_model(ModelError::InconsistentMarginal { region: w.region, deviation: w.deviation })),
        None => Ok(()),
    }
}

struct Report {
    json: Value,
    table: Option<(Vec<String>, Vec<Vec<String>>)>,
}

impl Report {
    fn json(json: Value) -> Self {
        Report { json, table: None }
    }
}

fn cmd_validate(source: &Source) -> anyhow::Result<Report> {
    let (sys, name) = load(source)?;
    fn inner<S: Scalar>(sys: &ProbabilitySystem<S>, name: Option<String>) -> anyhow::Result<Report> {
        require_consistent(sys)?;
        let correlated = if sys.n() == 2 { Some(sys.is_totally_correlated().map_err(from_model)?) } else { None };
        Ok(Report::json(json!({
            "schema": SCHEMA,
            "valid": true,
            "name": name,
            "n": sys.n(),
            "k": sys.k(),
            "scalar": match S::BACKEND { gaugesim_core::scalar::Backend::Rational => "rational", _ => "float" },
            "locally_consistent": true,
            "totally_correlated": correlated,
            "separable": sys.is_separable(),
        })))
    }
    match &sys {
        AnySystem::Rational(s) => inner(s, name),
        AnySystem::Float(s) => inner(s, name),
    }
}

fn load_working_set(support: &str, n: usize, k: usize) -> anyhow::Result<Option<WorkingSet>> {
    match support {
        "full" => Ok(None),
        "double-plateau" => {
            if n != 2 {
                return Err(usage("the double-plateau working set is for two-region systems"));
            }
            Ok(Some(double_plateau(k).bell_lift(k)))
        }
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read support file {path}: {e}")))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("support file {path}: {e}")))?;
            let list = v.get("indices").unwrap_or(&v);
            let indices: Vec<u64> =
                serde_json::from_value(list.clone()).map_err(|e| usage(format!("support file {path}: {e}")))?;
            Ok(Some(
                WorkingSet::new(indices.into_iter().map(IgnitionIndex).collect()).map_err(|e| usage(e.to_string()))?,
            ))
        }
    }
}

fn gauge_table<S: Scalar>(json_gauges: &Value, branch: &str, rows: &mut Vec<Vec<String>>) {
    let _ = std::marker::PhantomData::<S>;
    for g in json_gauges.as_array().into_iter().flatten() {
        let support = g["support"].as_array().cloned().unwrap_or_default();
        let weights = g["weights"].as_array().cloned().unwrap_or_default();
        for (j, w) in support.iter().zip(weights) {
            let w = match w {
                Value::String(s) => s,
                other => other.to_string(),
            };
            rows.push(vec![branch.to_string(), g["gamma"].to_string(), j.to_string(), w]);
        }
    }
}

fn cmd_gauges(source: &Source, support: &str, steps: &str) -> anyhow::Result<Report> {
    let (sys, _) = load(source)?;
    fn inner<S: Scalar>(sys: &ProbabilitySystem<S>, support: &str, steps: &str) -> anyhow::Result<Report> {
        require_consistent(sys)?;
        let header = vec!["branch".to_string(), "gamma".into(), "j".into(), "weight".into()];
        let mut rows = Vec::new();
        let found = match steps {
            "1" => {
                let ws = load_working_set(support, sys.n(), sys.k())?;
                let set = solve_all_gauges(sys, ws.as_ref()).map_err(from_gauge)?;
                let json = report::gauge_set_report(&set);
                gauge_table::<S>(&json["gauges"], "root", &mut rows);
                return Ok(Report { json, table: Some((header, rows)) });
            }
            "auto" => find_min_steps(sys).map_err(from_collapse)?,
            m => {
                let m: usize = m.parse().map_err(|_| usage(format!("--steps expects 1, a count or auto, got {m:?}")))?;
                plan_with_steps(sys, m).map_err(from_collapse)?.ok_or_else(|| {
                    infeasible(
                        format!("no {m}-step classical collapse"),
                        json!({ "schema": SCHEMA, "feasible": false, "steps": m }),
                    )
                })?
            }
        };
        if support != "full" {
            return Err(usage("--support applies to one-step solving only"));
        }
        let json = report::min_steps_report(&found);
        for b in json["branches"].as_array().into_iter().flatten() {
            gauge_table::<S>(&b["gauges"], b["branch"].as_str().unwrap_or(""), &mut rows);
        }
        Ok(Report { json, table: Some((header, rows)) })
    }
    match &sys {
        AnySystem::Rational(s) => inner(s, support, steps),
        AnySystem::Float(s) => inner(s, support, steps),
    }
}

struct CollapseArgs<'a> {
    settings: &'a str,
    runs: u64,
    seed: u64,
    plan: &'a str,
    force_gauge: Option<usize>,
    traces: u64,
}

fn cmd_collapse(source: &Source, args: &CollapseArgs) -> anyhow::Result<Report> {
    let (sys, _) = load(source)?;
    fn inner<S: Scalar>(sys: &ProbabilitySystem<S>, args: &CollapseArgs) -> anyhow::Result<Report> {
        require_consistent(sys)?;
        let u = parse_settings(args.settings, sys.labels(), sys.n())?;
        let compiled = if args.plan == "auto" {
            find_min_steps(sys).map_err(from_collapse)?.compiled
        } else {
            let plan: CollapsePlan = args.plan.parse().map_err(from_collapse)?;
            CompiledPlan::compile(sys, &plan).map_err(from_collapse)?
        };
        let plan = compiled.plan().clone();
        let forcing = Forcing { gamma: args.force_gauge, ignition: None };
        let table = simulate(&compiled, &u, args.runs, args.seed, &forcing).map_err(from_collapse)?;
        let counts = table.counts(&u).expect("simulated row");
        let ui = setting_index(&u, sys.k());
        let mut rows = Vec::new();
        let mut list = Vec::new();
        for (xm, &c) in counts.iter().enumerate() {
            let freq = c as f64 / args.runs as f64;
            let x = outcome_bits(xm, sys.n());
            let p = sys.p_at(xm, ui);
            list.push(json!({ "x": x, "count": c, "frequency": freq, "p": io::report_scalar(p) }));
            let xs: String = x.iter().map(|b| b.to_string()).collect();
            rows.push(vec![xs, c.to_string(), freq.to_string(), p.to_string()]);
        }
        let traces = (0..args.traces)
            .map(|i| compiled.run_seeded(&u, args.seed.wrapping_add(i), &forcing).map(|(_, t)| t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(from_collapse)?;
        let json = json!({
            "schema": SCHEMA,
            "settings": u,
            "runs": args.runs,
            "seed": args.seed,
            "plan": plan.to_string(),
            "force_gauge": args.force_gauge,
            "counts": list,
            "tv_distance": table.tv_distance(sys, &u),
            "trace_sample": traces,
        });
        let header = vec!["x".to_string(), "count".into(), "frequency".into(), "p".into()];
        Ok(Report { json, table: Some((header, rows)) })
    }
    match &sys {
        AnySystem::Rational(s) => inner(s, args),
        AnySystem::Float(s) => inner(s, args),
    }
}

fn cmd_metrics(source: &Source, settings: Option<&str>) -> anyhow::Result<Report> {
    let (sys, _) = load(source)?;
    fn inner<S: Scalar>(sys: &ProbabilitySystem<S>, settings: Option<&str>) -> anyhow::Result<Report> {
        require_consistent(sys)?;
        let u = settings.map(|s| parse_settings(s, sys.labels(), sys.n())).transpose()?;
        let json = report::metrics_report(sys, u.as_deref()).map_err(from_metrics)?;
        Ok(Report::json(json))
    }
    match &sys {
        AnySystem::Rational(s) => inner(s, settings),
        AnySystem::Float(s) => inner(s, settings),
    }
}

fn cmd_classify(source: &Source) -> anyhow::Result<Report> {
    let (sys, _) = load(source)?;
    let json = match &sys {
        AnySystem::Rational(s) => report::classification_report(s),
        AnySystem::Float(s) => report::classification_report(s),
    }
    .map_err(from_metrics)?;
    Ok(Report::json(json))
}

#[derive(Debug, Clone)]
struct SweepPoint {
    value: String,
    min_steps: usize,
    max_chsh: Option<f64>,
    total_entanglement: f64,
    class: metrics::Class,
}

fn evaluate_point(name: &str, fixed: &[String], param: &str, value: &str) -> anyhow::Result<SweepPoint> {
    let mut assignments = fixed.to_vec();
    assignments.push(format!("{param}={value}"));
    let params = Params::parse(&assignments).map_err(from_catalog)?;
    let sys = catalog::build(name, &params).map_err(from_catalog)?;
    fn inner<S: Scalar>(sys: &ProbabilitySystem<S>, value: &str) -> anyhow::Result<SweepPoint> {
        require_consistent(sys)?;
        let min_steps = find_min_steps(sys).map_err(from_collapse)?.steps;
        let max_chsh = if sys.n() == 2 {
            metrics::chsh_max(sys, metrics::SpinConvention::Uniform).map_err(from_metrics)?.map(|c| c.value)
        } else {
            metrics::max_branch_chsh(sys).map_err(from_metrics)?.map(|b| b.chsh.value)
        };
        let scheme = metrics::entanglement_scheme(sys).map_err(from_metrics)?;
        let class = metrics::classify(sys).map_err(from_metrics)?.class;
        Ok(SweepPoint {
            value: value.to_string(),
            min_steps,
            max_chsh,
            total_entanglement: scheme.max_total_entanglement,
            class,
        })
    }
    match &sys {
        AnySystem::Rational(s) => inner(s, value),
        AnySystem::Float(s) => inner(s, value),
    }
}

fn point_json(p: &SweepPoint) -> Value {
    json!({
        "value": p.value,
        "min_steps": p.min_steps,
        "max_chsh": p.max_chsh,
        "total_entanglement": p.total_entanglement,
        "classification": p.class,
    })
}

struct SweepArgs<'a> {
    catalog: &'a str,
    sweep: &'a str,
    params: &'a [String],
    crossing: bool,
    tolerance: f64,
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<Report> {
    let entry = catalog::entry(args.catalog).map_err(from_catalog)?;
    let (param, values) =
        args.sweep.split_once('=').ok_or_else(|| usage(format!("--sweep expects name=v1,v2,..., got {:?}", args.sweep)))?;
    if !entry.params.iter().any(|p| p.name == param) {
        return Err(usage(format!("{} has no parameter {param:?}", entry.name)));
    }
    let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(usage("--sweep needs at least one value"));
    }
    let points = values
        .iter()
        .map(|v| evaluate_point(args.catalog, args.params, param, v))
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut crossing = Value::Null;
    if args.crossing {
        crossing = bisect_crossing(args, param, &points)?;
    }
    let header = ["value", "min_steps", "max_chsh", "total_entanglement", "classification"].map(String::from).to_vec();
    let rows = points
        .iter()
        .map(|p| {
            vec![
                p.value.clone(),
                p.min_steps.to_string(),
                p.max_chsh.map(|c| c.to_string()).unwrap_or_default(),
                p.total_entanglement.to_string(),
                p.class.to_string(),
            ]
        })
        .collect();
    let json = json!({
        "schema": SCHEMA,
        "catalog": args.catalog,
        "param": param,
        "fixed": args.params,
        "points": points.iter().map(point_json).collect::<Vec<_>>(),
        "crossing": crossing,
    });
    Ok(Report { json, table: Some((header, rows)) })
}

/// Bisect the first sample interval where the largest CHSH value crosses
/// the Tsirelson bound. Midpoints are exact rationals.
fn bisect_crossing(args: &SweepArgs, param: &str, points: &[SweepPoint]) -> anyhow::Result<Value> {
    let above = |p: &SweepPoint| p.max_chsh.is_some_and(|c| c > TSIRELSON);
    let Some(i) = points.windows(2).position(|w| above(&w[0]) != above(&w[1])) else {
        return Ok(json!({ "found": false }));
    };
    let parse = |v: &str| parse_rational(v).map_err(|_| usage(format!("crossing needs rational values, got {v:?}")));
    let mut lo = parse(&points[i].value)?;
    let mut hi = parse(&points[i + 1].value)?;
    let lo_above = above(&points[i]);
    let two = gaugesim_core::Rational::from_ratio(2, 1);
    let mut evaluations = 0;
    while (hi.clone() - lo.clone()).to_f64().abs() > args.tolerance {
        let mid = (lo.clone() + hi.clone()) / two.clone();
        let p = evaluate_point(args.catalog, args.params, param, &rational_to_string(&mid))?;
        evaluations += 1;
        if above(&p) == lo_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let estimate = ((lo.clone() + hi.clone()) / two).to_f64();
    Ok(json!({
        "found": true,
        "threshold": TSIRELSON,
        "lo": lo.to_f64(),
        "hi": hi.to_f64(),
        "estimate": estimate,
        "evaluations": evaluations,
    }))
}

fn cmd_catalog(action: &CatalogAction) -> anyhow::Result<Report> {
    match action {
        CatalogAction::List => {
            let rows = catalog::entries()
                .iter()
                .map(|e| {
                    let params: Vec<String> = e.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
                    vec![e.name.to_string(), e.summary.to_string(), params.join(" ")]
                })
                .collect();
            Ok(Report {
                json: json!({ "schema": SCHEMA, "entries": catalog::entries() }),
                table: Some((vec!["name".into(), "summary".into(), "params".into()], rows)),
            })
        }
        CatalogAction::Show { name, params } => {
            let entry = catalog::entry(name).map_err(from_catalog)?;
            let p = Params::parse(params).map_err(from_catalog)?;
            let sys = catalog::build(name, &p).map_err(from_catalog)?;
            let gauges = match catalog::reference_gauges(name, &p).map_err(from_catalog)? {
                Some(AnyGaugeSet::Rational(g)) => io::gauges_to_value(&g),
                Some(AnyGaugeSet::Float(g)) => io::gauges_to_value(&g),
                None => Value::Null,
            };
            Ok(Report::json(json!({
                "schema": SCHEMA,
                "entry": entry,
                "system": io::any_system_to_value(&sys, Some(name)),
                "reference_gauges": gauges,
            })))
        }
        CatalogAction::Emit { name, params } => {
            let p = Params::parse(params).map_err(from_catalog)?;
            let sys = catalog::build(name, &p).map_err(from_catalog)?;
            Ok(Report::json(io::any_system_to_value(&sys, Some(name))))
        }
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<Vec<String>>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, rows);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, rows);
            }
        }
        Value::String(s) => rows.push(vec![prefix.to_string(), s.clone()]),
        other => rows.push(vec![prefix.to_string(), other.to_string()]),
    }
}

fn render(report: &Report, format: Format) -> anyhow::Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&report.json)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            match &report.table {
                Some((header, rows)) => {
                    w.write_record(header)?;
                    for r in rows {
                        w.write_record(r)?;
                    }
                }
                None => {
                    let mut rows = Vec::new();
                    flatten("", &report.json, &mut rows);
                    w.write_record(["key", "value"])?;
                    for r in rows {
                        w.write_record(r)?;
                    }
                }
            }
            Ok(w.into_inner().context("flushing CSV")?)
        }
    }
}

fn emit(bytes: &[u8], out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            Ok(stdout.flush()?)
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<Report> {
    match &cli.command {
        Command::Validate(source) => cmd_validate(source),
        Command::Gauges { source, support, steps } => cmd_gauges(source, support, steps),
        Command::Collapse { source, settings, runs, seed, plan, force_gauge, traces } => cmd_collapse(
            source,
            &CollapseArgs {
                settings,
                runs: *runs,
                seed: *seed,
                plan,
                force_gauge: *force_gauge,
                traces: *traces,
            },
        ),
        Command::Metrics { source, settings } => cmd_metrics(source, settings.as_deref()),
        Command::Classify(source) => cmd_classify(source),
        Command::Sweep { catalog, sweep, params, crossing, tolerance } => cmd_sweep(&SweepArgs {
            catalog,
            sweep,
            params,
            crossing: *crossing,
            tolerance: *tolerance,
        }),
        Command::Catalog { action } => cmd_catalog(action),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = dispatch(&cli).and_then(|report| {
        let bytes = render(&report, cli.output.format)?;
        emit(&bytes, cli.output.out.as_ref())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => match err.downcast_ref::<Exit>() {
            Some(exit) => {
                if let Some(report) = &exit.report {
                    let r = Report::json(report.clone());
                    if let Ok(bytes) = render(&r, cli.output.format) {
                        let _ = emit(&bytes, cli.output.out.as_ref());
                    }
                }
                eprintln!("gaugesim: {}", exit.message);
                ExitCode::from(exit.code)
            }
            None => {
                eprintln!("gaugesim: {err:#}");
                ExitCode::FAILURE
            }
        },
    }
}
