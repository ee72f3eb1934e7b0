//! `zspec`: JSON config in, CSV/JSON tables out.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use zspec::hgroup::build_htype;
use zspec::intertwine::isospec_compare;
use zspec::kernels::{dominant_trace, evaluate, partition, partition_eigen_sum, KernelKind, KernelParams, Method};
use zspec::verify::{self, Suite};
use zspec::zeeman::{gamma_rate, spectrum, ConstantMode, ZoneSelector};
use zspec::zones::build_zone_basis;
use zspec::Error;

const QUAD_ENV: &str = "ZSPEC_QUAD_ORDER";
/// Gauss–Hermite nodes per dimension for quadrature traces.
const DEFAULT_TRACE_NODES: usize = 8;

#[derive(Parser, Debug)]
#[command(name = "zspec", version, about = "Spectra, zones, kernels and isospectrality checks for Zeeman operators")]
struct Cli {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the table here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Derived,
    Scaled,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Wk,
    Df,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum PartitionMethod {
    ClosedForm,
    Trace,
    EigenSum,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum KernelMethod {
    ClosedForm,
    EigenSum,
}

#[derive(Args, Debug, Default)]
struct FieldArgs {
    /// Real dimension of the field block.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Gross zone index, or "global".
    #[arg(long)]
    zone: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Levels of Box_λ with multiplicities.
    Spectrum {
        #[command(flatten)]
        field: FieldArgs,
        /// Keep levels with |E| ≤ e_max.
        #[arg(long)]
        e_max: Option<f64>,
        #[arg(long)]
        include_constant: bool,
        #[arg(long, value_enum)]
        constant_mode: Option<Mode>,
    },
    /// Orthonormal basis of a gross zone, with its Gram residuals.
    Zones {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Pointwise value of a zonal or global kernel.
    Kernel {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long)]
        t: Option<f64>,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        #[arg(long, value_enum)]
        method: Option<KernelMethod>,
    },
    /// Partition function over a time grid.
    Partition {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        /// start:stop:step, inclusive.
        #[arg(long)]
        t_grid: Option<String>,
        #[arg(long, value_enum)]
        method: Option<PartitionMethod>,
    },
    /// Truncated Box_γ spectra of two groups side by side.
    Isospec {
        /// "l:a,b vs l:a,b"
        #[arg(long)]
        family: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        zgamma: Option<String>,
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Run a named verification suite.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        /// Overrides the tolerance of residual checks.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Deserialize, Debug, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct GroupSpec {
    l: usize,
    a: usize,
    b: usize,
}

#[derive(Deserialize, Debug, Clone)]
#[serde(untagged)]
enum ZoneJson {
    Index(usize),
    Name(String),
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    group: Option<GroupSpec>,
    blocks: Option<Vec<(f64, usize)>>,
    k: Option<usize>,
    lambda: Option<f64>,
    zone: Option<ZoneJson>,
    kind: Option<Kind>,
    method: Option<String>,
    t: Option<f64>,
    t_grid: Option<String>,
    x: Option<Vec<f64>>,
    y: Option<Vec<f64>>,
    e_max: Option<f64>,
    degree_max: Option<usize>,
    quad_order: Option<usize>,
    tol: Option<f64>,
    format: Option<Format>,
    include_constant: Option<bool>,
    constant_mode: Option<Mode>,
    suite: Option<String>,
    family: Option<String>,
    zgamma: Option<Vec<f64>>,
}

#[derive(Debug)]
enum Failure {
    /// Exit 1.
    Verification(String),
    /// Exit 2.
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn input<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Input(msg.into()))
}

fn load_config(path: &Path) -> Outcome<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
}

fn parse_list(s: &str, what: &str) -> Outcome<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Failure::Input(format!("{what}: cannot parse {p:?} as a number"))))
        .collect()
}

fn parse_zone(z: &ZoneJson) -> Outcome<ZoneSelector> {
    match z {
        ZoneJson::Index(a) => Ok(ZoneSelector::Gross(*a)),
        ZoneJson::Name(s) if s == "global" => Ok(ZoneSelector::Global),
        ZoneJson::Name(s) => match s.parse::<usize>() {
            Ok(a) => Ok(ZoneSelector::Gross(a)),
            Err(_) => input(format!("zone must be a non-negative integer or \"global\", got {s:?}")),
        },
    }
}

fn parse_grid(s: &str) -> Outcome<Vec<f64>> {
    let parts = parse_list(&s.replace(':', ","), "t-grid")?;
    let [start, stop, step] = parts[..] else {
        return input(format!("t-grid must be start:stop:step, got {s:?}"));
    };
    if !step.is_finite() || step <= 0.0 || stop < start || !start.is_finite() || !stop.is_finite() {
        return input(format!("t-grid {s:?} is empty or has a non-positive step"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return input(format!("t-grid {s:?} has {n} points (max 100000)"));
    }
    Ok((0..n).map(|i| start + step * i as f64).collect())
}

fn parse_group(s: &str) -> Outcome<GroupSpec> {
    let bad = || Failure::Input(format!("group must be l:a,b, got {s:?}"));
    let (l, ab) = s.trim().split_once(':').ok_or_else(bad)?;
    let (a, b) = ab.split_once(',').ok_or_else(bad)?;
    let num = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
    Ok(GroupSpec { l: num(l)?, a: num(a)?, b: num(b)? })
}

fn quad_order(cfg: &RunConfig, default: usize) -> Outcome<usize> {
    match std::env::var(QUAD_ENV) {
        Ok(v) => {
            v.trim().parse().map_err(|_| Failure::Input(format!("{QUAD_ENV} must be a positive integer, got {v:?}")))
        }
        Err(_) => Ok(cfg.quad_order.unwrap_or(default)),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Rows of numbers rendered as CSV or as a JSON array of objects.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.header.join(",");
                out.push('\n');
                for r in &self.rows {
                    out.push_str(&r.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj = self
                            .header
                            .iter()
                            .zip(r)
                            .map(|(h, v)| {
                                let val = v.parse::<f64>().map(|f| json!(f)).unwrap_or_else(|_| json!(v));
                                (h.to_string(), val)
                            })
                            .collect::<serde_json::Map<_, _>>();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                to_json(&rows)
            }
        }
    }
}

fn to_json<S: Serialize>(v: &S) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

struct Field {
    blocks: Vec<(f64, usize)>,
    zone: ZoneSelector,
}

fn zone(args: &FieldArgs, cfg: &RunConfig) -> Outcome<ZoneSelector> {
    match (&args.zone, &cfg.zone) {
        (Some(z), _) => parse_zone(&ZoneJson::Name(z.clone())),
        (None, Some(z)) => parse_zone(z),
        (None, None) => Ok(ZoneSelector::Gross(0)),
    }
}

/// Field blocks from flags or config. With neither, a single block with
/// λ = 1 and k = `k_hint` (or 2).
fn field(args: &FieldArgs, cfg: &RunConfig, k_hint: Option<usize>) -> Outcome<Field> {
    let zone = zone(args, cfg)?;
    let (k, lambda) = (args.k.or(cfg.k), args.lambda.or(cfg.lambda));
    let blocks = match (&cfg.blocks, k.is_some() || lambda.is_some()) {
        (Some(b), false) if !b.is_empty() => b.clone(),
        (Some(_), true) => return input("give either k/lambda or a \"blocks\" list, not both"),
        _ => vec![(lambda.unwrap_or(1.0), k.or(k_hint).unwrap_or(2))],
    };
    Ok(Field { blocks, zone })
}

fn single_block(f: &Field, what: &str) -> Outcome<(f64, usize)> {
    match f.blocks[..] {
        [b] => Ok(b),
        _ => input(format!("{what} takes a single field block")),
    }
}

fn kernel_kind(k: Option<Kind>, cfg: &RunConfig) -> KernelKind {
    match k.or(cfg.kind).unwrap_or(Kind::Wk) {
        Kind::Wk => KernelKind::Wk,
        Kind::Df => KernelKind::Df,
    }
}

fn config_method<M: ValueEnum>(cfg: &RunConfig) -> Outcome<Option<M>> {
    cfg.method
        .as_deref()
        .map(|s| M::from_str(s, false).map_err(|_| Failure::Input(format!("unknown method {s:?}"))))
        .transpose()
}

fn run_spectrum(
    field_args: &FieldArgs,
    e_max: Option<f64>,
    include_constant: bool,
    mode: Option<Mode>,
    cfg: &RunConfig,
) -> Outcome<Table> {
    let f = match (&cfg.group, &cfg.zgamma, field_args.k.or(cfg.k)) {
        (Some(g), Some(z), None) => {
            let space = build_htype::<f64>(g.l, g.a, g.b)?;
            if z.len() != g.l {
                return input(format!("zgamma has {} entries, the group center has dimension {}", z.len(), g.l));
            }
            Field { blocks: vec![(gamma_rate(z), space.x_dim())], zone: zone(field_args, cfg)? }
        }
        _ => field(field_args, cfg, None)?,
    };
    let (lambda, k) = single_block(&f, "spectrum")?;
    let mode = match mode.or(cfg.constant_mode).unwrap_or(Mode::Derived) {
        Mode::Derived => ConstantMode::Derived,
        Mode::Scaled => ConstantMode::Scaled,
    };
    let include = include_constant || cfg.include_constant.unwrap_or(false);
    let table = spectrum(f.zone, k, lambda, e_max.or(cfg.e_max).unwrap_or(40.0), include, mode)?;
    let opt = |v: Option<String>| v.unwrap_or_else(|| "*".into());
    let rows = table
        .lines
        .iter()
        .map(|l| {
            vec![
                num(l.e),
                l.p.to_string(),
                opt(l.upsilon.map(|v| v.to_string())),
                opt(l.l.map(|v| v.to_string())),
                opt(l.m.map(|v| v.to_string())),
                serde_json::to_value(l.mult).expect("serializable").to_string().trim_matches('"').to_string(),
            ]
        })
        .collect();
    Ok(Table { header: vec!["E", "p", "upsilon", "l", "m", "mult"], rows })
}

fn run_zones(
    field_args: &FieldArgs,
    degree: Option<usize>,
    format: Option<Format>,
    cfg: &RunConfig,
) -> Outcome<String> {
    let f = field(field_args, cfg, None)?;
    let (lambda, k) = single_block(&f, "zones")?;
    let ZoneSelector::Gross(a) = f.zone else {
        return input("zones needs a gross zone index");
    };
    let degree = degree.or(cfg.degree_max).unwrap_or(a + 4);
    let basis = build_zone_basis::<f64>(a, k, lambda, degree)?;
    let rule_degree = quad_order(cfg, 2 * degree)?;
    let gram = basis.gram_residual();
    let gram_quad = basis.gram_residual_with_rule(rule_degree)?;
    match format.or(cfg.format).unwrap_or(Format::Json) {
        Format::Json => {
            let elements: Vec<_> = basis
                .elements
                .iter()
                .map(|e| {
                    let terms: Vec<_> = e
                        .ladder
                        .terms()
                        .map(|((za, zb), c)| json!({"z": za, "zbar": zb, "re": c.re, "im": c.im}))
                        .collect();
                    json!({"alpha": e.alpha, "beta": e.beta, "terms": terms})
                })
                .collect();
            Ok(to_json(&json!({
                "k": k,
                "zone": a,
                "lambda": lambda,
                "degree_max": degree,
                "size": basis.len(),
                "gram_residual": gram,
                "gram_residual_quadrature": gram_quad,
                "quadrature_degree": rule_degree,
                "elements": elements,
            })))
        }
        Format::Csv => {
            let mut out = String::from("index,alpha,beta,holomorphic_degree\n");
            for (i, e) in basis.elements.iter().enumerate() {
                let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
                writeln!(out, "{i},{},{},{}", join(&e.alpha), join(&e.beta), e.holomorphic_degree())
                    .expect("string write");
            }
            Ok(out)
        }
    }
}

fn point(flag: &Option<String>, cfg: &Option<Vec<f64>>, what: &str) -> Outcome<Vec<f64>> {
    match (flag, cfg) {
        (Some(s), _) => parse_list(s, what),
        (None, Some(v)) => Ok(v.clone()),
        (None, None) => input(format!("missing --{what}")),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_kernel(
    field_args: &FieldArgs,
    kind: Option<Kind>,
    t: Option<f64>,
    x: &Option<String>,
    y: &Option<String>,
    method: Option<KernelMethod>,
    cfg: &RunConfig,
) -> Outcome<Table> {
    let (x, y) = (point(x, &cfg.x, "x")?, point(y, &cfg.y, "y")?);
    let f = field(field_args, cfg, Some(x.len()))?;
    let params = KernelParams::standard(&f.blocks, kernel_kind(kind, cfg), f.zone)?
        .with_constant(cfg.include_constant.unwrap_or(false))?;
    let Some(t) = t.or(cfg.t) else {
        return input("missing --t");
    };
    let method = match method.or(config_method(cfg)?).unwrap_or(KernelMethod::ClosedForm) {
        KernelMethod::ClosedForm => Method::ClosedForm,
        KernelMethod::EigenSum => Method::EigenSum,
    };
    let v = evaluate(&params, t, &x, &y, method)?;
    Ok(Table { header: vec!["t", "re", "im"], rows: vec![vec![num(t), num(v.re), num(v.im)]] })
}

fn run_partition(
    field_args: &FieldArgs,
    kind: Option<Kind>,
    grid: &Option<String>,
    method: Option<PartitionMethod>,
    cfg: &RunConfig,
) -> Outcome<Table> {
    let f = field(field_args, cfg, None)?;
    let ZoneSelector::Gross(a) = f.zone else {
        return input("the partition function is defined per gross zone; the global trace diverges");
    };
    let kind = kernel_kind(kind, cfg);
    let params =
        KernelParams::standard(&f.blocks, kind, f.zone)?.with_constant(cfg.include_constant.unwrap_or(false))?;
    let ts = match grid.as_ref().or(cfg.t_grid.as_ref()) {
        Some(g) => parse_grid(g)?,
        None => match cfg.t {
            Some(t) => vec![t],
            None => return input("missing --t-grid"),
        },
    };
    let method = method.or(config_method(cfg)?).unwrap_or(PartitionMethod::ClosedForm);
    let nodes = quad_order(cfg, DEFAULT_TRACE_NODES)?;
    let mut rows = Vec::with_capacity(ts.len());
    for t in ts {
        let z = match method {
            PartitionMethod::ClosedForm => partition(kind, a, &params, t)?,
            PartitionMethod::Trace => dominant_trace(kind, a, &params, t, nodes)?,
            PartitionMethod::EigenSum => partition_eigen_sum(kind, a, &params, t)?.value,
        };
        rows.push(vec![num(t), num(z.re), num(z.im)]);
    }
    Ok(Table { header: vec!["t", "re", "im"], rows })
}

fn run_isospec(
    family: &Option<String>,
    zgamma: &Option<String>,
    degree: Option<usize>,
    cfg: &RunConfig,
) -> Outcome<Table> {
    let Some(fam) = family.as_ref().or(cfg.family.as_ref()) else {
        return input("missing --family \"l:a,b vs l:a,b\"");
    };
    let Some((ga, gb)) = fam.split_once(" vs ") else {
        return input(format!("family must read \"l:a,b vs l:a,b\", got {fam:?}"));
    };
    let (ga, gb) = (parse_group(ga)?, parse_group(gb)?);
    let z = point(zgamma, &cfg.zgamma, "zgamma")?;
    let degree = degree.or(cfg.degree_max).unwrap_or(6);
    let sa = build_htype::<f64>(ga.l, ga.a, ga.b)?;
    let sb = build_htype::<f64>(gb.l, gb.a, gb.b)?;
    let rep = isospec_compare(&sa, &z, &sb, &z, degree)?;
    let rows = rep
        .eigs_a
        .iter()
        .zip(&rep.eigs_b)
        .enumerate()
        .map(|(i, (a, b))| vec![i.to_string(), num(*a), num(*b), num((a - b).abs())])
        .collect();
    Ok(Table { header: vec!["index", "eig_A", "eig_B", "gap"], rows })
}

fn run_verify(
    suite: &Option<String>,
    tol: Option<f64>,
    format: Option<Format>,
    cfg: &RunConfig,
) -> Outcome<(String, bool)> {
    let name = suite.as_ref().or(cfg.suite.as_ref()).map(String::as_str).unwrap_or("all");
    let suite: Suite = name.parse()?;
    let tol = tol.or(cfg.tol);
    if let Some(t) = tol {
        if t.is_nan() || t <= 0.0 {
            return input(format!("--tol must be positive, got {t}"));
        }
    }
    let reports = verify::run(suite, tol);
    let passed = reports.iter().all(|r| r.passed());
    let text = match format.or(cfg.format).unwrap_or(Format::Csv) {
        Format::Json => to_json(&reports),
        Format::Csv => {
            let mut out = String::new();
            for r in &reports {
                writeln!(out, "== {} ==", r.suite).expect("string write");
                for c in &r.checks {
                    writeln!(out, "{c}").expect("string write");
                }
                for v in &r.verdicts {
                    writeln!(out, "verdict: {v}").expect("string write");
                }
            }
            writeln!(out, "{}", if passed { "PASS" } else { "FAIL" }).expect("string write");
            out
        }
    };
    Ok((text, passed))
}

fn run(cli: &Cli) -> Outcome<String> {
    let cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let format = cli.format.or(cfg.format).unwrap_or(Format::Csv);
    match &cli.command {
        Command::Spectrum { field, e_max, include_constant, constant_mode } => {
            Ok(run_spectrum(field, *e_max, *include_constant, *constant_mode, &cfg)?.render(format))
        }
        Command::Zones { field, degree } => run_zones(field, *degree, cli.format, &cfg),
        Command::Kernel { field, kind, t, x, y, method } => {
            Ok(run_kernel(field, *kind, *t, x, y, *method, &cfg)?.render(format))
        }
        Command::Partition { field, kind, t_grid, method } => {
            Ok(run_partition(field, *kind, t_grid, *method, &cfg)?.render(format))
        }
        Command::Isospec { family, zgamma, degree } => Ok(run_isospec(family, zgamma, *degree, &cfg)?.render(format)),
        Command::Verify { suite, tol } => {
            let (text, passed) = run_verify(suite, *tol, cli.format, &cfg)?;
            if passed {
                Ok(text)
            } else {
                emit(cli.out.as_deref(), &text)?;
                Err(Failure::Verification("verification failed".into()))
            }
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Outcome<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Input(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|text| emit(cli.out.as_deref(), &text)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("zspec: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("zspec: error: {msg}");
            ExitCode::from(2)
        }
    }
}
