//! Command-line front end: argument grammar, dispatch and report emission.

pub mod config;
pub mod io;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use outspace::bundle::{
    bundle_ball, mj_sardar_sampler, prop81_constants, properness_table, BundleSpec, SamplerConfig,
};
use outspace::flaring::{
    cayley_ball, conjugacy_flaring_check, growth_fit, out_order, screen_atoroidal, SubgroupSpec, DEFAULT_BALL_CAP,
    NON_CERTIFYING, ORDER_CAP,
};
use outspace::fold::{standard_geodesic, StandardGeodesic, StepPolicy};
use outspace::lipschitz::{candidates, lipschitz_distance, Shape};
use outspace::marked::MarkedGraph;
use outspace::profile::{loop_profile, max_illegal_turns, LoopRecord};
use outspace::rational::{fmt_q, parse_q};
use outspace::{factors, CyclicWord, Error, Word, Q};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::io::{automorphism_text, graph_json, parse_automorphism, parse_graph, parse_group};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Global ceiling on work budgets (events, ball nodes).
pub const BUDGET_VAR: &str = "OUTSPACE_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "outspace", version, about = "Outer space, folding paths and flaring experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check that a graph file is a marked core graph.
    Validate { graph: PathBuf },
    /// Lipschitz distance between two marked graphs.
    Distance { from: PathBuf, to: PathBuf },
    /// Candidate loops of a marked graph with their lengths.
    Candidates { graph: PathBuf },
    /// Standard geodesic between two marked graphs, as a JSON-lines event log.
    Fold(FoldArgs),
    /// Free factor projection of a marked graph.
    Project { graph: PathBuf },
    /// Automorphism utilities.
    Aut {
        #[command(subcommand)]
        op: AutOp,
    },
    /// Flaring checks for subgroups of Out.
    Flare {
        #[command(subcommand)]
        op: FlareOp,
    },
    /// Cayley-graph bundle experiments.
    Bundle {
        #[command(subcommand)]
        op: BundleOp,
    },
    /// Run a batch experiment from a TOML config.
    Report {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct FoldArgs {
    pub from: PathBuf,
    pub to: PathBuf,
    /// Comma-separated conjugacy classes to follow along the path.
    #[arg(long, value_delimiter = ',')]
    pub track: Vec<String>,
    #[arg(long)]
    pub max_step: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub event_cap: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Length profiles of tracked classes as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum AutOp {
    /// Inverse automorphism.
    Invert { phi: String },
    /// `phi ∘ psi`.
    Compose { phi: String, psi: String },
    /// Whether two automorphisms agree in Out, with a conjugator.
    OutEqual { phi: String, psi: String },
    /// Image of a word.
    Apply { phi: String, word: String },
    /// Order in Out, up to a cap.
    Order { phi: String },
    /// Heuristic search for periodic conjugacy classes.
    Screen {
        phi: String,
        #[arg(long, default_value_t = 6)]
        len_cap: usize,
        #[arg(long, default_value_t = 6)]
        pow_cap: usize,
    },
    /// Exponential growth rate of a class under iteration.
    Growth {
        phi: String,
        alpha: String,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum FlareOp {
    /// Census of the conjugacy flaring inequality over a Cayley ball.
    Conjugacy {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        lambda: String,
        #[arg(long = "M")]
        m: usize,
        #[arg(long)]
        radius: usize,
        #[arg(long)]
        alpha_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum BundleOp {
    /// Sample canonical lifts and measure fiber separation.
    Flare {
        #[arg(long)]
        group: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long = "M")]
        m: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Fixed central fiber differences, comma separated.
        #[arg(long, value_delimiter = ',')]
        central: Vec<String>,
        #[arg(long, default_value = "1")]
        lambda_target: String,
        /// Radius of the bundle ball used to measure properness.
        #[arg(long, default_value_t = 3)]
        ball_radius: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flaring constants for canonical lifts from conjugacy flaring data.
    Constants {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        lambda: String,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Checks the conjugation identity for every lift.
    Check {
        #[arg(long)]
        group: PathBuf,
    },
}

/// Failure of a command, mapped to an exit status.
#[derive(Debug)]
pub enum Failure {
    Domain(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Domain(e) if e.is_budget() => EXIT_BUDGET,
            _ => EXIT_DOMAIN,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Failure::Domain(e) => json!({"error": e.kind(), "message": e.to_string()}),
            Failure::Io(m) => json!({"error": "Io", "message": m}),
        }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (program name first), runs, and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = if code == EXIT_USAGE { format!("{}\n{}", e.render(), Cli::usage_help()) } else { e.render().to_string() };
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "{}", f.to_json());
            f.exit_code()
        }
    }
}

impl Cli {
    fn usage_help() -> String {
        use clap::CommandFactory;
        Cli::command().render_help().to_string()
    }
}

fn read(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CmdResult<()> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> CmdResult<MarkedGraph> {
    Ok(parse_graph(&read(path)?)?)
}

fn load_group(path: &Path) -> CmdResult<SubgroupSpec> {
    Ok(parse_group(&read(path)?)?)
}

fn q_arg(s: &str) -> CmdResult<Q> {
    Ok(parse_q(s)?)
}

/// Logs are presentation only; six decimals keeps output stable.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// The configured cap, lowered by the environment ceiling when set.
pub fn budget(cap: usize) -> CmdResult<usize> {
    match std::env::var(BUDGET_VAR) {
        Ok(v) => {
            let ceiling: usize = v
                .trim()
                .parse()
                .map_err(|_| Failure::Domain(Error::Parse(format!("{BUDGET_VAR} must be a positive integer"))))?;
            if ceiling == 0 {
                return Err(Failure::Domain(Error::Parse(format!("{BUDGET_VAR} must be a positive integer"))));
            }
            Ok(cap.min(ceiling))
        }
        Err(_) => Ok(cap),
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, value: &Value) -> CmdResult<()> {
    let text = serde_json::to_string(value).expect("values serialize");
    match path {
        Some(p) => write_file(p, &format!("{text}\n")),
        None => writeln!(out, "{text}").map_err(|e| Failure::Io(e.to_string())),
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CmdResult<()> {
    match cmd {
        Command::Validate { graph } => {
            let g = load_graph(&graph)?;
            emit(out, None, &validate_report(&g))
        }
        Command::Distance { from, to } => {
            let (g, h) = (load_graph(&from)?, load_graph(&to)?);
            emit(out, None, &serde_json::to_value(distance_report(&g, &h)?).unwrap())
        }
        Command::Candidates { graph } => {
            let g = load_graph(&graph)?;
            emit(out, None, &candidates_report(&g))
        }
        Command::Fold(args) => fold_command(&args, out),
        Command::Project { graph } => {
            let g = load_graph(&graph)?;
            emit(out, None, &project_report(&g)?)
        }
        Command::Aut { op } => emit(out, None, &aut_command(op)?),
        Command::Flare { op: FlareOp::Conjugacy { group, lambda, m, radius, alpha_len, out: path } } => {
            let spec = load_group(&group)?;
            let v = conjugacy_report(&spec, &q_arg(&lambda)?, m, radius, alpha_len)?;
            emit(out, path.as_deref(), &v)
        }
        Command::Bundle { op } => bundle_command(op, out),
        Command::Report { config, out: path } => {
            let cfg = ExperimentConfig::parse(&read(&config)?)?;
            let dir = config.parent().map(Path::to_path_buf).unwrap_or_default();
            let (v, csv) = batch_report(&cfg, &dir)?;
            if let Some(c) = &cfg.outputs.csv {
                write_file(&dir.join(c), &csv)?;
            }
            let target = path.or_else(|| cfg.outputs.json.as_ref().map(|p| dir.join(p)));
            emit(out, target.as_deref(), &v)
        }
    }
}

pub fn validate_report(g: &MarkedGraph) -> Value {
    json!({
        "valid": true,
        "rank": g.rank(),
        "vertices": g.graph().vertex_count(),
        "edges": g.graph().edge_count(),
        "volume": fmt_q(&g.volume()),
        "normalized": g.is_normalized(),
    })
}

#[derive(Serialize, Debug, PartialEq)]
pub struct DistanceReport {
    pub ratio: String,
    pub log: f64,
    pub witness: String,
    pub reverse_ratio: String,
}

pub fn distance_report(g: &MarkedGraph, h: &MarkedGraph) -> CmdResult<DistanceReport> {
    let d = lipschitz_distance(g, h)?;
    let back = lipschitz_distance(h, g)?;
    Ok(DistanceReport {
        ratio: fmt_q(&d.ratio.ratio),
        log: round6(d.log()),
        witness: d.witness.to_text(),
        reverse_ratio: fmt_q(&back.ratio.ratio),
    })
}

fn shape_name(s: Shape) -> &'static str {
    match s {
        Shape::Circle => "circle",
        Shape::FigureEight => "figure-eight",
        Shape::Barbell => "barbell",
    }
}

pub fn candidates_report(g: &MarkedGraph) -> Value {
    let cs = candidates(g);
    let rows: Vec<Value> = cs
        .iter()
        .map(|c| json!({"word": c.word.to_text(), "shape": shape_name(c.shape), "length": fmt_q(&g.graph().path_length(&c.path))}))
        .collect();
    json!({"count": rows.len(), "candidates": rows})
}

fn parse_classes(g: &MarkedGraph, texts: &[String]) -> CmdResult<Vec<CyclicWord>> {
    let basis = g.basis();
    texts
        .iter()
        .filter(|t| !t.trim().is_empty())
        .map(|t| Ok(CyclicWord::parse(&basis, t.trim())?))
        .collect()
}

/// Event log lines and CSV profile rows for a standard geodesic.
pub fn fold_log(geo: &StandardGeodesic, classes: &[CyclicWord]) -> CmdResult<(Vec<Value>, String)> {
    let path = &geo.folding;
    let profiles: Vec<Vec<LoopRecord>> = classes.iter().map(|c| loop_profile(c, path)).collect::<Result<_, _>>()?;
    let mut lines = vec![json!({
        "kind": "rescaling",
        "ratio": fmt_q(&geo.rescaling.ratio),
        "log": round6(outspace::rational::ln_q(&geo.rescaling.ratio)),
        "max_illegal_turns": max_illegal_turns(path.graph(0).rank()),
    })];
    for (i, ev) in path.events.iter().enumerate() {
        let tracked: Vec<Value> = classes
            .iter()
            .zip(&profiles)
            .map(|(c, p)| {
                let mut v = serde_json::to_value(&p[i]).unwrap();
                v["class"] = json!(c.to_text());
                v
            })
            .collect();
        lines.push(json!({
            "kind": "event",
            "index": i,
            "time": fmt_q(&ev.time.ratio),
            "log": round6(ev.time.log()),
            "m": ev.illegality(),
            "stretch": fmt_q(&ev.stretch),
            "graph": graph_json(ev.graph()),
            "tracked": tracked,
        }));
    }
    lines.push(json!({
        "kind": "summary",
        "events": path.len(),
        "fold_ratio": fmt_q(&path.total().ratio),
        "total_ratio": fmt_q(&geo.total()),
        "log": round6(outspace::rational::ln_q(&geo.total())),
    }));
    let mut csv = String::from("class,event,time,log_time,length,illegal_turns,leg,ilg,ntr\n");
    for (c, p) in classes.iter().zip(&profiles) {
        for (i, r) in p.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{},{:.6},{},{},{},{},{}\n",
                c.to_text(),
                i,
                fmt_q(&r.time.ratio),
                r.time.log(),
                fmt_q(&r.length),
                r.illegal_turns,
                fmt_q(&r.leg),
                fmt_q(&r.ilg),
                fmt_q(&r.ntr)
            ));
        }
    }
    Ok((lines, csv))
}

fn fold_command(args: &FoldArgs, out: &mut dyn Write) -> CmdResult<()> {
    let (g, h) = (load_graph(&args.from)?, load_graph(&args.to)?);
    let policy = StepPolicy {
        max_step: args.max_step.as_deref().map(q_arg).transpose()?,
        event_cap: budget(args.event_cap)?,
    };
    let geo = standard_geodesic(&g, &h, &policy)?;
    let classes = parse_classes(&g, &args.track)?;
    let (lines, csv) = fold_log(&geo, &classes)?;
    let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
    match &args.out {
        Some(p) => write_file(p, &text)?,
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string()))?,
    }
    if let Some(p) = &args.csv {
        write_file(p, &csv)?;
    }
    Ok(())
}

pub fn project_report(g: &MarkedGraph) -> CmdResult<Value> {
    let fs = factors::project_factors(g)?;
    let rows: Vec<Value> =
        fs.iter().map(|f| json!({"generators": f.to_texts(), "rank": f.rank(), "hash": f.key()})).collect();
    Ok(json!({"rank": g.rank(), "count": rows.len(), "factors": rows}))
}

fn aut_command(op: AutOp) -> CmdResult<Value> {
    Ok(match op {
        AutOp::Invert { phi } => {
            let a = parse_automorphism(&phi)?;
            json!({"inverse": automorphism_text(&a.invert()?)})
        }
        AutOp::Compose { phi, psi } => {
            let (a, b) = (parse_automorphism(&phi)?, parse_automorphism(&psi)?);
            if a.basis() != b.basis() {
                return Err(Error::RankMismatch(a.rank(), b.rank()).into());
            }
            json!({"composite": automorphism_text(&a.compose(&b))})
        }
        AutOp::OutEqual { phi, psi } => {
            let (a, b) = (parse_automorphism(&phi)?, parse_automorphism(&psi)?);
            if a.basis() != b.basis() {
                return Err(Error::RankMismatch(a.rank(), b.rank()).into());
            }
            match a.out_equal(&b)? {
                Some(w) => json!({"equal": true, "witness": w.to_text()}),
                None => json!({"equal": false}),
            }
        }
        AutOp::Apply { phi, word } => {
            let a = parse_automorphism(&phi)?;
            let w = Word::parse(&a.basis(), &word)?;
            json!({"image": a.apply(&w).to_text()})
        }
        AutOp::Order { phi } => {
            let a = parse_automorphism(&phi)?;
            json!({"order": out_order(&a, ORDER_CAP)?, "cap": ORDER_CAP})
        }
        AutOp::Screen { phi, len_cap, pow_cap } => {
            let a = parse_automorphism(&phi)?;
            let mut v = serde_json::to_value(screen_atoroidal(&a, len_cap, pow_cap)?).unwrap();
            v["banner"] = json!(NON_CERTIFYING);
            v
        }
        AutOp::Growth { phi, alpha, n_max } => {
            let a = parse_automorphism(&phi)?;
            let c = CyclicWord::parse(&a.basis(), &alpha)?;
            serde_json::to_value(growth_fit(&a, &c, n_max)?).unwrap()
        }
    })
}

pub fn conjugacy_report(spec: &SubgroupSpec, lambda: &Q, m: usize, radius: usize, alpha_len: usize) -> CmdResult<Value> {
    // probe the ball against the budget before the census builds it
    cayley_ball(spec, radius, budget(DEFAULT_BALL_CAP)?)?;
    let rep = conjugacy_flaring_check(spec, lambda, m, radius, alpha_len)?;
    let mut v = serde_json::to_value(&rep).unwrap();
    v["generators"] = json!(spec
        .names
        .iter()
        .zip(&spec.generators)
        .map(|(n, g)| json!({"name": n, "images": automorphism_text(g)}))
        .collect::<Vec<_>>());
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
pub fn bundle_report(
    spec: SubgroupSpec,
    k: usize,
    n: usize,
    m: usize,
    samples: usize,
    seed: u64,
    central: &[String],
    lambda_target: &Q,
    ball_radius: usize,
) -> CmdResult<Value> {
    let basis = spec.basis;
    let central = central
        .iter()
        .filter(|t| !t.trim().is_empty())
        .map(|t| Word::parse(&basis, t.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let bspec = BundleSpec::new(spec, (2 * n).max(ball_radius))?;
    let ball = bundle_ball(&bspec, ball_radius, budget(DEFAULT_BALL_CAP)?)?;
    let cfg = SamplerConfig { k, n, m, samples, seed, lambda_target: lambda_target.clone(), central };
    let rep = mj_sardar_sampler(&bspec, &cfg)?;
    let mut v = serde_json::to_value(&rep).unwrap();
    v["min_lambda_log"] = json!(round6(outspace::rational::ln_q(&rep.min_lambda)));
    v["properness"] = json!(properness_table(&ball));
    v["bundle_ball_radius"] = json!(ball_radius);
    v["lift_family"] = json!("canonical lifts only; non-canonical qi-lifts are not sampled");
    Ok(v)
}

fn bundle_command(op: BundleOp, out: &mut dyn Write) -> CmdResult<()> {
    match op {
        BundleOp::Flare { group, k, n, m, samples, seed, central, lambda_target, ball_radius, out: path } => {
            let spec = load_group(&group)?;
            let v = bundle_report(spec, k, n, m, samples, seed, &central, &q_arg(&lambda_target)?, ball_radius)?;
            emit(out, path.as_deref(), &v)
        }
        BundleOp::Constants { group, lambda, n, k } => {
            let spec = load_group(&group)?;
            let radius = n + 1 + k * n + k;
            let bspec = BundleSpec::new(spec, radius)?;
            let ball = bundle_ball(&bspec, radius, budget(DEFAULT_BALL_CAP)?)?;
            let c = prop81_constants(&q_arg(&lambda)?, n, k, &ball)?;
            let mut v = serde_json::to_value(&c).unwrap();
            v["properness"] = json!(properness_table(&ball));
            emit(out, None, &v)
        }
        BundleOp::Check { group } => {
            let spec = load_group(&group)?;
            let bspec = BundleSpec::new(spec, 1)?;
            emit(out, None, &json!({"conjugation_identity": bspec.check_conjugation()?}))
        }
    }
}

/// Runs every experiment the config enables; returns the JSON report and a
/// CSV of tracked length profiles.
pub fn batch_report(cfg: &ExperimentConfig, dir: &Path) -> CmdResult<(Value, String)> {
    let b = &cfg.budgets;
    let graphs: Vec<MarkedGraph> = cfg.inputs.graphs.iter().map(|p| load_graph(&dir.join(p))).collect::<CmdResult<_>>()?;
    let policy = StepPolicy { max_step: cfg.overrides.max_step.clone(), event_cap: budget(b.event_cap)? };
    let mut pairs = Vec::new();
    let mut csv = String::new();
    for (i, w) in graphs.windows(2).enumerate() {
        let d = distance_report(&w[0], &w[1])?;
        let geo = standard_geodesic(&w[0], &w[1], &policy)?;
        let classes = parse_classes(&w[0], &cfg.inputs.track)?;
        let (lines, table) = fold_log(&geo, &classes)?;
        if csv.is_empty() {
            csv.push_str(&format!("pair,{}\n", table.lines().next().unwrap_or("")));
        }
        for row in table.lines().skip(1) {
            csv.push_str(&format!("{i},{row}\n"));
        }
        pairs.push(json!({"pair": i, "distance": d, "fold": lines.last().cloned()}));
    }
    let mut report = json!({
        "seed": cfg.seed,
        "config": serde_json::to_value(cfg).unwrap(),
        "pairs": pairs,
    });
    if let Some(g) = &cfg.inputs.group {
        let spec = load_group(&dir.join(g))?;
        let lambda = cfg.overrides.lambda.clone().unwrap_or_else(|| Q::from_integer(2.into()));
        let m = cfg.overrides.m.unwrap_or(1);
        report["flare"] = conjugacy_report(&spec, &lambda, m, b.word_radius, b.alpha_len)?;
        let one = Q::from_integer(1.into());
        report["bundle"] = bundle_report(spec, 1, b.bundle_n, m, b.samples, cfg.seed, &[], &one, 3)?;
    }
    Ok((report, csv))
}
