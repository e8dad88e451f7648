//! `ropewalk`: thickness, ropelength, strut sets and tightening of
//! polygonal knots and links from the command line.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ropewalk::contactmap::{build_contact_plot, emit_svg, Style};
use ropewalk::formats::{read_link, read_vect, step_log_row, write_link, write_struts_csv, STEP_LOG_HEADER};
use ropewalk::seeds::SeedSpec;
use ropewalk::smoothing::smooth_ropelength_bound;
use ropewalk::solver::{contact_forces, tighten_with, StepReport, TightenConfig};
use ropewalk::thickness::{strut_set, thickness, Governing, ThicknessReport, DEFAULT_ACTIVE_TOL};
use ropewalk::{FormatError, PolyLink};

const EXIT_USAGE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "ropewalk", version, about = "Thickness, ropelength and tightening of polygonal knots and links")]
struct Cli {
    /// Worker threads for parallel distance evaluation.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report length, thickness, ropelength and contact counts.
    Info {
        link: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ACTIVE_TOL)]
        delta: f64,
        #[arg(long)]
        json: bool,
    },
    /// Minimize length at fixed thickness.
    Tighten(TightenArgs),
    /// Write the strut set with contact forces as CSV.
    Struts {
        link: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ACTIVE_TOL)]
        delta: f64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the self-contact plot as SVG.
    Contactmap {
        link: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Style file; falls back to $ROPEWALK_STYLE, then built-in defaults.
        #[arg(long)]
        style: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ACTIVE_TOL)]
        delta: f64,
    },
    /// Print the polygonal ropelength and the rounded-corner upper bound.
    Smoothbound {
        link: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Tighten the validation links and compare with their known minima.
    Bench {
        /// Hopf link only.
        #[arg(long)]
        quick: bool,
        /// Include the Borromean rings (slow).
        #[arg(long)]
        borromean: bool,
        #[arg(long, default_value_t = 20_000)]
        max_steps: usize,
    },
}

#[derive(Args)]
struct TightenArgs {
    /// Starting link file (POLYLINK or .vect).
    link: Option<PathBuf>,
    /// Generated start instead of a file, e.g. hopf:108 or torus:2:3:400.
    #[arg(long, conflicts_with = "link")]
    seed: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = DEFAULT_ACTIVE_TOL)]
    delta: f64,
    #[arg(long, default_value_t = 20_000)]
    max_steps: usize,
    #[arg(long, default_value_t = 1e-4)]
    grad_tol: f64,
    #[arg(long, default_value_t = 50)]
    resample_every: usize,
    /// Accepted steps over which progress is measured for the plateau stop (0 disables).
    #[arg(long, default_value_t = 200)]
    plateau_window: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Step-log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
    fn input(message: impl ToString) -> Self {
        Failure { code: EXIT_INPUT, message: message.to_string() }
    }
    fn numeric(message: impl ToString) -> Self {
        Failure { code: EXIT_NUMERIC, message: message.to_string() }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match cli.command {
        Command::Info { link, delta, json } => cmd_info(&link, delta, json),
        Command::Tighten(args) => cmd_tighten(&args),
        Command::Struts { link, delta, out } => cmd_struts(&link, delta, out.as_deref()),
        Command::Contactmap { link, out, style, delta } => cmd_contactmap(&link, &out, style.as_deref(), delta),
        Command::Smoothbound { link, json } => cmd_smoothbound(&link, json),
        Command::Bench { quick, borromean, max_steps } => cmd_bench(quick, borromean, max_steps),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<PolyLink, Failure> {
    match fs::metadata(path) {
        Ok(m) if m.len() == 0 => return Err(Failure::usage(format!("{}: empty file", path.display()))),
        Err(e) => return Err(Failure::usage(format!("{}: {e}", path.display()))),
        Ok(_) => {}
    }
    let vect = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("vect"));
    let link = if vect { read_vect(path) } else { read_link(path) };
    link.map_err(|e| match e {
        FormatError::Io { .. } => Failure::usage(e.to_string()),
        other => Failure::input(format!("{}: {other}", path.display())),
    })
}

fn check_delta(delta: f64) -> Outcome {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage("--delta must be positive"))
    }
}

fn measure(link: &PolyLink) -> Result<ThicknessReport, Failure> {
    thickness(link).map_err(Failure::numeric)
}

#[derive(Serialize)]
struct GoverningJson {
    kind: &'static str,
    comp: usize,
    index: usize,
    other_comp: Option<usize>,
    other_index: Option<usize>,
}

#[derive(Serialize)]
struct InfoJson {
    components: usize,
    vertices: usize,
    total_length: f64,
    pthi: f64,
    prop: f64,
    governing: GoverningJson,
    min_minrad: f64,
    delta: f64,
    struts: usize,
    intra_component_struts: usize,
}

fn governing_json(g: &Governing) -> GoverningJson {
    match *g {
        Governing::Kink { comp, vertex } => {
            GoverningJson { kind: "kink", comp, index: vertex, other_comp: None, other_index: None }
        }
        Governing::Strut(s) => GoverningJson {
            kind: "strut",
            comp: s.a.comp,
            index: s.a.edge,
            other_comp: Some(s.b.comp),
            other_index: Some(s.b.edge),
        },
    }
}

fn describe_governing(g: &Governing) -> String {
    match g {
        Governing::Kink { comp, vertex } => format!("kink at vertex ({comp},{vertex})"),
        Governing::Strut(s) => format!("strut ({},{})-({},{})", s.a.comp, s.a.edge, s.b.comp, s.b.edge),
    }
}

fn cmd_info(path: &Path, delta: f64, json: bool) -> Outcome {
    check_delta(delta)?;
    let link = load(path)?;
    let report = measure(&link)?;
    let struts = strut_set(&link, &report, delta);
    let intra = struts.iter().filter(|s| s.is_intra_component()).count();
    if json {
        let info = InfoJson {
            components: link.num_components(),
            vertices: link.num_vertices(),
            total_length: report.total_length,
            pthi: report.pthi,
            prop: report.prop,
            governing: governing_json(&report.governing),
            min_minrad: report.min_minrad,
            delta,
            struts: struts.len(),
            intra_component_struts: intra,
        };
        println!("{}", serde_json::to_string_pretty(&info).map_err(Failure::numeric)?);
    } else {
        println!("components  {}", link.num_components());
        println!("vertices    {}", link.num_vertices());
        println!("length      {}", report.total_length);
        println!("PThi        {}", report.pthi);
        println!("PRop        {:.4}", report.prop);
        println!("governed by {}", describe_governing(&report.governing));
        println!("min MinRad  {}", report.min_minrad);
        println!("struts      {} ({} intra-component) at delta {:e}", struts.len(), intra, delta);
    }
    Ok(())
}

fn tighten_config(args: &TightenArgs) -> TightenConfig {
    TightenConfig {
        active_tol: args.delta,
        max_steps: args.max_steps,
        grad_tol: args.grad_tol,
        resample_every: args.resample_every,
        plateau_window: args.plateau_window,
        ..TightenConfig::with_tau(args.tau)
    }
}

fn create(path: &Path) -> Result<fs::File, Failure> {
    fs::File::create(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_tighten(args: &TightenArgs) -> Outcome {
    let seed = match (&args.link, &args.seed) {
        (Some(p), None) => load(p)?,
        (None, Some(s)) => {
            let spec: SeedSpec = s.parse().map_err(|e: FormatError| Failure::usage(e.to_string()))?;
            spec.build().map_err(Failure::input)?
        }
        _ => return Err(Failure::usage("give either a link file or --seed")),
    };
    let cfg = tighten_config(args);
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let mut log = match &args.log {
        Some(p) => {
            let mut f = create(p)?;
            writeln!(f, "{STEP_LOG_HEADER}").map_err(Failure::numeric)?;
            Some((f, p.clone()))
        }
        None => None,
    };
    let mut log_error = None;
    let result = tighten_with(&seed, &cfg, |r: &StepReport, _| {
        if let Some((f, p)) = log.as_mut() {
            if let Err(e) = writeln!(f, "{}", step_log_row(r)) {
                log_error.get_or_insert(format!("{}: {e}", p.display()));
            }
        }
    })
    .map_err(Failure::numeric)?;
    if let Some(e) = log_error {
        return Err(Failure::usage(e));
    }
    if let Some(out) = &args.out {
        write_link(out, &result.link).map_err(|e| Failure::usage(e.to_string()))?;
    }
    let bound = smooth_ropelength_bound(&result.link).map_err(Failure::numeric)?;
    let accepted = result.steps.iter().filter(|s| s.accepted).count();
    println!("steps       {} ({} accepted), stopped: {:?}", result.steps.len(), accepted, result.stop);
    println!("length      {}", result.report.total_length);
    println!("PThi        {}", result.report.pthi);
    println!("PRop        {:.4}", result.report.prop);
    println!("smooth Rop  {:.4}", bound);
    println!("struts      {} active", result.active.n_struts());
    Ok(())
}

fn cmd_struts(path: &Path, delta: f64, out: Option<&Path>) -> Outcome {
    check_delta(delta)?;
    let link = load(path)?;
    let (_, active) = contact_forces(&link, delta).map_err(Failure::numeric)?;
    let struts = active.struts();
    match out {
        Some(p) => write_struts_csv(p, &struts).map_err(|e| Failure::usage(e.to_string()))?,
        None => print!("{}", ropewalk::formats::struts_to_csv(&struts)),
    }
    Ok(())
}

fn cmd_contactmap(path: &Path, out: &Path, style: Option<&Path>, delta: f64) -> Outcome {
    check_delta(delta)?;
    let style = Style::resolve(style).map_err(Failure::input)?;
    let link = load(path)?;
    let (_, active) = contact_forces(&link, delta).map_err(Failure::numeric)?;
    let plot = build_contact_plot(&link, &active.struts()).map_err(Failure::numeric)?;
    fs::write(out, emit_svg(&plot, &style)).map_err(|e| Failure::usage(format!("{}: {e}", out.display())))?;
    println!("{} boxes written to {}", plot.boxes.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct BoundJson {
    prop: f64,
    smooth_bound: f64,
}

fn cmd_smoothbound(path: &Path, json: bool) -> Outcome {
    let link = load(path)?;
    let report = measure(&link)?;
    let bound = smooth_ropelength_bound(&link).map_err(Failure::numeric)?;
    if json {
        let j = BoundJson { prop: report.prop, smooth_bound: bound };
        println!("{}", serde_json::to_string_pretty(&j).map_err(Failure::numeric)?);
    } else {
        println!("PRop        {:.4}", report.prop);
        println!("smooth Rop  {:.4}", bound);
    }
    Ok(())
}

struct BenchCase {
    name: &'static str,
    seed: &'static str,
    known: f64,
    known_label: &'static str,
    limit: f64,
}

fn cmd_bench(quick: bool, borromean: bool, max_steps: usize) -> Outcome {
    let pi = std::f64::consts::PI;
    let mut cases = vec![BenchCase { name: "Hopf", seed: "hopf:108", known: 8.0 * pi, known_label: "8π", limit: 25.26 }];
    if !quick {
        cases.push(BenchCase { name: "chain", seed: "chain:128", known: 12.0 * pi + 4.0, known_label: "12π+4", limit: 41.92 });
    }
    if borromean {
        cases.push(BenchCase { name: "Borromean", seed: "borromean:210", known: 58.006, known_label: "58.006", limit: 58.32 });
    }
    println!("{:<10} {:>6} {:>10} {:>10} {:>10} {:>8} {:>8} {:>8}", "link", "edges", "PRop", "bound", "known", "rel.err", "time", "status");
    let mut missed = Vec::new();
    for case in &cases {
        let spec: SeedSpec = case.seed.parse().map_err(Failure::input)?;
        let seed = spec.build().map_err(Failure::input)?;
        let cfg = TightenConfig { max_steps, ..TightenConfig::default() };
        let start = Instant::now();
        let result = tighten_with(&seed, &cfg, |_, _| {}).map_err(Failure::numeric)?;
        let bound = smooth_ropelength_bound(&result.link).map_err(Failure::numeric)?;
        let prop = result.report.prop;
        let ok = prop <= case.limit && bound <= prop;
        if !ok {
            missed.push(case.name);
        }
        println!(
            "{:<10} {:>6} {:>10.4} {:>10.4} {:>10} {:>7.3}% {:>7.0}s {:>8}",
            case.name,
            result.link.num_edges(),
            prop,
            bound,
            case.known_label,
            100.0 * (prop - case.known) / case.known,
            start.elapsed().as_secs_f64(),
            if ok { "ok" } else { "MISSED" }
        );
    }
    if missed.is_empty() {
        Ok(())
    } else {
        Err(Failure::numeric(format!("tolerance missed for {}", missed.join(", "))))
    }
}
