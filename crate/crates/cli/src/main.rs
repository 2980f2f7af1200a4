//! Batch front end for the measure library.
//!
//! Every command prints exact values next to decimal approximations and
//! exits with a code that scripts can branch on: 0 for success, 2 when an
//! input fails to parse, 3 when an input violates an invariant, 4 when a
//! computation refuses its combinatorial budget, and 5 when a threshold
//! search ends without a witness.  Output is deterministic byte for byte;
//! the only exception is the generation timestamp in written `.ctf` files,
//! and `--no-timestamp` removes it.

use clap::{Parser, Subcommand};
use hmeas::{
    canonical_mask, cof_source, davies_search, dimension_bracket, full_source,
    hausdorff_fin_mask, hausdorff_fin_source, hull_source, join_sources, lebesgue_fin_tree,
    length_schedule, min_cover, parse_ctf, parse_mask, premeasure_profile, singleton_source,
    write_ctf, zero_source, CoverError, CtfError, DaviesError, EnumerationTrace, Frontier,
    GadgetError, MaskError, SIndex, SouslinScheme, SourceError, TreeSource, ValidationError,
};
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(
    name = "hmeas",
    version,
    about = "Exact s-dimensional pre-measures of tree-represented subsets of Cantor space"
)]
struct Cli {
    /// Decimal digits printed next to exact values.
    #[arg(long, global = true, default_value_t = 12)]
    digits: usize,

    /// Omit the generation timestamp comment from written .ctf files.
    #[arg(long, global = true)]
    no_timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact cover weight of a stored frontier, with the witness cover.
    Premeasure {
        /// Path to a .ctf frontier file.
        file: PathBuf,
        /// Resolution: covers may only use nodes of at least this length.
        #[arg(long)]
        n: usize,
        /// Dimension parameter a/b in (0, 1).
        #[arg(long)]
        s: SIndex,
        /// Measure the hull of the stored frontier at this depth instead.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Cover weights of a source's levels from the resolution down to a
    /// depth, as CSV.
    Profile {
        #[arg(long)]
        source: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: SIndex,
        #[arg(long)]
        depth: usize,
    },
    /// Bracket where a source's cover weight crosses 1 on a grid of s
    /// values.
    Dimension {
        #[arg(long)]
        source: String,
        #[arg(long)]
        depth: usize,
        #[arg(long = "s-grid", value_delimiter = ',', required = true)]
        s_grid: Vec<SIndex>,
    },
    /// Frontiers generated from enumeration traces.
    #[command(subcommand)]
    Gadget(GadgetCommand),
    /// Interleave two sources along a mask and emit a level.
    Join {
        /// Mask literal: canonical:a/b, explicit:BITS, or
        /// periodic:PREFIX:PERIOD.
        #[arg(long)]
        mask: String,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long)]
        depth: usize,
        /// Write the frontier here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Stagewise threshold search for witness bound values.
    Davies {
        /// Scheme: always-true, graph:VALUES, join:a/b, and(...), or(...).
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        s: SIndex,
        /// Comma-separated m:target pairs, one per stage.
        #[arg(long)]
        thresholds: String,
        /// Largest bound value tried at each stage.
        #[arg(long, default_value_t = 8)]
        r_bound: u32,
        /// Cap on live witness states during the search.
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
    },
}

#[derive(Subcommand)]
enum GadgetCommand {
    /// Tree that keeps only the zero child at event stages.
    FinLebesgue {
        /// Comma-separated event stages (may be empty).
        #[arg(long, default_value = "")]
        events: String,
        /// Number of stages; the frontier depth.
        #[arg(long)]
        depth: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Join frontier of the stretched-schedule mask.
    FinHausdorff {
        #[arg(long, default_value = "")]
        events: String,
        #[arg(long)]
        depth: u64,
        #[arg(long)]
        s: SIndex,
        /// Level to emit; defaults to the mask horizon.
        #[arg(long)]
        k: Option<usize>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Join frontier of a cofinal-grant mask.
    Cof {
        #[arg(long)]
        s: SIndex,
        /// Comma-separated block indices granted in full (may be empty).
        #[arg(long, default_value = "")]
        missing: String,
        #[arg(long)]
        horizon: u64,
        /// Level to emit; defaults to the horizon.
        #[arg(long)]
        k: Option<usize>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Parse(String),
    Invariant(String),
    Budget(String),
    Search(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Budget(_) => 4,
            Failure::Search(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Parse(m) | Failure::Invariant(m) | Failure::Budget(m) | Failure::Search(m) => m,
        }
    }
}

impl From<CtfError> for Failure {
    fn from(e: CtfError) -> Failure {
        match e {
            CtfError::Syntax { .. } => Failure::Parse(e.to_string()),
            CtfError::Invariant { .. } => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<SourceError> for Failure {
    fn from(e: SourceError) -> Failure {
        match e {
            SourceError::TooLarge { .. } => Failure::Budget(e.to_string()),
            SourceError::OutOfRange { .. } => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<ValidationError> for Failure {
    fn from(e: ValidationError) -> Failure {
        match e {
            ValidationError::Source(inner) => inner.into(),
            ValidationError::Violation { .. } => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<CoverError> for Failure {
    fn from(e: CoverError) -> Failure {
        match e {
            CoverError::SizeLimit { .. } => Failure::Budget(e.to_string()),
            CoverError::BadWitness(_) => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<MaskError> for Failure {
    fn from(e: MaskError) -> Failure {
        match e {
            MaskError::Parse(_) => Failure::Parse(e.to_string()),
            _ => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<GadgetError> for Failure {
    fn from(e: GadgetError) -> Failure {
        match e {
            GadgetError::TraceTooLarge { .. } | GadgetError::HorizonTooLarge { .. } => {
                Failure::Budget(e.to_string())
            }
            _ => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<DaviesError> for Failure {
    fn from(e: DaviesError) -> Failure {
        match e {
            DaviesError::Parse(_) => Failure::Parse(e.to_string()),
            DaviesError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            DaviesError::SearchFailed { .. } => Failure::Search(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Parse(e.to_string())
    }
}

/// Bolds a report label when stdout is a terminal and NO_COLOR is unset.
fn label(text: &str) -> String {
    let styled = std::io::stdout().is_terminal() && std::env::var_os("NO_COLOR").is_none();
    if styled {
        format!("\x1b[1m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn parse_u64_list(text: &str, what: &str) -> Result<Vec<u64>, Failure> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| Failure::Parse(format!("invalid {what} entry {part:?}")))
        })
        .collect()
}

fn parse_thresholds(text: &str) -> Result<Vec<(usize, u64)>, Failure> {
    text.split(',')
        .map(|part| {
            let (m, target) = part.split_once(':').ok_or_else(|| {
                Failure::Parse(format!("threshold {part:?} is not of the form m:target"))
            })?;
            let m = m
                .trim()
                .parse()
                .map_err(|_| Failure::Parse(format!("invalid resolution in {part:?}")))?;
            let target = target
                .trim()
                .parse()
                .map_err(|_| Failure::Parse(format!("invalid target in {part:?}")))?;
            Ok((m, target))
        })
        .collect()
}

fn parse_trace(events: &str, stages: u64) -> Result<EnumerationTrace, Failure> {
    let events = parse_u64_list(events, "event")?;
    Ok(EnumerationTrace::from_events(&events, stages)?)
}

fn parse_source(spec: &str) -> Result<TreeSource, Failure> {
    if spec == "full" {
        return Ok(full_source());
    }
    if spec == "zero" {
        return Ok(zero_source());
    }
    if spec == "ones" {
        return Ok(singleton_source(|_| 1));
    }
    if let Some(rest) = spec.strip_prefix("join:") {
        let s: SIndex = rest
            .parse()
            .map_err(|e| Failure::Parse(format!("{e} in source {spec:?}")))?;
        return Ok(join_sources(&full_source(), &zero_source(), &canonical_mask(s)));
    }
    if let Some(path) = spec.strip_prefix("ctf:") {
        let text = std::fs::read_to_string(path)?;
        return Ok(hull_source(parse_ctf(&text)?));
    }
    if let Some(rest) = spec.strip_prefix("lebesgue:") {
        let (events, stages) = split_trace_spec(rest, spec)?;
        let trace = parse_trace(events, stages)?;
        let tree = lebesgue_fin_tree(&trace)?;
        return Ok(hull_source(tree.level(trace.num_stages())));
    }
    if let Some(rest) = spec.strip_prefix("hausdorff:") {
        let (s, tail) = split_s_spec(rest, spec)?;
        let (events, stages) = split_trace_spec(tail, spec)?;
        return Ok(hausdorff_fin_source(&parse_trace(events, stages)?, s));
    }
    if let Some(rest) = spec.strip_prefix("cof:") {
        let (s, tail) = split_s_spec(rest, spec)?;
        let (missing, horizon) = split_trace_spec(tail, spec)?;
        let missing = parse_u64_list(missing, "missing")?;
        return Ok(cof_source(s, &missing, horizon)?);
    }
    Err(Failure::Parse(format!(
        "unknown source {spec:?}: expected full, zero, ones, join:a/b, ctf:PATH, \
         lebesgue:EVENTS@STAGES, hausdorff:a/b:EVENTS@STAGES, or cof:a/b:MISSING@HORIZON"
    )))
}

fn split_s_spec<'a>(rest: &'a str, spec: &str) -> Result<(SIndex, &'a str), Failure> {
    let (s, tail) = rest
        .split_once(':')
        .ok_or_else(|| Failure::Parse(format!("source {spec:?} is missing its a/b part")))?;
    let s = s
        .parse()
        .map_err(|e| Failure::Parse(format!("{e} in source {spec:?}")))?;
    Ok((s, tail))
}

fn split_trace_spec<'a>(rest: &'a str, spec: &str) -> Result<(&'a str, u64), Failure> {
    let (list, bound) = rest
        .split_once('@')
        .ok_or_else(|| Failure::Parse(format!("source {spec:?} is missing its @ part")))?;
    let bound = bound
        .parse()
        .map_err(|_| Failure::Parse(format!("invalid stage count in {spec:?}")))?;
    Ok((list, bound))
}

/// Refuses resolutions so far past the frontier depth that the forced
/// witness cover would not fit in memory.
fn guard_extension(frontier: &Frontier, resolution: usize) -> Result<(), Failure> {
    let depth = frontier.depth();
    if resolution <= depth {
        return Ok(());
    }
    let extra = resolution - depth;
    let forced = if extra >= 40 {
        u128::MAX
    } else {
        (frontier.len() as u128) << extra
    };
    if forced > hmeas::trees::MAX_LEVEL_NODES as u128 {
        return Err(Failure::Budget(format!(
            "resolution {resolution} forces {forced} cover nodes at depth {depth}, \
             more than the {} limit",
            hmeas::trees::MAX_LEVEL_NODES
        )));
    }
    Ok(())
}

fn emit_frontier(
    frontier: &Frontier,
    mut comments: Vec<String>,
    out: Option<&Path>,
    no_timestamp: bool,
) -> Result<(), Failure> {
    if !no_timestamp {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        comments.push(format!("generated {stamp}"));
    }
    let text = write_ctf(frontier, &comments);
    match out {
        Some(path) => {
            std::fs::write(path, &text)?;
            println!("{} {} nodes {}", label("wrote"), path.display(), frontier.len());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_premeasure(
    file: &Path,
    n: usize,
    s: SIndex,
    k: Option<usize>,
    digits: usize,
) -> Result<(), Failure> {
    let text = std::fs::read_to_string(file)?;
    let stored = parse_ctf(&text)?;
    let frontier = match k {
        Some(depth) if depth != stored.depth() => hull_source(stored).level(depth)?,
        _ => stored,
    };
    guard_extension(&frontier, n)?;
    let result = min_cover(&frontier, n, s);
    println!("{} {}", label("weight"), result.weight);
    println!("{} {}", label("decimal"), result.weight.decimal(digits));
    println!("{} {}", label("cover_size"), result.cover.len());
    for node in &result.cover {
        println!("{node}");
    }
    Ok(())
}

fn cmd_profile(spec: &str, n: usize, s: SIndex, depth: usize, digits: usize) -> Result<(), Failure> {
    let source = parse_source(spec)?;
    let rows = premeasure_profile(&source, n, depth, s)?;
    println!("k,weight_exact,weight_decimal");
    for (offset, weight) in rows.iter().enumerate() {
        println!("{},{},{}", n + offset, weight, weight.decimal(digits));
    }
    Ok(())
}

fn cmd_dimension(spec: &str, depth: usize, grid: &[SIndex]) -> Result<(), Failure> {
    let source = parse_source(spec)?;
    let (low, high) = dimension_bracket(&source, depth, grid)?;
    let show = |side: Option<SIndex>| side.map_or("none".to_string(), |s| s.to_string());
    println!("{} {}", label("dimension_low"), show(low));
    println!("{} {}", label("dimension_high"), show(high));
    Ok(())
}

fn cmd_davies(
    scheme: &str,
    s: SIndex,
    thresholds: &str,
    r_bound: u32,
    budget: usize,
    digits: usize,
) -> Result<(), Failure> {
    let scheme: SouslinScheme = scheme.parse()?;
    let thresholds = parse_thresholds(thresholds)?;
    for (index, &(m, _)) in thresholds.iter().enumerate() {
        let stage_depth = index + 1;
        if m > stage_depth + 40 {
            return Err(Failure::Budget(format!(
                "stage {} resolution {m} is too far past its depth {stage_depth}",
                stage_depth
            )));
        }
    }
    let outcome = davies_search(&scheme, s, &thresholds, r_bound, budget)?;
    let chosen: Vec<String> = outcome.r.values().iter().map(|v| v.to_string()).collect();
    println!("{} {}", label("r"), chosen.join(","));
    for cert in &outcome.certificates {
        println!(
            "stage {}: r={} resolution={} target={} weight={} decimal={}",
            cert.stage,
            cert.chosen,
            cert.resolution,
            cert.target,
            cert.weight,
            cert.weight.decimal(digits)
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Premeasure { file, n, s, k } => cmd_premeasure(&file, n, s, k, cli.digits),
        Command::Profile { source, n, s, depth } => {
            cmd_profile(&source, n, s, depth, cli.digits)
        }
        Command::Dimension { source, depth, s_grid } => cmd_dimension(&source, depth, &s_grid),
        Command::Gadget(gadget) => match gadget {
            GadgetCommand::FinLebesgue { events, depth, out } => {
                let trace = parse_trace(&events, depth)?;
                let tree = lebesgue_fin_tree(&trace)?;
                let frontier = tree.level(trace.num_stages());
                let comment = format!("fin-lebesgue events={events} stages={depth}");
                emit_frontier(&frontier, vec![comment], out.as_deref(), cli.no_timestamp)
            }
            GadgetCommand::FinHausdorff { events, depth, s, k, out } => {
                let trace = parse_trace(&events, depth)?;
                let mask = hausdorff_fin_mask(&trace, s);
                let horizon = mask.horizon().expect("schedule masks are finite");
                let level = match k {
                    Some(k) => k,
                    None => usize::try_from(horizon).map_err(|_| {
                        Failure::Budget(format!("horizon {horizon} is too deep to emit"))
                    })?,
                };
                let frontier = hausdorff_fin_source(&trace, s).level(level)?;
                let schedule: Vec<String> = length_schedule(&trace, s)
                    .iter()
                    .map(|l| l.to_string())
                    .collect();
                let comments = vec![
                    format!("fin-hausdorff events={events} stages={depth} s={s}"),
                    format!("schedule {}", schedule.join(",")),
                ];
                emit_frontier(&frontier, comments, out.as_deref(), cli.no_timestamp)
            }
            GadgetCommand::Cof { s, missing, horizon, k, out } => {
                let missing_list = parse_u64_list(&missing, "missing")?;
                let source = cof_source(s, &missing_list, horizon)?;
                let level = match k {
                    Some(k) => k,
                    None => usize::try_from(horizon).map_err(|_| {
                        Failure::Budget(format!("horizon {horizon} is too deep to emit"))
                    })?,
                };
                let frontier = source.level(level)?;
                let comment = format!("cof s={s} missing={missing} horizon={horizon}");
                emit_frontier(&frontier, vec![comment], out.as_deref(), cli.no_timestamp)
            }
        },
        Command::Join { mask, left, right, depth, out } => {
            let mask_rule = parse_mask(&mask)?;
            let left_source = parse_source(&left)?;
            let right_source = parse_source(&right)?;
            let joined = join_sources(&left_source, &right_source, &mask_rule);
            let frontier = joined.level(depth)?;
            let comment = format!("join mask={mask} left={left} right={right}");
            emit_frontier(&frontier, vec![comment], out.as_deref(), cli.no_timestamp)
        }
        Command::Davies { scheme, s, thresholds, r_bound, budget } => {
            cmd_davies(&scheme, s, &thresholds, r_bound, budget, cli.digits)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = run(cli) {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.code());
    }
}
