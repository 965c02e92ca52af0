use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use untangle_cli::{
    configuration_to_instance, file_to_record, flip_to_record, from_json_str,
    instance_to_configuration, record_to_csv, record_to_file, render_svg, replay_record,
    to_json_string, FlipRecord, InstanceFile, RecordFile,
};
use untangle_core::{
    build_line_set, certified_max_steps, distinct_count, gen_configuration,
    gen_max_crossing_matching, gen_points, oracle_longest, oracle_shortest_untangle,
    reduce_g_to_mm, reduce_mm_to_rb, reduce_rb_to_tsp, transform_sequence, Configuration,
    EngineError, Flip, GenKind, GenSpec, LineSet, LineSetKind, PointId, Strategy, Version,
};

#[derive(Parser)]
#[command(
    name = "untangle",
    version,
    about = "Flip dynamics on crossing segment configurations"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run a flip strategy to termination, writing a record and CSV.
    Run(RunArgs),
    /// Reduce an instance (and optionally a recorded sequence) to
    /// another version.
    Reduce(ReduceArgs),
    /// Brute-force longest or shortest flip sequences on tiny instances.
    Oracle(OracleArgs),
    /// Recompute and verify every snapshot of a record.
    Audit(AuditArgs),
    /// Render an instance or a record step as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenArgs {
    /// random | convex | nearconvex | maxcross
    #[arg(long)]
    kind: String,
    /// Number of points (maxcross: must be even, two per segment).
    #[arg(long)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinate box for random generation.
    #[arg(long, default_value_t = 1000, name = "box")]
    box_size: i64,
    /// Interior point count for nearconvex.
    #[arg(long, default_value_t = 1)]
    interior: usize,
    /// mm | rb | tsp | g
    #[arg(long, default_value = "mm")]
    version: String,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: String,
    /// first-lex | random | greedy-max | greedy-min-drop | exhaustive
    #[arg(long, default_value = "first-lex")]
    strategy: String,
    /// full | nearconvex (nearconvex requires convex_subset in the input)
    #[arg(long, default_value = "full")]
    potential: String,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Seed for the random strategy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record file to write.
    #[arg(long)]
    record: Option<String>,
    /// CSV file to write.
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args)]
struct ReduceArgs {
    /// Target version: mm (from g) | rb (from mm) | tsp (from rb)
    #[arg(long)]
    to: String,
    /// Source instance file.
    #[arg(long)]
    input: Option<String>,
    /// Source record file; its sequence is transformed too.
    #[arg(long)]
    with_sequence: Option<String>,
    /// Reduced instance output (stdout if omitted).
    #[arg(long)]
    out: Option<String>,
    /// Transformed record output (requires --with-sequence).
    #[arg(long)]
    record_out: Option<String>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    input: String,
    /// longest | shortest
    #[arg(long)]
    mode: String,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    record: String,
    /// Drop thresholds for the split report; default is the cube-root
    /// threshold for the instance's segment count.
    #[arg(long = "threshold")]
    thresholds: Vec<i64>,
}

#[derive(Args)]
struct RenderArgs {
    /// Instance file to render.
    #[arg(long)]
    input: Option<String>,
    /// Record file to render a step of.
    #[arg(long)]
    record: Option<String>,
    /// Step index: render the state after this many flips, highlighting
    /// the next flip if one exists.
    #[arg(long, default_value_t = 0)]
    step: usize,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<String>,
}

enum CliError {
    /// Validation, IO, or audit failure: exit 1.
    Failure(String),
    /// Bad flag combination beyond clap's knowledge: exit 2.
    Usage(String),
    /// Oracle size guard: exit 3.
    Guard(String),
}

impl CliError {
    fn failure(e: impl std::fmt::Display) -> Self {
        CliError::Failure(e.to_string())
    }
}

fn engine_error(e: EngineError) -> CliError {
    match e {
        EngineError::OracleScaleExceeded(_) => CliError::Guard(e.to_string()),
        other => CliError::Failure(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Reduce(a) => cmd_reduce(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Audit(a) => cmd_audit(a),
        Cmd::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Guard(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn read_file(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Failure(format!("{path}: {e}")))
}

fn write_output(path: Option<&str>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            fs::write(p, content).map_err(|e| CliError::Failure(format!("{p}: {e}")))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_version_flag(s: &str) -> Result<Version, CliError> {
    match s {
        "mm" => Ok(Version::MM),
        "rb" => Ok(Version::RB),
        "tsp" => Ok(Version::TSP),
        "g" => Ok(Version::G),
        other => Err(CliError::Usage(format!(
            "--version: expected mm|rb|tsp|g, got {other:?}"
        ))),
    }
}

fn load_instance(path: &str) -> Result<(Configuration, Option<Vec<PointId>>), CliError> {
    let text = read_file(path)?;
    let inst: InstanceFile = from_json_str(&text, path).map_err(CliError::failure)?;
    instance_to_configuration(&inst, path).map_err(CliError::failure)
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    let version = parse_version_flag(&a.version)?;
    let (config, convex) = match a.kind.as_str() {
        "maxcross" => {
            if version != Version::MM {
                return Err(CliError::Usage(
                    "--kind maxcross generates matchings; use --version mm".to_string(),
                ));
            }
            if a.points % 2 != 0 {
                return Err(CliError::Usage(
                    "--kind maxcross needs an even --points (two per segment)".to_string(),
                ));
            }
            let c = gen_max_crossing_matching(a.points / 2, a.seed)
                .map_err(CliError::failure)?;
            let all: Vec<PointId> = c.points().ids().collect();
            (c, Some(all))
        }
        kind => {
            let kind = match kind {
                "random" => GenKind::RandomGeneral,
                "convex" => GenKind::Convex,
                "nearconvex" => GenKind::NearConvex { t: a.interior },
                other => {
                    return Err(CliError::Usage(format!(
                        "--kind: expected random|convex|nearconvex|maxcross, got {other:?}"
                    )))
                }
            };
            let spec = GenSpec {
                kind,
                n_points: a.points,
                seed: a.seed,
                box_size: a.box_size,
            };
            let ps = gen_points(&spec).map_err(CliError::failure)?.into_shared();
            let convex = spec.convex_subset();
            // A distinct stream decouples structure choice from placement.
            let c = gen_configuration(&ps, version, a.seed.wrapping_add(1))
                .map_err(CliError::failure)?;
            (c, convex)
        }
    };
    let inst = configuration_to_instance(&config, convex.as_deref());
    write_output(a.out.as_deref(), &to_json_string(&inst))
}

fn line_set_for(
    potential: &str,
    config: &Configuration,
    convex: Option<&Vec<PointId>>,
    file: &str,
) -> Result<LineSet, CliError> {
    let kind = match potential {
        "full" => LineSetKind::Full,
        "nearconvex" => match convex {
            Some(ids) => LineSetKind::NearConvex { convex: ids.clone() },
            None => {
                return Err(CliError::Failure(format!(
                    "{file}: convex_subset required for --potential nearconvex"
                )))
            }
        },
        other => {
            return Err(CliError::Usage(format!(
                "--potential: expected full|nearconvex, got {other:?}"
            )))
        }
    };
    build_line_set(config.points(), kind)
        .map_err(|e| CliError::Failure(format!("{file}: {e}")))
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let (config, convex) = load_instance(&a.input)?;
    let line_set = line_set_for(&a.potential, &config, convex.as_ref(), &a.input)?;
    let strategy = match a.strategy.as_str() {
        "first-lex" => Strategy::FirstLex,
        "random" => Strategy::Random(a.seed),
        "greedy-max" => Strategy::GreedyMaxNewCrossings,
        "greedy-min-drop" => Strategy::GreedyMinDrop(line_set.clone()),
        "exhaustive" => Strategy::Exhaustive,
        other => {
            return Err(CliError::Usage(format!(
                "--strategy: expected first-lex|random|greedy-max|greedy-min-drop|exhaustive, got {other:?}"
            )))
        }
    };
    let rec =
        untangle_core::run(&config, &strategy, &line_set, a.max_steps).map_err(engine_error)?;
    if let Some(path) = &a.record {
        write_output(Some(path), &to_json_string(&record_to_file(&rec)))?;
    }
    if let Some(path) = &a.csv {
        write_output(Some(path), &record_to_csv(&rec))?;
    }
    println!(
        "steps={} distinct={} terminated={}",
        rec.steps().len(),
        distinct_count(&rec),
        rec.terminated()
    );
    Ok(())
}

fn cmd_reduce(a: ReduceArgs) -> Result<(), CliError> {
    let (source, sequence, source_path): (Configuration, Vec<Flip>, String) =
        match (&a.input, &a.with_sequence) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "pass either --input or --with-sequence, not both".to_string(),
                ))
            }
            (Some(path), None) => {
                let (c, _) = load_instance(path)?;
                (c, Vec::new(), path.clone())
            }
            (None, Some(path)) => {
                let text = read_file(path)?;
                let rf: RecordFile = from_json_str(&text, path).map_err(CliError::failure)?;
                let rec = file_to_record(&rf, path).map_err(CliError::failure)?;
                let flips = rec.steps().iter().map(|s| s.flip).collect();
                (rec.initial().clone(), flips, path.clone())
            }
            (None, None) => {
                return Err(CliError::Usage(
                    "reduce needs --input or --with-sequence".to_string(),
                ))
            }
        };
    if a.record_out.is_some() && a.with_sequence.is_none() {
        return Err(CliError::Usage(
            "--record-out requires --with-sequence".to_string(),
        ));
    }
    let reduction = match a.to.as_str() {
        "mm" => reduce_g_to_mm(&source),
        "rb" => reduce_mm_to_rb(&source),
        "tsp" => reduce_rb_to_tsp(&source),
        other => {
            return Err(CliError::Usage(format!(
                "--to: expected mm|rb|tsp, got {other:?}"
            )))
        }
    }
    .map_err(CliError::failure)?;
    let (reduction, transformed) =
        transform_sequence(&reduction, &sequence).map_err(CliError::failure)?;
    let inst = configuration_to_instance(&reduction.target, None);
    write_output(a.out.as_deref(), &to_json_string(&inst))?;
    if let Some(path) = &a.record_out {
        let line_set = build_line_set(reduction.target.points(), LineSetKind::Full)
            .map_err(CliError::failure)?;
        let rec = replay_record(&reduction.target, line_set, &transformed, &source_path)
            .map_err(CliError::failure)?;
        write_output(Some(path), &to_json_string(&record_to_file(&rec)))?;
    }
    eprintln!(
        "reduced {} -> {}: {} points, {} edges, epsilon {}, steps {} -> {}",
        reduction.source.version(),
        reduction.target.version(),
        reduction.target.points().len(),
        reduction.target.edge_count(),
        untangle_core::render_coord(&reduction.epsilon),
        sequence.len(),
        transformed.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct OracleOutput {
    mode: String,
    value: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<FlipRecord>>,
}

fn cmd_oracle(a: OracleArgs) -> Result<(), CliError> {
    let (config, _) = load_instance(&a.input)?;
    let output = match a.mode.as_str() {
        "longest" => {
            let cap = certified_max_steps(&config);
            let (value, witness) = oracle_longest(&config, cap).map_err(engine_error)?;
            OracleOutput {
                mode: "longest".to_string(),
                value,
                witness: Some(witness.iter().map(flip_to_record).collect()),
            }
        }
        "shortest" => {
            let value = oracle_shortest_untangle(&config).map_err(engine_error)?;
            OracleOutput {
                mode: "shortest".to_string(),
                value,
                witness: None,
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "--mode: expected longest|shortest, got {other:?}"
            )))
        }
    };
    write_output(a.out.as_deref(), &to_json_string(&output))
}

/// Smallest k >= 1 with k^3 >= m.
fn ceil_cbrt(m: usize) -> i64 {
    let mut k: i64 = 1;
    while (k * k * k) < m as i64 {
        k += 1;
    }
    k
}

fn cmd_audit(a: AuditArgs) -> Result<(), CliError> {
    let text = read_file(&a.record)?;
    let rf: RecordFile = from_json_str(&text, &a.record).map_err(CliError::failure)?;
    let rec = file_to_record(&rf, &a.record).map_err(CliError::failure)?;
    let thresholds = if a.thresholds.is_empty() {
        vec![ceil_cbrt(rec.initial().edge_count())]
    } else {
        a.thresholds.clone()
    };
    let report = untangle_core::audit(&rec, rec.line_set(), &thresholds);
    for f in &report.failures {
        println!("step {}: {}", f.step, f.problem);
    }
    for (k, at_least, below) in &report.threshold_split {
        println!("threshold k={k}: {at_least} steps with drop >= k, {below} below");
    }
    println!(
        "steps={} distinct={} final_phi_x={}",
        report.steps,
        distinct_count(&rec),
        report.final_phi_x
    );
    if report.ok {
        println!("PASS");
        Ok(())
    } else {
        println!("FAIL");
        Err(CliError::Failure(format!(
            "{}: audit failed with {} problem(s)",
            a.record,
            report.failures.len()
        )))
    }
}

fn cmd_render(a: RenderArgs) -> Result<(), CliError> {
    let svg = match (&a.input, &a.record) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "pass either --input or --record, not both".to_string(),
            ))
        }
        (Some(path), None) => {
            let (config, _) = load_instance(path)?;
            render_svg(&config, None)
        }
        (None, Some(path)) => {
            let text = read_file(path)?;
            let rf: RecordFile = from_json_str(&text, path).map_err(CliError::failure)?;
            let rec = file_to_record(&rf, path).map_err(CliError::failure)?;
            if a.step > rec.steps().len() {
                return Err(CliError::Failure(format!(
                    "{path}: step {} out of range (record has {} steps)",
                    a.step,
                    rec.steps().len()
                )));
            }
            let mut state = rec.initial().clone();
            for s in &rec.steps()[..a.step] {
                state = state
                    .apply_flip(&s.flip)
                    .map_err(|e| CliError::Failure(format!("{path}: replay: {e}")))?;
            }
            let highlight = rec.steps().get(a.step).map(|s| s.flip);
            render_svg(&state, highlight.as_ref())
        }
        (None, None) => {
            return Err(CliError::Usage("render needs --input or --record".to_string()))
        }
    };
    write_output(a.out.as_deref(), &svg)
}
