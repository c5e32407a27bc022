use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use engbench_core::backend::{render_design, ProblemId, SyntheticBackend};
use engbench_core::genmetrics::{
    cog, dpp_diversity, fog, iog, mmd2, rvc, DesignSet, GenMetricsReport, OptimizationPath,
    VolumeFractionConstraint, DEFAULT_SIGMA,
};
use engbench_core::harness::{
    aggregate, emit_reports, evaluate_run, run_matrix, table_csv, table_markdown, AgentSpec,
    RunConfig, RunRecord,
};
use engbench_core::oracle::{
    hpc_record_from_trace, hpc_trace, run_oracle_with, HpcDropSchedule, OracleKind, OracleOptions,
};
use engbench_core::prompt::{sample_instance, HpcPrompt, HpcPromptStyle, PromptInstance, Style};
use engbench_core::scoring::{
    agent_design, hpc_score, rag_score, HpcRunRecord, RagOutcome, RagPrompt, ScoringWeights,
};
use engbench_core::trace::Trace;

#[derive(Parser)]
#[command(
    name = "engbench",
    version,
    about = "Engineering-design agent benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (style × agent × seed × sample) matrix and write reports.
    Run(RunArgs),
    /// Validate and score one trace against one prompt instance.
    ScoreTrace {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Scoring weight overrides (JSON).
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Score a retrieval run, from an outcome file or a trace.
    RagScore {
        /// RagOutcome JSON.
        #[arg(long, conflicts_with_all = ["prompt", "trace"])]
        outcome: Option<PathBuf>,
        #[arg(long, requires = "trace")]
        prompt: Option<RagPrompt>,
        #[arg(long, requires = "prompt")]
        trace: Option<PathBuf>,
    },
    /// Score an HPC orchestration run, from a record, a trace, or an oracle.
    HpcScore(HpcArgs),
    /// MMD, DPP diversity and constraint violations of a generated set.
    GenMetrics(GenArgs),
    /// Re-aggregate a runs.jsonl into tables.
    Report {
        /// Directory holding runs.jsonl, or the file itself.
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        problem: Option<ProblemId>,
        /// Write table.csv and table.md here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
    /// Print (or write) one sampled prompt instance as JSON.
    Instance {
        #[arg(long)]
        style: Style,
        #[arg(long, default_value = "beams2d")]
        problem: ProblemId,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        sample: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print only the prompt text.
        #[arg(long)]
        text: bool,
    },
    /// Run a scripted agent on an instance and write its trace.
    Oracle {
        #[arg(long)]
        kind: OracleKind,
        #[arg(long)]
        instance: PathBuf,
        /// Call log path; artifacts go next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        over_calls: usize,
    },
    /// Dump the agent's final design from a trace as a PGM image.
    Render {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// RunConfig JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    styles: Option<Vec<Style>>,
    /// Oracle names or name=trace_dir entries.
    #[arg(long, value_delimiter = ',')]
    agents: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    samples: Option<u32>,
    #[arg(long)]
    problem: Option<ProblemId>,
}

#[derive(clap::Args)]
struct HpcArgs {
    /// HpcRunRecord JSON.
    #[arg(long, conflicts_with_all = ["trace", "oracle"])]
    record: Option<PathBuf>,
    #[arg(long, conflicts_with = "oracle")]
    trace: Option<PathBuf>,
    #[arg(long)]
    oracle: Option<OracleKind>,
    #[arg(long, value_enum, default_value_t = PromptStyle::Explicit)]
    style: PromptStyle,
    /// Seeds for the oracle; each is scored separately.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(clap::Args)]
struct GenArgs {
    /// Generated designs (JSON array of grids/vectors, or headerless CSV).
    #[arg(long)]
    generated: PathBuf,
    /// Reference designs for MMD.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    /// Volume-fraction target for the violation ratio.
    #[arg(long, requires = "volfrac_tol")]
    volfrac_target: Option<f64>,
    #[arg(long, requires = "volfrac_target")]
    volfrac_tol: Option<f64>,
    /// OptimizationPath JSON for the gap metrics.
    #[arg(long)]
    path: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum PromptStyle {
    Explicit,
    Natural,
}

impl From<PromptStyle> for HpcPromptStyle {
    fn from(s: PromptStyle) -> Self {
        match s {
            PromptStyle::Explicit => HpcPromptStyle::Explicit,
            PromptStyle::Natural => HpcPromptStyle::Natural,
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn load_weights(path: Option<&Path>) -> Result<ScoringWeights> {
    match path {
        Some(p) => Ok(ScoringWeights::load(p)?),
        None => Ok(ScoringWeights::default()),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let problem = args.problem.unwrap_or(ProblemId::Beams2d);
            RunConfig::new(
                problem,
                Style::ALL.to_vec(),
                OracleKind::WORKFLOW
                    .into_iter()
                    .map(AgentSpec::Oracle)
                    .collect(),
            )
        }
    };
    if let Some(p) = args.problem {
        config.problem_id = p;
    }
    if let Some(s) = args.styles {
        config.styles = s;
    }
    if let Some(a) = args.agents {
        config.agents = a
            .iter()
            .map(|s| AgentSpec::parse(s))
            .collect::<Result<_, _>>()?;
    }
    if let Some(s) = args.seeds {
        config.seeds = s;
    }
    if let Some(n) = args.samples {
        config.samples = n;
    }
    if let Some(o) = args.out {
        config.out_dir = Some(o);
    }
    config.validate()?;
    let out = config
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("engbench-out"));
    let result = run_matrix(&config, &SyntheticBackend)?;
    let written = emit_reports(&result, &out)
        .with_context(|| format!("writing reports to {}", out.display()))?;
    print!("{}", table_markdown(&result.table));
    eprintln!(
        "{} runs; wrote {} files to {}",
        result.runs.len(),
        written.len(),
        out.display()
    );
    Ok(())
}

fn cmd_score_trace(instance: &Path, trace: &Path, weights: Option<&Path>) -> Result<()> {
    let inst: PromptInstance = read_json(instance)?;
    inst.validate()?;
    let trace = Trace::read(trace).with_context(|| format!("reading trace {}", trace.display()))?;
    let outcome = evaluate_run(&inst, &trace, &SyntheticBackend, &load_weights(weights)?)?;
    print_json(&outcome)
}

fn cmd_rag(
    outcome: Option<PathBuf>,
    prompt: Option<RagPrompt>,
    trace: Option<PathBuf>,
) -> Result<()> {
    let outcome = match (outcome, prompt, trace) {
        (Some(p), _, _) => read_json::<RagOutcome>(&p)?,
        (None, Some(prompt), Some(t)) => RagOutcome::from_trace(prompt, &Trace::read(&t)?),
        _ => bail!("give --outcome, or --prompt with --trace"),
    };
    print_json(&rag_score(&outcome)?)
}

fn cmd_hpc(args: HpcArgs) -> Result<()> {
    let weights = load_weights(args.weights.as_deref())?.hpc;
    let style = HpcPromptStyle::from(args.style);
    let records: Vec<(Option<u64>, HpcRunRecord)> = if let Some(p) = &args.record {
        vec![(None, read_json(p)?)]
    } else if let Some(t) = &args.trace {
        let seed = args.seeds.first().copied().unwrap_or(1);
        vec![(
            Some(seed),
            hpc_record_from_trace(&HpcPrompt::cgan(style, seed), &Trace::read(t)?),
        )]
    } else if let Some(kind) = args.oracle {
        if !kind.is_hpc() {
            bail!("{kind} is a workflow oracle; use hpc_perfect or hpc_eval_dropper");
        }
        let schedule = HpcDropSchedule::default();
        args.seeds
            .iter()
            .map(|&seed| {
                let prompt = HpcPrompt::cgan(style, seed);
                Ok((
                    Some(seed),
                    hpc_record_from_trace(&prompt, &hpc_trace(kind, &prompt, &schedule)?),
                ))
            })
            .collect::<Result<_>>()?
    } else {
        bail!("give one of --record, --trace or --oracle");
    };
    let mut rows = Vec::new();
    for (seed, record) in records {
        let score = hpc_score(&record, &weights)?;
        rows.push(json!({"seed": seed, "record": record, "score": score}));
    }
    let mean = rows
        .iter()
        .map(|r| r["score"].as_f64().unwrap_or(0.0))
        .sum::<f64>()
        / rows.len() as f64;
    print_json(&json!({"runs": rows, "mean_score": mean}))
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let generated = DesignSet::load(&args.generated)?;
    let mmd = match &args.reference {
        Some(r) => mmd2(&DesignSet::load(r)?, &generated, args.sigma)?,
        None => f64::NAN,
    };
    let rvc = match (args.volfrac_target, args.volfrac_tol) {
        (Some(target), Some(tolerance)) => Some(rvc(
            &generated,
            &VolumeFractionConstraint { target, tolerance },
        )?),
        _ => None,
    };
    let report = GenMetricsReport {
        sigma: args.sigma,
        mmd2: mmd,
        dpp: dpp_diversity(&generated, args.sigma)?,
        rvc,
    };
    let mut value = serde_json::to_value(&report)?;
    if args.reference.is_none() {
        value["mmd2"] = serde_json::Value::Null;
    }
    if let Some(p) = &args.path {
        let path: OptimizationPath = read_json(p)?;
        value["gaps"] = json!({"cog": cog(&path)?, "iog": iog(&path)?, "fog": fog(&path)?});
    }
    print_json(&value)
}

fn cmd_report(
    runs: &Path,
    problem: Option<ProblemId>,
    out: Option<&Path>,
    format: Format,
) -> Result<()> {
    let (file, dir) = if runs.is_dir() {
        (runs.join("runs.jsonl"), runs.to_path_buf())
    } else {
        (
            runs.to_path_buf(),
            runs.parent().unwrap_or(Path::new(".")).to_path_buf(),
        )
    };
    let text =
        std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    let mut records = Vec::new();
    for (n, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let r: RunRecord = serde_json::from_str(line)
            .with_context(|| format!("{} line {}", file.display(), n + 1))?;
        records.push(r);
    }
    let problem = match problem {
        Some(p) => p,
        None => {
            let meta: serde_json::Value = read_json(&dir.join("metadata.json"))
                .context("no --problem and no metadata.json")?;
            serde_json::from_value(meta["config"]["problem_id"].clone())
                .context("metadata.json lacks config.problem_id")?
        }
    };
    let table = aggregate(problem, &records);
    match out {
        Some(o) => {
            std::fs::create_dir_all(o).with_context(|| format!("creating {}", o.display()))?;
            std::fs::write(o.join("table.csv"), table_csv(&table)?)?;
            std::fs::write(o.join("table.md"), table_markdown(&table))?;
            eprintln!("{} rows written to {}", table.rows.len(), o.display());
            Ok(())
        }
        None => match format {
            Format::Markdown => {
                print!("{}", table_markdown(&table));
                Ok(())
            }
            Format::Csv => {
                print!("{}", table_csv(&table)?);
                Ok(())
            }
            Format::Json => print_json(&table),
        },
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::ScoreTrace {
            instance,
            trace,
            weights,
        } => cmd_score_trace(&instance, &trace, weights.as_deref()),
        Command::RagScore {
            outcome,
            prompt,
            trace,
        } => cmd_rag(outcome, prompt, trace),
        Command::HpcScore(args) => cmd_hpc(args),
        Command::GenMetrics(args) => cmd_gen(args),
        Command::Report {
            runs,
            problem,
            out,
            format,
        } => cmd_report(&runs, problem, out.as_deref(), format),
        Command::Instance {
            style,
            problem,
            seed,
            sample,
            out,
            text,
        } => {
            let inst = sample_instance(style, problem, seed, sample)?;
            if text {
                println!("{}", inst.prompt_text);
                return Ok(());
            }
            match out {
                Some(o) => Ok(
                    std::fs::write(&o, serde_json::to_string_pretty(&inst)? + "\n")
                        .with_context(|| format!("writing {}", o.display()))?,
                ),
                None => print_json(&inst),
            }
        }
        Command::Oracle {
            kind,
            instance,
            out,
            over_calls,
        } => {
            let inst: PromptInstance = read_json(&instance)?;
            let trace = run_oracle_with(
                kind,
                &inst,
                &SyntheticBackend,
                &OracleOptions { over_calls },
            )?;
            trace.write(&out)?;
            eprintln!("{} calls written to {}", trace.calls.len(), out.display());
            Ok(())
        }
        Command::Render { trace, out } => {
            let trace = Trace::read(&trace)?;
            let grid = agent_design(&trace).context("trace holds no optimized design")?;
            std::fs::write(&out, render_design(grid).to_pgm())
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
    }
}
