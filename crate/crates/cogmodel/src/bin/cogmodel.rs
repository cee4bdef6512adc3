//! Command-line surface: fit, compare, generate, simulate, recover, ppc,
//! ablate. Exit codes: 0 success, 1 domain error, 2 usage error.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use cogmodel::baselines::{BaselineKind, HeuristicKind};
use cogmodel::comparison::{compare, DEFAULT_MC_SAMPLES};
use cogmodel::dataset::{self, Dataset, FileFormat, ParadigmKind, SplitSpec};
use cogmodel::env::RewardAlphabet;
use cogmodel::fitting::{fit_all, BaselineModel, FitResult, MdlModel, Model};
use cogmodel::mdl;
use cogmodel::pipeline::{
    ablate, archive_run, run, Component, HttpEngine, Metric, ProposalEngine, RunConfig,
};
use cogmodel::ppc::{
    correct_map_from_rewards, ppc_decision, ppc_learning, ppc_planning, ppc_rlwm, write_rows_csv,
    BlockLabel,
};
use cogmodel::synthgen::{
    default_twostep_env, gen_agents_with_params, gen_bandit_agents, gen_decision_problems,
    gen_rlwm_schedule, noise_sweep, recovery_study, simulate_heuristic_agents, RecoveryConfig,
};

#[derive(Parser)]
#[command(name = "cogmodel", version, about = "Fit, compare, and discover computational cognitive models")]
struct Cli {
    /// Number of worker threads; default is one per core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print one JSON summary line on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a model to every participant of a dataset.
    Fit {
        /// Baseline name (rw, rwpm, ...) or a .mdl program file.
        #[arg(long)]
        model: String,
        #[arg(long)]
        data: PathBuf,
        /// decision | learning-partial | learning-full | planning | wm
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value = "bic")]
        metric: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare fit results from two or more directories (each holding a
    /// fits.jsonl written by `fit`).
    Compare {
        #[arg(long, num_args = 2.., required = true)]
        fits: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        mc_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the guided model-generation loop from a config file.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate synthetic agents from a named model.
    Simulate {
        #[arg(long)]
        model: String,
        /// bandit | twostep | wm | decision
        #[arg(long)]
        env: String,
        /// Number of agents.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Trials per agent (problems per agent for decision).
        #[arg(long, default_value_t = 150)]
        trials: usize,
        /// Response noise for decision heuristics, in [0, 0.5].
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Bandit reward contingencies as "p0,p1".
        #[arg(long, default_value = "0.2,0.8")]
        contingencies: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// csv | json
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Canned recovery studies on synthetic agents.
    Recover {
        /// bandit (learning-model identification) | heuristic (noise sweep)
        #[arg(long)]
        study: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Behavioral-pattern tables for observed and simulated data.
    Ppc {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        kind: String,
        /// Optional simulated dataset to tabulate alongside the data.
        #[arg(long)]
        sim: Option<PathBuf>,
        /// JSON list of block labels, required for learning data.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rerun the generation loop with prompt components removed.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of feedback,data,description,template.
        #[arg(long)]
        components: String,
        #[arg(long)]
        out: PathBuf,
    },
}

enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }
}

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Domain(e.to_string())
    }
}

type CliResult = Result<serde_json::Value, CliError>;

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("cogmodel: cannot configure thread pool: {}", e);
            std::process::exit(1);
        }
    }
    match dispatch(cli.cmd) {
        Ok(summary) => {
            if cli.json {
                println!("{}", summary);
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("cogmodel: {}", msg);
            eprintln!("run `cogmodel --help` for usage");
            std::process::exit(2);
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("cogmodel: {}", msg);
            std::process::exit(1);
        }
    }
}

fn dispatch(cmd: Cmd) -> CliResult {
    match cmd {
        Cmd::Fit {
            model,
            data,
            kind,
            restarts,
            metric,
            seed,
            out,
        } => cmd_fit(&model, &data, &kind, restarts, &metric, seed, &out),
        Cmd::Compare {
            fits,
            mc_samples,
            seed,
            out,
        } => cmd_compare(&fits, mc_samples, seed, &out),
        Cmd::Generate { config, out } => cmd_generate(&config, &out),
        Cmd::Simulate {
            model,
            env,
            n,
            trials,
            noise,
            contingencies,
            seed,
            format,
            out,
        } => cmd_simulate(&model, &env, n, trials, noise, &contingencies, seed, &format, &out),
        Cmd::Recover { study, seed, out } => cmd_recover(&study, seed, &out),
        Cmd::Ppc {
            data,
            kind,
            sim,
            labels,
            out,
        } => cmd_ppc(&data, &kind, sim.as_deref(), labels.as_deref(), &out),
        Cmd::Ablate {
            config,
            components,
            out,
        } => cmd_ablate(&config, &components, &out),
    }
}

fn parse_kind(s: &str) -> Result<ParadigmKind, CliError> {
    ParadigmKind::parse_name(s).ok_or_else(|| CliError::usage(format!("unknown paradigm '{}'", s)))
}

fn parse_metric(s: &str) -> Result<Metric, CliError> {
    Metric::parse_name(s).ok_or_else(|| CliError::usage(format!("unknown metric '{}'", s)))
}

fn format_of(path: &Path) -> FileFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => FileFormat::Json,
        _ => FileFormat::Csv,
    }
}

fn ensure_out(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Domain(e.to_string()))
}

fn load_model(name: &str, kind: ParadigmKind) -> Result<Box<dyn Model>, CliError> {
    if name.ends_with(".mdl") || Path::new(name).is_file() {
        let src = std::fs::read_to_string(name)?;
        let program = mdl::parse(&src)?;
        mdl::check_compat(&program, kind)?;
        let id = Path::new(name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into());
        Ok(Box::new(MdlModel::new(id, program)))
    } else {
        let b = BaselineKind::from_name(name)
            .ok_or_else(|| CliError::usage(format!("unknown model '{}'", name)))?;
        if !b.compatible(kind) {
            return Err(CliError::Domain(format!(
                "model '{}' cannot score {} data",
                b.name(),
                kind
            )));
        }
        Ok(Box::new(BaselineModel(b)))
    }
}

fn cmd_fit(
    model: &str,
    data: &Path,
    kind: &str,
    restarts: usize,
    metric: &str,
    seed: u64,
    out: &Path,
) -> CliResult {
    let kind = parse_kind(kind)?;
    let metric = parse_metric(metric)?;
    let model = load_model(model, kind)?;
    let d = dataset::load(data, kind, format_of(data))?;
    let fits = fit_all(model.as_ref(), &d, restarts, seed);
    if let Some(bad) = fits.iter().find_map(|f| f.error.as_ref()) {
        return Err(CliError::Domain(bad.clone()));
    }
    ensure_out(out)?;
    cogmodel::fitting::write_jsonl(&fits, &out.join("fits.jsonl"))?;
    cogmodel::fitting::write_csv(&fits, &out.join("fits.csv"))?;
    let mean = |f: &dyn Fn(&FitResult) -> f64| {
        fits.iter().map(|r| f(r)).sum::<f64>() / fits.len() as f64
    };
    Ok(json!({
        "command": "fit",
        "model": fits[0].model_id,
        "participants": fits.len(),
        "metric": metric.label(),
        "mean_bic": mean(&|r| r.bic),
        "mean_aic": mean(&|r| r.aic),
        "out": out.display().to_string(),
    }))
}

fn read_fits(dir: &Path) -> Result<Vec<FitResult>, CliError> {
    let path = dir.join("fits.jsonl");
    let f = std::fs::File::open(&path)
        .map_err(|e| CliError::Domain(format!("{}: {}", path.display(), e)))?;
    let mut fits = Vec::new();
    for line in std::io::BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        fits.push(serde_json::from_str(&line)?);
    }
    if fits.is_empty() {
        return Err(CliError::Domain(format!("{} holds no fits", path.display())));
    }
    Ok(fits)
}

fn cmd_compare(dirs: &[PathBuf], mc_samples: usize, seed: u64, out: &Path) -> CliResult {
    let fits: Vec<Vec<FitResult>> = dirs
        .iter()
        .map(|d| read_fits(d))
        .collect::<Result<_, _>>()?;
    let report = compare(&fits, mc_samples, seed)?;
    ensure_out(out)?;
    report.write_json(&out.join("report.json"))?;
    report.write_bic_csv(&out.join("bic.csv"))?;
    Ok(json!({
        "command": "compare",
        "models": report.models,
        "best": report.best_model,
        "exceedance": report.exceedance,
        "p_value": report.p_value,
        "out": out.display().to_string(),
    }))
}

#[derive(Deserialize)]
struct EngineFileConfig {
    base_url: String,
    model: String,
    #[serde(default = "default_key_env")]
    api_key_env: String,
    max_tokens: Option<usize>,
}

fn default_key_env() -> String {
    "COGMODEL_API_KEY".into()
}

#[derive(Deserialize)]
struct FileConfig {
    data: String,
    kind: String,
    engine: EngineFileConfig,
    run_id: Option<String>,
    metric: Option<String>,
    iterations: Option<usize>,
    candidates_per_iter: Option<usize>,
    max_retries: Option<usize>,
    restarts: Option<usize>,
    temperature: Option<f64>,
    seed: Option<u64>,
    baselines: Option<Vec<String>>,
    task_description: Option<String>,
    /// Path to a .mdl file used as the template block.
    template_file: Option<String>,
    max_prompt_participants: Option<usize>,
    max_prompt_trials: Option<usize>,
    mc_samples: Option<usize>,
    split: Option<SplitSpec>,
}

fn load_file_config(path: &Path) -> Result<(FileConfig, RunConfig, Dataset), CliError> {
    let text = std::fs::read_to_string(path)?;
    let fc: FileConfig = if path.extension().and_then(|e| e.to_str()) == Some("toml") {
        toml::from_str(&text).map_err(|e| CliError::Domain(e.to_string()))?
    } else {
        serde_json::from_str(&text)?
    };
    let kind = parse_kind(&fc.kind)?;
    let data_path = PathBuf::from(&fc.data);
    let data = dataset::load(&data_path, kind, format_of(&data_path))?;

    let mut cfg = RunConfig::default();
    if let Some(v) = &fc.run_id {
        cfg.run_id = v.clone();
    }
    if let Some(v) = &fc.metric {
        cfg.metric = parse_metric(v)?;
    }
    if let Some(v) = fc.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = fc.candidates_per_iter {
        cfg.candidates_per_iter = v;
    }
    if let Some(v) = fc.max_retries {
        cfg.max_retries = v;
    }
    if let Some(v) = fc.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = fc.temperature {
        cfg.temperature = v;
    }
    if let Some(v) = fc.seed {
        cfg.seed = v;
    }
    if let Some(v) = fc.mc_samples {
        cfg.mc_samples = v;
    }
    if let Some(v) = fc.max_prompt_participants {
        cfg.max_prompt_participants = v;
    }
    if let Some(v) = fc.max_prompt_trials {
        cfg.max_prompt_trials = v;
    }
    if let Some(v) = &fc.task_description {
        cfg.task_description = v.clone();
    }
    if let Some(v) = &fc.split {
        cfg.split = *v;
    }
    if let Some(names) = &fc.baselines {
        cfg.baselines = names
            .iter()
            .map(|n| {
                BaselineKind::from_name(n)
                    .ok_or_else(|| CliError::Domain(format!("unknown baseline '{}'", n)))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(tf) = &fc.template_file {
        cfg.template = std::fs::read_to_string(tf)?;
    }
    Ok((fc, cfg, data))
}

fn make_engine(fc: &EngineFileConfig) -> HttpEngine {
    let mut e = HttpEngine::new(&fc.base_url, &fc.model, &fc.api_key_env);
    if let Some(mt) = fc.max_tokens {
        e.max_tokens = mt;
    }
    e
}

fn cmd_generate(config: &Path, out: &Path) -> CliResult {
    let (fc, cfg, data) = load_file_config(config)?;
    let mut engine = make_engine(&fc.engine);
    let result = run(&cfg, &data, &mut engine)?;
    ensure_out(out)?;
    archive_run(&result, out)?;
    let mean_test: f64 = result
        .test_fits
        .iter()
        .map(|f| cfg.metric.of(f))
        .sum::<f64>()
        / result.test_fits.len() as f64;
    Ok(json!({
        "command": "generate",
        "run_id": result.run_id,
        "best_model": result.best_model_id,
        "validation_score": result.best_validation_score,
        "mean_test_metric": mean_test,
        "out": out.display().to_string(),
    }))
}

fn parse_contingencies(s: &str) -> Result<[f64; 2], CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::usage("contingencies must be \"p0,p1\""));
    }
    let p0: f64 = parts[0].trim().parse().map_err(|_| CliError::usage("bad contingency"))?;
    let p1: f64 = parts[1].trim().parse().map_err(|_| CliError::usage("bad contingency"))?;
    Ok([p0, p1])
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    model: &str,
    env: &str,
    n: usize,
    trials: usize,
    noise: f64,
    contingencies: &str,
    seed: u64,
    format: &str,
    out: &Path,
) -> CliResult {
    let format = match format {
        "csv" => FileFormat::Csv,
        "json" => FileFormat::Json,
        other => return Err(CliError::usage(format!("unknown format '{}'", other))),
    };
    let d: Dataset = match env {
        "decision" => {
            let kind = match model {
                "ttb" => HeuristicKind::Ttb,
                "eqw" => HeuristicKind::Eqw,
                "wadd" => HeuristicKind::Wadd,
                "tallying" => HeuristicKind::Tallying,
                other => {
                    return Err(CliError::usage(format!(
                        "'{}' is not a decision heuristic (ttb, eqw, wadd, tallying)",
                        other
                    )))
                }
            };
            let problems = gen_decision_problems(80, 3, seed)?;
            simulate_heuristic_agents(kind, &problems, noise, n, trials, seed)?
        }
        "bandit" => {
            let kind = BaselineKind::from_name(model)
                .ok_or_else(|| CliError::usage(format!("unknown model '{}'", model)))?;
            let feedback = if kind == BaselineKind::Rw4Alpha {
                cogmodel::dataset::FeedbackKind::Full
            } else {
                cogmodel::dataset::FeedbackKind::Partial
            };
            let (d, _) = gen_bandit_agents(
                kind,
                n,
                trials,
                parse_contingencies(contingencies)?,
                RewardAlphabet::PlusMinus,
                feedback,
                seed,
            )?;
            d
        }
        "twostep" | "wm" => {
            let kind = BaselineKind::from_name(model)
                .ok_or_else(|| CliError::usage(format!("unknown model '{}'", model)))?;
            let task_env = if env == "twostep" {
                default_twostep_env()
            } else {
                gen_rlwm_schedule(&[3, 6, 3, 6], 9, seed)
            };
            let spec = kind.spec();
            let mut rng = cogmodel::fitting::participant_rng(seed, "simulate");
            let thetas: Vec<Vec<f64>> = (0..n).map(|_| spec.sample_uniform(&mut rng)).collect();
            let limit = task_env.trial_limit().unwrap_or(trials);
            gen_agents_with_params(kind, &task_env, &thetas, limit.min(trials.max(1)), seed)?
        }
        other => return Err(CliError::usage(format!("unknown environment '{}'", other))),
    };
    ensure_out(out)?;
    let name = match format {
        FileFormat::Csv => "sim.csv",
        FileFormat::Json => "sim.json",
    };
    dataset::save(&d, &out.join(name), format)?;
    Ok(json!({
        "command": "simulate",
        "model": model,
        "env": env,
        "agents": d.n_participants(),
        "out": out.join(name).display().to_string(),
    }))
}

fn cmd_recover(study: &str, seed: Option<u64>, out: &Path) -> CliResult {
    ensure_out(out)?;
    match study {
        "bandit" => {
            let mut cfg = RecoveryConfig::default();
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = recovery_study(&cfg)?;
            write_rows_csv(&report.rows, &out.join("recovery.csv"))?;
            let accuracy: BTreeMap<String, Option<f64>> =
                report.accuracy.iter().cloned().collect();
            std::fs::write(
                out.join("accuracy.json"),
                serde_json::to_string_pretty(&accuracy)?,
            )?;
            Ok(json!({
                "command": "recover",
                "study": "bandit",
                "accuracy": accuracy,
                "out": out.display().to_string(),
            }))
        }
        "heuristic" => {
            let cells = noise_sweep(&[0.0, 0.25, 0.5], 100, 9, seed.unwrap_or(42))?;
            write_rows_csv(&cells, &out.join("noise_sweep.csv"))?;
            let summary: Vec<serde_json::Value> = cells
                .iter()
                .map(|c| json!({"kind": c.kind, "noise": c.noise, "accuracy": c.accuracy}))
                .collect();
            Ok(json!({
                "command": "recover",
                "study": "heuristic",
                "cells": summary,
                "out": out.display().to_string(),
            }))
        }
        other => Err(CliError::usage(format!(
            "unknown study '{}' (bandit, heuristic)",
            other
        ))),
    }
}

fn ppc_tables(d: &Dataset, labels: Option<&[BlockLabel]>, prefix: &str, out: &Path) -> CliResult {
    let file = |name: &str| out.join(format!("{}_{}", prefix, name));
    match d.kind {
        ParadigmKind::DecisionMaking => {
            let rows = ppc_decision(d)?;
            write_rows_csv(&rows, &file("heuristic_agreement.csv"))?;
            Ok(json!({"rows": rows.len(), "table": "heuristic_agreement"}))
        }
        ParadigmKind::Learning(_) => {
            let labels = labels.ok_or_else(|| {
                CliError::usage("learning data needs --labels (JSON list of block labels)")
            })?;
            let rows = ppc_learning(d, labels)?;
            write_rows_csv(&rows, &file("learning_accuracy.csv"))?;
            Ok(json!({"rows": rows.len(), "table": "learning_accuracy"}))
        }
        ParadigmKind::Planning => {
            let rows = ppc_planning(d)?;
            write_rows_csv(&rows, &file("stay_probability.csv"))?;
            Ok(json!({"rows": rows.len(), "table": "stay_probability"}))
        }
        ParadigmKind::WorkingMemory => {
            let correct = correct_map_from_rewards(d)?;
            let rows = ppc_rlwm(d, &correct)?;
            write_rows_csv(&rows, &file("wm_learning_curves.csv"))?;
            Ok(json!({"rows": rows.len(), "table": "wm_learning_curves"}))
        }
    }
}

fn cmd_ppc(
    data: &Path,
    kind: &str,
    sim: Option<&Path>,
    labels: Option<&Path>,
    out: &Path,
) -> CliResult {
    let kind = parse_kind(kind)?;
    let d = dataset::load(data, kind, format_of(data))?;
    let labels: Option<Vec<BlockLabel>> = match labels {
        Some(p) => Some(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    ensure_out(out)?;
    let data_summary = ppc_tables(&d, labels.as_deref(), "data", out)?;
    let sim_summary = match sim {
        Some(p) => {
            let s = dataset::load(p, kind, format_of(p))?;
            Some(ppc_tables(&s, labels.as_deref(), "sim", out)?)
        }
        None => None,
    };
    Ok(json!({
        "command": "ppc",
        "data": data_summary,
        "sim": sim_summary,
        "out": out.display().to_string(),
    }))
}

fn cmd_ablate(config: &Path, components: &str, out: &Path) -> CliResult {
    let (fc, cfg, data) = load_file_config(config)?;
    let comps: Vec<Component> = components
        .split(',')
        .map(|s| {
            Component::parse_name(s.trim())
                .ok_or_else(|| CliError::usage(format!("unknown component '{}'", s.trim())))
        })
        .collect::<Result<_, _>>()?;
    let mut factory = || -> Box<dyn ProposalEngine> { Box::new(make_engine(&fc.engine)) };
    let table = ablate(&cfg, &data, &mut factory, &comps)?;
    ensure_out(out)?;
    std::fs::write(
        out.join("ablation.json"),
        serde_json::to_string_pretty(&table)?,
    )?;
    write_rows_csv(&table.rows, &out.join("ablation.csv"))?;
    Ok(json!({
        "command": "ablate",
        "metric": table.metric.label(),
        "full_mean": table.full_mean,
        "rows": table.rows.len(),
        "out": out.display().to_string(),
    }))
}
