//! The run loop itself: iterate prompt, proposal, extraction, fitting, and
//! feedback; select a final model on the test split; ablation harness;
//! on-disk archiving of a finished run.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::baselines::BaselineKind;
use crate::comparison::{compare, ComparisonReport};
use crate::dataset::{split, to_prompt_text, Dataset, SplitSpec};
use crate::error::PipelineError;
use crate::fitting::{fit_all, BaselineModel, FitResult, MdlModel};
use crate::mdl;
use crate::pipeline::{
    build_prompt, construct_feedback, engine::propose, extract_candidates, Candidate,
    CandidateOutcome, ComponentFlags, Metric, PromptSpec, ProposalEngine, DEFAULT_GUARDRAILS,
};

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub run_id: String,
    pub split: SplitSpec,
    pub metric: Metric,
    pub iterations: usize,
    pub candidates_per_iter: usize,
    pub max_retries: usize,
    pub restarts: usize,
    pub temperature: f64,
    pub seed: u64,
    /// Names of baseline models compared against the winner on the test split.
    pub baselines: Vec<BaselineKind>,
    pub task_description: String,
    pub guardrails: String,
    pub template: String,
    pub max_prompt_participants: usize,
    pub max_prompt_trials: usize,
    pub components: ComponentFlags,
    pub mc_samples: usize,
    /// Retry backoff base; zero in tests.
    #[serde(skip)]
    pub backoff: Duration,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run_id: "run".into(),
            split: SplitSpec::default(),
            metric: Metric::Bic,
            iterations: 10,
            candidates_per_iter: 3,
            max_retries: 3,
            restarts: 20,
            temperature: 0.2,
            seed: 0,
            baselines: vec![BaselineKind::Rw],
            task_description: String::new(),
            guardrails: DEFAULT_GUARDRAILS.into(),
            template: crate::mdl::transcriptions::RW.into(),
            max_prompt_participants: 10,
            max_prompt_trials: 1000,
            components: ComponentFlags::default(),
            mc_samples: 100_000,
            backoff: Duration::from_millis(500),
        }
    }
}

/// What happened to one proposal slot, in archivable form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRecord {
    pub index: usize,
    /// Pretty-printed source when the block parsed.
    pub source: Option<String>,
    pub error: Option<String>,
    pub param_names: Vec<String>,
    /// Mean metric on the validation split, when fitted.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub prompt: String,
    pub response: String,
    pub candidates: Vec<CandidateRecord>,
    pub fits: Vec<FitResult>,
    pub best_so_far: Option<(String, f64)>,
    pub feedback_sent: Option<String>,
    pub retries: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub run_id: String,
    pub metric: Metric,
    pub iterations: Vec<IterationLog>,
    pub best_model_id: String,
    pub best_model_source: String,
    pub best_validation_score: f64,
    pub test_fits: Vec<FitResult>,
    pub comparison: ComparisonReport,
}

fn mean_metric(metric: Metric, fits: &[FitResult]) -> f64 {
    if fits.is_empty() {
        return f64::INFINITY;
    }
    let sum: f64 = fits.iter().map(|f| metric.of(f)).sum();
    sum / fits.len() as f64
}

/// Serialized fragments of the test split that must never appear in a
/// prompt: raw participant ids and each participant's full trial block.
fn leak_signatures(test: &Dataset) -> Vec<String> {
    let mut sigs = Vec::new();
    for p in &test.participants {
        sigs.push(p.participant_id.clone());
        let solo = Dataset {
            kind: test.kind,
            participants: vec![p.clone()],
            provenance: test.provenance.clone(),
        };
        let text = to_prompt_text(&solo, 1, usize::MAX);
        // drop the generic "Data from participant 1:" header
        let block: String = text
            .lines()
            .skip(1)
            .collect::<Vec<_>>()
            .join("\n");
        if block.lines().count() > 1 {
            sigs.push(block);
        }
    }
    sigs
}

fn audit_prompt(prompt: &str, signatures: &[String]) -> Result<(), PipelineError> {
    for sig in signatures {
        if !sig.is_empty() && prompt.contains(sig.as_str()) {
            let head: String = sig.chars().take(60).collect();
            return Err(PipelineError::TestDataLeak(head));
        }
    }
    Ok(())
}

/// Executes the full guided-generation loop against one dataset.
pub fn run(
    config: &RunConfig,
    data: &Dataset,
    engine: &mut dyn ProposalEngine,
) -> Result<RunResult, PipelineError> {
    if config.iterations == 0 {
        return Err(PipelineError::Config("iterations must be positive".into()));
    }
    if config.baselines.is_empty() {
        return Err(PipelineError::Config(
            "at least one baseline is required for the final comparison".into(),
        ));
    }
    let (prompt_d, val_d, test_d) = split(data, &config.split)?;
    let signatures = leak_signatures(&test_d);
    let data_text = to_prompt_text(
        &prompt_d,
        config.max_prompt_participants,
        config.max_prompt_trials,
    );

    let mut history: Vec<BTreeSet<String>> = Vec::new();
    let mut used_names: BTreeSet<String> = BTreeSet::new();
    let mut best: Option<(Candidate, String, f64)> = None; // candidate, model id, score
    let mut logs: Vec<IterationLog> = Vec::new();

    for it in 1..=config.iterations {
        let feedback = match (&best, it > 1) {
            (Some((c, _, score)), true) => Some(construct_feedback(
                &c.program.print(),
                config.metric,
                *score,
                &used_names,
            )),
            _ => None,
        };
        let spec = PromptSpec {
            task_description: config.task_description.clone(),
            data_text: data_text.clone(),
            guardrails: config.guardrails.clone(),
            template: config.template.clone(),
            feedback: feedback.clone(),
            components: config.components,
        };
        let prompt = build_prompt(&spec)?;
        audit_prompt(&prompt, &signatures)?;

        // one initial attempt plus max_retries restarts of the iteration
        let mut retries = 0usize;
        let (response, outcomes) = loop {
            let response = propose(
                engine,
                &prompt,
                config.temperature,
                config.max_retries,
                config.backoff,
            )?;
            let attempt = match extract_candidates(&response, &history) {
                Ok(outcomes)
                    if outcomes
                        .iter()
                        .any(|o| matches!(o, CandidateOutcome::Accepted(_))) =>
                {
                    Some(outcomes)
                }
                Ok(_) => None,
                Err(PipelineError::NoBlocksFound) => None,
                Err(e) => return Err(e),
            };
            match attempt {
                Some(outcomes) => break (response, outcomes),
                None => {
                    retries += 1;
                    if retries > config.max_retries {
                        return Err(PipelineError::RunAborted {
                            iteration: it,
                            cause: "no usable candidate after retries".into(),
                        });
                    }
                }
            }
        };

        let mut records: Vec<CandidateRecord> = Vec::new();
        let mut fits: Vec<FitResult> = Vec::new();
        for outcome in outcomes {
            match outcome {
                CandidateOutcome::Failed { index, reason } => records.push(CandidateRecord {
                    index,
                    source: None,
                    error: Some(reason),
                    param_names: Vec::new(),
                    score: None,
                }),
                CandidateOutcome::Accepted(c) => {
                    if let Err(e) = mdl::check_compat(&c.program, data.kind) {
                        records.push(CandidateRecord {
                            index: c.index,
                            source: Some(c.program.print()),
                            error: Some(e.to_string()),
                            param_names: c.param_names.iter().cloned().collect(),
                            score: None,
                        });
                        continue;
                    }
                    let model_id = format!("iter{}_model{}", it, c.index);
                    let model = MdlModel::new(model_id.clone(), c.program.clone());
                    let cand_fits = fit_all(&model, &val_d, config.restarts, config.seed);
                    let score = mean_metric(config.metric, &cand_fits);
                    records.push(CandidateRecord {
                        index: c.index,
                        source: Some(c.program.print()),
                        error: None,
                        param_names: c.param_names.iter().cloned().collect(),
                        score: Some(score),
                    });
                    fits.extend(cand_fits);
                    history.push(c.param_names.clone());
                    used_names.extend(c.param_names.iter().cloned());
                    if score.is_finite()
                        && best.as_ref().map_or(true, |(_, _, s)| score < *s)
                    {
                        best = Some((c, model_id, score));
                    }
                }
            }
        }

        logs.push(IterationLog {
            iteration: it,
            prompt,
            response,
            candidates: records,
            fits,
            best_so_far: best.as_ref().map(|(_, id, s)| (id.clone(), *s)),
            feedback_sent: feedback,
            retries,
        });
    }

    let (best_c, best_id, best_score) = best.ok_or(PipelineError::RunAborted {
        iteration: config.iterations,
        cause: "no candidate ever produced a finite score".into(),
    })?;

    let best_model = MdlModel::new(best_id.clone(), best_c.program.clone());
    let test_fits = fit_all(&best_model, &test_d, config.restarts, config.seed);
    let mut all_fits: Vec<Vec<FitResult>> = vec![test_fits.clone()];
    for b in &config.baselines {
        let m = BaselineModel(*b);
        all_fits.push(fit_all(&m, &test_d, config.restarts, config.seed));
    }
    let comparison = compare(&all_fits, config.mc_samples, config.seed)?;

    Ok(RunResult {
        run_id: config.run_id.clone(),
        metric: config.metric,
        iterations: logs,
        best_model_id: best_id,
        best_model_source: best_c.program.print(),
        best_validation_score: best_score,
        test_fits,
        comparison,
    })
}

/// Prompt components that can be ablated one at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Component {
    Feedback,
    Data,
    Description,
    Template,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Feedback,
        Component::Data,
        Component::Description,
        Component::Template,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Feedback => "feedback",
            Component::Data => "data",
            Component::Description => "description",
            Component::Template => "template",
        }
    }

    pub fn parse_name(s: &str) -> Option<Component> {
        match s.to_ascii_lowercase().as_str() {
            "feedback" => Some(Component::Feedback),
            "data" => Some(Component::Data),
            "description" => Some(Component::Description),
            "template" => Some(Component::Template),
            _ => None,
        }
    }

    fn disable(self, flags: &mut ComponentFlags) {
        match self {
            Component::Feedback => flags.feedback = false,
            Component::Data => flags.data = false,
            Component::Description => flags.description = false,
            Component::Template => flags.template = false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub component: String,
    pub mean_test_metric: f64,
    pub delta_vs_full: f64,
    /// Paired t of ablated minus full test metric across participants;
    /// positive t means the ablation hurt.
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationTable {
    pub metric: Metric,
    pub full_mean: f64,
    pub rows: Vec<AblationRow>,
}

/// Paired one-sided t-test of `a - b`; returns (t, p) with p small when
/// the mean difference is positive.
fn paired_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (0.0, 0.5);
    }
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let sd = var.sqrt();
    if sd < 1e-12 {
        return if mean.abs() < 1e-12 {
            (0.0, 0.5)
        } else if mean > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (f64::NEG_INFINITY, 1.0)
        };
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, n as f64 - 1.0).expect("valid dof");
    (t, 1.0 - dist.cdf(t))
}

/// Reruns the full loop once per ablated component, each with a fresh
/// engine, and summarizes test-split damage relative to the intact prompt.
pub fn ablate(
    config: &RunConfig,
    data: &Dataset,
    make_engine: &mut dyn FnMut() -> Box<dyn ProposalEngine>,
    components: &[Component],
) -> Result<AblationTable, PipelineError> {
    if components.is_empty() {
        return Err(PipelineError::Config("no components to ablate".into()));
    }
    let mut full_engine = make_engine();
    let full = run(config, data, full_engine.as_mut())?;
    let full_metrics: Vec<f64> = full
        .test_fits
        .iter()
        .map(|f| config.metric.of(f))
        .collect();
    let full_mean = mean_metric(config.metric, &full.test_fits);

    let mut rows = Vec::new();
    for comp in components {
        let mut cfg = config.clone();
        cfg.run_id = format!("{}-ablate-{}", config.run_id, comp.name());
        comp.disable(&mut cfg.components);
        let mut eng = make_engine();
        let res = run(&cfg, data, eng.as_mut())?;
        let metrics: Vec<f64> = res.test_fits.iter().map(|f| config.metric.of(f)).collect();
        let mean = mean_metric(config.metric, &res.test_fits);
        let (t, p) = paired_t(&metrics, &full_metrics);
        rows.push(AblationRow {
            component: comp.name().to_string(),
            mean_test_metric: mean,
            delta_vs_full: mean - full_mean,
            t_stat: t,
            p_value: p,
        });
    }
    Ok(AblationTable {
        metric: config.metric,
        full_mean,
        rows,
    })
}

/// Writes a finished run as a directory: prompts/NN.txt, responses/NN.txt,
/// candidates/NN_k.mdl, fits.jsonl (test fits), report.json (everything).
pub fn archive_run(result: &RunResult, dir: &Path) -> std::io::Result<()> {
    let prompts = dir.join("prompts");
    let responses = dir.join("responses");
    let candidates = dir.join("candidates");
    std::fs::create_dir_all(&prompts)?;
    std::fs::create_dir_all(&responses)?;
    std::fs::create_dir_all(&candidates)?;
    for log in &result.iterations {
        let nn = format!("{:02}", log.iteration);
        std::fs::write(prompts.join(format!("{}.txt", nn)), &log.prompt)?;
        std::fs::write(responses.join(format!("{}.txt", nn)), &log.response)?;
        for c in &log.candidates {
            if let Some(src) = &c.source {
                std::fs::write(candidates.join(format!("{}_{}.mdl", nn, c.index)), src)?;
            }
        }
    }
    crate::fitting::write_jsonl(&result.test_fits, &dir.join("fits.jsonl"))?;
    let report = serde_json::to_string_pretty(result)?;
    std::fs::write(dir.join("report.json"), report)?;
    Ok(())
}
