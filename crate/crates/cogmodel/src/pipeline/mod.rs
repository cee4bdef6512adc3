//! The guided-generation loop: assemble prompts, obtain candidate programs
//! from a proposal engine, fit them, feed back the best, iterate, and select
//! a final model on held-out data.

pub mod engine;
mod run;

pub use engine::{
    propose, prompt_hash, FlakyEngine, HttpEngine, KeyedEngine, ProposalEngine, ScriptedEngine,
    TEMPERATURE_PRESETS,
};
pub use run::{
    ablate, archive_run, run, AblationRow, AblationTable, CandidateRecord, Component,
    IterationLog, RunConfig, RunResult,
};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::mdl::{self, ModelProgram};

/// Fit metric used for candidate selection and feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Metric {
    #[default]
    Bic,
    Aic,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Bic => "BIC",
            Metric::Aic => "AIC",
        }
    }

    pub fn of(self, fit: &crate::fitting::FitResult) -> f64 {
        match self {
            Metric::Bic => fit.bic,
            Metric::Aic => fit.aic,
        }
    }

    pub fn parse_name(s: &str) -> Option<Metric> {
        match s.to_ascii_lowercase().as_str() {
            "bic" => Some(Metric::Bic),
            "aic" => Some(Metric::Aic),
            _ => None,
        }
    }
}

/// Which prompt components are included. Ablations clear one flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentFlags {
    pub description: bool,
    pub data: bool,
    pub guardrails: bool,
    pub template: bool,
    pub feedback: bool,
}

impl Default for ComponentFlags {
    fn default() -> Self {
        ComponentFlags {
            description: true,
            data: true,
            guardrails: true,
            template: true,
            feedback: true,
        }
    }
}

impl ComponentFlags {
    pub fn any(self) -> bool {
        self.description || self.data || self.guardrails || self.template || self.feedback
    }
}

/// Everything that goes into one prompt, in assembly order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub task_description: String,
    pub data_text: String,
    pub guardrails: String,
    pub template: String,
    pub feedback: Option<String>,
    pub components: ComponentFlags,
}

/// Fixed-order concatenation: description, data, guardrails, template,
/// feedback. Disabled components are omitted wholesale; feedback also
/// requires a message to be present.
pub fn build_prompt(spec: &PromptSpec) -> Result<String, PipelineError> {
    if !spec.components.any() {
        return Err(PipelineError::AllComponentsDisabled);
    }
    let mut sections: Vec<String> = Vec::new();
    if spec.components.description {
        sections.push(spec.task_description.trim_end().to_string());
    }
    if spec.components.data {
        sections.push(spec.data_text.trim_end().to_string());
    }
    if spec.components.guardrails {
        sections.push(spec.guardrails.trim_end().to_string());
    }
    if spec.components.template {
        sections.push(format!(
            "Here is a template for the expected output format:\n\n```mdl model1\n{}\n```",
            spec.template.trim()
        ));
    }
    if spec.components.feedback {
        if let Some(fb) = &spec.feedback {
            sections.push(fb.trim_end().to_string());
        }
    }
    Ok(sections.join("\n\n") + "\n")
}

/// Stock guardrail text instructing the engine how to answer.
pub const DEFAULT_GUARDRAILS: &str = "\
Propose three distinct cognitive models that could have generated these data.
Write each model in the model description language shown in the template.
Rules:
- Emit exactly three fenced code blocks, opened with ```mdl model1,
  ```mdl model2, and ```mdl model3 respectively, and closed with ```.
- Declare every parameter with plausible bounds; rates and weights lie
  between 0 and 1.
- Make sure all of the model parameters are actually being used.
- Watch out for division by 0.
- The three models must use pairwise different parameter-name sets, and must
  not reuse a parameter-name set from the list of previously used names.";

/// One successfully parsed proposal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    /// 1-based position within the response.
    pub index: usize,
    #[serde(skip)]
    pub program: ModelProgram,
    pub raw_text: String,
    pub param_names: BTreeSet<String>,
}

/// A proposal slot: either a candidate or a recorded failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CandidateOutcome {
    Accepted(Candidate),
    Failed { index: usize, reason: String },
}

/// Lowercased, underscore-stripped form used for distinctness checks.
pub fn canonical_name(name: &str) -> String {
    name.to_ascii_lowercase().replace('_', "")
}

fn canonical_set(names: &BTreeSet<String>) -> BTreeSet<String> {
    names.iter().map(|n| canonical_name(n)).collect()
}

/// Pulls fenced ```mdl blocks out of a response and parses each one.
/// Parse and validation failures become failure entries. A block whose
/// canonicalized parameter-name set equals an accepted sibling's or any set
/// in `history` is rejected as a duplicate.
pub fn extract_candidates(
    response: &str,
    history: &[BTreeSet<String>],
) -> Result<Vec<CandidateOutcome>, PipelineError> {
    let blocks = fenced_blocks(response);
    if blocks.is_empty() {
        return Err(PipelineError::NoBlocksFound);
    }
    let canon_history: Vec<BTreeSet<String>> = history.iter().map(canonical_set).collect();
    let mut out: Vec<CandidateOutcome> = Vec::new();
    let mut accepted_sets: Vec<BTreeSet<String>> = Vec::new();
    for (i, raw) in blocks.into_iter().enumerate().take(3) {
        let index = i + 1;
        match mdl::parse(&raw) {
            Ok(program) => {
                let names: BTreeSet<String> = program
                    .params
                    .names()
                    .into_iter()
                    .map(|n| n.to_string())
                    .collect();
                let canon = canonical_set(&names);
                if accepted_sets.contains(&canon) || canon_history.contains(&canon) {
                    out.push(CandidateOutcome::Failed {
                        index,
                        reason: format!(
                            "duplicate parameter set {{{}}}",
                            canon.iter().cloned().collect::<Vec<_>>().join(", ")
                        ),
                    });
                } else {
                    accepted_sets.push(canon);
                    out.push(CandidateOutcome::Accepted(Candidate {
                        index,
                        program,
                        raw_text: raw,
                        param_names: names,
                    }));
                }
            }
            Err(e) => out.push(CandidateOutcome::Failed {
                index,
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Bodies of fenced blocks whose info string starts with "mdl".
fn fenced_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut body: Option<String> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        match &mut body {
            None => {
                if let Some(info) = trimmed.strip_prefix("```") {
                    if info.trim_start().starts_with("mdl") {
                        body = Some(String::new());
                    }
                }
            }
            Some(b) => {
                if trimmed.starts_with("```") {
                    blocks.push(body.take().unwrap());
                } else {
                    b.push_str(line);
                    b.push('\n');
                }
            }
        }
    }
    blocks
}

/// Feedback block for the next iteration: the best model so far, its score,
/// and every parameter name used by any accepted candidate.
pub fn construct_feedback(
    best_source: &str,
    metric: Metric,
    value: f64,
    used_names: &BTreeSet<String>,
) -> String {
    let names = used_names.iter().cloned().collect::<Vec<_>>().join(", ");
    format!(
        "The best model proposed so far is shown below. Its {metric} on held-out \
         data was {value:.2}. Propose three new models that improve on it.\n\n\
         ```mdl model1\n{src}\n```\n\n\
         Previously used parameter names (avoid reusing any of these sets): {names}",
        metric = metric.label(),
        value = value,
        src = best_source.trim(),
        names = names,
    )
}
