//! Posterior predictive checks: paradigm-specific summary statistics
//! computed identically on human and simulated datasets.

use crate::baselines::{heuristic_choice, HeuristicKind, HeuristicOutcome};
use crate::dataset::{Dataset, ParadigmKind, TrialRecord};
use crate::error::PpcError;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

fn expect_kind(d: &Dataset, want: &str, ok: bool) -> Result<(), PpcError> {
    if ok {
        Ok(())
    } else {
        Err(PpcError::ParadigmMismatch {
            expected: want.into(),
            got: format!("{:?}", d.kind),
        })
    }
}

/// Fraction of a participant's choices each deterministic heuristic
/// predicts. Trials where a heuristic ties are excluded from that
/// heuristic's denominator, so each fraction carries its own count.
#[derive(Debug, Clone, Serialize)]
pub struct DecisionPpcRow {
    pub participant: String,
    pub ttb: Option<f64>,
    pub ttb_n: usize,
    pub eqw: Option<f64>,
    pub eqw_n: usize,
    pub wadd: Option<f64>,
    pub wadd_n: usize,
}

pub fn ppc_decision(d: &Dataset) -> Result<Vec<DecisionPpcRow>, PpcError> {
    expect_kind(d, "decision making", d.kind == ParadigmKind::DecisionMaking)?;
    let heuristics = [HeuristicKind::Ttb, HeuristicKind::Eqw, HeuristicKind::Wadd];
    let mut rows = Vec::with_capacity(d.participants.len());
    for p in &d.participants {
        let mut hits = [0usize; 3];
        let mut ns = [0usize; 3];
        for t in &p.trials {
            let TrialRecord::Decision {
                features_a,
                features_b,
                validities,
                choice,
            } = t
            else {
                continue;
            };
            for (i, &h) in heuristics.iter().enumerate() {
                let out = heuristic_choice(h, features_a, features_b, validities)
                    .map_err(|e| PpcError::ParadigmMismatch {
                        expected: "well-formed decision trial".into(),
                        got: e.to_string(),
                    })?;
                let pred = match out {
                    HeuristicOutcome::A => 0u8,
                    HeuristicOutcome::B => 1,
                    HeuristicOutcome::Tie => continue,
                };
                ns[i] += 1;
                hits[i] += usize::from(pred == *choice);
            }
        }
        let frac = |i: usize| (ns[i] > 0).then(|| hits[i] as f64 / ns[i] as f64);
        rows.push(DecisionPpcRow {
            participant: p.participant_id.clone(),
            ttb: frac(0),
            ttb_n: ns[0],
            eqw: frac(1),
            eqw_n: ns[1],
            wadd: frac(2),
            wadd_n: ns[2],
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardLevel {
    High,
    Low,
}

/// Ground truth about one learning block: its reward level and which action
/// has the higher expected value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlockLabel {
    pub level: RewardLevel,
    pub better_action: u8,
}

/// Accuracy per reward level and block phase. Phases split each block into
/// thirds: "early" is the first third, "late" the last.
#[derive(Debug, Clone, Serialize)]
pub struct LearningPpcRow {
    pub participant: String,
    pub level: RewardLevel,
    pub phase: &'static str,
    pub accuracy: Option<f64>,
    pub n: usize,
}

pub fn ppc_learning(
    d: &Dataset,
    labels: &[BlockLabel],
) -> Result<Vec<LearningPpcRow>, PpcError> {
    expect_kind(
        d,
        "learning",
        matches!(d.kind, ParadigmKind::Learning(_)),
    )?;
    let mut rows = Vec::new();
    for p in &d.participants {
        // group trial indices by block, preserving order
        let mut blocks: Vec<(usize, Vec<(u8, usize)>)> = Vec::new();
        for t in &p.trials {
            let TrialRecord::Learning { block, action, .. } = t else {
                continue;
            };
            match blocks.last_mut() {
                Some((b, v)) if *b == *block => v.push((*action, 0)),
                _ => blocks.push((*block, vec![(*action, 0)])),
            }
        }
        // cells: [level][phase] -> (hits, n)
        let mut cells = [[(0usize, 0usize); 2]; 2];
        for (block, actions) in &blocks {
            let label = labels
                .get(*block)
                .ok_or(PpcError::MissingLabels(*block))?;
            let li = match label.level {
                RewardLevel::High => 0,
                RewardLevel::Low => 1,
            };
            let third = actions.len() / 3;
            if third == 0 {
                continue;
            }
            for (i, (a, _)) in actions.iter().enumerate() {
                let phase = if i < third {
                    0
                } else if i >= actions.len() - third {
                    1
                } else {
                    continue;
                };
                cells[li][phase].1 += 1;
                cells[li][phase].0 += usize::from(*a == label.better_action);
            }
        }
        for (li, level) in [(0, RewardLevel::High), (1, RewardLevel::Low)] {
            for (pi, phase) in [(0, "early"), (1, "late")] {
                let (hits, n) = cells[li][pi];
                rows.push(LearningPpcRow {
                    participant: p.participant_id.clone(),
                    level,
                    phase,
                    accuracy: (n > 0).then(|| hits as f64 / n as f64),
                    n,
                });
            }
        }
    }
    Ok(rows)
}

/// Probability of repeating the previous first-stage action, split by the
/// previous trial's outcome and transition type. A transition is common when
/// the second-stage state matches the first-stage action.
#[derive(Debug, Clone, Serialize)]
pub struct StayTableRow {
    pub participant: String,
    /// stay[rewarded][common]; None when that cell never occurred.
    pub stay: [[Option<f64>; 2]; 2],
    pub n: [[usize; 2]; 2],
}

pub fn ppc_planning(d: &Dataset) -> Result<Vec<StayTableRow>, PpcError> {
    expect_kind(d, "planning", d.kind == ParadigmKind::Planning)?;
    let mut rows = Vec::with_capacity(d.participants.len());
    for p in &d.participants {
        let mut counts = [[(0usize, 0usize); 2]; 2];
        for w in p.trials.windows(2) {
            let (TrialRecord::Planning {
                action_1: a1,
                state_2,
                reward,
                ..
            }, TrialRecord::Planning { action_1: next_a1, .. }) = (&w[0], &w[1])
            else {
                continue;
            };
            let ri = usize::from(*reward == 1);
            let ci = usize::from(*state_2 == *a1);
            counts[ri][ci].1 += 1;
            counts[ri][ci].0 += usize::from(next_a1 == a1);
        }
        let mut stay = [[None; 2]; 2];
        let mut n = [[0usize; 2]; 2];
        for ri in 0..2 {
            for ci in 0..2 {
                let (hits, total) = counts[ri][ci];
                n[ri][ci] = total;
                stay[ri][ci] = (total > 0).then(|| hits as f64 / total as f64);
            }
        }
        rows.push(StayTableRow {
            participant: p.participant_id.clone(),
            stay,
            n,
        });
    }
    Ok(rows)
}

/// Pools stay tables across participants, weighting by cell counts.
pub fn pooled_stay_table(rows: &[StayTableRow]) -> [[Option<f64>; 2]; 2] {
    let mut out = [[None; 2]; 2];
    for ri in 0..2 {
        for ci in 0..2 {
            let total: usize = rows.iter().map(|r| r.n[ri][ci]).sum();
            if total == 0 {
                continue;
            }
            let hits: f64 = rows
                .iter()
                .filter_map(|r| r.stay[ri][ci].map(|s| s * r.n[ri][ci] as f64))
                .sum();
            out[ri][ci] = Some(hits / total as f64);
        }
    }
    out
}

/// Correct action per (participant, block, stimulus).
pub type CorrectMap = HashMap<(String, usize, usize), usize>;

/// Builds a correct map for data simulated on a known schedule, where the
/// reward signal directly marks correctness.
pub fn correct_map_from_rewards(d: &Dataset) -> Result<CorrectMap, PpcError> {
    let mut map = CorrectMap::new();
    for p in &d.participants {
        for t in &p.trials {
            let TrialRecord::WorkingMemory {
                block,
                stimulus,
                action,
                reward,
                ..
            } = t
            else {
                continue;
            };
            if *reward == 1 {
                map.insert(
                    (p.participant_id.clone(), *block, *stimulus as usize),
                    *action as usize,
                );
            }
        }
    }
    Ok(map)
}

/// Accuracy of one participant on one set size as a function of how many
/// times the stimulus has been seen (1-based iteration).
#[derive(Debug, Clone, Serialize)]
pub struct RlwmCurveRow {
    pub participant: String,
    pub set_size: usize,
    pub accuracy: Vec<Option<f64>>,
    pub n: Vec<usize>,
}

pub fn ppc_rlwm(d: &Dataset, correct: &CorrectMap) -> Result<Vec<RlwmCurveRow>, PpcError> {
    expect_kind(d, "working memory", d.kind == ParadigmKind::WorkingMemory)?;
    let mut rows = Vec::new();
    for p in &d.participants {
        // (set_size) -> per-iteration (hits, n)
        let mut per_size: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &p.trials {
            let TrialRecord::WorkingMemory {
                block,
                set_size,
                stimulus,
                action,
                ..
            } = t
            else {
                continue;
            };
            let iter = seen.entry((*block, *stimulus as usize)).or_insert(0);
            *iter += 1;
            let idx = *iter - 1;
            let key = (p.participant_id.clone(), *block, *stimulus as usize);
            let &right = correct.get(&key).ok_or_else(|| PpcError::MissingCorrectMap {
                participant: p.participant_id.clone(),
                block: *block,
                stimulus: *stimulus as usize,
            })?;
            let cell = per_size.entry(*set_size as usize).or_default();
            if cell.len() <= idx {
                cell.resize(idx + 1, (0, 0));
            }
            cell[idx].1 += 1;
            cell[idx].0 += usize::from(*action as usize == right);
        }
        let mut sizes: Vec<usize> = per_size.keys().copied().collect();
        sizes.sort_unstable();
        for s in sizes {
            let cells = &per_size[&s];
            rows.push(RlwmCurveRow {
                participant: p.participant_id.clone(),
                set_size: s,
                accuracy: cells
                    .iter()
                    .map(|&(h, n)| (n > 0).then(|| h as f64 / n as f64))
                    .collect(),
                n: cells.iter().map(|&(_, n)| n).collect(),
            });
        }
    }
    Ok(rows)
}

/// Pools the per-participant curves for one set size, weighting by counts.
pub fn pooled_rlwm_curve(rows: &[RlwmCurveRow], set_size: usize) -> Vec<Option<f64>> {
    let len = rows
        .iter()
        .filter(|r| r.set_size == set_size)
        .map(|r| r.accuracy.len())
        .max()
        .unwrap_or(0);
    (0..len)
        .map(|i| {
            let mut hits = 0.0;
            let mut n = 0usize;
            for r in rows.iter().filter(|r| r.set_size == set_size) {
                if let Some(Some(a)) = r.accuracy.get(i) {
                    hits += a * r.n[i] as f64;
                    n += r.n[i];
                }
            }
            (n > 0).then(|| hits / n as f64)
        })
        .collect()
}

/// Writes any row collection as tidy CSV with serde-derived headers.
pub fn write_rows_csv<T: Serialize>(rows: &[T], path: &Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}
