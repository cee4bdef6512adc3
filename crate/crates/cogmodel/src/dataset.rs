//! Behavioral datasets for the four task paradigms: loading, validation,
//! participant-level splitting, and serialization to the text format used in
//! proposal prompts.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeedbackKind {
    Partial,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParadigmKind {
    DecisionMaking,
    Learning(FeedbackKind),
    Planning,
    WorkingMemory,
}

impl ParadigmKind {
    /// Number of scored decisions per trial.
    pub fn decisions_per_trial(self) -> usize {
        match self {
            ParadigmKind::Planning => 2,
            _ => 1,
        }
    }

    /// Number of response options at each decision point.
    pub fn n_actions(self) -> usize {
        match self {
            ParadigmKind::WorkingMemory => 3,
            _ => 2,
        }
    }

    pub fn parse_name(s: &str) -> Option<ParadigmKind> {
        match s {
            "decision" | "decision-making" | "dm" => Some(ParadigmKind::DecisionMaking),
            "learning" | "learning-full" => Some(ParadigmKind::Learning(FeedbackKind::Full)),
            "learning-partial" => Some(ParadigmKind::Learning(FeedbackKind::Partial)),
            "planning" => Some(ParadigmKind::Planning),
            "wm" | "working-memory" | "memory" => Some(ParadigmKind::WorkingMemory),
            _ => None,
        }
    }
}

impl fmt::Display for ParadigmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParadigmKind::DecisionMaking => "decision-making",
            ParadigmKind::Learning(FeedbackKind::Full) => "learning-full",
            ParadigmKind::Learning(FeedbackKind::Partial) => "learning-partial",
            ParadigmKind::Planning => "planning",
            ParadigmKind::WorkingMemory => "working-memory",
        };
        f.write_str(s)
    }
}

/// One trial of behavior, tagged by paradigm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "paradigm")]
pub enum TrialRecord {
    Decision {
        features_a: Vec<f64>,
        features_b: Vec<f64>,
        validities: Vec<f64>,
        /// 0 = option A, 1 = option B.
        choice: u8,
    },
    Learning {
        block: usize,
        action: u8,
        reward: i32,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        forgone_reward: Option<i32>,
    },
    Planning {
        action_1: u8,
        state_2: u8,
        action_2: u8,
        reward: u8,
    },
    WorkingMemory {
        block: usize,
        set_size: u8,
        stimulus: u8,
        action: u8,
        reward: u8,
    },
}

impl TrialRecord {
    pub fn matches(&self, kind: ParadigmKind) -> bool {
        matches!(
            (self, kind),
            (TrialRecord::Decision { .. }, ParadigmKind::DecisionMaking)
                | (TrialRecord::Learning { .. }, ParadigmKind::Learning(_))
                | (TrialRecord::Planning { .. }, ParadigmKind::Planning)
                | (TrialRecord::WorkingMemory { .. }, ParadigmKind::WorkingMemory)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantData {
    pub participant_id: String,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub kind: ParadigmKind,
    pub participants: Vec<ParticipantData>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        kind: ParadigmKind,
        participants: Vec<ParticipantData>,
        provenance: &str,
    ) -> Result<Dataset, DataError> {
        let d = Dataset {
            kind,
            participants,
            provenance: provenance.to_string(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn n_participants(&self) -> usize {
        self.participants.len()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.participants.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        for p in &self.participants {
            if p.trials.is_empty() {
                return Err(DataError::Domain(format!(
                    "participant {} has no trials",
                    p.participant_id
                )));
            }
            for t in &p.trials {
                if !t.matches(self.kind) {
                    return Err(DataError::Domain(format!(
                        "participant {} has a trial of the wrong paradigm",
                        p.participant_id
                    )));
                }
                validate_trial(t, self.kind)?;
            }
        }
        Ok(())
    }
}

fn validate_trial(t: &TrialRecord, kind: ParadigmKind) -> Result<(), DataError> {
    match t {
        TrialRecord::Decision {
            features_a,
            features_b,
            validities,
            choice,
        } => {
            if features_a.len() != features_b.len() || features_a.len() != validities.len() {
                return Err(DataError::Domain(
                    "feature and validity vectors must have equal length".into(),
                ));
            }
            if validities.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(DataError::Domain("validities must lie in [0, 1]".into()));
            }
            if *choice > 1 {
                return Err(DataError::Domain(format!("choice {} out of range", choice)));
            }
        }
        TrialRecord::Learning {
            action,
            reward,
            forgone_reward,
            ..
        } => {
            if *action > 1 {
                return Err(DataError::Domain(format!("action {} out of range", action)));
            }
            for r in std::iter::once(reward).chain(forgone_reward.iter()) {
                if ![-1, 0, 1].contains(r) {
                    return Err(DataError::Domain(format!("reward {} out of range", r)));
                }
            }
            match kind {
                ParadigmKind::Learning(FeedbackKind::Full) if forgone_reward.is_none() => {
                    return Err(DataError::SchemaMismatch(
                        "full-feedback learning trial lacks forgone reward".into(),
                    ));
                }
                ParadigmKind::Learning(FeedbackKind::Partial) if forgone_reward.is_some() => {
                    return Err(DataError::SchemaMismatch(
                        "partial-feedback learning trial carries a forgone reward".into(),
                    ));
                }
                _ => {}
            }
        }
        TrialRecord::Planning {
            action_1,
            state_2,
            action_2,
            reward,
        } => {
            if *action_1 > 1 || *state_2 > 1 || *action_2 > 1 || *reward > 1 {
                return Err(DataError::Domain("planning field out of range".into()));
            }
        }
        TrialRecord::WorkingMemory {
            set_size,
            stimulus,
            action,
            reward,
            ..
        } => {
            if ![3, 6].contains(set_size) {
                return Err(DataError::Domain(format!(
                    "set size {} must be 3 or 6",
                    set_size
                )));
            }
            if *stimulus >= *set_size {
                return Err(DataError::Domain(format!(
                    "stimulus {} outside set size {}",
                    stimulus, set_size
                )));
            }
            if *action > 2 {
                return Err(DataError::Domain(format!("action {} out of range", action)));
            }
            if *reward > 1 {
                return Err(DataError::Domain(format!("reward {} out of range", reward)));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FileFormat {
    Csv,
    Json,
}

/// Three-way participant-level split. Fractions must be positive and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub prompt_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            prompt_fraction: 0.2,
            validation_fraction: 0.4,
            test_fraction: 0.4,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let s = self.prompt_fraction + self.validation_fraction + self.test_fraction;
        if self.prompt_fraction <= 0.0 || self.validation_fraction <= 0.0 || self.test_fraction <= 0.0
        {
            return Err(DataError::InvalidSplit("fractions must be positive".into()));
        }
        if (s - 1.0).abs() > 1e-9 {
            return Err(DataError::InvalidSplit(format!("fractions sum to {}", s)));
        }
        Ok(())
    }
}

/// Seeded shuffle followed by contiguous slicing; the partition is by
/// participant and deterministic under the seed.
pub fn split(d: &Dataset, s: &SplitSpec) -> Result<(Dataset, Dataset, Dataset), DataError> {
    s.validate()?;
    let n = d.participants.len();
    let n_prompt = ((n as f64) * s.prompt_fraction).floor() as usize;
    let n_val = ((n as f64) * s.validation_fraction).floor() as usize;
    let n_test = n - n_prompt - n_val;
    if n_prompt == 0 || n_val == 0 || n_test == 0 {
        return Err(DataError::TooFewParticipants { have: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    order.shuffle(&mut rng);

    let pick = |idx: &[usize], role: &str| Dataset {
        kind: d.kind,
        participants: idx.iter().map(|&i| d.participants[i].clone()).collect(),
        provenance: format!("{} [{}]", d.provenance, role),
    };
    Ok((
        pick(&order[..n_prompt], "prompt"),
        pick(&order[n_prompt..n_prompt + n_val], "validation"),
        pick(&order[n_prompt + n_val..], "test"),
    ))
}

/// Serializes a dataset into the per-paradigm prompt line format.
///
/// Trial lines mirror the task text verbatim: learning and decision trials are
/// numbered from 1, planning and working-memory trials from 0.
pub fn to_prompt_text(d: &Dataset, max_participants: usize, max_trials: usize) -> String {
    let mut out = String::new();
    for (k, p) in d.participants.iter().take(max_participants).enumerate() {
        if k > 0 {
            out.push('\n');
        }
        out.push_str(&format!("Data from participant {}:\n", k + 1));
        let mut block_trial_counter: (Option<usize>, usize) = (None, 0);
        for (t, trial) in p.trials.iter().take(max_trials).enumerate() {
            out.push_str(&trial_line(trial, t, &mut block_trial_counter));
            out.push('\n');
        }
    }
    out
}

fn trial_line(t: &TrialRecord, index: usize, block_counter: &mut (Option<usize>, usize)) -> String {
    match t {
        TrialRecord::Decision {
            features_a,
            features_b,
            choice,
            ..
        } => format!(
            "Trial {}: Product A ratings: [{}]. Product B ratings: [{}]. Chosen option: {}",
            index + 1,
            join_features(features_a),
            join_features(features_b),
            if *choice == 0 { "A" } else { "B" }
        ),
        TrialRecord::Learning {
            block,
            action,
            reward,
            forgone_reward,
        } => {
            // Trial numbers restart at 1 within each block.
            if block_counter.0 == Some(*block) {
                block_counter.1 += 1;
            } else {
                *block_counter = (Some(*block), 1);
            }
            let mut line = format!(
                "Block: {}, Trial: {}, Chosen action: {}, Reward for the chosen action: {}",
                block + 1,
                block_counter.1,
                action,
                reward
            );
            if let Some(f) = forgone_reward {
                line.push_str(&format!(", Reward for the unchosen action: {}", f));
            }
            line
        }
        TrialRecord::Planning {
            action_1,
            state_2,
            action_2,
            reward,
        } => {
            let carpet = if *action_1 == 0 { "A" } else { "B" };
            let mountain = if *state_2 == 0 { "Pink" } else { "Blue" };
            let lamp = match (state_2, action_2) {
                (0, 0) => "W",
                (0, _) => "X",
                (_, 0) => "S",
                (_, _) => "T",
            };
            let coins = if *reward == 1 { "1 coin" } else { "0 coins" };
            format!(
                "Trial {}: The participant chose magic carpet {} and ended up on the {} Mountain. The participant rubbed the lamp {} and received {}.",
                index, carpet, mountain, lamp, coins
            )
        }
        TrialRecord::WorkingMemory {
            block,
            set_size,
            stimulus,
            action,
            reward,
        } => {
            if block_counter.0 == Some(*block) {
                block_counter.1 += 1;
            } else {
                *block_counter = (Some(*block), 0);
            }
            format!(
                "Block: {}, Set size:{}, Trial: {}, State: {}, Chosen action: {}, Reward: {}",
                block, set_size, block_counter.1, stimulus, action, reward
            )
        }
    }
}

fn join_features(f: &[f64]) -> String {
    f.iter()
        .map(|x| {
            if x.fract() == 0.0 {
                format!("{}", *x as i64)
            } else {
                format!("{}", x)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn load(path: &Path, kind: ParadigmKind, format: FileFormat) -> Result<Dataset, DataError> {
    match format {
        FileFormat::Json => {
            let text = fs::read_to_string(path)?;
            let d: Dataset = serde_json::from_str(&text)
                .map_err(|e| DataError::SchemaMismatch(e.to_string()))?;
            if d.kind != kind {
                return Err(DataError::SchemaMismatch(format!(
                    "file kind {} does not match requested kind {}",
                    d.kind, kind
                )));
            }
            d.validate()?;
            Ok(d)
        }
        FileFormat::Csv => load_csv(path, kind),
    }
}

pub fn save(d: &Dataset, path: &Path, format: FileFormat) -> Result<(), DataError> {
    match format {
        FileFormat::Json => {
            let text = serde_json::to_string_pretty(d).expect("dataset serializes");
            fs::write(path, text)?;
            Ok(())
        }
        FileFormat::Csv => save_csv(d, path),
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.to_path_buf();
    let stem = p
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    p.set_file_name(format!("{}.validities.json", stem));
    p
}

fn load_csv(path: &Path, kind: ParadigmKind) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::SchemaMismatch(e.to_string()))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let expected = csv_header(kind);
    if headers != expected {
        return Err(DataError::SchemaMismatch(format!(
            "expected columns {:?}, found {:?}",
            expected, headers
        )));
    }
    let validities: Vec<f64> = if kind == ParadigmKind::DecisionMaking {
        let sc = sidecar_path(path);
        if sc.exists() {
            let text = fs::read_to_string(&sc)?;
            serde_json::from_str(&text).map_err(|e| DataError::SchemaMismatch(e.to_string()))?
        } else {
            vec![0.9, 0.8, 0.7, 0.6]
        }
    } else {
        Vec::new()
    };

    let mut participants: Vec<ParticipantData> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| DataError::SchemaMismatch(e.to_string()))?;
        if row.len() != expected.len() {
            return Err(DataError::SchemaMismatch(format!(
                "row has {} fields, expected {}",
                row.len(),
                expected.len()
            )));
        }
        let pid = row.get(0).unwrap().to_string();
        let trial = parse_csv_row(&row, kind, &validities)?;
        match participants.last_mut() {
            Some(p) if p.participant_id == pid => p.trials.push(trial),
            _ => {
                if let Some(existing) = participants.iter_mut().find(|p| p.participant_id == pid) {
                    existing.trials.push(trial);
                } else {
                    participants.push(ParticipantData {
                        participant_id: pid,
                        trials: vec![trial],
                    });
                }
            }
        }
    }
    if participants.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    Dataset::new(kind, participants, &path.display().to_string())
}

fn csv_header(kind: ParadigmKind) -> Vec<String> {
    let cols: Vec<&str> = match kind {
        ParadigmKind::DecisionMaking => vec![
            "participant", "trial", "fa1", "fa2", "fa3", "fa4", "fb1", "fb2", "fb3", "fb4",
            "choice",
        ],
        ParadigmKind::Learning(FeedbackKind::Partial) => {
            vec!["participant", "block", "trial", "action", "reward"]
        }
        ParadigmKind::Learning(FeedbackKind::Full) => {
            vec!["participant", "block", "trial", "action", "reward", "forgone"]
        }
        ParadigmKind::Planning => {
            vec!["participant", "trial", "action1", "state2", "action2", "reward"]
        }
        ParadigmKind::WorkingMemory => vec![
            "participant", "block", "set_size", "trial", "stimulus", "action", "reward",
        ],
    };
    cols.into_iter().map(|c| c.to_string()).collect()
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<T, DataError> {
    row.get(i)
        .ok_or_else(|| DataError::SchemaMismatch(format!("missing column {}", i)))?
        .trim()
        .parse()
        .map_err(|_| DataError::Domain(format!("cannot parse field '{}'", row.get(i).unwrap())))
}

fn parse_csv_row(
    row: &csv::StringRecord,
    kind: ParadigmKind,
    validities: &[f64],
) -> Result<TrialRecord, DataError> {
    Ok(match kind {
        ParadigmKind::DecisionMaking => TrialRecord::Decision {
            features_a: (2..6).map(|i| field(row, i)).collect::<Result<_, _>>()?,
            features_b: (6..10).map(|i| field(row, i)).collect::<Result<_, _>>()?,
            validities: validities.to_vec(),
            choice: field(row, 10)?,
        },
        ParadigmKind::Learning(fb) => TrialRecord::Learning {
            block: field(row, 1)?,
            action: field(row, 3)?,
            reward: field(row, 4)?,
            forgone_reward: match fb {
                FeedbackKind::Full => Some(field(row, 5)?),
                FeedbackKind::Partial => None,
            },
        },
        ParadigmKind::Planning => TrialRecord::Planning {
            action_1: field(row, 2)?,
            state_2: field(row, 3)?,
            action_2: field(row, 4)?,
            reward: field(row, 5)?,
        },
        ParadigmKind::WorkingMemory => TrialRecord::WorkingMemory {
            block: field(row, 1)?,
            set_size: field(row, 2)?,
            stimulus: field(row, 4)?,
            action: field(row, 5)?,
            reward: field(row, 6)?,
        },
    })
}

fn save_csv(d: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(csv_header(d.kind))
        .map_err(|e| DataError::SchemaMismatch(e.to_string()))?;
    for p in &d.participants {
        for (t, trial) in p.trials.iter().enumerate() {
            let mut rec: Vec<String> = vec![p.participant_id.clone()];
            match trial {
                TrialRecord::Decision {
                    features_a,
                    features_b,
                    choice,
                    ..
                } => {
                    rec.push(t.to_string());
                    for f in features_a.iter().chain(features_b.iter()) {
                        rec.push(if f.fract() == 0.0 {
                            format!("{}", *f as i64)
                        } else {
                            format!("{}", f)
                        });
                    }
                    rec.push(choice.to_string());
                }
                TrialRecord::Learning {
                    block,
                    action,
                    reward,
                    forgone_reward,
                } => {
                    rec.push(block.to_string());
                    rec.push(t.to_string());
                    rec.push(action.to_string());
                    rec.push(reward.to_string());
                    if let Some(f) = forgone_reward {
                        rec.push(f.to_string());
                    }
                }
                TrialRecord::Planning {
                    action_1,
                    state_2,
                    action_2,
                    reward,
                } => {
                    rec.push(t.to_string());
                    rec.push(action_1.to_string());
                    rec.push(state_2.to_string());
                    rec.push(action_2.to_string());
                    rec.push(reward.to_string());
                }
                TrialRecord::WorkingMemory {
                    block,
                    set_size,
                    stimulus,
                    action,
                    reward,
                } => {
                    rec.push(block.to_string());
                    rec.push(set_size.to_string());
                    rec.push(t.to_string());
                    rec.push(stimulus.to_string());
                    rec.push(action.to_string());
                    rec.push(reward.to_string());
                }
            }
            w.write_record(&rec)
                .map_err(|e| DataError::SchemaMismatch(e.to_string()))?;
        }
    }
    w.flush()?;
    if d.kind == ParadigmKind::DecisionMaking {
        // validities are dataset-level; store them next to the table
        let v = d
            .participants
            .first()
            .and_then(|p| p.trials.first())
            .and_then(|t| match t {
                TrialRecord::Decision { validities, .. } => Some(validities.clone()),
                _ => None,
            })
            .unwrap_or_default();
        fs::write(
            sidecar_path(path),
            serde_json::to_string(&v).expect("validities serialize"),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn learning_dataset(n_participants: usize, full: bool) -> Dataset {
        let participants = (0..n_participants)
            .map(|i| ParticipantData {
                participant_id: format!("p{}", i + 1),
                trials: (0..4)
                    .map(|t| TrialRecord::Learning {
                        block: t / 2,
                        action: (t % 2) as u8,
                        reward: if t % 2 == 0 { 1 } else { -1 },
                        forgone_reward: if full { Some(1) } else { None },
                    })
                    .collect(),
            })
            .collect();
        let kind = ParadigmKind::Learning(if full {
            FeedbackKind::Full
        } else {
            FeedbackKind::Partial
        });
        Dataset::new(kind, participants, "test").unwrap()
    }

    #[test]
    fn wm_csv_row_parses_per_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wm.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "participant,block,set_size,trial,stimulus,action,reward").unwrap();
        writeln!(f, "p1,0,3,0,0,0,1").unwrap();
        drop(f);
        let d = load(&path, ParadigmKind::WorkingMemory, FileFormat::Csv).unwrap();
        assert_eq!(
            d.participants[0].trials[0],
            TrialRecord::WorkingMemory {
                block: 0,
                set_size: 3,
                stimulus: 0,
                action: 0,
                reward: 1
            }
        );
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wm.csv");
        std::fs::write(&path, "participant,block,set_size,trial,stimulus,action,reward\n").unwrap();
        let err = load(&path, ParadigmKind::WorkingMemory, FileFormat::Csv).unwrap_err();
        assert!(matches!(err, DataError::EmptyDataset));
    }

    #[test]
    fn full_feedback_without_forgone_column_is_schema_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("learn.csv");
        std::fs::write(&path, "participant,block,trial,action,reward\np1,0,0,0,1\n").unwrap();
        let err = load(&path, ParadigmKind::Learning(FeedbackKind::Full), FileFormat::Csv)
            .unwrap_err();
        assert!(matches!(err, DataError::SchemaMismatch(_)));
    }

    #[test]
    fn out_of_range_action_is_domain_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("learn.csv");
        std::fs::write(&path, "participant,block,trial,action,reward\np1,0,0,5,1\n").unwrap();
        let err = load(&path, ParadigmKind::Learning(FeedbackKind::Partial), FileFormat::Csv)
            .unwrap_err();
        assert!(matches!(err, DataError::Domain(_)));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = learning_dataset(10, false);
        let spec = SplitSpec {
            prompt_fraction: 0.2,
            validation_fraction: 0.4,
            test_fraction: 0.4,
            seed: 7,
        };
        let (a, b, c) = split(&d, &spec).unwrap();
        assert_eq!(
            (a.n_participants(), b.n_participants(), c.n_participants()),
            (2, 4, 4)
        );
        let (a2, b2, c2) = split(&d, &spec).unwrap();
        assert_eq!(a.participants, a2.participants);
        assert_eq!(b.participants, b2.participants);
        assert_eq!(c.participants, c2.participants);
        // partition: disjoint union covering every id
        let mut ids: Vec<&str> = a
            .participants
            .iter()
            .chain(&b.participants)
            .chain(&c.participants)
            .map(|p| p.participant_id.as_str())
            .collect();
        ids.sort_unstable();
        let mut expected: Vec<String> = (0..10).map(|i| format!("p{}", i + 1)).collect();
        expected.sort();
        assert_eq!(ids, expected.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    }

    #[test]
    fn split_too_few_participants() {
        let d = learning_dataset(2, false);
        let err = split(&d, &SplitSpec::default()).unwrap_err();
        assert!(matches!(err, DataError::TooFewParticipants { have: 2 }));
    }

    #[test]
    fn learning_prompt_line_format() {
        let d = Dataset::new(
            ParadigmKind::Learning(FeedbackKind::Full),
            vec![ParticipantData {
                participant_id: "p1".into(),
                trials: vec![TrialRecord::Learning {
                    block: 0,
                    action: 1,
                    reward: -1,
                    forgone_reward: Some(1),
                }],
            }],
            "test",
        )
        .unwrap();
        let text = to_prompt_text(&d, 10, 10);
        assert!(text.contains("Data from participant 1:"));
        assert!(text.contains(
            "Block: 1, Trial: 1, Chosen action: 1, Reward for the chosen action: -1, Reward for the unchosen action: 1"
        ));
    }

    #[test]
    fn decision_prompt_line_format() {
        let d = Dataset::new(
            ParadigmKind::DecisionMaking,
            vec![ParticipantData {
                participant_id: "p1".into(),
                trials: vec![TrialRecord::Decision {
                    features_a: vec![1.0, 1.0, 1.0, 1.0],
                    features_b: vec![0.0, 0.0, 1.0, 1.0],
                    validities: vec![0.9, 0.8, 0.7, 0.6],
                    choice: 0,
                }],
            }],
            "test",
        )
        .unwrap();
        let text = to_prompt_text(&d, 10, 10);
        assert!(text.contains(
            "Trial 1: Product A ratings: [1 1 1 1]. Product B ratings: [0 0 1 1]. Chosen option: A"
        ));
    }

    #[test]
    fn zero_max_trials_emits_headers_only() {
        let d = learning_dataset(2, false);
        let text = to_prompt_text(&d, 10, 0);
        assert!(text.contains("Data from participant 1:"));
        assert!(!text.contains("Block:"));
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = learning_dataset(3, true);
        let path = dir.path().join("d.json");
        save(&d, &path, FileFormat::Json).unwrap();
        let d2 = load(&path, d.kind, FileFormat::Json).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn csv_round_trip_learning() {
        let dir = tempfile::tempdir().unwrap();
        let d = learning_dataset(3, true);
        let path = dir.path().join("d.csv");
        save(&d, &path, FileFormat::Csv).unwrap();
        let d2 = load(&path, d.kind, FileFormat::Csv).unwrap();
        assert_eq!(d.kind, d2.kind);
        assert_eq!(d.participants, d2.participants);
    }

    #[test]
    fn csv_round_trip_decision() {
        let dir = tempfile::tempdir().unwrap();
        let d = Dataset::new(
            ParadigmKind::DecisionMaking,
            vec![ParticipantData {
                participant_id: "p1".into(),
                trials: vec![TrialRecord::Decision {
                    features_a: vec![1.0, 0.0, 0.0, 0.0],
                    features_b: vec![0.0, 0.0, 0.0, 1.0],
                    validities: vec![0.9, 0.8, 0.7, 0.6],
                    choice: 0,
                }],
            }],
            "test",
        )
        .unwrap();
        let path = dir.path().join("dm.csv");
        save(&d, &path, FileFormat::Csv).unwrap();
        let d2 = load(&path, d.kind, FileFormat::Csv).unwrap();
        assert_eq!(d.participants, d2.participants);
    }
}
