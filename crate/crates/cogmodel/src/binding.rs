//! Trial-level variable bindings shared by the MDL interpreter and the native
//! baseline models. Each paradigm exposes a fixed set of named slots; scoring
//! binds them from recorded trials, simulation binds them from a task
//! environment as decisions unfold.

use crate::dataset::{FeedbackKind, ParadigmKind, TrialRecord};
use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Action,
    Reward,
    ForgoneReward,
    Choice,
    FeaturesA,
    FeaturesB,
    Validities,
    Action1,
    State2,
    Action2,
    Stimulus,
    SetSize,
    Block,
}

pub const N_SLOTS: usize = 13;

pub const SLOT_NAMES: [(&str, Slot); N_SLOTS] = [
    ("action", Slot::Action),
    ("reward", Slot::Reward),
    ("forgone_reward", Slot::ForgoneReward),
    ("choice", Slot::Choice),
    ("features_a", Slot::FeaturesA),
    ("features_b", Slot::FeaturesB),
    ("validities", Slot::Validities),
    ("action_1", Slot::Action1),
    ("state_2", Slot::State2),
    ("action_2", Slot::Action2),
    ("stimulus", Slot::Stimulus),
    ("set_size", Slot::SetSize),
    ("block", Slot::Block),
];

impl Slot {
    pub fn index(self) -> usize {
        SLOT_NAMES.iter().position(|&(_, s)| s == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        SLOT_NAMES[self.index()].0
    }

    pub fn from_name(name: &str) -> Option<Slot> {
        SLOT_NAMES
            .iter()
            .find(|&&(n, _)| n == name)
            .map(|&(_, s)| s)
    }
}

/// Runtime value: scalar, vector, or matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
}

impl Value {
    pub fn scalar(&self) -> Result<f64, EvalError> {
        match self {
            Value::Scalar(x) => Ok(*x),
            _ => Err(EvalError::Numerics("expected a scalar value".into())),
        }
    }

    pub fn vector(&self) -> Result<&[f64], EvalError> {
        match self {
            Value::Vector(v) => Ok(v),
            _ => Err(EvalError::Numerics("expected a vector value".into())),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Bindings {
    slots: [Option<Value>; N_SLOTS],
}

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    pub fn set(&mut self, slot: Slot, value: Value) {
        self.slots[slot.index()] = Some(value);
    }

    pub fn clear(&mut self) {
        self.slots = Default::default();
    }

    pub fn get(&self, slot: Slot) -> Result<&Value, EvalError> {
        self.slots[slot.index()]
            .as_ref()
            .ok_or_else(|| EvalError::Binding(format!("'{}' is not bound here", slot.name())))
    }

    pub fn maybe(&self, slot: Slot) -> Option<&Value> {
        self.slots[slot.index()].as_ref()
    }

    pub fn scalar(&self, slot: Slot) -> Result<f64, EvalError> {
        self.get(slot)?.scalar()
    }

    /// Scalar binding interpreted as a non-negative integer index.
    pub fn index(&self, slot: Slot) -> Result<usize, EvalError> {
        let x = self.scalar(slot)?;
        if x < 0.0 || x.fract() != 0.0 {
            return Err(EvalError::Index(format!(
                "'{}' = {} is not a valid index",
                slot.name(),
                x
            )));
        }
        Ok(x as usize)
    }
}

/// Slots bound before any decision of a trial.
pub fn pre_slots(kind: ParadigmKind) -> &'static [Slot] {
    match kind {
        ParadigmKind::DecisionMaking => &[Slot::FeaturesA, Slot::FeaturesB, Slot::Validities],
        ParadigmKind::Learning(_) => &[Slot::Block],
        ParadigmKind::Planning => &[],
        ParadigmKind::WorkingMemory => &[Slot::Block, Slot::SetSize, Slot::Stimulus],
    }
}

/// Slots bound immediately after decision `decision` resolves.
pub fn post_slots(kind: ParadigmKind, decision: usize) -> &'static [Slot] {
    match (kind, decision) {
        (ParadigmKind::DecisionMaking, _) => &[],
        (ParadigmKind::Learning(FeedbackKind::Full), _) => &[Slot::Reward, Slot::ForgoneReward],
        (ParadigmKind::Learning(FeedbackKind::Partial), _) => &[Slot::Reward],
        (ParadigmKind::Planning, 0) => &[Slot::State2],
        (ParadigmKind::Planning, _) => &[Slot::Reward],
        (ParadigmKind::WorkingMemory, _) => &[Slot::Reward],
    }
}

/// The slot that carries the response of decision `decision`.
pub fn decision_slot(kind: ParadigmKind, decision: usize) -> Slot {
    match (kind, decision) {
        (ParadigmKind::DecisionMaking, _) => Slot::Choice,
        (ParadigmKind::Learning(_), _) => Slot::Action,
        (ParadigmKind::Planning, 0) => Slot::Action1,
        (ParadigmKind::Planning, _) => Slot::Action2,
        (ParadigmKind::WorkingMemory, _) => Slot::Action,
    }
}

/// Whether a slot is ever bound under the given paradigm.
pub fn slot_available(kind: ParadigmKind, slot: Slot) -> bool {
    if pre_slots(kind).contains(&slot) {
        return true;
    }
    for d in 0..kind.decisions_per_trial() {
        if post_slots(kind, d).contains(&slot) || decision_slot(kind, d) == slot {
            return true;
        }
    }
    false
}

/// Reads the value a record assigns to a slot.
pub fn record_slot_value(record: &TrialRecord, slot: Slot) -> Option<Value> {
    match record {
        TrialRecord::Decision {
            features_a,
            features_b,
            validities,
            choice,
        } => match slot {
            Slot::FeaturesA => Some(Value::Vector(features_a.clone())),
            Slot::FeaturesB => Some(Value::Vector(features_b.clone())),
            Slot::Validities => Some(Value::Vector(validities.clone())),
            Slot::Choice => Some(Value::Scalar(*choice as f64)),
            _ => None,
        },
        TrialRecord::Learning {
            block,
            action,
            reward,
            forgone_reward,
        } => match slot {
            Slot::Block => Some(Value::Scalar(*block as f64)),
            Slot::Action => Some(Value::Scalar(*action as f64)),
            Slot::Reward => Some(Value::Scalar(*reward as f64)),
            Slot::ForgoneReward => forgone_reward.map(|f| Value::Scalar(f as f64)),
            _ => None,
        },
        TrialRecord::Planning {
            action_1,
            state_2,
            action_2,
            reward,
        } => match slot {
            Slot::Action1 => Some(Value::Scalar(*action_1 as f64)),
            Slot::State2 => Some(Value::Scalar(*state_2 as f64)),
            Slot::Action2 => Some(Value::Scalar(*action_2 as f64)),
            Slot::Reward => Some(Value::Scalar(*reward as f64)),
            _ => None,
        },
        TrialRecord::WorkingMemory {
            block,
            set_size,
            stimulus,
            action,
            reward,
        } => match slot {
            Slot::Block => Some(Value::Scalar(*block as f64)),
            Slot::SetSize => Some(Value::Scalar(*set_size as f64)),
            Slot::Stimulus => Some(Value::Scalar(*stimulus as f64)),
            Slot::Action => Some(Value::Scalar(*action as f64)),
            Slot::Reward => Some(Value::Scalar(*reward as f64)),
            _ => None,
        },
    }
}

/// Builds the trial record a completed simulated trial implies.
pub fn record_from_bindings(kind: ParadigmKind, b: &Bindings) -> Result<TrialRecord, EvalError> {
    Ok(match kind {
        ParadigmKind::DecisionMaking => TrialRecord::Decision {
            features_a: b.get(Slot::FeaturesA)?.vector()?.to_vec(),
            features_b: b.get(Slot::FeaturesB)?.vector()?.to_vec(),
            validities: b.get(Slot::Validities)?.vector()?.to_vec(),
            choice: b.index(Slot::Choice)? as u8,
        },
        ParadigmKind::Learning(fb) => TrialRecord::Learning {
            block: b.index(Slot::Block)?,
            action: b.index(Slot::Action)? as u8,
            reward: b.scalar(Slot::Reward)? as i32,
            forgone_reward: match fb {
                FeedbackKind::Full => Some(b.scalar(Slot::ForgoneReward)? as i32),
                FeedbackKind::Partial => None,
            },
        },
        ParadigmKind::Planning => TrialRecord::Planning {
            action_1: b.index(Slot::Action1)? as u8,
            state_2: b.index(Slot::State2)? as u8,
            action_2: b.index(Slot::Action2)? as u8,
            reward: b.scalar(Slot::Reward)? as u8,
        },
        ParadigmKind::WorkingMemory => TrialRecord::WorkingMemory {
            block: b.index(Slot::Block)?,
            set_size: b.index(Slot::SetSize)? as u8,
            stimulus: b.index(Slot::Stimulus)? as u8,
            action: b.index(Slot::Action)? as u8,
            reward: b.scalar(Slot::Reward)? as u8,
        },
    })
}
