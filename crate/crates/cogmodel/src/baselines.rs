//! Native reference implementations of the literature models: decision
//! heuristics, the Rescorla-Wagner family, the model-based/model-free hybrid
//! for the two-stage task, and the reinforcement-learning/working-memory
//! mixture. Each supports exact NLL scoring and forward simulation through
//! the same binding protocol the interpreted models use.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binding::{
    decision_slot, post_slots, pre_slots, record_from_bindings, record_slot_value, Bindings, Slot,
    Value,
};
use crate::dataset::{FeedbackKind, ParadigmKind, ParticipantData, TrialRecord};
use crate::env::{TaskEnvironment, TRANSITION_MATRIX};
use crate::error::EvalError;
use crate::params::{ParamDef, ParameterSpec};
use crate::prob::{normalize_probs, sample_index, softmax, PROB_EPS};

/// Inverse temperature of the working-memory softmax, fixed rather than fit.
pub const BETA_WM: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    Ttb,
    Eqw,
    Wadd,
    Pwadd,
    Rw,
    RwPlusMinus,
    RwKappa,
    Rw4Alpha,
    Hybrid,
    Rlwm,
}

pub const ALL_BASELINES: [BaselineKind; 10] = [
    BaselineKind::Ttb,
    BaselineKind::Eqw,
    BaselineKind::Wadd,
    BaselineKind::Pwadd,
    BaselineKind::Rw,
    BaselineKind::RwPlusMinus,
    BaselineKind::RwKappa,
    BaselineKind::Rw4Alpha,
    BaselineKind::Hybrid,
    BaselineKind::Rlwm,
];

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Ttb => "ttb",
            BaselineKind::Eqw => "eqw",
            BaselineKind::Wadd => "wadd",
            BaselineKind::Pwadd => "pwadd",
            BaselineKind::Rw => "rw",
            BaselineKind::RwPlusMinus => "rwpm",
            BaselineKind::RwKappa => "rwk",
            BaselineKind::Rw4Alpha => "rw4a",
            BaselineKind::Hybrid => "hybrid",
            BaselineKind::Rlwm => "rlwm",
        }
    }

    pub fn from_name(s: &str) -> Option<BaselineKind> {
        ALL_BASELINES.iter().copied().find(|k| k.name() == s)
    }

    pub fn spec(self) -> ParameterSpec {
        let rate = |n: &str| ParamDef::new(n, 0.0, 1.0);
        let temp = |n: &str| ParamDef::new(n, 0.0, 20.0);
        let stick = |n: &str| ParamDef::new(n, 0.0, 5.0);
        let defs = match self {
            BaselineKind::Ttb | BaselineKind::Eqw | BaselineKind::Wadd => vec![],
            BaselineKind::Pwadd => vec![
                rate("w1"),
                rate("w2"),
                rate("w3"),
                rate("w4"),
                temp("beta"),
            ],
            BaselineKind::Rw => vec![rate("alpha"), temp("beta")],
            BaselineKind::RwPlusMinus => vec![rate("alpha_pos"), rate("alpha_neg"), temp("beta")],
            BaselineKind::RwKappa => vec![rate("alpha"), temp("beta"), stick("kappa")],
            BaselineKind::Rw4Alpha => vec![
                rate("alpha_c_pos"),
                rate("alpha_c_neg"),
                rate("alpha_u_pos"),
                rate("alpha_u_neg"),
                temp("beta"),
                stick("kappa"),
            ],
            BaselineKind::Hybrid => vec![
                rate("alpha_1"),
                rate("alpha_2"),
                rate("lambda"),
                rate("w"),
                temp("beta_1"),
                temp("beta_2"),
                stick("p"),
            ],
            BaselineKind::Rlwm => vec![
                rate("alpha_pos"),
                rate("alpha_neg"),
                rate("phi"),
                rate("omega"),
                rate("epsilon"),
                temp("beta_rl"),
            ],
        };
        ParameterSpec(defs)
    }

    pub fn compatible(self, kind: ParadigmKind) -> bool {
        match self {
            BaselineKind::Ttb | BaselineKind::Eqw | BaselineKind::Wadd | BaselineKind::Pwadd => {
                kind == ParadigmKind::DecisionMaking
            }
            BaselineKind::Rw | BaselineKind::RwPlusMinus | BaselineKind::RwKappa => {
                matches!(kind, ParadigmKind::Learning(_))
            }
            BaselineKind::Rw4Alpha => kind == ParadigmKind::Learning(FeedbackKind::Full),
            BaselineKind::Hybrid => kind == ParadigmKind::Planning,
            BaselineKind::Rlwm => kind == ParadigmKind::WorkingMemory,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    Ttb,
    Eqw,
    Wadd,
    Tallying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicOutcome {
    A,
    B,
    Tie,
}

/// The deterministic part of a heuristic: which option it prefers, or a tie.
pub fn heuristic_choice(
    kind: HeuristicKind,
    features_a: &[f64],
    features_b: &[f64],
    validities: &[f64],
) -> Result<HeuristicOutcome, EvalError> {
    if features_a.len() != features_b.len() {
        return Err(EvalError::LengthMismatch(format!(
            "feature vectors of length {} and {}",
            features_a.len(),
            features_b.len()
        )));
    }
    let needs_validities = matches!(kind, HeuristicKind::Ttb | HeuristicKind::Wadd);
    if needs_validities && validities.len() != features_a.len() {
        return Err(EvalError::LengthMismatch(format!(
            "{} validities for {} features",
            validities.len(),
            features_a.len()
        )));
    }
    let sign = |d: f64| {
        if d > 0.0 {
            HeuristicOutcome::A
        } else if d < 0.0 {
            HeuristicOutcome::B
        } else {
            HeuristicOutcome::Tie
        }
    };
    Ok(match kind {
        HeuristicKind::Ttb => {
            // features in descending validity order; first one that
            // discriminates decides
            let mut order: Vec<usize> = (0..validities.len()).collect();
            order.sort_by(|&i, &j| validities[j].partial_cmp(&validities[i]).unwrap());
            for j in order {
                let out = sign(features_a[j] - features_b[j]);
                if out != HeuristicOutcome::Tie {
                    return Ok(out);
                }
            }
            HeuristicOutcome::Tie
        }
        HeuristicKind::Eqw => sign(
            features_a.iter().sum::<f64>() - features_b.iter().sum::<f64>(),
        ),
        HeuristicKind::Wadd => sign(
            features_a
                .iter()
                .zip(features_b)
                .zip(validities)
                .map(|((a, b), v)| v * (a - b))
                .sum(),
        ),
        HeuristicKind::Tallying => {
            let a_wins = features_a
                .iter()
                .zip(features_b)
                .filter(|(a, b)| a > b)
                .count() as f64;
            let b_wins = features_a
                .iter()
                .zip(features_b)
                .filter(|(a, b)| b > a)
                .count() as f64;
            sign(a_wins - b_wins)
        }
    })
}

pub fn heuristic_probs(outcome: HeuristicOutcome) -> Vec<f64> {
    match outcome {
        HeuristicOutcome::A => vec![1.0 - PROB_EPS, PROB_EPS],
        HeuristicOutcome::B => vec![PROB_EPS, 1.0 - PROB_EPS],
        HeuristicOutcome::Tie => vec![0.5, 0.5],
    }
}

trait Agent {
    /// Called at the first trial and, for block-resetting models, at every
    /// block boundary, after pre-decision slots are bound.
    fn reset_block(&mut self, _b: &Bindings) -> Result<(), EvalError> {
        Ok(())
    }

    /// Raw choice probabilities for decision `d`, before clamping.
    fn probs(&self, d: usize, b: &Bindings) -> Result<Vec<f64>, EvalError>;

    /// Updates internal state once the whole trial is bound.
    fn learn(&mut self, b: &Bindings) -> Result<(), EvalError>;
}

struct HeuristicAgent {
    kind: HeuristicKind,
}

impl Agent for HeuristicAgent {
    fn probs(&self, _d: usize, b: &Bindings) -> Result<Vec<f64>, EvalError> {
        let fa = b.get(Slot::FeaturesA)?.vector()?;
        let fb = b.get(Slot::FeaturesB)?.vector()?;
        let v = b.get(Slot::Validities)?.vector()?;
        Ok(heuristic_probs(heuristic_choice(self.kind, fa, fb, v)?))
    }

    fn learn(&mut self, _b: &Bindings) -> Result<(), EvalError> {
        Ok(())
    }
}

struct PwaddAgent {
    w: [f64; 4],
    beta: f64,
}

impl Agent for PwaddAgent {
    fn probs(&self, _d: usize, b: &Bindings) -> Result<Vec<f64>, EvalError> {
        let fa = b.get(Slot::FeaturesA)?.vector()?;
        let fb = b.get(Slot::FeaturesB)?.vector()?;
        let d: f64 = fa
            .iter()
            .zip(fb)
            .zip(self.w.iter().chain(std::iter::repeat(&0.0)))
            .map(|((a, bb), w)| w * (a - bb))
            .sum();
        let pa = 1.0 / (1.0 + (0.0 - self.beta * d).exp());
        Ok(vec![pa, 1.0 - pa])
    }

    fn learn(&mut self, _b: &Bindings) -> Result<(), EvalError> {
        Ok(())
    }
}

/// Covers the whole value-learning family: one or two chosen-action learning
/// rates, optional unchosen-action rates fed by the forgone reward, and
/// optional perseveration.
struct RwFamilyAgent {
    v: [f64; 2],
    alpha_pos: f64,
    alpha_neg: f64,
    unchosen: Option<(f64, f64)>,
    beta: f64,
    kappa: f64,
    prev: Option<usize>,
}

impl Agent for RwFamilyAgent {
    fn probs(&self, _d: usize, _b: &Bindings) -> Result<Vec<f64>, EvalError> {
        let mut pref = [self.beta * self.v[0], self.beta * self.v[1]];
        if let Some(p) = self.prev {
            pref[p] += self.kappa;
        }
        softmax(&pref)
    }

    fn learn(&mut self, b: &Bindings) -> Result<(), EvalError> {
        let a = b.index(Slot::Action)?;
        if a > 1 {
            return Err(EvalError::Index(format!("action {} in a two-armed task", a)));
        }
        let r = b.scalar(Slot::Reward)?;
        let delta = r - self.v[a];
        let rate = if delta >= 0.0 {
            self.alpha_pos
        } else {
            self.alpha_neg
        };
        self.v[a] += rate * delta;
        if let Some((au_pos, au_neg)) = self.unchosen {
            let r2 = b.scalar(Slot::ForgoneReward)?;
            let delta2 = r2 - self.v[1 - a];
            let rate2 = if delta2 >= 0.0 { au_pos } else { au_neg };
            self.v[1 - a] += rate2 * delta2;
        }
        self.prev = Some(a);
        Ok(())
    }
}

struct HybridAgent {
    /// Row 0: first stage. Rows 1 and 2: second-stage states 0 and 1.
    q_mf: [[f64; 2]; 3],
    alpha_1: f64,
    alpha_2: f64,
    lambda: f64,
    w: f64,
    beta_1: f64,
    beta_2: f64,
    p: f64,
    prev_a1: Option<usize>,
}

impl Agent for HybridAgent {
    fn probs(&self, d: usize, b: &Bindings) -> Result<Vec<f64>, EvalError> {
        if d == 0 {
            let best: [f64; 2] = [
                self.q_mf[1][0].max(self.q_mf[1][1]),
                self.q_mf[2][0].max(self.q_mf[2][1]),
            ];
            let mut net = [0.0; 2];
            for (a, n) in net.iter_mut().enumerate() {
                let q_mb: f64 = (0..2).map(|s| TRANSITION_MATRIX[a][s] * best[s]).sum();
                let rep = if self.prev_a1 == Some(a) { 1.0 } else { 0.0 };
                *n = self.beta_1
                    * (self.w * q_mb + (1.0 - self.w) * self.q_mf[0][a] + self.p * rep);
            }
            softmax(&net)
        } else {
            let s2 = b.index(Slot::State2)?;
            if s2 > 1 {
                return Err(EvalError::Index(format!("second-stage state {}", s2)));
            }
            let q = &self.q_mf[1 + s2];
            softmax(&[self.beta_2 * q[0], self.beta_2 * q[1]])
        }
    }

    fn learn(&mut self, b: &Bindings) -> Result<(), EvalError> {
        let a1 = b.index(Slot::Action1)?;
        let s2 = b.index(Slot::State2)?;
        let a2 = b.index(Slot::Action2)?;
        if a1 > 1 || s2 > 1 || a2 > 1 {
            return Err(EvalError::Index("two-stage indices must be 0 or 1".into()));
        }
        let r = b.scalar(Slot::Reward)?;
        let q_s2a2 = self.q_mf[1 + s2][a2];
        self.q_mf[0][a1] += self.alpha_1 * (q_s2a2 - self.q_mf[0][a1])
            + self.alpha_1 * self.lambda * (r - q_s2a2);
        self.q_mf[1 + s2][a2] += self.alpha_2 * (r - q_s2a2);
        self.prev_a1 = Some(a1);
        Ok(())
    }
}

struct RlwmAgent {
    q: Vec<[f64; 3]>,
    w: Vec<[f64; 3]>,
    alpha_pos: f64,
    alpha_neg: f64,
    phi: f64,
    omega: f64,
    epsilon: f64,
    beta_rl: f64,
    set_size: usize,
}

const W0: f64 = 1.0 / 3.0;

impl Agent for RlwmAgent {
    fn reset_block(&mut self, b: &Bindings) -> Result<(), EvalError> {
        self.set_size = b.index(Slot::SetSize)?;
        if self.set_size == 0 {
            return Err(EvalError::Index("set size must be positive".into()));
        }
        self.q = vec![[W0; 3]; self.set_size];
        self.w = vec![[W0; 3]; self.set_size];
        Ok(())
    }

    fn probs(&self, _d: usize, b: &Bindings) -> Result<Vec<f64>, EvalError> {
        let s = b.index(Slot::Stimulus)?;
        if s >= self.set_size {
            return Err(EvalError::Index(format!(
                "stimulus {} in a block of set size {}",
                s, self.set_size
            )));
        }
        let p_rl = softmax(&self.q[s].map(|x| self.beta_rl * x))?;
        let p_wm = softmax(&self.w[s].map(|x| BETA_WM * x))?;
        let mix_w = self.omega.powi(self.set_size as i32);
        Ok((0..3)
            .map(|a| {
                let mixed = mix_w * p_wm[a] + (1.0 - mix_w) * p_rl[a];
                (1.0 - self.epsilon) * mixed + self.epsilon / 3.0
            })
            .collect())
    }

    fn learn(&mut self, b: &Bindings) -> Result<(), EvalError> {
        let s = b.index(Slot::Stimulus)?;
        let a = b.index(Slot::Action)?;
        if s >= self.set_size || a > 2 {
            return Err(EvalError::Index("stimulus or action out of range".into()));
        }
        let r = b.scalar(Slot::Reward)?;

        let delta_rl = r - self.q[s][a];
        let rate = if delta_rl > 0.0 {
            self.alpha_pos
        } else {
            self.alpha_neg
        };
        self.q[s][a] += rate * delta_rl;

        let delta_wm = r - self.w[s][a];
        // relative neglect of negative feedback, bounded to keep W in [0, 1]
        let v = if self.alpha_pos <= f64::EPSILON {
            1.0
        } else {
            (self.alpha_neg / self.alpha_pos).min(1.0)
        };
        if delta_wm > 0.0 {
            self.w[s][a] = r;
        } else {
            self.w[s][a] += v * delta_wm;
        }

        for (si, row) in self.w.iter_mut().enumerate() {
            for (ai, wv) in row.iter_mut().enumerate() {
                if si == s && ai == a {
                    continue;
                }
                *wv += self.phi * (W0 - *wv);
            }
        }
        Ok(())
    }
}

fn make_agent(kind: BaselineKind, theta: &[f64]) -> Box<dyn Agent> {
    match kind {
        BaselineKind::Ttb => Box::new(HeuristicAgent {
            kind: HeuristicKind::Ttb,
        }),
        BaselineKind::Eqw => Box::new(HeuristicAgent {
            kind: HeuristicKind::Eqw,
        }),
        BaselineKind::Wadd => Box::new(HeuristicAgent {
            kind: HeuristicKind::Wadd,
        }),
        BaselineKind::Pwadd => Box::new(PwaddAgent {
            w: [theta[0], theta[1], theta[2], theta[3]],
            beta: theta[4],
        }),
        BaselineKind::Rw => Box::new(RwFamilyAgent {
            v: [0.5; 2],
            alpha_pos: theta[0],
            alpha_neg: theta[0],
            unchosen: None,
            beta: theta[1],
            kappa: 0.0,
            prev: None,
        }),
        BaselineKind::RwPlusMinus => Box::new(RwFamilyAgent {
            v: [0.5; 2],
            alpha_pos: theta[0],
            alpha_neg: theta[1],
            unchosen: None,
            beta: theta[2],
            kappa: 0.0,
            prev: None,
        }),
        BaselineKind::RwKappa => Box::new(RwFamilyAgent {
            v: [0.5; 2],
            alpha_pos: theta[0],
            alpha_neg: theta[0],
            unchosen: None,
            beta: theta[1],
            kappa: theta[2],
            prev: None,
        }),
        BaselineKind::Rw4Alpha => Box::new(RwFamilyAgent {
            v: [0.5; 2],
            alpha_pos: theta[0],
            alpha_neg: theta[1],
            unchosen: Some((theta[2], theta[3])),
            beta: theta[4],
            kappa: theta[5],
            prev: None,
        }),
        BaselineKind::Hybrid => Box::new(HybridAgent {
            q_mf: [[0.0; 2]; 3],
            alpha_1: theta[0],
            alpha_2: theta[1],
            lambda: theta[2],
            w: theta[3],
            beta_1: theta[4],
            beta_2: theta[5],
            p: theta[6],
            prev_a1: None,
        }),
        BaselineKind::Rlwm => Box::new(RlwmAgent {
            q: Vec::new(),
            w: Vec::new(),
            alpha_pos: theta[0],
            alpha_neg: theta[1],
            phi: theta[2],
            omega: theta[3],
            epsilon: theta[4],
            beta_rl: theta[5],
            set_size: 0,
        }),
    }
}

fn resets_per_block(kind: BaselineKind) -> bool {
    kind == BaselineKind::Rlwm
}

fn check_baseline(kind: BaselineKind, paradigm: ParadigmKind, theta: &[f64]) -> Result<(), EvalError> {
    if !kind.compatible(paradigm) {
        return Err(EvalError::ParadigmMismatch(format!(
            "model '{}' cannot score {} data",
            kind.name(),
            paradigm
        )));
    }
    kind.spec().validate(theta)
}

fn record_kind(r: &TrialRecord) -> ParadigmKind {
    match r {
        TrialRecord::Decision { .. } => ParadigmKind::DecisionMaking,
        TrialRecord::Learning {
            forgone_reward: Some(_),
            ..
        } => ParadigmKind::Learning(FeedbackKind::Full),
        TrialRecord::Learning { .. } => ParadigmKind::Learning(FeedbackKind::Partial),
        TrialRecord::Planning { .. } => ParadigmKind::Planning,
        TrialRecord::WorkingMemory { .. } => ParadigmKind::WorkingMemory,
    }
}

/// Exact negative log likelihood of a participant's decisions under a
/// baseline model.
pub fn baseline_nll(
    kind: BaselineKind,
    data: &ParticipantData,
    theta: &[f64],
) -> Result<f64, EvalError> {
    let first = data
        .trials
        .first()
        .ok_or_else(|| EvalError::Binding("participant has no trials".into()))?;
    let paradigm = record_kind(first);
    check_baseline(kind, paradigm, theta)?;

    let mut agent = make_agent(kind, theta);
    let mut b = Bindings::new();
    let mut prev_block: Option<f64> = None;
    let mut nll = 0.0;
    for (t, rec) in data.trials.iter().enumerate() {
        if !rec.matches(paradigm) {
            return Err(EvalError::ParadigmMismatch(
                "mixed paradigms within one participant".into(),
            ));
        }
        b.clear();
        for &slot in pre_slots(paradigm) {
            if let Some(v) = record_slot_value(rec, slot) {
                b.set(slot, v);
            }
        }
        let cur_block = b.maybe(Slot::Block).and_then(|v| v.scalar().ok());
        if t == 0 || (resets_per_block(kind) && cur_block != prev_block) {
            agent.reset_block(&b)?;
        }
        prev_block = cur_block;
        for d in 0..paradigm.decisions_per_trial() {
            let slot = decision_slot(paradigm, d);
            let probs = normalize_probs(&agent.probs(d, &b)?)?;
            let observed = record_slot_value(rec, slot)
                .ok_or_else(|| EvalError::Binding(format!("record lacks '{}'", slot.name())))?
                .scalar()?;
            if observed < 0.0 || observed.fract() != 0.0 || observed as usize >= probs.len() {
                return Err(EvalError::Index(format!(
                    "observed {} = {} outside the {} options offered",
                    slot.name(),
                    observed,
                    probs.len()
                )));
            }
            nll -= probs[observed as usize].ln();
            b.set(slot, Value::Scalar(observed));
            for &s in post_slots(paradigm, d) {
                if let Some(v) = record_slot_value(rec, s) {
                    b.set(s, v);
                }
            }
        }
        agent.learn(&b)?;
    }
    if !nll.is_finite() {
        return Err(EvalError::Numerics(format!(
            "non-finite log likelihood: {}",
            nll
        )));
    }
    Ok(nll)
}

/// Simulates one synthetic participant acting by a baseline model.
pub fn baseline_simulate(
    kind: BaselineKind,
    env: &TaskEnvironment,
    theta: &[f64],
    n_trials: usize,
    seed: u64,
    participant_id: &str,
) -> Result<ParticipantData, EvalError> {
    let paradigm = env.kind();
    check_baseline(kind, paradigm, theta)?;
    let n = match env.trial_limit() {
        Some(limit) => n_trials.min(limit),
        None => n_trials,
    };

    let mut env = env.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = make_agent(kind, theta);
    let mut b = Bindings::new();
    let mut prev_block: Option<f64> = None;
    let mut trials = Vec::with_capacity(n);
    for t in 0..n {
        b.clear();
        env.pre(t, &mut b, &mut rng);
        let cur_block = b.maybe(Slot::Block).and_then(|v| v.scalar().ok());
        if t == 0 || (resets_per_block(kind) && cur_block != prev_block) {
            agent.reset_block(&b)?;
        }
        prev_block = cur_block;
        for d in 0..paradigm.decisions_per_trial() {
            let slot = decision_slot(paradigm, d);
            let probs = normalize_probs(&agent.probs(d, &b)?)?;
            let a = sample_index(&probs, &mut rng);
            b.set(slot, Value::Scalar(a as f64));
            env.post(t, d, a, &mut b, &mut rng);
        }
        agent.learn(&b)?;
        env.end_trial(&mut rng);
        trials.push(record_from_bindings(paradigm, &b)?);
    }
    Ok(ParticipantData {
        participant_id: participant_id.to_string(),
        trials,
    })
}
