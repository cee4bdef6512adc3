//! Task environments used to simulate synthetic behavior: a two-armed bandit,
//! the two-stage planning task, multi-feature decision problems, and the
//! stimulus-action learning task with varying set sizes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::binding::{Bindings, Slot, Value};
use crate::dataset::{FeedbackKind, ParadigmKind};

/// Probability that a first-stage action leads to its associated second-stage
/// state.
pub const COMMON_TRANSITION_PROB: f64 = 0.7;

pub const TRANSITION_MATRIX: [[f64; 2]; 2] = [
    [COMMON_TRANSITION_PROB, 1.0 - COMMON_TRANSITION_PROB],
    [1.0 - COMMON_TRANSITION_PROB, COMMON_TRANSITION_PROB],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardAlphabet {
    /// Rewards in {0, 1}.
    ZeroOne,
    /// Rewards in {-1, 1}.
    PlusMinus,
}

impl RewardAlphabet {
    fn encode(self, rewarded: bool) -> f64 {
        match (self, rewarded) {
            (_, true) => 1.0,
            (RewardAlphabet::ZeroOne, false) => 0.0,
            (RewardAlphabet::PlusMinus, false) => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditEnv {
    pub p_reward: [f64; 2],
    pub alphabet: RewardAlphabet,
    pub feedback: FeedbackKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStepEnv {
    /// Reward probability per (second-stage state, second-stage action).
    pub reward_probs: [[f64; 2]; 2],
    /// Gaussian drift step applied after every trial, reflected into
    /// [0.25, 0.75]; None keeps probabilities fixed.
    pub drift_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionProblem {
    pub features_a: Vec<f64>,
    pub features_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEnv {
    pub problems: Vec<DecisionProblem>,
    pub validities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlwmBlock {
    pub set_size: usize,
    /// Correct action per stimulus index.
    pub correct: Vec<usize>,
    /// Stimulus presentation order; each stimulus appears a fixed number of
    /// times, pseudo-randomly shuffled.
    pub stimuli: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlwmEnv {
    pub blocks: Vec<RlwmBlock>,
}

impl RlwmEnv {
    pub fn n_trials(&self) -> usize {
        self.blocks.iter().map(|b| b.stimuli.len()).sum()
    }

    /// Maps a flat trial index to (block, set size, stimulus).
    fn locate(&self, t: usize) -> Option<(usize, usize, usize)> {
        let mut offset = 0;
        for (bi, b) in self.blocks.iter().enumerate() {
            if t < offset + b.stimuli.len() {
                return Some((bi, b.set_size, b.stimuli[t - offset]));
            }
            offset += b.stimuli.len();
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TaskEnvironment {
    Bandit(BanditEnv),
    TwoStep(TwoStepEnv),
    DecisionProblems(DecisionEnv),
    Rlwm(RlwmEnv),
}

impl TaskEnvironment {
    pub fn kind(&self) -> ParadigmKind {
        match self {
            TaskEnvironment::Bandit(b) => ParadigmKind::Learning(b.feedback),
            TaskEnvironment::TwoStep(_) => ParadigmKind::Planning,
            TaskEnvironment::DecisionProblems(_) => ParadigmKind::DecisionMaking,
            TaskEnvironment::Rlwm(_) => ParadigmKind::WorkingMemory,
        }
    }

    /// Hard cap on trial count, for environments with a fixed schedule.
    pub fn trial_limit(&self) -> Option<usize> {
        match self {
            TaskEnvironment::DecisionProblems(e) => Some(e.problems.len()),
            TaskEnvironment::Rlwm(e) => Some(e.n_trials()),
            _ => None,
        }
    }

    /// Binds everything known before the first decision of trial `t`.
    pub fn pre<R: Rng>(&mut self, t: usize, b: &mut Bindings, _rng: &mut R) {
        match self {
            TaskEnvironment::Bandit(_) => {
                b.set(Slot::Block, Value::Scalar(0.0));
            }
            TaskEnvironment::TwoStep(_) => {}
            TaskEnvironment::DecisionProblems(e) => {
                let p = &e.problems[t % e.problems.len()];
                b.set(Slot::FeaturesA, Value::Vector(p.features_a.clone()));
                b.set(Slot::FeaturesB, Value::Vector(p.features_b.clone()));
                b.set(Slot::Validities, Value::Vector(e.validities.clone()));
            }
            TaskEnvironment::Rlwm(e) => {
                let (block, set_size, stimulus) = e.locate(t).expect("trial within schedule");
                b.set(Slot::Block, Value::Scalar(block as f64));
                b.set(Slot::SetSize, Value::Scalar(set_size as f64));
                b.set(Slot::Stimulus, Value::Scalar(stimulus as f64));
            }
        }
    }

    /// Responds to decision `decision` resolving to `action`, binding the
    /// resulting observations.
    pub fn post<R: Rng>(
        &mut self,
        t: usize,
        decision: usize,
        action: usize,
        b: &mut Bindings,
        rng: &mut R,
    ) {
        match self {
            TaskEnvironment::Bandit(e) => {
                let chosen = rng.gen_bool(e.p_reward[action]);
                b.set(Slot::Reward, Value::Scalar(e.alphabet.encode(chosen)));
                if e.feedback == FeedbackKind::Full {
                    let other = rng.gen_bool(e.p_reward[1 - action]);
                    b.set(Slot::ForgoneReward, Value::Scalar(e.alphabet.encode(other)));
                }
            }
            TaskEnvironment::TwoStep(e) => {
                if decision == 0 {
                    let common = rng.gen_bool(COMMON_TRANSITION_PROB);
                    let state = if common { action } else { 1 - action };
                    b.set(Slot::State2, Value::Scalar(state as f64));
                } else {
                    let state = b.index(Slot::State2).expect("state bound after stage 1");
                    let rewarded = rng.gen_bool(e.reward_probs[state][action]);
                    b.set(Slot::Reward, Value::Scalar(if rewarded { 1.0 } else { 0.0 }));
                }
                let _ = t;
            }
            TaskEnvironment::DecisionProblems(_) => {}
            TaskEnvironment::Rlwm(e) => {
                let (block, _, stimulus) = e.locate(t).expect("trial within schedule");
                let correct = e.blocks[block].correct[stimulus];
                b.set(
                    Slot::Reward,
                    Value::Scalar(if action == correct { 1.0 } else { 0.0 }),
                );
            }
        }
    }

    /// Per-trial environment dynamics applied after the trial completes.
    pub fn end_trial<R: Rng>(&mut self, rng: &mut R) {
        if let TaskEnvironment::TwoStep(e) = self {
            if let Some(sigma) = e.drift_sigma {
                for row in e.reward_probs.iter_mut() {
                    for p in row.iter_mut() {
                        let step: f64 = rng.sample(rand_distr::StandardNormal);
                        *p = reflect(*p + sigma * step, 0.25, 0.75);
                    }
                }
            }
        }
    }
}

fn reflect(mut x: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    while x < lo || x > hi {
        if x < lo {
            x = lo + (lo - x);
        }
        if x > hi {
            x = hi - (x - hi);
        }
        // pathological steps larger than the interval
        if (x - lo).abs() > 2.0 * span {
            x = lo + span / 2.0;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn twostep_transitions_are_roughly_seventy_thirty() {
        let mut env = TaskEnvironment::TwoStep(TwoStepEnv {
            reward_probs: [[0.5, 0.5], [0.5, 0.5]],
            drift_sigma: None,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mut common = 0;
        for t in 0..n {
            let mut b = Bindings::new();
            env.post(t, 0, 0, &mut b, &mut rng);
            if b.index(Slot::State2).unwrap() == 0 {
                common += 1;
            }
        }
        let frac = common as f64 / n as f64;
        assert!((frac - 0.7).abs() < 0.02, "common fraction {}", frac);
    }

    #[test]
    fn reflect_stays_in_bounds() {
        for &x in &[0.1, 0.2, 0.8, 0.9, 0.5] {
            let r = reflect(x, 0.25, 0.75);
            assert!((0.25..=0.75).contains(&r));
        }
    }
}
