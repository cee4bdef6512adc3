//! Synthetic task generation, agent simulation with noise, and
//! model-recovery / identification studies.

use crate::baselines::{
    baseline_nll, baseline_simulate, heuristic_choice, heuristic_probs, BaselineKind,
    HeuristicKind, HeuristicOutcome,
};
use crate::dataset::{Dataset, FeedbackKind, ParadigmKind, ParticipantData, TrialRecord};
use crate::env::{BanditEnv, DecisionEnv, DecisionProblem, RewardAlphabet, RlwmBlock, RlwmEnv, TaskEnvironment, TwoStepEnv};
use crate::error::{DataError, EvalError, FitError};
use crate::fitting::{fit_one, participant_rng, BaselineModel, FitResult};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Validities used for the synthetic decision problems. The second feature
/// deliberately carries the highest validity, so a take-the-best agent keys
/// on it rather than on the first column.
pub fn synthetic_validities(n_features: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n_features).map(|i| 0.9 - 0.1 * i as f64).collect();
    if v.len() >= 2 {
        v.swap(0, 1);
    }
    v
}

/// Generates `n` two-option problems with integer features in [0, 100].
/// Every problem is unambiguous: take-the-best and tallying each make a
/// strict choice and the two disagree, so the generating heuristic is
/// identifiable from the decisions. Exactly half the problems favor option A
/// under take-the-best (and therefore option B under tallying).
pub fn gen_decision_problems(
    n: usize,
    n_features: usize,
    seed: u64,
) -> Result<DecisionEnv, DataError> {
    if n == 0 || n % 2 != 0 {
        return Err(DataError::Domain(format!(
            "problem count {} must be even and positive",
            n
        )));
    }
    if n_features < 2 {
        return Err(DataError::Domain("need at least two features".into()));
    }
    let validities = synthetic_validities(n_features);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a_superior = Vec::new();
    let mut b_superior = Vec::new();
    let mut guard = 0u32;
    while a_superior.len() < n / 2 || b_superior.len() < n / 2 {
        guard += 1;
        if guard > 1_000_000 {
            return Err(DataError::Domain(
                "failed to sample enough unambiguous problems".into(),
            ));
        }
        let fa: Vec<f64> = (0..n_features).map(|_| rng.gen_range(0..=100) as f64).collect();
        let fb: Vec<f64> = (0..n_features).map(|_| rng.gen_range(0..=100) as f64).collect();
        let ttb = heuristic_choice(HeuristicKind::Ttb, &fa, &fb, &validities)
            .expect("lengths agree");
        let tally = heuristic_choice(HeuristicKind::Tallying, &fa, &fb, &validities)
            .expect("lengths agree");
        if ttb == HeuristicOutcome::Tie || tally == HeuristicOutcome::Tie || ttb == tally {
            continue;
        }
        let bucket = if ttb == HeuristicOutcome::A {
            &mut a_superior
        } else {
            &mut b_superior
        };
        if bucket.len() < n / 2 {
            bucket.push(DecisionProblem {
                features_a: fa,
                features_b: fb,
            });
        }
    }
    let mut problems: Vec<DecisionProblem> = a_superior
        .into_iter()
        .zip(b_superior)
        .flat_map(|(a, b)| [a, b])
        .collect();
    problems.shuffle(&mut rng);
    Ok(DecisionEnv {
        problems,
        validities,
    })
}

/// Simulates agents that follow a heuristic exactly, except each decision is
/// flipped independently with probability `noise`. Each agent answers
/// `problems_per_agent` problems drawn without replacement from the set.
pub fn simulate_heuristic_agents(
    kind: HeuristicKind,
    env: &DecisionEnv,
    noise: f64,
    n_agents: usize,
    problems_per_agent: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    if !(0.0..=0.5).contains(&noise) {
        return Err(DataError::Domain(format!("noise {} outside [0, 0.5]", noise)));
    }
    if problems_per_agent == 0 || problems_per_agent > env.problems.len() {
        return Err(DataError::Domain(format!(
            "{} problems per agent from a set of {}",
            problems_per_agent,
            env.problems.len()
        )));
    }
    let mut participants = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let id = format!("{:?}-{}", kind, i).to_lowercase();
        let mut rng = participant_rng(seed, &id);
        let mut indices: Vec<usize> = (0..env.problems.len()).collect();
        indices.shuffle(&mut rng);
        indices.truncate(problems_per_agent);
        let mut trials = Vec::with_capacity(problems_per_agent);
        for pi in indices {
            let p = &env.problems[pi];
            let out = heuristic_choice(kind, &p.features_a, &p.features_b, &env.validities)
                .map_err(|e| DataError::Domain(e.to_string()))?;
            let mut choice = match out {
                HeuristicOutcome::A => 0u8,
                HeuristicOutcome::B => 1,
                HeuristicOutcome::Tie => u8::from(rng.gen_bool(0.5)),
            };
            if noise > 0.0 && rng.gen_bool(noise) {
                choice = 1 - choice;
            }
            trials.push(TrialRecord::Decision {
                features_a: p.features_a.clone(),
                features_b: p.features_b.clone(),
                validities: env.validities.clone(),
                choice,
            });
        }
        participants.push(ParticipantData {
            participant_id: id,
            trials,
        });
    }
    Dataset::new(
        ParadigmKind::DecisionMaking,
        participants,
        &format!("synthetic {:?} agents, noise {}", kind, noise).to_lowercase(),
    )
}

/// Negative log likelihood of decisions under a deterministic heuristic,
/// using the same clamped probabilities the baseline models emit.
pub fn heuristic_nll(kind: HeuristicKind, p: &ParticipantData) -> Result<f64, EvalError> {
    let mut nll = 0.0;
    for t in &p.trials {
        let TrialRecord::Decision {
            features_a,
            features_b,
            validities,
            choice,
        } = t
        else {
            return Err(EvalError::ParadigmMismatch(
                "heuristic scoring needs decision trials".into(),
            ));
        };
        let out = heuristic_choice(kind, features_a, features_b, validities)?;
        nll -= heuristic_probs(out)[*choice as usize].ln();
    }
    Ok(nll)
}

/// Picks the candidate heuristic with the smallest NLL; ties keep the
/// earliest candidate.
pub fn identify_heuristic(
    p: &ParticipantData,
    candidates: &[HeuristicKind],
) -> Result<HeuristicKind, EvalError> {
    let mut best: Option<(HeuristicKind, f64)> = None;
    for &kind in candidates {
        let nll = heuristic_nll(kind, p)?;
        if best.as_ref().map_or(true, |&(_, b)| nll < b - 1e-9) {
            best = Some((kind, nll));
        }
    }
    best.map(|(k, _)| k)
        .ok_or_else(|| EvalError::Binding("no candidate heuristics".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseSweepCell {
    pub kind: String,
    pub noise: f64,
    pub n_agents: usize,
    pub n_correct: usize,
    pub accuracy: f64,
}

/// Identification accuracy of take-the-best and tallying agents across noise
/// levels. Each agent answers an odd number of problems so the two
/// heuristics, which disagree on every problem, can never tie.
pub fn noise_sweep(
    noise_levels: &[f64],
    n_agents: usize,
    problems_per_agent: usize,
    seed: u64,
) -> Result<Vec<NoiseSweepCell>, DataError> {
    let env = gen_decision_problems(80, 3, seed)?;
    let candidates = [HeuristicKind::Ttb, HeuristicKind::Tallying];
    let mut cells = Vec::new();
    for &kind in &candidates {
        for (li, &noise) in noise_levels.iter().enumerate() {
            let d = simulate_heuristic_agents(
                kind,
                &env,
                noise,
                n_agents,
                problems_per_agent,
                seed.wrapping_add(1 + li as u64),
            )?;
            let n_correct = d
                .participants
                .iter()
                .filter(|p| identify_heuristic(p, &candidates).ok() == Some(kind))
                .count();
            cells.push(NoiseSweepCell {
                kind: format!("{:?}", kind).to_lowercase(),
                noise,
                n_agents,
                n_correct,
                accuracy: n_correct as f64 / n_agents as f64,
            });
        }
    }
    Ok(cells)
}

/// Simulates bandit agents from a learning model with parameters drawn
/// uniformly from the model's bounds, except inverse temperatures, which are
/// drawn from [1, 10] to keep agents away from unidentifiable near-random
/// behavior. Returns the dataset and the true parameters per agent.
pub fn gen_bandit_agents(
    kind: BaselineKind,
    n_agents: usize,
    n_trials: usize,
    contingencies: [f64; 2],
    alphabet: RewardAlphabet,
    feedback: FeedbackKind,
    seed: u64,
) -> Result<(Dataset, Vec<Vec<f64>>), DataError> {
    let env = TaskEnvironment::Bandit(BanditEnv {
        p_reward: contingencies,
        alphabet,
        feedback,
    });
    let spec = kind.spec();
    let mut participants = Vec::with_capacity(n_agents);
    let mut thetas = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let id = format!("{}-{:03}", kind.name(), i);
        let mut rng = participant_rng(seed, &id);
        let theta: Vec<f64> = spec
            .0
            .iter()
            .map(|def| {
                if def.name.starts_with("beta") {
                    rng.gen_range(1.0..10.0)
                } else {
                    rng.gen_range(def.lower..def.upper)
                }
            })
            .collect();
        let sim_seed = rng.gen::<u64>();
        let mut p = baseline_simulate(kind, &env, &theta, n_trials, sim_seed, &id)
            .map_err(|e| DataError::Domain(e.to_string()))?;
        p.participant_id = id;
        participants.push(p);
        thetas.push(theta);
    }
    let d = Dataset::new(
        ParadigmKind::Learning(feedback),
        participants,
        &format!("synthetic {} bandit agents", kind.name()),
    )?;
    Ok((d, thetas))
}

/// Fits every candidate to one participant and returns the one with the
/// smallest NLL; near-ties (within 1e-9) go to the model with fewer
/// parameters, then to candidate order.
pub fn identify_model(
    p: &ParticipantData,
    candidates: &[BaselineKind],
    restarts: usize,
    seed: u64,
) -> Result<(BaselineKind, Vec<FitResult>), FitError> {
    assert!(!candidates.is_empty(), "need at least one candidate");
    let mut fits = Vec::with_capacity(candidates.len());
    for &kind in candidates {
        fits.push(fit_one(&BaselineModel(kind), p, restarts, seed)?);
    }
    let mut best = 0;
    for i in 1..fits.len() {
        let better = fits[i].nll < fits[best].nll - 1e-9
            || ((fits[i].nll - fits[best].nll).abs() <= 1e-9 && fits[i].k < fits[best].k);
        if better {
            best = i;
        }
    }
    Ok((candidates[best], fits))
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryRow {
    pub agent_id: String,
    pub true_model: String,
    pub identified: String,
    pub nll_true: f64,
    pub bic_true: f64,
    pub bic_best_alt: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub rows: Vec<RecoveryRow>,
    /// Identification accuracy per generating model; None when that model
    /// produced no agents.
    pub accuracy: Vec<(String, Option<f64>)>,
}

pub struct RecoveryConfig {
    pub generating: Vec<BaselineKind>,
    pub candidates: Vec<BaselineKind>,
    pub n_agents: usize,
    pub n_trials: usize,
    pub contingencies: [f64; 2],
    pub alphabet: RewardAlphabet,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            generating: vec![BaselineKind::RwPlusMinus, BaselineKind::RwKappa],
            candidates: vec![BaselineKind::RwPlusMinus, BaselineKind::RwKappa],
            n_agents: 100,
            n_trials: 150,
            contingencies: [0.2, 0.8],
            alphabet: RewardAlphabet::PlusMinus,
            restarts: 20,
            seed: 21,
        }
    }
}

/// Generates agents from each model, identifies them by fit and compare, and
/// aggregates accuracy per generating model.
pub fn recovery_study(cfg: &RecoveryConfig) -> Result<RecoveryReport, DataError> {
    use rayon::prelude::*;
    let mut rows = Vec::new();
    for &gen in &cfg.generating {
        if cfg.n_agents == 0 {
            continue;
        }
        let (d, thetas) = gen_bandit_agents(
            gen,
            cfg.n_agents,
            cfg.n_trials,
            cfg.contingencies,
            cfg.alphabet,
            FeedbackKind::Partial,
            cfg.seed,
        )?;
        let gen_rows: Vec<RecoveryRow> = d
            .participants
            .par_iter()
            .zip(&thetas)
            .map(|(p, theta)| {
                let (winner, fits) = identify_model(p, &cfg.candidates, cfg.restarts, cfg.seed)
                    .map_err(|e| DataError::Domain(e.to_string()))?;
                let nll_true = baseline_nll(gen, p, theta)
                    .map_err(|e| DataError::Domain(e.to_string()))?;
                let true_fit = fits.iter().find(|f| f.model_id == gen.name());
                let bic_true = true_fit.map(|f| f.bic).unwrap_or(f64::NAN);
                let bic_best_alt = fits
                    .iter()
                    .filter(|f| f.model_id != gen.name())
                    .map(|f| f.bic)
                    .fold(f64::INFINITY, f64::min);
                Ok(RecoveryRow {
                    agent_id: p.participant_id.clone(),
                    true_model: gen.name().into(),
                    identified: winner.name().into(),
                    nll_true,
                    bic_true,
                    bic_best_alt,
                })
            })
            .collect::<Result<_, DataError>>()?;
        rows.extend(gen_rows);
    }
    let accuracy = cfg
        .generating
        .iter()
        .map(|g| {
            let mine: Vec<&RecoveryRow> =
                rows.iter().filter(|r| r.true_model == g.name()).collect();
            let acc = if mine.is_empty() {
                None
            } else {
                Some(
                    mine.iter().filter(|r| r.identified == r.true_model).count() as f64
                        / mine.len() as f64,
                )
            };
            (g.name().to_string(), acc)
        })
        .collect();
    Ok(RecoveryReport { rows, accuracy })
}

/// Default two-step planning environment: fixed second-stage reward
/// probabilities inside [0.25, 0.75], no drift.
pub fn default_twostep_env() -> TaskEnvironment {
    TaskEnvironment::TwoStep(TwoStepEnv {
        reward_probs: [[0.7, 0.3], [0.35, 0.65]],
        drift_sigma: None,
    })
}

/// Builds a stimulus-action learning schedule: one block per entry of
/// `set_sizes`, each stimulus shown `reps` times in shuffled order, with a
/// random correct action per stimulus.
pub fn gen_rlwm_schedule(set_sizes: &[usize], reps: usize, seed: u64) -> TaskEnvironment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = set_sizes
        .iter()
        .map(|&ns| {
            let correct: Vec<usize> = (0..ns).map(|_| rng.gen_range(0..3)).collect();
            let mut stimuli: Vec<usize> =
                (0..ns).flat_map(|s| std::iter::repeat(s).take(reps)).collect();
            stimuli.shuffle(&mut rng);
            RlwmBlock {
                set_size: ns,
                correct,
                stimuli,
            }
        })
        .collect();
    TaskEnvironment::Rlwm(RlwmEnv { blocks })
}

/// Simulates agents from any baseline on a given environment, one fixed
/// parameter vector per agent.
pub fn gen_agents_with_params(
    kind: BaselineKind,
    env: &TaskEnvironment,
    thetas: &[Vec<f64>],
    n_trials: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    let mut participants = Vec::with_capacity(thetas.len());
    for (i, theta) in thetas.iter().enumerate() {
        let id = format!("{}-{:03}", kind.name(), i);
        let mut rng = participant_rng(seed, &id);
        let sim_seed = rng.gen::<u64>();
        let mut p = baseline_simulate(kind, env, theta, n_trials, sim_seed, &id)
            .map_err(|e| DataError::Domain(e.to_string()))?;
        p.participant_id = id;
        participants.push(p);
    }
    Dataset::new(
        env.kind(),
        participants,
        &format!("synthetic {} agents", kind.name()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_sets_are_balanced_and_unambiguous() {
        let env = gen_decision_problems(80, 3, 5).unwrap();
        assert_eq!(env.problems.len(), 80);
        assert_eq!(env.validities, vec![0.8, 0.9, 0.7]);
        let mut a_count = 0;
        for p in &env.problems {
            let ttb =
                heuristic_choice(HeuristicKind::Ttb, &p.features_a, &p.features_b, &env.validities)
                    .unwrap();
            let tally = heuristic_choice(
                HeuristicKind::Tallying,
                &p.features_a,
                &p.features_b,
                &env.validities,
            )
            .unwrap();
            assert_ne!(ttb, HeuristicOutcome::Tie);
            assert_ne!(tally, HeuristicOutcome::Tie);
            assert_ne!(ttb, tally);
            if ttb == HeuristicOutcome::A {
                a_count += 1;
            }
        }
        assert_eq!(a_count, 40);
    }

    #[test]
    fn minimal_problem_set_has_one_of_each() {
        let env = gen_decision_problems(2, 3, 1).unwrap();
        let outs: Vec<HeuristicOutcome> = env
            .problems
            .iter()
            .map(|p| {
                heuristic_choice(HeuristicKind::Ttb, &p.features_a, &p.features_b, &env.validities)
                    .unwrap()
            })
            .collect();
        assert!(outs.contains(&HeuristicOutcome::A) && outs.contains(&HeuristicOutcome::B));
    }

    #[test]
    fn problem_generation_is_deterministic() {
        let a = gen_decision_problems(20, 3, 9).unwrap();
        let b = gen_decision_problems(20, 3, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn odd_problem_count_is_rejected() {
        assert!(gen_decision_problems(7, 3, 0).is_err());
    }

    #[test]
    fn noiseless_agents_match_their_heuristic_exactly() {
        let env = gen_decision_problems(80, 3, 2).unwrap();
        for kind in [HeuristicKind::Ttb, HeuristicKind::Tallying] {
            let d = simulate_heuristic_agents(kind, &env, 0.0, 5, 80, 3).unwrap();
            for p in &d.participants {
                assert!(p.trials.iter().all(|t| {
                    let TrialRecord::Decision {
                        features_a,
                        features_b,
                        validities,
                        choice,
                    } = t
                    else {
                        return false;
                    };
                    let out =
                        heuristic_choice(kind, features_a, features_b, validities).unwrap();
                    out == if *choice == 0 {
                        HeuristicOutcome::A
                    } else {
                        HeuristicOutcome::B
                    }
                }));
            }
        }
    }

    #[test]
    fn half_noise_agreement_is_near_chance() {
        let env = gen_decision_problems(80, 3, 2).unwrap();
        let d = simulate_heuristic_agents(HeuristicKind::Ttb, &env, 0.5, 20, 80, 4).unwrap();
        let mut agree = 0;
        let mut total = 0;
        for p in &d.participants {
            for t in &p.trials {
                let TrialRecord::Decision {
                    features_a,
                    features_b,
                    validities,
                    choice,
                } = t
                else {
                    unreachable!()
                };
                let out = heuristic_choice(HeuristicKind::Ttb, features_a, features_b, validities)
                    .unwrap();
                let pred = if out == HeuristicOutcome::A { 0u8 } else { 1 };
                agree += usize::from(pred == *choice);
                total += 1;
            }
        }
        let frac = agree as f64 / total as f64;
        // binomial sd with n = 1600 is ~0.0125
        assert!((frac - 0.5).abs() < 0.05, "agreement {}", frac);
    }

    #[test]
    fn quarter_noise_agreement_is_near_three_quarters() {
        let env = gen_decision_problems(80, 3, 2).unwrap();
        let d = simulate_heuristic_agents(HeuristicKind::Tallying, &env, 0.25, 20, 80, 5).unwrap();
        let mut agree = 0;
        let mut total = 0;
        for p in &d.participants {
            for t in &p.trials {
                let TrialRecord::Decision {
                    features_a,
                    features_b,
                    validities,
                    choice,
                } = t
                else {
                    unreachable!()
                };
                let out =
                    heuristic_choice(HeuristicKind::Tallying, features_a, features_b, validities)
                        .unwrap();
                let pred = if out == HeuristicOutcome::A { 0u8 } else { 1 };
                agree += usize::from(pred == *choice);
                total += 1;
            }
        }
        let frac = agree as f64 / total as f64;
        assert!((frac - 0.75).abs() < 0.05, "agreement {}", frac);
    }

    #[test]
    fn identification_is_perfect_without_noise() {
        let cells = noise_sweep(&[0.0], 20, 9, 11).unwrap();
        for c in &cells {
            assert_eq!(c.accuracy, 1.0, "{:?}", c);
        }
    }

    #[test]
    fn bandit_agents_have_the_requested_shape() {
        let (d, thetas) = gen_bandit_agents(
            BaselineKind::RwPlusMinus,
            10,
            150,
            [0.2, 0.8],
            RewardAlphabet::PlusMinus,
            FeedbackKind::Partial,
            21,
        )
        .unwrap();
        assert_eq!(d.participants.len(), 10);
        assert!(d.participants.iter().all(|p| p.trials.len() == 150));
        assert!(d
            .participants
            .iter()
            .flat_map(|p| &p.trials)
            .all(|t| matches!(t, TrialRecord::Learning { reward, .. } if *reward == 1 || *reward == -1)));
        for th in &thetas {
            assert!(th[0] >= 0.0 && th[0] <= 1.0);
            assert!(th[2] >= 1.0 && th[2] <= 10.0);
        }
    }

    #[test]
    fn bandit_generation_is_deterministic() {
        let a = gen_bandit_agents(
            BaselineKind::RwKappa,
            4,
            30,
            [0.2, 0.8],
            RewardAlphabet::PlusMinus,
            FeedbackKind::Partial,
            8,
        )
        .unwrap();
        let b = gen_bandit_agents(
            BaselineKind::RwKappa,
            4,
            30,
            [0.2, 0.8],
            RewardAlphabet::PlusMinus,
            FeedbackKind::Partial,
            8,
        )
        .unwrap();
        assert_eq!(a.0.participants, b.0.participants);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn single_candidate_is_returned_trivially() {
        let (d, _) = gen_bandit_agents(
            BaselineKind::Rw,
            1,
            20,
            [0.2, 0.8],
            RewardAlphabet::ZeroOne,
            FeedbackKind::Partial,
            3,
        )
        .unwrap();
        let (winner, fits) =
            identify_model(&d.participants[0], &[BaselineKind::Rw], 5, 0).unwrap();
        assert_eq!(winner, BaselineKind::Rw);
        assert_eq!(fits.len(), 1);
    }

    #[test]
    fn identical_candidates_split_by_tie_break() {
        // the same model twice: NLLs tie exactly, so the earlier candidate
        // must always win
        let (d, _) = gen_bandit_agents(
            BaselineKind::Rw,
            3,
            20,
            [0.2, 0.8],
            RewardAlphabet::ZeroOne,
            FeedbackKind::Partial,
            4,
        )
        .unwrap();
        for p in &d.participants {
            let (winner, _) =
                identify_model(p, &[BaselineKind::Rw, BaselineKind::Rw], 5, 0).unwrap();
            assert_eq!(winner, BaselineKind::Rw);
        }
    }

    #[test]
    fn empty_recovery_report_flags_missing_accuracy() {
        let cfg = RecoveryConfig {
            n_agents: 0,
            ..RecoveryConfig::default()
        };
        let r = recovery_study(&cfg).unwrap();
        assert!(r.rows.is_empty());
        assert!(r.accuracy.iter().all(|(_, a)| a.is_none()));
    }

    #[test]
    fn rlwm_schedule_shows_each_stimulus_nine_times() {
        let env = gen_rlwm_schedule(&[3, 6], 9, 13);
        let TaskEnvironment::Rlwm(e) = &env else { unreachable!() };
        assert_eq!(e.blocks[0].stimuli.len(), 27);
        assert_eq!(e.blocks[1].stimuli.len(), 54);
        for b in &e.blocks {
            for s in 0..b.set_size {
                assert_eq!(b.stimuli.iter().filter(|&&x| x == s).count(), 9);
            }
            assert!(b.correct.iter().all(|&c| c < 3));
        }
    }

    #[test]
    fn recovered_learning_rates_track_the_truth() {
        // parameter recovery: fitted alpha correlates with true alpha
        let (d, thetas) = gen_bandit_agents(
            BaselineKind::Rw,
            40,
            150,
            [0.2, 0.8],
            RewardAlphabet::PlusMinus,
            FeedbackKind::Partial,
            31,
        )
        .unwrap();
        let mut true_a = Vec::new();
        let mut fit_a = Vec::new();
        for (p, th) in d.participants.iter().zip(&thetas) {
            let f = fit_one(&BaselineModel(BaselineKind::Rw), p, 10, 77).unwrap();
            true_a.push(th[0]);
            fit_a.push(f.theta_hat[0]);
        }
        let r = pearson(&true_a, &fit_a);
        assert!(r >= 0.7, "alpha recovery correlation {}", r);
    }

    fn pearson(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }
}
