use super::*;
use crate::binding::Slot;
use crate::dataset::{FeedbackKind, ParadigmKind, ParticipantData, TrialRecord};
use crate::env::{BanditEnv, RewardAlphabet, TaskEnvironment};
use crate::error::EvalError;

fn learning_trials(moves: &[(u8, i32)]) -> ParticipantData {
    ParticipantData {
        participant_id: "p1".into(),
        trials: moves
            .iter()
            .map(|&(action, reward)| TrialRecord::Learning {
                block: 0,
                action,
                reward,
                forgone_reward: None,
            })
            .collect(),
    }
}

#[test]
fn parses_rw_transcription() {
    let p = parse(transcriptions::RW).unwrap();
    assert_eq!(p.params.names(), vec!["alpha", "beta"]);
    assert_eq!(p.params.0[1].upper, 20.0);
    assert_eq!(p.choose_slots, vec![Slot::Action]);
    assert!(!p.reset_per_block);
    assert_eq!(p.state.len(), 1);
}

#[test]
fn print_parse_round_trips_all_transcriptions() {
    for src in [
        transcriptions::RW,
        transcriptions::RW_PM,
        transcriptions::RW_KAPPA,
        transcriptions::PWADD,
    ] {
        let p = parse(src).unwrap();
        let printed = p.print();
        let reparsed = parse(&printed).unwrap();
        assert_eq!(p, reparsed, "round trip failed for:\n{}", printed);
    }
}

#[test]
fn unknown_identifier_is_rejected() {
    let src = "params { a: [0, 1] }\ntrial { x = a + mystery\nchoose(action, [x, 1 - x]) }";
    match parse(src) {
        Err(MdlError::UnknownIdentifier(n)) => assert_eq!(n, "mystery"),
        other => panic!("expected unknown identifier, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn unused_parameter_is_rejected() {
    let src = "params { a: [0, 1] b: [0, 1] }\ntrial { choose(action, [a, 1 - a]) }";
    assert!(matches!(parse(src), Err(MdlError::UnusedParameter(n)) if n == "b"));
}

#[test]
fn duplicate_parameter_is_rejected() {
    let src = "params { a: [0, 1] a: [0, 2] }\ntrial { choose(action, [a, 1 - a]) }";
    assert!(matches!(parse(src), Err(MdlError::DuplicateParameter(_))));
}

#[test]
fn nested_choose_is_rejected() {
    let src = "params { a: [0, 1] }\ntrial { if a > 0 { choose(action, [a, 1 - a]) } }";
    assert!(matches!(parse(src), Err(MdlError::Invalid(_))));
}

#[test]
fn set_size_state_requires_block_reset() {
    let src = "params { a: [0, 1] }\nstate { W = vector(set_size, 0) }\ntrial { choose(action, [a, 1 - a]) }";
    assert!(matches!(parse(src), Err(MdlError::Invalid(_))));
}

#[test]
fn assigning_to_inputs_or_params_is_rejected() {
    let src = "params { a: [0, 1] }\ntrial { reward = 1\nchoose(action, [a, 1 - a]) }";
    assert!(matches!(parse(src), Err(MdlError::Invalid(_))));
    let src = "params { a: [0, 1] }\ntrial { a = 1\nchoose(action, [a, 1 - a]) }";
    assert!(matches!(parse(src), Err(MdlError::Invalid(_))));
}

#[test]
fn step_budget_halts_runaway_programs() {
    let mut src = String::from("params { a: [0, 1] }\ntrial {\n");
    for _ in 0..STEP_BUDGET {
        src.push_str("x = 1\n");
    }
    src.push_str("choose(action, [a, 1 - a]) }\n");
    let p = parse(&src).unwrap();
    let data = learning_trials(&[(0, 1)]);
    match evaluate_nll(&p, &data, &[0.5]) {
        Err(EvalError::StepBudget(_)) => {}
        other => panic!("expected step budget error, got {:?}", other),
    }
}

#[test]
fn division_guard_raises_numerics_error() {
    let src = "params { a: [0, 1] }\ntrial { choose(action, [a, 1 - a])\nx = 1 / (reward - reward) }";
    let p = parse(src).unwrap();
    let data = learning_trials(&[(0, 1)]);
    assert!(matches!(
        evaluate_nll(&p, &data, &[0.5]),
        Err(EvalError::Numerics(_))
    ));
}

#[test]
fn rw_nll_matches_hand_computation() {
    let p = parse(transcriptions::RW).unwrap();
    // alpha = 0.5, beta = 2; V starts at [0.5, 0.5]
    // t1: probs [.5,.5], take 0, reward 1 -> V[0] = 0.75
    // t2: probs softmax([1.5, 1.0]), take 1
    let data = learning_trials(&[(0, 1), (1, 1)]);
    let nll = evaluate_nll(&p, &data, &[0.5, 2.0]).unwrap();
    let expected = 2.0_f64.ln() + (1.0 + 0.5_f64.exp()).ln();
    assert!((nll - expected).abs() < 1e-12, "nll {} vs {}", nll, expected);
}

#[test]
fn scoring_rejects_wrong_paradigm() {
    let p = parse(transcriptions::RW).unwrap();
    let data = ParticipantData {
        participant_id: "p1".into(),
        trials: vec![TrialRecord::Decision {
            features_a: vec![1.0; 4],
            features_b: vec![0.0; 4],
            validities: vec![0.9, 0.8, 0.7, 0.6],
            choice: 0,
        }],
    };
    assert!(matches!(
        evaluate_nll(&p, &data, &[0.5, 2.0]),
        Err(EvalError::ParadigmMismatch(_))
    ));
}

#[test]
fn partial_feedback_hides_forgone_reward() {
    let src = "params { a: [0, 1] }\ntrial {
      choose(action, [a, 1 - a])
      x = forgone_reward
    }";
    let p = parse(src).unwrap();
    let data = learning_trials(&[(0, 1)]);
    assert!(matches!(
        evaluate_nll(&p, &data, &[0.5]),
        Err(EvalError::ParadigmMismatch(_))
    ));
}

#[test]
fn out_of_bounds_theta_is_rejected() {
    let p = parse(transcriptions::RW).unwrap();
    let data = learning_trials(&[(0, 1)]);
    assert!(matches!(
        evaluate_nll(&p, &data, &[1.5, 2.0]),
        Err(EvalError::Bounds { .. })
    ));
}

#[test]
fn simulation_scores_back_under_same_program() {
    let p = parse(transcriptions::RW_PM).unwrap();
    let env = TaskEnvironment::Bandit(BanditEnv {
        p_reward: [0.8, 0.2],
        alphabet: RewardAlphabet::PlusMinus,
        feedback: FeedbackKind::Partial,
    });
    let theta = [0.4, 0.2, 3.0];
    let data = simulate(&p, &env, &theta, 100, 7, "sim-7").unwrap();
    assert_eq!(data.trials.len(), 100);
    assert!(data
        .trials
        .iter()
        .all(|t| t.matches(ParadigmKind::Learning(FeedbackKind::Partial))));
    let nll = evaluate_nll(&p, &data, &theta).unwrap();
    assert!(nll.is_finite() && nll > 0.0);
    // a steep softmax should prefer the rich arm by the end
    let later: Vec<u8> = data.trials[50..]
        .iter()
        .map(|t| match t {
            TrialRecord::Learning { action, .. } => *action,
            _ => unreachable!(),
        })
        .collect();
    let zeros = later.iter().filter(|&&a| a == 0).count();
    assert!(zeros > later.len() / 2, "rich arm chosen {} of {}", zeros, later.len());
}

#[test]
fn simulation_is_deterministic_under_a_seed() {
    let p = parse(transcriptions::RW).unwrap();
    let env = TaskEnvironment::Bandit(BanditEnv {
        p_reward: [0.7, 0.3],
        alphabet: RewardAlphabet::ZeroOne,
        feedback: FeedbackKind::Full,
    });
    let a = simulate(&p, &env, &[0.3, 4.0], 50, 99, "s").unwrap();
    let b = simulate(&p, &env, &[0.3, 4.0], 50, 99, "s").unwrap();
    assert_eq!(a, b);
}

#[test]
fn matrix_state_and_block_reset_work() {
    let src = "params { a: [0, 1] }
state reset_per_block {
  Q = matrix(set_size, 3, 0.25)
}
trial {
  choose(action, softmax(Q[stimulus], 5))
  Q[stimulus, action] += a * (reward - Q[stimulus, action])
}";
    let p = parse(src).unwrap();
    assert!(p.reset_per_block);
    let data = ParticipantData {
        participant_id: "w".into(),
        trials: vec![
            TrialRecord::WorkingMemory {
                block: 0,
                set_size: 3,
                stimulus: 2,
                action: 1,
                reward: 1,
            },
            TrialRecord::WorkingMemory {
                block: 1,
                set_size: 6,
                stimulus: 5,
                action: 0,
                reward: 0,
            },
        ],
    };
    let nll = evaluate_nll(&p, &data, &[0.5]).unwrap();
    // both trials score 1/3 because state resets before the second block
    let expected = 2.0 * 3.0_f64.ln();
    assert!((nll - expected).abs() < 1e-12);
}

#[test]
fn comment_lines_are_ignored()
{
    let src = "# learning model\nparams { a: [0, 1] }\ntrial {\n  # pick\n  choose(action, [a, 1 - a])\n}";
    assert!(parse(src).is_ok());
}
