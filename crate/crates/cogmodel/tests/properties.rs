//! Property-based checks across the library surface.

use proptest::prelude::*;

use cogmodel::comparison::exceedance_probability;
use cogmodel::dataset::{
    split, Dataset, FeedbackKind, ParadigmKind, ParticipantData, SplitSpec, TrialRecord,
};
use cogmodel::mdl;

fn learning_dataset(n: usize) -> Dataset {
    let participants = (0..n)
        .map(|i| ParticipantData {
            participant_id: format!("p{:02}", i),
            trials: vec![TrialRecord::Learning {
                block: 0,
                action: (i % 2) as u8,
                reward: 1,
                forgone_reward: None,
            }],
        })
        .collect();
    Dataset::new(
        ParadigmKind::Learning(FeedbackKind::Partial),
        participants,
        "prop",
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_partition(n in 5usize..40, seed in any::<u64>()) {
        let d = learning_dataset(n);
        let spec = SplitSpec { seed, ..SplitSpec::default() };
        let (a, b, c) = split(&d, &spec).unwrap();
        let mut ids: Vec<String> = a.participants.iter()
            .chain(&b.participants)
            .chain(&c.participants)
            .map(|p| p.participant_id.clone())
            .collect();
        prop_assert_eq!(ids.len(), n);
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), n);
    }

    #[test]
    fn split_fractions_respected(n in 10usize..60, seed in any::<u64>()) {
        let d = learning_dataset(n);
        let spec = SplitSpec { seed, ..SplitSpec::default() };
        let (a, b, _c) = split(&d, &spec).unwrap();
        prop_assert_eq!(a.n_participants(), (n as f64 * 0.2).floor() as usize);
        prop_assert_eq!(b.n_participants(), (n as f64 * 0.4).floor() as usize);
    }

    #[test]
    fn exceedance_sums_to_one_and_is_permutation_equivariant(
        n_participants in 3usize..10,
        n_models in 2usize..4,
        seed in any::<u64>(),
        raw in prop::collection::vec(-30.0f64..0.0, 40),
    ) {
        let lev: Vec<Vec<f64>> = (0..n_participants)
            .map(|i| (0..n_models).map(|j| raw[(i * n_models + j) % raw.len()] + (i + j) as f64 * 0.01).collect())
            .collect();
        let p = exceedance_probability(n_models, &lev, 20_000, seed).unwrap();
        let total: f64 = p.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-3, "sum {}", total);

        // swap the first two model columns; estimates must swap exactly
        let swapped: Vec<Vec<f64>> = lev.iter().map(|row| {
            let mut r = row.clone();
            r.swap(0, 1);
            r
        }).collect();
        let q = exceedance_probability(n_models, &swapped, 20_000, seed).unwrap();
        prop_assert_eq!(p[0], q[1]);
        prop_assert_eq!(p[1], q[0]);
        for k in 2..n_models {
            prop_assert_eq!(p[k], q[k]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parse_print_round_trip_on_generated_programs(
        lo in 0.0f64..0.5,
        hi in 1.0f64..10.0,
        init in 0.0f64..1.0,
    ) {
        let src = format!(
            "params {{\n  a: [{lo}, {hi}]\n  b: [0, 20]\n}}\n\nstate {{\n  V = vector(2, {init})\n}}\n\ntrial {{\n  choose(action, softmax(V, b))\n  V[action] += a * (reward - V[action])\n}}\n",
        );
        let p1 = mdl::parse(&src).unwrap();
        let printed = mdl::print_program(&p1);
        let p2 = mdl::parse(&printed).unwrap();
        prop_assert_eq!(mdl::print_program(&p2), printed);
    }
}

#[test]
fn transcription_sources_round_trip_exactly() {
    for src in [
        mdl::transcriptions::RW,
        mdl::transcriptions::RW_PM,
        mdl::transcriptions::RW_KAPPA,
        mdl::transcriptions::PWADD,
    ] {
        let p = mdl::parse(src).unwrap();
        let printed = mdl::print_program(&p);
        let p2 = mdl::parse(&printed).unwrap();
        assert_eq!(printed, mdl::print_program(&p2));
    }
}
