//! Group-level model comparison: BIC tables, paired tests, and
//! random-effects exceedance probabilities.

use crate::error::CompareError;
use crate::fitting::FitResult;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::digamma;
use std::io::Write;
use std::path::Path;

pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub models: Vec<String>,
    pub participants: Vec<String>,
    /// participants x models, aligned with `participants` and `models`.
    pub per_participant_bic: Vec<Vec<f64>>,
    pub mean_bic: Vec<f64>,
    pub sem_bic: Vec<f64>,
    pub best_model: String,
    pub runner_up: String,
    /// Paired one-sided t-test of runner-up BIC minus best BIC,
    /// df = participants - 1. Positive t favors the best model.
    pub t_stat: f64,
    pub p_value: f64,
    pub exceedance: Vec<f64>,
    /// Evidence proxy used for the random-effects analysis.
    pub evidence: &'static str,
}

/// Aggregate per-participant fits of several models into a report.
/// Each element of `fits` holds one model's results; all models must
/// cover the same participant set.
pub fn compare(
    fits: &[Vec<FitResult>],
    mc_samples: usize,
    seed: u64,
) -> Result<ComparisonReport, CompareError> {
    if fits.len() < 2 {
        return Err(CompareError::TooFewModels(fits.len()));
    }
    let models: Vec<String> = fits
        .iter()
        .map(|f| f.first().map(|r| r.model_id.clone()).unwrap_or_default())
        .collect();

    let mut sorted: Vec<Vec<&FitResult>> = fits
        .iter()
        .map(|f| {
            let mut v: Vec<&FitResult> = f.iter().collect();
            v.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
            v
        })
        .collect();
    let ids: Vec<String> = sorted[0].iter().map(|r| r.participant_id.clone()).collect();
    for (m, col) in sorted.iter().enumerate() {
        let other: Vec<&str> = col.iter().map(|r| r.participant_id.as_str()).collect();
        if other.len() != ids.len() || other.iter().zip(&ids).any(|(a, b)| *a != b.as_str()) {
            return Err(CompareError::ParticipantSetMismatch(format!(
                "model '{}' covers {} participants, expected the same {} as '{}'",
                models[m],
                other.len(),
                ids.len(),
                models[0]
            )));
        }
    }
    let n = ids.len();

    let mut bic = vec![vec![0.0; models.len()]; n];
    for (m, col) in sorted.iter().enumerate() {
        for (p, r) in col.iter().enumerate() {
            if !r.bic.is_finite() {
                return Err(CompareError::NonFiniteEvidence {
                    participant: p,
                    model: m,
                });
            }
            bic[p][m] = r.bic;
        }
    }
    sorted.clear();

    let mean_bic: Vec<f64> = (0..models.len())
        .map(|m| bic.iter().map(|row| row[m]).sum::<f64>() / n as f64)
        .collect();
    let sem_bic: Vec<f64> = (0..models.len())
        .map(|m| {
            if n < 2 {
                return 0.0;
            }
            let mu = mean_bic[m];
            let var =
                bic.iter().map(|row| (row[m] - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        })
        .collect();

    let mut order: Vec<usize> = (0..models.len()).collect();
    order.sort_by(|&a, &b| mean_bic[a].total_cmp(&mean_bic[b]));
    let (best, runner) = (order[0], order[1]);
    let diffs: Vec<f64> = bic.iter().map(|row| row[runner] - row[best]).collect();
    let (t_stat, p_value) = paired_t(&diffs);

    let log_ev: Vec<Vec<f64>> = bic
        .iter()
        .map(|row| row.iter().map(|&b| -b / 2.0).collect())
        .collect();
    let exceedance = exceedance_probability(models.len(), &log_ev, mc_samples, seed)?;

    Ok(ComparisonReport {
        best_model: models[best].clone(),
        runner_up: models[runner].clone(),
        models,
        participants: ids,
        per_participant_bic: bic,
        mean_bic,
        sem_bic,
        t_stat,
        p_value,
        exceedance,
        evidence: "-BIC/2",
    })
}

fn paired_t(diffs: &[f64]) -> (f64, f64) {
    let n = diffs.len();
    if n < 2 {
        return (0.0, 0.5);
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    if se < 1e-12 {
        return if mean.abs() < 1e-12 {
            (0.0, 0.5)
        } else if mean > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (f64::NEG_INFINITY, 1.0)
        };
    }
    let t = mean / se;
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid t distribution");
    (t, 1.0 - dist.cdf(t))
}

/// Random-effects Bayesian model selection. Dirichlet prior alpha0 = 1 per
/// model, fixed-point variational updates on model frequencies until the
/// alpha change drops below 1e-6, then the probability that each model has
/// the largest frequency is estimated by Dirichlet Monte Carlo.
///
/// The whole computation runs in a canonical column order (columns sorted
/// lexicographically), and exactly identical columns share the average of
/// their estimates, so permuting model columns permutes the result exactly.
pub fn exceedance_probability(
    n_models: usize,
    log_evidence: &[Vec<f64>],
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<f64>, CompareError> {
    if n_models < 2 {
        return Err(CompareError::TooFewModels(n_models));
    }
    for (p, row) in log_evidence.iter().enumerate() {
        for (m, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(CompareError::NonFiniteEvidence {
                    participant: p,
                    model: m,
                });
            }
        }
        debug_assert_eq!(row.len(), n_models);
    }

    // canonical order: sort column indices by column content
    let column = |m: usize| -> Vec<f64> { log_evidence.iter().map(|row| row[m]).collect() };
    let mut canon: Vec<usize> = (0..n_models).collect();
    canon.sort_by(|&a, &b| {
        let (ca, cb) = (column(a), column(b));
        ca.iter()
            .zip(&cb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let lev: Vec<Vec<f64>> = log_evidence
        .iter()
        .map(|row| canon.iter().map(|&m| row[m]).collect())
        .collect();

    let alpha = variational_alpha(n_models, &lev);
    let mut probs = dirichlet_argmax_mc(&alpha, mc_samples, seed);

    // average estimates across groups of identical columns
    let mut i = 0;
    while i < n_models {
        let mut j = i + 1;
        while j < n_models && column(canon[j]) == column(canon[i]) {
            j += 1;
        }
        if j > i + 1 {
            let avg = probs[i..j].iter().sum::<f64>() / (j - i) as f64;
            probs[i..j].fill(avg);
        }
        i = j;
    }

    let mut out = vec![0.0; n_models];
    for (slot, &m) in canon.iter().enumerate() {
        out[m] = probs[slot];
    }
    Ok(out)
}

fn variational_alpha(n_models: usize, lev: &[Vec<f64>]) -> Vec<f64> {
    let mut alpha = vec![1.0; n_models];
    for _ in 0..10_000 {
        let sum: f64 = alpha.iter().sum();
        let dig_sum = digamma(sum);
        let mut beta = vec![0.0; n_models];
        for row in lev {
            let logits: Vec<f64> = (0..n_models)
                .map(|m| row[m] + digamma(alpha[m]) - dig_sum)
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let u: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
            let z: f64 = u.iter().sum();
            for m in 0..n_models {
                beta[m] += u[m] / z;
            }
        }
        let next: Vec<f64> = beta.iter().map(|b| 1.0 + b).collect();
        let delta: f64 = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        alpha = next;
        if delta < 1e-6 {
            break;
        }
    }
    alpha
}

fn dirichlet_argmax_mc(alpha: &[f64], mc_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gammas: Vec<Gamma<f64>> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive alpha"))
        .collect();
    let mut wins = vec![0u64; alpha.len()];
    let mut draw = vec![0.0; alpha.len()];
    for _ in 0..mc_samples {
        for (d, g) in draw.iter_mut().zip(&gammas) {
            *d = g.sample(&mut rng);
        }
        let mut arg = 0;
        for (k, &d) in draw.iter().enumerate() {
            if d > draw[arg] {
                arg = k;
            }
        }
        wins[arg] += 1;
    }
    wins.iter().map(|&w| w as f64 / mc_samples as f64).collect()
}

impl ComparisonReport {
    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")
    }

    /// Per-participant BIC table for external plotting.
    pub fn write_bic_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["participant".to_string()];
        header.extend(self.models.iter().cloned());
        w.write_record(&header)?;
        for (p, row) in self.participants.iter().zip(&self.per_participant_bic) {
            let mut rec = vec![p.clone()];
            rec.extend(row.iter().map(|b| format!("{:.6}", b)));
            w.write_record(&rec)?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(model: &str, participant: &str, bic: f64) -> FitResult {
        FitResult {
            model_id: model.into(),
            participant_id: participant.into(),
            theta_hat: vec![0.5],
            nll: bic / 2.0,
            bic,
            aic: bic,
            n_obs: 100,
            k: 0,
            n_restarts: 0,
            converged: true,
            restart_nlls: vec![],
            error: None,
        }
    }

    fn model_fits(model: &str, bics: &[f64]) -> Vec<FitResult> {
        bics.iter()
            .enumerate()
            .map(|(i, &b)| fit(model, &format!("p{:03}", i), b))
            .collect()
    }

    #[test]
    fn identical_bic_vectors_are_symmetric() {
        let bics: Vec<f64> = (0..30).map(|i| 100.0 + i as f64).collect();
        let fits = vec![model_fits("a", &bics), model_fits("b", &bics)];
        let r = compare(&fits, 200_000, 1).unwrap();
        assert_eq!(r.t_stat, 0.0);
        assert_eq!(r.p_value, 0.5);
        assert!((r.exceedance[0] - 0.5).abs() < 0.01);
        assert_eq!(r.exceedance[0], r.exceedance[1]);
        let total: f64 = r.exceedance.iter().sum();
        assert!((total - 1.0).abs() < 1e-3);
    }

    #[test]
    fn dominant_model_takes_nearly_all_exceedance() {
        let a: Vec<f64> = (0..50).map(|i| 90.0 + i as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        let fits = vec![model_fits("a", &a), model_fits("b", &b)];
        let r = compare(&fits, 200_000, 2).unwrap();
        assert_eq!(r.best_model, "a");
        assert!(r.exceedance[0] >= 0.99, "exceedance {:?}", r.exceedance);
        assert!(r.t_stat > 0.0 && r.p_value < 1e-6);
    }

    #[test]
    fn dominated_models_fall_below_five_percent() {
        let a: Vec<f64> = (0..40).map(|i| 80.0 + (i % 7) as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 12.0).collect();
        let c: Vec<f64> = a.iter().map(|x| x + 15.0).collect();
        let fits = vec![model_fits("a", &a), model_fits("b", &b), model_fits("c", &c)];
        let r = compare(&fits, 200_000, 3).unwrap();
        assert!(r.exceedance[1] < 0.05 && r.exceedance[2] < 0.05, "{:?}", r.exceedance);
        let total: f64 = r.exceedance.iter().sum();
        assert!((total - 1.0).abs() < 1e-3);
    }

    #[test]
    fn column_permutation_is_exactly_equivariant() {
        let lev: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let x = i as f64;
                vec![-40.0 - 0.3 * x, -41.5 + 0.1 * x, -39.0 - 0.7 * x]
            })
            .collect();
        let base = exceedance_probability(3, &lev, 100_000, 9).unwrap();
        let perm = [2usize, 0, 1]; // new column j takes old column perm[j]
        let permuted: Vec<Vec<f64>> =
            lev.iter().map(|row| perm.iter().map(|&m| row[m]).collect()).collect();
        let out = exceedance_probability(3, &permuted, 100_000, 9).unwrap();
        for j in 0..3 {
            assert_eq!(out[j], base[perm[j]]);
        }
    }

    #[test]
    fn tied_columns_share_one_estimate_exactly() {
        let lev: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![-50.0 + i as f64, -50.0 + i as f64, -55.0])
            .collect();
        let e = exceedance_probability(3, &lev, 50_000, 4).unwrap();
        assert_eq!(e[0], e[1]);
        assert!(e[2] < e[0]);
    }

    #[test]
    fn per_participant_evidence_shift_changes_nothing() {
        let lev: Vec<Vec<f64>> = (0..15)
            .map(|i| vec![-30.0 - i as f64, -32.0 - 0.5 * i as f64])
            .collect();
        let shifted: Vec<Vec<f64>> = lev
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|v| v + 100.0 + i as f64).collect())
            .collect();
        let a = exceedance_probability(2, &lev, 100_000, 5).unwrap();
        let b = exceedance_probability(2, &shifted, 100_000, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{} vs {}", x, y);
        }
    }

    #[test]
    fn zero_participants_fall_back_to_the_prior() {
        let e = exceedance_probability(3, &[], 300_000, 6).unwrap();
        for &p in &e {
            assert!((p - 1.0 / 3.0).abs() < 0.01, "{:?}", e);
        }
    }

    #[test]
    fn mismatched_participant_sets_are_rejected() {
        let a = model_fits("a", &[100.0, 101.0]);
        let mut b = model_fits("b", &[100.0, 101.0]);
        b[1].participant_id = "other".into();
        assert!(matches!(
            compare(&[a, b], 1000, 0),
            Err(CompareError::ParticipantSetMismatch(_))
        ));
    }

    #[test]
    fn single_model_is_rejected() {
        let a = model_fits("a", &[100.0]);
        assert!(matches!(compare(&[a], 1000, 0), Err(CompareError::TooFewModels(1))));
    }

    #[test]
    fn paired_t_matches_hand_computation() {
        // diffs 1..5: mean 3, sd sqrt(2.5), se sqrt(0.5), t = 3/sqrt(0.5)
        let (t, p) = paired_t(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let expect = 3.0 / 0.5_f64.sqrt();
        assert!((t - expect).abs() < 1e-12);
        assert!(p > 0.0 && p < 0.05);
    }
}
