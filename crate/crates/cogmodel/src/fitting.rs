//! Multi-start bounded maximum-likelihood fitting and information-criterion
//! scoring for any scorable model, native or interpreted.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_nll, BaselineKind};
use crate::dataset::{Dataset, ParticipantData};
use crate::error::{EvalError, FitError};
use crate::mdl::{self, ModelProgram};
use crate::params::ParameterSpec;

/// Anything that can score a participant's data at a parameter vector.
pub trait Model: Sync {
    fn id(&self) -> String;
    fn spec(&self) -> ParameterSpec;
    fn nll(&self, p: &ParticipantData, theta: &[f64]) -> Result<f64, EvalError>;
}

pub struct BaselineModel(pub BaselineKind);

impl Model for BaselineModel {
    fn id(&self) -> String {
        self.0.name().to_string()
    }

    fn spec(&self) -> ParameterSpec {
        self.0.spec()
    }

    fn nll(&self, p: &ParticipantData, theta: &[f64]) -> Result<f64, EvalError> {
        baseline_nll(self.0, p, theta)
    }
}

pub struct MdlModel {
    pub id: String,
    pub program: ModelProgram,
}

impl MdlModel {
    pub fn new(id: impl Into<String>, program: ModelProgram) -> Self {
        MdlModel {
            id: id.into(),
            program,
        }
    }
}

impl Model for MdlModel {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn spec(&self) -> ParameterSpec {
        self.program.params.clone()
    }

    fn nll(&self, p: &ParticipantData, theta: &[f64]) -> Result<f64, EvalError> {
        mdl::evaluate_nll(&self.program, p, theta)
    }
}

pub fn bic(nll: f64, k: usize, n: usize) -> f64 {
    2.0 * nll + k as f64 * (n as f64).ln()
}

pub fn aic(nll: f64, k: usize) -> f64 {
    2.0 * nll + 2.0 * k as f64
}

/// Number of scored decisions in a participant's data (the two-stage task
/// scores two per trial).
pub fn n_obs(p: &ParticipantData) -> usize {
    p.trials
        .iter()
        .map(|t| match t {
            crate::dataset::TrialRecord::Planning { .. } => 2,
            _ => 1,
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model_id: String,
    pub participant_id: String,
    pub theta_hat: Vec<f64>,
    pub nll: f64,
    pub bic: f64,
    pub aic: f64,
    pub n_obs: usize,
    pub k: usize,
    pub n_restarts: usize,
    pub converged: bool,
    pub restart_nlls: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl FitResult {
    fn failed(model_id: String, participant_id: String, k: usize, msg: String) -> FitResult {
        FitResult {
            model_id,
            participant_id,
            theta_hat: Vec::new(),
            nll: f64::INFINITY,
            bic: f64::INFINITY,
            aic: f64::INFINITY,
            n_obs: 0,
            k,
            n_restarts: 0,
            converged: false,
            restart_nlls: Vec::new(),
            error: Some(msg),
        }
    }
}

pub const NM_TOL: f64 = 1e-6;
pub const NM_MAX_EVALS: usize = 2000;

struct NmOutcome {
    x: Vec<f64>,
    fx: f64,
    converged: bool,
}

/// Derivative-free bounded simplex search. Vertices are projected into the
/// box before every evaluation, so no accepted point ever leaves the bounds.
fn nelder_mead<F>(f: &mut F, bounds: &[(f64, f64)], start: &[f64]) -> NmOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = bounds.len();
    let project = |x: &mut [f64]| {
        for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
            *xi = xi.clamp(lo, hi);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &mut Vec<f64>, evals: &mut usize| {
        project(x);
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // initial simplex: the start plus one step along each axis
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    let f0 = eval(&mut x0, &mut evals);
    simplex.push((x0, f0));
    for i in 0..n {
        let (lo, hi) = bounds[i];
        let step = 0.05 * (hi - lo);
        let mut x = start.to_vec();
        x[i] = if x[i] + step <= hi { x[i] + step } else { x[i] - step };
        let fx = eval(&mut x, &mut evals);
        simplex.push((x, fx));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while evals < NM_MAX_EVALS {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() < NM_TOL {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }

        let reflect = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let mut xr = reflect(alpha);
        let fr = eval(&mut xr, &mut evals);
        if fr < simplex[0].1 {
            let mut xe = reflect(gamma);
            let fe = eval(&mut xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (mut xc, inside) = if fr < simplex[n].1 {
                (reflect(rho), false)
            } else {
                (
                    centroid
                        .iter()
                        .zip(&simplex[n].0)
                        .map(|(c, w)| c + rho * (w - c))
                        .collect(),
                    true,
                )
            };
            let fc = eval(&mut xc, &mut evals);
            let accept = if inside { fc < simplex[n].1 } else { fc <= fr };
            if accept {
                simplex[n] = (xc, fc);
            } else {
                // shrink toward the best vertex
                let best_x = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&best_x) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    *fx = eval(x, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    NmOutcome {
        x: simplex[0].0.clone(),
        fx: simplex[0].1,
        converged,
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// RNG stream for one participant, independent of fitting order.
pub fn participant_rng(seed: u64, participant_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(participant_id))
}

/// Fits a model to one participant: `restarts` uniform-random starts plus a
/// deterministic start at the box center, each refined by bounded simplex
/// search; returns the best.
pub fn fit_one(
    model: &dyn Model,
    p: &ParticipantData,
    restarts: usize,
    seed: u64,
) -> Result<FitResult, FitError> {
    let spec = model.spec();
    let k = spec.len();
    let n = n_obs(p);

    if k == 0 {
        let nll = model.nll(p, &[]).map_err(FitError::Eval)?;
        return Ok(FitResult {
            model_id: model.id(),
            participant_id: p.participant_id.clone(),
            theta_hat: Vec::new(),
            nll,
            bic: bic(nll, 0, n),
            aic: aic(nll, 0),
            n_obs: n,
            k: 0,
            n_restarts: 0,
            converged: true,
            restart_nlls: vec![nll],
            error: None,
        });
    }

    let bounds = spec.bounds();
    let mut rng = participant_rng(seed, &p.participant_id);
    let mut objective = |theta: &[f64]| -> f64 {
        match model.nll(p, theta) {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    };

    let mut starts: Vec<Vec<f64>> = vec![spec.center()];
    for _ in 0..restarts {
        starts.push(spec.sample_uniform(&mut rng));
    }

    let mut best: Option<NmOutcome> = None;
    let mut restart_nlls = Vec::with_capacity(starts.len());
    let mut any_converged = false;
    for start in &starts {
        let out = nelder_mead(&mut objective, &bounds, start);
        restart_nlls.push(out.fx);
        if out.fx.is_finite() {
            any_converged |= out.converged;
            if best.as_ref().map_or(true, |b| out.fx < b.fx) {
                best = Some(out);
            }
        }
    }
    let best = best.ok_or(FitError::AllRestartsFailed(starts.len()))?;
    if !best.fx.is_finite() {
        return Err(FitError::NonFiniteObjective);
    }
    Ok(FitResult {
        model_id: model.id(),
        participant_id: p.participant_id.clone(),
        theta_hat: best.x,
        nll: best.fx,
        bic: bic(best.fx, k, n),
        aic: aic(best.fx, k),
        n_obs: n,
        k,
        n_restarts: starts.len(),
        converged: any_converged,
        restart_nlls,
        error: None,
    })
}

/// Fits every participant in a dataset, in parallel. Failures become flagged
/// entries rather than aborting the batch; results are order-stable and
/// independent of the parallelism degree.
pub fn fit_all(model: &dyn Model, d: &Dataset, restarts: usize, seed: u64) -> Vec<FitResult> {
    d.participants
        .par_iter()
        .map(|p| {
            fit_one(model, p, restarts, seed).unwrap_or_else(|e| {
                FitResult::failed(
                    model.id(),
                    p.participant_id.clone(),
                    model.spec().len(),
                    e.to_string(),
                )
            })
        })
        .collect()
}

pub fn write_jsonl(results: &[FitResult], path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    for r in results {
        serde_json::to_writer(&mut f, r)?;
        writeln!(f)?;
    }
    Ok(())
}

pub fn write_csv(results: &[FitResult], path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "model,participant,nll,bic,aic,k,n,theta")?;
    for r in results {
        let theta = r
            .theta_hat
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.model_id, r.participant_id, r.nll, r.bic, r.aic, r.k, r.n_obs, theta
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::baseline_simulate;
    use crate::dataset::{FeedbackKind, ParadigmKind};
    use crate::env::{BanditEnv, RewardAlphabet, TaskEnvironment};
    use crate::params::ParamDef;

    struct Quadratic;

    impl Model for Quadratic {
        fn id(&self) -> String {
            "quadratic".into()
        }

        fn spec(&self) -> ParameterSpec {
            ParameterSpec(vec![ParamDef::new("x", 0.0, 1.0)])
        }

        fn nll(&self, _p: &ParticipantData, theta: &[f64]) -> Result<f64, EvalError> {
            Ok((theta[0] - 0.3).powi(2))
        }
    }

    fn dummy_participant() -> ParticipantData {
        ParticipantData {
            participant_id: "q".into(),
            trials: vec![crate::dataset::TrialRecord::Learning {
                block: 0,
                action: 0,
                reward: 1,
                forgone_reward: None,
            }],
        }
    }

    #[test]
    fn quadratic_minimum_is_found() {
        let r = fit_one(&Quadratic, &dummy_participant(), 5, 1).unwrap();
        assert!((r.theta_hat[0] - 0.3).abs() < 1e-4, "{:?}", r.theta_hat);
        assert!(r.converged);
    }

    #[test]
    fn bic_and_aic_formulas() {
        assert!((bic(78.0, 2, 150) - (156.0 + 2.0 * 150.0_f64.ln())).abs() < 1e-12);
        assert_eq!(bic(50.0, 0, 10), 100.0);
        assert!((aic(78.0, 2) - 160.0).abs() < 1e-12);
        assert_eq!(aic(0.0, 0), 0.0);
    }

    fn sim_env() -> TaskEnvironment {
        TaskEnvironment::Bandit(BanditEnv {
            p_reward: [0.2, 0.8],
            alphabet: RewardAlphabet::ZeroOne,
            feedback: FeedbackKind::Partial,
        })
    }

    #[test]
    fn recovered_nll_beats_generating_parameters() {
        let theta = [0.3, 5.0];
        let data = baseline_simulate(BaselineKind::Rw, &sim_env(), &theta, 150, 11, "a").unwrap();
        let model = BaselineModel(BaselineKind::Rw);
        let fit = fit_one(&model, &data, 20, 0).unwrap();
        let at_truth = model.nll(&data, &theta).unwrap();
        assert!(fit.nll <= at_truth + 1e-9, "{} > {}", fit.nll, at_truth);
        assert_eq!(fit.nll, *fit
            .restart_nlls
            .iter()
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap());
    }

    #[test]
    fn more_restarts_never_hurt() {
        let data = baseline_simulate(BaselineKind::RwPlusMinus, &sim_env(), &[0.6, 0.2, 4.0], 120, 3, "a")
            .unwrap();
        let model = BaselineModel(BaselineKind::RwPlusMinus);
        let few = fit_one(&model, &data, 3, 7).unwrap();
        let many = fit_one(&model, &data, 15, 7).unwrap();
        assert!(many.nll <= few.nll + 1e-12);
        // same seed stream prefix: the first starts coincide
        assert_eq!(few.restart_nlls[..4], many.restart_nlls[..4]);
    }

    #[test]
    fn fit_all_is_deterministic_and_isolated() {
        let mut participants = Vec::new();
        for i in 0..6 {
            let mut p =
                baseline_simulate(BaselineKind::Rw, &sim_env(), &[0.4, 3.0], 60, 20 + i, "x")
                    .unwrap();
            p.participant_id = format!("p{}", i);
            participants.push(p);
        }
        let d = Dataset::new(
            ParadigmKind::Learning(FeedbackKind::Partial),
            participants,
            "synthetic".into(),
        )
        .unwrap();
        let model = BaselineModel(BaselineKind::Rw);
        let a = fit_all(&model, &d, 10, 5);
        let b = fit_all(&model, &d, 10, 5);
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        for (r, p) in a.iter().zip(&d.participants) {
            assert_eq!(r.participant_id, p.participant_id);
            assert!(r.error.is_none());
        }
    }

    #[test]
    fn theta_stays_in_bounds() {
        let data = baseline_simulate(BaselineKind::RwKappa, &sim_env(), &[0.5, 6.0, 1.0], 100, 2, "a")
            .unwrap();
        let model = BaselineModel(BaselineKind::RwKappa);
        let fit = fit_one(&model, &data, 20, 3).unwrap();
        for (x, d) in fit.theta_hat.iter().zip(&model.spec().0) {
            assert!(*x >= d.lower && *x <= d.upper);
        }
    }

    #[test]
    fn zero_parameter_models_skip_optimization() {
        let data = ParticipantData {
            participant_id: "d".into(),
            trials: vec![crate::dataset::TrialRecord::Decision {
                features_a: vec![1.0, 0.0, 0.0, 0.0],
                features_b: vec![0.0, 1.0, 1.0, 1.0],
                validities: vec![0.9, 0.8, 0.7, 0.6],
                choice: 0,
            }],
        };
        let fit = fit_one(&BaselineModel(BaselineKind::Ttb), &data, 20, 0).unwrap();
        assert_eq!(fit.k, 0);
        assert_eq!(fit.bic, 2.0 * fit.nll);
        assert!(fit.nll < 1e-8); // perfectly predicted choice
    }
}
