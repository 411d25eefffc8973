//! Statistical checks on generated data and hold-out accuracy of the
//! recommender.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::population::{Citizen, Condition, PrevalenceConfig};
use crate::ratings::RatingsMatrix;
use crate::recommender::{Recommendation, Recommender, SimilarityModel};
use crate::rng::{substream, Domain};

/// `E|e|` for `e ~ N(0, sigma^2)`: the best MAE any predictor can reach
/// against targets carrying that noise.
pub fn gaussian_mae_floor(std_dev: f64) -> f64 {
    std_dev * (2.0 / std::f64::consts::PI).sqrt()
}

/// Half-width of the 3-sigma binomial band for a proportion.
pub fn three_sigma_bound(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceCheck {
    pub condition: &'static str,
    pub target: f64,
    pub empirical: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceReport {
    pub n: usize,
    pub checks: Vec<PrevalenceCheck>,
    /// Citizens at or below the heart-age threshold with heart disease.
    pub young_with_heart_disease: usize,
}

impl PrevalenceReport {
    pub fn pass(&self) -> bool {
        self.young_with_heart_disease == 0 && self.checks.iter().all(|c| c.pass)
    }
}

pub fn prevalence_report(population: &[Citizen], cfg: &PrevalenceConfig) -> Result<PrevalenceReport> {
    if population.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let n = population.len();
    let checks = Condition::ALL
        .iter()
        .map(|&c| {
            let target = cfg.target(c);
            let count = population.iter().filter(|p| p.health.get(c).is_present()).count();
            let empirical = count as f64 / n as f64;
            let bound = three_sigma_bound(target, n);
            PrevalenceCheck {
                condition: c.name(),
                target,
                empirical,
                bound,
                pass: (empirical - target).abs() <= bound,
            }
        })
        .collect();
    let young_with_heart_disease = population
        .iter()
        .filter(|p| p.age <= cfg.heart_age_threshold && p.health.heart_disease.is_present())
        .count();
    Ok(PrevalenceReport {
        n,
        checks,
        young_with_heart_disease,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestCell {
    pub user: usize,
    pub route: usize,
    /// Stored (integer) rating of the hidden cell.
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSplit {
    pub train: RatingsMatrix,
    pub test: Vec<TestCell>,
}

/// Users must keep at least this many training ratings.
pub const MIN_TRAIN_PER_USER: usize = 2;
const MAX_REDRAWS: usize = 1_000;

/// Hides each rated cell independently with probability `fraction`. A user
/// left with fewer than two training ratings has their row redrawn from
/// the same keyed stream; the split fails if that keeps happening.
pub fn holdout_split(matrix: &RatingsMatrix, fraction: f64, seed: u64) -> Result<HoldoutSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Validation(format!(
            "hold-out fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let per_user: Vec<Vec<usize>> = (0..matrix.n_users())
        .into_par_iter()
        .map(|u| {
            let rated: Vec<usize> = matrix
                .row(u)
                .iter()
                .enumerate()
                .filter_map(|(r, v)| v.map(|_| r))
                .collect();
            let user_id = matrix.user_ids()[u];
            if rated.len() < MIN_TRAIN_PER_USER {
                return Err(Error::InfeasibleSplit(format!(
                    "user {user_id} has only {} ratings",
                    rated.len()
                )));
            }
            let mut rng = substream(seed, Domain::Holdout, u64::from(user_id), 0);
            for _ in 0..MAX_REDRAWS {
                let hidden: Vec<usize> = rated
                    .iter()
                    .copied()
                    .filter(|_| rng.random::<f64>() < fraction)
                    .collect();
                if rated.len() - hidden.len() >= MIN_TRAIN_PER_USER {
                    return Ok(hidden);
                }
            }
            Err(Error::InfeasibleSplit(format!(
                "fraction {fraction} keeps leaving user {user_id} with fewer than {MIN_TRAIN_PER_USER} training ratings"
            )))
        })
        .collect::<Result<_>>()?;

    let mut train = matrix.clone();
    let mut test = Vec::new();
    for (u, hidden) in per_user.into_iter().enumerate() {
        for r in hidden {
            let rating = matrix.get(u, r).expect("hidden cells are rated");
            train.set(u, r, None)?;
            test.push(TestCell {
                user: u,
                route: r,
                rating,
            });
        }
    }
    Ok(HoldoutSplit { train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Accuracy {
    pub mae: f64,
    pub rmse: f64,
    pub n: usize,
}

/// MAE and RMSE of `predictions` against `truth`; every truth value needs a
/// prediction.
pub fn accuracy(predictions: &[Option<f64>], truth: &[f64]) -> Result<Accuracy> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Validation("no test cells".into()));
    }
    let (mut abs, mut sq) = (0.0, 0.0);
    for (i, (p, t)) in predictions.iter().zip(truth).enumerate() {
        let p = p.ok_or_else(|| Error::Validation(format!("missing prediction for test cell {i}")))?;
        abs += (p - t).abs();
        sq += (p - t).powi(2);
    }
    let n = truth.len() as f64;
    Ok(Accuracy {
        mae: abs / n,
        rmse: (sq / n).sqrt(),
        n: truth.len(),
    })
}

/// Fraction of `predicted` route ids that also appear in `reference`.
pub fn precision_at_n(predicted: &[Recommendation], reference: &[String]) -> f64 {
    if predicted.is_empty() {
        return 0.0;
    }
    let reference: HashSet<&str> = reference.iter().map(String::as_str).collect();
    let hits = predicted
        .iter()
        .filter(|r| reference.contains(r.route_id.as_str()))
        .count();
    hits as f64 / predicted.len() as f64
}

/// Predicts every test cell from the training matrix.
pub fn predict_test_cells(recommender: &Recommender<'_>, test: &[TestCell]) -> Result<Vec<f64>> {
    test.par_iter()
        .map(|c| recommender.predict_index(c.user, c.route).map(|p| p.value))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub fraction: f64,
    pub seed: u64,
    pub model: SimilarityModel,
    pub n_test: usize,
    pub cf: Accuracy,
    /// Accuracy of the noiseless rating, when it is available.
    pub oracle: Option<Accuracy>,
    pub noise_std: f64,
    pub noise_floor: f64,
    /// `[floor - 0.1, floor + 0.6]`.
    pub band: (f64, f64),
    pub within_band: bool,
}

/// Per-cell ground truth available to the evaluator, row-major over the
/// full matrix.
#[derive(Debug, Clone, Copy, Default)]
pub struct Truth<'a> {
    /// Full-precision noisy ratings; falls back to the stored ratings.
    pub noisy: Option<&'a [f64]>,
    pub deterministic: Option<&'a [f64]>,
}

pub fn evaluate_holdout(
    matrix: &RatingsMatrix,
    truth: Truth<'_>,
    fraction: f64,
    seed: u64,
    model: &SimilarityModel,
    noise_std: f64,
) -> Result<EvaluationReport> {
    let cells = matrix.n_users() * matrix.n_routes();
    for col in [truth.noisy, truth.deterministic].into_iter().flatten() {
        if col.len() != cells {
            return Err(Error::LengthMismatch {
                left: col.len(),
                right: cells,
            });
        }
    }
    let split = holdout_split(matrix, fraction, seed)?;
    let recommender = Recommender::new(&split.train, *model)?;
    let predicted = predict_test_cells(&recommender, &split.test)?;
    let m = matrix.n_routes();
    let target: Vec<f64> = split
        .test
        .iter()
        .map(|c| truth.noisy.map_or(c.rating, |v| v[c.user * m + c.route]))
        .collect();
    let cf = accuracy(&predicted.iter().copied().map(Some).collect::<Vec<_>>(), &target)?;
    let oracle = truth
        .deterministic
        .map(|det| {
            let baseline: Vec<Option<f64>> = split.test.iter().map(|c| Some(det[c.user * m + c.route])).collect();
            accuracy(&baseline, &target)
        })
        .transpose()?;
    let noise_floor = gaussian_mae_floor(noise_std);
    let band = (noise_floor - 0.1, noise_floor + 0.6);
    Ok(EvaluationReport {
        fraction,
        seed,
        model: *model,
        n_test: split.test.len(),
        within_band: cf.mae >= band.0 && cf.mae <= band.1,
        cf,
        oracle,
        noise_std,
        noise_floor,
        band,
    })
}
