//! User-based collaborative filtering over a [`RatingsMatrix`].
//!
//! Similarities are computed on co-rated cells only. A prediction for
//! `(u, r)` uses the `k` users most similar to `u` among those who rated
//! `r` and have a defined, strictly positive similarity (ties broken by
//! lower user index), and takes the mean-centred weighted average of their
//! deviations. With no eligible neighbour the route's mean rating is used.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::Citizen;
use crate::rating_sim::{deterministic_rating, ModifierTable, MAX_RATING};
use crate::ratings::RatingsMatrix;
use crate::routes::{Catalog, RouteStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Pearson,
    Cosine,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Pearson => "pearson",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Metric::Pearson),
            "cosine" => Ok(Metric::Cosine),
            _ => Err(Error::Config(format!("unknown similarity metric `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityModel {
    pub metric: Metric,
    pub k_neighbors: usize,
    /// Minimum number of co-rated routes for a similarity to be defined.
    pub min_overlap: usize,
}

impl Default for SimilarityModel {
    fn default() -> Self {
        SimilarityModel {
            metric: Metric::Pearson,
            k_neighbors: 30,
            min_overlap: 3,
        }
    }
}

impl SimilarityModel {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::Config("k_neighbors must be at least 1".into()));
        }
        if self.min_overlap == 0 {
            return Err(Error::Config("min_overlap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Similarity of two rating rows over their co-rated cells, or `None` when
/// undefined (too little overlap, or zero variance / zero norm).
pub fn similarity(u: &[Option<f64>], v: &[Option<f64>], model: &SimilarityModel) -> Result<Option<f64>> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let pairs: Vec<(f64, f64)> = u.iter().zip(v).filter_map(|(a, b)| Some(((*a)?, (*b)?))).collect();
    if pairs.len() < model.min_overlap.max(1) {
        return Ok(None);
    }
    let (mu, mv) = match model.metric {
        Metric::Pearson => {
            let n = pairs.len() as f64;
            (
                pairs.iter().map(|p| p.0).sum::<f64>() / n,
                pairs.iter().map(|p| p.1).sum::<f64>() / n,
            )
        }
        Metric::Cosine => (0.0, 0.0),
    };
    let (mut dot, mut su, mut sv) = (0.0, 0.0, 0.0);
    for &(a, b) in &pairs {
        let (da, db) = (a - mu, b - mv);
        dot += da * db;
        su += da * da;
        sv += db * db;
    }
    if su == 0.0 || sv == 0.0 {
        return Ok(None);
    }
    Ok(Some(quantize((dot / (su * sv).sqrt()).clamp(-1.0, 1.0))))
}

/// Similarities are kept to 12 decimal places so that values which are
/// equal in exact arithmetic compare equal and fall to the index tie-break.
fn quantize(s: f64) -> f64 {
    (s * 1e12).round() / 1e12
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// Neighbours that contributed; zero means the fallback was used.
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HealthFilterConfig {
    /// Routes whose noiseless rating for the citizen falls below this are
    /// rejected.
    pub threshold: f64,
    /// Also reject `Caution` routes for anyone with a present condition.
    pub strict: bool,
}

impl Default for HealthFilterConfig {
    fn default() -> Self {
        HealthFilterConfig {
            threshold: 3.0,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterVerdict {
    pub deterministic_rating: f64,
    pub below_threshold: bool,
    pub caution_blocked: bool,
}

impl FilterVerdict {
    pub fn pass(&self) -> bool {
        !self.below_threshold && !self.caution_blocked
    }
}

pub fn health_filter(
    citizen: &Citizen,
    route_id: &str,
    catalog: &Catalog,
    table: &ModifierTable,
    config: &HealthFilterConfig,
) -> Result<FilterVerdict> {
    let (route, scores) = catalog.get(route_id)?;
    let rating = deterministic_rating(citizen, &scores, table);
    Ok(FilterVerdict {
        deterministic_rating: rating,
        below_threshold: rating < config.threshold,
        caution_blocked: config.strict && route.status == RouteStatus::Caution && citizen.health.any_present(),
    })
}

/// Everything the health filter needs for one user.
#[derive(Debug, Clone, Copy)]
pub struct HealthGate<'a> {
    pub citizen: &'a Citizen,
    pub catalog: &'a Catalog,
    pub table: &'a ModifierTable,
    pub config: HealthFilterConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateMode {
    /// Only routes the user has not rated.
    #[default]
    Unrated,
    /// Every route; used when the matrix is complete.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub route_id: String,
    pub predicted: f64,
    pub support: usize,
    pub verdict: Option<FilterVerdict>,
}

/// Sort order for recommendation lists: prediction descending, then route
/// id ascending.
pub fn recommendation_order(a: &Recommendation, b: &Recommendation) -> Ordering {
    b.predicted
        .total_cmp(&a.predicted)
        .then_with(|| a.route_id.cmp(&b.route_id))
}

type SimilarityRow = Arc<Vec<Option<f64>>>;

/// CF model bound to one immutable matrix snapshot. Similarity rows are
/// cached per user; the cache never changes results.
pub struct Recommender<'a> {
    matrix: &'a RatingsMatrix,
    model: SimilarityModel,
    user_means: Vec<Option<f64>>,
    route_means: Vec<Option<f64>>,
    global_mean: Option<f64>,
    cache: RwLock<HashMap<usize, SimilarityRow>>,
}

impl<'a> Recommender<'a> {
    pub fn new(matrix: &'a RatingsMatrix, model: SimilarityModel) -> Result<Self> {
        model.validate()?;
        let user_means = (0..matrix.n_users())
            .map(|u| mean(matrix.row(u).iter().flatten().copied()))
            .collect();
        let route_means = (0..matrix.n_routes())
            .map(|r| mean((0..matrix.n_users()).filter_map(|u| matrix.get(u, r))))
            .collect();
        let global_mean = mean(matrix.cells().iter().flatten().copied());
        Ok(Recommender {
            matrix,
            model,
            user_means,
            route_means,
            global_mean,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn model(&self) -> &SimilarityModel {
        &self.model
    }

    pub fn matrix(&self) -> &RatingsMatrix {
        self.matrix
    }

    /// Similarity of user `u` (by index) to every user; `None` at `u` itself.
    pub fn similarities(&self, u: usize) -> SimilarityRow {
        if let Some(row) = self.cache.read().expect("cache lock").get(&u) {
            return Arc::clone(row);
        }
        let target = self.matrix.row(u);
        let row: SimilarityRow = Arc::new(
            (0..self.matrix.n_users())
                .map(|v| {
                    if v == u {
                        None
                    } else {
                        similarity(target, self.matrix.row(v), &self.model).expect("rows share the matrix width")
                    }
                })
                .collect(),
        );
        self.cache.write().expect("cache lock").entry(u).or_insert(row).clone()
    }

    /// The neighbourhood of `u` for route `r`, as `(user index, similarity)`
    /// in ascending user index.
    pub fn neighbors(&self, u: usize, r: usize) -> Vec<(usize, f64)> {
        let sims = self.similarities(u);
        let mut eligible: Vec<(usize, f64)> = sims
            .iter()
            .enumerate()
            .filter_map(|(v, s)| match s {
                Some(s) if *s > 0.0 && self.matrix.get(v, r).is_some() => Some((v, *s)),
                _ => None,
            })
            .collect();
        eligible.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        eligible.truncate(self.model.k_neighbors);
        eligible.sort_by_key(|&(v, _)| v);
        eligible
    }

    pub fn predict_index(&self, u: usize, r: usize) -> Result<Prediction> {
        let neighbors = self.neighbors(u, r);
        let base = self.user_means[u];
        if neighbors.is_empty() || base.is_none() {
            let value = self.route_means[r]
                .or(self.global_mean)
                .ok_or_else(|| Error::Validation("matrix holds no ratings".into()))?;
            return Ok(Prediction { value, support: 0 });
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &(v, s) in &neighbors {
            let rating = self.matrix.get(v, r).expect("neighbour rated the route");
            let v_mean = self.user_means[v].expect("neighbour has ratings");
            num += s * (rating - v_mean);
            den += s.abs();
        }
        let value = (base.unwrap_or_default() + num / den).clamp(0.0, MAX_RATING);
        Ok(Prediction {
            value,
            support: neighbors.len(),
        })
    }

    pub fn predict(&self, user_id: u32, route_id: &str) -> Result<Prediction> {
        let u = self.matrix.user_position(user_id)?;
        let r = self.matrix.route_position(route_id)?;
        self.predict_index(u, r)
    }

    pub fn top_n(
        &self,
        user_id: u32,
        n: usize,
        mode: CandidateMode,
        gate: Option<&HealthGate<'_>>,
    ) -> Result<Vec<Recommendation>> {
        if n == 0 {
            return Err(Error::Validation("top-N requires n >= 1".into()));
        }
        let u = self.matrix.user_position(user_id)?;
        let mut out = Vec::new();
        for (r, route_id) in self.matrix.route_ids().iter().enumerate() {
            if mode == CandidateMode::Unrated && self.matrix.get(u, r).is_some() {
                continue;
            }
            let verdict = match gate {
                Some(g) => {
                    let v = health_filter(g.citizen, route_id, g.catalog, g.table, &g.config)?;
                    if !v.pass() {
                        continue;
                    }
                    Some(v)
                }
                None => None,
            };
            let p = self.predict_index(u, r)?;
            out.push(Recommendation {
                route_id: route_id.clone(),
                predicted: p.value,
                support: p.support,
                verdict,
            });
        }
        out.sort_by(recommendation_order);
        out.truncate(n);
        Ok(out)
    }
}

pub fn predict(user_id: u32, route_id: &str, matrix: &RatingsMatrix, model: &SimilarityModel) -> Result<Prediction> {
    Recommender::new(matrix, *model)?.predict(user_id, route_id)
}

pub fn top_n(
    user_id: u32,
    n: usize,
    matrix: &RatingsMatrix,
    model: &SimilarityModel,
    mode: CandidateMode,
    gate: Option<&HealthGate<'_>>,
) -> Result<Vec<Recommendation>> {
    Recommender::new(matrix, *model)?.top_n(user_id, n, mode, gate)
}
