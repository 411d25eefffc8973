//! Shared fixtures and a brute-force collaborative-filtering oracle.
//!
//! The oracle re-derives every quantity from the raw cells with no caching,
//! no sorting-based neighbour selection and no shared code with the library.

#![allow(dead_code)]

use std::path::PathBuf;

use healthroute::population::{Citizen, HealthConditions, Severity};
use healthroute::recommender::Metric;
use healthroute::RatingsMatrix;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn citizen(id: u32, age: u8, tenths: [u8; 4]) -> Citizen {
    let s = tenths.map(|t| Severity::from_tenths(t).unwrap());
    Citizen::new(id, age, HealthConditions::new(s[0], s[1], s[2], s[3])).unwrap()
}

/// A dense grid of `Option<f64>` with its own indexing.
#[derive(Debug, Clone)]
pub struct Grid {
    pub users: Vec<u32>,
    pub routes: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl Grid {
    pub fn matrix(&self) -> RatingsMatrix {
        RatingsMatrix::from_rows(self.users.clone(), self.routes.clone(), self.cells.clone()).unwrap()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleModel {
    pub metric: Metric,
    pub k: usize,
    pub min_overlap: usize,
}

impl OracleModel {
    pub fn library(&self) -> healthroute::SimilarityModel {
        healthroute::SimilarityModel {
            metric: self.metric,
            k_neighbors: self.k,
            min_overlap: self.min_overlap,
        }
    }
}

pub fn oracle_similarity(g: &Grid, u: usize, v: usize, m: &OracleModel) -> Option<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in 0..g.routes.len() {
        if let (Some(a), Some(b)) = (g.cells[u][r], g.cells[v][r]) {
            xs.push(a);
            ys.push(b);
        }
    }
    if xs.len() < m.min_overlap {
        return None;
    }
    let (cx, cy) = match m.metric {
        Metric::Pearson => (
            xs.iter().sum::<f64>() / xs.len() as f64,
            ys.iter().sum::<f64>() / ys.len() as f64,
        ),
        Metric::Cosine => (0.0, 0.0),
    };
    let num: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - cx) * (b - cy)).sum();
    let nx: f64 = xs.iter().map(|a| (a - cx).powi(2)).sum();
    let ny: f64 = ys.iter().map(|b| (b - cy).powi(2)).sum();
    if nx == 0.0 || ny == 0.0 {
        return None;
    }
    let r = (num / (nx.sqrt() * ny.sqrt())).clamp(-1.0, 1.0);
    Some((r * 1e12).round() / 1e12)
}

fn average(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn user_mean(g: &Grid, u: usize) -> Option<f64> {
    average(&g.cells[u].iter().flatten().copied().collect::<Vec<_>>())
}

pub fn route_mean(g: &Grid, r: usize) -> Option<f64> {
    average(&g.cells.iter().filter_map(|row| row[r]).collect::<Vec<_>>())
}

pub fn global_mean(g: &Grid) -> Option<f64> {
    average(&g.cells.iter().flatten().flatten().copied().collect::<Vec<_>>())
}

/// Users that rated `r` with a defined, positive similarity to `u`.
pub fn eligible(g: &Grid, u: usize, r: usize, m: &OracleModel) -> Vec<(usize, f64)> {
    (0..g.users.len())
        .filter(|&v| v != u && g.cells[v][r].is_some())
        .filter_map(|v| oracle_similarity(g, u, v, m).filter(|s| *s > 0.0).map(|s| (v, s)))
        .collect()
}

/// A user is selected when fewer than `k` eligible users beat it
/// (higher similarity, or equal similarity and lower index).
pub fn oracle_neighbors(g: &Grid, u: usize, r: usize, m: &OracleModel) -> Vec<(usize, f64)> {
    let e = eligible(g, u, r, m);
    e.iter()
        .filter(|&&(v, s)| e.iter().filter(|&&(w, t)| t > s || (t == s && w < v)).count() < m.k)
        .copied()
        .collect()
}

fn weighted(g: &Grid, u: usize, r: usize, neighbors: &[(usize, f64)]) -> Option<f64> {
    let base = user_mean(g, u)?;
    if neighbors.is_empty() {
        return None;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(v, s) in neighbors {
        num += s * (g.cells[v][r].unwrap() - user_mean(g, v).unwrap());
        den += s.abs();
    }
    Some((base + num / den).clamp(0.0, 10.0))
}

fn fallback(g: &Grid, r: usize) -> f64 {
    route_mean(g, r).or_else(|| global_mean(g)).unwrap()
}

pub fn oracle_predict(g: &Grid, u: usize, r: usize, m: &OracleModel) -> f64 {
    weighted(g, u, r, &oracle_neighbors(g, u, r, m)).unwrap_or_else(|| fallback(g, r))
}

/// Prediction from the neighbour subset chosen by enumerating every subset
/// of the eligible users of the right size and keeping the one with the
/// largest similarity sum (lexicographically smallest index set on ties).
pub fn exhaustive_predict(g: &Grid, u: usize, r: usize, m: &OracleModel) -> f64 {
    let e = eligible(g, u, r, m);
    assert!(e.len() <= 16, "exhaustive oracle is for tiny instances");
    let size = e.len().min(m.k);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..(1 << e.len()) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let picked: Vec<usize> = (0..e.len()).filter(|i| mask & (1 << i) != 0).collect();
        let total: f64 = picked.iter().map(|&i| e[i].1).sum();
        let better = match &best {
            None => true,
            Some((t, p)) => total > *t || (total == *t && picked < *p),
        };
        if better {
            best = Some((total, picked));
        }
    }
    let chosen: Vec<(usize, f64)> = best.map(|(_, p)| p.iter().map(|&i| e[i]).collect()).unwrap_or_default();
    weighted(g, u, r, &chosen).unwrap_or_else(|| fallback(g, r))
}

/// Top-`n` route ids by position counting: a candidate's rank is the number
/// of candidates with a higher prediction, or an equal prediction and a
/// smaller id.
pub fn oracle_top_n(g: &Grid, u: usize, n: usize, m: &OracleModel, include_rated: bool) -> Vec<(String, f64)> {
    let scored: Vec<(String, f64)> = (0..g.routes.len())
        .filter(|&r| include_rated || g.cells[u][r].is_none())
        .map(|r| (g.routes[r].clone(), oracle_predict(g, u, r, m)))
        .collect();
    let mut ranked: Vec<Option<(String, f64)>> = vec![None; scored.len()];
    for (id, p) in &scored {
        let rank = scored
            .iter()
            .filter(|(id2, p2)| p2 > p || (p2 == p && id2 < id))
            .count();
        ranked[rank] = Some((id.clone(), *p));
    }
    ranked.into_iter().flatten().take(n).collect()
}

pub struct InstanceSpec {
    pub max_users: usize,
    pub max_routes: usize,
    /// Integer ratings in `0..=10` when true, otherwise uniform reals.
    pub integer: bool,
    pub lo: f64,
    pub hi: f64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec {
            max_users: 50,
            max_routes: 20,
            integer: true,
            lo: 0.0,
            hi: 10.0,
        }
    }
}

/// A random sparse instance plus a random model; every user has at least
/// one rating.
pub fn random_instance(seed: u64, spec: &InstanceSpec) -> (Grid, OracleModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=spec.max_users);
    let m = rng.random_range(2..=spec.max_routes);
    let density = rng.random_range(0.3..=1.0);
    let mut users: Vec<u32> = (1..=(n as u32 * 3)).collect();
    users.shuffle(&mut rng);
    users.truncate(n);
    let mut routes: Vec<String> = (0..m).map(|i| format!("R{i:02}")).collect();
    routes.shuffle(&mut rng);
    let cells = (0..n)
        .map(|_| {
            let mut row: Vec<Option<f64>> = (0..m)
                .map(|_| {
                    rng.random_bool(density).then(|| {
                        if spec.integer {
                            rng.random_range(spec.lo as u32..=spec.hi as u32) as f64
                        } else {
                            rng.random_range(spec.lo..spec.hi)
                        }
                    })
                })
                .collect();
            if row.iter().all(Option::is_none) {
                row[rng.random_range(0..m)] = Some(spec.lo.ceil());
            }
            row
        })
        .collect();
    let model = OracleModel {
        metric: if rng.random_bool(0.5) {
            Metric::Pearson
        } else {
            Metric::Cosine
        },
        k: *[1, 2, 3, 5, 10, 30].choose(&mut rng).unwrap(),
        min_overlap: rng.random_range(1..=4),
    };
    (Grid { users, routes, cells }, model)
}
