//! Rating synthesis: skill modifiers, the deterministic 0..10 rating, and
//! additive Gaussian noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{Citizen, Condition};
use crate::profiles::age_bracket;
use crate::ratings::RatingsMatrix;
use crate::rng::{substream, Domain};
use crate::routes::{Catalog, FeatureScores, MAX_SCORE};

pub const MAX_RATING: f64 = 10.0;
pub const MAX_RAW: f64 = 3.0 * MAX_SCORE;

/// A (distance, elevation, pavement) adjustment. Entries are non-positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Modifier {
    pub distance: f64,
    pub elevation: f64,
    pub pavement: f64,
}

impl Modifier {
    pub const fn new(distance: f64, elevation: f64, pavement: f64) -> Self {
        Modifier {
            distance,
            elevation,
            pavement,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.distance, self.elevation, self.pavement]
    }

    fn scaled_add(self, other: Modifier, weight: f64) -> Modifier {
        Modifier {
            distance: self.distance + weight * other.distance,
            elevation: self.elevation + weight * other.elevation,
            pavement: self.pavement + weight * other.pavement,
        }
    }
}

/// Skill modifiers per age bracket and per condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModifierTable {
    pub age_brackets: [Modifier; 4],
    pub visual: Modifier,
    pub respiratory: Modifier,
    pub mobility: Modifier,
    pub heart: Modifier,
}

impl Default for ModifierTable {
    fn default() -> Self {
        ModifierTable {
            age_brackets: [
                Modifier::new(0.0, 0.0, 0.0),
                Modifier::new(-1.0, -1.0, 0.0),
                Modifier::new(-2.0, -2.0, 0.0),
                Modifier::new(-3.0, -3.0, -1.0),
            ],
            visual: Modifier::new(0.0, 0.0, -1.0),
            respiratory: Modifier::new(0.0, -1.0, 0.0),
            mobility: Modifier::new(-1.0, -1.0, -3.0),
            heart: Modifier::new(-1.0, -2.0, 0.0),
        }
    }
}

impl ModifierTable {
    pub fn condition(&self, condition: Condition) -> Modifier {
        match condition {
            Condition::Visual => self.visual,
            Condition::Respiratory => self.respiratory,
            Condition::Mobility => self.mobility,
            Condition::Heart => self.heart,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rows = self.age_brackets.iter().chain(Condition::ALL.iter().map(|&c| match c {
            Condition::Visual => &self.visual,
            Condition::Respiratory => &self.respiratory,
            Condition::Mobility => &self.mobility,
            Condition::Heart => &self.heart,
        }));
        for row in rows {
            if row.as_array().iter().any(|v| !v.is_finite() || *v > 0.0) {
                return Err(Error::Config(format!(
                    "modifier entries must be finite and non-positive: {row:?}"
                )));
            }
        }
        for pair in self.age_brackets.windows(2) {
            let (younger, older) = (pair[0].as_array(), pair[1].as_array());
            if older.iter().zip(younger).any(|(o, y)| *o > y) {
                return Err(Error::Config("age bracket modifiers must not increase with age".into()));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: ModifierTable = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub mean: f64,
    pub std_dev: f64,
    pub enabled: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            mean: 0.0,
            std_dev: 1.5,
            enabled: true,
        }
    }
}

impl NoiseConfig {
    pub fn disabled() -> Self {
        NoiseConfig {
            enabled: false,
            ..Default::default()
        }
    }

    pub fn with_std(std_dev: f64) -> Self {
        NoiseConfig {
            std_dev,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.std_dev.is_finite() || self.std_dev < 0.0 {
            return Err(Error::Config(format!(
                "noise std_dev must be non-negative, got {}",
                self.std_dev
            )));
        }
        if !self.mean.is_finite() {
            return Err(Error::Config("noise mean must be finite".into()));
        }
        Ok(())
    }

    fn is_active(&self) -> bool {
        self.enabled && (self.std_dev > 0.0 || self.mean != 0.0)
    }
}

/// Age-bracket row at full weight plus each condition row scaled by its
/// severity.
pub fn citizen_modifiers(citizen: &Citizen, table: &ModifierTable) -> Modifier {
    Condition::ALL
        .iter()
        .fold(table.age_brackets[usize::from(age_bracket(citizen.age))], |acc, &c| {
            acc.scaled_add(table.condition(c), citizen.health.get(c).value())
        })
}

/// Sum of the per-feature adjusted scores, each clamped to `[0, 5]`.
pub fn raw_score(modifiers: &Modifier, scores: &FeatureScores) -> f64 {
    scores
        .as_array()
        .iter()
        .zip(modifiers.as_array())
        .map(|(s, m)| (s + m).clamp(0.0, MAX_SCORE))
        .sum()
}

fn scale(raw: f64) -> f64 {
    raw * (MAX_RATING / MAX_RAW)
}

pub fn deterministic_rating(citizen: &Citizen, scores: &FeatureScores, table: &ModifierTable) -> f64 {
    scale(raw_score(&citizen_modifiers(citizen, table), scores))
}

/// One draw of the additive noise term, before any clamping.
pub fn sample_noise<R: Rng + ?Sized>(noise: &NoiseConfig, rng: &mut R) -> f64 {
    if !noise.is_active() {
        return 0.0;
    }
    Normal::new(noise.mean, noise.std_dev)
        .expect("validated std_dev")
        .sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyRating {
    /// Clamped to `[0, 10]`, full precision.
    pub value: f64,
    /// `value` rounded half away from zero; what gets stored.
    pub stored: u8,
}

pub fn noisy_rating<R: Rng + ?Sized>(deterministic: f64, noise: &NoiseConfig, rng: &mut R) -> NoisyRating {
    let value = (deterministic + sample_noise(noise, rng)).clamp(0.0, MAX_RATING);
    NoisyRating {
        value,
        stored: value.round() as u8,
    }
}

/// Output of [`generate_ratings`]: the stored integer matrix plus the
/// full-precision noisy and noiseless values behind every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedRatings {
    pub matrix: RatingsMatrix,
    /// Row-major, same shape as `matrix`.
    pub noisy: Vec<f64>,
    pub deterministic: Vec<f64>,
}

pub fn generate_ratings(
    population: &[Citizen],
    catalog: &Catalog,
    table: &ModifierTable,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<GeneratedRatings> {
    if population.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    table.validate()?;
    noise.validate()?;
    let m = catalog.len();
    let scores = catalog.scores();

    let rows: Vec<(Vec<u8>, Vec<f64>, Vec<f64>)> = population
        .par_iter()
        .map(|citizen| {
            let modifiers = citizen_modifiers(citizen, table);
            let mut stored = Vec::with_capacity(m);
            let mut noisy = Vec::with_capacity(m);
            let mut exact = Vec::with_capacity(m);
            for (r, s) in scores.iter().enumerate() {
                let det = scale(raw_score(&modifiers, s));
                let mut rng = substream(seed, Domain::Rating, u64::from(citizen.id), r as u64);
                let rating = noisy_rating(det, noise, &mut rng);
                stored.push(rating.stored);
                noisy.push(rating.value);
                exact.push(det);
            }
            (stored, noisy, exact)
        })
        .collect();

    let n = population.len();
    let mut cells = Vec::with_capacity(n * m);
    let mut noisy = Vec::with_capacity(n * m);
    let mut deterministic = Vec::with_capacity(n * m);
    for (s, v, d) in rows {
        cells.extend(s.into_iter().map(|x| Some(f64::from(x))));
        noisy.extend(v);
        deterministic.extend(d);
    }
    let matrix = RatingsMatrix::from_cells(
        population.iter().map(|c| c.id).collect(),
        catalog.ids().map(str::to_string).collect(),
        cells,
    )?;
    Ok(GeneratedRatings {
        matrix,
        noisy,
        deterministic,
    })
}
