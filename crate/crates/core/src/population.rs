//! Synthetic citizens: ages drawn from an age pyramid, health conditions
//! drawn from marginal prevalences.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Domain};

pub const MIN_AGE: u8 = 18;
pub const MAX_AGE: u8 = 90;

/// Condition severity on the tenths grid `{0.0, 0.1, ..., 1.0}`, stored as
/// an integer count of tenths so arithmetic on it stays exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Severity(u8);

impl Severity {
    pub const NONE: Severity = Severity(0);
    pub const MAX: Severity = Severity(10);

    pub fn from_tenths(tenths: u8) -> Result<Self> {
        if tenths > 10 {
            return Err(Error::Validation(format!("severity {tenths}/10 exceeds 1.0")));
        }
        Ok(Severity(tenths))
    }

    /// Accepts a real value only if it sits on the 0.1 grid.
    pub fn from_value(value: f64) -> Result<Self> {
        let scaled = value * 10.0;
        let tenths = scaled.round();
        if !value.is_finite() || (scaled - tenths).abs() > 1e-9 {
            return Err(Error::Validation(format!("severity {value} is not a multiple of 0.1")));
        }
        if !(0.0..=10.0).contains(&tenths) {
            return Err(Error::Validation(format!("severity {value} outside [0, 1]")));
        }
        Ok(Severity(tenths as u8))
    }

    pub fn tenths(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    pub fn is_present(self) -> bool {
        self.0 > 0
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Visual,
    Respiratory,
    Mobility,
    Heart,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Visual,
        Condition::Respiratory,
        Condition::Mobility,
        Condition::Heart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Visual => "visual",
            Condition::Respiratory => "respiratory",
            Condition::Mobility => "mobility",
            Condition::Heart => "heart",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct HealthConditions {
    pub visual_impairment: Severity,
    pub respiratory: Severity,
    pub reduced_mobility: Severity,
    pub heart_disease: Severity,
}

impl HealthConditions {
    pub fn new(
        visual_impairment: Severity,
        respiratory: Severity,
        reduced_mobility: Severity,
        heart_disease: Severity,
    ) -> Self {
        HealthConditions {
            visual_impairment,
            respiratory,
            reduced_mobility,
            heart_disease,
        }
    }

    pub fn get(&self, condition: Condition) -> Severity {
        match condition {
            Condition::Visual => self.visual_impairment,
            Condition::Respiratory => self.respiratory,
            Condition::Mobility => self.reduced_mobility,
            Condition::Heart => self.heart_disease,
        }
    }

    /// Severities in `Condition::ALL` order.
    pub fn severities(&self) -> [Severity; 4] {
        Condition::ALL.map(|c| self.get(c))
    }

    pub fn any_present(&self) -> bool {
        self.severities().iter().any(|s| s.is_present())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Citizen {
    pub id: u32,
    pub age: u8,
    pub health: HealthConditions,
}

impl Citizen {
    /// Validates the age range. The heart-disease age gate is a property of
    /// the generator, not of hand-entered records.
    pub fn new(id: u32, age: u8, health: HealthConditions) -> Result<Self> {
        if !(MIN_AGE..=MAX_AGE).contains(&age) {
            return Err(Error::Validation(format!(
                "citizen {id}: age {age} outside [{MIN_AGE}, {MAX_AGE}]"
            )));
        }
        Ok(Citizen { id, age, health })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrevalenceConfig {
    pub p_visual: f64,
    pub p_respiratory: f64,
    pub p_mobility: f64,
    pub p_cardio: f64,
    /// Heart disease is only assigned to citizens strictly older than this.
    pub heart_age_threshold: u8,
}

impl Default for PrevalenceConfig {
    fn default() -> Self {
        PrevalenceConfig {
            p_visual: 0.034,
            p_respiratory: 0.032,
            p_mobility: 0.02,
            p_cardio: 0.14,
            heart_age_threshold: 45,
        }
    }
}

impl PrevalenceConfig {
    pub fn zero() -> Self {
        PrevalenceConfig {
            p_visual: 0.0,
            p_respiratory: 0.0,
            p_mobility: 0.0,
            p_cardio: 0.0,
            ..Default::default()
        }
    }

    pub fn target(&self, condition: Condition) -> f64 {
        match condition {
            Condition::Visual => self.p_visual,
            Condition::Respiratory => self.p_respiratory,
            Condition::Mobility => self.p_mobility,
            Condition::Heart => self.p_cardio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in Condition::ALL {
            let p = self.target(c);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!(
                    "prevalence of {} must lie in [0, 1], got {p}",
                    c.name()
                )));
            }
        }
        Ok(())
    }
}

/// One pyramid bracket covering the integer ages `min_age..=max_age`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeBracket {
    pub min_age: u8,
    pub max_age: u8,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgePyramid {
    pub brackets: Vec<AgeBracket>,
}

impl Default for AgePyramid {
    /// Coarse four-bracket shape aligned with the profile age brackets.
    fn default() -> Self {
        let b = |min_age, max_age, weight| AgeBracket {
            min_age,
            max_age,
            weight,
        };
        AgePyramid {
            brackets: vec![b(18, 35, 0.27), b(36, 50, 0.29), b(51, 65, 0.24), b(66, 90, 0.20)],
        }
    }
}

impl AgePyramid {
    pub fn single(min_age: u8, max_age: u8) -> Self {
        AgePyramid {
            brackets: vec![AgeBracket {
                min_age,
                max_age,
                weight: 1.0,
            }],
        }
    }

    /// Checks that the brackets tile `[18, 90]` and carry positive total
    /// weight. A pyramid that only covers part of the range is accepted if
    /// the uncovered brackets are simply absent at the ends; gaps and
    /// overlaps between brackets are rejected.
    pub fn validate(&self) -> Result<()> {
        let first = self
            .brackets
            .first()
            .ok_or_else(|| Error::Config("age pyramid has no brackets".into()))?;
        if first.min_age < MIN_AGE {
            return Err(Error::Config(format!(
                "age pyramid starts at {} (< {MIN_AGE})",
                first.min_age
            )));
        }
        let mut total = 0.0;
        let mut prev_max: Option<u8> = None;
        for b in &self.brackets {
            if b.min_age > b.max_age {
                return Err(Error::Config(format!(
                    "age bracket {}..={} is empty",
                    b.min_age, b.max_age
                )));
            }
            if b.max_age > MAX_AGE {
                return Err(Error::Config(format!(
                    "age bracket {}..={} exceeds {MAX_AGE}",
                    b.min_age, b.max_age
                )));
            }
            if let Some(prev) = prev_max {
                if b.min_age <= prev {
                    return Err(Error::Config(format!(
                        "age bracket starting at {} overlaps previous bracket ending at {prev}",
                        b.min_age
                    )));
                }
                if b.min_age > prev + 1 {
                    return Err(Error::Config(format!(
                        "gap in age pyramid between {prev} and {}",
                        b.min_age
                    )));
                }
            }
            if !b.weight.is_finite() || b.weight < 0.0 {
                return Err(Error::Config(format!(
                    "age bracket {}..={} has invalid weight {}",
                    b.min_age, b.max_age, b.weight
                )));
            }
            total += b.weight;
            prev_max = Some(b.max_age);
        }
        if total <= 0.0 {
            return Err(Error::Config("age pyramid has zero total weight".into()));
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.brackets.iter().map(|b| b.weight).sum()
    }

    /// Normalized weight of each bracket.
    pub fn shares(&self) -> Vec<f64> {
        let total = self.total_weight();
        self.brackets.iter().map(|b| b.weight / total).collect()
    }

    /// Probability that a sampled age is strictly greater than `threshold`.
    pub fn share_older_than(&self, threshold: u8) -> f64 {
        self.brackets
            .iter()
            .zip(self.shares())
            .map(|(b, share)| {
                let span = f64::from(b.max_age - b.min_age + 1);
                let older = if threshold < b.min_age {
                    span
                } else if threshold >= b.max_age {
                    0.0
                } else {
                    f64::from(b.max_age - threshold)
                };
                share * older / span
            })
            .sum()
    }
}

/// Relative weights of the ten non-zero severities `0.1 ..= 1.0` assigned to
/// a present condition. Uniform by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeverityWeights(pub [f64; 10]);

impl Default for SeverityWeights {
    fn default() -> Self {
        SeverityWeights([1.0; 10])
    }
}

impl SeverityWeights {
    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("severity weights must be non-negative".into()));
        }
        if self.0.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config("severity weights sum to zero".into()));
        }
        Ok(())
    }
}

/// Everything that parameterizes citizen generation. Loaded from TOML:
///
/// ```toml
/// [prevalence]
/// p_visual = 0.034
/// p_respiratory = 0.032
/// p_mobility = 0.02
/// p_cardio = 0.14
/// heart_age_threshold = 45
///
/// [[pyramid]]
/// min_age = 18
/// max_age = 35
/// weight = 0.27
/// # ... further brackets up to age 90
///
/// severity_weights = [1, 1, 1, 1, 1, 1, 1, 1, 1, 1]
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub prevalence: PrevalenceConfig,
    pub pyramid: AgePyramid,
    pub severity_weights: SeverityWeights,
}

impl PopulationConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PopulationConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("population config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.prevalence.validate()?;
        self.pyramid.validate()?;
        self.severity_weights.validate()?;
        heart_conditional_probability(&self.pyramid, &self.prevalence).map(|_| ())
    }
}

/// Probability of heart disease for a citizen above the age threshold,
/// chosen so that the population-wide prevalence equals `p_cardio`.
pub fn heart_conditional_probability(pyramid: &AgePyramid, cfg: &PrevalenceConfig) -> Result<f64> {
    if cfg.p_cardio == 0.0 {
        return Ok(0.0);
    }
    let older = pyramid.share_older_than(cfg.heart_age_threshold);
    let p = if older > 0.0 {
        cfg.p_cardio / older
    } else {
        f64::INFINITY
    };
    if p > 1.0 {
        return Err(Error::Config(format!(
            "share of citizens older than {} is {older:.4}, below the cardiovascular prevalence {}",
            cfg.heart_age_threshold, cfg.p_cardio
        )));
    }
    Ok(p)
}

/// Validated, precomputed sampling tables for one [`PopulationConfig`].
#[derive(Debug, Clone)]
pub struct PopulationSampler {
    brackets: Vec<(u8, u8)>,
    cumulative_age: Vec<f64>,
    cumulative_severity: [f64; 10],
    prevalence: PrevalenceConfig,
    p_heart_given_older: f64,
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    for c in &mut out {
        *c /= acc;
    }
    out
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

impl PopulationSampler {
    pub fn new(cfg: &PopulationConfig) -> Result<Self> {
        cfg.validate()?;
        let p_heart_given_older = heart_conditional_probability(&cfg.pyramid, &cfg.prevalence)?;
        let mut cumulative_severity = [0.0; 10];
        cumulative_severity.copy_from_slice(&cumulative(cfg.severity_weights.0.iter().copied()));
        Ok(PopulationSampler {
            brackets: cfg.pyramid.brackets.iter().map(|b| (b.min_age, b.max_age)).collect(),
            cumulative_age: cumulative(cfg.pyramid.brackets.iter().map(|b| b.weight)),
            cumulative_severity,
            prevalence: cfg.prevalence.clone(),
            p_heart_given_older,
        })
    }

    pub fn heart_probability_given_older(&self) -> f64 {
        self.p_heart_given_older
    }

    /// Bracket by weight, then a uniform integer age within it.
    pub fn sample_age<R: Rng + ?Sized>(&self, rng: &mut R) -> u8 {
        let (lo, hi) = self.brackets[pick(&self.cumulative_age, rng.random::<f64>())];
        rng.random_range(lo..=hi)
    }

    fn sample_severity<R: Rng + ?Sized>(&self, rng: &mut R) -> Severity {
        Severity(pick(&self.cumulative_severity, rng.random::<f64>()) as u8 + 1)
    }

    fn draw<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> Severity {
        // Both draws are always taken so the stream layout does not depend
        // on the outcome.
        let present = rng.random::<f64>() < p;
        let severity = self.sample_severity(rng);
        if present {
            severity
        } else {
            Severity::NONE
        }
    }

    pub fn sample_conditions<R: Rng + ?Sized>(&self, age: u8, rng: &mut R) -> HealthConditions {
        let cfg = &self.prevalence;
        let visual_impairment = self.draw(cfg.p_visual, rng);
        let respiratory = self.draw(cfg.p_respiratory, rng);
        let reduced_mobility = self.draw(cfg.p_mobility, rng);
        let p_heart = if age > cfg.heart_age_threshold {
            self.p_heart_given_older
        } else {
            0.0
        };
        let heart_disease = self.draw(p_heart, rng);
        HealthConditions {
            visual_impairment,
            respiratory,
            reduced_mobility,
            heart_disease,
        }
    }

    /// The citizen with the given id under `seed`. Depends only on
    /// `(seed, id)` and the configuration.
    pub fn citizen(&self, seed: u64, id: u32) -> Citizen {
        let mut rng = substream(seed, Domain::Citizen, u64::from(id), 0);
        let age = self.sample_age(&mut rng);
        let health = self.sample_conditions(age, &mut rng);
        Citizen { id, age, health }
    }
}

pub fn sample_age<R: Rng + ?Sized>(pyramid: &AgePyramid, rng: &mut R) -> Result<u8> {
    pyramid.validate()?;
    let cumulative_age = cumulative(pyramid.brackets.iter().map(|b| b.weight));
    let b = &pyramid.brackets[pick(&cumulative_age, rng.random::<f64>())];
    Ok(rng.random_range(b.min_age..=b.max_age))
}

pub fn sample_conditions<R: Rng + ?Sized>(
    age: u8,
    pyramid: &AgePyramid,
    cfg: &PrevalenceConfig,
    rng: &mut R,
) -> Result<HealthConditions> {
    if !(MIN_AGE..=MAX_AGE).contains(&age) {
        return Err(Error::Validation(format!("age {age} outside [{MIN_AGE}, {MAX_AGE}]")));
    }
    let sampler = PopulationSampler::new(&PopulationConfig {
        prevalence: cfg.clone(),
        pyramid: pyramid.clone(),
        severity_weights: SeverityWeights::default(),
    })?;
    Ok(sampler.sample_conditions(age, rng))
}

/// Generates citizens `1..=n`. Each citizen is drawn from its own substream,
/// so the result is identical regardless of thread scheduling.
pub fn generate_population(n: usize, cfg: &PopulationConfig, seed: u64) -> Result<Vec<Citizen>> {
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let n = u32::try_from(n).map_err(|_| Error::Config(format!("population size {n} too large")))?;
    let sampler = PopulationSampler::new(cfg)?;
    Ok((1..=n).into_par_iter().map(|id| sampler.citizen(seed, id)).collect())
}
