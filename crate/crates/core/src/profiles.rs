//! The 64 citizen profiles: four age brackets times the sixteen
//! combinations of present conditions.
//!
//! Disease bits: 0 visual, 1 respiratory, 2 mobility, 3 heart. The packed
//! id is `bracket * 16 + mask`.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::population::{Citizen, Condition};

pub const PROFILE_COUNT: usize = 64;

/// Upper (inclusive) age of brackets 0..=2. Everyone older is bracket 3.
pub const BRACKET_UPPER_AGES: [u8; 3] = [35, 50, 65];

pub fn age_bracket(age: u8) -> u8 {
    BRACKET_UPPER_AGES
        .iter()
        .position(|&upper| age <= upper)
        .unwrap_or(BRACKET_UPPER_AGES.len()) as u8
}

pub fn bracket_label(bracket: u8) -> &'static str {
    match bracket {
        0 => "18-35",
        1 => "36-50",
        2 => "51-65",
        _ => "66-90",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ProfileId(u8);

impl ProfileId {
    pub fn new(age_bracket: u8, disease_mask: u8) -> Result<Self> {
        if age_bracket > 3 || disease_mask > 15 {
            return Err(Error::Validation(format!(
                "profile ({age_bracket}, {disease_mask}) out of range"
            )));
        }
        Ok(ProfileId(age_bracket * 16 + disease_mask))
    }

    pub fn from_packed(id: u8) -> Result<Self> {
        if usize::from(id) >= PROFILE_COUNT {
            return Err(Error::Validation(format!("profile id {id} out of range")));
        }
        Ok(ProfileId(id))
    }

    pub fn packed(self) -> u8 {
        self.0
    }

    pub fn age_bracket(self) -> u8 {
        self.0 / 16
    }

    pub fn disease_mask(self) -> u8 {
        self.0 % 16
    }

    pub fn has(self, condition: Condition) -> bool {
        self.disease_mask() & condition_bit(condition) != 0
    }

    pub fn all() -> impl Iterator<Item = ProfileId> {
        (0..PROFILE_COUNT as u8).map(ProfileId)
    }
}

impl fmt::Display for ProfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", bracket_label(self.age_bracket()))?;
        let mut any = false;
        for c in Condition::ALL {
            if self.has(c) {
                write!(f, "{}{}", if any { "+" } else { ":" }, c.name())?;
                any = true;
            }
        }
        if !any {
            write!(f, ":healthy")?;
        }
        Ok(())
    }
}

fn condition_bit(condition: Condition) -> u8 {
    match condition {
        Condition::Visual => 1,
        Condition::Respiratory => 2,
        Condition::Mobility => 4,
        Condition::Heart => 8,
    }
}

pub fn classify(citizen: &Citizen) -> ProfileId {
    let mask = Condition::ALL
        .iter()
        .filter(|&&c| citizen.health.get(c).is_present())
        .fold(0u8, |m, &c| m | condition_bit(c));
    ProfileId(age_bracket(citizen.age) * 16 + mask)
}

/// Citizen counts per profile. Only observed profiles are stored.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ProfileCensus {
    pub counts: BTreeMap<ProfileId, usize>,
}

impl ProfileCensus {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn get(&self, id: ProfileId) -> usize {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}

pub fn profile_census(population: &[Citizen]) -> Result<ProfileCensus> {
    if population.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let mut census = ProfileCensus::default();
    for c in population {
        *census.counts.entry(classify(c)).or_default() += 1;
    }
    Ok(census)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{HealthConditions, Severity};

    fn citizen(age: u8, tenths: [u8; 4]) -> Citizen {
        let s = tenths.map(|t| Severity::from_tenths(t).unwrap());
        Citizen::new(1, age, HealthConditions::new(s[0], s[1], s[2], s[3])).unwrap()
    }

    #[test]
    fn classify_examples() {
        let healthy = classify(&citizen(23, [0, 0, 0, 0]));
        assert_eq!(
            (healthy.age_bracket(), healthy.disease_mask(), healthy.packed()),
            (0, 0, 0)
        );

        let u_i = classify(&citizen(57, [2, 9, 5, 7]));
        assert_eq!((u_i.age_bracket(), u_i.disease_mask(), u_i.packed()), (2, 15, 47));

        let old = classify(&citizen(90, [0, 0, 0, 10]));
        assert_eq!((old.age_bracket(), old.disease_mask(), old.packed()), (3, 8, 56));
    }

    #[test]
    fn bracket_boundaries_are_right_inclusive() {
        let cases = [(18, 0), (35, 0), (36, 1), (50, 1), (51, 2), (65, 2), (66, 3), (90, 3)];
        for (age, bracket) in cases {
            assert_eq!(age_bracket(age), bracket, "age {age}");
        }
    }

    #[test]
    fn packing_is_a_bijection() {
        let mut seen = std::collections::HashSet::new();
        for b in 0..4 {
            for m in 0..16 {
                let id = ProfileId::new(b, m).unwrap();
                assert_eq!((id.age_bracket(), id.disease_mask()), (b, m));
                assert_eq!(ProfileId::from_packed(id.packed()).unwrap(), id);
                seen.insert(id);
            }
        }
        assert_eq!(seen.len(), PROFILE_COUNT);
        assert_eq!(ProfileId::all().count(), PROFILE_COUNT);
        assert!(ProfileId::new(4, 0).is_err());
        assert!(ProfileId::new(0, 16).is_err());
        assert!(ProfileId::from_packed(64).is_err());
    }

    #[test]
    fn census() {
        let single = profile_census(&[citizen(20, [0; 4])]).unwrap();
        assert_eq!(single.counts, BTreeMap::from([(ProfileId(0), 1)]));
        assert!(matches!(profile_census(&[]), Err(Error::EmptyPopulation)));
    }

    #[test]
    fn display() {
        assert_eq!(ProfileId(47).to_string(), "51-65:visual+respiratory+mobility+heart");
        assert_eq!(ProfileId(0).to_string(), "18-35:healthy");
    }
}
