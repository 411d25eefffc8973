//! Route catalog, coordinate parsing and feature normalization.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const MAX_SCORE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Latitude,
    Longitude,
}

impl Axis {
    fn limit(self) -> f64 {
        match self {
            Axis::Latitude => 90.0,
            Axis::Longitude => 180.0,
        }
    }
}

/// A signed decimal-degree value together with the axis its hemisphere
/// letter implied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle {
    pub degrees: f64,
    pub axis: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoPoint {
    latitude: f64,
    longitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        let bad = |what: &str, v: f64| Error::Coordinate {
            token: v.to_string(),
            reason: format!("{what} out of range"),
        };
        if !latitude.is_finite() || latitude.abs() > 90.0 {
            return Err(bad("latitude", latitude));
        }
        if !longitude.is_finite() || longitude.abs() > 180.0 {
            return Err(bad("longitude", longitude));
        }
        Ok(GeoPoint { latitude, longitude })
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    pub fn to_dms(&self) -> String {
        format!(
            "{} {}",
            format_dms(self.latitude, Axis::Latitude),
            format_dms(self.longitude, Axis::Longitude)
        )
    }
}

/// Lossless decimal form, `"<lat> <lon>"`.
impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.latitude, self.longitude)
    }
}

fn coord_err(token: &str, reason: impl Into<String>) -> Error {
    Error::Coordinate {
        token: token.to_string(),
        reason: reason.into(),
    }
}

/// Parses `41°4'44.54"N`-style text. Whitespace between the components is
/// ignored.
pub fn parse_dms(text: &str) -> Result<Angle> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let hemisphere = compact
        .chars()
        .last()
        .ok_or_else(|| coord_err(text, "empty coordinate"))?;
    let (axis, sign) = match hemisphere.to_ascii_uppercase() {
        'N' => (Axis::Latitude, 1.0),
        'S' => (Axis::Latitude, -1.0),
        'E' => (Axis::Longitude, 1.0),
        'W' => (Axis::Longitude, -1.0),
        _ => return Err(coord_err(text, "missing hemisphere letter N/S/E/W")),
    };
    let body = &compact[..compact.len() - hemisphere.len_utf8()];
    let (deg, rest) = body
        .split_once('°')
        .ok_or_else(|| coord_err(text, "missing degree sign"))?;
    let (min, rest) = rest
        .split_once(['\'', '′', '’'])
        .ok_or_else(|| coord_err(text, "missing minutes mark"))?;
    let sec = rest
        .strip_suffix(['"', '″', '”'])
        .ok_or_else(|| coord_err(text, "missing seconds mark"))?;

    let number = |token: &str, what: &str| -> Result<f64> {
        let v: f64 = token
            .parse()
            .map_err(|_| coord_err(token, format!("{what} is not a number")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(coord_err(token, format!("{what} must be non-negative")));
        }
        Ok(v)
    };
    let deg_v = number(deg, "degrees")?;
    if deg_v.fract() != 0.0 {
        return Err(coord_err(deg, "degrees must be an integer"));
    }
    let min_v = number(min, "minutes")?;
    if min_v.fract() != 0.0 || min_v >= 60.0 {
        return Err(coord_err(min, "minutes must be an integer below 60"));
    }
    let sec_v = number(sec, "seconds")?;
    if sec_v >= 60.0 {
        return Err(coord_err(sec, "seconds must be below 60"));
    }
    let value = deg_v + min_v / 60.0 + sec_v / 3600.0;
    if value > axis.limit() {
        return Err(coord_err(deg, format!("exceeds {}°", axis.limit())));
    }
    Ok(Angle {
        degrees: sign * value,
        axis,
    })
}

/// Formats decimal degrees as DMS with seconds to two decimals.
pub fn format_dms(value: f64, axis: Axis) -> String {
    let hemisphere = match (axis, value < 0.0) {
        (Axis::Latitude, false) => 'N',
        (Axis::Latitude, true) => 'S',
        (Axis::Longitude, false) => 'E',
        (Axis::Longitude, true) => 'W',
    };
    let centi_seconds = (value.abs() * 360_000.0).round() as u64;
    let deg = centi_seconds / 360_000;
    let min = (centi_seconds / 6_000) % 60;
    let sec = centi_seconds % 6_000;
    format!("{deg}°{min}'{}.{:02}\"{hemisphere}", sec / 100, sec % 100)
}

/// Parses a point given either as a DMS pair (`41°4'44.54"N 1°12'49.58"E`,
/// optionally comma separated) or as two decimal numbers
/// (`41.079 1.2137` or `41.079,1.2137`), latitude first.
pub fn parse_point(text: &str) -> Result<GeoPoint> {
    let text = text.trim();
    if text.contains('°') {
        let split = text
            .find(['N', 'S', 'n', 's'])
            .ok_or_else(|| coord_err(text, "missing latitude hemisphere"))?;
        let (lat_s, lon_s) = text.split_at(split + 1);
        let lon_s = lon_s.trim_start_matches(|c: char| c == ',' || c.is_whitespace());
        let lat = parse_dms(lat_s)?;
        let lon = parse_dms(lon_s)?;
        if lat.axis != Axis::Latitude || lon.axis != Axis::Longitude {
            return Err(coord_err(text, "expected latitude then longitude"));
        }
        return GeoPoint::new(lat.degrees, lon.degrees);
    }
    let parts: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    let [lat, lon] = parts.as_slice() else {
        return Err(coord_err(text, "expected `<latitude> <longitude>`"));
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| coord_err(s, "not a number"));
    GeoPoint::new(num(lat)?, num(lon)?)
}

/// Great-circle distance on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_km(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (lat1, lat2) = (a.latitude.to_radians(), b.latitude.to_radians());
    let d_lat = lat2 - lat1;
    let d_lon = (b.longitude - a.longitude).to_radians();
    let h = (d_lat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (d_lon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Pavement {
    VeryPoor,
    Poor,
    Average,
    Good,
    VeryGood,
}

impl Pavement {
    pub fn score(self) -> f64 {
        match self {
            Pavement::VeryPoor => 1.0,
            Pavement::Poor => 2.0,
            Pavement::Average => 3.0,
            Pavement::Good => 4.0,
            Pavement::VeryGood => 5.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Pavement::VeryPoor => "Very poor",
            Pavement::Poor => "Poor",
            Pavement::Average => "Average",
            Pavement::Good => "Good",
            Pavement::VeryGood => "Very good",
        }
    }
}

impl fmt::Display for Pavement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Pavement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "verypoor" => Ok(Pavement::VeryPoor),
            "poor" => Ok(Pavement::Poor),
            "average" => Ok(Pavement::Average),
            "good" => Ok(Pavement::Good),
            "verygood" => Ok(Pavement::VeryGood),
            _ => Err(Error::Validation(format!("unknown pavement quality `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RouteStatus {
    Idle,
    Caution,
}

impl fmt::Display for RouteStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RouteStatus::Idle => "Idle",
            RouteStatus::Caution => "Caution",
        })
    }
}

impl FromStr for RouteStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "idle" => Ok(RouteStatus::Idle),
            "caution" => Ok(RouteStatus::Caution),
            _ => Err(Error::Validation(format!("unknown route status `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Route {
    pub id: String,
    pub start: GeoPoint,
    pub end: GeoPoint,
    pub checkpoints: Vec<GeoPoint>,
    pub distance_km: f64,
    pub elevation_gain_m: f64,
    pub pavement: Pavement,
    pub status: RouteStatus,
}

impl Route {
    /// Field checks plus the sanity check that the declared length is at
    /// least the straight-line distance between the endpoints.
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidRoute {
            id: self.id.clone(),
            reason,
        };
        if self.id.trim().is_empty() {
            return Err(invalid("empty id".into()));
        }
        if !self.distance_km.is_finite() || self.distance_km <= 0.0 {
            return Err(invalid(format!("distance {} km must be positive", self.distance_km)));
        }
        if !self.elevation_gain_m.is_finite() || self.elevation_gain_m < 0.0 {
            return Err(invalid(format!(
                "elevation gain {} m must be non-negative",
                self.elevation_gain_m
            )));
        }
        let straight = haversine_km(&self.start, &self.end);
        if straight > self.distance_km + 1e-9 {
            return Err(invalid(format!(
                "declared distance {} km is shorter than the {straight:.3} km between start and end",
                self.distance_km
            )));
        }
        Ok(())
    }
}

/// Per-feature ease scores in `[0, 5]`; higher is easier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureScores {
    pub distance: f64,
    pub elevation: f64,
    pub pavement: f64,
}

impl FeatureScores {
    pub fn new(distance: f64, elevation: f64, pavement: f64) -> Self {
        FeatureScores {
            distance,
            elevation,
            pavement,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.distance, self.elevation, self.pavement]
    }
}

/// Corpus statistics used to map raw features onto `[0, 5]`.
///
/// Distance is min-max scaled and inverted (shortest 5, longest 0).
/// Elevation is anchored at 0 m = 5 and the corpus maximum = 0. A feature
/// that is constant across the corpus scores 5 for every route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScaler {
    min_distance: f64,
    max_distance: f64,
    max_elevation: f64,
}

impl FeatureScaler {
    pub fn from_corpus(corpus: &[Route]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCatalog);
        }
        let fold = |f: fn(f64, f64) -> f64, get: fn(&Route) -> f64, init: f64| corpus.iter().map(get).fold(init, f);
        Ok(FeatureScaler {
            min_distance: fold(f64::min, |r| r.distance_km, f64::INFINITY),
            max_distance: fold(f64::max, |r| r.distance_km, f64::NEG_INFINITY),
            max_elevation: fold(f64::max, |r| r.elevation_gain_m, 0.0),
        })
    }

    pub fn distance_score(&self, distance_km: f64) -> f64 {
        let span = self.max_distance - self.min_distance;
        if span <= 0.0 {
            return MAX_SCORE;
        }
        (MAX_SCORE * (self.max_distance - distance_km) / span).clamp(0.0, MAX_SCORE)
    }

    pub fn elevation_score(&self, elevation_gain_m: f64) -> f64 {
        if self.max_elevation <= 0.0 {
            return MAX_SCORE;
        }
        (MAX_SCORE * (1.0 - elevation_gain_m / self.max_elevation)).clamp(0.0, MAX_SCORE)
    }

    pub fn scores(&self, route: &Route) -> FeatureScores {
        FeatureScores {
            distance: self.distance_score(route.distance_km),
            elevation: self.elevation_score(route.elevation_gain_m),
            pavement: route.pavement.score(),
        }
    }
}

pub fn normalize_features(route: &Route, corpus: &[Route]) -> Result<FeatureScores> {
    let scaler = FeatureScaler::from_corpus(corpus)?;
    if !corpus.iter().any(|r| r.id == route.id) {
        return Err(Error::UnknownRoute(route.id.clone()));
    }
    Ok(scaler.scores(route))
}

/// An immutable, validated set of routes with precomputed scores.
#[derive(Debug, Clone)]
pub struct Catalog {
    routes: Vec<Route>,
    scores: Vec<FeatureScores>,
    index: HashMap<String, usize>,
}

impl Catalog {
    pub fn new(routes: Vec<Route>) -> Result<Self> {
        let scaler = FeatureScaler::from_corpus(&routes)?;
        let mut index = HashMap::with_capacity(routes.len());
        for (i, r) in routes.iter().enumerate() {
            r.validate()?;
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::InvalidRoute {
                    id: r.id.clone(),
                    reason: "duplicate id".into(),
                });
            }
        }
        let scores = routes.iter().map(|r| scaler.scores(r)).collect();
        Ok(Catalog { routes, scores, index })
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn scores(&self) -> &[FeatureScores] {
        &self.scores
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Result<(&Route, FeatureScores)> {
        let i = self.position(id).ok_or_else(|| Error::UnknownRoute(id.to_string()))?;
        Ok((&self.routes[i], self.scores[i]))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.routes.iter().map(|r| r.id.as_str())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn route(id: &str, distance_km: f64, elevation_gain_m: f64, pavement: Pavement) -> Route {
        let p = GeoPoint::new(41.1, 1.2).unwrap();
        Route {
            id: id.into(),
            start: p,
            end: p,
            checkpoints: vec![],
            distance_km,
            elevation_gain_m,
            pavement,
            status: RouteStatus::Idle,
        }
    }

    #[test]
    fn dms_examples() {
        let a = parse_dms("41°4'44.54\"N").unwrap();
        assert_eq!(a.axis, Axis::Latitude);
        assert!((a.degrees - 41.079039).abs() < 1e-6);
        assert_eq!(parse_dms("0°0'0.00\"N").unwrap().degrees, 0.0);
        let b = parse_dms("1°12'49.58\"E").unwrap();
        assert_eq!(b.axis, Axis::Longitude);
        assert!((b.degrees - 1.213772).abs() < 1e-6);
        assert!((parse_dms("41° 4'44.54\"S").unwrap().degrees + 41.079039).abs() < 1e-6);
        assert!(parse_dms("1°12'49.58\"W").unwrap().degrees < 0.0);
    }

    #[test]
    fn dms_errors_name_the_token() {
        let cases = [
            ("41°60'0\"N", "60"),
            ("41°4'60.5\"N", "60.5"),
            ("91°0'0\"N", "91"),
            ("181°0'0\"E", "181"),
            ("41°4'44.54\"Q", "41°4'44.54\"Q"),
            ("41 4 44.54N", "41 4 44.54N"),
            ("4x°4'44.54\"N", "4x"),
        ];
        for (text, token) in cases {
            match parse_dms(text) {
                Err(Error::Coordinate { token: t, .. }) => assert_eq!(t, token, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn point_formats() {
        let table = parse_point("41° 6'32.82\"N, 1°14'58.55\"E").unwrap();
        assert!((table.latitude() - (41.0 + 6.0 / 60.0 + 32.82 / 3600.0)).abs() < 1e-12);
        let decimal = parse_point("41.5, -2.25").unwrap();
        assert_eq!((decimal.latitude(), decimal.longitude()), (41.5, -2.25));
        assert_eq!(parse_point(&decimal.to_string()).unwrap(), decimal);
        assert!(parse_point("1°12'49.58\"E 41°4'44.54\"N").is_err());
        assert!(parse_point("91 0").is_err());
        assert!(parse_point("41.0").is_err());
    }

    #[test]
    fn haversine_examples() {
        let a = GeoPoint::new(0.0, 0.0).unwrap();
        assert_eq!(haversine_km(&a, &a), 0.0);
        let b = GeoPoint::new(0.0, 90.0).unwrap();
        let quarter = 2.0 * std::f64::consts::PI * EARTH_RADIUS_KM / 4.0;
        assert!((haversine_km(&a, &b) - quarter).abs() < 1.0);
        assert!((haversine_km(&a, &b) - 10007.5).abs() < 1.0);
        let start = parse_point("41°4'44.54\"N 1°12'49.58\"E").unwrap();
        let end = parse_point("41°6'32.82\"N, 1°14'58.55\"E").unwrap();
        assert!(haversine_km(&start, &end) <= 9.6);
    }

    #[test]
    fn elevation_anchors() {
        let corpus = vec![
            route("a", 9.6, 0.0, Pavement::VeryGood),
            route("k", 2.32, 55.0, Pavement::Average),
        ];
        let a = normalize_features(&corpus[0], &corpus).unwrap();
        let k = normalize_features(&corpus[1], &corpus).unwrap();
        assert_eq!(a.elevation, 5.0);
        assert_eq!(k.elevation, 0.0);
        assert_eq!((a.distance, k.distance), (0.0, 5.0));
        assert_eq!((a.pavement, k.pavement), (5.0, 3.0));
    }

    #[test]
    fn degenerate_corpus_scores_five() {
        let single = vec![route("x", 3.0, 40.0, Pavement::Poor)];
        let s = normalize_features(&single[0], &single).unwrap();
        assert_eq!((s.distance, s.elevation, s.pavement), (5.0, 0.0, 2.0));
        let flat = vec![
            route("x", 3.0, 0.0, Pavement::Poor),
            route("y", 3.0, 0.0, Pavement::Good),
        ];
        let s = normalize_features(&flat[1], &flat).unwrap();
        assert_eq!((s.distance, s.elevation), (5.0, 5.0));
    }

    #[test]
    fn normalize_errors() {
        let r = route("x", 3.0, 0.0, Pavement::Poor);
        assert!(matches!(normalize_features(&r, &[]), Err(Error::EmptyCatalog)));
        let other = vec![route("y", 3.0, 0.0, Pavement::Poor)];
        assert!(matches!(normalize_features(&r, &other), Err(Error::UnknownRoute(_))));
    }

    #[test]
    fn pavement_and_status_vocabulary() {
        assert_eq!("Very good".parse::<Pavement>().unwrap(), Pavement::VeryGood);
        assert_eq!("very_poor".parse::<Pavement>().unwrap(), Pavement::VeryPoor);
        assert_eq!("Average".parse::<Pavement>().unwrap(), Pavement::Average);
        assert!("Excellent".parse::<Pavement>().is_err());
        let scores: Vec<f64> = [
            Pavement::VeryPoor,
            Pavement::Poor,
            Pavement::Average,
            Pavement::Good,
            Pavement::VeryGood,
        ]
        .iter()
        .map(|p| p.score())
        .collect();
        assert_eq!(scores, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!("caution".parse::<RouteStatus>().unwrap(), RouteStatus::Caution);
        assert!("Closed".parse::<RouteStatus>().is_err());
    }

    #[test]
    fn catalog_rejects_bad_routes() {
        assert!(matches!(Catalog::new(vec![]), Err(Error::EmptyCatalog)));
        let dup = vec![
            route("a", 1.0, 0.0, Pavement::Good),
            route("a", 2.0, 0.0, Pavement::Good),
        ];
        assert!(Catalog::new(dup).is_err());
        assert!(Catalog::new(vec![route("a", 0.0, 0.0, Pavement::Good)]).is_err());
        assert!(Catalog::new(vec![route("a", 1.0, -1.0, Pavement::Good)]).is_err());
        let mut far = route("a", 1.0, 0.0, Pavement::Good);
        far.end = GeoPoint::new(41.2, 1.2).unwrap();
        assert!(Catalog::new(vec![far]).is_err());
    }

    fn arb_route(i: usize) -> impl Strategy<Value = Route> {
        (0.1f64..50.0, 0.0f64..800.0, 0usize..5).prop_map(move |(d, e, p)| {
            let pavement = [
                Pavement::VeryPoor,
                Pavement::Poor,
                Pavement::Average,
                Pavement::Good,
                Pavement::VeryGood,
            ][p];
            route(&format!("r{i}"), d, e, pavement)
        })
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<Route>> {
        (1usize..12).prop_flat_map(|n| (0..n).map(arb_route).collect::<Vec<_>>())
    }

    proptest! {
        #[test]
        fn scores_in_range_and_monotone(corpus in arb_corpus()) {
            let scaler = FeatureScaler::from_corpus(&corpus).unwrap();
            for a in &corpus {
                let sa = scaler.scores(a);
                for v in sa.as_array() {
                    prop_assert!((0.0..=MAX_SCORE).contains(&v));
                }
                for b in &corpus {
                    let sb = scaler.scores(b);
                    if a.distance_km <= b.distance_km {
                        prop_assert!(sa.distance >= sb.distance);
                    }
                    if a.elevation_gain_m <= b.elevation_gain_m {
                        prop_assert!(sa.elevation >= sb.elevation);
                    }
                    if a.pavement < b.pavement {
                        prop_assert!(sa.pavement < sb.pavement);
                    }
                }
            }
        }

        #[test]
        fn features_are_independent(corpus in arb_corpus(), idx in any::<prop::sample::Index>(), bump in 0.1f64..100.0) {
            let i = idx.index(corpus.len());
            let before: Vec<FeatureScores> = {
                let s = FeatureScaler::from_corpus(&corpus).unwrap();
                corpus.iter().map(|r| s.scores(r)).collect()
            };
            let mut elevated = corpus.clone();
            elevated[i].elevation_gain_m += bump;
            let s = FeatureScaler::from_corpus(&elevated).unwrap();
            for (r, old) in elevated.iter().zip(&before) {
                let new = s.scores(r);
                prop_assert_eq!(new.distance, old.distance);
                prop_assert_eq!(new.pavement, old.pavement);
            }
            let mut longer = corpus.clone();
            longer[i].distance_km += bump;
            let s = FeatureScaler::from_corpus(&longer).unwrap();
            for (r, old) in longer.iter().zip(&before) {
                let new = s.scores(r);
                prop_assert_eq!(new.elevation, old.elevation);
                prop_assert_eq!(new.pavement, old.pavement);
            }
        }

        #[test]
        fn dms_round_trip(lat in -90.0f64..=90.0, lon in -180.0f64..=180.0) {
            let p = GeoPoint::new(lat, lon).unwrap();
            let q = parse_point(&p.to_dms()).unwrap();
            let half_arcsec = 0.5 / 3600.0;
            prop_assert!((q.latitude() - lat).abs() <= half_arcsec);
            prop_assert!((q.longitude() - lon).abs() <= half_arcsec);
        }
    }
}
