//! File formats. All files are UTF-8 CSV with a mandatory header row, comma
//! delimiter and LF line endings; rows are written in a stable order so the
//! same data always produces the same bytes.
//!
//! | file | header |
//! |------|--------|
//! | citizens | `id,age,visual,respiratory,mobility,heart` |
//! | routes | `id,start,end,checkpoints,distance_km,elevation_gain_m,pavement,status` |
//! | ratings | `user_id,route_id,rating[,noisy,deterministic]` |
//! | recommendations | `#` parameter lines, then `user_id,rank,route_id,predicted,support,deterministic_rating,pass` |
//!
//! Run manifests are pretty-printed JSON.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::population::{Citizen, HealthConditions, PopulationConfig, Severity};
use crate::rating_sim::{GeneratedRatings, ModifierTable, NoiseConfig};
use crate::ratings::RatingsMatrix;
use crate::recommender::{HealthFilterConfig, Recommendation, SimilarityModel};
use crate::routes::{parse_point, GeoPoint, Route};

pub const CITIZEN_HEADER: [&str; 6] = ["id", "age", "visual", "respiratory", "mobility", "heart"];
pub const ROUTE_HEADER: [&str; 8] = [
    "id",
    "start",
    "end",
    "checkpoints",
    "distance_km",
    "elevation_gain_m",
    "pavement",
    "status",
];
pub const RATING_HEADER: [&str; 3] = ["user_id", "route_id", "rating"];
pub const RATING_ORACLE_COLUMNS: [&str; 2] = ["noisy", "deterministic"];

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

fn finish<W: Write>(path: &Path, writer: csv::Writer<W>) -> Result<()> {
    let mut inner = writer.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<Vec<String>> {
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < expected.len() || header[..expected.len()] != *expected {
        return Err(Error::parse(
            path,
            1,
            "header",
            format!("expected `{}`, found `{}`", expected.join(","), header.join(",")),
        ));
    }
    Ok(header)
}

/// A record plus the context needed for positional diagnostics.
struct Row<'a> {
    path: &'a Path,
    line: u64,
    header: &'a [String],
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn field(&self, i: usize) -> Result<&str> {
        self.record
            .get(i)
            .map(str::trim)
            .ok_or_else(|| self.err(i, "missing value"))
    }

    fn err(&self, i: usize, reason: impl Into<String>) -> Error {
        let column = self.header.get(i).cloned().unwrap_or_else(|| format!("#{}", i + 1));
        Error::parse(self.path, self.line, column, reason)
    }

    fn parse<T: std::str::FromStr>(&self, i: usize) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.field(i)?;
        raw.parse().map_err(|e| self.err(i, format!("`{raw}`: {e}")))
    }

    fn check_width(&self) -> Result<()> {
        if self.record.len() != self.header.len() {
            return Err(Error::parse(
                self.path,
                self.line,
                "row",
                format!("expected {} fields, found {}", self.header.len(), self.record.len()),
            ));
        }
        Ok(())
    }
}

fn for_each_row(
    path: &Path,
    reader: &mut csv::Reader<File>,
    header: &[String],
    mut f: impl FnMut(&Row<'_>) -> Result<()>,
) -> Result<()> {
    let mut record = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, "row", e.to_string())
        })?;
        if !more {
            return Ok(());
        }
        let line = record.position().map_or(0, |p| p.line());
        let row = Row {
            path,
            line,
            header,
            record: &record,
        };
        row.check_width()?;
        f(&row)?;
    }
}

pub fn write_citizens(path: &Path, population: &[Citizen]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(CITIZEN_HEADER)?;
    for c in population {
        let s = c.health.severities();
        w.write_record([
            c.id.to_string(),
            c.age.to_string(),
            s[0].to_string(),
            s[1].to_string(),
            s[2].to_string(),
            s[3].to_string(),
        ])?;
    }
    finish(path, w)
}

pub fn read_citizens(path: &Path) -> Result<Vec<Citizen>> {
    let mut reader = open(path)?;
    let header = check_header(path, &mut reader, &CITIZEN_HEADER)?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for_each_row(path, &mut reader, &header, |row| {
        let id: u32 = row.parse(0)?;
        let age: u8 = row.parse(1)?;
        let mut sev = [Severity::NONE; 4];
        for (k, s) in sev.iter_mut().enumerate() {
            let value: f64 = row.parse(k + 2)?;
            *s = Severity::from_value(value).map_err(|e| row.err(k + 2, e.to_string()))?;
        }
        let citizen = Citizen::new(id, age, HealthConditions::new(sev[0], sev[1], sev[2], sev[3]))
            .map_err(|e| row.err(1, e.to_string()))?;
        if !seen.insert(id) {
            return Err(row.err(0, format!("duplicate citizen id {id}")));
        }
        out.push(citizen);
        Ok(())
    })?;
    Ok(out)
}

fn format_points(points: &[GeoPoint]) -> String {
    points.iter().map(GeoPoint::to_string).collect::<Vec<_>>().join(";")
}

/// Writes the canonical catalog: decimal-degree coordinates, canonical
/// vocabulary.
pub fn write_routes(path: &Path, routes: &[Route]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(ROUTE_HEADER)?;
    for r in routes {
        w.write_record([
            r.id.clone(),
            r.start.to_string(),
            r.end.to_string(),
            format_points(&r.checkpoints),
            r.distance_km.to_string(),
            r.elevation_gain_m.to_string(),
            r.pavement.to_string(),
            r.status.to_string(),
        ])?;
    }
    finish(path, w)
}

/// Reads a route catalog; points may be DMS or decimal. Each route is
/// validated, including the straight-line distance check.
pub fn read_routes(path: &Path) -> Result<Vec<Route>> {
    let mut reader = open(path)?;
    let header = check_header(path, &mut reader, &ROUTE_HEADER)?;
    let mut out = Vec::new();
    for_each_row(path, &mut reader, &header, |row| {
        let point = |i: usize| parse_point(row.field(i)?).map_err(|e| row.err(i, e.to_string()));
        let checkpoints = row
            .field(3)?
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_point(s).map_err(|e| row.err(3, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let route = Route {
            id: row.field(0)?.to_string(),
            start: point(1)?,
            end: point(2)?,
            checkpoints,
            distance_km: row.parse(4)?,
            elevation_gain_m: row.parse(5)?,
            pavement: row.parse(6)?,
            status: row.parse(7)?,
        };
        route.validate().map_err(|e| row.err(0, e.to_string()))?;
        out.push(route);
        Ok(())
    })?;
    Ok(out)
}

/// Ratings as read from disk, plus the optional oracle columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsFile {
    pub matrix: RatingsMatrix,
    /// Row-major over `matrix`; `NaN` where the cell is unrated.
    pub noisy: Option<Vec<f64>>,
    pub deterministic: Option<Vec<f64>>,
}

impl From<GeneratedRatings> for RatingsFile {
    fn from(g: GeneratedRatings) -> Self {
        RatingsFile {
            matrix: g.matrix,
            noisy: Some(g.noisy),
            deterministic: Some(g.deterministic),
        }
    }
}

fn integer_rating(v: f64) -> Result<u8> {
    if !(0.0..=10.0).contains(&v) || v.fract() != 0.0 {
        return Err(Error::Validation(format!("rating {v} is not an integer in [0, 10]")));
    }
    Ok(v as u8)
}

/// Long format, one rated cell per row in row-major order. The oracle
/// columns are written only when `with_oracle` is set and both are present.
pub fn write_ratings(path: &Path, ratings: &RatingsFile, with_oracle: bool) -> Result<()> {
    let oracle = match (with_oracle, &ratings.noisy, &ratings.deterministic) {
        (true, Some(n), Some(d)) => Some((n, d)),
        (true, _, _) => return Err(Error::Validation("oracle columns requested but not available".into())),
        _ => None,
    };
    let matrix = &ratings.matrix;
    let mut w = create(path)?;
    let mut header: Vec<&str> = RATING_HEADER.to_vec();
    if oracle.is_some() {
        header.extend(RATING_ORACLE_COLUMNS);
    }
    w.write_record(&header)?;
    let m = matrix.n_routes();
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for (u, r, v) in matrix.triples() {
        record.clear();
        record.push(matrix.user_ids()[u].to_string());
        record.push(matrix.route_ids()[r].clone());
        record.push(integer_rating(v)?.to_string());
        if let Some((n, d)) = oracle {
            record.push(n[u * m + r].to_string());
            record.push(d[u * m + r].to_string());
        }
        w.write_record(&record)?;
    }
    finish(path, w)
}

pub fn read_ratings(path: &Path) -> Result<RatingsFile> {
    let mut reader = open(path)?;
    let header = check_header(path, &mut reader, &RATING_HEADER)?;
    let has_oracle = match &header[RATING_HEADER.len()..] {
        [] => false,
        [a, b] if a == RATING_ORACLE_COLUMNS[0] && b == RATING_ORACLE_COLUMNS[1] => true,
        extra => {
            return Err(Error::parse(
                path,
                1,
                "header",
                format!("unexpected columns `{}`", extra.join(",")),
            ))
        }
    };

    let mut users: Vec<u32> = Vec::new();
    let mut user_pos: HashMap<u32, usize> = HashMap::new();
    let mut routes: Vec<String> = Vec::new();
    let mut route_pos: HashMap<String, usize> = HashMap::new();
    let mut triples: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    for_each_row(path, &mut reader, &header, |row| {
        let user: u32 = row.parse(0)?;
        let route = row.field(1)?;
        if route.is_empty() {
            return Err(row.err(1, "empty route id"));
        }
        let rating: f64 = row.parse(2)?;
        let rating = integer_rating(rating).map_err(|e| row.err(2, e.to_string()))?;
        let (noisy, det) = if has_oracle {
            let unit = |i: usize| -> Result<f64> {
                let v: f64 = row.parse(i)?;
                if !(0.0..=10.0).contains(&v) {
                    return Err(row.err(i, format!("{v} outside [0, 10]")));
                }
                Ok(v)
            };
            (unit(3)?, unit(4)?)
        } else {
            (f64::NAN, f64::NAN)
        };
        let u = *user_pos.entry(user).or_insert_with(|| {
            users.push(user);
            users.len() - 1
        });
        let r = match route_pos.get(route) {
            Some(&r) => r,
            None => {
                routes.push(route.to_string());
                route_pos.insert(route.to_string(), routes.len() - 1);
                routes.len() - 1
            }
        };
        triples.push((u, r, f64::from(rating), noisy, det));
        Ok(())
    })?;

    let m = routes.len();
    let mut cells = vec![None; users.len() * m];
    let mut noisy = vec![f64::NAN; cells.len()];
    let mut det = vec![f64::NAN; cells.len()];
    for (u, r, v, n, d) in triples {
        let i = u * m + r;
        if cells[i].is_some() {
            return Err(Error::Validation(format!(
                "{}: duplicate rating for user {} route `{}`",
                path.display(),
                users[u],
                routes[r]
            )));
        }
        cells[i] = Some(v);
        noisy[i] = n;
        det[i] = d;
    }
    Ok(RatingsFile {
        matrix: RatingsMatrix::from_cells(users, routes, cells)?,
        noisy: has_oracle.then_some(noisy),
        deterministic: has_oracle.then_some(det),
    })
}

/// Recommendation list for one user. Model and filter parameters are
/// echoed as `#` lines ahead of the header.
pub fn write_recommendations(
    path: &Path,
    user_id: u32,
    recommendations: &[Recommendation],
    model: &SimilarityModel,
    filter: Option<&HealthFilterConfig>,
    candidates: &str,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let filter_line = match filter {
        Some(f) => format!("threshold={} strict={}", f.threshold, f.strict),
        None => "filter=off".to_string(),
    };
    writeln!(
        out,
        "# metric={} k_neighbors={} min_overlap={} {filter_line} candidates={candidates}",
        model.metric, model.k_neighbors, model.min_overlap
    )
    .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "user_id",
        "rank",
        "route_id",
        "predicted",
        "support",
        "deterministic_rating",
        "pass",
    ])?;
    for (rank, r) in recommendations.iter().enumerate() {
        let (det, pass) = match &r.verdict {
            Some(v) => (format!("{:.6}", v.deterministic_rating), v.pass().to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            user_id.to_string(),
            (rank + 1).to_string(),
            r.route_id.clone(),
            format!("{:.6}", r.predicted),
            r.support.to_string(),
            det,
            pass,
        ])?;
    }
    finish(path, w)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Digest of a configuration value's canonical JSON form.
pub fn config_digest<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("configs serialize"))
}

/// The configuration values a run used. Absent sections did not apply.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSnapshot {
    pub population: Option<PopulationConfig>,
    pub modifiers: Option<ModifierTable>,
    pub noise: Option<NoiseConfig>,
    pub model: Option<SimilarityModel>,
}

impl ConfigSnapshot {
    /// Digests keyed by `pyramid`, `prevalence`, `severity_weights`,
    /// `modifiers`, `noise` and `model`.
    pub fn digests(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        if let Some(p) = &self.population {
            out.insert("pyramid".into(), config_digest(&p.pyramid));
            out.insert("prevalence".into(), config_digest(&p.prevalence));
            out.insert("severity_weights".into(), config_digest(&p.severity_weights));
        }
        if let Some(m) = &self.modifiers {
            out.insert("modifiers".into(), config_digest(m));
        }
        if let Some(n) = &self.noise {
            out.insert("noise".into(), config_digest(n));
        }
        if let Some(m) = &self.model {
            out.insert("model".into(), config_digest(m));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shapes {
    pub n_users: usize,
    pub m_routes: usize,
    pub n_ratings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub generator: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub configs: ConfigSnapshot,
    pub config_digests: BTreeMap<String, String>,
    pub shapes: Shapes,
    /// File name to SHA-256 of the files this run consumed.
    pub inputs: BTreeMap<String, String>,
    /// File name to SHA-256 of the files this run wrote.
    pub outputs: BTreeMap<String, String>,
    /// Seconds since the Unix epoch. Not part of the reproducible content.
    pub created_unix: u64,
}

/// A difference between what a manifest recorded and what was supplied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigestMismatch {
    pub key: String,
    pub recorded: String,
    pub supplied: String,
}

impl std::fmt::Display for DigestMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "`{}` digest mismatch: manifest has {}, found {}",
            self.key, self.recorded, self.supplied
        )
    }
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, configs: ConfigSnapshot, shapes: Shapes) -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        RunManifest {
            generator: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config_digests: configs.digests(),
            configs,
            shapes,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            created_unix,
        }
    }

    /// Compares recorded config digests (and the embedded configs) against
    /// `supplied`; only keys present on both sides are compared.
    pub fn verify_configs(&self, supplied: &ConfigSnapshot) -> Vec<DigestMismatch> {
        let mut out = Vec::new();
        let embedded = self.configs.digests();
        let supplied = supplied.digests();
        for (key, value) in &supplied {
            for recorded in [self.config_digests.get(key), embedded.get(key)].into_iter().flatten() {
                if recorded != value {
                    out.push(DigestMismatch {
                        key: key.clone(),
                        recorded: recorded.clone(),
                        supplied: value.clone(),
                    });
                    break;
                }
            }
        }
        out
    }

    /// Checks the recorded digest of an output file against its current
    /// content.
    pub fn verify_output(&self, name: &str, path: &Path) -> Result<Option<DigestMismatch>> {
        let recorded = self
            .outputs
            .get(name)
            .ok_or_else(|| Error::Manifest(format!("no output named `{name}`")))?;
        let actual = file_digest(path)?;
        Ok((recorded != &actual).then(|| DigestMismatch {
            key: name.to_string(),
            recorded: recorded.clone(),
            supplied: actual,
        }))
    }
}

/// `<path>.manifest.json`.
pub fn manifest_path(data_path: &Path) -> PathBuf {
    let mut name = data_path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))
}

/// Name under which a file is recorded in a manifest.
pub fn file_key(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}
