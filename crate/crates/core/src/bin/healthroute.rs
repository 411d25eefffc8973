use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use healthroute::dataset_io::{
    self, file_digest, file_key, manifest_path, ConfigSnapshot, RatingsFile, RunManifest, Shapes,
};
use healthroute::eval::{self, Truth};
use healthroute::population::{generate_population, PopulationConfig};
use healthroute::profiles::{self, ProfileId};
use healthroute::rating_sim::{generate_ratings, ModifierTable, NoiseConfig};
use healthroute::recommender::{CandidateMode, HealthFilterConfig, HealthGate, Metric, Recommender, SimilarityModel};
use healthroute::routes::Catalog;
use healthroute::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_STATISTICAL: u8 = 3;

/// Synthetic health-aware route ratings and collaborative-filtering
/// recommendations.
#[derive(Debug, Parser)]
#[command(name = "healthroute", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a citizen population and write it with a manifest.
    GenCitizens {
        /// Number of citizens.
        #[arg(long)]
        n: usize,
        /// Generation seed (required; there is no time-based default).
        #[arg(long)]
        seed: u64,
        /// TOML file with [prevalence], [[pyramid]] and severity_weights.
        /// Defaults: visual 0.034, respiratory 0.032, mobility 0.02,
        /// cardio 0.14 (ages > 45 only), pyramid 18-35 27% / 36-50 29% /
        /// 51-65 24% / 66-90 20%, uniform severities.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and validate a route catalog, preview its feature scores and
    /// write it in canonical form.
    IngestRoutes {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rate every route for every citizen and write the ratings with a
    /// manifest.
    GenRatings {
        #[arg(long)]
        citizens: PathBuf,
        #[arg(long)]
        routes: PathBuf,
        /// Generation seed (required).
        #[arg(long)]
        seed: u64,
        /// Standard deviation of the additive Gaussian noise.
        #[arg(long, default_value_t = 1.5)]
        noise_std: f64,
        /// Disable noise entirely.
        #[arg(long)]
        no_noise: bool,
        /// TOML modifier table; defaults to the built-in skill modifiers.
        #[arg(long)]
        modifiers: Option<PathBuf>,
        /// Also write full-precision `noisy` and `deterministic` columns.
        #[arg(long)]
        with_oracle: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print (and optionally write) top-N recommendations for one user.
    Recommend {
        #[arg(long)]
        ratings: PathBuf,
        /// Citizens file; enables the health filter.
        #[arg(long)]
        citizens: Option<PathBuf>,
        /// Route catalog; required with --citizens.
        #[arg(long)]
        routes: Option<PathBuf>,
        #[arg(long)]
        user: u32,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[command(flatten)]
        model: ModelArgs,
        /// Reject routes whose noiseless rating for the user is below this.
        #[arg(long, default_value_t = 3.0)]
        threshold: f64,
        /// Also reject Caution routes for users with any health condition.
        #[arg(long)]
        strict: bool,
        /// Consider routes the user already rated (complete matrices).
        #[arg(long)]
        include_rated: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hold out a fraction of ratings and report MAE/RMSE against the noise
    /// floor.
    Evaluate {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        fraction: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
        /// Noise level the data was generated with; sets the noise floor.
        /// Read from the ratings manifest when present.
        #[arg(long)]
        noise_std: Option<f64>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Prevalence report and 64-profile census of a citizens file.
    Stats {
        #[arg(long)]
        citizens: PathBuf,
        /// Population config the targets are read from; the manifest's or
        /// the defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Similarity metric: pearson or cosine.
    #[arg(long, default_value = "pearson")]
    metric: Metric,
    /// Neighbourhood size.
    #[arg(long, default_value_t = 30)]
    k: usize,
    /// Minimum co-rated routes for a similarity to count.
    #[arg(long, default_value_t = 3)]
    min_overlap: usize,
}

impl ModelArgs {
    fn model(&self) -> SimilarityModel {
        SimilarityModel {
            metric: self.metric,
            k_neighbors: self.k,
            min_overlap: self.min_overlap,
        }
    }
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => EXIT_USAGE,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::GenCitizens { n, seed, config, out } => gen_citizens(n, seed, config.as_deref(), &out),
        Command::IngestRoutes { input, out } => ingest_routes(&input, &out),
        Command::GenRatings {
            citizens,
            routes,
            seed,
            noise_std,
            no_noise,
            modifiers,
            with_oracle,
            out,
        } => {
            let noise = NoiseConfig {
                std_dev: noise_std,
                enabled: !no_noise,
                ..Default::default()
            };
            gen_ratings(&citizens, &routes, seed, noise, modifiers.as_deref(), with_oracle, &out)
        }
        Command::Recommend {
            ratings,
            citizens,
            routes,
            user,
            n,
            model,
            threshold,
            strict,
            include_rated,
            out,
        } => recommend(RecommendArgs {
            ratings,
            citizens,
            routes,
            user,
            n,
            model: model.model(),
            filter: HealthFilterConfig { threshold, strict },
            include_rated,
            out,
        }),
        Command::Evaluate {
            ratings,
            fraction,
            seed,
            model,
            noise_std,
            json,
        } => evaluate(&ratings, fraction, seed, &model.model(), noise_std, json),
        Command::Stats { citizens, config, json } => stats(&citizens, config.as_deref(), json),
    }
}

fn load_population_config(path: Option<&Path>) -> Result<PopulationConfig, Failure> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            Ok(PopulationConfig::from_toml(&text)?)
        }
        None => Ok(PopulationConfig::default()),
    }
}

/// Reads the manifest next to `data` if there is one, and warns when the
/// file no longer matches the digest recorded for it.
fn companion_manifest(data: &Path) -> Option<RunManifest> {
    let path = manifest_path(data);
    if !path.exists() {
        return None;
    }
    match dataset_io::read_manifest(&path) {
        Ok(m) => {
            match m.verify_output(&file_key(data), data) {
                Ok(Some(mismatch)) => eprintln!("warning: {}: {mismatch}", data.display()),
                Ok(None) => {}
                Err(e) => eprintln!("warning: {e}"),
            }
            Some(m)
        }
        Err(e) => {
            eprintln!("warning: {e}");
            None
        }
    }
}

fn warn_config_mismatches(manifest: &RunManifest, supplied: &ConfigSnapshot) {
    for m in manifest.verify_configs(supplied) {
        eprintln!("warning: {m}");
    }
}

fn finish_manifest(mut manifest: RunManifest, out: &Path) -> CliResult {
    manifest.outputs.insert(file_key(out), file_digest(out)?);
    let path = manifest_path(out);
    dataset_io::write_manifest(&path, &manifest)?;
    eprintln!("wrote {} and {}", out.display(), path.display());
    Ok(())
}

fn gen_citizens(n: usize, seed: u64, config: Option<&Path>, out: &Path) -> CliResult {
    let cfg = load_population_config(config)?;
    let population = generate_population(n, &cfg, seed)?;
    dataset_io::write_citizens(out, &population)?;
    let manifest = RunManifest::new(
        "gen-citizens",
        seed,
        ConfigSnapshot {
            population: Some(cfg),
            ..Default::default()
        },
        Shapes {
            n_users: population.len(),
            m_routes: 0,
            n_ratings: 0,
        },
    );
    finish_manifest(manifest, out)
}

fn ingest_routes(input: &Path, out: &Path) -> CliResult {
    let routes = dataset_io::read_routes(input)?;
    let catalog = Catalog::new(routes)?;
    println!(
        "{:<12} {:>9} {:>8} {:>10} {:>6} {:>6} {:>6}  status",
        "route", "km", "elev_m", "pavement", "dist", "elev", "pave"
    );
    for (r, s) in catalog.routes().iter().zip(catalog.scores()) {
        println!(
            "{:<12} {:>9.2} {:>8.1} {:>10} {:>6.2} {:>6.2} {:>6.2}  {}",
            r.id,
            r.distance_km,
            r.elevation_gain_m,
            r.pavement.label(),
            s.distance,
            s.elevation,
            s.pavement,
            r.status
        );
    }
    dataset_io::write_routes(out, catalog.routes())?;
    eprintln!("wrote {} ({} routes)", out.display(), catalog.len());
    Ok(())
}

fn gen_ratings(
    citizens: &Path,
    routes: &Path,
    seed: u64,
    noise: NoiseConfig,
    modifiers: Option<&Path>,
    with_oracle: bool,
    out: &Path,
) -> CliResult {
    let table = match modifiers {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            ModifierTable::from_toml(&text)?
        }
        None => ModifierTable::default(),
    };
    noise.validate()?;
    let _ = companion_manifest(citizens);
    let population = dataset_io::read_citizens(citizens)?;
    let catalog = Catalog::new(dataset_io::read_routes(routes)?)?;
    let generated = generate_ratings(&population, &catalog, &table, &noise, seed)?;
    let shapes = Shapes {
        n_users: generated.matrix.n_users(),
        m_routes: generated.matrix.n_routes(),
        n_ratings: generated.matrix.n_ratings(),
    };
    dataset_io::write_ratings(out, &RatingsFile::from(generated), with_oracle)?;
    let mut manifest = RunManifest::new(
        "gen-ratings",
        seed,
        ConfigSnapshot {
            modifiers: Some(table),
            noise: Some(noise),
            ..Default::default()
        },
        shapes,
    );
    manifest.inputs.insert(file_key(citizens), file_digest(citizens)?);
    manifest.inputs.insert(file_key(routes), file_digest(routes)?);
    finish_manifest(manifest, out)
}

struct RecommendArgs {
    ratings: PathBuf,
    citizens: Option<PathBuf>,
    routes: Option<PathBuf>,
    user: u32,
    n: usize,
    model: SimilarityModel,
    filter: HealthFilterConfig,
    include_rated: bool,
    out: Option<PathBuf>,
}

fn recommend(args: RecommendArgs) -> CliResult {
    let ratings_manifest = companion_manifest(&args.ratings);
    let file = dataset_io::read_ratings(&args.ratings)?;
    let recommender = Recommender::new(&file.matrix, args.model)?;
    let mode = if args.include_rated {
        CandidateMode::All
    } else {
        CandidateMode::Unrated
    };

    let context = match (&args.citizens, &args.routes) {
        (Some(c), Some(r)) => {
            let population = dataset_io::read_citizens(c)?;
            let catalog = Catalog::new(dataset_io::read_routes(r)?)?;
            Some((population, catalog))
        }
        (None, None) => None,
        _ => {
            return Err(Failure {
                code: EXIT_USAGE,
                message: "--citizens and --routes must be given together".into(),
            })
        }
    };
    let table = ratings_manifest
        .as_ref()
        .and_then(|m| m.configs.modifiers.clone())
        .unwrap_or_default();
    let citizen = match &context {
        Some((population, _)) => Some(
            population
                .iter()
                .find(|c| c.id == args.user)
                .ok_or(Error::UnknownUser(args.user))?,
        ),
        None => None,
    };
    let gate = match (&context, citizen) {
        (Some((_, catalog)), Some(citizen)) => Some(HealthGate {
            citizen,
            catalog,
            table: &table,
            config: args.filter,
        }),
        _ => None,
    };

    let recs = recommender.top_n(args.user, args.n, mode, gate.as_ref())?;
    let m = &args.model;
    let filter_desc = if gate.is_some() {
        format!("threshold={} strict={}", args.filter.threshold, args.filter.strict)
    } else {
        "filter=off".into()
    };
    println!(
        "# user={} n={} metric={} k={} min_overlap={} {filter_desc} candidates={}",
        args.user,
        args.n,
        m.metric,
        m.k_neighbors,
        m.min_overlap,
        if args.include_rated { "all" } else { "unrated" }
    );
    println!("rank  route         predicted  support  noiseless  verdict");
    for (i, r) in recs.iter().enumerate() {
        let (det, verdict) = match &r.verdict {
            Some(v) => (format!("{:.3}", v.deterministic_rating), "pass"),
            None => ("-".to_string(), "-"),
        };
        println!(
            "{:>4}  {:<12} {:>10.3} {:>8} {:>10}  {verdict}",
            i + 1,
            r.route_id,
            r.predicted,
            r.support,
            det
        );
    }
    if recs.len() < args.n {
        eprintln!(
            "note: {} of {} requested routes survived the candidate and health filters",
            recs.len(),
            args.n
        );
    }
    if let Some(out) = &args.out {
        dataset_io::write_recommendations(
            out,
            args.user,
            &recs,
            &args.model,
            gate.as_ref().map(|g| &g.config),
            if args.include_rated { "all" } else { "unrated" },
        )?;
        let mut manifest = RunManifest::new(
            "recommend",
            ratings_manifest.as_ref().map_or(0, |m| m.seed),
            ConfigSnapshot {
                modifiers: gate.is_some().then(|| table.clone()),
                model: Some(args.model),
                ..Default::default()
            },
            Shapes {
                n_users: file.matrix.n_users(),
                m_routes: file.matrix.n_routes(),
                n_ratings: file.matrix.n_ratings(),
            },
        );
        manifest
            .inputs
            .insert(file_key(&args.ratings), file_digest(&args.ratings)?);
        for p in [&args.citizens, &args.routes].into_iter().flatten() {
            manifest.inputs.insert(file_key(p), file_digest(p)?);
        }
        return finish_manifest(manifest, out);
    }
    Ok(())
}

fn evaluate(
    ratings: &Path,
    fraction: f64,
    seed: u64,
    model: &SimilarityModel,
    noise_std: Option<f64>,
    json: bool,
) -> CliResult {
    let manifest = companion_manifest(ratings);
    let file = dataset_io::read_ratings(ratings)?;
    let noise_std = noise_std
        .or_else(|| {
            manifest
                .as_ref()
                .and_then(|m| m.configs.noise)
                .map(|n| if n.enabled { n.std_dev } else { 0.0 })
        })
        .unwrap_or(NoiseConfig::default().std_dev);
    let truth = Truth {
        noisy: file.noisy.as_deref(),
        deterministic: file.deterministic.as_deref(),
    };
    let report = eval::evaluate_holdout(&file.matrix, truth, fraction, seed, model, noise_std)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!(
            "hold-out: {} test cells (fraction {}, seed {}), model {} k={} min_overlap={}",
            report.n_test, fraction, seed, model.metric, model.k_neighbors, model.min_overlap
        );
        println!(
            "target:   {}",
            if truth.noisy.is_some() {
                "full-precision noisy ratings"
            } else {
                "stored integer ratings"
            }
        );
        println!("{:<22} {:>8} {:>8}", "predictor", "MAE", "RMSE");
        println!(
            "{:<22} {:>8.4} {:>8.4}",
            "collaborative filter", report.cf.mae, report.cf.rmse
        );
        if let Some(o) = &report.oracle {
            println!("{:<22} {:>8.4} {:>8.4}", "noiseless oracle", o.mae, o.rmse);
        }
        println!(
            "noise floor {:.4} (sigma {}), band [{:.4}, {:.4}]: {}",
            report.noise_floor,
            report.noise_std,
            report.band.0,
            report.band.1,
            if report.within_band { "PASS" } else { "FAIL" }
        );
    }
    if !report.within_band {
        return Err(Failure {
            code: EXIT_STATISTICAL,
            message: format!("CF MAE {:.4} outside the noise-floor band", report.cf.mae),
        });
    }
    Ok(())
}

fn stats(citizens: &Path, config: Option<&Path>, json: bool) -> CliResult {
    let manifest = companion_manifest(citizens);
    let cfg = match (config, manifest.as_ref().and_then(|m| m.configs.population.clone())) {
        (Some(p), recorded) => {
            let cfg = load_population_config(Some(p))?;
            if recorded.is_some() {
                warn_config_mismatches(
                    manifest.as_ref().expect("recorded implies manifest"),
                    &ConfigSnapshot {
                        population: Some(cfg.clone()),
                        ..Default::default()
                    },
                );
            }
            cfg
        }
        (None, Some(recorded)) => recorded,
        (None, None) => PopulationConfig::default(),
    };
    let population = dataset_io::read_citizens(citizens)?;
    let report = eval::prevalence_report(&population, &cfg.prevalence)?;
    let census = profiles::profile_census(&population)?;
    if json {
        let census_map: std::collections::BTreeMap<u8, usize> =
            census.counts.iter().map(|(k, v)| (k.packed(), *v)).collect();
        let value = serde_json::json!({
            "prevalence": report,
            "pass": report.pass(),
            "census": census_map,
            "distinct_profiles": census.distinct(),
        });
        println!("{}", serde_json::to_string_pretty(&value).expect("report serializes"));
    } else {
        println!("citizens: {}", report.n);
        println!(
            "{:<12} {:>8} {:>9} {:>8}  result",
            "condition", "target", "observed", "3sigma"
        );
        for c in &report.checks {
            println!(
                "{:<12} {:>8.4} {:>9.4} {:>8.4}  {}",
                c.condition,
                c.target,
                c.empirical,
                c.bound,
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        println!(
            "heart disease at age <= {}: {}  {}",
            cfg.prevalence.heart_age_threshold,
            report.young_with_heart_disease,
            if report.young_with_heart_disease == 0 {
                "PASS"
            } else {
                "FAIL"
            }
        );
        println!("profiles observed: {} of 64", census.distinct());
        println!("{:>3}  {:<40} {:>8}", "id", "profile", "count");
        for id in ProfileId::all() {
            let count = census.get(id);
            if count > 0 {
                println!("{:>3}  {:<40} {:>8}", id.packed(), id.to_string(), count);
            }
        }
    }
    if !report.pass() {
        return Err(Failure {
            code: EXIT_STATISTICAL,
            message: "prevalence check failed".into(),
        });
    }
    Ok(())
}
