//! Synthetic citizen populations, health-aware route ratings and
//! user-based collaborative filtering for route recommendation.
//!
//! The pipeline: [`population`] samples citizens, [`routes`] loads and
//! scores the catalog, [`rating_sim`] turns both into a ratings matrix,
//! [`recommender`] serves top-N routes and [`eval`] checks the data and the
//! recommender. [`dataset_io`] holds the file formats.

pub mod dataset_io;
pub mod error;
pub mod eval;
pub mod population;
pub mod profiles;
pub mod rating_sim;
pub mod ratings;
pub mod recommender;
pub mod rng;
pub mod routes;

pub use error::{Error, Result};
pub use population::{Citizen, HealthConditions, PopulationConfig, Severity};
pub use profiles::ProfileId;
pub use rating_sim::{ModifierTable, NoiseConfig};
pub use ratings::RatingsMatrix;
pub use recommender::{Recommendation, Recommender, SimilarityModel};
pub use routes::{Catalog, FeatureScores, GeoPoint, Route};
