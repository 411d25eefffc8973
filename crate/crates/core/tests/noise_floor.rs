mod common;

use common::*;
use healthroute::dataset_io;
use healthroute::eval::{evaluate_holdout, gaussian_mae_floor, holdout_split, Truth};
use healthroute::population::{generate_population, PopulationConfig};
use healthroute::rating_sim::{generate_ratings, ModifierTable, NoiseConfig};
use healthroute::Catalog;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn unclamped_floor_matches_monte_carlo() {
    let normal = Normal::new(0.0, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 1_000_000;
    let mc = (0..n).map(|_| f64::abs(normal.sample(&mut rng))).sum::<f64>() / n as f64;
    assert!((mc - gaussian_mae_floor(1.5)).abs() < 0.005, "{mc}");
    assert!((gaussian_mae_floor(1.5) - 1.1968).abs() < 1e-4);
}

#[test]
fn oracle_mae_matches_clamped_noise_simulation() {
    let pop = generate_population(1_000, &PopulationConfig::default(), 21).unwrap();
    let catalog = Catalog::new(dataset_io::read_routes(&data_path("tarragona_routes.csv")).unwrap()).unwrap();
    let gen = generate_ratings(&pop, &catalog, &ModifierTable::default(), &NoiseConfig::default(), 22).unwrap();
    let truth = Truth {
        noisy: Some(&gen.noisy),
        deterministic: Some(&gen.deterministic),
    };
    let report = evaluate_holdout(&gen.matrix, truth, 0.2, 23, &Default::default(), 1.5).unwrap();
    let oracle = report.oracle.unwrap().mae;
    assert!((oracle - 1.197).abs() < 0.1, "{oracle}");
    assert!((2_050..=2_350).contains(&report.n_test), "{}", report.n_test);

    // Expected error of the noiseless rating against clamp(d + e, 0, 10) on
    // the same test cells, by simulation.
    let split = holdout_split(&gen.matrix, 0.2, 23).unwrap();
    let m = gen.matrix.n_routes();
    let normal = Normal::new(0.0, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let reps = 200;
    let mut total = 0.0;
    for _ in 0..reps {
        for c in &split.test {
            let d = gen.deterministic[c.user * m + c.route];
            total += ((d + normal.sample(&mut rng)).clamp(0.0, 10.0) - d).abs();
        }
    }
    let expected = total / (reps * split.test.len()) as f64;
    // Standard error of a 2,200-cell mean is about 0.019.
    assert!(
        (oracle - expected).abs() < 0.08,
        "oracle {oracle} vs simulated {expected}"
    );
    assert!(expected < gaussian_mae_floor(1.5));
}
