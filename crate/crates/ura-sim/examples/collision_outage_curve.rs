//! Outage probability of the collision-discard MRC receiver: the analytic
//! Gamma-mixture curve next to a Monte-Carlo estimate with Wilson 95%
//! intervals, for both access schemes.
//!
//! ```text
//! cargo run --example collision_outage_curve
//! ```

use ura_sim::analytics::{collision_outage, ScenarioParams};
use ura_sim::channel_mrc::Receiver;
use ura_sim::config::db_to_linear;
use ura_sim::montecarlo::{estimate_outage, SimConfig};

fn main() {
    let (m, k, lambda) = (25, 4, 0.5);
    let gamma_bar = db_to_linear(30.0);
    let theta_db: Vec<f64> = (0..9).map(|i| -10.0 + 5.0 * i as f64).collect();

    for steiner in [false, true] {
        let scenario = if steiner {
            ScenarioParams::steiner(m, k, lambda).unwrap()
        } else {
            ScenarioParams::dsa(m, k, lambda).unwrap()
        };
        let config = SimConfig {
            scenario,
            gamma_bar,
            theta_grid: theta_db.iter().map(|&t| db_to_linear(t)).collect(),
            trials: 200_000,
            seed: 42,
            receivers: vec![Receiver::CollisionMrc],
            workers: None,
        };
        let curve = &estimate_outage(&config).unwrap()[0];

        println!(
            "{} (lambda={lambda}, mean SNR 30 dB, {} trials)",
            scenario.code().label(),
            config.trials
        );
        println!("{:>9} {:>12} {:>12} {:>12}", "theta_dB", "analytic", "monte-carlo", "ci95");
        for (point, &t_db) in curve.points.iter().zip(&theta_db) {
            let analytic = collision_outage(&scenario, point.theta, gamma_bar).unwrap();
            println!(
                "{:>9} {:>12.4e} {:>12.4e} {:>12.1e}",
                t_db, analytic, point.p_out, point.ci_halfwidth
            );
        }
        println!();
    }
}
