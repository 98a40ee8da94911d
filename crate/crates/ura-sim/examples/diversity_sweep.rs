//! Surviving-diversity distribution p(K') versus arrival rate for random
//! subchannel selection and for the deterministic S(2,4,25) code.
//!
//! K' is the number of a user's K repetitions that land on subchannels no
//! other active user touched; p(K'=0) is the collision-model error floor.
//!
//! ```text
//! cargo run --example diversity_sweep
//! ```

use ura_sim::analytics::{diversity_distribution, ScenarioParams};

fn main() {
    let (m, k) = (25, 4);
    println!("M={m} K={k}, Poisson arrivals with rate lambda\n");
    println!(
        "{:<8} {:<8} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "scheme", "lambda", "p(K'=0)", "p(K'=1)", "p(K'=2)", "p(K'=3)", "p(K'=4)"
    );
    for &lambda in &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        for steiner in [false, true] {
            let scenario = if steiner {
                ScenarioParams::steiner(m, k, lambda).unwrap()
            } else {
                ScenarioParams::dsa(m, k, lambda).unwrap()
            };
            let dist = diversity_distribution(&scenario).unwrap();
            print!("{:<8} {:<8}", scenario.code().label(), lambda);
            for k_prime in 0..=k as usize {
                print!(" {:>10.3e}", dist.probability(k_prime));
            }
            println!();
        }
    }
}
