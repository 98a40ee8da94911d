//! Distribution of the number of interferers L' sharing one of the user's
//! subchannels. Under the deterministic code the support is capped at
//! D = (M-K)/(K-1); under random selection it is unbounded.
//!
//! ```text
//! cargo run --example interferer_profile
//! ```

use ura_sim::analytics::{interferer_distribution, ScenarioParams};

fn main() {
    let (m, k, lambda) = (25, 4, 5.0);
    for steiner in [false, true] {
        let scenario = if steiner {
            ScenarioParams::steiner(m, k, lambda).unwrap()
        } else {
            ScenarioParams::dsa(m, k, lambda).unwrap()
        };
        let dist = interferer_distribution(&scenario).unwrap();
        println!(
            "{} (M={m}, K={k}, lambda={lambda}), support 0..={}:",
            scenario.code().label(),
            dist.l_max()
        );
        let mean: f64 = dist
            .probabilities()
            .iter()
            .enumerate()
            .map(|(l, p)| l as f64 * p)
            .sum();
        for (l, p) in dist.probabilities().iter().enumerate() {
            if *p < 1e-9 {
                continue;
            }
            let bar = "#".repeat((p * 60.0).round() as usize);
            println!("  L'={l:<3} {p:>10.3e}  {bar}");
        }
        println!("  mean interferers per subchannel: {mean:.4}\n");
    }
}
