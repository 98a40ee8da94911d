//! Cross-check the closed-form conditionals against brute-force enumeration
//! of every pattern assignment, for instances small enough to enumerate.
//!
//! ```text
//! cargo run --example oracle_spot_check
//! ```

use ura_sim::access_codes::build_steiner_code;
use ura_sim::analytics::{p_det_diversity_given_n, p_dsa_diversity_given_n, ScenarioParams};
use ura_sim::oracle::{enumerate_dsa_diversity, enumerate_steiner_diversity};

fn main() {
    let mut worst: f64 = 0.0;

    println!("random selection, M=6 K=3: p(K' | N)");
    for n in 1..=4u64 {
        let enumerated = enumerate_dsa_diversity(6, 3, n).unwrap();
        print!("  N={n}:");
        for (kp, &e) in enumerated.iter().enumerate() {
            let a = p_dsa_diversity_given_n(6, 3, kp as u64, n).unwrap();
            worst = worst.max((e - a).abs());
            print!("  {e:.6}");
        }
        println!();
    }

    println!("\ndeterministic S(2,3,7): p(K' | N)");
    let code = build_steiner_code(7, 3).unwrap();
    let params = ScenarioParams::steiner(7, 3, 0.0).unwrap();
    for n in 1..=6u64 {
        let enumerated = enumerate_steiner_diversity(&code, n).unwrap();
        print!("  N={n}:");
        for (kp, &e) in enumerated.iter().enumerate() {
            let a = p_det_diversity_given_n(&params, kp as u64, n).unwrap();
            worst = worst.max((e - a).abs());
            print!("  {e:.6}");
        }
        println!();
    }

    println!("\nmax |enumeration - closed form| = {worst:e}");
    assert!(worst <= 1e-12);
}
