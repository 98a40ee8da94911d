//! Construct an S(2,K,M) access code, verify its design invariants, and
//! print the pattern table.
//!
//! ```text
//! cargo run --example build_access_code
//! ```

use ura_sim::access_codes::{build_steiner_code, verify_steiner};

fn main() {
    let code = build_steiner_code(25, 4).expect("S(2,4,25) is admissible");
    println!(
        "S(2,{},{}): {} patterns, each subchannel shared by at most D={} other patterns",
        code.k(),
        code.m(),
        code.capacity(),
        code.overlap_bound()
    );

    let report = verify_steiner(&code);
    println!("verification: {}", if report.is_valid() { "ok" } else { "INVALID" });

    println!("\npattern  subchannels");
    for (i, pattern) in code.patterns().iter().enumerate() {
        println!("{i:>7}  {pattern}");
    }
}
