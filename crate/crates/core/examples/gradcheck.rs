//! Finite-difference gradient check on random tiny networks, followed by
//! the same suite with a deliberately mis-scaled backward pass.
//!
//!     cargo run --release --example gradcheck -- [CASES]

use saldl::verify::{gradcheck_suite, ScaledGradient};

fn main() -> saldl::Result<()> {
    let cases = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let good = gradcheck_suite(cases, 0, &|p| p)?;
    for d in &good.details {
        println!("  {d}");
    }
    println!("{good}");
    let faulty = gradcheck_suite(3, 0, &|p| Box::new(ScaledGradient { inner: p, factor: 1.001 }))?;
    println!("with gradients scaled by 1.001: {faulty}");
    Ok(())
}
