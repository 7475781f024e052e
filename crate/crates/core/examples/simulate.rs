//! Runs one Monte Carlo cell and prints its metric record.
//!
//! cargo run --release -p civqr-core --example simulate -- <design> <u> <n> <lambda> <reps> [starts] [seed]

use std::time::Instant;

use civqr_core::simlab::{run_monte_carlo, SimDesign};
use civqr_core::{FitConfig, OptimConfig, QuantileLevel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let get = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let u = QuantileLevel::new(get(1, "0.5").parse()?)?;
    let design = SimDesign {
        design_id: get(0, "3").parse()?,
        u,
        n: get(2, "500").parse()?,
        lambda: get(3, "0.07").parse()?,
        seed: get(6, "1").parse()?,
    };
    let reps: usize = get(4, "20").parse()?;
    let mut optim = OptimConfig::cube(3, 0.0, 1.0, 0);
    optim.n_starts = get(5, "100").parse()?;
    let started = Instant::now();
    let metrics = run_monte_carlo(&design, reps, &FitConfig::new(u, optim))?;
    println!("{:?}", metrics.record(&design));
    println!("{metrics:?}");
    println!("elapsed {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}
