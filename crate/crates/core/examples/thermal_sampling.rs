//! Boltzmann sampling of initial conditions: uniform positions in the
//! billiard and Gaussian momenta, reproducible from a seed.
//!
//! `cargo run --release --example thermal_sampling`

use chaowork::geometry::BilliardGeometry;
use chaowork::sampler::sample_ensemble;

fn main() -> chaowork::Result<()> {
    let geom = BilliardGeometry::default();
    let beta = 2f64.powi(-12);
    let ensemble = sample_ensemble(&geom, beta, 100_000, 42)?;

    let n = ensemble.len() as f64;
    let mean_energy = ensemble.points.iter().map(|x| x.energy()).sum::<f64>() / n;
    let mean_x = ensemble.points.iter().map(|x| x.q.x).sum::<f64>() / n;
    let mean_y = ensemble.points.iter().map(|x| x.q.y).sum::<f64>() / n;
    let mean_speed = ensemble.points.iter().map(|x| 2.0 * x.p.norm()).sum::<f64>() / n;

    // Two quadratic momentum degrees of freedom: <H0> = 1 / beta.
    println!("beta = 2^-12, {} points", ensemble.len());
    println!("<H0>       = {mean_energy:.1} (expected {:.1})", 1.0 / beta);
    println!("<q>        = ({mean_x:.4}, {mean_y:.4})");
    println!("<speed>    = {mean_speed:.1}");

    let mut csv = Vec::new();
    ensemble.write_csv(&mut csv).expect("in-memory write");
    let text = String::from_utf8(csv).expect("utf-8");
    println!("first CSV rows:");
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
