//! Free-energy difference of the quench across temperatures, from the
//! classical work samples, from the semiclassical work density, and from the
//! deterministic partition-function quadrature.
//!
//! `cargo run --release --example jarzynski_sweep`

use chaowork::analysis::{jarzynski_from_histogram, jarzynski_from_samples};
use chaowork::classical::classical_free_energy_difference;
use chaowork::config::RunConfig;
use chaowork::study::Study;

fn main() -> chaowork::Result<()> {
    let study = Study::from_config(&RunConfig::default())?;
    let hbar = 1.0;
    println!(
        "{:>8} {:>12} {:>22} {:>22}",
        "1/beta", "quadrature", "classical (stderr)", "semiclassical (stderr)"
    );
    for k in [7, 9, 11, 13] {
        let beta = 2f64.powi(-k);
        let reference = classical_free_energy_difference(&study.geom, &study.pot, beta)?;
        let classical = jarzynski_from_samples(&study.classical(beta, 200_000)?.sample.values, beta)?;
        let sc = jarzynski_from_histogram(&study.semiclassical(beta, hbar, 20_000)?.hist, beta)?;
        println!(
            "{:>8} {reference:>12.5} {:>12.5} ({:.5}) {:>12.5} ({:.5})",
            1u64 << k,
            classical.estimate,
            classical.stderr,
            sc.estimate,
            sc.stderr
        );
    }
    Ok(())
}
