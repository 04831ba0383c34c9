//! Semiclassical work densities approach the classical one as hbar shrinks
//! at fixed temperature. Reduced sample sizes; the full-size run is
//! `chaowork scenario fig4`.
//!
//! `cargo run --release --example classical_limit`

use chaowork::analysis::l1_with_error;
use chaowork::config::RunConfig;
use chaowork::study::Study;

fn main() -> chaowork::Result<()> {
    let study = Study::from_config(&RunConfig::default())?;
    let beta = 2f64.powi(-12);
    let classical = study.classical(beta, 1_000_000)?;
    println!("{:>8} {:>10} {:>10}", "hbar", "L1", "stderr");
    for hbar in [1.0, 0.1, 0.01, 0.001, 0.0001] {
        let sc = study.semiclassical(beta, hbar, 10_000)?;
        let d = l1_with_error(&sc.hist, &classical.hist)?;
        println!("{hbar:>8} {:>10.4} {:>10.4}", d.value, d.stderr);
    }
    Ok(())
}
