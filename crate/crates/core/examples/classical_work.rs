//! Classical work of the sudden quench: W = xi_f V(q0) for Boltzmann
//! initial conditions, its density, and the deterministic free-energy
//! reference from partition-function quadrature.
//!
//! `cargo run --release --example classical_work`

use chaowork::analysis::jarzynski_from_samples;
use chaowork::classical::{classical_free_energy_difference, work_support};
use chaowork::config::RunConfig;
use chaowork::study::Study;

fn main() -> chaowork::Result<()> {
    let study = Study::from_config(&RunConfig::default())?;
    let beta = 2f64.powi(-9);
    let run = study.classical(beta, 1_000_000)?;

    let (lo, hi) = work_support(&study.geom, &study.pot);
    println!("exact work support [{lo:.3}, {hi:.3}]");
    println!("sample mean W = {:.4}", run.sample.mean());

    let hist = &run.hist;
    let peak = hist
        .density
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (j, &p)| if p > best.1 { (j, p) } else { best });
    println!(
        "density peak {:.3} at W = {:.3} (the potential-free part of the billiard)",
        peak.1,
        hist.centers()[peak.0]
    );

    let est = jarzynski_from_samples(&run.sample.values, beta)?;
    let reference = classical_free_energy_difference(&study.geom, &study.pot, beta)?;
    println!(
        "Delta F: samples {:.4} +- {:.4}, quadrature {reference:.6}",
        est.estimate, est.stderr
    );
    Ok(())
}
