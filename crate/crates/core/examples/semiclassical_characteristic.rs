//! The semiclassical characteristic function: a Boltzmann average of
//! dephasing phases exp(i Delta S(x0, u hbar) / hbar), inverted to a work
//! density.
//!
//! `cargo run --release --example semiclassical_characteristic`

use chaowork::config::RunConfig;
use chaowork::study::Study;

fn main() -> chaowork::Result<()> {
    let study = Study::from_config(&RunConfig::default())?;
    let beta = 2f64.powi(-10);
    let run = study.semiclassical(beta, 1.0, 5_000)?;
    run.g.check_invariants()?;

    println!(
        "u grid: du = {:.5}, {} points up to u = {:.3}",
        study.grid.du,
        study.grid.len(),
        study.grid.u_max()
    );
    println!("{:>8} {:>10} {:>10} {:>9}", "u", "Re G", "Im G", "stderr");
    let se = run.g.stderr();
    for k in (0..study.grid.len()).step_by(64) {
        let g = run.g.g_values[k];
        println!("{:>8.3} {:>10.5} {:>10.5} {:>9.5}", study.grid.u(k), g.re, g.im, se[k]);
    }

    let hist = &run.hist;
    println!(
        "P(W): {} bins of {:.4}, mass {:.12}, mean {:.4}, broadening {:.4}",
        hist.len(),
        hist.bin_width,
        hist.total_mass,
        hist.mean(),
        hist.broadening
    );
    Ok(())
}
