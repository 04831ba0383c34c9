//! Desk-scale comparison of the exact quantum work density with the
//! semiclassical one: hbar = 0.5, a finite-difference basis planned from
//! Weyl's law, and three temperatures.
//!
//! `cargo run --release --example quantum_vs_semiclassical`

use chaowork::analysis::l1_with_error;
use chaowork::config::RunConfig;
use chaowork::quantum::{plan_basis, GridDomain};
use chaowork::study::{quantum_basis, quantum_spectra, Study};

fn main() -> chaowork::Result<()> {
    let hbar = 0.5;
    let betas = [2f64.powi(-3), 2f64.powi(-4), 2f64.powi(-5)];
    let cfg = RunConfig {
        hbars: vec![hbar],
        betas: betas.to_vec(),
        ..RunConfig::default()
    };
    let study = Study::from_config(&cfg)?;

    // At least 300 converged final states, sized for the hottest temperature.
    let plan = plan_basis(&GridDomain::Stadium(study.geom), hbar, betas[2], 300, 0.5)?;
    let basis = quantum_basis(&study.geom, hbar, betas[2], Some(plan.h), None, usize::MAX)?;
    println!(
        "grid h = {:.4}, {} sites, {} kept initial states, {} converged final states",
        basis.grid.h,
        basis.grid.len(),
        basis.n_keep,
        basis.n_final
    );
    let spectra = quantum_spectra(&basis, &study.pot, hbar)?;

    println!("{:>10} {:>14} {:>10} {:>10}", "beta", "top decile", "L1", "stderr");
    for beta in betas {
        let quantum = study.quantum(&spectra, beta)?;
        let sc = study.semiclassical(beta, hbar, 20_000)?;
        let d = l1_with_error(&quantum, &sc.hist)?;
        println!(
            "{beta:>10.6} {:>14.3e} {:>10.4} {:>10.4}",
            spectra.top_decile_weight(beta)?,
            d.value,
            d.stderr
        );
    }
    Ok(())
}
