//! Exact quantum reference on a finite-difference grid: full spectra of
//! both Hamiltonians, two-point-measurement transition probabilities, the
//! work density and the quantum Jarzynski identity.
//!
//! `cargo run --release --example quantum_oracle`

use chaowork::config::RunConfig;
use chaowork::quantum::{quantum_jarzynski, quantum_mean_work, GridDomain, GridSpec, QuenchSpectra};
use chaowork::study::Study;

fn main() -> chaowork::Result<()> {
    let study = Study::from_config(&RunConfig::default())?;
    let hbar = 1.0;
    let grid = GridSpec::new(GridDomain::Stadium(study.geom), 0.05)?;
    let n = grid.len();
    let spectra = QuenchSpectra::compute(&grid, &study.pot, hbar, n, n)?;
    println!("{n} lattice sites, full spectrum retained");
    println!(
        "lowest levels: E0 = {:.4}, {:.4}, {:.4}; Ef = {:.4}, {:.4}, {:.4}",
        spectra.e0[0], spectra.e0[1], spectra.e0[2], spectra.ef[0], spectra.ef[1], spectra.ef[2]
    );
    let row0: f64 = spectra.row(0).iter().sum();
    println!("sum_n P(n|0) = {row0:.12}");

    for beta in [0.5, 0.1, 0.02] {
        let jar = quantum_jarzynski(&spectra, beta)?;
        let hist = study.quantum(&spectra, beta)?;
        println!(
            "beta {beta:>5}: <W> = {:.4}, <exp(-beta W)> = {:.10}, Zf/Z0 = {:.10}, mass {:.10}",
            quantum_mean_work(&spectra, beta)?,
            jar.lhs,
            jar.rhs,
            hist.total_mass
        );
    }
    Ok(())
}
