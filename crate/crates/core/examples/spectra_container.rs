//! Persisting quantum spectra: write the binary container, read it back,
//! and recompute a work density without diagonalising again.
//!
//! `cargo run --release --example spectra_container`

use chaowork::config::RunConfig;
use chaowork::quantum::{read_spectra, write_spectra, GridDomain, GridSpec, QuenchSpectra};
use chaowork::study::Study;

fn main() -> chaowork::Result<()> {
    let study = Study::from_config(&RunConfig::default())?;
    let grid = GridSpec::new(GridDomain::Stadium(study.geom), 0.06)?;
    let spectra = QuenchSpectra::compute(&grid, &study.pot, 1.0, 120, 300)?;

    let mut bytes = Vec::new();
    write_spectra(&spectra, &mut bytes)?;
    println!(
        "{} bytes: {} initial levels, {} final levels, {} transition entries",
        bytes.len(),
        spectra.e0.len(),
        spectra.ef.len(),
        spectra.transition.len()
    );

    let back = read_spectra(bytes.as_slice())?;
    assert_eq!(back, spectra);
    let beta = 0.2;
    let a = study.quantum(&spectra, beta)?;
    let b = study.quantum(&back, beta)?;
    println!(
        "round trip exact: {}; mean W at beta = {beta}: {:.6}",
        a.density == b.density,
        b.mean()
    );

    let mut levels = Vec::new();
    back.write_levels_csv(&mut levels).expect("in-memory write");
    let text = String::from_utf8(levels).expect("utf-8");
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
