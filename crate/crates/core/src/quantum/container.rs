//! Binary container for [`QuenchSpectra`], so temperature sweeps can reuse
//! a diagonalisation.
//!
//! Layout (all little-endian):
//!
//! | bytes | content                                              |
//! |-------|------------------------------------------------------|
//! | 8     | magic `CHWSPEC\0`                                    |
//! | 4     | `u32` version (1)                                    |
//! | 4     | `u32` domain: 0 stadium, 1 rectangle                 |
//! | 16    | two `f64`: (radius, straight) or (width, height)     |
//! | 16    | `f64` grid spacing `h`, `f64` `hbar`                 |
//! | 24    | `u64` sites, retained initial levels, final levels   |
//! | ...   | `f64` payload: `e0`, `ef`, then `P(n|m)` row-major   |

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::BilliardGeometry;

use super::grid::GridDomain;
use super::QuenchSpectra;

pub const CONTAINER_MAGIC: [u8; 8] = *b"CHWSPEC\0";
pub const CONTAINER_VERSION: u32 = 1;

pub fn write_spectra<W: Write>(spectra: &QuenchSpectra, mut out: W) -> Result<()> {
    out.write_all(&CONTAINER_MAGIC)?;
    out.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    let (code, a, b) = match spectra.domain {
        GridDomain::Stadium(g) => (0u32, g.radius(), g.straight()),
        GridDomain::Rectangle { width, height } => (1u32, width, height),
    };
    out.write_all(&code.to_le_bytes())?;
    for x in [a, b, spectra.grid_h, spectra.hbar] {
        out.write_all(&x.to_le_bytes())?;
    }
    for n in [spectra.n_sites, spectra.n_states, spectra.ef.len()] {
        out.write_all(&(n as u64).to_le_bytes())?;
    }
    for x in spectra.e0.iter().chain(&spectra.ef).chain(&spectra.transition) {
        out.write_all(&x.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Container(format!("truncated container: {e}")))?;
    Ok(buf)
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(input)?))
}

fn read_u64<R: Read>(input: &mut R) -> Result<usize> {
    usize::try_from(u64::from_le_bytes(read_array(input)?))
        .map_err(|_| Error::Container("count does not fit in memory".into()))
}

pub fn read_spectra<R: Read>(mut input: R) -> Result<QuenchSpectra> {
    let magic: [u8; 8] = read_array(&mut input)?;
    if magic != CONTAINER_MAGIC {
        return Err(Error::Container("bad magic; not a spectra container".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != CONTAINER_VERSION {
        return Err(Error::Container(format!("unsupported container version {version}")));
    }
    let code = u32::from_le_bytes(read_array(&mut input)?);
    let (a, b) = (read_f64(&mut input)?, read_f64(&mut input)?);
    let domain = match code {
        0 => GridDomain::Stadium(
            BilliardGeometry::new(a, b).map_err(|e| Error::Container(format!("bad geometry: {e}")))?,
        ),
        1 => GridDomain::Rectangle { width: a, height: b },
        other => return Err(Error::Container(format!("unknown domain code {other}"))),
    };
    let grid_h = read_f64(&mut input)?;
    let hbar = read_f64(&mut input)?;
    let n_sites = read_u64(&mut input)?;
    let n_states = read_u64(&mut input)?;
    let n_final = read_u64(&mut input)?;
    if n_states > n_final || n_final > n_sites {
        return Err(Error::Container(format!(
            "inconsistent counts: {n_states} initial, {n_final} final, {n_sites} sites"
        )));
    }
    let mut take = |n: usize| -> Result<Vec<f64>> { (0..n).map(|_| read_f64(&mut input)).collect() };
    let e0 = take(n_states)?;
    let ef = take(n_final)?;
    let transition = take(n_states * n_final)?;
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Container("trailing bytes after payload".into()));
    }
    let spectra = QuenchSpectra {
        domain,
        e0,
        ef,
        transition,
        n_states,
        hbar,
        grid_h,
        n_sites,
    };
    spectra
        .check_invariants()
        .map_err(|e| Error::Container(format!("payload fails invariants: {e}")))?;
    Ok(spectra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::QuenchPotential;
    use crate::quantum::GridSpec;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = GridSpec::new(GridDomain::Stadium(BilliardGeometry::default()), 0.1).unwrap();
        let s = QuenchSpectra::compute(&grid, &QuenchPotential::default(), 1.0, 10, 30).unwrap();
        let mut buf = Vec::new();
        write_spectra(&s, &mut buf).unwrap();
        assert_eq!(buf.len(), 72 + 8 * (10 + 30 + 300));
        assert_eq!(read_spectra(buf.as_slice()).unwrap(), s);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_spectra(bad.as_slice()), Err(Error::Container(_))));
        assert!(read_spectra(&buf[..buf.len() - 3]).is_err());
        buf.push(0);
        assert!(read_spectra(buf.as_slice()).is_err());
    }
}
