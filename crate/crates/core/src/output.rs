//! Result files. Every CSV starts with a `# manifest <hash>` line and every
//! JSON object carries a `manifest_hash` field; `manifest.json` records the
//! configuration, its hash, the derived seeds and the crate version.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{hex_digest, RunConfig};
use crate::error::{Error, Result};
use crate::spectra::WorkHistogram;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub manifest_hash: String,
    pub config_hash: String,
    pub seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub config: RunConfig,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

/// An output directory being filled by one command.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    manifest: Manifest,
}

impl Output {
    pub fn create(dir: impl AsRef<Path>, cfg: &RunConfig, command: &str) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let version = env!("CARGO_PKG_VERSION").to_string();
        let config_hash = cfg.hash();
        let manifest_hash = hex_digest(format!("{version}\n{command}\n{config_hash}").as_bytes());
        Ok(Self {
            dir,
            manifest: Manifest {
                version,
                command: command.into(),
                manifest_hash,
                config_hash,
                seed: cfg.seed,
                seeds: BTreeMap::new(),
                config: cfg.clone(),
                files: Vec::new(),
                warnings: Vec::new(),
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest_hash(&self) -> &str {
        &self.manifest.manifest_hash
    }

    pub fn record_seed(&mut self, name: impl Into<String>, seed: u64) {
        self.manifest.seeds.insert(name.into(), seed);
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{message}");
        self.manifest.warnings.push(message);
    }

    pub fn warnings(&self) -> &[String] {
        &self.manifest.warnings
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>> {
        let file = File::create(self.dir.join(name))?;
        self.manifest.files.push(name.into());
        Ok(BufWriter::new(file))
    }

    /// Writes a CSV whose body is produced by `body`, after the manifest line.
    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let hash = self.manifest.manifest_hash.clone();
        let mut w = self.open(name)?;
        writeln!(w, "# manifest {hash}")?;
        body(&mut w)?;
        w.flush()?;
        Ok(self.dir.join(name))
    }

    /// Histogram CSV with an extra `# broadening <eps>` line, readable by
    /// [`read_histogram_csv`].
    pub fn histogram(&mut self, name: &str, hist: &WorkHistogram) -> Result<PathBuf> {
        self.csv(name, |w| {
            writeln!(w, "# broadening {:e}", hist.broadening)?;
            hist.write_csv(w)
        })
    }

    /// Writes a binary artefact verbatim (binary formats carry their own
    /// headers, so no manifest line is added).
    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<PathBuf> {
        let mut w = self.open(name)?;
        w.write_all(data)?;
        w.flush()?;
        Ok(self.dir.join(name))
    }

    /// Writes `value` (a JSON object) with a `manifest_hash` field added.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut v = serde_json::to_value(value)?;
        match v.as_object_mut() {
            Some(obj) => {
                obj.insert("manifest_hash".into(), self.manifest.manifest_hash.clone().into());
            }
            None => {
                v = serde_json::json!({ "manifest_hash": self.manifest.manifest_hash, "data": v });
            }
        }
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, &v)?;
        writeln!(w)?;
        w.flush()?;
        Ok(self.dir.join(name))
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(self) -> Result<Manifest> {
        let file = File::create(self.dir.join(MANIFEST_FILE))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &self.manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(self.manifest)
    }
}

/// Reads a histogram written by [`Output::histogram`] (or any `w,density,error`
/// CSV with evenly spaced bin centres; broadening defaults to zero).
pub fn read_histogram_csv(path: impl AsRef<Path>) -> Result<WorkHistogram> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut broadening = 0.0;
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut header_seen = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let bad = |message: String| Error::Parse {
            line: line_no,
            column: 1,
            message: format!("{}: {message}", path.display()),
        };
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            if let Some(eps) = rest.trim().strip_prefix("broadening") {
                broadening = eps.trim().parse().map_err(|e| bad(format!("broadening: {e}")))?;
            }
            continue;
        }
        if !header_seen {
            if t != "w,density,error" {
                return Err(bad(format!("expected header `w,density,error`, found `{t}`")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = t.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 columns, found {}", fields.len())));
        }
        let mut row = [0.0; 3];
        for (slot, f) in row.iter_mut().zip(&fields) {
            *slot = f.trim().parse().map_err(|e| bad(format!("`{f}`: {e}")))?;
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::Parse {
            line: 0,
            column: 0,
            message: format!("{}: need at least two bins", path.display()),
        });
    }
    let bw = (rows[rows.len() - 1][0] - rows[0][0]) / (rows.len() - 1) as f64;
    let density: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let w_min = rows[0][0] - 0.5 * bw;
    Ok(WorkHistogram {
        w_min,
        w_max: w_min + bw * rows.len() as f64,
        bin_width: bw,
        total_mass: density.iter().sum::<f64>() * bw,
        error: rows.iter().map(|r| r[2]).collect(),
        density,
        broadening,
        imag_residue: 0.0,
        replicates: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::UGrid;
    use crate::spectra::histogram_from_spikes;

    #[test]
    fn files_carry_the_manifest_hash() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::default();
        let mut out = Output::create(dir.path(), &cfg, "test").unwrap();
        let hash = out.manifest_hash().to_string();
        let grid = UGrid::from_window(-10.0, 10.0, 16).unwrap();
        let hist = histogram_from_spikes(&grid, [(1.0, 1.0)], 2.0 * grid.w_step()).unwrap();
        let path = out.histogram("h.csv", &hist).unwrap();
        out.json("r.json", &serde_json::json!({ "x": 1 })).unwrap();
        let m = out.finish().unwrap();
        assert_eq!(m.files, vec!["h.csv", "r.json"]);

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), format!("# manifest {hash}"));
        let back = read_histogram_csv(&path).unwrap();
        back.same_grid(&hist).unwrap();
        for (a, b) in back.density.iter().zip(&hist.density) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-300) + 1e-300);
        }
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        assert_eq!(json["manifest_hash"], hash.as_str());
    }
}
