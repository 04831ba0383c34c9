//! Run configuration: a flat TOML file, then `CHAOWORK_<KEY>` environment
//! overrides, then command-line flags. An empty file reproduces the default
//! system (quarter stadium `r = l = 1`, four Gaussians of width 0.1, quench
//! from `xi = 0` to `xi = 85`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::characteristic::EstimatorOptions;
use crate::error::{Error, Result};
use crate::geometry::{BilliardGeometry, Vec2};
use crate::potential::{Gaussian, GaussianForm, QuenchPotential};
use crate::trajectory::DEFAULT_MAX_BOUNCES;

pub const ENV_PREFIX: &str = "CHAOWORK_";
/// `CHAOWORK_*` variables that are not configuration keys: the config file
/// path and the log filter.
const RESERVED_ENV: [&str; 2] = ["config", "log"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Quarter-disk radius `r`.
    pub radius: f64,
    /// Length `l` of the straight section.
    pub straight_length: f64,
    pub sigma: f64,
    pub centers: Vec<[f64; 2]>,
    pub signs: Vec<f64>,
    pub xi_0: f64,
    pub xi_f: f64,
    pub gaussian_form: GaussianForm,
    /// Inverse temperatures for the `semiclassical`, `classical`, `quantum`
    /// and `jarzynski` commands.
    pub betas: Vec<f64>,
    pub hbars: Vec<f64>,
    pub semiclassical_samples: usize,
    pub classical_samples: usize,
    /// Classical draws used to size the work window.
    pub pilot_samples: usize,
    /// Fractional padding of the pilot work range on each side.
    pub window_padding: f64,
    /// The u-grid has `half_len + 1` points; the W-grid `2 half_len` bins.
    pub half_len: usize,
    /// Broadening `eps` in units of the W-bin width.
    pub broadening_bins: f64,
    pub max_bounces: u64,
    pub failure_tolerance: f64,
    /// Finite-difference spacing; planned from Weyl's law when absent.
    pub quantum_grid_spacing: Option<f64>,
    /// Retained initial states; planned when absent.
    pub quantum_states: Option<usize>,
    /// Largest grid the dense eigensolver is allowed to take on.
    pub quantum_max_sites: usize,
    pub seed: u64,
    /// Worker threads; 0 means one per logical CPU.
    pub workers: usize,
    pub out_dir: String,
    pub scenario: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pot = QuenchPotential::default();
        Self {
            radius: 1.0,
            straight_length: 1.0,
            sigma: pot.sigma(),
            centers: pot.gaussians().iter().map(|g| [g.center.x, g.center.y]).collect(),
            signs: pot.gaussians().iter().map(|g| g.sign).collect(),
            xi_0: pot.xi_0(),
            xi_f: pot.xi_f(),
            gaussian_form: GaussianForm::Isotropic,
            betas: vec![2f64.powi(-12)],
            hbars: vec![1.0],
            semiclassical_samples: 90_000,
            classical_samples: 4_000_000,
            pilot_samples: 100_000,
            window_padding: 0.2,
            half_len: 512,
            broadening_bins: 2.0,
            max_bounces: DEFAULT_MAX_BOUNCES,
            failure_tolerance: 1e-3,
            quantum_grid_spacing: None,
            quantum_states: None,
            quantum_max_sites: 4000,
            seed: 1,
            workers: 0,
            out_dir: "chaowork-out".into(),
            scenario: None,
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn parse_error(text: &str, err: toml::de::Error) -> Error {
    let (line, column) = err.span().map_or((0, 0), |s| line_column(text, s.start));
    Error::Parse {
        line,
        column,
        message: err.message().trim().to_string(),
    }
}

/// Parses and range-checks a configuration file.
pub fn validate_config(raw: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(raw).map_err(|e| parse_error(raw, e))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a configuration file and applies `CHAOWORK_*` overrides from
/// `env` (key = lower-cased suffix, value = a TOML value or a bare string).
pub fn load_config<I>(raw: &str, env: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = (String, String)>,
{
    let overrides: BTreeMap<String, String> = env
        .into_iter()
        .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|s| (s.to_ascii_lowercase(), v)))
        .filter(|(k, _)| !RESERVED_ENV.contains(&k.as_str()))
        .collect();
    if overrides.is_empty() {
        return validate_config(raw);
    }
    // Surface file errors with their own positions first.
    let _: RunConfig = toml::from_str(raw).map_err(|e| parse_error(raw, e))?;
    let mut table: toml::Table = raw.parse().map_err(|e| parse_error(raw, e))?;
    for (key, text) in overrides {
        let value = format!("v = {text}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or(toml::Value::String(text.clone()));
        table.insert(key, value);
    }
    let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Parse {
        line: 0,
        column: 0,
        message: format!("environment override: {}", e.message().trim()),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::range(field, format!("{x} is not positive and finite")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        positive("radius", self.radius)?;
        positive("straight_length", self.straight_length)?;
        positive("sigma", self.sigma)?;
        positive("window_padding", self.window_padding)?;
        positive("broadening_bins", self.broadening_bins)?;
        if self.centers.is_empty() {
            return Err(Error::range("centers", "need at least one Gaussian"));
        }
        if self.centers.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::range("centers", "coordinates must be finite"));
        }
        if self.signs.len() != self.centers.len() {
            return Err(Error::range(
                "signs",
                format!("{} signs for {} centers", self.signs.len(), self.centers.len()),
            ));
        }
        if !self.xi_f.is_finite() {
            return Err(Error::range("xi_f", "must be finite"));
        }
        if self.xi_0 != 0.0 {
            return Err(Error::range(
                "xi_0",
                "only quenches from the free billiard (xi_0 = 0) are supported",
            ));
        }
        if self.betas.is_empty() {
            return Err(Error::range("betas", "need at least one inverse temperature"));
        }
        for b in &self.betas {
            positive("betas", *b)?;
        }
        if self.hbars.is_empty() {
            return Err(Error::range("hbars", "need at least one value"));
        }
        for h in &self.hbars {
            positive("hbars", *h)?;
        }
        for (field, n) in [
            ("semiclassical_samples", self.semiclassical_samples),
            ("classical_samples", self.classical_samples),
            ("pilot_samples", self.pilot_samples),
            ("quantum_max_sites", self.quantum_max_sites),
        ] {
            if n == 0 {
                return Err(Error::range(field, "must be at least 1"));
            }
        }
        if self.half_len < 2 {
            return Err(Error::range("half_len", "must be at least 2"));
        }
        if self.max_bounces == 0 {
            return Err(Error::range("max_bounces", "must be at least 1"));
        }
        if !(self.failure_tolerance >= 0.0 && self.failure_tolerance < 1.0) {
            return Err(Error::range("failure_tolerance", "must lie in [0, 1)"));
        }
        if let Some(h) = self.quantum_grid_spacing {
            positive("quantum_grid_spacing", h)?;
        }
        if self.quantum_states == Some(0) {
            return Err(Error::range("quantum_states", "must be at least 1"));
        }
        if let Some(s) = &self.scenario {
            if !["fig2", "fig3", "fig4"].contains(&s.as_str()) {
                return Err(Error::range("scenario", format!("unknown scenario `{s}`")));
            }
        }
        self.geometry()?;
        self.potential()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<BilliardGeometry> {
        BilliardGeometry::new(self.radius, self.straight_length)
    }

    pub fn potential(&self) -> Result<QuenchPotential> {
        let gaussians = self
            .centers
            .iter()
            .zip(&self.signs)
            .map(|(c, s)| Gaussian {
                center: Vec2::new(c[0], c[1]),
                sign: *s,
            })
            .collect();
        QuenchPotential::new(gaussians, self.sigma, self.xi_0, self.xi_f, self.gaussian_form)
    }

    pub fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            max_bounces: self.max_bounces,
            failure_tolerance: self.failure_tolerance,
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring settings that cannot
    /// change results (worker count, output directory).
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.workers = 0;
        canon.out_dir = String::new();
        let json = serde_json::to_string(&canon).expect("config serialises");
        hex_digest(json.as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = validate_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.potential().unwrap(), QuenchPotential::default());
        assert_eq!(cfg.geometry().unwrap(), BilliardGeometry::default());
    }

    #[test]
    fn negative_beta_is_a_range_error() {
        match validate_config("betas = [-1.0]") {
            Err(Error::Range { field, .. }) => assert_eq!(field, "betas"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error_with_position() {
        match validate_config("seed = 3\nsigma_y = 0.2\n") {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (2, 1));
                assert!(message.contains("sigma_y"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_have_positions() {
        match validate_config("seed = 3\nhbars = [1.0,\n") {
            Err(Error::Parse { line, .. }) => assert!(line >= 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn env_overrides_file() {
        let env = vec![
            ("CHAOWORK_SEED".to_string(), "42".to_string()),
            ("CHAOWORK_OUT_DIR".to_string(), "results".to_string()),
            ("OTHER".to_string(), "x".to_string()),
        ];
        let cfg = load_config("seed = 3", env).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.out_dir, "results");
        let bad = vec![("CHAOWORK_BOGUS".to_string(), "1".to_string())];
        assert!(matches!(load_config("", bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn hash_ignores_workers() {
        let a = RunConfig::default();
        let b = RunConfig {
            workers: 7,
            out_dir: "x".into(),
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig { seed: 2, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn nonzero_initial_strength_is_rejected() {
        assert!(matches!(validate_config("xi_0 = 1.0"), Err(Error::Range { .. })));
    }
}
