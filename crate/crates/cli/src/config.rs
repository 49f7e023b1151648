//! Experiment configuration: one JSON file per run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    CertifySweep,
    EulerStripRun,
    EulerDiscCertify,
    EulerDomainCertify,
    VpBuildAndCertify,
    Corollary1Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CertifySweep => "certify_sweep",
            Experiment::EulerStripRun => "euler_strip_run",
            Experiment::EulerDiscCertify => "euler_disc_certify",
            Experiment::EulerDomainCertify => "euler_domain_certify",
            Experiment::VpBuildAndCertify => "vp_build_and_certify",
            Experiment::Corollary1Sweep => "corollary1_sweep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Disc { radius: f64 },
    /// `R²` cut off at `cutoff`.
    Plane { cutoff: f64 },
    Rectangle { l1: f64, l2: f64 },
    /// `]0,l1[ × ]0,∞[` cut off at height `cutoff`.
    Strip { l1: f64, cutoff: f64 },
}

impl DomainConfig {
    pub fn is_disc_like(&self) -> bool {
        matches!(self, DomainConfig::Disc { .. } | DomainConfig::Plane { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaConfig {
    RadiusSquared,
    CoordX2,
    PowerLaw { m: f64 },
}

/// Grid counts: `(n1, n2)` cells on rectangles, `(rings, sectors)` on discs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub n1: usize,
    pub n2: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { n1: 32, n2: 32 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative slack below which a certificate counts as violated.
    pub status_rel: f64,
    /// Agreement required between a certificate and the layer-cake oracle.
    pub oracle_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { status_rel: rlab_core::certify::STATUS_TOL, oracle_rel: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EulerParams {
    /// Perturbation amplitude relative to `‖q‖∞`.
    pub amplitude: f64,
    pub t_final: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub cfl_max: f64,
}

impl Default for EulerParams {
    fn default() -> Self {
        Self { amplitude: 0.05, t_final: 1.0, dt: 2e-3, sample_every: 50, cfl_max: 0.8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VpParams {
    pub k: f64,
    pub kappa: f64,
    pub e0: f64,
    pub nr: usize,
    pub nv: usize,
    pub table_points: usize,
    /// Perturbation strength relative to `‖f₀‖∞`.
    pub amplitude: f64,
    /// Number of leading trials that also get the `𝒥`-functional certificate.
    pub z2_trials: usize,
    pub write_f0_csv: bool,
}

impl Default for VpParams {
    fn default() -> Self {
        let r = rlab_core::vlasov::VpResolution::default();
        Self {
            k: 1.5,
            kappa: 1.0,
            e0: -1.0,
            nr: r.nr,
            nv: r.nv,
            table_points: r.table_points,
            amplitude: 0.01,
            z2_trials: 0,
            write_f0_csv: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub experiment: Experiment,
    #[serde(default = "default_domain")]
    pub domain: DomainConfig,
    #[serde(default)]
    pub sigma: Option<SigmaConfig>,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub euler: EulerParams,
    #[serde(default)]
    pub vp: VpParams,
    /// Exponents of `σ = |x|^m` for the bathtub sweep.
    #[serde(default = "default_m_values")]
    pub m_values: Vec<f64>,
    pub output_dir: PathBuf,
}

fn default_domain() -> DomainConfig {
    DomainConfig::Disc { radius: 1.0 }
}

fn default_m_values() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name}: must be a positive finite number, got {v}"));
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.display().to_string(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field against the preconditions of the pipeline it feeds
    /// and reports all offending fields at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut e = Vec::new();
        match self.domain {
            DomainConfig::Disc { radius } => positive(&mut e, "domain.radius", radius),
            DomainConfig::Plane { cutoff } => positive(&mut e, "domain.cutoff", cutoff),
            DomainConfig::Rectangle { l1, l2 } => {
                positive(&mut e, "domain.l1", l1);
                positive(&mut e, "domain.l2", l2);
            }
            DomainConfig::Strip { l1, cutoff } => {
                positive(&mut e, "domain.l1", l1);
                positive(&mut e, "domain.cutoff", cutoff);
            }
        }
        if self.resolution.n1 < 2 {
            e.push(format!("resolution.n1: need at least 2 cells, got {}", self.resolution.n1));
        }
        if self.resolution.n2 < 2 {
            e.push(format!("resolution.n2: need at least 2 cells, got {}", self.resolution.n2));
        }
        let cells = self.resolution.n1.saturating_mul(self.resolution.n2);
        if cells > 1 << 22 {
            e.push(format!("resolution: {cells} cells exceeds the limit of {}", 1 << 22));
        }
        if !(self.tolerances.status_rel >= 0.0 && self.tolerances.status_rel < 1.0) {
            e.push(format!("tolerances.status_rel: must lie in [0, 1), got {}", self.tolerances.status_rel));
        }
        if !(self.tolerances.oracle_rel >= 0.0 && self.tolerances.oracle_rel.is_finite()) {
            e.push(format!("tolerances.oracle_rel: must be a nonnegative number, got {}", self.tolerances.oracle_rel));
        }
        if self.output_dir.as_os_str().is_empty() {
            e.push("output_dir: must not be empty".into());
        }

        match self.experiment {
            Experiment::CertifySweep => match &self.sigma {
                None => e.push("sigma: required for certify_sweep".into()),
                Some(SigmaConfig::RadiusSquared) if !self.domain.is_disc_like() => {
                    e.push("sigma: radius_squared needs a disc or plane domain".into())
                }
                Some(SigmaConfig::PowerLaw { m }) => {
                    if !self.domain.is_disc_like() {
                        e.push("sigma: power_law needs a disc or plane domain".into());
                    }
                    if !(*m > 0.0 && *m <= 2.0) {
                        e.push(format!("sigma.m: must lie in (0, 2] for d = 2, got {m}"));
                    }
                }
                Some(SigmaConfig::CoordX2) if self.domain.is_disc_like() => {
                    e.push("sigma: coord_x2 needs a rectangle or strip domain".into())
                }
                _ => {}
            },
            Experiment::Corollary1Sweep => {
                if !matches!(self.domain, DomainConfig::Disc { .. }) {
                    e.push("domain: corollary1_sweep needs a disc".into());
                }
                if self.m_values.is_empty() {
                    e.push("m_values: must not be empty".into());
                }
                for (i, m) in self.m_values.iter().enumerate() {
                    if !(*m > 0.0 && *m <= 2.0) {
                        e.push(format!("m_values[{i}]: must lie in (0, 2], got {m}"));
                    }
                }
            }
            Experiment::EulerStripRun => {
                if !matches!(self.domain, DomainConfig::Rectangle { .. }) {
                    e.push("domain: euler_strip_run needs a rectangle (periodic in x1, walls in x2)".into());
                }
                let p = &self.euler;
                if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) {
                    e.push(format!("euler.amplitude: must be nonnegative, got {}", p.amplitude));
                }
                if !(p.t_final >= 0.0 && p.t_final.is_finite()) {
                    e.push(format!("euler.t_final: must be nonnegative, got {}", p.t_final));
                }
                positive(&mut e, "euler.dt", p.dt);
                positive(&mut e, "euler.cfl_max", p.cfl_max);
                if p.sample_every == 0 {
                    e.push("euler.sample_every: must be at least 1".into());
                }
            }
            Experiment::EulerDiscCertify | Experiment::EulerDomainCertify => {
                if !matches!(self.domain, DomainConfig::Disc { .. }) {
                    e.push(format!("domain: {} needs a disc", self.experiment.name()));
                }
                if !(self.euler.amplitude >= 0.0 && self.euler.amplitude.is_finite()) {
                    e.push(format!("euler.amplitude: must be nonnegative, got {}", self.euler.amplitude));
                }
            }
            Experiment::VpBuildAndCertify => {
                let p = &self.vp;
                positive(&mut e, "vp.k", p.k);
                positive(&mut e, "vp.kappa", p.kappa);
                if !(p.e0 < 0.0 && p.e0.is_finite()) {
                    e.push(format!("vp.e0: must be negative for a compact support, got {}", p.e0));
                }
                if p.nr < 8 {
                    e.push(format!("vp.nr: need at least 8 radial points, got {}", p.nr));
                }
                if p.nv < 2 {
                    e.push(format!("vp.nv: need at least 2 velocity cells, got {}", p.nv));
                }
                if p.table_points < 16 {
                    e.push(format!("vp.table_points: need at least 16, got {}", p.table_points));
                }
                if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) {
                    e.push(format!("vp.amplitude: must be nonnegative, got {}", p.amplitude));
                }
            }
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(e))
        }
    }

    /// Run directory: `output_dir` under `$RLAB_OUT` when that is set (an
    /// absolute `output_dir` keeps only its last component), as given otherwise.
    pub fn run_dir(&self) -> PathBuf {
        match std::env::var_os("RLAB_OUT") {
            Some(root) if !root.is_empty() => {
                let root = PathBuf::from(root);
                if self.output_dir.is_absolute() {
                    root.join(self.output_dir.file_name().unwrap_or_default())
                } else {
                    root.join(&self.output_dir)
                }
            }
            _ => self.output_dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ExperimentConfig {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn defaults_fill_optional_sections() {
        let c = parse(r#"{"seed": 1, "experiment": "corollary1_sweep", "output_dir": "out"}"#);
        assert_eq!(c.domain, DomainConfig::Disc { radius: 1.0 });
        assert_eq!(c.m_values, vec![0.5, 1.0, 2.0]);
        assert_eq!(c.trials, 0);
        c.validate().unwrap();
    }

    #[test]
    fn every_bad_field_is_listed() {
        let c = parse(
            r#"{"seed": 1, "experiment": "vp_build_and_certify", "output_dir": "",
                "resolution": {"n1": 1, "n2": 4},
                "vp": {"k": -1, "e0": 0.5, "nv": 1}}"#,
        );
        let ConfigError::Invalid(errs) = c.validate().unwrap_err() else { panic!() };
        for field in ["output_dir", "resolution.n1", "vp.k", "vp.e0", "vp.nv"] {
            assert!(errs.iter().any(|e| e.starts_with(field)), "{field} missing from {errs:?}");
        }
        assert_eq!(errs.len(), 5);
    }

    #[test]
    fn sigma_must_fit_the_domain() {
        let c = parse(
            r#"{"seed": 1, "experiment": "certify_sweep", "output_dir": "o",
                "domain": {"kind": "rectangle", "l1": 1, "l2": 1}, "sigma": {"family": "power_law", "m": 3}}"#,
        );
        let ConfigError::Invalid(errs) = c.validate().unwrap_err() else { panic!() };
        assert_eq!(errs.len(), 2, "{errs:?}");
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"seed": 1, "experiment": "x", "output_dir": "o"}"#).is_err());
    }
}
