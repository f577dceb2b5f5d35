//! Experiment configuration: strict JSON parsing, validation and hashing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complexes::{build_icosphere, build_torus_grid, CellComplex};
use crate::error::{Error, Result};
use crate::linalg::EigenOptions;
use crate::morse::{FunctionSpec, Manifold, ShootOptions};
use crate::witten::{check_resolution_cap, BranchOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Torus,
    Icosphere,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub topology: TopologyKind,
    pub dimension: usize,
    /// Cells per period (torus) or subdivision level (icosphere).
    pub resolution: usize,
    /// Torus periods; unit periods when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
}

impl ManifoldSpec {
    pub fn periods(&self) -> Vec<f64> {
        self.periods.clone().unwrap_or_else(|| vec![1.0; self.dimension])
    }

    pub fn build(&self) -> Result<CellComplex> {
        match self.topology {
            TopologyKind::Torus => build_torus_grid(self.dimension, self.resolution, &self.periods()),
            TopologyKind::Icosphere => build_icosphere(self.resolution),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    /// Bisect grid steps where branch matching is ambiguous.
    #[serde(default = "yes")]
    pub adaptive: bool,
}

fn yes() -> bool {
    true
}

impl TGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.max } else { self.min + i as f64 * step }).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Eigenpairs (branches) per degree.
    pub eigencount: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iter: usize,
    pub dense_limit: usize,
    pub overlap_min: f64,
    pub tol_group: f64,
    /// Floor in the gap ratio `λ_{i+1}/max(λ_i, floor)`.
    pub gap_floor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let e = EigenOptions::default();
        let b = BranchOptions::default();
        SolverSettings {
            eigencount: 8,
            seed: e.seed,
            tolerance: e.tol,
            max_iter: e.max_iter,
            dense_limit: 200,
            overlap_min: b.overlap_min,
            tol_group: b.tol_group,
            gap_floor: 1.0,
        }
    }
}

impl SolverSettings {
    pub fn eigen(&self) -> EigenOptions {
        EigenOptions { seed: self.seed, tol: self.tolerance, max_iter: self.max_iter, dense_limit: self.dense_limit }
    }

    pub fn branches(&self, adaptive: bool) -> BranchOptions {
        let d = BranchOptions::default();
        BranchOptions {
            overlap_min: self.overlap_min,
            tol_group: self.tol_group,
            max_depth: if adaptive { d.max_depth } else { 0 },
            eigen: self.eigen(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorseSettings {
    pub seed_resolution: usize,
    pub shoot: ShootOptions,
}

impl Default for MorseSettings {
    fn default() -> Self {
        MorseSettings { seed_resolution: 16, shoot: ShootOptions::default() }
    }
}

/// Comparison maps `I, R, L` and `a^q(t)` on the sampled `t` values (which must lie on `t_grid`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSettings {
    pub t_values: Vec<f64>,
    /// Cutoff radius in Morse coordinates.
    pub cutoff_eta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorsionFormulaSettings {
    /// Branches are tracked on `count` equispaced points of `[0, t_max]`.
    pub t_max: f64,
    pub count: usize,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSettings {
    pub size: usize,
    pub tolerance: f64,
}

impl Default for CorpusSettings {
    fn default() -> Self {
        CorpusSettings { size: 200, tolerance: 1e-9 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorSettings {
    pub max_dimension: usize,
    pub max_order: usize,
    pub t: f64,
    pub basis_size: usize,
    pub fd_half_width: f64,
    pub fd_cells: usize,
    pub fd_count: usize,
}

impl Default for OscillatorSettings {
    fn default() -> Self {
        OscillatorSettings { max_dimension: 3, max_order: 3, t: 1.0, basis_size: 6, fd_half_width: 8.0, fd_cells: 400, fd_count: 6 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub manifold: ManifoldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<TGrid>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub morse: MorseSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torsion_formula: Option<TorsionFormulaSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusSettings>,
    #[serde(default)]
    pub oscillator: OscillatorSettings,
    /// Output directory when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(&path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(".", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let m = &self.manifold;
        if self.experiment.trim().is_empty() {
            return Err(config_error("experiment", "must be non-empty"));
        }
        match m.topology {
            TopologyKind::Torus => {
                if !(1..=3).contains(&m.dimension) {
                    return Err(config_error("manifold.dimension", "torus dimension must be 1, 2 or 3"));
                }
                if m.resolution < 3 {
                    return Err(config_error("manifold.resolution", "torus resolution must be at least 3"));
                }
                if let Some(p) = &m.periods {
                    if p.len() != m.dimension || p.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                        return Err(config_error("manifold.periods", format!("need {} positive periods", m.dimension)));
                    }
                }
            }
            TopologyKind::Icosphere => {
                if m.dimension != 2 {
                    return Err(config_error("manifold.dimension", "icosphere dimension must be 2"));
                }
                if m.periods.is_some() {
                    return Err(config_error("manifold.periods", "icosphere takes no periods"));
                }
                if m.resolution > 6 {
                    return Err(config_error("manifold.resolution", "icosphere subdivision level above 6"));
                }
            }
        }
        if let Some(f) = &self.function {
            self.validate_function(f)?;
        }
        if let Some(g) = &self.t_grid {
            if !(g.min.is_finite() && g.max.is_finite() && g.min >= 0.0 && g.max >= g.min) {
                return Err(config_error("t_grid", "need finite 0 <= min <= max"));
            }
            if g.count == 0 || (g.count == 1 && g.max != g.min) {
                return Err(config_error("t_grid.count", "need count >= 2 (or 1 with min = max)"));
            }
        }
        let s = &self.solver;
        if s.eigencount == 0 {
            return Err(config_error("solver.eigencount", "must be positive"));
        }
        if !(s.overlap_min > 0.5 && s.overlap_min < 1.0) {
            return Err(config_error("solver.overlap_min", "must lie in (0.5, 1)"));
        }
        if !(s.tolerance > 0.0 && s.gap_floor > 0.0 && s.tol_group > 0.0) {
            return Err(config_error("solver", "tolerance, tol_group and gap_floor must be positive"));
        }
        if self.morse.seed_resolution < 8 {
            return Err(config_error("morse.seed_resolution", "must be at least 8"));
        }
        if self.morse.shoot.samples < 8 {
            return Err(config_error("morse.shoot.samples", "must be at least 8"));
        }
        if let Some(c) = &self.comparison {
            let g = self.t_grid.as_ref().ok_or_else(|| config_error("t_grid", "required by comparison"))?;
            let pts = g.points();
            for (i, t) in c.t_values.iter().enumerate() {
                if !pts.iter().any(|s| (s - t).abs() <= 1e-12 * (1.0 + t.abs())) {
                    return Err(config_error(&format!("comparison.t_values[{i}]"), format!("{t} is not a point of t_grid")));
                }
            }
            if !(c.cutoff_eta > 0.0) {
                return Err(config_error("comparison.cutoff_eta", "must be positive"));
            }
        }
        if let Some(t) = &self.torsion_formula {
            if !(t.t_max > 0.0) || t.count < 3 || !(t.tolerance > 0.0) {
                return Err(config_error("torsion_formula", "need t_max > 0, count >= 3, tolerance > 0"));
            }
        }
        if let Some(c) = &self.corpus {
            if c.size == 0 || !(c.tolerance > 0.0) {
                return Err(config_error("corpus", "need size >= 1 and tolerance > 0"));
            }
        }
        let o = &self.oscillator;
        if o.max_dimension == 0 || o.max_dimension > 4 || !(o.t > 0.0) || o.fd_cells < 8 || o.fd_count == 0 {
            return Err(config_error("oscillator", "need 1 <= max_dimension <= 4, t > 0, fd_cells >= 8, fd_count >= 1"));
        }
        Ok(())
    }

    fn validate_function(&self, f: &FunctionSpec) -> Result<()> {
        let m = &self.manifold;
        let periods_match = |p: &[f64]| p.len() == m.dimension && p.iter().zip(m.periods()).all(|(a, b)| (a - b).abs() <= 1e-12 * b);
        let ok = match (f, m.topology) {
            (FunctionSpec::ProductCosine { periods, .. }, TopologyKind::Torus) => periods_match(periods),
            (FunctionSpec::ExactChart { periods, .. }, TopologyKind::Torus) => periods_match(periods),
            (FunctionSpec::SphereHeight { .. }, TopologyKind::Icosphere) => true,
            (FunctionSpec::Constant { manifold: Manifold::Torus { periods }, .. }, TopologyKind::Torus) => periods_match(periods),
            (FunctionSpec::Constant { manifold: Manifold::Sphere, .. }, TopologyKind::Icosphere) => true,
            _ => false,
        };
        if !ok {
            return Err(config_error("function", format!("family {} does not live on the configured manifold", f.family())));
        }
        f.build().map_err(|e| config_error("function", e.to_string()))?;
        Ok(())
    }

    pub fn t_grid(&self) -> Result<&TGrid> {
        self.t_grid.as_ref().ok_or_else(|| config_error("t_grid", "required by this command"))
    }

    pub fn function(&self) -> Result<&FunctionSpec> {
        self.function.as_ref().ok_or_else(|| config_error("function", "required by this command"))
    }

    /// The resolution cap `h ≤ 0.5/√t_max`, reported as a config error on `field`.
    pub fn check_cap(&self, cx: &CellComplex, t_max: f64, field: &str) -> Result<()> {
        check_resolution_cap(cx.mesh_size(), t_max).map_err(|e| match e {
            Error::InvalidArgument(m) => config_error(field, m),
            e => e,
        })
    }

    /// SHA-256 of the canonical JSON of the effective configuration.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"experiment": "t2", "manifold": {"topology": "torus", "dimension": 2, "resolution": 8}}"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.solver.eigencount, 8);
        assert_eq!(c.manifold.periods(), vec![1.0, 1.0]);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn unknown_fields_report_their_path() {
        let text = r#"{"experiment": "t2", "manifold": {"topology": "torus", "dimension": 2, "resolution": 8, "colour": 1}}"#;
        match parse_config(text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "manifold.colour"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"experiment": "t2", "manifold": {"topology": "torus", "dimension": 2, "resolution": 8}, "solver": {"eigencount": "x"}}"#;
        match parse_config(text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "solver.eigencount"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn function_must_fit_the_manifold() {
        let text = r#"{"experiment": "s", "manifold": {"topology": "icosphere", "dimension": 2, "resolution": 2},
            "function": {"family": "product_cosine", "periods": [1, 1], "amplitudes": [1, 1], "modes": [1, 1]}}"#;
        assert!(matches!(parse_config(text), Err(Error::Config { path, .. }) if path == "function"));
    }

    #[test]
    fn grid_points_hit_the_endpoints() {
        let g = TGrid { min: 15.0, max: 30.0, count: 13, adaptive: true };
        let p = g.points();
        assert_eq!(p.len(), 13);
        assert_eq!(p[0], 15.0);
        assert_eq!(p[12], 30.0);
        assert_eq!(p[4], 20.0);
    }

    #[test]
    fn hash_changes_with_seed() {
        let mut c = parse_config(MINIMAL).unwrap();
        let h = c.hash();
        c.solver.seed += 1;
        assert_ne!(h, c.hash());
    }
}
