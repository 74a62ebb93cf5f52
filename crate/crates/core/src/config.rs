//! Plain-text experiment configuration: `key = value` lines, `#` comments,
//! dotted keys. Unknown keys are errors — configs are validated
//! exhaustively so a typo cannot silently fall back to a default.

use std::path::Path;

use crate::error::{AcError, Result};
use crate::geometry::TorusDomain;
use crate::minmax::SolverParams;
use crate::potential::{DoubleWell, Profile, PROFILE_DEFAULT_HALFWIDTH, PROFILE_DEFAULT_STEP};
use crate::sweepout::SweepoutSpec;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub grid: Vec<usize>,
    pub well_kind: WellKind,
    pub profile_halfwidth: f64,
    pub profile_step: f64,
    /// Strictly decreasing ε ladder.
    pub eps_ladder: Vec<f64>,
    pub sweepout_axis: usize,
    pub sweepout_center: f64,
    /// δ = min(delta_factor·ε, min L/4) per rung.
    pub delta_factor: f64,
    pub path_nodes: usize,
    pub relax_tol: f64,
    pub saddle_tol_factor: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub spectrum_k: usize,
    pub diag_delta_tilde: f64,
    pub diag_k: u32,
}

#[derive(Debug, Clone)]
pub enum WellKind {
    Quartic,
    Custom(Vec<f64>),
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            lengths: vec![20.0],
            grid: vec![1024],
            well_kind: WellKind::Quartic,
            profile_halfwidth: PROFILE_DEFAULT_HALFWIDTH,
            profile_step: PROFILE_DEFAULT_STEP,
            eps_ladder: vec![1.0, 0.5, 0.25, 0.125],
            sweepout_axis: 0,
            sweepout_center: 10.0,
            delta_factor: 5.0,
            path_nodes: 33,
            relax_tol: 1e-8,
            saddle_tol_factor: 1e-8,
            max_iter: 2000,
            seed: 0,
            spectrum_k: 6,
            diag_delta_tilde: 0.2,
            diag_k: 3,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut saw_center = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                AcError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| AcError::Config(format!("line {}: {what}", lineno + 1));
            match key {
                "domain.dim" => cfg.dim = parse_one(value).map_err(|m| bad(&m))?,
                "domain.lengths" => cfg.lengths = parse_list(value).map_err(|m| bad(&m))?,
                "domain.grid" => cfg.grid = parse_list(value).map_err(|m| bad(&m))?,
                "well" => {
                    cfg.well_kind = match value {
                        "quartic" => WellKind::Quartic,
                        "custom" => WellKind::Custom(vec![]),
                        other => return Err(bad(&format!("unknown well `{other}`"))),
                    }
                }
                "well.coeffs" => {
                    cfg.well_kind = WellKind::Custom(parse_list(value).map_err(|m| bad(&m))?)
                }
                "profile.halfwidth" => cfg.profile_halfwidth = parse_one(value).map_err(|m| bad(&m))?,
                "profile.step" => cfg.profile_step = parse_one(value).map_err(|m| bad(&m))?,
                "eps.ladder" => cfg.eps_ladder = parse_list(value).map_err(|m| bad(&m))?,
                "sweepout.family" => {
                    if value != "band" {
                        return Err(bad(&format!("unknown sweepout family `{value}`")));
                    }
                }
                "sweepout.axis" => cfg.sweepout_axis = parse_one(value).map_err(|m| bad(&m))?,
                "sweepout.center" => {
                    cfg.sweepout_center = parse_one(value).map_err(|m| bad(&m))?;
                    saw_center = true;
                }
                "sweepout.delta_factor" => cfg.delta_factor = parse_one(value).map_err(|m| bad(&m))?,
                "path.nodes" => cfg.path_nodes = parse_one(value).map_err(|m| bad(&m))?,
                "solver.relax_tol" => cfg.relax_tol = parse_one(value).map_err(|m| bad(&m))?,
                "solver.saddle_tol" => cfg.saddle_tol_factor = parse_one(value).map_err(|m| bad(&m))?,
                "solver.max_iter" => cfg.max_iter = parse_one(value).map_err(|m| bad(&m))?,
                "seed" => cfg.seed = parse_one(value).map_err(|m| bad(&m))?,
                "spectrum.k" => cfg.spectrum_k = parse_one(value).map_err(|m| bad(&m))?,
                "diag.delta_tilde" => cfg.diag_delta_tilde = parse_one(value).map_err(|m| bad(&m))?,
                "diag.k" => cfg.diag_k = parse_one(value).map_err(|m| bad(&m))?,
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        if !saw_center {
            // Default band center: the middle of the sweepout axis.
            let axis = cfg.sweepout_axis.min(cfg.lengths.len().saturating_sub(1));
            cfg.sweepout_center = cfg.lengths.get(axis).copied().unwrap_or(0.5) / 2.0;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_ladder.is_empty() {
            return Err(AcError::Config("empty eps ladder".into()));
        }
        for pair in self.eps_ladder.windows(2) {
            if pair[1] >= pair[0] {
                return Err(AcError::Config(
                    "eps ladder must be strictly decreasing".into(),
                ));
            }
        }
        let domain = self.domain()?;
        if self.sweepout_axis >= domain.dim() {
            return Err(AcError::Config(format!(
                "sweepout axis {} out of range for dim {}",
                self.sweepout_axis,
                domain.dim()
            )));
        }
        let eps_min = *self.eps_ladder.last().expect("nonempty");
        if eps_min < 2.0 * domain.max_spacing() {
            // Under-resolved smallest rung: warn via the report flag later,
            // not an error (ladders approach the resolution limit on
            // purpose).
        }
        self.well()?;
        self.solver_params().validate()?;
        Ok(())
    }

    pub fn domain(&self) -> Result<TorusDomain> {
        TorusDomain::new(self.dim, &self.lengths, &self.grid)
    }

    pub fn well(&self) -> Result<DoubleWell> {
        match &self.well_kind {
            WellKind::Quartic => Ok(DoubleWell::quartic()),
            WellKind::Custom(coeffs) => DoubleWell::custom(coeffs),
        }
    }

    pub fn profile(&self, well: &DoubleWell) -> Result<Profile> {
        Profile::new(well, self.profile_halfwidth, self.profile_step)
    }

    pub fn sweepout_spec(&self) -> SweepoutSpec {
        SweepoutSpec::band(self.sweepout_axis, self.sweepout_center)
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            nodes: self.path_nodes,
            relax_tol: self.relax_tol,
            saddle_tol_factor: self.saddle_tol_factor,
            max_relax_sweeps: self.max_iter,
            seed: self.seed,
            ..Default::default()
        }
    }
}

fn parse_one<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("bad value `{s}`"))
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split([' ', ','])
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("bad value `{t}`")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "\
# circle experiment
domain.dim = 1
domain.lengths = 20
domain.grid = 1024
well = quartic
eps.ladder = 1, 0.5, 0.25, 0.125
path.nodes = 33
solver.relax_tol = 1e-8
seed = 7
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.grid, vec![1024]);
        assert_eq!(cfg.eps_ladder.len(), 4);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.sweepout_center, 10.0); // default: mid-axis
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ladders() {
        assert!(matches!(
            ExperimentConfig::parse("bogus.key = 3"),
            Err(AcError::Config(_))
        ));
        assert!(ExperimentConfig::parse("eps.ladder = 0.5 1.0").is_err());
        assert!(ExperimentConfig::parse("eps.ladder =").is_err());
    }

    #[test]
    fn custom_well_round_trip() {
        let text = "well.coeffs = 0.5 0 -1 0 0.5\ndomain.lengths = 10\ndomain.grid = 64";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let w = cfg.well().unwrap();
        // 2·quartic scales sigma by √2.
        approx::assert_relative_eq!(
            w.sigma(),
            DoubleWell::quartic().sigma() * f64::sqrt(2.0),
            epsilon = 1e-9
        );
    }
}
