//! The game specification document shared by every subcommand.

use std::path::Path;

use ggp_core::design::PartitionTarget;
use ggp_core::oracle_sim::SimulationOptions;
use ggp_core::{
    CoordinationGame, ExternalitySchedule, InformationStructure, NoiseModel, PriorDensity, PriorModel,
    QuadratureConfig, SolverConfig, StateBounds,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpecDocument {
    pub schema_version: String,
    pub game: GameSection,
    pub noise: NoiseModel,
    pub prior: PriorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulationOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub state_bounds: StateBounds,
    pub players: Vec<PlayerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSpec {
    pub cost: f64,
    pub schedule: ExternalitySchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub density: PriorDensity,
}

/// Either an explicit scheme or a request to design one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Policy {
    Scheme { subsidies: Vec<f64> },
    Design(DesignRequest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRequest {
    pub mode: DesignMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionTarget>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum DesignMode {
    ClosedForm,
    Exact,
    Asymmetric,
    Heterogeneous,
    PrincipalAgent,
    RegimeChange,
    SymmetricOptimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Oracle grid step; must divide `ε/2` and the state interval width.
    pub step: f64,
    /// Points of the best-response check grid.
    #[serde(default = "default_check_points")]
    pub check_points: usize,
}

fn default_check_points() -> usize {
    401
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub mode: Option<DesignMode>,
    pub seed: Option<u64>,
    pub draws: Option<usize>,
    pub eps: Option<f64>,
    pub tol: Option<f64>,
}

impl GameSpecDocument {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Schema(format!("at `{path}`: {}", e.into_inner()))
        })?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema(format!(
                "at `schema_version`: unsupported version {:?}, expected {SCHEMA_VERSION:?}",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies overrides and fills every optional section with its defaults,
    /// so the emitted document carries the full parameter set.
    pub fn resolve(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(eps) = o.eps {
            self.noise = self.noise.with_epsilon(eps)?;
        }
        if let Some(mode) = o.mode {
            match &mut self.policy {
                Some(Policy::Design(req)) => req.mode = mode,
                _ => {
                    self.policy = Some(Policy::Design(DesignRequest { mode, target: None, partition: None }));
                }
            }
        }
        self.quadrature.get_or_insert_with(QuadratureConfig::default);
        let solver = self.solver.get_or_insert_with(SolverConfig::default);
        if let Some(tol) = o.tol {
            solver.outer_tolerance = tol;
        }
        let sim = self.simulate.get_or_insert_with(SimulationOptions::default);
        if let Some(seed) = o.seed {
            sim.seed = seed;
        }
        if let Some(draws) = o.draws {
            sim.draws = draws;
        }
        let eps = self.noise.epsilon();
        self.verify.get_or_insert(VerifySection { step: eps / 50.0, check_points: default_check_points() });
        Ok(self)
    }

    pub fn game(&self) -> Result<CoordinationGame, CliError> {
        let b = self.game.state_bounds;
        let bounds = StateBounds::new(b.lo, b.hi)?;
        let players = self.game.players.iter().map(|p| (p.cost, p.schedule.clone())).collect();
        Ok(CoordinationGame::new(players, bounds)?)
    }

    pub fn information(&self) -> Result<InformationStructure, CliError> {
        let prior = PriorModel::new(self.prior.density.clone(), self.game.state_bounds)?;
        Ok(InformationStructure::new(self.noise.clone(), prior, self.quadrature.unwrap_or_default())?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PLAYER: &str = r#"{
        "schema_version": "1",
        "game": {
            "state_bounds": {"lo": -1.0, "hi": 2.0},
            "players": [
                {"cost": 1.0, "schedule": {"mode": "count_based", "values": [0.0, 1.0]}},
                {"cost": 1.0, "schedule": {"mode": "count_based", "values": [0.0, 1.0]}}
            ]
        },
        "noise": {"epsilon": 0.01, "density": {"kind": "uniform"}},
        "prior": {"density": {"kind": "uniform"}},
        "policy": {"design": {"mode": "closed_form", "target": 0.0}}
    }"#;

    #[test]
    fn resolved_document_roundtrips() {
        let doc = GameSpecDocument::from_json(TWO_PLAYER).unwrap().resolve(&Overrides::default()).unwrap();
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let again = GameSpecDocument::from_json(&text).unwrap();
        assert_eq!(doc, again);
        assert_eq!(doc.game().unwrap(), again.game().unwrap());
        assert_eq!(doc.information().unwrap(), again.information().unwrap());
        assert_eq!(again.resolve(&Overrides::default()).unwrap(), doc);
    }

    #[test]
    fn unknown_field_reports_path() {
        let text = TWO_PLAYER.replace(r#""cost": 1.0,"#, r#""cost": 1.0, "colour": 2,"#);
        let CliError::Schema(msg) = GameSpecDocument::from_json(&text).unwrap_err() else {
            panic!("expected a schema error");
        };
        assert!(msg.contains("game.players[0]"), "{msg}");
    }

    #[test]
    fn overrides_land_in_resolved_document() {
        let o = Overrides { eps: Some(0.05), tol: Some(1e-9), seed: Some(3), draws: Some(7), ..Default::default() };
        let doc = GameSpecDocument::from_json(TWO_PLAYER).unwrap().resolve(&o).unwrap();
        assert_eq!(doc.noise.epsilon(), 0.05);
        assert_eq!(doc.solver.unwrap().outer_tolerance, 1e-9);
        assert_eq!(doc.simulate.as_ref().unwrap().seed, 3);
        assert_eq!(doc.simulate.as_ref().unwrap().draws, 7);
        assert_eq!(doc.verify.unwrap().step, 0.001);
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let text = TWO_PLAYER.replace(r#""schema_version": "1""#, r#""schema_version": "0""#);
        assert!(matches!(GameSpecDocument::from_json(&text), Err(CliError::Schema(_))));
    }
}
