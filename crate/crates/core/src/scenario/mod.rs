//! Registered scenarios: the experiments the engines run on, with their
//! expected values for self-checking.

mod bell;
mod eraser;
mod interferometer;
mod pair;
mod wigner;

pub use bell::{bell_graph, BELL_CARRIERS};
pub use eraser::{eraser_graph, FringeReport, SWEEP_POINTS};
pub use interferometer::mach_zehnder_graph;
pub use pair::entangled_pair_graph;
pub use wigner::{remote_marginal_check, wigner_graph, RemoteMarginalReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CausalGraph;

/// Which basis the entangled-pair qubits prefer before measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairBasis {
    Computational,
    X,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum ScenarioParams {
    BellPms {
        gamma_block: bool,
    },
    EntangledPair {
        a: f64,
        b: f64,
        basis: PairBasis,
    },
    MachZehnder {
        second_bs: bool,
        bomb: bool,
    },
    QuantumEraser {
        sweep_points: usize,
    },
    WignerFriend {
        a: f64,
        b: f64,
    },
}

/// A value the scenario promises; every run report checks these under the
/// analytic parallel-lives evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Expectation {
    LifeCount {
        carrier: String,
        count: usize,
    },
    HistoryCount {
        carrier: String,
        count: usize,
    },
    Fluid {
        carrier: String,
        label: String,
        value: f64,
    },
    CarrierTotalFluid {
        carrier: String,
        value: f64,
    },
    TotalAbsorbed {
        value: f64,
    },
    TerminalProb {
        label: String,
        value: f64,
    },
    VisibilityAbove {
        key: String,
        min: f64,
    },
    VisibilityBelow {
        key: String,
        max: f64,
    },
    FringePhaseOffsetPi {
        left: String,
        right: String,
        tolerance: f64,
    },
    RemoteMarginalDelta {
        max: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescriptor {
    pub name: String,
    pub inflation: bool,
    pub params: ScenarioParams,
    pub expected: Vec<Expectation>,
}

impl ScenarioDescriptor {
    pub fn with_inflation(mut self, inflation: bool) -> Self {
        self.inflation = inflation;
        self
    }

    pub fn build_graph(&self) -> Result<CausalGraph> {
        match &self.params {
            ScenarioParams::BellPms { gamma_block } => bell_graph(*gamma_block, self.inflation),
            ScenarioParams::EntangledPair { a, b, basis } => {
                entangled_pair_graph(*a, *b, *basis, self.inflation)
            }
            ScenarioParams::MachZehnder { second_bs, bomb } => {
                mach_zehnder_graph(*second_bs, *bomb, self.inflation)
            }
            ScenarioParams::QuantumEraser { sweep_points } => {
                eraser_graph(*sweep_points, self.inflation)
            }
            ScenarioParams::WignerFriend { a, b } => wigner_graph(*a, *b, self.inflation),
        }
    }
}

pub fn registered_scenarios() -> Vec<&'static str> {
    vec![
        "bell_pms",
        "bell_pms_gamma",
        "entangled_pair",
        "entangled_pair_x",
        "mach_zehnder",
        "mach_zehnder_open",
        "mach_zehnder_bomb",
        "quantum_eraser",
        "wigner_friend",
        "wigner_friend_definite",
    ]
}

pub fn scenario(name: &str) -> Result<ScenarioDescriptor> {
    let descriptor = match name {
        "bell_pms" => bell::descriptor(false),
        "bell_pms_gamma" => bell::descriptor(true),
        "entangled_pair" => pair::descriptor(0.8, 0.6, PairBasis::Computational)?,
        "entangled_pair_x" => pair::descriptor(0.8, 0.6, PairBasis::X)?,
        "mach_zehnder" => interferometer::descriptor(true, false),
        "mach_zehnder_open" => interferometer::descriptor(false, false),
        "mach_zehnder_bomb" => interferometer::descriptor(true, true),
        "quantum_eraser" => eraser::descriptor(SWEEP_POINTS),
        "wigner_friend" => wigner::descriptor(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
        "wigner_friend_definite" => wigner::descriptor(1.0, 0.0),
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    Ok(descriptor)
}

/// Build an entangled-pair scenario with explicit amplitudes.
pub fn scenario_entangled_pair(a: f64, b: f64, basis: PairBasis) -> Result<ScenarioDescriptor> {
    pair::descriptor(a, b, basis)
}

/// Build a Mach-Zehnder scenario with explicit toggles.
pub fn scenario_mach_zehnder(second_bs: bool, bomb: bool) -> ScenarioDescriptor {
    interferometer::descriptor(second_bs, bomb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_builds_every_scenario() {
        for name in registered_scenarios() {
            let descriptor = scenario(name).unwrap();
            let graph = descriptor.build_graph().unwrap();
            assert!(graph.nodes().count() >= 2, "{name}");
        }
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        assert!(matches!(
            scenario("nosuch"),
            Err(Error::UnknownScenario(_))
        ));
    }

    #[test]
    fn descriptor_round_trip_produces_identical_graph() {
        for name in registered_scenarios() {
            let descriptor = scenario(name).unwrap();
            let json = serde_json::to_string(&descriptor).unwrap();
            let back: ScenarioDescriptor = serde_json::from_str(&json).unwrap();
            assert_eq!(back, descriptor);
            assert_eq!(
                back.build_graph().unwrap(),
                descriptor.build_graph().unwrap(),
                "{name}"
            );
        }
    }

    #[test]
    fn inflation_toggle_adds_initial_ancestor() {
        let descriptor = scenario("bell_pms").unwrap().with_inflation(true);
        let graph = descriptor.build_graph().unwrap();
        let init = graph.initial_node().unwrap().to_string();
        for node in ["S", "R1", "R2", "M1", "M2", "E"] {
            assert!(graph.light_cone(node).unwrap().contains(&init), "{node}");
        }
    }
}
