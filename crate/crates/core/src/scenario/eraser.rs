//! Delayed-choice quantum eraser: a signal/idler pair created behind a
//! double slit; the idler's which-path information is either measured
//! directly (detectors A, B) or erased at a final beam splitter (detectors
//! C1, C2). The signal screen is a discretized phase sweep, and coincidence
//! post-selection recovers or hides the fringes.

use std::collections::BTreeMap;

use super::{Expectation, ScenarioDescriptor, ScenarioParams};
use crate::error::Result;
use crate::graph::{
    CarrierEdge, CarrierRef, CausalGraph, EventNode, MeasurementKind, NodeKind, SourceOutput,
};
use crate::oracle::{GateSpec, ProductBasis, QubitBasis, StatePrep};

pub const SWEEP_POINTS: usize = 64;

const FRAC: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn signal_basis() -> ProductBasis {
    ProductBasis::single(QubitBasis::computational().relabeled("pathA", "pathB"))
}

fn idler_modes() -> Result<ProductBasis> {
    ProductBasis::computational(2).with_channel_names(vec![
        "armA".into(),
        "armB".into(),
        "cA".into(),
        "cB".into(),
    ])
}

fn detector_modes() -> Result<ProductBasis> {
    ProductBasis::computational(2).with_channel_names(vec![
        "detA".into(),
        "detB".into(),
        "C1".into(),
        "C2".into(),
    ])
}

pub fn eraser_graph(sweep_points: usize, inflation: bool) -> Result<CausalGraph> {
    // Signal qubit 0 entangled with the idler's arm modes:
    // (|pathA, armA> + |pathB, armB>)/sqrt(2).
    let prep = StatePrep::Explicit {
        num_qubits: 3,
        amplitudes: vec![
            (FRAC, 0.0), // |0 00> = pathA, armA
            (0.0, 0.0),
            (0.0, 0.0),
            (0.0, 0.0),
            (0.0, 0.0),
            (FRAC, 0.0), // |1 01> = pathB, armB
            (0.0, 0.0),
            (0.0, 0.0),
        ],
    };
    let phi_options: Vec<String> = (0..sweep_points).map(|t| format!("phi{t:02}")).collect();
    let mut screen_table = BTreeMap::new();
    for (t, key) in phi_options.iter().enumerate() {
        let phi = 2.0 * std::f64::consts::PI * (t as f64) / (sweep_points as f64);
        screen_table.insert(
            key.clone(),
            ProductBasis::single(QubitBasis::phase(phi, "bright", "dark")),
        );
    }

    let mut nodes = vec![
        EventNode {
            id: "S".into(),
            kind: NodeKind::Source {
                prep,
                outputs: vec![
                    SourceOutput {
                        edge: "signal".into(),
                        qubits: vec![0],
                        basis: signal_basis(),
                    },
                    SourceOutput {
                        edge: "idler0".into(),
                        qubits: vec![1, 2],
                        basis: idler_modes()?,
                    },
                ],
            },
        },
        EventNode {
            id: "RPHI".into(),
            kind: NodeKind::RandomChoice {
                options: phi_options,
            },
        },
        // Idler beam-splitter network: A-arm toward detector A or the
        // eraser, B-arm toward detector B or the eraser, then the eraser
        // splitter recombines the two eraser paths.
        EventNode {
            id: "BSA".into(),
            kind: NodeKind::Unitary {
                gate: GateSpec::ModeBeamSplitter {
                    num_qubits: 2,
                    input: 0,
                    output: 2,
                },
            },
        },
        EventNode {
            id: "BSB".into(),
            kind: NodeKind::Unitary {
                gate: GateSpec::ModeBeamSplitter {
                    num_qubits: 2,
                    input: 1,
                    output: 3,
                },
            },
        },
        EventNode {
            id: "BSC".into(),
            kind: NodeKind::Unitary {
                gate: GateSpec::ModeBeamSplitter {
                    num_qubits: 2,
                    input: 2,
                    output: 3,
                },
            },
        },
        EventNode {
            id: "MSIG".into(),
            kind: NodeKind::Measurement {
                measurement: MeasurementKind::Basis {
                    table: screen_table,
                },
            },
        },
        EventNode {
            id: "MIDL".into(),
            kind: NodeKind::Measurement {
                measurement: MeasurementKind::Basis {
                    table: BTreeMap::from([("".to_string(), detector_modes()?)]),
                },
            },
        },
        EventNode {
            id: "COINC".into(),
            kind: NodeKind::Join,
        },
    ];
    let mut edges = vec![
        CarrierEdge {
            id: "signal".into(),
            from: "S".into(),
            to: "MSIG".into(),
        },
        CarrierEdge {
            id: "phi".into(),
            from: "RPHI".into(),
            to: "MSIG".into(),
        },
        CarrierEdge {
            id: "idler0".into(),
            from: "S".into(),
            to: "BSA".into(),
        },
        CarrierEdge {
            id: "idler1".into(),
            from: "BSA".into(),
            to: "BSB".into(),
        },
        CarrierEdge {
            id: "idler2".into(),
            from: "BSB".into(),
            to: "BSC".into(),
        },
        CarrierEdge {
            id: "idler3".into(),
            from: "BSC".into(),
            to: "MIDL".into(),
        },
        CarrierEdge {
            id: "msig".into(),
            from: "MSIG".into(),
            to: "COINC".into(),
        },
        CarrierEdge {
            id: "midl".into(),
            from: "MIDL".into(),
            to: "COINC".into(),
        },
    ];
    let mut initial = None;
    if inflation {
        nodes.push(EventNode {
            id: "origin".into(),
            kind: NodeKind::Initial,
        });
        edges.push(CarrierEdge {
            id: "g_s".into(),
            from: "origin".into(),
            to: "S".into(),
        });
        edges.push(CarrierEdge {
            id: "g_r".into(),
            from: "origin".into(),
            to: "RPHI".into(),
        });
        initial = Some("origin".to_string());
    }
    let table_order = vec![
        CarrierRef::Edge("signal".into()),
        CarrierRef::Edge("idler0".into()),
        CarrierRef::Edge("idler3".into()),
        CarrierRef::Edge("msig".into()),
        CarrierRef::Edge("midl".into()),
        CarrierRef::Node("COINC".into()),
    ];
    CausalGraph::new("quantum_eraser", nodes, edges, initial, table_order)
}

/// Fringe analysis of the coincidence-joined run: per-detector visibility
/// of P(bright | phi, detector) over the sweep, the first-harmonic fringe
/// phase, and the visibility of the unconditioned signal.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FringeReport {
    pub sweep_points: usize,
    pub visibility: BTreeMap<String, f64>,
    pub phase: BTreeMap<String, f64>,
    pub unconditioned_visibility: f64,
    pub idler_fluids: BTreeMap<String, f64>,
}

impl FringeReport {
    /// Absolute deviation of the C1/C2 fringe phase offset from pi.
    pub fn phase_offset_from_pi(&self, left: &str, right: &str) -> f64 {
        let a = self.phase.get(left).copied().unwrap_or(0.0);
        let b = self.phase.get(right).copied().unwrap_or(0.0);
        let mut d = (a - b).abs() % (2.0 * std::f64::consts::PI);
        if d > std::f64::consts::PI {
            d = 2.0 * std::f64::consts::PI - d;
        }
        (d - std::f64::consts::PI).abs()
    }
}

pub fn descriptor(sweep_points: usize) -> ScenarioDescriptor {
    ScenarioDescriptor {
        name: "quantum_eraser".into(),
        inflation: false,
        params: ScenarioParams::QuantumEraser { sweep_points },
        expected: vec![
            Expectation::Fluid {
                carrier: "midl".into(),
                label: "detA".into(),
                value: 0.25,
            },
            Expectation::Fluid {
                carrier: "midl".into(),
                label: "detB".into(),
                value: 0.25,
            },
            Expectation::Fluid {
                carrier: "midl".into(),
                label: "C1".into(),
                value: 0.25,
            },
            Expectation::Fluid {
                carrier: "midl".into(),
                label: "C2".into(),
                value: 0.25,
            },
            Expectation::VisibilityAbove {
                key: "C1".into(),
                min: 0.99,
            },
            Expectation::VisibilityAbove {
                key: "C2".into(),
                min: 0.99,
            },
            Expectation::VisibilityBelow {
                key: "detA".into(),
                max: 0.01,
            },
            Expectation::VisibilityBelow {
                key: "detB".into(),
                max: 0.01,
            },
            Expectation::VisibilityBelow {
                key: "unconditioned".into(),
                max: 0.01,
            },
            Expectation::FringePhaseOffsetPi {
                left: "C1".into(),
                right: "C2".into(),
                tolerance: 0.01,
            },
        ],
    }
}
