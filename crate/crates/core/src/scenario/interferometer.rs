//! Mach-Zehnder interferometer on a two-level path system: tuned for
//! perfect interference, opened for a delayed-choice which-path run, or
//! armed with a blocking object in the lower arm.

use std::collections::{BTreeMap, BTreeSet};

use super::{Expectation, ScenarioDescriptor, ScenarioParams};
use crate::error::Result;
use crate::graph::{
    BlockFilter, CarrierEdge, CarrierRef, CausalGraph, EventNode, MeasurementKind, NodeKind,
    SourceOutput,
};
use crate::oracle::{GateSpec, ProductBasis, QubitBasis, StatePrep};

fn path_basis() -> ProductBasis {
    ProductBasis::single(QubitBasis::computational().relabeled("upper", "lower"))
}

pub fn mach_zehnder_graph(second_bs: bool, bomb: bool, inflation: bool) -> Result<CausalGraph> {
    let mut nodes = vec![
        EventNode {
            id: "S".into(),
            kind: NodeKind::Source {
                prep: StatePrep::Qubit { a: 1.0, b: 0.0 },
                outputs: vec![SourceOutput {
                    edge: "p0".into(),
                    qubits: vec![0],
                    basis: path_basis(),
                }],
            },
        },
        EventNode {
            id: "BS1".into(),
            kind: NodeKind::Unitary {
                gate: GateSpec::BeamSplitter,
            },
        },
        EventNode {
            id: "DET".into(),
            kind: NodeKind::Measurement {
                measurement: MeasurementKind::Basis {
                    table: BTreeMap::from([("".to_string(), path_basis())]),
                },
            },
        },
    ];
    let mut edges = vec![CarrierEdge {
        id: "p0".into(),
        from: "S".into(),
        to: "BS1".into(),
    }];
    let mut cursor_edge = "p1".to_string();
    let mut cursor_from = "BS1".to_string();
    let mut table: Vec<CarrierRef> = vec![CarrierRef::Edge("p0".into())];

    if bomb {
        nodes.push(EventNode {
            id: "bomb".into(),
            kind: NodeKind::Block {
                filter: BlockFilter::Channels {
                    labels: BTreeSet::from(["lower".to_string()]),
                },
            },
        });
        edges.push(CarrierEdge {
            id: cursor_edge.clone(),
            from: cursor_from.clone(),
            to: "bomb".into(),
        });
        table.push(CarrierRef::Edge(cursor_edge.clone()));
        cursor_edge = "p2".into();
        cursor_from = "bomb".into();
    }
    if second_bs {
        nodes.push(EventNode {
            id: "BS2".into(),
            kind: NodeKind::Unitary {
                gate: GateSpec::BeamSplitter,
            },
        });
        edges.push(CarrierEdge {
            id: cursor_edge.clone(),
            from: cursor_from.clone(),
            to: "BS2".into(),
        });
        table.push(CarrierRef::Edge(cursor_edge.clone()));
        cursor_edge = "p3".into();
        cursor_from = "BS2".into();
    }
    edges.push(CarrierEdge {
        id: cursor_edge.clone(),
        from: cursor_from,
        to: "DET".into(),
    });
    table.push(CarrierRef::Edge(cursor_edge));
    table.push(CarrierRef::Node("DET".into()));

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
        initial = Some("origin".to_string());
    }
    CausalGraph::new("mach_zehnder", nodes, edges, initial, table)
}

pub fn descriptor(second_bs: bool, bomb: bool) -> ScenarioDescriptor {
    let expected = match (second_bs, bomb) {
        // Tuned interferometer: all fluid reaches one port.
        (true, false) => vec![
            Expectation::TerminalProb {
                label: "lower".into(),
                value: 1.0,
            },
            Expectation::TerminalProb {
                label: "upper".into(),
                value: 0.0,
            },
        ],
        // No recombining beam splitter: the two orthogonal path channels
        // arrive at both detectors.
        (false, false) => vec![
            Expectation::TerminalProb {
                label: "upper".into(),
                value: 0.5,
            },
            Expectation::TerminalProb {
                label: "lower".into(),
                value: 0.5,
            },
        ],
        // Interaction-free configuration: the lower arm is blocked.
        (true, true) => vec![
            Expectation::TerminalProb {
                label: "upper".into(),
                value: 0.25,
            },
            Expectation::TerminalProb {
                label: "lower".into(),
                value: 0.25,
            },
            Expectation::TotalAbsorbed { value: 0.5 },
        ],
        // Blocked arm with no recombiner: half the fluid reaches the upper
        // detector, half is absorbed.
        (false, true) => vec![
            Expectation::TerminalProb {
                label: "upper".into(),
                value: 0.5,
            },
            Expectation::TerminalProb {
                label: "lower".into(),
                value: 0.0,
            },
            Expectation::TotalAbsorbed { value: 0.5 },
        ],
    };
    ScenarioDescriptor {
        name: match (second_bs, bomb) {
            (true, false) => "mach_zehnder".into(),
            (false, false) => "mach_zehnder_open".into(),
            _ => "mach_zehnder_bomb".into(),
        },
        inflation: false,
        params: ScenarioParams::MachZehnder { second_bs, bomb },
        expected,
    }
}
