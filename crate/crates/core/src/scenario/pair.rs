//! A single entangled pair sent to two space-like separated detectors, the
//! results collected and compared by an experimenter.

use std::collections::BTreeMap;

use super::{Expectation, PairBasis, ScenarioDescriptor, ScenarioParams};
use crate::error::{Error, Result};
use crate::graph::{
    CarrierEdge, CarrierRef, CausalGraph, EventNode, MeasurementKind, NodeKind, SourceOutput,
};
use crate::oracle::{ProductBasis, StatePrep, TOL};

pub fn entangled_pair_graph(a: f64, b: f64, basis: PairBasis, inflation: bool) -> Result<CausalGraph> {
    if (a * a + b * b - 1.0).abs() > TOL {
        return Err(Error::InvalidParams(format!(
            "pair amplitudes ({a}, {b}) are not normalized"
        )));
    }
    let preferred = match basis {
        PairBasis::Computational => ProductBasis::computational(1),
        PairBasis::X => ProductBasis::x_basis(1),
    };
    let computational = |key: &str| {
        BTreeMap::from([(key.to_string(), ProductBasis::computational(1))])
    };
    let mut nodes = vec![
        EventNode {
            id: "S".into(),
            kind: NodeKind::Source {
                prep: StatePrep::BellPair { a, b },
                outputs: vec![
                    SourceOutput {
                        edge: "qa".into(),
                        qubits: vec![0],
                        basis: preferred.clone(),
                    },
                    SourceOutput {
                        edge: "qb".into(),
                        qubits: vec![1],
                        basis: preferred,
                    },
                ],
            },
        },
        EventNode {
            id: "MA".into(),
            kind: NodeKind::Measurement {
                measurement: MeasurementKind::Basis {
                    table: computational(""),
                },
            },
        },
        EventNode {
            id: "MB".into(),
            kind: NodeKind::Measurement {
                measurement: MeasurementKind::Basis {
                    table: computational(""),
                },
            },
        },
        EventNode {
            id: "EXP".into(),
            kind: NodeKind::Join,
        },
    ];
    let mut edges = vec![
        CarrierEdge {
            id: "qa".into(),
            from: "S".into(),
            to: "MA".into(),
        },
        CarrierEdge {
            id: "qb".into(),
            from: "S".into(),
            to: "MB".into(),
        },
        CarrierEdge {
            id: "ma".into(),
            from: "MA".into(),
            to: "EXP".into(),
        },
        CarrierEdge {
            id: "mb".into(),
            from: "MB".into(),
            to: "EXP".into(),
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
        initial = Some("origin".to_string());
    }
    let table_order = vec![
        CarrierRef::Edge("qa".into()),
        CarrierRef::Edge("qb".into()),
        CarrierRef::Edge("ma".into()),
        CarrierRef::Edge("mb".into()),
        CarrierRef::Node("EXP".into()),
    ];
    CausalGraph::new("entangled_pair", nodes, edges, initial, table_order)
}

pub fn descriptor(a: f64, b: f64, basis: PairBasis) -> Result<ScenarioDescriptor> {
    if (a * a + b * b - 1.0).abs() > TOL {
        return Err(Error::InvalidParams(format!(
            "pair amplitudes ({a}, {b}) are not normalized"
        )));
    }
    let p0 = a * a;
    let p1 = b * b;
    let mut expected = vec![
        Expectation::Fluid {
            carrier: "ma".into(),
            label: "0".into(),
            value: p0,
        },
        Expectation::Fluid {
            carrier: "ma".into(),
            label: "1".into(),
            value: p1,
        },
        Expectation::TerminalProb {
            label: "0;0".into(),
            value: p0,
        },
        Expectation::TerminalProb {
            label: "1;1".into(),
            value: p1,
        },
        Expectation::TerminalProb {
            label: "0;1".into(),
            value: 0.0,
        },
    ];
    match basis {
        PairBasis::Computational => {
            expected.push(Expectation::Fluid {
                carrier: "qa".into(),
                label: "0".into(),
                value: p0,
            });
            expected.push(Expectation::Fluid {
                carrier: "qa".into(),
                label: "1".into(),
                value: p1,
            });
        }
        PairBasis::X => {
            expected.push(Expectation::Fluid {
                carrier: "qa".into(),
                label: "+".into(),
                value: 0.5,
            });
            expected.push(Expectation::Fluid {
                carrier: "qa".into(),
                label: "-".into(),
                value: 0.5,
            });
        }
    }
    Ok(ScenarioDescriptor {
        name: match basis {
            PairBasis::Computational => "entangled_pair".into(),
            PairBasis::X => "entangled_pair_x".into(),
        },
        inflation: false,
        params: ScenarioParams::EntangledPair { a, b, basis },
        expected,
    })
}
