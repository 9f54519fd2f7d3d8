//! The four-qubit, two-detector, three-setting Bell experiment over the
//! Peres-Mermin square: detector 1 measures rows on its qubit pair,
//! detector 2 measures columns, so one cell is always measured by both.

use std::collections::BTreeMap;

use super::{Expectation, ScenarioDescriptor, ScenarioParams};
use crate::contextuality::{ContextIndex, PeresMerminSquare};
use crate::error::Result;
use crate::graph::{
    BlockFilter, CarrierEdge, CarrierRef, CausalGraph, EventNode, MeasurementKind, NodeKind,
    SourceOutput,
};
use crate::oracle::{ProductBasis, StatePrep};

pub const BELL_CARRIERS: [&str; 6] = ["r1", "r2", "s1", "s2", "m1", "m2"];

pub fn bell_graph(gamma_block: bool, inflation: bool) -> Result<CausalGraph> {
    let square = PeresMerminSquare::standard();
    let mut row_table = BTreeMap::new();
    let mut col_table = BTreeMap::new();
    for i in 0..3 {
        row_table.insert(format!("row{}", i + 1), square.context(ContextIndex::Row(i))?);
        col_table.insert(format!("col{}", i + 1), square.context(ContextIndex::Col(i))?);
    }

    let mut nodes = vec![
        EventNode {
            id: "S".into(),
            kind: NodeKind::Source {
                prep: StatePrep::PairedFourQubit,
                outputs: vec![
                    SourceOutput {
                        edge: "s1".into(),
                        qubits: vec![0, 1],
                        basis: ProductBasis::computational(2),
                    },
                    SourceOutput {
                        edge: "s2".into(),
                        qubits: vec![2, 3],
                        basis: ProductBasis::computational(2),
                    },
                ],
            },
        },
        EventNode {
            id: "R1".into(),
            kind: NodeKind::RandomChoice {
                options: vec!["row1".into(), "row2".into(), "row3".into()],
            },
        },
        EventNode {
            id: "R2".into(),
            kind: NodeKind::RandomChoice {
                options: vec!["col1".into(), "col2".into(), "col3".into()],
            },
        },
        EventNode {
            id: "M1".into(),
            kind: NodeKind::Measurement {
                measurement: MeasurementKind::Context { table: row_table },
            },
        },
        EventNode {
            id: "M2".into(),
            kind: NodeKind::Measurement {
                measurement: MeasurementKind::Context { table: col_table },
            },
        },
    ];
    let terminal_id = if gamma_block { "gamma" } else { "E" };
    nodes.push(EventNode {
        id: terminal_id.into(),
        kind: if gamma_block {
            NodeKind::Block {
                filter: BlockFilter::All,
            }
        } else {
            NodeKind::Join
        },
    });

    let mut edges = vec![
        CarrierEdge {
            id: "r1".into(),
            from: "R1".into(),
            to: "M1".into(),
        },
        CarrierEdge {
            id: "r2".into(),
            from: "R2".into(),
            to: "M2".into(),
        },
        CarrierEdge {
            id: "s1".into(),
            from: "S".into(),
            to: "M1".into(),
        },
        CarrierEdge {
            id: "s2".into(),
            from: "S".into(),
            to: "M2".into(),
        },
        CarrierEdge {
            id: "m1".into(),
            from: "M1".into(),
            to: terminal_id.into(),
        },
        CarrierEdge {
            id: "m2".into(),
            from: "M2".into(),
            to: terminal_id.into(),
        },
    ];

    let mut initial = None;
    if inflation {
        nodes.push(EventNode {
            id: "origin".into(),
            kind: NodeKind::Initial,
        });
        for (edge_id, to) in [("g_s", "S"), ("g_r1", "R1"), ("g_r2", "R2")] {
            edges.push(CarrierEdge {
                id: edge_id.into(),
                from: "origin".into(),
                to: to.into(),
            });
        }
        initial = Some("origin".to_string());
    }

    let mut table_order: Vec<CarrierRef> = BELL_CARRIERS
        .iter()
        .map(|c| CarrierRef::Edge(c.to_string()))
        .collect();
    table_order.push(CarrierRef::Node(terminal_id.into()));

    Ok(CausalGraph::new("bell_pms", nodes, edges, initial, table_order)?.with_tag("bell_pms"))
}

pub fn descriptor(gamma_block: bool) -> ScenarioDescriptor {
    let expected = if gamma_block {
        vec![
            Expectation::LifeCount {
                carrier: "m1".into(),
                count: 12,
            },
            Expectation::TotalAbsorbed { value: 1.0 },
        ]
    } else {
        vec![
            Expectation::LifeCount {
                carrier: "r1".into(),
                count: 3,
            },
            Expectation::LifeCount {
                carrier: "r2".into(),
                count: 3,
            },
            Expectation::LifeCount {
                carrier: "s1".into(),
                count: 4,
            },
            Expectation::LifeCount {
                carrier: "s2".into(),
                count: 4,
            },
            Expectation::LifeCount {
                carrier: "m1".into(),
                count: 12,
            },
            Expectation::LifeCount {
                carrier: "m2".into(),
                count: 12,
            },
            Expectation::LifeCount {
                carrier: "E".into(),
                count: 72,
            },
            Expectation::HistoryCount {
                carrier: "m1".into(),
                count: 48,
            },
            Expectation::HistoryCount {
                carrier: "E".into(),
                count: 288,
            },
        ]
    };
    ScenarioDescriptor {
        name: if gamma_block {
            "bell_pms_gamma".into()
        } else {
            "bell_pms".into()
        },
        inflation: false,
        params: ScenarioParams::BellPms { gamma_block },
        expected,
    }
}
