//! Sealed-room chain: a microscopic random event decides the cat's fate at
//! t1, the friend inside learns it at t2, the outside observer at t3. Under
//! parallel lives both branches persist at every stage, and the outside
//! observer's own reduced state is untouched by how the inside interaction
//! is rendered.

use std::collections::BTreeMap;

use super::{Expectation, ScenarioDescriptor, ScenarioParams};
use crate::error::{Error, Result};
use crate::graph::{
    CarrierEdge, CarrierRef, CausalGraph, EventNode, MeasurementKind, NodeKind, SourceOutput,
};
use crate::oracle::{partial_trace, DensityMatrix, GateSpec, Ket, ProductBasis, StatePrep, TOL};

pub fn wigner_graph(a: f64, b: f64, inflation: bool) -> Result<CausalGraph> {
    if (a * a + b * b - 1.0).abs() > TOL {
        return Err(Error::InvalidParams(format!(
            "branch amplitudes ({a}, {b}) are not normalized"
        )));
    }
    let mut nodes = vec![
        EventNode {
            id: "S".into(),
            kind: NodeKind::Source {
                prep: StatePrep::Qubit { a, b },
                outputs: vec![SourceOutput {
                    edge: "g".into(),
                    qubits: vec![0],
                    basis: ProductBasis::computational(1),
                }],
            },
        },
        EventNode {
            id: "T1_cat".into(),
            kind: NodeKind::Measurement {
                measurement: MeasurementKind::Basis {
                    table: BTreeMap::from([("".to_string(), ProductBasis::computational(1))]),
                },
            },
        },
        EventNode {
            id: "T2_friend".into(),
            kind: NodeKind::Measurement {
                measurement: MeasurementKind::ReadOut,
            },
        },
        EventNode {
            id: "T3_observer".into(),
            kind: NodeKind::Measurement {
                measurement: MeasurementKind::ReadOut,
            },
        },
    ];
    let mut edges = vec![
        CarrierEdge {
            id: "g".into(),
            from: "S".into(),
            to: "T1_cat".into(),
        },
        CarrierEdge {
            id: "cat".into(),
            from: "T1_cat".into(),
            to: "T2_friend".into(),
        },
        CarrierEdge {
            id: "friend".into(),
            from: "T2_friend".into(),
            to: "T3_observer".into(),
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
        CarrierRef::Edge("g".into()),
        CarrierRef::Edge("cat".into()),
        CarrierRef::Edge("friend".into()),
        CarrierRef::Node("T3_observer".into()),
    ];
    CausalGraph::new("wigner_friend", nodes, edges, initial, table_order)
}

/// The outside observer's reduced density matrix before t3, computed from
/// the global state with the inside interaction rendered two ways:
/// as a unitary entangling evolution, and as a participant collapse mixed
/// over outcomes. Also compares the room state as the observer describes
/// it (the event qubit traced out) under both renderings.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct RemoteMarginalReport {
    pub observer_delta: f64,
    pub room_delta: f64,
}

pub fn remote_marginal_check(a: f64, b: f64) -> Result<RemoteMarginalReport> {
    // Systems: event qubit 0, cat qubit 1, friend qubit 2, observer qubit 3.
    let event = StatePrep::Qubit { a, b }.prepare()?;
    let rest = Ket::basis_string("000")?;
    let start = event.tensor(&rest)?;
    let cnot = GateSpec::Cnot;
    // t1: the cat correlates with the event.
    let t1 = crate::oracle::apply_unitary(&start, &cnot, &[0, 1])?;

    // Unitary rendering of t2: the friend entangles with the cat.
    let t2_unitary = crate::oracle::apply_unitary(&t1, &cnot, &[1, 2])?;
    let observer_unitary = partial_trace(&t2_unitary, &[3])?;
    let room_unitary = partial_trace(&t2_unitary, &[1, 2])?;

    // Participant-collapse rendering of t2: project the cat, mix outcomes.
    let mut observer_parts = Vec::new();
    let mut room_parts = Vec::new();
    for (bit, weight) in [(0usize, a * a), (1usize, b * b)] {
        if weight < 1e-30 {
            continue;
        }
        let projector = ProductBasis::computational(1).channel_projector(bit);
        let projected = t1.apply(&projector, &[1])?;
        let norm = projected.norm_sqr().sqrt();
        let collapsed = Ket::new(
            projected.num_qubits(),
            projected
                .amplitudes()
                .iter()
                .map(|c| c / norm)
                .collect(),
        )?;
        // The friend's record follows the collapsed cat deterministically.
        let with_friend = crate::oracle::apply_unitary(&collapsed, &cnot, &[1, 2])?;
        observer_parts.push((weight, partial_trace(&with_friend, &[3])?));
        room_parts.push((weight, partial_trace(&with_friend, &[1, 2])?));
    }
    let observer_collapse = DensityMatrix::mixture(&observer_parts)?;
    let room_collapse = DensityMatrix::mixture(&room_parts)?;

    Ok(RemoteMarginalReport {
        observer_delta: observer_unitary.max_abs_diff(&observer_collapse),
        room_delta: room_unitary.max_abs_diff(&room_collapse),
    })
}

pub fn descriptor(a: f64, b: f64) -> ScenarioDescriptor {
    let degenerate = b.abs() < 1e-12 || a.abs() < 1e-12;
    let branch_count = if degenerate { 1 } else { 2 };
    ScenarioDescriptor {
        name: if degenerate {
            "wigner_friend_definite".into()
        } else {
            "wigner_friend".into()
        },
        inflation: false,
        params: ScenarioParams::WignerFriend { a, b },
        expected: vec![
            Expectation::LifeCount {
                carrier: "cat".into(),
                count: branch_count,
            },
            Expectation::LifeCount {
                carrier: "friend".into(),
                count: branch_count,
            },
            Expectation::LifeCount {
                carrier: "T3_observer".into(),
                count: branch_count,
            },
            Expectation::RemoteMarginalDelta { max: 1e-9 },
        ],
    }
}
