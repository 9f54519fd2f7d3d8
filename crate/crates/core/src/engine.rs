//! Executes a causal graph: events fire in topological order, writing each
//! carrier payload exactly once. Forward mode propagates full life sets;
//! selected mode replays a single pinned future as a classical check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{BlockFilter, CarrierRef, CausalGraph, MeasurementKind, NodeKind};
use crate::lives::{
    join_carriers, split_on_preparation, Carrier, CarrierChannels, CondOp, Life, LifeLabel,
    RecordCond, RecordId, RecordStore, Variant, VariantAnchor, VariantStep, PRUNE_AMPLITUDE,
};
use crate::oracle::{projector_onto, Ket};

/// Fluid swallowed at a block node, per absorbed channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorbedFluid {
    pub entries: Vec<(String, f64)>,
    pub total: f64,
}

/// The set of live carriers right after one event fired, with the joint
/// fluid across the cut.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrontierSnapshot {
    pub after_node: String,
    pub carriers: Vec<String>,
    pub joint_fluid: f64,
    pub absorbed: f64,
}

#[derive(Clone, Debug, Default)]
pub enum ExecMode {
    #[default]
    Forward,
    /// Pins per node: option label for random choices, outcome value for
    /// measurements.
    Selected(BTreeMap<String, String>),
}

#[derive(Clone, Debug)]
pub struct Execution {
    pub schedule: Vec<String>,
    pub carriers: BTreeMap<String, Carrier>,
    pub node_results: BTreeMap<String, Carrier>,
    pub absorbed: BTreeMap<String, AbsorbedFluid>,
    pub records: RecordStore,
    pub initial_record: Option<RecordId>,
    pub frontiers: Vec<FrontierSnapshot>,
}

impl Execution {
    pub fn carrier_for(&self, r: &CarrierRef) -> Option<&Carrier> {
        match r {
            CarrierRef::Edge(id) => self.carriers.get(id),
            CarrierRef::Node(id) => self.node_results.get(id),
        }
    }

    pub fn total_absorbed(&self) -> f64 {
        self.absorbed.values().map(|a| a.total).sum()
    }

    /// Fold-join a set of carriers and total the joint fluid; this is the
    /// probability mass across an antichain cut.
    pub fn joint_fluid(&self, carriers: &[&Carrier]) -> Result<f64> {
        let mut iter = carriers.iter();
        let Some(first) = iter.next() else {
            return Ok(0.0);
        };
        let mut acc: Carrier = (**first).clone();
        for c in iter {
            acc = join_carriers(&self.records, &acc, c, "cut", "cut")?;
        }
        Ok(acc.total_fluid())
    }
}

pub fn run_forward(graph: &CausalGraph) -> Result<Execution> {
    run(graph, &ExecMode::Forward)
}

pub fn run_selected(graph: &CausalGraph, pins: &BTreeMap<String, String>) -> Result<Execution> {
    run(graph, &ExecMode::Selected(pins.clone()))
}

pub fn run(graph: &CausalGraph, mode: &ExecMode) -> Result<Execution> {
    let schedule = graph.topological_schedule()?;
    let mut exec = Execution {
        schedule: schedule.clone(),
        carriers: BTreeMap::new(),
        node_results: BTreeMap::new(),
        absorbed: BTreeMap::new(),
        records: RecordStore::default(),
        initial_record: None,
        frontiers: Vec::new(),
    };
    let mut executed: Vec<String> = Vec::new();
    for node_id in &schedule {
        step(graph, &mut exec, node_id, mode)?;
        executed.push(node_id.clone());
        if matches!(mode, ExecMode::Forward) {
            let snapshot = frontier_snapshot(graph, &exec, &executed, node_id)?;
            exec.frontiers.push(snapshot);
        }
    }
    Ok(exec)
}

fn frontier_snapshot(
    graph: &CausalGraph,
    exec: &Execution,
    executed: &[String],
    after: &str,
) -> Result<FrontierSnapshot> {
    let done = |id: &str| executed.iter().any(|e| e == id);
    let mut names = Vec::new();
    let mut carriers: Vec<&Carrier> = Vec::new();
    for edge in graph.edges() {
        if exec.carriers.contains_key(&edge.id) && !done(&edge.to) {
            names.push(edge.id.clone());
            carriers.push(&exec.carriers[&edge.id]);
        }
    }
    for (node, result) in &exec.node_results {
        names.push(format!("node:{node}"));
        carriers.push(result);
    }
    let joint = exec.joint_fluid(&carriers)?;
    Ok(FrontierSnapshot {
        after_node: after.to_string(),
        carriers: names,
        joint_fluid: joint,
        absorbed: exec.total_absorbed(),
    })
}

fn step(graph: &CausalGraph, exec: &mut Execution, node_id: &str, mode: &ExecMode) -> Result<()> {
    let node = graph.node(node_id)?;
    match &node.kind {
        NodeKind::Initial => run_initial(graph, exec, node_id),
        NodeKind::Source { prep, outputs } => run_source(graph, exec, node_id, prep, outputs),
        NodeKind::RandomChoice { options } => run_choice(graph, exec, node_id, options, mode),
        NodeKind::Unitary { gate } => run_unitary(graph, exec, node_id, gate),
        NodeKind::Measurement { measurement } => {
            run_measurement(graph, exec, node_id, measurement, mode)
        }
        NodeKind::Join => run_join(graph, exec, node_id),
        NodeKind::Block { filter } => run_block(graph, exec, node_id, filter),
    }
}

fn write_edge(exec: &mut Execution, edge: &str, carrier: Carrier) {
    // Write-once contract: an edge payload is never overwritten.
    let prior = exec.carriers.insert(edge.to_string(), carrier);
    debug_assert!(prior.is_none(), "carrier {edge} written twice");
}

fn deliver(graph: &CausalGraph, exec: &mut Execution, node_id: &str, carrier: Carrier) {
    let outputs = graph.outputs_of(node_id);
    if let Some(edge) = outputs.first() {
        write_edge(exec, &edge.id, carrier);
    } else {
        exec.node_results.insert(node_id.to_string(), carrier);
    }
}

fn initial_extras(exec: &Execution) -> Vec<RecordId> {
    exec.initial_record.into_iter().collect()
}

fn genesis_step(graph: &CausalGraph) -> Option<VariantStep> {
    graph.initial_node().map(|id| VariantStep {
        node: id.to_string(),
        label: "origin".into(),
        anchor: None,
    })
}

fn run_initial(graph: &CausalGraph, exec: &mut Execution, node_id: &str) -> Result<()> {
    let state = Ket::basis_string("0")?;
    let record = exec
        .records
        .insert(node_id, state, BTreeMap::from([("universe".into(), vec![])]));
    exec.initial_record = Some(record);
    for edge in graph.outputs_of(node_id) {
        let label = LifeLabel::basis("origin");
        let carrier = Carrier {
            system_id: edge.id.clone(),
            lives: vec![Life {
                label: label.clone(),
                amplitude: Complex64::ONE,
                conditioning: vec![RecordCond { record, ops: vec![] }],
                variants: vec![Variant {
                    steps: vec![VariantStep {
                        node: node_id.to_string(),
                        label: label.to_string(),
                        anchor: None,
                    }],
                }],
                channel: None,
            }],
            channels: CarrierChannels::Labels {
                labels: vec!["origin".into()],
            },
            record_qubits: BTreeMap::new(),
            independent: true,
        };
        write_edge(exec, &edge.id, carrier);
    }
    Ok(())
}

fn run_source(
    graph: &CausalGraph,
    exec: &mut Execution,
    node_id: &str,
    prep: &crate::oracle::StatePrep,
    outputs: &[crate::graph::SourceOutput],
) -> Result<()> {
    let state = prep.prepare()?;
    let participants = outputs
        .iter()
        .map(|leg| (leg.edge.clone(), leg.qubits.clone()))
        .collect();
    let record = exec.records.insert(node_id, state, participants);
    let extras = initial_extras(exec);
    for leg in outputs {
        let mut carrier = split_on_preparation(
            &exec.records,
            record,
            &leg.edge,
            &leg.qubits,
            &leg.basis,
            &extras,
        )?;
        if let Some(step) = genesis_step(graph) {
            for life in &mut carrier.lives {
                for variant in &mut life.variants {
                    variant.steps.insert(0, step.clone());
                }
            }
        }
        write_edge(exec, &leg.edge, carrier);
    }
    Ok(())
}

fn run_choice(
    graph: &CausalGraph,
    exec: &mut Execution,
    node_id: &str,
    options: &[String],
    mode: &ExecMode,
) -> Result<()> {
    let selected: Option<&String> = match mode {
        ExecMode::Selected(pins) => pins.get(node_id),
        ExecMode::Forward => None,
    };
    let chosen: Vec<&String> = match selected {
        Some(pin) => options.iter().filter(|o| *o == pin).collect(),
        None => options.iter().collect(),
    };
    if chosen.is_empty() {
        return Err(Error::InvalidParams(format!(
            "pinned option for {node_id} is not among its options"
        )));
    }
    let amp = Complex64::new(1.0 / (chosen.len() as f64).sqrt(), 0.0);
    let conditioning: Vec<RecordCond> = initial_extras(exec)
        .into_iter()
        .map(|record| RecordCond { record, ops: vec![] })
        .collect();
    let lives = chosen
        .iter()
        .map(|opt| {
            let mut steps = Vec::new();
            if let Some(step) = genesis_step(graph) {
                steps.push(step);
            }
            steps.push(VariantStep {
                node: node_id.to_string(),
                label: (*opt).clone(),
                anchor: None,
            });
            Life {
                label: LifeLabel::choice((*opt).clone()),
                amplitude: amp,
                conditioning: conditioning.clone(),
                variants: vec![Variant { steps }],
                channel: None,
            }
        })
        .collect();
    for edge in graph.outputs_of(node_id) {
        let carrier = Carrier {
            system_id: edge.id.clone(),
            lives,
            channels: CarrierChannels::Labels {
                labels: options.to_vec(),
            },
            record_qubits: BTreeMap::new(),
            independent: true,
        };
        write_edge(exec, &edge.id, carrier);
        return Ok(());
    }
    Ok(())
}

/// The single record a system carrier embodies qubits of.
fn lineage_record(carrier: &Carrier) -> Result<(RecordId, Vec<usize>)> {
    let mut found = None;
    for (&record, qubits) in &carrier.record_qubits {
        if !qubits.is_empty() {
            if found.is_some() {
                return Err(Error::InvalidParams(format!(
                    "carrier {} embodies qubits of several records",
                    carrier.system_id
                )));
            }
            found = Some((record, qubits.clone()));
        }
    }
    found.ok_or_else(|| {
        Error::InvalidParams(format!(
            "carrier {} is not a system carrier",
            carrier.system_id
        ))
    })
}

fn carrier_basis(carrier: &Carrier) -> Result<&crate::oracle::ProductBasis> {
    match &carrier.channels {
        CarrierChannels::Qubits { basis } => Ok(basis),
        CarrierChannels::Labels { .. } => Err(Error::InvalidParams(format!(
            "carrier {} has no qubit structure",
            carrier.system_id
        ))),
    }
}

/// Shared chain of local operations on the lineage record. All lives of a
/// system carrier hold the same chain.
fn carrier_chain(carrier: &Carrier, record: RecordId) -> Vec<CondOp> {
    carrier
        .lives
        .first()
        .and_then(|l| l.conditioning.iter().find(|c| c.record == record))
        .map(|c| c.ops.clone())
        .unwrap_or_default()
}

fn apply_ops(state: &Ket, ops: &[CondOp]) -> Result<Ket> {
    let mut out = state.clone();
    for op in ops {
        out = match op {
            CondOp::Unitary { qubits, matrix } | CondOp::Project { qubits, matrix, .. } => {
                out.apply(matrix, qubits)?
            }
        };
    }
    Ok(out)
}

fn run_unitary(
    graph: &CausalGraph,
    exec: &mut Execution,
    node_id: &str,
    gate: &crate::oracle::GateSpec,
) -> Result<()> {
    let input = graph
        .inputs_of(node_id)
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidGraph(format!("unitary {node_id} has no input")))?;
    let subject = exec.carriers[&input.id].clone();
    let (record_id, qubits) = lineage_record(&subject)?;
    let basis = carrier_basis(&subject)?.clone();
    if gate.num_qubits() != qubits.len() {
        return Err(Error::DimensionMismatch {
            expected: qubits.len(),
            got: gate.num_qubits(),
        });
    }
    let matrix = gate.matrix()?;
    let mut chain = carrier_chain(&subject, record_id);
    chain.push(CondOp::Unitary {
        qubits: qubits.clone(),
        matrix: matrix.clone(),
    });
    let record = exec.records.get(record_id);
    let evolved = apply_ops(&record.state, &chain)?;
    let full = qubits.len() == record.state.num_qubits();

    // Channel-space transition amplitudes decide which old histories flow
    // into which new channel.
    let analysis = basis.analysis_matrix();
    let local = analysis.mul(&matrix).mul(&analysis.adjoint());

    let mut conditioning: Vec<RecordCond> = subject
        .lives
        .first()
        .map(|l| l.conditioning.clone())
        .unwrap_or_default();
    if let Some(entry) = conditioning.iter_mut().find(|c| c.record == record_id) {
        entry.ops = chain.clone();
    } else {
        conditioning.push(RecordCond {
            record: record_id,
            ops: chain.clone(),
        });
        conditioning.sort_by_key(|c| c.record);
    }

    let old_index = |label: &LifeLabel| -> Option<usize> {
        basis.index_of(&label.to_string())
    };

    let mut lives = Vec::new();
    for i in 0..basis.dim() {
        let vector = basis.channel_vector(i);
        let amplitude = if full {
            let mut overlap = Complex64::ZERO;
            for (j, v) in vector.iter().enumerate() {
                overlap += v.conj() * evolved.amplitude(j);
            }
            overlap
        } else {
            Complex64::new(evolved.projection_weight(&vector, &qubits)?.sqrt(), 0.0)
        };
        let mut variants = Vec::new();
        for old in &subject.lives {
            let Some(j) = old_index(&old.label) else {
                continue;
            };
            if local[(i, j)].norm() < PRUNE_AMPLITUDE {
                continue;
            }
            for v in &old.variants {
                let mut steps = v.steps.clone();
                steps.push(VariantStep {
                    node: node_id.to_string(),
                    label: basis.label(i),
                    anchor: None,
                });
                variants.push(Variant { steps });
            }
        }
        let life = Life {
            label: LifeLabel::basis(basis.label(i)),
            amplitude,
            conditioning: conditioning.clone(),
            variants,
            channel: Some(VariantAnchor {
                record: record_id,
                qubits: qubits.clone(),
                vector,
            }),
        };
        if life.amplitude.norm() >= PRUNE_AMPLITUDE {
            lives.push(life);
        }
    }
    let mut carrier = Carrier {
        system_id: graph
            .outputs_of(node_id)
            .first()
            .map(|e| e.id.clone())
            .unwrap_or_else(|| node_id.to_string()),
        lives,
        channels: CarrierChannels::Qubits { basis },
        record_qubits: subject.record_qubits.clone(),
        independent: false,
    };
    carrier.lives.sort_by(|a, b| a.label.cmp(&b.label));
    deliver(graph, exec, node_id, carrier);
    Ok(())
}

/// Split the non-genesis inputs of a measurement into (subject, setting).
fn measurement_inputs<'a>(
    graph: &'a CausalGraph,
    node_id: &str,
) -> Result<(&'a crate::graph::CarrierEdge, Option<&'a crate::graph::CarrierEdge>)> {
    let inputs: Vec<_> = graph
        .inputs_of(node_id)
        .into_iter()
        .filter(|e| {
            graph
                .initial_node()
                .map(|init| e.from != init)
                .unwrap_or(true)
        })
        .collect();
    let mut subject = None;
    let mut setting = None;
    for edge in inputs {
        let from_kind = &graph.node(&edge.from)?.kind;
        if matches!(from_kind, NodeKind::RandomChoice { .. }) {
            if setting.is_some() {
                return Err(Error::InvalidGraph(format!(
                    "measurement {node_id} has two setting inputs"
                )));
            }
            setting = Some(edge);
        } else {
            if subject.is_some() {
                return Err(Error::InvalidGraph(format!(
                    "measurement {node_id} has two subject inputs"
                )));
            }
            subject = Some(edge);
        }
    }
    let subject = subject.ok_or_else(|| {
        Error::InvalidGraph(format!("measurement {node_id} has no subject input"))
    })?;
    Ok((subject, setting))
}

/// Outcome channels of one measurement table entry, as label + projector in
/// the subject's channel space.
fn outcome_projectors(
    kind: &MeasurementKind,
    setting_label: &str,
    subject: &Carrier,
) -> Result<Vec<(String, crate::oracle::CMatrix)>> {
    match kind {
        MeasurementKind::Basis { table } => {
            let basis = table.get(setting_label).ok_or_else(|| {
                Error::InvalidParams(format!("no measurement for setting {setting_label:?}"))
            })?;
            basis.validate()?;
            let carrier_qubits = carrier_basis(subject)?.num_qubits();
            if basis.num_qubits() != carrier_qubits {
                return Err(Error::DimensionMismatch {
                    expected: carrier_qubits,
                    got: basis.num_qubits(),
                });
            }
            Ok((0..basis.dim())
                .map(|i| (basis.label(i), basis.channel_projector(i)))
                .collect())
        }
        MeasurementKind::Context { table } => {
            let ctx = table.get(setting_label).ok_or_else(|| {
                Error::InvalidParams(format!("no context for setting {setting_label:?}"))
            })?;
            let carrier_qubits = carrier_basis(subject)?.num_qubits();
            if ctx.num_qubits() != carrier_qubits {
                return Err(Error::DimensionMismatch {
                    expected: carrier_qubits,
                    got: ctx.num_qubits(),
                });
            }
            Ok(ctx.outcomes())
        }
        MeasurementKind::ReadOut => Err(Error::InvalidParams(
            "read-out measurements have no projectors".into(),
        )),
    }
}

fn run_measurement(
    graph: &CausalGraph,
    exec: &mut Execution,
    node_id: &str,
    kind: &MeasurementKind,
    mode: &ExecMode,
) -> Result<()> {
    let (subject_edge, setting_edge) = measurement_inputs(graph, node_id)?;
    let subject = exec.carriers[&subject_edge.id].clone();
    let setting = setting_edge.map(|e| exec.carriers[&e.id].clone());

    if matches!(kind, MeasurementKind::ReadOut) {
        let lives = subject
            .lives
            .iter()
            .map(|l| {
                let label = LifeLabel::outcome(None, l.label.to_string());
                let mut variants = Vec::new();
                for v in &l.variants {
                    let mut steps = v.steps.clone();
                    steps.push(VariantStep {
                        node: node_id.to_string(),
                        label: label.to_string(),
                        anchor: None,
                    });
                    variants.push(Variant { steps });
                }
                Life {
                    label,
                    amplitude: l.amplitude,
                    conditioning: l.conditioning.clone(),
                    variants,
                    channel: None,
                }
            })
            .collect::<Vec<_>>();
        let labels = lives.iter().map(|l| l.label.to_string()).collect();
        let carrier = Carrier {
            system_id: output_id(graph, node_id),
            lives,
            channels: CarrierChannels::Labels { labels },
            record_qubits: subject.record_qubits.clone(),
            independent: false,
        };
        deliver(graph, exec, node_id, carrier);
        return Ok(());
    }

    let (record_id, qubits) = lineage_record(&subject)?;
    let chain = carrier_chain(&subject, record_id);
    let record_state = exec.records.get(record_id).state.clone();
    let pin: Option<&String> = match mode {
        ExecMode::Selected(pins) => pins.get(node_id),
        ExecMode::Forward => None,
    };

    // Every subject life's history flows into every outcome channel;
    // zero-amplitude histories are still counted.
    let subject_variants: Vec<Variant> = subject
        .lives
        .iter()
        .flat_map(|l| l.variants.iter().cloned())
        .collect();

    let default_setting = Life {
        label: LifeLabel::choice(""),
        amplitude: Complex64::ONE,
        conditioning: initial_extras(exec)
            .into_iter()
            .map(|record| RecordCond { record, ops: vec![] })
            .collect(),
        variants: vec![Variant { steps: vec![] }],
        channel: None,
    };
    let setting_lives: Vec<&Life> = match &setting {
        Some(c) => c.lives.iter().collect(),
        None => vec![&default_setting],
    };

    let mut lives = Vec::new();
    for setting_life in setting_lives {
        let setting_key = match &setting {
            Some(_) => setting_life.label.to_string(),
            None => String::new(),
        };
        let outcomes = outcome_projectors(kind, &setting_key, &subject)?;
        for (value, projector) in outcomes {
            if let Some(p) = pin {
                if *p != value {
                    continue;
                }
            }
            let mut ops = chain.clone();
            ops.push(CondOp::Project {
                qubits: qubits.clone(),
                matrix: projector,
                outcome: value.clone(),
            });
            let weight = apply_ops(&record_state, &ops)?.norm_sqr();
            let amplitude = if pin.is_some() {
                Complex64::ONE
            } else {
                setting_life.amplitude * weight.sqrt()
            };
            let setting_opt = (!setting_key.is_empty()).then_some(setting_key.as_str());
            let label = LifeLabel::outcome(setting_opt, value.clone());

            let mut conditioning: Vec<RecordCond> = setting_life.conditioning.clone();
            for cond in subject
                .lives
                .first()
                .map(|l| l.conditioning.as_slice())
                .unwrap_or(&[])
            {
                if cond.record != record_id && !conditioning.iter().any(|c| c.record == cond.record)
                {
                    conditioning.push(cond.clone());
                }
            }
            conditioning.push(RecordCond {
                record: record_id,
                ops,
            });
            conditioning.sort_by_key(|c| c.record);

            let step = VariantStep {
                node: node_id.to_string(),
                label: label.to_string(),
                anchor: None,
            };
            let mut variants = Vec::new();
            for sv in &setting_life.variants {
                for subv in &subject_variants {
                    let mut steps = sv.steps.clone();
                    steps.extend(subv.steps.iter().cloned());
                    steps.push(step.clone());
                    variants.push(Variant { steps });
                }
            }
            let life = Life {
                label,
                amplitude,
                conditioning,
                variants,
                channel: None,
            };
            if life.amplitude.norm() >= PRUNE_AMPLITUDE {
                lives.push(life);
            }
        }
    }
    let labels = lives.iter().map(|l| l.label.to_string()).collect();
    let mut carrier = Carrier {
        system_id: output_id(graph, node_id),
        lives,
        channels: CarrierChannels::Labels { labels },
        record_qubits: subject.record_qubits.clone(),
        independent: false,
    };
    carrier.lives.sort_by(|a, b| a.label.cmp(&b.label));
    deliver(graph, exec, node_id, carrier);
    Ok(())
}

fn output_id(graph: &CausalGraph, node_id: &str) -> String {
    graph
        .outputs_of(node_id)
        .first()
        .map(|e| e.id.clone())
        .unwrap_or_else(|| node_id.to_string())
}

fn non_genesis_inputs<'a>(
    graph: &'a CausalGraph,
    node_id: &str,
) -> Vec<&'a crate::graph::CarrierEdge> {
    let mut inputs: Vec<_> = graph
        .inputs_of(node_id)
        .into_iter()
        .filter(|e| {
            graph
                .initial_node()
                .map(|init| e.from != init)
                .unwrap_or(true)
        })
        .collect();
    inputs.sort_by(|a, b| a.id.cmp(&b.id));
    inputs
}

fn run_join(graph: &CausalGraph, exec: &mut Execution, node_id: &str) -> Result<()> {
    let inputs = non_genesis_inputs(graph, node_id);
    let mut iter = inputs.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidGraph(format!("join {node_id} has no inputs")))?;
    let mut acc = exec.carriers[&first.id].clone();
    for edge in iter {
        let next = &exec.carriers[&edge.id];
        acc = join_carriers(&exec.records, &acc, next, node_id, &output_id(graph, node_id))?;
    }
    deliver(graph, exec, node_id, acc);
    Ok(())
}

fn run_block(
    graph: &CausalGraph,
    exec: &mut Execution,
    node_id: &str,
    filter: &BlockFilter,
) -> Result<()> {
    let inputs = non_genesis_inputs(graph, node_id);
    let mut iter = inputs.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidGraph(format!("block {node_id} has no inputs")))?;
    let mut carrier = exec.carriers[&first.id].clone();
    for edge in iter {
        let next = &exec.carriers[&edge.id];
        carrier = join_carriers(&exec.records, &carrier, next, node_id, node_id)?;
    }

    let absorbs = |label: &LifeLabel| -> bool {
        match filter {
            BlockFilter::All => true,
            BlockFilter::Channels { labels } => labels.contains(&label.to_string()),
        }
    };
    let mut entries = Vec::new();
    let mut survivors = Vec::new();
    for life in carrier.lives {
        if absorbs(&life.label) {
            entries.push((life.label.to_string(), life.fluid()));
        } else {
            survivors.push(life);
        }
    }
    let total = entries.iter().map(|(_, f)| f).sum();
    exec.absorbed
        .insert(node_id.to_string(), AbsorbedFluid { entries, total });

    if matches!(filter, BlockFilter::All) {
        return Ok(());
    }

    // Passing block on a system carrier: the loss enters the local chain so
    // downstream record-based probabilities stay absolute.
    carrier.lives = survivors;
    if let (Ok((record_id, qubits)), Ok(basis)) =
        (lineage_record(&carrier), carrier_basis(&carrier).cloned())
    {
        let dim = basis.dim();
        let mut keep = crate::oracle::CMatrix::zeros(dim);
        for life in &carrier.lives {
            if let Some(i) = basis.index_of(&life.label.to_string()) {
                keep = keep.add(&projector_onto(&basis.channel_vector(i)));
            }
        }
        let op = CondOp::Project {
            qubits,
            matrix: keep,
            outcome: format!("pass:{node_id}"),
        };
        for life in &mut carrier.lives {
            if let Some(entry) = life.conditioning.iter_mut().find(|c| c.record == record_id) {
                entry.ops.push(op.clone());
            } else {
                life.conditioning.push(RecordCond {
                    record: record_id,
                    ops: vec![op.clone()],
                });
                life.conditioning.sort_by_key(|c| c.record);
            }
        }
    }
    carrier.system_id = output_id(graph, node_id);
    deliver(graph, exec, node_id, carrier);
    Ok(())
}
