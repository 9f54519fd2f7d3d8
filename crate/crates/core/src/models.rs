//! The four interpretation engines. Each produces a per-carrier
//! information table over an executed causal graph; a direct global-state
//! oracle path provides the distribution they are all compared against.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::contextuality::{parity_product_argument, search_assignments, PeresMerminSquare};
use crate::engine::{run_forward, run_selected, Execution};
use crate::error::{Error, Result};
use crate::graph::{CarrierRef, CausalGraph, MeasurementKind, NodeKind};
use crate::lives::{Carrier, CarrierChannels, CondOp, LifeLabel};
use crate::oracle::{CMatrix, Ket};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LocalRealist,
    InflationSuperdeterminism,
    ParallelLives,
    ParallelLivesInflation,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "local_realist" => Ok(Self::LocalRealist),
            "inflation" => Ok(Self::InflationSuperdeterminism),
            "parallel_lives" => Ok(Self::ParallelLives),
            "pl_inflation" => Ok(Self::ParallelLivesInflation),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LocalRealist => "local_realist",
            Self::InflationSuperdeterminism => "inflation",
            Self::ParallelLives => "parallel_lives",
            Self::ParallelLivesInflation => "pl_inflation",
        }
    }

    /// Whether the model assumes a common initial node in every past cone.
    pub fn requires_initial(&self) -> bool {
        matches!(
            self,
            Self::InflationSuperdeterminism | Self::ParallelLivesInflation
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One life as reported in a table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifeEntry {
    pub label: String,
    pub amplitude: (f64, f64),
    pub fluid: f64,
    /// Downstream branch references ("bras") in the inflation models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_selection: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifeTableRow {
    pub carrier: String,
    pub life_count: usize,
    pub history_count: usize,
    pub lives: Vec<LifeEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifeTable {
    pub model: ModelKind,
    pub rows: Vec<LifeTableRow>,
}

impl LifeTable {
    pub fn row(&self, carrier: &str) -> Option<&LifeTableRow> {
        self.rows.iter().find(|r| r.carrier == carrier)
    }

    pub fn life_count(&self, carrier: &str) -> usize {
        self.row(carrier).map(|r| r.life_count).unwrap_or(0)
    }

    pub fn history_count(&self, carrier: &str) -> usize {
        self.row(carrier).map(|r| r.history_count).unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenVariableRow {
    pub carrier: String,
    pub pre_selected: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_selected: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenVariableTable {
    pub rows: Vec<HiddenVariableRow>,
}

impl HiddenVariableTable {
    pub fn row(&self, carrier: &str) -> Option<&HiddenVariableRow> {
        self.rows.iter().find(|r| r.carrier == carrier)
    }
}

/// The one future nature selected, with per-carrier realized values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedFuture {
    pub outcome: String,
    pub per_carrier: BTreeMap<String, String>,
    pub seed: u64,
}

/// Structured impossibility report for the local-realist engine: the table
/// it tries to populate does not exist.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImpossibilityReport {
    pub total_assignments: usize,
    pub satisfying_assignments: usize,
    pub parity_product: i8,
    pub assignment_square_product: i8,
    pub contradiction: bool,
}

/// Run the parallel-lives engine over the schedule and report life counts,
/// history counts and fluid shares per carrier.
pub fn run_parallel_lives(graph: &CausalGraph) -> Result<(LifeTable, Execution)> {
    let exec = run_forward(graph)?;
    let table = life_table(graph, &exec, ModelKind::ParallelLives, false)?;
    Ok((table, exec))
}

/// Parallel lives with a common initial record: lives split ahead of the
/// measurements they feed, and every life carries post-selection tags.
pub fn run_pl_inflation(graph: &CausalGraph) -> Result<(LifeTable, Execution)> {
    if graph.initial_node().is_none() {
        return Err(Error::MissingInitialNode);
    }
    let exec = run_forward(graph)?;
    let table = life_table(graph, &exec, ModelKind::ParallelLivesInflation, true)?;
    Ok((table, exec))
}

/// Attempt the local-realist hidden-variable table; the structured failure
/// is the correct output.
pub fn run_local_realist(graph: &CausalGraph) -> Result<ImpossibilityReport> {
    if !graph.tags.contains("bell_pms") {
        return Err(Error::UnsupportedScenario {
            model: ModelKind::LocalRealist.name().into(),
            scenario: graph.name.clone(),
            reason: "the local-realist table is defined for the Bell square experiment".into(),
        });
    }
    let square = PeresMerminSquare::standard();
    let search = search_assignments(&square);
    let argument = parity_product_argument(&square);
    Ok(ImpossibilityReport {
        total_assignments: search.total_assignments,
        satisfying_assignments: search.satisfying,
        parity_product: argument.parity_product,
        assignment_square_product: argument.assignment_square_product,
        contradiction: argument.contradiction,
    })
}

pub struct InflationRun {
    pub table: HiddenVariableTable,
    pub selected: SelectedFuture,
    /// The forward simulation the selection was drawn from: the full
    /// possibility sets each carrier holds.
    pub trace: LifeTable,
    pub execution: Execution,
}

/// Simulate all possible futures (the pre-split forward pass), then sample
/// one by its quantum weight and back-fill every carrier with its single
/// consistent value.
pub fn run_inflation(graph: &CausalGraph, seed: u64) -> Result<InflationRun> {
    if graph.initial_node().is_none() {
        return Err(Error::MissingInitialNode);
    }
    let exec = run_forward(graph)?;
    let trace = life_table(graph, &exec, ModelKind::InflationSuperdeterminism, true)?;
    let terminal = terminal_carrier(graph, &exec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let life = terminal.sample_life(&mut rng)?;
    let selected = backfill(graph, life.label.clone(), seed)?;
    let table = hidden_variable_table(graph, &selected)?;
    Ok(InflationRun {
        table,
        selected,
        trace,
        execution: exec,
    })
}

/// Number of samples and their counts over terminal outcomes; each sample
/// is an independent seeded selection, so any one of them can be replayed.
pub fn sample_terminal_distribution(
    graph: &CausalGraph,
    base_seed: u64,
    samples: u64,
) -> Result<BTreeMap<String, u64>> {
    let exec = run_forward(graph)?;
    let terminal = terminal_carrier(graph, &exec)?;
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(i));
        let life = terminal.sample_life(&mut rng)?;
        *counts.entry(life.label.to_string()).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Re-execute the graph with the selected values pinned and check the
/// terminal outcome reproduces deterministically.
pub fn replay_selected(graph: &CausalGraph, selected: &SelectedFuture) -> Result<bool> {
    let pins = selection_pins(graph, &selected.outcome)?;
    let exec = run_selected(graph, &pins)?;
    let terminal = terminal_carrier(graph, &exec)?;
    Ok(terminal.lives.len() == 1 && terminal.lives[0].label.to_string() == selected.outcome)
}

/// Terminal carrier of a graph: the node-result entry of the table order,
/// or the payload of the last listed carrier.
pub fn terminal_carrier<'a>(graph: &CausalGraph, exec: &'a Execution) -> Result<&'a Carrier> {
    let r = terminal_ref(graph)?;
    exec.carrier_for(&r)
        .ok_or_else(|| Error::InvalidGraph(format!("terminal carrier {} missing", r.id())))
}

pub fn terminal_ref(graph: &CausalGraph) -> Result<CarrierRef> {
    graph
        .table_order
        .iter()
        .rev()
        .find(|r| matches!(r, CarrierRef::Node(_)))
        .or_else(|| graph.table_order.last())
        .cloned()
        .ok_or_else(|| Error::InvalidGraph("graph has no table order".into()))
}

/// Terminal outcome distribution of the parallel-lives run (analytic).
pub fn terminal_distribution(graph: &CausalGraph, exec: &Execution) -> Result<BTreeMap<String, f64>> {
    Ok(terminal_carrier(graph, exec)?.fluid_distribution())
}

fn life_table(
    graph: &CausalGraph,
    exec: &Execution,
    model: ModelKind,
    decorate: bool,
) -> Result<LifeTable> {
    let mut rows = Vec::new();
    for r in &graph.table_order {
        let Some(carrier) = exec.carrier_for(r) else {
            rows.push(LifeTableRow {
                carrier: r.id().to_string(),
                life_count: 0,
                history_count: 0,
                lives: vec![],
            });
            continue;
        };
        let row = if decorate {
            decorated_row(graph, exec, r, carrier)?
        } else {
            plain_row(r.id(), carrier)
        };
        rows.push(row);
    }
    Ok(LifeTable { model, rows })
}

fn plain_row(id: &str, carrier: &Carrier) -> LifeTableRow {
    let lives: Vec<LifeEntry> = carrier
        .lives
        .iter()
        .map(|l| LifeEntry {
            label: l.label.to_string(),
            amplitude: (l.amplitude.re, l.amplitude.im),
            fluid: l.fluid(),
            post_selection: None,
        })
        .collect();
    LifeTableRow {
        carrier: id.to_string(),
        life_count: lives.len(),
        history_count: carrier.history_count(),
        lives,
    }
}

/// Decorate a row for the inflation models: system carriers feeding a
/// measurement are pre-split over that measurement's outcomes; carriers
/// feeding a join carry references to the consistent terminal lives.
fn decorated_row(
    graph: &CausalGraph,
    exec: &Execution,
    r: &CarrierRef,
    carrier: &Carrier,
) -> Result<LifeTableRow> {
    let terminal = terminal_carrier(graph, exec)?;
    match r {
        CarrierRef::Node(id) => {
            // Terminal carrier: the future beyond it is unmodeled.
            let mut row = plain_row(id, carrier);
            for entry in &mut row.lives {
                entry.post_selection = None;
            }
            Ok(row)
        }
        CarrierRef::Edge(id) => {
            let edge = graph.edge(id)?;
            let target = graph.node(&edge.to)?;
            match &target.kind {
                NodeKind::Measurement { measurement }
                    if !matches!(measurement, MeasurementKind::ReadOut) =>
                {
                    let target_out = measurement_output_carrier(graph, exec, &target.id)?;
                    if matches!(carrier.channels, CarrierChannels::Qubits { .. }) {
                        pre_split_row(id, carrier, target_out, exec)
                    } else {
                        // Setting carrier: each option is consistent with the
                        // outcomes it produced.
                        let mut row = plain_row(id, carrier);
                        for entry in &mut row.lives {
                            let tags: Vec<String> = target_out
                                .lives
                                .iter()
                                .filter(|l| match &l.label {
                                    LifeLabel::Outcome { setting, .. } => {
                                        setting.as_deref() == Some(entry.label.as_str())
                                    }
                                    _ => false,
                                })
                                .map(|l| l.label.to_string())
                                .collect();
                            entry.post_selection = Some(tags);
                        }
                        Ok(row)
                    }
                }
                NodeKind::Join | NodeKind::Block { .. } => {
                    let mut row = plain_row(id, carrier);
                    for entry in &mut row.lives {
                        let tags: Vec<String> = terminal
                            .lives
                            .iter()
                            .filter(|t| {
                                t.label
                                    .flatten()
                                    .iter()
                                    .any(|c| c.to_string() == entry.label)
                            })
                            .map(|t| t.label.to_string())
                            .collect();
                        entry.post_selection = Some(tags);
                    }
                    Ok(row)
                }
                _ => Ok(plain_row(id, carrier)),
            }
        }
    }
}

fn measurement_output_carrier<'a>(
    graph: &CausalGraph,
    exec: &'a Execution,
    node: &str,
) -> Result<&'a Carrier> {
    let r = match graph.outputs_of(node).first() {
        Some(e) => CarrierRef::Edge(e.id.clone()),
        None => CarrierRef::Node(node.to_string()),
    };
    exec.carrier_for(&r)
        .ok_or_else(|| Error::InvalidGraph(format!("output of {node} missing")))
}

/// Pre-split a system carrier over the outcomes of the measurement it is
/// about to meet: one life per (channel, outcome) combination, zero-weight
/// combinations included, with the outcome as post-selection tag.
fn pre_split_row(
    id: &str,
    carrier: &Carrier,
    target_out: &Carrier,
    exec: &Execution,
) -> Result<LifeTableRow> {
    let mut lives = Vec::new();
    let mut history_count = 0usize;
    for life in &carrier.lives {
        for out in &target_out.lives {
            // Joint weight of "this channel now, that outcome next":
            // project the evolved record on the channel, then the outcome.
            let mut weight = 0.0f64;
            let mut setting_weight = 1.0f64;
            if let (Some(anchor), LifeLabel::Outcome { .. }) = (&life.channel, &out.label) {
                let record = exec.records.get(anchor.record);
                let mut state = record.state.clone();
                // Outcome conditioning includes the subject chain and the
                // outcome projector; interleave the channel projector after
                // the chain but before the outcome.
                if let Some(cond) = out.conditioning.iter().find(|c| c.record == anchor.record) {
                    let (chain, outcome_ops): (Vec<_>, Vec<_>) = cond
                        .ops
                        .iter()
                        .partition(|op| matches!(op, CondOp::Unitary { .. }));
                    for op in chain {
                        state = apply_cond(op, &state)?;
                    }
                    state = state.apply(
                        &crate::oracle::projector_onto(&anchor.vector),
                        &anchor.qubits,
                    )?;
                    for op in outcome_ops {
                        state = apply_cond(op, &state)?;
                    }
                    weight = state.norm_sqr();
                }
                // The outcome fluid includes its setting weight; recover it
                // so the pre-split fluid carries it exactly once.
                if let Some(cond) = out.conditioning.iter().find(|c| c.record == anchor.record) {
                    let mut s = record.state.clone();
                    for op in &cond.ops {
                        s = apply_cond(op, &s)?;
                    }
                    let bare = s.norm_sqr();
                    if bare > 1e-300 {
                        setting_weight = out.fluid() / bare;
                    }
                }
            }
            let fluid = setting_weight * weight;
            lives.push(LifeEntry {
                label: format!("{}>{}", life.label, out.label),
                amplitude: (fluid.sqrt(), 0.0),
                fluid,
                post_selection: Some(vec![out.label.to_string()]),
            });
            history_count += life.variants.len().max(1);
        }
    }
    lives.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(LifeTableRow {
        carrier: id.to_string(),
        life_count: lives.len(),
        history_count,
        lives,
    })
}

fn apply_cond(op: &CondOp, state: &Ket) -> Result<Ket> {
    match op {
        CondOp::Unitary { qubits, matrix } | CondOp::Project { qubits, matrix, .. } => {
            state.apply(matrix, qubits)
        }
    }
}

/// Derive per-carrier realized values from a selected terminal outcome.
fn backfill(graph: &CausalGraph, outcome: LifeLabel, seed: u64) -> Result<SelectedFuture> {
    let components = terminal_components(graph, &outcome)?;
    let mut per_carrier = BTreeMap::new();
    for r in &graph.table_order {
        match r {
            CarrierRef::Node(id) => {
                per_carrier.insert(id.clone(), format!("{outcome} ; post:?"));
            }
            CarrierRef::Edge(id) => {
                let edge = graph.edge(id)?;
                let target = graph.node(&edge.to)?;
                let source = graph.node(&edge.from)?;
                let value = match (&source.kind, &target.kind) {
                    (NodeKind::RandomChoice { options }, _) => {
                        let component = components
                            .iter()
                            .find(|c| match c {
                                LifeLabel::Outcome {
                                    setting: Some(s), ..
                                } => options.contains(s),
                                _ => false,
                            })
                            .ok_or_else(|| {
                                Error::InvalidParams(format!(
                                    "no outcome component matches options of {id}"
                                ))
                            })?;
                        let LifeLabel::Outcome {
                            setting: Some(s), ..
                        } = component
                        else {
                            unreachable!()
                        };
                        format!("{s} ; post:{component}")
                    }
                    (_, NodeKind::Measurement { .. }) => {
                        let pre = source_display(graph, &edge.from)?;
                        let post = component_for_measurement(graph, &edge.to, &components)?;
                        format!("{pre} ; post:{post}")
                    }
                    (NodeKind::Measurement { .. }, _) => {
                        let own = component_for_measurement(graph, &edge.from, &components)?;
                        format!("{own} ; post:{outcome}")
                    }
                    _ => source_display(graph, &edge.from)?,
                };
                per_carrier.insert(id.clone(), value);
            }
        }
    }
    Ok(SelectedFuture {
        outcome: outcome.to_string(),
        per_carrier,
        seed,
    })
}

fn source_display(graph: &CausalGraph, node: &str) -> Result<String> {
    match &graph.node(node)?.kind {
        NodeKind::Source { prep, .. } => Ok(prep.display_name()),
        NodeKind::Unitary { .. } | NodeKind::Block { .. } => {
            let input = graph
                .inputs_of(node)
                .into_iter()
                .next()
                .ok_or_else(|| Error::InvalidGraph(format!("{node} has no input")))?;
            source_display(graph, &input.from)
        }
        other => Ok(other.kind_name().to_string()),
    }
}

/// The terminal label components in join-input order, matched to carriers.
fn terminal_components(graph: &CausalGraph, outcome: &LifeLabel) -> Result<Vec<LifeLabel>> {
    let _ = graph;
    Ok(outcome.flatten().into_iter().cloned().collect())
}

/// Which component of the terminal label belongs to a given measurement
/// node: resolved by setting membership when the measurement has a setting,
/// positionally otherwise.
fn component_for_measurement(
    graph: &CausalGraph,
    node: &str,
    components: &[LifeLabel],
) -> Result<LifeLabel> {
    let node_ref = graph.node(node)?;
    let NodeKind::Measurement { .. } = &node_ref.kind else {
        return Err(Error::InvalidParams(format!("{node} is not a measurement")));
    };
    // Setting-based match.
    let setting_options: Option<Vec<String>> = graph
        .inputs_of(node)
        .iter()
        .find_map(|e| match &graph.node(&e.from).ok()?.kind {
            NodeKind::RandomChoice { options } => Some(options.clone()),
            _ => None,
        });
    if let Some(options) = setting_options {
        for c in components {
            if let LifeLabel::Outcome {
                setting: Some(s), ..
            } = c
            {
                if options.contains(s) {
                    return Ok(c.clone());
                }
            }
        }
        return Err(Error::InvalidParams(format!(
            "no terminal component matches the settings of {node}"
        )));
    }
    // Positional match: components appear in sorted join-input order.
    let terminal = terminal_ref(graph)?;
    let CarrierRef::Node(join_id) = terminal else {
        // Terminal measurement: the single component is it.
        return components
            .first()
            .cloned()
            .ok_or_else(|| Error::InvalidParams("terminal label has no components".into()));
    };
    let mut inputs = graph.inputs_of(&join_id);
    inputs.sort_by(|a, b| a.id.cmp(&b.id));
    for (idx, edge) in inputs.iter().enumerate() {
        if measurement_behind(graph, &edge.from, node)? {
            return components.get(idx).cloned().ok_or_else(|| {
                Error::InvalidParams(format!("terminal label too short for input {idx}"))
            });
        }
    }
    Err(Error::InvalidParams(format!(
        "measurement {node} does not feed the terminal join"
    )))
}

/// Does walking upstream from `from` reach the given measurement node?
fn measurement_behind(graph: &CausalGraph, from: &str, target: &str) -> Result<bool> {
    Ok(graph.light_cone(from)?.contains(target))
}

/// Pins for a selected replay: option per choice node, outcome value per
/// measurement node.
fn selection_pins(graph: &CausalGraph, outcome: &str) -> Result<BTreeMap<String, String>> {
    // Re-parse the outcome string back into components via the live path:
    // pins are derived from the graph's measurement structure.
    let exec = run_forward(graph)?;
    let terminal = terminal_carrier(graph, &exec)?;
    let life = terminal
        .lives
        .iter()
        .find(|l| l.label.to_string() == outcome)
        .ok_or_else(|| Error::InvalidParams(format!("outcome {outcome} not among futures")))?;
    let components: Vec<LifeLabel> = life.label.flatten().into_iter().cloned().collect();
    let mut pins = BTreeMap::new();
    for node in graph.nodes() {
        match &node.kind {
            NodeKind::RandomChoice { options } => {
                for c in &components {
                    if let LifeLabel::Outcome {
                        setting: Some(s), ..
                    } = c
                    {
                        if options.contains(s) {
                            pins.insert(node.id.clone(), s.clone());
                        }
                    }
                }
            }
            NodeKind::Measurement { measurement }
                if !matches!(measurement, MeasurementKind::ReadOut) =>
            {
                let c = component_for_measurement(graph, &node.id, &components)?;
                if let LifeLabel::Outcome { value, .. } = c {
                    pins.insert(node.id.clone(), value);
                }
            }
            _ => {}
        }
    }
    Ok(pins)
}

fn hidden_variable_table(
    graph: &CausalGraph,
    selected: &SelectedFuture,
) -> Result<HiddenVariableTable> {
    let rows = graph
        .table_order
        .iter()
        .map(|r| {
            let id = r.id().to_string();
            let value = selected
                .per_carrier
                .get(&id)
                .cloned()
                .unwrap_or_default();
            let (pre, post) = match value.split_once(" ; post:") {
                Some((pre, post)) => (
                    pre.to_string(),
                    if post == "?" {
                        None
                    } else {
                        Some(post.to_string())
                    },
                ),
                None => (value, None),
            };
            HiddenVariableRow {
                carrier: id,
                pre_selected: pre,
                post_selected: post,
            }
        })
        .collect();
    Ok(HiddenVariableTable { rows })
}

/// One projective measurement as seen by the direct oracle route: the
/// source qubits it acts on, the local operations on the way there, and the
/// weighted outcome branches.
struct OraclePlan {
    node: String,
    qubits: Vec<usize>,
    chain: Vec<CMatrix>,
    /// (setting, weight, outcome value, projector)
    branches: Vec<(Option<String>, f64, String, CMatrix)>,
}

/// Direct oracle route: the terminal outcome distribution computed from the
/// global state with projector products, never touching carriers, lives,
/// records or joins.
pub fn oracle_distribution(graph: &CausalGraph) -> Result<BTreeMap<String, f64>> {
    let mut source = None;
    for node in graph.nodes() {
        if let NodeKind::Source { prep, outputs } = &node.kind {
            if source.is_some() {
                return Err(Error::InvalidParams(
                    "oracle route supports a single source".into(),
                ));
            }
            source = Some((prep.prepare()?, outputs.clone()));
        }
    }
    let (state, _) = source.ok_or_else(|| Error::InvalidParams("graph has no source".into()))?;

    let mut plans: Vec<OraclePlan> = Vec::new();
    for node in graph.nodes() {
        let NodeKind::Measurement { measurement } = &node.kind else {
            continue;
        };
        if matches!(measurement, MeasurementKind::ReadOut) {
            continue;
        }
        let mut subject_edge = None;
        let mut setting_options: Option<Vec<String>> = None;
        for e in graph.inputs_of(&node.id) {
            match &graph.node(&e.from)?.kind {
                NodeKind::RandomChoice { options } => setting_options = Some(options.clone()),
                NodeKind::Initial => {}
                _ => subject_edge = Some(e),
            }
        }
        let mut edge = subject_edge.ok_or_else(|| {
            Error::InvalidParams(format!("measurement {} has no subject", node.id))
        })?;

        // Walk the subject path backward to its source leg.
        enum Step {
            Gate(crate::oracle::GateSpec),
            Keep(std::collections::BTreeSet<String>),
        }
        let mut steps_rev: Vec<Step> = Vec::new();
        let leg = loop {
            let from = graph.node(&edge.from)?;
            match &from.kind {
                NodeKind::Source { outputs, .. } => {
                    break outputs
                        .iter()
                        .find(|l| l.edge == edge.id)
                        .ok_or_else(|| {
                            Error::InvalidGraph(format!("no source leg for edge {}", edge.id))
                        })?
                        .clone();
                }
                NodeKind::Unitary { gate } => {
                    steps_rev.push(Step::Gate(gate.clone()));
                }
                NodeKind::Block { filter } => match filter {
                    crate::graph::BlockFilter::Channels { labels } => {
                        steps_rev.push(Step::Keep(labels.clone()));
                    }
                    crate::graph::BlockFilter::All => {
                        return Err(Error::InvalidParams(
                            "oracle route cannot pass an absorbing block".into(),
                        ))
                    }
                },
                other => {
                    return Err(Error::InvalidParams(format!(
                        "oracle route cannot traverse a {} node",
                        other.kind_name()
                    )))
                }
            }
            edge = graph
                .inputs_of(&from.id)
                .into_iter()
                .find(|e| {
                    graph
                        .node(&e.from)
                        .map(|n| !matches!(n.kind, NodeKind::Initial))
                        .unwrap_or(false)
                })
                .ok_or_else(|| Error::InvalidGraph(format!("{} has no input", from.id)))?;
        };

        let chain: Vec<CMatrix> = steps_rev
            .into_iter()
            .rev()
            .map(|s| -> Result<CMatrix> {
                match s {
                    Step::Gate(gate) => gate.matrix(),
                    Step::Keep(absorbed) => {
                        let mut keep = CMatrix::zeros(leg.basis.dim());
                        for i in 0..leg.basis.dim() {
                            if !absorbed.contains(&leg.basis.label(i)) {
                                keep = keep.add(&crate::oracle::projector_onto(
                                    &leg.basis.channel_vector(i),
                                ));
                            }
                        }
                        Ok(keep)
                    }
                }
            })
            .collect::<Result<_>>()?;

        let mut branches = Vec::new();
        match measurement {
            MeasurementKind::Basis { table } => {
                let settings: Vec<(Option<String>, f64)> = match &setting_options {
                    Some(opts) => opts
                        .iter()
                        .map(|o| (Some(o.clone()), 1.0 / opts.len() as f64))
                        .collect(),
                    None => vec![(None, 1.0)],
                };
                for (setting, weight) in settings {
                    let key = setting.clone().unwrap_or_default();
                    let basis = table.get(&key).ok_or_else(|| {
                        Error::InvalidParams(format!("no measurement for setting {key:?}"))
                    })?;
                    for i in 0..basis.dim() {
                        branches.push((
                            setting.clone(),
                            weight,
                            basis.label(i),
                            basis.channel_projector(i),
                        ));
                    }
                }
            }
            MeasurementKind::Context { table } => {
                let settings: Vec<(Option<String>, f64)> = match &setting_options {
                    Some(opts) => opts
                        .iter()
                        .map(|o| (Some(o.clone()), 1.0 / opts.len() as f64))
                        .collect(),
                    None => vec![(None, 1.0)],
                };
                for (setting, weight) in settings {
                    let key = setting.clone().unwrap_or_default();
                    let ctx = table.get(&key).ok_or_else(|| {
                        Error::InvalidParams(format!("no context for setting {key:?}"))
                    })?;
                    for (value, proj) in ctx.outcomes() {
                        branches.push((setting.clone(), weight, value, proj));
                    }
                }
            }
            MeasurementKind::ReadOut => unreachable!(),
        }
        plans.push(OraclePlan {
            node: node.id.clone(),
            qubits: leg.qubits.clone(),
            chain,
            branches,
        });
    }

    // Order plans as the terminal join orders its inputs.
    let terminal = terminal_ref(graph)?;
    if let CarrierRef::Node(id) = &terminal {
        if matches!(graph.node(id)?.kind, NodeKind::Join) {
            let mut inputs = graph.inputs_of(id);
            inputs.sort_by(|a, b| a.id.cmp(&b.id));
            let mut ordered = Vec::new();
            for input in inputs {
                let cone = graph.light_cone(&input.from)?;
                let pos = plans
                    .iter()
                    .position(|p| cone.contains(&p.node))
                    .ok_or_else(|| {
                        Error::InvalidParams(format!(
                            "no measurement behind join input {}",
                            input.id
                        ))
                    })?;
                ordered.push(plans.remove(pos));
            }
            plans = ordered;
        }
    }

    // Cartesian product of branches over all measurements.
    let mut dist: BTreeMap<String, f64> = BTreeMap::new();
    let mut stack: Vec<(usize, Ket, f64, Option<LifeLabel>)> =
        vec![(0, state.clone(), 1.0, None)];
    while let Some((depth, ket, weight, label)) = stack.pop() {
        if depth == plans.len() {
            let label = label.ok_or_else(|| Error::InvalidParams("no measurements".into()))?;
            let p = weight * ket.norm_sqr();
            if p > 0.0 {
                *dist.entry(label.to_string()).or_insert(0.0) += p;
            }
            continue;
        }
        let plan = &plans[depth];
        for (setting, w, value, proj) in &plan.branches {
            let mut next = ket.clone();
            for m in &plan.chain {
                next = next.apply(m, &plan.qubits)?;
            }
            next = next.apply(proj, &plan.qubits)?;
            if next.norm_sqr() * weight * w == 0.0 {
                continue;
            }
            let leaf = LifeLabel::outcome(setting.as_deref(), value.clone());
            let combined = match &label {
                None => leaf,
                Some(prev) => LifeLabel::pair(prev.clone(), leaf),
            };
            stack.push((depth + 1, next, weight * w, Some(combined)));
        }
    }
    Ok(dist)
}
