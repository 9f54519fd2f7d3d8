//! The experiment substrate: a DAG of events whose edges are locally
//! propagating carriers. Space-like separation is represented purely by
//! non-ancestry; there are no coordinates.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::oracle::{GateSpec, MeasurementContext, ProductBasis, StatePrep};

/// One output leg of a source: which qubits of the prepared state the
/// carrier embodies, and the preferred basis its lives are labeled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceOutput {
    pub edge: String,
    pub qubits: Vec<usize>,
    pub basis: ProductBasis,
}

/// How a measurement node turns a carrier into outcome channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementKind {
    /// Project onto a product basis, optionally selected by a setting
    /// carrier; the table is keyed by setting label ("" when there is no
    /// setting input).
    Basis { table: BTreeMap<String, ProductBasis> },
    /// Measure a commuting Pauli context per setting.
    Context {
        table: BTreeMap<String, MeasurementContext>,
    },
    /// Read an upstream outcome carrier verbatim (an observer looking at a
    /// record); no new projection happens.
    ReadOut,
}

/// Channels a block absorbs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockFilter {
    /// Absorb everything; the node terminates its inputs.
    All,
    /// Absorb only the listed channel labels and pass the rest on.
    Channels { labels: BTreeSet<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    /// Common ancestor of every event; present only in inflation graphs.
    Initial,
    Source {
        prep: StatePrep,
        outputs: Vec<SourceOutput>,
    },
    RandomChoice {
        options: Vec<String>,
    },
    Measurement {
        measurement: MeasurementKind,
    },
    Unitary {
        gate: GateSpec,
    },
    Join,
    Block {
        filter: BlockFilter,
    },
}

impl NodeKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            NodeKind::Initial => "initial",
            NodeKind::Source { .. } => "source",
            NodeKind::RandomChoice { .. } => "random_choice",
            NodeKind::Measurement { .. } => "measurement",
            NodeKind::Unitary { .. } => "unitary",
            NodeKind::Join => "join",
            NodeKind::Block { .. } => "block",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventNode {
    pub id: String,
    pub kind: NodeKind,
}

/// A directed edge of the DAG; its payload is written exactly once, when
/// the `from` event executes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarrierEdge {
    pub id: String,
    pub from: String,
    pub to: String,
}

/// Rows reported in life tables: ordinary carriers plus terminal nodes
/// whose result has no outgoing edge to live on.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum CarrierRef {
    Edge(String),
    Node(String),
}

impl CarrierRef {
    pub fn id(&self) -> &str {
        match self {
            CarrierRef::Edge(id) | CarrierRef::Node(id) => id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalGraph {
    pub name: String,
    nodes: BTreeMap<String, EventNode>,
    edges: BTreeMap<String, CarrierEdge>,
    initial_node: Option<String>,
    /// Carriers reported in tables, in presentation order.
    pub table_order: Vec<CarrierRef>,
    /// Scenario capability markers (e.g. "bell_pms").
    pub tags: BTreeSet<String>,
}

impl CausalGraph {
    pub fn new(
        name: &str,
        nodes: Vec<EventNode>,
        edges: Vec<CarrierEdge>,
        initial_node: Option<String>,
        table_order: Vec<CarrierRef>,
    ) -> Result<Self> {
        let mut node_map = BTreeMap::new();
        for n in nodes {
            if node_map.insert(n.id.clone(), n).is_some() {
                return Err(Error::InvalidGraph("duplicate node id".into()));
            }
        }
        let mut edge_map = BTreeMap::new();
        for e in edges {
            if e.from == e.to {
                return Err(Error::InvalidGraph(format!("self-loop on {}", e.from)));
            }
            if !node_map.contains_key(&e.from) {
                return Err(Error::UnknownNode(e.from));
            }
            if !node_map.contains_key(&e.to) {
                return Err(Error::UnknownNode(e.to));
            }
            if edge_map.insert(e.id.clone(), e).is_some() {
                return Err(Error::InvalidGraph("duplicate edge id".into()));
            }
        }
        let graph = Self {
            name: name.to_string(),
            nodes: node_map,
            edges: edge_map,
            initial_node,
            table_order,
            tags: BTreeSet::new(),
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn with_tag(mut self, tag: &str) -> Self {
        self.tags.insert(tag.to_string());
        self
    }

    fn validate(&self) -> Result<()> {
        // Acyclicity first; everything else assumes a schedule exists.
        self.topological_schedule()?;

        for node in self.nodes.values() {
            let inputs = self.inputs_of(&node.id);
            let outputs = self.outputs_of(&node.id);
            let from_initial_only = inputs.iter().all(|e| {
                self.initial_node
                    .as_deref()
                    .is_some_and(|init| e.from == init)
            });
            match &node.kind {
                NodeKind::Initial => {
                    if !inputs.is_empty() {
                        return Err(Error::InvalidGraph(format!(
                            "initial node {} has inputs",
                            node.id
                        )));
                    }
                }
                NodeKind::Source { outputs: legs, .. } => {
                    if !from_initial_only {
                        return Err(Error::InvalidGraph(format!(
                            "source {} has non-initial inputs",
                            node.id
                        )));
                    }
                    let configured: BTreeSet<&String> = legs.iter().map(|l| &l.edge).collect();
                    let actual: BTreeSet<&String> = outputs.iter().map(|e| &e.id).collect();
                    if configured != actual {
                        return Err(Error::InvalidGraph(format!(
                            "source {} output legs {configured:?} do not match edges {actual:?}",
                            node.id
                        )));
                    }
                    let mut used = BTreeSet::new();
                    for leg in legs {
                        for &q in &leg.qubits {
                            if !used.insert(q) {
                                return Err(Error::InvalidGraph(format!(
                                    "source {} assigns qubit {q} to two output legs",
                                    node.id
                                )));
                            }
                        }
                        if leg.basis.num_qubits() != leg.qubits.len() {
                            return Err(Error::InvalidGraph(format!(
                                "source {} leg {} basis covers {} qubits for {} indices",
                                node.id,
                                leg.edge,
                                leg.basis.num_qubits(),
                                leg.qubits.len()
                            )));
                        }
                    }
                }
                NodeKind::RandomChoice { options } => {
                    if !from_initial_only {
                        return Err(Error::InvalidGraph(format!(
                            "random choice {} has non-initial inputs",
                            node.id
                        )));
                    }
                    if options.is_empty() {
                        return Err(Error::InvalidGraph(format!(
                            "random choice {} has no options",
                            node.id
                        )));
                    }
                }
                NodeKind::Measurement { .. } => {
                    let real_inputs: Vec<_> =
                        inputs.iter().filter(|e| !self.is_genesis_edge(e)).collect();
                    if real_inputs.is_empty() || real_inputs.len() > 2 {
                        return Err(Error::InvalidGraph(format!(
                            "measurement {} needs one subject and at most one setting input",
                            node.id
                        )));
                    }
                }
                NodeKind::Unitary { .. } => {
                    if inputs.len() != 1 {
                        return Err(Error::InvalidGraph(format!(
                            "unitary {} needs exactly one input",
                            node.id
                        )));
                    }
                }
                NodeKind::Join => {
                    if inputs.len() < 2 {
                        return Err(Error::InvalidGraph(format!(
                            "join {} needs at least two inputs",
                            node.id
                        )));
                    }
                }
                NodeKind::Block { filter } => {
                    if matches!(filter, BlockFilter::All) && !outputs.is_empty() {
                        return Err(Error::InvalidGraph(format!(
                            "absorbing block {} must not have outputs",
                            node.id
                        )));
                    }
                    if matches!(filter, BlockFilter::Channels { .. }) && outputs.len() != 1 {
                        return Err(Error::InvalidGraph(format!(
                            "filtering block {} needs exactly one output",
                            node.id
                        )));
                    }
                }
            }
        }

        if let Some(init) = &self.initial_node {
            match self.nodes.get(init) {
                Some(node) if matches!(node.kind, NodeKind::Initial) => {}
                _ => {
                    return Err(Error::InvalidGraph(format!(
                        "initial node {init} missing or not of initial kind"
                    )))
                }
            }
            // The initial node must be an ancestor of every other node.
            for id in self.nodes.keys() {
                if id != init && !self.light_cone(id)?.contains(init) {
                    return Err(Error::InvalidGraph(format!(
                        "initial node {init} is not an ancestor of {id}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn is_genesis_edge(&self, edge: &CarrierEdge) -> bool {
        self.initial_node
            .as_deref()
            .is_some_and(|init| edge.from == init)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &EventNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &CarrierEdge> {
        self.edges.values()
    }

    pub fn node(&self, id: &str) -> Result<&EventNode> {
        self.nodes
            .get(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn edge(&self, id: &str) -> Result<&CarrierEdge> {
        self.edges
            .get(id)
            .ok_or_else(|| Error::UnknownEdge(id.to_string()))
    }

    pub fn initial_node(&self) -> Option<&str> {
        self.initial_node.as_deref()
    }

    pub fn inputs_of(&self, node: &str) -> Vec<&CarrierEdge> {
        self.edges.values().filter(|e| e.to == node).collect()
    }

    pub fn outputs_of(&self, node: &str) -> Vec<&CarrierEdge> {
        self.edges.values().filter(|e| e.from == node).collect()
    }

    /// Deterministic topological order: Kahn's algorithm with lexicographic
    /// node-id tie-breaking.
    pub fn topological_schedule(&self) -> Result<Vec<String>> {
        let mut in_degree: BTreeMap<&str, usize> =
            self.nodes.keys().map(|id| (id.as_str(), 0)).collect();
        for e in self.edges.values() {
            *in_degree.get_mut(e.to.as_str()).unwrap() += 1;
        }
        let mut ready: BTreeSet<&str> = in_degree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&id, _)| id)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(&next) = ready.iter().next() {
            ready.remove(next);
            order.push(next.to_string());
            for e in self.edges.values().filter(|e| e.from == next) {
                let d = in_degree.get_mut(e.to.as_str()).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(e.to.as_str());
                }
            }
        }
        if order.len() != self.nodes.len() {
            let stuck = in_degree
                .iter()
                .find(|(_, &d)| d > 0)
                .map(|(&id, _)| id.to_string())
                .unwrap_or_default();
            return Err(Error::CycleDetected(stuck));
        }
        Ok(order)
    }

    /// All ancestors of `node`, including the node itself.
    pub fn light_cone(&self, node: &str) -> Result<BTreeSet<String>> {
        if !self.nodes.contains_key(node) {
            return Err(Error::UnknownNode(node.to_string()));
        }
        let mut cone = BTreeSet::new();
        let mut stack = vec![node.to_string()];
        while let Some(id) = stack.pop() {
            if !cone.insert(id.clone()) {
                continue;
            }
            for e in self.edges.values().filter(|e| e.to == id) {
                stack.push(e.from.clone());
            }
        }
        Ok(cone)
    }

    /// Edge-level strict ancestry: is `a` entirely in the past of `b`?
    pub fn edge_precedes(&self, a: &str, b: &str) -> Result<bool> {
        let ea = self.edge(a)?;
        let eb = self.edge(b)?;
        Ok(self.light_cone(&eb.from)?.contains(&ea.to))
    }

    /// True if no edge of the set is in another's past light cone.
    pub fn is_antichain(&self, edge_ids: &[String]) -> Result<bool> {
        for (i, a) in edge_ids.iter().enumerate() {
            for b in edge_ids.iter().skip(i + 1) {
                if self.edge_precedes(a, b)? || self.edge_precedes(b, a)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// A params change for the locality audit, leaving topology intact.
    /// Returns `None` for nodes with nothing meaningful to perturb.
    pub fn perturbed_kind(&self, node: &str) -> Result<Option<NodeKind>> {
        let node = self.node(node)?;
        Ok(match &node.kind {
            NodeKind::Source { prep, outputs } => {
                let new_prep = match prep {
                    StatePrep::Uniform { num_qubits } => StatePrep::Basis {
                        label: "0".repeat(*num_qubits),
                    },
                    other => {
                        let n = other.prepare().map(|k| k.num_qubits()).unwrap_or(1);
                        StatePrep::Uniform { num_qubits: n }
                    }
                };
                Some(NodeKind::Source {
                    prep: new_prep,
                    outputs: outputs.clone(),
                })
            }
            NodeKind::RandomChoice { options } => {
                let mut opts = options.clone();
                if opts.len() > 1 {
                    opts.pop();
                } else {
                    opts.push("extra".into());
                }
                Some(NodeKind::RandomChoice { options: opts })
            }
            NodeKind::Measurement { measurement } => match measurement {
                MeasurementKind::Basis { table } => {
                    let mut entries: Vec<_> = table.iter().collect();
                    if entries.len() > 1 {
                        entries.rotate_left(1);
                        let keys: Vec<String> = table.keys().cloned().collect();
                        let rotated = keys
                            .into_iter()
                            .zip(entries.into_iter().map(|(_, v)| v.clone()))
                            .collect();
                        Some(NodeKind::Measurement {
                            measurement: MeasurementKind::Basis { table: rotated },
                        })
                    } else {
                        let (key, basis) = table.iter().next().unwrap();
                        let flipped = ProductBasis::x_basis(basis.num_qubits());
                        let mut t = BTreeMap::new();
                        t.insert(key.clone(), flipped);
                        Some(NodeKind::Measurement {
                            measurement: MeasurementKind::Basis { table: t },
                        })
                    }
                }
                MeasurementKind::Context { table } => {
                    if table.len() > 1 {
                        let keys: Vec<String> = table.keys().cloned().collect();
                        let mut values: Vec<_> = table.values().cloned().collect();
                        values.rotate_left(1);
                        let rotated = keys.into_iter().zip(values).collect();
                        Some(NodeKind::Measurement {
                            measurement: MeasurementKind::Context { table: rotated },
                        })
                    } else {
                        None
                    }
                }
                MeasurementKind::ReadOut => None,
            },
            NodeKind::Unitary { gate } => {
                if matches!(gate, GateSpec::Identity { .. }) {
                    None
                } else {
                    Some(NodeKind::Unitary {
                        gate: GateSpec::Identity {
                            num_qubits: gate.num_qubits(),
                        },
                    })
                }
            }
            NodeKind::Initial | NodeKind::Join | NodeKind::Block { .. } => None,
        })
    }

    /// Clone the graph with one node's params replaced.
    pub fn with_node_kind(&self, node: &str, kind: NodeKind) -> Result<Self> {
        let mut out = self.clone();
        let entry = out
            .nodes
            .get_mut(node)
            .ok_or_else(|| Error::UnknownNode(node.to_string()))?;
        entry.kind = kind;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_graph() -> CausalGraph {
        let nodes = vec![
            EventNode {
                id: "S".into(),
                kind: NodeKind::Source {
                    prep: StatePrep::Qubit { a: 1.0, b: 0.0 },
                    outputs: vec![SourceOutput {
                        edge: "s".into(),
                        qubits: vec![0],
                        basis: ProductBasis::computational(1),
                    }],
                },
            },
            EventNode {
                id: "M".into(),
                kind: NodeKind::Measurement {
                    measurement: MeasurementKind::Basis {
                        table: BTreeMap::from([("".to_string(), ProductBasis::computational(1))]),
                    },
                },
            },
        ];
        let edges = vec![CarrierEdge {
            id: "s".into(),
            from: "S".into(),
            to: "M".into(),
        }];
        CausalGraph::new("chain", nodes, edges, None, vec![]).unwrap()
    }

    #[test]
    fn chain_graph_has_two_nodes_one_edge_and_unique_order() {
        let g = chain_graph();
        assert_eq!(g.nodes().count(), 2);
        assert_eq!(g.edges().count(), 1);
        assert_eq!(g.topological_schedule().unwrap(), vec!["S", "M"]);
    }

    #[test]
    fn cycle_is_rejected() {
        let nodes = vec![
            EventNode {
                id: "A".into(),
                kind: NodeKind::Join,
            },
            EventNode {
                id: "B".into(),
                kind: NodeKind::Join,
            },
        ];
        let edges = vec![
            CarrierEdge {
                id: "ab".into(),
                from: "A".into(),
                to: "B".into(),
            },
            CarrierEdge {
                id: "ba".into(),
                from: "B".into(),
                to: "A".into(),
            },
        ];
        let err = CausalGraph::new("cyclic", nodes, edges, None, vec![]);
        assert!(matches!(err, Err(Error::CycleDetected(_))));
    }

    #[test]
    fn light_cone_of_source_is_itself() {
        let g = chain_graph();
        let cone = g.light_cone("S").unwrap();
        assert_eq!(cone.len(), 1);
        assert!(cone.contains("S"));
        assert!(g.light_cone("nosuch").is_err());
    }

    #[test]
    fn perturbation_changes_params_but_not_shape() {
        let g = chain_graph();
        let kind = g.perturbed_kind("S").unwrap().unwrap();
        let g2 = g.with_node_kind("S", kind).unwrap();
        assert_eq!(g2.edges().count(), 1);
        assert_ne!(g2.node("S").unwrap().kind, g.node("S").unwrap().kind);
    }
}
