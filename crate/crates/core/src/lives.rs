//! The parallel-lives mechanism: carriers hold sets of lives, each with an
//! amplitude ("probability fluid") and a record of past local interactions.
//! Joins pair lives across carriers with amplitudes reconstructed from the
//! shared records, so entanglement correlations are obeyed using only
//! locally carried information.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::oracle::{projector_onto, CMatrix, Ket, ProductBasis};

/// Pairings whose reconstructed amplitude falls below this are removed;
/// exact interference zeros land many orders of magnitude lower.
pub const PRUNE_AMPLITUDE: f64 = 1e-12;

pub type RecordId = usize;

/// A joint state written down at a local interaction, shared by every
/// carrier that participated. Carriers hold references, never copies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub id: RecordId,
    pub node: String,
    pub state: Ket,
    /// Which qubits of the recorded state each participating system embodies.
    pub participants: BTreeMap<String, Vec<usize>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordStore {
    records: Vec<InteractionRecord>,
}

impl RecordStore {
    pub fn insert(&mut self, node: &str, state: Ket, participants: BTreeMap<String, Vec<usize>>) -> RecordId {
        let id = self.records.len();
        self.records.push(InteractionRecord {
            id,
            node: node.to_string(),
            state,
            participants,
        });
        id
    }

    pub fn get(&self, id: RecordId) -> &InteractionRecord {
        &self.records[id]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A local operation a life has applied to a recorded state: either a
/// unitary it passed through or a projection it experienced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CondOp {
    Unitary {
        qubits: Vec<usize>,
        matrix: CMatrix,
    },
    Project {
        qubits: Vec<usize>,
        matrix: CMatrix,
        outcome: String,
    },
}

impl CondOp {
    fn apply(&self, state: &Ket) -> Result<Ket> {
        match self {
            CondOp::Unitary { qubits, matrix } | CondOp::Project { qubits, matrix, .. } => {
                state.apply(matrix, qubits)
            }
        }
    }
}

/// A life's conditioning chain on one shared record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordCond {
    pub record: RecordId,
    pub ops: Vec<CondOp>,
}

/// Anchor of a history variant in a recorded state: the channel vector the
/// variant's label stands for, placed on the system's qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantAnchor {
    pub record: RecordId,
    pub qubits: Vec<usize>,
    pub vector: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantStep {
    pub node: String,
    pub label: String,
    pub anchor: Option<VariantAnchor>,
}

/// One resolved interaction history of a life. Lives normally carry several
/// variants; interference at measurements merges their fluid into shared
/// outcome channels, but the variants remain countable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub steps: Vec<VariantStep>,
}

impl Variant {
    fn anchors(&self) -> BTreeMap<RecordId, &VariantAnchor> {
        self.steps
            .iter()
            .filter_map(|s| s.anchor.as_ref())
            .map(|a| (a.record, a))
            .collect()
    }
}

/// Channel labels. Labels are hierarchical so tables and tests can take
/// them apart without string parsing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LifeLabel {
    /// A basis-state channel in the carrier's preferred basis.
    Basis { value: String },
    /// A random-choice option.
    Choice { value: String },
    /// A measurement outcome, keyed by the setting that produced it.
    Outcome {
        setting: Option<String>,
        value: String,
    },
    /// Two carriers' lives correlated at a join.
    Pair { left: Box<LifeLabel>, right: Box<LifeLabel> },
    /// A life refined by the downstream branch it feeds (post-selection tag).
    Tagged { base: Box<LifeLabel>, tag: String },
}

impl LifeLabel {
    pub fn basis(v: impl Into<String>) -> Self {
        LifeLabel::Basis { value: v.into() }
    }

    pub fn choice(v: impl Into<String>) -> Self {
        LifeLabel::Choice { value: v.into() }
    }

    pub fn outcome(setting: Option<&str>, value: impl Into<String>) -> Self {
        LifeLabel::Outcome {
            setting: setting.map(str::to_string),
            value: value.into(),
        }
    }

    pub fn pair(left: LifeLabel, right: LifeLabel) -> Self {
        LifeLabel::Pair {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Flatten nested pairs into their outcome components, left to right.
    pub fn flatten(&self) -> Vec<&LifeLabel> {
        match self {
            LifeLabel::Pair { left, right } => {
                let mut v = left.flatten();
                v.extend(right.flatten());
                v
            }
            other => vec![other],
        }
    }
}

impl fmt::Display for LifeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LifeLabel::Basis { value } | LifeLabel::Choice { value } => write!(f, "{value}"),
            LifeLabel::Outcome { setting, value } => match setting {
                Some(s) => write!(f, "{s}:{value}"),
                None => write!(f, "{value}"),
            },
            LifeLabel::Pair { left, right } => write!(f, "{left};{right}"),
            LifeLabel::Tagged { base, tag } => write!(f, "{base}>{tag}"),
        }
    }
}

/// One branch of one system: a channel label, its amplitude, its
/// conditioning on shared records, and its enumerable histories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Life {
    pub label: LifeLabel,
    pub amplitude: Complex64,
    pub conditioning: Vec<RecordCond>,
    pub variants: Vec<Variant>,
    /// For lives of system carriers: the current-frame channel vector this
    /// life occupies in its lineage record. Joins use it to reconstruct
    /// pairing amplitudes for lives that have not been projected yet.
    pub channel: Option<VariantAnchor>,
}

impl Life {
    pub fn fluid(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    fn cond_by_record(&self) -> BTreeMap<RecordId, &RecordCond> {
        self.conditioning.iter().map(|c| (c.record, c)).collect()
    }

    /// The operations this life effectively conditions a record on: its
    /// local chain, plus its own channel projector when it has one.
    fn effective_ops(&self, record_id: RecordId) -> Vec<CondOp> {
        let mut ops = self
            .cond_by_record()
            .get(&record_id)
            .map(|c| c.ops.clone())
            .unwrap_or_default();
        if let Some(anchor) = &self.channel {
            if anchor.record == record_id {
                ops.push(CondOp::Project {
                    qubits: anchor.qubits.clone(),
                    matrix: projector_onto(&anchor.vector),
                    outcome: self.label.to_string(),
                });
            }
        }
        ops
    }

    /// Probability of this life's effective conditioning on one record.
    fn record_weight(&self, record: &InteractionRecord) -> Result<f64> {
        let mut state = record.state.clone();
        for op in self.effective_ops(record.id) {
            state = op.apply(&state)?;
        }
        Ok(state.norm_sqr())
    }
}

/// How a carrier's channel labels relate to Hilbert space: system carriers
/// hold qubits in a preferred basis, outcome carriers hold plain labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CarrierChannels {
    Qubits { basis: ProductBasis },
    Labels { labels: Vec<String> },
}

/// A locally propagating physical system: an edge payload of the DAG.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub system_id: String,
    pub lives: Vec<Life>,
    pub channels: CarrierChannels,
    /// Carrier-local qubit -> record qubit, per referenced record. Only
    /// system carriers have a nonempty mapping.
    pub record_qubits: BTreeMap<RecordId, Vec<usize>>,
    /// Declared free of shared-record correlations (random choices).
    pub independent: bool,
}

impl Carrier {
    pub fn total_fluid(&self) -> f64 {
        self.lives.iter().map(Life::fluid).sum()
    }

    pub fn life_count(&self) -> usize {
        self.lives.len()
    }

    pub fn history_count(&self) -> usize {
        self.lives.iter().map(|l| l.variants.len()).sum()
    }

    pub fn life(&self, label: &LifeLabel) -> Option<&Life> {
        self.lives.iter().find(|l| &l.label == label)
    }

    pub fn fluid_of(&self, label: &LifeLabel) -> f64 {
        self.life(label).map(Life::fluid).unwrap_or(0.0)
    }

    /// Marginal fluid distribution keyed by label string.
    pub fn fluid_distribution(&self) -> BTreeMap<String, f64> {
        self.lives
            .iter()
            .map(|l| (l.label.to_string(), l.fluid()))
            .collect()
    }

    pub fn record_ids(&self) -> BTreeSet<RecordId> {
        self.lives
            .iter()
            .flat_map(|l| l.conditioning.iter().map(|c| c.record))
            .collect()
    }

    fn sort_lives(&mut self) {
        self.lives.sort_by(|a, b| a.label.cmp(&b.label));
    }

    /// Weighted sample of one life; deterministic given the generator state.
    pub fn sample_life<R: rand::Rng>(&self, rng: &mut R) -> Result<&Life> {
        let total = self.total_fluid();
        if total < 1e-12 {
            return Err(Error::DegenerateCarrier(self.system_id.clone()));
        }
        let mut target = rng.random::<f64>() * total;
        for life in &self.lives {
            target -= life.fluid();
            if target <= 0.0 {
                return Ok(life);
            }
        }
        Ok(self.lives.last().expect("nonempty carrier"))
    }
}

fn keep_life(life: &Life) -> bool {
    life.amplitude.norm() >= PRUNE_AMPLITUDE
}

/// Split a freshly prepared state into one carrier's lives: one life per
/// preferred-basis channel with nonzero marginal weight, each holding a
/// reference to the record.
pub fn split_on_preparation(
    records: &RecordStore,
    record_id: RecordId,
    system_id: &str,
    qubits: &[usize],
    basis: &ProductBasis,
    extra_records: &[RecordId],
) -> Result<Carrier> {
    if qubits.is_empty() {
        return Err(Error::EmptySubsystem);
    }
    basis.validate()?;
    let record = records.get(record_id);
    let full = qubits.len() == record.state.num_qubits();
    let mut lives = Vec::new();
    for i in 0..basis.dim() {
        let vector = basis.channel_vector(i);
        let amplitude = if full {
            // Unentangled carrier: the exact complex coefficient.
            let mut overlap = Complex64::ZERO;
            for (j, v) in vector.iter().enumerate() {
                overlap += v.conj() * record.state.amplitude(j);
            }
            overlap
        } else {
            // Entangled carrier: the marginal weight from the reduced state.
            Complex64::new(record.state.projection_weight(&vector, qubits)?.sqrt(), 0.0)
        };
        let label = LifeLabel::basis(basis.label(i));
        let mut conditioning = vec![RecordCond {
            record: record_id,
            ops: vec![],
        }];
        for &r in extra_records {
            conditioning.push(RecordCond { record: r, ops: vec![] });
        }
        conditioning.sort_by_key(|c| c.record);
        let anchor = VariantAnchor {
            record: record_id,
            qubits: qubits.to_vec(),
            vector,
        };
        let life = Life {
            label: label.clone(),
            amplitude,
            conditioning,
            variants: vec![Variant {
                steps: vec![VariantStep {
                    node: record.node.clone(),
                    label: label.to_string(),
                    anchor: Some(anchor.clone()),
                }],
            }],
            channel: Some(anchor),
        };
        if keep_life(&life) {
            lives.push(life);
        }
    }
    let mut carrier = Carrier {
        system_id: system_id.to_string(),
        lives,
        channels: CarrierChannels::Qubits { basis: basis.clone() },
        record_qubits: BTreeMap::from([(record_id, qubits.to_vec())]),
        independent: false,
    };
    carrier.sort_lives();
    Ok(carrier)
}

/// Probability of two lives' effective chains holding jointly on one
/// record; the chains act on disjoint subsystems, so the order across sides
/// is immaterial.
fn joint_record_weight(record: &InteractionRecord, a: &Life, b: &Life) -> Result<f64> {
    let mut state = record.state.clone();
    for op in a
        .effective_ops(record.id)
        .iter()
        .chain(b.effective_ops(record.id).iter())
    {
        state = op.apply(&state)?;
    }
    Ok(state.norm_sqr())
}

/// Conditioning of a joined life: for every record either side references,
/// concatenate both sides' effective chains (channel projectors included),
/// which is exactly what the pairing weight was computed from.
fn merge_conditioning(a: &Life, b: &Life) -> Vec<RecordCond> {
    let mut record_ids: BTreeSet<RecordId> = a.conditioning.iter().map(|c| c.record).collect();
    record_ids.extend(b.conditioning.iter().map(|c| c.record));
    record_ids
        .into_iter()
        .map(|record| {
            let mut ops = a.effective_ops(record);
            ops.extend(b.effective_ops(record));
            RecordCond { record, ops }
        })
        .collect()
}

/// Two history variants are compatible when, for every record they both
/// anchor in, the recorded state has nonzero weight on the joint channel.
fn variants_compatible(records: &RecordStore, a: &Variant, b: &Variant) -> Result<bool> {
    let anchors_a = a.anchors();
    let anchors_b = b.anchors();
    for (record_id, anchor_a) in &anchors_a {
        if let Some(anchor_b) = anchors_b.get(record_id) {
            let record = records.get(*record_id);
            let pa = projector_onto(&anchor_a.vector);
            let pb = projector_onto(&anchor_b.vector);
            let projected = record
                .state
                .apply(&pa, &anchor_a.qubits)?
                .apply(&pb, &anchor_b.qubits)?;
            if projected.norm_sqr() < PRUNE_AMPLITUDE * PRUNE_AMPLITUDE {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn combine_variants(
    records: &RecordStore,
    a: &[Variant],
    b: &[Variant],
    step: Option<VariantStep>,
) -> Result<Vec<Variant>> {
    let mut out = Vec::new();
    for va in a {
        for vb in b {
            if !variants_compatible(records, va, vb)? {
                continue;
            }
            let mut steps = va.steps.clone();
            steps.extend(vb.steps.iter().cloned());
            if let Some(s) = &step {
                steps.push(s.clone());
            }
            out.push(Variant { steps });
        }
    }
    Ok(out)
}

/// Pair the lives of two carriers meeting at a local event. The pairing
/// amplitude is reconstructed from the shared records: fluid multiplies by
/// P(joint)/P(a)P(b) per shared record, with the square root entering the
/// amplitude as a nonnegative real factor.
pub fn join_carriers(
    records: &RecordStore,
    a: &Carrier,
    b: &Carrier,
    node: &str,
    system_id: &str,
) -> Result<Carrier> {
    let shared: BTreeSet<RecordId> = a
        .record_ids()
        .intersection(&b.record_ids())
        .copied()
        .collect();
    if shared.is_empty()
        && !a.independent
        && !b.independent
        && (a.record_ids().is_empty() || b.record_ids().is_empty())
    {
        return Err(Error::UnresolvedCorrelation(
            a.system_id.clone(),
            b.system_id.clone(),
        ));
    }
    let mut lives = Vec::new();
    for la in &a.lives {
        for lb in &b.lives {
            let mut factor = 1.0_f64;
            let mut degenerate = false;
            for &rid in &shared {
                let record = records.get(rid);
                let pa = la.record_weight(record)?;
                let pb = lb.record_weight(record)?;
                if pa < 1e-300 || pb < 1e-300 {
                    degenerate = true;
                    break;
                }
                let pj = joint_record_weight(record, la, lb)?;
                factor *= pj / (pa * pb);
            }
            if degenerate {
                continue;
            }
            let amplitude = la.amplitude * lb.amplitude * factor.sqrt();
            let label = LifeLabel::pair(la.label.clone(), lb.label.clone());
            let step = VariantStep {
                node: node.to_string(),
                label: label.to_string(),
                anchor: None,
            };
            let life = Life {
                label,
                amplitude,
                conditioning: merge_conditioning(la, lb),
                variants: combine_variants(records, &la.variants, &lb.variants, Some(step))?,
                channel: None,
            };
            if keep_life(&life) {
                lives.push(life);
            }
        }
    }
    let labels = lives.iter().map(|l| l.label.to_string()).collect();
    let mut record_qubits = a.record_qubits.clone();
    for (k, v) in &b.record_qubits {
        record_qubits.entry(*k).or_insert_with(|| v.clone());
    }
    let mut carrier = Carrier {
        system_id: system_id.to_string(),
        lives,
        channels: CarrierChannels::Labels { labels },
        record_qubits,
        independent: a.independent && b.independent,
    };
    carrier.sort_lives();
    Ok(carrier)
}

/// One inflow into a target channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inflow {
    pub amplitude: Complex64,
    /// Orthogonality tag: inflows with different tags never combine.
    pub tag: String,
}

/// Fluid converging on one target channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFlow {
    pub target: LifeLabel,
    pub inflows: Vec<Inflow>,
}

/// Sum amplitudes per (target, tag): non-orthogonal inflows interfere,
/// orthogonal-tagged inflows remain separate lives.
pub fn interfere(flows: &[ChannelFlow]) -> Vec<Life> {
    let mut combined: BTreeMap<(String, String), (LifeLabel, Complex64)> = BTreeMap::new();
    let mut tags_per_target: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for flow in flows {
        let target_key = flow.target.to_string();
        for inflow in &flow.inflows {
            tags_per_target
                .entry(target_key.clone())
                .or_default()
                .insert(inflow.tag.clone());
            let entry = combined
                .entry((target_key.clone(), inflow.tag.clone()))
                .or_insert_with(|| (flow.target.clone(), Complex64::ZERO));
            entry.1 += inflow.amplitude;
        }
    }
    let mut lives = Vec::new();
    for ((target_key, tag), (label, amplitude)) in combined {
        let multi_tag = tags_per_target[&target_key].len() > 1;
        let label = if multi_tag {
            LifeLabel::Tagged {
                base: Box::new(label),
                tag,
            }
        } else {
            label
        };
        let life = Life {
            label,
            amplitude,
            conditioning: vec![],
            variants: vec![],
            channel: None,
        };
        if keep_life(&life) {
            lives.push(life);
        }
    }
    lives.sort_by(|a, b| a.label.cmp(&b.label));
    lives
}

/// Outcome of checking whether a channel map could be a unitary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeCheck {
    pub injective: bool,
    pub unitary: bool,
    pub idempotent: bool,
}

/// Inspect the linear operator M = sum |map(l)><l| induced by a channel map
/// on the carrier's label space.
pub fn merge_operator_check(labels: &[String], map: &BTreeMap<String, String>) -> MergeCheck {
    let index: BTreeMap<&String, usize> = labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let dim = labels.len();
    let mut m = CMatrix::zeros(dim);
    let mut seen_targets = BTreeSet::new();
    let mut injective = true;
    for (src, dst) in map {
        let (Some(&i), Some(&j)) = (index.get(src), index.get(dst)) else {
            continue;
        };
        if !seen_targets.insert(j) {
            injective = false;
        }
        m[(j, i)] = Complex64::ONE;
    }
    let unitary = m.is_unitary(1e-9);
    let idempotent = m.mul(&m).max_abs_diff(&m) < 1e-9;
    MergeCheck {
        injective,
        unitary,
        idempotent,
    }
}

/// Flow all fluid through a channel map: fluid measures add per target
/// channel. Non-injective maps are irreversible; the result is flagged
/// accordingly and the merged lives carry no conditioning (the channel
/// distinction is erased).
pub fn project_merge(
    carrier: &Carrier,
    map: &BTreeMap<String, String>,
) -> Result<(Carrier, MergeCheck)> {
    let labels: Vec<String> = carrier.lives.iter().map(|l| l.label.to_string()).collect();
    for l in &labels {
        if !map.contains_key(l) {
            return Err(Error::IncompleteChannelMap(l.clone()));
        }
    }
    let identity = carrier
        .lives
        .iter()
        .all(|l| map[&l.label.to_string()] == l.label.to_string());
    let mut merged: BTreeMap<String, (f64, Vec<Variant>)> = BTreeMap::new();
    for life in &carrier.lives {
        let target = map[&life.label.to_string()].clone();
        let entry = merged.entry(target).or_insert_with(|| (0.0, Vec::new()));
        entry.0 += life.fluid();
        entry.1.extend(life.variants.iter().cloned());
    }
    let lives: Vec<Life> = merged
        .into_iter()
        .map(|(target, (fluid, variants))| Life {
            label: LifeLabel::basis(target),
            amplitude: Complex64::new(fluid.sqrt(), 0.0),
            conditioning: if identity {
                carrier.lives[0].conditioning.clone()
            } else {
                vec![]
            },
            variants,
            channel: None,
        })
        .filter(keep_life)
        .collect();
    let check = merge_operator_check(&labels, map);
    let out_labels = lives.iter().map(|l| l.label.to_string()).collect();
    let mut out = Carrier {
        system_id: carrier.system_id.clone(),
        lives,
        channels: CarrierChannels::Labels { labels: out_labels },
        record_qubits: carrier.record_qubits.clone(),
        independent: carrier.independent,
    };
    out.sort_lives();
    Ok((out, check))
}

/// Total fluid in a carrier.
pub fn total_fluid(carrier: &Carrier) -> f64 {
    carrier.total_fluid()
}
