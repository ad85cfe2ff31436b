//! Nodes, synapses and the homeostatic updates on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::affinity::{weighted_similarity, SimilarityWeights};
use crate::featkit::FeatureVector;
use crate::learner::LearnerParams;
use crate::{Error, Result};

/// Upper bound on synaptic strength.
pub const DEFAULT_STRENGTH_CAP: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    GroundTruth,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub record: Vec<f64>,
    pub label: usize,
    pub provenance: Provenance,
    pub confidence: f64,
}

/// Labelled samples stored on a node for later replay.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    entries: Vec<ReplayEntry>,
}

impl ReplayBuffer {
    pub fn push_ground_truth(&mut self, record: Vec<f64>, label: usize) {
        self.entries.push(ReplayEntry {
            record,
            label,
            provenance: Provenance::GroundTruth,
            confidence: 1.0,
        });
    }

    /// Rejects entries below the confidence threshold `eta`.
    pub fn push_pseudo(&mut self, record: Vec<f64>, label: usize, confidence: f64, eta: f64) -> Result<()> {
        if !(confidence >= eta && confidence <= 1.0) {
            return Err(Error::invalid(format!(
                "pseudo-label confidence {confidence} below threshold {eta}"
            )));
        }
        self.entries.push(ReplayEntry {
            record,
            label,
            provenance: Provenance::Pseudo,
            confidence,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[ReplayEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One subject in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectNode {
    pub id: NodeId,
    pub label: String,
    pub feature: FeatureVector,
    pub params: Option<LearnerParams>,
    pub buffer: ReplayBuffer,
    pub clock: u32,
    pub is_source: bool,
}

impl SubjectNode {
    pub fn new(id: NodeId, label: impl Into<String>, feature: FeatureVector) -> Self {
        Self {
            id,
            label: label.into(),
            feature,
            params: None,
            buffer: ReplayBuffer::default(),
            clock: 1,
            is_source: false,
        }
    }

    pub fn source(mut self) -> Self {
        self.is_source = true;
        self
    }

    pub fn with_params(mut self, params: LearnerParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn with_buffer(mut self, buffer: ReplayBuffer) -> Self {
        self.buffer = buffer;
        self
    }
}

/// An undirected connection, stored once per unordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub similarity: f64,
    pub strength: f64,
}

/// Which endpoint clock drives the decay of a shared edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenormRule {
    /// One decay per edge using the larger of the two clocks.
    #[default]
    MaxClock,
    /// Decay once per endpoint, i.e. by `exp(-(t_i + t_j) / λ)`.
    BothEndpoints,
}

fn edge_key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    weights: SimilarityWeights,
    cap: f64,
    rule: RenormRule,
    prune_below: Option<f64>,
    nodes: BTreeMap<NodeId, SubjectNode>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    edges: BTreeMap<(NodeId, NodeId), Synapse>,
}

impl Network {
    pub fn new(weights: SimilarityWeights) -> Self {
        Self {
            weights,
            cap: DEFAULT_STRENGTH_CAP,
            rule: RenormRule::default(),
            prune_below: None,
            nodes: BTreeMap::new(),
            adjacency: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_renorm_rule(mut self, rule: RenormRule) -> Self {
        self.rule = rule;
        self
    }

    /// Drop edges whose strength falls below `threshold` after decay.
    pub fn with_prune_threshold(mut self, threshold: Option<f64>) -> Self {
        self.prune_below = threshold;
        self
    }

    /// Builds the source network: every pair with similarity above `xi` is
    /// connected at strength 1 and every clock starts at 1.
    pub fn initialize(weights: SimilarityWeights, nodes: Vec<SubjectNode>, xi: f64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("network needs at least one node"));
        }
        let mut net = Self::new(weights);
        for node in nodes {
            net.incorporate_node(node, xi)?;
        }
        Ok(net)
    }

    pub fn weights(&self) -> &SimilarityWeights {
        &self.weights
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// Adds `node` with clock 1 and links it to every existing node whose
    /// similarity exceeds `xi`.
    pub fn incorporate_node(&mut self, mut node: SubjectNode, xi: f64) -> Result<NodeId> {
        if !(xi > -1.0 && xi < 1.0) {
            return Err(Error::invalid(format!("connection threshold {xi} must lie in (-1, 1)")));
        }
        let id = node.id;
        if self.nodes.contains_key(&id) {
            return Err(Error::DuplicateNode(id.0));
        }
        let mut links = Vec::new();
        for (other, existing) in &self.nodes {
            let s = weighted_similarity(&node.feature, &existing.feature, &self.weights)?;
            if s > xi {
                links.push((*other, s));
            }
        }
        node.clock = 1;
        self.nodes.insert(id, node);
        self.adjacency.insert(id, BTreeSet::new());
        for (other, similarity) in links {
            self.edges.insert(
                edge_key(id, other),
                Synapse {
                    similarity,
                    strength: 1.0,
                },
            );
            self.adjacency.get_mut(&id).unwrap().insert(other);
            self.adjacency.get_mut(&other).unwrap().insert(id);
        }
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Result<&SubjectNode> {
        self.nodes.get(&id).ok_or(Error::UnknownNode(id.0))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut SubjectNode> {
        self.nodes.get_mut(&id).ok_or(Error::UnknownNode(id.0))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SubjectNode> {
        self.nodes.values()
    }

    /// Smallest id not yet in use.
    pub fn next_id(&self) -> NodeId {
        NodeId(self.nodes.keys().next_back().map_or(0, |k| k.0 + 1))
    }

    /// Edges as `(lo, hi, synapse)` in ascending key order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, &Synapse)> {
        self.edges.iter().map(|((a, b), s)| (*a, *b, s))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn synapse(&self, a: NodeId, b: NodeId) -> Option<&Synapse> {
        self.edges.get(&edge_key(a, b))
    }

    pub fn neighbors(&self, id: NodeId) -> Result<impl Iterator<Item = NodeId> + '_> {
        self.adjacency
            .get(&id)
            .map(|s| s.iter().copied())
            .ok_or(Error::UnknownNode(id.0))
    }

    pub fn degree(&self, id: NodeId) -> Result<usize> {
        self.adjacency.get(&id).map(BTreeSet::len).ok_or(Error::UnknownNode(id.0))
    }

    /// Similarity of `id` to every other node, ascending by id.
    pub fn similarities(&self, id: NodeId) -> Result<Vec<(NodeId, f64)>> {
        let me = self.node(id)?;
        self.nodes
            .values()
            .filter(|n| n.id != id)
            .map(|n| Ok((n.id, weighted_similarity(&me.feature, &n.feature, &self.weights)?)))
            .collect()
    }

    /// Mean strength of the synapses incident to `id`; 0 with no synapses.
    pub fn mean_strength(&self, id: NodeId) -> Result<f64> {
        let peers = self.adjacency.get(&id).ok_or(Error::UnknownNode(id.0))?;
        if peers.is_empty() {
            return Ok(0.0);
        }
        let sum: f64 = peers.iter().map(|p| self.edges[&edge_key(id, *p)].strength).sum();
        Ok(sum / peers.len() as f64)
    }

    /// Importance of `j` relative to `i`: `α · S(i, j) + (1 − α) · s̄_j`.
    pub fn importance(&self, i: NodeId, j: NodeId, alpha: f64) -> Result<f64> {
        self.node(i)?;
        self.node(j)?;
        if i == j {
            return Err(Error::invalid("importance of a node relative to itself"));
        }
        let syn = self.synapse(i, j).ok_or(Error::NoSynapse(i.0, j.0))?;
        Ok(alpha * syn.similarity + (1.0 - alpha) * self.mean_strength(j)?)
    }

    /// The `k` connected peers of `i` with the highest importance, descending,
    /// ties broken by ascending id.
    pub fn top_k(&self, i: NodeId, k: usize, alpha: f64) -> Result<Vec<(NodeId, f64)>> {
        if k == 0 {
            return Err(Error::invalid("top-k needs k >= 1"));
        }
        let mut ranked = self
            .neighbors(i)?
            .map(|j| Ok((j, self.importance(i, j, alpha)?)))
            .collect::<Result<Vec<_>>>()?;
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        Ok(ranked)
    }

    /// Sets the clocks of `ids` back to 1.
    pub fn reset_clocks(&mut self, ids: &[NodeId]) -> Result<()> {
        for id in ids {
            self.node_mut(*id)?.clock = 1;
        }
        Ok(())
    }

    /// Increments every clock.
    pub fn advance_clocks(&mut self) {
        for node in self.nodes.values_mut() {
            node.clock += 1;
        }
    }

    /// Multiplies every synapse touching an activated node by `gamma`
    /// (once per edge, capped) and resets the activated clocks.
    pub fn consolidate(&mut self, activated: &[NodeId], gamma: f64) -> Result<()> {
        self.strengthen(activated, gamma)?;
        self.reset_clocks(activated)
    }

    /// The strength half of [`consolidate`](Self::consolidate).
    pub fn strengthen(&mut self, activated: &[NodeId], gamma: f64) -> Result<()> {
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("consolidation factor {gamma} must be >= 1")));
        }
        let mut touched = BTreeSet::new();
        for &i in activated {
            for j in self.neighbors(i)? {
                touched.insert(edge_key(i, j));
            }
        }
        for key in touched {
            let syn = self.edges.get_mut(&key).unwrap();
            syn.strength = (gamma * syn.strength).min(self.cap);
        }
        Ok(())
    }

    /// Decays every synapse by `exp(-t / λ)` and then advances all clocks.
    pub fn renormalize(&mut self, lambda: f64) -> Result<()> {
        self.weaken(lambda)?;
        self.advance_clocks();
        Ok(())
    }

    /// The strength half of [`renormalize`](Self::renormalize).
    pub fn weaken(&mut self, lambda: f64) -> Result<()> {
        if !(lambda > 0.0) {
            return Err(Error::invalid(format!("decay factor {lambda} must be positive")));
        }
        let nodes = &self.nodes;
        for ((a, b), syn) in self.edges.iter_mut() {
            let (ta, tb) = (nodes[a].clock as f64, nodes[b].clock as f64);
            let factor = match self.rule {
                RenormRule::MaxClock => (-ta.max(tb) / lambda).exp(),
                RenormRule::BothEndpoints => (-ta / lambda).exp() * (-tb / lambda).exp(),
            };
            syn.strength = (syn.strength * factor).clamp(0.0, self.cap);
        }
        if let Some(threshold) = self.prune_below {
            let dead: Vec<_> = self
                .edges
                .iter()
                .filter(|(_, s)| s.strength < threshold)
                .map(|(k, _)| *k)
                .collect();
            for (a, b) in dead {
                self.edges.remove(&(a, b));
                self.adjacency.get_mut(&a).unwrap().remove(&b);
                self.adjacency.get_mut(&b).unwrap().remove(&a);
            }
        }
        Ok(())
    }
}
