//! Serializable views of the network: versioned JSON and Graphviz DOT.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::graph::{Network, NodeId};
use crate::{Error, Result};

pub const SNAPSHOT_FORMAT: &str = "synnet-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNode {
    pub id: NodeId,
    pub label: String,
    pub clock: u32,
    pub mean_strength: f64,
    pub degree: usize,
    pub is_source: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEdge {
    pub a: NodeId,
    pub b: NodeId,
    pub similarity: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub format: String,
    pub version: u32,
    pub step: u64,
    pub nodes: Vec<SnapshotNode>,
    pub edges: Vec<SnapshotEdge>,
}

impl Network {
    pub fn snapshot(&self, step: u64) -> NetworkSnapshot {
        let nodes = self
            .nodes()
            .map(|n| SnapshotNode {
                id: n.id,
                label: n.label.clone(),
                clock: n.clock,
                mean_strength: self.mean_strength(n.id).unwrap_or(0.0),
                degree: self.degree(n.id).unwrap_or(0),
                is_source: n.is_source,
            })
            .collect();
        let edges = self
            .edges()
            .map(|(a, b, s)| SnapshotEdge {
                a,
                b,
                similarity: s.similarity,
                strength: s.strength,
            })
            .collect();
        NetworkSnapshot {
            format: SNAPSHOT_FORMAT.to_owned(),
            version: SNAPSHOT_VERSION,
            step,
            nodes,
            edges,
        }
    }
}

impl NetworkSnapshot {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and checks the format tag and version.
    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Self = serde_json::from_str(text)?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(Error::invalid(format!("not a network snapshot: format `{}`", snap.format)));
        }
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::invalid(format!("unsupported snapshot version {}", snap.version)));
        }
        Ok(snap)
    }

    /// Undirected DOT graph. Dashed edges with pen width proportional to
    /// strength; node size grows with degree.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph synnet {{");
        let _ = writeln!(out, "  // step {}", self.step);
        let _ = writeln!(out, "  node [shape=circle, fixedsize=true];");
        for n in &self.nodes {
            let size = 0.3 + 0.1 * n.degree as f64;
            let color = if n.is_source { "steelblue" } else { "darkorange" };
            let _ = writeln!(
                out,
                "  n{} [label=\"{}\", width={:.3}, height={:.3}, color={}];",
                n.id,
                n.label.replace('"', "'"),
                size,
                size,
                color
            );
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  n{} -- n{} [style=dashed, penwidth={:.4}, weight={:.4}];",
                e.a,
                e.b,
                e.strength.max(0.05),
                e.strength
            );
        }
        out.push_str("}\n");
        out
    }
}
