//! Directed graphs with a finite vertex domain and a successor map,
//! closed under successors by construction.

use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type VertexId = u32;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphModel {
    dom: BTreeSet<VertexId>,
    succ: BTreeMap<VertexId, BTreeSet<VertexId>>,
    /// Vertex names when loaded from a file, indexed by id.
    labels: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge {from} -> {to} leaves the vertex set")]
    EdgeOutsideDomain { from: String, to: String },
}

impl GraphModel {
    /// Build from explicit vertices and edges; every edge endpoint must be
    /// in the vertex set.
    pub fn new(
        vertices: impl IntoIterator<Item = VertexId>,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self, GraphError> {
        let dom: BTreeSet<VertexId> = vertices.into_iter().collect();
        let mut succ: BTreeMap<VertexId, BTreeSet<VertexId>> =
            dom.iter().map(|v| (*v, BTreeSet::new())).collect();
        for (u, w) in edges {
            if !dom.contains(&u) || !dom.contains(&w) {
                return Err(GraphError::EdgeOutsideDomain {
                    from: u.to_string(),
                    to: w.to_string(),
                });
            }
            succ.get_mut(&u).expect("u in dom").insert(w);
        }
        Ok(GraphModel {
            dom,
            succ,
            labels: Vec::new(),
        })
    }

    /// Line-oriented text format:
    /// first line `vertices: a b c`, then `edge: a b` lines.
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut names: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, VertexId> = BTreeMap::new();
        let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
        let mut saw_vertices = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("vertices:") {
                if saw_vertices {
                    return Err(GraphError::Parse {
                        line: lineno + 1,
                        message: "duplicate `vertices:` line".to_string(),
                    });
                }
                saw_vertices = true;
                for name in rest.split_whitespace() {
                    if index.contains_key(name) {
                        return Err(GraphError::Parse {
                            line: lineno + 1,
                            message: format!("duplicate vertex `{name}`"),
                        });
                    }
                    index.insert(name.to_string(), names.len() as VertexId);
                    names.push(name.to_string());
                }
            } else if let Some(rest) = line.strip_prefix("edge:") {
                if !saw_vertices {
                    return Err(GraphError::Parse {
                        line: lineno + 1,
                        message: "`edge:` before `vertices:`".to_string(),
                    });
                }
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(GraphError::Parse {
                        line: lineno + 1,
                        message: "expected `edge: <from> <to>`".to_string(),
                    });
                }
                let from = *index.get(parts[0]).ok_or(GraphError::EdgeOutsideDomain {
                    from: parts[0].to_string(),
                    to: parts[1].to_string(),
                })?;
                let to = *index.get(parts[1]).ok_or(GraphError::EdgeOutsideDomain {
                    from: parts[0].to_string(),
                    to: parts[1].to_string(),
                })?;
                edges.push((from, to));
            } else {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    message: format!("unrecognized line `{line}`"),
                });
            }
        }
        if !saw_vertices {
            return Err(GraphError::Parse {
                line: 1,
                message: "missing `vertices:` line".to_string(),
            });
        }

        let mut g = GraphModel::new(0..names.len() as VertexId, edges)?;
        g.labels = names;
        Ok(g)
    }

    /// Random graph: `n` vertices, each possible edge drawn with
    /// probability `density`. Closure holds by construction.
    pub fn random<R: Rng>(rng: &mut R, n: u32, density: f64) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for w in 0..n {
                if rng.random_bool(density.clamp(0.0, 1.0)) {
                    edges.push((u, w));
                }
            }
        }
        GraphModel::new(0..n, edges).expect("edges drawn from the vertex set")
    }

    /// Graph with vertices `0..n` whose edge set is given by the bits of
    /// `mask`, row-major. Enumerating all masks enumerates all graphs.
    pub fn from_mask(n: u32, mask: u64) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for w in 0..n {
                if mask >> (u * n + w) & 1 == 1 {
                    edges.push((u, w));
                }
            }
        }
        GraphModel::new(0..n, edges).expect("edges drawn from the vertex set")
    }

    pub fn dom(&self) -> &BTreeSet<VertexId> {
        &self.dom
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.dom.contains(&v)
    }

    pub fn successors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.succ.get(&v).into_iter().flatten().copied()
    }

    pub fn successor_set(&self, v: VertexId) -> BTreeSet<VertexId> {
        self.succ.get(&v).cloned().unwrap_or_default()
    }

    pub fn edge(&self, u: VertexId, w: VertexId) -> bool {
        self.dom.contains(&u) && self.succ.get(&u).is_some_and(|s| s.contains(&w))
    }

    pub fn label(&self, v: VertexId) -> String {
        self.labels
            .get(v as usize)
            .cloned()
            .unwrap_or_else(|| format!("v{v}"))
    }

    pub fn vertex_by_label(&self, name: &str) -> Option<VertexId> {
        if let Some(i) = self.labels.iter().position(|l| l == name) {
            return Some(i as VertexId);
        }
        // Generated graphs have no labels; accept `v<N>` or a bare number.
        let stripped = name.strip_prefix('v').unwrap_or(name);
        stripped
            .parse::<VertexId>()
            .ok()
            .filter(|v| self.dom.contains(v))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.values().map(|s| s.len()).sum()
    }
}
