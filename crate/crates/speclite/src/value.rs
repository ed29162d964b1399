//! Runtime logical values and per-instance model state.

use crate::graph::GraphModel;
use crate::typecheck::StdFn;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

pub type InstanceId = usize;

/// The values specification terms evaluate to. `Seq` covers both lists and
/// mathematical sequences. `Instance`, `Graph`, and `Fun` are evaluation
/// machinery: SUT handles, graph-model handles, and partially applied
/// functions; they never appear in generated data.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Unit,
    Tuple(Vec<Value>),
    Seq(Vec<Value>),
    Set(BTreeSet<Value>),
    Exn(String),
    Vertex(u32),
    Instance(InstanceId),
    Graph(Rc<GraphModel>),
    Fun(FunValue),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunValue {
    pub kind: FunKind,
    pub args: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FunKind {
    Std(StdFn),
    Predicate(String),
    /// The successor map of a graph, from a `g.succ` model access.
    GraphSucc(Rc<GraphModel>),
}

impl Value {
    pub fn seq(items: impl IntoIterator<Item = Value>) -> Value {
        Value::Seq(items.into_iter().collect())
    }

    pub fn set(items: impl IntoIterator<Item = Value>) -> Value {
        Value::Set(items.into_iter().collect())
    }

    pub fn int_list(items: impl IntoIterator<Item = i64>) -> Value {
        Value::Seq(items.into_iter().map(Value::Int).collect())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Value::Int(n) => json!(n),
            Value::Bool(b) => json!(b),
            Value::Unit => serde_json::Value::Null,
            Value::Tuple(items) => {
                json!({ "tuple": items.iter().map(Value::to_json).collect::<Vec<_>>() })
            }
            Value::Seq(items) => {
                serde_json::Value::Array(items.iter().map(Value::to_json).collect())
            }
            Value::Set(items) => {
                json!({ "fset": items.iter().map(Value::to_json).collect::<Vec<_>>() })
            }
            Value::Exn(name) => json!({ "exn": name }),
            Value::Vertex(v) => json!({ "vertex": v }),
            Value::Instance(id) => json!({ "sut": id }),
            Value::Graph(g) => json!({
                "graph": { "vertices": g.dom().len(), "edges": g.edge_count() }
            }),
            Value::Fun(_) => json!({ "fun": self.to_string() }),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Unit => write!(f, "()"),
            Value::Tuple(items) => {
                write!(f, "(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            Value::Seq(items) => {
                write!(f, "[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
            Value::Set(items) => {
                write!(f, "{{")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            Value::Exn(name) => write!(f, "exception {name}"),
            Value::Vertex(v) => write!(f, "v{v}"),
            Value::Instance(id) => write!(f, "<sut#{id}>"),
            Value::Graph(g) => write!(f, "<graph: {} vertices>", g.dom().len()),
            Value::Fun(fv) => match &fv.kind {
                FunKind::Std(s) => write!(f, "<fun {}>", s.name()),
                FunKind::Predicate(p) => write!(f, "<fun {p}>"),
                FunKind::GraphSucc(_) => write!(f, "<fun succ>"),
            },
        }
    }
}

/// FNV-1a over a canonical encoding; deterministic across runs and
/// platforms, unlike the std hasher.
pub fn stable_hash(v: &Value) -> u64 {
    fn feed(h: &mut u64, bytes: &[u8]) {
        for b in bytes {
            *h ^= u64::from(*b);
            *h = h.wrapping_mul(0x100000001b3);
        }
    }
    fn go(h: &mut u64, v: &Value) {
        match v {
            Value::Int(n) => {
                feed(h, &[1]);
                feed(h, &n.to_le_bytes());
            }
            Value::Bool(b) => feed(h, &[2, u8::from(*b)]),
            Value::Unit => feed(h, &[3]),
            Value::Tuple(items) => {
                feed(h, &[4]);
                feed(h, &(items.len() as u64).to_le_bytes());
                items.iter().for_each(|i| go(h, i));
            }
            Value::Seq(items) => {
                feed(h, &[5]);
                feed(h, &(items.len() as u64).to_le_bytes());
                items.iter().for_each(|i| go(h, i));
            }
            Value::Set(items) => {
                feed(h, &[6]);
                feed(h, &(items.len() as u64).to_le_bytes());
                items.iter().for_each(|i| go(h, i));
            }
            Value::Exn(name) => {
                feed(h, &[7]);
                feed(h, name.as_bytes());
            }
            Value::Vertex(id) => {
                feed(h, &[8]);
                feed(h, &id.to_le_bytes());
            }
            Value::Instance(id) => {
                feed(h, &[9]);
                feed(h, &(*id as u64).to_le_bytes());
            }
            Value::Graph(_) | Value::Fun(_) => feed(h, &[10]),
        }
    }
    let mut h = 0xcbf29ce484222325;
    go(&mut h, v);
    h
}

/// Assignment of model fields to values, per SUT instance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelState {
    fields: BTreeMap<(InstanceId, String), Value>,
}

impl ModelState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, instance: InstanceId, field: &str) -> Option<&Value> {
        self.fields.get(&(instance, field.to_string()))
    }

    pub fn set(&mut self, instance: InstanceId, field: &str, value: Value) {
        self.fields.insert((instance, field.to_string()), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(InstanceId, String), &Value)> {
        self.fields.iter()
    }

    pub fn fields_of(&self, instance: InstanceId) -> impl Iterator<Item = (&str, &Value)> {
        self.fields
            .iter()
            .filter(move |((id, _), _)| *id == instance)
            .map(|((_, f), v)| (f.as_str(), v))
    }

    pub fn instances(&self) -> BTreeSet<InstanceId> {
        self.fields.keys().map(|(id, _)| *id).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for ((id, field), v) in &self.fields {
            map.insert(format!("sut{id}.{field}"), v.to_json());
        }
        serde_json::Value::Object(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_order_totally() {
        let mut set = BTreeSet::new();
        set.insert(Value::Int(2));
        set.insert(Value::Int(1));
        set.insert(Value::Int(2));
        assert_eq!(set.len(), 2);
        assert_eq!(set.iter().next(), Some(&Value::Int(1)));
    }

    #[test]
    fn model_state_roundtrip() {
        let mut m = ModelState::new();
        m.set(0, "elems", Value::int_list([1, 2]));
        assert_eq!(m.get(0, "elems"), Some(&Value::int_list([1, 2])));
        assert_eq!(m.instances().len(), 1);
    }
}
