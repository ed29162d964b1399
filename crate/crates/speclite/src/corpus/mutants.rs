//! The fault catalog: every mutant names the clause its fault violates.

use super::graph_check::BfsFlavor;
use super::hashtbl::HashtblMutation;
use super::queue::QueueMutation;
use crate::rac::{AdapterOutcome, CallArg, ImplAdapter};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutantKind {
    Queue(QueueMutation),
    Hashtbl(HashtblMutation),
    Graph(BfsFlavor),
}

pub struct MutantInfo {
    pub name: &'static str,
    /// Registry key for state-machine-testable mutants; graph mutants run
    /// through the path checker instead.
    pub registry_key: Option<&'static str>,
    pub kind: MutantKind,
    pub description: &'static str,
    pub violates: &'static str,
}

pub fn mutants() -> Vec<MutantInfo> {
    vec![
        MutantInfo {
            name: "Q1",
            registry_key: Some("mutant_Q1"),
            kind: MutantKind::Queue(QueueMutation::PushPrepends),
            description: "push inserts at the front of the queue order",
            violates: "push ensures t.elems = (old t.elems) @ [x]",
        },
        MutantInfo {
            name: "Q2",
            registry_key: Some("mutant_Q2"),
            kind: MutantKind::Queue(QueueMutation::PopNoRemove),
            description: "pop returns the head but never removes it",
            violates: "pop ensures x = List.hd (old t.elems) after the model advanced",
        },
        MutantInfo {
            name: "Q3",
            registry_key: Some("mutant_Q3"),
            kind: MutantKind::Queue(QueueMutation::PopEmptyDefault),
            description: "pop on the empty queue returns 0 instead of raising Empty",
            violates: "pop ensures if old t.elems = [] then false else ...",
        },
        MutantInfo {
            name: "Q4",
            registry_key: Some("mutant_Q4"),
            kind: MutantKind::Queue(QueueMutation::IsEmptyFalse),
            description: "is_empty always answers false",
            violates: "is_empty ensures b = t.elems = []",
        },
        MutantInfo {
            name: "Q5",
            registry_key: Some("mutant_Q5"),
            kind: MutantKind::Queue(QueueMutation::PushEmptyToRear),
            description: "push on the empty queue stores into rear",
            violates: "two-list invariant front = [] -> rear = []",
        },
        MutantInfo {
            name: "H1",
            registry_key: Some("mutant_H1"),
            kind: MutantKind::Hashtbl(HashtblMutation::AddAppends),
            description: "add appends at the bucket tail",
            violates: "add ensures h.contents = (k, v) :: old h.contents (recency order)",
        },
        MutantInfo {
            name: "H2",
            registry_key: Some("mutant_H2"),
            kind: MutantKind::Hashtbl(HashtblMutation::MemAlwaysTrue),
            description: "mem always answers true",
            violates: "mem ensures b = List.mem k (List.map fst h.contents)",
        },
        MutantInfo {
            name: "G1",
            registry_key: None,
            kind: MutantKind::Graph(BfsFlavor::ForgetMark),
            description: "search enqueues successors without marking them",
            violates: "queue-frontier monitor; step budget on cyclic graphs",
        },
        MutantInfo {
            name: "G2",
            registry_key: None,
            kind: MutantKind::Graph(BfsFlavor::SkipFirstSuccessor),
            description: "search skips the first successor of every vertex",
            violates: "check_path ensures b <-> has_path v1 v2 graph (oracle cross-check)",
        },
    ]
}

/// Adapter for the frame-check demonstration: operations do nothing to any
/// real state, but `touch`'s contract advances the model without declaring
/// a modifies clause, so the frame check flags the very first call.
pub struct FrameDemoAdapter {
    next_instance: usize,
}

impl FrameDemoAdapter {
    pub fn new() -> Self {
        FrameDemoAdapter { next_instance: 0 }
    }
}

impl Default for FrameDemoAdapter {
    fn default() -> Self {
        Self::new()
    }
}

impl ImplAdapter for FrameDemoAdapter {
    fn call(&mut self, op: &str, _args: &[CallArg]) -> AdapterOutcome {
        match op {
            "create" => {
                let id = self.next_instance;
                self.next_instance += 1;
                AdapterOutcome::NewInstance(id)
            }
            "touch" => AdapterOutcome::Value(Value::Unit),
            other => panic!("frame demo adapter: unknown operation `{other}`"),
        }
    }
}
