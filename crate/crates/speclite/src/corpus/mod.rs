//! Built-in case corpus: specification texts, reference implementations,
//! fault-injected mutants, and the graph search with its monitors.

pub mod graph_check;
pub mod hashtbl;
pub mod mutants;
pub mod queue;

use crate::parser::parse_interface;
use crate::rac::ImplAdapter;
use crate::typecheck::{typecheck, TypedSpec};
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    /// The full queue interface, including `transfer`.
    QueueFig1,
    /// The executable queue variant with the split `pop` postcondition.
    QueueExec,
    /// The hash table excerpt: create, add, mem.
    HashtblFig3,
    /// The hash table extended with find and remove.
    HashtblFull,
    /// The graph interface with path predicates.
    Graph,
    /// A deliberately unsound contract used to demonstrate frame checks:
    /// its `touch` operation updates the model without a modifies clause.
    FrameDemo,
}

pub const FRAME_DEMO_SPEC: &str = "\
type 'a t
(*@ mutable model elems : 'a list *)

val create : unit -> 'a t
(*@ q = create ()
    ensures q.elems = [] *)

val touch : 'a t -> 'a -> unit
(*@ touch q x
    ensures q.elems = old q.elems @ [x] *)
";

pub fn spec_text(kind: SpecKind) -> &'static str {
    match kind {
        SpecKind::QueueFig1 => include_str!("../../specs/queue.mli.spec"),
        SpecKind::QueueExec => include_str!("../../specs/queue_exec.mli.spec"),
        SpecKind::HashtblFig3 => include_str!("../../specs/hashtbl.mli.spec"),
        SpecKind::HashtblFull => include_str!("../../specs/hashtbl_full.mli.spec"),
        SpecKind::Graph => include_str!("../../specs/graph.mli.spec"),
        SpecKind::FrameDemo => FRAME_DEMO_SPEC,
    }
}

pub fn spec_file_name(kind: SpecKind) -> &'static str {
    match kind {
        SpecKind::QueueFig1 => "queue.mli.spec",
        SpecKind::QueueExec => "queue_exec.mli.spec",
        SpecKind::HashtblFig3 => "hashtbl.mli.spec",
        SpecKind::HashtblFull => "hashtbl_full.mli.spec",
        SpecKind::Graph => "graph.mli.spec",
        SpecKind::FrameDemo => "<built-in frame demo>",
    }
}

/// Parsed and typechecked corpus specs, built once.
pub fn typed_spec(kind: SpecKind) -> &'static TypedSpec {
    static CACHE: OnceLock<Vec<TypedSpec>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        [
            SpecKind::QueueFig1,
            SpecKind::QueueExec,
            SpecKind::HashtblFig3,
            SpecKind::HashtblFull,
            SpecKind::Graph,
            SpecKind::FrameDemo,
        ]
        .into_iter()
        .map(|k| {
            let src = spec_text(k);
            typecheck(parse_interface(src).unwrap_or_else(|e| {
                panic!("corpus spec {} fails to parse: {e}", spec_file_name(k))
            }))
            .unwrap_or_else(|errs| {
                panic!(
                    "corpus spec {} fails to typecheck: {}",
                    spec_file_name(k),
                    errs.first().map(|e| e.to_string()).unwrap_or_default()
                )
            })
        })
        .collect()
    });
    let idx = match kind {
        SpecKind::QueueFig1 => 0,
        SpecKind::QueueExec => 1,
        SpecKind::HashtblFig3 => 2,
        SpecKind::HashtblFull => 3,
        SpecKind::Graph => 4,
        SpecKind::FrameDemo => 5,
    };
    &all[idx]
}

/// A selectable implementation.
pub struct ImplEntry {
    pub name: &'static str,
    /// The spec this implementation is meant to be tested against.
    pub spec: SpecKind,
    pub sut_type: &'static str,
    /// Operations the adapter understands.
    pub ops: &'static [&'static str],
    pub description: &'static str,
    pub make: fn() -> Box<dyn ImplAdapter>,
}

const QUEUE_OPS: &[&str] = &["create", "push", "pop", "is_empty", "transfer"];
const HASHTBL_OPS: &[&str] = &["create", "add", "mem", "find", "remove"];
const FRAME_OPS: &[&str] = &["create", "touch"];

pub fn registry() -> Vec<ImplEntry> {
    use hashtbl::{BucketHashtblAdapter, HashtblMutation};
    use queue::{LinkedQueueAdapter, QueueMutation, TwoListQueueAdapter};

    fn queue_mutant(m: QueueMutation) -> fn() -> Box<dyn ImplAdapter> {
        match m {
            QueueMutation::None => || Box::new(TwoListQueueAdapter::reference()),
            QueueMutation::PushPrepends => {
                || Box::new(TwoListQueueAdapter::new(QueueMutation::PushPrepends))
            }
            QueueMutation::PopNoRemove => {
                || Box::new(TwoListQueueAdapter::new(QueueMutation::PopNoRemove))
            }
            QueueMutation::PopEmptyDefault => {
                || Box::new(TwoListQueueAdapter::new(QueueMutation::PopEmptyDefault))
            }
            QueueMutation::IsEmptyFalse => {
                || Box::new(TwoListQueueAdapter::new(QueueMutation::IsEmptyFalse))
            }
            QueueMutation::PushEmptyToRear => {
                || Box::new(TwoListQueueAdapter::new(QueueMutation::PushEmptyToRear))
            }
        }
    }

    vec![
        ImplEntry {
            name: "queue_two_list",
            spec: SpecKind::QueueExec,
            sut_type: "t",
            ops: QUEUE_OPS,
            description: "amortized two-list queue",
            make: queue_mutant(QueueMutation::None),
        },
        ImplEntry {
            name: "queue_linked",
            spec: SpecKind::QueueExec,
            sut_type: "t",
            ops: QUEUE_OPS,
            description: "linked queue over first/last cell pointers",
            make: || Box::new(LinkedQueueAdapter::new()),
        },
        ImplEntry {
            name: "hashtbl_bucket",
            spec: SpecKind::HashtblFull,
            sut_type: "t",
            ops: HASHTBL_OPS,
            description: "bucketed hash table with association-list buckets",
            make: || Box::new(BucketHashtblAdapter::reference()),
        },
        ImplEntry {
            name: "mutant_Q1",
            spec: SpecKind::QueueExec,
            sut_type: "t",
            ops: QUEUE_OPS,
            description: "queue mutant: push prepends at the front",
            make: queue_mutant(QueueMutation::PushPrepends),
        },
        ImplEntry {
            name: "mutant_Q2",
            spec: SpecKind::QueueExec,
            sut_type: "t",
            ops: QUEUE_OPS,
            description: "queue mutant: pop never removes",
            make: queue_mutant(QueueMutation::PopNoRemove),
        },
        ImplEntry {
            name: "mutant_Q3",
            spec: SpecKind::QueueExec,
            sut_type: "t",
            ops: QUEUE_OPS,
            description: "queue mutant: pop on empty returns a default",
            make: queue_mutant(QueueMutation::PopEmptyDefault),
        },
        ImplEntry {
            name: "mutant_Q4",
            spec: SpecKind::QueueExec,
            sut_type: "t",
            ops: QUEUE_OPS,
            description: "queue mutant: is_empty always false",
            make: queue_mutant(QueueMutation::IsEmptyFalse),
        },
        ImplEntry {
            name: "mutant_Q5",
            spec: SpecKind::QueueExec,
            sut_type: "t",
            ops: QUEUE_OPS,
            description: "queue mutant: push on empty stores into rear",
            make: queue_mutant(QueueMutation::PushEmptyToRear),
        },
        ImplEntry {
            name: "mutant_H1",
            spec: SpecKind::HashtblFull,
            sut_type: "t",
            ops: HASHTBL_OPS,
            description: "hash table mutant: add appends at the bucket tail",
            make: || Box::new(BucketHashtblAdapter::new(HashtblMutation::AddAppends)),
        },
        ImplEntry {
            name: "mutant_H2",
            spec: SpecKind::HashtblFull,
            sut_type: "t",
            ops: HASHTBL_OPS,
            description: "hash table mutant: mem always true",
            make: || Box::new(BucketHashtblAdapter::new(HashtblMutation::MemAlwaysTrue)),
        },
        ImplEntry {
            name: "frame_demo",
            spec: SpecKind::FrameDemo,
            sut_type: "t",
            ops: FRAME_OPS,
            description: "adapter whose contract mutates a model field without modifies",
            make: || Box::new(mutants::FrameDemoAdapter::new()),
        },
    ]
}

pub fn find_impl(name: &str) -> Option<ImplEntry> {
    registry().into_iter().find(|e| e.name == name)
}
