//! Queue implementations under test: the amortized two-list queue and a
//! linked queue over first/last cell pointers, plus their fault-injected
//! variants.

use crate::rac::{AdapterOutcome, CallArg, ImplAdapter};
use crate::value::{InstanceId, ModelState, Value};

pub const EMPTY_EXN: &str = "Empty";

/// Which queue fault to inject. `None` is the reference behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueMutation {
    None,
    /// Q1: push inserts at the head of the queue order.
    PushPrepends,
    /// Q2: pop returns the head but never removes it.
    PopNoRemove,
    /// Q3: pop on the empty queue returns a default instead of raising.
    PopEmptyDefault,
    /// Q4: is_empty always answers false.
    IsEmptyFalse,
    /// Q5: push on the empty queue stores into `rear`, breaking the
    /// two-list structure invariant.
    PushEmptyToRear,
}

/// Two lists, both with their head at index 0. Elements live in `front`
/// followed by `rear` reversed; the structure invariant says an empty
/// `front` forces an empty `rear`.
#[derive(Debug, Clone, Default)]
pub struct TwoListQueue {
    front: Vec<Value>,
    rear: Vec<Value>,
}

impl TwoListQueue {
    fn is_empty(&self) -> bool {
        self.front.is_empty() && self.rear.is_empty()
    }

    fn push(&mut self, x: Value, mutation: QueueMutation) {
        match mutation {
            QueueMutation::PushPrepends => self.front.insert(0, x),
            QueueMutation::PushEmptyToRear => self.rear.insert(0, x),
            _ => {
                if self.is_empty() {
                    self.front = vec![x];
                } else {
                    self.rear.insert(0, x);
                }
            }
        }
    }

    fn pop(&mut self, mutation: QueueMutation) -> Option<Value> {
        if self.front.is_empty() {
            return None;
        }
        if mutation == QueueMutation::PopNoRemove {
            return Some(self.front[0].clone());
        }
        let x = self.front.remove(0);
        if self.front.is_empty() {
            self.front = std::mem::take(&mut self.rear);
            self.front.reverse();
        }
        Some(x)
    }

    pub fn elems(&self) -> Vec<Value> {
        let mut out = self.front.clone();
        out.extend(self.rear.iter().rev().cloned());
        out
    }

    pub fn structure_invariant(&self) -> Result<(), String> {
        if self.front.is_empty() && !self.rear.is_empty() {
            return Err("front is empty but rear is not".to_string());
        }
        Ok(())
    }
}

pub struct TwoListQueueAdapter {
    mutation: QueueMutation,
    instances: Vec<TwoListQueue>,
}

impl TwoListQueueAdapter {
    pub fn new(mutation: QueueMutation) -> Self {
        TwoListQueueAdapter {
            mutation,
            instances: Vec::new(),
        }
    }

    pub fn reference() -> Self {
        Self::new(QueueMutation::None)
    }

    pub fn instance(&self, id: InstanceId) -> &TwoListQueue {
        &self.instances[id]
    }
}

/// Split adapter arguments into the SUT handles and the plain values, in
/// order. Keeps one adapter usable under both argument orders seen in the
/// queue specifications (`push q x` and `push x t`).
fn split_args(args: &[CallArg]) -> (Vec<InstanceId>, Vec<Value>) {
    let mut suts = Vec::new();
    let mut values = Vec::new();
    for a in args {
        match a {
            CallArg::Sut(id) => suts.push(*id),
            CallArg::Value(v) => values.push(v.clone()),
        }
    }
    (suts, values)
}

impl ImplAdapter for TwoListQueueAdapter {
    fn call(&mut self, op: &str, args: &[CallArg]) -> AdapterOutcome {
        let (suts, values) = split_args(args);
        match op {
            "create" => {
                self.instances.push(TwoListQueue::default());
                AdapterOutcome::NewInstance(self.instances.len() - 1)
            }
            "push" => {
                let q = &mut self.instances[suts[0]];
                q.push(values[0].clone(), self.mutation);
                AdapterOutcome::Value(Value::Unit)
            }
            "pop" => {
                let q = &mut self.instances[suts[0]];
                match q.pop(self.mutation) {
                    Some(v) => AdapterOutcome::Value(v),
                    None if self.mutation == QueueMutation::PopEmptyDefault => {
                        AdapterOutcome::Value(Value::Int(0))
                    }
                    None => AdapterOutcome::Raised(EMPTY_EXN.to_string()),
                }
            }
            "is_empty" => {
                let q = &self.instances[suts[0]];
                let answer = if self.mutation == QueueMutation::IsEmptyFalse {
                    false
                } else {
                    q.is_empty()
                };
                AdapterOutcome::Value(Value::Bool(answer))
            }
            "transfer" => {
                let (src, dst) = (suts[0], suts[1]);
                let moved = {
                    let q1 = &mut self.instances[src];
                    let mut all = Vec::new();
                    while let Some(v) = q1.pop(QueueMutation::None) {
                        all.push(v);
                    }
                    all
                };
                let q2 = &mut self.instances[dst];
                for v in moved {
                    q2.push(v, QueueMutation::None);
                }
                AdapterOutcome::Value(Value::Unit)
            }
            other => panic!("two-list queue adapter: unknown operation `{other}`"),
        }
    }

    fn rep_invariant(
        &self,
        instance: InstanceId,
        models: &ModelState,
    ) -> Option<Result<(), String>> {
        let q = self.instances.get(instance)?;
        let check = q
            .structure_invariant()
            .and_then(|()| match models.get(instance, "elems") {
                Some(Value::Seq(model)) if *model == q.elems() => Ok(()),
                Some(model) => Err(format!(
                    "representation {} disagrees with model {model}",
                    Value::Seq(q.elems())
                )),
                None => Ok(()),
            });
        Some(check)
    }
}

/// Cells live in an arena; `first`/`last` and the per-cell `next` field
/// mirror the pointer structure of a mutable linked queue.
#[derive(Debug, Clone, Default)]
pub struct LinkedQueue {
    length: usize,
    first: Option<usize>,
    last: Option<usize>,
    cells: Vec<(Value, Option<usize>)>,
}

impl LinkedQueue {
    fn push(&mut self, x: Value) {
        self.cells.push((x, None));
        let cell = self.cells.len() - 1;
        match self.last {
            None => self.first = Some(cell),
            Some(l) => self.cells[l].1 = Some(cell),
        }
        self.last = Some(cell);
        self.length += 1;
    }

    fn pop(&mut self) -> Option<Value> {
        let head = self.first?;
        let (value, next) = self.cells[head].clone();
        self.first = next;
        if self.first.is_none() {
            self.last = None;
        }
        self.length -= 1;
        Some(value)
    }

    fn is_empty(&self) -> bool {
        self.first.is_none()
    }

    pub fn elems(&self) -> Vec<Value> {
        let mut out = Vec::with_capacity(self.length);
        let mut cur = self.first;
        while let Some(i) = cur {
            out.push(self.cells[i].0.clone());
            cur = self.cells[i].1;
        }
        out
    }

    fn structure_invariant(&self) -> Result<(), String> {
        let chain = self.elems();
        if chain.len() != self.length {
            return Err(format!(
                "length field {} but {} reachable cells",
                self.length,
                chain.len()
            ));
        }
        let mut cur = self.first;
        let mut last_seen = None;
        while let Some(i) = cur {
            last_seen = Some(i);
            cur = self.cells[i].1;
        }
        if last_seen != self.last {
            return Err("last pointer does not reach the final cell".to_string());
        }
        Ok(())
    }
}

pub struct LinkedQueueAdapter {
    instances: Vec<LinkedQueue>,
}

impl LinkedQueueAdapter {
    pub fn new() -> Self {
        LinkedQueueAdapter {
            instances: Vec::new(),
        }
    }
}

impl Default for LinkedQueueAdapter {
    fn default() -> Self {
        Self::new()
    }
}

impl ImplAdapter for LinkedQueueAdapter {
    fn call(&mut self, op: &str, args: &[CallArg]) -> AdapterOutcome {
        let (suts, values) = split_args(args);
        match op {
            "create" => {
                self.instances.push(LinkedQueue::default());
                AdapterOutcome::NewInstance(self.instances.len() - 1)
            }
            "push" => {
                self.instances[suts[0]].push(values[0].clone());
                AdapterOutcome::Value(Value::Unit)
            }
            "pop" => match self.instances[suts[0]].pop() {
                Some(v) => AdapterOutcome::Value(v),
                None => AdapterOutcome::Raised(EMPTY_EXN.to_string()),
            },
            "is_empty" => AdapterOutcome::Value(Value::Bool(self.instances[suts[0]].is_empty())),
            "transfer" => {
                let (src, dst) = (suts[0], suts[1]);
                while let Some(v) = self.instances[src].pop() {
                    self.instances[dst].push(v);
                }
                AdapterOutcome::Value(Value::Unit)
            }
            other => panic!("linked queue adapter: unknown operation `{other}`"),
        }
    }

    fn rep_invariant(
        &self,
        instance: InstanceId,
        models: &ModelState,
    ) -> Option<Result<(), String>> {
        let q = self.instances.get(instance)?;
        let check = q
            .structure_invariant()
            .and_then(|()| match models.get(instance, "elems") {
                Some(Value::Seq(model)) if *model == q.elems() => Ok(()),
                Some(model) => Err(format!(
                    "representation {} disagrees with model {model}",
                    Value::Seq(q.elems())
                )),
                None => Ok(()),
            });
        Some(check)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_list_push_goes_to_rear_when_nonempty() {
        let mut q = TwoListQueue::default();
        q.push(Value::Int(1), QueueMutation::None);
        q.push(Value::Int(2), QueueMutation::None);
        q.push(Value::Int(3), QueueMutation::None);
        assert_eq!(q.front, vec![Value::Int(1)]);
        assert_eq!(q.rear, vec![Value::Int(3), Value::Int(2)]);
        assert_eq!(q.elems(), vec![Value::Int(1), Value::Int(2), Value::Int(3)]);
    }

    #[test]
    fn two_list_pop_restores_invariant() {
        let mut q = TwoListQueue::default();
        for i in 1..=3 {
            q.push(Value::Int(i), QueueMutation::None);
        }
        assert_eq!(q.pop(QueueMutation::None), Some(Value::Int(1)));
        q.structure_invariant().unwrap();
        assert_eq!(q.elems(), vec![Value::Int(2), Value::Int(3)]);
    }

    #[test]
    fn pop_on_empty_returns_none() {
        let mut q = TwoListQueue::default();
        assert_eq!(q.pop(QueueMutation::None), None);
    }

    #[test]
    fn queue_implementations_observationally_equivalent() {
        // Exhaustive over operation sequences of length <= 6 with push
        // arguments in -3..=3.
        #[derive(Clone, Copy)]
        enum Op {
            Push(i64),
            Pop,
            IsEmpty,
        }
        fn run_two(ops: &[Op]) -> Vec<String> {
            let mut q = TwoListQueue::default();
            ops.iter()
                .map(|op| match op {
                    Op::Push(x) => {
                        q.push(Value::Int(*x), QueueMutation::None);
                        "()".to_string()
                    }
                    Op::Pop => match q.pop(QueueMutation::None) {
                        Some(v) => v.to_string(),
                        None => "Empty".to_string(),
                    },
                    Op::IsEmpty => q.is_empty().to_string(),
                })
                .collect()
        }
        fn run_linked(ops: &[Op]) -> Vec<String> {
            let mut q = LinkedQueue::default();
            ops.iter()
                .map(|op| match op {
                    Op::Push(x) => {
                        q.push(Value::Int(*x));
                        "()".to_string()
                    }
                    Op::Pop => match q.pop() {
                        Some(v) => v.to_string(),
                        None => "Empty".to_string(),
                    },
                    Op::IsEmpty => q.is_empty().to_string(),
                })
                .collect()
        }

        let mut choices: Vec<Op> = (-3..=3).map(Op::Push).collect();
        choices.push(Op::Pop);
        choices.push(Op::IsEmpty);

        let mut stack: Vec<Vec<Op>> = vec![Vec::new()];
        let mut count = 0usize;
        while let Some(seq) = stack.pop() {
            count += 1;
            assert_eq!(run_two(&seq), run_linked(&seq), "sequence diverged");
            if seq.len() < 5 {
                for op in &choices {
                    let mut next = seq.clone();
                    next.push(*op);
                    stack.push(next);
                }
            }
        }
        assert!(count > 50_000, "exhaustive sweep ran {count} sequences");
    }
}
