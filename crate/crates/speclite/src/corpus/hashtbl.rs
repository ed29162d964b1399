//! Bucketed hash table under test, modeled by an association list where
//! the most recent binding of a key precedes older ones.

use crate::rac::{AdapterOutcome, CallArg, ImplAdapter};
use crate::value::{stable_hash, InstanceId, ModelState, Value};

pub const NOT_FOUND_EXN: &str = "Not_found";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashtblMutation {
    None,
    /// H1: add appends at the bucket tail, so lookups see the oldest
    /// binding first.
    AddAppends,
    /// H2: mem always answers true.
    MemAlwaysTrue,
}

#[derive(Debug, Clone)]
pub struct BucketHashtbl {
    buckets: Vec<Vec<(Value, Value)>>,
}

impl BucketHashtbl {
    fn new(size: i64) -> Self {
        BucketHashtbl {
            buckets: vec![Vec::new(); size.max(1) as usize],
        }
    }

    fn bucket_of(&self, key: &Value) -> usize {
        (stable_hash(key) % self.buckets.len() as u64) as usize
    }

    fn add(&mut self, key: Value, value: Value, mutation: HashtblMutation) {
        let b = self.bucket_of(&key);
        match mutation {
            HashtblMutation::AddAppends => self.buckets[b].push((key, value)),
            _ => self.buckets[b].insert(0, (key, value)),
        }
    }

    fn mem(&self, key: &Value) -> bool {
        let b = self.bucket_of(key);
        self.buckets[b].iter().any(|(k, _)| k == key)
    }

    fn find(&self, key: &Value) -> Option<Value> {
        let b = self.bucket_of(key);
        self.buckets[b]
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
    }

    fn remove(&mut self, key: &Value) {
        let b = self.bucket_of(key);
        if let Some(i) = self.buckets[b].iter().position(|(k, _)| k == key) {
            self.buckets[b].remove(i);
        }
    }

    fn all_pairs(&self) -> Vec<(Value, Value)> {
        self.buckets.iter().flatten().cloned().collect()
    }

    /// The buckets agree with the model `contents` when they hold the same
    /// multiset of bindings and, for each key, the same recency order.
    fn agrees_with(&self, contents: &[Value]) -> Result<(), String> {
        let model: Vec<(Value, Value)> = contents
            .iter()
            .map(|v| match v {
                Value::Tuple(kv) if kv.len() == 2 => (kv[0].clone(), kv[1].clone()),
                other => (other.clone(), Value::Unit),
            })
            .collect();
        let mut mine = self.all_pairs();
        let mut theirs = model.clone();
        mine.sort();
        theirs.sort();
        if mine != theirs {
            return Err("bucket contents disagree with the model multiset".to_string());
        }
        for bucket in &self.buckets {
            for key in bucket.iter().map(|(k, _)| k) {
                let in_bucket: Vec<&Value> = bucket
                    .iter()
                    .filter(|(k, _)| k == key)
                    .map(|(_, v)| v)
                    .collect();
                let in_model: Vec<&Value> = model
                    .iter()
                    .filter(|(k, _)| k == key)
                    .map(|(_, v)| v)
                    .collect();
                if in_bucket != in_model {
                    return Err(format!(
                        "recency order for key {key} disagrees with the model"
                    ));
                }
            }
        }
        Ok(())
    }
}

pub struct BucketHashtblAdapter {
    mutation: HashtblMutation,
    instances: Vec<BucketHashtbl>,
}

impl BucketHashtblAdapter {
    pub fn new(mutation: HashtblMutation) -> Self {
        BucketHashtblAdapter {
            mutation,
            instances: Vec::new(),
        }
    }

    pub fn reference() -> Self {
        Self::new(HashtblMutation::None)
    }
}

impl ImplAdapter for BucketHashtblAdapter {
    fn call(&mut self, op: &str, args: &[CallArg]) -> AdapterOutcome {
        let mut suts = Vec::new();
        let mut values = Vec::new();
        for a in args {
            match a {
                CallArg::Sut(id) => suts.push(*id),
                CallArg::Value(v) => values.push(v.clone()),
            }
        }
        match op {
            "create" => {
                // `?random` is ignored; `size` only sizes the buckets.
                let size = values.iter().find_map(Value::as_int).unwrap_or(16);
                self.instances.push(BucketHashtbl::new(size));
                AdapterOutcome::NewInstance(self.instances.len() - 1)
            }
            "add" => {
                let h = &mut self.instances[suts[0]];
                h.add(values[0].clone(), values[1].clone(), self.mutation);
                AdapterOutcome::Value(Value::Unit)
            }
            "mem" => {
                let h = &self.instances[suts[0]];
                let answer = if self.mutation == HashtblMutation::MemAlwaysTrue {
                    true
                } else {
                    h.mem(&values[0])
                };
                AdapterOutcome::Value(Value::Bool(answer))
            }
            "find" => {
                let h = &self.instances[suts[0]];
                match h.find(&values[0]) {
                    Some(v) => AdapterOutcome::Value(v),
                    None => AdapterOutcome::Raised(NOT_FOUND_EXN.to_string()),
                }
            }
            "remove" => {
                let h = &mut self.instances[suts[0]];
                h.remove(&values[0]);
                AdapterOutcome::Value(Value::Unit)
            }
            other => panic!("hashtbl adapter: unknown operation `{other}`"),
        }
    }

    fn rep_invariant(
        &self,
        instance: InstanceId,
        models: &ModelState,
    ) -> Option<Result<(), String>> {
        let h = self.instances.get(instance)?;
        let check = match models.get(instance, "contents") {
            Some(Value::Seq(contents)) => h.agrees_with(contents),
            _ => Ok(()),
        };
        Some(check)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_prepends_within_bucket() {
        let mut h = BucketHashtbl::new(4);
        h.add(Value::Int(1), Value::Bool(true), HashtblMutation::None);
        h.add(Value::Int(1), Value::Bool(false), HashtblMutation::None);
        assert_eq!(h.find(&Value::Int(1)), Some(Value::Bool(false)));
        h.agrees_with(&[
            Value::Tuple(vec![Value::Int(1), Value::Bool(false)]),
            Value::Tuple(vec![Value::Int(1), Value::Bool(true)]),
        ])
        .unwrap();
    }

    #[test]
    fn mem_on_missing_key_is_false() {
        let mut h = BucketHashtbl::new(4);
        h.add(Value::Int(1), Value::Bool(true), HashtblMutation::None);
        assert!(!h.mem(&Value::Int(2)));
    }

    #[test]
    fn remove_takes_most_recent_binding() {
        let mut h = BucketHashtbl::new(4);
        h.add(Value::Int(1), Value::Bool(true), HashtblMutation::None);
        h.add(Value::Int(1), Value::Bool(false), HashtblMutation::None);
        h.remove(&Value::Int(1));
        assert_eq!(h.find(&Value::Int(1)), Some(Value::Bool(true)));
    }

    #[test]
    fn append_mutation_breaks_recency_order() {
        let mut h = BucketHashtbl::new(1);
        h.add(
            Value::Int(1),
            Value::Bool(true),
            HashtblMutation::AddAppends,
        );
        h.add(
            Value::Int(1),
            Value::Bool(false),
            HashtblMutation::AddAppends,
        );
        let model = [
            Value::Tuple(vec![Value::Int(1), Value::Bool(false)]),
            Value::Tuple(vec![Value::Int(1), Value::Bool(true)]),
        ];
        assert!(h.agrees_with(&model).is_err());
    }

    #[test]
    fn size_zero_still_gets_a_bucket() {
        let mut h = BucketHashtbl::new(0);
        h.add(Value::Int(5), Value::Bool(true), HashtblMutation::None);
        assert!(h.mem(&Value::Int(5)));
    }
}
