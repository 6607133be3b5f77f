use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::Record;
use crate::metamodel::Protocol;

/// Seeded source of choices. Each draw uses its own ChaCha stream, so the
/// state is just the seed and a counter and can be checkpointed as such.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draws {
    pub seed: u64,
    pub count: u64,
}

impl Draws {
    pub fn new(seed: u64) -> Self {
        Draws { seed, count: 0 }
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.count);
        self.count += 1;
        rng.gen_range(0..n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub seq: u64,
    pub message: String,
    pub record: Record,
}

/// Message buffer ordered by its protocol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Buffer {
    pub protocol: Protocol,
    pub items: Vec<Item>,
    next: u64,
}

impl Buffer {
    pub fn new(protocol: Protocol) -> Self {
        Buffer { protocol, items: Vec::new(), next: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn put(&mut self, message: &str, record: Record) {
        self.items.push(Item { seq: self.next, message: message.to_string(), record });
        self.next += 1;
    }

    pub fn has(&self, message: Option<&str>) -> bool {
        self.items.iter().any(|i| message.is_none_or(|m| i.message == m))
    }

    /// Removes the next item of the given type (any type for `None`).
    pub fn take(&mut self, message: Option<&str>, draws: &mut Draws) -> Option<Item> {
        let eligible: Vec<usize> =
            (0..self.items.len()).filter(|&i| message.is_none_or(|m| self.items[i].message == m)).collect();
        let pick = match &self.protocol {
            _ if eligible.is_empty() => return None,
            Protocol::Fifo => eligible[0],
            Protocol::Lifo => *eligible.last().unwrap(),
            Protocol::Random => eligible[draws.below(eligible.len())],
            // Missing keys sort last; ties keep arrival order.
            Protocol::Predicate(field) => *eligible
                .iter()
                .min_by(|&&a, &&b| {
                    let (x, y) = (self.items[a].record.get(field), self.items[b].record.get(field));
                    match (x, y) {
                        (Some(x), Some(y)) => x.cmp(y),
                        (Some(_), None) => std::cmp::Ordering::Less,
                        (None, Some(_)) => std::cmp::Ordering::Greater,
                        (None, None) => std::cmp::Ordering::Equal,
                    }
                    .then(a.cmp(&b))
                })
                .unwrap(),
        };
        Some(self.items.remove(pick))
    }
}
