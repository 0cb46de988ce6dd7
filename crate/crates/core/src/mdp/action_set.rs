use serde::{Deserialize, Serialize};

use super::ValueTables;

/// Set of actions at one state, stored as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionSet {
    bits: Vec<u64>,
    num_actions: usize,
}

impl ActionSet {
    pub fn empty(num_actions: usize) -> Self {
        Self {
            bits: vec![0; num_actions.div_ceil(64)],
            num_actions,
        }
    }

    pub fn full(num_actions: usize) -> Self {
        let mut set = Self::empty(num_actions);
        for a in 0..num_actions {
            set.insert(a);
        }
        set
    }

    pub fn from_actions(num_actions: usize, actions: &[usize]) -> Self {
        let mut set = Self::empty(num_actions);
        for &a in actions {
            set.insert(a);
        }
        set
    }

    pub fn insert(&mut self, a: usize) {
        self.bits[a / 64] |= 1 << (a % 64);
    }

    pub fn contains(&self, a: usize) -> bool {
        a < self.num_actions && self.bits[a / 64] & (1 << (a % 64)) != 0
    }

    pub fn intersect_with(&mut self, other: &ActionSet) {
        for (x, y) in self.bits.iter_mut().zip(&other.bits) {
            *x &= y;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Lowest action in the set.
    pub fn first(&self) -> Option<usize> {
        self.bits
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_actions).filter(move |&a| self.contains(a))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl Serialize for ActionSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_vec().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ActionSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let actions = Vec::<usize>::deserialize(deserializer)?;
        let n = actions.iter().max().map_or(0, |m| m + 1);
        Ok(Self::from_actions(n, &actions))
    }
}

/// `A*(s) = { a : Q(s,a) >= max_a' Q(s,a') - tie_tol }` for every state. Never empty.
pub fn optimal_action_sets(tables: &ValueTables, tie_tol: f64) -> Vec<ActionSet> {
    (0..tables.values.len())
        .map(|s| {
            let row = tables.q_row(s);
            let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut set = ActionSet::empty(tables.num_actions);
            for (a, &q) in row.iter().enumerate() {
                if q >= best - tie_tol {
                    set.insert(a);
                }
            }
            set
        })
        .collect()
}
