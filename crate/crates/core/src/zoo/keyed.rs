use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ZooError;
use crate::rng;

/// Largest word size supported by the hypercube primitives.
pub const MAX_M: u32 = 16;

// Tables up to this many entries are materialized; larger ones are read from
// the keystream on demand.
const MATERIALIZE_LIMIT: u64 = 1 << 22;

pub(crate) fn check_m(m: u32) -> Result<(), ZooError> {
    if m == 0 || m > MAX_M {
        return Err(ZooError::MTooLarge(m));
    }
    Ok(())
}

/// A uniformly random bijection of `[0, n)` chosen by a seeded shuffle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyedPermutation {
    key: u64,
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl KeyedPermutation {
    /// Permutation of the m-bit hypercube.
    pub fn new(key: u64, m: u32) -> Result<Self, ZooError> {
        check_m(m)?;
        Ok(Self::over(key, 1 << m))
    }

    /// Permutation of `[0, n)`.
    pub fn over(key: u64, n: usize) -> Self {
        let mut forward: Vec<usize> = (0..n).collect();
        forward.shuffle(&mut rng::stream(key, "permutation", n as u64));
        let mut inverse = vec![0; n];
        for (x, &y) in forward.iter().enumerate() {
            inverse[y] = x;
        }
        Self {
            key,
            forward,
            inverse,
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.forward[x]
    }

    #[inline]
    pub fn invert(&self, y: usize) -> usize {
        self.inverse[y]
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }
}

/// A keyed function `(s, a) → s'` on the m-bit hypercube with uniform entries.
///
/// Entry `(s, a)` is the low `m` bits of keystream word `s · 2^action_bits + a`,
/// so any entry can be read without generating the rest.
#[derive(Debug, Clone)]
pub struct KeyedFunction {
    key: u64,
    m: u32,
    action_bits: u32,
    table: Option<Vec<u16>>,
}

impl KeyedFunction {
    pub fn new(key: u64, m: u32, action_bits: u32) -> Result<Self, ZooError> {
        check_m(m)?;
        if action_bits == 0 || action_bits > m {
            return Err(ZooError::InvalidActionBits { m, action_bits });
        }
        let mut f = Self {
            key,
            m,
            action_bits,
            table: None,
        };
        let entries = 1u64 << (m + action_bits);
        if entries <= MATERIALIZE_LIMIT {
            let mut stream = f.stream();
            let mask = f.mask();
            f.table = Some(
                (0..entries)
                    .map(|_| (stream.next_u32() & mask) as u16)
                    .collect(),
            );
        }
        Ok(f)
    }

    fn stream(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(rng::derive_seed(
            self.key,
            "keyed-function",
            u64::from(self.m),
        ))
    }

    fn mask(&self) -> u32 {
        ((1u64 << self.m) - 1) as u32
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn action_bits(&self) -> u32 {
        self.action_bits
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> usize {
        let index = (s << self.action_bits) | a;
        match &self.table {
            Some(t) => t[index] as usize,
            None => {
                let mut stream = self.stream();
                stream.set_word_pos(index as u128);
                (stream.next_u32() & self.mask()) as usize
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_is_a_bijection() {
        let p = KeyedPermutation::new(3, 8).unwrap();
        for x in 0..256 {
            assert_eq!(p.apply(p.invert(x)), x);
        }
    }

    #[test]
    fn one_bit_permutations_take_both_forms() {
        let forms: std::collections::HashSet<Vec<usize>> = (0..64)
            .map(|k| KeyedPermutation::new(k, 1).unwrap().forward().to_vec())
            .collect();
        assert_eq!(forms.len(), 2);
    }

    #[test]
    fn bad_word_sizes() {
        assert_eq!(KeyedPermutation::new(0, 17), Err(ZooError::MTooLarge(17)));
        assert_eq!(KeyedPermutation::new(0, 0), Err(ZooError::MTooLarge(0)));
        assert!(KeyedFunction::new(0, 4, 5).is_err());
    }

    #[test]
    fn lazy_and_materialized_tables_agree() {
        let f = KeyedFunction::new(9, 6, 6).unwrap();
        let mut lazy = f.clone();
        lazy.table = None;
        for s in 0..64 {
            for a in 0..64 {
                assert_eq!(f.get(s, a), lazy.get(s, a));
            }
        }
    }
}
