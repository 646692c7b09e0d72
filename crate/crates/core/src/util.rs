//! Small numeric helpers shared across modules.

/// Smallest `l` such that `base^l >= n`, computed with exact integer
/// arithmetic. Floating-point logarithms misround at exact powers of the
/// base, which is precisely where the step-count formulas change value.
pub(crate) fn ceil_log(base: u64, n: u64) -> u64 {
    debug_assert!(base >= 2);
    debug_assert!(n >= 1);
    let mut level = 0u64;
    let mut reach: u128 = 1;
    while reach < u128::from(n) {
        reach = reach.saturating_mul(u128::from(base));
        level += 1;
    }
    level
}

/// `base^exp` with a wide accumulator; saturates far above any node count.
pub(crate) fn int_pow(base: u64, exp: u64) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(u128::from(base));
    }
    acc
}

/// Fixed-capacity bit set holding contributor node indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct NodeSet {
    words: Vec<u64>,
}

impl NodeSet {
    pub fn singleton(capacity: usize, member: usize) -> Self {
        let mut set = NodeSet {
            words: vec![0; capacity.div_ceil(64)],
        };
        set.insert(member);
        set
    }

    pub fn insert(&mut self, member: usize) {
        self.words[member / 64] |= 1u64 << (member % 64);
    }

    pub fn contains(&self, member: usize) -> bool {
        self.words[member / 64] & (1u64 << (member % 64)) != 0
    }

    pub fn union_with(&mut self, other: &NodeSet) {
        for (word, more) in self.words.iter_mut().zip(&other.words) {
            *word |= more;
        }
    }

    /// First of `0..n` not present, or `None` when the set covers all of them.
    pub fn first_missing(&self, n: usize) -> Option<usize> {
        for (i, &word) in self.words.iter().enumerate() {
            let lo = i * 64;
            if lo >= n {
                break;
            }
            let span = (n - lo).min(64);
            let mask = if span == 64 { !0u64 } else { (1u64 << span) - 1 };
            let missing = !word & mask;
            if missing != 0 {
                return Some(lo + missing.trailing_zeros() as usize);
            }
        }
        None
    }
}
