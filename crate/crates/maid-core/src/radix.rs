//! Mixed-radix indexing for assignments over ordered variable lists.
//!
//! An assignment to variables `(v_1, .., v_k)` with cardinalities `(c_1, ..,
//! c_k)` is packed into a single index in lexicographic order: the last
//! variable varies fastest.

use alloc::vec::Vec;

/// Number of assignments over the given cardinalities. Empty product is 1.
pub fn count(cards: &[usize]) -> usize {
    cards.iter().product()
}

/// Packs value indices into a lexicographic rank.
pub fn pack(cards: &[usize], values: &[usize]) -> usize {
    debug_assert_eq!(cards.len(), values.len());
    let mut idx = 0;
    for (c, v) in cards.iter().zip(values) {
        debug_assert!(v < c);
        idx = idx * c + v;
    }
    idx
}

/// Unpacks a lexicographic rank into value indices.
pub fn unpack(cards: &[usize], mut idx: usize) -> Vec<usize> {
    let mut out = alloc::vec![0; cards.len()];
    for i in (0..cards.len()).rev() {
        out[i] = idx % cards[i];
        idx /= cards[i];
    }
    out
}
