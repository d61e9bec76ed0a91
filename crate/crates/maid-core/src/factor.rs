//! Dense factors over node value indices, for exact sum-product inference.

use alloc::vec::Vec;

use crate::model::NodeId;
use crate::radix;

/// A nonnegative table over an ordered scope of variables. Scope is kept
/// sorted by node index; values are indexed lexicographically.
#[derive(Clone, Debug)]
pub struct Factor {
    pub scope: Vec<NodeId>,
    pub cards: Vec<usize>,
    pub values: Vec<f64>,
}

impl Factor {
    /// The scalar factor 1.
    pub fn unit() -> Self {
        Factor { scope: Vec::new(), cards: Vec::new(), values: alloc::vec![1.0] }
    }

    /// Builds the factor for one node's table: scope is the node's parents
    /// plus the node, rows follow the CPD row convention.
    pub fn from_table(
        node: NodeId,
        node_card: usize,
        parents: &[NodeId],
        parent_cards: &[usize],
        rows: &[Vec<f64>],
    ) -> Self {
        let mut scope: Vec<(NodeId, usize)> =
            parents.iter().copied().zip(parent_cards.iter().copied()).collect();
        scope.push((node, node_card));
        scope.sort_unstable_by_key(|&(n, _)| n);
        let cards: Vec<usize> = scope.iter().map(|&(_, c)| c).collect();
        let ids: Vec<NodeId> = scope.iter().map(|&(n, _)| n).collect();

        let mut values = alloc::vec![0.0; radix::count(&cards)];
        for (row, dist) in rows.iter().enumerate() {
            let parent_values = radix::unpack(parent_cards, row);
            for (v, &p) in dist.iter().enumerate() {
                let assignment: Vec<usize> = ids
                    .iter()
                    .map(|id| {
                        if *id == node {
                            v
                        } else {
                            let k = parents.iter().position(|p| p == id).unwrap();
                            parent_values[k]
                        }
                    })
                    .collect();
                values[radix::pack(&cards, &assignment)] = p;
            }
        }
        Factor { scope: ids, cards, values }
    }

    fn position(&self, node: NodeId) -> Option<usize> {
        self.scope.iter().position(|&n| n == node)
    }

    /// Fixes `node = value`, dropping it from the scope. No-op when the node
    /// is not in scope.
    pub fn reduce(&self, node: NodeId, value: usize) -> Factor {
        let Some(pos) = self.position(node) else { return self.clone() };
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let mut values = alloc::vec![0.0; radix::count(&cards)];
        for (idx, out) in values.iter_mut().enumerate() {
            let mut assignment = radix::unpack(&cards, idx);
            assignment.insert(pos, value);
            *out = self.values[radix::pack(&self.cards, &assignment)];
        }
        Factor { scope, cards, values }
    }

    /// Pointwise product over the union scope.
    pub fn multiply(&self, other: &Factor) -> Factor {
        let mut scope: Vec<(NodeId, usize)> = self
            .scope
            .iter()
            .copied()
            .zip(self.cards.iter().copied())
            .chain(other.scope.iter().copied().zip(other.cards.iter().copied()))
            .collect();
        scope.sort_unstable_by_key(|&(n, _)| n);
        scope.dedup();
        let ids: Vec<NodeId> = scope.iter().map(|&(n, _)| n).collect();
        let cards: Vec<usize> = scope.iter().map(|&(_, c)| c).collect();

        let lhs: Vec<usize> = self.scope.iter().map(|n| ids.iter().position(|m| m == n).unwrap()).collect();
        let rhs: Vec<usize> =
            other.scope.iter().map(|n| ids.iter().position(|m| m == n).unwrap()).collect();

        let mut values = alloc::vec![0.0; radix::count(&cards)];
        for (idx, out) in values.iter_mut().enumerate() {
            let assignment = radix::unpack(&cards, idx);
            let a: Vec<usize> = lhs.iter().map(|&k| assignment[k]).collect();
            let b: Vec<usize> = rhs.iter().map(|&k| assignment[k]).collect();
            *out = self.values[radix::pack(&self.cards, &a)]
                * other.values[radix::pack(&other.cards, &b)];
        }
        Factor { scope: ids, cards, values }
    }

    /// Sums a variable out of the scope. No-op when absent.
    pub fn sum_out(&self, node: NodeId) -> Factor {
        let Some(pos) = self.position(node) else { return self.clone() };
        let card = self.cards[pos];
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let mut values = alloc::vec![0.0; radix::count(&cards)];
        for (idx, out) in values.iter_mut().enumerate() {
            let mut assignment = radix::unpack(&cards, idx);
            assignment.insert(pos, 0);
            for v in 0..card {
                assignment[pos] = v;
                *out += self.values[radix::pack(&self.cards, &assignment)];
            }
        }
        Factor { scope, cards, values }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn table_round_trip() {
        // P(B | A) with A = NodeId(3), B = NodeId(1): scope sorts to [B, A].
        let f = Factor::from_table(
            NodeId(1),
            2,
            &[NodeId(3)],
            &[2],
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
        );
        assert_eq!(f.scope, vec![NodeId(1), NodeId(3)]);
        // values indexed by (B, A)
        assert_eq!(f.values, vec![0.9, 0.2, 0.1, 0.8]);
        let g = f.reduce(NodeId(3), 1);
        assert_eq!(g.values, vec![0.2, 0.8]);
        let s = f.sum_out(NodeId(1));
        assert_eq!(s.values, vec![1.0, 1.0]);
    }

    #[test]
    fn multiply_aligns_scopes() {
        let f = Factor::from_table(NodeId(0), 2, &[], &[], &[vec![0.6, 0.4]]);
        let g = Factor::from_table(
            NodeId(1),
            2,
            &[NodeId(0)],
            &[2],
            &[vec![1.0, 0.0], vec![0.25, 0.75]],
        );
        let joint = f.multiply(&g);
        assert_eq!(joint.scope, vec![NodeId(0), NodeId(1)]);
        let expect = [0.6, 0.0, 0.1, 0.3];
        for (a, b) in joint.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((joint.total() - 1.0).abs() < 1e-12);
    }
}
