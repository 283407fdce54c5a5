//! Multi-indices over d coordinates with the graded-lexicographic order.
//!
//! Every matrix layout and coefficient file in the crate is indexed by this
//! order: total degree ascending, ties broken lexicographically with the
//! first coordinate strongest (so for d = 2, k = 2 the order is
//! 1, x1, x2, x1^2, x1*x2, x2^2).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

/// Exponent vector alpha with x^alpha = prod_i x_i^{alpha_i}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// x^alpha at the given point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (xi, &e) in x.iter().zip(&self.0) {
            for _ in 0..e {
                v *= xi;
            }
        }
        v
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        // graded ties: lexicographic with larger leading exponents first
        for (a, b) in self.0.iter().zip(&other.0) {
            match b.cmp(a) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

/// Number of multi-indices of dimension d with degree at most k, C(d+k, k).
pub fn basis_size(d: usize, k: u32) -> usize {
    let mut n: u128 = 1;
    for i in 1..=k as u128 {
        n = n * (d as u128 + i) / i;
    }
    n as usize
}

/// All multi-indices with |alpha| <= k in graded-lex order.
pub fn enumerate(d: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(basis_size(d, k));
    let mut cur = alloc::vec![0u32; d];
    for grade in 0..=k {
        push_grade(&mut out, &mut cur, 0, grade);
    }
    out
}

fn push_grade(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e;
        push_grade(out, cur, pos + 1, remaining - e);
        cur[pos] = 0;
    }
}

/// The monomial basis {x^alpha : |alpha| <= k} with a one-multiplication
/// evaluation scheme: each nonconstant monomial is some x_j times an earlier
/// basis element.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    pub d: usize,
    pub k: u32,
    pub indices: Vec<MultiIndex>,
    /// (coordinate j, position of alpha - e_j) for each nonconstant entry.
    step: Vec<(usize, usize)>,
}

impl MonomialBasis {
    pub fn new(d: usize, k: u32) -> Self {
        let indices = enumerate(d, k);
        let pos: BTreeMap<&MultiIndex, usize> =
            indices.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let mut step = Vec::with_capacity(indices.len());
        for alpha in &indices {
            if alpha.degree() == 0 {
                step.push((0, 0));
                continue;
            }
            let j = alpha.0.iter().position(|&e| e > 0).unwrap();
            let mut parent = alpha.clone();
            parent.0[j] -= 1;
            step.push((j, pos[&parent]));
        }
        Self { d, k, indices, step }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Positions of the leading basis slice of each degree: entry c is the
    /// number of indices with degree <= c.
    pub fn degree_offsets(&self) -> Vec<usize> {
        (0..=self.k)
            .map(|c| self.indices.iter().take_while(|a| a.degree() <= c).count())
            .collect()
    }

    /// Evaluate every monomial at x into `out` (length >= len()).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.d);
        out[0] = 1.0;
        for i in 1..self.indices.len() {
            let (j, p) = self.step[i];
            out[i] = x[j] * out[p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn grlex_order_d2_k2() {
        let idx = enumerate(2, 2);
        let exps: Vec<Vec<u32>> = idx.iter().map(|a| a.0.clone()).collect();
        assert_eq!(
            exps,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn basis_size_matches_enumeration() {
        for d in 1..=4 {
            for k in 0..=5 {
                assert_eq!(enumerate(d, k).len(), basis_size(d, k));
            }
        }
    }

    #[test]
    fn order_is_total_and_sorted() {
        let idx = enumerate(3, 4);
        for w in idx.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn eval_scheme_matches_direct() {
        let basis = MonomialBasis::new(3, 4);
        let x = [0.7, -1.3, 2.1];
        let mut out = vec![0.0; basis.len()];
        basis.eval_into(&x, &mut out);
        for (i, alpha) in basis.indices.iter().enumerate() {
            let direct = alpha.eval(&x);
            assert!((out[i] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn degree_offsets_are_prefix_counts() {
        let basis = MonomialBasis::new(4, 5);
        let offs = basis.degree_offsets();
        assert_eq!(offs.len(), 6);
        assert_eq!(offs[0], 1);
        assert_eq!(*offs.last().unwrap(), basis.len());
        for c in 0..=5u32 {
            let n = basis.indices.iter().filter(|a| a.degree() <= c).count();
            assert_eq!(offs[c as usize], n);
        }
    }
}
