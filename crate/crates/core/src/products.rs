//! Level-by-level enumeration of word products.
//!
//! Level `n` holds `A_w` for every word of length `n`, in lexicographic
//! order: the child of entry `p` by symbol `k` sits at `p * M + k` and equals
//! `A_k * parent`. Products are kept in double precision with a zero flag that
//! is exact under the rational policy.

use nalgebra::{DMatrix, DMatrixView};
use rayon::prelude::*;

use crate::error::Result;
use crate::linalg;
use crate::tuple::{Budget, MatrixTuple, Word};

/// Relative size below which a float product of an exact tuple is
/// recomputed exactly.
const EXACT_RECHECK: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Level {
    n: usize,
    symbols: usize,
    dim: usize,
    data: Vec<f64>,
    zero: Vec<bool>,
}

impl Level {
    pub fn length(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.zero.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zero.is_empty()
    }

    pub fn view(&self, i: usize) -> DMatrixView<'_, f64> {
        let d2 = self.dim * self.dim;
        DMatrixView::from_slice(&self.data[i * d2..(i + 1) * d2], self.dim, self.dim)
    }

    pub fn matrix(&self, i: usize) -> DMatrix<f64> {
        self.view(i).into_owned()
    }

    pub fn is_zero(&self, i: usize) -> bool {
        self.zero[i]
    }

    pub fn word(&self, i: usize) -> Word {
        Word::from_index(i, self.symbols, self.n)
    }

    /// Order-preserving parallel map over the products of this level.
    pub fn par_map<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, DMatrixView<'_, f64>, bool) -> T + Sync + Send,
    {
        (0..self.len()).into_par_iter().map(|i| f(i, self.view(i), self.zero[i])).collect()
    }
}

/// Streams the levels `0, 1, 2, ...` of the product tree of a tuple.
pub struct ProductTree<'a> {
    tuple: &'a MatrixTuple,
    budget: Budget,
    level: Level,
    max_norm: f64,
}

impl<'a> ProductTree<'a> {
    pub fn new(tuple: &'a MatrixTuple, budget: &Budget) -> Self {
        let d = tuple.dim();
        let id = DMatrix::<f64>::identity(d, d);
        ProductTree {
            tuple,
            budget: *budget,
            level: Level { n: 0, symbols: tuple.symbols(), dim: d, data: id.as_slice().to_vec(), zero: vec![false] },
            max_norm: tuple.max_operator_norm(),
        }
    }

    pub fn level(&self) -> &Level {
        &self.level
    }

    /// Replaces the current level by the next one.
    pub fn advance(&mut self) -> Result<&Level> {
        let n = self.level.n + 1;
        let m = self.tuple.symbols();
        self.budget.check_words(m, n)?;
        let d = self.tuple.dim();
        let d2 = d * d;
        let gens = self.tuple.floats();
        let exact = self.tuple.is_exact();
        let recheck_scale = EXACT_RECHECK * self.max_norm.powi(n as i32);
        let zero_threshold = self.tuple.zero_threshold(n);
        let prev = &self.level;
        let tuple = self.tuple;
        let chunks: Vec<(Vec<f64>, Vec<bool>)> = (0..prev.len())
            .into_par_iter()
            .map(|p| {
                let mut data = vec![0.0; m * d2];
                let mut zero = vec![true; m];
                if prev.zero[p] {
                    return (data, zero);
                }
                let parent = prev.view(p);
                for k in 0..m {
                    let mut child = &gens[k] * parent;
                    let size = linalg::max_abs(&child);
                    let is_zero = if exact {
                        if size <= recheck_scale {
                            let w = Word::from_index(p * m + k, m, n);
                            let q = tuple.word_product(&w).expect("symbols in range");
                            child = q.float().clone();
                            q.is_zero(0.0)
                        } else {
                            false
                        }
                    } else {
                        size <= zero_threshold
                    };
                    if is_zero {
                        child.fill(0.0);
                    }
                    data[k * d2..(k + 1) * d2].copy_from_slice(child.as_slice());
                    zero[k] = is_zero;
                }
                (data, zero)
            })
            .collect();
        let mut data = Vec::with_capacity(prev.len() * m * d2);
        let mut zero = Vec::with_capacity(prev.len() * m);
        for (dch, zch) in chunks {
            data.extend_from_slice(&dch);
            zero.extend_from_slice(&zch);
        }
        self.level = Level { n, symbols: m, dim: d, data, zero };
        Ok(&self.level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuple::enumerate_words;

    #[test]
    fn levels_match_direct_products() {
        let t = MatrixTuple::from_ints(2, &[&[0, 2, 1, 0], &[1, 1, 2, 0], &[1, -1, 0, 3]]).unwrap();
        let b = Budget::default();
        let mut tree = ProductTree::new(&t, &b);
        for n in 1..=4 {
            let level = tree.advance().unwrap();
            assert_eq!(level.len(), 3usize.pow(n as u32));
            for (i, w) in enumerate_words(3, n, &b).unwrap().enumerate() {
                let direct = t.word_product(&w).unwrap();
                assert_eq!(level.word(i), w);
                assert!((level.matrix(i) - direct.float()).abs().max() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_zero_flags() {
        let t = MatrixTuple::from_ints(2, &[&[0, 1, 0, 0], &[0, 0, 1, 0]]).unwrap();
        let mut tree = ProductTree::new(&t, &Budget::default());
        tree.advance().unwrap();
        let l2 = tree.advance().unwrap();
        let zeros: Vec<bool> = (0..4).map(|i| l2.is_zero(i)).collect();
        assert_eq!(zeros, [true, false, false, true]);
    }

    #[test]
    fn budget_stops_enumeration() {
        let t = MatrixTuple::from_ints(1, &[&[1], &[2]]).unwrap();
        let b = Budget { product_cap: 4, ..Budget::default() };
        let mut tree = ProductTree::new(&t, &b);
        tree.advance().unwrap();
        tree.advance().unwrap();
        assert!(tree.advance().is_err());
    }
}
