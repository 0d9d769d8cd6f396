//! Graded-lexicographic multi-index tables.
//!
//! Multi-indices of total degree at most `order` in `dim` variables are
//! enumerated by increasing degree; within one degree they are sorted
//! lexicographically with the larger first component first. For `dim = 2`,
//! `order = 2` the order is `(0,0) (1,0) (0,1) (2,0) (1,1) (0,2)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Enumeration of `{α ∈ ℕ^dim : |α| ≤ order}` together with the product table.
#[derive(Debug)]
pub struct IndexMap {
    dim: usize,
    order: usize,
    alphas: Vec<Vec<u32>>,
    degrees: Vec<usize>,
    lookup: HashMap<Vec<u32>, usize>,
    /// `(i, j, k)` with `alphas[i] + alphas[j] = alphas[k]`.
    products: Vec<(u32, u32, u32)>,
}

impl IndexMap {
    fn build(dim: usize, order: usize) -> Self {
        let mut alphas = Vec::new();
        for deg in 0..=order {
            let mut cur = vec![0u32; dim];
            compositions(deg as u32, 0, &mut cur, &mut alphas);
        }
        let degrees = alphas
            .iter()
            .map(|a| a.iter().map(|&v| v as usize).sum())
            .collect::<Vec<usize>>();
        let lookup = alphas
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect::<HashMap<_, _>>();
        let mut products = Vec::new();
        let mut sum = vec![0u32; dim];
        for (i, a) in alphas.iter().enumerate() {
            for (j, b) in alphas.iter().enumerate() {
                if degrees[i] + degrees[j] > order {
                    // degrees are sorted, so no later j fits either
                    break;
                }
                for t in 0..dim {
                    sum[t] = a[t] + b[t];
                }
                let k = lookup[&sum];
                products.push((i as u32, j as u32, k as u32));
            }
        }
        IndexMap {
            dim,
            order,
            alphas,
            degrees,
            lookup,
            products,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of multi-indices, equal to `C(order + dim, dim)`.
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alpha(&self, i: usize) -> &[u32] {
        &self.alphas[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn alphas(&self) -> &[Vec<u32>] {
        &self.alphas
    }

    pub fn index_of(&self, alpha: &[u32]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    pub(crate) fn products(&self) -> &[(u32, u32, u32)] {
        &self.products
    }

    /// Index of the unit multi-index `e_var`.
    pub fn unit(&self, var: usize) -> Option<usize> {
        let mut e = vec![0u32; self.dim];
        e[var] = 1;
        self.index_of(&e)
    }
}

fn compositions(rem: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    let dim = cur.len();
    if dim == 0 {
        if rem == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == dim - 1 {
        cur[pos] = rem;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for v in (0..=rem).rev() {
        cur[pos] = v;
        compositions(rem - v, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Shared table for `(dim, order)`; tables are built once per process.
pub fn index_map(dim: usize, order: usize) -> Arc<IndexMap> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<IndexMap>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
    guard
        .entry((dim, order))
        .or_insert_with(|| Arc::new(IndexMap::build(dim, order)))
        .clone()
}

/// `C(n, k)` as f64.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `α! = Π α_i!`.
pub fn multi_factorial(alpha: &[u32]) -> f64 {
    alpha.iter().map(|&a| factorial(a as usize)).product()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order_d2() {
        let m = index_map(2, 2);
        let got: Vec<Vec<u32>> = m.alphas().to_vec();
        let want = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn table_size_is_binomial() {
        for d in 1..5 {
            for k in 0..7 {
                assert_eq!(index_map(d, k).len() as f64, binomial(k + d, d));
            }
        }
    }

    #[test]
    fn product_table_covers_all_pairs() {
        let m = index_map(3, 4);
        let mut count = 0;
        for i in 0..m.len() {
            for j in 0..m.len() {
                if m.degree(i) + m.degree(j) <= 4 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, m.products().len());
    }
}
