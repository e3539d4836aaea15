//! Hierarchical off-diagonal low-rank (HODLR) representation with an
//! O(N log^2 N) direct factorization.
//!
//! The index range is bisected recursively; at every internal node the two
//! off-diagonal blocks are compressed by adaptive cross approximation
//! ([`aca`]), leaves store dense diagonal blocks. The factorization writes
//! the matrix as a product `A = A_k A_{k-1} ... A_1 A_0` of block-diagonal
//! factors: `A_k` holds the dense leaf blocks, and each `A_l` for `l < k`
//! has `2^l` diagonal blocks of the form identity-plus-low-rank, obtained by
//! propagating the inverses of all deeper factors through the off-diagonal
//! left factors (recursive Sherman-Morrison-Woodbury). Applying one
//! identity-plus-low-rank inverse costs a pair of thin products and a small
//! capacitance solve, so solves after factorization are cheap and many
//! right-hand sides amortize the factorization.

mod aca;

pub use aca::{aca, AcaResult};

use ndarray::{s, Array1, Array2};
use ndarray_linalg::Inverse;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

type Cplx = Complex64;

#[derive(Debug, Error)]
pub enum HodlrError {
    #[error("matrix size must be at least 1")]
    EmptyMatrix,
    #[error("compression tolerance {0} outside [1e-14, 1e-2]")]
    BadTolerance(f64),
    #[error("diagonal block at rows {start}..{end} is numerically singular")]
    SingularBlock { start: usize, end: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// One compressed off-diagonal block, `block ~ u * v^T`.
#[derive(Debug, Clone)]
pub struct LowRank {
    pub u: Array2<Cplx>,
    pub v: Array2<Cplx>,
    pub cap_hit: bool,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf {
        dense: Array2<Cplx>,
    },
    Internal {
        /// rows of child1 x columns of child2
        top: LowRank,
        /// rows of child2 x columns of child1
        bot: LowRank,
    },
}

#[derive(Debug, Clone)]
struct TreeNode {
    start: usize,
    len: usize,
    level: usize,
    kind: NodeKind,
}

/// Compression statistics per level, for reporting.
#[derive(Debug, Clone, Default)]
pub struct HodlrStats {
    /// Maximum off-diagonal rank on each level (level 0 = root split).
    pub max_rank_per_level: Vec<usize>,
    pub cap_hits: usize,
    pub depth: usize,
    pub leaf_count: usize,
}

#[derive(Debug, Clone)]
pub struct HodlrTree {
    pub n: usize,
    pub leaf_size: usize,
    pub eps: f64,
    depth: usize,
    nodes: Vec<TreeNode>,
}

/// Build the tree by bisection, compressing every off-diagonal block with
/// ACA at tolerance `eps` and storing dense leaf blocks.
pub fn build<E>(entry: &E, n: usize, leaf_size: usize, eps: f64) -> Result<HodlrTree, HodlrError>
where
    E: Fn(usize, usize) -> Cplx + Sync,
{
    if n == 0 {
        return Err(HodlrError::EmptyMatrix);
    }
    if !(1e-14..=1e-2).contains(&eps) {
        return Err(HodlrError::BadTolerance(eps));
    }
    let leaf_size = leaf_size.max(8);
    let depth = if n <= 2 * leaf_size {
        0
    } else {
        (n as f64 / leaf_size as f64).log2().floor() as usize
    };

    // lay out the binary tree, ranges split as evenly as possible
    let mut shells: Vec<(usize, usize, usize, bool)> = vec![(0, n, 0, depth == 0)];
    let mut cursor = 0;
    while cursor < shells.len() {
        let (start, len, level, is_leaf) = shells[cursor];
        if !is_leaf {
            let half = len / 2;
            let child_leaf = level + 1 == depth;
            shells.push((start, half, level + 1, child_leaf));
            shells.push((start + half, len - half, level + 1, child_leaf));
        }
        cursor += 1;
    }

    // fill leaves and compress off-diagonal blocks in parallel
    let built: Vec<TreeNode> = shells
        .par_iter()
        .map(|&(start, len, level, is_leaf)| {
            let kind = if is_leaf {
                let mut dense = Array2::zeros((len, len));
                for i in 0..len {
                    for j in 0..len {
                        dense[(i, j)] = entry(start + i, start + j);
                    }
                }
                NodeKind::Leaf { dense }
            } else {
                let half = len / 2;
                let (m1, m2) = (half, len - half);
                let top = aca(entry, start, m1, start + half, m2, eps);
                let bot = aca(entry, start + half, m2, start, m1, eps);
                NodeKind::Internal {
                    top: LowRank { u: top.u, v: top.v, cap_hit: top.cap_hit },
                    bot: LowRank { u: bot.u, v: bot.v, cap_hit: bot.cap_hit },
                }
            };
            TreeNode { start, len, level, kind }
        })
        .collect();

    Ok(HodlrTree { n, leaf_size, eps, depth, nodes: built })
}

impl HodlrTree {
    pub fn stats(&self) -> HodlrStats {
        let mut st = HodlrStats {
            max_rank_per_level: vec![0; self.depth],
            depth: self.depth,
            ..Default::default()
        };
        for node in &self.nodes {
            match &node.kind {
                NodeKind::Leaf { .. } => st.leaf_count += 1,
                NodeKind::Internal { top, bot } => {
                    let r = top.u.ncols().max(bot.u.ncols());
                    st.max_rank_per_level[node.level] =
                        st.max_rank_per_level[node.level].max(r);
                    st.cap_hits += top.cap_hit as usize + bot.cap_hit as usize;
                }
            }
        }
        st
    }

    /// `y = A x` through the compressed representation.
    pub fn matvec(&self, x: &Array1<Cplx>) -> Result<Array1<Cplx>, HodlrError> {
        if x.len() != self.n {
            return Err(HodlrError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let mut y = Array1::zeros(self.n);
        for node in &self.nodes {
            let (s0, len) = (node.start, node.len);
            match &node.kind {
                NodeKind::Leaf { dense } => {
                    let xs = x.slice(s![s0..s0 + len]);
                    let mut ys = y.slice_mut(s![s0..s0 + len]);
                    ys += &dense.dot(&xs);
                }
                NodeKind::Internal { top, bot } => {
                    let half = len / 2;
                    let x1 = x.slice(s![s0..s0 + half]);
                    let x2 = x.slice(s![s0 + half..s0 + len]);
                    if top.u.ncols() > 0 {
                        let t = top.v.t().dot(&x2);
                        let mut y1 = y.slice_mut(s![s0..s0 + half]);
                        y1 += &top.u.dot(&t);
                    }
                    if bot.u.ncols() > 0 {
                        let t = bot.v.t().dot(&x1);
                        let mut y2 = y.slice_mut(s![s0 + half..s0 + len]);
                        y2 += &bot.u.dot(&t);
                    }
                }
            }
        }
        Ok(y)
    }

    /// Worst relative Frobenius reconstruction error over all off-diagonal
    /// blocks against the exact entries (testing aid; dense cost).
    pub fn dense_block_error<E>(&self, entry: &E) -> f64
    where
        E: Fn(usize, usize) -> Cplx + Sync,
    {
        let mut worst = 0.0f64;
        for node in &self.nodes {
            if let NodeKind::Internal { top, bot } = &node.kind {
                let half = node.len / 2;
                for (lr, r0, c0, m, n) in [
                    (top, node.start, node.start + half, half, node.len - half),
                    (bot, node.start + half, node.start, node.len - half, half),
                ] {
                    let mut err2 = 0.0f64;
                    let mut ref2 = 0.0f64;
                    for i in 0..m {
                        for j in 0..n {
                            let want = entry(r0 + i, c0 + j);
                            let mut got = Cplx::new(0.0, 0.0);
                            for l in 0..lr.u.ncols() {
                                got += lr.u[(i, l)] * lr.v[(j, l)];
                            }
                            err2 += (got - want).norm_sqr();
                            ref2 += want.norm_sqr();
                        }
                    }
                    let e = if ref2 > 0.0 { (err2 / ref2).sqrt() } else { err2.sqrt() };
                    worst = worst.max(e);
                }
            }
        }
        worst
    }

    /// Factor into the chain of block-diagonal identity-plus-low-rank
    /// factors. Consumes the tree (left factors move into the chain).
    pub fn factorize(self) -> Result<HodlrFactorization, HodlrError> {
        factorize_tree(self)
    }
}

/// One identity-plus-low-rank diagonal factor block at some level:
/// `I + [0, u1 v2^T; u2 v1^T, 0]` over rows `start..start+m1+m2`.
struct SmwBlock {
    start: usize,
    m1: usize,
    m2: usize,
    /// left factors (already transformed by deeper factors)
    u1: Array2<Cplx>,
    u2: Array2<Cplx>,
    /// right factors: v2 pairs with u1 (columns of child2), v1 with u2
    v1: Array2<Cplx>,
    v2: Array2<Cplx>,
    /// inverse of the capacitance matrix `[[I, v2^T u2], [v1^T u1, I]]`
    cap_inv: Array2<Cplx>,
}

impl SmwBlock {
    /// In-place `x <- (I + W Z^T)^{-1} x` on rows `offset..offset+m1+m2`.
    fn apply_inverse_at(&self, x: &mut Array2<Cplx>, offset: usize) {
        let (ra, rb) = (self.u1.ncols(), self.u2.ncols());
        if ra + rb == 0 {
            return;
        }
        let (m1, m2) = (self.m1, self.m2);
        let cols = x.ncols();
        let x1 = x.slice(s![offset..offset + m1, ..]).to_owned();
        let x2 = x.slice(s![offset + m1..offset + m1 + m2, ..]).to_owned();
        let mut t = Array2::zeros((ra + rb, cols));
        if ra > 0 {
            t.slice_mut(s![..ra, ..]).assign(&self.v2.t().dot(&x2));
        }
        if rb > 0 {
            t.slice_mut(s![ra.., ..]).assign(&self.v1.t().dot(&x1));
        }
        let sol = self.cap_inv.dot(&t);
        if ra > 0 {
            let mut x1m = x.slice_mut(s![offset..offset + m1, ..]);
            x1m -= &self.u1.dot(&sol.slice(s![..ra, ..]));
        }
        if rb > 0 {
            let mut x2m = x.slice_mut(s![offset + m1..offset + m1 + m2, ..]);
            x2m -= &self.u2.dot(&sol.slice(s![ra.., ..]));
        }
    }

    /// In-place `x <- (I + W Z^T) x` (forward application, used by the
    /// factor-chain consistency check).
    fn apply_forward(&self, x: &mut Array2<Cplx>) {
        let (ra, rb) = (self.u1.ncols(), self.u2.ncols());
        if ra + rb == 0 {
            return;
        }
        let (s0, m1, m2) = (self.start, self.m1, self.m2);
        let x1 = x.slice(s![s0..s0 + m1, ..]).to_owned();
        let x2 = x.slice(s![s0 + m1..s0 + m1 + m2, ..]).to_owned();
        if ra > 0 {
            let t = self.v2.t().dot(&x2);
            let mut x1m = x.slice_mut(s![s0..s0 + m1, ..]);
            x1m += &self.u1.dot(&t);
        }
        if rb > 0 {
            let t = self.v1.t().dot(&x1);
            let mut x2m = x.slice_mut(s![s0 + m1..s0 + m1 + m2, ..]);
            x2m += &self.u2.dot(&t);
        }
    }
}

struct LeafInv {
    start: usize,
    len: usize,
    inv: Array2<Cplx>,
}

/// The factored chain `A = A_k ... A_0`.
pub struct HodlrFactorization {
    pub n: usize,
    leaves: Vec<LeafInv>,
    /// levels[l] holds the factor blocks of `A_l`; applied leaves-first when
    /// solving, root-first when multiplying.
    levels: Vec<Vec<SmwBlock>>,
    pub stats: HodlrStats,
}

fn factorize_tree(tree: HodlrTree) -> Result<HodlrFactorization, HodlrError> {
    let stats = tree.stats();
    let depth = tree.depth;
    let n = tree.n;
    let mut nodes = tree.nodes;

    // invert the leaf blocks (A_k)
    let leaves: Result<Vec<LeafInv>, HodlrError> = nodes
        .par_iter()
        .filter(|node| matches!(node.kind, NodeKind::Leaf { .. }))
        .map(|node| {
            let NodeKind::Leaf { dense } = &node.kind else { unreachable!() };
            let inv = dense.inv().map_err(|_| HodlrError::SingularBlock {
                start: node.start,
                end: node.start + node.len,
            })?;
            Ok(LeafInv { start: node.start, len: node.len, inv })
        })
        .collect();
    let mut leaves = leaves?;
    leaves.sort_by_key(|l| l.start);

    // transform every internal left factor by the leaf inverses (A_k^{-1})
    {
        let leaves_ref = &leaves;
        nodes.par_iter_mut().for_each(|node| {
            let (start, len) = (node.start, node.len);
            if let NodeKind::Internal { top, bot } = &mut node.kind {
                let half = len / 2;
                apply_leaf_inverses(leaves_ref, &mut top.u, start);
                apply_leaf_inverses(leaves_ref, &mut bot.u, start + half);
            }
        });
    }

    // process levels bottom-up: detach the factor blocks of level l, then
    // push their inverses through the left factors of all shallower nodes
    let mut levels: Vec<Vec<SmwBlock>> = (0..depth).map(|_| Vec::new()).collect();
    for level in (0..depth).rev() {
        let mut blocks: Vec<SmwBlock> = Vec::new();
        for node in nodes.iter_mut().filter(|nd| nd.level == level) {
            let (start, len) = (node.start, node.len);
            let half = len / 2;
            let NodeKind::Internal { top, bot } = &mut node.kind else {
                continue;
            };
            let u1 = std::mem::replace(&mut top.u, Array2::zeros((0, 0)));
            let v2 = std::mem::replace(&mut top.v, Array2::zeros((0, 0)));
            let u2 = std::mem::replace(&mut bot.u, Array2::zeros((0, 0)));
            let v1 = std::mem::replace(&mut bot.v, Array2::zeros((0, 0)));
            let (ra, rb) = (u1.ncols(), u2.ncols());
            let cap_inv = if ra + rb == 0 {
                Array2::zeros((0, 0))
            } else {
                let mut cap = Array2::zeros((ra + rb, ra + rb));
                for d in 0..ra + rb {
                    cap[(d, d)] = Cplx::new(1.0, 0.0);
                }
                if ra > 0 && rb > 0 {
                    cap.slice_mut(s![..ra, ra..]).assign(&v2.t().dot(&u2));
                    cap.slice_mut(s![ra.., ..ra]).assign(&v1.t().dot(&u1));
                }
                cap.inv().map_err(|_| HodlrError::SingularBlock {
                    start,
                    end: start + len,
                })?
            };
            blocks.push(SmwBlock { start, m1: half, m2: len - half, u1, u2, v1, v2, cap_inv });
        }
        blocks.sort_by_key(|b| b.start);

        // transform shallower left factors by this level's inverses
        {
            let blocks_ref = &blocks;
            nodes
                .par_iter_mut()
                .filter(|nd| nd.level < level)
                .for_each(|node| {
                    let (start, len) = (node.start, node.len);
                    let half = len / 2;
                    if let NodeKind::Internal { top, bot } = &mut node.kind {
                        apply_level_to_rows(blocks_ref, &mut top.u, start);
                        apply_level_to_rows(blocks_ref, &mut bot.u, start + half);
                    }
                });
        }
        levels[level] = blocks;
    }

    Ok(HodlrFactorization { n, leaves, levels, stats })
}

fn apply_leaf_inverses(leaves: &[LeafInv], u: &mut Array2<Cplx>, row0: usize) {
    if u.ncols() == 0 {
        return;
    }
    let rows = u.nrows();
    for leaf in leaves {
        if leaf.start >= row0 + rows || leaf.start + leaf.len <= row0 {
            continue;
        }
        debug_assert!(leaf.start >= row0 && leaf.start + leaf.len <= row0 + rows);
        let lo = leaf.start - row0;
        let chunk = leaf.inv.dot(&u.slice(s![lo..lo + leaf.len, ..]));
        u.slice_mut(s![lo..lo + leaf.len, ..]).assign(&chunk);
    }
}

/// Apply the inverses of a level's blocks to the row window
/// `row0..row0+u.nrows()` of a left-factor matrix. Block row ranges at a
/// deeper level never straddle a shallower node's child boundary.
fn apply_level_to_rows(blocks: &[SmwBlock], u: &mut Array2<Cplx>, row0: usize) {
    if u.ncols() == 0 {
        return;
    }
    let rows = u.nrows();
    for b in blocks {
        let blen = b.m1 + b.m2;
        if b.start >= row0 + rows || b.start + blen <= row0 {
            continue;
        }
        debug_assert!(b.start >= row0 && b.start + blen <= row0 + rows);
        b.apply_inverse_at(u, b.start - row0);
    }
}

impl HodlrFactorization {
    /// Solve `A x = b` for one right-hand side.
    pub fn solve_vec(&self, b: &Array1<Cplx>) -> Result<Array1<Cplx>, HodlrError> {
        let bm = b.view().insert_axis(ndarray::Axis(1)).to_owned();
        let x = self.solve_mat(&bm)?;
        Ok(x.column(0).to_owned())
    }

    /// Solve with a matrix of right-hand sides (columns).
    pub fn solve_mat(&self, b: &Array2<Cplx>) -> Result<Array2<Cplx>, HodlrError> {
        if b.nrows() != self.n {
            return Err(HodlrError::DimensionMismatch { expected: self.n, got: b.nrows() });
        }
        let mut x = b.to_owned();
        // A^{-1} = A_0^{-1} A_1^{-1} ... A_k^{-1}: leaves act first
        for leaf in &self.leaves {
            let chunk = leaf.inv.dot(&x.slice(s![leaf.start..leaf.start + leaf.len, ..]));
            x.slice_mut(s![leaf.start..leaf.start + leaf.len, ..]).assign(&chunk);
        }
        for level in (0..self.levels.len()).rev() {
            for block in &self.levels[level] {
                block.apply_inverse_at(&mut x, block.start);
            }
        }
        Ok(x)
    }

    /// Multiply by the factor chain (consistency checks):
    /// `A x = A_k (A_{k-1} (... (A_0 x)))`.
    pub fn apply(&self, xin: &Array1<Cplx>) -> Result<Array1<Cplx>, HodlrError> {
        if xin.len() != self.n {
            return Err(HodlrError::DimensionMismatch { expected: self.n, got: xin.len() });
        }
        let mut x = xin.view().insert_axis(ndarray::Axis(1)).to_owned();
        for level in 0..self.levels.len() {
            for block in &self.levels[level] {
                block.apply_forward(&mut x);
            }
        }
        // A_k multiply: the dense leaf was replaced by its inverse, so
        // multiply through a small solve against the stored inverse
        let mut y = x.clone();
        for leaf in &self.leaves {
            let chunk = solve_square(
                &leaf.inv,
                &x.slice(s![leaf.start..leaf.start + leaf.len, ..]).to_owned(),
            );
            y.slice_mut(s![leaf.start..leaf.start + leaf.len, ..]).assign(&chunk);
        }
        Ok(y.column(0).to_owned())
    }
}

/// Solve `M z = c` for small dense `M` by partially pivoted elimination
/// (only used by the consistency-check path).
fn solve_square(m: &Array2<Cplx>, c: &Array2<Cplx>) -> Array2<Cplx> {
    let n = m.nrows();
    let cols = c.ncols();
    let mut a = m.to_owned();
    let mut x = c.to_owned();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[(r, col)].norm() > a[(piv, col)].norm() {
                piv = r;
            }
        }
        if piv != col {
            for j in 0..n {
                a.swap((col, j), (piv, j));
            }
            for j in 0..cols {
                x.swap((col, j), (piv, j));
            }
        }
        let d = a[(col, col)];
        for r in col + 1..n {
            let f = a[(r, col)] / d;
            if f == Cplx::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let v = a[(col, j)] * f;
                a[(r, j)] -= v;
            }
            for j in 0..cols {
                let v = x[(col, j)] * f;
                x[(r, j)] -= v;
            }
        }
    }
    for col in (0..n).rev() {
        for j in 0..cols {
            let mut acc = x[(col, j)];
            for k in col + 1..n {
                acc -= a[(col, k)] * x[(k, j)];
            }
            x[(col, j)] = acc / a[(col, col)];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident_entry(i: usize, j: usize) -> Cplx {
        if i == j {
            Cplx::new(1.0, 0.0)
        } else {
            Cplx::new(0.0, 0.0)
        }
    }

    /// Smooth kernel plus identity: HODLR-friendly and well conditioned.
    fn smooth_entry(i: usize, j: usize) -> Cplx {
        let d = (i as f64 - j as f64).abs();
        let base = Cplx::new(0.5 / (1.0 + d), 0.3 / (2.0 + 0.5 * d));
        if i == j {
            base + Cplx::new(4.0, 0.0)
        } else {
            base
        }
    }

    fn dense_of<E: Fn(usize, usize) -> Cplx>(e: &E, n: usize) -> Array2<Cplx> {
        Array2::from_shape_fn((n, n), |(i, j)| e(i, j))
    }

    fn rng_vec(n: usize, seed: u64) -> Array1<Cplx> {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).max(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        Array1::from_shape_fn(n, |_| Cplx::new(next(), next()))
    }

    fn rel_err(a: &Array1<Cplx>, b: &Array1<Cplx>) -> f64 {
        let num: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        (num / den.max(1e-300)).sqrt()
    }

    #[test]
    fn identity_tree_has_zero_ranks() {
        let tree = build(&ident_entry, 1024, 64, 1e-10).unwrap();
        let st = tree.stats();
        assert!(st.depth >= 3);
        assert!(st.max_rank_per_level.iter().all(|&r| r == 0));
        let x = rng_vec(1024, 7);
        let y = tree.matvec(&x).unwrap();
        assert!(rel_err(&y, &x) < 1e-15);
        let f = tree.factorize().unwrap();
        let z = f.solve_vec(&x).unwrap();
        assert!(rel_err(&z, &x) < 1e-13);
    }

    #[test]
    fn synthetic_low_rank_blocks() {
        // rank <= 3 off-diagonal structure everywhere
        let f = |i: usize, j: usize| {
            if i == j {
                return Cplx::new(3.0, 0.0);
            }
            let (x, y) = (i as f64 / 100.0, j as f64 / 100.0);
            Cplx::new(x.sin() * y.cos(), 0.1 * x * y) + Cplx::new(0.2 * x, 0.0) * y
        };
        let tree = build(&f, 300, 32, 1e-12).unwrap();
        let st = tree.stats();
        assert!(
            st.max_rank_per_level.iter().all(|&r| r <= 6),
            "{:?}",
            st.max_rank_per_level
        );
        assert!(tree.dense_block_error(&f) < 1e-11);
    }

    #[test]
    fn matvec_matches_dense() {
        let n = 257; // odd: exercises uneven splits
        let tree = build(&smooth_entry, n, 24, 1e-11).unwrap();
        let a = dense_of(&smooth_entry, n);
        for seed in 0..5 {
            let x = rng_vec(n, seed + 1);
            let want = a.dot(&x);
            let got = tree.matvec(&x).unwrap();
            assert!(rel_err(&got, &want) < 1e-10, "seed {seed}");
        }
        // zero vector maps to zero
        let z = tree.matvec(&Array1::zeros(n)).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn diagonal_matrix_factorization_is_exact() {
        let f = |i: usize, j: usize| {
            if i == j {
                Cplx::new(2.0 + i as f64, 1.0)
            } else {
                Cplx::new(0.0, 0.0)
            }
        };
        let n = 100;
        let tree = build(&f, n, 16, 1e-12).unwrap();
        let fact = tree.factorize().unwrap();
        let b = rng_vec(n, 3);
        let x = fact.solve_vec(&b).unwrap();
        for i in 0..n {
            let want = b[i] / f(i, i);
            assert!((x[i] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn factorization_solves_match_dense() {
        let n = 512;
        let tree = build(&smooth_entry, n, 48, 1e-12).unwrap();
        let a = dense_of(&smooth_entry, n);
        let fact = tree.factorize().unwrap();
        let b = rng_vec(n, 11);
        let x = fact.solve_vec(&b).unwrap();
        let r = &a.dot(&x) - &b;
        assert!(rel_err(&(&r + &b), &b) < 1e-9 || {
            let rn: f64 = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let bn: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            rn / bn < 1e-9
        });
        // recover a known solution
        let x_known = rng_vec(n, 5);
        let bk = a.dot(&x_known);
        let xr = fact.solve_vec(&bk).unwrap();
        assert!(rel_err(&xr, &x_known) < 1e-9);
    }

    #[test]
    fn factor_chain_reproduces_matvec() {
        let n = 300;
        let tree = build(&smooth_entry, n, 32, 1e-12).unwrap();
        let tree2 = tree.clone();
        let fact = tree.factorize().unwrap();
        let x = rng_vec(n, 9);
        let via_tree = tree2.matvec(&x).unwrap();
        let via_chain = fact.apply(&x).unwrap();
        assert!(rel_err(&via_chain, &via_tree) < 1e-10);
    }

    #[test]
    fn multi_rhs_columns_match_single_solves() {
        let n = 200;
        let tree = build(&smooth_entry, n, 32, 1e-12).unwrap();
        let fact = tree.factorize().unwrap();
        let cols = 4;
        let mut b = Array2::zeros((n, cols));
        for c in 0..cols {
            b.column_mut(c).assign(&rng_vec(n, 100 + c as u64));
        }
        let x = fact.solve_mat(&b).unwrap();
        for c in 0..cols {
            let xc = fact.solve_vec(&b.column(c).to_owned()).unwrap();
            for i in 0..n {
                assert!((x[(i, c)] - xc[i]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn input_validation() {
        assert!(build(&ident_entry, 0, 16, 1e-10).is_err());
        assert!(build(&ident_entry, 64, 16, 1e-1).is_err());
        assert!(build(&ident_entry, 64, 16, 1e-15).is_err());
        let tree = build(&ident_entry, 64, 16, 1e-10).unwrap();
        assert!(tree.matvec(&Array1::zeros(63)).is_err());
        let f = tree.factorize().unwrap();
        assert!(f.solve_vec(&Array1::zeros(63)).is_err());
    }
}
