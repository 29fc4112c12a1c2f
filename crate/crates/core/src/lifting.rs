//! Quasi-cyclic codes obtained by lifting a protomatrix twice: first by
//! `z1` with sums of distinct permutation matrices, then by `z2` with
//! circulant permutation matrices (CPMs).
//!
//! A CPM with shift `s` is the `z2 x z2` identity cyclically shifted left by
//! `s` columns, so row `t` has its one in column `(t - s) mod z2`.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hadamard::HadamardOrder;
use crate::protograph::Protomatrix;

/// One nonzero CPM of the block table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CpmBlock {
    pub row: usize,
    pub col: usize,
    pub shift: usize,
}

/// Lifted code. Block rows (`m * z1` of them) each hold exactly `d` blocks
/// in edge-slot order; slot `k` of a Hadamard check is its `k`-th
/// information bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QcCode {
    m: usize,
    n: usize,
    z1: usize,
    z2: usize,
    row_weight: usize,
    blocks: Vec<CpmBlock>,
}

impl QcCode {
    /// `blocks` must be grouped by block row in ascending row order.
    pub fn new(m: usize, n: usize, z1: usize, z2: usize, row_weight: usize, blocks: Vec<CpmBlock>) -> Result<Self> {
        if z1 == 0 || z2 == 0 {
            return Err(Error::Parameter("lifting factors must be positive".into()));
        }
        if blocks.len() != m * z1 * row_weight {
            return Err(Error::Shape(format!(
                "{} blocks for {} block rows of weight {row_weight}",
                blocks.len(),
                m * z1
            )));
        }
        let rows: Vec<&[CpmBlock]> = if row_weight == 0 {
            Vec::new()
        } else {
            blocks.chunks(row_weight).collect()
        };
        for (br, row) in rows.iter().enumerate() {
            for (k, b) in row.iter().enumerate() {
                if b.row != br {
                    return Err(Error::Shape(format!("block row {} out of order (expected {br})", b.row)));
                }
                if b.col >= n * z1 {
                    return Err(Error::Shape(format!("block column {} outside 0..{}", b.col, n * z1)));
                }
                if b.shift >= z2 {
                    return Err(Error::Shape(format!("shift {} not below z2 = {z2}", b.shift)));
                }
                if row[..k].iter().any(|o| o.col == b.col) {
                    return Err(Error::Shape(format!("block column {} repeated in row {br}", b.col)));
                }
            }
        }
        Ok(QcCode { m, n, z1, z2, row_weight, blocks })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z1(&self) -> usize {
        self.z1
    }

    pub fn z2(&self) -> usize {
        self.z2
    }

    /// Blocks per block row, `d`.
    pub fn row_weight(&self) -> usize {
        self.row_weight
    }

    pub fn order(&self) -> Result<HadamardOrder> {
        HadamardOrder::from_row_weight(self.row_weight)
    }

    pub fn blocks(&self) -> &[CpmBlock] {
        &self.blocks
    }

    pub fn block_rows(&self) -> usize {
        self.m * self.z1
    }

    pub fn block_cols(&self) -> usize {
        self.n * self.z1
    }

    pub fn row_blocks(&self, block_row: usize) -> &[CpmBlock] {
        let d = self.row_weight;
        &self.blocks[block_row * d..(block_row + 1) * d]
    }

    /// Number of Hadamard check nodes `M = z1 z2 m`.
    pub fn num_checks(&self) -> usize {
        self.block_rows() * self.z2
    }

    /// Number of protograph variable nodes `z1 z2 n`.
    pub fn num_vars(&self) -> usize {
        self.block_cols() * self.z2
    }

    /// Variable node on edge slot `slot` of check `check`.
    pub fn var_of(&self, check: usize, slot: usize) -> usize {
        let (br, t) = (check / self.z2, check % self.z2);
        let b = self.row_blocks(br)[slot];
        b.col * self.z2 + (t + self.z2 - b.shift) % self.z2
    }

    /// Protograph column of a variable node.
    pub fn base_col_of_var(&self, var: usize) -> usize {
        var / (self.z1 * self.z2)
    }

    /// True if every check's bits XOR to zero.
    pub fn checks_satisfied(&self, bits: &[u8]) -> bool {
        (0..self.num_checks()).all(|c| (0..self.row_weight).fold(0, |a, k| a ^ bits[self.var_of(c, k)]) == 0)
    }

    /// Whether the block structure is a valid two-step lift of `b`: each
    /// `z1 x z1` block group `(i, j)` is a `b[i][j]`-regular 0/1 pattern.
    pub fn is_lift_of(&self, b: &Protomatrix) -> bool {
        if (b.m(), b.n()) != (self.m, self.n) || b.uniform_row_weight() != Some(self.row_weight) {
            return false;
        }
        let z1 = self.z1;
        let mut row_count = vec![0u32; self.block_rows() * self.n];
        let mut col_count = vec![0u32; self.block_cols() * self.m];
        for blk in &self.blocks {
            row_count[blk.row * self.n + blk.col / z1] += 1;
            col_count[blk.col * self.m + blk.row / z1] += 1;
        }
        (0..self.block_rows()).all(|br| (0..self.n).all(|j| row_count[br * self.n + j] == b.get(br / z1, j)))
            && (0..self.block_cols()).all(|bc| (0..self.m).all(|i| col_count[bc * self.m + i] == b.get(i, bc / z1)))
    }
}

/// How permutation supports and shifts are picked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Strategy {
    Peg,
    Random,
}

/// Two-step lift guided by progressive edge growth, deterministic per seed.
pub fn lift_two_step(b: &Protomatrix, z1: usize, z2: usize, seed: u64) -> Result<QcCode> {
    lift(b, z1, z2, seed, Strategy::Peg)
}

/// Two-step lift with uniformly drawn supports and shifts (comparison baseline).
pub fn lift_random(b: &Protomatrix, z1: usize, z2: usize, seed: u64) -> Result<QcCode> {
    lift(b, z1, z2, seed, Strategy::Random)
}

fn lift(b: &Protomatrix, z1: usize, z2: usize, seed: u64, strategy: Strategy) -> Result<QcCode> {
    if z1 == 0 || z2 == 0 {
        return Err(Error::Parameter("lifting factors must be positive".into()));
    }
    let d = b
        .uniform_row_weight()
        .ok_or_else(|| Error::Shape("rows do not share a common weight".into()))?;
    for i in 0..b.m() {
        for j in 0..b.n() {
            if b.get(i, j) as usize > z1 {
                return Err(Error::Infeasible(format!(
                    "entry ({i}, {j}) = {} needs that many distinct {z1}x{z1} permutations",
                    b.get(i, j)
                )));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = first_step(b, z1, strategy, &mut rng);
    let shifts = second_step(b.m() * z1, b.n() * z1, z2, &first, strategy, &mut rng);
    let mut blocks = Vec::with_capacity(b.m() * z1 * d);
    for (br, row) in first.check_adj.iter().enumerate() {
        let mut cols = row.clone();
        cols.sort_unstable();
        for bc in cols {
            blocks.push(CpmBlock { row: br, col: bc, shift: shifts[&(br, bc)] });
        }
    }
    QcCode::new(b.m(), b.n(), z1, z2, d, blocks)
}

struct Bipartite {
    check_adj: Vec<Vec<usize>>,
    var_adj: Vec<Vec<usize>>,
}

/// Breadth-first distances from `start` (a variable node) to every check,
/// `usize::MAX` when unreachable.
fn check_distances(g: &Bipartite, start: usize, out: &mut [usize], var_seen: &mut [bool]) {
    out.iter_mut().for_each(|x| *x = usize::MAX);
    var_seen.iter_mut().for_each(|x| *x = false);
    var_seen[start] = true;
    let mut frontier = vec![start];
    let mut depth = 1;
    while !frontier.is_empty() {
        let mut checks = Vec::new();
        for &v in &frontier {
            for &c in &g.var_adj[v] {
                if out[c] == usize::MAX {
                    out[c] = depth;
                    checks.push(c);
                }
            }
        }
        let mut next = Vec::new();
        for c in checks {
            for &v in &g.check_adj[c] {
                if !var_seen[v] {
                    var_seen[v] = true;
                    next.push(v);
                }
            }
        }
        frontier = next;
        depth += 2;
    }
}

/// Step 1: replace `b[i][j]` by a `b[i][j]`-regular `z1 x z1` 0/1 block.
///
/// Variables are handled column by column. A check whose remaining demand
/// in the current block equals the number of variables still to be served
/// there must be taken now, which keeps every block completable.
fn first_step(b: &Protomatrix, z1: usize, strategy: Strategy, rng: &mut ChaCha8Rng) -> Bipartite {
    let (m, n) = (b.m(), b.n());
    let mut g = Bipartite { check_adj: vec![Vec::new(); m * z1], var_adj: vec![Vec::new(); n * z1] };
    let mut cols: Vec<usize> = (0..n).collect();
    cols.sort_by_key(|&j| (b.col_weight(j), j));
    let mut dist = vec![usize::MAX; m * z1];
    let mut seen = vec![false; n * z1];
    for j in cols {
        // demand[i * z1 + y]: ones still owed by check copy y of row i in block (i, j).
        let mut demand: Vec<usize> = (0..m * z1).map(|c| b.get(c / z1, j) as usize).collect();
        for x in 0..z1 {
            let v = j * z1 + x;
            let remaining = z1 - x;
            for i in 0..m {
                for _ in 0..b.get(i, j) {
                    let group = i * z1..(i + 1) * z1;
                    let open: Vec<usize> = group
                        .clone()
                        .filter(|&c| demand[c] > 0 && !g.var_adj[v].contains(&c))
                        .collect();
                    let forced: Vec<usize> = open.iter().copied().filter(|&c| demand[c] == remaining).collect();
                    let pool = if forced.is_empty() { open } else { forced };
                    let chosen = match strategy {
                        Strategy::Random => *pool.choose(rng).expect("regular completion exists"),
                        Strategy::Peg => {
                            check_distances(&g, v, &mut dist, &mut seen);
                            let best_d = pool.iter().map(|&c| dist[c]).max().expect("nonempty pool");
                            let far: Vec<usize> = pool.iter().copied().filter(|&c| dist[c] == best_d).collect();
                            let low = far.iter().map(|&c| g.check_adj[c].len()).min().unwrap_or(0);
                            let ties: Vec<usize> = far.into_iter().filter(|&c| g.check_adj[c].len() == low).collect();
                            *ties.choose(rng).expect("nonempty ties")
                        }
                    };
                    demand[chosen] -= 1;
                    g.var_adj[v].push(chosen);
                    g.check_adj[chosen].push(v);
                }
            }
        }
    }
    g
}

/// Step 2: one shift per nonzero block. For block `(r, c)` the shift `s`
/// closes cycles through variable `(c, 0)` and check `(r, s)`, so the best
/// shift is the one whose check is farthest from `(c, 0)`.
fn second_step(
    rows: usize,
    cols: usize,
    z2: usize,
    first: &Bipartite,
    strategy: Strategy,
    rng: &mut ChaCha8Rng,
) -> alloc::collections::BTreeMap<(usize, usize), usize> {
    let mut shifts = alloc::collections::BTreeMap::new();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by_key(|&c| (first.var_adj[c].len(), c));
    let mut g = Implicit::new(rows, cols, z2);
    for c in order {
        let mut rs = first.var_adj[c].clone();
        rs.sort_unstable();
        for r in rs {
            let s = match strategy {
                Strategy::Random => rng.random_range(0..z2),
                Strategy::Peg => g.farthest_shift(c, r),
            };
            g.add(r, c, s);
            shifts.insert((r, c), s);
        }
    }
    shifts
}

/// BFS depth limit used while choosing shifts; checks beyond it count as
/// unreachable.
const SHIFT_SEARCH_DEPTH: u32 = 25;

/// Expanded Tanner graph represented by its block table.
struct Implicit {
    z2: usize,
    cols: usize,
    row_adj: Vec<Vec<(usize, usize)>>,
    col_adj: Vec<Vec<(usize, usize)>>,
    dist: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl Implicit {
    fn new(rows: usize, cols: usize, z2: usize) -> Self {
        let nodes = (rows + cols) * z2;
        Implicit {
            z2,
            cols,
            row_adj: vec![Vec::new(); rows],
            col_adj: vec![Vec::new(); cols],
            dist: vec![0; nodes],
            stamp: vec![0; nodes],
            epoch: 0,
        }
    }

    fn add(&mut self, r: usize, c: usize, s: usize) {
        self.row_adj[r].push((c, s));
        self.col_adj[c].push((r, s));
    }

    fn farthest_shift(&mut self, c: usize, r: usize) -> usize {
        let z2 = self.z2;
        let check_base = self.cols * z2;
        self.epoch += 1;
        let ep = self.epoch;
        let start = c * z2;
        self.stamp[start] = ep;
        self.dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut unlabeled = z2;
        while let Some(u) = queue.pop_front() {
            let du = self.dist[u];
            if du >= SHIFT_SEARCH_DEPTH || unlabeled == 0 {
                break;
            }
            if u < check_base {
                let (bc, x) = (u / z2, u % z2);
                for &(br, s) in &self.col_adj[bc] {
                    let w = check_base + br * z2 + (x + s) % z2;
                    if self.stamp[w] != ep {
                        self.stamp[w] = ep;
                        self.dist[w] = du + 1;
                        queue.push_back(w);
                        if br == r {
                            unlabeled -= 1;
                        }
                    }
                }
            } else {
                let (br, t) = ((u - check_base) / z2, (u - check_base) % z2);
                for &(bc, s) in &self.row_adj[br] {
                    let w = bc * z2 + (t + z2 - s) % z2;
                    if self.stamp[w] != ep {
                        self.stamp[w] = ep;
                        self.dist[w] = du + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        let mut best = (0u32, 0usize);
        for s in 0..z2 {
            let w = check_base + r * z2 + s;
            let d = if self.stamp[w] == ep { self.dist[w] } else { u32::MAX };
            if d > best.0 {
                best = (d, s);
            }
        }
        best.1
    }
}

/// Shortest cycle length of the expanded Tanner graph, `None` if longer
/// than `cap` (or acyclic).
///
/// Every cycle passes through a variable node and the quasi-cyclic
/// automorphism maps each variable to offset 0 of its block column, so one
/// BFS per block column suffices.
pub fn girth(code: &QcCode, cap: usize) -> Option<usize> {
    let z2 = code.z2();
    let cols = code.block_cols();
    let check_base = cols * z2;
    let mut row_adj = vec![Vec::new(); code.block_rows()];
    let mut col_adj = vec![Vec::new(); cols];
    for b in code.blocks() {
        row_adj[b.row].push((b.col, b.shift));
        col_adj[b.col].push((b.row, b.shift));
    }
    let nodes = (cols + code.block_rows()) * z2;
    let mut dist = vec![0u32; nodes];
    let mut parent = vec![0usize; nodes];
    let mut stamp = vec![0u32; nodes];
    let mut best = usize::MAX;
    let mut nbrs = Vec::new();
    for (ep, bc) in (1u32..).zip(0..cols) {
        let start = bc * z2;
        stamp[start] = ep;
        dist[start] = 0;
        parent[start] = usize::MAX;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u] as usize;
            if 2 * du + 1 >= best.min(cap + 1) {
                break;
            }
            nbrs.clear();
            if u < check_base {
                let (c, x) = (u / z2, u % z2);
                nbrs.extend(col_adj[c].iter().map(|&(r, s)| check_base + r * z2 + (x + s) % z2));
            } else {
                let (r, t) = ((u - check_base) / z2, (u - check_base) % z2);
                nbrs.extend(row_adj[r].iter().map(|&(c, s)| c * z2 + (t + z2 - s) % z2));
            }
            for &w in &nbrs {
                if stamp[w] != ep {
                    stamp[w] = ep;
                    dist[w] = du as u32 + 1;
                    parent[w] = u;
                    queue.push_back(w);
                } else if w != parent[u] {
                    best = best.min(du + dist[w] as usize + 1);
                }
            }
        }
    }
    (best <= cap).then_some(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cpm_is_acyclic() {
        let b = Protomatrix::from_rows(&[[1u32]]).unwrap();
        let code = lift_two_step(&b, 1, 4, 0).unwrap();
        assert_eq!(code.blocks().len(), 1);
        assert_eq!(girth(&code, 12), None);
    }

    #[test]
    fn all_ones_two_by_two_has_girth_four() {
        let b = Protomatrix::from_rows(&[[1u32, 1], [1, 1]]).unwrap();
        let code = lift_two_step(&b, 1, 1, 0).unwrap();
        assert_eq!(girth(&code, 12), Some(4));
    }

    #[test]
    fn entry_above_z1_is_infeasible() {
        let b = Protomatrix::from_rows(&[[3u32, 2]]).unwrap();
        assert!(matches!(lift_two_step(&b, 2, 4, 0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn var_of_follows_left_shift() {
        let code = QcCode::new(1, 1, 1, 4, 1, vec![CpmBlock { row: 0, col: 0, shift: 1 }]).unwrap();
        // Row t has its one at column (t - 1) mod 4.
        assert_eq!((0..4).map(|t| code.var_of(t, 0)).collect::<Vec<_>>(), vec![3, 0, 1, 2]);
    }

    #[test]
    fn new_rejects_bad_tables() {
        let blk = |row, col, shift| CpmBlock { row, col, shift };
        assert!(QcCode::new(1, 2, 1, 4, 2, vec![blk(0, 0, 0), blk(0, 0, 1)]).is_err());
        assert!(QcCode::new(1, 2, 1, 4, 2, vec![blk(0, 0, 0), blk(0, 1, 4)]).is_err());
        assert!(QcCode::new(1, 2, 1, 4, 2, vec![blk(0, 0, 0), blk(0, 2, 0)]).is_err());
        assert!(QcCode::new(0, 2, 1, 4, 2, vec![]).is_ok());
    }
}
