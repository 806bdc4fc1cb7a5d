//! Private prefix sums of the joint Gram matrix `G_t = Σ_{s≤t} b_s b_sᵀ`,
//! `b_s = (x_s, r_s)`, maintained with the binary tree mechanism.
//!
//! Rounds `1..=T` are the leaves of a complete binary tree over `T` padded to
//! a power of two. Node `(level, index)` covers rounds
//! `index·2^level + 1 ..= (index + 1)·2^level`. A prefix `[1, t]` is the
//! disjoint union of one node per set bit of `t`, all of them left children
//! (or the root), so right children are never read and never get noise.
//! Noise for a readable node is drawn once, when its last round arrives, and
//! cached.
//!
//! # Checkpoint layout
//!
//! [`NoisyGramTree::write_checkpoint`] emits, all little-endian:
//! `b"DPGT"`, `u32` version (1), `u32` dim, `u64` t, then `dim²` `f64` of the
//! exact prefix followed by `dim²` `f64` of the noisy prefix, both row-major.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dp::{ceil_log2, wishart_noise, WishartParams};
use crate::error::TreeError;
use crate::sparse_regression::RestrictedGram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicNode {
    pub level: u32,
    pub index: usize,
}

impl DyadicNode {
    /// First round covered (1-based).
    pub fn start(&self) -> usize {
        (self.index << self.level) + 1
    }

    /// Last round covered (inclusive).
    pub fn end(&self) -> usize {
        (self.index + 1) << self.level
    }
}

/// Canonical dyadic cover of `[1, t]`, largest node first.
pub fn prefix_cover(t: usize) -> Vec<DyadicNode> {
    let mut nodes = Vec::new();
    let mut covered = 0usize;
    for level in (0..usize::BITS).rev() {
        if (t >> level) & 1 == 1 {
            nodes.push(DyadicNode { level, index: covered >> level });
            covered += 1 << level;
        }
    }
    nodes
}

/// Which finished nodes are kept around.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retention {
    /// Keep every node; any prefix `t ≤ count` can be queried.
    Full,
    /// Keep only nodes a future prefix can still use: memory is
    /// O(log T) matrices, and only `t = count` is guaranteed queryable.
    Streaming,
}

#[derive(Debug, Clone)]
struct NodeData {
    exact: DMatrix<f64>,
    noise: Option<DMatrix<f64>>,
    finalized: bool,
}

#[derive(Debug, Clone)]
pub struct NoisyGramTree {
    horizon: usize,
    levels: u32,
    dim: usize,
    nodes: BTreeMap<DyadicNode, NodeData>,
    count: usize,
    noise: Option<WishartParams>,
    retention: Retention,
    noise_draws: usize,
}

impl NoisyGramTree {
    /// `dim` is `d + 1`. `noise = None` gives the exact (non-private) tree.
    pub fn new(horizon: usize, dim: usize, noise: Option<WishartParams>, retention: Retention) -> Self {
        let horizon = horizon.max(1);
        NoisyGramTree {
            horizon,
            levels: ceil_log2(horizon),
            dim,
            nodes: BTreeMap::new(),
            count: 0,
            noise,
            retention,
            noise_draws: 0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Noise matrices drawn so far.
    pub fn noise_draws(&self) -> usize {
        self.noise_draws
    }

    /// Nodes each record is added to: `⌈log₂T⌉ + 1`.
    pub fn nodes_per_record(&self) -> usize {
        self.levels as usize + 1
    }

    pub fn retained_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn noise_params(&self) -> Option<&WishartParams> {
        self.noise.as_ref()
    }

    /// Adds `b·bᵀ`, `b = (x, r)`, to every node covering round `count + 1`.
    pub fn insert<R: Rng + ?Sized>(&mut self, x: &DVector<f64>, r: f64, rng: &mut R) -> Result<(), TreeError> {
        if self.count >= self.horizon {
            return Err(TreeError::HorizonExceeded { horizon: self.horizon });
        }
        if x.len() + 1 != self.dim {
            return Err(TreeError::Dimension { expected: self.dim - 1, got: x.len() });
        }
        let mut b = DVector::zeros(self.dim);
        b.rows_mut(0, self.dim - 1).copy_from(x);
        b[self.dim - 1] = r;

        let round = self.count + 1;
        for level in 0..=self.levels {
            let key = DyadicNode { level, index: (round - 1) >> level };
            let dim = self.dim;
            let node = self.nodes.entry(key).or_insert_with(|| NodeData {
                exact: DMatrix::zeros(dim, dim),
                noise: None,
                finalized: false,
            });
            node.exact.ger(1.0, &b, &b, 1.0);
            if key.end() == round {
                node.finalized = true;
                let readable = key.index.is_multiple_of(2);
                if readable {
                    if let Some(params) = &self.noise {
                        node.noise = Some(wishart_noise(params, rng));
                        self.noise_draws += 1;
                    }
                }
                if self.retention == Retention::Streaming && !readable {
                    // Parent is complete: neither child can appear in a later cover.
                    self.nodes.remove(&key);
                    self.nodes.remove(&DyadicNode { level, index: key.index - 1 });
                }
            }
        }
        self.count = round;
        Ok(())
    }

    fn check_prefix(&self, t: usize) -> Result<Vec<DyadicNode>, TreeError> {
        if t == 0 || t > self.count {
            return Err(TreeError::OutOfRange { t, count: self.count });
        }
        let cover = prefix_cover(t);
        for node in &cover {
            if !self.nodes.contains_key(node) {
                return Err(TreeError::NodeEvicted { level: node.level, index: node.index });
            }
        }
        Ok(cover)
    }

    /// Noisy prefix `G̃_t`: sum over the cover of `[1, t]` of node sum plus
    /// cached node noise. Also returns the nodes read.
    pub fn query_prefix_traced(&self, t: usize) -> Result<(DMatrix<f64>, Vec<DyadicNode>), TreeError> {
        let cover = self.check_prefix(t)?;
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        for node in &cover {
            let data = &self.nodes[node];
            acc += &data.exact;
            if let Some(noise) = &data.noise {
                acc += noise;
            }
        }
        Ok((acc, cover))
    }

    pub fn query_prefix(&self, t: usize) -> Result<DMatrix<f64>, TreeError> {
        self.query_prefix_traced(t).map(|(m, _)| m)
    }

    /// Noise-free prefix over the same cover, for diagnostics.
    pub fn exact_prefix(&self, t: usize) -> Result<DMatrix<f64>, TreeError> {
        let cover = self.check_prefix(t)?;
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        for node in &cover {
            acc += &self.nodes[node].exact;
        }
        Ok(acc)
    }

    /// Cached noise of a node, if it has been drawn and is still retained.
    pub fn node_noise(&self, node: DyadicNode) -> Option<&DMatrix<f64>> {
        self.nodes.get(&node).and_then(|n| n.noise.as_ref())
    }

    pub fn node_exact(&self, node: DyadicNode) -> Option<&DMatrix<f64>> {
        self.nodes.get(&node).map(|n| &n.exact)
    }

    pub fn write_checkpoint<W: Write>(&self, t: usize, mut w: W) -> Result<(), CheckpointError> {
        let exact = self.exact_prefix(t)?;
        let noisy = self.query_prefix(t)?;
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(t as u64).to_le_bytes())?;
        for m in [&exact, &noisy] {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    w.write_all(&m[(i, j)].to_le_bytes())?;
                }
            }
        }
        Ok(())
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"DPGT";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a gram tree checkpoint")]
    BadHeader,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    pub exact: DMatrix<f64>,
    pub noisy: DMatrix<f64>,
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint, CheckpointError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    if &magic != CHECKPOINT_MAGIC || u32::from_le_bytes(u32buf) != CHECKPOINT_VERSION {
        return Err(CheckpointError::BadHeader);
    }
    r.read_exact(&mut u32buf)?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let t = u64::from_le_bytes(u64buf);
    let mut read_matrix = |r: &mut R| -> io::Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                r.read_exact(&mut u64buf)?;
                m[(i, j)] = f64::from_le_bytes(u64buf);
            }
        }
        Ok(m)
    };
    let exact = read_matrix(&mut r)?;
    let noisy = read_matrix(&mut r)?;
    Ok(Checkpoint { t, exact, noisy })
}

/// Splits a joint Gram matrix into the restricted normal equations:
/// `V = G[S, S]`, `u = G[S, d]` where `d` is the last (reward) index.
pub fn extract_regression(gram: &DMatrix<f64>, support: &[usize], count: usize) -> Result<RestrictedGram, TreeError> {
    if support.is_empty() {
        return Err(TreeError::EmptySupport);
    }
    let d = gram.nrows() - 1;
    if let Some(&index) = support.iter().find(|&&i| i >= d) {
        return Err(TreeError::SupportIndex { index, dim: d });
    }
    let s = support.len();
    let v = DMatrix::from_fn(s, s, |i, j| gram[(support[i], support[j])]);
    let u = DVector::from_fn(s, |i, _| gram[(support[i], d)]);
    Ok(RestrictedGram { support: support.to_vec(), v, u, count })
}
