//! Signal and node mutual exclusion matrices.
//!
//! `smem[a][b]` is set when signals `a` and `b` are used together by some
//! variant, so they must never share bits. `nmem[p][q]` is set when distinct
//! nodes `p` and `q` both transmit in some variant, so they must never share a
//! slot.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{Instance, NodeId};

/// Dense square bit matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        BitMatrix {
            n,
            words_per_row,
            words: vec![0; n * words_per_row],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.n && col < self.n);
        self.words[row * self.words_per_row + col / 64] >> (col % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        let w = &mut self.words[row * self.words_per_row + col / 64];
        if value {
            *w |= 1 << (col % 64);
        } else {
            *w &= !(1 << (col % 64));
        }
    }

    fn row(&self, row: usize) -> &[u64] {
        &self.words[row * self.words_per_row..(row + 1) * self.words_per_row]
    }
}

#[derive(Debug, Clone)]
pub struct ExclusionMatrices {
    pub smem: BitMatrix,
    pub nmem: BitMatrix,
    /// Ascending node ids; position is the nmem index.
    nodes: Vec<NodeId>,
    node_index: BTreeMap<NodeId, usize>,
    signal_index: HashMap<String, usize>,
    /// nmem index of each signal's node.
    signal_node: Vec<usize>,
}

impl ExclusionMatrices {
    /// Computes both matrices from the variant membership of `instance`.
    pub fn compute(instance: &Instance) -> Self {
        let n = instance.signals.len();
        let variant_count = instance.variants.variant_count();
        let words = variant_count.div_ceil(64).max(1);

        // Per-signal set of variants; two signals conflict iff the sets meet.
        let mut membership = vec![0u64; n * words];
        for v in 0..variant_count {
            for &s in instance.variants.signals_of(v) {
                membership[s * words + v / 64] |= 1 << (v % 64);
            }
        }
        let of = |s: usize| &membership[s * words..(s + 1) * words];

        let mut smem = BitMatrix::new(n);
        for a in 0..n {
            smem.set(a, a, true);
            for b in a + 1..n {
                let shared = of(a).iter().zip(of(b)).any(|(x, y)| x & y != 0);
                if shared {
                    smem.set(a, b, true);
                    smem.set(b, a, true);
                }
            }
        }

        let nodes = instance.nodes();
        let node_index: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let signal_node: Vec<usize> = instance.signals.iter().map(|s| node_index[&s.node]).collect();

        // Union of variant sets per node, then the same intersection test.
        let mut node_membership = vec![0u64; nodes.len() * words];
        for (s, &node) in signal_node.iter().enumerate() {
            for w in 0..words {
                node_membership[node * words + w] |= of(s)[w];
            }
        }
        let node_of = |p: usize| &node_membership[p * words..(p + 1) * words];
        let mut nmem = BitMatrix::new(nodes.len());
        for p in 0..nodes.len() {
            for q in p + 1..nodes.len() {
                if node_of(p).iter().zip(node_of(q)).any(|(x, y)| x & y != 0) {
                    nmem.set(p, q, true);
                    nmem.set(q, p, true);
                }
            }
        }

        let signal_index = instance
            .signals
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();

        ExclusionMatrices {
            smem,
            nmem,
            nodes,
            node_index,
            signal_index,
            signal_node,
        }
    }

    /// Whether signals `a` and `b` (by index) must not overlap.
    #[inline]
    pub fn signals_conflict_at(&self, a: usize, b: usize) -> bool {
        self.smem.get(a, b)
    }

    /// Whether nodes `p` and `q` (by nmem index) must not share a slot.
    #[inline]
    pub fn nodes_conflict_at(&self, p: usize, q: usize) -> bool {
        self.nmem.get(p, q)
    }

    pub fn signals_conflict(&self, a: &str, b: &str) -> Result<bool> {
        let lookup = |id: &str| {
            self.signal_index
                .get(id)
                .copied()
                .ok_or_else(|| Error::UnknownSignal(id.to_string()))
        };
        Ok(self.signals_conflict_at(lookup(a)?, lookup(b)?))
    }

    pub fn nodes_conflict(&self, p: NodeId, q: NodeId) -> Result<bool> {
        Ok(self.nodes_conflict_at(self.node_position(p)?, self.node_position(q)?))
    }

    pub fn node_position(&self, node: NodeId) -> Result<usize> {
        self.node_index.get(&node).copied().ok_or(Error::UnknownNode(node.0))
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// nmem index of the node transmitting signal `s`.
    #[inline]
    pub fn node_of_signal(&self, s: usize) -> usize {
        self.signal_node[s]
    }

    /// Whether node index `p` conflicts with any node in `occupants`.
    pub fn node_conflicts_with_any(&self, p: usize, occupants: &[usize]) -> bool {
        let row = self.nmem.row(p);
        occupants.iter().any(|&q| row[q / 64] >> (q % 64) & 1 == 1)
    }

    /// Writes the signal matrix as a 0/1 grid with id headers.
    pub fn write_smem_csv<W: Write>(&self, instance: &Instance, out: W) -> Result<()> {
        let headers: Vec<String> = instance.signals.iter().map(|s| s.id.clone()).collect();
        write_grid(&self.smem, &headers, out)
    }

    /// Writes the node matrix as a 0/1 grid with node id headers.
    pub fn write_nmem_csv<W: Write>(&self, out: W) -> Result<()> {
        let headers: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        write_grid(&self.nmem, &headers, out)
    }
}

fn write_grid<W: Write>(matrix: &BitMatrix, headers: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("").chain(headers.iter().map(String::as_str)))?;
    for (r, name) in headers.iter().enumerate() {
        let mut record = vec![name.clone()];
        record.extend((0..matrix.dim()).map(|c| if matrix.get(r, c) { "1" } else { "0" }.to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
