use std::sync::Arc;

use super::{check_range, MatroidKind, MatroidOracle};
use crate::error::{Error, Result};
use crate::ledger::ResourceLedger;
use crate::set::ElementSet;

/// Every set of size at most `k`.
#[derive(Debug)]
pub struct UniformMatroid {
    n: usize,
    k: usize,
    ledger: Arc<ResourceLedger>,
}

impl UniformMatroid {
    pub fn new(n: usize, k: usize, ledger: Arc<ResourceLedger>) -> Self {
        UniformMatroid { n, k, ledger }
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl MatroidOracle for UniformMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }
    fn kind(&self) -> MatroidKind {
        MatroidKind::Uniform
    }
    fn ledger(&self) -> &Arc<ResourceLedger> {
        &self.ledger
    }
    fn domain(&self) -> ElementSet {
        ElementSet::full(self.n)
    }
    fn is_independent(&self, set: &ElementSet) -> Result<bool> {
        check_range(set, self.n)?;
        self.ledger.record_independence(1);
        Ok(set.len() <= self.k)
    }
    fn rank(&self, set: &ElementSet) -> Result<usize> {
        check_range(set, self.n)?;
        self.ledger.record_rank(1);
        Ok(set.len().min(self.k))
    }
}

/// At most `caps[b]` elements from each block `b`.
#[derive(Debug)]
pub struct PartitionMatroid {
    block: Vec<u32>,
    caps: Vec<u32>,
    /// Per-block membership masks when every id is below 128.
    masks: Option<Vec<u128>>,
    ledger: Arc<ResourceLedger>,
}

impl PartitionMatroid {
    pub fn new(block: Vec<u32>, caps: Vec<u32>, ledger: Arc<ResourceLedger>) -> Result<Self> {
        if let Some(&b) = block.iter().find(|&&b| b as usize >= caps.len()) {
            return Err(Error::Input(format!(
                "block {b} has no capacity ({} blocks)",
                caps.len()
            )));
        }
        let masks = (block.len() <= 128).then(|| {
            let mut m = vec![0u128; caps.len()];
            for (e, &b) in block.iter().enumerate() {
                m[b as usize] |= 1u128 << e;
            }
            m
        });
        Ok(PartitionMatroid {
            block,
            caps,
            masks,
            ledger,
        })
    }

    fn counted_rank(&self, set: &ElementSet) -> usize {
        if let (Some(masks), Some(bits)) = (&self.masks, set.as_bits()) {
            return masks
                .iter()
                .zip(&self.caps)
                .map(|(m, &c)| ((m & bits).count_ones()).min(c) as usize)
                .sum();
        }
        let mut count = vec![0u32; self.caps.len()];
        for e in set {
            count[self.block[e.index()] as usize] += 1;
        }
        count
            .iter()
            .zip(&self.caps)
            .map(|(&c, &k)| c.min(k) as usize)
            .sum()
    }
}

impl MatroidOracle for PartitionMatroid {
    fn ground_size(&self) -> usize {
        self.block.len()
    }
    fn kind(&self) -> MatroidKind {
        MatroidKind::Partition
    }
    fn ledger(&self) -> &Arc<ResourceLedger> {
        &self.ledger
    }
    fn domain(&self) -> ElementSet {
        ElementSet::full(self.block.len())
    }
    fn is_independent(&self, set: &ElementSet) -> Result<bool> {
        check_range(set, self.block.len())?;
        self.ledger.record_independence(1);
        if let (Some(masks), Some(bits)) = (&self.masks, set.as_bits()) {
            return Ok(masks
                .iter()
                .zip(&self.caps)
                .all(|(m, &c)| (m & bits).count_ones() <= c));
        }
        Ok(self.counted_rank(set) == set.len())
    }
    fn rank(&self, set: &ElementSet) -> Result<usize> {
        check_range(set, self.block.len())?;
        self.ledger.record_rank(1);
        Ok(self.counted_rank(set))
    }
}

/// Edge sets that form a forest. Element `e` is the edge `edges[e]`.
#[derive(Debug)]
pub struct GraphicMatroid {
    vertices: usize,
    edges: Vec<(u32, u32)>,
    ledger: Arc<ResourceLedger>,
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

impl GraphicMatroid {
    pub fn new(
        vertices: usize,
        edges: Vec<(u32, u32)>,
        ledger: Arc<ResourceLedger>,
    ) -> Result<Self> {
        if let Some(&(u, v)) = edges
            .iter()
            .find(|&&(u, v)| u as usize >= vertices || v as usize >= vertices)
        {
            return Err(Error::Input(format!(
                "edge ({u},{v}) outside {vertices} vertices"
            )));
        }
        Ok(GraphicMatroid {
            vertices,
            edges,
            ledger,
        })
    }

    /// Size of a spanning forest of `set`; stops at the first cycle when `stop_on_cycle`.
    fn forest(&self, set: &ElementSet, stop_on_cycle: bool) -> (usize, bool) {
        let mut parent: Vec<u32> = (0..self.vertices as u32).collect();
        let mut size = 0;
        let mut acyclic = true;
        for e in set {
            let (u, v) = self.edges[e.index()];
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                acyclic = false;
                if stop_on_cycle {
                    break;
                }
            } else {
                parent[ru as usize] = rv;
                size += 1;
            }
        }
        (size, acyclic)
    }
}

impl MatroidOracle for GraphicMatroid {
    fn ground_size(&self) -> usize {
        self.edges.len()
    }
    fn kind(&self) -> MatroidKind {
        MatroidKind::Graphic
    }
    fn ledger(&self) -> &Arc<ResourceLedger> {
        &self.ledger
    }
    fn domain(&self) -> ElementSet {
        ElementSet::full(self.edges.len())
    }
    fn is_independent(&self, set: &ElementSet) -> Result<bool> {
        check_range(set, self.edges.len())?;
        self.ledger.record_independence(1);
        if set.len() >= self.vertices.max(1) {
            return Ok(false);
        }
        Ok(self.forest(set, true).1)
    }
    fn rank(&self, set: &ElementSet) -> Result<usize> {
        check_range(set, self.edges.len())?;
        self.ledger.record_rank(1);
        Ok(self.forest(set, false).0)
    }
}

/// Column matroid of a 0/1 matrix over GF(2) with at most 128 rows.
#[derive(Debug)]
pub struct LinearMatroidGf2 {
    rows: usize,
    columns: Vec<u128>,
    ledger: Arc<ResourceLedger>,
}

impl LinearMatroidGf2 {
    pub fn new(rows: usize, columns: Vec<u128>, ledger: Arc<ResourceLedger>) -> Result<Self> {
        if rows > 128 {
            return Err(Error::Input(format!(
                "{rows} rows exceeds the 128-row limit"
            )));
        }
        if rows < 128 {
            if let Some(c) = columns.iter().find(|&&c| c >> rows != 0) {
                return Err(Error::Input(format!(
                    "column {c:#b} has bits beyond {rows} rows"
                )));
            }
        }
        Ok(LinearMatroidGf2 {
            rows,
            columns,
            ledger,
        })
    }

    /// Columns given as strings of `0`/`1`, first character is row 0.
    pub fn from_bitstrings<S: AsRef<str>>(
        rows: usize,
        columns: &[S],
        ledger: Arc<ResourceLedger>,
    ) -> Result<Self> {
        let cols = columns
            .iter()
            .map(|s| parse_column(s.as_ref(), rows))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, cols, ledger)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    fn eliminate(&self, set: &ElementSet, stop_on_dependency: bool) -> (usize, bool) {
        let mut basis = [0u128; 128];
        let mut size = 0;
        for e in set {
            let mut v = self.columns[e.index()];
            while v != 0 {
                let top = 127 - v.leading_zeros() as usize;
                if basis[top] == 0 {
                    basis[top] = v;
                    size += 1;
                    break;
                }
                v ^= basis[top];
            }
            if v == 0 && stop_on_dependency {
                return (size, false);
            }
        }
        (size, size == set.len())
    }
}

pub(crate) fn parse_column(s: &str, rows: usize) -> Result<u128> {
    if s.len() != rows {
        return Err(Error::Input(format!(
            "column {s:?} has {} entries, expected {rows}",
            s.len()
        )));
    }
    s.bytes()
        .enumerate()
        .try_fold(0u128, |acc, (i, b)| match b {
            b'0' => Ok(acc),
            b'1' => Ok(acc | (1u128 << i)),
            _ => Err(Error::Input(format!("column {s:?} is not a bitstring"))),
        })
}

impl MatroidOracle for LinearMatroidGf2 {
    fn ground_size(&self) -> usize {
        self.columns.len()
    }
    fn kind(&self) -> MatroidKind {
        MatroidKind::LinearGf2
    }
    fn ledger(&self) -> &Arc<ResourceLedger> {
        &self.ledger
    }
    fn domain(&self) -> ElementSet {
        ElementSet::full(self.columns.len())
    }
    fn is_independent(&self, set: &ElementSet) -> Result<bool> {
        check_range(set, self.columns.len())?;
        self.ledger.record_independence(1);
        if set.len() > self.rows {
            return Ok(false);
        }
        Ok(self.eliminate(set, true).1)
    }
    fn rank(&self, set: &ElementSet) -> Result<usize> {
        check_range(set, self.columns.len())?;
        self.ledger.record_rank(1);
        Ok(self.eliminate(set, false).0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graphic_self_loop_and_parallel_edges() {
        let g = GraphicMatroid::new(2, vec![(0, 0), (0, 1), (0, 1)], Arc::default()).unwrap();
        assert!(!g.is_independent(&ElementSet::from_ids([0])).unwrap());
        assert!(g.is_independent(&ElementSet::from_ids([1])).unwrap());
        assert!(!g.is_independent(&ElementSet::from_ids([1, 2])).unwrap());
        assert_eq!(g.rank(&ElementSet::from_ids([0, 1, 2])).unwrap(), 1);
    }

    #[test]
    fn gf2_zero_column_is_a_loop() {
        let m = LinearMatroidGf2::from_bitstrings(3, &["000", "110", "011", "101"], Arc::default())
            .unwrap();
        assert!(!m.is_independent(&ElementSet::from_ids([0])).unwrap());
        assert!(!m.is_independent(&ElementSet::from_ids([1, 2, 3])).unwrap());
        assert_eq!(m.rank(&ElementSet::from_ids([1, 2, 3])).unwrap(), 2);
        assert!(LinearMatroidGf2::from_bitstrings(2, &["1x"], Arc::default()).is_err());
    }

    #[test]
    fn partition_rejects_unknown_block() {
        assert!(PartitionMatroid::new(vec![0, 2], vec![1, 1], Arc::default()).is_err());
    }
}
