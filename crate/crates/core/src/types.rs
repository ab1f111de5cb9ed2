//! Domain types shared by every procedure: the block layout, the ragged
//! p-value matrix that conforms to it, ground-truth labels and the outcome
//! of a test.
//!
//! Cells are addressed either by `(block, position)` pairs or by a flat
//! block-major index; both orders are stable so outputs are deterministic.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block sizes `s_1, ..., s_b` and the quantities derived from them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockLayout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    s_max: usize,
}

impl BlockLayout {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidLayout("at least one block is required".into()));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidLayout(format!("block {i} is empty")));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &s in &sizes {
            acc += s;
            offsets.push(acc);
        }
        let s_max = sizes.iter().copied().max().unwrap_or(0);
        Ok(Self {
            sizes,
            offsets,
            s_max,
        })
    }

    /// `b` blocks of common size `s`.
    pub fn uniform(b: usize, s: usize) -> Result<Self> {
        Self::new(vec![s; b])
    }

    /// `n` blocks of size one, i.e. no block structure at all.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::uniform(n, 1)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Total number of hypotheses.
    pub fn n(&self) -> usize {
        self.offsets[self.sizes.len()]
    }

    /// Number of blocks.
    pub fn b(&self) -> usize {
        self.sizes.len()
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    /// Average block size `n / b`.
    pub fn s_bar(&self) -> f64 {
        self.n() as f64 / self.b() as f64
    }

    pub fn size(&self, block: usize) -> usize {
        self.sizes[block]
    }

    /// Flat index range occupied by `block`.
    pub fn range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    pub fn contains(&self, block: usize, pos: usize) -> bool {
        block < self.b() && pos < self.sizes[block]
    }

    pub fn flat_index(&self, block: usize, pos: usize) -> Option<usize> {
        self.contains(block, pos).then(|| self.offsets[block] + pos)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn locate(&self, flat: usize) -> Option<(usize, usize)> {
        if flat >= self.n() {
            return None;
        }
        // offsets is sorted; the block is the last offset <= flat
        let block = self.offsets.partition_point(|&o| o <= flat) - 1;
        Some((block, flat - self.offsets[block]))
    }

    /// Iterates over all `(block, position)` pairs in block-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(i, &s)| (0..s).map(move |j| (i, j)))
    }
}

impl TryFrom<Vec<usize>> for BlockLayout {
    type Error = Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<BlockLayout> for Vec<usize> {
    fn from(layout: BlockLayout) -> Self {
        layout.sizes
    }
}

/// p-values `P_ij` laid out block-major over a [`BlockLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct PValueMatrix {
    layout: BlockLayout,
    values: Vec<f64>,
}

impl PValueMatrix {
    /// Builds a matrix from flat block-major values.
    pub fn new(layout: BlockLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.n() {
            return Err(Error::LengthMismatch {
                expected: layout.n(),
                found: values.len(),
            });
        }
        check_probabilities(&values)?;
        Ok(Self { layout, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let layout = BlockLayout::new(rows.iter().map(Vec::len).collect())?;
        Self::new(layout, rows.concat())
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, block: usize) -> &[f64] {
        &self.values[self.layout.range(block)]
    }

    pub fn get(&self, block: usize, pos: usize) -> Option<f64> {
        self.layout.flat_index(block, pos).map(|k| self.values[k])
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.layout.b()).map(move |i| self.row(i))
    }

    /// Copy of the matrix with every entry of `block` replaced by zero.
    pub fn with_row_zeroed(&self, block: usize) -> Self {
        let mut values = self.values.clone();
        values[self.layout.range(block)].fill(0.0);
        Self {
            layout: self.layout.clone(),
            values,
        }
    }

    /// Same values viewed without block structure.
    pub fn flattened(&self) -> Self {
        Self {
            layout: BlockLayout::singletons(self.values.len()).expect("n >= 1"),
            values: self.values.clone(),
        }
    }
}

pub(crate) fn check_probabilities(values: &[f64]) -> Result<()> {
    match values.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(index) => Err(Error::InvalidProbability {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Ground truth: which hypotheses are true nulls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthAssignment {
    layout: BlockLayout,
    true_null: Vec<bool>,
}

impl TruthAssignment {
    pub fn new(layout: BlockLayout, true_null: Vec<bool>) -> Result<Self> {
        if true_null.len() != layout.n() {
            return Err(Error::LengthMismatch {
                expected: layout.n(),
                found: true_null.len(),
            });
        }
        Ok(Self { layout, true_null })
    }

    /// Places `counts[i]` true nulls at the leading positions of block `i`.
    pub fn from_row_counts(layout: BlockLayout, counts: &[usize]) -> Result<Self> {
        if counts.len() != layout.b() {
            return Err(Error::LengthMismatch {
                expected: layout.b(),
                found: counts.len(),
            });
        }
        let mut true_null = Vec::with_capacity(layout.n());
        for (i, &m) in counts.iter().enumerate() {
            let s = layout.size(i);
            if m > s {
                return Err(Error::ShapeMismatch(format!(
                    "block {i} has {s} hypotheses but {m} true nulls were requested"
                )));
            }
            true_null.extend((0..s).map(|j| j < m));
        }
        Ok(Self { layout, true_null })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn is_true_null(&self, block: usize, pos: usize) -> Option<bool> {
        self.layout
            .flat_index(block, pos)
            .map(|k| self.true_null[k])
    }

    /// Flat block-major labels, `true` for a true null.
    pub fn labels(&self) -> &[bool] {
        &self.true_null
    }

    pub fn n0(&self) -> usize {
        self.true_null.iter().filter(|&&h| h).count()
    }

    pub fn pi0(&self) -> f64 {
        self.n0() as f64 / self.layout.n() as f64
    }

    /// Number of true nulls in `block` (`m_i`).
    pub fn nulls_in_row(&self, block: usize) -> usize {
        self.true_null[self.layout.range(block)]
            .iter()
            .filter(|&&h| h)
            .count()
    }

    pub fn row_counts(&self) -> Vec<usize> {
        (0..self.layout.b()).map(|i| self.nulls_in_row(i)).collect()
    }
}

/// Result of applying a multiple testing procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    /// Rejected `(block, position)` pairs in block-major order.
    pub rejected: Vec<(usize, usize)>,
    /// Total number of rejections `R`.
    pub rejections: usize,
    /// Number of significant blocks (`B` or `B*`); zero when not applicable.
    pub significant_blocks: usize,
    /// Null-count estimate used by an adaptive procedure.
    pub estimator_value: Option<f64>,
}

impl TestOutcome {
    pub fn empty() -> Self {
        Self {
            rejected: Vec::new(),
            rejections: 0,
            significant_blocks: 0,
            estimator_value: None,
        }
    }

    /// Wraps a set of flat indices produced by a procedure that ignores blocks.
    pub fn from_flat(layout: &BlockLayout, flat: &[usize]) -> Result<Self> {
        let mut rejected = flat
            .iter()
            .map(|&k| {
                layout.locate(k).ok_or_else(|| {
                    Error::ShapeMismatch(format!("index {k} outside a layout of {}", layout.n()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rejected.sort_unstable();
        rejected.dedup();
        Ok(Self {
            rejections: rejected.len(),
            rejected,
            significant_blocks: 0,
            estimator_value: None,
        })
    }

    pub fn is_rejected(&self, block: usize, pos: usize) -> bool {
        self.rejected.binary_search(&(block, pos)).is_ok()
    }

    /// Rejections mapped back to flat block-major indices.
    pub fn flat_indices(&self, layout: &BlockLayout) -> Vec<usize> {
        self.rejected
            .iter()
            .filter_map(|&(i, j)| layout.flat_index(i, j))
            .collect()
    }
}
