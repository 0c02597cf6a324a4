use crate::error::{Error, Result};

/// Contiguous ragged segments given by offsets `[0, o_1, ..., total]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segments {
    offsets: Vec<usize>,
}

impl Segments {
    pub fn from_offsets(offsets: Vec<usize>) -> Result<Self> {
        if offsets.first() != Some(&0) || offsets.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("segment offsets must start at 0 and be non-decreasing"));
        }
        Ok(Self { offsets })
    }

    pub fn from_lengths(lengths: impl IntoIterator<Item = usize>) -> Self {
        let mut offsets = vec![0];
        for l in lengths {
            offsets.push(offsets.last().unwrap() + l);
        }
        Self { offsets }
    }

    /// `count` segments of equal length.
    pub fn uniform(count: usize, len: usize) -> Self {
        Self::from_lengths(std::iter::repeat_n(len, count))
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.offsets.windows(2).map(|w| w[0]..w[1])
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }
}

/// Which tokens each token may attend to.
///
/// Stored as diagonal blocks (one per environment instance in a ragged
/// batch) with an optional dense boolean refinement inside each block.
/// Entries outside every block are always false.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMask {
    blocks: Segments,
    allowed: Option<Vec<bool>>,
}

impl AttentionMask {
    pub fn block_diagonal(blocks: Segments) -> Result<Self> {
        if blocks.ranges().any(|r| r.is_empty()) {
            return Err(Error::invalid("attention block with no tokens"));
        }
        Ok(Self { blocks, allowed: None })
    }

    /// A general `n × n` mask, row-major. Every row needs at least one true entry.
    pub fn dense(n: usize, allowed: Vec<bool>) -> Result<Self> {
        if allowed.len() != n * n {
            return Err(Error::invalid("dense mask must be n*n"));
        }
        for i in 0..n {
            if !allowed[i * n..(i + 1) * n].iter().any(|&b| b) {
                return Err(Error::invalid(format!("mask row {i} allows nothing")));
            }
        }
        Ok(Self {
            blocks: Segments::from_lengths([n]),
            allowed: Some(allowed),
        })
    }

    pub fn tokens(&self) -> usize {
        self.blocks.total()
    }

    pub fn blocks(&self) -> &Segments {
        &self.blocks
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        let n = self.tokens();
        if i >= n || j >= n {
            return false;
        }
        let same_block = self.blocks.ranges().any(|r| r.contains(&i) && r.contains(&j));
        same_block && self.allowed.as_ref().is_none_or(|a| a[i * n + j])
    }

    pub(crate) fn refinement(&self) -> Option<&[bool]> {
        self.allowed.as_deref()
    }
}
