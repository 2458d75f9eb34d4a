//! Public geometry of the tree variants. Both client and server derive it
//! from [`OramConfig`] alone.

use super::{OramConfig, Variant};
use crate::crypto::sealed_len;

/// Width of one position-map entry (a leaf index).
pub const POSITION_LEN: usize = 4;
/// Entry value for a block that has never been written.
pub(crate) const UNSET_POSITION: u32 = u32::MAX;
/// Blocks a tree's stash can hold between accesses.
pub const STASH_CAPACITY: usize = 64;
/// The recursive variant adds position-map trees until the remaining map
/// fits in this many bytes.
pub const TOP_MAP_MAX_BYTES: usize = 256;
/// `header:u32 ‖ leaf:u32` in front of every block payload.
pub(crate) const BLOCK_HEADER_LEN: usize = 8;
pub(crate) const VALID_BIT: u32 = 1 << 31;

/// Shape of one tree: `2^height` leaves, buckets in heap order (root 0,
/// children of `i` at `2i+1` and `2i+2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeShape {
    pub blocks: u32,
    pub height: u32,
    pub payload_len: usize,
    pub bucket_size: usize,
}

impl TreeShape {
    pub fn new(blocks: u32, payload_len: usize, bucket_size: usize) -> Self {
        let height = ceil_log2(blocks).saturating_sub(1);
        Self { blocks, height, payload_len, bucket_size }
    }

    pub fn leaves(&self) -> u32 {
        1 << self.height
    }

    pub fn bucket_count(&self) -> usize {
        (1usize << (self.height + 1)) - 1
    }

    /// Buckets on any root-to-leaf path.
    pub fn path_len(&self) -> usize {
        self.height as usize + 1
    }

    pub fn block_len(&self) -> usize {
        BLOCK_HEADER_LEN + self.payload_len
    }

    pub fn bucket_plain_len(&self) -> usize {
        self.bucket_size * self.block_len()
    }

    pub fn bucket_ct_len(&self) -> usize {
        sealed_len(self.bucket_plain_len())
    }

    pub fn stash_plain_len(&self) -> usize {
        STASH_CAPACITY * self.block_len()
    }

    pub fn stash_ct_len(&self) -> usize {
        sealed_len(self.stash_plain_len())
    }

    /// Stash ciphertext followed by every bucket on one path.
    pub fn path_payload_len(&self) -> usize {
        self.stash_ct_len() + self.path_len() * self.bucket_ct_len()
    }

    /// Heap index of the bucket at `depth` on the path to `leaf`.
    pub fn node(&self, leaf: u32, depth: u32) -> usize {
        ((1usize << depth) - 1) + (leaf >> (self.height - depth)) as usize
    }

    /// Whether a block mapped to `block_leaf` may rest at `depth` on the path
    /// to `path_leaf`.
    pub(crate) fn shares_node(&self, block_leaf: u32, path_leaf: u32, depth: u32) -> bool {
        let shift = self.height - depth;
        block_leaf >> shift == path_leaf >> shift
    }
}

/// All trees of a tree-variant database. Tree 0 holds the records; tree
/// `i + 1` holds the positions of tree `i`'s blocks, `recursion_factor` per
/// block. The top map holds positions of the last tree's blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forest {
    pub trees: Vec<TreeShape>,
    pub top_entries: u32,
    pub fan_in: u32,
}

impl Forest {
    /// `None` for the naive variant.
    pub fn for_config(config: &OramConfig) -> Option<Self> {
        let z = config.bucket_size as usize;
        let fan_in = u32::from(config.recursion_factor);
        let data = TreeShape::new(config.capacity, config.layout.record_len(), z);
        let mut trees = vec![data];
        match config.variant {
            Variant::Naive => return None,
            Variant::Tree => {}
            Variant::Recursive => {
                let mut blocks = config.capacity;
                while blocks as usize * POSITION_LEN > TOP_MAP_MAX_BYTES {
                    blocks = blocks.div_ceil(fan_in);
                    trees.push(TreeShape::new(blocks, fan_in as usize * POSITION_LEN, z));
                }
            }
        }
        let top_entries = trees.last().map(|t| t.blocks).unwrap_or(0);
        Some(Self { trees, top_entries, fan_in })
    }

    pub fn top_plain_len(&self) -> usize {
        self.top_entries as usize * POSITION_LEN
    }

    pub fn top_ct_len(&self) -> usize {
        sealed_len(self.top_plain_len())
    }

    /// Block id of `record` in every tree, data tree first.
    pub(crate) fn chain(&self, record: u32) -> Vec<u32> {
        let mut ids = Vec::with_capacity(self.trees.len());
        let mut id = record;
        ids.push(id);
        for _ in 1..self.trees.len() {
            id /= self.fan_in;
            ids.push(id);
        }
        ids
    }
}

fn ceil_log2(n: u32) -> u32 {
    if n <= 1 {
        0
    } else {
        32 - (n - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oram::{OramConfig, Variant};

    #[test]
    fn heights() {
        assert_eq!(TreeShape::new(1, 4, 4).height, 0);
        assert_eq!(TreeShape::new(2, 4, 4).height, 0);
        assert_eq!(TreeShape::new(3, 4, 4).height, 1);
        assert_eq!(TreeShape::new(1024, 4, 4).height, 9);
        assert_eq!(TreeShape::new(1025, 4, 4).height, 10);
    }

    #[test]
    fn path_nodes_follow_heap_order() {
        let t = TreeShape::new(8, 4, 4);
        assert_eq!(t.height, 2);
        let path: Vec<_> = (0..=2).map(|d| t.node(3, d)).collect();
        assert_eq!(path, vec![0, 2, 6]);
        let path: Vec<_> = (0..=2).map(|d| t.node(0, d)).collect();
        assert_eq!(path, vec![0, 1, 3]);
    }

    #[test]
    fn recursive_levels_at_2_15() {
        let f = Forest::for_config(&OramConfig::new(Variant::Recursive, 1 << 15)).unwrap();
        let blocks: Vec<_> = f.trees.iter().map(|t| t.blocks).collect();
        assert_eq!(blocks, vec![32768, 2048, 128, 8]);
        assert_eq!(f.top_plain_len(), 32);
        assert_eq!(f.chain(40_000 % 32768), vec![7232, 452, 28, 1]);
    }

    #[test]
    fn small_recursive_equals_tree() {
        let r = Forest::for_config(&OramConfig::new(Variant::Recursive, 64)).unwrap();
        let t = Forest::for_config(&OramConfig::new(Variant::Tree, 64)).unwrap();
        assert_eq!(r, t);
        assert!(Forest::for_config(&OramConfig::new(Variant::Naive, 64)).is_none());
    }
}
