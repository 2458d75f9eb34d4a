//! The card's half of an access.

use rand::{CryptoRng, Rng, RngCore};

use super::db::{associated_data, AD_BUCKET, AD_NAIVE, AD_STASH, AD_TOP};
use super::layout::{Forest, TreeShape, POSITION_LEN, STASH_CAPACITY, UNSET_POSITION, VALID_BIT};
use super::{HouseholdRecord, OramError, OramKey};
use crate::wire::{kind, Channel, Frame, FrameError};

/// Runs reads and writes against any channel that reaches an
/// [`OramServer`](super::OramServer).
#[derive(Debug, Clone)]
pub struct OramClient {
    key: OramKey,
    forest: Option<Forest>,
}

struct Block {
    id: u32,
    leaf: u32,
    payload: Vec<u8>,
}

impl OramClient {
    pub fn new(key: &OramKey) -> Self {
        Self { key: key.clone(), forest: Forest::for_config(&key.config) }
    }

    pub fn key(&self) -> &OramKey {
        &self.key
    }

    pub fn read<C, R>(&self, channel: &mut C, index: u32, rng: &mut R) -> Result<HouseholdRecord, OramError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
    {
        self.access(channel, index, None, rng)
    }

    pub fn write<C, R>(&self, channel: &mut C, index: u32, record: HouseholdRecord, rng: &mut R) -> Result<(), OramError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
    {
        self.access(channel, index, Some(record), rng).map(|_| ())
    }

    /// Returns the record as it was before `replacement` (if any) took effect.
    fn access<C, R>(
        &self,
        channel: &mut C,
        index: u32,
        replacement: Option<HouseholdRecord>,
        rng: &mut R,
    ) -> Result<HouseholdRecord, OramError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
    {
        let capacity = self.key.config.capacity;
        if index >= capacity {
            return Err(OramError::IndexOutOfRange { index, capacity });
        }
        match &self.forest {
            None => self.access_naive(channel, index, replacement, rng),
            Some(forest) => self.access_forest(forest, channel, index, replacement, rng),
        }
    }

    fn access_naive<C, R>(
        &self,
        channel: &mut C,
        index: u32,
        replacement: Option<HouseholdRecord>,
        rng: &mut R,
    ) -> Result<HouseholdRecord, OramError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
    {
        let layout = self.key.config.layout;
        let width = layout.record_len();
        let ad = associated_data(AD_NAIVE, 0, 0, 0);
        let ct = expect(channel, Frame::empty(kind::ORAM_FETCH_DB), kind::ORAM_DB)?;
        let mut plain = self.key.ae.open(&ad, &ct).map_err(|_| OramError::Integrity)?;
        if plain.len() != self.key.config.capacity as usize * width {
            return Err(OramError::Integrity);
        }
        let slot = index as usize * width..(index as usize + 1) * width;
        let old = HouseholdRecord::decode(layout, &plain[slot.clone()]).ok_or(OramError::Integrity)?;
        if let Some(new) = replacement {
            plain[slot].copy_from_slice(&new.encode(layout));
        }
        let sealed = self.key.ae.seal(&ad, &plain, rng);
        expect(channel, Frame::new(kind::ORAM_STORE_DB, sealed), kind::ORAM_ACK)?;
        Ok(old)
    }

    fn access_forest<C, R>(
        &self,
        forest: &Forest,
        channel: &mut C,
        index: u32,
        replacement: Option<HouseholdRecord>,
        rng: &mut R,
    ) -> Result<HouseholdRecord, OramError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
    {
        let ids = forest.chain(index);
        let last = forest.trees.len() - 1;

        let top_ad = associated_data(AD_TOP, 0, 0, 0);
        let ct = expect(channel, Frame::empty(kind::ORAM_FETCH_TOP), kind::ORAM_TOP)?;
        let mut top = self.key.ae.open(&top_ad, &ct).map_err(|_| OramError::Integrity)?;
        if top.len() != forest.top_plain_len() {
            return Err(OramError::Integrity);
        }
        let mut leaf = get_entry(&top, ids[last] as usize);
        let mut next_leaf = rng.gen_range(0..forest.trees[last].leaves());
        set_entry(&mut top, ids[last] as usize, next_leaf);
        let sealed = self.key.ae.seal(&top_ad, &top, rng);
        expect(channel, Frame::new(kind::ORAM_STORE_TOP, sealed), kind::ORAM_ACK)?;

        for t in (1..=last).rev() {
            let slot = (ids[t - 1] % forest.fan_in) as usize;
            let child_next = rng.gen_range(0..forest.trees[t - 1].leaves());
            let mut child_leaf = UNSET_POSITION;
            self.access_tree(channel, t, ids[t], leaf, next_leaf, rng, |payload| {
                child_leaf = get_entry(payload, slot);
                set_entry(payload, slot, child_next);
            })?;
            leaf = child_leaf;
            next_leaf = child_next;
        }

        let layout = self.key.config.layout;
        let mut old = None;
        self.access_tree(channel, 0, ids[0], leaf, next_leaf, rng, |payload| {
            old = HouseholdRecord::decode(layout, payload);
            if let Some(new) = replacement {
                payload.clear();
                new.encode_into(layout, payload);
            }
        })?;
        old.ok_or(OramError::Integrity)
    }

    /// Path-style access to block `id` of tree `t`: fetch the path to `leaf`
    /// and the stash, apply `update`, remap the block to `next_leaf`, evict
    /// deepest-first and write everything back.
    #[allow(clippy::too_many_arguments)]
    fn access_tree<C, R, F>(
        &self,
        channel: &mut C,
        t: usize,
        id: u32,
        leaf: u32,
        next_leaf: u32,
        rng: &mut R,
        update: F,
    ) -> Result<(), OramError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
        F: FnOnce(&mut Vec<u8>),
    {
        let forest = self.forest.as_ref().expect("tree access on a naive configuration");
        let shape = forest.trees[t];
        let tree = t as u8;
        let assigned = leaf != UNSET_POSITION;
        let path_leaf = match leaf {
            UNSET_POSITION => rng.gen_range(0..shape.leaves()),
            l if l < shape.leaves() => l,
            _ => return Err(OramError::Integrity),
        };

        let mut request = Vec::with_capacity(5);
        request.push(tree);
        request.extend_from_slice(&path_leaf.to_be_bytes());
        let payload = expect(channel, Frame::new(kind::ORAM_FETCH_PATH, request), kind::ORAM_PATH)?;
        if payload.len() != shape.path_payload_len() {
            return Err(OramError::Integrity);
        }

        let (stash_ct, bucket_cts) = payload.split_at(shape.stash_ct_len());
        let stash_ad = associated_data(AD_STASH, tree, 0, 0);
        let mut working = Vec::new();
        let plain = self.key.ae.open(&stash_ad, stash_ct).map_err(|_| OramError::Integrity)?;
        parse_blocks(&shape, &plain, STASH_CAPACITY, &mut working)?;
        for (depth, ct) in bucket_cts.chunks(shape.bucket_ct_len()).enumerate() {
            let node = shape.node(path_leaf, depth as u32);
            let ad = associated_data(AD_BUCKET, tree, depth as u8, node as u32);
            let plain = self.key.ae.open(&ad, ct).map_err(|_| OramError::Integrity)?;
            parse_blocks(&shape, &plain, shape.bucket_size, &mut working)?;
        }

        let mut payload = match working.iter().position(|b| b.id == id) {
            Some(i) => working.swap_remove(i).payload,
            None if assigned => return Err(OramError::Integrity),
            None if t == 0 => vec![0u8; shape.payload_len],
            None => vec![0xFF; shape.payload_len],
        };
        update(&mut payload);
        debug_assert_eq!(payload.len(), shape.payload_len);
        working.push(Block { id, leaf: next_leaf, payload });

        let mut buckets: Vec<Vec<Block>> = (0..shape.path_len()).map(|_| Vec::new()).collect();
        for depth in (0..=shape.height).rev() {
            let bucket = &mut buckets[depth as usize];
            let mut i = 0;
            while i < working.len() && bucket.len() < shape.bucket_size {
                if shape.shares_node(working[i].leaf, path_leaf, depth) {
                    bucket.push(working.swap_remove(i));
                } else {
                    i += 1;
                }
            }
        }
        if working.len() > STASH_CAPACITY {
            return Err(OramError::StashOverflow);
        }

        let mut out = Vec::with_capacity(5 + shape.path_payload_len());
        out.push(tree);
        out.extend_from_slice(&path_leaf.to_be_bytes());
        let stash_plain = serialise_blocks(&shape, &working, STASH_CAPACITY);
        out.extend_from_slice(&self.key.ae.seal(&stash_ad, &stash_plain, rng));
        for (depth, blocks) in buckets.iter().enumerate() {
            let node = shape.node(path_leaf, depth as u32);
            let ad = associated_data(AD_BUCKET, tree, depth as u8, node as u32);
            let plain = serialise_blocks(&shape, blocks, shape.bucket_size);
            out.extend_from_slice(&self.key.ae.seal(&ad, &plain, rng));
        }
        expect(channel, Frame::new(kind::ORAM_STORE_PATH, out), kind::ORAM_ACK)?;
        Ok(())
    }
}

fn expect<C: Channel + ?Sized>(channel: &mut C, request: Frame, want: u8) -> Result<Vec<u8>, OramError> {
    let reply = channel.call(&request)?;
    match reply.kind {
        k if k == want => Ok(reply.payload),
        kind::ORAM_ERROR => Err(OramError::ServerError(reply.payload.first().copied().unwrap_or(0))),
        k => Err(FrameError::UnexpectedKind(k).into()),
    }
}

fn get_entry(map: &[u8], slot: usize) -> u32 {
    let at = slot * POSITION_LEN;
    u32::from_be_bytes(map[at..at + POSITION_LEN].try_into().unwrap())
}

fn set_entry(map: &mut [u8], slot: usize, leaf: u32) {
    let at = slot * POSITION_LEN;
    map[at..at + POSITION_LEN].copy_from_slice(&leaf.to_be_bytes());
}

fn parse_blocks(shape: &TreeShape, plain: &[u8], slots: usize, out: &mut Vec<Block>) -> Result<(), OramError> {
    if plain.len() != slots * shape.block_len() {
        return Err(OramError::Integrity);
    }
    for raw in plain.chunks(shape.block_len()) {
        let header = u32::from_be_bytes(raw[..4].try_into().unwrap());
        if header & VALID_BIT == 0 {
            continue;
        }
        let leaf = u32::from_be_bytes(raw[4..8].try_into().unwrap());
        if leaf >= shape.leaves() {
            return Err(OramError::Integrity);
        }
        out.push(Block { id: header & !VALID_BIT, leaf, payload: raw[8..].to_vec() });
    }
    Ok(())
}

fn serialise_blocks(shape: &TreeShape, blocks: &[Block], slots: usize) -> Vec<u8> {
    let mut plain = vec![0u8; slots * shape.block_len()];
    for (raw, block) in plain.chunks_mut(shape.block_len()).zip(blocks) {
        raw[..4].copy_from_slice(&(block.id | VALID_BIT).to_be_bytes());
        raw[4..8].copy_from_slice(&block.leaf.to_be_bytes());
        raw[8..].copy_from_slice(&block.payload);
    }
    plain
}
