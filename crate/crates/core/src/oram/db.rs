//! Server-held ciphertexts and their on-disk format.
//!
//! ```text
//! file    := "AWDB" ‖ version:u8 ‖ config ‖ body
//! config  := variant:u8 ‖ layout:u8 ‖ capacity:u32 ‖ bucket_size:u8 ‖ recursion_factor:u16
//! body    := naive: len:u32 ‖ ct
//!          | tree:  len:u32 ‖ top_ct ‖ trees:u8 ‖ { len:u32 ‖ stash_ct ‖ len:u32 ‖ buckets }*
//! ```
//!
//! All integers big-endian. Every length is checked against the geometry
//! derived from `config`.

use std::path::Path;

use rand::{CryptoRng, RngCore};

use super::layout::{Forest, UNSET_POSITION};
use super::{OramConfig, OramError, OramKey, CONFIG_LEN};
use crate::crypto::sealed_len;

pub const DB_MAGIC: [u8; 4] = *b"AWDB";
pub const DB_FORMAT_VERSION: u8 = 1;

pub(crate) const AD_NAIVE: u8 = 0;
pub(crate) const AD_TOP: u8 = 1;
pub(crate) const AD_STASH: u8 = 2;
pub(crate) const AD_BUCKET: u8 = 3;

/// `kind ‖ tree ‖ level ‖ index:u32`, bound into every stored ciphertext.
pub(crate) fn associated_data(kind: u8, tree: u8, level: u8, index: u32) -> [u8; 7] {
    let i = index.to_be_bytes();
    [kind, tree, level, i[0], i[1], i[2], i[3]]
}

/// One independently sealed piece of the database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitId {
    Naive,
    Top,
    Stash(u8),
    Bucket(u8, u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct TreeStore {
    pub stash: Vec<u8>,
    /// Fixed-size bucket ciphertexts back to back in heap order.
    pub buckets: Vec<u8>,
    pub bucket_ct_len: usize,
}

impl TreeStore {
    pub fn bucket(&self, index: usize) -> &[u8] {
        &self.buckets[index * self.bucket_ct_len..(index + 1) * self.bucket_ct_len]
    }

    pub fn bucket_mut(&mut self, index: usize) -> &mut [u8] {
        &mut self.buckets[index * self.bucket_ct_len..(index + 1) * self.bucket_ct_len]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Body {
    Naive(Vec<u8>),
    Trees { top: Vec<u8>, trees: Vec<TreeStore> },
}

/// What an untrusted vendor stores. Structure is public, contents are not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedDatabase {
    pub(crate) config: OramConfig,
    pub(crate) forest: Option<Forest>,
    pub(crate) body: Body,
}

impl EncryptedDatabase {
    /// An all-unset database under `key`.
    pub fn initialise<R: RngCore + CryptoRng>(key: &OramKey, rng: &mut R) -> Self {
        let config = key.config;
        let forest = Forest::for_config(&config);
        let body = match &forest {
            None => {
                let plain = vec![0u8; config.capacity as usize * config.layout.record_len()];
                Body::Naive(key.ae.seal(&associated_data(AD_NAIVE, 0, 0, 0), &plain, rng))
            }
            Some(forest) => {
                let top_plain = vec![0xFF; forest.top_plain_len()];
                debug_assert!(top_plain.chunks(4).all(|c| c == UNSET_POSITION.to_be_bytes()));
                let top = key.ae.seal(&associated_data(AD_TOP, 0, 0, 0), &top_plain, rng);
                let trees = forest
                    .trees
                    .iter()
                    .enumerate()
                    .map(|(t, shape)| {
                        let t = t as u8;
                        let stash = key.ae.seal(&associated_data(AD_STASH, t, 0, 0), &vec![0u8; shape.stash_plain_len()], rng);
                        let empty = vec![0u8; shape.bucket_plain_len()];
                        let mut buckets = Vec::with_capacity(shape.bucket_count() * shape.bucket_ct_len());
                        for index in 0..shape.bucket_count() {
                            let level = usize::BITS - 1 - (index + 1).leading_zeros();
                            let ad = associated_data(AD_BUCKET, t, level as u8, index as u32);
                            buckets.extend_from_slice(&key.ae.seal(&ad, &empty, rng));
                        }
                        TreeStore { stash, buckets, bucket_ct_len: shape.bucket_ct_len() }
                    })
                    .collect();
                Body::Trees { top, trees }
            }
        };
        Self { config, forest, body }
    }

    pub fn config(&self) -> &OramConfig {
        &self.config
    }

    pub fn forest(&self) -> Option<&Forest> {
        self.forest.as_ref()
    }

    /// Total bytes of ciphertext held.
    pub fn stored_bytes(&self) -> usize {
        match &self.body {
            Body::Naive(ct) => ct.len(),
            Body::Trees { top, trees } => top.len() + trees.iter().map(|t| t.stash.len() + t.buckets.len()).sum::<usize>(),
        }
    }

    /// Every unit, in a stable order.
    pub fn units(&self) -> Vec<UnitId> {
        match &self.body {
            Body::Naive(_) => vec![UnitId::Naive],
            Body::Trees { trees, .. } => {
                let mut out = vec![UnitId::Top];
                for (t, store) in trees.iter().enumerate() {
                    out.push(UnitId::Stash(t as u8));
                    let count = store.buckets.len() / store.bucket_ct_len;
                    out.extend((0..count as u32).map(|i| UnitId::Bucket(t as u8, i)));
                }
                out
            }
        }
    }

    /// Raw ciphertext bytes of a unit, for fault injection and inspection.
    pub fn unit_mut(&mut self, unit: UnitId) -> Option<&mut [u8]> {
        match (&mut self.body, unit) {
            (Body::Naive(ct), UnitId::Naive) => Some(ct.as_mut_slice()),
            (Body::Trees { top, .. }, UnitId::Top) => Some(top.as_mut_slice()),
            (Body::Trees { trees, .. }, UnitId::Stash(t)) => trees.get_mut(t as usize).map(|s| s.stash.as_mut_slice()),
            (Body::Trees { trees, .. }, UnitId::Bucket(t, i)) => {
                let store = trees.get_mut(t as usize)?;
                let count = store.buckets.len() / store.bucket_ct_len;
                ((i as usize) < count).then(|| store.bucket_mut(i as usize))
            }
            _ => None,
        }
    }

    /// Flips bit `bit` (counted from the first byte's MSB) of `unit`.
    pub fn flip_bit(&mut self, unit: UnitId, bit: usize) -> bool {
        match self.unit_mut(unit) {
            Some(bytes) if bit / 8 < bytes.len() => {
                bytes[bit / 8] ^= 0x80 >> (bit % 8);
                true
            }
            _ => false,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.stored_bytes() + 64);
        out.extend_from_slice(&DB_MAGIC);
        out.push(DB_FORMAT_VERSION);
        out.extend_from_slice(&self.config.to_bytes());
        let put = |out: &mut Vec<u8>, bytes: &[u8]| {
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(bytes);
        };
        match &self.body {
            Body::Naive(ct) => put(&mut out, ct),
            Body::Trees { top, trees } => {
                put(&mut out, top);
                out.push(trees.len() as u8);
                for store in trees {
                    put(&mut out, &store.stash);
                    put(&mut out, &store.buckets);
                }
            }
        }
        out
    }

    /// Writes the file atomically: a sibling temporary file is renamed over
    /// `path`.
    pub fn store(&self, path: &Path) -> Result<(), OramError> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| OramError::Io(e.to_string()))?;
        std::fs::rename(&tmp, path).map_err(|e| OramError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, OramError> {
        let bytes = std::fs::read(path).map_err(|e| OramError::Io(e.to_string()))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, OramError> {
        let mut r = Cursor { bytes };
        if r.take(4)? != DB_MAGIC {
            return Err(format_error("bad magic"));
        }
        let version = r.u8()?;
        if version != DB_FORMAT_VERSION {
            return Err(OramError::Format(format!("unsupported format version {version}")));
        }
        let config = OramConfig::from_bytes(r.take(CONFIG_LEN)?.try_into().unwrap())?;
        let (capacity, layout) = (config.capacity, config.layout);
        let forest = Forest::for_config(&config);
        let body = match &forest {
            None => {
                let expected = sealed_len(capacity as usize * layout.record_len());
                Body::Naive(r.sized(expected)?.to_vec())
            }
            Some(forest) => {
                let top = r.sized(forest.top_ct_len())?.to_vec();
                if r.u8()? as usize != forest.trees.len() {
                    return Err(format_error("tree count does not match configuration"));
                }
                let mut trees = Vec::with_capacity(forest.trees.len());
                for shape in &forest.trees {
                    let stash = r.sized(shape.stash_ct_len())?.to_vec();
                    let buckets = r.sized(shape.bucket_count() * shape.bucket_ct_len())?.to_vec();
                    trees.push(TreeStore { stash, buckets, bucket_ct_len: shape.bucket_ct_len() });
                }
                Body::Trees { top, trees }
            }
        };
        if !r.bytes.is_empty() {
            return Err(format_error("trailing bytes"));
        }
        Ok(Self { config, forest, body })
    }
}

fn format_error(msg: &str) -> OramError {
    OramError::Format(msg.to_owned())
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], OramError> {
        if self.bytes.len() < n {
            return Err(format_error("truncated"));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, OramError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, OramError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    /// A `len:u32` prefix that must equal `expected`, then the bytes.
    fn sized(&mut self, expected: usize) -> Result<&'a [u8], OramError> {
        let len = self.u32()? as usize;
        if len != expected {
            return Err(OramError::Format(format!("section length {len}, expected {expected}")));
        }
        self.take(len)
    }
}
