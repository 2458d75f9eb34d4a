//! The vendor's half of an access: answers fetch/store frames and stores
//! returned ciphertexts verbatim. The server holds no key.

use super::db::{Body, EncryptedDatabase};
use crate::wire::{kind, Channel, ChannelError, Frame, FrameError, Reader};

/// Bytes moved and requests served since the last [`reset`](Self::reset).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransferStats {
    pub bytes_to_client: u64,
    pub bytes_to_server: u64,
    pub server_ops: u64,
}

impl TransferStats {
    pub fn total(&self) -> u64 {
        self.bytes_to_client + self.bytes_to_server
    }
}

/// Error codes carried in an `ORAM_ERROR` reply.
pub mod error_code {
    pub const MALFORMED: u8 = 1;
    pub const WRONG_VARIANT: u8 = 2;
    pub const OUT_OF_RANGE: u8 = 3;
    pub const BAD_LENGTH: u8 = 4;
}

/// Owns the database for the duration of a session; `&mut` access is the
/// mutual exclusion.
#[derive(Debug, Clone)]
pub struct OramServer {
    db: EncryptedDatabase,
    stats: TransferStats,
}

impl OramServer {
    pub fn new(db: EncryptedDatabase) -> Self {
        Self { db, stats: TransferStats::default() }
    }

    pub fn db(&self) -> &EncryptedDatabase {
        &self.db
    }

    pub fn db_mut(&mut self) -> &mut EncryptedDatabase {
        &mut self.db
    }

    pub fn into_db(self) -> EncryptedDatabase {
        self.db
    }

    /// Replaces the whole database, as a rewinding vendor would.
    pub fn replace_db(&mut self, db: EncryptedDatabase) -> EncryptedDatabase {
        std::mem::replace(&mut self.db, db)
    }

    pub fn stats(&self) -> TransferStats {
        self.stats
    }

    pub fn reset_stats(&mut self) -> TransferStats {
        std::mem::take(&mut self.stats)
    }

    /// Handles one encoded request and returns the encoded reply. Malformed
    /// requests get an error frame and leave the database untouched.
    pub fn serve(&mut self, request: &[u8]) -> Vec<u8> {
        self.stats.bytes_to_server += request.len() as u64;
        self.stats.server_ops += 1;
        let reply = match Frame::decode(request) {
            Ok(frame) => self.handle(&frame).unwrap_or_else(|code| Frame::new(kind::ORAM_ERROR, vec![code])),
            Err(_) => Frame::new(kind::ORAM_ERROR, vec![error_code::MALFORMED]),
        };
        let bytes = reply.encode();
        self.stats.bytes_to_client += bytes.len() as u64;
        bytes
    }

    fn handle(&mut self, frame: &Frame) -> Result<Frame, u8> {
        let malformed = |_: FrameError| error_code::MALFORMED;
        let mut r = Reader::new(frame);
        match (&mut self.db.body, frame.kind) {
            (Body::Naive(ct), kind::ORAM_FETCH_DB) => {
                r.finish().map_err(malformed)?;
                Ok(Frame::new(kind::ORAM_DB, ct.clone()))
            }
            (Body::Naive(ct), kind::ORAM_STORE_DB) => {
                if frame.payload.len() != ct.len() {
                    return Err(error_code::BAD_LENGTH);
                }
                ct.copy_from_slice(&frame.payload);
                Ok(Frame::empty(kind::ORAM_ACK))
            }
            (Body::Trees { top, .. }, kind::ORAM_FETCH_TOP) => {
                r.finish().map_err(malformed)?;
                Ok(Frame::new(kind::ORAM_TOP, top.clone()))
            }
            (Body::Trees { top, .. }, kind::ORAM_STORE_TOP) => {
                if frame.payload.len() != top.len() {
                    return Err(error_code::BAD_LENGTH);
                }
                top.copy_from_slice(&frame.payload);
                Ok(Frame::empty(kind::ORAM_ACK))
            }
            (Body::Trees { trees, .. }, kind::ORAM_FETCH_PATH) => {
                let tree = r.u8().map_err(malformed)?;
                let leaf = r.u32().map_err(malformed)?;
                r.finish().map_err(malformed)?;
                let shape = self.db.forest.as_ref().and_then(|f| f.trees.get(tree as usize)).copied();
                let shape = shape.ok_or(error_code::OUT_OF_RANGE)?;
                if leaf >= shape.leaves() {
                    return Err(error_code::OUT_OF_RANGE);
                }
                let store = &trees[tree as usize];
                let mut payload = Vec::with_capacity(shape.path_payload_len());
                payload.extend_from_slice(&store.stash);
                for depth in 0..=shape.height {
                    payload.extend_from_slice(store.bucket(shape.node(leaf, depth)));
                }
                Ok(Frame::new(kind::ORAM_PATH, payload))
            }
            (Body::Trees { trees, .. }, kind::ORAM_STORE_PATH) => {
                let tree = r.u8().map_err(malformed)?;
                let leaf = r.u32().map_err(malformed)?;
                let rest = r.rest();
                let shape = self.db.forest.as_ref().and_then(|f| f.trees.get(tree as usize)).copied();
                let shape = shape.ok_or(error_code::OUT_OF_RANGE)?;
                if leaf >= shape.leaves() {
                    return Err(error_code::OUT_OF_RANGE);
                }
                if rest.len() != shape.path_payload_len() {
                    return Err(error_code::BAD_LENGTH);
                }
                let store = &mut trees[tree as usize];
                let (stash, buckets) = rest.split_at(shape.stash_ct_len());
                store.stash.copy_from_slice(stash);
                for (depth, ct) in buckets.chunks(shape.bucket_ct_len()).enumerate() {
                    store.bucket_mut(shape.node(leaf, depth as u32)).copy_from_slice(ct);
                }
                Ok(Frame::empty(kind::ORAM_ACK))
            }
            (_, k) if kind::is_oram_request(k) => Err(error_code::WRONG_VARIANT),
            _ => Err(error_code::MALFORMED),
        }
    }
}

impl Channel for OramServer {
    fn exchange(&mut self, request: &[u8]) -> Result<Vec<u8>, ChannelError> {
        Ok(self.serve(request))
    }
}
