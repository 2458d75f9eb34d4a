//! Length-prefixed binary frames shared by every client/server interaction.
//!
//! ```text
//! frame := len:u32-BE ‖ kind:u8 ‖ payload[len]
//! ```
//!
//! `len` counts payload bytes only. A [`Channel`] moves one encoded request
//! frame to the serving party and returns its encoded reply.

use std::fmt;

/// Header bytes preceding every payload.
pub const FRAME_HEADER_LEN: usize = 5;

/// Frame kind bytes. `0x0_` are ORAM client requests, `0x8_` ORAM replies,
/// `0x2_` card/vendor spend, `0x3_` registration, `0x4_` running balance.
pub mod kind {
    pub const ORAM_FETCH_DB: u8 = 0x01;
    pub const ORAM_STORE_DB: u8 = 0x02;
    pub const ORAM_FETCH_TOP: u8 = 0x03;
    pub const ORAM_STORE_TOP: u8 = 0x04;
    pub const ORAM_FETCH_PATH: u8 = 0x05;
    pub const ORAM_STORE_PATH: u8 = 0x06;

    pub const ORAM_DB: u8 = 0x81;
    pub const ORAM_TOP: u8 = 0x82;
    pub const ORAM_PATH: u8 = 0x83;
    pub const ORAM_ACK: u8 = 0x84;
    pub const ORAM_ERROR: u8 = 0x8f;

    pub const SPEND_HELLO: u8 = 0x20;
    pub const SPEND_OFFER: u8 = 0x21;
    pub const SPEND_PROOF: u8 = 0x22;
    pub const SPEND_RESULT: u8 = 0x23;

    pub const REG_HELLO: u8 = 0x30;
    pub const REG_ID: u8 = 0x31;
    pub const REG_KEY_REQUEST: u8 = 0x32;
    pub const REG_KEY: u8 = 0x33;
    pub const REG_BUDGET_REQUEST: u8 = 0x34;
    pub const REG_BUDGET: u8 = 0x35;
    pub const REG_DONE: u8 = 0x36;
    pub const REG_ABORT: u8 = 0x37;
    pub const REG_ACK: u8 = 0x38;

    pub const RB_REQUEST: u8 = 0x40;
    pub const RB_RECORD: u8 = 0x41;
    pub const RB_UPDATE: u8 = 0x42;
    pub const RB_ACK: u8 = 0x43;

    pub fn is_oram_request(kind: u8) -> bool {
        (0x01..=0x0f).contains(&kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("frame shorter than its header")]
    Truncated,
    #[error("declared length {declared} does not match {actual} payload bytes")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("unexpected frame kind {0:#04x}")]
    UnexpectedKind(u8),
    #[error("malformed payload for frame kind {0:#04x}")]
    BadPayload(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChannelError {
    #[error("peer closed the channel")]
    Closed,
    #[error("channel authentication failed")]
    Tampered,
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(kind: u8, payload: Vec<u8>) -> Self {
        Self { kind, payload }
    }

    pub fn empty(kind: u8) -> Self {
        Self { kind, payload: Vec::new() }
    }

    pub fn encoded_len(&self) -> usize {
        FRAME_HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.push(self.kind);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < FRAME_HEADER_LEN {
            return Err(FrameError::Truncated);
        }
        let declared = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
        let actual = bytes.len() - FRAME_HEADER_LEN;
        if declared != actual {
            return Err(FrameError::LengthMismatch { declared, actual });
        }
        Ok(Self { kind: bytes[4], payload: bytes[FRAME_HEADER_LEN..].to_vec() })
    }

    /// Decodes and checks the kind in one step.
    pub fn decode_expecting(bytes: &[u8], kind: u8) -> Result<Self, FrameError> {
        let frame = Self::decode(bytes)?;
        if frame.kind != kind {
            return Err(FrameError::UnexpectedKind(frame.kind));
        }
        Ok(frame)
    }
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frame({:#04x}, {} bytes)", self.kind, self.payload.len())
    }
}

/// Request/response transport. The caller always speaks first.
pub trait Channel {
    fn exchange(&mut self, request: &[u8]) -> Result<Vec<u8>, ChannelError>;

    fn call(&mut self, request: &Frame) -> Result<Frame, ChannelError> {
        let reply = self.exchange(&request.encode())?;
        Ok(Frame::decode(&reply)?)
    }
}

impl<C: Channel + ?Sized> Channel for &mut C {
    fn exchange(&mut self, request: &[u8]) -> Result<Vec<u8>, ChannelError> {
        (**self).exchange(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToServer,
    ToClient,
}

/// Every frame seen on a channel, in order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub frames: Vec<(Direction, Vec<u8>)>,
}

impl Transcript {
    /// `(direction, kind, encoded length)` per frame; identical shapes mean an
    /// observer of sizes and kinds alone learns nothing.
    pub fn shape(&self) -> Vec<(Direction, u8, usize)> {
        self.frames.iter().map(|(d, bytes)| (*d, bytes.get(4).copied().unwrap_or(0), bytes.len())).collect()
    }

    pub fn total_bytes(&self) -> usize {
        self.frames.iter().map(|(_, b)| b.len()).sum()
    }

    pub fn bytes_in(&self, direction: Direction) -> usize {
        self.frames.iter().filter(|(d, _)| *d == direction).map(|(_, b)| b.len()).sum()
    }

    pub fn frames_of_kind(&self, kind: u8) -> impl Iterator<Item = &[u8]> {
        self.frames.iter().filter(move |(_, b)| b.get(4) == Some(&kind)).map(|(_, b)| b.as_slice())
    }
}

/// Wraps a channel and records the transcript.
pub struct Recorder<C> {
    inner: C,
    pub transcript: Transcript,
}

impl<C: Channel> Recorder<C> {
    pub fn new(inner: C) -> Self {
        Self { inner, transcript: Transcript::default() }
    }

    pub fn into_parts(self) -> (C, Transcript) {
        (self.inner, self.transcript)
    }
}

impl<C: Channel> Channel for Recorder<C> {
    fn exchange(&mut self, request: &[u8]) -> Result<Vec<u8>, ChannelError> {
        self.transcript.frames.push((Direction::ToServer, request.to_vec()));
        let reply = self.inner.exchange(request)?;
        self.transcript.frames.push((Direction::ToClient, reply.clone()));
        Ok(reply)
    }
}

/// An authenticated link with an untrusted party in the middle. The
/// `meddle` hook sees every frame and may rewrite it; a rewritten frame is
/// never delivered and the caller gets [`ChannelError::Tampered`].
pub struct AuthenticatedRelay<C, F> {
    inner: C,
    meddle: F,
    tampered: bool,
    pub transcript: Transcript,
}

impl<C, F> AuthenticatedRelay<C, F>
where
    C: Channel,
    F: FnMut(Direction, &mut Vec<u8>),
{
    pub fn new(inner: C, meddle: F) -> Self {
        Self { inner, meddle, tampered: false, transcript: Transcript::default() }
    }

    /// Whether any frame was rewritten in transit.
    pub fn tampered(&self) -> bool {
        self.tampered
    }

    pub fn into_parts(self) -> (C, Transcript) {
        (self.inner, self.transcript)
    }

    fn pass(&mut self, direction: Direction, frame: &[u8]) -> Result<(), ChannelError> {
        let mut seen = frame.to_vec();
        (self.meddle)(direction, &mut seen);
        let intact = seen == frame;
        self.transcript.frames.push((direction, seen));
        if intact {
            Ok(())
        } else {
            self.tampered = true;
            Err(ChannelError::Tampered)
        }
    }
}

impl<C, F> Channel for AuthenticatedRelay<C, F>
where
    C: Channel,
    F: FnMut(Direction, &mut Vec<u8>),
{
    fn exchange(&mut self, request: &[u8]) -> Result<Vec<u8>, ChannelError> {
        self.pass(Direction::ToServer, request)?;
        let reply = self.inner.exchange(request)?;
        self.pass(Direction::ToClient, &reply)?;
        Ok(reply)
    }
}

/// Big-endian cursor over a payload.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    kind: u8,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(frame: &'a Frame) -> Self {
        Self { bytes: &frame.payload, kind: frame.kind }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], FrameError> {
        if self.bytes.len() < n {
            return Err(FrameError::BadPayload(self.kind));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, FrameError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, FrameError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, FrameError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn rest(&mut self) -> &'a [u8] {
        std::mem::take(&mut self.bytes)
    }

    pub(crate) fn finish(&self) -> Result<(), FrameError> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(FrameError::BadPayload(self.kind))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_is_length_kind_payload() {
        let f = Frame::new(kind::SPEND_OFFER, vec![0, 30, 0, 0, 0, 7]);
        assert_eq!(f.encode(), vec![0, 0, 0, 6, 0x21, 0, 30, 0, 0, 0, 7]);
        assert_eq!(Frame::decode(&f.encode()).unwrap(), f);
    }

    #[test]
    fn malformed_frames_are_rejected() {
        assert_eq!(Frame::decode(&[0, 0, 0]), Err(FrameError::Truncated));
        assert_eq!(Frame::decode(&[0, 0, 0, 2, 1, 9]), Err(FrameError::LengthMismatch { declared: 2, actual: 1 }));
        let f = Frame::empty(kind::ORAM_ACK).encode();
        assert_eq!(Frame::decode_expecting(&f, kind::ORAM_DB), Err(FrameError::UnexpectedKind(0x84)));
    }
}
