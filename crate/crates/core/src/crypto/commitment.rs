//! Pedersen commitments `g^m · h^r` over P-256.
//!
//! `g` is the standard base point. `h` is obtained by hashing
//! [`PEDERSEN_H_SEED`] to the curve (SSWU, random-oracle variant), so nobody
//! knows `log_g(h)`.

use std::ops::Add;
use std::sync::OnceLock;

use p256::elliptic_curve::group::Group;
use p256::elliptic_curve::hash2curve::{ExpandMsgXmd, GroupDigest};
use p256::elliptic_curve::ops::Reduce;
use p256::elliptic_curve::sec1::{FromEncodedPoint, ToEncodedPoint};
use p256::elliptic_curve::{Field, PrimeField};
use p256::{AffinePoint, EncodedPoint, NistP256, ProjectivePoint, Scalar, U256};
use rand::{CryptoRng, RngCore};
use sha2::Sha256;

use super::CryptoError;

pub const PEDERSEN_H_SEED: &[u8] = b"aidwallet-pedersen-h";
const HASH_TO_CURVE_DST: &[u8] = b"aidwallet-v1-P256_XMD:SHA-256_SSWU_RO_";

/// Compressed SEC1 point; the identity is encoded as 33 zero bytes.
pub const COMMITMENT_LEN: usize = 33;
/// Big-endian scalar.
pub const OPENING_LEN: usize = 32;

/// Public parameters `(G, q, g, h)`. The group and its order are fixed by
/// the type; only the generators are carried.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommitmentParams {
    g: ProjectivePoint,
    h: ProjectivePoint,
}

impl CommitmentParams {
    pub fn standard() -> Self {
        static STANDARD: OnceLock<CommitmentParams> = OnceLock::new();
        *STANDARD.get_or_init(|| {
            let h = NistP256::hash_from_bytes::<ExpandMsgXmd<Sha256>>(&[PEDERSEN_H_SEED], &[HASH_TO_CURVE_DST])
                .expect("hash-to-curve with a fixed short DST cannot fail");
            Self { g: ProjectivePoint::GENERATOR, h }
        })
    }

    pub fn g(&self) -> Commitment {
        Commitment(self.g)
    }

    pub fn h(&self) -> Commitment {
        Commitment(self.h)
    }

    /// Group order `q` as big-endian bytes.
    pub fn order_be_bytes() -> [u8; 32] {
        let mut out = [0u8; 32];
        out.copy_from_slice(&hex::decode(Scalar::MODULUS.trim_start_matches("0x")).unwrap());
        out
    }

    pub fn commit(&self, message: u64, opening: &Opening) -> Commitment {
        let (g, h) = tables();
        Commitment(g.mul(&Scalar::from(message)) + h.mul(&opening.0))
    }

    pub fn opens_to(&self, commitment: &Commitment, message: u64, opening: &Opening) -> bool {
        self.commit(message, opening) == *commitment
    }
}

/// Multiples `j · 16^i · P` for every 4-bit window `i` of a scalar.
struct FixedBase(Vec<[ProjectivePoint; 16]>);

impl FixedBase {
    fn new(base: ProjectivePoint) -> Self {
        let mut windows = Vec::with_capacity(64);
        let mut step = base;
        for _ in 0..64 {
            let mut row = [ProjectivePoint::IDENTITY; 16];
            for j in 1..16 {
                row[j] = row[j - 1] + step;
            }
            step = row[15] + step;
            windows.push(row);
        }
        Self(windows)
    }

    fn mul(&self, scalar: &Scalar) -> ProjectivePoint {
        let bytes = scalar.to_bytes();
        let mut acc = ProjectivePoint::IDENTITY;
        for (i, byte) in bytes.iter().rev().enumerate() {
            if *byte != 0 {
                acc += self.0[2 * i][usize::from(byte & 0x0f)] + self.0[2 * i + 1][usize::from(byte >> 4)];
            }
        }
        acc
    }
}

fn tables() -> &'static (FixedBase, FixedBase) {
    static TABLES: OnceLock<(FixedBase, FixedBase)> = OnceLock::new();
    TABLES.get_or_init(|| {
        let params = CommitmentParams::standard();
        (FixedBase::new(params.g), FixedBase::new(params.h))
    })
}

impl Default for CommitmentParams {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Commitment(ProjectivePoint);

impl Commitment {
    pub fn identity() -> Self {
        Commitment(ProjectivePoint::IDENTITY)
    }

    pub fn is_identity(&self) -> bool {
        bool::from(self.0.is_identity())
    }

    pub fn to_bytes(&self) -> [u8; COMMITMENT_LEN] {
        let mut out = [0u8; COMMITMENT_LEN];
        if !self.is_identity() {
            out.copy_from_slice(self.0.to_affine().to_encoded_point(true).as_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != COMMITMENT_LEN {
            return Err(CryptoError::InvalidPoint);
        }
        if bytes.iter().all(|&b| b == 0) {
            return Ok(Self::identity());
        }
        if bytes[0] != 0x02 && bytes[0] != 0x03 {
            return Err(CryptoError::InvalidPoint);
        }
        let encoded = EncodedPoint::from_bytes(bytes).map_err(|_| CryptoError::InvalidPoint)?;
        Option::<AffinePoint>::from(AffinePoint::from_encoded_point(&encoded))
            .map(|p| Commitment(p.into()))
            .ok_or(CryptoError::InvalidPoint)
    }
}

impl Add for Commitment {
    type Output = Commitment;

    fn add(self, rhs: Commitment) -> Commitment {
        Commitment(self.0 + rhs.0)
    }
}

/// Group product of all commitments.
pub fn combine(commitments: &[Commitment]) -> Result<Commitment, CryptoError> {
    commitments.iter().copied().reduce(|a, b| a + b).ok_or(CryptoError::EmptyCombination)
}

/// Commitment randomness, a scalar in `[0, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Opening(Scalar);

impl Opening {
    pub fn zero() -> Self {
        Opening(Scalar::ZERO)
    }

    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Opening(Scalar::random(rng))
    }

    pub fn from_u64(value: u64) -> Self {
        Opening(Scalar::from(value))
    }

    /// Rejects non-canonical encodings (values `≥ q`).
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; OPENING_LEN] = bytes.try_into().map_err(|_| CryptoError::ScalarOutOfRange)?;
        Option::<Scalar>::from(Scalar::from_repr(arr.into())).map(Opening).ok_or(CryptoError::ScalarOutOfRange)
    }

    /// Reduces an arbitrary 256-bit big-endian value mod `q`.
    pub fn from_bytes_reduced(bytes: &[u8; OPENING_LEN]) -> Self {
        Opening(<Scalar as Reduce<U256>>::reduce_bytes(&(*bytes).into()))
    }

    pub fn to_bytes(&self) -> [u8; OPENING_LEN] {
        self.0.to_repr().into()
    }
}

impl Add for Opening {
    type Output = Opening;

    fn add(self, rhs: Opening) -> Opening {
        Opening(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Opening {
    fn sum<I: Iterator<Item = Opening>>(iter: I) -> Opening {
        iter.fold(Opening::zero(), |a, b| a + b)
    }
}
