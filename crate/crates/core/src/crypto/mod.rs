//! Cryptographic building blocks: signatures, Pedersen commitments, a PRF
//! and encrypt-then-MAC authenticated encryption.
//!
//! Byte encodings produced here are the exact bytes fed to signing and stored
//! in files; see `book/src/encodings.md` for the layout.

mod ae;
mod commitment;
mod prf;
mod signature;

pub use ae::{sealed_len, AeKey, AE_BLOCK_LEN, AE_IV_LEN, AE_OVERHEAD, AE_TAG_LEN};
pub use commitment::{combine, Commitment, CommitmentParams, Opening, COMMITMENT_LEN, OPENING_LEN, PEDERSEN_H_SEED};
pub use prf::{PrfKey, Tag, PRF_KEY_LEN, TAG_LEN};
pub use signature::{Signature, SigningKeyPair, SigningSecret, VerificationKey, SIGNATURE_LEN, SIGNING_SECRET_LEN, VERIFICATION_KEY_LEN};

/// Errors raised by the primitives. Verification failures are not errors;
/// they surface as `false` or as [`CryptoError::AuthenticationFailed`] from
/// authenticated decryption.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("scalar encoding is not a canonical value below the group order")]
    ScalarOutOfRange,
    #[error("bytes do not encode a point of the group")]
    InvalidPoint,
    #[error("malformed key encoding")]
    InvalidKey,
    #[error("cannot sign an empty message")]
    EmptyMessage,
    #[error("cannot combine an empty list of commitments")]
    EmptyCombination,
    #[error("ciphertext failed authentication")]
    AuthenticationFailed,
}
