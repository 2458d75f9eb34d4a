use p256::ecdsa::signature::{Signer, Verifier};
use p256::ecdsa::{SigningKey, VerifyingKey};
use rand::{CryptoRng, RngCore};

use super::CryptoError;

/// ECDSA P-256 signature, `r ‖ s` big-endian.
pub const SIGNATURE_LEN: usize = 64;
/// Compressed SEC1 point.
pub const VERIFICATION_KEY_LEN: usize = 33;
pub const SIGNING_SECRET_LEN: usize = 32;

#[derive(Clone)]
pub struct SigningSecret(SigningKey);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerificationKey(VerifyingKey);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; SIGNATURE_LEN]);

#[derive(Clone, Debug)]
pub struct SigningKeyPair {
    pub secret: SigningSecret,
    pub public: VerificationKey,
}

impl SigningKeyPair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let secret = SigningKey::random(rng);
        let public = *secret.verifying_key();
        Self { secret: SigningSecret(secret), public: VerificationKey(public) }
    }
}

impl SigningSecret {
    /// Deterministic (RFC 6979) ECDSA over SHA-256 of `message`.
    pub fn sign(&self, message: &[u8]) -> Result<Signature, CryptoError> {
        if message.is_empty() {
            return Err(CryptoError::EmptyMessage);
        }
        let sig: p256::ecdsa::Signature = self.0.sign(message);
        let mut out = [0u8; SIGNATURE_LEN];
        out.copy_from_slice(&sig.to_bytes());
        Ok(Signature(out))
    }

    pub fn verification_key(&self) -> VerificationKey {
        VerificationKey(*self.0.verifying_key())
    }

    pub fn to_bytes(&self) -> [u8; SIGNING_SECRET_LEN] {
        self.0.to_bytes().into()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        SigningKey::from_slice(bytes).map(Self).map_err(|_| CryptoError::InvalidKey)
    }
}

impl std::fmt::Debug for SigningSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SigningSecret(..)")
    }
}

impl VerificationKey {
    /// Accepts iff `signature` is a well-formed, valid signature on `message`.
    /// Malformed encodings (wrong length, zero scalars) reject.
    pub fn verify(&self, message: &[u8], signature: &[u8]) -> bool {
        match p256::ecdsa::Signature::from_slice(signature) {
            Ok(sig) => self.0.verify(message, &sig).is_ok(),
            Err(_) => false,
        }
    }

    pub fn to_bytes(&self) -> [u8; VERIFICATION_KEY_LEN] {
        let point = self.0.to_encoded_point(true);
        let mut out = [0u8; VERIFICATION_KEY_LEN];
        out.copy_from_slice(point.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        VerifyingKey::from_sec1_bytes(bytes).map(Self).map_err(|_| CryptoError::InvalidKey)
    }
}

impl Signature {
    pub fn as_bytes(&self) -> &[u8; SIGNATURE_LEN] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(7)
    }

    #[test]
    fn sign_then_verify_accepts() {
        let pair = SigningKeyPair::generate(&mut rng());
        let sig = pair.secret.sign(b"hello").unwrap();
        assert!(pair.public.verify(b"hello", sig.as_bytes()));
    }

    #[test]
    fn distinct_keys_and_cross_verification_rejects() {
        let mut rng = rng();
        let a = SigningKeyPair::generate(&mut rng);
        let b = SigningKeyPair::generate(&mut rng);
        assert_ne!(a.public.to_bytes(), b.public.to_bytes());
        let sig = a.secret.sign(b"msg").unwrap();
        assert!(!b.public.verify(b"msg", sig.as_bytes()));
    }

    #[test]
    fn mutated_message_rejects() {
        let pair = SigningKeyPair::generate(&mut rng());
        let msg = b"tau||epoch||com".to_vec();
        let sig = pair.secret.sign(&msg).unwrap();
        for bit in 0..msg.len() * 8 {
            let mut m = msg.clone();
            m[bit / 8] ^= 1 << (bit % 8);
            assert!(!pair.public.verify(&m, sig.as_bytes()), "bit {bit}");
        }
    }

    #[test]
    fn signing_twice_verifies_both() {
        let pair = SigningKeyPair::generate(&mut rng());
        let s1 = pair.secret.sign(b"m").unwrap();
        let s2 = pair.secret.sign(b"m").unwrap();
        assert!(pair.public.verify(b"m", s1.as_bytes()));
        assert!(pair.public.verify(b"m", s2.as_bytes()));
    }

    #[test]
    fn truncated_or_garbage_signature_rejects() {
        let pair = SigningKeyPair::generate(&mut rng());
        let sig = pair.secret.sign(b"m").unwrap();
        assert!(!pair.public.verify(b"m", &sig.as_bytes()[..63]));
        assert!(!pair.public.verify(b"m", &[0u8; 64]));
        assert!(!pair.public.verify(b"m", &[]));
    }

    #[test]
    fn empty_message_is_refused() {
        let pair = SigningKeyPair::generate(&mut rng());
        assert_eq!(pair.secret.sign(&[]), Err(CryptoError::EmptyMessage));
    }

    #[test]
    fn key_encodings_round_trip() {
        let pair = SigningKeyPair::generate(&mut rng());
        let secret = SigningSecret::from_bytes(&pair.secret.to_bytes()).unwrap();
        assert_eq!(secret.verification_key(), pair.public);
        let public = VerificationKey::from_bytes(&pair.public.to_bytes()).unwrap();
        assert_eq!(public, pair.public);
        assert!(VerificationKey::from_bytes(&[2u8; 10]).is_err());
    }
}
