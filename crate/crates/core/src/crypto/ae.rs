//! Encrypt-then-MAC: AES-128-CBC with PKCS#7 padding, then AES-128-CMAC.
//!
//! Ciphertext layout: `IV (16) ‖ CBC body ‖ tag (16)`. The tag covers
//! `len(ad) as u32 BE ‖ ad ‖ IV ‖ body`, so associated data binds a
//! ciphertext to its location without being transmitted.

use aes::Aes128;
use cbc::cipher::block_padding::Pkcs7;
use cbc::cipher::{BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use cmac::{Cmac, Mac};
use rand::{CryptoRng, RngCore};

use super::CryptoError;

pub const AE_BLOCK_LEN: usize = 16;
pub const AE_IV_LEN: usize = 16;
pub const AE_TAG_LEN: usize = 16;
/// Fixed overhead excluding padding.
pub const AE_OVERHEAD: usize = AE_IV_LEN + AE_TAG_LEN;

type CbcEnc = cbc::Encryptor<Aes128>;
type CbcDec = cbc::Decryptor<Aes128>;

/// Ciphertext length for a plaintext of `plaintext_len` bytes. PKCS#7 always
/// adds between 1 and 16 bytes.
pub const fn sealed_len(plaintext_len: usize) -> usize {
    AE_IV_LEN + (plaintext_len / AE_BLOCK_LEN + 1) * AE_BLOCK_LEN + AE_TAG_LEN
}

/// Two independent 128-bit subkeys.
#[derive(Clone, PartialEq, Eq)]
pub struct AeKey {
    enc: [u8; 16],
    mac: [u8; 16],
}

impl AeKey {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut enc = [0u8; 16];
        let mut mac = [0u8; 16];
        rng.fill_bytes(&mut enc);
        rng.fill_bytes(&mut mac);
        Self { enc, mac }
    }

    /// `enc ‖ mac`.
    pub fn to_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        out[..16].copy_from_slice(&self.enc);
        out[16..].copy_from_slice(&self.mac);
        out
    }

    pub fn from_bytes(bytes: &[u8; 32]) -> Self {
        let mut enc = [0u8; 16];
        let mut mac = [0u8; 16];
        enc.copy_from_slice(&bytes[..16]);
        mac.copy_from_slice(&bytes[16..]);
        Self { enc, mac }
    }

    pub fn seal<R: RngCore + CryptoRng>(&self, ad: &[u8], plaintext: &[u8], rng: &mut R) -> Vec<u8> {
        let mut iv = [0u8; AE_IV_LEN];
        rng.fill_bytes(&mut iv);
        let body = CbcEnc::new(&self.enc.into(), &iv.into()).encrypt_padded_vec_mut::<Pkcs7>(plaintext);
        let mut out = Vec::with_capacity(sealed_len(plaintext.len()));
        out.extend_from_slice(&iv);
        out.extend_from_slice(&body);
        let tag = self.mac_over(ad, &out);
        out.extend_from_slice(&tag);
        out
    }

    pub fn open(&self, ad: &[u8], ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
        let min = AE_IV_LEN + AE_BLOCK_LEN + AE_TAG_LEN;
        if ciphertext.len() < min || !(ciphertext.len() - AE_OVERHEAD).is_multiple_of(AE_BLOCK_LEN) {
            return Err(CryptoError::AuthenticationFailed);
        }
        let (authenticated, tag) = ciphertext.split_at(ciphertext.len() - AE_TAG_LEN);
        let mut mac = self.cmac();
        feed_mac(&mut mac, ad, authenticated);
        mac.verify_slice(tag).map_err(|_| CryptoError::AuthenticationFailed)?;
        let (iv, body) = authenticated.split_at(AE_IV_LEN);
        let iv: [u8; AE_IV_LEN] = iv.try_into().expect("split at IV length");
        CbcDec::new(&self.enc.into(), &iv.into()).decrypt_padded_vec_mut::<Pkcs7>(body).map_err(|_| CryptoError::AuthenticationFailed)
    }

    fn cmac(&self) -> Cmac<Aes128> {
        <Cmac<Aes128> as Mac>::new_from_slice(&self.mac).expect("128-bit CMAC key")
    }

    fn mac_over(&self, ad: &[u8], iv_and_body: &[u8]) -> [u8; AE_TAG_LEN] {
        let mut mac = self.cmac();
        feed_mac(&mut mac, ad, iv_and_body);
        mac.finalize().into_bytes().into()
    }
}

fn feed_mac(mac: &mut Cmac<Aes128>, ad: &[u8], iv_and_body: &[u8]) {
    mac.update(&(ad.len() as u32).to_be_bytes());
    mac.update(ad);
    mac.update(iv_and_body);
}

impl std::fmt::Debug for AeKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AeKey(..)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn round_trip_and_fresh_iv() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let key = AeKey::generate(&mut rng);
        let pt = b"balance and counter".to_vec();
        let c1 = key.seal(b"", &pt, &mut rng);
        let c2 = key.seal(b"", &pt, &mut rng);
        assert_ne!(c1, c2);
        assert_eq!(key.open(b"", &c1).unwrap(), pt);
        assert_eq!(key.open(b"", &c2).unwrap(), pt);
    }

    #[test]
    fn length_is_padded_plaintext_plus_constant_overhead() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let key = AeKey::generate(&mut rng);
        for len in 0..70 {
            let ct = key.seal(b"ad", &vec![0xa5; len], &mut rng);
            let padded = (len / 16 + 1) * 16;
            assert_eq!(ct.len(), padded + AE_OVERHEAD);
            assert_eq!(ct.len(), sealed_len(len));
        }
    }

    #[test]
    fn every_single_bit_flip_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let key = AeKey::generate(&mut rng);
        let ct = key.seal(b"where", &[7u8; 40], &mut rng);
        for bit in 0..ct.len() * 8 {
            let mut bad = ct.clone();
            bad[bit / 8] ^= 1 << (bit % 8);
            assert_eq!(key.open(b"where", &bad), Err(CryptoError::AuthenticationFailed), "bit {bit}");
        }
    }

    #[test]
    fn associated_data_is_bound() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let key = AeKey::generate(&mut rng);
        let ct = key.seal(b"bucket-1", b"x", &mut rng);
        assert!(key.open(b"bucket-2", &ct).is_err());
        assert!(key.open(b"", &ct).is_err());
        let other = AeKey::generate(&mut rng);
        assert!(other.open(b"bucket-1", &ct).is_err());
    }

    #[test]
    fn short_or_misaligned_input_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let key = AeKey::generate(&mut rng);
        let ct = key.seal(b"", b"abc", &mut rng);
        assert!(key.open(b"", &ct[..ct.len() - 1]).is_err());
        assert!(key.open(b"", &ct[..20]).is_err());
        assert!(key.open(b"", &[]).is_err());
    }

    #[test]
    fn key_bytes_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let key = AeKey::generate(&mut rng);
        assert!(AeKey::from_bytes(&key.to_bytes()) == key);
    }
}
