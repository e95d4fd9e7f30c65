//! Key agreement schemes, selected by name.

use rand::RngCore;
use sha2::{Digest, Sha256};
use x25519_dalek::{PublicKey as XPublic, StaticSecret};

use crate::error::{Error, Result};
use crate::registry::Registry;

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey(pub Vec<u8>);

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SecretKey(<{} bytes>)", self.0.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PublicKey(pub Vec<u8>);

#[derive(Debug, Clone)]
pub struct KeyPair {
    pub secret: SecretKey,
    pub public: PublicKey,
}

/// 128-bit PRG seed shared by the two endpoints of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SharedSeed(pub [u8; 16]);

pub trait KeyAgreement: Send + Sync {
    fn name(&self) -> &'static str;

    /// Size of a serialized public key in bytes.
    fn public_key_len(&self) -> usize;

    fn generate(&self, client: usize, rng: &mut dyn RngCore) -> KeyPair;

    /// Must satisfy `agree(sk_a, pk_b) == agree(sk_b, pk_a)`.
    fn agree(&self, secret: &SecretKey, peer: &PublicKey) -> Result<SharedSeed>;
}

fn truncate_digest(hasher: Sha256) -> SharedSeed {
    let digest = hasher.finalize();
    let mut seed = [0u8; 16];
    seed.copy_from_slice(&digest[..16]);
    SharedSeed(seed)
}

/// INSECURE, for reproducible tests only: both "keys" are the client id and
/// a session salt, and the shared seed is a hash of the sorted id pair.
/// Anyone who knows the ids can compute every mask.
#[derive(Debug, Clone, Copy)]
pub struct TestKeyAgreement {
    salt: u64,
}

impl TestKeyAgreement {
    const TAG: u8 = b'T';
    const LEN: usize = 17;

    pub fn new(salt: u64) -> Self {
        Self { salt }
    }

    fn encode(&self, client: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::LEN);
        out.push(Self::TAG);
        out.extend_from_slice(&(client as u64).to_le_bytes());
        out.extend_from_slice(&self.salt.to_le_bytes());
        out
    }

    fn decode(bytes: &[u8]) -> Result<(u64, u64)> {
        if bytes.len() != Self::LEN || bytes[0] != Self::TAG {
            return Err(Error::protocol(format!("malformed test key ({} bytes)", bytes.len())));
        }
        let id = u64::from_le_bytes(bytes[1..9].try_into().unwrap());
        let salt = u64::from_le_bytes(bytes[9..17].try_into().unwrap());
        Ok((id, salt))
    }
}

impl KeyAgreement for TestKeyAgreement {
    fn name(&self) -> &'static str {
        "test"
    }

    fn public_key_len(&self) -> usize {
        Self::LEN
    }

    fn generate(&self, client: usize, _rng: &mut dyn RngCore) -> KeyPair {
        let bytes = self.encode(client);
        KeyPair { secret: SecretKey(bytes.clone()), public: PublicKey(bytes) }
    }

    fn agree(&self, secret: &SecretKey, peer: &PublicKey) -> Result<SharedSeed> {
        let (a, salt_a) = Self::decode(&secret.0)?;
        let (b, salt_b) = Self::decode(&peer.0)?;
        if salt_a != salt_b {
            return Err(Error::protocol("test keys come from different sessions"));
        }
        let mut h = Sha256::new();
        h.update(b"fedchi/test-ka");
        h.update(salt_a.to_le_bytes());
        h.update(a.min(b).to_le_bytes());
        h.update(a.max(b).to_le_bytes());
        Ok(truncate_digest(h))
    }
}

/// Elliptic-curve Diffie-Hellman over Curve25519; the shared point is hashed
/// down to a 128-bit seed.
#[derive(Debug, Clone, Copy, Default)]
pub struct X25519KeyAgreement;

impl KeyAgreement for X25519KeyAgreement {
    fn name(&self) -> &'static str {
        "x25519"
    }

    fn public_key_len(&self) -> usize {
        32
    }

    fn generate(&self, _client: usize, rng: &mut dyn RngCore) -> KeyPair {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        let secret = StaticSecret::from(bytes);
        let public = XPublic::from(&secret);
        KeyPair { secret: SecretKey(secret.to_bytes().to_vec()), public: PublicKey(public.as_bytes().to_vec()) }
    }

    fn agree(&self, secret: &SecretKey, peer: &PublicKey) -> Result<SharedSeed> {
        let sk: [u8; 32] = secret.0.as_slice().try_into().map_err(|_| Error::protocol("malformed x25519 secret key"))?;
        let pk: [u8; 32] = peer.0.as_slice().try_into().map_err(|_| Error::protocol("malformed x25519 public key"))?;
        let shared = StaticSecret::from(sk).diffie_hellman(&XPublic::from(pk));
        if !shared.was_contributory() {
            return Err(Error::protocol("x25519 peer key is a low-order point"));
        }
        let mut h = Sha256::new();
        h.update(b"fedchi/x25519");
        h.update(shared.as_bytes());
        Ok(truncate_digest(h))
    }
}

type KaFactory = dyn Fn(u64) -> Box<dyn KeyAgreement> + Send + Sync;

/// Registered schemes: `test` (salted by the session seed) and `x25519`.
pub fn key_agreements() -> Registry<KaFactory> {
    let mut reg: Registry<KaFactory> = Registry::new("key agreement");
    reg.register("test", Box::new(|salt| Box::new(TestKeyAgreement::new(salt)) as Box<dyn KeyAgreement>));
    reg.register("x25519", Box::new(|_| Box::new(X25519KeyAgreement) as Box<dyn KeyAgreement>));
    reg
}

pub fn key_agreement(name: &str, session_seed: u64) -> Result<Box<dyn KeyAgreement>> {
    Ok(key_agreements().get(name)?(session_seed))
}
