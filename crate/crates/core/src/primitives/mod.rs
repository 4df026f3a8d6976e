//! Cryptographic substrate shared by every role: bit strings, SHA-1, nonces,
//! the simulated PUF and the code-offset fuzzy extractor.

mod bits;
mod fuzzy;
mod hash;
mod puf;
mod random;

pub(crate) use bits::hex160;
pub use bits::{concat, BitString, HexError};
pub use fuzzy::{
    fe_decode, fe_gen, fe_gen_with_seed, fe_rep, FuzzyError, FuzzyExtractorParams, HelperData,
};
pub use hash::{hash, hash_parts, Digest, HashRecord, DIGEST_BITS};
pub use puf::{puf_eval, PufDevice, CHALLENGE_BITS, PUF_SEED_BITS};
pub use random::{random_bits, random_nonce, rng_from_seed, Nonce, SimRng, NONCE_BITS};

/// Identities, passwords and the gateway secret share the digest width.
pub const FIELD_BITS: usize = 160;
