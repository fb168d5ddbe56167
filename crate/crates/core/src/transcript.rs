//! Fiat-Shamir challenge derivation for aggregated and batched proofs.
//!
//! Serialization is fixed-width and length-prefixed (all counts are 32-bit
//! big-endian) so distinct transcripts never share an encoding:
//!
//! ```text
//! "PMP-DAS-v1" | srs_id[32]
//!   | u32 k | k x commitment[48]          (ascending row order)
//!   | u32 g | g x scalar[32]              (micro-domain points)
//!   | u32 n | n x (row u32 | col u32)     (covered coordinates)
//!   | GCellBlock[16]
//! ```
//!
//! The digest is SHA-512, reduced from 64 bytes into the scalar field.

use ark_ff::{PrimeField, Zero};
use sha2::{Digest, Sha512};

use crate::kzg::{Commitment, SingleOpening};
use crate::poly::{scalar_to_bytes, MicroDomain, Scalar};
use crate::wire::GCellBlock;

pub const DOMAIN_TAG: &[u8] = b"PMP-DAS-v1";
pub const BATCH_DOMAIN_TAG: &[u8] = b"PMP-DAS-v1/batch";

/// A verifier challenge. Outside of tests it can only be obtained by
/// hashing a transcript.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Challenge(Scalar);

impl Challenge {
    pub fn scalar(&self) -> Scalar {
        self.0
    }

    /// Wraps an arbitrary scalar. Test-only: production verifiers must
    /// derive challenges from transcripts.
    #[cfg(any(test, feature = "test-utils"))]
    pub fn from_scalar(s: Scalar) -> Self {
        Self(s)
    }
}

/// Everything the aggregated challenge is bound to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub srs_id: [u8; 32],
    pub commitments: Vec<Commitment>,
    pub micro_domain: Vec<Scalar>,
    pub coords: Vec<(u32, u32)>,
    pub block: GCellBlock,
}

impl Transcript {
    /// Transcript for a grouped object; coordinates are the block's cells in
    /// row-major order.
    pub fn for_block(srs_id: &[u8; 32], commitments: &[Commitment], md: &MicroDomain, block: GCellBlock) -> Self {
        Self {
            srs_id: *srs_id,
            commitments: commitments.to_vec(),
            micro_domain: md.points().to_vec(),
            coords: block.coords(),
            block,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            DOMAIN_TAG.len()
                + 32
                + 12
                + 48 * self.commitments.len()
                + 32 * self.micro_domain.len()
                + 8 * self.coords.len()
                + 16,
        );
        out.extend_from_slice(DOMAIN_TAG);
        out.extend_from_slice(&self.srs_id);
        out.extend_from_slice(&(self.commitments.len() as u32).to_be_bytes());
        for c in &self.commitments {
            out.extend_from_slice(&c.to_bytes());
        }
        out.extend_from_slice(&(self.micro_domain.len() as u32).to_be_bytes());
        for z in &self.micro_domain {
            out.extend_from_slice(&scalar_to_bytes(z));
        }
        out.extend_from_slice(&(self.coords.len() as u32).to_be_bytes());
        for (r, c) in &self.coords {
            out.extend_from_slice(&r.to_be_bytes());
            out.extend_from_slice(&c.to_be_bytes());
        }
        out.extend_from_slice(&self.block.to_bytes());
        out
    }
}

pub fn derive_gamma(t: &Transcript) -> Challenge {
    Challenge(hash_to_nonzero_scalar(&t.to_bytes()))
}

/// Combiner for batch verification of independent openings, bound to the
/// SRS and the full opening list.
pub fn derive_batch_rho(srs_id: &[u8; 32], openings: &[SingleOpening]) -> Challenge {
    let mut bytes = Vec::with_capacity(BATCH_DOMAIN_TAG.len() + 36 + openings.len() * 160);
    bytes.extend_from_slice(BATCH_DOMAIN_TAG);
    bytes.extend_from_slice(srs_id);
    bytes.extend_from_slice(&(openings.len() as u32).to_be_bytes());
    for o in openings {
        bytes.extend_from_slice(&o.commitment.to_bytes());
        bytes.extend_from_slice(&scalar_to_bytes(&o.point));
        bytes.extend_from_slice(&scalar_to_bytes(&o.value));
        bytes.extend_from_slice(&o.proof.to_bytes());
    }
    Challenge(hash_to_nonzero_scalar(&bytes))
}

fn hash_to_nonzero_scalar(bytes: &[u8]) -> Scalar {
    let first = Scalar::from_le_bytes_mod_order(&Sha512::digest(bytes));
    if !first.is_zero() {
        return first;
    }
    (0u32..)
        .map(|ctr| {
            let mut h = Sha512::new();
            h.update(bytes);
            h.update(ctr.to_be_bytes());
            Scalar::from_le_bytes_mod_order(&h.finalize())
        })
        .find(|s| !s.is_zero())
        .expect("a nonzero digest appears")
}
