//! KZG commitments over BLS12-381: setup, commitments, single-point openings,
//! and random-linear-combination batch verification of independent openings.

use std::collections::HashMap;
use std::fmt;
use std::ops::AddAssign;
use std::sync::Mutex;

use ark_bls12_381::{Bls12_381, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::pairing::Pairing;
use ark_ec::{AffineRepr, CurveGroup, PrimeGroup, VariableBaseMSM};
use ark_ff::{One, Zero};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize, Compress, Validate};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::poly::{div_rem, evaluate, powers, scalar_to_bytes, vanishing_poly, Polynomial, Scalar};

pub const G1_BYTES: usize = 48;
pub const G2_BYTES: usize = 96;

/// Instrumented operation counts for one or more protocol calls.
///
/// Accounting rules:
/// - a multi-scalar multiplication over `n` bases counts `n` scalar
///   multiplications, including bases whose scalar happens to be zero or one;
/// - subtracting a point (`A - B`) counts one scalar multiplication by -1
///   in the group where it happens;
/// - each pairing evaluation counts one pairing; an equality check
///   `e(A, B) == e(C, D)` counts two, even though it is evaluated as one
///   product with a shared final exponentiation;
/// - each Lagrange interpolation pass counts one interpolation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct OpCounters {
    pub g1_scalar_mults: u64,
    pub g2_scalar_mults: u64,
    pub pairings: u64,
    pub interpolations: u64,
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.g1_scalar_mults += rhs.g1_scalar_mults;
        self.g2_scalar_mults += rhs.g2_scalar_mults;
        self.pairings += rhs.pairings;
        self.interpolations += rhs.interpolations;
    }
}

pub(crate) fn g1_to_bytes(p: &G1Affine) -> [u8; G1_BYTES] {
    let mut out = [0u8; G1_BYTES];
    p.serialize_compressed(&mut out[..]).expect("compressed G1 is 48 bytes");
    out
}

/// Decodes a compressed G1 point with on-curve and subgroup checks.
pub(crate) fn g1_from_bytes(bytes: &[u8; G1_BYTES], what: &'static str) -> Result<G1Affine> {
    G1Affine::deserialize_with_mode(&bytes[..], Compress::Yes, Validate::Yes)
        .map_err(|_| Error::MalformedEncoding { what })
}

pub(crate) fn g2_to_bytes(p: &G2Affine) -> [u8; G2_BYTES] {
    let mut out = [0u8; G2_BYTES];
    p.serialize_compressed(&mut out[..]).expect("compressed G2 is 96 bytes");
    out
}

pub(crate) fn g2_from_bytes(bytes: &[u8; G2_BYTES], what: &'static str) -> Result<G2Affine> {
    G2Affine::deserialize_with_mode(&bytes[..], Compress::Yes, Validate::Yes)
        .map_err(|_| Error::MalformedEncoding { what })
}

macro_rules! g1_newtype {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        pub struct $name(pub G1Affine);

        impl $name {
            pub fn identity() -> Self {
                Self(G1Affine::zero())
            }

            pub fn to_bytes(&self) -> [u8; G1_BYTES] {
                g1_to_bytes(&self.0)
            }

            pub fn from_bytes(bytes: &[u8; G1_BYTES]) -> Result<Self> {
                g1_from_bytes(bytes, $what).map(Self)
            }

            pub fn point(&self) -> G1Affine {
                self.0
            }
        }
    };
}

g1_newtype!(
    /// Commitment to a polynomial: `[p(x)]_1`.
    Commitment,
    "commitment"
);
g1_newtype!(
    /// Single-point KZG witness `[(p(X) - p(z)) / (X - z)]_1`.
    OpeningProof,
    "opening proof"
);

/// Structured reference string: `[x^i]_1` and `[x^i]_2` for `i = 0..=d`.
pub struct Srs {
    g1_powers: Vec<G1Affine>,
    g2_powers: Vec<G2Affine>,
    id: [u8; 32],
    // [Z_T(x)]_2 keyed by micro-domain digest
    z_cache: Mutex<HashMap<[u8; 32], G2Affine>>,
}

impl fmt::Debug for Srs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Srs")
            .field("degree", &self.degree())
            .field("id", &hex_short(&self.id))
            .finish_non_exhaustive()
    }
}

fn hex_short(bytes: &[u8]) -> String {
    bytes.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl Clone for Srs {
    fn clone(&self) -> Self {
        Self {
            g1_powers: self.g1_powers.clone(),
            g2_powers: self.g2_powers.clone(),
            id: self.id,
            z_cache: Mutex::new(self.z_cache.lock().unwrap().clone()),
        }
    }
}

impl PartialEq for Srs {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Srs {
    /// Known-secret setup. The secret is used and dropped; nothing derived
    /// from it besides the powers is kept.
    pub fn gen(degree: usize, secret: Scalar) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidDegreeBound(0));
        }
        if secret.is_zero() {
            return Err(Error::ZeroSecret);
        }
        let exps = powers(&secret, degree + 1);
        let g1 = G1Projective::generator();
        let g2 = G2Projective::generator();
        let g1_powers = G1Projective::normalize_batch(&exps.iter().map(|e| g1 * e).collect::<Vec<_>>());
        let g2_powers = G2Projective::normalize_batch(&exps.iter().map(|e| g2 * e).collect::<Vec<_>>());
        Self::from_powers(g1_powers, g2_powers)
    }

    pub fn from_powers(g1_powers: Vec<G1Affine>, g2_powers: Vec<G2Affine>) -> Result<Self> {
        if g1_powers.len() < 2 || g1_powers.len() != g2_powers.len() {
            return Err(Error::InvalidDegreeBound(g1_powers.len().saturating_sub(1)));
        }
        if g1_powers[0] != G1Affine::generator() || g2_powers[0] != G2Affine::generator() {
            return Err(Error::MalformedEncoding { what: "srs generators" });
        }
        let mut hasher = Sha256::new();
        for p in &g1_powers {
            hasher.update(g1_to_bytes(p));
        }
        for p in &g2_powers {
            hasher.update(g2_to_bytes(p));
        }
        Ok(Self {
            g1_powers,
            g2_powers,
            id: hasher.finalize().into(),
            z_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn degree(&self) -> usize {
        self.g1_powers.len() - 1
    }

    pub fn id(&self) -> &[u8; 32] {
        &self.id
    }

    pub fn g1_powers(&self) -> &[G1Affine] {
        &self.g1_powers
    }

    pub fn g2_powers(&self) -> &[G2Affine] {
        &self.g2_powers
    }

    fn check_degree(&self, p: &Polynomial) -> Result<()> {
        match p.degree() {
            Some(d) if d > self.degree() => Err(Error::DegreeOverflow {
                degree: d,
                bound: self.degree(),
            }),
            _ => Ok(()),
        }
    }

    /// `sum_i coeffs[i] * [x^i]_1` over a window of exactly `window` bases.
    pub(crate) fn msm_g1(&self, coeffs: &[Scalar], window: usize, ops: &mut OpCounters) -> Result<G1Projective> {
        if window > self.g1_powers.len() || coeffs.len() > window {
            return Err(Error::DegreeOverflow {
                degree: coeffs.len().max(window).saturating_sub(1),
                bound: self.degree(),
            });
        }
        let mut scalars = coeffs.to_vec();
        scalars.resize(window, Scalar::zero());
        ops.g1_scalar_mults += window as u64;
        Ok(G1Projective::msm_unchecked(&self.g1_powers[..window], &scalars))
    }

    /// `[Z_T(x)]_2` for a point set, served from the cache when warm.
    pub fn vanishing_commitment_g2(&self, points: &[Scalar], ops: &mut OpCounters) -> Result<G2Affine> {
        if points.len() > self.degree() {
            return Err(Error::DegreeOverflow {
                degree: points.len(),
                bound: self.degree(),
            });
        }
        let key = domain_digest(points);
        if let Some(hit) = self.z_cache.lock().unwrap().get(&key) {
            return Ok(*hit);
        }
        let z = vanishing_poly(points)?;
        let n = z.coeffs().len();
        ops.g2_scalar_mults += n as u64;
        let point = G2Projective::msm_unchecked(&self.g2_powers[..n], z.coeffs()).into_affine();
        // last writer wins; every writer computes the same value
        self.z_cache.lock().unwrap().insert(key, point);
        Ok(point)
    }

    pub fn clear_cache(&self) {
        self.z_cache.lock().unwrap().clear();
    }
}

pub(crate) fn domain_digest(points: &[Scalar]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update((points.len() as u32).to_be_bytes());
    for p in points {
        hasher.update(scalar_to_bytes(p));
    }
    hasher.finalize().into()
}

pub fn commit(srs: &Srs, p: &Polynomial) -> Result<Commitment> {
    commit_with(srs, p, &mut OpCounters::default())
}

pub fn commit_with(srs: &Srs, p: &Polynomial, ops: &mut OpCounters) -> Result<Commitment> {
    srs.check_degree(p)?;
    let point = srs.msm_g1(p.coeffs(), p.coeffs().len(), ops)?;
    Ok(Commitment(point.into_affine()))
}

pub fn open_single(srs: &Srs, p: &Polynomial, z: &Scalar) -> Result<(Scalar, OpeningProof)> {
    open_single_with(srs, p, z, &mut OpCounters::default())
}

pub fn open_single_with(srs: &Srs, p: &Polynomial, z: &Scalar, ops: &mut OpCounters) -> Result<(Scalar, OpeningProof)> {
    srs.check_degree(p)?;
    let value = evaluate(p, z);
    // the remainder of p / (X - z) is exactly p(z)
    let divisor = Polynomial::new(vec![-*z, Scalar::one()]);
    let (q, _) = div_rem(p, &divisor)?;
    let w = srs.msm_g1(q.coeffs(), q.coeffs().len(), ops)?;
    Ok((value, OpeningProof(w.into_affine())))
}

/// Checks `e(cm - [v]_1, g2) == e(proof, [x - z]_2)`.
pub fn verify_single(srs: &Srs, cm: &Commitment, z: &Scalar, value: &Scalar, proof: &OpeningProof) -> bool {
    verify_single_with(srs, cm, z, value, proof, &mut OpCounters::default())
}

pub fn verify_single_with(
    srs: &Srs,
    cm: &Commitment,
    z: &Scalar,
    value: &Scalar,
    proof: &OpeningProof,
    ops: &mut OpCounters,
) -> bool {
    let g1 = srs.g1_powers[0];
    let g2 = srs.g2_powers[0];
    let lhs = cm.0.into_group() - g1 * value;
    let shifted = srs.g2_powers[1].into_group() - g2 * z;
    ops.g1_scalar_mults += 2;
    ops.g2_scalar_mults += 2;
    ops.pairings += 2;
    pairings_equal(lhs, g2, proof.0, shifted)
}

/// `e(a, b) == e(c, d)`, checked as `e(a, b) * e(-c, d) == 1`.
pub(crate) fn pairings_equal(
    a: impl Into<G1Affine>,
    b: impl Into<G2Affine>,
    c: impl Into<G1Affine>,
    d: impl Into<G2Affine>,
) -> bool {
    let c: G1Affine = c.into();
    Bls12_381::multi_pairing([a.into(), -c], [b.into(), d.into()]).is_zero()
}

/// One independent single-point opening.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SingleOpening {
    pub commitment: Commitment,
    pub point: Scalar,
    pub value: Scalar,
    pub proof: OpeningProof,
}

/// Batch check of independent openings with combiner `rho`:
///
/// `e(sum rho^i (c_i - [v_i]_1 + z_i * pi_i), g2) == e(sum rho^i pi_i, [x]_2)`,
/// which follows from each `e(c_i - [v_i]_1, g2) == e(pi_i, [x - z_i]_2)`.
pub fn verify_batch_independent(srs: &Srs, openings: &[SingleOpening], rho: &Scalar) -> Result<bool> {
    verify_batch_independent_with(srs, openings, rho, &mut OpCounters::default())
}

pub fn verify_batch_independent_with(
    srs: &Srs,
    openings: &[SingleOpening],
    rho: &Scalar,
    ops: &mut OpCounters,
) -> Result<bool> {
    if openings.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = openings.len();
    let weights = powers(rho, n);

    let mut bases = Vec::with_capacity(2 * n + 1);
    let mut scalars = Vec::with_capacity(2 * n + 1);
    let mut value_sum = Scalar::zero();
    for (o, w) in openings.iter().zip(&weights) {
        bases.push(o.commitment.0);
        scalars.push(*w);
        bases.push(o.proof.0);
        scalars.push(*w * o.point);
        value_sum += *w * o.value;
    }
    bases.push(srs.g1_powers[0]);
    scalars.push(-value_sum);
    let lhs = G1Projective::msm_unchecked(&bases, &scalars);

    let proofs: Vec<G1Affine> = openings.iter().map(|o| o.proof.0).collect();
    let rhs = G1Projective::msm_unchecked(&proofs, &weights);

    ops.g1_scalar_mults += (3 * n + 1) as u64;
    ops.pairings += 2;
    Ok(pairings_equal(lhs, srs.g2_powers[0], rhs, srs.g2_powers[1]))
}

/// `[s]_1`.
pub fn g1_mul(s: &Scalar) -> G1Affine {
    (G1Projective::generator() * s).into_affine()
}

/// `[s]_2`.
pub fn g2_mul(s: &Scalar) -> G2Affine {
    (G2Projective::generator() * s).into_affine()
}
