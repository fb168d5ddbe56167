//! Shared-point multiproofs: `k` polynomials opened on one micro-domain `T`
//! with a single G1 witness.
//!
//! The prover commits to
//!
//! ```text
//! h(X) = sum_i gamma^(i-1) (f_i(X) - r_i(X)) / Z_T(X)
//! ```
//!
//! where `r_i` interpolates `f_i` on `T`. Because every `r_i` has degree
//! below `|T| = deg Z_T`, `h` is exactly the quotient of the combined
//! polynomial `sum_i gamma^(i-1) f_i` by `Z_T`, so opening never
//! interpolates. The verifier checks
//!
//! ```text
//! e(C - R, g2) == e(proof, [Z_T(x)]_2)
//! C = sum_i gamma^(i-1) c_i,    R = [sum_i gamma^(i-1) r_i(x)]_1
//! ```
//!
//! with one interpolation of the gamma-combined value vector (interpolation
//! is linear, so this equals the combination of the `r_i`).

use ark_bls12_381::G1Projective;
use ark_ec::{CurveGroup, VariableBaseMSM};

use crate::error::{Error, Result};
use crate::kzg::{Commitment, OpCounters, Srs, G1_BYTES};
use crate::poly::{div_rem, interpolate, linear_combination, powers, vanishing_poly, MicroDomain, Polynomial, Scalar};
use crate::transcript::Challenge;

/// Commitment to the aggregated quotient `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AggregatedProof(pub ark_bls12_381::G1Affine);

impl AggregatedProof {
    pub fn to_bytes(&self) -> [u8; G1_BYTES] {
        crate::kzg::g1_to_bytes(&self.0)
    }

    pub fn from_bytes(bytes: &[u8; G1_BYTES]) -> Result<Self> {
        crate::kzg::g1_from_bytes(bytes, "aggregated proof").map(Self)
    }
}

/// Commitments plus their full evaluation vectors on one micro-domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpenedGroup {
    commitments: Vec<Commitment>,
    values: Vec<Vec<Scalar>>,
    micro_domain: MicroDomain,
}

impl OpenedGroup {
    pub fn new(commitments: Vec<Commitment>, values: Vec<Vec<Scalar>>, micro_domain: MicroDomain) -> Result<Self> {
        if commitments.is_empty() {
            return Err(Error::Shape("group has no commitments".into()));
        }
        if values.len() != commitments.len() {
            return Err(Error::Shape(format!(
                "{} commitments but {} value rows",
                commitments.len(),
                values.len()
            )));
        }
        if let Some((i, row)) = values.iter().enumerate().find(|(_, r)| r.len() != micro_domain.size()) {
            return Err(Error::Shape(format!(
                "value row {i} has {} entries, micro-domain has {}",
                row.len(),
                micro_domain.size()
            )));
        }
        Ok(Self {
            commitments,
            values,
            micro_domain,
        })
    }

    pub fn commitments(&self) -> &[Commitment] {
        &self.commitments
    }

    pub fn values(&self) -> &[Vec<Scalar>] {
        &self.values
    }

    pub fn micro_domain(&self) -> &MicroDomain {
        &self.micro_domain
    }

    pub fn k(&self) -> usize {
        self.commitments.len()
    }

    /// Row-major flattening, the order used on the wire.
    pub fn flat_values(&self) -> Vec<Scalar> {
        self.values.iter().flatten().copied().collect()
    }
}

pub fn open_shared(srs: &Srs, polys: &[Polynomial], md: &MicroDomain, gamma: &Challenge) -> Result<AggregatedProof> {
    open_shared_with(srs, polys, md, gamma, &mut OpCounters::default())
}

pub fn open_shared_with(
    srs: &Srs,
    polys: &[Polynomial],
    md: &MicroDomain,
    gamma: &Challenge,
    ops: &mut OpCounters,
) -> Result<AggregatedProof> {
    let d = srs.degree();
    let g = md.size();
    if g > d {
        return Err(Error::DegreeOverflow { degree: g, bound: d });
    }
    if polys.is_empty() {
        return Err(Error::Shape("no polynomials to open".into()));
    }
    if let Some(deg) = polys.iter().filter_map(Polynomial::degree).find(|&deg| deg > d) {
        return Err(Error::DegreeOverflow { degree: deg, bound: d });
    }
    let combined = linear_combination(polys, &powers(&gamma.scalar(), polys.len()));
    let z = vanishing_poly(md.points())?;
    let (h, _remainder) = div_rem(&combined, &z)?;
    // deg h <= d - g: commit over the fixed window of d + 1 - g bases
    let w = srs.msm_g1(h.coeffs(), d + 1 - g, ops)?;
    Ok(AggregatedProof(w.into_affine()))
}

pub fn verify_shared(srs: &Srs, group: &OpenedGroup, proof: &AggregatedProof, gamma: &Challenge) -> Result<bool> {
    verify_shared_with(srs, group, proof, gamma, &mut OpCounters::default())
}

pub fn verify_shared_with(
    srs: &Srs,
    group: &OpenedGroup,
    proof: &AggregatedProof,
    gamma: &Challenge,
    ops: &mut OpCounters,
) -> Result<bool> {
    let g = group.micro_domain.size();
    if g > srs.degree() {
        return Err(Error::DegreeOverflow {
            degree: g,
            bound: srs.degree(),
        });
    }
    let k = group.k();
    let weights = powers(&gamma.scalar(), k);

    let mut combined_values = vec![Scalar::from(0u64); g];
    for (row, w) in group.values.iter().zip(&weights) {
        for (acc, v) in combined_values.iter_mut().zip(row) {
            *acc += *w * v;
        }
    }
    let r = interpolate(group.micro_domain.points(), &combined_values)?;
    ops.interpolations += 1;

    let bases: Vec<_> = group.commitments.iter().map(|c| c.0).collect();
    let c = G1Projective::msm_unchecked(&bases, &weights);
    ops.g1_scalar_mults += k as u64;
    let r_commit = srs.msm_g1(r.coeffs(), g, ops)?;
    let lhs = c - r_commit;
    ops.g1_scalar_mults += 1;

    let z2 = srs.vanishing_commitment_g2(group.micro_domain.points(), ops)?;
    ops.pairings += 2;
    Ok(crate::kzg::pairings_equal(lhs, srs.g2_powers()[0], proof.0, z2))
}

/// Generic multiproof: polynomial `i` is opened on its own set `U_i`.
/// Serves as an independent cross-check for the shared-point path.
pub fn open_generic(
    srs: &Srs,
    polys: &[Polynomial],
    opened_sets: &[Vec<Scalar>],
    values: &[Vec<Scalar>],
    gamma: &Challenge,
) -> Result<AggregatedProof> {
    if polys.len() != opened_sets.len() || polys.len() != values.len() {
        return Err(Error::Shape(format!(
            "{} polynomials, {} opened sets, {} value rows",
            polys.len(),
            opened_sets.len(),
            values.len()
        )));
    }
    let weights = powers(&gamma.scalar(), polys.len());
    let mut h = Polynomial::zero();
    for (i, ((f, set), vals)) in polys.iter().zip(opened_sets).zip(values).enumerate() {
        let r = interpolate(set, vals)?;
        let (q, rem) = div_rem(&(f - &r), &vanishing_poly(set)?)?;
        if !rem.is_zero() {
            return Err(Error::NonExactDivision(i));
        }
        h = &h + &q.scale(&weights[i]);
    }
    let w = srs.msm_g1(h.coeffs(), h.coeffs().len(), &mut OpCounters::default())?;
    Ok(AggregatedProof(w.into_affine()))
}
