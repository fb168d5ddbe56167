//! Scalar-field polynomials in coefficient form, evaluation domains, and the
//! handful of operations the commitment layers need: Horner evaluation,
//! vanishing polynomials, Lagrange interpolation and schoolbook division.

use std::collections::HashSet;
use std::ops::{Add, Mul, Neg, Sub};

use ark_ff::{batch_inversion, BigInt, Field, One, PrimeField, Zero};
use ark_poly::{EvaluationDomain as _, Radix2EvaluationDomain};

use crate::error::{Error, Result};

/// Element of the BLS12-381 scalar field.
pub type Scalar = ark_bls12_381::Fr;

/// Canonical little-endian encoding: limb 0 (least significant) first.
pub fn scalar_to_bytes(s: &Scalar) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, limb) in scalar_to_limbs(s).iter().enumerate() {
        out[i * 8..(i + 1) * 8].copy_from_slice(&limb.to_le_bytes());
    }
    out
}

/// Inverse of [`scalar_to_bytes`]; `None` if the value is not below the modulus.
pub fn scalar_from_bytes(bytes: &[u8; 32]) -> Option<Scalar> {
    let mut limbs = [0u64; 4];
    for (i, limb) in limbs.iter_mut().enumerate() {
        *limb = u64::from_le_bytes(bytes[i * 8..(i + 1) * 8].try_into().unwrap());
    }
    scalar_from_limbs(limbs)
}

pub fn scalar_to_limbs(s: &Scalar) -> [u64; 4] {
    s.into_bigint().0
}

pub fn scalar_from_limbs(limbs: [u64; 4]) -> Option<Scalar> {
    Scalar::from_bigint(BigInt::new(limbs))
}

/// Dense univariate polynomial, lowest-degree coefficient first.
///
/// Trailing zeros are always stripped, so the zero polynomial is the empty
/// coefficient list and its degree is `None` (standing in for -inf).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Polynomial {
    coeffs: Vec<Scalar>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Scalar) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `X`.
    pub fn x() -> Self {
        Self::new(vec![Scalar::zero(), Scalar::one()])
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Scalar> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn evaluate(&self, z: &Scalar) -> Scalar {
        evaluate(self, z)
    }

    pub fn scale(&self, k: &Scalar) -> Self {
        Self::new(self.coeffs.iter().map(|c| *c * k).collect())
    }

    pub fn random<R: rand::Rng + ?Sized>(degree: usize, rng: &mut R) -> Self {
        Self::new((0..=degree).map(|_| random_scalar(rng)).collect())
    }
}

impl From<Vec<Scalar>> for Polynomial {
    fn from(coeffs: Vec<Scalar>) -> Self {
        Self::new(coeffs)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let (long, short) = if self.coeffs.len() >= rhs.coeffs.len() {
            (&self.coeffs, &rhs.coeffs)
        } else {
            (&rhs.coeffs, &self.coeffs)
        };
        let mut out = long.clone();
        for (o, s) in out.iter_mut().zip(short) {
            *o += s;
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -*c).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Scalar::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += *a * b;
            }
        }
        Polynomial::new(out)
    }
}

pub fn random_scalar<R: rand::Rng + ?Sized>(rng: &mut R) -> Scalar {
    let mut wide = [0u8; 64];
    rng.fill_bytes(&mut wide);
    Scalar::from_le_bytes_mod_order(&wide)
}

/// Ordered set of pairwise-distinct evaluation points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationDomain {
    points: Vec<Scalar>,
    radix2: bool,
}

impl EvaluationDomain {
    pub fn new(points: Vec<Scalar>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDomain);
        }
        check_distinct(&points)?;
        Ok(Self { points, radix2: false })
    }

    /// The `n`-th roots of unity `1, w, .., w^(n-1)`; `n` must be a power of two.
    pub fn roots_of_unity(n: usize) -> Result<Self> {
        let domain = radix2_domain(n)?;
        Ok(Self {
            points: domain.elements().collect(),
            radix2: true,
        })
    }

    /// Row-domain default: roots of unity when `n` is a power of two,
    /// otherwise the integers `1..=n`.
    pub fn for_size(n: usize) -> Result<Self> {
        if n.is_power_of_two() {
            Self::roots_of_unity(n)
        } else {
            Self::new((1..=n as u64).map(Scalar::from).collect())
        }
    }

    pub fn points(&self) -> &[Scalar] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_radix2(&self) -> bool {
        self.radix2
    }

    /// Evaluates `p` at every point, through an FFT when the domain is a
    /// multiplicative subgroup and `p` fits in it.
    pub fn evaluate_all(&self, p: &Polynomial) -> Vec<Scalar> {
        let fits = p.coeffs().len() <= self.points.len();
        if self.radix2 && fits {
            let domain = radix2_domain(self.points.len()).expect("checked at construction");
            let mut coeffs = p.coeffs().to_vec();
            coeffs.resize(self.points.len(), Scalar::zero());
            domain.fft_in_place(&mut coeffs);
            coeffs
        } else {
            self.points.iter().map(|z| evaluate(p, z)).collect()
        }
    }
}

fn radix2_domain(n: usize) -> Result<Radix2EvaluationDomain<Scalar>> {
    if !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "radix-2 domain size {n} is not a power of two"
        )));
    }
    Radix2EvaluationDomain::new(n)
        .filter(|d| d.size() == n)
        .ok_or_else(|| Error::InvalidArgument(format!("no radix-2 domain of size {n}")))
}

fn check_distinct(points: &[Scalar]) -> Result<()> {
    let mut seen = HashSet::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if !seen.insert(*p) {
            return Err(Error::DuplicatePoint(i));
        }
    }
    Ok(())
}

/// A contiguous block `[offset, offset + size)` of a parent domain; the
/// shared opened set of one aggregated proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MicroDomain {
    points: Vec<Scalar>,
    offset: usize,
}

impl MicroDomain {
    pub fn new(parent: &EvaluationDomain, offset: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyDomain);
        }
        let end = offset.checked_add(size).filter(|&e| e <= parent.len()).ok_or_else(|| {
            Error::Shape(format!(
                "micro-domain [{offset}, {offset}+{size}) exceeds parent of size {}",
                parent.len()
            ))
        })?;
        Ok(Self {
            points: parent.points()[offset..end].to_vec(),
            offset,
        })
    }

    /// Builds a micro-domain from bare points, e.g. when a verifier
    /// reconstructs it from the row domain and block metadata.
    pub fn from_points(points: Vec<Scalar>, offset: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDomain);
        }
        check_distinct(&points)?;
        Ok(Self { points, offset })
    }

    pub fn points(&self) -> &[Scalar] {
        &self.points
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn as_domain(&self) -> EvaluationDomain {
        EvaluationDomain {
            points: self.points.clone(),
            radix2: false,
        }
    }
}

/// Horner evaluation of `p` at `z`.
pub fn evaluate(p: &Polynomial, z: &Scalar) -> Scalar {
    p.coeffs.iter().rev().fold(Scalar::zero(), |acc, c| acc * z + c)
}

/// `prod (X - z)` over the points of `points`; monic of degree `points.len()`.
pub fn vanishing_poly(points: &[Scalar]) -> Result<Polynomial> {
    if points.is_empty() {
        return Err(Error::EmptyDomain);
    }
    Ok(vanishing(points))
}

fn vanishing(points: &[Scalar]) -> Polynomial {
    let mut coeffs = vec![Scalar::one()];
    for z in points {
        let mut next = vec![Scalar::zero(); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= *c * z;
        }
        coeffs = next;
    }
    Polynomial::new(coeffs)
}

/// Unique polynomial of degree `< |domain|` through `(z_j, values_j)`.
pub fn interpolate(domain: &[Scalar], values: &[Scalar]) -> Result<Polynomial> {
    if domain.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: domain.len(),
            got: values.len(),
        });
    }
    if domain.is_empty() {
        return Err(Error::EmptyDomain);
    }
    check_distinct(domain)?;
    let n = domain.len();
    let z = vanishing(domain);

    // barycentric weights w_j = 1 / prod_{m != j} (z_j - z_m)
    let mut weights: Vec<Scalar> = (0..n)
        .map(|j| (0..n).filter(|&m| m != j).map(|m| domain[j] - domain[m]).product())
        .collect();
    batch_inversion(&mut weights);

    let mut out = vec![Scalar::zero(); n];
    for j in 0..n {
        if values[j].is_zero() {
            continue;
        }
        let scale = values[j] * weights[j];
        // synthetic division Z / (X - z_j), exact
        let mut carry = Scalar::zero();
        let zc = z.coeffs();
        for i in (0..n).rev() {
            carry = zc[i + 1] + carry * domain[j];
            out[i] += carry * scale;
        }
    }
    Ok(Polynomial::new(out))
}

/// Schoolbook long division: `num = q * den + r` with `deg r < deg den`.
pub fn div_rem(num: &Polynomial, den: &Polynomial) -> Result<(Polynomial, Polynomial)> {
    let den_deg = den.degree().ok_or(Error::DivisionByZero)?;
    let num_deg = match num.degree() {
        Some(d) if d >= den_deg => d,
        _ => return Ok((Polynomial::zero(), num.clone())),
    };
    let lead_inv = den.coeffs[den_deg].inverse().expect("leading coefficient is nonzero");
    let mut rem = num.coeffs.clone();
    let mut quot = vec![Scalar::zero(); num_deg - den_deg + 1];
    for i in (0..quot.len()).rev() {
        let q = rem[i + den_deg] * lead_inv;
        quot[i] = q;
        if q.is_zero() {
            continue;
        }
        for (j, d) in den.coeffs.iter().enumerate() {
            rem[i + j] -= q * d;
        }
    }
    rem.truncate(den_deg);
    Ok((Polynomial::new(quot), Polynomial::new(rem)))
}

/// `sum_i weights[i] * polys[i]`.
pub fn linear_combination(polys: &[Polynomial], weights: &[Scalar]) -> Polynomial {
    let len = polys.iter().map(|p| p.coeffs.len()).max().unwrap_or(0);
    let mut out = vec![Scalar::zero(); len];
    for (p, w) in polys.iter().zip(weights) {
        for (o, c) in out.iter_mut().zip(&p.coeffs) {
            *o += *c * w;
        }
    }
    Polynomial::new(out)
}

/// `1, gamma, gamma^2, ..` (`n` terms).
pub fn powers(gamma: &Scalar, n: usize) -> Vec<Scalar> {
    std::iter::successors(Some(Scalar::one()), |p| Some(*p * gamma))
        .take(n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn s(v: i64) -> Scalar {
        if v < 0 {
            -Scalar::from((-v) as u64)
        } else {
            Scalar::from(v as u64)
        }
    }

    fn poly(cs: &[i64]) -> Polynomial {
        Polynomial::new(cs.iter().map(|&c| s(c)).collect())
    }

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    // naive power-sum evaluation, independent of Horner
    fn power_sum(p: &Polynomial, z: &Scalar) -> Scalar {
        p.coeffs().iter().enumerate().map(|(i, c)| *c * z.pow([i as u64])).sum()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(evaluate(&Polynomial::zero(), &s(42)), Scalar::zero());
        assert_eq!(evaluate(&poly(&[2, -3, 1]), &s(1)), Scalar::zero());
        let mut r = rng(1);
        let p = Polynomial::random(10, &mut r);
        let z = random_scalar(&mut r);
        assert_eq!(evaluate(&p, &z), power_sum(&p, &z));
    }

    #[test]
    fn zero_polynomial_normalizes() {
        let p = Polynomial::new(vec![Scalar::zero(); 5]);
        assert!(p.is_zero());
        assert_eq!(p.degree(), None);
        assert_eq!(poly(&[1, 0, 0]).degree(), Some(0));
    }

    #[test]
    fn vanishing_examples() {
        assert_eq!(vanishing_poly(&[s(0)]).unwrap(), Polynomial::x());
        assert_eq!(vanishing_poly(&[s(1), s(2)]).unwrap(), poly(&[2, -3, 1]));
        assert_eq!(vanishing_poly(&[]), Err(Error::EmptyDomain));

        let mut r = rng(2);
        let pts: Vec<Scalar> = (0..8).map(|_| random_scalar(&mut r)).collect();
        let z = vanishing_poly(&pts).unwrap();
        assert_eq!(z.degree(), Some(8));
        assert_eq!(*z.coeffs().last().unwrap(), Scalar::one());
        assert!(pts.iter().all(|p| evaluate(&z, p).is_zero()));
        for _ in 0..100 {
            let outside = random_scalar(&mut r);
            assert!(!evaluate(&z, &outside).is_zero());
        }
    }

    #[test]
    fn interpolate_examples() {
        assert_eq!(interpolate(&[s(5)], &[s(7)]).unwrap(), Polynomial::constant(s(7)));
        assert_eq!(interpolate(&[s(0), s(1)], &[s(0), s(1)]).unwrap(), Polynomial::x());
        assert_eq!(
            interpolate(&[s(0), s(1)], &[s(0)]),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        );
        assert_eq!(interpolate(&[s(3), s(3)], &[s(0), s(1)]), Err(Error::DuplicatePoint(1)));
        let mut r = rng(3);
        let pts: Vec<Scalar> = (0..4).map(|_| random_scalar(&mut r)).collect();
        let vals: Vec<Scalar> = (0..4).map(|_| random_scalar(&mut r)).collect();
        let p = interpolate(&pts, &vals).unwrap();
        assert!(p.degree().unwrap() < 4);
        for (z, v) in pts.iter().zip(&vals) {
            assert_eq!(evaluate(&p, z), *v);
        }
    }

    #[test]
    fn div_rem_examples() {
        let den = poly(&[2, -3, 1]);
        let (q, r) = div_rem(&den, &den).unwrap();
        assert_eq!(q, Polynomial::constant(Scalar::one()));
        assert!(r.is_zero());

        let (q, r) = div_rem(&poly(&[2, -3, 1]), &poly(&[-1, 1])).unwrap();
        assert_eq!(q, poly(&[-2, 1]));
        assert!(r.is_zero());

        assert_eq!(div_rem(&den, &Polynomial::zero()), Err(Error::DivisionByZero));

        // low-degree numerator: all remainder
        let (q, r) = div_rem(&poly(&[4]), &den).unwrap();
        assert!(q.is_zero());
        assert_eq!(r, poly(&[4]));
    }

    #[test]
    fn scalar_encoding_rejects_modulus() {
        let mut modulus = [0u8; 32];
        for (i, limb) in Scalar::MODULUS.0.iter().enumerate() {
            modulus[i * 8..(i + 1) * 8].copy_from_slice(&limb.to_le_bytes());
        }
        assert!(scalar_from_bytes(&modulus).is_none());
        assert!(scalar_from_bytes(&[0xff; 32]).is_none());
        let minus_one = -Scalar::one();
        assert_eq!(scalar_from_bytes(&scalar_to_bytes(&minus_one)), Some(minus_one));
    }

    #[test]
    fn roots_of_unity_fft_matches_horner() {
        let d = EvaluationDomain::roots_of_unity(16).unwrap();
        let p = Polynomial::random(9, &mut rng(4));
        let horner: Vec<Scalar> = d.points().iter().map(|z| evaluate(&p, z)).collect();
        assert_eq!(d.evaluate_all(&p), horner);
        assert!(EvaluationDomain::roots_of_unity(12).is_err());
    }

    #[test]
    fn micro_domain_bounds() {
        let d = EvaluationDomain::for_size(8).unwrap();
        let md = MicroDomain::new(&d, 4, 4).unwrap();
        assert_eq!(md.points(), &d.points()[4..8]);
        assert!(MicroDomain::new(&d, 6, 4).is_err());
        assert!(MicroDomain::new(&d, 0, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn div_rem_reconstructs(seed in any::<u64>(), nd in 0usize..24, dd in 0usize..12) {
            let mut r = rng(seed);
            let num = Polynomial::random(nd, &mut r);
            let den = Polynomial::random(dd, &mut r);
            prop_assume!(!den.is_zero());
            let (q, rem) = div_rem(&num, &den).unwrap();
            prop_assert_eq!(&(&q * &den) + &rem, num);
            prop_assert!(rem.degree().is_none_or(|d| d < den.degree().unwrap()));
        }

        #[test]
        fn interpolation_round_trips(seed in any::<u64>(), n in 1usize..12) {
            let mut r = rng(seed);
            let pts: Vec<Scalar> = (0..n).map(|_| random_scalar(&mut r)).collect();
            let vals: Vec<Scalar> = (0..n).map(|_| random_scalar(&mut r)).collect();
            let p = interpolate(&pts, &vals).unwrap();
            prop_assert!(p.degree().is_none_or(|d| d < n));
            for (z, v) in pts.iter().zip(&vals) {
                prop_assert_eq!(evaluate(&p, z), *v);
            }
        }

        #[test]
        fn scalar_bytes_round_trip(seed in any::<u64>()) {
            let v = random_scalar(&mut rng(seed));
            prop_assert_eq!(scalar_from_bytes(&scalar_to_bytes(&v)), Some(v));
        }
    }
}
