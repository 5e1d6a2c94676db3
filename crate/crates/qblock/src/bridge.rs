//! The arithmetic side of the identification: q-free radicals, the map from
//! integer sets to projective point sets, its inverse realization from chosen
//! primes, and the transforms that leave the projective image (and hence
//! membership) unchanged.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};
use crate::field_linalg::validate_modulus;
use crate::geometry::PointSet;
use crate::oracle;

/// A q-free natural number carried with its factorization: every exponent
/// lies in [1, q-1], so no prime q-th power divides the value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct QFreeInteger {
    factorization: BTreeMap<u64, u32>,
    value: BigUint,
}

impl QFreeInteger {
    pub fn one() -> Self {
        QFreeInteger {
            factorization: BTreeMap::new(),
            value: BigUint::one(),
        }
    }

    /// Builds from explicit prime powers. Zero exponents are dropped;
    /// exponents >= q are rejected rather than reduced.
    pub fn from_prime_powers(q: u64, powers: &[(u64, u32)]) -> Result<Self> {
        validate_modulus(q)?;
        let mut factorization = BTreeMap::new();
        for &(p, e) in powers {
            if e == 0 {
                continue;
            }
            if u64::from(e) >= q {
                return Err(Error::ExponentOutOfRange(u64::from(e)));
            }
            if !oracle::is_prime(p) {
                return Err(Error::NotPrime(p));
            }
            if factorization.insert(p, e).is_some() {
                return Err(Error::DuplicatePrime(p));
            }
        }
        Ok(Self::from_map(factorization))
    }

    fn from_map(factorization: BTreeMap<u64, u32>) -> Self {
        let mut value = BigUint::one();
        for (&p, &e) in &factorization {
            value *= BigUint::from(p).pow(e);
        }
        QFreeInteger {
            factorization,
            value,
        }
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn factorization(&self) -> &BTreeMap<u64, u32> {
        &self.factorization
    }

    pub fn exponent_of(&self, p: u64) -> u32 {
        self.factorization.get(&p).copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.factorization.is_empty()
    }
}

/// The q-free part of r: exponents of the factorization reduced mod q, zero
/// exponents dropped. Equals 1 exactly when r is a perfect q-th power.
pub fn rad_q(r: u64, q: u64) -> Result<QFreeInteger> {
    validate_modulus(q)?;
    if r == 0 {
        return Err(Error::RadOfZero);
    }
    if r == 1 {
        return Ok(QFreeInteger::one());
    }
    let factored = oracle::factorize(r)?;
    let mut reduced = BTreeMap::new();
    for &(p, e) in factored.factors() {
        let e_mod = u64::from(e) % q;
        if e_mod != 0 {
            reduced.insert(p, e_mod as u32);
        }
    }
    Ok(QFreeInteger::from_map(reduced))
}

/// A finite integer set together with its modulus q and everything derived
/// from it: the deduplicated q-free reductions, the support primes, and the
/// exceptional-modulus product delta.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueSet {
    q: u64,
    raw_elements: Vec<BigInt>,
    reduced: Vec<QFreeInteger>,
    contains_perfect_power: bool,
    perfect_power_witness: Option<BigInt>,
    support: Vec<u64>,
    delta: BigUint,
}

impl ResidueSet {
    /// Builds from raw integers: absolute values are taken (for odd q, -1 is
    /// a perfect q-th power), q-free parts computed, and duplicates merged.
    pub fn from_integers(elements: &[i64], q: u64) -> Result<Self> {
        validate_modulus(q)?;
        if elements.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut rads = Vec::with_capacity(elements.len());
        for &e in elements {
            if e == 0 {
                return Err(Error::ZeroElement);
            }
            rads.push((BigInt::from(e), rad_q(e.unsigned_abs(), q)?));
        }
        Ok(Self::assemble(q, rads))
    }

    /// Builds directly from q-free integers, for sets whose factorizations
    /// are known by construction.
    pub fn from_reduced(q: u64, elements: Vec<QFreeInteger>) -> Result<Self> {
        validate_modulus(q)?;
        if elements.is_empty() {
            return Err(Error::EmptySet);
        }
        let rads = elements
            .into_iter()
            .map(|r| (BigInt::from(r.value().clone()), r))
            .collect();
        Ok(Self::assemble(q, rads))
    }

    fn assemble(q: u64, rads: Vec<(BigInt, QFreeInteger)>) -> Self {
        let mut raw_elements = Vec::with_capacity(rads.len());
        let mut perfect_power_witness = None;
        let mut by_value: BTreeMap<BigUint, QFreeInteger> = BTreeMap::new();
        for (raw, rad) in rads {
            if rad.is_one() {
                perfect_power_witness.get_or_insert(raw.clone());
            } else {
                by_value.entry(rad.value().clone()).or_insert(rad);
            }
            raw_elements.push(raw);
        }
        let reduced: Vec<QFreeInteger> = by_value.into_values().collect();
        let mut support: Vec<u64> = Vec::new();
        for r in &reduced {
            support.extend(r.factorization().keys());
        }
        support.sort_unstable();
        support.dedup();
        let mut delta = BigUint::from(q);
        for r in &reduced {
            delta *= r.value();
        }
        ResidueSet {
            q,
            raw_elements,
            contains_perfect_power: perfect_power_witness.is_some(),
            perfect_power_witness,
            reduced,
            support,
            delta,
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn raw_elements(&self) -> &[BigInt] {
        &self.raw_elements
    }

    /// Deduplicated q-free reductions, sorted by value, with 1 excluded.
    pub fn reduced(&self) -> &[QFreeInteger] {
        &self.reduced
    }

    pub fn contains_perfect_power(&self) -> bool {
        self.contains_perfect_power
    }

    /// A raw element whose q-free part is 1, when one exists.
    pub fn perfect_power_witness(&self) -> Option<&BigInt> {
        self.perfect_power_witness.as_ref()
    }

    /// Sorted distinct primes dividing the product of the reductions.
    pub fn support(&self) -> &[u64] {
        &self.support
    }

    /// q times the product of the reduced elements. Only moduli coprime to
    /// delta take part in the residue requirement.
    pub fn delta(&self) -> &BigUint {
        &self.delta
    }

    /// The support must carry at least k+1 primes for membership to be
    /// possible at all (absent a perfect q-th power); false certifies
    /// non-membership.
    pub fn min_support_check(&self, k: usize) -> bool {
        self.support.len() > k
    }

    /// The associated point set of PG(F_q^n), n = |support|: one point per
    /// reduced element, coordinates read off the exponent vector over the
    /// sorted support. Distinct integers may land on the same point.
    pub fn pi_q(&self) -> Result<PointSet> {
        self.embed_over(&self.support)
    }

    /// The point set over an explicit (sorted, superset) support, padding
    /// zero exponents for absent primes.
    pub(crate) fn embed_over(&self, support: &[u64]) -> Result<PointSet> {
        if self.contains_perfect_power {
            return Err(Error::PerfectPowerPresent);
        }
        debug_assert!(self.support.iter().all(|p| support.contains(p)));
        let mut ps = PointSet::new(self.q, support.len())?;
        for r in &self.reduced {
            let coords: Vec<u64> = support
                .iter()
                .map(|&p| u64::from(r.exponent_of(p)))
                .collect();
            ps.insert_vector(&coords)?;
        }
        Ok(ps)
    }

    /// Element-wise powers s_j^{a_j} followed by q-free reduction. Exponents
    /// are positional over `reduced()` and must be nonzero mod q; the
    /// projective image is unchanged.
    pub fn exponentiate(&self, a: &[u64]) -> Result<ResidueSet> {
        if a.len() != self.reduced.len() {
            return Err(Error::LengthMismatch {
                expected: self.reduced.len(),
                got: a.len(),
            });
        }
        let mut rads = Vec::with_capacity(a.len());
        for (r, &aj) in self.reduced.iter().zip(a) {
            let aj = aj % self.q;
            if aj == 0 {
                return Err(Error::ZeroExponent);
            }
            let mut map = BTreeMap::new();
            for (&p, &e) in r.factorization() {
                let e_new = (u64::from(e) * aj) % self.q;
                if e_new != 0 {
                    map.insert(p, e_new as u32);
                }
            }
            let rad = QFreeInteger::from_map(map);
            rads.push((BigInt::from(rad.value().clone()), rad));
        }
        Ok(self.transformed(rads))
    }

    /// Replaces the i-th support prime with `new_primes[i]` in every
    /// factorization, keeping the exponent vectors.
    pub fn switch_primes(&self, new_primes: &[u64]) -> Result<ResidueSet> {
        if new_primes.len() != self.support.len() {
            return Err(Error::LengthMismatch {
                expected: self.support.len(),
                got: new_primes.len(),
            });
        }
        check_distinct_primes(new_primes)?;
        let substitution: BTreeMap<u64, u64> = self
            .support
            .iter()
            .copied()
            .zip(new_primes.iter().copied())
            .collect();
        let mut rads = Vec::with_capacity(self.reduced.len());
        for r in &self.reduced {
            let map: BTreeMap<u64, u32> = r
                .factorization()
                .iter()
                .map(|(&p, &e)| (substitution[&p], e))
                .collect();
            let rad = QFreeInteger::from_map(map);
            rads.push((BigInt::from(rad.value().clone()), rad));
        }
        Ok(self.transformed(rads))
    }

    /// Scales the exponent of the i-th support prime by `b[i]` mod q in every
    /// element; the projective image moves by the diagonal map diag(b).
    pub fn scale_prime_exponents(&self, b: &[u64]) -> Result<ResidueSet> {
        if b.len() != self.support.len() {
            return Err(Error::LengthMismatch {
                expected: self.support.len(),
                got: b.len(),
            });
        }
        let mut scale: BTreeMap<u64, u64> = BTreeMap::new();
        for (&p, &bi) in self.support.iter().zip(b) {
            let bi = bi % self.q;
            if bi == 0 {
                return Err(Error::ZeroExponent);
            }
            scale.insert(p, bi);
        }
        let mut rads = Vec::with_capacity(self.reduced.len());
        for r in &self.reduced {
            let mut map = BTreeMap::new();
            for (&p, &e) in r.factorization() {
                let e_new = (u64::from(e) * scale[&p]) % self.q;
                if e_new != 0 {
                    map.insert(p, e_new as u32);
                }
            }
            let rad = QFreeInteger::from_map(map);
            rads.push((BigInt::from(rad.value().clone()), rad));
        }
        Ok(self.transformed(rads))
    }

    /// Rebuild after a reduced-set transform, carrying the perfect-power flag
    /// of the source set.
    fn transformed(&self, rads: Vec<(BigInt, QFreeInteger)>) -> ResidueSet {
        let mut out = Self::assemble(self.q, rads);
        if self.contains_perfect_power {
            out.contains_perfect_power = true;
            out.perfect_power_witness = self.perfect_power_witness.clone();
        }
        out
    }
}

fn check_distinct_primes(primes: &[u64]) -> Result<()> {
    for (i, &p) in primes.iter().enumerate() {
        if !oracle::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if primes[..i].contains(&p) {
            return Err(Error::DuplicatePrime(p));
        }
    }
    Ok(())
}

/// The inverse of the projective identification: each point becomes the
/// integer whose exponent vector (of the normalized representative) is read
/// over the given primes. Output sorted ascending.
pub fn realize(ps: &PointSet, primes: &[u64]) -> Result<Vec<BigUint>> {
    if primes.len() != ps.ambient_dim() {
        return Err(Error::LengthMismatch {
            expected: ps.ambient_dim(),
            got: primes.len(),
        });
    }
    check_distinct_primes(primes)?;
    let mut out: Vec<BigUint> = ps
        .iter()
        .map(|point| {
            let mut value = BigUint::one();
            for (&p, &e) in primes.iter().zip(point.coords()) {
                value *= BigUint::from(p).pow(e as u32);
            }
            value
        })
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Deserialize)]
struct ResidueSetWire {
    q: u64,
    elements: Vec<i64>,
}

impl<'de> Deserialize<'de> for ResidueSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = ResidueSetWire::deserialize(deserializer)?;
        ResidueSet::from_integers(&wire.elements, wire.q).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ProjectivePoint;
    use crate::test_fixtures::EXAMPLE_13;
    use proptest::prelude::*;

    fn biguints(values: &[u64]) -> Vec<BigUint> {
        values.iter().map(|&v| BigUint::from(v)).collect()
    }

    fn values(rs: &ResidueSet) -> Vec<BigUint> {
        rs.reduced().iter().map(|r| r.value().clone()).collect()
    }

    #[test]
    fn rad_of_perfect_cube_is_one() {
        assert!(rad_q(8, 3).unwrap().is_one());
        assert!(rad_q(1, 3).unwrap().is_one());
        assert!(rad_q(64, 3).unwrap().is_one());
    }

    #[test]
    fn rad_keeps_q_free_factorization() {
        let r = rad_q(180, 3).unwrap();
        assert_eq!(r.value(), &BigUint::from(180u32));
        assert_eq!(
            r.factorization(),
            &BTreeMap::from([(2u64, 2u32), (3, 2), (5, 1)])
        );
    }

    #[test]
    fn rad_reduces_exponents() {
        let r = rad_q(1250, 3).unwrap();
        assert_eq!(r.value(), &BigUint::from(10u32));
        assert_eq!(r.factorization(), &BTreeMap::from([(2u64, 1u32), (5, 1)]));
        assert!(rad_q(0, 3).is_err());
    }

    #[test]
    fn build_detects_negative_perfect_power() {
        let rs = ResidueSet::from_integers(&[-8, 2], 3).unwrap();
        assert!(rs.contains_perfect_power());
        assert_eq!(rs.perfect_power_witness(), Some(&BigInt::from(-8)));
        assert_eq!(values(&rs), biguints(&[2]));
        assert_eq!(rs.support(), &[2]);
    }

    #[test]
    fn build_thirteen_element_set() {
        let rs = ResidueSet::from_integers(&EXAMPLE_13, 3).unwrap();
        assert_eq!(rs.support(), &[2, 3, 5, 7]);
        assert_eq!(rs.reduced().len(), 13);
        assert!(!rs.contains_perfect_power());
    }

    #[test]
    fn build_small_set_delta() {
        let rs = ResidueSet::from_integers(&[2, 3, 6, 18], 3).unwrap();
        assert_eq!(rs.support(), &[2, 3]);
        assert_eq!(rs.reduced().len(), 4);
        assert_eq!(rs.delta(), &BigUint::from(3u32 * 2 * 3 * 6 * 18));
    }

    #[test]
    fn build_rejects_bad_input() {
        assert_eq!(
            ResidueSet::from_integers(&[], 3).unwrap_err(),
            Error::EmptySet
        );
        assert_eq!(
            ResidueSet::from_integers(&[2, 0], 3).unwrap_err(),
            Error::ZeroElement
        );
    }

    #[test]
    fn pi_q_small_set_covers_projective_line() {
        let rs = ResidueSet::from_integers(&[2, 3, 6, 18], 3).unwrap();
        let ps = rs.pi_q().unwrap();
        assert_eq!(ps.ambient_dim(), 2);
        let expected =
            PointSet::from_vectors(3, 2, [vec![1, 0], vec![0, 1], vec![1, 1], vec![1, 2]])
                .unwrap();
        assert_eq!(ps, expected);
    }

    #[test]
    fn pi_q_thirteen_element_set_dedups() {
        let rs = ResidueSet::from_integers(&EXAMPLE_13, 3).unwrap();
        let ps = rs.pi_q().unwrap();
        assert_eq!(ps.ambient_dim(), 4);
        // 20 and 50 share a point, so 13 integers give 12 points
        assert_eq!(ps.len(), 12);
        assert!(ps.contains(&ProjectivePoint::from_vector(3, &[1, 1, 0, 0]).unwrap()));
        assert!(ps.contains(&ProjectivePoint::from_vector(3, &[2, 2, 1, 0]).unwrap()));
    }

    #[test]
    fn pi_q_single_prime() {
        let rs = ResidueSet::from_integers(&[7], 5).unwrap();
        let ps = rs.pi_q().unwrap();
        assert_eq!(ps.ambient_dim(), 1);
        assert_eq!(ps.len(), 1);
    }

    #[test]
    fn pi_q_rejects_perfect_power() {
        let rs = ResidueSet::from_integers(&[-8, 2], 3).unwrap();
        assert_eq!(rs.pi_q().unwrap_err(), Error::PerfectPowerPresent);
    }

    #[test]
    fn realize_inverts_pi_q() {
        let rs = ResidueSet::from_integers(&[2, 3, 6, 18], 3).unwrap();
        let ps = rs.pi_q().unwrap();
        assert_eq!(realize(&ps, &[2, 3]).unwrap(), biguints(&[2, 3, 6, 18]));

        let single = PointSet::from_vectors(3, 3, [vec![1, 2, 0]]).unwrap();
        assert_eq!(realize(&single, &[2, 3, 5]).unwrap(), biguints(&[18]));
    }

    #[test]
    fn realize_validates_primes() {
        let ps = PointSet::from_vectors(3, 2, [vec![1, 0]]).unwrap();
        assert!(matches!(
            realize(&ps, &[2]),
            Err(Error::LengthMismatch { .. })
        ));
        assert_eq!(realize(&ps, &[2, 2]).unwrap_err(), Error::DuplicatePrime(2));
        assert_eq!(realize(&ps, &[2, 9]).unwrap_err(), Error::NotPrime(9));
    }

    #[test]
    fn exponentiate_identity_and_squares() {
        let rs = ResidueSet::from_integers(&[2, 3], 3).unwrap();
        let same = rs.exponentiate(&[1, 1]).unwrap();
        assert_eq!(values(&same), values(&rs));

        let squared = rs.exponentiate(&[2, 2]).unwrap();
        assert_eq!(values(&squared), biguints(&[4, 9]));
        assert_eq!(squared.pi_q().unwrap(), rs.pi_q().unwrap());

        let six = ResidueSet::from_integers(&[6], 3).unwrap();
        let thirty_six = six.exponentiate(&[2]).unwrap();
        assert_eq!(values(&thirty_six), biguints(&[36]));
        assert_eq!(thirty_six.pi_q().unwrap(), six.pi_q().unwrap());
    }

    #[test]
    fn exponentiate_rejects_zero_exponent() {
        let rs = ResidueSet::from_integers(&[2, 3], 3).unwrap();
        assert_eq!(rs.exponentiate(&[1, 3]).unwrap_err(), Error::ZeroExponent);
        assert!(matches!(
            rs.exponentiate(&[1]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn switch_primes_positionally() {
        let rs = ResidueSet::from_integers(&[2, 3, 6, 18], 3).unwrap();
        let same = rs.switch_primes(&[2, 3]).unwrap();
        assert_eq!(values(&same), values(&rs));

        let switched = rs.switch_primes(&[5, 7]).unwrap();
        assert_eq!(values(&switched), biguints(&[5, 7, 35, 245]));
        assert_eq!(switched.pi_q().unwrap(), rs.pi_q().unwrap());

        assert_eq!(
            rs.switch_primes(&[5, 5]).unwrap_err(),
            Error::DuplicatePrime(5)
        );
    }

    #[test]
    fn scale_prime_exponents_diagonally() {
        let rs = ResidueSet::from_integers(&[2, 3, 6, 18], 3).unwrap();
        let same = rs.scale_prime_exponents(&[1, 1]).unwrap();
        assert_eq!(values(&same), values(&rs));

        let scaled = rs.scale_prime_exponents(&[2, 1]).unwrap();
        assert_eq!(values(&scaled), biguints(&[3, 4, 12, 36]));
        // the image is the diagonal action diag(2, 1) on the original points
        let expected = PointSet::from_vectors(
            3,
            2,
            rs.pi_q()
                .unwrap()
                .iter()
                .map(|p| vec![(p.coords()[0] * 2) % 3, p.coords()[1]])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(scaled.pi_q().unwrap(), expected);

        assert_eq!(
            rs.scale_prime_exponents(&[3, 1]).unwrap_err(),
            Error::ZeroExponent
        );
    }

    #[test]
    fn min_support_check_counts_primes() {
        let rs = ResidueSet::from_integers(&[2, 4], 3).unwrap();
        assert!(!rs.min_support_check(1));
        let rs = ResidueSet::from_integers(&[2, 3, 6, 18], 3).unwrap();
        assert!(rs.min_support_check(1));
        let rs = ResidueSet::from_integers(&EXAMPLE_13, 3).unwrap();
        assert!(rs.min_support_check(2));
    }

    #[test]
    fn residue_set_deserializes_from_wire_json() {
        let rs: ResidueSet = serde_json::from_str(r#"{"q":3,"elements":[2,3,6,18]}"#).unwrap();
        assert_eq!(rs.q(), 3);
        assert_eq!(rs.support(), &[2, 3]);
    }

    proptest! {
        #[test]
        fn rad_ignores_qth_power_factors(r in 1u64..3000, m in 1u64..12, q in prop_oneof![Just(3u64), Just(5u64)]) {
            let scaled = r * m.pow(q as u32);
            prop_assert_eq!(rad_q(scaled, q).unwrap(), rad_q(r, q).unwrap());
        }

        #[test]
        fn realize_round_trip(
            seeds in proptest::collection::vec(proptest::collection::vec(0u64..3, 3), 1..6)
        ) {
            // random nonzero exponent vectors over primes [2, 5, 7] with q = 3
            let vectors: Vec<Vec<u64>> = seeds
                .into_iter()
                .map(|mut v| {
                    if v.iter().all(|&x| x == 0) {
                        v[0] = 1;
                    }
                    v
                })
                .collect();
            let ps = PointSet::from_vectors(3, 3, vectors).unwrap();
            let ints = realize(&ps, &[2, 5, 7]).unwrap();
            let as_i64: Vec<i64> = ints.iter().map(|v| i64::try_from(u64::try_from(v.clone()).unwrap()).unwrap()).collect();
            let rs = ResidueSet::from_integers(&as_i64, 3).unwrap();
            // the recovered support may be a subset of [2, 5, 7]; embed back
            let back = rs.embed_over(&[2, 5, 7]).unwrap();
            prop_assert_eq!(back, ps);
        }
    }
}
