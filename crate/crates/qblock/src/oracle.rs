//! The number-theoretic side of the correspondence: q-th power residue tests
//! modulo primes, prime powers and composites, enumeration of candidate
//! moduli N with Ω(N) <= k coprime to delta, empirical verification and
//! witness search, and the combined decision procedure.

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::bridge::ResidueSet;
use crate::error::{Error, Result};
use crate::field_linalg::{mul_mod, validate_modulus, Subspace};
use crate::geometry::PointSet;

pub(crate) fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    result
}

/// Deterministic Miller-Rabin; this witness set is exact for the whole u64
/// range.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let r = (n - 1).trailing_zeros();
    let d = (n - 1) >> r;
    'witness: for &a in &WITNESSES {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// A natural number carried with its full prime factorization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FactoredModulus {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl FactoredModulus {
    pub fn value(&self) -> u64 {
        self.value
    }

    /// Prime factors with exponents, ascending.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Ω(N): number of prime factors counted with multiplicity.
    pub fn omega(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }
}

impl std::fmt::Display for FactoredModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value)?;
        if self.omega() > 1 {
            write!(f, " = ")?;
            for (i, &(p, e)) in self.factors.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                if e == 1 {
                    write!(f, "{p}")?;
                } else {
                    write!(f, "{p}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

fn strip_factor(m: &mut u64, p: u64, factors: &mut Vec<(u64, u32)>) {
    let mut e = 0u32;
    while *m % p == 0 {
        *m /= p;
        e += 1;
    }
    if e > 0 {
        factors.push((p, e));
    }
}

/// Complete factorization by trial division with a primality early-exit on
/// the remaining cofactor.
pub fn factorize(n: u64) -> Result<FactoredModulus> {
    if n < 2 {
        return Err(Error::FactorizeDomain(n));
    }
    let mut m = n;
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for p in [2u64, 3, 5] {
        strip_factor(&mut m, p, &mut factors);
    }
    const WHEEL: [u64; 8] = [4, 2, 4, 2, 4, 6, 2, 6];
    let mut candidate = 7u64;
    let mut wheel_idx = 0usize;
    while m > 1 {
        if is_prime(m) {
            factors.push((m, 1));
            break;
        }
        while candidate * candidate <= m && m % candidate != 0 {
            candidate += WHEEL[wheel_idx];
            wheel_idx = (wheel_idx + 1) % WHEEL.len();
        }
        if candidate * candidate > m {
            factors.push((m, 1));
            break;
        }
        strip_factor(&mut m, candidate, &mut factors);
    }
    factors.sort_unstable();
    Ok(FactoredModulus { value: n, factors })
}

/// Residue test for a unit s mod a prime p (p coprime to s and p != q).
/// When p is not 1 mod q the q-th power map permutes the units, so everything
/// is a residue; otherwise Euler's criterion applies.
fn residue_unit(s_mod_p: u64, p: u64, q: u64) -> bool {
    debug_assert!(s_mod_p != 0 && s_mod_p < p);
    if (p - 1) % q != 0 {
        return true;
    }
    mod_pow(s_mod_p, (p - 1) / q, p) == 1
}

/// Whether s is a q-th power residue mod the prime p. Signs are discarded:
/// -1 is a perfect q-th power for odd q.
pub fn is_qth_residue_mod_p(s: i64, p: u64, q: u64) -> Result<bool> {
    validate_modulus(q)?;
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == q {
        return Err(Error::ModulusEqualsQ(q));
    }
    let s_mod = s.unsigned_abs() % p;
    if s_mod == 0 {
        return Err(Error::SymbolUndefined {
            s: s.to_string(),
            p,
        });
    }
    Ok(residue_unit(s_mod, p, q))
}

fn biguint_mod_u64(v: &BigUint, p: u64) -> u64 {
    match v.to_u64() {
        Some(small) => small % p,
        None => (v % BigUint::from(p)).to_u64().expect("residue fits"),
    }
}

/// Whether some element of the set is a q-th power residue mod N. One common
/// element must work for every prime factor simultaneously (CRT), and prime
/// powers p^a reduce to p by Hensel's lemma since gcd(N, delta) = 1.
pub fn set_has_qth_residue_mod(rs: &ResidueSet, n: &FactoredModulus) -> Result<bool> {
    let q = rs.q();
    for &(p, _) in n.factors() {
        if p == q || rs.support().contains(&p) {
            return Err(Error::ExcludedModulus(n.value()));
        }
    }
    if rs.contains_perfect_power() {
        return Ok(true);
    }
    Ok(rs.reduced().iter().any(|s| {
        n.factors()
            .iter()
            .all(|&(p, _)| residue_unit(biguint_mod_u64(s.value(), p), p, q))
    }))
}

fn divides(delta: &BigUint, p: u64) -> bool {
    (delta % BigUint::from(p)).is_zero()
}

/// Every N <= bound with 1 <= Ω(N) <= k and gcd(N, delta) = 1, ascending,
/// each with its factorization attached. Built by composing primes coprime
/// to delta rather than factoring every integer.
pub fn enumerate_moduli(k: usize, delta: &BigUint, bound: u64) -> Vec<FactoredModulus> {
    assert!(k >= 1, "need k >= 1");
    let primes: Vec<u64> = primes_up_to(bound)
        .into_iter()
        .filter(|&p| !divides(delta, p))
        .collect();
    let mut out = Vec::new();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    compose(&primes, 0, 1, k, bound, false, &mut factors, &mut out);
    out.sort_unstable_by_key(|m| m.value);
    out
}

/// DFS over nondecreasing prime sequences; `distinct` restricts to squarefree
/// products. Every product in range is emitted exactly once.
#[allow(clippy::too_many_arguments)]
fn compose(
    primes: &[u64],
    start: usize,
    value: u64,
    remaining: usize,
    bound: u64,
    distinct: bool,
    factors: &mut Vec<(u64, u32)>,
    out: &mut Vec<FactoredModulus>,
) {
    for i in start..primes.len() {
        let p = primes[i];
        let Some(v) = value.checked_mul(p) else { break };
        if v > bound {
            break;
        }
        match factors.last_mut() {
            Some(last) if last.0 == p => last.1 += 1,
            _ => factors.push((p, 1)),
        }
        out.push(FactoredModulus {
            value: v,
            factors: factors.clone(),
        });
        if remaining > 1 {
            let next_start = if distinct { i + 1 } else { i };
            compose(primes, next_start, v, remaining - 1, bound, distinct, factors, out);
        }
        let last = factors.last_mut().unwrap();
        if last.1 > 1 {
            last.1 -= 1;
        } else {
            factors.pop();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessVerdict {
    /// No counterexample among the enumerated moduli up to the bound.
    Verified,
    /// A modulus admitting no q-th power residue from the set.
    Counterexample(FactoredModulus),
}

/// Outcome of an oracle run over the moduli stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessReport {
    pub verdict: WitnessVerdict,
    pub bound: u64,
    pub checked: u64,
    pub elapsed: Duration,
}

impl WitnessReport {
    pub fn is_verified(&self) -> bool {
        matches!(self.verdict, WitnessVerdict::Verified)
    }

    pub fn counterexample(&self) -> Option<&FactoredModulus> {
        match &self.verdict {
            WitnessVerdict::Verified => None,
            WitnessVerdict::Counterexample(m) => Some(m),
        }
    }
}

impl Serialize for WitnessReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("WitnessReport", 4)?;
        st.serialize_field(
            "verdict",
            match self.verdict {
                WitnessVerdict::Verified => "verified",
                WitnessVerdict::Counterexample(_) => "counterexample",
            },
        )?;
        st.serialize_field("bound", &self.bound)?;
        st.serialize_field(
            "counterexample",
            &self.counterexample().map(|m| m.value()),
        )?;
        st.serialize_field("checked", &self.checked)?;
        st.end()
    }
}

fn first_failing_index(rs: &ResidueSet, moduli: &[FactoredModulus], threads: usize) -> Option<usize> {
    let fails = |m: &FactoredModulus| {
        !set_has_qth_residue_mod(rs, m).expect("moduli are coprime to delta by construction")
    };
    if threads <= 1 || moduli.len() < 4096 {
        return moduli.iter().position(&fails);
    }
    // contiguous chunks over the ascending list: the minimum of the per-chunk
    // first hits is the global first hit
    let chunk = moduli.len().div_ceil(threads);
    let fails = &fails;
    let mut hits: Vec<Option<usize>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = moduli
            .chunks(chunk)
            .enumerate()
            .map(|(ci, slice)| {
                scope.spawn(move || {
                    slice.iter().position(fails).map(|off| ci * chunk + off)
                })
            })
            .collect();
        hits = handles.into_iter().map(|h| h.join().unwrap()).collect();
    });
    hits.into_iter().flatten().min()
}

/// Runs the residue test over every enumerated modulus up to the bound.
/// Returns the smallest counterexample if one exists below the bound. Sets
/// containing a perfect q-th power verify trivially.
pub fn verify_membership(rs: &ResidueSet, k: usize, bound: u64, threads: usize) -> WitnessReport {
    let start = Instant::now();
    if rs.contains_perfect_power() {
        return WitnessReport {
            verdict: WitnessVerdict::Verified,
            bound,
            checked: 0,
            elapsed: start.elapsed(),
        };
    }
    let moduli = enumerate_moduli(k, rs.delta(), bound);
    match first_failing_index(rs, &moduli, threads) {
        Some(i) => WitnessReport {
            verdict: WitnessVerdict::Counterexample(moduli[i].clone()),
            bound,
            checked: (i + 1) as u64,
            elapsed: start.elapsed(),
        },
        None => WitnessReport {
            verdict: WitnessVerdict::Verified,
            bound,
            checked: moduli.len() as u64,
            elapsed: start.elapsed(),
        },
    }
}

/// Smallest N <= bound with Ω(N) <= k, gcd(N, delta) = 1 and no element of
/// the set a q-th residue mod N; `None` below the bound is inconclusive, not
/// a proof of membership.
///
/// A prime p with p ≢ 1 (mod q) makes every unit a q-th power mod p, and a
/// residue mod p^a reduces to mod p, so the smallest failing modulus is a
/// squarefree product of primes ≡ 1 (mod q). Only those are searched.
pub fn find_witness(rs: &ResidueSet, k: usize, bound: u64, threads: usize) -> Option<FactoredModulus> {
    assert!(k >= 1, "need k >= 1");
    if rs.contains_perfect_power() {
        return None;
    }
    let q = rs.q();
    let primes: Vec<u64> = primes_up_to(bound)
        .into_iter()
        .filter(|&p| p % q == 1 && !divides(rs.delta(), p))
        .collect();
    let mut candidates = Vec::new();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    compose(&primes, 0, 1, k, bound, true, &mut factors, &mut candidates);
    candidates.sort_unstable_by_key(|m| m.value);
    first_failing_index(rs, &candidates, threads).map(|i| candidates.swap_remove(i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The set contains a perfect q-th power.
    TriviallyMember,
    Member,
    NonMember,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::TriviallyMember => "trivially_member",
            Verdict::Member => "member",
            Verdict::NonMember => "non_member",
        })
    }
}

/// Evidence attached to a decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    /// A raw element that is a perfect q-th power.
    PerfectPower(BigInt),
    /// The associated point set, which blocks every codimension-k subspace.
    BlockingPointSet(PointSet),
    /// Fewer than k+1 support primes makes membership impossible.
    SupportTooSmall { support: usize, required: usize },
    /// A codimension-k subspace whose projectivization misses the point set.
    UnblockedSubspace(Subspace),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub verdict: Verdict,
    pub certificate: Certificate,
    /// The associated point set, absent only for trivially-member sets.
    pub point_set: Option<PointSet>,
}

/// The full decision procedure: perfect-power short-circuit, support-size
/// certificate, then the exact geometric blocking test on the projective
/// image.
pub fn decide(rs: &ResidueSet, k: usize) -> Result<Decision> {
    assert!(k >= 1, "need k >= 1");
    if rs.contains_perfect_power() {
        let witness = rs
            .perfect_power_witness()
            .expect("flag implies witness")
            .clone();
        return Ok(Decision {
            verdict: Verdict::TriviallyMember,
            certificate: Certificate::PerfectPower(witness),
            point_set: None,
        });
    }
    let point_set = rs.pi_q()?;
    if !rs.min_support_check(k) {
        return Ok(Decision {
            verdict: Verdict::NonMember,
            certificate: Certificate::SupportTooSmall {
                support: rs.support().len(),
                required: k + 1,
            },
            point_set: Some(point_set),
        });
    }
    match point_set.find_unblocked_subspace(k)? {
        Some(w) => Ok(Decision {
            verdict: Verdict::NonMember,
            certificate: Certificate::UnblockedSubspace(w),
            point_set: Some(point_set),
        }),
        None => Ok(Decision {
            verdict: Verdict::Member,
            certificate: Certificate::BlockingPointSet(point_set.clone()),
            point_set: Some(point_set),
        }),
    }
}
