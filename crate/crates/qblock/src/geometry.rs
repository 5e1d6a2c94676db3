//! Point sets of PG(F_q^n), the k-blocking decision procedure, minimality,
//! and the extremal constructions: k-spaces, the projective triangle, and
//! cones over planar blocking sets.

use std::collections::BTreeSet;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field_linalg::{
    self, add_mod, enumerate_subspaces, gaussian_binomial, inv_mod, mul_mod, sub_mod, Subspace,
};

/// A point of PG(F_q^n): the canonical representative of a line through the
/// origin, normalized so the first nonzero coordinate is 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectivePoint {
    coords: Vec<u64>,
}

fn normalize(q: u64, v: &[u64]) -> Result<Vec<u64>> {
    let mut coords: Vec<u64> = v.iter().map(|&x| x % q).collect();
    let lead = coords
        .iter()
        .position(|&x| x != 0)
        .ok_or(Error::ZeroVector)?;
    if coords[lead] != 1 {
        let scale = inv_mod(coords[lead], q);
        for c in coords.iter_mut() {
            *c = mul_mod(*c, scale, q);
        }
    }
    Ok(coords)
}

impl ProjectivePoint {
    /// Canonical representative of ⟨v⟩; scalar multiples of `v` produce the
    /// same point.
    pub fn from_vector(q: u64, v: &[u64]) -> Result<Self> {
        field_linalg::validate_modulus(q)?;
        Ok(ProjectivePoint {
            coords: normalize(q, v)?,
        })
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn ambient_dim(&self) -> usize {
        self.coords.len()
    }
}

/// A finite, deduplicated set of points of PG(F_q^n).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    q: u64,
    n: usize,
    points: BTreeSet<ProjectivePoint>,
}

impl PointSet {
    pub fn new(q: u64, n: usize) -> Result<Self> {
        field_linalg::validate_modulus(q)?;
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        Ok(PointSet {
            q,
            n,
            points: BTreeSet::new(),
        })
    }

    /// Builds a point set from representative vectors, normalizing and
    /// deduplicating as it goes.
    pub fn from_vectors<I>(q: u64, n: usize, vectors: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[u64]>,
    {
        let mut ps = PointSet::new(q, n)?;
        for v in vectors {
            ps.insert_vector(v.as_ref())?;
        }
        Ok(ps)
    }

    pub fn insert_vector(&mut self, v: &[u64]) -> Result<bool> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        let coords = normalize(self.q, v)?;
        Ok(self.points.insert(ProjectivePoint { coords }))
    }

    pub fn insert(&mut self, p: ProjectivePoint) -> Result<bool> {
        if p.ambient_dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: p.ambient_dim(),
            });
        }
        Ok(self.points.insert(p))
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &ProjectivePoint) -> bool {
        self.points.contains(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ProjectivePoint> {
        self.points.iter()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.points.is_subset(&other.points)
    }

    /// The set with one point removed.
    pub fn without(&self, p: &ProjectivePoint) -> PointSet {
        let mut out = self.clone();
        out.points.remove(p);
        out
    }

    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        if self.q != other.q {
            return Err(Error::ModulusMismatch(self.q, other.q));
        }
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut out = self.clone();
        out.points.extend(other.points.iter().cloned());
        Ok(out)
    }

    fn check_codim(&self, k: usize) -> Result<()> {
        if k == 0 || k >= self.n {
            return Err(Error::CodimensionOutOfRange { k, n: self.n });
        }
        Ok(())
    }

    /// Searches for a codimension-k subspace whose projectivization misses
    /// this set entirely. `None` means every such subspace is blocked.
    pub fn find_unblocked_subspace(&self, k: usize) -> Result<Option<Subspace>> {
        self.check_codim(k)?;
        let d = self.n - k;
        for s in enumerate_subspaces(self.n, d, self.q) {
            if !self.points.iter().any(|p| s.contains(&p.coords)) {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }

    /// True iff every subspace of codimension k meets this set, i.e. the set
    /// is a k-blocking set of PG(F_q^n).
    pub fn is_k_blocking(&self, k: usize) -> Result<bool> {
        Ok(self.find_unblocked_subspace(k)?.is_none())
    }

    /// True iff the set is k-blocking and no proper subset is. Errors if the
    /// set is not k-blocking to begin with.
    ///
    /// Removing a point p unblocks some subspace exactly when some
    /// codimension-k subspace meets the set in {p} alone, so one pass over
    /// the subspaces settles every removal at once.
    pub fn is_minimal_blocking(&self, k: usize) -> Result<bool> {
        self.check_codim(k)?;
        let d = self.n - k;
        let mut essential = std::collections::BTreeSet::new();
        for s in enumerate_subspaces(self.n, d, self.q) {
            let mut hits = self.points.iter().filter(|p| s.contains(&p.coords));
            match (hits.next(), hits.next()) {
                (None, _) => return Err(Error::NotBlocking),
                (Some(only), None) => {
                    essential.insert(only.clone());
                }
                _ => {}
            }
        }
        Ok(essential.len() == self.points.len())
    }

    /// True iff the full point set of some k-space lies inside this set.
    pub fn contains_k_space(&self, k: usize) -> Result<bool> {
        if k >= self.n {
            return Err(Error::CodimensionOutOfRange { k, n: self.n });
        }
        let space_size = gaussian_binomial(k + 1, 1, self.q);
        if (self.points.len() as u128) < space_size {
            return Ok(false);
        }
        for w in enumerate_subspaces(self.n, k + 1, self.q) {
            if subspace_point_vectors(&w).all(|v| {
                let coords = normalize(self.q, &v).expect("nonzero by construction");
                self.points.contains(&ProjectivePoint { coords })
            }) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// All nonzero vectors of a subspace up to scalars, one representative per
/// projective point (not yet normalized).
fn subspace_point_vectors(s: &Subspace) -> impl Iterator<Item = Vec<u64>> + '_ {
    let d = s.dim();
    let q = s.q();
    let n = s.ambient_dim();
    // coefficient vectors with first nonzero entry 1, counted odometer-style
    // over the trailing positions
    (0..d).flat_map(move |lead| {
        let tail = d - lead - 1;
        let total: u128 = (q as u128).pow(tail as u32);
        (0..total).map(move |mut idx| {
            let mut coeff = vec![0u64; d];
            coeff[lead] = 1;
            for slot in 0..tail {
                coeff[lead + 1 + slot] = (idx % q as u128) as u64;
                idx /= q as u128;
            }
            let mut v = vec![0u64; n];
            for (r, &c) in coeff.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for (slot, &b) in v.iter_mut().zip(s.basis().row(r)) {
                    *slot = add_mod(*slot, mul_mod(c, b, q), q);
                }
            }
            v
        })
    })
}

/// The point set PG(W) of a subspace W: exactly (q^d - 1)/(q - 1) points.
pub fn k_space_points(s: &Subspace) -> PointSet {
    let mut ps = PointSet::new(s.q(), s.ambient_dim()).expect("valid subspace modulus");
    for v in subspace_point_vectors(s) {
        ps.insert_vector(&v).expect("nonzero span vector");
    }
    debug_assert_eq!(
        ps.len() as u128,
        if s.dim() == 0 {
            0
        } else {
            gaussian_binomial(s.dim(), 1, s.q())
        }
    );
    ps
}

/// The projective triangle of PG(F_q^3): the 3(q+1)/2 points
/// {⟨(0,1,-s)⟩, ⟨(-s,0,1)⟩, ⟨(1,-s,0)⟩} where s ranges over the squares of
/// F_q^× together with 0. It blocks every line but contains none.
pub fn projective_triangle(q: u64) -> Result<PointSet> {
    field_linalg::validate_modulus(q)?;
    let mut squares0 = BTreeSet::new();
    squares0.insert(0u64);
    for a in 1..q {
        squares0.insert(mul_mod(a, a, q));
    }
    debug_assert_eq!(squares0.len() as u64, (q + 1) / 2);
    let mut ps = PointSet::new(q, 3)?;
    for &s in &squares0 {
        let neg = sub_mod(0, s, q);
        ps.insert_vector(&[0, 1, neg])?;
        ps.insert_vector(&[neg, 0, 1])?;
        ps.insert_vector(&[1, neg, 0])?;
    }
    debug_assert_eq!(ps.len() as u64, 3 * (q + 1) / 2);
    Ok(ps)
}

/// Cone with the given vertex subspace and base point set: the union of
/// PG(vertex) with PG(⟨vertex, P⟩) over all base points P. Base points must
/// lie outside the vertex.
pub fn cone(vertex: &Subspace, base: &PointSet) -> Result<PointSet> {
    if vertex.q() != base.q() {
        return Err(Error::ModulusMismatch(vertex.q(), base.q()));
    }
    if vertex.ambient_dim() != base.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: vertex.ambient_dim(),
            got: base.ambient_dim(),
        });
    }
    for p in base.iter() {
        if vertex.dim() > 0 && vertex.contains(p.coords()) {
            return Err(Error::DegenerateCone);
        }
    }
    let mut out = k_space_points(vertex);
    for p in base.iter() {
        let joined = vertex.extended(p.coords());
        for v in subspace_point_vectors(&joined) {
            out.insert_vector(&v)?;
        }
    }
    Ok(out)
}

/// The explicit second-smallest minimal k-blocking set of PG(F_q^n): the cone
/// whose vertex is spanned by the unit vectors in coordinates 4..k+2 and whose
/// base is the projective triangle in coordinates 1..3. Needs k >= 2 and
/// n >= k + 2; the result has (q^{k+1}-1)/(q-1) + q^{k-1}(q+1)/2 points.
pub fn second_smallest_blocking(n: usize, k: usize, q: u64) -> Result<PointSet> {
    field_linalg::validate_modulus(q)?;
    if k < 2 {
        return Err(Error::VertexWouldBeEmpty);
    }
    if n < k + 2 {
        return Err(Error::AmbientTooSmall { n, min: k + 2 });
    }
    let triangle = projective_triangle(q)?;
    let mut base = PointSet::new(q, n)?;
    for p in triangle.iter() {
        let mut v = vec![0u64; n];
        v[..3].copy_from_slice(p.coords());
        base.insert_vector(&v)?;
    }
    let vertex_rows: Vec<Vec<u64>> = (3..=k + 1)
        .map(|i| {
            let mut e = vec![0u64; n];
            e[i] = 1;
            e
        })
        .collect();
    let vertex = Subspace::from_vectors(q, &vertex_rows)?;
    debug_assert_eq!(vertex.dim(), k - 1);
    cone(&vertex, &base)
}

#[derive(Serialize, Deserialize)]
struct PointSetWire {
    q: u64,
    n: usize,
    points: Vec<Vec<u64>>,
}

impl Serialize for PointSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PointSetWire {
            q: self.q,
            n: self.n,
            points: self.points.iter().map(|p| p.coords.clone()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PointSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = PointSetWire::deserialize(deserializer)?;
        PointSet::from_vectors(wire.q, wire.n, wire.points).map_err(D::Error::custom)
    }
}
