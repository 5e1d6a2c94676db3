//! Geometric q-equivalence: two integer sets are equivalent when, embedded
//! over their common support, some element of PGL(n,q) carries one point set
//! onto the other. The search backtracks over images of a frame (a maximal
//! independent subset), extends by linearity, and verifies setwise equality.
//! Intended for desk scale (a few dozen points, n up to ~8).

use crate::bridge::ResidueSet;
use crate::error::{Error, Result};
use crate::field_linalg::{add_mod, mul_mod, FqMatrix, Subspace};
use crate::geometry::{k_space_points, PointSet, ProjectivePoint};

/// An element of PGL(n,q), represented by an invertible matrix; matrices
/// differing by a nonzero scalar act identically on points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectiveMap {
    matrix: FqMatrix,
}

impl ProjectiveMap {
    pub fn new(matrix: FqMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                got: matrix.cols(),
            });
        }
        if matrix.rank() != matrix.rows() {
            return Err(Error::SingularMatrix(matrix.q()));
        }
        Ok(ProjectiveMap { matrix })
    }

    pub fn identity(q: u64, n: usize) -> Result<Self> {
        Ok(ProjectiveMap {
            matrix: FqMatrix::identity(q, n)?,
        })
    }

    pub fn diagonal(q: u64, entries: &[u64]) -> Result<Self> {
        let n = entries.len();
        let mut m = FqMatrix::zeros(q, n, n)?;
        for (i, &d) in entries.iter().enumerate() {
            m.set_entry(i, i, d);
        }
        ProjectiveMap::new(m)
    }

    pub fn matrix(&self) -> &FqMatrix {
        &self.matrix
    }

    pub fn apply_point(&self, p: &ProjectivePoint) -> Result<ProjectivePoint> {
        if p.ambient_dim() != self.matrix.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.cols(),
                got: p.ambient_dim(),
            });
        }
        ProjectivePoint::from_vector(self.matrix.q(), &self.matrix.mat_vec(p.coords()))
    }

    /// Image of a point set; a bijection, so the size is preserved.
    pub fn apply(&self, ps: &PointSet) -> Result<PointSet> {
        if ps.q() != self.matrix.q() {
            return Err(Error::ModulusMismatch(ps.q(), self.matrix.q()));
        }
        let mut out = PointSet::new(ps.q(), ps.ambient_dim())?;
        for p in ps.iter() {
            out.insert(self.apply_point(p)?)?;
        }
        debug_assert_eq!(out.len(), ps.len());
        Ok(out)
    }

    pub fn inverse(&self) -> ProjectiveMap {
        ProjectiveMap {
            matrix: self.matrix.inverse().expect("invertible by construction"),
        }
    }
}

/// Embeds both sets into PG(F_q^n) over the union of their supports (sorted
/// ascending), zero-padding exponents of absent primes.
pub fn common_embedding(a: &ResidueSet, b: &ResidueSet) -> Result<(PointSet, PointSet)> {
    if a.q() != b.q() {
        return Err(Error::ModulusMismatch(a.q(), b.q()));
    }
    let mut support: Vec<u64> = a.support().to_vec();
    support.extend_from_slice(b.support());
    support.sort_unstable();
    support.dedup();
    Ok((a.embed_over(&support)?, b.embed_over(&support)?))
}

fn dot(q: u64, a: &[u64], b: &[u64]) -> u64 {
    let mut acc = 0;
    for (&x, &y) in a.iter().zip(b) {
        acc = add_mod(acc, mul_mod(x, y, q), q);
    }
    acc
}

/// Multiset of hyperplane intersection sizes, a cheap PGL invariant.
fn hyperplane_profile(ps: &PointSet) -> Vec<usize> {
    let q = ps.q();
    let duals = k_space_points(&Subspace::full(q, ps.ambient_dim()).expect("valid modulus"));
    let mut counts: Vec<usize> = duals
        .iter()
        .map(|phi| {
            ps.iter()
                .filter(|p| dot(q, phi.coords(), p.coords()) == 0)
                .count()
        })
        .collect();
    counts.sort_unstable();
    counts
}

fn span_rank(ps: &PointSet) -> usize {
    let rows: Vec<Vec<u64>> = ps.iter().map(|p| p.coords().to_vec()).collect();
    FqMatrix::from_rows(ps.q(), &rows)
        .expect("uniform dimensions")
        .rank()
}

/// Completes `vectors` (independent) to a basis of F_q^n with unit vectors;
/// returns the full column list.
fn complete_basis(q: u64, n: usize, vectors: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let mut span = Subspace::empty(q, n).expect("valid modulus");
    for v in vectors {
        span = span.extended(v);
    }
    debug_assert_eq!(span.dim(), vectors.len());
    let mut basis = vectors.to_vec();
    for j in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = vec![0u64; n];
        e[j] = 1;
        if !span.contains(&e) {
            span = span.extended(&e);
            basis.push(e);
        }
    }
    debug_assert_eq!(basis.len(), n);
    basis
}

struct MatchSearch<'a> {
    q: u64,
    n: usize,
    b: &'a PointSet,
    bpts: Vec<&'a ProjectivePoint>,
    frame_vectors: Vec<Vec<u64>>,
    /// coordinates of every a-point over the frame
    coeffs: Vec<Vec<u64>>,
    /// a-point indices that become checkable once frame image i is assigned
    ready_at: Vec<Vec<usize>>,
}

impl MatchSearch<'_> {
    fn image_vector(&self, coeff: &[u64], images: &[Vec<u64>]) -> Vec<u64> {
        let mut v = vec![0u64; self.n];
        for (j, &c) in coeff.iter().enumerate().take(images.len()) {
            if c == 0 {
                continue;
            }
            for (slot, &w) in v.iter_mut().zip(&images[j]) {
                *slot = add_mod(*slot, mul_mod(c, w, self.q), self.q);
            }
        }
        v
    }

    fn dfs(
        &self,
        depth: usize,
        images: &mut Vec<Vec<u64>>,
        used: &mut Vec<bool>,
        image_span: &Subspace,
    ) -> Option<Vec<Vec<u64>>> {
        if depth == self.frame_vectors.len() {
            return Some(images.clone());
        }
        for (bi, bp) in self.bpts.iter().enumerate() {
            if used[bi] || image_span.contains(bp.coords()) {
                continue;
            }
            // the global scalar lets us pin the first image's scale
            let lambda_max = if depth == 0 { 2 } else { self.q };
            for lambda in 1..lambda_max {
                let w: Vec<u64> = bp
                    .coords()
                    .iter()
                    .map(|&x| mul_mod(x, lambda, self.q))
                    .collect();
                images.push(w);
                let consistent = self.ready_at[depth].iter().all(|&pi| {
                    let img = self.image_vector(&self.coeffs[pi], images);
                    let point = ProjectivePoint::from_vector(self.q, &img)
                        .expect("image of a nonzero vector under an injective map");
                    self.b.contains(&point)
                });
                if consistent {
                    used[bi] = true;
                    let extended = image_span.extended(bp.coords());
                    if let Some(found) = self.dfs(depth + 1, images, used, &extended) {
                        return Some(found);
                    }
                    used[bi] = false;
                }
                images.pop();
            }
        }
        None
    }
}

/// Searches PGL(n,q) for a map with `apply(map, a) == b`. Returns a witness
/// if one exists. Deterministic: points and candidate images are scanned in
/// lexicographic order.
pub fn are_pgl_equivalent(a: &PointSet, b: &PointSet) -> Result<Option<ProjectiveMap>> {
    if a.q() != b.q() {
        return Err(Error::ModulusMismatch(a.q(), b.q()));
    }
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim(),
            got: b.ambient_dim(),
        });
    }
    let (q, n) = (a.q(), a.ambient_dim());
    if a.len() != b.len() {
        return Ok(None);
    }
    if a == b {
        return Ok(Some(ProjectiveMap::identity(q, n)?));
    }
    let rank = span_rank(a);
    if rank != span_rank(b) {
        return Ok(None);
    }
    if hyperplane_profile(a) != hyperplane_profile(b) {
        return Ok(None);
    }

    let apts: Vec<&ProjectivePoint> = a.iter().collect();
    let mut frame_indices = Vec::with_capacity(rank);
    let mut span = Subspace::empty(q, n)?;
    for (i, p) in apts.iter().enumerate() {
        if frame_indices.len() == rank {
            break;
        }
        if !span.contains(p.coords()) {
            span = span.extended(p.coords());
            frame_indices.push(i);
        }
    }
    let frame_vectors: Vec<Vec<u64>> = frame_indices
        .iter()
        .map(|&i| apts[i].coords().to_vec())
        .collect();

    // coordinates of each a-point over the frame: if E * F = R (RREF), a
    // point v in the row space of F is sum_i v[pivot_i] * R_i, so its frame
    // coordinates are (v[pivots]) * E
    let frame_mat = FqMatrix::from_rows(q, &frame_vectors)?;
    let (frame_rank, frame_rref, transform) = frame_mat.rref_with_transform();
    debug_assert_eq!(frame_rank, rank);
    let pivots: Vec<usize> = (0..rank)
        .map(|r| {
            (0..n)
                .find(|&c| frame_rref.entry(r, c).value() != 0)
                .expect("nonzero rref row")
        })
        .collect();
    let coeffs: Vec<Vec<u64>> = apts
        .iter()
        .map(|p| {
            let d: Vec<u64> = pivots.iter().map(|&c| p.coords()[c]).collect();
            (0..rank)
                .map(|j| {
                    let mut acc = 0;
                    for (i, &di) in d.iter().enumerate() {
                        acc = add_mod(acc, mul_mod(di, transform.entry(i, j).value(), q), q);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut ready_at = vec![Vec::new(); rank];
    for (i, c) in coeffs.iter().enumerate() {
        let depth = c.iter().rposition(|&x| x != 0).expect("nonzero coordinates");
        ready_at[depth].push(i);
    }

    let search = MatchSearch {
        q,
        n,
        b,
        bpts: b.iter().collect(),
        frame_vectors: frame_vectors.clone(),
        coeffs,
        ready_at,
    };
    let mut images = Vec::with_capacity(rank);
    let mut used = vec![false; b.len()];
    let empty = Subspace::empty(q, n)?;
    let Some(images) = search.dfs(0, &mut images, &mut used, &empty) else {
        return Ok(None);
    };

    // extend the frame map to an invertible matrix: M * F_ext = V_ext
    let f_ext = complete_basis(q, n, &frame_vectors);
    let v_ext = complete_basis(q, n, &images);
    let f_cols = FqMatrix::from_rows(q, &f_ext)?.transpose();
    let v_cols = FqMatrix::from_rows(q, &v_ext)?.transpose();
    let matrix = v_cols.mat_mul(&f_cols.inverse().expect("basis matrix"));
    let map = ProjectiveMap::new(matrix)?;
    assert_eq!(&map.apply(a)?, b, "witness must carry A onto B exactly");
    Ok(Some(map))
}

/// Geometric q-equivalence of two integer sets: common embedding followed by
/// the PGL point-set search.
pub fn geometric_q_equivalent(a: &ResidueSet, b: &ResidueSet) -> Result<Option<ProjectiveMap>> {
    let (pa, pb) = common_embedding(a, b)?;
    are_pgl_equivalent(&pa, &pb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_linalg::enumerate_subspaces;
    use crate::oracle::decide;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(elements: &[i64], q: u64) -> ResidueSet {
        ResidueSet::from_integers(elements, q).unwrap()
    }

    #[test]
    fn identity_fixes_sets() {
        let ps = k_space_points(&Subspace::full(3, 3).unwrap());
        let id = ProjectiveMap::identity(3, 3).unwrap();
        assert_eq!(id.apply(&ps).unwrap(), ps);
    }

    #[test]
    fn diagonal_fixes_full_line_setwise() {
        let ps = k_space_points(&Subspace::full(3, 2).unwrap());
        let diag = ProjectiveMap::diagonal(3, &[2, 1]).unwrap();
        assert_eq!(diag.apply(&ps).unwrap(), ps);
    }

    #[test]
    fn swap_fixes_symmetric_point() {
        let swap = ProjectiveMap::new(
            FqMatrix::from_rows(3, &[vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 1]]).unwrap(),
        )
        .unwrap();
        let p = ProjectivePoint::from_vector(3, &[1, 2, 0]).unwrap();
        // (2,1,0) normalizes back to (1,2,0)
        assert_eq!(swap.apply_point(&p).unwrap(), p);
    }

    #[test]
    fn singular_matrices_are_rejected() {
        let m = FqMatrix::from_rows(3, &[vec![1, 1], vec![2, 2]]).unwrap();
        assert_eq!(ProjectiveMap::new(m).unwrap_err(), Error::SingularMatrix(3));
    }

    #[test]
    fn equivalent_to_itself_via_identity() {
        let ps = crate::geometry::projective_triangle(3).unwrap();
        let w = are_pgl_equivalent(&ps, &ps).unwrap().unwrap();
        assert_eq!(w.matrix(), &FqMatrix::identity(3, 3).unwrap());
    }

    #[test]
    fn distinct_lines_are_equivalent() {
        let l1 = k_space_points(
            &Subspace::from_vectors(3, &[vec![1, 0, 0], vec![0, 1, 0]]).unwrap(),
        );
        let l2 = k_space_points(
            &Subspace::from_vectors(3, &[vec![1, 0, 1], vec![0, 1, 2]]).unwrap(),
        );
        let w = are_pgl_equivalent(&l1, &l2).unwrap().expect("lines are equivalent");
        assert_eq!(w.apply(&l1).unwrap(), l2);
        // symmetry: the inverse witnesses the other direction
        assert_eq!(w.inverse().apply(&l2).unwrap(), l1);
        // deterministic scan order makes the witness reproducible
        let again = are_pgl_equivalent(&l1, &l2).unwrap().unwrap();
        assert_eq!(again.matrix(), w.matrix());
    }

    #[test]
    fn rank_screen_rejects() {
        let line = k_space_points(
            &Subspace::from_vectors(3, &[vec![1, 0, 0], vec![0, 1, 0]]).unwrap(),
        );
        let spanning =
            PointSet::from_vectors(3, 3, [vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 1]])
                .unwrap();
        assert_eq!(line.len(), spanning.len());
        assert!(are_pgl_equivalent(&line, &spanning).unwrap().is_none());
    }

    #[test]
    fn block_swap_equivalence() {
        let a = set(&[2, 3, 6, 18], 3);
        let b = set(&[5, 7, 35, 245], 3);
        let w = geometric_q_equivalent(&a, &b).unwrap().expect("equivalent");
        let (pa, pb) = common_embedding(&a, &b).unwrap();
        assert_eq!(pa.ambient_dim(), 4);
        assert_eq!(w.apply(&pa).unwrap(), pb);
        // membership transports across the equivalence
        assert_eq!(decide(&a, 1).unwrap().verdict, decide(&b, 1).unwrap().verdict);
    }

    #[test]
    fn common_embedding_pads_disjoint_supports() {
        let a = set(&[2, 3, 6, 18], 3);
        let b = set(&[5, 7, 35, 245], 3);
        let (pa, pb) = common_embedding(&a, &b).unwrap();
        for p in pa.iter() {
            assert_eq!(&p.coords()[2..], &[0, 0]);
        }
        for p in pb.iter() {
            assert_eq!(&p.coords()[..2], &[0, 0]);
        }
    }

    #[test]
    fn common_embedding_same_support_is_pi_q() {
        let a = set(&[2, 3, 6], 3);
        let b = set(&[2, 9, 12], 3);
        assert_eq!(a.support(), b.support());
        let (pa, pb) = common_embedding(&a, &b).unwrap();
        assert_eq!(pa, a.pi_q().unwrap());
        assert_eq!(pb, b.pi_q().unwrap());
    }

    #[test]
    fn minimum_sets_with_different_supports_are_equivalent() {
        // the standard minimum member over {2,3,5} vs the realized plane over
        // {2,3,5,7}: both are 13-point planes up to PGL
        let standard = crate::bridge::realize(
            &k_space_points(&Subspace::full(3, 3).unwrap()),
            &[2, 3, 5],
        )
        .unwrap();
        let standard: Vec<i64> = standard
            .iter()
            .map(|v| u64::try_from(v.clone()).unwrap() as i64)
            .collect();
        let w = Subspace::from_vectors(
            3,
            &[vec![1, 0, 0, 0], vec![0, 1, 1, 1], vec![0, 1, 0, 2]],
        )
        .unwrap();
        let plane = crate::bridge::realize(&k_space_points(&w), &[2, 3, 5, 7]).unwrap();
        let plane: Vec<i64> = plane
            .iter()
            .map(|v| u64::try_from(v.clone()).unwrap() as i64)
            .collect();
        let a = set(&standard, 3);
        let b = set(&plane, 3);
        let witness = geometric_q_equivalent(&a, &b).unwrap();
        assert!(witness.is_some());
    }

    #[test]
    fn non_plane_example_is_not_equivalent_to_minimum() {
        let standard = crate::bridge::realize(
            &k_space_points(&Subspace::full(3, 3).unwrap()),
            &[2, 3, 5],
        )
        .unwrap();
        let standard: Vec<i64> = standard
            .iter()
            .map(|v| u64::try_from(v.clone()).unwrap() as i64)
            .collect();
        let a = set(&standard, 3);
        let b = set(&crate::test_fixtures::EXAMPLE_13, 3);
        // 13 points vs 12 points: rejected before any search
        assert!(geometric_q_equivalent(&a, &b).unwrap().is_none());
    }

    #[test]
    fn scaling_exponents_is_equivalent_with_diagonal_witness() {
        let rs = set(&[2, 3, 6, 18, 12], 3);
        let b = [2u64, 2];
        let scaled = rs.scale_prime_exponents(&b).unwrap();
        let diag = ProjectiveMap::diagonal(3, &b).unwrap();
        assert_eq!(
            scaled.pi_q().unwrap(),
            diag.apply(&rs.pi_q().unwrap()).unwrap()
        );
        assert!(geometric_q_equivalent(&rs, &scaled).unwrap().is_some());
    }

    #[test]
    fn random_pgl_action_preserves_blocking() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let triangle = crate::geometry::projective_triangle(3).unwrap();
        let line = k_space_points(
            &Subspace::from_vectors(3, &[vec![1, 0, 2], vec![0, 1, 1]]).unwrap(),
        );
        for _ in 0..25 {
            let m = loop {
                let rows: Vec<Vec<u64>> =
                    (0..3).map(|_| (0..3).map(|_| rng.gen_range(0..3)).collect()).collect();
                let m = FqMatrix::from_rows(3, &rows).unwrap();
                if m.rank() == 3 {
                    break ProjectiveMap::new(m).unwrap();
                }
            };
            for ps in [&triangle, &line] {
                let moved = m.apply(ps).unwrap();
                assert_eq!(
                    moved.is_k_blocking(1).unwrap(),
                    ps.is_k_blocking(1).unwrap()
                );
            }
        }
    }

    #[test]
    fn every_plane_of_pg34_is_equivalent_to_a_coordinate_plane() {
        let coordinate = k_space_points(
            &Subspace::from_vectors(3, &[vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 1, 0]])
                .unwrap(),
        );
        let mut count = 0;
        for w in enumerate_subspaces(4, 3, 3).step_by(7) {
            let ps = k_space_points(&w);
            let witness = are_pgl_equivalent(&coordinate, &ps).unwrap();
            let witness = witness.expect("k-spaces of equal dimension are equivalent");
            assert_eq!(witness.apply(&coordinate).unwrap(), ps);
            count += 1;
        }
        assert!(count >= 5);
    }
}
