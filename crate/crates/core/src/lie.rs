//! Lie-theoretic data of `sl(m, R)` and abstract root systems of types A-D.
//!
//! Conventions: the tangent space at the base point is the space of traceless
//! symmetric matrices with `<U, V> = tr(UV)`. The Cartan subspace is the
//! traceless diagonal matrices; the positive root `a_ij` (`i < j`) evaluates
//! `v` to `v_ii - v_jj`. Frame coordinates list the Cartan basis first, then
//! one coordinate per positive root in lexicographic `(i, j)` order.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance below which `|a(v)|` counts as a vanishing root on unit vectors.
pub const SINGULAR_TOL: f64 = 1e-9;

/// Largest matrix size accepted by [`build_cartan_frame`].
pub const MAX_M: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    A,
    B,
    C,
    D,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Family::A),
            "B" | "b" => Ok(Family::B),
            "C" | "c" => Ok(Family::C),
            "D" | "d" => Ok(Family::D),
            other => Err(Error::RootSystem {
                family: other.to_string(),
                rank: 0,
                reason: "unknown family".into(),
            }),
        }
    }
}

/// A crystallographic root system in its standard integer realization.
///
/// Type `A_r` lives in the sum-zero hyperplane of `Z^{r+1}`; types B, C, D
/// live in `Z^r`. `D_2` is accepted and is the reducible system `A_1 x A_1`.
#[derive(Clone, Debug, Serialize)]
pub struct RootSystem {
    pub family: Family,
    pub rank: usize,
    /// Positive roots first, then their negatives in the same order.
    pub roots: Vec<Vec<i64>>,
    /// Multiplicity per positive root (all 1 in these realizations).
    pub multiplicities: Vec<usize>,
}

pub fn root_system(family: Family, rank: usize) -> Result<RootSystem> {
    let invalid = |reason: &str| Error::RootSystem {
        family: family.to_string(),
        rank,
        reason: reason.to_string(),
    };
    if rank == 0 {
        return Err(invalid("rank must be positive"));
    }
    if family == Family::D && rank < 2 {
        return Err(invalid("type D needs rank >= 2"));
    }
    let dim = if family == Family::A { rank + 1 } else { rank };
    let unit = |i: usize| {
        let mut v = vec![0i64; dim];
        v[i] = 1;
        v
    };
    let combine = |i: usize, j: usize, s: i64| {
        let mut v = vec![0i64; dim];
        v[i] = 1;
        v[j] = s;
        v
    };
    let mut positive = Vec::new();
    for i in 0..dim {
        for j in (i + 1)..dim {
            positive.push(combine(i, j, -1));
            if family != Family::A {
                positive.push(combine(i, j, 1));
            }
        }
        match family {
            Family::B => positive.push(unit(i)),
            Family::C => positive.push(unit(i).into_iter().map(|x| 2 * x).collect()),
            _ => {}
        }
    }
    let negatives: Vec<Vec<i64>> = positive
        .iter()
        .map(|r| r.iter().map(|x| -x).collect())
        .collect();
    let count = positive.len();
    let mut roots = positive;
    roots.extend(negatives);
    Ok(RootSystem {
        family,
        rank,
        roots,
        multiplicities: vec![1; count],
    })
}

impl RootSystem {
    pub fn ambient_dim(&self) -> usize {
        self.roots[0].len()
    }

    pub fn positive_roots(&self) -> &[Vec<i64>] {
        &self.roots[..self.multiplicities.len()]
    }

    pub fn num_positive(&self) -> usize {
        self.multiplicities.len()
    }

    /// `a(v)` for the positive root with index `idx`.
    pub fn eval(&self, idx: usize, v: &[f64]) -> f64 {
        self.roots[idx]
            .iter()
            .zip(v)
            .map(|(&a, &x)| a as f64 * x)
            .sum()
    }

    /// Checks closure under negation and under reflections `s_a(b)`.
    pub fn is_crystallographic(&self) -> bool {
        let set: std::collections::HashSet<&Vec<i64>> = self.roots.iter().collect();
        for a in &self.roots {
            let neg: Vec<i64> = a.iter().map(|x| -x).collect();
            if !set.contains(&neg) {
                return false;
            }
            let aa: i64 = a.iter().map(|x| x * x).sum();
            for b in &self.roots {
                let ab: i64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                if (2 * ab) % aa != 0 {
                    return false;
                }
                let c = 2 * ab / aa;
                let refl: Vec<i64> = b.iter().zip(a).map(|(y, x)| y - c * x).collect();
                if !set.contains(&refl) {
                    return false;
                }
            }
        }
        true
    }

    /// Unit vector proportional to the sum of positive roots.
    pub fn chamber_barycenter(&self) -> ChamberVector {
        let mut sum = vec![0.0; self.ambient_dim()];
        for r in self.positive_roots() {
            for (s, &x) in sum.iter_mut().zip(r) {
                *s += x as f64;
            }
        }
        ChamberVector::new(self, DVector::from_vec(sum).normalize())
    }

    /// Indices of the positive roots vanishing on `v` within `tol`.
    pub fn vanishing(&self, v: &[f64], tol: f64) -> Vec<usize> {
        (0..self.num_positive())
            .filter(|&i| self.eval(i, v).abs() <= tol)
            .collect()
    }

    fn index_of(&self, root: &[i64]) -> Option<usize> {
        self.roots.iter().position(|r| r.as_slice() == root)
    }
}

/// Exact rank of a set of integer vectors (fraction-free elimination).
pub fn integer_rank(vectors: &[&[i64]]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols = vectors[0].len();
    let mut a: Vec<Vec<i128>> = vectors
        .iter()
        .map(|v| v.iter().map(|&x| x as i128).collect())
        .collect();
    let rows = a.len();
    let mut rank = 0;
    let mut prev = 1i128;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(rank, p);
        for i in (rank + 1)..rows {
            for j in (c + 1)..cols {
                a[i][j] = (a[rank][c] * a[i][j] - a[i][c] * a[rank][j]) / prev;
            }
            a[i][c] = 0;
        }
        prev = a[rank][c];
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// A vector of the Cartan subspace together with its singular data.
///
/// `coords` are ambient coordinates of the owning root system; for `sl(m)`
/// they are the diagonal entries of a traceless diagonal matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChamberVector {
    pub coords: DVector<f64>,
    pub unit: bool,
    /// Positive roots with `|a(v)| <= SINGULAR_TOL`.
    pub vanishing: Vec<usize>,
}

impl ChamberVector {
    pub fn new(rs: &RootSystem, coords: DVector<f64>) -> Self {
        let unit = (coords.norm() - 1.0).abs() <= 1e-12;
        let vanishing = rs.vanishing(coords.as_slice(), SINGULAR_TOL);
        ChamberVector {
            coords,
            unit,
            vanishing,
        }
    }

    pub fn is_regular(&self) -> bool {
        self.vanishing.is_empty()
    }

    pub fn as_diagonal(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.coords)
    }

    /// Angle to another vector, both treated as directions.
    pub fn angle_to(&self, other: &ChamberVector) -> f64 {
        let c = self.coords.dot(&other.coords) / (self.coords.norm() * other.coords.norm());
        c.clamp(-1.0, 1.0).acos()
    }
}

/// The positive system used to place `v` in a closed Weyl chamber: roots
/// positive on `v`, with ties on the walls of `v` broken by a fixed regular
/// vector.
fn positive_system_at(rs: &RootSystem, v: &[f64]) -> Vec<Vec<i64>> {
    let d = rs.ambient_dim();
    let w: Vec<f64> = (0..d).map(|i| (d - i) as f64 + 0.5).collect();
    rs.positive_roots()
        .iter()
        .map(|r| {
            let val: f64 = r.iter().zip(v).map(|(&a, &x)| a as f64 * x).sum();
            let positive = if val.abs() > SINGULAR_TOL {
                val > 0.0
            } else {
                r.iter().zip(&w).map(|(&a, &x)| a as f64 * x).sum::<f64>() > 0.0
            };
            if positive {
                r.clone()
            } else {
                r.iter().map(|x| -x).collect()
            }
        })
        .collect()
}

/// Simple roots of a positive system: the positive roots that are not a sum
/// of two positive roots.
fn simple_roots(positive: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let set: std::collections::HashSet<&Vec<i64>> = positive.iter().collect();
    positive
        .iter()
        .filter(|a| {
            !positive.iter().any(|b| {
                let rest: Vec<i64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
                set.contains(&rest)
            })
        })
        .cloned()
        .collect()
}

/// Orthogonal projection of `v` onto the common kernel of the given roots.
fn project_to_kernel(v: &DVector<f64>, roots: &[&Vec<i64>]) -> DVector<f64> {
    if roots.is_empty() {
        return v.clone();
    }
    let a = DMatrix::from_fn(v.len(), roots.len(), |i, j| roots[j][i] as f64);
    let gram = a.transpose() * &a;
    let rhs = a.transpose() * v;
    let coef = gram
        .cholesky()
        .map(|c| c.solve(&rhs))
        .expect("simple roots are linearly independent");
    v - a * coef
}

/// The most singular unit vector within angle `rho` of `v`, searched over the
/// faces of the closed Weyl chamber containing `v`.
///
/// Faces are indexed by subsets of simple roots containing those that vanish
/// on `v`. The winner maximizes the number of vanishing positive roots
/// (weighted by multiplicity); ties go to the smaller angle, then to the
/// earlier subset in enumeration order.
pub fn maximally_singular_near(rs: &RootSystem, v: &ChamberVector, rho: f64) -> ChamberVector {
    let unit_v = v.coords.normalize();
    let positive = positive_system_at(rs, unit_v.as_slice());
    let simple = simple_roots(&positive);
    let forced: Vec<bool> = simple
        .iter()
        .map(|a| {
            let val: f64 = a.iter().zip(unit_v.iter()).map(|(&x, &y)| x as f64 * y).sum();
            val.abs() <= SINGULAR_TOL
        })
        .collect();
    let weight = |c: &ChamberVector| -> usize {
        c.vanishing.iter().map(|&i| rs.multiplicities[i]).sum()
    };
    let mut best = ChamberVector::new(rs, unit_v.clone());
    let mut best_key = (weight(&best), 0.0f64);
    let s = simple.len();
    for mask in 1u64..(1u64 << s) {
        if (0..s).any(|i| forced[i] && mask & (1 << i) == 0) {
            continue;
        }
        let chosen: Vec<&Vec<i64>> = (0..s).filter(|i| mask & (1 << i) != 0).map(|i| &simple[i]).collect();
        let p = project_to_kernel(&unit_v, &chosen);
        let norm = p.norm();
        if norm < 1e-12 {
            continue;
        }
        let cand = ChamberVector::new(rs, p / norm);
        let angle = cand.coords.dot(&unit_v).clamp(-1.0, 1.0).acos();
        if angle > rho {
            continue;
        }
        let key = (weight(&cand), angle);
        if key.0 > best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
            best = cand;
            best_key = key;
        }
    }
    best
}

/// Projection of `v` onto the nearest wall of its closed Weyl chamber,
/// normalized. Walls are the kernels of the simple roots; ties go to the
/// earlier simple root.
pub fn nearest_wall_projection(rs: &RootSystem, v: &ChamberVector) -> ChamberVector {
    let unit_v = v.coords.normalize();
    let positive = positive_system_at(rs, unit_v.as_slice());
    let mut best: Option<(f64, DVector<f64>)> = None;
    for a in simple_roots(&positive) {
        let p = project_to_kernel(&unit_v, &[&a]);
        let norm = p.norm();
        if norm < 1e-12 {
            continue;
        }
        let p = p / norm;
        let angle = p.dot(&unit_v).clamp(-1.0, 1.0).acos();
        if best.as_ref().is_none_or(|(b, _)| angle < *b) {
            best = Some((angle, p));
        }
    }
    match best {
        Some((_, p)) => ChamberVector::new(rs, p),
        None => ChamberVector::new(rs, unit_v),
    }
}

/// One positive root `a_ij` of `sl(m)` with its symmetric and antisymmetric
/// unit basis vectors.
#[derive(Clone, Debug)]
pub struct RootBlock {
    pub i: usize,
    pub j: usize,
    /// `(E_ij + E_ji) / sqrt 2`.
    pub p: DMatrix<f64>,
    /// `(E_ij - E_ji) / sqrt 2`.
    pub k: DMatrix<f64>,
}

/// Adapted orthonormal basis of the traceless symmetric matrices.
#[derive(Clone, Debug)]
pub struct CartanFrame {
    pub m: usize,
    /// Orthonormal traceless diagonal matrices (Helmert basis).
    pub a_basis: Vec<DMatrix<f64>>,
    pub blocks: Vec<RootBlock>,
    pub roots: RootSystem,
}

pub fn build_cartan_frame(m: usize) -> Result<CartanFrame> {
    if !(2..=MAX_M).contains(&m) {
        return Err(Error::Size { m, min: 2, max: MAX_M });
    }
    let a_basis = (1..m)
        .map(|k| {
            let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
            let mut d = DMatrix::zeros(m, m);
            for i in 0..k {
                d[(i, i)] = scale;
            }
            d[(k, k)] = -(k as f64) * scale;
            d
        })
        .collect();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut blocks = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let mut p = DMatrix::zeros(m, m);
            let mut k = DMatrix::zeros(m, m);
            p[(i, j)] = s;
            p[(j, i)] = s;
            k[(i, j)] = s;
            k[(j, i)] = -s;
            blocks.push(RootBlock { i, j, p, k });
        }
    }
    Ok(CartanFrame {
        m,
        a_basis,
        blocks,
        roots: root_system(Family::A, m - 1)?,
    })
}

impl CartanFrame {
    pub fn rank(&self) -> usize {
        self.m - 1
    }

    pub fn dim(&self) -> usize {
        self.a_basis.len() + self.blocks.len()
    }

    /// All basis matrices in coordinate order.
    pub fn basis(&self) -> Vec<&DMatrix<f64>> {
        self.a_basis.iter().chain(self.blocks.iter().map(|b| &b.p)).collect()
    }

    /// Coordinates of a traceless symmetric matrix in this basis.
    pub fn coords(&self, u: &DMatrix<f64>) -> DVector<f64> {
        let m = self.m;
        let r = self.rank();
        let mut c = DVector::zeros(self.dim());
        // Helmert coordinates via running prefix sums of the diagonal.
        let mut prefix = 0.0;
        for k in 1..m {
            prefix += u[(k - 1, k - 1)];
            c[k - 1] = (prefix - k as f64 * u[(k, k)]) / ((k * (k + 1)) as f64).sqrt();
        }
        let s = std::f64::consts::SQRT_2;
        for (idx, b) in self.blocks.iter().enumerate() {
            c[r + idx] = s * 0.5 * (u[(b.i, b.j)] + u[(b.j, b.i)]);
        }
        c
    }

    /// Traceless symmetric matrix with the given coordinates.
    pub fn matrix(&self, c: &DVector<f64>) -> DMatrix<f64> {
        let m = self.m;
        let r = self.rank();
        let mut u = DMatrix::zeros(m, m);
        for k in 1..m {
            let scale = c[k - 1] / ((k * (k + 1)) as f64).sqrt();
            for i in 0..k {
                u[(i, i)] += scale;
            }
            u[(k, k)] -= k as f64 * scale;
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (idx, b) in self.blocks.iter().enumerate() {
            u[(b.i, b.j)] = s * c[r + idx];
            u[(b.j, b.i)] = s * c[r + idx];
        }
        u
    }

    /// Chamber vector from a traceless diagonal matrix (or its diagonal).
    pub fn chamber_vector(&self, diag: DVector<f64>) -> ChamberVector {
        ChamberVector::new(&self.roots, diag)
    }

    /// Serializes the basis matrices (row-major) as a JSON document.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc {
            m: usize,
            a_basis: Vec<Vec<f64>>,
            p_blocks: Vec<(usize, usize, Vec<f64>)>,
            k_blocks: Vec<(usize, usize, Vec<f64>)>,
        }
        let row_major = |a: &DMatrix<f64>| a.transpose().as_slice().to_vec();
        let doc = Doc {
            m: self.m,
            a_basis: self.a_basis.iter().map(row_major).collect(),
            p_blocks: self.blocks.iter().map(|b| (b.i, b.j, row_major(&b.p))).collect(),
            k_blocks: self.blocks.iter().map(|b| (b.i, b.j, row_major(&b.k))).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }
}

/// Result of checking the bracket identity and orthonormality of a frame.
#[derive(Clone, Debug, Serialize)]
pub struct RootActionReport {
    pub max_bracket_residual: f64,
    pub max_transfer_residual: f64,
    pub max_gram_residual: f64,
    pub tolerance: f64,
    pub ok: bool,
    pub violations: Vec<String>,
}

/// Checks `[u, v] = -a(v) (I - t)(I + t)^{-1} u` for every root block, with
/// `t X = -X^T`, on the Cartan basis and a few fixed combinations of it.
///
/// The image `(I - t)(I + t)^{-1} u` is computed independently from `u` by
/// lifting it to the root space `g_a` (strictly upper entry at `(i, j)`) and
/// compared with the stored symmetric block, so a mis-scaled block shows up
/// in either check.
pub fn verify_root_action(frame: &CartanFrame) -> RootActionReport {
    let tol = 1e-12;
    let m = frame.m;
    let mut samples: Vec<DMatrix<f64>> = frame.a_basis.clone();
    let total: DMatrix<f64> = frame.a_basis.iter().fold(DMatrix::zeros(m, m), |acc, a| acc + a);
    samples.push(total);
    let alternating = frame
        .a_basis
        .iter()
        .enumerate()
        .fold(DMatrix::zeros(m, m), |acc, (i, a)| acc + a * if i % 2 == 0 { 0.75 } else { -1.25 });
    samples.push(alternating);

    let mut violations = Vec::new();
    let mut bracket = 0.0f64;
    let mut transfer = 0.0f64;
    for (idx, b) in frame.blocks.iter().enumerate() {
        // Lift to g_a and push back through (I - t).
        let mut lift = DMatrix::zeros(m, m);
        lift[(b.i, b.j)] = b.k[(b.i, b.j)];
        let lift_check = (&lift - lift.transpose() - &b.k).amax();
        let image = &lift + lift.transpose();
        let t = (&image - &b.p).amax().max(lift_check);
        transfer = transfer.max(t);
        if t > tol {
            violations.push(format!("block {idx} ({}, {}): transfer residual {t:e}", b.i, b.j));
        }
        for v in &samples {
            let alpha = v[(b.i, b.i)] - v[(b.j, b.j)];
            let lhs = &b.k * v - v * &b.k;
            let res = (&lhs + &image * alpha).amax().max((&lhs + &b.p * alpha).amax());
            bracket = bracket.max(res);
            if res > tol {
                violations.push(format!("block {idx} ({}, {}): bracket residual {res:e}", b.i, b.j));
            }
        }
    }
    let basis = frame.basis();
    let mut gram = 0.0f64;
    for (a, x) in basis.iter().enumerate() {
        if x.trace().abs() > tol || (*x - x.transpose()).amax() > tol {
            violations.push(format!("basis element {a} is not traceless symmetric"));
        }
        for (b, y) in basis.iter().enumerate().skip(a) {
            let ip = (*x * *y).trace();
            let want = if a == b { 1.0 } else { 0.0 };
            gram = gram.max((ip - want).abs());
        }
    }
    if gram > tol {
        violations.push(format!("Gram matrix deviates from identity by {gram:e}"));
    }
    violations.dedup();
    RootActionReport {
        max_bracket_residual: bracket,
        max_transfer_residual: transfer,
        max_gram_residual: gram,
        tolerance: tol,
        ok: violations.is_empty(),
        violations,
    }
}

/// Unit vector proportional to the sum of the positive roots of `sl(m)`.
pub fn chamber_barycenter(frame: &CartanFrame) -> ChamberVector {
    frame.roots.chamber_barycenter()
}

/// Direct sum of the symmetric root blocks on which `v_star` does not vanish.
#[derive(Clone, Debug, Serialize)]
pub struct RootSubspace {
    /// Positive-root indices (frame block indices) in the sum.
    pub roots: Vec<usize>,
}

impl RootSubspace {
    pub fn dim(&self) -> usize {
        self.roots.len()
    }

    /// Basis as columns of frame coordinates (each a unit coordinate vector).
    pub fn coords_basis(&self, frame: &CartanFrame) -> DMatrix<f64> {
        let r = frame.rank();
        let mut b = DMatrix::zeros(frame.dim(), self.roots.len());
        for (col, &idx) in self.roots.iter().enumerate() {
            b[(r + idx, col)] = 1.0;
        }
        b
    }

    pub fn matrices<'a>(&self, frame: &'a CartanFrame) -> Vec<&'a DMatrix<f64>> {
        self.roots.iter().map(|&i| &frame.blocks[i].p).collect()
    }
}

pub fn orthogonal_root_sum(frame: &CartanFrame, v_star: &ChamberVector) -> RootSubspace {
    RootSubspace {
        roots: (0..frame.blocks.len())
            .filter(|i| !v_star.vanishing.contains(i))
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SlConstants {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    /// `n - r + 2`, the smallest degree of the bounded regime.
    pub threshold: usize,
    pub splitting_rank: usize,
}

pub fn sl_constants(m: usize) -> SlConstants {
    let n = m * (m + 1) / 2 - 1;
    let r = m - 1;
    SlConstants {
        m,
        n,
        r,
        threshold: n - r + 2,
        splitting_rank: m * (m - 1) / 2,
    }
}

/// Index of the positive root `a_ij` in the frame ordering, for `i < j`.
pub fn root_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * (2 * m - i - 1) / 2 + (j - i - 1)
}

impl RootSystem {
    /// Index of a positive root given by its integer vector, if present.
    pub fn positive_index(&self, root: &[i64]) -> Option<usize> {
        self.index_of(root).filter(|&i| i < self.num_positive())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_index_matches_block_order() {
        let f = build_cartan_frame(6).unwrap();
        for (idx, b) in f.blocks.iter().enumerate() {
            assert_eq!(root_index(6, b.i, b.j), idx);
        }
    }

    #[test]
    fn coords_agree_with_trace_pairing() {
        let f = build_cartan_frame(5).unwrap();
        let c = DVector::from_fn(f.dim(), |i, _| (i as f64 * 0.37).sin());
        let u = f.matrix(&c);
        assert!(u.trace().abs() < 1e-14);
        let direct = DVector::from_iterator(f.dim(), f.basis().iter().map(|b| (*b * &u).trace()));
        assert!((f.coords(&u) - &direct).amax() < 1e-14);
        assert!((direct - c).amax() < 1e-14);
    }

    #[test]
    fn integer_rank_small_cases() {
        let a: [&[i64]; 3] = [&[1, -1, 0], &[0, 1, -1], &[1, 0, -1]];
        assert_eq!(integer_rank(&a), 2);
        let b: [&[i64]; 2] = [&[2, 0], &[0, 3]];
        assert_eq!(integer_rank(&b), 2);
    }

    #[test]
    fn simple_roots_of_a3_standard_chamber() {
        let rs = root_system(Family::A, 3).unwrap();
        let positive = positive_system_at(&rs, &[3.0, 1.0, -1.0, -3.0]);
        let simple = simple_roots(&positive);
        assert_eq!(simple, vec![vec![1, -1, 0, 0], vec![0, 1, -1, 0], vec![0, 0, 1, -1]]);
    }
}
