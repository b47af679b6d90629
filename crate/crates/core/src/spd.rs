//! The SPD model of `SL(m, R) / SO(m)`: unit-determinant symmetric positive
//! definite matrices with the action `g . p = g p g^T` and base point `I`.
//!
//! Tangent vectors at a point `p` are carried to the base point through
//! `p^{1/2}`, so `exp_at(p, U) = p^{1/2} e^U p^{1/2}` and every tangent
//! computation uses the single [`CartanFrame`] at the identity.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::forms::{FormLabel, QuadraticForm};
use crate::lie::{build_cartan_frame, chamber_barycenter, CartanFrame, ChamberVector};
use crate::linalg::{
    expm_sym, haar_special_orthogonal, logm_spd, qr_positive, sqrt_and_inv_sqrt, symmetrize,
    symmetry_residual,
};

/// Traceless symmetric matrix in the canonical chart at the base point.
pub type Tangent = DMatrix<f64>;

/// Condition number above which [`iwasawa_kan`] refuses to factor.
pub const MAX_CONDITION: f64 = 1e12;

/// Calibrated factor in `B(x, k b(oo)) = BUSEMANN_SCALE * <H, b>` where `H` is
/// the Cartan part of the Iwasawa factorization of `x^{-1/2} k`. Fixed by
/// comparing against [`busemann_oracle`]; points `p = e^{2Y}` lie at distance
/// `2|Y|` in this model, which is where the 2 comes from.
pub const BUSEMANN_SCALE: f64 = 2.0;

/// A point of the symmetric space, cached with its square roots.
#[derive(Clone, Debug)]
pub struct SpdPoint {
    mat: DMatrix<f64>,
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
}

impl Serialize for SpdPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self.mat.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }
}

impl SpdPoint {
    pub fn identity(m: usize) -> Self {
        let i = DMatrix::identity(m, m);
        SpdPoint {
            mat: i.clone(),
            sqrt: i.clone(),
            inv_sqrt: i,
        }
    }

    /// Validates a matrix against the point invariants without modifying it.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidPoint("matrix is not square".into()));
        }
        let asym = symmetry_residual(&mat);
        if asym > 1e-10 {
            return Err(Error::InvalidPoint(format!("symmetry residual {asym:e}")));
        }
        let det = mat.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPoint(format!("determinant {det}")));
        }
        Self::from_spd(symmetrize(&mat))
    }

    /// Symmetrizes and rescales to unit determinant.
    pub fn normalized(mat: &DMatrix<f64>) -> Result<Self> {
        let s = symmetrize(mat);
        let (vals, _) = crate::linalg::sym_eigen(&s);
        if vals[0] <= 0.0 {
            return Err(Error::InvalidPoint(format!("min eigenvalue {:e}", vals[0])));
        }
        let logdet: f64 = vals.iter().map(|v| v.ln()).sum();
        let scale = (-logdet / s.nrows() as f64).exp();
        Self::from_spd(s * scale)
    }

    fn from_spd(mat: DMatrix<f64>) -> Result<Self> {
        let (sqrt, inv_sqrt) = sqrt_and_inv_sqrt(&mat)
            .map_err(|_| Error::InvalidPoint("matrix is not positive definite".into()))?;
        Ok(SpdPoint { mat, sqrt, inv_sqrt })
    }

    pub fn m(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// `p^{1/2}`, the group element carrying the base point to `p`.
    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }
}

/// `g . p = g p g^T`, renormalized to unit determinant.
pub fn act(g: &DMatrix<f64>, p: &SpdPoint) -> Result<SpdPoint> {
    SpdPoint::normalized(&(g * p.matrix() * g.transpose()))
}

pub fn exp_at(p: &SpdPoint, u: &Tangent) -> Result<SpdPoint> {
    let e = expm_sym(u);
    SpdPoint::normalized(&(p.sqrt() * e * p.sqrt()))
}

pub fn log_at(p: &SpdPoint, q: &SpdPoint) -> Result<Tangent> {
    let inner = p.inv_sqrt() * q.matrix() * p.inv_sqrt();
    let mut l = logm_spd(&inner)?;
    // Remove the trace drift left by determinant round-off.
    let shift = l.trace() / l.nrows() as f64;
    for i in 0..l.nrows() {
        l[(i, i)] -= shift;
    }
    Ok(l)
}

pub fn distance(p: &SpdPoint, q: &SpdPoint) -> Result<f64> {
    let inner = p.inv_sqrt() * q.matrix() * p.inv_sqrt();
    Ok(logm_spd(&inner)?.norm())
}

/// Point at parameter `s` on the geodesic from `p` to `q`.
pub fn geodesic(p: &SpdPoint, q: &SpdPoint, s: f64) -> Result<SpdPoint> {
    let u = log_at(p, q)?;
    exp_at(p, &(u * s))
}

/// Iwasawa factors `g = k e^H n`.
#[derive(Clone, Debug)]
pub struct Iwasawa {
    pub k: DMatrix<f64>,
    /// Diagonal of `H`.
    pub h: DVector<f64>,
    /// Upper unitriangular factor.
    pub n: DMatrix<f64>,
}

pub fn iwasawa_kan(g: &DMatrix<f64>) -> Result<Iwasawa> {
    let sv = g.singular_values();
    let (hi, lo) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Conditioning(cond));
    }
    Ok(iwasawa_unchecked(g))
}

fn iwasawa_unchecked(g: &DMatrix<f64>) -> Iwasawa {
    let (k, r) = qr_positive(g);
    let m = g.nrows();
    let d = r.diagonal();
    let mut h = d.map(f64::ln);
    // Absorb |det g| != 1 round-off so that H stays traceless.
    let shift = h.sum() / m as f64;
    h.add_scalar_mut(-shift);
    let n = DMatrix::from_fn(m, m, |i, j| r[(i, j)] / d[i]);
    Iwasawa { k, h, n }
}

/// Canonical orthogonal representative of a boundary point `gamma . b(oo)`.
///
/// The stabilizer of `b(oo)` is the upper-triangular group, so the boundary
/// point is the orthogonal QR factor of `gamma` up to column signs; the signs
/// are fixed by making the largest-magnitude entry of every column positive
/// (first index wins ties).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryAtom {
    pub k: DMatrix<f64>,
}

impl Serialize for BoundaryAtom {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self.k.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }
}

impl BoundaryAtom {
    pub fn from_group(gamma: &DMatrix<f64>) -> Self {
        let (mut k, _) = qr_positive(gamma);
        for j in 0..k.ncols() {
            let col = k.column(j);
            let mut best = 0;
            for i in 1..col.len() {
                if col[i].abs() > col[best].abs() {
                    best = i;
                }
            }
            if col[best] < 0.0 {
                k.column_mut(j).neg_mut();
            }
        }
        BoundaryAtom { k }
    }

    /// The atom `b(oo)` itself.
    pub fn base(m: usize) -> Self {
        BoundaryAtom::from_group(&DMatrix::identity(m, m))
    }
}

/// Shared geometric context: the Cartan frame at the base point and the
/// chamber barycenter direction `b` (decreasing diagonal).
#[derive(Clone, Debug)]
pub struct SymmetricSpace {
    pub frame: CartanFrame,
    pub barycenter: ChamberVector,
    /// Diagonal of `b`.
    pub b: DVector<f64>,
    /// `min_a a(b)` over positive roots.
    pub min_root_value: f64,
    /// Smallest positive eigenvalue of a Busemann Hessian, `min_a a(b) / 2`.
    pub c: f64,
}

impl SymmetricSpace {
    pub fn new(m: usize) -> Result<Self> {
        let frame = build_cartan_frame(m)?;
        let barycenter = chamber_barycenter(&frame);
        let b = barycenter.coords.clone();
        let min_root_value = (0..frame.blocks.len())
            .map(|i| frame.roots.eval(i, b.as_slice()))
            .fold(f64::INFINITY, f64::min);
        Ok(SymmetricSpace {
            frame,
            barycenter,
            b,
            min_root_value,
            c: 0.5 * min_root_value,
        })
    }

    pub fn m(&self) -> usize {
        self.frame.m
    }

    pub fn n(&self) -> usize {
        self.frame.dim()
    }

    pub fn r(&self) -> usize {
        self.frame.rank()
    }

    pub fn origin(&self) -> SpdPoint {
        SpdPoint::identity(self.m())
    }

    /// Hessian eigenvalue on the block of positive root `idx`: `a(b) / 2`.
    pub fn hessian_weight(&self, idx: usize) -> f64 {
        let blk = &self.frame.blocks[idx];
        0.5 * (self.b[blk.i] - self.b[blk.j])
    }

    /// Point at distance `t` along the ray from the base point toward `theta`.
    pub fn ray_point(&self, theta: &BoundaryAtom, t: f64) -> Result<SpdPoint> {
        let d = self.b.map(|x| (t * x).exp());
        let k = &theta.k;
        SpdPoint::normalized(&(k * DMatrix::from_diagonal(&d) * k.transpose()))
    }
}

/// Busemann data of one atom at one point: the value and the orthogonal
/// factor `k'` with `x^{-1/2} k = k' e^H n`.
#[derive(Clone, Debug)]
pub struct AtomEval {
    pub value: f64,
    pub kprime: DMatrix<f64>,
}

impl AtomEval {
    pub fn at(space: &SymmetricSpace, x: &SpdPoint, theta: &BoundaryAtom) -> Result<Self> {
        // k is orthogonal, so the conditioning of x^{-1/2} k is that of x^{-1/2};
        // the spread of the Cartan part is a cheap lower bound for it.
        let g = x.inv_sqrt() * &theta.k;
        let iw = iwasawa_unchecked(&g);
        let spread = iw.h.max() - iw.h.min();
        if spread > MAX_CONDITION.ln() {
            return Err(Error::Conditioning(spread.exp()));
        }
        Ok(AtomEval {
            value: BUSEMANN_SCALE * iw.h.dot(&space.b),
            kprime: iw.k,
        })
    }

    /// Gradient `-k' b k'^T` as a matrix in the chart at `x`.
    pub fn gradient_matrix(&self, space: &SymmetricSpace) -> Tangent {
        let kp = &self.kprime;
        -(kp * DMatrix::from_diagonal(&space.b) * kp.transpose())
    }

    pub fn gradient_coords(&self, space: &SymmetricSpace) -> DVector<f64> {
        space.frame.coords(&self.gradient_matrix(space))
    }

    /// Rows of `Ad(k'^T)` onto the root blocks: row `a` maps frame coordinates
    /// of `U` to the `a`-th root coordinate of `k'^T U k'`. The rows are
    /// orthonormal and span the complement of the flat toward the atom.
    pub fn root_rows(&self, space: &SymmetricSpace) -> DMatrix<f64> {
        let frame = &space.frame;
        let m = frame.m;
        let r = frame.rank();
        let n = frame.dim();
        let kp = &self.kprime;
        let s2 = std::f64::consts::SQRT_2;
        let mut rows = DMatrix::zeros(frame.blocks.len(), n);
        for (row, blk) in frame.blocks.iter().enumerate() {
            let (i, j) = (blk.i, blk.j);
            // Cartan columns through the Helmert prefix structure.
            let prod: Vec<f64> = (0..m).map(|s| kp[(s, i)] * kp[(s, j)]).collect();
            let mut prefix = 0.0;
            for k in 1..m {
                prefix += prod[k - 1];
                let h = (prefix - k as f64 * prod[k]) / ((k * (k + 1)) as f64).sqrt();
                rows[(row, k - 1)] = s2 * h;
            }
            for (col, other) in frame.blocks.iter().enumerate() {
                let (s, t) = (other.i, other.j);
                rows[(row, r + col)] = kp[(s, i)] * kp[(t, j)] + kp[(t, i)] * kp[(s, j)];
            }
        }
        rows
    }

    /// Busemann Hessian in frame coordinates.
    pub fn hessian(&self, space: &SymmetricSpace) -> DMatrix<f64> {
        let rows = self.root_rows(space);
        let w = DVector::from_fn(rows.nrows(), |a, _| space.hessian_weight(a));
        let scaled = DMatrix::from_diagonal(&w) * &rows;
        symmetrize(&(rows.transpose() * scaled))
    }
}

pub fn busemann(space: &SymmetricSpace, x: &SpdPoint, theta: &BoundaryAtom) -> Result<f64> {
    Ok(AtomEval::at(space, x, theta)?.value)
}

/// `d(x, gamma_theta(t)) - t` with the unit-speed ray from the base point.
///
/// The distance is computed from the singular values of `L^T e^{-tb/2}`,
/// where `k^T x k = L L^T`, using a one-sided Jacobi iteration on columns
/// stored as a unit direction times `e^{scale}`, so the `e^{+-t}` spread never
/// overflows and the logarithms keep full relative accuracy.
pub fn busemann_oracle(space: &SymmetricSpace, x: &SpdPoint, theta: &BoundaryAtom, t: f64) -> f64 {
    let m = space.m();
    let y = symmetrize(&(theta.k.transpose() * x.matrix() * &theta.k));
    let l = y.cholesky().expect("point is positive definite").l();
    let lt = l.transpose();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(m);
    let mut scales: Vec<f64> = Vec::with_capacity(m);
    for j in 0..m {
        let c = lt.column(j).into_owned();
        let norm = c.norm();
        cols.push(c / norm);
        scales.push(norm.ln() - 0.5 * t * space.b[j]);
    }
    let tol = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p0 in 0..m {
            for q0 in (p0 + 1)..m {
                let (p, q) = if scales[p0] >= scales[q0] { (p0, q0) } else { (q0, p0) };
                let a = cols[p].norm_squared();
                let bb = cols[q].norm_squared();
                let g = cols[p].dot(&cols[q]);
                if g.abs() <= tol * (a * bb).sqrt() {
                    continue;
                }
                rotated = true;
                let e = (scales[q] - scales[p]).exp();
                let ez = (bb * e * e - a) / (2.0 * g);
                let sign = if ez >= 0.0 { 1.0 } else { -1.0 };
                let t_over_e = sign / (ez.abs() + (e * e + ez * ez).sqrt());
                let tn = t_over_e * e;
                let cs = 1.0 / (1.0 + tn * tn).sqrt();
                let up = &cols[p] * cs - &cols[q] * (tn * cs * e);
                let uq = &cols[p] * (t_over_e * cs) + &cols[q] * cs;
                let (np, nq) = (up.norm(), uq.norm());
                cols[p] = up / np;
                cols[q] = uq / nq;
                scales[p] += np.ln();
                scales[q] += nq.ln();
            }
        }
        if !rotated {
            break;
        }
    }
    let d = scales.iter().map(|s| (2.0 * s).powi(2)).sum::<f64>().sqrt();
    d - t
}

pub fn busemann_gradient(space: &SymmetricSpace, x: &SpdPoint, theta: &BoundaryAtom) -> Result<Tangent> {
    Ok(AtomEval::at(space, x, theta)?.gradient_matrix(space))
}

pub fn busemann_hessian(
    space: &SymmetricSpace,
    x: &SpdPoint,
    theta: &BoundaryAtom,
) -> Result<QuadraticForm> {
    let h = AtomEval::at(space, x, theta)?.hessian(space);
    Ok(QuadraticForm::new(h, FormLabel::Other))
}

/// Random point `exp_at(o, U)` with `U` uniform in direction and `|U|`
/// uniform in `[0, radius]`.
pub fn random_point<R: rand::Rng + ?Sized>(space: &SymmetricSpace, rng: &mut R, radius: f64) -> SpdPoint {
    let dir = crate::linalg::random_unit_vector(rng, space.n());
    let len = rng.random::<f64>() * radius;
    exp_at(&space.origin(), &space.frame.matrix(&(dir * len))).expect("exponential of a symmetric matrix")
}

/// Random boundary atom, Haar distributed.
pub fn random_atom<R: rand::Rng + ?Sized>(m: usize, rng: &mut R) -> BoundaryAtom {
    BoundaryAtom::from_group(&haar_special_orthogonal(rng, m))
}

/// Finite family of weighted boundary atoms.
#[derive(Clone, Debug, Serialize)]
pub struct WeightedBoundaryMeasure {
    pub atoms: Vec<BoundaryAtom>,
    pub weights: Vec<f64>,
    pub seed: Option<u64>,
    pub samples: usize,
}

impl WeightedBoundaryMeasure {
    pub fn uniform(atoms: Vec<BoundaryAtom>) -> Self {
        let n = atoms.len();
        WeightedBoundaryMeasure {
            atoms,
            weights: vec![1.0 / n as f64; n],
            seed: None,
            samples: n,
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `N` equal-weight atoms `x^{1/2} k_j` with `k_j` Haar on `SO(m)`, drawn
/// from a ChaCha stream seeded by `seed`.
pub fn sample_boundary_measure(x: &SpdPoint, n: usize, seed: u64) -> WeightedBoundaryMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..n.max(1))
        .map(|_| {
            let k = haar_special_orthogonal(&mut rng, x.m());
            BoundaryAtom::from_group(&(x.sqrt() * k))
        })
        .collect();
    let mut nu = WeightedBoundaryMeasure::uniform(atoms);
    nu.seed = Some(seed);
    nu
}

pub fn push_measure(g: &DMatrix<f64>, nu: &WeightedBoundaryMeasure) -> WeightedBoundaryMeasure {
    WeightedBoundaryMeasure {
        atoms: nu.atoms.iter().map(|a| BoundaryAtom::from_group(&(g * &a.k))).collect(),
        weights: nu.weights.clone(),
        seed: nu.seed,
        samples: nu.samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;

    #[test]
    fn canonical_atom_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let g = gaussian_matrix(&mut rng, 4, 4);
            let a = BoundaryAtom::from_group(&g);
            let b = BoundaryAtom::from_group(&a.k);
            assert!((a.k - b.k).amax() < 1e-14);
        }
    }

    #[test]
    fn root_rows_are_orthonormal() {
        let space = SymmetricSpace::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = SpdPoint::normalized(&{
            let g = gaussian_matrix(&mut rng, 4, 4);
            &g * g.transpose()
        })
        .unwrap();
        let theta = BoundaryAtom::from_group(&gaussian_matrix(&mut rng, 4, 4));
        let ev = AtomEval::at(&space, &x, &theta).unwrap();
        let rows = ev.root_rows(&space);
        let gram = &rows * rows.transpose();
        assert!((gram - DMatrix::identity(6, 6)).amax() < 1e-12);
        // Rows must agree with the trace pairing against rotated blocks.
        let kp = &ev.kprime;
        for (a, blk) in space.frame.blocks.iter().enumerate() {
            for (c, basis) in space.frame.basis().iter().enumerate() {
                let w = kp.transpose() * *basis * kp;
                let want = (&blk.p * w).trace();
                assert!((rows[(a, c)] - want).abs() < 1e-12);
            }
        }
    }
}
