//! Dense linear-algebra helpers shared by the geometric modules.
//!
//! Everything here works on `nalgebra` dynamic matrices. Symmetric matrix
//! functions go through an explicit symmetrization followed by the symmetric
//! eigensolver, with eigenvalues returned in ascending order.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Returns `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest absolute entry of `A - Aᵀ`.
pub fn symmetry_residual(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).amax()
}

/// Eigen-decomposition of the symmetric part of `a`, eigenvalues ascending.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = symmetrize(a).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Ascending eigenvalues of the symmetric part of `a`.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    let mut v: Vec<f64> = symmetrize(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    DVector::from_vec(v)
}

/// Applies a scalar function to a symmetric matrix through its spectrum.
pub fn sym_apply(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(a);
    let mapped = DVector::from_iterator(values.len(), values.iter().map(|&x| f(x)));
    symmetrize(&(&vectors * DMatrix::from_diagonal(&mapped) * vectors.transpose()))
}

pub fn expm_sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_apply(a, f64::exp)
}

/// Matrix logarithm of a symmetric positive-definite matrix.
pub fn logm_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = sym_eigen(a);
    if values[0] <= 0.0 || !values[0].is_finite() {
        return Err(Error::Degeneracy(format!(
            "matrix logarithm of a non-SPD matrix (min eigenvalue {:e})",
            values[0]
        )));
    }
    let logs = values.map(f64::ln);
    Ok(symmetrize(
        &(&vectors * DMatrix::from_diagonal(&logs) * vectors.transpose()),
    ))
}

/// Square root and inverse square root of an SPD matrix, from one eigensolve.
pub fn sqrt_and_inv_sqrt(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (values, vectors) = sym_eigen(a);
    if values[0] <= 0.0 {
        return Err(Error::Degeneracy(format!(
            "square root of a non-SPD matrix (min eigenvalue {:e})",
            values[0]
        )));
    }
    let s = values.map(f64::sqrt);
    let si = s.map(|x| 1.0 / x);
    let vt = vectors.transpose();
    Ok((
        symmetrize(&(&vectors * DMatrix::from_diagonal(&s) * &vt)),
        symmetrize(&(&vectors * DMatrix::from_diagonal(&si) * &vt)),
    ))
}

/// QR factorization with the positive-diagonal convention on `R`.
pub fn qr_positive(g: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = g.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)] < 0.0 {
            q.column_mut(i).neg_mut();
            r.row_mut(i).neg_mut();
        }
    }
    (q, r)
}

/// Log-determinant of a symmetric positive-definite matrix, `None` if the
/// Cholesky factorization fails.
pub fn logdet_spd(a: &DMatrix<f64>) -> Option<f64> {
    if a.nrows() == 0 {
        return Some(0.0);
    }
    let chol = symmetrize(a).cholesky()?;
    let l = chol.l();
    Some(2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Determinant of a symmetric matrix through its (clamped) spectrum.
pub fn det_sym(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a).iter().product()
}

/// Orthonormal basis of the column span of `a`, found by QR with column
/// pivoting. Returns the basis (`n x rank`) and the pivoted `|R_ii|` values.
pub fn column_span(a: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, Vec<f64>) {
    let qr = a.clone().col_piv_qr();
    let q = qr.q();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let top = diag.iter().cloned().fold(0.0, f64::max);
    let rank = diag.iter().take_while(|&&d| top > 0.0 && d > rel_tol * top).count();
    (q.columns(0, rank).into_owned(), diag)
}

/// Completes the orthonormal columns of `basis` to an orthonormal basis of
/// `R^n` and returns only the added columns.
pub fn orthonormal_complement(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.nrows();
    let k = basis.ncols();
    let mut cols: Vec<DVector<f64>> = (0..k).map(|j| basis.column(j).into_owned()).collect();
    let mut added = Vec::new();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[e] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&v);
                v.axpy(-d, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= norm;
            cols.push(v.clone());
            added.push(v);
        }
    }
    DMatrix::from_columns(&added)
}

/// Modified Gram–Schmidt on the columns, in order. Fails on dependence.
pub fn gram_schmidt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(a.ncols());
    for j in 0..a.ncols() {
        let mut v = a.column(j).into_owned();
        for u in &out {
            let d = u.dot(&v);
            v.axpy(-d, u, 1.0);
        }
        let norm = v.norm();
        if norm < 1e-14 {
            return Err(Error::Degeneracy(format!(
                "Gram-Schmidt: column {j} is linearly dependent on its predecessors"
            )));
        }
        out.push(v / norm);
    }
    Ok(DMatrix::from_columns(&out))
}

/// `‖AᵀA − I‖_max`, the orthonormality defect of the columns of `a`.
pub fn orthonormality_defect(a: &DMatrix<f64>) -> f64 {
    let g = a.transpose() * a;
    (g - DMatrix::identity(a.ncols(), a.ncols())).amax()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Haar-distributed element of SO(m): QR of a Gaussian matrix with the
/// positive-diagonal correction, then a first-column flip when `det = -1`.
pub fn haar_special_orthogonal<R: Rng + ?Sized>(rng: &mut R, m: usize) -> DMatrix<f64> {
    let (mut q, _) = qr_positive(&gaussian_matrix(rng, m, m));
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Random antisymmetric matrix with unit Frobenius norm.
pub fn random_antisymmetric<R: Rng + ?Sized>(rng: &mut R, m: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, m, m);
    let a = &g - g.transpose();
    let norm = a.norm();
    a / norm
}

/// Exponential of an antisymmetric matrix (an element of SO(m)).
pub fn expm_antisymmetric(a: &DMatrix<f64>) -> DMatrix<f64> {
    // Scaling and squaring with a Taylor core; entries are O(1) at our sizes.
    let norm = a.norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let n = a.nrows();
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    // Re-orthogonalize to clean the accumulated round-off.
    let (q, r) = qr_positive(&sum);
    let mut q = q;
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            q.column_mut(i).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn qr_positive_reassembles() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = gaussian_matrix(&mut rng, 5, 5);
        let (q, r) = qr_positive(&g);
        assert!((&q * &r - &g).amax() < 1e-12);
        assert!((0..5).all(|i| r[(i, i)] > 0.0));
        assert!(orthonormality_defect(&q) < 1e-12);
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = gaussian_matrix(&mut rng, 4, 4);
        let s = symmetrize(&g);
        let back = logm_spd(&expm_sym(&s)).unwrap();
        assert!((back - s).amax() < 1e-12);
    }

    #[test]
    fn antisymmetric_exponential_is_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_antisymmetric(&mut rng, 5) * 3.0;
        let q = expm_antisymmetric(&a);
        assert!(orthonormality_defect(&q) < 1e-12);
        assert!((q.determinant() - 1.0).abs() < 1e-12);
        // Compare with the symmetric-eigen route on a small angle.
        let small = random_antisymmetric(&mut rng, 3) * 1e-3;
        let q = expm_antisymmetric(&small);
        let approx = DMatrix::identity(3, 3) + &small + &small * &small * 0.5;
        assert!((q - approx).amax() < 1e-9);
    }

    #[test]
    fn haar_samples_are_special_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let k = haar_special_orthogonal(&mut rng, 4);
            assert!(orthonormality_defect(&k) < 1e-12);
            assert!((k.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn complement_fills_the_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (q, _) = qr_positive(&gaussian_matrix(&mut rng, 6, 6));
        let part = q.columns(0, 2).into_owned();
        let rest = orthonormal_complement(&part);
        assert_eq!(rest.ncols(), 4);
        let all = DMatrix::from_columns(
            &(0..2)
                .map(|j| part.column(j).into_owned())
                .chain((0..4).map(|j| rest.column(j).into_owned()))
                .collect::<Vec<_>>(),
        );
        assert!(orthonormality_defect(&all) < 1e-12);
    }
}
