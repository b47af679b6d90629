use bary_core::forms::*;
use bary_core::linalg::{gaussian_matrix, gram_schmidt, haar_special_orthogonal, sym_eigen, sym_eigenvalues};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let k = haar_special_orthogonal(rng, n);
    let d = DVector::from_fn(n, |_, _| 10f64.powf(-4.0 * rng.random::<f64>()));
    &k * DMatrix::from_diagonal(&d) * k.transpose()
}

fn sort_by_value(q: &DMatrix<f64>, frame: &DMatrix<f64>) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = frame.column_iter().map(|c| c.into_owned()).collect();
    cols.sort_by(|a, b| a.dot(&(q * a)).total_cmp(&b.dot(&(q * b))));
    DMatrix::from_columns(&cols)
}

/// Unit columns with pairwise inner products of magnitude below `tau`.
fn tau_frame(rng: &mut ChaCha8Rng, n: usize, k: usize, tau: f64) -> DMatrix<f64> {
    let base = haar_special_orthogonal(rng, n).columns(0, k).into_owned();
    let mut scale = tau;
    loop {
        let noise = gaussian_matrix(rng, n, k) * (scale / (n as f64).sqrt());
        let mut f = &base + noise;
        for mut c in f.column_iter_mut() {
            c.normalize_mut();
        }
        if max_cross_inner(&f).unwrap() < tau {
            return f;
        }
        scale *= 0.7;
    }
}

#[test]
fn restrict_examples() {
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
    let s = DMatrix::from_columns(&[DVector::from_vec(vec![1.0, 0.0, 0.0]), DVector::from_vec(vec![0.0, 0.0, 1.0])]);
    let r = restrict(&q, &s).unwrap();
    assert_eq!(r, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0])));
    let eye = DMatrix::identity(4, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = gram_schmidt(&gaussian_matrix(&mut rng, 4, 2)).unwrap();
    assert!((restrict(&eye, &s).unwrap() - DMatrix::identity(2, 2)).norm() < 1e-14);
    assert!(restrict(&eye, &(s * 2.0)).is_err());
}

#[test]
fn interlacing_examples() {
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
    let w = DMatrix::from_columns(&[DVector::from_vec(vec![1.0, 0.0, 0.0]), DVector::from_vec(vec![0.0, 0.0, 1.0])]);
    let rep = interlacing_check(&q, &w).unwrap();
    assert!(rep.ok);
    assert_eq!(rep.mu, vec![1.0, 3.0]);
    let full = interlacing_check(&q, &DMatrix::identity(3, 3)).unwrap();
    assert_eq!(full.mu, full.lambda);
}

#[test]
fn frame_bound_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = random_pd(&mut rng, 6);
    let (vals, vecs) = sym_eigen(&q);
    let rep = frame_eigen_bound(&q, &vecs).unwrap();
    assert!(rep.ok);
    for (v, l) in rep.values.iter().zip(vals.iter()) {
        assert!((v - l).abs() < 1e-12);
    }
    let one = DMatrix::from_element(1, 1, 0.7);
    let rep = frame_eigen_bound(&one, &DMatrix::identity(1, 1)).unwrap();
    assert!(rep.ok && (rep.values[0] - 0.7).abs() < 1e-15);
    // Reversed eigenvector order is unsorted.
    let reversed = DMatrix::from_fn(6, 6, |i, j| vecs[(i, 5 - j)]);
    assert!(matches!(frame_eigen_bound(&q, &reversed), Err(bary_core::Error::Precondition(_))));
}

#[test]
fn gram_schmidt_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = random_pd(&mut rng, 5);
    let (_, vecs) = sym_eigen(&q);
    let rep = perturbed_gram_schmidt(&q, &vecs, tau0(5)).unwrap();
    assert!(rep.ok);
    assert!(rep.ratios.iter().all(|r| (r - 1.0).abs() < 1e-10));
    assert!((&rep.frame.transpose() * &rep.frame - DMatrix::identity(5, 5)).norm() < 1e-12);

    let loose = tau_frame(&mut rng, 5, 3, 0.5);
    let loose = sort_by_value(&q, &loose);
    let tau = max_cross_inner(&loose).unwrap();
    assert!(perturbed_gram_schmidt(&q, &loose, tau * 0.5).is_err());
}

#[test]
fn delta_orthonormality_uses_strict_bound() {
    let a = DVector::from_vec(vec![1.0, 0.0]);
    let t = 0.3f64;
    let b = DVector::from_vec(vec![t, (1.0 - t * t).sqrt()]);
    let f = DMatrix::from_columns(&[a, b]);
    assert!(is_delta_orthonormal(&f, 0.31));
    assert!(!is_delta_orthonormal(&f, 0.3));
    assert!(!is_delta_orthonormal(&(f * 1.1), 0.9));
}

#[test]
fn tau0_threshold_is_sharp_in_the_plane() {
    // Q vanishes on e1; the pair sits at angles +-atan(1/sqrt 2) about e1, so
    // tau = 1/3 and the Gram-Schmidt step exactly doubles the second value.
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]));
    let a = 0.5f64.sqrt().atan();
    let pair = |eps: f64| {
        let v1 = DVector::from_vec(vec![(a - eps).cos(), (a - eps).sin()]);
        let v2 = DVector::from_vec(vec![a.cos(), -a.sin()]);
        DMatrix::from_columns(&[v1, v2])
    };
    let at = perturbed_gram_schmidt(&q, &pair(0.0), 1.0).unwrap();
    assert!((at.tau - 1.0 / 3.0).abs() < 1e-12);
    assert!((at.worst_ratio - 2.0).abs() < 1e-9);
    assert!(tau0(2) < 1.0 / 3.0);
    let beyond = perturbed_gram_schmidt(&q, &pair(0.01), 1.0).unwrap();
    assert!(!beyond.ok && beyond.tau > 1.0 / 3.0);
}

#[test]
fn lemma_batteries_have_no_violations() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut worst = (f64::INFINITY, f64::INFINITY, 0.0f64);
    for _ in 0..1000 {
        let n = rng.random_range(4..=12);
        let q = random_pd(&mut rng, n);

        let l = rng.random_range(0..n);
        let w = gram_schmidt(&gaussian_matrix(&mut rng, n, n - l)).unwrap();
        let inter = interlacing_check(&q, &w).unwrap();
        assert!(inter.ok, "interlacing slack {}", inter.worst_slack);
        worst.0 = worst.0.min(inter.worst_slack);

        let frame = sort_by_value(&q, &haar_special_orthogonal(&mut rng, n));
        let fb = frame_eigen_bound(&q, &frame).unwrap();
        assert!(fb.ok, "frame bound slack {}", fb.worst_slack);
        worst.1 = worst.1.min(fb.worst_slack);

        let k = rng.random_range(2..=n);
        let f = sort_by_value(&q, &tau_frame(&mut rng, n, k, tau0(n) / 2.0));
        let gs = perturbed_gram_schmidt(&q, &f, tau0(n)).unwrap();
        assert!(gs.ok, "Gram-Schmidt ratio {}", gs.worst_ratio);
        worst.2 = worst.2.max(gs.worst_ratio);
    }
    assert!(worst.2 <= 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn restriction_spectrum_is_basis_invariant(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_pd(&mut rng, n);
        let k = rng.random_range(1..=n);
        let s = gram_schmidt(&gaussian_matrix(&mut rng, n, k)).unwrap();
        let rot = haar_special_orthogonal(&mut rng, k);
        let a = sym_eigenvalues(&restrict(&q, &s).unwrap());
        let b = sym_eigenvalues(&restrict(&q, &(&s * rot)).unwrap());
        prop_assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn interlacing_holds(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_pd(&mut rng, n);
        let k = rng.random_range(1..=n);
        let w = gram_schmidt(&gaussian_matrix(&mut rng, n, k)).unwrap();
        prop_assert!(interlacing_check(&q, &w).unwrap().ok);
    }
}
