use std::collections::BTreeSet;

use bary_core::lie::*;
use bary_core::linalg::{column_span, expm_antisymmetric, haar_special_orthogonal, orthonormality_defect, random_antisymmetric};
use bary_core::matching::*;
use bary_core::Error;
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exhaustive search: choose `d_i` elements of `B_i` for each vector in turn.
fn brute_force_feasible(inst: &MatchingInstance) -> bool {
    fn go(inst: &MatchingInstance, i: usize, used: &mut Vec<bool>) -> bool {
        if i == inst.len() {
            return true;
        }
        let free: Vec<usize> = inst.sets[i].iter().copied().filter(|&b| !used[b]).collect();
        for pick in free.into_iter().combinations(inst.demands[i]) {
            for &b in &pick {
                used[b] = true;
            }
            let ok = go(inst, i + 1, used);
            for &b in &pick {
                used[b] = false;
            }
            if ok {
                return true;
            }
        }
        false
    }
    go(inst, 0, &mut vec![false; inst.ground])
}

fn assert_sound(inst: &MatchingInstance, sel: &FrameSelection) {
    match sel {
        FrameSelection::Complete { assignment } => {
            let mut seen = BTreeSet::new();
            for (i, picked) in assignment.iter().enumerate() {
                assert_eq!(picked.len(), inst.demands[i]);
                for b in picked {
                    assert!(inst.sets[i].contains(b));
                    assert!(seen.insert(*b), "index {b} used twice");
                }
            }
        }
        FrameSelection::Deficient {
            witness,
            neighborhood,
            demand,
        } => {
            let reach: BTreeSet<usize> = witness.iter().flat_map(|&i| inst.sets[i].iter().copied()).collect();
            let need: usize = witness.iter().map(|&i| inst.demands[i]).sum();
            assert!(reach.len() < need);
            assert_eq!(reach.len(), neighborhood.len());
            assert_eq!(need, *demand);
            for drop in 0..witness.len() {
                let mut sub = witness.clone();
                sub.remove(drop);
                assert!(sub.is_empty() || !inst.is_deficient(&sub), "witness {witness:?} is not minimal");
            }
        }
    }
}

#[test]
fn disjoint_sets_match() {
    let inst = MatchingInstance::new(7, vec![2, 1, 3], vec![vec![0, 1], vec![2, 3], vec![4, 5, 6]]).unwrap();
    let sel = hall_matching(&inst);
    assert_sound(&inst, &sel);
    assert_eq!(
        sel,
        FrameSelection::Complete {
            assignment: vec![vec![0, 1], vec![2], vec![4, 5, 6]]
        }
    );
}

#[test]
fn doubled_demand_deficiency() {
    let inst = MatchingInstance::new(3, vec![2, 2], vec![vec![0, 1, 2], vec![0, 1, 2]]).unwrap();
    let sel = hall_matching(&inst);
    assert_sound(&inst, &sel);
    let json = serde_json::to_string(&sel).unwrap();
    assert_eq!(json, r#"{"kind":"deficient","witness":[0,1],"neighborhood":[0,1,2],"demand":4}"#);
}

#[test]
fn invalid_instances_rejected() {
    assert!(MatchingInstance::new(3, vec![1], vec![vec![0], vec![1]]).is_err());
    assert!(MatchingInstance::new(3, vec![0], vec![vec![0]]).is_err());
    assert!(MatchingInstance::new(3, vec![1], vec![vec![3]]).is_err());
}

#[test]
fn corollary_shape_selection_is_complete() {
    // Demands (r, 2, ..., 2) with sum 3r - 2 over the ten A4 root blocks.
    let frame = build_cartan_frame(5).unwrap();
    let reg = chamber_barycenter(&frame);
    let sets = vec![orthogonal_root_sum(&frame, &reg).roots; 4];
    let inst = MatchingInstance::new(10, vec![4, 2, 2, 2], sets).unwrap();
    let sel = hall_matching(&inst);
    assert!(brute_force_feasible(&inst));
    assert!(sel.is_complete());
    assert_sound(&inst, &sel);
}

fn expected_tables() -> Vec<(Family, usize, Vec<usize>)> {
    vec![
        (Family::A, 2, vec![0, 1, 3]),
        (Family::A, 3, vec![0, 1, 3, 6]),
        (Family::A, 4, vec![0, 1, 3, 6, 10]),
        (Family::B, 2, vec![0, 1, 4]),
        (Family::C, 3, vec![0, 1, 4, 9]),
        (Family::D, 4, vec![0, 1, 3, 6, 12]),
    ]
}

fn float_rank(roots: &[&Vec<i64>]) -> usize {
    if roots.is_empty() {
        return 0;
    }
    let d = roots[0].len();
    let a = DMatrix::from_fn(d, roots.len(), |i, j| roots[j][i] as f64);
    column_span(&a, 1e-9).0.ncols()
}

#[test]
fn rooted_subspace_tables() {
    for (f, r, want) in expected_tables() {
        let rs = root_system(f, r).unwrap();
        let table = rooted_subspace_table(&rs).unwrap();
        assert_eq!(table, want, "{f}{r}");
        // Independent oracle: largest set of positive roots of rank <= i.
        let pos: Vec<&Vec<i64>> = rs.positive_roots().iter().collect();
        let mut oracle = vec![0usize; r + 1];
        for mask in 0u32..(1 << pos.len()) {
            let subset: Vec<&Vec<i64>> = (0..pos.len()).filter(|&j| mask >> j & 1 == 1).map(|j| pos[j]).collect();
            let rank = float_rank(&subset);
            for slot in &mut oracle[rank..] {
                *slot = (*slot).max(subset.len());
            }
        }
        assert_eq!(table, oracle, "{f}{r}");
        for i in 1..r {
            assert!(table[i] - table[i - 1] >= i, "{f}{r} at {i}");
        }
    }
}

#[test]
fn exhaustive_counts_refuse_large_rank() {
    let rs = root_system(Family::A, 5).unwrap();
    assert!(matches!(rooted_subspace_count(&rs, 2), Err(Error::Capability { rank: 5, max: 4 })));
    let rs = root_system(Family::A, 3).unwrap();
    assert!(rooted_subspace_count(&rs, 4).is_err());
}

#[test]
fn exclusion_inequality_boundary() {
    let mut failures = Vec::new();
    for r in 1..=8 {
        for k in 1..=r {
            let lhs = k * (2 * r - k + 1);
            let rhs = 2 * (2 * k + r - 2);
            assert_eq!(exclusion_inequality(r, k), lhs >= rhs);
            if !exclusion_inequality(r, k) {
                failures.push((r, k));
            }
        }
    }
    assert_eq!(failures, vec![(2, 2), (3, 3)]);
}

fn generic(rs: &RootSystem, raw: &[f64]) -> ChamberVector {
    let mut v = DVector::from_column_slice(raw);
    let mean = v.mean();
    v.add_scalar_mut(-mean);
    ChamberVector::new(rs, v.normalize())
}

#[test]
fn dimension_estimate_excluded_ranks() {
    let a2 = root_system(Family::A, 2).unwrap();
    let tuple = [generic(&a2, &[0.3, -1.1, 0.7]), generic(&a2, &[1.0, 0.2, -0.5])];
    let est = dimension_estimate(&a2, &tuple).unwrap();
    let full = est.entries.iter().find(|e| e.members.len() == 2).unwrap();
    assert_eq!((full.dim, full.required), (3, 4));
    assert!(!est.all_pass);
    assert_eq!(est.entries.iter().filter(|e| !e.pass).count(), 1);

    let a3 = root_system(Family::A, 3).unwrap();
    let tuple = [
        generic(&a3, &[0.3, -1.1, 0.7, 0.05]),
        generic(&a3, &[1.0, 0.2, -0.5, -0.9]),
        generic(&a3, &[-0.4, 0.8, 1.3, 0.1]),
    ];
    let est = dimension_estimate(&a3, &tuple).unwrap();
    let failing: Vec<_> = est.entries.iter().filter(|e| !e.pass).collect();
    assert_eq!(failing.len(), 1);
    assert_eq!((failing[0].members.len(), failing[0].dim, failing[0].required), (3, 6, 7));
    assert!(est.floor_ok);

    let collinear = [tuple[0].clone(), tuple[0].clone(), tuple[1].clone()];
    assert!(matches!(dimension_estimate(&a3, &collinear), Err(Error::Precondition(_))));
}

#[test]
fn dimension_estimate_singular_tuples() {
    for r in 2..=4 {
        let rs = root_system(Family::A, r).unwrap();
        let lines = singular_lines(&rs);
        let tuples = spanning_tuples(&rs, &lines);
        assert!(!tuples.is_empty());
        for idx in &tuples {
            let tuple: Vec<ChamberVector> = idx.iter().map(|&i| lines[i].clone()).collect();
            let est = dimension_estimate(&rs, &tuple).unwrap();
            assert!(est.floor_ok, "A{r} {idx:?}");
            if r == 4 {
                assert!(est.all_pass, "A4 {idx:?}");
            }
        }
    }
    // A4 singular lines: one per proper nonempty index subset up to complement.
    assert_eq!(singular_lines(&root_system(Family::A, 4).unwrap()).len(), 15);
}

fn half_frame(frame: &CartanFrame, rng: &mut ChaCha8Rng) -> Vec<ChamberVector> {
    let r = frame.rank();
    let q = haar_special_orthogonal(rng, r);
    (0..r)
        .map(|j| {
            let mut c = DVector::zeros(frame.dim());
            c.rows_mut(0, r).copy_from(&q.column(j));
            frame.chamber_vector(frame.matrix(&c).diagonal())
        })
        .collect()
}

#[test]
fn orthogonal_frame_in_rank_four() {
    let frame = build_cartan_frame(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let vs = half_frame(&frame, &mut rng);
        let picked = pick_orthogonal_frame(&frame, &vs, 0.2).unwrap();
        assert_eq!(picked.vectors.ncols(), 10);
        let g = picked.vectors.transpose() * &picked.vectors;
        assert_eq!(g, DMatrix::identity(10, 10));
        assert!(picked.vectors.rows(0, 4).iter().all(|&x| x == 0.0));
        assert_eq!(picked.roots.iter().collect::<BTreeSet<_>>().len(), 10);
    }
}

#[test]
fn regular_tuple_in_rank_three_is_infeasible() {
    let frame = build_cartan_frame(4).unwrap();
    let rs = &frame.roots;
    let tuple = [
        generic(rs, &[0.3, -1.1, 0.7, 0.05]),
        generic(rs, &[1.0, 0.2, -0.5, -0.9]),
        generic(rs, &[-0.4, 0.8, 1.3, 0.1]),
    ];
    match pick_with_singular(&frame, &tuple) {
        Err(Error::InfeasibleFrame {
            deficient,
            reachable,
            demand,
        }) => {
            assert_eq!(deficient, vec![0, 1, 2]);
            assert_eq!((reachable, demand), (6, 7));
        }
        other => panic!("expected an infeasible frame, got {other:?}"),
    }
    let lopsided = [tuple[0].clone(), tuple[0].clone(), tuple[1].clone()];
    assert!(pick_orthogonal_frame(&frame, &lopsided, 0.2).is_err());
}

fn probe_setup() -> (CartanFrame, ChamberVector, ChamberVector, DVector<f64>) {
    let frame = build_cartan_frame(3).unwrap();
    let v = frame.chamber_vector(DVector::from_vec(vec![1.0, 0.1, -1.1]).normalize());
    let vs = maximally_singular_near(&frame.roots, &v, 0.2);
    let q = orthogonal_root_sum(&frame, &vs);
    let mut u = DVector::zeros(frame.dim());
    u[frame.rank() + q.roots[0]] = 1.0;
    (frame, v, vs, u)
}

#[test]
fn probe_identity_and_domain() {
    let (frame, v, vs, u) = probe_setup();
    let eye = DMatrix::identity(3, 3);
    let (num, den) = angle_pair(&frame, &v, &u, &eye);
    assert_eq!(num, 0.0);
    assert!(den < 1e-15);
    let mut bad = DVector::zeros(frame.dim());
    bad[0] = 1.0;
    assert!(angle_ratio_probe(&frame, &v, &vs, &bad, 10, 1).is_err());
    assert!(angle_ratio_probe(&frame, &v, &vs, &(&u * 2.0), 10, 1).is_err());
}

#[test]
fn probe_supremum_is_stable_under_doubling() {
    let (frame, v, vs, u) = probe_setup();
    let a = angle_ratio_probe(&frame, &v, &vs, &u, 100_000, 1).unwrap();
    let b = angle_ratio_probe(&frame, &v, &vs, &u, 200_000, 1).unwrap();
    assert!(a.sup.is_finite() && a.sup > 0.0);
    assert!(b.sup >= a.sup);
    assert!((b.sup / a.sup - 1.0).abs() <= 0.2, "{} vs {}", a.sup, b.sup);
    let again = angle_ratio_probe(&frame, &v, &vs, &u, 100_000, 1).unwrap();
    assert_eq!((again.sup, again.argmax), (a.sup, a.argmax));
}

/// Orthonormal `k`-frame in the flat, rotated off it by `exp(eps A)`.
fn near_flat(frame: &CartanFrame, k: usize, eps: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let r = frame.rank();
    let q = haar_special_orthogonal(rng, r);
    let mut v = DMatrix::zeros(frame.dim(), k);
    v.view_mut((0, 0), (r, k)).copy_from(&q.columns(0, k));
    let h = expm_antisymmetric(&(random_antisymmetric(rng, frame.m) * eps));
    let cols: Vec<DVector<f64>> = (0..k)
        .map(|j| frame.coords(&(&h * frame.matrix(&v.column(j).into_owned()) * h.transpose())))
        .collect();
    DMatrix::from_columns(&cols)
}

#[test]
fn weak_matching_in_the_flat_is_exact() {
    let frame = build_cartan_frame(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = near_flat(&frame, 3, 0.0, &mut rng);
    let w = weak_eigenvalue_matching(&frame, &v, 1e-12, &WeakMatchingOptions::default()).unwrap();
    assert!(w.alignment_sizes.iter().all(|&s| s < 1e-12));
    assert!(w.deviation < 1e-12);
    assert_eq!(w.vectors.ncols(), 2 * 3 + 4 - 2);
    assert!(orthonormality_defect(&w.vectors) < 1e-12);
}

#[test]
fn weak_matching_preconditions() {
    let frame = build_cartan_frame(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let opts = WeakMatchingOptions::default();
    let v = near_flat(&frame, 2, 1e-3, &mut rng);
    assert!(matches!(weak_eigenvalue_matching(&frame, &v, opts.delta, &opts), Err(Error::Precondition(_))));
    assert!(weak_eigenvalue_matching(&frame, &(&v * 2.0), 1e-2, &opts).is_err());
    let far = near_flat(&frame, 2, 0.3, &mut rng);
    assert!(weak_eigenvalue_matching(&frame, &far, 1e-3, &opts).is_err());
}

#[test]
fn weak_matching_deviation_scales_with_eps() {
    let frame = build_cartan_frame(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = WeakMatchingOptions::default();
    let mut worst = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let mut w_max = 0.0f64;
        for _ in 0..20 {
            let v = near_flat(&frame, 4, eps * 0.5, &mut rng);
            let angle = subspace_angle_to_flat(&frame, &v);
            let w = weak_eigenvalue_matching(&frame, &v, eps, &opts).unwrap();
            assert_eq!(w.vectors.ncols(), 10);
            assert!(w.ok, "deviation {} at eps {eps}", w.deviation);
            assert!(w.measured_angle <= eps && (w.measured_angle - angle).abs() < 1e-12);
            w_max = w_max.max(w.deviation / eps);
        }
        worst.push(w_max);
    }
    // Linear in eps: the normalized deviation stays bounded across decades.
    assert!(worst.iter().all(|&x| x <= opts.c_prime), "{worst:?}");
}

#[test]
fn matching_angles_respect_probe_constant() {
    let frame = build_cartan_frame(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in [1usize, 2, 4] {
        let v = near_flat(&frame, k, 5e-4, &mut rng);
        let w = weak_eigenvalue_matching(&frame, &v, 1e-3, &WeakMatchingOptions::default()).unwrap();
        let c = matching_probe_constant(&frame, &w, 10_000, 5).unwrap();
        let check = matching_angle_check(&frame, &v, &w, 10_000, 9);
        assert!(c.is_finite() && check.sup.is_finite());
        assert!(check.sup <= 1.2 * c, "k={k}: sup {} against probe constant {c}", check.sup);
    }
}

#[test]
fn match_vectors_recovers_rotated_frames() {
    let frame = build_cartan_frame(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let v = near_flat(&frame, 2, 0.4, &mut rng);
    assert!(subspace_angle_to_flat(&frame, &v) > 0.05);
    let (matched, w) = match_vectors(&frame, &v, &WeakMatchingOptions::default()).unwrap();
    assert!(w.measured_angle < 1e-8);
    assert_eq!(matched.vectors.ncols(), 2 * 2 + 4 - 2);
    assert!(orthonormality_defect(&matched.vectors) < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn hall_matching_agrees_with_exhaustive_search(
        ground in 1usize..=12,
        raw in prop::collection::vec((1usize..=3, prop::collection::vec(0usize..12, 0..8)), 1..=4),
    ) {
        let demands: Vec<usize> = raw.iter().map(|(d, _)| *d).collect();
        let sets: Vec<Vec<usize>> = raw.iter().map(|(_, s)| s.iter().map(|b| b % ground).collect()).collect();
        let inst = MatchingInstance::new(ground, demands, sets).unwrap();
        let sel = hall_matching(&inst);
        assert_sound(&inst, &sel);
        prop_assert_eq!(sel.is_complete(), brute_force_feasible(&inst));
    }
}
