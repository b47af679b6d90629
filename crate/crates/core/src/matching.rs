//! Frame selection on root systems: Hall matching with demands, rooted
//! subspace counts, the dimension estimate for sums of root spaces, angle
//! probes for the `K`-action, and the weak eigenvalue matching construction
//! in `sl(m)`.
//!
//! Vectors of the tangent space are frame coordinates of a [`CartanFrame`];
//! the flat `F` is the span of the first `r` coordinates and its orthogonal
//! complement is spanned by the symmetric root blocks.

use std::collections::BTreeSet;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::max_cross_inner;
use crate::lie::{
    integer_rank, maximally_singular_near, nearest_wall_projection, orthogonal_root_sum, CartanFrame,
    ChamberVector, RootSystem, SINGULAR_TOL,
};
use crate::linalg::{
    column_span, expm_antisymmetric, haar_special_orthogonal, orthonormal_complement, orthonormality_defect,
    random_antisymmetric, sym_eigen,
};

/// Demands and selectable sets of a frame-selection problem.
#[derive(Clone, Debug, Serialize)]
pub struct MatchingInstance {
    /// Size of the ground set; elements are `0..ground`.
    pub ground: usize,
    pub demands: Vec<usize>,
    /// Sorted, duplicate-free selectable set per vector.
    pub sets: Vec<Vec<usize>>,
}

impl MatchingInstance {
    pub fn new(ground: usize, demands: Vec<usize>, sets: Vec<Vec<usize>>) -> Result<Self> {
        if demands.len() != sets.len() {
            return Err(Error::Precondition(format!(
                "{} demands for {} selectable sets",
                demands.len(),
                sets.len()
            )));
        }
        if demands.contains(&0) {
            return Err(Error::Precondition("demands must be positive".into()));
        }
        let mut clean = Vec::with_capacity(sets.len());
        for (i, s) in sets.into_iter().enumerate() {
            if let Some(&bad) = s.iter().find(|&&b| b >= ground) {
                return Err(Error::Precondition(format!(
                    "selectable set {i} contains {bad}, outside the ground set of size {ground}"
                )));
            }
            let s: BTreeSet<usize> = s.into_iter().collect();
            clean.push(s.into_iter().collect());
        }
        Ok(MatchingInstance {
            ground,
            demands,
            sets: clean,
        })
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    /// Ground elements selectable by at least one member of `subset`.
    pub fn neighborhood(&self, subset: &[usize]) -> Vec<usize> {
        let set: BTreeSet<usize> = subset.iter().flat_map(|&i| self.sets[i].iter().copied()).collect();
        set.into_iter().collect()
    }

    pub fn demand_of(&self, subset: &[usize]) -> usize {
        subset.iter().map(|&i| self.demands[i]).sum()
    }

    /// `true` when `subset` violates the generalized Hall inequality.
    pub fn is_deficient(&self, subset: &[usize]) -> bool {
        self.neighborhood(subset).len() < self.demand_of(subset)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrameSelection {
    /// Sorted ground elements chosen for each vector.
    Complete { assignment: Vec<Vec<usize>> },
    /// An inclusion-minimal set of vectors whose selectable sets are too small.
    Deficient {
        witness: Vec<usize>,
        neighborhood: Vec<usize>,
        demand: usize,
    },
}

impl FrameSelection {
    pub fn is_complete(&self) -> bool {
        matches!(self, FrameSelection::Complete { .. })
    }
}

fn augment(
    copy: usize,
    inst: &MatchingInstance,
    owner: &[usize],
    matched: &mut [Option<usize>],
    seen_right: &mut [bool],
    seen_left: &mut [bool],
) -> bool {
    seen_left[copy] = true;
    for &b in &inst.sets[owner[copy]] {
        if seen_right[b] {
            continue;
        }
        seen_right[b] = true;
        let free = match matched[b] {
            None => true,
            Some(other) => augment(other, inst, owner, matched, seen_right, seen_left),
        };
        if free {
            matched[b] = Some(copy);
            return true;
        }
    }
    false
}

fn minimize_witness(inst: &MatchingInstance, mut witness: Vec<usize>) -> Vec<usize> {
    'shrink: loop {
        for pos in 0..witness.len() {
            let mut cand = witness.clone();
            cand.remove(pos);
            if !cand.is_empty() && inst.is_deficient(&cand) {
                witness = cand;
                continue 'shrink;
            }
        }
        return witness;
    }
}

/// Selects `d_i` distinct ground elements from `B_i` for every vector `i`.
///
/// Each vector is split into `d_i` unit-demand copies and the copies are
/// matched one at a time by augmenting paths. When a copy cannot be matched,
/// the vectors owning the copies reached by alternating paths form a
/// deficient set, which is then shrunk to an inclusion-minimal one.
pub fn hall_matching(inst: &MatchingInstance) -> FrameSelection {
    let owner: Vec<usize> = inst
        .demands
        .iter()
        .enumerate()
        .flat_map(|(i, &d)| std::iter::repeat_n(i, d))
        .collect();
    let mut matched: Vec<Option<usize>> = vec![None; inst.ground];
    for copy in 0..owner.len() {
        let mut seen_right = vec![false; inst.ground];
        let mut seen_left = vec![false; owner.len()];
        if !augment(copy, inst, &owner, &mut matched, &mut seen_right, &mut seen_left) {
            let reached: BTreeSet<usize> = (0..owner.len()).filter(|&c| seen_left[c]).map(|c| owner[c]).collect();
            let witness = minimize_witness(inst, reached.into_iter().collect());
            debug_assert!(inst.is_deficient(&witness));
            return FrameSelection::Deficient {
                neighborhood: inst.neighborhood(&witness),
                demand: inst.demand_of(&witness),
                witness,
            };
        }
    }
    let mut assignment = vec![Vec::new(); inst.len()];
    for (b, slot) in matched.iter().enumerate() {
        if let Some(copy) = slot {
            assignment[owner[*copy]].push(b);
        }
    }
    FrameSelection::Complete { assignment }
}

/// Largest rank handled by the exhaustive root enumerations.
pub const EXHAUSTIVE_MAX_RANK: usize = 4;

fn check_exhaustive(rs: &RootSystem) -> Result<()> {
    if rs.rank > EXHAUSTIVE_MAX_RANK {
        return Err(Error::Capability {
            rank: rs.rank,
            max: EXHAUSTIVE_MAX_RANK,
        });
    }
    Ok(())
}

/// `t_i`: the largest number of positive roots in an `i`-dimensional
/// subspace, by brute force over spans of `i` independent positive roots.
pub fn rooted_subspace_count(rs: &RootSystem, i: usize) -> Result<usize> {
    check_exhaustive(rs)?;
    if i > rs.rank {
        return Err(Error::Precondition(format!("dimension {i} exceeds rank {}", rs.rank)));
    }
    if i == 0 {
        return Ok(0);
    }
    let pos = rs.positive_roots();
    let mut best = 0;
    for subset in (0..pos.len()).combinations(i) {
        let vecs: Vec<&[i64]> = subset.iter().map(|&j| pos[j].as_slice()).collect();
        if integer_rank(&vecs) != i {
            continue;
        }
        let count = pos
            .iter()
            .filter(|root| {
                let mut with = vecs.clone();
                with.push(root.as_slice());
                integer_rank(&with) == i
            })
            .count();
        best = best.max(count);
    }
    Ok(best)
}

/// `t_0, ..., t_r`.
pub fn rooted_subspace_table(rs: &RootSystem) -> Result<Vec<usize>> {
    (0..=rs.rank).map(|i| rooted_subspace_count(rs, i)).collect()
}

/// `2k + r - 2`, the dimension needed for `k` vectors in rank `r`.
pub fn required_dimension(r: usize, k: usize) -> usize {
    2 * k + r - 2
}

/// `k (2r - k + 1) / 2`, the telescoped lower bound `t_r - t_{r-k}`.
pub fn dimension_floor(r: usize, k: usize) -> usize {
    k * (2 * r + 1 - k) / 2
}

/// Whether the telescoped floor alone meets the required dimension.
pub fn exclusion_inequality(r: usize, k: usize) -> bool {
    dimension_floor(r, k) >= required_dimension(r, k)
}

#[derive(Clone, Debug, Serialize)]
pub struct SubTupleDimension {
    /// Indices into the input tuple.
    pub members: Vec<usize>,
    /// Sum of multiplicities of positive roots not vanishing on the span.
    pub dim: usize,
    pub required: usize,
    pub floor: usize,
    pub pass: bool,
    pub floor_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionEstimate {
    pub rank: usize,
    pub entries: Vec<SubTupleDimension>,
    pub all_pass: bool,
    pub floor_ok: bool,
}

fn ambient_rank(vectors: &[&DVector<f64>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols: Vec<DVector<f64>> = vectors.iter().map(|v| (*v).clone()).collect();
    column_span(&DMatrix::from_columns(&cols), 1e-9).0.ncols()
}

/// Dimension of `Q_{i_1} + ... + Q_{i_k}` for every sub-tuple of a spanning
/// tuple of Cartan vectors, against `2k + r - 2` and the floor
/// `k (2r - k + 1) / 2`.
pub fn dimension_estimate(rs: &RootSystem, tuple: &[ChamberVector]) -> Result<DimensionEstimate> {
    let r = rs.rank;
    if tuple.len() > r {
        return Err(Error::Precondition(format!("tuple of {} vectors exceeds rank {r}", tuple.len())));
    }
    let units: Vec<DVector<f64>> = tuple.iter().map(|v| v.coords.normalize()).collect();
    let refs: Vec<&DVector<f64>> = units.iter().collect();
    let span = ambient_rank(&refs);
    if span != r {
        return Err(Error::Precondition(format!("tuple spans a {span}-dimensional subspace, rank is {r}")));
    }
    let mut entries = Vec::new();
    for k in 1..=tuple.len() {
        for members in (0..tuple.len()).combinations(k) {
            let dim = (0..rs.num_positive())
                .filter(|&a| members.iter().any(|&i| rs.eval(a, units[i].as_slice()).abs() > SINGULAR_TOL))
                .map(|a| rs.multiplicities[a])
                .sum();
            let required = required_dimension(r, k);
            let floor = dimension_floor(r, k);
            entries.push(SubTupleDimension {
                members,
                dim,
                required,
                floor,
                pass: dim >= required,
                floor_ok: dim >= floor,
            });
        }
    }
    Ok(DimensionEstimate {
        rank: r,
        all_pass: entries.iter().all(|e| e.pass),
        floor_ok: entries.iter().all(|e| e.floor_ok),
        entries,
    })
}

/// The maximally singular lines of the Cartan subspace: common kernels of
/// `r - 1` independent roots, one unit representative each, with the first
/// nonzero coordinate positive.
pub fn singular_lines(rs: &RootSystem) -> Vec<ChamberVector> {
    let r = rs.rank;
    let pos = rs.positive_roots();
    let d = rs.ambient_dim();
    let all = DMatrix::from_fn(d, pos.len(), |i, j| pos[j][i] as f64);
    let (span, _) = column_span(&all, 1e-9);
    let mut lines: Vec<DVector<f64>> = Vec::new();
    for subset in (0..pos.len()).combinations(r - 1) {
        let vecs: Vec<&[i64]> = subset.iter().map(|&j| pos[j].as_slice()).collect();
        if integer_rank(&vecs) != r - 1 {
            continue;
        }
        let projected = if subset.is_empty() {
            span.clone()
        } else {
            let a = DMatrix::from_fn(d, subset.len(), |i, j| pos[subset[j]][i] as f64);
            let gram = (a.transpose() * &a).cholesky().expect("independent roots");
            let coef = gram.solve(&(a.transpose() * &span));
            &span - a * coef
        };
        let best = (0..projected.ncols())
            .max_by(|&x, &y| projected.column(x).norm().total_cmp(&projected.column(y).norm()))
            .expect("span is nonempty");
        let mut line = projected.column(best).normalize();
        if let Some(first) = line.iter().find(|x| x.abs() > 1e-9) {
            if *first < 0.0 {
                line.neg_mut();
            }
        }
        if !lines.iter().any(|l| l.dot(&line).abs() > 1.0 - 1e-12) {
            lines.push(line);
        }
    }
    lines.into_iter().map(|l| ChamberVector::new(rs, l)).collect()
}

/// All `r`-subsets of `vectors` (as sorted index lists) spanning the Cartan
/// subspace.
pub fn spanning_tuples(rs: &RootSystem, vectors: &[ChamberVector]) -> Vec<Vec<usize>> {
    (0..vectors.len())
        .combinations(rs.rank)
        .filter(|idx| {
            let refs: Vec<&DVector<f64>> = idx.iter().map(|&i| &vectors[i].coords).collect();
            ambient_rank(&refs) == rs.rank
        })
        .collect()
}

/// Orthonormal vectors of `F^perp` picked from the root blocks, matched to
/// the input vectors.
#[derive(Clone, Debug, Serialize)]
pub struct PickedFrame {
    pub v_stars: Vec<ChamberVector>,
    /// Root blocks selected for each input vector.
    pub assignment: Vec<Vec<usize>>,
    /// Input vector of each output column.
    pub owners: Vec<usize>,
    /// Root block of each output column.
    pub roots: Vec<usize>,
    /// Output columns in frame coordinates.
    #[serde(skip)]
    pub vectors: DMatrix<f64>,
}

/// Picks `r` root-block vectors for the first singular vector and two for
/// each of the others, each from the blocks on which its singular vector
/// does not vanish.
pub fn pick_with_singular(frame: &CartanFrame, v_stars: &[ChamberVector]) -> Result<PickedFrame> {
    let r = frame.rank();
    let demands: Vec<usize> = (0..v_stars.len()).map(|i| if i == 0 { r } else { 2 }).collect();
    let sets = v_stars.iter().map(|v| orthogonal_root_sum(frame, v).roots).collect();
    let inst = MatchingInstance::new(frame.blocks.len(), demands, sets)?;
    match hall_matching(&inst) {
        FrameSelection::Deficient {
            witness,
            neighborhood,
            demand,
        } => Err(Error::InfeasibleFrame {
            deficient: witness,
            reachable: neighborhood.len(),
            demand,
        }),
        FrameSelection::Complete { assignment } => {
            let mut owners = Vec::new();
            let mut roots = Vec::new();
            for (i, picked) in assignment.iter().enumerate() {
                for &b in picked {
                    owners.push(i);
                    roots.push(b);
                }
            }
            let mut vectors = DMatrix::zeros(frame.dim(), roots.len());
            for (col, &b) in roots.iter().enumerate() {
                vectors[(r + b, col)] = 1.0;
            }
            Ok(PickedFrame {
                v_stars: v_stars.to_vec(),
                assignment,
                owners,
                roots,
                vectors,
            })
        }
    }
}

/// Orthonormal `(3r - 2)`-frame in `F^perp` for a `1/2`-orthonormal `r`-frame
/// of Cartan vectors, using the maximally singular vectors within `rho`.
pub fn pick_orthogonal_frame(frame: &CartanFrame, half_frame: &[ChamberVector], rho: f64) -> Result<PickedFrame> {
    let r = frame.rank();
    if half_frame.len() != r {
        return Err(Error::Precondition(format!("expected {r} vectors, got {}", half_frame.len())));
    }
    let cols: Vec<DVector<f64>> = half_frame.iter().map(|v| v.coords.clone()).collect();
    let inner = max_cross_inner(&DMatrix::from_columns(&cols))?;
    if inner >= 0.5 {
        return Err(Error::Precondition(format!(
            "frame is only {inner:.3}-orthonormal, need 1/2"
        )));
    }
    let v_stars: Vec<ChamberVector> = half_frame
        .iter()
        .map(|v| maximally_singular_near(&frame.roots, v, rho))
        .collect();
    pick_with_singular(frame, &v_stars)
}

/// Block label per diagonal index: indices share a label when `v_star` has
/// equal entries there, i.e. when the root between them vanishes.
pub fn stabilizer_blocks(frame: &CartanFrame, v_star: &ChamberVector) -> Vec<usize> {
    let m = frame.m;
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &idx in &v_star.vanishing {
        let b = &frame.blocks[idx];
        let (x, y) = (find(&mut parent, b.i), find(&mut parent, b.j));
        parent[x.max(y)] = x.min(y);
    }
    let mut labels = vec![usize::MAX; m];
    let mut next = 0;
    for i in 0..m {
        let root = find(&mut parent, i);
        if labels[root] == usize::MAX {
            labels[root] = next;
            next += 1;
        }
        labels[i] = labels[root];
    }
    labels
}

fn label_groups(labels: &[usize]) -> Vec<Vec<usize>> {
    let count = labels.iter().max().map_or(0, |&x| x + 1);
    let mut groups = vec![Vec::new(); count];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    groups
}

fn ratio_to_angle(part: f64, whole: f64) -> f64 {
    (part / whole).clamp(0.0, 1.0).asin()
}

/// Angle between a traceless symmetric matrix and the flat of diagonal
/// matrices.
pub fn angle_to_flat(u: &DMatrix<f64>) -> f64 {
    let off = u.norm_squared() - u.diagonal().norm_squared();
    ratio_to_angle(off.max(0.0).sqrt(), u.norm())
}

/// Angle between a traceless symmetric matrix and `F^perp`.
pub fn angle_to_flat_perp(u: &DMatrix<f64>) -> f64 {
    ratio_to_angle(u.diagonal().norm(), u.norm())
}

/// Angle to the block-diagonal matrices of the given labelling, which is the
/// orbit `K_{v*} F` when the labels come from [`stabilizer_blocks`].
pub fn angle_to_stabilizer_orbit(u: &DMatrix<f64>, labels: &[usize]) -> f64 {
    ratio_to_angle(off_block_norm(u, labels), u.norm())
}

fn off_block_norm(u: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let m = u.nrows();
    let mut s = 0.0;
    for a in 0..m {
        for b in 0..m {
            if labels[a] != labels[b] {
                s += u[(a, b)] * u[(a, b)];
            }
        }
    }
    s.sqrt()
}

/// `h u h^T`, the isotropy action on the tangent space at the base point.
pub fn conjugate(h: &DMatrix<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
    h * u * h.transpose()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFamily {
    Haar,
    NearIdentity,
    NearStabilizer,
}

impl SampleFamily {
    /// Round-robin family of sample `s`.
    pub fn of(s: usize) -> Self {
        match s % 3 {
            0 => SampleFamily::Haar,
            1 => SampleFamily::NearIdentity,
            _ => SampleFamily::NearStabilizer,
        }
    }
}

fn small_rotation<R: Rng + ?Sized>(rng: &mut R, m: usize) -> DMatrix<f64> {
    let scale = 10f64.powf(rng.random_range(-4.0..-1.0));
    expm_antisymmetric(&(random_antisymmetric(rng, m) * scale))
}

/// Haar element of the block-diagonal rotations preserving the labelling.
pub fn stabilizer_element<R: Rng + ?Sized>(rng: &mut R, labels: &[usize]) -> DMatrix<f64> {
    let m = labels.len();
    let mut h = DMatrix::zeros(m, m);
    for group in label_groups(labels) {
        let q = haar_special_orthogonal(rng, group.len());
        for (a, &i) in group.iter().enumerate() {
            for (b, &j) in group.iter().enumerate() {
                h[(i, j)] = q[(a, b)];
            }
        }
    }
    h
}

/// A rotation from the given family; `labels` describe the stabilizer used
/// by [`SampleFamily::NearStabilizer`].
pub fn sample_rotation<R: Rng + ?Sized>(rng: &mut R, labels: &[usize], family: SampleFamily) -> DMatrix<f64> {
    let m = labels.len();
    match family {
        SampleFamily::Haar => haar_special_orthogonal(rng, m),
        SampleFamily::NearIdentity => small_rotation(rng, m),
        SampleFamily::NearStabilizer => stabilizer_element(rng, labels) * small_rotation(rng, m),
    }
}

/// Denominators below this are skipped by the angle probes.
pub const ANGLE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct AngleProbe {
    /// Largest `angle(hu, F^perp) / angle(hv, F)` seen.
    pub sup: f64,
    pub argmax: Option<usize>,
    pub family: Option<SampleFamily>,
    /// Largest `angle(hu, F^perp) / angle(h k0 v, K_{v*} F)` over sampled
    /// `k0` in the stabilizer of `v*`.
    pub second_sup: f64,
    #[serde(skip)]
    pub witness: Option<DMatrix<f64>>,
    pub samples: usize,
    pub skipped: usize,
}

/// `(angle(hu, F^perp), angle(hv, F))` for frame coordinates `u` and a Cartan
/// vector `v`.
pub fn angle_pair(frame: &CartanFrame, v: &ChamberVector, u: &DVector<f64>, h: &DMatrix<f64>) -> (f64, f64) {
    let vm = DMatrix::from_diagonal(&v.coords);
    let um = frame.matrix(u);
    (angle_to_flat_perp(&conjugate(h, &um)), angle_to_flat(&conjugate(h, &vm)))
}

fn check_in_root_sum(frame: &CartanFrame, v_star: &ChamberVector, u: &DVector<f64>) -> Result<()> {
    if (u.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition("probe vector is not a unit vector".into()));
    }
    let r = frame.rank();
    let outside = (0..r)
        .map(|i| u[i].abs())
        .chain(v_star.vanishing.iter().map(|&a| u[r + a].abs()))
        .fold(0.0, f64::max);
    if outside > 1e-10 {
        return Err(Error::Precondition(format!(
            "probe vector leaves the root sum of v* by {outside:e}"
        )));
    }
    Ok(())
}

/// Empirical supremum of `angle(hu, F^perp) / angle(hv, F)` over sampled
/// rotations `h`: Haar, near the identity, and near the stabilizer of `v*`
/// in round-robin order. Ties keep the earliest sample.
pub fn angle_ratio_probe(
    frame: &CartanFrame,
    v: &ChamberVector,
    v_star: &ChamberVector,
    u: &DVector<f64>,
    samples: usize,
    seed: u64,
) -> Result<AngleProbe> {
    check_in_root_sum(frame, v_star, u)?;
    let labels = stabilizer_blocks(frame, v_star);
    let vm = DMatrix::from_diagonal(&v.coords.normalize());
    let um = frame.matrix(u);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = AngleProbe {
        sup: 0.0,
        argmax: None,
        family: None,
        second_sup: 0.0,
        witness: None,
        samples,
        skipped: 0,
    };
    for s in 0..samples {
        let family = SampleFamily::of(s);
        let h = sample_rotation(&mut rng, &labels, family);
        let k0 = stabilizer_element(&mut rng, &labels);
        let num = angle_to_flat_perp(&conjugate(&h, &um));
        let den = angle_to_flat(&conjugate(&h, &vm));
        if den < ANGLE_FLOOR {
            probe.skipped += 1;
        } else if num / den > probe.sup {
            probe.sup = num / den;
            probe.argmax = Some(s);
            probe.family = Some(family);
            probe.witness = Some(h.clone());
        }
        let den2 = angle_to_stabilizer_orbit(&conjugate(&(&h * &k0), &vm), &labels);
        if den2 >= ANGLE_FLOOR {
            probe.second_sup = probe.second_sup.max(num / den2);
        }
    }
    Ok(probe)
}

/// Measured scale factor `C'` in the weak matching output tolerance `C' eps`.
///
/// Observed deviations grow linearly in `eps` with slope below 0.5 for
/// random frames in `m = 5, 6` and `eps` in `1e-4..1e-2`.
pub const DEFAULT_C_PRIME: f64 = 2.0;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeakMatchingOptions {
    pub rho: f64,
    /// Largest admissible `eps`.
    pub delta: f64,
    pub c_prime: f64,
    /// Off-block residual at which the alignment iteration stops.
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for WeakMatchingOptions {
    fn default() -> Self {
        WeakMatchingOptions {
            rho: 0.2,
            delta: 0.05,
            c_prime: DEFAULT_C_PRIME,
            residual_tol: 1e-8,
            max_iter: 50,
        }
    }
}

/// A frame with each column tagged by the input vector it is matched to.
#[derive(Clone, Debug)]
pub struct MatchedFrame {
    pub vectors: DMatrix<f64>,
    pub owners: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakMatching {
    /// Output `(2k + r - 2)`-frame in frame coordinates.
    #[serde(skip)]
    pub vectors: DMatrix<f64>,
    pub owners: Vec<usize>,
    pub roots: Vec<usize>,
    pub v_stars: Vec<ChamberVector>,
    /// Set where no singular vector lay within `rho` and the nearest wall
    /// was used instead.
    pub fallback: Vec<bool>,
    /// Rotations `k_i` carrying the (extended) input vectors into `K_{v*} F`.
    #[serde(skip)]
    pub alignments: Vec<DMatrix<f64>>,
    /// `|k_i - I|_F`.
    pub alignment_sizes: Vec<f64>,
    pub alignment_iterations: Vec<usize>,
    /// The rotated vectors `hat k_i k_i v_i`, which lie in `F`.
    pub flat_frame: Vec<ChamberVector>,
    pub flat_frame_defect: f64,
    /// Measured `angle(V, F)`.
    pub measured_angle: f64,
    pub epsilon: f64,
    /// Largest `|<u, u'>|` over distinct output columns.
    pub deviation: f64,
    pub tolerance: f64,
    pub ok: bool,
}

impl WeakMatching {
    pub fn matched(&self) -> MatchedFrame {
        MatchedFrame {
            vectors: self.vectors.clone(),
            owners: self.owners.clone(),
        }
    }
}

/// Largest principal angle between the column span of orthonormal frame
/// coordinates and the flat.
pub fn subspace_angle_to_flat(frame: &CartanFrame, v: &DMatrix<f64>) -> f64 {
    let r = frame.rank();
    let perp = v.rows(r, v.nrows() - r).into_owned();
    if perp.ncols() == 0 {
        return 0.0;
    }
    let top = perp.singular_values().iter().copied().fold(0.0, f64::max);
    top.clamp(0.0, 1.0).asin()
}

fn align_to_orbit(
    u: &DMatrix<f64>,
    labels: &[usize],
    opts: &WeakMatchingOptions,
    which: usize,
) -> Result<(DMatrix<f64>, usize)> {
    let m = u.nrows();
    let mut k = DMatrix::identity(m, m);
    for iter in 0..=opts.max_iter {
        let w = conjugate(&k, u);
        let res = off_block_norm(&w, labels);
        if res <= opts.residual_tol {
            return Ok((k, iter));
        }
        if iter == opts.max_iter {
            return Err(Error::Precondition(format!(
                "alignment of vector {which} stalled at off-block residual {res:e}"
            )));
        }
        // Linearized solve of offblock(e^A W e^-A) = 0 with A supported off
        // the blocks: A_ab (W_aa - W_bb) = W_ab.
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in (i + 1)..m {
                if labels[i] == labels[j] {
                    continue;
                }
                let gap = w[(i, i)] - w[(j, j)];
                if gap.abs() < 1e-12 {
                    return Err(Error::Precondition(format!(
                        "vector {which} has a vanishing root outside the stabilizer of its singular vector"
                    )));
                }
                a[(i, j)] = w[(i, j)] / gap;
                a[(j, i)] = -a[(i, j)];
            }
        }
        k = expm_antisymmetric(&a) * k;
    }
    unreachable!("the loop returns on its last iteration")
}

/// Element of the stabilizer of `v*` diagonalizing a block-diagonal `w`,
/// with eigenvalues placed in the order of the diagonal of `w`.
fn block_diagonalizer(w: &DMatrix<f64>, labels: &[usize]) -> DMatrix<f64> {
    let m = w.nrows();
    let mut hat = DMatrix::zeros(m, m);
    for group in label_groups(labels) {
        let sub = DMatrix::from_fn(group.len(), group.len(), |a, b| w[(group[a], group[b])]);
        let (_, vecs) = sym_eigen(&sub);
        let mut positions = group.clone();
        positions.sort_by(|&a, &b| w[(a, a)].total_cmp(&w[(b, b)]));
        for (j, &pos) in positions.iter().enumerate() {
            for (c, &col) in group.iter().enumerate() {
                hat[(pos, col)] = vecs[(c, j)];
            }
        }
    }
    if hat.determinant() < 0.0 {
        hat.row_mut(0).neg_mut();
    }
    hat
}

/// Weak eigenvalue matching for an orthonormal `k`-frame `v_frame` (columns in
/// frame coordinates) within angle `epsilon` of the flat.
///
/// The frame is extended inside `F` to `r` vectors. Each vector is rotated
/// by a small `k_i` into `K_{v_i*} F` and then by `hat k_i` in the stabilizer
/// into `F`; root blocks are matched to the singular vectors with demands
/// `(r, 2, ..., 2)`, and the blocks matched to the first `k` vectors are
/// carried back by `k_i^{-1}`.
pub fn weak_eigenvalue_matching(
    frame: &CartanFrame,
    v_frame: &DMatrix<f64>,
    epsilon: f64,
    opts: &WeakMatchingOptions,
) -> Result<WeakMatching> {
    let r = frame.rank();
    let n = frame.dim();
    let k = v_frame.ncols();
    if r < 2 {
        return Err(Error::Precondition("weak matching needs rank at least 2".into()));
    }
    if v_frame.nrows() != n || k == 0 || k > r {
        return Err(Error::Precondition(format!(
            "expected between 1 and {r} columns of length {n}, got {}x{}",
            v_frame.nrows(),
            k
        )));
    }
    if orthonormality_defect(v_frame) > 1e-10 {
        return Err(Error::Precondition("input frame is not orthonormal".into()));
    }
    if epsilon >= opts.delta {
        return Err(Error::Precondition(format!("epsilon {epsilon} is not below delta {}", opts.delta)));
    }
    let measured = subspace_angle_to_flat(frame, v_frame);
    if measured > epsilon + 1e-12 {
        return Err(Error::Precondition(format!(
            "frame makes angle {measured:e} with the flat, above epsilon {epsilon:e}"
        )));
    }

    // Extend inside F by the complement of the flat part of the span; those
    // vectors are orthogonal to every input vector.
    let flat_part = v_frame.rows(0, r).into_owned();
    let (flat_basis, _) = column_span(&flat_part, 1e-9);
    if flat_basis.ncols() < k {
        return Err(Error::Precondition("frame projects degenerately onto the flat".into()));
    }
    let mut columns: Vec<DVector<f64>> = (0..k).map(|j| v_frame.column(j).into_owned()).collect();
    if k < r {
        let ext = orthonormal_complement(&flat_basis);
        for j in 0..(r - k) {
            let mut c = DVector::zeros(n);
            c.rows_mut(0, r).copy_from(&ext.column(j));
            columns.push(c);
        }
    }

    let mut v_stars = Vec::with_capacity(r);
    let mut fallback = Vec::with_capacity(r);
    let mut alignments = Vec::with_capacity(r);
    let mut iterations = Vec::with_capacity(r);
    let mut flat_frame = Vec::with_capacity(r);
    for (i, col) in columns.iter().enumerate() {
        let u = frame.matrix(col);
        let diag = u.diagonal();
        if diag.norm() < 1e-12 {
            return Err(Error::Precondition(format!("vector {i} is orthogonal to the flat")));
        }
        let w = frame.chamber_vector(diag.normalize());
        let mut v_star = maximally_singular_near(&frame.roots, &w, opts.rho);
        let fb = v_star.is_regular();
        if fb {
            v_star = nearest_wall_projection(&frame.roots, &w);
        }
        let labels = stabilizer_blocks(frame, &v_star);
        let (k_i, iters) = align_to_orbit(&u, &labels, opts, i)?;
        let aligned = conjugate(&k_i, &u);
        let hat = block_diagonalizer(&aligned, &labels);
        let flat = conjugate(&hat, &aligned).diagonal();
        flat_frame.push(frame.chamber_vector(flat));
        v_stars.push(v_star);
        fallback.push(fb);
        alignments.push(k_i);
        iterations.push(iters);
    }
    let flat_cols: Vec<DVector<f64>> = flat_frame.iter().map(|f| f.coords.normalize()).collect();
    let flat_defect = max_cross_inner(&DMatrix::from_columns(&flat_cols))?;
    if flat_defect >= 0.5 {
        return Err(Error::Precondition(format!(
            "rotated frame in the flat is only {flat_defect:.3}-orthonormal"
        )));
    }

    let picked = pick_with_singular(frame, &v_stars)?;
    let mut out = Vec::new();
    let mut owners = Vec::new();
    let mut roots = Vec::new();
    for (&owner, &root) in picked.owners.iter().zip(&picked.roots) {
        if owner >= k {
            continue;
        }
        let kt = alignments[owner].transpose();
        out.push(frame.coords(&conjugate(&kt, &frame.blocks[root].p)));
        owners.push(owner);
        roots.push(root);
    }
    let vectors = DMatrix::from_columns(&out);
    let deviation = max_cross_inner(&vectors)?;
    let tolerance = opts.c_prime * epsilon;
    let identity = DMatrix::<f64>::identity(frame.m, frame.m);
    Ok(WeakMatching {
        vectors,
        owners,
        roots,
        v_stars,
        fallback,
        alignment_sizes: alignments.iter().map(|a| (a - &identity).norm()).collect(),
        alignments,
        alignment_iterations: iterations,
        flat_frame,
        flat_frame_defect: flat_defect,
        measured_angle: measured,
        epsilon,
        deviation,
        tolerance,
        ok: deviation <= tolerance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchingAngleCheck {
    /// Largest `angle(h u, F^perp) / angle(h v_owner, F)` over samples and
    /// output columns.
    pub sup: f64,
    /// `(sample, column)` attaining the supremum.
    pub argmax: Option<(usize, usize)>,
    pub samples: usize,
    pub skipped: usize,
}

/// Samples `h` and measures the angle inequalities between the output
/// columns of a weak matching and the input vectors they are matched to.
pub fn matching_angle_check(
    frame: &CartanFrame,
    v_frame: &DMatrix<f64>,
    result: &WeakMatching,
    samples: usize,
    seed: u64,
) -> MatchingAngleCheck {
    let labels = stabilizer_blocks(frame, &result.v_stars[0]);
    let inputs: Vec<DMatrix<f64>> = (0..v_frame.ncols())
        .map(|j| frame.matrix(&v_frame.column(j).into_owned()))
        .collect();
    let outputs: Vec<DMatrix<f64>> = (0..result.vectors.ncols())
        .map(|j| frame.matrix(&result.vectors.column(j).into_owned()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = MatchingAngleCheck {
        sup: 0.0,
        argmax: None,
        samples,
        skipped: 0,
    };
    for s in 0..samples {
        let h = sample_rotation(&mut rng, &labels, SampleFamily::of(s));
        let dens: Vec<f64> = inputs.iter().map(|v| angle_to_flat(&conjugate(&h, v))).collect();
        for (c, u) in outputs.iter().enumerate() {
            let den = dens[result.owners[c]];
            if den < ANGLE_FLOOR {
                check.skipped += 1;
                continue;
            }
            let ratio = angle_to_flat_perp(&conjugate(&h, u)) / den;
            if ratio > check.sup {
                check.sup = ratio;
                check.argmax = Some((s, c));
            }
        }
    }
    check
}

/// Largest [`angle_ratio_probe`] supremum, over both inequalities, across the
/// output columns of a weak matching, each probed with its flat vector and
/// singular vector. The second inequality is the one that covers input
/// vectors rotated off the flat by the stabilizer.
pub fn matching_probe_constant(frame: &CartanFrame, result: &WeakMatching, samples: usize, seed: u64) -> Result<f64> {
    let mut best = 0.0f64;
    for (c, (&owner, &root)) in result.owners.iter().zip(&result.roots).enumerate() {
        let mut u = DVector::zeros(frame.dim());
        u[frame.rank() + root] = 1.0;
        let probe = angle_ratio_probe(
            frame,
            &result.flat_frame[owner],
            &result.v_stars[owner],
            &u,
            samples,
            seed.wrapping_add(c as u64),
        )?;
        best = best.max(probe.sup).max(probe.second_sup);
    }
    Ok(best)
}

/// A rotation bringing a set of traceless symmetric matrices as close to
/// diagonal as possible, with the remaining angle to the flat.
#[derive(Clone, Debug)]
pub struct FlatAlignment {
    pub rotation: DMatrix<f64>,
    pub angle: f64,
    pub sweeps: usize,
}

/// Joint diagonalization by Jacobi rotations of the matrices of the given
/// frame-coordinate columns. Each rotation minimizes the summed squared
/// `(p, q)` entries in closed form.
pub fn flat_alignment(frame: &CartanFrame, vectors: &DMatrix<f64>) -> FlatAlignment {
    let m = frame.m;
    let mut mats: Vec<DMatrix<f64>> = (0..vectors.ncols())
        .map(|j| frame.matrix(&vectors.column(j).into_owned()))
        .collect();
    let mut rot = DMatrix::<f64>::identity(m, m);
    let mut sweeps = 0;
    for sweep in 1..=100 {
        sweeps = sweep;
        let mut largest = 0.0f64;
        for p in 0..m {
            for q in (p + 1)..m {
                let mut g = nalgebra::Matrix2::<f64>::zeros();
                for a in &mats {
                    let h = nalgebra::Vector2::new(a[(p, p)] - a[(q, q)], 2.0 * a[(p, q)]);
                    g += h * h.transpose();
                }
                let eig = g.symmetric_eigen();
                let top = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
                let mut x = eig.eigenvectors[(0, top)];
                let mut y = eig.eigenvectors[(1, top)];
                if x < 0.0 {
                    x = -x;
                    y = -y;
                }
                let c = ((1.0 + x) / 2.0).sqrt();
                if c == 0.0 {
                    continue;
                }
                let s = y / (2.0 * c);
                // The closed form fixes the angle up to orientation; keep the
                // orientation that zeroes more of the (p, q) entries.
                let off = |s: f64| -> f64 {
                    mats.iter()
                        .map(|a| {
                            let v = (c * c - s * s) * a[(p, q)] + c * s * (a[(q, q)] - a[(p, p)]);
                            v * v
                        })
                        .sum()
                };
                let s = if off(-s) < off(s) { -s } else { s };
                if s.abs() < 1e-15 {
                    continue;
                }
                largest = largest.max(s.abs());
                let mut g_rot = DMatrix::<f64>::identity(m, m);
                g_rot[(p, p)] = c;
                g_rot[(q, q)] = c;
                g_rot[(p, q)] = -s;
                g_rot[(q, p)] = s;
                for a in mats.iter_mut() {
                    *a = g_rot.transpose() * &*a * &g_rot;
                }
                rot = g_rot.transpose() * rot;
            }
        }
        if largest < 1e-13 {
            break;
        }
    }
    let coords: Vec<DVector<f64>> = mats.iter().map(|a| frame.coords(a)).collect();
    let angle = if coords.is_empty() {
        0.0
    } else {
        subspace_angle_to_flat(frame, &DMatrix::from_columns(&coords))
    };
    FlatAlignment {
        rotation: rot,
        angle,
        sweeps,
    }
}

/// Matched frame for arbitrary orthonormal vectors: rotate them towards the
/// flat by [`flat_alignment`], run [`weak_eigenvalue_matching`] with `eps`
/// set to the remaining angle, and rotate the output back.
pub fn match_vectors(
    frame: &CartanFrame,
    vectors: &DMatrix<f64>,
    opts: &WeakMatchingOptions,
) -> Result<(MatchedFrame, WeakMatching)> {
    let align = flat_alignment(frame, vectors);
    let rotated: Vec<DVector<f64>> = (0..vectors.ncols())
        .map(|j| frame.coords(&conjugate(&align.rotation, &frame.matrix(&vectors.column(j).into_owned()))))
        .collect();
    let rotated = DMatrix::from_columns(&rotated);
    let eps = subspace_angle_to_flat(frame, &rotated);
    let result = weak_eigenvalue_matching(frame, &rotated, eps, opts)?;
    let back = align.rotation.transpose();
    let cols: Vec<DVector<f64>> = (0..result.vectors.ncols())
        .map(|j| frame.coords(&conjugate(&back, &frame.matrix(&result.vectors.column(j).into_owned()))))
        .collect();
    Ok((
        MatchedFrame {
            vectors: DMatrix::from_columns(&cols),
            owners: result.owners.clone(),
        },
        result,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{build_cartan_frame, root_system, Family};

    #[test]
    fn spec_deficiency_example() {
        let inst = MatchingInstance::new(3, vec![2, 2], vec![vec![0, 1, 2], vec![0, 1, 2]]).unwrap();
        match hall_matching(&inst) {
            FrameSelection::Deficient {
                witness,
                neighborhood,
                demand,
            } => {
                assert_eq!(witness, vec![0, 1]);
                assert_eq!(neighborhood.len(), 3);
                assert_eq!(demand, 4);
            }
            other => panic!("expected a deficiency, got {other:?}"),
        }
    }

    #[test]
    fn a2_lines_are_three() {
        let rs = root_system(Family::A, 2).unwrap();
        let lines = singular_lines(&rs);
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.vanishing.len() == 1));
    }

    #[test]
    fn stabilizer_blocks_group_equal_entries() {
        let f = build_cartan_frame(4).unwrap();
        let v = f.chamber_vector(DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]).normalize());
        assert_eq!(stabilizer_blocks(&f, &v), vec![0, 1, 0, 1]);
    }
}
