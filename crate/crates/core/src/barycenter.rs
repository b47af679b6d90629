//! The convex functional `x -> sum_j w_j B(x, theta_j)`, its minimizer, the
//! barycentric straightening of simplices and its derivative, the forms
//! `Q1`, `Q2`, `Q2bar`, and Jacobian ratio bounds.
//!
//! All tangent quantities at a point `x` are frame coordinates in the chart
//! `U -> x^{1/2} e^U x^{1/2}`, which is the Riemannian exponential at `x`, so
//! the Euclidean metric on coordinates is the Riemannian metric.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{FormLabel, QuadraticForm};
use crate::linalg::{column_span, orthonormal_complement, random_unit_vector, sym_eigen, sym_eigenvalues, symmetrize};
use crate::spd::{
    exp_at, log_at, push_measure, sample_boundary_measure, AtomEval, BoundaryAtom, SpdPoint,
    SymmetricSpace, WeightedBoundaryMeasure,
};

/// Hessian eigenvalue floor below which a measure counts as degenerate.
pub const HESSIAN_GUARD: f64 = 1e-8;

/// Restricted `Q2` determinants below this are treated as infinite ratios.
pub const DET_GUARD: f64 = 1e-300;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 100,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 30,
        }
    }
}

/// A weighted atom tagged with the vertex measure it came from.
#[derive(Clone, Copy, Debug)]
struct Term<'a> {
    atom: &'a BoundaryAtom,
    weight: f64,
    group: usize,
}

#[derive(Clone, Copy, Debug, Default)]
struct Wants {
    hessian: bool,
    q1: bool,
    q2bar: bool,
}

/// Functional data at one point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
    /// `Q2`, the Hessian of the functional.
    pub hessian: Option<DMatrix<f64>>,
    pub q1: Option<DMatrix<f64>>,
    pub q2bar: Option<DMatrix<f64>>,
    /// Gradient of each group's weighted sum (unnormalized by group mass).
    pub group_gradients: Vec<DVector<f64>>,
}

fn evaluate_terms(
    space: &SymmetricSpace,
    x: &SpdPoint,
    terms: &[Term<'_>],
    groups: usize,
    wants: Wants,
) -> Result<Evaluation> {
    let n = space.n();
    let nr = space.frame.blocks.len();
    let live: Vec<&Term<'_>> = terms.iter().filter(|t| t.weight > 0.0).collect();
    let mut value = 0.0;
    let mut gradient = DVector::zeros(n);
    let mut group_gradients = vec![DVector::zeros(n); groups];
    let need_rows = wants.hessian || wants.q2bar;
    let mut hess_rows = if wants.hessian { DMatrix::zeros(live.len() * nr, n) } else { DMatrix::zeros(0, n) };
    let mut bar_rows = if wants.q2bar { DMatrix::zeros(live.len() * nr, n) } else { DMatrix::zeros(0, n) };
    let mut grad_rows = if wants.q1 { DMatrix::zeros(live.len(), n) } else { DMatrix::zeros(0, n) };
    let hw: Vec<f64> = (0..nr).map(|a| space.hessian_weight(a).sqrt()).collect();
    for (idx, t) in live.iter().enumerate() {
        let ev = AtomEval::at(space, x, t.atom)?;
        let g = ev.gradient_coords(space);
        value += t.weight * ev.value;
        gradient.axpy(t.weight, &g, 1.0);
        group_gradients[t.group].axpy(t.weight, &g, 1.0);
        let sw = t.weight.sqrt();
        if wants.q1 {
            grad_rows.row_mut(idx).copy_from(&(g.transpose() * sw));
        }
        if need_rows {
            let rows = ev.root_rows(space);
            for a in 0..nr {
                if wants.hessian {
                    hess_rows.row_mut(idx * nr + a).copy_from(&(rows.row(a) * (sw * hw[a])));
                }
                if wants.q2bar {
                    bar_rows.row_mut(idx * nr + a).copy_from(&(rows.row(a) * sw));
                }
            }
        }
    }
    let gram = |z: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(n, n);
        out.gemm_tr(1.0, z, z, 0.0);
        symmetrize(&out)
    };
    Ok(Evaluation {
        value,
        gradient,
        hessian: wants.hessian.then(|| gram(&hess_rows)),
        q1: wants.q1.then(|| gram(&grad_rows)),
        q2bar: wants.q2bar.then(|| gram(&bar_rows)),
        group_gradients,
    })
}

fn single_terms(nu: &WeightedBoundaryMeasure) -> Vec<Term<'_>> {
    nu.atoms
        .iter()
        .zip(&nu.weights)
        .map(|(atom, &weight)| Term { atom, weight, group: 0 })
        .collect()
}

fn guard_hessian(h: &DMatrix<f64>) -> Result<f64> {
    let min = sym_eigenvalues(h)[0];
    if min < HESSIAN_GUARD {
        return Err(Error::DegenerateMeasure(min));
    }
    Ok(min)
}

/// Value, gradient and Hessian (`Q2`) of the functional of `nu` at `x`.
pub fn functional(
    space: &SymmetricSpace,
    x: &SpdPoint,
    nu: &WeightedBoundaryMeasure,
) -> Result<(f64, DVector<f64>, QuadraticForm)> {
    let ev = evaluate_terms(space, x, &single_terms(nu), 1, Wants { hessian: true, ..Wants::default() })?;
    let h = ev.hessian.expect("requested");
    guard_hessian(&h)?;
    Ok((ev.value, ev.gradient, QuadraticForm::new(h, FormLabel::Q2)))
}

pub fn q1_form(space: &SymmetricSpace, x: &SpdPoint, nu: &WeightedBoundaryMeasure) -> Result<QuadraticForm> {
    let ev = evaluate_terms(space, x, &single_terms(nu), 1, Wants { q1: true, ..Wants::default() })?;
    Ok(QuadraticForm::new(ev.q1.expect("requested"), FormLabel::Q1))
}

pub fn q2_form(space: &SymmetricSpace, x: &SpdPoint, nu: &WeightedBoundaryMeasure) -> Result<QuadraticForm> {
    let ev = evaluate_terms(space, x, &single_terms(nu), 1, Wants { hessian: true, ..Wants::default() })?;
    Ok(QuadraticForm::new(ev.hessian.expect("requested"), FormLabel::Q2))
}

pub fn q2bar_form(space: &SymmetricSpace, x: &SpdPoint, nu: &WeightedBoundaryMeasure) -> Result<QuadraticForm> {
    let ev = evaluate_terms(space, x, &single_terms(nu), 1, Wants { q2bar: true, ..Wants::default() })?;
    Ok(QuadraticForm::new(ev.q2bar.expect("requested"), FormLabel::Q2Bar))
}

/// Minimizer of the functional together with solver diagnostics.
#[derive(Clone, Debug)]
pub struct BarycenterResult {
    pub point: SpdPoint,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Gradient norm at every iterate, starting point first.
    pub trace: Vec<f64>,
}

fn minimize(
    space: &SymmetricSpace,
    terms: &[Term<'_>],
    groups: usize,
    start: SpdPoint,
    opts: &NewtonOptions,
) -> Result<BarycenterResult> {
    let wants = Wants { hessian: true, ..Wants::default() };
    let mut x = start;
    let mut ev = evaluate_terms(space, &x, terms, groups, wants)?;
    let mut trace = vec![ev.gradient.norm()];
    let mut iterations = 0;
    let newton_step = |ev: &Evaluation| -> Result<DVector<f64>> {
        let h = ev.hessian.as_ref().expect("requested");
        guard_hessian(h)?;
        let chol = h.clone().cholesky().ok_or(Error::DegenerateMeasure(0.0))?;
        Ok(-chol.solve(&ev.gradient))
    };
    while ev.gradient.norm() > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::Convergence {
                iterations,
                grad_norm: ev.gradient.norm(),
                trace,
            });
        }
        iterations += 1;
        let step = newton_step(&ev)?;
        let slope = ev.gradient.dot(&step);
        let gnorm = ev.gradient.norm();
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let cand = exp_at(&x, &space.frame.matrix(&(&step * scale)))?;
            let cev = evaluate_terms(space, &cand, terms, groups, wants)?;
            if cev.value <= ev.value + opts.armijo * scale * slope {
                accepted = Some((cand, cev));
                break;
            }
            // Near the minimum the decrease drops below round-off in the value;
            // fall back on the gradient norm for a full step.
            if scale == 1.0 && gnorm < 1e-6 && cev.gradient.norm() < gnorm {
                accepted = Some((cand, cev));
                break;
            }
            scale *= opts.backtrack;
        }
        let Some((cand, cev)) = accepted else {
            return Err(Error::Convergence {
                iterations,
                grad_norm: gnorm,
                trace,
            });
        };
        x = cand;
        ev = cev;
        trace.push(ev.gradient.norm());
    }
    // One polishing step, kept only if it helps.
    if let Ok(step) = newton_step(&ev) {
        let cand = exp_at(&x, &space.frame.matrix(&step))?;
        let cev = evaluate_terms(space, &cand, terms, groups, wants)?;
        if cev.gradient.norm() < ev.gradient.norm() {
            x = cand;
            ev = cev;
        }
    }
    Ok(BarycenterResult {
        point: x,
        iterations,
        grad_norm: ev.gradient.norm(),
        trace,
    })
}

/// The minimizer of the functional of `nu`, starting from the base point.
pub fn barycenter(space: &SymmetricSpace, nu: &WeightedBoundaryMeasure) -> Result<SpdPoint> {
    Ok(barycenter_from(space, nu, space.origin(), &NewtonOptions::default())?.point)
}

pub fn barycenter_from(
    space: &SymmetricSpace,
    nu: &WeightedBoundaryMeasure,
    start: SpdPoint,
    opts: &NewtonOptions,
) -> Result<BarycenterResult> {
    minimize(space, &single_terms(nu), 1, start, opts)
}

/// Point of the spherical simplex: nonnegative coordinates of unit norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SphericalPoint {
    pub coords: Vec<f64>,
}

impl SphericalPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm: f64 = coords.iter().map(|a| a * a).sum::<f64>().sqrt();
        if coords.is_empty() || coords.iter().any(|&a| a < 0.0 || !a.is_finite()) {
            return Err(Error::Precondition("spherical coordinates must be nonnegative".into()));
        }
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("spherical coordinates have norm {norm}")));
        }
        Ok(SphericalPoint { coords })
    }

    /// Normalizes nonnegative weights onto the sphere.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let norm: f64 = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Precondition("all spherical coordinates vanish".into()));
        }
        Self::new(w.iter().map(|a| a / norm).collect())
    }

    /// The `i`-th vertex `e_i` of the simplex with `k + 1` vertices.
    pub fn vertex(i: usize, vertices: usize) -> Self {
        let mut coords = vec![0.0; vertices];
        coords[i] = 1.0;
        SphericalPoint { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Ordered vertices with their boundary measures, all pushed forward from one
/// seeded sample at the base point.
#[derive(Clone, Debug)]
pub struct SimplexConfig {
    pub vertices: Vec<SpdPoint>,
    pub measures: Vec<WeightedBoundaryMeasure>,
}

impl SimplexConfig {
    pub fn new(vertices: Vec<SpdPoint>, atoms: usize, seed: u64) -> Self {
        let measures = vertices
            .iter()
            .map(|x| sample_boundary_measure(x, atoms, seed))
            .collect();
        SimplexConfig { vertices, measures }
    }

    /// Degree `k` of the simplex (one less than the vertex count).
    pub fn degree(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Moves every vertex and every atom by `g`.
    pub fn transport(&self, g: &DMatrix<f64>) -> Result<Self> {
        Ok(SimplexConfig {
            vertices: self
                .vertices
                .iter()
                .map(|x| crate::spd::act(g, x))
                .collect::<Result<_>>()?,
            measures: self.measures.iter().map(|nu| push_measure(g, nu)).collect(),
        })
    }

    fn terms(&self, a: &[f64]) -> Vec<Term<'_>> {
        let mut out = Vec::new();
        for (group, (nu, &ai)) in self.measures.iter().zip(a).enumerate() {
            let w = ai * ai;
            for (atom, &wj) in nu.atoms.iter().zip(&nu.weights) {
                out.push(Term { atom, weight: w * wj, group });
            }
        }
        out
    }

    /// `sum_i a_i^2 nu_i` as one measure (zero-weight atoms dropped).
    pub fn combined_measure(&self, a: &[f64]) -> WeightedBoundaryMeasure {
        let terms: Vec<Term<'_>> = self.terms(a).into_iter().filter(|t| t.weight > 0.0).collect();
        WeightedBoundaryMeasure {
            atoms: terms.iter().map(|t| t.atom.clone()).collect(),
            weights: terms.iter().map(|t| t.weight).collect(),
            seed: self.measures[0].seed,
            samples: terms.len(),
        }
    }

    fn start(&self, a: &[f64]) -> SpdPoint {
        let best = (0..a.len())
            .max_by(|&i, &j| (a[i] * a[i]).total_cmp(&(a[j] * a[j])).then(j.cmp(&i)))
            .unwrap_or(0);
        self.vertices[best].clone()
    }
}

fn check_arity(config: &SimplexConfig, a: &[f64]) -> Result<()> {
    if a.len() != config.vertices.len() {
        return Err(Error::Precondition(format!(
            "{} spherical coordinates for {} vertices",
            a.len(),
            config.vertices.len()
        )));
    }
    Ok(())
}

/// Barycenter of `sum_i a_i^2 nu_i` for arbitrary real `a` with `|a| = 1`.
///
/// Signs of `a` do not matter; this is the smooth extension used by the
/// finite-difference checks at the boundary of the simplex.
pub fn straighten_coords(
    space: &SymmetricSpace,
    config: &SimplexConfig,
    a: &[f64],
    opts: &NewtonOptions,
) -> Result<BarycenterResult> {
    check_arity(config, a)?;
    minimize(space, &config.terms(a), a.len(), config.start(a), opts)
}

pub fn straighten(space: &SymmetricSpace, config: &SimplexConfig, delta: &SphericalPoint) -> Result<SpdPoint> {
    Ok(straighten_coords(space, config, &delta.coords, &NewtonOptions::default())?.point)
}

/// Derivative of the straightening map at `delta`, from the 2-form equation
/// `Q2 D(u) = -sum_i 2 a_i u_i g_i` where `g_i` is the gradient of the `i`-th
/// vertex measure's functional at the straightened point.
#[derive(Clone, Debug)]
pub struct StraightenDerivative {
    pub point: SpdPoint,
    pub iterations: usize,
    pub grad_norm: f64,
    /// `n x (k+1)`: image of each coordinate direction `e_i` of `R^{k+1}`.
    pub ambient: DMatrix<f64>,
    /// `(k+1) x k`: orthonormal basis of the tangent space of the sphere.
    pub tangent_basis: DMatrix<f64>,
    /// `n x k`: the derivative in orthonormal bases.
    pub matrix: DMatrix<f64>,
    pub q1: DMatrix<f64>,
    pub q2: DMatrix<f64>,
}

impl StraightenDerivative {
    /// `D(u)` for an ambient vector `u` tangent to the sphere at `delta`.
    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.ambient * u
    }
}

pub fn straighten_derivative(
    space: &SymmetricSpace,
    config: &SimplexConfig,
    delta: &SphericalPoint,
) -> Result<StraightenDerivative> {
    derivative_coords(space, config, &delta.coords, &NewtonOptions::default())
}

pub fn derivative_coords(
    space: &SymmetricSpace,
    config: &SimplexConfig,
    a: &[f64],
    opts: &NewtonOptions,
) -> Result<StraightenDerivative> {
    let bar = straighten_coords(space, config, a, opts)?;
    let terms = config.terms(a);
    let ev = evaluate_terms(
        space,
        &bar.point,
        &terms,
        a.len(),
        Wants { hessian: true, q1: true, q2bar: false },
    )?;
    let h = ev.hessian.expect("requested");
    guard_hessian(&h)?;
    let chol = h.clone().cholesky().ok_or(Error::DegenerateMeasure(0.0))?;
    let n = space.n();
    let mut rhs = DMatrix::zeros(n, a.len());
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        // group_gradients carry the a_i^2 factor; divide it back out.
        let gi = &ev.group_gradients[i] / (ai * ai);
        rhs.set_column(i, &(gi * (-2.0 * ai)));
    }
    let ambient = chol.solve(&rhs);
    let delta = DMatrix::from_column_slice(a.len(), 1, a);
    let tangent_basis = orthonormal_complement(&delta.normalize());
    let matrix = &ambient * &tangent_basis;
    Ok(StraightenDerivative {
        point: bar.point,
        iterations: bar.iterations,
        grad_norm: bar.grad_norm,
        ambient,
        tangent_basis,
        matrix,
        q1: ev.q1.expect("requested"),
        q2: h,
    })
}

/// `log det(Q1|S)/2 - log det(Q2|S)` from restricted matrices, or `None`
/// when `det(Q2|S)` falls below [`DET_GUARD`].
pub fn log_ratio(q1_s: &DMatrix<f64>, q2_s: &DMatrix<f64>) -> Option<f64> {
    let l2: f64 = sym_eigenvalues(q2_s).iter().map(|v| v.max(0.0).ln()).sum();
    if !(l2 >= DET_GUARD.ln()) {
        return None;
    }
    let l1: f64 = sym_eigenvalues(q1_s).iter().map(|v| v.max(0.0).ln()).sum();
    Some(0.5 * l1 - l2)
}

/// `det(Q1|S)^{1/2} / det(Q2|S)` for `nu` at `x`.
pub fn ratio(space: &SymmetricSpace, x: &SpdPoint, nu: &WeightedBoundaryMeasure, s: &DMatrix<f64>) -> Result<f64> {
    let ev = evaluate_terms(space, x, &single_terms(nu), 1, Wants { hessian: true, q1: true, q2bar: false })?;
    ratio_of_forms(&ev.q1.expect("requested"), &ev.hessian.expect("requested"), s)
}

pub fn ratio_of_forms(q1: &DMatrix<f64>, q2: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<f64> {
    if s.ncols() == 0 {
        return Err(Error::Precondition("empty subspace".into()));
    }
    let q1_s = crate::forms::restrict(q1, s)?;
    let q2_s = crate::forms::restrict(q2, s)?;
    match log_ratio(&q1_s, &q2_s) {
        Some(l) => Ok(l.exp()),
        None => Err(Error::DegenerateRatio(sym_eigenvalues(&q2_s).iter().product())),
    }
}

/// Jacobian of the straightening map and its Cauchy-Schwarz bound.
#[derive(Clone, Debug, Serialize)]
pub struct JacobianRecord {
    pub jac: f64,
    pub bound: f64,
    pub ratio: f64,
    pub ok: bool,
    /// Rank of the derivative below `k`.
    pub degenerate: bool,
    /// `det(Q2|S)` below the guard; `ratio` and `bound` are `+inf`.
    pub infinite_ratio: bool,
    pub rank: usize,
    pub iterations: usize,
    pub grad_norm: f64,
    #[serde(skip)]
    pub span: DMatrix<f64>,
    #[serde(skip)]
    pub q1_s: DMatrix<f64>,
    #[serde(skip)]
    pub q2_s: DMatrix<f64>,
    #[serde(skip)]
    pub derivative: Option<StraightenDerivative>,
}

/// Relative slack allowed in `jac <= bound`.
pub const JACOBIAN_SLACK: f64 = 1e-6;

pub fn jacobian(space: &SymmetricSpace, config: &SimplexConfig, delta: &SphericalPoint) -> Result<JacobianRecord> {
    jacobian_coords(space, config, &delta.coords, &NewtonOptions::default())
}

pub fn jacobian_coords(
    space: &SymmetricSpace,
    config: &SimplexConfig,
    a: &[f64],
    opts: &NewtonOptions,
) -> Result<JacobianRecord> {
    let d = derivative_coords(space, config, a, opts)?;
    Ok(jacobian_from_derivative(d))
}

pub fn jacobian_from_derivative(d: StraightenDerivative) -> JacobianRecord {
    let k = d.matrix.ncols();
    let (span, _) = column_span(&d.matrix, 1e-9);
    let rank = span.ncols();
    let degenerate = rank < k;
    let jac = if degenerate {
        0.0
    } else {
        let g = d.matrix.transpose() * &d.matrix;
        let ld: f64 = sym_eigenvalues(&g).iter().map(|v| v.max(0.0).ln()).sum();
        (0.5 * ld).exp()
    };
    let q1_s = symmetrize(&(span.transpose() * &d.q1 * &span));
    let q2_s = symmetrize(&(span.transpose() * &d.q2 * &span));
    let lr = if rank == 0 { Some(0.0) } else { log_ratio(&q1_s, &q2_s) };
    let (ratio, bound, infinite) = match lr {
        Some(l) => (l.exp(), (l + k as f64 * std::f64::consts::LN_2).exp(), false),
        None => (f64::INFINITY, f64::INFINITY, true),
    };
    JacobianRecord {
        jac,
        bound,
        ratio,
        ok: jac <= bound * (1.0 + JACOBIAN_SLACK),
        degenerate,
        infinite_ratio: infinite,
        rank,
        iterations: d.iterations,
        grad_norm: d.grad_norm,
        span,
        q1_s,
        q2_s,
        derivative: Some(d),
    }
}

/// Smallest `2 Q1(v,v)^{1/2} - |Q2(D(u), v)|` over sampled unit tangent `u`
/// and unit `v`, plus the eigenvector directions of `Q1`.
pub fn cauchy_schwarz_slack<R: Rng + ?Sized>(d: &StraightenDerivative, samples: usize, rng: &mut R) -> f64 {
    let n = d.q1.nrows();
    let k = d.tangent_basis.ncols();
    let mut vs: Vec<DVector<f64>> = (0..samples).map(|_| random_unit_vector(rng, n)).collect();
    let (_, evecs) = sym_eigen(&d.q1);
    vs.extend((0..n).map(|i| evecs.column(i).into_owned()));
    let mut us: Vec<DVector<f64>> = (0..samples)
        .map(|_| &d.tangent_basis * random_unit_vector(rng, k.max(1)))
        .collect();
    us.extend((0..k).map(|i| d.tangent_basis.column(i).into_owned()));
    let q2d = &d.q2 * &d.ambient;
    let mut worst = f64::INFINITY;
    for v in &vs {
        let rhs = 2.0 * v.dot(&(&d.q1 * v)).max(0.0).sqrt();
        let row = q2d.transpose() * v;
        for u in &us {
            worst = worst.min(rhs - row.dot(u).abs());
        }
    }
    worst
}

/// Log-coordinates of the displacement from `p` to `q` in the frame.
pub fn displacement(space: &SymmetricSpace, p: &SpdPoint, q: &SpdPoint) -> Result<DVector<f64>> {
    Ok(space.frame.coords(&log_at(p, q)?))
}
