//! Numerical exactness and Monte Carlo symmetry checks of the discrete
//! straightening, shared by the lemma tooling and the acceptance target.

use bary_core::barycenter::{
    barycenter_from, jacobian, q1_form, straighten_coords, straighten_derivative, displacement, NewtonOptions,
    SimplexConfig,
};
use bary_core::linalg::{gaussian_matrix, sym_eigenvalues};
use bary_core::spd::{act, distance, random_point, sample_boundary_measure, SymmetricSpace};
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::scenarios::sweep::interior_point;
use crate::seeds::{cell_rng, cell_seed};

pub const FOC_TOLERANCE: f64 = 1e-10;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-4;
pub const EQUIVARIANCE_TOLERANCE: f64 = 1e-8;

/// Unit-determinant matrix near the identity.
pub fn random_group(rng: &mut ChaCha8Rng, m: usize, spread: f64) -> DMatrix<f64> {
    let mut g = DMatrix::identity(m, m) + gaussian_matrix(rng, m, m) * spread;
    if g.determinant() < 0.0 {
        g.column_mut(0).neg_mut();
    }
    let s = g.determinant().powf(-1.0 / m as f64);
    g * s
}

#[derive(Clone, Debug, Serialize)]
pub struct Exactness {
    pub cases: usize,
    pub worst_foc: f64,
    pub worst_derivative: f64,
    pub worst_equivariance: f64,
    pub pass: bool,
}

/// Central differences of the straightening map along an orthonormal basis
/// of the sphere's tangent space, in log coordinates at the base image.
fn fd_derivative(space: &SymmetricSpace, cfg: &SimplexConfig, a: &[f64], basis: &DMatrix<f64>, h: f64) -> Result<DMatrix<f64>> {
    let opts = NewtonOptions::default();
    let x0 = straighten_coords(space, cfg, a, &opts)?.point;
    let av = nalgebra::DVector::from_column_slice(a);
    let mut out = DMatrix::zeros(space.n(), basis.ncols());
    for c in 0..basis.ncols() {
        let at = |s: f64| -> Result<nalgebra::DVector<f64>> {
            let p = (&av + basis.column(c) * s).normalize();
            let x = straighten_coords(space, cfg, p.as_slice(), &opts)?.point;
            Ok(displacement(space, &x0, &x)?)
        };
        let col = (at(h)? - at(-h)?) / (2.0 * h);
        out.set_column(c, &col);
    }
    Ok(out)
}

/// First-order conditions, derivative against finite differences, and
/// equivariance of straightening, Jacobian and ratio, on `trials` random
/// configurations for each `(m, k)`.
pub fn discrete_exactness(cases: &[(usize, usize)], trials: usize, atoms: usize, seed: u64) -> Result<Exactness> {
    let mut out = Exactness {
        cases: 0,
        worst_foc: 0.0,
        worst_derivative: 0.0,
        worst_equivariance: 0.0,
        pass: false,
    };
    let mut cell = 0u64;
    for &(m, k) in cases {
        let space = SymmetricSpace::new(m)?;
        for _ in 0..trials {
            let mut rng = cell_rng(seed, cell);
            let verts = (0..=k).map(|_| random_point(&space, &mut rng, 1.5)).collect();
            let cfg = SimplexConfig::new(verts, atoms, cell_seed(seed, cell, 0));
            cell += 1;
            let delta = interior_point(k, &mut rng);
            let d = straighten_derivative(&space, &cfg, &delta)?;
            out.worst_foc = out.worst_foc.max(d.grad_norm);
            let fd = fd_derivative(&space, &cfg, &delta.coords, &d.tangent_basis, 1e-4)?;
            out.worst_derivative = out.worst_derivative.max((&fd - &d.matrix).norm() / d.matrix.norm());

            let g = random_group(&mut rng, m, 0.3);
            let moved = cfg.transport(&g)?;
            let a = jacobian(&space, &cfg, &delta)?;
            let b = jacobian(&space, &moved, &delta)?;
            let x = a.derivative.as_ref().expect("derivative kept").point.clone();
            let gx = b.derivative.as_ref().expect("derivative kept").point.clone();
            let rel = |p: f64, q: f64| ((p - q) / p).abs();
            let e = distance(&act(&g, &x)?, &gx)?
                .max(rel(a.jac, b.jac))
                .max(rel(a.ratio, b.ratio));
            out.worst_equivariance = out.worst_equivariance.max(e);
            out.worst_foc = out.worst_foc.max(b.grad_norm);
            out.cases += 1;
        }
    }
    out.pass = out.worst_foc <= FOC_TOLERANCE
        && out.worst_derivative <= DERIVATIVE_TOLERANCE
        && out.worst_equivariance <= EQUIVARIANCE_TOLERANCE;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct IsotropyCheck {
    pub m: usize,
    pub atoms: usize,
    /// `|Q1 - I/n|` in operator norm at the base point.
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `Q1` of the sampled base measure at the base point against `I/n`, within
/// `3 / sqrt(N)`.
pub fn q1_isotropy(m: usize, atoms: usize, seed: u64) -> Result<IsotropyCheck> {
    let space = SymmetricSpace::new(m)?;
    let o = space.origin();
    let nu = sample_boundary_measure(&o, atoms, seed);
    let q1 = q1_form(&space, &o, &nu)?.matrix;
    let iso = DMatrix::identity(space.n(), space.n()) / space.n() as f64;
    let deviation = sym_eigenvalues(&(q1 - iso)).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tolerance = 3.0 / (atoms as f64).sqrt();
    Ok(IsotropyCheck {
        m,
        atoms,
        deviation,
        tolerance,
        pass: deviation <= tolerance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CenteringCheck {
    pub m: usize,
    /// Atom counts, each four times the previous.
    pub atoms: Vec<usize>,
    /// Root mean square distance from the barycenter to the base point over
    /// the seeds, per atom count.
    pub rms_distance: Vec<f64>,
    /// `rms(N) / rms(4N)`; two for `1/sqrt(N)` decay.
    pub decay: Vec<f64>,
    /// Distance at the reference atom count for the first seed.
    pub reference_distance: f64,
    pub pass_distance: bool,
    pub pass_decay: bool,
}

/// Accepted range of `rms(N) / rms(4N)`: two, up to a factor `sqrt 2`.
pub const DECAY_RANGE: (f64, f64) = (std::f64::consts::SQRT_2, 2.0 * std::f64::consts::SQRT_2);

/// Barycenter of the sampled base measure against the base point.
pub fn barycenter_centering(m: usize, atoms: &[usize], reference: usize, seeds: u64, master: u64) -> Result<CenteringCheck> {
    let space = SymmetricSpace::new(m)?;
    let o = space.origin();
    let opts = NewtonOptions::default();
    let mut rms = Vec::new();
    let mut reference_distance = f64::NAN;
    for &n in atoms {
        let mut sum = 0.0;
        for s in 0..seeds {
            let nu = sample_boundary_measure(&o, n, cell_seed(master, m as u64, s));
            let x = barycenter_from(&space, &nu, o.clone(), &opts)?.point;
            let d = distance(&o, &x)?;
            sum += d * d;
            if n == reference && s == 0 {
                reference_distance = d;
            }
        }
        rms.push((sum / seeds as f64).sqrt());
    }
    if reference_distance.is_nan() {
        let nu = sample_boundary_measure(&o, reference, cell_seed(master, m as u64, 0));
        reference_distance = distance(&o, &barycenter_from(&space, &nu, o.clone(), &opts)?.point)?;
    }
    let decay: Vec<f64> = rms.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(CenteringCheck {
        m,
        atoms: atoms.to_vec(),
        pass_distance: reference_distance <= 0.05,
        pass_decay: decay.iter().all(|&d| (DECAY_RANGE.0..=DECAY_RANGE.1).contains(&d)),
        rms_distance: rms,
        decay,
        reference_distance,
    })
}
