//! `T*Sⁿ` embedded in `R^{2n+2}` as `{(q, p) : q·q = 1, q·p = 0}`, with its
//! canonical 1-form, the normalized geodesic flow and generalized k-fold
//! right-handed Dehn twists.
//!
//! Ambient tangent vectors are laid out as `(v_q, v_p)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::forms::{FdConfig, KForm, SmoothMap};
use crate::linalg::{dot, norm, orthonormal_complement};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CotangentError {
    #[error("q must be nonzero to project to the sphere")]
    ZeroBase,
    #[error("normalization undefined on the zero section (p = 0)")]
    ZeroFiber,
    #[error("point violates q·q = 1, q·p = 0 (|q·q − 1| = {unit:e}, |q·p| = {ortho:e})")]
    Constraint { unit: f64, ortho: f64 },
    #[error("q and p must have equal length, got {0} and {1}")]
    Length(usize, usize),
    #[error("invalid twist profile: {0}")]
    Profile(String),
}

pub const CONSTRAINT_TOL: f64 = 1e-10;

/// A point of `T*Sⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpherePoint {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl SpherePoint {
    /// Validating constructor.
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self, CotangentError> {
        if q.len() != p.len() {
            return Err(CotangentError::Length(q.len(), p.len()));
        }
        let unit = (dot(&q, &q) - 1.0).abs();
        let ortho = dot(&q, &p).abs();
        if unit >= CONSTRAINT_TOL || ortho >= CONSTRAINT_TOL {
            return Err(CotangentError::Constraint { unit, ortho });
        }
        Ok(Self { q, p })
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Sphere dimension n (ambient `R^{n+1}` per factor).
    pub fn sphere_dim(&self) -> usize {
        self.q.len() - 1
    }

    pub fn fiber_norm(&self) -> f64 {
        norm(&self.p)
    }

    /// Concatenated ambient coordinates `(q, p)`.
    pub fn to_ambient(&self) -> Vec<f64> {
        let mut v = self.q.clone();
        v.extend_from_slice(&self.p);
        v
    }

    pub fn from_ambient(x: &[f64]) -> Result<Self, CotangentError> {
        let m = x.len() / 2;
        Self::new(x[..m].to_vec(), x[m..].to_vec())
    }

    /// Basis of the constraint tangent space at this point: `(e_i, −(p·e_i) q)`
    /// and `(0, e_i)` for an orthonormal basis `e_i` of `q^⊥`.
    pub fn tangent_basis(&self) -> Vec<Vec<f64>> {
        let m = self.q.len();
        let comp = orthonormal_complement(&self.q);
        let mut basis = Vec::with_capacity(2 * comp.len());
        for e in &comp {
            let c = dot(&self.p, e);
            let mut v = e.clone();
            v.extend(self.q.iter().map(|qi| -c * qi));
            basis.push(v);
        }
        for e in &comp {
            let mut v = vec![0.0; m];
            v.extend_from_slice(e);
            basis.push(v);
        }
        basis
    }
}

/// Retraction onto the constraint set: `q/|q|` and the projection of p onto `q^⊥`.
pub fn project_to_bundle(q_raw: &[f64], p_raw: &[f64]) -> Result<SpherePoint, CotangentError> {
    if q_raw.len() != p_raw.len() {
        return Err(CotangentError::Length(q_raw.len(), p_raw.len()));
    }
    let len = norm(q_raw);
    if len == 0.0 || !len.is_finite() {
        return Err(CotangentError::ZeroBase);
    }
    let q: Vec<f64> = q_raw.iter().map(|v| v / len).collect();
    let c = dot(p_raw, &q);
    let p = p_raw.iter().zip(&q).map(|(pi, qi)| pi - c * qi).collect();
    Ok(SpherePoint { q, p })
}

/// `λ_can = p dq` evaluated on an ambient tangent vector `(v_q, v_p)`.
pub fn canonical_form_eval(pt: &SpherePoint, v: &[f64]) -> f64 {
    dot(&pt.p, &v[..pt.q.len()])
}

/// `λ_can` and its differential `dp ∧ dq` as ambient forms on `R^{2n+2}`.
pub fn canonical_form(sphere_dim: usize) -> KForm {
    let m = sphere_dim + 1;
    let d = canonical_symplectic_form(sphere_dim);
    KForm::one_form(2 * m, move |x| {
        let mut c = x[m..].to_vec();
        c.extend(std::iter::repeat_n(0.0, m));
        c
    })
    .with_derivative(d)
}

/// `dλ_can(u, v) = u_p·v_q − v_p·u_q`.
pub fn canonical_symplectic_form(sphere_dim: usize) -> KForm {
    let m = sphere_dim + 1;
    let mut mat = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        mat[(m + i, i)] = 1.0;
        mat[(i, m + i)] = -1.0;
    }
    KForm::constant_two_form(mat)
}

/// Normalized geodesic flow `σ_t`.
pub fn geodesic_flow(pt: &SpherePoint, t: f64) -> Result<SpherePoint, CotangentError> {
    let r = pt.fiber_norm();
    if r == 0.0 {
        return Err(CotangentError::ZeroFiber);
    }
    Ok(rotate(pt, t, r))
}

fn rotate(pt: &SpherePoint, t: f64, r: f64) -> SpherePoint {
    let (s, c) = t.sin_cos();
    let q = pt.q.iter().zip(&pt.p).map(|(qi, pi)| c * qi + s * pi / r).collect();
    let p = pt.q.iter().zip(&pt.p).map(|(qi, pi)| -r * s * qi + c * pi).collect();
    SpherePoint { q, p }
}

/// Profile angle of the twist as a function of `|p|`:
/// `g₁(s) = kπ·G(s / p₀)` on `[0, p₀)` and `0` beyond, with
/// `G(v) = 1 − v − 4v³ + 7v⁴ − 3v⁵`.
///
/// `G` satisfies `G(0) = 1`, `G'(0) = −1`, `G''(0) = 0` and vanishes to second
/// order at `v = 1`. The missing quadratic term keeps `sin(g₁(|p|)) p/|p|`
/// smooth across the zero section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DehnTwistProfile {
    p0: f64,
    k: u32,
}

impl DehnTwistProfile {
    pub fn new(p0: f64, k: u32) -> Result<Self, CotangentError> {
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(CotangentError::Profile(format!("support radius p0 = {p0} must be positive")));
        }
        if k == 0 {
            return Err(CotangentError::Profile("twist multiplicity k must be positive".into()));
        }
        Ok(Self { p0, k })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn g1(&self, s: f64) -> f64 {
        if s >= self.p0 {
            return 0.0;
        }
        let v = (s / self.p0).max(0.0);
        self.k as f64 * PI * shape(v)
    }

    pub fn g1_prime(&self, s: f64) -> f64 {
        if s >= self.p0 {
            return 0.0;
        }
        let v = (s / self.p0).max(0.0);
        self.k as f64 * PI * shape_prime(v) / self.p0
    }
}

impl Default for DehnTwistProfile {
    fn default() -> Self {
        Self { p0: 1.0, k: 1 }
    }
}

fn shape(v: f64) -> f64 {
    1.0 - v - 4.0 * v.powi(3) + 7.0 * v.powi(4) - 3.0 * v.powi(5)
}

fn shape_prime(v: f64) -> f64 {
    -1.0 - 12.0 * v * v + 28.0 * v.powi(3) - 15.0 * v.powi(4)
}

/// Generalized right-handed Dehn twist: `σ_{g₁(|p|)}` off the zero section and
/// `((−1)^k q, 0)` on it.
pub fn dehn_twist(pt: &SpherePoint, profile: &DehnTwistProfile) -> SpherePoint {
    let r = pt.fiber_norm();
    if r == 0.0 {
        let sign = if profile.k % 2 == 1 { -1.0 } else { 1.0 };
        return SpherePoint {
            q: pt.q.iter().map(|v| sign * v).collect(),
            p: vec![0.0; pt.p.len()],
        };
    }
    if r >= profile.p0 {
        return pt.clone();
    }
    rotate(pt, profile.g1(r), r)
}

/// The twist extended to the ambient space by precomposing with
/// [`project_to_bundle`]; on constraint tangent vectors its derivative is the
/// derivative of the twist itself.
pub fn dehn_twist_map(sphere_dim: usize, profile: DehnTwistProfile, fd: FdConfig) -> SmoothMap {
    let m = sphere_dim + 1;
    SmoothMap::finite_difference(
        2 * m,
        2 * m,
        move |x| match project_to_bundle(&x[..m], &x[m..]) {
            Ok(pt) => dehn_twist(&pt, &profile).to_ambient(),
            Err(_) => vec![f64::NAN; 2 * m],
        },
        fd,
    )
}
