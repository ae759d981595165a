//! The flat Weinstein model `(R²ⁿ, ω₀ = dx∧dy + dz∧dw)` with Liouville field
//! `X = ½(x∂x + y∂y) + 2z∂z − w∂w`, the hypersurfaces
//! `S₋₁ = {|w|² = 1}` and `S₁ = {F = 0}`, and the maps between them.
//!
//! Ambient coordinates are interleaved pairs: `x₁, y₁, …, x_m, y_m,
//! z₁, w₁, …, z_{k+1}, w_{k+1}` with `m = n − k − 1`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::cotangent::{CotangentError, SpherePoint};
use crate::flows::{self, Event, FlowError, IntegratorConfig};
use crate::forms::{standard_symplectic_matrix, KForm, ScalarField, SmoothMap, VectorField};
use crate::linalg::{dot, norm};

/// Tolerance on `|w|² = 1` for points of `S₋₁`.
pub const S_MINUS1_TOL: f64 = 1e-8;
/// Target accuracy in `F` for root-finding onto `S₁`.
pub const S1_ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeinsteinError {
    #[error("invalid model shape: {0}")]
    Shape(String),
    #[error("block length mismatch: {0}")]
    Blocks(String),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("z = 0 has no image under the transfer")]
    SurgeredLocus,
    #[error("no crossing of S1 within the time bound")]
    NoCrossing,
    #[error("profile violation: X(F) = {0:e} is not positive")]
    ProfileViolation(f64),
    #[error(transparent)]
    Cotangent(#[from] CotangentError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

pub type Result<T> = std::result::Result<T, WeinsteinError>;

/// `(n, k)`: ambient `R²ⁿ`, isotropic sphere `S^k`, `0 ≤ k ≤ n − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelShape {
    n: usize,
    k: usize,
}

impl ModelShape {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k + 1 > n {
            return Err(WeinsteinError::Shape(format!("need 0 <= k <= n-1, got n={n}, k={k}")));
        }
        Ok(Self { n, k })
    }

    /// The Legendrian case `k = n − 1` (empty x, y blocks).
    pub fn legendrian(n: usize) -> Result<Self> {
        Self::new(n, n.saturating_sub(1))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Length of the x and y blocks.
    pub fn m(&self) -> usize {
        self.n - self.k - 1
    }

    /// Length of the z and w blocks.
    pub fn zw_len(&self) -> usize {
        self.k + 1
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.n
    }

    pub fn x_index(&self, i: usize) -> usize {
        2 * i
    }

    pub fn y_index(&self, i: usize) -> usize {
        2 * i + 1
    }

    pub fn z_index(&self, j: usize) -> usize {
        2 * self.m() + 2 * j
    }

    pub fn w_index(&self, j: usize) -> usize {
        2 * self.m() + 2 * j + 1
    }

    pub fn w_indices(&self) -> Vec<usize> {
        (0..self.zw_len()).map(|j| self.w_index(j)).collect()
    }

    /// Dimension of the `(z, q, p, x, y)` chart.
    pub fn neighborhood_dim(&self) -> usize {
        1 + 2 * self.zw_len() + 2 * self.m()
    }
}

/// A point (or tangent vector) of the model in block form.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

impl ModelPoint {
    pub fn new(shape: ModelShape, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if x.len() != shape.m() || y.len() != shape.m() {
            return Err(WeinsteinError::Blocks(format!(
                "x, y need length {}, got {} and {}",
                shape.m(),
                x.len(),
                y.len()
            )));
        }
        if z.len() != shape.zw_len() || w.len() != shape.zw_len() {
            return Err(WeinsteinError::Blocks(format!(
                "z, w need length {}, got {} and {}",
                shape.zw_len(),
                z.len(),
                w.len()
            )));
        }
        if x.iter().chain(&y).chain(&z).chain(&w).any(|v| !v.is_finite()) {
            return Err(WeinsteinError::NonFinite);
        }
        Ok(Self { x, y, z, w })
    }

    /// Legendrian-case point with empty x, y blocks.
    pub fn zw(z: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let shape = ModelShape::legendrian(z.len())?;
        Self::new(shape, vec![], vec![], z, w)
    }

    pub fn zeros(shape: ModelShape) -> Self {
        Self {
            x: vec![0.0; shape.m()],
            y: vec![0.0; shape.m()],
            z: vec![0.0; shape.zw_len()],
            w: vec![0.0; shape.zw_len()],
        }
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            n: self.x.len() + self.z.len(),
            k: self.z.len() - 1,
        }
    }

    pub fn to_ambient(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * (self.x.len() + self.z.len()));
        for i in 0..self.x.len() {
            out.push(self.x[i]);
            out.push(self.y[i]);
        }
        for j in 0..self.z.len() {
            out.push(self.z[j]);
            out.push(self.w[j]);
        }
        out
    }

    pub fn from_ambient(shape: ModelShape, v: &[f64]) -> Result<Self> {
        if v.len() != shape.ambient_dim() {
            return Err(WeinsteinError::Blocks(format!(
                "ambient vector needs length {}, got {}",
                shape.ambient_dim(),
                v.len()
            )));
        }
        let m = shape.m();
        let p = Self {
            x: (0..m).map(|i| v[shape.x_index(i)]).collect(),
            y: (0..m).map(|i| v[shape.y_index(i)]).collect(),
            z: (0..shape.zw_len()).map(|j| v[shape.z_index(j)]).collect(),
            w: (0..shape.zw_len()).map(|j| v[shape.w_index(j)]).collect(),
        };
        Self::new(shape, p.x, p.y, p.z, p.w)
    }

    /// `|x|² + |y|² + |z|²`.
    pub fn radial_sq(&self) -> f64 {
        dot(&self.x, &self.x) + dot(&self.y, &self.y) + dot(&self.z, &self.z)
    }

    pub fn w_sq(&self) -> f64 {
        dot(&self.w, &self.w)
    }
}

fn require_s_minus1(pt: &ModelPoint) -> Result<()> {
    let dev = (pt.w_sq() - 1.0).abs();
    if dev > S_MINUS1_TOL {
        return Err(WeinsteinError::Constraint(format!("|w|^2 - 1 = {dev:e}, point not on S_-1")));
    }
    Ok(())
}

/// `ω₀(v₁, v₂)` on ambient vectors.
pub fn omega0_eval(v1: &[f64], v2: &[f64]) -> f64 {
    (0..v1.len() / 2)
        .map(|i| v1[2 * i] * v2[2 * i + 1] - v1[2 * i + 1] * v2[2 * i])
        .sum()
}

pub fn omega0(shape: ModelShape) -> KForm {
    KForm::constant_two_form(standard_symplectic_matrix(shape.ambient_dim()))
}

pub fn liouville_x(pt: &ModelPoint) -> ModelPoint {
    ModelPoint {
        x: pt.x.iter().map(|v| 0.5 * v).collect(),
        y: pt.y.iter().map(|v| 0.5 * v).collect(),
        z: pt.z.iter().map(|v| 2.0 * v).collect(),
        w: pt.w.iter().map(|v| -v).collect(),
    }
}

/// `X_a = (1 + a) z∂z − a w∂w`, plus `½(x∂x + y∂y)` when x, y are present.
pub fn liouville_x_a(pt: &ModelPoint, a: f64) -> ModelPoint {
    ModelPoint {
        x: pt.x.iter().map(|v| 0.5 * v).collect(),
        y: pt.y.iter().map(|v| 0.5 * v).collect(),
        z: pt.z.iter().map(|v| (1.0 + a) * v).collect(),
        w: pt.w.iter().map(|v| -a * v).collect(),
    }
}

fn lift(shape: ModelShape, f: impl Fn(&ModelPoint) -> ModelPoint + Send + Sync + 'static) -> VectorField {
    VectorField::new(shape.ambient_dim(), move |v| {
        let p = ModelPoint::from_ambient(shape, v).unwrap_or_else(|_| ModelPoint::zeros(shape));
        f(&p).to_ambient()
    })
}

pub fn liouville_field(shape: ModelShape) -> VectorField {
    lift(shape, liouville_x)
}

pub fn liouville_field_a(shape: ModelShape, a: f64) -> VectorField {
    lift(shape, move |p| liouville_x_a(p, a))
}

/// `α = ½(x dy − y dx) + 2z dw + w dz`, extended to the whole model, with
/// analytic derivative `ω₀`.
pub fn alpha_form(shape: ModelShape) -> KForm {
    KForm::one_form(shape.ambient_dim(), move |v| alpha_coeffs(shape, v)).with_derivative(omega0(shape))
}

fn alpha_coeffs(shape: ModelShape, v: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; v.len()];
    for i in 0..shape.m() {
        let (xi, yi) = (shape.x_index(i), shape.y_index(i));
        c[xi] = -0.5 * v[yi];
        c[yi] = 0.5 * v[xi];
    }
    for j in 0..shape.zw_len() {
        let (zi, wi) = (shape.z_index(j), shape.w_index(j));
        c[zi] = v[wi];
        c[wi] = 2.0 * v[zi];
    }
    c
}

/// `α(v)` at a point of `S₋₁` for a tangent vector `v` (block form).
pub fn alpha_s_minus1_eval(pt: &ModelPoint, v: &ModelPoint) -> Result<f64> {
    require_s_minus1(pt)?;
    let normal = dot(&pt.w, &v.w);
    if normal.abs() > S_MINUS1_TOL * norm(&v.to_ambient()).max(1.0) {
        return Err(WeinsteinError::Constraint(format!("w·v_w = {normal:e}, vector not tangent to S_-1")));
    }
    Ok(0.5 * (dot(&pt.x, &v.y) - dot(&pt.y, &v.x)) + 2.0 * dot(&pt.z, &v.w) + dot(&pt.w, &v.z))
}

/// Reeb field `w∂z` of `α` on `S₋₁`.
pub fn reeb_s_minus1(pt: &ModelPoint) -> Result<ModelPoint> {
    require_s_minus1(pt)?;
    let shape = pt.shape();
    let mut r = ModelPoint::zeros(shape);
    r.z = pt.w.clone();
    Ok(r)
}

pub fn reeb_field(shape: ModelShape) -> VectorField {
    lift(shape, |p| {
        let mut r = ModelPoint::zeros(p.shape());
        r.z = p.w.clone();
        r
    })
}

/// Basis of `T_pt S₋₁` in block form.
pub fn s_minus1_tangent_basis(pt: &ModelPoint) -> Vec<ModelPoint> {
    let shape = pt.shape();
    let dim = shape.ambient_dim();
    let mut basis = Vec::new();
    for idx in 0..dim {
        let is_w = (0..shape.zw_len()).any(|j| shape.w_index(j) == idx);
        if !is_w {
            let mut e = vec![0.0; dim];
            e[idx] = 1.0;
            basis.push(ModelPoint::from_ambient(shape, &e).expect("finite basis vector"));
        }
    }
    let wn = norm(&pt.w).max(f64::MIN_POSITIVE);
    let unit_w: Vec<f64> = pt.w.iter().map(|v| v / wn).collect();
    for u in crate::linalg::orthonormal_complement(&unit_w) {
        let mut e = ModelPoint::zeros(shape);
        e.w = u;
        basis.push(e);
    }
    basis
}

/// Page function `θ = z·w`.
pub fn theta_page(pt: &ModelPoint) -> f64 {
    dot(&pt.z, &pt.w)
}

/// A point `(z, q, p, x, y)` of the standard neighborhood `R × T*S^k × C^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodPoint {
    pub z: f64,
    pub qp: SpherePoint,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl NeighborhoodPoint {
    pub fn new(z: f64, qp: SpherePoint, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(WeinsteinError::Blocks(format!("x, y lengths {} and {}", x.len(), y.len())));
        }
        if !z.is_finite() || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(WeinsteinError::NonFinite);
        }
        Ok(Self { z, qp, x, y })
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            n: self.x.len() + self.qp.q().len(),
            k: self.qp.q().len() - 1,
        }
    }

    /// Chart coordinates `[z, q…, p…, x…, y…]`.
    pub fn to_coords(&self) -> Vec<f64> {
        let mut out = vec![self.z];
        out.extend_from_slice(self.qp.q());
        out.extend_from_slice(self.qp.p());
        out.extend_from_slice(&self.x);
        out.extend_from_slice(&self.y);
        out
    }

    pub fn from_coords(shape: ModelShape, c: &[f64]) -> Result<Self> {
        if c.len() != shape.neighborhood_dim() {
            return Err(WeinsteinError::Blocks(format!(
                "chart vector needs length {}, got {}",
                shape.neighborhood_dim(),
                c.len()
            )));
        }
        let l = shape.zw_len();
        let m = shape.m();
        let qp = SpherePoint::new(c[1..1 + l].to_vec(), c[1 + l..1 + 2 * l].to_vec())?;
        Self::new(c[0], qp, c[1 + 2 * l..1 + 2 * l + m].to_vec(), c[1 + 2 * l + m..].to_vec())
    }

    /// Basis of the tangent space of the constraint set `{|q| = 1, q·p = 0}`
    /// in chart coordinates.
    pub fn tangent_basis(&self) -> Vec<Vec<f64>> {
        let shape = self.shape();
        let dim = shape.neighborhood_dim();
        let l = shape.zw_len();
        let mut basis = vec![crate::linalg::basis_vector(dim, 0)];
        for tq in self.qp.tangent_basis() {
            let mut v = vec![0.0; dim];
            v[1..1 + 2 * l].copy_from_slice(&tq);
            basis.push(v);
        }
        for i in 1 + 2 * l..dim {
            basis.push(crate::linalg::basis_vector(dim, i));
        }
        basis
    }
}

/// `dz + p dq + ½(x dy − y dx)` on the chart.
pub fn neighborhood_contact_form(shape: ModelShape) -> KForm {
    let l = shape.zw_len();
    let m = shape.m();
    KForm::one_form(shape.neighborhood_dim(), move |c| {
        let mut out = vec![0.0; c.len()];
        out[0] = 1.0;
        for j in 0..l {
            out[1 + j] = c[1 + l + j];
        }
        let xs = 1 + 2 * l;
        for i in 0..m {
            out[xs + i] = -0.5 * c[xs + m + i];
            out[xs + m + i] = 0.5 * c[xs + i];
        }
        out
    })
}

/// `ψ_W(z, q, p, x, y) = (x, y; zq + p, q)`.
pub fn psi_w(pt: &NeighborhoodPoint) -> ModelPoint {
    let z: Vec<f64> = pt.qp.q().iter().zip(pt.qp.p()).map(|(q, p)| pt.z * q + p).collect();
    ModelPoint {
        x: pt.x.clone(),
        y: pt.y.clone(),
        z,
        w: pt.qp.q().to_vec(),
    }
}

/// `ψ_W` on chart coordinates with its analytic Jacobian.
pub fn psi_w_map(shape: ModelShape) -> SmoothMap {
    let l = shape.zw_len();
    let m = shape.m();
    let dom = shape.neighborhood_dim();
    let cod = shape.ambient_dim();
    let eval = move |c: &[f64]| {
        let mut out = vec![0.0; cod];
        for j in 0..l {
            out[shape.z_index(j)] = c[0] * c[1 + j] + c[1 + l + j];
            out[shape.w_index(j)] = c[1 + j];
        }
        let xs = 1 + 2 * l;
        for i in 0..m {
            out[shape.x_index(i)] = c[xs + i];
            out[shape.y_index(i)] = c[xs + m + i];
        }
        out
    };
    let jac = move |c: &[f64]| {
        let mut j = DMatrix::zeros(cod, dom);
        for b in 0..l {
            let zi = shape.z_index(b);
            j[(zi, 0)] = c[1 + b];
            j[(zi, 1 + b)] = c[0];
            j[(zi, 1 + l + b)] = 1.0;
            j[(shape.w_index(b), 1 + b)] = 1.0;
        }
        let xs = 1 + 2 * l;
        for i in 0..m {
            j[(shape.x_index(i), xs + i)] = 1.0;
            j[(shape.y_index(i), xs + m + i)] = 1.0;
        }
        j
    };
    SmoothMap::analytic(dom, cod, eval, jac)
}

/// Inverse of `ψ_W` on `S₋₁`: `q = w`, `z = z_block·w`, `p = z_block − z w`.
pub fn psi_w_inverse(pt: &ModelPoint) -> Result<NeighborhoodPoint> {
    require_s_minus1(pt)?;
    let wn = norm(&pt.w);
    let q: Vec<f64> = pt.w.iter().map(|v| v / wn).collect();
    let z = dot(&pt.z, &q);
    let mut p: Vec<f64> = pt.z.iter().zip(&q).map(|(a, b)| a - z * b).collect();
    // One re-orthogonalization pass keeps q·p at round-off.
    let r = dot(&q, &p);
    for (pi, qi) in p.iter_mut().zip(&q) {
        *pi -= r * qi;
    }
    NeighborhoodPoint::new(z, SpherePoint::new(q, p)?, pt.x.clone(), pt.y.clone())
}

/// `φ_C(z, q, p, x, y) = (Cz, q, Cp, √C x, √C y)`.
pub fn phi_c(pt: &NeighborhoodPoint, c: f64) -> Result<NeighborhoodPoint> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(WeinsteinError::Parameter(format!("C must be positive, got {c}")));
    }
    let s = c.sqrt();
    let p: Vec<f64> = pt.qp.p().iter().map(|v| c * v).collect();
    NeighborhoodPoint::new(
        c * pt.z,
        SpherePoint::new(pt.qp.q().to_vec(), p)?,
        pt.x.iter().map(|v| s * v).collect(),
        pt.y.iter().map(|v| s * v).collect(),
    )
}

pub fn phi_c_map(shape: ModelShape, c: f64) -> Result<SmoothMap> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(WeinsteinError::Parameter(format!("C must be positive, got {c}")));
    }
    let l = shape.zw_len();
    let dom = shape.neighborhood_dim();
    let factors: Vec<f64> = (0..dom)
        .map(|i| match i {
            0 => c,
            i if i <= l => 1.0,
            i if i <= 2 * l => c,
            _ => c.sqrt(),
        })
        .collect();
    let fe = factors.clone();
    Ok(SmoothMap::analytic(
        dom,
        dom,
        move |x| x.iter().zip(&fe).map(|(a, b)| a * b).collect(),
        move |_| DMatrix::from_diagonal(&nalgebra::DVector::from_vec(factors.clone())),
    ))
}

/// The pair `f, g` shaping `S₁ = {−f(|w|²) + g(|x|² + |y|² + |z|²) = 0}`.
///
/// `f` is `1` up to `1 − δ`, equals `s + δ` beyond `1 − δ/2`, and blends with
/// `6u³ − 8u⁴ + 3u⁵` in between; `g` is `s` below `1`, `1 + δ` beyond `1 + δ`,
/// with the blend `u + 4u³ − 7u⁴ + 3u⁵`. Both are C² and non-decreasing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandleProfile {
    delta: f64,
}

impl HandleProfile {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.25) {
            return Err(WeinsteinError::Parameter(format!("delta must lie in (0, 1/4), got {delta}")));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn f(&self, s: f64) -> f64 {
        let d = self.delta;
        let h = 0.5 * d;
        if s <= 1.0 - d {
            1.0
        } else if s < 1.0 - h {
            let u = (s - (1.0 - d)) / h;
            1.0 + h * u * u * u * (6.0 - 8.0 * u + 3.0 * u * u)
        } else {
            s + d
        }
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        let d = self.delta;
        let h = 0.5 * d;
        if s <= 1.0 - d {
            0.0
        } else if s < 1.0 - h {
            let u = (s - (1.0 - d)) / h;
            u * u * (18.0 - 32.0 * u + 15.0 * u * u)
        } else {
            1.0
        }
    }

    pub fn g(&self, s: f64) -> f64 {
        let d = self.delta;
        if s <= 1.0 {
            s
        } else if s < 1.0 + d {
            let u = (s - 1.0) / d;
            1.0 + d * (u + u * u * u * (4.0 - 7.0 * u + 3.0 * u * u))
        } else {
            1.0 + d
        }
    }

    pub fn g_prime(&self, s: f64) -> f64 {
        let d = self.delta;
        if s <= 1.0 {
            1.0
        } else if s < 1.0 + d {
            let u = (s - 1.0) / d;
            1.0 + u * u * (12.0 - 28.0 * u + 15.0 * u * u)
        } else {
            0.0
        }
    }
}

pub fn f_eval(pt: &ModelPoint, profile: &HandleProfile) -> f64 {
    -profile.f(pt.w_sq()) + profile.g(pt.radial_sq())
}

fn f_gradient_blocks(pt: &ModelPoint, profile: &HandleProfile) -> ModelPoint {
    let gp = profile.g_prime(pt.radial_sq());
    let fp = profile.f_prime(pt.w_sq());
    ModelPoint {
        x: pt.x.iter().map(|v| 2.0 * gp * v).collect(),
        y: pt.y.iter().map(|v| 2.0 * gp * v).collect(),
        z: pt.z.iter().map(|v| 2.0 * gp * v).collect(),
        w: pt.w.iter().map(|v| -2.0 * fp * v).collect(),
    }
}

/// `F` as an ambient scalar field with analytic gradient.
pub fn f_field(shape: ModelShape, profile: HandleProfile) -> ScalarField {
    let value = move |v: &[f64]| {
        let p = ModelPoint::from_ambient(shape, v).unwrap_or_else(|_| ModelPoint::zeros(shape));
        f_eval(&p, &profile)
    };
    let grad = move |v: &[f64]| {
        let p = ModelPoint::from_ambient(shape, v).unwrap_or_else(|_| ModelPoint::zeros(shape));
        f_gradient_blocks(&p, &profile).to_ambient()
    };
    ScalarField::new(shape.ambient_dim(), value).with_gradient(grad)
}

/// `X(F) = (|x|² + |y|² + 4|z|²) g' + 2|w|² f'` at a point of `S₁`.
pub fn transversality_check(pt: &ModelPoint, profile: &HandleProfile) -> Result<f64> {
    let f = f_eval(pt, profile);
    if f.abs() >= 1e-8 {
        return Err(WeinsteinError::Constraint(format!("|F| = {:e}, point not on S_1", f.abs())));
    }
    let xf = lie_derivative_f(pt, profile);
    if xf <= 0.0 {
        return Err(WeinsteinError::ProfileViolation(xf));
    }
    Ok(xf)
}

/// `X(F)` at any point.
pub fn lie_derivative_f(pt: &ModelPoint, profile: &HandleProfile) -> f64 {
    let xy = dot(&pt.x, &pt.x) + dot(&pt.y, &pt.y);
    (xy + 4.0 * dot(&pt.z, &pt.z)) * profile.g_prime(pt.radial_sq()) + 2.0 * pt.w_sq() * profile.f_prime(pt.w_sq())
}

/// `X_F = 2f'w∂z + 2g'z∂w` (and `−2g'y∂x + 2g'x∂y`), satisfying
/// `i_{X_F} ω₀ = −dF`.
pub fn hamiltonian_field_xf(pt: &ModelPoint, profile: &HandleProfile) -> ModelPoint {
    let gp = profile.g_prime(pt.radial_sq());
    let fp = profile.f_prime(pt.w_sq());
    ModelPoint {
        x: pt.y.iter().map(|v| -2.0 * gp * v).collect(),
        y: pt.x.iter().map(|v| 2.0 * gp * v).collect(),
        z: pt.w.iter().map(|v| 2.0 * fp * v).collect(),
        w: pt.z.iter().map(|v| 2.0 * gp * v).collect(),
    }
}

pub fn xf_field(shape: ModelShape, profile: HandleProfile) -> VectorField {
    lift(shape, move |p| hamiltonian_field_xf(p, &profile))
}

/// The a → ∞ transfer `(z, w) ↦ (z/|z|, |z| w)`; x, y are left unchanged.
pub fn limit_transfer_to_s1(pt: &ModelPoint) -> Result<ModelPoint> {
    require_s_minus1(pt)?;
    let r = norm(&pt.z);
    if r == 0.0 {
        return Err(WeinsteinError::SurgeredLocus);
    }
    Ok(ModelPoint {
        x: pt.x.clone(),
        y: pt.y.clone(),
        z: pt.z.iter().map(|v| v / r).collect(),
        w: pt.w.iter().map(|v| r * v).collect(),
    })
}

/// Inverse of [`limit_transfer_to_s1`]: `(z', w') ↦ (|w'| z', w'/|w'|)`.
pub fn limit_transfer_to_s_minus1(pt: &ModelPoint) -> Result<ModelPoint> {
    let r = norm(&pt.w);
    if r == 0.0 {
        return Err(WeinsteinError::SurgeredLocus);
    }
    Ok(ModelPoint {
        x: pt.x.clone(),
        y: pt.y.clone(),
        z: pt.z.iter().map(|v| r * v).collect(),
        w: pt.w.iter().map(|v| v / r).collect(),
    })
}

/// Liouville parameter of `X_a`; `Infinite` selects the limit maps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LiouvilleParameter {
    Finite(f64),
    Infinite,
}

/// A transfer result: image point and the flow time used to reach it.
#[derive(Clone, Debug, PartialEq)]
pub struct Transfer {
    pub point: ModelPoint,
    pub time: f64,
}

fn x_a_flow(pt: &ModelPoint, a: f64, t: f64) -> ModelPoint {
    let ex = (0.5 * t).exp();
    let ez = ((1.0 + a) * t).exp();
    let ew = (-a * t).exp();
    ModelPoint {
        x: pt.x.iter().map(|v| ex * v).collect(),
        y: pt.y.iter().map(|v| ex * v).collect(),
        z: pt.z.iter().map(|v| ez * v).collect(),
        w: pt.w.iter().map(|v| ew * v).collect(),
    }
}

/// Finds the unique sign change of a function that can only cross zero
/// upwards, starting from `t = 0`, then bisects to `|F| < S1_ROOT_TOL`.
fn upward_root(f: impl Fn(f64) -> f64, initial_step: f64, bound: f64) -> Result<f64> {
    let f0 = f(0.0);
    if f0.abs() < S1_ROOT_TOL {
        return Ok(0.0);
    }
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let (mut near, mut far) = (0.0, initial_step);
    loop {
        if far > bound {
            return Err(WeinsteinError::NoCrossing);
        }
        let v = f(dir * far);
        if v.abs() < S1_ROOT_TOL {
            return Ok(dir * far);
        }
        if v.signum() != f0.signum() {
            break;
        }
        near = far;
        far *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (near + far);
        let v = f(dir * mid);
        if v.abs() < S1_ROOT_TOL || far - near < 1e-16 {
            return Ok(dir * mid);
        }
        if v.signum() == f0.signum() {
            near = mid;
        } else {
            far = mid;
        }
    }
    Ok(dir * 0.5 * (near + far))
}

/// Follows the `X_a` flow (closed form) from `S₋₁` until `F = 0`.
pub fn transfer_to_s1_finite_a(pt: &ModelPoint, a: f64, profile: &HandleProfile) -> Result<Transfer> {
    require_s_minus1(pt)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(WeinsteinError::Parameter(format!("a must be positive and finite, got {a}")));
    }
    if norm(&pt.z) == 0.0 && pt.x.iter().chain(&pt.y).all(|v| *v == 0.0) {
        return Err(WeinsteinError::SurgeredLocus);
    }
    let t = upward_root(|t| f_eval(&x_a_flow(pt, a, t), profile), 1e-3 / (1.0 + a), 100.0)?;
    Ok(Transfer {
        point: x_a_flow(pt, a, t),
        time: t,
    })
}

/// Follows the limiting orbit `λ ↦ (λz, w/λ)` from `S₋₁` to `F = 0`. On the
/// flat piece this agrees with [`limit_transfer_to_s1`]; it also reaches the
/// rounded part of `S₁`. The returned time is `ln λ`.
pub fn transfer_along_limit_orbit(pt: &ModelPoint, profile: &HandleProfile) -> Result<Transfer> {
    require_s_minus1(pt)?;
    if norm(&pt.z) == 0.0 {
        return Err(WeinsteinError::SurgeredLocus);
    }
    let orbit = |t: f64| {
        let l = t.exp();
        ModelPoint {
            x: pt.x.clone(),
            y: pt.y.clone(),
            z: pt.z.iter().map(|v| l * v).collect(),
            w: pt.w.iter().map(|v| v / l).collect(),
        }
    };
    let t = upward_root(|t| f_eval(&orbit(t), profile), 1e-3, 100.0)?;
    Ok(Transfer { point: orbit(t), time: t })
}

/// Transfer from `S₋₁` to `S₁` for either kind of Liouville parameter.
pub fn transfer_to_s1(pt: &ModelPoint, a: LiouvilleParameter, profile: &HandleProfile) -> Result<Transfer> {
    match a {
        LiouvilleParameter::Finite(a) => transfer_to_s1_finite_a(pt, a, profile),
        LiouvilleParameter::Infinite => transfer_along_limit_orbit(pt, profile),
    }
}

/// Back from `S₁` to `S₋₁` along the same family: `X_a` in reverse for finite
/// `a` (closed form, reaching `|w| = 1`), the limit map otherwise.
pub fn transfer_to_s_minus1(pt: &ModelPoint, a: LiouvilleParameter) -> Result<ModelPoint> {
    let r = norm(&pt.w);
    if r == 0.0 {
        return Err(WeinsteinError::SurgeredLocus);
    }
    match a {
        LiouvilleParameter::Infinite => limit_transfer_to_s_minus1(pt),
        LiouvilleParameter::Finite(a) => {
            let t = r.ln() / a;
            let mut out = x_a_flow(pt, a, t);
            let wn = norm(&out.w);
            for v in out.w.iter_mut() {
                *v /= wn;
            }
            Ok(out)
        }
    }
}

/// A random point of `S₁`: `|w|² = s` uniform in `[0, 1]`, radial part
/// from `g(R²) = f(s)`, directions uniform.
pub fn sample_s1<R: rand::Rng>(shape: ModelShape, profile: &HandleProfile, rng: &mut R) -> ModelPoint {
    let s: f64 = rng.gen_range(0.0..=1.0);
    let target = profile.f(s);
    let (mut lo, mut hi) = (0.0, 1.0 + profile.delta());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if profile.g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r2 = 0.5 * (lo + hi);
    let mut unit = |len: usize| loop {
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            break v.into_iter().map(|a| a / n).collect::<Vec<f64>>();
        }
    };
    let m = shape.m();
    let l = shape.zw_len();
    let radial: Vec<f64> = unit(2 * m + l).into_iter().map(|v| v * r2.sqrt()).collect();
    let w = unit(l).into_iter().map(|v| v * s.sqrt()).collect();
    ModelPoint {
        x: radial[..m].to_vec(),
        y: radial[m..2 * m].to_vec(),
        z: radial[2 * m..].to_vec(),
        w,
    }
}

/// Surgery parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurgeryConfig {
    pub epsilon: f64,
    pub a: LiouvilleParameter,
    pub c: f64,
    pub delta: f64,
    /// Radius `ε̃` of the isotropic neighborhood before scaling by `C`.
    pub nu_size: f64,
}

impl Default for SurgeryConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            a: LiouvilleParameter::Infinite,
            c: 4.0,
            delta: 0.1,
            nu_size: 0.5,
        }
    }
}

impl SurgeryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(WeinsteinError::Parameter(format!("epsilon must lie in (0, 1/4), got {}", self.epsilon)));
        }
        if let LiouvilleParameter::Finite(a) = self.a {
            if !(a > 0.0 && a.is_finite()) {
                return Err(WeinsteinError::Parameter(format!("a must be positive, got {a}")));
            }
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(WeinsteinError::Parameter(format!("C must be at least 1, got {}", self.c)));
        }
        if !(self.nu_size > 0.0 && self.nu_size.is_finite()) {
            return Err(WeinsteinError::Parameter(format!("nu_size must be positive, got {}", self.nu_size)));
        }
        HandleProfile::new(self.delta)?;
        Ok(())
    }

    pub fn profile(&self) -> Result<HandleProfile> {
        HandleProfile::new(self.delta)
    }

    /// Radius of the gluing region `{|w| = 1, |x|² + |y|² + |z|² < (C ε̃)²}`.
    pub fn gluing_radius(&self) -> f64 {
        self.c * self.nu_size
    }
}

/// Three-valued answer of [`handle_membership`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Member,
    NotMember,
    /// The flow did not decide within the integrator's time bound.
    Indeterminate,
}

enum Hit {
    At(ModelPoint),
    Never,
    Undecided,
}

/// Integrates `field` until `|w|² = 1`, within `max_time`.
fn hit_s_minus1(pt: &ModelPoint, field: &VectorField, max_time: f64, cfg: &IntegratorConfig) -> Result<Hit> {
    if pt.w_sq() == 0.0 {
        return Ok(Hit::Never);
    }
    let shape = pt.shape();
    let wi = shape.w_indices();
    let ev = Event::new("S_-1", 1.0, move |v| wi.iter().map(|&i| v[i] * v[i]).sum());
    let mut local = cfg.clone();
    local.max_time = max_time.max(local.step * 2.0);
    let traj = flows::flow_until_event(field, &pt.to_ambient(), &ev, &local)?;
    match traj.event() {
        Some(rec) => Ok(Hit::At(ModelPoint::from_ambient(shape, rec.point.coords())?)),
        None => Ok(Hit::Undecided),
    }
}

/// Membership in the handle: either the forward `X` flow meets the gluing
/// region within time 1, or the backward flow meets the gluing region and
/// the forward flow meets `S₁`.
///
/// Since `X` is transverse to `S₁` and `F` only crosses zero upwards along
/// the flow, a start with `F > 0` never reaches `S₁` forward. Points with
/// `x = y = z = 0` have `F ≤ −1` along their whole orbit.
pub fn handle_membership(pt: &ModelPoint, config: &SurgeryConfig, cfg: &IntegratorConfig) -> Result<Membership> {
    config.validate()?;
    let profile = config.profile()?;
    let shape = pt.shape();
    let radius_sq = config.gluing_radius().powi(2);
    let in_gluing = |p: &ModelPoint| p.radial_sq() < radius_sq;
    let field = liouville_field(shape);

    if (pt.w_sq() - 1.0).abs() <= cfg.event_tol && in_gluing(pt) {
        return Ok(Membership::Member);
    }

    // Gluing part: forward time in [0, 1]. |w| decreases along X.
    if pt.w_sq() > 1.0 {
        if let Hit::At(p) = hit_s_minus1(pt, &field, 1.0, cfg)? {
            if in_gluing(&p) {
                return Ok(Membership::Member);
            }
        }
    }

    // Backward to the gluing region.
    let backward = if (pt.w_sq() - 1.0).abs() <= cfg.event_tol {
        Hit::At(pt.clone())
    } else if pt.w_sq() > 1.0 {
        Hit::Never
    } else {
        hit_s_minus1(pt, &field.reversed(), cfg.max_time, cfg)?
    };
    let glued_backward = match backward {
        Hit::At(p) => in_gluing(&p),
        Hit::Never => return Ok(Membership::NotMember),
        Hit::Undecided => return Ok(Membership::Indeterminate),
    };
    if !glued_backward {
        return Ok(Membership::NotMember);
    }

    // Forward to S₁.
    let f0 = f_eval(pt, &profile);
    if f0.abs() <= cfg.event_tol {
        return Ok(Membership::Member);
    }
    if f0 > 0.0 || pt.radial_sq() == 0.0 {
        return Ok(Membership::NotMember);
    }
    let ff = f_field(shape, profile);
    let ev = Event::new("S_1", 0.0, move |v| ff.value(v));
    let traj = flows::flow_until_event(&field, &pt.to_ambient(), &ev, cfg)?;
    Ok(if traj.event().is_some() {
        Membership::Member
    } else {
        Membership::Indeterminate
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn omega0_examples() {
        let s = ModelShape::new(2, 0).unwrap();
        let e = |i| crate::linalg::basis_vector(s.ambient_dim(), i);
        assert_eq!(omega0_eval(&e(s.x_index(0)), &e(s.y_index(0))), 1.0);
        assert_eq!(omega0_eval(&e(s.x_index(0)), &e(s.x_index(0))), 0.0);
        let u = crate::linalg::axpy(1.0, &e(s.z_index(0)), &e(s.w_index(0)));
        let v = crate::linalg::axpy(-1.0, &e(s.w_index(0)), &e(s.z_index(0)));
        assert_eq!(omega0_eval(&u, &v), -2.0);
    }

    #[test]
    fn liouville_examples() {
        let s = ModelShape::new(3, 1).unwrap();
        let p = ModelPoint::new(s, vec![1.0], vec![0.0], vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let x = liouville_x(&p);
        assert_eq!(x.x, vec![0.5]);
        assert_eq!(x.w, vec![-1.0, 0.0]);
        let p = ModelPoint::zw(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let xa = liouville_x_a(&p, 1.0);
        assert_eq!((xa.z, xa.w), (vec![2.0, 0.0], vec![0.0, -1.0]));
    }

    #[test]
    fn profile_shape() {
        let p = HandleProfile::new(0.1).unwrap();
        assert_eq!(p.f(0.5), 1.0);
        assert!(close(p.f(0.96), 1.06, 1e-15));
        assert!(close(p.f(0.95), 1.05, 1e-14));
        assert_eq!(p.g(0.7), 0.7);
        assert!(close(p.g(1.1), 1.1, 1e-14));
        assert_eq!(p.g(3.0), 1.1);
        let mut prev_f = p.f(0.0);
        let mut prev_g = p.g(0.0);
        for i in 1..=3000 {
            let s = i as f64 * 1e-3;
            assert!(p.f(s) >= prev_f - 1e-15 && p.g(s) >= prev_g - 1e-15);
            prev_f = p.f(s);
            prev_g = p.g(s);
        }
        assert!(HandleProfile::new(0.3).is_err());
    }

    #[test]
    fn f_eval_examples() {
        let p = HandleProfile::new(0.1).unwrap();
        let on = ModelPoint::zw(vec![1.5_f64.sqrt(), 0.0], vec![1.0, 0.0]).unwrap();
        assert!(f_eval(&on, &p).abs() < 1e-14);
        let origin = ModelPoint::zw(vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert_eq!(f_eval(&origin, &p), -1.0);
        let far = ModelPoint::zw(vec![0.0; 2], vec![2.0, 0.0]).unwrap();
        assert!(close(f_eval(&far, &p), -4.1, 1e-14));
    }

    #[test]
    fn transversality_examples() {
        let p = HandleProfile::new(0.1).unwrap();
        let wall = ModelPoint::zw(vec![1.5_f64.sqrt(), 0.0], vec![1.0, 0.0]).unwrap();
        assert!(close(transversality_check(&wall, &p).unwrap(), 2.0, 1e-12));
        let flat = ModelPoint::zw(vec![1.0, 0.0], vec![0.0, 0.5]).unwrap();
        assert!(close(transversality_check(&flat, &p).unwrap(), 4.0, 1e-12));
        assert!(transversality_check(&ModelPoint::zw(vec![0.0; 2], vec![0.0; 2]).unwrap(), &p).is_err());
    }

    #[test]
    fn hamiltonian_field_on_flat_piece() {
        let p = HandleProfile::new(0.1).unwrap();
        let pt = ModelPoint::zw(vec![0.6, 0.8], vec![0.1, -0.2]).unwrap();
        let xf = hamiltonian_field_xf(&pt, &p);
        assert_eq!(xf.z, vec![0.0, 0.0]);
        assert!(close(xf.w[0], 1.2, 1e-15) && close(xf.w[1], 1.6, 1e-15));
    }

    #[test]
    fn psi_w_examples() {
        let qp = SpherePoint::new(vec![1.0, 0.0], vec![0.0, 0.3]).unwrap();
        let n = NeighborhoodPoint::new(0.2, qp, vec![], vec![]).unwrap();
        let m = psi_w(&n);
        assert_eq!((m.z.clone(), m.w.clone()), (vec![0.2, 0.3], vec![1.0, 0.0]));
        let back = psi_w_inverse(&m).unwrap();
        assert!(close(back.z, 0.2, 1e-15));
        let pt = ModelPoint::zw(vec![-0.1, 0.5], vec![1.0, 0.0]).unwrap();
        let inv = psi_w_inverse(&pt).unwrap();
        assert!(close(inv.z, -0.1, 1e-15));
        assert_eq!(inv.qp.p(), &[0.0, 0.5]);
        // map and analytic chart agree
        let s = ModelShape::legendrian(2).unwrap();
        assert_eq!(psi_w_map(s).eval(&n.to_coords()), m.to_ambient());
    }

    #[test]
    fn phi_c_examples() {
        let qp = SpherePoint::new(vec![0.0, 1.0], vec![0.25, 0.0]).unwrap();
        let n = NeighborhoodPoint::new(0.1, qp, vec![0.3], vec![-0.2]).unwrap();
        assert_eq!(phi_c(&n, 1.0).unwrap(), n);
        let scaled = phi_c(&n, 4.0).unwrap();
        assert!(close(scaled.z, 0.4, 1e-15));
        assert_eq!(scaled.x, vec![0.6]);
        assert!(phi_c(&n, 0.0).is_err());
    }

    #[test]
    fn limit_transfer_example() {
        let pt = ModelPoint::zw(vec![-0.1, 0.5], vec![1.0, 0.0]).unwrap();
        let out = limit_transfer_to_s1(&pt).unwrap();
        assert!(close(out.z[0], -0.196116, 1e-6) && close(out.z[1], 0.980581, 1e-6));
        assert!(close(out.w[0], 0.509902, 1e-6) && out.w[1] == 0.0);
        let unit = ModelPoint::zw(vec![0.6, 0.8], vec![0.0, 1.0]).unwrap();
        assert_eq!(limit_transfer_to_s1(&unit).unwrap(), unit);
        let zero = ModelPoint::zw(vec![0.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(limit_transfer_to_s1(&zero), Err(WeinsteinError::SurgeredLocus));
    }

    #[test]
    fn finite_a_transfer_converges() {
        let p = HandleProfile::new(0.1).unwrap();
        let pt = ModelPoint::zw(vec![-0.1, 0.5], vec![1.0, 0.0]).unwrap();
        let lim = limit_transfer_to_s1(&pt).unwrap().to_ambient();
        let errs: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&a| {
                let t = transfer_to_s1_finite_a(&pt, a, &p).unwrap();
                assert!(f_eval(&t.point, &p).abs() < S1_ROOT_TOL);
                crate::linalg::distance(&t.point.to_ambient(), &lim)
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] < 2e-3);
        let on = ModelPoint::zw(vec![1.5_f64.sqrt(), 0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(transfer_to_s1_finite_a(&on, 5.0, &p).unwrap().time, 0.0);
    }

    #[test]
    fn limit_orbit_matches_closed_form_on_flat_piece() {
        let p = HandleProfile::new(0.1).unwrap();
        let pt = ModelPoint::zw(vec![-0.1, 0.5], vec![1.0, 0.0]).unwrap();
        let a = transfer_along_limit_orbit(&pt, &p).unwrap().point.to_ambient();
        let b = limit_transfer_to_s1(&pt).unwrap().to_ambient();
        assert!(crate::linalg::distance(&a, &b) < 1e-9);
    }

    #[test]
    fn membership_examples() {
        let config = SurgeryConfig::default();
        let cfg = IntegratorConfig::new(1e-3, 10.0, 1e-12).unwrap();
        let on_s1 = ModelPoint::zw(vec![1.0, 0.0], vec![0.0, 0.1]).unwrap();
        assert_eq!(handle_membership(&on_s1, &config, &cfg).unwrap(), Membership::Member);
        let origin = ModelPoint::zw(vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert_eq!(handle_membership(&origin, &config, &cfg).unwrap(), Membership::NotMember);
        let far = ModelPoint::zw(vec![5.0_f64.sqrt(), 0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(handle_membership(&far, &config, &cfg).unwrap(), Membership::NotMember);
    }
}
