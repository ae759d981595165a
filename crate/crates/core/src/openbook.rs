//! Contact forms of an abstract open book: the mapping torus `λ + dφ`, the
//! binding collar `h1(r) λ|∂Σ + h2(r) dφ`, the exactness correction of a
//! compactly supported symplectomorphism, the Lagrangian-to-Legendrian
//! correction on `T*Sⁿ`, and Reeb transversality to pages.

use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::cotangent::{canonical_form, project_to_bundle, CotangentError, SpherePoint};
use crate::forms::{
    directional_derivative, standard_symplectic_matrix, FdConfig, FormsError, KForm,
    SmoothMap, VectorField,
};
use crate::linalg::{self, basis_vector, dot, norm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpenBookError {
    #[error("dλ degenerate at sample (|det| = {det:e})")]
    Degenerate { det: f64 },
    #[error("ψ*λ − λ is not closed (residual {residual:e})")]
    NotClosed { residual: f64 },
    #[error("Y-flow left the sample box")]
    EscapedBox,
    #[error("pointwise linear system is singular")]
    Singular,
    #[error("line integral depends on the path (defect {defect:e})")]
    PathDependent { defect: f64 },
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Cotangent(#[from] CotangentError),
}

pub type Result<T> = std::result::Result<T, OpenBookError>;

/// Axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBox {
    pub bounds: Vec<(f64, f64)>,
}

impl SampleBox {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            bounds: vec![(-half_width, half_width); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bounds).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect()
    }

    /// Uniform sample on the boundary of the box.
    pub fn sample_boundary<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = self.sample(rng);
        let face = rng.gen_range(0..self.dim());
        let (lo, hi) = self.bounds[face];
        x[face] = if rng.gen_bool(0.5) { lo } else { hi };
        x
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            bounds: self
                .bounds
                .iter()
                .map(|(lo, hi)| {
                    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                    (c - factor * h, c + factor * h)
                })
                .collect(),
        }
    }
}

/// A Liouville domain chart `(R^{2n}, λ)` with analytic `dλ`.
#[derive(Clone, Debug)]
pub struct ExactSymplecticDomain {
    lambda: KForm,
    sample_box: SampleBox,
}

impl ExactSymplecticDomain {
    pub fn new(lambda: KForm, sample_box: SampleBox) -> Result<Self> {
        if lambda.degree() != 1 || !lambda.dim().is_multiple_of(2) {
            return Err(OpenBookError::Invalid("λ must be a 1-form on an even-dimensional chart".into()));
        }
        if lambda.analytic_derivative().is_none() {
            return Err(OpenBookError::Invalid("λ needs an analytic derivative".into()));
        }
        if sample_box.dim() != lambda.dim() {
            return Err(OpenBookError::Invalid("sample box dimension differs from λ".into()));
        }
        Ok(Self { lambda, sample_box })
    }

    /// The unit-cube chart of `C^n` with `λ = ½ Σ (x dy − y dx)`.
    pub fn standard_disk(n: usize) -> Self {
        let dim = 2 * n;
        let lambda = KForm::one_form(dim, standard_liouville_coeffs).with_derivative(KForm::constant_two_form(
            standard_symplectic_matrix(dim),
        ));
        Self {
            lambda,
            sample_box: SampleBox::cube(dim, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }

    pub fn lambda(&self) -> &KForm {
        &self.lambda
    }

    pub fn omega(&self) -> &KForm {
        self.lambda.analytic_derivative().expect("checked at construction")
    }

    pub fn sample_box(&self) -> &SampleBox {
        &self.sample_box
    }

    /// Gram matrix of `dλ` on the coordinate frame.
    pub fn omega_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        self.omega().coordinate_matrix(x)
    }

    /// Fails when `|det dλ| ≤ 1e−8` at `x`.
    pub fn check_nondegenerate(&self, x: &[f64]) -> Result<f64> {
        let det = self.omega_matrix(x).determinant();
        if det.abs() <= 1e-8 {
            return Err(OpenBookError::Degenerate { det });
        }
        Ok(det)
    }
}

fn standard_liouville_coeffs(x: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; x.len()];
    for i in 0..x.len() / 2 {
        c[2 * i] = -0.5 * x[2 * i + 1];
        c[2 * i + 1] = 0.5 * x[2 * i];
    }
    c
}

fn transpose_apply(j: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..j.ncols()).map(|c| (0..j.nrows()).map(|r| j[(r, c)] * v[r]).sum()).collect()
}

/// A map together with a box outside which it is the identity.
#[derive(Clone, Debug)]
pub struct SymplectomorphismCandidate {
    pub map: SmoothMap,
    pub support_box: SampleBox,
}

impl SymplectomorphismCandidate {
    pub fn new(map: SmoothMap, support_box: SampleBox) -> Result<Self> {
        if map.domain_dim() != map.codomain_dim() || map.domain_dim() != support_box.dim() {
            return Err(OpenBookError::Invalid("map and support box dimensions differ".into()));
        }
        Ok(Self { map, support_box })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            map: SmoothMap::identity(dim),
            support_box: SampleBox::cube(dim, 0.0),
        }
    }

    /// Largest displacement `|ψ(x) − x|` over points outside the support box.
    pub fn identity_defect_outside(&self, samples: &[Vec<f64>]) -> f64 {
        samples
            .iter()
            .filter(|x| !self.support_box.scaled(1.0 - 1e-12).contains(x))
            .map(|x| linalg::distance(&self.map.eval(x), x))
            .fold(0.0, f64::max)
    }

    /// `max |dλ(Dψ e_i, Dψ e_j) − dλ(e_i, e_j)|`, which is the residual of
    /// `d(ψ*λ − λ) = 0`.
    pub fn symplectic_residual(&self, domain: &ExactSymplecticDomain, x: &[f64]) -> f64 {
        pullback_two_form_residual(&self.map, domain.omega(), x)
    }
}

fn pullback_two_form_residual(map: &SmoothMap, omega: &KForm, x: &[f64]) -> f64 {
    let dim = map.domain_dim();
    let j = map.jacobian(x);
    let image = map.eval(x);
    let cols: Vec<Vec<f64>> = (0..dim).map(|c| j.column(c).iter().cloned().collect()).collect();
    let pulled = omega.gram(&image, &cols);
    let frame: Vec<Vec<f64>> = (0..dim).map(|i| basis_vector(dim, i)).collect();
    let orig = omega.gram(x, &frame);
    (pulled - orig).amax()
}

const BUMP_POWER: i32 = 12;

/// `(1 − t)^BUMP_POWER` on `[0, 1)`, zero beyond, with value 1 at 0.
fn bump(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - t).powi(BUMP_POWER)
    }
}

fn bump_prime(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        -(BUMP_POWER as f64) * (1.0 - t).powi(BUMP_POWER - 1)
    }
}

/// The time-one map of the Hamiltonian `H(|x − c|²)` whose flow rotates
/// every complex coordinate of `x − c` by the angle
/// `amplitude · bump(|x − c|²/radius²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactTwist {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

impl CompactTwist {
    pub fn angle(&self, s: f64) -> f64 {
        self.amplitude * bump(s / (self.radius * self.radius))
    }

    fn angle_prime(&self, s: f64) -> f64 {
        let r2 = self.radius * self.radius;
        self.amplitude * bump_prime(s / r2) / r2
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let th = self.angle(dot(&d, &d));
        if th == 0.0 {
            return x.to_vec();
        }
        let (s, co) = th.sin_cos();
        let mut out = self.center.clone();
        for i in 0..d.len() / 2 {
            let (a, b) = (d[2 * i], d[2 * i + 1]);
            out[2 * i] += co * a - s * b;
            out[2 * i + 1] += s * a + co * b;
        }
        out
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let dim = x.len();
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let sq = dot(&d, &d);
        let (s, co) = self.angle(sq).sin_cos();
        let mut jac = DMatrix::zeros(dim, dim);
        // The rotation plus the rank-one term `J R d ⊗ ∇θ`.
        let slope = 2.0 * self.angle_prime(sq);
        let mut turned = vec![0.0; dim];
        for i in 0..dim / 2 {
            let (a, b) = (d[2 * i], d[2 * i + 1]);
            jac[(2 * i, 2 * i)] = co;
            jac[(2 * i, 2 * i + 1)] = -s;
            jac[(2 * i + 1, 2 * i)] = s;
            jac[(2 * i + 1, 2 * i + 1)] = co;
            turned[2 * i] = -(s * a + co * b);
            turned[2 * i + 1] = co * a - s * b;
        }
        if slope != 0.0 {
            for r in 0..dim {
                for c in 0..dim {
                    jac[(r, c)] += turned[r] * slope * d[c];
                }
            }
        }
        jac
    }

    pub fn support_box(&self) -> SampleBox {
        SampleBox {
            bounds: self.center.iter().map(|c| (c - self.radius, c + self.radius)).collect(),
        }
    }

    pub fn candidate(&self) -> SymplectomorphismCandidate {
        let (a, b) = (self.clone(), self.clone());
        let dim = self.center.len();
        SymplectomorphismCandidate {
            map: SmoothMap::analytic(dim, dim, move |x| a.eval(x), move |x| b.jacobian(x)),
            support_box: self.support_box(),
        }
    }
}

/// Composition `second ∘ first` of two candidates.
pub fn compose_candidates(first: &SymplectomorphismCandidate, second: &SymplectomorphismCandidate) -> SymplectomorphismCandidate {
    let bounds = first
        .support_box
        .bounds
        .iter()
        .zip(&second.support_box.bounds)
        .map(|(a, b)| (a.0.min(b.0), a.1.max(b.1)))
        .collect();
    SymplectomorphismCandidate {
        map: first.map.then(&second.map),
        support_box: SampleBox { bounds },
    }
}

/// The three closed-form compactly supported test maps: an off-center
/// planar twist, a radial twist of `C²` and a composition of two
/// off-center twists of `C²`.
pub fn giroux_test_maps() -> Vec<(String, ExactSymplecticDomain, SymplectomorphismCandidate)> {
    let planar = CompactTwist {
        center: vec![0.2, -0.1],
        radius: 0.6,
        amplitude: 1.0,
    };
    let radial = CompactTwist {
        center: vec![0.0; 4],
        radius: 0.8,
        amplitude: 1.2,
    };
    let a = CompactTwist {
        center: vec![0.2, 0.0, -0.1, 0.1],
        radius: 0.5,
        amplitude: 0.8,
    };
    let b = CompactTwist {
        center: vec![-0.2, 0.1, 0.1, 0.0],
        radius: 0.5,
        amplitude: -0.6,
    };
    vec![
        ("planar-offcenter-twist".into(), ExactSymplecticDomain::standard_disk(1), planar.candidate()),
        ("radial-twist-c2".into(), ExactSymplecticDomain::standard_disk(2), radial.candidate()),
        (
            "composed-twists-c2".into(),
            ExactSymplecticDomain::standard_disk(2),
            compose_candidates(&a.candidate(), &b.candidate()),
        ),
    ]
}

/// Parameters of [`giroux_correction`].
#[derive(Clone, Debug, PartialEq)]
pub struct GirouxConfig {
    /// Gauss collocation step for the time-one flow of `Y`.
    pub flow_step: f64,
    /// Gauss–Legendre nodes per panel of the line integrals.
    pub quad_nodes: usize,
    /// Equal panels of each line integral; the integrand is only piecewise
    /// smooth where the path crosses the edge of the support.
    pub quad_panels: usize,
    /// Central-difference step for the Jacobian of `ψ̂`.
    pub jacobian_step: f64,
    /// Central-difference step for `dh`.
    pub dh_step: f64,
    pub closedness_tol: f64,
    /// Base point with `h = 0`; the box center when absent.
    pub base: Option<Vec<f64>>,
}

impl Default for GirouxConfig {
    fn default() -> Self {
        Self {
            flow_step: 0.1,
            quad_nodes: 16,
            quad_panels: 2,
            jacobian_step: 1e-5,
            dh_step: 1e-4,
            closedness_tol: 1e-6,
            base: None,
        }
    }
}

/// One step of the two-stage Gauss–Legendre collocation method (order 4).
/// Symplectic for locally Hamiltonian fields of a constant symplectic form,
/// unlike RK4. The stage equations are solved by fixed-point
/// iteration, which converges when `h·Lip(field)` is small.
fn gauss4_step(field: &VectorField, x: &[f64], h: f64) -> Vec<f64> {
    let s3 = 3f64.sqrt() / 6.0;
    let a = [[0.25, 0.25 - s3], [0.25 + s3, 0.25]];
    let k0 = field.eval(x);
    let mut k = [k0.clone(), k0];
    for _ in 0..60 {
        let stage = |i: usize| -> Vec<f64> {
            (0..x.len())
                .map(|j| x[j] + h * (a[i][0] * k[0][j] + a[i][1] * k[1][j]))
                .collect()
        };
        let next = [field.eval(&stage(0)), field.eval(&stage(1))];
        let change = (0..2)
            .flat_map(|i| next[i].iter().zip(&k[i]).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max);
        let scale = next.iter().flatten().fold(1.0, |m: f64, v| m.max(v.abs()));
        k = next;
        if !(change > 1e-16 * scale) {
            break;
        }
    }
    (0..x.len()).map(|j| x[j] + 0.5 * h * (k[0][j] + k[1][j])).collect()
}

fn gauss(nodes: usize) -> Result<Arc<GaussLegendre>> {
    let n = NonZeroUsize::new(nodes).ok_or_else(|| OpenBookError::Invalid("quadrature needs at least one node".into()))?;
    Ok(Arc::new(GaussLegendre::new(n)))
}

#[derive(Clone)]
struct Corrector {
    domain: ExactSymplecticDomain,
    psi: SmoothMap,
    // Inverse of a constant `Ω`, when `dλ` is constant.
    omega_inv: Option<Arc<DMatrix<f64>>>,
}

impl Corrector {
    fn new(domain: &ExactSymplecticDomain, psi: &SmoothMap) -> Self {
        let omega_inv = domain.omega().constant_matrix().and_then(|m| m.clone().try_inverse()).map(Arc::new);
        Self {
            domain: domain.clone(),
            psi: psi.clone(),
            omega_inv,
        }
    }

    /// Covector of `μ = ψ*λ − λ`.
    fn mu(&self, x: &[f64]) -> Vec<f64> {
        let lam = self.domain.lambda();
        let pulled = transpose_apply(&self.psi.jacobian(x), &lam.covector(&self.psi.eval(x)));
        pulled.iter().zip(lam.covector(x)).map(|(a, b)| a - b).collect()
    }

    /// Solves `i_Y dλ = −μ`, i.e. `Ω Y = μ` with `Ω_ij = dλ(e_i, e_j)`.
    fn y(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mu = self.mu(x);
        if mu.iter().all(|v| *v == 0.0) {
            return Some(vec![0.0; x.len()]);
        }
        if let Some(inv) = &self.omega_inv {
            return Some((&**inv * DVector::from_vec(mu)).as_slice().to_vec());
        }
        let omega = self.domain.omega_matrix(x);
        let sol = omega.lu().solve(&DVector::from_vec(mu))?;
        Some(sol.as_slice().to_vec())
    }
}

/// Output of [`giroux_correction`]: `ψ̂ = ψ ∘ φ₁` and the primitive `h` with
/// `ψ̂*λ = λ − dh`, normalized by `h(base) = 0`.
#[derive(Clone)]
pub struct GirouxCorrection {
    corrector: Corrector,
    y_field: VectorField,
    config: GirouxConfig,
    base: Vec<f64>,
    quad: Arc<GaussLegendre>,
}

impl std::fmt::Debug for GirouxCorrection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GirouxCorrection")
            .field("dim", &self.corrector.domain.dim())
            .field("base", &self.base)
            .field("config", &self.config)
            .finish()
    }
}

/// Builds the exactness correction after checking nondegeneracy of `dλ` and
/// closedness of `μ` at `check_samples`.
pub fn giroux_correction(
    domain: &ExactSymplecticDomain,
    psi: &SymplectomorphismCandidate,
    config: &GirouxConfig,
    check_samples: &[Vec<f64>],
) -> Result<GirouxCorrection> {
    if psi.map.domain_dim() != domain.dim() {
        return Err(OpenBookError::Invalid("map and domain dimensions differ".into()));
    }
    if !(config.flow_step > 0.0 && config.flow_step <= 1.0) {
        return Err(OpenBookError::Invalid(format!("flow_step {} must lie in (0, 1]", config.flow_step)));
    }
    for x in check_samples {
        domain.check_nondegenerate(x)?;
        let residual = psi.symplectic_residual(domain, x);
        if residual >= config.closedness_tol {
            return Err(OpenBookError::NotClosed { residual });
        }
    }
    let base = config.base.clone().unwrap_or_else(|| domain.sample_box().center());
    if !domain.sample_box().contains(&base) {
        return Err(OpenBookError::OutOfRange("base point outside the sample box".into()));
    }
    let corrector = Corrector::new(domain, &psi.map);
    let c = corrector.clone();
    let y_field = VectorField::new(domain.dim(), move |x| c.y(x).unwrap_or_else(|| vec![f64::NAN; x.len()]));
    Ok(GirouxCorrection {
        corrector,
        y_field,
        quad: gauss(config.quad_nodes)?,
        config: config.clone(),
        base,
    })
}

impl GirouxCorrection {
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn y(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.corrector.y(x).ok_or(OpenBookError::Singular)
    }

    fn steps(&self) -> usize {
        (1.0 / self.config.flow_step).ceil() as usize
    }

    /// Time-one flow of `Y`.
    pub fn flow_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.steps();
        let h = 1.0 / n as f64;
        let mut p = x.to_vec();
        for _ in 0..n {
            p = gauss4_step(&self.y_field, &p, h);
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(OpenBookError::Singular);
        }
        if !self.corrector.domain.sample_box().contains(&p) {
            return Err(OpenBookError::EscapedBox);
        }
        Ok(p)
    }

    pub fn psi_hat(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.corrector.psi.eval(&self.flow_one(x)?))
    }

    /// `ψ̂` as a map with a central-difference Jacobian.
    pub fn psi_hat_map(&self) -> SmoothMap {
        let me = self.clone();
        SmoothMap::finite_difference(
            self.corrector.domain.dim(),
            self.corrector.domain.dim(),
            move |x| me.psi_hat(x).unwrap_or_else(|_| vec![f64::NAN; x.len()]),
            FdConfig::with_step(self.config.jacobian_step),
        )
    }

    /// Covector of `ψ̂*λ − λ` at `x`.
    pub fn defect(&self, x: &[f64]) -> Result<Vec<f64>> {
        let dim = x.len();
        let hstep = self.config.jacobian_step;
        let mut jac = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[c] += hstep;
            xm[c] -= hstep;
            let (fp, fm) = (self.psi_hat(&xp)?, self.psi_hat(&xm)?);
            for r in 0..dim {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * hstep);
            }
        }
        let lam = self.corrector.domain.lambda();
        let pulled = transpose_apply(&jac, &lam.covector(&self.psi_hat(x)?));
        Ok(pulled.iter().zip(lam.covector(x)).map(|(a, b)| a - b).collect())
    }

    fn segment(&self, from: &[f64], to: &[f64]) -> Result<f64> {
        let dir: Vec<f64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
        if norm(&dir) == 0.0 {
            return Ok(0.0);
        }
        let mut err = None;
        let panels = self.config.quad_panels.max(1);
        let width = 1.0 / panels as f64;
        let mut val = 0.0;
        for k in 0..panels {
            val += self.quad.integrate(k as f64 * width, (k + 1) as f64 * width, |t| {
                let p = linalg::axpy(t, &dir, from);
                match self.defect(&p) {
                    Ok(d) => dot(&d, &dir),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            });
        }
        match err {
            Some(e) => Err(e),
            None => Ok(-val),
        }
    }

    /// `h(x) = −∫ (ψ̂*λ − λ)(γ′)` along the straight path from the base point.
    pub fn h(&self, x: &[f64]) -> Result<f64> {
        self.segment(&self.base, x)
    }

    /// `h(x)` along the broken path base → `via` → `x`.
    pub fn h_via(&self, x: &[f64], via: &[f64]) -> Result<f64> {
        Ok(self.segment(&self.base, via)? + self.segment(via, x)?)
    }

    /// Independent evaluation `h(x) = −∫₀¹ λ(Y)(φ_t x) dt + h₀` where the
    /// constant is fixed by `h(base) = 0`.
    pub fn h_flow(&self, x: &[f64]) -> Result<f64> {
        Ok(self.flow_primitive(x)? - self.flow_primitive(&self.base)?)
    }

    fn flow_primitive(&self, x: &[f64]) -> Result<f64> {
        let mut n = self.steps();
        if n % 2 == 1 {
            n += 1;
        }
        let h = 1.0 / n as f64;
        let lam = self.corrector.domain.lambda();
        let mut p = x.to_vec();
        let mut total = 0.0;
        for i in 0..=n {
            let y = self.y(&p)?;
            let weight = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            total += weight * lam.eval(&p, &[&y]);
            if i < n {
                p = gauss4_step(&self.y_field, &p, h);
            }
        }
        Ok(-total * h / 3.0)
    }

    /// `max_i |(ψ̂*λ − λ + dh)(e_i)|` with `dh` by central differences.
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        let defect = self.defect(x)?;
        let step = self.config.dh_step;
        let mut worst: f64 = 0.0;
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += step;
            xm[i] -= step;
            let dh = (self.h(&xp)? - self.h(&xm)?) / (2.0 * step);
            worst = worst.max((defect[i] + dh).abs());
        }
        Ok(worst)
    }

    /// `max |dλ(Dψ̂ e_i, Dψ̂ e_j) − dλ(e_i, e_j)|`.
    pub fn symplectic_residual(&self, x: &[f64]) -> f64 {
        pullback_two_form_residual(&self.psi_hat_map(), self.corrector.domain.omega(), x)
    }

    /// Constant making `h + c ≥ 1` on the given samples.
    pub fn positivity_offset(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let mut min = f64::INFINITY;
        for s in samples {
            min = min.min(self.h(s)?);
        }
        Ok(if min.is_finite() { 1.0 - min } else { 1.0 })
    }
}

/// Recovers a primitive `h` of `−(ψ*λ − λ)` directly (no flow correction),
/// by straight-line integration from `base`. Meaningful when `ψ` is already
/// exact.
pub fn exact_primitive(domain: &ExactSymplecticDomain, psi: &SmoothMap, base: &[f64], x: &[f64], nodes: usize) -> Result<f64> {
    let quad = gauss(nodes)?;
    let c = Corrector::new(domain, psi);
    let dir: Vec<f64> = x.iter().zip(base).map(|(a, b)| a - b).collect();
    Ok(-quad.integrate(0.0, 1.0, |t| dot(&c.mu(&linalg::axpy(t, &dir, base)), &dir)))
}

/// Mapping-torus form `λ + dφ` on chart coordinates `[σ…, φ]`.
pub fn mapping_torus_form(domain: &ExactSymplecticDomain) -> KForm {
    let dim = domain.dim() + 1;
    let lam = domain.lambda().clone();
    let omega = domain.omega().clone();
    let d = KForm::new(2, dim, move |pt, vs| {
        let n = dim - 1;
        omega.eval(&pt[..n], &[&vs[0][..n], &vs[1][..n]])
    });
    KForm::new(1, dim, move |pt, vs| {
        let n = dim - 1;
        lam.eval(&pt[..n], &[&vs[0][..n]]) + vs[0][n]
    })
    .with_derivative(d)
}

pub fn mapping_torus_form_eval(domain: &ExactSymplecticDomain, pt: &[f64], v: &[f64]) -> Result<f64> {
    Ok(mapping_torus_form(domain).try_eval(pt, &[v])?)
}

/// `(x, r, φ) ↦ (1/2 − r, x, φ)` from `[x…, r, φ]` to `[s, x…, φ]`.
pub fn glue_map(boundary_dim: usize) -> SmoothMap {
    let dim = boundary_dim + 2;
    SmoothMap::analytic(
        dim,
        dim,
        move |c| {
            let mut out = vec![0.5 - c[boundary_dim]];
            out.extend_from_slice(&c[..boundary_dim]);
            out.push(c[boundary_dim + 1]);
            out
        },
        move |_| {
            let mut j = DMatrix::zeros(dim, dim);
            j[(0, boundary_dim)] = -1.0;
            for i in 0..boundary_dim {
                j[(1 + i, i)] = 1.0;
            }
            j[(dim - 1, dim - 1)] = 1.0;
            j
        },
    )
}

pub fn glue_point(x: &[f64], r: f64, phi: f64) -> Result<Vec<f64>> {
    if !(r > 0.5 && r < 1.0) {
        return Err(OpenBookError::OutOfRange(format!("glue map needs 1/2 < r < 1, got {r}")));
    }
    let mut c = x.to_vec();
    c.push(r);
    c.push(phi);
    Ok(glue_map(x.len()).eval(&c))
}

/// Collar form `e^s λ|∂Σ + dφ` on `[s, x…, φ]` for the standard sphere
/// `∂Σ ⊂ C^n` with `λ = ½ Σ (x dy − y dx)`.
pub fn collar_form(boundary_dim: usize) -> KForm {
    let dim = boundary_dim + 2;
    KForm::new(1, dim, move |pt, vs| {
        let x = &pt[1..1 + boundary_dim];
        pt[0].exp() * dot(&standard_liouville_coeffs(x), &vs[0][1..1 + boundary_dim]) + vs[0][dim - 1]
    })
}

/// Collar embedding `(s, x, φ) ↦ (e^{s/2} x, φ)` into the mapping torus of
/// the standard disk, along which `λ = e^s λ|∂Σ`.
pub fn collar_embedding(boundary_dim: usize) -> SmoothMap {
    let dim = boundary_dim + 2;
    SmoothMap::analytic(
        dim,
        boundary_dim + 1,
        move |c| {
            let f = (0.5 * c[0]).exp();
            let mut out: Vec<f64> = c[1..1 + boundary_dim].iter().map(|v| f * v).collect();
            out.push(c[dim - 1]);
            out
        },
        move |c| {
            let f = (0.5 * c[0]).exp();
            let mut j = DMatrix::zeros(boundary_dim + 1, dim);
            for i in 0..boundary_dim {
                j[(i, 0)] = 0.5 * f * c[1 + i];
                j[(i, 1 + i)] = f;
            }
            j[(boundary_dim, dim - 1)] = 1.0;
            j
        },
    )
}

/// Closed-form profile pair for the binding collar.
///
/// `h1 = e^{1/2 − ρ(r)}` where `ρ` is constant `0.6 − ln 1.05` near 0 and
/// `ρ(r) = r` from `0.6`, joined by `ρ₀ + w(u³ − u⁴/2)` over a window of
/// width `w = 2 ln 1.05`. `h2 = r²` up to `0.3`, `1` from `0.6`, joined by a
/// quintic Hermite blend matching value, slope and curvature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BindingProfile {
    matching_radius: f64,
}

const H2_INNER: f64 = 0.3;

impl Default for BindingProfile {
    fn default() -> Self {
        Self { matching_radius: 0.6 }
    }
}

impl BindingProfile {
    pub fn matching_radius(&self) -> f64 {
        self.matching_radius
    }

    fn window(&self) -> f64 {
        2.0 * 1.05_f64.ln()
    }

    fn rho(&self, r: f64) -> (f64, f64) {
        let m = self.matching_radius;
        let w = self.window();
        let rho0 = m - 1.05_f64.ln();
        if r >= m {
            (r, 1.0)
        } else if r <= m - w {
            (rho0, 0.0)
        } else {
            let u = (r - (m - w)) / w;
            (rho0 + w * (u * u * u - 0.5 * u * u * u * u), 3.0 * u * u - 2.0 * u * u * u)
        }
    }

    pub fn h1(&self, r: f64) -> f64 {
        (0.5 - self.rho(r).0).exp()
    }

    pub fn h1_prime(&self, r: f64) -> f64 {
        let (rho, d) = self.rho(r);
        -d * (0.5 - rho).exp()
    }

    fn hermite(&self, r: f64) -> (f64, f64) {
        let len = self.matching_radius - H2_INNER;
        let u = (r - H2_INNER) / len;
        let (u2, u3, u4, u5) = (u * u, u * u * u, u.powi(4), u.powi(5));
        let h0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
        let h1 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
        let h2 = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
        let h5 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
        let d0 = -30.0 * u2 + 60.0 * u3 - 30.0 * u4;
        let d1 = 1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4;
        let d2 = u - 4.5 * u2 + 6.0 * u3 - 2.5 * u4;
        let d5 = 30.0 * u2 - 60.0 * u3 + 30.0 * u4;
        let (v0, s0, c0) = (H2_INNER * H2_INNER, 2.0 * H2_INNER * len, 2.0 * len * len);
        (
            v0 * h0 + s0 * h1 + c0 * h2 + h5,
            (v0 * d0 + s0 * d1 + c0 * d2 + d5) / len,
        )
    }

    pub fn h2(&self, r: f64) -> f64 {
        if r <= H2_INNER {
            r * r
        } else if r >= self.matching_radius {
            1.0
        } else {
            self.hermite(r).0
        }
    }

    pub fn h2_prime(&self, r: f64) -> f64 {
        if r <= H2_INNER {
            2.0 * r
        } else if r >= self.matching_radius {
            0.0
        } else {
            self.hermite(r).1
        }
    }

    /// `h2(r)/r²`, equal to 1 near the binding.
    pub fn h2_over_r2(&self, r: f64) -> f64 {
        if r <= H2_INNER {
            1.0
        } else {
            self.h2(r) / (r * r)
        }
    }

    /// `h1^{n−1}(h1 h2′ − h1′ h2)`, the radial factor of `β ∧ dβⁿ`.
    pub fn contact_factor(&self, r: f64, n: usize) -> f64 {
        self.h1(r).powi(n as i32 - 1) * (self.h1(r) * self.h2_prime(r) - self.h1_prime(r) * self.h2(r))
    }
}

/// `β(v)` in polar collar coordinates `(x ∈ ∂Σ, r, φ)` for the standard
/// sphere; `v = [v_x…, v_r, v_φ]`.
pub fn binding_form_eval(profile: &BindingProfile, x: &[f64], r: f64, v: &[f64]) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(OpenBookError::OutOfRange(format!("binding form needs 0 <= r < 1, got {r}")));
    }
    if v.len() != x.len() + 2 {
        return Err(OpenBookError::Invalid("tangent vector needs [v_x, v_r, v_phi]".into()));
    }
    let n = x.len();
    Ok(profile.h1(r) * dot(&standard_liouville_coeffs(x), &v[..n]) + profile.h2(r) * v[n + 1])
}

/// `β = h1(r) λ|∂Σ + (h2(r)/r²)(u dv − v du)` on Cartesian collar
/// coordinates `[x…, u, v]`, smooth across the binding `u = v = 0`.
pub fn binding_form(profile: BindingProfile, boundary_dim: usize) -> KForm {
    let dim = boundary_dim + 2;
    KForm::one_form(dim, move |c| {
        let (u, v) = (c[boundary_dim], c[boundary_dim + 1]);
        let r = (u * u + v * v).sqrt();
        let mut out: Vec<f64> = standard_liouville_coeffs(&c[..boundary_dim])
            .into_iter()
            .map(|a| profile.h1(r) * a)
            .collect();
        let k = profile.h2_over_r2(r);
        out.push(-k * v);
        out.push(k * u);
        out
    })
}

/// Tangent frame of `∂Σ × D²` at Cartesian collar coordinates `[x…, u, v]`:
/// sphere tangents oriented as the boundary of the ball, then `∂u, ∂v`.
pub fn binding_frame(coords: &[f64], boundary_dim: usize) -> Vec<Vec<f64>> {
    let dim = boundary_dim + 2;
    let x = &coords[..boundary_dim];
    let xn = norm(x);
    let unit: Vec<f64> = x.iter().map(|v| v / xn).collect();
    let mut tangents = linalg::orthonormal_complement(&unit);
    let mut m = DMatrix::zeros(boundary_dim, boundary_dim);
    for i in 0..boundary_dim {
        m[(i, 0)] = unit[i];
        for (c, t) in tangents.iter().enumerate() {
            m[(i, c + 1)] = t[i];
        }
    }
    if m.determinant() < 0.0 {
        tangents[0].iter_mut().for_each(|v| *v = -*v);
    }
    let mut frame: Vec<Vec<f64>> = tangents
        .into_iter()
        .map(|mut t| {
            t.extend([0.0, 0.0]);
            t
        })
        .collect();
    frame.push(basis_vector(dim, boundary_dim));
    frame.push(basis_vector(dim, boundary_dim + 1));
    frame
}

/// Smooth cutoff: 1 for `|p| ≤ inner`, 0 for `|p| ≥ outer`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self { inner: 0.3, outer: 0.6 }
    }
}

impl Cutoff {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(OpenBookError::Invalid(format!("cutoff radii need 0 < inner < outer, got {inner}, {outer}")));
        }
        Ok(Self { inner, outer })
    }

    pub fn value(&self, s: f64) -> f64 {
        if s <= self.inner {
            1.0
        } else if s >= self.outer {
            0.0
        } else {
            let u = (s - self.inner) / (self.outer - self.inner);
            1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
        }
    }
}

/// Corrected primitive `λ̃ = λ − d(ρg)` on a Weinstein neighborhood of the
/// zero section of `T*Sⁿ`, with `dg = λ − λ_can` near the zero section.
#[derive(Clone)]
pub struct LegendrianRealization {
    lambda: KForm,
    sphere_dim: usize,
    cutoff: Cutoff,
    base_q: Vec<f64>,
    quad: Arc<GaussLegendre>,
    fd: FdConfig,
}

impl std::fmt::Debug for LegendrianRealization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LegendrianRealization")
            .field("sphere_dim", &self.sphere_dim)
            .field("cutoff", &self.cutoff)
            .field("base_q", &self.base_q)
            .finish()
    }
}

/// Builds the correction and checks path-independence of `g` at `samples`
/// (tolerance `path_tol`).
pub fn legendrian_realization(
    lambda: &KForm,
    sphere_dim: usize,
    cutoff: Cutoff,
    samples: &[SpherePoint],
    path_tol: f64,
) -> Result<LegendrianRealization> {
    if sphere_dim < 2 {
        return Err(OpenBookError::Invalid(format!("needs n > 1 so that H^1(S^n) = 0, got n = {sphere_dim}")));
    }
    if lambda.degree() != 1 || lambda.dim() != 2 * (sphere_dim + 1) {
        return Err(OpenBookError::Invalid("λ must be a 1-form on R^{2n+2}".into()));
    }
    let mut base_q = vec![0.0; sphere_dim + 1];
    base_q[sphere_dim] = 1.0;
    let real = LegendrianRealization {
        lambda: lambda.clone(),
        sphere_dim,
        cutoff,
        base_q,
        quad: gauss(16)?,
        fd: FdConfig::default(),
    };
    for s in samples {
        let defect = (real.g(s)? - real.g_alt(s)?).abs();
        if defect > path_tol {
            return Err(OpenBookError::PathDependent { defect });
        }
    }
    Ok(real)
}

impl LegendrianRealization {
    fn difference(&self, x: &[f64], v: &[f64]) -> f64 {
        let can = canonical_form(self.sphere_dim);
        self.lambda.eval(x, &[v]) - can.eval(x, &[v])
    }

    /// Integral of `λ − λ_can` along the great circle from `a` to `b` on the
    /// zero section.
    fn arc(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let c = dot(a, b).clamp(-1.0, 1.0);
        let angle = c.acos();
        if angle < 1e-15 {
            return Ok(0.0);
        }
        let perp: Vec<f64> = b.iter().zip(a).map(|(bi, ai)| bi - c * ai).collect();
        let pn = norm(&perp);
        if pn < 1e-12 {
            return Err(OpenBookError::Invalid("antipodal arc endpoints".into()));
        }
        let u: Vec<f64> = perp.iter().map(|v| v / pn).collect();
        let m = self.sphere_dim + 1;
        Ok(self.quad.integrate(0.0, angle, |t| {
            let (s, co) = t.sin_cos();
            let mut x: Vec<f64> = a.iter().zip(&u).map(|(ai, ui)| co * ai + s * ui).collect();
            let mut v: Vec<f64> = a.iter().zip(&u).map(|(ai, ui)| -s * ai + co * ui).collect();
            x.extend(vec![0.0; m]);
            v.extend(vec![0.0; m]);
            self.difference(&x, &v)
        }))
    }

    /// Integral of `λ − λ_can` along the fiber segment `t ↦ (q, t p)`.
    fn fiber(&self, pt: &SpherePoint) -> f64 {
        let (q, p) = (pt.q(), pt.p());
        let mut v = vec![0.0; q.len()];
        v.extend_from_slice(p);
        self.quad.integrate(0.0, 1.0, |t| {
            let mut x = q.to_vec();
            x.extend(p.iter().map(|pi| t * pi));
            self.difference(&x, &v)
        })
    }

    fn waypoint(&self, q: &[f64]) -> Vec<f64> {
        // A point on the zero section orthogonal to the base.
        let mut w = vec![0.0; self.sphere_dim + 1];
        let i = if q[0].abs() < 0.9 { 0 } else { 1 };
        w[i] = 1.0;
        w
    }

    /// `g(q, p)` along zero-section arc from the base, then the fiber.
    pub fn g(&self, pt: &SpherePoint) -> Result<f64> {
        let q = pt.q();
        let direct = if dot(q, &self.base_q) > -0.5 {
            self.arc(&self.base_q, q)?
        } else {
            let w = self.waypoint(q);
            self.arc(&self.base_q, &w)? + self.arc(&w, q)?
        };
        Ok(direct + self.fiber(pt))
    }

    /// `g` along a second path through a fixed zero-section waypoint.
    pub fn g_alt(&self, pt: &SpherePoint) -> Result<f64> {
        let q = pt.q();
        let mut w = self.waypoint(q);
        if dot(&w, q) < -0.5 {
            w.iter_mut().for_each(|v| *v = -*v);
        }
        if dot(&w, q).abs() > 1.0 - 1e-9 {
            // q coincides with the waypoint; use the other axis.
            w = vec![0.0; self.sphere_dim + 1];
            w[2.min(self.sphere_dim)] = 1.0;
        }
        Ok(self.arc(&self.base_q, &w)? + self.arc(&w, q)? + self.fiber(pt))
    }

    /// `ρ(|p|) g` composed with the projection to the bundle.
    pub fn correction(&self, x: &[f64]) -> f64 {
        let m = self.sphere_dim + 1;
        match project_to_bundle(&x[..m], &x[m..]) {
            Ok(pt) => {
                let rho = self.cutoff.value(norm(pt.p()));
                if rho == 0.0 {
                    0.0
                } else {
                    rho * self.g(&pt).unwrap_or(f64::NAN)
                }
            }
            Err(_) => f64::NAN,
        }
    }

    /// `λ̃ = λ − d(ρg)`; its derivative is that of `λ` when attached.
    pub fn lambda_tilde(&self) -> KForm {
        let me = self.clone();
        let fd = self.fd;
        let form = KForm::new(1, self.lambda.dim(), move |pt, vs| {
            me.lambda.eval(pt, vs) - directional_derivative(|x| me.correction(x), pt, vs[0], fd)
        });
        match self.lambda.analytic_derivative() {
            Some(d) => form.with_derivative(d.clone()),
            None => form,
        }
    }

    /// `dt + λ̃` on `[t, q…, p…]`.
    pub fn contact_form(&self) -> KForm {
        let lt = self.lambda_tilde();
        let dim = self.lambda.dim() + 1;
        KForm::new(1, dim, move |pt, vs| vs[0][0] + lt.eval(&pt[1..], &[&vs[0][1..]]))
    }
}

/// Reeb vector field of a contact form at `pt`, restricted to the span of
/// `frame` when given (for hypersurfaces), otherwise on the coordinate frame.
pub fn reeb_vector(alpha: &KForm, pt: &[f64], frame: Option<&[Vec<f64>]>, fd: FdConfig) -> Result<Vec<f64>> {
    let dim = alpha.dim();
    let frame: Vec<Vec<f64>> = match frame {
        Some(f) => f.to_vec(),
        None => (0..dim).map(|i| basis_vector(dim, i)).collect(),
    };
    if frame.len().is_multiple_of(2) {
        return Err(OpenBookError::Invalid("Reeb field needs an odd-dimensional frame".into()));
    }
    let d = alpha.d(fd);
    let gram = d.gram(pt, &frame);
    let c = linalg::kernel_vector(&gram.transpose());
    let mut r = vec![0.0; dim];
    for (ci, f) in c.iter().zip(&frame) {
        r = linalg::axpy(*ci, f, &r);
    }
    let a = alpha.eval(pt, &[&r]);
    if a.abs() < 1e-12 {
        return Err(OpenBookError::Singular);
    }
    Ok(r.iter().map(|v| v / a).collect())
}

/// Minimum of `dθ(R_α)` over `samples`, where `theta` is a local lift of the
/// page angle.
pub fn reeb_transversality_check(
    alpha: &KForm,
    theta: &(dyn Fn(&[f64]) -> f64 + Sync),
    samples: &[Vec<f64>],
    frame: Option<&(dyn Fn(&[f64]) -> Vec<Vec<f64>> + Sync)>,
    fd: FdConfig,
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for s in samples {
        let f = frame.map(|f| f(s));
        let r = reeb_vector(alpha, s, f.as_deref(), fd)?;
        worst = worst.min(directional_derivative(theta, s, &r, fd));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::contact_volume;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn compact_twist_is_symplectic_and_supported() {
        let t = CompactTwist {
            center: vec![0.2, 0.0, -0.1, 0.1],
            radius: 0.5,
            amplitude: 0.8,
        };
        let cand = t.candidate();
        let domain = ExactSymplecticDomain::standard_disk(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = domain.sample_box().sample(&mut rng);
            assert!(cand.symplectic_residual(&domain, &x) < 1e-12);
            let fd = cand.map.jacobian_fd(&x, FdConfig::default());
            assert!((fd - cand.map.jacobian(&x)).amax() < 1e-8);
        }
        let outside: Vec<Vec<f64>> = (0..50).map(|_| cand.support_box.sample_boundary(&mut rng)).collect();
        assert_eq!(cand.identity_defect_outside(&outside), 0.0);
    }

    #[test]
    fn identity_needs_no_correction() {
        let domain = ExactSymplecticDomain::standard_disk(1);
        let id = SymplectomorphismCandidate::identity(2);
        let g = giroux_correction(&domain, &id, &GirouxConfig::default(), &[vec![0.1, 0.2]]).unwrap();
        let x = vec![0.3, -0.4];
        assert_eq!(g.y(&x).unwrap(), vec![0.0, 0.0]);
        assert_eq!(g.psi_hat(&x).unwrap(), x);
        assert!(g.h(&x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn planar_twist_correction() {
        let maps = giroux_test_maps();
        let (_, domain, psi) = &maps[0];
        let g = giroux_correction(domain, psi, &GirouxConfig::default(), &[vec![0.1, 0.1]]).unwrap();
        for x in [[0.3, -0.2], [0.0, 0.25], [-0.2, 0.1]] {
            assert!(g.residual(&x).unwrap() < 1e-5);
            let a = g.h(&x).unwrap();
            assert!((a - g.h_via(&x, &[0.5, 0.5]).unwrap()).abs() < 1e-5);
            assert!((a - g.h_flow(&x).unwrap()).abs() < 1e-5);
        }
        assert!(g.symplectic_residual(&[0.25, 0.0]) < 1e-5);
    }

    #[test]
    fn non_symplectic_map_is_rejected() {
        let domain = ExactSymplecticDomain::standard_disk(1);
        let stretch = SmoothMap::analytic(2, 2, |x| vec![2.0 * x[0], x[1]], |_| DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0])));
        let cand = SymplectomorphismCandidate::new(stretch, SampleBox::cube(2, 1.0)).unwrap();
        let err = giroux_correction(&domain, &cand, &GirouxConfig::default(), &[vec![0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, OpenBookError::NotClosed { .. }));
    }

    #[test]
    fn glue_map_examples() {
        let s = glue_point(&[1.0, 0.0], 0.9, 0.3).unwrap();
        assert!((s[0] + 0.4).abs() < 1e-15);
        assert_eq!(&s[1..], &[1.0, 0.0, 0.3]);
        assert!(glue_point(&[1.0, 0.0], 0.4, 0.0).is_err());
    }

    #[test]
    fn binding_profile_shape() {
        let p = BindingProfile::default();
        assert!((p.h1(0.8) - (-0.3_f64).exp()).abs() < 1e-15);
        assert!((p.h1(0.0) - (-0.1_f64).exp() * 1.05).abs() < 1e-14);
        assert!((p.h2(0.2) - 0.04).abs() < 1e-15);
        assert_eq!(p.h2(0.7), 1.0);
        let mut prev = 0.0;
        for i in 1..1000 {
            let r = i as f64 * 1e-3;
            assert!(p.h2(r) >= prev);
            assert!(p.h1_prime(r) <= 0.0);
            assert!(p.contact_factor(r, 2) > 0.0);
            prev = p.h2(r);
        }
        // derivatives agree with differences across the blends
        for r in [0.35, 0.45, 0.55, 0.51, 0.58] {
            let fd = (p.h2(r + 1e-6) - p.h2(r - 1e-6)) / 2e-6;
            assert!((fd - p.h2_prime(r)).abs() < 1e-6);
            let fd = (p.h1(r + 1e-6) - p.h1(r - 1e-6)) / 2e-6;
            assert!((fd - p.h1_prime(r)).abs() < 1e-6);
        }
    }

    #[test]
    fn binding_form_polar_examples() {
        let p = BindingProfile::default();
        let x = [1.0, 0.0];
        assert_eq!(binding_form_eval(&p, &x, 0.7, &[0.0, 0.0, 0.0, 1.0]).unwrap(), 1.0);
        let v = [0.0, 1.0, 0.0, 0.0];
        assert!((binding_form_eval(&p, &x, 0.0, &v).unwrap() - p.h1(0.0) * 0.5).abs() < 1e-15);
        assert!(binding_form_eval(&p, &x, 1.0, &v).is_err());
    }

    #[test]
    fn binding_contact_volume_positive_on_s1() {
        let p = BindingProfile::default();
        let beta = binding_form(p, 2);
        for i in 0..20 {
            let r = 0.01 + 0.94 * i as f64 / 19.0;
            let ang = 0.3 * i as f64;
            let pt = [ang.cos(), ang.sin(), r * 0.6, r * 0.8];
            let vol = contact_volume(&beta, &pt, &binding_frame(&pt, 2), FdConfig::default()).unwrap();
            assert!(vol > 0.0, "r = {r}: {vol}");
        }
    }

    #[test]
    fn mapping_torus_examples() {
        let d = ExactSymplecticDomain::standard_disk(1);
        assert_eq!(mapping_torus_form_eval(&d, &[0.3, 0.2, 1.0], &[0.0, 0.0, 1.0]).unwrap(), 1.0);
        // v = radial direction has λ(v) = 0
        assert_eq!(mapping_torus_form_eval(&d, &[0.3, 0.2, 1.0], &[0.3, 0.2, 0.0]).unwrap(), 0.0);
        let alpha = mapping_torus_form(&d);
        let frame: Vec<Vec<f64>> = (0..3).map(|i| basis_vector(3, i)).collect();
        assert!(contact_volume(&alpha, &[0.3, 0.2, 1.0], &frame, FdConfig::default()).unwrap() > 0.0);
    }

    #[test]
    fn reeb_of_mapping_torus_is_d_phi() {
        let d = ExactSymplecticDomain::standard_disk(1);
        let alpha = mapping_torus_form(&d);
        let r = reeb_vector(&alpha, &[0.3, -0.2, 0.5], None, FdConfig::default()).unwrap();
        assert!(r[0].abs() < 1e-9 && r[1].abs() < 1e-9 && (r[2] - 1.0).abs() < 1e-9);
        let theta = |x: &[f64]| x[2];
        let m = reeb_transversality_check(&alpha, &theta, &[vec![0.3, -0.2, 0.5]], None, FdConfig::default()).unwrap();
        assert!((m - 1.0).abs() < 1e-8);
        // a page function along which the Reeb field is tangent
        let flat = |x: &[f64]| x[0];
        let m = reeb_transversality_check(&alpha, &flat, &[vec![0.3, -0.2, 0.5]], None, FdConfig::default()).unwrap();
        assert!(m.abs() < 1e-8);
    }

    #[test]
    fn legendrian_realization_requires_n_above_one() {
        let lam = canonical_form(1);
        assert!(legendrian_realization(&lam, 1, Cutoff::default(), &[], 1e-6).is_err());
    }
}
