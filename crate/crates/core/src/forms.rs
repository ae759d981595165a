//! Pointwise exterior calculus on a single ambient chart.
//!
//! Differential forms, maps and vector fields are stored as evaluation
//! oracles. A form may carry an analytic exterior derivative; otherwise
//! derivatives are taken by central differences with constant extensions of
//! the tangent-vector arguments, so no Lie-bracket terms appear in the
//! alternating-sum formula.
//!
//! Orientation follows the coordinate order of the ambient chart. Symplectic
//! pairs are laid out as consecutive coordinates `(2i, 2i + 1)`, which is also
//! the pairing used by [`standard_complex_structure`].

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{self, basis_vector, pfaffian};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expected {expected} tangent vectors, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("degenerate frame (Gram determinant {gram_det:e})")]
    DegenerateFrame { gram_det: f64 },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, FormsError>;

/// Central-difference settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    /// One Richardson extrapolation step (`(4 D(h/2) - D(h)) / 3`).
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            richardson: false,
        }
    }
}

impl FdConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            richardson: false,
        }
    }

    pub fn richardson(mut self) -> Self {
        self.richardson = true;
        self
    }
}

/// Directional derivative of a scalar function by central differences.
pub fn directional_derivative<F>(f: F, pt: &[f64], dir: &[f64], cfg: FdConfig) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let central = |h: f64| {
        let plus: Vec<f64> = pt.iter().zip(dir).map(|(p, d)| p + h * d).collect();
        let minus: Vec<f64> = pt.iter().zip(dir).map(|(p, d)| p - h * d).collect();
        (f(&plus) - f(&minus)) / (2.0 * h)
    };
    if cfg.richardson {
        let coarse = central(cfg.step);
        let fine = central(0.5 * cfg.step);
        (4.0 * fine - coarse) / 3.0
    } else {
        central(cfg.step)
    }
}

/// A point of the ambient chart with finite coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientPoint(Vec<f64>);

impl AmbientPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(FormsError::Invalid("ambient point needs at least one coordinate".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(FormsError::NonFinite(format!("coordinate {bad}")));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for AmbientPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type FormFn = dyn Fn(&[f64], &[&[f64]]) -> f64 + Send + Sync;
type CoeffFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Smooth scalar function with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    value: Arc<ScalarFn>,
    gradient: Option<Arc<VectorFn>>,
}

impl ScalarField {
    pub fn new(dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, pt: &[f64]) -> f64 {
        (self.value)(pt)
    }

    /// Analytic gradient if one was supplied, central differences otherwise.
    pub fn gradient(&self, pt: &[f64], cfg: FdConfig) -> Vec<f64> {
        match &self.gradient {
            Some(g) => g(pt),
            None => (0..self.dim)
                .map(|i| {
                    let e = basis_vector(self.dim, i);
                    directional_derivative(|x| (self.value)(x), pt, &e, cfg)
                })
                .collect(),
        }
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// The exact 1-form `d(self)`.
    pub fn differential(&self, cfg: FdConfig) -> KForm {
        let f = self.clone();
        let df = KForm::one_form(self.dim, move |pt| f.gradient(pt, cfg));
        df.with_derivative(KForm::zero(2, self.dim))
    }
}

/// Smooth vector field on the ambient chart.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    eval: Arc<VectorFn>,
}

impl VectorField {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_| vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, pt: &[f64]) -> Vec<f64> {
        (self.eval)(pt)
    }

    /// The same field with reversed direction, for backward flows.
    pub fn reversed(&self) -> Self {
        let f = self.eval.clone();
        Self::new(self.dim, move |pt| f(pt).into_iter().map(|v| -v).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = self.eval.clone();
        Self::new(self.dim, move |pt| f(pt).into_iter().map(|v| c * v).collect())
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField").field("dim", &self.dim).finish()
    }
}

/// How a [`SmoothMap`] produces its derivative.
#[derive(Clone)]
pub enum JacobianOracle {
    Analytic(Arc<MatrixFn>),
    FiniteDifference(FdConfig),
}

/// A smooth map between ambient charts, evaluated pointwise.
#[derive(Clone)]
pub struct SmoothMap {
    domain_dim: usize,
    codomain_dim: usize,
    eval: Arc<VectorFn>,
    jacobian: JacobianOracle,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("domain_dim", &self.domain_dim)
            .field("codomain_dim", &self.codomain_dim)
            .field(
                "jacobian",
                &match self.jacobian {
                    JacobianOracle::Analytic(_) => "analytic".to_string(),
                    JacobianOracle::FiniteDifference(c) => format!("fd(h={})", c.step),
                },
            )
            .finish()
    }
}

impl SmoothMap {
    pub fn analytic(
        domain_dim: usize,
        codomain_dim: usize,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            domain_dim,
            codomain_dim,
            eval: Arc::new(eval),
            jacobian: JacobianOracle::Analytic(Arc::new(jacobian)),
        }
    }

    pub fn finite_difference(
        domain_dim: usize,
        codomain_dim: usize,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        cfg: FdConfig,
    ) -> Self {
        Self {
            domain_dim,
            codomain_dim,
            eval: Arc::new(eval),
            jacobian: JacobianOracle::FiniteDifference(cfg),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::analytic(dim, dim, |x| x.to_vec(), move |_| DMatrix::identity(dim, dim))
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn eval(&self, pt: &[f64]) -> Vec<f64> {
        (self.eval)(pt)
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.jacobian, JacobianOracle::Analytic(_))
    }

    /// Derivative matrix (`codomain_dim × domain_dim`) at `pt`.
    pub fn jacobian(&self, pt: &[f64]) -> DMatrix<f64> {
        match &self.jacobian {
            JacobianOracle::Analytic(j) => j(pt),
            JacobianOracle::FiniteDifference(cfg) => self.jacobian_fd(pt, *cfg),
        }
    }

    /// Central-difference Jacobian regardless of the configured oracle.
    pub fn jacobian_fd(&self, pt: &[f64], cfg: FdConfig) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.codomain_dim, self.domain_dim);
        let central = |i: usize, h: f64| {
            let mut plus = pt.to_vec();
            let mut minus = pt.to_vec();
            plus[i] += h;
            minus[i] -= h;
            let fp = (self.eval)(&plus);
            let fm = (self.eval)(&minus);
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<_>>()
        };
        for i in 0..self.domain_dim {
            let col = if cfg.richardson {
                let coarse = central(i, cfg.step);
                let fine = central(i, 0.5 * cfg.step);
                fine.iter()
                    .zip(&coarse)
                    .map(|(f, c)| (4.0 * f - c) / 3.0)
                    .collect()
            } else {
                central(i, cfg.step)
            };
            for (r, v) in col.into_iter().enumerate() {
                jac[(r, i)] = v;
            }
        }
        jac
    }

    /// Pushes a tangent vector forward: `J(pt) · v`.
    pub fn push_forward(&self, pt: &[f64], v: &[f64]) -> Vec<f64> {
        let j = self.jacobian(pt);
        (0..self.codomain_dim)
            .map(|r| (0..self.domain_dim).map(|c| j[(r, c)] * v[c]).sum())
            .collect()
    }

    /// `outer ∘ self`, with chain-rule Jacobian when both factors are analytic.
    pub fn then(&self, outer: &SmoothMap) -> SmoothMap {
        assert_eq!(self.codomain_dim, outer.domain_dim, "composition dimension mismatch");
        let inner_eval = self.eval.clone();
        let outer_eval = outer.eval.clone();
        let eval = move |x: &[f64]| outer_eval(&inner_eval(x));
        if self.is_analytic() && outer.is_analytic() {
            let inner = self.clone();
            let outer = outer.clone();
            SmoothMap::analytic(self.domain_dim, outer.codomain_dim, eval, move |x| {
                let y = inner.eval(x);
                outer.jacobian(&y) * inner.jacobian(x)
            })
        } else {
            SmoothMap::finite_difference(
                self.domain_dim,
                outer.codomain_dim,
                eval,
                FdConfig::default(),
            )
        }
    }
}

/// A differential k-form given as an evaluation oracle.
#[derive(Clone)]
pub struct KForm {
    degree: usize,
    dim: usize,
    eval: Arc<FormFn>,
    derivative: Option<Arc<KForm>>,
    // Coordinate representations, kept when the form was built from one.
    coeffs: Option<Arc<CoeffFn>>,
    matrix: Option<Arc<MatrixFn>>,
    constant: Option<Arc<DMatrix<f64>>>,
}

impl fmt::Debug for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KForm")
            .field("degree", &self.degree)
            .field("dim", &self.dim)
            .field("analytic_d", &self.derivative.is_some())
            .finish()
    }
}

impl KForm {
    pub fn new(
        degree: usize,
        dim: usize,
        eval: impl Fn(&[f64], &[&[f64]]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            degree,
            dim,
            eval: Arc::new(eval),
            derivative: None,
            coeffs: None,
            matrix: None,
            constant: None,
        }
    }

    pub fn zero(degree: usize, dim: usize) -> Self {
        Self::new(degree, dim, |_, _| 0.0)
    }

    /// `Σ a_i(x) dx_i` from its coefficient covector.
    pub fn one_form(dim: usize, coeffs: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        let coeffs: Arc<CoeffFn> = Arc::new(coeffs);
        let c = coeffs.clone();
        let mut form = Self::new(1, dim, move |pt, vs| linalg::dot(&c(pt), vs[0]));
        form.coeffs = Some(coeffs);
        form
    }

    /// `ω(u, v) = uᵀ M(x) v` for an antisymmetric matrix field `M`.
    pub fn two_form(dim: usize, matrix: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        let matrix: Arc<MatrixFn> = Arc::new(matrix);
        let m = matrix.clone();
        let mut form = Self::new(2, dim, move |pt, vs| {
            let m = m(pt);
            let (u, v) = (vs[0], vs[1]);
            let mut total = 0.0;
            for i in 0..u.len() {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..v.len() {
                    total += u[i] * m[(i, j)] * v[j];
                }
            }
            total
        });
        form.matrix = Some(matrix);
        form
    }

    pub fn constant_two_form(m: DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let constant = Arc::new(m.clone());
        let mut form = Self::two_form(dim, move |_| m.clone()).with_derivative(KForm::zero(3, dim));
        form.constant = Some(constant);
        form
    }

    /// The coordinate matrix when the form is a constant 2-form.
    pub fn constant_matrix(&self) -> Option<&DMatrix<f64>> {
        self.constant.as_deref()
    }

    /// Attaches an analytic exterior derivative.
    pub fn with_derivative(mut self, d: KForm) -> Self {
        assert_eq!(d.degree, self.degree + 1, "derivative degree");
        assert_eq!(d.dim, self.dim, "derivative dimension");
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn analytic_derivative(&self) -> Option<&KForm> {
        self.derivative.as_deref()
    }

    /// Evaluates the form without argument checks.
    pub fn eval(&self, pt: &[f64], vectors: &[&[f64]]) -> f64 {
        (self.eval)(pt, vectors)
    }

    /// Evaluates with dimension and arity checks.
    pub fn try_eval(&self, pt: &[f64], vectors: &[&[f64]]) -> Result<f64> {
        check_dim(self.dim, pt.len())?;
        if vectors.len() != self.degree {
            return Err(FormsError::Arity {
                expected: self.degree,
                got: vectors.len(),
            });
        }
        for v in vectors {
            check_dim(self.dim, v.len())?;
        }
        finite(self.eval(pt, vectors), "form value")
    }

    /// Coefficient covector of a 1-form.
    pub fn covector(&self, pt: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.degree, 1);
        if let Some(c) = &self.coeffs {
            return c(pt);
        }
        (0..self.dim)
            .map(|i| self.eval(pt, &[&basis_vector(self.dim, i)]))
            .collect()
    }

    /// Matrix `ω(e_i, e_j)` of a 2-form in the coordinate frame.
    pub fn coordinate_matrix(&self, pt: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(self.degree, 2);
        if let Some(m) = &self.matrix {
            return m(pt);
        }
        let frame: Vec<Vec<f64>> = (0..self.dim).map(|i| basis_vector(self.dim, i)).collect();
        self.gram(pt, &frame)
    }

    /// Gram matrix `ω(f_i, f_j)` of a 2-form on a frame.
    pub fn gram(&self, pt: &[f64], frame: &[Vec<f64>]) -> DMatrix<f64> {
        debug_assert_eq!(self.degree, 2);
        let n = frame.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.eval(pt, &[&frame[i], &frame[j]]);
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        m
    }

    /// Exterior derivative: analytic when attached, central differences otherwise.
    pub fn d(&self, cfg: FdConfig) -> KForm {
        if let Some(d) = &self.derivative {
            return (**d).clone();
        }
        let form = self.clone();
        KForm::new(self.degree + 1, self.dim, move |pt, vs| {
            exterior_derivative_unchecked(&form, pt, vs, cfg)
        })
    }

    pub fn add(&self, other: &KForm) -> KForm {
        assert_eq!(self.degree, other.degree);
        assert_eq!(self.dim, other.dim);
        let (a, b) = (self.clone(), other.clone());
        let sum = KForm::new(self.degree, self.dim, move |pt, vs| a.eval(pt, vs) + b.eval(pt, vs));
        match (&self.derivative, &other.derivative) {
            (Some(da), Some(db)) => sum.with_derivative(da.add(db)),
            _ => sum,
        }
    }

    pub fn scale(&self, c: f64) -> KForm {
        let a = self.clone();
        let scaled = KForm::new(self.degree, self.dim, move |pt, vs| c * a.eval(pt, vs));
        match &self.derivative {
            Some(d) => scaled.with_derivative(d.scale(c)),
            None => scaled,
        }
    }

    /// Interior product `i_X self`.
    pub fn interior(&self, field: &VectorField) -> KForm {
        assert!(self.degree >= 1);
        let (form, x) = (self.clone(), field.clone());
        KForm::new(self.degree - 1, self.dim, move |pt, vs| {
            let xv = x.eval(pt);
            let mut args: Vec<&[f64]> = Vec::with_capacity(vs.len() + 1);
            args.push(&xv);
            args.extend_from_slice(vs);
            form.eval(pt, &args)
        })
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(FormsError::DimensionMismatch { expected, got })
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FormsError::NonFinite(what.to_string()))
    }
}

fn exterior_derivative_unchecked(form: &KForm, pt: &[f64], vectors: &[&[f64]], cfg: FdConfig) -> f64 {
    let mut total = 0.0;
    for i in 0..vectors.len() {
        let rest: Vec<&[f64]> = vectors
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| *v)
            .collect();
        let dir = vectors[i];
        let term = directional_derivative(|x| form.eval(x, &rest), pt, dir, cfg);
        if i % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// `(dω)(pt)(v₀, …, v_k)` by the alternating-sum formula with central
/// differences of step `cfg.step`.
pub fn exterior_derivative(form: &KForm, pt: &[f64], vectors: &[&[f64]], cfg: FdConfig) -> Result<f64> {
    check_dim(form.dim, pt.len())?;
    if vectors.len() != form.degree + 1 {
        return Err(FormsError::Arity {
            expected: form.degree + 1,
            got: vectors.len(),
        });
    }
    if cfg.step <= 0.0 || !cfg.step.is_finite() {
        return Err(FormsError::Invalid(format!("finite-difference step {}", cfg.step)));
    }
    finite(
        exterior_derivative_unchecked(form, pt, vectors, cfg),
        "exterior derivative (form not differentiable at point or step too small)",
    )
}

/// `(F^*ω)(pt)(v₁, …, v_k) = ω(F(pt))(J v₁, …, J v_k)`.
pub fn pullback_eval(map: &SmoothMap, form: &KForm, pt: &[f64], vectors: &[&[f64]]) -> Result<f64> {
    check_dim(map.domain_dim, pt.len())?;
    check_dim(form.dim, map.codomain_dim)?;
    let jac = map.jacobian(pt);
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(FormsError::NonFinite("Jacobian".into()));
    }
    let image = map.eval(pt);
    let pushed: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            check_dim(map.domain_dim, v.len())?;
            Ok((0..map.codomain_dim)
                .map(|r| (0..map.domain_dim).map(|c| jac[(r, c)] * v[c]).sum())
                .collect())
        })
        .collect::<Result<_>>()?;
    let args: Vec<&[f64]> = pushed.iter().map(|v| v.as_slice()).collect();
    form.try_eval(&image, &args)
}

/// The pulled-back form as an oracle on the domain.
pub fn pullback(map: &SmoothMap, form: &KForm) -> KForm {
    let (m, f) = (map.clone(), form.clone());
    KForm::new(form.degree, map.domain_dim, move |pt, vs| {
        pullback_eval(&m, &f, pt, vs).unwrap_or(f64::NAN)
    })
}

/// Residual of `L_X ω = ω` on the frame, using Cartan's formula with ω closed:
/// `max |d(i_X ω)(v_i, v_j) − ω(v_i, v_j)|`.
pub fn liouville_check(
    field: &VectorField,
    omega: &KForm,
    pt: &[f64],
    frame: &[Vec<f64>],
    cfg: FdConfig,
) -> Result<f64> {
    if omega.degree != 2 {
        return Err(FormsError::Invalid("liouville_check needs a 2-form".into()));
    }
    check_dim(omega.dim, field.dim)?;
    let primitive = omega.interior(field);
    let mut worst: f64 = 0.0;
    for i in 0..frame.len() {
        for j in (i + 1)..frame.len() {
            let lhs = exterior_derivative(&primitive, pt, &[&frame[i], &frame[j]], cfg)?;
            let rhs = omega.try_eval(pt, &[&frame[i], &frame[j]])?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// Gram determinant of a list of vectors.
pub fn frame_gram_determinant(frame: &[Vec<f64>]) -> f64 {
    let n = frame.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = linalg::dot(&frame[i], &frame[j]);
        }
    }
    g.determinant()
}

pub const DEGENERATE_FRAME_THRESHOLD: f64 = 1e-12;

/// `(α ∧ (dα)ⁿ)(f₀, …, f_{2n})` for a 1-form α and an ordered frame of
/// `2n + 1` vectors; frame order defines the orientation.
pub fn contact_volume(alpha: &KForm, pt: &[f64], frame: &[Vec<f64>], cfg: FdConfig) -> Result<f64> {
    if alpha.degree != 1 {
        return Err(FormsError::Invalid("contact_volume needs a 1-form".into()));
    }
    if frame.len().is_multiple_of(2) {
        return Err(FormsError::Arity {
            expected: frame.len() + 1,
            got: frame.len(),
        });
    }
    for v in frame {
        check_dim(alpha.dim, v.len())?;
    }
    let gram_det = frame_gram_determinant(frame);
    if gram_det.abs() < DEGENERATE_FRAME_THRESHOLD {
        return Err(FormsError::DegenerateFrame { gram_det });
    }
    let d_alpha = alpha.d(cfg);
    let m = d_alpha.gram(pt, frame);
    let n = (frame.len() - 1) / 2;
    let n_factorial: f64 = (1..=n).map(|k| k as f64).product();
    let mut total = 0.0;
    for i in 0..frame.len() {
        let a = alpha.eval(pt, &[&frame[i]]);
        if a == 0.0 {
            continue;
        }
        let keep: Vec<usize> = (0..frame.len()).filter(|&j| j != i).collect();
        let minor = m.select_rows(&keep).select_columns(&keep);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * a * n_factorial * pfaffian(&minor);
    }
    finite(total, "contact volume")
}

/// Standard complex structure on `R^{2m}`: `J e_{2i} = e_{2i+1}`, `J e_{2i+1} = −e_{2i}`.
pub fn standard_complex_structure(dim: usize) -> DMatrix<f64> {
    assert!(dim.is_multiple_of(2), "complex structure needs even dimension");
    let mut j = DMatrix::zeros(dim, dim);
    for i in 0..dim / 2 {
        j[(2 * i + 1, 2 * i)] = 1.0;
        j[(2 * i, 2 * i + 1)] = -1.0;
    }
    j
}

/// The standard symplectic form `Σ dx_i ∧ dy_i` on consecutive coordinate pairs.
pub fn standard_symplectic_matrix(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim / 2 {
        m[(2 * i, 2 * i + 1)] = 1.0;
        m[(2 * i + 1, 2 * i)] = -1.0;
    }
    m
}

fn apply(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)] * v[c]).sum())
        .collect()
}

/// The 1-form `−df ∘ J` whose differential is `ω_f`.
fn psh_primitive(f: &ScalarField, cfg: FdConfig) -> KForm {
    let j = standard_complex_structure(f.dim);
    let f = f.clone();
    KForm::new(1, f.dim, move |pt, vs| -linalg::dot(&f.gradient(pt, cfg), &apply(&j, vs[0])))
}

/// Gram matrix of `g(X, Y) = −d(df∘J)(X, JY)` on the supplied vectors; the
/// function is strictly plurisubharmonic at `pt` iff this is positive definite
/// on a basis (see [`linalg::is_positive_definite`]).
pub fn psh_metric_check(f: &ScalarField, pt: &[f64], vectors: &[Vec<f64>], cfg: FdConfig) -> Result<DMatrix<f64>> {
    if !f.dim.is_multiple_of(2) {
        return Err(FormsError::Invalid("plurisubharmonic test needs even dimension".into()));
    }
    check_dim(f.dim, pt.len())?;
    let j = standard_complex_structure(f.dim);
    // ω_f = d(−df∘J)
    let primitive = psh_primitive(f, cfg);
    let n = vectors.len();
    let mut gram = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let jy = apply(&j, &vectors[b]);
            gram[(a, b)] = exterior_derivative(&primitive, pt, &[&vectors[a], &jy], cfg)?;
        }
    }
    Ok(gram)
}

/// Liouville field of `ω_f` solving `i_X ω_f = −df∘J` at `pt`.
pub fn psh_liouville_field(f: &ScalarField, pt: &[f64], cfg: FdConfig) -> Result<Vec<f64>> {
    let dim = f.dim;
    let primitive = psh_primitive(f, cfg);
    let frame: Vec<Vec<f64>> = (0..dim).map(|i| basis_vector(dim, i)).collect();
    let mut omega = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in (a + 1)..dim {
            let v = exterior_derivative(&primitive, pt, &[&frame[a], &frame[b]], cfg)?;
            omega[(a, b)] = v;
            omega[(b, a)] = -v;
        }
    }
    // i_X ω (v) = Xᵀ Ω v, so Ωᵀ X = β with β the covector of −df∘J.
    let beta = primitive.covector(pt);
    let solved = linalg::solve_pivoted(&omega.transpose(), &beta)
        .ok_or_else(|| FormsError::Singular("ω_f degenerate".into()))?;
    Ok(solved.x)
}

/// Sign convention for Hamiltonian vector fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HamiltonianConvention {
    /// `i_{X_H} ω = dH`
    InteriorIsDifferential,
    /// `i_{X_H} ω = −dH`
    InteriorIsMinusDifferential,
}

/// Solves for the Hamiltonian vector field of `h` with respect to `omega` at `pt`.
pub fn hamiltonian_field(
    omega: &KForm,
    h: &ScalarField,
    pt: &[f64],
    convention: HamiltonianConvention,
    cfg: FdConfig,
) -> Result<Vec<f64>> {
    let dim = omega.dim;
    check_dim(dim, h.dim)?;
    let frame: Vec<Vec<f64>> = (0..dim).map(|i| basis_vector(dim, i)).collect();
    let m = omega.gram(pt, &frame);
    let grad = h.gradient(pt, cfg);
    let rhs: Vec<f64> = match convention {
        HamiltonianConvention::InteriorIsDifferential => grad,
        HamiltonianConvention::InteriorIsMinusDifferential => grad.into_iter().map(|v| -v).collect(),
    };
    let solved = linalg::solve_pivoted(&m.transpose(), &rhs)
        .ok_or_else(|| FormsError::Singular("symplectic form degenerate".into()))?;
    Ok(solved.x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar_primitive() -> KForm {
        // ½(x dy − y dx) on R²
        KForm::one_form(2, |p| vec![-0.5 * p[1], 0.5 * p[0]])
    }

    #[test]
    fn d_of_exact_form_vanishes() {
        let phi = ScalarField::new(2, |p| (p[0] * p[1]).sin() + p[0].powi(3));
        let dphi = KForm::one_form(2, {
            let phi = phi.clone();
            move |p| phi.gradient(p, FdConfig::with_step(1e-4))
        });
        for pt in [[0.3, -0.7], [1.1, 0.2], [-0.5, 0.9]] {
            let v = exterior_derivative(&dphi, &pt, &[&[1.0, 0.0], &[0.0, 1.0]], FdConfig::with_step(1e-4))
                .unwrap();
            assert!(v.abs() < 1e-8, "d(dφ) = {v}");
        }
    }

    #[test]
    fn d_of_polar_primitive_is_area_form() {
        let lam = polar_primitive();
        for pt in [[0.0, 0.0], [0.4, -1.3], [2.0, 5.0]] {
            let v = exterior_derivative(&lam, &pt, &[&[1.0, 0.0], &[0.0, 1.0]], FdConfig::default()).unwrap();
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn canonical_form_on_cotangent_circle_chart() {
        // λ = p dq on R⁴ with coordinates (q₁, q₂, p₁, p₂); dλ = dp∧dq.
        let lam = KForm::one_form(4, |x| vec![x[2], x[3], 0.0, 0.0]);
        let pt = [1.0, 0.0, 0.0, 0.3];
        let e2 = [0.0, 1.0, 0.0, 0.0];
        let e4 = [0.0, 0.0, 0.0, 1.0];
        let v = exterior_derivative(&lam, &pt, &[&e2, &e4], FdConfig::default()).unwrap();
        // (dp∧dq)(e_{q2}, e_{p2}) = dp(e_{q2})dq(e_{p2}) − dp(e_{p2})dq(e_{q2}) = −1
        assert!((v + 1.0).abs() < 1e-9);
    }

    #[test]
    fn wrong_arity_and_bad_step_are_errors() {
        let lam = polar_primitive();
        assert!(matches!(
            exterior_derivative(&lam, &[0.0, 0.0], &[&[1.0, 0.0]], FdConfig::default()),
            Err(FormsError::Arity { .. })
        ));
        assert!(exterior_derivative(&lam, &[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]], FdConfig::with_step(0.0)).is_err());
        let blowup = KForm::one_form(1, |p| vec![1.0 / p[0]]);
        let res = exterior_derivative(&blowup, &[0.0], &[&[1.0], &[1.0]], FdConfig::default());
        assert!(res.is_ok() || matches!(res, Err(FormsError::NonFinite(_))));
        let nan = KForm::one_form(1, |_| vec![f64::NAN]);
        assert!(matches!(
            exterior_derivative(&nan, &[0.0], &[&[1.0], &[0.5]], FdConfig::default()),
            Err(FormsError::NonFinite(_))
        ));
    }

    #[test]
    fn pullback_through_identity_is_direct_evaluation() {
        let lam = polar_primitive();
        let id = SmoothMap::identity(2);
        let pt = [0.7, -0.2];
        let v = [0.3, 1.1];
        let a = pullback_eval(&id, &lam, &pt, &[&v]).unwrap();
        assert_eq!(a, lam.eval(&pt, &[&v]));
    }

    #[test]
    fn liouville_residuals() {
        // X = ½(x∂x + y∂y) + 2z∂z − w∂w against dx∧dy + dz∧dw.
        let omega = KForm::constant_two_form(standard_symplectic_matrix(4));
        let x = VectorField::new(4, |p| vec![0.5 * p[0], 0.5 * p[1], 2.0 * p[2], -p[3]]);
        let frame: Vec<Vec<f64>> = (0..4).map(|i| basis_vector(4, i)).collect();
        let r = liouville_check(&x, &omega, &[0.3, -0.4, 1.2, 0.8], &frame, FdConfig::default()).unwrap();
        assert!(r < 1e-6, "residual {r}");
        let zero = VectorField::zero(4);
        let r0 = liouville_check(&zero, &omega, &[0.3, -0.4, 1.2, 0.8], &frame, FdConfig::default()).unwrap();
        assert!((r0 - 1.0).abs() < 1e-12);
        let omega_zw = KForm::constant_two_form(standard_symplectic_matrix(2));
        let zf: Vec<Vec<f64>> = (0..2).map(|i| basis_vector(2, i)).collect();
        for a in [0.0, 1.0, 10.0] {
            let xa = VectorField::new(2, move |p| vec![(1.0 + a) * p[0], -a * p[1]]);
            let r = liouville_check(&xa, &omega_zw, &[0.7, -0.3], &zf, FdConfig::default()).unwrap();
            assert!(r < 1e-6, "a = {a}: residual {r}");
        }
    }

    #[test]
    fn contact_volume_examples() {
        // α = dz + x dy on R³ (x, y, z)
        let alpha = KForm::one_form(3, |p| vec![0.0, p[0], 1.0]);
        let frame: Vec<Vec<f64>> = (0..3).map(|i| basis_vector(3, i)).collect();
        let v = contact_volume(&alpha, &[0.0, 0.0, 0.0], &frame, FdConfig::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        let dz = KForm::one_form(3, |_| vec![0.0, 0.0, 1.0]);
        let v0 = contact_volume(&dz, &[0.2, 0.1, -0.3], &frame, FdConfig::default()).unwrap();
        assert!(v0.abs() < 1e-9);
        let flat = vec![basis_vector(3, 0), basis_vector(3, 0), basis_vector(3, 2)];
        assert!(matches!(
            contact_volume(&alpha, &[0.0; 3], &flat, FdConfig::default()),
            Err(FormsError::DegenerateFrame { .. })
        ));
    }

    #[test]
    fn plurisubharmonic_examples() {
        let frame = vec![basis_vector(2, 0), basis_vector(2, 1)];
        let quarter = ScalarField::new(2, |p| 0.25 * (p[0] * p[0] + p[1] * p[1]));
        let g = psh_metric_check(&quarter, &[0.3, -0.2], &frame, FdConfig::default()).unwrap();
        // ω_f = dx∧dy for f = |u|²/4, so g = ω_f(·, J·) is the Euclidean metric.
        assert!((g[(0, 0)] - 1.0).abs() < 1e-6 && (g[(1, 1)] - 1.0).abs() < 1e-6);
        assert!(g[(0, 1)].abs() < 1e-6 && g[(1, 0)].abs() < 1e-6);
        assert!(linalg::is_positive_definite(&g, 1e-8));

        let constant = ScalarField::new(2, |_| 3.0);
        let g0 = psh_metric_check(&constant, &[0.3, -0.2], &frame, FdConfig::default()).unwrap();
        assert!(g0.iter().all(|v| v.abs() < 1e-9));
        assert!(!linalg::is_positive_definite(&g0, 1e-8));

        let saddle = ScalarField::new(2, |p| p[0] * p[0] - p[1] * p[1]);
        let gs = psh_metric_check(&saddle, &[0.1, 0.4], &frame, FdConfig::default()).unwrap();
        // H − JHJ vanishes for the harmonic saddle: degenerate, hence not PD.
        assert!(!linalg::is_positive_definite(&gs, 1e-8));
    }

    #[test]
    fn psh_liouville_field_is_radial() {
        let quarter = ScalarField::new(4, |p| 0.25 * p.iter().map(|v| v * v).sum::<f64>());
        let pt = [0.4, -0.2, 1.0, 0.5];
        let x = psh_liouville_field(&quarter, &pt, FdConfig::default()).unwrap();
        for (xi, pi) in x.iter().zip(pt) {
            assert!((xi - 0.5 * pi).abs() < 1e-6);
        }
    }

    #[test]
    fn hamiltonian_conventions_differ_by_sign() {
        let omega = KForm::constant_two_form(standard_symplectic_matrix(2));
        let h = ScalarField::new(2, |p| p[0] * p[0] + 3.0 * p[1]);
        let pt = [0.5, 0.0];
        let plus = hamiltonian_field(&omega, &h, &pt, HamiltonianConvention::InteriorIsDifferential, FdConfig::default())
            .unwrap();
        let minus = hamiltonian_field(
            &omega,
            &h,
            &pt,
            HamiltonianConvention::InteriorIsMinusDifferential,
            FdConfig::default(),
        )
        .unwrap();
        // i_X(dx∧dy) = X^x dy − X^y dx = dH ⇒ X = (∂_y H, −∂_x H)
        assert!((plus[0] - 3.0).abs() < 1e-8 && (plus[1] + 1.0).abs() < 1e-8);
        assert!((minus[0] + plus[0]).abs() < 1e-12 && (minus[1] + plus[1]).abs() < 1e-12);
    }

    #[test]
    fn analytic_and_fd_jacobians_agree() {
        let map = SmoothMap::analytic(
            2,
            2,
            |x| vec![x[0].sin() * x[1], x[0] + x[1].powi(3)],
            |x| DMatrix::from_row_slice(2, 2, &[x[0].cos() * x[1], x[0].sin(), 1.0, 3.0 * x[1] * x[1]]),
        );
        let pt = [0.4, 0.9];
        let a = map.jacobian(&pt);
        let f = map.jacobian_fd(&pt, FdConfig::with_step(1e-4));
        assert!((a - f).abs().max() < 1e-7);
    }
}
