//! Monodromy of the open book around a Legendrian sphere before and after
//! surgery: Reeb transport between the pages `θ = ±ε`, the closed-form
//! surgered return map, the three-stage flow pipeline through `S₁`, and
//! recognition of the result as a right-handed Dehn twist.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::cotangent::{geodesic_flow, CotangentError, SpherePoint};
use crate::flows::{self, Event, FlowError, IntegratorConfig, Trajectory};
use crate::linalg::{dot, norm};
use crate::weinstein::{
    self, f_eval, limit_transfer_to_s1, theta_page, transfer_along_limit_orbit, transfer_to_s1_finite_a,
    transfer_to_s_minus1, xf_field, LiouvilleParameter, ModelPoint, SurgeryConfig, WeinsteinError,
};

/// Tolerance on page membership and decomposition invariants.
pub const PAGE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonodromyError {
    #[error("start is not on page {expected} (θ = {theta})")]
    NotOnPage { expected: f64, theta: f64 },
    #[error("z = 0 lies on the surgered sphere")]
    SurgeredLocus,
    #[error("r = 0 lies on the Legendrian; the twist angle is undefined there")]
    OnLegendrian,
    #[error("{stage}: event not found")]
    EventNotFound { stage: &'static str },
    #[error("decomposition invariant violated: {0}")]
    Decomposition(String),
    #[error("unknown chart label {0}")]
    UnknownChart(String),
    #[error("charts {0} and {1} share region {2}")]
    Overlap(String, String, String),
    #[error("duplicate chart label {0}")]
    DuplicateChart(String),
    #[error(transparent)]
    Weinstein(#[from] WeinsteinError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Cotangent(#[from] CotangentError),
}

pub type Result<T> = std::result::Result<T, MonodromyError>;

/// `z = side·w + r` with `|w| = 1`, `w·r = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PageDecomposition {
    pub w: Vec<f64>,
    pub r: Vec<f64>,
    pub side: f64,
}

impl PageDecomposition {
    /// Decomposes a point of `S₋₁`; `side` is its page value `z·w`.
    pub fn of(pt: &ModelPoint) -> Result<Self> {
        let wn = norm(&pt.w);
        if (wn - 1.0).abs() > PAGE_TOL {
            return Err(MonodromyError::Decomposition(format!("|w| = {wn}")));
        }
        let side = theta_page(pt);
        let r: Vec<f64> = pt.z.iter().zip(&pt.w).map(|(z, w)| z - side * w).collect();
        let d = Self {
            w: pt.w.clone(),
            r,
            side,
        };
        d.validate(&pt.z)?;
        Ok(d)
    }

    fn validate(&self, z: &[f64]) -> Result<()> {
        let ortho = dot(&self.w, &self.r).abs();
        if ortho > PAGE_TOL {
            return Err(MonodromyError::Decomposition(format!("w·r = {ortho:e}")));
        }
        let rebuilt = self.z_block();
        let err = crate::linalg::distance(&rebuilt, z);
        if err > PAGE_TOL {
            return Err(MonodromyError::Decomposition(format!("reconstruction error {err:e}")));
        }
        Ok(())
    }

    pub fn z_block(&self) -> Vec<f64> {
        self.w.iter().zip(&self.r).map(|(w, r)| self.side * w + r).collect()
    }

    pub fn to_point(&self) -> ModelPoint {
        ModelPoint {
            x: vec![],
            y: vec![],
            z: self.z_block(),
            w: self.w.clone(),
        }
    }

    pub fn r_norm(&self) -> f64 {
        norm(&self.r)
    }

    /// Distance between `(w, r)` pairs.
    pub fn distance(&self, other: &Self) -> f64 {
        let dw = crate::linalg::distance(&self.w, &other.w);
        let dr = crate::linalg::distance(&self.r, &other.r);
        (dw * dw + dr * dr).sqrt()
    }
}

fn require_page(pt: &ModelPoint, expected: f64) -> Result<()> {
    let theta = theta_page(pt);
    if (theta - expected).abs() > PAGE_TOL {
        return Err(MonodromyError::NotOnPage { expected, theta });
    }
    Ok(())
}

/// Reeb transport `w∂z` from page `−ε` for page-time `2ε`.
pub fn pre_surgery_monodromy(start: &ModelPoint, epsilon: f64, cfg: &IntegratorConfig) -> Result<ModelPoint> {
    require_page(start, -epsilon)?;
    PageDecomposition::of(start)?;
    let shape = start.shape();
    let out = flows::flow_fixed_time(&weinstein::reeb_field(shape), &start.to_ambient(), 2.0 * epsilon, cfg)?;
    Ok(ModelPoint::from_ambient(shape, out.coords())?)
}

/// `(z, w) ↦ (z, w + 2ε z/|z|²)` from page `−ε` to page `+ε`.
pub fn post_surgery_closed_form(start: &ModelPoint, epsilon: f64) -> Result<ModelPoint> {
    require_page(start, -epsilon)?;
    let z2 = dot(&start.z, &start.z);
    if z2 == 0.0 {
        return Err(MonodromyError::SurgeredLocus);
    }
    Ok(ModelPoint {
        x: start.x.clone(),
        y: start.y.clone(),
        z: start.z.clone(),
        w: start.w.iter().zip(&start.z).map(|(w, z)| w + 2.0 * epsilon * z / z2).collect(),
    })
}

/// Numerical errors recorded per pipeline stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageResiduals {
    /// `|F|` after the transfer to `S₁`.
    pub stage1_f: f64,
    /// Largest `|F|` along the `X_F` trajectory.
    pub stage2_f_drift: f64,
    /// `|θ − ε|` at the stage-2 event.
    pub stage2_theta: f64,
    /// `||w| − 1|` after the transfer back.
    pub stage3_constraint: f64,
    /// Largest deviation from `θ(s) = −ε + 2s` along stage 2.
    pub page_speed: f64,
}

#[derive(Clone, Debug)]
pub struct MonodromyResult {
    pub input: PageDecomposition,
    pub output: PageDecomposition,
    pub pipeline_point: ModelPoint,
    pub closed_form_point: ModelPoint,
    /// `g(|r|)` with `cos g = (ε² − r²)/(r² + ε²)`, `sin g = 2ε|r|/(r² + ε²)`.
    pub twist_angle: f64,
    /// Distance between pipeline and closed-form outputs.
    pub deviation: f64,
    /// Whether the start clears the rounded corner (`|z| < 1 − δ`).
    pub admissible: bool,
    pub residuals: StageResiduals,
    pub stage2: Trajectory,
}

/// Stage 1, transfer from `S₋₁` to `S₁`: the limit map for `a = ∞` when it
/// lands on `S₁`, the limiting orbit otherwise, or the `X_a` flow.
pub fn transfer_stage(start: &ModelPoint, config: &SurgeryConfig) -> Result<ModelPoint> {
    let profile = config.profile()?;
    Ok(match config.a {
        LiouvilleParameter::Infinite => {
            let p = limit_transfer_to_s1(start)?;
            if f_eval(&p, &profile).abs() < weinstein::S1_ROOT_TOL {
                p
            } else {
                transfer_along_limit_orbit(start, &profile)?.point
            }
        }
        LiouvilleParameter::Finite(a) => transfer_to_s1_finite_a(start, a, &profile)?.point,
    })
}

fn twist_angle(r: f64, epsilon: f64) -> f64 {
    let den = r * r + epsilon * epsilon;
    (2.0 * epsilon * r / den).atan2((epsilon * epsilon - r * r) / den)
}

/// Three-stage surgered monodromy: transfer to `S₁`, `X_F` flow until
/// `θ = +ε`, transfer back to `S₋₁`.
pub fn post_surgery_pipeline(start: &ModelPoint, config: &SurgeryConfig, cfg: &IntegratorConfig) -> Result<MonodromyResult> {
    config.validate()?;
    let eps = config.epsilon;
    require_page(start, -eps)?;
    if norm(&start.z) == 0.0 {
        return Err(MonodromyError::SurgeredLocus);
    }
    let input = PageDecomposition::of(start)?;
    let profile = config.profile()?;
    let shape = start.shape();

    let on_s1 = transfer_stage(start, config)?;
    let stage1_f = f_eval(&on_s1, &profile).abs();

    let ev = Event::new("theta", eps, move |v| {
        let p = ModelPoint::from_ambient(shape, v).unwrap_or_else(|_| ModelPoint::zeros(shape));
        theta_page(&p)
    });
    let traj = flows::flow_until_event(&xf_field(shape, profile), &on_s1.to_ambient(), &ev, cfg)?;
    let rec = traj.event().ok_or(MonodromyError::EventNotFound { stage: "stage 2" })?;
    let after = ModelPoint::from_ambient(shape, rec.point.coords())?;
    let mut stage2_f_drift: f64 = 0.0;
    let mut page_speed: f64 = 0.0;
    let theta0 = theta_page(&on_s1);
    for (t, p) in traj.times().iter().zip(traj.points()) {
        let mp = ModelPoint::from_ambient(shape, p.coords())?;
        stage2_f_drift = stage2_f_drift.max(f_eval(&mp, &profile).abs());
        page_speed = page_speed.max((theta_page(&mp) - (theta0 + 2.0 * t)).abs());
    }
    let stage2_theta = (theta_page(&after) - eps).abs();

    let back = transfer_to_s_minus1(&after, config.a)?;
    let stage3_constraint = (norm(&back.w) - 1.0).abs();
    let closed = post_surgery_closed_form(start, eps)?;
    let deviation = crate::linalg::distance(&back.to_ambient(), &closed.to_ambient());
    let output = PageDecomposition::of(&back)?;
    Ok(MonodromyResult {
        twist_angle: twist_angle(input.r_norm(), eps),
        input,
        output,
        pipeline_point: back,
        closed_form_point: closed,
        deviation,
        admissible: norm(&start.z) < 1.0 - config.delta,
        residuals: StageResiduals {
            stage1_f,
            stage2_f_drift,
            stage2_theta,
            stage3_constraint,
            page_speed,
        },
        stage2: traj,
    })
}

/// Result of [`recognize_dehn_twist`].
#[derive(Clone, Debug, PartialEq)]
pub struct TwistRecognition {
    pub cos_g: f64,
    pub sin_g: f64,
    pub g: f64,
    /// `g̃ = π − g`, the right-handed profile angle.
    pub g_tilde: f64,
    /// Block-matrix image against the closed-form `(w_ε, r_ε)`.
    pub residual: f64,
    /// Block-matrix image against the pipeline output.
    pub pipeline_residual: f64,
    /// Block-matrix image against the time-`g̃` normalized geodesic flow.
    pub geodesic_residual: f64,
    /// `|cos²g + sin²g − 1|`.
    pub unit_defect: f64,
}

/// `(w, r) ↦ (−cos g·w + (sin g/|r|) r, −sin g·|r|·w − cos g·r)`.
pub fn twist_matrix_apply(w: &[f64], r: &[f64], cos_g: f64, sin_g: f64) -> (Vec<f64>, Vec<f64>) {
    let rn = norm(r);
    let w_out = w.iter().zip(r).map(|(a, b)| -cos_g * a + sin_g / rn * b).collect();
    let r_out = w.iter().zip(r).map(|(a, b)| -sin_g * rn * a - cos_g * b).collect();
    (w_out, r_out)
}

fn pair_distance(a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> f64 {
    let dw = crate::linalg::distance(a.0, b.0);
    let dr = crate::linalg::distance(a.1, b.1);
    (dw * dw + dr * dr).sqrt()
}

pub fn recognize_dehn_twist(result: &MonodromyResult, epsilon: f64) -> Result<TwistRecognition> {
    let (w, r) = (&result.input.w, &result.input.r);
    let rn = norm(r);
    if rn == 0.0 {
        return Err(MonodromyError::OnLegendrian);
    }
    let den = rn * rn + epsilon * epsilon;
    let cos_g = (epsilon * epsilon - rn * rn) / den;
    let sin_g = 2.0 * epsilon * rn / den;
    let (w_out, r_out) = twist_matrix_apply(w, r, cos_g, sin_g);
    let closed = PageDecomposition::of(&result.closed_form_point)?;
    let residual = pair_distance((&w_out, &r_out), (&closed.w, &closed.r));
    let pipeline_residual = pair_distance((&w_out, &r_out), (&result.output.w, &result.output.r));
    let g = sin_g.atan2(cos_g);
    let g_tilde = PI - g;
    let sp = SpherePoint::new(w.clone(), r.clone())?;
    let flowed = geodesic_flow(&sp, g_tilde)?;
    let geodesic_residual = pair_distance((&w_out, &r_out), (flowed.q(), flowed.p()));
    Ok(TwistRecognition {
        cos_g,
        sin_g,
        g,
        g_tilde,
        residual,
        pipeline_residual,
        geodesic_residual,
        unit_defect: (cos_g * cos_g + sin_g * sin_g - 1.0).abs(),
    })
}

/// The surgered return map as a map of the page `T*S^k`, `(w, r) ↦ σ_{π−g(|r|)}(w, r)`,
/// or its inverse for `power = −1`.
pub fn page_twist(pt: &SpherePoint, epsilon: f64, power: i32) -> Result<SpherePoint> {
    let rn = pt.fiber_norm();
    if rn == 0.0 {
        return Err(MonodromyError::OnLegendrian);
    }
    let angle = PI - twist_angle(rn, epsilon);
    Ok(geodesic_flow(pt, power as f64 * angle)?)
}

/// A model twist chart; distinct charts must occupy distinct regions.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistChart {
    pub epsilon: f64,
    pub region: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChartAtlas {
    charts: BTreeMap<String, TwistChart>,
}

impl ChartAtlas {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, chart: TwistChart) -> Result<()> {
        let label = label.into();
        if self.charts.contains_key(&label) {
            return Err(MonodromyError::DuplicateChart(label));
        }
        if let Some((other, _)) = self.charts.iter().find(|(_, c)| c.region == chart.region) {
            return Err(MonodromyError::Overlap(other.clone(), label, chart.region));
        }
        self.charts.insert(label, chart);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&TwistChart> {
        self.charts.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.charts.keys()
    }
}

/// Applies the letters of `word` (left to right) to a state holding one page
/// point per chart.
pub fn composed_monodromy_word(
    start: &BTreeMap<String, SpherePoint>,
    word: &[(String, i32)],
    atlas: &ChartAtlas,
) -> Result<BTreeMap<String, SpherePoint>> {
    let mut state = start.clone();
    for (label, power) in word {
        let chart = atlas.get(label).ok_or_else(|| MonodromyError::UnknownChart(label.clone()))?;
        let pt = state.get(label).ok_or_else(|| MonodromyError::UnknownChart(label.clone()))?;
        let next = page_twist(pt, chart.epsilon, *power)?;
        state.insert(label.clone(), next);
    }
    Ok(state)
}

/// A random point of page `−ε` with `|z| < 1 − δ` and `|r| ≥ r_min`.
pub fn admissible_start<R: Rng>(rng: &mut R, zw_len: usize, epsilon: f64, delta: f64) -> ModelPoint {
    let w = random_unit(rng, zw_len);
    let r_max = ((1.0 - delta).powi(2) - epsilon * epsilon).sqrt() * 0.999;
    let r_len = rng.gen_range(0.05_f64.min(0.5 * r_max)..r_max);
    start_from(rng, w, r_len, epsilon)
}

/// A random point of page `−ε` in the rounded window
/// `|z|² = 1 − δ + u·δ/2`, `u ∈ (0, 1]`.
pub fn rounded_window_start<R: Rng>(rng: &mut R, zw_len: usize, epsilon: f64, delta: f64) -> ModelPoint {
    let w = random_unit(rng, zw_len);
    let u: f64 = 1.0 - rng.gen::<f64>();
    let z2 = 1.0 - delta + u * 0.5 * delta;
    start_from(rng, w, (z2 - epsilon * epsilon).sqrt(), epsilon)
}

fn random_unit<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 0.1 && n <= 1.0 {
            return v.iter().map(|a| a / n).collect();
        }
    }
}

fn start_from<R: Rng>(rng: &mut R, w: Vec<f64>, r_len: f64, epsilon: f64) -> ModelPoint {
    let dir = loop {
        let v = random_unit(rng, w.len());
        let c = dot(&v, &w);
        let perp: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a - c * b).collect();
        let n = norm(&perp);
        if n > 0.1 {
            break perp.iter().map(|a| a / n).collect::<Vec<f64>>();
        }
    };
    let z = w.iter().zip(&dir).map(|(a, d)| -epsilon * a + r_len * d).collect();
    ModelPoint {
        x: vec![],
        y: vec![],
        z,
        w,
    }
}

/// Least-squares fit `deviation ≈ C·δ^p` in log–log coordinates; returns `(C, p)`.
pub fn fit_power_law(deltas: &[f64], deviations: &[f64]) -> (f64, f64) {
    let n = deltas.len() as f64;
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = deviations.iter().map(|d| d.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let p = sxy / sxx;
    ((my - p * mx).exp(), p)
}
