//! Fixed-step RK4 integration of model vector fields with event detection
//! and post-step constraint projection.

use std::io::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::forms::{AmbientPoint, FdConfig, ScalarField, VectorField};
use crate::linalg::{dot, norm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid integrator config: {0}")]
    Config(String),
    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),
    #[error("projection failed: {0}")]
    Projection(String),
    #[error("dimension mismatch: field {field}, state {state}")]
    Dimension { field: usize, state: usize },
    #[error("csv export failed: {0}")]
    Io(String),
}

/// Constraint re-imposed after every step.
#[derive(Clone)]
pub enum Constraint {
    /// Renormalizes the listed coordinates to a unit vector (e.g. `|w|² = 1`).
    UnitBlock { indices: Vec<usize> },
    /// Newton projection onto `{F = 0}` along `∇F`.
    LevelSet(ScalarField),
}

impl std::fmt::Debug for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::UnitBlock { indices } => f.debug_struct("UnitBlock").field("indices", indices).finish(),
            Constraint::LevelSet(_) => f.write_str("LevelSet"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub step: f64,
    pub max_time: f64,
    pub event_tol: f64,
    pub projection: Option<Constraint>,
    /// Largest displacement a single post-step projection may apply.
    pub projection_limit: f64,
    pub max_bisections: u32,
}

impl IntegratorConfig {
    pub fn new(step: f64, max_time: f64, event_tol: f64) -> Result<Self, FlowError> {
        let cfg = Self {
            step,
            max_time,
            event_tol,
            projection: None,
            projection_limit: 10.0 * event_tol,
            max_bisections: 20,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_projection(mut self, constraint: Constraint) -> Self {
        self.projection = Some(constraint);
        self
    }

    pub fn with_projection_limit(mut self, limit: f64) -> Self {
        self.projection_limit = limit;
        self
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(FlowError::Config(format!("step {} must be positive", self.step)));
        }
        if !(self.step < self.max_time) {
            return Err(FlowError::Config(format!(
                "step {} must be smaller than max_time {}",
                self.step, self.max_time
            )));
        }
        if !(self.event_tol > 0.0) {
            return Err(FlowError::Config(format!("event_tol {} must be positive", self.event_tol)));
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            max_time: 10.0,
            event_tol: 1e-12,
            projection: None,
            projection_limit: 1e-11,
            max_bisections: 20,
        }
    }
}

/// Stopping condition `function(x) = target`.
#[derive(Clone)]
pub struct Event {
    pub kind: String,
    pub function: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub target: f64,
}

impl Event {
    pub fn new(kind: impl Into<String>, target: f64, function: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kind: kind.into(),
            function: Arc::new(function),
            target,
        }
    }

    fn offset(&self, x: &[f64]) -> f64 {
        (self.function)(x) - self.target
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    pub kind: String,
    pub time: f64,
    pub point: AmbientPoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    points: Vec<AmbientPoint>,
    event: Option<EventRecord>,
}

impl Trajectory {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            times: Vec::new(),
            points: Vec::new(),
            event: None,
        }
    }

    fn push(&mut self, t: f64, x: Vec<f64>) -> Result<(), FlowError> {
        let pt = AmbientPoint::new(x).map_err(|_| FlowError::NonFinite(t))?;
        self.times.push(t);
        self.points.push(pt);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[AmbientPoint] {
        &self.points
    }

    pub fn event(&self) -> Option<&EventRecord> {
        self.event.as_ref()
    }

    pub fn last(&self) -> Option<&AmbientPoint> {
        self.points.last()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV rows `time, c0, c1, …` with a header row. Columns are named by
    /// `labels` when given, otherwise `c0, c1, …`.
    pub fn write_csv<W: Write>(&self, out: W, labels: Option<&[String]>) -> Result<(), FlowError> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        match labels {
            Some(l) => header.extend(l.iter().cloned()),
            None => header.extend((0..self.dim).map(|i| format!("c{i}"))),
        }
        wtr.write_record(&header).map_err(|e| FlowError::Io(e.to_string()))?;
        for (t, p) in self.times.iter().zip(&self.points) {
            let mut row = vec![format!("{t:.12e}")];
            row.extend(p.iter().map(|v| format!("{v:.12e}")));
            wtr.write_record(&row).map_err(|e| FlowError::Io(e.to_string()))?;
        }
        wtr.flush().map_err(|e| FlowError::Io(e.to_string()))
    }
}

/// One classical RK4 step of size `h`.
pub fn rk4_step(field: &VectorField, x: &[f64], h: f64) -> Vec<f64> {
    let k1 = field.eval(x);
    let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
    let k2 = field.eval(&x2);
    let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
    let k3 = field.eval(&x3);
    let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
    let k4 = field.eval(&x4);
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Result of [`project_constraint`].
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub iterations: u32,
    pub displacement: f64,
}

/// Projects onto the constraint. Fails when the constraint cannot be met within
/// `tol` or the required displacement exceeds `max_displacement`.
pub fn project_constraint(
    pt: &[f64],
    constraint: &Constraint,
    tol: f64,
    max_displacement: f64,
) -> Result<Projection, FlowError> {
    let (point, iterations) = match constraint {
        Constraint::UnitBlock { indices } => {
            let block: Vec<f64> = indices.iter().map(|&i| pt[i]).collect();
            let len = norm(&block);
            if len == 0.0 {
                return Err(FlowError::Projection("cannot renormalize a zero block".into()));
            }
            let mut out = pt.to_vec();
            for &i in indices {
                out[i] /= len;
            }
            (out, 1)
        }
        Constraint::LevelSet(f) => {
            let mut x = pt.to_vec();
            let mut iterations = 0;
            loop {
                let value = f.value(&x);
                if value.abs() <= tol {
                    break;
                }
                if iterations >= 20 {
                    return Err(FlowError::Projection(format!(
                        "Newton projection did not converge (|F| = {:e})",
                        value.abs()
                    )));
                }
                let grad = f.gradient(&x, FdConfig::default());
                let g2 = dot(&grad, &grad);
                if g2 == 0.0 {
                    return Err(FlowError::Projection("vanishing gradient".into()));
                }
                for (xi, gi) in x.iter_mut().zip(&grad) {
                    *xi -= value * gi / g2;
                }
                iterations += 1;
            }
            (x, iterations)
        }
    };
    let displacement = crate::linalg::distance(pt, &point);
    if displacement > max_displacement {
        return Err(FlowError::Projection(format!(
            "displacement {displacement:e} exceeds limit {max_displacement:e}"
        )));
    }
    Ok(Projection {
        point,
        iterations,
        displacement,
    })
}

fn step_with_projection(field: &VectorField, x: &[f64], h: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>, FlowError> {
    let next = rk4_step(field, x, h);
    match &cfg.projection {
        Some(c) => Ok(project_constraint(&next, c, cfg.event_tol, cfg.projection_limit)?.point),
        None => Ok(next),
    }
}

fn check_dims(field: &VectorField, x: &[f64]) -> Result<(), FlowError> {
    if field.dim() != x.len() {
        return Err(FlowError::Dimension {
            field: field.dim(),
            state: x.len(),
        });
    }
    Ok(())
}

/// Time-`t` flow by fixed-step RK4 (`t` may be negative), with per-step projection.
pub fn flow_fixed_time(field: &VectorField, start: &[f64], t: f64, cfg: &IntegratorConfig) -> Result<AmbientPoint, FlowError> {
    cfg.validate()?;
    check_dims(field, start)?;
    let mut x = start.to_vec();
    if t != 0.0 {
        let steps = (t.abs() / cfg.step).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        for i in 0..steps {
            x = step_with_projection(field, &x, h, cfg)?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(FlowError::NonFinite((i + 1) as f64 * h));
            }
        }
    }
    AmbientPoint::new(x).map_err(|_| FlowError::NonFinite(t))
}

/// Integrates forward until `event.function` crosses `event.target`; the
/// crossing is refined by bisection inside the last step followed by one
/// secant step on the final bracket. Returns a trajectory without an event
/// record when no crossing occurs before `max_time`.
pub fn flow_until_event(field: &VectorField, start: &[f64], event: &Event, cfg: &IntegratorConfig) -> Result<Trajectory, FlowError> {
    cfg.validate()?;
    check_dims(field, start)?;
    let mut traj = Trajectory::empty(start.len());
    traj.push(0.0, start.to_vec())?;
    let mut g_prev = event.offset(start);
    if g_prev.abs() <= cfg.event_tol {
        traj.event = Some(EventRecord {
            kind: event.kind.clone(),
            time: 0.0,
            point: traj.points[0].clone(),
        });
        return Ok(traj);
    }
    let mut x = start.to_vec();
    let mut t = 0.0;
    while t < cfg.max_time {
        let h = cfg.step.min(cfg.max_time - t);
        let next = step_with_projection(field, &x, h, cfg)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite(t + h));
        }
        let g_next = event.offset(&next);
        if g_next == 0.0 || g_next.signum() != g_prev.signum() {
            let (tau, point) = refine_crossing(field, &x, g_prev, h, event, cfg)?;
            let time = t + tau;
            traj.push(time, point.clone())?;
            traj.event = Some(EventRecord {
                kind: event.kind.clone(),
                time,
                point: AmbientPoint::new(point).map_err(|_| FlowError::NonFinite(time))?,
            });
            return Ok(traj);
        }
        t += h;
        traj.push(t, next.clone())?;
        x = next;
        g_prev = g_next;
    }
    Ok(traj)
}

fn refine_crossing(
    field: &VectorField,
    x: &[f64],
    g_left: f64,
    h: f64,
    event: &Event,
    cfg: &IntegratorConfig,
) -> Result<(f64, Vec<f64>), FlowError> {
    let (mut lo, mut hi) = (0.0, h);
    let (mut g_lo, mut g_hi) = (g_left, event.offset(&step_with_projection(field, x, h, cfg)?));
    for _ in 0..cfg.max_bisections {
        let mid = 0.5 * (lo + hi);
        let p = step_with_projection(field, x, mid, cfg)?;
        let g = event.offset(&p);
        if g.abs() <= cfg.event_tol {
            return Ok((mid, p));
        }
        if g.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
            g_hi = g;
        }
    }
    let tau = if g_hi != g_lo {
        lo - g_lo * (hi - lo) / (g_hi - g_lo)
    } else {
        0.5 * (lo + hi)
    };
    let tau = tau.clamp(lo, hi).max(f64::MIN_POSITIVE);
    Ok((tau, step_with_projection(field, x, tau, cfg)?))
}
