use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{trajectory_table, CheckRecord, Comparison, PlotTable, ScenarioConfig};
use crate::cotangent::{self, DehnTwistProfile, SpherePoint};
use crate::flows::IntegratorConfig;
use crate::forms::{self, FdConfig, HamiltonianConvention, KForm};
use crate::linalg::{basis_vector, distance, dot, norm};
use crate::monodromy::{self, ChartAtlas, PageDecomposition, TwistChart};
use crate::moves::{self, Equivalence, Letter, OpenBookDesc, Power};
use crate::openbook::{self, BindingProfile, Cutoff, ExactSymplecticDomain, GirouxConfig};
use crate::weinstein::{self, LiouvilleParameter, ModelPoint, ModelShape, NeighborhoodPoint, SurgeryConfig};

pub const SUITES: &[&str] = &["dehn-twist", "weinstein-strictness", "monodromy", "giroux", "binding", "moves", "all"];

type Data = BTreeMap<String, Vec<f64>>;

struct Outcome {
    samples: usize,
    value: f64,
    data: Data,
}

impl Outcome {
    fn new(samples: usize, value: f64) -> Self {
        Self {
            samples,
            value,
            data: Data::new(),
        }
    }

    fn with(mut self, key: &str, v: Vec<f64>) -> Self {
        self.data.insert(key.into(), v);
        self
    }
}

struct Spec<'a> {
    name: &'a str,
    anchor: &'a str,
    statistic: &'a str,
    comparison: Comparison,
    threshold: f64,
}

fn run_check(spec: Spec<'_>, body: impl FnOnce() -> Result<Outcome, String>) -> CheckRecord {
    let (outcome, diagnostics) = match body() {
        Ok(o) => (o, None),
        Err(e) => (Outcome::new(0, f64::NAN), Some(e)),
    };
    let passed = diagnostics.is_none() && spec.comparison.holds(outcome.value, spec.threshold);
    CheckRecord {
        name: spec.name.into(),
        anchor: spec.anchor.into(),
        samples: outcome.samples,
        statistic: spec.statistic.into(),
        value: outcome.value,
        comparison: spec.comparison,
        threshold: spec.threshold,
        passed,
        data: outcome.data,
        diagnostics,
    }
}

/// Per-check generator, so a check draws the same samples whichever suite
/// runs it.
fn rng_for(seed: u64, name: &str) -> ChaCha8Rng {
    let h = name
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub(super) fn run(config: &ScenarioConfig) -> (Vec<CheckRecord>, Vec<PlotTable>) {
    let mut checks = Vec::new();
    let mut plots = Vec::new();
    let all = config.suite == "all";
    let want = |s: &str| all || config.suite == s;
    if want("dehn-twist") {
        checks.extend(dehn_twist(config));
    }
    if want("weinstein-strictness") {
        checks.extend(weinstein_suite(config));
    }
    if want("monodromy") {
        let (c, p) = monodromy_suite(config);
        checks.extend(c);
        plots.extend(p);
    }
    if want("giroux") {
        checks.extend(giroux_suite(config));
    }
    if want("binding") {
        checks.extend(binding_suite(config));
    }
    if want("moves") {
        checks.extend(moves_suite(config));
    }
    (checks, plots)
}

fn random_unit<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-2 && n <= 1.0 {
            return v.iter().map(|a| a / n).collect();
        }
    }
}

/// A point of `T*S^n` with `|p| = r`.
fn random_sphere_point<R: Rng>(rng: &mut R, n: usize, r: f64) -> SpherePoint {
    let q = random_unit(rng, n + 1);
    let p = loop {
        let v = random_unit(rng, n + 1);
        let c = dot(&v, &q);
        let perp: Vec<f64> = v.iter().zip(&q).map(|(a, b)| a - c * b).collect();
        let pn = norm(&perp);
        if pn > 1e-2 {
            break perp.iter().map(|a| r * a / pn).collect();
        }
    };
    SpherePoint::new(q, p).expect("constructed on the bundle")
}

fn dehn_twist(cfg: &ScenarioConfig) -> Vec<CheckRecord> {
    let n_samples = cfg.samples.dehn_twist;
    let profile = DehnTwistProfile::new(cfg.p0, cfg.k_fold);
    let mut out = Vec::new();

    let name = "dehn_twist.symplectic";
    out.push(run_check(
        Spec {
            name,
            anchor: "tau^* d lambda_can = d lambda_can",
            statistic: "max pullback residual",
            comparison: Comparison::Below,
            threshold: cfg.tolerances.symplectic,
        },
        || {
            let profile = profile.clone().map_err(err)?;
            let mut rng = rng_for(cfg.seed, name);
            let mut worst: f64 = 0.0;
            let mut per_dim = vec![];
            for &n in &cfg.sphere_dims {
                let map = cotangent::dehn_twist_map(n, profile, FdConfig::default());
                let omega = cotangent::canonical_symplectic_form(n);
                let mut dim_worst: f64 = 0.0;
                for _ in 0..n_samples {
                    let r = rng.gen_range(0.01..1.5 * cfg.p0);
                    let pt = random_sphere_point(&mut rng, n, r);
                    let x = pt.to_ambient();
                    let basis = pt.tangent_basis();
                    for i in 0..basis.len() {
                        for j in i + 1..basis.len() {
                            let pulled = forms::pullback_eval(&map, &omega, &x, &[&basis[i], &basis[j]]).map_err(err)?;
                            dim_worst = dim_worst.max((pulled - omega.eval(&x, &[&basis[i], &basis[j]])).abs());
                        }
                    }
                }
                per_dim.push(dim_worst);
                worst = worst.max(dim_worst);
            }
            Ok(Outcome::new(n_samples * cfg.sphere_dims.len(), worst).with("max_residual_per_dim", per_dim))
        },
    ));

    let name = "dehn_twist.identity_outside";
    out.push(run_check(
        Spec {
            name,
            anchor: "tau = id for |p| >= p0",
            statistic: "max displacement",
            comparison: Comparison::AtMost,
            threshold: 0.0,
        },
        || {
            let profile = profile.clone().map_err(err)?;
            let mut rng = rng_for(cfg.seed, name);
            let mut worst: f64 = 0.0;
            for &n in &cfg.sphere_dims {
                for _ in 0..n_samples {
                    let r = rng.gen_range(cfg.p0..3.0 * cfg.p0);
                    let pt = random_sphere_point(&mut rng, n, r);
                    let img = cotangent::dehn_twist(&pt, &profile);
                    worst = worst.max(distance(&img.to_ambient(), &pt.to_ambient()));
                }
            }
            Ok(Outcome::new(n_samples * cfg.sphere_dims.len(), worst))
        },
    ));

    let name = "dehn_twist.zero_section";
    out.push(run_check(
        Spec {
            name,
            anchor: "tau(q, 0) = (-1)^k q",
            statistic: "max deviation",
            comparison: Comparison::AtMost,
            threshold: 0.0,
        },
        || {
            let profile = profile.clone().map_err(err)?;
            let mut rng = rng_for(cfg.seed, name);
            let sign = if cfg.k_fold % 2 == 1 { -1.0 } else { 1.0 };
            let mut worst: f64 = 0.0;
            for &n in &cfg.sphere_dims {
                for _ in 0..n_samples {
                    let q = random_unit(&mut rng, n + 1);
                    let pt = SpherePoint::new(q.clone(), vec![0.0; n + 1]).map_err(err)?;
                    let img = cotangent::dehn_twist(&pt, &profile);
                    let expected: Vec<f64> = q.iter().map(|v| sign * v).collect();
                    worst = worst.max(distance(img.q(), &expected)).max(norm(img.p()));
                }
            }
            Ok(Outcome::new(n_samples * cfg.sphere_dims.len(), worst))
        },
    ));
    out
}

fn random_neighborhood_point<R: Rng>(rng: &mut R, shape: ModelShape) -> NeighborhoodPoint {
    let r = rng.gen_range(0.0..1.0);
    let qp = random_sphere_point(rng, shape.k(), r);
    let m = shape.m();
    let x = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    NeighborhoodPoint::new(rng.gen_range(-1.0..1.0), qp, x, y).expect("finite sample")
}

fn shapes(cfg: &ScenarioConfig) -> Result<Vec<ModelShape>, String> {
    cfg.shapes.iter().map(|[n, k]| ModelShape::new(*n, *k).map_err(err)).collect()
}

fn weinstein_suite(cfg: &ScenarioConfig) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let s = &cfg.samples;

    let name = "weinstein.psi_w_strict";
    out.push(run_check(
        Spec {
            name,
            anchor: "psi_W^* alpha = dz + p dq + (x dy - y dx)/2",
            statistic: "max pullback residual",
            comparison: Comparison::Below,
            threshold: cfg.tolerances.strictness,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut worst: f64 = 0.0;
            let shapes = shapes(cfg)?;
            for &shape in &shapes {
                let map = weinstein::psi_w_map(shape);
                let alpha = weinstein::alpha_form(shape);
                let target = weinstein::neighborhood_contact_form(shape);
                for _ in 0..s.strictness {
                    let pt = random_neighborhood_point(&mut rng, shape);
                    let c = pt.to_coords();
                    for v in pt.tangent_basis() {
                        let pulled = forms::pullback_eval(&map, &alpha, &c, &[&v]).map_err(err)?;
                        worst = worst.max((pulled - target.eval(&c, &[&v])).abs());
                    }
                }
            }
            Ok(Outcome::new(s.strictness * shapes.len(), worst))
        },
    ));

    let name = "weinstein.liouville";
    out.push(run_check(
        Spec {
            name,
            anchor: "L_X omega0 = omega0 (X and X_a)",
            statistic: "max residual",
            comparison: Comparison::Below,
            threshold: cfg.tolerances.liouville,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut worst: f64 = 0.0;
            let shapes = shapes(cfg)?;
            for &shape in &shapes {
                let dim = shape.ambient_dim();
                let omega = weinstein::omega0(shape);
                let frame: Vec<Vec<f64>> = (0..dim).map(|i| basis_vector(dim, i)).collect();
                let fields = [weinstein::liouville_field(shape), weinstein::liouville_field_a(shape, 3.0)];
                for _ in 0..s.liouville {
                    let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
                    for f in &fields {
                        let r = forms::liouville_check(f, &omega, &x, &frame, FdConfig::default()).map_err(err)?;
                        worst = worst.max(r);
                    }
                }
            }
            Ok(Outcome::new(s.liouville * shapes.len(), worst))
        },
    ));

    let name = "weinstein.transversality";
    out.push(run_check(
        Spec {
            name,
            anchor: "X(F) > 0 on S_1",
            statistic: "min X(F)",
            comparison: Comparison::Above,
            threshold: 0.0,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut worst = f64::INFINITY;
            let mut per_delta = vec![];
            let shapes = shapes(cfg)?;
            for &delta in &cfg.transversality_deltas {
                let profile = weinstein::HandleProfile::new(delta).map_err(err)?;
                let mut dmin = f64::INFINITY;
                for &shape in &shapes {
                    for _ in 0..s.transversality {
                        let p = weinstein::sample_s1(shape, &profile, &mut rng);
                        dmin = dmin.min(weinstein::lie_derivative_f(&p, &profile));
                        weinstein::transversality_check(&p, &profile).map_err(err)?;
                    }
                }
                per_delta.push(dmin);
                worst = worst.min(dmin);
            }
            Ok(Outcome::new(s.transversality * shapes.len() * cfg.transversality_deltas.len(), worst)
                .with("deltas", cfg.transversality_deltas.clone())
                .with("min_per_delta", per_delta))
        },
    ));

    let name = "weinstein.hamiltonian_xf";
    out.push(run_check(
        Spec {
            name,
            anchor: "i_{X_F} omega0 = -dF",
            statistic: "max field difference",
            comparison: Comparison::Below,
            threshold: 1e-9,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let profile = weinstein::HandleProfile::new(cfg.delta).map_err(err)?;
            let mut worst: f64 = 0.0;
            let shapes = shapes(cfg)?;
            for &shape in &shapes {
                let omega = weinstein::omega0(shape);
                let f = weinstein::f_field(shape, profile);
                for _ in 0..s.liouville {
                    let p = weinstein::sample_s1(shape, &profile, &mut rng);
                    let x = p.to_ambient();
                    let solved = forms::hamiltonian_field(&omega, &f, &x, HamiltonianConvention::InteriorIsMinusDifferential, FdConfig::default())
                        .map_err(err)?;
                    worst = worst.max(distance(&solved, &weinstein::hamiltonian_field_xf(&p, &profile).to_ambient()));
                }
            }
            Ok(Outcome::new(s.liouville * shapes.len(), worst))
        },
    ));
    out
}

fn integrator() -> IntegratorConfig {
    IntegratorConfig::new(1e-3, 10.0, 1e-13).expect("valid integrator")
}

fn worked_point() -> ModelPoint {
    ModelPoint::zw(vec![-0.1, 0.5], vec![1.0, 0.0]).expect("worked point")
}

fn surgery(cfg: &ScenarioConfig, delta: f64, a: LiouvilleParameter) -> SurgeryConfig {
    SurgeryConfig {
        epsilon: cfg.epsilon,
        a,
        c: cfg.c,
        delta,
        ..SurgeryConfig::default()
    }
}

fn monodromy_suite(cfg: &ScenarioConfig) -> (Vec<CheckRecord>, Vec<PlotTable>) {
    let mut out = Vec::new();
    let mut plots = Vec::new();
    let eps = cfg.epsilon;
    let tol = &cfg.tolerances;
    let n = cfg.samples.monodromy;

    let worked_eps = 0.1;
    let name = "monodromy.worked_point";
    out.push(run_check(
        Spec {
            name,
            anchor: "w_eps = w_-eps + 2 eps z/|z|^2",
            statistic: "distance from (0.923077, 0.384615)",
            comparison: Comparison::Below,
            threshold: 1e-6,
        },
        || {
            let p = monodromy::post_surgery_closed_form(&worked_point(), worked_eps).map_err(err)?;
            let d = distance(&p.w, &[0.923077, 0.384615]);
            Ok(Outcome::new(1, d).with("w_eps", p.w.clone()).with("z_eps", p.z.clone()))
        },
    ));

    let name = "monodromy.worked_pipeline";
    let mut stage2 = None;
    out.push(run_check(
        Spec {
            name,
            anchor: "three-stage flow = closed form",
            statistic: "distance",
            comparison: Comparison::Below,
            threshold: tol.monodromy,
        },
        || {
            let sc = surgery(cfg, cfg.delta, LiouvilleParameter::Infinite);
            let sc = SurgeryConfig { epsilon: worked_eps, ..sc };
            let res = monodromy::post_surgery_pipeline(&worked_point(), &sc, &integrator()).map_err(err)?;
            let rec = monodromy::recognize_dehn_twist(&res, worked_eps).map_err(err)?;
            let profile = sc.profile().map_err(err)?;
            stage2 = Some(trajectory_table("stage2_worked", &res.stage2, worked_point().shape(), &profile));
            Ok(Outcome::new(1, res.deviation)
                .with("w_eps", res.pipeline_point.w.clone())
                .with("cos_sin_g", vec![rec.cos_g, rec.sin_g])
                .with("g_gtilde", vec![rec.g, rec.g_tilde]))
        },
    ));
    plots.extend(stage2);

    // One batch of admissible starts per sphere dimension feeds four checks.
    struct Batch {
        deviation: Vec<f64>,
        twist: Vec<f64>,
        unit: Vec<f64>,
        page_speed: Vec<f64>,
    }
    let batch: Result<Batch, String> = (|| {
        let mut rng = rng_for(cfg.seed, "monodromy.admissible");
        let sc = surgery(cfg, cfg.delta, LiouvilleParameter::Infinite);
        let mut b = Batch {
            deviation: vec![],
            twist: vec![],
            unit: vec![],
            page_speed: vec![],
        };
        for &l in &cfg.zw_dims {
            let (mut dev, mut tw, mut unit, mut ps) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
            for _ in 0..n {
                let start = monodromy::admissible_start(&mut rng, l, eps, cfg.delta);
                let res = monodromy::post_surgery_pipeline(&start, &sc, &integrator()).map_err(err)?;
                let rec = monodromy::recognize_dehn_twist(&res, eps).map_err(err)?;
                dev = dev.max(res.deviation);
                tw = tw.max(rec.residual).max(rec.geodesic_residual);
                unit = unit.max((norm(&res.closed_form_point.w) - 1.0).abs()).max(rec.unit_defect);
                ps = ps.max(res.residuals.page_speed);
            }
            b.deviation.push(dev);
            b.twist.push(tw);
            b.unit.push(unit);
            b.page_speed.push(ps);
        }
        Ok(b)
    })();
    let dims: Vec<f64> = cfg.zw_dims.iter().map(|l| *l as f64).collect();
    let batch_check = |name: &str, anchor: &str, stat: &str, threshold: f64, pick: fn(&Batch) -> &Vec<f64>| {
        run_check(
            Spec {
                name,
                anchor,
                statistic: stat,
                comparison: Comparison::Below,
                threshold,
            },
            || {
                let b = batch.as_ref().map_err(|e| e.clone())?;
                let v = pick(b);
                Ok(Outcome::new(n * cfg.zw_dims.len(), v.iter().cloned().fold(0.0, f64::max))
                    .with("zw_dims", dims.clone())
                    .with("per_dim", v.clone()))
            },
        )
    };
    out.push(batch_check(
        "monodromy.pipeline_vs_closed_form",
        "three-stage flow = w_-eps + 2 eps z/|z|^2",
        "max distance",
        tol.monodromy,
        |b| &b.deviation,
    ));
    out.push(batch_check(
        "monodromy.twist_matrix",
        "(w, r) -> (-cos g w + sin g r/|r|, -sin g |r| w - cos g r)",
        "max residual",
        tol.twist_matrix,
        |b| &b.twist,
    ));
    out.push(batch_check("monodromy.closed_form_unit", "|w_eps| = 1", "max ||w_eps| - 1|", 1e-12, |b| &b.unit));
    out.push(batch_check("monodromy.page_speed", "d theta/ds = 2 on the flat piece", "max deviation", 1e-8, |b| &b.page_speed));

    let name = "monodromy.pre_surgery";
    out.push(run_check(
        Spec {
            name,
            anchor: "Reeb transport over 2 eps fixes (w, r)",
            statistic: "max decomposition drift",
            comparison: Comparison::Below,
            threshold: tol.pre_surgery,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut worst: f64 = 0.0;
            for &l in &cfg.zw_dims {
                for _ in 0..n {
                    let start = monodromy::admissible_start(&mut rng, l, eps, cfg.delta);
                    let end = monodromy::pre_surgery_monodromy(&start, eps, &integrator()).map_err(err)?;
                    let a = PageDecomposition::of(&start).map_err(err)?;
                    let b = PageDecomposition::of(&end).map_err(err)?;
                    worst = worst.max(a.distance(&b)).max((b.side - eps).abs());
                }
            }
            Ok(Outcome::new(n * cfg.zw_dims.len(), worst))
        },
    ));

    let name = "monodromy.rounded_window";
    let mut window = PlotTable::new("rounded_window", &["zw_dim", "delta", "max_deviation"]);
    out.push(run_check(
        Spec {
            name,
            anchor: "deviation <= C delta in the rounded window",
            statistic: "max |fitted exponent - 1|",
            comparison: Comparison::AtMost,
            threshold: tol.exponent,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut worst: f64 = 0.0;
            let (mut cs, mut ps) = (vec![], vec![]);
            for &l in &cfg.zw_dims {
                let mut devs = vec![];
                for &delta in &cfg.window_deltas {
                    let sc = surgery(cfg, delta, LiouvilleParameter::Infinite);
                    let mut dmax: f64 = 0.0;
                    for _ in 0..cfg.samples.rounded_window {
                        let start = monodromy::rounded_window_start(&mut rng, l, eps, delta);
                        let res = monodromy::post_surgery_pipeline(&start, &sc, &integrator()).map_err(err)?;
                        dmax = dmax.max(res.deviation);
                    }
                    window.rows.push(vec![l as f64, delta, dmax]);
                    devs.push(dmax);
                }
                let (c, p) = monodromy::fit_power_law(&cfg.window_deltas, &devs);
                cs.push(c);
                ps.push(p);
                worst = worst.max((p - 1.0).abs());
            }
            Ok(Outcome::new(cfg.samples.rounded_window * cfg.window_deltas.len() * cfg.zw_dims.len(), worst)
                .with("zw_dims", dims.clone())
                .with("fitted_c", cs)
                .with("fitted_exponent", ps))
        },
    ));
    plots.push(window);

    let name = "monodromy.a_convergence";
    let mut conv = PlotTable::new("a_convergence", &["a", "deviation"]);
    out.push(run_check(
        Spec {
            name,
            anchor: "X_a transfer -> limit transfer as a -> infinity",
            statistic: "max successive error ratio",
            comparison: Comparison::Below,
            threshold: 1.0,
        },
        || {
            let mut errs = vec![];
            for &a in &cfg.a_list {
                let sc = surgery(cfg, cfg.delta, LiouvilleParameter::Finite(a));
                let sc = SurgeryConfig { epsilon: worked_eps, ..sc };
                let res = monodromy::post_surgery_pipeline(&worked_point(), &sc, &integrator()).map_err(err)?;
                conv.rows.push(vec![a, res.deviation]);
                errs.push(res.deviation);
            }
            let ratio = errs.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
            let scaled: Vec<f64> = errs.iter().zip(&cfg.a_list).map(|(e, a)| e * a).collect();
            Ok(Outcome::new(errs.len(), ratio)
                .with("a", cfg.a_list.clone())
                .with("deviation", errs)
                .with("deviation_times_a", scaled))
        },
    ));
    plots.push(conv);

    let name = "monodromy.large_r";
    out.push(run_check(
        Spec {
            name,
            anchor: "g -> 0 as |r| grows",
            statistic: "|w_eps - w_-eps| at |r| = 1000 eps",
            comparison: Comparison::Below,
            threshold: 3e-3,
        },
        || {
            let start = ModelPoint::zw(vec![-eps, 1000.0 * eps], vec![1.0, 0.0]).map_err(err)?;
            let p = monodromy::post_surgery_closed_form(&start, eps).map_err(err)?;
            Ok(Outcome::new(1, distance(&p.w, &start.w)))
        },
    ));

    let name = "monodromy.word_conjugacy";
    out.push(run_check(
        Spec {
            name,
            anchor: "open(psi1 psi2) = open(psi2 psi1)",
            statistic: "max orbit mismatch",
            comparison: Comparison::Below,
            threshold: 1e-8,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut atlas = ChartAtlas::new();
            atlas.insert("A", TwistChart { epsilon: eps, region: "a".into() }).map_err(err)?;
            atlas.insert("B", TwistChart { epsilon: 0.5 * eps, region: "b".into() }).map_err(err)?;
            let w: Vec<(String, i32)> = vec![("A".into(), 1), ("B".into(), 1), ("A".into(), 1)];
            let mut rotated = w.clone();
            rotated.rotate_right(1);
            let a = vec![("A".to_string(), 1)];
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let mut start = BTreeMap::new();
                for label in ["A", "B"] {
                    let r = rng.gen_range(0.05..0.8);
                    start.insert(label.to_string(), random_sphere_point(&mut rng, 1, r));
                }
                // rotated word at the transported point versus transport of the original orbit
                let lhs = monodromy::composed_monodromy_word(
                    &monodromy::composed_monodromy_word(&start, &w[..2], &atlas).map_err(err)?,
                    &rotated,
                    &atlas,
                )
                .map_err(err)?;
                let rhs = monodromy::composed_monodromy_word(
                    &monodromy::composed_monodromy_word(&start, &w, &atlas).map_err(err)?,
                    &w[..2],
                    &atlas,
                )
                .map_err(err)?;
                let inv = monodromy::composed_monodromy_word(
                    &monodromy::composed_monodromy_word(&start, &a, &atlas).map_err(err)?,
                    &[("A".to_string(), -1)],
                    &atlas,
                )
                .map_err(err)?;
                for label in ["A", "B"] {
                    worst = worst
                        .max(distance(&lhs[label].to_ambient(), &rhs[label].to_ambient()))
                        .max(distance(&inv[label].to_ambient(), &start[label].to_ambient()));
                }
            }
            Ok(Outcome::new(50, worst))
        },
    ));

    let mut prof = PlotTable::new("profiles", &["s", "f", "g", "f_prime", "g_prime"]);
    if let Ok(p) = weinstein::HandleProfile::new(cfg.delta) {
        for i in 0..=400 {
            let s = 2.0 * i as f64 / 400.0;
            prof.rows.push(vec![s, p.f(s), p.g(s), p.f_prime(s), p.g_prime(s)]);
        }
    }
    plots.push(prof);
    (out, plots)
}

fn giroux_suite(cfg: &ScenarioConfig) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for (label, domain, psi) in openbook::giroux_test_maps() {
        let name = format!("giroux.{label}");
        let mut path = 0.0_f64;
        let mut built = None;
        let exact = run_check(
            Spec {
                name: &format!("{name}.exactness"),
                anchor: "psi_hat^* lambda = lambda - dh",
                statistic: "max |psi_hat^* lambda - lambda + dh|",
                comparison: Comparison::Below,
                threshold: cfg.tolerances.giroux,
            },
            || {
                let mut rng = rng_for(cfg.seed, &name);
                let support = psi.support_box.clone();
                let checks: Vec<Vec<f64>> = (0..20).map(|_| support.sample(&mut rng)).collect();
                let g = openbook::giroux_correction(&domain, &psi, &GirouxConfig::default(), &checks).map_err(err)?;
                let waypoint = support.scaled(0.5).sample(&mut rng);
                let mut worst: f64 = 0.0;
                for _ in 0..cfg.samples.giroux {
                    let x = support.sample(&mut rng);
                    worst = worst.max(g.residual(&x).map_err(err)?);
                    let h = g.h(&x).map_err(err)?;
                    path = path
                        .max((h - g.h_via(&x, &waypoint).map_err(err)?).abs())
                        .max((h - g.h_flow(&x).map_err(err)?).abs());
                }
                built = Some(());
                Ok(Outcome::new(cfg.samples.giroux, worst))
            },
        );
        out.push(exact);
        out.push(run_check(
            Spec {
                name: &format!("{name}.path_independence"),
                anchor: "h independent of path",
                statistic: "max |h - h_via|, |h - h_flow|",
                comparison: Comparison::Below,
                threshold: cfg.tolerances.giroux,
            },
            || match built {
                Some(()) => Ok(Outcome::new(cfg.samples.giroux, path)),
                None => Err("correction failed, see exactness check".into()),
            },
        ));
    }
    out
}

fn binding_suite(cfg: &ScenarioConfig) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let n = cfg.samples.binding;
    let fd = FdConfig::default();

    let name = "binding.mapping_torus_volume";
    out.push(run_check(
        Spec {
            name,
            anchor: "(lambda + d phi) ^ (d lambda)^n > 0",
            statistic: "min contact volume",
            comparison: Comparison::Above,
            threshold: 0.0,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut worst = f64::INFINITY;
            let mut count = 0;
            for dn in [1, 2] {
                let d = ExactSymplecticDomain::standard_disk(dn);
                let alpha = openbook::mapping_torus_form(&d);
                let dim = 2 * dn + 1;
                let frame: Vec<Vec<f64>> = (0..dim).map(|i| basis_vector(dim, i)).collect();
                for _ in 0..n {
                    let mut x = d.sample_box().sample(&mut rng);
                    x.push(rng.gen_range(0.0..std::f64::consts::TAU));
                    worst = worst.min(forms::contact_volume(&alpha, &x, &frame, fd).map_err(err)?);
                    count += 1;
                }
            }
            Ok(Outcome::new(count, worst))
        },
    ));

    let name = "binding.mapping_torus_reeb";
    out.push(run_check(
        Spec {
            name,
            anchor: "d phi(R) > 0 on the mapping torus",
            statistic: "min d phi(R)",
            comparison: Comparison::Above,
            threshold: 0.0,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let d = ExactSymplecticDomain::standard_disk(2);
            let alpha = openbook::mapping_torus_form(&d);
            let samples: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let mut x = d.sample_box().sample(&mut rng);
                    x.push(rng.gen_range(0.0..1.0));
                    x
                })
                .collect();
            let phi = |x: &[f64]| x[4];
            let m = openbook::reeb_transversality_check(&alpha, &phi, &samples, None, fd).map_err(err)?;
            Ok(Outcome::new(n, m))
        },
    ));

    let name = "binding.volume";
    out.push(run_check(
        Spec {
            name,
            anchor: "(h1 lambda + h2 d phi) ^ (d .)^n > 0 near the binding",
            statistic: "min contact volume",
            comparison: Comparison::Above,
            threshold: 0.0,
        },
        || {
            let profile = BindingProfile::default();
            let mut rng = rng_for(cfg.seed, name);
            let mut worst = f64::INFINITY;
            let mut count = 0;
            for bd in [2, 4] {
                let beta = openbook::binding_form(profile, bd);
                for i in 0..n {
                    let r = 0.01 + 0.98 * i as f64 / (n.max(2) - 1) as f64;
                    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let mut pt = random_unit(&mut rng, bd);
                    pt.extend([r * phi.cos(), r * phi.sin()]);
                    let frame = openbook::binding_frame(&pt, bd);
                    worst = worst.min(forms::contact_volume(&beta, &pt, &frame, fd).map_err(err)?);
                    count += 1;
                }
            }
            Ok(Outcome::new(count, worst))
        },
    ));

    let name = "binding.glue_overlap";
    out.push(run_check(
        Spec {
            name,
            anchor: "binding form = glue^* (e^s lambda + d phi) for r > 1/2",
            statistic: "max difference",
            comparison: Comparison::Below,
            threshold: cfg.tolerances.glue,
        },
        || {
            let profile = BindingProfile::default();
            let mut rng = rng_for(cfg.seed, name);
            let mut worst: f64 = 0.0;
            for bd in [2, 4] {
                let glue = openbook::glue_map(bd);
                let collar = openbook::collar_form(bd);
                for _ in 0..n {
                    let x = random_unit(&mut rng, bd);
                    let r = rng.gen_range(profile.matching_radius()..0.999);
                    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                    let mut c = x.clone();
                    c.extend([r, phi]);
                    for i in 0..bd + 2 {
                        let v = basis_vector(bd + 2, i);
                        let a = forms::pullback_eval(&glue, &collar, &c, &[&v]).map_err(err)?;
                        let b = openbook::binding_form_eval(&profile, &x, r, &v).map_err(err)?;
                        worst = worst.max((a - b).abs());
                    }
                }
            }
            Ok(Outcome::new(2 * n, worst))
        },
    ));

    let name = "binding.collar";
    out.push(run_check(
        Spec {
            name,
            anchor: "collar^* (lambda + d phi) = e^s lambda|boundary + d phi",
            statistic: "max difference",
            comparison: Comparison::Below,
            threshold: cfg.tolerances.glue,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut worst: f64 = 0.0;
            for dn in [1, 2] {
                let bd = 2 * dn;
                let emb = openbook::collar_embedding(bd);
                let torus = openbook::mapping_torus_form(&ExactSymplecticDomain::standard_disk(dn));
                let collar = openbook::collar_form(bd);
                for _ in 0..n {
                    let mut c = vec![rng.gen_range(-1.0..0.0)];
                    c.extend(random_unit(&mut rng, bd));
                    c.push(rng.gen_range(0.0..std::f64::consts::TAU));
                    for i in 0..bd + 2 {
                        let v = basis_vector(bd + 2, i);
                        let a = forms::pullback_eval(&emb, &torus, &c, &[&v]).map_err(err)?;
                        worst = worst.max((a - collar.eval(&c, &[&v])).abs());
                    }
                }
            }
            Ok(Outcome::new(2 * n, worst))
        },
    ));

    let name = "binding.legendrian_realization";
    out.push(run_check(
        Spec {
            name,
            anchor: "lambda - d(rho g) = lambda_can near the zero section",
            statistic: "max |lambda_tilde - lambda_can|",
            comparison: Comparison::Below,
            threshold: 1e-6,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let sd = 2;
            // λ = λ_can + dk with k = 0.3 q0 q1 + 0.2 q2 p0
            let lambda = KForm::one_form(6, |c| {
                let (q, p) = c.split_at(3);
                vec![p[0] + 0.3 * q[1], p[1] + 0.3 * q[0], p[2] + 0.2 * p[0], 0.2 * q[2], 0.0, 0.0]
            })
            .with_derivative(cotangent::canonical_symplectic_form(sd));
            let probes: Vec<SpherePoint> = (0..5).map(|_| random_sphere_point(&mut rng, sd, 0.2)).collect();
            let real = openbook::legendrian_realization(&lambda, sd, Cutoff::default(), &probes, 1e-8).map_err(err)?;
            let lt = real.lambda_tilde();
            let can = cotangent::canonical_form(sd);
            let mut worst: f64 = 0.0;
            for _ in 0..n {
                let r = rng.gen_range(0.01..0.25);
                let pt = random_sphere_point(&mut rng, sd, r);
                let x = pt.to_ambient();
                for v in pt.tangent_basis() {
                    worst = worst.max((lt.eval(&x, &[&v]) - can.eval(&x, &[&v])).abs());
                }
            }
            Ok(Outcome::new(n, worst))
        },
    ));
    out
}

fn moves_suite(cfg: &ScenarioConfig) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let depth = cfg.move_depth;

    out.push(run_check(
        Spec {
            name: "moves.trivial",
            anchor: "open(Sigma, id)",
            statistic: "failures",
            comparison: Comparison::AtMost,
            threshold: 0.0,
        },
        || {
            let d = OpenBookDesc::trivial(2);
            let mut fails = 0;
            fails += usize::from(!moves::equivalent_up_to_moves(&d, &d, 0).is_equivalent());
            fails += usize::from(moves::cyclic_rotate(&d) != d);
            fails += usize::from(d.to_string().parse::<OpenBookDesc>().map_err(err)? != d);
            Ok(Outcome::new(3, fails as f64))
        },
    ));

    let name = "moves.chains";
    out.push(run_check(
        Spec {
            name,
            anchor: "rotation, conjugation, stabilization preserve open(Sigma, psi)",
            statistic: "chains not recognized",
            comparison: Comparison::AtMost,
            threshold: 0.0,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut fails = 0;
            for _ in 0..cfg.samples.move_chains {
                let start = moves::random_desc(&mut rng, 3, 3, 4);
                let mut cur = start.clone();
                for _ in 0..rng.gen_range(1..=6) {
                    cur = moves::random_move(&cur, &mut rng).0;
                    cur.validate().map_err(err)?;
                }
                if !moves::equivalent_up_to_moves(&start, &cur, depth).is_equivalent() {
                    fails += 1;
                }
            }
            Ok(Outcome::new(cfg.samples.move_chains, fails as f64))
        },
    ));

    let name = "moves.stabilize_destabilize";
    out.push(run_check(
        Spec {
            name,
            anchor: "destab(stab(d)) = d",
            statistic: "failures",
            comparison: Comparison::AtMost,
            threshold: 0.0,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut fails = 0;
            let mut count = 0;
            for _ in 0..cfg.samples.non_connected {
                let d = moves::random_desc(&mut rng, 2, 3, 5);
                for disk in d.page.disks.clone() {
                    let s = moves::stabilize(&d, &disk.label).map_err(err)?;
                    fails += usize::from(moves::destabilize(&s).map_err(err)? != d);
                    count += 1;
                }
            }
            Ok(Outcome::new(count, fails as f64))
        },
    ));

    let name = "moves.no_false_positive";
    out.push(run_check(
        Spec {
            name,
            anchor: "three-valued equivalence",
            statistic: "false equivalences",
            comparison: Comparison::AtMost,
            threshold: 0.0,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut fails = 0;
            for _ in 0..cfg.samples.non_connected {
                let d = moves::random_desc(&mut rng, 3, 3, 4);
                // An extra letter changes the exponent sum of a non-stabilization
                // sphere, which every move preserves.
                let mut e = d.clone();
                let s = e.page.spheres[rng.gen_range(0..e.page.spheres.len())].label.clone();
                let p = if rng.gen() { Power::POS } else { Power::NEG };
                e.word.letters.push(Letter::new(s, p));
                for _ in 0..rng.gen_range(0..=3) {
                    e = moves::random_move(&e, &mut rng).0;
                }
                if moves::equivalent_up_to_moves(&d, &e, depth) != Equivalence::Unknown {
                    fails += 1;
                }
            }
            Ok(Outcome::new(cfg.samples.non_connected, fails as f64))
        },
    ));

    let name = "moves.text_roundtrip";
    out.push(run_check(
        Spec {
            name,
            anchor: "descriptor text format",
            statistic: "failures",
            comparison: Comparison::AtMost,
            threshold: 0.0,
        },
        || {
            let mut rng = rng_for(cfg.seed, name);
            let mut fails = 0;
            for _ in 0..100 {
                let mut d = moves::random_desc(&mut rng, 3, 2, 6);
                for _ in 0..3 {
                    d = moves::random_move(&d, &mut rng).0;
                }
                fails += usize::from(d.to_string().parse::<OpenBookDesc>().map_err(err)? != d);
            }
            Ok(Outcome::new(100, fails as f64))
        },
    ));
    out
}
