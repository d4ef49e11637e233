//! Acceptance suite: one PASS/FAIL line per criterion, then a nonzero exit
//! if any failed. Runs without the libtest harness so the lines always show.

use std::f64::consts::PI;
use std::time::Instant;

use mimalloc::MiMalloc;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symsurf::cli::{active_terms, configs, Cli};
use symsurf::experiment::{generate_dataset, initial_model, initial_frame, nearest_vertex_distance, object_mesh, train_and_evaluate, DatasetConfig};
use clap::Parser;
use symsurf_core::camera::{pixel_ray, Camera};
use symsurf_core::init::{canonical_frame, filter_cloud, PlaneAxis, PointCloud, FILTER_RADIUS, MIN_NEIGHBORS};
use symsurf_core::losses::{eikonal_loss, LossReport, LossSwitches, LossWeights};
use symsurf_core::model::{LossOptions, ModelConfig, SceneModel};
use symsurf_core::render::{accumulate, alpha, render_ray, render_ray_dense, sphere_trace, Ray, SamplingConfig};
use symsurf_core::scene::{generate_orbit, transform_camera, OrbitConfig, SceneConfig, SyntheticScene};
use symsurf_core::sdf::{EllipsoidInit, GroundPlane, NeuralSdfConfig, Shape};
use symsurf_core::appearance::AppearanceConfig;
use symsurf_core::symmetry::{rotation_from_normal, RigidFrame, SymmetryDraw, SymmetrySet, SymmetrySpec, SymmetryVariant};
use symsurf_core::train::{evaluate_model, TrainConfig};
use symsurf_core::{Mat3, Mat4, Vec3};

#[global_allocator]
static GLOBAL: MiMalloc = MiMalloc;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

fn point(rng: &mut ChaCha8Rng, r: f64) -> Vec3 {
    Vec3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r))
}

fn random_frame(rng: &mut ChaCha8Rng) -> RigidFrame {
    let rot = Mat3::rotation(unit(rng), rng.random_range(-PI..PI));
    RigidFrame::new(rot, point(rng, 0.5)).unwrap()
}

fn random_spec(rng: &mut ChaCha8Rng, kind: usize) -> SymmetrySpec {
    let variant = match kind {
        0 => SymmetryVariant::PlanarReflection { normal: unit(rng), offset: rng.random_range(-0.5..0.5) },
        1 => SymmetryVariant::LineReflection { direction: unit(rng), plane_offset: [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)] },
        2 => SymmetryVariant::PointReflection { center: point(rng, 0.5) },
        3 => SymmetryVariant::Rotation { point: point(rng, 0.5), axis: unit(rng), order: rng.random_range(1..7) },
        4 => SymmetryVariant::Translation { offset: point(rng, 0.5) },
        5 => SymmetryVariant::Scale { sx: rng.random_range(0.5..2.0), sy: rng.random_range(0.5..2.0) },
        _ => SymmetryVariant::Spherical { center: point(rng, 0.5) },
    };
    SymmetrySpec::new(variant, random_frame(rng)).unwrap()
}

/// Closed-form map of a variant in its own frame, written independently of
/// the homogeneous-matrix construction.
fn oracle_canonical(v: &SymmetryVariant, draw: SymmetryDraw, x: Vec3) -> Vec3 {
    match (*v, draw) {
        (SymmetryVariant::PlanarReflection { normal, offset }, _) => x - normal * (2.0 * (normal.dot(x) - offset)),
        (SymmetryVariant::LineReflection { direction, plane_offset }, _) => {
            let p = rotation_from_normal(direction) * Vec3::new(plane_offset[0], plane_offset[1], 0.0);
            let foot = p + direction * direction.dot(x - p);
            foot * 2.0 - x
        }
        (SymmetryVariant::PointReflection { center }, _) => center * 2.0 - x,
        (SymmetryVariant::Rotation { point, axis, order }, SymmetryDraw::RotationStep(k)) => {
            // Rodrigues about `axis` through `point`; the step matrix
            // [[c, s], [-s, c]] turns clockwise, hence the sign.
            let a = -2.0 * PI / f64::from(order + 1) * f64::from(k);
            let r = x - point;
            let rot = r * a.cos() + axis.cross(r) * a.sin() + axis * (axis.dot(r) * (1.0 - a.cos()));
            point + rot
        }
        (SymmetryVariant::Translation { offset }, _) => x + offset,
        (SymmetryVariant::Scale { sx, sy }, _) => Vec3::new(sx * x.x, sy * x.y, x.z),
        _ => unreachable!("oracle only covers deterministic and rotation variants"),
    }
}

fn oracle_world(spec: &SymmetrySpec, draw: SymmetryDraw, x: Vec3) -> Vec3 {
    let f = spec.frame;
    let c = f.rotation * x + f.translation;
    f.rotation.transpose() * (oracle_canonical(&spec.variant, draw, c) - f.translation)
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cases = 1200;
    let (mut inv, mut iso, mut mat, mut dir) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..cases {
        // Involution over the three reflection variants.
        let spec = random_spec(&mut rng, i % 3);
        let x = point(&mut rng, 1.0);
        let y = spec.apply_to_point(spec.apply_to_point(x, &mut rng), &mut rng);
        inv = inv.max((y - x).norm());

        // Isometry over reflections, rotation and translation.
        let spec = random_spec(&mut rng, i % 5);
        let t = spec.realize(spec.draw(&mut rng)).unwrap();
        let (a, b) = (point(&mut rng, 1.0), point(&mut rng, 1.0));
        iso = iso.max(((t.point(a) - t.point(b)).norm() - (a - b).norm()).abs());

        // Matrix equivalence for deterministic variants, against the
        // closed-form oracle and apply_to_point.
        let kind = [0, 1, 2, 4, 5][i % 5];
        let spec = random_spec(&mut rng, kind);
        let m = spec.compose_canonical().unwrap();
        let x = point(&mut rng, 1.0);
        let via_matrix = m.transform_point(x);
        mat = mat.max((via_matrix - oracle_world(&spec, SymmetryDraw::Fixed, x)).norm());
        mat = mat.max((via_matrix - spec.apply_to_point(x, &mut rng)).norm());
        let rot = random_spec(&mut rng, 3);
        let draw = rot.draw(&mut rng);
        mat = mat.max((rot.compose(draw).unwrap().transform_point(x) - oracle_world(&rot, draw, x)).norm());

        // Direction consistency for isometric variants.
        let spec = random_spec(&mut rng, i % 5);
        let draw = spec.draw(&mut rng);
        let d = unit(&mut rng);
        let eps = 1e-6;
        let fd = (oracle_world(&spec, draw, x + d * eps) - oracle_world(&spec, draw, x)) * (1.0 / eps);
        let got = spec.apply_to_direction_drawn(d, draw).unwrap();
        dir = dir.max((got - fd.normalize()).norm());
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = inv < 1e-9 && iso < 1e-9 && mat < 1e-9 && dir < 1e-4 && secs < 10.0;
    outcome(
        pass,
        format!("{cases} cases each; involution {inv:.1e}, isometry {iso:.1e}, matrix {mat:.1e} (tol 1e-9), direction {dir:.1e} (tol 1e-4); {secs:.2}s (< 10s)"),
    )
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let scene = SyntheticScene::sphere(0.5);
    let field = |x: Vec3| scene.object.eval_parts(x);
    let shade = |x: Vec3, n: Vec3, d: Vec3| scene.shade(x, n.normalize(), d);
    let k = Camera::intrinsics_from_fov(40, 40, 24.0);
    let cam = Camera::look_at(Vec3::new(2.2, -1.1, 0.9), Vec3::ZERO, Vec3::Z, k, 40, 40).unwrap();
    let cfg = SamplingConfig { n_coarse: 64, n_fine: 64, tau: 320.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut colour_err, mut n_rays) = (0.0, 0usize);
    let (mut depth_worst, mut depth_sum, mut n_hits) = (0.0f64, 0.0, 0usize);
    for py in 0..40 {
        for px in 0..40 {
            let ray = pixel_ray(&cam, px, py);
            let bg = scene.background(ray.direction);
            let h = render_ray(&field, &shade, &ray, bg, cfg, Some(&mut rng));
            let d = render_ray_dense(&field, &shade, &ray, bg, 4096, 320.0);
            let e = (h.colour - d.colour).abs();
            colour_err += (e.x + e.y + e.z) / 3.0;
            n_rays += 1;
            let traced = sphere_trace(&|x| scene.object_distance(x), &Ray { near: 0.0, far: 10.0, ..ray }, 10.0, 256, 1e-5);
            if let (Some(t), Some(depth)) = (traced, h.depth) {
                let err = (depth - t).abs();
                depth_worst = depth_worst.max(err);
                depth_sum += err;
                n_hits += 1;
            }
        }
    }
    let mean = colour_err / n_rays as f64;
    let secs = t0.elapsed().as_secs_f64();
    let pass = mean < 0.01 && depth_worst < 0.02 && n_rays >= 1000 && n_hits >= 1000 && secs < 60.0;
    outcome(
        pass,
        format!(
            "{n_rays} rays: mean per-channel error {mean:.2e} (< 0.01); {n_hits} surface hits, depth error worst {depth_worst:.2e} mean {:.2e} (< 0.02); {secs:.1}s (< 60s)",
            depth_sum / n_hits.max(1) as f64
        ),
    )
}

fn criterion_4() -> Outcome {
    // (σ(2) − σ(−2))/σ(2) = 1 − σ(−2)/σ(2) = 1 − e^{−2}.
    let oracle = 1.0 - (-2.0f64).exp();
    let a = alpha(0.1, -0.1, 20.0);
    let point_ok = (a - 0.86466).abs() <= 1e-4 && (a - oracle).abs() < 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut equal_ok = true;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(-2.0..2.0);
        let tau = rng.random_range(0.1..1000.0);
        equal_ok &= alpha(d, d, tau) == 0.0;
        let n = rng.random_range(1..256);
        let alphas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.999)).collect();
        let (w, t) = accumulate(&alphas);
        worst = worst.max((w.iter().sum::<f64>() + t - 1.0).abs());
    }
    // Telescoping holds in exact arithmetic; in f64 the residual is a few ulps.
    let pass = point_ok && equal_ok && worst <= 1e-13;
    outcome(
        pass,
        format!("alpha(0.1,-0.1,20) = {a:.8} (oracle {oracle:.8}); alpha(d,d,tau) == 0: {equal_ok}; |sum w + T - 1| worst {worst:.1e} over 1000 vectors"),
    )
}

fn micro_model() -> SceneModel {
    let cfg = ModelConfig {
        sdf: NeuralSdfConfig { hidden: vec![8, 8, 8], skip: Some(2), num_freqs: 2, feature_dim: 4, softplus_beta: 100.0 },
        appearance: AppearanceConfig { material_hidden: vec![6, 6], diffuse_hidden: vec![6], specular_hidden: vec![6, 6], dir_freqs: 2 },
        background_hidden: vec![6],
        background_freqs: 2,
        tau_init: 20.0,
        n_coarse: 8,
        n_fine: 4,
        n_background: 4,
    };
    let frame = RigidFrame::new(Mat3::rotation(Vec3::Z, 0.3), Vec3::new(0.05, -0.02, 0.0)).unwrap();
    let sym = SymmetrySet::single(SymmetrySpec::xz_reflection(frame));
    let ell = EllipsoidInit::new(Vec3::new(0.0, 0.0, 0.05), Vec3::new(0.5, 0.35, 0.3)).unwrap();
    let ground = GroundPlane::new(-0.3, Vec3::Z).unwrap();
    let mut m = SceneModel::new(cfg, &ell, Some(ground), sym, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    for (i, v) in m.store.values_mut().iter_mut().enumerate() {
        *v += 0.05 * (i as f64 * 0.7).sin();
    }
    m.fold_symmetry();
    m
}

fn micro_rays() -> Vec<Ray> {
    let eye = Vec3::new(1.6, 1.2, 0.7);
    [Vec3::new(0.0, 0.0, -0.1), Vec3::new(0.1, 0.2, -0.25)].iter().map(|t| Ray::new(eye, (*t - eye).normalize())).collect()
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let mut model = micro_model();
    let rays = micro_rays();
    // Targets below every reachable colour keep the L1 loss differentiable.
    let targets = vec![Vec3::splat(-0.5); rays.len()];
    let opts = LossOptions { weights: LossWeights::default(), switches: LossSwitches::default() };
    let plan = model.plan(&rays, true, true, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let (_, grad) = model.evaluate(&rays, &targets, &plan, &opts, true).unwrap();
    let h = 1e-5;
    let floor = 1e-6;
    let mut per_block: Vec<(String, f64)> = Vec::new();
    let mut worst = 0.0f64;
    let slices: Vec<(String, std::ops::Range<usize>)> = model.store.slices().iter().map(|s| (s.name.clone(), s.range.clone())).collect();
    for (name, range) in slices {
        let mut block_worst = 0.0f64;
        for i in range {
            let v = model.store.values()[i];
            model.store.values_mut()[i] = v + h;
            let lp = model.evaluate(&rays, &targets, &plan, &opts, false).unwrap().0.total;
            model.store.values_mut()[i] = v - h;
            let lm = model.evaluate(&rays, &targets, &plan, &opts, false).unwrap().0.total;
            model.store.values_mut()[i] = v;
            let fd = (lp - lm) / (2.0 * h);
            let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(floor);
            block_worst = block_worst.max(err);
        }
        worst = worst.max(block_worst);
        per_block.push((name, block_worst));
    }
    let secs = t0.elapsed().as_secs_f64();
    let blocks: Vec<String> = per_block.iter().map(|(n, e)| format!("{n} {e:.0e}")).collect();
    outcome(worst <= 1e-4 && secs < 30.0, format!("worst relative error {worst:.1e} (<= 1e-4; |g| floor {floor:.0e}); {}; {secs:.1}s (< 30s)", blocks.join(", ")))
}

fn criterion_6() -> Outcome {
    let plane = Shape::plane(Vec3::new(0.3, -0.2, 0.9).normalize(), 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pts: Vec<Vec3> = (0..512).map(|_| point(&mut rng, 1.0)).collect();
    let grads: Vec<Vec3> = pts.iter().map(|p| plane.eval_parts(*p).1).collect();
    let flat = eikonal_loss(&grads);
    // Finite-difference gradients of the doubled field.
    let h = 1e-5;
    let doubled: Vec<Vec3> = pts
        .iter()
        .map(|p| {
            let f = |q: Vec3| 2.0 * plane.distance(q);
            Vec3::new(
                (f(*p + Vec3::X * h) - f(*p - Vec3::X * h)) / (2.0 * h),
                (f(*p + Vec3::Y * h) - f(*p - Vec3::Y * h)) / (2.0 * h),
                (f(*p + Vec3::Z * h) - f(*p - Vec3::Z * h)) / (2.0 * h),
            )
        })
        .collect();
    let scaled = eikonal_loss(&doubled);
    outcome(flat < 1e-10 && (scaled - 1.0).abs() <= 1e-9, format!("plane {flat:.1e} (< 1e-10); 2x field {scaled:.12} (1 ± 1e-9)"))
}

fn criterion_7() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scene = SyntheticScene::car_proxy(&SceneConfig::default());
    let (cloud, labels) = scene.sample_cloud(6000, 0.2, 1.5, &mut rng);
    let cams = generate_orbit(&OrbitConfig { n_frames: 24, jitter_deg: 2.0, ..OrbitConfig::default() }, &mut rng).unwrap();
    // Rigid motion of the whole capture: yaw, tilt and offset.
    let rot = Mat3::rotation(Vec3::new(1.0, 0.4, 0.0).normalize(), 0.35) * Mat3::rotation(Vec3::Z, 0.9);
    let g = Mat4::affine(rot, Vec3::new(0.2, -0.1, 0.05));
    let moved = PointCloud::new(cloud.points.iter().map(|p| g.transform_point(*p)).collect()).unwrap();
    let cams: Vec<Camera> = cams.iter().map(|c| transform_camera(c, &g).unwrap()).collect();
    let filtered = filter_cloud(&moved, FILTER_RADIUS, MIN_NEIGHBORS).unwrap();
    let kept: std::collections::HashSet<[u64; 3]> = filtered.points.iter().map(|p| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]).collect();
    let (mut far, mut far_removed) = (0usize, 0usize);
    for (p, (orig, outlier)) in moved.points.iter().zip(cloud.points.iter().zip(&labels)) {
        if *outlier && scene.object_distance(*orig) > FILTER_RADIUS {
            far += 1;
            far_removed += usize::from(!kept.contains(&[p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]));
        }
    }
    let frame = canonical_frame(&filtered, &cams, PlaneAxis::X, &mut rng).unwrap();
    let truth = rot * Vec3::X;
    let angle = frame.plane_normal_world().dot(truth).abs().min(1.0).acos().to_degrees();
    let removed = far_removed as f64 / far.max(1) as f64;
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        removed >= 0.99 && angle <= 5.0 && secs < 30.0,
        format!("far outliers removed {far_removed}/{far} = {:.2}% (>= 99%); plane normal error {angle:.2} deg (<= 5); {secs:.1}s (< 30s)", 100.0 * removed),
    )
}

/// Desk settings for the completion runs (see README for the budget).
fn completion_config() -> TrainConfig {
    TrainConfig { rays_per_batch: 32, n_coarse: 16, n_fine: 16, ..TrainConfig::desk() }
}

fn criteria_8_9() -> (Outcome, Outcome) {
    let t0 = Instant::now();
    let (scene, data) = generate_dataset(&DatasetConfig::default()).unwrap();
    let frame = initial_frame(&data, 1).unwrap();
    let train = data.train_views();
    let test = data.test_views();
    let run = |tc: TrainConfig, label: &'static str| {
        let model = initial_model(ModelConfig::desk(), &frame, true, 2).unwrap();
        let start = Instant::now();
        train_and_evaluate(model, tc, &train, &test, |it, c| {
            if it % 2000 == 0 {
                eprintln!("  run {label}: iteration {it}, colour loss {c:.4}, {:.0}s", start.elapsed().as_secs_f64());
            }
        })
        .unwrap()
    };
    let a = run(TrainConfig { weights: LossWeights { symmetricity: 0.1, ..completion_config().weights }, ..completion_config() }, "A");
    let b = run(completion_config().without_symmetry(), "B");
    let (ma, mb) = (a.metrics.aggregate(), b.metrics.aggregate());
    // Not graded: the error floor on views both runs trained on.
    let seen = data.eval_views(&data.split.train);
    let seen_a = evaluate_model(&a.model, &seen).unwrap().aggregate().depth_mae;
    let seen_b = evaluate_model(&b.model, &seen).unwrap().aggregate().depth_mae;
    let secs = t0.elapsed().as_secs_f64();
    let reduction = 1.0 - ma.depth_mae / mb.depth_mae;
    let c8 = outcome(
        reduction >= 0.3 && ma.psnr >= mb.psnr + 1.0,
        format!(
            "{} train / {} test views; depth MAE A {:.4} vs B {:.4} ({:.1}% lower, >= 30%); PSNR A {:.2} vs B {:.2} dB ({:+.2}, >= +1); IoU A {:.3} B {:.3}; training-view depth MAE A {seen_a:.4} B {seen_b:.4}; {:.0} min",
            train.len(),
            test.len(),
            ma.depth_mae,
            mb.depth_mae,
            100.0 * reduction,
            ma.psnr,
            mb.psnr,
            ma.psnr - mb.psnr,
            ma.iou,
            mb.iou,
            secs / 60.0
        ),
    );
    let mesh = object_mesh(&a.model, 128).unwrap();
    let apex = nearest_vertex_distance(&mesh, scene.bump_apex().unwrap());
    let mirrored = nearest_vertex_distance(&mesh, scene.mirrored_bump_apex().unwrap());
    let c9 = outcome(
        apex <= 0.05 && mirrored > 0.1,
        format!("run A mesh ({} vertices): surface to bump apex {apex:.3} (<= 0.05); to mirrored apex {mirrored:.3} (> 0.1)", mesh.vertices.len()),
    );
    (c8, c9)
}

fn report_terms(r: &LossReport) -> Vec<(String, f64)> {
    let mut v = Vec::new();
    for j in 0..2 {
        for k in 0..2 {
            v.push((format!("col{j}{k}"), r.colour[j][k]));
            v.push((format!("diff{j}{k}"), r.diffuse[j][k]));
            v.push((format!("light{j}{k}"), r.lighting[j][k]));
        }
        v.push((format!("eik{j}"), r.eikonal[j]));
    }
    v
}

fn criterion_10() -> Outcome {
    let model = micro_model();
    let rays = micro_rays();
    let targets = vec![Vec3::splat(0.3); rays.len()];
    let plan = model.plan(&rays, true, true, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
    let weights = LossWeights::default();
    let eval = |sw: LossSwitches| report_terms(&model.evaluate(&rays, &targets, &plan, &LossOptions { weights, switches: sw }, false).unwrap().0);
    let full = eval(LossSwitches::default());
    let mut ok = full.iter().all(|(_, v)| *v > 0.0);
    let mut notes = Vec::new();
    for (flag, prefix) in [("colour01", "col01"), ("colour10", "col10"), ("colour11", "col11"), ("diffuse", "diff"), ("lighting", "light")] {
        let mut sw = LossSwitches::default();
        sw.disable(flag).unwrap();
        let r = eval(sw);
        let mut changed = Vec::new();
        for ((name, a), (_, b)) in full.iter().zip(&r) {
            if a.to_bits() != b.to_bits() {
                changed.push(name.clone());
            }
        }
        let expected: Vec<String> = full.iter().map(|(n, _)| n.clone()).filter(|n| n.starts_with(prefix)).collect();
        let zeroed = r.iter().filter(|(n, _)| n.starts_with(prefix)).all(|(_, v)| *v == 0.0);
        ok &= changed == expected && zeroed;
        notes.push(format!("{flag}: {}", changed.join("+")));
    }
    // Ablation without the three cross colour terms, through the command line.
    let cli = Cli::try_parse_from(["symsurf", "ablate", "--disable-loss", "colour01", "--disable-loss", "colour10", "--disable-loss", "colour11"]).unwrap();
    let (tc, _) = configs(&cli).unwrap();
    let terms = active_terms(&tc.switches, &LossWeights { lighting: 0.001, ..tc.weights });
    let want = ["diff00", "light00", "diff01", "light01", "eik0", "diff10", "light10", "diff11", "light11", "eik1", "col00"];
    let mut got = terms.clone();
    let mut want: Vec<String> = want.iter().map(|s| s.to_string()).collect();
    got.sort();
    want.sort();
    let col_only_00 = terms.iter().filter(|t| t.starts_with("col")).eq(["col00".to_string()].iter());
    ok &= got == want && col_only_00;
    outcome(ok, format!("{}; ablate without colour01/10/11: {}", notes.join(", "), terms.join(" ")))
}

fn main() {
    // `cargo test -- --list` and filters come through here too.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let skip_long = std::env::var_os("SYMSURF_SKIP_LONG").is_some();
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut record = |n: usize, o: Outcome| {
        println!("criterion {n:>2}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o));
    };
    println!("criterion  1: N/A - full-scale benchmark numbers are out of scope; criteria 2-10 are the desk-scale substitutes");
    record(2, criterion_2());
    record(3, criterion_3());
    record(4, criterion_4());
    record(5, criterion_5());
    record(6, criterion_6());
    record(7, criterion_7());
    record(10, criterion_10());
    if skip_long {
        println!("criterion  8: SKIPPED - SYMSURF_SKIP_LONG is set");
        println!("criterion  9: SKIPPED - SYMSURF_SKIP_LONG is set");
    } else {
        let (c8, c9) = criteria_8_9();
        record(8, c8);
        record(9, c9);
    }
    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all evaluated criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
