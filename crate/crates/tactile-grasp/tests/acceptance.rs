//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactile_grasp::files::simlog_csv;
use tactile_grasp::{calibrate, Config};
use tactile_grasp_core::arm::{joint_torques_from_wrench, wrench_from_joint_torques, Jacobian, JOINTS};
use tactile_grasp_core::calibration::{
    free_motion_sweep, generate_free_motion_dataset, train_bias_model, BiasSpec, Mlp, TrainConfig,
};
use tactile_grasp_core::contact::ContactWorld;
use tactile_grasp_core::math::{axis_angle, Mat6, Vec3, Vec6};
use tactile_grasp_core::sim::{analyze, run_grasp, Scenario, SimLog};
use tactile_grasp_core::wrench::{transform_wrench, transform_wrench_to_base, Frame, Wrench};
use tactile_grasp_core::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

struct Fixture {
    scenario: Scenario,
    model: tactile_grasp_core::calibration::BiasModel,
    log: SimLog,
    sim_seconds: f64,
}

/// Default pipeline: calibrate with the default config, then run the default grasp with that model.
fn fixture() -> Fixture {
    let cfg = Config::default();
    let run = calibrate(&cfg).expect("default calibration");
    let scenario = cfg.scenario().expect("default scenario");
    let start = Instant::now();
    let log = run_grasp(&scenario, &run.model.model).expect("default run");
    let sim_seconds = start.elapsed().as_secs_f64();
    Fixture { scenario, model: run.model.model, log, sim_seconds }
}

fn criterion_1(fx: &Fixture) -> Outcome {
    let r = analyze(&fx.log, &fx.scenario.params, &fx.scenario.world).unwrap();
    let fz = r.final_wrench[2];
    outcome(
        within(fz, -2.5, 0.05) && fx.sim_seconds < 10.0,
        format!("final f_z = {fz:.5} N (target -2.5 ± 5%), runtime {:.2} s (< 10 s)", fx.sim_seconds),
    )
}

fn criterion_2(fx: &Fixture) -> Outcome {
    let r = analyze(&fx.log, &fx.scenario.params, &fx.scenario.world).unwrap();
    let w = r.final_wrench;
    let pass = within(w[5], -0.0625, 0.05)
        && w[3].abs() < 0.02
        && w[4].abs() < 0.02
        && w[0].abs() < 0.05
        && w[1].abs() < 0.05;
    outcome(
        pass,
        format!(
            "final tau_z = {:.6} N·m (target -0.0625 ± 5%), tau_x = {:.2e}, tau_y = {:.2e} (< 0.02), f_x = {:.2e}, f_y = {:.2e} (< 0.05)",
            w[5], w[3], w[4], w[0], w[1]
        ),
    )
}

fn criterion_3(fx: &Fixture) -> Outcome {
    let r = analyze(&fx.log, &fx.scenario.params, &fx.scenario.world).unwrap();
    match r.contact_time {
        Some(t) => outcome(within(t, 6.0, 0.10), format!("first contact at {t:.3} s (target 6.0 ± 10%)")),
        None => outcome(false, "no contact detected".into()),
    }
}

fn criterion_4(fx: &Fixture) -> Outcome {
    let p = &fx.scenario.params;
    let limit = 4.0 / p.b_z + 0.5;
    let r = analyze(&fx.log, p, &fx.scenario.world).unwrap();
    match r.approach_settle_time {
        Some(t) => outcome(t <= limit, format!("v_z within 2% of v_dz from {t:.3} s (limit {limit} s)")),
        None => outcome(false, "v_z never settled before contact".into()),
    }
}

/// Final f_z for each stiffness, using the default pipeline's trained model.
fn criterion_5(fx: &Fixture) -> Outcome {
    let target = -1.0 / fx.scenario.params.alpha_vz;
    let mut finals = Vec::new();
    for k_z in [100.0, 500.0, 2000.0] {
        let sc = Scenario {
            world: ContactWorld { k_z, ..fx.scenario.world },
            stop_on_complete: false,
            ..fx.scenario.clone()
        };
        let log = run_grasp(&sc, &fx.model).unwrap();
        finals.push(analyze(&log, &sc.params, &sc.world).unwrap().final_wrench[2]);
    }
    outcome(
        finals.iter().all(|f| within(*f, target, 0.01)),
        format!(
            "final f_z at K_z = 100/500/2000: {:.5} / {:.5} / {:.5} N (target {target} ± 1%)",
            finals[0], finals[1], finals[2]
        ),
    )
}

fn random_orthogonal(rng: &mut ChaCha8Rng) -> Mat6 {
    Mat6::from_fn(|_, _| rng.random_range(-1.0..1.0)).qr().q()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut rejected_regular = 0;
    for _ in 0..1000 {
        let j = Jacobian(Mat6::from_fn(|_, _| rng.random_range(-1.0..1.0)));
        if j.check_regular().is_err() {
            rejected_regular += 1;
            continue;
        }
        let f = Wrench::from_stacked(&Vec6::from_fn(|_, _| rng.random_range(-10.0..10.0)), Frame::Base);
        let tau = joint_torques_from_wrench(&j, &f).unwrap();
        let back = wrench_from_joint_torques(&j, &tau).unwrap();
        let rel = (back.stacked() - f.stacked()).norm() / f.stacked().norm();
        worst = worst.max(rel);
    }
    let u = random_orthogonal(&mut rng);
    let v = random_orthogonal(&mut rng);
    let sigma = Mat6::from_diagonal(&Vec6::new(1.0, 0.8, 0.5, 0.3, 0.1, 1e-13));
    let singular = Jacobian(u * sigma * v.transpose());
    let tau = Vec6::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let guarded = matches!(wrench_from_joint_torques(&singular, &tau), Err(Error::Singular { .. }));
    outcome(
        worst <= 1e-9 && guarded && rejected_regular == 0,
        format!(
            "1000 round trips, worst relative error {worst:.2e} (<= 1e-9); singular J (sigma_min 1e-13) rejected: {guarded}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut norm_err, mut inv_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let axis = loop {
            let a = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            if a.norm() > 0.1 {
                break a.normalize();
            }
        };
        let r = axis_angle(&axis, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let w = Wrench::new(
            Vec3::from_fn(|_, _| rng.random_range(-10.0..10.0)),
            Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
            Frame::Base,
        )
        .unwrap();
        let e = transform_wrench(&r, &w).unwrap();
        norm_err = norm_err.max((e.force.norm() - w.force.norm()).abs()).max((e.torque.norm() - w.torque.norm()).abs());
        let back = transform_wrench_to_base(&r, &e).unwrap();
        inv_err = inv_err.max((back.stacked() - w.stacked()).amax());
    }
    outcome(
        norm_err <= 1e-12 && inv_err <= 1e-12,
        format!("1000 rotations: norm error {norm_err:.2e}, R then R^T error {inv_err:.2e} (<= 1e-12)"),
    )
}

fn criterion_8() -> Outcome {
    let sigma = 0.05;
    let traj = free_motion_sweep(6000, 0.02, 8).unwrap();
    let data = generate_free_motion_dataset(&BiasSpec::default_arm(), &traj, sigma, 9).unwrap();
    let cfg = TrainConfig { seed: 8, ..TrainConfig::default() };
    let (model, report) = train_bias_model(&data, &cfg).unwrap();
    let worst = report.joints.iter().map(|j| j.validation_rmse).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let net: &Mlp = &model.joints[0].net;
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|_| vec![rng.random_range(-1.0..1.0), [-1.0, 0.0, 1.0][rng.random_range(0..3)]])
        .collect();
    let ys: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..2.0)).collect();
    let (_, grad) = net.loss_and_gradient(&rows, &ys);
    let h = 1e-6;
    let mut grad_err = 0.0f64;
    for _ in 0..20 {
        let idx = rng.random_range(0..net.param_count());
        let mut p = net.clone();
        *p.param_mut(idx) += h;
        let lp = p.loss_and_gradient(&rows, &ys).0;
        *p.param_mut(idx) -= 2.0 * h;
        let lm = p.loss_and_gradient(&rows, &ys).0;
        let fd = (lp - lm) / (2.0 * h);
        let an = grad.param(idx);
        grad_err = grad_err.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6));
    }
    outcome(
        worst <= 0.075 && grad_err <= 1e-4,
        format!(
            "sigma 0.05: worst held-out RMSE {worst:.5} N·m over {JOINTS} joints (<= 0.075); gradient check max relative error {grad_err:.2e} on 20 parameters (<= 1e-4)"
        ),
    )
}

/// Default pipeline against a dense RK4 integration of z'' + b z' + b v_dz alpha K (z - z0)^+ = b v_dz from the first contact sample.
fn criterion_9(fx: &Fixture) -> Outcome {
    let sc = Scenario { stop_on_complete: false, duration: 30.0, ..fx.scenario.clone() };
    let log = run_grasp(&sc, &fx.model).unwrap();
    let p = &sc.params;
    let w = &sc.world;
    let start = log.records.iter().position(|r| r.contact).expect("contact");
    let accel = |z: f64, v: f64| {
        let f = -w.k_z * (z - w.z0).max(0.0);
        p.b_z * p.v_dz * (1.0 + p.alpha_vz * f) - p.b_z * v
    };
    let h = 1e-5;
    let per_sample = (sc.dt / h).round() as usize;
    let (mut z, mut v) = (log.records[start].z, log.records[start].velocity.linear.z);
    let mut worst = 0.0f64;
    for rec in &log.records[start + 1..] {
        for _ in 0..per_sample {
            let (k1z, k1v) = (v, accel(z, v));
            let (k2z, k2v) = (v + 0.5 * h * k1v, accel(z + 0.5 * h * k1z, v + 0.5 * h * k1v));
            let (k3z, k3v) = (v + 0.5 * h * k2v, accel(z + 0.5 * h * k2z, v + 0.5 * h * k2v));
            let (k4z, k4v) = (v + h * k3v, accel(z + h * k3z, v + h * k3v));
            z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        worst = worst.max((rec.z - z).abs());
    }
    outcome(
        worst <= 1e-4,
        format!(
            "post-contact z vs dense (h = 1e-5) integration over {:.1} s: max deviation {worst:.2e} m (<= 1e-4)",
            log.records.last().unwrap().t - log.records[start].t
        ),
    )
}

fn criterion_10(fx: &Fixture) -> Outcome {
    let again = run_grasp(&fx.scenario, &fx.model).unwrap();
    let (a, b) = (simlog_csv(&fx.log), simlog_csv(&again));
    outcome(a == b && !a.is_empty(), format!("two runs, {} CSV bytes each, identical: {}", a.len(), a == b))
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let fx = fixture();
    let checks: [(&str, Check); 10] = [
        ("steady-state contact force", Box::new(|| criterion_1(&fx))),
        ("steady-state torques and lateral forces", Box::new(|| criterion_2(&fx))),
        ("contact timing", Box::new(|| criterion_3(&fx))),
        ("approach settling", Box::new(|| criterion_4(&fx))),
        ("stiffness independence", Box::new(|| criterion_5(&fx))),
        ("wrench-recovery soundness", Box::new(criterion_6)),
        ("frame-transform soundness", Box::new(criterion_7)),
        ("calibration quality", Box::new(criterion_8)),
        ("z-dynamics oracle", Box::new(|| criterion_9(&fx))),
        ("determinism", Box::new(|| criterion_10(&fx))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
