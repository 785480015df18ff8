use std::collections::BTreeSet;
use std::sync::OnceLock;

use nalgebra::{DVector, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use physdyn_core::dynamics::potential_energy;
use physdyn_core::humanoid::{humanoid_body, standing_motion};
use physdyn_core::losses::{
    contact_loss, euler_lagrange_loss, force_loss, reconstruction_loss, total_loss, ContactFrame, LossWeights,
};
use physdyn_core::metrics::{plausibility_metrics, Metric};
use physdyn_core::{forward_kinematics, solve_sequence, Model, MotionSequence, ResidualMode, SolverConfig, STANDARD_GRAVITY};

fn model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| Model::new(humanoid_body(), STANDARD_GRAVITY).unwrap())
}

fn random_motion(rng: &mut ChaCha8Rng, frames: usize, lift: f64, amp: f64) -> MotionSequence {
    let frames = (0..frames)
        .map(|_| {
            let mut q = DVector::from_fn(75, |_, _| rng.gen_range(-amp..amp));
            q[2] += lift;
            q
        })
        .collect();
    MotionSequence::new(30.0, frames).unwrap()
}

fn all_metrics() -> BTreeSet<Metric> {
    Metric::ALL.into_iter().collect()
}

#[test]
fn reconstruction_loss_matches_elementwise_sum() {
    let model = model();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pred = random_motion(&mut rng, 5, 0.0, 0.5);
    let gt = random_motion(&mut rng, 5, 0.0, 0.5);
    let w = LossWeights::default();
    let mut oracle = 0.0;
    for (q, g) in pred.frames.iter().zip(&gt.frames) {
        for k in 0..q.len() {
            oracle += w.gamma_q * (q[k] - g[k]) * (q[k] - g[k]);
        }
        let (jq, jg) = (
            forward_kinematics(q, &model.body).unwrap().joints,
            forward_kinematics(g, &model.body).unwrap().joints,
        );
        for (a, b) in jq.iter().zip(&jg) {
            for c in 0..3 {
                oracle += w.gamma_j * (a[c] - b[c]) * (a[c] - b[c]);
            }
        }
    }
    let loss = reconstruction_loss(model, &pred, &gt, &w).unwrap();
    assert!((loss - oracle).abs() <= 1e-12 * oracle);
    assert_eq!(reconstruction_loss(model, &pred, &pred, &w).unwrap(), 0.0);
}

#[test]
fn reconstruction_offset_on_one_dof_without_joint_term() {
    let model = model();
    let gt = standing_motion(&model.body, 3, 30.0).unwrap();
    let mut pred = gt.clone();
    pred.frames[1][0] += 0.3;
    let w = LossWeights {
        gamma_j: 0.0,
        ..LossWeights::default()
    };
    let loss = reconstruction_loss(model, &pred, &gt, &w).unwrap();
    assert!((loss - 2e3 * 0.09).abs() < 1e-9);
    let short = standing_motion(&model.body, 4, 30.0).unwrap();
    assert!(reconstruction_loss(model, &pred, &short, &w).is_err());
}

#[test]
fn force_loss_matches_l1_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut draw = |n: usize| -> Vec<DVector<f64>> {
        (0..4).map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-50.0..50.0))).collect()
    };
    let (lambda, tau, lambda_l, tau_l) = (draw(9), draw(12), draw(9), draw(12));
    let w = LossWeights::default();
    let mut oracle = 0.0;
    for t in 0..4 {
        oracle += 5.0 * (0..12).map(|i| (tau[t][i] - tau_l[t][i]).abs()).sum::<f64>();
        oracle += (0..9).map(|i| (lambda[t][i] - lambda_l[t][i]).abs()).sum::<f64>();
    }
    let loss = force_loss(&lambda, &tau, &lambda_l, &tau_l, &w).unwrap();
    assert!((loss - oracle).abs() <= 1e-12 * oracle);
}

#[test]
fn contact_loss_matches_per_vertex_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let frames: Vec<ContactFrame> = (0..6)
        .map(|_| {
            let n = 5;
            ContactFrame {
                positions: (0..n).map(|_| Vector3::from_fn(|_, _| rng.gen_range(-0.05..0.05))).collect(),
                velocities: (0..n).map(|_| Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0))).collect(),
                active: (0..n).map(|_| rng.gen_bool(0.5)).collect(),
            }
        })
        .collect();
    let mut oracle = 0.0;
    for f in &frames {
        let idx: Vec<usize> = (0..f.active.len()).filter(|&i| f.active[i]).collect();
        if idx.is_empty() {
            continue;
        }
        let mut s = 0.0;
        for &i in &idx {
            s += 100.0 * (f.velocities[i].x.abs() + f.velocities[i].y.abs() + f.velocities[i].z.abs());
            s += 200.0 * f.positions[i].z.abs();
        }
        oracle += s / idx.len() as f64;
    }
    let loss = contact_loss(&frames, &LossWeights::default()).unwrap();
    assert!((loss - oracle).abs() <= 1e-12 * oracle);
}

#[test]
fn euler_loss_of_zero_forces_on_a_static_pose_is_the_gravity_load() {
    let model = model();
    let seq = standing_motion(&model.body, 3, 30.0).unwrap();
    let zeros_l = vec![DVector::zeros(3 * model.body.contact_count()); 3];
    let zeros_t = vec![DVector::zeros(75); 3];
    let loss = euler_lagrange_loss(model, &seq, &zeros_l, &zeros_t).unwrap();
    // gradient of the potential energy by central differences
    let q0 = &seq.frames[0];
    let h = 1e-6;
    let g1: f64 = (0..75)
        .map(|k| {
            let mut qp = q0.clone();
            let mut qm = q0.clone();
            qp[k] += h;
            qm[k] -= h;
            ((potential_energy(model, &model.pose(&qp).unwrap()) - potential_energy(model, &model.pose(&qm).unwrap()))
                / (2.0 * h))
                .abs()
        })
        .sum();
    assert!((loss - 3.0 * g1).abs() <= 1e-6 * loss, "{loss} vs {}", 3.0 * g1);
    // the vertical base row alone carries the body weight
    assert!(g1 >= 70.0 * STANDARD_GRAVITY);
}

#[test]
fn euler_loss_grows_by_the_l1_norm_of_a_torque_perturbation() {
    let model = model();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let seq = random_motion(&mut rng, 4, 0.0, 0.05);
    let config = SolverConfig::for_model(model, ResidualMode::FullResidual);
    let (mut lambda, mut tau) = (Vec::new(), Vec::new());
    for o in solve_sequence(&seq, model, &config).unwrap() {
        let sol = o.result.unwrap();
        lambda.push(sol.lambda);
        tau.push(sol.tau);
    }
    assert_eq!(euler_lagrange_loss(model, &seq, &lambda, &tau).unwrap(), 0.0);
    let deltas: Vec<DVector<f64>> = (0..4).map(|_| DVector::from_fn(75, |_, _| rng.gen_range(-1.0..1.0))).collect();
    let shifted: Vec<_> = tau.iter().zip(&deltas).map(|(t, d)| t + d).collect();
    let expected: f64 = deltas.iter().map(|d| d.abs().sum()).sum();
    let loss = euler_lagrange_loss(model, &seq, &lambda, &shifted).unwrap();
    assert!((loss - expected).abs() <= 1e-9 * expected);
}

#[test]
fn bos_is_full_when_standing_and_empty_when_airborne() {
    let model = model();
    let standing = standing_motion(&model.body, 4, 30.0).unwrap();
    let mut airborne = standing.clone();
    for q in &mut airborne.frames {
        q[2] = 0.5;
    }
    let req: BTreeSet<_> = [Metric::Bos].into();
    assert_eq!(plausibility_metrics(model, &standing, None, &req).unwrap().bos, Some(100.0));
    assert_eq!(plausibility_metrics(model, &airborne, None, &req).unwrap().bos, Some(0.0));
}

#[test]
fn constant_speed_translation_gives_its_speed_as_vel() {
    let model = model();
    let gt = standing_motion(&model.body, 6, 30.0).unwrap();
    let mut pred = gt.clone();
    for (t, q) in pred.frames.iter_mut().enumerate() {
        q[0] = 0.003 * t as f64;
        q[1] = 0.004 * t as f64;
    }
    let r = plausibility_metrics(model, &pred, Some(&gt), &all_metrics()).unwrap();
    assert!((r.vel.unwrap() - 5.0).abs() < 1e-9);
    assert!(r.accl.unwrap() < 1e-9);
    // every sole vertex slides 5 mm per frame
    assert!((r.fs.unwrap() - 5.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accl_and_vel_ignore_a_shared_offset(seed in any::<u64>(), dx in -3.0..3.0f64, dy in -3.0..3.0f64, dz in -1.0..1.0f64) {
        let model = model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred = random_motion(&mut rng, 5, 0.0, 0.3);
        let gt = random_motion(&mut rng, 5, 0.0, 0.3);
        let shift = |s: &MotionSequence| {
            let mut s = s.clone();
            for q in &mut s.frames {
                q[0] += dx;
                q[1] += dy;
                q[2] += dz;
            }
            s
        };
        let req: BTreeSet<_> = [Metric::Accl, Metric::Vel].into();
        let a = plausibility_metrics(model, &pred, Some(&gt), &req).unwrap();
        let b = plausibility_metrics(model, &shift(&pred), Some(&shift(&gt)), &req).unwrap();
        prop_assert!((a.accl.unwrap() - b.accl.unwrap()).abs() <= 1e-8 * (1.0 + a.accl.unwrap()));
        prop_assert!((a.vel.unwrap() - b.vel.unwrap()).abs() <= 1e-8 * (1.0 + a.vel.unwrap()));
    }

    #[test]
    fn motion_above_the_plane_has_no_penetration(seed in any::<u64>()) {
        let model = model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_motion(&mut rng, 4, 2.0, 1.0);
        let r = plausibility_metrics(model, &seq, None, &[Metric::Gp].into()).unwrap();
        prop_assert_eq!(r.gp, Some(0.0));
    }

    #[test]
    fn metrics_stay_in_range(seed in any::<u64>()) {
        let model = model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred = random_motion(&mut rng, 5, 0.0, 0.4);
        let gt = random_motion(&mut rng, 5, 0.0, 0.4);
        let r = plausibility_metrics(model, &pred, Some(&gt), &all_metrics()).unwrap();
        for v in [r.accl, r.vel, r.fs, r.gp] {
            prop_assert!(v.unwrap() >= 0.0);
        }
        prop_assert!((0.0..=100.0).contains(&r.bos.unwrap()));
    }

    /// |L(x + δ) − L(x)| ≤ K‖δ‖ with K = max(γ)·√n for the L1 losses.
    #[test]
    fn force_and_contact_losses_are_lipschitz(seed in any::<u64>(), scale in 1e-6..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = LossWeights::default();
        let n = 9;
        let mut draw = |s: f64| DVector::from_fn(n, |_, _| rng.gen_range(-s..s));
        let (lambda, label, delta) = (vec![draw(10.0)], vec![draw(10.0)], draw(scale));
        let tau = vec![DVector::zeros(2)];
        let base = force_loss(&lambda, &tau, &label, &tau, &w).unwrap();
        let moved = force_loss(&[&lambda[0] + &delta], &tau, &label, &tau, &w).unwrap();
        prop_assert!((moved - base).abs() <= w.gamma_lambda * (n as f64).sqrt() * delta.norm() + 1e-12);

        let frame = |z: f64| ContactFrame {
            positions: vec![Vector3::new(0.0, 0.0, z)],
            velocities: vec![Vector3::new(0.1, 0.0, 0.0)],
            active: vec![true],
        };
        let z0 = rng.gen_range(-0.05..0.05);
        let dz = scale * rng.gen_range(-1.0..1.0);
        let c0 = contact_loss(&[frame(z0)], &w).unwrap();
        let c1 = contact_loss(&[frame(z0 + dz)], &w).unwrap();
        prop_assert!((c1 - c0).abs() <= w.gamma_z * dz.abs() + 1e-12);
    }

    #[test]
    fn total_is_exact_addition(a in 0.0..1e6f64, b in 0.0..1e6f64, c in 0.0..1e6f64, d in 0.0..1e6f64) {
        prop_assert_eq!(total_loss(a, b, c, d), a + b + c + d);
    }
}
