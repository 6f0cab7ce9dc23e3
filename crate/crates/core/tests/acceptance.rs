//! One line per criterion: `[PASS]` or `[FAIL]`, a name, and the measured values.

use std::time::{Duration, Instant};

use decouple_core::decoupling::{apply_constraint, ConstraintState, DecouplingParams, RealMotion};
use decouple_core::dynamics::{BodyKind, BodyRole, MaterialParams, RigidBody, World, WorldConfig};
use decouple_core::experiment::*;
use decouple_core::math::{Pose, UnitQuaternion, Vec3};
use decouple_core::scenario::Scenario;
use decouple_core::Condition;

const G: f64 = 9.81;

fn report(id: &str, name: &str, pass: bool, detail: String, elapsed: Duration) {
    let tag = if pass { "PASS" } else { "FAIL" };
    // Straight to stdout so the line shows without --nocapture.
    let line = format!("[{tag}] criterion {id} {name}: {detail} ({:.2}s)\n", elapsed.as_secs_f64());
    let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), line.as_bytes());
}

fn released_clone(offset: Vec3) -> RigidBody {
    let p = DecouplingParams::default();
    let mut b = RigidBody::new_box(
        BodyKind::Dynamic,
        BodyRole::EffectorClone,
        p.clone_mass,
        Vec3::splat(0.0175),
        Pose::from_position(offset),
        MaterialParams::default(),
    )
    .unwrap();
    b.inertia = p.clone_inertia;
    b
}

#[test]
fn criterion_1_critically_damped_return() {
    let start = Instant::now();
    let p = DecouplingParams::default();
    let dt = 1.0 / 240.0;
    let d0 = 0.02;

    // Through the world, with nothing to touch.
    let mut world = World::new(WorldConfig { ground_height: None, ..Default::default() }).unwrap();
    world.attach_effector(Vec3::splat(0.0175), Pose::IDENTITY, Default::default()).unwrap();
    let clone = world.effector().unwrap().body;
    world.body_mut(clone).unwrap().pose.position = Vec3::new(d0, 0.0, 0.0);

    let mut sign_ok = true;
    let mut settled_at = None;
    let mut at_009 = f64::NAN;
    for i in 1..=240 {
        world.step(&[]).unwrap();
        let d = world.effector().unwrap().state.d;
        let t = i as f64 * dt;
        if d.x < -1e-4 * d0 {
            sign_ok = false;
        }
        if settled_at.is_none() && d.norm() < 0.02 * d0 {
            settled_at = Some(t);
        }
        if (t - 0.09).abs() < dt / 2.0 {
            at_009 = d.norm() / d0;
        }
    }
    // (1 + x)·e^{−x} = 0.02
    let mut x: f64 = 5.8;
    for _ in 0..50 {
        x -= ((1.0 + x) * (-x).exp() - 0.02) / (-x * (-x).exp());
    }
    let analytic = x / p.linear_natural_frequency();
    let settled = settled_at.unwrap_or(f64::INFINITY);
    let elapsed = start.elapsed();
    let pass = sign_ok
        && at_009 < 0.02
        && (settled - analytic).abs() <= 0.2 * analytic
        && elapsed < Duration::from_secs(1);
    report(
        "1",
        "critically-damped return",
        pass,
        format!("no sign change={sign_ok}, |d|/d0 at 0.09 s={at_009:.5}, 2% settling {settled:.4} s vs analytic {analytic:.4} s"),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn criterion_2_exact_update() {
    let start = Instant::now();
    let p = DecouplingParams::default();
    let mut clone = released_clone(Vec3::new(0.02, 0.0, 0.0));
    let mut state = ConstraintState::new(&p);
    apply_constraint(&mut clone, &mut state, &RealMotion::stationary(Pose::IDENTITY), &p, 0.01).unwrap();
    let (dx, vx) = (state.d.x, clone.linear_velocity.x);
    let pass = (dx - 0.016835).abs() < 1e-6 && (vx + 0.493069).abs() < 1e-6;
    report("2", "exact-update correctness", pass, format!("d_x={dx:.7} m, v_x={vx:.7} m/s"), start.elapsed());
    assert!(pass);
}

#[test]
fn criterion_3_quasi_static_decoupling() {
    let start = Instant::now();
    let s = Scenario::default();
    let k = s.decoupling.linear_stiffness;
    let mut pass = true;
    let mut parts = Vec::new();
    for mass in [0.015, 0.2, 0.8] {
        let out = run_push_trial(&s, &[mass], Condition::Decoupled).unwrap();
        let expected = 0.8 * mass * G / k;
        let err = (out.peaks[0] - expected).abs() / expected;
        pass &= err <= 0.10;
        parts.push(format!("{} g: {:.3} mm vs {:.3} mm ({:+.1}%)", mass * 1e3, out.peaks[0] * 1e3, expected * 1e3, err * 100.0));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    report("3", "quasi-static decoupling law", pass, parts.join(", "), elapsed);
    assert!(pass);
}

#[test]
fn criterion_4_sorting_direction() {
    let start = Instant::now();
    let s = Scenario::default();
    let obs = ObserverModel::default();
    let c2 = run_sorting_batch(&s, &obs, Condition::Decoupled, 10, 7).unwrap();
    let c1 = run_sorting_batch(&s, &obs, Condition::Coupled, 10, 7).unwrap();
    let c2_correct = c2.iter().filter(|r| r.correct).count();
    let c1_answered = c1.iter().filter(|r| r.answer.is_answered()).count();
    let c1_dont_know = c1.iter().all(|r| r.answer == TrialAnswer::DontKnow);
    let elapsed = start.elapsed();
    let pass = c2_correct == 10 && c1_answered == 0 && c1_dont_know && elapsed < Duration::from_secs(30);
    report(
        "4",
        "sorting direction",
        pass,
        format!("C2 {c2_correct}/10 correct, C1 {c1_answered}/10 answered (all don't know={c1_dont_know})"),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn criterion_5_staircase_mechanics() {
    let start = Instant::now();
    // (a) hard threshold at 150 g above a 15 g reference
    let t = 0.150;
    let a = run_staircase(staircase_init(0.015).unwrap(), |s| {
        if s.difference() > t {
            StaircaseAnswer::Perceived
        } else {
            StaircaseAnswer::NotPerceived
        }
    })
    .unwrap();
    let pass_a = (a.jnd - t).abs() <= 0.0125;

    // (b) halving schedule and (c) termination, for every standard starting point and
    // a simulated observer
    let mut pass_b = true;
    let mut pass_c = true;
    let s = Scenario::default();
    let obs = ObserverModel::default();
    for &(reference, _, step0) in &INITIAL_PARAMETERS {
        let mut st = staircase_init(reference).unwrap();
        let mut id = 0;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        while !st.finished {
            id += 1;
            let trial = run_comparison_trial(&s, &st, &obs, id, id, &mut rng).unwrap();
            st.update(trial.answer).unwrap();
            pass_b &= st.step_size == step0 / f64::powi(2.0, (st.reversal_count / 2) as i32);
            pass_c &= st.reversal_count <= REVERSALS_TO_FINISH;
        }
        pass_c &= st.reversal_count == REVERSALS_TO_FINISH && st.reversal_differences.len() == 10;
        pass_c &= st.clone().update(StaircaseAnswer::Perceived).is_err();
    }

    // (d) JND arithmetic
    let mut fixture = staircase_init(0.2).unwrap();
    fixture.reversal_differences =
        [100.0, 150.0, 125.0, 100.0, 112.5, 100.0, 112.5, 106.25, 100.0, 106.25].map(|g| g / 1e3).to_vec();
    fixture.reversal_count = 10;
    fixture.finished = true;
    let d = jnd_estimate(&fixture).unwrap().jnd;
    let pass_d = (d - 0.1078125).abs() < 1e-12;

    let elapsed = start.elapsed();
    let pass = pass_a && pass_b && pass_c && pass_d && elapsed < Duration::from_secs(10);
    report(
        "5",
        "staircase mechanics",
        pass,
        format!(
            "(a) JND {:.4} g vs T 150 g, (b) schedule={pass_b}, (c) ten reversals={pass_c}, (d) fixture {:.4} g",
            a.jnd * 1e3,
            d * 1e3
        ),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn criterion_6_jnd_monotonicity() {
    let start = Instant::now();
    let s = Scenario::default();
    let refs = [0.015, 0.2, 0.8];
    let floored = run_interleaved_staircases(&s, &refs, &ObserverModel::default(), 1).unwrap();
    let zero = ObserverModel { displacement_floor: 0.0, ..Default::default() };
    let unfloored = run_interleaved_staircases(&s, &refs, &zero, 1).unwrap();

    let j: Vec<f64> = floored.results.iter().map(|r| r.jnd).collect();
    let pass_a = j[0] < j[1] && j[1] < j[2];

    let ratios: Vec<f64> = unfloored.results.iter().map(|r| r.jnd / r.reference_mass).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| (r - mean).abs() / mean).fold(0.0, f64::max);
    let pass_b = spread <= 0.15;

    // Weber prediction without a floor: the comparison is seen once its
    // signal exceeds the reference's by a factor 1/(1 − w).
    let w = zero.weber_fraction;
    let predicted = 0.015 * w / (1.0 - w);
    let pass_c = j[0] > predicted;

    let elapsed = start.elapsed();
    let pass = pass_a && pass_b && pass_c && elapsed < Duration::from_secs(120);
    report(
        "6",
        "JND monotonicity",
        pass,
        format!(
            "(a) JND {:.3} < {:.3} < {:.3} g: {pass_a}; (b) zero-floor JND/ref {:.3}, {:.3}, {:.3}, max deviation {:.1}% (limit 15%): {pass_b}; \
             (c) floored 15 g JND {:.3} g vs zero-floor Weber prediction {:.3} g (simulated zero-floor {:.3} g): {pass_c}",
            j[0] * 1e3,
            j[1] * 1e3,
            j[2] * 1e3,
            ratios[0],
            ratios[1],
            ratios[2],
            spread * 100.0,
            j[0] * 1e3,
            predicted * 1e3,
            unfloored.results[0].jnd * 1e3,
        ),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn criterion_7_conservation_and_determinism() {
    let start = Instant::now();

    // Frictionless two-body impacts.
    let mut worst_momentum: f64 = 0.0;
    let slick = MaterialParams { friction_coefficient: 0.0, restitution: 0.0 };
    for (vx, vy, dy, ma, mb) in [(1.0, 0.0, 0.0, 0.2, 0.2), (0.5, 0.2, 0.01, 0.015, 0.8), (2.0, -0.3, -0.015, 0.8, 0.05)] {
        let mut w = World::new(WorldConfig { gravity: Vec3::ZERO, ground_height: None, ..Default::default() }).unwrap();
        let a = w.add_body(RigidBody::cube(ma, 0.035, Vec3::ZERO, slick).unwrap());
        w.add_body(RigidBody::cube(mb, 0.035, Vec3::new(0.06, dy, 0.0), slick).unwrap());
        w.body_mut(a).unwrap().linear_velocity = Vec3::new(vx, vy, 0.0);
        let p0 = w.object_momentum();
        for _ in 0..120 {
            w.step(&[]).unwrap();
            worst_momentum = worst_momentum.max((w.object_momentum() - p0).norm());
        }
    }
    let pass_momentum = worst_momentum < 1e-9;

    // Constraint energy of an isolated clone.
    let p = DecouplingParams::default();
    let mut worst_rise = f64::NEG_INFINITY;
    for (offset, rot, vel) in [
        (Vec3::new(0.02, 0.0, 0.0), Vec3::ZERO, Vec3::ZERO),
        (Vec3::new(-0.01, 0.03, 0.005), Vec3::new(0.2, -0.1, 0.4), Vec3::new(0.3, 0.0, -0.2)),
        (Vec3::new(0.0, 0.0, 0.05), Vec3::new(0.0, 1.0, 0.0), Vec3::new(-1.0, 1.0, 0.0)),
    ] {
        let mut clone = released_clone(offset);
        clone.pose.orientation = UnitQuaternion::from_rotation_vector(rot);
        clone.linear_velocity = vel;
        let mut state = ConstraintState::new(&p);
        let mut e_prev = f64::INFINITY;
        for _ in 0..480 {
            apply_constraint(&mut clone, &mut state, &RealMotion::stationary(Pose::IDENTITY), &p, 1.0 / 240.0).unwrap();
            let e = state.energy(&p);
            worst_rise = worst_rise.max(e - e_prev);
            e_prev = e;
        }
    }
    let pass_energy = worst_rise <= 1e-9;

    // Byte-identical output.
    let s = Scenario::default();
    let csv = |seed| {
        let run = run_interleaved_staircases(&s, &[0.015], &ObserverModel::default(), seed).unwrap();
        trials_csv_string(&run.records).unwrap()
    };
    let noisy = ObserverModel { noise_sd: 0.1, ..Default::default() };
    let sort_csv = |seed| trials_csv_string(&run_sorting_batch(&s, &noisy, Condition::Decoupled, 4, seed).unwrap()).unwrap();
    let pass_bytes = csv(1) == csv(1) && sort_csv(3) == sort_csv(3);

    let pass = pass_momentum && pass_energy && pass_bytes;
    report(
        "7",
        "conservation and determinism",
        pass,
        format!(
            "max |Δp| {worst_momentum:.2e} kg·m/s, max energy rise {worst_rise:.2e} J, identical CSV={pass_bytes}"
        ),
        start.elapsed(),
    );
    assert!(pass);
}
