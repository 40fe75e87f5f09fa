use std::path::PathBuf;
use topotraj::scenario::{parse_scenario, Scenario};
use topotraj::solver::{
    initialize_seeded, optimize_from, two_stage_optimize, Schedule, SolverOptions,
};
use topotraj::topology::{classify_interaction, pair_window, Interaction};
use topotraj::trajectory::Trajectory;

fn fixture(name: &str) -> Scenario {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    Scenario::from_file(path).unwrap()
}

fn metric(a: &Trajectory, b: &Trajectory) -> f64 {
    classify_interaction(a, b, pair_window(a, b), 0.0)
        .unwrap()
        .1
}

#[test]
fn stage_one_exit_holds_when_rechecked() {
    let opts = SolverOptions {
        schedule: Schedule::StageOneOnly,
        ..Default::default()
    };
    for name in [
        "crossing4.toml",
        "corridor3.toml",
        "headon2_wrong_side.toml",
    ] {
        let s = fixture(name);
        for seed in 0..4 {
            let x0 = initialize_seeded(&s, seed, 0.3).unwrap();
            let sol = optimize_from(&s, &x0, &opts).unwrap();
            assert_eq!(sol.report.stages.len(), 1);
            if !sol.report.stages[0].topology_satisfied {
                continue;
            }
            let trajs = &sol.trajectories;
            for (a, b, label) in s.pattern.iter() {
                let (Some(i), Some(j)) = (s.vehicle_index(a), s.vehicle_index(b)) else {
                    continue;
                };
                if label == Interaction::None {
                    continue;
                }
                let m = metric(&trajs[i], &trajs[j]);
                assert!(
                    f64::from(label.eta()) * m <= -opts.topology_margin,
                    "{name} seed {seed} {a}-{b}: M = {m}"
                );
            }
        }
    }
}

#[test]
fn unconstrained_pattern_skips_stage_one() {
    let s = parse_scenario(
        "name = \"free\"\n[arena]\nmin = [0.0, 0.0]\nmax = [10.0, 10.0]\n\
         [pattern]\ndefault = \"none\"\n\
         [[vehicle]]\nid = \"a\"\nstart = [1.0, 1.0]\ngoal = [9.0, 9.0]\n\
         [[vehicle]]\nid = \"b\"\nstart = [9.0, 1.0]\ngoal = [1.0, 9.0]\n",
    )
    .unwrap();
    let (_, rep) = two_stage_optimize(&s, &SolverOptions::default()).unwrap();
    assert_eq!(rep.stages[0].iterations, 0);
    assert!(rep.stages[0].topology_satisfied);
    assert!(rep.feasibility.passed);
}

#[test]
fn reports_are_deterministic() {
    let s = fixture("corridor3.toml");
    let (t1, mut r1) = two_stage_optimize(&s, &SolverOptions::default()).unwrap();
    let (t2, mut r2) = two_stage_optimize(&s, &SolverOptions::default()).unwrap();
    r1.wall_clock_ms = 0.0;
    r2.wall_clock_ms = 0.0;
    r1.metrics.computation_ms = 0.0;
    r2.metrics.computation_ms = 0.0;
    assert_eq!(r1, r2);
    for (a, b) in t1.iter().zip(&t2) {
        assert_eq!(a.pieces(), b.pieces());
        assert_eq!(a.durations(), b.durations());
    }
}

#[test]
fn pair_flags_agree_with_metric_signs() {
    let s = fixture("crossing4.toml");
    let (trajs, rep) = two_stage_optimize(&s, &SolverOptions::default()).unwrap();
    assert_eq!(rep.pairs.len(), 6);
    for p in &rep.pairs {
        assert_eq!(p.satisfied, f64::from(p.eta) * p.metric < 0.0);
        let (i, j) = (
            s.vehicle_index(&p.a).unwrap(),
            s.vehicle_index(&p.b).unwrap(),
        );
        assert!((metric(&trajs[i], &trajs[j]) - p.metric).abs() < 1e-9);
    }
    assert_eq!(rep.all_satisfied, rep.pairs.iter().all(|p| p.satisfied));
}

#[test]
fn successful_runs_pass_an_independent_dense_audit() {
    for name in ["crossing4.toml", "corridor3.toml"] {
        let s = fixture(name);
        let (trajs, rep) = two_stage_optimize(&s, &SolverOptions::default()).unwrap();
        assert!(rep.success(), "{name}");
        let w = &s.weights;
        let horizon = trajs
            .iter()
            .map(Trajectory::total_duration)
            .fold(0.0, f64::max);
        let n = 3000;
        for k in 0..=n {
            let t = horizon * k as f64 / n as f64;
            let states: Vec<_> = trajs.iter().map(|tr| tr.probe(t).state).collect();
            for (i, a) in states.iter().enumerate() {
                assert!(a.velocity.norm() <= 1.01 * w.v_max, "{name} speed at {t}");
                assert!(
                    a.acceleration.norm() <= 1.05 * w.a_max,
                    "{name} accel at {t}"
                );
                for b in &states[i + 1..] {
                    assert!(
                        (a.position - b.position).norm() >= 0.99 * w.d_safe,
                        "{name} gap at {t}"
                    );
                }
                for o in &s.obstacles {
                    assert!(
                        (a.position - o.center).norm() >= 0.99 * (o.radius + s.vehicles[i].radius),
                        "{name} obstacle at {t}"
                    );
                }
            }
        }
        for (v, tr) in s.vehicles.iter().zip(&trajs) {
            assert!((tr.end_position() - v.goal.position).norm() < 1e-9);
            assert!((tr.start_position() - v.start.position).norm() < 1e-9);
        }
    }
}

#[test]
fn stage_one_only_skips_the_collision_audit() {
    let s = fixture("headon2.toml");
    let opts = SolverOptions {
        schedule: Schedule::StageOneOnly,
        ..Default::default()
    };
    let (_, rep) = two_stage_optimize(&s, &opts).unwrap();
    assert_eq!(rep.stages.len(), 1);
    assert!(!rep.feasibility.collision_checked);
}

#[test]
fn invalid_options_are_rejected() {
    let s = fixture("headon2.toml");
    let opts = SolverOptions {
        topology_margin: -1.0,
        ..Default::default()
    };
    assert!(two_stage_optimize(&s, &opts).is_err());
}
