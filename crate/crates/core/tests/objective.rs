use proptest::prelude::*;
use std::path::PathBuf;
use topotraj::costs::{total_objective, CostBreakdown, StageConfig};
use topotraj::scenario::{parse_scenario, Scenario};
use topotraj::solver::{initialize, initialize_seeded, layout_for};
use topotraj::topology::InteractionPattern;
use topotraj::Vec2;

fn fixture(name: &str) -> Scenario {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    Scenario::from_file(path).unwrap()
}

fn breakdown(s: &Scenario, x: &[f64]) -> CostBreakdown {
    let mut stage = StageConfig::full(&s.weights);
    stage.topology_weight = s.weights.topology_stage2;
    stage.hinge.margin = 0.2;
    total_objective(s, x, &layout_for(s).unwrap(), &stage)
        .unwrap()
        .breakdown
}

fn translated(s: &Scenario, x: &[f64], d: Vec2) -> (Scenario, Vec<f64>) {
    let mut t = s.clone();
    t.arena.min += d;
    t.arena.max += d;
    for v in &mut t.vehicles {
        v.start.position += d;
        v.goal.position += d;
    }
    for o in &mut t.obstacles {
        o.center += d;
    }
    let layout = layout_for(s).unwrap();
    let mut dec = layout.decode(x).unwrap();
    for (q, _) in &mut dec {
        q.iter_mut().for_each(|p| *p += d);
    }
    (t, layout.encode(&dec).unwrap())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1.0)
}

fn assert_same(a: &CostBreakdown, b: &CostBreakdown) {
    for (name, u, v) in [
        ("effort", a.effort, b.effort),
        ("time", a.time, b.time),
        ("kinodynamic", a.kinodynamic, b.kinodynamic),
        ("collision", a.collision, b.collision),
        ("topology", a.topology, b.topology),
    ] {
        assert!(close(u, v), "{name}: {u} vs {v}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn costs_are_translation_invariant(
        seed in 0u64..1000,
        dx in -50.0..50.0f64,
        dy in -50.0..50.0f64,
        which in 0usize..3,
    ) {
        let s = fixture(["crossing4.toml", "corridor3.toml", "headon2.toml"][which]);
        let x = initialize_seeded(&s, seed, 0.4).unwrap();
        let (t, y) = translated(&s, &x, Vec2::new(dx, dy));
        assert_same(&breakdown(&s, &x), &breakdown(&t, &y));
    }
}

/// Renames vehicle `k` to `names[k]`, keeping every geometric relation.
fn relabeled(s: &Scenario, x: &[f64], names: &[&str]) -> (Scenario, Vec<f64>) {
    let layout = layout_for(s).unwrap();
    let dec = layout.decode(x).unwrap();
    let rename = |id: &str| -> String {
        s.vehicle_index(id)
            .map_or_else(|| id.to_string(), |k| names[k].to_string())
    };
    let mut pattern = InteractionPattern::new();
    for (a, b, label) in s.pattern.iter() {
        pattern.set(&rename(a), &rename(b), label).unwrap();
    }
    let mut order: Vec<usize> = (0..s.vehicles.len()).collect();
    order.sort_by_key(|&k| names[k]);
    let mut t = s.clone();
    t.pattern = pattern;
    t.vehicles = order
        .iter()
        .map(|&k| {
            let mut v = s.vehicles[k].clone();
            v.id = names[k].to_string();
            v
        })
        .collect();
    let dec: Vec<_> = order.iter().map(|&k| dec[k].clone()).collect();
    let y = layout_for(&t).unwrap().encode(&dec).unwrap();
    (t, y)
}

#[test]
fn objective_is_invariant_under_vehicle_relabeling() {
    let s = fixture("crossing4.toml");
    for seed in 0..10 {
        let x = initialize_seeded(&s, seed, 0.4).unwrap();
        let base = breakdown(&s, &x);
        for names in [
            ["d", "c", "b", "a"],
            ["b", "d", "a", "c"],
            ["c", "a", "d", "b"],
        ] {
            let (t, y) = relabeled(&s, &x, &names);
            assert_ne!(t.vehicles[0].start, s.vehicles[0].start);
            let other = breakdown(&t, &y);
            assert_eq!(base.effort.to_bits(), other.effort.to_bits());
            assert_eq!(base.total.to_bits(), other.total.to_bits(), "{names:?}");
        }
    }
}

#[test]
fn single_vehicle_reduces_to_effort_time_and_kinodynamic() {
    let s = parse_scenario(
        "name = \"one\"\n[arena]\nmin = [0.0, 0.0]\nmax = [10.0, 10.0]\n\
         [[vehicle]]\nid = \"a\"\nstart = [1.0, 1.0]\ngoal = [9.0, 6.0]\n",
    )
    .unwrap();
    let x = initialize_seeded(&s, 3, 0.5).unwrap();
    let b = breakdown(&s, &x);
    assert_eq!(b.collision, 0.0);
    assert_eq!(b.topology, 0.0);
    assert!(b.effort > 0.0 && b.time > 0.0);
    assert_eq!(b.total, b.effort + b.time + b.kinodynamic);
}

#[test]
fn distant_unconstrained_vehicles_have_no_pair_costs() {
    let s = parse_scenario(
        "name = \"apart\"\n[arena]\nmin = [0.0, 0.0]\nmax = [40.0, 40.0]\n\
         [[vehicle]]\nid = \"a\"\nstart = [1.0, 1.0]\ngoal = [9.0, 1.0]\n\
         [[vehicle]]\nid = \"b\"\nstart = [1.0, 30.0]\ngoal = [9.0, 30.0]\n\
         [[pattern.pair]]\na = \"a\"\nb = \"b\"\neta = 0\n",
    )
    .unwrap();
    let b = breakdown(&s, &initialize(&s).unwrap());
    assert_eq!(b.collision, 0.0);
    assert_eq!(b.topology, 0.0);
    assert!(b.total > 0.0);
}

#[test]
fn wrong_side_start_pays_more_topology() {
    let right = fixture("headon2.toml");
    let wrong = fixture("headon2_wrong_side.toml");
    let br = breakdown(&right, &initialize(&right).unwrap());
    let bw = breakdown(&wrong, &initialize(&wrong).unwrap());
    // the straight start sits on the boundary and only pays the margin
    assert_eq!(br.topology, right.weights.topology_stage2 * 0.2);
    assert!(bw.topology > br.topology);
}
