use crate::costs::Weights;
use crate::error::{Error, Result};
use crate::topology::{Interaction, InteractionPattern};
use crate::trajectory::BoundaryState;
use crate::Vec2;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// Radius of the disk enclosing a 0.85 m × 0.65 m vehicle body.
pub const DEFAULT_VEHICLE_RADIUS: f64 = 0.535;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arena {
    pub min: Vec2,
    pub max: Vec2,
}

impl Arena {
    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn size(&self) -> Vec2 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: String,
    pub start: BoundaryState,
    pub goal: BoundaryState,
    pub radius: f64,
    /// Piece count override; otherwise derived from the start–goal distance.
    pub pieces: Option<usize>,
    /// Lateral bow of the initial guess in metres, positive to the left of travel.
    pub init_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub id: String,
    pub center: Vec2,
    pub radius: f64,
}

/// A validated planning problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub arena: Arena,
    /// Sorted by id.
    pub vehicles: Vec<Vehicle>,
    /// Sorted by id.
    pub obstacles: Vec<Obstacle>,
    pub pattern: InteractionPattern,
    pub weights: Weights,
}

impl Scenario {
    pub fn vehicle_index(&self, id: &str) -> Option<usize> {
        self.vehicles.iter().position(|v| v.id == id)
    }

    pub fn obstacle_index(&self, id: &str) -> Option<usize> {
        self.obstacles.iter().position(|o| o.id == id)
    }

    /// Every vehicle with every pattern label set to `label`, obstacle labels kept.
    pub fn with_uniform_vehicle_pattern(&self, label: Interaction) -> Self {
        let mut out = self.clone();
        for (i, a) in self.vehicles.iter().enumerate() {
            for b in &self.vehicles[i + 1..] {
                out.pattern.set(&a.id, &b.id, label).expect("distinct ids");
            }
        }
        out
    }

    pub fn with_reversed_pattern(&self) -> Self {
        let mut out = self.clone();
        out.pattern = self.pattern.reversed();
        out
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        parse_scenario(&text).map_err(|e| match e {
            Error::Parse { message, location } => Error::Parse {
                message,
                location: Some(match location {
                    Some(l) => format!("{}: {l}", path.display()),
                    None => path.display().to_string(),
                }),
            },
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        serialize_scenario(self)
    }
}

// ---------------------------------------------------------------------------
// File schema

type P2 = [f64; 2];

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pieces: Option<usize>,
    arena: ArenaFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    limits: Option<LimitsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<WeightsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pattern: Option<PatternFile>,
    #[serde(default, rename = "vehicle")]
    vehicles: Vec<VehicleFile>,
    #[serde(default, rename = "obstacle", skip_serializing_if = "Vec::is_empty")]
    obstacles: Vec<ObstacleFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArenaFile {
    min: P2,
    max: P2,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsFile {
    v_max: Option<f64>,
    a_max: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    time: Option<f64>,
    topology_stage1: Option<f64>,
    topology_stage2: Option<f64>,
    kinodynamic: Option<f64>,
    collision: Option<f64>,
    d_safe: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<String>,
    #[serde(default, rename = "pair", skip_serializing_if = "Vec::is_empty")]
    pairs: Vec<PairFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairFile {
    a: String,
    b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleFile {
    id: String,
    start: P2,
    goal: P2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start_velocity: Option<P2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start_acceleration: Option<P2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    goal_velocity: Option<P2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    goal_acceleration: Option<P2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pieces: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    init_offset: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleFile {
    id: String,
    center: P2,
    radius: f64,
}

fn v2(p: P2) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn p2(v: &Vec2) -> P2 {
    [v.x, v.y]
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::parse(message, Some(field.into()))
}

fn check_finite(field: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(field_err(field, "values must be finite"))
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(field_err(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(field_err(field, format!("must be non-negative, got {v}")))
    }
}

fn label_of(field: &str, pair: &PairFile) -> Result<Interaction> {
    match (&pair.label, pair.eta) {
        (Some(_), Some(_)) => Err(field_err(field, "give either 'label' or 'eta', not both")),
        (Some(l), None) => Interaction::parse(l)
            .ok_or_else(|| field_err(field, format!("unknown interaction label '{l}'"))),
        (None, Some(e)) => Interaction::from_eta(e)
            .ok_or_else(|| field_err(field, format!("eta must be -1, 0 or 1, got {e}"))),
        (None, None) => Err(field_err(field, "missing 'label' or 'eta'")),
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let location = e.span().map(|span| {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}")
        });
        Error::parse(e.message().to_string(), location)
    })?;
    build(file)
}

fn build(file: ScenarioFile) -> Result<Scenario> {
    if file.name.trim().is_empty() {
        return Err(field_err("name", "must not be empty"));
    }
    check_finite(
        "arena",
        &[
            file.arena.min[0],
            file.arena.min[1],
            file.arena.max[0],
            file.arena.max[1],
        ],
    )?;
    let arena = Arena {
        min: v2(file.arena.min),
        max: v2(file.arena.max),
    };
    if !(arena.min.x < arena.max.x && arena.min.y < arena.max.y) {
        return Err(field_err("arena", "min must be below max on both axes"));
    }
    if let Some(p) = file.pieces {
        if p == 0 {
            return Err(field_err("pieces", "must be at least 1"));
        }
    }

    let mut weights = Weights::default();
    if let Some(l) = &file.limits {
        if let Some(v) = l.v_max {
            weights.v_max = positive("limits.v_max", v)?;
        }
        if let Some(a) = l.a_max {
            weights.a_max = positive("limits.a_max", a)?;
        }
    }
    if let Some(w) = &file.weights {
        let set = |slot: &mut f64, name: &str, v: Option<f64>| -> Result<()> {
            if let Some(v) = v {
                *slot = non_negative(&format!("weights.{name}"), v)?;
            }
            Ok(())
        };
        set(&mut weights.time, "time", w.time)?;
        set(
            &mut weights.topology_stage1,
            "topology_stage1",
            w.topology_stage1,
        )?;
        set(
            &mut weights.topology_stage2,
            "topology_stage2",
            w.topology_stage2,
        )?;
        set(&mut weights.kinodynamic, "kinodynamic", w.kinodynamic)?;
        set(&mut weights.collision, "collision", w.collision)?;
        if let Some(d) = w.d_safe {
            weights.d_safe = positive("weights.d_safe", d)?;
        }
    }

    let mut ids = BTreeSet::new();
    let mut vehicles = Vec::with_capacity(file.vehicles.len());
    for (i, v) in file.vehicles.into_iter().enumerate() {
        let f = |name: &str| format!("vehicle[{i}].{name}");
        if v.id.trim().is_empty() {
            return Err(field_err(f("id"), "must not be empty"));
        }
        if !ids.insert(v.id.clone()) {
            return Err(field_err(f("id"), format!("duplicate id '{}'", v.id)));
        }
        let mut all = vec![v.start[0], v.start[1], v.goal[0], v.goal[1]];
        for p in [
            v.start_velocity,
            v.start_acceleration,
            v.goal_velocity,
            v.goal_acceleration,
        ]
        .iter()
        .flatten()
        {
            all.extend_from_slice(p);
        }
        check_finite(&f("state"), &all)?;
        let start = BoundaryState {
            position: v2(v.start),
            velocity: v.start_velocity.map(v2).unwrap_or_else(Vec2::zeros),
            acceleration: v.start_acceleration.map(v2).unwrap_or_else(Vec2::zeros),
        };
        let goal = BoundaryState {
            position: v2(v.goal),
            velocity: v.goal_velocity.map(v2).unwrap_or_else(Vec2::zeros),
            acceleration: v.goal_acceleration.map(v2).unwrap_or_else(Vec2::zeros),
        };
        if !arena.contains(&start.position) {
            return Err(field_err(f("start"), "outside the arena"));
        }
        if !arena.contains(&goal.position) {
            return Err(field_err(f("goal"), "outside the arena"));
        }
        let radius = positive(&f("radius"), v.radius.unwrap_or(DEFAULT_VEHICLE_RADIUS))?;
        let pieces = v.pieces.or(file.pieces);
        if pieces == Some(0) {
            return Err(field_err(f("pieces"), "must be at least 1"));
        }
        let init_offset = v.init_offset.unwrap_or(0.0);
        check_finite(&f("init_offset"), &[init_offset])?;
        vehicles.push(Vehicle {
            id: v.id,
            start,
            goal,
            radius,
            pieces,
            init_offset,
        });
    }

    let mut obstacles = Vec::with_capacity(file.obstacles.len());
    for (i, o) in file.obstacles.into_iter().enumerate() {
        let f = |name: &str| format!("obstacle[{i}].{name}");
        if o.id.trim().is_empty() {
            return Err(field_err(f("id"), "must not be empty"));
        }
        if !ids.insert(o.id.clone()) {
            return Err(field_err(f("id"), format!("duplicate id '{}'", o.id)));
        }
        check_finite(&f("center"), &o.center)?;
        obstacles.push(Obstacle {
            center: v2(o.center),
            radius: positive(&f("radius"), o.radius)?,
            id: o.id,
        });
    }
    vehicles.sort_by(|a, b| a.id.cmp(&b.id));
    obstacles.sort_by(|a, b| a.id.cmp(&b.id));

    let pattern_file = file.pattern.unwrap_or_default();
    let mut explicit: BTreeMap<(String, String), Interaction> = BTreeMap::new();
    for (i, pair) in pattern_file.pairs.iter().enumerate() {
        let field = format!("pattern.pair[{i}]");
        let label = label_of(&field, pair)?;
        for id in [&pair.a, &pair.b] {
            if !ids.contains(id) {
                return Err(field_err(&field, format!("unknown id '{id}'")));
            }
        }
        if pair.a == pair.b {
            return Err(field_err(&field, "self-pair"));
        }
        let a_is_vehicle = vehicles.iter().any(|v| v.id == pair.a);
        let b_is_vehicle = vehicles.iter().any(|v| v.id == pair.b);
        if !a_is_vehicle && !b_is_vehicle {
            return Err(field_err(&field, "obstacle-obstacle pairs are meaningless"));
        }
        let key = if pair.a <= pair.b {
            (pair.a.clone(), pair.b.clone())
        } else {
            (pair.b.clone(), pair.a.clone())
        };
        if let Some(prev) = explicit.insert(key, label) {
            if prev != label {
                return Err(field_err(
                    &field,
                    format!(
                        "conflicting labels {prev} and {label} for pair ({}, {})",
                        pair.a, pair.b
                    ),
                ));
            }
        }
    }
    let default = match &pattern_file.default {
        Some(l) => Interaction::parse(l).ok_or_else(|| {
            field_err(
                "pattern.default",
                format!("unknown interaction label '{l}'"),
            )
        })?,
        None => Interaction::None,
    };
    let mut pattern = InteractionPattern::new();
    for (i, a) in vehicles.iter().enumerate() {
        for b in &vehicles[i + 1..] {
            pattern.set(&a.id, &b.id, default)?;
        }
    }
    for ((a, b), label) in &explicit {
        pattern.set(a, b, *label)?;
    }

    Ok(Scenario {
        name: file.name,
        arena,
        vehicles,
        obstacles,
        pattern,
        weights,
    })
}

/// Writes a scenario in the document format, with every label explicit.
pub fn serialize_scenario(s: &Scenario) -> String {
    let nonzero = |v: &Vec2| (v.norm() != 0.0).then(|| p2(v));
    let w = &s.weights;
    let file = ScenarioFile {
        name: s.name.clone(),
        pieces: None,
        arena: ArenaFile {
            min: p2(&s.arena.min),
            max: p2(&s.arena.max),
        },
        limits: Some(LimitsFile {
            v_max: Some(w.v_max),
            a_max: Some(w.a_max),
        }),
        weights: Some(WeightsFile {
            time: Some(w.time),
            topology_stage1: Some(w.topology_stage1),
            topology_stage2: Some(w.topology_stage2),
            kinodynamic: Some(w.kinodynamic),
            collision: Some(w.collision),
            d_safe: Some(w.d_safe),
        }),
        pattern: Some(PatternFile {
            default: None,
            pairs: s
                .pattern
                .iter()
                .map(|(a, b, l)| PairFile {
                    a: a.to_string(),
                    b: b.to_string(),
                    label: Some(l.name().to_string()),
                    eta: None,
                })
                .collect(),
        }),
        vehicles: s
            .vehicles
            .iter()
            .map(|v| VehicleFile {
                id: v.id.clone(),
                start: p2(&v.start.position),
                goal: p2(&v.goal.position),
                start_velocity: nonzero(&v.start.velocity),
                start_acceleration: nonzero(&v.start.acceleration),
                goal_velocity: nonzero(&v.goal.velocity),
                goal_acceleration: nonzero(&v.goal.acceleration),
                radius: Some(v.radius),
                pieces: v.pieces,
                init_offset: (v.init_offset != 0.0).then_some(v.init_offset),
            })
            .collect(),
        obstacles: s
            .obstacles
            .iter()
            .map(|o| ObstacleFile {
                id: o.id.clone(),
                center: p2(&o.center),
                radius: o.radius,
            })
            .collect(),
    };
    toml::to_string(&file).expect("scenario serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
name = "basic"

[arena]
min = [0.0, 0.0]
max = [10.0, 10.0]

[limits]
v_max = 3.0
a_max = 2.0

[[pattern.pair]]
a = "1"
b = "2"
label = "clockwise"

[[vehicle]]
id = "2"
start = [9.0, 5.0]
goal = [1.0, 5.0]

[[vehicle]]
id = "1"
start = [1.0, 5.0]
goal = [9.0, 5.0]
start_velocity = [0.5, 0.0]

[[obstacle]]
id = "rock"
center = [5.0, 8.0]
radius = 0.5
"#;

    #[test]
    fn parses_and_fills_defaults() {
        let s = parse_scenario(BASIC).unwrap();
        assert_eq!(s.vehicles.len(), 2);
        assert_eq!(s.vehicles[0].id, "1");
        assert_eq!(s.vehicles[0].start.velocity, Vec2::new(0.5, 0.0));
        assert_eq!(s.vehicles[1].goal.velocity, Vec2::zeros());
        assert_eq!(s.vehicles[1].radius, DEFAULT_VEHICLE_RADIUS);
        assert_eq!(s.weights.v_max, 3.0);
        assert_eq!(s.weights.time, 100.0);
        assert_eq!(s.obstacles[0].id, "rock");
    }

    #[test]
    fn labels_are_symmetric() {
        let s = parse_scenario(BASIC).unwrap();
        assert_eq!(s.pattern.get("1", "2"), Interaction::Clockwise);
        assert_eq!(s.pattern.get("2", "1"), Interaction::Clockwise);
        assert_eq!(s.pattern.get("1", "rock"), Interaction::None);
    }

    #[test]
    fn round_trip_is_stable() {
        let s = parse_scenario(BASIC).unwrap();
        let text = serialize_scenario(&s);
        let again = parse_scenario(&text).unwrap();
        assert_eq!(s, again);
        assert_eq!(serialize_scenario(&again), text);
    }

    fn expect_parse_error(text: &str, needle: &str) {
        match parse_scenario(text) {
            Err(Error::Parse { message, location }) => {
                let all = format!("{message} {}", location.unwrap_or_default());
                assert!(all.contains(needle), "'{all}' lacks '{needle}'");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_id_in_pattern() {
        expect_parse_error(&BASIC.replace("b = \"2\"", "b = \"7\""), "unknown id '7'");
    }

    #[test]
    fn conflicting_labels() {
        let text = format!("{BASIC}\n[[pattern.pair]]\na = \"2\"\nb = \"1\"\neta = -1\n");
        expect_parse_error(&text, "conflicting");
        let same = format!("{BASIC}\n[[pattern.pair]]\na = \"2\"\nb = \"1\"\neta = 1\n");
        assert!(parse_scenario(&same).is_ok());
    }

    #[test]
    fn schema_violations_carry_locations() {
        expect_parse_error(
            &BASIC.replace("radius = 0.5", "radius = -0.5"),
            "obstacle[0].radius",
        );
        expect_parse_error(
            &BASIC.replace("start = [9.0, 5.0]", "start = [19.0, 5.0]"),
            "vehicle[0].start",
        );
        expect_parse_error(&BASIC.replace("v_max = 3.0", "v_max = \"fast\""), "line");
        expect_parse_error(&BASIC.replace("[limits]", "[limits]\nbogus = 1"), "bogus");
        expect_parse_error(&BASIC.replace("id = \"rock\"", "id = \"1\""), "duplicate");
        expect_parse_error(
            &BASIC.replace("label = \"clockwise\"", "label = \"sideways\""),
            "sideways",
        );
    }

    #[test]
    fn default_label_applies_to_unlisted_vehicle_pairs() {
        let text = BASIC.replace(
            "[[pattern.pair]]",
            "[pattern]\ndefault = \"counterclockwise\"\n\n[[pattern.pair]]",
        );
        let text =
            format!("{text}\n[[vehicle]]\nid = \"3\"\nstart = [5.0, 1.0]\ngoal = [5.0, 9.0]\n");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.pattern.get("1", "2"), Interaction::Clockwise);
        assert_eq!(s.pattern.get("1", "3"), Interaction::CounterClockwise);
        assert_eq!(s.pattern.get("3", "2"), Interaction::CounterClockwise);
        assert_eq!(s.pattern.get("3", "rock"), Interaction::None);
    }

    #[test]
    fn garbage_never_panics() {
        for text in [
            "",
            "name = 3",
            "\u{0}\u{1}",
            "[[vehicle]]\nid=1",
            "name=\"x\"\n[arena]\nmin=[0,0]\nmax=[0,0]",
        ] {
            assert!(parse_scenario(text).is_err());
        }
    }
}
