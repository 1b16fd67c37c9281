//! Built-in scenarios and the scenario JSON schema.

/// `(name, JSON text)` for every built-in scenario.
pub const SCENARIOS: [(&str, &str); 5] = [
    ("trivial_r2", include_str!("../scenarios/trivial_r2.json")),
    ("circle_mobius", include_str!("../scenarios/circle_mobius.json")),
    ("torus_grid", include_str!("../scenarios/torus_grid.json")),
    ("sphere_octa", include_str!("../scenarios/sphere_octa.json")),
    (
        "abstract_k1_nonorientable",
        include_str!("../scenarios/abstract_k1_nonorientable.json"),
    ),
];

pub const SCHEMA: &str = include_str!("../schema/scenario.schema.json");

pub fn get(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
