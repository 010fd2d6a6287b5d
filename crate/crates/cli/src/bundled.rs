//! Scenarios shipped with the binary, one or more per acceptance criterion.

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        /// `(name, TOML source)` for each bundled scenario.
        pub const SCENARIOS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../scenarios/", $name, ".toml"))),)*
        ];
    };
}

bundled!(
    "n8_flat_qk",
    "n8_gh_closed_4form",
    "q5_flat_einstein",
    "p6_flat_kahler_einstein",
    "l7_flat_einstein",
    "ode_exponential_family",
    "calabi_ricci_flat",
    "g2_as_ricci_flat",
    "spin7_ricci_flat",
    "hypercomplex_bundle_t4",
    "hypercomplex_instanton_t4",
    "balanced_m6",
    "balanced_conformal_n8",
    "moment_maps_flat",
    "reduced_metrics",
    "level_set_example1",
    "hkqk_roundtrip_example1",
    "property_checks",
);

pub fn names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(n, _)| *n)
}

pub fn get(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
