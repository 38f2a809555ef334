use super::{parse_scenario, Scenario, ScenarioError};

macro_rules! entries {
    ($($name:literal),* $(,)?) => {
        const ENTRIES: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../../catalog/", $name, ".scn")))),*
        ];
    };
}

entries!(
    "fig2_signalling",
    "fig3_bell",
    "fig4_cloning",
    "fig5_summoning",
    "fig6_bc",
    "fig7_bc_classical",
    "fig8_bc_defeat",
    "fig9_excluded",
    "fig10_relbc_rounds",
    "fig11_infocausality",
    "sec33_teleport",
);

pub fn catalog_names() -> Vec<&'static str> {
    ENTRIES.iter().map(|(n, _)| *n).collect()
}

pub fn catalog_source(name: &str) -> Option<&'static str> {
    ENTRIES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Parse a built-in scenario. `None` for an unknown name.
pub fn load_catalog(name: &str) -> Option<Result<Scenario, ScenarioError>> {
    catalog_source(name).map(parse_scenario)
}
