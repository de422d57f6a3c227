//! Bundled calibrations and figure-reproduction presets.

use crate::grid::GridSpec;

pub const TABLE1: &str = include_str!("../../../presets/table1.json");
pub const TABLE2: &str = include_str!("../../../presets/table2.json");
pub const TABLE3: &str = include_str!("../../../presets/table3.json");

pub const NAMES: [&str; 3] = ["table1", "table2", "table3"];

/// Look up a bundled config by name, with or without the `.json` suffix.
pub fn by_name(name: &str) -> Option<&'static str> {
    match name.trim().trim_end_matches(".json") {
        "table1" => Some(TABLE1),
        "table2" => Some(TABLE2),
        "table3" => Some(TABLE3),
        _ => None,
    }
}

/// A sweep preset binding a calibration to its penalty grid.
#[derive(Debug, Clone)]
pub struct FigurePreset {
    pub name: &'static str,
    pub config: &'static str,
    pub grid: GridSpec,
}

/// Figure-data presets: `fig3` sweeps the homogeneous benchmark on
/// 0..10 step 0.25, `fig4` the six-agent heterogeneous calibration on
/// 0..40 step 1, `fig5` the four-agent flip calibration on a fine grid
/// around its diagonal crossing.
pub fn figure(name: &str) -> Option<FigurePreset> {
    let spec = |start, stop, step| GridSpec { start, stop, step };
    match name.trim() {
        "fig3" => Some(FigurePreset {
            name: "fig3",
            config: TABLE1,
            grid: spec(0.0, 10.0, 0.25),
        }),
        "fig4" => Some(FigurePreset {
            name: "fig4",
            config: TABLE2,
            grid: spec(0.0, 40.0, 1.0),
        }),
        "fig5" => Some(FigurePreset {
            name: "fig5",
            config: TABLE3,
            grid: spec(0.0, 10.0, 0.05),
        }),
        _ => None,
    }
}
