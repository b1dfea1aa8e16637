//! Stage presets shipped with the tool. The JSON files under `presets/` are
//! the source; they are embedded so the binary works without them.

use crate::config::{input_error, GenerationConfig};

pub const NAMES: [&str; 6] = ["L1", "L2-l", "L2-h", "L3-0", "L3-m", "L3-h"];

const TEXTS: [&str; 6] = [
    include_str!("../presets/L1.json"),
    include_str!("../presets/L2-l.json"),
    include_str!("../presets/L2-h.json"),
    include_str!("../presets/L3-0.json"),
    include_str!("../presets/L3-m.json"),
    include_str!("../presets/L3-h.json"),
];

pub fn text(name: &str) -> Option<&'static str> {
    NAMES.iter().position(|n| n.eq_ignore_ascii_case(name)).map(|i| TEXTS[i])
}

pub fn load(name: &str) -> anyhow::Result<GenerationConfig> {
    let text = text(name).ok_or_else(|| {
        input_error(format!("unknown preset `{name}`; available: {}", NAMES.join(", ")))
    })?;
    GenerationConfig::parse(text, &format!("preset {name}"))
}
