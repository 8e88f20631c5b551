//! Bundled maps.

use crate::world::GridMap;

pub const OPEN_10: &str = include_str!("../maps/open_10x10.txt");
pub const OPEN_20: &str = include_str!("../maps/open_20x20.txt");
pub const OPEN_40: &str = include_str!("../maps/open_40x40.txt");
/// Synthetic 62×46 wharf with 1297 navigable nodes: west and east finger
/// piers, a breakwater and a narrow harbour mouth.
pub const WHARF: &str = include_str!("../maps/wharf_62x46.txt");

/// Looks up a bundled map by name (`open10`, `open20`, `open40`, `wharf`).
pub fn bundled(name: &str) -> Option<GridMap> {
    let text = match name {
        "open10" => OPEN_10,
        "open20" => OPEN_20,
        "open40" => OPEN_40,
        "wharf" => WHARF,
        _ => return None,
    };
    Some(GridMap::parse(text).expect("bundled maps are well formed"))
}
