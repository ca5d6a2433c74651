//! Model documents shipped in `models/`, embedded at compile time.

use crate::error::Result;
use crate::files::{parse_model, Model};

pub const DIAGONAL: &str = include_str!("../models/diagonal.json");
pub const ROTATION: &str = include_str!("../models/rotation.json");
pub const PHASE_PLUS: &str = include_str!("../models/phase_plus.json");
pub const UNITARY_MIXED: &str = include_str!("../models/unitary_mixed.json");
pub const AMPLITUDE_DAMPING: &str = include_str!("../models/amplitude_damping.json");
pub const QUTRIT: &str = include_str!("../models/qutrit.json");

/// `(file stem, document)` for every bundled model.
pub const ALL: [(&str, &str); 6] = [
    ("diagonal", DIAGONAL),
    ("rotation", ROTATION),
    ("phase_plus", PHASE_PLUS),
    ("unitary_mixed", UNITARY_MIXED),
    ("amplitude_damping", AMPLITUDE_DAMPING),
    ("qutrit", QUTRIT),
];

pub fn load(stem: &str) -> Option<Result<Model>> {
    ALL.iter()
        .find(|(name, _)| *name == stem)
        .map(|(_, text)| parse_model(text))
}
