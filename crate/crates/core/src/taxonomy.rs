//! Semantic class codes shared by pseudo-labels, annotations and ground truth.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of trainable classes.
pub const NUM_CLASSES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid class code {0}")]
pub struct InvalidClass(pub u8);

/// A semantic class code. Valid codes are `0..=4`, [`ClassId::TREE`] and
/// [`ClassId::IGNORE`]; the codes are part of the on-disk contract.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ClassId(u8);

impl ClassId {
    pub const ROAD: ClassId = ClassId(0);
    pub const SIDEWALK: ClassId = ClassId(1);
    pub const BUILDING: ClassId = ClassId(2);
    pub const VEHICLE: ClassId = ClassId(3);
    pub const VRU: ClassId = ClassId(4);
    /// Structural-teacher tree/vegetation prediction. Never a training target.
    pub const TREE: ClassId = ClassId(254);
    /// IGNORE on the pseudo-label side, VOID on the annotation side.
    pub const IGNORE: ClassId = ClassId(255);
    pub const VOID: ClassId = ClassId::IGNORE;

    pub const TRAINABLE: [ClassId; NUM_CLASSES] = [
        ClassId::ROAD,
        ClassId::SIDEWALK,
        ClassId::BUILDING,
        ClassId::VEHICLE,
        ClassId::VRU,
    ];
    pub const STATIC: [ClassId; 3] = [ClassId::ROAD, ClassId::SIDEWALK, ClassId::BUILDING];
    pub const DYNAMIC: [ClassId; 2] = [ClassId::VEHICLE, ClassId::VRU];

    pub const fn new(code: u8) -> Result<Self, InvalidClass> {
        if Self::is_valid_code(code) {
            Ok(ClassId(code))
        } else {
            Err(InvalidClass(code))
        }
    }

    pub const fn is_valid_code(code: u8) -> bool {
        code < NUM_CLASSES as u8 || code == 254 || code == 255
    }

    /// Trainable class from its dense index `0..5`.
    pub fn from_index(index: usize) -> Option<Self> {
        Self::TRAINABLE.get(index).copied()
    }

    pub const fn code(self) -> u8 {
        self.0
    }

    /// Dense index for trainable classes.
    pub fn index(self) -> Option<usize> {
        self.is_trainable().then_some(self.0 as usize)
    }

    pub const fn is_trainable(self) -> bool {
        self.0 < NUM_CLASSES as u8
    }

    pub const fn is_ignore(self) -> bool {
        self.0 == 255
    }

    pub const fn is_static(self) -> bool {
        self.0 <= 2
    }

    pub const fn is_dynamic(self) -> bool {
        self.0 == 3 || self.0 == 4
    }

    pub const fn name(self) -> &'static str {
        match self.0 {
            0 => "road",
            1 => "sidewalk",
            2 => "building",
            3 => "vehicle",
            4 => "vru",
            254 => "tree",
            _ => "ignore",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [ClassId::ROAD, ClassId::SIDEWALK, ClassId::BUILDING, ClassId::VEHICLE, ClassId::VRU, ClassId::TREE, ClassId::IGNORE]
            .into_iter()
            .find(|c| c.name() == name)
    }
}

impl Default for ClassId {
    fn default() -> Self {
        ClassId::IGNORE
    }
}

impl TryFrom<u8> for ClassId {
    type Error = InvalidClass;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        ClassId::new(code)
    }
}

impl From<ClassId> for u8 {
    fn from(c: ClassId) -> u8 {
        c.0
    }
}

impl fmt::Debug for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.0)
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_listed_codes_are_valid() {
        let valid: Vec<u8> = (0..=255u8).filter(|&c| ClassId::new(c).is_ok()).collect();
        assert_eq!(valid, vec![0, 1, 2, 3, 4, 254, 255]);
    }

    #[test]
    fn groups_partition_trainable_classes() {
        for c in ClassId::TRAINABLE {
            assert!(c.is_static() ^ c.is_dynamic(), "{c:?}");
        }
        assert!(!ClassId::IGNORE.is_static() && !ClassId::IGNORE.is_dynamic());
        assert!(!ClassId::TREE.is_trainable());
    }

    #[test]
    fn serde_rejects_invalid_code() {
        assert_eq!(serde_json::to_string(&ClassId::VRU).unwrap(), "4");
        assert!(serde_json::from_str::<ClassId>("7").is_err());
        assert_eq!(serde_json::from_str::<ClassId>("255").unwrap(), ClassId::IGNORE);
    }
}
