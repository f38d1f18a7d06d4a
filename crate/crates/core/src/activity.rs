use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Ground-truth climbing activity attached to a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Idle,
    Clip,
    Ascend,
    Rest,
    Lowering,
    RopePull,
}

impl Activity {
    pub const ALL: [Activity; 6] = [
        Activity::Idle,
        Activity::Clip,
        Activity::Ascend,
        Activity::Rest,
        Activity::Lowering,
        Activity::RopePull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Idle => "idle",
            Activity::Clip => "clip",
            Activity::Ascend => "ascend",
            Activity::Rest => "rest",
            Activity::Lowering => "lowering",
            Activity::RopePull => "rope_pull",
        }
    }

    pub fn is_lowering(self) -> bool {
        self == Activity::Lowering
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown activity `{0}`")]
pub struct UnknownActivity(pub String);

impl FromStr for Activity {
    type Err = UnknownActivity;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        match norm.as_str() {
            "idle" => Ok(Activity::Idle),
            "clip" => Ok(Activity::Clip),
            "ascend" => Ok(Activity::Ascend),
            "rest" => Ok(Activity::Rest),
            "lowering" => Ok(Activity::Lowering),
            "rope_pull" | "ropepull" => Ok(Activity::RopePull),
            _ => Err(UnknownActivity(s.to_string())),
        }
    }
}

/// Binary window label used by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NotLowering,
    Lowering,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::NotLowering => 0,
            Label::Lowering => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 1 {
            Label::Lowering
        } else {
            Label::NotLowering
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NotLowering => "not_lowering",
            Label::Lowering => "lowering",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = UnknownActivity;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "lowering" | "1" => Ok(Label::Lowering),
            "not_lowering" | "0" => Ok(Label::NotLowering),
            other => Err(UnknownActivity(other.to_string())),
        }
    }
}
