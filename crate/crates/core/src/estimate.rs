//! Tagged gap values shared by every method.

use serde::{Deserialize, Serialize};

use crate::model::SpikeParams;

/// How a gap value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    VariationalLower,
    StoquasticUpper,
    InstantonExponent,
    Wkb,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::VariationalLower => "variational_lower",
            Method::StoquasticUpper => "stoquastic_upper",
            Method::InstantonExponent => "instanton_exponent",
            Method::Wkb => "wkb",
        }
    }
}

/// Qualifiers attached to an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// The gap is below the resolution of the final precision.
    Unresolved,
    /// A bound carries no information (zero lower or infinite upper bound).
    Vacuous,
    /// The gap curve is not unimodal near the reported minimum.
    Multimodal,
    /// The scanned curve has no isolated minimum.
    Flat,
    /// The reported minimum sits on the edge of its search bracket.
    BracketEdge,
    /// The spike first excited level differs from the spikeless one.
    FirstExcitedShifted,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Unresolved => "unresolved",
            Flag::Vacuous => "vacuous",
            Flag::Multimodal => "multimodal",
            Flag::Flat => "flat",
            Flag::BracketEdge => "bracket_edge",
            Flag::FirstExcitedShifted => "first_excited_shifted",
        }
    }
}

/// A gap value with its provenance and precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    /// Gap of the normalised `H(s)`; may underflow to zero, see `log_value`.
    pub value: f64,
    /// Natural log of the gap.
    pub log_value: f64,
    pub method: Method,
    pub s: f64,
    pub n: usize,
    pub params: Option<SpikeParams>,
    pub precision_bits: usize,
    pub flags: Vec<Flag>,
}

impl GapEstimate {
    pub fn new(value: f64, method: Method, s: f64, n: usize, params: Option<SpikeParams>, precision_bits: usize) -> Self {
        Self { value, log_value: value.ln(), method, s, n, params, precision_bits, flags: Vec::new() }
    }

    pub fn with_flag(mut self, flag: Flag) -> Self {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
        self
    }

    pub fn has(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn is_resolved(&self) -> bool {
        !self.has(Flag::Unresolved)
    }
}
