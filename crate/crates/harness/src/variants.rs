//! Solver variant labels as used in matrices, CSV files and on the command line.
//!
//! A trailing `*` selects the three-case radius rule, so `rbbtr*` is RBBTR with
//! the classic trust-region update.

use std::fmt;
use std::str::FromStr;

use rbbtr::{SolverConfig, TauRule, Variant};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VariantSpec {
    pub variant: Variant,
    pub classic_radius: bool,
}

impl VariantSpec {
    pub const fn new(variant: Variant) -> Self {
        Self { variant, classic_radius: false }
    }

    pub const fn classic(variant: Variant) -> Self {
        Self { variant, classic_radius: true }
    }

    /// The four methods of the comparison followed by the three classic-radius
    /// trust-region variants.
    pub fn all() -> Vec<VariantSpec> {
        let mut v: Vec<_> = Variant::ALL.iter().map(|&v| Self::new(v)).collect();
        v.extend([Variant::Bbtr, Variant::Rbbtr, Variant::Rbbtre].map(Self::classic));
        v
    }

    pub fn label(&self) -> String {
        if self.classic_radius {
            format!("{}*", self.variant)
        } else {
            self.variant.to_string()
        }
    }

    /// Label safe for file names.
    pub fn file_stem(&self) -> String {
        if self.classic_radius {
            format!("{}-classic", self.variant)
        } else {
            self.variant.to_string()
        }
    }

    pub fn config(&self) -> SolverConfig {
        let cfg = SolverConfig::for_variant(self.variant);
        if self.classic_radius {
            cfg.with_classic_radius()
        } else {
            cfg
        }
    }
}

impl fmt::Display for VariantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for VariantSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (base, classic) = match s.trim().strip_suffix('*') {
            Some(b) => (b, true),
            None => (s.trim(), false),
        };
        let variant: Variant = base.parse().map_err(|_| HarnessError::Variant(s.to_string()))?;
        if classic && variant == Variant::Gbb {
            return Err(HarnessError::Variant(s.to_string()));
        }
        Ok(Self { variant, classic_radius: classic })
    }
}

impl TryFrom<String> for VariantSpec {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<VariantSpec> for String {
    fn from(v: VariantSpec) -> String {
        v.label()
    }
}

/// `inv` (`τ = Δ^{−m}`) or `exp` (`τ = e^{−Δ}`).
pub fn parse_tau(s: &str, m: u32) -> Result<TauRule, HarnessError> {
    match s {
        "inv" => Ok(TauRule::Inverse { m }),
        "exp" => Ok(TauRule::EXPONENTIAL),
        other => Err(HarnessError::Matrix(format!("unknown tau rule `{other}`"))),
    }
}
