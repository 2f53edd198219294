//! The five binary distance functions. All of them return values in
//! `[0, 1]` where smaller means more similar.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::descriptor::{contingency, BinaryDescriptor, ContingencyCounts};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    #[serde(rename = "hamming")]
    Hamming,
    #[serde(rename = "jaccard")]
    JaccardNeedham,
    #[serde(rename = "correlation")]
    Correlation,
    #[serde(rename = "dice")]
    Dice,
    #[serde(rename = "yule")]
    Yule,
}

impl MetricId {
    /// Every metric, in table column order.
    pub const ALL: [MetricId; 5] = [
        MetricId::Hamming,
        MetricId::JaccardNeedham,
        MetricId::Correlation,
        MetricId::Dice,
        MetricId::Yule,
    ];

    /// Position in [`MetricId::ALL`].
    pub fn ordinal(self) -> usize {
        self as usize
    }

    /// Name used on the command line and in CSV files.
    pub fn name(self) -> &'static str {
        match self {
            MetricId::Hamming => "hamming",
            MetricId::JaccardNeedham => "jaccard",
            MetricId::Correlation => "correlation",
            MetricId::Dice => "dice",
            MetricId::Yule => "yule",
        }
    }

    /// Human-readable label for report tables.
    pub fn label(self) -> &'static str {
        match self {
            MetricId::Hamming => "Hamming",
            MetricId::JaccardNeedham => "Jaccard-Needham",
            MetricId::Correlation => "Correlation",
            MetricId::Dice => "Dice",
            MetricId::Yule => "Yule",
        }
    }

    /// Parses a comma-separated list such as `hamming,dice`, rejecting
    /// duplicates and empty lists.
    pub fn parse_list(s: &str) -> Result<Vec<MetricId>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: MetricId = part.parse()?;
            if out.contains(&m) {
                return Err(Error::Parameter(format!("metric {part} listed twice")));
            }
            out.push(m);
        }
        if out.is_empty() {
            return Err(Error::Parameter("no metrics given".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown metric {s:?}")))
    }
}

/// Evaluates `metric` on a set of contingency counts.
///
/// Hamming is the mismatch fraction `(f01 + f10) / n`, i.e. one minus the
/// agreement fraction returned by [`hamming_agreement`]. Zero denominators
/// resolve to 0 when the descriptors agree everywhere they are compared and
/// to the metric's maximum otherwise (1/2 for Correlation, whose neutral
/// point that is).
pub fn distance(metric: MetricId, c: &ContingencyCounts) -> f64 {
    let (f00, f01, f10, f11) = (
        c.f00() as f64,
        c.f01() as f64,
        c.f10() as f64,
        c.f11() as f64,
    );
    let n = c.n_bits() as f64;
    let mismatches = f01 + f10;
    let value = match metric {
        MetricId::Hamming => mismatches / n,
        MetricId::JaccardNeedham => {
            let denom = f11 + mismatches;
            if denom == 0.0 {
                0.0
            } else {
                mismatches / denom
            }
        }
        MetricId::Correlation => {
            let sigma = ((f10 + f11) * (f01 + f00) * (f11 + f01) * (f00 + f10)).sqrt();
            if sigma == 0.0 {
                if mismatches == 0.0 {
                    0.0
                } else {
                    0.5
                }
            } else {
                0.5 - (f11 * f00 - f10 * f01) / (2.0 * sigma)
            }
        }
        MetricId::Dice => {
            let denom = 2.0 * f11 + mismatches;
            if denom == 0.0 {
                0.0
            } else {
                mismatches / denom
            }
        }
        MetricId::Yule => {
            let discordant = f10 * f01;
            let denom = f11 * f00 + discordant;
            if denom == 0.0 {
                if mismatches == 0.0 {
                    0.0
                } else {
                    1.0
                }
            } else {
                discordant / denom
            }
        }
    };
    value.clamp(0.0, 1.0)
}

/// Fraction of agreeing positions, `(f11 + f00) / n`. Maximizing this over
/// candidates selects the same descriptor as minimizing Hamming distance.
pub fn hamming_agreement(c: &ContingencyCounts) -> f64 {
    (c.f11() + c.f00()) as f64 / c.n_bits() as f64
}

pub fn distance_between(
    metric: MetricId,
    a: &BinaryDescriptor,
    b: &BinaryDescriptor,
) -> Result<f64> {
    Ok(distance(metric, &contingency(a, b)?))
}
