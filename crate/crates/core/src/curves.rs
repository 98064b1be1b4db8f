//! Lognormal fragility and restoration curves keyed by component kind and
//! voltage class.
//!
//! Fragility gives the probability a component fails at a given PGA;
//! restoration gives the day a failed component returns, drawn by inverse
//! transform of a uniform sample. The shipped default table is a set of
//! calibrated placeholders (the reference parameter tables are not public)
//! and is meant to be replaced via the curve config file.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{phi, phi_inv};
use crate::rng::SubstreamRng;
use crate::xbb::ComponentKind;

/// Voltage classification over the supported [13.2, 765] kV range.
/// Intervals are half-open with the top interval closed at 765.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VoltageClass {
    #[serde(rename = "low")]
    Low,
    #[serde(rename = "medium")]
    Medium,
    #[serde(rename = "high")]
    High,
}

impl VoltageClass {
    pub const ALL: [VoltageClass; 3] =
        [VoltageClass::Low, VoltageClass::Medium, VoltageClass::High];

    /// [13.2, 150) → Low; [150, 350) → Medium; [350, 765] → High.
    pub fn from_base_kv(base_kv: f64) -> Result<Self, CurveError> {
        if !(13.2..=765.0).contains(&base_kv) {
            return Err(CurveError::VoltageOutOfRange(base_kv));
        }
        Ok(if base_kv < 150.0 {
            VoltageClass::Low
        } else if base_kv < 350.0 {
            VoltageClass::Medium
        } else {
            VoltageClass::High
        })
    }
}

impl std::fmt::Display for VoltageClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VoltageClass::Low => "low",
            VoltageClass::Medium => "medium",
            VoltageClass::High => "high",
        };
        write!(f, "{s}")
    }
}

/// Lognormal fragility: P(fail | pga) = Φ(ln(pga/median)/β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragilityCurve {
    pub median_g: f64,
    pub beta: f64,
}

impl FragilityCurve {
    pub fn failure_probability(&self, pga_g: f64) -> f64 {
        debug_assert!(pga_g >= 0.0);
        if pga_g <= 0.0 {
            return 0.0;
        }
        phi((pga_g / self.median_g).ln() / self.beta)
    }

    /// One Bernoulli trial at `pga_g`. Always consumes exactly one uniform
    /// draw so the stream layout does not depend on the PGA value.
    pub fn sample_failure(&self, pga_g: f64, rng: &mut SubstreamRng) -> bool {
        let u = rng.uniform_open01();
        u < self.failure_probability(pga_g)
    }
}

/// Lognormal restoration: day = ⌈exp(ln(median) + β·Φ⁻¹(u))⌉, minimum 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestorationCurve {
    pub median_days: f64,
    pub beta: f64,
}

impl RestorationCurve {
    pub fn day_for_quantile(&self, u: f64) -> u32 {
        debug_assert!(u > 0.0 && u < 1.0);
        let day = (self.median_days.ln() + self.beta * phi_inv(u))
            .exp()
            .ceil();
        (day.max(1.0)) as u32
    }

    pub fn sample_day(&self, rng: &mut SubstreamRng) -> u32 {
        self.day_for_quantile(rng.uniform_open01())
    }
}

/// One (fragility, restoration) pair for a (kind, class) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePair {
    pub fragility: FragilityCurve,
    pub restoration: RestorationCurve,
}

/// Config-file entry; the file is an array of these.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveEntry {
    pub component: ComponentKind,
    pub voltage: VoltageClass,
    pub fragility: FragilityEntry,
    pub restoration: RestorationEntry,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragilityEntry {
    pub median_g: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestorationEntry {
    pub median_days: f64,
    pub beta: f64,
}

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("base_kv {0} outside the supported [13.2, 765] kV range")]
    VoltageOutOfRange(f64),
    #[error("curve config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("curve config missing entries for: {}", missing.join(", "))]
    MissingEntries { missing: Vec<String> },
    #[error("curve config has duplicate entry for ({component:?}, {voltage})")]
    DuplicateEntry {
        component: ComponentKind,
        voltage: VoltageClass,
    },
    #[error("non-positive curve parameter for ({component:?}, {voltage}): {what}")]
    BadParameter {
        component: ComponentKind,
        voltage: VoltageClass,
        what: String,
    },
    #[error("lognormal fit needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("lognormal fit requires positive samples, got {0}")]
    NonPositiveSample(f64),
    #[error("io error reading curve config: {0}")]
    Io(#[from] std::io::Error),
}

/// Complete curve table: one `CurvePair` per (kind, class) cell, all 9 present.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    pairs: [[CurvePair; 3]; 3],
}

fn kind_index(kind: ComponentKind) -> usize {
    match kind {
        ComponentKind::CircuitBreaker => 0,
        ComponentKind::DisconnectSwitch => 1,
        ComponentKind::Transformer => 2,
    }
}

fn class_index(class: VoltageClass) -> usize {
    match class {
        VoltageClass::Low => 0,
        VoltageClass::Medium => 1,
        VoltageClass::High => 2,
    }
}

impl CurveSet {
    pub fn from_entries(entries: &[CurveEntry]) -> Result<Self, CurveError> {
        let mut slots: [[Option<CurvePair>; 3]; 3] = Default::default();
        for e in entries {
            let slot = &mut slots[kind_index(e.component)][class_index(e.voltage)];
            if slot.is_some() {
                return Err(CurveError::DuplicateEntry {
                    component: e.component,
                    voltage: e.voltage,
                });
            }
            for (value, what) in [
                (e.fragility.median_g, "fragility median_g"),
                (e.fragility.beta, "fragility beta"),
                (e.restoration.median_days, "restoration median_days"),
                (e.restoration.beta, "restoration beta"),
            ] {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(CurveError::BadParameter {
                        component: e.component,
                        voltage: e.voltage,
                        what: format!("{what} = {value}"),
                    });
                }
            }
            *slot = Some(CurvePair {
                fragility: FragilityCurve {
                    median_g: e.fragility.median_g,
                    beta: e.fragility.beta,
                },
                restoration: RestorationCurve {
                    median_days: e.restoration.median_days,
                    beta: e.restoration.beta,
                },
            });
        }

        let mut missing = Vec::new();
        for kind in ComponentKind::ALL {
            for class in VoltageClass::ALL {
                if slots[kind_index(kind)][class_index(class)].is_none() {
                    missing.push(format!("({}, {})", kind, class));
                }
            }
        }
        if !missing.is_empty() {
            return Err(CurveError::MissingEntries { missing });
        }

        Ok(Self {
            pairs: slots.map(|row| row.map(|p| p.unwrap())),
        })
    }

    pub fn parse(source: &str) -> Result<Self, CurveError> {
        let entries: Vec<CurveEntry> =
            serde_json::from_str(source).map_err(|e| CurveError::Parse {
                line: e.line(),
                message: e.to_string(),
            })?;
        Self::from_entries(&entries)
    }

    pub fn get(&self, kind: ComponentKind, class: VoltageClass) -> &CurvePair {
        &self.pairs[kind_index(kind)][class_index(class)]
    }

    pub fn fragility(&self, kind: ComponentKind, class: VoltageClass) -> &FragilityCurve {
        &self.get(kind, class).fragility
    }

    pub fn restoration(&self, kind: ComponentKind, class: VoltageClass) -> &RestorationCurve {
        &self.get(kind, class).restoration
    }

    /// Calibrated placeholder defaults. The HV-transformer restoration pair
    /// (400 d, β 0.3) anchors the u = 0.6 → day 432 behavior; the rest are
    /// order-of-magnitude engineering values meant to be overridden.
    pub fn default_table() -> Vec<CurveEntry> {
        fn entry(
            component: ComponentKind,
            voltage: VoltageClass,
            frag: (f64, f64),
            rest: (f64, f64),
        ) -> CurveEntry {
            CurveEntry {
                component,
                voltage,
                fragility: FragilityEntry {
                    median_g: frag.0,
                    beta: frag.1,
                },
                restoration: RestorationEntry {
                    median_days: rest.0,
                    beta: rest.1,
                },
            }
        }
        use ComponentKind::*;
        use VoltageClass::*;
        vec![
            entry(DisconnectSwitch, Low, (1.00, 0.60), (7.0, 0.5)),
            entry(DisconnectSwitch, Medium, (0.85, 0.55), (14.0, 0.5)),
            entry(DisconnectSwitch, High, (0.70, 0.50), (30.0, 0.4)),
            entry(CircuitBreaker, Low, (0.95, 0.55), (14.0, 0.5)),
            entry(CircuitBreaker, Medium, (0.80, 0.50), (30.0, 0.5)),
            entry(CircuitBreaker, High, (0.65, 0.45), (60.0, 0.4)),
            entry(Transformer, Low, (0.85, 0.55), (30.0, 0.5)),
            entry(Transformer, Medium, (0.70, 0.50), (120.0, 0.4)),
            entry(Transformer, High, (0.55, 0.45), (400.0, 0.3)),
        ]
    }

    pub fn with_defaults() -> Self {
        Self::from_entries(&Self::default_table()).expect("default table is complete")
    }
}

/// Method-of-moments lognormal fit on logs: median = exp(mean of ln x),
/// beta = sample standard deviation of ln x (n−1 denominator).
pub fn fit_lognormal(samples: &[f64]) -> Result<(f64, f64), CurveError> {
    if samples.len() < 2 {
        return Err(CurveError::TooFewSamples(samples.len()));
    }
    for &s in samples {
        if s <= 0.0 || s.is_nan() {
            return Err(CurveError::NonPositiveSample(s));
        }
    }
    let logs: Vec<f64> = samples.iter().map(|s| s.ln()).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean.exp(), var.sqrt()))
}
