use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Sliding-window size used by normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    /// The whole series is the window at every time step.
    Full,
    /// The `w` most recent samples ending at the current step.
    Samples(usize),
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Full => f.write_str("full"),
            Window::Samples(w) => write!(f, "{w}"),
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") || s.eq_ignore_ascii_case("all") {
            return Ok(Window::Full);
        }
        match s.parse::<usize>() {
            Ok(w) if w > 0 => Ok(Window::Samples(w)),
            _ => Err(Error::invalid(
                "window",
                format!("expected a positive integer or `full`, got `{s}`"),
            )),
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Window {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> core::result::Result<S::Ok, S::Error> {
        match self {
            Window::Full => serializer.serialize_str("full"),
            Window::Samples(w) => serializer.serialize_u64(*w as u64),
        }
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Window {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> core::result::Result<Self, D::Error> {
        struct Visitor;

        impl serde::de::Visitor<'_> for Visitor {
            type Value = Window;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"full\"")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> core::result::Result<Window, E> {
                if v == 0 {
                    return Err(E::custom("window must be positive"));
                }
                Ok(Window::Samples(v as usize))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> core::result::Result<Window, E> {
                if v <= 0 {
                    return Err(E::custom("window must be positive"));
                }
                Ok(Window::Samples(v as usize))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> core::result::Result<Window, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

/// Normalization applied to each bootstrap series before encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NormMethod {
    None,
    /// `x / max(window)`; scaling only, no minimum is subtracted.
    MinMax,
    /// `(x - mean(window)) / std(window)`.
    ZScore,
    /// `Φ(0.5 · (x - median) / IQR)` over the window.
    Nonlinear,
}

impl NormMethod {
    pub const ALL: [NormMethod; 4] = [
        NormMethod::None,
        NormMethod::MinMax,
        NormMethod::ZScore,
        NormMethod::Nonlinear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NormMethod::None => "none",
            NormMethod::MinMax => "minmax",
            NormMethod::ZScore => "zscore",
            NormMethod::Nonlinear => "nonlinear",
        }
    }
}

impl fmt::Display for NormMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(NormMethod::None),
            "minmax" | "min-max" => Ok(NormMethod::MinMax),
            "zscore" | "z-score" => Ok(NormMethod::ZScore),
            "nonlinear" | "non-linear" => Ok(NormMethod::Nonlinear),
            other => Err(Error::invalid(
                "norm_method",
                format!("unknown method `{other}`"),
            )),
        }
    }
}

/// Every hyperparameter of the estimation pipeline.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineConfig {
    /// Order `m` of the one-sided moving-average trend.
    pub trend_order: usize,
    pub window: Window,
    /// Number of Markov states used to discretize residuals for the bootstrap.
    pub residual_states: usize,
    /// Number of symbols `n` produced by the encoder.
    pub encode_bins: usize,
    /// The `n - 1` quantile probabilities that place the encoder's bin bounds.
    pub encode_quantiles: Vec<f64>,
    /// Bootstrap replicate count `B`.
    pub boot_reps: usize,
    /// Shuffle count used for the effective-TE bias correction.
    pub shuffle_reps: usize,
    pub lag_min: usize,
    pub lag_max: usize,
    pub norm_method: NormMethod,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            trend_order: 2,
            window: Window::Samples(20),
            residual_states: 10,
            encode_bins: 3,
            encode_quantiles: vec![0.05, 0.95],
            boot_reps: 100,
            shuffle_reps: 50,
            lag_min: 1,
            lag_max: 30,
            norm_method: NormMethod::Nonlinear,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Checks the length-independent invariants.
    pub fn validate(&self) -> Result<()> {
        if self.trend_order == 0 {
            return Err(Error::invalid("trend_order", "must be at least 1"));
        }
        if self.window == Window::Samples(0) {
            return Err(Error::invalid("window", "must be positive"));
        }
        if self.residual_states == 0 {
            return Err(Error::invalid("residual_states", "must be at least 1"));
        }
        if self.encode_bins < 2 {
            return Err(Error::invalid("encode_bins", "need at least 2 bins"));
        }
        validate_quantiles(self.encode_bins, &self.encode_quantiles)?;
        if self.boot_reps == 0 {
            return Err(Error::invalid("boot_reps", "must be at least 1"));
        }
        if self.shuffle_reps == 0 {
            return Err(Error::invalid("shuffle_reps", "must be at least 1"));
        }
        if self.lag_min == 0 {
            return Err(Error::invalid("lag_min", "lags start at 1"));
        }
        if self.lag_min > self.lag_max {
            return Err(Error::invalid("lag_max", "lag_min must not exceed lag_max"));
        }
        Ok(())
    }

    /// Shortest series the configuration can be applied to.
    pub fn min_series_len(&self) -> usize {
        self.lag_max + 2
    }

    /// Checks [`validate`](Self::validate) plus `lag_max < len - 1`.
    pub fn validate_for_len(&self, len: usize) -> Result<()> {
        self.validate()?;
        if len < self.min_series_len() {
            return Err(Error::SeriesTooShort {
                param: "lag_max",
                needed: self.min_series_len(),
                got: len,
            });
        }
        Ok(())
    }
}

pub(crate) fn validate_quantiles(bins: usize, probs: &[f64]) -> Result<()> {
    if probs.len() + 1 != bins {
        return Err(Error::invalid(
            "encode_quantiles",
            format!(
                "{bins} bins need {} quantile probabilities, got {}",
                bins - 1,
                probs.len()
            ),
        ));
    }
    if probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::invalid(
            "encode_quantiles",
            "probabilities must lie in (0, 1)",
        ));
    }
    if probs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "encode_quantiles",
            "probabilities must be strictly increasing",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn errors_name_the_parameter() {
        let c = PipelineConfig {
            encode_quantiles: vec![0.95, 0.05],
            ..PipelineConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().param(), "encode_quantiles");
        let c = PipelineConfig {
            lag_min: 5,
            lag_max: 4,
            ..PipelineConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().param(), "lag_max");
        let c = PipelineConfig::default();
        assert_eq!(c.validate_for_len(31).unwrap_err().param(), "lag_max");
        c.validate_for_len(32).unwrap();
    }

    #[test]
    fn parse_window_and_method() {
        assert_eq!("full".parse::<Window>().unwrap(), Window::Full);
        assert_eq!("20".parse::<Window>().unwrap(), Window::Samples(20));
        assert!("0".parse::<Window>().is_err());
        assert_eq!("z-score".parse::<NormMethod>().unwrap(), NormMethod::ZScore);
        assert!("robust".parse::<NormMethod>().is_err());
    }
}
