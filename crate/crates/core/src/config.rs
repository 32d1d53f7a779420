//! Detector parameter overrides loaded from TOML.
//!
//! Top-level keys apply to every method; a `[slope]` or `[correlation]`
//! table applies to that method only and wins over the top level.
//!
//! ```toml
//! skip_samples = 20
//!
//! [slope]
//! smoothing = 10
//! threshold_lo = 0.8
//! threshold_hi = 1.25
//!
//! [correlation]
//! threshold = 0.85
//! ```

use serde::Deserialize;

use crate::detector::{DetectorConfig, Method, Threshold};
use crate::error::{ConfigError, ScenarioError};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterOverrides {
    pub window_size: Option<usize>,
    pub smoothing: Option<usize>,
    pub min_duration: Option<usize>,
    /// Correlation lower bound.
    pub threshold: Option<f64>,
    pub threshold_lo: Option<f64>,
    pub threshold_hi: Option<f64>,
    pub skip_samples: Option<usize>,
    pub sample_rate_hz: Option<f64>,
}

impl ParameterOverrides {
    fn apply(&self, config: &mut DetectorConfig) {
        if let Some(v) = self.window_size {
            config.window_size = v;
        }
        if let Some(v) = self.smoothing {
            config.smoothing = v;
        }
        if let Some(v) = self.min_duration {
            config.min_duration = v;
        }
        if let Some(v) = self.skip_samples {
            config.skip_samples = v;
        }
        if let Some(v) = self.sample_rate_hz {
            config.sample_rate_hz = v;
        }
        match &mut config.threshold {
            Threshold::AtLeast(min) => {
                if let Some(v) = self.threshold {
                    *min = v;
                }
            }
            Threshold::Interval { lo, hi } => {
                if let Some(v) = self.threshold_lo {
                    *lo = v;
                }
                if let Some(v) = self.threshold_hi {
                    *hi = v;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub common: ParameterOverrides,
    pub slope: ParameterOverrides,
    pub correlation: ParameterOverrides,
}

// serde cannot combine `flatten` with `deny_unknown_fields`, so the
// top-level keys are spelled out here.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfigFile {
    window_size: Option<usize>,
    smoothing: Option<usize>,
    min_duration: Option<usize>,
    threshold: Option<f64>,
    threshold_lo: Option<f64>,
    threshold_hi: Option<f64>,
    skip_samples: Option<usize>,
    sample_rate_hz: Option<f64>,
    #[serde(default)]
    slope: ParameterOverrides,
    #[serde(default)]
    correlation: ParameterOverrides,
}

impl ConfigFile {
    pub fn parse(source: &str) -> Result<Self, ScenarioError> {
        let raw: RawConfigFile = toml::from_str(source).map_err(|e| ScenarioError::Parse {
            line: e
                .span()
                .map_or(1, |s| source[..s.start].matches('\n').count() + 1),
            message: e.message().trim().to_owned(),
        })?;
        Ok(Self {
            common: ParameterOverrides {
                window_size: raw.window_size,
                smoothing: raw.smoothing,
                min_duration: raw.min_duration,
                threshold: raw.threshold,
                threshold_lo: raw.threshold_lo,
                threshold_hi: raw.threshold_hi,
                skip_samples: raw.skip_samples,
                sample_rate_hz: raw.sample_rate_hz,
            },
            slope: raw.slope,
            correlation: raw.correlation,
        })
    }

    /// Defaults for `method` with the file's overrides applied.
    pub fn config_for(&self, method: Method) -> Result<DetectorConfig, ConfigError> {
        let mut config = DetectorConfig::defaults_for(method);
        self.common.apply(&mut config);
        match method {
            Method::Slope => self.slope.apply(&mut config),
            Method::Correlation => self.correlation.apply(&mut config),
        }
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let file = ConfigFile::parse("").unwrap();
        assert_eq!(
            file.config_for(Method::Slope).unwrap(),
            DetectorConfig::slope_defaults()
        );
        assert_eq!(
            file.config_for(Method::Correlation).unwrap(),
            DetectorConfig::correlation_defaults()
        );
    }

    #[test]
    fn method_tables_override_common() {
        let file = ConfigFile::parse(
            "window_size = 40\nskip_samples = 10\n[slope]\nwindow_size = 50\nthreshold_hi = 1.2\n[correlation]\nthreshold = 0.9\n",
        )
        .unwrap();
        let slope = file.config_for(Method::Slope).unwrap();
        assert_eq!(slope.window_size, 50);
        assert_eq!(slope.skip_samples, 10);
        assert_eq!(slope.threshold, Threshold::Interval { lo: 0.77, hi: 1.2 });
        let corr = file.config_for(Method::Correlation).unwrap();
        assert_eq!(corr.window_size, 40);
        assert_eq!(corr.threshold, Threshold::AtLeast(0.9));
    }

    #[test]
    fn invalid_values_rejected() {
        let file = ConfigFile::parse("window_size = 1\n").unwrap();
        assert_eq!(
            file.config_for(Method::Slope),
            Err(ConfigError::WindowTooSmall(1))
        );
        assert!(matches!(
            ConfigFile::parse("\nwindow = 3\n"),
            Err(ScenarioError::Parse { line: 2, .. })
        ));
    }
}
