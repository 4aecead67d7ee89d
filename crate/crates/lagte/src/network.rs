//! Per-hop delay estimation along congestion propagation paths.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lagte_core::{Diagnostics, LagSample, PipelineConfig, SpeedSeries};

use crate::io::{extract_incident_window, format_timestamp, PathSpec, SpeedData};
use crate::{parallel, Error, Result};

#[derive(Debug, Clone)]
pub struct RoadNetworkInput {
    series: BTreeMap<String, SpeedSeries>,
    incident_road: String,
    incident_time: NaiveDateTime,
    paths: Vec<Vec<String>>,
}

impl RoadNetworkInput {
    pub fn new(
        series: BTreeMap<String, SpeedSeries>,
        incident_road: impl Into<String>,
        incident_time: NaiveDateTime,
        paths: Vec<Vec<String>>,
    ) -> Result<Self> {
        let incident_road = incident_road.into();
        if !series.contains_key(&incident_road) {
            return Err(Error::Data(format!(
                "incident road `{incident_road}` has no speed series"
            )));
        }
        for (i, path) in paths.iter().enumerate() {
            match path.first() {
                None => return Err(Error::Data(format!("path {i} is empty"))),
                Some(first) if *first != incident_road => {
                    return Err(Error::Data(format!(
                        "path {i} starts at `{first}`, not the incident road `{incident_road}`"
                    )))
                }
                _ => {}
            }
            if let Some(road) = path.iter().find(|r| !series.contains_key(*r)) {
                return Err(Error::Data(format!(
                    "path {i} references unknown road `{road}`"
                )));
            }
        }
        Ok(RoadNetworkInput {
            series,
            incident_road,
            incident_time,
            paths,
        })
    }

    pub fn from_spec(data: SpeedData, spec: &PathSpec) -> Result<Self> {
        let time = spec.incident_time()?;
        Self::new(
            data.series,
            spec.incident.road.clone(),
            time,
            spec.paths.clone(),
        )
    }

    pub fn series(&self) -> &BTreeMap<String, SpeedSeries> {
        &self.series
    }

    pub fn incident_road(&self) -> &str {
        &self.incident_road
    }

    pub fn incident_time(&self) -> NaiveDateTime {
        self.incident_time
    }

    pub fn paths(&self) -> &[Vec<String>] {
        &self.paths
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HopPairing {
    /// Every hop is estimated against the incident road.
    #[default]
    Root,
    /// Every hop is estimated against the preceding road on the path.
    Consecutive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    pub max_hops: usize,
    pub before_minutes: i64,
    pub after_minutes: i64,
    /// σ̂² above which a hop is flagged. `None` uses half the variance of a
    /// uniform distribution over the configured lag range.
    pub variance_threshold: Option<f64>,
    pub pairing: HopPairing,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            max_hops: 3,
            before_minutes: 60,
            after_minutes: 120,
            variance_threshold: None,
            pairing: HopPairing::Root,
        }
    }
}

impl AnalyzeOptions {
    pub fn threshold_for(&self, config: &PipelineConfig) -> f64 {
        self.variance_threshold.unwrap_or_else(|| {
            let span = (config.lag_max - config.lag_min + 1) as f64;
            0.5 * (span * span - 1.0) / 12.0
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopEstimate {
    pub sample: LagSample,
    pub histogram: Vec<(usize, usize)>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopReport {
    /// 1-based hop index; hop 0 is the incident road.
    pub hop: usize,
    pub source: String,
    pub target: String,
    pub estimate: Option<HopEstimate>,
    pub error: Option<String>,
    /// Raised when σ̂² exceeds the threshold, when most replicates saw no
    /// positive ETE at any lag, or when estimation failed.
    pub causality_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub path: Vec<String>,
    pub hops: Vec<HopReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub incident_road: String,
    pub incident_time: String,
    pub config: PipelineConfig,
    pub options: AnalyzeOptions,
    pub variance_threshold: f64,
    pub paths: Vec<PathReport>,
}

pub fn analyze_paths(
    input: &RoadNetworkInput,
    config: &PipelineConfig,
    options: &AnalyzeOptions,
) -> Result<NetworkReport> {
    config.validate()?;
    let threshold = options.threshold_for(config);
    let windows: BTreeMap<&str, Result<SpeedSeries>> = input
        .paths
        .iter()
        .flat_map(|p| p.iter().take(options.max_hops + 1))
        .map(|road| {
            let w = extract_incident_window(
                &input.series[road],
                input.incident_time,
                options.before_minutes,
                options.after_minutes,
            );
            (road.as_str(), w)
        })
        .collect();

    let jobs: Vec<(usize, usize)> = input
        .paths
        .iter()
        .enumerate()
        .flat_map(|(p, path)| (1..path.len().min(options.max_hops + 1)).map(move |k| (p, k)))
        .collect();
    let hops: Vec<HopReport> = jobs
        .par_iter()
        .map(|&(p, k)| {
            let path = &input.paths[p];
            let source = match options.pairing {
                HopPairing::Root => &path[0],
                HopPairing::Consecutive => &path[k - 1],
            };
            let target = &path[k];
            let outcome = match (&windows[source.as_str()], &windows[target.as_str()]) {
                (Ok(s), Ok(t)) => {
                    parallel::estimate_delay_detailed(s, t, config).map_err(Error::from)
                }
                (Err(e), _) | (_, Err(e)) => Err(Error::Data(e.to_string())),
            };
            let (estimate, error, flag) = match outcome {
                Ok(est) => {
                    let weak = est.sample.sigma2_hat > threshold
                        || 2 * est.diagnostics.flat_profiles > est.sample.boot_reps();
                    let hop = HopEstimate {
                        histogram: est.sample.histogram(),
                        sample: est.sample,
                        diagnostics: est.diagnostics,
                    };
                    (Some(hop), None, weak)
                }
                Err(e) => {
                    log::warn!("hop {k} `{source}` -> `{target}`: {e}");
                    (None, Some(e.to_string()), true)
                }
            };
            HopReport {
                hop: k,
                source: source.clone(),
                target: target.clone(),
                estimate,
                error,
                causality_flag: flag,
            }
        })
        .collect();

    let mut hops = hops.into_iter();
    let paths = input
        .paths
        .iter()
        .map(|path| {
            let n = path.len().min(options.max_hops + 1).saturating_sub(1);
            PathReport {
                path: path.clone(),
                hops: hops.by_ref().take(n).collect(),
            }
        })
        .collect();
    Ok(NetworkReport {
        incident_road: input.incident_road.clone(),
        incident_time: format_timestamp(input.incident_time.and_utc().timestamp()),
        config: config.clone(),
        options: options.clone(),
        variance_threshold: threshold,
        paths,
    })
}
