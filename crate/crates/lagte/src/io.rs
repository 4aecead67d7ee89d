//! Speed-data ingestion: the `timestamp,road_id,speed_kmh` CSV format, path
//! spec files, and incident windowing.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use lagte_core::SpeedSeries;

use crate::{Error, Result};

const HEADER: [&str; 3] = ["timestamp", "road_id", "speed_kmh"];
const SECONDS_PER_MINUTE: i64 = 60;

/// Parses an ISO-8601 timestamp. Offsets are converted to UTC; naive
/// timestamps are taken as UTC.
pub fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.naive_utc());
    }
    [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ]
    .iter()
    .find_map(|fmt| NaiveDateTime::parse_from_str(text, fmt).ok())
}

pub fn format_timestamp(secs: i64) -> String {
    DateTime::from_timestamp(secs, 0)
        .map(|dt| dt.naive_utc().format("%Y-%m-%dT%H:%M:%S").to_string())
        .unwrap_or_else(|| secs.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    /// Sampling period in minutes.
    pub period_minutes: i64,
    /// Longest run of missing samples, in minutes, filled by interpolation.
    pub max_gap_minutes: i64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            period_minutes: 1,
            max_gap_minutes: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    /// Number of distinct gaps.
    pub gaps: usize,
    /// Number of samples filled by interpolation.
    pub filled: usize,
    /// Start timestamps (unix seconds) of each filled sample.
    pub filled_at: Vec<i64>,
}

#[derive(Debug, Clone, Default)]
pub struct SpeedData {
    pub series: BTreeMap<String, SpeedSeries>,
    pub gaps: BTreeMap<String, GapReport>,
}

#[derive(Debug, Deserialize)]
struct Row {
    timestamp: String,
    road_id: String,
    speed_kmh: f64,
}

pub fn load_speed_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<SpeedData> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_speed_csv(file, path, options)
}

/// Reads speed rows from any reader. `origin` is used in error messages.
pub fn read_speed_csv<R: std::io::Read>(
    reader: R,
    origin: &Path,
    options: &LoadOptions,
) -> Result<SpeedData> {
    if options.period_minutes < 1 {
        return Err(Error::Data(
            "sampling period must be at least one minute".into(),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != HEADER.len() || header.iter().zip(HEADER).any(|(h, e)| h != e) {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }

    let mut rows: BTreeMap<String, Vec<(i64, f64, u64)>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            parse_error(origin, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record
            .deserialize(Some(&header))
            .map_err(|e| parse_error(origin, line, e.to_string()))?;
        let ts = parse_timestamp(&row.timestamp).ok_or_else(|| {
            parse_error(
                origin,
                line,
                format!("invalid timestamp `{}`", row.timestamp),
            )
        })?;
        if !row.speed_kmh.is_finite() {
            return Err(parse_error(
                origin,
                line,
                format!("non-finite speed `{}`", row.speed_kmh),
            ));
        }
        rows.entry(row.road_id)
            .or_default()
            .push((ts.and_utc().timestamp(), row.speed_kmh, line));
    }

    let mut data = SpeedData::default();
    for (road, mut samples) in rows {
        samples.sort_by_key(|&(ts, _, line)| (ts, line));
        if let Some(w) = samples.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Data(format!(
                "duplicate row for road `{road}` at {} (lines {} and {})",
                format_timestamp(w[0].0),
                w[0].2,
                w[1].2
            )));
        }
        let (series, gaps) = regularize(&road, &samples, options)?;
        data.series.insert(road.clone(), series);
        data.gaps.insert(road, gaps);
    }
    Ok(data)
}

fn parse_error(origin: &Path, line: u64, message: String) -> Error {
    Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    }
}

fn regularize(
    road: &str,
    samples: &[(i64, f64, u64)],
    options: &LoadOptions,
) -> Result<(SpeedSeries, GapReport)> {
    let step = options.period_minutes * SECONDS_PER_MINUTE;
    let start = samples[0].0;
    let mut values = vec![samples[0].1];
    let mut report = GapReport::default();
    for pair in samples.windows(2) {
        let (t0, v0, _) = pair[0];
        let (t1, v1, line) = pair[1];
        let delta = t1 - t0;
        if delta % step != 0 {
            return Err(Error::Data(format!(
                "road `{road}`: timestamp {} at line {line} is off the {}-minute grid",
                format_timestamp(t1),
                options.period_minutes
            )));
        }
        let missing = delta / step - 1;
        if missing > 0 {
            if missing * options.period_minutes > options.max_gap_minutes {
                return Err(Error::Data(format!(
                    "road `{road}`: gap of {} minutes after {} exceeds the {}-minute limit",
                    missing * options.period_minutes,
                    format_timestamp(t0),
                    options.max_gap_minutes
                )));
            }
            report.gaps += 1;
            for k in 1..=missing {
                let frac = k as f64 / (missing + 1) as f64;
                values.push(v0 + (v1 - v0) * frac);
                report.filled += 1;
                report.filled_at.push(t0 + k * step);
            }
        }
        values.push(v1);
    }
    if report.filled > 0 {
        log::info!(
            "road `{road}`: interpolated {} samples over {} gaps",
            report.filled,
            report.gaps
        );
    }
    let series = SpeedSeries::with_period(values, options.period_minutes as f64)?
        .labeled(road)
        .starting_at(start);
    Ok((series, report))
}

/// Cuts the samples from `before` minutes ahead of the incident up to `after`
/// minutes past it. The window holds `(before + after) / period` samples, or a
/// single sample when both durations are zero.
pub fn extract_incident_window(
    series: &SpeedSeries,
    incident: NaiveDateTime,
    before_minutes: i64,
    after_minutes: i64,
) -> Result<SpeedSeries> {
    let label = series.label().unwrap_or("series");
    if before_minutes < 0 || after_minutes < 0 {
        return Err(Error::Data("window durations must be non-negative".into()));
    }
    let start_time = series
        .start_time()
        .ok_or_else(|| Error::Data(format!("`{label}` has no start timestamp")))?;
    let period = series.period();
    if !(period.is_finite() && period > 0.0 && period.fract() == 0.0) {
        return Err(Error::Data(format!(
            "`{label}` has a non-integral period of {period} minutes"
        )));
    }
    let step = period as i64 * SECONDS_PER_MINUTE;
    let first = incident.and_utc().timestamp() - before_minutes * SECONDS_PER_MINUTE;
    if (first - start_time) % step != 0 {
        return Err(Error::Data(format!(
            "window start for `{label}` is off the sampling grid"
        )));
    }
    let count = ((before_minutes + after_minutes) * SECONDS_PER_MINUTE / step).max(1);
    let offset = (first - start_time).div_euclid(step);
    let len = series.len() as i64;
    if offset < 0 {
        return Err(Error::Data(format!(
            "`{label}` starts at {}, {} minutes after the window start {}",
            format_timestamp(start_time),
            -offset * step / SECONDS_PER_MINUTE,
            format_timestamp(first)
        )));
    }
    if offset + count > len {
        let end = start_time + (len - 1) * step;
        return Err(Error::Data(format!(
            "`{label}` ends at {}, {} minutes short of the window",
            format_timestamp(end),
            (offset + count - len) * step / SECONDS_PER_MINUTE
        )));
    }
    let (lo, hi) = (offset as usize, (offset + count) as usize);
    let mut window = SpeedSeries::with_period(series.values()[lo..hi].to_vec(), period)?
        .starting_at(start_time + offset * step);
    if let Some(l) = series.label() {
        window = window.labeled(l);
    }
    Ok(window)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidentSpec {
    pub road: String,
    pub time: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSpec {
    pub incident: IncidentSpec,
    pub paths: Vec<Vec<String>>,
}

impl PathSpec {
    pub fn incident_time(&self) -> Result<NaiveDateTime> {
        parse_timestamp(&self.incident.time)
            .ok_or_else(|| Error::Data(format!("invalid incident time `{}`", self.incident.time)))
    }
}

pub fn load_path_spec(path: impl AsRef<Path>) -> Result<PathSpec> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<SpeedData> {
        read_speed_csv(
            text.as_bytes(),
            Path::new("test.csv"),
            &LoadOptions::default(),
        )
    }

    fn ts(text: &str) -> NaiveDateTime {
        parse_timestamp(text).unwrap()
    }

    #[test]
    fn timestamps() {
        assert_eq!(ts("2020-09-08T06:44:00"), ts("2020-09-08 06:44"));
        assert_eq!(ts("2020-09-08T15:44:00+09:00"), ts("2020-09-08T06:44:00Z"));
        assert!(parse_timestamp("06:44").is_none());
    }

    #[test]
    fn interpolates_single_gap() {
        let data = read(
            "timestamp,road_id,speed_kmh\n\
             2020-09-08T06:00:00,A,50\n\
             2020-09-08T06:02:00,A,60\n\
             2020-09-08T06:03:00,A,61\n",
        )
        .unwrap();
        assert_eq!(data.series["A"].values(), &[50.0, 55.0, 60.0, 61.0]);
        assert_eq!(data.gaps["A"].gaps, 1);
        assert_eq!(data.gaps["A"].filled, 1);
    }

    #[test]
    fn rows_may_arrive_unordered() {
        let data = read(
            "timestamp,road_id,speed_kmh\n\
             2020-09-08T06:01:00,A,2\n\
             2020-09-08T06:00:00,B,7\n\
             2020-09-08T06:00:00,A,1\n",
        )
        .unwrap();
        assert_eq!(data.series["A"].values(), &[1.0, 2.0]);
        assert_eq!(data.series["B"].values(), &[7.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let dup =
            read("timestamp,road_id,speed_kmh\n2020-09-08T06:00:00,A,1\n2020-09-08T06:00:00,A,2\n");
        assert!(matches!(dup, Err(Error::Data(m)) if m.contains("duplicate") && m.contains("`A`")));

        let bad = read(
            "timestamp,road_id,speed_kmh\n2020-09-08T06:00:00,A,1\n2020-09-08T06:01:00,A,fast\n",
        );
        assert!(matches!(bad, Err(Error::Parse { line: 3, .. })));

        let bad_ts = read("timestamp,road_id,speed_kmh\nyesterday,A,1\n");
        assert!(matches!(bad_ts, Err(Error::Parse { line: 2, .. })));

        let header = read("time,road,speed\n");
        assert!(matches!(header, Err(Error::Parse { line: 1, .. })));

        let long_gap =
            read("timestamp,road_id,speed_kmh\n2020-09-08T06:00:00,A,1\n2020-09-08T06:12:00,A,2\n");
        assert!(matches!(long_gap, Err(Error::Data(m)) if m.contains("11 minutes")));

        let off_grid =
            read("timestamp,road_id,speed_kmh\n2020-09-08T06:00:00,A,1\n2020-09-08T06:00:30,A,2\n");
        assert!(matches!(off_grid, Err(Error::Data(_))));
    }

    fn covering(from: &str, minutes: usize) -> SpeedSeries {
        SpeedSeries::new((0..minutes).map(|i| i as f64).collect())
            .unwrap()
            .labeled("A")
            .starting_at(ts(from).and_utc().timestamp())
    }

    #[test]
    fn incident_window() {
        let s = covering("2020-09-08T05:00:00", 241);
        let w = extract_incident_window(&s, ts("2020-09-08T06:44:00"), 60, 120).unwrap();
        assert_eq!(w.len(), 180);
        assert_eq!(
            w.start_time(),
            Some(ts("2020-09-08T05:44:00").and_utc().timestamp())
        );
        assert_eq!(w.values()[0], 44.0);
        assert_eq!(w.label(), Some("A"));

        let single = extract_incident_window(&s, ts("2020-09-08T06:44:00"), 0, 0).unwrap();
        assert_eq!(single.values(), &[104.0]);
    }

    #[test]
    fn incident_window_shortfall() {
        let s = covering("2020-09-08T05:00:00", 181);
        let err = extract_incident_window(&s, ts("2020-09-08T06:44:00"), 60, 120).unwrap_err();
        assert!(err.to_string().contains("43 minutes short"), "{err}");
        let early = extract_incident_window(&s, ts("2020-09-08T05:30:00"), 60, 120).unwrap_err();
        assert!(early.to_string().contains("30 minutes after"), "{early}");
    }
}
