//! Shared fixtures for integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;

use lagte::io::{format_timestamp, parse_timestamp};
use lagte_core::{derive_replicate_rng, generate_pair, SimSpec, SpeedSeries, StreamTag};
use rand_distr::{Distribution, Normal};

pub const START: &str = "2020-09-08T05:44:00";
pub const INCIDENT: &str = "2020-09-08T06:44:00";

pub fn start_secs() -> i64 {
    parse_timestamp(START).unwrap().and_utc().timestamp()
}

/// Root road plus one road per lag, each a noisy delayed copy of the root.
/// Samples start 60 minutes before the incident and cover `len` minutes.
pub fn chain(lags: &[usize], len: usize, noise: f64, seed: u64) -> BTreeMap<String, SpeedSeries> {
    let (root, _) = generate_pair(&SimSpec {
        u0: 1,
        noise_sigma: noise,
        length: len,
        seed,
    })
    .unwrap();
    let root = root.values().to_vec();
    let normal = Normal::new(0.0, noise).unwrap();
    let mut map = BTreeMap::new();
    map.insert("R0".to_string(), root.clone());
    for (k, &lag) in lags.iter().enumerate() {
        let mut rng = derive_replicate_rng(seed, k as u64 + 1, StreamTag::SimulationNoise);
        let values = (0..len)
            .map(|t| {
                let base = if t >= lag { root[t - lag] } else { 100.0 };
                base + normal.sample(&mut rng)
            })
            .collect();
        map.insert(format!("R{}", k + 1), values);
    }
    map.into_iter()
        .map(|(road, v)| {
            let s = SpeedSeries::new(v)
                .unwrap()
                .labeled(road.clone())
                .starting_at(start_secs());
            (road, s)
        })
        .collect()
}

pub fn to_csv(series: &BTreeMap<String, SpeedSeries>) -> String {
    let mut out = String::from("timestamp,road_id,speed_kmh\n");
    for (road, s) in series {
        let t0 = s.start_time().unwrap();
        for (i, v) in s.values().iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{}",
                format_timestamp(t0 + 60 * i as i64),
                road,
                v
            );
        }
    }
    out
}
