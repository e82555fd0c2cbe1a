//! Deterministic offline stand-ins shaped like each task's canonical file.

use std::f64::consts::PI;

use super::table::{parse_timestamp, SeriesTable};
use super::task::Task;
use crate::error::Result;
use crate::numerics::rng::SplitMix64;

/// Mixing weights of the occupancy label over its standardized channels.
pub const OCCUPANCY_WEIGHTS: [f64; 5] = [0.8, 0.3, 1.0, 0.6, -0.4];
pub const OCCUPANCY_THRESHOLD: f64 = 0.3;
pub const OCCUPANCY_LABEL_NOISE: f64 = 0.02;
const OCCUPANCY_AR: f64 = 0.97;

/// Synthetic table for `task` with `rows` rows.
pub fn synth_fixture(task: Task, seed: u64, rows: usize) -> Result<SeriesTable> {
    let mut rng = SplitMix64::for_stream(seed, &format!("synth:{task}"));
    match task {
        Task::Occupancy => occupancy(&mut rng, rows),
        Task::Har => har(&mut rng, rows),
        Task::Traffic => traffic(&mut rng, rows),
        Task::Power => power(&mut rng, rows),
        Task::Ozone => ozone(&mut rng, rows),
    }
}

fn stamps(start: &str, step: i64, rows: usize) -> Vec<i64> {
    let t0 = parse_timestamp(start).expect("valid literal");
    (0..rows as i64).map(|i| t0 + i * step).collect()
}

fn ar_step(x: f64, phi: f64, rng: &mut SplitMix64) -> f64 {
    phi * x + (1.0 - phi * phi).sqrt() * rng.normal()
}

/// Five AR(1) sensor channels; the label thresholds a fixed weighted sum of
/// the latent channels and is flipped with probability 2%.
fn occupancy(rng: &mut SplitMix64, rows: usize) -> Result<SeriesTable> {
    let offsets = [21.0, 27.0, 200.0, 650.0, 0.0042];
    let scales = [1.2, 4.5, 180.0, 220.0, 0.0006];
    let norm = OCCUPANCY_WEIGHTS.iter().map(|w| w * w).sum::<f64>().sqrt();
    let mut latent: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
    let mut features = Vec::with_capacity(rows * 5);
    let mut targets = Vec::with_capacity(rows);
    for _ in 0..rows {
        for x in &mut latent {
            *x = ar_step(*x, OCCUPANCY_AR, rng);
        }
        let score = latent.iter().zip(OCCUPANCY_WEIGHTS).map(|(x, w)| x * w).sum::<f64>() / norm;
        let mut label = score > OCCUPANCY_THRESHOLD;
        if rng.bernoulli(OCCUPANCY_LABEL_NOISE) {
            label = !label;
        }
        for c in 0..5 {
            features.push(offsets[c] + scales[c] * latent[c]);
        }
        targets.push(if label { 1.0 } else { 0.0 });
    }
    SeriesTable::new(Task::Occupancy, stamps("2015-02-04 17:51:00", 60, rows), features, 5, targets)
}

/// Sticky activity chain; features are a class-specific mean plus noise.
fn har(rng: &mut SplitMix64, rows: usize) -> Result<SeriesTable> {
    let k = 561;
    let means: Vec<Vec<f64>> = (0..6).map(|_| (0..k).map(|_| 0.5 * rng.normal()).collect()).collect();
    let mut class = rng.below(6);
    let mut features = Vec::with_capacity(rows * k);
    let mut targets = Vec::with_capacity(rows);
    for _ in 0..rows {
        if rng.bernoulli(0.03) {
            class = rng.below(6);
        }
        features.extend(means[class].iter().map(|m| m + 0.8 * rng.normal()));
        targets.push(class as f64);
    }
    SeriesTable::new(Task::Har, (0..rows as i64).collect(), features, k, targets)
}

/// Hourly weather and calendar columns driving a daily volume profile.
fn traffic(rng: &mut SplitMix64, rows: usize) -> Result<SeriesTable> {
    let ts = stamps("2012-10-02 09:00:00", 3600, rows);
    let mut features = Vec::with_capacity(rows * 8);
    let mut targets = Vec::with_capacity(rows);
    let mut holiday_day = i64::MIN;
    let mut weather = 0.0;
    for &t in &ts {
        let day = t.div_euclid(86_400);
        let hour = t.rem_euclid(86_400) / 3600;
        // 1970-01-01 was a Thursday; 0 = Monday
        let dow = (day + 3).rem_euclid(7);
        let weekend = dow >= 5;
        if hour == 0 && rng.bernoulli(1.0 / 40.0) {
            holiday_day = day;
        }
        let holiday = day == holiday_day;
        weather = ar_step(weather, 0.9, rng);
        let temp = 282.0 + 10.0 * (2.0 * PI * day as f64 / 365.0).sin() + 3.0 * (2.0 * PI * (hour as f64 - 9.0) / 24.0).sin()
            + rng.normal();
        let rain = if weather > 1.2 { (weather - 1.2) * 2.0 } else { 0.0 };
        let snow = if weather > 1.8 && temp < 275.0 { 0.1 } else { 0.0 };
        let clouds = (50.0 + 30.0 * weather).clamp(0.0, 100.0).round();
        let profile = 0.5 - 0.5 * (2.0 * PI * (hour as f64 - 3.0) / 24.0).cos();
        let mut volume = 400.0 + 5000.0 * profile;
        if weekend {
            volume *= 0.65;
        }
        if holiday {
            volume *= 0.5;
        }
        volume = (volume - 150.0 * rain + 120.0 * rng.normal()).max(0.0).round();
        features.extend([
            temp,
            rain,
            snow,
            clouds,
            hour as f64,
            dow as f64,
            f64::from(u8::from(weekend)),
            f64::from(u8::from(holiday)),
        ]);
        targets.push(volume);
    }
    SeriesTable::new(Task::Traffic, ts, features, 8, targets)
}

/// Hourly household load; active power follows voltage × intensity.
fn power(rng: &mut SplitMix64, rows: usize) -> Result<SeriesTable> {
    let ts = stamps("2006-12-16 17:00:00", 3600, rows);
    let mut features = Vec::with_capacity(rows * 6);
    let mut targets = Vec::with_capacity(rows);
    let mut load = 0.0;
    for &t in &ts {
        let hour = t.rem_euclid(86_400) as f64 / 3600.0;
        load = ar_step(load, 0.8, rng);
        let intensity = (4.5 + 3.0 * (2.0 * PI * (hour - 14.0) / 24.0).cos() + 1.5 * load).max(0.2);
        let voltage = 240.0 + 3.0 * rng.normal();
        let reactive = 0.1 + 0.05 * rng.normal().abs();
        let sub1 = (intensity * 0.4 + rng.normal()).max(0.0);
        let sub2 = (intensity * 0.3 + rng.normal()).max(0.0);
        let sub3 = (intensity * 1.5 + rng.normal()).max(0.0);
        let active = voltage * intensity * 0.95 / 1000.0 + 0.02 * rng.normal();
        features.extend([reactive, voltage, intensity, sub1, sub2, sub3]);
        targets.push(active);
    }
    SeriesTable::new(Task::Power, ts, features, 6, targets)
}

/// Daily meteorology; ozone days combine heat, calm wind and humidity.
fn ozone(rng: &mut SplitMix64, rows: usize) -> Result<SeriesTable> {
    let ts = stamps("1998-01-01", 86_400, rows);
    let mut features = Vec::with_capacity(rows * 72);
    let mut targets = Vec::with_capacity(rows);
    let (mut heat, mut wind, mut moist) = (0.0, 0.0, 0.0);
    for &t in &ts {
        let day = t.div_euclid(86_400) as f64;
        let season = (2.0 * PI * (day - 100.0) / 365.25).sin();
        heat = ar_step(heat, 0.7, rng);
        wind = ar_step(wind, 0.6, rng);
        moist = ar_step(moist, 0.6, rng);
        let wsr: Vec<f64> = (0..24)
            .map(|h| (3.0 + 1.5 * wind + 0.8 * (2.0 * PI * h as f64 / 24.0).sin() + 0.5 * rng.normal()).max(0.0))
            .collect();
        let temp: Vec<f64> = (0..24)
            .map(|h| 18.0 + 8.0 * season + 4.0 * heat - 5.0 * (2.0 * PI * (h as f64 - 3.0) / 24.0).cos() + rng.normal())
            .collect();
        let peak = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        features.extend(&wsr);
        features.extend([peak(&wsr), avg(&wsr)]);
        features.extend(&temp);
        features.extend([peak(&temp), avg(&temp)]);
        for level in [85.0, 70.0, 50.0] {
            let lift = level / 100.0;
            features.extend([
                avg(&temp) - 15.0 * (1.0 - lift) + rng.normal(),
                (0.6 + 0.2 * moist + 0.05 * rng.normal()).clamp(0.0, 1.0),
                2.0 * wind + rng.normal(),
                rng.normal() * 2.0,
                1500.0 + 4000.0 * (1.0 - lift) + 30.0 * heat + 10.0 * rng.normal(),
            ]);
        }
        features.extend([
            20.0 + 10.0 * moist + rng.normal(),
            45.0 + 5.0 * heat + rng.normal(),
            10_150.0 - 30.0 * wind + 5.0 * rng.normal(),
            rng.normal() * 20.0,
            (2.0 * moist).max(0.0) * 0.1,
        ]);
        let score = 1.2 * heat + 1.0 * season - 0.9 * wind + 0.4 * moist;
        targets.push(if score > 1.6 { 1.0 } else { 0.0 });
    }
    SeriesTable::new(Task::Ozone, ts, features, 72, targets)
}
