//! Measurements on correlation fields: ridge tracking, propagation speeds and packet
//! widths.
//!
//! The strongest correlation in a row is usually the outgoing packet, but a static
//! nearest-neighbour correlation can outweigh it, so ridges are searched from
//! [`RIDGE_MIN_SEPARATION`] outwards. Speeds are Theil-Sen slopes (median of pairwise
//! slopes), which ignore the occasional row where a trailing packet briefly wins.

use serde::Serialize;

use crate::correlations::CorrelationField;
use crate::error::{Error, Result};

/// Smallest separation considered when locating ridges and fronts.
pub const RIDGE_MIN_SEPARATION: i64 = 2;

/// Straight-line fit `x = intercept + speed * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub speed: f64,
    pub intercept: f64,
    pub samples: usize,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Theil-Sen estimate over `(t, x)` points; `None` with fewer than two distinct times.
pub fn theil_sen(points: &[(f64, f64)]) -> Option<LineFit> {
    let mut slopes = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if b.0 != a.0 {
                slopes.push((b.1 - a.1) / (b.0 - a.0));
            }
        }
    }
    let speed = median(slopes)?;
    let intercept = median(points.iter().map(|(t, x)| x - speed * t).collect())?;
    Some(LineFit { speed, intercept, samples: points.len() })
}

fn rows_in(field: &CorrelationField, t_from: f64, t_to: f64) -> impl Iterator<Item = (f64, &[f64])> {
    field
        .times
        .iter()
        .zip(&field.values)
        .filter(move |(t, _)| **t >= t_from - 1e-9 && **t <= t_to + 1e-9)
        .map(|(t, row)| (*t, row.as_slice()))
}

fn argmax_abs(field: &CorrelationField, row: &[f64], x_min: i64) -> Option<i64> {
    field
        .positions
        .iter()
        .zip(row)
        .filter(|(x, _)| x.abs() >= x_min)
        .fold(None, |best: Option<(i64, f64)>, (&x, v)| match best {
            Some((_, b)) if b >= v.abs() => best,
            _ => Some((x, v.abs())),
        })
        .map(|(x, _)| x)
}

/// `(t, x)` of the largest `|value|` with `|x| >= x_min`, for each time in the range.
pub fn ridge_positions(field: &CorrelationField, t_from: f64, t_to: f64, x_min: i64) -> Vec<(f64, f64)> {
    rows_in(field, t_from, t_to)
        .filter_map(|(t, row)| argmax_abs(field, row, x_min).map(|x| (t, x as f64)))
        .collect()
}

fn fit(points: Vec<(f64, f64)>, what: &str) -> Result<LineFit> {
    theil_sen(&points).ok_or_else(|| {
        Error::InvalidArgument(format!("need at least two times in the window to fit a {what}"))
    })
}

/// Speed of the correlation ridge over `[t_from, t_to]`.
pub fn ridge_speed(field: &CorrelationField, t_from: f64, t_to: f64) -> Result<LineFit> {
    fit(ridge_positions(field, t_from, t_to, RIDGE_MIN_SEPARATION), "ridge")
}

/// Outermost separation where `|value|` reaches `fraction` of the row maximum.
pub fn front_positions(field: &CorrelationField, t_from: f64, t_to: f64, fraction: f64) -> Vec<(f64, f64)> {
    rows_in(field, t_from, t_to)
        .filter_map(|(t, row)| {
            let peak = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak == 0.0 {
                return None;
            }
            field
                .positions
                .iter()
                .zip(row)
                .filter(|(x, v)| x.abs() >= RIDGE_MIN_SEPARATION && v.abs() >= fraction * peak)
                .map(|(x, _)| x.abs())
                .max()
                .map(|x| (t, x as f64))
        })
        .collect()
}

/// Speed of the light-cone front defined by [`front_positions`].
pub fn front_speed(field: &CorrelationField, t_from: f64, t_to: f64, fraction: f64) -> Result<LineFit> {
    fit(front_positions(field, t_from, t_to, fraction), "front")
}

/// RMS width of the `|value|^2` profile of one row over `|x| >= x_min`.
pub fn packet_width(positions: &[i64], row: &[f64], x_min: i64) -> Option<f64> {
    let (mut w, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (&x, v) in positions.iter().zip(row) {
        if x.abs() < x_min {
            continue;
        }
        let (xf, wt) = (x as f64, v * v);
        w += wt;
        m1 += wt * xf;
        m2 += wt * xf * xf;
    }
    if w <= 0.0 {
        return None;
    }
    let mean = m1 / w;
    Some((m2 / w - mean * mean).max(0.0).sqrt())
}

/// Growth rate of the packet width over `[t_from, t_to]` (Theil-Sen slope).
pub fn width_growth_rate(field: &CorrelationField, t_from: f64, t_to: f64) -> Result<LineFit> {
    let points = rows_in(field, t_from, t_to)
        .filter_map(|(t, row)| packet_width(&field.positions, row, RIDGE_MIN_SEPARATION).map(|w| (t, w)))
        .collect();
    fit(points, "width")
}
