use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{Aggregate, ResultRow};
use crate::error::{Error, Result};
use crate::params::{Delta, Variant};

pub const MIN_DISTINCT_T: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regressor {
    /// `ln t`
    Ln,
    /// `ln ln t`
    LnLn,
}

impl Regressor {
    pub fn x(self, t: u64) -> f64 {
        match self {
            Regressor::Ln => (t as f64).ln(),
            Regressor::LnLn => (t as f64).ln().ln(),
        }
    }

    pub fn other(self) -> Regressor {
        match self {
            Regressor::Ln => Regressor::LnLn,
            Regressor::LnLn => Regressor::Ln,
        }
    }
}

impl fmt::Display for Regressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regressor::Ln => "ln",
            Regressor::LnLn => "lnln",
        })
    }
}

impl FromStr for Regressor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ln" | "log" => Ok(Regressor::Ln),
            "lnln" | "loglog" => Ok(Regressor::LnLn),
            _ => Err(Error::InvalidParams(format!("unknown regressor `{s}` (ln or lnln)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitPoint {
    pub t: u64,
    pub x: f64,
    #[serde(flatten)]
    pub stats: Aggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub model: Variant,
    pub m: u32,
    pub delta: Delta,
    pub metric: String,
    pub regressor: Regressor,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// R² of the same means against the other regressor.
    pub competing_r2: f64,
    pub points: Vec<FitPoint>,
}

/// Least squares `y = intercept + slope x`, returning `(slope, intercept, r2)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if x.len() < 2 || sxx <= 1e-12 * (1.0 + mx * mx) {
        return Err(Error::InvalidParams("degenerate x-range in scaling fit".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok((slope, intercept, r2))
}

/// Fits the per-t mean of `metric` in every `(model, m, delta)` group.
pub fn fit_scaling(rows: &[ResultRow], metric: &str, regressor: Regressor) -> Result<Vec<ScalingFit>> {
    type Key = (Variant, u32, String);
    let mut groups: BTreeMap<Key, (Delta, BTreeMap<u64, Vec<f64>>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == metric) {
        groups
            .entry((r.model, r.m, r.delta.to_string()))
            .or_insert_with(|| (r.delta, BTreeMap::new()))
            .1
            .entry(r.t)
            .or_default()
            .push(r.value);
    }
    if groups.is_empty() {
        return Err(Error::InvalidParams(format!("no rows for metric `{metric}`")));
    }
    groups
        .into_iter()
        .map(|((model, m, _), (delta, by_t))| {
            if by_t.len() < MIN_DISTINCT_T {
                return Err(Error::InvalidParams(format!(
                    "model={model} m={m} delta={delta}: {} distinct t values, need {MIN_DISTINCT_T}",
                    by_t.len()
                )));
            }
            let points: Vec<FitPoint> = by_t
                .iter()
                .map(|(&t, v)| FitPoint { t, x: regressor.x(t), stats: Aggregate::of(v) })
                .collect();
            let y: Vec<f64> = points.iter().map(|p| p.stats.mean).collect();
            let x: Vec<f64> = points.iter().map(|p| p.x).collect();
            let xo: Vec<f64> = points.iter().map(|p| regressor.other().x(p.t)).collect();
            let (slope, intercept, r2) = fit_line(&x, &y)?;
            let (_, _, competing_r2) = fit_line(&xo, &y)?;
            Ok(ScalingFit {
                model,
                m,
                delta,
                metric: metric.to_string(),
                regressor,
                slope,
                intercept,
                r2,
                competing_r2,
                points,
            })
        })
        .collect()
}

/// Convenience wrapper for a single group.
pub fn fit_rows(rows: &[ResultRow], metric: &str, regressor: Regressor) -> Result<ScalingFit> {
    let mut fits = fit_scaling(rows, metric, regressor)?;
    if fits.len() != 1 {
        return Err(Error::InvalidParams(format!("expected one parameter group, found {}", fits.len())));
    }
    Ok(fits.remove(0))
}
