//! Divergence and distance measures between discrete distributions, and the
//! one-dimensional profile that compares their shapes on binary
//! distributions.

use std::fmt;
use std::str::FromStr;

use crate::corpus::Distribution;
use crate::{fmt_f64, Error, Result};

/// Kullback-Leibler divergence `sum_i p_i ln(p_i / q_i)` in nats.
///
/// Terms with `p_i = 0` contribute nothing (the `0 log 0 = 0` convention),
/// so unsmoothed one-hot vectors are fine on the `p` side. `q` is expected
/// strictly positive wherever `p` is.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    let mut acc = 0.0;
    for (pi, qi) in p.iter().zip(q) {
        if *pi != 0.0 {
            acc += pi * (pi / qi).ln();
        }
    }
    Ok(acc)
}

/// Symmetric KL (Jeffreys) divergence `sum_i (p_i - q_i) ln(p_i / q_i)`.
///
/// Equals `kl(p, q) + kl(q, p)`; every term is nonnegative, so both inputs
/// must be strictly positive.
pub fn skl(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    let mut acc = 0.0;
    for (index, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if !pi.is_finite() || pi <= 0.0 {
            return Err(Error::NonPositiveEntry { index, value: pi });
        }
        if !qi.is_finite() || qi <= 0.0 {
            return Err(Error::NonPositiveEntry { index, value: qi });
        }
        acc += (pi - qi) * (pi / qi).ln();
    }
    Ok(acc)
}

/// Cosine of the angle between two vectors.
pub fn cosine_similarity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    let mut dot = 0.0;
    let mut np = 0.0;
    let mut nq = 0.0;
    for (pi, qi) in p.iter().zip(q) {
        dot += pi * qi;
        np += pi * pi;
        nq += qi * qi;
    }
    if np == 0.0 || nq == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot / (np.sqrt() * nq.sqrt()))
}

/// Euclidean (L2) distance.
pub fn euclidean_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    let sum: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Kl,
    Skl,
    Cosine,
    Euclidean,
}

impl MeasureKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Kl => "kl",
            MeasureKind::Skl => "skl",
            MeasureKind::Cosine => "cosine",
            MeasureKind::Euclidean => "euclidean",
        }
    }

    fn eval(self, p: &[f64], q: &[f64]) -> Result<f64> {
        match self {
            MeasureKind::Kl => kl(p, q),
            MeasureKind::Skl => skl(p, q),
            MeasureKind::Cosine => cosine_similarity(p, q),
            MeasureKind::Euclidean => euclidean_distance(p, q),
        }
    }
}

impl FromStr for MeasureKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "kl" => Ok(MeasureKind::Kl),
            "skl" => Ok(MeasureKind::Skl),
            "cosine" => Ok(MeasureKind::Cosine),
            "euclidean" => Ok(MeasureKind::Euclidean),
            other => Err(format!(
                "unknown measure {other:?} (kl, skl, cosine, euclidean)"
            )),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub x: f64,
    pub measure: MeasureKind,
    pub value: f64,
}

/// Lower end of the profile grid; the grid stays inside the open unit
/// interval so both coordinates of `p = (x, 1 - x)` remain positive.
pub const PROFILE_X_MIN: f64 = 1e-3;

/// Evaluates each measure between `p = (x, 1 - x)` and the fixed binary
/// reference `q` on a uniform grid of `grid_points` values of `x` in
/// `[1e-3, 1 - 1e-3]`. Rows are x-major, measures in the given order.
pub fn divergence_profile(
    q: &Distribution,
    measures: &[MeasureKind],
    grid_points: usize,
) -> Result<Vec<ProfileRow>> {
    if q.len() != 2 {
        return Err(Error::DimensionMismatch(q.len(), 2));
    }
    if grid_points < 3 {
        return Err(Error::InvalidConfig(format!(
            "profile needs at least 3 grid points, got {grid_points}"
        )));
    }
    if measures.is_empty() {
        return Err(Error::InvalidConfig("no measures requested".into()));
    }
    let x_min = PROFILE_X_MIN;
    let x_max = 1.0 - PROFILE_X_MIN;
    let dx = (x_max - x_min) / (grid_points - 1) as f64;
    let mut rows = Vec::with_capacity(grid_points * measures.len());
    for k in 0..grid_points {
        let x = x_min + k as f64 * dx;
        let p = [x, 1.0 - x];
        for &measure in measures {
            rows.push(ProfileRow {
                x,
                measure,
                value: measure.eval(&p, q)?,
            });
        }
    }
    Ok(rows)
}

/// Renders profile rows as `x,measure,value` CSV with 17-significant-digit
/// floats.
pub fn profile_to_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from("x,measure,value\n");
    for row in rows {
        out.push_str(&fmt_f64(row.x));
        out.push(',');
        out.push_str(row.measure.name());
        out.push(',');
        out.push_str(&fmt_f64(row.value));
        out.push('\n');
    }
    out
}
