//! Time-to-solution arithmetic and log-log scaling fits.
//!
//! `TTS(t) = t · max(1, ln(1−δ)/ln(1−p(t)))`. A success probability of zero
//! never reaches the target and yields `f64::INFINITY`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{argument, Result};

/// Default target confidence δ.
pub const DEFAULT_DELTA: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Classical,
    Quantum,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Classical => "classical",
            Algorithm::Quantum => "quantum",
        }
    }
}

pub fn compute_tts(t: usize, p: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(argument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(argument(format!("success probability must lie in [0, 1], got {p}")));
    }
    if t == 0 {
        return Err(argument("time-to-solution needs t ≥ 1"));
    }
    let t = t as f64;
    if p == 0.0 {
        return Ok(f64::INFINITY);
    }
    if p == 1.0 {
        return Ok(t);
    }
    let repetitions = libm::log(1.0 - delta) / libm::log(1.0 - p);
    Ok(t * repetitions.max(1.0))
}

/// TTS at one step count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtsPoint {
    pub t: usize,
    pub p: f64,
    pub tts: f64,
}

/// TTS over a whole curve and its minimizer, if any entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TtsCurve {
    pub points: Vec<TtsPoint>,
    pub best: Option<TtsPoint>,
}

/// `curve[k]` is `p(t)` at `t = k + 1`. Ties go to the smaller `t`.
pub fn min_tts_curve(curve: &[f64], delta: f64) -> Result<TtsCurve> {
    if curve.is_empty() {
        return Err(argument("success-probability curve is empty"));
    }
    let points = curve
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            Ok(TtsPoint {
                t: k + 1,
                p,
                tts: compute_tts(k + 1, p, delta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = points
        .iter()
        .filter(|pt| pt.tts.is_finite())
        .fold(None::<TtsPoint>, |best, pt| match best {
            Some(b) if b.tts <= pt.tts => Some(b),
            _ => Some(*pt),
        });
    Ok(TtsCurve { points, best })
}

/// Least-squares line `ln y = exponent · ln x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Euclidean norm of the residuals in log space.
    pub residual_norm: f64,
    pub points: usize,
}

impl ExponentFit {
    /// An exponent below 1 means quantum TTS grows more slowly than classical TTS.
    pub fn signals_advantage(&self) -> bool {
        self.exponent < 1.0
    }
}

/// Fits `(classical TTS*, quantum TTS*)` pairs in log-log space.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 2 {
        return Err(argument(format!("an exponent fit needs at least 2 points, got {}", points.len())));
    }
    for (k, &(x, y)) in points.iter().enumerate() {
        if !(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0) {
            return Err(argument(format!("point {k} = ({x}, {y}) is not finite and positive")));
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (libm::log(x), libm::log(y))).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(argument("all classical TTS values coincide; the slope is undefined"));
    }
    let exponent = sxy / sxx;
    let intercept = mean_y - exponent * mean_x;
    let residual_norm = libm::sqrt(
        logs.iter()
            .map(|&(x, y)| {
                let r = y - (exponent * x + intercept);
                r * r
            })
            .sum(),
    );
    Ok(ExponentFit {
        exponent,
        intercept,
        residual_norm,
        points: points.len(),
    })
}
