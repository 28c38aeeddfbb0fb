//! Empirical box-counting dimension and modulus of continuity from samples.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::evaluator::{Component, SampledFunction};

/// Minimum number of points accepted by [`box_dimension`].
pub const MIN_BOX_POINTS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct BoxCountEstimate {
    /// Box side lengths, decreasing.
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// Least-squares slope of `log N` against `log 1/s`.
    pub slope: f64,
    pub fit_r2: f64,
}

/// Counts occupied boxes of side `s` for `levels` geometrically spaced sides from
/// `max_scale` down to `min_scale`, with grids anchored at the origin.
/// Choosing both ends as powers of two with `levels - 1 = log2(max/min)` gives
/// dyadic grids.
///
/// Points are expected in the unit square (see [`normalize_to_unit_square`]).
pub fn box_dimension(
    points: &[(f64, f64)],
    min_scale: f64,
    max_scale: f64,
    levels: usize,
) -> Result<BoxCountEstimate> {
    if points.len() < MIN_BOX_POINTS {
        return Err(Error::TooFewPoints {
            found: points.len(),
            required: MIN_BOX_POINTS,
        });
    }
    if !(min_scale > 0.0 && min_scale < max_scale && max_scale.is_finite()) {
        return Err(Error::DegenerateScales(format!(
            "need 0 < min_scale < max_scale, got {min_scale} and {max_scale}"
        )));
    }
    if levels < 2 {
        return Err(Error::DegenerateScales(format!(
            "need at least 2 levels, got {levels}"
        )));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.0.is_finite() && p.1.is_finite()))
    {
        return Err(Error::NonFiniteValue {
            what: format!("point ({}, {})", p.0, p.1),
        });
    }
    // interpolate in log2 so power-of-two ends give exact dyadic sides
    let (hi, lo) = (max_scale.log2(), min_scale.log2());
    let scales: Vec<f64> = (0..levels)
        .map(|i| (hi + (lo - hi) * i as f64 / (levels - 1) as f64).exp2())
        .collect();
    let counts: Vec<usize> = scales.iter().map(|&s| count_boxes(points, s)).collect();
    let xs: Vec<f64> = scales.iter().map(|s| (1.0 / s).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, fit_r2) = least_squares(&xs, &ys);
    Ok(BoxCountEstimate {
        scales,
        counts,
        slope,
        fit_r2,
    })
}

fn count_boxes(points: &[(f64, f64)], side: f64) -> usize {
    // cells are half-open; the far edge of the unit square joins the last cell
    let last = ((1.0 / side).ceil() as i64 - 1).max(0);
    let cell = |v: f64| ((v / side).floor() as i64).min(last);
    let mut keys: Vec<(i64, i64)> = points.iter().map(|&(x, y)| (cell(x), cell(y))).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Slope and coefficient of determination of the least-squares line.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, r2)
}

/// Affinely maps the bounding box of `points` onto `[0, 1]^2`.
/// A zero-width axis maps to 0.
pub fn normalize_to_unit_square(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let fold = |f: fn(&(f64, f64)) -> f64| {
        points
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let (x0, x1) = fold(|p| p.0);
    let (y0, y1) = fold(|p| p.1);
    let scale = |v: f64, lo: f64, hi: f64| {
        if hi > lo {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    points
        .iter()
        .map(|&(x, y)| (scale(x, x0, x1), scale(y, y0, y1)))
        .collect()
}

/// Graph of one component as `(x, f(x))` pairs, normalized to the unit square.
pub fn graph_points(samples: &SampledFunction, component: Component) -> Vec<(f64, f64)> {
    let raw: Vec<(f64, f64)> = samples
        .grid
        .iter()
        .copied()
        .zip(samples.component(component).iter().copied())
        .collect();
    normalize_to_unit_square(&raw)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModulusEstimate {
    pub t_values: Vec<f64>,
    /// `sup_{|h| <= t} sup_x |f(x + h) - f(x)|` over grid pairs.
    pub omega_values: Vec<f64>,
    /// Slope of `log(ω + 2e)` against `log t`, `e` the sample error bound.
    pub fitted_exponent: f64,
}

/// Estimates the modulus of continuity on the sample grid.
///
/// Pairs at distance exactly `t` are included, so affine data gives the exact
/// value at `t` rather than the value at the next smaller grid gap. Before the
/// fit, twice the sample error bound is added to each value (each endpoint may
/// be off by the bound), and with seven or more `t` values the two smallest and
/// two largest are dropped.
pub fn modulus_of_continuity(
    samples: &SampledFunction,
    component: Component,
    t_values: &[f64],
) -> Result<ModulusEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if t_values.len() < 2 {
        return Err(Error::DegenerateScales(format!(
            "need at least 2 t values, got {}",
            t_values.len()
        )));
    }
    if let Some(w) = t_values.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateScales(format!(
            "t values must increase strictly: {} follows {}",
            w[1], w[0]
        )));
    }
    let t_min = t_values[0];
    if t_min.is_nan() || t_min <= 0.0 {
        return Err(Error::DegenerateScales(format!(
            "t values must be positive, got {t_min}"
        )));
    }
    let spacing = samples.max_spacing();
    let required = t_min / 10.0;
    if spacing.is_nan() || spacing >= required {
        return Err(Error::GridTooCoarse { spacing, required });
    }
    let values = samples.component(component);
    let omega_values: Vec<f64> = t_values
        .iter()
        .map(|&t| window_oscillation(&samples.grid, values, t))
        .collect();

    let keep = if t_values.len() >= 7 {
        2..t_values.len() - 2
    } else {
        0..t_values.len()
    };
    let bound = 2.0 * samples.error_bound;
    let (xs, ys): (Vec<f64>, Vec<f64>) = keep
        .filter_map(|i| {
            let w = omega_values[i] + bound;
            (w > 0.0).then(|| (t_values[i].ln(), w.ln()))
        })
        .unzip();
    let fitted_exponent = if xs.len() >= 2 {
        least_squares(&xs, &ys).0
    } else {
        // constant samples: every difference vanishes
        f64::INFINITY
    };
    Ok(ModulusEstimate {
        t_values: t_values.to_vec(),
        omega_values,
        fitted_exponent,
    })
}

/// Largest `max - min` of `values` over grid windows of width at most `t`.
fn window_oscillation(grid: &[f64], values: &[f64], t: f64) -> f64 {
    let mut max_q: VecDeque<usize> = VecDeque::new();
    let mut min_q: VecDeque<usize> = VecDeque::new();
    let mut lo = 0;
    let mut best = 0.0f64;
    for hi in 0..grid.len() {
        while max_q.back().is_some_and(|&j| values[j] <= values[hi]) {
            max_q.pop_back();
        }
        max_q.push_back(hi);
        while min_q.back().is_some_and(|&j| values[j] >= values[hi]) {
            min_q.pop_back();
        }
        min_q.push_back(hi);
        while grid[hi] - grid[lo] > t {
            lo += 1;
        }
        while max_q.front().is_some_and(|&j| j < lo) {
            max_q.pop_front();
        }
        while min_q.front().is_some_and(|&j| j < lo) {
            min_q.pop_front();
        }
        best = best.max(values[max_q[0]] - values[min_q[0]]);
    }
    best
}
