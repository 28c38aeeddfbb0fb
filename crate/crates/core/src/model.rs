//! Interpolation data, IFS parameters and the validated system built from them.
//!
//! A system over `N + 1` points `(x_i, y_i, z_i)` has `N` maps
//! `ω_n(x, y, z) = (L_n(x), F_n(x, y, z))` with
//!
//! ```text
//! L_n(x)       = x_{n-1} + (x_n - x_{n-1}) (x - x_0) / (x_N - x_0)
//! F_n(x, y, z) = (α_n y + β_n z + p_n(x),  γ_n z + q_n(x))
//! ```
//!
//! where the affine `p_n`, `q_n` are fixed by the join-up conditions
//! `F_n(x_0, y_0, z_0) = (y_{n-1}, z_{n-1})` and `F_n(x_N, y_N, z_N) = (y_n, z_n)`.
//!
//! Map indices `n` in the public API are 1-based, matching the subinterval
//! `I_n = [x_{n-1}, x_n]` they cover.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One generalized interpolation point: abscissa, primary ordinate, hidden ordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl DataPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

impl From<(f64, f64, f64)> for DataPoint {
    fn from((x, y, z): (f64, f64, f64)) -> Self {
        Self { x, y, z }
    }
}

/// Validated generalized interpolation data with strictly increasing abscissae.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedDataSet {
    points: Vec<DataPoint>,
}

impl GeneralizedDataSet {
    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    /// Number of subintervals `N` (one less than the point count).
    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.points[0].x
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1].x
    }

    pub fn width(&self) -> f64 {
        self.end() - self.start()
    }

    pub fn first(&self) -> DataPoint {
        self.points[0]
    }

    pub fn last(&self) -> DataPoint {
        self.points[self.points.len() - 1]
    }

    /// Subinterval `I_n` for 1-based `n`.
    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.points[n - 1].x, self.points[n].x)
    }

    /// Lengths `|I_n| / |I|` of all subintervals on the domain rescaled to `[0, 1]`.
    pub fn normalized_lengths(&self) -> Vec<f64> {
        let width = self.width();
        self.points
            .windows(2)
            .map(|w| (w[1].x - w[0].x) / width)
            .collect()
    }

    /// Index of the node whose abscissa equals `x` exactly, if any.
    pub fn node_at(&self, x: f64) -> Option<usize> {
        self.points.binary_search_by(|p| p.x.total_cmp(&x)).ok()
    }

    /// 1-based index of the subinterval containing `x`; shared endpoints resolve
    /// to the left interval.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(x >= self.start() && x <= self.end()) {
            return Err(Error::AbscissaOutOfDomain {
                x,
                start: self.start(),
                end: self.end(),
            });
        }
        // first node with abscissa >= x
        let idx = self.points.partition_point(|p| p.x < x);
        Ok(idx.max(1))
    }

    /// Piecewise-linear interpolant of the data at `x` (clamped to the domain).
    pub fn linear_interpolant(&self, x: f64) -> (f64, f64) {
        let x = x.clamp(self.start(), self.end());
        let n = self.locate(x).expect("clamped abscissa is in the domain");
        let a = self.points[n - 1];
        let b = self.points[n];
        let t = (x - a.x) / (b.x - a.x);
        (lerp(a.y, b.y, t), lerp(a.z, b.z, t))
    }
}

/// Validates raw triples into a data set.
pub fn validate_data<P>(points: &[P]) -> Result<GeneralizedDataSet>
where
    P: Copy + Into<DataPoint>,
{
    let points: Vec<DataPoint> = points.iter().map(|&p| p.into()).collect();
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            found: points.len(),
            required: 2,
        });
    }
    for (i, p) in points.iter().enumerate() {
        for (name, v) in [("x", p.x), ("y", p.y), ("z", p.z)] {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    what: format!("{name}[{i}]"),
                });
            }
        }
    }
    for (i, w) in points.windows(2).enumerate() {
        if w[1].x <= w[0].x {
            return Err(Error::NonIncreasingAbscissae {
                index: i + 1,
                previous: w[0].x,
                current: w[1].x,
            });
        }
    }
    Ok(GeneralizedDataSet { points })
}

/// Vertical scaling factors: `alpha` and `gamma` are free, `beta` is constrained
/// by `|beta_n| + |gamma_n| < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsParameters {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl IfsParameters {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64>) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Checks lengths against `maps` and the contraction constraints.
    /// Diagnostics use 1-based map indices.
    pub fn validate(&self, maps: usize) -> Result<()> {
        for (what, v) in [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
        ] {
            if v.len() != maps {
                return Err(Error::LengthMismatch {
                    what: what.to_string(),
                    expected: maps,
                    found: v.len(),
                });
            }
        }
        for n in 0..maps {
            check_triple(
                &format!("[{}]", n + 1),
                self.alpha[n],
                self.beta[n],
                self.gamma[n],
            )?;
        }
        Ok(())
    }
}

/// Contraction constraints for one map; `label` is appended to each parameter name.
pub(crate) fn check_triple(label: &str, alpha: f64, beta: f64, gamma: f64) -> Result<()> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if !v.is_finite() {
            return Err(Error::NonFiniteValue {
                what: format!("{name}{label}"),
            });
        }
    }
    if alpha.abs() >= 1.0 {
        return Err(Error::ParameterConstraintViolation {
            constraint: format!("|alpha{label}| = {} >= 1", fmt_num(alpha.abs())),
        });
    }
    if gamma.abs() >= 1.0 {
        return Err(Error::ParameterConstraintViolation {
            constraint: format!("|gamma{label}| = {} >= 1", fmt_num(gamma.abs())),
        });
    }
    let sum = beta.abs() + gamma.abs();
    if sum >= 1.0 {
        return Err(Error::ParameterConstraintViolation {
            constraint: format!("|beta{label}|+|gamma{label}| = {} >= 1", fmt_num(sum)),
        });
    }
    Ok(())
}

/// Short decimal rendering for diagnostics: at least two decimals, at most six.
pub(crate) fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let trimmed = s.trim_end_matches('0');
    let decimals = trimmed.split('.').nth(1).map_or(0, str::len);
    if decimals >= 2 {
        trimmed.to_string()
    } else {
        format!("{v:.2}")
    }
}

#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // exact at t = 0 and t = 1
    a * (1.0 - t) + b * t
}

/// An affine function on `I = [x_0, x_N]` stored by its endpoint values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineCoefficientPair {
    pub value_at_x0: f64,
    pub value_at_xn: f64,
}

impl AffineCoefficientPair {
    /// Value at the normalized position `t = (x - x_0) / (x_N - x_0)`.
    #[inline]
    pub fn at_fraction(&self, t: f64) -> f64 {
        lerp(self.value_at_x0, self.value_at_xn, t)
    }

    /// Slope with respect to `t`.
    pub fn fraction_slope(&self) -> f64 {
        self.value_at_xn - self.value_at_x0
    }
}

/// One map `ω_n = (L_n, F_n)` of the system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionMap {
    /// `x_{n-1}`
    pub left: f64,
    /// `x_n`
    pub right: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub p: AffineCoefficientPair,
    pub q: AffineCoefficientPair,
}

impl ContractionMap {
    /// `L_n` at normalized position `t`.
    #[inline]
    pub fn l_at_fraction(&self, t: f64) -> f64 {
        lerp(self.left, self.right, t)
    }

    /// `F_n` at normalized position `t`.
    #[inline]
    pub fn f_at_fraction(&self, t: f64, y: f64, z: f64) -> (f64, f64) {
        (
            self.alpha * y + self.beta * z + self.p.at_fraction(t),
            self.gamma * z + self.q.at_fraction(t),
        )
    }
}

/// A validated coalescence hidden-variable IFS. Immutable after construction.
#[derive(Clone, Debug)]
pub struct ChfifSystem {
    data: GeneralizedDataSet,
    params: IfsParameters,
    maps: Vec<ContractionMap>,
}

/// Builds the system, solving `p_n`, `q_n` from the join-up conditions.
pub fn build_system(data: GeneralizedDataSet, params: IfsParameters) -> Result<ChfifSystem> {
    let n_maps = data.intervals();
    params.validate(n_maps)?;
    let first = data.first();
    let last = data.last();
    let maps = (1..=n_maps)
        .map(|n| {
            let a = data.points()[n - 1];
            let b = data.points()[n];
            let (alpha, beta, gamma) =
                (params.alpha[n - 1], params.beta[n - 1], params.gamma[n - 1]);
            ContractionMap {
                left: a.x,
                right: b.x,
                alpha,
                beta,
                gamma,
                p: AffineCoefficientPair {
                    value_at_x0: a.y - alpha * first.y - beta * first.z,
                    value_at_xn: b.y - alpha * last.y - beta * last.z,
                },
                q: AffineCoefficientPair {
                    value_at_x0: a.z - gamma * first.z,
                    value_at_xn: b.z - gamma * last.z,
                },
            }
        })
        .collect();
    Ok(ChfifSystem { data, params, maps })
}

impl ChfifSystem {
    pub fn data(&self) -> &GeneralizedDataSet {
        &self.data
    }

    pub fn params(&self) -> &IfsParameters {
        &self.params
    }

    pub fn maps(&self) -> &[ContractionMap] {
        &self.maps
    }

    pub fn map_count(&self) -> usize {
        self.maps.len()
    }

    /// Map `n` (1-based).
    pub fn map(&self, n: usize) -> Result<&ContractionMap> {
        if n == 0 || n > self.maps.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                count: self.maps.len(),
            });
        }
        Ok(&self.maps[n - 1])
    }

    /// `(scale, offset)` with `L_n(x) = scale * x + offset`.
    pub fn l_coeffs(&self) -> Vec<(f64, f64)> {
        let x0 = self.data.start();
        let width = self.data.width();
        self.maps
            .iter()
            .map(|m| {
                let scale = (m.right - m.left) / width;
                (scale, m.left - scale * x0)
            })
            .collect()
    }

    /// `(x - x_0) / (x_N - x_0)` after checking the domain.
    pub fn fraction(&self, x: f64) -> Result<f64> {
        let (start, end) = (self.data.start(), self.data.end());
        if !(x >= start && x <= end) {
            return Err(Error::AbscissaOutOfDomain { x, start, end });
        }
        Ok(((x - start) / (end - start)).clamp(0.0, 1.0))
    }

    pub fn eval_l(&self, n: usize, x: f64) -> Result<f64> {
        let map = self.map(n)?;
        Ok(map.l_at_fraction(self.fraction(x)?))
    }

    /// `L_n^{-1}(u)` for `u` in `I_n`, clamped to `I`.
    pub fn inverse_l(&self, n: usize, u: f64) -> Result<f64> {
        let map = self.map(n)?;
        if !(u >= map.left && u <= map.right) {
            return Err(Error::AbscissaOutOfDomain {
                x: u,
                start: map.left,
                end: map.right,
            });
        }
        Ok(self.inverse_l_unchecked(map, u))
    }

    #[inline]
    pub(crate) fn inverse_l_unchecked(&self, map: &ContractionMap, u: f64) -> f64 {
        if u == map.right {
            return self.data.end();
        }
        let x0 = self.data.start();
        (x0 + (u - map.left) * self.data.width() / (map.right - map.left))
            .clamp(x0, self.data.end())
    }

    pub fn eval_f(&self, n: usize, x: f64, y: f64, z: f64) -> Result<(f64, f64)> {
        let map = self.map(n)?;
        Ok(map.f_at_fraction(self.fraction(x)?, y, z))
    }

    /// `ω_n(x, y, z)`.
    pub fn apply(&self, n: usize, point: DataPoint) -> Result<DataPoint> {
        let map = self.map(n)?;
        let t = self.fraction(point.x)?;
        let (y, z) = map.f_at_fraction(t, point.y, point.z);
        Ok(DataPoint::new(map.l_at_fraction(t), y, z))
    }

    /// Largest deviation from the join-up conditions over all maps.
    pub fn join_up_residual(&self) -> f64 {
        let first = self.data.first();
        let last = self.data.last();
        let pts = self.data.points();
        self.maps
            .iter()
            .enumerate()
            .flat_map(|(i, m)| {
                let (y0, z0) = m.f_at_fraction(0.0, first.y, first.z);
                let (y1, z1) = m.f_at_fraction(1.0, last.y, last.z);
                [
                    (y0 - pts[i].y).abs(),
                    (z0 - pts[i].z).abs(),
                    (y1 - pts[i + 1].y).abs(),
                    (z1 - pts[i + 1].z).abs(),
                ]
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `L_n` from the subinterval endpoints, relative to `|I|`.
    pub fn endpoint_residual(&self) -> f64 {
        let width = self.data.width();
        self.maps
            .iter()
            .map(|m| {
                ((m.l_at_fraction(0.0) - m.left).abs() + (m.l_at_fraction(1.0) - m.right).abs())
                    / width
            })
            .fold(0.0, f64::max)
    }
}

/// The worked example: four points and the parameter table used throughout the docs.
pub mod sample {
    use super::*;

    pub const POINTS: [(f64, f64, f64); 4] = [
        (0.0, 0.0, 10.0),
        (30.0, 90.0, 40.0),
        (60.0, 70.0, 80.0),
        (100.0, 20.0, 30.0),
    ];
    pub const ALPHA: [f64; 3] = [0.2, 0.5, 0.3];
    pub const BETA: [f64; 3] = [0.3, 0.4, 0.1];
    pub const GAMMA: [f64; 3] = [0.6, 0.2, 0.5];

    pub fn data() -> GeneralizedDataSet {
        validate_data(&POINTS).expect("sample data is valid")
    }

    pub fn params() -> IfsParameters {
        IfsParameters::new(ALPHA.to_vec(), BETA.to_vec(), GAMMA.to_vec())
    }

    pub fn system() -> ChfifSystem {
        build_system(data(), params()).expect("sample parameters are valid")
    }
}
