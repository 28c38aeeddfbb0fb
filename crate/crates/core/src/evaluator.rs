//! Evaluation of the attractor function `f = (f1, f2)`.
//!
//! Three routes are provided:
//!
//! * [`refine`] computes the node images `Δ^j` exactly (forward iteration of all maps);
//! * [`evaluate_at`] unwinds the functional equation
//!   `f(x) = F_n(L_n^{-1}(x), f(L_n^{-1}(x)))` backwards from an arbitrary abscissa
//!   and returns a certified error bound;
//! * [`chaos_game`] samples the attractor by random iteration.
//!
//! Error bounds are tracked per component. A perturbation `(e_y, e_z)` of the
//! argument of `F_n` becomes `(|α_n| e_y + |β_n| e_z, |γ_n| e_z)`, so the distance
//! between the piecewise-linear seed and `f` shrinks along every address path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ChfifSystem, DataPoint};

/// Backward unwinding depth used when none is specified.
pub const DEFAULT_EVAL_DEPTH: usize = 60;

/// Iterates discarded by [`chaos_game`] before output starts.
pub const CHAOS_BURN_IN: usize = 20;

/// Relative tolerance for coincident refinement abscissae.
pub const DEDUP_TOLERANCE: f64 = 1e-12;

/// Caps on refinement size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefineLimits {
    pub max_depth: usize,
    pub max_points: u128,
}

impl Default for RefineLimits {
    fn default() -> Self {
        Self {
            max_depth: 12,
            max_points: 5_000_000,
        }
    }
}

/// Number of distinct points in `Δ^depth` for a system with `maps` maps.
pub fn refined_point_count(maps: usize, depth: usize) -> u128 {
    (maps as u128)
        .checked_pow(depth as u32 + 1)
        .and_then(|p| p.checked_add(1))
        .unwrap_or(u128::MAX)
}

/// The node images `Δ^j`, sorted by abscissa.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinedPointSet {
    pub depth: usize,
    pub points: Vec<DataPoint>,
}

pub fn refine(system: &ChfifSystem, depth: usize) -> Result<RefinedPointSet> {
    refine_with_limits(system, depth, RefineLimits::default())
}

pub fn refine_with_limits(
    system: &ChfifSystem,
    depth: usize,
    limits: RefineLimits,
) -> Result<RefinedPointSet> {
    let count = refined_point_count(system.map_count(), depth);
    if depth > limits.max_depth || count > limits.max_points {
        return Err(Error::DepthTooLarge {
            depth,
            points: count,
            limit: limits.max_points,
        });
    }
    let nodes = system.data().points();
    let mut level = nodes.to_vec();
    for _ in 0..depth {
        level = refine_once(system, &level);
    }
    Ok(RefinedPointSet {
        depth,
        points: level,
    })
}

fn refine_once(system: &ChfifSystem, level: &[DataPoint]) -> Vec<DataPoint> {
    let data = system.data();
    let nodes = data.points();
    let (x0, width) = (data.start(), data.width());
    let tol = DEDUP_TOLERANCE * width;
    let last = level.len() - 1;
    let mut next: Vec<DataPoint> = Vec::with_capacity(system.map_count() * last + 1);
    for (n, map) in system.maps().iter().enumerate() {
        for (i, p) in level.iter().enumerate() {
            // The level always starts at (x_0, y_0, z_0) and ends at (x_N, y_N, z_N),
            // whose images are nodes by the join-up conditions.
            let image = if i == 0 {
                nodes[n]
            } else if i == last {
                nodes[n + 1]
            } else {
                let t = (p.x - x0) / width;
                let (y, z) = map.f_at_fraction(t, p.y, p.z);
                DataPoint::new(map.l_at_fraction(t), y, z)
            };
            if let Some(prev) = next.last() {
                if (image.x - prev.x).abs() <= tol {
                    continue;
                }
            }
            next.push(image);
        }
    }
    next
}

/// A finite table of `f = (f1, f2)` on a sorted grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    pub grid: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// Sup-norm bound on the deviation of the piecewise-linear interpolant of the
    /// table from the true function.
    pub error_bound: f64,
    /// Refinement depth the table came from, when it came from [`sample_graph`].
    pub depth: Option<usize>,
    /// Bound on the distance between a listed abscissa and the true point whose
    /// values are listed. Zero for tables built with [`SampledFunction::new`].
    pub abscissa_tolerance: f64,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, f1: Vec<f64>, f2: Vec<f64>, error_bound: f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptySample);
        }
        if f1.len() != grid.len() || f2.len() != grid.len() {
            return Err(Error::LengthMismatch {
                what: "sample columns".into(),
                expected: grid.len(),
                found: f1.len().min(f2.len()),
            });
        }
        if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonIncreasingAbscissae {
                index: i + 1,
                previous: grid[i],
                current: grid[i + 1],
            });
        }
        Ok(Self {
            grid,
            f1,
            f2,
            error_bound,
            depth: None,
            abscissa_tolerance: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    pub fn component(&self, which: Component) -> &[f64] {
        match which {
            Component::F1 => &self.f1,
            Component::F2 => &self.f2,
        }
    }

    /// Largest gap between consecutive grid abscissae.
    pub fn max_spacing(&self) -> f64 {
        self.grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Piecewise-linear interpolation of the table (clamped to its range).
    pub fn interpolate(&self, x: f64) -> (f64, f64) {
        let idx = self.grid.partition_point(|&g| g < x);
        if idx == 0 {
            return (self.f1[0], self.f2[0]);
        }
        if idx == self.grid.len() {
            let last = self.grid.len() - 1;
            return (self.f1[last], self.f2[last]);
        }
        let (a, b) = (idx - 1, idx);
        let t = (x - self.grid[a]) / (self.grid[b] - self.grid[a]);
        (
            self.f1[a] + (self.f1[b] - self.f1[a]) * t,
            self.f2[a] + (self.f2[b] - self.f2[a]) * t,
        )
    }
}

/// Which coordinate of `f` to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    F1,
    F2,
}

/// Tabulates `f` on `Δ^depth` with the interpolation error bound for that depth.
pub fn sample_graph(system: &ChfifSystem, depth: usize) -> Result<SampledFunction> {
    sample_graph_with_limits(system, depth, RefineLimits::default())
}

pub fn sample_graph_with_limits(
    system: &ChfifSystem,
    depth: usize,
    limits: RefineLimits,
) -> Result<SampledFunction> {
    let refined = refine_with_limits(system, depth, limits)?;
    let n = refined.points.len();
    let (mut grid, mut f1, mut f2) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for p in &refined.points {
        grid.push(p.x);
        f1.push(p.y);
        f2.push(p.z);
    }
    Ok(SampledFunction {
        grid,
        f1,
        f2,
        error_bound: interpolation_bound(system, depth),
        depth: Some(depth),
        abscissa_tolerance: abscissa_tolerance(system, depth),
    })
}

/// Bound on the rounding drift of the abscissae in `Δ^depth`.
///
/// Each forward step computes `t = (x - x_0) / W` and `x_{n-1} + (x_n - x_{n-1}) t`;
/// incoming drift shrinks by at most the largest interval ratio.
pub fn abscissa_tolerance(system: &ChfifSystem, depth: usize) -> f64 {
    let data = system.data();
    let scale = data.start().abs().max(data.end().abs()) + data.width();
    let ratio = data.normalized_lengths().into_iter().fold(0.0f64, f64::max);
    (0..depth).fold(0.0, |r, _| ratio * r + 6.0 * f64::EPSILON * scale)
}

/// Componentwise bound `(e_y, e_z)` on `|f - g0|`, where `g0` is the
/// piecewise-linear interpolant of the data.
///
/// `T g0 - g0` is piecewise linear with breaks at `Δ^1`, so its sup is attained
/// there. With `D = |T g0 - g0|`, the contraction of the `z` part gives
/// `e_z <= D_z / (1 - max|γ|)`, and then `e_y <= (D_y + max|β| e_z) / (1 - max|α|)`.
pub fn seed_deviation(system: &ChfifSystem) -> (f64, f64) {
    let data = system.data();
    let level1 = refine_once(system, data.points());
    let (mut dy, mut dz) = (0.0f64, 0.0f64);
    for p in &level1 {
        let (gy, gz) = data.linear_interpolant(p.x);
        dy = dy.max((p.y - gy).abs());
        dz = dz.max((p.z - gz).abs());
    }
    let params = system.params();
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let (a, b, g) = (
        max_abs(&params.alpha),
        max_abs(&params.beta),
        max_abs(&params.gamma),
    );
    let ez = dz / (1.0 - g);
    let ey = (dy + b * ez) / (1.0 - a);
    (ey, ez)
}

/// Sup-norm distance between `f` and the piecewise-linear interpolant of `Δ^depth`.
pub fn interpolation_bound(system: &ChfifSystem, depth: usize) -> f64 {
    let (mut ey, mut ez) = seed_deviation(system);
    for _ in 0..depth {
        let mut ny = 0.0f64;
        let mut nz = 0.0f64;
        for m in system.maps() {
            ny = ny.max(m.alpha.abs() * ey + m.beta.abs() * ez);
            nz = nz.max(m.gamma.abs() * ez);
        }
        ey = ny;
        ez = nz;
    }
    ey.max(ez) + rounding_allowance(system, depth, (ey, ez))
}

fn rounding_allowance(system: &ChfifSystem, steps: usize, seed: (f64, f64)) -> f64 {
    let scale = system
        .data()
        .points()
        .iter()
        .fold(1.0f64, |m, p| m.max(p.y.abs()).max(p.z.abs()));
    (steps as f64 + 1.0) * 8.0 * f64::EPSILON * (scale + seed.0 + seed.1)
}

/// Value of `f` at one abscissa.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub f1: f64,
    pub f2: f64,
    /// Certified bound on `max(|f1 - f1_true|, |f2 - f2_true|)`.
    pub error_bound: f64,
    /// Backward steps actually taken (fewer than requested when a node was hit).
    pub steps: usize,
}

/// Evaluates `f(x)` by unwinding the functional equation `depth` times.
pub fn evaluate_at(system: &ChfifSystem, x: f64, depth: usize) -> Result<Evaluation> {
    let seed = seed_deviation(system);
    evaluate_with_seed(system, x, depth, seed, 0.0)
}

/// Like [`evaluate_at`], but the bound holds for `f(u)` at every `u` in the domain
/// with `|u - x| <= radius`.
pub fn evaluate_near(
    system: &ChfifSystem,
    x: f64,
    radius: f64,
    depth: usize,
) -> Result<Evaluation> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::ParameterConstraintViolation {
            constraint: format!("radius must be finite and non-negative, got {radius}"),
        });
    }
    let seed = seed_deviation(system);
    evaluate_with_seed(system, x, depth, seed, radius)
}

/// Error of `a + b` in floating point (Knuth's TwoSum).
fn sum_error(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

/// Whether `a * b == c * d` holds exactly for the real products.
fn products_equal(a: f64, b: f64, c: f64, d: f64) -> bool {
    let (p1, p2) = (a * b, c * d);
    p1 == p2 && a.mul_add(b, -p1) == c.mul_add(d, -p2)
}

/// Where backward unwinding stopped.
enum Stop {
    /// Exactly on node `i`.
    Node(usize),
    /// Within the given distance of node `i`.
    NearNode(usize, f64),
    /// Depth exhausted with this much abscissa uncertainty.
    Seed(f64),
}

pub(crate) fn evaluate_with_seed(
    system: &ChfifSystem,
    x: f64,
    depth: usize,
    seed: (f64, f64),
    radius: f64,
) -> Result<Evaluation> {
    let data = system.data();
    let maps = system.maps();
    let nodes = data.points();
    let (x0, width) = (data.start(), data.width());
    if x.is_nan() || x < x0 - radius || x > data.end() + radius {
        return Err(Error::AbscissaOutOfDomain {
            x,
            start: x0,
            end: data.end(),
        });
    }
    let x_scale = x0.abs().max(data.end().abs());
    let step_error = 4.0 * f64::EPSILON * (x_scale + width);
    let width_exact = sum_error(data.end(), -x0, width) == 0.0;

    // (map index, fraction of the preimage, bound on the fraction's error)
    let mut path: Vec<(usize, f64, f64)> = Vec::with_capacity(depth.min(256));
    let mut u = x.clamp(x0, data.end());
    let mut r = radius;
    let stop = loop {
        let idx = nodes.partition_point(|p| p.x < u);
        let nearest = [idx.saturating_sub(1), idx.min(nodes.len() - 1)]
            .into_iter()
            .map(|i| (i, (nodes[i].x - u).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least two nodes");
        if nearest.1 <= r {
            break if nearest.1 == 0.0 && r == 0.0 {
                Stop::Node(nearest.0)
            } else {
                Stop::NearNode(nearest.0, nearest.1 + r)
            };
        }
        if path.len() >= depth {
            break Stop::Seed(r);
        }
        let n = data.locate(u)?;
        let map = &maps[n - 1];
        let len = map.right - map.left;
        let prev = system.inverse_l_unchecked(map, u);
        let exact = r == 0.0 && width_exact && {
            let d = prev - x0;
            let a = u - map.left;
            sum_error(map.right, -map.left, len) == 0.0
                && sum_error(prev, -x0, d) == 0.0
                && sum_error(u, -map.left, a) == 0.0
                && products_equal(d, len, a, width)
        };
        let stretch = width / len * (1.0 + 4.0 * f64::EPSILON);
        r = if exact {
            0.0
        } else {
            r * stretch + step_error * (1.0 + stretch)
        };
        path.push((n - 1, (prev - x0) / width, r / width + 2.0 * f64::EPSILON));
        u = prev;
    };

    let (mut y, mut z, mut ey, mut ez) = match stop {
        Stop::Node(i) => (nodes[i].y, nodes[i].z, 0.0, 0.0),
        Stop::NearNode(i, dist) => {
            let (oy, oz) = node_oscillation(system, i, dist, seed);
            (nodes[i].y, nodes[i].z, oy, oz)
        }
        Stop::Seed(r) => {
            let (gy, gz) = data.linear_interpolant(u);
            let (ly, lz) = interpolant_slopes(system);
            (gy, gz, seed.0 + ly * r, seed.1 + lz * r)
        }
    };
    for &(n, t, dt) in path.iter().rev() {
        let map = &maps[n];
        (y, z) = map.f_at_fraction(t, y, z);
        let (sp, sq) = (map.p.fraction_slope().abs(), map.q.fraction_slope().abs());
        ey = map.alpha.abs() * ey + map.beta.abs() * ez + sp * dt;
        ez = map.gamma.abs() * ez + sq * dt;
    }
    let error_bound = if path.is_empty() && matches!(stop, Stop::Node(_)) {
        0.0
    } else if path.is_empty() {
        ey.max(ez)
    } else {
        ey.max(ez) + rounding_allowance(system, path.len(), seed)
    };
    Ok(Evaluation {
        f1: y,
        f2: z,
        error_bound,
        steps: path.len(),
    })
}

/// Largest slopes `(|dy/dx|, |dz/dx|)` of the piecewise-linear interpolant of the data.
fn interpolant_slopes(system: &ChfifSystem) -> (f64, f64) {
    system
        .data()
        .points()
        .windows(2)
        .fold((0.0f64, 0.0f64), |(ly, lz), w| {
            let dx = w[1].x - w[0].x;
            (
                ly.max((w[1].y - w[0].y).abs() / dx),
                lz.max((w[1].z - w[0].z).abs() / dx),
            )
        })
}

/// Componentwise bound on `|f(u) - f(x_i)|` for `|u - x_i| <= dist`.
///
/// Near an interior node the left side is the image of the right end of the
/// domain under map `i` and the right side the image of the left end under map
/// `i + 1`; each side follows a single chain of endpoint neighbourhoods.
fn node_oscillation(system: &ChfifSystem, i: usize, dist: f64, seed: (f64, f64)) -> (f64, f64) {
    let data = system.data();
    let nodes = data.points();
    let last = nodes.len() - 1;
    let mut out = (0.0f64, 0.0f64);
    let mut side = |map_index: usize, end: usize| {
        let map = &system.maps()[map_index];
        let global = global_oscillation(system, i, seed);
        if dist >= map.right - map.left {
            out = (out.0.max(global.0), out.1.max(global.1));
            return;
        }
        let (ey, ez) = endpoint_oscillation(system, end, dist / (map.right - map.left), seed);
        let t = dist / (map.right - map.left);
        let oy = (map.alpha.abs() * ey + map.beta.abs() * ez + map.p.fraction_slope().abs() * t)
            .min(global.0);
        let oz = (map.gamma.abs() * ez + map.q.fraction_slope().abs() * t).min(global.1);
        out = (out.0.max(oy), out.1.max(oz));
    };
    if i > 0 {
        side(i - 1, last);
    }
    if i < last {
        side(i, 0);
    }
    out
}

/// Bound on `|f(u) - f(x_i)|` over the whole domain.
fn global_oscillation(system: &ChfifSystem, i: usize, seed: (f64, f64)) -> (f64, f64) {
    let nodes = system.data().points();
    let c = nodes[i];
    let (dy, dz) = nodes.iter().fold((0.0f64, 0.0f64), |(a, b), p| {
        (a.max((p.y - c.y).abs()), b.max((p.z - c.z).abs()))
    });
    (dy + seed.0, dz + seed.1)
}

/// Bound on `|f(u) - f(x_end)|` for `u` within `fraction * W` of the domain end
/// `end` (either `0` or `N`).
fn endpoint_oscillation(
    system: &ChfifSystem,
    end: usize,
    fraction: f64,
    seed: (f64, f64),
) -> (f64, f64) {
    const MAX_CHAIN: usize = 400;
    let maps = system.maps();
    let map = if end == 0 {
        &maps[0]
    } else {
        &maps[maps.len() - 1]
    };
    let ratio = (map.right - map.left) / system.data().width();
    let global = global_oscillation(system, end, seed);
    let mut radii = Vec::new();
    let mut t = fraction;
    while t < ratio && radii.len() < MAX_CHAIN {
        radii.push(t);
        t /= ratio;
    }
    let (sp, sq) = (map.p.fraction_slope().abs(), map.q.fraction_slope().abs());
    let (mut oy, mut oz) = global;
    for &t in radii.iter().rev() {
        let pre = (t / ratio).min(1.0);
        let ny = map.alpha.abs() * oy + map.beta.abs() * oz + sp * pre;
        let nz = map.gamma.abs() * oz + sq * pre;
        oy = ny.min(global.0);
        oz = nz.min(global.1);
    }
    (oy, oz)
}

/// Evaluates many abscissae, reusing the seed bound.
pub fn evaluate_many(system: &ChfifSystem, xs: &[f64], depth: usize) -> Result<Vec<Evaluation>> {
    let seed = seed_deviation(system);
    xs.iter()
        .map(|&x| evaluate_with_seed(system, x, depth, seed, 0.0))
        .collect()
}

/// Random-iteration sample of the attractor, reproducible for a fixed seed.
pub fn chaos_game(system: &ChfifSystem, count: usize, seed: u64) -> Vec<DataPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps = system.maps();
    let data = system.data();
    let (x0, width) = (data.start(), data.width());
    let mut p = data.first();
    let mut out = Vec::with_capacity(count);
    for i in 0..CHAOS_BURN_IN + count {
        let map = &maps[rng.random_range(0..maps.len())];
        let t = ((p.x - x0) / width).clamp(0.0, 1.0);
        let (y, z) = map.f_at_fraction(t, p.y, p.z);
        p = DataPoint::new(map.l_at_fraction(t), y, z);
        if i >= CHAOS_BURN_IN {
            out.push(p);
        }
    }
    out
}

/// Largest residual of the two-map composition identities
///
/// ```text
/// f1(L_{i2}(L_{i1}(x))) = α_{i2}(α_{i1} f1(x) + β_{i1} f2(x) + p_{i1}(x))
///                        + β_{i2}(γ_{i1} f2(x) + q_{i1}(x)) + p_{i2}(L_{i1}(x))
/// f2(L_{i2}(L_{i1}(x))) = γ_{i2}(γ_{i1} f2(x) + q_{i1}(x)) + q_{i2}(L_{i1}(x))
/// ```
///
/// over every pair of maps and every grid abscissa. The right-hand sides use the
/// grid values. For a table from [`sample_graph`] at depth `j` the left-hand sides
/// are looked up by abscissa in `Δ^{j+2}`; otherwise they come from
/// [`evaluate_at`].
///
/// The lookup matters: the grid abscissae carry rounding, and `f` is only Hölder
/// near the nodes, so re-evaluating at a rounded abscissa can move the value far
/// more than the rounding itself.
pub fn composition_check(system: &ChfifSystem, grid: &SampledFunction) -> Result<f64> {
    let fine = match grid.depth {
        Some(j) => Some(refine_with_limits(
            system,
            j + 2,
            RefineLimits {
                max_depth: j + 2,
                max_points: u128::MAX,
            },
        )?),
        None => None,
    };
    let seed = seed_deviation(system);
    let tol = DEDUP_TOLERANCE * system.data().width();
    let maps = system.maps();
    let mut worst = 0.0f64;
    for (i, &x) in grid.grid.iter().enumerate() {
        let (f1, f2) = (grid.f1[i], grid.f2[i]);
        let t = system.fraction(x)?;
        for m1 in maps {
            let inner_y = m1.alpha * f1 + m1.beta * f2 + m1.p.at_fraction(t);
            let inner_z = m1.gamma * f2 + m1.q.at_fraction(t);
            let u = m1.l_at_fraction(t);
            let s = system.fraction(u)?;
            for m2 in maps {
                let rhs1 = m2.alpha * inner_y + m2.beta * inner_z + m2.p.at_fraction(s);
                let rhs2 = m2.gamma * inner_z + m2.q.at_fraction(s);
                let v = m2.l_at_fraction(s);
                let lhs = match &fine {
                    Some(fine) => {
                        let idx = fine.points.partition_point(|q| q.x < v - tol);
                        let hit = fine
                            .points
                            .get(idx)
                            .filter(|q| (q.x - v).abs() <= tol)
                            .ok_or(Error::AbscissaOutOfDomain {
                                x: v,
                                start: system.data().start(),
                                end: system.data().end(),
                            })?;
                        (hit.y, hit.z)
                    }
                    None => {
                        let e = evaluate_with_seed(system, v, DEFAULT_EVAL_DEPTH, seed, 0.0)?;
                        (e.f1, e.f2)
                    }
                };
                worst = worst.max((lhs.0 - rhs1).abs()).max((lhs.1 - rhs2).abs());
            }
        }
    }
    Ok(worst)
}

/// Largest residual of `f(L_n(x)) = F_n(x, f(x))` over `Δ^depth`, with the left
/// side looked up by abscissa in `Δ^{depth+1}`.
pub fn functional_equation_residual(system: &ChfifSystem, depth: usize) -> Result<f64> {
    functional_equation_residual_with_limits(system, depth, RefineLimits::default())
}

pub fn functional_equation_residual_with_limits(
    system: &ChfifSystem,
    depth: usize,
    limits: RefineLimits,
) -> Result<f64> {
    let coarse = refine_with_limits(system, depth, limits)?;
    let fine = refine_with_limits(
        system,
        depth + 1,
        RefineLimits {
            max_depth: limits.max_depth.max(depth + 1),
            ..limits
        },
    )?;
    let tol = DEDUP_TOLERANCE * system.data().width();
    let mut worst = 0.0f64;
    for p in &coarse.points {
        let t = system.fraction(p.x)?;
        for map in system.maps() {
            let u = map.l_at_fraction(t);
            let (y, z) = map.f_at_fraction(t, p.y, p.z);
            let idx = fine.points.partition_point(|q| q.x < u - tol);
            let hit = fine
                .points
                .get(idx)
                .filter(|q| (q.x - u).abs() <= tol)
                .ok_or(Error::AbscissaOutOfDomain {
                    x: u,
                    start: system.data().start(),
                    end: system.data().end(),
                })?;
            worst = worst.max((hit.y - y).abs()).max((hit.z - z).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample;

    #[test]
    fn depth_zero_is_the_data() {
        let sys = sample::system();
        let r = refine(&sys, 0).unwrap();
        assert_eq!(r.points, sys.data().points());
    }

    #[test]
    fn depth_one_has_ten_points() {
        let sys = sample::system();
        let r = refine(&sys, 1).unwrap();
        assert_eq!(r.points.len(), 10);
        let p = r.points.iter().find(|p| p.x == 39.0).expect("ω_2(x_1)");
        assert!((p.y - 135.6).abs() < 1e-12 && (p.z - 56.8).abs() < 1e-12);
    }

    #[test]
    fn point_counts_follow_closed_form() {
        let sys = sample::system();
        for j in 0..6 {
            let r = refine(&sys, j).unwrap();
            assert_eq!(r.points.len() as u128, refined_point_count(3, j));
            assert!(r.points.windows(2).all(|w| w[0].x < w[1].x));
        }
    }

    #[test]
    fn refinement_is_nested() {
        let sys = sample::system();
        let mut prev = refine(&sys, 0).unwrap().points;
        for j in 1..=5 {
            let cur = refine(&sys, j).unwrap().points;
            for p in &prev {
                let q = cur.iter().find(|q| q.x == p.x).expect("nested abscissa");
                assert_eq!(p, q);
            }
            prev = cur;
        }
    }

    #[test]
    fn depth_limit() {
        let sys = sample::system();
        assert!(matches!(refine(&sys, 13), Err(Error::DepthTooLarge { .. })));
        let tight = RefineLimits {
            max_depth: 12,
            max_points: 100,
        };
        assert!(matches!(
            refine_with_limits(&sys, 4, tight),
            Err(Error::DepthTooLarge { points: 244, .. })
        ));
    }

    #[test]
    fn sample_contains_nodes_exactly() {
        let sys = sample::system();
        let s = sample_graph(&sys, 3).unwrap();
        assert_eq!(s.len(), 82);
        for p in sys.data().points() {
            let i = s.grid.iter().position(|&x| x == p.x).unwrap();
            assert_eq!((s.f1[i], s.f2[i]), (p.y, p.z));
        }
    }

    #[test]
    fn evaluate_nodes_exactly() {
        let sys = sample::system();
        for p in sys.data().points() {
            let e = evaluate_at(&sys, p.x, 60).unwrap();
            assert_eq!((e.f1, e.f2, e.error_bound), (p.y, p.z, 0.0));
        }
    }

    #[test]
    fn evaluate_one_step_image() {
        let sys = sample::system();
        let e = evaluate_at(&sys, 39.0, 5).unwrap();
        assert_eq!(e.steps, 1);
        assert!((e.f1 - 135.6).abs() < 1e-12);
        assert!((e.f2 - 56.8).abs() < 1e-12);
        assert!(e.error_bound < 1e-10);
    }

    #[test]
    fn evaluate_out_of_domain() {
        let sys = sample::system();
        assert!(matches!(
            evaluate_at(&sys, -1.0, 10),
            Err(Error::AbscissaOutOfDomain { .. })
        ));
    }

    #[test]
    fn chaos_game_is_reproducible() {
        let sys = sample::system();
        let a = chaos_game(&sys, 500, 9);
        let b = chaos_game(&sys, 500, 9);
        assert_eq!(a, b);
        assert_ne!(a, chaos_game(&sys, 500, 10));
        let one = chaos_game(&sys, 1, 3);
        assert_eq!(one.len(), 1);
        assert!(one[0].x >= 0.0 && one[0].x <= 100.0);
    }

    #[test]
    fn composition_identity_at_start() {
        let sys = sample::system();
        let grid = SampledFunction::new(vec![0.0], vec![0.0], vec![10.0], 0.0).unwrap();
        assert!(composition_check(&sys, &grid).unwrap() < 1e-12);
    }

    #[test]
    fn composition_detects_perturbed_hidden_component() {
        let sys = sample::system();
        let mut grid = sample_graph(&sys, 2).unwrap();
        for v in &mut grid.f2 {
            *v += 1.0;
        }
        let min_gg = sys
            .params()
            .gamma
            .iter()
            .flat_map(|a| sys.params().gamma.iter().map(move |b| (a * b).abs()))
            .fold(f64::INFINITY, f64::min);
        assert!(composition_check(&sys, &grid).unwrap() >= min_gg - 1e-9);
    }

    #[test]
    fn sample_rejects_bad_tables() {
        assert!(matches!(
            SampledFunction::new(vec![], vec![], vec![], 0.0),
            Err(Error::EmptySample)
        ));
        assert!(SampledFunction::new(vec![1.0, 1.0], vec![0.0; 2], vec![0.0; 2], 0.0).is_err());
    }
}
