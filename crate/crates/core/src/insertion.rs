//! Inserting one point `(x̂, ŷ, ẑ)` with `x_{k-1} < x̂ < x_k` into a system.
//!
//! The subinterval `I_k` is split into `I_k^l = [x_{k-1}, x̂]` and
//! `I_k^r = [x̂, x_k]`; the resulting `N + 1` maps are exactly the maps of a system
//! built over the enlarged data, so [`insert`] rebuilds through
//! [`build_system`] and the join-up conditions fix the split `p`, `q`.

use crate::error::{Error, Result};
use crate::evaluator::evaluate_at;
use crate::model::{build_system, check_triple, validate_data, ChfifSystem, IfsParameters};

/// Absolute knot tolerance used when none is given.
pub const DEFAULT_KNOT_TOLERANCE: f64 = 1e-6;

const FIRST_CLASSIFY_DEPTH: usize = 40;
const MAX_CLASSIFY_DEPTH: usize = 400;

/// Parameters of the two maps replacing map `k`, as `(left, right)` pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitParameters {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
}

impl SplitParameters {
    /// `α_k^l = ρ_x α_k`, `α_k^r = (1 - ρ_x) α_k`, and likewise for `β`, `γ`.
    pub fn proportional(alpha: f64, beta: f64, gamma: f64, rho_x: f64) -> Self {
        let split = |v: f64| (rho_x * v, (1.0 - rho_x) * v);
        Self {
            alpha: split(alpha),
            beta: split(beta),
            gamma: split(gamma),
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        check_triple(&format!("[{k}l]"), self.alpha.0, self.beta.0, self.gamma.0)?;
        check_triple(&format!("[{k}r]"), self.alpha.1, self.beta.1, self.gamma.1)
    }
}

/// A validated insertion request.
#[derive(Clone, Debug, PartialEq)]
pub struct InsertionSpec {
    pub x_hat: f64,
    pub y_hat: f64,
    pub z_hat: f64,
    /// 1-based index of the subinterval containing `x_hat`.
    pub k: usize,
    pub rho_x: f64,
    /// `None` when `y_k = y_{k-1}`.
    pub rho_y: Option<f64>,
    /// `None` when `z_k = z_{k-1}`.
    pub rho_z: Option<f64>,
    pub overrides: Option<SplitParameters>,
}

impl InsertionSpec {
    pub fn new(system: &ChfifSystem, x_hat: f64, y_hat: f64, z_hat: f64) -> Result<Self> {
        let data = system.data();
        for (what, v) in [("x_hat", x_hat), ("y_hat", y_hat), ("z_hat", z_hat)] {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { what: what.into() });
            }
        }
        if !(x_hat > data.start() && x_hat < data.end()) {
            return Err(Error::AbscissaOutOfDomain {
                x: x_hat,
                start: data.start(),
                end: data.end(),
            });
        }
        if let Some(index) = data.node_at(x_hat) {
            return Err(Error::AbscissaCollision {
                x: x_hat,
                index,
                node: x_hat,
            });
        }
        let k = data.locate(x_hat)?;
        let a = data.points()[k - 1];
        let b = data.points()[k];
        let ratio = |v: f64, lo: f64, hi: f64| (hi != lo).then(|| (v - lo) / (hi - lo));
        Ok(Self {
            x_hat,
            y_hat,
            z_hat,
            k,
            rho_x: (x_hat - a.x) / (b.x - a.x),
            rho_y: ratio(y_hat, a.y, b.y),
            rho_z: ratio(z_hat, a.z, b.z),
            overrides: None,
        })
    }

    pub fn with_overrides(mut self, overrides: SplitParameters) -> Result<Self> {
        overrides.validate(self.k)?;
        self.overrides = Some(overrides);
        Ok(self)
    }

    /// Overrides when present, otherwise the proportional split of map `k`.
    pub fn split_parameters(&self, system: &ChfifSystem) -> SplitParameters {
        self.overrides.unwrap_or_else(|| {
            let p = system.params();
            let i = self.k - 1;
            SplitParameters::proportional(p.alpha[i], p.beta[i], p.gamma[i], self.rho_x)
        })
    }
}

/// The four insertion problems, crossing knot/node over the two ordinates.
/// The first word refers to `ŷ` against `f1(x̂)`, the second to `ẑ` against `f2(x̂)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InsertionKind {
    NodeNode,
    NodeKnot,
    KnotNode,
    KnotKnot,
}

impl InsertionKind {
    pub fn from_knots(y_is_knot: bool, z_is_knot: bool) -> Self {
        match (y_is_knot, z_is_knot) {
            (false, false) => Self::NodeNode,
            (false, true) => Self::NodeKnot,
            (true, false) => Self::KnotNode,
            (true, true) => Self::KnotKnot,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NodeNode => "node-node",
            Self::NodeKnot => "node-knot",
            Self::KnotNode => "knot-node",
            Self::KnotKnot => "knot-knot",
        }
    }
}

impl std::fmt::Display for InsertionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of [`classify_insertion`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub kind: InsertionKind,
    pub tolerance_used: f64,
    /// `f(x̂)` of the original system and its certified error bound.
    pub f1: f64,
    pub f2: f64,
    pub error_bound: f64,
}

/// Compares `(ŷ, ẑ)` with `f(x̂)`, deepening the evaluation until its certified
/// error bound is below `tol / 10`.
pub fn classify_insertion(
    system: &ChfifSystem,
    x_hat: f64,
    y_hat: f64,
    z_hat: f64,
    tol: f64,
) -> Result<Classification> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::HypothesisNotMet(format!(
            "knot tolerance must be positive, got {tol}"
        )));
    }
    let data = system.data();
    if !(x_hat > data.start() && x_hat < data.end()) {
        return Err(Error::AbscissaOutOfDomain {
            x: x_hat,
            start: data.start(),
            end: data.end(),
        });
    }
    if let Some((index, node)) = data
        .points()
        .iter()
        .enumerate()
        .find(|(_, p)| (p.x - x_hat).abs() <= tol)
    {
        return Err(Error::AbscissaCollision {
            x: x_hat,
            index,
            node: node.x,
        });
    }
    let target = tol / 10.0;
    let mut depth = FIRST_CLASSIFY_DEPTH;
    let eval = loop {
        let e = evaluate_at(system, x_hat, depth)?;
        if e.error_bound <= target {
            break e;
        }
        if depth >= MAX_CLASSIFY_DEPTH {
            return Err(Error::EvaluationTooCoarse {
                bound: e.error_bound,
                target,
                depth,
            });
        }
        depth += FIRST_CLASSIFY_DEPTH;
    };
    let kind = InsertionKind::from_knots(
        (y_hat - eval.f1).abs() <= tol,
        (z_hat - eval.f2).abs() <= tol,
    );
    Ok(Classification {
        kind,
        tolerance_used: tol,
        f1: eval.f1,
        f2: eval.f2,
        error_bound: eval.error_bound,
    })
}

/// Builds the `N + 1`-map system over the data with `(x̂, ŷ, ẑ)` inserted at position `k`.
/// Maps other than `k` keep their parameters.
pub fn insert(system: &ChfifSystem, spec: &InsertionSpec) -> Result<ChfifSystem> {
    let k = spec.k;
    let data = system.data();
    if k == 0 || k > system.map_count() {
        return Err(Error::IndexOutOfRange {
            index: k,
            count: system.map_count(),
        });
    }
    let (lo, hi) = data.interval(k);
    if !(spec.x_hat > lo && spec.x_hat < hi) {
        return Err(Error::AbscissaOutOfDomain {
            x: spec.x_hat,
            start: lo,
            end: hi,
        });
    }
    let split = spec.split_parameters(system);
    split.validate(k)?;

    let mut points = data.points().to_vec();
    points.insert(k, (spec.x_hat, spec.y_hat, spec.z_hat).into());
    let new_data = validate_data(&points)?;

    let params = system.params();
    let splice = |v: &[f64], (l, r): (f64, f64)| {
        let mut out = Vec::with_capacity(v.len() + 1);
        out.extend_from_slice(&v[..k - 1]);
        out.push(l);
        out.push(r);
        out.extend_from_slice(&v[k..]);
        out
    };
    let new_params = IfsParameters::new(
        splice(&params.alpha, split.alpha),
        splice(&params.beta, split.beta),
        splice(&params.gamma, split.gamma),
    );
    build_system(new_data, new_params)
}

fn check_grid(system: &ChfifSystem, points: usize) -> Vec<f64> {
    let (a, b) = (system.data().start(), system.data().end());
    (0..points)
        .map(|i| {
            if i + 1 == points {
                b
            } else {
                a + (b - a) * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

/// Largest residual of `L_k^l(x) = ρ_x L_k(x) + (1 - ρ_x) x_{k-1}` and
/// `L_k^r(x) = (1 - ρ_x) L_k(x) + ρ_x x_k` on a 100-point grid.
pub fn split_l_identity_check(system: &ChfifSystem, spec: &InsertionSpec) -> Result<f64> {
    let inserted = insert(system, spec)?;
    let k = spec.k;
    let (lo, hi) = system.data().interval(k);
    let rho = spec.rho_x;
    let mut worst = 0.0f64;
    for x in check_grid(system, 100) {
        let lk = system.eval_l(k, x)?;
        let left = inserted.eval_l(k, x)?;
        let right = inserted.eval_l(k + 1, x)?;
        worst = worst
            .max((left - (rho * lk + (1.0 - rho) * lo)).abs())
            .max((right - ((1.0 - rho) * lk + rho * hi)).abs());
    }
    Ok(worst)
}

/// Which ratio multiplies `β_k` in the split `p` relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaRatio {
    /// `ρ_y`: the form that reproduces the join-up solution.
    Primary,
    /// `ρ_z`: agrees with the join-up solution only when `ρ_y = ρ_z` or `β_k z = 0`.
    Hidden,
}

/// Residuals of the four split-function relations, one per function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PqResiduals {
    pub q_left: f64,
    pub q_right: f64,
    pub p_left: f64,
    pub p_right: f64,
}

impl PqResiduals {
    pub fn max(&self) -> f64 {
        self.q_left
            .max(self.q_right)
            .max(self.p_left)
            .max(self.p_right)
    }
}

/// Compares the join-up-solved split functions with
///
/// ```text
/// q_k^l = ρ_z q_k + (1 - ρ_z) z_{k-1} + (ρ_z γ_k - γ_k^l) ℓ_z
/// q_k^r = (1 - ρ_z) q_k + ρ_z z_k + ((1 - ρ_z) γ_k - γ_k^r) ℓ_z
/// p_k^l = ρ_y p_k + (1 - ρ_y) y_{k-1} + (ρ_y α_k - α_k^l) ℓ_y + (ρ β_k - β_k^l) ℓ_z
/// p_k^r = (1 - ρ_y) p_k + ρ_y y_k + ((1 - ρ_y) α_k - α_k^r) ℓ_y + ((1 - ρ) β_k - β_k^r) ℓ_z
/// ```
///
/// where `ℓ_y`, `ℓ_z` interpolate `(y_0, y_N)`, `(z_0, z_N)` linearly over `I`
/// and `ρ` is selected by `beta_ratio`.
pub fn split_pq_relation_residuals(
    system: &ChfifSystem,
    spec: &InsertionSpec,
    beta_ratio: BetaRatio,
) -> Result<PqResiduals> {
    let k = spec.k;
    let data = system.data();
    let a = data.points()[k - 1];
    let b = data.points()[k];
    let rho_y = spec.rho_y.ok_or_else(|| Error::DegenerateOrdinates {
        what: format!("y[{}] = y[{}] = {}", k - 1, k, a.y),
    })?;
    let rho_z = spec.rho_z.ok_or_else(|| Error::DegenerateOrdinates {
        what: format!("z[{}] = z[{}] = {}", k - 1, k, a.z),
    })?;
    let rho_b = match beta_ratio {
        BetaRatio::Primary => rho_y,
        BetaRatio::Hidden => rho_z,
    };
    let inserted = insert(system, spec)?;
    let orig = system.map(k)?;
    let left = inserted.map(k)?;
    let right = inserted.map(k + 1)?;
    let (first, last) = (data.first(), data.last());

    let mut r = PqResiduals {
        q_left: 0.0,
        q_right: 0.0,
        p_left: 0.0,
        p_right: 0.0,
    };
    for x in check_grid(system, 101) {
        let t = system.fraction(x)?;
        let ly = first.y * (1.0 - t) + last.y * t;
        let lz = first.z * (1.0 - t) + last.z * t;
        let (pk, qk) = (orig.p.at_fraction(t), orig.q.at_fraction(t));

        let ql = rho_z * qk + (1.0 - rho_z) * a.z + (rho_z * orig.gamma - left.gamma) * lz;
        let qr = (1.0 - rho_z) * qk + rho_z * b.z + ((1.0 - rho_z) * orig.gamma - right.gamma) * lz;
        let pl = rho_y * pk
            + (1.0 - rho_y) * a.y
            + (rho_y * orig.alpha - left.alpha) * ly
            + (rho_b * orig.beta - left.beta) * lz;
        let pr = (1.0 - rho_y) * pk
            + rho_y * b.y
            + ((1.0 - rho_y) * orig.alpha - right.alpha) * ly
            + ((1.0 - rho_b) * orig.beta - right.beta) * lz;

        r.q_left = r.q_left.max((left.q.at_fraction(t) - ql).abs());
        r.q_right = r.q_right.max((right.q.at_fraction(t) - qr).abs());
        r.p_left = r.p_left.max((left.p.at_fraction(t) - pl).abs());
        r.p_right = r.p_right.max((right.p.at_fraction(t) - pr).abs());
    }
    Ok(r)
}

/// Largest residual of the split `p`, `q` relations (with `ρ_y` on the `β` terms).
pub fn split_pq_relation_check(system: &ChfifSystem, spec: &InsertionSpec) -> Result<f64> {
    split_pq_relation_residuals(system, spec, BetaRatio::Primary).map(|r| r.max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{evaluate_at, DEFAULT_EVAL_DEPTH};
    use crate::model::sample;

    fn spec(x: f64, y: f64, z: f64) -> InsertionSpec {
        InsertionSpec::new(&sample::system(), x, y, z).unwrap()
    }

    #[test]
    fn spec_ratios() {
        let s = spec(45.0, 60.0, 20.0);
        assert_eq!(s.k, 2);
        assert_eq!(s.rho_x, 0.5);
        assert_eq!(s.rho_y, Some(1.5));
        assert_eq!(s.rho_z, Some(-0.5));
    }

    #[test]
    fn node_collision_and_domain() {
        let sys = sample::system();
        assert!(matches!(
            InsertionSpec::new(&sys, 30.0, 1.0, 1.0),
            Err(Error::AbscissaCollision { index: 1, .. })
        ));
        assert!(matches!(
            InsertionSpec::new(&sys, 0.0, 1.0, 1.0),
            Err(Error::AbscissaOutOfDomain { .. })
        ));
        assert!(matches!(
            classify_insertion(&sys, 30.0000001, 1.0, 1.0, 1e-6),
            Err(Error::AbscissaCollision { .. })
        ));
    }

    #[test]
    fn insert_builds_four_maps() {
        let sys = sample::system();
        let s = spec(45.0, 60.0, 20.0);
        let ins = insert(&sys, &s).unwrap();
        assert_eq!(ins.map_count(), 4);
        assert_eq!(ins.eval_l(2, 100.0).unwrap(), 45.0);
        assert_eq!(ins.eval_l(3, 0.0).unwrap(), 45.0);
        assert!(ins.join_up_residual() < 1e-10);
        let xs: Vec<f64> = ins.data().points().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 30.0, 45.0, 60.0, 100.0]);
        let sum_before: f64 = sys.params().alpha.iter().map(|a| a.abs()).sum();
        let sum_after: f64 = ins.params().alpha.iter().map(|a| a.abs()).sum();
        assert!((sum_before - sum_after).abs() < 1e-15);
    }

    #[test]
    fn overrides_are_validated() {
        let s = spec(45.0, 60.0, 20.0);
        let bad = SplitParameters {
            alpha: (0.1, 0.1),
            beta: (0.5, 0.1),
            gamma: (0.6, 0.1),
        };
        let err = s.clone().with_overrides(bad).unwrap_err();
        assert_eq!(err.to_string(), "|beta[2l]|+|gamma[2l]| = 1.10 >= 1");
        let ok = SplitParameters {
            alpha: (0.1, 0.4),
            beta: (0.2, 0.2),
            gamma: (0.1, 0.1),
        };
        let s = s.with_overrides(ok).unwrap();
        let ins = insert(&sample::system(), &s).unwrap();
        assert_eq!(ins.params().alpha, vec![0.2, 0.1, 0.4, 0.3]);
        assert!(ins.join_up_residual() < 1e-10);
    }

    #[test]
    fn split_l_identity() {
        let sys = sample::system();
        let r = split_l_identity_check(&sys, &spec(45.0, 60.0, 20.0)).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn split_pq_relation_with_primary_ratio() {
        let sys = sample::system();
        let s = spec(45.0, 60.0, 20.0);
        let r = split_pq_relation_check(&sys, &s).unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn hidden_ratio_beta_term_misses_by_the_ratio_gap() {
        // At x_0 the p_k^l discrepancy is (ρ_z - ρ_y) β_k z_0 = (-0.5 - 1.5) * 0.4 * 10.
        let sys = sample::system();
        let s = spec(45.0, 60.0, 20.0);
        let r = split_pq_relation_residuals(&sys, &s, BetaRatio::Hidden).unwrap();
        assert!(r.q_left < 1e-10 && r.q_right < 1e-10);
        // ℓ_z ranges over [10, 30]; the gap is largest at x_N: 2 * 0.4 * 30
        assert!((r.p_left - 24.0).abs() < 1e-9, "{}", r.p_left);
        assert!((r.p_right - 24.0).abs() < 1e-9, "{}", r.p_right);
    }

    #[test]
    fn relation_endpoints() {
        let sys = sample::system();
        let s = spec(45.0, 60.0, 20.0);
        let ins = insert(&sys, &s).unwrap();
        let left = ins.map(2).unwrap();
        let rho_z = s.rho_z.unwrap();
        let q2 = sys.map(2).unwrap().q;
        let ql0 = rho_z * q2.value_at_x0 + (1.0 - rho_z) * 40.0 + (rho_z * 0.2 - left.gamma) * 10.0;
        assert!((ql0 - (40.0 - left.gamma * 10.0)).abs() < 1e-12);
        assert!((left.gamma * 30.0 + left.q.value_at_xn - 20.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_ordinates() {
        let data = validate_data(&[(0.0, 1.0, 0.0), (1.0, 1.0, 2.0), (2.0, 0.0, 1.0)]).unwrap();
        let sys = build_system(
            data,
            IfsParameters::new(vec![0.1; 2], vec![0.1; 2], vec![0.1; 2]),
        )
        .unwrap();
        let s = InsertionSpec::new(&sys, 0.5, 3.0, 1.0).unwrap();
        assert!(s.rho_y.is_none());
        assert!(matches!(
            split_pq_relation_check(&sys, &s),
            Err(Error::DegenerateOrdinates { .. })
        ));
        // construction itself still works
        assert!(insert(&sys, &s).unwrap().join_up_residual() < 1e-12);
    }

    #[test]
    fn classify_the_four_kinds() {
        let sys = sample::system();
        let f = evaluate_at(&sys, 45.0, DEFAULT_EVAL_DEPTH).unwrap();
        let tol = DEFAULT_KNOT_TOLERANCE;
        let kind = |y, z| classify_insertion(&sys, 45.0, y, z, tol).unwrap().kind;
        assert_eq!(kind(60.0, 20.0), InsertionKind::NodeNode);
        assert_eq!(kind(60.0, f.f2), InsertionKind::NodeKnot);
        assert_eq!(kind(f.f1, 20.0), InsertionKind::KnotNode);
        assert_eq!(kind(f.f1, f.f2), InsertionKind::KnotKnot);
    }

    #[test]
    fn rounded_reference_values_are_not_knots() {
        // Two-decimal values quoted for this example do not lie on the attractor
        // of this construction (f(45) ≈ (172.82, 72.31)).
        let sys = sample::system();
        let c = classify_insertion(&sys, 45.0, 60.0, 68.21, 0.01).unwrap();
        assert_eq!(c.kind, InsertionKind::NodeNode);
        let c = classify_insertion(&sys, 45.0, 198.43, 68.21, 0.01).unwrap();
        assert_eq!(c.kind, InsertionKind::NodeNode);
    }

    #[test]
    fn classify_rejects_bad_tolerance() {
        let sys = sample::system();
        assert!(classify_insertion(&sys, 45.0, 0.0, 0.0, 0.0).is_err());
    }
}
