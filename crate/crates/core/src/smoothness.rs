//! Smoothness indices, smoothness classes and fractal-dimension bounds.
//!
//! All lengths are taken on the domain rescaled to `[0, 1]`. For map `n` with
//! normalized length `|I_n|`:
//!
//! ```text
//! Ω_n = |α_n| / |I_n|^λ     Γ_n = |γ_n| / |I_n|^μ     Θ_n = |α_n| / |I_n|^μ
//! ```
//!
//! and `Ω`, `Γ`, `Θ` are the maxima over maps. Which of them equal one decides
//! the smoothness class of `f1`.

use crate::error::{Error, Result};
use crate::insertion::InsertionSpec;
use crate::model::ChfifSystem;

/// Absolute tolerance for "equal to one" tests.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Lipschitz exponents of `p_n` (`lambda_n`) and `q_n` (`mu_n`).
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzData {
    pub lambda_n: Vec<f64>,
    pub mu_n: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
}

impl LipschitzData {
    /// Exponents supplied by the caller; each must lie in `(0, 1]`.
    pub fn supplied(lambda_n: Vec<f64>, mu_n: Vec<f64>) -> Result<Self> {
        if lambda_n.len() != mu_n.len() {
            return Err(Error::LengthMismatch {
                what: "mu".into(),
                expected: lambda_n.len(),
                found: mu_n.len(),
            });
        }
        if lambda_n.is_empty() {
            return Err(Error::TooFewPoints {
                found: 0,
                required: 1,
            });
        }
        for (name, v) in [("lambda", &lambda_n), ("mu", &mu_n)] {
            if let Some((i, e)) = v
                .iter()
                .enumerate()
                .find(|(_, e)| !(**e > 0.0 && **e <= 1.0))
            {
                return Err(Error::ParameterConstraintViolation {
                    constraint: format!("{name}[{}] = {e} not in (0, 1]", i + 1),
                });
            }
        }
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let (lambda, mu) = (min(&lambda_n), min(&mu_n));
        Ok(Self {
            lambda_n,
            mu_n,
            lambda,
            mu,
            delta: lambda.min(mu),
        })
    }

    /// Exponents after splitting map `k` (1-based): both halves inherit `λ_k`, `μ_k`.
    pub fn split(&self, k: usize) -> Self {
        let dup = |v: &[f64]| {
            let mut out = v.to_vec();
            out.insert(k, v[k - 1]);
            out
        };
        Self {
            lambda_n: dup(&self.lambda_n),
            mu_n: dup(&self.mu_n),
            ..*self
        }
    }

    pub fn len(&self) -> usize {
        self.lambda_n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_n.is_empty()
    }
}

/// Affine `p_n`, `q_n` are Lipschitz of order one.
pub fn lipschitz_of_affine(system: &ChfifSystem) -> LipschitzData {
    let n = system.map_count();
    LipschitzData::supplied(vec![1.0; n], vec![1.0; n]).expect("unit exponents are valid")
}

/// Per-map indices and their maxima.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessIndices {
    pub omega_n: Vec<f64>,
    pub gamma_n: Vec<f64>,
    pub theta_n: Vec<f64>,
    pub omega: f64,
    pub gamma: f64,
    pub theta: f64,
    pub normalized_lengths: Vec<f64>,
}

impl SmoothnessIndices {
    pub fn get(&self, which: Index) -> (f64, &[f64]) {
        match which {
            Index::Omega => (self.omega, &self.omega_n),
            Index::Gamma => (self.gamma, &self.gamma_n),
            Index::Theta => (self.theta, &self.theta_n),
        }
    }

    /// `|I_max|` on the normalized domain.
    pub fn max_length(&self) -> f64 {
        self.normalized_lengths.iter().copied().fold(0.0, f64::max)
    }
}

/// One of the three indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Index {
    Omega,
    Gamma,
    Theta,
}

impl Index {
    pub const ALL: [Index; 3] = [Index::Omega, Index::Gamma, Index::Theta];

    pub fn name(self) -> &'static str {
        match self {
            Index::Omega => "Omega",
            Index::Gamma => "Gamma",
            Index::Theta => "Theta",
        }
    }

    /// Exponent in the denominator: `λ` for Ω, `μ` for Γ and Θ.
    fn exponent(self, lip: &LipschitzData) -> f64 {
        match self {
            Index::Omega => lip.lambda,
            Index::Gamma | Index::Theta => lip.mu,
        }
    }
}

pub fn compute_indices(system: &ChfifSystem, lip: &LipschitzData) -> Result<SmoothnessIndices> {
    if lip.len() != system.map_count() {
        return Err(Error::LengthMismatch {
            what: "Lipschitz exponents".into(),
            expected: system.map_count(),
            found: lip.len(),
        });
    }
    let lengths = system.data().normalized_lengths();
    let params = system.params();
    let per_map = |num: &[f64], exp: f64| -> Vec<f64> {
        num.iter()
            .zip(&lengths)
            .map(|(a, len)| a.abs() / len.powf(exp))
            .collect()
    };
    let omega_n = per_map(&params.alpha, lip.lambda);
    let gamma_n = per_map(&params.gamma, lip.mu);
    let theta_n = per_map(&params.alpha, lip.mu);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SmoothnessIndices {
        omega: max(&omega_n),
        gamma: max(&gamma_n),
        theta: max(&theta_n),
        omega_n,
        gamma_n,
        theta_n,
        normalized_lengths: lengths,
    })
}

/// Position of a value relative to one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    BelowOne,
    EqualOne,
    AboveOne,
}

impl Category {
    pub fn of(v: f64) -> Self {
        if (v - 1.0).abs() <= UNIT_TOLERANCE {
            Category::EqualOne
        } else if v < 1.0 {
            Category::BelowOne
        } else {
            Category::AboveOne
        }
    }
}

fn is_one(v: f64) -> bool {
    Category::of(v) == Category::EqualOne
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= UNIT_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Predicted category of one post-insertion index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexPrediction {
    pub category: Category,
    /// 1-based maps attaining the pre-insertion maximum include `k`.
    pub max_at_k: bool,
    /// Some map other than `k` attains the pre-insertion maximum.
    pub max_off_k: bool,
    /// `1 / max(ρ_x^{1-e}, (1-ρ_x)^{1-e})` with `e` the relevant exponent.
    pub threshold: f64,
}

/// Predicted categories of `Ω̂`, `Γ̂`, `Θ̂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HatPrediction {
    pub omega: IndexPrediction,
    pub gamma: IndexPrediction,
    pub theta: IndexPrediction,
}

impl HatPrediction {
    pub fn get(&self, which: Index) -> &IndexPrediction {
        match which {
            Index::Omega => &self.omega,
            Index::Gamma => &self.gamma,
            Index::Theta => &self.theta,
        }
    }
}

/// Split factor applied to index `k` under proportional parameters:
/// `Ω_k^l = ρ_x^{1-λ} Ω_k`, `Ω_k^r = (1-ρ_x)^{1-λ} Ω_k`.
pub fn split_factor(rho_x: f64, exponent: f64) -> f64 {
    let e = 1.0 - exponent;
    rho_x.abs().powf(e).max((1.0 - rho_x).abs().powf(e))
}

/// Predicts the categories of the post-insertion indices from the pre-insertion
/// ones, following the case analysis for proportional split parameters.
///
/// Configurations outside the covered cases return [`Error::HypothesisNotMet`].
pub fn predict_hat_category(
    pre: &SmoothnessIndices,
    spec: &InsertionSpec,
    lip: &LipschitzData,
) -> Result<HatPrediction> {
    if spec.overrides.is_some() {
        return Err(Error::HypothesisNotMet(
            "prediction assumes proportional split parameters; overrides are set".into(),
        ));
    }
    if spec.k == 0 || spec.k > pre.omega_n.len() {
        return Err(Error::IndexOutOfRange {
            index: spec.k,
            count: pre.omega_n.len(),
        });
    }
    let one = |which| predict_one(pre, which, spec.k, spec.rho_x, which.exponent(lip));
    Ok(HatPrediction {
        omega: one(Index::Omega)?,
        gamma: one(Index::Gamma)?,
        theta: one(Index::Theta)?,
    })
}

fn predict_one(
    pre: &SmoothnessIndices,
    which: Index,
    k: usize,
    rho_x: f64,
    exponent: f64,
) -> Result<IndexPrediction> {
    let (max, values) = pre.get(which);
    let at_k = values[k - 1];
    let others = || {
        values
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k - 1)
            .map(|(_, v)| *v)
    };
    let max_at_k = approx_eq(at_k, max);
    let max_off_k = others().any(|v| approx_eq(v, max));
    let factor = split_factor(rho_x, exponent);
    let threshold = 1.0 / factor;
    let pred = |category| IndexPrediction {
        category,
        max_at_k,
        max_off_k,
        threshold,
    };

    // Unit exponent: the split factor is one and nothing changes.
    if is_one(exponent) {
        return Ok(pred(Category::of(max)));
    }
    let others_below = others().all(|v| Category::of(v) == Category::BelowOne);
    let others_at_most = others().all(|v| Category::of(v) != Category::AboveOne);
    let k_vs_threshold = if approx_eq(at_k, threshold) {
        Category::EqualOne
    } else if at_k < threshold {
        Category::BelowOne
    } else {
        Category::AboveOne
    };

    // case 1
    if Category::of(max) == Category::BelowOne
        || (k_vs_threshold == Category::BelowOne && others_below)
    {
        return Ok(pred(Category::BelowOne));
    }
    // case 2
    if (is_one(max) && max_off_k)
        || (Category::of(max) == Category::AboveOne
            && max_at_k
            && k_vs_threshold == Category::EqualOne
            && others_at_most)
    {
        return Ok(pred(Category::EqualOne));
    }
    // case 3
    if (Category::of(max) == Category::AboveOne && max_off_k)
        || (max_at_k && k_vs_threshold == Category::AboveOne && threshold > 1.0)
    {
        return Ok(pred(Category::AboveOne));
    }
    // Remaining configurations with the maximum at k: the split values fall
    // below the threshold while some other index sits exactly at one.
    if max_at_k && k_vs_threshold == Category::BelowOne && others_at_most {
        return Ok(pred(Category::EqualOne));
    }
    Err(Error::HypothesisNotMet(format!(
        "{} = {max} with {}_k = {at_k}, threshold {threshold}: configuration not covered",
        which.name(),
        which.name()
    )))
}

/// The four smoothness cases of `f1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SmoothnessKind {
    /// `f1 ∈ Lip δ`: no index equals one.
    LipDelta,
    /// `ω(f1; t) = O(|t|^δ log|t|)` with `Θ ≠ 1` and `Ω = 1` or `Γ = 1`.
    LogModulus,
    /// `ω(f1; t) = O(|t|^δ log|t|)` with `Θ = 1`, `Γ ≠ 1`.
    LogModulusThetaOne,
    /// `ω(f1; t) = O(|t|^δ (log|t|)^2)` with `Θ = Γ = 1`.
    LogSquaredModulus,
}

impl SmoothnessKind {
    /// Both log-modulus cases share the same modulus of continuity.
    pub fn modulus_order(self) -> u8 {
        match self {
            SmoothnessKind::LipDelta => 0,
            SmoothnessKind::LogModulus | SmoothnessKind::LogModulusThetaOne => 1,
            SmoothnessKind::LogSquaredModulus => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SmoothnessKind::LipDelta => "lip-delta",
            SmoothnessKind::LogModulus => "log-modulus",
            SmoothnessKind::LogModulusThetaOne => "log-modulus-theta-one",
            SmoothnessKind::LogSquaredModulus => "log-squared-modulus",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothnessClass {
    pub kind: SmoothnessKind,
    pub delta: f64,
}

/// Maps the `(Θ, Ω, Γ)` equality-to-one pattern onto the four cases.
pub fn classify_smoothness(theta: f64, omega: f64, gamma: f64, delta: f64) -> SmoothnessClass {
    let kind = match (is_one(theta), is_one(omega), is_one(gamma)) {
        (false, false, false) => SmoothnessKind::LipDelta,
        (false, _, _) => SmoothnessKind::LogModulus,
        (true, _, false) => SmoothnessKind::LogModulusThetaOne,
        (true, _, true) => SmoothnessKind::LogSquaredModulus,
    };
    SmoothnessClass { kind, delta }
}

pub fn classify_indices(indices: &SmoothnessIndices, lip: &LipschitzData) -> SmoothnessClass {
    classify_smoothness(indices.theta, indices.omega, indices.gamma, lip.delta)
}

/// Outcomes of comparing `f1` with the post-insertion `f̂1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmoothnessComparison {
    SameLipschitzClass,
    SameLogModulus,
    PostStrictlySmootherClass,
}

impl SmoothnessComparison {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SameLipschitzClass => "same-lipschitz-class",
            Self::SameLogModulus => "same-log-modulus",
            Self::PostStrictlySmootherClass => "post-strictly-smoother",
        }
    }
}

/// Compares pre- and post-insertion classes. Requires `Ω, Γ, Θ <= 1` before insertion.
pub fn compare_smoothness(
    pre: (&SmoothnessIndices, &SmoothnessClass),
    post: (&SmoothnessIndices, &SmoothnessClass),
) -> Result<SmoothnessComparison> {
    let (pre_idx, pre_class) = pre;
    let (_, post_class) = post;
    for which in Index::ALL {
        let (v, _) = pre_idx.get(which);
        if Category::of(v) == Category::AboveOne {
            return Err(Error::HypothesisNotMet(format!(
                "{} = {v} exceeds 1",
                which.name()
            )));
        }
    }
    use SmoothnessKind::*;
    match (pre_class.kind, post_class.kind) {
        (LipDelta, LipDelta) => Ok(SmoothnessComparison::SameLipschitzClass),
        (a, b) if a != LipDelta && a.modulus_order() == b.modulus_order() => {
            Ok(SmoothnessComparison::SameLogModulus)
        }
        (a, LipDelta) if a != LipDelta => Ok(SmoothnessComparison::PostStrictlySmootherClass),
        (a, b) => Err(Error::HypothesisNotMet(format!(
            "pre class {} and post class {} match none of the outcomes",
            a.as_str(),
            b.as_str()
        ))),
    }
}

/// Which sum enters the lower dimension bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundVariant {
    /// `Σ|α_i|`, applicable when `Θ = 1` or `Ω = 1`.
    AlphaSum,
    /// `Σ|γ_i|`, applicable when `Γ = 1`.
    GammaSum,
}

/// Box-dimension bounds for the graph of `f1`:
///
/// ```text
/// 1 - log(Σ) / log|I_max|  <=  D  <=  1 - δ - log(maps) / log|I_max|
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionBounds {
    pub lower: f64,
    pub upper: f64,
    pub variant: BoundVariant,
    /// Whether the triggering equalities hold; `reason` names them.
    pub applicable: bool,
    pub reason: String,
    pub map_count: usize,
    pub max_length: f64,
    pub sum: f64,
}

impl DimensionBounds {
    /// `lower > upper` for an applicable bound signals an inconsistent construction.
    pub fn inconsistent(&self) -> bool {
        self.applicable && self.lower > self.upper
    }
}

/// Lower bound from a parameter sum and the longest normalized interval.
pub fn lower_bound(sum: f64, max_length: f64) -> f64 {
    1.0 - sum.ln() / max_length.ln()
}

/// Upper bound from `δ`, the map count and the longest normalized interval.
pub fn upper_bound(delta: f64, map_count: usize, max_length: f64) -> f64 {
    1.0 - delta - (map_count as f64).ln() / max_length.ln()
}

/// Both bound variants, each with its applicability.
pub fn dimension_bounds(
    system: &ChfifSystem,
    indices: &SmoothnessIndices,
    lip: &LipschitzData,
) -> Result<[DimensionBounds; 2]> {
    let max_length = indices.max_length();
    if (max_length - 1.0).abs() <= UNIT_TOLERANCE {
        return Err(Error::DegenerateLogarithm(max_length));
    }
    let params = system.params();
    let map_count = system.map_count();
    let upper = upper_bound(lip.delta, map_count, max_length);
    let abs_sum = |v: &[f64]| v.iter().map(|a| a.abs()).sum::<f64>();

    let mut alpha_reason = Vec::new();
    if is_one(indices.theta) {
        alpha_reason.push("Theta = 1");
    }
    if is_one(indices.omega) {
        alpha_reason.push("Omega = 1");
    }
    let alpha_sum = abs_sum(&params.alpha);
    let gamma_sum = abs_sum(&params.gamma);
    Ok([
        DimensionBounds {
            lower: lower_bound(alpha_sum, max_length),
            upper,
            variant: BoundVariant::AlphaSum,
            applicable: !alpha_reason.is_empty(),
            reason: if alpha_reason.is_empty() {
                "neither Theta nor Omega equals 1".into()
            } else {
                alpha_reason.join(", ")
            },
            map_count,
            max_length,
            sum: alpha_sum,
        },
        DimensionBounds {
            lower: lower_bound(gamma_sum, max_length),
            upper,
            variant: BoundVariant::GammaSum,
            applicable: is_one(indices.gamma),
            reason: if is_one(indices.gamma) {
                "Gamma = 1".into()
            } else {
                "Gamma does not equal 1".into()
            },
            map_count,
            max_length,
            sum: gamma_sum,
        },
    ])
}

/// Margins of a pre/post bound comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsVerdict {
    /// `pre.upper - post.upper`; non-negative when the upper bound did not grow.
    pub upper_margin: f64,
    /// `post.lower - pre.lower`; non-negative when the lower bound did not shrink.
    pub lower_margin: f64,
}

impl BoundsVerdict {
    pub fn upper_holds(&self) -> bool {
        self.upper_margin >= -UNIT_TOLERANCE
    }

    pub fn lower_holds(&self) -> bool {
        self.lower_margin >= -UNIT_TOLERANCE
    }

    pub fn holds(&self) -> bool {
        self.upper_holds() && self.lower_holds()
    }
}

/// Compares applicable bounds of the same variant before and after insertion.
pub fn compare_bounds(pre: &DimensionBounds, post: &DimensionBounds) -> Result<BoundsVerdict> {
    if pre.variant != post.variant {
        return Err(Error::HypothesisNotMet(format!(
            "bound variants differ: {:?} vs {:?}",
            pre.variant, post.variant
        )));
    }
    for (which, b) in [("pre", pre), ("post", post)] {
        if !b.applicable {
            return Err(Error::HypothesisNotMet(format!(
                "{which}-insertion bound not applicable: {}",
                b.reason
            )));
        }
    }
    Ok(BoundsVerdict {
        upper_margin: pre.upper - post.upper,
        lower_margin: post.lower - pre.lower,
    })
}

/// Checks the bound-comparison hypothesis: `Ω`, `Γ`, `Θ` all equal one and each
/// maximum is attained by some map other than `k`.
pub fn maxima_one_off_k(indices: &SmoothnessIndices, k: usize) -> bool {
    Index::ALL.iter().all(|&which| {
        let (max, values) = indices.get(which);
        is_one(max)
            && values
                .iter()
                .enumerate()
                .any(|(i, v)| i != k - 1 && is_one(*v))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::insertion::insert;
    use crate::model::sample;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn affine_exponents() {
        let lip = lipschitz_of_affine(&sample::system());
        assert_eq!((lip.lambda, lip.mu, lip.delta), (1.0, 1.0, 1.0));
    }

    #[test]
    fn supplied_exponents_take_minima() {
        let lip = LipschitzData::supplied(vec![0.5, 1.0, 1.0], vec![1.0, 0.7, 1.0]).unwrap();
        assert_eq!((lip.lambda, lip.mu, lip.delta), (0.5, 0.7, 0.5));
        assert!(LipschitzData::supplied(vec![0.0], vec![1.0]).is_err());
        assert!(LipschitzData::supplied(vec![1.2], vec![1.0]).is_err());
    }

    #[test]
    fn split_exponents_inherit() {
        let lip = LipschitzData::supplied(vec![0.5, 0.8, 1.0], vec![1.0, 0.7, 1.0]).unwrap();
        let s = lip.split(2);
        assert_eq!(s.lambda_n, vec![0.5, 0.8, 0.8, 1.0]);
        assert_eq!(s.mu_n, vec![1.0, 0.7, 0.7, 1.0]);
    }

    #[test]
    fn sample_indices() {
        let sys = sample::system();
        let lip = lipschitz_of_affine(&sys);
        let idx = compute_indices(&sys, &lip).unwrap();
        assert!(close(idx.omega, 5.0 / 3.0, 1e-12));
        assert!(close(idx.gamma, 2.0, 1e-12));
        assert!(close(idx.theta, 5.0 / 3.0, 1e-12));
        assert!(close(idx.omega_n[0], 2.0 / 3.0, 1e-12));
        assert!(close(idx.omega_n[2], 0.75, 1e-12));
    }

    #[test]
    fn split_index_scaling() {
        let sys = sample::system();
        let spec = InsertionSpec::new(&sys, 45.0, 60.0, 20.0).unwrap();
        let ins = insert(&sys, &spec).unwrap();
        // λ = 1: split entries equal the original
        let pre = compute_indices(&sys, &lipschitz_of_affine(&sys)).unwrap();
        let post = compute_indices(&ins, &lipschitz_of_affine(&ins)).unwrap();
        assert!(close(post.omega_n[1], pre.omega_n[1], 1e-12));
        assert!(close(post.omega_n[2], pre.omega_n[1], 1e-12));
        // λ = 0.5, ρ_x = 0.5
        let lip = LipschitzData::supplied(vec![0.5; 3], vec![1.0; 3]).unwrap();
        let pre = compute_indices(&sys, &lip).unwrap();
        let post = compute_indices(&ins, &lip.split(2)).unwrap();
        assert!(close(
            post.omega_n[1],
            0.5f64.sqrt() * pre.omega_n[1],
            1e-12
        ));
        assert!(close(
            post.omega_n[1] / pre.omega_n[1],
            std::f64::consts::FRAC_1_SQRT_2,
            1e-5
        ));
    }

    #[test]
    fn classification_cases() {
        assert_eq!(
            classify_smoothness(0.8, 0.9, 0.95, 1.0).kind,
            SmoothnessKind::LipDelta
        );
        assert_eq!(
            classify_smoothness(0.9, 1.0, 0.5, 1.0).kind,
            SmoothnessKind::LogModulus
        );
        assert_eq!(
            classify_smoothness(0.9, 0.5, 1.0, 1.0).kind,
            SmoothnessKind::LogModulus
        );
        assert_eq!(
            classify_smoothness(1.0, 3.0, 0.5, 1.0).kind,
            SmoothnessKind::LogModulusThetaOne
        );
        assert_eq!(
            classify_smoothness(1.0, 2.0, 1.0, 1.0).kind,
            SmoothnessKind::LogSquaredModulus
        );
    }

    fn indices(omega_n: Vec<f64>, gamma_n: Vec<f64>, theta_n: Vec<f64>) -> SmoothnessIndices {
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        SmoothnessIndices {
            omega: max(&omega_n),
            gamma: max(&gamma_n),
            theta: max(&theta_n),
            normalized_lengths: vec![1.0 / omega_n.len() as f64; omega_n.len()],
            omega_n,
            gamma_n,
            theta_n,
        }
    }

    fn spec_k(k: usize, rho_x: f64) -> InsertionSpec {
        InsertionSpec {
            x_hat: 0.0,
            y_hat: 0.0,
            z_hat: 0.0,
            k,
            rho_x,
            rho_y: None,
            rho_z: None,
            overrides: None,
        }
    }

    #[test]
    fn predictions_follow_the_cases() {
        let lip = LipschitzData::supplied(vec![0.5; 3], vec![0.5; 3]).unwrap();
        let s = spec_k(2, 0.25);
        // threshold = 1 / 0.75^0.5 ≈ 1.1547
        let p = predict_hat_category(
            &indices(vec![0.5, 0.9, 0.4], vec![0.5; 3], vec![0.5; 3]),
            &s,
            &lip,
        )
        .unwrap();
        assert_eq!(p.omega.category, Category::BelowOne);
        assert!(close(p.omega.threshold, 1.0 / 0.75f64.sqrt(), 1e-12));

        let p = predict_hat_category(
            &indices(vec![1.0, 0.9, 0.4], vec![0.5; 3], vec![0.5; 3]),
            &s,
            &lip,
        )
        .unwrap();
        assert_eq!(p.omega.category, Category::EqualOne);

        let p = predict_hat_category(
            &indices(vec![1.5, 0.9, 0.4], vec![0.5; 3], vec![0.5; 3]),
            &s,
            &lip,
        )
        .unwrap();
        assert_eq!(p.omega.category, Category::AboveOne);

        // max at k: below threshold drops below one, above stays above
        let p = predict_hat_category(
            &indices(vec![0.5, 1.1, 0.4], vec![0.5; 3], vec![0.5; 3]),
            &s,
            &lip,
        )
        .unwrap();
        assert_eq!(p.omega.category, Category::BelowOne);
        let p = predict_hat_category(
            &indices(vec![0.5, 1.3, 0.4], vec![0.5; 3], vec![0.5; 3]),
            &s,
            &lip,
        )
        .unwrap();
        assert_eq!(p.omega.category, Category::AboveOne);
        let t = 1.0 / 0.75f64.sqrt();
        let p = predict_hat_category(
            &indices(vec![0.5, t, 0.4], vec![0.5; 3], vec![0.5; 3]),
            &s,
            &lip,
        )
        .unwrap();
        assert_eq!(p.omega.category, Category::EqualOne);
    }

    #[test]
    fn unit_exponent_keeps_category() {
        let lip = LipschitzData::supplied(vec![1.0; 3], vec![1.0; 3]).unwrap();
        let s = spec_k(2, 0.25);
        for v in [0.7, 1.0, 1.4] {
            let p = predict_hat_category(
                &indices(vec![0.5, v, 0.4], vec![0.5; 3], vec![0.5; 3]),
                &s,
                &lip,
            )
            .unwrap();
            assert_eq!(p.omega.category, Category::of(v));
            assert_eq!(p.omega.threshold, 1.0);
        }
    }

    #[test]
    fn overrides_break_the_hypothesis() {
        let lip = LipschitzData::supplied(vec![1.0; 3], vec![1.0; 3]).unwrap();
        let mut s = spec_k(2, 0.25);
        s.overrides = Some(crate::insertion::SplitParameters::proportional(
            0.1, 0.1, 0.1, 0.25,
        ));
        let idx = indices(vec![0.5; 3], vec![0.5; 3], vec![0.5; 3]);
        assert!(matches!(
            predict_hat_category(&idx, &s, &lip),
            Err(Error::HypothesisNotMet(_))
        ));
    }

    #[test]
    fn comparison_outcomes() {
        let below = indices(vec![0.5; 3], vec![0.5; 3], vec![0.5; 3]);
        let lip_class = classify_smoothness(0.5, 0.5, 0.5, 1.0);
        assert_eq!(
            compare_smoothness((&below, &lip_class), (&below, &lip_class)).unwrap(),
            SmoothnessComparison::SameLipschitzClass
        );
        let ones = indices(
            vec![1.0, 0.5, 0.5],
            vec![1.0, 0.5, 0.5],
            vec![1.0, 0.5, 0.5],
        );
        let sq = classify_smoothness(1.0, 1.0, 1.0, 1.0);
        assert_eq!(
            compare_smoothness((&ones, &sq), (&ones, &sq)).unwrap(),
            SmoothnessComparison::SameLogModulus
        );
        assert_eq!(
            compare_smoothness((&ones, &sq), (&below, &lip_class)).unwrap(),
            SmoothnessComparison::PostStrictlySmootherClass
        );
        let above = indices(vec![1.5; 3], vec![0.5; 3], vec![0.5; 3]);
        assert!(compare_smoothness((&above, &lip_class), (&below, &lip_class)).is_err());
    }

    #[test]
    fn sample_bound_anchors() {
        let sys = sample::system();
        let lip = lipschitz_of_affine(&sys);
        let idx = compute_indices(&sys, &lip).unwrap();
        let [alpha, gamma] = dimension_bounds(&sys, &idx, &lip).unwrap();
        assert!(close(alpha.sum, 1.0, 1e-15));
        assert!(close(alpha.lower, 1.0, 1e-12));
        assert!(close(alpha.upper, 1.19898, 1e-5), "{}", alpha.upper);
        assert!(!alpha.applicable && !gamma.applicable);

        let spec = InsertionSpec::new(&sys, 45.0, 60.0, 20.0).unwrap();
        let ins = insert(&sys, &spec).unwrap();
        let lip2 = lipschitz_of_affine(&ins);
        let idx2 = compute_indices(&ins, &lip2).unwrap();
        let [alpha2, _] = dimension_bounds(&ins, &idx2, &lip2).unwrap();
        assert_eq!(alpha2.map_count, 4);
        assert!(close(alpha2.max_length, 0.4, 1e-15));
        assert!(close(alpha2.upper, 1.51294, 1e-5), "{}", alpha2.upper);
        assert!(close(alpha2.lower, 1.0, 1e-12));
    }

    #[test]
    fn single_interval_has_no_bound() {
        let data = crate::model::validate_data(&[(0.0, 0.0, 0.0), (1.0, 1.0, 1.0)]).unwrap();
        let sys = crate::model::build_system(
            data,
            crate::model::IfsParameters::new(vec![0.5], vec![0.1], vec![0.5]),
        )
        .unwrap();
        let lip = lipschitz_of_affine(&sys);
        let idx = compute_indices(&sys, &lip).unwrap();
        assert!(matches!(
            dimension_bounds(&sys, &idx, &lip),
            Err(Error::DegenerateLogarithm(_))
        ));
    }

    #[test]
    fn bounds_comparison_needs_applicability() {
        let sys = sample::system();
        let lip = lipschitz_of_affine(&sys);
        let idx = compute_indices(&sys, &lip).unwrap();
        let [alpha, gamma] = dimension_bounds(&sys, &idx, &lip).unwrap();
        assert!(compare_bounds(&alpha, &alpha).is_err());
        assert!(compare_bounds(&alpha, &gamma).is_err());
        let mut a = alpha.clone();
        a.applicable = true;
        let v = compare_bounds(&a, &a).unwrap();
        assert_eq!((v.upper_margin, v.lower_margin), (0.0, 0.0));
        assert!(v.holds());
    }

    #[test]
    fn bound_formula_monotonicity() {
        // upper grows with the map count; lower rises as |I_max| shrinks when Σ < 1
        for m in 2..10 {
            assert!(upper_bound(1.0, m + 1, 0.4) > upper_bound(1.0, m, 0.4));
        }
        assert!(lower_bound(0.8, 0.3) > lower_bound(0.8, 0.4));
        assert!(lower_bound(1.2, 0.3) < lower_bound(1.2, 0.4));
    }
}
