//! Coalescence hidden-variable fractal interpolation functions.
//!
//! A [`ChfifSystem`] is built from generalized data `(x_i, y_i, z_i)` and
//! per-map factors `α`, `β`, `γ`. Its attractor is the graph of a continuous
//! `f = (f1, f2)` interpolating the data; `f1` is the coalescence function and
//! `f2` the hidden variable.
//!
//! ```
//! use chfif::{evaluate_at, sample, DEFAULT_EVAL_DEPTH};
//!
//! let system = sample::system();
//! let v = evaluate_at(&system, 30.0, DEFAULT_EVAL_DEPTH).unwrap();
//! assert_eq!((v.f1, v.f2), (90.0, 40.0));
//! ```

pub mod empirical;
pub mod error;
pub mod evaluator;
pub mod insertion;
pub mod io;
pub mod model;
pub mod smoothness;

pub use empirical::{
    box_dimension, graph_points, modulus_of_continuity, normalize_to_unit_square, BoxCountEstimate,
    ModulusEstimate,
};
pub use error::{Error, Result};
pub use evaluator::{
    abscissa_tolerance, chaos_game, composition_check, evaluate_at, evaluate_many, evaluate_near,
    functional_equation_residual, functional_equation_residual_with_limits, interpolation_bound,
    refine, refine_with_limits, refined_point_count, sample_graph, sample_graph_with_limits,
    Component, Evaluation, RefineLimits, RefinedPointSet, SampledFunction, DEFAULT_EVAL_DEPTH,
};
pub use insertion::{
    classify_insertion, insert, split_l_identity_check, split_pq_relation_check,
    split_pq_relation_residuals, BetaRatio, Classification, InsertionKind, InsertionSpec,
    PqResiduals, SplitParameters, DEFAULT_KNOT_TOLERANCE,
};
pub use io::{
    csv_string, emit_csv, emit_svg, parse_csv, read_csv, svg_string, RunConfig, SvgLayout,
};
pub use model::{
    build_system, sample, validate_data, AffineCoefficientPair, ChfifSystem, ContractionMap,
    DataPoint, GeneralizedDataSet, IfsParameters,
};
pub use smoothness::{
    classify_indices, classify_smoothness, compare_bounds, compare_smoothness, compute_indices,
    dimension_bounds, lipschitz_of_affine, predict_hat_category, BoundVariant, BoundsVerdict,
    Category, DimensionBounds, HatPrediction, LipschitzData, SmoothnessClass, SmoothnessComparison,
    SmoothnessIndices, SmoothnessKind,
};
