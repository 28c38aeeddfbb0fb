//! Run configuration, CSV tables and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{Component, SampledFunction};
use crate::insertion::{InsertionSpec, SplitParameters};
use crate::model::{build_system, sample, validate_data, ChfifSystem, IfsParameters};
use crate::smoothness::LipschitzData;

/// Refinement depth used when a configuration does not set one.
pub const DEFAULT_DEPTH: usize = 10;

/// A JSON run description.
///
/// ```json
/// {
///   "data": [[0, 0, 10], [30, 90, 40], [60, 70, 80], [100, 20, 30]],
///   "alpha": [0.2, 0.5, 0.3],
///   "beta": [0.3, 0.4, 0.1],
///   "gamma": [0.6, 0.2, 0.5],
///   "insertion": {"x": 45, "y": 60, "z": 20},
///   "depth": 10,
///   "seed": 7
/// }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Vec<[f64; 3]>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insertion: Option<InsertionConfig>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub seed: u64,
    /// Lipschitz exponents of `p_n`; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    /// Lipschitz exponents of `q_n`; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "OutputConfig::is_empty")]
    pub output: OutputConfig,
}

fn default_depth() -> usize {
    DEFAULT_DEPTH
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionConfig {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<OverridesConfig>,
}

/// Split parameters as `[left, right]` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverridesConfig {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub gamma: [f64; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

impl OutputConfig {
    pub fn is_empty(&self) -> bool {
        self.csv.is_none() && self.svg.is_none()
    }
}

impl RunConfig {
    /// The four-point worked example with the Node-Node insertion at `(45, 60, 20)`.
    pub fn sample() -> Self {
        Self {
            data: sample::POINTS.iter().map(|&(x, y, z)| [x, y, z]).collect(),
            alpha: sample::ALPHA.to_vec(),
            beta: sample::BETA.to_vec(),
            gamma: sample::GAMMA.to_vec(),
            insertion: Some(InsertionConfig {
                x: 45.0,
                y: 60.0,
                z: 20.0,
                overrides: None,
            }),
            depth: DEFAULT_DEPTH,
            seed: 0,
            lambda: None,
            mu: None,
            output: OutputConfig::default(),
        }
    }

    /// Parses JSON. Syntax and schema problems give [`Error::Config`]; values
    /// are only checked by [`RunConfig::system`] and friends.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn system(&self) -> Result<ChfifSystem> {
        let data = validate_data(
            &self
                .data
                .iter()
                .map(|&[x, y, z]| (x, y, z))
                .collect::<Vec<_>>(),
        )?;
        build_system(
            data,
            IfsParameters::new(self.alpha.clone(), self.beta.clone(), self.gamma.clone()),
        )
    }

    /// The configured insertion against `system`, if any.
    pub fn insertion_spec(&self, system: &ChfifSystem) -> Result<Option<InsertionSpec>> {
        let Some(ins) = &self.insertion else {
            return Ok(None);
        };
        let spec = InsertionSpec::new(system, ins.x, ins.y, ins.z)?;
        let spec = match ins.overrides {
            Some(o) => spec.with_overrides(SplitParameters {
                alpha: (o.alpha[0], o.alpha[1]),
                beta: (o.beta[0], o.beta[1]),
                gamma: (o.gamma[0], o.gamma[1]),
            })?,
            None => spec,
        };
        Ok(Some(spec))
    }

    pub fn lipschitz(&self, maps: usize) -> Result<LipschitzData> {
        let lambda = self.lambda.clone().unwrap_or_else(|| vec![1.0; maps]);
        let mu = self.mu.clone().unwrap_or_else(|| vec![1.0; maps]);
        if lambda.len() != maps {
            return Err(Error::LengthMismatch {
                what: "lambda".into(),
                expected: maps,
                found: lambda.len(),
            });
        }
        LipschitzData::supplied(lambda, mu)
    }
}

/// The CSV table as a string: header `x,f1,f2`, LF line endings, shortest
/// round-trip numerals.
pub fn csv_string(samples: &SampledFunction) -> Result<String> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut out = String::with_capacity(samples.len() * 48);
    out.push_str("x,f1,f2\n");
    for i in 0..samples.len() {
        writeln!(
            out,
            "{},{},{}",
            samples.grid[i], samples.f1[i], samples.f2[i]
        )
        .expect("writing to a String");
    }
    Ok(out)
}

/// Writes [`csv_string`] to `path`. Nothing is created for an empty sample.
pub fn emit_csv(samples: &SampledFunction, path: &Path) -> Result<()> {
    let text = csv_string(samples)?;
    write_file(path, &text)
}

/// Parses a table written by [`emit_csv`]. The error bound of the result is zero.
pub fn parse_csv(text: &str) -> Result<SampledFunction> {
    let mut lines = text.lines();
    match lines.next() {
        Some("x,f1,f2") => {}
        other => {
            return Err(Error::Config(format!(
                "expected CSV header \"x,f1,f2\", found {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let (mut grid, mut f1, mut f2) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("CSV row {}: {s:?}: {e}", i + 1)))
        };
        if fields.len() != 3 {
            return Err(Error::Config(format!(
                "CSV row {} has {} fields",
                i + 1,
                fields.len()
            )));
        }
        grid.push(parse(fields[0])?);
        f1.push(parse(fields[1])?);
        f2.push(parse(fields[2])?);
    }
    SampledFunction::new(grid, f1, f2, 0.0)
}

pub fn read_csv(path: &Path) -> Result<SampledFunction> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Stroke colour of the pre-insertion curve.
pub const PRE_STROKE: &str = "#0000ff";
/// Stroke colour of the post-insertion curve.
pub const POST_STROKE: &str = "#000000";

/// Plot geometry for [`svg_string`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvgLayout {
    pub width: u32,
    pub height: u32,
    /// Fraction of the data range added on each side.
    pub margin: f64,
}

impl Default for SvgLayout {
    fn default() -> Self {
        Self {
            width: 800,
            height: 600,
            margin: 0.05,
        }
    }
}

const PAD_LEFT: f64 = 70.0;
const PAD_RIGHT: f64 = 20.0;
const PAD_TOP: f64 = 20.0;
const PAD_BOTTOM: f64 = 50.0;

/// Renders one component of `pre` (blue) and optionally `post` (black) as a
/// standalone SVG document. Coordinates use fixed decimals, so equal inputs give
/// equal bytes.
pub fn svg_string(
    pre: &SampledFunction,
    post: Option<&SampledFunction>,
    component: Component,
    layout: SvgLayout,
) -> Result<String> {
    if pre.is_empty() || post.is_some_and(|p| p.is_empty()) {
        return Err(Error::EmptySample);
    }
    let (a0, a1) = pre.x_range();
    if let Some(post) = post {
        let (b0, b1) = post.x_range();
        let tol = 1e-9 * (a1 - a0).abs().max(1.0);
        if (a0 - b0).abs() > tol || (a1 - b1).abs() > tol {
            return Err(Error::RangeMismatch { a0, a1, b0, b1 });
        }
    }
    let curves: Vec<(&SampledFunction, &str)> = std::iter::once((pre, PRE_STROKE))
        .chain(post.map(|p| (p, POST_STROKE)))
        .collect();

    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (s, _) in &curves {
        for &v in s.component(component) {
            y0 = y0.min(v);
            y1 = y1.max(v);
        }
    }
    let expand = |lo: f64, hi: f64| {
        let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
        (lo - layout.margin * span, hi + layout.margin * span)
    };
    let (x_lo, x_hi) = expand(a0, a1);
    let (y_lo, y_hi) = expand(y0, y1);
    let (w, h) = (f64::from(layout.width), f64::from(layout.height));
    let plot_w = w - PAD_LEFT - PAD_RIGHT;
    let plot_h = h - PAD_TOP - PAD_BOTTOM;
    let px = |x: f64| PAD_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| PAD_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;
    let label = match component {
        Component::F1 => "f1",
        Component::F2 => "f2",
    };

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">"#,
        layout.width, layout.height
    );
    let _ = writeln!(
        out,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );
    let (left, right, top, bottom) = (PAD_LEFT, w - PAD_RIGHT, PAD_TOP, h - PAD_BOTTOM);
    let _ = writeln!(
        out,
        r##"<g stroke="#808080" stroke-width="1" fill="none"><line x1="{left:.2}" y1="{bottom:.2}" x2="{right:.2}" y2="{bottom:.2}"/><line x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{bottom:.2}"/></g>"##
    );
    let _ = writeln!(
        out,
        r##"<g font-family="sans-serif" font-size="12" fill="#000000">"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.4}</text>"#,
        px(a0),
        bottom + 16.0,
        a0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.4}</text>"#,
        px(a1),
        bottom + 16.0,
        a1
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.4}</text>"#,
        left - 6.0,
        py(y0) + 4.0,
        y0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.4}</text>"#,
        left - 6.0,
        py(y1) + 4.0,
        y1
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">x</text>"#,
        (left + right) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{label}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );
    let _ = writeln!(out, "</g>");
    for (s, stroke) in curves {
        out.push_str(r#"<polyline fill="none" stroke=""#);
        out.push_str(stroke);
        out.push_str(r#"" stroke-width="1" points=""#);
        for (i, (&x, &y)) in s.grid.iter().zip(s.component(component)).enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.3},{:.3}", px(x), py(y));
        }
        out.push_str("\"/>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes an [`svg_string`] with the default layout to `path`.
pub fn emit_svg(
    pre: &SampledFunction,
    post: Option<&SampledFunction>,
    component: Component,
    path: &Path,
) -> Result<()> {
    let text = svg_string(pre, post, component, SvgLayout::default())?;
    write_file(path, &text)
}
