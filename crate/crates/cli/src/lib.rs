//! Command dispatch for the `chfif` binary.
//!
//! [`run`] takes the full argument vector and writer handles and returns the
//! process exit status, so tests can drive it in-process.

use std::io::Write;
use std::path::PathBuf;

use chfif::{
    box_dimension, chaos_game, classify_indices, classify_insertion, compare_bounds,
    compare_smoothness, compute_indices, dimension_bounds, emit_csv, emit_svg, evaluate_near,
    graph_points, insert, sample_graph_with_limits, split_l_identity_check,
    split_pq_relation_check, ChfifSystem, Component, Error, LipschitzData, RefineLimits, RunConfig,
    SampledFunction, DEFAULT_EVAL_DEPTH, DEFAULT_KNOT_TOLERANCE,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CONFIG: i32 = 65;
pub const EXIT_IO: i32 = 74;

/// Environment variable capping the number of refinement points.
pub const MAX_POINTS_VAR: &str = "CHFIF_MAX_POINTS";
pub const DEFAULT_MAX_POINTS: u128 = 5_000_000;

#[derive(Parser, Debug)]
#[command(
    name = "chfif",
    version,
    about = "Coalescence hidden-variable fractal interpolation"
)]
struct Cli {
    /// JSON run configuration; the built-in four-point example when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Refinement depth, overriding the configuration.
    #[arg(long, global = true)]
    depth: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the system and print its maps.
    Construct {
        /// Also print the join-up and endpoint residuals.
        #[arg(long)]
        check: bool,
    },
    /// Evaluate f at one abscissa with a certified error bound.
    Evaluate {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Backward unwinding depth.
        #[arg(long = "eval-depth", default_value_t = DEFAULT_EVAL_DEPTH)]
        eval_depth: usize,
        /// Make the bound hold for every abscissa within this distance of x.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        radius: f64,
    },
    /// Insert a point and report the enlarged system.
    Insert {
        #[command(flatten)]
        point: PointArgs,
        /// Report the insertion kind against the current interpolant.
        #[arg(long)]
        classify: bool,
        #[arg(long, default_value_t = DEFAULT_KNOT_TOLERANCE)]
        tol: f64,
    },
    /// Smoothness indices and class before (and after) insertion.
    Classify,
    /// Fractal dimension bounds before (and after) insertion.
    Bounds,
    /// Box-counting estimate of a component graph.
    Boxdim {
        #[arg(long, value_enum, default_value_t = Which::F1)]
        component: Which,
        #[arg(long = "min-scale", default_value_t = 1.0 / 512.0)]
        min_scale: f64,
        #[arg(long = "max-scale", default_value_t = 0.25)]
        max_scale: f64,
        #[arg(long, default_value_t = 8)]
        levels: usize,
    },
    /// Compare smoothness classes and bounds across the configured insertion.
    Compare,
    /// Write the sampled graph as CSV or SVG.
    Render {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output file; standard output when omitted and no output is configured.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Which::F1)]
        component: Which,
        /// Overlay the post-insertion curve (SVG) or tabulate it instead (CSV).
        #[arg(long)]
        post: bool,
        /// Sample by random iteration with the configured seed instead of refinement.
        #[arg(long = "chaos-points", value_name = "COUNT")]
        chaos_points: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct PointArgs {
    #[arg(long, allow_hyphen_values = true, requires_all = ["y", "z"])]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["x", "z"])]
    y: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["x", "y"])]
    z: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Svg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Which {
    F1,
    F2,
}

impl From<Which> for Component {
    fn from(w: Which) -> Self {
        match w {
            Which::F1 => Component::F1,
            Which::F2 => Component::F2,
        }
    }
}

/// A failed command: exit status plus a single-line diagnostic.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, tag) = match &e {
            Error::Config(_) => (EXIT_CONFIG, "config"),
            Error::Io { .. } => (EXIT_IO, "io"),
            _ => (EXIT_VALIDATION, "validation"),
        };
        Failure {
            code,
            message: format!("{tag}: {e}"),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("io: {e}"),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Runs one invocation; `argv[0]` is the program name.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            let _ = writeln!(err, "chfif: usage: {first}");
            return EXIT_USAGE;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let line = f.message.replace('\n', " ");
            let _ = writeln!(err, "chfif: {line}");
            f.code
        }
    }
}

fn refine_limits() -> std::result::Result<RefineLimits, Failure> {
    let max_points = match std::env::var(MAX_POINTS_VAR) {
        Ok(v) => v.trim().parse::<u128>().map_err(|_| Failure {
            code: EXIT_VALIDATION,
            message: format!("validation: {MAX_POINTS_VAR} = {v:?} is not a point count"),
        })?,
        Err(_) => DEFAULT_MAX_POINTS,
    };
    Ok(RefineLimits {
        max_points,
        ..RefineLimits::default()
    })
}

struct Context {
    config: RunConfig,
    system: ChfifSystem,
    depth: usize,
    limits: RefineLimits,
}

impl Context {
    fn load(cli: &Cli) -> std::result::Result<Self, Failure> {
        let config = match &cli.config {
            Some(path) => RunConfig::from_path(path).map_err(|e| match e {
                // an unreadable config is a config problem, not an output failure
                Error::Io { .. } => Failure {
                    code: EXIT_CONFIG,
                    message: format!("config: {e}"),
                },
                other => other.into(),
            })?,
            None => RunConfig::sample(),
        };
        let system = config.system()?;
        Ok(Self {
            depth: cli.depth.unwrap_or(config.depth),
            limits: refine_limits()?,
            config,
            system,
        })
    }

    fn lipschitz(
        &self,
        system: &ChfifSystem,
        split_k: Option<usize>,
    ) -> Result<LipschitzData, Error> {
        let base = self.config.lipschitz(self.system.map_count())?;
        Ok(match split_k {
            Some(k) if system.map_count() > self.system.map_count() => base.split(k),
            _ => base,
        })
    }

    fn sample(&self, system: &ChfifSystem) -> Result<SampledFunction, Error> {
        sample_graph_with_limits(system, self.depth, self.limits)
    }

    /// Configured insertion applied to the system, with the split index.
    fn inserted(&self) -> std::result::Result<Option<(ChfifSystem, usize)>, Failure> {
        match self.config.insertion_spec(&self.system)? {
            Some(spec) => Ok(Some((insert(&self.system, &spec)?, spec.k))),
            None => Ok(None),
        }
    }

    fn require_inserted(&self) -> std::result::Result<(ChfifSystem, usize), Failure> {
        self.inserted()?.ok_or_else(|| Failure {
            code: EXIT_VALIDATION,
            message: "validation: configuration has no insertion".into(),
        })
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> CmdResult {
    let ctx = Context::load(&cli)?;
    match cli.command {
        Command::Construct { check } => construct(&ctx, check, out),
        Command::Evaluate {
            x,
            eval_depth,
            radius,
        } => {
            let e = evaluate_near(&ctx.system, x, radius, eval_depth)?;
            writeln!(
                out,
                "x={x} f1={} f2={} error_bound={:e} steps={}",
                e.f1, e.f2, e.error_bound, e.steps
            )?;
            Ok(())
        }
        Command::Insert {
            point,
            classify,
            tol,
        } => insert_cmd(ctx, point, classify, tol, out),
        Command::Classify => classify_cmd(&ctx, out),
        Command::Bounds => bounds_cmd(&ctx, out),
        Command::Boxdim {
            component,
            min_scale,
            max_scale,
            levels,
        } => {
            let samples = ctx.sample(&ctx.system)?;
            let pts = graph_points(&samples, component.into());
            let est = box_dimension(&pts, min_scale, max_scale, levels)?;
            writeln!(out, "points: {}", pts.len())?;
            for (s, c) in est.scales.iter().zip(&est.counts) {
                writeln!(out, "scale={s} count={c}")?;
            }
            writeln!(out, "slope: {}", est.slope)?;
            writeln!(out, "r2: {}", est.fit_r2)?;
            Ok(())
        }
        Command::Compare => compare_cmd(&ctx, out),
        Command::Render {
            format,
            output,
            component,
            post,
            chaos_points,
        } => render_cmd(
            &ctx,
            format,
            output,
            component.into(),
            post,
            chaos_points,
            out,
        ),
    }
}

fn construct(ctx: &Context, check: bool, out: &mut dyn Write) -> CmdResult {
    let sys = &ctx.system;
    writeln!(out, "maps: {}", sys.map_count())?;
    for (i, m) in sys.maps().iter().enumerate() {
        writeln!(
            out,
            "map {}: I=[{}, {}] alpha={} beta={} gamma={} p=({}, {}) q=({}, {})",
            i + 1,
            m.left,
            m.right,
            m.alpha,
            m.beta,
            m.gamma,
            m.p.value_at_x0,
            m.p.value_at_xn,
            m.q.value_at_x0,
            m.q.value_at_xn
        )?;
    }
    if check {
        writeln!(out, "join-up residual: {:e}", sys.join_up_residual())?;
        writeln!(out, "endpoint residual: {:e}", sys.endpoint_residual())?;
    }
    Ok(())
}

fn insert_cmd(
    mut ctx: Context,
    point: PointArgs,
    classify: bool,
    tol: f64,
    out: &mut dyn Write,
) -> CmdResult {
    if let (Some(x), Some(y), Some(z)) = (point.x, point.y, point.z) {
        let overrides = ctx.config.insertion.as_ref().and_then(|i| i.overrides);
        ctx.config.insertion = Some(chfif::io::InsertionConfig { x, y, z, overrides });
    }
    let ins = ctx.config.insertion.clone().ok_or_else(|| Failure {
        code: EXIT_VALIDATION,
        message: "validation: no point given and configuration has no insertion".into(),
    })?;
    if classify {
        let c = classify_insertion(&ctx.system, ins.x, ins.y, ins.z, tol)?;
        writeln!(out, "kind: {}", c.kind)?;
        writeln!(
            out,
            "f({}) = ({}, {}) error_bound={:e}",
            ins.x, c.f1, c.f2, c.error_bound
        )?;
    }
    let spec = ctx
        .config
        .insertion_spec(&ctx.system)?
        .expect("insertion is set");
    let inserted = insert(&ctx.system, &spec)?;
    writeln!(out, "k: {}", spec.k)?;
    writeln!(out, "maps: {}", inserted.map_count())?;
    writeln!(out, "join-up residual: {:e}", inserted.join_up_residual())?;
    writeln!(
        out,
        "split-L residual: {:e}",
        split_l_identity_check(&ctx.system, &spec)?
    )?;
    match split_pq_relation_check(&ctx.system, &spec) {
        Ok(r) => writeln!(out, "split-pq residual: {r:e}")?,
        Err(e) => writeln!(out, "split-pq residual: n/a ({e})")?,
    }
    Ok(())
}

fn write_indices(
    out: &mut dyn Write,
    label: &str,
    system: &ChfifSystem,
    lip: &LipschitzData,
) -> CmdResult {
    let idx = compute_indices(system, lip)?;
    let class = classify_indices(&idx, lip);
    writeln!(
        out,
        "{label}: Omega={} Gamma={} Theta={} delta={} class={}",
        idx.omega,
        idx.gamma,
        idx.theta,
        lip.delta,
        class.kind.as_str()
    )?;
    Ok(())
}

fn classify_cmd(ctx: &Context, out: &mut dyn Write) -> CmdResult {
    write_indices(out, "pre", &ctx.system, &ctx.lipschitz(&ctx.system, None)?)?;
    if let Some((post, k)) = ctx.inserted()? {
        write_indices(out, "post", &post, &ctx.lipschitz(&post, Some(k))?)?;
    }
    Ok(())
}

fn write_bounds(
    out: &mut dyn Write,
    label: &str,
    system: &ChfifSystem,
    lip: &LipschitzData,
) -> CmdResult {
    let idx = compute_indices(system, lip)?;
    for b in dimension_bounds(system, &idx, lip)? {
        writeln!(
            out,
            "{label} {:?}: lower={} upper={} sum={} max_length={} applicable={} ({}){}",
            b.variant,
            b.lower,
            b.upper,
            b.sum,
            b.max_length,
            b.applicable,
            b.reason,
            if b.inconsistent() {
                " inconsistent"
            } else {
                ""
            }
        )?;
    }
    Ok(())
}

fn bounds_cmd(ctx: &Context, out: &mut dyn Write) -> CmdResult {
    write_bounds(out, "pre", &ctx.system, &ctx.lipschitz(&ctx.system, None)?)?;
    if let Some((post, k)) = ctx.inserted()? {
        write_bounds(out, "post", &post, &ctx.lipschitz(&post, Some(k))?)?;
    }
    Ok(())
}

fn compare_cmd(ctx: &Context, out: &mut dyn Write) -> CmdResult {
    let (post, k) = ctx.require_inserted()?;
    let pre_lip = ctx.lipschitz(&ctx.system, None)?;
    let post_lip = ctx.lipschitz(&post, Some(k))?;
    let pre_idx = compute_indices(&ctx.system, &pre_lip)?;
    let post_idx = compute_indices(&post, &post_lip)?;
    let pre_class = classify_indices(&pre_idx, &pre_lip);
    let post_class = classify_indices(&post_idx, &post_lip);
    writeln!(out, "pre class: {}", pre_class.kind.as_str())?;
    writeln!(out, "post class: {}", post_class.kind.as_str())?;
    match compare_smoothness((&pre_idx, &pre_class), (&post_idx, &post_class)) {
        Ok(c) => writeln!(out, "smoothness: {}", c.as_str())?,
        Err(e) => writeln!(out, "smoothness: not applicable ({e})")?,
    }
    let pre_bounds = dimension_bounds(&ctx.system, &pre_idx, &pre_lip)?;
    let post_bounds = dimension_bounds(&post, &post_idx, &post_lip)?;
    for (a, b) in pre_bounds.iter().zip(&post_bounds) {
        match compare_bounds(a, b) {
            Ok(v) => writeln!(
                out,
                "bounds {:?}: upper_margin={} lower_margin={} upper_holds={} lower_holds={}",
                a.variant,
                v.upper_margin,
                v.lower_margin,
                v.upper_holds(),
                v.lower_holds()
            )?,
            Err(e) => writeln!(out, "bounds {:?}: not applicable ({e})", a.variant)?,
        }
    }
    Ok(())
}

fn chaos_samples(system: &ChfifSystem, count: usize, seed: u64) -> Result<SampledFunction, Error> {
    let mut pts = chaos_game(system, count, seed);
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    pts.dedup_by(|a, b| a.x == b.x);
    SampledFunction::new(
        pts.iter().map(|p| p.x).collect(),
        pts.iter().map(|p| p.y).collect(),
        pts.iter().map(|p| p.z).collect(),
        0.0,
    )
}

fn render_cmd(
    ctx: &Context,
    format: Format,
    output: Option<PathBuf>,
    component: Component,
    post: bool,
    chaos_points: Option<usize>,
    out: &mut dyn Write,
) -> CmdResult {
    let tabulate = |system: &ChfifSystem| -> Result<SampledFunction, Error> {
        match chaos_points {
            Some(n) => chaos_samples(system, n, ctx.config.seed),
            None => ctx.sample(system),
        }
    };
    let pre = tabulate(&ctx.system)?;
    let post_samples = if post {
        let (sys, _) = ctx.require_inserted()?;
        Some(tabulate(&sys)?)
    } else {
        None
    };
    let configured = match format {
        Format::Csv => ctx.config.output.csv.clone(),
        Format::Svg => ctx.config.output.svg.clone(),
    };
    let target = output.or(configured);
    match format {
        Format::Csv => {
            // the CSV holds one table: the post-insertion one when requested
            let table = post_samples.as_ref().unwrap_or(&pre);
            match target {
                Some(path) => emit_csv(table, &path)?,
                None => out.write_all(chfif::csv_string(table)?.as_bytes())?,
            }
        }
        Format::Svg => match target {
            Some(path) => emit_svg(&pre, post_samples.as_ref(), component, &path)?,
            None => {
                let text = chfif::svg_string(
                    &pre,
                    post_samples.as_ref(),
                    component,
                    chfif::SvgLayout::default(),
                )?;
                out.write_all(text.as_bytes())?;
            }
        },
    }
    Ok(())
}

/// Convenience for binaries: runs with the process arguments and standard streams.
pub fn main_with_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
