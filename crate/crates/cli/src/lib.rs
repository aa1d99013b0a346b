//! Command implementations behind the `r0dp` binary.
//!
//! Every command is an ordinary function taking a typed argument struct and
//! returning the text it would print on stdout, so integration tests can
//! drive commands directly as well as through the binary. File outputs are
//! written atomically (temp file + rename) and all floating-point values in
//! CSV output carry 17 significant digits, so identical inputs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use r0dp::accuracy::{
    evaluate_accuracy, output_error_moments, penetration_bound_eval,
    suggest_penetration_t, AccuracyReport, PenetrationBound,
};
use r0dp::epidemic::{
    check_penetration, default_initial, simulate, EpidemicKind, EpidemicSystem, PenetrationCheck,
    DEFAULT_STEP, DEFAULT_T_MAX,
};
use r0dp::graph::{parse_graph, random_connected_graph, serialize_graph};
use r0dp::mechanisms::{
    calibrate_gaussian, calibrate_laplace, input_perturb, output_perturb, r0_cap_from_bounds,
    AllocationMode, GaussianCalibration, LaplaceCalibration, PrivacyBudget,
};
use r0dp::numerics::derive_stream;
use r0dp::spectral::spectral_radius;
use r0dp::{Error, GraphFormat, Matrix, SeededRng, WeightBounds, WeightedGraph};

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

/// Command-level error: a library error or an I/O failure with path context.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// Exit code contract: 0 ok, 1 I/O, 2 argument, 3 infeasible budget,
    /// 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Argument(_))
            | CliError::Core(Error::Parse { .. })
            | CliError::Core(Error::Validation(_)) => 2,
            CliError::Core(Error::InfeasibleBudget(_)) => 3,
            CliError::Core(Error::Convergence { .. })
            | CliError::Core(Error::NumericDomain(_))
            | CliError::Core(Error::Instability(_)) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(Error::Argument(_)) => "argument",
            CliError::Core(Error::Parse { .. }) => "parse",
            CliError::Core(Error::Validation(_)) => "validation",
            CliError::Core(Error::InfeasibleBudget(_)) => "infeasible-budget",
            CliError::Core(Error::Convergence { .. }) => "convergence",
            CliError::Core(Error::NumericDomain(_)) => "numeric-domain",
            CliError::Core(Error::Instability(_)) => "instability",
            CliError::Io { .. } => "io",
        }
    }

    /// Machine-readable error object for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
        .to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn argument(msg: impl Into<String>) -> CliError {
    CliError::Core(Error::Argument(msg.into()))
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// 17-significant-digit decimal rendering used by every CSV emitter.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `content` to `path` through a sibling temp file and an atomic
/// rename, removing the temp file if anything fails part-way.
pub fn write_atomic(path: &Path, content: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(path))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    if let Err(e) = fs::write(&tmp, content) {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(&tmp)(e));
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path)(e));
    }
    Ok(())
}

fn format_for(path: &Path) -> CliResult<GraphFormat> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    GraphFormat::from_extension(ext).ok_or_else(|| {
        argument(format!(
            "cannot infer graph format from {:?} (use a .csv or .json path)",
            path.display()
        ))
    })
}

/// Reads and parses a graph file, picking the format from the extension.
pub fn load_graph(path: &Path) -> CliResult<(WeightedGraph, WeightBounds)> {
    let format = format_for(path)?;
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_graph(&text, format)?)
}

/// Which release mechanism(s) a command touches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismChoice {
    Input,
    Output,
    Both,
}

impl MechanismChoice {
    pub fn includes_input(self) -> bool {
        self != MechanismChoice::Output
    }

    pub fn includes_output(self) -> bool {
        self != MechanismChoice::Input
    }
}

impl std::str::FromStr for MechanismChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "input" => Ok(MechanismChoice::Input),
            "output" => Ok(MechanismChoice::Output),
            "both" => Ok(MechanismChoice::Both),
            other => Err(Error::Argument(format!(
                "unknown mechanism {other:?} (expected input, output, or both)"
            ))),
        }
    }
}

impl std::fmt::Display for MechanismChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MechanismChoice::Input => "input",
            MechanismChoice::Output => "output",
            MechanismChoice::Both => "both",
        })
    }
}

/// Scalar audit record of a Gaussian calibration (the allocation matrix is
/// reproducible from the mode, pattern, and bounds, so it is not echoed).
#[derive(Clone, Debug, Serialize)]
pub struct GaussianRecord {
    pub sigma: f64,
    pub delta_c: f64,
    pub s_term: f64,
    pub mode: AllocationMode,
    pub epsilon: f64,
    pub k: f64,
    pub iterations: usize,
}

impl From<&GaussianCalibration> for GaussianRecord {
    fn from(c: &GaussianCalibration) -> Self {
        GaussianRecord {
            sigma: c.sigma,
            delta_c: c.delta_c,
            s_term: c.s_term,
            mode: c.mode,
            epsilon: c.epsilon,
            k: c.k,
            iterations: c.iterations,
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Core(Error::Validation(format!("JSON encoding failed: {e}"))))?;
    text.push('\n');
    Ok(text)
}

// ---------------------------------------------------------------------------
// gen-graph
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GenGraphArgs {
    pub n: usize,
    pub edges: usize,
    pub w_max: f64,
    pub seed: u64,
    pub lower: f64,
    /// Upper weight bound; defaults to `w_max`.
    pub upper: Option<f64>,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct GenGraphReport {
    path: String,
    n: usize,
    entries: usize,
    spectral_radius: f64,
}

/// Generates a random connected graph, writes it to `out` in the format
/// implied by the extension, and reports its spectral radius.
pub fn cmd_gen_graph(args: &GenGraphArgs) -> CliResult<String> {
    let format = format_for(&args.out)?;
    let graph = random_connected_graph(args.n, args.edges, args.w_max, args.seed)?;
    let upper = args.upper.unwrap_or(args.w_max);
    let bounds = WeightBounds::global(&graph, args.lower, upper)?;
    let text = serialize_graph(&graph, &bounds, format)?;
    write_atomic(&args.out, &text)?;
    let rho = spectral_radius(graph.weights())?.value;
    pretty(&GenGraphReport {
        path: args.out.display().to_string(),
        n: graph.n(),
        entries: graph.privatized_entries().len(),
        spectral_radius: rho,
    })
}

// ---------------------------------------------------------------------------
// release
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ReleaseArgs {
    pub graph: PathBuf,
    pub epsilon: f64,
    pub k: f64,
    pub mechanism: MechanismChoice,
    pub mode: AllocationMode,
    pub seed: u64,
    /// Output-mechanism domain cap; defaults to the spectral radius of the
    /// upper-bound matrix.
    pub r0_cap: Option<f64>,
    /// Deviation level for the reciprocal concentration statement; defaults
    /// to the level at which the confidence is 0.92, omitted if infeasible.
    pub t: Option<f64>,
    pub reveal_true: bool,
}

#[derive(Serialize)]
struct GraphSummary {
    n: usize,
    n_w: usize,
    symmetric: bool,
}

#[derive(Serialize)]
struct InputRelease {
    r0_released: f64,
    calibration: GaussianRecord,
    accuracy: AccuracyReport,
}

#[derive(Serialize)]
struct OutputMoments {
    mean_abs_err: f64,
    mean_sq_err: f64,
}

#[derive(Serialize)]
struct OutputRelease {
    r0_released: f64,
    calibration: LaplaceCalibration,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_moments: Option<OutputMoments>,
}

#[derive(Serialize)]
struct ReleaseReport {
    graph: GraphSummary,
    budget: PrivacyBudget,
    #[serde(skip_serializing_if = "Option::is_none")]
    r0_true: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<InputRelease>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<OutputRelease>,
}

/// Resolves the deviation level for the penetration statement: an explicit
/// `t` is used as given (errors propagate); otherwise the suggested level is
/// tried and silently dropped when the statement is infeasible there.
fn resolve_penetration_t(
    graph: &WeightedGraph,
    bounds: &WeightBounds,
    sigma: f64,
    t: Option<f64>,
) -> CliResult<Option<f64>> {
    match t {
        Some(t) => {
            penetration_bound_eval(graph, bounds, sigma, t)?;
            Ok(Some(t))
        }
        None => {
            if !graph.symmetric() {
                return Ok(None);
            }
            let t = suggest_penetration_t(sigma, graph.n());
            Ok(penetration_bound_eval(graph, bounds, sigma, t).ok().map(|_| t))
        }
    }
}

/// One private release of the reproduction number. The true radius, the
/// penetration block, and the output-mechanism error moments are functions
/// of the sensitive input and appear only under `reveal_true`.
pub fn cmd_release(args: &ReleaseArgs) -> CliResult<String> {
    let (graph, bounds) = load_graph(&args.graph)?;
    if graph.n_w() == 0 {
        return Err(argument("graph has no positive weights to privatize"));
    }
    let budget = PrivacyBudget::new(args.epsilon, args.k)?;
    let r0 = spectral_radius(graph.weights())?.value;

    let input = if args.mechanism.includes_input() {
        let calib = calibrate_gaussian(&graph, &bounds, budget, args.mode)?;
        let mut rng = SeededRng::new(args.seed, 1);
        let perturbed = input_perturb(&graph, &bounds, &calib, &mut rng)?;
        let r0_released = spectral_radius(perturbed.weights())?.value;
        let t = resolve_penetration_t(&graph, &bounds, calib.sigma, args.t)?;
        let mut accuracy = evaluate_accuracy(&graph, &bounds, calib.sigma, t)?;
        if !args.reveal_true {
            accuracy.penetration = None;
        }
        Some(InputRelease { r0_released, calibration: GaussianRecord::from(&calib), accuracy })
    } else {
        None
    };

    let output = if args.mechanism.includes_output() {
        let r0_cap = match args.r0_cap {
            Some(cap) => cap,
            None => r0_cap_from_bounds(&bounds)?,
        };
        let calib = calibrate_laplace(budget, r0_cap)?;
        let mut rng = SeededRng::new(args.seed, 2);
        let r0_released = output_perturb(r0, &calib, &mut rng)?;
        let error_moments = if args.reveal_true {
            let (mae, mse) = output_error_moments(r0, calib.b, r0_cap)?;
            Some(OutputMoments { mean_abs_err: mae, mean_sq_err: mse })
        } else {
            None
        };
        Some(OutputRelease { r0_released, calibration: calib, error_moments })
    } else {
        None
    };

    pretty(&ReleaseReport {
        graph: GraphSummary { n: graph.n(), n_w: graph.n_w(), symmetric: graph.symmetric() },
        budget,
        r0_true: args.reveal_true.then_some(r0),
        input,
        output,
    })
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct BoundsArgs {
    pub graph: PathBuf,
    pub epsilon: f64,
    pub k: f64,
    pub mechanism: MechanismChoice,
    pub mode: AllocationMode,
    /// Evaluate the input-mechanism bounds at this noise scale instead of
    /// calibrating one from the budget.
    pub sigma: Option<f64>,
    pub t: Option<f64>,
    pub r0_cap: Option<f64>,
}

#[derive(Serialize)]
struct InputBoundsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<GaussianRecord>,
    accuracy: AccuracyReport,
}

#[derive(Serialize)]
struct OutputBoundsSection {
    calibration: LaplaceCalibration,
    error_moments: OutputMoments,
}

#[derive(Serialize)]
struct BoundsReport {
    graph: GraphSummary,
    budget: PrivacyBudget,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<InputBoundsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<OutputBoundsSection>,
}

/// Offline analysis for a data holder: calibrations and the full analytic
/// accuracy report, with nothing released and nothing redacted.
pub fn cmd_bounds(args: &BoundsArgs) -> CliResult<String> {
    let (graph, bounds) = load_graph(&args.graph)?;
    if graph.n_w() == 0 {
        return Err(argument("graph has no positive weights to privatize"));
    }
    let budget = PrivacyBudget::new(args.epsilon, args.k)?;

    let input = if args.mechanism.includes_input() {
        let (sigma, calibration) = match args.sigma {
            Some(sigma) => (sigma, None),
            None => {
                let calib = calibrate_gaussian(&graph, &bounds, budget, args.mode)?;
                (calib.sigma, Some(GaussianRecord::from(&calib)))
            }
        };
        let t = resolve_penetration_t(&graph, &bounds, sigma, args.t)?;
        let accuracy = evaluate_accuracy(&graph, &bounds, sigma, t)?;
        Some(InputBoundsSection { calibration, accuracy })
    } else {
        None
    };

    let output = if args.mechanism.includes_output() {
        let r0 = spectral_radius(graph.weights())?.value;
        let r0_cap = match args.r0_cap {
            Some(cap) => cap,
            None => r0_cap_from_bounds(&bounds)?,
        };
        let calibration = calibrate_laplace(budget, r0_cap)?;
        let (mae, mse) = output_error_moments(r0, calibration.b, r0_cap)?;
        Some(OutputBoundsSection {
            calibration,
            error_moments: OutputMoments { mean_abs_err: mae, mean_sq_err: mse },
        })
    } else {
        None
    };

    pretty(&BoundsReport {
        graph: GraphSummary { n: graph.n(), n_w: graph.n_w(), symmetric: graph.symmetric() },
        budget,
        input,
        output,
    })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SimulateArgs {
    pub graph: PathBuf,
    pub gamma: f64,
    pub model: EpidemicKind,
    /// Initial infected fraction per node; susceptible starts at `1 - x0`.
    pub x0: f64,
    pub step: f64,
    pub t_max: f64,
    pub stride: Option<usize>,
    pub trajectory: Option<PathBuf>,
}

impl Default for SimulateArgs {
    fn default() -> Self {
        SimulateArgs {
            graph: PathBuf::new(),
            gamma: 1.0,
            model: EpidemicKind::Sir,
            x0: 0.01,
            step: DEFAULT_STEP,
            t_max: DEFAULT_T_MAX,
            stride: None,
            trajectory: None,
        }
    }
}

#[derive(Serialize)]
struct SimulateReport {
    model: EpidemicKind,
    r0: f64,
    dfe_reached: bool,
    steps: usize,
    t_final: f64,
    min_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    penetration: Option<PenetrationCheck>,
    s: Vec<f64>,
    x: Vec<f64>,
    r: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory_path: Option<String>,
}

fn trajectory_csv(states: &[r0dp::epidemic::EpidemicState], n: usize) -> String {
    let mut out = String::from("t");
    for i in 0..n {
        let _ = write!(out, ",s_{i}");
    }
    for i in 0..n {
        let _ = write!(out, ",x_{i}");
    }
    for i in 0..n {
        let _ = write!(out, ",r_{i}");
    }
    out.push('\n');
    for st in states {
        out.push_str(&fmt_f64(st.t));
        for v in st.s.iter().chain(&st.x).chain(&st.r) {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Integrates the epidemic dynamics on a graph file and reports the final
/// state, the reproduction number, and the penetration check at equilibrium.
pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    let (graph, _) = load_graph(&args.graph)?;
    let n = graph.n();
    let system = EpidemicSystem::from_graph(&graph, vec![args.gamma; n], args.model)?;
    if !(args.x0 > 0.0 && args.x0 < 1.0) {
        return Err(argument(format!(
            "initial infected fraction must lie in (0, 1), got {}",
            args.x0
        )));
    }
    let s0 = vec![1.0 - args.x0; n];
    let x0 = vec![args.x0; n];
    let stride = match (&args.trajectory, args.stride) {
        (Some(_), stride) => Some(stride.unwrap_or(100)),
        (None, stride) => stride,
    };
    let sim = simulate(&system, &s0, &x0, args.step, args.t_max, stride)?;
    let r0 = spectral_radius(&system.next_generation())?.value;
    let penetration = if sim.dfe_reached && r0 > 0.0 {
        Some(check_penetration(&sim.state, r0)?)
    } else {
        None
    };
    let trajectory_path = match &args.trajectory {
        Some(path) => {
            write_atomic(path, &trajectory_csv(&sim.trajectory, n))?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let min_s = sim.state.s.iter().copied().fold(f64::INFINITY, f64::min);
    pretty(&SimulateReport {
        model: args.model,
        r0,
        dfe_reached: sim.dfe_reached,
        steps: sim.steps,
        t_final: sim.state.t,
        min_s,
        penetration,
        s: sim.state.s.clone(),
        x: sim.state.x.clone(),
        r: sim.state.r.clone(),
        trajectory_path,
    })
}

// ---------------------------------------------------------------------------
// validate-penetration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ValidatePenetrationArgs {
    pub count: usize,
    pub n: usize,
    pub edges: usize,
    pub w_max: f64,
    pub seed: u64,
    /// Rescale every generated graph so its spectral radius hits this value.
    pub target_r0: Option<f64>,
    pub model: EpidemicKind,
    pub gamma: f64,
    pub epsilon: f64,
    pub k: f64,
    pub mode: AllocationMode,
    pub out: Option<PathBuf>,
}

impl Default for ValidatePenetrationArgs {
    fn default() -> Self {
        ValidatePenetrationArgs {
            count: 10,
            n: 20,
            edges: 100,
            w_max: 3.0,
            seed: 7,
            target_r0: None,
            model: EpidemicKind::Sir,
            gamma: 1.0,
            epsilon: 5.0,
            k: 0.01,
            mode: AllocationMode::Conservative,
            out: None,
        }
    }
}

pub const VALIDATE_PENETRATION_HEADER: &str =
    "graph_id,r0,r0_private,inv_r0,inv_r0_private,min_s,holds_true_bound,holds_private_bound";

/// Scales every weight so the spectral radius becomes `target`, returning
/// the scaled graph and the matching upper weight bound.
fn rescale_to_radius(
    graph: &WeightedGraph,
    w_max: f64,
    target: f64,
) -> CliResult<(WeightedGraph, f64)> {
    if !(target.is_finite() && target > 0.0) {
        return Err(argument(format!("target radius must be positive, got {target}")));
    }
    let rho = spectral_radius(graph.weights())?.value;
    let factor = target / rho;
    let mut scaled = Matrix::zeros(graph.n(), graph.n());
    for i in 0..graph.n() {
        for j in 0..graph.n() {
            scaled.set(i, j, graph.weights().get(i, j) * factor);
        }
    }
    Ok((graph.with_weights(scaled)?, w_max * factor))
}

/// Cross-checks the penetration inequality on a batch of generated graphs:
/// simulates each epidemic to its disease-free equilibrium and compares the
/// minimum surviving susceptible fraction against 1/R0 for both the true and
/// the privately released radius.
pub fn cmd_validate_penetration(args: &ValidatePenetrationArgs) -> CliResult<String> {
    if args.count == 0 {
        return Err(argument("graph count must be at least 1"));
    }
    let budget = PrivacyBudget::new(args.epsilon, args.k)?;
    let mut csv = String::from(VALIDATE_PENETRATION_HEADER);
    csv.push('\n');
    for gid in 0..args.count {
        let graph_seed = derive_stream(&[args.seed, gid as u64]);
        let raw = random_connected_graph(args.n, args.edges, args.w_max, graph_seed)?;
        let (graph, upper) = match args.target_r0 {
            Some(target) => rescale_to_radius(&raw, args.w_max, target)?,
            None => (raw, args.w_max),
        };
        let bounds = WeightBounds::global(&graph, 0.0, upper)?;
        let r0 = spectral_radius(graph.weights())?.value;

        let calib = calibrate_gaussian(&graph, &bounds, budget, args.mode)?;
        let mut rng = SeededRng::new(graph_seed, 1);
        let released = input_perturb(&graph, &bounds, &calib, &mut rng)?;
        let r0_private = spectral_radius(released.weights())?.value;

        let system =
            EpidemicSystem::from_graph(&graph, vec![args.gamma; graph.n()], args.model)?;
        let (s0, x0) = default_initial(graph.n());
        let sim = simulate(&system, &s0, &x0, DEFAULT_STEP, DEFAULT_T_MAX, None)?;
        if !sim.dfe_reached {
            return Err(CliError::Core(Error::Instability(format!(
                "graph {gid}: no disease-free equilibrium within the time horizon"
            ))));
        }
        let true_check = check_penetration(&sim.state, r0)?;
        let private_check = check_penetration(&sim.state, r0_private)?;
        let _ = writeln!(
            csv,
            "{gid},{},{},{},{},{},{},{}",
            fmt_f64(r0),
            fmt_f64(r0_private),
            fmt_f64(1.0 / r0),
            fmt_f64(1.0 / r0_private),
            fmt_f64(true_check.min_s),
            true_check.holds,
            private_check.holds
        );
    }
    match &args.out {
        Some(path) => {
            write_atomic(path, &csv)?;
            Ok(format!("wrote {}\n", path.display()))
        }
        None => Ok(csv),
    }
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

fn default_epsilons() -> Vec<f64> {
    (1..=10).map(|e| e as f64).collect()
}

/// Full experiment protocol: graphs, privacy grid, trial counts, mechanism
/// selection, and output location. Loadable from JSON; flags override fields.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub base_seed: u64,
    pub n: usize,
    pub edges: usize,
    pub w_max: f64,
    /// Run on this graph file instead of generated graphs.
    pub graph_file: Option<PathBuf>,
    pub epsilons: Vec<f64>,
    pub k: f64,
    pub trials: usize,
    pub graphs: usize,
    pub mechanism: MechanismChoice,
    pub directed: bool,
    pub mode: AllocationMode,
    /// Output-mechanism domain cap; per-graph bound-matrix radius when unset.
    pub r0_cap: Option<f64>,
    pub gamma: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            base_seed: 7,
            n: 20,
            edges: 100,
            w_max: 3.0,
            graph_file: None,
            epsilons: default_epsilons(),
            k: 0.01,
            trials: 200,
            graphs: 5,
            mechanism: MechanismChoice::Both,
            directed: false,
            mode: AllocationMode::Conservative,
            r0_cap: None,
            gamma: 1.0,
            output_dir: PathBuf::from("."),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.epsilons.is_empty() {
            return Err(argument("epsilon grid must be nonempty"));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(argument("every epsilon must be positive and finite"));
        }
        if self.trials == 0 {
            return Err(argument("trials must be at least 1"));
        }
        if self.graphs == 0 && self.graph_file.is_none() {
            return Err(argument("graphs must be at least 1"));
        }
        Ok(())
    }
}

pub const ERROR_VS_EPSILON_FILE: &str = "error_vs_epsilon.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const PENETRATION_DEVIATION_FILE: &str = "penetration_deviation.csv";
pub const SIR_VALIDATION_FILE: &str = "sir_validation.csv";

pub const ERROR_VS_EPSILON_HEADER: &str = "epsilon,mech,mean_abs_err,std,analytic_mean_bound";
pub const HISTOGRAM_HEADER: &str = "epsilon,mech,graph_id,trial,r0_released";
pub const PENETRATION_DEVIATION_HEADER: &str =
    "epsilon,mech,mean_inv_dev,std,freq_within_threshold,threshold,confidence";
pub const SIR_VALIDATION_HEADER: &str = "graph_id,r0,inv_r0,min_s,holds";

/// Stream-id tags keeping the generator families of the experiment disjoint.
const TAG_GRAPH: u64 = 1;
const TAG_DIRECT: u64 = 2;
const TAG_INPUT: u64 = 3;
const TAG_OUTPUT: u64 = 4;

struct GraphSetting {
    graph: WeightedGraph,
    bounds: WeightBounds,
    r0: f64,
    gaussian: Vec<GaussianCalibration>,
    laplace: Vec<LaplaceCalibration>,
    input_mean_bound: Vec<f64>,
    output_exact_mae: Vec<f64>,
    penetration: Vec<Option<PenetrationBound>>,
}

fn directed_variant(graph: &WeightedGraph, w_max: f64, seed: u64, gid: u64) -> CliResult<WeightedGraph> {
    let mut rng = SeededRng::new(seed, derive_stream(&[TAG_DIRECT, gid]));
    let n = graph.n();
    let mut m = graph.weights().clone();
    for i in 0..n {
        for j in 0..i {
            if m.get(i, j) > 0.0 {
                m.set(i, j, w_max * rng.uniform_left_open());
            }
        }
    }
    Ok(WeightedGraph::new(m, false)?)
}

fn prepare_setting(
    graph: WeightedGraph,
    bounds: WeightBounds,
    config: &ExperimentConfig,
) -> CliResult<GraphSetting> {
    let r0 = spectral_radius(graph.weights())?.value;
    let r0_cap = match config.r0_cap {
        Some(cap) => cap,
        None => r0_cap_from_bounds(&bounds)?,
    };
    let mut gaussian = Vec::with_capacity(config.epsilons.len());
    let mut laplace = Vec::with_capacity(config.epsilons.len());
    let mut input_mean_bound = Vec::with_capacity(config.epsilons.len());
    let mut output_exact_mae = Vec::with_capacity(config.epsilons.len());
    let mut penetration = Vec::with_capacity(config.epsilons.len());
    for &epsilon in &config.epsilons {
        let budget = PrivacyBudget::new(epsilon, config.k)?;
        let g_calib = calibrate_gaussian(&graph, &bounds, budget, config.mode)?;
        let report = evaluate_accuracy(&graph, &bounds, g_calib.sigma, None)?;
        input_mean_bound.push(report.mean_bound);
        penetration.push(if graph.symmetric() {
            let t = suggest_penetration_t(g_calib.sigma, graph.n());
            penetration_bound_eval(&graph, &bounds, g_calib.sigma, t).ok()
        } else {
            None
        });
        let l_calib = calibrate_laplace(budget, r0_cap)?;
        output_exact_mae.push(output_error_moments(r0, l_calib.b, r0_cap)?.0);
        gaussian.push(g_calib);
        laplace.push(l_calib);
    }
    Ok(GraphSetting {
        graph,
        bounds,
        r0,
        gaussian,
        laplace,
        input_mean_bound,
        output_exact_mae,
        penetration,
    })
}

/// Per-(graph, trial) results: released value and absolute errors for each
/// epsilon, per mechanism.
struct TrialResult {
    gid: usize,
    trial: usize,
    /// (epsilon index, released R0, |R̃0 − R0|, |1/R̃0 − 1/R0|) per mechanism.
    input: Vec<(usize, f64, f64, f64)>,
    output: Vec<(usize, f64, f64, f64)>,
}

fn run_trial(
    setting: &GraphSetting,
    config: &ExperimentConfig,
    gid: usize,
    trial: usize,
) -> CliResult<TrialResult> {
    let n_eps = config.epsilons.len();
    let mut input = Vec::new();
    let mut output = Vec::new();
    if config.mechanism.includes_input() {
        let stream = derive_stream(&[config.base_seed, TAG_INPUT, gid as u64, trial as u64]);
        for ei in 0..n_eps {
            // fresh generator per epsilon: identical uniforms across the
            // grid give common-random-number comparisons between budgets
            let mut rng = SeededRng::new(config.base_seed, stream);
            let released =
                input_perturb(&setting.graph, &setting.bounds, &setting.gaussian[ei], &mut rng)?;
            let r0_released = spectral_radius(released.weights())?.value;
            let abs_err = (r0_released - setting.r0).abs();
            let inv_dev = (1.0 / r0_released - 1.0 / setting.r0).abs();
            input.push((ei, r0_released, abs_err, inv_dev));
        }
    }
    if config.mechanism.includes_output() {
        let stream = derive_stream(&[config.base_seed, TAG_OUTPUT, gid as u64, trial as u64]);
        for ei in 0..n_eps {
            let mut rng = SeededRng::new(config.base_seed, stream);
            let r0_released = output_perturb(setting.r0, &setting.laplace[ei], &mut rng)?;
            let abs_err = (r0_released - setting.r0).abs();
            let inv_dev = (1.0 / r0_released - 1.0 / setting.r0).abs();
            output.push((ei, r0_released, abs_err, inv_dev));
        }
    }
    Ok(TrialResult { gid, trial, input, output })
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Serialize)]
struct ExperimentSummary {
    output_dir: String,
    files: Vec<&'static str>,
    graphs: usize,
    trials: usize,
    epsilons: usize,
    mechanism: MechanismChoice,
}

/// Runs the full experiment protocol and writes the four CSV artifacts.
///
/// All file contents are assembled in memory first and then written through
/// atomic renames, so a failure never leaves a partial file behind. Trials
/// are distributed over a worker pool; every (graph, trial) pair owns a
/// generator stream derived from the base seed, and results are merged in
/// (graph, trial) order, so the degree of parallelism never changes a byte
/// of output.
pub fn cmd_experiment(config: &ExperimentConfig) -> CliResult<String> {
    config.validate()?;

    let mut settings = Vec::new();
    match &config.graph_file {
        Some(path) => {
            let (graph, bounds) = load_graph(path)?;
            if graph.n_w() == 0 {
                return Err(argument("graph has no positive weights to privatize"));
            }
            settings.push(prepare_setting(graph, bounds, config)?);
        }
        None => {
            for gid in 0..config.graphs {
                let seed = derive_stream(&[config.base_seed, TAG_GRAPH, gid as u64]);
                let mut graph = random_connected_graph(config.n, config.edges, config.w_max, seed)?;
                if config.directed {
                    graph = directed_variant(&graph, config.w_max, config.base_seed, gid as u64)?;
                }
                let bounds = WeightBounds::global(&graph, 0.0, config.w_max)?;
                settings.push(prepare_setting(graph, bounds, config)?);
            }
        }
    }

    let jobs: Vec<(usize, usize)> = (0..settings.len())
        .flat_map(|gid| (0..config.trials).map(move |trial| (gid, trial)))
        .collect();
    let results: Vec<TrialResult> = jobs
        .into_par_iter()
        .map(|(gid, trial)| run_trial(&settings[gid], config, gid, trial))
        .collect::<CliResult<Vec<_>>>()?;

    let n_eps = config.epsilons.len();
    let mech_rows: Vec<(&str, bool)> = [
        ("input", config.mechanism.includes_input()),
        ("output", config.mechanism.includes_output()),
    ]
    .into_iter()
    .filter(|(_, on)| *on)
    .collect();

    let mut error_csv = String::from(ERROR_VS_EPSILON_HEADER);
    error_csv.push('\n');
    let mut histogram_csv = String::from(HISTOGRAM_HEADER);
    histogram_csv.push('\n');
    let mut penetration_csv = String::from(PENETRATION_DEVIATION_HEADER);
    penetration_csv.push('\n');

    for ei in 0..n_eps {
        for &(mech, _) in &mech_rows {
            fn per_trial<'a>(
                r: &'a TrialResult,
                mech: &str,
            ) -> &'a Vec<(usize, f64, f64, f64)> {
                if mech == "input" {
                    &r.input
                } else {
                    &r.output
                }
            }
            let abs_errs: Vec<f64> =
                results.iter().map(|r| per_trial(r, mech)[ei].2).collect();
            let (mean_err, std_err) = mean_and_sample_std(&abs_errs);
            let bound = if mech == "input" {
                settings.iter().map(|s| s.input_mean_bound[ei]).sum::<f64>()
                    / settings.len() as f64
            } else {
                settings.iter().map(|s| s.output_exact_mae[ei]).sum::<f64>()
                    / settings.len() as f64
            };
            let _ = writeln!(
                error_csv,
                "{},{mech},{},{},{}",
                fmt_f64(config.epsilons[ei]),
                fmt_f64(mean_err),
                fmt_f64(std_err),
                fmt_f64(bound)
            );

            for r in &results {
                let _ = writeln!(
                    histogram_csv,
                    "{},{mech},{},{},{}",
                    fmt_f64(config.epsilons[ei]),
                    r.gid,
                    r.trial,
                    fmt_f64(per_trial(r, mech)[ei].1)
                );
            }

            let inv_devs: Vec<f64> =
                results.iter().map(|r| per_trial(r, mech)[ei].3).collect();
            let (mean_dev, std_dev) = mean_and_sample_std(&inv_devs);
            let mut row = format!(
                "{},{mech},{},{}",
                fmt_f64(config.epsilons[ei]),
                fmt_f64(mean_dev),
                fmt_f64(std_dev)
            );
            if mech == "input" {
                let with_bound: Vec<(usize, &PenetrationBound)> = settings
                    .iter()
                    .enumerate()
                    .filter_map(|(gid, s)| s.penetration[ei].as_ref().map(|p| (gid, p)))
                    .collect();
                if with_bound.is_empty() {
                    row.push_str(",,,");
                } else {
                    let mut freq_sum = 0.0;
                    let mut thr_sum = 0.0;
                    let mut conf_sum = 0.0;
                    for &(gid, p) in &with_bound {
                        let devs: Vec<f64> = results
                            .iter()
                            .filter(|r| r.gid == gid)
                            .map(|r| per_trial(r, mech)[ei].3)
                            .collect();
                        let within =
                            devs.iter().filter(|d| **d < p.threshold).count() as f64;
                        freq_sum += within / devs.len() as f64;
                        thr_sum += p.threshold;
                        conf_sum += p.confidence;
                    }
                    let m = with_bound.len() as f64;
                    let _ = write!(
                        row,
                        ",{},{},{}",
                        fmt_f64(freq_sum / m),
                        fmt_f64(thr_sum / m),
                        fmt_f64(conf_sum / m)
                    );
                }
            } else {
                row.push_str(",,,");
            }
            penetration_csv.push_str(&row);
            penetration_csv.push('\n');
        }
    }

    let mut sir_csv = String::from(SIR_VALIDATION_HEADER);
    sir_csv.push('\n');
    for (gid, setting) in settings.iter().enumerate() {
        let system = EpidemicSystem::from_graph(
            &setting.graph,
            vec![config.gamma; setting.graph.n()],
            EpidemicKind::Sir,
        )?;
        let (s0, x0) = default_initial(setting.graph.n());
        let sim = simulate(&system, &s0, &x0, DEFAULT_STEP, DEFAULT_T_MAX, None)?;
        if !sim.dfe_reached {
            return Err(CliError::Core(Error::Instability(format!(
                "graph {gid}: no disease-free equilibrium within the time horizon"
            ))));
        }
        let check = check_penetration(&sim.state, setting.r0)?;
        let _ = writeln!(
            sir_csv,
            "{gid},{},{},{},{}",
            fmt_f64(setting.r0),
            fmt_f64(1.0 / setting.r0),
            fmt_f64(check.min_s),
            check.holds
        );
    }

    let dir = &config.output_dir;
    write_atomic(&dir.join(ERROR_VS_EPSILON_FILE), &error_csv)?;
    write_atomic(&dir.join(HISTOGRAM_FILE), &histogram_csv)?;
    write_atomic(&dir.join(PENETRATION_DEVIATION_FILE), &penetration_csv)?;
    write_atomic(&dir.join(SIR_VALIDATION_FILE), &sir_csv)?;

    pretty(&ExperimentSummary {
        output_dir: dir.display().to_string(),
        files: vec![
            ERROR_VS_EPSILON_FILE,
            HISTOGRAM_FILE,
            PENETRATION_DEVIATION_FILE,
            SIR_VALIDATION_FILE,
        ],
        graphs: settings.len(),
        trials: config.trials,
        epsilons: n_eps,
        mechanism: config.mechanism,
    })
}
