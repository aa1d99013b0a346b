//! `r0dp`: differentially private release of the basic reproduction number
//! of a weighted epidemic network, with analytic accuracy bounds and an
//! epidemic simulator for validating them.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use r0dp::epidemic::EpidemicKind;
use r0dp::mechanisms::AllocationMode;
use r0dp_cli::{
    cmd_bounds, cmd_experiment, cmd_gen_graph, cmd_release, cmd_simulate,
    cmd_validate_penetration, BoundsArgs, CliError, ExperimentConfig, GenGraphArgs,
    MechanismChoice, ReleaseArgs, SimulateArgs, ValidatePenetrationArgs,
    ERROR_VS_EPSILON_HEADER, HISTOGRAM_HEADER, PENETRATION_DEVIATION_HEADER,
    SIR_VALIDATION_HEADER, VALIDATE_PENETRATION_HEADER,
};

#[derive(Parser)]
#[command(
    name = "r0dp",
    version,
    about = "Differentially private release of epidemic reproduction numbers",
    long_about = "Releases the basic reproduction number R0 of a weighted epidemic graph under \
                  epsilon-differential privacy, either by perturbing the edge weights with \
                  bounded Gaussian noise (input mechanism) or by perturbing R0 itself with \
                  bounded Laplace noise (output mechanism), together with the analytic error \
                  bounds that accompany each release.\n\n\
                  Exit codes: 0 ok, 1 I/O error, 2 argument error, 3 infeasible privacy budget, \
                  4 numeric failure. Errors are reported as JSON on stderr.\n\n\
                  All CSV output uses '.' as the decimal separator, LF line endings, and 17 \
                  significant digits for floating-point values."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random connected weighted graph and write it to a file.
    #[command(after_help = "Prints a JSON summary including the spectral radius. The output \
                            format follows the file extension: .csv for the edge-list format, \
                            .json for the dense matrix format. Identical seeds produce \
                            byte-identical files.")]
    GenGraph {
        /// Number of nodes
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Number of off-diagonal undirected edges
        #[arg(long, default_value_t = 100)]
        edges: usize,
        /// Upper end of the weight range (weights are drawn from (0, wmax])
        #[arg(long, default_value_t = 3.0)]
        wmax: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Lower weight bound written to the file
        #[arg(long, default_value_t = 0.0)]
        lower: f64,
        /// Upper weight bound written to the file (defaults to wmax)
        #[arg(long)]
        upper: Option<f64>,
        /// Output path (.csv or .json)
        #[arg(long)]
        out: PathBuf,
    },

    /// Privately release R0 of a graph file and print the release report.
    #[command(after_help = "The report always contains the released value and the calibration \
                            record. The true R0, the penetration bound (a function of the true \
                            R0), and the output-mechanism error moments are sensitive and \
                            appear only with --reveal-true.")]
    Release {
        /// Graph file (.csv or .json)
        #[arg(long)]
        graph: PathBuf,
        /// Privacy budget epsilon
        #[arg(long)]
        epsilon: f64,
        /// Weight-adjacency radius (Frobenius distance between neighbors)
        #[arg(long, default_value_t = 0.01)]
        k: f64,
        /// Mechanism: input, output, or both
        #[arg(long, default_value = "both")]
        mechanism: MechanismChoice,
        /// Budget allocation across entries: uniform-allocation or conservative
        #[arg(long, default_value = "conservative")]
        mode: AllocationMode,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output-mechanism domain cap (defaults to the bound-matrix radius)
        #[arg(long)]
        r0_cap: Option<f64>,
        /// Deviation level for the penetration statement
        #[arg(long)]
        t: Option<f64>,
        /// Include the sensitive true values in the report
        #[arg(long)]
        reveal_true: bool,
    },

    /// Evaluate calibrations and analytic accuracy bounds without releasing.
    Bounds {
        /// Graph file (.csv or .json)
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.01)]
        k: f64,
        #[arg(long, default_value = "both")]
        mechanism: MechanismChoice,
        #[arg(long, default_value = "conservative")]
        mode: AllocationMode,
        /// Evaluate input-mechanism bounds at this noise scale instead of
        /// calibrating one
        #[arg(long)]
        sigma: Option<f64>,
        /// Deviation level for the penetration statement
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        r0_cap: Option<f64>,
    },

    /// Integrate the SIS/SIR dynamics on a graph and report the equilibrium.
    #[command(after_help = "The trajectory CSV columns are: t, then s_0..s_{n-1}, then \
                            x_0..x_{n-1}, then r_0..r_{n-1}.")]
    Simulate {
        /// Graph file (.csv or .json); entries are transmission/recovery ratios
        #[arg(long)]
        graph: PathBuf,
        /// Uniform recovery rate
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Epidemic model: sis or sir
        #[arg(long, default_value = "sir")]
        model: EpidemicKind,
        /// Initial infected fraction at every node
        #[arg(long, default_value_t = 0.01)]
        x0: f64,
        /// Integration step
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Time horizon
        #[arg(long, default_value_t = 2000.0)]
        t_max: f64,
        /// Record every stride-th step into the trajectory
        #[arg(long)]
        stride: Option<usize>,
        /// Write the sampled trajectory to this CSV path
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },

    /// Check min_i s*_i <= 1/R0 on a batch of simulated random graphs.
    #[command(after_help = validate_penetration_help())]
    ValidatePenetration {
        /// Number of graphs
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        edges: usize,
        #[arg(long, default_value_t = 3.0)]
        wmax: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Rescale each graph so its spectral radius equals this value
        #[arg(long)]
        target_r0: Option<f64>,
        /// Epidemic model: sis or sir
        #[arg(long, default_value = "sir")]
        model: EpidemicKind,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Budget for the private radius column
        #[arg(long, default_value_t = 5.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.01)]
        k: f64,
        #[arg(long, default_value = "conservative")]
        mode: AllocationMode,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Run the full privacy/accuracy experiment and write its CSV artifacts.
    #[command(after_help = experiment_help())]
    Experiment {
        /// JSON config file; explicit flags below override its fields
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        base_seed: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        edges: Option<usize>,
        #[arg(long)]
        wmax: Option<f64>,
        /// Run on this graph file instead of generated graphs
        #[arg(long)]
        graph_file: Option<PathBuf>,
        /// Privacy grid, e.g. --epsilons 1,2,5,10
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long)]
        k: Option<f64>,
        /// Privatizations per (graph, epsilon)
        #[arg(long)]
        trials: Option<usize>,
        /// Number of generated graphs
        #[arg(long)]
        graphs: Option<usize>,
        #[arg(long)]
        mechanism: Option<MechanismChoice>,
        /// Generate directed graphs (independent weights per direction)
        #[arg(long)]
        directed: bool,
        #[arg(long)]
        mode: Option<AllocationMode>,
        #[arg(long)]
        r0_cap: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Directory receiving the CSV files
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn validate_penetration_help() -> String {
    format!("CSV columns (fixed order): {VALIDATE_PENETRATION_HEADER}")
}

fn experiment_help() -> String {
    format!(
        "Writes four CSV files with fixed column orders:\n  \
         error_vs_epsilon.csv: {ERROR_VS_EPSILON_HEADER}\n  \
         histogram.csv: {HISTOGRAM_HEADER}\n  \
         penetration_deviation.csv: {PENETRATION_DEVIATION_HEADER}\n  \
         sir_validation.csv: {SIR_VALIDATION_HEADER}\n\
         For input-mechanism rows, analytic_mean_bound is the mean-error upper bound \
         averaged over graphs; for output rows it is the exact expected absolute error. \
         Identical config and base seed produce byte-identical files at any worker count."
    )
}

fn run() -> Result<String, CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenGraph { n, edges, wmax, seed, lower, upper, out } => {
            cmd_gen_graph(&GenGraphArgs { n, edges, w_max: wmax, seed, lower, upper, out })
        }
        Command::Release {
            graph,
            epsilon,
            k,
            mechanism,
            mode,
            seed,
            r0_cap,
            t,
            reveal_true,
        } => cmd_release(&ReleaseArgs {
            graph,
            epsilon,
            k,
            mechanism,
            mode,
            seed,
            r0_cap,
            t,
            reveal_true,
        }),
        Command::Bounds { graph, epsilon, k, mechanism, mode, sigma, t, r0_cap } => {
            cmd_bounds(&BoundsArgs { graph, epsilon, k, mechanism, mode, sigma, t, r0_cap })
        }
        Command::Simulate { graph, gamma, model, x0, step, t_max, stride, trajectory } => {
            cmd_simulate(&SimulateArgs { graph, gamma, model, x0, step, t_max, stride, trajectory })
        }
        Command::ValidatePenetration {
            count,
            n,
            edges,
            wmax,
            seed,
            target_r0,
            model,
            gamma,
            epsilon,
            k,
            mode,
            out,
        } => cmd_validate_penetration(&ValidatePenetrationArgs {
            count,
            n,
            edges,
            w_max: wmax,
            seed,
            target_r0,
            model,
            gamma,
            epsilon,
            k,
            mode,
            out,
        }),
        Command::Experiment {
            config,
            base_seed,
            n,
            edges,
            wmax,
            graph_file,
            epsilons,
            k,
            trials,
            graphs,
            mechanism,
            directed,
            mode,
            r0_cap,
            gamma,
            out_dir,
        } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|source| CliError::Io { path: path.clone(), source })?;
                    serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| {
                        CliError::Core(r0dp::Error::Parse {
                            line: e.line(),
                            msg: format!("{}: {e}", path.display()),
                        })
                    })?
                }
                None => ExperimentConfig::default(),
            };
            if let Some(v) = base_seed {
                cfg.base_seed = v;
            }
            if let Some(v) = n {
                cfg.n = v;
            }
            if let Some(v) = edges {
                cfg.edges = v;
            }
            if let Some(v) = wmax {
                cfg.w_max = v;
            }
            if let Some(v) = graph_file {
                cfg.graph_file = Some(v);
            }
            if let Some(v) = epsilons {
                cfg.epsilons = v;
            }
            if let Some(v) = k {
                cfg.k = v;
            }
            if let Some(v) = trials {
                cfg.trials = v;
            }
            if let Some(v) = graphs {
                cfg.graphs = v;
            }
            if let Some(v) = mechanism {
                cfg.mechanism = v;
            }
            if directed {
                cfg.directed = true;
            }
            if let Some(v) = mode {
                cfg.mode = v;
            }
            if let Some(v) = r0_cap {
                cfg.r0_cap = Some(v);
            }
            if let Some(v) = gamma {
                cfg.gamma = v;
            }
            if let Some(v) = out_dir {
                cfg.output_dir = v;
            }
            cmd_experiment(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
