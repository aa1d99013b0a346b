//! Privacy calibration and the two release mechanisms: bounded Gaussian
//! perturbation of the weights (input side) and bounded Laplace perturbation
//! of the released reproduction number (output side).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{WeightBounds, WeightedGraph};
use crate::matrix::Matrix;
use crate::numerics::{normal_mass, SeededRng, TruncGaussParams, TruncLaplaceParams};
use crate::spectral::spectral_radius;

const MAX_FIXED_POINT_ITERATIONS: usize = 1_000;
const MAX_BRACKET_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 500;

/// Privacy budget: `epsilon` and the weight-adjacency radius `k`, the
/// Frobenius distance within which two graphs count as neighbors.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub k: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, k: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::argument(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::argument(format!("adjacency radius k must be positive, got {k}")));
        }
        Ok(PrivacyBudget { epsilon, k })
    }
}

/// How the adjacency budget k is allocated across entries when bounding the
/// normalizer ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationMode {
    /// Every privatized entry gets `k/√m`, splitting the squared budget
    /// evenly over the m entries.
    UniformAllocation,
    /// Every privatized entry gets the worst single-entry shift
    /// `min(k, w̄_ij − w̲_ij)`, over-counting the ratio for a larger, still
    /// private noise scale.
    Conservative,
}

impl std::str::FromStr for AllocationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-allocation" | "uniform" => Ok(AllocationMode::UniformAllocation),
            "conservative" => Ok(AllocationMode::Conservative),
            other => Err(Error::argument(format!(
                "unknown allocation mode {other:?} (expected uniform-allocation or conservative)"
            ))),
        }
    }
}

impl std::fmt::Display for AllocationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AllocationMode::UniformAllocation => f.write_str("uniform-allocation"),
            AllocationMode::Conservative => f.write_str("conservative"),
        }
    }
}

/// Result of solving the Gaussian noise-scale inequality: the audit record
/// for one input-perturbation release.
#[derive(Clone, Debug, Serialize)]
pub struct GaussianCalibration {
    pub sigma: f64,
    /// Per-entry shift allocation, supported on the privatized entries.
    pub c: Matrix,
    /// Worst-case normalizer ratio at the returned sigma.
    pub delta_c: f64,
    /// √Σ(w̄_ij − w̲_ij)² over privatized entries.
    pub s_term: f64,
    pub mode: AllocationMode,
    pub epsilon: f64,
    pub k: f64,
    pub iterations: usize,
}

/// Result of solving the Laplace noise-scale inequality: the audit record
/// for one output-perturbation release.
#[derive(Clone, Debug, Serialize)]
pub struct LaplaceCalibration {
    /// L1 sensitivity of the reproduction number, bounded by k.
    pub delta_r: f64,
    pub r0_cap: f64,
    pub b: f64,
    /// Worst-case normalizer ratio at the returned b.
    pub delta_c_b: f64,
    pub epsilon: f64,
    pub iterations: usize,
}

/// Log of the product, over privatized entries, of the worst-case truncated
/// Gaussian normalizer ratios under per-entry shifts `c_ij`.
fn log_delta_c_gaussian(
    entries: &[(usize, usize)],
    bounds: &WeightBounds,
    c: &Matrix,
    sigma: f64,
) -> Result<f64> {
    let mut acc = 0.0f64;
    for &(i, j) in entries {
        let (lo, hi) = bounds.interval(i, j);
        let d = hi - lo;
        let shift = c.get(i, j);
        if shift <= 0.0 || shift >= d {
            // a shift of 0 or of the full width leaves the normalizer
            // unchanged (the window mass is symmetric in the center)
            continue;
        }
        let base = normal_mass(0.0, d / sigma);
        let shifted = normal_mass(-shift / sigma, (d - shift) / sigma);
        if base <= 0.0 || shifted <= 0.0 {
            return Err(Error::numeric(format!(
                "normalizer mass underflowed for entry ({i},{j}) at sigma={sigma}"
            )));
        }
        acc += shifted.ln() - base.ln();
    }
    Ok(acc.max(0.0))
}

/// Solves `x = invert(epsilon − log ΔC(x))` where `invert(denom)` is
/// `√(target/denom)` for the Gaussian scale and `target/denom` for the
/// Laplace scale. Plain fixed-point iteration from the ΔC=1 closed form is
/// tried first; if an iterate lands where the budget cannot cover the log
/// term, or the iteration fails to settle, the root of
/// `h(x) = xᵖ(ε − log ΔC(x)) − target` is bracketed and bisected instead
/// (h is negative at the closed-form start and positive for large x).
/// The returned x is certified to satisfy `h(x) ≥ 0`, never undershooting
/// the private noise scale.
fn solve_noise_scale(
    target: f64,
    epsilon: f64,
    sqrt_form: bool,
    log_delta_c: &dyn Fn(f64) -> Result<f64>,
) -> Result<(f64, usize)> {
    let invert = |denom: f64| {
        if sqrt_form {
            (target / denom).sqrt()
        } else {
            target / denom
        }
    };
    let h = |x: f64| -> Result<f64> {
        let ldc = log_delta_c(x)?;
        let pow = if sqrt_form { x * x } else { x };
        Ok(pow * (epsilon - ldc) - target)
    };
    let x0 = invert(epsilon);
    let mut iterations = 0usize;
    let mut x = x0;
    let mut settled = false;
    for _ in 0..MAX_FIXED_POINT_ITERATIONS {
        iterations += 1;
        let ldc = log_delta_c(x)?;
        if ldc >= epsilon {
            break;
        }
        let next = invert(epsilon - ldc);
        let done = (next - x).abs() <= 1e-12 * next;
        x = next;
        if done {
            settled = true;
            break;
        }
    }

    if !settled {
        let mut lo = x0;
        let mut hi = x0;
        let mut bracketed = false;
        for _ in 0..MAX_BRACKET_DOUBLINGS {
            hi *= 2.0;
            iterations += 1;
            if h(hi)? > 0.0 {
                bracketed = true;
                break;
            }
            lo = hi;
        }
        if !bracketed {
            return Err(Error::InfeasibleBudget(format!(
                "epsilon {epsilon} cannot cover the normalizer log term at any noise scale"
            )));
        }
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            iterations += 1;
            if h(mid)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        x = hi;
    }

    for _ in 0..64 {
        if h(x)? >= 0.0 {
            break;
        }
        x *= 1.0 + 1e-13;
    }
    let residual = h(x)?;
    if !(0.0..=1e-9 * target).contains(&residual) {
        return Err(Error::Convergence { iterations, residual: residual / target });
    }
    Ok((x, iterations))
}

/// Builds the per-entry shift allocation for the requested mode.
fn allocation(
    n: usize,
    entries: &[(usize, usize)],
    bounds: &WeightBounds,
    k: f64,
    mode: AllocationMode,
) -> Matrix {
    let mut c = Matrix::zeros(n, n);
    match mode {
        AllocationMode::UniformAllocation => {
            let per_entry = k / (entries.len() as f64).sqrt();
            for &(i, j) in entries {
                c.set(i, j, per_entry);
            }
        }
        AllocationMode::Conservative => {
            for &(i, j) in entries {
                let (lo, hi) = bounds.interval(i, j);
                c.set(i, j, k.min(hi - lo));
            }
        }
    }
    c
}

/// Solves for the smallest sigma satisfying
/// `σ² ≥ k(k/2 + S)/(ε − log ΔC(σ, c))` with S = √Σ(w̄−w̲)² over the
/// privatized entries. Only the positivity pattern of the graph and the
/// public bound intervals enter; the sensitive weights are never read.
pub fn calibrate_gaussian(
    graph: &WeightedGraph,
    bounds: &WeightBounds,
    budget: PrivacyBudget,
    mode: AllocationMode,
) -> Result<GaussianCalibration> {
    bounds
        .validate_for(graph)
        .map_err(|e| Error::argument(format!("bounds do not match the graph: {e}")))?;
    let entries = graph.privatized_entries();
    if entries.is_empty() {
        return Err(Error::argument("graph has no positive weights to privatize"));
    }
    let s_term = entries
        .iter()
        .map(|&(i, j)| {
            let (lo, hi) = bounds.interval(i, j);
            (hi - lo) * (hi - lo)
        })
        .sum::<f64>()
        .sqrt();
    let target = budget.k * (budget.k / 2.0 + s_term);
    let c = allocation(graph.n(), &entries, bounds, budget.k, mode);
    let ldc = |sigma: f64| log_delta_c_gaussian(&entries, bounds, &c, sigma);
    let (sigma, iterations) = solve_noise_scale(target, budget.epsilon, true, &ldc)?;
    let delta_c = ldc(sigma)?.exp();
    Ok(GaussianCalibration {
        sigma,
        c,
        delta_c,
        s_term,
        mode,
        epsilon: budget.epsilon,
        k: budget.k,
        iterations,
    })
}

/// Replaces every positive weight by a truncated Gaussian draw centered on
/// it, leaving zero entries untouched. Symmetric graphs are perturbed on and
/// above the diagonal and mirrored; directed graphs get independent noise on
/// every positive entry. Draws happen in row-major entry order, so a fixed
/// generator yields a fixed output.
pub fn input_perturb(
    graph: &WeightedGraph,
    bounds: &WeightBounds,
    calib: &GaussianCalibration,
    rng: &mut SeededRng,
) -> Result<WeightedGraph> {
    bounds
        .validate_for(graph)
        .map_err(|e| Error::argument(format!("bounds do not match the graph: {e}")))?;
    let n = graph.n();
    if calib.c.rows() != n || calib.c.cols() != n {
        return Err(Error::argument(format!(
            "calibration allocation is {}x{} but the graph has {n} nodes",
            calib.c.rows(),
            calib.c.cols()
        )));
    }
    let entries = graph.privatized_entries();
    if entries.iter().any(|&(i, j)| calib.c.get(i, j) <= 0.0) {
        return Err(Error::argument(
            "calibration was computed for a different positivity pattern",
        ));
    }
    let mut weights = graph.weights().clone();
    for (i, j) in entries {
        let (lo, hi) = bounds.interval(i, j);
        let params = TruncGaussParams::new(graph.weights().get(i, j), calib.sigma, lo, hi)?;
        let draw = params.sample(rng)?;
        weights.set(i, j, draw);
        if graph.symmetric() {
            weights.set(j, i, draw);
        }
    }
    graph.with_weights(weights)
}

/// Normalizing constant of the Laplace kernel with location `r0` and scale
/// `b` truncated to `(0, r0_cap]`.
pub fn laplace_normalizer(r0: f64, b: f64, r0_cap: f64) -> Result<f64> {
    if !(r0_cap.is_finite() && r0_cap > 0.0) {
        return Err(Error::argument(format!("r0_cap must be positive, got {r0_cap}")));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::argument(format!("scale b must be positive, got {b}")));
    }
    if !(r0.is_finite() && r0 > 0.0 && r0 <= r0_cap) {
        return Err(Error::argument(format!("r0 {r0} outside (0, {r0_cap}]")));
    }
    Ok(-0.5 * (f64::exp_m1(-r0 / b) + f64::exp_m1(-(r0_cap - r0) / b)))
}

/// Worst-case ratio of Laplace normalizers between locations k and the lower
/// domain end, the multiplicative budget overhead of truncation.
pub fn laplace_delta_c(b: f64, k: f64, r0_cap: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0 && k < r0_cap) {
        return Err(Error::argument(format!("need 0 < k < r0_cap, got k={k}, r0_cap={r0_cap}")));
    }
    let numerator = laplace_normalizer(k, b, r0_cap)?;
    let denominator = -0.5 * f64::exp_m1(-r0_cap / b);
    if denominator <= 0.0 {
        return Err(Error::numeric("Laplace normalizer underflowed"));
    }
    Ok((numerator / denominator).max(1.0))
}

/// Solves for the smallest b satisfying `b ≥ k/(ε − log ΔC(b))` over the
/// output domain `(0, r0_cap]`.
pub fn calibrate_laplace(budget: PrivacyBudget, r0_cap: f64) -> Result<LaplaceCalibration> {
    if !(r0_cap.is_finite() && r0_cap > 0.0) {
        return Err(Error::argument(format!("r0_cap must be positive, got {r0_cap}")));
    }
    if budget.k >= r0_cap {
        return Err(Error::argument(format!(
            "adjacency radius {} must be below the domain cap {r0_cap}",
            budget.k
        )));
    }
    let ldc = |b: f64| laplace_delta_c(b, budget.k, r0_cap).map(f64::ln);
    let (b, iterations) = solve_noise_scale(budget.k, budget.epsilon, false, &ldc)?;
    let delta_c_b = ldc(b)?.exp();
    Ok(LaplaceCalibration {
        delta_r: budget.k,
        r0_cap,
        b,
        delta_c_b,
        epsilon: budget.epsilon,
        iterations,
    })
}

/// One private release of the reproduction number: a truncated Laplace draw
/// centered on the true value over `(0, r0_cap]`.
pub fn output_perturb(r0: f64, calib: &LaplaceCalibration, rng: &mut SeededRng) -> Result<f64> {
    let params = TruncLaplaceParams::new(r0, calib.b, 0.0, calib.r0_cap)?;
    params.sample(rng)
}

/// Public domain cap for the reproduction number: the spectral radius of the
/// upper-bound matrix, which dominates the radius of any weight matrix lying
/// entrywise inside the bounds.
pub fn r0_cap_from_bounds(bounds: &WeightBounds) -> Result<f64> {
    Ok(spectral_radius(bounds.upper())?.value)
}
