//! Analytic accuracy evaluators for both release mechanisms: truncation
//! corrections and error bounds for the perturbed-weights path, concentration
//! tails and the reciprocal penetration statement, and exact error moments
//! for the perturbed-scalar path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{WeightBounds, WeightedGraph};
use crate::mechanisms::laplace_normalizer;
use crate::numerics::{lower_incomplete_gamma, normal_mass, std_normal_pdf, TruncLaplaceParams};
use crate::spectral::{operator_norm, spectral_radius};

/// Per-node rate in the concentration exponent v² = t²/(2σ²) − 4.4n.
const NODE_EXPONENT_RATE: f64 = 4.4;

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::argument(format!("noise scale sigma must be positive, got {sigma}")));
    }
    Ok(())
}

fn check_bounds(bounds: &WeightBounds, graph: &WeightedGraph) -> Result<()> {
    bounds
        .validate_for(graph)
        .map_err(|e| Error::argument(format!("bounds do not match the graph: {e}")))
}

/// Truncation statistics of one perturbed entry: `(variance_term, shift_term)`
/// where the entry's truncated Gaussian has variance `σ²(1 − variance_term −
/// shift_term²)` and mean `w + σ·shift_term`.
fn entry_terms(w: f64, lo: f64, hi: f64, sigma: f64) -> Result<(f64, f64)> {
    let alpha = (lo - w) / sigma;
    let beta = (hi - w) / sigma;
    let z = normal_mass(alpha, beta);
    if !(z > 0.0) {
        return Err(Error::numeric(format!(
            "window mass underflowed for weight {w} in ({lo}, {hi}] at sigma {sigma}"
        )));
    }
    let pdf_alpha = std_normal_pdf(alpha)?;
    let pdf_beta = std_normal_pdf(beta)?;
    Ok(((beta * pdf_beta - alpha * pdf_alpha) / z, (pdf_alpha - pdf_beta) / z))
}

/// ξ_e: the summed variance-correction terms of the per-entry truncated
/// Gaussians. Symmetric graphs count each off-diagonal window twice (the
/// mirrored entries move together); directed graphs count every positive
/// entry once. Always in [0, n_w).
pub fn variance_correction(graph: &WeightedGraph, bounds: &WeightBounds, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_bounds(bounds, graph)?;
    let mut acc = 0.0f64;
    for &(i, j) in &graph.privatized_entries() {
        let (lo, hi) = bounds.interval(i, j);
        let (term, _) = entry_terms(graph.weights().get(i, j), lo, hi, sigma)?;
        acc += if graph.symmetric() && i != j { 2.0 * term } else { term };
    }
    Ok(acc)
}

/// Mean and variance bounds on the spectral-radius error of the
/// perturbed-weights release: `(σ√(n_w − ξ_e), σ²(n_w − ξ_e))`.
pub fn input_error_bounds(
    graph: &WeightedGraph,
    bounds: &WeightBounds,
    sigma: f64,
) -> Result<(f64, f64)> {
    let xi_e = variance_correction(graph, bounds, sigma)?;
    let effective = (graph.n_w() as f64 - xi_e).max(0.0);
    Ok((sigma * effective.sqrt(), sigma * sigma * effective))
}

/// ξ_p: Frobenius norm of the entrywise truncation mean shifts,
/// `σ·√Σ((φ(α) − φ(β))/z)²` over every positive entry.
pub fn mean_shift_norm(graph: &WeightedGraph, bounds: &WeightBounds, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_bounds(bounds, graph)?;
    let mut acc = 0.0f64;
    for &(i, j) in &graph.positive_entries() {
        let (lo, hi) = bounds.interval(i, j);
        let (_, shift) = entry_terms(graph.weights().get(i, j), lo, hi, sigma)?;
        acc += shift * shift;
    }
    Ok(sigma * acc.sqrt())
}

/// Published penetration statement: with probability at least `confidence`,
/// the reciprocal reproduction numbers differ by less than `threshold`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PenetrationBound {
    pub threshold: f64,
    pub confidence: f64,
    /// Set when the concentration exponent is nonpositive, so the stated
    /// confidence carries no information at this (σ, t, n).
    pub vacuous: bool,
}

/// Evaluates the reciprocal-deviation bound `|1/R̃0 − 1/R0| < threshold` at
/// deviation level `t`, with confidence `1 − 4e^{−v²}`, v² = t²/(2σ²) − 4.4n.
/// Undirected graphs only; requires `0 < t < ρ(W) − ξ_p`.
pub fn penetration_bound_eval(
    graph: &WeightedGraph,
    bounds: &WeightBounds,
    sigma: f64,
    t: f64,
) -> Result<PenetrationBound> {
    check_sigma(sigma)?;
    check_bounds(bounds, graph)?;
    if !graph.symmetric() {
        return Err(Error::argument(
            "the reciprocal concentration statement applies to undirected graphs only",
        ));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::argument(format!("deviation level t must be positive, got {t}")));
    }
    let r0 = spectral_radius(graph.weights())?.value;
    let xi_p = mean_shift_norm(graph, bounds, sigma)?;
    let a = t + xi_p;
    if a >= r0 {
        return Err(Error::argument(format!(
            "deviation t={t} plus mean-shift norm {xi_p} reaches the spectral radius {r0}; \
             the reciprocal bound needs t + ξ_p < ρ(W)"
        )));
    }
    let u_plus = 1.0 / r0 - 1.0 / (r0 + a);
    let u_minus = 1.0 / (r0 - a) - 1.0 / r0;
    let threshold = u_plus.max(u_minus);
    let v2 = t * t / (2.0 * sigma * sigma) - NODE_EXPONENT_RATE * graph.n() as f64;
    let confidence = (1.0 - 4.0 * (-v2).exp()).max(0.0);
    Ok(PenetrationBound { threshold, confidence, vacuous: v2 <= 0.0 })
}

/// Deviation level at which the penetration confidence is exactly 0.92:
/// `σ√(2(4.4n + ln 50))`.
pub fn suggest_penetration_t(sigma: f64, n: usize) -> f64 {
    sigma * (2.0 * (NODE_EXPONENT_RATE * n as f64 + 50f64.ln())).sqrt()
}

/// Tail statement for the perturbed-weights release: the radius error stays
/// below `deterministic_term + t` except with probability `probability`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailBound {
    /// σ√n_w, the deterministic part of the error split.
    pub deterministic_term: f64,
    pub probability: f64,
    pub vacuous: bool,
}

/// ln(2·9^{2n}), the covering constant of the tail bound in log form.
pub fn log_tail_constant(n: usize) -> f64 {
    std::f64::consts::LN_2 + 2.0 * n as f64 * 9.0f64.ln()
}

/// Evaluates `P[r > t] ≤ min(1, 2·9^{2n}·e^{−t²/(2σ²)})` for the random part
/// of the error split, entirely in log domain.
pub fn input_tail_bound(n: usize, n_w: usize, sigma: f64, t: f64) -> Result<TailBound> {
    check_sigma(sigma)?;
    if n == 0 {
        return Err(Error::argument("tail bound needs at least one node"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::argument(format!("deviation level t must be nonnegative, got {t}")));
    }
    let log_p = log_tail_constant(n) - t * t / (2.0 * sigma * sigma);
    let probability = log_p.exp().min(1.0);
    Ok(TailBound {
        deterministic_term: sigma * (n_w as f64).sqrt(),
        probability,
        vacuous: probability >= 1.0,
    })
}

/// Exact mean absolute error and mean squared error of the perturbed-scalar
/// release around the true value `r0`, in closed form.
pub fn output_error_moments(r0: f64, b: f64, r0_cap: f64) -> Result<(f64, f64)> {
    let z = laplace_normalizer(r0, b, r0_cap)?;
    if z <= 0.0 {
        return Err(Error::numeric("truncated Laplace normalizer underflowed"));
    }
    let l = -r0 / b;
    let u = -(r0_cap - r0) / b;
    let mae = b * (2.0 + (l - 1.0) * l.exp() + (u - 1.0) * u.exp()) / (2.0 * z);
    let mse =
        b * b * (lower_incomplete_gamma(3.0, -l)? + lower_incomplete_gamma(3.0, -u)?) / (2.0 * z);
    Ok((mae, mse))
}

/// Probability that the released value lands in `[lo, hi]`, for nested
/// reporting intervals inside `[0, r0_cap]`.
pub fn output_interval_mass(r0: f64, b: f64, r0_cap: f64, lo: f64, hi: f64) -> Result<f64> {
    TruncLaplaceParams::new(r0, b, 0.0, r0_cap)?.interval_mass(lo, hi)
}

/// Error bounds for directed graphs, `(mean_bound, mse_bound, kappa)`:
/// mean ≤ σΞ + κ and mean-square ≤ (σΞ + κ)², with Ξ = √(n_w − ξ_e) summed
/// over all positive entries and κ = (‖W‖₂ − ρ(W))⁺ the non-normality
/// residual. Symmetric graphs give κ = 0 and reduce to `input_error_bounds`.
pub fn directed_error_bounds(
    graph: &WeightedGraph,
    bounds: &WeightBounds,
    sigma: f64,
) -> Result<(f64, f64, f64)> {
    check_sigma(sigma)?;
    check_bounds(bounds, graph)?;
    let mut xi_e = 0.0f64;
    for &(i, j) in &graph.positive_entries() {
        let (lo, hi) = bounds.interval(i, j);
        let (term, _) = entry_terms(graph.weights().get(i, j), lo, hi, sigma)?;
        xi_e += term;
    }
    let effective = (graph.n_w() as f64 - xi_e).max(0.0);
    let kappa =
        (operator_norm(graph.weights())?.value - spectral_radius(graph.weights())?.value).max(0.0);
    let mean_bound = sigma * effective.sqrt() + kappa;
    Ok((mean_bound, mean_bound * mean_bound, kappa))
}

/// Bundle of every published accuracy statement for one calibrated
/// perturbed-weights release.
#[derive(Clone, Debug, Serialize)]
pub struct AccuracyReport {
    pub n: usize,
    pub n_w: usize,
    pub sigma: f64,
    pub xi_e: f64,
    pub mean_bound: f64,
    pub var_bound: f64,
    pub xi_p: f64,
    /// Non-normality residual; zero for undirected graphs.
    pub kappa: f64,
    pub log_tail_constant: f64,
    pub penetration: Option<PenetrationBound>,
}

impl AccuracyReport {
    pub const CSV_HEADER: &'static str = "n,n_w,sigma,xi_e,mean_bound,var_bound,xi_p,kappa,\
         log_tail_constant,penetration_threshold,penetration_confidence,penetration_vacuous";

    /// One CSV row in the `CSV_HEADER` column order; penetration columns are
    /// left empty when no deviation level was evaluated.
    pub fn csv_row(&self) -> String {
        let f = |v: f64| format!("{v:.16e}");
        let (pt, pc, pv) = match &self.penetration {
            Some(p) => (f(p.threshold), f(p.confidence), p.vacuous.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{pt},{pc},{pv}",
            self.n,
            self.n_w,
            f(self.sigma),
            f(self.xi_e),
            f(self.mean_bound),
            f(self.var_bound),
            f(self.xi_p),
            f(self.kappa),
            f(self.log_tail_constant),
        )
    }
}

/// Evaluates the full accuracy report at noise scale `sigma`, including the
/// penetration statement at deviation level `t` when one is given.
pub fn evaluate_accuracy(
    graph: &WeightedGraph,
    bounds: &WeightBounds,
    sigma: f64,
    t: Option<f64>,
) -> Result<AccuracyReport> {
    let xi_e = variance_correction(graph, bounds, sigma)?;
    let xi_p = mean_shift_norm(graph, bounds, sigma)?;
    let (mean_bound, var_bound, kappa) = if graph.symmetric() {
        let (mean, var) = input_error_bounds(graph, bounds, sigma)?;
        (mean, var, 0.0)
    } else {
        directed_error_bounds(graph, bounds, sigma)?
    };
    let penetration = match t {
        Some(t) => Some(penetration_bound_eval(graph, bounds, sigma, t)?),
        None => None,
    };
    Ok(AccuracyReport {
        n: graph.n(),
        n_w: graph.n_w(),
        sigma,
        xi_e,
        mean_bound,
        var_bound,
        xi_p,
        kappa,
        log_tail_constant: log_tail_constant(graph.n()),
        penetration,
    })
}
