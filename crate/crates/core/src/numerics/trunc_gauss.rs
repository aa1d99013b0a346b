//! Truncated Gaussian distribution on a half-open interval `(lower, upper]`:
//! moments, moment generating function, and sampling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::rng::SeededRng;
use crate::numerics::special::{normal_mass, normal_quantile, std_normal_cdf, std_normal_pdf};

/// Mass this small switches sampling from inverse-CDF to tail rejection.
const INVERSE_CDF_MIN_MASS: f64 = 1e-12;

/// Parameters of a Gaussian with location `mu` and scale `sigma` conditioned
/// on the interval `(lower, upper]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TruncGaussParams {
    pub mu: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncGaussParams {
    pub fn new(mu: f64, sigma: f64, lower: f64, upper: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::argument("truncated Gaussian: non-finite parameter"));
        }
        if sigma <= 0.0 {
            return Err(Error::argument(format!("truncated Gaussian: sigma={sigma} must be positive")));
        }
        if lower >= upper {
            return Err(Error::argument(format!(
                "truncated Gaussian: lower={lower} must be below upper={upper}"
            )));
        }
        Ok(TruncGaussParams { mu, sigma, lower, upper })
    }

    /// Standardized lower endpoint `(lower − mu)/sigma`.
    pub fn alpha(&self) -> f64 {
        (self.lower - self.mu) / self.sigma
    }

    /// Standardized upper endpoint `(upper − mu)/sigma`.
    pub fn beta(&self) -> f64 {
        (self.upper - self.mu) / self.sigma
    }

    /// Φ(β) − Φ(α), the Gaussian mass of the truncation window.
    pub fn mass(&self) -> f64 {
        normal_mass(self.alpha(), self.beta())
    }

    fn mass_checked(&self) -> Result<f64> {
        let m = self.mass();
        if m <= 0.0 {
            return Err(Error::numeric(format!(
                "truncation window ({}, {}] at mu={} sigma={} has underflowed mass",
                self.lower, self.upper, self.mu, self.sigma
            )));
        }
        Ok(m)
    }

    /// Mean and variance of the truncated distribution.
    ///
    /// With `z = Φ(β) − Φ(α)`:
    /// mean = μ + σ(φ(α) − φ(β))/z and
    /// variance = σ²·(1 − (βφ(β) − αφ(α))/z − ((φ(α) − φ(β))/z)²).
    pub fn moments(&self) -> Result<(f64, f64)> {
        let z = self.mass_checked()?;
        let (a, b) = (self.alpha(), self.beta());
        let (pa, pb) = (std_normal_pdf(a)?, std_normal_pdf(b)?);
        let shift = (pa - pb) / z;
        let mean = self.mu + self.sigma * shift;
        let var = self.sigma * self.sigma * (1.0 - (b * pb - a * pa) / z - shift * shift);
        Ok((mean, var.max(0.0)))
    }

    /// Moment generating function `E[exp(η X)]`.
    ///
    /// Evaluated in log domain as
    /// exp(μη + σ²η²/2) · (Φ(β − ση) − Φ(α − ση)) / (Φ(β) − Φ(α));
    /// extreme `eta` that drives either mass or the exponential out of f64
    /// range is a numeric-domain error.
    pub fn mgf(&self, eta: f64) -> Result<f64> {
        if !eta.is_finite() {
            return Err(Error::argument(format!("mgf: non-finite eta {eta}")));
        }
        let z = self.mass_checked()?;
        let se = self.sigma * eta;
        let shifted = normal_mass(self.alpha() - se, self.beta() - se);
        if shifted <= 0.0 {
            return Err(Error::numeric(format!(
                "mgf: shifted window mass underflowed at eta={eta}"
            )));
        }
        let log_value = self.mu * eta + 0.5 * se * se + shifted.ln() - z.ln();
        if log_value > 709.0 {
            return Err(Error::numeric(format!("mgf: overflow at eta={eta}")));
        }
        Ok(log_value.exp())
    }

    /// One draw, strictly inside `(lower, upper]`.
    ///
    /// Inverse-CDF transform on the window's Gaussian mass; windows whose
    /// mass falls below 1e-12 (deep-tail truncations produced by extreme
    /// noise scales) fall back to one-sided exponential rejection sampling.
    pub fn sample(&self, rng: &mut SeededRng) -> Result<f64> {
        let (a, b) = (self.alpha(), self.beta());
        let z = self.mass();
        let value = if z >= INVERSE_CDF_MIN_MASS {
            // mirror right-tail windows into the left tail, where the CDF
            // values being interpolated are far from 1 and keep precision
            let (lo, flip) = if a + b > 0.0 { (-b, true) } else { (a, false) };
            let u = rng.uniform_left_open();
            let p = std_normal_cdf(lo)? + u * z;
            let q = normal_quantile(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))?;
            let q = if flip { -q } else { q };
            self.mu + self.sigma * q
        } else if a >= 0.0 {
            self.mu + self.sigma * tail_rejection(a, b, rng)?
        } else if b <= 0.0 {
            self.mu - self.sigma * tail_rejection(-b, -a, rng)?
        } else {
            // a < 0 < b cannot underflow: the window contains the mode
            return Err(Error::numeric("truncated Gaussian: inconsistent window mass"));
        };
        // guard against rounding at the window ends; support is (lower, upper]
        let mut value = value.min(self.upper);
        if value <= self.lower {
            value = f64::next_up(self.lower);
        }
        Ok(value)
    }
}

/// Sample a standard normal conditioned on `(a, b]` with `0 ≤ a < b`, by
/// exponential-proposal rejection (efficient arbitrarily deep in the tail).
fn tail_rejection(a: f64, b: f64, rng: &mut SeededRng) -> Result<f64> {
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    for _ in 0..10_000_000u64 {
        let x = a - (rng.uniform_left_open()).ln() / lambda;
        if x > b {
            continue;
        }
        let accept = (-(0.5 * (x - lambda) * (x - lambda))).exp();
        if rng.uniform() <= accept {
            return Ok(x);
        }
    }
    Err(Error::numeric(format!(
        "tail rejection sampling failed to accept on ({a}, {b}]"
    )))
}
