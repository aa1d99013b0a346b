//! Truncated Laplace distribution on `(lower, upper]`: interval probabilities
//! and inverse-CDF sampling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::rng::SeededRng;

/// Parameters of a Laplace distribution with location `mu` and scale `b`
/// conditioned on the interval `(lower, upper]`. The location must lie in
/// the interval.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TruncLaplaceParams {
    pub mu: f64,
    pub b: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncLaplaceParams {
    pub fn new(mu: f64, b: f64, lower: f64, upper: f64) -> Result<Self> {
        if !mu.is_finite() || !b.is_finite() || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::argument("truncated Laplace: non-finite parameter"));
        }
        if b <= 0.0 {
            return Err(Error::argument(format!("truncated Laplace: scale b={b} must be positive")));
        }
        if lower >= upper {
            return Err(Error::argument(format!(
                "truncated Laplace: lower={lower} must be below upper={upper}"
            )));
        }
        if mu <= lower || mu > upper {
            return Err(Error::argument(format!(
                "truncated Laplace: location {mu} outside ({lower}, {upper}]"
            )));
        }
        Ok(TruncLaplaceParams { mu, b, lower, upper })
    }

    /// Untruncated Laplace CDF mass of `[lo, hi]`, evaluated with `expm1`
    /// so that thin slices and huge scales keep full relative precision.
    fn cdf_diff(&self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo <= hi);
        if hi <= self.mu {
            -0.5 * ((hi - self.mu) / self.b).exp() * f64::exp_m1((lo - hi) / self.b)
        } else if lo >= self.mu {
            -0.5 * ((self.mu - lo) / self.b).exp() * f64::exp_m1((lo - hi) / self.b)
        } else {
            -0.5 * (f64::exp_m1((lo - self.mu) / self.b) + f64::exp_m1((self.mu - hi) / self.b))
        }
    }

    /// Laplace mass of the truncation window (the normalizing constant).
    pub fn mass(&self) -> f64 {
        self.cdf_diff(self.lower, self.upper)
    }

    /// Probability that a draw lands in `[lo, hi]`, which must sit inside
    /// the truncation window.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(self.lower <= lo && lo < hi && hi <= self.upper) {
            return Err(Error::argument(format!(
                "interval [{lo}, {hi}] not inside ({}, {}]",
                self.lower, self.upper
            )));
        }
        let z = self.mass();
        if z <= 0.0 {
            return Err(Error::numeric("truncated Laplace: window mass underflowed"));
        }
        Ok((self.cdf_diff(lo, hi) / z).min(1.0))
    }

    /// One draw, strictly inside `(lower, upper]`, by inverting the CDF of
    /// the window. Each side of the location is inverted against its own
    /// endpoint so neither tail loses precision.
    pub fn sample(&self, rng: &mut SeededRng) -> Result<f64> {
        let z = self.mass();
        if z <= 0.0 {
            return Err(Error::numeric("truncated Laplace: window mass underflowed"));
        }
        let left = self.cdf_diff(self.lower, self.mu);
        let m = rng.uniform_left_open() * z;
        let value = if m <= left {
            self.mu + self.b * (((self.lower - self.mu) / self.b).exp() + 2.0 * m).ln()
        } else {
            self.mu - self.b * (((self.mu - self.upper) / self.b).exp() + 2.0 * (z - m)).ln()
        };
        let mut value = value.min(self.upper);
        if value <= self.lower {
            value = f64::next_up(self.lower);
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use r0dp_testkit::quadrature;

    #[test]
    fn invalid_params_rejected() {
        assert!(TruncLaplaceParams::new(1.0, 0.0, 0.0, 4.0).is_err());
        assert!(TruncLaplaceParams::new(1.0, -0.5, 0.0, 4.0).is_err());
        assert!(TruncLaplaceParams::new(1.0, 0.5, 4.0, 0.0).is_err());
        assert!(TruncLaplaceParams::new(0.0, 0.5, 0.0, 4.0).is_err(), "location at open lower end");
        assert!(TruncLaplaceParams::new(5.0, 0.5, 0.0, 4.0).is_err());
        assert!(TruncLaplaceParams::new(f64::INFINITY, 0.5, 0.0, 4.0).is_err());
        assert!(TruncLaplaceParams::new(4.0, 0.5, 0.0, 4.0).is_ok(), "closed upper end");
    }

    #[test]
    fn mass_matches_closed_form() {
        let p = TruncLaplaceParams::new(1.5, 0.7, 0.0, 4.0).unwrap();
        let direct = 1.0 - 0.5 * ((-1.5f64 / 0.7).exp() + (-(4.0f64 - 1.5) / 0.7).exp());
        assert!((p.mass() - direct).abs() < 1e-15);
    }

    #[test]
    fn interval_mass_full_window_is_one() {
        let p = TruncLaplaceParams::new(2.7, 1.3, 0.0, 4.0).unwrap();
        assert_eq!(p.interval_mass(0.0, 4.0).unwrap(), 1.0);
    }

    #[test]
    fn interval_mass_nested_is_monotone() {
        let p = TruncLaplaceParams::new(1.2, 0.5, 0.0, 4.0).unwrap();
        let mut prev = 0.0;
        for k in 1..=30 {
            let half = 0.1 * k as f64;
            let m = p.interval_mass((1.2 - half).max(0.0), (1.2 + half).min(4.0)).unwrap();
            assert!(m >= prev);
            prev = m;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_mass_matches_quadrature() {
        let p = TruncLaplaceParams::new(1.1, 0.6, 0.0, 4.0).unwrap();
        let z = p.mass();
        let density = move |x: f64| (-((x - 1.1f64).abs()) / 0.6).exp() / (2.0 * 0.6 * z);
        for (lo, hi) in [(0.0, 0.9), (0.5, 1.7), (1.1, 4.0), (3.0, 3.2)] {
            let oracle = quadrature(density, lo, hi, 1e-14);
            let m = p.interval_mass(lo, hi).unwrap();
            assert!((m - oracle).abs() < 1e-10, "[{lo},{hi}]: {m} vs {oracle}");
        }
        assert!(p.interval_mass(-0.1, 1.0).is_err());
        assert!(p.interval_mass(1.0, 4.1).is_err());
        assert!(p.interval_mass(2.0, 2.0).is_err());
    }

    #[test]
    fn draws_stay_in_support() {
        let p = TruncLaplaceParams::new(0.2, 2.5, 0.0, 4.0).unwrap();
        let mut rng = SeededRng::from_seed(31);
        for _ in 0..50_000 {
            let x = p.sample(&mut rng).unwrap();
            assert!(x > 0.0 && x <= 4.0);
        }
    }

    #[test]
    fn centered_location_gives_symmetric_histogram() {
        let p = TruncLaplaceParams::new(2.0, 0.8, 0.0, 4.0).unwrap();
        let mut rng = SeededRng::from_seed(47);
        let n = 200_000usize;
        let draws: Vec<f64> = (0..n).map(|_| p.sample(&mut rng).unwrap()).collect();
        // empirical CDF at mirrored points must satisfy F(2−t) + F(2+t) = 1
        for &t in &[0.25, 0.5, 1.0, 1.5, 1.9] {
            let below = draws.iter().filter(|&&x| x <= 2.0 - t).count() as f64 / n as f64;
            let above = draws.iter().filter(|&&x| x <= 2.0 + t).count() as f64 / n as f64;
            let defect = (below + above - 1.0).abs();
            assert!(defect < 0.006, "t={t}: asymmetry {defect}");
        }
    }

    #[test]
    fn empirical_interval_mass_matches_analytic() {
        let p = TruncLaplaceParams::new(1.4, 0.9, 0.0, 4.0).unwrap();
        let (lo, hi) = (0.7, 2.5);
        let analytic = p.interval_mass(lo, hi).unwrap();
        let mut rng = SeededRng::from_seed(86);
        let n = 1_000_000usize;
        let hits = (0..n)
            .filter(|_| {
                let x = p.sample(&mut rng).unwrap();
                (lo..=hi).contains(&x)
            })
            .count();
        let empirical = hits as f64 / n as f64;
        let rel = (empirical - analytic).abs() / analytic;
        assert!(rel < 0.005, "empirical {empirical} vs analytic {analytic} (rel {rel})");
    }

    #[test]
    fn huge_scale_keeps_precision() {
        // b far above the window width: density is nearly flat, mass tiny
        let p = TruncLaplaceParams::new(2.0, 1e9, 0.0, 4.0).unwrap();
        let flat = 4.0 / (2.0 * 1e9);
        assert!((p.mass() - flat).abs() / flat < 1e-6);
        let m = p.interval_mass(1.0, 3.0).unwrap();
        assert!((m - 0.5).abs() < 1e-6);
        let mut rng = SeededRng::from_seed(3);
        for _ in 0..5_000 {
            let x = p.sample(&mut rng).unwrap();
            assert!(x > 0.0 && x <= 4.0);
        }
    }

    #[test]
    fn fixed_seed_reproduces_sequence() {
        let p = TruncLaplaceParams::new(1.0, 0.4, 0.0, 4.0).unwrap();
        let seq = |seed| {
            let mut rng = SeededRng::from_seed(seed);
            (0..32).map(|_| p.sample(&mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(seq(9), seq(9));
        assert_ne!(seq(9), seq(10));
    }
}
