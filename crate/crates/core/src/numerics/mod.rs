//! Special functions, truncated distributions, and the seeded RNG contract.

mod rng;
mod special;
mod trunc_gauss;
mod trunc_laplace;

pub use rng::{derive_stream, SeededRng};
pub use special::{
    erf, erfc, lower_incomplete_gamma, normal_mass, normal_quantile, std_normal_cdf,
    std_normal_pdf,
};
pub use trunc_gauss::TruncGaussParams;
pub use trunc_laplace::TruncLaplaceParams;
