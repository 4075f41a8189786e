//! Dense linear algebra, Gaussian quadrature, random streams and stable sums.

pub mod linalg;
pub mod matrix;
pub mod quadrature;
pub mod rng;
pub mod sum;

pub use linalg::{pinv, solve_spd, svd, sym_eigen, Cholesky, Svd, SymEigen};
pub use matrix::{dot, norm2, DenseMatrix};
pub use quadrature::{gh_expect, normal_moment, QuadratureRule, DEFAULT_ORDER};
pub use rng::{derive_stream, hash_seed, SeedStream};
pub use sum::{mean, mean_stderr, pairwise_sum};
