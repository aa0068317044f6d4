//! Divergence-free H(div) discontinuous Galerkin solver for 2D incompressible
//! Navier-Stokes in a periodic channel, with the Kelvin-Helmholtz benchmark
//! harness built around it.

pub mod assembly;
pub mod compare;
pub mod config;
pub mod driver;
pub mod kh;
pub mod linalg;
pub mod mesh;
pub mod output;
pub mod perturb;
pub mod poly;
pub mod qoi;
pub mod selforg;
pub mod space;
pub mod spectral;
pub mod system;
pub mod timestep;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("linear solver: {0}")]
    Solver(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("blow-up detected: {0}")]
    BlowUp(String),
    #[error("undefined quantity: {0}")]
    Undefined(String),
    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
}
