//! Numerical toolkit for nonautonomous linear Young differential equations
//!
//! `dx = A(t) x dt + C(t) x dω(t)` with a driver `ω` of finite p-variation, `1 < p < 2`.
//!
//! The crate is organized bottom-up:
//!
//! * [`path`]: sampled paths, p-variation / Hölder seminorms, greedy partitions, Wiener shift.
//! * [`young`]: Young integration by Riemann–Stieltjes sums and the Young–Loève bound.
//! * [`solver`]: Picard solution on greedy intervals, fundamental and adjoint flows.
//! * [`lyapunov`]: discrete-time Lyapunov spectra, flags, nonregularity and Perron defects.
//! * [`triangular`]: explicit solutions of scalar and upper-triangular systems.
//! * [`stochastic`]: fractional Brownian motion, driver assumptions, ensembles.
//! * [`io`]: CSV path files and JSON reports.

pub mod error;
pub mod io;
pub mod linalg;
pub mod lyapunov;
pub mod path;
pub mod solver;
pub mod stochastic;
pub mod triangular;
pub mod young;

pub use error::{Error, Result};
pub use lyapunov::{
    discrete_spectrum, exponent_bound, nonregularity, ExponentSeries, Method, RegularityReport,
    SpectrumEstimate, SpectrumOptions,
};
pub use path::{GreedyPartition, Interval, SampledPath};
pub use solver::{FlowMatrix, LinearYDE, SolveOptions, SolveReport};
pub use stochastic::{FbmMethod, FbmSpec};
pub use young::YoungParams;
