//! Experiment configuration: TOML schema, validation and construction of library objects.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use ylyap::lyapunov::Method;
use ylyap::path::uniform_grid;
use ylyap::stochastic::{self, AssumptionThresholds, CHOLESKY_MAX_POINTS};
use ylyap::{FbmMethod, FbmSpec, Interval, LinearYDE, SampledPath, SolveOptions, SpectrumOptions, YoungParams};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Seed of the fBm driver (and of ensemble member seeds).
    #[serde(default)]
    pub seed: u64,
    pub system: SystemSpec,
    pub driver: DriverSpec,
    pub numerics: Numerics,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub integrate: IntegrateSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub regularity: RegularitySection,
    #[serde(default)]
    pub assumptions: AssumptionsSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dim: usize,
    #[serde(default)]
    pub triangular: bool,
    pub a: Coefficient,
    pub c: Coefficient,
}

/// A `d × d` coefficient path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Coefficient {
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    /// `constant + amplitude · sin(frequency · t + phase)`, entrywise.
    Periodic {
        constant: Vec<Vec<f64>>,
        amplitude: Vec<Vec<f64>>,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// CSV file `t,v_1..v_{d²}`, row-major entries.
    Csv {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DriverSpec {
    Fbm {
        hurst: f64,
        dt: f64,
        horizon: f64,
        #[serde(default = "default_fbm_method")]
        method: FbmMethod,
    },
    /// `ω(t) = t` on a uniform grid.
    Linear {
        dt: f64,
        horizon: f64,
    },
    /// CSV file `t,v_1`.
    Csv {
        path: PathBuf,
    },
}

fn default_fbm_method() -> FbmMethod {
    FbmMethod::Circulant
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub p: f64,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Nodes per unit time for periodic coefficients.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    pub horizon: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
}

fn default_tol() -> f64 {
    1e-12
}
fn default_max_iterations() -> usize {
    200
}
fn default_grid() -> usize {
    64
}
fn default_h() -> f64 {
    1.0
}
fn default_method() -> Method {
    Method::Qr
}
fn default_tail() -> f64 {
    0.2
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    /// Initial value; defaults to the first unit vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Defaults to `[t0, t0 + horizon]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Largest accepted `|λ_k - ā_kk|`.
    #[serde(default = "default_agreement")]
    pub tolerance: f64,
    #[serde(default = "default_exactness")]
    pub exactness_tol: f64,
    /// Also write the fundamental matrix (needs coefficients and driver on `[0, t_max]`).
    #[serde(default)]
    pub fundamental: bool,
}

fn default_agreement() -> f64 {
    0.05
}
fn default_exactness() -> f64 {
    ylyap::triangular::EXACTNESS_TOL
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection { tolerance: default_agreement(), exactness_tol: default_exactness(), fundamental: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularitySection {
    /// Defaults to `0.05·d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionsSection {
    #[serde(default = "d_h3")]
    pub h3: f64,
    #[serde(default = "d_drift")]
    pub gamma_drift: f64,
    #[serde(default = "d_h4")]
    pub h4: f64,
}

fn d_h3() -> f64 {
    AssumptionThresholds::default().h3
}
fn d_drift() -> f64 {
    AssumptionThresholds::default().gamma_drift
}
fn d_h4() -> f64 {
    AssumptionThresholds::default().h4
}

impl Default for AssumptionsSection {
    fn default() -> Self {
        AssumptionsSection { h3: d_h3(), gamma_drift: d_drift(), h4: d_h4() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "default_members")]
    pub members: usize,
}

fn default_members() -> usize {
    stochastic::MIN_ENSEMBLE
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection { members: default_members() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(vec![e.to_string()]))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Every violated constraint, one message per field.
    pub fn validate(&self, base: &Path) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, field: &str, msg: String| {
            if !ok {
                errs.push(format!("{field}: {msg}"));
            }
        };
        check(
            self.schema_version == SCHEMA_VERSION,
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
        );
        let d = self.system.dim;
        check(d >= 1, "system.dim", "must be at least 1".into());
        for (name, coef) in [("system.a", &self.system.a), ("system.c", &self.system.c)] {
            for msg in coefficient_errors(coef, d, self.system.triangular, base) {
                check(false, name, msg);
            }
        }

        let n = &self.numerics;
        check(n.p > 1.0 && n.p < 2.0, "numerics.p", format!("must lie in (1, 2), got {}", n.p));
        check(n.q > n.p && n.q.is_finite(), "numerics.q", format!("must exceed p, got {}", n.q));
        check(
            1.0 / n.p + 1.0 / n.q > 1.0,
            "numerics.q",
            format!("1/p + 1/q must exceed 1, got {}", 1.0 / n.p + 1.0 / n.q),
        );
        if let Some(mu) = n.mu {
            check(mu > 0.0 && mu < 1.0, "numerics.mu", format!("must lie in (0, 1), got {mu}"));
        }
        check(n.tol > 0.0, "numerics.tol", format!("must be positive, got {}", n.tol));
        check(n.max_iterations >= 1, "numerics.max_iterations", "must be at least 1".into());
        check(n.grid >= 1, "numerics.grid", "must be at least 1".into());
        check(n.h > 0.0 && n.h.is_finite(), "numerics.h", format!("must be positive, got {}", n.h));
        check(n.horizon > 0.0 && n.horizon.is_finite(), "numerics.horizon", format!("must be positive, got {}", n.horizon));
        if n.h > 0.0 && n.horizon > 0.0 {
            let steps = n.horizon / n.h;
            check(
                (steps - steps.round()).abs() <= 1e-9 * steps && steps.round() >= 10.0,
                "numerics.horizon",
                format!("must be a multiple of h = {} with at least 10 steps", n.h),
            );
        }
        check(n.t0 >= 0.0 && n.t0.is_finite(), "numerics.t0", format!("must be >= 0, got {}", n.t0));
        if let Some(t_max) = n.t_max {
            check(t_max >= n.horizon, "numerics.t_max", format!("must be >= horizon, got {t_max}"));
        }
        check(
            n.tail_fraction > 0.0 && n.tail_fraction <= 1.0,
            "numerics.tail_fraction",
            format!("must lie in (0, 1], got {}", n.tail_fraction),
        );

        match &self.driver {
            DriverSpec::Fbm { hurst, dt, horizon, method } => {
                check(*hurst > 0.5 && *hurst < 1.0, "driver.hurst", format!("must lie in (0.5, 1), got {hurst}"));
                check(
                    n.p * hurst > 1.0,
                    "numerics.p",
                    format!("must exceed 1/H = {} for an fbm driver, got {}", 1.0 / hurst, n.p),
                );
                check(*dt > 0.0, "driver.dt", format!("must be positive, got {dt}"));
                check(*horizon > 0.0, "driver.horizon", format!("must be positive, got {horizon}"));
                if *dt > 0.0 && *horizon > 0.0 {
                    let steps = horizon / dt;
                    check(
                        (steps - steps.round()).abs() <= 1e-9 * steps,
                        "driver.horizon",
                        format!("must be a multiple of dt = {dt}"),
                    );
                    if *method == FbmMethod::Cholesky {
                        check(
                            (steps.round() as usize) < CHOLESKY_MAX_POINTS,
                            "driver.method",
                            format!("cholesky supports at most {CHOLESKY_MAX_POINTS} grid points"),
                        );
                    }
                }
                check(
                    *horizon + 1e-9 >= n.t0 + n.horizon,
                    "driver.horizon",
                    format!("must cover numerics.t0 + numerics.horizon = {}", n.t0 + n.horizon),
                );
            }
            DriverSpec::Linear { dt, horizon } => {
                check(*dt > 0.0, "driver.dt", format!("must be positive, got {dt}"));
                check(
                    *horizon + 1e-9 >= n.t0 + n.horizon,
                    "driver.horizon",
                    format!("must cover numerics.t0 + numerics.horizon = {}", n.t0 + n.horizon),
                );
            }
            DriverSpec::Csv { path } => {
                check(base.join(path).is_file(), "driver.path", format!("file {} not found", path.display()));
            }
        }

        if let Some(x0) = &self.solve.x0 {
            check(x0.len() == d, "solve.x0", format!("expected {d} entries, got {}", x0.len()));
            check(x0.iter().all(|x| x.is_finite()), "solve.x0", "entries must be finite".into());
        }
        for (field, w) in [("solve.window", self.solve.window), ("integrate.window", self.integrate.window)] {
            if let Some([a, b]) = w {
                check(a >= 0.0 && a < b, field, format!("need 0 <= a < b, got [{a}, {b}]"));
            }
        }
        check(self.oracle.tolerance > 0.0, "oracle.tolerance", "must be positive".into());
        check(self.oracle.exactness_tol > 0.0, "oracle.exactness_tol", "must be positive".into());
        if let Some(t) = self.regularity.threshold {
            check(t >= 0.0, "regularity.threshold", format!("must be >= 0, got {t}"));
        }
        for (field, v) in [
            ("assumptions.h3", self.assumptions.h3),
            ("assumptions.gamma_drift", self.assumptions.gamma_drift),
            ("assumptions.h4", self.assumptions.h4),
        ] {
            check(v >= 0.0, field, format!("must be >= 0, got {v}"));
        }
        check(
            self.ensemble.members >= stochastic::MIN_ENSEMBLE,
            "ensemble.members",
            format!("must be at least {}, got {}", stochastic::MIN_ENSEMBLE, self.ensemble.members),
        );
        errs
    }

    pub fn params(&self) -> Result<YoungParams, CliError> {
        Ok(YoungParams::new(self.numerics.p, self.numerics.q)?)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { mu: self.numerics.mu, tol: self.numerics.tol, max_iterations: self.numerics.max_iterations }
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            h: self.numerics.h,
            method: self.numerics.method,
            tail_fraction: self.numerics.tail_fraction,
            solve: self.solve_options(),
        }
    }

    pub fn fbm_spec(&self) -> Option<FbmSpec> {
        match self.driver {
            DriverSpec::Fbm { hurst, dt, horizon, method } => {
                Some(FbmSpec { hurst, dt, horizon, seed: self.seed, method })
            }
            _ => None,
        }
    }

    pub fn driver(&self, base: &Path) -> Result<SampledPath, CliError> {
        Ok(match &self.driver {
            DriverSpec::Fbm { .. } => stochastic::fbm_sample(&self.fbm_spec().expect("fbm driver"))?,
            DriverSpec::Linear { dt, horizon } => {
                let cells = (horizon / dt).ceil().max(1.0) as usize;
                let g = uniform_grid(0.0, *horizon, cells);
                SampledPath::from_scalar_fn(g, |t| t)?
            }
            DriverSpec::Csv { path } => ylyap::io::read_path_csv_file(&base.join(path), 1, 1)?,
        })
    }

    /// The equation with coefficients on `[0, end]`.
    pub fn equation(&self, base: &Path, end: f64) -> Result<LinearYDE, CliError> {
        let d = self.system.dim;
        let a = build_coefficient(&self.system.a, d, end, self.numerics.grid, base)?;
        let c = build_coefficient(&self.system.c, d, end, self.numerics.grid, base)?;
        let eq = LinearYDE::new(a, c, self.params()?)?;
        if self.system.triangular && !eq.is_upper_triangular() {
            return Err(CliError::Config(vec!["system.triangular: coefficients are not upper triangular".into()]));
        }
        Ok(eq)
    }

    pub fn window(&self, w: Option<[f64; 2]>) -> Result<Interval, CliError> {
        let [a, b] = w.unwrap_or([self.numerics.t0, self.numerics.t0 + self.numerics.horizon]);
        Ok(Interval::new(a, b)?)
    }
}

fn matrix_errors(m: &[Vec<f64>], d: usize, triangular: bool) -> Vec<String> {
    let mut errs = Vec::new();
    if m.len() != d || m.iter().any(|r| r.len() != d) {
        errs.push(format!("matrix must be {d}x{d}"));
        return errs;
    }
    if m.iter().flatten().any(|x| !x.is_finite()) {
        errs.push("entries must be finite".into());
    }
    if triangular && (0..d).any(|i| (0..i).any(|j| m[i][j] != 0.0)) {
        errs.push("strictly-lower entries must vanish for a triangular system".into());
    }
    errs
}

fn coefficient_errors(c: &Coefficient, d: usize, triangular: bool, base: &Path) -> Vec<String> {
    match c {
        Coefficient::Constant { matrix } => matrix_errors(matrix, d, triangular),
        Coefficient::Periodic { constant, amplitude, frequency, phase } => {
            let mut errs: Vec<String> = matrix_errors(constant, d, triangular)
                .into_iter()
                .map(|e| format!("constant {e}"))
                .collect();
            errs.extend(matrix_errors(amplitude, d, triangular).into_iter().map(|e| format!("amplitude {e}")));
            if !(frequency.is_finite() && *frequency >= 0.0) {
                errs.push(format!("frequency must be >= 0, got {frequency}"));
            }
            if !phase.is_finite() {
                errs.push("phase must be finite".into());
            }
            errs
        }
        Coefficient::Csv { path } => {
            if base.join(path).is_file() {
                vec![]
            } else {
                vec![format!("file {} not found", path.display())]
            }
        }
    }
}

fn to_matrix(m: &[Vec<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| m[i][j])
}

fn build_coefficient(c: &Coefficient, d: usize, end: f64, grid: usize, base: &Path) -> Result<SampledPath, CliError> {
    Ok(match c {
        Coefficient::Constant { matrix } => SampledPath::constant_matrix(&to_matrix(matrix, d), 0.0, end)?,
        Coefficient::Periodic { constant, amplitude, frequency, phase } => {
            let m0 = to_matrix(constant, d);
            let m1 = to_matrix(amplitude, d);
            let cells = ((end * grid as f64).ceil() as usize).max(1);
            SampledPath::from_matrix_fn(uniform_grid(0.0, end, cells), d, d, |t| {
                &m0 + &m1 * (frequency * t + phase).sin()
            })?
        }
        Coefficient::Csv { path } => ylyap::io::read_path_csv_file(&base.join(path), d, d)?,
    })
}
