//! Volterra convolution equations on a uniform grid.
//!
//! Second kind: `c x + k * x = R`, solved by forward substitution with
//! product-trapezoid weights. First kind: `k * x = R` with `k(0) = 0`, solved
//! by one of three methods (see [`Method`]).

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{derivative_samples, interior_sum, l2_norm, second_derivative_samples, Quantity, Signal};

pub fn solve_second_kind_samples(dt: f64, c: f64, k: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    if c == 0.0 {
        return Err(Error::Invalid("second-kind solve needs c != 0".into()));
    }
    let n = k.len().min(r.len());
    let denom = c + 0.5 * dt * k[0];
    if denom.abs() <= 64.0 * f64::EPSILON * (c.abs() + 0.5 * dt * k[0].abs()) {
        return Err(Error::SingularStep(denom.abs()));
    }
    let mut x = vec![0.0; n];
    if n == 0 {
        return Ok(x);
    }
    x[0] = r[0] / c;
    for m in 1..n {
        let history = dt * (0.5 * k[m] * x[0] + interior_sum(k, &x, m));
        x[m] = (r[m] - history) / denom;
    }
    Ok(x)
}

/// Solves `c x(t) + (k * x)(t) = R(t)`.
pub fn solve_second_kind(c: f64, kernel: &Signal, rhs: &Signal) -> Result<Signal> {
    kernel.grid().check_same(rhs.grid())?;
    let x = solve_second_kind_samples(kernel.grid().dt(), c, kernel.values(), rhs.values())?;
    Signal::new(*kernel.grid(), x, Quantity::Kernel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Trapezoid equation at node `m` solved for `x_{m-1}`; needs `k(0) = 0`.
    DirectProduct,
    /// Differentiate twice: `k'(0) x + k'' * x = R''`.
    ReduceToSecondKind,
    /// `alpha x + k * x = R`, with the `alpha` term lagged one node.
    Lavrentiev,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" | "directproduct" | "direct-product" => Ok(Method::DirectProduct),
            "reduce" | "reducetosecondkind" | "second-kind" => Ok(Method::ReduceToSecondKind),
            "lavrentiev" => Ok(Method::Lavrentiev),
            other => Err(Error::Parse(format!("unknown deconvolution method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    Fixed,
    Discrepancy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationChoice {
    pub alpha: f64,
    pub selection: Selection,
    pub discrepancy_tau: f64,
}

pub const DEFAULT_TAU: f64 = 1.2;
pub const ALPHA_RANGE: (f64, f64) = (1e-12, 1e2);

impl RegularizationChoice {
    pub fn none() -> Self {
        Self::fixed(0.0)
    }

    pub fn fixed(alpha: f64) -> Self {
        Self {
            alpha,
            selection: Selection::Fixed,
            discrepancy_tau: DEFAULT_TAU,
        }
    }

    pub fn discrepancy(tau: f64) -> Self {
        Self {
            alpha: 0.0,
            selection: Selection::Discrepancy,
            discrepancy_tau: tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.discrepancy_tau > 1.0) {
            return Err(Error::Config(format!(
                "discrepancy tau must exceed 1, got {}",
                self.discrepancy_tau
            )));
        }
        Ok(())
    }
}

impl Default for RegularizationChoice {
    fn default() -> Self {
        Self::none()
    }
}

/// `int_0^t k(t-s) x(s) ds = R(t)`; `noise_level` is the absolute L2 norm of
/// the data error in `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeconvProblem {
    kernel: Signal,
    rhs: Signal,
    noise_level: f64,
    method: Method,
}

impl DeconvProblem {
    pub fn new(kernel: Signal, rhs: Signal, noise_level: f64, method: Method) -> Result<Self> {
        kernel.grid().check_same(rhs.grid())?;
        if kernel.len() < 4 {
            return Err(Error::Invalid("deconvolution needs at least 4 grid nodes".into()));
        }
        if !(noise_level >= 0.0) {
            return Err(Error::Invalid(format!("noise level must be >= 0, got {noise_level}")));
        }
        let k_scale = kernel.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let r_scale = rhs.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let k0 = kernel.values()[0];
        if k0.abs() > 1e-10 * k_scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Invalid(format!(
                "first-kind kernel must vanish at t = 0, got k(0) = {k0:e}"
            )));
        }
        let r0 = rhs.values()[0];
        if noise_level == 0.0 && r0.abs() > 1e-8 * r_scale.max(1.0) {
            return Err(Error::Invalid(format!("k(0) = 0 requires R(0) = 0, got R(0) = {r0:e}")));
        }
        Ok(Self {
            kernel,
            rhs,
            noise_level,
            method,
        })
    }

    pub fn kernel(&self) -> &Signal {
        &self.kernel
    }

    pub fn rhs(&self) -> &Signal {
        &self.rhs
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    pub fn method(&self) -> Method {
        self.method
    }

    fn dt(&self) -> f64 {
        self.kernel.grid().dt()
    }

    /// `||k * x - R||` over the nodes the equations constrain.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let dt = self.dt();
        let k = self.kernel.values();
        let r = self.rhs.values();
        let diff: Vec<f64> = (0..r.len())
            .map(|m| {
                let conv = if m == 0 {
                    0.0
                } else {
                    dt * (0.5 * (k[m] * x[0] + k[0] * x[m]) + interior_sum(k, x, m))
                };
                conv - r[m]
            })
            .collect();
        l2_norm(dt, &diff)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvSolution {
    pub x: Signal,
    pub alpha: f64,
    pub residual: f64,
    /// False when the discrepancy equation had no root in the search range.
    pub bracketed: bool,
}

/// Lagged solve of `alpha x_{m-1} + (k * x)_m = R_m` for `x_{m-1}`.
/// At `alpha = 0` this is the direct product method.
fn lagged_solve(dt: f64, alpha: f64, k: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = k.len();
    let lead = alpha + dt * k[1];
    let first = alpha + 0.5 * dt * k[1];
    let scale = alpha + dt * k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if lead.abs() <= 1e3 * f64::EPSILON * scale || first.abs() <= 1e3 * f64::EPSILON * scale {
        return Err(Error::IllPosedReduction(format!(
            "k'(0) dt = {:e} is not resolvable on this grid; use Lavrentiev",
            k[1]
        )));
    }
    let mut x = vec![0.0; n];
    x[0] = r[1] / first;
    for m in 2..n {
        // unknown x_{m-1}, still zero here; k_0 = 0 keeps x_m out of equation m
        let hist = 0.5 * k[m] * x[0] + interior_sum(k, &x, m);
        x[m - 1] = (r[m] - dt * hist) / lead;
    }
    // x_M is not constrained by any equation
    x[n - 1] = 2.0 * x[n - 2] - x[n - 3];
    Ok(x)
}

/// The first node equation pins `x_0` through a single half-weight panel, which is only
/// first-order accurate; the reported value is re-extrapolated.
fn smooth_start(mut x: Vec<f64>) -> Vec<f64> {
    x[0] = 2.0 * x[1] - x[2];
    x
}

fn reduce_to_second_kind(dt: f64, k: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let dk = derivative_samples(dt, k);
    let ddk = second_derivative_samples(dt, k);
    let curvature = ddk[..4].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c = dk[0];
    // a true zero of k'(0) leaves an O(dt^2) remainder set by the local curvature
    if c.abs() <= 10.0 * dt * curvature || c == 0.0 {
        return Err(Error::IllPosedReduction(format!(
            "k'(0) = {c:e} vanishes numerically; the first-kind problem is not reducible, use Lavrentiev"
        )));
    }
    let ddr = second_derivative_samples(dt, r);
    solve_second_kind_samples(dt, c, &ddk, &ddr)
}

fn solve_at(p: &DeconvProblem, alpha: f64) -> Result<Vec<f64>> {
    lagged_solve(p.dt(), alpha, p.kernel.values(), p.rhs.values())
}

/// Discrepancy principle: bisection on `log alpha` over [`ALPHA_RANGE`] for
/// `||k * x_alpha - R|| = tau * noise`. Returns `(alpha, bracketed)`.
pub fn select_alpha(p: &DeconvProblem, tau: f64) -> Result<(f64, bool)> {
    if !(p.noise_level > 0.0) {
        return Err(Error::Config(
            "discrepancy selection requires a positive noise level".into(),
        ));
    }
    let target = tau * p.noise_level;
    let (lo, hi) = ALPHA_RANGE;
    let res_lo = p.residual(&solve_at(p, lo)?);
    if res_lo >= target {
        warn!("discrepancy {res_lo:e} already exceeds {target:e} at alpha = {lo:e}; using lower endpoint");
        return Ok((lo, false));
    }
    let res_hi = p.residual(&solve_at(p, hi)?);
    if res_hi <= target {
        warn!("discrepancy {res_hi:e} stays below {target:e} at alpha = {hi:e}; using upper endpoint");
        return Ok((hi, false));
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut best = lo;
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        let res = p.residual(&solve_at(p, mid.exp())?);
        if res <= target {
            a = mid;
            best = mid.exp();
            if res >= target / (1.0 + 1e-3) {
                break;
            }
        } else {
            b = mid;
        }
        if b - a < 1e-9 {
            break;
        }
    }
    debug!("discrepancy principle selected alpha = {best:e}");
    Ok((best, true))
}

pub fn solve_first_kind(p: &DeconvProblem, reg: &RegularizationChoice) -> Result<DeconvSolution> {
    reg.validate()?;
    let dt = p.dt();
    let (values, alpha, bracketed) = match p.method {
        Method::DirectProduct => (lagged_solve(dt, 0.0, p.kernel.values(), p.rhs.values())?, 0.0, true),
        Method::ReduceToSecondKind => (reduce_to_second_kind(dt, p.kernel.values(), p.rhs.values())?, 0.0, true),
        Method::Lavrentiev => {
            let (alpha, bracketed) = match reg.selection {
                Selection::Fixed => (reg.alpha, true),
                Selection::Discrepancy => select_alpha(p, reg.discrepancy_tau)?,
            };
            (solve_at(p, alpha)?, alpha, bracketed)
        }
    };
    let residual = p.residual(&values);
    let values = match p.method {
        Method::ReduceToSecondKind => values,
        _ => smooth_start(values),
    };
    Ok(DeconvSolution {
        x: Signal::new(*p.kernel.grid(), values, Quantity::Kernel)?,
        alpha,
        residual,
        bracketed,
    })
}
