//! Relaxation kernels and scalar drive signals.
//!
//! Ground-truth kernels are Prony sums `base + sum_k c_k exp(-d_k t)`; those
//! are closed under differentiation and integration, so every quantity the
//! forward solver needs is exact. Identified kernels come back as samples on
//! the measurement grid and are interpolated piecewise linearly.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{cumulative_samples, Quantity, Signal, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PronyTerm {
    pub amplitude: f64,
    /// Decay rate, 1/time. Always positive.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PronySum {
    base: f64,
    terms: Vec<PronyTerm>,
}

impl PronySum {
    pub fn new(base: f64, terms: &[(f64, f64)]) -> Result<Self> {
        if !base.is_finite() {
            return Err(Error::Invalid(format!("non-finite Prony base {base}")));
        }
        let mut out = Vec::with_capacity(terms.len());
        for &(amplitude, rate) in terms {
            if !(rate > 0.0) || !rate.is_finite() {
                return Err(Error::Invalid(format!(
                    "Prony decay rates must be positive, got {rate}"
                )));
            }
            if !amplitude.is_finite() {
                return Err(Error::Invalid(format!("non-finite Prony amplitude {amplitude}")));
            }
            out.push(PronyTerm { amplitude, rate });
        }
        Ok(Self { base, terms: out })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn terms(&self) -> &[PronyTerm] {
        &self.terms
    }

    fn eval(&self, t: f64) -> f64 {
        self.base
            + self
                .terms
                .iter()
                .map(|p| p.amplitude * (-p.rate * t).exp())
                .sum::<f64>()
    }

    fn derivative(&self, t: f64) -> f64 {
        -self
            .terms
            .iter()
            .map(|p| p.amplitude * p.rate * (-p.rate * t).exp())
            .sum::<f64>()
    }

    fn integral(&self, t: f64) -> f64 {
        self.base * t
            + self
                .terms
                .iter()
                .map(|p| p.amplitude / p.rate * -(-p.rate * t).exp_m1())
                .sum::<f64>()
    }
}

/// Kernel on a uniform grid, linearly interpolated between nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledKernel {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledKernel {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for {} grid nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let end = self.grid.horizon();
        if t > end * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::Extrapolation { t, end });
        }
        let s = t / self.grid.dt();
        let nearest = s.round();
        if (s - nearest).abs() < 1e-9 {
            return Ok(((nearest as usize).min(self.grid.steps()), 0.0));
        }
        let j = (s.floor() as usize).min(self.grid.steps() - 1);
        Ok((j, s - j as f64))
    }

    fn eval(&self, t: f64) -> Result<f64> {
        let (j, frac) = self.locate(t)?;
        if frac == 0.0 {
            return Ok(self.values[j]);
        }
        Ok(self.values[j] + frac * (self.values[j + 1] - self.values[j]))
    }

    fn node_derivative(&self, j: usize) -> f64 {
        let v = &self.values;
        let dt = self.grid.dt();
        let n = v.len();
        if n < 3 {
            return if n == 2 { (v[1] - v[0]) / dt } else { 0.0 };
        }
        if j == 0 {
            (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt)
        } else if j == n - 1 {
            (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt)
        } else {
            (v[j + 1] - v[j - 1]) / (2.0 * dt)
        }
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        let (j, frac) = self.locate(t)?;
        if frac == 0.0 {
            return Ok(self.node_derivative(j));
        }
        let (a, b) = (self.node_derivative(j), self.node_derivative(j + 1));
        Ok(a + frac * (b - a))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Kernel {
    Prony(PronySum),
    Sampled(SampledKernel),
}

impl Kernel {
    pub fn prony(base: f64, terms: &[(f64, f64)]) -> Result<Self> {
        PronySum::new(base, terms).map(Kernel::Prony)
    }

    pub fn constant(value: f64) -> Self {
        Kernel::Prony(PronySum {
            base: value,
            terms: Vec::new(),
        })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn sampled(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        SampledKernel::new(grid, values).map(Kernel::Sampled)
    }

    pub fn from_signal(signal: &Signal) -> Self {
        Kernel::Sampled(SampledKernel {
            grid: *signal.grid(),
            values: signal.values().to_vec(),
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::Domain { t });
        }
        match self {
            Kernel::Prony(p) => Ok(p.eval(t)),
            Kernel::Sampled(s) => s.eval(t),
        }
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::Domain { t });
        }
        match self {
            Kernel::Prony(p) => Ok(p.derivative(t)),
            Kernel::Sampled(s) => s.derivative(t),
        }
    }

    pub fn value_at_zero(&self) -> f64 {
        match self {
            Kernel::Prony(p) => p.eval(0.0),
            Kernel::Sampled(s) => s.values[0],
        }
    }

    /// Samples on `grid`. Exact for Prony sums; a sampled kernel on the very
    /// same grid is copied, otherwise interpolated.
    pub fn sample(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            Kernel::Prony(p) => Ok((0..grid.len()).map(|j| p.eval(grid.t(j))).collect()),
            Kernel::Sampled(s) if s.grid.same_as(grid) => Ok(s.values.clone()),
            Kernel::Sampled(s) => (0..grid.len()).map(|j| s.eval(grid.t(j))).collect(),
        }
    }

    pub fn sample_derivative(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        (0..grid.len()).map(|j| self.derivative(grid.t(j))).collect()
    }

    /// Samples of `int_0^t k(s) ds`; closed form for Prony sums, trapezoid
    /// running integral otherwise.
    pub fn sample_integral(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            Kernel::Prony(p) => Ok((0..grid.len()).map(|j| p.integral(grid.t(j))).collect()),
            Kernel::Sampled(_) => Ok(cumulative_samples(grid.dt(), &self.sample(grid)?)),
        }
    }

    pub fn to_signal(&self, grid: &TimeGrid, quantity: Quantity) -> Result<Signal> {
        Signal::new(*grid, self.sample(grid)?, quantity)
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            Kernel::Prony(p) => p.base == 0.0 && p.terms.iter().all(|t| t.amplitude == 0.0),
            Kernel::Sampled(s) => s.values.iter().all(|v| *v == 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelViolation {
    NonPositiveAtZero { value: f64 },
    NonFinite { t: f64 },
}

/// Thermodynamic shape properties. Reported, never enforced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelWarning {
    NotIntegrable,
    Increasing { t: f64 },
    Negative { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxKernelCheck {
    pub value_at_zero: f64,
    pub violations: Vec<KernelViolation>,
    pub warnings: Vec<KernelWarning>,
}

impl FluxKernelCheck {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.accepted() {
            Ok(self)
        } else {
            Err(Error::Invalid(format!("flux kernel rejected: {:?}", self.violations)))
        }
    }
}

pub fn validate_flux_kernel(k: &Kernel) -> FluxKernelCheck {
    let value_at_zero = k.value_at_zero();
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    if !value_at_zero.is_finite() {
        violations.push(KernelViolation::NonFinite { t: 0.0 });
    } else if value_at_zero <= 0.0 {
        violations.push(KernelViolation::NonPositiveAtZero { value: value_at_zero });
    }
    match k {
        Kernel::Prony(p) => {
            if p.base != 0.0 {
                warnings.push(KernelWarning::NotIntegrable);
            }
            if p.terms.iter().any(|t| t.amplitude < 0.0) {
                // A sign change in the amplitudes can make the kernel grow.
                let probe = (0..64).map(|j| j as f64 * 0.25);
                for t in probe {
                    if p.derivative(t) > 0.0 {
                        warnings.push(KernelWarning::Increasing { t });
                        break;
                    }
                }
            }
        }
        Kernel::Sampled(s) => {
            for (j, v) in s.values.iter().enumerate() {
                if !v.is_finite() {
                    violations.push(KernelViolation::NonFinite { t: s.grid.t(j) });
                    break;
                }
            }
            if let Some(j) = s.values.iter().position(|v| *v < 0.0) {
                warnings.push(KernelWarning::Negative { t: s.grid.t(j) });
            }
            if let Some(j) = s.values.windows(2).position(|w| w[1] > w[0]) {
                warnings.push(KernelWarning::Increasing { t: s.grid.t(j) });
            }
        }
    }
    FluxKernelCheck {
        value_at_zero,
        violations,
        warnings,
    }
}

/// Boundary drive: `theta(0, t) = f(t)` with `f(t) = int_0^t g(s) ds`, so
/// `f(0) = 0` always holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSignal {
    g: Kernel,
}

impl InputSignal {
    pub fn new(g: Kernel) -> Self {
        Self { g }
    }

    /// `g = 1`, i.e. a linear ramp `f(t) = t` at the driven end.
    pub fn unit_ramp() -> Self {
        Self::new(Kernel::constant(1.0))
    }

    pub fn g(&self) -> &Kernel {
        &self.g
    }

    pub fn g_at(&self, t: f64) -> Result<f64> {
        self.g.eval(t)
    }

    pub fn f_at(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain { t });
        }
        match &self.g {
            Kernel::Prony(p) => Ok(p.integral(t)),
            Kernel::Sampled(s) => {
                let f = cumulative_samples(s.grid.dt(), &s.values);
                SampledKernel::new(s.grid, f)?.eval(t)
            }
        }
    }

    pub fn sample_g(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        self.g.sample(grid)
    }

    pub fn sample_f(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        self.g.sample_integral(grid)
    }

    pub fn is_zero(&self) -> bool {
        self.g.is_identically_zero()
    }
}

/// Kernel literal as written in configuration files:
/// `prony: base=0.0 terms=[(c,d),...]` or `sampled: file=<csv>`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Prony(PronySum),
    SampledFile(PathBuf),
}

impl KernelSpec {
    /// Relative sample files resolve against `base_dir`.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Kernel> {
        match self {
            KernelSpec::Prony(p) => Ok(Kernel::Prony(p.clone())),
            KernelSpec::SampledFile(path) => {
                let full = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let signal = crate::io::read_kernel_csv(&full)?;
                Ok(Kernel::from_signal(&signal))
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Prony(p) => {
                write!(f, "prony: base={:?} terms=[", p.base)?;
                for (i, t) in p.terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "({:?},{:?})", t.amplitude, t.rate)?;
                }
                write!(f, "]")
            }
            KernelSpec::SampledFile(path) => write!(f, "sampled: file={}", path.display()),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (form, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("kernel literal `{s}` lacks a form prefix")))?;
        match form.trim() {
            "prony" => parse_prony(rest).map(KernelSpec::Prony),
            "sampled" => {
                let path = rest
                    .trim()
                    .strip_prefix("file=")
                    .ok_or_else(|| Error::Parse(format!("sampled kernel needs `file=`: `{s}`")))?;
                if path.trim().is_empty() {
                    return Err(Error::Parse("empty sampled kernel path".into()));
                }
                Ok(KernelSpec::SampledFile(PathBuf::from(path.trim())))
            }
            other => Err(Error::Parse(format!("unknown kernel form `{other}`"))),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("invalid number `{}`", s.trim())))
}

fn parse_prony(rest: &str) -> Result<PronySum> {
    let mut base = 0.0;
    let mut terms = Vec::new();
    let mut rest = rest.trim();
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("base=") {
            let end = r.find(char::is_whitespace).unwrap_or(r.len());
            base = parse_f64(&r[..end])?;
            rest = r[end..].trim_start();
        } else if let Some(r) = rest.strip_prefix("terms=") {
            let r = r.trim_start();
            let body = r
                .strip_prefix('[')
                .ok_or_else(|| Error::Parse("terms must start with `[`".into()))?;
            let close = body
                .find(']')
                .ok_or_else(|| Error::Parse("unterminated term list".into()))?;
            terms = parse_terms(&body[..close])?;
            rest = body[close + 1..].trim_start();
        } else {
            return Err(Error::Parse(format!("unexpected text in Prony literal: `{rest}`")));
        }
    }
    PronySum::new(base, &terms)
}

fn parse_terms(body: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut rest = body.trim();
    while !rest.is_empty() {
        let open = rest
            .strip_prefix('(')
            .ok_or_else(|| Error::Parse(format!("expected `(` in term list at `{rest}`")))?;
        let close = open
            .find(')')
            .ok_or_else(|| Error::Parse("unterminated Prony term".into()))?;
        let (c, d) = open[..close]
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("Prony term `({})` needs two numbers", &open[..close])))?;
        out.push((parse_f64(c)?, parse_f64(d)?));
        rest = open[close + 1..].trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_examples() {
        let k = Kernel::prony(0.0, &[(1.0, 2.0)]).unwrap();
        assert_eq!(k.eval(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(k.eval(0.5).unwrap(), 0.3678794, epsilon = 1e-7);
        let k = Kernel::prony(0.5, &[(0.5, 1.0)]).unwrap();
        assert_eq!(k.eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn derivative_examples() {
        let k = Kernel::prony(0.0, &[(1.0, 2.0)]).unwrap();
        assert_eq!(k.derivative(0.0).unwrap(), -2.0);
        assert_eq!(Kernel::constant(1.0).derivative(3.7).unwrap(), 0.0);
        let k = Kernel::prony(0.0, &[(3.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(k.derivative(1.0).unwrap(), -1.103638, epsilon = 1e-6);
    }

    #[test]
    fn domain_and_extrapolation_errors() {
        let k = Kernel::prony(0.0, &[(1.0, 2.0)]).unwrap();
        assert!(matches!(k.eval(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(k.derivative(-1e-9), Err(Error::Domain { .. })));
        let grid = TimeGrid::new(0.1, 10).unwrap();
        let s = Kernel::sampled(grid, vec![1.0; 11]).unwrap();
        assert!(matches!(s.eval(1.5), Err(Error::Extrapolation { .. })));
        assert!(s.eval(1.0).is_ok());
    }

    #[test]
    fn derivative_error_ratio_is_four() {
        let k = Kernel::prony(0.3, &[(1.0, 2.0), (-0.5, 0.7)]).unwrap();
        let t = 0.8;
        let exact = k.derivative(t).unwrap();
        let fd = |h: f64| (k.eval(t + h).unwrap() - k.eval(t - h).unwrap()) / (2.0 * h);
        let ratio = (fd(0.02) - exact).abs() / (fd(0.01) - exact).abs();
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn nonpositive_rates_rejected() {
        assert!(Kernel::prony(0.0, &[(1.0, 0.0)]).is_err());
        assert!(Kernel::prony(0.0, &[(1.0, -1.0)]).is_err());
    }

    #[test]
    fn flux_kernel_validation() {
        assert!(validate_flux_kernel(&Kernel::prony(0.0, &[(1.0, 1.0)]).unwrap()).accepted());
        let zero = validate_flux_kernel(&Kernel::prony(0.0, &[]).unwrap());
        assert!(!zero.accepted());
        assert_eq!(zero.value_at_zero, 0.0);
        let neg = validate_flux_kernel(&Kernel::prony(-1.0, &[(0.5, 1.0)]).unwrap());
        assert!(!neg.accepted());
        assert_eq!(neg.violations, vec![KernelViolation::NonPositiveAtZero { value: -0.5 }]);
    }

    #[test]
    fn thermodynamic_properties_only_warn() {
        let k = Kernel::prony(1.0, &[(0.5, 1.0)]).unwrap();
        let check = validate_flux_kernel(&k);
        assert!(check.accepted());
        assert!(check.warnings.contains(&KernelWarning::NotIntegrable));
    }

    #[test]
    fn sampled_interpolation_and_derivative() {
        let grid = TimeGrid::new(0.5, 4).unwrap();
        let k = Kernel::sampled(grid, vec![0.0, 1.0, 4.0, 9.0, 16.0]).unwrap();
        assert_abs_diff_eq!(k.eval(0.25).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(k.eval(1.0).unwrap(), 4.0, epsilon = 1e-14);
        // v = (2t)^2, dv/dt = 8t; centered difference exact on quadratics
        assert_abs_diff_eq!(k.derivative(1.0).unwrap(), 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.derivative(0.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.derivative(2.0).unwrap(), 16.0, epsilon = 1e-12);
    }

    #[test]
    fn prony_integral_matches_closed_form() {
        let k = Kernel::prony(2.0, &[(1.0, 3.0)]).unwrap();
        let grid = TimeGrid::new(0.25, 4).unwrap();
        let a = k.sample_integral(&grid).unwrap();
        for (j, v) in a.iter().enumerate() {
            let t = grid.t(j);
            assert_abs_diff_eq!(*v, 2.0 * t + (1.0 - (-3.0 * t).exp()) / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn input_signal_ramp() {
        let g = InputSignal::unit_ramp();
        assert_eq!(g.f_at(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(g.f_at(1.7).unwrap(), 1.7, epsilon = 1e-15);
        let e = InputSignal::new(Kernel::prony(0.0, &[(1.0, 1.0)]).unwrap());
        assert_eq!(e.f_at(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(e.f_at(1.0).unwrap(), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn literal_parsing() {
        let spec: KernelSpec = "prony: base=0.5 terms=[(1,2), (0.25, 3.5)]".parse().unwrap();
        let k = spec.resolve(None).unwrap();
        assert_abs_diff_eq!(k.eval(0.0).unwrap(), 1.75, epsilon = 1e-15);
        let spec: KernelSpec = "prony: terms=[]".parse().unwrap();
        assert!(spec.resolve(None).unwrap().is_identically_zero());
        let spec: KernelSpec = "sampled: file=beta.csv".parse().unwrap();
        assert_eq!(spec, KernelSpec::SampledFile("beta.csv".into()));
        assert!("gauss: base=1".parse::<KernelSpec>().is_err());
        assert!("prony: base=x".parse::<KernelSpec>().is_err());
        assert!("prony: terms=[(1,-2)]".parse::<KernelSpec>().is_err());
    }

    proptest::proptest! {
        #[test]
        fn literal_round_trips(
            base in -5.0f64..5.0,
            terms in proptest::collection::vec((-5.0f64..5.0, 0.01f64..20.0), 0..5),
        ) {
            let spec = KernelSpec::Prony(PronySum::new(base, &terms).unwrap());
            let back: KernelSpec = spec.to_string().parse().unwrap();
            proptest::prop_assert_eq!(back, spec);
        }

        #[test]
        fn derivative_matches_central_difference(
            base in -2.0f64..2.0,
            terms in proptest::collection::vec((-3.0f64..3.0, 0.1f64..4.0), 1..4),
            t in 0.1f64..3.0,
        ) {
            let k = Kernel::prony(base, &terms).unwrap();
            let exact = k.derivative(t).unwrap();
            let fd = |h: f64| (k.eval(t + h).unwrap() - k.eval(t - h).unwrap()) / (2.0 * h);
            let e1 = (fd(0.04) - exact).abs();
            let e2 = (fd(0.02) - exact).abs();
            // at least second order; exact cancellation of k''' only helps
            proptest::prop_assert!(e2 <= 0.3 * e1 + 1e-10, "e1 {} e2 {}", e1, e2);
        }

        #[test]
        fn sampling_reproduces_node_values(
            base in -2.0f64..2.0,
            terms in proptest::collection::vec((-3.0f64..3.0, 0.1f64..4.0), 0..4),
            dt in 0.001f64..0.2,
        ) {
            let k = Kernel::prony(base, &terms).unwrap();
            let grid = TimeGrid::new(dt, 50).unwrap();
            let s = Kernel::sampled(grid, k.sample(&grid).unwrap()).unwrap();
            for j in 0..grid.len() {
                let t = grid.t(j);
                proptest::prop_assert_eq!(s.eval(t).unwrap(), k.eval(t).unwrap());
            }
        }
    }
}
