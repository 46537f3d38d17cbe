//! Two-stage kernel identification.
//!
//! Stage 1 recovers `beta` from the energy traces alone:
//! `beta * (g * H) = S F - g * H - Theta_f / gamma0`, with `S` the mean-sum
//! constant and `F = int g`.
//!
//! Stage 2 recovers `a` from the flux traces and the stage-1 estimate:
//! `c_a (F * a) = Y_f + c_h (h * K)`, `h = g + beta * g`. The factors
//! `c_a = gamma0^2 / 2 = 1/L` and `c_h = gamma0` are the ones that close
//! against the forward simulator; see [`IdentityConvention`].

use serde::{Deserialize, Serialize};

use crate::deconv::{solve_first_kind, DeconvProblem, Method, RegularizationChoice, Selection, DEFAULT_TAU};
use crate::error::{Error, Result};
use crate::forward::MeasurementSet;
use crate::kernelspace::{InputSignal, Kernel};
use crate::quad::{convolve_samples, max_abs_diff, relative_l2, Quantity, Signal, TimeGrid};
use crate::spectral::{series_constants, BasisKind, SpectralBasis};

/// Sign and scale factors of the stage-2 identity
/// `sign Y_f = c_a (a * F) - c_h h * (sign K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityConvention {
    /// `+1` when flux traces are the outward heat flux `-(a * theta_x)(L)`.
    pub flux_sign: f64,
    pub drive_factor: f64,
    pub memory_factor: f64,
}

impl IdentityConvention {
    /// Factors derived for this repository's measurement definitions.
    pub fn validated(basis: &SpectralBasis) -> Self {
        let g0 = basis.gamma0();
        Self {
            flux_sign: 1.0,
            drive_factor: 0.5 * g0 * g0,
            memory_factor: g0,
        }
    }

    /// Factors as they appear in the closed-form display of the flux
    /// identity, `(gamma0/2)(a * F) - h * K`; kept for comparison only.
    pub fn as_displayed(basis: &SpectralBasis) -> Self {
        Self {
            flux_sign: 1.0,
            drive_factor: 0.5 * basis.gamma0(),
            memory_factor: 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        Self {
            flux_sign: -self.flux_sign,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSettings {
    pub method: Method,
    pub reg: RegularizationChoice,
}

impl StageSettings {
    /// The direct product method on clean data, Lavrentiev with the
    /// discrepancy principle once noise is present.
    pub fn for_noise(level: f64) -> Self {
        if level > 0.0 {
            Self {
                method: Method::Lavrentiev,
                reg: RegularizationChoice::discrepancy(DEFAULT_TAU),
            }
        } else {
            Self {
                method: Method::DirectProduct,
                reg: RegularizationChoice::none(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub estimate: Signal,
    pub alpha: f64,
    pub residual: f64,
    pub bracketed: bool,
    pub method: Method,
}

impl StageResult {
    pub fn kernel(&self) -> Kernel {
        Kernel::from_signal(&self.estimate)
    }
}

fn check_grids(signals: &[&Signal]) -> Result<TimeGrid> {
    let grid = *signals[0].grid();
    for s in &signals[1..] {
        grid.check_same(s.grid())?;
    }
    Ok(grid)
}

/// L2 norm of white noise with per-sample deviation `sigma` over the grid.
fn white_noise_norm(sigma: f64, grid: &TimeGrid) -> f64 {
    sigma * (grid.dt() * grid.len() as f64).sqrt()
}

fn deconvolve(
    kernel: Vec<f64>,
    rhs: Vec<f64>,
    grid: TimeGrid,
    noise: f64,
    settings: &StageSettings,
) -> Result<StageResult> {
    if settings.method == Method::Lavrentiev && settings.reg.selection == Selection::Discrepancy && noise == 0.0 {
        return Err(Error::Config(
            "discrepancy selection needs noisy measurements; use a fixed alpha".into(),
        ));
    }
    let problem = DeconvProblem::new(
        Signal::new(grid, kernel, Quantity::Generic)?,
        Signal::new(grid, rhs, Quantity::Generic)?,
        noise,
        settings.method,
    )?;
    let sol = solve_first_kind(&problem, &settings.reg)?;
    Ok(StageResult {
        estimate: sol.x,
        alpha: sol.alpha,
        residual: sol.residual,
        bracketed: sol.bracketed,
        method: settings.method,
    })
}

/// Right-hand side and kernel of the stage-1 equation `beta * k = R`.
pub fn stage_one_data(
    h: &Signal,
    theta_f: &Signal,
    g: &InputSignal,
    basis: &SpectralBasis,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if basis.kind() != BasisKind::DirichletDirichlet {
        return Err(Error::Unsupported("stage 1 uses the Dirichlet-Dirichlet basis".into()));
    }
    let grid = check_grids(&[h, theta_f])?;
    let s = series_constants(basis).mean_sum;
    let f = g.sample_f(&grid)?;
    let k = convolve_samples(grid.dt(), &g.sample_g(&grid)?, h.values());
    let g0 = basis.gamma0();
    let r = (0..grid.len())
        .map(|j| s * f[j] - k[j] - theta_f.values()[j] / g0)
        .collect();
    Ok((k, r))
}

/// Stage 1. Reads only the energy traces; no flux kernel or flux signal
/// enters. `sigma_theta` is the per-sample noise deviation of `Theta_f`.
pub fn identify_beta(
    h: &Signal,
    theta_f: &Signal,
    g: &InputSignal,
    basis: &SpectralBasis,
    settings: &StageSettings,
    sigma_theta: f64,
) -> Result<StageResult> {
    let (k, r) = stage_one_data(h, theta_f, g, basis)?;
    let grid = *h.grid();
    let noise = white_noise_norm(sigma_theta / basis.gamma0(), &grid);
    deconvolve(k, r, grid, noise, settings)
}

/// Kernel `c_a F` and data `D = sign Y_f + c_h h * (sign K)` of stage 2.
pub fn stage_two_data(
    k_trace: &Signal,
    y_f: &Signal,
    beta_hat: &Kernel,
    g: &InputSignal,
    convention: &IdentityConvention,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = check_grids(&[k_trace, y_f])?;
    let dt = grid.dt();
    let gs = g.sample_g(&grid)?;
    let beta = beta_hat.sample(&grid)?;
    let h: Vec<f64> = gs
        .iter()
        .zip(convolve_samples(dt, &beta, &gs))
        .map(|(a, b)| a + b)
        .collect();
    let s = convention.flux_sign;
    let signed_k: Vec<f64> = k_trace.values().iter().map(|v| s * v).collect();
    let hk = convolve_samples(dt, &h, &signed_k);
    let d = (0..grid.len())
        .map(|j| s * y_f.values()[j] + convention.memory_factor * hk[j])
        .collect();
    let kernel = g.sample_f(&grid)?.iter().map(|f| convention.drive_factor * f).collect();
    Ok((kernel, d))
}

/// Stage 2: `a` from the flux traces, given an energy kernel estimate.
pub fn identify_a(
    k_trace: &Signal,
    y_f: &Signal,
    beta_hat: &Kernel,
    g: &InputSignal,
    convention: &IdentityConvention,
    settings: &StageSettings,
    sigma_y: f64,
) -> Result<StageResult> {
    let (kernel, d) = stage_two_data(k_trace, y_f, beta_hat, g, convention)?;
    let grid = *k_trace.grid();
    deconvolve(kernel, d, grid, white_noise_norm(sigma_y, &grid), settings)
}

/// `gamma0 sum (-1)^n / lambda_n` over the basis index set; with the index
/// set starting at 1 this is `gamma0 (L/pi)(pi/2 - 2)`.
pub fn variant_rhs_constant(basis: &SpectralBasis) -> f64 {
    basis.gamma0() * series_constants(basis).alt_sum
}

pub fn variant_data(
    hl: &Signal,
    theta_l: &Signal,
    g: &InputSignal,
    basis: &SpectralBasis,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if basis.kind() != BasisKind::DirichletNeumann {
        return Err(Error::Unsupported(
            "the variant uses the Dirichlet-Neumann basis".into(),
        ));
    }
    let grid = check_grids(&[hl, theta_l])?;
    let c = variant_rhs_constant(basis);
    let g0 = basis.gamma0();
    let f = g.sample_f(&grid)?;
    let k = convolve_samples(grid.dt(), &g.sample_g(&grid)?, hl.values());
    let r = (0..grid.len())
        .map(|j| c * f[j] - k[j] - theta_l.values()[j] / g0)
        .collect();
    Ok((k, r))
}

/// Stage 1 from the insulated-end temperature traces.
pub fn identify_beta_variant(
    hl: &Signal,
    theta_l: &Signal,
    g: &InputSignal,
    basis: &SpectralBasis,
    settings: &StageSettings,
    sigma_theta_l: f64,
) -> Result<StageResult> {
    let (k, r) = variant_data(hl, theta_l, g, basis)?;
    let grid = *hl.grid();
    let noise = white_noise_norm(sigma_theta_l / basis.gamma0(), &grid);
    deconvolve(k, r, grid, noise, settings)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureResiduals {
    pub theta_f: f64,
    pub y_f: f64,
    pub variant: Option<f64>,
}

impl ClosureResiduals {
    pub fn worst(&self) -> f64 {
        self.theta_f.max(self.y_f).max(self.variant.unwrap_or(0.0))
    }
}

/// Relative residual of each identity with the true kernels inserted.
pub fn closure_check(
    ms: &MeasurementSet,
    a: &Kernel,
    beta: &Kernel,
    basis: &SpectralBasis,
    variant_basis: Option<&SpectralBasis>,
    g: &InputSignal,
    convention: &IdentityConvention,
) -> Result<ClosureResiduals> {
    let grid = *ms.grid();
    let n = grid.len();
    let dt = grid.dt();
    let bv = beta.sample(&grid)?;

    // the full energy trace is compared rather than the small remainder R
    let (k, _) = stage_one_data(&ms.h, &ms.theta_f, g, basis)?;
    let predicted = convolve_samples(dt, &bv, &k);
    let s = series_constants(basis).mean_sum;
    let f = g.sample_f(&grid)?;
    let lhs: Vec<f64> = ms.theta_f.values().iter().map(|v| v / basis.gamma0()).collect();
    let rhs: Vec<f64> = (0..n).map(|j| s * f[j] - k[j] - predicted[j]).collect();
    let theta_f = relative_l2(&rhs, &lhs, n);

    // d - sign Y_f is the memory term c_h h * (sign K)
    let (kernel, d) = stage_two_data(&ms.k, &ms.y_f, beta, g, convention)?;
    let af = convolve_samples(dt, &a.sample(&grid)?, &kernel);
    let y_ref: Vec<f64> = ms.y_f.values().iter().map(|v| convention.flux_sign * v).collect();
    let y_pred: Vec<f64> = (0..n).map(|j| af[j] - (d[j] - y_ref[j])).collect();
    let y_f = relative_l2(&y_pred, &y_ref, n);

    let variant = match (variant_basis, &ms.variant_hl, &ms.variant_theta_l) {
        (Some(dn), Some(hl), Some(tl)) => {
            let (kv, _) = variant_data(hl, tl, g, dn)?;
            let pv = convolve_samples(dt, &bv, &kv);
            let c = variant_rhs_constant(dn);
            let lhs: Vec<f64> = tl.values().iter().map(|v| v / dn.gamma0()).collect();
            let rhs: Vec<f64> = (0..n).map(|j| c * f[j] - kv[j] - pv[j]).collect();
            Some(relative_l2(&rhs, &lhs, n))
        }
        _ => None,
    };
    Ok(ClosureResiduals { theta_f, y_f, variant })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelError {
    pub rel_l2: f64,
    pub max_error: f64,
}

/// Number of grid nodes in `[0, t_report]`.
pub fn report_count(grid: &TimeGrid, t_report: f64) -> usize {
    grid.index_at_or_before(t_report.min(grid.horizon())) + 1
}

pub fn kernel_error(truth: &Kernel, estimate: &Signal, t_report: f64) -> Result<KernelError> {
    let grid = estimate.grid();
    let exact = truth.sample(grid)?;
    let n = report_count(grid, t_report);
    Ok(KernelError {
        rel_l2: relative_l2(estimate.values(), &exact, n),
        max_error: max_abs_diff(estimate.values(), &exact, n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub method: Method,
    pub alpha: f64,
    pub residual: f64,
    pub bracketed: bool,
    pub error: Option<KernelError>,
}

impl StageReport {
    pub fn from_result(r: &StageResult, error: Option<KernelError>) -> Self {
        Self {
            method: r.method,
            alpha: r.alpha,
            residual: r.residual,
            bracketed: r.bracketed,
            error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub t_report: f64,
    pub beta: Option<StageReport>,
    pub a: Option<StageReport>,
    pub variant_beta: Option<StageReport>,
    pub closure: Option<ClosureResiduals>,
    pub convention: Option<IdentityConvention>,
    pub noise_level: f64,
}

/// Errors of sampled reconstructions against known kernels over `[0, t_report]`.
pub fn roundtrip_report(
    beta_true: &Kernel,
    a_true: &Kernel,
    beta_hat: &Signal,
    a_hat: &Signal,
    t_report: f64,
) -> Result<ReconstructionReport> {
    beta_hat.grid().check_same(a_hat.grid())?;
    let t_report = t_report.min(beta_hat.grid().horizon() - beta_hat.grid().dt());
    let stage = |truth: &Kernel, est: &Signal| -> Result<StageReport> {
        Ok(StageReport {
            method: Method::DirectProduct,
            alpha: 0.0,
            residual: 0.0,
            bracketed: true,
            error: Some(kernel_error(truth, est, t_report)?),
        })
    };
    Ok(ReconstructionReport {
        t_report,
        beta: Some(stage(beta_true, beta_hat)?),
        a: Some(stage(a_true, a_hat)?),
        variant_beta: None,
        closure: None,
        convention: None,
        noise_level: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_flux_kernel_is_recovered_exactly() {
        // K = 0 and Y_f = c_a c t^2 / 2 with g = 1 give a = c
        let basis = crate::spectral::build_basis(BasisKind::DirichletDirichlet, 1.0, 4).unwrap();
        let conv = IdentityConvention::validated(&basis);
        let grid = TimeGrid::with_horizon(1e-3, 1.0).unwrap();
        let c = 1.3;
        let k = Signal::zeros(grid, Quantity::Flux);
        let y = Signal::from_fn(grid, Quantity::Flux, |t| conv.drive_factor * c * t * t / 2.0);
        for method in [Method::DirectProduct, Method::ReduceToSecondKind] {
            let settings = StageSettings {
                method,
                reg: RegularizationChoice::none(),
            };
            let r = identify_a(
                &k,
                &y,
                &Kernel::zero(),
                &InputSignal::unit_ramp(),
                &conv,
                &settings,
                0.0,
            )
            .unwrap();
            for v in r.estimate.values() {
                assert_abs_diff_eq!(*v, c, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn displayed_factors_differ_from_validated() {
        let basis = crate::spectral::build_basis(BasisKind::DirichletDirichlet, 1.0, 4).unwrap();
        let v = IdentityConvention::validated(&basis);
        let d = IdentityConvention::as_displayed(&basis);
        assert_abs_diff_eq!(v.drive_factor, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.memory_factor / d.memory_factor, basis.gamma0(), epsilon = 1e-15);
        assert_abs_diff_eq!(v.drive_factor / d.drive_factor, basis.gamma0(), epsilon = 1e-15);
        assert_eq!(v.flipped().flux_sign, -1.0);
    }

    #[test]
    fn variant_constant_under_both_indexings() {
        let from_one = SpectralBasis::with_start_index(BasisKind::DirichletNeumann, 1.0, 8, 1).unwrap();
        let expected = from_one.gamma0() / std::f64::consts::PI * (std::f64::consts::PI / 2.0 - 2.0);
        assert_abs_diff_eq!(variant_rhs_constant(&from_one), expected, epsilon = 1e-15);
        let full = crate::spectral::build_basis(BasisKind::DirichletNeumann, 1.0, 8).unwrap();
        // gamma0 L / 2 = 1 / gamma0
        assert_abs_diff_eq!(variant_rhs_constant(&full), 1.0 / full.gamma0(), epsilon = 1e-15);
    }

    #[test]
    fn report_errors() {
        let grid = TimeGrid::with_horizon(1e-3, 2.0).unwrap();
        let beta = Kernel::prony(0.0, &[(0.8, 2.0)]).unwrap();
        let a = Kernel::prony(1.0, &[(0.5, 1.0)]).unwrap();
        let bs = beta.to_signal(&grid, Quantity::Kernel).unwrap();
        let as_ = a.to_signal(&grid, Quantity::Kernel).unwrap();
        let rep = roundtrip_report(&beta, &a, &bs, &as_, 1.8).unwrap();
        assert_eq!(rep.beta.unwrap().error.unwrap().rel_l2, 0.0);
        assert_eq!(rep.a.unwrap().error.unwrap().max_error, 0.0);

        let shifted = bs.map(|v| v + 0.1);
        let rep = roundtrip_report(&beta, &a, &shifted, &as_, 1.8).unwrap();
        let n = report_count(&grid, 1.8);
        let norm_beta = bs.values()[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        let expected = 0.1 * (n as f64).sqrt() / norm_beta;
        assert_abs_diff_eq!(rep.beta.unwrap().error.unwrap().rel_l2, expected, epsilon = 1e-12);

        let json = serde_json::to_string(&rep).unwrap();
        let back: ReconstructionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn report_horizon_is_capped() {
        let grid = TimeGrid::with_horizon(0.1, 1.0).unwrap();
        let k = Kernel::constant(1.0);
        let s = k.to_signal(&grid, Quantity::Kernel).unwrap();
        let rep = roundtrip_report(&k, &k, &s, &s, 5.0).unwrap();
        assert!(rep.t_report <= 1.0 - 0.1 + 1e-12);
    }

    #[test]
    fn discrepancy_requires_noise() {
        let grid = TimeGrid::with_horizon(1e-2, 1.0).unwrap();
        let basis = crate::spectral::build_basis(BasisKind::DirichletDirichlet, 1.0, 4).unwrap();
        let h = Signal::from_fn(grid, Quantity::EnergyTrace, |_| 0.3);
        let tf = Signal::zeros(grid, Quantity::EnergyTrace);
        let s = StageSettings::for_noise(0.01);
        let r = identify_beta(&h, &tf, &InputSignal::unit_ramp(), &basis, &s, 0.0);
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
