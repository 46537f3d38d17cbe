//! Modal forward solver and synthesis of the boundary measurements.
//!
//! With zero history the temperature satisfies, in integrated form,
//! `theta + beta * theta - A * theta_xx = xi`, `A(t) = int_0^t a`. Each sine
//! mode then obeys a scalar second-kind Volterra equation. The normalized
//! response `z_n` solves `z + (beta + lambda_n^2 A) * z = 1`.
//!
//! Flux traces are the heat flux leaving through `x = L`,
//! `q(L, t) = -(a * theta_x)(L, t)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deconv::solve_second_kind_samples;
use crate::error::{Error, Result};
use crate::kernelspace::{validate_flux_kernel, InputSignal, Kernel};
use crate::quad::{convolve_samples, Quantity, Signal, TimeGrid};
use crate::spectral::{cesaro_weights, series_constants, BasisKind, SpectralBasis};

/// Kernel samples shared by all modes.
#[derive(Debug, Clone)]
pub struct ModalKernels {
    grid: TimeGrid,
    a: Vec<f64>,
    beta: Vec<f64>,
    a_integral: Vec<f64>,
}

impl ModalKernels {
    pub fn new(a: &Kernel, beta: &Kernel, grid: &TimeGrid) -> Result<Self> {
        validate_flux_kernel(a).into_result()?;
        Ok(Self {
            grid: *grid,
            a: a.sample(grid)?,
            beta: beta.sample(grid)?,
            a_integral: a.sample_integral(grid)?,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// The discrete mode equation is a leapfrog recursion at leading order and
    /// needs `lambda dt sqrt(a(0)) < 2`.
    pub fn check_step(&self, lambda: f64) -> Result<()> {
        let courant = lambda * self.grid.dt() * self.a[0].sqrt();
        if courant >= 2.0 {
            return Err(Error::Unstable(format!(
                "lambda dt sqrt(a(0)) = {courant:.3} >= 2; use dt < {:e}",
                2.0 / (lambda * self.a[0].sqrt())
            )));
        }
        Ok(())
    }

    fn mode_kernel(&self, lambda: f64) -> Vec<f64> {
        let l2 = lambda * lambda;
        self.beta
            .iter()
            .zip(&self.a_integral)
            .map(|(b, a)| b + l2 * a)
            .collect()
    }

    pub fn solve_z(&self, lambda: f64) -> Result<Vec<f64>> {
        self.check_step(lambda)?;
        let ones = vec![1.0; self.grid.len()];
        solve_second_kind_samples(self.grid.dt(), 1.0, &self.mode_kernel(lambda), &ones)
    }

    /// `w + (beta + lambda^2 A) * w = forcing`.
    pub fn solve_forced(&self, lambda: f64, forcing: &[f64]) -> Result<Vec<f64>> {
        self.check_step(lambda)?;
        solve_second_kind_samples(self.grid.dt(), 1.0, &self.mode_kernel(lambda), forcing)
    }
}

/// Drive-derived samples: `F = int g` and `h = g + beta * g`.
#[derive(Debug, Clone)]
struct DriveSamples {
    f: Vec<f64>,
    h: Vec<f64>,
    /// `F + beta * F`, the lifted forcing before the modal factor.
    lifted: Vec<f64>,
}

impl DriveSamples {
    fn new(g: &InputSignal, beta: &[f64], grid: &TimeGrid) -> Result<Self> {
        let dt = grid.dt();
        let gs = g.sample_g(grid)?;
        let f = g.sample_f(grid)?;
        let h = add(&gs, &convolve_samples(dt, beta, &gs));
        let lifted = add(&f, &convolve_samples(dt, beta, &f));
        Ok(Self { f, h, lifted })
    }
}

fn scaled(c: f64, u: &[f64]) -> Vec<f64> {
    u.iter().map(|v| c * v).collect()
}

fn add(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a + b).collect()
}

fn check_drive(g: &InputSignal) -> Result<()> {
    let f0 = g.f_at(0.0)?;
    if f0 != 0.0 {
        return Err(Error::Invalid(format!(
            "boundary drive must start from f(0) = 0, got {f0}"
        )));
    }
    Ok(())
}

/// `z_n` for a single mode.
pub fn solve_zn(a: &Kernel, beta: &Kernel, lambda_n: f64, grid: &TimeGrid) -> Result<Signal> {
    let z = ModalKernels::new(a, beta, grid)?.solve_z(lambda_n)?;
    Signal::new(*grid, z, Quantity::Generic)
}

/// `theta_n = xi_n z_n + (gamma0 / lambda_n) [F - h * z_n]`, assembled from
/// `z_n` alone.
pub fn solve_theta_n(
    a: &Kernel,
    beta: &Kernel,
    lambda_n: f64,
    gamma0: f64,
    xi_n: f64,
    g: &InputSignal,
    grid: &TimeGrid,
) -> Result<Signal> {
    check_drive(g)?;
    let kernels = ModalKernels::new(a, beta, grid)?;
    let z = kernels.solve_z(lambda_n)?;
    let drive = DriveSamples::new(g, kernels.beta(), grid)?;
    let hz = convolve_samples(grid.dt(), &drive.h, &z);
    let c = gamma0 / lambda_n;
    let theta = (0..grid.len())
        .map(|j| xi_n * z[j] + c * (drive.f[j] - hz[j]))
        .collect();
    Signal::new(*grid, theta, Quantity::Temperature)
}

/// The same modal coefficient by stepping the lifted mode equation directly.
pub fn solve_theta_n_direct(
    a: &Kernel,
    beta: &Kernel,
    lambda_n: f64,
    gamma0: f64,
    xi_n: f64,
    g: &InputSignal,
    grid: &TimeGrid,
) -> Result<Signal> {
    check_drive(g)?;
    let kernels = ModalKernels::new(a, beta, grid)?;
    let drive = DriveSamples::new(g, kernels.beta(), grid)?;
    let c = gamma0 / lambda_n;
    let forcing: Vec<f64> = drive.lifted.iter().map(|v| xi_n - c * v).collect();
    let v = kernels.solve_forced(lambda_n, &forcing)?;
    let theta = v.iter().zip(&drive.f).map(|(v, f)| v + c * f).collect();
    Signal::new(*grid, theta, Quantity::Temperature)
}

/// Per-mode histories for one basis: `z_n`, `a * z_n`, and the drive
/// remainder `w_n` (modal coefficient of `theta - F lift`) with `a * w_n`.
#[derive(Debug, Clone)]
pub struct ModalState {
    basis: SpectralBasis,
    grid: TimeGrid,
    f: Vec<f64>,
    z: Vec<Vec<f64>>,
    az: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    aw: Vec<Vec<f64>>,
}

impl ModalState {
    pub fn compute(a: &Kernel, beta: &Kernel, basis: &SpectralBasis, g: &InputSignal, grid: &TimeGrid) -> Result<Self> {
        check_drive(g)?;
        let kernels = ModalKernels::new(a, beta, grid)?;
        kernels.check_step(*basis.lambdas().last().unwrap())?;
        let drive = DriveSamples::new(g, kernels.beta(), grid)?;
        let driven = !g.is_zero();
        let dt = grid.dt();
        let g0 = basis.gamma0();
        let modes: Vec<_> = basis
            .lambdas()
            .par_iter()
            .map(|&lambda| -> Result<_> {
                let z = kernels.solve_z(lambda)?;
                let az = convolve_samples(dt, kernels.a(), &z);
                let (w, aw) = if driven {
                    // representation through z_n: w_n = -(gamma0 / lambda_n) h * z_n
                    let c = -g0 / lambda;
                    let w = scaled(c, &convolve_samples(dt, &drive.h, &z));
                    let aw = scaled(c, &convolve_samples(dt, &drive.h, &az));
                    (w, aw)
                } else {
                    (vec![0.0; grid.len()], vec![0.0; grid.len()])
                };
                Ok((z, az, w, aw))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut state = Self {
            basis: basis.clone(),
            grid: *grid,
            f: drive.f,
            z: Vec::with_capacity(modes.len()),
            az: Vec::with_capacity(modes.len()),
            w: Vec::with_capacity(modes.len()),
            aw: Vec::with_capacity(modes.len()),
        };
        for (z, az, w, aw) in modes {
            state.z.push(z);
            state.az.push(az);
            state.w.push(w);
            state.aw.push(aw);
        }
        Ok(state)
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn z(&self, i: usize) -> &[f64] {
        &self.z[i]
    }

    pub fn w(&self, i: usize) -> &[f64] {
        &self.w[i]
    }

    /// Full modal coefficient `theta_n` for initial coefficient `xi_n`.
    pub fn theta(&self, i: usize, xi_n: f64) -> Vec<f64> {
        let c = self.basis.gamma0() / self.basis.lambda(i);
        (0..self.grid.len())
            .map(|j| xi_n * self.z[i][j] + c * self.f[j] + self.w[i][j])
            .collect()
    }

    fn weighted_sum(&self, series: &[Vec<f64>], coeff: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (i, s) in series.iter().enumerate() {
            let c = coeff(i);
            if c == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(s) {
                *o += c * v;
            }
        }
        out
    }

    fn require(&self, kind: BasisKind) -> Result<()> {
        if self.basis.kind() != kind {
            return Err(Error::Unsupported(format!(
                "measurement needs a {} basis, got {}",
                kind.as_str(),
                self.basis.kind().as_str()
            )));
        }
        Ok(())
    }

    /// `H = sum alpha_n z_n / lambda_n^2` over the stored modes.
    pub fn energy_trace_h(&self) -> Result<Signal> {
        self.require(BasisKind::DirichletDirichlet)?;
        let b = &self.basis;
        let h = self.weighted_sum(&self.z, |i| b.alpha(i) / (b.lambda(i) * b.lambda(i)));
        Signal::new(self.grid, h, Quantity::EnergyTrace)
    }

    /// Flux at `L` for the special initial state, `K = -gamma0 sum (-1)^n a * z_n`,
    /// summed with Cesaro weights.
    pub fn flux_trace_k(&self) -> Result<Signal> {
        self.require(BasisKind::DirichletDirichlet)?;
        let b = &self.basis;
        let cw = cesaro_weights(b.modes());
        let k = self.weighted_sum(&self.az, |i| -b.gamma0() * b.sign(i) * cw[i]);
        Signal::new(self.grid, k, Quantity::Flux)
    }

    /// Bar energy `int theta dx` under the boundary drive: the lifting
    /// `F (1 - x/L)` contributes `F L / 2` exactly.
    pub fn energy_trace_theta_f(&self) -> Result<Signal> {
        self.require(BasisKind::DirichletDirichlet)?;
        let b = &self.basis;
        let modal = self.weighted_sum(&self.w, |i| b.alpha(i) / b.lambda(i));
        let half = 0.5 * b.length();
        let v = modal.iter().zip(&self.f).map(|(m, f)| half * f + m).collect();
        Signal::new(self.grid, v, Quantity::EnergyTrace)
    }

    /// Flux at `L` under the boundary drive:
    /// `(1/L)(a * F) - gamma0 sum (-1)^n lambda_n (a * w_n)`.
    pub fn flux_trace_y_f(&self, a: &[f64]) -> Result<Signal> {
        self.require(BasisKind::DirichletDirichlet)?;
        let b = &self.basis;
        let cw = cesaro_weights(b.modes());
        let modal = self.weighted_sum(&self.aw, |i| -b.gamma0() * b.sign(i) * b.lambda(i) * cw[i]);
        let af = convolve_samples(self.grid.dt(), a, &self.f);
        let v = modal.iter().zip(&af).map(|(m, x)| x / b.length() + m).collect();
        Signal::new(self.grid, v, Quantity::Flux)
    }

    /// Temperature at the insulated end for the state with coefficients
    /// `1 / lambda_n` (the constant `1/gamma0` on the complete basis).
    pub fn variant_trace_hl(&self) -> Result<Signal> {
        self.require(BasisKind::DirichletNeumann)?;
        let b = &self.basis;
        let cw = cesaro_weights(b.modes());
        let v = self.weighted_sum(&self.z, |i| b.gamma0() * b.sign(i) * cw[i] / b.lambda(i));
        Signal::new(self.grid, v, Quantity::Temperature)
    }

    /// Temperature at the insulated end under the boundary drive; the
    /// constant lifting `F` satisfies both boundary conditions.
    pub fn variant_trace_theta_l(&self) -> Result<Signal> {
        self.require(BasisKind::DirichletNeumann)?;
        let b = &self.basis;
        let cw = cesaro_weights(b.modes());
        let modal = self.weighted_sum(&self.w, |i| b.gamma0() * b.sign(i) * cw[i]);
        let v = modal.iter().zip(&self.f).map(|(m, f)| f + m).collect();
        Signal::new(self.grid, v, Quantity::Temperature)
    }

    /// Temperature field `theta(x, t_j)` (rows indexed by time) for the
    /// boundary-drive experiment plus an optional initial state.
    pub fn field(&self, x: &[f64], xi: Option<&[f64]>) -> Vec<Vec<f64>> {
        let b = &self.basis;
        let phi: Vec<Vec<f64>> = (0..b.modes())
            .map(|i| x.iter().map(|&xv| b.phi(i, xv)).collect())
            .collect();
        let lift: Vec<f64> = x
            .iter()
            .map(|&xv| match b.kind() {
                BasisKind::DirichletDirichlet => 1.0 - xv / b.length(),
                BasisKind::DirichletNeumann => 1.0,
            })
            .collect();
        (0..self.grid.len())
            .map(|j| {
                let mut row: Vec<f64> = lift.iter().map(|l| l * self.f[j]).collect();
                for (i, p) in phi.iter().enumerate() {
                    let c = self.w[i][j] + xi.map_or(0.0, |xi| xi[i] * self.z[i][j]);
                    for (r, pv) in row.iter_mut().zip(p) {
                        *r += c * pv;
                    }
                }
                row
            })
            .collect()
    }
}

pub fn measure_h(a: &Kernel, beta: &Kernel, basis: &SpectralBasis, grid: &TimeGrid) -> Result<Signal> {
    ModalState::compute(a, beta, basis, &InputSignal::new(Kernel::zero()), grid)?.energy_trace_h()
}

pub fn measure_k(a: &Kernel, beta: &Kernel, basis: &SpectralBasis, grid: &TimeGrid) -> Result<Signal> {
    ModalState::compute(a, beta, basis, &InputSignal::new(Kernel::zero()), grid)?.flux_trace_k()
}

pub fn measure_theta_f(
    a: &Kernel,
    beta: &Kernel,
    basis: &SpectralBasis,
    g: &InputSignal,
    grid: &TimeGrid,
) -> Result<Signal> {
    ModalState::compute(a, beta, basis, g, grid)?.energy_trace_theta_f()
}

pub fn measure_y_f(
    a: &Kernel,
    beta: &Kernel,
    basis: &SpectralBasis,
    g: &InputSignal,
    grid: &TimeGrid,
) -> Result<Signal> {
    let state = ModalState::compute(a, beta, basis, g, grid)?;
    state.flux_trace_y_f(&a.sample(grid)?)
}

/// `(variant_HL, variant_thetaL)` on the complete Dirichlet-Neumann basis.
pub fn variant_measurements(
    a: &Kernel,
    beta: &Kernel,
    basis: &SpectralBasis,
    g: &InputSignal,
    grid: &TimeGrid,
) -> Result<(Signal, Signal)> {
    if basis.kind() != BasisKind::DirichletNeumann {
        return Err(Error::Unsupported(
            "variant measurements need a Dirichlet-Neumann basis".into(),
        ));
    }
    if basis.start_index() != 0 {
        return Err(Error::Unsupported(
            "variant measurements are simulated on the complete basis (n >= 0)".into(),
        ));
    }
    let state = ModalState::compute(a, beta, basis, g, grid)?;
    Ok((state.variant_trace_hl()?, state.variant_trace_theta_l()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelNoise {
    pub h: f64,
    pub k: f64,
    pub theta_f: f64,
    pub y_f: f64,
    pub variant_hl: f64,
    pub variant_theta_l: f64,
}

/// Relative level, seed, and the absolute per-sample standard deviation
/// that was applied to each channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseMetadata {
    pub level: f64,
    pub seed: u64,
    pub sigma: ChannelNoise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub h: Signal,
    pub k: Signal,
    pub theta_f: Signal,
    pub y_f: Signal,
    pub variant_hl: Option<Signal>,
    pub variant_theta_l: Option<Signal>,
    /// `sum_{n > N} alpha_n / lambda_n^2`, the mass missing from `H`.
    pub h_tail: f64,
    pub noise: NoiseMetadata,
}

impl MeasurementSet {
    /// Noiseless measurements; the variant traces are simulated when a
    /// Dirichlet-Neumann basis is supplied.
    pub fn simulate(
        a: &Kernel,
        beta: &Kernel,
        basis: &SpectralBasis,
        g: &InputSignal,
        grid: &TimeGrid,
        variant: Option<&SpectralBasis>,
    ) -> Result<Self> {
        if basis.kind() != BasisKind::DirichletDirichlet {
            return Err(Error::Unsupported(
                "main measurements need a Dirichlet-Dirichlet basis".into(),
            ));
        }
        let state = ModalState::compute(a, beta, basis, g, grid)?;
        let (variant_hl, variant_theta_l) = match variant {
            Some(dn) => {
                let (hl, tl) = variant_measurements(a, beta, dn, g, grid)?;
                (Some(hl), Some(tl))
            }
            None => (None, None),
        };
        Ok(Self {
            h: state.energy_trace_h()?,
            k: state.flux_trace_k()?,
            theta_f: state.energy_trace_theta_f()?,
            y_f: state.flux_trace_y_f(&a.sample(grid)?)?,
            variant_hl,
            variant_theta_l,
            h_tail: series_constants(basis).mean_tail(),
            noise: NoiseMetadata::default(),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.h.grid()
    }

    /// Independent Gaussian noise on every channel, one random stream per
    /// channel derived from `seed`.
    pub fn with_noise(&self, level: f64, seed: u64) -> Result<Self> {
        let mut out = self.clone();
        let mut sigma = ChannelNoise::default();
        let (s, v) = noisy_channel(&self.h, level, seed, 0)?;
        out.h = s;
        sigma.h = v;
        let (s, v) = noisy_channel(&self.k, level, seed, 1)?;
        out.k = s;
        sigma.k = v;
        let (s, v) = noisy_channel(&self.theta_f, level, seed, 2)?;
        out.theta_f = s;
        sigma.theta_f = v;
        let (s, v) = noisy_channel(&self.y_f, level, seed, 3)?;
        out.y_f = s;
        sigma.y_f = v;
        if let Some(hl) = &self.variant_hl {
            let (s, v) = noisy_channel(hl, level, seed, 4)?;
            out.variant_hl = Some(s);
            sigma.variant_hl = v;
        }
        if let Some(tl) = &self.variant_theta_l {
            let (s, v) = noisy_channel(tl, level, seed, 5)?;
            out.variant_theta_l = Some(s);
            sigma.variant_theta_l = v;
        }
        out.noise = NoiseMetadata { level, seed, sigma };
        Ok(out)
    }
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

fn noisy_channel(s: &Signal, level: f64, seed: u64, stream: u64) -> Result<(Signal, f64)> {
    if !(level >= 0.0) || !level.is_finite() {
        return Err(Error::Invalid(format!("noise level must be >= 0, got {level}")));
    }
    let sd = level * rms(s.values());
    if sd == 0.0 {
        return Ok((s.clone(), 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let normal = Normal::new(0.0, sd).map_err(|e| Error::Invalid(e.to_string()))?;
    let values = s.values().iter().map(|v| v + normal.sample(&mut rng)).collect();
    Ok((Signal::new(*s.grid(), values, s.quantity())?, sd))
}

/// I.i.d. Gaussian perturbation with standard deviation `level * RMS(s)`.
pub fn add_noise(s: &Signal, level: f64, seed: u64) -> Result<Signal> {
    Ok(noisy_channel(s, level, seed, 0)?.0)
}

#[derive(Debug, Clone)]
pub enum BoundarySpec {
    /// `theta(0, t) = f(t)`, `theta(L, t) = 0`.
    DirichletDirichlet(InputSignal),
    /// `theta(0, t) = f(t)`, `theta_x(L, t) = 0`.
    DirichletNeumann(InputSignal),
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    pub grid: TimeGrid,
    /// `field[j][i] = theta(x_i, t_j)`.
    pub field: Vec<Vec<f64>>,
    /// `q(0, t) = -(a * theta_x)(0, t)`.
    pub flux_left: Vec<f64>,
    /// `q(L, t) = -(a * theta_x)(L, t)`.
    pub flux_right: Vec<f64>,
}

impl OracleSolution {
    pub fn trace_right(&self) -> Vec<f64> {
        self.field.iter().map(|row| *row.last().unwrap()).collect()
    }
}

/// Largest interval count whose spacing respects `dt <= dx / sqrt(a(0))`.
pub fn courant_intervals(length: f64, a0: f64, dt: f64) -> usize {
    ((length / (a0.sqrt() * dt)) * (1.0 - 1e-12)).floor().max(2.0) as usize
}

/// Finite differences in space on `intervals` cells, product trapezoid in
/// time applied to the integrated equation. `A(0) = 0` makes each step
/// explicit in the newest value.
pub fn fd_oracle(
    a: &Kernel,
    beta: &Kernel,
    length: f64,
    boundary: &BoundarySpec,
    initial: &dyn Fn(f64) -> f64,
    intervals: usize,
    grid: &TimeGrid,
) -> Result<OracleSolution> {
    validate_flux_kernel(a).into_result()?;
    if intervals < 3 {
        return Err(Error::Config("oracle needs at least 3 spatial intervals".into()));
    }
    let dx = length / intervals as f64;
    let a0 = a.value_at_zero();
    let limit = dx / a0.sqrt();
    if grid.dt() > limit * (1.0 + 1e-12) {
        return Err(Error::StepRestriction { dt: grid.dt(), limit });
    }
    let dt = grid.dt();
    let av = a.sample(grid)?;
    let bv = beta.sample(grid)?;
    let big_a = a.sample_integral(grid)?;
    let (drive, neumann) = match boundary {
        BoundarySpec::DirichletDirichlet(g) => (g, false),
        BoundarySpec::DirichletNeumann(g) => (g, true),
    };
    let f = drive.sample_f(grid)?;
    let x: Vec<f64> = (0..=intervals).map(|i| i as f64 * dx).collect();
    let nodes = intervals + 1;
    // unknown nodes: 1..intervals-1 (Dirichlet right) or 1..=intervals (Neumann)
    let last = if neumann { intervals } else { intervals - 1 };
    let inv_dx2 = 1.0 / (dx * dx);

    let laplacian = |row: &[f64]| -> Vec<f64> {
        let mut d = vec![0.0; nodes];
        for i in 1..intervals {
            d[i] = (row[i + 1] - 2.0 * row[i] + row[i - 1]) * inv_dx2;
        }
        if neumann {
            // ghost node mirrors theta_{N-1}
            d[intervals] = 2.0 * (row[intervals - 1] - row[intervals]) * inv_dx2;
        }
        d
    };

    let mut row0: Vec<f64> = x.iter().map(|&xv| initial(xv)).collect();
    row0[0] = f[0];
    if !neumann {
        row0[intervals] = 0.0;
    }
    let xi = row0.clone();
    let mut field = Vec::with_capacity(grid.len());
    let mut lap = Vec::with_capacity(grid.len());
    lap.push(laplacian(&row0));
    field.push(row0);
    let denom = 1.0 + 0.5 * dt * bv[0];
    let mut acc = vec![0.0; nodes];
    for m in 1..grid.len() {
        // theta_m (1 + dt/2 beta_0) = xi - dt[beta_m theta_0 / 2 + sum beta_{m-j} theta_j]
        //                             + dt[A_m lap_0 / 2 + sum A_{m-j} lap_j]
        acc.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..m {
            let w = if j == 0 { 0.5 } else { 1.0 };
            let cb = -w * dt * bv[m - j];
            let ca = w * dt * big_a[m - j];
            let (th, lp) = (&field[j], &lap[j]);
            for i in 1..=last {
                acc[i] += cb * th[i] + ca * lp[i];
            }
        }
        let mut row = vec![0.0; nodes];
        row[0] = f[m];
        for i in 1..=last {
            row[i] = (xi[i] + acc[i]) / denom;
        }
        lap.push(laplacian(&row));
        field.push(row);
    }

    let gradient_right: Vec<f64> = field
        .iter()
        .map(|r| {
            if neumann {
                0.0
            } else {
                (3.0 * r[intervals] - 4.0 * r[intervals - 1] + r[intervals - 2]) / (2.0 * dx)
            }
        })
        .collect();
    let gradient_left: Vec<f64> = field
        .iter()
        .map(|r| (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * dx))
        .collect();
    let flux_right = convolve_samples(dt, &av, &gradient_right).iter().map(|v| -v).collect();
    let flux_left = convolve_samples(dt, &av, &gradient_left).iter().map(|v| -v).collect();
    Ok(OracleSolution {
        x,
        grid: *grid,
        field,
        flux_left,
        flux_right,
    })
}

/// `sqrt(sum (u - v)^2 / sum v^2)` over all entries of two equally shaped fields.
pub fn field_relative_l2(u: &[Vec<f64>], v: &[Vec<f64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (ru, rv) in u.iter().zip(v) {
        for (a, b) in ru.iter().zip(rv) {
            num += (a - b) * (a - b);
            den += b * b;
        }
    }
    (num / den).sqrt()
}
