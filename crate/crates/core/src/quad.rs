//! Uniform time grids, sampled signals and product-trapezoid convolution.
//!
//! Every convolution here is causal with zero history: for nodes
//! `t_m = m dt` the quadrature of `(u * v)(t_m) = int_0^{t_m} u(t_m - s) v(s) ds`
//! is
//!
//! ```text
//! w_m = dt [ u_m v_0 / 2 + sum_{j=1}^{m-1} u_{m-j} v_j + u_0 v_m / 2 ],   w_0 = 0.
//! ```
//!
//! The newest sample `v_m` enters linearly with weight `dt u_0 / 2`, which is
//! what lets the Volterra solvers step implicitly in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_j = j dt`, `j = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(Error::Config("time grid needs at least one step".into()));
        }
        Ok(Self { dt, steps })
    }

    /// Grid covering `[0, horizon]` with step `dt`; the horizon is rounded to
    /// the nearest whole number of steps.
    pub fn with_horizon(dt: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let steps = (horizon / dt).round() as usize;
        Self::new(dt, steps.max(1))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.t(self.steps)
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.t(j)).collect()
    }

    /// Index of the last node not exceeding `t`.
    pub fn index_at_or_before(&self, t: f64) -> usize {
        let j = (t / self.dt + 1e-9).floor();
        (j.max(0.0) as usize).min(self.steps)
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.steps == other.steps && (self.dt - other.dt).abs() <= 1e-12 * self.dt.max(other.dt)
    }

    pub fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "dt={} steps={} vs dt={} steps={}",
                self.dt, self.steps, other.dt, other.steps
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    Temperature,
    EnergyTrace,
    Flux,
    Kernel,
    Input,
    Generic,
}

/// Samples of a scalar function on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    grid: TimeGrid,
    values: Vec<f64>,
    quantity: Quantity,
}

impl Signal {
    pub fn new(grid: TimeGrid, values: Vec<f64>, quantity: Quantity) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "signal has {} samples, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, quantity })
    }

    pub fn from_fn(grid: TimeGrid, quantity: Quantity, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.t(j))).collect();
        Self { grid, values, quantity }
    }

    pub fn zeros(grid: TimeGrid, quantity: Quantity) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            quantity,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    pub fn with_quantity(mut self, quantity: Quantity) -> Self {
        self.quantity = quantity;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Signal {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Signal {
        Signal {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            quantity: self.quantity,
        }
    }

    /// `self + factor * other`, node-wise.
    pub fn axpy(&self, factor: f64, other: &Signal) -> Result<Signal> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Signal {
            grid: self.grid,
            values,
            quantity: self.quantity,
        })
    }

    /// Discrete L2 norm `sqrt(dt sum v_j^2)`.
    pub fn l2_norm(&self) -> f64 {
        l2_norm(self.grid.dt, &self.values)
    }
}

pub fn l2_norm(dt: f64, values: &[f64]) -> f64 {
    (dt * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `||a - b|| / ||b||` over the first `count` samples.
pub fn relative_l2(a: &[f64], b: &[f64], count: usize) -> f64 {
    let count = count.min(a.len()).min(b.len());
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a[..count].iter().zip(&b[..count]) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64], count: usize) -> f64 {
    a.iter()
        .zip(b)
        .take(count)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `sum_{j=1}^{m-1} u_{m-j} v_j`, the interior part of the trapezoid sum.
#[inline]
pub(crate) fn interior_sum(u: &[f64], v: &[f64], m: usize) -> f64 {
    if m < 2 {
        return 0.0;
    }
    u[1..m].iter().rev().zip(&v[1..m]).map(|(a, b)| a * b).sum()
}

/// Product-trapezoid convolution of two equally sampled sequences.
pub fn convolve_samples(dt: f64, u: &[f64], v: &[f64]) -> Vec<f64> {
    let n = u.len().min(v.len());
    let mut w = vec![0.0; n];
    for m in 1..n {
        w[m] = dt * (0.5 * (u[m] * v[0] + u[0] * v[m]) + interior_sum(u, v, m));
    }
    w
}

pub fn convolve(u: &Signal, v: &Signal) -> Result<Signal> {
    u.grid.check_same(&v.grid)?;
    Ok(Signal {
        grid: u.grid,
        values: convolve_samples(u.grid.dt, &u.values, &v.values),
        quantity: Quantity::Generic,
    })
}

/// Trapezoid running integral with value 0 at the first node.
pub fn cumulative_samples(dt: f64, u: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in u.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(u.len());
    out
}

pub fn cumulative_integral(u: &Signal) -> Signal {
    Signal {
        grid: u.grid,
        values: cumulative_samples(u.grid.dt, &u.values),
        quantity: Quantity::Generic,
    }
}

/// Split of the trapezoid convolution at node `m` into a known part and the
/// coefficient multiplying the still-unknown `v_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvStep {
    pub history: f64,
    pub new_point: f64,
}

impl ConvStep {
    pub fn assemble(&self, v_m: f64) -> f64 {
        self.history + self.new_point * v_m
    }
}

/// `v` must hold at least `v_0..v_{m-1}`; entries from `m` on are ignored.
pub fn implicit_conv_step(dt: f64, u: &[f64], v: &[f64], m: usize) -> ConvStep {
    assert!(m >= 1, "implicit step needs m >= 1");
    ConvStep {
        history: dt * (0.5 * u[m] * v[0] + interior_sum(u, v, m)),
        new_point: 0.5 * dt * u[0],
    }
}

/// Centered first difference, one-sided second-order stencils at both ends.
pub fn derivative_samples(dt: f64, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    assert!(n >= 3, "need at least three samples to differentiate");
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dt);
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dt);
    for j in 1..n - 1 {
        d[j] = (u[j + 1] - u[j - 1]) / (2.0 * dt);
    }
    d
}

/// Centered second difference, one-sided second-order stencils at both ends.
pub fn second_derivative_samples(dt: f64, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    assert!(n >= 4, "need at least four samples for a second derivative");
    let h2 = dt * dt;
    let mut d = vec![0.0; n];
    d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2;
    d[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / h2;
    for j in 1..n - 1 {
        d[j] = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / h2;
    }
    d
}
