//! Sine eigenbases of the 1-D Laplacian on `(0, L)`.
//!
//! * Dirichlet-Dirichlet: `lambda_n = n pi / L`, `n >= 1`.
//! * Dirichlet-Neumann: `lambda_n = (n + 1/2) pi / L`; the complete basis
//!   starts at `n = 0`, the index set used in some derivations starts at 1.
//!
//! In both cases `phi_n(x) = gamma0 sin(lambda_n x)` with `gamma0 = sqrt(2/L)`,
//! so `phi_n'(0) / lambda_n = gamma0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of spatial quadrature nodes for projections.
pub const DEFAULT_SPATIAL_NODES: usize = 1025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    DirichletDirichlet,
    DirichletNeumann,
}

impl BasisKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisKind::DirichletDirichlet => "dd",
            BasisKind::DirichletNeumann => "dn",
        }
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dd" | "dirichlet-dirichlet" | "dirichletdirichlet" => Ok(BasisKind::DirichletDirichlet),
            "dn" | "dirichlet-neumann" | "dirichletneumann" => Ok(BasisKind::DirichletNeumann),
            other => Err(Error::Parse(format!("unknown basis kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    kind: BasisKind,
    length: f64,
    start_index: usize,
    gamma0: f64,
    indices: Vec<usize>,
    lambdas: Vec<f64>,
}

/// Mean weights `alpha_n = lambda_n int_0^L phi_n dx` and trace signs `(-1)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeWeights {
    pub alpha: Vec<f64>,
    pub sign_trace: Vec<f64>,
}

impl SpectralBasis {
    /// DD modes start at `n = 1`, DN modes at `n = 0` (complete basis).
    pub fn new(kind: BasisKind, length: f64, modes: usize) -> Result<Self> {
        let start = match kind {
            BasisKind::DirichletDirichlet => 1,
            BasisKind::DirichletNeumann => 0,
        };
        Self::with_start_index(kind, length, modes, start)
    }

    pub fn with_start_index(kind: BasisKind, length: f64, modes: usize, start_index: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!("bar length must be positive, got {length}")));
        }
        if modes == 0 {
            return Err(Error::Config("mode count must be at least 1".into()));
        }
        if kind == BasisKind::DirichletDirichlet && start_index == 0 {
            return Err(Error::Config("Dirichlet-Dirichlet modes start at n = 1".into()));
        }
        if start_index > 1 {
            return Err(Error::Config(format!("start index must be 0 or 1, got {start_index}")));
        }
        let indices: Vec<usize> = (start_index..start_index + modes).collect();
        let lambdas = indices
            .iter()
            .map(|&n| match kind {
                BasisKind::DirichletDirichlet => n as f64 * PI / length,
                BasisKind::DirichletNeumann => (n as f64 + 0.5) * PI / length,
            })
            .collect();
        Ok(Self {
            kind,
            length,
            start_index,
            gamma0: (2.0 / length).sqrt(),
            indices,
            lambdas,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.lambdas[i]
    }

    /// Mathematical index `n` of the `i`-th stored mode.
    pub fn index(&self, i: usize) -> usize {
        self.indices[i]
    }

    pub fn sign(&self, i: usize) -> f64 {
        if self.indices[i].is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn phi(&self, i: usize, x: f64) -> f64 {
        self.gamma0 * (self.lambdas[i] * x).sin()
    }

    pub fn phi_prime(&self, i: usize, x: f64) -> f64 {
        self.gamma0 * self.lambdas[i] * (self.lambdas[i] * x).cos()
    }

    /// Closed-form boundary traces at `x = L`: `phi_n'(L) = gamma0 (-1)^n lambda_n`
    /// for DD, `phi_n(L) = gamma0 (-1)^n` for DN.
    pub fn trace_at_end(&self, i: usize) -> f64 {
        match self.kind {
            BasisKind::DirichletDirichlet => self.gamma0 * self.sign(i) * self.lambdas[i],
            BasisKind::DirichletNeumann => self.gamma0 * self.sign(i),
        }
    }

    /// `alpha_n` with `int_0^L phi_n dx = alpha_n / lambda_n`.
    pub fn alpha(&self, i: usize) -> f64 {
        match self.kind {
            BasisKind::DirichletDirichlet => {
                if self.indices[i] % 2 == 1 {
                    2.0 * self.gamma0
                } else {
                    0.0
                }
            }
            BasisKind::DirichletNeumann => self.gamma0,
        }
    }

    pub fn weights(&self) -> ModeWeights {
        ModeWeights {
            alpha: (0..self.modes()).map(|i| self.alpha(i)).collect(),
            sign_trace: (0..self.modes()).map(|i| self.sign(i)).collect(),
        }
    }

    pub fn synthesize(&self, coefficients: &[f64], x: f64) -> f64 {
        coefficients.iter().enumerate().map(|(i, c)| c * self.phi(i, x)).sum()
    }
}

pub fn build_basis(kind: BasisKind, length: f64, modes: usize) -> Result<SpectralBasis> {
    SpectralBasis::new(kind, length, modes)
}

/// The linear stationary profile with modal coefficients `1 / lambda_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialInitialState {
    pub coefficients: Vec<f64>,
    length: f64,
    gamma0: f64,
}

impl SpecialInitialState {
    /// `(1 / gamma0) (1 - x / L)` on `[0, L]`; the value at 0 is the limit from the right.
    pub fn profile(&self, x: f64) -> f64 {
        (1.0 - x / self.length) / self.gamma0
    }

    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&x| self.profile(x)).collect()
    }

    /// `int_0^L xi_0 dx = L / (2 gamma0) = L^{3/2} / (2 sqrt 2)`.
    pub fn integral(&self) -> f64 {
        self.length / (2.0 * self.gamma0)
    }
}

pub fn special_initial_state(basis: &SpectralBasis) -> Result<SpecialInitialState> {
    if basis.kind != BasisKind::DirichletDirichlet {
        return Err(Error::Unsupported(
            "the linear special state is defined for the Dirichlet-Dirichlet basis; \
             the Dirichlet-Neumann variant uses the coefficients 1/lambda_n directly"
                .into(),
        ));
    }
    Ok(SpecialInitialState {
        coefficients: basis.lambdas.iter().map(|l| 1.0 / l).collect(),
        length: basis.length,
        gamma0: basis.gamma0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConstants {
    /// `sum alpha_n / lambda_n^2` over the full index set, closed form.
    pub mean_sum: f64,
    /// The same sum over the stored modes only.
    pub mean_sum_truncated: f64,
    /// `sum (-1)^n / lambda_n` over the full index set, closed form.
    pub alt_sum: f64,
}

impl SeriesConstants {
    /// Mass of the stored-mode truncation, `sum_{n > N} alpha_n / lambda_n^2`.
    pub fn mean_tail(&self) -> f64 {
        self.mean_sum - self.mean_sum_truncated
    }
}

/// `sum_{n >= 1} (-1)^n / (n + 1/2) = pi/2 - 2`.
pub const DN_ALTERNATING_CONSTANT: f64 = PI / 2.0 - 2.0;

pub fn series_constants(basis: &SpectralBasis) -> SeriesConstants {
    let l = basis.length;
    let g = basis.gamma0;
    let scale = l / PI;
    let (mean_sum, alt_sum) = match (basis.kind, basis.start_index) {
        // sum over odd n of 2 gamma0 L^2 / (n pi)^2 = gamma0 L^2 / 4
        (BasisKind::DirichletDirichlet, _) => (g * l * l / 4.0, -scale * std::f64::consts::LN_2),
        // sum_{n>=0} 1/(n+1/2)^2 = pi^2/2, sum_{n>=0} (-1)^n/(n+1/2) = pi/2
        (BasisKind::DirichletNeumann, 0) => (g * scale * scale * PI * PI / 2.0, scale * PI / 2.0),
        (BasisKind::DirichletNeumann, _) => (
            g * scale * scale * (PI * PI / 2.0 - 4.0),
            scale * DN_ALTERNATING_CONSTANT,
        ),
    };
    let mean_sum_truncated = (0..basis.modes())
        .map(|i| basis.alpha(i) / (basis.lambdas[i] * basis.lambdas[i]))
        .sum();
    SeriesConstants {
        mean_sum,
        mean_sum_truncated,
        alt_sum,
    }
}

/// Partial sums `S_1..S_count` of `sum_{n >= 1} (-1)^n / (n + 1/2)`.
pub fn dn_partial_sums(count: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=count)
        .map(|n| {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign / (n as f64 + 0.5);
            acc
        })
        .collect()
}

/// Sum of an alternating series by repeated averaging of consecutive partial
/// sums (Euler transform). `terms` are the signed terms in order.
pub fn accelerated_alternating_sum(terms: &[f64]) -> f64 {
    let mut partial: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    while partial.len() > 1 {
        partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    partial.first().copied().unwrap_or(0.0)
}

/// Weights that turn a plain sum over `count` terms into the mean of its last
/// quarter of partial sums: `w_i = min(1, (count - i) / q)`, `q = max(1, count/4)`.
pub fn cesaro_weights(count: usize) -> Vec<f64> {
    let q = (count / 4).max(1);
    (0..count).map(|i| ((count - i) as f64 / q as f64).min(1.0)).collect()
}

pub fn spatial_nodes(length: f64, intervals: usize) -> Vec<f64> {
    let dx = length / intervals as f64;
    (0..=intervals).map(|i| i as f64 * dx).collect()
}

/// `xi_n = int_0^L xi(x) phi_n(x) dx` by composite trapezoid; `profile` holds
/// samples on a uniform grid spanning `[0, L]` end to end.
pub fn project(profile: &[f64], basis: &SpectralBasis, i: usize) -> Result<f64> {
    if profile.len() < 2 {
        return Err(Error::Config(format!(
            "projection needs a spatial grid with at least 2 nodes, got {}",
            profile.len()
        )));
    }
    if i >= basis.modes() {
        return Err(Error::Config(format!(
            "mode {i} outside basis of {} modes",
            basis.modes()
        )));
    }
    let intervals = profile.len() - 1;
    let dx = basis.length / intervals as f64;
    let mut sum = 0.0;
    for (j, v) in profile.iter().enumerate() {
        let w = if j == 0 || j == intervals { 0.5 } else { 1.0 };
        sum += w * v * basis.phi(i, j as f64 * dx);
    }
    Ok(sum * dx)
}

pub fn project_all(profile: &[f64], basis: &SpectralBasis) -> Result<Vec<f64>> {
    (0..basis.modes()).map(|i| project(profile, basis, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigenvalue_examples() {
        let dd = build_basis(BasisKind::DirichletDirichlet, PI, 3).unwrap();
        for (l, e) in dd.lambdas().iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*l, e, epsilon = 1e-14);
        }
        let dn = SpectralBasis::with_start_index(BasisKind::DirichletNeumann, PI, 2, 1).unwrap();
        assert_abs_diff_eq!(dn.lambda(0), 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(dn.lambda(1), 2.5, epsilon = 1e-14);
        let complete = build_basis(BasisKind::DirichletNeumann, PI, 2).unwrap();
        assert_abs_diff_eq!(complete.lambda(0), 0.5, epsilon = 1e-14);
        assert_eq!(
            build_basis(BasisKind::DirichletDirichlet, 2.0, 1).unwrap().gamma0(),
            1.0
        );
    }

    #[test]
    fn invalid_configuration() {
        assert!(build_basis(BasisKind::DirichletDirichlet, 0.0, 3).is_err());
        assert!(build_basis(BasisKind::DirichletDirichlet, -1.0, 3).is_err());
        assert!(build_basis(BasisKind::DirichletDirichlet, 1.0, 0).is_err());
        assert!(SpectralBasis::with_start_index(BasisKind::DirichletDirichlet, 1.0, 3, 0).is_err());
    }

    #[test]
    fn trace_identities() {
        for kind in [BasisKind::DirichletDirichlet, BasisKind::DirichletNeumann] {
            let b = build_basis(kind, 1.3, 64).unwrap();
            for i in 0..b.modes() {
                let lam = b.lambda(i);
                assert_abs_diff_eq!(b.phi_prime(i, 0.0) / lam, b.gamma0(), epsilon = 1e-13);
                match kind {
                    BasisKind::DirichletDirichlet => {
                        let rel = (b.phi_prime(i, b.length()) - b.trace_at_end(i)) / lam;
                        assert_abs_diff_eq!(rel, 0.0, epsilon = 1e-11);
                    }
                    BasisKind::DirichletNeumann => {
                        assert_abs_diff_eq!(b.phi(i, b.length()), b.trace_at_end(i), epsilon = 1e-11);
                    }
                }
                let integral = b.alpha(i) / lam;
                let exact = b.gamma0() * (1.0 - (lam * b.length()).cos()) / lam;
                assert_abs_diff_eq!(integral, exact, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dd_mean_weights() {
        let b = build_basis(BasisKind::DirichletDirichlet, 1.0, 6).unwrap();
        let w = b.weights();
        for i in 0..6 {
            let n = b.index(i);
            let expected = if n % 2 == 1 { 2.0 * b.gamma0() } else { 0.0 };
            assert_eq!(w.alpha[i], expected);
            assert_eq!(w.sign_trace[i], if n.is_multiple_of(2) { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn discrete_orthonormality() {
        for kind in [BasisKind::DirichletDirichlet, BasisKind::DirichletNeumann] {
            let b = build_basis(kind, 2.0, 8).unwrap();
            let nodes = spatial_nodes(2.0, 4096);
            for m in 0..8 {
                let phi_m: Vec<f64> = nodes.iter().map(|&x| b.phi(m, x)).collect();
                for n in 0..8 {
                    let expected = if m == n { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(project(&phi_m, &b, n).unwrap(), expected, epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        let b = build_basis(BasisKind::DirichletDirichlet, 1.0, 16).unwrap();
        let nodes = spatial_nodes(1.0, DEFAULT_SPATIAL_NODES - 1);
        let phi1: Vec<f64> = nodes.iter().map(|&x| b.phi(0, x)).collect();
        assert_abs_diff_eq!(project(&phi1, &b, 0).unwrap(), 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(project(&phi1, &b, 1).unwrap(), 0.0, epsilon = 1e-5);
        let zero = vec![0.0; nodes.len()];
        assert!(project_all(&zero, &b).unwrap().iter().all(|c| *c == 0.0));
        assert!(project(&[1.0], &b, 0).is_err());

        let xi0 = special_initial_state(&b).unwrap();
        let mut samples = xi0.sample(&nodes);
        // the boundary value is pinned to zero by the Dirichlet condition
        samples[0] = 0.0;
        let coeffs = project_all(&samples, &b).unwrap();
        for (c, l) in coeffs.iter().zip(b.lambdas()) {
            assert_abs_diff_eq!(*c, 1.0 / l, epsilon = 2e-3 / l);
        }
    }

    #[test]
    fn special_state_closed_form() {
        let b = build_basis(BasisKind::DirichletDirichlet, 1.0, 8).unwrap();
        let s = special_initial_state(&b).unwrap();
        assert_abs_diff_eq!(s.profile(0.0), 0.5f64.sqrt(), epsilon = 1e-15);
        for (i, c) in s.coefficients.iter().enumerate() {
            assert_abs_diff_eq!(*c, 1.0 / ((i + 1) as f64 * PI), epsilon = 1e-15);
        }
        // oracle: the sine series summed term by term near the left end; the
        // truncation error of N terms at x is about gamma0 / (N pi^2 x)
        let x = 1e-3;
        let terms = 100_000;
        let series: f64 = (1..=terms)
            .map(|n| {
                let lam = n as f64 * PI;
                b.gamma0() * (lam * x).sin() / lam
            })
            .sum();
        let tail = 2.0 * b.gamma0() / (terms as f64 * PI * PI * x);
        assert_abs_diff_eq!(series, s.profile(x), epsilon = tail);
        assert_abs_diff_eq!(s.profile(x), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-3);

        assert_abs_diff_eq!(s.integral(), std::f64::consts::FRAC_1_SQRT_2 / 2.0, epsilon = 1e-7);
        let nodes = spatial_nodes(1.0, 1000);
        let quad = crate::quad::cumulative_samples(1e-3, &s.sample(&nodes));
        assert_abs_diff_eq!(quad[1000], s.integral(), epsilon = 1e-12);
        // cross-check: sum alpha_n / lambda_n^2 over many odd modes
        let partial: f64 = (1..=200_000usize)
            .step_by(2)
            .map(|n| 2.0 * b.gamma0() / (n as f64 * PI).powi(2))
            .sum();
        assert_abs_diff_eq!(partial, s.integral(), epsilon = 1e-6);

        let dn = build_basis(BasisKind::DirichletNeumann, 1.0, 8).unwrap();
        assert!(matches!(special_initial_state(&dn), Err(Error::Unsupported(_))));
    }

    #[test]
    fn dd_mean_sum_against_partial_sum() {
        let b = build_basis(BasisKind::DirichletDirichlet, 1.0, 4).unwrap();
        let c = series_constants(&b);
        assert_abs_diff_eq!(c.mean_sum, 2f64.sqrt() / 4.0, epsilon = 1e-15);
        let partial: f64 = (1..=1_000_000usize)
            .step_by(2)
            .map(|n| 2.0 * b.gamma0() / (n as f64 * PI).powi(2))
            .sum();
        assert_abs_diff_eq!(partial, c.mean_sum, epsilon = 1e-6);
        assert!(c.mean_tail() > 0.0);
    }

    #[test]
    fn dn_constant_by_acceleration() {
        let terms: Vec<f64> = (1..=60)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } / (n as f64 + 0.5))
            .collect();
        let s = accelerated_alternating_sum(&terms);
        assert_abs_diff_eq!(s, DN_ALTERNATING_CONSTANT, epsilon = 1e-10);
        assert_abs_diff_eq!(DN_ALTERNATING_CONSTANT, -0.4292037, epsilon = 1e-7);
    }

    #[test]
    fn leibniz_bound_and_enclosure() {
        let partial = dn_partial_sums(5000);
        for (k, s) in partial.iter().enumerate() {
            let n = (k + 1) as f64;
            assert!((s - DN_ALTERNATING_CONSTANT).abs() <= 1.0 / (n + 1.5));
            // odd partial sums sit below the limit, even ones above
            if (k + 1) % 2 == 1 {
                assert!(*s < DN_ALTERNATING_CONSTANT);
            } else {
                assert!(*s > DN_ALTERNATING_CONSTANT);
            }
        }
    }

    #[test]
    fn closed_form_constants_by_basis() {
        let l = 1.7;
        let from_one = SpectralBasis::with_start_index(BasisKind::DirichletNeumann, l, 8, 1).unwrap();
        assert_abs_diff_eq!(
            series_constants(&from_one).alt_sum,
            l / PI * DN_ALTERNATING_CONSTANT,
            epsilon = 1e-15
        );
        let full = build_basis(BasisKind::DirichletNeumann, l, 60).unwrap();
        assert_abs_diff_eq!(series_constants(&full).alt_sum, l / 2.0, epsilon = 1e-14);
        let terms: Vec<f64> = (0..60).map(|i| full.sign(i) / full.lambda(i)).collect();
        assert_abs_diff_eq!(accelerated_alternating_sum(&terms), l / 2.0, epsilon = 1e-9);
        // DN mean sum: every alpha equals gamma0
        let partial: f64 = (0..400_000)
            .map(|n| full.gamma0() / ((n as f64 + 0.5) * PI / l).powi(2))
            .sum();
        assert_abs_diff_eq!(partial, series_constants(&full).mean_sum, epsilon = 1e-6);
    }

    #[test]
    fn cesaro_weights_average_last_quarter() {
        let terms: Vec<f64> = (1..=64)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } / n as f64)
            .collect();
        let w = cesaro_weights(terms.len());
        let weighted: f64 = terms.iter().zip(&w).map(|(a, b)| a * b).sum();
        let partial: Vec<f64> = terms
            .iter()
            .scan(0.0, |acc, t| {
                *acc += t;
                Some(*acc)
            })
            .collect();
        let mean = partial[48..].iter().sum::<f64>() / 16.0;
        assert_abs_diff_eq!(weighted, mean, epsilon = 1e-14);
        assert!((weighted + std::f64::consts::LN_2).abs() < 1e-3);
    }

    proptest::proptest! {
        #[test]
        fn project_inverts_synthesize(coeffs in proptest::collection::vec(-2.0f64..2.0, 1..12)) {
            let b = build_basis(BasisKind::DirichletDirichlet, 1.0, coeffs.len()).unwrap();
            let nodes = spatial_nodes(1.0, 2048);
            let samples: Vec<f64> = nodes.iter().map(|&x| b.synthesize(&coeffs, x)).collect();
            let back = project_all(&samples, &b).unwrap();
            for (c, r) in coeffs.iter().zip(&back) {
                proptest::prop_assert!((c - r).abs() < 1e-5);
            }
        }
    }
}
