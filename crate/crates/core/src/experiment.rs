//! Flat `key=value` experiment configuration and the three experiment
//! drivers: simulate, identify, sweep.
//!
//! ```text
//! # bar and basis
//! basis.L=1
//! basis.kind=dd
//! basis.N=256
//! grid.dt=0.001
//! grid.T=2
//! kernel.a=prony: base=1 terms=[(0.5,1)]
//! kernel.beta=prony: base=0 terms=[(0.8,2)]
//! drive.g=prony: base=1 terms=[]
//! noise.level=0.01
//! noise.seed=42
//! ```
//!
//! Relative paths (sampled kernel files, `output.dir`) resolve against the
//! directory holding the configuration file.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::deconv::{Method, RegularizationChoice, Selection, DEFAULT_TAU};
use crate::error::{Error, Result};
use crate::forward::{MeasurementSet, NoiseMetadata};
use crate::identify::{
    closure_check, identify_a, identify_beta, identify_beta_variant, kernel_error, IdentityConvention,
    ReconstructionReport, StageReport, StageResult, StageSettings,
};
use crate::io;
use crate::kernelspace::{InputSignal, Kernel, KernelSpec};
use crate::quad::{relative_l2, Signal, TimeGrid};
use crate::spectral::{build_basis, BasisKind, SpectralBasis};

pub const MEASUREMENTS_FILE: &str = "measurements.csv";
pub const VARIANT_FILE: &str = "variant_measurements.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const BETA_FILE: &str = "beta_hat.csv";
pub const A_FILE: &str = "a_hat.csv";
pub const REPORT_FILE: &str = "report.json";

/// Closure residual above which the stage-2 convention is refused.
pub const CLOSURE_THRESHOLD: f64 = 1e-3;

/// `auto` picks the direct product method on clean data and Lavrentiev with
/// the discrepancy principle on noisy data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Auto,
    Fixed(Method),
}

impl fmt::Display for MethodChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodChoice::Auto => "auto",
            MethodChoice::Fixed(Method::DirectProduct) => "direct",
            MethodChoice::Fixed(Method::ReduceToSecondKind) => "reduce",
            MethodChoice::Fixed(Method::Lavrentiev) => "lavrentiev",
        })
    }
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(MethodChoice::Auto),
            other => other.parse().map(MethodChoice::Fixed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub length: f64,
    pub basis_kind: BasisKind,
    pub modes: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Ground truth; `None` when identifying from external data.
    pub a: Option<KernelSpec>,
    pub beta: Option<KernelSpec>,
    pub g: KernelSpec,
    pub noise_level: f64,
    pub seed: u64,
    pub method: MethodChoice,
    pub selection: Selection,
    pub alpha: f64,
    pub tau: f64,
    pub variant: bool,
    pub variant_modes: usize,
    /// End of the error window; `None` means `0.9 T`.
    pub report_t: Option<f64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            basis_kind: BasisKind::DirichletDirichlet,
            modes: 256,
            dt: 1e-3,
            horizon: 2.0,
            a: Some(KernelSpec::Prony(
                crate::kernelspace::PronySum::new(1.0, &[(0.5, 1.0)]).expect("valid literal"),
            )),
            beta: Some(KernelSpec::Prony(
                crate::kernelspace::PronySum::new(0.0, &[(0.8, 2.0)]).expect("valid literal"),
            )),
            g: KernelSpec::Prony(crate::kernelspace::PronySum::new(1.0, &[]).expect("valid literal")),
            noise_level: 0.0,
            seed: 42,
            method: MethodChoice::Auto,
            selection: Selection::Discrepancy,
            alpha: 0.0,
            tau: DEFAULT_TAU,
            variant: false,
            variant_modes: 256,
            report_t: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{}`", v.trim())))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("`{key}`: expected true or false, got `{other}`"))),
    }
}

fn parse_truth(key: &str, v: &str) -> Result<Option<KernelSpec>> {
    if v.trim() == "unknown" {
        return Ok(None);
    }
    v.parse().map(Some).map_err(|e| Error::Config(format!("`{key}`: {e}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", lineno + 1)))?;
            let key = key.trim();
            if seen.insert(key.to_owned(), lineno).is_some() {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "basis.L" => self.length = parse_num(key, v)?,
            "basis.kind" => self.basis_kind = v.trim().parse().map_err(|e| Error::Config(format!("`{key}`: {e}")))?,
            "basis.N" => self.modes = parse_num(key, v)?,
            "grid.dt" => self.dt = parse_num(key, v)?,
            "grid.T" => self.horizon = parse_num(key, v)?,
            "kernel.a" => self.a = parse_truth(key, v)?,
            "kernel.beta" => self.beta = parse_truth(key, v)?,
            "drive.g" => self.g = v.parse().map_err(|e| Error::Config(format!("`{key}`: {e}")))?,
            "noise.level" => self.noise_level = parse_num(key, v)?,
            "noise.seed" => self.seed = parse_num(key, v)?,
            "reg.method" => self.method = v.parse().map_err(|e| Error::Config(format!("`{key}`: {e}")))?,
            "reg.selection" => {
                self.selection = match v.trim() {
                    "fixed" => Selection::Fixed,
                    "discrepancy" => Selection::Discrepancy,
                    other => return Err(Error::Config(format!("`{key}`: unknown selection `{other}`"))),
                }
            }
            "reg.alpha" => self.alpha = parse_num(key, v)?,
            "reg.tau" => self.tau = parse_num(key, v)?,
            "variant.enabled" => self.variant = parse_bool(key, v)?,
            "variant.N" => self.variant_modes = parse_num(key, v)?,
            "report.t" => {
                self.report_t = match v.trim() {
                    "auto" => None,
                    s => Some(parse_num(key, s)?),
                }
            }
            "output.dir" => {
                let p = v.trim();
                if p.is_empty() {
                    return Err(Error::Config("`output.dir` is empty".into()));
                }
                self.output_dir = PathBuf::from(p)
            }
            other => return Err(Error::UnknownKey(other.to_owned())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("basis.L", self.length),
            ("grid.dt", self.dt),
            ("grid.T", self.horizon),
            ("reg.tau", self.tau),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("`{k}` must be positive, got {v}")));
            }
        }
        if self.modes == 0 || self.variant_modes == 0 {
            return Err(Error::Config("mode counts must be positive".into()));
        }
        if self.dt >= self.horizon {
            return Err(Error::Config(format!(
                "grid.dt = {} must be below grid.T = {}",
                self.dt, self.horizon
            )));
        }
        if !(self.noise_level >= 0.0) || !self.noise_level.is_finite() {
            return Err(Error::Config(format!(
                "noise.level must be >= 0, got {}",
                self.noise_level
            )));
        }
        if self.tau <= 1.0 {
            return Err(Error::Config(format!("reg.tau must exceed 1, got {}", self.tau)));
        }
        if self.noise_level > 0.0 && self.method == MethodChoice::Fixed(Method::ReduceToSecondKind) {
            return Err(Error::Config(
                "reg.method=reduce differentiates the data twice and is disabled when noise.level > 0".into(),
            ));
        }
        if let Some(t) = self.report_t {
            if !(t > 0.0) {
                return Err(Error::Config(format!("report.t must be positive, got {t}")));
            }
        }
        self.regularization().validate()
    }

    /// Canonical text form: every key, fixed order. Parsing it back gives
    /// an equal configuration.
    pub fn to_text(&self) -> String {
        let truth = |k: &Option<KernelSpec>| k.as_ref().map_or("unknown".to_owned(), |s| s.to_string());
        let selection = match self.selection {
            Selection::Fixed => "fixed",
            Selection::Discrepancy => "discrepancy",
        };
        let report = self.report_t.map_or("auto".to_owned(), |t| format!("{t:?}"));
        format!(
            "basis.L={:?}\nbasis.kind={}\nbasis.N={}\ngrid.dt={:?}\ngrid.T={:?}\nkernel.a={}\nkernel.beta={}\n\
             drive.g={}\nnoise.level={:?}\nnoise.seed={}\nreg.method={}\nreg.selection={}\nreg.alpha={:?}\n\
             reg.tau={:?}\nvariant.enabled={}\nvariant.N={}\nreport.t={}\noutput.dir={}\n",
            self.length,
            self.basis_kind.as_str(),
            self.modes,
            self.dt,
            self.horizon,
            truth(&self.a),
            truth(&self.beta),
            self.g,
            self.noise_level,
            self.seed,
            self.method,
            selection,
            self.alpha,
            self.tau,
            self.variant,
            self.variant_modes,
            report,
            self.output_dir.display(),
        )
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::with_horizon(self.dt, self.horizon)
    }

    /// The measurement basis. A Dirichlet-Neumann `basis.kind` selects the
    /// insulated-end variant for stage 1; stage 2 always needs the
    /// Dirichlet-Dirichlet traces.
    pub fn main_basis(&self) -> Result<SpectralBasis> {
        build_basis(BasisKind::DirichletDirichlet, self.length, self.modes)
    }

    pub fn uses_variant(&self) -> bool {
        self.variant || self.basis_kind == BasisKind::DirichletNeumann
    }

    pub fn variant_basis(&self) -> Result<Option<SpectralBasis>> {
        if self.uses_variant() {
            build_basis(BasisKind::DirichletNeumann, self.length, self.variant_modes).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn regularization(&self) -> RegularizationChoice {
        match self.selection {
            Selection::Fixed => RegularizationChoice::fixed(self.alpha),
            Selection::Discrepancy => RegularizationChoice::discrepancy(self.tau),
        }
    }

    pub fn stage_settings(&self, noise_level: f64) -> StageSettings {
        match self.method {
            MethodChoice::Auto => {
                let mut s = StageSettings::for_noise(noise_level);
                if s.method == Method::Lavrentiev {
                    s.reg = self.regularization();
                }
                s
            }
            MethodChoice::Fixed(Method::Lavrentiev) => StageSettings {
                method: Method::Lavrentiev,
                reg: self.regularization(),
            },
            MethodChoice::Fixed(method) => StageSettings {
                method,
                reg: RegularizationChoice::none(),
            },
        }
    }

    pub fn t_report(&self) -> f64 {
        self.report_t.unwrap_or(0.9 * self.horizon).min(self.horizon - self.dt)
    }
}

/// Resolved physical inputs of a configuration.
pub struct Setup {
    pub grid: TimeGrid,
    pub basis: SpectralBasis,
    pub variant_basis: Option<SpectralBasis>,
    pub g: InputSignal,
    pub a: Option<Kernel>,
    pub beta: Option<Kernel>,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Self> {
        let resolve = |k: &Option<KernelSpec>| k.as_ref().map(|s| s.resolve(Some(base_dir))).transpose();
        Ok(Self {
            grid: cfg.grid()?,
            basis: cfg.main_basis()?,
            variant_basis: cfg.variant_basis()?,
            g: InputSignal::new(cfg.g.resolve(Some(base_dir))?),
            a: resolve(&cfg.a)?,
            beta: resolve(&cfg.beta)?,
        })
    }

    pub fn truth(&self) -> Option<(&Kernel, &Kernel)> {
        self.a.as_ref().zip(self.beta.as_ref())
    }

    /// Noiseless forward measurements from the ground-truth kernels.
    pub fn simulate_clean(&self) -> Result<MeasurementSet> {
        let (a, beta) = self
            .truth()
            .ok_or_else(|| Error::Config("simulation needs kernel.a and kernel.beta".into()))?;
        MeasurementSet::simulate(a, beta, &self.basis, &self.g, &self.grid, self.variant_basis.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub config: String,
    pub seed: u64,
    pub grid: GridInfo,
    pub basis_modes: usize,
    pub variant_modes: Option<usize>,
    pub h_tail: f64,
    pub noise: NoiseMetadata,
    pub files: Vec<String>,
}

pub fn output_dir(cfg: &ExperimentConfig, base_dir: &Path) -> PathBuf {
    if cfg.output_dir.is_relative() {
        base_dir.join(&cfg.output_dir)
    } else {
        cfg.output_dir.clone()
    }
}

/// Forward simulation plus optional noise; writes the measurement files and
/// a manifest into the output directory, which is returned.
pub fn run_simulate(cfg: &ExperimentConfig, base_dir: &Path) -> Result<PathBuf> {
    let setup = Setup::new(cfg, base_dir)?;
    let clean = setup.simulate_clean()?;
    let ms = if cfg.noise_level > 0.0 {
        clean.with_noise(cfg.noise_level, cfg.seed)?
    } else {
        clean
    };
    let dir = output_dir(cfg, base_dir);
    fs::create_dir_all(&dir)?;
    let mut main = ms.clone();
    main.variant_hl = None;
    main.variant_theta_l = None;
    io::write_measurements_csv(&dir.join(MEASUREMENTS_FILE), &main)?;
    let mut files = vec![MEASUREMENTS_FILE.to_owned()];
    if ms.variant_hl.is_some() {
        io::write_variant_csv(&dir.join(VARIANT_FILE), &ms)?;
        files.push(VARIANT_FILE.to_owned());
    }
    let manifest = Manifest {
        config_hash: cfg.hash(),
        config: cfg.to_text(),
        seed: cfg.seed,
        grid: GridInfo {
            dt: setup.grid.dt(),
            steps: setup.grid.steps(),
        },
        basis_modes: cfg.modes,
        variant_modes: setup.variant_basis.as_ref().map(|b| b.modes()),
        h_tail: ms.h_tail,
        noise: ms.noise,
        files,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    info!("wrote measurements for {} nodes to {}", setup.grid.len(), dir.display());
    Ok(dir)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Beta,
    A,
    Both,
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(Stage::Beta),
            "a" => Ok(Stage::A),
            "both" => Ok(Stage::Both),
            other => Err(Error::Config(format!("unknown stage `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentifyOptions {
    pub stage: Stage,
    /// Stage 1 from the insulated-end traces instead of the main ones.
    pub variant: bool,
}

#[derive(Debug, Clone)]
pub struct IdentifyOutput {
    pub beta_hat: Option<Signal>,
    pub a_hat: Option<Signal>,
    pub report: ReconstructionReport,
}

/// Per-channel noise deviations. A manifest written alongside the data is
/// authoritative; otherwise `level * RMS` of the noisy trace stands in.
fn channel_sigmas(ms: &MeasurementSet, level: f64) -> (f64, f64, f64) {
    let s = &ms.noise.sigma;
    if ms.noise.level > 0.0 {
        return (s.theta_f, s.y_f, s.variant_theta_l);
    }
    let est = |sig: Option<&Signal>| {
        sig.map_or(0.0, |s| {
            let v = s.values();
            level * (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
        })
    };
    (
        est(Some(&ms.theta_f)),
        est(Some(&ms.y_f)),
        est(ms.variant_theta_l.as_ref()),
    )
}

fn stage_report(r: &StageResult, truth: Option<&Kernel>, t_report: f64) -> Result<StageReport> {
    let error = truth.map(|k| kernel_error(k, &r.estimate, t_report)).transpose()?;
    Ok(StageReport::from_result(r, error))
}

/// Both stages on in-memory measurements. `beta_input` replaces stage 1
/// when only stage 2 runs; `clean` is the noiseless set used for the
/// closure check when the ground truth is known.
pub fn identify_measurements(
    cfg: &ExperimentConfig,
    setup: &Setup,
    ms: &MeasurementSet,
    clean: Option<&MeasurementSet>,
    opts: IdentifyOptions,
    beta_input: Option<Signal>,
) -> Result<IdentifyOutput> {
    let level = cfg.noise_level;
    let settings = cfg.stage_settings(level);
    let (sigma_theta, sigma_y, sigma_tl) = channel_sigmas(ms, level);
    let t_report = cfg.t_report();
    let truth = setup.truth();
    let mut report = ReconstructionReport {
        t_report,
        beta: None,
        a: None,
        variant_beta: None,
        closure: None,
        convention: None,
        noise_level: level,
    };

    let variant_result = if opts.variant {
        let dn = setup
            .variant_basis
            .as_ref()
            .ok_or_else(|| Error::Config("the variant needs variant.enabled=true or basis.kind=dn".into()))?;
        let (hl, tl) = ms
            .variant_hl
            .as_ref()
            .zip(ms.variant_theta_l.as_ref())
            .ok_or_else(|| Error::Invalid("variant traces are missing from the measurements".into()))?;
        let r = identify_beta_variant(hl, tl, &setup.g, dn, &settings, sigma_tl)?;
        report.variant_beta = Some(stage_report(&r, truth.map(|t| t.1), t_report)?);
        Some(r)
    } else {
        None
    };

    let beta_hat =
        match opts.stage {
            Stage::Beta | Stage::Both => {
                let est = match variant_result {
                    Some(r) => r.estimate,
                    None => {
                        let r = identify_beta(&ms.h, &ms.theta_f, &setup.g, &setup.basis, &settings, sigma_theta)?;
                        report.beta = Some(stage_report(&r, truth.map(|t| t.1), t_report)?);
                        r.estimate
                    }
                };
                Some(est)
            }
            Stage::A => Some(beta_input.ok_or_else(|| {
                Error::PipelineOrder("stage a needs a stage-1 estimate; run --stage beta first".into())
            })?),
        };

    let mut a_hat = None;
    if matches!(opts.stage, Stage::A | Stage::Both) {
        let conv = IdentityConvention::validated(&setup.basis);
        if let (Some((a, beta)), Some(clean)) = (truth, clean) {
            let closure = closure_check(
                clean,
                a,
                beta,
                &setup.basis,
                setup.variant_basis.as_ref(),
                &setup.g,
                &conv,
            )?;
            report.closure = Some(closure);
            let worst = closure.worst();
            if worst > CLOSURE_THRESHOLD {
                return Err(Error::Convention {
                    identity: "stage-2 flux identity".into(),
                    residual: worst,
                    threshold: CLOSURE_THRESHOLD,
                });
            }
        }
        report.convention = Some(conv);
        let beta_kernel = Kernel::from_signal(beta_hat.as_ref().expect("set above"));
        let r = identify_a(&ms.k, &ms.y_f, &beta_kernel, &setup.g, &conv, &settings, sigma_y)?;
        report.a = Some(stage_report(&r, truth.map(|t| t.0), t_report)?);
        a_hat = Some(r.estimate);
    }

    Ok(IdentifyOutput {
        beta_hat: if opts.stage == Stage::A { None } else { beta_hat },
        a_hat,
        report,
    })
}

fn read_manifest(dir: &Path) -> Option<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
    match serde_json::from_str(&text) {
        Ok(m) => Some(m),
        Err(e) => {
            warn!("ignoring unreadable manifest in {}: {e}", dir.display());
            None
        }
    }
}

/// Reads measurement files, identifies, and writes `beta_hat.csv`,
/// `a_hat.csv` and `report.json` into the output directory.
pub fn run_identify(
    cfg: &ExperimentConfig,
    base_dir: &Path,
    measurements: &Path,
    opts: IdentifyOptions,
) -> Result<IdentifyOutput> {
    let setup = Setup::new(cfg, base_dir)?;
    let mut ms = io::read_measurements_csv(measurements)?;
    let data_dir = measurements.parent().unwrap_or(Path::new("."));
    if let Some(m) = read_manifest(data_dir) {
        ms.noise = m.noise;
        ms.h_tail = m.h_tail;
    }
    if !ms.grid().same_as(&setup.grid) {
        return Err(Error::GridMismatch(format!(
            "measurements have dt = {} and {} steps; the configuration asks for dt = {} and {} steps",
            ms.grid().dt(),
            ms.grid().steps(),
            setup.grid.dt(),
            setup.grid.steps()
        )));
    }
    if opts.variant && ms.variant_hl.is_none() {
        let (hl, tl) = io::read_variant_csv(&data_dir.join(VARIANT_FILE))?;
        ms.variant_hl = Some(hl);
        ms.variant_theta_l = Some(tl);
    }
    let out_dir = output_dir(cfg, base_dir);
    fs::create_dir_all(&out_dir)?;
    let beta_input = if opts.stage == Stage::A {
        let path = out_dir.join(BETA_FILE);
        if !path.exists() {
            return Err(Error::PipelineOrder(format!(
                "stage a needs {}; run --stage beta first",
                path.display()
            )));
        }
        Some(io::read_kernel_csv(&path)?)
    } else {
        None
    };
    let clean = match (opts.stage, setup.truth()) {
        (Stage::Beta, _) | (_, None) => None,
        _ if ms.noise.level == 0.0 && cfg.noise_level == 0.0 => Some(ms.clone()),
        _ => Some(setup.simulate_clean()?),
    };
    let out = identify_measurements(cfg, &setup, &ms, clean.as_ref(), opts, beta_input)?;
    if let Some(b) = &out.beta_hat {
        io::write_kernel_csv(&out_dir.join(BETA_FILE), b)?;
    }
    if let Some(a) = &out.a_hat {
        io::write_kernel_csv(&out_dir.join(A_FILE), a)?;
    }
    fs::write(
        out_dir.join(REPORT_FILE),
        serde_json::to_string_pretty(&out.report)? + "\n",
    )?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Noise,
    Dt,
    Modes,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Noise => "noise",
            SweepAxis::Dt => "dt",
            SweepAxis::Modes => "modes",
        }
    }

    /// `{0, 0.5%, 1%, 2%}` for noise, three halvings of `dt`, and three
    /// doublings of `N` up to the configured count.
    pub fn default_values(self, cfg: &ExperimentConfig) -> Vec<f64> {
        match self {
            SweepAxis::Noise => vec![0.0, 0.005, 0.01, 0.02],
            SweepAxis::Dt => (0..4).map(|k| cfg.dt / f64::from(1u32 << k)).collect(),
            SweepAxis::Modes => (0..4).rev().map(|k| (cfg.modes >> k).max(1) as f64).collect(),
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(SweepAxis::Noise),
            "dt" => Ok(SweepAxis::Dt),
            "modes" => Ok(SweepAxis::Modes),
            other => Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub beta_error: f64,
    pub a_error: f64,
    pub alpha_beta: f64,
    pub alpha_a: f64,
}

fn sweep_point(cfg: &ExperimentConfig, base_dir: &Path, axis: SweepAxis, value: f64) -> Result<SweepRow> {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Noise => c.noise_level = value,
        SweepAxis::Dt => c.dt = value,
        SweepAxis::Modes => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::Config(format!(
                    "mode count must be a positive integer, got {value}"
                )));
            }
            c.modes = value as usize
        }
    }
    c.validate()?;
    let setup = Setup::new(&c, base_dir)?;
    let clean = setup.simulate_clean()?;
    let ms = if c.noise_level > 0.0 {
        clean.with_noise(c.noise_level, c.seed)?
    } else {
        clean.clone()
    };
    let opts = IdentifyOptions {
        stage: Stage::Both,
        variant: false,
    };
    let out = identify_measurements(&c, &setup, &ms, Some(&clean), opts, None)?;
    let err = |s: &Option<StageReport>| s.as_ref().and_then(|r| r.error).map_or(f64::NAN, |e| e.rel_l2);
    let alpha = |s: &Option<StageReport>| s.as_ref().map_or(f64::NAN, |r| r.alpha);
    Ok(SweepRow {
        value,
        beta_error: err(&out.report.beta),
        a_error: err(&out.report.a),
        alpha_beta: alpha(&out.report.beta),
        alpha_a: alpha(&out.report.a),
    })
}

/// One identification per value along `axis`, run concurrently; rows come
/// back in input order.
pub fn sweep(cfg: &ExperimentConfig, base_dir: &Path, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("empty sweep".into()));
    }
    if cfg.truth().is_none() {
        return Err(Error::Config("a sweep needs kernel.a and kernel.beta".into()));
    }
    values
        .par_iter()
        .map(|&v| sweep_point(cfg, base_dir, axis, v))
        .collect()
}

impl ExperimentConfig {
    fn truth(&self) -> Option<(&KernelSpec, &KernelSpec)> {
        self.a.as_ref().zip(self.beta.as_ref())
    }
}

pub fn sweep_file_name(axis: SweepAxis) -> String {
    format!("sweep_{}.csv", axis.as_str())
}

pub fn write_sweep_csv(path: &Path, axis: SweepAxis, rows: &[SweepRow]) -> Result<()> {
    let mut text = format!("{},beta_rel_l2,a_rel_l2,alpha_beta,alpha_a\n", axis.as_str());
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.value, r.beta_error, r.a_error, r.alpha_beta, r.alpha_a
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Runs the sweep and writes `sweep_<axis>.csv` into the output directory.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    base_dir: &Path,
    axis: SweepAxis,
    values: &[f64],
) -> Result<(PathBuf, Vec<SweepRow>)> {
    let rows = sweep(cfg, base_dir, axis, values)?;
    let dir = output_dir(cfg, base_dir);
    fs::create_dir_all(&dir)?;
    let path = dir.join(sweep_file_name(axis));
    write_sweep_csv(&path, axis, &rows)?;
    Ok((path, rows))
}

/// Observed orders `log2(e_k / e_{k+1})` between consecutive rows.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Relative L2 gap between two reconstructions over the report window.
pub fn estimate_gap(a: &Signal, b: &Signal, t_report: f64) -> Result<f64> {
    a.grid().check_same(b.grid())?;
    let n = crate::identify::report_count(a.grid(), t_report);
    Ok(relative_l2(a.values(), b.values(), n))
}
