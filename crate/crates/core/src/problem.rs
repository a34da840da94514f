//! JSON problem files and recovery reports.
//!
//! A problem names its instance `kind`, carries a [`RecoveryConfig`], the
//! instance setup, and either a ground-truth model (to synthesize
//! measurements), a measurement record (to recover from), or both.
//! Complex numbers are `[re, im]` pairs; matrices and records are lists of
//! rows.

use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::annihilator::{AnnihilatorResult, MeasurementRecord, RecoveryConfig};
use crate::channel::{unit_square_grid, ChannelInstance, ChannelModel, ChannelProbeSetup, TfShift};
use crate::classic::{ClassicInstance, Frequency};
use crate::confluent::{ConfluentInstance, PolynomialMode};
use crate::dynamical::{fourier_basis, standard_basis, DynamicalInstance, DynamicalProblem, GeneralizedEigenbasis};
use crate::error::{contract, PronyError, Result};
use crate::numerics::ComplexMatrix;
use crate::oracle::{synthesize, InstanceTruth, Noise, SynthesisRequest};
use crate::recovery::{
    run_recovery, validate_symbol, SparseSignalModel, SpectralInstance, SymbolChecks, ValidationReport, Warning,
};

/// Grid sizes for [`Problem::validate_symbol`].
pub const CIRCLE_GRID: usize = 1000;
pub const SQUARE_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize, P: Serialize", deserialize = "S: Deserialize<'de>, P: Deserialize<'de>"))]
pub struct ProblemSpec<S, P> {
    pub config: RecoveryConfig,
    pub setup: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<SparseSignalModel<P>>,
    /// Largest measurement index for synthesis; defaults to `2 kappa M - 1`.
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Noise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurements: Option<MeasurementRecord>,
}

/// Sample basis of a dynamical problem: `"standard"`, `"fourier"`, or an
/// explicit list of vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleBasisSpec {
    Named(String),
    Explicit(Vec<Vec<C64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicalSetup {
    pub a: ComplexMatrix,
    /// Generalized eigenbasis; may be omitted when `a` is diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<GeneralizedEigenbasis>,
    pub sample_basis: SampleBasisSpec,
    /// Zero-based sampled indices.
    pub indices: Vec<usize>,
    pub beta: f64,
}

impl DynamicalSetup {
    pub fn to_problem(&self) -> Result<DynamicalProblem> {
        let d = self.a.rows();
        let basis = match &self.basis {
            Some(b) => b.clone(),
            None => {
                let off_diag = (0..d).any(|i| (0..self.a.cols()).any(|j| i != j && self.a[(i, j)].norm() != 0.0));
                if off_diag {
                    return contract("a non-diagonal 'a' needs an explicit 'basis'");
                }
                GeneralizedEigenbasis::standard(&(0..d).map(|i| self.a[(i, i)]).collect::<Vec<_>>())
            }
        };
        let sample = match &self.sample_basis {
            SampleBasisSpec::Named(n) if n == "standard" => standard_basis(d),
            SampleBasisSpec::Named(n) if n == "fourier" => fourier_basis(d),
            SampleBasisSpec::Named(n) => {
                return contract(format!("unknown sample_basis '{n}' (use standard or fourier)"))
            }
            SampleBasisSpec::Explicit(v) => v.clone(),
        };
        DynamicalProblem::new(self.a.clone(), basis, sample, self.indices.clone(), self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    Classic(ProblemSpec<ClassicInstance, Frequency>),
    Confluent(ProblemSpec<ConfluentInstance, Frequency>),
    Dynamical(ProblemSpec<DynamicalSetup, C64>),
    Channel(ProblemSpec<ChannelProbeSetup, TfShift>),
}

/// Dispatches `$body` with `$inst` bound to the concrete instance and
/// `$spec` to the problem body.
macro_rules! with_instance {
    ($problem:expr, |$spec:ident, $inst:ident| $body:expr) => {
        match $problem {
            Problem::Classic($spec) => {
                let $inst = $spec.setup.clone();
                $body
            }
            Problem::Confluent($spec) => {
                let $inst = $spec.setup;
                $body
            }
            Problem::Dynamical($spec) => {
                let $inst = DynamicalInstance::new($spec.setup.to_problem()?)?;
                $body
            }
            Problem::Channel($spec) => {
                let $inst = ChannelInstance::new($spec.setup.clone())?;
                $body
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub timing: bool,
}

/// Per-truth-point comparison of a recovery with the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    /// Same number of points and a one-to-one nearest-point matching.
    pub support_matched: bool,
    pub max_point_error: Option<f64>,
    pub max_coeff_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "P: Serialize", deserialize = "P: Deserialize<'de>"))]
pub struct ReportBody<P> {
    pub model: SparseSignalModel<P>,
    pub annihilator: AnnihilatorResult,
    pub coefficient_residual: f64,
    pub coefficient_rank: usize,
    pub warnings: Vec<Warning>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_comparison: Option<TruthComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Classic(ReportBody<Frequency>),
    Confluent(ReportBody<Frequency>),
    Dynamical(ReportBody<C64>),
    Channel(ReportBody<TfShift>),
}

impl Report {
    pub fn warnings(&self) -> &[Warning] {
        match self {
            Report::Classic(b) | Report::Confluent(b) => &b.warnings,
            Report::Dynamical(b) => &b.warnings,
            Report::Channel(b) => &b.warnings,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.warnings().is_empty()
    }

    pub fn truth_comparison(&self) -> Option<&TruthComparison> {
        match self {
            Report::Classic(b) | Report::Confluent(b) => b.truth_comparison.as_ref(),
            Report::Dynamical(b) => b.truth_comparison.as_ref(),
            Report::Channel(b) => b.truth_comparison.as_ref(),
        }
    }

    /// Pretty JSON with a trailing newline; identical inputs give identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Planar coordinates of a point for plotting.
pub trait PlotPoint {
    fn plot_xy(&self, coeffs: &[C64]) -> (f64, f64);
}

impl PlotPoint for Frequency {
    /// `(gamma, |c|)`.
    fn plot_xy(&self, coeffs: &[C64]) -> (f64, f64) {
        (self.value(), coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
    }
}

impl PlotPoint for C64 {
    fn plot_xy(&self, _: &[C64]) -> (f64, f64) {
        (self.re, self.im)
    }
}

impl PlotPoint for TfShift {
    fn plot_xy(&self, _: &[C64]) -> (f64, f64) {
        (self.t, self.nu)
    }
}

/// Truth and recovered points in plot coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotData {
    pub kind: &'static str,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub truth: Vec<(f64, f64)>,
    pub recovered: Vec<(f64, f64)>,
}

fn plot_coords<P: PlotPoint>(model: &SparseSignalModel<P>) -> Vec<(f64, f64)> {
    model.modes.iter().map(|m| m.gamma.plot_xy(&m.coeffs)).collect()
}

fn compare<I: SpectralInstance>(
    inst: &I,
    truth: &SparseSignalModel<I::Point>,
    got: &SparseSignalModel<I::Point>,
) -> TruthComparison {
    if truth.is_empty() || got.is_empty() {
        return TruthComparison {
            support_matched: truth.len() == got.len(),
            max_point_error: if truth.len() == got.len() { Some(0.0) } else { None },
            max_coeff_error: if truth.len() == got.len() { Some(0.0) } else { None },
        };
    }
    let mut used = vec![false; got.len()];
    let mut one_to_one = true;
    let (mut pe, mut ce) = (0.0f64, 0.0f64);
    for t in &truth.modes {
        let (j, d) = got
            .modes
            .iter()
            .enumerate()
            .map(|(j, g)| (j, inst.distance(&t.gamma, &g.gamma)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        one_to_one &= !used[j];
        used[j] = true;
        pe = pe.max(d);
        let g = &got.modes[j].coeffs;
        let n = t.coeffs.len().max(g.len());
        let zero = C64::new(0.0, 0.0);
        for k in 0..n {
            let a = t.coeffs.get(k).copied().unwrap_or(zero);
            let b = g.get(k).copied().unwrap_or(zero);
            ce = ce.max((a - b).norm());
        }
    }
    TruthComparison {
        support_matched: one_to_one && truth.len() == got.len(),
        max_point_error: Some(pe),
        max_coeff_error: Some(ce),
    }
}

fn effective_config<I: SpectralInstance>(cfg: &RecoveryConfig, inst: &I) -> Result<RecoveryConfig> {
    let mut cfg = cfg.clone();
    cfg.m = cfg.m.max(inst.mode_dimension());
    cfg.validate()?;
    Ok(cfg)
}

fn run_body<I: SpectralInstance>(
    inst: &I,
    spec: &ProblemSpec<impl Clone, I::Point>,
    opts: RunOptions,
) -> Result<ReportBody<I::Point>> {
    let meas =
        spec.measurements.as_ref().ok_or_else(|| PronyError::Contract("problem has no 'measurements'".into()))?;
    let cfg = effective_config(&spec.config, inst)?;
    let start = Instant::now();
    let rec = run_recovery(meas, inst, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let truth_comparison = spec.truth.as_ref().map(|t| compare(inst, t, &rec.model));
    Ok(ReportBody {
        model: rec.model,
        annihilator: rec.annihilator,
        coefficient_residual: rec.coefficient_residual,
        coefficient_rank: rec.coefficient_rank,
        warnings: rec.warnings,
        truth_comparison,
        timing_ms: opts.timing.then_some(elapsed),
    })
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PronyError::Contract(format!("invalid problem file: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("problems serialize");
        s.push('\n');
        s
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Classic(_) => "classic",
            Problem::Confluent(_) => "confluent",
            Problem::Dynamical(_) => "dynamical",
            Problem::Channel(_) => "channel",
        }
    }

    pub fn config(&self) -> &RecoveryConfig {
        match self {
            Problem::Classic(s) => &s.config,
            Problem::Confluent(s) => &s.config,
            Problem::Dynamical(s) => &s.config,
            Problem::Channel(s) => &s.config,
        }
    }

    pub fn config_mut(&mut self) -> &mut RecoveryConfig {
        match self {
            Problem::Classic(s) => &mut s.config,
            Problem::Confluent(s) => &mut s.config,
            Problem::Dynamical(s) => &mut s.config,
            Problem::Channel(s) => &mut s.config,
        }
    }

    pub fn noise_mut(&mut self) -> &mut Option<Noise> {
        match self {
            Problem::Classic(s) => &mut s.noise,
            Problem::Confluent(s) => &mut s.noise,
            Problem::Dynamical(s) => &mut s.noise,
            Problem::Channel(s) => &mut s.noise,
        }
    }

    pub fn has_truth(&self) -> bool {
        match self {
            Problem::Classic(s) => s.truth.is_some(),
            Problem::Confluent(s) => s.truth.is_some(),
            Problem::Dynamical(s) => s.truth.is_some(),
            Problem::Channel(s) => s.truth.is_some(),
        }
    }

    /// Checks the config, the setup, and the truth model against the instance.
    pub fn validate(&self) -> Result<()> {
        with_instance!(self, |spec, inst| {
            let cfg = effective_config(&spec.config, &inst)?;
            if let Some(t) = &spec.truth {
                t.validate(&inst)?;
                if t.len() > cfg.kappa {
                    return contract(format!("truth has {} points but kappa = {}", t.len(), cfg.kappa));
                }
            }
            if let Some(m) = &spec.measurements {
                if m.channels() != inst.channels() {
                    return contract(format!(
                        "measurements have {} channels, setup has {}",
                        m.channels(),
                        inst.channels()
                    ));
                }
            }
            Ok(())
        })
    }

    /// Forward-evaluates the ground truth.
    pub fn synthesize(&self) -> Result<MeasurementRecord> {
        self.validate()?;
        let missing = || PronyError::Contract("problem has no ground truth ('truth')".into());
        let (truth, l_max, noise) = match self {
            Problem::Classic(s) => (
                InstanceTruth::Classic { instance: s.setup.clone(), model: s.truth.clone().ok_or_else(missing)? },
                s.l_max,
                s.noise,
            ),
            Problem::Confluent(s) => {
                let t = s.truth.clone().ok_or_else(missing)?;
                let modes = t.modes.into_iter().map(PolynomialMode::from).collect();
                (InstanceTruth::Confluent { instance: s.setup, modes }, s.l_max, s.noise)
            }
            Problem::Dynamical(s) => (
                InstanceTruth::Dynamical {
                    problem: s.setup.to_problem()?,
                    model: s.truth.clone().ok_or_else(missing)?,
                },
                s.l_max,
                s.noise,
            ),
            Problem::Channel(s) => {
                let t = s.truth.as_ref().ok_or_else(missing)?;
                (
                    InstanceTruth::Channel { setup: s.setup.clone(), model: ChannelModel::from_sparse(t) },
                    s.l_max,
                    s.noise,
                )
            }
        };
        let l_max = match l_max {
            Some(l) => l,
            None => with_instance!(self, |spec, inst| effective_config(&spec.config, &inst)?.required_l()),
        };
        synthesize(&SynthesisRequest { truth, l_max, noise })
    }

    /// Copy of the problem with synthesized measurements and explicit `L`.
    pub fn with_measurements(&self) -> Result<Problem> {
        let meas = self.synthesize()?;
        let mut out = self.clone();
        let l = Some(meas.l_max());
        match &mut out {
            Problem::Classic(s) => (s.measurements, s.l_max) = (Some(meas), l),
            Problem::Confluent(s) => (s.measurements, s.l_max) = (Some(meas), l),
            Problem::Dynamical(s) => (s.measurements, s.l_max) = (Some(meas), l),
            Problem::Channel(s) => (s.measurements, s.l_max) = (Some(meas), l),
        }
        Ok(out)
    }

    /// Runs the full recovery on the stored measurements. A channel setup
    /// other than the default must pass [`Problem::validate_symbol`] first.
    pub fn recover(&self, opts: RunOptions) -> Result<Report> {
        self.validate()?;
        if let Problem::Channel(s) = self {
            if !s.setup.has_default_symbol() {
                let v = self.validate_symbol()?;
                if !v.passed() {
                    return contract(format!(
                        "channel symbol fails validation (injective: {}, nonvanishing: {}, round trip: {})",
                        v.injective, v.nonvanishing, v.round_trip_ok
                    ));
                }
            }
        }
        Ok(match self {
            Problem::Classic(s) => Report::Classic(run_body(&s.setup, s, opts)?),
            Problem::Confluent(s) => Report::Confluent(run_body(&s.setup, s, opts)?),
            Problem::Dynamical(s) => {
                Report::Dynamical(run_body(&DynamicalInstance::new(s.setup.to_problem()?)?, s, opts)?)
            }
            Problem::Channel(s) => Report::Channel(run_body(&ChannelInstance::new(s.setup.clone())?, s, opts)?),
        })
    }

    /// Checks injectivity, nonvanishing and invertibility of the symbol on
    /// a grid over the admissible set (the spectrum itself for dynamical
    /// problems).
    pub fn validate_symbol(&self) -> Result<ValidationReport> {
        let checks = SymbolChecks::default();
        let circle: Vec<Frequency> =
            (0..CIRCLE_GRID).map(|k| Frequency::new(k as f64 / CIRCLE_GRID as f64).expect("in range")).collect();
        Ok(match self {
            Problem::Classic(s) => validate_symbol(&s.setup, &circle, &checks),
            Problem::Confluent(s) => validate_symbol(&s.setup, &circle, &checks),
            Problem::Dynamical(s) => {
                let inst = DynamicalInstance::new(s.setup.to_problem()?)?;
                validate_symbol(&inst, &inst.problem().basis.spectrum(), &checks)
            }
            Problem::Channel(s) => {
                validate_symbol(&ChannelInstance::new(s.setup.clone())?, &unit_square_grid(SQUARE_GRID), &checks)
            }
        })
    }

    /// Truth and recovered points for a scatter plot.
    pub fn plot_data(&self, report: &Report) -> PlotData {
        let (x_label, y_label) = match self {
            Problem::Classic(_) | Problem::Confluent(_) => ("gamma", "|c|"),
            Problem::Dynamical(_) => ("Re lambda", "Im lambda"),
            Problem::Channel(_) => ("t", "nu"),
        };
        let truth = match self {
            Problem::Classic(s) => s.truth.as_ref().map(plot_coords),
            Problem::Confluent(s) => s.truth.as_ref().map(plot_coords),
            Problem::Dynamical(s) => s.truth.as_ref().map(plot_coords),
            Problem::Channel(s) => s.truth.as_ref().map(plot_coords),
        }
        .unwrap_or_default();
        let recovered = match report {
            Report::Classic(b) | Report::Confluent(b) => plot_coords(&b.model),
            Report::Dynamical(b) => plot_coords(&b.model),
            Report::Channel(b) => plot_coords(&b.model),
        };
        PlotData { kind: self.kind(), x_label, y_label, truth, recovered }
    }
}
