//! Pipeline orchestration and the report documents it emits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Config;
use crate::discrete_oracle::{bundled, verdict_equivalence, DiscreteModel, Scenario, Verdict};
use crate::duality::{
    dual_generators_with, frame_bounds_empirical, gram_profile, random_schedule, reconstruction_errors,
    scaling_limit_diagnostic_with, gaussian_modulation, Construction, DualOptions, DualSystem, FrameBounds,
    ReconstructionError, ScalingDiagnostic, ScalingOptions,
};
use crate::error::{Error, Result};
use crate::fiberization::{bracket, condition_iii_check, spectral_profile, ConditionIII, FrequencyGrid};
use crate::lattice_ops::{synthesize, GeneratorSystem};
use crate::mixed_norms::{Decay, MixedExponents, SampledField};

pub const SCHEMA: u32 = 1;
/// Largest Gram matrix the analyze-time oracle will factor.
const ORACLE_MAX_DIM: usize = 4096;

fn tool() -> String {
    format!("siframe {}", env!("CARGO_PKG_VERSION"))
}

/// Seconds since the Unix epoch, for reports that are not `--stable`.
pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemInfo {
    pub source: String,
    pub labels: Vec<String>,
    pub d: usize,
    pub samples_per_unit: usize,
    pub r: usize,
}

impl SystemInfo {
    fn of(cfg: &Config, phi: &GeneratorSystem) -> Self {
        Self {
            source: if cfg.generators.is_empty() {
                format!("corpus:{}", cfg.corpus)
            } else {
                "files".into()
            },
            labels: phi.labels().to_vec(),
            d: phi.d(),
            samples_per_unit: phi.grid().samples_per_unit,
            r: phi.r(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSummary {
    pub construction: Construction,
    pub k0: usize,
    pub residual: f64,
    pub tail_mass: f64,
    pub radius: Vec<usize>,
}

impl From<&DualSystem> for DualSummary {
    fn from(d: &DualSystem) -> Self {
        Self {
            construction: d.construction,
            k0: d.k0,
            residual: d.residual,
            tail_mass: d.tail_mass,
            radius: d.radius.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub n1: usize,
    pub n2: usize,
    pub fibers: usize,
    pub k0: usize,
    pub max_rank: usize,
    pub c_est: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub schema: u32,
    pub tool: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
    pub input_digest: String,
    pub system: SystemInfo,
    pub exponents: MixedExponents,
    pub freq: FrequencyGrid,
    pub rank_tol: f64,
    pub bracket_tail_bound: f64,
    pub k0: usize,
    pub max_rank: usize,
    pub constancy: bool,
    pub condition_iii: ConditionIII,
    /// The frame verdict: the constant-rank band condition on the sampled frequency grid.
    pub frame: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reconstruction: Vec<ReconstructionError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_bounds: Option<FrameBounds>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub refinement: Vec<RefinementStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Verdict>,
    pub stages: Vec<StageRecord>,
    pub warnings: Vec<String>,
}

struct Stages(Vec<StageRecord>);

impl Stages {
    fn ran(&mut self, stage: &str) {
        self.0.push(StageRecord {
            stage: stage.into(),
            status: StageStatus::Ran,
            reason: None,
        });
    }

    fn skipped(&mut self, stage: &str, reason: impl Into<String>) {
        self.0.push(StageRecord {
            stage: stage.into(),
            status: StageStatus::Skipped,
            reason: Some(reason.into()),
        });
    }
}

fn decay_warnings(phi: &GeneratorSystem, warnings: &mut Vec<String>) {
    for (g, label) in phi.generators().iter().zip(phi.labels()) {
        if let Decay::Exponential { tail_mass, .. } = g.decay() {
            if tail_mass > 1e-12 {
                warnings.push(format!("generator {label}: truncation discarded {tail_mass:.2e} of the L2 energy"));
            }
        }
    }
}

/// The random test field used by the reconstruction sweep.
pub fn test_field(phi: &GeneratorSystem, seed: u64) -> Result<SampledField> {
    synthesize(phi, &random_schedule(phi, 1, 50, 4, seed)?[0])
}

/// bracket → spectral profile → constant-rank band condition → (if it holds) dual →
/// reconstruction sweep → empirical frame bounds; refinement sweep when the
/// rank is not constant; finite-group verdicts on request.
///
/// The refinement sweep doubles the time-axis fiber count three times,
/// starting from a quarter of the configured count (64 → 512 fibers at the
/// default `64x4`), and warns when `C_est` grows tenfold or more.
pub fn run_analyze(cfg: &Config) -> Result<FrameReport> {
    cfg.validate()?;
    let phi = cfg.system().map_err(|e| e.at("corpus"))?;
    let e = cfg.exponents()?;
    let freq = cfg.frequency_grid(&phi)?;
    let mut stages = Stages(Vec::new());
    let mut warnings = Vec::new();
    decay_warnings(&phi, &mut warnings);

    let gram = bracket(&phi, &phi, &freq).map_err(|e| e.at("bracket"))?;
    stages.ran("bracket");
    if gram.tail_bound > 1e-10 {
        warnings.push(format!("bracket lag tail {:.2e} beyond J = {}", gram.tail_bound, freq.j));
    }
    let profile = spectral_profile(&gram, cfg.rank_tol).map_err(|e| e.at("spectral_profile"))?;
    stages.ran("spectral_profile");
    let verdict = condition_iii_check(&profile);
    stages.ran("condition_iii_check");

    let mut dual = None;
    let mut reconstruction = Vec::new();
    let mut frame_bounds = None;
    let mut refinement = Vec::new();
    if verdict.holds {
        let opts = DualOptions {
            rank_tol: cfg.rank_tol,
            ..Default::default()
        };
        let d = dual_generators_with(&phi, &freq, opts).map_err(|e| e.at("dual_generators"))?;
        stages.ran("dual_generators");
        let f = test_field(&phi, cfg.seed).map_err(|e| e.at("reconstruction"))?;
        reconstruction = reconstruction_errors(&f, &phi, &d.psi, &cfg.sweep).map_err(|e| e.at("reconstruction"))?;
        stages.ran("reconstruction");
        frame_bounds = Some(
            frame_bounds_empirical(&phi, Some(&d.psi), e, cfg.trials, cfg.seed).map_err(|e| e.at("frame_bounds"))?,
        );
        stages.ran("frame_bounds");
        dual = Some(DualSummary::from(&d));
        stages.skipped("refinement", "rank is constant");
    } else {
        let reason = format!("rank varies over the grid ({}..={})", profile.k0, profile.max_rank());
        stages.skipped("dual_generators", reason.clone());
        stages.skipped("reconstruction", reason.clone());
        stages.skipped("frame_bounds", reason.clone());
        warnings.push(format!("constant-rank band condition fails: {reason}"));
        if cfg.refine {
            // From a quarter of the working resolution up to twice it.
            let base = (freq.n1 / 4).max(2);
            for factor in [1, 2, 4, 8] {
                let fine = freq.with_fibers(base * factor, freq.n2)?;
                let p = gram_profile(&phi, &fine, cfg.rank_tol).map_err(|e| e.at("refinement"))?;
                refinement.push(RefinementStep {
                    n1: fine.n1,
                    n2: fine.n2,
                    fibers: fine.len(),
                    k0: p.k0,
                    max_rank: p.max_rank(),
                    c_est: p.c_est,
                });
            }
            stages.ran("refinement");
            if let (Some(a), Some(b)) = (refinement.first(), refinement.last()) {
                let growth = b.c_est / a.c_est;
                if growth >= 10.0 {
                    warnings.push(format!(
                        "refinement sweep shows C_est growth {growth:.3e}x from {} to {} fibers: no uniform eigenvalue band",
                        a.fibers, b.fibers
                    ));
                }
            }
        } else {
            stages.skipped("refinement", "disabled");
        }
    }

    let oracle = if cfg.oracle {
        let dim = phi.r() * freq.n1 * freq.n2.pow(phi.d() as u32);
        if dim > ORACLE_MAX_DIM {
            stages.skipped("oracle", format!("Gram dimension {dim} exceeds {ORACLE_MAX_DIM}"));
            None
        } else {
            if (freq.n1 as i64) <= phi.support_box().max_width() {
                warnings.push("oracle group is narrower than the generator support; samples wrap".into());
            }
            let model = DiscreteModel::from_system(&phi, freq.n1, freq.n2).map_err(|e| e.at("oracle"))?;
            stages.ran("oracle");
            Some(verdict_equivalence(&model, cfg.rank_tol))
        }
    } else {
        stages.skipped("oracle", "not requested");
        None
    };

    Ok(FrameReport {
        schema: SCHEMA,
        tool: tool(),
        generated_unix: None,
        input_digest: cfg.digest()?,
        system: SystemInfo::of(cfg, &phi),
        exponents: e,
        freq,
        rank_tol: cfg.rank_tol,
        bracket_tail_bound: gram.tail_bound,
        k0: profile.k0,
        max_rank: profile.max_rank(),
        constancy: profile.constancy,
        condition_iii: verdict,
        frame: verdict.holds,
        dual,
        reconstruction,
        frame_bounds,
        refinement,
        oracle,
        stages: stages.0,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub schema: u32,
    pub tool: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
    pub input_digest: String,
    pub system: SystemInfo,
    pub freq: FrequencyGrid,
    pub dual: DualSummary,
    pub labels: Vec<String>,
}

pub fn run_dual(cfg: &Config) -> Result<(DualReport, DualSystem)> {
    cfg.validate()?;
    let phi = cfg.system().map_err(|e| e.at("corpus"))?;
    let freq = cfg.frequency_grid(&phi)?;
    let opts = DualOptions {
        rank_tol: cfg.rank_tol,
        ..Default::default()
    };
    let d = dual_generators_with(&phi, &freq, opts).map_err(|e| e.at("dual_generators"))?;
    let report = DualReport {
        schema: SCHEMA,
        tool: tool(),
        generated_unix: None,
        input_digest: cfg.digest()?,
        system: SystemInfo::of(cfg, &phi),
        freq,
        dual: DualSummary::from(&d),
        labels: d.psi.labels().to_vec(),
    };
    Ok((report, d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructReport {
    pub schema: u32,
    pub tool: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
    pub input_digest: String,
    pub system: SystemInfo,
    /// `"random"` or the input file.
    pub field: String,
    pub dual: DualSummary,
    pub errors: Vec<ReconstructionError>,
}

/// Reconstructs `input` (or the seeded random test field) through the dual.
pub fn run_reconstruct(cfg: &Config, input: Option<&Path>) -> Result<(ReconstructReport, SampledField)> {
    let (dual_report, d) = run_dual(cfg)?;
    let phi = cfg.system()?;
    let (f, name) = match input {
        Some(p) => (super::io::read_field(p).map_err(|e| e.at("input"))?, p.display().to_string()),
        None => (test_field(&phi, cfg.seed)?, "random".to_string()),
    };
    let errors = reconstruction_errors(&f, &phi, &d.psi, &cfg.sweep).map_err(|e| e.at("reconstruction"))?;
    let back = crate::duality::reconstruct(&f, &phi, &d.psi, None).map_err(|e| e.at("reconstruction"))?;
    Ok((
        ReconstructReport {
            schema: SCHEMA,
            tool: tool(),
            generated_unix: None,
            input_digest: dual_report.input_digest,
            system: dual_report.system,
            field: name,
            dual: dual_report.dual,
            errors,
        },
        back,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub schema: u32,
    pub tool: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
    pub input_digest: String,
    pub system: SystemInfo,
    pub generator: String,
    pub diagnostic: ScalingDiagnostic,
    pub decreasing_from_4: bool,
}

/// Scaling diagnostic of the first generator with the Gaussian modulation.
pub fn run_scaling(cfg: &Config) -> Result<ScalingReport> {
    cfg.validate()?;
    let phi = cfg.system().map_err(|e| e.at("corpus"))?;
    let opts = ScalingOptions {
        exponents: cfg.exponents()?,
        ..Default::default()
    };
    let diag = scaling_limit_diagnostic_with(phi.get(0), cfg.scaling_n_max, &opts, gaussian_modulation)
        .map_err(|e| e.at("scaling"))?;
    Ok(ScalingReport {
        schema: SCHEMA,
        tool: tool(),
        generated_unix: None,
        input_digest: cfg.digest()?,
        system: SystemInfo::of(cfg, &phi),
        generator: phi.labels()[0].clone(),
        decreasing_from_4: diag.decreasing_from(4),
        diagnostic: diag,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub label: String,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub rho: usize,
    pub r: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema: u32,
    pub tool: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
    pub scenario: String,
    pub input_digest: String,
    pub rank_tol: f64,
    pub cases: Vec<OracleCase>,
    pub agreed: usize,
    pub total: usize,
    pub agreement: bool,
}

/// A bundled scenario name or a scenario file.
pub fn run_oracle(scenario: &str, rank_tol: f64) -> Result<OracleReport> {
    use sha2::{Digest, Sha256};
    let (models, bytes) = if crate::discrete_oracle::BUNDLED.contains(&scenario) {
        (bundled(scenario)?, scenario.as_bytes().to_vec())
    } else {
        let bytes = std::fs::read(scenario).map_err(|e| Error::BadScenario(format!("{scenario}: {e}")))?;
        let text = String::from_utf8(bytes.clone()).map_err(|e| Error::BadScenario(e.to_string()))?;
        (Scenario::from_json(&text)?.models()?, bytes)
    };
    let cases: Vec<OracleCase> = models
        .into_iter()
        .map(|(label, m)| OracleCase {
            verdict: verdict_equivalence(&m, rank_tol),
            label,
            n: m.n,
            m: m.m,
            d: m.d,
            rho: m.rho,
            r: m.r(),
        })
        .collect();
    let agreed = cases.iter().filter(|c| c.verdict.agreement).count();
    let mut h = Sha256::new();
    h.update(&bytes);
    h.update(rank_tol.to_le_bytes());
    Ok(OracleReport {
        schema: SCHEMA,
        tool: tool(),
        generated_unix: None,
        scenario: scenario.to_string(),
        input_digest: h.finalize().iter().map(|b| format!("{b:02x}")).collect(),
        rank_tol,
        total: cases.len(),
        agreement: agreed == cases.len(),
        agreed,
        cases,
    })
}
