//! TOML configuration schema and the mapping onto solver types. Command line
//! flags override whatever the file sets; everything has a default, so the
//! tool runs with no config at all.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fpmr_core::problem::{
    BoundaryData, InitialData, KineticProblem, PiecewiseConstant, SourceTerm,
};
use fpmr_core::snapshot::ParameterBox;
use fpmr_core::{Error, Result};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// "sourcebeam" (built in) or "custom" (requires [problem]).
    pub scenario: Option<String>,
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub study: StudyDefaults,
    pub parameter_box: Option<BoxConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub x_range: [f64; 2],
    pub t_end: f64,
    /// constant initial value of the kinetic density
    pub psi0: f64,
    pub absorption: PiecewiseConfig,
    pub temperature: PiecewiseConfig,
    pub source: Option<SourceConfig>,
    pub left_bc: BcConfig,
    pub right_bc: BcConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseConfig {
    #[serde(default)]
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    /// "constant" or "delta"
    pub kind: String,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyDefaults {
    pub h_exponents: String,
    pub ref_exponent: u32,
    pub m_max: usize,
    /// "truth" or "pde"
    pub source: String,
    pub n_sample: usize,
    pub seed: u64,
    pub cfl: f64,
    pub gs_tol: f64,
    pub out: String,
}

impl Default for StudyDefaults {
    fn default() -> Self {
        StudyDefaults {
            h_exponents: "3..5".into(),
            ref_exponent: 7,
            m_max: 13,
            source: "truth".into(),
            n_sample: 500,
            seed: 314,
            cfl: 0.9,
            gs_tol: 1e-10,
            out: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub t: [f64; 2],
    pub x: [f64; 2],
    pub p: [f64; 2],
    pub dx_p: [f64; 2],
    pub dt_p: [f64; 2],
    pub boundary: [f64; 2],
    pub n_quad: usize,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            what: e.to_string(),
        })
    }

    pub fn build_problem(&self, scenario_flag: Option<&str>) -> Result<KineticProblem> {
        let scenario = scenario_flag
            .map(str::to_string)
            .or_else(|| self.scenario.clone())
            .unwrap_or_else(|| "sourcebeam".into());
        match scenario.as_str() {
            "sourcebeam" => Ok(KineticProblem::sourcebeam()),
            "custom" => {
                let pc = self.problem.as_ref().ok_or_else(|| {
                    Error::InvalidArgument(
                        "scenario \"custom\" needs a [problem] section".into(),
                    )
                })?;
                pc.build()
            }
            other => Err(Error::InvalidArgument(format!(
                "unknown scenario {other:?}; expected \"sourcebeam\" or \"custom\""
            ))),
        }
    }

    pub fn build_parameter_box(&self) -> ParameterBox {
        match &self.parameter_box {
            None => ParameterBox::sourcebeam_default(),
            Some(b) => ParameterBox {
                t: (b.t[0], b.t[1]),
                x: (b.x[0], b.x[1]),
                p: (b.p[0], b.p[1]),
                dx_p: (b.dx_p[0], b.dx_p[1]),
                dt_p: (b.dt_p[0], b.dt_p[1]),
                boundary: (b.boundary[0], b.boundary[1]),
                n_quad: b.n_quad,
            },
        }
    }
}

impl ProblemConfig {
    fn build(&self) -> Result<KineticProblem> {
        let bc = |c: &BcConfig| -> Result<BoundaryData> {
            match c.kind.as_str() {
                "constant" => Ok(BoundaryData::Constant(c.value)),
                "delta" => Ok(BoundaryData::DeltaAtOne(c.value)),
                other => Err(Error::InvalidArgument(format!(
                    "boundary kind {other:?}; expected \"constant\" or \"delta\""
                ))),
            }
        };
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidArgument("t_end must be positive".into()));
        }
        Ok(KineticProblem {
            x_range: (self.x_range[0], self.x_range[1]),
            t_end: self.t_end,
            sigma_a: PiecewiseConstant::new(
                self.absorption.breaks.clone(),
                self.absorption.values.clone(),
            )?,
            temperature: PiecewiseConstant::new(
                self.temperature.breaks.clone(),
                self.temperature.values.clone(),
            )?,
            source: self.source.as_ref().map(|s| SourceTerm {
                x_lo: s.x_lo,
                x_hi: s.x_hi,
                value: s.value,
            }),
            initial: InitialData::Constant(self.psi0),
            left_bc: bc(&self.left_bc)?,
            right_bc: bc(&self.right_bc)?,
        })
    }
}

/// Parses "3,4,5" or "3..7" (inclusive on both ends) into exponents.
pub fn parse_exponents(text: &str) -> Result<Vec<u32>> {
    let bad = |t: &str| Error::InvalidArgument(format!("cannot parse mesh exponents from {t:?}"));
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad(text))?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad(text))?;
        if lo > hi {
            return Err(bad(text));
        }
        return Ok((lo..=hi).collect());
    }
    let exps: Vec<u32> = text
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| bad(text)))
        .collect::<Result<_>>()?;
    if exps.is_empty() {
        return Err(bad(text));
    }
    Ok(exps)
}

/// Short content hash used in artifact file names so runs with different
/// problems or knobs never collide in the output directory.
pub fn short_hash(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0]);
    }
    let digest = hasher.finalize();
    let mut out = String::new();
    for b in &digest[..8] {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

/// Canonical description of the problem for hashing.
pub fn problem_fingerprint(p: &KineticProblem) -> String {
    let bc = |b: &BoundaryData| match b {
        BoundaryData::Constant(v) => format!("const:{v:e}"),
        BoundaryData::DeltaAtOne(v) => format!("delta:{v:e}"),
    };
    let init = match &p.initial {
        InitialData::Constant(c) => format!("const:{c:e}"),
        InitialData::Profile(_) => "profile".into(),
    };
    format!(
        "x=({:e},{:e});t={:e};sigma={:?}/{:?};temp={:?}/{:?};src={:?};init={};bc={}/{}",
        p.x_range.0,
        p.x_range.1,
        p.t_end,
        p.sigma_a.breaks,
        p.sigma_a.values,
        p.temperature.breaks,
        p.temperature.values,
        p.source,
        init,
        bc(&p.left_bc),
        bc(&p.right_bc),
    )
}
