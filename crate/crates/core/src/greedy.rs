//! Greedy basis generation driven by the real reduced-model error, plus the
//! error-study harness behind the command line tools.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::basis::{
    gram_schmidt_extend, legendre_basis, reduced_operators, GramSchmidtOutcome, VelocityBasis,
};
use crate::error::{Error, Result};
use crate::moment::{solve_moment_system, spatial_density, DensityField};
use crate::parallel;
use crate::problem::{KineticProblem, SpaceGrid};
use crate::reference::{solve_reference, truth_snapshots};
use crate::snapshot::{generate_snapshot_set, ParameterBox};
use crate::velocity_fem::{FemOperators, NodalFunction, VelocityGrid};

/// Times at which densities are compared: j * t_end / 16 for j = 1..16.
pub fn default_comparison_times(t_end: f64) -> Vec<f64> {
    (1..=16).map(|j| t_end * j as f64 / 16.0).collect()
}

/// Relative L1 density error of `test` against a reference on an equal or
/// finer grid, summed over the comparison times. The reference is aggregated
/// onto the coarse grid by cell means.
pub fn relative_l1_error(
    test: &DensityField,
    reference: &DensityField,
    times: &[f64],
) -> Result<f64> {
    let tg = &test.space_grid;
    let rg = &reference.space_grid;
    if (tg.x_range.0 - rg.x_range.0).abs() > 1e-9 || (tg.x_range.1 - rg.x_range.1).abs() > 1e-9 {
        return Err(Error::GridMismatch(format!(
            "density ranges {:?} vs {:?}",
            tg.x_range, rg.x_range
        )));
    }
    if !rg.n_cells.is_multiple_of(tg.n_cells) {
        return Err(Error::GridMismatch(format!(
            "reference cells {} not a multiple of test cells {}",
            rg.n_cells, tg.n_cells
        )));
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("no comparison times".into()));
    }
    let ratio = rg.n_cells / tg.n_cells;
    let find = |field: &DensityField, t: f64| -> Result<usize> {
        field
            .times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or(Error::MissingTime(t))
    };

    let mut num = 0.0;
    let mut den = 0.0;
    for &t in times {
        let ti = find(test, t)?;
        let ri = find(reference, t)?;
        let coarse = &test.values[ti];
        let fine = &reference.values[ri];
        for j in 0..tg.n_cells {
            let mean: f64 =
                fine[j * ratio..(j + 1) * ratio].iter().sum::<f64>() / ratio as f64;
            num += (coarse[j] - mean).abs();
            den += mean.abs();
        }
    }
    if den <= 0.0 {
        return Err(Error::InvalidArgument(
            "reference density vanishes on the comparison set".into(),
        ));
    }
    Ok(num / den)
}

/// Knobs of the greedy search.
#[derive(Debug, Clone)]
pub struct GreedyOptions {
    pub m_max: usize,
    pub gs_tol: f64,
    pub cfl: f64,
    pub comparison_times: Vec<f64>,
}

impl GreedyOptions {
    pub fn new(m_max: usize, t_end: f64) -> Self {
        GreedyOptions {
            m_max,
            gs_tol: 1e-10,
            cfl: 0.9,
            comparison_times: default_comparison_times(t_end),
        }
    }
}

/// Outcome of a greedy run: one basis per level, which snapshot was taken,
/// the achieved error and the wall time per level.
#[derive(Debug, Clone)]
pub struct GreedyReport {
    pub bases: Vec<VelocityBasis>,
    pub chosen: Vec<usize>,
    pub errors: Vec<f64>,
    pub timings: Vec<Duration>,
}

/// Grows a basis one function per level. Every snapshot is tried as an
/// extension; the one whose reduced model has the smallest density error
/// against `reference` wins (lowest index on ties). Snapshots already in the
/// span are skipped; failed or unstable solves count as infinite error. Stops
/// early when the span is exhausted.
pub fn greedy_basis_generation(
    snapshots: &[NodalFunction],
    problem: &KineticProblem,
    space_grid: &SpaceGrid,
    reference: &DensityField,
    opts: &GreedyOptions,
) -> Result<GreedyReport> {
    if snapshots.is_empty() {
        return Err(Error::InvalidArgument("no snapshots".into()));
    }
    if opts.m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be >= 1".into()));
    }
    let grid = &snapshots[0].grid;
    if snapshots.iter().any(|s| !s.grid.compatible(grid)) {
        return Err(Error::GridMismatch(
            "snapshots on different velocity grids".into(),
        ));
    }
    let fem = FemOperators::assemble(grid);

    let evaluate = |basis: &VelocityBasis| -> f64 {
        let result = reduced_operators(basis, &fem)
            .and_then(|ops| {
                solve_moment_system(
                    problem,
                    basis,
                    &ops,
                    space_grid,
                    &opts.comparison_times,
                    opts.cfl,
                )
                .map(|field| (ops, field))
            })
            .and_then(|(_, field)| spatial_density(&field, basis, &fem))
            .and_then(|dens| relative_l1_error(&dens, reference, &opts.comparison_times));
        result.unwrap_or(f64::INFINITY)
    };

    let mut current = VelocityBasis::empty(std::sync::Arc::clone(grid));
    let mut report = GreedyReport {
        bases: Vec::new(),
        chosen: Vec::new(),
        errors: Vec::new(),
        timings: Vec::new(),
    };

    for level in 1..=opts.m_max {
        let start = Instant::now();
        let outcomes: Vec<Option<f64>> = parallel::map_collect(snapshots, |snap| {
            match gram_schmidt_extend(&current, snap, opts.gs_tol) {
                Ok(GramSchmidtOutcome::Extended(cand)) => Some(evaluate(&cand)),
                Ok(GramSchmidtOutcome::Rejected) => None,
                Err(_) => Some(f64::INFINITY),
            }
        });

        if outcomes.iter().all(|o| o.is_none()) {
            log::info!("greedy stopped at level {level}: span exhausted");
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, o) in outcomes.iter().enumerate() {
            if let Some(e) = o {
                if best.is_none_or(|(_, be)| *e < be) {
                    best = Some((i, *e));
                }
            }
        }
        let (winner, err) = best.unwrap();
        if err.is_infinite() {
            return Err(Error::GreedyStageFailed { m: level });
        }

        current = match gram_schmidt_extend(&current, &snapshots[winner], opts.gs_tol)? {
            GramSchmidtOutcome::Extended(b) => b,
            GramSchmidtOutcome::Rejected => {
                return Err(Error::DegenerateBasis(format!(
                    "winning snapshot {winner} rejected on re-extension at level {level}"
                )))
            }
        };
        report.bases.push(current.clone());
        report.chosen.push(winner);
        report.errors.push(err);
        report.timings.push(start.elapsed());
    }
    Ok(report)
}

/// Which family of reduced models an error study evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMethod {
    Legendre,
    GreedyTruth,
    GreedyPde,
}

impl StudyMethod {
    pub fn name(&self) -> &'static str {
        match self {
            StudyMethod::Legendre => "legendre",
            StudyMethod::GreedyTruth => "greedy_truth",
            StudyMethod::GreedyPde => "greedy_pde",
        }
    }
}

/// Shared inputs of an error study.
pub struct StudyConfig<'a> {
    pub problem: &'a KineticProblem,
    pub reference: &'a DensityField,
    pub comparison_times: Vec<f64>,
    pub cfl: f64,
    pub gs_tol: f64,
    /// PDE snapshot sampling
    pub param_box: ParameterBox,
    pub n_sample: usize,
    pub seed: u64,
    /// truth snapshot tensor grid (space points, time points)
    pub truth_points: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub method: String,
    pub h: f64,
    pub m: usize,
    pub error: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("method,h,m,error\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:.16e}\n", r.method, r.h, r.m, r.error));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<ErrorReport> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let perr = |what: String| Error::Parse {
            path: path.display().to_string(),
            what,
        };
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(perr(format!("line {}: expected 4 fields", i + 1)));
            }
            rows.push(ErrorRow {
                method: parts[0].trim().to_string(),
                h: parts[1]
                    .trim()
                    .parse()
                    .map_err(|e| perr(format!("line {}: {e}", i + 1)))?,
                m: parts[2]
                    .trim()
                    .parse()
                    .map_err(|e| perr(format!("line {}: {e}", i + 1)))?,
                error: parts[3]
                    .trim()
                    .parse()
                    .map_err(|e| perr(format!("line {}: {e}", i + 1)))?,
            });
        }
        Ok(ErrorReport { rows })
    }
}

/// Study result: the error table plus any greedy reports (keyed by exponent)
/// so bases can be persisted.
pub struct StudyOutput {
    pub report: ErrorReport,
    pub greedy: Vec<(u32, GreedyReport)>,
}

/// Grid sizes for mesh width 2^-exponent: matching space cells over the
/// domain and 2^(exponent+1) velocity cells.
pub fn grids_for_exponent(
    problem: &KineticProblem,
    exponent: u32,
) -> Result<(SpaceGrid, usize, usize)> {
    let h = 0.5f64.powi(exponent as i32);
    let (a, b) = problem.x_range;
    let n_x_f = (b - a) / h;
    let n_x = n_x_f.round() as usize;
    if n_x == 0 || (n_x_f - n_x as f64).abs() > 1e-9 {
        return Err(Error::InvalidGrid(format!(
            "domain ({a}, {b}) is not an integer multiple of h = {h}"
        )));
    }
    let n_v = (2.0 / h).round() as usize;
    Ok((SpaceGrid::new((a, b), n_x)?, n_x, n_v))
}

/// Runs one method over a set of mesh exponents, reporting the relative L1
/// density error per (h, m) against the study reference.
pub fn run_error_study(
    method: StudyMethod,
    h_exponents: &[u32],
    m_max: usize,
    cfg: &StudyConfig,
) -> Result<StudyOutput> {
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be >= 1".into()));
    }
    let mut report = ErrorReport::default();
    let mut greedy_reports = Vec::new();

    for &exp in h_exponents {
        let (space_grid, n_x, n_v) = grids_for_exponent(cfg.problem, exp)?;
        let h = 0.5f64.powi(exp as i32);
        let vgrid = std::sync::Arc::new(VelocityGrid::new(n_v)?);
        let fem = FemOperators::assemble(&vgrid);

        match method {
            StudyMethod::Legendre => {
                for m in 1..=m_max {
                    let basis = legendre_basis(m, &vgrid)?;
                    let ops = reduced_operators(&basis, &fem)?;
                    let field = solve_moment_system(
                        cfg.problem,
                        &basis,
                        &ops,
                        &space_grid,
                        &cfg.comparison_times,
                        cfg.cfl,
                    )?;
                    let dens = spatial_density(&field, &basis, &fem)?;
                    let error = relative_l1_error(&dens, cfg.reference, &cfg.comparison_times)?;
                    report.rows.push(ErrorRow {
                        method: method.name().into(),
                        h,
                        m,
                        error,
                    });
                }
            }
            StudyMethod::GreedyTruth | StudyMethod::GreedyPde => {
                let snapshots = match method {
                    StudyMethod::GreedyTruth => {
                        let full =
                            solve_reference(cfg.problem, n_x, n_v, &cfg.comparison_times, cfg.cfl)?;
                        truth_snapshots(&full, cfg.truth_points.0, cfg.truth_points.1)?
                    }
                    _ => generate_snapshot_set(
                        &cfg.param_box,
                        cfg.n_sample,
                        cfg.seed,
                        cfg.problem,
                        &vgrid,
                    )?,
                };
                let opts = GreedyOptions {
                    m_max,
                    gs_tol: cfg.gs_tol,
                    cfl: cfg.cfl,
                    comparison_times: cfg.comparison_times.clone(),
                };
                let g = greedy_basis_generation(
                    &snapshots,
                    cfg.problem,
                    &space_grid,
                    cfg.reference,
                    &opts,
                )?;
                for (i, &error) in g.errors.iter().enumerate() {
                    report.rows.push(ErrorRow {
                        method: method.name().into(),
                        h,
                        m: i + 1,
                        error,
                    });
                }
                greedy_reports.push((exp, g));
            }
        }
    }
    Ok(StudyOutput {
        report,
        greedy: greedy_reports,
    })
}
