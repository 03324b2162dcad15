//! The four subcommands: full-model reference runs, the two error studies,
//! and report assembly. All artifacts are CSV or plain text in one output
//! directory, with a content hash in each name so different problems and
//! knobs never clash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use fpmr_core::basis::write_basis;
use fpmr_core::greedy::{
    default_comparison_times, relative_l1_error, run_error_study, ErrorReport, ErrorRow,
    StudyConfig, StudyMethod,
};
use fpmr_core::moment::DensityField;
use fpmr_core::problem::KineticProblem;
use fpmr_core::reference::{density_of_full, solve_reference};
use fpmr_core::snapshot::ParameterBox;
use fpmr_core::{Error, Result};

use crate::config::{problem_fingerprint, short_hash};

/// Everything a study run needs after config and flags are merged.
pub struct RunSettings {
    pub problem: KineticProblem,
    pub param_box: ParameterBox,
    pub h_exponents: Vec<u32>,
    pub ref_exponent: u32,
    pub m_max: usize,
    pub n_sample: usize,
    pub seed: u64,
    pub cfl: f64,
    pub gs_tol: f64,
    pub out: PathBuf,
}

impl RunSettings {
    fn scenario_hash(&self) -> String {
        short_hash(&[
            &problem_fingerprint(&self.problem),
            &format!("cfl={:e}", self.cfl),
        ])
    }

    fn reference_path(&self, exponent: u32) -> PathBuf {
        self.out
            .join(format!("reference_h{}_{}.csv", exponent, self.scenario_hash()))
    }

    fn study_hash(&self, method: StudyMethod) -> String {
        let mut parts = vec![
            problem_fingerprint(&self.problem),
            format!("cfl={:e};gs={:e};ref={}", self.cfl, self.gs_tol, self.ref_exponent),
        ];
        if method == StudyMethod::GreedyPde {
            parts.push(format!(
                "box={:?};n={};seed={}",
                self.param_box, self.n_sample, self.seed
            ));
        }
        let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
        short_hash(&refs)
    }
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })
}

/// Density of the full kinetic solve at mesh exponent `e`, cached on disk.
pub fn ensure_reference(settings: &RunSettings, exponent: u32) -> Result<DensityField> {
    let path = settings.reference_path(exponent);
    if path.exists() {
        log::info!("using cached reference {}", path.display());
        return DensityField::read_csv(&path);
    }
    let problem = &settings.problem;
    let (_, n_x, n_v) = fpmr_core::greedy::grids_for_exponent(problem, exponent)?;
    let mut times = vec![0.0];
    times.extend(default_comparison_times(problem.t_end));
    log::info!("solving full model at h = 2^-{exponent} ({n_x} x {n_v} cells)");
    let full = solve_reference(problem, n_x, n_v, &times, settings.cfl)?;
    let density = density_of_full(&full);
    density.write_csv(&path)?;
    log::info!("wrote {}", path.display());
    Ok(density)
}

fn check_exponents(settings: &RunSettings) -> Result<()> {
    if let Some(&max) = settings.h_exponents.iter().max() {
        if max > settings.ref_exponent {
            return Err(Error::InvalidArgument(format!(
                "reference exponent {} is coarser than study exponent {max}",
                settings.ref_exponent
            )));
        }
    }
    Ok(())
}

/// Solves the full model at the reference exponent and at every study
/// exponent, then records the discretization errors of the coarse solves
/// (method "full", m = 0) against the fine one.
pub fn cmd_reference(settings: &RunSettings) -> Result<()> {
    ensure_out_dir(&settings.out)?;
    check_exponents(settings)?;
    let fine = ensure_reference(settings, settings.ref_exponent)?;
    println!(
        "reference density: {}",
        settings.reference_path(settings.ref_exponent).display()
    );
    let mut report = ErrorReport::default();
    for &exp in &settings.h_exponents {
        let coarse = ensure_reference(settings, exp)?;
        let times: Vec<f64> = coarse.times.iter().copied().filter(|&t| t > 0.0).collect();
        let error = relative_l1_error(&coarse, &fine, &times)?;
        report.rows.push(ErrorRow {
            method: "full".into(),
            h: 0.5f64.powi(exp as i32),
            m: 0,
            error,
        });
        println!("full model at h = 2^-{exp}: error {error:.6e}");
    }
    if !report.rows.is_empty() {
        let path = settings.out.join(format!(
            "errors_full_ref{}_{}.csv",
            settings.ref_exponent,
            settings.scenario_hash()
        ));
        report.write_csv(&path)?;
        println!("discretization errors: {}", path.display());
    }
    Ok(())
}

pub fn cmd_study(settings: &RunSettings, method: StudyMethod) -> Result<()> {
    ensure_out_dir(&settings.out)?;
    check_exponents(settings)?;
    if method == StudyMethod::GreedyPde && settings.n_sample == 0 {
        return Err(Error::InvalidArgument(
            "pde snapshot source needs n_sample >= 1".into(),
        ));
    }
    let reference = ensure_reference(settings, settings.ref_exponent)?;
    let cfg = StudyConfig {
        problem: &settings.problem,
        reference: &reference,
        comparison_times: default_comparison_times(settings.problem.t_end),
        cfl: settings.cfl,
        gs_tol: settings.gs_tol,
        param_box: settings.param_box.clone(),
        n_sample: settings.n_sample,
        seed: settings.seed,
        truth_points: (12, 16),
    };
    let output = run_error_study(method, &settings.h_exponents, settings.m_max, &cfg)?;

    let hash = settings.study_hash(method);
    let table_path = settings
        .out
        .join(format!("errors_{}_{}.csv", method.name(), hash));
    output.report.write_csv(&table_path)?;
    println!("error table: {}", table_path.display());

    for (exp, greedy) in &output.greedy {
        for (i, basis) in greedy.bases.iter().enumerate() {
            let bpath = settings.out.join(format!(
                "basis_{}_h{}_m{}_{}.txt",
                method.name(),
                exp,
                i + 1,
                hash
            ));
            write_basis(basis, &bpath)?;
        }
        let cpath = settings
            .out
            .join(format!("chosen_{}_h{}_{}.csv", method.name(), exp, hash));
        let mut text = String::from("level,snapshot,error\n");
        for i in 0..greedy.chosen.len() {
            text.push_str(&format!(
                "{},{},{:.16e}\n",
                i + 1,
                greedy.chosen[i],
                greedy.errors[i]
            ));
            log::info!(
                "level {} at h = 2^-{exp}: snapshot {} in {:.3}s",
                i + 1,
                greedy.chosen[i],
                greedy.timings[i].as_secs_f64()
            );
        }
        fs::write(&cpath, text).map_err(|e| Error::Io {
            path: cpath.display().to_string(),
            source: e,
        })?;
        println!("greedy picks at h = 2^-{exp}: {}", cpath.display());
    }
    for row in &output.report.rows {
        log::info!(
            "{} h={} m={}: error {:.6e}",
            row.method,
            row.h,
            row.m,
            row.error
        );
    }
    Ok(())
}

fn list_files(out: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::Io {
            path: out.display().to_string(),
            source: e,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with(prefix) && name.ends_with(".csv") {
            found.push(entry.path());
        }
    }
    found.sort();
    Ok(found)
}

pub fn cmd_report(out: &Path) -> Result<()> {
    let mut merged = ErrorReport::default();
    for path in list_files(out, "errors_")? {
        let report = ErrorReport::read_csv(&path)?;
        merged.rows.extend(report.rows);
    }
    if merged.rows.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "nothing to report: no error tables in {}",
            out.display()
        )));
    }
    merged.rows.sort_by(|a, b| {
        (&a.method, &a.h, a.m)
            .partial_cmp(&(&b.method, &b.h, b.m))
            .unwrap()
    });

    let summary = out.join("summary.csv");
    merged.write_csv(&summary)?;

    println!("{:<14} {:>10} {:>4} {:>14}", "method", "h", "m", "error");
    for r in &merged.rows {
        println!("{:<14} {:>10} {:>4} {:>14.6e}", r.method, r.h, r.m, r.error);
    }
    println!("summary: {}", summary.display());

    write_plot_files(out, &merged)?;
    Ok(())
}

/// One CSV per mesh width with the error of every method against m, plus the
/// (m-independent) full-model discretization error, ready for plotting.
fn write_plot_files(out: &Path, merged: &ErrorReport) -> Result<()> {
    let mut h_values: Vec<f64> = Vec::new();
    for r in &merged.rows {
        if r.method != "full" && !h_values.iter().any(|&h| (h - r.h).abs() < 1e-15) {
            h_values.push(r.h);
        }
    }
    for h in h_values {
        let exp = (-h.log2()).round() as i32;
        let methods = ["legendre", "greedy_truth", "greedy_pde"];
        let mut columns: BTreeMap<usize, [Option<f64>; 3]> = BTreeMap::new();
        for r in &merged.rows {
            if (r.h - h).abs() > 1e-15 {
                continue;
            }
            if let Some(c) = methods.iter().position(|&m| m == r.method) {
                columns.entry(r.m).or_default()[c] = Some(r.error);
            }
        }
        if columns.is_empty() {
            continue;
        }
        let disc = merged
            .rows
            .iter()
            .find(|r| r.method == "full" && (r.h - h).abs() < 1e-15)
            .map(|r| r.error);
        let fmt = |v: Option<f64>| v.map_or(String::new(), |e| format!("{e:.16e}"));
        let mut text = String::from("m,legendre,greedy_truth,greedy_pde,discretization\n");
        for (m, errs) in &columns {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                m,
                fmt(errs[0]),
                fmt(errs[1]),
                fmt(errs[2]),
                fmt(disc)
            ));
        }
        let path = out.join(format!("plot_h{exp}.csv"));
        fs::write(&path, text).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        println!("plot data: {}", path.display());
    }
    Ok(())
}
