//! Finite volume solver for the reduced moment system
//!   dp/dt + M^{-1}D dp/dx + (sigma I + (T/2) M^{-1}S) p = M^{-1} q,
//! with upwind fluxes built from the advection eigenstructure and forward
//! Euler in time.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::basis::{
    incoming_boundary_moments, project_function, ReducedOperators, Side, VelocityBasis,
};
use crate::error::{Error, Result};
use crate::problem::{KineticProblem, SpaceGrid};
use crate::velocity_fem::{interpolate, FemOperators};

/// Moment coefficients on a space grid at a set of times. `data[k]` is the
/// m x n_cells coefficient matrix at `times[k]`.
#[derive(Debug, Clone)]
pub struct MomentField {
    pub space_grid: SpaceGrid,
    pub times: Vec<f64>,
    pub data: Vec<DMatrix<f64>>,
}

/// Scalar density (zeroth velocity moment) on a space grid over time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub space_grid: SpaceGrid,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Upwind interface flux A+ p_left + A- p_right.
pub fn upwind_flux(
    p_left: &DVector<f64>,
    p_right: &DVector<f64>,
    ops: &ReducedOperators,
) -> DVector<f64> {
    &ops.a_plus * p_left + &ops.a_minus * p_right
}

/// Largest stable step: cfl * min(h_x / max|lambda|, 2 / rho) where rho
/// bounds the reaction spectral radius over the coefficient regions. Infinite
/// when the system has neither advection nor reaction.
pub fn stable_dt(ops: &ReducedOperators, problem: &KineticProblem, h_x: f64, cfl: f64) -> f64 {
    let advective = if ops.lambda_max > 1e-14 {
        h_x / ops.lambda_max
    } else {
        f64::INFINITY
    };
    let mut rho = 0.0f64;
    for (sigma, temp) in problem.coefficient_regions() {
        rho = rho.max(sigma + 0.5 * temp * ops.reaction_spectral_max);
    }
    let reactive = if rho > 1e-14 {
        2.0 / rho
    } else {
        f64::INFINITY
    };
    cfl * advective.min(reactive)
}

/// Boundary fluxes of one explicit step, for budget checks.
#[derive(Debug, Clone)]
pub struct StepFluxes {
    pub left: DVector<f64>,
    pub right: DVector<f64>,
}

/// Explicit stepper for the reduced system. Owns its state; ghost cells carry
/// the moments of the ingoing boundary data.
pub struct MomentRun {
    m: usize,
    n_cells: usize,
    h_x: f64,
    time: f64,
    state: DMatrix<f64>,
    next: DMatrix<f64>,
    fluxes: DMatrix<f64>,
    a_plus: DMatrix<f64>,
    a_minus: DMatrix<f64>,
    ghost_left: DVector<f64>,
    ghost_right: DVector<f64>,
    /// sigma I + (T/2) M^{-1}S per distinct coefficient region
    reaction_mats: Vec<DMatrix<f64>>,
    cell_region: Vec<usize>,
    /// M^{-1} (phi_i, 1): moments of an isotropic unit source
    source_moments: DVector<f64>,
    centers: Vec<f64>,
    problem: KineticProblem,
    scratch: DVector<f64>,
}

impl MomentRun {
    pub fn new(
        problem: &KineticProblem,
        basis: &VelocityBasis,
        ops: &ReducedOperators,
        space_grid: &SpaceGrid,
    ) -> Result<Self> {
        if basis.len() != ops.m {
            return Err(Error::InvalidArgument(format!(
                "basis has {} functions, operators are {}x{}",
                basis.len(),
                ops.m,
                ops.m
            )));
        }
        let (a, b) = problem.x_range;
        if (space_grid.x_range.0 - a).abs() > 1e-12 || (space_grid.x_range.1 - b).abs() > 1e-12 {
            return Err(Error::GridMismatch(format!(
                "space grid {:?} does not span the domain ({a}, {b})",
                space_grid.x_range
            )));
        }
        let m = ops.m;
        let n_cells = space_grid.n_cells;
        let centers = space_grid.centers();

        let mut state = DMatrix::zeros(m, n_cells);
        for (j, &x) in centers.iter().enumerate() {
            let profile = interpolate(&basis.grid, |v| problem.initial.eval(x, v))?;
            let p = project_function(&profile, basis, ops)?;
            state.set_column(j, &p);
        }

        let ghost_left = incoming_boundary_moments(problem, basis, ops, 0.0, Side::Left)?;
        let ghost_right = incoming_boundary_moments(problem, basis, ops, 0.0, Side::Right)?;

        let regions = problem.coefficient_regions();
        let reaction_mats: Vec<DMatrix<f64>> = regions
            .iter()
            .map(|&(sigma, temp)| {
                DMatrix::identity(m, m) * sigma + 0.5 * temp * &ops.reaction
            })
            .collect();
        let mut cell_region = Vec::with_capacity(n_cells);
        for &x in &centers {
            let pair = problem.evaluate_coefficients(0.0, x)?;
            let idx = regions
                .iter()
                .position(|&r| r == pair)
                .expect("coefficient_regions covers all cells");
            cell_region.push(idx);
        }

        let ones = interpolate(&basis.grid, |_| 1.0)?;
        let source_moments = project_function(&ones, basis, ops)?;

        Ok(MomentRun {
            m,
            n_cells,
            h_x: space_grid.h,
            time: 0.0,
            state,
            next: DMatrix::zeros(m, n_cells),
            fluxes: DMatrix::zeros(m, n_cells + 1),
            a_plus: ops.a_plus.clone(),
            a_minus: ops.a_minus.clone(),
            ghost_left,
            ghost_right,
            reaction_mats,
            cell_region,
            source_moments,
            centers,
            problem: problem.clone(),
            scratch: DVector::zeros(m),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> &DMatrix<f64> {
        &self.state
    }

    /// One forward Euler step. Returns the boundary fluxes it used.
    pub fn step(&mut self, dt: f64) -> StepFluxes {
        let n = self.n_cells;
        // interface fluxes, ghost cells at both ends
        self.fluxes
            .column_mut(0)
            .gemv(1.0, &self.a_plus, &self.ghost_left, 0.0);
        {
            let (aminus, state) = (&self.a_minus, &self.state);
            let mut col = self.fluxes.column_mut(0);
            col.gemv(1.0, aminus, &state.column(0), 1.0);
        }
        for j in 1..n {
            let mut col = self.fluxes.column_mut(j);
            col.gemv(1.0, &self.a_plus, &self.state.column(j - 1), 0.0);
            col.gemv(1.0, &self.a_minus, &self.state.column(j), 1.0);
        }
        {
            let mut col = self.fluxes.column_mut(n);
            col.gemv(1.0, &self.a_plus, &self.state.column(n - 1), 0.0);
            col.gemv(1.0, &self.a_minus, &self.ghost_right, 1.0);
        }

        let c = dt / self.h_x;
        for j in 0..n {
            self.scratch.gemv(
                1.0,
                &self.reaction_mats[self.cell_region[j]],
                &self.state.column(j),
                0.0,
            );
            let q = dt * self.problem.source_at(self.time, self.centers[j]);
            for i in 0..self.m {
                self.next[(i, j)] = self.state[(i, j)]
                    - c * (self.fluxes[(i, j + 1)] - self.fluxes[(i, j)])
                    - dt * self.scratch[i]
                    + q * self.source_moments[i];
            }
        }
        std::mem::swap(&mut self.state, &mut self.next);
        self.time += dt;
        StepFluxes {
            left: self.fluxes.column(0).into_owned(),
            right: self.fluxes.column(n).into_owned(),
        }
    }
}

/// Integrates the reduced system to each requested output time. Each segment
/// between consecutive outputs is covered by uniform substeps of at most the
/// stable step.
pub fn solve_moment_system(
    problem: &KineticProblem,
    basis: &VelocityBasis,
    ops: &ReducedOperators,
    space_grid: &SpaceGrid,
    output_times: &[f64],
    cfl: f64,
) -> Result<MomentField> {
    if output_times.is_empty() {
        return Err(Error::InvalidArgument("no output times".into()));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidArgument(format!("cfl = {cfl} not in (0, 1]")));
    }
    for w in output_times.windows(2) {
        if w[1] < w[0] {
            return Err(Error::InvalidArgument("output times not sorted".into()));
        }
    }
    if output_times[0] < 0.0 || *output_times.last().unwrap() > problem.t_end + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "output times must lie in [0, {}]",
            problem.t_end
        )));
    }

    let dt_max = stable_dt(ops, problem, space_grid.h, cfl);
    let mut run = MomentRun::new(problem, basis, ops, space_grid)?;
    let mut times = Vec::with_capacity(output_times.len());
    let mut data = Vec::with_capacity(output_times.len());

    for &target in output_times {
        let delta = target - run.time();
        if delta > 1e-12 {
            let n_steps = if dt_max.is_finite() {
                ((delta / dt_max) - 1e-9).ceil().max(1.0) as usize
            } else {
                1
            };
            let dt = delta / n_steps as f64;
            for _ in 0..n_steps {
                run.step(dt);
            }
        }
        if run.state().iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverDiverged {
                t: target,
                what: "moment coefficients are non-finite".into(),
            });
        }
        times.push(target);
        data.push(run.state().clone());
    }
    Ok(MomentField {
        space_grid: space_grid.clone(),
        times,
        data,
    })
}

/// Scalar density rho(t, x) = sum_i p_i (phi_i, 1)_v.
pub fn spatial_density(
    field: &MomentField,
    basis: &VelocityBasis,
    fem: &FemOperators,
) -> Result<DensityField> {
    if !basis.grid.compatible(&fem.grid) {
        return Err(Error::GridMismatch("spatial_density".into()));
    }
    let m = basis.len();
    if field.data.iter().any(|d| d.nrows() != m) {
        return Err(Error::InvalidArgument(
            "moment field dimension does not match basis".into(),
        ));
    }
    // (phi_i, 1) through the mass matrix: exact for P1
    let ones = vec![1.0; fem.grid.n_nodes()];
    let m_ones = fem.mass.matvec(&ones);
    let weights: Vec<f64> = basis
        .functions
        .iter()
        .map(|phi| phi.values.iter().zip(&m_ones).map(|(a, b)| a * b).sum())
        .collect();

    let values = field
        .data
        .iter()
        .map(|p| {
            (0..p.ncols())
                .map(|j| (0..m).map(|i| weights[i] * p[(i, j)]).sum())
                .collect()
        })
        .collect();
    Ok(DensityField {
        space_grid: field.space_grid.clone(),
        times: field.times.clone(),
        values,
    })
}

impl DensityField {
    /// Plain CSV: `t,x,density` with full f64 precision.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("t,x,density\n");
        for (k, t) in self.times.iter().enumerate() {
            for (j, v) in self.values[k].iter().enumerate() {
                out.push_str(&format!("{t:.16e},{:.16e},{v:.16e}\n", self.space_grid.center(j)));
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<DensityField> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let perr = |what: String| Error::Parse {
            path: path.display().to_string(),
            what,
        };
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || {
                parts
                    .next()
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| perr(format!("bad row at line {}", i + 1)))
            };
            rows.push((next()?, next()?, next()?));
        }
        if rows.is_empty() {
            return Err(perr("no data rows".into()));
        }
        let mut times = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        let mut xs: Vec<f64> = Vec::new();
        for (t, x, v) in rows {
            if times.last() != Some(&t) {
                times.push(t);
                values.push(Vec::new());
            }
            if times.len() == 1 {
                xs.push(x);
            }
            values.last_mut().unwrap().push(v);
        }
        if xs.len() < 2 {
            return Err(perr("need at least two space points".into()));
        }
        if values.iter().any(|b| b.len() != xs.len()) {
            return Err(perr("ragged time blocks".into()));
        }
        let h = xs[1] - xs[0];
        if h <= 0.0 || xs.windows(2).any(|w| (w[1] - w[0] - h).abs() > 1e-9 * h) {
            return Err(perr("space points are not uniform".into()));
        }
        let space_grid = SpaceGrid::new((xs[0] - 0.5 * h, xs[xs.len() - 1] + 0.5 * h), xs.len())?;
        Ok(DensityField {
            space_grid,
            times,
            values,
        })
    }
}

impl MomentField {
    /// CSV with one row per (t, cell): `t,x,p1,...,pm`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let m = self.data.first().map_or(0, |d| d.nrows());
        let mut header = String::from("t,x");
        for i in 1..=m {
            header.push_str(&format!(",p{i}"));
        }
        header.push('\n');
        let mut out = header;
        for (k, t) in self.times.iter().enumerate() {
            for j in 0..self.space_grid.n_cells {
                out.push_str(&format!("{t:.16e},{:.16e}", self.space_grid.center(j)));
                for i in 0..m {
                    out.push_str(&format!(",{:.16e}", self.data[k][(i, j)]));
                }
                out.push('\n');
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}
