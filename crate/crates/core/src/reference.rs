//! Full-dimensional kinetic reference solver: first-order upwind transport in
//! x, conservative second-order velocity diffusion, IMEX Euler in time
//! (explicit advection and source, implicit absorption and diffusion).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::parallel;
use crate::problem::{BoundaryData, KineticProblem, SpaceGrid};
use crate::velocity_fem::{NodalFunction, VelocityGrid};

/// psi(t, x_j, v_k) on a tensor grid. `data[idx]` is the x-major flat field
/// at `times[idx]`: entry `j * (n_v + 1) + k`.
#[derive(Debug, Clone)]
pub struct FullSolution {
    pub space_grid: SpaceGrid,
    pub velocity_grid: Arc<VelocityGrid>,
    pub times: Vec<f64>,
    pub data: Vec<Vec<f64>>,
}

impl FullSolution {
    /// Velocity profile at stored time index `idx` and space cell `j`.
    pub fn column(&self, idx: usize, j: usize) -> &[f64] {
        let stride = self.velocity_grid.n_nodes();
        &self.data[idx][j * stride..(j + 1) * stride]
    }
}

/// IMEX stepper owning the full field.
pub struct ReferenceRun {
    space_grid: SpaceGrid,
    velocity_grid: Arc<VelocityGrid>,
    time: f64,
    psi: Vec<f64>,
    star: Vec<f64>,
    bc_left: Vec<f64>,
    bc_right: Vec<f64>,
    sigma: Vec<f64>,
    temp: Vec<f64>,
    centers: Vec<f64>,
    /// 1 - v^2 at cell faces (midpoints), length n_v
    face_coef: Vec<f64>,
    /// trapezoid node weights: h/2 at the ends, h inside
    v_weights: Vec<f64>,
    problem: KineticProblem,
}

fn inflow_profile(data: &BoundaryData, grid: &VelocityGrid, ingoing_positive: bool) -> Vec<f64> {
    grid.nodes
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let ingoing = if ingoing_positive { v > 0.0 } else { v < 0.0 };
            match data {
                BoundaryData::Constant(c) => {
                    if ingoing {
                        *c
                    } else {
                        0.0
                    }
                }
                BoundaryData::DeltaAtOne(amp) => {
                    if ingoing && k == grid.n_cells {
                        amp * 2.0 / grid.h
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect()
}

impl ReferenceRun {
    pub fn new(problem: &KineticProblem, n_x: usize, n_v: usize) -> Result<Self> {
        let space_grid = SpaceGrid::new(problem.x_range, n_x)?;
        let velocity_grid = Arc::new(VelocityGrid::new(n_v)?);
        let stride = velocity_grid.n_nodes();
        let centers = space_grid.centers();

        let mut psi = Vec::with_capacity(n_x * stride);
        for &x in &centers {
            for &v in &velocity_grid.nodes {
                psi.push(problem.initial.eval(x, v));
            }
        }
        if psi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial data".into()));
        }

        let mut sigma = Vec::with_capacity(n_x);
        let mut temp = Vec::with_capacity(n_x);
        for &x in &centers {
            let (s, t) = problem.evaluate_coefficients(0.0, x)?;
            sigma.push(s);
            temp.push(t);
        }

        let face_coef: Vec<f64> = (0..n_v)
            .map(|k| {
                let vm = 0.5 * (velocity_grid.nodes[k] + velocity_grid.nodes[k + 1]);
                1.0 - vm * vm
            })
            .collect();
        let mut v_weights = vec![velocity_grid.h; stride];
        v_weights[0] = 0.5 * velocity_grid.h;
        v_weights[n_v] = 0.5 * velocity_grid.h;

        let bc_left = inflow_profile(&problem.left_bc, &velocity_grid, true);
        let bc_right = inflow_profile(&problem.right_bc, &velocity_grid, false);

        Ok(ReferenceRun {
            space_grid,
            velocity_grid,
            time: 0.0,
            star: vec![0.0; psi.len()],
            psi,
            bc_left,
            bc_right,
            sigma,
            temp,
            centers,
            face_coef,
            v_weights,
            problem: problem.clone(),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn velocity_grid(&self) -> &Arc<VelocityGrid> {
        &self.velocity_grid
    }

    pub fn space_grid(&self) -> &SpaceGrid {
        &self.space_grid
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let stride = self.velocity_grid.n_nodes();
        &self.psi[j * stride..(j + 1) * stride]
    }

    /// One IMEX Euler step: upwind advection and source explicitly, then
    /// per-column implicit absorption and velocity diffusion.
    pub fn step(&mut self, dt: f64) {
        let stride = self.velocity_grid.n_nodes();
        let n_x = self.space_grid.n_cells;
        let h_x = self.space_grid.h;
        let t = self.time;

        {
            let psi = &self.psi;
            let nodes = &self.velocity_grid.nodes;
            let bc_left = &self.bc_left;
            let bc_right = &self.bc_right;
            let centers = &self.centers;
            let problem = &self.problem;
            parallel::for_each_row_mut(&mut self.star, stride, |j, row| {
                let q = dt * problem.source_at(t, centers[j]);
                let here = &psi[j * stride..(j + 1) * stride];
                for (k, out) in row.iter_mut().enumerate() {
                    let v = nodes[k];
                    let upwind = if v > 0.0 {
                        let left = if j > 0 {
                            psi[(j - 1) * stride + k]
                        } else {
                            bc_left[k]
                        };
                        here[k] - left
                    } else if v < 0.0 {
                        let right = if j + 1 < n_x {
                            psi[(j + 1) * stride + k]
                        } else {
                            bc_right[k]
                        };
                        right - here[k]
                    } else {
                        0.0
                    };
                    *out = here[k] - dt * v * upwind / h_x + q;
                }
            });
        }

        {
            let star = &self.star;
            let sigma = &self.sigma;
            let temp = &self.temp;
            let face = &self.face_coef;
            let weights = &self.v_weights;
            let h_v = self.velocity_grid.h;
            let n_v = self.velocity_grid.n_cells;
            parallel::for_each_row_mut(&mut self.psi, stride, |j, row| {
                let rhs = &star[j * stride..(j + 1) * stride];
                let s = sigma[j];
                let half_t = 0.5 * temp[j];
                if s == 0.0 && half_t == 0.0 {
                    row.copy_from_slice(rhs);
                    return;
                }
                // Thomas on (1 + dt*sigma) I - dt*(T/2) * div((1-v^2) grad)
                let mut c = vec![0.0; stride];
                let mut d = vec![0.0; stride];
                let coef = |k: usize| -> (f64, f64) {
                    let fl = if k > 0 { face[k - 1] } else { 0.0 };
                    let fr = if k < n_v { face[k] } else { 0.0 };
                    let scale = dt * half_t / (h_v * weights[k]);
                    (scale * fl, scale * fr)
                };
                let (_, fr0) = coef(0);
                let mut diag0 = 1.0 + dt * s + fr0;
                c[0] = -fr0 / diag0;
                d[0] = rhs[0] / diag0;
                for k in 1..stride {
                    let (fl, fr) = coef(k);
                    let sub = -fl;
                    diag0 = 1.0 + dt * s + fl + fr;
                    let pivot = diag0 - sub * c[k - 1];
                    if k < stride - 1 {
                        c[k] = -fr / pivot;
                    }
                    d[k] = (rhs[k] - sub * d[k - 1]) / pivot;
                }
                for k in (0..stride - 1).rev() {
                    d[k] -= c[k] * d[k + 1];
                }
                row.copy_from_slice(&d);
            });
        }
        self.time += dt;
    }

    /// Trapezoid velocity integral of column `j`.
    pub fn column_mass(&self, j: usize) -> f64 {
        self.column(j)
            .iter()
            .zip(&self.v_weights)
            .map(|(a, w)| a * w)
            .sum()
    }
}

/// Integrates the full model to each output time with uniform substeps of at
/// most cfl * h_x (the maximum velocity modulus is 1).
pub fn solve_reference(
    problem: &KineticProblem,
    n_x: usize,
    n_v: usize,
    output_times: &[f64],
    cfl: f64,
) -> Result<FullSolution> {
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

    let mut run = ReferenceRun::new(problem, n_x, n_v)?;
    let dt_max = cfl * run.space_grid.h;
    let mut times = Vec::with_capacity(output_times.len());
    let mut data = Vec::with_capacity(output_times.len());
    let mut warned = false;

    for &target in output_times {
        let delta = target - run.time();
        if delta > 1e-12 {
            let n_steps = ((delta / dt_max) - 1e-9).ceil().max(1.0) as usize;
            let dt = delta / n_steps as f64;
            for _ in 0..n_steps {
                run.step(dt);
            }
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in run.psi() {
            if !v.is_finite() {
                return Err(Error::SolverDiverged {
                    t: target,
                    what: "full solution is non-finite".into(),
                });
            }
            min = min.min(v);
            max = max.max(v);
        }
        if !warned && min < -1e-6 * max.max(0.0) {
            log::warn!("reference solution dips to {min:e} (max {max:e}) at t = {target}");
            warned = true;
        }
        times.push(target);
        data.push(run.psi().to_vec());
    }
    Ok(FullSolution {
        space_grid: run.space_grid.clone(),
        velocity_grid: Arc::clone(&run.velocity_grid),
        times,
        data,
    })
}

use crate::moment::DensityField;

/// Trapezoid velocity integral of the full solution at every stored time.
pub fn density_of_full(sol: &FullSolution) -> DensityField {
    let stride = sol.velocity_grid.n_nodes();
    let n_v = sol.velocity_grid.n_cells;
    let mut weights = vec![sol.velocity_grid.h; stride];
    weights[0] *= 0.5;
    weights[n_v] *= 0.5;
    let values = sol
        .data
        .iter()
        .map(|field| {
            (0..sol.space_grid.n_cells)
                .map(|j| {
                    field[j * stride..(j + 1) * stride]
                        .iter()
                        .zip(&weights)
                        .map(|(a, w)| a * w)
                        .sum()
                })
                .collect()
        })
        .collect();
    DensityField {
        space_grid: sol.space_grid.clone(),
        times: sol.times.clone(),
        values,
    }
}

/// Extracts velocity profiles psi(t_i, x_i, .) on the tensor product of
/// `n_t_points` uniform times (excluding zero) and `n_x_points` cell centers
/// of a uniform partition of the space domain. Sample points falling on cell
/// edges resolve to the right cell.
pub fn truth_snapshots(
    sol: &FullSolution,
    n_x_points: usize,
    n_t_points: usize,
) -> Result<Vec<NodalFunction>> {
    if n_x_points == 0 || n_t_points == 0 {
        return Err(Error::InvalidArgument("empty truth sample grid".into()));
    }
    let t_last = *sol.times.last().ok_or(Error::MissingTime(0.0))?;
    let (a, b) = sol.space_grid.x_range;
    let mut snapshots = Vec::with_capacity(n_x_points * n_t_points);
    for i in 1..=n_t_points {
        let t = i as f64 * t_last / n_t_points as f64;
        let idx = sol
            .times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.max(1.0))
            .ok_or(Error::MissingTime(t))?;
        for k in 0..n_x_points {
            let x = a + (k as f64 + 0.5) * (b - a) / n_x_points as f64;
            let j = (((x - a) / sol.space_grid.h).floor() as usize).min(sol.space_grid.n_cells - 1);
            snapshots.push(NodalFunction::from_values(
                Arc::clone(&sol.velocity_grid),
                sol.column(idx, j).to_vec(),
            )?);
        }
    }
    Ok(snapshots)
}
