//! Parametrized elliptic velocity PDE whose solutions ("snapshots") seed the
//! greedy basis search.
//!
//! For a parameter mu = (quadrature points, weights, P, dP/dx, dP/dt,
//! boundary values) the snapshot solves
//!   a(mu) ((1-v^2) phi', w') + b(mu) (v phi, w) + c(mu) (phi, w) = (q_hat, w)
//! on (-1, 1) with Dirichlet data phi(-1) = phi_l, phi(1) = phi_r.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::parallel;
use crate::problem::KineticProblem;
use crate::tridiag::Tridiag;
use crate::velocity_fem::{FemOperators, NodalFunction, VelocityGrid};

/// Quadrature-sampled trace of the kinetic solution entering the snapshot
/// equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    /// (t^q, x^q) pairs inside the space-time domain.
    pub quad_points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    /// P evaluated at the quadrature points.
    pub p_vals: Vec<f64>,
    /// dP/dx at the quadrature points.
    pub dx_p: Vec<f64>,
    /// dP/dt at the quadrature points.
    pub dt_p: Vec<f64>,
    pub phi_left: f64,
    pub phi_right: f64,
}

/// Sampling ranges for [`sample_parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBox {
    pub t: (f64, f64),
    pub x: (f64, f64),
    pub p: (f64, f64),
    pub dx_p: (f64, f64),
    pub dt_p: (f64, f64),
    pub boundary: (f64, f64),
    pub n_quad: usize,
}

impl ParameterBox {
    /// Ranges used for the beam problem studies (single quadrature point).
    pub fn sourcebeam_default() -> Self {
        ParameterBox {
            t: (0.0, 4.0),
            x: (1.0, 3.0),
            p: (0.01, 1.2),
            dx_p: (-5.4, 0.9),
            dt_p: (0.0, 5.0),
            boundary: (0.0, 1.0),
            n_quad: 1,
        }
    }
}

/// Coefficients of the assembled snapshot equation.
#[derive(Debug, Clone)]
pub struct PdeCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub q_hat: NodalFunction,
}

/// Contracts a parameter point to scalar coefficients and the source profile:
///   a = sum_q w_q (T/2) P_q^2
///   b = sum_q w_q (dP/dx)_q P_q
///   c = sum_q w_q [ (dP/dt)_q P_q + sigma_a P_q^2 ]
///   q_hat(v) = sum_q w_q P_q Q(t^q, x^q, v)
pub fn coefficients(
    mu: &ParameterPoint,
    problem: &KineticProblem,
    grid: &Arc<VelocityGrid>,
) -> Result<PdeCoefficients> {
    let q = mu.quad_points.len();
    if q == 0
        || mu.weights.len() != q
        || mu.p_vals.len() != q
        || mu.dx_p.len() != q
        || mu.dt_p.len() != q
    {
        return Err(Error::InvalidArgument(
            "parameter point arrays must share one nonzero length".into(),
        ));
    }
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    let mut src = vec![0.0; grid.n_nodes()];
    for k in 0..q {
        let (t, x) = mu.quad_points[k];
        let (sigma, temp) = problem.evaluate_coefficients(t, x)?;
        let w = mu.weights[k];
        let p = mu.p_vals[k];
        a += w * 0.5 * temp * p * p;
        b += w * mu.dx_p[k] * p;
        c += w * (mu.dt_p[k] * p + sigma * p * p);
        let qv = problem.source_at(t, x);
        if qv != 0.0 {
            // the sources here are isotropic
            for s in src.iter_mut() {
                *s += w * p * qv;
            }
        }
    }
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::NonFinite("snapshot coefficients".into()));
    }
    let q_hat = NodalFunction::from_values(Arc::clone(grid), src)?;
    Ok(PdeCoefficients { a, b, c, q_hat })
}

/// Solves the snapshot equation. Interior rows of a*S + b*D + c*M are kept;
/// the Dirichlet values enter the right-hand side through the eliminated
/// columns.
pub fn solve_snapshot(
    coeffs: &PdeCoefficients,
    phi_l: f64,
    phi_r: f64,
    fem: &FemOperators,
) -> Result<NodalFunction> {
    if coeffs.a <= 0.0 {
        return Err(Error::DegenerateDiffusion(coeffs.a));
    }
    if !(phi_l.is_finite() && phi_r.is_finite()) {
        return Err(Error::NonFinite("snapshot boundary values".into()));
    }
    let grid = &fem.grid;
    if !coeffs.q_hat.grid.compatible(grid) {
        return Err(Error::GridMismatch("solve_snapshot".into()));
    }
    let n_nodes = grid.n_nodes();
    let n_int = n_nodes - 2;
    if n_int == 0 {
        return Err(Error::InvalidGrid(
            "snapshot solve needs at least one interior node".into(),
        ));
    }

    let mut full = fem.stiffness_lb.scale(coeffs.a);
    full.axpy(coeffs.b, &fem.transport);
    full.axpy(coeffs.c, &fem.mass);
    let rhs_full = fem.mass.matvec(&coeffs.q_hat.values);

    let mut interior = Tridiag::zeros(n_int);
    for k in 0..n_int {
        interior.diag[k] = full.diag[k + 1];
    }
    for k in 0..n_int.saturating_sub(1) {
        interior.sub[k] = full.sub[k + 1];
        interior.sup[k] = full.sup[k + 1];
    }
    let mut rhs: Vec<f64> = (0..n_int).map(|k| rhs_full[k + 1]).collect();
    rhs[0] -= full.sub[0] * phi_l;
    rhs[n_int - 1] -= full.sup[n_nodes - 2] * phi_r;

    let sol = interior.solve(&rhs)?;
    let mut values = Vec::with_capacity(n_nodes);
    values.push(phi_l);
    values.extend_from_slice(&sol);
    values.push(phi_r);
    NodalFunction::from_values(Arc::clone(grid), values)
}

fn draw(rng: &mut ChaCha12Rng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.gen_range(range.0..range.1)
    } else {
        range.0
    }
}

/// Draws `n` parameter points uniformly from `bx` with a ChaCha12 stream
/// seeded by `seed`. Points whose diffusion coefficient a(mu) is not
/// positive (below 1e-12) are redrawn. Quadrature weights are 1/n_quad.
pub fn sample_parameters(
    bx: &ParameterBox,
    n: usize,
    seed: u64,
    problem: &KineticProblem,
) -> Result<Vec<ParameterPoint>> {
    if bx.n_quad == 0 {
        return Err(Error::InvalidArgument("n_quad must be >= 1".into()));
    }
    for (name, r) in [
        ("t", bx.t),
        ("x", bx.x),
        ("p", bx.p),
        ("dx_p", bx.dx_p),
        ("dt_p", bx.dt_p),
        ("boundary", bx.boundary),
    ] {
        if !(r.0.is_finite() && r.1.is_finite() && r.0 <= r.1) {
            return Err(Error::InvalidArgument(format!(
                "parameter box range {name} = {r:?}"
            )));
        }
    }
    let (xa, xb) = problem.x_range;
    if bx.t.0 < 0.0 || bx.t.1 > problem.t_end || bx.x.0 < xa || bx.x.1 > xb {
        return Err(Error::InvalidArgument(
            "parameter box exceeds the space-time domain".into(),
        ));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let w = 1.0 / bx.n_quad as f64;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut accepted = None;
        for _attempt in 0..1000 {
            let quad_points: Vec<(f64, f64)> = (0..bx.n_quad)
                .map(|_| (draw(&mut rng, bx.t), draw(&mut rng, bx.x)))
                .collect();
            let p_vals: Vec<f64> = (0..bx.n_quad).map(|_| draw(&mut rng, bx.p)).collect();
            let dx_p: Vec<f64> = (0..bx.n_quad).map(|_| draw(&mut rng, bx.dx_p)).collect();
            let dt_p: Vec<f64> = (0..bx.n_quad).map(|_| draw(&mut rng, bx.dt_p)).collect();
            let phi_left = draw(&mut rng, bx.boundary);
            let phi_right = draw(&mut rng, bx.boundary);
            let mut a = 0.0;
            for k in 0..bx.n_quad {
                let (_, temp) = problem.evaluate_coefficients(quad_points[k].0, quad_points[k].1)?;
                a += w * 0.5 * temp * p_vals[k] * p_vals[k];
            }
            if a > 1e-12 {
                accepted = Some(ParameterPoint {
                    quad_points,
                    weights: vec![w; bx.n_quad],
                    p_vals,
                    dx_p,
                    dt_p,
                    phi_left,
                    phi_right,
                });
                break;
            }
        }
        match accepted {
            Some(p) => points.push(p),
            None => {
                return Err(Error::InvalidArgument(
                    "parameter box yields no elliptic points (a <= 1e-12 after 1000 draws)".into(),
                ))
            }
        }
    }
    Ok(points)
}

/// Solves one snapshot per parameter point (in parallel with the `parallel`
/// feature), dropping failed solves. More than 1% failures is an error.
pub fn snapshots_from_parameters(
    params: &[ParameterPoint],
    problem: &KineticProblem,
    grid: &Arc<VelocityGrid>,
) -> Result<Vec<NodalFunction>> {
    let fem = FemOperators::assemble(grid);
    let results = parallel::map_collect(params, |mu| {
        coefficients(mu, problem, grid)
            .and_then(|c| solve_snapshot(&c, mu.phi_left, mu.phi_right, &fem))
    });
    let total = results.len();
    let mut snapshots = Vec::with_capacity(total);
    let mut failed = 0usize;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => snapshots.push(s),
            Err(e) => {
                failed += 1;
                log::warn!("snapshot {i} failed: {e}");
            }
        }
    }
    if failed * 100 > total {
        return Err(Error::SnapshotFailures { failed, total });
    }
    Ok(snapshots)
}

/// Samples `n` parameters and solves their snapshots.
pub fn generate_snapshot_set(
    bx: &ParameterBox,
    n: usize,
    seed: u64,
    problem: &KineticProblem,
    grid: &Arc<VelocityGrid>,
) -> Result<Vec<NodalFunction>> {
    let params = sample_parameters(bx, n, seed, problem)?;
    snapshots_from_parameters(&params, problem, grid)
}
