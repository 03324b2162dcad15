//! Velocity bases and their Galerkin-reduced operators.
//!
//! A basis is a set of orthonormal piecewise linear velocity profiles. Its
//! reduced operators are the m x m contractions of the FEM matrices plus the
//! eigendecomposition-derived pieces the upwind moment solver needs.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::linalg::{Cholesky, SymmetricEigen};
use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::problem::{discrete_delta, BoundaryData, KineticProblem};
use crate::velocity_fem::{interpolate, FemOperators, NodalFunction, VelocityGrid};

/// Condition number guard for the reduced mass matrix.
const MAX_MASS_COND: f64 = 1e12;

/// Orthonormal set of velocity profiles on a shared grid.
#[derive(Debug, Clone)]
pub struct VelocityBasis {
    pub grid: Arc<VelocityGrid>,
    pub functions: Vec<NodalFunction>,
}

impl VelocityBasis {
    pub fn empty(grid: Arc<VelocityGrid>) -> Self {
        VelocityBasis {
            grid,
            functions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// max_ij |(phi_i, phi_j) - delta_ij|.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            for j in i..self.len() {
                let inner = self
                    .grid
                    .l2_inner_slices(&self.functions[i].values, &self.functions[j].values);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner - target).abs());
            }
        }
        worst
    }
}

/// Result of attempting to extend a basis by one candidate.
#[derive(Debug, Clone)]
pub enum GramSchmidtOutcome {
    Extended(VelocityBasis),
    /// Candidate was (numerically) in the span, or zero.
    Rejected,
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. The candidate is
/// rejected when its orthogonal remainder is below `tol` times its own norm.
pub fn gram_schmidt_extend(
    basis: &VelocityBasis,
    candidate: &NodalFunction,
    tol: f64,
) -> Result<GramSchmidtOutcome> {
    if !basis.grid.compatible(&candidate.grid) {
        return Err(Error::GridMismatch(format!(
            "gram_schmidt_extend: {} vs {} cells",
            basis.grid.n_cells, candidate.grid.n_cells
        )));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("gs tolerance {tol}")));
    }
    let grid = &basis.grid;
    let cand_norm = candidate.l2_norm();
    if cand_norm <= f64::MIN_POSITIVE {
        return Ok(GramSchmidtOutcome::Rejected);
    }

    let mut r = candidate.values.clone();
    for _pass in 0..2 {
        for b in &basis.functions {
            let c = grid.l2_inner_slices(&r, &b.values);
            for (rv, bv) in r.iter_mut().zip(&b.values) {
                *rv -= c * bv;
            }
        }
    }
    let r_norm = grid.l2_inner_slices(&r, &r).max(0.0).sqrt();
    if r_norm <= tol * cand_norm {
        return Ok(GramSchmidtOutcome::Rejected);
    }
    for rv in r.iter_mut() {
        *rv /= r_norm;
    }
    let mut functions = basis.functions.clone();
    functions.push(NodalFunction {
        grid: Arc::clone(grid),
        values: r,
    });
    Ok(GramSchmidtOutcome::Extended(VelocityBasis {
        grid: Arc::clone(grid),
        functions,
    }))
}

/// Value of the normalized Legendre polynomial sqrt((2i+1)/2) P_i at `v`.
fn normalized_legendre(i: usize, v: f64) -> f64 {
    let mut p_prev = 1.0;
    let mut p = v;
    if i == 0 {
        return (0.5f64).sqrt();
    }
    for k in 1..i {
        let next = ((2 * k + 1) as f64 * v * p - k as f64 * p_prev) / (k + 1) as f64;
        p_prev = p;
        p = next;
    }
    ((2 * i + 1) as f64 / 2.0).sqrt() * p
}

/// Basis of nodal interpolants of the first `m` normalized Legendre
/// polynomials, re-orthonormalized discretely.
pub fn legendre_basis(m: usize, grid: &Arc<VelocityGrid>) -> Result<VelocityBasis> {
    if m == 0 {
        return Err(Error::InvalidArgument("legendre basis needs m >= 1".into()));
    }
    let mut basis = VelocityBasis::empty(Arc::clone(grid));
    for i in 0..m {
        let cand = interpolate(grid, |v| normalized_legendre(i, v))?;
        match gram_schmidt_extend(&basis, &cand, 1e-10)? {
            GramSchmidtOutcome::Extended(b) => basis = b,
            GramSchmidtOutcome::Rejected => {
                return Err(Error::DegenerateBasis(format!(
                    "legendre interpolant {i} is linearly dependent on {} cells",
                    grid.n_cells
                )))
            }
        }
    }
    Ok(basis)
}

/// Reduced m x m operators of a basis, together with the eigendecomposition
/// of the advection matrix and its sign split.
#[derive(Debug, Clone)]
pub struct ReducedOperators {
    pub m: usize,
    /// (phi_i, phi_j)
    pub mass: DMatrix<f64>,
    /// (v phi_i, phi_j)
    pub transport: DMatrix<f64>,
    /// ((1-v^2) phi_i', phi_j')
    pub stiffness: DMatrix<f64>,
    /// M^{-1} D
    pub advection: DMatrix<f64>,
    /// M^{-1} S
    pub reaction: DMatrix<f64>,
    /// Eigenvalues of the advection matrix, ascending. All real.
    pub eigenvalues: DVector<f64>,
    pub eig_right: DMatrix<f64>,
    pub eig_right_inv: DMatrix<f64>,
    /// R max(Lambda, 0) R^{-1}
    pub a_plus: DMatrix<f64>,
    /// R min(Lambda, 0) R^{-1}
    pub a_minus: DMatrix<f64>,
    /// Spectral radius of the advection matrix.
    pub lambda_max: f64,
    /// Largest eigenvalue of M^{-1} S (nonnegative).
    pub reaction_spectral_max: f64,
    mass_chol: Cholesky<f64, Dyn>,
}

impl ReducedOperators {
    /// Solves mass * x = rhs.
    pub fn solve_mass(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.mass_chol.solve(rhs)
    }
}

fn contract(basis: &VelocityBasis, op: &crate::tridiag::Tridiag) -> DMatrix<f64> {
    let m = basis.len();
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        let opj = op.matvec(&basis.functions[j].values);
        for i in 0..m {
            let dot: f64 = basis.functions[i]
                .values
                .iter()
                .zip(&opj)
                .map(|(a, b)| a * b)
                .sum();
            out[(i, j)] = dot;
        }
    }
    // the integrands are symmetric; remove contraction roundoff
    0.5 * (&out + out.transpose())
}

/// Contracts the FEM matrices onto `basis` and prepares the advection
/// eigenstructure. The advection matrix is similar to the symmetric
/// L^{-1} D L^{-T} (M = L L^T), so its spectrum is real; eigenvectors are
/// taken from that symmetric problem.
pub fn reduced_operators(basis: &VelocityBasis, fem: &FemOperators) -> Result<ReducedOperators> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument(
            "reduced_operators on empty basis".into(),
        ));
    }
    if !basis.grid.compatible(&fem.grid) {
        return Err(Error::GridMismatch(format!(
            "reduced_operators: basis on {} cells, operators on {}",
            basis.grid.n_cells, fem.grid.n_cells
        )));
    }
    let m = basis.len();
    let mass = contract(basis, &fem.mass);
    let transport = contract(basis, &fem.transport);
    let stiffness = contract(basis, &fem.stiffness_lb);

    let mass_eig = SymmetricEigen::new(mass.clone());
    let mut lam_min = f64::INFINITY;
    let mut lam_max = f64::NEG_INFINITY;
    for &l in mass_eig.eigenvalues.iter() {
        lam_min = lam_min.min(l);
        lam_max = lam_max.max(l);
    }
    if lam_min <= 0.0 || lam_max / lam_min > MAX_MASS_COND {
        return Err(Error::DegenerateBasis(format!(
            "reduced mass spectrum [{lam_min:e}, {lam_max:e}]"
        )));
    }
    let mass_chol = Cholesky::new(mass.clone())
        .ok_or_else(|| Error::DegenerateBasis("reduced mass not SPD".into()))?;
    let l = mass_chol.l();

    // B = L^{-1} D L^{-T}, symmetric with the advection spectrum
    let y = l
        .solve_lower_triangular(&transport)
        .ok_or_else(|| Error::DegenerateBasis("singular mass factor".into()))?;
    let b = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::DegenerateBasis("singular mass factor".into()))?
        .transpose();
    let b = 0.5 * (&b + b.transpose());
    let eig = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[c]).unwrap());
    let eigenvalues = DVector::from_iterator(m, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut v_sorted = DMatrix::zeros(m, m);
    for (col, &k) in order.iter().enumerate() {
        v_sorted.set_column(col, &eig.eigenvectors.column(k));
    }

    // R = L^{-T} V, R^{-1} = V^T L^T
    let lt = l.transpose();
    let eig_right = lt
        .solve_upper_triangular(&v_sorted)
        .ok_or_else(|| Error::DegenerateBasis("singular mass factor".into()))?;
    let eig_right_inv = v_sorted.transpose() * &lt;

    let advection = mass_chol.solve(&transport);
    let reaction = mass_chol.solve(&stiffness);

    let lam_plus = DMatrix::from_diagonal(&eigenvalues.map(|l| l.max(0.0)));
    let lam_minus = DMatrix::from_diagonal(&eigenvalues.map(|l| l.min(0.0)));
    let a_plus = &eig_right * lam_plus * &eig_right_inv;
    let a_minus = &eig_right * lam_minus * &eig_right_inv;

    let lambda_max = eigenvalues.iter().fold(0.0f64, |acc, l| acc.max(l.abs()));

    let ys = l
        .solve_lower_triangular(&stiffness)
        .ok_or_else(|| Error::DegenerateBasis("singular mass factor".into()))?;
    let bs = l
        .solve_lower_triangular(&ys.transpose())
        .ok_or_else(|| Error::DegenerateBasis("singular mass factor".into()))?
        .transpose();
    let bs = 0.5 * (&bs + bs.transpose());
    let s_eig = SymmetricEigen::new(bs);
    let reaction_spectral_max = s_eig.eigenvalues.iter().fold(0.0f64, |acc, l| acc.max(*l));

    Ok(ReducedOperators {
        m,
        mass,
        transport,
        stiffness,
        advection,
        reaction,
        eigenvalues,
        eig_right,
        eig_right_inv,
        a_plus,
        a_minus,
        lambda_max,
        reaction_spectral_max,
        mass_chol,
    })
}

/// L2-orthogonal projection coefficients of `f` onto the basis.
pub fn project_function(
    f: &NodalFunction,
    basis: &VelocityBasis,
    ops: &ReducedOperators,
) -> Result<DVector<f64>> {
    if !f.grid.compatible(&basis.grid) {
        return Err(Error::GridMismatch("project_function".into()));
    }
    let raw = DVector::from_iterator(
        basis.len(),
        basis
            .functions
            .iter()
            .map(|phi| basis.grid.l2_inner_slices(&f.values, &phi.values)),
    );
    Ok(ops.solve_mass(&raw))
}

/// Space boundary selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Moments of the ingoing boundary profile, i.e. the projection of the
/// prescribed data extended by zero over the outgoing half-line. The v = 0
/// node belongs to the zero branch on both sides.
pub fn incoming_boundary_moments(
    problem: &KineticProblem,
    basis: &VelocityBasis,
    ops: &ReducedOperators,
    _t: f64,
    side: Side,
) -> Result<DVector<f64>> {
    let grid = &basis.grid;
    let data = match side {
        Side::Left => &problem.left_bc,
        Side::Right => &problem.right_bc,
    };
    let profile = match (side, data) {
        (Side::Left, BoundaryData::Constant(c)) => {
            let values = grid
                .nodes
                .iter()
                .map(|&v| if v > 0.0 { *c } else { 0.0 })
                .collect();
            NodalFunction {
                grid: Arc::clone(grid),
                values,
            }
        }
        (Side::Right, BoundaryData::Constant(c)) => {
            let values = grid
                .nodes
                .iter()
                .map(|&v| if v < 0.0 { *c } else { 0.0 })
                .collect();
            NodalFunction {
                grid: Arc::clone(grid),
                values,
            }
        }
        (Side::Left, BoundaryData::DeltaAtOne(amp)) => {
            let mut d = discrete_delta(grid);
            for v in d.values.iter_mut() {
                *v *= amp;
            }
            d
        }
        // a beam at v = +1 is outgoing on the right boundary
        (Side::Right, BoundaryData::DeltaAtOne(_)) => NodalFunction::zero(Arc::clone(grid)),
    };
    project_function(&profile, basis, ops)
}

/// Writes a basis as plain text: a `n_cells m` header line, then one line of
/// nodal values per function.
pub fn write_basis(basis: &VelocityBasis, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", basis.grid.n_cells, basis.len()));
    for f in &basis.functions {
        let row: Vec<String> = f.values.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a basis written by [`write_basis`], validating dimensions.
pub fn read_basis(path: &Path) -> Result<VelocityBasis> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        what: "empty file".into(),
    })?;
    let parse_err = |what: String| Error::Parse {
        path: path.display().to_string(),
        what,
    };
    let mut head = header.split_whitespace();
    let n_cells: usize = head
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err("bad header".into()))?;
    let m: usize = head
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err("bad header".into()))?;
    let grid = Arc::new(VelocityGrid::new(n_cells)?);
    let mut functions = Vec::with_capacity(m);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let values: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(|s| s.parse::<f64>()).collect();
        let values = values.map_err(|e| parse_err(format!("row {i}: {e}")))?;
        functions.push(NodalFunction::from_values(Arc::clone(&grid), values)?);
    }
    if functions.len() != m {
        return Err(parse_err(format!(
            "header says {m} functions, found {}",
            functions.len()
        )));
    }
    Ok(VelocityBasis { grid, functions })
}
