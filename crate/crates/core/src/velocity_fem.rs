//! P1 finite elements on a uniform velocity grid over [-1, 1].
//!
//! Provides the nodal representation of velocity profiles together with the
//! mass, transport (v-weighted) and Laplace-Beltrami stiffness matrices that
//! every reduced operator is contracted from.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tridiag::Tridiag;

/// Uniform grid on [-1, 1] with `n_cells` cells and `n_cells + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub n_cells: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
}

impl VelocityGrid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!(
                "velocity grid needs at least 2 cells, got {n_cells}"
            )));
        }
        let h = 2.0 / n_cells as f64;
        let mut nodes: Vec<f64> = (0..=n_cells).map(|i| -1.0 + i as f64 * h).collect();
        // pin the endpoints exactly
        nodes[0] = -1.0;
        nodes[n_cells] = 1.0;
        Ok(VelocityGrid { n_cells, h, nodes })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    /// Grids are interchangeable iff they discretize [-1, 1] with the same
    /// number of cells.
    pub fn compatible(&self, other: &VelocityGrid) -> bool {
        self.n_cells == other.n_cells
    }

    /// Exact L2(-1,1) inner product of two piecewise linear nodal vectors.
    pub fn l2_inner_slices(&self, f: &[f64], g: &[f64]) -> f64 {
        assert_eq!(f.len(), self.n_nodes());
        assert_eq!(g.len(), self.n_nodes());
        let c = self.h / 6.0;
        let mut acc = 0.0;
        for k in 0..self.n_cells {
            acc += c
                * (2.0 * f[k] * g[k]
                    + f[k] * g[k + 1]
                    + f[k + 1] * g[k]
                    + 2.0 * f[k + 1] * g[k + 1]);
        }
        acc
    }
}

/// Piecewise linear function given by its nodal values.
#[derive(Debug, Clone)]
pub struct NodalFunction {
    pub grid: Arc<VelocityGrid>,
    pub values: Vec<f64>,
}

impl NodalFunction {
    pub fn from_values(grid: Arc<VelocityGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("nodal values".into()));
        }
        Ok(NodalFunction { grid, values })
    }

    pub fn zero(grid: Arc<VelocityGrid>) -> Self {
        let n = grid.n_nodes();
        NodalFunction {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid
            .l2_inner_slices(&self.values, &self.values)
            .max(0.0)
            .sqrt()
    }
}

/// Nodal interpolant of `f` on `grid`. Fails if `f` is non-finite at a node.
pub fn interpolate<F: Fn(f64) -> f64>(grid: &Arc<VelocityGrid>, f: F) -> Result<NodalFunction> {
    let values: Vec<f64> = grid.nodes.iter().map(|&v| f(v)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("interpolated function value".into()));
    }
    Ok(NodalFunction {
        grid: Arc::clone(grid),
        values,
    })
}

/// Exact L2 inner product of two nodal functions on the same grid.
pub fn l2_inner(f: &NodalFunction, g: &NodalFunction) -> Result<f64> {
    if !f.grid.compatible(&g.grid) {
        return Err(Error::GridMismatch(format!(
            "l2_inner: {} vs {} cells",
            f.grid.n_cells, g.grid.n_cells
        )));
    }
    Ok(f.grid.l2_inner_slices(&f.values, &g.values))
}

/// Assembled P1 matrices: mass (phi_i, phi_j), transport (v phi_i, phi_j) and
/// the Laplace-Beltrami stiffness ((1-v^2) phi_i', phi_j').
#[derive(Debug, Clone)]
pub struct FemOperators {
    pub grid: Arc<VelocityGrid>,
    pub mass: Tridiag,
    pub transport: Tridiag,
    pub stiffness_lb: Tridiag,
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.7745966692414834, 0.5555555555555556), // -sqrt(3/5), 5/9
    (0.0, 0.8888888888888888),
    (0.7745966692414834, 0.5555555555555556),
];

impl FemOperators {
    /// Cellwise 3-point Gauss assembly; exact for all three integrands.
    pub fn assemble(grid: &Arc<VelocityGrid>) -> Self {
        let n = grid.n_nodes();
        let h = grid.h;
        let mut mass = Tridiag::zeros(n);
        let mut transport = Tridiag::zeros(n);
        let mut stiffness = Tridiag::zeros(n);

        for k in 0..grid.n_cells {
            let left = grid.nodes[k];
            let mid = 0.5 * (grid.nodes[k] + grid.nodes[k + 1]);
            let mut m_loc = [[0.0; 2]; 2];
            let mut t_loc = [[0.0; 2]; 2];
            let mut s_loc = [[0.0; 2]; 2];
            for (xi, wq) in GAUSS3 {
                let v = mid + 0.5 * h * xi;
                let w = 0.5 * h * wq;
                let shape = [(grid.nodes[k + 1] - v) / h, (v - left) / h];
                let dshape = [-1.0 / h, 1.0 / h];
                for a in 0..2 {
                    for b in 0..2 {
                        m_loc[a][b] += w * shape[a] * shape[b];
                        t_loc[a][b] += w * v * shape[a] * shape[b];
                        s_loc[a][b] += w * (1.0 - v * v) * dshape[a] * dshape[b];
                    }
                }
            }
            for (loc, glob) in [
                (&m_loc, &mut mass),
                (&t_loc, &mut transport),
                (&s_loc, &mut stiffness),
            ] {
                glob.diag[k] += loc[0][0];
                glob.diag[k + 1] += loc[1][1];
                glob.sup[k] += loc[0][1];
                glob.sub[k] += loc[1][0];
            }
        }

        FemOperators {
            grid: Arc::clone(grid),
            mass,
            transport,
            stiffness_lb: stiffness,
        }
    }
}
