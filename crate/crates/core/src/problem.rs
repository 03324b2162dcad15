//! Kinetic problem definitions: coefficients, sources, boundary and initial
//! data on a space-time slab (a,b) x [0, t_end] with velocities in [-1, 1].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::velocity_fem::{NodalFunction, VelocityGrid};

/// Piecewise constant field on the x-axis. `values[i]` applies for
/// `breaks[i-1] < x <= breaks[i]`, with the outer pieces extending to the
/// domain ends.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "piecewise constant: {} breaks need {} values, got {}",
                breaks.len(),
                breaks.len() + 1,
                values.len()
            )));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "piecewise constant breaks must be strictly increasing".into(),
            ));
        }
        if breaks.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("piecewise constant data".into()));
        }
        Ok(PiecewiseConstant { breaks, values })
    }

    pub fn constant(v: f64) -> Self {
        PiecewiseConstant {
            breaks: Vec::new(),
            values: vec![v],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.breaks.iter().position(|&b| x <= b) {
            Some(i) => self.values[i],
            None => *self.values.last().unwrap(),
        }
    }
}

/// Isotropic source supported on the closed interval [x_lo, x_hi].
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTerm {
    pub x_lo: f64,
    pub x_hi: f64,
    pub value: f64,
}

impl SourceTerm {
    pub fn eval(&self, _t: f64, x: f64) -> f64 {
        if x >= self.x_lo && x <= self.x_hi {
            self.value
        } else {
            0.0
        }
    }
}

/// Initial condition psi(0, x, v).
#[derive(Clone)]
pub enum InitialData {
    Constant(f64),
    Profile(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl InitialData {
    pub fn eval(&self, x: f64, v: f64) -> f64 {
        match self {
            InitialData::Constant(c) => *c,
            InitialData::Profile(f) => f(x, v),
        }
    }
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Constant(c) => write!(f, "Constant({c})"),
            InitialData::Profile(_) => write!(f, "Profile(..)"),
        }
    }
}

/// Ingoing radiation prescribed at a space boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    /// Constant profile over the ingoing velocity half-line.
    Constant(f64),
    /// amp * delta(v - 1), realized as the scaled hat at the v = 1 node.
    DeltaAtOne(f64),
}

/// Full problem description.
#[derive(Debug, Clone)]
pub struct KineticProblem {
    pub x_range: (f64, f64),
    pub t_end: f64,
    pub sigma_a: PiecewiseConstant,
    pub temperature: PiecewiseConstant,
    pub source: Option<SourceTerm>,
    pub initial: InitialData,
    pub left_bc: BoundaryData,
    pub right_bc: BoundaryData,
}

impl KineticProblem {
    /// Beam heated by an interior source: absorbing for x <= 2, three
    /// temperature zones, isotropic source on [1, 1.5], a delta beam entering
    /// at x = 0 and vacuum-level data elsewhere.
    pub fn sourcebeam() -> Self {
        KineticProblem {
            x_range: (0.0, 3.0),
            t_end: 4.0,
            sigma_a: PiecewiseConstant::new(vec![2.0], vec![1.0, 0.0]).unwrap(),
            temperature: PiecewiseConstant::new(vec![1.0, 2.0], vec![0.0, 2.0, 10.0]).unwrap(),
            source: Some(SourceTerm {
                x_lo: 1.0,
                x_hi: 1.5,
                value: 1.0,
            }),
            initial: InitialData::Constant(1e-4),
            left_bc: BoundaryData::DeltaAtOne(1.0),
            right_bc: BoundaryData::Constant(1e-4),
        }
    }

    /// Absorption sigma_a and temperature T at a space-time point, with
    /// domain validation.
    pub fn evaluate_coefficients(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let (a, b) = self.x_range;
        if !(t.is_finite() && x.is_finite()) || t < 0.0 || t > self.t_end || x < a || x > b {
            return Err(Error::OutOfDomain { t, x });
        }
        Ok((self.sigma_a.eval(x), self.temperature.eval(x)))
    }

    pub fn source_at(&self, t: f64, x: f64) -> f64 {
        self.source.as_ref().map_or(0.0, |s| s.eval(t, x))
    }

    /// Distinct (sigma_a, T) pairs attained on the domain. Used for reaction
    /// stiffness bounds.
    pub fn coefficient_regions(&self) -> Vec<(f64, f64)> {
        let (a, b) = self.x_range;
        let mut probes: Vec<f64> = vec![a, b];
        for &br in self.sigma_a.breaks.iter().chain(&self.temperature.breaks) {
            if br > a && br < b {
                probes.push(br);
            }
        }
        probes.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut samples = probes.clone();
        for w in probes.windows(2) {
            samples.push(0.5 * (w[0] + w[1]));
        }
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        for x in samples {
            let p = (self.sigma_a.eval(x), self.temperature.eval(x));
            if !pairs.contains(&p) {
                pairs.push(p);
            }
        }
        pairs
    }
}

/// Scaled hat at the v = 1 node: height 2/h so the zeroth velocity moment is
/// exactly one.
pub fn discrete_delta(grid: &Arc<VelocityGrid>) -> NodalFunction {
    let mut values = vec![0.0; grid.n_nodes()];
    values[grid.n_cells] = 2.0 / grid.h;
    NodalFunction {
        grid: Arc::clone(grid),
        values,
    }
}

/// Uniform cell grid on (a, b).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGrid {
    pub x_range: (f64, f64),
    pub n_cells: usize,
    pub h: f64,
}

impl SpaceGrid {
    pub fn new(x_range: (f64, f64), n_cells: usize) -> Result<Self> {
        if !(x_range.1 > x_range.0) || n_cells == 0 {
            return Err(Error::InvalidGrid(format!(
                "space grid: range {:?} with {} cells",
                x_range, n_cells
            )));
        }
        let h = (x_range.1 - x_range.0) / n_cells as f64;
        Ok(SpaceGrid {
            x_range,
            n_cells,
            h,
        })
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_range.0 + (j as f64 + 0.5) * self.h
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.center(j)).collect()
    }
}
