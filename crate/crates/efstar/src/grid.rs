//! Radial grids and solver grid parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid::FluidModel;

/// Strictly increasing array of radii, all positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Grid("grid needs at least two nodes".into()));
        }
        if nodes[0] <= 0.0 {
            return Err(Error::Grid(format!("grid must start above r = 0, got {}", nodes[0])));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Grid(format!(
                    "grid nodes not strictly increasing near r = {}",
                    w[0]
                )));
            }
        }
        Ok(RadialGrid { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Index of the node equal to `r` within a relative tolerance.
    pub fn index_of(&self, r: f64, rel_tol: f64) -> Option<usize> {
        let i = self.nodes.partition_point(|&x| x < r);
        let tol = rel_tol * r.abs().max(self.r_min());
        for j in [i.wrapping_sub(1), i] {
            if let Some(&x) = self.nodes.get(j) {
                if (x - r).abs() <= tol {
                    return Some(j);
                }
            }
        }
        None
    }

    /// Index i with nodes[i] <= r <= nodes[i+1]; None outside the grid.
    pub fn bracket(&self, r: f64) -> Option<usize> {
        if r < self.r_min() || r > self.r_max() {
            return None;
        }
        let i = self.nodes.partition_point(|&x| x <= r);
        Some(i.saturating_sub(1).min(self.len() - 2))
    }

    /// First index with nodes[i] >= r.
    pub fn lower_bound(&self, r: f64) -> usize {
        self.nodes.partition_point(|&x| x < r)
    }
}

/// Parameters controlling the static solve and the resulting grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Series-start radius; the ODE is singular at r = 0.
    pub r_min: f64,
    /// Outer radius of the integration.
    pub r_max: f64,
    /// Relative tolerance of the embedded RK pair.
    pub rel_tol: f64,
    /// Radii that must land exactly on grid nodes.
    pub required: Vec<f64>,
    /// Step cap (in r) below the log-radius switch.
    pub max_step_inner: f64,
    /// Step cap (in ln r) beyond the switch.
    pub max_step_log: f64,
    /// Radius at which the independent variable switches to ln r.
    pub log_switch: f64,
}

impl GridSpec {
    /// Defaults scaled to the model: r in [1e-6 L, 1e3 L], rel_tol 1e-10,
    /// log-radius beyond 10 L.
    pub fn for_model(model: &FluidModel) -> Self {
        let l = model.radial_scale();
        GridSpec {
            r_min: 1e-6 * l,
            r_max: 1e3 * l,
            rel_tol: 1e-10,
            required: Vec::new(),
            max_step_inner: l / 50.0,
            max_step_log: 0.02,
            log_switch: 10.0 * l,
        }
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_required(mut self, required: Vec<f64>) -> Self {
        self.required = required;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_max > self.r_min) {
            return Err(Error::Grid(format!(
                "need 0 < r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-2) {
            return Err(Error::Grid(format!("rel_tol = {} outside (0, 1e-2)", self.rel_tol)));
        }
        for &r in &self.required {
            if r <= self.r_min || r >= self.r_max {
                return Err(Error::Grid(format!(
                    "required node r = {r} outside ({}, {})",
                    self.r_min, self.r_max
                )));
            }
        }
        Ok(())
    }
}
