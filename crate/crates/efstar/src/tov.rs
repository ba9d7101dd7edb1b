//! Static stellar-structure integration: m' = 4 pi r^2 rho and
//! p' = -(rho + p)(m + 4 pi r^3 p) / (r (r - 2m)) with p = k^2 rho,
//! in units G = c = 1 and Einstein constant 8 pi.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fluid::FluidModel;
use crate::grid::{GridSpec, RadialGrid};
use crate::oracle::CenterSeries;

/// Right-hand side of the static system: returns (drho/dr, dm/dr).
pub fn tov_rhs(model: &FluidModel, r: f64, rho: f64, m: f64) -> (f64, f64) {
    let k2 = model.k() * model.k();
    let p = k2 * rho;
    let dp = -(rho + p) * (m + 4.0 * PI * r * r * r * p) / (r * (r - 2.0 * m));
    (dp / k2, 4.0 * PI * r * r * rho)
}

/// How the first cell [0, r_min] of a profile should be treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterKind {
    /// Regular center; the Taylor series applies on [0, r_min].
    RegularSeries,
    /// No series information (e.g. the singular solution).
    Raw,
}

/// Solved radial profile: density, mass function and the metric exponents
/// lambda = -ln(1 - 2m/r)/2 and nu with e^nu = (rho0/rho)^(k^2/(1+k^2)).
#[derive(Debug, Clone)]
pub struct StaticProfile {
    model: FluidModel,
    grid: RadialGrid,
    rho: Vec<f64>,
    m: Vec<f64>,
    lambda: Vec<f64>,
    nu: Vec<f64>,
    drho: Vec<f64>,
    dm: Vec<f64>,
    center: CenterKind,
}

impl StaticProfile {
    /// Build a profile from explicit (rho, m) arrays, deriving the metric
    /// exponents and derivative samples.  Rejects data with 1 - 2m/r <= 0.
    pub fn from_arrays(
        model: FluidModel,
        grid: RadialGrid,
        rho: Vec<f64>,
        m: Vec<f64>,
        center: CenterKind,
    ) -> Result<Self> {
        if rho.len() != grid.len() || m.len() != grid.len() {
            return Err(Error::Grid("field arrays must match the grid length".into()));
        }
        let mut lambda = Vec::with_capacity(grid.len());
        let mut nu = Vec::with_capacity(grid.len());
        let mut drho = Vec::with_capacity(grid.len());
        let mut dm = Vec::with_capacity(grid.len());
        let exp = model.k() * model.k() / (1.0 + model.k() * model.k());
        for (i, &r) in grid.nodes().iter().enumerate() {
            if !(rho[i] > 0.0) {
                return Err(Error::Domain(format!("rho <= 0 at r = {r}")));
            }
            let a = 1.0 - 2.0 * m[i] / r;
            if !(a > 0.0) {
                return Err(Error::Integrator(format!(
                    "1 - 2m/r = {a} <= 0 at r = {r}: static profile would be trapped"
                )));
            }
            lambda.push(-0.5 * a.ln());
            nu.push(exp * (model.rho0() / rho[i]).ln());
            let d = tov_rhs(&model, r, rho[i], m[i]);
            drho.push(d.0);
            dm.push(d.1);
        }
        Ok(StaticProfile { model, grid, rho, m, lambda, nu, drho, dm, center })
    }

    pub fn model(&self) -> FluidModel {
        self.model
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn center_kind(&self) -> CenterKind {
        self.center
    }

    /// Stored RHS samples (drho/dr, dm/dr) at node i.
    pub fn derivatives(&self, i: usize) -> (f64, f64) {
        (self.drho[i], self.dm[i])
    }

    /// a(r) = 1 - 2m/r per node.
    pub fn a_values(&self) -> Vec<f64> {
        self.grid
            .nodes()
            .iter()
            .zip(&self.m)
            .map(|(&r, &m)| 1.0 - 2.0 * m / r)
            .collect()
    }

    /// b(r) = e^(lambda + nu) per node.
    pub fn b_values(&self) -> Vec<f64> {
        self.lambda
            .iter()
            .zip(&self.nu)
            .map(|(&l, &n)| (l + n).exp())
            .collect()
    }

    /// Cubic-Hermite interpolation of (rho, m) at a radius inside the grid,
    /// using the exact RHS derivatives at the bracketing nodes.
    pub fn sample(&self, r: f64) -> Result<(f64, f64)> {
        let i = self
            .grid
            .bracket(r)
            .ok_or_else(|| Error::Grid(format!("r = {r} outside the profile grid")))?;
        let (x0, x1) = (self.grid.nodes()[i], self.grid.nodes()[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let hermite = |y0: f64, y1: f64, d0: f64, d1: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
                + d0 * h * (t3 - 2.0 * t2 + t)
                + y1 * (-2.0 * t3 + 3.0 * t2)
                + d1 * h * (t3 - t2)
        };
        Ok((
            hermite(self.rho[i], self.rho[i + 1], self.drho[i], self.drho[i + 1]),
            hermite(self.m[i], self.m[i + 1], self.dm[i], self.dm[i + 1]),
        ))
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// difference between the 5th-order and embedded 4th-order weights
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

type State = [f64; 2];

struct StepOutput {
    nodes: Vec<(f64, State)>,
}

/// Adaptive RK5(4) over [x0, x1]; every accepted step endpoint becomes a
/// node, and `required` points (sorted, strictly inside) are landed exactly.
fn integrate_phase(
    rhs: &dyn Fn(f64, State) -> State,
    x0: f64,
    x1: f64,
    y0: State,
    rel_tol: f64,
    max_step: f64,
    required: &[f64],
) -> Result<StepOutput> {
    let mut nodes = vec![(x0, y0)];
    let mut x = x0;
    let mut y = y0;
    let mut k1 = rhs(x, y);
    let mut h = (max_step / 16.0).min(x1 - x0);
    let mut req_iter = required.iter().copied().peekable();
    let min_step = (x1 - x0) * 1e-14;
    let mut rejected_in_a_row = 0u32;

    while x < x1 {
        // clamp the step to the next required point and the interval end
        let mut target: Option<f64> = None;
        while let Some(&rq) = req_iter.peek() {
            if rq <= x + min_step {
                req_iter.next();
            } else {
                target = Some(rq);
                break;
            }
        }
        let limit = target.unwrap_or(x1).min(x1);
        h = h.min(max_step).min(limit - x);
        if h < min_step {
            return Err(Error::Integrator(format!(
                "step size underflow at x = {x} (h = {h})"
            )));
        }

        let mut ks = [[0.0; 2]; 7];
        ks[0] = k1;
        for s in 0..6 {
            let mut ys = y;
            for (j, yj) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, k) in ks.iter().enumerate().take(s + 1) {
                    acc += A[s][i] * k[j];
                }
                *yj += h * acc;
            }
            let _ = C;
            ks[s + 1] = rhs(x + h * C[s], ys);
        }
        // 5th-order solution is stage 6's argument result: y + h * A[5] . k
        let mut y_new = y;
        for (j, yj) in y_new.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..6 {
                acc += A[5][i] * ks[i][j];
            }
            *yj += h * acc;
        }
        // embedded error estimate
        let mut err: f64 = 0.0;
        for j in 0..2 {
            let mut e = 0.0;
            for i in 0..7 {
                e += E[i] * ks[i][j];
            }
            e *= h;
            let scale = rel_tol * y[j].abs().max(y_new[j].abs()).max(f64::MIN_POSITIVE);
            err = err.max((e / scale).abs());
        }
        let healthy = y_new.iter().all(|v| v.is_finite() && *v > 0.0);

        if err <= 1.0 && healthy {
            x += h;
            y = y_new;
            k1 = ks[6]; // FSAL
            nodes.push((x, y));
            rejected_in_a_row = 0;
            let grow = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h *= grow;
        } else {
            rejected_in_a_row += 1;
            if rejected_in_a_row > 200 {
                return Err(Error::Integrator(format!(
                    "no acceptable step at x = {x} after 200 rejections"
                )));
            }
            let shrink = if healthy { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.5 };
            h *= shrink;
        }
    }
    Ok(StepOutput { nodes })
}

/// Integrate the static system outward from a series start at spec.r_min.
///
/// The independent variable is r up to spec.log_switch and ln r beyond, so
/// the tail can span many decades.  Accepted steps form the profile grid.
pub fn solve_static(model: &FluidModel, spec: &GridSpec) -> Result<StaticProfile> {
    spec.validate()?;
    let series = CenterSeries::new(model);
    let r_min = spec.r_min;
    let y_start = [series.rho_at(r_min), series.m_at(r_min)];
    if !(y_start[0] > 0.0) {
        return Err(Error::Grid(format!(
            "r_min = {r_min} too large for the center series"
        )));
    }

    let mut required = spec.required.clone();
    required.sort_by(f64::total_cmp);
    required.dedup();

    let switch = spec.log_switch.clamp(r_min, spec.r_max);
    let m = *model;
    let rhs_linear = move |r: f64, y: State| -> State {
        let (d0, d1) = tov_rhs(&m, r, y[0], y[1]);
        [d0, d1]
    };

    let mut all_nodes: Vec<(f64, State)> = Vec::new();
    let req_a: Vec<f64> = required.iter().copied().filter(|&r| r < switch).collect();
    let phase_a = integrate_phase(
        &rhs_linear,
        r_min,
        switch,
        y_start,
        spec.rel_tol,
        spec.max_step_inner,
        &req_a,
    )?;
    all_nodes.extend(phase_a.nodes);

    if switch < spec.r_max {
        let y_mid = all_nodes.last().unwrap().1;
        let rhs_log = move |x: f64, y: State| -> State {
            let r = x.exp();
            let (d0, d1) = tov_rhs(&m, r, y[0], y[1]);
            [r * d0, r * d1]
        };
        let req_b: Vec<f64> = required
            .iter()
            .copied()
            .filter(|&r| r > switch && r < spec.r_max)
            .map(f64::ln)
            .collect();
        let phase_b = integrate_phase(
            &rhs_log,
            switch.ln(),
            spec.r_max.ln(),
            y_mid,
            spec.rel_tol,
            spec.max_step_log,
            &req_b,
        )?;
        // skip the duplicated switch node
        all_nodes.extend(phase_b.nodes.into_iter().skip(1).map(|(x, y)| (x.exp(), y)));
    }

    // snap nodes that were targeted at required radii onto them exactly
    for rq in &required {
        if let Some((r_node, _)) = all_nodes
            .iter_mut()
            .min_by(|a, b| (a.0 - rq).abs().total_cmp(&(b.0 - rq).abs()))
        {
            if (*r_node - rq).abs() <= 1e-9 * rq {
                *r_node = *rq;
            }
        }
    }

    let radii: Vec<f64> = all_nodes.iter().map(|n| n.0).collect();
    let grid = RadialGrid::new(radii)?;
    let rho: Vec<f64> = all_nodes.iter().map(|n| n.1[0]).collect();
    let mass: Vec<f64> = all_nodes.iter().map(|n| n.1[1]).collect();
    let profile = StaticProfile::from_arrays(*model, grid, rho, mass, CenterKind::RegularSeries)?;

    for rq in &required {
        if profile.grid.index_of(*rq, 1e-9).is_none() {
            return Err(Error::Integrator(format!(
                "required node r = {rq} was not landed exactly"
            )));
        }
    }
    Ok(profile)
}
