//! The (r*, delta, h)-perturbed initial data.
//!
//! The static normalized velocity is rescaled by (1 + 1/h) on the closed
//! band [r* - delta, r* + delta] while M and b are kept; a0 is rebuilt from
//! the integral representation with the quadrature split at the band edges.
//! Small delta/h means a weak perturbation; the theorem module checks the
//! resulting sign pattern of dv-a.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ef::{EfStaticFields, KernelForm};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::quad;

/// Annular velocity perturbation: center r*, half-width delta, strength 1/h,
/// and the annulus width Delta used by the outer bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub r_star: f64,
    pub delta: f64,
    pub h: f64,
    pub big_delta: f64,
}

impl Perturbation {
    /// `big_delta` defaults to r*/2.  Requires 0 < delta < big_delta < r*,
    /// delta <= r*/2 and h > 0 (h = +inf is the unperturbed sentinel).
    pub fn new(r_star: f64, delta: f64, h: f64, big_delta: Option<f64>) -> Result<Self> {
        if !(r_star > 0.0 && r_star.is_finite()) {
            return Err(Error::Domain(format!("r_star = {r_star} must be positive")));
        }
        let big_delta = big_delta.unwrap_or(0.5 * r_star);
        if !(big_delta > 0.0 && big_delta < r_star) {
            return Err(Error::Domain(format!(
                "Delta = {big_delta} outside (0, r* = {r_star})"
            )));
        }
        if !(delta > 0.0 && delta < big_delta) {
            return Err(Error::Domain(format!(
                "delta = {delta} outside (0, Delta = {big_delta})"
            )));
        }
        if delta > 0.5 * r_star {
            return Err(Error::Domain(format!(
                "delta = {delta} exceeds r*/2 = {}",
                0.5 * r_star
            )));
        }
        if !(h > 0.0) {
            return Err(Error::Domain(format!("h = {h} must be positive")));
        }
        Ok(Perturbation { r_star, delta, h, big_delta })
    }

    pub fn band(&self) -> (f64, f64) {
        (self.r_star - self.delta, self.r_star + self.delta)
    }

    /// (2h + 1) / h^2, written so that h = +inf gives 0.
    pub fn band_strength(&self) -> f64 {
        2.0 / self.h + 1.0 / (self.h * self.h)
    }
}

/// Perturbed initial data on a band-refined grid, with the dv-a diagnostic
/// computed along two independent routes.
#[derive(Debug, Clone)]
pub struct InitialDataSet {
    pert: Perturbation,
    alpha: f64,
    grid: RadialGrid,
    m0: Vec<f64>,
    v0: Vec<f64>,
    a0: Vec<f64>,
    b0: Vec<f64>,
    /// a0 - a_static, where a_static is the same-rule unperturbed quadrature;
    /// exactly zero below the band by construction.
    a1: Vec<f64>,
    /// Same-rule unperturbed reference a.
    a0_static: Vec<f64>,
    /// a from the solved profile (1 - 2m/r) on the refined grid.
    a_ode: Vec<f64>,
    /// dv-a from the direct formula 2 pi r b M (a0^2 - 4 V0^2).
    av: Vec<f64>,
    /// dv-a from the expanded band-integral form.
    av_expanded: Vec<f64>,
    /// Node index range of the closed band.
    band: (usize, usize),
}

/// Minimum number of nodes the closed band is refined to.
const BAND_MIN_NODES: usize = 17;

/// Build the perturbed initial data from static EF fields.
///
/// The band edges r* +- delta are inserted as exact nodes (plus uniform
/// refinement inside the band and a node at r* + Delta), and the a0
/// quadrature is split there.
pub fn build_initial_data(fields: &EfStaticFields, pert: &Perturbation) -> Result<InitialDataSet> {
    let (band_lo, band_hi) = pert.band();
    let grid = fields.grid();
    if band_lo <= grid.r_min() || band_hi >= grid.r_max() {
        return Err(Error::Grid(format!(
            "perturbation band [{band_lo}, {band_hi}] outside grid ({}, {})",
            grid.r_min(),
            grid.r_max()
        )));
    }

    // exact band-edge nodes, uniform fill inside the band, annulus endpoint
    let mut wanted = Vec::with_capacity(BAND_MIN_NODES + 2);
    for i in 0..BAND_MIN_NODES {
        wanted.push(band_lo + (band_hi - band_lo) * i as f64 / (BAND_MIN_NODES - 1) as f64);
    }
    let annulus_end = pert.r_star + pert.big_delta;
    if annulus_end < grid.r_max() {
        wanted.push(annulus_end);
    }
    let fields = fields.with_nodes(&wanted)?;
    let grid = fields.grid().clone();
    let n = grid.len();

    let i_lo = grid
        .index_of(band_lo, 1e-12)
        .ok_or_else(|| Error::Grid("band edge not landed on a node".into()))?;
    let i_hi = grid
        .index_of(band_hi, 1e-12)
        .ok_or_else(|| Error::Grid("band edge not landed on a node".into()))?;

    // |V0| = -V0: the static velocity is negative and the perturbation
    // rescales it
    let boost = 1.0 + 1.0 / pert.h;
    for &v in fields.v_norm() {
        assert!(v < 0.0, "static normalized velocity must be negative");
    }

    let kern_static: Vec<f64> = (0..n)
        .map(|i| fields.kernel_at(KernelForm::Contrast, i, fields.v_norm()[i].abs()))
        .collect();
    let kern_pert: Vec<f64> = (0..n)
        .map(|i| {
            if i >= i_lo && i <= i_hi {
                fields.kernel_at(KernelForm::Contrast, i, fields.v_norm()[i].abs() * boost)
            } else {
                kern_static[i]
            }
        })
        .collect();

    // one-sided values at the band edges: the indicator is closed, so the
    // left limit at i_lo and the right limit at i_hi are unperturbed
    let mut below = kern_pert.clone();
    let mut above = kern_pert.clone();
    below[i_lo] = kern_static[i_lo];
    above[i_hi] = kern_static[i_hi];

    let splits = [i_lo, i_hi];
    let first_cell = fields.kernel_first_cell(KernelForm::Contrast);
    let prefix_pert = quad::prefix_integrals_split(grid.nodes(), &below, &above, &splits);
    let prefix_static =
        quad::prefix_integrals_split(grid.nodes(), &kern_static, &kern_static, &splits);

    let mass_aspect = |prefix: &[f64], i: usize| -> f64 {
        let r = grid.nodes()[i];
        1.0 - (first_cell + prefix[i]) / (r * fields.b()[i])
    };
    let a0: Vec<f64> = (0..n).map(|i| mass_aspect(&prefix_pert, i)).collect();
    let a0_static: Vec<f64> = (0..n).map(|i| mass_aspect(&prefix_static, i)).collect();
    let a1: Vec<f64> = a0.iter().zip(&a0_static).map(|(&p, &s)| p - s).collect();

    let v0: Vec<f64> = (0..n)
        .map(|i| {
            let chi = i >= i_lo && i <= i_hi;
            fields.v_norm()[i] * if chi { boost } else { 1.0 }
        })
        .collect();

    let mut data = InitialDataSet {
        pert: *pert,
        alpha: fields.model().alpha(),
        m0: fields.m_norm().to_vec(),
        v0,
        a0,
        b0: fields.b().to_vec(),
        a1,
        a0_static,
        a_ode: fields.a().to_vec(),
        av: Vec::new(),
        av_expanded: Vec::new(),
        band: (i_lo, i_hi),
        grid,
    };
    let (direct, expanded) = compute_av(&data, &fields);
    data.av = direct;
    data.av_expanded = expanded;
    Ok(data)
}

/// dv-a at the initial slice along two routes: the direct formula
/// 2 pi r b M (a0^2 - 4 V0^2), and the expanded form built from an
/// independently assembled band integral and the ODE-side static a.
pub fn compute_av(data: &InitialDataSet, fields: &EfStaticFields) -> (Vec<f64>, Vec<f64>) {
    let n = data.grid.len();
    let (i_lo, i_hi) = data.band;
    let pert = &data.pert;
    let model = fields.model();
    let k2 = model.k() * model.k();

    let direct: Vec<f64> = (0..n)
        .map(|i| {
            let r = data.grid.nodes()[i];
            2.0 * PI * r * data.b0[i] * data.m0[i]
                * (data.a0[i] * data.a0[i] - 4.0 * data.v0[i] * data.v0[i])
        })
        .collect();

    // band integral of 4 pi (1-k^2) b M a s^2, assembled on the band
    // subgrid only
    let band_x = &data.grid.nodes()[i_lo..=i_hi];
    let band_g: Vec<f64> = (i_lo..=i_hi)
        .map(|i| {
            4.0 * PI * (1.0 - k2)
                * data.b0[i]
                * data.m0[i]
                * data.a_ode[i]
                * data.grid.nodes()[i]
                * data.grid.nodes()[i]
        })
        .collect();
    let band_prefix = quad::prefix_integrals(band_x, &band_g);
    let band_total = *band_prefix.last().unwrap();

    let strength = pert.band_strength();
    let expanded: Vec<f64> = (0..n)
        .map(|i| {
            let r = data.grid.nodes()[i];
            let a_stat = data.a_ode[i];
            let (a1_e, chi) = if i < i_lo {
                (0.0, 0.0)
            } else if i <= i_hi {
                (-band_prefix[i - i_lo] / (r * data.b0[i] * pert.h), 1.0)
            } else {
                (-band_total / (r * data.b0[i] * pert.h), 0.0)
            };
            let a0_e = a_stat + a1_e;
            2.0 * PI * r * data.b0[i] * data.m0[i]
                * (a1_e * (a0_e + a_stat) - chi * a_stat * a_stat * strength)
        })
        .collect();

    (direct, expanded)
}

impl InitialDataSet {
    pub fn pert(&self) -> &Perturbation {
        &self.pert
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn m0(&self) -> &[f64] {
        &self.m0
    }

    pub fn v0(&self) -> &[f64] {
        &self.v0
    }

    pub fn a0(&self) -> &[f64] {
        &self.a0
    }

    pub fn b0(&self) -> &[f64] {
        &self.b0
    }

    pub fn a1(&self) -> &[f64] {
        &self.a1
    }

    pub fn a0_static(&self) -> &[f64] {
        &self.a0_static
    }

    pub fn a_ode(&self) -> &[f64] {
        &self.a_ode
    }

    pub fn av(&self) -> &[f64] {
        &self.av
    }

    pub fn av_expanded(&self) -> &[f64] {
        &self.av_expanded
    }

    /// Node index range [lo, hi] of the closed band.
    pub fn band_indices(&self) -> (usize, usize) {
        self.band
    }

    /// Worst node-wise gap between the two dv-a routes, relative to the
    /// larger of the local magnitudes and the grid-wide scale.
    pub fn av_route_disagreement(&self) -> f64 {
        let scale = self
            .av
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        self.av
            .iter()
            .zip(&self.av_expanded)
            .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(scale))
            .fold(0.0, f64::max)
    }
}

/// Verdict of the trapped-surface scan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrappedCheck {
    /// True iff a0 > 0 on the grid and the tail argument closes.
    pub no_trapped: bool,
    pub min_a0: f64,
    /// Radius of the minimizing node.
    pub witness_radius: f64,
    /// (1 - alpha) - oscillation allowance - |a1| at the outer edge; the
    /// tail is trap-free when this is positive, since r b |a1| is constant
    /// beyond the band and a_static approaches 1 - alpha.
    pub tail_margin: f64,
    /// Measured undershoot of the static a below 1 - alpha over the last
    /// decade, bounding the residual oscillation beyond the grid.
    pub osc_allowance: f64,
}

/// Scan the initial data for trapped surfaces: a0 must be positive at every
/// node, and the analytic tail bound must be positive beyond the grid.
pub fn check_no_trapped(data: &InitialDataSet) -> TrappedCheck {
    let n = data.grid.len();
    let (mut min_a0, mut arg) = (f64::INFINITY, 0);
    for (i, &v) in data.a0.iter().enumerate() {
        if v < min_a0 {
            min_a0 = v;
            arg = i;
        }
    }
    let r_max = data.grid.r_max();
    let osc_allowance = data
        .grid
        .nodes()
        .iter()
        .zip(&data.a0_static)
        .filter(|(&r, _)| r >= 0.1 * r_max)
        .map(|(_, &a)| (1.0 - data.alpha) - a)
        .fold(0.0f64, f64::max);
    let tail_margin = (1.0 - data.alpha) - osc_allowance - data.a1[n - 1].abs();
    TrappedCheck {
        no_trapped: min_a0 > 0.0 && tail_margin > 0.0,
        min_a0,
        witness_radius: data.grid.nodes()[arg],
        tail_margin,
        osc_allowance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ef::static_constraint_residual;
    use crate::fluid::FluidModel;
    use crate::grid::GridSpec;
    use crate::tov::solve_static;

    fn star(k: f64) -> (FluidModel, EfStaticFields) {
        let model = FluidModel::new(k, 1.0).unwrap();
        let prof = solve_static(&model, &GridSpec::for_model(&model)).unwrap();
        (model, EfStaticFields::from_profile(&prof))
    }

    fn default_pert(model: &FluidModel, h: f64) -> Perturbation {
        let l = model.radial_scale();
        let r_star = 2.0 * l;
        Perturbation::new(r_star, r_star / 20.0, h, None).unwrap()
    }

    #[test]
    fn perturbation_validation() {
        assert!(Perturbation::new(1.0, 0.1, 1.0, None).is_ok());
        assert!(Perturbation::new(1.0, 0.6, 1.0, None).is_err()); // delta >= Delta
        assert!(Perturbation::new(1.0, 0.1, 0.0, None).is_err()); // h = 0
        assert!(Perturbation::new(1.0, 0.1, -1.0, None).is_err());
        assert!(Perturbation::new(1.0, 0.3, 1.0, Some(1.5)).is_err()); // Delta >= r*
        assert!(Perturbation::new(1.0, 0.45, 1.0, Some(0.496)).is_ok());
        // delta must not exceed r*/2 even with a large Delta
        assert!(Perturbation::new(1.0, 0.55, 1.0, Some(0.9)).is_err());
        let p = Perturbation::new(2.0, 0.1, 1.0, None).unwrap();
        assert_eq!(p.big_delta, 1.0);
    }

    #[test]
    fn band_outside_grid_is_rejected() {
        let (model, fields) = star(0.6);
        let l = model.radial_scale();
        let p = Perturbation::new(2000.0 * l, 10.0 * l, 1.0, Some(1000.0 * l)).unwrap();
        assert!(build_initial_data(&fields, &p).is_err());
    }

    #[test]
    fn unperturbed_prefix_region_is_exact() {
        let (model, fields) = star(0.6);
        let data = build_initial_data(&fields, &default_pert(&model, 2.0)).unwrap();
        let (i_lo, _) = data.band_indices();
        for i in 0..=i_lo {
            assert_eq!(data.a1()[i], 0.0, "a1 must vanish identically below the band");
            assert_eq!(data.a0()[i], data.a0_static()[i]);
        }
        // and a1 <= 0 everywhere
        assert!(data.a1().iter().all(|&v| v <= 0.0));
    }

    #[test]
    fn unperturbed_sentinel_reproduces_static() {
        let (model, fields) = star(0.6);
        let data = build_initial_data(&fields, &default_pert(&model, f64::INFINITY)).unwrap();
        for i in 0..data.grid().len() {
            assert_eq!(data.a1()[i], 0.0);
            // a0 agrees with the ODE-side a to quadrature accuracy
            assert!((data.a0()[i] - data.a_ode()[i]).abs() < 1e-8);
        }
        let max_av = data.av().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(max_av <= 1e-8, "static null dv-a = {max_av}");
    }

    #[test]
    fn quadrature_consistency_matches_constraint_residual() {
        // the unperturbed a0 and the constraint-residual rhs are the same
        // quadrature up to the band splits
        let (model, fields) = star(0.3);
        let data = build_initial_data(&fields, &default_pert(&model, 1.0)).unwrap();
        let res = static_constraint_residual(&fields, KernelForm::Contrast);
        assert!(res.max_abs < 1e-8);
        let worst = data
            .a0_static()
            .iter()
            .zip(data.a_ode())
            .map(|(&q, &o)| (q - o).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-8, "split static quadrature off by {worst}");
    }

    #[test]
    fn a0_increases_with_h() {
        let (model, fields) = star(0.6);
        let d1 = build_initial_data(&fields, &default_pert(&model, 1.0)).unwrap();
        let d2 = build_initial_data(&fields, &default_pert(&model, 2.0)).unwrap();
        let mut strictly = 0;
        for i in 0..d1.grid().len() {
            assert!(d2.a0()[i] >= d1.a0()[i], "weaker perturbation must not lower a0");
            if d2.a0()[i] > d1.a0()[i] {
                strictly += 1;
            }
        }
        assert!(strictly > 0);
    }

    #[test]
    fn tail_domination_r_b_a1_constant() {
        let (model, fields) = star(0.6);
        let data = build_initial_data(&fields, &default_pert(&model, 1.5)).unwrap();
        let (_, i_hi) = data.band_indices();
        let vals: Vec<f64> = (i_hi..data.grid().len())
            .map(|i| data.grid().nodes()[i] * data.b0()[i] * data.a1()[i].abs())
            .collect();
        let (lo, hi) = vals
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!((hi - lo) / hi < 1e-10, "r b |a1| not constant: spread {}", (hi - lo) / hi);
    }

    #[test]
    fn av_zero_inside_and_negative_beyond() {
        let (model, fields) = star(0.6);
        let data = build_initial_data(&fields, &default_pert(&model, 1.5)).unwrap();
        let (i_lo, _) = data.band_indices();
        for i in 0..i_lo {
            assert!(data.av()[i].abs() <= 1e-8);
            assert_eq!(data.av_expanded()[i], 0.0);
        }
        for i in i_lo..data.grid().len() {
            assert!(data.av()[i] < 0.0, "av must be negative from the band on (node {i})");
        }
    }

    #[test]
    fn av_routes_agree() {
        let (model, fields) = star(0.6);
        for h in [0.5, 1.5, 20.0] {
            let data = build_initial_data(&fields, &default_pert(&model, h)).unwrap();
            let gap = data.av_route_disagreement();
            assert!(gap <= 1e-8, "route disagreement {gap} at h = {h}");
        }
    }

    #[test]
    fn a1_bounded_by_one_minus_alpha_under_hypothesis() {
        let (model, fields) = star(0.6);
        let pert = default_pert(&model, 4.0); // comfortably admissible
        let data = build_initial_data(&fields, &pert).unwrap();
        let bound = 1.0 - model.alpha();
        assert!(data.a1().iter().all(|&v| v.abs() <= bound));
    }

    #[test]
    fn trapped_scan_happy_and_manufactured_negative() {
        let (model, fields) = star(0.6);
        let mut data = build_initial_data(&fields, &default_pert(&model, 5.0)).unwrap();
        let ok = check_no_trapped(&data);
        assert!(ok.no_trapped);
        assert!(ok.min_a0 > 0.0);
        assert!(ok.tail_margin > 0.0);

        // force a trapped node and expect a verdict flip with that witness
        let i_bad = data.grid().len() / 2;
        data.a0[i_bad] = -0.1;
        let bad = check_no_trapped(&data);
        assert!(!bad.no_trapped);
        assert_eq!(bad.witness_radius, data.grid().nodes()[i_bad]);
        assert_eq!(bad.min_a0, -0.1);
    }

    #[test]
    fn band_edges_are_exact_nodes() {
        let (model, fields) = star(0.9);
        let pert = default_pert(&model, 1.0);
        let data = build_initial_data(&fields, &pert).unwrap();
        let (lo, hi) = pert.band();
        let (i_lo, i_hi) = data.band_indices();
        assert_eq!(data.grid().nodes()[i_lo], lo);
        assert_eq!(data.grid().nodes()[i_hi], hi);
        assert!(i_hi - i_lo >= BAND_MIN_NODES - 1);
    }
}
