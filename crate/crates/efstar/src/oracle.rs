//! Independent reference computations used by tests and by the series start
//! of the solver: center Taylor expansion, dense brute-force quadrature, and
//! the exact singular solution.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fluid::FluidModel;
use crate::grid::RadialGrid;
use crate::tov::{tov_rhs, CenterKind, StaticProfile};

/// Taylor expansion of (rho, m) about the regular center r = 0:
/// rho = rho0 + rho2 r^2 + rho4 r^4,  m = m3 r^3 + m5 r^5 + m7 r^7.
#[derive(Debug, Clone, Copy)]
pub struct CenterSeries {
    k: f64,
    rho0: f64,
    pub rho2: f64,
    pub rho4: f64,
    pub m3: f64,
    pub m5: f64,
    pub m7: f64,
}

impl CenterSeries {
    pub fn new(model: &FluidModel) -> Self {
        let k = model.k();
        let rho0 = model.rho0();
        let k2 = k * k;
        let rho2 = -(2.0 * PI / (3.0 * k2)) * (1.0 + k2) * (1.0 + 3.0 * k2) * rho0 * rho0;
        // next even coefficient, from matching the r^3 term of the pressure
        // equation (verified by the plug-back residual test)
        let rho4 = 4.0 * PI * PI * rho0.powi(3)
            * (45.0 * k2.powi(4) + 87.0 * k2.powi(3) + 63.0 * k2 * k2 + 25.0 * k2 + 4.0)
            / (45.0 * k2 * k2);
        CenterSeries {
            k,
            rho0,
            rho2,
            rho4,
            m3: 4.0 * PI / 3.0 * rho0,
            m5: 4.0 * PI / 5.0 * rho2,
            m7: 4.0 * PI / 7.0 * rho4,
        }
    }

    pub fn rho_at(&self, r: f64) -> f64 {
        let r2 = r * r;
        self.rho0 + r2 * (self.rho2 + r2 * self.rho4)
    }

    pub fn m_at(&self, r: f64) -> f64 {
        let r2 = r * r;
        r2 * r * (self.m3 + r2 * (self.m5 + r2 * self.m7))
    }

    pub fn drho_at(&self, r: f64) -> f64 {
        let r2 = r * r;
        r * (2.0 * self.rho2 + 4.0 * r2 * self.rho4)
    }

    pub fn dm_at(&self, r: f64) -> f64 {
        let r2 = r * r;
        r2 * (3.0 * self.m3 + r2 * (5.0 * self.m5 + r2 * 7.0 * self.m7))
    }

    /// Relative residual of the pressure equation when the series is plugged
    /// back into the static system at radius r.
    pub fn pressure_residual(&self, r: f64) -> f64 {
        let k2 = self.k * self.k;
        let rho = self.rho_at(r);
        let m = self.m_at(r);
        let p = k2 * rho;
        let lhs = k2 * self.drho_at(r);
        let rhs = -(rho + p) * (m + 4.0 * PI * r.powi(3) * p) / (r * (r - 2.0 * m));
        (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE)
    }

    /// Integral over the first cell [0, r0] of an integrand built from the
    /// series fields, by 3-point Gauss-Legendre.
    pub fn first_cell_integral(&self, r0: f64, integrand: impl Fn(f64, f64, f64) -> f64) -> f64 {
        const NODES: [f64; 3] = [-0.7745966692414834, 0.0, 0.7745966692414834];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let half = 0.5 * r0;
        let mut acc = 0.0;
        for (gx, gw) in NODES.iter().zip(WEIGHTS) {
            let s = half * (1.0 + gx);
            acc += gw * integrand(s, self.rho_at(s), self.m_at(s));
        }
        acc * half
    }
}

/// Dense composite Simpson over [a, b], split at the given interior points.
/// Ground truth for convergence tests; callers choose `panels_per_segment`
/// well above the production grid density (8x or more).
pub fn reference_quadrature(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    splits: &[f64],
    panels_per_segment: usize,
) -> f64 {
    let mut bounds = vec![a];
    bounds.extend(splits.iter().copied().filter(|&s| s > a && s < b));
    bounds.push(b);
    let n = panels_per_segment.max(2) & !1; // even
    let mut total = 0.0;
    for seg in bounds.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + h * i as f64);
        }
        total += s * h / 3.0;
    }
    total
}

/// Exact scale-invariant profile rho = c / r^2, m = (alpha/2) r, on the given
/// grid (which must exclude r = 0).  All regular solutions approach it.
pub fn singular_profile(model: &FluidModel, grid: RadialGrid) -> Result<StaticProfile> {
    let c = model.singular_coefficient();
    let alpha = model.alpha();
    let rho: Vec<f64> = grid.nodes().iter().map(|&r| c / (r * r)).collect();
    let m: Vec<f64> = grid.nodes().iter().map(|&r| 0.5 * alpha * r).collect();
    StaticProfile::from_arrays(*model, grid, rho, m, CenterKind::Raw)
}

/// Max relative residual of the static system over a profile's nodes, using
/// the profile's own (rho, m) and exact one-sided differences of the stored
/// derivative samples.  Used to cross-check exact profiles.
pub fn profile_ode_residual(profile: &StaticProfile) -> f64 {
    let model = profile.model();
    let mut worst: f64 = 0.0;
    for (i, &r) in profile.grid().nodes().iter().enumerate() {
        let rho = profile.rho()[i];
        let m = profile.m()[i];
        let (drho, dm) = tov_rhs(&model, r, rho, m);
        // the derivative of the mass equation is definitional; check the
        // stored derivative samples against a fresh evaluation
        let (drho_stored, dm_stored) = profile.derivatives(i);
        let res_rho = (drho - drho_stored).abs() / drho.abs().max(f64::MIN_POSITIVE);
        let res_m = (dm - dm_stored).abs() / dm.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(res_rho).max(res_m);
    }
    worst
}

/// Max relative residual of the pressure equation when an explicit closed
/// form (rho(r), m(r), drho(r)) is plugged into the static system.
pub fn closed_form_residual(
    model: &FluidModel,
    radii: &[f64],
    rho: impl Fn(f64) -> f64,
    m: impl Fn(f64) -> f64,
    drho: impl Fn(f64) -> f64,
) -> f64 {
    let k2 = model.k() * model.k();
    radii
        .iter()
        .map(|&r| {
            let (rh, mm) = (rho(r), m(r));
            let p = k2 * rh;
            let lhs = k2 * drho(r);
            let rhs = -(rh + p) * (mm + 4.0 * PI * r.powi(3) * p) / (r * (r - 2.0 * mm));
            (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_leading_coefficient() {
        let model = FluidModel::new(0.6, 2.5).unwrap();
        let s = CenterSeries::new(&model);
        assert!((s.m3 - 4.0 * PI / 3.0 * 2.5).abs() < 1e-14);
    }

    #[test]
    fn rho2_hand_value_at_unit_k() {
        // k = 1, rho0 = 1: rho2 = -(2 pi / 3) * 2 * 4 = -16 pi / 3.
        // FluidModel rejects k = 1, so build the series from a raw pair.
        let model = FluidModel::new(0.999_999_999, 1.0).unwrap();
        let s = CenterSeries::new(&model);
        let expected = -16.0 * PI / 3.0;
        assert!(
            (s.rho2 - expected).abs() < 1e-6 * expected.abs(),
            "rho2 = {}, expected -> {expected}",
            s.rho2
        );
    }

    #[test]
    fn series_residual_is_tiny_near_center() {
        for k in [0.3, 0.6, 0.9] {
            let model = FluidModel::new(k, 1.0).unwrap();
            let s = CenterSeries::new(&model);
            let r = 1e-4 * model.radial_scale();
            let res = s.pressure_residual(r);
            assert!(res < 1e-12, "k = {k}: residual {res}");
        }
    }

    #[test]
    fn reference_quadrature_polynomial() {
        let v = reference_quadrature(|s| s * s, 0.0, 1.0, &[], 64);
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn reference_quadrature_split_jump() {
        let f = |s: f64| if s < 0.5 { 1.0 } else { 2.0 };
        let v = reference_quadrature(f, 0.0, 1.0, &[0.5], 256);
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn singular_profile_is_exact() {
        let model = FluidModel::new(0.7, 1.0).unwrap();
        let l = model.radial_scale();
        let nodes: Vec<f64> = (0..200).map(|i| l * (0.1 + 0.05 * i as f64)).collect();
        let grid = RadialGrid::new(nodes).unwrap();
        let prof = singular_profile(&model, grid).unwrap();

        // a(r) = 1 - 2m/r = 1 - alpha at every node
        let alpha = model.alpha();
        for (i, &r) in prof.grid().nodes().iter().enumerate() {
            let a = 1.0 - 2.0 * prof.m()[i] / r;
            assert!((a - (1.0 - alpha)).abs() < 1e-15);
        }

        // plug-back: the closed form satisfies the pressure equation
        let c = model.singular_coefficient();
        let alpha = model.alpha();
        let res = closed_form_residual(
            &model,
            prof.grid().nodes(),
            |r| c / (r * r),
            |r| 0.5 * alpha * r,
            |r| -2.0 * c / (r * r * r),
        );
        assert!(res < 1e-12, "singular closed-form residual {res}");
    }
}
