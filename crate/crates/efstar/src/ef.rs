//! Generalized Eddington-Finkelstein form of a static profile.
//!
//! The metric is -a b^2 dv^2 + 2 b dv dr + r^2 dOmega^2 with
//! a = e^(-2 lambda) = 1 - 2m/r and b = e^(lambda + nu).  Static solutions
//! carry the normalized mass M = rho / a and velocity V = -a/2, and the
//! advanced coordinate shift v - t = integral of e^(lambda - nu).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid::FluidModel;
use crate::grid::RadialGrid;
use crate::oracle::CenterSeries;
use crate::quad;
use crate::tov::{tov_rhs, CenterKind, StaticProfile};

/// Which velocity weight multiplies |V| inside the mass-aspect kernel.
///
/// The two published forms of the integral representation of a(v, r) are not
/// algebraically identical on static data; `static_constraint_residual`
/// measures both.  Initial data are built with `Contrast`, which reproduces
/// a = 1 - 2m/r on static solutions to quadrature accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelForm {
    /// Weight 2 k^2 |V| + 1.
    KSquared,
    /// Weight 2 (1-k^2)/(1+k^2) |V| + 1.
    Contrast,
}

impl KernelForm {
    fn weight(self, model: &FluidModel) -> f64 {
        match self {
            KernelForm::KSquared => 2.0 * model.k() * model.k(),
            KernelForm::Contrast => 2.0 * model.contrast(),
        }
    }
}

/// Static fields in Eddington-Finkelstein variables on a radial grid.
#[derive(Debug, Clone)]
pub struct EfStaticFields {
    model: FluidModel,
    grid: RadialGrid,
    a: Vec<f64>,
    b: Vec<f64>,
    m_norm: Vec<f64>,
    v_norm: Vec<f64>,
    v_shift: Vec<f64>,
    // carried for interpolation and node insertion
    rho: Vec<f64>,
    m: Vec<f64>,
    center: CenterKind,
}

impl EfStaticFields {
    /// Transform a solved profile into EF variables.
    pub fn from_profile(profile: &StaticProfile) -> Self {
        let grid = profile.grid().clone();
        let n = grid.len();
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut m_norm = Vec::with_capacity(n);
        let mut v_norm = Vec::with_capacity(n);
        for i in 0..n {
            let r = grid.nodes()[i];
            let ai = 1.0 - 2.0 * profile.m()[i] / r;
            a.push(ai);
            b.push((profile.lambda()[i] + profile.nu()[i]).exp());
            m_norm.push(profile.rho()[i] / ai);
            v_norm.push(-0.5 * ai);
        }
        let mut fields = EfStaticFields {
            model: profile.model(),
            grid,
            a,
            b,
            m_norm,
            v_norm,
            v_shift: Vec::new(),
            rho: profile.rho().to_vec(),
            m: profile.m().to_vec(),
            center: profile.center_kind(),
        };
        fields.v_shift = fields.compute_v_shift();
        fields
    }

    /// Assemble fields from raw arrays (vacuum injections, file reloads,
    /// synthetic convergence studies).  The first quadrature cell is then
    /// approximated at leading order instead of by the center series.
    pub fn from_raw(
        model: FluidModel,
        grid: RadialGrid,
        a: Vec<f64>,
        b: Vec<f64>,
        m_norm: Vec<f64>,
        v_norm: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.len();
        for (name, v) in [("a", &a), ("b", &b), ("M", &m_norm), ("V", &v_norm)] {
            if v.len() != n {
                return Err(Error::Grid(format!("field {name} length mismatch")));
            }
        }
        if a.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(Error::Domain("a must lie in (0, 1]".into()));
        }
        if b.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Domain("b must be positive".into()));
        }
        let rho: Vec<f64> = m_norm.iter().zip(&a).map(|(&mm, &aa)| mm * aa).collect();
        let m: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(&a)
            .map(|(&r, &aa)| 0.5 * r * (1.0 - aa))
            .collect();
        let mut fields = EfStaticFields {
            model,
            grid,
            a,
            b,
            m_norm,
            v_norm,
            v_shift: Vec::new(),
            rho,
            m,
            center: CenterKind::Raw,
        };
        fields.v_shift = fields.compute_v_shift();
        Ok(fields)
    }

    pub fn model(&self) -> FluidModel {
        self.model
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn m_norm(&self) -> &[f64] {
        &self.m_norm
    }

    pub fn v_norm(&self) -> &[f64] {
        &self.v_norm
    }

    pub fn v_shift(&self) -> &[f64] {
        &self.v_shift
    }

    pub(crate) fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub(crate) fn center_kind(&self) -> CenterKind {
        self.center
    }

    /// v_shift = integral of e^(lambda - nu) from 0 to each node.
    fn compute_v_shift(&self) -> Vec<f64> {
        let integrand: Vec<f64> = (0..self.grid.len()).map(|i| self.exp_lambda_minus_nu(i)).collect();
        let first_cell = match self.center {
            CenterKind::RegularSeries => {
                let series = CenterSeries::new(&self.model);
                let w2 = self.model.k() * self.model.k() / (1.0 + self.model.k() * self.model.k());
                let rho0 = self.model.rho0();
                series.first_cell_integral(self.grid.r_min(), |s, rho, m| {
                    let a = 1.0 - 2.0 * m / s;
                    a.powf(-0.5) * (rho0 / rho).powf(-w2)
                })
            }
            // integrand -> 1 at a regular center; without series data take
            // the leading-order cell
            CenterKind::Raw => integrand[0] * self.grid.r_min(),
        };
        let mut pre = quad::prefix_integrals(self.grid.nodes(), &integrand);
        for v in &mut pre {
            *v += first_cell;
        }
        pre
    }

    fn exp_lambda_minus_nu(&self, i: usize) -> f64 {
        let w2 = self.model.k() * self.model.k() / (1.0 + self.model.k() * self.model.k());
        // e^lambda = a^(-1/2), e^nu = (rho0/rho)^w2
        self.a[i].powf(-0.5) * (self.model.rho0() / self.rho[i]).powf(-w2)
    }

    /// Mass-aspect kernel value at node i with an explicit |V|:
    /// 4 pi (1+k^2) b M (w |V| + 1) r^2.
    pub(crate) fn kernel_at(&self, form: KernelForm, i: usize, v_abs: f64) -> f64 {
        let k2 = self.model.k() * self.model.k();
        4.0 * PI * (1.0 + k2)
            * self.b[i]
            * self.m_norm[i]
            * (form.weight(&self.model) * v_abs + 1.0)
            * self.grid.nodes()[i]
            * self.grid.nodes()[i]
    }

    /// Integral of the static kernel over the first cell [0, r_min].
    pub(crate) fn kernel_first_cell(&self, form: KernelForm) -> f64 {
        let model = self.model;
        let k2 = model.k() * model.k();
        let w = form.weight(&model);
        match self.center {
            CenterKind::RegularSeries => {
                let series = CenterSeries::new(&model);
                let w2 = k2 / (1.0 + k2);
                series.first_cell_integral(self.grid.r_min(), move |s, rho, m| {
                    let a = 1.0 - 2.0 * m / s;
                    let b = a.powf(-0.5) * (model.rho0() / rho).powf(w2);
                    let m_norm = rho / a;
                    4.0 * PI * (1.0 + k2) * b * m_norm * (w * (0.5 * a) + 1.0) * s * s
                })
            }
            // kernel ~ const * s^2 near a regular center
            CenterKind::Raw => self.kernel_at(form, 0, self.v_norm[0].abs()) * self.grid.r_min() / 3.0,
        }
    }

    /// Interpolate (rho, m) at an off-node radius by cubic Hermite with the
    /// static-system derivatives at the bracketing nodes.
    pub fn sample_rho_m(&self, r: f64) -> Result<(f64, f64)> {
        let i = self
            .grid
            .bracket(r)
            .ok_or_else(|| Error::Grid(format!("r = {r} outside the field grid")))?;
        let (x0, x1) = (self.grid.nodes()[i], self.grid.nodes()[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let d0 = tov_rhs(&self.model, x0, self.rho[i], self.m[i]);
        let d1 = tov_rhs(&self.model, x1, self.rho[i + 1], self.m[i + 1]);
        let hermite = |y0: f64, y1: f64, s0: f64, s1: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
                + s0 * h * (t3 - 2.0 * t2 + t)
                + y1 * (-2.0 * t3 + 3.0 * t2)
                + s1 * h * (t3 - t2)
        };
        Ok((
            hermite(self.rho[i], self.rho[i + 1], d0.0, d1.0),
            hermite(self.m[i], self.m[i + 1], d0.1, d1.1),
        ))
    }

    /// b at an arbitrary radius inside the grid.
    pub fn b_at(&self, r: f64) -> Result<f64> {
        if let Some(i) = self.grid.index_of(r, 1e-12) {
            return Ok(self.b[i]);
        }
        let (rho, m) = self.sample_rho_m(r)?;
        let a = 1.0 - 2.0 * m / r;
        let w2 = self.model.k() * self.model.k() / (1.0 + self.model.k() * self.model.k());
        Ok(a.powf(-0.5) * (self.model.rho0() / rho).powf(w2))
    }

    /// rho at an arbitrary radius inside the grid.
    pub fn rho_at(&self, r: f64) -> Result<f64> {
        if let Some(i) = self.grid.index_of(r, 1e-12) {
            return Ok(self.rho[i]);
        }
        Ok(self.sample_rho_m(r)?.0)
    }

    /// A copy of the fields with the given radii inserted as exact nodes
    /// (existing nodes are reused).  New nodes get Hermite-interpolated
    /// (rho, m) and algebraically derived EF fields.
    pub fn with_nodes(&self, radii: &[f64]) -> Result<Self> {
        let mut extra: Vec<f64> = Vec::new();
        for &r in radii {
            if r <= self.grid.r_min() || r >= self.grid.r_max() {
                return Err(Error::Grid(format!(
                    "cannot insert node r = {r} outside the grid interior"
                )));
            }
            if self.grid.index_of(r, 1e-12).is_none() {
                extra.push(r);
            }
        }
        if extra.is_empty() {
            return Ok(self.clone());
        }
        extra.sort_by(f64::total_cmp);
        extra.dedup();

        let w2 = self.model.k() * self.model.k() / (1.0 + self.model.k() * self.model.k());
        let mut nodes = Vec::with_capacity(self.grid.len() + extra.len());
        let mut rho = Vec::with_capacity(nodes.capacity());
        let mut m = Vec::with_capacity(nodes.capacity());
        let mut a = Vec::with_capacity(nodes.capacity());
        let mut b = Vec::with_capacity(nodes.capacity());
        let mut m_norm = Vec::with_capacity(nodes.capacity());
        let mut v_norm = Vec::with_capacity(nodes.capacity());

        let mut push_old = |i: usize, out: &mut (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)| {
            out.0.push(self.grid.nodes()[i]);
            out.1.push(self.rho[i]);
            out.2.push(self.m[i]);
            out.3.push(self.a[i]);
            out.4.push(self.b[i]);
            out.5.push(self.m_norm[i]);
            out.6.push(self.v_norm[i]);
        };
        let mut out = (
            std::mem::take(&mut nodes),
            std::mem::take(&mut rho),
            std::mem::take(&mut m),
            std::mem::take(&mut a),
            std::mem::take(&mut b),
            std::mem::take(&mut m_norm),
            std::mem::take(&mut v_norm),
        );
        let mut it = extra.iter().copied().peekable();
        for i in 0..self.grid.len() {
            while let Some(&r_new) = it.peek() {
                if r_new < self.grid.nodes()[i] {
                    let (rho_new, m_new) = self.sample_rho_m(r_new)?;
                    let a_new = 1.0 - 2.0 * m_new / r_new;
                    if !(a_new > 0.0 && rho_new > 0.0) {
                        return Err(Error::Grid(format!(
                            "interpolated fields unphysical at r = {r_new}"
                        )));
                    }
                    let b_new = a_new.powf(-0.5) * (self.model.rho0() / rho_new).powf(w2);
                    out.0.push(r_new);
                    out.1.push(rho_new);
                    out.2.push(m_new);
                    out.3.push(a_new);
                    out.4.push(b_new);
                    out.5.push(rho_new / a_new);
                    out.6.push(-0.5 * a_new);
                    it.next();
                } else {
                    break;
                }
            }
            push_old(i, &mut out);
        }

        let mut fields = EfStaticFields {
            model: self.model,
            grid: RadialGrid::new(out.0)?,
            rho: out.1,
            m: out.2,
            a: out.3,
            b: out.4,
            m_norm: out.5,
            v_norm: out.6,
            v_shift: Vec::new(),
            center: self.center,
        };
        fields.v_shift = fields.compute_v_shift();
        Ok(fields)
    }
}

/// Determinant of the (v, r) block of the EF metric; equals -b^2 because
/// g_rr = 0 in these coordinates.
pub fn vr_block_determinant(a: f64, b: f64) -> f64 {
    let g_vv = -a * b * b;
    let g_vr = b;
    let g_rr = 0.0;
    g_vv * g_rr - g_vr * g_vr
}

/// Residual of the integral representation of a(r) evaluated on static data.
#[derive(Debug, Clone)]
pub struct ConstraintResidual {
    pub kernel: KernelForm,
    /// a(r) minus the right-hand-side quadrature, per node.
    pub residual: Vec<f64>,
    pub max_abs: f64,
}

/// Evaluate a(r) - [1 - 4 pi (1+k^2) / (r b(r)) * integral of the kernel]
/// on the fields' own grid, for the chosen kernel form.
pub fn static_constraint_residual(fields: &EfStaticFields, kernel: KernelForm) -> ConstraintResidual {
    let n = fields.grid().len();
    let kern: Vec<f64> = (0..n)
        .map(|i| fields.kernel_at(kernel, i, fields.v_norm()[i].abs()))
        .collect();
    let mut prefix = quad::prefix_integrals(fields.grid().nodes(), &kern);
    let first = fields.kernel_first_cell(kernel);
    for v in &mut prefix {
        *v += first;
    }
    let mut residual = Vec::with_capacity(n);
    let mut max_abs: f64 = 0.0;
    for i in 0..n {
        let r = fields.grid().nodes()[i];
        let rhs = 1.0 - prefix[i] / (r * fields.b()[i]);
        let res = fields.a()[i] - rhs;
        max_abs = max_abs.max(res.abs());
        residual.push(res);
    }
    ConstraintResidual { kernel, residual, max_abs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::tov::solve_static;

    fn star(k: f64) -> (FluidModel, EfStaticFields) {
        let model = FluidModel::new(k, 1.0).unwrap();
        let prof = solve_static(&model, &GridSpec::for_model(&model)).unwrap();
        (model, EfStaticFields::from_profile(&prof))
    }

    #[test]
    fn center_limits() {
        let (model, f) = star(0.6);
        assert!((f.a()[0] - 1.0).abs() < 1e-9);
        assert!((f.b()[0] - 1.0).abs() < 1e-9);
        assert!((f.v_norm()[0] + 0.5).abs() < 1e-9);
        assert!((f.m_norm()[0] - model.rho0()).abs() < 1e-6);
    }

    #[test]
    fn algebraic_identities_nodewise() {
        let (model, f) = star(0.577);
        let prof = solve_static(&model, &GridSpec::for_model(&model)).unwrap();
        for i in 0..f.grid().len() {
            // a = e^(-2 lambda)
            let a_from_lambda = (-2.0 * prof.lambda()[i]).exp();
            assert!((f.a()[i] - a_from_lambda).abs() <= 4.0 * f64::EPSILON * f.a()[i]);
            // b = e^(lambda + nu)
            let b_direct = (prof.lambda()[i] + prof.nu()[i]).exp();
            assert!((f.b()[i] - b_direct).abs() <= 4.0 * f64::EPSILON * f.b()[i]);
            // V = -a/2 and M a = rho
            assert_eq!(f.v_norm()[i], -0.5 * f.a()[i]);
            let rho_back = f.m_norm()[i] * f.a()[i];
            assert!((rho_back - prof.rho()[i]).abs() <= 4.0 * f64::EPSILON * prof.rho()[i]);
        }
    }

    #[test]
    fn monotonicity_of_b_and_v_shift() {
        let (_, f) = star(0.6);
        for w in f.b().windows(2) {
            assert!(w[1] > w[0], "b must increase");
        }
        assert!(f.b().iter().all(|&b| b >= 1.0 - 1e-12));
        for w in f.v_shift().windows(2) {
            assert!(w[1] > w[0], "v_shift must increase");
        }
        let r_min = f.grid().r_min();
        assert!((f.v_shift()[0] - r_min).abs() < 1e-3 * r_min);
    }

    #[test]
    fn v_shift_derivative_matches_integrand() {
        let (_, f) = star(0.6);
        let nodes = f.grid().nodes();
        for i in (5..f.grid().len() - 5).step_by(37) {
            let h1 = nodes[i] - nodes[i - 1];
            let h2 = nodes[i + 1] - nodes[i];
            // nonuniform central difference
            let d = (f.v_shift()[i + 1] * h1 * h1 - f.v_shift()[i - 1] * h2 * h2
                + f.v_shift()[i] * (h2 * h2 - h1 * h1))
                / (h1 * h2 * (h1 + h2));
            let expect = f.exp_lambda_minus_nu(i);
            assert!(
                (d - expect).abs() < 1e-4 * expect,
                "node {i}: d = {d}, integrand = {expect}"
            );
        }
    }

    #[test]
    fn tail_values_for_k_one_third_squared() {
        let k = (1.0f64 / 3.0).sqrt();
        let (_, f) = star(k);
        // window-averaged a -> 4/7, V -> -2/7
        let n = f.grid().len();
        let tail = &f.a()[n - 200..];
        let avg: f64 = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((avg - 4.0 / 7.0).abs() < 0.02, "a tail avg {avg}");
        let v_avg: f64 = f.v_norm()[n - 200..].iter().sum::<f64>() / 200.0;
        assert!((v_avg + 2.0 / 7.0).abs() < 0.01, "V tail avg {v_avg}");
    }

    #[test]
    fn contrast_kernel_reproduces_a() {
        let (_, f) = star(0.6);
        let res = static_constraint_residual(&f, KernelForm::Contrast);
        assert!(res.max_abs < 1e-8, "contrast-kernel residual {}", res.max_abs);
    }

    #[test]
    fn ksquared_kernel_mismatch_vanishes_only_at_crossover() {
        // the kernels differ by 2 |V| (k^4 + 2k^2 - 1), zero at k^2 = sqrt(2) - 1
        let (_, f) = star(0.6);
        let res = static_constraint_residual(&f, KernelForm::KSquared);
        assert!(
            res.max_abs > 1e-3 && res.max_abs < 1e-1,
            "k-squared kernel residual {}",
            res.max_abs
        );
        // k^4 + 2k^2 - 1 < 0 at k = 0.6: the kernel is too small, the
        // quadrature overshoots a, the residual a - rhs is negative
        let far = res.residual[f.grid().len() - 1];
        assert!(far < 0.0, "expected negative far-field residual, got {far}");

        let k_star = (std::f64::consts::SQRT_2 - 1.0).sqrt();
        let (_, f2) = star(k_star);
        let res2 = static_constraint_residual(&f2, KernelForm::KSquared);
        assert!(res2.max_abs < 1e-7, "kernels must coincide at k* ({})", res2.max_abs);
    }

    #[test]
    fn vacuum_injection_gives_flat_a() {
        let model = FluidModel::new(0.5, 1.0).unwrap();
        let nodes: Vec<f64> = (1..200).map(|i| 0.01 * i as f64).collect();
        let grid = RadialGrid::new(nodes).unwrap();
        let n = grid.len();
        let f = EfStaticFields::from_raw(
            model,
            grid,
            vec![1.0; n],
            vec![1.0; n],
            vec![0.0; n],
            vec![-0.5; n],
        )
        .unwrap();
        let res = static_constraint_residual(&f, KernelForm::Contrast);
        assert_eq!(res.max_abs, 0.0);
        assert!(f.a().iter().all(|&a| a == 1.0));
    }

    #[test]
    fn node_insertion_preserves_fields_and_accuracy() {
        let (model, f) = star(0.6);
        let l = model.radial_scale();
        let targets = [1.9371 * l, 2.0 * l, 7.31 * l];
        let g = f.with_nodes(&targets).unwrap();
        assert_eq!(g.grid().len(), f.grid().len() + 3);
        for &r in &targets {
            let i = g.grid().index_of(r, 1e-13).expect("inserted node missing");
            // inserted values satisfy the algebraic relations
            assert_eq!(g.v_norm()[i], -0.5 * g.a()[i]);
            let m_back = 0.5 * r * (1.0 - g.a()[i]);
            assert!((g.m_norm()[i] * g.a()[i] * r * r).is_finite());
            assert!(m_back > 0.0);
        }
        // existing nodes are bit-identical
        for (i, &r) in f.grid().nodes().iter().enumerate() {
            let j = g.grid().index_of(r, 0.0).unwrap();
            assert_eq!(g.a()[j], f.a()[i]);
            assert_eq!(g.b()[j], f.b()[i]);
        }
        // the constraint residual stays at quadrature accuracy
        let res = static_constraint_residual(&g, KernelForm::Contrast);
        assert!(res.max_abs < 1e-8);
    }

    #[test]
    fn metric_block_determinant() {
        let (_, f) = star(0.6);
        for i in 0..f.grid().len() {
            let det = vr_block_determinant(f.a()[i], f.b()[i]);
            assert_eq!(det, -f.b()[i] * f.b()[i]);
        }
    }
}
