//! Composite interpolatory quadrature on non-uniform grids.
//!
//! Each interval [x_i, x_{i+1}] is integrated by the local cubic through the
//! four nearest stencil points (one-sided at segment ends), which keeps the
//! composite rule fourth-order on the solver's non-uniform grids.  Integrands
//! with jumps are handled by splitting the node range into segments whose
//! stencils never straddle a discontinuity.

const GL3_NODES: [f64; 3] = [-0.7745966692414834, 0.0, 0.7745966692414834];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Lagrange interpolation through (xs[j], fs[j]) evaluated at t.
fn lagrange_eval(xs: &[f64], fs: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..xs.len() {
        let mut lj = 1.0;
        for i in 0..xs.len() {
            if i != j {
                lj *= (t - xs[i]) / (xs[j] - xs[i]);
            }
        }
        acc += fs[j] * lj;
    }
    acc
}

/// Integral over [a, b] of the interpolant through (xs, fs), by 3-point
/// Gauss-Legendre (exact through degree 5, so exact for the cubic).
fn interpolant_integral(xs: &[f64], fs: &[f64], a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (gx, gw) in GL3_NODES.iter().zip(GL3_WEIGHTS) {
        acc += gw * lagrange_eval(xs, fs, mid + half * gx);
    }
    acc * half
}

/// Per-interval integrals on one smooth segment (len n-1 for n nodes).
fn segment_panels(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 2, "segment needs at least two nodes");
    let width = n.min(4);
    (0..n - 1)
        .map(|i| {
            // stencil of `width` points containing interval i, clamped to the segment
            let j0 = i.saturating_sub(1).min(n - width);
            let xs = &x[j0..j0 + width];
            let fs = &f[j0..j0 + width];
            interpolant_integral(xs, fs, x[i], x[i + 1])
        })
        .collect()
}

/// Integrals of the interpolant over every interval of the grid.
pub fn panel_integrals(x: &[f64], f: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), f.len());
    segment_panels(x, f)
}

/// Cumulative integral from x[0] to each node; result[0] = 0.
pub fn prefix_integrals(x: &[f64], f: &[f64]) -> Vec<f64> {
    accumulate(&panel_integrals(x, f))
}

/// Total integral over the grid span.
pub fn integral(x: &[f64], f: &[f64]) -> f64 {
    panel_integrals(x, f).iter().sum()
}

/// Per-interval integrals for an integrand with jump discontinuities at the
/// node indices in `splits` (strictly interior, ascending).  `f_below[i]` and
/// `f_above[i]` are the one-sided values at node i; they coincide except at
/// split nodes.  Stencils are confined to each smooth segment, so panels away
/// from the splits are bit-identical to what an unsplit rule with the same
/// segment boundaries produces.
pub fn panel_integrals_split(
    x: &[f64],
    f_below: &[f64],
    f_above: &[f64],
    splits: &[usize],
) -> Vec<f64> {
    let n = x.len();
    assert_eq!(f_below.len(), n);
    assert_eq!(f_above.len(), n);
    debug_assert!(splits.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(splits.iter().all(|&s| s > 0 && s < n - 1));

    let mut bounds = Vec::with_capacity(splits.len() + 2);
    bounds.push(0);
    bounds.extend_from_slice(splits);
    bounds.push(n - 1);

    let mut panels = Vec::with_capacity(n - 1);
    for seg in bounds.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        // one value array per segment: right limit at the left end, left
        // limit at the right end, interior values from either side
        let mut fs = Vec::with_capacity(b - a + 1);
        fs.push(f_above[a]);
        fs.extend_from_slice(&f_below[a + 1..=b]);
        panels.extend(segment_panels(&x[a..=b], &fs));
    }
    panels
}

/// Cumulative integrals for a split integrand; result[0] = 0.
pub fn prefix_integrals_split(
    x: &[f64],
    f_below: &[f64],
    f_above: &[f64],
    splits: &[usize],
) -> Vec<f64> {
    accumulate(&panel_integrals_split(x, f_below, f_above, splits))
}

fn accumulate(panels: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(panels.len() + 1);
    let mut s = 0.0;
    out.push(0.0);
    for &p in panels {
        s += p;
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exact_for_cubics() {
        let x = uniform(0.0, 1.0, 7);
        let f: Vec<f64> = x.iter().map(|&t| t * t).collect();
        let s = integral(&x, &f);
        assert!((s - 1.0 / 3.0).abs() < 1e-15, "got {s}");

        let g: Vec<f64> = x.iter().map(|&t| 2.0 * t * t * t - t + 0.5).collect();
        let sg = integral(&x, &g);
        assert!((sg - 0.5).abs() < 1e-15, "got {sg}");
    }

    #[test]
    fn fourth_order_on_smooth_integrand() {
        // e^t on [0,1]; halving the spacing should cut the error ~16x
        let exact = std::f64::consts::E - 1.0;
        let err = |n: usize| {
            let x = uniform(0.0, 1.0, n);
            let f: Vec<f64> = x.iter().map(|&t| t.exp()).collect();
            (integral(&x, &f) - exact).abs()
        };
        let (e1, e2) = (err(33), err(65));
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}, errors {e1} {e2}");
    }

    #[test]
    fn split_restores_rate_for_jump_integrand() {
        // f = t^2 for t < 1/2 (left limit at the split), t^2 + 1 above
        let jump_err = |n: usize, split: bool| {
            let x = uniform(0.0, 1.0, n); // odd n so 0.5 is a node
            let mid = (n - 1) / 2;
            let f_lo: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(i, &t)| if i <= mid { t * t } else { t * t + 1.0 })
                .collect();
            let mut f_hi = f_lo.clone();
            f_hi[mid] = x[mid] * x[mid] + 1.0;
            let exact = 1.0 / 3.0 + 0.5;
            let s = if split {
                prefix_integrals_split(&x, &f_lo, &f_hi, &[mid])[n - 1]
            } else {
                integral(&x, &f_lo)
            };
            (s - exact).abs()
        };
        // with the split the rule is exact for the piecewise quadratic
        assert!(jump_err(33, true) < 1e-14);
        // without it the stencil straddles the jump and the error is gross
        assert!(jump_err(33, false) > 1e-4);
    }

    #[test]
    fn split_prefix_matches_piecewise_antiderivative() {
        let n = 41;
        let x = uniform(0.0, 2.0, n);
        let mid = 20; // x = 1.0
        let f_lo: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &t)| if i <= mid { t } else { 3.0 * t })
            .collect();
        let mut f_hi = f_lo.clone();
        f_hi[mid] = 3.0 * x[mid];
        let pre = prefix_integrals_split(&x, &f_lo, &f_hi, &[mid]);
        for (i, &t) in x.iter().enumerate() {
            let exact = if t <= 1.0 { 0.5 * t * t } else { 0.5 + 1.5 * (t * t - 1.0) };
            assert!((pre[i] - exact).abs() < 1e-13, "node {i}: {} vs {exact}", pre[i]);
        }
    }

    #[test]
    fn tiny_segments_fall_back() {
        // two-node segment -> exact for linear
        let x = [0.0, 1.0];
        let f = [0.0, 2.0];
        assert!((integral(&x, &f) - 1.0).abs() < 1e-15);
        // three-node segment -> exact for quadratic
        let x3 = [0.0, 0.4, 1.0];
        let f3: Vec<f64> = x3.iter().map(|&t| t * t).collect();
        assert!((integral(&x3, &f3) - 1.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn exact_on_random_cubics(c0 in -2.0f64..2.0, c1 in -2.0f64..2.0,
                                  c2 in -2.0f64..2.0, c3 in -2.0f64..2.0,
                                  n in 4usize..40) {
            let x = uniform(-1.0, 2.0, n);
            let f: Vec<f64> = x.iter().map(|&t| c0 + t*(c1 + t*(c2 + t*c3))).collect();
            let anti = |t: f64| t*(c0 + t*(c1/2.0 + t*(c2/3.0 + t*c3/4.0)));
            let exact = anti(2.0) - anti(-1.0);
            let got = integral(&x, &f);
            prop_assert!((got - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
        }

        #[test]
        fn prefix_is_linear_in_integrand(n in 5usize..30, scale in 0.1f64..10.0) {
            let x = uniform(0.0, 1.0, n);
            let f: Vec<f64> = x.iter().map(|&t| (3.0*t).sin()).collect();
            let g: Vec<f64> = f.iter().map(|&v| scale * v).collect();
            let pf = prefix_integrals(&x, &f);
            let pg = prefix_integrals(&x, &g);
            for i in 0..n {
                prop_assert!((pg[i] - scale * pf[i]).abs() <= 1e-12 * (1.0 + pf[i].abs() * scale));
            }
        }
    }
}
