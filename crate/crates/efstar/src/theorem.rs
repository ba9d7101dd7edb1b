//! Threshold and band constants of the trapped-surface construction, and
//! clause-by-clause verification of the sign pattern of a0 and dv-a.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ef::EfStaticFields;
use crate::error::{Error, Result};
use crate::fits::ScalingFits;
use crate::perturb::{check_no_trapped, InitialDataSet, Perturbation};

/// Absolute tolerance for "dv-a vanishes" clauses, in profile units; set by
/// the quadrature accuracy of the static null test.
pub const ZERO_TOL: f64 = 1e-8;

/// The admissibility threshold C1 and the h-independent band prefactor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TheoremConstants {
    /// C1 = 52 pi (1-k^2)/3 * rho0 * r* * b(3r*/2) / (1-alpha); the data are
    /// admissible whenever delta/h <= 1/C1.
    pub c1: f64,
    /// 2 pi (r* - delta) rho(r* + delta) (1 - alpha); the band bound is this
    /// times (2h+1)/h^2.
    pub c4_prefactor: f64,
    /// Interpolated b at 3r*/2, recorded for reproducibility.
    pub b_at_three_halves: f64,
    /// Interpolated rho at the outer band edge.
    pub rho_at_band_outer: f64,
}

/// Compute (C1, C4 prefactor) for a perturbation on the given static fields.
/// The grid must extend past 3r*/2.
pub fn theorem_constants(
    fields: &EfStaticFields,
    pert: &Perturbation,
) -> Result<TheoremConstants> {
    let r_eval = 1.5 * pert.r_star;
    if r_eval >= fields.grid().r_max() {
        return Err(Error::Grid(format!(
            "grid ends at {} but C1 needs b at 3r*/2 = {r_eval}",
            fields.grid().r_max()
        )));
    }
    let model = fields.model();
    let k2 = model.k() * model.k();
    let alpha = model.alpha();
    let b_eval = fields.b_at(r_eval)?;
    let c1 = 52.0 * PI * (1.0 - k2) / 3.0 * model.rho0() * pert.r_star * b_eval / (1.0 - alpha);
    let rho_outer = fields.rho_at(pert.r_star + pert.delta)?;
    let c4_prefactor = 2.0 * PI * (pert.r_star - pert.delta) * rho_outer * (1.0 - alpha);
    Ok(TheoremConstants { c1, c4_prefactor, b_at_three_halves: b_eval, rho_at_band_outer: rho_outer })
}

/// One verified clause of the sign-pattern table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClauseCheck {
    pub name: String,
    pub ok: bool,
    /// Extremal or first-offending radius, when one exists.
    pub witness_radius: Option<f64>,
}

/// Machine verdicts for one perturbed data set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremReport {
    pub k: f64,
    pub rho0: f64,
    pub r_star: f64,
    pub delta: f64,
    pub h: f64,
    pub big_delta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C4_prefactor")]
    pub c4_prefactor: f64,
    /// C4_prefactor * (2h+1)/h^2, the full band bound on -dv-a.
    pub band_bound: f64,
    pub delta_over_h: f64,
    /// True iff delta/h <= 1/C1.  Out-of-hypothesis runs still produce a
    /// report, flagged here.
    pub hypothesis_met: bool,
    pub min_a0: f64,
    pub min_a0_radius: f64,
    /// Most negative dv-a on the closed band.
    pub band_min_av: f64,
    /// Largest dv-a on the annulus (r*+delta, r*+Delta].
    pub annulus_sup_av: f64,
    pub tail_margin: f64,
    pub zero_tol: f64,
    pub clauses: Vec<ClauseCheck>,
    /// Scaling-exponent fits; attached by sweep aggregation, absent for a
    /// single run.
    pub fits: Option<ScalingFits>,
}

impl TheoremReport {
    pub fn clause(&self, name: &str) -> Option<&ClauseCheck> {
        self.clauses.iter().find(|c| c.name == name)
    }

    pub fn all_clauses_ok(&self) -> bool {
        self.clauses.iter().all(|c| c.ok)
    }
}

/// Verify every clause of the sign-pattern table on the given data.
///
/// Clause names: `a0_positive_and_dominated`, `av_zero_inside`,
/// `av_negative_beyond`, `av_band_bound`, `av_annulus_sup`,
/// `no_trapped_tail`.
pub fn verify_theorem(
    data: &InitialDataSet,
    fields: &EfStaticFields,
    pert: &Perturbation,
) -> Result<TheoremReport> {
    let constants = theorem_constants(fields, pert)?;
    let model = fields.model();
    let grid = data.grid();
    let n = grid.len();
    let (i_lo, i_hi) = data.band_indices();
    let band_bound = constants.c4_prefactor * pert.band_strength();

    let trapped = check_no_trapped(data);

    // (i) 0 < a0 <= a_static everywhere
    let clause_i = {
        let positive = trapped.min_a0 > 0.0;
        let dominated = data.a1().iter().all(|&v| v <= 0.0);
        let witness = if positive && dominated {
            Some(trapped.witness_radius)
        } else if !positive {
            Some(trapped.witness_radius)
        } else {
            data.a1()
                .iter()
                .position(|&v| v > 0.0)
                .map(|i| grid.nodes()[i])
        };
        ClauseCheck {
            name: "a0_positive_and_dominated".into(),
            ok: positive && dominated,
            witness_radius: witness,
        }
    };

    // (ii) dv-a = 0 on [0, r* - delta)
    let clause_ii = {
        let mut worst = 0.0f64;
        let mut arg = None;
        for i in 0..i_lo {
            if data.av()[i].abs() > worst {
                worst = data.av()[i].abs();
                arg = Some(grid.nodes()[i]);
            }
        }
        ClauseCheck { name: "av_zero_inside".into(), ok: worst <= ZERO_TOL, witness_radius: arg }
    };

    // (iii) dv-a < 0 on (r* - delta, infinity)
    let clause_iii = {
        let bad = (i_lo + 1..n).find(|&i| data.av()[i] >= 0.0);
        ClauseCheck {
            name: "av_negative_beyond".into(),
            ok: bad.is_none(),
            witness_radius: bad.map(|i| grid.nodes()[i]),
        }
    };

    // (iv) dv-a <= -C4 (2h+1)/h^2 on the closed band
    let (band_min_av, clause_iv) = {
        let mut min_av = f64::INFINITY;
        let mut sup_av = f64::NEG_INFINITY;
        let mut sup_r = grid.nodes()[i_lo];
        for i in i_lo..=i_hi {
            min_av = min_av.min(data.av()[i]);
            if data.av()[i] > sup_av {
                sup_av = data.av()[i];
                sup_r = grid.nodes()[i];
            }
        }
        let ok = sup_av <= -band_bound;
        (
            min_av,
            ClauseCheck { name: "av_band_bound".into(), ok, witness_radius: Some(sup_r) },
        )
    };

    // (v) sup of dv-a on the annulus, recorded for the scaling fits
    let (annulus_sup, clause_v) = {
        let r_end = pert.r_star + pert.big_delta;
        let mut sup = f64::NEG_INFINITY;
        let mut sup_r = None;
        for i in i_hi + 1..n {
            let r = grid.nodes()[i];
            if r > r_end * (1.0 + 1e-14) {
                break;
            }
            if data.av()[i] > sup {
                sup = data.av()[i];
                sup_r = Some(r);
            }
        }
        (
            sup,
            ClauseCheck { name: "av_annulus_sup".into(), ok: sup < 0.0, witness_radius: sup_r },
        )
    };

    let clause_tail = ClauseCheck {
        name: "no_trapped_tail".into(),
        ok: trapped.tail_margin > 0.0,
        witness_radius: Some(grid.r_max()),
    };

    let delta_over_h = pert.delta / pert.h;
    Ok(TheoremReport {
        k: model.k(),
        rho0: model.rho0(),
        r_star: pert.r_star,
        delta: pert.delta,
        h: pert.h,
        big_delta: pert.big_delta,
        c1: constants.c1,
        c4_prefactor: constants.c4_prefactor,
        band_bound,
        delta_over_h,
        hypothesis_met: delta_over_h <= 1.0 / constants.c1,
        min_a0: trapped.min_a0,
        min_a0_radius: trapped.witness_radius,
        band_min_av,
        annulus_sup_av: annulus_sup,
        tail_margin: trapped.tail_margin,
        zero_tol: ZERO_TOL,
        clauses: vec![clause_i, clause_ii, clause_iii, clause_iv, clause_v, clause_tail],
        fits: None,
    })
}
