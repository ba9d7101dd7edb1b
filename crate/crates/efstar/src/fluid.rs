//! Fluid model for a linear equation of state p = k^2 rho.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deficit angle of the asymptotically conical geometry,
/// alpha = 4k^2 / ((1+k^2)^2 + 4k^2).
pub fn deficit_angle(k: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&k) || !k.is_finite() {
        return Err(Error::Domain(format!(
            "sound speed k = {k} outside [0, 1]"
        )));
    }
    let k2 = k * k;
    Ok(4.0 * k2 / ((1.0 + k2) * (1.0 + k2) + 4.0 * k2))
}

/// Coefficient c of the exact singular solution rho(r) = c / r^2,
/// c = k^2 / (2 pi ((1+k^2)^2 + 4k^2)).  Satisfies 8 pi c = alpha.
pub fn singular_density_coefficient(k: f64) -> Result<f64> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::Domain(format!(
            "sound speed k = {k} outside (0, 1]"
        )));
    }
    let k2 = k * k;
    Ok(k2 / (2.0 * std::f64::consts::PI * ((1.0 + k2) * (1.0 + k2) + 4.0 * k2)))
}

/// Equation-of-state and center data for a static star.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidModel {
    k: f64,
    rho0: f64,
}

impl FluidModel {
    /// Requires 0 < k < 1 and rho0 > 0 (geometric units G = c = 1).
    pub fn new(k: f64, rho0: f64) -> Result<Self> {
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::Domain(format!(
                "sound speed k = {k} outside (0, 1)"
            )));
        }
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(Error::Domain(format!("central density rho0 = {rho0} must be positive")));
        }
        Ok(FluidModel { k, rho0 })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    /// Deficit angle alpha for this model.
    pub fn alpha(&self) -> f64 {
        deficit_angle(self.k).expect("k validated at construction")
    }

    /// Characteristic radial scale L = (4 pi rho0)^(-1/2).
    pub fn radial_scale(&self) -> f64 {
        1.0 / (4.0 * std::f64::consts::PI * self.rho0).sqrt()
    }

    /// Singular-solution coefficient c with rho = c / r^2.
    pub fn singular_coefficient(&self) -> f64 {
        singular_density_coefficient(self.k).expect("k validated at construction")
    }

    /// The ratio (1-k^2)/(1+k^2) appearing in the initial-data kernel.
    pub fn contrast(&self) -> f64 {
        let k2 = self.k * self.k;
        (1.0 - k2) / (1.0 + k2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn deficit_angle_endpoints() {
        assert_eq!(deficit_angle(0.0).unwrap(), 0.0);
        assert_eq!(deficit_angle(1.0).unwrap(), 0.5);
    }

    #[test]
    fn deficit_angle_one_third() {
        // k^2 = 1/3 gives alpha = (4/3) / (16/9 + 4/3) = 3/7
        let k = (1.0f64 / 3.0).sqrt();
        let alpha = deficit_angle(k).unwrap();
        assert!((alpha - 3.0 / 7.0).abs() < 1e-15, "alpha = {alpha}");
    }

    #[test]
    fn deficit_angle_rejects_out_of_range() {
        assert!(deficit_angle(-0.1).is_err());
        assert!(deficit_angle(1.1).is_err());
        assert!(deficit_angle(f64::NAN).is_err());
    }

    #[test]
    fn singular_coefficient_at_unit_sound_speed() {
        // c = 1/(2 pi (4 + 4)) = 1/(16 pi)
        let c = singular_density_coefficient(1.0).unwrap();
        assert!((c - 1.0 / (16.0 * PI)).abs() < 1e-18);
    }

    #[test]
    fn singular_coefficient_dust_limit() {
        // c -> 0 as k -> 0: no hydrostatic singular solution for dust
        assert!(singular_density_coefficient(1e-8).unwrap() < 1e-15);
        assert!(singular_density_coefficient(0.0).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(FluidModel::new(0.0, 1.0).is_err());
        assert!(FluidModel::new(1.0, 1.0).is_err());
        assert!(FluidModel::new(0.5, 0.0).is_err());
        assert!(FluidModel::new(0.5, -1.0).is_err());
        assert!(FluidModel::new(0.5, 1.0).is_ok());
    }

    proptest! {
        #[test]
        fn alpha_in_open_half_interval(k in 1e-6f64..0.999999) {
            let alpha = deficit_angle(k).unwrap();
            prop_assert!(alpha > 0.0 && alpha < 0.5);
        }

        #[test]
        fn eight_pi_c_equals_alpha(k in 1e-6f64..1.0) {
            // algebraic tie between the singular solution and the deficit angle
            let c = singular_density_coefficient(k).unwrap();
            let alpha = deficit_angle(k).unwrap();
            prop_assert!((8.0 * PI * c - alpha).abs() <= 1e-15 * alpha.max(1e-30));
        }
    }
}
