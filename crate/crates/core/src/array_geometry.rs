//! Array configurations, steering vectors, and the circular measurement
//! trajectory flown around the base station.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ApcError, Result};

/// Transmit/receive array sizes and element spacing in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Element spacing as a multiple of the carrier wavelength.
    pub element_spacing: f64,
}

impl ArrayConfig {
    pub fn new(n_tx: usize, n_rx: usize, element_spacing: f64) -> Result<Self> {
        if n_tx == 0 || n_rx == 0 {
            return Err(ApcError::InvalidParameter(
                "array must have at least one element on each side".into(),
            ));
        }
        if element_spacing <= 0.0 {
            return Err(ApcError::InvalidParameter(format!(
                "element spacing must be positive, got {element_spacing}"
            )));
        }
        Ok(Self {
            n_tx,
            n_rx,
            element_spacing,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.n_tx, self.n_rx, self.element_spacing).map(|_| ())
    }
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            n_tx: 10,
            n_rx: 8,
            element_spacing: 0.5,
        }
    }
}

/// One stop of the measurement trajectory: angle seen from the base
/// station, position on the circle, and the circle parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPoint {
    /// 1-based index along the trajectory.
    pub index: usize,
    /// Angle from the base station, radians in [0, 2π).
    pub angle: f64,
    /// Ground-plane position in meters.
    pub position: (f64, f64),
    /// Circle radius in meters.
    pub radius: f64,
    /// Flight height in meters.
    pub height: f64,
}

impl MeasurementPoint {
    /// Angle of the receive array looking back at the base station.
    pub fn receive_angle(&self) -> f64 {
        (self.angle + std::f64::consts::PI) % TAU
    }
}

/// Uniform-linear-array steering vector: entry k is
/// exp(j 2π spacing k sin(angle)), so every entry has unit modulus.
pub fn steering_vector(n_elems: usize, spacing: f64, angle: f64) -> DVector<Complex64> {
    let phase_step = TAU * spacing * angle.sin();
    DVector::from_fn(n_elems, |k, _| {
        Complex64::from_polar(1.0, phase_step * k as f64)
    })
}

/// Evenly spaced stops on a circle of the given radius: θ_i = 2π(i−1)/Θ.
pub fn trajectory_points(
    theta_count: usize,
    radius: f64,
    height: f64,
) -> Result<Vec<MeasurementPoint>> {
    if theta_count == 0 {
        return Err(ApcError::InvalidParameter(
            "trajectory needs at least one point".into(),
        ));
    }
    if radius <= 0.0 {
        return Err(ApcError::InvalidParameter(format!(
            "trajectory radius must be positive, got {radius}"
        )));
    }
    let points = (0..theta_count)
        .map(|i| {
            let angle = TAU * i as f64 / theta_count as f64;
            MeasurementPoint {
                index: i + 1,
                angle,
                position: (radius * angle.cos(), radius * angle.sin()),
                radius,
                height,
            }
        })
        .collect();
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn steering_broadside_is_all_ones() {
        let v = steering_vector(4, 0.5, 0.0);
        for e in v.iter() {
            assert_relative_eq!(e.re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(e.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn steering_endfire_two_elements() {
        // 2π·0.5·1·sin(π/2) = π, so the second entry is −1.
        let v = steering_vector(2, 0.5, FRAC_PI_2);
        assert_relative_eq!(v[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(v[1].re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(v[1].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn steering_squared_norm_is_element_count() {
        let v = steering_vector(10, 0.5, 0.7);
        assert_relative_eq!(v.norm_squared(), 10.0, epsilon = 1e-12);
        for e in v.iter() {
            assert_relative_eq!(e.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn trajectory_four_points() {
        let pts = trajectory_points(4, 50.0, 25.0).unwrap();
        let angles: Vec<f64> = pts.iter().map(|p| p.angle).collect();
        for (got, want) in angles.iter().zip([0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn trajectory_fifty_points_even_gaps() {
        let pts = trajectory_points(50, 50.0, 25.0).unwrap();
        assert_eq!(pts.len(), 50);
        for w in pts.windows(2) {
            assert_relative_eq!(w[1].angle - w[0].angle, TAU / 50.0, epsilon = 1e-12);
        }
        for p in &pts {
            let r = (p.position.0.powi(2) + p.position.1.powi(2)).sqrt();
            assert!((r - 50.0).abs() < 1e-9);
        }
    }

    #[test]
    fn trajectory_single_point() {
        let pts = trajectory_points(1, 50.0, 25.0).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].angle, 0.0);
        assert_eq!(pts[0].index, 1);
    }

    #[test]
    fn trajectory_rejects_zero_count() {
        assert!(trajectory_points(0, 50.0, 25.0).is_err());
    }

    #[test]
    fn array_config_rejects_degenerate() {
        assert!(ArrayConfig::new(0, 8, 0.5).is_err());
        assert!(ArrayConfig::new(10, 8, 0.0).is_err());
        assert!(ArrayConfig::new(10, 8, 0.5).is_ok());
    }
}
