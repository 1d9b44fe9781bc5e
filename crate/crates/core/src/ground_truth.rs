//! Ground truth used to drive the simulation: the true antenna pattern
//! over the trajectory and Rician-calibrated channel realizations.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array_geometry::{steering_vector, ArrayConfig, MeasurementPoint};
use crate::error::{ApcError, Result};

/// Direction-dependent power-radiation efficiency a(θ_i) sampled on the
/// trajectory grid, values in [0, 1] with the global maximum at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaPattern {
    pub values: Vec<f64>,
}

impl AntennaPattern {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Channel statistics: Rician factor, path count, and line-of-sight gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    /// LoS-to-multipath power ratio in dB.
    pub rician_kappa_db: f64,
    /// Number of multipath components L.
    pub path_count: usize,
    /// Linear LoS path gain α_LoS.
    pub alpha_los: f64,
    /// Sub-seed mixed into per-point channel draws.
    pub rng_seed: u64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_los <= 0.0 {
            return Err(ApcError::InvalidParameter(format!(
                "alpha_los must be positive, got {}",
                self.alpha_los
            )));
        }
        Ok(())
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            rician_kappa_db: 5.0,
            path_count: 5,
            alpha_los: 1.0,
            rng_seed: 0,
        }
    }
}

/// True channel at one trajectory point, split into its LoS and
/// multipath parts.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h_los: DMatrix<Complex64>,
    pub h_mp: DMatrix<Complex64>,
    pub point: MeasurementPoint,
}

impl ChannelRealization {
    pub fn total(&self) -> DMatrix<Complex64> {
        &self.h_los + &self.h_mp
    }
}

/// Single propagation path √gain · a_r(rx_angle) a_t(tx_angle)^H.
pub fn path_matrix(
    array: &ArrayConfig,
    rx_angle: f64,
    tx_angle: f64,
    gain: f64,
) -> DMatrix<Complex64> {
    let a_r = steering_vector(array.n_rx, array.element_spacing, rx_angle);
    let a_t = steering_vector(array.n_tx, array.element_spacing, tx_angle);
    (a_r * a_t.adjoint()).scale(gain.sqrt())
}

/// Ground-truth pattern: array factor of one or more steered beams,
/// a(θ_i) = max_b |a_t(θ_i)^H a_t(b)|² / N_tx², renormalized to peak 1.
pub fn synth_pattern(
    array: &ArrayConfig,
    points: &[MeasurementPoint],
    beam_angles: &[f64],
) -> Result<AntennaPattern> {
    if beam_angles.is_empty() {
        return Err(ApcError::InvalidParameter(
            "pattern synthesis needs at least one beam angle".into(),
        ));
    }
    let beams: Vec<_> = beam_angles
        .iter()
        .map(|&b| steering_vector(array.n_tx, array.element_spacing, b))
        .collect();
    let norm = (array.n_tx * array.n_tx) as f64;
    let mut values: Vec<f64> = points
        .iter()
        .map(|p| {
            let a_t = steering_vector(array.n_tx, array.element_spacing, p.angle);
            beams
                .iter()
                .map(|b| a_t.dotc(b).norm_sqr() / norm)
                .fold(0.0, f64::max)
        })
        .collect();
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        for v in &mut values {
            *v = (*v / peak).min(1.0);
        }
    }
    Ok(AntennaPattern { values })
}

/// Line-of-sight channel √α_LoS · a_r(θ_r) a_t(θ_i)^H for one point.
pub fn los_channel(
    array: &ArrayConfig,
    point: &MeasurementPoint,
    alpha_los: f64,
) -> DMatrix<Complex64> {
    path_matrix(array, point.receive_angle(), point.angle, alpha_los)
}

/// Multipath channel: sum of L random rank-1 paths with exponential
/// gains and uniform angles, rescaled so the realized Frobenius power
/// satisfies ‖H_MP‖² / ‖H_LoS‖² = 10^(−κ/10).
pub fn mp_channel<R: Rng>(
    array: &ArrayConfig,
    params: &ChannelParams,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let mut h = DMatrix::<Complex64>::zeros(array.n_rx, array.n_tx);
    if params.path_count == 0 {
        return h;
    }
    for _ in 0..params.path_count {
        let rx_angle = rng.random::<f64>() * TAU;
        let tx_angle = rng.random::<f64>() * TAU;
        // |CN(0,1)|² gain, exponential with unit mean.
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let gain = 0.5 * (re * re + im * im);
        h += path_matrix(array, rx_angle, tx_angle, gain);
    }
    let los_power = params.alpha_los * (array.n_rx * array.n_tx) as f64;
    let target_power = los_power * 10f64.powf(-params.rician_kappa_db / 10.0);
    let realized = h.norm_squared();
    if realized > 0.0 {
        h.scale_mut((target_power / realized).sqrt());
    }
    h
}

/// Draws the full channel H = H_LoS + H_MP at one trajectory point.
pub fn realize_channel<R: Rng>(
    array: &ArrayConfig,
    point: &MeasurementPoint,
    params: &ChannelParams,
    rng: &mut R,
) -> ChannelRealization {
    ChannelRealization {
        h_los: los_channel(array, point, params.alpha_los),
        h_mp: mp_channel(array, params, rng),
        point: *point,
    }
}
