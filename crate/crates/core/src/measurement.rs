//! Pilot generation, noise, and the observed signal matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array_geometry::MeasurementPoint;
use crate::error::{ApcError, Result};
use crate::ground_truth::ChannelRealization;

/// Known training matrix P (N_tx × Q) with total energy γ·Q.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    pub entries: DMatrix<Complex64>,
    /// Linear transmit power γ.
    pub power_budget: f64,
}

impl PilotMatrix {
    pub fn n_tx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn q_len(&self) -> usize {
        self.entries.ncols()
    }
}

/// Received pilot block Y(θ_i) at one trajectory point.
#[derive(Debug, Clone)]
pub struct MeasurementMatrix {
    pub entries: DMatrix<Complex64>,
    pub point: MeasurementPoint,
    pub snr_db: f64,
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    // Circularly symmetric, unit per-entry variance.
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws an i.i.d. complex Gaussian pilot matrix and rescales it to the
/// total energy budget ‖P‖_F² = γ·Q. The same matrix is reused at every
/// trajectory point of a campaign.
pub fn generate_pilots<R: Rng>(
    n_tx: usize,
    q_len: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<PilotMatrix> {
    if q_len <= n_tx {
        return Err(ApcError::InvalidParameter(format!(
            "pilot length Q={q_len} must exceed N_tx={n_tx} so that P P^H is invertible"
        )));
    }
    if gamma <= 0.0 {
        return Err(ApcError::InvalidParameter(format!(
            "transmit power must be positive, got {gamma}"
        )));
    }
    let mut p = DMatrix::from_fn(n_tx, q_len, |_, _| complex_gaussian(rng));
    let target = gamma * q_len as f64;
    let realized = p.norm_squared();
    p.scale_mut((target / realized).sqrt());
    Ok(PilotMatrix {
        entries: p,
        power_budget: gamma,
    })
}

/// Transmit-SNR definition SNR = γ/σ², solved for the noise variance.
pub fn snr_to_noise_var(snr_db: f64, gamma: f64) -> f64 {
    gamma / 10f64.powf(snr_db / 10.0)
}

/// Observation Y = √a · (H_LoS + H_MP) P + V with white complex
/// Gaussian noise of per-entry variance `noise_var`.
pub fn observe<R: Rng>(
    channel: &ChannelRealization,
    a_true: f64,
    pilots: &PilotMatrix,
    noise_var: f64,
    snr_db: f64,
    rng: &mut R,
) -> Result<MeasurementMatrix> {
    if !(0.0..=1.0).contains(&a_true) {
        return Err(ApcError::InvalidParameter(format!(
            "pattern value must lie in [0,1], got {a_true}"
        )));
    }
    if channel.h_los.ncols() != pilots.n_tx() {
        return Err(ApcError::DimensionMismatch(format!(
            "channel has {} transmit columns but pilots have {} rows",
            channel.h_los.ncols(),
            pilots.n_tx()
        )));
    }
    let mut y = (channel.total() * &pilots.entries).scale(a_true.sqrt());
    if noise_var > 0.0 {
        let sigma = noise_var.sqrt();
        for e in y.iter_mut() {
            *e += complex_gaussian(rng) * sigma;
        }
    }
    Ok(MeasurementMatrix {
        entries: y,
        point: channel.point,
        snr_db,
    })
}
