use super::masking::{band_energies, masking_threshold, MaskingModel, MaskingThreshold};
use super::CriticalBandPartition;
use crate::audio::Spectrogram;
use crate::error::Result;

/// Noise-to-mask ratios of a degraded signal against its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct NmrReport {
    /// dB per frame and band; cells without noise hold the model's floor.
    pub cells_db: Vec<Vec<f64>>,
    /// Frames whose reference level passes the activity gate.
    pub active: Vec<bool>,
    /// Reference band energy used as the averaging weight.
    pub weights: Vec<Vec<f64>>,
}

impl NmrReport {
    /// Reference-energy weighted mean over active frames, or `None` when no
    /// frame is active.
    pub fn mean_db(&self) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((cells, weights), &active) in self.cells_db.iter().zip(&self.weights).zip(&self.active)
        {
            if !active {
                continue;
            }
            for (nmr, w) in cells.iter().zip(weights) {
                num += nmr * w;
                den += w;
            }
        }
        (den > 0.0).then(|| num / den)
    }

    pub fn active_frames(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Measures `10 log10(noise / threshold)` per cell, where the noise is the
/// bin-wise difference `degraded - reference` and the threshold comes from
/// the reference.
pub fn measure_nmr(
    reference: &Spectrogram,
    degraded: &Spectrogram,
    partition: &CriticalBandPartition,
    model: &MaskingModel,
) -> Result<NmrReport> {
    reference.check_geometry(degraded)?;
    let threshold = masking_threshold(reference, partition, model)?;
    let mut noise = degraded.clone();
    for (nf, rf) in noise.frames.iter_mut().zip(&reference.frames) {
        for (n, r) in nf.iter_mut().zip(rf) {
            *n -= r;
        }
    }
    let noise_energy = band_energies(&noise, partition)?;
    Ok(nmr_from_energies(&threshold, &noise_energy, model))
}

pub(crate) fn nmr_from_energies(
    threshold: &MaskingThreshold,
    noise_energy: &[Vec<f64>],
    model: &MaskingModel,
) -> NmrReport {
    let cells_db = threshold
        .thresholds
        .iter()
        .zip(noise_energy)
        .map(|(t, n)| {
            t.iter()
                .zip(n)
                .map(|(&t, &n)| {
                    if n > 0.0 {
                        (10.0 * (n / t).log10()).max(model.nmr_floor_db)
                    } else {
                        model.nmr_floor_db
                    }
                })
                .collect()
        })
        .collect();
    let active = threshold
        .band_energy
        .iter()
        .map(|e| model.frame_is_active(e))
        .collect();
    NmrReport {
        cells_db,
        active,
        weights: threshold.band_energy.clone(),
    }
}
