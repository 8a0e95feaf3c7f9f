//! Simultaneous-masking threshold in the style of MPEG-1 psychoacoustic
//! model 1, without tonality estimation.
//!
//! Energies are per band and frame, in mean-square units: a full-scale
//! sine contributes 0.5 and white noise of variance `s2` totals `s2` over
//! all bands.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::CriticalBandPartition;
use crate::audio::{Spectrogram, StftConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskingModel {
    /// Level a full-scale sine is taken to play at, for placing the
    /// threshold in quiet.
    pub full_scale_spl_db: f64,
    /// Masker-to-threshold distance applied after spreading.
    pub offset_db: f64,
    /// Spreading slope towards lower frequencies (dB per Bark).
    pub lower_slope_db_per_bark: f64,
    /// Spreading slope towards higher frequencies (dB per Bark).
    pub upper_slope_db_per_bark: f64,
    /// The threshold in quiet is capped at this SPL.
    pub quiet_ceiling_db: f64,
    /// Frames below this level (dBFS) are treated as inactive.
    pub activity_gate_dbfs: f64,
    /// Reported NMR for cells without noise.
    pub nmr_floor_db: f64,
}

impl Default for MaskingModel {
    fn default() -> Self {
        Self {
            full_scale_spl_db: 96.0,
            offset_db: 15.5,
            lower_slope_db_per_bark: 25.0,
            upper_slope_db_per_bark: 10.0,
            quiet_ceiling_db: 60.0,
            activity_gate_dbfs: -70.0,
            nmr_floor_db: -120.0,
        }
    }
}

/// Threshold in quiet in dB SPL (Terhardt's approximation).
pub fn threshold_in_quiet_db(freq_hz: f64) -> f64 {
    let khz = freq_hz.max(20.0) / 1000.0;
    3.64 * khz.powf(-0.8) - 6.5 * (-0.6 * (khz - 3.3).powi(2)).exp() + 1e-3 * khz.powi(4)
}

impl MaskingModel {
    /// Spreading gain (linear power) from a masker at `from` Bark to a
    /// maskee at `to` Bark.
    pub fn spreading(&self, from: f64, to: f64) -> f64 {
        let dz = to - from;
        let db = if dz < 0.0 {
            self.lower_slope_db_per_bark * dz
        } else {
            -self.upper_slope_db_per_bark * dz
        };
        10f64.powf(db / 10.0)
    }

    pub fn spl_to_energy(&self, spl_db: f64) -> f64 {
        0.5 * 10f64.powf((spl_db - self.full_scale_spl_db) / 10.0)
    }

    /// Per-band energy floor: the quietest point of the threshold in quiet
    /// inside each band, capped at `quiet_ceiling_db`.
    pub fn quiet_floor(&self, partition: &CriticalBandPartition) -> Vec<f64> {
        (0..partition.num_bands())
            .map(|b| {
                let db = partition
                    .bins(b)
                    .map(|k| threshold_in_quiet_db(partition.bin_frequency(k)))
                    .fold(f64::INFINITY, f64::min)
                    .min(self.quiet_ceiling_db);
                self.spl_to_energy(db)
            })
            .collect()
    }

    pub fn frame_is_active(&self, band_energy: &[f64]) -> bool {
        frame_level_dbfs(band_energy) >= self.activity_gate_dbfs
    }
}

/// Total frame level relative to a full-scale sine.
pub fn frame_level_dbfs(band_energy: &[f64]) -> f64 {
    10.0 * (2.0 * band_energy.iter().sum::<f64>()).log10()
}

/// Mean-square energy of each band in each frame.
pub fn band_energies(
    spec: &Spectrogram,
    partition: &CriticalBandPartition,
) -> Result<Vec<Vec<f64>>> {
    check_partition(spec, partition)?;
    let n = spec.config.fft_size;
    let norm = energy_normalisation(&spec.config);
    Ok(spec
        .frames
        .iter()
        .map(|frame| {
            (0..partition.num_bands())
                .map(|b| {
                    partition
                        .bins(b)
                        .map(|k| {
                            let weight = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
                            weight * frame[k].norm_sqr()
                        })
                        .sum::<f64>()
                        * norm
                })
                .collect()
        })
        .collect())
}

/// Factor turning one-sided `|X_k|^2` sums into mean-square energy.
pub fn energy_normalisation(config: &StftConfig) -> f64 {
    let w2: f64 = config
        .window
        .coefficients(config.fft_size)
        .iter()
        .map(|w| w * w)
        .sum();
    1.0 / (config.fft_size as f64 * w2)
}

pub(crate) fn check_partition(spec: &Spectrogram, partition: &CriticalBandPartition) -> Result<()> {
    if spec.config.fft_size != partition.fft_size() || spec.sample_rate != partition.sample_rate() {
        return Err(Error::Geometry(format!(
            "partition built for {} bins @ {} Hz, spectrogram has {} @ {} Hz",
            partition.fft_size(),
            partition.sample_rate(),
            spec.config.fft_size,
            spec.sample_rate
        )));
    }
    Ok(())
}

/// Masked threshold and band energy per frame and band.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskingThreshold {
    pub thresholds: Vec<Vec<f64>>,
    pub band_energy: Vec<Vec<f64>>,
    pub band_edges: Vec<f64>,
    pub config: StftConfig,
    pub sample_rate: u32,
}

impl MaskingThreshold {
    pub fn num_frames(&self) -> usize {
        self.thresholds.len()
    }

    pub fn num_bands(&self) -> usize {
        self.band_edges.len() - 1
    }

    /// Writes the thresholds as a text matrix: `#` header lines, then one
    /// line per frame with one dBFS value per band separated by spaces.
    pub fn write_matrix<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# masked threshold, dBFS, {} frames x {} bands",
            self.num_frames(),
            self.num_bands()
        )?;
        writeln!(
            out,
            "# fft_size {} hop_size {} sample_rate {}",
            self.config.fft_size, self.config.hop_size, self.sample_rate
        )?;
        let edges: Vec<String> = self.band_edges.iter().map(|e| format!("{e}")).collect();
        writeln!(out, "# band_edges_hz {}", edges.join(" "))?;
        for frame in &self.thresholds {
            let row: Vec<String> = frame
                .iter()
                .map(|t| format!("{:.3}", 10.0 * (2.0 * t).log10()))
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Spreads band energies across the Bark axis, applies the masking offset
/// and takes the maximum with the threshold in quiet.
pub fn masking_threshold(
    spec: &Spectrogram,
    partition: &CriticalBandPartition,
    model: &MaskingModel,
) -> Result<MaskingThreshold> {
    let band_energy = band_energies(spec, partition)?;
    let centers = partition.band_centers_bark();
    let bands = centers.len();
    let spread: Vec<Vec<f64>> = (0..bands)
        .map(|i| {
            (0..bands)
                .map(|j| model.spreading(centers[i], centers[j]))
                .collect()
        })
        .collect();
    let floor = model.quiet_floor(partition);
    let offset = 10f64.powf(-model.offset_db / 10.0);
    let thresholds = band_energy
        .iter()
        .map(|energy| {
            (0..bands)
                .map(|j| {
                    let spread_energy: f64 = (0..bands).map(|i| energy[i] * spread[i][j]).sum();
                    (spread_energy * offset).max(floor[j])
                })
                .collect()
        })
        .collect();
    Ok(MaskingThreshold {
        thresholds,
        band_energy,
        band_edges: partition.band_edges().to_vec(),
        config: spec.config,
        sample_rate: spec.sample_rate,
    })
}
