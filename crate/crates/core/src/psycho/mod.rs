//! Masking threshold estimation and noise-to-mask ratio measurement.

mod masking;
mod nmr;
mod partition;

pub use masking::{
    band_energies, energy_normalisation, frame_level_dbfs, masking_threshold,
    threshold_in_quiet_db, MaskingModel, MaskingThreshold,
};
pub(crate) use nmr::nmr_from_energies;
pub use nmr::{measure_nmr, NmrReport};
pub use partition::{hz_to_bark, CriticalBandPartition, BARK_EDGES_HZ};
