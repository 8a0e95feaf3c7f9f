use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArtifactKind {
    /// Additive quantization-like noise at a controlled noise-to-mask ratio.
    QN,
    /// Band-wise spectral holes at a controlled probability.
    SH,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quality {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
}

impl Quality {
    pub const ALL: [Quality; 5] = [
        Quality::Q1,
        Quality::Q2,
        Quality::Q3,
        Quality::Q4,
        Quality::Q5,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StereoMode {
    /// Left and right processed independently.
    LR,
    /// Processed as mid and side, then matrixed back.
    MS,
}

impl StereoMode {
    pub const ALL: [StereoMode; 2] = [StereoMode::LR, StereoMode::MS];
}

const QN_NMR_DB: [f64; 5] = [0.0, 6.0, 12.0, 18.0, 24.0];
const SH_HOLE_PROB: [f64; 5] = [0.70, 0.50, 0.30, 0.20, 0.10];

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 2] = [ArtifactKind::QN, ArtifactKind::SH];

    /// NMR in dB for QN, hole probability for SH.
    pub fn parameter(self, quality: Quality) -> f64 {
        match self {
            ArtifactKind::QN => QN_NMR_DB[quality.index()],
            ArtifactKind::SH => SH_HOLE_PROB[quality.index()],
        }
    }

    /// Integer shown in labels and file names: dB for QN, percent for SH.
    pub fn label_value(self, quality: Quality) -> i64 {
        match self {
            ArtifactKind::QN => self.parameter(quality).round() as i64,
            ArtifactKind::SH => (self.parameter(quality) * 100.0).round() as i64,
        }
    }

    /// Condition label such as `SH30`.
    pub fn tag(self, quality: Quality) -> String {
        format!("{self}{}", self.label_value(quality))
    }
}

/// One monaural impairment setting. The parameter is fixed by kind and
/// quality level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArtifactSpec {
    pub kind: ArtifactKind,
    pub quality: Quality,
    pub seed: u64,
}

impl ArtifactSpec {
    pub fn new(kind: ArtifactKind, quality: Quality, seed: u64) -> Self {
        Self {
            kind,
            quality,
            seed,
        }
    }

    pub fn parameter(&self) -> f64 {
        self.kind.parameter(self.quality)
    }
}

/// Reproducible sub-seed bound to a role name (channel, condition, ...).
pub fn derive_seed(master: u64, role: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"stereoqual/seed/v1");
    hasher.update(master.to_le_bytes());
    hasher.update(role.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

macro_rules! display_fromstr {
    ($ty:ty, $($variant:ident),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = match self { $(<$ty>::$variant => stringify!($variant)),+ };
                f.write_str(s)
            }
        }

        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self, Error> {
                match s {
                    $(stringify!($variant) => Ok(<$ty>::$variant),)+
                    other => Err(Error::InvalidParameter(format!(
                        "`{other}` is not a valid {}", stringify!($ty)
                    ))),
                }
            }
        }
    };
}

display_fromstr!(ArtifactKind, QN, SH);
display_fromstr!(Quality, Q1, Q2, Q3, Q4, Q5);
display_fromstr!(StereoMode, LR, MS);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_table() {
        let qn: Vec<f64> = Quality::ALL
            .iter()
            .map(|&q| ArtifactKind::QN.parameter(q))
            .collect();
        let sh: Vec<f64> = Quality::ALL
            .iter()
            .map(|&q| ArtifactKind::SH.parameter(q))
            .collect();
        assert_eq!(qn, [0.0, 6.0, 12.0, 18.0, 24.0]);
        assert_eq!(sh, [0.70, 0.50, 0.30, 0.20, 0.10]);
        assert_eq!(ArtifactKind::SH.tag(Quality::Q3), "SH30");
        assert_eq!(ArtifactKind::QN.tag(Quality::Q2), "QN6");
    }

    #[test]
    fn parse_and_display_agree() {
        for q in Quality::ALL {
            assert_eq!(q.to_string().parse::<Quality>().unwrap(), q);
        }
        assert!("Q6".parse::<Quality>().is_err());
        assert_eq!("MS".parse::<StereoMode>().unwrap(), StereoMode::MS);
    }

    #[test]
    fn sub_seeds_differ_by_role_and_master() {
        let a = derive_seed(1, "L");
        assert_eq!(a, derive_seed(1, "L"));
        assert_ne!(a, derive_seed(1, "R"));
        assert_ne!(a, derive_seed(2, "L"));
    }
}
