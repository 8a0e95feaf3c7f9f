use crate::audio::StftConfig;

/// Zwicker critical-band edges in Hz below 15.5 kHz; the last band runs to
/// Nyquist.
pub const BARK_EDGES_HZ: [f64; 25] = [
    0.0, 100.0, 200.0, 300.0, 400.0, 510.0, 630.0, 770.0, 920.0, 1080.0, 1270.0, 1480.0, 1720.0,
    2000.0, 2320.0, 2700.0, 3150.0, 3700.0, 4400.0, 5300.0, 6400.0, 7700.0, 9500.0, 12000.0,
    15500.0,
];

/// Hz to Bark (Zwicker & Terhardt).
pub fn hz_to_bark(f: f64) -> f64 {
    13.0 * (0.00076 * f).atan() + 3.5 * (f / 7500.0).powi(2).atan()
}

/// Contiguous Bark-like bands covering `[0, Nyquist]` for one FFT geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalBandPartition {
    band_edges: Vec<f64>,
    bin_to_band: Vec<usize>,
    band_bins: Vec<std::ops::Range<usize>>,
    fft_size: usize,
    sample_rate: u32,
}

impl CriticalBandPartition {
    pub fn new(fft_size: usize, sample_rate: u32) -> Self {
        let nyquist = sample_rate as f64 / 2.0;
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let num_bins = fft_size / 2 + 1;
        let mut edges: Vec<f64> = BARK_EDGES_HZ
            .iter()
            .copied()
            .filter(|&e| e < nyquist)
            .collect();
        edges.push(nyquist);

        // Assign bins, then drop interior edges that would leave a band empty.
        let band_of = |edges: &[f64], f: f64| -> usize {
            let interior = edges.len() - 2;
            edges[1..=interior].iter().take_while(|&&e| e <= f).count()
        };
        loop {
            let mut counts = vec![0usize; edges.len() - 1];
            for k in 0..num_bins {
                counts[band_of(&edges, k as f64 * bin_hz)] += 1;
            }
            match counts.iter().position(|&c| c == 0) {
                // Merge the empty band into its lower neighbour.
                Some(b) if b > 0 => {
                    edges.remove(b);
                }
                Some(_) => {
                    edges.remove(1);
                }
                None => break,
            }
        }
        let bin_to_band: Vec<usize> = (0..num_bins)
            .map(|k| band_of(&edges, k as f64 * bin_hz))
            .collect();
        let mut band_bins = Vec::with_capacity(edges.len() - 1);
        let mut start = 0;
        for b in 0..edges.len() - 1 {
            let end = start + bin_to_band[start..].iter().take_while(|&&x| x == b).count();
            band_bins.push(start..end);
            start = end;
        }
        Self {
            band_edges: edges,
            bin_to_band,
            band_bins,
            fft_size,
            sample_rate,
        }
    }

    pub fn for_config(config: &StftConfig, sample_rate: u32) -> Self {
        Self::new(config.fft_size, sample_rate)
    }

    pub fn num_bands(&self) -> usize {
        self.band_bins.len()
    }

    pub fn band_edges(&self) -> &[f64] {
        &self.band_edges
    }

    pub fn bin_to_band(&self) -> &[usize] {
        &self.bin_to_band
    }

    /// Bin index range of band `b`.
    pub fn bins(&self, b: usize) -> std::ops::Range<usize> {
        self.band_bins[b].clone()
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate as f64 / self.fft_size as f64
    }

    /// Bark value at the middle of each band.
    pub fn band_centers_bark(&self) -> Vec<f64> {
        self.band_edges
            .windows(2)
            .map(|w| hz_to_bark(0.5 * (w[0] + w[1])))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_has_25_bands() {
        let p = CriticalBandPartition::new(2048, 48_000);
        assert_eq!(p.num_bands(), 25);
        assert_eq!(p.band_edges().first(), Some(&0.0));
        assert_eq!(p.band_edges().last(), Some(&24_000.0));
    }

    #[test]
    fn bands_are_contiguous_and_nonempty() {
        for (n, sr) in [
            (2048, 48_000),
            (256, 48_000),
            (64, 16_000),
            (4096, 44_100),
            (32, 48_000),
        ] {
            let p = CriticalBandPartition::new(n, sr);
            let mut next = 0;
            for b in 0..p.num_bands() {
                let r = p.bins(b);
                assert_eq!(r.start, next, "{n}@{sr} band {b}");
                assert!(!r.is_empty(), "{n}@{sr} band {b} empty");
                next = r.end;
            }
            assert_eq!(next, n / 2 + 1);
            assert!(p
                .bin_to_band()
                .windows(2)
                .all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        }
    }

    #[test]
    fn bark_scale_anchor_points() {
        assert!(hz_to_bark(0.0).abs() < 1e-12);
        assert!((hz_to_bark(1000.0) - 8.5).abs() < 0.1);
        assert!(hz_to_bark(15_500.0) > 23.0);
    }
}
