use serde::{Deserialize, Serialize};

const BIN_DEG: f64 = 2.0;
const HIST_BINS: usize = 180;
const ROSE_BINS: usize = 24;

/// Wraps an angle in degrees to `(-180, 180]`.
pub fn wrap_deg(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 {
        180.0
    } else {
        w
    }
}

pub fn circular_mean_deg(errors_deg: &[f64]) -> Option<f64> {
    let (s, c) = errors_deg.iter().fold((0.0, 0.0), |(s, c), e| {
        let r = e.to_radians();
        (s + r.sin(), c + r.cos())
    });
    if errors_deg.is_empty() || (s * s + c * c).sqrt() < 1e-12 * errors_deg.len() as f64 {
        return None;
    }
    Some(s.atan2(c).to_degrees())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub circular_mean_deg: f64,
    /// Median of the errors unwrapped around the circular mean.
    pub median_deg: f64,
    pub iqr_deg: f64,
    /// Full width at half maximum of the smoothed 2° histogram; `None`
    /// when the histogram has no clear peak.
    pub fwhm_deg: Option<f64>,
    /// 2° histogram; bin `k` is centered on `-180 + 2k` degrees.
    pub histogram: Vec<u32>,
    /// 15° rose histogram; bin `k` is centered on `-180 + 15k` degrees.
    pub rose: Vec<u32>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let t = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + t * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Bins are centered on multiples of `width`, so an exact zero error sits
/// in the middle of a bin rather than on an edge.
fn bin_of(e: f64, width: f64, bins: usize) -> usize {
    (((wrap_deg(e) + 180.0 + width / 2.0) / width).floor() as usize) % bins
}

/// Summary statistics of phase errors given in degrees.
pub fn error_stats(errors_deg: &[f64]) -> Option<ErrorStats> {
    if errors_deg.is_empty() {
        return None;
    }
    let mean = circular_mean_deg(errors_deg).unwrap_or(0.0);
    let mut rel: Vec<f64> = errors_deg.iter().map(|e| wrap_deg(e - mean)).collect();
    rel.sort_by(f64::total_cmp);
    let median = wrap_deg(mean + quantile(&rel, 0.5));
    let iqr = quantile(&rel, 0.75) - quantile(&rel, 0.25);

    let mut histogram = vec![0u32; HIST_BINS];
    let mut rose = vec![0u32; ROSE_BINS];
    for &e in errors_deg {
        histogram[bin_of(e, BIN_DEG, HIST_BINS)] += 1;
        rose[bin_of(e, 360.0 / ROSE_BINS as f64, ROSE_BINS)] += 1;
    }

    Some(ErrorStats {
        count: errors_deg.len(),
        circular_mean_deg: mean,
        median_deg: median,
        iqr_deg: iqr,
        fwhm_deg: fwhm(&histogram),
        histogram,
        rose,
    })
}

fn fwhm(hist: &[u32]) -> Option<f64> {
    let n = hist.len();
    let smooth: Vec<f64> = (0..n)
        .map(|k| {
            (hist[(k + n - 1) % n] as f64 + 2.0 * hist[k] as f64 + hist[(k + 1) % n] as f64) / 4.0
        })
        .collect();
    let (peak_at, &peak) = smooth
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
    let mut sorted = smooth.clone();
    sorted.sort_by(f64::total_cmp);
    let median = quantile(&sorted, 0.5);
    if peak <= 0.0 || peak <= 2.0 * median {
        return None;
    }
    let half = peak / 2.0;
    let mut width = 1;
    let mut k = peak_at;
    while width < n && smooth[(k + 1) % n] > half {
        k = (k + 1) % n;
        width += 1;
    }
    k = peak_at;
    while width < n && smooth[(k + n - 1) % n] > half {
        k = (k + n - 1) % n;
        width += 1;
    }
    Some(width as f64 * BIN_DEG)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBinStats {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub count: usize,
    pub median_deg: f64,
    pub iqr_deg: f64,
}

/// Phase-error statistics grouped by instantaneous frequency. Bins with no
/// samples are omitted.
pub fn error_vs_frequency(
    errors_deg: &[f64],
    inst_freq_hz: &[f64],
    edges_hz: &[f64],
) -> Vec<FrequencyBinStats> {
    edges_hz
        .windows(2)
        .filter_map(|w| {
            let sel: Vec<f64> = errors_deg
                .iter()
                .zip(inst_freq_hz)
                .filter(|(_, &f)| f >= w[0] && f < w[1])
                .map(|(&e, _)| e)
                .collect();
            let s = error_stats(&sel)?;
            Some(FrequencyBinStats {
                lo_hz: w[0],
                hi_hz: w[1],
                count: s.count,
                median_deg: s.median_deg,
                iqr_deg: s.iqr_deg,
            })
        })
        .collect()
}
