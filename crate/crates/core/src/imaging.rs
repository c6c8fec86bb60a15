//! Image and mask I/O, ground-truth statistics, and error metrics.
//!
//! Coordinate convention: pixel `r * width + c` has horizontal coordinate
//! `c` and vertical coordinate `r`, both 0-indexed. Boundary lengths are
//! counted on the same 4-connected edge set the grid energy uses, so
//! ground-truth and solution statistics are comparable.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::energy::{grid_edges, Labeling};
use crate::{Error, Result};

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Clone, Debug)]
pub struct IntensityImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl IntensityImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format("empty image".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(IntensityImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_pixels(&self) -> usize {
        self.pixels.len()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

/// Row-major binary mask; `true` is foreground.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Dimension {
                expected: width * height,
                got: bits.len(),
            });
        }
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    pub fn from_labeling(labeling: &Labeling, width: usize, height: usize) -> Result<Self> {
        Mask::new(width, height, labeling.bits().to_vec())
    }

    pub fn to_labeling(&self) -> Labeling {
        Labeling::new(self.bits.clone())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

fn format_err(e: image::ImageError) -> Error {
    Error::Format(e.to_string())
}

/// Loads a grayscale image from PGM (P2/P5) or PNG, normalized to `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<IntensityImage> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => {
            let data = std::fs::read(path)?;
            parse_pgm(&data)
        }
        Some("png") => {
            let img = image::open(path).map_err(format_err)?.into_luma8();
            let (w, h) = (img.width() as usize, img.height() as usize);
            let pixels = img.pixels().map(|p| p.0[0] as f64 / 255.0).collect();
            IntensityImage::new(w, h, pixels)
        }
        other => Err(Error::Format(format!(
            "unsupported image extension {other:?} (expected pgm or png)"
        ))),
    }
}

/// Loads a binary mask: intensities above one half are foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let img = load_image(path)?;
    let bits = img.pixels().iter().map(|&v| v > 0.5).collect();
    Mask::new(img.width(), img.height(), bits)
}

/// Writes a mask as an 8-bit grayscale PNG with values 0 and 255.
pub fn save_mask_png(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let mut img = image::GrayImage::new(mask.width() as u32, mask.height() as u32);
    for (i, pixel) in img.pixels_mut().enumerate() {
        pixel.0[0] = if mask.bits[i] { 255 } else { 0 };
    }
    img.save_with_format(path.as_ref(), image::ImageFormat::Png)
        .map_err(format_err)
}

/// Writes a mask as a text grid of `0`/`1` characters, one row per line.
pub fn save_mask_text(mask: &Mask, mut out: impl Write) -> std::io::Result<()> {
    for row in 0..mask.height() {
        let line: String = (0..mask.width())
            .map(|c| if mask.get(row, c) { '1' } else { '0' })
            .collect();
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes an intensity image as binary PGM (P5) with maxval 255.
pub fn write_pgm(image: &IntensityImage, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "P5")?;
    writeln!(out, "{} {}", image.width(), image.height())?;
    writeln!(out, "255")?;
    let bytes: Vec<u8> = image
        .pixels()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    out.write_all(&bytes)
}

fn parse_pgm(data: &[u8]) -> Result<IntensityImage> {
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        // Skip whitespace and '#' comments.
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated pgm header".into()));
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "P2" && magic != "P5" {
        return Err(Error::Format(format!("bad pgm magic '{magic}'")));
    }
    let width: usize = token()?
        .parse()
        .map_err(|e| Error::Format(format!("bad pgm width: {e}")))?;
    let height: usize = token()?
        .parse()
        .map_err(|e| Error::Format(format!("bad pgm height: {e}")))?;
    let maxval: f64 = token()?
        .parse()
        .map_err(|e| Error::Format(format!("bad pgm maxval: {e}")))?;
    if !(maxval > 0.0) || maxval > 65535.0 {
        return Err(Error::Format(format!("bad pgm maxval {maxval}")));
    }
    let count = width * height;
    let mut pixels = Vec::with_capacity(count);
    if magic == "P2" {
        for _ in 0..count {
            let v: f64 = token()?
                .parse()
                .map_err(|e| Error::Format(format!("bad pgm sample: {e}")))?;
            pixels.push(v / maxval);
        }
    } else {
        // One whitespace byte separates the header from binary samples.
        pos += 1;
        let wide = maxval > 255.0;
        let need = count * if wide { 2 } else { 1 };
        if data.len() < pos + need {
            return Err(Error::Format("truncated pgm pixel data".into()));
        }
        for k in 0..count {
            let v = if wide {
                u16::from_be_bytes([data[pos + 2 * k], data[pos + 2 * k + 1]]) as f64
            } else {
                data[pos + k] as f64
            };
            pixels.push(v / maxval);
        }
    }
    IntensityImage::new(width, height, pixels)
}

/// Reads a text mask grid written by [`save_mask_text`].
pub fn load_mask_text(input: impl BufRead) -> Result<Mask> {
    let mut bits = Vec::new();
    let mut width = None;
    let mut height = 0usize;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match width {
            None => width = Some(line.len()),
            Some(w) if w != line.len() => {
                return Err(Error::Format("ragged mask rows".into()));
            }
            _ => {}
        }
        for ch in line.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(Error::Format(format!("bad mask character '{ch}'"))),
            }
        }
        height += 1;
    }
    let width = width.ok_or_else(|| Error::Format("empty mask".into()))?;
    Mask::new(width, height, bits)
}

/// 32-bin intensity histogram with add-one smoothing, reporting negative
/// log-likelihoods.
#[derive(Clone, Debug)]
pub struct HistogramModel {
    log_probs: [f64; Self::BINS],
}

impl HistogramModel {
    pub const BINS: usize = 32;

    fn bin(intensity: f64) -> usize {
        ((intensity.clamp(0.0, 1.0) * Self::BINS as f64) as usize).min(Self::BINS - 1)
    }

    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        let mut counts = [1.0f64; Self::BINS];
        let mut total = Self::BINS as f64;
        for v in samples {
            counts[Self::bin(v)] += 1.0;
            total += 1.0;
        }
        let mut log_probs = [0.0; Self::BINS];
        for (lp, c) in log_probs.iter_mut().zip(&counts) {
            *lp = (c / total).ln();
        }
        HistogramModel { log_probs }
    }

    pub fn nll(&self, intensity: f64) -> f64 {
        -self.log_probs[Self::bin(intensity)]
    }
}

/// Foreground and background histogram models estimated from a labeled mask.
pub fn estimate_models(image: &IntensityImage, mask: &Mask) -> Result<(HistogramModel, HistogramModel)> {
    if mask.bits().len() != image.num_pixels() {
        return Err(Error::Dimension {
            expected: image.num_pixels(),
            got: mask.bits().len(),
        });
    }
    let fg = HistogramModel::from_samples(
        image
            .pixels()
            .iter()
            .zip(mask.bits())
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v),
    );
    let bg = HistogramModel::from_samples(
        image
            .pixels()
            .iter()
            .zip(mask.bits())
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v),
    );
    Ok((fg, bg))
}

/// Trimap of user seeds: bright pixels (>= 0.75) are foreground seeds, dark
/// pixels (<= 0.25) background seeds, anything between is unlabeled.
#[derive(Clone, Debug)]
pub struct SeedMask {
    pub fg: Vec<bool>,
    pub bg: Vec<bool>,
}

pub fn load_seeds(path: impl AsRef<Path>) -> Result<SeedMask> {
    let img = load_image(path)?;
    Ok(SeedMask {
        fg: img.pixels().iter().map(|&v| v >= 0.75).collect(),
        bg: img.pixels().iter().map(|&v| v <= 0.25).collect(),
    })
}

/// Histogram models from seed pixels only.
pub fn estimate_models_from_seeds(
    image: &IntensityImage,
    seeds: &SeedMask,
) -> Result<(HistogramModel, HistogramModel)> {
    if seeds.fg.len() != image.num_pixels() || seeds.bg.len() != image.num_pixels() {
        return Err(Error::Dimension {
            expected: image.num_pixels(),
            got: seeds.fg.len(),
        });
    }
    if !seeds.fg.iter().any(|&b| b) || !seeds.bg.iter().any(|&b| b) {
        return Err(Error::Format(
            "seed image needs at least one foreground and one background seed".into(),
        ));
    }
    let fg = HistogramModel::from_samples(
        image
            .pixels()
            .iter()
            .zip(&seeds.fg)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v),
    );
    let bg = HistogramModel::from_samples(
        image
            .pixels()
            .iter()
            .zip(&seeds.bg)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v),
    );
    Ok((fg, bg))
}

/// Statistics of a ground-truth mask, in the units of the corresponding
/// constraints. Ratio statistics are `None` when the mask has no foreground.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundTruthStats {
    pub size: f64,
    pub boundary_length: f64,
    pub mean_h: Option<f64>,
    pub mean_v: Option<f64>,
    pub var_h: Option<f64>,
    pub var_v: Option<f64>,
    pub covariance: Option<f64>,
    /// Sizes of the default 2x2 tiling, row-major over tiles.
    pub tile_sizes: Vec<f64>,
}

/// Extracts all constraint statistics from a mask, matching the formulas the
/// constraint families use on labelings.
pub fn extract_stats(mask: &Mask) -> GroundTruthStats {
    let (w, h) = (mask.width(), mask.height());
    let size = mask.count_ones() as f64;
    let boundary_length = grid_edges(w, h)
        .into_iter()
        .filter(|&(i, j)| mask.bits()[i as usize] != mask.bits()[j as usize])
        .count() as f64;
    let mut tile_sizes = Vec::with_capacity(4);
    for tr in 0..2 {
        for tc in 0..2 {
            let weights = crate::constraints::tile_weights(w, h, 2, 2, tr, tc);
            let count: f64 = weights
                .iter()
                .zip(mask.bits())
                .filter(|(_, &m)| m)
                .map(|(w, _)| w)
                .sum();
            tile_sizes.push(count);
        }
    }
    if size == 0.0 {
        return GroundTruthStats {
            size,
            boundary_length,
            mean_h: None,
            mean_v: None,
            var_h: None,
            var_v: None,
            covariance: None,
            tile_sizes,
        };
    }
    let mut sum_h = 0.0;
    let mut sum_v = 0.0;
    for r in 0..h {
        for c in 0..w {
            if mask.get(r, c) {
                sum_h += c as f64;
                sum_v += r as f64;
            }
        }
    }
    let mean_h = sum_h / size;
    let mean_v = sum_v / size;
    let mut var_h = 0.0;
    let mut var_v = 0.0;
    let mut cov = 0.0;
    for r in 0..h {
        for c in 0..w {
            if mask.get(r, c) {
                let dh = c as f64 - mean_h;
                let dv = r as f64 - mean_v;
                var_h += dh * dh;
                var_v += dv * dv;
                cov += dh * dv;
            }
        }
    }
    GroundTruthStats {
        size,
        boundary_length,
        mean_h: Some(mean_h),
        mean_v: Some(mean_v),
        var_h: Some(var_h / size),
        var_v: Some(var_v / size),
        covariance: Some(cov / size),
        tile_sizes,
    }
}

/// Bounds `p` percent around a reference value, ordered so lower <= upper
/// even for negative references. `p = 0` yields an equality constraint.
pub fn relative_bounds(value: f64, gap_percent: f64) -> (f64, f64) {
    let a = (1.0 - gap_percent / 100.0) * value;
    let b = (1.0 + gap_percent / 100.0) * value;
    (a.min(b), a.max(b))
}

/// The evaluation metrics of one segmentation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Percentage of erroneously labeled pixels.
    pub er: f64,
    /// Percentage of constraints unsatisfied (one of two failing counts 50).
    pub er_a: f64,
    /// Mean normalized deviation of achieved statistics from their bound
    /// intervals; zero inside the gap.
    pub er_b: f64,
    /// Set when some deviation had a zero denominator and fell back to the
    /// absolute distance.
    pub degenerate_denominator: bool,
    pub runtime_s: f64,
    pub iterations: usize,
}

/// Normalized deviation of an achieved value `c` from `[a, b]`:
/// `min(|c-a|, |c-b|) / |(a+b)/2|` outside the interval, zero inside. A zero
/// denominator falls back to the absolute distance and sets the flag.
pub fn deviation(achieved: f64, lower: f64, upper: f64) -> (f64, bool) {
    let tol = 1e-9 * (1.0 + lower.abs() + upper.abs());
    if achieved >= lower - tol && achieved <= upper + tol {
        return (0.0, false);
    }
    let nearest = (achieved - lower).abs().min((achieved - upper).abs());
    let denom = (lower + upper) / 2.0;
    if denom == 0.0 {
        (nearest, true)
    } else {
        (nearest / denom.abs(), false)
    }
}

/// Computes ER against the ground truth plus the constraint-satisfaction
/// metrics from achieved statistics. Undefined statistics count as
/// unsatisfied and are excluded from the ER_b mean.
pub fn metrics(
    predicted: &Labeling,
    ground_truth: &Labeling,
    set: &ConstraintSet,
    achieved: &[Option<f64>],
    runtime_s: f64,
    iterations: usize,
) -> Result<MetricsReport> {
    if predicted.len() != ground_truth.len() {
        return Err(Error::Dimension {
            expected: ground_truth.len(),
            got: predicted.len(),
        });
    }
    if achieved.len() != set.len() {
        return Err(Error::Dimension {
            expected: set.len(),
            got: achieved.len(),
        });
    }
    let n = predicted.len().max(1);
    let er = 100.0 * predicted.hamming(ground_truth) as f64 / n as f64;
    let mut unsatisfied = 0usize;
    let mut dev_sum = 0.0;
    let mut dev_count = 0usize;
    let mut degenerate = false;
    for (c, stat) in set.iter().zip(achieved) {
        let (lo, hi) = c.bounds();
        match stat {
            Some(h) => {
                let (d, flagged) = deviation(*h, lo, hi);
                degenerate |= flagged;
                if d > 0.0 {
                    unsatisfied += 1;
                }
                dev_sum += d;
                dev_count += 1;
            }
            None => {
                unsatisfied += 1;
            }
        }
    }
    let m = set.len();
    let er_a = if m == 0 {
        0.0
    } else {
        100.0 * unsatisfied as f64 / m as f64
    };
    let er_b = if dev_count == 0 {
        0.0
    } else {
        dev_sum / dev_count as f64
    };
    Ok(MetricsReport {
        er,
        er_a,
        er_b,
        degenerate_denominator: degenerate,
        runtime_s,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Constraint;
    use crate::energy::PairwiseEnergy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pgm_ascii_and_binary_agree() {
        let ascii = b"P2\n# comment\n2 2\n255\n0 255\n0 255\n";
        let img = parse_pgm(ascii).unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0, 0.0, 1.0]);

        let mut binary = b"P5\n2 2\n255\n".to_vec();
        binary.extend_from_slice(&[0, 255, 0, 255]);
        let img2 = parse_pgm(&binary).unwrap();
        assert_eq!(img2.pixels(), img.pixels());
    }

    #[test]
    fn pgm_respects_maxval() {
        let ascii = b"P2\n1 2\n100\n50 100\n";
        let img = parse_pgm(ascii).unwrap();
        assert_eq!(img.pixels(), &[0.5, 1.0]);
    }

    #[test]
    fn corrupt_pgm_header_rejected() {
        assert!(parse_pgm(b"P7\n2 2\n255\n").is_err());
        assert!(parse_pgm(b"P5\n2\n").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\nab").is_err());
    }

    #[test]
    fn png_mask_round_trip() {
        let dir = std::env::temp_dir().join(format!("dualcut_png_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mask.png");
        let mask = Mask::new(3, 2, vec![true, false, true, false, true, false]).unwrap();
        save_mask_png(&mask, &path).unwrap();
        let back = load_mask(&path).unwrap();
        assert_eq!(back, mask);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn text_mask_round_trip() {
        let mask = Mask::new(4, 2, vec![true, false, false, true, false, true, true, false])
            .unwrap();
        let mut buf = Vec::new();
        save_mask_text(&mask, &mut buf).unwrap();
        let back = load_mask_text(buf.as_slice()).unwrap();
        assert_eq!(back, mask);
    }

    #[test]
    fn full_mask_stats() {
        let mask = Mask::new(3, 3, vec![true; 9]).unwrap();
        let stats = extract_stats(&mask);
        assert_eq!(stats.size, 9.0);
        assert_eq!(stats.boundary_length, 0.0);
        assert_eq!(stats.mean_h, Some(1.0));
        assert_eq!(stats.mean_v, Some(1.0));
    }

    #[test]
    fn single_centered_pixel_stats() {
        let mut bits = vec![false; 9];
        bits[4] = true;
        let mask = Mask::new(3, 3, bits).unwrap();
        let stats = extract_stats(&mask);
        assert_eq!(stats.mean_h, Some(1.0));
        assert_eq!(stats.mean_v, Some(1.0));
        assert_eq!(stats.var_h, Some(0.0));
        assert_eq!(stats.var_v, Some(0.0));
        assert_eq!(stats.covariance, Some(0.0));
        assert_eq!(stats.boundary_length, 4.0);
    }

    #[test]
    fn stats_match_constraint_statistics_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let (w, h) = (4usize, 3usize);
            let bits: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.5)).collect();
            let mask = Mask::new(w, h, bits).unwrap();
            let stats = extract_stats(&mask);
            let x = mask.to_labeling();
            let edges = grid_edges(w, h).into_iter().map(|(i, j)| (i, j, 1.0)).collect();
            let energy = PairwiseEnergy::new(vec![(0.0, 0.0); w * h], edges).unwrap();

            let sz = Constraint::size(w * h, 0.0, 100.0).unwrap();
            assert_eq!(sz.statistic(&x, &energy).unwrap(), stats.size);
            let br = Constraint::boundary_length(0.0, 100.0).unwrap();
            assert_eq!(br.statistic(&x, &energy).unwrap(), stats.boundary_length);

            if stats.size > 0.0 {
                let cols: Vec<f64> = (0..w * h).map(|i| (i % w) as f64).collect();
                let mn_h = Constraint::ratio("mn_h", cols, 0.0, w as f64).unwrap();
                let got = mn_h.statistic(&x, &energy).unwrap();
                assert!((got - stats.mean_h.unwrap()).abs() <= 1e-9 * (1.0 + got.abs()));

                let mu_h = stats.mean_h.unwrap();
                let sq: Vec<f64> = (0..w * h).map(|i| ((i % w) as f64 - mu_h).powi(2)).collect();
                let vr_h = Constraint::ratio("vr_h", sq, 0.0, 1e9).unwrap();
                let got = vr_h.statistic(&x, &energy).unwrap();
                assert!((got - stats.var_h.unwrap()).abs() <= 1e-9 * (1.0 + got.abs()));

                let mu_v = stats.mean_v.unwrap();
                let cross: Vec<f64> = (0..w * h)
                    .map(|i| ((i % w) as f64 - mu_h) * ((i / w) as f64 - mu_v))
                    .collect();
                let cv = Constraint::ratio("cv", cross, -1e9, 1e9).unwrap();
                let got = cv.statistic(&x, &energy).unwrap();
                assert!((got - stats.covariance.unwrap()).abs() <= 1e-9 * (1.0 + got.abs()));
            }
        }
    }

    #[test]
    fn relative_bounds_examples() {
        assert_eq!(relative_bounds(100.0, 10.0), (90.0, 110.0));
        let (lo, hi) = relative_bounds(7.0, 0.0);
        assert_eq!((lo, hi), (7.0, 7.0));
        assert_eq!(relative_bounds(0.0, 25.0), (0.0, 0.0));
        // Negative reference values keep the interval ordered.
        let (lo, hi) = relative_bounds(-10.0, 10.0);
        assert!(lo < hi);
        assert_eq!((lo, hi), (-11.0, -9.0));
    }

    #[test]
    fn deviation_formula_cases() {
        let (d, flag) = deviation(121.0, 90.0, 110.0);
        assert!((d - 0.11).abs() < 1e-12);
        assert!(!flag);
        assert_eq!(deviation(100.0, 90.0, 110.0), (0.0, false));
        let (d, flag) = deviation(3.0, -1.0, 1.0);
        assert_eq!(d, 2.0);
        assert!(flag);
    }

    #[test]
    fn metrics_on_perfect_prediction() {
        let gt = Labeling::new(vec![true, false, true, true]);
        let set = ConstraintSet::new(vec![Constraint::size(4, 2.0, 4.0).unwrap()]).unwrap();
        let report = metrics(&gt, &gt, &set, &[Some(3.0)], 0.1, 3).unwrap();
        assert_eq!(report.er, 0.0);
        assert_eq!(report.er_a, 0.0);
        assert_eq!(report.er_b, 0.0);
    }

    #[test]
    fn metrics_fractional_constraint_count() {
        let gt = Labeling::new(vec![true, false]);
        let pred = Labeling::new(vec![true, true]);
        let set = ConstraintSet::new(vec![
            Constraint::size(2, 0.0, 1.0).unwrap(),
            Constraint::boundary_length(0.0, 2.0).unwrap(),
        ])
        .unwrap();
        // One of two constraints violated -> 50.
        let report = metrics(&pred, &gt, &set, &[Some(2.0), Some(1.0)], 0.0, 1).unwrap();
        assert_eq!(report.er_a, 50.0);
        assert_eq!(report.er, 50.0);
    }

    #[test]
    fn metrics_er_symmetry() {
        let a = Labeling::new(vec![true, false, true]);
        let b = Labeling::new(vec![false, false, true]);
        let set = ConstraintSet::empty();
        let ab = metrics(&a, &b, &set, &[], 0.0, 0).unwrap();
        let ba = metrics(&b, &a, &set, &[], 0.0, 0).unwrap();
        assert_eq!(ab.er, ba.er);
    }

    #[test]
    fn histogram_model_prefers_its_samples() {
        let fg = HistogramModel::from_samples((0..100).map(|_| 0.8));
        let bg = HistogramModel::from_samples((0..100).map(|_| 0.2));
        assert!(fg.nll(0.8) < fg.nll(0.2));
        assert!(bg.nll(0.2) < bg.nll(0.8));
    }
}
