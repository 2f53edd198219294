//! The benchmark harness: per-pair, per-metric scoring, synthetic
//! datasets with known homographies, and score CSV I/O.

use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    brief_describe, fast_detect, load_descriptor_file, DescriptorSet, DEFAULT_FAST_THRESHOLD,
    DEFAULT_TARGET_KEYPOINTS,
};
use crate::homography::{dlt_homography, ransac_homography, Homography, PointCorrespondence, RansacParams};
use crate::imaging::{
    load_pgm, residual_images, save_pgm, score_residual, warp_perspective, GrayImage,
    DEFAULT_MIN_OVERLAP_FRACTION,
};
use crate::matcher::brute_force_match;
use crate::metrics::MetricId;
use crate::rng::{fnv1a, mix_seed, SplitMix64};

/// One row of the pair list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub pair_id: String,
    pub image1: PathBuf,
    pub image2: PathBuf,
    #[serde(default)]
    pub truth_h: Option<PathBuf>,
    #[serde(default)]
    pub desc_a: Option<PathBuf>,
    #[serde(default)]
    pub desc_b: Option<PathBuf>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Reads a pair list CSV. Relative paths are taken relative to the list's
/// own directory.
pub fn read_pair_list(path: impl AsRef<Path>) -> Result<Vec<PairEntry>> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut pairs = Vec::new();
    for row in reader.deserialize::<PairEntry>() {
        let mut p = row?;
        p.image1 = resolve(&base, &p.image1);
        p.image2 = resolve(&base, &p.image2);
        p.truth_h = p.truth_h.filter(|t| !t.as_os_str().is_empty()).map(|t| resolve(&base, &t));
        p.desc_a = p.desc_a.filter(|t| !t.as_os_str().is_empty()).map(|t| resolve(&base, &t));
        p.desc_b = p.desc_b.filter(|t| !t.as_os_str().is_empty()).map(|t| resolve(&base, &t));
        pairs.push(p);
    }
    Ok(pairs)
}

pub fn write_pair_list(path: impl AsRef<Path>, pairs: &[PairEntry]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for p in pairs {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuiltinExtractor {
    pub n_bits: usize,
    pub pattern_seed: u64,
    pub fast_threshold: u8,
    pub target_n: usize,
}

impl Default for BuiltinExtractor {
    fn default() -> Self {
        Self {
            n_bits: 256,
            pattern_seed: 0,
            fast_threshold: DEFAULT_FAST_THRESHOLD,
            target_n: DEFAULT_TARGET_KEYPOINTS,
        }
    }
}

impl BuiltinExtractor {
    pub fn name(&self) -> String {
        format!("brief{}", self.n_bits)
    }

    pub fn extract(&self, img: &GrayImage) -> Result<DescriptorSet> {
        let kps = fast_detect(img, self.fast_threshold, self.target_n)?;
        Ok(brief_describe(img, &kps, self.n_bits, self.pattern_seed)?.set)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DescriptorSource {
    Builtin(BuiltinExtractor),
    /// Per-pair BDSC files named in the pair list's `desc_a`/`desc_b`.
    Files,
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub pairs: Vec<PairEntry>,
    pub source: DescriptorSource,
    pub metrics: Vec<MetricId>,
    /// `seed` is ignored; each pair gets a seed derived from `master_seed`.
    pub ransac: RansacParams,
    pub nonzero_threshold: u8,
    pub min_overlap_fraction: f64,
    pub cross_check: bool,
    pub master_seed: u64,
    /// Where to write d1/d2/d3 debug images, if anywhere.
    pub dump_dir: Option<PathBuf>,
}

impl BenchmarkConfig {
    pub fn new(pairs: Vec<PairEntry>, source: DescriptorSource) -> Self {
        Self {
            pairs,
            source,
            metrics: MetricId::ALL.to_vec(),
            ransac: RansacParams::default(),
            nonzero_threshold: 0,
            min_overlap_fraction: DEFAULT_MIN_OVERLAP_FRACTION,
            cross_check: false,
            master_seed: 0,
            dump_dir: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::Parameter("pair list is empty".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Parameter("no metrics selected".into()));
        }
        for (i, m) in self.metrics.iter().enumerate() {
            if self.metrics[..i].contains(m) {
                return Err(Error::Parameter(format!("metric {m} listed twice")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    RansacFailed,
    DegenerateOverlap,
    /// Images or descriptor files could not be loaded or were inconsistent.
    InputError,
}

/// One benchmark sample. Field order is the score CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub pair_id: String,
    pub descriptor_name: String,
    pub metric: MetricId,
    pub match_count: Option<usize>,
    pub inlier_count: Option<usize>,
    pub nonzero_count: Option<usize>,
    pub raw_sum: Option<u64>,
    pub overlap_pixels: Option<usize>,
    pub log_score: Option<f64>,
    pub status: Status,
}

impl ScoreRecord {
    fn failed(pair_id: &str, descriptor_name: &str, metric: MetricId, status: Status) -> Self {
        Self {
            pair_id: pair_id.to_owned(),
            descriptor_name: descriptor_name.to_owned(),
            metric,
            match_count: None,
            inlier_count: None,
            nonzero_count: None,
            raw_sum: None,
            overlap_pixels: None,
            log_score: None,
            status,
        }
    }
}

/// The homography behind a score, for ground-truth checks.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub pair_id: String,
    pub descriptor_name: String,
    pub metric: MetricId,
    pub homography: Option<Homography>,
    /// Mean corner transfer error against the pair's truth homography.
    pub truth_corner_error: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkOutput {
    pub records: Vec<ScoreRecord>,
    pub estimates: Vec<EstimateRecord>,
}

impl BenchmarkOutput {
    pub fn all_failed(&self) -> bool {
        self.records.iter().all(|r| r.status != Status::Ok)
    }
}

/// RANSAC seed for a pair. Every metric on the pair shares it.
pub fn ransac_seed(master_seed: u64, pair_id: &str) -> u64 {
    mix_seed(&[master_seed, fnv1a(pair_id.as_bytes())])
}

/// Mean distance between where `est` and `truth` send the four corners of
/// a `w × h` image.
pub fn compare_to_truth(est: &Homography, truth: &Homography, w: f64, h: f64) -> Result<f64> {
    let corners = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)];
    let mut total = 0.0;
    for (x, y) in corners {
        let (a, b) = est.project(x, y)?;
        let (c, d) = truth.project(x, y)?;
        total += (a - c).hypot(b - d);
    }
    Ok(total / 4.0)
}

struct PairInputs {
    img1: GrayImage,
    img2: GrayImage,
    set_a: DescriptorSet,
    set_b: DescriptorSet,
    truth: Option<Homography>,
}

fn load_pair(pair: &PairEntry, source: &DescriptorSource) -> Result<PairInputs> {
    let img1 = load_pgm(&pair.image1)?;
    let img2 = load_pgm(&pair.image2)?;
    let truth = match &pair.truth_h {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(Homography::parse_text(&text)?)
        }
        None => None,
    };
    let (set_a, set_b) = match source {
        DescriptorSource::Builtin(ex) => (ex.extract(&img1)?, ex.extract(&img2)?),
        DescriptorSource::Files => {
            let (Some(a), Some(b)) = (&pair.desc_a, &pair.desc_b) else {
                return Err(Error::Parameter(format!(
                    "pair {} has no descriptor files",
                    pair.pair_id
                )));
            };
            (load_descriptor_file(a)?, load_descriptor_file(b)?)
        }
    };
    if set_a.n_bits() != set_b.n_bits() && !set_a.is_empty() && !set_b.is_empty() {
        return Err(Error::DescriptorLength {
            left: set_a.n_bits(),
            right: set_b.n_bits(),
        });
    }
    Ok(PairInputs {
        img1,
        img2,
        set_a,
        set_b,
        truth,
    })
}

fn score_pair(pair: &PairEntry, config: &BenchmarkConfig) -> (Vec<ScoreRecord>, Vec<EstimateRecord>) {
    let fallback_name = match &config.source {
        DescriptorSource::Builtin(ex) => ex.name(),
        DescriptorSource::Files => "unknown".to_owned(),
    };
    let inputs = match load_pair(pair, &config.source) {
        Ok(i) => i,
        Err(_) => {
            let records = config
                .metrics
                .iter()
                .map(|&m| ScoreRecord::failed(&pair.pair_id, &fallback_name, m, Status::InputError))
                .collect();
            return (records, Vec::new());
        }
    };
    let name = inputs.set_a.name.clone();
    let mut params = config.ransac;
    params.seed = ransac_seed(config.master_seed, &pair.pair_id);

    let mut records = Vec::with_capacity(config.metrics.len());
    let mut estimates = Vec::with_capacity(config.metrics.len());
    for &metric in &config.metrics {
        let mut record = ScoreRecord::failed(&pair.pair_id, &name, metric, Status::RansacFailed);
        let mut estimate = EstimateRecord {
            pair_id: pair.pair_id.clone(),
            descriptor_name: name.clone(),
            metric,
            homography: None,
            truth_corner_error: None,
        };
        let matches = brute_force_match(
            &inputs.set_a.descriptors,
            &inputs.set_b.descriptors,
            metric,
            config.cross_check,
        )
        .unwrap_or_default();
        record.match_count = Some(matches.len());

        if let Ok(fit) = ransac_homography(
            &matches,
            &inputs.set_a.keypoints,
            &inputs.set_b.keypoints,
            &params,
        ) {
            record.inlier_count = Some(fit.inlier_count());
            estimate.homography = Some(fit.homography);
            estimate.truth_corner_error = inputs.truth.as_ref().and_then(|t| {
                compare_to_truth(
                    &fit.homography,
                    t,
                    inputs.img1.width() as f64,
                    inputs.img1.height() as f64,
                )
                .ok()
            });
            match residual_images(&inputs.img1, &inputs.img2, &fit.homography) {
                Ok(images) => {
                    if let Some(dir) = &config.dump_dir {
                        let stem = format!("{}_{}_{}", pair.pair_id, name, metric);
                        // debug output only; a failed write does not change the score
                        let _ = save_pgm(dir.join(format!("{stem}_d1.pgm")), &images.d1);
                        let _ = save_pgm(dir.join(format!("{stem}_d2.pgm")), &images.d2);
                        let _ = save_pgm(dir.join(format!("{stem}_d3.pgm")), &images.d3);
                    }
                    match score_residual(&images, config.nonzero_threshold, config.min_overlap_fraction) {
                        Ok(score) => {
                            record.nonzero_count = Some(score.nonzero_count);
                            record.raw_sum = Some(score.raw_sum);
                            record.overlap_pixels = Some(score.overlap_pixels);
                            record.log_score = Some(score.log_score);
                            record.status = Status::Ok;
                        }
                        Err(_) => record.status = Status::DegenerateOverlap,
                    }
                }
                // the RANSAC model is invertible by construction
                Err(_) => record.status = Status::RansacFailed,
            }
        }
        records.push(record);
        estimates.push(estimate);
    }
    (records, estimates)
}

/// Scores every (pair, metric) combination.
///
/// Per-pair failures become record statuses; only an invalid configuration
/// is an error. Output is sorted by pair order, then metric order, whatever
/// the worker count.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkOutput> {
    config.validate()?;
    if let Some(dir) = &config.dump_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let per_pair: Vec<(Vec<ScoreRecord>, Vec<EstimateRecord>)> = config
        .pairs
        .par_iter()
        .map(|p| score_pair(p, config))
        .collect();
    let mut out = BenchmarkOutput::default();
    for (r, e) in per_pair {
        out.records.extend(r);
        out.estimates.extend(e);
    }
    Ok(out)
}

pub fn write_scores<W: io::Write>(records: &[ScoreRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<scores>", e))
}

pub fn read_scores<R: io::Read>(reader: R) -> Result<Vec<ScoreRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<std::result::Result<Vec<ScoreRecord>, _>>()?)
}

/// Writes one row per estimate: ids, the nine matrix entries (empty when
/// estimation failed), and the truth corner error when known.
pub fn write_estimates<W: io::Write>(estimates: &[EstimateRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["pair_id".to_owned(), "descriptor_name".into(), "metric".into()];
    header.extend((0..9).map(|i| format!("h{}{}", i / 3, i % 3)));
    header.push("truth_corner_error".into());
    w.write_record(&header)?;
    for e in estimates {
        let mut row = vec![e.pair_id.clone(), e.descriptor_name.clone(), e.metric.to_string()];
        match &e.homography {
            Some(h) => row.extend(h.matrix().iter().flatten().map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), 9)),
        }
        row.push(e.truth_corner_error.map(|v| v.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<estimates>", e))
}

/// Maximum corner displacement of a synthetic homography, as a fraction of
/// the image size.
pub const SYNTH_MAX_CORNER_SHIFT: f64 = 0.15;

/// A sum of random cosine gratings, as a continuous function of position.
#[derive(Debug, Clone)]
pub struct GratingTexture {
    /// `(kx, ky, phase, amplitude)` per grating.
    waves: Vec<(f64, f64, f64, f64)>,
    mean: f64,
    sd: f64,
}

impl GratingTexture {
    const GRATINGS: usize = 48;

    /// Draws gratings scaled to a `size × size` image and fixes the 8-bit
    /// mapping from the field statistics over that image.
    pub fn random(rng: &mut SplitMix64, size: usize) -> Self {
        let s = size as f64;
        let waves = (0..Self::GRATINGS)
            .map(|_| {
                // spatial frequency log-uniform in [4, size / 3] cycles per image
                let f = rng.uniform(4f64.ln(), (s / 3.0).ln()).exp();
                let theta = rng.uniform(0.0, std::f64::consts::TAU);
                let phase = rng.uniform(0.0, std::f64::consts::TAU);
                let amp = rng.uniform(0.5, 1.0);
                let k = std::f64::consts::TAU * f / s;
                (k * theta.cos(), k * theta.sin(), phase, amp)
            })
            .collect();
        let mut t = Self {
            waves,
            mean: 0.0,
            sd: 1.0,
        };
        let field: Vec<f64> = (0..size * size)
            .map(|i| t.field((i % size) as f64, (i / size) as f64))
            .collect();
        let n = field.len() as f64;
        t.mean = field.iter().sum::<f64>() / n;
        t.sd = (field.iter().map(|v| (v - t.mean).powi(2)).sum::<f64>() / n)
            .sqrt()
            .max(1e-12);
        t
    }

    fn field(&self, x: f64, y: f64) -> f64 {
        self.waves
            .iter()
            .map(|&(kx, ky, ph, a)| a * (kx * x + ky * y + ph).cos())
            .sum()
    }

    /// Pixel value at `(x, y)`: mean +- 2 sigma stretched over 0..=255.
    pub fn value(&self, x: f64, y: f64) -> u8 {
        let z = (self.field(x, y) - self.mean) / (2.0 * self.sd);
        (127.5 + 127.5 * z).round().clamp(0.0, 255.0) as u8
    }

    /// Renders the `width × height` window whose top-left pixel is `(x0, y0)`.
    pub fn render(&self, x0: i64, y0: i64, width: usize, height: usize) -> Result<GrayImage> {
        GrayImage::from_fn(width, height, |x, y| {
            self.value((x0 + x as i64) as f64, (y0 + y as i64) as f64)
        })
    }
}

/// Seeded `size × size` grating texture.
pub fn grating_texture(rng: &mut SplitMix64, size: usize) -> Result<GrayImage> {
    GratingTexture::random(rng, size).render(0, 0, size, size)
}

/// Random homography moving each image corner by at most
/// [`SYNTH_MAX_CORNER_SHIFT`] of the size in each direction.
pub fn random_homography(rng: &mut SplitMix64, size: usize) -> Result<Homography> {
    let s = (size - 1) as f64;
    let max = SYNTH_MAX_CORNER_SHIFT * size as f64;
    for _ in 0..100 {
        let corners = [(0.0, 0.0), (s, 0.0), (s, s), (0.0, s)];
        let corrs: Vec<PointCorrespondence> = corners
            .iter()
            .map(|&(x, y)| {
                PointCorrespondence::new(x, y, x + rng.uniform(-max, max), y + rng.uniform(-max, max))
            })
            .collect();
        if let Ok(h) = dlt_homography(&corrs) {
            if h.inverse().is_ok() {
                return Ok(h);
            }
        }
    }
    Err(Error::DegenerateGeometry)
}

/// Generates `n_pairs` textured image pairs related by known homographies
/// and writes them, their truth files and `pairs.csv` into `out_dir`.
///
/// Image 2 is the truth-homography warp of image 1's texture, rendered
/// beyond image 1's borders wherever image 2 needs it.
pub fn synth_dataset(seed: u64, n_pairs: usize, size: usize, out_dir: &Path) -> Result<Vec<PairEntry>> {
    if size < 64 {
        return Err(Error::Parameter(format!("synthetic images need size >= 64, got {size}")));
    }
    if n_pairs == 0 {
        return Err(Error::Parameter("need at least one pair".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let generated: Vec<Result<(PairEntry, GrayImage, GrayImage, Homography)>> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::new(mix_seed(&[seed, i as u64]));
            let texture = GratingTexture::random(&mut rng, size);
            let img1 = texture.render(0, 0, size, size)?;
            let h = random_homography(&mut rng, size)?;
            // render image 1's texture over a canvas containing the preimage
            // of image 2, so image 2 is covered everywhere
            let inv = h.inverse()?;
            let last = (size - 1) as f64;
            let (mut x0, mut y0, mut x1, mut y1) = (0.0f64, 0.0f64, last, last);
            for (x, y) in [(0.0, 0.0), (last, 0.0), (last, last), (0.0, last)] {
                let (u, v) = inv.project(x, y)?;
                (x0, y0, x1, y1) = (x0.min(u), y0.min(v), x1.max(u), y1.max(v));
            }
            let (x0, y0) = (x0.floor() as i64 - 2, y0.floor() as i64 - 2);
            let (cw, ch) = ((x1.ceil() as i64 + 3 - x0) as usize, (y1.ceil() as i64 + 3 - y0) as usize);
            let canvas = texture.render(x0, y0, cw, ch)?;
            let to_canvas = h.compose(&Homography::translation(x0 as f64, y0 as f64))?;
            let (warped, mask) = warp_perspective(&canvas, &to_canvas, size, size)?;
            let pixels = warped
                .pixels()
                .iter()
                .zip(mask.as_slice())
                .map(|(&w, &c)| if c { w } else { 128 })
                .collect();
            let img2 = GrayImage::new(size, size, pixels)?;
            let id = format!("pair{i:03}");
            let entry = PairEntry {
                image1: PathBuf::from(format!("{id}_a.pgm")),
                image2: PathBuf::from(format!("{id}_b.pgm")),
                truth_h: Some(PathBuf::from(format!("{id}_H.txt"))),
                desc_a: None,
                desc_b: None,
                pair_id: id,
            };
            Ok((entry, img1, img2, h))
        })
        .collect();

    let mut pairs = Vec::with_capacity(n_pairs);
    for g in generated {
        let (entry, img1, img2, h) = g?;
        save_pgm(out_dir.join(&entry.image1), &img1)?;
        save_pgm(out_dir.join(&entry.image2), &img2)?;
        let truth = out_dir.join(entry.truth_h.as_ref().unwrap());
        std::fs::write(&truth, h.to_text()).map_err(|e| Error::io(&truth, e))?;
        pairs.push(entry);
    }
    write_pair_list(out_dir.join("pairs.csv"), &pairs)?;
    Ok(pairs)
}
