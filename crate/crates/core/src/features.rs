//! FAST-9 keypoints, a BRIEF-style binary descriptor, and the BDSC
//! descriptor file format used to ingest externally computed descriptors.

use crate::descriptor::BinaryDescriptor;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    pub score: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub name: String,
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<BinaryDescriptor>,
    n_bits: usize,
}

impl DescriptorSet {
    /// Checks the lists are parallel and every descriptor is `n_bits` wide.
    pub fn new(
        name: impl Into<String>,
        keypoints: Vec<Keypoint>,
        descriptors: Vec<BinaryDescriptor>,
        n_bits: usize,
    ) -> Result<Self> {
        if keypoints.len() != descriptors.len() {
            return Err(Error::InvalidDescriptor(format!(
                "{} keypoints but {} descriptors",
                keypoints.len(),
                descriptors.len()
            )));
        }
        if let Some(d) = descriptors.iter().find(|d| d.n_bits() != n_bits) {
            return Err(Error::DescriptorLength {
                left: n_bits,
                right: d.n_bits(),
            });
        }
        Ok(Self {
            name: name.into(),
            keypoints,
            descriptors,
            n_bits,
        })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }
}

/// Offsets of the radius-3 Bresenham circle, clockwise from 12 o'clock.
pub const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

pub const DEFAULT_TARGET_KEYPOINTS: usize = 5000;
pub const DEFAULT_FAST_THRESHOLD: u8 = 20;

/// FAST-9 response at `(x, y)`: the summed absolute contrast over the arc
/// of at least 9 contiguous brighter (or darker) circle pixels, or `None`.
fn fast_score(img: &GrayImage, x: usize, y: usize, t: u8) -> Option<u32> {
    let center = img.get(x, y) as i32;
    let t = t as i32;
    let ring: [i32; 16] = CIRCLE.map(|(dx, dy)| {
        img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize) as i32
    });
    for sign in [1i32, -1] {
        let passes = |v: i32| sign * (v - center) > t;
        if ring.iter().filter(|&&v| passes(v)).count() < 9 {
            continue;
        }
        if ring.iter().all(|&v| passes(v)) {
            return Some(ring.iter().map(|&v| (v - center).unsigned_abs()).sum());
        }
        // start right after a failing pixel so runs never straddle the origin
        let start = (0..16).find(|&i| !passes(ring[i])).unwrap() + 1;
        let (mut run, mut sum) = (0, 0u32);
        for k in 0..16 {
            let v = ring[(start + k) % 16];
            if passes(v) {
                run += 1;
                sum += (v - center).unsigned_abs();
            } else {
                if run >= 9 {
                    return Some(sum);
                }
                run = 0;
                sum = 0;
            }
        }
        if run >= 9 {
            return Some(sum);
        }
    }
    None
}

/// Detects FAST-9 corners, applies 3×3 non-maximum suppression on the
/// score, and keeps the `target_n` strongest.
///
/// Ordering (and suppression between equal scores) prefers smaller `y`,
/// then smaller `x`.
pub fn fast_detect(img: &GrayImage, t: u8, target_n: usize) -> Result<Vec<Keypoint>> {
    let (w, h) = (img.width(), img.height());
    if w < 7 || h < 7 {
        return Err(Error::Geometry(format!(
            "FAST needs at least 7x7 pixels, got {w}x{h}"
        )));
    }
    if t == 0 {
        return Err(Error::Parameter("FAST threshold must be at least 1".into()));
    }
    let mut scores = vec![0u32; w * h];
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            if let Some(s) = fast_score(img, x, y, t) {
                scores[y * w + x] = s;
            }
        }
    }

    let mut kept = Vec::new();
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            let s = scores[y * w + x];
            if s == 0 {
                continue;
            }
            let beaten = (y - 1..=y + 1)
                .flat_map(|ny| (x - 1..=x + 1).map(move |nx| (nx, ny)))
                .filter(|&(nx, ny)| (nx, ny) != (x, y))
                .any(|(nx, ny)| {
                    let ns = scores[ny * w + nx];
                    ns > s || (ns == s && (ny, nx) < (y, x))
                });
            if !beaten {
                kept.push((s, x, y));
            }
        }
    }
    kept.sort_by(|a, b| b.0.cmp(&a.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));
    kept.truncate(target_n);
    Ok(kept
        .into_iter()
        .map(|(s, x, y)| Keypoint {
            x: x as f32,
            y: y as f32,
            score: s as f32,
        })
        .collect())
}

/// Pixel-pair tests for a BRIEF-style descriptor, all within a 31×31 patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPattern {
    pairs: Vec<((i32, i32), (i32, i32))>,
}

pub const PATCH_RADIUS: i32 = 15;
/// Keypoints nearer than this to any border are not described.
pub const BORDER: usize = 16;
pub const SUPPORTED_BRIEF_BITS: [usize; 3] = [128, 256, 512];

impl SamplingPattern {
    /// Draws offsets uniformly from `[-15, 15]` with SplitMix64, in the order
    /// `dx_p, dy_p, dx_q, dy_q` per bit.
    pub fn from_seed(n_bits: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut draw = || rng.range_i32(-PATCH_RADIUS, PATCH_RADIUS);
        let pairs = (0..n_bits)
            .map(|_| {
                let p = (draw(), draw());
                let q = (draw(), draw());
                (p, q)
            })
            .collect();
        Self { pairs }
    }

    pub fn pairs(&self) -> &[((i32, i32), (i32, i32))] {
        &self.pairs
    }
}

/// 5×5 box sums with border replication, via an integral image.
struct BoxFiltered {
    width: usize,
    sums: Vec<u32>,
}

impl BoxFiltered {
    fn new(img: &GrayImage) -> Self {
        const R: usize = 2;
        let (w, h) = (img.width(), img.height());
        let (pw, ph) = (w + 2 * R, h + 2 * R);
        // integral of the replicate-padded image, one extra row/column of zeros
        let mut integral = vec![0u64; (pw + 1) * (ph + 1)];
        for py in 0..ph {
            let sy = py.saturating_sub(R).min(h - 1);
            let mut row = 0u64;
            for px in 0..pw {
                let sx = px.saturating_sub(R).min(w - 1);
                row += img.get(sx, sy) as u64;
                integral[(py + 1) * (pw + 1) + px + 1] = integral[py * (pw + 1) + px + 1] + row;
            }
        }
        let at = |x: usize, y: usize| integral[y * (pw + 1) + x];
        let mut sums = vec![0u32; w * h];
        for y in 0..h {
            for x in 0..w {
                // padded window [x, x+5) × [y, y+5) is centred on (x, y)
                sums[y * w + x] = (at(x + 5, y + 5) + at(x, y) - at(x + 5, y) - at(x, y + 5)) as u32;
            }
        }
        Self { width: w, sums }
    }

    fn get(&self, x: usize, y: usize) -> u32 {
        self.sums[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BriefOutput {
    pub set: DescriptorSet,
    /// Indices into the input keypoints that were too close to a border.
    pub dropped: Vec<usize>,
}

/// Describes each keypoint by `n_bits` intensity comparisons on the
/// box-smoothed image: bit `i` is set iff `smoothed(kp + p_i) < smoothed(kp + q_i)`.
pub fn brief_describe(
    img: &GrayImage,
    kps: &[Keypoint],
    n_bits: usize,
    pattern_seed: u64,
) -> Result<BriefOutput> {
    if !SUPPORTED_BRIEF_BITS.contains(&n_bits) {
        return Err(Error::Parameter(format!(
            "BRIEF width must be one of {SUPPORTED_BRIEF_BITS:?}, got {n_bits}"
        )));
    }
    let pattern = SamplingPattern::from_seed(n_bits, pattern_seed);
    let smoothed = BoxFiltered::new(img);
    let (w, h) = (img.width(), img.height());

    let mut keypoints = Vec::new();
    let mut descriptors = Vec::new();
    let mut dropped = Vec::new();
    for (i, kp) in kps.iter().enumerate() {
        let (cx, cy) = (kp.x.round(), kp.y.round());
        let inside = cx >= BORDER as f32
            && cy >= BORDER as f32
            && (cx as usize) + BORDER < w
            && (cy as usize) + BORDER < h;
        if !inside {
            dropped.push(i);
            continue;
        }
        let (cx, cy) = (cx as i32, cy as i32);
        let sample = |(dx, dy): (i32, i32)| smoothed.get((cx + dx) as usize, (cy + dy) as usize);
        let mut bytes = vec![0u8; n_bits / 8];
        for (bit, &(p, q)) in pattern.pairs().iter().enumerate() {
            if sample(p) < sample(q) {
                bytes[bit / 8] |= 1 << (bit % 8);
            }
        }
        keypoints.push(*kp);
        descriptors.push(BinaryDescriptor::from_bytes(bytes, n_bits)?);
    }
    Ok(BriefOutput {
        set: DescriptorSet::new(format!("brief{n_bits}"), keypoints, descriptors, n_bits)?,
        dropped,
    })
}

const BDSC_MAGIC: &[u8; 4] = b"BDSC";
const BDSC_VERSION: u16 = 1;

/// Encodes a set as BDSC: `"BDSC"`, `u16` version, `u16` name length,
/// name, `u32` count, `u16` descriptor bytes, then `count` records of
/// `x, y, score: f32` plus the descriptor bytes. All little-endian.
pub fn write_descriptor_file(set: &DescriptorSet) -> Result<Vec<u8>> {
    if !set.n_bits.is_multiple_of(8) {
        return Err(Error::Format(format!(
            "BDSC stores whole bytes; {}-bit descriptors cannot be written",
            set.n_bits
        )));
    }
    let desc_bytes = u16::try_from(set.n_bits / 8)
        .map_err(|_| Error::Format("descriptor too wide for BDSC".into()))?;
    let name_len = u16::try_from(set.name.len())
        .map_err(|_| Error::Format("descriptor name too long".into()))?;
    let count = u32::try_from(set.len()).map_err(|_| Error::Format("too many records".into()))?;

    let mut out = Vec::with_capacity(14 + set.name.len() + set.len() * (12 + desc_bytes as usize));
    out.extend_from_slice(BDSC_MAGIC);
    out.extend_from_slice(&BDSC_VERSION.to_le_bytes());
    out.extend_from_slice(&name_len.to_le_bytes());
    out.extend_from_slice(set.name.as_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&desc_bytes.to_le_bytes());
    for (kp, d) in set.keypoints.iter().zip(&set.descriptors) {
        out.extend_from_slice(&kp.x.to_le_bytes());
        out.extend_from_slice(&kp.y.to_le_bytes());
        out.extend_from_slice(&kp.score.to_le_bytes());
        out.extend_from_slice(d.as_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format(format!("BDSC truncated while reading {what}"))),
        }
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn read_descriptor_file(bytes: &[u8]) -> Result<DescriptorSet> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != BDSC_MAGIC {
        return Err(Error::Format("bad BDSC magic".into()));
    }
    let version = r.u16("version")?;
    if version != BDSC_VERSION {
        return Err(Error::Format(format!("unsupported BDSC version {version}")));
    }
    let name_len = r.u16("name length")? as usize;
    let name = std::str::from_utf8(r.take(name_len, "name")?)
        .map_err(|_| Error::Format("descriptor name is not UTF-8".into()))?
        .to_owned();
    let count = r.u32("count")? as usize;
    let desc_bytes = r.u16("descriptor size")? as usize;
    if count > 0 && desc_bytes == 0 {
        return Err(Error::Format("records declared with zero-byte descriptors".into()));
    }
    let record = 12 + desc_bytes;
    let remaining = bytes.len() - r.pos;
    if remaining < count.saturating_mul(record) {
        return Err(Error::Format(format!(
            "BDSC truncated: {count} records need {} bytes, found {remaining}",
            count.saturating_mul(record)
        )));
    }
    if remaining > count * record {
        return Err(Error::Format(format!(
            "BDSC has {} trailing bytes after {count} records",
            remaining - count * record
        )));
    }
    let mut keypoints = Vec::with_capacity(count);
    let mut descriptors = Vec::with_capacity(count);
    for _ in 0..count {
        let x = r.f32("x")?;
        let y = r.f32("y")?;
        let score = r.f32("score")?;
        keypoints.push(Keypoint { x, y, score });
        descriptors.push(
            BinaryDescriptor::from_full_bytes(r.take(desc_bytes, "descriptor")?.to_vec())
                .map_err(|e| Error::Format(e.to_string()))?,
        );
    }
    DescriptorSet::new(name, keypoints, descriptors, desc_bytes * 8)
}

pub fn load_descriptor_file(path: impl AsRef<std::path::Path>) -> Result<DescriptorSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_descriptor_file(&bytes)
}

pub fn save_descriptor_file(path: impl AsRef<std::path::Path>, set: &DescriptorSet) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_descriptor_file(set)?).map_err(|e| Error::io(path, e))
}
