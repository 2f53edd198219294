//! Planar homographies: normalized DLT fitting, seeded RANSAC, projection.

use crate::error::{Error, Result};
use crate::features::Keypoint;
use crate::matcher::MatchPair;
use crate::rng::SplitMix64;

const EPS: f64 = 1e-12;
/// Minimum triangle area (px²) for three sample points to count as non-collinear.
const MIN_TRIANGLE_AREA: f64 = 1e-6;

pub type Matrix3 = [[f64; 3]; 3];

/// A 3×3 projective transform from image-1 to image-2 coordinates.
///
/// Stored normalized: `h[2][2] == 1` when that entry is not negligible,
/// unit Frobenius norm otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    h: Matrix3,
}

impl Homography {
    /// Normalizes `m` and rejects singular or non-finite matrices.
    pub fn new(m: Matrix3) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::SingularHomography);
        }
        let scale = if m[2][2].abs() > EPS {
            m[2][2]
        } else {
            m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
        };
        if scale == 0.0 {
            return Err(Error::SingularHomography);
        }
        let mut h = m;
        for v in h.iter_mut().flatten() {
            *v /= scale;
        }
        if determinant(&h).abs() <= EPS {
            return Err(Error::SingularHomography);
        }
        Ok(Self { h })
    }

    pub fn identity() -> Self {
        Self {
            h: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            h: [[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]],
        }
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.h
    }

    pub fn project(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        project_matrix(&self.h, x, y)
    }

    pub fn inverse(&self) -> Result<Self> {
        let h = &self.h;
        let det = determinant(h);
        if det.abs() <= EPS {
            return Err(Error::SingularHomography);
        }
        let mut inv = [[0.0; 3]; 3];
        for (r, row) in inv.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                // adjugate: transpose of the cofactor matrix
                let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                *v = (h[r1][c1] * h[r2][c2] - h[r1][c2] * h[r2][c1]) / det;
            }
        }
        Self::new(inv)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Homography) -> Result<Self> {
        Self::new(mat_mul(&self.h, &other.h))
    }

    /// Parses nine whitespace-separated numbers in row-major order.
    pub fn parse_text(text: &str) -> Result<Self> {
        let values = text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad homography entry {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 9 {
            return Err(Error::Format(format!(
                "homography needs 9 numbers, got {}",
                values.len()
            )));
        }
        let mut m = [[0.0; 3]; 3];
        for (i, v) in values.into_iter().enumerate() {
            m[i / 3][i % 3] = v;
        }
        Self::new(m)
    }

    /// Three lines of three numbers, exact under [`Homography::parse_text`].
    pub fn to_text(&self) -> String {
        self.h
            .iter()
            .map(|row| format!("{} {} {}\n", row[0], row[1], row[2]))
            .collect()
    }
}

/// Applies a raw (possibly unnormalized) matrix to `(x, y)`.
pub fn project_matrix(h: &Matrix3, x: f64, y: f64) -> Result<(f64, f64)> {
    let w = h[2][0] * x + h[2][1] * y + h[2][2];
    if w.abs() < EPS {
        return Err(Error::PointAtInfinity);
    }
    Ok((
        (h[0][0] * x + h[0][1] * y + h[0][2]) / w,
        (h[1][0] * x + h[1][1] * y + h[1][2]) / w,
    ))
}

fn determinant(h: &Matrix3) -> f64 {
    h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1])
        - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
        + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0])
}

fn mat_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCorrespondence {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl PointCorrespondence {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.y1.is_finite() && self.x2.is_finite() && self.y2.is_finite()
    }
}

/// Distance between the projection of `(x1, y1)` and `(x2, y2)`.
pub fn reprojection_error(h: &Homography, c: &PointCorrespondence) -> Result<f64> {
    let (px, py) = h.project(c.x1, c.y1)?;
    Ok((px - c.x2).hypot(py - c.y2))
}

/// Similarity transform taking the centroid to the origin and the mean
/// distance from it to √2.
fn hartley_transform(points: impl Iterator<Item = (f64, f64)> + Clone) -> Result<(f64, f64, f64)> {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (cx, cy) = (sx / n, sy / n);
    let mean_dist = points.map(|(x, y)| (x - cx).hypot(y - cy)).sum::<f64>() / n;
    if mean_dist <= EPS {
        return Err(Error::DegenerateGeometry);
    }
    Ok((cx, cy, std::f64::consts::SQRT_2 / mean_dist))
}

/// Least-squares homography from four or more correspondences.
///
/// Both point sets are Hartley-normalized, the 2n×9 DLT system is reduced to
/// the 9×9 normal matrix, and the solution is that matrix's eigenvector with
/// the smallest eigenvalue.
pub fn dlt_homography(corrs: &[PointCorrespondence]) -> Result<Homography> {
    if corrs.len() < 4 {
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: corrs.len(),
        });
    }
    if corrs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Parameter("non-finite correspondence".into()));
    }
    let (cx1, cy1, s1) = hartley_transform(corrs.iter().map(|c| (c.x1, c.y1)))?;
    let (cx2, cy2, s2) = hartley_transform(corrs.iter().map(|c| (c.x2, c.y2)))?;

    let mut ata = [[0.0f64; 9]; 9];
    for c in corrs {
        let (x, y) = ((c.x1 - cx1) * s1, (c.y1 - cy1) * s1);
        let (u, v) = ((c.x2 - cx2) * s2, (c.y2 - cy2) * s2);
        let r1 = [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u];
        let r2 = [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v];
        for i in 0..9 {
            for j in i..9 {
                ata[i][j] += r1[i] * r1[j] + r2[i] * r2[j];
            }
        }
    }
    for i in 0..9 {
        for j in 0..i {
            ata[i][j] = ata[j][i];
        }
    }

    let (values, vectors) = jacobi_eigen(ata);
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let largest = values[order[8]];
    // A second near-zero eigenvalue means the null space is not unique.
    if largest <= 0.0 || values[order[1]] <= 1e-12 * largest {
        return Err(Error::DegenerateGeometry);
    }
    let k = order[0];
    let mut hn = [[0.0; 3]; 3];
    for i in 0..9 {
        hn[i / 3][i % 3] = vectors[i][k];
    }

    let t1 = [[s1, 0.0, -s1 * cx1], [0.0, s1, -s1 * cy1], [0.0, 0.0, 1.0]];
    let t2_inv = [[1.0 / s2, 0.0, cx2], [0.0, 1.0 / s2, cy2], [0.0, 0.0, 1.0]];
    Homography::new(mat_mul(&mat_mul(&t2_inv, &hn), &t1)).map_err(|_| Error::DegenerateGeometry)
}

/// Cyclic Jacobi eigen-decomposition of a symmetric 9×9 matrix.
///
/// Returns the eigenvalues and a matrix whose column `k` is the eigenvector
/// for eigenvalue `k`. Sweeps stop once the off-diagonal Frobenius norm is
/// below 1e-12 of the full norm.
fn jacobi_eigen(mut a: [[f64; 9]; 9]) -> ([f64; 9], [[f64; 9]; 9]) {
    const N: usize = 9;
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..N)
            .flat_map(|p| (p + 1..N).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        let diag: f64 = (0..N).map(|i| a[i][i] * a[i][i]).sum();
        if off == 0.0 || off <= 1e-24 * (diag + 2.0 * off) {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut values = [0.0; N];
    for (i, value) in values.iter_mut().enumerate() {
        *value = a[i][i];
    }
    (values, v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    /// Maximum forward reprojection error of an inlier, in pixels.
    pub reproj_threshold: f64,
    pub max_iters: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            reproj_threshold: 3.0,
            max_iters: 2000,
            confidence: 0.995,
            seed: 0,
        }
    }
}

impl RansacParams {
    fn validate(&self) -> Result<()> {
        if !(self.reproj_threshold > 0.0) {
            return Err(Error::Parameter("reprojection threshold must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be positive".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Parameter("confidence must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacOutcome {
    pub homography: Homography,
    pub inliers: Vec<bool>,
    /// Minimal samples drawn before stopping.
    pub iterations: usize,
}

impl RansacOutcome {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

/// RANSAC over descriptor matches, pairing `kps_a[query_idx]` with
/// `kps_b[train_idx]`.
pub fn ransac_homography(
    matches: &[MatchPair],
    kps_a: &[Keypoint],
    kps_b: &[Keypoint],
    params: &RansacParams,
) -> Result<RansacOutcome> {
    let corrs = matches
        .iter()
        .map(|m| match (kps_a.get(m.query_idx), kps_b.get(m.train_idx)) {
            (Some(a), Some(b)) => Ok(PointCorrespondence::new(
                a.x as f64, a.y as f64, b.x as f64, b.y as f64,
            )),
            _ => Err(Error::Parameter(format!(
                "match ({}, {}) indexes past the keypoint lists",
                m.query_idx, m.train_idx
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    ransac_correspondences(&corrs, params)
}

fn triangle_area(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    0.5 * ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).abs()
}

fn has_collinear_triple(points: [(f64, f64); 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES
        .iter()
        .any(|t| triangle_area(points[t[0]], points[t[1]], points[t[2]]) < MIN_TRIANGLE_AREA)
}

fn classify(h: &Homography, corrs: &[PointCorrespondence], threshold: f64) -> (Vec<bool>, usize) {
    let flags: Vec<bool> = corrs
        .iter()
        .map(|c| reprojection_error(h, c).is_ok_and(|e| e <= threshold))
        .collect();
    let count = flags.iter().filter(|&&f| f).count();
    (flags, count)
}

/// Number of iterations after which an all-inlier sample has been drawn
/// with probability `confidence`, given inlier ratio `w`.
fn required_iterations(w: f64, confidence: f64) -> usize {
    let p_good = w.powi(4);
    if p_good >= 1.0 {
        return 0;
    }
    if p_good <= 0.0 {
        return usize::MAX;
    }
    let n = (1.0 - confidence).ln() / (1.0 - p_good).ln();
    if n.is_finite() {
        n.ceil().max(0.0) as usize
    } else {
        usize::MAX
    }
}

/// Refit rounds after sampling stops.
pub const REFIT_ROUNDS: usize = 10;

/// Seeded RANSAC with 4-point minimal samples. The best hypothesis is then
/// refit on its inliers, repeatedly, for as long as the refit keeps at
/// least as many inliers.
pub fn ransac_correspondences(
    corrs: &[PointCorrespondence],
    params: &RansacParams,
) -> Result<RansacOutcome> {
    params.validate()?;
    let n = corrs.len();
    if n < 4 {
        return Err(Error::InsufficientPoints { needed: 4, got: n });
    }
    let mut rng = SplitMix64::new(params.seed);
    let mut best: Option<(Homography, Vec<bool>, usize)> = None;
    let mut needed = params.max_iters;
    let mut iterations = 0;

    while iterations < params.max_iters && iterations < needed {
        iterations += 1;
        let mut idx = [0usize; 4];
        for k in 0..4 {
            idx[k] = loop {
                let cand = rng.below(n as u64) as usize;
                if !idx[..k].contains(&cand) {
                    break cand;
                }
            };
        }
        let sample = idx.map(|i| corrs[i]);
        if has_collinear_triple(sample.map(|c| (c.x1, c.y1)))
            || has_collinear_triple(sample.map(|c| (c.x2, c.y2)))
        {
            continue;
        }
        let Ok(h) = dlt_homography(&sample) else {
            continue;
        };
        let (flags, count) = classify(&h, corrs, params.reproj_threshold);
        if best.as_ref().is_none_or(|(_, _, c)| count > *c) {
            needed = required_iterations(count as f64 / n as f64, params.confidence);
            best = Some((h, flags, count));
        }
    }

    let (mut homography, mut inliers, mut count) = match best {
        Some(b) if b.2 >= 4 => b,
        _ => return Err(Error::EstimationFailed),
    };

    // refit on the inliers, reclassify, and repeat while the consensus holds
    for _ in 0..REFIT_ROUNDS {
        let inlier_corrs: Vec<PointCorrespondence> = corrs
            .iter()
            .zip(&inliers)
            .filter(|(_, &f)| f)
            .map(|(c, _)| *c)
            .collect();
        let Ok(refit) = dlt_homography(&inlier_corrs) else {
            break;
        };
        let (refit_flags, refit_count) = classify(&refit, corrs, params.reproj_threshold);
        if refit_count < count {
            break;
        }
        let converged = refit_flags == inliers;
        homography = refit;
        inliers = refit_flags;
        count = refit_count;
        if converged {
            break;
        }
    }
    Ok(RansacOutcome {
        homography,
        inliers,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &Homography, b: &Homography, tol: f64) {
        for (x, y) in a.matrix().iter().flatten().zip(b.matrix().iter().flatten()) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn random_h(rng: &mut SplitMix64) -> Homography {
        Homography::new([
            [rng.uniform(0.8, 1.2), rng.uniform(-0.2, 0.2), rng.uniform(-20.0, 20.0)],
            [rng.uniform(-0.2, 0.2), rng.uniform(0.8, 1.2), rng.uniform(-20.0, 20.0)],
            [rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3), 1.0],
        ])
        .unwrap()
    }

    fn generate(h: &Homography, n: usize, rng: &mut SplitMix64) -> Vec<PointCorrespondence> {
        (0..n)
            .map(|_| {
                let (x, y) = (rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0));
                let (u, v) = h.project(x, y).unwrap();
                PointCorrespondence::new(x, y, u, v)
            })
            .collect()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(Homography::identity().project(5.0, 7.0).unwrap(), (5.0, 7.0));
        assert_eq!(
            Homography::translation(3.0, -2.0).project(0.0, 0.0).unwrap(),
            (3.0, -2.0)
        );
        let doubled = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
        assert_eq!(project_matrix(&doubled, 5.0, 7.0).unwrap(), (5.0, 7.0));
        let h = Homography::new(doubled).unwrap();
        assert_close(&h, &Homography::identity(), 0.0);
        assert_eq!(h.project(5.0, 7.0).unwrap(), (5.0, 7.0));
    }

    #[test]
    fn point_at_infinity() {
        let h = Homography::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(h.project(-1.0, 0.0), Err(Error::PointAtInfinity)));
    }

    #[test]
    fn scale_invariance_before_normalization() {
        let mut rng = SplitMix64::new(3);
        let h = random_h(&mut rng);
        for s in [0.5, 3.0, -2.0, 1e3] {
            let mut m = *h.matrix();
            m.iter_mut().flatten().for_each(|v| *v *= s);
            let (a, b) = project_matrix(&m, 12.0, 34.0).unwrap();
            let (c, d) = h.project(12.0, 34.0).unwrap();
            assert!((a - c).abs() < 1e-9 && (b - d).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_rejected() {
        assert!(Homography::new([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]]).is_err());
        assert!(Homography::new([[0.0; 3]; 3]).is_err());
        assert!(Homography::new([[f64::NAN, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn inverse_and_compose() {
        let mut rng = SplitMix64::new(11);
        let h = random_h(&mut rng);
        let id = h.compose(&h.inverse().unwrap()).unwrap();
        assert_close(&id, &Homography::identity(), 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let mut rng = SplitMix64::new(5);
        let h = random_h(&mut rng);
        assert_eq!(Homography::parse_text(&h.to_text()).unwrap(), h);
        let oxford = "  1.0 0 0\n0 1.0 0\n 0 0 1\n";
        assert_eq!(Homography::parse_text(oxford).unwrap(), Homography::identity());
        assert!(Homography::parse_text("1 0 0 0 1 0 0 0").is_err());
        assert!(Homography::parse_text("1 0 0 0 1 0 0 0 x").is_err());
    }

    #[test]
    fn reprojection_examples() {
        let id = Homography::identity();
        assert_eq!(
            reprojection_error(&id, &PointCorrespondence::new(1.0, 2.0, 1.0, 2.0)).unwrap(),
            0.0
        );
        assert_eq!(
            reprojection_error(&id, &PointCorrespondence::new(0.0, 0.0, 3.0, 4.0)).unwrap(),
            5.0
        );
        let mut rng = SplitMix64::new(9);
        let h = random_h(&mut rng);
        for c in generate(&h, 50, &mut rng) {
            assert!(reprojection_error(&h, &c).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn dlt_unit_square_identity() {
        let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let corrs: Vec<_> = corners
            .iter()
            .map(|&(x, y)| PointCorrespondence::new(x, y, x, y))
            .collect();
        assert_close(&dlt_homography(&corrs).unwrap(), &Homography::identity(), 1e-12);
        let shifted: Vec<_> = corners
            .iter()
            .map(|&(x, y)| PointCorrespondence::new(x, y, x + 5.0, y))
            .collect();
        assert_close(
            &dlt_homography(&shifted).unwrap(),
            &Homography::translation(5.0, 0.0),
            1e-10,
        );
    }

    #[test]
    fn dlt_recovers_random_homographies() {
        let mut rng = SplitMix64::new(42);
        for _ in 0..50 {
            let h = random_h(&mut rng);
            let corrs = generate(&h, 20, &mut rng);
            let est = dlt_homography(&corrs).unwrap();
            assert_close(&est, &h, 1e-6);
            for c in &corrs {
                assert!(reprojection_error(&est, c).unwrap() <= 1e-8);
            }
        }
    }

    #[test]
    fn dlt_errors() {
        let three = vec![PointCorrespondence::new(0.0, 0.0, 0.0, 0.0); 3];
        assert!(matches!(
            dlt_homography(&three),
            Err(Error::InsufficientPoints { needed: 4, got: 3 })
        ));
        let collinear: Vec<_> = (0..6)
            .map(|i| PointCorrespondence::new(i as f64, 2.0 * i as f64, i as f64, 2.0 * i as f64))
            .collect();
        assert!(matches!(dlt_homography(&collinear), Err(Error::DegenerateGeometry)));
        let coincident = vec![PointCorrespondence::new(1.0, 1.0, 2.0, 2.0); 5];
        assert!(matches!(dlt_homography(&coincident), Err(Error::DegenerateGeometry)));
    }

    #[test]
    fn jacobi_diagonalizes() {
        let mut rng = SplitMix64::new(1);
        let mut m = [[0.0; 9]; 9];
        for i in 0..9 {
            for j in i..9 {
                let v = rng.uniform(-1.0, 1.0);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        let (values, vectors) = jacobi_eigen(m);
        for k in 0..9 {
            for i in 0..9 {
                let mv: f64 = (0..9).map(|j| m[i][j] * vectors[j][k]).sum();
                assert!((mv - values[k] * vectors[i][k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ransac_clean() {
        let mut rng = SplitMix64::new(100);
        let h = random_h(&mut rng);
        let corrs = generate(&h, 100, &mut rng);
        let out = ransac_correspondences(&corrs, &RansacParams::default()).unwrap();
        assert_close(&out.homography, &h, 1e-6);
        assert!(out.inliers.iter().all(|&f| f));
    }

    #[test]
    fn ransac_with_outliers() {
        let mut rng = SplitMix64::new(7);
        let h = random_h(&mut rng);
        let mut corrs = generate(&h, 70, &mut rng);
        for _ in 0..30 {
            let (x, y) = (rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0));
            let (u, v) = (rng.uniform(-30.0, 330.0), rng.uniform(-30.0, 330.0));
            corrs.push(PointCorrespondence::new(x, y, u, v));
        }
        let params = RansacParams {
            seed: 99,
            ..Default::default()
        };
        let out = ransac_correspondences(&corrs, &params).unwrap();
        assert_close(&out.homography, &h, 1e-3);
        assert!(out.inliers[..70].iter().all(|&f| f));
        for (c, &flag) in corrs[70..].iter().zip(&out.inliers[70..]) {
            if flag {
                // a random outlier can land on the model by chance
                assert!(reprojection_error(&h, c).unwrap() <= 3.0 + 1e-6);
            }
        }
        for (c, &flag) in corrs.iter().zip(&out.inliers) {
            if flag {
                assert!(reprojection_error(&out.homography, c).unwrap() <= 3.0);
            }
        }
        let again = ransac_correspondences(&corrs, &params).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn ransac_errors() {
        let corrs = vec![PointCorrespondence::new(0.0, 0.0, 1.0, 1.0); 3];
        assert!(matches!(
            ransac_correspondences(&corrs, &RansacParams::default()),
            Err(Error::InsufficientPoints { .. })
        ));
        // all points on one line never yield a valid sample
        let line: Vec<_> = (0..10)
            .map(|i| PointCorrespondence::new(i as f64, 0.0, i as f64, 0.0))
            .collect();
        assert!(matches!(
            ransac_correspondences(&line, &RansacParams::default()),
            Err(Error::EstimationFailed)
        ));
        let bad = RansacParams {
            confidence: 1.0,
            ..Default::default()
        };
        assert!(ransac_correspondences(&line, &bad).is_err());
    }

    #[test]
    fn iteration_bound() {
        assert_eq!(required_iterations(1.0, 0.995), 0);
        assert_eq!(required_iterations(0.0, 0.995), usize::MAX);
        // w = 0.5: ln(0.005) / ln(1 - 1/16) = 82.1
        assert_eq!(required_iterations(0.5, 0.995), 83);
    }
}
