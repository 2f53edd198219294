//! Two-way ANOVA without replication over an (image pair × metric) score
//! matrix, the F distribution it needs, and pairwise McNemar z-scores.

use serde::Serialize;

use crate::error::{Error, Result};

/// Significance level used for the reported F critical values.
pub const ANOVA_ALPHA: f64 = 0.05;
/// z above which a McNemar comparison is flagged as significant (99.5%
/// one-tailed).
pub const MCNEMAR_Z_CRITICAL: f64 = 2.576;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(z)` for `z > 0` (Lanczos, g = 7).
pub fn ln_gamma(z: f64) -> f64 {
    if z < 0.5 {
        // reflection keeps the series in its accurate range
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta function, evaluated with the
/// modified Lentz method.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite()
    {
        return Err(Error::Parameter(format!(
            "incomplete beta needs 0 <= x <= 1 and a, b > 0 (x={x}, a={a}, b={b})"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    };
    Ok(value.clamp(0.0, 1.0))
}

fn check_df(d1: f64, d2: f64) -> Result<()> {
    if !(d1 >= 1.0 && d2 >= 1.0) || !d1.is_finite() || !d2.is_finite() {
        return Err(Error::Parameter(format!(
            "degrees of freedom must be >= 1 (got {d1}, {d2})"
        )));
    }
    Ok(())
}

/// CDF of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_cdf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df(d1, d2)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::Parameter(format!("F statistic must be >= 0, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    reg_inc_beta(d1 * x / (d1 * x + d2), d1 / 2.0, d2 / 2.0)
}

/// Upper-`alpha` critical value: the `x` with `f_cdf(x) = 1 - alpha`,
/// found by bisection on `[0, 1e6]`.
pub fn f_critical(alpha: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df(d1, d2)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0f64, 1e6f64);
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if f_cdf(mid, d1, d2)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Rows are image pairs (blocks), columns are metrics (treatments).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl ScoreMatrix {
    pub fn new(rows: Vec<Vec<f64>>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        let r = rows.len();
        let c = col_labels.len();
        if r < 2 || c < 2 {
            return Err(Error::Shape(format!("score matrix must be at least 2x2, got {r}x{c}")));
        }
        if row_labels.len() != r {
            return Err(Error::Shape(format!("{} row labels for {r} rows", row_labels.len())));
        }
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::Shape(format!("row of length {} in a {c}-column matrix", bad.len())));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("score matrix has non-finite entries".into()));
        }
        Ok(Self {
            values,
            rows: r,
            cols: c,
            row_labels,
            col_labels,
        })
    }

    /// Like [`ScoreMatrix::new`] with numbered labels.
    pub fn unlabeled(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::new(
            rows,
            (0..r).map(|i| format!("r{i}")).collect(),
            (0..c).map(|j| format!("c{j}")).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn column_means(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|c| self.column(c).iter().sum::<f64>() / self.rows as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorRow {
    pub df: usize,
    pub ss: f64,
    pub ms: f64,
    pub f: f64,
    pub p_value: f64,
    pub f_crit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    pub df: usize,
    pub ss: f64,
    pub ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaTable {
    /// Row (block) effect.
    pub image_pairs: FactorRow,
    /// Column (treatment) effect.
    pub metrics: FactorRow,
    pub error: ErrorRow,
    pub ss_total: f64,
}

/// Two-way ANOVA without replication.
///
/// The error sum of squares is accumulated directly from the interaction
/// residuals `x - row_mean - col_mean + grand_mean`, so the decomposition
/// `SS_rows + SS_cols + SS_error = SS_total` is a real check rather than an
/// identity.
pub fn two_way_anova(m: &ScoreMatrix) -> Result<AnovaTable> {
    let (r, c) = (m.rows, m.cols);
    if r < 2 || c < 2 {
        return Err(Error::Shape(format!("ANOVA needs at least 2x2, got {r}x{c}")));
    }
    let n = (r * c) as f64;
    let grand = m.values.iter().sum::<f64>() / n;
    let row_means: Vec<f64> = (0..r).map(|i| m.row(i).iter().sum::<f64>() / c as f64).collect();
    let col_means = m.column_means();

    let ss_total: f64 = m.values.iter().map(|x| (x - grand).powi(2)).sum();
    let ss_rows = c as f64 * row_means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let ss_cols = r as f64 * col_means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let mut ss_error = 0.0;
    for i in 0..r {
        for j in 0..c {
            ss_error += (m.get(i, j) - row_means[i] - col_means[j] + grand).powi(2);
        }
    }

    let df_rows = r - 1;
    let df_cols = c - 1;
    let df_error = df_rows * df_cols;
    let ms_error = ss_error / df_error as f64;
    // residuals at rounding level carry no variance
    if ss_total == 0.0 || ss_error <= 1e-12 * ss_total {
        return Err(Error::DegenerateVariance);
    }

    let factor = |ss: f64, df: usize| -> Result<FactorRow> {
        let ms = ss / df as f64;
        let f = ms / ms_error;
        Ok(FactorRow {
            df,
            ss,
            ms,
            f,
            p_value: (1.0 - f_cdf(f, df as f64, df_error as f64)?).clamp(0.0, 1.0),
            f_crit: f_critical(ANOVA_ALPHA, df as f64, df_error as f64)?,
        })
    };
    Ok(AnovaTable {
        image_pairs: factor(ss_rows, df_rows)?,
        metrics: factor(ss_cols, df_cols)?,
        error: ErrorRow {
            df: df_error,
            ss: ss_error,
            ms: ms_error,
        },
        ss_total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FirstBetter,
    SecondBetter,
    None,
}

impl Direction {
    /// Table glyph: `<-` points at the row (first) metric, `^` at the
    /// column (second) metric.
    pub fn glyph(self) -> &'static str {
        match self {
            Direction::FirstBetter => "<-",
            Direction::SecondBetter => "^",
            Direction::None => "=",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::FirstBetter => Direction::SecondBetter,
            Direction::SecondBetter => Direction::FirstBetter,
            Direction::None => Direction::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McNemarResult {
    pub z: f64,
    pub direction: Direction,
    pub n_first_better: usize,
    pub n_second_better: usize,
    pub n_ties: usize,
}

impl McNemarResult {
    pub fn is_significant(&self, z_critical: f64) -> bool {
        self.z >= z_critical
    }

    /// Cell text such as `<- 0.84` or `= 0.00`.
    pub fn cell(&self) -> String {
        format!("{} {:.2}", self.direction.glyph(), self.z)
    }
}

/// Paired comparison where a lower score wins. Ties are dropped and the
/// z-score carries a continuity correction, clamped at 0.
pub fn mcnemar_pair(scores_a: &[f64], scores_b: &[f64]) -> Result<McNemarResult> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::Shape(format!(
            "paired samples differ in length: {} vs {}",
            scores_a.len(),
            scores_b.len()
        )));
    }
    if scores_a.is_empty() {
        return Err(Error::Shape("McNemar needs at least one paired sample".into()));
    }
    let (mut a_wins, mut b_wins, mut ties) = (0usize, 0usize, 0usize);
    for (a, b) in scores_a.iter().zip(scores_b) {
        if a < b {
            a_wins += 1;
        } else if a > b {
            b_wins += 1;
        } else {
            ties += 1;
        }
    }
    let (z, direction) = if a_wins == b_wins {
        (0.0, Direction::None)
    } else {
        let diff = a_wins.abs_diff(b_wins) as f64;
        let z = ((diff - 1.0) / ((a_wins + b_wins) as f64).sqrt()).max(0.0);
        let dir = if a_wins > b_wins {
            Direction::FirstBetter
        } else {
            Direction::SecondBetter
        };
        (z, dir)
    };
    Ok(McNemarResult {
        z,
        direction,
        n_first_better: a_wins,
        n_second_better: b_wins,
        n_ties: ties,
    })
}

/// Upper-triangular matrix of McNemar results between score columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMcNemar {
    pub labels: Vec<String>,
    cells: Vec<Vec<Option<McNemarResult>>>,
}

impl PairwiseMcNemar {
    /// Result for columns `i < j`, with `i` as the first sample.
    pub fn get(&self, i: usize, j: usize) -> Option<&McNemarResult> {
        self.cells.get(i)?.get(j)?.as_ref()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// All `(i, j, result)` with `i < j`, row-major.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &McNemarResult)> {
        self.cells.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(j, c)| c.as_ref().map(|c| (i, j, c)))
        })
    }
}

pub fn pairwise_mcnemar(m: &ScoreMatrix) -> Result<PairwiseMcNemar> {
    if m.cols < 2 {
        return Err(Error::Shape("pairwise McNemar needs at least two columns".into()));
    }
    let columns: Vec<Vec<f64>> = (0..m.cols).map(|c| m.column(c)).collect();
    let mut cells = vec![vec![None; m.cols]; m.cols];
    for i in 0..m.cols {
        for j in i + 1..m.cols {
            cells[i][j] = Some(mcnemar_pair(&columns[i], &columns[j])?);
        }
    }
    Ok(PairwiseMcNemar {
        labels: m.col_labels.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    #[test]
    fn beta_uniform_and_symmetric() {
        for x in [0.0, 0.25, 1.0] {
            assert!((reg_inc_beta(x, 1.0, 1.0).unwrap() - x).abs() < 1e-12);
        }
        for a in [1.0, 5.0, 20.0] {
            assert!((reg_inc_beta(0.5, a, a).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_closed_form() {
        // I_x(2, 3) = 6x^2 - 8x^3 + 3x^4 expanded from the beta integral
        let poly = |x: f64| 6.0 * x * x - 8.0 * x.powi(3) + 3.0 * x.powi(4);
        assert!((poly(0.5) - 0.6875).abs() < 1e-15);
        for x in [0.05, 0.3, 0.5, 0.7, 0.95] {
            assert!((reg_inc_beta(x, 2.0, 3.0).unwrap() - poly(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn beta_matches_statrs() {
        let mut rng = SplitMix64::new(17);
        for _ in 0..2000 {
            let x = rng.next_f64();
            let a = rng.uniform(0.1, 600.0);
            let b = rng.uniform(0.1, 600.0);
            let ours = reg_inc_beta(x, a, b).unwrap();
            let reference = statrs::function::beta::beta_reg(a, b, x);
            assert!((ours - reference).abs() < 1e-10, "x={x} a={a} b={b}: {ours} vs {reference}");
        }
    }

    #[test]
    fn beta_domain() {
        assert!(reg_inc_beta(-0.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(1.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 1.0, -1.0).is_err());
        assert!(reg_inc_beta(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn ln_gamma_factorials() {
        let mut fact = 1.0f64;
        for n in 1..30 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0));
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn f_distribution() {
        for d in [2.0, 10.0, 100.0] {
            assert!((f_cdf(1.0, d, d).unwrap() - 0.5).abs() < 1e-12);
        }
        assert_eq!(f_cdf(0.0, 3.0, 7.0).unwrap(), 0.0);
        assert!(f_cdf(-1.0, 3.0, 7.0).is_err());
        assert!(f_cdf(1.0, 0.5, 7.0).is_err());
        assert!((f_critical(0.05, 4.0, 1148.0).unwrap() - 2.38).abs() <= 0.01);
        assert!((f_critical(0.05, 287.0, 1148.0).unwrap() - 1.16).abs() <= 0.01);
        assert!(f_critical(0.0, 4.0, 10.0).is_err());
        assert!(f_critical(1.0, 4.0, 10.0).is_err());
        // reference quantiles from an independent implementation
        assert!((f_critical(0.05, 4.0, 1148.0).unwrap() - 2.379681686694175).abs() < 1e-6);
        assert!((f_critical(0.05, 287.0, 1148.0).unwrap() - 1.1613876837681705).abs() < 1e-6);
    }

    #[test]
    fn f_critical_consistency() {
        for &(d1, d2) in &[(1.0, 1.0), (2.0, 5.0), (4.0, 116.0), (29.0, 116.0), (287.0, 1148.0)] {
            for alpha in [0.01, 0.05, 0.1] {
                let x = f_critical(alpha, d1, d2).unwrap();
                assert!((f_cdf(x, d1, d2).unwrap() - (1.0 - alpha)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn anova_no_row_effect() {
        let rows = vec![vec![1.0, 2.0, 4.0], vec![1.0, 2.0, 4.0], vec![1.0, 2.0, 4.0]];
        // identical rows and perfect column additivity leave no error
        assert!(matches!(
            two_way_anova(&ScoreMatrix::unlabeled(rows).unwrap()),
            Err(Error::DegenerateVariance)
        ));
        let rows = vec![vec![1.0, 2.0, 4.0], vec![2.0, 1.0, 4.0], vec![1.5, 1.5, 4.0]];
        let t = two_way_anova(&ScoreMatrix::unlabeled(rows).unwrap()).unwrap();
        assert_eq!(t.image_pairs.ss, 0.0);
        assert_eq!(t.image_pairs.f, 0.0);
        assert!((t.image_pairs.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anova_perfect_additivity() {
        let m = ScoreMatrix::unlabeled(vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0]]).unwrap();
        assert!(matches!(two_way_anova(&m), Err(Error::DegenerateVariance)));
        let perturbed =
            ScoreMatrix::unlabeled(vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.1]]).unwrap();
        let t = two_way_anova(&perturbed).unwrap();
        assert!((t.metrics.ss - 1.601_666_666_666_667).abs() < 1e-9);
        assert!((t.image_pairs.ss - 4.203_333_333_333_333).abs() < 1e-9);
    }

    #[test]
    fn anova_hand_example() {
        // x = [[1, 3], [2, 2], [6, 4]]: grand 3, rows 2, 2, 5, cols 3, 3
        let m = ScoreMatrix::unlabeled(vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![6.0, 4.0]]).unwrap();
        let t = two_way_anova(&m).unwrap();
        assert!((t.ss_total - 16.0).abs() < 1e-12);
        assert!((t.image_pairs.ss - 12.0).abs() < 1e-12);
        assert!(t.metrics.ss.abs() < 1e-12);
        assert!((t.error.ss - 4.0).abs() < 1e-12);
        assert_eq!((t.image_pairs.df, t.metrics.df, t.error.df), (2, 1, 2));
        assert!((t.image_pairs.f - 3.0).abs() < 1e-12);
        // F(2, 2) has CDF f / (1 + f), so the survival at 3 is 1/4
        assert!((t.image_pairs.p_value - 0.25).abs() < 1e-10);
    }

    #[test]
    fn anova_shape_errors() {
        assert!(ScoreMatrix::unlabeled(vec![vec![1.0, 2.0]]).is_err());
        assert!(ScoreMatrix::unlabeled(vec![vec![1.0], vec![2.0]]).is_err());
        assert!(ScoreMatrix::unlabeled(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(ScoreMatrix::unlabeled(vec![vec![1.0, f64::NAN], vec![1.0, 2.0]]).is_err());
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> ScoreMatrix {
        let mut rng = SplitMix64::new(seed);
        ScoreMatrix::unlabeled(
            (0..rows)
                .map(|_| (0..cols).map(|_| rng.uniform(0.0, 10.0)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn anova_invariances() {
        let m = random_matrix(20, 5, 3);
        let base = two_way_anova(&m).unwrap();
        let shifted = ScoreMatrix::unlabeled(
            (0..20).map(|r| m.row(r).iter().map(|v| v + 100.0).collect()).collect(),
        )
        .unwrap();
        let scaled = ScoreMatrix::unlabeled(
            (0..20).map(|r| m.row(r).iter().map(|v| v * 3.5).collect()).collect(),
        )
        .unwrap();
        let s = two_way_anova(&shifted).unwrap();
        let k = two_way_anova(&scaled).unwrap();
        for t in [&s, &k] {
            assert!((t.metrics.f - base.metrics.f).abs() < 1e-8 * base.metrics.f.max(1.0));
            assert!((t.image_pairs.f - base.image_pairs.f).abs() < 1e-8 * base.image_pairs.f.max(1.0));
        }
        assert!((s.error.ss - base.error.ss).abs() < 1e-8 * base.error.ss);
    }

    #[test]
    fn anova_288_by_5_shape() {
        let t = two_way_anova(&random_matrix(288, 5, 1)).unwrap();
        assert_eq!((t.image_pairs.df, t.metrics.df, t.error.df), (287, 4, 1148));
        let closure = t.image_pairs.ss + t.metrics.ss + t.error.ss;
        assert!((closure - t.ss_total).abs() <= 1e-8 * t.ss_total);
        assert!((t.metrics.f_crit - 2.38).abs() <= 0.01);
        assert!((t.image_pairs.f_crit - 1.16).abs() <= 0.01);
    }

    #[test]
    fn mcnemar_examples() {
        let a = [1.0, 2.0, 3.0];
        let r = mcnemar_pair(&a, &a).unwrap();
        assert_eq!((r.z, r.direction, r.n_ties), (0.0, Direction::None, 3));
        assert_eq!(r.cell(), "= 0.00");

        let mut xs = vec![0.0; 15];
        xs.extend(vec![2.0; 5]);
        let ys = vec![1.0; 20];
        let r = mcnemar_pair(&xs, &ys).unwrap();
        assert_eq!((r.n_first_better, r.n_second_better), (15, 5));
        assert!((r.z - 9.0 / 20f64.sqrt()).abs() < 1e-12);
        assert!((r.z - 2.0125).abs() < 1e-4);
        assert_eq!(r.direction, Direction::FirstBetter);
        assert!(!r.is_significant(MCNEMAR_Z_CRITICAL));

        // |diff| = 1 is fully absorbed by the continuity correction
        let r = mcnemar_pair(&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!((r.z, r.direction), (0.0, Direction::FirstBetter));

        assert!(mcnemar_pair(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mcnemar_pair(&[], &[]).is_err());
    }

    #[test]
    fn mcnemar_significance_threshold() {
        let a = vec![0.0; 30];
        let b = vec![1.0; 30];
        let r = mcnemar_pair(&a, &b).unwrap();
        assert!((r.z - 29.0 / 30f64.sqrt()).abs() < 1e-12);
        assert!(r.is_significant(MCNEMAR_Z_CRITICAL));
        assert!(r.is_significant(2.576) && !r.is_significant(5.4));
    }

    #[test]
    fn pairwise_is_compositional() {
        let rows = vec![
            vec![1.0, 2.0, 1.0],
            vec![3.0, 1.0, 3.0],
            vec![2.0, 2.0, 5.0],
            vec![0.5, 4.0, 0.5],
            vec![7.0, 6.0, 1.0],
        ];
        let m = ScoreMatrix::unlabeled(rows).unwrap();
        let p = pairwise_mcnemar(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i < j {
                    assert_eq!(*p.get(i, j).unwrap(), mcnemar_pair(&m.column(i), &m.column(j)).unwrap());
                } else {
                    assert!(p.get(i, j).is_none());
                }
            }
        }
        // columns 0 and 2 differ on rows 2 and 4 only
        assert_eq!(p.get(0, 2).unwrap().n_ties, 3);
        assert_eq!(p.iter().count(), 3);
    }

    #[test]
    fn pairwise_duplicate_columns() {
        let m = ScoreMatrix::unlabeled(vec![vec![1.0, 1.0, 3.0], vec![2.0, 2.0, 0.0]]).unwrap();
        let p = pairwise_mcnemar(&m).unwrap();
        assert_eq!(p.get(0, 1).unwrap().z, 0.0);
        assert_eq!(p.get(0, 1).unwrap().direction, Direction::None);
    }

    proptest! {
        #[test]
        fn mcnemar_antisymmetric(pairs in proptest::collection::vec((0u8..5, 0u8..5), 1..60)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let ab = mcnemar_pair(&a, &b).unwrap();
            let ba = mcnemar_pair(&b, &a).unwrap();
            prop_assert_eq!(ab.z, ba.z);
            prop_assert_eq!(ab.direction, ba.direction.flipped());
            prop_assert_eq!(ab.direction == Direction::None, ab.n_first_better == ab.n_second_better);
        }

        #[test]
        fn mcnemar_monotone_invariant(pairs in proptest::collection::vec((0u32..1000, 0u32..1000), 1..60)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let la: Vec<f64> = a.iter().map(|v| v.ln_1p()).collect();
            let lb: Vec<f64> = b.iter().map(|v| v.ln_1p()).collect();
            prop_assert_eq!(mcnemar_pair(&a, &b).unwrap(), mcnemar_pair(&la, &lb).unwrap());
        }

        #[test]
        fn anova_decomposition_closes(rows in 2usize..30, cols in 2usize..7, seed in any::<u64>()) {
            let t = two_way_anova(&random_matrix(rows, cols, seed)).unwrap();
            let closure = t.image_pairs.ss + t.metrics.ss + t.error.ss;
            prop_assert!((closure - t.ss_total).abs() <= 1e-8 * t.ss_total);
            prop_assert!((0.0..=1.0).contains(&t.metrics.p_value));
        }

        #[test]
        fn f_cdf_monotone(d1 in 1.0f64..300.0, d2 in 1.0f64..1200.0, x in 0.0f64..10.0, dx in 0.0f64..5.0) {
            prop_assert!(f_cdf(x, d1, d2).unwrap() <= f_cdf(x + dx, d1, d2).unwrap() + 1e-12);
        }
    }
}
