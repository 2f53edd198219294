//! Turns score records into ANOVA and McNemar tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::bench::{ScoreRecord, Status};
use crate::error::{Error, Result};
use crate::metrics::MetricId;
use crate::stats::{pairwise_mcnemar, two_way_anova, AnovaTable, PairwiseMcNemar, ScoreMatrix};

/// Analysis of one descriptor's scores.
#[derive(Debug, Clone)]
pub struct DescriptorReport {
    pub descriptor_name: String,
    pub metrics: Vec<MetricId>,
    /// Complete pairs only, in first-seen order.
    pub pair_ids: Vec<String>,
    /// Pairs missing an `ok` score for at least one metric.
    pub dropped_pairs: Vec<String>,
    /// Log scores, pairs by metrics.
    pub log_scores: ScoreMatrix,
    /// Raw non-zero counts, same layout.
    pub counts: ScoreMatrix,
    pub anova: std::result::Result<AnovaTable, String>,
    pub mcnemar: PairwiseMcNemar,
    pub mean_log_score: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub descriptors: Vec<DescriptorReport>,
    /// Descriptors that could not be analysed, with the reason.
    pub skipped: Vec<(String, String)>,
}

fn analyse(name: &str, records: &[&ScoreRecord]) -> Result<DescriptorReport> {
    let metrics: Vec<MetricId> = {
        let present: BTreeSet<MetricId> = records.iter().map(|r| r.metric).collect();
        MetricId::ALL.iter().copied().filter(|m| present.contains(m)).collect()
    };
    if metrics.len() < 2 {
        return Err(Error::Report(format!("{name}: need at least two metrics")));
    }

    let mut order: Vec<&str> = Vec::new();
    let mut cells: HashMap<(&str, MetricId), (f64, f64)> = HashMap::new();
    for r in records {
        if !order.contains(&r.pair_id.as_str()) {
            order.push(&r.pair_id);
        }
        if r.status != Status::Ok {
            continue;
        }
        if let (Some(log), Some(count)) = (r.log_score, r.nonzero_count) {
            cells.insert((r.pair_id.as_str(), r.metric), (log, count as f64));
        }
    }

    let mut pair_ids = Vec::new();
    let mut dropped = Vec::new();
    let mut log_rows = Vec::new();
    let mut count_rows = Vec::new();
    for &pair in &order {
        let row: Option<Vec<(f64, f64)>> =
            metrics.iter().map(|&m| cells.get(&(pair, m)).copied()).collect();
        match row {
            Some(row) => {
                pair_ids.push(pair.to_owned());
                log_rows.push(row.iter().map(|c| c.0).collect());
                count_rows.push(row.iter().map(|c| c.1).collect());
            }
            None => dropped.push(pair.to_owned()),
        }
    }
    if pair_ids.len() < 2 {
        return Err(Error::Report(format!(
            "{name}: need at least two pairs scored under every metric, have {}",
            pair_ids.len()
        )));
    }

    let labels: Vec<String> = metrics.iter().map(|m| m.label().to_owned()).collect();
    let log_scores = ScoreMatrix::new(log_rows, pair_ids.clone(), labels.clone())?;
    let counts = ScoreMatrix::new(count_rows, pair_ids.clone(), labels)?;
    let anova = two_way_anova(&log_scores).map_err(|e| e.to_string());
    let mcnemar = pairwise_mcnemar(&log_scores)?;
    let mean_log_score = log_scores.column_means();
    Ok(DescriptorReport {
        descriptor_name: name.to_owned(),
        metrics,
        pair_ids,
        dropped_pairs: dropped,
        log_scores,
        counts,
        anova,
        mcnemar,
        mean_log_score,
    })
}

/// Groups records by descriptor and analyses each group. Fails only when
/// no descriptor has enough complete data.
pub fn build_report(records: &[ScoreRecord]) -> Result<Report> {
    let mut groups: BTreeMap<&str, Vec<&ScoreRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.descriptor_name.as_str()).or_default().push(r);
    }
    let mut report = Report::default();
    for (name, group) in groups {
        match analyse(name, &group) {
            Ok(d) => report.descriptors.push(d),
            Err(e) => report.skipped.push((name.to_owned(), e.to_string())),
        }
    }
    if report.descriptors.is_empty() {
        let why: Vec<String> = report.skipped.iter().map(|s| s.1.clone()).collect();
        return Err(Error::Report(if why.is_empty() {
            "no score records".to_owned()
        } else {
            why.join("; ")
        }));
    }
    Ok(report)
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::from("|");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(s, " {c:<w$} |");
        }
        s.push('\n');
        s
    };
    let mut out = line(header);
    out.push('|');
    for w in &widths {
        let _ = write!(out, "{}|", "-".repeat(w + 2));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

/// Markdown ANOVA table: source, df, MS, F, P-value, F crit.
pub fn anova_markdown(t: &AnovaTable) -> String {
    let header: Vec<String> = ["Source of variation", "df", "MS", "F", "P-value", "F crit"]
        .map(String::from)
        .to_vec();
    let factor = |label: &str, r: &crate::stats::FactorRow| {
        vec![
            label.to_owned(),
            r.df.to_string(),
            format!("{:.4}", r.ms),
            format!("{:.2}", r.f),
            format!("{:.2}", r.p_value),
            format!("{:.2}", r.f_crit),
        ]
    };
    let rows = vec![
        factor("Image pairs", &t.image_pairs),
        factor("Metrics", &t.metrics),
        vec![
            "Error".to_owned(),
            t.error.df.to_string(),
            format!("{:.4}", t.error.ms),
            String::new(),
            String::new(),
            String::new(),
        ],
    ];
    table(&header, &rows)
}

/// Upper-triangular McNemar table. Row `i`, column `j` compares metric `i`
/// against metric `j`; `<-` means the row metric wins, `^` the column one.
pub fn mcnemar_markdown(m: &PairwiseMcNemar) -> String {
    let n = m.len();
    let mut header = vec![String::new()];
    header.extend(m.labels[1..].iter().cloned());
    let rows: Vec<Vec<String>> = (0..n - 1)
        .map(|i| {
            let mut row = vec![m.labels[i].clone()];
            row.extend((1..n).map(|j| m.get(i, j).map(|c| c.cell()).unwrap_or_default()));
            row
        })
        .collect();
    table(&header, &rows)
}

pub fn render_markdown(report: &Report, z_critical: f64) -> String {
    let mut out = String::from("# Metric comparison\n");
    for d in &report.descriptors {
        let _ = writeln!(out, "\n## {}\n", d.descriptor_name);
        let _ = writeln!(
            out,
            "{} image pairs, {} metrics.",
            d.pair_ids.len(),
            d.metrics.len()
        );
        if !d.dropped_pairs.is_empty() {
            let _ = writeln!(out, "Dropped (incomplete): {}.", d.dropped_pairs.join(", "));
        }
        out.push_str("\n### Mean log score\n\n");
        let header = vec!["Metric".to_owned(), "Mean".to_owned()];
        let rows: Vec<Vec<String>> = d
            .metrics
            .iter()
            .zip(&d.mean_log_score)
            .map(|(m, v)| vec![m.label().to_owned(), format!("{v:.4}")])
            .collect();
        out.push_str(&table(&header, &rows));
        out.push_str("\n### Two-way ANOVA on log scores\n\n");
        match &d.anova {
            Ok(t) => out.push_str(&anova_markdown(t)),
            Err(e) => {
                let _ = writeln!(out, "Not computed: {e}.");
            }
        }
        let _ = writeln!(out, "\n### McNemar z (significant at z >= {z_critical})\n");
        out.push_str(&mcnemar_markdown(&d.mcnemar));
        let sig: Vec<String> = d
            .mcnemar
            .iter()
            .filter(|(_, _, c)| c.is_significant(z_critical))
            .map(|(i, j, c)| format!("{} vs {} ({})", d.mcnemar.labels[i], d.mcnemar.labels[j], c.cell()))
            .collect();
        if sig.is_empty() {
            out.push_str("\nNo significant differences.\n");
        } else {
            let _ = writeln!(out, "\nSignificant: {}.", sig.join(", "));
        }
    }
    for (name, why) in &report.skipped {
        let _ = writeln!(out, "\n## {name}\n\nSkipped: {why}.");
    }
    out
}

fn csv_file(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

/// Writes `report.md`, `anova.csv`, `mcnemar.csv`, `means.csv` and one
/// `scores_<descriptor>.csv` matrix per descriptor.
pub fn write_report(report: &Report, out_dir: &Path, z_critical: f64) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let md = out_dir.join("report.md");
    std::fs::write(&md, render_markdown(report, z_critical)).map_err(|e| Error::io(&md, e))?;

    let mut anova = csv_file(&out_dir.join("anova.csv"))?;
    anova.write_record(["descriptor", "source", "df", "ss", "ms", "f", "p_value", "f_crit"])?;
    let mut mcn = csv_file(&out_dir.join("mcnemar.csv"))?;
    mcn.write_record([
        "descriptor",
        "metric_a",
        "metric_b",
        "z",
        "direction",
        "n_first_better",
        "n_second_better",
        "n_ties",
        "significant",
    ])?;
    let mut means = csv_file(&out_dir.join("means.csv"))?;
    means.write_record(["descriptor", "metric", "mean_log_score", "pairs"])?;

    for d in &report.descriptors {
        let name = d.descriptor_name.as_str();
        if let Ok(t) = &d.anova {
            for (src, r) in [("image_pairs", &t.image_pairs), ("metrics", &t.metrics)] {
                anova.write_record([
                    name.to_owned(),
                    src.to_owned(),
                    r.df.to_string(),
                    r.ss.to_string(),
                    r.ms.to_string(),
                    r.f.to_string(),
                    r.p_value.to_string(),
                    r.f_crit.to_string(),
                ])?;
            }
            anova.write_record([
                name.to_owned(),
                "error".to_owned(),
                t.error.df.to_string(),
                t.error.ss.to_string(),
                t.error.ms.to_string(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        for (i, j, c) in d.mcnemar.iter() {
            mcn.write_record([
                name.to_owned(),
                d.metrics[i].to_string(),
                d.metrics[j].to_string(),
                c.z.to_string(),
                c.direction.glyph().to_owned(),
                c.n_first_better.to_string(),
                c.n_second_better.to_string(),
                c.n_ties.to_string(),
                c.is_significant(z_critical).to_string(),
            ])?;
        }
        for (m, v) in d.metrics.iter().zip(&d.mean_log_score) {
            means.write_record([name.to_owned(), m.to_string(), v.to_string(), d.pair_ids.len().to_string()])?;
        }

        let safe: String = name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        let mut scores = csv_file(&out_dir.join(format!("scores_{safe}.csv")))?;
        let mut header = vec!["pair_id".to_owned()];
        header.extend(d.metrics.iter().map(|m| m.to_string()));
        scores.write_record(&header)?;
        for (r, pair) in d.pair_ids.iter().enumerate() {
            let mut row = vec![pair.clone()];
            row.extend(d.log_scores.row(r).iter().map(|v| v.to_string()));
            scores.write_record(&row)?;
        }
        scores.flush().map_err(|e| Error::io(out_dir, e))?;
    }
    for w in [&mut anova, &mut mcn, &mut means] {
        w.flush().map_err(|e| Error::io(out_dir, e))?;
    }
    Ok(())
}
