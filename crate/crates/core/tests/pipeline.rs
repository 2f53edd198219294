use std::path::Path;

use binmatch_core::bench::{
    read_pair_list, run_benchmark, synth_dataset, write_scores, BenchmarkConfig, BuiltinExtractor,
    DescriptorSource, PairEntry, Status,
};
use binmatch_core::features::save_descriptor_file;
use binmatch_core::imaging::load_pgm;
use binmatch_core::report::build_report;
use binmatch_core::MetricId;

fn builtin() -> DescriptorSource {
    DescriptorSource::Builtin(BuiltinExtractor::default())
}

fn csv_bytes(config: &BenchmarkConfig) -> Vec<u8> {
    let out = run_benchmark(config).unwrap();
    let mut buf = Vec::new();
    write_scores(&out.records, &mut buf).unwrap();
    buf
}

fn dataset(dir: &Path, pairs: usize) -> Vec<PairEntry> {
    synth_dataset(21, pairs, 192, dir).unwrap();
    read_pair_list(dir.join("pairs.csv")).unwrap()
}

#[test]
fn synthetic_pairs_recover_truth() {
    let dir = tempfile::tempdir().unwrap();
    let config = BenchmarkConfig::new(dataset(dir.path(), 3), builtin());
    let out = run_benchmark(&config).unwrap();
    assert_eq!(out.records.len(), 15);
    for (r, e) in out.records.iter().zip(&out.estimates) {
        assert_eq!(r.status, Status::Ok, "{} {}", r.pair_id, r.metric);
        let log = (1.0 + r.nonzero_count.unwrap() as f64).ln();
        assert_eq!(r.log_score, Some(log));
        assert!(r.inlier_count.unwrap() >= 4);
        assert!(r.match_count.unwrap() >= r.inlier_count.unwrap());
        let err = e.truth_corner_error.unwrap();
        assert!(err < 1.0, "{} {}: corner error {err}", r.pair_id, r.metric);
    }
}

#[test]
fn jaccard_and_dice_agree_and_runs_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = BenchmarkConfig::new(dataset(dir.path(), 2), builtin());
    config.master_seed = 5;
    let out = run_benchmark(&config).unwrap();
    for pair in ["pair000", "pair001"] {
        let get = |m| {
            out.records
                .iter()
                .find(|r| r.pair_id == pair && r.metric == m)
                .unwrap()
        };
        let (j, d) = (get(MetricId::JaccardNeedham), get(MetricId::Dice));
        assert_eq!((j.nonzero_count, j.log_score, j.inlier_count), (d.nonzero_count, d.log_score, d.inlier_count));
    }
    let first = csv_bytes(&config);
    assert_eq!(first, csv_bytes(&config));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    assert_eq!(first, pool.install(|| csv_bytes(&config)));
}

#[test]
fn self_pair_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dataset(dir.path(), 1);
    let entry = PairEntry {
        pair_id: "self".into(),
        image2: pairs[0].image1.clone(),
        truth_h: None,
        ..pairs[0].clone()
    };
    let mut config = BenchmarkConfig::new(vec![entry], builtin());
    config.cross_check = true;
    for r in run_benchmark(&config).unwrap().records {
        assert_eq!(r.status, Status::Ok);
        assert_eq!((r.nonzero_count, r.raw_sum, r.log_score), (Some(0), Some(0), Some(0.0)));
    }
}

#[test]
fn descriptor_files_match_builtin_extraction() {
    let dir = tempfile::tempdir().unwrap();
    let mut pairs = dataset(dir.path(), 2);
    let ex = BuiltinExtractor::default();
    for p in &mut pairs {
        let a = dir.path().join(format!("{}_a.bdsc", p.pair_id));
        let b = dir.path().join(format!("{}_b.bdsc", p.pair_id));
        save_descriptor_file(&a, &ex.extract(&load_pgm(&p.image1).unwrap()).unwrap()).unwrap();
        save_descriptor_file(&b, &ex.extract(&load_pgm(&p.image2).unwrap()).unwrap()).unwrap();
        p.desc_a = Some(a);
        p.desc_b = Some(b);
    }
    let from_files = csv_bytes(&BenchmarkConfig::new(pairs.clone(), DescriptorSource::Files));
    let built = csv_bytes(&BenchmarkConfig::new(pairs.clone(), builtin()));
    assert_eq!(from_files, built);

    pairs[1].desc_b = Some(dir.path().join("missing.bdsc"));
    let out = run_benchmark(&BenchmarkConfig::new(pairs, DescriptorSource::Files)).unwrap();
    assert!(out.records[..5].iter().all(|r| r.status == Status::Ok));
    assert!(out.records[5..].iter().all(|r| r.status == Status::InputError));
    assert!(!out.all_failed());
}

#[test]
fn unmatched_images_fail_softly() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dataset(dir.path(), 2);
    // unrelated images: RANSAC may fit something, but nothing aborts
    let entry = PairEntry {
        pair_id: "mixed".into(),
        image2: pairs[1].image1.clone(),
        truth_h: None,
        ..pairs[0].clone()
    };
    let out = run_benchmark(&BenchmarkConfig::new(vec![entry], builtin())).unwrap();
    assert_eq!(out.records.len(), 5);
    for r in &out.records {
        assert!(matches!(r.status, Status::Ok | Status::RansacFailed | Status::DegenerateOverlap));
        if r.status == Status::Ok {
            assert!(r.log_score.is_some() && r.overlap_pixels.unwrap() > 0);
        }
    }
}

#[test]
fn report_over_benchmark_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = BenchmarkConfig::new(dataset(dir.path(), 3), builtin());
    config.metrics = vec![MetricId::Hamming, MetricId::JaccardNeedham, MetricId::Dice];
    let out = run_benchmark(&config).unwrap();
    let report = build_report(&out.records).unwrap();
    let d = &report.descriptors[0];
    assert_eq!(d.descriptor_name, "brief256");
    assert_eq!(d.metrics, config.metrics);
    if let Ok(t) = &d.anova {
        assert_eq!((t.image_pairs.df, t.metrics.df, t.error.df), (2, 2, 4));
    }
    assert_eq!(d.mcnemar.get(1, 2).unwrap().cell(), "= 0.00");
}
