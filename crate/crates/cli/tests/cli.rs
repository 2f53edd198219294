use std::process::{Command, Output};

use binmatch_core::features::{save_descriptor_file, DescriptorSet, Keypoint};
use binmatch_core::BinaryDescriptor;

fn binmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binmatch")).args(args).output().unwrap()
}

fn set(bits: &[&str]) -> DescriptorSet {
    let descs: Vec<_> = bits.iter().map(|b| BinaryDescriptor::from_bit_str(b).unwrap()).collect();
    let kps = (0..descs.len())
        .map(|i| Keypoint { x: i as f32, y: 0.0, score: 1.0 })
        .collect();
    DescriptorSet::new("test", kps, descs, 8).unwrap()
}

#[test]
fn bad_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(binmatch(&[]).status.code(), Some(2));
    assert_eq!(binmatch(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(binmatch(&["synth", "--size", "10", "--out", out]).status.code(), Some(2));
    assert_eq!(
        binmatch(&["bench", "--pairs", "x.csv", "--metrics", "hamming,cosine", "--out", out]).status.code(),
        Some(2)
    );
    assert_eq!(
        binmatch(&["bench", "--pairs", "x.csv", "--nbits", "100", "--out", out]).status.code(),
        Some(2)
    );
    assert_eq!(
        binmatch(&["match", "--desc-a", "a", "--desc-b", "b", "--metric", "cosine"]).status.code(),
        Some(2)
    );
}

#[test]
fn total_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("pairs.csv");
    std::fs::write(&list, "pair_id,image1,image2\np,missing_a.pgm,missing_b.pgm\n").unwrap();
    let run = dir.path().join("run");
    let o = binmatch(&["bench", "--pairs", list.to_str().unwrap(), "--out", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let scores = std::fs::read_to_string(run.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 6);
    assert!(scores.lines().skip(1).all(|l| l.ends_with(",input_error")));

    let o = binmatch(&["report", "--scores", run.join("scores.csv").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn match_prints_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bdsc");
    let b = dir.path().join("b.bdsc");
    save_descriptor_file(&a, &set(&["11110000", "00001111"])).unwrap();
    save_descriptor_file(&b, &set(&["00001110", "11110000", "10101010"])).unwrap();
    let o = binmatch(&["match", "--desc-a", a.to_str().unwrap(), "--desc-b", b.to_str().unwrap(), "--metric", "jaccard"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text, "query_idx,train_idx,dist\n0,1,0\n1,0,0.25\n");

    let o = binmatch(&["match", "--desc-a", a.to_str().unwrap(), "--desc-b", "nope.bdsc"]);
    assert_eq!(o.status.code(), Some(1));
}
