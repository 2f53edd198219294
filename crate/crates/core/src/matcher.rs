//! Exhaustive nearest-neighbour matching of descriptor sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{contingency, BinaryDescriptor, ContingencyCounts};
use crate::error::{Error, Result};
use crate::metrics::{distance, MetricId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub query_idx: usize,
    pub train_idx: usize,
    pub dist: f64,
}

/// Index and distance of the closest train descriptor. Ties go to the
/// lowest index.
pub fn nearest(
    query: &BinaryDescriptor,
    trains: &[BinaryDescriptor],
    metric: MetricId,
) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in trains.iter().enumerate() {
        let d = distance(metric, &contingency(query, t)?);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.ok_or(Error::EmptySet)
}

/// Descriptors unpacked into contiguous u64 words with their bit totals, so
/// each comparison costs one AND-popcount per word.
struct Packed {
    words: Vec<u64>,
    stride: usize,
    ones: Vec<u32>,
}

impl Packed {
    fn new(descs: &[BinaryDescriptor]) -> Self {
        let stride = descs.first().map_or(0, |d| d.as_bytes().len().div_ceil(8));
        let mut words = Vec::with_capacity(stride * descs.len());
        for d in descs {
            for chunk in d.as_bytes().chunks(8) {
                let mut buf = [0u8; 8];
                buf[..chunk.len()].copy_from_slice(chunk);
                words.push(u64::from_le_bytes(buf));
            }
        }
        Self {
            words,
            stride,
            ones: descs.iter().map(|d| d.count_ones() as u32).collect(),
        }
    }

    fn get(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    fn len(&self) -> usize {
        self.ones.len()
    }
}

fn nearest_packed(q: &[u64], q_ones: u32, trains: &Packed, n_bits: u32, metric: MetricId) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for ti in 0..trains.len() {
        let f11: u32 = q.iter().zip(trains.get(ti)).map(|(a, b)| (a & b).count_ones()).sum();
        let c = ContingencyCounts::from_overlap(n_bits, q_ones, trains.ones[ti], f11);
        let d = distance(metric, &c);
        if d < best.1 {
            best = (ti, d);
        }
    }
    best
}

/// Matches every query to its nearest train descriptor.
///
/// With `cross_check`, a pair survives only if the query is also the
/// nearest query of its train descriptor. The output is sorted by
/// `query_idx` and does not depend on the size of the rayon pool.
pub fn brute_force_match(
    queries: &[BinaryDescriptor],
    trains: &[BinaryDescriptor],
    metric: MetricId,
    cross_check: bool,
) -> Result<Vec<MatchPair>> {
    if queries.is_empty() || trains.is_empty() {
        return Err(Error::EmptySet);
    }
    let width = queries[0].n_bits();
    if let Some(bad) = queries.iter().chain(trains).find(|d| d.n_bits() != width) {
        return Err(Error::DescriptorLength {
            left: width,
            right: bad.n_bits(),
        });
    }

    let n_bits = width as u32;
    let packed_q = Packed::new(queries);
    let packed_t = Packed::new(trains);
    let forward: Vec<MatchPair> = (0..queries.len())
        .into_par_iter()
        .map(|qi| {
            let (ti, dist) = nearest_packed(packed_q.get(qi), packed_q.ones[qi], &packed_t, n_bits, metric);
            MatchPair {
                query_idx: qi,
                train_idx: ti,
                dist,
            }
        })
        .collect();

    if !cross_check {
        return Ok(forward);
    }

    let mut used = vec![false; trains.len()];
    for m in &forward {
        used[m.train_idx] = true;
    }
    let backward: Vec<Option<usize>> = (0..trains.len())
        .into_par_iter()
        .map(|ti| {
            used[ti].then(|| nearest_packed(packed_t.get(ti), packed_t.ones[ti], &packed_q, n_bits, metric).0)
        })
        .collect();

    Ok(forward
        .into_iter()
        .filter(|m| backward[m.train_idx] == Some(m.query_idx))
        .collect())
}
