//! Gaussian-blob instances and a multi-restart Lloyd's k-means oracle,
//! written independently of the library's clustering code.

#![allow(dead_code)]

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Blobs {
    pub k: usize,
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
    pub truth: Vec<usize>,
}

/// `k` isotropic unit-variance blobs whose centers are at least
/// `separation` apart, `per_blob` rows each, rows interleaved across blobs.
pub fn blobs(seed: u64, k: usize, dim: usize, per_blob: usize, separation: f64) -> Blobs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = Vec::new();
    while centers.len() < k {
        let c: Vec<f64> = (0..dim)
            .map(|_| rng.random_range(-4.0..4.0) * separation)
            .collect();
        if centers.iter().all(|o| dist2(o, &c).sqrt() >= separation) {
            centers.push(c);
        }
    }
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for _ in 0..per_blob {
        for (b, c) in centers.iter().enumerate() {
            rows.push(
                c.iter()
                    .map(|x| x + rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
            truth.push(b);
        }
    }
    Blobs {
        k,
        dim,
        rows,
        truth,
    }
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub struct LloydFit {
    pub assignments: Vec<usize>,
    pub sse: f64,
}

fn lloyd_once(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> LloydFit {
    let dim = rows[0].len();
    let mut centers: Vec<Vec<f64>> = sample(rng, rows.len(), k)
        .iter()
        .map(|i| rows[i].clone())
        .collect();
    let mut assignments = vec![usize::MAX; rows.len()];
    for _ in 0..1000 {
        let next: Vec<usize> = rows
            .iter()
            .map(|r| {
                (0..k)
                    .min_by(|a, b| dist2(r, &centers[*a]).total_cmp(&dist2(r, &centers[*b])))
                    .unwrap()
            })
            .collect();
        if next == assignments {
            break;
        }
        assignments = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = rows
                .iter()
                .zip(&assignments)
                .filter(|(_, a)| **a == c)
                .map(|(r, _)| r)
                .collect();
            if !members.is_empty() {
                *center = (0..dim)
                    .map(|j| members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64)
                    .collect();
            }
        }
    }
    let sse = rows
        .iter()
        .zip(&assignments)
        .map(|(r, a)| dist2(r, &centers[*a]))
        .sum();
    LloydFit { assignments, sse }
}

/// Best of `restarts` Lloyd runs from uniformly sampled distinct seed rows.
pub fn lloyd_oracle(rows: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> LloydFit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..restarts)
        .map(|_| lloyd_once(rows, k, &mut rng))
        .min_by(|a, b| a.sse.total_cmp(&b.sse))
        .unwrap()
}

/// True when two labelings induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    use std::collections::HashMap;
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.iter()
        .zip(b)
        .all(|(x, y)| *fwd.entry(*x).or_insert(*y) == *y && *back.entry(*y).or_insert(*x) == *x)
}
