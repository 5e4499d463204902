//! Deterministic bisecting k-means.
//!
//! Every cluster starts as one group holding all rows. The cluster with the
//! largest SSE is split in two by [`two_means`] until `k` clusters exist.
//! Splits are seeded from extreme rows rather than random draws, so a run is a
//! pure function of its input matrix.

use crate::dataset::FeatureMatrix;
use crate::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 300;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum of squared Euclidean distances from `points` to `center`.
pub fn sse<'a, I>(points: I, center: &[f64]) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut total = 0.0;
    for p in points {
        if p.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                found: p.len(),
            });
        }
        total += sq_dist(p, center);
    }
    Ok(total)
}

/// Row-major data with a fixed dimension; rows are addressed by index.
#[derive(Clone, Copy)]
struct Points<'a> {
    values: &'a [f64],
    dim: usize,
}

impl<'a> Points<'a> {
    fn row(&self, i: usize) -> &'a [f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    fn mean(&self, idx: &[usize]) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for &i in idx {
            for (acc, x) in m.iter_mut().zip(self.row(i)) {
                *acc += x;
            }
        }
        let n = idx.len() as f64;
        m.iter_mut().for_each(|x| *x /= n);
        m
    }

    fn sse(&self, idx: &[usize], center: &[f64]) -> f64 {
        idx.iter().map(|&i| sq_dist(self.row(i), center)).sum()
    }

    /// Position in `idx` of the row farthest from `target`; lowest position wins ties.
    fn farthest(&self, idx: &[usize], target: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (pos, &i) in idx.iter().enumerate() {
            let d = sq_dist(self.row(i), target);
            if d > best.1 {
                best = (pos, d);
            }
        }
        best
    }
}

/// Outcome of one two-way split.
#[derive(Debug, Clone, PartialEq)]
pub struct Bisection {
    /// Group (0 or 1) of every input row, in input order.
    pub assignments: Vec<usize>,
    pub centers: [Vec<f64>; 2],
    pub iterations: usize,
    pub converged: bool,
}

/// Splits `points` into two groups with Lloyd iterations.
///
/// Seeds: the row farthest from the centroid, then the row farthest from that
/// one (lowest row index on ties). Iterates until assignments stop changing or
/// `DEFAULT_MAX_ITER` rounds. Fails with [`Error::IndivisibleCluster`] when
/// every row is identical.
pub fn two_means(points: &[Vec<f64>]) -> Result<Bisection> {
    two_means_with(points, DEFAULT_MAX_ITER)
}

pub fn two_means_with(points: &[Vec<f64>], max_iter: usize) -> Result<Bisection> {
    let dim = points.first().map_or(0, Vec::len);
    let mut values = Vec::with_capacity(points.len() * dim);
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        values.extend_from_slice(p);
    }
    let idx: Vec<usize> = (0..points.len()).collect();
    split(
        Points {
            values: &values,
            dim,
        },
        &idx,
        max_iter,
    )
}

fn split(data: Points<'_>, idx: &[usize], max_iter: usize) -> Result<Bisection> {
    if idx.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: idx.len(),
        });
    }
    let centroid = data.mean(idx);
    let (first, _) = data.farthest(idx, &centroid);
    let (second, spread) = data.farthest(idx, data.row(idx[first]));
    if spread == 0.0 {
        return Err(Error::IndivisibleCluster);
    }
    let mut centers = [
        data.row(idx[first]).to_vec(),
        data.row(idx[second]).to_vec(),
    ];

    let assign = |centers: &[Vec<f64>; 2]| -> Vec<usize> {
        idx.iter()
            .map(|&i| {
                let r = data.row(i);
                usize::from(sq_dist(r, &centers[1]) < sq_dist(r, &centers[0]))
            })
            .collect()
    };

    let mut assignments = assign(&centers);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        repair_empty_group(data, idx, &mut assignments, &centers);
        centers = group_means(data, idx, &assignments);
        let next = assign(&centers);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    if !converged {
        repair_empty_group(data, idx, &mut assignments, &centers);
        centers = group_means(data, idx, &assignments);
    }
    Ok(Bisection {
        assignments,
        centers,
        iterations,
        converged,
    })
}

fn group_members(idx: &[usize], assignments: &[usize], group: usize) -> Vec<usize> {
    idx.iter()
        .zip(assignments)
        .filter(|(_, g)| **g == group)
        .map(|(i, _)| *i)
        .collect()
}

fn group_means(data: Points<'_>, idx: &[usize], assignments: &[usize]) -> [Vec<f64>; 2] {
    [
        data.mean(&group_members(idx, assignments, 0)),
        data.mean(&group_members(idx, assignments, 1)),
    ]
}

/// Moves the row farthest from the occupied group's center into an empty group.
fn repair_empty_group(
    data: Points<'_>,
    idx: &[usize],
    assignments: &mut [usize],
    centers: &[Vec<f64>; 2],
) {
    for empty in 0..2 {
        if assignments.iter().all(|g| *g != empty) {
            let other = 1 - empty;
            let (pos, _) = data.farthest(idx, &centers[other]);
            assignments[pos] = empty;
        }
    }
}

/// One bisection in a bisecting k-means run. Cluster ids are creation indices:
/// the initial cluster is 0 and every split creates two new ids.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStep {
    pub parent: usize,
    pub parent_sse: f64,
    pub children: [usize; 2],
    pub children_sse: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub k: usize,
    /// Cluster of every row, in `0..k`. Clusters are numbered by creation order.
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub cluster_sse: Vec<f64>,
    pub total_sse: f64,
    pub split_trace: Vec<SplitStep>,
}

impl ClusteringResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

struct Cluster {
    id: usize,
    members: Vec<usize>,
    center: Vec<f64>,
    sse: f64,
    indivisible: bool,
}

/// Bisecting k-means configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BisectingKMeans {
    pub k: usize,
    pub max_iter: usize,
}

impl BisectingKMeans {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn fit(&self, matrix: &FeatureMatrix) -> Result<ClusteringResult> {
        self.fit_values(matrix.values(), matrix.n_rows(), matrix.n_features())
    }

    pub fn fit_rows(&self, rows: &[Vec<f64>]) -> Result<ClusteringResult> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        self.fit_values(&values, rows.len(), dim)
    }

    fn fit_values(&self, values: &[f64], n_rows: usize, dim: usize) -> Result<ClusteringResult> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if n_rows == 0 || dim == 0 {
            return Err(Error::TooFewRows {
                needed: 1,
                found: n_rows,
            });
        }
        let data = Points { values, dim };
        let distinct = count_distinct_rows(data, n_rows);
        if self.k > distinct {
            return Err(Error::TooManyClusters {
                requested: self.k,
                distinct,
            });
        }

        let all: Vec<usize> = (0..n_rows).collect();
        let center = data.mean(&all);
        let sse = data.sse(&all, &center);
        let mut clusters = vec![Cluster {
            id: 0,
            members: all,
            center,
            sse,
            indivisible: false,
        }];
        let mut next_id = 1;
        let mut trace = Vec::new();

        while clusters.len() < self.k {
            let Some(pos) = pick_largest(&clusters) else {
                // Unreachable while k ≤ distinct rows, kept for safety.
                return Err(Error::TooManyClusters {
                    requested: self.k,
                    distinct,
                });
            };
            let parent = &clusters[pos];
            let bisection = match split(data, &parent.members, self.max_iter) {
                Ok(b) => b,
                Err(Error::IndivisibleCluster) | Err(Error::TooFewRows { .. }) => {
                    clusters[pos].indivisible = true;
                    continue;
                }
                Err(e) => return Err(e),
            };

            let parent = clusters.remove(pos);
            let mut children = [0, 1].map(|g| {
                let members = group_members(&parent.members, &bisection.assignments, g);
                let center = data.mean(&members);
                let sse = data.sse(&members, &center);
                Cluster {
                    id: 0,
                    members,
                    center,
                    sse,
                    indivisible: false,
                }
            });
            children[0].id = next_id;
            children[1].id = next_id + 1;
            next_id += 2;
            trace.push(SplitStep {
                parent: parent.id,
                parent_sse: parent.sse,
                children: [children[0].id, children[1].id],
                children_sse: [children[0].sse, children[1].sse],
            });
            clusters.extend(children);
        }

        clusters.sort_by_key(|c| c.id);
        let mut assignments = vec![0; n_rows];
        for (label, c) in clusters.iter().enumerate() {
            for &i in &c.members {
                assignments[i] = label;
            }
        }
        let cluster_sse: Vec<f64> = clusters.iter().map(|c| c.sse).collect();
        Ok(ClusteringResult {
            k: clusters.len(),
            assignments,
            total_sse: cluster_sse.iter().sum(),
            cluster_sse,
            centers: clusters.into_iter().map(|c| c.center).collect(),
            split_trace: trace,
        })
    }
}

/// Divisible cluster with the largest SSE; lowest creation id on ties.
fn pick_largest(clusters: &[Cluster]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (pos, c) in clusters.iter().enumerate() {
        if c.indivisible {
            continue;
        }
        best = match best {
            None => Some(pos),
            Some(b) => {
                let cur = &clusters[b];
                if c.sse > cur.sse || (c.sse == cur.sse && c.id < cur.id) {
                    Some(pos)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

fn count_distinct_rows(data: Points<'_>, n_rows: usize) -> usize {
    let mut order: Vec<usize> = (0..n_rows).collect();
    let cmp = |a: &usize, b: &usize| {
        data.row(*a)
            .iter()
            .zip(data.row(*b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    order.sort_by(cmp);
    order.dedup_by(|a, b| cmp(a, b).is_eq());
    order.len()
}

/// Number of distinct rows in `matrix`.
pub fn distinct_rows(matrix: &FeatureMatrix) -> usize {
    count_distinct_rows(
        Points {
            values: matrix.values(),
            dim: matrix.n_features(),
        },
        matrix.n_rows(),
    )
}

/// Bisecting k-means with the default iteration cap.
pub fn bisect_kmeans(matrix: &FeatureMatrix, k: usize) -> Result<ClusteringResult> {
    BisectingKMeans::new(k).fit(matrix)
}
