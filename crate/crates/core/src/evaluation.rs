//! Scoring clusterings against ground-truth case labels, and the two
//! experiments built on it: severity detection and progressive localization.

use std::fmt;
use std::fmt::Write as _;

use crate::clustering::{distinct_rows, BisectingKMeans, ClusteringResult};
use crate::dataset::{
    default_cases, generate_dataset, select_features, severity_cases, standardize, Dataset,
    Feature, FeatureMatrix,
};
use crate::hungarian::max_weight_assignment;
use crate::linkmodel::{LinkConfig, TapLocation};
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Cluster × label count table.
#[derive(Debug, Clone, PartialEq)]
pub struct Contingency {
    /// Cluster ids, ascending.
    pub clusters: Vec<usize>,
    /// Labels in order of first appearance.
    pub labels: Vec<String>,
    /// `counts[c][l]`: rows of `clusters[c]` carrying `labels[l]`.
    pub counts: Vec<Vec<usize>>,
}

impl Contingency {
    pub fn new<L: AsRef<str>>(assignments: &[usize], labels: &[L]) -> Result<Self> {
        if assignments.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: assignments.len(),
                found: labels.len(),
            });
        }
        if assignments.is_empty() {
            return Err(Error::InvalidArgument("nothing to score".into()));
        }
        let mut clusters = assignments.to_vec();
        clusters.sort_unstable();
        clusters.dedup();
        let mut names: Vec<String> = Vec::new();
        for l in labels {
            if !names.iter().any(|n| n == l.as_ref()) {
                names.push(l.as_ref().to_string());
            }
        }
        let mut counts = vec![vec![0; names.len()]; clusters.len()];
        for (a, l) in assignments.iter().zip(labels) {
            let c = clusters.binary_search(a).expect("cluster id present");
            let j = names
                .iter()
                .position(|n| n == l.as_ref())
                .expect("label present");
            counts[c][j] += 1;
        }
        Ok(Self {
            clusters,
            labels: names,
            counts,
        })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

/// Optimal one-to-one cluster → label matching.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatch {
    pub rate: f64,
    pub matched: usize,
    /// `(cluster id, label)` pairs of the matching; unmatched clusters are absent.
    pub mapping: Vec<(usize, String)>,
    pub contingency: Contingency,
}

/// Fraction of rows whose cluster is matched to their own label under the
/// agreement-maximizing one-to-one mapping. Surplus clusters or labels stay
/// unmatched and count as misses.
pub fn label_matching_rate<L: AsRef<str>>(
    assignments: &[usize],
    labels: &[L],
) -> Result<LabelMatch> {
    let contingency = Contingency::new(assignments, labels)?;
    let weights: Vec<Vec<i64>> = contingency
        .counts
        .iter()
        .map(|row| row.iter().map(|c| *c as i64).collect())
        .collect();
    let assignment = max_weight_assignment(&weights);
    let mut matched = 0;
    let mut mapping = Vec::new();
    for (c, label) in assignment.iter().enumerate() {
        if let Some(l) = label {
            matched += contingency.counts[c][*l];
            mapping.push((contingency.clusters[c], contingency.labels[*l].clone()));
        }
    }
    Ok(LabelMatch {
        rate: matched as f64 / assignments.len() as f64,
        matched,
        mapping,
        contingency,
    })
}

/// Scores of one clustering run, mirroring the columns of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub name: String,
    pub feature_subset: Vec<String>,
    pub k_requested: usize,
    /// Clusters actually produced. Lower than `k_requested` only when the
    /// feature subset has fewer distinct rows than requested.
    pub k: usize,
    pub label_matching_rate: f64,
    pub sse_total: f64,
    pub sse_per_dimension: f64,
    pub confusion: Contingency,
}

/// A clustered, scored feature matrix.
#[derive(Debug, Clone)]
pub struct ScoredRun {
    pub report: EvalReport,
    /// Standardized points that were clustered.
    pub points: FeatureMatrix,
    pub labels: Vec<String>,
    pub clustering: ClusteringResult,
}

/// Standardizes `raw`, clusters it into `k` groups and scores the result.
///
/// `scored_rows` restricts scoring to a subset of rows (all rows are still
/// clustered). When the matrix has fewer distinct rows than `k`, every
/// distinct row becomes its own cluster.
pub fn cluster_and_score(
    name: &str,
    raw: &FeatureMatrix,
    labels: Vec<String>,
    k: usize,
    scored_rows: Option<&[usize]>,
) -> Result<ScoredRun> {
    if labels.len() != raw.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: raw.n_rows(),
            found: labels.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let points = standardize(raw)?;
    let k_eff = k.min(distinct_rows(&points));
    let clustering = BisectingKMeans::new(k_eff).fit(&points)?;

    let (assign, truth): (Vec<usize>, Vec<&str>) = match scored_rows {
        Some(rows) => rows
            .iter()
            .map(|&i| (clustering.assignments[i], labels[i].as_str()))
            .unzip(),
        None => clustering
            .assignments
            .iter()
            .copied()
            .zip(labels.iter().map(String::as_str))
            .unzip(),
    };
    let matching = label_matching_rate(&assign, &truth)?;
    let dims = raw.n_features() as f64;
    let report = EvalReport {
        name: name.to_string(),
        feature_subset: raw.feature_names(),
        k_requested: k,
        k: clustering.k,
        label_matching_rate: matching.rate,
        sse_total: clustering.total_sse,
        sse_per_dimension: clustering.total_sse / dims,
        confusion: matching.contingency,
    };
    Ok(ScoredRun {
        report,
        points,
        labels,
        clustering,
    })
}

/// One loss level of the detection experiment.
#[derive(Debug, Clone)]
pub struct DetectionRun {
    pub loss_db: f64,
    pub run: ScoredRun,
}

/// For every loss level: no-tap versus pre-booster tap, receiver-side
/// features only, two clusters.
///
/// Loss level `j` uses its own dataset seeded with `derive_seed(seed, j)`.
pub fn detection_experiment(
    config: &LinkConfig,
    loss_levels: &[f64],
    n_per_case: usize,
    seed: u64,
) -> Result<Vec<DetectionRun>> {
    if loss_levels.is_empty() {
        return Err(Error::InvalidArgument("no loss levels given".into()));
    }
    if let Some(bad) = loss_levels.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "loss level must be positive, got {bad}"
        )));
    }
    loss_levels
        .iter()
        .enumerate()
        .map(|(j, &loss)| {
            let cases = severity_cases(&[loss])?;
            let dataset =
                generate_dataset(config, &cases, n_per_case, derive_seed(seed, j as u64))?;
            let raw = select_features(&dataset, &Feature::RECEIVER)?;
            let labels = dataset.labels().map(String::from).collect();
            let run = cluster_and_score(&format!("{loss}dB"), &raw, labels, 2, None)?;
            Ok(DetectionRun { loss_db: loss, run })
        })
        .collect()
}

/// Which rows a localization plan clusters and which labels it is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanScope {
    /// All rows, scored on normal / before-booster / after-booster.
    Rough,
    /// All rows clustered; scored on the after-booster rows against span labels.
    RoughSpans,
    /// All rows, scored on normal / tx / prebooster / merged after-booster.
    BeforeBooster,
    /// After-booster rows only, scored on span labels.
    AfterBooster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanGroup {
    Rough,
    Before,
    After,
}

impl PlanGroup {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rough" => Ok(PlanGroup::Rough),
            "before" => Ok(PlanGroup::Before),
            "after" => Ok(PlanGroup::After),
            _ => Err(Error::InvalidArgument(format!("unknown plan group `{s}`"))),
        }
    }
}

impl fmt::Display for PlanGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanGroup::Rough => "rough",
            PlanGroup::Before => "before",
            PlanGroup::After => "after",
        })
    }
}

impl PlanScope {
    pub fn group(self) -> PlanGroup {
        match self {
            PlanScope::Rough | PlanScope::RoughSpans => PlanGroup::Rough,
            PlanScope::BeforeBooster => PlanGroup::Before,
            PlanScope::AfterBooster => PlanGroup::After,
        }
    }

    /// Scoring label of a row tapped at `location` under this scope.
    pub fn label(self, location: TapLocation) -> String {
        match (self, location) {
            (_, TapLocation::None) => "normal".into(),
            (PlanScope::Rough, l) if l.is_before_booster() => "before-booster".into(),
            (PlanScope::Rough | PlanScope::BeforeBooster, TapLocation::Span(_)) => {
                "after-booster".into()
            }
            (_, l) => l.to_string(),
        }
    }
}

/// A feature combination to cluster the localization dataset with.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePlan {
    pub id: String,
    pub scope: PlanScope,
    pub features: Vec<Feature>,
    pub k: usize,
}

impl FeaturePlan {
    pub fn new(id: impl Into<String>, scope: PlanScope, features: Vec<Feature>, k: usize) -> Self {
        Self {
            id: id.into(),
            scope,
            features,
            k,
        }
    }
}

/// The standard plan set for an `n_spans` line: rough clustering with and
/// without BER, the forced K = 4 receiver-only run, the before-booster runs
/// with P_tx or P_link, and the span-power runs with all N powers and with
/// every N − 1 subset.
pub fn default_plans(n_spans: usize) -> Vec<FeaturePlan> {
    use Feature::*;
    let mut plans = vec![
        FeaturePlan::new(
            "rough-osnr-ber-prx",
            PlanScope::Rough,
            vec![Osnr, Ber, PRx],
            3,
        ),
        FeaturePlan::new("rough-osnr-prx", PlanScope::Rough, vec![Osnr, PRx], 3),
        FeaturePlan::new(
            "rough-rx-k4",
            PlanScope::RoughSpans,
            vec![Osnr, Ber, PRx],
            4,
        ),
        FeaturePlan::new(
            "before-osnr-ber-prx-ptx",
            PlanScope::BeforeBooster,
            vec![Osnr, Ber, PRx, PTx],
            4,
        ),
        FeaturePlan::new(
            "before-osnr-ber-prx-plink",
            PlanScope::BeforeBooster,
            vec![Osnr, Ber, PRx, PLink],
            4,
        ),
        FeaturePlan::new(
            "before-osnr-prx-ptx",
            PlanScope::BeforeBooster,
            vec![Osnr, PRx, PTx],
            4,
        ),
        FeaturePlan::new(
            "after-all-spans",
            PlanScope::AfterBooster,
            Feature::span_powers(n_spans),
            n_spans,
        ),
    ];
    if n_spans > 1 {
        for skip in 1..=n_spans {
            let features = (1..=n_spans).filter(|i| *i != skip).map(PSpan).collect();
            plans.push(FeaturePlan::new(
                format!("after-without-span{skip}"),
                PlanScope::AfterBooster,
                features,
                n_spans,
            ));
        }
    }
    plans
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub plan: FeaturePlan,
    pub run: ScoredRun,
}

#[derive(Debug, Clone)]
pub struct Localization {
    pub dataset: Dataset,
    pub outcomes: Vec<PlanOutcome>,
}

/// Runs `plans` over one shared dataset of the default localization cases.
pub fn localization_experiment(
    config: &LinkConfig,
    n_per_case: usize,
    seed: u64,
    plans: &[FeaturePlan],
) -> Result<Localization> {
    let dataset = generate_dataset(config, &default_cases(config)?, n_per_case, seed)?;
    let outcomes = plans
        .iter()
        .map(|plan| {
            run_plan(&dataset, plan).map(|run| PlanOutcome {
                plan: plan.clone(),
                run,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Localization { dataset, outcomes })
}

/// Clusters `dataset` according to `plan`.
pub fn run_plan(dataset: &Dataset, plan: &FeaturePlan) -> Result<ScoredRun> {
    let scope = plan.scope;
    let rows = if scope == PlanScope::AfterBooster {
        dataset.filter(|r| r.event.location.is_after_booster())?
    } else {
        dataset.clone()
    };
    let raw = select_features(&rows, &plan.features)?;
    let labels: Vec<String> = rows
        .records()
        .iter()
        .map(|r| scope.label(r.event.location))
        .collect();
    let scored: Option<Vec<usize>> = (scope == PlanScope::RoughSpans).then(|| {
        rows.records()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.event.location.is_after_booster())
            .map(|(i, _)| i)
            .collect()
    });
    cluster_and_score(&plan.id, &raw, labels, plan.k, scored.as_deref())
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Detection summary: one row per loss level.
pub fn detection_table_csv(runs: &[DetectionRun]) -> String {
    let mut out = String::from("loss_db,k,label_matching_rate,sse,sse_per_dimension\n");
    for d in runs {
        let r = &d.run.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(d.loss_db),
            r.k,
            num(r.label_matching_rate),
            num(r.sse_total),
            num(r.sse_per_dimension)
        );
    }
    out
}

/// Localization summary: one row per plan.
pub fn localization_table_csv(outcomes: &[PlanOutcome]) -> String {
    let mut out = String::from(
        "plan,group,feature_subset,k_requested,k,label_matching_rate,sse,sse_per_dimension\n",
    );
    for o in outcomes {
        let _ = writeln!(
            out,
            "{},{},{}",
            o.plan.id,
            o.plan.scope.group(),
            report_fields(&o.run.report)
        );
    }
    out
}

/// Single-report table with the same columns as the localization table minus plan/group.
pub fn report_csv(report: &EvalReport) -> String {
    format!(
        "feature_subset,k_requested,k,label_matching_rate,sse,sse_per_dimension\n{}\n",
        report_fields(report)
    )
}

fn report_fields(r: &EvalReport) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.feature_subset.join("+"),
        r.k_requested,
        r.k,
        num(r.label_matching_rate),
        num(r.sse_total),
        num(r.sse_per_dimension)
    )
}

/// Plot-ready dump: label, cluster and the standardized features of every row.
pub fn scatter_csv(run: &ScoredRun) -> String {
    let mut out = format!("label,cluster,{}\n", run.points.feature_names().join(","));
    for (i, row) in run.points.rows().enumerate() {
        let _ = write!(out, "{},{}", run.labels[i], run.clustering.assignments[i]);
        for x in row {
            let _ = write!(out, ",{}", num(*x));
        }
        out.push('\n');
    }
    out
}
