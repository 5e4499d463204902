//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails. Tolerances are the constants below.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as RunnerConfig, TestRunner};
use taplab::{cmd_detect, cmd_generate, cmd_localize, Common, MANIFEST_FILE};
use taplab_core::clustering::BisectingKMeans;
use taplab_core::dataset::{default_cases, generate_dataset, Feature, SEVERITY_LEVELS_DB};
use taplab_core::evaluation::{
    default_plans, detection_experiment, localization_experiment, run_plan, FeaturePlan,
    Localization, PlanScope,
};
use taplab_core::linkmodel::{propagate, sample_opm, LinkConfig, TapEvent, TapLocation};
use taplab_core::seed::case_rng;

const SEEDS: std::ops::Range<u64> = 0..10;
const NOISE_FIGURES_DB: [f64; 4] = [4.0, 5.0, 6.0, 7.0];
const SAMPLES_PER_CASE: usize = 200;
const RX_K4_MAX_RATE: f64 = 0.9;
const PLINK_MAX_RATE: f64 = 0.75;
const ORACLE_INSTANCES: u64 = 25;
const ORACLE_RESTARTS: usize = 100;
const ORACLE_SSE_REL_TOL: f64 = 1e-6;
const ORACLE_SEPARATION: f64 = 10.0;
const PROPERTY_CASES: u32 = 100;
const PHYSICS_EPS: f64 = 1e-9;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: impl Into<String>, bad: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(bad.into())
    }
}

fn nf_config(nf: f64) -> LinkConfig {
    LinkConfig {
        noise_figure_db: nf,
        ..LinkConfig::default()
    }
}

/// Localization runs for every (NF, seed) pair, computed once.
struct Sweep {
    runs: Vec<(f64, u64, Localization)>,
}

impl Sweep {
    fn new() -> Self {
        let mut runs = Vec::new();
        for nf in NOISE_FIGURES_DB {
            let cfg = nf_config(nf);
            let plans = default_plans(cfg.n_spans);
            for seed in SEEDS {
                let loc = localization_experiment(&cfg, SAMPLES_PER_CASE, seed, &plans).unwrap();
                runs.push((nf, seed, loc));
            }
        }
        Self { runs }
    }

    /// Lowest rate over the sweep (highest when `worst_is_max`) with its nf and seed.
    fn extreme(&self, id: &str, worst_is_max: bool) -> (f64, f64, u64) {
        let mut best: Option<(f64, f64, u64)> = None;
        for (nf, seed, loc) in &self.runs {
            let rate = plan_rate(loc, id);
            let replace = match best {
                None => true,
                Some((r, _, _)) => (worst_is_max && rate > r) || (!worst_is_max && rate < r),
            };
            if replace {
                best = Some((rate, *nf, *seed));
            }
        }
        best.unwrap()
    }
}

fn plan_rate(loc: &Localization, id: &str) -> f64 {
    loc.outcomes
        .iter()
        .find(|o| o.plan.id == id)
        .unwrap_or_else(|| panic!("missing plan {id}"))
        .run
        .report
        .label_matching_rate
}

fn ac1_ac2() -> (Outcome, Outcome) {
    let mut rate_failures = Vec::new();
    let mut order_failures = Vec::new();
    for nf in NOISE_FIGURES_DB {
        let cfg = nf_config(nf);
        for seed in SEEDS {
            let runs =
                detection_experiment(&cfg, &SEVERITY_LEVELS_DB, SAMPLES_PER_CASE, seed).unwrap();
            for d in &runs {
                if d.run.report.label_matching_rate != 1.0 {
                    rate_failures.push(format!(
                        "nf {nf} seed {seed} loss {}: {}",
                        d.loss_db, d.run.report.label_matching_rate
                    ));
                }
            }
            if runs
                .windows(2)
                .any(|w| w[1].run.report.sse_total >= w[0].run.report.sse_total)
            {
                let sse: Vec<String> = runs
                    .iter()
                    .map(|d| format!("{:.4}", d.run.report.sse_total))
                    .collect();
                order_failures.push(format!("nf {nf} seed {seed}: [{}]", sse.join(", ")));
            }
        }
    }
    let runs = NOISE_FIGURES_DB.len() * SEEDS.count();
    (
        check(
            rate_failures.is_empty(),
            format!("rate 1.0 at all 6 losses over {runs} runs (NF 4-7 dB x 10 seeds)"),
            rate_failures.join("; "),
        ),
        check(
            order_failures.is_empty(),
            format!("SSE strictly decreasing in loss over {runs} runs"),
            order_failures.join("; "),
        ),
    )
}

fn ac3(sweep: &Sweep) -> Outcome {
    let a = sweep.extreme("rough-osnr-ber-prx", false);
    let b = sweep.extreme("rough-osnr-prx", false);
    check(
        a.0 == 1.0 && b.0 == 1.0,
        "{osnr,ber,p_rx} and {osnr,p_rx} K=3 rate 1.0 on every run",
        format!("min rates {:?} / {:?} (rate, nf, seed)", a, b),
    )
}

fn ac4(sweep: &Sweep) -> Outcome {
    let worst = sweep.extreme("rough-rx-k4", true);
    check(
        worst.0 < RX_K4_MAX_RATE,
        format!(
            "receiver-only K=4 max rate {:.4} < {RX_K4_MAX_RATE}",
            worst.0
        ),
        format!("rate {:.4} at nf {} seed {}", worst.0, worst.1, worst.2),
    )
}

fn ac5(sweep: &Sweep) -> Outcome {
    let ptx = sweep.extreme("before-osnr-ber-prx-ptx", false);
    let plink = sweep.extreme("before-osnr-ber-prx-plink", true);
    check(
        ptx.0 == 1.0 && plink.0 < PLINK_MAX_RATE,
        format!(
            "p_tx min rate {}, p_link max rate {:.4} < {PLINK_MAX_RATE}",
            ptx.0, plink.0
        ),
        format!(
            "p_tx min {:?}, p_link max {:?} (rate, nf, seed)",
            ptx, plink
        ),
    )
}

/// Minimum rate over seeds of each span-power subset, clustered with K = N
/// on the after-booster rows.
fn span_subset_rates(n_spans: usize, subset_size: usize) -> BTreeMap<String, f64> {
    let cfg = LinkConfig::with_spans(n_spans, 10.0);
    let plans: Vec<FeaturePlan> = subsets(n_spans, subset_size)
        .into_iter()
        .map(|s| {
            let id = s
                .iter()
                .map(|i| format!("p{i}"))
                .collect::<Vec<_>>()
                .join("+");
            FeaturePlan::new(
                id,
                PlanScope::AfterBooster,
                s.into_iter().map(Feature::PSpan).collect(),
                n_spans,
            )
        })
        .collect();
    let mut min = BTreeMap::new();
    for seed in SEEDS {
        let data =
            generate_dataset(&cfg, &default_cases(&cfg).unwrap(), SAMPLES_PER_CASE, seed).unwrap();
        for plan in &plans {
            let rate = run_plan(&data, plan).unwrap().report.label_matching_rate;
            let e = min.entry(plan.id.clone()).or_insert(f64::INFINITY);
            *e = f64::min(*e, rate);
        }
    }
    min
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (1..=n).filter(|i| m & (1 << (i - 1)) != 0).collect())
        .collect()
}

fn ac6() -> (Outcome, Outcome, Outcome) {
    let all = span_subset_rates(4, 4);
    let all_rate = all.values().copied().fold(f64::INFINITY, f64::min);
    let full = check(
        all_rate == 1.0,
        "N=4 all span powers rate 1.0 over 10 seeds",
        format!("min rate {all_rate}"),
    );

    let mut failing = Vec::new();
    for n in [3, 4, 5] {
        for (id, rate) in span_subset_rates(n, n - 1) {
            if rate != 1.0 {
                failing.push(format!("N={n} {id}: {rate:.4}"));
            }
        }
    }
    let n_minus_1 = check(
        failing.is_empty(),
        "every (N-1)-subset rate 1.0 for N in {3,4,5}",
        format!(
            "{} subsets below 1.0: {}",
            failing.len(),
            failing.join("; ")
        ),
    );

    let mut missing = Vec::new();
    for n in [3, 5] {
        let rates = span_subset_rates(n, n - 2);
        if rates.values().all(|r| *r == 1.0) {
            missing.push(format!("N={n}"));
        }
    }
    let n_minus_2 = check(
        missing.is_empty(),
        "some (N-2)-subset falls below 1.0 for N in {3,5}",
        format!("all (N-2)-subsets reach 1.0 for {}", missing.join(", ")),
    );
    (full, n_minus_1, n_minus_2)
}

fn ac7() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_rel = 0.0f64;
    for instance in 0..ORACLE_INSTANCES {
        let k = 2 + (instance % 3) as usize;
        let dim = 2 + (instance % 4) as usize;
        let b = support::blobs(7000 + instance, k, dim, 40, ORACLE_SEPARATION);
        let ours = BisectingKMeans::new(k).fit_rows(&b.rows).unwrap();
        let oracle = support::lloyd_oracle(&b.rows, k, ORACLE_RESTARTS, instance);
        let rel = (ours.total_sse - oracle.sse).abs() / oracle.sse;
        worst_rel = worst_rel.max(rel);
        if rel > ORACLE_SSE_REL_TOL
            || !support::same_partition(&ours.assignments, &oracle.assignments)
        {
            failures.push(format!(
                "instance {instance} (k {k}, dim {dim}): rel {rel:.3e}"
            ));
        }
    }
    check(
        failures.is_empty(),
        format!("{ORACLE_INSTANCES} blob instances match, worst SSE rel diff {worst_rel:.2e}"),
        failures.join("; "),
    )
}

fn physics_config() -> impl Strategy<Value = LinkConfig> {
    (
        prop::collection::vec(5.0f64..25.0, 1..7),
        -3.0f64..3.0,
        7.0f64..40.0,
        -3.0f64..3.0,
        4.0f64..7.0,
    )
        .prop_map(|(spans, launch, input_loss, target, nf)| LinkConfig {
            n_spans: spans.len(),
            span_loss_db: spans,
            launch_power_dbm: launch,
            booster_input_loss_db: input_loss,
            booster_target_dbm: target,
            noise_figure_db: nf,
            ..LinkConfig::default()
        })
}

fn tapped_config() -> impl Strategy<Value = (LinkConfig, TapLocation, f64)> {
    physics_config().prop_flat_map(|c| {
        let n = c.n_spans;
        let loc = prop_oneof![
            Just(TapLocation::Transmitter),
            Just(TapLocation::PreBooster),
            (1..=n).prop_map(TapLocation::Span),
        ];
        (Just(c), loc, 0.1f64..5.0)
    })
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(RunnerConfig {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..RunnerConfig::default()
    });
    runner
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn cv(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt() / mean.abs()
}

fn ac8() -> Outcome {
    let results = [
        run_property(
            "budget conservation",
            tapped_config(),
            |(cfg, loc, loss)| {
                let s = propagate(&cfg, &TapEvent::new(loc, loss).unwrap()).unwrap();
                let span = match loc {
                    TapLocation::Span(i) => Some(i),
                    _ => None,
                };
                let rx = cfg.booster_target_dbm - if span.is_some() { loss } else { 0.0 };
                prop_assert!((s.p_rx_dbm - rx).abs() < PHYSICS_EPS);
                for (j, p) in s.p_span_dbm.iter().enumerate() {
                    let hit = span.is_some_and(|i| i <= j + 1);
                    let want =
                        cfg.booster_target_dbm - cfg.span_loss_db[j] - if hit { loss } else { 0.0 };
                    prop_assert!((p - want).abs() < PHYSICS_EPS);
                }
                Ok(())
            },
        ),
        run_property(
            "pre-booster compensation",
            tapped_config(),
            |(cfg, loc, loss)| {
                prop_assume!(loc.is_before_booster());
                let base = propagate(&cfg, &TapEvent::none()).unwrap();
                let s = propagate(&cfg, &TapEvent::new(loc, loss).unwrap()).unwrap();
                for (a, b) in s.p_span_dbm.iter().zip(&base.p_span_dbm) {
                    prop_assert!((a - b).abs() < PHYSICS_EPS);
                }
                prop_assert!((s.p_rx_dbm - base.p_rx_dbm).abs() < PHYSICS_EPS);
                Ok(())
            },
        ),
        run_property(
            "OSNR monotonicity",
            (tapped_config(), 0.1f64..3.0),
            |((cfg, loc, loss), extra)| {
                let base = propagate(&cfg, &TapEvent::none()).unwrap().osnr_db;
                let low = propagate(&cfg, &TapEvent::new(loc, loss).unwrap())
                    .unwrap()
                    .osnr_db;
                let high = propagate(&cfg, &TapEvent::new(loc, loss + extra).unwrap())
                    .unwrap()
                    .osnr_db;
                prop_assert!(low < base && high < low);
                Ok(())
            },
        ),
        run_property(
            "Tx/PreBooster equivalence",
            (physics_config(), 0.1f64..5.0),
            |(cfg, loss)| {
                let tx = propagate(
                    &cfg,
                    &TapEvent::new(TapLocation::Transmitter, loss).unwrap(),
                )
                .unwrap();
                let pre = propagate(&cfg, &TapEvent::new(TapLocation::PreBooster, loss).unwrap())
                    .unwrap();
                prop_assert_eq!(
                    (tx.osnr_db, tx.ber, tx.p_rx_dbm),
                    (pre.osnr_db, pre.ber, pre.p_rx_dbm)
                );
                prop_assert!(tx.p_tx_dbm != pre.p_tx_dbm);
                Ok(())
            },
        ),
        run_property(
            "BER dispersion",
            (38.0f64..42.0, 5.0f64..7.0, 0.01f64..0.05, any::<u64>()),
            |(input_loss, nf, sigma, seed)| {
                let cfg = LinkConfig {
                    booster_input_loss_db: input_loss,
                    noise_figure_db: nf,
                    osnr_noise_sigma_db: sigma,
                    ..LinkConfig::default()
                };
                let clean = propagate(&cfg, &TapEvent::none()).unwrap();
                prop_assume!(clean.ber * cfg.n_bits_per_ber as f64 >= 3.0);
                let mut rng = case_rng(seed, 0);
                let draws: Vec<_> = (0..200)
                    .map(|_| sample_opm(&cfg, &TapEvent::none(), &mut rng).unwrap())
                    .collect();
                let ber: Vec<f64> = draws.iter().map(|s| s.ber).collect();
                let osnr: Vec<f64> = draws.iter().map(|s| s.osnr_db).collect();
                prop_assert!(cv(&ber) > cv(&osnr));
                Ok(())
            },
        ),
    ];
    let failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    check(
        failures.is_empty(),
        format!("5 physics properties x {PROPERTY_CASES} cases"),
        failures.join("; "),
    )
}

fn read_outputs(dir: &Path) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let mut text = std::fs::read_to_string(&path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name == MANIFEST_FILE {
            let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
            json.as_object_mut().unwrap().remove("duration_seconds");
            text = json.to_string();
        }
        files.insert(name, text);
    }
    files
}

fn ac9() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut compared = 0;
    for command in ["generate", "detect", "localize"] {
        let outputs: Vec<_> = (0..2)
            .map(|rep| {
                let common = Common {
                    config: LinkConfig::default(),
                    seed: 42,
                    out_dir: root.path().join(format!("{command}-{rep}")),
                    samples_per_case: SAMPLES_PER_CASE,
                };
                match command {
                    "generate" => drop(cmd_generate(&common).unwrap()),
                    "detect" => drop(cmd_detect(&common, &SEVERITY_LEVELS_DB).unwrap()),
                    _ => drop(cmd_localize(&common, &[]).unwrap()),
                }
                read_outputs(&common.out_dir)
            })
            .collect();
        compared += outputs[0].len();
        if outputs[0] != outputs[1] {
            differing.push(command);
        }
    }
    check(
        differing.is_empty(),
        format!("{compared} files byte-identical across reruns"),
        format!("outputs differ for {}", differing.join(", ")),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut results: Vec<(&str, &str, Outcome)> = Vec::new();

    let (ac1, ac2) = ac1_ac2();
    results.push(("AC1", "detection rate 1.0 at every loss", ac1));
    results.push(("AC2", "SSE decreasing with loss", ac2));
    let sweep = Sweep::new();
    results.push(("AC3", "rough localization", ac3(&sweep)));
    results.push(("AC4", "receiver-only K=4 fails on spans", ac4(&sweep)));
    results.push(("AC5", "p_tx separates, p_link does not", ac5(&sweep)));
    let (full, n1, n2) = ac6();
    results.push(("AC6a", "all span powers localize", full));
    results.push(("AC6b", "every N-1 span-power subset localizes", n1));
    results.push(("AC6c", "some N-2 span-power subset fails", n2));
    results.push(("AC7", "bisecting k-means matches Lloyd oracle", ac7()));
    results.push(("AC8", "physics invariants", ac8()));
    results.push(("AC9", "byte-identical reruns", ac9()));

    let mut failed = 0;
    for (id, title, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {id} {title}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {title}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
