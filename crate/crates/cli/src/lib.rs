//! Commands behind the `taplab` binary. Each command is a pure function of
//! (config, seed, flags) and writes its outputs plus a `manifest.json` into
//! an output directory.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use taplab_core::dataset::{
    default_cases, from_csv, generate_dataset, select_features_with, to_csv_string, BerScale,
    Feature, SEVERITY_LEVELS_DB,
};
use taplab_core::evaluation::{
    cluster_and_score, default_plans, detection_experiment, detection_table_csv,
    localization_experiment, localization_table_csv, report_csv, scatter_csv, PlanGroup,
    PlanOutcome, PlanScope,
};
use taplab_core::linkmodel::LinkConfig;
use thiserror::Error;

pub const ARTIFACT_VERSION: &str = concat!("taplab ", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_SAMPLES_PER_CASE: usize = 200;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Contract(#[from] taplab_core::Error),
}

impl CliError {
    /// Process exit status: 3 config, 4 I/O, 5 contract violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Contract(taplab_core::Error::Io(_)) => 4,
            CliError::Contract(_) => 5,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Default config, or the TOML file at `path`.
pub fn load_config(path: Option<&Path>) -> CliResult<LinkConfig> {
    match path {
        None => Ok(LinkConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            LinkConfig::from_toml_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Options shared by every command.
#[derive(Debug, Clone)]
pub struct Common {
    pub config: LinkConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub samples_per_case: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub artifact_version: &'a str,
    pub seed: u64,
    pub samples_per_case: usize,
    pub parameters: Vec<(String, String)>,
    pub config: &'a LinkConfig,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Collects output files of one command run.
struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(
        mut self,
        command: &str,
        common: &Common,
        parameters: Vec<(String, String)>,
        started: Instant,
    ) -> CliResult<Vec<PathBuf>> {
        let manifest = RunManifest {
            command,
            artifact_version: ARTIFACT_VERSION,
            seed: common.seed,
            samples_per_case: common.samples_per_case,
            parameters,
            config: &common.config,
            outputs: self.written.clone(),
            duration_seconds: started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.write(MANIFEST_FILE, &(json + "\n"))?;
        Ok(self.written.iter().map(|n| self.dir.join(n)).collect())
    }
}

/// Seven default cases → `dataset.csv`.
pub fn cmd_generate(common: &Common) -> CliResult<Vec<PathBuf>> {
    let started = Instant::now();
    let cfg = &common.config;
    let dataset = generate_dataset(
        cfg,
        &default_cases(cfg)?,
        common.samples_per_case,
        common.seed,
    )?;
    let mut out = Outputs::new(&common.out_dir)?;
    out.write("dataset.csv", &to_csv_string(&dataset)?)?;
    out.finish("generate", common, Vec::new(), started)
}

fn loss_tag(loss: f64) -> String {
    format!("{loss}dB")
}

/// Detection table plus one scatter dump per loss level.
pub fn cmd_detect(common: &Common, losses: &[f64]) -> CliResult<(Vec<PathBuf>, String)> {
    let started = Instant::now();
    let runs = detection_experiment(&common.config, losses, common.samples_per_case, common.seed)?;
    let table = detection_table_csv(&runs);
    let mut out = Outputs::new(&common.out_dir)?;
    out.write("detection.csv", &table)?;
    for d in &runs {
        out.write(
            &format!("detect_scatter_{}.csv", loss_tag(d.loss_db)),
            &scatter_csv(&d.run),
        )?;
    }
    let params = vec![("losses".to_string(), join_losses(losses))];
    Ok((out.finish("detect", common, params, started)?, table))
}

fn join_losses(losses: &[f64]) -> String {
    losses
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Localization report over the default plans, optionally limited to some groups.
pub fn cmd_localize(common: &Common, groups: &[PlanGroup]) -> CliResult<(Vec<PathBuf>, String)> {
    let started = Instant::now();
    let plans: Vec<_> = default_plans(common.config.n_spans)
        .into_iter()
        .filter(|p| groups.is_empty() || groups.contains(&p.scope.group()))
        .collect();
    if plans.is_empty() {
        return Err(taplab_core::Error::InvalidArgument("no plans selected".into()).into());
    }
    let loc =
        localization_experiment(&common.config, common.samples_per_case, common.seed, &plans)?;
    let table = localization_table_csv(&loc.outcomes);
    let mut out = Outputs::new(&common.out_dir)?;
    out.write("localization.csv", &table)?;
    for PlanOutcome { plan, run } in &loc.outcomes {
        out.write(
            &format!("localize_scatter_{}.csv", plan.id),
            &scatter_csv(run),
        )?;
    }
    let groups = groups
        .iter()
        .map(|g| g.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let params = vec![(
        "plans".to_string(),
        if groups.is_empty() {
            "all".into()
        } else {
            groups
        },
    )];
    Ok((out.finish("localize", common, params, started)?, table))
}

/// What `cmd_cluster` scores against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelScheme {
    /// The label column of the file.
    Case,
    /// normal / before-booster / after-booster, from the location column.
    Rough,
    /// normal / tx / prebooster / after-booster, from the location column.
    Before,
}

impl LabelScheme {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "case" => Ok(LabelScheme::Case),
            "rough" => Ok(LabelScheme::Rough),
            "before" => Ok(LabelScheme::Before),
            _ => Err(
                taplab_core::Error::InvalidArgument(format!("unknown label scheme `{s}`")).into(),
            ),
        }
    }

    fn name(self) -> &'static str {
        match self {
            LabelScheme::Case => "case",
            LabelScheme::Rough => "rough",
            LabelScheme::Before => "before",
        }
    }
}

/// Flags of `cmd_cluster`.
#[derive(Debug, Clone)]
pub struct ClusterArgs {
    pub dataset: PathBuf,
    pub features: Vec<String>,
    pub k: usize,
    pub log_ber: bool,
    pub labels: LabelScheme,
}

/// Clusters an existing canonical CSV and scores it against its labels.
pub fn cmd_cluster(common: &Common, args: &ClusterArgs) -> CliResult<(Vec<PathBuf>, String)> {
    let ClusterArgs {
        dataset: dataset_path,
        features,
        k,
        log_ber,
        labels: scheme,
    } = args;
    let (k, log_ber, scheme) = (*k, *log_ber, *scheme);
    let started = Instant::now();
    let file = fs::File::open(dataset_path).map_err(io_err(dataset_path))?;
    let dataset = from_csv(BufReader::new(file))?;
    let names: Vec<&str> = features.iter().map(String::as_str).collect();
    let subset = Feature::parse_list(&names, dataset.n_spans())?;
    let scale = if log_ber {
        BerScale::Log10
    } else {
        BerScale::Linear
    };
    let raw = select_features_with(&dataset, &subset, scale)?;
    if k == 0 || k > raw.n_rows() {
        return Err(taplab_core::Error::InvalidArgument(format!(
            "k must be in 1..={}, got {k}",
            raw.n_rows()
        ))
        .into());
    }
    let labels: Vec<String> = dataset
        .records()
        .iter()
        .map(|r| match scheme {
            LabelScheme::Case => r.label.clone(),
            LabelScheme::Rough => PlanScope::Rough.label(r.event.location),
            LabelScheme::Before => PlanScope::BeforeBooster.label(r.event.location),
        })
        .collect();
    let distinct = taplab_core::clustering::distinct_rows(&raw);
    if k > distinct {
        return Err(taplab_core::Error::TooManyClusters {
            requested: k,
            distinct,
        }
        .into());
    }
    let run = cluster_and_score("cluster", &raw, labels, k, None)?;
    let report = report_csv(&run.report);

    let mut out = Outputs::new(&common.out_dir)?;
    let mut assignments = String::from("row,case_label,cluster\n");
    for (i, (label, c)) in run
        .labels
        .iter()
        .zip(&run.clustering.assignments)
        .enumerate()
    {
        assignments.push_str(&format!("{i},{label},{c}\n"));
    }
    out.write("assignments.csv", &assignments)?;
    out.write("cluster_report.csv", &report)?;
    out.write("cluster_scatter.csv", &scatter_csv(&run))?;
    let params = vec![
        ("dataset".to_string(), dataset_path.display().to_string()),
        ("features".to_string(), features.join(",")),
        ("k".to_string(), k.to_string()),
        ("log_ber".to_string(), log_ber.to_string()),
        ("labels".to_string(), scheme.name().to_string()),
    ];
    Ok((out.finish("cluster", common, params, started)?, report))
}

/// Detection with the standard severity levels and localization with every
/// plan, written to `detect/` and `localize/` under the output directory.
pub fn cmd_report(common: &Common) -> CliResult<String> {
    let detect = Common {
        out_dir: common.out_dir.join("detect"),
        ..common.clone()
    };
    let localize = Common {
        out_dir: common.out_dir.join("localize"),
        ..common.clone()
    };
    let (_, detection) = cmd_detect(&detect, &SEVERITY_LEVELS_DB)?;
    let (_, localization) = cmd_localize(&localize, &[])?;
    Ok(format!(
        "# detection\n{detection}\n# localization\n{localization}"
    ))
}

/// Parses a comma-separated loss list (dB); every entry must be positive.
pub fn parse_losses(text: &str) -> CliResult<Vec<f64>> {
    let losses = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|l| l.is_finite() && *l > 0.0)
                .ok_or_else(|| taplab_core::Error::InvalidArgument(format!("invalid loss `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(losses)
}

pub fn parse_plan_groups(text: &str) -> CliResult<Vec<PlanGroup>> {
    Ok(text
        .split(',')
        .map(|s| PlanGroup::parse(s.trim()))
        .collect::<Result<Vec<_>, _>>()?)
}
