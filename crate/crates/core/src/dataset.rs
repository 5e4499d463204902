//! Labeled OPM sample collections, their canonical CSV form, feature-subset
//! selection and z-score standardization.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use crate::linkmodel::{sample_opm, LinkConfig, OpmSample, TapEvent, TapLocation};
use crate::seed::case_rng;
use crate::{Error, Result};

/// A generation case: label plus the event that produces its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub label: String,
    pub event: TapEvent,
}

impl Case {
    pub fn new(label: impl Into<String>, event: TapEvent) -> Self {
        Self {
            label: label.into(),
            event,
        }
    }
}

/// Loss of the fiber-bending clip-on coupler used for localization, dB.
pub const COUPLER_LOSS_DB: f64 = 0.8;

/// Severity levels of the detection study, dB.
pub const SEVERITY_LEVELS_DB: [f64; 6] = [0.5, 0.8, 1.0, 1.5, 2.0, 3.0];

/// No tap, transmitter, pre-booster and every span, each at `loss_db`.
pub fn location_cases(n_spans: usize, loss_db: f64) -> Result<Vec<Case>> {
    let mut cases = vec![Case::new("normal", TapEvent::none())];
    let mut push = |location: TapLocation| -> Result<()> {
        cases.push(Case::new(
            location.to_string(),
            TapEvent::new(location, loss_db)?,
        ));
        Ok(())
    };
    push(TapLocation::Transmitter)?;
    push(TapLocation::PreBooster)?;
    for i in 1..=n_spans {
        push(TapLocation::Span(i))?;
    }
    Ok(cases)
}

/// The seven localization cases of a four-span line (or 3 + N in general).
pub fn default_cases(config: &LinkConfig) -> Result<Vec<Case>> {
    location_cases(config.n_spans, COUPLER_LOSS_DB)
}

/// The no-tap case followed by one pre-booster case per loss level.
pub fn severity_cases(losses_db: &[f64]) -> Result<Vec<Case>> {
    let mut cases = vec![Case::new("normal", TapEvent::none())];
    for &loss in losses_db {
        cases.push(Case::new(
            format!("prebooster_{loss}dB"),
            TapEvent::new(TapLocation::PreBooster, loss)?,
        ));
    }
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub label: String,
    pub event: TapEvent,
    pub sample: OpmSample,
}

/// Ordered, labeled sample collection for a line with a fixed span count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_spans: usize,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(n_spans: usize, records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidArgument(
                "dataset must hold at least one sample".into(),
            ));
        }
        if n_spans == 0 {
            return Err(Error::InvalidArgument(
                "dataset needs at least one span".into(),
            ));
        }
        for r in &records {
            if r.sample.p_span_dbm.len() != n_spans {
                return Err(Error::DimensionMismatch {
                    expected: n_spans,
                    found: r.sample.p_span_dbm.len(),
                });
            }
            r.event.validate(n_spans)?;
        }
        Ok(Self { n_spans, records })
    }

    pub fn n_spans(&self) -> usize {
        self.n_spans
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn samples(&self) -> impl Iterator<Item = &OpmSample> {
        self.records.iter().map(|r| &r.sample)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.label.as_str())
    }

    pub fn feature_names(&self) -> Vec<String> {
        Feature::all(self.n_spans)
            .iter()
            .map(|f| f.to_string())
            .collect()
    }

    /// Sub-dataset of the records for which `keep` holds, in order.
    pub fn filter(&self, keep: impl Fn(&Record) -> bool) -> Result<Self> {
        Self::new(
            self.n_spans,
            self.records.iter().filter(|r| keep(r)).cloned().collect(),
        )
    }
}

/// `n_per_case` samples of every case, case by case.
///
/// Case `i` draws from stream `i` of `seed` (see [`crate::seed`]).
pub fn generate_dataset(
    config: &LinkConfig,
    cases: &[Case],
    n_per_case: usize,
    seed: u64,
) -> Result<Dataset> {
    if n_per_case == 0 {
        return Err(Error::InvalidArgument("n_per_case must be positive".into()));
    }
    if cases.is_empty() {
        return Err(Error::InvalidArgument("no cases to generate".into()));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = cases.iter().find(|c| !seen.insert(c.label.as_str())) {
        return Err(Error::InvalidArgument(format!(
            "duplicate case label `{}`",
            dup.label
        )));
    }
    config.validate()?;

    let mut records = Vec::with_capacity(cases.len() * n_per_case);
    for (index, case) in cases.iter().enumerate() {
        let mut rng = case_rng(seed, index);
        for _ in 0..n_per_case {
            records.push(Record {
                label: case.label.clone(),
                event: case.event,
                sample: sample_opm(config, &case.event, &mut rng)?,
            });
        }
    }
    Dataset::new(config.n_spans, records)
}

/// One OPM telemetry field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    Osnr,
    Ber,
    PRx,
    PTx,
    PLink,
    /// Span power, numbered from 1.
    PSpan(usize),
}

impl Feature {
    /// Canonical order: OSNR, BER, P_rx, P_tx, P_link, P_span1..N.
    pub fn all(n_spans: usize) -> Vec<Feature> {
        let mut v = vec![
            Feature::Osnr,
            Feature::Ber,
            Feature::PRx,
            Feature::PTx,
            Feature::PLink,
        ];
        v.extend((1..=n_spans).map(Feature::PSpan));
        v
    }

    pub const RECEIVER: [Feature; 3] = [Feature::Osnr, Feature::Ber, Feature::PRx];

    pub fn span_powers(n_spans: usize) -> Vec<Feature> {
        (1..=n_spans).map(Feature::PSpan).collect()
    }

    pub fn parse(name: &str, n_spans: usize) -> Result<Self> {
        let feature = match name {
            "osnr_db" => Feature::Osnr,
            "ber" => Feature::Ber,
            "p_rx_dbm" => Feature::PRx,
            "p_tx_dbm" => Feature::PTx,
            "p_link_dbm" => Feature::PLink,
            _ => name
                .strip_prefix("p_span")
                .and_then(|rest| rest.strip_suffix("_dbm"))
                .and_then(|i| i.parse::<usize>().ok())
                .filter(|i| (1..=n_spans).contains(i))
                .map(Feature::PSpan)
                .ok_or_else(|| Error::UnknownFeature(name.to_string()))?,
        };
        Ok(feature)
    }

    pub fn parse_list(names: &[&str], n_spans: usize) -> Result<Vec<Self>> {
        names
            .iter()
            .map(|n| Self::parse(n.trim(), n_spans))
            .collect()
    }

    pub fn value(self, sample: &OpmSample) -> f64 {
        match self {
            Feature::Osnr => sample.osnr_db,
            Feature::Ber => sample.ber,
            Feature::PRx => sample.p_rx_dbm,
            Feature::PTx => sample.p_tx_dbm,
            Feature::PLink => sample.p_link_dbm,
            Feature::PSpan(i) => sample.p_span_dbm[i - 1],
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Osnr => f.write_str("osnr_db"),
            Feature::Ber => f.write_str("ber"),
            Feature::PRx => f.write_str("p_rx_dbm"),
            Feature::PTx => f.write_str("p_tx_dbm"),
            Feature::PLink => f.write_str("p_link_dbm"),
            Feature::PSpan(i) => write!(f, "p_span{i}_dbm"),
        }
    }
}

/// Domain in which the BER column enters the feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BerScale {
    #[default]
    Linear,
    /// log10(max(ber, 1e-12)); zero error counts land on the floor.
    Log10,
}

const LOG_BER_FLOOR: f64 = 1e-12;

/// Per-column z-score parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Population standard deviations (divide by n).
    pub stds: Vec<f64>,
    /// Columns whose raw values were all identical; they are mapped to zero.
    pub zero_variance: Vec<bool>,
}

/// Row-major numeric view of a dataset over a feature subset.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    features: Vec<Feature>,
    values: Vec<f64>,
    standardization: Option<Standardization>,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major values.
    pub fn from_rows(features: Vec<Feature>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = features.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("empty feature subset".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            n_rows: rows.len(),
            features,
            values,
            standardization: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.to_string()).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_features())
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Rows `indices`, in that order, keeping the feature subset.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.n_features());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n_rows: indices.len(),
            features: self.features.clone(),
            values,
            standardization: None,
        }
    }
}

/// Unstandardized matrix over `subset`, columns in subset order.
pub fn select_features(dataset: &Dataset, subset: &[Feature]) -> Result<FeatureMatrix> {
    select_features_with(dataset, subset, BerScale::Linear)
}

pub fn select_features_with(
    dataset: &Dataset,
    subset: &[Feature],
    ber_scale: BerScale,
) -> Result<FeatureMatrix> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("empty feature subset".into()));
    }
    let mut seen = HashSet::new();
    for f in subset {
        if let Feature::PSpan(i) = f {
            if !(1..=dataset.n_spans()).contains(i) {
                return Err(Error::UnknownFeature(f.to_string()));
            }
        }
        if !seen.insert(*f) {
            return Err(Error::DuplicateFeature(f.to_string()));
        }
    }

    let mut values = Vec::with_capacity(dataset.len() * subset.len());
    for sample in dataset.samples() {
        values.extend(subset.iter().map(|f| match (f, ber_scale) {
            (Feature::Ber, BerScale::Log10) => sample.ber.max(LOG_BER_FLOOR).log10(),
            _ => f.value(sample),
        }));
    }
    Ok(FeatureMatrix {
        n_rows: dataset.len(),
        features: subset.to_vec(),
        values,
        standardization: None,
    })
}

/// Z-score every column over all rows with the population standard deviation.
pub fn standardize(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    let n = matrix.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: n,
        });
    }
    let d = matrix.n_features();
    let mut means = Vec::with_capacity(d);
    let mut stds = Vec::with_capacity(d);
    let mut zero_variance = Vec::with_capacity(d);
    for j in 0..d {
        let first = matrix.row(0)[j];
        let constant = matrix.column(j).all(|x| x == first);
        let mean = matrix.column(j).sum::<f64>() / n as f64;
        let var = matrix.column(j).map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        means.push(mean);
        stds.push(if constant { 0.0 } else { var.sqrt() });
        zero_variance.push(constant);
    }

    let mut values = matrix.values().to_vec();
    for row in values.chunks_exact_mut(d) {
        for (j, x) in row.iter_mut().enumerate() {
            *x = if zero_variance[j] {
                0.0
            } else {
                (*x - means[j]) / stds[j]
            };
        }
    }
    Ok(FeatureMatrix {
        n_rows: n,
        features: matrix.features.clone(),
        values,
        standardization: Some(Standardization {
            means,
            stds,
            zero_variance,
        }),
    })
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Canonical CSV header for a line with `n_spans` spans.
pub fn csv_header(n_spans: usize) -> String {
    let mut cols = vec![
        "case_label".to_string(),
        "location".into(),
        "loss_db".into(),
    ];
    cols.extend(Feature::all(n_spans).iter().map(|f| f.to_string()));
    cols.join(",")
}

/// Writes the canonical CSV: LF line endings, numbers with 17 significant digits.
pub fn to_csv<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    writeln!(out, "{}", csv_header(dataset.n_spans()))?;
    for r in dataset.records() {
        if r.label.is_empty() || r.label.contains([',', '\n', '\r', '"']) {
            return Err(Error::InvalidArgument(format!(
                "label `{}` cannot be written to CSV",
                r.label
            )));
        }
        let mut line = format!(
            "{},{},{}",
            r.label,
            r.event.location,
            fmt_num(r.event.loss_db)
        );
        for f in Feature::all(dataset.n_spans()) {
            line.push(',');
            line.push_str(&fmt_num(f.value(&r.sample)));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn to_csv_string(dataset: &Dataset) -> Result<String> {
    let mut buf = Vec::new();
    to_csv(dataset, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

pub fn from_csv<R: BufRead>(input: R) -> Result<Dataset> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::csv(1, "missing header"))??;
    let header = header.strip_suffix('\r').unwrap_or(&header);
    let n_cols = header.split(',').count();
    if n_cols < 9 {
        return Err(Error::csv(1, "header has too few columns"));
    }
    let n_spans = n_cols - 8;
    if header != csv_header(n_spans) {
        return Err(Error::csv(1, format!("unexpected header `{header}`")));
    }

    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_cols {
            return Err(Error::csv(
                line_no,
                format!("expected {n_cols} fields, found {}", fields.len()),
            ));
        }
        let num = |k: usize| -> Result<f64> {
            fields[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::csv(line_no, format!("non-numeric field `{}`", fields[k])))
        };
        let location: TapLocation = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::csv(line_no, format!("unknown location token `{}`", fields[1])))?;
        let event = TapEvent {
            location,
            loss_db: num(2)?,
        };
        event
            .validate(n_spans)
            .map_err(|e| Error::csv(line_no, e.to_string()))?;
        let sample = OpmSample {
            osnr_db: num(3)?,
            ber: num(4)?,
            p_rx_dbm: num(5)?,
            p_tx_dbm: num(6)?,
            p_link_dbm: num(7)?,
            p_span_dbm: (8..n_cols).map(num).collect::<Result<_>>()?,
        };
        records.push(Record {
            label: fields[0].to_string(),
            event,
            sample,
        });
    }
    if records.is_empty() {
        return Err(Error::csv(2, "no data rows"));
    }
    Dataset::new(n_spans, records)
}
