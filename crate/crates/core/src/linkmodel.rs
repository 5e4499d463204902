//! Link-budget and noise model of an amplified multi-span optical line.
//!
//! The line is: transmitter → (P_tx monitor) → tap point → (P_link monitor) →
//! fixed passive loss → booster → span 1 → in-line amp 1 → … → span N →
//! in-line amp N → receiver. The booster holds a constant output power, so
//! any loss upstream of it is compensated downstream at the price of more
//! booster gain and therefore more ASE. In-line amplifiers run at a fixed
//! gain equal to the nominal loss of their span, so a tap inside a span shows
//! up at every monitor after it.
//!
//! [`propagate`] is the noiseless model; [`sample_opm`] layers Gaussian
//! monitor noise and bit-counting BER quantization on top of it.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use libm::erfc;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Planck constant, J·s.
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;

/// Static description of the simulated line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub n_spans: usize,
    /// Nominal fiber loss of each span, dB.
    pub span_loss_db: Vec<f64>,
    /// Transmitter output power, dBm.
    pub launch_power_dbm: f64,
    /// Fixed passive loss between the P_link monitor and the booster input
    /// (multiplexer, attenuator insertion loss), dB.
    pub booster_input_loss_db: f64,
    /// Booster output power setpoint, dBm.
    pub booster_target_dbm: f64,
    /// Noise figure shared by the booster and in-line amplifiers, dB.
    pub noise_figure_db: f64,
    pub center_frequency_thz: f64,
    /// OSNR reference bandwidth, GHz (12.5 GHz = 0.1 nm at 1550 nm).
    pub ref_bandwidth_ghz: f64,
    pub symbol_rate_gbaud: f64,
    /// Gaussian noise on every power monitor, dB.
    pub power_noise_sigma_db: f64,
    /// Gaussian noise on the OSNR monitor, dB.
    pub osnr_noise_sigma_db: f64,
    /// Bits counted per BER measurement.
    pub n_bits_per_ber: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            n_spans: 4,
            span_loss_db: vec![10.0; 4],
            launch_power_dbm: 0.0,
            booster_input_loss_db: 20.0,
            booster_target_dbm: 0.0,
            noise_figure_db: 5.0,
            center_frequency_thz: 193.41,
            ref_bandwidth_ghz: 12.5,
            symbol_rate_gbaud: 28.0,
            power_noise_sigma_db: 0.0,
            osnr_noise_sigma_db: 0.02,
            n_bits_per_ber: 1 << 23,
        }
    }
}

impl LinkConfig {
    /// Default line with `n_spans` identical spans of `span_loss_db` each.
    pub fn with_spans(n_spans: usize, span_loss_db: f64) -> Self {
        Self {
            n_spans,
            span_loss_db: vec![span_loss_db; n_spans],
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("LinkConfig always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_spans == 0 {
            return bad("n_spans must be at least 1".into());
        }
        if self.span_loss_db.len() != self.n_spans {
            return bad(format!(
                "span_loss_db has {} entries for {} spans",
                self.span_loss_db.len(),
                self.n_spans
            ));
        }
        if let Some(loss) = self
            .span_loss_db
            .iter()
            .find(|l| !(l.is_finite() && **l > 0.0))
        {
            return bad(format!("span loss must be positive and finite, got {loss}"));
        }
        let finite = [
            ("launch_power_dbm", self.launch_power_dbm),
            ("booster_input_loss_db", self.booster_input_loss_db),
            ("booster_target_dbm", self.booster_target_dbm),
            ("noise_figure_db", self.noise_figure_db),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        let positive = [
            ("center_frequency_thz", self.center_frequency_thz),
            ("ref_bandwidth_ghz", self.ref_bandwidth_ghz),
            ("symbol_rate_gbaud", self.symbol_rate_gbaud),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return bad(format!("{name} must be positive, got {value}"));
            }
        }
        let sigmas = [
            ("power_noise_sigma_db", self.power_noise_sigma_db),
            ("osnr_noise_sigma_db", self.osnr_noise_sigma_db),
        ];
        for (name, value) in sigmas {
            if !(value.is_finite() && value >= 0.0) {
                return bad(format!("{name} must be non-negative, got {value}"));
            }
        }
        if self.n_bits_per_ber == 0 {
            return bad("n_bits_per_ber must be at least 1".into());
        }
        Ok(())
    }

    /// ASE power per unit excess gain, F·h·ν·B_ref, in mW.
    fn unit_ase_mw(&self) -> f64 {
        db_to_linear(self.noise_figure_db)
            * PLANCK_J_S
            * self.center_frequency_thz
            * 1e12
            * self.ref_bandwidth_ghz
            * 1e9
            * 1e3
    }

    /// Analytic DP-QPSK BER for a linear OSNR in the reference bandwidth.
    pub fn ber_from_osnr(&self, osnr_linear: f64) -> f64 {
        let snr = osnr_linear * self.ref_bandwidth_ghz / self.symbol_rate_gbaud;
        0.5 * erfc(snr.sqrt())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Where a tap sits on the line. Spans are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TapLocation {
    None,
    Transmitter,
    PreBooster,
    Span(usize),
}

impl TapLocation {
    pub fn is_before_booster(self) -> bool {
        matches!(self, TapLocation::Transmitter | TapLocation::PreBooster)
    }

    pub fn is_after_booster(self) -> bool {
        matches!(self, TapLocation::Span(_))
    }
}

impl fmt::Display for TapLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TapLocation::None => f.write_str("none"),
            TapLocation::Transmitter => f.write_str("tx"),
            TapLocation::PreBooster => f.write_str("prebooster"),
            TapLocation::Span(i) => write!(f, "span{i}"),
        }
    }
}

impl FromStr for TapLocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TapLocation::None),
            "tx" => Ok(TapLocation::Transmitter),
            "prebooster" => Ok(TapLocation::PreBooster),
            _ => s
                .strip_prefix("span")
                .and_then(|i| i.parse::<usize>().ok())
                .filter(|i| *i >= 1)
                .map(TapLocation::Span)
                .ok_or_else(|| Error::InvalidEvent(format!("unknown location token `{s}`"))),
        }
    }
}

/// An eavesdropping event: a localized extra loss at one point of the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapEvent {
    pub location: TapLocation,
    pub loss_db: f64,
}

impl TapEvent {
    pub fn none() -> Self {
        Self {
            location: TapLocation::None,
            loss_db: 0.0,
        }
    }

    pub fn new(location: TapLocation, loss_db: f64) -> Result<Self> {
        let event = Self { location, loss_db };
        event.check_shape()?;
        Ok(event)
    }

    fn check_shape(&self) -> Result<()> {
        if !(self.loss_db.is_finite() && self.loss_db >= 0.0) {
            return Err(Error::InvalidEvent(format!(
                "loss must be non-negative, got {}",
                self.loss_db
            )));
        }
        match (self.location, self.loss_db == 0.0) {
            (TapLocation::None, false) => Err(Error::InvalidEvent(
                "no-tap event must carry zero loss".into(),
            )),
            (TapLocation::None, true) => Ok(()),
            (_, true) => Err(Error::InvalidEvent(format!(
                "tap at {} must carry a positive loss",
                self.location
            ))),
            (TapLocation::Span(0), _) => {
                Err(Error::InvalidEvent("spans are numbered from 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn validate(&self, n_spans: usize) -> Result<()> {
        self.check_shape()?;
        match self.location {
            TapLocation::Span(i) if i > n_spans => Err(Error::InvalidEvent(format!(
                "span {i} out of range for a {n_spans}-span line"
            ))),
            _ => Ok(()),
        }
    }

    fn loss_at(&self, location: TapLocation) -> f64 {
        if self.location == location {
            self.loss_db
        } else {
            0.0
        }
    }
}

/// One telemetry record.
#[derive(Debug, Clone, PartialEq)]
pub struct OpmSample {
    pub osnr_db: f64,
    pub ber: f64,
    pub p_rx_dbm: f64,
    pub p_tx_dbm: f64,
    pub p_link_dbm: f64,
    /// Power at each span's fiber output, before its in-line amplifier.
    pub p_span_dbm: Vec<f64>,
}

/// Noiseless OPM vector for `event`; `ber` is the analytic BER.
pub fn propagate(config: &LinkConfig, event: &TapEvent) -> Result<OpmSample> {
    config.validate()?;
    event.validate(config.n_spans)?;

    let p_tx_dbm = config.launch_power_dbm - event.loss_at(TapLocation::Transmitter);
    let p_link_dbm = p_tx_dbm - event.loss_at(TapLocation::PreBooster);

    // Constant-output booster: its gain absorbs every loss upstream of it.
    let booster_gain_db = config.booster_target_dbm - (p_link_dbm - config.booster_input_loss_db);
    let unit_ase = config.unit_ase_mw();
    let mut ase_mw = unit_ase * excess_gain(booster_gain_db);

    let mut power_dbm = config.booster_target_dbm;
    let mut p_span_dbm = Vec::with_capacity(config.n_spans);
    for (i, &span_loss) in config.span_loss_db.iter().enumerate() {
        let attenuation = span_loss + event.loss_at(TapLocation::Span(i + 1));
        power_dbm -= attenuation;
        ase_mw *= db_to_linear(-attenuation);
        p_span_dbm.push(power_dbm);

        // Fixed-gain in-line amplifier restoring the nominal span loss.
        power_dbm += span_loss;
        ase_mw = ase_mw * db_to_linear(span_loss) + unit_ase * excess_gain(span_loss);
    }

    let osnr_linear = db_to_linear(power_dbm) / ase_mw;
    Ok(OpmSample {
        osnr_db: 10.0 * osnr_linear.log10(),
        ber: config.ber_from_osnr(osnr_linear),
        p_rx_dbm: power_dbm,
        p_tx_dbm,
        p_link_dbm,
        p_span_dbm,
    })
}

/// G − 1 for a gain in dB; an amplifier at or below unity gain adds no ASE.
fn excess_gain(gain_db: f64) -> f64 {
    (db_to_linear(gain_db) - 1.0).max(0.0)
}

/// Noisy OPM record.
///
/// Draw order per call: one standard normal for OSNR, then one per power
/// field (P_rx, P_tx, P_link, P_span1..N), then one binomial error count for
/// BER. Every draw is taken even when its sigma is zero, so changing one
/// noise level never shifts the other fields' draws.
pub fn sample_opm<R: Rng + ?Sized>(
    config: &LinkConfig,
    event: &TapEvent,
    rng: &mut R,
) -> Result<OpmSample> {
    let clean = propagate(config, event)?;
    let mut noisy = |value: f64, sigma: f64| {
        let z: f64 = rng.sample(StandardNormal);
        value + sigma * z
    };
    let osnr_db = noisy(clean.osnr_db, config.osnr_noise_sigma_db);
    let sp = config.power_noise_sigma_db;
    let p_rx_dbm = noisy(clean.p_rx_dbm, sp);
    let p_tx_dbm = noisy(clean.p_tx_dbm, sp);
    let p_link_dbm = noisy(clean.p_link_dbm, sp);
    let p_span_dbm = clean.p_span_dbm.iter().map(|p| noisy(*p, sp)).collect();

    let counter = Binomial::new(config.n_bits_per_ber, clean.ber.clamp(0.0, 1.0))
        .map_err(|e| Error::InvalidArgument(format!("BER counter: {e}")))?;
    let errors = counter.sample(rng);

    Ok(OpmSample {
        osnr_db,
        ber: errors as f64 / config.n_bits_per_ber as f64,
        p_rx_dbm,
        p_tx_dbm,
        p_link_dbm,
        p_span_dbm,
    })
}
