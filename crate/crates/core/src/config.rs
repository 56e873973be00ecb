//! Run configuration: a TOML document with dotted-key overrides applied
//! before it is deserialised.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Value;

use crate::market::{Catalog, Clock, MarketEnv, MarketError};
use crate::session::{RosterSide, SessionConfig};
use crate::sweep::latency::{DEFAULT_CALLS, DEFAULT_FIXTURES};
use crate::sweep::SweepSpec;
use crate::traders::{StrategyParams, Ticker};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("override {0:?} is not key=value")]
    BadOverride(String),
    #[error("override {key}: {reason}")]
    OverridePath { key: String, reason: String },
    #[error(transparent)]
    Market(#[from] MarketError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketSection {
    pub label: String,
    pub n_days: u32,
    pub day_length_s: u32,
    pub polls_per_second: u32,
}

impl Default for MarketSection {
    fn default() -> Self {
        let c = Clock::default();
        Self {
            label: "M1".into(),
            n_days: c.n_days,
            day_length_s: c.day_length_s,
            polls_per_second: c.polls_per_second,
        }
    }
}

impl MarketSection {
    pub fn clock(&self) -> Clock {
        Clock { n_days: self.n_days, day_length_s: self.day_length_s, polls_per_second: self.polls_per_second }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RosterSection {
    pub buyers: RosterSide,
    pub sellers: RosterSide,
}

impl Default for RosterSection {
    fn default() -> Self {
        let side = RosterSide(vec![(Ticker::Zic, 16)]);
        Self { buyers: side.clone(), sellers: side }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSection {
    /// Also write the tape as CSV.
    pub tape: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub tickers: Vec<Ticker>,
    pub n_per_side: usize,
    pub trials: u32,
    pub markets: Vec<String>,
    pub workers: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            tickers: vec![Ticker::Aa, Ticker::Asad, Ticker::Gdx, Ticker::Zic],
            n_per_side: 16,
            trials: 100,
            markets: vec!["M1".into()],
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencySection {
    pub tickers: Vec<Ticker>,
    pub fixtures: Vec<String>,
    pub calls: usize,
    /// Buyers and sellers of each strategy in a fixture.
    pub per_strategy: usize,
}

impl Default for LatencySection {
    fn default() -> Self {
        Self {
            tickers: vec![Ticker::Aa, Ticker::Asad, Ticker::Gdx, Ticker::Zic, Ticker::Zip, Ticker::Shvr],
            fixtures: DEFAULT_FIXTURES.iter().map(|s| s.to_string()).collect(),
            calls: DEFAULT_CALLS,
            per_strategy: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub market: MarketSection,
    pub roster: RosterSection,
    pub session: SessionSection,
    pub sweep: SweepSection,
    pub latency: LatencySection,
    pub strategies: StrategyParams,
    /// Extra schedules and markets, same shape as the built-in catalog.
    pub catalog: Catalog,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 42,
            market: MarketSection::default(),
            roster: RosterSection::default(),
            session: SessionSection::default(),
            sweep: SweepSection::default(),
            latency: LatencySection::default(),
            strategies: StrategyParams::default(),
            catalog: Catalog::default(),
        }
    }
}

/// Sets `key` (dotted path) in `doc`, creating tables as needed. The value is
/// read as TOML when it parses as such and as a bare string otherwise, so
/// `roster.buyers=GDX:8,ZIC:8` needs no quoting.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::BadOverride(spec.to_string()));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = doc;
    for part in &parts[..parts.len() - 1] {
        let table = cur.as_table_mut().ok_or_else(|| ConfigError::OverridePath {
            key: key.to_string(),
            reason: "parent is not a table".into(),
        })?;
        cur = table.entry(part.to_string()).or_insert_with(|| Value::Table(toml::Table::new()));
    }
    let table = cur.as_table_mut().ok_or_else(|| ConfigError::OverridePath {
        key: key.to_string(),
        reason: "parent is not a table".into(),
    })?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl Config {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut doc: Value = toml::from_str::<toml::Table>(text).map(Value::Table).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        doc.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|source| ConfigError::Read { path: p.display().to_string(), source })?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Built-in markets with this config's additions merged in.
    pub fn catalog(&self) -> Catalog {
        let mut c = Catalog::builtin();
        c.merge(self.catalog.clone());
        c
    }

    pub fn env(&self) -> Result<MarketEnv, ConfigError> {
        Ok(self.catalog().build_env(
            &self.market.label,
            self.roster.buyers.total(),
            self.roster.sellers.total(),
            self.market.clock(),
        )?)
    }

    pub fn session_config(&self) -> Result<SessionConfig, ConfigError> {
        Ok(SessionConfig {
            env: self.env()?,
            buyers: self.roster.buyers.clone(),
            sellers: self.roster.sellers.clone(),
            seed: self.seed,
            params: self.strategies.clone(),
            keep_tape: self.session.tape,
        })
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            tickers: self.sweep.tickers.clone(),
            n_per_side: self.sweep.n_per_side,
            trials: self.sweep.trials,
            markets: self.sweep.markets.clone(),
            base_seed: self.seed,
            workers: self.sweep.workers,
            clock: self.market.clock(),
            params: self.strategies.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(Config::from_toml_str("", &[]).unwrap(), Config::default());
    }

    #[test]
    fn roster_override_needs_no_quotes() {
        let c = Config::from_toml_str("", &["roster.buyers=GDX:8,ZIC:8".into()]).unwrap();
        assert_eq!(c.roster.buyers.to_string(), "GDX:8,ZIC:8");
        assert!(c.to_toml().contains("buyers = \"GDX:8,ZIC:8\""));
    }

    #[test]
    fn typed_overrides() {
        let c = Config::from_toml_str(
            "[sweep]\ntrials = 5\n",
            &["sweep.trials=7".into(), "strategies.gdx.gamma=0.5".into(), "sweep.tickers=[\"AA\",\"GDX\"]".into()],
        )
        .unwrap();
        assert_eq!(c.sweep.trials, 7);
        assert_eq!(c.strategies.gdx.gamma, 0.5);
        assert_eq!(c.sweep.tickers, vec![Ticker::Aa, Ticker::Gdx]);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(Config::from_toml_str("", &["nokey".into()]), Err(ConfigError::BadOverride(_))));
        assert!(matches!(Config::from_toml_str("bogus = 1", &[]), Err(ConfigError::Parse(_))));
        assert!(matches!(Config::from_toml_str("", &["roster.buyers=KAPLAN:3".into()]), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn m5_must_be_bound() {
        let c = Config::from_toml_str("", &["market.label=M5".into()]).unwrap();
        assert_eq!(c.env().unwrap_err().to_string(), "M5 undefined; bind explicitly");
        let bound = Config::from_toml_str(
            "[market]\nlabel = \"M5\"\n[catalog.markets.M5]\nschedule = \"M1\"\n",
            &[],
        )
        .unwrap();
        assert_eq!(bound.env().unwrap().label, "M5");
    }
}
