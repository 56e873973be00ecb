//! Python bindings: order book, equilibrium, sessions, sweeps and the U test.
//!
//! Prices cross the boundary in currency units and are rounded to ticks on
//! the way in.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cda_arena::config::Config;
use cda_arena::exchange::{self, Order, Side, TapeEvent};
use cda_arena::market::{self, MarketError};
use cda_arena::metrics;
use cda_arena::price::Price;
use cda_arena::session::{run_session, SessionResult};
use cda_arena::sweep::{ratios, run_sweep, utest, SweepOutcome};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn price(units: f64) -> PyResult<Price> {
    let ticks = (units * 100.0).round() as i64;
    Price::from_ticks(ticks).ok_or_else(|| value_err(format!("price {units} outside [{}, {}]", Price::MIN, Price::MAX)))
}

fn side(s: &str) -> PyResult<Side> {
    match s.to_ascii_uppercase().as_str() {
        "BID" | "BUY" => Ok(Side::Bid),
        "ASK" | "SELL" => Ok(Side::Ask),
        _ => Err(value_err(format!("side must be BID or ASK, got {s:?}"))),
    }
}

/// Price-time priority limit order book.
#[pyclass(module = "cda_arena")]
struct OrderBook {
    inner: exchange::OrderBook,
    next_id: u64,
}

#[pymethods]
impl OrderBook {
    #[new]
    fn new(n_traders: usize) -> Self {
        Self { inner: exchange::OrderBook::new(n_traders), next_id: 1 }
    }

    /// Submits a limit order and returns its fills as
    /// `(price, qty, buyer, seller)` tuples.
    #[pyo3(signature = (trader, side, price, qty=1, time=0))]
    fn submit(&mut self, trader: u32, side: &str, price: f64, qty: u32, time: u64) -> PyResult<Vec<(f64, u32, u32, u32)>> {
        let order = Order { id: self.next_id, trader, side: self::side(side)?, price: self::price(price)?, qty, time };
        let out = self.inner.submit_order(order).map_err(value_err)?;
        self.next_id += 1;
        Ok(out.trades.iter().map(|t| (t.price.units(), t.qty, t.buyer, t.seller)).collect())
    }

    #[pyo3(signature = (trader, side, time=0))]
    fn cancel(&mut self, trader: u32, side: &str, time: u64) -> PyResult<()> {
        self.inner.cancel_order(trader, self::side(side)?, time).map(|_| ()).map_err(value_err)
    }

    #[getter]
    fn best_bid(&self) -> Option<(f64, u32)> {
        self.inner.best_bid().map(|l| (l.price.units(), l.qty))
    }

    #[getter]
    fn best_ask(&self) -> Option<(f64, u32)> {
        self.inner.best_ask().map(|l| (l.price.units(), l.qty))
    }

    /// Volume-weighted top-of-book mid; `None` when one side is empty.
    #[getter]
    fn microprice(&self) -> Option<f64> {
        self.inner.microprice().ok().map(|t| t / 100.0)
    }

    /// Tape rows `(time, kind, price, qty)`; price is `None` for cancels.
    fn tape(&self) -> Vec<(u64, &'static str, Option<f64>, u32)> {
        self.inner
            .tape()
            .iter()
            .map(|e| match e {
                TapeEvent::Trade(t) => (t.time, "TRADE", Some(t.price.units()), t.qty),
                TapeEvent::Cancel(c) => (c.time, "CANCEL", None, c.qty),
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.ladder(Side::Bid).len() + self.inner.ladder(Side::Ask).len()
    }
}

/// Competitive equilibrium of a set of buyer and seller limits.
#[pyfunction]
fn equilibrium<'py>(py: Python<'py>, buyers: Vec<f64>, sellers: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let b = buyers.into_iter().map(price).collect::<PyResult<Vec<_>>>()?;
    let s = sellers.into_iter().map(price).collect::<PyResult<Vec<_>>>()?;
    let e = market::equilibrium(&b, &s).map_err(|e: MarketError| value_err(e))?;
    let d = PyDict::new(py);
    d.set_item("price", e.price.units())?;
    d.set_item("quantity", e.quantity)?;
    d.set_item("max_surplus", e.max_surplus_units())?;
    Ok(d)
}

#[pyfunction]
fn enumerate_ratios(n_strategies: usize, n_per_side: usize) -> Vec<Vec<usize>> {
    ratios::enumerate_ratios(n_strategies, n_per_side)
}

/// Smith's alpha (percent) of `(trade_price, equilibrium_price)` pairs.
#[pyfunction]
fn smiths_alpha(pairs: Vec<(f64, f64)>) -> PyResult<Option<f64>> {
    let pairs = pairs.into_iter().map(|(p, p0)| Ok((price(p)?, price(p0)?))).collect::<PyResult<Vec<_>>>()?;
    Ok(metrics::smiths_alpha(&pairs).map(|a| a.percent))
}

/// Mann-Whitney U test; returns `(u, p_two_sided, p_a_greater)`.
#[pyfunction]
fn u_test(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let t = utest::u_test(&a, &b).map_err(value_err)?;
    Ok((t.u, t.p_two_sided, t.p_greater))
}

/// A resolved run configuration.
#[pyclass(module = "cda_arena", name = "Config")]
struct PyConfig {
    inner: Config,
}

#[pymethods]
impl PyConfig {
    /// Built from TOML text (empty for defaults) plus dotted `key=value` overrides.
    #[new]
    #[pyo3(signature = (toml="", overrides=Vec::new()))]
    fn new(toml: &str, overrides: Vec<String>) -> PyResult<Self> {
        Config::from_toml_str(toml, &overrides).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, overrides=Vec::new()))]
    fn load(path: PathBuf, overrides: Vec<String>) -> PyResult<Self> {
        Config::load(Some(&path), &overrides).map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    /// The sweep size, e.g. "969 ratios, 96,900 sessions, 1,938,000 trading days".
    fn sweep_plan(&self) -> String {
        self.inner.sweep_spec().plan().describe()
    }
}

#[pyclass(module = "cda_arena", name = "SessionResult")]
struct PySessionResult {
    inner: SessionResult,
}

#[pymethods]
impl PySessionResult {
    #[getter]
    fn market(&self) -> String {
        self.inner.market.clone()
    }

    #[getter]
    fn n_trades(&self) -> usize {
        self.inner.trades.len()
    }

    #[getter]
    fn trade_prices(&self) -> Vec<f64> {
        self.inner.trades.iter().map(|t| t.price.units()).collect()
    }

    #[getter]
    fn ae_global(&self) -> Option<f64> {
        self.inner.metrics.ae_global
    }

    #[getter]
    fn alpha(&self) -> Option<f64> {
        self.inner.metrics.alpha
    }

    #[getter]
    fn pd(&self) -> f64 {
        self.inner.metrics.pd
    }

    /// Per-strategy efficiency keyed by ticker.
    fn ae_by_strategy(&self) -> Vec<(String, f64)> {
        self.inner.metrics.ae_by_strategy.iter().map(|(t, v)| (t.to_string(), *v)).collect()
    }

    /// The JSON-lines record written by the `session` command.
    fn to_json(&self) -> String {
        self.inner.to_json_line()
    }
}

#[pyfunction(name = "run_session")]
fn py_run_session(py: Python<'_>, config: &PyConfig) -> PyResult<PySessionResult> {
    let cfg = config.inner.session_config().map_err(value_err)?;
    let inner = py.detach(|| run_session(&cfg)).map_err(runtime_err)?;
    Ok(PySessionResult { inner })
}

/// Runs the configured sweep; returns mean strategy efficiency as
/// `{market: {ticker: ae_mean}}`.
#[pyfunction(name = "run_sweep")]
#[pyo3(signature = (config, journal=None, resume=false))]
fn py_run_sweep<'py>(
    py: Python<'py>,
    config: &PyConfig,
    journal: Option<PathBuf>,
    resume: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = config.inner.sweep_spec();
    let catalog = config.inner.catalog();
    let out: SweepOutcome = py
        .detach(|| run_sweep(&spec, &catalog, journal.as_deref(), resume))
        .map_err(runtime_err)?;
    let d = PyDict::new(py);
    for m in &out.table.markets {
        let inner = PyDict::new(py);
        for (t, s) in &m.per_ticker {
            inner.set_item(t.to_string(), s.ae_mean)?;
        }
        d.set_item(&m.market, inner)?;
    }
    Ok(d)
}

#[pymodule(name = "cda_arena")]
fn cda_arena_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<OrderBook>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PySessionResult>()?;
    m.add_function(wrap_pyfunction!(equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_ratios, m)?)?;
    m.add_function(wrap_pyfunction!(smiths_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(u_test, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_session, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_sweep, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prices_round_to_ticks() {
        assert_eq!(price(30.004).unwrap().ticks(), 3000);
        assert!(price(0.0).is_err());
        assert!(price(600.0).is_err());
    }

    #[test]
    fn book_round_trip() {
        let mut b = OrderBook::new(2);
        assert!(b.submit(0, "BID", 30.0, 1, 0).unwrap().is_empty());
        assert_eq!(b.submit(1, "sell", 29.5, 1, 1).unwrap(), vec![(30.0, 1, 0, 1)]);
        assert_eq!(b.best_bid(), None);
        assert!(side("hold").is_err());
    }
}
