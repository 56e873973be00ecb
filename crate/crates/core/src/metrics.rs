//! Smith's α, allocative efficiency and profit dispersion.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::price::{ticks_to_units, Price};
use crate::traders::Ticker;

/// Root-mean-square deviation of trade prices from the equilibrium in force.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    /// RMS deviation as a percentage of the mean in-force equilibrium price.
    pub percent: f64,
    /// Unnormalised RMS deviation, currency units.
    pub rms: f64,
}

/// `pairs` holds (trade price, equilibrium price in force at that trade).
/// `None` when there are no trades.
pub fn smiths_alpha(pairs: &[(Price, Price)]) -> Option<Alpha> {
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    let msd = pairs.iter().map(|(p, p0)| ((p.ticks() - p0.ticks()) as f64).powi(2)).sum::<f64>() / n;
    let mean_p0 = pairs.iter().map(|(_, p0)| p0.ticks() as f64).sum::<f64>() / n;
    let rms = msd.sqrt();
    Some(Alpha { percent: 100.0 * rms / mean_p0, rms: ticks_to_units(rms) })
}

/// Realised surplus as a percentage of the attainable maximum, or `None`
/// when nothing was attainable.
pub fn allocative_efficiency(realized: i64, max_surplus: i64) -> Option<f64> {
    (max_surplus > 0).then(|| 100.0 * realized as f64 / max_surplus as f64)
}

/// One trader's realised and equilibrium-expected profit, both in ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraderOutcome {
    pub ticker: Ticker,
    pub profit: i64,
    pub potential: i64,
}

/// Per-strategy efficiency: realised profit of the strategy's traders over
/// the profit those roster slots would have earned trading at equilibrium.
/// Strategies whose slots had no attainable profit are omitted.
pub fn ae_by_strategy(rows: &[TraderOutcome]) -> BTreeMap<Ticker, f64> {
    let mut sums: BTreeMap<Ticker, (i64, i64)> = BTreeMap::new();
    for r in rows {
        let e = sums.entry(r.ticker).or_default();
        e.0 += r.profit;
        e.1 += r.potential;
    }
    sums.into_iter()
        .filter_map(|(t, (p, pot))| allocative_efficiency(p, pot).map(|ae| (t, ae)))
        .collect()
}

/// RMS difference between realised and equilibrium-expected profit over all
/// traders, currency units.
pub fn profit_dispersion(rows: &[TraderOutcome]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let msd = rows.iter().map(|r| ((r.profit - r.potential) as f64).powi(2)).sum::<f64>() / rows.len() as f64;
    ticks_to_units(msd.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DayMetrics {
    pub day: u32,
    pub alpha: Option<f64>,
    pub ae: Option<f64>,
    pub pd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    /// Percent.
    pub alpha: Option<f64>,
    /// Currency.
    pub alpha_rms: Option<f64>,
    pub ae_global: Option<f64>,
    pub ae_by_strategy: BTreeMap<Ticker, f64>,
    pub pd: f64,
    pub per_day: Vec<DayMetrics>,
}
