use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::zip::{Zip, ZipParams};
use super::{MarketEvent, Role};
use crate::price::Price;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsadParams {
    pub short_window: usize,
    pub long_window: usize,
    /// Detection threshold in baseline standard deviations.
    pub k: f64,
    /// Deviations smaller than this fraction of the baseline mean never fire.
    pub min_relative_shift: f64,
    /// Margin multiplier applied when a shock is detected.
    pub margin_reset: f64,
}

impl Default for AsadParams {
    fn default() -> Self {
        Self { short_window: 5, long_window: 20, k: 2.0, min_relative_shift: 0.02, margin_reset: 0.5 }
    }
}

/// Flags a level shift in trade prices: the mean of the latest `short_window`
/// trades against the `long_window` trades before them.
#[derive(Clone, Debug)]
pub struct ShockDetector {
    prices: VecDeque<f64>,
    params: AsadParams,
}

impl ShockDetector {
    pub fn new(params: &AsadParams) -> Self {
        Self { prices: VecDeque::new(), params: params.clone() }
    }

    /// Records a trade price; returns true when a shock is detected. The
    /// history is cleared on detection so one sustained shift fires once.
    pub fn observe(&mut self, price: f64) -> bool {
        let cap = self.params.short_window + self.params.long_window;
        self.prices.push_back(price);
        if self.prices.len() > cap {
            self.prices.pop_front();
        }
        if self.prices.len() < cap {
            return false;
        }
        let (base, recent) = self.prices.as_slices();
        let all: Vec<f64> = base.iter().chain(recent).copied().collect();
        let (baseline, short) = all.split_at(self.params.long_window);
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let base_mean = mean(baseline);
        let sd = (baseline.iter().map(|x| (x - base_mean).powi(2)).sum::<f64>() / baseline.len() as f64).sqrt();
        let shift = (mean(short) - base_mean).abs();
        let fired = shift > self.params.k * sd && shift > self.params.min_relative_shift * base_mean.abs();
        if fired {
            self.prices.clear();
        }
        fired
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// ZIP with a trade-price shock detector. On detection the margin is pulled
/// towards zero and momentum is discarded; otherwise it behaves exactly as ZIP.
#[derive(Clone, Debug)]
pub struct Asad {
    pub zip: Zip,
    pub detector: ShockDetector,
    pub shocks_detected: u32,
    margin_reset: f64,
}

impl Asad {
    pub fn new<R: Rng + ?Sized>(role: Role, zip: &ZipParams, params: &AsadParams, rng: &mut R) -> Self {
        Self {
            zip: Zip::new(role, zip, rng),
            detector: ShockDetector::new(params),
            shocks_detected: 0,
            margin_reset: params.margin_reset,
        }
    }

    pub fn quote(&self, role: Role, limit: Price) -> Price {
        self.zip.quote(role, limit)
    }

    pub fn respond<R: Rng + ?Sized>(
        &mut self,
        role: Role,
        limit: Option<Price>,
        event: &MarketEvent,
        rng: &mut R,
    ) {
        if let MarketEvent::Trade(t) = event {
            if self.detector.observe(t.price.ticks() as f64) {
                self.shocks_detected += 1;
                self.zip.margin *= self.margin_reset;
                self.zip.velocity = 0.0;
            }
        }
        self.zip.respond(role, limit, event, rng);
    }
}
