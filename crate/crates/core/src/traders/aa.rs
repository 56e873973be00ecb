//! Adaptive-aggressiveness trading, in the classic form (equilibrium estimated
//! from recent trade prices) and the microprice form.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{MarketEvent, MarketView, Role};
use crate::exchange::Side;
use crate::price::Price;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AaVariant {
    Classic,
    Maa,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AaParams {
    /// Short-term learning rate for the aggressiveness.
    pub beta1: f64,
    /// Long-term learning rate for θ.
    pub beta2: f64,
    pub theta_init: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub lambda_r: f64,
    pub lambda_a: f64,
    /// Fraction of the gap to the target closed by one quote is 1/eta.
    pub eta: f64,
    /// Trades kept for the equilibrium and volatility estimates.
    pub window: usize,
    /// Per-trade weight decay of the equilibrium moving average.
    pub ewma_decay: f64,
    pub r_init: f64,
}

impl Default for AaParams {
    fn default() -> Self {
        Self {
            beta1: 0.5,
            beta2: 0.05,
            theta_init: -2.0,
            theta_min: -8.0,
            theta_max: 2.0,
            lambda_r: 0.05,
            lambda_a: 0.05,
            eta: 3.0,
            window: 20,
            ewma_decay: 0.9,
            r_init: 0.0,
        }
    }
}

/// `(e^{xθ} − 1) / (e^θ − 1)` for `x ∈ [0, 1]`; the identity when θ ≈ 0.
fn curve(x: f64, theta: f64) -> f64 {
    if theta.abs() < 1e-9 {
        x
    } else {
        (x * theta).exp_m1() / theta.exp_m1()
    }
}

#[derive(Clone, Debug)]
pub struct Aa {
    pub variant: AaVariant,
    /// Aggressiveness in [−1, 1].
    pub r: f64,
    pub theta: f64,
    trades: VecDeque<f64>,
    alpha_range: Option<(f64, f64)>,
    /// Microprice as of the previous event, used when a trade arrives.
    prev_microprice: Option<f64>,
    params: AaParams,
}

impl Aa {
    pub fn new(variant: AaVariant, params: &AaParams) -> Self {
        Self {
            variant,
            r: params.r_init.clamp(-1.0, 1.0),
            theta: params.theta_init.clamp(params.theta_min, params.theta_max),
            trades: VecDeque::new(),
            alpha_range: None,
            prev_microprice: None,
            params: params.clone(),
        }
    }

    /// Exponentially weighted mean of recent trade prices in ticks, newest heaviest.
    pub fn trade_average(&self) -> Option<f64> {
        if self.trades.is_empty() {
            return None;
        }
        let (mut num, mut den, mut w) = (0.0, 0.0, 1.0);
        for q in self.trades.iter().rev() {
            num += w * q;
            den += w;
            w *= self.params.ewma_decay;
        }
        Some(num / den)
    }

    fn estimate_with(&self, microprice: Option<f64>) -> Option<f64> {
        match (self.variant, microprice) {
            (AaVariant::Maa, Some(m)) => Some(m),
            _ => self.trade_average(),
        }
    }

    /// Current equilibrium estimate p̂ in ticks.
    pub fn equilibrium_estimate(&self, view: &MarketView) -> Option<f64> {
        self.estimate_with(view.microprice)
    }

    /// Target price in ticks for aggressiveness `r`.
    pub fn target_for(&self, role: Role, limit: Price, p_hat: f64, r: f64) -> f64 {
        let l = limit.ticks() as f64;
        let (lo, hi) = (Price::MIN.ticks() as f64, Price::MAX.ticks() as f64);
        let th = self.theta;
        match role {
            Role::Buyer if l > p_hat => {
                if r >= 0.0 {
                    p_hat + (l - p_hat) * curve(r, th)
                } else {
                    p_hat - (p_hat - lo) * curve(-r, th)
                }
            }
            Role::Buyer => {
                if r >= 0.0 {
                    l
                } else {
                    l - (l - lo) * curve(-r, th)
                }
            }
            Role::Seller if l < p_hat => {
                if r >= 0.0 {
                    p_hat - (p_hat - l) * curve(r, th)
                } else {
                    p_hat + (hi - p_hat) * curve(-r, th)
                }
            }
            Role::Seller => {
                if r >= 0.0 {
                    l
                } else {
                    l + (hi - l) * curve(-r, th)
                }
            }
        }
    }

    /// Aggressiveness whose target equals `price`, clamped to [−1, 1].
    pub fn aggressiveness_for(&self, role: Role, limit: Price, p_hat: f64, price: f64) -> f64 {
        // buyer targets rise with r, seller targets fall
        let rising = role == Role::Buyer;
        let below = |r: f64| {
            let t = self.target_for(role, limit, p_hat, r);
            if rising {
                t < price
            } else {
                t > price
            }
        };
        let (mut lo, mut hi) = (-1.0, 1.0);
        if below(hi) {
            return 1.0;
        }
        if !below(lo) {
            return -1.0;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if below(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn quote(&self, role: Role, limit: Price, view: &MarketView) -> Option<Price> {
        let l = limit.ticks();
        let bid = view.best_bid_price().map(Price::ticks);
        let ask = view.best_ask_price().map(Price::ticks);
        let eta = self.params.eta;
        let target = match self.equilibrium_estimate(view) {
            Some(p_hat) => self.target_for(role, limit, p_hat, self.r),
            // no estimate yet: creep towards the far side, never past the limit
            None => match role {
                Role::Buyer => ask.map_or(l, |a| a.min(l)) as f64,
                Role::Seller => bid.map_or(l, |b| b.max(l)) as f64,
            },
        };
        let price = match role {
            Role::Buyer => {
                let target = target.min(l as f64);
                if let Some(a) = ask.filter(|a| (*a as f64) <= target) {
                    a
                } else {
                    let from = bid.unwrap_or(Price::MIN.ticks());
                    if from as f64 >= target {
                        return None;
                    }
                    let p = (from as f64 + (target - from as f64) / eta).ceil() as i64;
                    p.max(from + 1).min(target.floor() as i64).min(l)
                }
            }
            Role::Seller => {
                let target = target.max(l as f64);
                if let Some(b) = bid.filter(|b| (*b as f64) >= target) {
                    b
                } else {
                    let from = ask.unwrap_or(Price::MAX.ticks());
                    if from as f64 <= target {
                        return None;
                    }
                    let p = (from as f64 - (from as f64 - target) / eta).floor() as i64;
                    p.min(from - 1).max(target.ceil() as i64).max(l)
                }
            }
        };
        let ok = match role {
            Role::Buyer => price <= l,
            Role::Seller => price >= l,
        };
        ok.then(|| Price::from_ticks(price)).flatten()
    }

    fn record_trade(&mut self, q: f64, p_hat_before: Option<f64>) {
        self.trades.push_back(q);
        while self.trades.len() > self.params.window {
            self.trades.pop_front();
        }
        let Some(p_hat) = self.estimate_with(p_hat_before).filter(|p| *p > 0.0) else { return };
        let n = self.trades.len() as f64;
        let alpha = (self.trades.iter().map(|x| (x - p_hat).powi(2)).sum::<f64>() / n).sqrt() / p_hat;
        let (amin, amax) = match self.alpha_range {
            None => (alpha, alpha),
            Some((a, b)) => (a.min(alpha), b.max(alpha)),
        };
        self.alpha_range = Some((amin, amax));
        let an = if amax > amin { (alpha - amin) / (amax - amin) } else { 0.4 };
        let p = &self.params;
        let theta_star = p.theta_min + (p.theta_max - p.theta_min) * (1.0 - an * (2.0 * (an - 1.0)).exp());
        self.theta = (self.theta + p.beta2 * (theta_star - self.theta)).clamp(p.theta_min, p.theta_max);
    }

    fn learn(&mut self, desired: f64) {
        self.r = (self.r + self.params.beta1 * (desired - self.r)).clamp(-1.0, 1.0);
    }

    fn towards(&self, aggressive: bool, r_shout: f64) -> f64 {
        let p = &self.params;
        if aggressive {
            (1.0 + p.lambda_r) * r_shout + p.lambda_a
        } else {
            (1.0 - p.lambda_r) * r_shout - p.lambda_a
        }
    }

    /// Updates the estimates and, with a live assignment, the aggressiveness.
    /// `view` is the market state after the event.
    pub fn respond(&mut self, role: Role, limit: Option<Price>, event: &MarketEvent, view: &MarketView) {
        let before = self.prev_microprice;
        match event {
            MarketEvent::Trade(t) => {
                let q = t.price.ticks() as f64;
                self.record_trade(q, before);
                if let (Some(limit), Some(p_hat)) = (limit, self.estimate_with(before)) {
                    let tau = self.target_for(role, limit, p_hat, self.r);
                    let passive = match role {
                        Role::Buyer => tau >= q,
                        Role::Seller => tau <= q,
                    };
                    let rs = self.aggressiveness_for(role, limit, p_hat, q);
                    let d = self.towards(!passive, rs);
                    self.learn(d);
                }
            }
            MarketEvent::Shout(s) if !s.traded => {
                if let (Some(limit), Some(p_hat)) = (limit, self.estimate_with(before)) {
                    let tau = self.target_for(role, limit, p_hat, self.r);
                    let q = s.price.ticks() as f64;
                    let outbid = match (role, s.side) {
                        (Role::Buyer, Side::Bid) => q > tau,
                        (Role::Seller, Side::Ask) => q < tau,
                        _ => false,
                    };
                    if outbid {
                        let rs = self.aggressiveness_for(role, limit, p_hat, q);
                        let d = self.towards(true, rs);
                        self.learn(d);
                    }
                }
            }
            _ => {}
        }
        if view.microprice.is_some() {
            self.prev_microprice = view.microprice;
        }
    }
}
