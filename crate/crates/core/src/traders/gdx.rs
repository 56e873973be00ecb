//! Belief-based bidding: a frequentist estimate of how likely a quote at each
//! price is to trade, combined with a discounted dynamic program over the
//! remaining bidding opportunities.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{MarketEvent, MarketView, Role};
use crate::exchange::{OrderId, Side};
use crate::price::Price;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdxParams {
    /// Number of most recent shouts the belief is estimated from.
    pub history: usize,
    /// Discount on the value of later opportunities; 0 gives one-shot GD.
    pub gamma: f64,
    /// Bidding opportunities budgeted per day.
    pub opportunities_per_day: u32,
    /// Ticks the price grid extends past the best bid and best ask.
    pub grid_margin: i64,
}

impl Default for GdxParams {
    fn default() -> Self {
        Self { history: 30, gamma: 0.9, opportunities_per_day: 25, grid_margin: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShoutRecord {
    pub order_id: OrderId,
    pub side: Side,
    pub price: Price,
    pub accepted: bool,
}

/// Acceptance probability as a function of price, for one side.
///
/// Knots sit at observed prices (plus the ticks just outside the observed
/// range and the ends of the quote range); values between knots are
/// linearly interpolated. Buyer beliefs are non-decreasing in price, seller
/// beliefs non-increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefCurve {
    knots: Vec<(i64, f64)>,
}

impl BeliefCurve {
    pub const EMPTY_PRIOR: f64 = 0.5;

    pub fn build<'a>(role: Role, history: impl IntoIterator<Item = &'a ShoutRecord>) -> Self {
        let records: Vec<&ShoutRecord> = history.into_iter().collect();
        if records.is_empty() {
            return Self { knots: Vec::new() };
        }
        let mut points: Vec<i64> = records.iter().map(|r| r.price.ticks()).collect();
        points.sort_unstable();
        points.dedup();
        let (first, last) = (points[0], points[points.len() - 1]);
        points.push(first - 1);
        points.push(last + 1);

        let mut knots: Vec<(i64, f64)> = points
            .into_iter()
            .filter(|p| (Price::MIN.ticks()..=Price::MAX.ticks()).contains(p))
            .filter_map(|p| raw_belief(role, &records, p).map(|b| (p, b)))
            .collect();
        let (lo_anchor, hi_anchor) = match role {
            Role::Buyer => (0.0, 1.0),
            Role::Seller => (1.0, 0.0),
        };
        knots.push((Price::MIN.ticks(), lo_anchor));
        knots.push((Price::MAX.ticks(), hi_anchor));
        knots.sort_by_key(|k| k.0);
        // the formula value wins over an anchor at the same price
        knots.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                let anchor = if earlier.0 == Price::MIN.ticks() { lo_anchor } else { hi_anchor };
                if earlier.1 == anchor && (earlier.0 == Price::MIN.ticks() || earlier.0 == Price::MAX.ticks()) {
                    earlier.1 = later.1;
                }
                true
            } else {
                false
            }
        });
        Self { knots }
    }

    pub fn is_prior(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn at(&self, price: Price) -> f64 {
        self.at_ticks(price.ticks())
    }

    fn at_ticks(&self, p: i64) -> f64 {
        if self.knots.is_empty() {
            return Self::EMPTY_PRIOR;
        }
        let idx = self.knots.partition_point(|k| k.0 <= p);
        if idx == 0 {
            return self.knots[0].1;
        }
        if idx == self.knots.len() {
            return self.knots[idx - 1].1;
        }
        interpolate(self.knots[idx - 1], self.knots[idx], p)
    }

    /// Beliefs at every tick in `lo..=hi`.
    pub fn on_grid(&self, lo: i64, hi: i64) -> Vec<f64> {
        if hi < lo {
            return Vec::new();
        }
        if self.knots.is_empty() {
            return vec![Self::EMPTY_PRIOR; (hi - lo + 1) as usize];
        }
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        let mut idx = self.knots.partition_point(|k| k.0 <= lo);
        for p in lo..=hi {
            while idx < self.knots.len() && self.knots[idx].0 <= p {
                idx += 1;
            }
            let b = if idx == 0 {
                self.knots[0].1
            } else if idx == self.knots.len() {
                self.knots[idx - 1].1
            } else {
                interpolate(self.knots[idx - 1], self.knots[idx], p)
            };
            out.push(b);
        }
        out
    }
}

fn interpolate(a: (i64, f64), b: (i64, f64), p: i64) -> f64 {
    if b.0 == a.0 {
        return b.1;
    }
    let w = (p - a.0) as f64 / (b.0 - a.0) as f64;
    (a.1 + w * (b.1 - a.1)).clamp(0.0, 1.0)
}

/// The unsmoothed frequency estimate at `p`, if any shout informs it.
///
/// Buyer: (accepted bids <= p + asks <= p) / (that + rejected bids >= p).
/// Seller: (accepted asks >= p + bids >= p) / (that + rejected asks <= p).
fn raw_belief(role: Role, records: &[&ShoutRecord], p: i64) -> Option<f64> {
    let (mut favourable, mut against) = (0u32, 0u32);
    for r in records {
        let q = r.price.ticks();
        match (role, r.side) {
            (Role::Buyer, Side::Bid) if r.accepted && q <= p => favourable += 1,
            (Role::Buyer, Side::Bid) if !r.accepted && q >= p => against += 1,
            (Role::Buyer, Side::Ask) if q <= p => favourable += 1,
            (Role::Seller, Side::Ask) if r.accepted && q >= p => favourable += 1,
            (Role::Seller, Side::Ask) if !r.accepted && q <= p => against += 1,
            (Role::Seller, Side::Bid) if q >= p => favourable += 1,
            _ => {}
        }
    }
    let total = favourable + against;
    (total > 0).then(|| favourable as f64 / total as f64)
}

/// Values `V(k)` of holding one unit with `k` bidding opportunities left,
/// for `k = 0..=n`:
///
/// `V(k) = max_p [ b(p)·s(p) + (1 − b(p))·γ·V(k−1) ]`, `V(0) = 0`.
///
/// Each price contributes a line in `V(k−1)`; the maximum is read off their
/// upper envelope, so the cost is linear in the grid size plus `n`.
pub fn continuation_values(beliefs: &[f64], surplus: &[f64], gamma: f64, n: u32) -> Vec<f64> {
    let mut values = vec![0.0; n as usize + 1];
    if beliefs.is_empty() || n == 0 {
        return values;
    }
    let hull = UpperEnvelope::new(
        beliefs.iter().zip(surplus).map(|(b, s)| (b * s, (1.0 - b) * gamma)).collect(),
    );
    let mut cursor = 0;
    for k in 1..=n as usize {
        let (v, c) = hull.max_at(values[k - 1], cursor);
        values[k] = v;
        cursor = c;
    }
    values
}

/// Index of the grid price maximising expected value with `n` opportunities
/// left (counting the current one). Exact ties go to the price nearest
/// `anchor`. `None` when nothing has positive expected value.
pub fn choose_price(
    beliefs: &[f64],
    surplus: &[f64],
    gamma: f64,
    n: u32,
    anchor: usize,
) -> Option<usize> {
    if beliefs.is_empty() || n == 0 {
        return None;
    }
    let cont = continuation_values(beliefs, surplus, gamma, n - 1)[n as usize - 1];
    let mut best: Option<(usize, f64)> = None;
    for (i, (b, s)) in beliefs.iter().zip(surplus).enumerate() {
        let v = b * s + (1.0 - b) * gamma * cont;
        best = match best {
            None => Some((i, v)),
            Some((j, bv)) if v > bv || (v == bv && i.abs_diff(anchor) < j.abs_diff(anchor)) => Some((i, v)),
            keep => keep,
        };
    }
    best.filter(|(_, v)| *v > 0.0).map(|(i, _)| i)
}

/// Upper envelope of lines `y = a + b·x`, queried at non-decreasing `x`.
struct UpperEnvelope {
    lines: Vec<(f64, f64)>,
}

impl UpperEnvelope {
    fn new(mut lines: Vec<(f64, f64)>) -> Self {
        let ascending = lines.windows(2).all(|w| w[0].1 <= w[1].1);
        let descending = lines.windows(2).all(|w| w[0].1 >= w[1].1);
        if descending && !ascending {
            lines.reverse();
        } else if !ascending {
            lines.sort_by(|x, y| x.1.total_cmp(&y.1));
        }
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(lines.len());
        for line in lines {
            if let Some(last) = hull.last() {
                if last.1 == line.1 {
                    if last.0 >= line.0 {
                        continue;
                    }
                    hull.pop();
                }
            }
            while hull.len() >= 2 {
                let (l1, l2) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                // l2 never strictly wins if l3 overtakes l1 no later than l2 does
                if (l1.0 - line.0) * (l2.1 - l1.1) <= (l1.0 - l2.0) * (line.1 - l1.1) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(line);
        }
        Self { lines: hull }
    }

    fn max_at(&self, x: f64, mut cursor: usize) -> (f64, usize) {
        let eval = |l: (f64, f64)| l.0 + l.1 * x;
        while cursor + 1 < self.lines.len() && eval(self.lines[cursor + 1]) >= eval(self.lines[cursor]) {
            cursor += 1;
        }
        (eval(self.lines[cursor]), cursor)
    }
}

#[derive(Clone, Debug)]
pub struct Gdx {
    pub history: VecDeque<ShoutRecord>,
    pub remaining: u32,
    params: GdxParams,
}

impl Gdx {
    pub fn new(params: &GdxParams) -> Self {
        Self { history: VecDeque::new(), remaining: params.opportunities_per_day, params: params.clone() }
    }

    pub fn params(&self) -> &GdxParams {
        &self.params
    }

    pub fn set_grid_margin(&mut self, ticks: i64) {
        self.params.grid_margin = ticks;
    }

    pub fn start_day(&mut self) {
        self.remaining = self.params.opportunities_per_day;
    }

    pub fn belief(&self, role: Role) -> BeliefCurve {
        BeliefCurve::build(role, self.history.iter())
    }

    /// Inclusive tick range searched for a quote.
    pub fn grid(&self, role: Role, limit: Price, view: &MarketView) -> (i64, i64) {
        let m = self.params.grid_margin;
        let l = limit.ticks();
        let bid = view.best_bid_price().map(|p| p.ticks());
        let ask = view.best_ask_price().map(|p| p.ticks());
        let (lo, hi) = match role {
            Role::Buyer => (bid.map_or(Price::MIN.ticks(), |b| b - m), ask.map_or(l, |a| (a + m).min(l))),
            Role::Seller => (bid.map_or(l, |b| (b - m).max(l)), ask.map_or(Price::MAX.ticks(), |a| a + m)),
        };
        (lo.max(Price::MIN.ticks()), hi.min(Price::MAX.ticks()))
    }

    pub fn quote(&mut self, role: Role, limit: Price, view: &MarketView) -> Option<Price> {
        let (mut lo, mut hi) = self.grid(role, limit, view);
        let l = limit.ticks();
        // the limit itself is always a candidate
        match role {
            Role::Buyer => {
                hi = hi.min(l);
                lo = lo.min(l);
            }
            Role::Seller => {
                lo = lo.max(l);
                hi = hi.max(l);
            }
        }
        let belief = self.belief(role);
        let beliefs = belief.on_grid(lo, hi);
        let surplus: Vec<f64> = (lo..=hi)
            .map(|p| match role {
                Role::Buyer => (l - p) as f64,
                Role::Seller => (p - l) as f64,
            })
            .collect();
        let anchor_price = match role {
            Role::Buyer => view.best_bid_price(),
            Role::Seller => view.best_ask_price(),
        }
        .map_or(l, |p| p.ticks());
        let anchor = (anchor_price.clamp(lo, hi) - lo) as usize;
        let n = self.remaining.max(1);
        self.remaining = self.remaining.saturating_sub(1).max(1);
        choose_price(&beliefs, &surplus, self.params.gamma, n, anchor).map(|i| Price::clamped(lo + i as i64))
    }

    pub fn respond(&mut self, event: &MarketEvent) {
        match event {
            MarketEvent::Shout(s) => {
                self.history.push_back(ShoutRecord {
                    order_id: s.order_id,
                    side: s.side,
                    price: s.price,
                    accepted: s.traded,
                });
                while self.history.len() > self.params.history {
                    self.history.pop_front();
                }
            }
            MarketEvent::Trade(t) => {
                for r in self.history.iter_mut() {
                    if r.order_id == t.buy_order || r.order_id == t.sell_order {
                        r.accepted = true;
                    }
                }
            }
            MarketEvent::Cancel(_) => {}
        }
    }
}
