//! Slow, obviously-correct reference implementations used as test oracles.
#![allow(dead_code)]

use cda_arena::exchange::{Message, Order, OrderBook, Side};
use cda_arena::price::Price;
use rand::Rng;

/// Proptest settings without on-disk regression files.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { cases: n, failure_persistence: None, ..Default::default() }
}

/// A fill as seen by the reference matcher.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fill {
    pub time: u64,
    pub price: i64,
    pub qty: u32,
    pub buyer: u32,
    pub seller: u32,
}

#[derive(Clone, Copy, Debug)]
struct Resting {
    seq: u64,
    trader: u32,
    side: Side,
    price: i64,
    qty: u32,
}

/// Order book kept as a flat list, rescanned in full for every match.
#[derive(Default)]
pub struct RescanBook {
    resting: Vec<Resting>,
    seq: u64,
    pub fills: Vec<Fill>,
}

impl RescanBook {
    fn remove(&mut self, trader: u32, side: Side) -> bool {
        let before = self.resting.len();
        self.resting.retain(|r| !(r.trader == trader && r.side == side));
        before != self.resting.len()
    }

    pub fn apply(&mut self, msg: &Message) {
        match *msg {
            Message::Cancel { trader, side, .. } => {
                self.remove(trader, side);
            }
            Message::Submit(o) => {
                self.remove(o.trader, o.side);
                let mut left = o.qty;
                while left > 0 {
                    // best opposite price, earliest arrival among equals
                    let mut best: Option<usize> = None;
                    for (i, r) in self.resting.iter().enumerate() {
                        if r.side == o.side {
                            continue;
                        }
                        let better = match best {
                            None => true,
                            Some(j) => {
                                let b = &self.resting[j];
                                let price_better = match o.side {
                                    Side::Bid => r.price < b.price,
                                    Side::Ask => r.price > b.price,
                                };
                                price_better || (r.price == b.price && r.seq < b.seq)
                            }
                        };
                        if better {
                            best = Some(i);
                        }
                    }
                    let Some(i) = best else { break };
                    let r = self.resting[i];
                    let crosses = match o.side {
                        Side::Bid => o.price.ticks() >= r.price,
                        Side::Ask => o.price.ticks() <= r.price,
                    };
                    if !crosses {
                        break;
                    }
                    let q = left.min(r.qty);
                    let (buyer, seller) = match o.side {
                        Side::Bid => (o.trader, r.trader),
                        Side::Ask => (r.trader, o.trader),
                    };
                    self.fills.push(Fill { time: o.time, price: r.price, qty: q, buyer, seller });
                    left -= q;
                    self.resting[i].qty -= q;
                    if self.resting[i].qty == 0 {
                        self.resting.remove(i);
                    }
                }
                if left > 0 {
                    self.seq += 1;
                    self.resting.push(Resting { seq: self.seq, trader: o.trader, side: o.side, price: o.price.ticks(), qty: left });
                }
            }
        }
    }

    /// Aggregated depth per price, best first.
    pub fn ladder(&self, side: Side) -> Vec<(i64, u32)> {
        let mut prices: Vec<i64> = self.resting.iter().filter(|r| r.side == side).map(|r| r.price).collect();
        prices.sort_unstable();
        prices.dedup();
        if side == Side::Bid {
            prices.reverse();
        }
        prices
            .into_iter()
            .map(|p| (p, self.resting.iter().filter(|r| r.side == side && r.price == p).map(|r| r.qty).sum()))
            .collect()
    }
}

/// Random message sequence over `traders` traders with prices in a narrow
/// band so that crossing is common.
pub fn random_messages<R: Rng>(rng: &mut R, len: usize, traders: u32) -> Vec<Message> {
    let mut out = Vec::with_capacity(len);
    let mut time = 0u64;
    for id in 0..len as u64 {
        time += rng.random_range(0..3);
        let trader = rng.random_range(0..traders);
        let side = if rng.random_bool(0.5) { Side::Bid } else { Side::Ask };
        if rng.random_bool(0.15) {
            out.push(Message::Cancel { trader, side, time });
        } else {
            let price = Price::from_ticks(rng.random_range(2990..=3010)).unwrap();
            let qty = rng.random_range(1..=3);
            out.push(Message::Submit(Order { id: id + 1, trader, side, price, qty, time }));
        }
    }
    out
}

/// Feeds `msgs` through the real engine, ignoring rejected cancels.
pub fn engine_fills(traders: u32, msgs: &[Message]) -> (Vec<Fill>, OrderBook) {
    let mut book = OrderBook::new(traders as usize);
    let mut fills = Vec::new();
    for m in msgs {
        match *m {
            Message::Submit(o) => {
                let out = book.submit_order(o).expect("valid order");
                fills.extend(out.trades.iter().map(|t| Fill {
                    time: t.time,
                    price: t.price.ticks(),
                    qty: t.qty,
                    buyer: t.buyer,
                    seller: t.seller,
                }));
            }
            Message::Cancel { trader, side, time } => {
                let _ = book.cancel_order(trader, side, time);
            }
        }
    }
    (fills, book)
}

/// Largest total gain from trade over all one-to-one pairings of buyers to
/// sellers, by dynamic programming over subsets of the smaller side.
pub fn max_surplus_exhaustive(buyers: &[i64], sellers: &[i64]) -> i64 {
    let (outer, inner, sign) = if buyers.len() >= sellers.len() { (buyers, sellers, 1) } else { (sellers, buyers, -1) };
    let gain = |o: i64, i: i64| sign * (o - i);
    let full = 1usize << inner.len();
    let mut best = vec![i64::MIN; full];
    best[0] = 0;
    for &o in outer {
        let prev = best.clone();
        for mask in 0..full {
            if prev[mask] == i64::MIN {
                continue;
            }
            for (j, &i) in inner.iter().enumerate() {
                if mask & (1 << j) == 0 && gain(o, i) >= 0 {
                    let next = mask | (1 << j);
                    best[next] = best[next].max(prev[mask] + gain(o, i));
                }
            }
        }
    }
    best.into_iter().max().unwrap_or(0)
}

/// Expected value of quoting `path` in turn while the unit is still held.
fn path_value(beliefs: &[f64], surplus: &[f64], gamma: f64, path: &[usize]) -> f64 {
    match path.split_first() {
        None => 0.0,
        Some((&i, rest)) => {
            let b = beliefs[i];
            b * surplus[i] + (1.0 - b) * gamma * path_value(beliefs, surplus, gamma, rest)
        }
    }
}

/// Best first price and its value over every price sequence of length `n`.
/// A sequence is a complete policy here: the only state is "still holding".
pub fn bellman_brute(beliefs: &[f64], surplus: &[f64], gamma: f64, n: u32) -> (f64, Vec<usize>) {
    let m = beliefs.len();
    let mut best = f64::NEG_INFINITY;
    let mut firsts = Vec::new();
    let mut path = vec![0usize; n as usize];
    let total = m.pow(n);
    for code in 0..total {
        let mut c = code;
        for slot in path.iter_mut() {
            *slot = c % m;
            c /= m;
        }
        let v = path_value(beliefs, surplus, gamma, &path);
        if v > best + 1e-12 {
            best = v;
            firsts = vec![path[0]];
        } else if (v - best).abs() <= 1e-12 && !firsts.contains(&path[0]) {
            firsts.push(path[0]);
        }
    }
    (best, firsts)
}

/// Mann-Whitney U of `a` by direct pair counting.
pub fn u_by_pairs(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for x in a {
        for y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Exact two-sided and upper-tail p-values by enumerating every split of the
/// pooled sample into groups of the original sizes.
pub fn u_test_enumerated(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let na = a.len();
    let observed = u_by_pairs(a, b);
    let mean = (na * b.len()) as f64 / 2.0;
    let (mut total, mut two, mut greater) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        let (mut xa, mut xb) = (Vec::new(), Vec::new());
        for (i, v) in pooled.iter().enumerate() {
            if mask & (1 << i) != 0 {
                xa.push(*v);
            } else {
                xb.push(*v);
            }
        }
        let u = u_by_pairs(&xa, &xb);
        total += 1;
        if (u - mean).abs() >= (observed - mean).abs() - 1e-9 {
            two += 1;
        }
        if u >= observed - 1e-9 {
            greater += 1;
        }
    }
    (two as f64 / total as f64, greater as f64 / total as f64)
}

/// Compositions of `n` into `t` non-negative parts, by filtering every
/// vector in `{0..=n}^t`.
pub fn ratios_brute(t: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = (n + 1).pow(t as u32);
    for code in 0..total {
        let mut c = code;
        let v: Vec<usize> = (0..t)
            .map(|_| {
                let d = c % (n + 1);
                c /= n + 1;
                d
            })
            .collect();
        if v.iter().sum::<usize>() == n {
            out.push(v);
        }
    }
    out
}

pub mod gdx {
    use cda_arena::exchange::{Order, OrderBook, Side};
    use cda_arena::price::Price;
    use cda_arena::traders::gdx::{Gdx, GdxParams, ShoutRecord};
    use cda_arena::traders::{MarketView, Role};
    use rand::Rng;

    pub struct Fixture {
        pub gdx: Gdx,
        pub role: Role,
        pub limit: Price,
        pub book: OrderBook,
    }

    impl Fixture {
        pub fn view(&self) -> MarketView<'_> {
            MarketView::snapshot(&self.book, &[], 0, 100, 1)
        }
    }

    pub fn random_history<R: Rng>(rng: &mut R, len: usize) -> Vec<ShoutRecord> {
        (0..len)
            .map(|i| ShoutRecord {
                order_id: i as u64 + 1,
                side: if rng.random_bool(0.5) { Side::Bid } else { Side::Ask },
                price: Price::from_ticks(rng.random_range(2900..=3100)).unwrap(),
                accepted: rng.random_bool(0.4),
            })
            .collect()
    }

    /// A GDX agent with a random shout history facing a random top of book.
    pub fn random_fixture<R: Rng>(rng: &mut R, gamma: f64) -> Fixture {
        let params = GdxParams { gamma, ..GdxParams::default() };
        let mut gdx = Gdx::new(&params);
        let len = rng.random_range(0..=30);
        gdx.history = random_history(rng, len).into();
        gdx.remaining = rng.random_range(1..=25);
        let role = if rng.random_bool(0.5) { Role::Buyer } else { Role::Seller };
        let limit = Price::from_ticks(match role {
            Role::Buyer => rng.random_range(2950..=3200),
            Role::Seller => rng.random_range(2800..=3050),
        })
        .unwrap();
        let mut book = OrderBook::new(2);
        let bid = rng.random_range(2940..=3000);
        let ask = bid + rng.random_range(1..=60);
        if rng.random_bool(0.8) {
            let o = Order { id: 1, trader: 0, side: Side::Bid, price: Price::from_ticks(bid).unwrap(), qty: 1, time: 0 };
            book.submit_order(o).unwrap();
        }
        if rng.random_bool(0.8) {
            let o = Order { id: 2, trader: 1, side: Side::Ask, price: Price::from_ticks(ask).unwrap(), qty: 1, time: 0 };
            book.submit_order(o).unwrap();
        }
        Fixture { gdx, role, limit, book }
    }

    /// One-shot GD: maximise belief × surplus over the quote grid, ties to
    /// the price nearest the best same-side quote, abstain when nothing pays.
    pub fn one_shot_argmax(f: &Fixture) -> Option<Price> {
        let view = f.view();
        let (mut lo, mut hi) = f.gdx.grid(f.role, f.limit, &view);
        let l = f.limit.ticks();
        match f.role {
            Role::Buyer => {
                hi = hi.min(l);
                lo = lo.min(l);
            }
            Role::Seller => {
                lo = lo.max(l);
                hi = hi.max(l);
            }
        }
        let belief = f.gdx.belief(f.role);
        let anchor = match f.role {
            Role::Buyer => view.best_bid_price(),
            Role::Seller => view.best_ask_price(),
        }
        .map_or(l, |p| p.ticks())
        .clamp(lo, hi);
        let mut best: Option<(i64, f64)> = None;
        for p in lo..=hi {
            let s = match f.role {
                Role::Buyer => l - p,
                Role::Seller => p - l,
            } as f64;
            let v = belief.at(Price::from_ticks(p).unwrap()) * s;
            let take = match best {
                None => true,
                Some((q, bv)) => v > bv || (v == bv && (p - anchor).abs() < (q - anchor).abs()),
            };
            if take {
                best = Some((p, v));
            }
        }
        best.filter(|(_, v)| *v > 0.0).map(|(p, _)| Price::from_ticks(p).unwrap())
    }
}
