mod common;

use cda_arena::exchange::{Order, OrderBook, Side, Trade};
use cda_arena::market::{Catalog, Clock, MarketEnv, SupplyDemandSchedule};
use cda_arena::metrics::{profit_dispersion, smiths_alpha, TraderOutcome};
use cda_arena::price::Price;
use cda_arena::session::{run_session, RosterSide, SessionConfig};
use cda_arena::traders::gdx::BeliefCurve;
use cda_arena::traders::{
    Aa, AaParams, AaVariant, Agent, MarketEvent, MarketView, Role, Shout, StrategyParams, Ticker,
};
use common::gdx::random_history;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn short_clock(days: u32) -> Clock {
    Clock { n_days: days, day_length_s: 40, polls_per_second: 8 }
}

fn session(market: &str, buyers: &str, sellers: &str, seed: u64, clock: Clock) -> SessionConfig {
    let buyers: RosterSide = buyers.parse().unwrap();
    let sellers: RosterSide = sellers.parse().unwrap();
    let env = Catalog::builtin().build_env(market, buyers.total(), sellers.total(), clock).unwrap();
    SessionConfig { env, buyers, sellers, seed, params: StrategyParams::default(), keep_tape: false }
}

fn p(ticks: i64) -> Price {
    Price::from_ticks(ticks).unwrap()
}

proptest! {
    #![proptest_config(common::cases(128))]

    #[test]
    fn book_never_crossed(seed in any::<u64>(), len in 1usize..=80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let msgs = common::random_messages(&mut rng, len, 5);
        let mut book = OrderBook::new(5);
        for m in &msgs {
            match *m {
                cda_arena::exchange::Message::Submit(o) => { book.submit_order(o).unwrap(); }
                cda_arena::exchange::Message::Cancel { trader, side, time } => { let _ = book.cancel_order(trader, side, time); }
            }
            if let (Some(b), Some(a)) = book.best_prices() {
                prop_assert!(b < a);
                let mp = book.microprice().unwrap();
                prop_assert!((b.ticks() as f64) < mp && mp < a.ticks() as f64);
            }
        }
    }

    #[test]
    fn gdx_beliefs_are_monotone(seed in any::<u64>(), len in 0usize..=30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hist = random_history(&mut rng, len);
        for role in [Role::Buyer, Role::Seller] {
            let curve = BeliefCurve::build(role, hist.iter());
            let grid = curve.on_grid(2850, 3150);
            for w in grid.windows(2) {
                match role {
                    Role::Buyer => prop_assert!(w[0] <= w[1] + 1e-12),
                    Role::Seller => prop_assert!(w[0] + 1e-12 >= w[1]),
                }
            }
            prop_assert!(grid.iter().all(|b| (0.0..=1.0).contains(b)));
        }
    }

    #[test]
    fn aa_state_stays_bounded(seed in any::<u64>(), maa in any::<bool>(), steps in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = AaParams::default();
        let variant = if maa { AaVariant::Maa } else { AaVariant::Classic };
        let mut aa = Aa::new(variant, &params);
        let role = if rng.random_bool(0.5) { Role::Buyer } else { Role::Seller };
        let limit = p(rng.random_range(1000..5000));
        let mut book = OrderBook::new(3);
        let mut trades: Vec<Trade> = Vec::new();
        for t in 0..steps as u64 {
            let side = if rng.random_bool(0.5) { Side::Bid } else { Side::Ask };
            let order = Order { id: t + 1, trader: rng.random_range(0..3), side, price: p(rng.random_range(1..8000)), qty: 1, time: t };
            let out = book.submit_order(order).unwrap();
            trades.extend(out.trades.iter().copied());
            let view = MarketView::snapshot(&book, &trades, 20, t, 1);
            let mut events: Vec<MarketEvent> = out.trades.iter().map(|x| MarketEvent::Trade(*x)).collect();
            events.push(MarketEvent::Shout(Shout { time: t, trader: order.trader, order_id: order.id, side, price: order.price, traded: !out.trades.is_empty() }));
            let lim = rng.random_bool(0.9).then_some(limit);
            for e in &events {
                aa.respond(role, lim, e, &view);
                prop_assert!((-1.0..=1.0).contains(&aa.r), "r = {}", aa.r);
                prop_assert!(aa.theta >= params.theta_min && aa.theta <= params.theta_max);
            }
            if let Some(q) = aa.quote(role, limit, &view) {
                match role {
                    Role::Buyer => prop_assert!(q <= limit),
                    Role::Seller => prop_assert!(q >= limit),
                }
            }
        }
    }

    #[test]
    fn alpha_and_pd_ignore_labels(
        rows in prop::collection::vec((0i64..500, 0i64..500), 1..20),
        prices in prop::collection::vec((2500i64..3500, 2900i64..3100), 1..30),
        rot in 0usize..20,
    ) {
        let outcomes: Vec<TraderOutcome> = rows.iter().map(|(a, b)| TraderOutcome { ticker: Ticker::Zic, profit: *a, potential: *b }).collect();
        let mut shuffled = outcomes.clone();
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        prop_assert!((profit_dispersion(&outcomes) - profit_dispersion(&shuffled)).abs() < 1e-9);

        let pairs: Vec<(Price, Price)> = prices.iter().map(|(a, b)| (p(*a), p(*b))).collect();
        let mut rev = pairs.clone();
        rev.reverse();
        let (x, y) = (smiths_alpha(&pairs).unwrap(), smiths_alpha(&rev).unwrap());
        prop_assert!((x.percent - y.percent).abs() < 1e-9);
    }

    #[test]
    fn trade_at_equilibrium_never_raises_alpha(
        prices in prop::collection::vec(2500i64..3500, 1..30),
        p0 in 2900i64..3100,
    ) {
        let mut pairs: Vec<(Price, Price)> = prices.iter().map(|a| (p(*a), p(p0))).collect();
        let before = smiths_alpha(&pairs).unwrap().percent;
        pairs.push((p(p0), p(p0)));
        prop_assert!(smiths_alpha(&pairs).unwrap().percent <= before + 1e-12);
    }

    #[test]
    fn pd_zero_iff_equilibrium_profits(rows in prop::collection::vec((0i64..50, 0i64..50), 1..10)) {
        let outcomes: Vec<TraderOutcome> = rows.iter().map(|(a, b)| TraderOutcome { ticker: Ticker::Gdx, profit: *a, potential: *b }).collect();
        let all_equal = rows.iter().all(|(a, b)| a == b);
        prop_assert_eq!(profit_dispersion(&outcomes) == 0.0, all_equal);
    }
}

proptest! {
    #![proptest_config(common::cases(24))]

    /// Periodic static markets: realised surplus never beats the exhaustive optimum.
    #[test]
    fn efficiency_bounded_by_exhaustive_optimum(
        (buyers, sellers) in (2usize..=6).prop_flat_map(|n| (
            prop::collection::vec(1000i64..4000, n),
            prop::collection::vec(1000i64..4000, n),
        )),
        seed in any::<u64>(),
        ticker in prop::sample::select(vec!["ZIC", "GDX", "AA", "ZIP", "SHVR", "MAA", "ASAD"]),
    ) {
        let sched = SupplyDemandSchedule::new(
            "small",
            buyers.iter().map(|t| p(*t)).collect(),
            sellers.iter().map(|t| p(*t)).collect(),
        ).unwrap();
        let clock = short_clock(2);
        let env = MarketEnv::static_market(sched, clock);
        let cfg = SessionConfig {
            env,
            buyers: format!("{ticker}:{}", buyers.len()).parse().unwrap(),
            sellers: format!("{ticker}:{}", sellers.len()).parse().unwrap(),
            seed,
            params: StrategyParams::default(),
            keep_tape: false,
        };
        let r = run_session(&cfg).unwrap();
        let best = common::max_surplus_exhaustive(&buyers, &sellers);
        for d in &r.days {
            prop_assert!(d.realized <= best);
            prop_assert_eq!(d.max_surplus, best);
        }
        if let Some(ae) = r.metrics.ae_global {
            prop_assert!(ae <= 100.0 + 1e-9);
        }
    }
}

#[test]
fn no_strategy_ever_trades_at_a_loss() {
    let mix = "ZIC:2,SHVR:2,ZIP:2,ASAD:2,GDX:2,AA:2,MAA:2";
    for (i, market) in ["M1", "M3", "MS14", "MS1231", "M6", "M9"].iter().enumerate() {
        let r = run_session(&session(market, mix, mix, 100 + i as u64, short_clock(4))).unwrap();
        assert!(!r.trades.is_empty(), "{market}: no trades");
        for t in &r.trades {
            assert!(t.buyer_limit >= t.price && t.price >= t.seller_limit, "{market}: {t:?}");
            // surplus conservation on every trade
            let b = t.buyer_limit.ticks() - t.price.ticks();
            let s = t.price.ticks() - t.seller_limit.ticks();
            assert_eq!(b + s, t.buyer_limit.ticks() - t.seller_limit.ticks());
        }
        assert_eq!(r.total_profit(), r.trades.iter().map(|t| t.buyer_limit.ticks() - t.seller_limit.ticks()).sum::<i64>());
    }
}

/// ASAD is ZIP plus a detector; while the detector is quiet the two are
/// indistinguishable given the same seed.
#[test]
fn asad_equals_zip_without_shocks() {
    let params = StrategyParams::default();
    for seed in 0..20u64 {
        for role in [Role::Buyer, Role::Seller] {
            let mut zip = Agent::new(0, role, Ticker::Zip, &params, seed);
            let mut asad = Agent::new(0, role, Ticker::Asad, &params, seed);
            let limit = match role {
                Role::Buyer => p(3500),
                Role::Seller => p(2500),
            };
            let assignment = cda_arena::market::Assignment { trader: 0, side: role.side(), limit, issue_time: 0, day: 1 };
            zip.assign(assignment);
            asad.assign(assignment);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for t in 0..300u64 {
                let view = MarketView::empty(t, 1);
                assert_eq!(zip.quote(&view), asad.quote(&view), "seed {seed} t {t}");
                // trades hover around 30.00 with no level shift
                let price = p(3000 + rng.random_range(-5..=5));
                let event = if t % 3 == 0 {
                    MarketEvent::Trade(Trade { time: t, price, qty: 1, buyer: 1, seller: 2, aggressor: Side::Bid, buy_order: t, sell_order: t + 1 })
                } else {
                    let side = if t % 2 == 0 { Side::Bid } else { Side::Ask };
                    MarketEvent::Shout(Shout { time: t, trader: 3, order_id: t, side, price, traded: false })
                };
                zip.respond(&event, &view);
                asad.respond(&event, &view);
            }
        }
    }
}

/// A book whose microprice ramps one tick per step, with trades printing
/// at the current microprice.
#[test]
fn maa_tracks_a_ramp_without_lag() {
    let params = AaParams::default();
    let mut classic = Aa::new(AaVariant::Classic, &params);
    let mut maa = Aa::new(AaVariant::Maa, &params);
    let limit = p(4000);
    let mut trades = Vec::new();
    for step in 0..40i64 {
        let truth = 3000 + 10 * step;
        let mut book = OrderBook::new(2);
        book.submit_order(Order { id: 1, trader: 0, side: Side::Bid, price: p(truth - 5), qty: 1, time: 0 }).unwrap();
        book.submit_order(Order { id: 2, trader: 1, side: Side::Ask, price: p(truth + 5), qty: 1, time: 0 }).unwrap();
        let trade = Trade {
            time: step as u64,
            price: p(truth),
            qty: 1,
            buyer: 0,
            seller: 1,
            aggressor: Side::Bid,
            buy_order: 10 + step as u64,
            sell_order: 100 + step as u64,
        };
        trades.push(trade);
        let view = MarketView::snapshot(&book, &trades, 20, step as u64, 1);
        classic.respond(Role::Buyer, Some(limit), &MarketEvent::Trade(trade), &view);
        maa.respond(Role::Buyer, Some(limit), &MarketEvent::Trade(trade), &view);
        // the next step's book has moved before any trade prints there
        let mut next = OrderBook::new(2);
        let ahead = truth + 10;
        next.submit_order(Order { id: 1, trader: 0, side: Side::Bid, price: p(ahead - 5), qty: 1, time: 0 }).unwrap();
        next.submit_order(Order { id: 2, trader: 1, side: Side::Ask, price: p(ahead + 5), qty: 1, time: 0 }).unwrap();
        let next_view = MarketView::snapshot(&next, &trades, 20, step as u64 + 1, 1);
        let m = maa.equilibrium_estimate(&next_view).unwrap();
        let c = classic.equilibrium_estimate(&next_view).unwrap();
        assert_eq!(m, ahead as f64);
        assert!((m - ahead as f64).abs() < (c - ahead as f64).abs(), "step {step}: maa {m} classic {c}");
    }
}

#[test]
fn zic_disperses_profit_more_than_zip() {
    let clock = Clock { n_days: 5, ..Clock::default() };
    let mean_pd = |roster: &str| {
        (0..50u64)
            .map(|s| run_session(&session("M1", roster, roster, 7_000 + s, clock)).unwrap().metrics.pd)
            .sum::<f64>()
            / 50.0
    };
    let (zic, zip) = (mean_pd("ZIC:16"), mean_pd("ZIP:16"));
    assert!(zic > zip, "ZIC {zic} vs ZIP {zip}");
}

#[test]
fn session_reruns_are_identical() {
    let mix = "AA:4,GDX:4,ZIC:4,ASAD:4";
    let cfg = session("MS23", mix, mix, 99, short_clock(3));
    let a = run_session(&cfg).unwrap();
    let b = run_session(&cfg).unwrap();
    assert_eq!(a.to_json_line(), b.to_json_line());
    let other = run_session(&SessionConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(a.to_json_line(), other.to_json_line());
}
