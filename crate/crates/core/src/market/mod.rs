//! Market environments: supply/demand schedules, equilibrium, offset
//! functions, shock timetables and assignment replenishment.

mod offset;
mod schedule;
mod shocks;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use offset::OffsetFunction;
pub use schedule::{equilibrium, Equilibrium, LimitSpec, ScheduleSpec, SupplyDemandSchedule};
pub use shocks::{Segment, ShockTimetable};

use crate::exchange::{Side, Time, TraderId};
use crate::price::Price;

const BUILTIN_CATALOG: &str = include_str!("../../data/markets.toml");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarketError {
    #[error("no trade possible: every buyer limit is below every seller limit")]
    NoTradePossible,
    #[error("schedule has an empty side")]
    EmptySchedule,
    #[error("roster has {roster} traders but schedule lists {schedule} limits")]
    RosterMismatch { roster: usize, schedule: usize },
    #[error("{0} undefined; bind explicitly")]
    Unbound(String),
    #[error("unknown market {0:?}")]
    UnknownMarket(String),
    #[error("unknown schedule {0:?}")]
    UnknownSchedule(String),
    #[error("bad timetable: {0}")]
    BadTimetable(String),
    #[error("bad market definition: {0}")]
    BadDefinition(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Replenishment {
    /// Every trader receives a fresh assignment at the start of each day.
    #[default]
    Periodic,
    /// The day's assignments arrive as a Poisson stream; `rate` is the
    /// expected number of assignments per trader per day.
    Continuous { rate: f64 },
}

/// Converts between event indices and simulated seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clock {
    pub n_days: u32,
    pub day_length_s: u32,
    pub polls_per_second: u32,
}

impl Default for Clock {
    fn default() -> Self {
        Self { n_days: 20, day_length_s: 300, polls_per_second: 8 }
    }
}

impl Clock {
    pub fn polls_per_day(&self) -> u64 {
        self.day_length_s as u64 * self.polls_per_second as u64
    }

    /// First event index of `day` (1-based).
    pub fn day_start(&self, day: u32) -> Time {
        (day as u64 - 1) * self.polls_per_day()
    }

    pub fn seconds(&self, t: Time) -> f64 {
        t as f64 / self.polls_per_second as f64
    }

    pub fn day_of(&self, t: Time) -> u32 {
        (t / self.polls_per_day()) as u32 + 1
    }
}

/// A private right to buy or sell one unit at no worse than `limit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub trader: TraderId,
    pub side: Side,
    pub limit: Price,
    pub issue_time: Time,
    pub day: u32,
}

/// Declarative market definition as it appears in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MarketDef {
    #[serde(default)]
    pub schedule: Option<String>,
    #[serde(default)]
    pub shocks: Option<String>,
    #[serde(default)]
    pub segments: Option<Vec<Segment>>,
    #[serde(default)]
    pub offset: OffsetFunction,
    #[serde(default)]
    pub replenishment: Replenishment,
}

/// Named schedules and markets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Catalog {
    #[serde(default)]
    pub unbound: Vec<String>,
    #[serde(default)]
    pub schedules: BTreeMap<String, ScheduleSpec>,
    #[serde(default)]
    pub markets: BTreeMap<String, MarketDef>,
}

impl Catalog {
    pub fn builtin() -> Self {
        toml::from_str(BUILTIN_CATALOG).expect("built-in market catalog parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, MarketError> {
        toml::from_str(text).map_err(|e| MarketError::BadDefinition(e.to_string()))
    }

    /// Adds or replaces definitions; binding a market removes it from `unbound`.
    pub fn merge(&mut self, other: Catalog) {
        for name in other.markets.keys() {
            self.unbound.retain(|u| u != name);
        }
        self.schedules.extend(other.schedules);
        self.markets.extend(other.markets);
        for u in other.unbound {
            if !self.unbound.contains(&u) && !self.markets.contains_key(&u) {
                self.unbound.push(u);
            }
        }
    }

    pub fn market(&self, label: &str) -> Result<&MarketDef, MarketError> {
        if self.unbound.iter().any(|u| u == label) {
            return Err(MarketError::Unbound(label.to_string()));
        }
        self.markets.get(label).ok_or_else(|| MarketError::UnknownMarket(label.to_string()))
    }

    pub fn build_env(
        &self,
        label: &str,
        n_buyers: usize,
        n_sellers: usize,
        clock: Clock,
    ) -> Result<MarketEnv, MarketError> {
        let def = self.market(label)?;
        let timetable = match (&def.schedule, &def.shocks, &def.segments) {
            (Some(s), None, None) => ShockTimetable::constant(s.clone()),
            (None, Some(code), None) => ShockTimetable::from_code(code, clock.n_days)?,
            (None, None, Some(segs)) => ShockTimetable::new(segs.clone())?,
            _ => {
                return Err(MarketError::BadDefinition(format!(
                    "market {label} needs exactly one of schedule, shocks, segments"
                )))
            }
        };
        if let Replenishment::Continuous { rate } = def.replenishment {
            if rate.is_nan() || rate <= 0.0 {
                return Err(MarketError::BadDefinition(format!("continuous rate {rate} must be positive")));
            }
        }
        let mut schedules = BTreeMap::new();
        for seg in timetable.segments() {
            if schedules.contains_key(&seg.schedule) {
                continue;
            }
            let spec = self
                .schedules
                .get(&seg.schedule)
                .ok_or_else(|| MarketError::UnknownSchedule(seg.schedule.clone()))?;
            let sched = SupplyDemandSchedule::from_spec(&seg.schedule, spec, n_buyers, n_sellers)?;
            schedules.insert(seg.schedule.clone(), sched);
        }
        Ok(MarketEnv {
            label: label.to_string(),
            timetable,
            schedules,
            offset: def.offset,
            replenishment: def.replenishment,
            clock,
        })
    }
}

/// A fully resolved market for a fixed roster size. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketEnv {
    pub label: String,
    pub timetable: ShockTimetable,
    pub schedules: BTreeMap<String, SupplyDemandSchedule>,
    pub offset: OffsetFunction,
    pub replenishment: Replenishment,
    pub clock: Clock,
}

impl MarketEnv {
    /// A single-schedule periodic market, mostly for tests and fixtures.
    pub fn static_market(schedule: SupplyDemandSchedule, clock: Clock) -> Self {
        let label = schedule.label.clone();
        let mut schedules = BTreeMap::new();
        schedules.insert(label.clone(), schedule);
        Self {
            label: label.clone(),
            timetable: ShockTimetable::constant(label),
            schedules,
            offset: OffsetFunction::None,
            replenishment: Replenishment::Periodic,
            clock,
        }
    }

    pub fn schedule_for_day(&self, day: u32) -> &SupplyDemandSchedule {
        &self.schedules[self.timetable.schedule_for_day(day)]
    }

    pub fn n_buyers(&self) -> usize {
        self.schedules.values().next().map_or(0, |s| s.buyer_limits.len())
    }

    pub fn n_sellers(&self) -> usize {
        self.schedules.values().next().map_or(0, |s| s.seller_limits.len())
    }

    /// The time at which an assignment issued at `t` on `day` reads the offset.
    fn offset_time(&self, day: u32, t: Time) -> Time {
        match self.replenishment {
            Replenishment::Periodic => self.clock.day_start(day),
            Replenishment::Continuous { .. } => t,
        }
    }

    /// Offset in ticks applied to assignments issued at `t`.
    pub fn offset_ticks_at(&self, t: Time) -> i64 {
        if self.offset.is_none() {
            return 0;
        }
        self.offset.ticks(self.clock.seconds(t))
    }

    /// Equilibrium of the schedule whose assignments would be issued at `t`.
    pub fn equilibrium_in_force(&self, t: Time) -> Result<Equilibrium, MarketError> {
        let day = self.clock.day_of(t).min(self.clock.n_days);
        let sched = self.schedule_for_day(day);
        let shift = self.offset_ticks_at(self.offset_time(day, t));
        if shift == 0 {
            sched.equilibrium()
        } else {
            sched.shifted(shift).equilibrium()
        }
    }

    /// Assignments for one day, sorted by issue time.
    ///
    /// Limits from the day's schedule are dealt to traders by a shuffled
    /// one-to-one mapping. Periodic markets issue everything at the day's
    /// first instant; continuous markets spread the same set over the day as
    /// a Poisson stream, reading the offset at each arrival.
    pub fn issue_assignments<R: Rng + ?Sized>(
        &self,
        buyers: &[TraderId],
        sellers: &[TraderId],
        day: u32,
        rng: &mut R,
    ) -> Result<Vec<Assignment>, MarketError> {
        let sched = self.schedule_for_day(day);
        if buyers.len() != sched.buyer_limits.len() {
            return Err(MarketError::RosterMismatch {
                roster: buyers.len(),
                schedule: sched.buyer_limits.len(),
            });
        }
        if sellers.len() != sched.seller_limits.len() {
            return Err(MarketError::RosterMismatch {
                roster: sellers.len(),
                schedule: sched.seller_limits.len(),
            });
        }
        let mut buy_limits = sched.buyer_limits.clone();
        let mut sell_limits = sched.seller_limits.clone();
        buy_limits.shuffle(rng);
        sell_limits.shuffle(rng);

        let mut dealt: Vec<(TraderId, Side, Price)> = buyers
            .iter()
            .zip(buy_limits)
            .map(|(t, l)| (*t, Side::Bid, l))
            .chain(sellers.iter().zip(sell_limits).map(|(t, l)| (*t, Side::Ask, l)))
            .collect();

        let start = self.clock.day_start(day);
        let last = start + self.clock.polls_per_day() - 1;
        let times: Vec<Time> = match self.replenishment {
            Replenishment::Periodic => vec![start; dealt.len()],
            Replenishment::Continuous { rate } => {
                dealt.shuffle(rng);
                poisson_arrivals(dealt.len(), rate, self.clock, start, last, rng)
            }
        };

        Ok(dealt
            .into_iter()
            .zip(times)
            .map(|((trader, side, base), issue_time)| {
                let shift = self.offset_ticks_at(self.offset_time(day, issue_time));
                Assignment {
                    trader,
                    side,
                    limit: Price::clamped(base.ticks() + shift),
                    issue_time,
                    day,
                }
            })
            .collect())
    }
}

/// Arrival instants of `n` events with exponential gaps, expected `rate`
/// events per trader-day. Arrivals past the day's last instant are held there.
fn poisson_arrivals<R: Rng + ?Sized>(
    n: usize,
    rate: f64,
    clock: Clock,
    start: Time,
    last: Time,
    rng: &mut R,
) -> Vec<Time> {
    if rate.is_infinite() {
        return vec![start; n];
    }
    let polls_per_day = clock.polls_per_day() as f64;
    // n arrivals expected per day at rate 1.0
    let per_poll = rate * n as f64 / polls_per_day;
    let gaps = Exp::new(per_poll).expect("positive rate");
    let mut at = 0.0f64;
    (0..n)
        .map(|_| {
            at += gaps.sample(rng);
            (start + at.floor() as Time).min(last)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ids(range: std::ops::Range<u32>) -> Vec<TraderId> {
        range.collect()
    }

    #[test]
    fn builtin_equilibria() {
        let cat = Catalog::builtin();
        for (label, p0) in [("M1", 30.0), ("M2", 30.0), ("M3", 30.0), ("M4", 40.0)] {
            let env = cat.build_env(label, 16, 16, Clock::default()).unwrap();
            let eq = env.schedule_for_day(1).equilibrium().unwrap();
            assert_eq!(eq.price, Price::from_units(p0), "{label}");
        }
    }

    #[test]
    fn m5_requires_binding() {
        let mut cat = Catalog::builtin();
        let err = cat.build_env("M5", 16, 16, Clock::default()).unwrap_err();
        assert_eq!(err.to_string(), "M5 undefined; bind explicitly");
        let binding = Catalog::from_toml("[markets.M5]\nschedule = \"M2\"\n").unwrap();
        cat.merge(binding);
        assert!(cat.build_env("M5", 16, 16, Clock::default()).is_ok());
    }

    #[test]
    fn periodic_issue_is_one_per_trader_at_day_start() {
        let env = Catalog::builtin().build_env("M1", 16, 16, Clock::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = env.issue_assignments(&ids(0..16), &ids(16..32), 3, &mut rng).unwrap();
        assert_eq!(a.len(), 32);
        assert!(a.iter().all(|x| x.issue_time == env.clock.day_start(3)));
        assert_eq!(a.iter().filter(|x| x.side == Side::Bid).count(), 16);
        let mut traders: Vec<_> = a.iter().map(|x| x.trader).collect();
        traders.sort_unstable();
        assert_eq!(traders, ids(0..32));
        let mut limits: Vec<_> = a.iter().filter(|x| x.side == Side::Bid).map(|x| x.limit).collect();
        limits.sort_unstable();
        let mut sched = env.schedule_for_day(3).buyer_limits.clone();
        sched.sort_unstable();
        assert_eq!(limits, sched);
    }

    #[test]
    fn buyers_only_get_buy_assignments() {
        let env = Catalog::builtin().build_env("M8", 16, 16, Clock::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for day in 1..=3 {
            for a in env.issue_assignments(&ids(0..16), &ids(16..32), day, &mut rng).unwrap() {
                assert_eq!(a.side == Side::Bid, a.trader < 16);
            }
        }
    }

    #[test]
    fn roster_mismatch_is_signalled() {
        let cat = Catalog::builtin();
        let env = cat.build_env("M1", 16, 16, Clock::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            env.issue_assignments(&ids(0..15), &ids(16..32), 1, &mut rng),
            Err(MarketError::RosterMismatch { .. })
        ));
    }

    #[test]
    fn continuous_arrivals_are_seeded_and_within_the_day() {
        let env = Catalog::builtin().build_env("M6", 16, 16, Clock::default()).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            env.issue_assignments(&ids(0..16), &ids(16..32), 2, &mut rng).unwrap()
        };
        let a = run(11);
        assert_eq!(a, run(11));
        assert_ne!(a, run(12));
        let (lo, hi) = (env.clock.day_start(2), env.clock.day_start(3));
        assert!(a.iter().all(|x| (lo..hi).contains(&x.issue_time)));
        assert!(a.windows(2).all(|w| w[0].issue_time <= w[1].issue_time));
        assert!(a.iter().any(|x| x.issue_time > lo));
    }

    #[test]
    fn infinite_rate_degenerates_to_periodic_timing() {
        let mut cat = Catalog::builtin();
        let mut def = cat.markets["M1"].clone();
        def.replenishment = Replenishment::Continuous { rate: f64::INFINITY };
        cat.markets.insert("FAST".into(), def);
        let env = cat.build_env("FAST", 16, 16, Clock::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = env.issue_assignments(&ids(0..16), &ids(16..32), 4, &mut rng).unwrap();
        assert!(a.iter().all(|x| x.issue_time == env.clock.day_start(4)));
    }

    #[test]
    fn offsets_shift_in_force_equilibrium() {
        let env = Catalog::builtin().build_env("M8", 16, 16, Clock::default()).unwrap();
        let t = 74 * env.clock.polls_per_second as Time;
        let eq = env.equilibrium_in_force(t).unwrap();
        assert_eq!(eq.price, Price::from_units(67.0));
    }

    #[test]
    fn shock_markets_switch_schedule() {
        let env = Catalog::builtin().build_env("MS31", 16, 16, Clock::default()).unwrap();
        assert_eq!(env.schedule_for_day(10).label, "M3");
        assert_eq!(env.schedule_for_day(11).label, "M1");
    }
}
