use serde::{Deserialize, Serialize};

/// Time-varying shift added to every assignment limit, in currency units.
///
/// `t` is simulated seconds since the start of the session.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffsetFunction {
    #[default]
    None,
    /// `c * sin(t / 30)`
    Sin { c: f64 },
    /// `c * t * (1 + sin(omega * t))`
    GrowingSin { c: f64, omega: f64 },
    /// `(t mod 75) / 2`
    Saw,
    /// `c * sgn(sin(t / 30))`
    Square { c: f64 },
}

impl OffsetFunction {
    pub const DEFAULT_C: f64 = 20.0;
    pub const DEFAULT_GROWING_C: f64 = 0.005;
    pub const DEFAULT_OMEGA: f64 = 1.0 / 20.0;

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            OffsetFunction::None => 0.0,
            OffsetFunction::Sin { c } => c * (t / 30.0).sin(),
            OffsetFunction::GrowingSin { c, omega } => c * t * (1.0 + (omega * t).sin()),
            OffsetFunction::Saw => t.rem_euclid(75.0) / 2.0,
            OffsetFunction::Square { c } => {
                let s = (t / 30.0).sin();
                if s > 0.0 {
                    c
                } else if s < 0.0 {
                    -c
                } else {
                    0.0
                }
            }
        }
    }

    /// Offset rounded to whole ticks.
    pub fn ticks(&self, t: f64) -> i64 {
        (self.value(t) * crate::price::TICKS_PER_UNIT as f64).round() as i64
    }

    pub fn is_none(&self) -> bool {
        matches!(self, OffsetFunction::None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn saw_examples() {
        assert_eq!(OffsetFunction::Saw.value(0.0), 0.0);
        assert_eq!(OffsetFunction::Saw.value(74.0), 37.0);
        assert_eq!(OffsetFunction::Saw.value(75.0), 0.0);
        assert_eq!(OffsetFunction::Saw.value(300.0), 0.0);
    }

    #[test]
    fn saw_stays_below_its_peak() {
        for i in 0..10_000 {
            let v = OffsetFunction::Saw.value(i as f64 * 0.37);
            assert!((0.0..37.5).contains(&v));
        }
    }

    #[test]
    fn sin_quarter_period() {
        let f = OffsetFunction::Sin { c: 20.0 };
        assert!((f.value(15.0 * PI) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn square_and_growing() {
        let sq = OffsetFunction::Square { c: 20.0 };
        assert_eq!(sq.value(0.0), 0.0);
        assert_eq!(sq.value(10.0), 20.0);
        assert_eq!(sq.value(100.0), -20.0);
        let g = OffsetFunction::GrowingSin { c: 0.005, omega: 0.05 };
        assert_eq!(g.value(0.0), 0.0);
        let t = 10.0 * PI;
        assert!((g.value(t) - 0.005 * t * 2.0).abs() < 1e-9);
    }
}
