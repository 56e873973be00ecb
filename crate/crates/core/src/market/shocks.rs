use serde::{Deserialize, Serialize};

use super::MarketError;

/// One run of days trading under a single schedule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start_day: u32,
    pub schedule: String,
}

/// Which static schedule is in force on each day of a session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShockTimetable {
    segments: Vec<Segment>,
}

impl ShockTimetable {
    pub fn constant(schedule: impl Into<String>) -> Self {
        Self { segments: vec![Segment { start_day: 1, schedule: schedule.into() }] }
    }

    pub fn new(segments: Vec<Segment>) -> Result<Self, MarketError> {
        match segments.first() {
            Some(s) if s.start_day == 1 => {}
            _ => return Err(MarketError::BadTimetable("first segment must start on day 1".into())),
        }
        if segments.windows(2).any(|w| w[1].start_day <= w[0].start_day) {
            return Err(MarketError::BadTimetable("segment start days must increase".into()));
        }
        Ok(Self { segments })
    }

    /// Parses a shock code such as `MS31` or `MS1231`.
    ///
    /// Each digit after `MS` names a static schedule `M<digit>`; the session
    /// is split into that many equal runs of days. `MS31` over 20 days is M3
    /// for days 1-10 and M1 from day 11; `MS1231` switches on days 6, 11, 16.
    pub fn from_code(code: &str, n_days: u32) -> Result<Self, MarketError> {
        let digits = code
            .strip_prefix("MS")
            .filter(|d| d.len() >= 2 && d.chars().all(|c| c.is_ascii_digit()))
            .ok_or_else(|| MarketError::BadTimetable(format!("unrecognised shock code {code:?}")))?;
        let k = digits.len() as u32;
        if n_days < k {
            return Err(MarketError::BadTimetable(format!(
                "{code} needs at least {k} days, session has {n_days}"
            )));
        }
        let segments = digits
            .chars()
            .enumerate()
            .map(|(i, d)| Segment { start_day: 1 + i as u32 * n_days / k, schedule: format!("M{d}") })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Label of the last segment starting on or before `day` (1-based).
    pub fn schedule_for_day(&self, day: u32) -> &str {
        let idx = self.segments.partition_point(|s| s.start_day <= day).max(1) - 1;
        &self.segments[idx].schedule
    }
}
