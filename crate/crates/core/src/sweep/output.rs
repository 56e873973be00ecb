//! CSV artifacts of a sweep and of the latency probe.

use std::io;

use super::latency::LatencyReport;
use super::{SweepTable, Method};
use crate::traders::Ticker;

const TIE: f64 = 1e-9;

/// Tickers whose value is within `TIE` of the row maximum, joined by `|`.
pub fn winners(values: &[(Ticker, f64)]) -> String {
    let Some(best) = values.iter().map(|(_, v)| *v).reduce(f64::max) else { return String::new() };
    values
        .iter()
        .filter(|(_, v)| best - v <= TIE)
        .map(|(t, _)| t.as_str())
        .collect::<Vec<_>>()
        .join("|")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Wide table: one row per market plus an `Average` row, one column of mean
/// strategy efficiency per ticker, and the row winner.
pub fn write_summary_csv<W: io::Write>(table: &SweepTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["market".to_string()];
    header.extend(table.tickers.iter().map(|t| t.to_string()));
    header.push("winner".into());
    w.write_record(&header)?;

    let mut sums: Vec<(f64, usize)> = vec![(0.0, 0); table.tickers.len()];
    for m in &table.markets {
        let mut rec = vec![m.market.clone()];
        let mut present = Vec::new();
        for (i, t) in table.tickers.iter().enumerate() {
            let v = m.per_ticker.get(t).map(|s| s.ae_mean);
            if let Some(v) = v {
                sums[i].0 += v;
                sums[i].1 += 1;
                present.push((*t, v));
            }
            rec.push(fmt_opt(v));
        }
        rec.push(winners(&present));
        w.write_record(&rec)?;
    }
    let mut rec = vec!["Average".to_string()];
    let mut present = Vec::new();
    for (i, t) in table.tickers.iter().enumerate() {
        let v = (sums[i].1 > 0).then(|| sums[i].0 / sums[i].1 as f64);
        if let Some(v) = v {
            present.push((*t, v));
        }
        rec.push(fmt_opt(v));
    }
    rec.push(winners(&present));
    w.write_record(&rec)?;
    w.flush()?;
    Ok(())
}

/// Long table: `market,ticker,ae_mean,ae_sd,alpha_mean,pd_mean,n_sessions`.
pub fn write_metrics_csv<W: io::Write>(table: &SweepTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["market", "ticker", "ae_mean", "ae_sd", "alpha_mean", "pd_mean", "n_sessions"])?;
    for m in &table.markets {
        for t in &table.tickers {
            if let Some(s) = m.per_ticker.get(t) {
                w.write_record([
                    m.market.clone(),
                    t.to_string(),
                    format!("{:.4}", s.ae_mean),
                    format!("{:.4}", s.ae_sd),
                    fmt_opt(s.alpha_mean),
                    format!("{:.4}", s.pd_mean),
                    s.n_sessions.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_utests_csv<W: io::Write>(table: &SweepTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["market", "ticker_a", "ticker_b", "n_a", "n_b", "u", "p_two_sided", "p_a_greater", "method", "note"])?;
    for u in &table.utests {
        let (uv, p2, pg, method) = match &u.result {
            Some(r) => (
                format!("{}", r.u),
                format!("{:.6}", r.p_two_sided),
                format!("{:.6}", r.p_greater),
                match r.method {
                    Method::Exact => "exact",
                    Method::Normal => "normal",
                }
                .to_string(),
            ),
            None => Default::default(),
        };
        w.write_record([
            u.market.clone(),
            u.ticker_a.to_string(),
            u.ticker_b.to_string(),
            u.n_a.to_string(),
            u.n_b.to_string(),
            uv,
            p2,
            pg,
            method,
            u.note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (fixture, ticker) and one `Average` row per ticker across
/// fixtures. Latencies in microseconds.
pub fn write_latency_csv<W: io::Write>(rows: &[(String, Ticker, LatencyReport)], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fixture", "ticker", "median_us", "mean_us", "p99_us", "calls"])?;
    let mut tickers: Vec<Ticker> = Vec::new();
    for (fixture, t, r) in rows {
        if !tickers.contains(t) {
            tickers.push(*t);
        }
        w.write_record([
            fixture.clone(),
            t.to_string(),
            format!("{:.3}", r.median),
            format!("{:.3}", r.mean),
            format!("{:.3}", r.p99),
            r.calls.to_string(),
        ])?;
    }
    for t in tickers {
        let mine: Vec<&LatencyReport> = rows.iter().filter(|(_, x, _)| *x == t).map(|(_, _, r)| r).collect();
        let n = mine.len() as f64;
        w.write_record([
            "Average".to_string(),
            t.to_string(),
            format!("{:.3}", mine.iter().map(|r| r.median).sum::<f64>() / n),
            format!("{:.3}", mine.iter().map(|r| r.mean).sum::<f64>() / n),
            format!("{:.3}", mine.iter().map(|r| r.p99).sum::<f64>() / n),
            mine.iter().map(|r| r.calls).sum::<usize>().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winner_ties() {
        assert_eq!(winners(&[(Ticker::Aa, 99.73), (Ticker::Gdx, 98.85)]), "AA");
        assert_eq!(winners(&[(Ticker::Aa, 99.0), (Ticker::Gdx, 99.0 + 1e-12)]), "AA|GDX");
        assert_eq!(winners(&[]), "");
    }

    #[test]
    fn latency_rows_plus_averages() {
        let r = LatencyReport { median: 1.0, mean: 2.0, p99: 3.0, calls: 5 };
        let rows = vec![
            ("M1".to_string(), Ticker::Zip, r),
            ("M6".to_string(), Ticker::Zip, r),
            ("M1".to_string(), Ticker::Gdx, r),
            ("M6".to_string(), Ticker::Gdx, r),
        ];
        let mut buf = Vec::new();
        write_latency_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 + 2);
        assert!(text.contains("Average,ZIP,1.000,2.000,3.000,10"));
    }
}
