//! Fine computation over outage histories and expected-cost forecasting.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::money::Money;

use super::terms::{AvailabilityForecast, SlaTerms};
use super::TreeError;

/// One unavailability interval, `start < end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OutageWire", into = "OutageWire")]
pub struct OutageEvent {
    start: DateTime<Utc>,
    end: DateTime<Utc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutageWire {
    start: DateTime<Utc>,
    end: DateTime<Utc>,
}

impl TryFrom<OutageWire> for OutageEvent {
    type Error = TreeError;
    fn try_from(w: OutageWire) -> Result<Self, TreeError> {
        OutageEvent::new(w.start, w.end)
    }
}

impl From<OutageEvent> for OutageWire {
    fn from(o: OutageEvent) -> Self {
        OutageWire {
            start: o.start,
            end: o.end,
        }
    }
}

impl OutageEvent {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self, TreeError> {
        if start >= end {
            return Err(TreeError::InvalidInterval { start, end });
        }
        Ok(OutageEvent { start, end })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.end
    }
}

/// Fines accrued over a horizon, by component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FineReport {
    pub first_failure_total: Money,
    pub concurrent_failure_total: Money,
    pub availability_total: Money,
    pub grand_total: Money,
}

impl FineReport {
    pub const ZERO: FineReport = FineReport {
        first_failure_total: Money::ZERO,
        concurrent_failure_total: Money::ZERO,
        availability_total: Money::ZERO,
        grand_total: Money::ZERO,
    };
}

/// Count outages that started while an earlier-starting outage was still
/// open. Ties on the start instant do not count as "earlier-starting".
fn concurrent_count(outages: &[OutageEvent]) -> usize {
    let mut sorted: Vec<&OutageEvent> = outages.iter().collect();
    sorted.sort_by_key(|o| (o.start, o.end));
    let mut concurrent = 0;
    let mut max_end: Option<DateTime<Utc>> = None;
    let mut i = 0;
    while i < sorted.len() {
        let group_start = sorted[i].start;
        let mut group_max = sorted[i].end;
        let mut j = i;
        while j < sorted.len() && sorted[j].start == group_start {
            if max_end.is_some_and(|m| m > group_start) {
                concurrent += 1;
            }
            group_max = group_max.max(sorted[j].end);
            j += 1;
        }
        max_end = Some(max_end.map_or(group_max, |m| m.max(group_max)));
        i = j;
    }
    concurrent
}

/// Total covered milliseconds of the outage union clipped to `[lo, hi)`.
fn downtime_ms(outages: &[OutageEvent], lo: DateTime<Utc>, hi: DateTime<Utc>) -> i64 {
    let mut clipped: Vec<(DateTime<Utc>, DateTime<Utc>)> = outages
        .iter()
        .map(|o| (o.start.max(lo), o.end.min(hi)))
        .filter(|(s, e)| s < e)
        .collect();
    clipped.sort();
    let mut total = 0;
    let mut open: Option<(DateTime<Utc>, DateTime<Utc>)> = None;
    for (s, e) in clipped {
        match open {
            Some((os, oe)) if s <= oe => open = Some((os, oe.max(e))),
            Some((os, oe)) => {
                total += (oe - os).num_milliseconds();
                open = Some((s, e));
            }
            None => open = Some((s, e)),
        }
    }
    if let Some((os, oe)) = open {
        total += (oe - os).num_milliseconds();
    }
    total
}

/// Compute the fine report for one SLA over a horizon.
///
/// Every outage is fined exactly once: with the concurrent-failure fine
/// when it started while an earlier-starting outage was still open, with
/// the first-failure fine otherwise. Availability clauses charge their
/// fine for each complete calendar period (windows of fixed length
/// anchored at the horizon start) whose availability percentage falls
/// below the clause minimum; overlapping outages are unioned before the
/// downtime of a window is measured.
///
/// Outages are expected to be clipped to the horizon; the availability
/// component clips defensively either way.
pub fn compute_fines(
    terms: &SlaTerms,
    outages: &[OutageEvent],
    horizon: (DateTime<Utc>, DateTime<Utc>),
) -> Result<FineReport, TreeError> {
    let (start, end) = horizon;
    if start >= end {
        return Err(TreeError::InvalidHorizon { start, end });
    }

    let concurrent = concurrent_count(outages) as i64;
    let first = outages.len() as i64 - concurrent;
    let first_failure_total = terms.first_failure_fine * first;
    let concurrent_failure_total = terms.concurrent_failure_fine * concurrent;

    let mut availability_total = Money::ZERO;
    for clause in &terms.availability_clauses {
        let period_ms = clause.period.seconds() * 1000;
        let horizon_ms = (end - start).num_milliseconds();
        let complete_periods = horizon_ms / period_ms;
        let mut breaches = 0;
        for k in 0..complete_periods {
            let lo = start + chrono::Duration::milliseconds(k * period_ms);
            let hi = lo + chrono::Duration::milliseconds(period_ms);
            let down = downtime_ms(outages, lo, hi);
            let availability = 100.0 * (1.0 - down as f64 / period_ms as f64);
            if availability < clause.min_percent {
                breaches += 1;
            }
        }
        availability_total += clause.fine * breaches;
    }

    Ok(FineReport {
        first_failure_total,
        concurrent_failure_total,
        availability_total,
        grand_total: first_failure_total + concurrent_failure_total + availability_total,
    })
}

/// Deterministic analytic surrogate for the expected cost of running
/// under `terms` for `horizon_years`, given a behavior forecast.
///
/// With `λ = expected_failures_per_year × horizon_years`: the first
/// failure costs `first_failure_fine × min(1, λ)`, every further failure
/// `concurrent_failure_fine × max(0, λ − 1)`, and each availability
/// clause whose forecast percentage misses its minimum charges its fine
/// for every period of the horizon.
pub fn expected_cost(
    terms: &SlaTerms,
    forecast: &AvailabilityForecast,
    horizon_years: f64,
) -> Result<Money, TreeError> {
    if horizon_years <= 0.0 || horizon_years.is_nan() {
        return Err(TreeError::InvalidHorizonYears(horizon_years));
    }
    if forecast.expected_failures_per_year < 0.0 {
        return Err(TreeError::InvalidForecast(
            "expected_failures_per_year is negative".into(),
        ));
    }
    let lambda = forecast.expected_failures_per_year * horizon_years;
    let mut dollars = terms.first_failure_fine.as_f64() * lambda.min(1.0)
        + terms.concurrent_failure_fine.as_f64() * (lambda - 1.0).max(0.0);
    for clause in &terms.availability_clauses {
        let forecast_percent = forecast
            .expected_availability_percent
            .get(&clause.period)
            .copied()
            .ok_or(TreeError::MissingForecast(clause.period))?;
        if forecast_percent < clause.min_percent {
            dollars += clause.fine.as_f64() * clause.period.per_year() * horizon_years;
        }
    }
    Ok(Money::from_f64(dollars))
}

/// Pick the candidate with the lowest expected cost. Ties break toward
/// the lower `total_fines`, then the lexicographically smaller id.
pub fn optimal_sla(
    candidates: &[(String, SlaTerms)],
    forecast: &AvailabilityForecast,
    horizon_years: f64,
) -> Result<String, TreeError> {
    if candidates.is_empty() {
        return Err(TreeError::NoCandidates);
    }
    let mut keyed = Vec::with_capacity(candidates.len());
    for (id, terms) in candidates {
        let cost = expected_cost(terms, forecast, horizon_years)?;
        keyed.push((cost, terms.total_fines, id.as_str()));
    }
    let best = keyed.into_iter().min().expect("non-empty candidates");
    Ok(best.2.to_string())
}
