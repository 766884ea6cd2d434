//! Contract terms carried by SLA and MTC configuration items.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};

use crate::money::Money;

/// Calendar period kinds for availability clauses. Fixed desk-scale
/// lengths: a day is 24h, a month 30 days, a year 360 days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PeriodKind {
    Day,
    Month,
    Year,
}

impl PeriodKind {
    pub const ALL: [PeriodKind; 3] = [PeriodKind::Day, PeriodKind::Month, PeriodKind::Year];

    pub fn seconds(self) -> i64 {
        match self {
            PeriodKind::Day => 24 * 3600,
            PeriodKind::Month => 30 * 24 * 3600,
            PeriodKind::Year => 360 * 24 * 3600,
        }
    }

    /// Number of periods of this kind per (360-day) year.
    pub fn per_year(self) -> f64 {
        match self {
            PeriodKind::Day => 360.0,
            PeriodKind::Month => 12.0,
            PeriodKind::Year => 1.0,
        }
    }
}

impl std::fmt::Display for PeriodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PeriodKind::Day => write!(f, "Day"),
            PeriodKind::Month => write!(f, "Month"),
            PeriodKind::Year => write!(f, "Year"),
        }
    }
}

/// Per-period minimum availability with the fine charged for each period
/// that misses it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvailabilityClause {
    pub period: PeriodKind,
    /// Required availability percentage, 0..=100.
    pub min_percent: f64,
    pub fine: Money,
}

/// Fine schedule and priority of one SLA. `total_fines` is maintained as
/// the sum of the first-failure fine, the concurrent-failure fine, and
/// every clause fine; construct through [`SlaTerms::new`] to keep it so.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "SlaTermsWire")]
pub struct SlaTerms {
    /// Higher priority wins inheritance conflicts.
    pub priority: i64,
    pub first_failure_fine: Money,
    pub concurrent_failure_fine: Money,
    pub availability_clauses: Vec<AvailabilityClause>,
    pub total_fines: Money,
}

impl SlaTerms {
    pub fn new(
        priority: i64,
        first_failure_fine: Money,
        concurrent_failure_fine: Money,
        availability_clauses: Vec<AvailabilityClause>,
    ) -> Self {
        let mut terms = SlaTerms {
            priority,
            first_failure_fine,
            concurrent_failure_fine,
            availability_clauses,
            total_fines: Money::ZERO,
        };
        terms.total_fines = terms.computed_total();
        terms
    }

    /// Sum of all fine components; equals `total_fines` for well-formed
    /// terms.
    pub fn computed_total(&self) -> Money {
        self.first_failure_fine
            + self.concurrent_failure_fine
            + self
                .availability_clauses
                .iter()
                .map(|c| c.fine)
                .sum::<Money>()
    }
}

/// File form of [`SlaTerms`]: `total_fines` is derived, never stored.
#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SlaTermsWire {
    priority: i64,
    first_failure_fine: Money,
    concurrent_failure_fine: Money,
    #[serde(default)]
    availability_clauses: Vec<AvailabilityClause>,
}

impl From<SlaTerms> for SlaTermsWire {
    fn from(t: SlaTerms) -> Self {
        SlaTermsWire {
            priority: t.priority,
            first_failure_fine: t.first_failure_fine,
            concurrent_failure_fine: t.concurrent_failure_fine,
            availability_clauses: t.availability_clauses,
        }
    }
}

impl<'de> Deserialize<'de> for SlaTerms {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = SlaTermsWire::deserialize(deserializer)?;
        Ok(SlaTerms::new(
            wire.priority,
            wire.first_failure_fine,
            wire.concurrent_failure_fine,
            wire.availability_clauses,
        ))
    }
}

/// Contracted maintenance benefit value of one MTC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtcTerms {
    pub liability: Money,
}

/// Statistical forecast of a service's failure behavior, used to pick
/// the cheapest SLA before signing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvailabilityForecast {
    pub expected_failures_per_year: f64,
    #[serde(default)]
    pub expected_availability_percent: BTreeMap<PeriodKind, f64>,
}
