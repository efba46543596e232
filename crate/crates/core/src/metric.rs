//! Ticket coverage figures.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::Zero;

use crate::changeset::TicketChangeset;
use crate::coverage::CoverageClass;
use crate::history::TicketRef;
use crate::parser::MethodKey;

/// An exact, unreduced ratio of two counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    /// `None` when `den` is zero.
    pub fn new(num: u64, den: u64) -> Option<Self> {
        (den != 0).then_some(Fraction { num, den })
    }

    /// Percentage rounded half-up to one decimal, e.g. `68.8` for 11/16.
    pub fn percent(&self) -> String {
        percent_of(&BigUint::from(self.num), &BigUint::from(self.den))
    }

    pub fn as_ratio(&self) -> Ratio<u64> {
        Ratio::new(self.num, self.den)
    }

    /// Parses `num/den`.
    pub fn parse(s: &str) -> Option<Self> {
        let (n, d) = s.split_once('/')?;
        Fraction::new(n.trim().parse().ok()?, d.trim().parse().ok()?)
    }

    /// Value rounded half-up to `decimals` places.
    pub fn decimal(&self, decimals: u32) -> String {
        let scale = BigUint::from(10u32).pow(decimals);
        fixed_point(
            &(BigUint::from(self.num) * scale),
            &BigUint::from(self.den),
            decimals,
        )
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(
            (u128::from(self.num) * u128::from(other.den))
                .cmp(&(u128::from(other.num) * u128::from(self.den))),
        )
    }
}

/// Rounds `scaled / den` half-up and inserts a decimal point `decimals`
/// digits from the right.
fn fixed_point(scaled: &BigUint, den: &BigUint, decimals: u32) -> String {
    let two = BigUint::from(2u32);
    let rounded = (scaled * &two + den) / (den * &two);
    let digits = rounded.to_string();
    if decimals == 0 {
        return digits;
    }
    let d = decimals as usize;
    let padded = format!("{digits:0>width$}", width = d + 1);
    let (int, frac) = padded.split_at(padded.len() - d);
    format!("{int}.{frac}")
}

fn percent_of(num: &BigUint, den: &BigUint) -> String {
    fixed_point(&(num * BigUint::from(1000u32)), den, 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TicketCoverageReport {
    pub ticket: TicketRef,
    pub total: u64,
    pub test_exclusive: u64,
    pub startup_covered: u64,
    pub untested: u64,
    /// `(test_exclusive + startup_covered) / total`.
    pub coverage_ratio: Option<Fraction>,
    /// `test_exclusive / total`.
    pub test_dependent_ratio: Option<Fraction>,
    /// The same figures with trivial methods removed.
    pub filtered: Option<Box<TicketCoverageReport>>,
    /// Untested methods ordered by path and start line.
    pub gap_list: Vec<MethodKey>,
}

impl TicketCoverageReport {
    pub fn covered(&self) -> u64 {
        self.test_exclusive + self.startup_covered
    }

    /// Share of covered methods reached during startup.
    pub fn startup_share(&self) -> Option<Fraction> {
        Fraction::new(self.startup_covered, self.covered())
    }
}

fn tally(
    changeset: &TicketChangeset,
    classification: &BTreeMap<MethodKey, CoverageClass>,
) -> TicketCoverageReport {
    let mut report = TicketCoverageReport {
        ticket: changeset.ticket.clone(),
        total: 0,
        test_exclusive: 0,
        startup_covered: 0,
        untested: 0,
        coverage_ratio: None,
        test_dependent_ratio: None,
        filtered: None,
        gap_list: Vec::new(),
    };
    let mut gaps = Vec::new();
    for (key, method) in &changeset.methods {
        report.total += 1;
        match classification
            .get(key)
            .copied()
            .unwrap_or(CoverageClass::Untested)
        {
            CoverageClass::TestExclusive => report.test_exclusive += 1,
            CoverageClass::StartupCovered => report.startup_covered += 1,
            CoverageClass::Untested => {
                report.untested += 1;
                let line = method.descriptor.as_ref().map_or(0, |d| d.start_line);
                gaps.push((key.path.clone(), line, key.clone()));
            }
        }
    }
    gaps.sort();
    report.gap_list = gaps.into_iter().map(|(_, _, k)| k).collect();
    report.coverage_ratio = Fraction::new(report.covered(), report.total);
    report.test_dependent_ratio = Fraction::new(report.test_exclusive, report.total);
    report
}

/// Builds the report for one ticket. The filtered sub-report, when a
/// filtered changeset is given, reuses the same classification.
pub fn compute_report(
    changeset: &TicketChangeset,
    classification: &BTreeMap<MethodKey, CoverageClass>,
    filtered: Option<&TicketChangeset>,
) -> TicketCoverageReport {
    let mut report = tally(changeset, classification);
    report.filtered = filtered.map(|f| Box::new(tally(f, classification)));
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub tickets: u64,
    pub total: u64,
    pub test_exclusive: u64,
    pub startup_covered: u64,
    pub untested: u64,
    /// `total / tickets`.
    pub average_changeset_size: Option<Fraction>,
    /// Startup-covered methods over all covered methods, across tickets.
    pub startup_share_of_covered: Option<Fraction>,
    /// Mean of the per-ticket startup share, over tickets with at least one
    /// covered method.
    pub mean_ticket_startup_share: Option<Ratio<BigUint>>,
    pub coverage_ratio: Option<Fraction>,
    pub filtered: Option<Box<Summary>>,
}

pub fn ratio_percent(r: &Ratio<BigUint>) -> String {
    percent_of(r.numer(), r.denom())
}

pub fn aggregate(reports: &[TicketCoverageReport]) -> Summary {
    let mut s = Summary {
        tickets: reports.len() as u64,
        total: 0,
        test_exclusive: 0,
        startup_covered: 0,
        untested: 0,
        average_changeset_size: None,
        startup_share_of_covered: None,
        mean_ticket_startup_share: None,
        coverage_ratio: None,
        filtered: None,
    };
    let mut share_sum: Ratio<BigUint> = Ratio::zero();
    let mut share_terms = 0u64;
    for r in reports {
        s.total += r.total;
        s.test_exclusive += r.test_exclusive;
        s.startup_covered += r.startup_covered;
        s.untested += r.untested;
        if let Some(share) = r.startup_share() {
            share_sum += Ratio::new(BigUint::from(share.num), BigUint::from(share.den));
            share_terms += 1;
        }
    }
    s.average_changeset_size = Fraction::new(s.total, s.tickets);
    s.startup_share_of_covered =
        Fraction::new(s.startup_covered, s.test_exclusive + s.startup_covered);
    s.coverage_ratio = Fraction::new(s.test_exclusive + s.startup_covered, s.total);
    if share_terms > 0 {
        s.mean_ticket_startup_share = Some(share_sum / BigUint::from(share_terms));
    }
    if reports.iter().any(|r| r.filtered.is_some()) {
        let filtered: Vec<TicketCoverageReport> = reports
            .iter()
            .map(|r| r.filtered.as_deref().cloned().unwrap_or_else(|| r.clone()))
            .collect();
        s.filtered = Some(Box::new(aggregate(&filtered)));
    }
    s
}
