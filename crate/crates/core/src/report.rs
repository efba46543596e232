//! Output: text table, canonical JSON, stacked-bar SVG, and the history
//! bundle writer.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::history::{BundleCommit, Commit, TicketId, TicketRef, TicketType};
use crate::metric::{aggregate, ratio_percent, Fraction, Summary, TicketCoverageReport};
use crate::parser::MethodKey;

// ---------------------------------------------------------------------------
// Table

fn pct(f: Option<Fraction>) -> String {
    f.map_or_else(|| "N/A".to_string(), |f| format!("{}%", f.percent()))
}

fn sorted(reports: &[TicketCoverageReport]) -> Vec<&TicketCoverageReport> {
    let mut v: Vec<&TicketCoverageReport> = reports.iter().collect();
    v.sort_by(|a, b| a.ticket.ticket_id.cmp(&b.ticket.ticket_id));
    v
}

/// One row per ticket in ascending ticket order, then a totals row and a few
/// summary lines.
pub fn render_table(reports: &[TicketCoverageReport]) -> String {
    let with_filtered = reports.iter().any(|r| r.filtered.is_some());
    let mut out = String::new();
    let mut header = format!(
        "{:<10} {:<12} {:>6} {:>10} {:>8} {:>9} {:>9}",
        "ticket", "type", "total", "test-excl", "startup", "untested", "coverage"
    );
    if with_filtered {
        let _ = write!(
            header,
            " {:>8} {:>11} {:>11}",
            "f-total", "f-untested", "f-coverage"
        );
    }
    out.push_str(header.trim_end());
    out.push('\n');
    out.push_str(&"-".repeat(header.trim_end().len()));
    out.push('\n');

    let row =
        |label: &str, kind: &str, total: u64, te: u64, st: u64, un: u64, cov: Option<Fraction>| {
            format!(
                "{:<10} {:<12} {:>6} {:>10} {:>8} {:>9} {:>9}",
                label,
                kind,
                total,
                te,
                st,
                un,
                pct(cov)
            )
        };
    for r in sorted(reports) {
        let mut line = row(
            &format!("#{}", r.ticket.ticket_id),
            r.ticket.ticket_type.as_str(),
            r.total,
            r.test_exclusive,
            r.startup_covered,
            r.untested,
            r.coverage_ratio,
        );
        if with_filtered {
            match &r.filtered {
                Some(f) => {
                    let _ = write!(
                        line,
                        " {:>8} {:>11} {:>11}",
                        f.total,
                        f.untested,
                        pct(f.coverage_ratio)
                    );
                }
                None => {
                    let _ = write!(line, " {:>8} {:>11} {:>11}", "-", "-", "-");
                }
            }
        }
        out.push_str(&line);
        out.push('\n');
    }

    let summary = aggregate(reports);
    out.push_str(&"-".repeat(header.trim_end().len()));
    out.push('\n');
    let mut footer = row(
        "TOTAL",
        &format!("{} tickets", summary.tickets),
        summary.total,
        summary.test_exclusive,
        summary.startup_covered,
        summary.untested,
        summary.coverage_ratio,
    );
    if with_filtered {
        if let Some(f) = &summary.filtered {
            let _ = write!(
                footer,
                " {:>8} {:>11} {:>11}",
                f.total,
                f.untested,
                pct(f.coverage_ratio)
            );
        }
    }
    out.push_str(&footer);
    out.push('\n');
    if let Some(avg) = summary.average_changeset_size {
        let _ = writeln!(out, "average changeset size: {}", avg.decimal(2));
    }
    if let Some(share) = summary.startup_share_of_covered {
        let _ = writeln!(
            out,
            "startup share of covered methods: {} ({}%)",
            share,
            share.percent()
        );
    }
    if let Some(mean) = &summary.mean_ticket_startup_share {
        let _ = writeln!(
            out,
            "mean per-ticket startup share of covered methods: {}%",
            ratio_percent(mean)
        );
    }
    out
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonGap {
    pub path: String,
    pub class_chain: String,
    pub name: String,
    pub param_arity: u32,
}

impl From<&MethodKey> for JsonGap {
    fn from(k: &MethodKey) -> Self {
        JsonGap {
            path: k.path.clone(),
            class_chain: k.class_chain.clone(),
            name: k.name.clone(),
            param_arity: k.param_arity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonTicket {
    pub ticket: String,
    #[serde(rename = "type")]
    pub ticket_type: TicketType,
    pub total: u64,
    pub test_exclusive: u64,
    pub startup_covered: u64,
    pub untested: u64,
    pub coverage_ratio: Option<String>,
    pub coverage_percent: Option<String>,
    pub test_dependent_ratio: Option<String>,
    pub test_dependent_percent: Option<String>,
    pub gaps: Vec<JsonGap>,
    pub filtered: Option<Box<JsonTicket>>,
}

impl From<&TicketCoverageReport> for JsonTicket {
    fn from(r: &TicketCoverageReport) -> Self {
        JsonTicket {
            ticket: r.ticket.ticket_id.to_string(),
            ticket_type: r.ticket.ticket_type,
            total: r.total,
            test_exclusive: r.test_exclusive,
            startup_covered: r.startup_covered,
            untested: r.untested,
            coverage_ratio: r.coverage_ratio.map(|f| f.to_string()),
            coverage_percent: r.coverage_ratio.map(|f| f.percent()),
            test_dependent_ratio: r.test_dependent_ratio.map(|f| f.to_string()),
            test_dependent_percent: r.test_dependent_ratio.map(|f| f.percent()),
            gaps: r.gap_list.iter().map(JsonGap::from).collect(),
            filtered: r.filtered.as_deref().map(|f| Box::new(JsonTicket::from(f))),
        }
    }
}

impl JsonTicket {
    fn into_report(self) -> Result<TicketCoverageReport, String> {
        let ticket_id = TicketId::parse(&self.ticket)
            .ok_or_else(|| format!("`{}` is not a ticket number", self.ticket))?;
        let ratio = |s: Option<String>| -> Result<Option<Fraction>, String> {
            s.map(|s| Fraction::parse(&s).ok_or_else(|| format!("bad ratio `{s}`")))
                .transpose()
        };
        Ok(TicketCoverageReport {
            ticket: TicketRef {
                ticket_id,
                ticket_type: self.ticket_type,
            },
            total: self.total,
            test_exclusive: self.test_exclusive,
            startup_covered: self.startup_covered,
            untested: self.untested,
            coverage_ratio: ratio(self.coverage_ratio)?,
            test_dependent_ratio: ratio(self.test_dependent_ratio)?,
            filtered: self
                .filtered
                .map(|f| f.into_report().map(Box::new))
                .transpose()?,
            gap_list: self
                .gaps
                .into_iter()
                .map(|g| MethodKey::new(&g.path, &g.class_chain, &g.name, g.param_arity))
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonSummary {
    pub tickets: u64,
    pub total: u64,
    pub test_exclusive: u64,
    pub startup_covered: u64,
    pub untested: u64,
    pub coverage_ratio: Option<String>,
    pub coverage_percent: Option<String>,
    pub average_changeset_size: Option<String>,
    pub startup_share_of_covered: Option<String>,
    pub startup_share_of_covered_percent: Option<String>,
    pub mean_ticket_startup_share: Option<String>,
    pub mean_ticket_startup_share_percent: Option<String>,
    pub filtered: Option<Box<JsonSummary>>,
}

impl From<&Summary> for JsonSummary {
    fn from(s: &Summary) -> Self {
        JsonSummary {
            tickets: s.tickets,
            total: s.total,
            test_exclusive: s.test_exclusive,
            startup_covered: s.startup_covered,
            untested: s.untested,
            coverage_ratio: s.coverage_ratio.map(|f| f.to_string()),
            coverage_percent: s.coverage_ratio.map(|f| f.percent()),
            average_changeset_size: s.average_changeset_size.map(|f| f.decimal(2)),
            startup_share_of_covered: s.startup_share_of_covered.map(|f| f.to_string()),
            startup_share_of_covered_percent: s.startup_share_of_covered.map(|f| f.percent()),
            mean_ticket_startup_share: s
                .mean_ticket_startup_share
                .as_ref()
                .map(|r| format!("{}/{}", r.numer(), r.denom())),
            mean_ticket_startup_share_percent: s
                .mean_ticket_startup_share
                .as_ref()
                .map(ratio_percent),
            filtered: s
                .filtered
                .as_deref()
                .map(|f| Box::new(JsonSummary::from(f))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonDocument {
    pub summary: JsonSummary,
    pub tickets: Vec<JsonTicket>,
}

/// Canonical JSON: object keys sorted, two-space indentation, LF endings,
/// trailing newline.
pub fn render_json(reports: &[TicketCoverageReport]) -> String {
    let doc = JsonDocument {
        summary: JsonSummary::from(&aggregate(reports)),
        tickets: sorted(reports).into_iter().map(JsonTicket::from).collect(),
    };
    // serde_json's default map is ordered by key, which sorts every object
    let value = serde_json::to_value(&doc).expect("report serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    text
}

/// Reads back the per-ticket reports from [`render_json`] output.
pub fn reports_from_json(text: &str) -> Result<Vec<TicketCoverageReport>, String> {
    let doc: JsonDocument = serde_json::from_str(text).map_err(|e| e.to_string())?;
    doc.tickets
        .into_iter()
        .map(JsonTicket::into_report)
        .collect()
}

// ---------------------------------------------------------------------------
// SVG

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    pub test_exclusive: String,
    pub startup: String,
    pub untested: String,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            test_exclusive: "#D3D3D3".into(),
            startup: "#696969".into(),
            untested: "#000000".into(),
        }
    }
}

/// Accepts `#RRGGBB`.
pub fn parse_color(s: &str) -> Result<String, String> {
    let hex = s
        .strip_prefix('#')
        .filter(|h| h.len() == 6 && h.bytes().all(|b| b.is_ascii_hexdigit()))
        .ok_or_else(|| format!("`{s}` is not a #RRGGBB color"))?;
    Ok(format!("#{}", hex.to_ascii_uppercase()))
}

pub mod layout {
    pub const MARGIN_LEFT: u64 = 90;
    pub const MARGIN_RIGHT: u64 = 20;
    pub const MARGIN_TOP: u64 = 40;
    pub const BAR_WIDTH: u64 = 400;
    pub const BAR_HEIGHT: u64 = 18;
    pub const ROW_PITCH: u64 = 26;
    pub const PAIR_GAP: u64 = 40;
    pub const LEGEND_HEIGHT: u64 = 40;
}

/// Integer segment widths for `counts` on a bar of `width` pixels. Each
/// segment gets the floor of its share; the remainder goes to the last
/// non-zero segment, so the widths always sum to `width` exactly.
pub fn segment_widths(counts: [u64; 3], width: u64) -> [u64; 3] {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return [0; 3];
    }
    let mut widths = counts.map(|c| c * width / total);
    let used: u64 = widths.iter().sum();
    if let Some(last) = (0..3).rev().find(|&i| counts[i] > 0) {
        widths[last] += width - used;
    }
    widths
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn bar(out: &mut String, r: &TicketCoverageReport, x: u64, y: u64, palette: &Palette) {
    use layout::*;
    if r.total == 0 {
        let _ = writeln!(
            out,
            r##"  <rect class="empty" x="{x}" y="{y}" width="{BAR_WIDTH}" height="{BAR_HEIGHT}" fill="none" stroke="#000000"/>"##
        );
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}" text-anchor="middle">n/a</text>"#,
            x + BAR_WIDTH / 2,
            y + BAR_HEIGHT - 4
        );
        return;
    }
    let counts = [r.test_exclusive, r.startup_covered, r.untested];
    let widths = segment_widths(counts, BAR_WIDTH);
    let classes = ["test-exclusive", "startup", "untested"];
    let fills = [&palette.test_exclusive, &palette.startup, &palette.untested];
    let mut cursor = x;
    for i in 0..3 {
        if counts[i] == 0 {
            continue;
        }
        let _ = writeln!(
            out,
            r#"  <rect class="segment {}" x="{cursor}" y="{y}" width="{}" height="{BAR_HEIGHT}" fill="{}" data-count="{}"/>"#,
            classes[i], widths[i], fills[i], counts[i]
        );
        cursor += widths[i];
    }
}

/// One horizontal stacked bar per ticket (test-exclusive, startup,
/// untested). With `filtered`, each ticket gets a second bar to the right
/// computed without trivial methods.
pub fn render_svg(reports: &[TicketCoverageReport], filtered: bool, palette: &Palette) -> String {
    use layout::*;
    let rows = sorted(reports);
    let columns = if filtered { 2 } else { 1 };
    let width = MARGIN_LEFT + columns * BAR_WIDTH + (columns - 1) * PAIR_GAP + MARGIN_RIGHT;
    let height = MARGIN_TOP + rows.len() as u64 * ROW_PITCH + LEGEND_HEIGHT;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"  <title>Ticket coverage</title>"#);
    let right_x = MARGIN_LEFT + BAR_WIDTH + PAIR_GAP;
    if filtered {
        let _ = writeln!(
            out,
            r#"  <text x="{MARGIN_LEFT}" y="{}">all methods</text>"#,
            MARGIN_TOP - 12
        );
        let _ = writeln!(
            out,
            r#"  <text x="{right_x}" y="{}">without trivial methods</text>"#,
            MARGIN_TOP - 12
        );
    }
    for (i, r) in rows.iter().enumerate() {
        let y = MARGIN_TOP + i as u64 * ROW_PITCH;
        let _ = writeln!(
            out,
            r#"  <g class="ticket" data-ticket="{}">"#,
            escape(r.ticket.ticket_id.as_str())
        );
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}" text-anchor="end">#{}</text>"#,
            MARGIN_LEFT - 8,
            y + BAR_HEIGHT - 4,
            escape(r.ticket.ticket_id.as_str())
        );
        bar(&mut out, r, MARGIN_LEFT, y, palette);
        if filtered {
            let f = r.filtered.as_deref().unwrap_or(r);
            bar(&mut out, f, right_x, y, palette);
        }
        out.push_str("  </g>\n");
    }
    let legend_y = MARGIN_TOP + rows.len() as u64 * ROW_PITCH + 10;
    let entries = [
        (
            "test-exclusive",
            &palette.test_exclusive,
            "tested exclusively",
        ),
        ("startup", &palette.startup, "covered at startup"),
        ("untested", &palette.untested, "untested"),
    ];
    for (i, (class, fill, label)) in entries.iter().enumerate() {
        let x = MARGIN_LEFT + i as u64 * 140;
        let _ = writeln!(
            out,
            r#"  <rect class="legend {class}" x="{x}" y="{legend_y}" width="12" height="12" fill="{fill}"/>"#
        );
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}">{label}</text>"#,
            x + 16,
            legend_y + 10
        );
    }
    out.push_str("</svg>\n");
    out
}

// ---------------------------------------------------------------------------
// Bundle writer

/// Serializes commits in the history bundle format, one JSON object per line.
pub fn write_bundle(commits: &[Commit]) -> String {
    let mut out = String::new();
    for c in commits {
        let line = serde_json::to_string(&BundleCommit::from(c)).expect("bundle serializes");
        out.push_str(&line);
        out.push('\n');
    }
    out
}
