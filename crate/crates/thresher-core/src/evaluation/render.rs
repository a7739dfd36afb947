//! Plain-text report tables.

use super::stats::{LengthHistogram, RetentionRow};
use super::{DomainNdcg, RunReport};

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

fn pad_right(s: &str, width: usize) -> String {
    format!("{s:>width$}")
}

/// Retention table: domain, original count, retained count, percent.
pub fn render_retention(rows: &[RetentionRow]) -> String {
    let name_w = rows.iter().map(|r| r.domain.len()).chain([6]).max().unwrap();
    let mut out = String::new();
    out.push_str(&format!(
        "{}  {}  {}  {}\n",
        pad("Domain", name_w),
        pad_right("Original", 10),
        pad_right("Retained", 10),
        pad_right("%", 7),
    ));
    for row in rows {
        out.push_str(&format!(
            "{}  {}  {}  {}\n",
            pad(&row.domain, name_w),
            pad_right(&row.original.to_string(), 10),
            pad_right(&row.retained.to_string(), 10),
            pad_right(&row.percent_display(), 7),
        ));
    }
    out
}

fn fmt_pct(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

fn fmt_delta(delta: f64) -> String {
    // Deltas in nDCG percentage points; arrows mark direction.
    if delta.abs() < 5e-5 {
        "0.00".into()
    } else if delta > 0.0 {
        format!("+{:.2} ▲", delta * 100.0)
    } else {
        format!("-{:.2} ▼", -delta * 100.0)
    }
}

fn domain_rows(report: &RunReport) -> impl Iterator<Item = (&str, f64)> {
    report
        .per_domain
        .iter()
        .map(|d: &DomainNdcg| (d.domain.as_str(), d.mean_ndcg))
        .chain(std::iter::once(("Average", report.average_ndcg)))
}

/// Side-by-side nDCG@k comparison of two runs, as percentages with a
/// signed delta column. Domains missing from one side show "-".
pub fn render_comparison(
    label_a: &str,
    a: &RunReport,
    label_b: &str,
    b: &RunReport,
) -> String {
    let b_by_domain: std::collections::BTreeMap<&str, f64> = domain_rows(b).collect();
    let name_w = domain_rows(a)
        .map(|(d, _)| d.len())
        .chain(b_by_domain.keys().map(|d| d.len()))
        .chain([6])
        .max()
        .unwrap();
    let col_w = label_a.len().max(label_b.len()).max(8);

    let mut out = String::new();
    out.push_str(&format!("nDCG@{} (%)\n", a.k));
    out.push_str(&format!(
        "{}  {}  {}  {}\n",
        pad("Domain", name_w),
        pad_right(label_a, col_w),
        pad_right(label_b, col_w),
        pad_right("Δ", 9),
    ));
    let mut seen = std::collections::BTreeSet::new();
    for (domain, value_a) in domain_rows(a) {
        seen.insert(domain.to_string());
        let cell_b = b_by_domain.get(domain);
        let delta = cell_b.map(|vb| fmt_delta(vb - value_a)).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{}  {}  {}  {}\n",
            pad(domain, name_w),
            pad_right(&fmt_pct(value_a), col_w),
            pad_right(&cell_b.map(|v| fmt_pct(*v)).unwrap_or_else(|| "-".into()), col_w),
            pad_right(&delta, 9),
        ));
    }
    for (domain, value_b) in domain_rows(b) {
        if !seen.contains(domain) {
            out.push_str(&format!(
                "{}  {}  {}  {}\n",
                pad(domain, name_w),
                pad_right("-", col_w),
                pad_right(&fmt_pct(value_b), col_w),
                pad_right("-", 9),
            ));
        }
    }
    out
}

/// Length histogram rows: one `[lo,hi)  count` line per bin, then the
/// sub-100 share.
pub fn render_length_histogram(hist: &LengthHistogram) -> String {
    let mut out = String::new();
    for (i, count) in hist.counts.iter().enumerate() {
        let lo = hist.edges[i];
        let label = match hist.edges.get(i + 1) {
            Some(hi) => format!("[{lo},{hi})"),
            None => format!("[{lo},∞)"),
        };
        out.push_str(&format!("{}  {}\n", pad(&label, 12), count));
    }
    out.push_str(&format!(
        "total {} chunks, {:.1}% under 100 tokens\n",
        hist.total,
        hist.sub_100_fraction * 100.0
    ));
    out
}
