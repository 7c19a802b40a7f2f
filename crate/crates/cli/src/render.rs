use std::fmt::Write as _;

use voi_core::sensitivity::emit_plot_data;

use crate::{plot_format, Failure, Format, Report};

pub fn render(report: &Report, format: Format) -> Result<Vec<u8>, Failure> {
    match (report, format) {
        (Report::Sweep(sweep), Format::Json | Format::Csv) => {
            let mut bytes = emit_plot_data(sweep, plot_format(format).expect("not text"))?;
            if bytes.last() != Some(&b'\n') {
                bytes.push(b'\n');
            }
            Ok(bytes)
        }
        (Report::Voi(voi), Format::Csv) => Ok(voi.to_csv()?.into_bytes()),
        (_, Format::Json) => {
            let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
            text.push('\n');
            Ok(text.into_bytes())
        }
        (_, Format::Text) => Ok(text(report).into_bytes()),
        (_, Format::Csv) => unreachable!("csv is checked before running"),
    }
}

fn text(report: &Report) -> String {
    let mut s = String::new();
    match report {
        Report::Eval(e) => evaluation(&mut s, e),
        Report::Refine(r) => {
            let _ = writeln!(s, "wrote {}", r.output.display());
            evaluation(&mut s, &r.evaluation);
        }
        Report::Voi(v) => {
            let _ = writeln!(s, "observing {}", v.observed.join(", "));
            for row in &v.outcomes {
                let _ = writeln!(
                    s,
                    "  {:<30} p={:<10} choose {} (EU {})",
                    row.outcome, row.probability, row.best_alternative, row.conditional_eu
                );
            }
            let _ = writeln!(s, "EU with information: {}", v.eu_with_info);
            let _ = writeln!(s, "EU without:          {}", v.eu_baseline);
            let _ = writeln!(s, "VPI:                 {}", v.vpi);
        }
        Report::Focus(f) => {
            let refs: Vec<String> = f.cluster.iter().map(ToString::to_string).collect();
            let _ = writeln!(s, "cluster:   {}", refs.join(", "));
            let _ = writeln!(s, "VPI:       {} (standard error {})", f.vpi_estimate, f.vpi_std_error);
            let _ = writeln!(s, "cost:      {}", f.total_cost);
            let _ = writeln!(s, "baseline:  {}", f.baseline_alternative);
            let _ = writeln!(s, "samples:   {} (seed {})", f.samples, f.seed);
            let _ = writeln!(s, "{}", if f.recommend { "refine: yes" } else { "refine: no" });
        }
        Report::Rank(r) => {
            if r.ranking.is_empty() {
                s.push_str("no annotated parameters\n");
            }
            for (i, entry) in r.ranking.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{:>2}. {:<40} net {:<22} VPI {} ± {}, cost {}{}",
                    i + 1,
                    entry.param.to_string(),
                    entry.net_value,
                    entry.report.vpi_estimate,
                    entry.report.vpi_std_error,
                    entry.report.total_cost,
                    if entry.report.recommend { "  [refine]" } else { "" }
                );
            }
        }
        Report::Sweep(sw) => {
            let _ = writeln!(
                s,
                "{} over [{}, {}], currently {}",
                sw.param, sw.range.0, sw.range.1, sw.baseline_value
            );
            for series in &sw.series {
                let (first, last) = (
                    series.expected_utility[0],
                    series.expected_utility[series.expected_utility.len() - 1],
                );
                let _ = writeln!(s, "  {:<20} EU {first} .. {last}", series.alternative);
            }
            if sw.crossings.is_empty() {
                s.push_str("no change of decision in range\n");
            }
            for x in &sw.crossings {
                let _ = writeln!(s, "decision changes at {x}");
            }
        }
        Report::Bounds(b) => {
            let _ = writeln!(s, "p({}) in {} (point value {})", b.target, b.interval, b.point);
            let _ = writeln!(s, "{} vertices evaluated", b.vertices);
            for note in &b.notes {
                let _ = writeln!(s, "note: {note}");
            }
        }
        Report::Validate(v) => {
            if v.valid {
                s.push_str("valid\n");
            }
            for d in &v.diagnostics {
                let _ = writeln!(s, "{}: {}", d.subject, d.message);
            }
        }
    }
    s
}

fn evaluation(s: &mut String, e: &voi_protocol::Evaluation) {
    for m in &e.marginals {
        let _ = writeln!(s, "p({}={}) = {}", m.variable, m.outcome, m.probability);
    }
    for a in &e.alternatives {
        let _ = writeln!(s, "EU({}) = {}", a.alternative, a.expected_utility);
    }
    let _ = writeln!(s, "optimal: {}{}", e.optimal, if e.tie { " (tied)" } else { "" });
}
