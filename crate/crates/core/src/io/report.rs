//! Multi-model benchmark reports.
//!
//! [`emit_report`] turns per-model results into a [`Report`]; the writers
//! render it as JSON, a plain-text table, an SVG boxplot and a per-image CSV.
//! Every output is deterministic for identical inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{
    average_ranks, boxplot_stats, descending_ranks, mean, percentile, select_representative_samples,
    std_dev, wilcoxon_signed_rank, Alternative, BoxplotStats, PairedScoreTable,
    ZeroMethod, P33,
};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// What one model produced on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelResults {
    pub name: String,
    pub auroc: Option<f64>,
    pub aupro: Option<f64>,
    pub aupro_5pct: Option<f64>,
    /// Per-image AUPIMO, keyed by image id.
    pub aupimo: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRanks {
    pub auroc: Option<f64>,
    pub aupro: Option<f64>,
    pub aupro_5pct: Option<f64>,
    pub aupimo_mean: f64,
    pub aupimo_p33: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub flier_ids: Vec<String>,
}

impl From<BoxplotStats> for BoxplotSummary {
    fn from(b: BoxplotStats) -> Self {
        Self {
            mean: b.mean,
            q1: b.q1,
            median: b.median,
            q3: b.q3,
            whisker_lo: b.whisker_lo,
            whisker_hi: b.whisker_hi,
            flier_ids: b.flier_ids,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub auroc: Option<f64>,
    pub aupro: Option<f64>,
    pub aupro_5pct: Option<f64>,
    pub aupimo_mean: f64,
    pub aupimo_std: f64,
    pub aupimo_p33: f64,
    pub num_images: usize,
    pub ranks: MetricRanks,
    /// Mean per-image AUPIMO rank.
    pub avg_rank: f64,
    pub boxplot: BoxplotSummary,
    /// Statistic name to the image id whose score is closest to it.
    pub representatives: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub model_a: String,
    pub model_b: String,
    pub statistic: f64,
    pub p_value: f64,
    /// Confidence (percent) that `model_a` scores higher than `model_b`.
    pub confidence: f64,
    pub n: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub num_images: usize,
    pub models: Vec<ModelSummary>,
    /// Models ordered from best to worst mean per-image rank.
    pub average_ranks: Vec<(String, f64)>,
    pub pairwise: Vec<PairwiseTest>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn model(&self, name: &str) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&PairwiseTest> {
        self.pairwise.iter().find(|p| p.model_a == a && p.model_b == b)
    }
}

fn rank_optional(values: &[Option<f64>]) -> Vec<Option<f64>> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let mut ranks = descending_ranks(&present).into_iter();
    values.iter().map(|v| v.and_then(|_| ranks.next())).collect()
}

pub fn emit_report(models: &[ModelResults]) -> Result<Report> {
    if models.is_empty() {
        return Err(Error::EmptyScores);
    }
    let mut seen = BTreeSet::new();
    for m in models {
        if !seen.insert(m.name.as_str()) {
            return Err(Error::DuplicateId { id: m.name.clone() });
        }
    }
    let mut table = PairedScoreTable::new();
    for m in models {
        table.insert_model(&m.name, m.aupimo.iter().map(|(id, v)| (id.clone(), *v)));
    }

    let mut warnings = Vec::new();
    let all_ids = table.image_ids().len();
    let common = table.common_ids().len();
    if common == 0 {
        return Err(Error::IncompatibleImageSets);
    }
    if common < all_ids {
        let msg = format!(
            "models cover different images; using the {common} of {all_ids} images scored by every model"
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    let table = table.intersection();

    let per_model: Vec<Vec<(String, f64)>> = models
        .iter()
        .map(|m| {
            table.scores(&m.name).map(|s| s.iter().map(|(id, v)| (id.clone(), *v)).collect())
        })
        .collect::<Result<_>>()?;
    let values: Vec<Vec<f64>> = per_model
        .iter()
        .map(|s| s.iter().map(|(_, v)| *v).collect())
        .collect();
    let means = values.iter().map(|v| mean(v)).collect::<Result<Vec<_>>>()?;
    let p33s = values
        .iter()
        .map(|v| percentile(v, P33))
        .collect::<Result<Vec<_>>>()?;

    let auroc_ranks = rank_optional(&models.iter().map(|m| m.auroc).collect::<Vec<_>>());
    let aupro_ranks = rank_optional(&models.iter().map(|m| m.aupro).collect::<Vec<_>>());
    let aupro5_ranks = rank_optional(&models.iter().map(|m| m.aupro_5pct).collect::<Vec<_>>());
    let mean_ranks = descending_ranks(&means);
    let p33_ranks = descending_ranks(&p33s);
    let avg = average_ranks(&table)?;

    let mut summaries = Vec::with_capacity(models.len());
    for (i, m) in models.iter().enumerate() {
        let representatives = select_representative_samples(&per_model[i])?
            .into_iter()
            .map(|(stat, id)| (stat.name().to_owned(), id))
            .collect();
        summaries.push(ModelSummary {
            name: m.name.clone(),
            auroc: m.auroc,
            aupro: m.aupro,
            aupro_5pct: m.aupro_5pct,
            aupimo_mean: means[i],
            aupimo_std: std_dev(&values[i])?,
            aupimo_p33: p33s[i],
            num_images: values[i].len(),
            ranks: MetricRanks {
                auroc: auroc_ranks[i],
                aupro: aupro_ranks[i],
                aupro_5pct: aupro5_ranks[i],
                aupimo_mean: mean_ranks[i],
                aupimo_p33: p33_ranks[i],
            },
            avg_rank: avg[i].1,
            boxplot: boxplot_stats(&per_model[i])?.into(),
            representatives,
        });
    }

    let mut pairwise = Vec::new();
    for a in models {
        for b in models {
            if a.name == b.name {
                continue;
            }
            match wilcoxon_signed_rank(&table, &a.name, &b.name, Alternative::AGreater, ZeroMethod::Wilcox) {
                Ok(r) => pairwise.push(PairwiseTest {
                    model_a: a.name.clone(),
                    model_b: b.name.clone(),
                    statistic: r.statistic,
                    p_value: r.p_value,
                    confidence: r.confidence,
                    n: r.n,
                    exact: r.exact,
                }),
                Err(Error::AllDifferencesZero) => {
                    warnings.push(format!(
                        "`{}` and `{}` have identical scores; no test",
                        a.name, b.name
                    ));
                }
                Err(e) => return Err(e),
            }
        }
    }

    let mut average_ranks = avg;
    average_ranks.sort_by(|(na, ra), (nb, rb)| ra.total_cmp(rb).then_with(|| na.cmp(nb)));

    Ok(Report {
        format_version: REPORT_FORMAT_VERSION,
        num_images: common,
        models: summaries,
        average_ranks,
        pairwise,
        warnings,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v:.4}"))
}

fn fmt_rank(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v}"))
}

/// Scores with their rank in parentheses, one row per model.
pub fn render_table(report: &Report) -> String {
    let header = [
        "model", "AUROC", "AUPRO", "AUPRO5%", "AUPIMO mean", "AUPIMO std", "AUPIMO P33", "avg rank",
    ];
    let rows: Vec<[String; 8]> = report
        .models
        .iter()
        .map(|m| {
            [
                m.name.clone(),
                format!("{} ({})", fmt_opt(m.auroc), fmt_rank(m.ranks.auroc)),
                format!("{} ({})", fmt_opt(m.aupro), fmt_rank(m.ranks.aupro)),
                format!("{} ({})", fmt_opt(m.aupro_5pct), fmt_rank(m.ranks.aupro_5pct)),
                format!("{:.4} ({})", m.aupimo_mean, m.ranks.aupimo_mean),
                format!("{:.4}", m.aupimo_std),
                format!("{:.4} ({})", m.aupimo_p33, m.ranks.aupimo_p33),
                format!("{:.3}", m.avg_rank),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|j| rows.iter().map(|r| r[j].len()).chain([header[j].len()]).max().unwrap())
        .collect();
    let mut out = String::new();
    let line = |cells: &[&str], out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(&header, &mut out);
    line(
        &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect::<Vec<_>>(),
        &mut out,
    );
    for r in &rows {
        line(&r.iter().map(String::as_str).collect::<Vec<_>>(), &mut out);
    }
    if !report.pairwise.is_empty() {
        out.push_str("\nconfidence (%) that row > column\n");
        let names: Vec<&str> = report.models.iter().map(|m| m.name.as_str()).collect();
        let w = names.iter().map(|n| n.len()).max().unwrap_or(0).max(6);
        let _ = write!(out, "{:<w$}", "");
        for n in &names {
            let _ = write!(out, "  {n:>w$}");
        }
        out.push('\n');
        for a in &names {
            let _ = write!(out, "{a:<w$}");
            for b in &names {
                let cell = report
                    .pair(a, b)
                    .map_or_else(|| "-".to_owned(), |p| format!("{:.2}", p.confidence));
                let _ = write!(out, "  {cell:>w$}");
            }
            out.push('\n');
        }
    }
    out
}

/// Horizontal AUPIMO boxplots, one per model, in report order.
pub fn render_boxplot_svg(report: &Report) -> String {
    const ROW: f64 = 40.0;
    const LEFT: f64 = 160.0;
    const PLOT_W: f64 = 600.0;
    const TOP: f64 = 20.0;
    let n = report.models.len() as f64;
    let height = TOP * 2.0 + ROW * n + 30.0;
    let width = LEFT + PLOT_W + 40.0;
    let x = |v: f64| LEFT + v.clamp(0.0, 1.0) * PLOT_W;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let axis_y = TOP + ROW * n;
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#,
        x(0.0),
        x(1.0)
    );
    for tick in 0..=10 {
        let v = tick as f64 / 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{axis_y}" x2="{0}" y2="{1}" stroke="black"/><text x="{0}" y="{2}" text-anchor="middle">{v:.1}</text>"#,
            x(v),
            axis_y + 5.0,
            axis_y + 18.0
        );
    }
    for (i, m) in report.models.iter().enumerate() {
        let cy = TOP + ROW * i as f64 + ROW / 2.0;
        let b = &m.boxplot;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 10.0,
            cy + 4.0,
            xml_escape(&m.name)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{cy}" x2="{}" y2="{cy}" stroke="black"/>"#,
            x(b.whisker_lo),
            x(b.whisker_hi)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#9ecae1" stroke="black"/>"##,
            x(b.q1),
            cy - ROW / 4.0,
            x(b.q3) - x(b.q1),
            ROW / 2.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black" stroke-width="2"/>"#,
            x(b.median),
            cy - ROW / 4.0,
            cy + ROW / 4.0
        );
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{cy}" r="3" fill="red"/>"#,
            x(b.mean)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Per-image AUPIMO of every model on the shared images.
pub fn render_scores_csv(models: &[ModelResults], report: &Report) -> Result<String> {
    let mut by_model: Vec<BTreeMap<&str, f64>> = Vec::new();
    for m in models {
        by_model.push(m.aupimo.iter().map(|(id, v)| (id.as_str(), *v)).collect());
    }
    let ids: BTreeSet<&str> = by_model
        .iter()
        .map(|m| m.keys().copied().collect::<BTreeSet<_>>())
        .reduce(|a, b| a.intersection(&b).copied().collect())
        .unwrap_or_default();
    debug_assert_eq!(ids.len(), report.num_images);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["image_id".to_owned()];
    header.extend(models.iter().map(|m| m.name.clone()));
    w.write_record(&header).map_err(csv_error)?;
    for id in ids {
        let mut row = vec![id.to_owned()];
        row.extend(by_model.iter().map(|m| m[id].to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8"))
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv>", io),
        other => Error::UnsupportedFormat(format!("csv: {other:?}")),
    }
}

/// File names written by [`write_report_bundle`].
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TABLE: &str = "table.txt";
pub const REPORT_BOXPLOT: &str = "boxplot.svg";
pub const REPORT_SCORES_CSV: &str = "aupimo_scores.csv";

pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_report_bundle(dir: &Path, models: &[ModelResults], report: &Report) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, contents: String| {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(path, e))
    };
    write(REPORT_JSON, report_json(report))?;
    write(REPORT_TABLE, render_table(report))?;
    write(REPORT_BOXPLOT, render_boxplot_svg(report))?;
    write(REPORT_SCORES_CSV, render_scores_csv(models, report)?)?;
    Ok(())
}
