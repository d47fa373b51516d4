//! Report files: results.jsonl, report.md, report.csv, ttests.csv,
//! alphatrace.csv and two static SVG charts.

use std::fmt::Write as _;
use std::path::Path;

use super::matrix::{Cell, MatrixOutput, MeanStd, ReportTable};
use super::metrics::Axis;
use super::records::{AlphaRecord, ResultRecord};
use crate::error::{Error, Result};

pub const RESULTS_FILE: &str = "results.jsonl";
pub const REPORT_MD: &str = "report.md";
pub const REPORT_CSV: &str = "report.csv";
pub const TTESTS_CSV: &str = "ttests.csv";
pub const ALPHA_CSV: &str = "alphatrace.csv";
pub const ALPHA_SVG: &str = "alphatrace.svg";
pub const TIER_SVG: &str = "tiers.svg";

/// Marker for accuracies of empty strata.
pub const UNDEFINED: &str = "NA";

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn results_jsonl(records: &[ResultRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                file: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| format!("{x:.digits$}"))
}

fn ms_csv(m: Option<MeanStd>) -> String {
    format!("{},{}", opt(m.map(|m| m.mean), 4), opt(m.map(|m| m.std), 4))
}

fn cell_csv(section: &str, config: &str, cell: &Cell, alpha: Option<MeanStd>) -> String {
    format!(
        "{section},{config},{},{},{},{},{}\n",
        cell.key,
        cell.n,
        ms_csv(cell.top1),
        ms_csv(cell.top5),
        ms_csv(alpha)
    )
}

pub fn report_csv(table: &ReportTable) -> String {
    let mut out = String::from("section,config,stratum,n,top1_mean,top1_std,top5_mean,top5_std,alpha_mean,alpha_std\n");
    for row in &table.rows {
        out.push_str(&cell_csv("aggregate", &row.config_name, &row.overall, row.alpha));
    }
    for axis in Axis::ALL {
        for row in &table.rows {
            for cell in &row.strata[&axis] {
                out.push_str(&cell_csv(axis.name(), &row.config_name, cell, None));
            }
        }
    }
    if let Some(o) = table.singleton_oracle {
        let _ = writeln!(out, "singleton_oracle,P|T_minilm,all,,{o:.4},,,,,");
    }
    out
}

pub fn ttests_csv(table: &ReportTable) -> String {
    let mut out = String::from("a,b,mean_diff,t,df,p_two_sided\n");
    for row in &table.ttests {
        match row.result {
            Some(r) => {
                let _ = writeln!(out, "{},{},{:.4},{:.4},{},{:.6}", row.a, row.b, r.mean_diff, r.t, r.df, r.p);
            }
            None => {
                let _ = writeln!(out, "{},{},{UNDEFINED},{UNDEFINED},,{UNDEFINED}", row.a, row.b);
            }
        }
    }
    out
}

pub fn alpha_csv(alphas: &[AlphaRecord]) -> String {
    let mut out = String::from("config,seed,fold,test_room,epoch,alpha,loss\n");
    for a in alphas {
        for (e, alpha) in a.alpha_trace.iter().enumerate() {
            let loss = a.epoch_loss.get(e).map_or_else(String::new, |l| format!("{l:.6}"));
            let _ = writeln!(out, "{},{},{},{},{e},{alpha:.6},{loss}", a.config_name, a.seed, a.fold, a.test_room);
        }
    }
    out
}

fn ms_md(m: Option<MeanStd>, digits: usize) -> String {
    m.map_or_else(|| UNDEFINED.to_string(), |m| format!("{:.digits$} ± {:.digits$}", m.mean, m.std))
}

pub fn report_md(out: &MatrixOutput) -> String {
    let table = &out.table;
    let mut md = String::new();
    let seeds: Vec<String> = table.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(md, "# Experiment matrix\n");
    let _ = writeln!(
        md,
        "Seeds: {}. Test rooms: {}. Values are mean ± std over seed-level aggregates (percent).\n",
        seeds.join(", "),
        table.test_rooms.join(", ")
    );
    let _ = writeln!(md, "## Aggregate\n\n| Config | n | Top-1 | Top-5 | α |\n|---|---|---|---|---|");
    for row in &table.rows {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} |",
            row.config_name,
            row.overall.n,
            ms_md(row.overall.top1, 1),
            ms_md(row.overall.top5, 1),
            ms_md(row.alpha, 3)
        );
    }
    if let Some(o) = table.singleton_oracle {
        let _ = writeln!(md, "\nSingleton oracle (better of P and T_minilm per regime): {o:.2}");
    }
    for axis in Axis::ALL {
        let keys = axis.strata();
        let _ = writeln!(md, "\n## Top-1 by {}\n", axis.name());
        let _ = writeln!(md, "| Config | {} |", keys.join(" | "));
        let _ = writeln!(md, "|---|{}", "---|".repeat(keys.len()));
        if let Some(first) = table.rows.first() {
            let ns: Vec<String> = first.strata[&axis].iter().map(|c| c.n.to_string()).collect();
            let _ = writeln!(md, "| n | {} |", ns.join(" | "));
        }
        for row in &table.rows {
            let cells: Vec<String> = row.strata[&axis].iter().map(|c| ms_md(c.top1, 1)).collect();
            let _ = writeln!(md, "| {} | {} |", row.config_name, cells.join(" | "));
        }
    }
    if !table.ttests.is_empty() {
        let _ = writeln!(md, "\n## Paired t-tests (two-sided, top-1 per seed)\n\n| A | B | mean diff | t | df | p |\n|---|---|---|---|---|---|");
        for t in &table.ttests {
            match t.result {
                Some(r) => {
                    let _ = writeln!(md, "| {} | {} | {:.2} | {:.2} | {} | {:.4} |", t.a, t.b, r.mean_diff, r.t, r.df, r.p);
                }
                None => {
                    let _ = writeln!(md, "| {} | {} | {UNDEFINED} | {UNDEFINED} | | {UNDEFINED} |", t.a, t.b);
                }
            }
        }
    }
    let fused: Vec<&str> = table.rows.iter().filter(|r| r.alpha.is_some()).map(|r| r.config_name.as_str()).collect();
    if !fused.is_empty() {
        let _ = writeln!(md, "\n## Final α per fold\n\n| Config | Seed | α by fold |\n|---|---|---|");
        for name in fused {
            for &seed in &table.seeds {
                let vals: Vec<String> = out
                    .alphas
                    .iter()
                    .filter(|a| a.config_name == name && a.seed == seed)
                    .map(|a| format!("{:.3}", a.alpha_final()))
                    .collect();
                let _ = writeln!(md, "| {name} | {seed} | {} |", vals.join(", "));
            }
        }
    }
    md
}

const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

/// Mean gate trajectory per fused config.
pub fn alpha_svg(alphas: &[AlphaRecord]) -> String {
    let (w, h, pad) = (640.0, 360.0, 40.0);
    let mut names: Vec<&str> = alphas.iter().map(|a| a.config_name.as_str()).collect();
    names.dedup();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{pad}\" y=\"20\">mean α per epoch</text>\n",
        h - pad,
        w - pad,
        h - pad,
        h - pad
    );
    let mut legend = 0;
    for (ci, name) in names.iter().enumerate() {
        let runs: Vec<&AlphaRecord> = alphas.iter().filter(|a| a.config_name == *name).collect();
        let epochs = runs.iter().map(|a| a.alpha_trace.len()).min().unwrap_or(0);
        let distinct = runs.iter().any(|a| a.alpha_trace.iter().any(|&x| x != 0.5));
        if epochs < 2 || !distinct {
            continue;
        }
        let points: Vec<String> = (0..epochs)
            .map(|e| {
                let mean = runs.iter().map(|a| a.alpha_trace[e]).sum::<f64>() / runs.len() as f64;
                let x = pad + (w - 2.0 * pad) * e as f64 / (epochs - 1) as f64;
                let y = h - pad - (h - 2.0 * pad) * mean;
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let color = PALETTE[ci % PALETTE.len()];
        let _ = writeln!(svg, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>", points.join(" "));
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{name}</text>", w - pad - 120.0, pad + 16.0 * legend as f64);
        legend += 1;
    }
    svg.push_str("</svg>\n");
    svg
}

/// Grouped bars of top-1 by tier.
pub fn tier_svg(table: &ReportTable) -> String {
    let (w, h, pad) = (720.0, 360.0, 40.0);
    let tiers = Axis::Tier.strata();
    let group_w = (w - 2.0 * pad) / tiers.len() as f64;
    let bar_w = group_w / (table.rows.len() + 1).max(2) as f64;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{pad}\" y=\"20\">top-1 (%) by tier</text>\n"
    );
    for (ti, tier) in tiers.iter().enumerate() {
        let x0 = pad + group_w * ti as f64;
        let _ = writeln!(svg, "<text x=\"{:.1}\" y=\"{}\">{tier}</text>", x0 + group_w / 2.0 - 8.0, h - pad + 16.0);
        for (ri, row) in table.rows.iter().enumerate() {
            let Some(mean) = row.strata[&Axis::Tier][ti].top1.map(|m| m.mean) else { continue };
            let bh = (h - 2.0 * pad) * mean / 100.0;
            let _ = writeln!(
                svg,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{bh:.1}\" fill=\"{}\"/>",
                x0 + bar_w * ri as f64 + bar_w / 2.0,
                h - pad - bh,
                bar_w,
                PALETTE[ri % PALETTE.len()]
            );
        }
    }
    for (ri, row) in table.rows.iter().enumerate() {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>",
            w - pad - 110.0,
            pad + 16.0 * ri as f64,
            PALETTE[ri % PALETTE.len()],
            row.config_name
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes every report file of `out` into `dir`.
pub fn write_report(out: &MatrixOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join(RESULTS_FILE), &results_jsonl(&out.records))?;
    write(&dir.join(REPORT_CSV), &report_csv(&out.table))?;
    write(&dir.join(TTESTS_CSV), &ttests_csv(&out.table))?;
    write(&dir.join(ALPHA_CSV), &alpha_csv(&out.alphas))?;
    write(&dir.join(REPORT_MD), &report_md(out))?;
    write(&dir.join(ALPHA_SVG), &alpha_svg(&out.alphas))?;
    write(&dir.join(TIER_SVG), &tier_svg(&out.table))
}
