//! `ppc report`: merge metric CSVs from a runs directory into one summary
//! CSV plus gnuplot-ready `.dat` files (one per metric).

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use ppc_core::metrics::{read_metric_csv, write_metric_csv, MetricRow};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory scanned (recursively) for `*.metrics.csv` files.
    #[arg(long)]
    pub runs: PathBuf,
    /// Output directory for `summary.csv` and per-metric `.dat` files.
    #[arg(long)]
    pub out: PathBuf,
}

fn collect_csvs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_csvs(&path, out)?;
        } else if path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(".metrics.csv"))
        {
            out.push(path);
        }
    }
    Ok(())
}

pub fn run(args: &ReportArgs) -> Result<()> {
    let mut files = Vec::new();
    collect_csvs(&args.runs, &mut files)
        .with_context(|| format!("scanning {}", args.runs.display()))?;
    files.sort();
    let mut rows: Vec<MetricRow> = Vec::new();
    for f in &files {
        rows.extend(read_metric_csv(f)?);
    }
    rows.sort_by(|a, b| {
        (&a.method, &a.split, &a.metric)
            .cmp(&(&b.method, &b.split, &b.metric))
    });

    std::fs::create_dir_all(&args.out)?;
    write_metric_csv(&rows, &args.out.join("summary.csv"))?;

    let mut metrics: Vec<String> = rows.iter().map(|r| r.metric.clone()).collect();
    metrics.sort();
    metrics.dedup();
    for metric in &metrics {
        let mut dat = format!("# method split {metric}\n");
        for r in rows.iter().filter(|r| &r.metric == metric) {
            dat.push_str(&format!("{} {} {}\n", r.method, r.split, r.value));
        }
        std::fs::write(args.out.join(format!("{metric}.dat")), dat)?;
    }
    println!(
        "report: {} rows from {} files -> {}",
        rows.len(),
        files.len(),
        args.out.join("summary.csv").display()
    );
    Ok(())
}
