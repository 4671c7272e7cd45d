use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use qtl_core::harness::{normalize_to_two, ConvergenceRecord, CSV_HEADER};
use serde::Serialize;

use crate::out;
use crate::{Global, UsageError};

#[derive(Args)]
pub struct ReportArgs {
    /// Directory holding convergence CSVs (restart_*.csv, fold_*.csv or any other).
    pub run_dir: PathBuf,
}

#[derive(Serialize)]
struct Series {
    name: String,
    epochs: usize,
    constant: bool,
}

#[derive(Serialize)]
struct Summary {
    out_dir: PathBuf,
    csv: PathBuf,
    dat: PathBuf,
    series: Vec<Series>,
}

fn cell(v: Option<f64>, missing: &str) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_else(|| missing.to_string())
}

pub fn run(g: &Global, a: ReportArgs) -> Result<()> {
    let dir = out::require(&a.run_dir, "run directory")?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();

    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut series = Vec::new();
    for p in &paths {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        if !text.starts_with(CSV_HEADER) {
            continue;
        }
        let rec = ConvergenceRecord::from_csv(&text).with_context(|| format!("parsing {}", p.display()))?;
        let name = p.file_stem().expect("csv file has a stem").to_string_lossy().into_owned();
        let (norm, constant) = normalize_to_two(&rec.test_losses());
        if constant {
            log::warn!("{name}: test loss is constant; normalized column is all zero");
        }
        series.push(Series { name: name.clone(), epochs: rec.len(), constant });
        names.push(name);
        columns.push((rec.epochs.iter().map(|e| e.epoch).collect::<Vec<_>>(), norm));
    }
    if columns.is_empty() {
        return Err(UsageError(format!("no convergence CSVs in {}", dir.display())).into());
    }

    let rows = columns.iter().map(|(e, _)| e.len()).max().unwrap_or(0);
    let epoch_at = |i: usize| columns.iter().find_map(|(e, _)| e.get(i).copied()).unwrap_or(i);
    let mut csv = format!("epoch,{}\n", names.join(","));
    let mut dat = format!("# epoch {}\n", names.join(" "));
    for i in 0..rows {
        let vals: Vec<Option<f64>> = columns.iter().map(|(_, n)| n.get(i).copied()).collect();
        let c: Vec<String> = vals.iter().map(|v| cell(*v, "")).collect();
        let d: Vec<String> = vals.iter().map(|v| cell(*v, "NaN")).collect();
        csv.push_str(&format!("{},{}\n", epoch_at(i), c.join(",")));
        dat.push_str(&format!("{} {}\n", epoch_at(i), d.join(" ")));
    }

    let out_dir = g.out.clone().unwrap_or_else(|| dir.join("report"));
    out::ensure_dir(&out_dir)?;
    let summary = Summary {
        csv: out_dir.join("convergence.csv"),
        dat: out_dir.join("convergence.dat"),
        out_dir,
        series,
    };
    out::write(&summary.csv, csv.as_bytes())?;
    out::write(&summary.dat, dat.as_bytes())?;

    if g.json {
        return out::print_json(&summary);
    }
    for s in &summary.series {
        println!("{}: {} epochs{}", s.name, s.epochs, if s.constant { " (constant loss)" } else { "" });
    }
    println!("wrote {} and {}", summary.csv.display(), summary.dat.display());
    Ok(())
}
