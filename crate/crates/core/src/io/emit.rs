//! Writes summaries as JSON and plot-ready CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::table::{csv_error, csv_writer, fmt_f64};
use crate::error::{Error, Result};
use crate::stats::Spread;
use crate::sweep::{
    format_pip_table, CoefficientSummary, PenalizedSummary, SweepResults, SweepSummary,
    WeightSummary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    /// `summary.json` plus every table that applies to the model.
    #[default]
    Csv,
    /// `summary.json` only.
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format '{other}' (csv or json)"))),
        }
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_results(results: &SweepResults, path: &Path) -> Result<()> {
    write_json(results, path)
}

pub fn read_results(path: &Path) -> Result<SweepResults> {
    let text = fs::read_to_string(path).map_err(|e| Error::InputFile {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

pub fn read_summary(path: &Path) -> Result<SweepSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

struct Table {
    path: PathBuf,
    writer: ::csv::Writer<fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let mut t = Table {
            writer: csv_writer(&path)?,
            path,
        };
        t.row(header.iter().map(|s| s.to_string()).collect())?;
        Ok(t)
    }

    fn row(&mut self, cells: Vec<String>) -> Result<()> {
        self.writer
            .write_record(&cells)
            .map_err(|e| csv_error(&self.path, e))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn spread_cells(s: &Spread) -> Vec<String> {
    [s.min, s.iqr_low, s.median, s.iqr_high, s.max]
        .iter()
        .map(|&v| fmt_f64(v))
        .collect()
}

const SPREAD_HEADER: [&str; 5] = ["min", "iqr_low", "median", "iqr_high", "max"];

/// Per-seed rows (seed order, then coefficient order) followed by one
/// aggregate row per coefficient.
fn coefficient_table(
    dir: &Path,
    name: &str,
    seeds: &[u64],
    records: &[CoefficientSummary],
    extra: Option<(&str, &[usize])>,
) -> Result<PathBuf> {
    let mut header = vec!["row_type", "seed", "name", "value", "count", "proportion"];
    header.extend(SPREAD_HEADER);
    if let Some((h, _)) = extra {
        header.push(h);
    }
    let mut t = Table::create(dir, name, &header)?;
    let blanks = SPREAD_HEADER.len() + 2 + usize::from(extra.is_some());
    for (s, seed) in seeds.iter().enumerate() {
        for r in records {
            let mut row = vec!["seed".into(), seed.to_string(), r.name.clone(), fmt_f64(r.values[s])];
            row.extend(std::iter::repeat_n(String::new(), blanks));
            t.row(row)?;
        }
    }
    for (j, r) in records.iter().enumerate() {
        let mut row = vec![
            "aggregate".into(),
            String::new(),
            r.name.clone(),
            String::new(),
            r.count.to_string(),
            fmt_f64(r.proportion),
        ];
        row.extend(spread_cells(&r.spread));
        if let Some((_, counts)) = extra {
            row.push(counts[j].to_string());
        }
        t.row(row)?;
    }
    t.finish()
}

fn penalized_tables(dir: &Path, s: &PenalizedSummary, out: &mut Vec<PathBuf>) -> Result<()> {
    out.push(coefficient_table(dir, "coefficients.csv", &s.seeds, &s.coefficients, None)?);
    if let Some(groups) = &s.groups {
        out.push(coefficient_table(dir, "group_norms.csv", &s.seeds, groups, None)?);
    }
    let mut t = Table::create(
        dir,
        "cv_curves.csv",
        &["seed", "lambda_index", "lambda", "mean_error", "se_error", "chosen"],
    )?;
    for c in &s.cv_curves {
        for (k, lam) in c.lambda.iter().enumerate() {
            t.row(vec![
                c.seed.to_string(),
                k.to_string(),
                fmt_f64(*lam),
                fmt_f64(c.mean_error[k]),
                fmt_f64(c.se_error[k]),
                u8::from(*lam == c.chosen_lambda).to_string(),
            ])?;
        }
    }
    out.push(t.finish()?);
    let mut t = Table::create(dir, "retained.csv", &["seed", "chosen_lambda", "retained"])?;
    for (k, seed) in s.seeds.iter().enumerate() {
        t.row(vec![
            seed.to_string(),
            fmt_f64(s.chosen_lambda[k]),
            s.retained_counts[k].to_string(),
        ])?;
    }
    out.push(t.finish()?);
    Ok(())
}

fn wqs_tables(dir: &Path, s: &WeightSummary, out: &mut Vec<PathBuf>) -> Result<()> {
    out.push(coefficient_table(
        dir,
        "weights.csv",
        &s.seeds,
        &s.weights,
        Some(("largest_count", &s.largest_counts)),
    )?);
    let mut t = Table::create(
        dir,
        "index_estimates.csv",
        &["row_type", "seed", "beta", "se", "lower", "upper", "excludes_zero"],
    )?;
    for e in &s.index {
        t.row(vec![
            "seed".into(),
            e.seed.to_string(),
            fmt_f64(e.beta),
            fmt_f64(e.se),
            fmt_f64(e.lower),
            fmt_f64(e.upper),
            u8::from(e.excludes_zero()).to_string(),
        ])?;
    }
    let p = &s.pooled;
    t.row(vec![
        "pooled".into(),
        String::new(),
        fmt_f64(p.estimate),
        fmt_f64(p.total_var.sqrt()),
        fmt_f64(p.ci95.0),
        fmt_f64(p.ci95.1),
        u8::from(p.ci95.0 > 0.0 || p.ci95.1 < 0.0).to_string(),
    ])?;
    out.push(t.finish()?);
    Ok(())
}

fn bkmr_tables(dir: &Path, s: &crate::sweep::BkmrSummary, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut t = Table::create(
        dir,
        "pips.csv",
        &["row_type", "level", "group", "exposure", "seed", "value", "min", "median", "max"],
    )?;
    let rows = s
        .pips
        .groups
        .iter()
        .map(|r| ("group", r))
        .chain(s.pips.exposures.iter().map(|r| ("exposure", r)));
    let rows: Vec<_> = rows.collect();
    for (k, seed) in s.pips.seeds.iter().enumerate() {
        for (level, r) in &rows {
            t.row(vec![
                "seed".into(),
                level.to_string(),
                r.group.clone(),
                r.exposure.clone().unwrap_or_default(),
                seed.to_string(),
                fmt_f64(r.values[k]),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
    }
    for (level, r) in &rows {
        t.row(vec![
            "aggregate".into(),
            level.to_string(),
            r.group.clone(),
            r.exposure.clone().unwrap_or_default(),
            String::new(),
            String::new(),
            fmt_f64(r.min),
            fmt_f64(r.median),
            fmt_f64(r.max),
        ])?;
    }
    out.push(t.finish()?);

    let table_path = dir.join("pip_table.tex");
    fs::write(&table_path, format_pip_table(&s.pips)).map_err(|e| Error::io(&table_path, e))?;
    out.push(table_path);

    let mut t = Table::create(
        dir,
        "exposure_response.csv",
        &["row_type", "seed", "exposure", "grid_index", "z", "value"],
    )?;
    for c in &s.curves {
        for (k, seed) in s.pips.seeds.iter().enumerate() {
            for (g, z) in c.grid.iter().enumerate() {
                t.row(vec![
                    "seed".into(),
                    seed.to_string(),
                    c.name.clone(),
                    g.to_string(),
                    fmt_f64(*z),
                    fmt_f64(c.per_seed[k][g]),
                ])?;
            }
        }
        for (g, z) in c.grid.iter().enumerate() {
            t.row(vec![
                "median".into(),
                String::new(),
                c.name.clone(),
                g.to_string(),
                fmt_f64(*z),
                fmt_f64(c.median[g]),
            ])?;
        }
    }
    out.push(t.finish()?);

    let mut t = Table::create(
        dir,
        "overall_effect.csv",
        &["row_type", "seed", "percentile", "mean", "lower", "upper"],
    )?;
    for (k, seed) in s.pips.seeds.iter().enumerate() {
        for m in &s.overall.per_seed[k] {
            t.row(vec![
                "seed".into(),
                seed.to_string(),
                fmt_f64(m.percentile),
                fmt_f64(m.mean),
                fmt_f64(m.lower),
                fmt_f64(m.upper),
            ])?;
        }
    }
    for (q, med) in s.overall.percentiles.iter().zip(&s.overall.median) {
        t.row(vec![
            "median".into(),
            String::new(),
            fmt_f64(*q),
            fmt_f64(*med),
            String::new(),
            String::new(),
        ])?;
    }
    out.push(t.finish()?);

    let mut t = Table::create(dir, "convergence.csv", &["seed", "rhat", "converged"])?;
    for (k, seed) in s.pips.seeds.iter().enumerate() {
        t.row(vec![
            seed.to_string(),
            s.rhat[k].map(fmt_f64).unwrap_or_default(),
            u8::from(!s.unconverged_seeds.contains(seed)).to_string(),
        ])?;
    }
    out.push(t.finish()?);
    Ok(())
}

/// Writes `summary.json` and, for CSV output, the model's tables into
/// `dir` (created if needed). Returns the paths written.
pub fn emit_outputs(summary: &SweepSummary, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    let json = dir.join("summary.json");
    write_json(summary, &json)?;
    out.push(json);
    if format == OutputFormat::Json {
        return Ok(out);
    }
    if let Some(p) = &summary.penalized {
        penalized_tables(dir, p, &mut out)?;
    }
    if let Some(w) = &summary.wqs {
        wqs_tables(dir, w, &mut out)?;
    }
    if let Some(b) = &summary.bkmr {
        bkmr_tables(dir, b, &mut out)?;
    }
    let mut t = Table::create(dir, "failures.csv", &["seed", "code", "message"])?;
    for f in &summary.failures {
        t.row(vec![f.seed.to_string(), f.code.clone(), f.message.clone()])?;
    }
    out.push(t.finish()?);
    Ok(out)
}
