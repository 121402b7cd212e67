//! Result CSVs: one row per fold, and one summary row per configuration.

use std::fmt::Write as _;
use std::path::Path;

use super::RunSummary;
use crate::config::{ConfigKey, JoinEmbeddings};
use crate::error::{Error, Result};

pub const FOLD_HEADER: &str = "graph_type,feature,model_arch,join_embeddings,layer,fc,dim,scheduler,fold,f1";
pub const SUMMARY_HEADER: &str =
    "graph_type,feature,model_arch,join_embeddings,layer,fc,dim,scheduler,mean,std,min,median,max";

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRow {
    pub key: ConfigKey,
    pub fold: usize,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub key: ConfigKey,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl From<&RunSummary> for SummaryRow {
    fn from(s: &RunSummary) -> Self {
        SummaryRow {
            key: s.config.key(),
            mean: s.mean,
            std: s.std,
            min: s.min,
            median: s.median,
            max: s.max,
        }
    }
}

fn key_fields(k: &ConfigKey) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        k.graph_type,
        k.feature,
        k.arch,
        k.join_embeddings(),
        k.layers,
        k.fc,
        k.dim,
        k.scheduler
    )
}

pub fn format_fold_csv<'a>(summaries: impl IntoIterator<Item = &'a RunSummary>) -> String {
    let mut out = format!("{FOLD_HEADER}\n");
    for s in summaries {
        let key = key_fields(&s.config.key());
        for (fold, f1) in s.fold_f1.iter().enumerate() {
            let _ = writeln!(out, "{key},{fold},{f1}");
        }
    }
    out
}

pub fn format_summary_csv<'a>(rows: impl IntoIterator<Item = &'a SummaryRow>) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            key_fields(&r.key),
            r.mean,
            r.std,
            r.min,
            r.median,
            r.max
        );
    }
    out
}

fn parse_key(fields: &[&str], path: &Path, line: usize) -> Result<ConfigKey> {
    let err = |e: Error| Error::parse(path, line, e.to_string());
    let int = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::parse(path, line, format!("invalid {what} {s:?}")))
    };
    let key = ConfigKey {
        graph_type: fields[0].parse().map_err(err)?,
        feature: fields[1].parse().map_err(err)?,
        arch: fields[2].parse().map_err(err)?,
        layers: int(fields[4], "layer")?,
        fc: int(fields[5], "fc")?,
        dim: int(fields[6], "dim")?,
        scheduler: fields[7].parse().map_err(err)?,
    };
    let join: JoinEmbeddings = fields[3].parse().map_err(err)?;
    if join != key.join_embeddings() {
        return Err(Error::parse(
            path,
            line,
            format!("join_embeddings {join} inconsistent with graph_type {}", key.graph_type),
        ));
    }
    Ok(key)
}

fn rows<'a>(text: &'a str, header: &str, path: &Path) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(Error::parse(path, 1, format!("expected header {header:?}"))),
    }
    let width = header.split(',').count();
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        out.push((idx + 1, fields));
    }
    Ok(out)
}

fn float(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::parse(path, line, format!("invalid number {s:?}")))
}

pub fn parse_fold_csv(text: &str, path: &Path) -> Result<Vec<FoldRow>> {
    rows(text, FOLD_HEADER, path)?
        .into_iter()
        .map(|(line, f)| {
            Ok(FoldRow {
                key: parse_key(&f, path, line)?,
                fold: f[8]
                    .parse()
                    .map_err(|_| Error::parse(path, line, "invalid fold index"))?,
                f1: float(f[9], path, line)?,
            })
        })
        .collect()
}

pub fn parse_summary_csv(text: &str, path: &Path) -> Result<Vec<SummaryRow>> {
    rows(text, SUMMARY_HEADER, path)?
        .into_iter()
        .map(|(line, f)| {
            Ok(SummaryRow {
                key: parse_key(&f, path, line)?,
                mean: float(f[8], path, line)?,
                std: float(f[9], path, line)?,
                min: float(f[10], path, line)?,
                median: float(f[11], path, line)?,
                max: float(f[12], path, line)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ArchKind, GraphType, ModelConfig, SchedulerKind};
    use crate::features::FeatureMode;

    fn summary() -> RunSummary {
        let c = ModelConfig::new(
            GraphType::Dual,
            FeatureMode::LdpEntropy,
            ArchKind::Sgc,
            6,
            6,
            64,
            SchedulerKind::Plateau,
        );
        RunSummary::from_scores(c, vec![0.69, 0.8, 0.88, 0.9, 0.91]).unwrap()
    }

    #[test]
    fn summary_csv_round_trip() {
        let s = summary();
        let row = SummaryRow::from(&s);
        let text = format_summary_csv([&row]);
        assert!(text.starts_with(SUMMARY_HEADER));
        assert!(text.contains("dual,ldp+entropy,SGC,wsum,6,6,64,ReduceLROnPlateau,"));
        let parsed = parse_summary_csv(&text, Path::new("s.csv")).unwrap();
        assert_eq!(parsed, vec![row]);
    }

    #[test]
    fn fold_csv_round_trip() {
        let s = summary();
        let text = format_fold_csv([&s]);
        let parsed = parse_fold_csv(&text, Path::new("f.csv")).unwrap();
        assert_eq!(parsed.len(), 5);
        assert_eq!(parsed[2].f1, 0.88);
        assert_eq!(parsed[2].fold, 2);
    }

    #[test]
    fn inconsistent_join_rejected() {
        let text = format!("{SUMMARY_HEADER}\nfcg,ldp,GCN,wsum,1,1,8,OneCycleLR,0.5,0,0.5,0.5,0.5\n");
        let err = parse_summary_csv(&text, Path::new("s.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
