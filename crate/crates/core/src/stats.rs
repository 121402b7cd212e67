//! Rank-based group comparison: top-K selection, Kruskal–Wallis, Dunn's
//! post-hoc test with Bonferroni correction and five-number summaries.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::config::{ConfigKey, GraphType};
use crate::error::{Error, Result};
use crate::features::FeatureMode;

pub const DEFAULT_TOP_K: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGroup {
    pub name: String,
    pub scores: Vec<f64>,
}

impl ScoreGroup {
    pub fn new(name: impl Into<String>, scores: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if scores.is_empty() {
            return Err(Error::validation(format!("group {name} is empty")));
        }
        if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::validation(format!("group {name}: score {s} outside [0, 1]")));
        }
        Ok(ScoreGroup { name, scores })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    /// both_wsum, both_merged, single_fcg, single_pcg
    GraphType,
    /// one group per feature mode
    Feature,
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graph_type" | "graph" => Ok(GroupBy::GraphType),
            "feature" => Ok(GroupBy::Feature),
            other => Err(Error::validation(format!(
                "unknown grouping key {other:?} (expected graph_type or feature)"
            ))),
        }
    }
}

/// Which scores feed top-K: per-configuration means or individual fold scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    #[default]
    Means,
    Folds,
}

impl Pooling {
    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Means => "means",
            Pooling::Folds => "folds",
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "means" => Ok(Pooling::Means),
            "folds" => Ok(Pooling::Folds),
            other => Err(Error::validation(format!(
                "unknown pooling {other:?} (expected means or folds)"
            ))),
        }
    }
}

pub fn graph_group_name(g: GraphType) -> &'static str {
    match g {
        GraphType::Dual => "both_wsum",
        GraphType::Merged => "both_merged",
        GraphType::Fcg => "single_fcg",
        GraphType::Pcg => "single_pcg",
    }
}

pub fn feature_group_name(f: FeatureMode, pooling: Pooling) -> String {
    let f = match f {
        FeatureMode::Ldp => "ldp",
        FeatureMode::Entropy => "entropy",
        FeatureMode::LdpEntropy => "ldp_entropy",
    };
    format!("{pooling}_{f}")
}

/// Groups scored configurations and keeps the `k` best scores of each group.
///
/// Groups come out in a fixed order; groups with no scores are omitted.
pub fn top_k_by_group(
    scores: &[(ConfigKey, f64)],
    by: GroupBy,
    pooling: Pooling,
    k: usize,
) -> Result<Vec<ScoreGroup>> {
    if k == 0 {
        return Err(Error::validation("top-k needs k ≥ 1"));
    }
    let names: Vec<String> = match by {
        GroupBy::GraphType => [GraphType::Dual, GraphType::Merged, GraphType::Fcg, GraphType::Pcg]
            .into_iter()
            .map(|g| graph_group_name(g).to_string())
            .collect(),
        GroupBy::Feature => [FeatureMode::Entropy, FeatureMode::Ldp, FeatureMode::LdpEntropy]
            .into_iter()
            .map(|f| feature_group_name(f, pooling))
            .collect(),
    };
    let name_of = |key: &ConfigKey| match by {
        GroupBy::GraphType => graph_group_name(key.graph_type).to_string(),
        GroupBy::Feature => feature_group_name(key.feature, pooling),
    };
    let mut groups = Vec::new();
    for name in names {
        let mut s: Vec<f64> = scores
            .iter()
            .filter(|(key, _)| name_of(key) == name)
            .map(|&(_, f1)| f1)
            .collect();
        if s.is_empty() {
            continue;
        }
        s.sort_by(|a, b| b.total_cmp(a));
        s.truncate(k);
        groups.push(ScoreGroup::new(name, s)?);
    }
    Ok(groups)
}

/// Midranks (1-based) of the pooled values, and the sizes of tied runs.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

struct Pooled {
    n: f64,
    /// Mean rank per group.
    mean_ranks: Vec<f64>,
    sizes: Vec<f64>,
    /// Σ(t³ − t) over tied runs.
    tie_sum: f64,
}

fn pool<G: AsRef<[f64]>>(groups: &[G]) -> Result<Pooled> {
    if groups.len() < 2 {
        return Err(Error::validation("need at least 2 groups"));
    }
    let mut values = Vec::new();
    for (i, g) in groups.iter().enumerate() {
        let g = g.as_ref();
        if g.is_empty() {
            return Err(Error::validation(format!("group {i} is empty")));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("group {i} has a non-finite score")));
        }
        values.extend_from_slice(g);
    }
    let (ranks, ties) = midranks(&values);
    let mut mean_ranks = Vec::with_capacity(groups.len());
    let mut sizes = Vec::with_capacity(groups.len());
    let mut start = 0;
    for g in groups {
        let len = g.as_ref().len();
        mean_ranks.push(ranks[start..start + len].iter().sum::<f64>() / len as f64);
        sizes.push(len as f64);
        start += len;
    }
    Ok(Pooled {
        n: values.len() as f64,
        mean_ranks,
        sizes,
        tie_sum: ties.iter().map(|&t| (t * t * t - t) as f64).sum(),
    })
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df / 2.0, x / 2.0)
}

/// Two-sided standard normal tail, P(|Z| ≥ |z|).
pub fn normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KruskalWallis {
    pub h: f64,
    pub p: f64,
    pub df: usize,
}

/// Tie-corrected Kruskal–Wallis H test.
pub fn kruskal_wallis<G: AsRef<[f64]>>(groups: &[G]) -> Result<KruskalWallis> {
    let pooled = pool(groups)?;
    let n = pooled.n;
    let df = groups.len() - 1;
    let correction = 1.0 - pooled.tie_sum / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(KruskalWallis { h: 0.0, p: 1.0, df });
    }
    let rank_term: f64 = pooled
        .mean_ranks
        .iter()
        .zip(&pooled.sizes)
        .map(|(r, s)| s * r * r)
        .sum();
    let h = ((12.0 / (n * (n + 1.0)) * rank_term - 3.0 * (n + 1.0)) / correction).max(0.0);
    Ok(KruskalWallis {
        h,
        p: clamp_p(chi_square_sf(h, df as f64)),
        df,
    })
}

/// Symmetric matrix of pairwise p-values with a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseP {
    pub p: Vec<Vec<f64>>,
    /// Number of comparisons each p was multiplied by.
    pub correction: usize,
}

/// Dunn's test on pooled midranks, Bonferroni-corrected.
pub fn dunn_posthoc<G: AsRef<[f64]>>(groups: &[G]) -> Result<PairwiseP> {
    let raw = dunn_uncorrected(groups)?;
    let k = groups.len();
    let m = k * (k - 1) / 2;
    let mut p = raw;
    for (i, row) in p.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i != j {
                *v = (*v * m as f64).min(1.0);
            }
        }
    }
    Ok(PairwiseP { p, correction: m })
}

/// Dunn's pairwise two-sided p-values without multiple-comparison correction.
#[allow(clippy::needless_range_loop)]
pub fn dunn_uncorrected<G: AsRef<[f64]>>(groups: &[G]) -> Result<Vec<Vec<f64>>> {
    let pooled = pool(groups)?;
    let n = pooled.n;
    let sigma2 = n * (n + 1.0) / 12.0 - pooled.tie_sum / (12.0 * (n - 1.0));
    let k = groups.len();
    let mut p = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let se = (sigma2 * (1.0 / pooled.sizes[i] + 1.0 / pooled.sizes[j])).sqrt();
            let diff = pooled.mean_ranks[i] - pooled.mean_ranks[j];
            let pij = if se > 0.0 && diff != 0.0 {
                clamp_p(normal_two_sided(diff / se))
            } else {
                1.0
            };
            p[i][j] = pij;
            p[j][i] = pij;
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub groups: Vec<String>,
    pub omnibus: KruskalWallis,
    pub pairwise: PairwiseP,
}

pub fn compare_groups(groups: &[ScoreGroup]) -> Result<TestReport> {
    let scores: Vec<&[f64]> = groups.iter().map(|g| g.scores.as_slice()).collect();
    Ok(TestReport {
        groups: groups.iter().map(|g| g.name.clone()).collect(),
        omnibus: kruskal_wallis(&scores)?,
        pairwise: dunn_posthoc(&scores)?,
    })
}

impl TestReport {
    /// Metadata line, then a matrix with group names as header row and first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# kruskal_wallis_H={},p={},df={},bonferroni={}",
            self.omnibus.h, self.omnibus.p, self.omnibus.df, self.pairwise.correction
        );
        let _ = writeln!(out, "group,{}", self.groups.join(","));
        for (name, row) in self.groups.iter().zip(&self.pairwise.p) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{name},{}", cells.join(","));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn five_number_summary(scores: &[f64]) -> Result<FiveNumber> {
    if scores.is_empty() {
        return Err(Error::validation("five-number summary of an empty group"));
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(FiveNumber {
        min: s[0],
        q1: quantile(&s, 0.25),
        median: quantile(&s, 0.5),
        q3: quantile(&s, 0.75),
        max: s[s.len() - 1],
    })
}

pub const BOXPLOT_HEADER: &str = "group,n,min,q1,median,q3,max";

pub fn boxplot_csv(groups: &[ScoreGroup]) -> Result<String> {
    let mut out = format!("{BOXPLOT_HEADER}\n");
    for g in groups {
        let f = five_number_summary(&g.scores)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            g.name,
            g.scores.len(),
            f.min,
            f.q1,
            f.median,
            f.q3,
            f.max
        );
    }
    Ok(out)
}
