//! Model and training configuration: one cell of an experiment grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::FeatureMode;

/// Message-passing architecture used by every branch of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArchKind {
    Gcn,
    Gin,
    Sage,
    Sgc,
    Mlp,
}

impl ArchKind {
    pub const ALL: [ArchKind; 5] = [
        ArchKind::Gcn,
        ArchKind::Gin,
        ArchKind::Sage,
        ArchKind::Sgc,
        ArchKind::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchKind::Gcn => "GCN",
            ArchKind::Gin => "GIN",
            ArchKind::Sage => "SAGE",
            ArchKind::Sgc => "SGC",
            ArchKind::Mlp => "MLP",
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(ArchKind::Gcn),
            "gin" => Ok(ArchKind::Gin),
            "sage" | "graphsage" => Ok(ArchKind::Sage),
            "sgc" => Ok(ArchKind::Sgc),
            "mlp" => Ok(ArchKind::Mlp),
            other => Err(Error::validation(format!(
                "unknown architecture {other:?} (expected gcn, gin, sage, sgc, mlp)"
            ))),
        }
    }
}

/// Which graphs of a sample pair feed the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphType {
    Fcg,
    Pcg,
    Merged,
    Dual,
}

impl GraphType {
    pub const ALL: [GraphType; 4] = [GraphType::Fcg, GraphType::Pcg, GraphType::Merged, GraphType::Dual];

    pub fn as_str(self) -> &'static str {
        match self {
            GraphType::Fcg => "fcg",
            GraphType::Pcg => "pcg",
            GraphType::Merged => "merged",
            GraphType::Dual => "dual",
        }
    }

    pub fn join_embeddings(self) -> JoinEmbeddings {
        match self {
            GraphType::Dual => JoinEmbeddings::Wsum,
            GraphType::Merged => JoinEmbeddings::Merged,
            GraphType::Fcg | GraphType::Pcg => JoinEmbeddings::None,
        }
    }

    /// Number of independent encoder branches.
    pub fn branch_count(self) -> usize {
        if self == GraphType::Dual {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for GraphType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fcg" => Ok(GraphType::Fcg),
            "pcg" => Ok(GraphType::Pcg),
            "merged" => Ok(GraphType::Merged),
            "dual" => Ok(GraphType::Dual),
            other => Err(Error::validation(format!(
                "unknown graph type {other:?} (expected fcg, pcg, merged, dual)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JoinEmbeddings {
    Wsum,
    Merged,
    None,
}

impl JoinEmbeddings {
    pub fn as_str(self) -> &'static str {
        match self {
            JoinEmbeddings::Wsum => "wsum",
            JoinEmbeddings::Merged => "merged",
            JoinEmbeddings::None => "none",
        }
    }
}

impl fmt::Display for JoinEmbeddings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JoinEmbeddings {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wsum" => Ok(JoinEmbeddings::Wsum),
            "merged" => Ok(JoinEmbeddings::Merged),
            "none" => Ok(JoinEmbeddings::None),
            other => Err(Error::validation(format!("unknown join_embeddings {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchedulerKind {
    OneCycle,
    Plateau,
}

impl SchedulerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::OneCycle => "OneCycleLR",
            SchedulerKind::Plateau => "ReduceLROnPlateau",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "onecycle" | "onecyclelr" => Ok(SchedulerKind::OneCycle),
            "plateau" | "reducelronplateau" => Ok(SchedulerKind::Plateau),
            other => Err(Error::validation(format!(
                "unknown scheduler {other:?} (expected onecycle, plateau)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneCycleParams {
    /// Fraction of steps spent warming up.
    pub pct_start: f64,
    /// Initial lr is `max_lr / div_factor`.
    pub div_factor: f64,
    /// Final lr is `max_lr / final_div_factor`.
    pub final_div_factor: f64,
}

impl Default for OneCycleParams {
    fn default() -> Self {
        OneCycleParams {
            pct_start: 0.3,
            div_factor: 25.0,
            final_div_factor: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauParams {
    pub factor: f64,
    pub patience: usize,
    /// Minimum absolute F1 gain that counts as an improvement.
    pub threshold: f64,
    pub min_lr: f64,
}

impl Default for PlateauParams {
    fn default() -> Self {
        PlateauParams {
            factor: 0.5,
            patience: 10,
            threshold: 1e-4,
            min_lr: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Samples per optimizer step (gradients are accumulated).
    pub batch_size: usize,
    pub base_lr: f64,
    pub seed: u64,
    pub one_cycle: OneCycleParams,
    pub plateau: PlateauParams,
    /// Also evaluate F1 on the training split each epoch.
    pub track_train_f1: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            base_lr: 1e-3,
            seed: 0,
            one_cycle: OneCycleParams::default(),
            plateau: PlateauParams::default(),
            track_train_f1: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be ≥ 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be ≥ 1"));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::validation("base_lr must be positive"));
        }
        Ok(())
    }
}

/// The columns that identify a configuration in result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConfigKey {
    pub graph_type: GraphType,
    pub feature: FeatureMode,
    pub arch: ArchKind,
    pub layers: usize,
    pub fc: usize,
    pub dim: usize,
    pub scheduler: SchedulerKind,
}

impl ConfigKey {
    pub fn join_embeddings(&self) -> JoinEmbeddings {
        self.graph_type.join_embeddings()
    }
}

/// One grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub graph_type: GraphType,
    pub feature: FeatureMode,
    pub arch: ArchKind,
    /// Propagation steps (the power K for SGC).
    pub layers: usize,
    /// Fully connected layers in the head, including the output layer.
    pub fc: usize,
    pub dim: usize,
    pub scheduler: SchedulerKind,
    pub dropout: f64,
    pub train: TrainConfig,
}

impl ModelConfig {
    pub fn new(
        graph_type: GraphType,
        feature: FeatureMode,
        arch: ArchKind,
        layers: usize,
        fc: usize,
        dim: usize,
        scheduler: SchedulerKind,
    ) -> Self {
        ModelConfig {
            graph_type,
            feature,
            arch,
            layers,
            fc,
            dim,
            scheduler,
            dropout: 0.5,
            train: TrainConfig::default(),
        }
    }

    pub fn join_embeddings(&self) -> JoinEmbeddings {
        self.graph_type.join_embeddings()
    }

    pub fn key(&self) -> ConfigKey {
        ConfigKey {
            graph_type: self.graph_type,
            feature: self.feature,
            arch: self.arch,
            layers: self.layers,
            fc: self.fc,
            dim: self.dim,
            scheduler: self.scheduler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::validation("layer count must be ≥ 1"));
        }
        if self.fc == 0 {
            return Err(Error::validation("fc count must be ≥ 1"));
        }
        if self.dim == 0 {
            return Err(Error::validation("hidden dim must be ≥ 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::validation("dropout must be in [0, 1)"));
        }
        self.train.validate()
    }

    /// Every setting except the seed, as `key=value` pairs.
    pub fn describe(&self) -> String {
        let t = &self.train;
        format!(
            "graph_type={} feature={} model_arch={} join_embeddings={} layer={} fc={} dim={} \
             scheduler={} dropout={} epochs={} batch_size={} base_lr={} \
             onecycle_pct_start={} onecycle_div={} onecycle_final_div={} \
             plateau_factor={} plateau_patience={} plateau_threshold={} plateau_min_lr={}",
            self.graph_type,
            self.feature,
            self.arch,
            self.join_embeddings(),
            self.layers,
            self.fc,
            self.dim,
            self.scheduler,
            self.dropout,
            t.epochs,
            t.batch_size,
            t.base_lr,
            t.one_cycle.pct_start,
            t.one_cycle.div_factor,
            t.one_cycle.final_div_factor,
            t.plateau.factor,
            t.plateau.patience,
            t.plateau.threshold,
            t.plateau.min_lr,
        )
    }

    /// Short stable hash of [`describe`](Self::describe).
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.describe().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
