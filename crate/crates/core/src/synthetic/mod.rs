//! Seeded generator of labeled FCG/PCG pairs.
//!
//! FCGs are preferential-attachment digraphs and PCGs are random recursive
//! trees with a few extra edges. Malicious samples carry a structural cue in
//! one or both graphs depending on [`SignalMode`]; entropy is drawn from a
//! scaled Beta distribution whose mean is shifted by class.

pub mod probe;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::graph::{canonicalize, Dataset, Graph, Label, SamplePair};
use crate::{derive_seed, DetRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalMode {
    FcgOnly,
    PcgOnly,
    /// Each malicious sample carries the FCG cue, the PCG cue or both, with
    /// equal probability.
    Complementary,
}

impl SignalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalMode::FcgOnly => "fcg_only",
            SignalMode::PcgOnly => "pcg_only",
            SignalMode::Complementary => "complementary",
        }
    }
}

impl fmt::Display for SignalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fcg_only" | "fcg" => Ok(SignalMode::FcgOnly),
            "pcg_only" | "pcg" => Ok(SignalMode::PcgOnly),
            "complementary" => Ok(SignalMode::Complementary),
            other => Err(Error::validation(format!(
                "unknown signal mode {other:?} (expected fcg_only, pcg_only or complementary)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n_samples: usize,
    /// Fraction of malicious samples; the count is rounded and then forced.
    pub malicious_fraction: f64,
    pub seed: u64,
    /// Inclusive node-count range of FCGs.
    pub fcg_nodes: (usize, usize),
    /// Inclusive node-count range of PCGs before any cue is added.
    pub pcg_nodes: (usize, usize),
    pub mode: SignalMode,
    /// Cue strength in [0, 1].
    pub strength: f64,
    /// Separation of the class entropy means in [0, 1]; 0 makes entropy uninformative.
    pub entropy_shift: f64,
}

/// Strength at which the directional comparisons are run.
pub const CALIBRATED_STRENGTH: f64 = 0.8;

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            n_samples: 200,
            malicious_fraction: 0.5,
            seed: 42,
            fcg_nodes: (50, 400),
            pcg_nodes: (3, 20),
            mode: SignalMode::Complementary,
            strength: CALIBRATED_STRENGTH,
            entropy_shift: 0.5,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::validation("n_samples must be positive"));
        }
        if !(0.0..=1.0).contains(&self.malicious_fraction) {
            return Err(Error::validation("malicious fraction must lie in [0, 1]"));
        }
        for (name, (lo, hi)) in [("fcg", self.fcg_nodes), ("pcg", self.pcg_nodes)] {
            if lo == 0 || lo > hi {
                return Err(Error::validation(format!(
                    "{name} size range {lo}..={hi} must be positive and ordered"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(Error::validation("signal strength must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.entropy_shift) {
            return Err(Error::validation("entropy shift must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "synthetic n={} malicious_fraction={} seed={} fcg_nodes={}..={} pcg_nodes={}..={} mode={} strength={} entropy_shift={}",
            self.n_samples,
            self.malicious_fraction,
            self.seed,
            self.fcg_nodes.0,
            self.fcg_nodes.1,
            self.pcg_nodes.0,
            self.pcg_nodes.1,
            self.mode,
            self.strength,
            self.entropy_shift
        )
    }
}

/// Which cues a malicious sample carries.
#[derive(Debug, Clone, Copy)]
struct Cues {
    fcg: bool,
    pcg: bool,
}

pub fn generate(spec: &GenSpec) -> Result<Dataset> {
    spec.validate()?;
    let n_mal = (spec.n_samples as f64 * spec.malicious_fraction).round() as usize;
    let mut labels = vec![Label::Malicious; n_mal];
    labels.resize(spec.n_samples, Label::Benign);
    labels.shuffle(&mut DetRng::seed_from_u64(derive_seed(spec.seed, 0)));

    let sample_base = derive_seed(spec.seed, 1);
    let samples = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let mut rng = DetRng::seed_from_u64(derive_seed(sample_base, i as u64));
            generate_sample(spec, i, label, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, spec.describe())
}

fn generate_sample(spec: &GenSpec, i: usize, label: Label, rng: &mut DetRng) -> Result<SamplePair> {
    let cues = match (label, spec.mode) {
        (Label::Benign, _) => Cues { fcg: false, pcg: false },
        (Label::Malicious, SignalMode::FcgOnly) => Cues { fcg: true, pcg: false },
        (Label::Malicious, SignalMode::PcgOnly) => Cues { fcg: false, pcg: true },
        (Label::Malicious, SignalMode::Complementary) => match rng.random_range(0..3) {
            0 => Cues { fcg: true, pcg: false },
            1 => Cues { fcg: false, pcg: true },
            _ => Cues { fcg: true, pcg: true },
        },
    };
    let fcg = function_call_graph(spec, cues.fcg, rng)?;
    let pcg = process_call_graph(spec, cues.pcg, rng)?;
    let entropy = sample_entropy(spec, label, rng);
    Ok(SamplePair {
        id: format!("syn{i:05}"),
        label,
        fcg,
        pcg,
        entropy,
    })
}

fn function_call_graph(spec: &GenSpec, cue: bool, rng: &mut DetRng) -> Result<Graph> {
    let n = rng.random_range(spec.fcg_nodes.0..=spec.fcg_nodes.1);
    // dispatcher functions calling a batch of leaf helpers
    let mut fanouts = Vec::new();
    let mut leaves = 0;
    for _ in 0..rng.random_range(0..=4) {
        let size = rng.random_range(2..=10);
        if leaves + size + 1 < n / 2 {
            fanouts.push(size);
            leaves += size;
        }
    }
    let core = n - leaves;
    let mut edges = Vec::with_capacity(2 * n);
    // one entry per unit of (degree + 1): uniform draws are degree-proportional
    let mut urn: Vec<usize> = Vec::with_capacity(5 * n);
    urn.push(0);
    for v in 1..core {
        let calls = if v > 1 && rng.random_bool(0.5) { 2 } else { 1 };
        for _ in 0..calls {
            let target = urn[rng.random_range(0..urn.len())];
            edges.push((v, target));
            urn.push(target);
            urn.push(v);
        }
        urn.push(v);
    }
    let mut next = core;
    for size in fanouts {
        let dispatcher = rng.random_range(0..core);
        for _ in 0..size {
            edges.push((dispatcher, next));
            next += 1;
        }
    }
    if cue && n > 1 {
        let hubs: Vec<usize> = (0..3).map(|_| rng.random_range(0..n)).collect();
        let extra = (spec.strength * 0.375 * n as f64).round() as usize;
        for _ in 0..extra {
            let caller = rng.random_range(0..n);
            let hub = hubs[rng.random_range(0..hubs.len())];
            if caller != hub {
                edges.push((caller, hub));
            }
        }
    }
    canonicalize(n, edges)
}

fn process_call_graph(spec: &GenSpec, cue: bool, rng: &mut DetRng) -> Result<Graph> {
    let base = rng.random_range(spec.pcg_nodes.0..=spec.pcg_nodes.1);
    let mut edges: Vec<(usize, usize)> = (1..base).map(|v| (rng.random_range(0..v), v)).collect();
    let mut n = base;
    if base > 1 {
        for _ in 0..rng.random_range(0..=2) {
            let u = rng.random_range(0..base);
            let v = rng.random_range(0..base);
            if u != v {
                edges.push((u, v));
            }
        }
    }
    if cue {
        // a deeper spawn chain ending in a fan-out burst
        let chain = 1 + (spec.strength * 5.0).round() as usize;
        let burst = 2 + (spec.strength * 7.5).round() as usize;
        let mut tail = rng.random_range(0..base);
        for _ in 0..chain {
            edges.push((tail, n));
            tail = n;
            n += 1;
        }
        for _ in 0..burst {
            edges.push((tail, n));
            n += 1;
        }
    }
    canonicalize(n, edges)
}

fn sample_entropy(spec: &GenSpec, label: Label, rng: &mut DetRng) -> f64 {
    const CONCENTRATION: f64 = 20.0;
    let shift = 0.1 * spec.entropy_shift;
    let mean = match label {
        Label::Benign => 0.7 - shift,
        Label::Malicious => 0.7 + shift,
    };
    let beta = Beta::new(mean * CONCENTRATION, (1.0 - mean) * CONCENTRATION)
        .expect("beta parameters are positive");
    (8.0 * beta.sample(rng)).clamp(0.0, 8.0)
}
