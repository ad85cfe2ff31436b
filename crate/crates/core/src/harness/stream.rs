//! Whole-stream runs: data preparation, repeats and ablations.

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{pretrain_source, Adaptation, Engine};
use super::metrics::Metrics;
use super::prep::{
    extract_subjects, incoming_subject, learner_input, source_subject, EvalSet, InputScaler, SourceSubject,
    UnlabeledSubject,
};
use crate::dataio::{Ablation, Dataset, RunConfig};
use crate::learner::LearnerParams;
use crate::synnet::{Network, NetworkSnapshot, NodeId};
use crate::{Error, Result};

/// A dataset split into labelled sources and an unlabeled incoming stream.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub n_classes: usize,
    pub scaler: InputScaler,
    pub sources: Vec<SourceSubject>,
    pub incoming: Vec<(UnlabeledSubject, EvalSet)>,
}

impl Experiment {
    /// The first `ceil(source_frac · N)` subjects in manifest order are the
    /// sources; the rest arrive one by one.
    pub fn prepare(dataset: &Dataset, config: &RunConfig) -> Result<Self> {
        let n = dataset.subjects.len();
        let n_src = (config.source_frac * n as f64).ceil() as usize;
        if n_src < 2 {
            return Err(Error::invalid(format!(
                "source_frac {} of {n} subjects yields fewer than 2 source subjects",
                config.source_frac
            )));
        }
        if n_src >= n {
            return Err(Error::invalid(format!(
                "{n} subjects leave no incoming subject with source_frac {}",
                config.source_frac
            )));
        }
        let feats = extract_subjects(&dataset.subjects)?;
        let pooled: Vec<Vec<f64>> = feats[..n_src]
            .iter()
            .flat_map(|s| s.epoch_features.iter().map(learner_input))
            .collect();
        let scaler = InputScaler::fit(&pooled)?;
        let sources = feats[..n_src]
            .iter()
            .map(|s| source_subject(s, &scaler))
            .collect::<Result<Vec<_>>>()?;
        let incoming = feats[n_src..]
            .iter()
            .map(|s| incoming_subject(s, &scaler, config.eval_fraction, dataset.n_classes))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_classes: dataset.n_classes,
            scaler,
            sources,
            incoming,
        })
    }

    pub fn pretrain(&self, config: &RunConfig) -> Result<(Engine, Network)> {
        pretrain_source(&self.sources, self.n_classes, config)
    }
}

/// One incoming subject's outcome with held-out scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub repeat: usize,
    pub step: usize,
    pub adaptation: Adaptation,
    pub m0: Option<Metrics>,
    pub mi: Option<Metrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub node: NodeId,
    pub mean_strength: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub order: Vec<String>,
    pub rows: Vec<SubjectReport>,
    pub snapshots: Vec<NetworkSnapshot>,
    pub trajectories: Vec<TrajectoryPoint>,
    #[serde(skip)]
    pub network: Option<Network>,
}

impl RepeatResult {
    /// Subject-averaged `(M₀, Mᵢ)` metrics over scored subjects.
    pub fn means(&self) -> Option<(Metrics, Metrics)> {
        let scored: Vec<_> = self
            .rows
            .iter()
            .filter_map(|r| Some((r.m0?, r.mi?)))
            .collect();
        if scored.is_empty() {
            return None;
        }
        let n = scored.len() as f64;
        let avg = |f: &dyn Fn(&(Metrics, Metrics)) -> f64| scored.iter().map(f).sum::<f64>() / n;
        Some((
            Metrics {
                acc: avg(&|p| p.0.acc),
                mf1: avg(&|p| p.0.mf1),
            },
            Metrics {
                acc: avg(&|p| p.1.acc),
                mf1: avg(&|p| p.1.mf1),
            },
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample standard deviation; zero for a single value.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub acc_m0: MeanStd,
    pub acc_mi: MeanStd,
    pub mf1_m0: MeanStd,
    pub mf1_mi: MeanStd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub ablation: Ablation,
    pub pretrain_loss: (f64, f64),
    pub repeats: Vec<RepeatResult>,
    pub aggregate: Option<Aggregate>,
    #[serde(skip)]
    pub m0: Option<LearnerParams>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `(repeat, step)`; step 0 drives the arrival order.
pub fn derive_seed(base: u64, repeat: usize, step: usize) -> u64 {
    splitmix(splitmix(base ^ splitmix(repeat as u64)) ^ step as u64)
}

/// Feeds `order` (indices into `incoming`) through a copy of `base`.
pub fn run_stream(
    engine: &Engine,
    base: &Network,
    incoming: &[(UnlabeledSubject, EvalSet)],
    order: &[usize],
    repeat: usize,
) -> Result<RepeatResult> {
    let mut net = base.clone();
    let mut snapshots = vec![net.snapshot(0)];
    let mut trajectories = Vec::new();
    let record = |net: &Network, step: usize, out: &mut Vec<TrajectoryPoint>| -> Result<()> {
        for n in net.nodes() {
            out.push(TrajectoryPoint {
                step,
                node: n.id,
                mean_strength: net.mean_strength(n.id)?,
            });
        }
        Ok(())
    };
    record(&net, 0, &mut trajectories)?;
    let mut rows = Vec::with_capacity(order.len());
    for (i, &idx) in order.iter().enumerate() {
        let step = i + 1;
        let (subject, eval) = incoming
            .get(idx)
            .ok_or_else(|| Error::invalid(format!("stream index {idx} out of range")))?;
        let seed = derive_seed(engine.config.seed, repeat, step);
        let adaptation = engine.adapt_one(&mut net, subject, step, seed)?;
        let params = net.node(adaptation.node)?.params.clone().unwrap_or_else(|| engine.m0.clone());
        let m0 = eval.score(&engine.learner, &engine.m0)?;
        let mi = eval.score(&engine.learner, &params)?;
        info!(
            "repeat {repeat} step {step} {}: degree {} activated {} pseudo {}",
            subject.id,
            adaptation.degree,
            adaptation.activated.len(),
            adaptation.pseudo_labels
        );
        rows.push(SubjectReport {
            repeat,
            step,
            adaptation,
            m0,
            mi,
        });
        snapshots.push(net.snapshot(step as u64));
        record(&net, step, &mut trajectories)?;
    }
    Ok(RepeatResult {
        repeat,
        order: order.iter().map(|&i| incoming[i].0.id.clone()).collect(),
        rows,
        snapshots,
        trajectories,
        network: Some(net),
    })
}

/// Arrival order for `repeat`: a seeded shuffle of the incoming subjects.
pub fn stream_order(n: usize, seed: u64, repeat: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, repeat, 0)));
    order
}

/// Runs every repeat of `engine.config` in parallel; results keep repeat order.
pub fn run_repeats(engine: &Engine, base: &Network, experiment: &Experiment) -> Result<EvalReport> {
    let cfg = &engine.config;
    let repeats = (0..cfg.repeats.max(1))
        .into_par_iter()
        .map(|r| {
            let order = stream_order(experiment.incoming.len(), cfg.seed, r);
            run_stream(engine, base, &experiment.incoming, &order, r)
        })
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<(Metrics, Metrics)> = repeats.iter().filter_map(RepeatResult::means).collect();
    let col = |f: fn(&(Metrics, Metrics)) -> f64| MeanStd::of(&means.iter().map(f).collect::<Vec<_>>());
    let aggregate = (|| {
        Some(Aggregate {
            acc_m0: col(|p| p.0.acc)?,
            acc_mi: col(|p| p.1.acc)?,
            mf1_m0: col(|p| p.0.mf1)?,
            mf1_mi: col(|p| p.1.mf1)?,
        })
    })();
    Ok(EvalReport {
        ablation: cfg.ablation,
        pretrain_loss: engine.pretrain_loss,
        repeats,
        aggregate,
        m0: Some(engine.m0.clone()),
    })
}

/// Full pipeline for one configuration.
pub fn run_experiment(dataset: &Dataset, config: &RunConfig) -> Result<EvalReport> {
    let exp = Experiment::prepare(dataset, config)?;
    let (engine, net) = exp.pretrain(config)?;
    run_repeats(&engine, &net, &exp)
}

/// Runs each ablation on the same prepared data, pretrained model and seeds.
pub fn run_ablation(dataset: &Dataset, config: &RunConfig, variants: &[Ablation]) -> Result<Vec<EvalReport>> {
    let exp = Experiment::prepare(dataset, config)?;
    let (engine, net) = exp.pretrain(config)?;
    variants
        .iter()
        .map(|&v| {
            let mut e = engine.clone();
            e.config.ablation = v;
            run_repeats(&e, &net, &exp)
        })
        .collect()
}
