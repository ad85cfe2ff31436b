//! Source pretraining and the per-subject adaptation step.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::prep::{SourceSubject, UnlabeledSubject};
use crate::dataio::{Ablation, RunConfig};
use crate::featkit::{normalize_cohort, FeatureVector, Normalizer};
use crate::learner::{
    descend, fuse_models, joint_train, pseudo_label, AffineSoftmax, LabeledSet, Learner, LearnerParams,
    TrunkLearner,
};
use crate::ssl::{ssl_adapt, windows, CpcParams};
use crate::synnet::{sample_replay, shift_importances, Network, NodeId, ReplayBuffer, SubjectNode};
use crate::{Error, Result};

/// Everything frozen after pretraining.
#[derive(Debug, Clone)]
pub struct Engine {
    pub config: RunConfig,
    pub learner: AffineSoftmax,
    pub normalizer: Normalizer,
    pub m0: LearnerParams,
    pub pretrain_loss: (f64, f64),
}

/// How one incoming subject was handled. Contains no ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adaptation {
    pub node: NodeId,
    pub subject: String,
    pub degree: usize,
    pub activated: Vec<NodeId>,
    /// Nodes whose models were averaged into the starting point.
    pub fused: Vec<NodeId>,
    pub replay_samples: usize,
    pub replay_exhausted: bool,
    pub pseudo_labels: usize,
    pub stored_samples: usize,
    pub fallback: bool,
    pub degenerate: bool,
    pub failed: bool,
    pub events: Vec<String>,
}

fn empty_network(config: &RunConfig) -> Network {
    let prune = (config.prune_threshold > 0.0).then_some(config.prune_threshold);
    Network::new(config.similarity_weights())
        .with_cap(config.strength_cap)
        .with_renorm_rule(config.renorm_rule)
        .with_prune_threshold(prune)
}

/// Trains M₀ on the pooled source epochs and builds the initial network in
/// which every source node holds M₀ and its own labelled epochs.
pub fn pretrain_source(
    sources: &[SourceSubject],
    n_classes: usize,
    config: &RunConfig,
) -> Result<(Engine, Network)> {
    if sources.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 source subjects, got {}", sources.len())));
    }
    let dim = sources[0].records.first().map(Vec::len).ok_or(Error::EmptyBatch)?;
    let learner = AffineSoftmax::new(dim, dim, n_classes)?;

    let mut batch = Vec::new();
    let mut labels = Vec::new();
    for s in sources {
        if s.records.len() != s.labels.len() {
            return Err(Error::subject(&s.id, "epoch and label counts differ"));
        }
        if let Some(&bad) = s.labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::subject(&s.id, format!("label {bad} out of range for {n_classes} classes")));
        }
        batch.extend(s.records.iter().cloned());
        labels.extend_from_slice(&s.labels);
    }
    let weights = vec![1.0 / batch.len() as f64; batch.len()];
    let init = learner.init_params();
    let tag = init.shape_tag.clone();
    let run = descend(init.values, config.pretrain_epochs, config.pretrain_lr, |v| {
        let p = LearnerParams {
            values: v.to_vec(),
            shape_tag: tag.clone(),
        };
        learner.loss_and_gradient(&p, &batch, &labels, &weights)
    })?;
    let m0 = LearnerParams::new(run.values, tag)?;
    debug!("pretrained on {} epochs: loss {:.4} -> {:.4}", batch.len(), run.initial_loss, run.final_loss);

    let raw: Vec<FeatureVector> = sources.iter().map(|s| s.feature.clone()).collect();
    let (normed, normalizer) = normalize_cohort(&raw, config.norm_mode)?;
    let mut net = empty_network(config);
    for (i, (s, f)) in sources.iter().zip(normed).enumerate() {
        let mut buffer = ReplayBuffer::default();
        for (r, l) in s.records.iter().zip(&s.labels) {
            buffer.push_ground_truth(r.clone(), *l);
        }
        let node = SubjectNode::new(NodeId(i as u32), &s.id, f)
            .source()
            .with_params(m0.clone())
            .with_buffer(buffer);
        net.incorporate_node(node, config.xi)?;
    }
    Ok((
        Engine {
            config: config.clone(),
            learner,
            normalizer,
            m0,
            pretrain_loss: (run.initial_loss, run.final_loss),
        },
        net,
    ))
}

struct Trained {
    params: LearnerParams,
    buffer: ReplayBuffer,
    activated: Vec<NodeId>,
}

impl Engine {
    /// Incorporates `subject` as a new node, adapts a model for it from its
    /// neighbours and its own unlabeled epochs, then consolidates the
    /// activated synapses and renormalizes on schedule.
    ///
    /// `step` counts incoming subjects from 1; `seed` drives replay sampling.
    /// A failure inside adaptation leaves the node holding M₀ with an empty
    /// buffer and is reported through `failed`; only structural errors are
    /// returned.
    pub fn adapt_one(
        &self,
        network: &mut Network,
        subject: &UnlabeledSubject,
        step: usize,
        seed: u64,
    ) -> Result<Adaptation> {
        let cfg = &self.config;
        let feature = self.normalizer.apply(&subject.feature)?;
        let id = network.next_id();
        network.incorporate_node(SubjectNode::new(id, &subject.id, feature), cfg.xi)?;
        let mut report = Adaptation {
            node: id,
            subject: subject.id.clone(),
            degree: network.degree(id)?,
            activated: Vec::new(),
            fused: Vec::new(),
            replay_samples: 0,
            replay_exhausted: false,
            pseudo_labels: 0,
            stored_samples: 0,
            fallback: false,
            degenerate: false,
            failed: false,
            events: Vec::new(),
        };

        match self.train_node(network, id, subject, seed, &mut report) {
            Ok(t) => {
                report.stored_samples = t.buffer.len();
                let node = network.node_mut(id)?;
                node.params = Some(t.params);
                node.buffer = t.buffer;
                report.activated = t.activated;
            }
            Err(e) => {
                warn!("subject {}: adaptation failed: {e}", subject.id);
                report.events.push(format!("adaptation failed: {e}"));
                report.failed = true;
                network.node_mut(id)?.params = Some(self.m0.clone());
            }
        }

        if !report.activated.is_empty() {
            match cfg.ablation {
                Ablation::NoSc => network.reset_clocks(&report.activated)?,
                _ => network.consolidate(&report.activated, cfg.gamma)?,
            }
        }
        if step % cfg.renorm_period == 0 {
            match cfg.ablation {
                Ablation::NoSr => network.advance_clocks(),
                _ => network.renormalize(cfg.lambda)?,
            }
        }
        Ok(report)
    }

    fn train_node(
        &self,
        network: &Network,
        id: NodeId,
        subject: &UnlabeledSubject,
        seed: u64,
        report: &mut Adaptation,
    ) -> Result<Trained> {
        let cfg = &self.config;
        let ranked = network.top_k(id, cfg.top_k, cfg.alpha)?;

        let (fused, replay, activated) = if ranked.is_empty() {
            report.fallback = true;
            let mut sims = network.similarities(id)?;
            sims.retain(|(other, _)| *other != id);
            sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            sims.truncate(cfg.fallback_fanout.max(1));
            if sims.is_empty() {
                return Err(Error::invalid("no other node to borrow a model from"));
            }
            report
                .events
                .push(format!("no synapse; fused the {} most similar nodes", sims.len()));
            report.fused = sims.iter().map(|(n, _)| *n).collect();
            (self.fuse(network, &sims)?, LabeledSet::default(), Vec::new())
        } else {
            let budget = if cfg.replay_budget == 0 {
                subject.records.len()
            } else {
                cfg.replay_budget
            };
            let sample = sample_replay(network, &ranked, budget, seed, cfg.importance_eps)?;
            report.replay_samples = sample.len();
            report.replay_exhausted = sample.exhausted;
            if sample.exhausted {
                report.events.push("every neighbour buffer is empty".into());
            }
            let activated: Vec<NodeId> = ranked.iter().map(|(n, _)| *n).collect();
            report.fused = activated.clone();
            (self.fuse(network, &ranked)?, sample.set, activated)
        };

        let guidance = self.guide(&fused, subject, report)?;
        let pseudo = pseudo_label(&self.learner, &guidance, &subject.records, cfg.eta)?;
        report.pseudo_labels = pseudo.len();

        let params = if pseudo.is_empty() && replay.is_empty() {
            report.degenerate = true;
            report.events.push("no confident pseudo-labels and no replay; kept guidance model".into());
            guidance
        } else {
            if pseudo.is_empty() {
                report.degenerate = true;
                report.events.push("no confident pseudo-labels; trained on replay only".into());
            }
            let labeled = pseudo.to_labeled(&subject.records);
            joint_train(&self.learner, &fused, &labeled, &replay, cfg.beta, cfg.cl_epochs, cfg.cl_lr)?.params
        };

        let mut buffer = ReplayBuffer::default();
        let own = pseudo_label(&self.learner, &params, &subject.records, cfg.eta)?;
        for ((&i, &label), &conf) in own.indices.iter().zip(&own.labels).zip(&own.confidences) {
            buffer.push_pseudo(subject.records[i].clone(), label, conf, cfg.eta)?;
        }
        Ok(Trained {
            params,
            buffer,
            activated,
        })
    }

    fn fuse(&self, network: &Network, weighted: &[(NodeId, f64)]) -> Result<LearnerParams> {
        let raw: Vec<f64> = weighted.iter().map(|(_, w)| *w).collect();
        let shifted = shift_importances(&raw, self.config.importance_eps);
        let models = weighted
            .iter()
            .map(|(n, _)| {
                network
                    .node(*n)?
                    .params
                    .as_ref()
                    .ok_or_else(|| Error::invalid(format!("node {} holds no model", n.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        fuse_models(&models.into_iter().zip(shifted).collect::<Vec<_>>())
    }

    /// Self-supervised adaptation of the fused model on the subject's own
    /// epoch sequence. Skipped when the sequence is too short to window.
    fn guide(&self, fused: &LearnerParams, subject: &UnlabeledSubject, report: &mut Adaptation) -> Result<LearnerParams> {
        let cfg = &self.config;
        if cfg.ssl_epochs == 0 || cfg.ssl_lr == 0.0 {
            return Ok(fused.clone());
        }
        let seqs = match windows(&subject.records, cfg.cpc_horizon, cfg.cpc_stride) {
            Ok(s) if s.len() >= 2 => s,
            _ => {
                report.events.push("too few epochs for contrastive adaptation".into());
                return Ok(fused.clone());
            }
        };
        let dim = self.learner.latent_dim();
        let out = ssl_adapt(&self.learner, fused, &CpcParams::identity(dim), &seqs, cfg.ssl_epochs, cfg.ssl_lr)?;
        Ok(out.params)
    }
}
