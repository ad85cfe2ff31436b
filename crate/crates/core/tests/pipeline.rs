mod common;

use rand::seq::SliceRandom;
use synhomeo::dataio::{generate_synthetic, Dataset, RunConfig, SynthSpec};
use synhomeo::featkit::{FeatureVector, NormMode, Normalizer};
use synhomeo::harness::{
    pretrain_source, read_summary, run_experiment, run_repeats, run_stream, write_run_dir, Engine, Experiment,
    RunSummary, SourceSubject, UnlabeledSubject, CONFIG_FILE, REPORT_FILE,
};
use synhomeo::learner::{argmax, AffineSoftmax, Learner, LearnerParams};
use synhomeo::synnet::{Network, NodeId, Provenance, SimilarityWeights};

use common::*;

fn small_cohort(seed: u64) -> Dataset {
    let spec = SynthSpec {
        epochs_per_subject: 40,
        ..SynthSpec::new(10, 3, seed)
    };
    generate_synthetic(&spec).unwrap()
}

fn quick_config() -> RunConfig {
    RunConfig {
        pretrain_epochs: 60,
        cl_epochs: 10,
        ssl_epochs: 2,
        ..RunConfig::default()
    }
}

#[test]
fn separable_sources_are_fit_exactly() {
    let mut r = rng(2);
    let make = |id: &str, shift: f64, r: &mut rand_chacha::ChaCha8Rng| {
        let mut records = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let class = i % 2;
            let centre = if class == 0 { -2.0 } else { 2.0 };
            records.push(vec![centre + shift + 0.3 * random_vec(r, 1)[0], 0.3 * random_vec(r, 1)[0]]);
            labels.push(class);
        }
        SourceSubject {
            id: id.into(),
            feature: random_feature(r, 1),
            records,
            labels,
        }
    };
    let sources = vec![make("a", 0.1, &mut r), make("b", -0.1, &mut r)];
    let (engine, net) = pretrain_source(&sources, 2, &quick_config()).unwrap();
    for s in &sources {
        for (x, y) in s.records.iter().zip(&s.labels) {
            let p = engine.learner.predict_proba(&engine.m0, x).unwrap();
            assert_eq!(argmax(&p).0, *y);
        }
    }
    assert_eq!(net.len(), 2);
    assert!(net.edges().all(|(_, _, s)| s.strength == 1.0));
    for n in net.nodes() {
        assert_eq!(n.clock, 1);
        assert!(n.is_source);
        assert_eq!(n.params.as_ref(), Some(&engine.m0));
        assert_eq!(n.buffer.len(), 20);
        assert!(n.buffer.entries().iter().all(|e| e.provenance == Provenance::GroundTruth));
    }
    assert!(pretrain_source(&sources[..1], 2, &quick_config()).is_err());
}

fn prepared(cfg: &RunConfig) -> (Experiment, Engine, Network) {
    let exp = Experiment::prepare(&small_cohort(3), cfg).unwrap();
    let (engine, net) = exp.pretrain(cfg).unwrap();
    (exp, engine, net)
}

#[test]
fn consolidation_hits_the_ranked_neighbours() {
    let cfg = RunConfig {
        top_k: 2,
        renorm_period: 1000,
        ..quick_config()
    };
    let (exp, engine, base) = prepared(&cfg);
    let mut net = base.clone();
    let a = engine.adapt_one(&mut net, &exp.incoming[0].0, 1, 7).unwrap();
    assert!(a.degree >= 1, "incoming subject should connect: {a:?}");
    assert_eq!(a.activated.len(), a.degree.min(2));
    assert_eq!(a.fused, a.activated);
    for id in &a.activated {
        assert_eq!(net.node(*id).unwrap().clock, 1);
    }
    for (x, y, s) in net.edges() {
        let touched = a.activated.contains(&x) || a.activated.contains(&y);
        let want = if touched { cfg.gamma } else { 1.0 };
        assert!((s.strength - want).abs() < 1e-12, "edge ({}, {}) {}", x.0, y.0, s.strength);
    }

    let mut decayed = base.clone();
    let cfg1 = RunConfig { renorm_period: 1, ..cfg };
    let e1 = Engine { config: cfg1, ..engine };
    let b = e1.adapt_one(&mut decayed, &exp.incoming[0].0, 1, 7).unwrap();
    for n in decayed.nodes() {
        assert_eq!(n.clock, 2, "node {} clock", n.id.0);
    }
    assert_eq!(a.activated, b.activated);
}

#[test]
fn incremental_buffers_hold_confident_pseudo_labels() {
    let cfg = quick_config();
    let (exp, engine, net) = prepared(&cfg);
    let order: Vec<usize> = (0..exp.incoming.len()).collect();
    let rep = run_stream(&engine, &net, &exp.incoming, &order, 0).unwrap();
    let net = rep.network.unwrap();
    for n in net.nodes().filter(|n| !n.is_source) {
        assert!(n.params.is_some());
        for e in n.buffer.entries() {
            assert_eq!(e.provenance, Provenance::Pseudo);
            assert!(e.confidence >= cfg.eta);
        }
    }
    assert_eq!(rep.rows.len(), exp.incoming.len());
    assert_eq!(rep.snapshots.len(), exp.incoming.len() + 1);
}

#[test]
fn adaptation_is_deterministic() {
    let cfg = quick_config();
    let (exp, engine, base) = prepared(&cfg);
    let mut n1 = base.clone();
    let mut n2 = base.clone();
    let a = engine.adapt_one(&mut n1, &exp.incoming[1].0, 1, 42).unwrap();
    let b = engine.adapt_one(&mut n2, &exp.incoming[1].0, 1, 42).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(n1.snapshot(1).to_json().unwrap(), n2.snapshot(1).to_json().unwrap());
    assert_eq!(n1.node(a.node).unwrap().params, n2.node(b.node).unwrap().params);
}

#[test]
fn single_subject_stream_has_one_row() {
    let cfg = quick_config();
    let (exp, engine, net) = prepared(&cfg);
    let rep = run_stream(&engine, &net, &exp.incoming, &[2], 0).unwrap();
    assert_eq!(rep.rows.len(), 1);
    assert_eq!(rep.order, vec![exp.incoming[2].0.id.clone()]);
    assert!(rep.rows[0].m0.is_some() && rep.rows[0].mi.is_some());
}

#[test]
fn repeats_are_reproducible_and_shuffled() {
    let cfg = RunConfig {
        repeats: 5,
        seed: 1,
        ..quick_config()
    };
    let ds = small_cohort(3);
    let a = run_experiment(&ds, &cfg).unwrap();
    let b = run_experiment(&ds, &cfg).unwrap();
    assert_eq!(RunSummary::of(&a), RunSummary::of(&b));
    assert_eq!(a.repeats.len(), 5);
    let agg = a.aggregate.as_ref().unwrap();
    for m in [agg.acc_m0, agg.acc_mi, agg.mf1_m0, agg.mf1_mi] {
        assert!((0.0..=1.0).contains(&m.mean));
        assert!(m.std.is_finite() && m.std >= 0.0);
    }
    assert!(agg.acc_mi.std > 0.0);
    for rep in &a.repeats {
        for row in &rep.rows {
            let (m0, mi) = (row.m0.unwrap(), row.mi.unwrap());
            assert!((0.0..=1.0).contains(&m0.acc) && (0.0..=1.0).contains(&mi.acc));
        }
    }
    let orders: std::collections::BTreeSet<_> = a.repeats.iter().map(|r| r.order.clone()).collect();
    assert!(orders.len() > 1);
}

#[test]
fn held_out_labels_never_steer_adaptation() {
    let cfg = RunConfig {
        repeats: 1,
        ..quick_config()
    };
    let ds = small_cohort(5);
    let mut shuffled = ds.clone();
    let mut r = rng(77);
    for s in shuffled.subjects.iter_mut().skip(3) {
        s.labels.as_mut().unwrap().shuffle(&mut r);
    }
    let a = run_experiment(&ds, &cfg).unwrap();
    let b = run_experiment(&shuffled, &cfg).unwrap();
    let (ra, rb) = (&a.repeats[0], &b.repeats[0]);
    for (x, y) in ra.snapshots.iter().zip(&rb.snapshots) {
        assert_eq!(x.to_json().unwrap(), y.to_json().unwrap());
    }
    let (na, nb) = (ra.network.as_ref().unwrap(), rb.network.as_ref().unwrap());
    for (x, y) in na.nodes().zip(nb.nodes()) {
        assert_eq!(x.params, y.params);
        assert_eq!(x.buffer, y.buffer);
    }
    for (x, y) in ra.rows.iter().zip(&rb.rows) {
        assert_eq!(x.adaptation, y.adaptation);
    }
    assert_ne!(
        ra.rows.iter().map(|r| r.mi.unwrap().acc).collect::<Vec<_>>(),
        rb.rows.iter().map(|r| r.mi.unwrap().acc).collect::<Vec<_>>()
    );
}

#[test]
fn unlabeled_stream_runs_without_scores() {
    let cfg = RunConfig {
        repeats: 1,
        ..quick_config()
    };
    let mut ds = small_cohort(6);
    for s in ds.subjects.iter_mut().skip(3) {
        s.labels = None;
    }
    let report = run_experiment(&ds, &cfg).unwrap();
    assert!(report.aggregate.is_none());
    assert!(report.repeats[0].rows.iter().all(|r| r.m0.is_none() && r.mi.is_none()));
    assert!(RunSummary::of(&report).to_table().contains("no labelled evaluation epochs"));
}

#[test]
fn too_few_sources_is_an_error() {
    let cfg = RunConfig {
        source_frac: 0.1,
        ..quick_config()
    };
    assert!(Experiment::prepare(&small_cohort(1), &cfg).is_err());
    let mut ds = small_cohort(1);
    ds.subjects[0].labels = None;
    assert!(Experiment::prepare(&ds, &quick_config()).is_err());
}

/// Hand-built engine over 1-channel features and 2-d records.
fn toy_engine(cfg: RunConfig) -> Engine {
    let learner = AffineSoftmax::new(2, 2, 2).unwrap();
    Engine {
        config: cfg,
        normalizer: Normalizer {
            mode: NormMode::Cohort,
            mean: vec![0.0; 16],
            std: vec![1.0; 16],
            n_channels: 1,
        },
        m0: learner.zero_params(),
        learner,
        pretrain_loss: (0.0, 0.0),
    }
}

/// Unit block vectors at angle `acos(c)` from the first axis.
fn at_cosine(c: f64) -> FeatureVector {
    let s = (1.0 - c * c).sqrt();
    let mut f = FeatureVector::zeros(1);
    for block in [&mut f.time, &mut f.freq, &mut f.tf] {
        block[0] = c;
        block[1] = s;
    }
    f
}

fn toy_network(cosines: &[f64], params: impl Fn(usize) -> LearnerParams, xi: f64) -> Network {
    let nodes = cosines
        .iter()
        .enumerate()
        .map(|(i, c)| node(i as u32, at_cosine(*c)).with_params(params(i)))
        .collect();
    Network::initialize(SimilarityWeights::default(), nodes, xi).unwrap()
}

fn toy_subject(dim: usize) -> UnlabeledSubject {
    let mut r = rng(12);
    UnlabeledSubject {
        id: "new".into(),
        feature: at_cosine(1.0),
        records: (0..12).map(|_| random_vec(&mut r, dim)).collect(),
    }
}

#[test]
fn fallback_fuses_the_three_most_similar() {
    let cfg = RunConfig {
        xi: 0.1,
        ..quick_config()
    };
    let engine = toy_engine(cfg);
    let learner = engine.learner;
    let mut r = rng(4);
    let models: Vec<LearnerParams> = (0..5)
        .map(|_| LearnerParams::new(random_vec(&mut r, learner.n_params()), learner.shape_tag()).unwrap())
        .collect();
    let mut net = toy_network(&[0.09, -0.5, 0.05, 0.08, 0.0], |i| models[i].clone(), 0.99);
    let a = engine.adapt_one(&mut net, &toy_subject(2), 1, 3).unwrap();
    assert!(a.fallback && !a.failed);
    assert_eq!(a.degree, 0);
    assert_eq!(a.fused, vec![NodeId(0), NodeId(3), NodeId(2)]);
    assert_eq!(a.replay_samples, 0);
    assert!(a.activated.is_empty());
    assert!(a.events.iter().any(|e| e.contains("no synapse")));
    assert!(net.nodes().all(|n| n.clock == 2));
}

#[test]
fn uncertain_neighbours_give_a_degenerate_subject() {
    let engine = toy_engine(quick_config());
    let zero = engine.learner.zero_params();
    let mut net = toy_network(&[0.9, 0.8], |_| zero.clone(), 0.1);
    let a = engine.adapt_one(&mut net, &toy_subject(2), 1, 3).unwrap();
    assert!(!a.fallback && !a.failed);
    assert!(a.degenerate && a.replay_exhausted);
    assert_eq!((a.pseudo_labels, a.stored_samples, a.replay_samples), (0, 0, 0));
    assert_eq!(a.activated.len(), 2);
    assert!(net.node(a.node).unwrap().params.is_some());
}

#[test]
fn broken_subject_falls_back_to_the_source_model() {
    let engine = toy_engine(quick_config());
    let zero = engine.learner.zero_params();
    let mut net = toy_network(&[0.9, 0.8], |_| zero.clone(), 0.1);
    let a = engine.adapt_one(&mut net, &toy_subject(3), 1, 3).unwrap();
    assert!(a.failed);
    assert!(a.activated.is_empty());
    let n = net.node(a.node).unwrap();
    assert_eq!(n.params.as_ref(), Some(&engine.m0));
    assert!(n.buffer.is_empty());
    assert!(net.edges().all(|(_, _, s)| s.strength < 1.0));
}

#[test]
fn run_directory_round_trips() {
    let cfg = RunConfig {
        repeats: 2,
        ..quick_config()
    };
    let exp = Experiment::prepare(&small_cohort(2), &cfg).unwrap();
    let (engine, net) = exp.pretrain(&cfg).unwrap();
    let report = run_repeats(&engine, &net, &exp).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run_dir(dir.path(), &cfg, &report).unwrap();
    let text = std::fs::read_to_string(dir.path().join(CONFIG_FILE)).unwrap();
    assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    assert_eq!(read_summary(dir.path()).unwrap(), RunSummary::of(&report));
    let csv = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * exp.incoming.len());
    let m0 = LearnerParams::read_blob(&dir.path().join("params/m0.bin")).unwrap();
    assert_eq!(m0, engine.m0);
    for r in 0..2 {
        for step in 0..=exp.incoming.len() {
            assert!(dir.path().join(format!("snapshots/repeat_{r}/step_{step}.json")).exists());
        }
    }
    assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| !e.unwrap().path().to_string_lossy().ends_with(".tmp")));
}
