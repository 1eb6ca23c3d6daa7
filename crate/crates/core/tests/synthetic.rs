use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vfuse_core::eval::{auroc, full_grid, random_search_cv, stratified_split, SplitPlan};
use vfuse_core::model::{
    fit, fit_elastic_net, ClassifierConfig, ElasticNetParams, Family, FittedParams, ModelSpec, Predictor,
};
use vfuse_core::pipeline::{FeatureConfig, Featurizer, InputMode, TextResources};
use vfuse_core::profile::{prepare_dataset, StartupProfile, DEFAULT_HORIZON_MONTHS};
use vfuse_core::synth::{generate_synthetic, SynthConfig};
use vfuse_core::text::TextKind;

#[test]
fn generator_is_deterministic_and_seed_sensitive() {
    let a = generate_synthetic(&SynthConfig::with_n(200, 5)).unwrap();
    let b = generate_synthetic(&SynthConfig::with_n(200, 5)).unwrap();
    let c = generate_synthetic(&SynthConfig::with_n(200, 6)).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    assert_ne!(a.labels, c.labels);
}

#[test]
fn files_round_trip_through_the_readers() {
    let d = generate_synthetic(&SynthConfig::with_n(50, 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let profiles = dir.path().join("profiles.jsonl");
    let cache = dir.path().join("embeddings.jsonl");
    d.write_profiles(&profiles).unwrap();
    d.write_embeddings(&cache).unwrap();
    let reader = std::io::BufReader::new(std::fs::File::open(&profiles).unwrap());
    let (parsed, diagnostics) = vfuse_core::profile::parse_profiles(reader, false).unwrap();
    assert!(diagnostics.is_empty(), "{diagnostics:?}");
    assert_eq!(parsed, d.profiles);
    let embeddings = vfuse_core::text::read_embedding_cache(&cache).unwrap();
    assert_eq!(embeddings, d.embedding_map());
}

#[test]
fn elastic_net_recovers_planted_signs() {
    let config = SynthConfig::with_n(10_000, 21);
    let d = generate_synthetic(&config).unwrap();
    let (data, _) = prepare_dataset(&d.profiles, config.cutoff, DEFAULT_HORIZON_MONTHS);
    let refs: Vec<&StartupProfile> = data.iter().map(|x| &x.profile).collect();
    let y: Vec<bool> = data.iter().map(|x| x.label.is_positive()).collect();
    let cfg = FeatureConfig::new(InputMode::Fv, TextKind::Manual10, config.cutoff);
    let (f, x) = Featurizer::fit(&refs, &cfg, &TextResources::default()).unwrap();
    let model = fit_elastic_net(x.view(), &y, &ElasticNetParams::new(0.1, 1e-5, 0.01), 0).unwrap();
    let FittedParams::Linear(lin) = &model.params else { panic!("linear model expected") };
    let mut checked = 0;
    for (slot, effect) in &config.effects {
        if effect.abs() < 0.5 {
            continue;
        }
        let col = f.layout.block(slot).unwrap().offset;
        let w = lin.weights[col];
        assert!(w * effect > 0.0, "{slot}: planted {effect}, fitted {w}");
        checked += 1;
    }
    assert_eq!(checked, 4);
}

#[test]
fn embeddings_alone_beat_chance() {
    let config = SynthConfig::with_n(4_000, 8);
    let d = generate_synthetic(&config).unwrap();
    let (data, _) = prepare_dataset(&d.profiles, config.cutoff, DEFAULT_HORIZON_MONTHS);
    let y: Vec<bool> = data.iter().map(|x| x.label.is_positive()).collect();
    let part = stratified_split(&y, &SplitPlan::default(), 0).unwrap();
    let res = TextResources::with_embeddings(d.embedding_map());
    let train: Vec<&StartupProfile> = part.train.iter().map(|&i| &data[i].profile).collect();
    let test: Vec<&StartupProfile> = part.test.iter().map(|&i| &data[i].profile).collect();
    let y_train: Vec<bool> = part.train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<bool> = part.test.iter().map(|&i| y[i]).collect();
    let cfg = FeatureConfig::new(InputMode::Tsd, TextKind::DocEmbedding, config.cutoff);
    let (f, x) = Featurizer::fit(&train, &cfg, &res).unwrap();
    let spec = ModelSpec::ElasticNet(ElasticNetParams::new(0.1, 1e-4, 0.1));
    let model = fit(x.view(), &y_train, &ClassifierConfig::new(spec, 0)).unwrap();
    let scores = model.predict_proba(f.transform(&test, &res).unwrap().view()).unwrap();
    let auc = auroc(&y_test, &scores).unwrap() * 100.0;
    assert!(auc > 55.0, "embedding-only AUROC {auc}");
}

fn planted(n: usize, seed: u64) -> (Array2<f64>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, 5), |_| rng.sample::<f64, _>(StandardNormal));
    let y = x.rows().into_iter().map(|r| rng.random_bool(1.0 / (1.0 + (-(1.5 * r[0] - r[1])).exp()))).collect();
    (x, y)
}

#[test]
fn search_prefers_weak_penalty_on_planted_signal() {
    let (x, y) = planted(600, 1);
    let grid = vec![
        ModelSpec::ElasticNet(ElasticNetParams::new(0.5, 1e-4, 8.0)),
        ModelSpec::ElasticNet(ElasticNetParams::new(0.5, 1e-4, 0.1)),
    ];
    let r = random_search_cv(x.view(), &y, Family::ElasticNet, &grid, 5, 20, 3).unwrap();
    assert_eq!(r.candidates.len(), 2);
    assert_eq!(r.best, grid[1]);
}

#[test]
fn elastic_net_search_logs_twenty_candidates_with_ten_folds() {
    let (x, y) = planted(500, 2);
    let grid = full_grid(Family::ElasticNet);
    let r = random_search_cv(x.view(), &y, Family::ElasticNet, &grid, 10, 20, 4).unwrap();
    assert_eq!(r.candidates.len(), 20);
    let mut keys: Vec<String> = r.candidates.iter().map(|c| c.spec.serialized()).collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 20);
    assert!(r.candidates.iter().all(|c| c.fold_auroc.len() == 10));
    let mut csv = Vec::new();
    r.write_candidate_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 21);
    let again = random_search_cv(x.view(), &y, Family::ElasticNet, &grid, 10, 20, 4).unwrap();
    assert_eq!(again, r);
}
