use std::fmt::Write as _;

use graphnav::harness::{
    export_results, read_records_csv, run_pipeline, EmbeddingsConfig, EvalConfig, EvalMode, ExperimentConfig,
    HarnessError, PolicyKind,
};

fn tiny(mode: EvalMode) -> ExperimentConfig {
    let mut c = ExperimentConfig::desk();
    c.seed = 11;
    c.env.map.n_poses = 20;
    c.env.map.objects_min = 8;
    c.env.map.objects_max = 20;
    c.embeddings.dim = 48;
    c.pretrain.n_batches = 3;
    c.pretrain.proxy.n_poses = 20;
    c.train.n_episodes = 20;
    c.eval = EvalConfig {
        n_spawn_models: 1,
        n_agents_per_model: 2,
        n_maps_per_agent: 2,
        n_targets_per_map: 2,
        mode,
        ..EvalConfig::default()
    };
    c
}

fn word2vec_text(config: &EmbeddingsConfig, header: bool) -> String {
    let (vocab, table) = config.build().unwrap();
    let mut text = String::new();
    let classes: Vec<&str> = vocab.all().collect();
    if header {
        writeln!(text, "{} {}", classes.len(), table.dim()).unwrap();
    }
    for c in classes {
        let v: Vec<String> = table.get(c).unwrap().iter().map(|x| format!("{x:?}")).collect();
        writeln!(text, "{c} {}", v.join(" ")).unwrap();
    }
    text
}

#[test]
fn vectors_from_file_reproduce_synthetic_run() {
    let dir = tempfile::tempdir().unwrap();
    let synthetic = tiny(EvalMode::UnseenEnv);
    for header in [true, false] {
        let path = dir.path().join(format!("vectors-{header}.txt"));
        std::fs::write(&path, word2vec_text(&synthetic.embeddings, header)).unwrap();
        let mut from_file = synthetic.clone();
        from_file.embeddings.path = Some(path);
        let a = run_pipeline(&synthetic).unwrap();
        let b = run_pipeline(&from_file).unwrap();
        assert_eq!(a.len(), 2 * 2 * 2 * 3);
        let outcome = |r: &[graphnav::harness::EvalRecord]| -> Vec<(bool, usize)> {
            r.iter().map(|x| (x.success, x.steps)).collect()
        };
        assert_eq!(outcome(&a), outcome(&b));
    }
}

#[test]
fn missing_vector_in_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(EvalMode::TrainEnv);
    let text: String = word2vec_text(&c.embeddings, false)
        .lines()
        .filter(|l| !l.starts_with("keys "))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = dir.path().join("vectors.txt");
    std::fs::write(&path, text).unwrap();
    c.embeddings.path = Some(path);
    assert!(matches!(run_pipeline(&c), Err(HarnessError::Embedding(_))));

    c.embeddings.path = Some(dir.path().join("absent.txt"));
    let err = run_pipeline(&c).unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
    assert!(err.to_string().contains("absent.txt"));
}

#[test]
fn every_mode_exports_and_reimports() {
    let dir = tempfile::tempdir().unwrap();
    for mode in [EvalMode::TrainEnv, EvalMode::UnseenEnv, EvalMode::UnseenClass] {
        let records = run_pipeline(&tiny(mode)).unwrap();
        assert_eq!(records.len(), 2 * 2 * 2 * PolicyKind::ALL.len());
        if mode == EvalMode::UnseenClass {
            assert!(records
                .iter()
                .all(|r| ["butter", "yoghurt", "cellphone"].contains(&r.target_class.as_str())));
        }
        let out = dir.path().join(mode.name());
        std::fs::create_dir_all(&out).unwrap();
        export_results(&out, &records).unwrap();
        assert_eq!(read_records_csv(&out.join("records.csv")).unwrap(), records);
        let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
        assert!(metrics.starts_with("group,n,success_mean,success_std,steps_mean,steps_std"));
        assert_eq!(metrics.lines().count(), 1 + PolicyKind::ALL.len());
    }
}

#[test]
fn seeds_change_results_and_records_carry_them() {
    let a = run_pipeline(&tiny(EvalMode::UnseenEnv)).unwrap();
    let mut other = tiny(EvalMode::UnseenEnv);
    other.seed = 12;
    let b = run_pipeline(&other).unwrap();
    let seeds = |r: &[graphnav::harness::EvalRecord]| -> Vec<u64> { r.iter().map(|x| x.seed).collect() };
    assert_ne!(seeds(&a), seeds(&b));
    for r in &a {
        let same_episode = a
            .iter()
            .filter(|x| (x.spawn_model_id, x.agent_id, x.map_id, x.episode_id) == (r.spawn_model_id, r.agent_id, r.map_id, r.episode_id));
        for x in same_episode {
            assert_eq!((x.seed, &x.target_class), (r.seed, &r.target_class));
        }
    }
}
