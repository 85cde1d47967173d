use std::path::{Path, PathBuf};

use scfraud::artifact::{ModelArtifact, FORMAT_VERSION};
use scfraud::cli::{cmd_evaluate, cmd_generate, cmd_score, cmd_train, report_names, run, Context, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use scfraud::error::{ArtifactError, Error};
use scfraud::preprocess::transform;
use scfraud::svm::label_of;

const SMALL: &str = r#"
seed = 11
[data.synthetic]
n = 1200
d = 4
fraud_rate = 0.05
fraud_offset = 2.5
label_noise = 0.003
[svm]
grid_search = false
[eval]
n_folds = 3
labeled_fraction = 0.2
labeled_fraction_sweep = [0.1, 0.2, 0.3]
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn ctx(cfg: &Path, out: &Path) -> Context {
    Context::new(Some(cfg), None, Some(out), true).unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn usage_errors() {
    assert_eq!(run(["scfraud", "--bogus"]), EXIT_USAGE);
    assert_eq!(run(["scfraud"]), EXIT_USAGE);
    assert_eq!(run(["scfraud", "--help"]), EXIT_OK);
    assert_eq!(run(["scfraud", "--quiet", "train"]), EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "[iforest]\nno_such_key = 1\n");
    assert_eq!(run(["scfraud", "--quiet", "--config", &s(&bad), "train"]), EXIT_USAGE);
}

#[test]
fn missing_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[data]\nsource = \"csv\"\npath = \"nope.csv\"\ncolumns = [{ name = \"a\", type = \"numeric\" }, { name = \"fraud\", type = \"numeric\" }]\n",
    );
    assert_eq!(run(["scfraud", "--quiet", "--config", &s(&cfg), "train"]), EXIT_DATA);
}

#[test]
fn generate_hits_exact_fraud_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.toml", &SMALL.replace("label_noise = 0.003", "label_noise = 0.0"));
    let csv = cmd_generate(&ctx(&cfg, dir.path())).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "f0,f1,f2,f3,fraud");
    assert_eq!(text.lines().count(), 1201);
    assert_eq!(text.lines().skip(1).filter(|l| l.ends_with(",1")).count(), 60);
}

/// Generates a CSV and returns a config that trains from it.
fn csv_setup(dir: &Path) -> PathBuf {
    let gen_cfg = write_config(dir, "gen.toml", SMALL);
    let csv = cmd_generate(&ctx(&gen_cfg, dir)).unwrap();
    assert_eq!(csv, dir.join("synthetic.csv"));
    let body = format!(
        "{SMALL}\n[data]\nsource = \"csv\"\npath = \"synthetic.csv\"\nlabel_column = \"fraud\"\ncolumns = [{}]\n",
        ["f0", "f1", "f2", "f3", "fraud"]
            .iter()
            .map(|n| format!("{{ name = \"{n}\", type = \"numeric\" }}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    write_config(dir, "train.toml", &body)
}

#[test]
fn train_then_score_matches_in_process_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = csv_setup(dir.path());
    let out = dir.path().join("run");
    let t = cmd_train(&ctx(&cfg, &out)).unwrap();

    let history = std::fs::read_to_string(&t.history).unwrap();
    assert!(history.lines().count() - 1 <= 11);
    let log = std::fs::read_to_string(&t.log).unwrap();
    for key in ["n_trees", "subsample_size", "alpha", "contamination", "theta_base", "beta", "max_iterations", "min_batch", "tau =", "svm C =", "svm gamma ="] {
        assert!(log.contains(key), "train.log lacks {key}");
    }

    let scored = dir.path().join("scored.csv");
    let input = dir.path().join("synthetic.csv");
    let n = cmd_score(&ctx(&cfg, &out), &t.artifact, &input, &scored).unwrap();
    assert_eq!(n, 1200);

    let art = ModelArtifact::load(&t.artifact).unwrap();
    let data = scfraud::config::RunConfig::load(&cfg).unwrap().0.load_data(dir.path()).unwrap();
    let x = transform(&art.preprocess, &data.features).unwrap();
    let expected: Vec<u8> = art.svm().decision_values(&x).unwrap().into_iter().map(label_of).collect();

    let mut rdr = csv::Reader::from_path(&scored).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        &header[header.len() - 4..],
        ["anomaly_score", "decision_value", "predicted_label", "confidence"]
    );
    let col = header.iter().position(|h| h == "predicted_label").unwrap();
    let got: Vec<u8> = rdr.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(got, expected);
}

#[test]
fn score_accepts_feature_only_and_empty_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = csv_setup(dir.path());
    let out = dir.path().join("run");
    let t = cmd_train(&ctx(&cfg, &out)).unwrap();
    let c = ctx(&cfg, &out);

    let no_label = dir.path().join("features.csv");
    std::fs::write(&no_label, "f0,f1,f2,f3\n0.1,0.2,0.3,0.4\n9,9,9,9\n").unwrap();
    let scored = dir.path().join("s1.csv");
    assert_eq!(cmd_score(&c, &t.artifact, &no_label, &scored).unwrap(), 2);
    assert_eq!(std::fs::read_to_string(&scored).unwrap().lines().count(), 3);

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "f0,f1,f2,f3,fraud\n").unwrap();
    let scored = dir.path().join("s2.csv");
    assert_eq!(cmd_score(&c, &t.artifact, &empty, &scored).unwrap(), 0);
    assert_eq!(
        std::fs::read_to_string(&scored).unwrap(),
        "f0,f1,f2,f3,fraud,anomaly_score,decision_value,predicted_label,confidence\n"
    );

    let wrong = dir.path().join("wrong.csv");
    std::fs::write(&wrong, "f0,zz,f2,f3\n1,2,3,4\n").unwrap();
    let code = run([
        "scfraud", "--quiet", "score", "--artifact", &s(&t.artifact), "--input", &s(&wrong), "--output", &s(&dir.path().join("s3.csv")),
    ]);
    assert_eq!(code, EXIT_DATA);
}

#[test]
fn artifact_round_trip_and_integrity_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("run");
    let t = cmd_train(&ctx(&cfg, &out)).unwrap();
    let bytes = std::fs::read(&t.artifact).unwrap();
    let art = ModelArtifact::read(&bytes[..]).unwrap();
    let mut again = Vec::new();
    art.write(&mut again).unwrap();
    assert_eq!(bytes, again);

    let probe = scfraud::FeatureMatrix::from_rows(&[vec![0.0; 4], vec![1.5, -2.0, 0.3, 4.0], vec![-3.0; 4]]);
    let reloaded = ModelArtifact::read(&again[..]).unwrap();
    for row in probe.rows_iter() {
        assert_eq!(
            art.svm().decision_value(row).unwrap().to_bits(),
            reloaded.svm().decision_value(row).unwrap().to_bits()
        );
        assert_eq!(
            art.forest().anomaly_score(row).unwrap().to_bits(),
            reloaded.forest().anomaly_score(row).unwrap().to_bits()
        );
    }

    let mut bumped = bytes.clone();
    bumped[8..12].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    assert!(matches!(
        ModelArtifact::read(&bumped[..]),
        Err(ArtifactError::Version { found, .. }) if found == FORMAT_VERSION + 1
    ));
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(ModelArtifact::read(&magic[..]), Err(ArtifactError::BadMagic)));
    assert!(matches!(
        ModelArtifact::read(&bytes[..bytes.len() - 3]),
        Err(ArtifactError::Corrupt(_))
    ));

    let digest = scfraud::config::config_hash(&std::fs::read(&cfg).unwrap());
    assert_eq!(art.meta.config_hash, digest);
    art.verify_config_hash(&digest).unwrap();

    let other = write_config(dir.path(), "other.toml", "seed = 1\n");
    let err = cmd_score(
        &ctx(&other, &out),
        &t.artifact,
        &dir.path().join("missing.csv"),
        &dir.path().join("x.csv"),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Artifact(ArtifactError::ConfigHash { .. })));
}

#[test]
fn empty_candidate_set_keeps_initial_model() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{SMALL}\n[iforest]\nalpha = 1e9\ncontamination_floor = false\n");
    let cfg = write_config(dir.path(), "c.toml", &body);
    let t = cmd_train(&ctx(&cfg, &dir.path().join("run"))).unwrap();
    let history = std::fs::read_to_string(&t.history).unwrap();
    assert_eq!(history.lines().count(), 2, "{history}");
    let log = std::fs::read_to_string(&t.log).unwrap();
    assert!(log.contains("candidates = 0"));
    assert!(log.contains("best_iteration = 0"));
}

#[test]
fn evaluate_writes_one_report_per_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("run");
    let files = cmd_evaluate(&ctx(&cfg, &out)).unwrap();
    assert_eq!(files.len(), 6);
    for f in [0.1, 0.2, 0.3] {
        let (txt, csv) = report_names(f);
        let report = std::fs::read_to_string(out.join(&txt)).unwrap();
        assert!(report.contains("two_phase") && report.contains("iforest_only"));
        assert!(report.contains("Wilcoxon"));
        let rows = std::fs::read_to_string(out.join(&csv)).unwrap().lines().count();
        assert_eq!(rows, 1 + 3 * 3);
    }

    let only = write_config(
        dir.path(),
        "only.toml",
        &SMALL.replace("labeled_fraction_sweep = [0.1, 0.2, 0.3]", "labeled_fraction_sweep = [0.2]\nmethods = [\"two_phase\"]"),
    );
    let out2 = dir.path().join("run2");
    cmd_evaluate(&ctx(&only, &out2)).unwrap();
    let report = std::fs::read_to_string(out2.join(report_names(0.2).0)).unwrap();
    assert!(!report.contains("Wilcoxon"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run(["scfraud", "--quiet", "--config", &s(&cfg), "--out", &s(&a), "--seed", "5", "generate"]), EXIT_OK);
    assert_eq!(run(["scfraud", "--quiet", "--config", &s(&cfg), "--out", &s(&b), "generate"]), EXIT_OK);
    assert_ne!(
        std::fs::read(a.join("synthetic.csv")).unwrap(),
        std::fs::read(b.join("synthetic.csv")).unwrap()
    );
}
