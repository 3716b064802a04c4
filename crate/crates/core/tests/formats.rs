use std::path::{Path, PathBuf};

use tweet_triage::corpus::{self, format_run, parse_run};
use tweet_triage::metrics::{evaluate_all, EvalOptions};
use tweet_triage::model::{checkpoint, Model, ModelConfig, ModelParams, Vocab};
use tweet_triage::ontology::{default_ontology, Ontology};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

#[test]
fn sample_metrics_match_hand_oracle() {
    let o = default_ontology();
    let gold = corpus::load_gold(data("gold_sample.jsonl"), o).unwrap();
    let run = corpus::load_run(data("run_sample.jsonl"), o).unwrap();
    let r = evaluate_all(&run, &gold, o, &EvalOptions::default()).unwrap();
    let expected = [
        ("ndcg", 0.9231718891571561),
        ("aw_hc", 0.5),
        ("aw_a", 0.125),
        ("cf1_h", 0.6),
        ("cf1_a", 0.5454545454545454),
        ("cacc", 0.965),
        ("perr_h", 0.8),
        ("perr_a", 0.45454545454545453),
        ("harm", 0.6567819649472957),
    ];
    for (col, want) in expected {
        let got = r.get(col).unwrap();
        assert!((got - want).abs() < 1e-12, "{col}: {got} vs {want}");
    }
}

#[test]
fn run_file_rewrites_identically() {
    let o = default_ontology();
    let path = data("run_sample.jsonl");
    let text = std::fs::read_to_string(&path).unwrap();
    let run = parse_run(&text, &path, o).unwrap();
    let again = format_run(&run);
    assert_eq!(parse_run(&again, &path, o).unwrap(), run);
    assert_eq!(format_run(&parse_run(&again, &path, o).unwrap()), again);
}

fn tiny_model() -> Model {
    let ontology = Ontology::new([("Request-SearchAndRescue", true), ("Other-Sentiment", false)]).unwrap();
    let vocab = Vocab::from_tokens(["boats", "flood", "trapped"].map(String::from)).unwrap();
    let config = ModelConfig {
        d_model: 4,
        n_layers: 1,
        n_heads: 2,
        d_ff: 8,
        vocab_size: vocab.len(),
        max_len: 6,
        n_types: 2,
    };
    let params = ModelParams::init(&config, 3).unwrap();
    Model::new(config, params, vocab, ontology).unwrap()
}

#[test]
fn golden_checkpoint_is_stable() {
    let golden = std::fs::read(data("tiny.ckpt")).unwrap();
    let model = checkpoint::from_bytes(&golden).unwrap();
    assert_eq!(checkpoint::to_bytes(&model), golden);
    assert_eq!(model, tiny_model());
    assert_eq!(checkpoint::to_bytes(&tiny_model()), golden);
}

#[test]
fn golden_checkpoint_layout() {
    let b = std::fs::read(data("tiny.ckpt")).unwrap();
    assert_eq!(&b[..8], b"TTRIAGE\0");
    assert_eq!(u32_at(&b, 8), 1);
    let header_len = u64_at(&b, 12) as usize;
    let header: serde_json::Value = serde_json::from_slice(&b[20..20 + header_len]).unwrap();
    assert_eq!(header["config"]["d_model"], 4);
    assert_eq!(header["vocab"][4], "boats");
    assert_eq!(header["labels"][0]["actionable"], true);

    let mut at = 20 + header_len;
    let n = u32_at(&b, at) as usize;
    at += 4;
    assert_eq!(n, 2 + 16 + 2);
    let model = tiny_model();
    let expected = model.params.tensors();
    for (name, m) in &expected {
        let len = u32_at(&b, at) as usize;
        at += 4;
        assert_eq!(std::str::from_utf8(&b[at..at + len]).unwrap(), name);
        at += len;
        assert_eq!(u32_at(&b, at), 2);
        let (rows, cols) = (u64_at(&b, at + 4) as usize, u64_at(&b, at + 12) as usize);
        at += 20;
        assert_eq!((rows, cols), m.shape());
        for &x in m.data() {
            assert_eq!(u64_at(&b, at), x.to_bits());
            at += 8;
        }
    }
    assert_eq!(at, b.len());
}

#[test]
fn corrupted_checkpoints_are_rejected() {
    let golden = std::fs::read(data("tiny.ckpt")).unwrap();
    let mut bad = golden.clone();
    bad[0] = b'X';
    assert!(checkpoint::from_bytes(&bad).is_err());
    assert!(checkpoint::from_bytes(&golden[..golden.len() - 1]).is_err());
    let mut long = golden.clone();
    long.push(0);
    assert!(checkpoint::from_bytes(&long).is_err());
    let mut version = golden;
    version[8] = 2;
    assert!(checkpoint::from_bytes(&version).is_err());
}
