//! Train the smallest preset on synthetic data, checkpoint it, and show
//! that the reloaded network scores identically.
//!
//! ```text
//! cargo run --example train_tiny
//! ```

use ensnet::checkpoint::{read_checkpoint, write_checkpoint};
use ensnet::fusion::predict;
use ensnet::image::{generate_synthetic, make_split};
use ensnet::net::{build_preset, extract_scores, train, PresetId, TrainSchedule};

fn main() {
    let set = generate_synthetic(4, 24, 32, 42).expect("synthetic data generates");
    let split = make_split(&set, 16, 7).expect("split succeeds");
    let train_set = set.subset(&split.train);
    let test_set = set.subset(&split.test);

    let sched = TrainSchedule {
        epochs: 16,
        batch: 8,
        lr: 0.02,
        momentum: 0.9,
        seed: 3,
    };
    let net = build_preset(PresetId::TinyA, 4, 1).expect("preset builds");
    let (trained, history) = train(net, &train_set, &sched).expect("training runs");
    for (epoch, loss) in history.iter().enumerate() {
        println!("epoch {:>2}  loss {loss:.4}", epoch + 1);
    }

    let scores = extract_scores(&trained, &test_set).expect("inference runs");
    let labels = test_set.labels();
    let hits = scores
        .rows
        .iter()
        .zip(&labels)
        .filter(|(row, &label)| predict(row).unwrap().index() == label as usize)
        .count();
    println!(
        "test top-1: {:.1}% ({hits}/{})",
        100.0 * hits as f64 / scores.len() as f64,
        scores.len()
    );

    let path = std::env::temp_dir().join("ensnet-train-tiny.ensw");
    write_checkpoint(&path, &trained.to_records(), None).expect("checkpoint writes");
    let (records, _) = read_checkpoint(&path).expect("checkpoint reads");
    let mut reloaded = build_preset(PresetId::TinyA, 4, 999).expect("preset builds");
    reloaded.load_records(&records).expect("records load");
    let again = extract_scores(&reloaded, &test_set).expect("inference runs");
    assert_eq!(
        scores.rows, again.rows,
        "reloaded network must score identically"
    );
    println!(
        "checkpoint round trip: scores identical ({} bytes)",
        std::fs::metadata(&path).unwrap().len()
    );
    std::fs::remove_file(&path).ok();
}
