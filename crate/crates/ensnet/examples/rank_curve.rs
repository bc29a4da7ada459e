//! Top-k accuracy and the rank-vs-accuracy curve from cached scores.
//!
//! ```text
//! cargo run --example rank_curve
//! ```

use ensnet::eval::{decode_cache, encode_cache, rank_curve, topk_accuracy, FeatureCache};
use ensnet::image::generate_synthetic;
use ensnet::net::{build_preset, extract_scores, train, PresetId, TrainSchedule};

fn main() {
    let set = generate_synthetic(6, 12, 32, 33).expect("synthetic data generates");
    // deliberately undertrained so the curve has somewhere to climb
    let sched = TrainSchedule {
        epochs: 2,
        batch: 8,
        lr: 0.02,
        momentum: 0.9,
        seed: 4,
    };
    let net = build_preset(PresetId::TinyR, 6, 2).expect("preset builds");
    let (trained, _) = train(net, &set, &sched).expect("training runs");
    let scores = extract_scores(&trained, &set).expect("inference runs");

    // cache the scores, round-trip them, and evaluate from the cache
    let cache = FeatureCache::new("tiny-r".into(), scores.classes, set.labels(), scores.rows)
        .expect("cache builds");
    let cache = decode_cache(&encode_cache(&cache)).expect("cache round-trips");
    let records = cache.to_records();

    for k in [1, 3, 6] {
        println!("top-{k}: {:.2}%", topk_accuracy(&records, k).unwrap());
    }

    let report = rank_curve(&records, 6).expect("curve computes");
    println!("\n{}", report.to_table());
    println!("csv:\n{}", report.to_csv());
    println!("json: {}", report.to_json());
}
