//! Fine-tuning style head replacement: swap the classifier layer for a new
//! class count while preserving every other parameter bitwise.
//!
//! ```text
//! cargo run --example replace_head
//! ```

use ensnet::net::{build_preset, replace_head, PresetId};

fn main() {
    // a 1000-way classifier, as if pretrained on a large catalog
    let net = build_preset(PresetId::TinyA, 1000, 31).expect("preset builds");
    println!("before: {} classes", net.classes());

    // re-targeted at 101 classes: only the head is reinitialized
    let swapped = replace_head(&net, 101, 7).expect("head swaps");
    println!("after:  {} classes", swapped.classes());

    let before: std::collections::HashMap<String, Vec<f64>> = net
        .to_records()
        .into_iter()
        .map(|r| (r.label, r.data))
        .collect();
    let mut preserved = 0usize;
    let mut replaced = 0usize;
    for rec in swapped.to_records() {
        if before
            .get(&rec.label)
            .map(|d| d == &rec.data)
            .unwrap_or(false)
        {
            preserved += 1;
        } else {
            replaced += 1;
        }
    }
    println!("{preserved} tensors preserved bitwise, {replaced} reinitialized");

    // determinism: the same seed yields the same fresh head
    let again = replace_head(&net, 101, 7).expect("head swaps");
    let same = swapped
        .to_records()
        .iter()
        .zip(again.to_records().iter())
        .all(|(a, b)| a.data == b.data);
    println!("same seed twice -> identical networks: {same}");
}
