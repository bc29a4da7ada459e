//! The complete weighted-fusion pipeline at desk scale: train three tiny
//! backbones, extract their score vectors, search the fusion weights on a
//! simplex grid, train the fusion head, and compare top-k accuracies.
//!
//! ```text
//! cargo run --example ensemble_pipeline
//! ```

use ensnet::eval::{topk_accuracy, PredictionRecord};
use ensnet::fusion::{default_fusion_schedule, search_weights, train_fusion, FusionModel};
use ensnet::image::{generate_synthetic, make_split, LabeledSet};
use ensnet::net::{
    build_preset, extract_scores, preset_default_epochs, train, PresetId, ScoreMatrix,
    TrainSchedule,
};

fn records_from(scores: &ScoreMatrix, set: &LabeledSet) -> Vec<PredictionRecord> {
    scores
        .rows
        .iter()
        .zip(&set.items)
        .map(|(row, item)| PredictionRecord {
            item: item.name.clone(),
            label: item.label,
            scores: row.clone(),
        })
        .collect()
}

fn fused_records(
    model: &FusionModel,
    features: &[ScoreMatrix],
    set: &LabeledSet,
) -> Vec<PredictionRecord> {
    (0..set.len())
        .map(|row| PredictionRecord {
            item: set.items[row].name.clone(),
            label: set.items[row].label,
            scores: model.score_item(features, row).expect("fusion scores"),
        })
        .collect()
}

fn main() {
    let set = generate_synthetic(4, 24, 32, 42).expect("synthetic data generates");
    let split = make_split(&set, 16, 7).expect("split succeeds");
    let train_set = set.subset(&split.train);
    let test_set = set.subset(&split.test);
    println!(
        "{} train / {} test images, 4 classes\n",
        train_set.len(),
        test_set.len()
    );

    let presets = [PresetId::TinyA, PresetId::TinyG, PresetId::TinyR];
    let mut train_features = Vec::new();
    let mut test_features = Vec::new();
    for (i, id) in presets.iter().enumerate() {
        let sched = TrainSchedule {
            epochs: preset_default_epochs(*id),
            batch: 8,
            lr: 0.02,
            momentum: 0.9,
            seed: 100 + i as u64,
        };
        let net = build_preset(*id, 4, 10 + i as u64).expect("preset builds");
        let (trained, history) = train(net, &train_set, &sched).expect("training runs");
        println!(
            "{:<8} {:>2} epochs, loss {:.3} -> {:.3}",
            id.name(),
            sched.epochs,
            history.first().unwrap(),
            history.last().unwrap()
        );
        train_features.push(extract_scores(&trained, &train_set).expect("train scores"));
        test_features.push(extract_scores(&trained, &test_set).expect("test scores"));
    }

    let train_labels = train_set.labels();
    let weights = search_weights(&train_features, &train_labels, 0.5).expect("search runs");
    println!("\nfusion weights (grid step 0.5): {:?}", weights.as_slice());

    let (model, _) = train_fusion(
        &train_features,
        &train_labels,
        &weights,
        &default_fusion_schedule(),
    )
    .expect("fusion head trains");

    println!(
        "\n{:<10} {:>6} {:>6} {:>6}",
        "network", "top-1", "top-2", "top-3"
    );
    for (id, scores) in presets.iter().zip(&test_features) {
        let records = records_from(scores, &test_set);
        let accs: Vec<f64> = [1, 2, 3]
            .iter()
            .map(|&k| topk_accuracy(&records, k).unwrap())
            .collect();
        println!(
            "{:<10} {:>6.2} {:>6.2} {:>6.2}",
            id.name(),
            accs[0],
            accs[1],
            accs[2]
        );
    }
    let fused = fused_records(&model, &test_features, &test_set);
    let accs: Vec<f64> = [1, 2, 3]
        .iter()
        .map(|&k| topk_accuracy(&fused, k).unwrap())
        .collect();
    println!(
        "{:<10} {:>6.2} {:>6.2} {:>6.2}",
        "ensemble", accs[0], accs[1], accs[2]
    );
}
