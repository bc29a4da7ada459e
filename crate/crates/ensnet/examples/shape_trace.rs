//! Expand the preset architectures, trace every feature shape, and count
//! parameters.
//!
//! ```text
//! cargo run --example shape_trace
//! ```

use ensnet::arch::{count_params, expand, infer_shapes};
use ensnet::net::{preset, PresetId};

fn main() {
    for id in PresetId::ALL {
        let spec = preset(id).expect("preset parses");
        let mut graph = expand(&spec, 101).expect("expansion succeeds");
        let trace = infer_shapes(&mut graph).expect("shapes infer");
        let report = count_params(&graph).expect("parameters count");
        let (last_label, last_shape) = trace.last();
        println!(
            "{:<10} {:>4} nodes  {:>3} weighted layers  {:>12} params  sink {last_label} = {last_shape}",
            id.name(),
            graph.len(),
            graph.weighted_layer_count(),
            report.total,
        );
    }

    // the full trace of the smallest preset, as the CLI would print it
    println!("\ntiny-a at 4 classes:");
    let spec = preset(PresetId::TinyA).unwrap();
    let mut graph = expand(&spec, 4).unwrap();
    let trace = infer_shapes(&mut graph).unwrap();
    let report = count_params(&graph).unwrap();
    for ((label, shape), (_, params)) in trace.entries.iter().zip(&report.entries) {
        println!("  {label:<12} {shape:<12} {params:>6} params");
    }
    println!("  total {} parameters", report.total);
}
