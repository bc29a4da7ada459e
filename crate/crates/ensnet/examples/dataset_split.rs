//! Write a synthetic dataset to disk as PPM files, load it back by class
//! directory, and carve a deterministic train/test split.
//!
//! ```text
//! cargo run --example dataset_split
//! ```

use ensnet::image::{generate_synthetic, load_dataset, make_split, write_ppm, SplitManifest};

fn main() {
    let root = std::env::temp_dir().join("ensnet-example-dataset");
    std::fs::remove_dir_all(&root).ok();

    let set = generate_synthetic(5, 10, 32, 11).expect("synthetic data generates");
    for class in &set.classes {
        std::fs::create_dir_all(root.join(class)).expect("class dir creates");
    }
    for item in &set.items {
        write_ppm(root.join(&item.name), &item.image).expect("ppm writes");
    }
    println!("wrote {} images under {}", set.len(), root.display());

    let loaded = load_dataset(&root).expect("dataset loads");
    println!(
        "loaded {} items across {} classes",
        loaded.len(),
        loaded.class_count()
    );

    // 8 train / 2 test per class, the 80/20 protocol at desk scale
    let split = make_split(&loaded, 8, 7).expect("split succeeds");
    println!(
        "split: {} train / {} test",
        split.train.len(),
        split.test.len()
    );

    let manifest_path = root.join("split.tsv");
    split
        .write(&loaded, &manifest_path)
        .expect("manifest writes");
    let back = SplitManifest::read(&manifest_path, &loaded).expect("manifest reads");
    assert_eq!(back, split);
    println!("manifest round trip ok: {}", manifest_path.display());

    for line in std::fs::read_to_string(&manifest_path)
        .unwrap()
        .lines()
        .take(4)
    {
        println!("  {line}");
    }
    println!("  ...");
    std::fs::remove_dir_all(&root).ok();
}
