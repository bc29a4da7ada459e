//! Directory-based dataset loading and deterministic protocol splits.
//!
//! Layout on disk: `root/<class-name>/<image>.ppm`. Class labels are
//! assigned by sorted directory name. A split manifest is plain text:
//!
//! ```text
//! seed=42
//! train<TAB>relative/path.ppm<TAB>label
//! test<TAB>relative/path.ppm<TAB>label
//! ```

use super::ppm::read_ppm;
use super::{Image, ImageError};
use crate::rng::Rng;
use std::collections::HashMap;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct LabeledItem {
    /// Relative path (or synthetic name) identifying the item.
    pub name: String,
    pub image: Image,
    pub label: u32,
}

#[derive(Debug, Clone)]
pub struct LabeledSet {
    pub classes: Vec<String>,
    pub items: Vec<LabeledItem>,
}

impl LabeledSet {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.items.iter().map(|i| i.label).collect()
    }

    /// New set containing the given items (cloned), preserving classes.
    pub fn subset(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            classes: self.classes.clone(),
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
        }
    }
}

/// Loads `root/<class>/<image>.ppm` with labels by sorted class-dir name.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<LabeledSet, ImageError> {
    let root = root.as_ref();
    let mut class_dirs: Vec<String> = fs::read_dir(root)
        .map_err(|e| ImageError::Io(format!("{}: {e}", root.display())))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    class_dirs.sort();
    if class_dirs.len() < 2 {
        return Err(ImageError::Data(format!(
            "dataset needs at least 2 class directories, found {}",
            class_dirs.len()
        )));
    }
    let mut items = Vec::new();
    for (label, class) in class_dirs.iter().enumerate() {
        let dir = root.join(class);
        let mut files: Vec<String> = fs::read_dir(&dir)
            .map_err(|e| ImageError::Io(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".ppm"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(ImageError::Data(format!(
                "class directory {class} has no .ppm images"
            )));
        }
        for file in files {
            let image = read_ppm(dir.join(&file))?;
            items.push(LabeledItem {
                name: format!("{class}/{file}"),
                image,
                label: label as u32,
            });
        }
    }
    Ok(LabeledSet {
        classes: class_dirs,
        items,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitManifest {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Samples exactly `per_class_train` items per class uniformly at random;
/// the remainder is the test split. Index lists come back sorted.
pub fn make_split(
    set: &LabeledSet,
    per_class_train: usize,
    seed: u64,
) -> Result<SplitManifest, ImageError> {
    if per_class_train == 0 {
        return Err(ImageError::Data(
            "per-class train count of 0 gives an empty training set".into(),
        ));
    }
    let mut rng = Rng::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..set.class_count() {
        let mut indices: Vec<usize> = set
            .items
            .iter()
            .enumerate()
            .filter(|(_, it)| it.label as usize == class)
            .map(|(i, _)| i)
            .collect();
        if indices.len() < per_class_train {
            return Err(ImageError::Data(format!(
                "class {} has {} items, fewer than the {} requested for training",
                set.classes[class],
                indices.len(),
                per_class_train
            )));
        }
        rng.shuffle(&mut indices);
        train.extend_from_slice(&indices[..per_class_train]);
        test.extend_from_slice(&indices[per_class_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitManifest { seed, train, test })
}

impl SplitManifest {
    pub fn write(&self, set: &LabeledSet, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let mut out = format!("seed={}\n", self.seed);
        for &i in &self.train {
            out.push_str(&format!(
                "train\t{}\t{}\n",
                set.items[i].name, set.items[i].label
            ));
        }
        for &i in &self.test {
            out.push_str(&format!(
                "test\t{}\t{}\n",
                set.items[i].name, set.items[i].label
            ));
        }
        fs::write(path, out).map_err(|e| ImageError::Io(e.to_string()))
    }

    /// Reads a manifest and resolves names against `set`.
    pub fn read(path: impl AsRef<Path>, set: &LabeledSet) -> Result<SplitManifest, ImageError> {
        let text = fs::read_to_string(&path).map_err(|e| ImageError::Io(e.to_string()))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| ImageError::Format("empty manifest".into()))?;
        let seed = header
            .strip_prefix("seed=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Format(format!("bad manifest header: {header}")))?;
        let by_name: HashMap<&str, usize> = set
            .items
            .iter()
            .enumerate()
            .map(|(i, it)| (it.name.as_str(), i))
            .collect();
        let mut train = Vec::new();
        let mut test = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (tag, name, label) = match (parts.next(), parts.next(), parts.next()) {
                (Some(t), Some(n), Some(l)) => (t, n, l),
                _ => return Err(ImageError::Format(format!("bad manifest line: {line}"))),
            };
            let &idx = by_name
                .get(name)
                .ok_or_else(|| ImageError::Data(format!("manifest names unknown item {name}")))?;
            let label: u32 = label
                .parse()
                .map_err(|_| ImageError::Format(format!("bad label in line: {line}")))?;
            if set.items[idx].label != label {
                return Err(ImageError::Data(format!(
                    "manifest label {label} disagrees with dataset label {} for {name}",
                    set.items[idx].label
                )));
            }
            match tag {
                "train" => train.push(idx),
                "test" => test.push(idx),
                other => return Err(ImageError::Format(format!("unknown split tag {other}"))),
            }
        }
        Ok(SplitManifest { seed, train, test })
    }
}

#[cfg(test)]
mod tests {
    use super::super::synth::generate_synthetic;
    use super::*;

    #[test]
    fn split_counts_follow_the_protocol() {
        let set = generate_synthetic(5, 10, 4, 7).unwrap();
        let split = make_split(&set, 8, 1).unwrap();
        assert_eq!(split.train.len(), 40);
        assert_eq!(split.test.len(), 10);
    }

    #[test]
    fn split_partitions_the_dataset() {
        let set = generate_synthetic(3, 6, 4, 7).unwrap();
        let split = make_split(&set, 4, 2).unwrap();
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..set.len()).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_split() {
        let set = generate_synthetic(4, 8, 4, 7).unwrap();
        assert_eq!(
            make_split(&set, 6, 9).unwrap(),
            make_split(&set, 6, 9).unwrap()
        );
        assert_ne!(
            make_split(&set, 6, 9).unwrap(),
            make_split(&set, 6, 10).unwrap()
        );
    }

    #[test]
    fn zero_train_count_is_rejected() {
        let set = generate_synthetic(2, 4, 4, 7).unwrap();
        assert!(make_split(&set, 0, 1).is_err());
    }

    #[test]
    fn oversubscribed_class_is_rejected() {
        let set = generate_synthetic(2, 4, 4, 7).unwrap();
        assert!(make_split(&set, 5, 1).is_err());
    }

    #[test]
    fn loading_rejects_thin_or_empty_datasets() {
        let dir = std::env::temp_dir().join(format!("ensnet-loader-{}", std::process::id()));
        std::fs::remove_dir_all(&dir).ok();

        // a single class is not a classification dataset
        std::fs::create_dir_all(dir.join("only")).unwrap();
        super::super::write_ppm(dir.join("only/a.ppm"), &Image::new(2, 2)).unwrap();
        assert!(load_dataset(&dir).is_err());

        // a second class directory with no images
        std::fs::create_dir_all(dir.join("second")).unwrap();
        assert!(load_dataset(&dir).is_err());

        // give it one image and loading succeeds
        super::super::write_ppm(dir.join("second/b.ppm"), &Image::new(2, 2)).unwrap();
        let set = load_dataset(&dir).unwrap();
        assert_eq!(set.class_count(), 2);
        assert_eq!(set.items[0].name, "only/a.ppm");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn manifest_round_trip() {
        let dir = std::env::temp_dir().join(format!("ensnet-manifest-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let set = generate_synthetic(3, 5, 4, 7).unwrap();
        let split = make_split(&set, 3, 11).unwrap();
        let path = dir.join("split.tsv");
        split.write(&set, &path).unwrap();
        let back = SplitManifest::read(&path, &set).unwrap();
        assert_eq!(split, back);
        std::fs::remove_dir_all(&dir).ok();
    }
}
