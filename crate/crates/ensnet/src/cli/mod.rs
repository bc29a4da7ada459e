//! Command-line orchestration over the library.
//!
//! Exit codes: 0 success, 1 usage or description errors, 2 data errors
//! (missing files, malformed payloads, shape failures).

mod config;

pub use config::{apply_schedule_json, load_schedule};

use crate::arch::{count_params, expand, infer_shapes, parse_arch, ArchError, ArchSpec};
use crate::checkpoint::{read_checkpoint, write_checkpoint};
use crate::eval::{
    rank_curve, read_cache, topk_accuracy, write_cache, FeatureCache, PredictionRecord,
    REFERENCE_FOOD101, REFERENCE_INDIAN_FOOD,
};
use crate::fusion::{
    default_fusion_schedule, default_search_schedule, fusion_top1, search_weights_with,
    train_fusion, FusionModel, FusionWeights,
};
use crate::image::{
    equalize_intensity, generate_synthetic, jitter, load_dataset, make_split, read_ppm, resize,
    write_ppm, LabeledSet, SplitManifest,
};
use crate::jsonfmt::{fmt_f64, quote};
use crate::net::{
    build_preset, extract_scores, preset_default_epochs, train, Network, PresetId, ScoreMatrix,
    TrainSchedule,
};
use std::collections::HashMap;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

const USAGE: &str = "usage: ensnet <command> [flags]

commands:
  parse           parse a network description and print its canonical form
  shapes          expand a description and print the per-layer shape trace
  params          print per-layer parameter counts
  prep            preprocess one ppm image (equalize, resize, jitter)
  synth           generate a synthetic labeled dataset as ppm files
  split           write a train/test split manifest for a dataset directory
  train           train a preset network on a dataset
  extract         run a trained network over a dataset and cache its scores
  search-weights  grid-search fusion weights over cached scores
  fuse-train      train the fusion head on cached scores
  eval            report top-k accuracy and rank curves from caches

run `ensnet <command> --help` for the flags of one command.";

struct Fail {
    code: i32,
    message: String,
}

impl Fail {
    fn usage(message: impl Into<String>) -> Self {
        Fail {
            code: 1,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Fail {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            // the consumer went away (e.g. piped into head); not an error
            Fail {
                code: 0,
                message: String::new(),
            }
        } else {
            Fail::data(e.to_string())
        }
    }
}

impl From<ArchError> for Fail {
    fn from(e: ArchError) -> Self {
        match e {
            ArchError::Shape(_) => Fail::data(e.to_string()),
            _ => Fail::usage(e.to_string()),
        }
    }
}

macro_rules! data_errors {
    ($($ty:ty),*) => {
        $(impl From<$ty> for Fail {
            fn from(e: $ty) -> Self {
                Fail::data(e.to_string())
            }
        })*
    };
}

data_errors!(
    crate::image::ImageError,
    crate::eval::EvalError,
    crate::net::NetError,
    crate::fusion::FusionError,
    crate::checkpoint::CheckpointError
);

struct Flags {
    values: HashMap<String, String>,
    switches: Vec<String>,
}

impl Flags {
    fn parse(args: &[String], switch_names: &[&str]) -> Result<Flags, Fail> {
        let mut values = HashMap::new();
        let mut switches = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let name = arg
                .strip_prefix("--")
                .ok_or_else(|| Fail::usage(format!("unexpected argument {arg}")))?;
            if switch_names.contains(&name) {
                switches.push(name.to_string());
                i += 1;
            } else if let Some((k, v)) = name.split_once('=') {
                values.insert(k.to_string(), v.to_string());
                i += 1;
            } else {
                let value = args
                    .get(i + 1)
                    .ok_or_else(|| Fail::usage(format!("flag --{name} needs a value")))?;
                values.insert(name.to_string(), value.clone());
                i += 2;
            }
        }
        Ok(Flags { values, switches })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(|s| s.as_str())
    }

    fn require(&self, name: &str) -> Result<&str, Fail> {
        self.get(name)
            .ok_or_else(|| Fail::usage(format!("missing required flag --{name}")))
    }

    fn get_parse<T: FromStr>(&self, name: &str, default: T) -> Result<T, Fail> {
        match self.get(name) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Fail::usage(format!("bad value for --{name}: {s}"))),
        }
    }

    fn has(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }
}

/// Runs one command line (without the program name) and returns the exit
/// code: 0 success, 1 usage error, 2 data error.
pub fn dispatch<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let args: Vec<String> = args.into_iter().collect();
    let Some((command, rest)) = args.split_first() else {
        eprintln!("{USAGE}");
        return 1;
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if command == "--help" || command == "help" {
        let _ = writeln!(out, "{USAGE}");
        return 0;
    }
    if rest.first().map(|s| s.as_str()) == Some("--help") {
        let _ = writeln!(out, "{}", command_help(command));
        return 0;
    }
    let result = match command.as_str() {
        "parse" => cmd_parse(rest, &mut out),
        "shapes" => cmd_shapes(rest, &mut out),
        "params" => cmd_params(rest, &mut out),
        "prep" => cmd_prep(rest, &mut out),
        "synth" => cmd_synth(rest, &mut out),
        "split" => cmd_split(rest, &mut out),
        "train" => cmd_train(rest, &mut out),
        "extract" => cmd_extract(rest, &mut out),
        "search-weights" => cmd_search_weights(rest, &mut out),
        "fuse-train" => cmd_fuse_train(rest, &mut out),
        "eval" => cmd_eval(rest, &mut out),
        other => {
            eprintln!("unknown command: {other}\n\n{USAGE}");
            return 1;
        }
    };
    match result {
        Ok(()) => 0,
        Err(fail) if fail.message.is_empty() => fail.code,
        Err(fail) => {
            eprintln!("ensnet {command}: {}", fail.message);
            fail.code
        }
    }
}

fn command_help(command: &str) -> String {
    match command {
        "parse" => "ensnet parse (--spec TEXT | --file PATH) [--json]".into(),
        "shapes" => "ensnet shapes (--preset NAME | --spec TEXT | --file PATH) [--classes N] [--json]".into(),
        "params" => "ensnet params (--preset NAME | --spec TEXT | --file PATH) [--classes N] [--json]".into(),
        "prep" => "ensnet prep --in IMG.ppm --out IMG.ppm [--equalize] [--resize WxH] [--jitter SEED]".into(),
        "synth" => "ensnet synth --out DIR [--classes N] [--per-class N] [--size N] [--seed S]".into(),
        "split" => "ensnet split --root DIR --per-class-train N [--seed S] --out FILE".into(),
        "train" => "ensnet train --preset NAME --root DIR [--manifest FILE] [--classes N] [--out FILE]\n             [--epochs N] [--batch N] [--lr F] [--momentum F] [--seed S] [--config FILE] [--json]".into(),
        "extract" => "ensnet extract --preset NAME --net FILE --root DIR --out FILE\n               [--manifest FILE --subset train|test] [--classes N] [--id NAME]".into(),
        "search-weights" => "ensnet search-weights --caches A,B,C --step F [--config FILE] [--json]".into(),
        "fuse-train" => "ensnet fuse-train --caches A,B,C --weights W1,W2,.. [--out FILE] [--config FILE] [--json]".into(),
        "eval" => "ensnet eval (--cache FILE | --caches A,B,C --fusion FILE) [--topk K1,K2,..]\n            [--rank R] [--curve FILE.csv] [--reference food101|indian] [--json]".into(),
        _ => USAGE.into(),
    }
}

fn spec_from_flags(flags: &Flags) -> Result<ArchSpec, Fail> {
    if let Some(preset_name) = flags.get("preset") {
        let id = PresetId::from_str(preset_name).map_err(Fail::usage)?;
        return Ok(crate::net::preset(id)?);
    }
    let text = if let Some(t) = flags.get("spec") {
        t.to_string()
    } else if let Some(path) = flags.get("file") {
        std::fs::read_to_string(path).map_err(|e| Fail::data(format!("{path}: {e}")))?
    } else {
        return Err(Fail::usage("need one of --preset, --spec, or --file"));
    };
    Ok(parse_arch(text.trim())?)
}

fn cmd_parse(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &["json"])?;
    let spec = spec_from_flags(&flags)?;
    if flags.has("json") {
        writeln!(
            out,
            "{{\"input\":{{\"w\":{},\"h\":{},\"c\":{}}},\"elements\":{},\"canonical\":{}}}",
            spec.input.width,
            spec.input.height,
            spec.input.channels,
            spec.elements.len(),
            quote(&spec.to_text())
        )?;
    } else {
        writeln!(out, "{}", spec.to_text())?;
    }
    Ok(())
}

fn expanded_graph(
    flags: &Flags,
) -> Result<(crate::arch::LayerGraph, crate::arch::ShapeTrace), Fail> {
    let spec = spec_from_flags(flags)?;
    let classes: usize = flags.get_parse("classes", 101)?;
    let mut graph = expand(&spec, classes)?;
    let trace = infer_shapes(&mut graph)?;
    Ok((graph, trace))
}

fn cmd_shapes(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &["json"])?;
    let (graph, trace) = expanded_graph(&flags)?;
    if flags.has("json") {
        writeln!(out, "{}", trace.to_json())?;
    } else {
        for (label, shape) in &trace.entries {
            writeln!(out, "{label:<24} {shape}")?;
        }
        writeln!(out, "weighted layers: {}", graph.weighted_layer_count())?;
        writeln!(out, "features: {}", trace.feature_len)?;
    }
    Ok(())
}

fn cmd_params(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &["json"])?;
    let (graph, _) = expanded_graph(&flags)?;
    let report = count_params(&graph)?;
    if flags.has("json") {
        writeln!(out, "{}", report.to_json())?;
    } else {
        for (label, count) in &report.entries {
            if *count > 0 {
                writeln!(out, "{label:<24} {count}")?;
            }
        }
        writeln!(out, "total: {}", report.total)?;
    }
    Ok(())
}

fn cmd_prep(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &["equalize"])?;
    let input = read_ppm(flags.require("in")?)?;
    let mut img = input;
    if flags.has("equalize") {
        img = equalize_intensity(&img);
    }
    if let Some(dims) = flags.get("resize") {
        let (w, h) = dims
            .split_once('x')
            .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
            .ok_or_else(|| Fail::usage(format!("bad --resize value {dims}, expected WxH")))?;
        if w == 0 || h == 0 {
            return Err(Fail::usage("resize target must be at least 1x1"));
        }
        img = resize(&img, w, h);
    }
    if let Some(seed) = flags.get("jitter") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| Fail::usage(format!("bad --jitter seed {seed}")))?;
        img = jitter(&img, seed);
    }
    write_ppm(flags.require("out")?, &img)?;
    writeln!(out, "{}x{} written", img.width(), img.height())?;
    Ok(())
}

fn cmd_synth(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &[])?;
    let out_path = flags.require("out")?;
    let classes: usize = flags.get_parse("classes", 4)?;
    let per_class: usize = flags.get_parse("per-class", 16)?;
    let size: usize = flags.get_parse("size", 32)?;
    let seed: u64 = flags.get_parse("seed", 1)?;
    let set = generate_synthetic(classes, per_class, size, seed)?;
    let root = Path::new(out_path);
    for class in &set.classes {
        std::fs::create_dir_all(root.join(class))
            .map_err(|e| Fail::data(format!("{out_path}: {e}")))?;
    }
    for item in &set.items {
        write_ppm(root.join(&item.name), &item.image)?;
    }
    writeln!(
        out,
        "{} images in {} classes under {}",
        set.len(),
        classes,
        out_path
    )?;
    Ok(())
}

fn cmd_split(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &[])?;
    let root = flags.require("root")?;
    let per_class: usize = flags
        .require("per-class-train")?
        .parse()
        .map_err(|_| Fail::usage("bad --per-class-train value"))?;
    let seed: u64 = flags.get_parse("seed", 1)?;
    let out_path = flags.require("out")?;
    let set = load_dataset(root)?;
    let split = make_split(&set, per_class, seed)?;
    split.write(&set, out_path)?;
    writeln!(
        out,
        "train {} / test {} -> {}",
        split.train.len(),
        split.test.len(),
        out_path
    )?;
    Ok(())
}

fn dataset_subset(flags: &Flags, set: &LabeledSet) -> Result<LabeledSet, Fail> {
    match flags.get("manifest") {
        None => Ok(set.clone()),
        Some(path) => {
            let manifest = SplitManifest::read(path, set)?;
            let subset_name = flags.get("subset").unwrap_or("train");
            let indices = match subset_name {
                "train" => &manifest.train,
                "test" => &manifest.test,
                other => return Err(Fail::usage(format!("bad --subset {other}"))),
            };
            Ok(set.subset(indices))
        }
    }
}

fn schedule_from_flags(flags: &Flags, base: TrainSchedule) -> Result<TrainSchedule, Fail> {
    let mut sched = match flags.get("config") {
        Some(path) => load_schedule(path, base).map_err(Fail::data)?,
        None => base,
    };
    sched.epochs = flags.get_parse("epochs", sched.epochs)?;
    sched.batch = flags.get_parse("batch", sched.batch)?;
    sched.lr = flags.get_parse("lr", sched.lr)?;
    sched.momentum = flags.get_parse("momentum", sched.momentum)?;
    sched.seed = flags.get_parse("seed", sched.seed)?;
    Ok(sched)
}

fn cmd_train(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &["json"])?;
    let id = PresetId::from_str(flags.require("preset")?).map_err(Fail::usage)?;
    let set = load_dataset(flags.require("root")?)?;
    let data = dataset_subset(&flags, &set)?;
    let classes: usize = flags.get_parse("classes", set.class_count())?;
    let base = TrainSchedule {
        epochs: preset_default_epochs(id),
        ..TrainSchedule::default()
    };
    let sched = schedule_from_flags(&flags, base)?;
    let net = build_preset(id, classes, sched.seed)?;
    let (trained, history) = train(net, &data, &sched)?;
    if let Some(path) = flags.get("out") {
        write_checkpoint(path, &trained.to_records(), None)?;
    }
    if flags.has("json") {
        let losses: Vec<String> = history.iter().map(|l| fmt_f64(*l)).collect();
        writeln!(
            out,
            "{{\"preset\":{},\"epochs\":{},\"loss\":[{}]}}",
            quote(id.name()),
            sched.epochs,
            losses.join(",")
        )?;
    } else {
        for (epoch, loss) in history.iter().enumerate() {
            writeln!(out, "epoch {:>3}  loss {:.6}", epoch + 1, loss)?;
        }
    }
    Ok(())
}

fn load_network(flags: &Flags, id: PresetId, classes: usize) -> Result<Network, Fail> {
    let mut net = build_preset(id, classes, 0)?;
    if let Some(path) = flags.get("net") {
        let (records, _) = read_checkpoint(path)?;
        net.load_records(&records)?;
    }
    Ok(net)
}

fn cmd_extract(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &[])?;
    let id = PresetId::from_str(flags.require("preset")?).map_err(Fail::usage)?;
    let set = load_dataset(flags.require("root")?)?;
    let data = dataset_subset(&flags, &set)?;
    let classes: usize = flags.get_parse("classes", set.class_count())?;
    let net = load_network(&flags, id, classes)?;
    let scores = extract_scores(&net, &data)?;
    let network_id = flags.get("id").unwrap_or(id.name()).to_string();
    let cache = FeatureCache::new(network_id, scores.classes, data.labels(), scores.rows)?;
    let out_path = flags.require("out")?;
    write_cache(out_path, &cache)?;
    writeln!(
        out,
        "{} rows x {} classes -> {}",
        cache.len(),
        cache.classes,
        out_path
    )?;
    Ok(())
}

fn read_caches(flags: &Flags) -> Result<(Vec<ScoreMatrix>, Vec<u32>), Fail> {
    let list = flags.require("caches")?;
    let mut features = Vec::new();
    let mut labels: Option<Vec<u32>> = None;
    for path in list.split(',') {
        let cache = read_cache(path)?;
        match &labels {
            None => labels = Some(cache.labels.clone()),
            Some(l) => {
                if *l != cache.labels {
                    return Err(Fail::data(format!("cache {path} has different labels")));
                }
            }
        }
        features.push(ScoreMatrix {
            classes: cache.classes,
            rows: cache.rows,
        });
    }
    let labels = labels.ok_or_else(|| Fail::usage("need at least one cache"))?;
    Ok((features, labels))
}

fn cmd_search_weights(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &["json"])?;
    let (features, labels) = read_caches(&flags)?;
    let step: f64 = flags.get_parse("step", 0.1)?;
    let sched = schedule_from_flags(&flags, default_search_schedule())?;
    let weights = search_weights_with(&features, &labels, step, &sched)?;
    let rendered: Vec<String> = weights.as_slice().iter().map(|w| fmt_f64(*w)).collect();
    if flags.has("json") {
        writeln!(out, "{{\"weights\":[{}]}}", rendered.join(","))?;
    } else {
        writeln!(out, "weights: {}", rendered.join(","))?;
    }
    Ok(())
}

fn parse_weights(text: &str) -> Result<FusionWeights, Fail> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse()).collect();
    let values = values.map_err(|_| Fail::usage(format!("bad --weights value {text}")))?;
    Ok(FusionWeights::new(values)?)
}

fn cmd_fuse_train(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &["json"])?;
    let (features, labels) = read_caches(&flags)?;
    let weights = parse_weights(flags.require("weights")?)?;
    let sched = schedule_from_flags(&flags, default_fusion_schedule())?;
    let (model, history) = train_fusion(&features, &labels, &weights, &sched)?;
    let top1 = fusion_top1(&model, &features, &labels)?;
    if let Some(path) = flags.get("out") {
        model.save(path)?;
    }
    if flags.has("json") {
        writeln!(
            out,
            "{{\"epochs\":{},\"final_loss\":{},\"train_top1\":{}}}",
            sched.epochs,
            fmt_f64(*history.last().unwrap()),
            fmt_f64(top1)
        )?;
    } else {
        writeln!(
            out,
            "trained {} epochs, final loss {:.6}, top-1 on the training features {:.2}",
            sched.epochs,
            history.last().unwrap(),
            top1
        )?;
    }
    Ok(())
}

fn parse_topk(flags: &Flags) -> Result<Vec<usize>, Fail> {
    let text = flags.get("topk").unwrap_or("1,5,10");
    text.split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Fail::usage(format!("bad --topk value {text}")))
}

fn reference_table(name: &str) -> Result<String, Fail> {
    let rows: &[(&str, [f64; 3])] = match name {
        "food101" => &REFERENCE_FOOD101,
        "indian" => &REFERENCE_INDIAN_FOOD,
        other => return Err(Fail::usage(format!("unknown reference table {other}"))),
    };
    let mut out = format!("published accuracies ({name}):\n");
    out.push_str("network     top-1   top-5  top-10\n");
    for (net, [a, b, c]) in rows {
        out.push_str(&format!("{net:<10} {a:>6.2} {b:>7.2} {c:>7.2}\n"));
    }
    Ok(out)
}

fn cmd_eval(args: &[String], out: &mut dyn Write) -> Result<(), Fail> {
    let flags = Flags::parse(args, &["json"])?;
    let records: Vec<PredictionRecord> = if let Some(path) = flags.get("cache") {
        read_cache(path)?.to_records()
    } else if flags.get("caches").is_some() {
        let (features, labels) = read_caches(&flags)?;
        let fusion_path = flags.require("fusion")?;
        let model = FusionModel::load(fusion_path)?;
        let mut records = Vec::with_capacity(labels.len());
        for (row, &label) in labels.iter().enumerate() {
            let scores = model.score_item(&features, row)?;
            records.push(PredictionRecord {
                item: format!("fused#{row}"),
                label,
                scores,
            });
        }
        records
    } else {
        return Err(Fail::usage(
            "need --cache FILE or --caches A,B,C --fusion FILE",
        ));
    };
    let ks = parse_topk(&flags)?;
    let mut pairs = Vec::with_capacity(ks.len());
    for &k in &ks {
        pairs.push((k, topk_accuracy(&records, k)?));
    }
    let max_rank: Option<usize> = match flags.get("rank") {
        Some(s) => Some(
            s.parse()
                .map_err(|_| Fail::usage(format!("bad --rank value {s}")))?,
        ),
        None => None,
    };
    let report = match max_rank {
        Some(r) => Some(rank_curve(&records, r)?),
        None => None,
    };
    if let (Some(path), Some(report)) = (flags.get("curve"), &report) {
        std::fs::write(path, report.to_csv()).map_err(|e| Fail::data(format!("{path}: {e}")))?;
    } else if flags.get("curve").is_some() {
        return Err(Fail::usage("--curve needs --rank R"));
    }
    if flags.has("json") {
        writeln!(
            out,
            "{}",
            crate::eval::metrics_json(&pairs, report.as_ref(), records.len())
        )?;
    } else {
        for (k, acc) in &pairs {
            writeln!(out, "top-{k}: {acc:.2}")?;
        }
        if let Some(report) = &report {
            write!(out, "{}", report.to_table())?;
        }
        if let Some(name) = flags.get("reference") {
            write!(out, "{}", reference_table(name)?)?;
        }
    }
    Ok(())
}
