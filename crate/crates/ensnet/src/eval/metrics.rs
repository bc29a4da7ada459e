//! Top-k accuracy and rank-vs-accuracy curves.
//!
//! The rank of the true class is its 1-based position when scores are
//! sorted descending with ties broken toward the smaller index, matching
//! the argmax decision rule.

use super::EvalError;
use crate::jsonfmt::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub item: String,
    pub label: u32,
    pub scores: Vec<f64>,
}

impl PredictionRecord {
    pub fn new(item: String, label: u32, scores: Vec<f64>) -> Result<Self, EvalError> {
        if scores.is_empty() {
            return Err(EvalError::Empty(format!("record {item} has no scores")));
        }
        if label as usize >= scores.len() {
            return Err(EvalError::BadRank(format!(
                "record {item}: label {label} out of range for {} classes",
                scores.len()
            )));
        }
        let sum: f64 = scores.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EvalError::BadRank(format!(
                "record {item}: scores sum to {sum}, expected 1"
            )));
        }
        Ok(PredictionRecord {
            item,
            label,
            scores,
        })
    }
}

/// 1-based rank of the true label: one plus the number of classes scoring
/// strictly higher, plus earlier-indexed classes scoring equal.
pub fn rank_of(record: &PredictionRecord) -> usize {
    let l = record.label as usize;
    let target = record.scores[l];
    let mut rank = 1;
    for (i, &s) in record.scores.iter().enumerate() {
        if s > target || (s == target && i < l) {
            rank += 1;
        }
    }
    rank
}

/// Percentage of records whose true label ranks within the top k.
pub fn topk_accuracy(records: &[PredictionRecord], k: usize) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty("no prediction records".into()));
    }
    let e = records[0].scores.len();
    if k == 0 || k > e {
        return Err(EvalError::BadRank(format!("k={k} outside 1..={e}")));
    }
    let hits = records.iter().filter(|r| rank_of(r) <= k).count();
    Ok(100.0 * hits as f64 / records.len() as f64)
}

/// Accuracy at every rank 1..=max_rank, plus per-class top-1 and the sample
/// count. The curve is monotone non-decreasing and hits 100 at rank e.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_rank: Vec<f64>,
    pub per_class_top1: Vec<(u32, f64)>,
    pub samples: usize,
}

pub fn rank_curve(records: &[PredictionRecord], max_rank: usize) -> Result<EvalReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty("no prediction records".into()));
    }
    let e = records[0].scores.len();
    if max_rank == 0 || max_rank > e {
        return Err(EvalError::BadRank(format!(
            "max rank {max_rank} outside 1..={e}"
        )));
    }
    let n = records.len();
    let mut hits_at = vec![0usize; max_rank + 1];
    let mut class_hits: Vec<(usize, usize)> = vec![(0, 0); e]; // (top-1 hits, total)
    for r in records {
        let rank = rank_of(r);
        if rank <= max_rank {
            hits_at[rank] += 1;
        }
        let c = &mut class_hits[r.label as usize];
        c.1 += 1;
        if rank == 1 {
            c.0 += 1;
        }
    }
    let mut per_rank = Vec::with_capacity(max_rank);
    let mut cumulative = 0usize;
    for rank in 1..=max_rank {
        cumulative += hits_at[rank];
        per_rank.push(100.0 * cumulative as f64 / n as f64);
    }
    let per_class_top1 = class_hits
        .iter()
        .enumerate()
        .filter(|(_, (_, total))| *total > 0)
        .map(|(class, &(hits, total))| (class as u32, 100.0 * hits as f64 / total as f64))
        .collect();
    Ok(EvalReport {
        per_rank,
        per_class_top1,
        samples: n,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\"ranks\":[");
        for (i, acc) in self.per_rank.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"rank\":{},\"accuracy\":{}}}",
                i + 1,
                fmt_f64(*acc)
            ));
        }
        out.push_str("],\"per_class\":[");
        for (i, (class, acc)) in self.per_class_top1.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"class\":{},\"accuracy\":{}}}",
                class,
                fmt_f64(*acc)
            ));
        }
        out.push_str(&format!("],\"samples\":{}}}", self.samples));
        out
    }

    /// `rank,accuracy` rows for external plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,accuracy\n");
        for (i, acc) in self.per_rank.iter().enumerate() {
            out.push_str(&format!("{},{:.2}\n", i + 1, acc));
        }
        out
    }

    /// Aligned text table, accuracies to two decimals.
    pub fn to_table(&self) -> String {
        let mut out = String::from("rank  accuracy\n");
        for (i, acc) in self.per_rank.iter().enumerate() {
            out.push_str(&format!("{:<5} {:>7.2}\n", i + 1, acc));
        }
        out
    }
}

/// Combined JSON for top-k figures and an optional rank curve, with a
/// stable key order (topk, ranks, per_class, samples).
pub fn metrics_json(pairs: &[(usize, f64)], report: Option<&EvalReport>, samples: usize) -> String {
    let mut out = String::from("{\"topk\":[");
    for (i, (k, acc)) in pairs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("{{\"k\":{},\"accuracy\":{}}}", k, fmt_f64(*acc)));
    }
    out.push(']');
    if let Some(report) = report {
        out.push_str(",\"ranks\":[");
        for (i, acc) in report.per_rank.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"rank\":{},\"accuracy\":{}}}",
                i + 1,
                fmt_f64(*acc)
            ));
        }
        out.push_str("],\"per_class\":[");
        for (i, (class, acc)) in report.per_class_top1.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"class\":{},\"accuracy\":{}}}",
                class,
                fmt_f64(*acc)
            ));
        }
        out.push(']');
    }
    out.push_str(&format!(",\"samples\":{}}}", samples));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn rec(label: u32, scores: &[f64]) -> PredictionRecord {
        PredictionRecord {
            item: String::new(),
            label,
            scores: scores.to_vec(),
        }
    }

    #[test]
    fn perfect_predictions_hit_every_k() {
        let records: Vec<_> = (0..4u32)
            .map(|l| {
                let mut s = vec![0.0; 4];
                s[l as usize] = 1.0;
                rec(l, &s)
            })
            .collect();
        for k in 1..=4 {
            assert_eq!(topk_accuracy(&records, k).unwrap(), 100.0);
        }
    }

    #[test]
    fn half_right_at_top_two() {
        // four records, exactly two with the true label in the top 2
        let records = vec![
            rec(0, &[0.5, 0.3, 0.1, 0.1]), // rank 1
            rec(1, &[0.4, 0.3, 0.2, 0.1]), // rank 2
            rec(2, &[0.4, 0.3, 0.2, 0.1]), // rank 3
            rec(3, &[0.4, 0.3, 0.2, 0.1]), // rank 4
        ];
        assert_eq!(topk_accuracy(&records, 2).unwrap(), 50.0);
    }

    #[test]
    fn ties_resolve_to_the_smaller_index() {
        let r = rec(2, &[0.4, 0.4, 0.4, 0.0]);
        assert_eq!(rank_of(&r), 3);
        let r = rec(0, &[0.4, 0.4, 0.4, 0.0]);
        assert_eq!(rank_of(&r), 1);
    }

    #[test]
    fn k_out_of_range_errors() {
        let records = vec![rec(0, &[0.6, 0.4])];
        assert!(topk_accuracy(&records, 0).is_err());
        assert!(topk_accuracy(&records, 3).is_err());
        assert!(topk_accuracy(&[], 1).is_err());
    }

    #[test]
    fn single_record_curve_is_a_step() {
        let r = rec(3, &[0.4, 0.3, 0.2, 0.1]); // true label ranked 4th...
        let report = rank_curve(&[rec(2, &[0.4, 0.3, 0.2, 0.1])], 4).unwrap();
        assert_eq!(report.per_rank, vec![0.0, 0.0, 100.0, 100.0]);
        drop(r);
    }

    #[test]
    fn curve_reaches_100_at_full_rank() {
        let mut rng = Rng::new(5);
        let records: Vec<_> = (0..20)
            .map(|i| {
                let raw: Vec<f64> = (0..5).map(|_| rng.uniform(0.0, 1.0)).collect();
                let s: f64 = raw.iter().sum();
                rec(
                    (i % 5) as u32,
                    &raw.iter().map(|&v| v / s).collect::<Vec<_>>(),
                )
            })
            .collect();
        let report = rank_curve(&records, 5).unwrap();
        assert_eq!(*report.per_rank.last().unwrap(), 100.0);
        for w in report.per_rank.windows(2) {
            assert!(w[1] >= w[0], "curve decreased: {:?}", report.per_rank);
        }
        // the label is always within all e ranks
        assert_eq!(topk_accuracy(&records, 5).unwrap(), 100.0);
    }

    // Independent oracle: recount by sorting each record's scores.
    fn brute_force_curve(records: &[PredictionRecord], max_rank: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for r in 1..=max_rank {
            let mut hits = 0;
            for rec in records {
                let mut order: Vec<usize> = (0..rec.scores.len()).collect();
                order.sort_by(|&a, &b| {
                    rec.scores[b]
                        .partial_cmp(&rec.scores[a])
                        .unwrap()
                        .then(a.cmp(&b))
                });
                if order[..r].contains(&(rec.label as usize)) {
                    hits += 1;
                }
            }
            out.push(100.0 * hits as f64 / records.len() as f64);
        }
        out
    }

    #[test]
    fn curve_matches_brute_force_recount() {
        let mut rng = Rng::new(77);
        let records: Vec<_> = (0..20)
            .map(|i| {
                let raw: Vec<f64> = (0..5).map(|_| rng.uniform(0.0, 1.0)).collect();
                let s: f64 = raw.iter().sum();
                rec(
                    (i % 5) as u32,
                    &raw.iter().map(|&v| v / s).collect::<Vec<_>>(),
                )
            })
            .collect();
        let report = rank_curve(&records, 5).unwrap();
        assert_eq!(report.per_rank, brute_force_curve(&records, 5));
        assert_eq!(report.samples, 20);
    }

    #[test]
    fn report_json_is_byte_stable() {
        let records = vec![rec(0, &[0.7, 0.2, 0.1]), rec(1, &[0.1, 0.8, 0.1])];
        let a = rank_curve(&records, 3).unwrap().to_json();
        let b = rank_curve(&records, 3).unwrap().to_json();
        assert_eq!(a, b);
        assert!(a.starts_with("{\"ranks\":[{\"rank\":1,\"accuracy\":100}"));
    }

    #[test]
    fn csv_has_two_decimal_accuracies() {
        let records = vec![rec(0, &[0.7, 0.2, 0.1]), rec(2, &[0.5, 0.3, 0.2])];
        let csv = rank_curve(&records, 3).unwrap().to_csv();
        assert_eq!(csv, "rank,accuracy\n1,50.00\n2,50.00\n3,100.00\n");
    }
}
