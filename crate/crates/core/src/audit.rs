//! Domain-gap auditing from pre-trained-model prediction records.
//!
//! A record is scored correct when any of its three highest-ranked labels is
//! accepted for the record's coarse class. Confidences of correct records
//! feed a 20-bin histogram plus summary statistics, and two histograms
//! (real, synthetic) are compared by [`domain_gap`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::manifest::Source;

/// Ranks inspected by [`top3_correct`].
pub const TOP_K: usize = 3;
pub const BIN_COUNT: usize = 20;
pub const BIN_WIDTH: f64 = 0.05;
pub const PREDICTION_HEADER: [&str; 6] = ["image_id", "true_class", "source", "rank", "label", "confidence"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub image_id: String,
    pub true_class: String,
    pub source: Source,
    /// Highest confidence first.
    pub topk: Vec<Prediction>,
}

impl PredictionRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.topk.len() < TOP_K {
            return Err(format!(
                "image {} has {} ranks, at least {TOP_K} required",
                self.image_id,
                self.topk.len()
            ));
        }
        let mut seen = BTreeSet::new();
        for (i, p) in self.topk.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.confidence) {
                return Err(format!("confidence {} outside [0, 1]", p.confidence));
            }
            if i > 0 && p.confidence > self.topk[i - 1].confidence {
                return Err(format!("confidence increases at rank {}", i + 1));
            }
            if !seen.insert(p.label.as_str()) {
                return Err(format!("label {:?} repeated for image {}", p.label, self.image_id));
            }
        }
        Ok(())
    }
}

/// Coarse class name to the set of fine-grained labels accepted for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ClassMap(BTreeMap<String, BTreeSet<String>>);

impl ClassMap {
    pub fn new(map: BTreeMap<String, BTreeSet<String>>) -> Result<Self> {
        if let Some((name, _)) = map.iter().find(|(_, labels)| labels.is_empty()) {
            return Err(Error::Config(format!("class {name:?} has no accepted labels")));
        }
        if map.is_empty() {
            return Err(Error::Config("class map is empty".into()));
        }
        Ok(Self(map))
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let raw: UniqueKeys = serde_json::from_str(text).map_err(|e| Error::Schema {
            path: origin.to_string(),
            line: e.line() as u64,
            msg: e.to_string(),
        })?;
        Self::new(raw.0)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn accepted(&self, class: &str) -> Result<&BTreeSet<String>> {
        self.0
            .get(class)
            .ok_or_else(|| Error::Config(format!("true class {class:?} is not in the class map")))
    }
}

/// A JSON object whose keys must be distinct.
struct UniqueKeys(BTreeMap<String, BTreeSet<String>>);

impl<'de> Deserialize<'de> for UniqueKeys {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = UniqueKeys;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping class names to label lists")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<UniqueKeys, A::Error> {
                let mut map = BTreeMap::new();
                while let Some((k, v)) = access.next_entry::<String, BTreeSet<String>>()? {
                    if map.contains_key(&k) {
                        return Err(serde::de::Error::custom(format!("class {k:?} listed twice")));
                    }
                    map.insert(k, v);
                }
                Ok(UniqueKeys(map))
            }
        }
        d.deserialize_map(V)
    }
}

/// Parses long-form prediction CSV: one row per rank, ranks `1..k`
/// contiguous per image. Errors cite the 1-based file line.
pub fn parse_predictions(input: impl Read, origin: &str) -> Result<Vec<PredictionRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let schema = |line: u64, msg: String| Error::Schema {
        path: origin.to_string(),
        line,
        msg,
    };
    let header = reader.headers().map_err(|e| schema(1, e.to_string()))?.clone();
    if header.iter().ne(PREDICTION_HEADER) {
        return Err(schema(1, format!("header must be {}", PREDICTION_HEADER.join(","))));
    }

    let mut records: Vec<PredictionRecord> = Vec::new();
    let mut start_line = 0;
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();
    let finish = |rec: &PredictionRecord, line: u64| rec.validate().map_err(|m| schema(line, m));

    for row in reader.records() {
        let row = row.map_err(|e| schema(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let rank: usize = row[3]
            .parse()
            .map_err(|_| schema(line, format!("rank {:?} is not a positive integer", &row[3])))?;
        let confidence: f64 = row[5]
            .parse()
            .map_err(|_| schema(line, format!("confidence {:?} is not a number", &row[5])))?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(schema(line, format!("confidence {confidence} outside [0, 1]")));
        }
        let source: Source = row[2].parse().map_err(|e: Error| schema(line, e.to_string()))?;
        let prediction = Prediction {
            label: row[4].to_string(),
            confidence,
        };

        match records.last_mut() {
            Some(rec) if rec.image_id == row[0] => {
                if rank != rec.topk.len() + 1 {
                    return Err(schema(
                        line,
                        format!("expected rank {}, found {rank}", rec.topk.len() + 1),
                    ));
                }
                if rec.true_class != row[1] || rec.source != source {
                    return Err(schema(
                        line,
                        format!("true_class/source change within image {}", rec.image_id),
                    ));
                }
                rec.topk.push(prediction);
                rec.validate_prefix().map_err(|m| schema(line, m))?;
            }
            last => {
                if let Some(rec) = last {
                    finish(rec, start_line)?;
                }
                if rank != 1 {
                    return Err(schema(
                        line,
                        format!("image {} must start at rank 1, found {rank}", &row[0]),
                    ));
                }
                if !seen_ids.insert(row[0].to_string()) {
                    return Err(schema(line, format!("rows for image {} are not contiguous", &row[0])));
                }
                start_line = line;
                records.push(PredictionRecord {
                    image_id: row[0].to_string(),
                    true_class: row[1].to_string(),
                    source,
                    topk: vec![prediction],
                });
            }
        }
    }
    if let Some(rec) = records.last() {
        finish(rec, start_line)?;
    }
    Ok(records)
}

impl PredictionRecord {
    /// Ordering and distinctness checks that hold for any prefix of ranks.
    fn validate_prefix(&self) -> std::result::Result<(), String> {
        let n = self.topk.len();
        let (prev, last) = (&self.topk[n - 2], &self.topk[n - 1]);
        if last.confidence > prev.confidence {
            return Err(format!("confidence increases at rank {n}"));
        }
        if self.topk[..n - 1].iter().any(|p| p.label == last.label) {
            return Err(format!("label {:?} repeated for image {}", last.label, self.image_id));
        }
        Ok(())
    }
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(std::io::BufReader::new(file), &path.display().to_string())
}

/// Whether an accepted label sits in the first three ranks, and the
/// confidence of the highest-ranked such label.
pub fn top3_correct(record: &PredictionRecord, classmap: &ClassMap) -> Result<(bool, Option<f64>)> {
    let accepted = classmap.accepted(&record.true_class)?;
    Ok(record
        .topk
        .iter()
        .take(TOP_K)
        .find(|p| accepted.contains(&p.label))
        .map_or((false, None), |p| (true, Some(p.confidence))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramStats {
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub skewness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub bin_width: f64,
    /// Bin `i` covers `[i·w, (i+1)·w)`; the last bin is closed at 1.
    pub counts: Vec<u64>,
    pub n_correct: u64,
    pub n_total: u64,
    pub stats: HistogramStats,
    /// Matched confidences of the correct records, ascending.
    pub matched: Vec<f64>,
}

impl HistogramReport {
    pub fn correct_rate(&self) -> f64 {
        if self.n_total == 0 {
            0.0
        } else {
            self.n_correct as f64 / self.n_total as f64
        }
    }
}

pub fn bin_index(confidence: f64) -> usize {
    ((confidence * BIN_COUNT as f64).floor() as usize).min(BIN_COUNT - 1)
}

/// Bins the matched confidences of top-3-correct records. Incorrect records
/// count toward `n_total` only.
pub fn confidence_histogram(records: &[PredictionRecord], classmap: &ClassMap) -> Result<HistogramReport> {
    if records.is_empty() {
        return Err(Error::Audit("no prediction records to histogram".into()));
    }
    let mut matched = Vec::new();
    for rec in records {
        if let (true, Some(c)) = top3_correct(rec, classmap)? {
            matched.push(c);
        }
    }
    matched.sort_by(f64::total_cmp);
    let mut counts = vec![0u64; BIN_COUNT];
    for &c in &matched {
        counts[bin_index(c)] += 1;
    }
    let mut report = HistogramReport {
        bin_width: BIN_WIDTH,
        counts,
        n_correct: matched.len() as u64,
        n_total: records.len() as u64,
        stats: HistogramStats {
            mean: None,
            median: None,
            q1: None,
            q3: None,
            skewness: None,
        },
        matched,
    };
    report.stats = histogram_stats(&report);
    Ok(report)
}

/// Linear-interpolation quantile of ascending data (`h = (n − 1)·p`).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Statistics of the raw matched confidences. Skewness is the Fisher-Pearson
/// `g1 = m3 / m2^1.5`, absent below three values or with zero spread.
pub fn histogram_stats(hist: &HistogramReport) -> HistogramStats {
    let x = &hist.matched;
    if x.is_empty() {
        return HistogramStats {
            mean: None,
            median: None,
            q1: None,
            q3: None,
            skewness: None,
        };
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    HistogramStats {
        mean: Some(mean),
        median: Some(quantile(x, 0.5)),
        q1: Some(quantile(x, 0.25)),
        q3: Some(quantile(x, 0.75)),
        skewness: (x.len() >= 3 && x[0] < x[x.len() - 1]).then(|| m3 / m2.powf(1.5)),
    }
}

/// Real minus synthetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub real_correct_rate: f64,
    pub synthetic_correct_rate: f64,
    pub delta_correct_rate: f64,
    pub delta_mean: Option<f64>,
    pub delta_skewness: Option<f64>,
    pub delta_q1: Option<f64>,
    pub delta_q3: Option<f64>,
    /// Largest gap between the normalized cumulative bin counts; absent
    /// when either side has no correct records.
    pub ks_distance: Option<f64>,
}

pub fn domain_gap(real: &HistogramReport, syn: &HistogramReport) -> Result<GapReport> {
    if real.bin_width != syn.bin_width || real.counts.len() != syn.counts.len() {
        return Err(Error::Audit(format!(
            "bin layouts differ: {} x {} vs {} x {}",
            real.counts.len(),
            real.bin_width,
            syn.counts.len(),
            syn.bin_width
        )));
    }
    let delta = |a: Option<f64>, b: Option<f64>| Some(a? - b?);
    let (r, s) = (&real.stats, &syn.stats);
    let ks_distance = (real.n_correct > 0 && syn.n_correct > 0).then(|| {
        let (mut cr, mut cs, mut worst) = (0u64, 0u64, 0.0f64);
        for (a, b) in real.counts.iter().zip(&syn.counts) {
            cr += a;
            cs += b;
            worst = worst.max((cr as f64 / real.n_correct as f64 - cs as f64 / syn.n_correct as f64).abs());
        }
        worst
    });
    Ok(GapReport {
        real_correct_rate: real.correct_rate(),
        synthetic_correct_rate: syn.correct_rate(),
        delta_correct_rate: real.correct_rate() - syn.correct_rate(),
        delta_mean: delta(r.mean, s.mean),
        delta_skewness: delta(r.skewness, s.skewness),
        delta_q1: delta(r.q1, s.q1),
        delta_q3: delta(r.q3, s.q3),
        ks_distance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidentHit {
    pub image_id: String,
    pub label: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassTally {
    /// Rank-1 labels of top-3-incorrect records, most frequent first.
    pub misclassified: Vec<(String, u64)>,
    /// The most confident records whose rank-1 label is accepted.
    pub most_confident_correct: Vec<ConfidentHit>,
}

/// Per true class: what incorrect records were mistaken for, and the
/// `top_n` most confident rank-1 correct predictions.
pub fn confusion_tally(
    records: &[PredictionRecord],
    classmap: &ClassMap,
    top_n: usize,
) -> Result<BTreeMap<String, ClassTally>> {
    let mut wrong: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    let mut hits: BTreeMap<&str, Vec<ConfidentHit>> = BTreeMap::new();
    for rec in records {
        let (correct, _) = top3_correct(rec, classmap)?;
        let first = &rec.topk[0];
        if !correct {
            *wrong
                .entry(&rec.true_class)
                .or_default()
                .entry(&first.label)
                .or_default() += 1;
        } else if classmap.accepted(&rec.true_class)?.contains(&first.label) {
            hits.entry(&rec.true_class).or_default().push(ConfidentHit {
                image_id: rec.image_id.clone(),
                label: first.label.clone(),
                confidence: first.confidence,
            });
        }
    }
    let classes: BTreeSet<&str> = records.iter().map(|r| r.true_class.as_str()).collect();
    Ok(classes
        .into_iter()
        .map(|class| {
            let mut misclassified: Vec<(String, u64)> = wrong
                .remove(class)
                .unwrap_or_default()
                .into_iter()
                .map(|(l, n)| (l.to_string(), n))
                .collect();
            misclassified.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let mut best = hits.remove(class).unwrap_or_default();
            best.sort_by(|a, b| {
                b.confidence
                    .total_cmp(&a.confidence)
                    .then_with(|| a.image_id.cmp(&b.image_id))
            });
            best.truncate(top_n);
            (
                class.to_string(),
                ClassTally {
                    misclassified,
                    most_confident_correct: best,
                },
            )
        })
        .collect())
}

/// Ids of top-3-correct records with matched confidence at least
/// `threshold`, sorted.
pub fn filter_by_confidence(records: &[PredictionRecord], classmap: &ClassMap, threshold: f64) -> Result<Vec<String>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("threshold {threshold} outside [0, 1]")));
    }
    let mut keep = Vec::new();
    for rec in records {
        if let (true, Some(c)) = top3_correct(rec, classmap)? {
            if c >= threshold {
                keep.push(rec.image_id.clone());
            }
        }
    }
    keep.sort();
    keep.dedup();
    Ok(keep)
}

/// CSV table of bin edges and one count column per named report.
pub fn bins_csv(reports: &[(&str, &HistogramReport)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["bin_lo".to_string(), "bin_hi".to_string()];
    header.extend(reports.iter().map(|(name, _)| name.to_string()));
    let bins = reports.first().map_or(BIN_COUNT, |(_, r)| r.counts.len());
    let csv_err = |e: csv::Error| Error::Audit(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..bins {
        let width = reports.first().map_or(BIN_WIDTH, |(_, r)| r.bin_width);
        let mut row = vec![
            format!("{:.2}", i as f64 * width),
            format!("{:.2}", (i + 1) as f64 * width),
        ];
        row.extend(reports.iter().map(|(_, r)| r.counts[i].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Audit(e.to_string()))?).map_err(|e| Error::Audit(e.to_string()))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn pets() -> ClassMap {
        ClassMap::from_json(
            r#"{"cat": ["persian cat", "tabby cat", "tiger cat"], "dog": ["terrier", "beagle"]}"#,
            "pets",
        )
        .unwrap()
    }

    pub fn record(id: &str, class: &str, source: Source, labels: &[(&str, f64)]) -> PredictionRecord {
        PredictionRecord {
            image_id: id.into(),
            true_class: class.into(),
            source,
            topk: labels
                .iter()
                .map(|&(l, c)| Prediction {
                    label: l.into(),
                    confidence: c,
                })
                .collect(),
        }
    }

    /// `n` cat records of which the first `correct` match at `confidence`.
    pub fn rate_fixture(prefix: &str, n: usize, correct: usize, confidence: f64) -> Vec<PredictionRecord> {
        (0..n)
            .map(|i| {
                let top = if i < correct { "tabby cat" } else { "towel" };
                record(
                    &format!("{prefix}{i:05}"),
                    "cat",
                    Source::Real,
                    &[(top, confidence), ("rake", confidence / 2.0), ("grass", 0.0)],
                )
            })
            .collect()
    }
}
