//! Deterministic orderings and subsets of a pool.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::manifest::{Manifest, SampleRecord};
use crate::rng::SeedKey;

/// Row indices of `rows` in an order whose every prefix keeps each label's
/// share of the pool to within half a row, so every contiguous segment is
/// within one row of proportional.
///
/// Rows are sorted by id, shuffled per label with a seeded stream, then
/// interleaved by always taking the label that is furthest behind its share.
pub fn stratified_order(rows: &[SampleRecord], seed: u64) -> Vec<usize> {
    let mut by_label: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    let mut sorted: Vec<usize> = (0..rows.len()).collect();
    sorted.sort_by(|&a, &b| rows[a].id.cmp(&rows[b].id));
    for i in sorted {
        by_label.entry(rows[i].label).or_default().push(i);
    }
    for (label, idx) in by_label.iter_mut() {
        SeedKey::new(seed)
            .tag("stratified")
            .u64(*label as u64)
            .stream()
            .shuffle(idx);
    }
    let total = rows.len() as i128;
    let groups: Vec<Vec<usize>> = by_label.into_values().collect();
    let mut taken = vec![0usize; groups.len()];
    let mut order = Vec::with_capacity(rows.len());
    for n in 1..=rows.len() as i128 {
        // Deficit scaled by the pool size: n·size − taken·total.
        let pick = (0..groups.len())
            .filter(|&g| taken[g] < groups[g].len())
            .max_by(|&a, &b| {
                let da = n * groups[a].len() as i128 - taken[a] as i128 * total;
                let db = n * groups[b].len() as i128 - taken[b] as i128 * total;
                da.cmp(&db).then(b.cmp(&a))
            })
            .expect("rows remain");
        order.push(groups[pick][taken[pick]]);
        taken[pick] += 1;
    }
    order
}

/// Seeded permutation of row indices, independent of input row order.
pub(crate) fn seeded_order(rows: &[&SampleRecord], seed: u64, tag: &str) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.sort_by(|&a, &b| rows[a].id.cmp(&rows[b].id));
    SeedKey::new(seed).tag(tag).stream().shuffle(&mut idx);
    idx
}

fn stratum_key(row: &SampleRecord, keys: &[String]) -> Result<Vec<String>> {
    keys.iter()
        .map(|k| {
            row.meta_str(k)
                .ok_or_else(|| Error::Config(format!("row {} has no meta key {k:?}", row.id)))
        })
        .collect()
}

/// Selects `n` rows so that every stratum (distinct combination of the
/// `strata_keys` meta values) gets its largest-remainder share of `n`,
/// within one row of `n · size / pool`. Ties in remainder go to the
/// lexicographically smaller stratum. Output keeps pool order.
pub fn proportional_sample(pool: &Manifest, strata_keys: &[String], n: usize, seed: u64) -> Result<Manifest> {
    if strata_keys.is_empty() {
        return Err(Error::Config("at least one stratum key is required".into()));
    }
    if n > pool.len() {
        return Err(Error::Config(format!(
            "cannot sample {n} rows from a pool of {}",
            pool.len()
        )));
    }
    let mut strata: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for (i, row) in pool.rows.iter().enumerate() {
        strata.entry(stratum_key(row, strata_keys)?).or_default().push(i);
    }
    let total = pool.len() as u128;
    let mut quota: Vec<(usize, u128)> = strata
        .values()
        .map(|rows| {
            let exact = n as u128 * rows.len() as u128;
            ((exact / total.max(1)) as usize, exact % total.max(1))
        })
        .collect();
    let assigned: usize = quota.iter().map(|q| q.0).sum();
    let mut by_remainder: Vec<usize> = (0..quota.len()).collect();
    // Stable sort keeps stratum-key order among equal remainders.
    by_remainder.sort_by(|&a, &b| quota[b].1.cmp(&quota[a].1));
    for &s in by_remainder.iter().take(n - assigned) {
        quota[s].0 += 1;
    }
    let mut keep = vec![false; pool.len()];
    for ((key, members), (count, _)) in strata.iter().zip(&quota) {
        let rows: Vec<&SampleRecord> = members.iter().map(|&i| &pool.rows[i]).collect();
        let tag = format!("proportional/{}", key.join("\u{1f}"));
        for &j in seeded_order(&rows, seed, &tag).iter().take(*count) {
            keep[members[j]] = true;
        }
    }
    Manifest::new(
        pool.rows
            .iter()
            .zip(keep)
            .filter_map(|(r, k)| k.then(|| r.clone()))
            .collect(),
    )
}

/// How [`subsample_pool`] thins a pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Subsample {
    /// Keep a uniformly chosen `round(f · len)` rows.
    Fraction(f64),
    /// Keep rows whose `location_index` is a multiple of `k`. Rows without
    /// a location index are kept.
    Stride(u64),
}

pub fn subsample_pool(pool: &Manifest, how: Subsample, seed: u64) -> Result<Manifest> {
    let rows = match how {
        Subsample::Stride(k) => {
            if k == 0 {
                return Err(Error::Config("stride must be at least 1".into()));
            }
            pool.rows
                .iter()
                .filter(|r| r.meta_u64("location_index").is_none_or(|l| l % k == 0))
                .cloned()
                .collect()
        }
        Subsample::Fraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("keep fraction must be in (0, 1], got {f}")));
            }
            let n = (f * pool.len() as f64).round() as usize;
            let refs: Vec<&SampleRecord> = pool.rows.iter().collect();
            let mut keep = vec![false; pool.len()];
            for &i in seeded_order(&refs, seed, "subsample").iter().take(n) {
                keep[i] = true;
            }
            pool.rows
                .iter()
                .zip(keep)
                .filter_map(|(r, k)| k.then(|| r.clone()))
                .collect()
        }
    };
    Manifest::new(rows)
}
