//! Train/val/test mix planning over a real and a synthetic pool.
//!
//! Validation and test rows always come from the real pool; synthetic rows
//! only ever enter the training split. All selection is a pure function of
//! the pools' ids and the seed.

mod rebalance;
mod sampling;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentPolicy;
use crate::error::{Error, Result};
use crate::manifest::{write_atomic, Manifest, SampleRecord, Source, Split};
use crate::rng::SeedKey;

pub use rebalance::rebalance;
pub use sampling::{proportional_sample, stratified_order, subsample_pool, Subsample};

/// One training/val/test slot. Oversampled copies get their own `id` and
/// point back at the pool row through `origin_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub id: String,
    pub origin_id: String,
    pub source: Source,
    pub label: u8,
    pub weight: f64,
}

impl PlanEntry {
    fn of(row: &SampleRecord) -> Self {
        PlanEntry {
            id: row.id.clone(),
            origin_id: row.id.clone(),
            source: row.source,
            label: row.label,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Cost,
    Undersample,
    Oversample,
    SyntheticPad,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            Error::Config(format!(
                "unknown strategy {s:?}; expected cost, undersample, oversample or synthetic_pad"
            ))
        })
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Cost => "cost",
            Strategy::Undersample => "undersample",
            Strategy::Oversample => "oversample",
            Strategy::SyntheticPad => "synthetic_pad",
        })
    }
}

/// Defect:good target, written `"7:3"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TargetRatio {
    pub defect: u64,
    pub good: u64,
}

impl TargetRatio {
    pub const WELD_DEFAULT: TargetRatio = TargetRatio { defect: 7, good: 3 };
}

impl FromStr for TargetRatio {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "target ratio must look like 7:3 with positive integers, got {s:?}"
            ))
        };
        let (d, g) = s.split_once(':').ok_or_else(bad)?;
        let defect: u64 = d.trim().parse().map_err(|_| bad())?;
        let good: u64 = g.trim().parse().map_err(|_| bad())?;
        if defect == 0 || good == 0 {
            return Err(bad());
        }
        Ok(TargetRatio { defect, good })
    }
}

impl TryFrom<String> for TargetRatio {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TargetRatio> for String {
    fn from(r: TargetRatio) -> String {
        r.to_string()
    }
}

impl fmt::Display for TargetRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.defect, self.good)
    }
}

/// Requested split sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRequest {
    pub real_train: usize,
    pub syn_train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixPlan {
    pub seed: u64,
    pub request: SplitRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_ratio: Option<TargetRatio>,
    /// Passed through to the trainer; only the training split is augmented.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augment: Option<AugmentPolicy>,
    pub train: Vec<PlanEntry>,
    pub val: Vec<PlanEntry>,
    pub test: Vec<PlanEntry>,
}

/// Row counts indexed by `[source][label]`, source 0 = real.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SourceClassCounts(pub [[usize; 2]; 2]);

impl SourceClassCounts {
    fn of(entries: &[PlanEntry]) -> Self {
        let mut c = [[0; 2]; 2];
        for e in entries {
            c[usize::from(e.source == Source::Synthetic)][usize::from(e.label)] += 1;
        }
        SourceClassCounts(c)
    }

    pub fn real(&self) -> usize {
        self.0[0].iter().sum()
    }

    pub fn synthetic(&self) -> usize {
        self.0[1].iter().sum()
    }

    pub fn label(&self, label: u8) -> usize {
        self.0[0][label as usize] + self.0[1][label as usize]
    }

    pub fn total(&self) -> usize {
        self.real() + self.synthetic()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitCounts {
    pub train: SourceClassCounts,
    pub val: SourceClassCounts,
    pub test: SourceClassCounts,
}

/// The two pools a plan draws from.
#[derive(Debug, Clone, Copy)]
pub struct Pools<'a> {
    pub real: &'a Manifest,
    pub synthetic: &'a Manifest,
}

impl Pools<'_> {
    fn check_sources(&self) -> Result<()> {
        for (pool, want) in [(self.real, Source::Real), (self.synthetic, Source::Synthetic)] {
            if let Some(r) = pool.rows.iter().find(|r| r.source != want) {
                return Err(Error::Config(format!("{want} pool contains {} row {}", r.source, r.id)));
            }
        }
        Ok(())
    }

    fn lookup(&self, source: Source, id: &str) -> Option<&SampleRecord> {
        match source {
            Source::Real => self.real.get(id),
            Source::Synthetic => self.synthetic.get(id),
        }
    }
}

impl MixPlan {
    /// A plan whose training split is the whole of `pool`, for rebalancing
    /// a pool on its own.
    pub fn whole_pool(pool: &Manifest, seed: u64) -> Self {
        let train: Vec<PlanEntry> = pool.rows.iter().map(PlanEntry::of).collect();
        let counts = SourceClassCounts::of(&train);
        MixPlan {
            seed,
            request: SplitRequest {
                real_train: counts.real(),
                syn_train: counts.synthetic(),
                val: 0,
                test: 0,
            },
            strategy: None,
            target_ratio: None,
            augment: None,
            train,
            val: Vec::new(),
            test: Vec::new(),
        }
    }

    pub fn counts(&self) -> SplitCounts {
        SplitCounts {
            train: SourceClassCounts::of(&self.train),
            val: SourceClassCounts::of(&self.val),
            test: SourceClassCounts::of(&self.test),
        }
    }

    /// Split hygiene: unique ids across splits, no synthetic rows outside
    /// training, positive weights.
    pub fn check_hygiene(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (name, split) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for e in split {
                if !seen.insert(e.id.as_str()) {
                    return Err(Error::Contract(format!("id {} appears twice in the plan", e.id)));
                }
                if name != "train" && e.source == Source::Synthetic {
                    return Err(Error::Contract(format!("synthetic row {} in {name}", e.id)));
                }
                if !(e.weight > 0.0 && e.weight.is_finite()) {
                    return Err(Error::Contract(format!("row {} has weight {}", e.id, e.weight)));
                }
            }
        }
        // Held-out rows must not reappear in training under another copy.
        let held: std::collections::HashSet<&str> = self
            .val
            .iter()
            .chain(&self.test)
            .map(|e| e.origin_id.as_str())
            .collect();
        if let Some(e) = self.train.iter().find(|e| held.contains(e.origin_id.as_str())) {
            return Err(Error::Contract(format!(
                "row {} is both held out and in train",
                e.origin_id
            )));
        }
        Ok(())
    }
}

/// Draws disjoint train/val/test splits. Real rows are taken in one
/// stratified order (test first, then val, then real training rows) and
/// synthetic training rows are a prefix of the synthetic pool's own
/// stratified order, so every split mirrors its pool's class mix to within
/// one row and larger requests extend smaller ones.
pub fn plan_splits(pools: Pools<'_>, request: SplitRequest, seed: u64) -> Result<MixPlan> {
    pools.check_sources()?;
    let mut available = pools.real.len();
    let mut deficits = Vec::new();
    for (name, want) in [
        ("test", request.test),
        ("val", request.val),
        ("real_train", request.real_train),
    ] {
        let got = want.min(available);
        available -= got;
        if got < want {
            deficits.push(format!("{name} short by {} (wants {want})", want - got));
        }
    }
    if request.syn_train > pools.synthetic.len() {
        deficits.push(format!(
            "syn_train short by {} (wants {})",
            request.syn_train - pools.synthetic.len(),
            request.syn_train
        ));
    }
    if !deficits.is_empty() {
        return Err(Error::Planning(format!(
            "insufficient pool (real {}, synthetic {}): {}",
            pools.real.len(),
            pools.synthetic.len(),
            deficits.join("; ")
        )));
    }

    let key = SeedKey::new(seed).tag("plan");
    let real_order = stratified_order(&pools.real.rows, key.tag("real").finish());
    let syn_order = stratified_order(&pools.synthetic.rows, key.tag("synthetic").finish());
    let take = |order: &[usize], rows: &[SampleRecord], from: usize, n: usize| -> Vec<PlanEntry> {
        order[from..from + n].iter().map(|&i| PlanEntry::of(&rows[i])).collect()
    };
    let test = take(&real_order, &pools.real.rows, 0, request.test);
    let val = take(&real_order, &pools.real.rows, request.test, request.val);
    let mut train = take(
        &real_order,
        &pools.real.rows,
        request.test + request.val,
        request.real_train,
    );
    train.extend(take(&syn_order, &pools.synthetic.rows, 0, request.syn_train));
    let plan = MixPlan {
        seed,
        request,
        strategy: None,
        target_ratio: None,
        augment: None,
        train,
        val,
        test,
    };
    plan.check_hygiene()?;
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Real,
    Synthetic,
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(SweepAxis::Real),
            "synthetic" => Ok(SweepAxis::Synthetic),
            _ => Err(Error::Config(format!(
                "sweep axis must be real or synthetic, got {s:?}"
            ))),
        }
    }
}

/// One source held at `fixed_count` training rows while the other walks
/// through `steps`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub fixed_count: usize,
    pub steps: Vec<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_repeats() -> usize {
    3
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::Config("sweep needs at least one step".into()));
        }
        if self.steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "sweep steps must be strictly increasing: {:?}",
                self.steps
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("sweep repeats must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub step: usize,
    pub repeat: usize,
    pub plan: MixPlan,
}

/// One plan per (repeat, step). Within a repeat every plan shares its
/// seed, so held-out rows and the fixed source are identical across steps
/// and each step's variable rows extend the previous step's.
pub fn sweep_plans(config: &SweepConfig, base: SplitRequest, pools: Pools<'_>, seed: u64) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let mut points = Vec::with_capacity(config.steps.len() * config.repeats);
    for repeat in 0..config.repeats {
        let repeat_seed = SeedKey::new(seed).tag("sweep-repeat").u64(repeat as u64).finish();
        for &step in &config.steps {
            let request = match config.axis {
                SweepAxis::Real => SplitRequest {
                    real_train: step,
                    syn_train: config.fixed_count,
                    ..base
                },
                SweepAxis::Synthetic => SplitRequest {
                    real_train: config.fixed_count,
                    syn_train: step,
                    ..base
                },
            };
            let plan = plan_splits(pools, request, repeat_seed)
                .map_err(|e| Error::Planning(format!("sweep step {step} (repeat {repeat}): {e}")))?;
            points.push(SweepPoint { step, repeat, plan });
        }
    }
    Ok(points)
}

pub const TRAIN_FILE: &str = "train.jsonl";
pub const VAL_FILE: &str = "val.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const PLAN_FILE: &str = "plan.json";

/// Materialized split manifests.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitManifests {
    pub train: Manifest,
    pub val: Manifest,
    pub test: Manifest,
}

/// Builds the three split manifests for `plan`, rows sorted by id.
pub fn build_manifests(plan: &MixPlan, pools: Pools<'_>) -> Result<SplitManifests> {
    plan.check_hygiene()?;
    let build = |entries: &[PlanEntry], split: Split| -> Result<Manifest> {
        let mut rows = entries
            .iter()
            .map(|e| {
                let origin = pools.lookup(e.source, &e.origin_id).ok_or_else(|| {
                    Error::Contract(format!("plan row {} not found in the {} pool", e.origin_id, e.source))
                })?;
                let mut row = origin.clone();
                row.id = e.id.clone();
                row.split = split;
                row.weight = e.weight;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        Manifest::new(rows)
    };
    Ok(SplitManifests {
        train: build(&plan.train, Split::Train)?,
        val: build(&plan.val, Split::Val)?,
        test: build(&plan.test, Split::Test)?,
    })
}

/// Writes `train.jsonl`, `val.jsonl`, `test.jsonl` and `plan.json` into
/// `out_dir`.
pub fn materialize(plan: &MixPlan, pools: Pools<'_>, out_dir: &Path) -> Result<SplitManifests> {
    let manifests = build_manifests(plan, pools)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    manifests.train.write(&out_dir.join(TRAIN_FILE))?;
    manifests.val.write(&out_dir.join(VAL_FILE))?;
    manifests.test.write(&out_dir.join(TEST_FILE))?;
    let json = serde_json::to_string_pretty(plan).expect("plans serialize");
    write_atomic(&out_dir.join(PLAN_FILE), format!("{json}\n").as_bytes())?;
    Ok(manifests)
}

/// The mix config file: split sizes plus optional rebalancing and
/// augmentation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixConfig {
    pub real_train: usize,
    pub syn_train: usize,
    pub val: usize,
    pub test: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rebalance: Option<RebalanceConfig>,
    #[serde(default)]
    pub augment: Option<AugmentPolicy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RebalanceConfig {
    pub strategy: Strategy,
    #[serde(default = "weld_ratio")]
    pub target_ratio: TargetRatio,
}

fn weld_ratio() -> TargetRatio {
    TargetRatio::WELD_DEFAULT
}

impl MixConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: MixConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("mix config: {e}")))?;
        if let Some(a) = &config.augment {
            a.validate()?;
        }
        Ok(config)
    }

    pub fn request(&self) -> SplitRequest {
        SplitRequest {
            real_train: self.real_train,
            syn_train: self.syn_train,
            val: self.val,
            test: self.test,
        }
    }

    /// Plans, rebalances if configured, and attaches the augment policy.
    pub fn plan(&self, pools: Pools<'_>, seed_override: Option<u64>) -> Result<MixPlan> {
        let seed = seed_override.unwrap_or(self.seed);
        let mut plan = plan_splits(pools, self.request(), seed)?;
        if let Some(r) = self.rebalance {
            plan = rebalance(&plan, pools, r.strategy, r.target_ratio, seed)?;
        }
        plan.augment = self.augment;
        Ok(plan)
    }
}


#[cfg(test)]
mod tests {
    use super::test_pools::*;
    use super::*;
    use std::collections::HashSet;

    fn ids(entries: &[PlanEntry]) -> HashSet<&str> {
        entries.iter().map(|e| e.id.as_str()).collect()
    }

    #[test]
    fn weld_maxima_fit() {
        let (real, syn) = (real(1400, 600), synthetic(4896, 1632));
        let pools = Pools {
            real: &real,
            synthetic: &syn,
        };
        let req = SplitRequest {
            real_train: 1200,
            syn_train: 1200,
            val: 400,
            test: 400,
        };
        let plan = plan_splits(pools, req, 3).unwrap();
        let c = plan.counts();
        assert_eq!(
            (c.train.real(), c.train.synthetic(), c.val.total(), c.test.total()),
            (1200, 1200, 400, 400)
        );
        assert_eq!(c.val.synthetic() + c.test.synthetic(), 0);
        // Pool is 70% defect: each split within one row of that.
        for (n, got) in [
            (1200.0, c.train.0[0][0]),
            (400.0, c.val.0[0][0]),
            (400.0, c.test.0[0][0]),
        ] {
            assert!((got as f64 - 0.7 * n).abs() <= 1.0, "{got} of {n}");
        }
        assert!(ids(&plan.train).is_disjoint(&ids(&plan.val)));
        assert!(ids(&plan.val).is_disjoint(&ids(&plan.test)));
        assert_eq!(plan, plan_splits(pools, req, 3).unwrap());
    }

    #[test]
    fn shortfall_names_each_split() {
        let (real, syn) = (real(1400, 600), synthetic(10, 10));
        let pools = Pools {
            real: &real,
            synthetic: &syn,
        };
        let err = plan_splits(
            pools,
            SplitRequest {
                real_train: 3000,
                syn_train: 25,
                val: 0,
                test: 0,
            },
            0,
        )
        .unwrap_err();
        assert_eq!(err.kind(), "planning");
        let msg = err.to_string();
        assert!(msg.contains("real_train short by 1000"), "{msg}");
        assert!(msg.contains("syn_train short by 5"), "{msg}");
    }

    #[test]
    fn empty_synthetic_partition() {
        let (real, syn) = (real(70, 30), synthetic(10, 10));
        let plan = plan_splits(
            Pools {
                real: &real,
                synthetic: &syn,
            },
            SplitRequest {
                real_train: 50,
                syn_train: 0,
                val: 10,
                test: 10,
            },
            0,
        )
        .unwrap();
        assert_eq!(plan.counts().train.synthetic(), 0);
    }

    #[test]
    fn pools_must_hold_their_source() {
        let (real, syn) = (real(5, 5), synthetic(5, 5));
        assert!(plan_splits(
            Pools {
                real: &syn,
                synthetic: &real
            },
            SplitRequest::default(),
            0
        )
        .is_err());
    }

    #[test]
    fn sweep_is_nested_with_fixed_holdout() {
        let (real, syn) = (real(700, 300), synthetic(600, 200));
        let pools = Pools {
            real: &real,
            synthetic: &syn,
        };
        let config = SweepConfig {
            axis: SweepAxis::Synthetic,
            fixed_count: 100,
            steps: vec![0, 20, 40, 60, 80, 100],
            repeats: 3,
        };
        let base = SplitRequest {
            val: 50,
            test: 50,
            ..Default::default()
        };
        let points = sweep_plans(&config, base, pools, 8).unwrap();
        assert_eq!(points.len(), 18);
        for repeat in points.chunks(6) {
            for w in repeat.windows(2) {
                let (a, b) = (&w[0].plan, &w[1].plan);
                assert_eq!(a.val, b.val);
                assert_eq!(a.test, b.test);
                let syn = |p: &MixPlan| -> HashSet<String> {
                    p.train
                        .iter()
                        .filter(|e| e.source == Source::Synthetic)
                        .map(|e| e.id.clone())
                        .collect()
                };
                let real = |p: &MixPlan| -> Vec<String> {
                    p.train
                        .iter()
                        .filter(|e| e.source == Source::Real)
                        .map(|e| e.id.clone())
                        .collect()
                };
                assert!(syn(a).is_subset(&syn(b)));
                assert_eq!(real(a), real(b));
                assert_eq!(b.counts().train.synthetic(), w[1].step);
            }
        }
        assert_ne!(points[0].plan.test, points[6].plan.test);

        let single = SweepConfig {
            steps: vec![0],
            repeats: 1,
            ..config.clone()
        };
        assert_eq!(sweep_plans(&single, base, pools, 8).unwrap().len(), 1);
        let bad = SweepConfig {
            steps: vec![0, 20, 20],
            ..config.clone()
        };
        assert!(sweep_plans(&bad, base, pools, 8).is_err());
        let too_many = SweepConfig {
            steps: vec![0, 900],
            ..config
        };
        let err = sweep_plans(&too_many, base, pools, 8).unwrap_err();
        assert!(err.to_string().contains("step 900"), "{err}");
    }

    #[test]
    fn materialize_writes_sorted_splits() {
        let (real, syn) = (real(70, 30), synthetic(40, 40));
        let pools = Pools {
            real: &real,
            synthetic: &syn,
        };
        let plan = plan_splits(
            pools,
            SplitRequest {
                real_train: 40,
                syn_train: 30,
                val: 15,
                test: 15,
            },
            2,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = materialize(&plan, pools, dir.path()).unwrap();
        assert_eq!((out.train.len(), out.val.len(), out.test.len()), (70, 15, 15));
        assert!(out.train.rows.windows(2).all(|w| w[0].id < w[1].id));
        assert!(out
            .val
            .rows
            .iter()
            .chain(&out.test.rows)
            .all(|r| r.source == Source::Real));
        assert!(out.train.rows.iter().all(|r| r.split == Split::Train));
        let first = fs::read(dir.path().join(TRAIN_FILE)).unwrap();
        let again = tempfile::tempdir().unwrap();
        materialize(&plan, pools, again.path()).unwrap();
        assert_eq!(first, fs::read(again.path().join(TRAIN_FILE)).unwrap());
        assert_eq!(
            fs::read(dir.path().join(PLAN_FILE)).unwrap(),
            fs::read(again.path().join(PLAN_FILE)).unwrap()
        );
        let back: MixPlan = serde_json::from_slice(&fs::read(dir.path().join(PLAN_FILE)).unwrap()).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn hygiene_rejects_synthetic_holdout() {
        let (real, syn) = (real(10, 10), synthetic(10, 10));
        let mut plan = plan_splits(
            Pools {
                real: &real,
                synthetic: &syn,
            },
            SplitRequest {
                real_train: 5,
                syn_train: 5,
                val: 5,
                test: 5,
            },
            0,
        )
        .unwrap();
        let moved = plan.train.pop().unwrap();
        plan.val.push(moved);
        assert_eq!(plan.check_hygiene().unwrap_err().kind(), "contract");
    }

    #[test]
    fn ratio_and_config_parsing() {
        assert_eq!("7:3".parse::<TargetRatio>().unwrap(), TargetRatio::WELD_DEFAULT);
        assert!("7:0".parse::<TargetRatio>().is_err());
        assert!("seven".parse::<TargetRatio>().is_err());
        assert_eq!("synthetic_pad".parse::<Strategy>().unwrap(), Strategy::SyntheticPad);
        let c = MixConfig::from_json(
            r#"{"real_train":1200,"syn_train":1200,"val":400,"test":400,"rebalance":{"strategy":"cost"}}"#,
        )
        .unwrap();
        assert_eq!(c.rebalance.unwrap().target_ratio, TargetRatio::WELD_DEFAULT);
        assert!(MixConfig::from_json(r#"{"real_train":1,"syn_train":1,"val":1,"test":1,"extra":1}"#).is_err());
    }
}
