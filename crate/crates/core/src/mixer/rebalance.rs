//! Class rebalancing of a plan's training split.

use std::collections::HashSet;

use super::sampling::seeded_order;
use super::{MixPlan, PlanEntry, Pools, Strategy, TargetRatio};
use crate::error::{Error, Result};
use crate::manifest::{SampleRecord, Source};
use crate::rng::SeedKey;

const DEFECT: u8 = 0;
const GOOD: u8 = 1;

/// `round(a · num / den)` in exact integer arithmetic, halves rounding up.
fn round_ratio(a: u64, num: u64, den: u64) -> u64 {
    ((2 * a as u128 * num as u128 + den as u128) / (2 * den as u128)) as u64
}

/// Which class is short of the target and how many rows it should have.
/// `None` when the split is already exactly at the target ratio.
fn shortfall(defect: u64, good: u64, target: TargetRatio) -> Option<(u8, u64)> {
    let (dg, gd) = (
        defect as u128 * target.good as u128,
        good as u128 * target.defect as u128,
    );
    if dg > gd {
        Some((GOOD, round_ratio(defect, target.good, target.defect)))
    } else if dg < gd {
        Some((DEFECT, round_ratio(good, target.defect, target.good)))
    } else {
        None
    }
}

fn label_name(label: u8) -> &'static str {
    if label == GOOD {
        "good"
    } else {
        "defect"
    }
}

/// Rebalances the training split toward `target` (defect:good). Validation
/// and test are never touched.
///
/// - `cost` keeps membership and sets per-class weights
///   `total · share / class_count`, so the weighted class mass matches the
///   target shares and the mean weight is 1.
/// - `undersample` drops a seeded subset of the surplus class.
/// - `oversample` repeats the short class; every row appears `q` or `q + 1`
///   times and copies are named `<id>#dup<k>`.
/// - `synthetic_pad` adds unused synthetic rows of the short class.
///
/// The resampling strategies land within half a row of the exact target.
pub fn rebalance(
    plan: &MixPlan,
    pools: Pools<'_>,
    strategy: Strategy,
    target: TargetRatio,
    seed: u64,
) -> Result<MixPlan> {
    if target.defect == 0 || target.good == 0 {
        return Err(Error::Config(format!("target ratio {target} must be positive")));
    }
    let key = SeedKey::new(seed).tag("rebalance");
    let count = |label: u8| plan.train.iter().filter(|e| e.label == label).count() as u64;
    let (defect, good) = (count(DEFECT), count(GOOD));
    let need = shortfall(defect, good, target);

    let train = match strategy {
        Strategy::Cost => {
            if defect == 0 || good == 0 {
                return Err(Error::Planning(format!(
                    "cost weighting needs both classes in train, have {defect} defect / {good} good"
                )));
            }
            let total = (defect + good) as f64;
            let parts = (target.defect + target.good) as f64;
            let w_defect = total * (target.defect as f64 / parts) / defect as f64;
            let w_good = total * (target.good as f64 / parts) / good as f64;
            plan.train
                .iter()
                .map(|e| PlanEntry {
                    weight: if e.label == GOOD { w_good } else { w_defect },
                    ..e.clone()
                })
                .collect()
        }
        Strategy::Undersample => match need {
            None => plan.train.clone(),
            Some((short, _)) => {
                let surplus = 1 - short;
                let short_count = if short == GOOD { good } else { defect };
                let keep_n = if surplus == DEFECT {
                    round_ratio(short_count, target.defect, target.good)
                } else {
                    round_ratio(short_count, target.good, target.defect)
                } as usize;
                let members: Vec<usize> = (0..plan.train.len())
                    .filter(|&i| plan.train[i].label == surplus)
                    .collect();
                let keep = pick(&plan.train, &members, key.tag("undersample").finish(), keep_n);
                plan.train
                    .iter()
                    .enumerate()
                    .filter(|(i, e)| e.label != surplus || keep.contains(i))
                    .map(|(_, e)| e.clone())
                    .collect()
            }
        },
        Strategy::Oversample => match need {
            None => plan.train.clone(),
            Some((short, wanted)) => {
                let members: Vec<usize> = (0..plan.train.len())
                    .filter(|&i| plan.train[i].label == short)
                    .collect();
                if members.is_empty() {
                    return Err(Error::Planning(format!(
                        "cannot oversample: train has no {} rows",
                        label_name(short)
                    )));
                }
                let m = members.len() as u64;
                let (q, extra) = (wanted / m, (wanted % m) as usize);
                let bonus = pick(&plan.train, &members, key.tag("oversample").finish(), extra);
                let mut out = Vec::with_capacity(plan.train.len() + (wanted - m) as usize);
                for (i, e) in plan.train.iter().enumerate() {
                    out.push(e.clone());
                    if e.label != short {
                        continue;
                    }
                    let copies = q + u64::from(bonus.contains(&i));
                    for k in 1..copies {
                        out.push(PlanEntry {
                            id: format!("{}#dup{k}", e.id),
                            ..e.clone()
                        });
                    }
                }
                out
            }
        },
        Strategy::SyntheticPad => match need {
            None => plan.train.clone(),
            Some((short, wanted)) => {
                let have = if short == GOOD { good } else { defect };
                let missing = (wanted - have) as usize;
                let used: HashSet<&str> = plan
                    .train
                    .iter()
                    .chain(&plan.val)
                    .chain(&plan.test)
                    .filter(|e| e.source == Source::Synthetic)
                    .map(|e| e.origin_id.as_str())
                    .collect();
                let spare: Vec<&SampleRecord> = pools
                    .synthetic
                    .rows
                    .iter()
                    .filter(|r| r.label == short && !used.contains(r.id.as_str()))
                    .collect();
                if spare.len() < missing {
                    return Err(Error::Planning(format!(
                        "synthetic pool exhausted: padding needs {missing} more {} rows, {} unused",
                        label_name(short),
                        spare.len()
                    )));
                }
                let mut out = plan.train.clone();
                for &i in seeded_order(&spare, key.tag("pad").finish(), "synthetic-pad")
                    .iter()
                    .take(missing)
                {
                    out.push(PlanEntry::of(spare[i]));
                }
                out
            }
        },
    };
    let result = MixPlan {
        strategy: Some(strategy),
        target_ratio: Some(target),
        train,
        ..plan.clone()
    };
    result.check_hygiene()?;
    Ok(result)
}

/// Seeded choice of `n` of the `members` indices into `entries`.
fn pick(entries: &[PlanEntry], members: &[usize], seed: u64, n: usize) -> HashSet<usize> {
    let rows: Vec<SampleRecord> = members
        .iter()
        .map(|&i| SampleRecord::new(entries[i].id.clone(), "", entries[i].label, entries[i].source))
        .collect();
    let refs: Vec<&SampleRecord> = rows.iter().collect();
    seeded_order(&refs, seed, "pick")
        .into_iter()
        .take(n)
        .map(|j| members[j])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::test_pools::*;
    use super::super::{plan_splits, SplitRequest, Strategy};
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn plan_700_300() -> (MixPlan, crate::manifest::Manifest, crate::manifest::Manifest) {
        let (real, syn) = (real(700, 300), synthetic(100, 600));
        let plan = MixPlan::whole_pool(&real, 0);
        (plan, real, syn)
    }

    fn labels(plan: &MixPlan) -> (usize, usize) {
        let c = plan.counts().train;
        (c.label(DEFECT), c.label(GOOD))
    }

    #[test]
    fn oversample_to_parity() {
        let (plan, real, syn) = plan_700_300();
        let pools = Pools {
            real: &real,
            synthetic: &syn,
        };
        let out = rebalance(
            &plan,
            pools,
            Strategy::Oversample,
            TargetRatio { defect: 1, good: 1 },
            5,
        )
        .unwrap();
        assert_eq!(labels(&out), (700, 700));
        let mut copies: BTreeMap<&str, usize> = BTreeMap::new();
        for e in out.train.iter().filter(|e| e.label == GOOD) {
            *copies.entry(e.origin_id.as_str()).or_default() += 1;
        }
        assert_eq!(copies.len(), 300);
        assert!(copies.values().all(|&c| c == 2 || c == 3));
        assert!(out.train.iter().any(|e| e.id.ends_with("#dup2")));
    }

    #[test]
    fn undersample_at_ratio_is_identity() {
        let (plan, real, syn) = plan_700_300();
        let pools = Pools {
            real: &real,
            synthetic: &syn,
        };
        let out = rebalance(&plan, pools, Strategy::Undersample, TargetRatio::WELD_DEFAULT, 5).unwrap();
        assert_eq!(out.train, plan.train);
        let even = rebalance(
            &plan,
            pools,
            Strategy::Undersample,
            TargetRatio { defect: 1, good: 1 },
            5,
        )
        .unwrap();
        assert_eq!(labels(&even), (300, 300));
    }

    #[test]
    fn cost_weights_follow_inverse_frequency() {
        let (plan, real, syn) = plan_700_300();
        let pools = Pools {
            real: &real,
            synthetic: &syn,
        };
        let out = rebalance(&plan, pools, Strategy::Cost, TargetRatio { defect: 1, good: 1 }, 5).unwrap();
        let w = |label| out.train.iter().find(|e| e.label == label).unwrap().weight;
        assert!((w(DEFECT) - 1000.0 / 1400.0).abs() < 1e-12);
        assert!((w(GOOD) - 1000.0 / 600.0).abs() < 1e-12);
        assert!((w(GOOD) / w(DEFECT) - 7.0 / 3.0).abs() < 1e-12);
        let mean = out.train.iter().map(|e| e.weight).sum::<f64>() / out.train.len() as f64;
        assert!((mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn synthetic_pad_adds_only_unused_synthetic() {
        let (real, syn) = (real(700, 100), synthetic(50, 400));
        let pools = Pools {
            real: &real,
            synthetic: &syn,
        };
        let plan = plan_splits(
            pools,
            SplitRequest {
                real_train: 600,
                syn_train: 40,
                val: 100,
                test: 100,
            },
            1,
        )
        .unwrap();
        let out = rebalance(&plan, pools, Strategy::SyntheticPad, TargetRatio::WELD_DEFAULT, 2).unwrap();
        let added = &out.train[plan.train.len()..];
        assert!(added.iter().all(|e| e.source == Source::Synthetic && e.label == GOOD));
        let (d, g) = labels(&out);
        assert!((g as f64 - d as f64 * 3.0 / 7.0).abs() <= 0.5 + 1e-9, "{d}:{g}");
        assert_eq!(out.val, plan.val);

        let tiny = synthetic(5, 5);
        let err = rebalance(
            &plan,
            Pools {
                real: &real,
                synthetic: &tiny,
            },
            Strategy::SyntheticPad,
            TargetRatio::WELD_DEFAULT,
            2,
        );
        assert_eq!(err.unwrap_err().kind(), "planning");
    }

    #[test]
    fn oversample_needs_a_minority_row() {
        let (real, syn) = (real(10, 0), synthetic(1, 1));
        let plan = MixPlan::whole_pool(&real, 0);
        let pools = Pools {
            real: &real,
            synthetic: &syn,
        };
        assert!(rebalance(&plan, pools, Strategy::Oversample, TargetRatio::WELD_DEFAULT, 0).is_err());
        assert!(rebalance(&plan, pools, Strategy::Cost, TargetRatio::WELD_DEFAULT, 0).is_err());
    }

    proptest! {
        #[test]
        fn resampling_properties(d in 1usize..200, g in 1usize..200, td in 1u64..10, tg in 1u64..10, seed in any::<u64>()) {
            let (real, syn) = (real(d, g), synthetic(400, 400));
            let pools = Pools { real: &real, synthetic: &syn };
            let plan = MixPlan::whole_pool(&real, 0);
            let target = TargetRatio { defect: td, good: tg };
            let originals: HashSet<&str> = plan.train.iter().map(|e| e.id.as_str()).collect();
            let within = |p: &MixPlan| {
                let (dd, gg) = labels(p);
                (dd as f64 * tg as f64 / td as f64 - gg as f64).abs() <= 1.0
                    || (gg as f64 * td as f64 / tg as f64 - dd as f64).abs() <= 1.0
            };

            let under = rebalance(&plan, pools, Strategy::Undersample, target, seed).unwrap();
            prop_assert!(under.train.iter().all(|e| originals.contains(e.id.as_str())));
            prop_assert!(within(&under));

            let over = rebalance(&plan, pools, Strategy::Oversample, target, seed).unwrap();
            let mut copies: BTreeMap<&str, usize> = BTreeMap::new();
            for e in &over.train {
                prop_assert!(originals.contains(e.origin_id.as_str()));
                *copies.entry(e.origin_id.as_str()).or_default() += 1;
            }
            for label in [DEFECT, GOOD] {
                let per_row: Vec<usize> = plan.train.iter().filter(|e| e.label == label).map(|e| copies[e.id.as_str()]).collect();
                let (lo, hi) = (per_row.iter().min().unwrap(), per_row.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }
            prop_assert!(within(&over));

            let pad = rebalance(&plan, pools, Strategy::SyntheticPad, target, seed);
            if let Ok(pad) = pad {
                prop_assert!(pad.train[plan.train.len()..].iter().all(|e| e.source == Source::Synthetic));
                prop_assert!(within(&pad));
            }

            let cost = rebalance(&plan, pools, Strategy::Cost, target, seed).unwrap();
            let ids: Vec<&str> = cost.train.iter().map(|e| e.id.as_str()).collect();
            let before: Vec<&str> = plan.train.iter().map(|e| e.id.as_str()).collect();
            prop_assert_eq!(ids, before);
            let mean = cost.train.iter().map(|e| e.weight).sum::<f64>() / cost.train.len() as f64;
            prop_assert!((mean - 1.0).abs() < 1e-9);
        }
    }
}
