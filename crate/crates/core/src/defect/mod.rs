//! Defect injection by editing the normal, AO and albedo maps of a
//! [`TextureStack`](crate::texgen::TextureStack).
//!
//! Each injector is a pure function of `(stack, seam path, spec)`: the
//! [`DefectSpec`] carries every sampled parameter as a flat map of named
//! scalars, so a stored spec replays the identical pixel edit.

mod crack;
mod incomplete;
mod porosity;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use crack::{apply_crack, CrackParams};
pub use incomplete::{apply_incomplete, IncompleteParams};
pub use porosity::{apply_minor_imperfection, apply_porosity, Pore, PorosityParams};

use crate::error::{Error, Result};
use crate::rng::SeedKey;
use crate::texgen::{LocationPoint, SeamPath, TextureStack};

/// Sampling ranges. The ranges keep every defect visible on a 34 px seam
/// while staying attributable to its anchor.
pub mod ranges {
    pub const PORE_COUNT: (u64, u64) = (1, 6);
    pub const PORE_AXIS_PX: (f64, f64) = (2.0, 8.0);
    pub const PORE_AO_FACTOR: (f64, f64) = (0.3, 0.7);
    pub const PORE_MAX_TILT_DEG: f64 = 60.0;
    pub const PORE_ALBEDO_FACTOR: f64 = 0.9;
    /// Pore centres stay within this arc distance of the anchor.
    pub const ANCHOR_WINDOW_PX: f64 = 40.0;
    /// Pore centres stay within this fraction of the half-width off-centre.
    pub const PORE_LATERAL_FRACTION: f64 = 0.8;

    pub const MINOR_PORE_COUNT: (u64, u64) = (1, 2);
    pub const MINOR_AXIS_PX: (f64, f64) = (2.0, 5.0);
    pub const MINOR_AO_FACTOR: (f64, f64) = (0.8, 0.95);
    pub const MINOR_MAX_TILT_DEG: f64 = 15.0;
    pub const MINOR_ALBEDO_FACTOR: f64 = 0.97;

    pub const CRACK_SEGMENTS: (u64, u64) = (4, 10);
    pub const CRACK_LENGTH_PX: (f64, f64) = (20.0, 120.0);
    pub const CRACK_JITTER_DEG: f64 = 35.0;
    pub const CRACK_STROKE_PX: (f64, f64) = (1.0, 3.0);
    pub const CRACK_AO: f32 = 0.2;
    pub const CRACK_ALBEDO_FACTOR: f32 = 0.6;
    pub const CRACK_GROOVE_TILT_DEG: f64 = 35.0;
    /// Cracks are clipped to the seam band dilated by this much.
    pub const CRACK_BAND_DILATION_PX: f64 = 4.0;

    pub const INCOMPLETE_LENGTH_PX: (f64, f64) = (30.0, 150.0);
    pub const INCOMPLETE_CENTER_JITTER_PX: f64 = 10.0;
    pub const INCOMPLETE_ALBEDO_FACTOR: f32 = 0.04;
}

/// No edited texel lies farther than this from the anchor position.
pub const MAX_DEFECT_REACH_PX: f64 = 160.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    NoChange,
    Porosity,
    Crack,
    IncompleteWeld,
    MinorImperfection,
}

impl DefectKind {
    pub const ALL: [DefectKind; 5] = [
        DefectKind::NoChange,
        DefectKind::Porosity,
        DefectKind::Crack,
        DefectKind::IncompleteWeld,
        DefectKind::MinorImperfection,
    ];

    /// Kinds generated unless minor imperfections are requested explicitly.
    pub fn default_kinds() -> Vec<DefectKind> {
        Self::ALL[..4].to_vec()
    }

    pub fn name(self) -> &'static str {
        match self {
            DefectKind::NoChange => "no_change",
            DefectKind::Porosity => "porosity",
            DefectKind::Crack => "crack",
            DefectKind::IncompleteWeld => "incomplete_weld",
            DefectKind::MinorImperfection => "minor_imperfection",
        }
    }

    /// How far beyond the seam band (`width/2`) the kind may edit texels.
    pub fn band_reach(self) -> f64 {
        match self {
            DefectKind::NoChange | DefectKind::IncompleteWeld => 0.0,
            DefectKind::Porosity => ranges::PORE_AXIS_PX.1,
            DefectKind::MinorImperfection => ranges::MINOR_AXIS_PX.1,
            DefectKind::Crack => ranges::CRACK_BAND_DILATION_PX,
        }
    }
}

impl fmt::Display for DefectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DefectKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown defect kind {s:?}")))
    }
}

/// Binary weld quality label: Good = 1, Defect = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Defect = 0,
    Good = 1,
}

impl ClassLabel {
    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn class_name(self) -> &'static str {
        match self {
            ClassLabel::Defect => "defect",
            ClassLabel::Good => "good",
        }
    }

    pub fn from_value(v: u8) -> Result<Self> {
        match v {
            0 => Ok(ClassLabel::Defect),
            1 => Ok(ClassLabel::Good),
            _ => Err(Error::Config(format!("label must be 0 or 1, got {v}"))),
        }
    }
}

pub fn label_of(kind: DefectKind) -> ClassLabel {
    match kind {
        DefectKind::NoChange | DefectKind::MinorImperfection => ClassLabel::Good,
        DefectKind::Porosity | DefectKind::Crack | DefectKind::IncompleteWeld => ClassLabel::Defect,
    }
}

/// Every sampled parameter of one injected defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectSpec {
    pub kind: DefectKind,
    pub anchor: LocationPoint,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl DefectSpec {
    pub(crate) fn expect_kind(&self, kind: DefectKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Contract(format!(
                "{} injector received a {} spec",
                kind, self.kind
            )));
        }
        Ok(())
    }

    pub(crate) fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Contract(format!("{} spec is missing parameter {key}", self.kind)))
    }
}

pub(crate) fn check_range(kind: DefectKind, key: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if !(v >= lo && v <= hi) {
        return Err(Error::Contract(format!(
            "{kind} parameter {key}={v} outside [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Samples a defect of `kind` anchored at `anchor`. Deterministic in its
/// arguments; `no_change` yields an empty parameter map.
pub fn make_defect_spec(kind: DefectKind, anchor: LocationPoint, seed: u64) -> DefectSpec {
    let mut rng = SeedKey::new(seed).tag("defect-spec").tag(kind.name()).stream();
    let params = match kind {
        DefectKind::NoChange => BTreeMap::new(),
        DefectKind::Porosity => PorosityParams::sample(&mut rng, false).to_params(),
        DefectKind::MinorImperfection => PorosityParams::sample(&mut rng, true).to_params(),
        DefectKind::Crack => CrackParams::sample(&mut rng, &anchor).to_params(),
        DefectKind::IncompleteWeld => IncompleteParams::sample(&mut rng, &anchor).to_params(),
    };
    DefectSpec {
        kind,
        anchor,
        params,
        seed,
    }
}

/// Dispatches to the injector for `spec.kind`; `no_change` returns the
/// stack untouched.
pub fn apply_defect(stack: TextureStack, path: &SeamPath, spec: &DefectSpec) -> Result<TextureStack> {
    match spec.kind {
        DefectKind::NoChange => Ok(stack),
        DefectKind::Porosity => apply_porosity(stack, path, spec),
        DefectKind::Crack => apply_crack(stack, path, spec),
        DefectKind::IncompleteWeld => apply_incomplete(stack, path, spec),
        DefectKind::MinorImperfection => apply_minor_imperfection(stack, path, spec),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use test_support::flat_scene;

    #[test]
    fn labels() {
        assert_eq!(label_of(DefectKind::NoChange).value(), 1);
        assert_eq!(label_of(DefectKind::Crack).value(), 0);
        assert_eq!(label_of(DefectKind::Porosity).value(), 0);
        assert_eq!(label_of(DefectKind::IncompleteWeld).value(), 0);
        assert_eq!(label_of(DefectKind::MinorImperfection).value(), 1);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in DefectKind::ALL {
            assert_eq!(k.name().parse::<DefectKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
        assert!("scratch".parse::<DefectKind>().is_err());
        assert!(!DefectKind::default_kinds().contains(&DefectKind::MinorImperfection));
    }

    #[test]
    fn no_change_spec_is_empty_and_identity() {
        let (stack, path, locs) = flat_scene();
        let spec = make_defect_spec(DefectKind::NoChange, locs[0], 3);
        assert!(spec.params.is_empty());
        assert_eq!(apply_defect(stack.clone(), &path, &spec).unwrap(), stack);
    }

    #[test]
    fn specs_are_deterministic() {
        let (_, _, locs) = flat_scene();
        for k in DefectKind::ALL {
            assert_eq!(make_defect_spec(k, locs[1], 9), make_defect_spec(k, locs[1], 9));
        }
    }

    #[test]
    fn kind_mismatch_is_contract_error() {
        let (stack, path, locs) = flat_scene();
        let crack = make_defect_spec(DefectKind::Crack, locs[0], 1);
        assert!(matches!(
            apply_porosity(stack.clone(), &path, &crack),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            apply_incomplete(stack.clone(), &path, &crack),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            apply_minor_imperfection(stack.clone(), &path, &crack),
            Err(Error::Contract(_))
        ));
        let pores = make_defect_spec(DefectKind::Porosity, locs[0], 1);
        assert!(matches!(apply_crack(stack, &path, &pores), Err(Error::Contract(_))));
    }

    #[test]
    fn every_kind_edits_near_its_anchor_only() {
        let (stack, path, locs) = flat_scene();
        for kind in &DefectKind::ALL[1..] {
            for seed in 0..20 {
                let spec = make_defect_spec(*kind, locs[seed as usize % locs.len()], seed);
                let out = apply_defect(stack.clone(), &path, &spec).unwrap();
                out.validate().unwrap();
                let mask = out.diff_mask(&stack);
                let mut changed = 0;
                for (i, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
                    changed += 1;
                    let (x, y) = ((i % 512) as f64 + 0.5, (i / 512) as f64 + 0.5);
                    let a = spec.anchor.position;
                    assert!((x - a[0]).hypot(y - a[1]) <= MAX_DEFECT_REACH_PX);
                    let reach = 17.0 + kind.band_reach();
                    assert!(
                        path.distance_within([x, y], reach + 1.0) <= reach,
                        "{kind} at ({x},{y})"
                    );
                }
                assert!(changed > 0, "{kind} seed {seed} changed nothing");
            }
        }
    }
}
