use std::collections::BTreeMap;

use super::ranges::*;
use super::{check_range, DefectKind, DefectSpec};
use crate::error::Result;
use crate::rng::Stream;
use crate::texgen::{LocationPoint, SeamPath, TextureStack};

/// Arc-length interval of missing bead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncompleteParams {
    pub arc_start: f64,
    pub arc_end: f64,
}

impl IncompleteParams {
    pub(crate) fn sample(rng: &mut Stream, anchor: &LocationPoint) -> Self {
        let length = rng.uniform(INCOMPLETE_LENGTH_PX.0, INCOMPLETE_LENGTH_PX.1);
        let centre = anchor.arc_length + rng.uniform(-INCOMPLETE_CENTER_JITTER_PX, INCOMPLETE_CENTER_JITTER_PX);
        IncompleteParams {
            arc_start: centre - length / 2.0,
            arc_end: centre + length / 2.0,
        }
    }

    pub fn length(&self) -> f64 {
        self.arc_end - self.arc_start
    }

    pub fn to_params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("arc_start".to_string(), self.arc_start),
            ("arc_end".to_string(), self.arc_end),
            ("length".to_string(), self.length()),
        ])
    }

    pub fn from_spec(spec: &DefectSpec) -> Result<Self> {
        let p = IncompleteParams {
            arc_start: spec.param("arc_start")?,
            arc_end: spec.param("arc_end")?,
        };
        check_range(
            DefectKind::IncompleteWeld,
            "length",
            p.length(),
            INCOMPLETE_LENGTH_PX.0 - 1e-9,
            INCOMPLETE_LENGTH_PX.1 + 1e-9,
        )?;
        Ok(p)
    }
}

/// Strips the bead over the interval: band texels whose nearest centreline
/// point falls inside it get flat normals, AO 1 and near-black albedo (the
/// open gap between the plates).
pub fn apply_incomplete(mut stack: TextureStack, path: &SeamPath, spec: &DefectSpec) -> Result<TextureStack> {
    spec.expect_kind(DefectKind::IncompleteWeld)?;
    let params = IncompleteParams::from_spec(spec)?;
    let (w, h) = stack.dims();
    let half = path.half_width();

    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    let mut s = params.arc_start;
    loop {
        let (p, _) = path.point_at(s.min(params.arc_end));
        for k in 0..2 {
            lo[k] = lo[k].min(p[k] - half - 1.0);
            hi[k] = hi[k].max(p[k] + half + 1.0);
        }
        if s >= params.arc_end {
            break;
        }
        s += 4.0;
    }
    let x0 = lo[0].floor().max(0.0) as u32;
    let y0 = lo[1].floor().max(0.0) as u32;
    let x1 = (hi[0].ceil().max(0.0) as u32 + 1).min(w);
    let y1 = (hi[1].ceil().max(0.0) as u32 + 1).min(h);

    for y in y0..y1 {
        for x in x0..x1 {
            let p = [x as f64 + 0.5, y as f64 + 0.5];
            let Some(proj) = path.project_within(p, half) else {
                continue;
            };
            if proj.distance > half || proj.arc < params.arc_start || proj.arc > params.arc_end {
                continue;
            }
            let i = stack.index(x, y);
            stack.normal[i] = [0.0, 0.0, 1.0];
            stack.ao[i] = 1.0;
            stack.albedo[i] = stack.albedo[i].map(|c| c * INCOMPLETE_ALBEDO_FACTOR);
        }
    }
    Ok(stack)
}

#[cfg(test)]
mod tests {
    use super::super::make_defect_spec;
    use super::super::test_support::flat_scene;
    use super::*;
    use crate::texgen::apply_seam;

    #[test]
    fn interior_reset_and_exterior_untouched() {
        let (flat, path, locs) = flat_scene();
        let stack = apply_seam(flat, &path, 4);
        let anchor = locs[1];
        let spec = DefectSpec {
            kind: DefectKind::IncompleteWeld,
            anchor,
            params: IncompleteParams {
                arc_start: anchor.arc_length - 20.0,
                arc_end: anchor.arc_length + 20.0,
            }
            .to_params(),
            seed: 0,
        };
        let out = apply_incomplete(stack.clone(), &path, &spec).unwrap();
        out.validate().unwrap();
        let a = anchor.position;
        let inside = out.index(a[0] as u32, a[1] as u32 + 5);
        assert_eq!(out.normal[inside], [0.0, 0.0, 1.0]);
        assert_eq!(out.ao[inside], 1.0);
        assert!(out.albedo[inside].iter().all(|&c| c <= 0.05));
        for probe in [
            out.index(a[0] as u32 + 30, a[1] as u32),
            out.index(a[0] as u32, a[1] as u32 + 25),
            out.index(a[0] as u32 - 30, a[1] as u32 - 3),
        ] {
            assert!(out.texel_identical(&stack, probe));
        }
    }

    #[test]
    fn sampled_lengths_stay_in_range() {
        let (_, _, locs) = flat_scene();
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for seed in 0..1000 {
            let spec = make_defect_spec(DefectKind::IncompleteWeld, locs[0], seed);
            let p = IncompleteParams::from_spec(&spec).unwrap();
            assert!((30.0..=150.0).contains(&p.length()));
            let centre = (p.arc_start + p.arc_end) / 2.0;
            assert!((centre - locs[0].arc_length).abs() <= 10.0);
            lo = lo.min(p.length());
            hi = hi.max(p.length());
        }
        assert!(lo < 32.0 && hi > 148.0);
    }
}
