use std::collections::BTreeMap;

use super::ranges::*;
use super::{check_range, DefectKind, DefectSpec};
use crate::error::Result;
use crate::rng::Stream;
use crate::texgen::{unit_normal, LocationPoint, SeamPath, TextureStack};

/// A jagged crack polyline starting at the anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackParams {
    pub vertices: Vec<[f64; 2]>,
    pub stroke_width: f64,
}

impl CrackParams {
    pub(crate) fn sample(rng: &mut Stream, anchor: &LocationPoint) -> Self {
        let segments = rng.int_inclusive(CRACK_SEGMENTS.0, CRACK_SEGMENTS.1) as usize;
        let length = rng.uniform(CRACK_LENGTH_PX.0, CRACK_LENGTH_PX.1);
        let stroke_width = rng.uniform(CRACK_STROKE_PX.0, CRACK_STROKE_PX.1);
        let along = anchor.tangent[1].atan2(anchor.tangent[0]);
        // Longitudinal or transverse, either direction.
        let mut heading = along
            + if rng.bernoulli(0.5) {
                0.0
            } else {
                std::f64::consts::FRAC_PI_2
            }
            + if rng.bernoulli(0.5) { 0.0 } else { std::f64::consts::PI }
            + rng.uniform(-20.0, 20.0).to_radians();
        let step = length / segments as f64;
        let mut p = anchor.position;
        let mut vertices = vec![p];
        for _ in 0..segments {
            heading += rng.uniform(-CRACK_JITTER_DEG, CRACK_JITTER_DEG).to_radians();
            p = [p[0] + step * heading.cos(), p[1] + step * heading.sin()];
            vertices.push(p);
        }
        CrackParams { vertices, stroke_width }
    }

    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }

    pub fn to_params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("segment_count".into(), (self.vertices.len() - 1) as f64);
        m.insert("length".into(), self.length());
        m.insert("stroke_width".into(), self.stroke_width);
        for (i, v) in self.vertices.iter().enumerate() {
            m.insert(format!("v{i}_x"), v[0]);
            m.insert(format!("v{i}_y"), v[1]);
        }
        m
    }

    pub fn from_spec(spec: &DefectSpec) -> Result<Self> {
        let kind = DefectKind::Crack;
        let segments = spec.param("segment_count")?;
        check_range(
            kind,
            "segment_count",
            segments,
            CRACK_SEGMENTS.0 as f64,
            CRACK_SEGMENTS.1 as f64,
        )?;
        let stroke_width = spec.param("stroke_width")?;
        check_range(kind, "stroke_width", stroke_width, CRACK_STROKE_PX.0, CRACK_STROKE_PX.1)?;
        let vertices = (0..=segments as usize)
            .map(|i| Ok([spec.param(&format!("v{i}_x"))?, spec.param(&format!("v{i}_y"))?]))
            .collect::<Result<Vec<_>>>()?;
        let params = CrackParams { vertices, stroke_width };
        // Tolerate rounding in the stored length.
        check_range(
            kind,
            "length",
            params.length(),
            CRACK_LENGTH_PX.0 - 1e-6,
            CRACK_LENGTH_PX.1 + 1e-6,
        )?;
        Ok(params)
    }
}

/// Does segment `a→b` touch the closed unit square with corner `(x, y)`?
fn segment_hits_cell(a: [f64; 2], b: [f64; 2], x: f64, y: f64) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for axis in 0..2 {
        let (lo, hi) = if axis == 0 { (x, x + 1.0) } else { (y, y + 1.0) };
        if d[axis] == 0.0 {
            if a[axis] < lo || a[axis] > hi {
                return false;
            }
        } else {
            let ta = (lo - a[axis]) / d[axis];
            let tb = (hi - a[axis]) / d[axis];
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
    }
    t0 <= t1
}

/// Draws the crack: texels within `stroke_width/2` of the polyline, or whose
/// cell the polyline passes through, get AO 0.2, 40% darker albedo and
/// V-groove normals. The stroke is clipped to the seam band dilated by 4 px.
pub fn apply_crack(mut stack: TextureStack, path: &SeamPath, spec: &DefectSpec) -> Result<TextureStack> {
    spec.expect_kind(DefectKind::Crack)?;
    let params = CrackParams::from_spec(spec)?;
    let (w, h) = stack.dims();
    let half_stroke = params.stroke_width / 2.0;
    let clip = path.half_width() + CRACK_BAND_DILATION_PX;
    let tilt = CRACK_GROOVE_TILT_DEG.to_radians();

    let pad = half_stroke + 1.0;
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for v in &params.vertices {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k] - pad);
            hi[k] = hi[k].max(v[k] + pad);
        }
    }
    let x0 = lo[0].floor().max(0.0) as u32;
    let y0 = lo[1].floor().max(0.0) as u32;
    let x1 = (hi[0].ceil().max(0.0) as u32 + 1).min(w);
    let y1 = (hi[1].ceil().max(0.0) as u32 + 1).min(h);

    for y in y0..y1 {
        for x in x0..x1 {
            let p = [x as f64 + 0.5, y as f64 + 0.5];
            let mut best = (f64::INFINITY, [0.0, 0.0], 0.0);
            let mut touched = false;
            for seg in params.vertices.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let len = d[0].hypot(d[1]);
                let t = [d[0] / len, d[1] / len];
                let along = ((p[0] - a[0]) * t[0] + (p[1] - a[1]) * t[1]).clamp(0.0, len);
                let (ex, ey) = (p[0] - a[0] - t[0] * along, p[1] - a[1] - t[1] * along);
                let dist = ex.hypot(ey);
                if dist < best.0 {
                    best = (dist, t, t[0] * ey - t[1] * ex);
                }
                touched |= segment_hits_cell(a, b, x as f64, y as f64);
            }
            if !(best.0 <= half_stroke || touched) {
                continue;
            }
            if path.distance_within(p, clip) > clip {
                continue;
            }
            let (_, t, cross) = best;
            let side = if cross >= 0.0 { 1.0 } else { -1.0 };
            // Left-hand perpendicular of the segment; walls face the groove.
            let m = [-t[1], t[0]];
            let i = stack.index(x, y);
            stack.normal[i] = unit_normal([-side * m[0] * tilt.sin(), -side * m[1] * tilt.sin(), tilt.cos()]);
            stack.ao[i] = CRACK_AO;
            stack.albedo[i] = stack.albedo[i].map(|c| c * CRACK_ALBEDO_FACTOR);
        }
    }
    Ok(stack)
}

#[cfg(test)]
mod tests {
    use super::super::make_defect_spec;
    use super::super::test_support::flat_scene;
    use super::*;

    fn straight_crack(anchor: LocationPoint, heading_deg: f64, length: f64, width: f64) -> DefectSpec {
        let (s, c) = heading_deg.to_radians().sin_cos();
        let step = length / 4.0;
        let vertices = (0..=4)
            .map(|i| {
                [
                    anchor.position[0] + c * step * i as f64,
                    anchor.position[1] + s * step * i as f64,
                ]
            })
            .collect();
        DefectSpec {
            kind: DefectKind::Crack,
            anchor,
            params: CrackParams {
                vertices,
                stroke_width: width,
            }
            .to_params(),
            seed: 0,
        }
    }

    #[test]
    fn minimal_crack_pixel_count_is_bounded() {
        let (stack, path, locs) = flat_scene();
        for heading in [0.0, 17.0, 45.0, 90.0, 133.0, 200.0] {
            let spec = straight_crack(locs[1], heading, 20.0, 1.0);
            let out = apply_crack(stack.clone(), &path, &spec).unwrap();
            let changed = out.diff_mask(&stack).iter().filter(|m| **m).count();
            assert!((20..=180).contains(&changed), "heading {heading}: {changed}");
        }
    }

    #[test]
    fn crack_is_clipped_to_dilated_band() {
        let (stack, path, locs) = flat_scene();
        // Straight across the seam, far past the band.
        let spec = straight_crack(locs[2], 90.0, 100.0, 3.0);
        let out = apply_crack(stack.clone(), &path, &spec).unwrap();
        let mask = out.diff_mask(&stack);
        for (i, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
            let y = (i / 512) as f64 + 0.5;
            assert!((y - 128.0).abs() <= 17.0 + 4.0 + 3.0);
        }
        assert!(mask.iter().any(|m| *m));
    }

    #[test]
    fn groove_normals_oppose_across_stroke() {
        let (stack, path, locs) = flat_scene();
        let spec = straight_crack(locs[0], 0.0, 40.0, 3.0);
        let out = apply_crack(stack, &path, &spec).unwrap();
        out.validate().unwrap();
        let a = locs[0].position;
        let x = a[0] as u32 + 10;
        let above = out.index(x, a[1] as u32 - 1);
        let below = out.index(x, a[1] as u32 + 1);
        assert!(out.normal[above][1] * out.normal[below][1] < 0.0);
        assert_eq!(out.ao[above], 0.2);
    }

    #[test]
    fn sampled_cracks_in_range_and_replayable() {
        let (stack, path, locs) = flat_scene();
        for seed in 0..200 {
            let spec = make_defect_spec(DefectKind::Crack, locs[3], seed);
            let p = CrackParams::from_spec(&spec).unwrap();
            assert!((4..=10).contains(&(p.vertices.len() - 1)));
            assert!((20.0 - 1e-6..=120.0 + 1e-6).contains(&p.length()));
            assert_eq!(p.vertices[0], locs[3].position);
            if seed < 10 {
                let a = apply_crack(stack.clone(), &path, &spec).unwrap();
                let b = apply_crack(stack.clone(), &path, &spec).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn cell_hits() {
        assert!(segment_hits_cell([0.0, 0.5], [3.0, 0.5], 1.0, 0.0));
        assert!(!segment_hits_cell([0.0, 0.5], [3.0, 0.5], 1.0, 1.5));
        assert!(segment_hits_cell([0.0, 0.0], [2.0, 2.0], 1.0, 1.0));
        assert!(!segment_hits_cell([0.0, 0.0], [0.5, 0.5], 2.0, 2.0));
    }
}
