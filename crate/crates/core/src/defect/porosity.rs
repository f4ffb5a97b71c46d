use std::collections::BTreeMap;

use super::ranges::*;
use super::{check_range, DefectKind, DefectSpec};
use crate::error::Result;
use crate::rng::Stream;
use crate::texgen::{unit_normal, SeamPath, TextureStack};

/// One elliptical pit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pore {
    /// Arc-length offset of the centre from the anchor.
    pub arc_offset: f64,
    /// Lateral offset of the centre as a fraction of the seam half-width.
    pub lateral: f64,
    pub semi_a: f64,
    pub semi_b: f64,
    /// Rotation of the `semi_a` axis from `+x`, degrees.
    pub angle_deg: f64,
    pub ao_factor: f64,
}

/// Parameters shared by porosity and the shallow minor-imperfection variant.
#[derive(Debug, Clone, PartialEq)]
pub struct PorosityParams {
    pub pores: Vec<Pore>,
    pub max_tilt_deg: f64,
    pub albedo_factor: f64,
}

struct Limits {
    count: (u64, u64),
    axis: (f64, f64),
    ao: (f64, f64),
    tilt: f64,
    albedo: f64,
}

fn limits(minor: bool) -> Limits {
    if minor {
        Limits {
            count: MINOR_PORE_COUNT,
            axis: MINOR_AXIS_PX,
            ao: MINOR_AO_FACTOR,
            tilt: MINOR_MAX_TILT_DEG,
            albedo: MINOR_ALBEDO_FACTOR,
        }
    } else {
        Limits {
            count: PORE_COUNT,
            axis: PORE_AXIS_PX,
            ao: PORE_AO_FACTOR,
            tilt: PORE_MAX_TILT_DEG,
            albedo: PORE_ALBEDO_FACTOR,
        }
    }
}

impl PorosityParams {
    pub(crate) fn sample(rng: &mut Stream, minor: bool) -> Self {
        let lim = limits(minor);
        let count = rng.int_inclusive(lim.count.0, lim.count.1);
        let pores = (0..count)
            .map(|_| Pore {
                arc_offset: rng.uniform(-ANCHOR_WINDOW_PX, ANCHOR_WINDOW_PX),
                lateral: rng.uniform(-PORE_LATERAL_FRACTION, PORE_LATERAL_FRACTION),
                semi_a: rng.uniform(lim.axis.0, lim.axis.1),
                semi_b: rng.uniform(lim.axis.0, lim.axis.1),
                angle_deg: rng.uniform(0.0, 180.0),
                ao_factor: rng.uniform(lim.ao.0, lim.ao.1),
            })
            .collect();
        PorosityParams {
            pores,
            max_tilt_deg: lim.tilt,
            albedo_factor: lim.albedo,
        }
    }

    pub fn to_params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("pore_count".into(), self.pores.len() as f64);
        m.insert("max_tilt_deg".into(), self.max_tilt_deg);
        m.insert("albedo_factor".into(), self.albedo_factor);
        for (i, p) in self.pores.iter().enumerate() {
            m.insert(format!("pore{i}_arc_offset"), p.arc_offset);
            m.insert(format!("pore{i}_lateral"), p.lateral);
            m.insert(format!("pore{i}_semi_a"), p.semi_a);
            m.insert(format!("pore{i}_semi_b"), p.semi_b);
            m.insert(format!("pore{i}_angle_deg"), p.angle_deg);
            m.insert(format!("pore{i}_ao_factor"), p.ao_factor);
        }
        m
    }

    /// Decodes and range-checks the parameters of a porosity or
    /// minor-imperfection spec.
    pub fn from_spec(spec: &DefectSpec) -> Result<Self> {
        let kind = spec.kind;
        let lim = limits(kind == DefectKind::MinorImperfection);
        let count = spec.param("pore_count")?;
        check_range(kind, "pore_count", count, lim.count.0 as f64, lim.count.1 as f64)?;
        let max_tilt_deg = spec.param("max_tilt_deg")?;
        check_range(kind, "max_tilt_deg", max_tilt_deg, 0.0, lim.tilt)?;
        let albedo_factor = spec.param("albedo_factor")?;
        check_range(kind, "albedo_factor", albedo_factor, 0.0, 1.0)?;
        let mut pores = Vec::new();
        for i in 0..count as usize {
            let get = |name: &str| spec.param(&format!("pore{i}_{name}"));
            let pore = Pore {
                arc_offset: get("arc_offset")?,
                lateral: get("lateral")?,
                semi_a: get("semi_a")?,
                semi_b: get("semi_b")?,
                angle_deg: get("angle_deg")?,
                ao_factor: get("ao_factor")?,
            };
            check_range(kind, "arc_offset", pore.arc_offset, -ANCHOR_WINDOW_PX, ANCHOR_WINDOW_PX)?;
            check_range(kind, "lateral", pore.lateral, -1.0, 1.0)?;
            check_range(kind, "semi_a", pore.semi_a, lim.axis.0, lim.axis.1)?;
            check_range(kind, "semi_b", pore.semi_b, lim.axis.0, lim.axis.1)?;
            check_range(kind, "ao_factor", pore.ao_factor, lim.ao.0, lim.ao.1)?;
            pores.push(pore);
        }
        Ok(PorosityParams {
            pores,
            max_tilt_deg,
            albedo_factor,
        })
    }
}

impl Pore {
    /// Centre in texture coordinates.
    pub fn centre(&self, path: &SeamPath, anchor_arc: f64) -> [f64; 2] {
        let (p, t) = path.point_at(anchor_arc + self.arc_offset);
        let n = self.lateral * path.half_width();
        [p[0] - t[1] * n, p[1] + t[0] * n]
    }
}

fn carve(mut stack: TextureStack, path: &SeamPath, spec: &DefectSpec, params: &PorosityParams) -> TextureStack {
    let (w, h) = stack.dims();
    let max_tilt = params.max_tilt_deg.to_radians();
    for pore in &params.pores {
        let c = pore.centre(path, spec.anchor.arc_length);
        let r = pore.semi_a.max(pore.semi_b) + 1.0;
        let x0 = (c[0] - r).floor().max(0.0) as u32;
        let y0 = (c[1] - r).floor().max(0.0) as u32;
        let x1 = ((c[0] + r).ceil() as u32 + 1).min(w);
        let y1 = ((c[1] + r).ceil() as u32 + 1).min(h);
        let (sin_a, cos_a) = pore.angle_deg.to_radians().sin_cos();
        for y in y0..y1 {
            for x in x0..x1 {
                let dx = x as f64 + 0.5 - c[0];
                let dy = y as f64 + 0.5 - c[1];
                let u = (dx * cos_a + dy * sin_a) / pore.semi_a;
                let v = (-dx * sin_a + dy * cos_a) / pore.semi_b;
                let rho2 = u * u + v * v;
                if rho2 > 1.0 {
                    continue;
                }
                let tilt = rho2.sqrt() * max_tilt;
                let dist = dx.hypot(dy);
                // Pit walls face the centre.
                let (ix, iy) = if dist > 0.0 {
                    (-dx / dist, -dy / dist)
                } else {
                    (0.0, 0.0)
                };
                let i = stack.index(x, y);
                stack.normal[i] = unit_normal([tilt.sin() * ix, tilt.sin() * iy, tilt.cos()]);
                stack.ao[i] = (stack.ao[i] as f64 * pore.ao_factor) as f32;
                let a = stack.albedo[i];
                stack.albedo[i] = a.map(|c| (c as f64 * params.albedo_factor) as f32);
            }
        }
    }
    stack
}

/// Carves elliptical pits: inward-tilted normals (up to 60° at the rim),
/// AO scaled by the per-pore factor and albedo darkened 10%.
pub fn apply_porosity(stack: TextureStack, path: &SeamPath, spec: &DefectSpec) -> Result<TextureStack> {
    spec.expect_kind(DefectKind::Porosity)?;
    let params = PorosityParams::from_spec(spec)?;
    Ok(carve(stack, path, spec, &params))
}

/// Shallow variant of [`apply_porosity`]: at most two pores, AO factor in
/// `[0.8, 0.95]`, tilt up to 15°. Labelled Good.
pub fn apply_minor_imperfection(stack: TextureStack, path: &SeamPath, spec: &DefectSpec) -> Result<TextureStack> {
    spec.expect_kind(DefectKind::MinorImperfection)?;
    let params = PorosityParams::from_spec(spec)?;
    Ok(carve(stack, path, spec, &params))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::flat_scene;
    use super::super::{label_of, make_defect_spec, ClassLabel};
    use super::*;

    fn single_pore_spec(anchor: crate::texgen::LocationPoint, a: f64, b: f64) -> DefectSpec {
        let params = PorosityParams {
            pores: vec![Pore {
                arc_offset: 0.0,
                lateral: 0.0,
                semi_a: a,
                semi_b: b,
                angle_deg: 0.0,
                ao_factor: 0.5,
            }],
            max_tilt_deg: 60.0,
            albedo_factor: 0.9,
        };
        DefectSpec {
            kind: DefectKind::Porosity,
            anchor,
            params: params.to_params(),
            seed: 0,
        }
    }

    #[test]
    fn disc_of_radius_four_matches_analytic_mask() {
        let (stack, path, locs) = flat_scene();
        let spec = single_pore_spec(locs[0], 4.0, 4.0);
        let out = apply_porosity(stack.clone(), &path, &spec).unwrap();
        let c = locs[0].position;
        let mask = out.diff_mask(&stack);
        for y in 0..stack.height() {
            for x in 0..stack.width() {
                let r = (x as f64 + 0.5 - c[0]).hypot(y as f64 + 0.5 - c[1]);
                let changed = mask[stack.index(x, y)];
                if r < 3.0 {
                    assert!(changed, "({x},{y}) r={r}");
                } else if r > 5.0 {
                    assert!(!changed, "({x},{y}) r={r}");
                }
            }
        }
    }

    #[test]
    fn pore_centre_darker_than_surroundings() {
        let (stack, path, locs) = flat_scene();
        let spec = single_pore_spec(locs[1], 6.0, 3.0);
        let out = apply_porosity(stack, &path, &spec).unwrap();
        out.validate().unwrap();
        let c = locs[1].position;
        let centre = out.index(c[0] as u32, c[1] as u32);
        let outside = out.index(c[0] as u32 + 9, c[1] as u32);
        assert!(out.ao[centre] < out.ao[outside]);
    }

    #[test]
    fn sampled_ranges_over_1000_seeds() {
        let (_, _, locs) = flat_scene();
        let mut counts = [0usize; 7];
        let (mut axis_lo, mut axis_hi) = (f64::MAX, f64::MIN);
        for seed in 0..1000 {
            let spec = make_defect_spec(DefectKind::Porosity, locs[0], seed);
            let p = PorosityParams::from_spec(&spec).unwrap();
            assert!((1..=6).contains(&p.pores.len()));
            counts[p.pores.len()] += 1;
            for pore in &p.pores {
                for axis in [pore.semi_a, pore.semi_b] {
                    assert!((2.0..=8.0).contains(&axis));
                    axis_lo = axis_lo.min(axis);
                    axis_hi = axis_hi.max(axis);
                }
                assert!(pore.arc_offset.abs() <= 40.0);
                assert!((0.3..=0.7).contains(&pore.ao_factor));
            }
        }
        assert!(counts[1..].iter().all(|&c| c > 100), "{counts:?}");
        assert!(axis_lo < 2.1 && axis_hi > 7.9);
    }

    #[test]
    fn minor_imperfection_is_shallower_and_good() {
        let (stack, path, locs) = flat_scene();
        assert_eq!(label_of(DefectKind::MinorImperfection), ClassLabel::Good);
        for seed in 0..50 {
            let minor = make_defect_spec(DefectKind::MinorImperfection, locs[2], seed);
            let pores = make_defect_spec(DefectKind::Porosity, locs[2], seed);
            let pm = PorosityParams::from_spec(&minor).unwrap();
            let pp = PorosityParams::from_spec(&pores).unwrap();
            assert!(pm.pores.len() <= 2);
            let minor_max = pm.pores.iter().map(|p| 1.0 - p.ao_factor).fold(0.0, f64::max);
            let pore_min = pp.pores.iter().map(|p| 1.0 - p.ao_factor).fold(1.0, f64::min);
            assert!(minor_max <= 0.2 + 1e-12 && pore_min >= 0.3 - 1e-12);
            let out = apply_minor_imperfection(stack.clone(), &path, &minor).unwrap();
            for n in &out.normal {
                assert!(n[2] as f64 >= 15f64.to_radians().cos() - 1e-6);
            }
        }
    }

    #[test]
    fn out_of_range_spec_rejected() {
        let (stack, path, locs) = flat_scene();
        let spec = single_pore_spec(locs[0], 12.0, 4.0);
        assert!(apply_porosity(stack, &path, &spec).is_err());
    }
}
