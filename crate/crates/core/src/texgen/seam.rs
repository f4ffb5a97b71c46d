use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stack::{unit_normal, TextureStack};
use crate::error::{Error, Result};
use crate::rng::SeedKey;

/// Horizontal spacing between seam vertices.
pub const SEAM_STEP_PX: f64 = 16.0;
/// Default bead width.
pub const DEFAULT_SEAM_WIDTH: f64 = 34.0;
/// Width of the occlusion fringe where the bead meets the plates.
pub const GAP_SHADOW_PX: f64 = 2.0;

const BEAD_HEIGHT_PX: f64 = 3.0;
const RIPPLE_HEIGHT_PX: f64 = 0.8;
const CRESCENT_BEND: f64 = 0.6;
const BEAD_TINT: [f64; 3] = [0.68, 0.66, 0.72];

/// Weld seam centreline: a polyline running left to right, plus bead width.
#[derive(Debug, Clone, PartialEq)]
pub struct SeamPath {
    points: Vec<[f64; 2]>,
    width: f64,
    /// Cumulative arc length at each vertex.
    cumulative: Vec<f64>,
}

/// Nearest-point query result against a [`SeamPath`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeamProjection {
    /// Euclidean distance to the centreline.
    pub distance: f64,
    /// Arc length of the nearest centreline point.
    pub arc: f64,
    /// Signed lateral offset; positive on the left of the direction of travel
    /// (`+y` side when the seam runs in `+x`).
    pub offset: f64,
    pub tangent: [f64; 2],
}

impl SeamPath {
    pub fn new(points: Vec<[f64; 2]>, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Config(format!("seam width must be positive, got {width}")));
        }
        if points.len() < 2 {
            return Err(Error::Config("seam path needs at least two points".into()));
        }
        if points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            return Err(Error::Config("seam x-coordinates must be strictly increasing".into()));
        }
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in points.windows(2) {
            acc += (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            cumulative.push(acc);
        }
        Ok(SeamPath {
            points,
            width,
            cumulative,
        })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn half_width(&self) -> f64 {
        self.width / 2.0
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Errors unless every vertex lies inside `dims` inset by the seam width.
    pub fn check_within(&self, dims: (u32, u32)) -> Result<()> {
        let (w, h) = (dims.0 as f64, dims.1 as f64);
        let inset = self.width;
        for p in &self.points {
            if p[0] < inset || p[0] > w - inset || p[1] < inset || p[1] > h - inset {
                return Err(Error::Config(format!(
                    "seam vertex ({:.1}, {:.1}) lies outside {}x{} inset by {inset}",
                    p[0], p[1], dims.0, dims.1
                )));
            }
        }
        Ok(())
    }

    fn tangent_of(&self, seg: usize) -> [f64; 2] {
        let (a, b) = (self.points[seg], self.points[seg + 1]);
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        [(b[0] - a[0]) / len, (b[1] - a[1]) / len]
    }

    /// Position and unit tangent at arc length `s` (clamped to the path).
    pub fn point_at(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let s = s.clamp(0.0, self.length());
        let seg = self
            .cumulative
            .partition_point(|&c| c <= s)
            .saturating_sub(1)
            .min(self.points.len() - 2);
        let t = self.tangent_of(seg);
        let d = s - self.cumulative[seg];
        let a = self.points[seg];
        ([a[0] + t[0] * d, a[1] + t[1] * d], t)
    }

    /// Nearest centreline point to `p`, considering only segments that could
    /// lie within `radius` of it. Returns `None` when no segment qualifies.
    pub fn project_within(&self, p: [f64; 2], radius: f64) -> Option<SeamProjection> {
        let n = self.points.len();
        // Segment i spans x in [points[i].x, points[i+1].x].
        let first = self.points.partition_point(|q| q[0] < p[0] - radius).saturating_sub(1);
        let last = self.points.partition_point(|q| q[0] <= p[0] + radius).min(n - 1);
        let mut best: Option<SeamProjection> = None;
        for seg in first..last {
            let a = self.points[seg];
            let b = self.points[seg + 1];
            let len = self.cumulative[seg + 1] - self.cumulative[seg];
            let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
            let along = ((p[0] - a[0]) * t[0] + (p[1] - a[1]) * t[1]).clamp(0.0, len);
            let q = [a[0] + t[0] * along, a[1] + t[1] * along];
            let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
            let distance = dx.hypot(dy);
            if best.is_none_or(|b| distance < b.distance) {
                best = Some(SeamProjection {
                    distance,
                    arc: self.cumulative[seg] + along,
                    offset: (t[0] * dy - t[1] * dx).signum() * distance,
                    tangent: t,
                });
            }
        }
        best
    }

    /// Distance from `p` to the centreline, or infinity beyond `radius`.
    pub fn distance_within(&self, p: [f64; 2], radius: f64) -> f64 {
        match self.project_within(p, radius) {
            Some(proj) if proj.distance <= radius => proj.distance,
            _ => f64::INFINITY,
        }
    }

    /// Vertical extent of the centreline.
    pub fn y_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[1]), hi.max(p[1]))
            })
    }
}

/// Random-walk seam across the texture.
///
/// Vertices sit every [`SEAM_STEP_PX`] along x, inset by `width` from both
/// sides; the walk stays within `h/8` of the mid-line and moves at most
/// `width/2` per step.
pub fn gen_seam_path(seed: u64, dims: (u32, u32), width: f64) -> Result<SeamPath> {
    let (w, h) = dims;
    if w < 256 || h < 256 {
        return Err(Error::Config(format!("texture dims {w}x{h} are below 256x256")));
    }
    if !(width >= 4.0 && width <= h as f64 / 4.0) {
        return Err(Error::Config(format!(
            "seam width {width} outside [4, {}]",
            h as f64 / 4.0
        )));
    }
    let mut rng = SeedKey::new(seed)
        .tag("seam-path")
        .u64(w as u64)
        .u64(h as u64)
        .u64(width.to_bits())
        .stream();
    let mid = h as f64 / 2.0;
    let band = h as f64 / 8.0;
    let max_step = width / 2.0;
    let count = ((w as f64 - 2.0 * width) / SEAM_STEP_PX).floor() as usize + 1;

    let mut points = Vec::with_capacity(count);
    let mut y = mid + rng.uniform(-band / 2.0, band / 2.0);
    let mut velocity = 0.0;
    for i in 0..count {
        points.push([width + SEAM_STEP_PX * i as f64, y]);
        // Momentum keeps the bead from zig-zagging at every vertex.
        velocity = (0.7 * velocity + rng.uniform(-max_step / 4.0, max_step / 4.0)).clamp(-max_step, max_step);
        let next = (y + velocity).clamp(mid - band, mid + band);
        velocity = next - y;
        y = next;
    }
    SeamPath::new(points, width)
}

/// Paints the weld bead into the normal, AO and albedo maps.
///
/// Inside the band (distance to the centreline `<= width/2`) the normals
/// follow a domed bead with crescent ripples, AO falls to 0.6 at the band
/// edges and albedo is tinted toward the bead colour. A [`GAP_SHADOW_PX`]
/// fringe just outside the band darkens AO to 0.4×. Nothing farther than
/// `width/2 + 2` px from the centreline is touched.
pub fn apply_seam(mut stack: TextureStack, path: &SeamPath, seed: u64) -> TextureStack {
    let period = SeedKey::new(seed).tag("seam-ripple").stream().uniform(8.0, 16.0);
    let half = path.half_width();
    let reach = half + GAP_SHADOW_PX;
    let (w, h) = stack.dims();
    let (ylo, yhi) = path.y_range();
    let y0 = (ylo - reach - 1.0).floor().max(0.0) as u32;
    let y1 = ((yhi + reach + 1.0).ceil() as u32 + 1).min(h);

    let edits: Vec<(usize, Option<([f32; 3], [f32; 3])>, f32)> = (y0..y1)
        .into_par_iter()
        .flat_map_iter(|y| {
            let stack = &stack;
            (0..w).filter_map(move |x| {
                let p = [x as f64 + 0.5, y as f64 + 0.5];
                let proj = path.project_within(p, reach)?;
                if proj.distance > reach {
                    return None;
                }
                let i = stack.index(x, y);
                if proj.distance > half {
                    return Some((i, None, stack.ao[i] * 0.4));
                }
                let u = proj.offset / half;
                let profile = 1.0 - u * u;
                let k = 2.0 * PI / period;
                let phase = k * (proj.arc - CRESCENT_BEND * half * u * u);
                let (sin_p, cos_p) = phase.sin_cos();
                let dh_ds = -RIPPLE_HEIGHT_PX * profile * sin_p * k;
                let dh_dn = -2.0 * u / half * (BEAD_HEIGHT_PX + RIPPLE_HEIGHT_PX * cos_p)
                    + RIPPLE_HEIGHT_PX * profile * sin_p * k * 2.0 * CRESCENT_BEND * u;
                let t = proj.tangent;
                let m = [-t[1], t[0]];
                let gx = dh_ds * t[0] + dh_dn * m[0];
                let gy = dh_ds * t[1] + dh_dn * m[1];
                let n0 = stack.normal[i];
                let normal = unit_normal([n0[0] as f64 - gx, n0[1] as f64 - gy, n0[2] as f64]);
                let tint = 0.35 + 0.3 * profile;
                let a0 = stack.albedo[i];
                let albedo = std::array::from_fn(|c| {
                    let a = a0[c] as f64;
                    (a + (a * BEAD_TINT[c] - a) * tint) as f32
                });
                let ao = (stack.ao[i] as f64 * (1.0 - 0.4 * u * u)) as f32;
                Some((i, Some((albedo, normal)), ao))
            })
        })
        .collect();

    for (i, bead, ao) in edits {
        if let Some((albedo, normal)) = bead {
            stack.albedo[i] = albedo;
            stack.normal[i] = normal;
        }
        stack.ao[i] = ao;
    }
    stack
}

/// A camera/defect anchor on the seam centreline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationPoint {
    pub index: usize,
    pub position: [f64; 2],
    pub tangent: [f64; 2],
    pub arc_length: f64,
}

/// Minimum arc-length spacing between locations, as a fraction of seam width.
pub const LOCATION_SPACING_FACTOR: f64 = 0.5;
/// Arc length kept clear at each end of the seam, in seam widths, so that
/// defects anchored at a location stay on the seam.
pub const LOCATION_END_MARGIN_FACTOR: f64 = 4.0;

/// Places `n` anchors along the seam, ordered by arc length and at least
/// `LOCATION_SPACING_FACTOR * width` apart.
pub fn sample_locations(path: &SeamPath, n: usize, seed: u64) -> Result<Vec<LocationPoint>> {
    if n == 0 {
        return Err(Error::Config("location count must be at least 1".into()));
    }
    let spacing = LOCATION_SPACING_FACTOR * path.width();
    let margin = LOCATION_END_MARGIN_FACTOR * path.width();
    let usable = path.length() - 2.0 * margin;
    let needed = (n - 1) as f64 * spacing;
    if usable < 0.0 || needed > usable {
        let limit = if usable < 0.0 {
            0
        } else {
            (usable / spacing).floor() as usize + 1
        };
        return Err(Error::Config(format!(
            "cannot place {n} locations {spacing} px apart on {usable:.1} px of usable seam; limit is {limit}"
        )));
    }
    let slack = usable - needed;
    let mut rng = SeedKey::new(seed).tag("locations").u64(n as u64).stream();
    let mut offsets: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, slack)).collect();
    offsets.sort_by(f64::total_cmp);
    Ok(offsets
        .into_iter()
        .enumerate()
        .map(|(index, u)| {
            let arc = margin + u + index as f64 * spacing;
            let (position, tangent) = path.point_at(arc);
            LocationPoint {
                index,
                position,
                tangent,
                arc_length: arc,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(width: f64) -> SeamPath {
        let pts = (0..=30).map(|i| [40.0 + 16.0 * i as f64, 128.0]).collect();
        SeamPath::new(pts, width).unwrap()
    }

    #[test]
    fn seam_path_properties() {
        let p = gen_seam_path(7, (2048, 2048), 34.0).unwrap();
        assert_eq!(p.width(), 34.0);
        assert!(p.points().windows(2).all(|w| w[1][0] > w[0][0]));
        p.check_within((2048, 2048)).unwrap();
        for w in p.points().windows(2) {
            assert!((w[1][1] - w[0][1]).abs() <= 17.0 + 1e-9);
        }
        for q in p.points() {
            assert!((q[1] - 1024.0).abs() <= 256.0 + 1e-9);
        }
        assert_eq!(p, gen_seam_path(7, (2048, 2048), 34.0).unwrap());
        assert_ne!(p.points(), gen_seam_path(8, (2048, 2048), 34.0).unwrap().points());
    }

    #[test]
    fn seam_path_rejects_bad_config() {
        assert!(gen_seam_path(0, (200, 2048), 34.0).is_err());
        assert!(gen_seam_path(0, (512, 512), 3.0).is_err());
        assert!(gen_seam_path(0, (512, 512), 129.0).is_err());
        assert!(SeamPath::new(vec![[0.0, 0.0], [0.0, 1.0]], 4.0).is_err());
        assert!(SeamPath::new(vec![[0.0, 0.0], [1.0, 1.0]], 0.0).is_err());
    }

    #[test]
    fn projection_on_straight_path() {
        let p = straight(34.0);
        let proj = p.project_within([100.0, 138.0], 20.0).unwrap();
        assert!((proj.distance - 10.0).abs() < 1e-12);
        assert!((proj.offset - 10.0).abs() < 1e-12);
        assert!((proj.arc - 60.0).abs() < 1e-12);
        let above = p.project_within([100.0, 120.0], 20.0).unwrap();
        assert!((above.offset + 8.0).abs() < 1e-12);
    }

    #[test]
    fn projection_matches_brute_force() {
        let p = gen_seam_path(3, (512, 512), 20.0).unwrap();
        for k in 0..400 {
            let q = [(k * 37 % 512) as f64 + 0.5, 200.0 + (k * 13 % 112) as f64];
            let brute = p
                .points()
                .windows(2)
                .map(|w| {
                    let (a, b) = (w[0], w[1]);
                    let d = [b[0] - a[0], b[1] - a[1]];
                    let t =
                        (((q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
                    (q[0] - a[0] - t * d[0]).hypot(q[1] - a[1] - t * d[1])
                })
                .fold(f64::INFINITY, f64::min);
            if brute <= 12.0 {
                let got = p.project_within(q, 12.0).unwrap().distance;
                assert!((got - brute).abs() < 1e-9, "{q:?}: {got} vs {brute}");
            }
        }
    }

    #[test]
    fn point_at_walks_the_polyline() {
        let p = straight(10.0);
        let (pos, t) = p.point_at(33.0);
        assert_eq!(pos, [73.0, 128.0]);
        assert_eq!(t, [1.0, 0.0]);
        assert_eq!(p.point_at(1e9).0, [520.0, 128.0]);
    }

    #[test]
    fn seam_is_local_and_keeps_normals_unit() {
        let base = TextureStack::uniform(560, 256, [0.6; 3], 0.5, 0.5);
        let path = straight(34.0);
        let out = apply_seam(base.clone(), &path, 1);
        out.validate().unwrap();
        let mut band_ao = (0.0, 0);
        let mut outside_ao = (0.0, 0);
        for y in 0..256 {
            for x in 0..560 {
                let i = out.index(x, y);
                let d = path.distance_within([x as f64 + 0.5, y as f64 + 0.5], 40.0);
                if d > 19.0 {
                    assert!(out.texel_identical(&base, i), "pixel ({x},{y}) at {d} changed");
                    outside_ao.0 += out.ao[i] as f64;
                    outside_ao.1 += 1;
                } else if d <= 17.0 {
                    band_ao.0 += out.ao[i] as f64;
                    band_ao.1 += 1;
                    assert!(out.ao[i] >= 0.6 - 1e-6);
                }
            }
        }
        assert!(band_ao.0 / band_ao.1 as f64 <= outside_ao.0 / outside_ao.1 as f64 - 0.05);
        // Bead ripple actually perturbs normals.
        let i = out.index(100, 128 + 8);
        assert_ne!(out.normal[i], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn locations_for_default_grid() {
        let p = gen_seam_path(7, (2048, 2048), 34.0).unwrap();
        let locs = sample_locations(&p, 68, 11).unwrap();
        assert_eq!(locs.len(), 68);
        for (i, l) in locs.iter().enumerate() {
            assert_eq!(l.index, i);
            let proj = p.project_within(l.position, 1.0).unwrap();
            assert!(proj.distance < 1e-9);
        }
        for w in locs.windows(2) {
            assert!(w[1].arc_length - w[0].arc_length >= 17.0 - 1e-9);
        }
        assert_eq!(locs, sample_locations(&p, 68, 11).unwrap());
    }

    #[test]
    fn single_location_and_unsatisfiable() {
        let p = straight(34.0);
        assert_eq!(sample_locations(&p, 1, 0).unwrap().len(), 1);
        let err = sample_locations(&p, 500, 0).unwrap_err().to_string();
        assert!(err.contains("limit is"), "{err}");
        assert!(sample_locations(&p, 0, 0).is_err());
    }
}
