use std::sync::OnceLock;

use image::RgbImage;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::shade::RadianceField;
use crate::error::{Error, Result};
use crate::texgen::PixelRect;

/// Linear radiance of everything outside the plate.
pub const BACKDROP_RADIANCE: f32 = 0.02;

/// Orbit camera looking at a point on the plate.
///
/// Azimuth turns the view about the plate normal; at elevation 90° and
/// azimuth 0 the image axes line up with the texture axes. Distance is in
/// plane widths, and the focal length is fixed so that at distance 1 a
/// top-down view spans exactly one plane width across the output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub distance: f64,
    /// Look-at point in plane units.
    pub target: [f64; 2],
    pub output: (u32, u32),
}

impl CameraSpec {
    /// Straight-down view of the plate centre that fills the output width.
    pub fn top_down(plane_dims: (u32, u32), output: (u32, u32)) -> Self {
        CameraSpec {
            azimuth_deg: 0.0,
            elevation_deg: 90.0,
            distance: 1.0,
            target: [0.5, 0.5 * plane_dims.1 as f64 / plane_dims.0 as f64],
            output,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..360.0).contains(&self.azimuth_deg)
            && (20.0..=90.0).contains(&self.elevation_deg)
            && self.distance > 0.5
            && self.distance <= 4.0
            && self.target.iter().all(|v| v.is_finite())
            && self.output.0 >= 64
            && self.output.1 >= 64;
        if !ok {
            return Err(Error::Config(format!("camera out of range: {self:?}")));
        }
        Ok(())
    }

    fn rig(&self) -> Rig {
        let (sa, ca) = sin_cos_deg(self.azimuth_deg);
        let (se, ce) = sin_cos_deg(self.elevation_deg);
        let right = Vector3::new(ca, sa, 0.0);
        // Ground direction that maps to image-down in a top-down view.
        let ground = Vector3::new(-sa, ca, 0.0);
        let back = ground * ce + Vector3::new(0.0, 0.0, se);
        let centre = Vector3::new(self.target[0], self.target[1], 0.0) + back * self.distance;
        let forward = -back;
        let down = ground * se - Vector3::new(0.0, 0.0, ce);
        Rig {
            centre,
            right,
            down,
            forward,
            focal: self.output.0 as f64,
            cx: self.output.0 as f64 / 2.0,
            cy: self.output.1 as f64 / 2.0,
        }
    }

    /// Texel rectangle of a `plane_dims` texture that covers everything this
    /// camera can sample, with a margin for bilinear taps. The whole texture
    /// when some view ray does not meet the plane.
    pub fn footprint(&self, plane_dims: (u32, u32)) -> PixelRect {
        let (tw, th) = plane_dims;
        let full = PixelRect {
            x0: 0,
            y0: 0,
            x1: tw,
            y1: th,
        };
        let rig = self.rig();
        let (ow, oh) = (self.output.0 as f64, self.output.1 as f64);
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for (px, py) in [(0.0, 0.0), (ow, 0.0), (0.0, oh), (ow, oh)] {
            let dir = rig.forward + rig.right * ((px - rig.cx) / rig.focal) + rig.down * ((py - rig.cy) / rig.focal);
            if !(dir.z < 0.0) {
                return full;
            }
            let t = -rig.centre.z / dir.z;
            let p = [rig.centre.x + t * dir.x, rig.centre.y + t * dir.y];
            for k in 0..2 {
                lo[k] = lo[k].min(p[k] * tw as f64);
                hi[k] = hi[k].max(p[k] * tw as f64);
            }
        }
        let clip = |v: f64, n: u32| v.clamp(0.0, n as f64) as u32;
        PixelRect {
            x0: clip(lo[0].floor() - 2.0, tw),
            y0: clip(lo[1].floor() - 2.0, th),
            x1: clip(hi[0].ceil() + 2.0, tw),
            y1: clip(hi[1].ceil() + 2.0, th),
        }
    }

    /// Plane-to-image homography; errors when it is numerically singular.
    pub fn homography(&self) -> Result<Homography> {
        self.validate()?;
        let rig = self.rig();
        // Image (px, py, 1) → ray direction.
        let a = Matrix3::from_columns(&[
            rig.right / rig.focal,
            rig.down / rig.focal,
            rig.forward - rig.right * (rig.cx / rig.focal) - rig.down * (rig.cy / rig.focal),
        ]);
        let c = rig.centre;
        // Ray/plane intersection, homogeneous: (X·w, Y·w, w) with w = dir_z.
        let image_to_plane = Matrix3::from_rows(&[
            (a.row(2) * c.x - a.row(0) * c.z),
            (a.row(2) * c.y - a.row(1) * c.z),
            a.row(2).into_owned(),
        ]);
        let scale = image_to_plane.abs().max().powi(3);
        let det = image_to_plane.determinant();
        if !(det.abs() > 1e-12 * scale) {
            return Err(Error::Generation(format!(
                "degenerate homography for azimuth={} elevation={} distance={}",
                self.azimuth_deg, self.elevation_deg, self.distance
            )));
        }
        let plane_to_image = image_to_plane
            .try_inverse()
            .ok_or_else(|| Error::Generation(format!("non-invertible homography for {self:?}")))?;
        Ok(Homography {
            plane_to_image,
            image_to_plane,
        })
    }
}

/// Projective map between plane units and output pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub plane_to_image: Matrix3<f64>,
    pub image_to_plane: Matrix3<f64>,
}

impl Homography {
    pub fn map_plane(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        apply(&self.plane_to_image, p)
    }

    pub fn map_image(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        apply(&self.image_to_plane, p)
    }
}

fn apply(m: &Matrix3<f64>, p: [f64; 2]) -> Option<[f64; 2]> {
    let v = m * Vector3::new(p[0], p[1], 1.0);
    (v.z.abs() > f64::EPSILON).then(|| [v.x / v.z, v.y / v.z])
}

struct Rig {
    centre: Vector3<f64>,
    right: Vector3<f64>,
    down: Vector3<f64>,
    forward: Vector3<f64>,
    focal: f64,
    cx: f64,
    cy: f64,
}

/// `sin`/`cos` of an angle in degrees, exact at multiples of 90°.
fn sin_cos_deg(deg: f64) -> (f64, f64) {
    if deg % 90.0 == 0.0 {
        match (deg / 90.0).rem_euclid(4.0) as u8 {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        deg.to_radians().sin_cos()
    }
}

/// Clamp to `[0, 1]`, gamma 1/2.2, round half up to 8 bits.
pub fn tone_map_reference(v: f32) -> u8 {
    let g = (v.clamp(0.0, 1.0) as f64).powf(1.0 / 2.2);
    (g * 255.0 + 0.5).floor() as u8
}

/// Lookup tables equivalent to [`tone_map_reference`]: `thresholds[k]` is
/// the smallest input reaching level `k`, and `buckets` gives the level at
/// the start of each run of 2^16 consecutive float bit patterns below 1.0.
struct ToneTable {
    thresholds: [f32; 257],
    buckets: Vec<u8>,
}

const TONE_BUCKET_SHIFT: u32 = 16;

fn tone_table() -> &'static ToneTable {
    static TABLE: OnceLock<ToneTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut thresholds = [f32::INFINITY; 257];
        thresholds[0] = 0.0;
        // Non-negative floats order like their bit patterns.
        for (k, slot) in thresholds.iter_mut().enumerate().take(256).skip(1) {
            let (mut lo, mut hi) = (0u32, 1.0f32.to_bits());
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if tone_map_reference(f32::from_bits(mid)) as usize >= k {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            *slot = f32::from_bits(lo);
        }
        let buckets = (0..=(1.0f32.to_bits() >> TONE_BUCKET_SHIFT))
            .map(|b| tone_map_reference(f32::from_bits(b << TONE_BUCKET_SHIFT)))
            .collect();
        ToneTable { thresholds, buckets }
    })
}

/// Same result as [`tone_map_reference`], by table lookup.
#[inline]
pub fn tone_map(v: f32) -> u8 {
    if !(v > 0.0) {
        return 0;
    }
    if v >= 1.0 {
        return 255;
    }
    let t = tone_table();
    let mut level = t.buckets[(v.to_bits() >> TONE_BUCKET_SHIFT) as usize] as usize;
    while v >= t.thresholds[level + 1] {
        level += 1;
    }
    level as u8
}

/// Renders the plate as seen by `camera`: each output pixel centre is cast
/// onto the plane, the radiance field is sampled bilinearly, and the result
/// is tone mapped. Rays that miss the plate show the backdrop.
pub fn project<F: RadianceField>(field: &F, camera: &CameraSpec) -> Result<RgbImage> {
    camera.homography()?;
    let rig = camera.rig();
    let (tw, th) = field.dims();
    let texels_per_unit = tw as f64;
    let plane_h = th as f64 / tw as f64;
    let (ow, oh) = camera.output;
    let backdrop = tone_map(BACKDROP_RADIANCE);

    let mut buf = vec![0u8; ow as usize * oh as usize * 3];
    buf.par_chunks_mut(ow as usize * 3).enumerate().for_each(|(j, row)| {
        let yn = (j as f64 + 0.5 - rig.cy) / rig.focal;
        for i in 0..ow as usize {
            let xn = (i as f64 + 0.5 - rig.cx) / rig.focal;
            let dir = rig.forward + rig.right * xn + rig.down * yn;
            let px = &mut row[i * 3..i * 3 + 3];
            if !(dir.z < 0.0) {
                px.fill(backdrop);
                continue;
            }
            let t = -rig.centre.z / dir.z;
            let x = rig.centre.x + t * dir.x;
            let y = rig.centre.y + t * dir.y;
            if !(0.0..=1.0).contains(&x) || !(0.0..=plane_h).contains(&y) {
                px.fill(backdrop);
                continue;
            }
            let rgb = bilinear(field, x * texels_per_unit - 0.5, y * texels_per_unit - 0.5);
            for c in 0..3 {
                px[c] = tone_map(rgb[c]);
            }
        }
    });
    Ok(RgbImage::from_raw(ow, oh, buf).expect("buffer sized to output"))
}

fn bilinear<F: RadianceField>(field: &F, u: f64, v: f64) -> [f32; 3] {
    let (w, h) = field.dims();
    let (x0, y0) = (u.floor(), v.floor());
    let (fx, fy) = (u - x0, v - y0);
    let clamp = |k: f64, n: u32| k.clamp(0.0, (n - 1) as f64) as u32;
    let (xa, xb) = (clamp(x0, w), clamp(x0 + 1.0, w));
    let (ya, yb) = (clamp(y0, h), clamp(y0 + 1.0, h));
    let (p00, p10, p01, p11) = (
        field.radiance(xa, ya),
        field.radiance(xb, ya),
        field.radiance(xa, yb),
        field.radiance(xb, yb),
    );
    std::array::from_fn(|c| {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        (top * (1.0 - fy) + bottom * fy) as f32
    })
}

#[cfg(test)]
mod tests {
    use super::super::shade::RadianceImage;
    use super::*;

    fn gradient(w: u32, h: u32) -> RadianceImage {
        let data = (0..h)
            .flat_map(|y| {
                (0..w).map(move |x| {
                    [
                        x as f32 / w as f32,
                        y as f32 / h as f32,
                        ((x * 7 + y * 13) % 17) as f32 / 17.0,
                    ]
                })
            })
            .collect();
        RadianceImage {
            width: w,
            height: h,
            data,
        }
    }

    #[test]
    fn tone_map_pins() {
        assert_eq!(tone_map(-1.0), 0);
        assert_eq!(tone_map(0.0), 0);
        assert_eq!(tone_map(1.0), 255);
        assert_eq!(tone_map(7.5), 255);
        // 0.5^(1/2.2) * 255 = 186.08...
        assert_eq!(tone_map(0.5), 186);
        assert_eq!(tone_map_reference(0.5), 186);
    }

    #[test]
    fn top_down_centre_matches_input() {
        let field = RadianceImage {
            width: 256,
            height: 256,
            data: vec![[0.25, 0.5, 0.75]; 256 * 256],
        };
        let cam = CameraSpec::top_down((256, 256), (198, 124));
        let img = project(&field, &cam).unwrap();
        let c = img.get_pixel(99, 62);
        for (k, v) in [0.25f32, 0.5, 0.75].iter().enumerate() {
            assert!((c[k] as i32 - tone_map(*v) as i32).abs() <= 1);
        }
    }

    #[test]
    fn top_down_fills_width() {
        let field = gradient(128, 128);
        let img = project(&field, &CameraSpec::top_down((128, 128), (128, 80))).unwrap();
        // Plane spans the full width; left column samples the first texels.
        let left = img.get_pixel(0, 40);
        let right = img.get_pixel(127, 40);
        assert!(left[0] < 20 && right[0] > 240, "{left:?} {right:?}");
    }

    #[test]
    fn azimuth_180_rotates_exactly() {
        let field = gradient(200, 160);
        let mut cam = CameraSpec::top_down((200, 160), (96, 64));
        cam.distance = 0.8;
        let a = project(&field, &cam).unwrap();
        cam.azimuth_deg = 180.0;
        let b = project(&field, &cam).unwrap();
        let rotated = image::imageops::rotate180(&a);
        assert_eq!(rotated, b);
    }

    #[test]
    fn homography_round_trip_and_agrees_with_rays() {
        let cam = CameraSpec {
            azimuth_deg: 33.0,
            elevation_deg: 41.0,
            distance: 1.3,
            target: [0.4, 0.6],
            output: (320, 200),
        };
        let h = cam.homography().unwrap();
        let centre = h.map_image([160.0, 100.0]).unwrap();
        assert!((centre[0] - 0.4).abs() < 1e-9 && (centre[1] - 0.6).abs() < 1e-9);
        for p in [[0.0, 0.0], [319.0, 12.0], [57.5, 199.0]] {
            let q = h.map_plane(h.map_image(p).unwrap()).unwrap();
            assert!((q[0] - p[0]).abs() < 1e-6 && (q[1] - p[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let field = gradient(64, 64);
        let cam = CameraSpec {
            azimuth_deg: 100.0,
            elevation_deg: 25.0,
            distance: 2.0,
            target: [0.5, 0.5],
            output: (64, 64),
        };
        assert_eq!(project(&field, &cam).unwrap(), project(&field, &cam).unwrap());
        assert!(project(
            &field,
            &CameraSpec {
                elevation_deg: 10.0,
                ..cam
            }
        )
        .is_err());
        assert!(project(
            &field,
            &CameraSpec {
                output: (32, 64),
                ..cam
            }
        )
        .is_err());
        assert!(project(&field, &CameraSpec { distance: 0.5, ..cam }).is_err());
    }

    #[test]
    fn tone_map_table_matches_reference() {
        let t = &tone_table().thresholds;
        for k in 1..256 {
            let b = t[k].to_bits();
            for v in [f32::from_bits(b - 1), t[k], f32::from_bits(b + 1)] {
                assert_eq!(tone_map(v), tone_map_reference(v), "{v}");
            }
        }
        for b in 1..=(1.0f32.to_bits() >> TONE_BUCKET_SHIFT) {
            let bits = b << TONE_BUCKET_SHIFT;
            for v in [f32::from_bits(bits - 1), f32::from_bits(bits), f32::from_bits(bits + 1)] {
                assert_eq!(tone_map(v), tone_map_reference(v), "{v}");
            }
        }
        for i in 0..=200_000u32 {
            let v = i as f32 / 150_000.0 - 0.1;
            assert_eq!(tone_map(v), tone_map_reference(v), "{v}");
        }
        assert_eq!(tone_map(f32::NAN), tone_map_reference(f32::NAN));
        assert_eq!(tone_map(f32::INFINITY), 255);
    }

    #[test]
    fn footprint_covers_sampled_texels() {
        let cam = CameraSpec {
            azimuth_deg: 71.0,
            elevation_deg: 38.0,
            distance: 0.7,
            target: [0.45, 0.5],
            output: (200, 120),
        };
        let dims = (1024, 1024);
        let rect = cam.footprint(dims);
        assert!(rect.x1 - rect.x0 < 1024 || rect.y1 - rect.y0 < 1024);
        let h = cam.homography().unwrap();
        for j in 0..120 {
            for i in 0..200 {
                let p = h.map_image([i as f64 + 0.5, j as f64 + 0.5]).unwrap();
                let (u, v) = (p[0] * 1024.0 - 0.5, p[1] * 1024.0 - 0.5);
                if (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]) {
                    for (x, y) in [(u.floor(), v.floor()), (u.floor() + 1.0, v.floor() + 1.0)] {
                        let (x, y) = (x.clamp(0.0, 1023.0) as u32, y.clamp(0.0, 1023.0) as u32);
                        assert!(rect.contains(x, y), "({x},{y}) outside {rect:?}");
                    }
                }
            }
        }
    }
}
