//! Seeded 2D training-time augmentation.
//!
//! Geometry is applied in a fixed order (flips, then rotation, shear, zoom
//! and shift about the image centre) followed by contrast. Flips are exact
//! pixel permutations; the four affine steps are composed into a single
//! bilinear resample with edge-replicated borders.

use image::{Rgb32FImage, RgbImage};
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedKey;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub hflip: bool,
    pub vflip: bool,
    pub rotation_deg: f64,
    pub shear_deg: f64,
    pub zoom: f64,
    /// Fractions of width and height.
    pub shift: [f64; 2],
    pub contrast: f64,
}

impl AugmentSpec {
    pub const IDENTITY: AugmentSpec = AugmentSpec {
        hflip: false,
        vflip: false,
        rotation_deg: 0.0,
        shear_deg: 0.0,
        zoom: 1.0,
        shift: [0.0, 0.0],
        contrast: 1.0,
    };

    fn geometry_is_identity(&self) -> bool {
        self.rotation_deg == 0.0 && self.shear_deg == 0.0 && self.zoom == 1.0 && self.shift == [0.0, 0.0]
    }

    /// Checks that every value lies within `policy`'s bounds.
    pub fn within(&self, policy: &AugmentPolicy) -> bool {
        let sym = |v: f64, b: f64| v.abs() <= b;
        sym(self.rotation_deg, policy.rotation_deg)
            && sym(self.shear_deg, policy.shear_deg)
            && sym(self.zoom - 1.0, policy.zoom)
            && sym(self.shift[0], policy.shift)
            && sym(self.shift[1], policy.shift)
            && sym(self.contrast - 1.0, policy.contrast)
            && (policy.hflip_prob > 0.0 || !self.hflip)
            && (policy.vflip_prob > 0.0 || !self.vflip)
    }
}

/// Symmetric sampling bounds for each augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentPolicy {
    pub rotation_deg: f64,
    pub shear_deg: f64,
    pub zoom: f64,
    pub shift: f64,
    pub contrast: f64,
    pub hflip_prob: f64,
    pub vflip_prob: f64,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        AugmentPolicy {
            rotation_deg: 15.0,
            shear_deg: 10.0,
            zoom: 0.1,
            shift: 0.1,
            contrast: 0.2,
            hflip_prob: 0.5,
            vflip_prob: 0.5,
        }
    }
}

impl AugmentPolicy {
    /// A policy that always yields the identity spec.
    pub fn none() -> Self {
        AugmentPolicy {
            rotation_deg: 0.0,
            shear_deg: 0.0,
            zoom: 0.0,
            shift: 0.0,
            contrast: 0.0,
            hflip_prob: 0.0,
            vflip_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = [self.rotation_deg, self.shear_deg, self.zoom, self.shift, self.contrast];
        if !bounds.iter().all(|b| b.is_finite() && *b >= 0.0) {
            return Err(Error::Config(format!(
                "augment bounds must be finite and non-negative: {self:?}"
            )));
        }
        if self.zoom >= 1.0 || self.contrast > 1.0 || self.shear_deg >= 90.0 {
            return Err(Error::Config(format!(
                "augment zoom must be < 1, contrast <= 1 and shear < 90: {self:?}"
            )));
        }
        if !(0.0..=1.0).contains(&self.hflip_prob) || !(0.0..=1.0).contains(&self.vflip_prob) {
            return Err(Error::Config(format!("flip probabilities must be in [0, 1]: {self:?}")));
        }
        Ok(())
    }
}

/// Draws the spec for one image in one epoch. Pure in its arguments.
pub fn sample_augment_spec(policy: &AugmentPolicy, master_seed: u64, epoch: u64, image_id: &str) -> AugmentSpec {
    let mut rng = SeedKey::new(master_seed)
        .tag("augment")
        .u64(epoch)
        .tag(image_id)
        .stream();
    let mut sym = |b: f64| if b > 0.0 { rng.uniform(-b, b) } else { 0.0 };
    let rotation_deg = sym(policy.rotation_deg);
    let shear_deg = sym(policy.shear_deg);
    let zoom = 1.0 + sym(policy.zoom);
    let shift = [sym(policy.shift), sym(policy.shift)];
    let contrast = 1.0 + sym(policy.contrast);
    let hflip = policy.hflip_prob > 0.0 && rng.bernoulli(policy.hflip_prob);
    let vflip = policy.vflip_prob > 0.0 && rng.bernoulli(policy.vflip_prob);
    AugmentSpec {
        hflip,
        vflip,
        rotation_deg,
        shear_deg,
        zoom,
        shift,
        contrast,
    }
}

/// Applies `spec` to a float RGB image with values in `[0, 1]`.
pub fn augment(image: &Rgb32FImage, spec: &AugmentSpec) -> Rgb32FImage {
    let mut out = flip(image, spec.hflip, spec.vflip);
    if !spec.geometry_is_identity() {
        out = warp(&out, spec);
    }
    if spec.contrast != 1.0 {
        let f = spec.contrast as f32;
        for v in out.iter_mut() {
            *v = (0.5 + f * (*v - 0.5)).clamp(0.0, 1.0);
        }
    }
    out
}

/// 8-bit version of [`augment`]. Flips and the identity stay exact; other
/// steps round through float.
pub fn augment_rgb8(image: &RgbImage, spec: &AugmentSpec) -> RgbImage {
    let flipped = flip(image, spec.hflip, spec.vflip);
    if spec.geometry_is_identity() && spec.contrast == 1.0 {
        return flipped;
    }
    let float = Rgb32FImage::from_fn(flipped.width(), flipped.height(), |x, y| {
        image::Rgb(flipped.get_pixel(x, y).0.map(|v| v as f32 / 255.0))
    });
    let rest = AugmentSpec {
        hflip: false,
        vflip: false,
        ..*spec
    };
    let done = augment(&float, &rest);
    RgbImage::from_fn(done.width(), done.height(), |x, y| {
        image::Rgb(
            done.get_pixel(x, y)
                .0
                .map(|v| (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8),
        )
    })
}

fn flip<P: image::Pixel>(
    image: &image::ImageBuffer<P, Vec<P::Subpixel>>,
    h: bool,
    v: bool,
) -> image::ImageBuffer<P, Vec<P::Subpixel>> {
    let mut out = image.clone();
    if h {
        image::imageops::flip_horizontal_in_place(&mut out);
    }
    if v {
        image::imageops::flip_vertical_in_place(&mut out);
    }
    out
}

/// Forward map `p' = Z·S·R·(p - c) + c + t`, inverted per output pixel.
/// With y pointing down, positive rotation turns the content clockwise.
fn warp(image: &Rgb32FImage, spec: &AugmentSpec) -> Rgb32FImage {
    let (w, h) = image.dimensions();
    let (s, c) = spec.rotation_deg.to_radians().sin_cos();
    let rotation = Matrix2::new(c, -s, s, c);
    let shear = Matrix2::new(1.0, spec.shear_deg.to_radians().tan(), 0.0, 1.0);
    let forward = Matrix2::from_diagonal_element(spec.zoom) * shear * rotation;
    let inverse = forward
        .try_inverse()
        .expect("zoom > 0 and |shear| < 90 keep the map invertible");
    let centre = [w as f64 / 2.0, h as f64 / 2.0];
    let t = [spec.shift[0] * w as f64, spec.shift[1] * h as f64];
    Rgb32FImage::from_fn(w, h, |x, y| {
        let q = [x as f64 + 0.5 - centre[0] - t[0], y as f64 + 0.5 - centre[1] - t[1]];
        let u = inverse[(0, 0)] * q[0] + inverse[(0, 1)] * q[1] + centre[0] - 0.5;
        let v = inverse[(1, 0)] * q[0] + inverse[(1, 1)] * q[1] + centre[1] - 0.5;
        image::Rgb(bilinear_clamped(image, u, v))
    })
}

fn bilinear_clamped(image: &Rgb32FImage, u: f64, v: f64) -> [f32; 3] {
    let (w, h) = image.dimensions();
    let u = u.clamp(0.0, (w - 1) as f64);
    let v = v.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (u.floor() as u32, v.floor() as u32);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = ((u - x0 as f64) as f32, (v - y0 as f64) as f32);
    let p = |x, y| image.get_pixel(x, y).0;
    let (a, b, c, d) = (p(x0, y0), p(x1, y0), p(x0, y1), p(x1, y1));
    std::array::from_fn(|k| {
        let top = a[k] + (b[k] - a[k]) * fx;
        let bottom = c[k] + (d[k] - c[k]) * fx;
        top + (bottom - top) * fy
    })
}
