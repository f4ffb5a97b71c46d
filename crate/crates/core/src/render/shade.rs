use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::texgen::{PixelRect, TextureStack};

pub const DEFAULT_AMBIENT: f64 = 0.15;
/// Specular reflectance of non-metals.
const DIELECTRIC_F0: f64 = 0.04;

/// A point light above the plate. Positions are in plane units: one unit is
/// the texture width, the origin is the top-left corner, `z` points toward
/// the viewer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightSpec {
    pub position: [f64; 3],
    pub intensity: f64,
    pub ambient: f64,
}

impl LightSpec {
    pub fn new(position: [f64; 3], intensity: f64) -> Self {
        LightSpec {
            position,
            intensity,
            ambient: DEFAULT_AMBIENT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.position[2] > 0.0) || !self.position.iter().all(|v| v.is_finite()) {
            return Err(Error::Config(format!(
                "light must sit above the plate, got {:?}",
                self.position
            )));
        }
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(Error::Config(format!(
                "light intensity must be non-negative, got {}",
                self.intensity
            )));
        }
        if !(0.0..=1.0).contains(&self.ambient) {
            return Err(Error::Config(format!(
                "ambient must be in [0, 1], got {}",
                self.ambient
            )));
        }
        Ok(())
    }
}

/// Anything the camera can sample linear radiance from, texel by texel.
pub trait RadianceField: Sync {
    fn dims(&self) -> (u32, u32);
    fn radiance(&self, x: u32, y: u32) -> [f32; 3];
}

/// Linear, unclamped per-texel radiance.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[f32; 3]>,
}

impl RadianceField for RadianceImage {
    fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    fn radiance(&self, x: u32, y: u32) -> [f32; 3] {
        self.data[y as usize * self.width as usize + x as usize]
    }
}

/// Shades texels on demand instead of materializing a [`RadianceImage`].
/// Produces bit-identical values to [`shade`].
pub struct LazyShade<'a> {
    pub stack: &'a TextureStack,
    pub light: LightSpec,
}

impl RadianceField for LazyShade<'_> {
    fn dims(&self) -> (u32, u32) {
        self.stack.dims()
    }

    #[inline]
    fn radiance(&self, x: u32, y: u32) -> [f32; 3] {
        shade_texel(self.stack, &self.light, x, y)
    }
}

/// Radiance precomputed over a texel rectangle, shaded lazily outside it.
/// Cheaper than [`LazyShade`] when the camera samples each texel several
/// times; values are bit-identical either way.
pub struct ShadedRegion<'a> {
    lazy: LazyShade<'a>,
    rect: PixelRect,
    data: Vec<[f32; 3]>,
}

impl<'a> ShadedRegion<'a> {
    pub fn new(stack: &'a TextureStack, light: LightSpec, rect: PixelRect) -> Self {
        let w = rect.x1.saturating_sub(rect.x0) as usize;
        let h = rect.y1.saturating_sub(rect.y0) as usize;
        let mut data = vec![[0.0f32; 3]; w * h];
        if w > 0 {
            data.par_chunks_mut(w).enumerate().for_each(|(j, row)| {
                let y = rect.y0 + j as u32;
                for (i, px) in row.iter_mut().enumerate() {
                    *px = shade_texel(stack, &light, rect.x0 + i as u32, y);
                }
            });
        }
        ShadedRegion {
            lazy: LazyShade { stack, light },
            rect,
            data,
        }
    }
}

impl RadianceField for ShadedRegion<'_> {
    fn dims(&self) -> (u32, u32) {
        self.lazy.dims()
    }

    #[inline]
    fn radiance(&self, x: u32, y: u32) -> [f32; 3] {
        if self.rect.contains(x, y) {
            let w = (self.rect.x1 - self.rect.x0) as usize;
            self.data[(y - self.rect.y0) as usize * w + (x - self.rect.x0) as usize]
        } else {
            self.lazy.radiance(x, y)
        }
    }
}

/// Blinn-Phong point-light shading of one texel:
///
/// `albedo ⊙ (ambient·ao + max(0, N·L)·I/d²) + tint·max(0, N·H)^e·I/d²`
///
/// with `H` the half-vector against the fixed view direction `(0, 0, 1)`,
/// `e = 2^(10(1 - roughness))` and `tint = (1 - metallic)·0.04 + metallic·albedo`.
#[inline]
pub fn shade_texel(stack: &TextureStack, light: &LightSpec, x: u32, y: u32) -> [f32; 3] {
    let i = stack.index(x, y);
    let w = stack.width() as f64;
    let pos = [(x as f64 + 0.5) / w, (y as f64 + 0.5) / w, 0.0];
    let l = [
        light.position[0] - pos[0],
        light.position[1] - pos[1],
        light.position[2] - pos[2],
    ];
    let d2 = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
    let inv_d = 1.0 / d2.sqrt();
    let lhat = [l[0] * inv_d, l[1] * inv_d, l[2] * inv_d];
    let irradiance = light.intensity * inv_d * inv_d;

    let n = stack.normal[i].map(|v| v as f64);
    let n_dot_l = (n[0] * lhat[0] + n[1] * lhat[1] + n[2] * lhat[2]).max(0.0);
    // |L + V|² = 2 + 2·L.z for unit L and V = (0, 0, 1).
    let n_dot_h_raw = n[0] * lhat[0] + n[1] * lhat[1] + n[2] * (lhat[2] + 1.0);
    let specular = if n_dot_h_raw > 0.0 {
        let n_dot_h = (n_dot_h_raw * n_dot_h_raw / (2.0 + 2.0 * lhat[2])).sqrt().min(1.0);
        let exponent = (10.0 * (1.0 - stack.roughness[i] as f64)).exp2();
        n_dot_h.powf(exponent) * irradiance
    } else {
        0.0
    };

    let ao = stack.ao[i] as f64;
    let metallic = stack.metallic[i] as f64;
    let diffuse = light.ambient * ao + n_dot_l * irradiance;
    stack.albedo[i].map(|a| {
        let a = a as f64;
        let tint = (1.0 - metallic) * DIELECTRIC_F0 + metallic * a;
        (a * diffuse + tint * specular) as f32
    })
}

/// Shades the whole stack.
pub fn shade(stack: &TextureStack, light: &LightSpec) -> Result<RadianceImage> {
    light.validate()?;
    let (w, h) = stack.dims();
    let mut data = vec![[0.0f32; 3]; stack.len()];
    data.par_chunks_mut(w as usize).enumerate().for_each(|(y, row)| {
        for (x, px) in row.iter_mut().enumerate() {
            *px = shade_texel(stack, light, x as u32, y as u32);
        }
    });
    Ok(RadianceImage {
        width: w,
        height: h,
        data,
    })
}
