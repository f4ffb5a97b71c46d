use crate::error::{Error, Result};

/// Aligned per-pixel maps describing the flat weld scene.
///
/// Storage is row-major with the origin at the top-left texel. Pixel `(x, y)`
/// covers the continuous square `[x, x+1) × [y, y+1)`, so its centre sits at
/// `(x + 0.5, y + 0.5)`; seam paths and defect geometry use the same
/// continuous coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureStack {
    width: u32,
    height: u32,
    /// Linear RGB in `[0, 1]`.
    pub albedo: Vec<[f32; 3]>,
    /// Unit surface normals, `z > 0`.
    pub normal: Vec<[f32; 3]>,
    /// Ambient occlusion in `[0, 1]`.
    pub ao: Vec<f32>,
    pub metallic: Vec<f32>,
    /// In `(0, 1]`.
    pub roughness: Vec<f32>,
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    /// Square of half-size `radius` around `centre`, clipped to `width × height`.
    pub fn around(centre: [f64; 2], radius: f64, width: u32, height: u32) -> Self {
        let clip = |v: f64, hi: u32| v.max(0.0).min(hi as f64) as u32;
        PixelRect {
            x0: clip((centre[0] - radius).floor(), width),
            y0: clip((centre[1] - radius).floor(), height),
            x1: clip((centre[0] + radius).ceil() + 1.0, width),
            y1: clip((centre[1] + radius).ceil() + 1.0, height),
        }
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }
}

impl TextureStack {
    /// A stack with every texel set to the given values and flat normals.
    pub fn uniform(width: u32, height: u32, albedo: [f32; 3], metallic: f32, roughness: f32) -> Self {
        let n = width as usize * height as usize;
        TextureStack {
            width,
            height,
            albedo: vec![albedo; n],
            normal: vec![[0.0, 0.0, 1.0]; n],
            ao: vec![1.0; n],
            metallic: vec![metallic; n],
            roughness: vec![roughness; n],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn len(&self) -> usize {
        self.ao.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ao.is_empty()
    }

    /// Bitwise comparison of every channel of texel `i`.
    pub fn texel_identical(&self, other: &TextureStack, i: usize) -> bool {
        let bits3 = |a: [f32; 3], b: [f32; 3]| a.iter().zip(b).all(|(p, q)| p.to_bits() == q.to_bits());
        bits3(self.albedo[i], other.albedo[i])
            && bits3(self.normal[i], other.normal[i])
            && self.ao[i].to_bits() == other.ao[i].to_bits()
            && self.metallic[i].to_bits() == other.metallic[i].to_bits()
            && self.roughness[i].to_bits() == other.roughness[i].to_bits()
    }

    /// Per-texel "differs in any channel" mask against a same-sized stack.
    pub fn diff_mask(&self, other: &TextureStack) -> Vec<bool> {
        assert_eq!(self.dims(), other.dims(), "diff of mismatched stacks");
        (0..self.len()).map(|i| !self.texel_identical(other, i)).collect()
    }

    /// Copies every channel inside `rect` from `source`.
    pub fn copy_rect_from(&mut self, source: &TextureStack, rect: PixelRect) {
        assert_eq!(self.dims(), source.dims(), "copy between mismatched stacks");
        for y in rect.y0..rect.y1.min(self.height) {
            let a = self.index(rect.x0, y);
            let b = self.index(rect.x1.min(self.width), y);
            if a >= b {
                continue;
            }
            self.albedo[a..b].copy_from_slice(&source.albedo[a..b]);
            self.normal[a..b].copy_from_slice(&source.normal[a..b]);
            self.ao[a..b].copy_from_slice(&source.ao[a..b]);
            self.metallic[a..b].copy_from_slice(&source.metallic[a..b]);
            self.roughness[a..b].copy_from_slice(&source.roughness[a..b]);
        }
    }

    /// Checks the stack invariants: shared dimensions, unit normals with
    /// positive z, and channel ranges.
    pub fn validate(&self) -> Result<()> {
        let n = self.width as usize * self.height as usize;
        if [
            self.albedo.len(),
            self.normal.len(),
            self.ao.len(),
            self.metallic.len(),
            self.roughness.len(),
        ]
        .iter()
        .any(|&len| len != n)
        {
            return Err(Error::Contract("texture maps differ in size".into()));
        }
        let unit = |v: f32| (0.0..=1.0).contains(&v);
        for i in 0..n {
            let [nx, ny, nz] = self.normal[i];
            let len = ((nx as f64).powi(2) + (ny as f64).powi(2) + (nz as f64).powi(2)).sqrt();
            if (len - 1.0).abs() > 1e-4 || nz <= 0.0 {
                return Err(Error::Contract(format!(
                    "normal at texel {i} is not a unit vector with z > 0: {:?}",
                    self.normal[i]
                )));
            }
            if !self.albedo[i].iter().all(|&c| unit(c))
                || !unit(self.ao[i])
                || !unit(self.metallic[i])
                || !(self.roughness[i] > 0.0 && self.roughness[i] <= 1.0)
            {
                return Err(Error::Contract(format!("channel out of range at texel {i}")));
            }
        }
        Ok(())
    }
}

/// Normalizes `v` in f64 and stores it as f32.
#[inline]
pub(crate) fn unit_normal(v: [f64; 3]) -> [f32; 3] {
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [(v[0] / len) as f32, (v[1] / len) as f32, (v[2] / len) as f32]
}
