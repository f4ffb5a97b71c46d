use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::{fbm, value_noise};
use super::stack::TextureStack;
use crate::error::{Error, Result};
use crate::rng::SeedKey;

/// The six plate finishes; generation configs may retune their parameters
/// but not add names.
pub const KNOWN_MATERIALS: [&str; 6] = ["aluminum", "steel", "copper", "gold", "bronze", "titanium"];

/// Surface parameters for one plate finish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub name: String,
    /// Linear RGB in `[0, 1]`.
    pub base_rgb: [f64; 3],
    pub metallic_base: f64,
    pub roughness_base: f64,
    pub noise_amplitude: f64,
}

impl MaterialSpec {
    fn new(name: &str, base_rgb: [f64; 3], metallic: f64, roughness: f64, noise: f64) -> Self {
        MaterialSpec {
            name: name.to_string(),
            base_rgb,
            metallic_base: metallic,
            roughness_base: roughness,
            noise_amplitude: noise,
        }
    }

    /// Looks a material up in the built-in palette.
    pub fn named(name: &str) -> Result<Self> {
        palette()
            .into_iter()
            .find(|m| m.name == name)
            .ok_or_else(|| unknown_material(name))
    }

    pub fn validate(&self) -> Result<()> {
        if !KNOWN_MATERIALS.contains(&self.name.as_str()) {
            return Err(unknown_material(&self.name));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !self.base_rgb.iter().all(|&c| unit(c))
            || !unit(self.metallic_base)
            || !unit(self.noise_amplitude)
            || !(self.roughness_base > 0.0 && self.roughness_base <= 1.0)
        {
            return Err(Error::Config(format!(
                "material {} has a parameter outside its range",
                self.name
            )));
        }
        Ok(())
    }
}

fn unknown_material(name: &str) -> Error {
    Error::Config(format!(
        "unknown material {name:?}; expected one of {}",
        KNOWN_MATERIALS.join(", ")
    ))
}

/// The built-in palette, in canonical order.
pub fn palette() -> Vec<MaterialSpec> {
    vec![
        MaterialSpec::new("aluminum", [0.91, 0.92, 0.92], 0.9, 0.35, 0.08),
        MaterialSpec::new("steel", [0.56, 0.57, 0.58], 0.9, 0.45, 0.10),
        MaterialSpec::new("copper", [0.95, 0.64, 0.54], 0.9, 0.35, 0.08),
        MaterialSpec::new("gold", [1.00, 0.78, 0.34], 0.95, 0.30, 0.06),
        MaterialSpec::new("bronze", [0.80, 0.50, 0.25], 0.85, 0.45, 0.10),
        MaterialSpec::new("titanium", [0.54, 0.50, 0.47], 0.9, 0.40, 0.08),
    ]
}

/// Checks a palette override: valid entries, unique names.
pub fn validate_palette(materials: &[MaterialSpec]) -> Result<()> {
    if materials.is_empty() {
        return Err(Error::Config("material list is empty".into()));
    }
    for (i, m) in materials.iter().enumerate() {
        m.validate()?;
        if materials[..i].iter().any(|o| o.name == m.name) {
            return Err(Error::Config(format!("material {} listed twice", m.name)));
        }
    }
    Ok(())
}

/// Plate texture for one material: seeded brushed-metal value noise over the
/// base colour, flat normals, no occlusion.
pub fn gen_base_stack(material: &MaterialSpec, dims: (u32, u32), seed: u64) -> Result<TextureStack> {
    material.validate()?;
    let (w, h) = dims;
    if w == 0 || h == 0 {
        return Err(Error::Config(format!("texture dims {w}x{h} are empty")));
    }
    let key = SeedKey::new(seed).tag("base-stack");
    let albedo_seed = key.tag("albedo").finish();
    let streak_seed = key.tag("streak").finish();
    let metal_seed = key.tag("metallic").finish();
    let rough_seed = key.tag("roughness").finish();
    let amp = material.noise_amplitude;

    let mut stack = TextureStack::uniform(w, h, [0.0; 3], 0.0, 1.0);
    let row = w as usize;

    stack
        .albedo
        .par_chunks_mut(row)
        .zip(stack.metallic.par_chunks_mut(row))
        .zip(stack.roughness.par_chunks_mut(row))
        .enumerate()
        .for_each(|(y, ((albedo, metallic), roughness))| {
            let fy = y as f64 + 0.5;
            for x in 0..row {
                let fx = x as f64 + 0.5;
                let grain = fbm(albedo_seed, fx / 64.0, fy / 64.0, 3);
                // Brushing streaks run along x.
                let streak = value_noise(streak_seed, fx / 256.0, fy / 1.5) * 2.0 - 1.0;
                let n = 0.6 * grain + 0.4 * streak;
                for c in 0..3 {
                    albedo[x][c] = (material.base_rgb[c] * (1.0 + amp * n)).clamp(0.0, 1.0) as f32;
                }
                let nm = fbm(metal_seed, fx / 96.0, fy / 96.0, 2);
                let nr = fbm(rough_seed, fx / 48.0, fy / 48.0, 2);
                metallic[x] = (material.metallic_base + 0.25 * amp * nm).clamp(0.0, 1.0) as f32;
                roughness[x] = (material.roughness_base + 0.5 * amp * nr).clamp(0.02, 1.0) as f32;
            }
        });
    Ok(stack)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_albedo(s: &TextureStack) -> [f64; 3] {
        let mut m = [0.0; 3];
        for a in &s.albedo {
            for c in 0..3 {
                m[c] += a[c] as f64;
            }
        }
        m.map(|v| v / s.len() as f64)
    }

    #[test]
    fn palette_has_six_unique_valid_materials() {
        let p = palette();
        assert_eq!(p.len(), 6);
        validate_palette(&p).unwrap();
        let names: Vec<_> = p.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, KNOWN_MATERIALS);
    }

    #[test]
    fn steel_mean_albedo_within_noise_amplitude() {
        let steel = MaterialSpec::named("steel").unwrap();
        let s = gen_base_stack(&steel, (512, 512), 1).unwrap();
        s.validate().unwrap();
        let m = mean_albedo(&s);
        for c in 0..3 {
            assert!((m[c] - steel.base_rgb[c]).abs() <= steel.noise_amplitude, "{m:?}");
        }
    }

    #[test]
    fn zero_noise_is_uniform() {
        let mut gold = MaterialSpec::named("gold").unwrap();
        gold.noise_amplitude = 0.0;
        let s = gen_base_stack(&gold, (64, 48), 99).unwrap();
        assert!(s.albedo.iter().all(|a| *a == s.albedo[0]));
        assert!(s.metallic.iter().all(|v| *v == s.metallic[0]));
        assert!(s.roughness.iter().all(|v| *v == s.roughness[0]));
        assert_eq!(s.albedo[0], gold.base_rgb.map(|c| c as f32));
    }

    #[test]
    fn gold_and_copper_differ_in_mean() {
        let gold = gen_base_stack(&MaterialSpec::named("gold").unwrap(), (128, 128), 5).unwrap();
        let copper = gen_base_stack(&MaterialSpec::named("copper").unwrap(), (128, 128), 5).unwrap();
        let (g, c) = (mean_albedo(&gold), mean_albedo(&copper));
        assert!((0..3).any(|i| (g[i] - c[i]).abs() > 0.01), "{g:?} vs {c:?}");
    }

    #[test]
    fn unknown_name_rejected() {
        let mut m = MaterialSpec::named("steel").unwrap();
        m.name = "platinum".into();
        assert!(matches!(gen_base_stack(&m, (8, 8), 0), Err(Error::Config(_))));
        assert!(MaterialSpec::named("platinum").is_err());
    }

    #[test]
    fn deterministic() {
        let m = MaterialSpec::named("bronze").unwrap();
        assert_eq!(
            gen_base_stack(&m, (96, 64), 3).unwrap(),
            gen_base_stack(&m, (96, 64), 3).unwrap()
        );
    }
}
