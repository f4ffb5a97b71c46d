//! The generation grid: materials × kinds × locations × shots.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::camera::{project, CameraSpec};
use super::shade::{LazyShade, LightSpec, ShadedRegion};
use crate::defect::{apply_defect, label_of, make_defect_spec, DefectKind, DefectSpec, MAX_DEFECT_REACH_PX};
use crate::error::{Error, Result};
use crate::manifest::{write_atomic, Manifest, Meta, SampleRecord, Source};
use crate::rng::{SeedKey, Stream};
use crate::texgen::{
    apply_seam, gen_base_stack, gen_seam_path, palette, sample_locations, validate_palette, LocationPoint,
    MaterialSpec, PixelRect, SeamPath, TextureStack, DEFAULT_SEAM_WIDTH,
};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
/// Written into the output directory when a run fails part-way.
pub const FAILURE_MARKER: &str = "GENERATION_FAILED";

/// Per-shot camera and light sampling ranges.
pub mod shot_ranges {
    pub const ELEVATION_DEG: (f64, f64) = (20.0, 90.0);
    pub const DISTANCE: (f64, f64) = (0.55, 1.2);
    /// Horizontal light offset from the anchor, plane units.
    pub const LIGHT_OFFSET: (f64, f64) = (-0.3, 0.3);
    pub const LIGHT_HEIGHT: (f64, f64) = (0.25, 0.8);
    /// Direct irradiance delivered at the anchor.
    pub const ANCHOR_IRRADIANCE: (f64, f64) = (0.6, 1.0);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub materials: Vec<MaterialSpec>,
    pub locations_per_seam: usize,
    pub shots_per_location: usize,
    pub kinds: Vec<DefectKind>,
    pub master_seed: u64,
    pub output_dims: (u32, u32),
    pub texture_dims: (u32, u32),
    pub seam_width: f64,
    #[serde(skip)]
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses rayon's default.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            materials: palette(),
            locations_per_seam: 68,
            shots_per_location: 4,
            kinds: DefectKind::default_kinds(),
            master_seed: 0,
            output_dims: (1980, 1240),
            texture_dims: (2048, 2048),
            seam_width: DEFAULT_SEAM_WIDTH,
            output_dir: PathBuf::from("out"),
            workers: None,
        }
    }
}

impl GenConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("generation config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        validate_palette(&self.materials)?;
        if self.locations_per_seam == 0 || self.shots_per_location == 0 {
            return Err(Error::Config(
                "locations_per_seam and shots_per_location must be at least 1".into(),
            ));
        }
        if self.kinds.is_empty() {
            return Err(Error::Config("kinds must not be empty".into()));
        }
        for (i, k) in self.kinds.iter().enumerate() {
            if self.kinds[..i].contains(k) {
                return Err(Error::Config(format!("kind {k} listed twice")));
            }
        }
        if self.output_dims.0 < 64 || self.output_dims.1 < 64 {
            return Err(Error::Config(format!(
                "output dims must be at least 64x64, got {:?}",
                self.output_dims
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn image_count(&self) -> usize {
        self.materials.len() * self.kinds.len() * self.locations_per_seam * self.shots_per_location
    }

    fn material_key(&self, material: &MaterialSpec) -> SeedKey {
        SeedKey::new(self.master_seed).tag(&material.name)
    }
}

/// Texture-space scene shared by every shot of one material.
pub struct MaterialScene {
    pub material: MaterialSpec,
    pub path: SeamPath,
    pub base: TextureStack,
    pub locations: Vec<LocationPoint>,
}

impl MaterialScene {
    pub fn build(config: &GenConfig, material: &MaterialSpec) -> Result<Self> {
        let key = config.material_key(material);
        let path = gen_seam_path(key.tag("seam").finish(), config.texture_dims, config.seam_width)?;
        let base = gen_base_stack(material, config.texture_dims, key.tag("base").finish())?;
        let base = apply_seam(base, &path, key.tag("ripple").finish());
        let locations = sample_locations(&path, config.locations_per_seam, key.tag("locations").finish())?;
        Ok(MaterialScene {
            material: material.clone(),
            path,
            base,
            locations,
        })
    }

    /// Renders one shot into `scratch`, which must equal `self.base` on
    /// entry and is restored to it on return.
    fn render_shot(
        &self,
        config: &GenConfig,
        scratch: TextureStack,
        kind: DefectKind,
        location: usize,
        shot: usize,
    ) -> (TextureStack, Result<(RgbImage, SampleRecord)>) {
        let anchor = self.locations[location];
        let spec = make_defect_spec(kind, anchor, defect_seed(config, &self.material, kind, location));
        let seed = shot_seed(config, &self.material, kind, location, shot);
        let (camera, light) = sample_shot(config, &anchor, seed);

        let mut stack = match apply_defect(scratch, &self.path, &spec) {
            Ok(s) => s,
            // Injectors only fail on malformed specs, before touching the stack.
            Err(e) => return (self.base.clone(), Err(e)),
        };
        let image = render_view(&stack, light, &camera);
        let (w, h) = stack.dims();
        stack.copy_rect_from(
            &self.base,
            PixelRect::around(anchor.position, MAX_DEFECT_REACH_PX, w, h),
        );
        let result = image.map(|img| {
            let record = shot_record(&self.material, kind, location, shot, seed, &camera, &light, &spec);
            (img, record)
        });
        (stack, result)
    }
}

/// Shades only what the camera sees, picking whichever of a precomputed
/// region or per-sample shading touches fewer texels.
fn render_view(stack: &TextureStack, light: LightSpec, camera: &CameraSpec) -> Result<RgbImage> {
    light.validate()?;
    let rect = camera.footprint(stack.dims());
    let region_cost = (rect.x1 - rect.x0) as u64 * (rect.y1 - rect.y0) as u64;
    let lazy_cost = 4 * camera.output.0 as u64 * camera.output.1 as u64;
    if region_cost < lazy_cost {
        project(&ShadedRegion::new(stack, light, rect), camera)
    } else {
        project(&LazyShade { stack, light }, camera)
    }
}

fn shot_seed(config: &GenConfig, material: &MaterialSpec, kind: DefectKind, location: usize, shot: usize) -> u64 {
    SeedKey::new(config.master_seed)
        .tag("shot")
        .tag(&material.name)
        .tag(kind.name())
        .u64(location as u64)
        .u64(shot as u64)
        .finish()
}

/// One defect per location, seen by every shot of that location.
fn defect_seed(config: &GenConfig, material: &MaterialSpec, kind: DefectKind, location: usize) -> u64 {
    SeedKey::new(config.master_seed)
        .tag("defect")
        .tag(&material.name)
        .tag(kind.name())
        .u64(location as u64)
        .finish()
}

/// Camera orbiting the anchor and a point light near it.
pub fn sample_shot(config: &GenConfig, anchor: &LocationPoint, seed: u64) -> (CameraSpec, LightSpec) {
    use shot_ranges::*;
    let mut rng = Stream::from_seed(seed);
    let w = config.texture_dims.0 as f64;
    let target = [anchor.position[0] / w, anchor.position[1] / w];
    let camera = CameraSpec {
        azimuth_deg: rng.uniform(0.0, 360.0),
        elevation_deg: rng.uniform(ELEVATION_DEG.0, ELEVATION_DEG.1),
        distance: rng.uniform(DISTANCE.0, DISTANCE.1),
        target,
        output: config.output_dims,
    };
    let offset = [
        rng.uniform(LIGHT_OFFSET.0, LIGHT_OFFSET.1),
        rng.uniform(LIGHT_OFFSET.0, LIGHT_OFFSET.1),
    ];
    let height = rng.uniform(LIGHT_HEIGHT.0, LIGHT_HEIGHT.1);
    let d2 = offset[0] * offset[0] + offset[1] * offset[1] + height * height;
    let light = LightSpec::new(
        [target[0] + offset[0], target[1] + offset[1], height],
        d2 * rng.uniform(ANCHOR_IRRADIANCE.0, ANCHOR_IRRADIANCE.1),
    );
    (camera, light)
}

pub fn image_id(material: &str, kind: DefectKind, location: usize, shot: usize) -> String {
    format!("syn_{material}_{kind}_l{location:03}_s{shot:02}")
}

pub fn image_path(material: &str, kind: DefectKind, location: usize, shot: usize) -> String {
    format!("images/{material}/{kind}/l{location:03}_s{shot:02}.png")
}

#[allow(clippy::too_many_arguments)]
fn shot_record(
    material: &MaterialSpec,
    kind: DefectKind,
    location: usize,
    shot: usize,
    seed: u64,
    camera: &CameraSpec,
    light: &LightSpec,
    spec: &DefectSpec,
) -> SampleRecord {
    let mut meta = Meta::new();
    let mut put = |k: &str, v: Value| {
        meta.insert(k.to_string(), v);
    };
    put("material", material.name.clone().into());
    put("defect_kind", kind.name().into());
    put("location_index", location.into());
    put("shot_index", shot.into());
    put("seed", seed.into());
    put("defect_seed", spec.seed.into());
    put("camera.azimuth_deg", camera.azimuth_deg.into());
    put("camera.elevation_deg", camera.elevation_deg.into());
    put("camera.distance", camera.distance.into());
    put("camera.target_x", camera.target[0].into());
    put("camera.target_y", camera.target[1].into());
    put("light.x", light.position[0].into());
    put("light.y", light.position[1].into());
    put("light.z", light.position[2].into());
    put("light.intensity", light.intensity.into());
    put("light.ambient", light.ambient.into());
    put("anchor.x", spec.anchor.position[0].into());
    put("anchor.y", spec.anchor.position[1].into());
    put("anchor.arc_length", spec.anchor.arc_length.into());
    for (k, v) in &spec.params {
        put(&format!("defect.{k}"), (*v).into());
    }
    let mut record = SampleRecord::new(
        image_id(&material.name, kind, location, shot),
        image_path(&material.name, kind, location, shot),
        label_of(kind).value(),
        Source::Synthetic,
    );
    record.meta = meta;
    record
}

/// Renders a single grid cell. Builds the whole material scene, so prefer
/// [`generate_dataset`] for more than a handful of shots.
pub fn snapshot(
    config: &GenConfig,
    material: &str,
    kind: DefectKind,
    location: usize,
    shot: usize,
) -> Result<(RgbImage, SampleRecord)> {
    config.validate()?;
    let spec = config
        .materials
        .iter()
        .find(|m| m.name == material)
        .ok_or_else(|| Error::Config(format!("material {material:?} not in the configured palette")))?;
    if !config.kinds.contains(&kind) {
        return Err(Error::Config(format!("kind {kind} not in the configured kinds")));
    }
    if location >= config.locations_per_seam || shot >= config.shots_per_location {
        return Err(Error::Config(format!(
            "location {location} / shot {shot} outside {}x{}",
            config.locations_per_seam, config.shots_per_location
        )));
    }
    let scene = MaterialScene::build(config, spec)?;
    let scratch = scene.base.clone();
    scene.render_shot(config, scratch, kind, location, shot).1
}

pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(image.as_raw().len() / 2);
    PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Adaptive)
        .write_image(image.as_raw(), image.width(), image.height(), ExtendedColorType::Rgb8)
        .map_err(|e| Error::Generation(format!("png encoding failed: {e}")))?;
    Ok(out)
}

/// Renders the full grid into `config.output_dir` and writes the manifest.
/// Rows are ordered by (material, kind, location, shot) and every byte of
/// output is independent of the worker count. On failure the directory is
/// left with a [`FAILURE_MARKER`] file and no manifest.
pub fn generate_dataset(config: &GenConfig) -> Result<Manifest> {
    config.validate()?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for stale in [MANIFEST_FILE, FAILURE_MARKER] {
        let p = out.join(stale);
        if p.exists() {
            fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Generation(format!("thread pool: {e}")))?;
    let result = pool.install(|| run_grid(config, out));
    match result {
        Ok(manifest) => Ok(manifest),
        Err(e) => {
            let marker = out.join(FAILURE_MARKER);
            let _ = fs::write(&marker, format!("error.kind={} msg={}\n", e.kind(), e));
            Err(e)
        }
    }
}

fn run_grid(config: &GenConfig, out: &Path) -> Result<Manifest> {
    let mut rows = Vec::with_capacity(config.image_count());
    for material in &config.materials {
        for kind in &config.kinds {
            let dir = out.join("images").join(&material.name).join(kind.name());
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        let scene = MaterialScene::build(config, material)?;
        let scratch_pool = Mutex::new(Vec::<TextureStack>::new());
        let jobs: Vec<(DefectKind, usize, usize)> = config
            .kinds
            .iter()
            .flat_map(|&k| {
                (0..config.locations_per_seam).flat_map(move |l| (0..config.shots_per_location).map(move |s| (k, l, s)))
            })
            .collect();
        let records: Vec<Result<SampleRecord>> = jobs
            .into_par_iter()
            .map(|(kind, location, shot)| {
                let scratch = scratch_pool
                    .lock()
                    .expect("scratch pool poisoned")
                    .pop()
                    .unwrap_or_else(|| scene.base.clone());
                let (scratch, result) = scene.render_shot(config, scratch, kind, location, shot);
                scratch_pool.lock().expect("scratch pool poisoned").push(scratch);
                let (image, record) = result?;
                let bytes = encode_png(&image)?;
                let path = out.join(&record.path);
                fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
                Ok(record)
            })
            .collect();
        for r in records {
            rows.push(r?);
        }
    }
    let manifest = Manifest::new(rows)?;
    let path = out.join(MANIFEST_FILE);
    write_atomic(&path, manifest.to_jsonl().as_bytes())?;
    Ok(manifest)
}
