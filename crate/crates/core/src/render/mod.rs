//! Shading, camera projection and the generation grid.

mod camera;
mod generate;
mod shade;

pub use camera::{project, tone_map, tone_map_reference, CameraSpec, Homography, BACKDROP_RADIANCE};
pub use generate::{
    encode_png, generate_dataset, image_id, image_path, sample_shot, shot_ranges, snapshot, GenConfig, MaterialScene,
    FAILURE_MARKER, MANIFEST_FILE,
};
pub use shade::{
    shade, shade_texel, LazyShade, LightSpec, RadianceField, RadianceImage, ShadedRegion, DEFAULT_AMBIENT,
};
