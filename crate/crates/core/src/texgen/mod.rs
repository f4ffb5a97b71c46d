//! Base weld scene synthesis: plate textures, the seam path, the bead, and
//! the anchor locations along it.

mod material;
mod noise;
mod seam;
mod stack;

pub use material::{gen_base_stack, palette, validate_palette, MaterialSpec, KNOWN_MATERIALS};
pub use noise::{fbm, value_noise};
pub use seam::{
    apply_seam, gen_seam_path, sample_locations, LocationPoint, SeamPath, SeamProjection, DEFAULT_SEAM_WIDTH,
    GAP_SHADOW_PX, LOCATION_END_MARGIN_FACTOR, LOCATION_SPACING_FACTOR, SEAM_STEP_PX,
};
pub(crate) use stack::unit_normal;
pub use stack::{PixelRect, TextureStack};
