//! Coding-artifact generators (QN, SH) and their stereo processing chains.

mod engine;
mod render;
mod spec;

pub use engine::{
    apply_mono, apply_qn_mono, apply_sh_mono, process_stereo, EngineConfig, HoleOutcome,
};
pub use render::{render_condition_set, RenderRequest};
pub use spec::{derive_seed, ArtifactKind, ArtifactSpec, Quality, StereoMode};
