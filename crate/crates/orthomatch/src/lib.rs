//! Orthographic rectification and rotation-robust local feature matching.
//!
//! The library covers an end-to-end geometric matching pipeline:
//!
//! - [`geometry`]: exact 3×3 camera and projective algebra (intrinsics,
//!   rotations, planes, homographies, DLT estimation).
//! - [`imaging`]: raster images and depth maps, bilinear warping with
//!   validity masks, gradients, back-projection to point clouds.
//! - [`features`]: Harris keypoints plus two deterministic descriptor
//!   heads — a rotation-sensitive one and an orientation-normalized one —
//!   and a binary exchange format for externally computed descriptors.
//! - [`matching`]: brute-force mutual-nearest-neighbor matching, the
//!   dual-head correspondence ensemble, and RANSAC verification producing
//!   homographies or 3D rigid poses.
//! - [`ortho`]: orthographic view generation from depth + surface normals
//!   or from annotated ground correspondences (IPM).
//! - [`synth`]: self-supervised rotated/warped pair generation with exact
//!   ground-truth homographies.
//! - [`scene`]: synthetic textured-plane rendering with exact depth, used
//!   by the evaluation protocols, tests, and examples.
//! - [`eval`]: mean matching accuracy, relative pose error, and visual
//!   place recognition recall.
//! - [`config`], [`manifest`], [`pipeline`], [`cli`]: configuration,
//!   dataset manifests, and the end-to-end orchestration behind the
//!   `orthomatch` command-line tool.
//!
//! The two built-in descriptor heads are deterministic stand-ins for
//! learned descriptors; they preserve the structural contrast between a
//! rotation-sensitive and a rotation-robust head. Real learned descriptors
//! can be plugged in through the `.omds` exchange format
//! ([`features::load_external_descriptors`]).

pub mod cli;
pub mod config;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod imaging;
pub mod jsonio;
pub mod manifest;
pub mod matching;
pub mod ortho;
pub mod pipeline;
pub mod scene;
pub mod synth;

/// Tool version embedded in reports and manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
