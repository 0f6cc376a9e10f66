//! Hybrid spatial phase unwrapping for fringe projection profilometry.
//!
//! The pipeline decodes phase-shifted fringe stacks, builds normalized PMI
//! composites, classifies unreliable points, unwraps the remaining phase with
//! flood fill (or the MODU-sort and FSPU baselines), evaluates against
//! temporally unwrapped ground truth and triangulates to 3D.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` and `*32`
//! aliases below name the common instantiations.

pub mod composite;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod labeling;
pub mod masking;
pub mod phase_decode;
pub mod reconstruct3d;
pub mod scalar;
pub mod synth_scenes;
pub mod unwrap_spatial;
pub mod unwrap_temporal;

pub use error::{Error, FormatError, Result};
pub use formats::{Class, FloatMap, FringeStack, LabelMap, Mask, OrderMap, PmiImage};
pub use scalar::Real;

pub type FloatMap64 = FloatMap<f64>;
pub type FloatMap32 = FloatMap<f32>;
pub type FringeStack64 = FringeStack<f64>;
pub type FringeStack32 = FringeStack<f32>;
pub type PmiImage64 = PmiImage<f64>;
pub type PmiImage32 = PmiImage<f32>;
pub type UnwrapResult64 = unwrap_spatial::UnwrapResult<f64>;
pub type UnwrapResult32 = unwrap_spatial::UnwrapResult<f32>;
pub use reconstruct3d::{PointCloud, SystemCalibration};
pub type SceneTruth64 = synth_scenes::SceneTruth<f64>;
pub type SceneTruth32 = synth_scenes::SceneTruth<f32>;
