//! Spatio-temporal point-process models of wildfire occurrence: kernel
//! smoothers, covariate fields, likelihood fitting, and diagnostics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covariates;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod inference;
pub mod kernels;
pub mod models;
pub mod num;
pub mod simulation;
pub mod smoothers;

pub use error::{Error, Result};

pub type SpatialBackgroundF64 = smoothers::SpatialBackground<f64>;
pub type SpatialBackgroundF32 = smoothers::SpatialBackground<f32>;
pub type SeasonalRateF64 = smoothers::SeasonalRate<f64>;
pub type SeasonalRateF32 = smoothers::SeasonalRate<f32>;
pub type RegressionCurveF64 = smoothers::RegressionCurve<f64>;
pub type RegressionCurveF32 = smoothers::RegressionCurve<f32>;
pub type DirectionalCurveF64 = smoothers::DirectionalCurve<f64>;
pub type DirectionalCurveF32 = smoothers::DirectionalCurve<f32>;
