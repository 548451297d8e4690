//! Online kernel-based feature extraction on a budget.
//!
//! A low-rank "virtual" subspace of kernel-lifted data is represented as
//! `Φ_S A`: the lifted support vectors `Φ_S` morphed by a small factor `A`.
//! The crate learns that subspace in batch ([`subspace::batch_bkfe`]) or
//! streaming mode ([`subspace::OnlineTracker`], [`budget::OkFeb`]), keeps the
//! support set on a fixed budget, and maps every sample to an `r`-dimensional
//! feature vector whose inner products approximate the kernel. Those features
//! feed the linear learners in [`learners`], and [`approx`] checks the
//! deterministic approximation bounds at runtime.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`, which is what the bound checks and
//! the CLI use.

// Negated comparisons double as NaN rejection in parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod budget;
pub mod data;
mod error;
mod gram;
pub mod kernel;
pub mod learners;
mod linalg;
mod scalar;
pub mod subspace;

pub use error::{Error, Result};
pub use gram::SupportGram;
pub use scalar::Real;

/// Kernel description over `f64`.
pub type Kernel = kernel::KernelSpec<f64>;
/// Subspace model over `f64`.
pub type Model = subspace::SubspaceModel<f64>;
/// Feature vector over `f64`.
pub type Feature = subspace::FeatureVector<f64>;
/// Budgeted streaming extractor over `f64`.
pub type Extractor = budget::OkFeb<f64>;
/// Labeled or unlabeled sample over `f64`.
pub type Sample = data::Sample<f64>;
/// Linear learner state over `f64`.
pub type Linear = learners::LinearModel<f64>;
/// Bound-check report over `f64`.
pub type Report = approx::BoundReport<f64>;
