//! RefineLoc-style weakly-supervised temporal action localization:
//! a snippet-level classifier plus background-foreground attention trained
//! from video-level labels only, iteratively refined with pseudo ground
//! truth generated from the model's own predictions, with an mAP@tIoU
//! evaluation kit and a synthetic-data harness.

pub mod dataio;
pub mod error;
pub mod evalkit;
pub mod numcore;
pub mod pseudogen;
pub mod refine;
pub mod seeding;
pub mod segpred;
pub mod wstal;

pub use error::CoreError;
