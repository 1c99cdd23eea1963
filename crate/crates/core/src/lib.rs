//! Core library of the radgate toolkit.
//!
//! The crate is organised around the pipeline stages: reading DICOM series
//! ([`dicom`]), cataloguing and quality-gating them ([`catalog`], [`qc`]),
//! assembling voxel volumes and writing NRRD ([`volume`], [`nrrd`],
//! [`rasterize`], [`unroll`]), intensity preprocessing ([`preprocess`]),
//! radiomics feature extraction ([`features`]) and downstream statistical
//! analysis with SVG reporting ([`analysis`], [`plot`]). The [`fixtures`]
//! module generates the synthetic datasets used by the test suite and the
//! `gen-fixtures` subcommand.

pub mod analysis;
pub mod catalog;
pub mod dicom;
pub mod features;
pub mod fixtures;
pub mod nrrd;
pub mod plot;
pub mod preprocess;
pub mod qc;
pub mod rasterize;
pub mod unroll;
pub mod util;
pub mod volume;
