//! Volume pre-processing chain: rescaling, z-scoring, histogram matching and
//! equalization, intensity discretization, and grid reshaping.
//!
//! Every step is a pure `Volume -> Volume` function. `run_chain` applies a
//! configured list of steps in order and records before/after intensity
//! statistics for each one. Steps that need context (a mask for ROI-scoped
//! z-scoring, a reference volume for histogram matching) receive it through
//! `ChainContext`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::util::IntensityStats;
use crate::volume::{Geometry, Mask, ScalarType, Volume};

/// Intensity discretization rule, shared with feature extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    /// `level = floor(n·(x−min)/(max−min)) + 1`, clamped so `max` lands on `n`.
    FixedBinCount(usize),
    /// `level = floor((x−min)/w) + 1`, anchored at the scope minimum.
    FixedBinWidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Whole,
    Roi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Trilinear,
    Nearest,
}

fn default_interpolation() -> Interpolation {
    Interpolation::Trilinear
}

fn default_levels() -> usize {
    1024
}

/// Resampling target: exactly one of a spacing triple or a dims triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReshapeTarget {
    Spacing([f64; 3]),
    Dims([usize; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Rescale {
        out_min: f64,
        out_max: f64,
    },
    Zscore {
        scope: Scope,
    },
    HistMatch {
        reference: String,
        #[serde(default = "default_levels")]
        levels: usize,
    },
    HistEqualize {
        bins: usize,
    },
    IntensityResample {
        mode: Discretization,
    },
    Reshape {
        target: ReshapeTarget,
        #[serde(default = "default_interpolation")]
        interpolation: Interpolation,
    },
    /// Reserved name for bias-field correction; accepted by the parser so
    /// configs stay forward-compatible, rejected at execution.
    N4,
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::Rescale { .. } => "rescale",
            Step::Zscore { .. } => "zscore",
            Step::HistMatch { .. } => "hist_match",
            Step::HistEqualize { .. } => "hist_equalize",
            Step::IntensityResample { .. } => "intensity_resample",
            Step::Reshape { .. } => "reshape",
            Step::N4 => "n4",
        }
    }

    /// Deterministic one-line echo of the step's parameters for logs.
    pub fn params_echo(&self) -> String {
        match self {
            Step::Rescale { out_min, out_max } => format!("out_min={out_min} out_max={out_max}"),
            Step::Zscore { scope } => format!("scope={}", match scope {
                Scope::Whole => "whole",
                Scope::Roi => "roi",
            }),
            Step::HistMatch { reference, levels } => format!("reference={reference} levels={levels}"),
            Step::HistEqualize { bins } => format!("bins={bins}"),
            Step::IntensityResample { mode } => match mode {
                Discretization::FixedBinCount(n) => format!("fixed_bin_count={n}"),
                Discretization::FixedBinWidth(w) => format!("fixed_bin_width={w}"),
            },
            Step::Reshape { target, interpolation } => {
                let t = match target {
                    ReshapeTarget::Spacing(s) => format!("spacing={},{},{}", s[0], s[1], s[2]),
                    ReshapeTarget::Dims(d) => format!("dims={},{},{}", d[0], d[1], d[2]),
                };
                let i = match interpolation {
                    Interpolation::Trilinear => "trilinear",
                    Interpolation::Nearest => "nearest",
                };
                format!("{t} interpolation={i}")
            }
            Step::N4 => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessParams {
    pub steps: Vec<Step>,
}

impl PreprocessParams {
    /// Check parameter invariants before any volume is touched.
    pub fn validate(&self) -> Result<(), PreprocessError> {
        for (index, step) in self.steps.iter().enumerate() {
            let bad = |what: &str| {
                Err(PreprocessError::InvalidParams(format!(
                    "step {index} ({}): {what}",
                    step.name()
                )))
            };
            match step {
                Step::Rescale { out_min, out_max } => {
                    if !(out_min < out_max) || !out_min.is_finite() || !out_max.is_finite() {
                        return bad("out_min must be finite and less than out_max");
                    }
                }
                Step::Zscore { .. } => {}
                Step::HistMatch { reference, levels } => {
                    if *levels < 2 {
                        return bad("levels must be at least 2");
                    }
                    if reference.is_empty() {
                        return bad("reference volume id must not be empty");
                    }
                }
                Step::HistEqualize { bins } => {
                    if *bins < 2 {
                        return bad("bins must be at least 2");
                    }
                }
                Step::IntensityResample { mode } => match mode {
                    Discretization::FixedBinCount(n) if *n < 2 => {
                        return bad("fixed_bin_count must be at least 2");
                    }
                    Discretization::FixedBinWidth(w) if !(*w > 0.0) || !w.is_finite() => {
                        return bad("fixed_bin_width must be positive and finite");
                    }
                    _ => {}
                },
                Step::Reshape { target, .. } => match target {
                    ReshapeTarget::Spacing(s) => {
                        if s.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                            return bad("target spacing must be positive and finite");
                        }
                    }
                    ReshapeTarget::Dims(d) => {
                        if d.iter().any(|&x| x == 0) {
                            return bad("target dims must be at least 1");
                        }
                    }
                },
                Step::N4 => {}
            }
        }
        Ok(())
    }
}

/// Per-step execution record: intensity statistics over the step's scope
/// before and after the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    pub index: usize,
    pub name: &'static str,
    pub params: String,
    pub input: IntensityStats,
    pub output: IntensityStats,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StepError {
    #[error("intensity range is degenerate over the requested scope")]
    DegenerateIntensity,
    #[error("ROI scope requested but no mask is available")]
    MissingMask,
    #[error("reference volume {0:?} not found")]
    MissingReference(String),
    #[error("step {0:?} is reserved but not implemented")]
    Unsupported(&'static str),
}

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("step {index} ({name}): {source}")]
    Step {
        index: usize,
        name: &'static str,
        #[source]
        source: StepError,
    },
}

fn scope_values(v: &Volume, scope: Scope, mask: Option<&Mask>) -> Result<Vec<f64>, StepError> {
    match scope {
        Scope::Whole => Ok(v.data.clone()),
        Scope::Roi => {
            let m = mask.ok_or(StepError::MissingMask)?;
            let values: Vec<f64> = v
                .data
                .iter()
                .zip(&m.data)
                .filter(|(_, &flag)| flag == 1)
                .map(|(&x, _)| x)
                .collect();
            if values.is_empty() {
                return Err(StepError::DegenerateIntensity);
            }
            Ok(values)
        }
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

fn with_data(v: &Volume, data: Vec<f64>) -> Volume {
    let mut out = Volume {
        geom: v.geom.clone(),
        data,
        stored: ScalarType::Float64,
        intensity_unit: "arbitrary".into(),
    };
    out.tighten_storage();
    out
}

/// Affine map of the volume's intensity range onto `[out_min, out_max]`.
pub fn rescale(v: &Volume, out_min: f64, out_max: f64) -> Result<Volume, StepError> {
    let (min, max) = min_max(&v.data);
    if !(max > min) {
        return Err(StepError::DegenerateIntensity);
    }
    let scale = (out_max - out_min) / (max - min);
    Ok(with_data(v, v.data.iter().map(|&x| out_min + (x - min) * scale).collect()))
}

/// `(x − mean)/std` with population statistics estimated over `scope` and
/// applied to every voxel.
pub fn zscore(v: &Volume, scope: Scope, mask: Option<&Mask>) -> Result<Volume, StepError> {
    let values = scope_values(v, scope, mask)?;
    let stats = IntensityStats::of(&values).ok_or(StepError::DegenerateIntensity)?;
    if !(stats.std > 0.0) {
        return Err(StepError::DegenerateIntensity);
    }
    Ok(with_data(v, v.data.iter().map(|&x| (x - stats.mean) / stats.std).collect()))
}

/// Quantize `values` to `levels` equal-width bins over its own range and
/// return (min, width, per-bin cumulative fractions).
fn quantized_cdf(values: &[f64], levels: usize) -> Result<(f64, f64, Vec<f64>), StepError> {
    let (min, max) = min_max(values);
    if !(max > min) {
        return Err(StepError::DegenerateIntensity);
    }
    let width = (max - min) / levels as f64;
    let mut counts = vec![0u64; levels];
    for &x in values {
        let bin = (((x - min) / width) as usize).min(levels - 1);
        counts[bin] += 1;
    }
    let n = values.len() as f64;
    let mut cdf = Vec::with_capacity(levels);
    let mut running = 0u64;
    for c in counts {
        running += c;
        cdf.push(running as f64 / n);
    }
    Ok((min, width, cdf))
}

/// Classic CDF matching: each voxel's empirical CDF position in the source is
/// pushed through the inverse reference CDF. Both histograms use `levels`
/// equal-width bins, so the mapping is exact to one bin width and monotone.
pub fn hist_match(v: &Volume, reference: &Volume, levels: usize) -> Result<Volume, StepError> {
    let (src_min, src_width, src_cdf) = quantized_cdf(&v.data, levels)?;
    let (ref_min, ref_width, ref_cdf) = quantized_cdf(&reference.data, levels)?;

    // Precompute the bin-to-value mapping once; voxels then index into it.
    let mapping: Vec<f64> = src_cdf
        .iter()
        .map(|&c| {
            let r = ref_cdf.partition_point(|&rc| rc < c);
            ref_min + (r.min(levels - 1) as f64 + 0.5) * ref_width
        })
        .collect();

    let data = v
        .data
        .iter()
        .map(|&x| {
            let bin = (((x - src_min) / src_width) as usize).min(levels - 1);
            mapping[bin]
        })
        .collect();
    Ok(with_data(v, data))
}

/// Histogram equalization: value → its CDF position, scaled back onto the
/// original intensity range.
pub fn hist_equalize(v: &Volume, bins: usize) -> Result<Volume, StepError> {
    let (min, width, cdf) = quantized_cdf(&v.data, bins)?;
    let max = min + width * bins as f64;
    let data = v
        .data
        .iter()
        .map(|&x| {
            let bin = (((x - min) / width) as usize).min(bins - 1);
            min + cdf[bin] * (max - min)
        })
        .collect();
    Ok(with_data(v, data))
}

/// Discretize intensities to integer levels starting at 1.
pub fn intensity_resample(v: &Volume, mode: &Discretization) -> Result<Volume, StepError> {
    let data = discretize(&v.data, mode)?;
    Ok(with_data(v, data.into_iter().map(|l| l as f64).collect()))
}

/// The shared discretization kernel: levels are 1-based.
pub fn discretize(values: &[f64], mode: &Discretization) -> Result<Vec<u32>, StepError> {
    let (min, max) = min_max(values);
    match *mode {
        Discretization::FixedBinCount(n) => {
            if !(max > min) {
                return Err(StepError::DegenerateIntensity);
            }
            let n_f = n as f64;
            Ok(values
                .iter()
                .map(|&x| {
                    let level = (n_f * (x - min) / (max - min)).floor() as u32 + 1;
                    level.min(n as u32)
                })
                .collect())
        }
        Discretization::FixedBinWidth(w) => {
            Ok(values.iter().map(|&x| ((x - min) / w).floor() as u32 + 1).collect())
        }
    }
}

fn output_geometry(geom: &Geometry, target: &ReshapeTarget) -> ([usize; 3], [f64; 3]) {
    match target {
        ReshapeTarget::Spacing(s_out) => {
            let mut dims = [0; 3];
            for a in 0..3 {
                dims[a] = ((geom.dims[a] as f64 * geom.spacing[a] / s_out[a]).round() as usize).max(1);
            }
            (dims, *s_out)
        }
        ReshapeTarget::Dims(d_out) => {
            let mut spacing = [0.0; 3];
            for a in 0..3 {
                spacing[a] = geom.spacing[a] * geom.dims[a] as f64 / d_out[a] as f64;
            }
            (*d_out, spacing)
        }
    }
}

fn resample_grid(
    geom: &Geometry,
    at: &dyn Fn(usize, usize, usize) -> f64,
    target: &ReshapeTarget,
    interpolation: Interpolation,
) -> (Geometry, Vec<f64>) {
    let (dims, spacing) = output_geometry(geom, target);
    let out_geom = Geometry {
        dims,
        spacing,
        origin: geom.origin,
        direction: geom.direction,
    };
    let [nx, ny, nz] = geom.dims;
    let clamp = |c: f64, n: usize| c.clamp(0.0, (n - 1) as f64);

    let mut data = Vec::with_capacity(out_geom.voxel_count());
    for k in 0..dims[2] {
        let cz = clamp(k as f64 * spacing[2] / geom.spacing[2], nz);
        for j in 0..dims[1] {
            let cy = clamp(j as f64 * spacing[1] / geom.spacing[1], ny);
            for i in 0..dims[0] {
                let cx = clamp(i as f64 * spacing[0] / geom.spacing[0], nx);
                let value = match interpolation {
                    Interpolation::Nearest => {
                        at(cx.round() as usize, cy.round() as usize, cz.round() as usize)
                    }
                    Interpolation::Trilinear => {
                        let (x0, y0, z0) = (cx.floor() as usize, cy.floor() as usize, cz.floor() as usize);
                        let (x1, y1, z1) = ((x0 + 1).min(nx - 1), (y0 + 1).min(ny - 1), (z0 + 1).min(nz - 1));
                        let (fx, fy, fz) = (cx - x0 as f64, cy - y0 as f64, cz - z0 as f64);
                        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
                        let c00 = lerp(at(x0, y0, z0), at(x1, y0, z0), fx);
                        let c10 = lerp(at(x0, y1, z0), at(x1, y1, z0), fx);
                        let c01 = lerp(at(x0, y0, z1), at(x1, y0, z1), fx);
                        let c11 = lerp(at(x0, y1, z1), at(x1, y1, z1), fx);
                        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
                    }
                };
                data.push(value);
            }
        }
    }
    (out_geom, data)
}

/// Resample the volume onto a new grid. The origin is preserved: output index
/// 0 samples the same patient-space point as input index 0 on every axis.
pub fn reshape(v: &Volume, target: &ReshapeTarget, interpolation: Interpolation) -> Volume {
    let at = |i: usize, j: usize, k: usize| v.at(i, j, k);
    let (geom, data) = resample_grid(&v.geom, &at, target, interpolation);
    let mut out = Volume {
        geom,
        data,
        stored: ScalarType::Float64,
        intensity_unit: v.intensity_unit.clone(),
    };
    out.tighten_storage();
    out
}

/// Resample a mask with nearest-neighbor interpolation (the only kind that
/// keeps voxels binary).
pub fn reshape_mask(m: &Mask, target: &ReshapeTarget) -> Mask {
    let at = |i: usize, j: usize, k: usize| f64::from(m.at(i, j, k));
    let (geom, data) = resample_grid(&m.geom, &at, target, Interpolation::Nearest);
    Mask {
        geom,
        data: data.into_iter().map(|x| x as u8).collect(),
    }
}

/// Context a chain may need: the paired ROI mask and any named reference
/// volumes for histogram matching.
pub struct ChainContext<'a> {
    pub mask: Option<&'a Mask>,
    pub references: &'a BTreeMap<String, Volume>,
}

impl<'a> ChainContext<'a> {
    pub fn new(mask: Option<&'a Mask>, references: &'a BTreeMap<String, Volume>) -> Self {
        ChainContext { mask, references }
    }
}

/// Result of running a chain: the transformed volume, the mask carried along
/// (reshaped in lock-step when a reshape step occurs), and per-step stats.
pub struct ChainOutput {
    pub volume: Volume,
    pub mask: Option<Mask>,
    pub stats: Vec<StepStats>,
}

/// Apply `params.steps` in order. Parameters are validated up front; step
/// failures carry the step index and name.
pub fn run_chain(v: &Volume, ctx: &ChainContext, params: &PreprocessParams) -> Result<ChainOutput, PreprocessError> {
    params.validate()?;
    let mut volume = v.clone();
    let mut mask = ctx.mask.cloned();
    let mut stats = Vec::new();

    for (index, step) in params.steps.iter().enumerate() {
        let name = step.name();
        let fail = |source: StepError| PreprocessError::Step { index, name, source };

        let scope = match step {
            Step::Zscore { scope } => *scope,
            _ => Scope::Whole,
        };
        let input = IntensityStats::of(&scope_values(&volume, scope, mask.as_ref()).map_err(fail)?)
            .ok_or_else(|| fail(StepError::DegenerateIntensity))?;

        let next = match step {
            Step::Rescale { out_min, out_max } => rescale(&volume, *out_min, *out_max).map_err(fail)?,
            Step::Zscore { scope } => zscore(&volume, *scope, mask.as_ref()).map_err(fail)?,
            Step::HistMatch { reference, levels } => {
                let reference_volume = ctx
                    .references
                    .get(reference)
                    .ok_or_else(|| fail(StepError::MissingReference(reference.clone())))?;
                hist_match(&volume, reference_volume, *levels).map_err(fail)?
            }
            Step::HistEqualize { bins } => hist_equalize(&volume, *bins).map_err(fail)?,
            Step::IntensityResample { mode } => intensity_resample(&volume, mode).map_err(fail)?,
            Step::Reshape { target, interpolation } => {
                if let Some(m) = &mask {
                    mask = Some(reshape_mask(m, target));
                }
                reshape(&volume, target, *interpolation)
            }
            Step::N4 => return Err(fail(StepError::Unsupported("n4"))),
        };

        let output = IntensityStats::of(&scope_values(&next, scope, mask.as_ref()).map_err(fail)?)
            .ok_or_else(|| fail(StepError::DegenerateIntensity))?;
        stats.push(StepStats {
            index,
            name,
            params: step.params_echo(),
            input,
            output,
        });
        volume = next;
    }

    Ok(ChainOutput { volume, mask, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn volume_of(values: Vec<f64>) -> Volume {
        let n = values.len();
        Volume {
            geom: Geometry::axial([n, 1, 1], [1.0; 3], [0.0; 3]),
            data: values,
            stored: ScalarType::Float64,
            intensity_unit: "HU".into(),
        }
    }

    fn cube(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Volume {
        let geom = Geometry::axial([n, n, n], [1.0; 3], [0.0; 3]);
        let mut data = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    data.push(f(i, j, k));
                }
            }
        }
        Volume {
            geom,
            data,
            stored: ScalarType::Float64,
            intensity_unit: "HU".into(),
        }
    }

    static NO_REFS: std::sync::OnceLock<BTreeMap<String, Volume>> = std::sync::OnceLock::new();

    fn ctx_plain<'a>() -> ChainContext<'a> {
        ChainContext {
            mask: None,
            references: NO_REFS.get_or_init(BTreeMap::new),
        }
    }

    #[test]
    fn rescale_maps_endpoints_and_midpoint() {
        let v = volume_of((0..=100).map(f64::from).collect());
        let out = rescale(&v, 0.0, 1.0).unwrap();
        assert_eq!(out.data[0], 0.0);
        assert_eq!(out.data[100], 1.0);
        assert_eq!(out.data[50], 0.5);

        let two = rescale(&volume_of(vec![-1024.0, 3071.0]), 0.0, 255.0).unwrap();
        assert_eq!(two.data, vec![0.0, 255.0]);

        assert_eq!(rescale(&volume_of(vec![5.0; 4]), 0.0, 1.0), Err(StepError::DegenerateIntensity));
    }

    #[test]
    fn zscore_matches_hand_arithmetic_and_is_idempotent() {
        let v = volume_of(vec![1.0, 2.0, 3.0, 4.0]);
        let out = zscore(&v, Scope::Whole, None).unwrap();
        assert_abs_diff_eq!(out.data[3], 1.5 / 1.25f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(out.data[3], 1.3416407864998738, epsilon = 1e-9);

        let twice = zscore(&out, Scope::Whole, None).unwrap();
        for (a, b) in twice.data.iter().zip(&out.data) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }

        let stats = IntensityStats::of(&out.data).unwrap();
        assert_abs_diff_eq!(stats.mean, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(stats.std, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zscore_roi_scope_uses_only_masked_voxels() {
        let v = volume_of(vec![1.0, 2.0, 3.0, 4.0, 1000.0]);
        let mask = Mask {
            geom: v.geom.clone(),
            data: vec![1, 1, 1, 1, 0],
        };
        let out = zscore(&v, Scope::Roi, Some(&mask)).unwrap();
        assert_abs_diff_eq!(out.data[3], 1.3416407864998738, epsilon = 1e-9);

        assert_eq!(zscore(&v, Scope::Roi, None), Err(StepError::MissingMask));
        let empty = Mask {
            geom: v.geom.clone(),
            data: vec![0; 5],
        };
        assert_eq!(zscore(&v, Scope::Roi, Some(&empty)), Err(StepError::DegenerateIntensity));
        let flat = Mask {
            geom: v.geom.clone(),
            data: vec![1, 0, 0, 0, 0],
        };
        assert_eq!(zscore(&v, Scope::Roi, Some(&flat)), Err(StepError::DegenerateIntensity));
    }

    #[test]
    fn hist_match_identity_stays_within_one_bin() {
        let v = volume_of((0..512).map(|i| f64::from(i) * 0.37 - 20.0).collect());
        let out = hist_match(&v, &v, 256).unwrap();
        let bin_width = (v.data[511] - v.data[0]) / 256.0;
        for (o, x) in out.data.iter().zip(&v.data) {
            assert!((o - x).abs() <= bin_width, "moved more than one bin: {x} -> {o}");
        }
    }

    #[test]
    fn hist_match_uniform_to_shifted_uniform() {
        let n = 4096;
        let src = volume_of((0..n).map(|i| i as f64 / (n - 1) as f64).collect());
        let reference = volume_of((0..n).map(|i| 10.0 + 10.0 * i as f64 / (n - 1) as f64).collect());
        let out = hist_match(&src, &reference, 256).unwrap();
        let bin_width = 10.0 / 256.0;
        for (o, x) in out.data.iter().zip(&src.data) {
            let expected = 10.0 + 10.0 * x;
            assert!(
                (o - expected).abs() <= bin_width + 1e-9,
                "value {x}: got {o}, want about {expected}"
            );
        }
    }

    #[test]
    fn hist_match_is_monotone() {
        let src = volume_of(vec![3.0, -7.0, 12.0, 0.5, 0.5, 99.0, -2.0, 14.0, 3.2, 8.8]);
        let reference = volume_of(vec![100.0, 200.0, 150.0, 120.0, 180.0, 160.0, 110.0]);
        let out = hist_match(&src, &reference, 64).unwrap();
        let mut pairs: Vec<(f64, f64)> = src.data.iter().copied().zip(out.data.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pairs.windows(2) {
            assert!(w[0].1 <= w[1].1, "mapping not monotone at {:?}", w);
        }
    }

    #[test]
    fn hist_equalize_two_spike_histogram() {
        let mut values = vec![0.0; 900];
        values.extend(vec![255.0; 100]);
        let out = hist_equalize(&volume_of(values), 256).unwrap();
        assert_abs_diff_eq!(out.data[0], 0.9 * 255.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.data[950], 255.0, epsilon = 1e-9);
        assert_eq!(
            hist_equalize(&volume_of(vec![7.0; 9]), 16),
            Err(StepError::DegenerateIntensity)
        );
    }

    #[test]
    fn intensity_resample_examples() {
        let v = volume_of((0..=10).map(f64::from).collect());
        let out = intensity_resample(&v, &Discretization::FixedBinCount(5)).unwrap();
        assert_eq!(out.data[0], 1.0);
        assert_eq!(out.data[10], 5.0);
        let levels: std::collections::BTreeSet<u64> = out.data.iter().map(|&x| x as u64).collect();
        assert_eq!(levels, (1..=5).collect());

        let fbs = volume_of(vec![-50.0, 0.0, 30.0]);
        let out = intensity_resample(&fbs, &Discretization::FixedBinWidth(25.0)).unwrap();
        assert_eq!(out.data, vec![1.0, 3.0, 4.0]);

        assert_eq!(
            intensity_resample(&volume_of(vec![2.0; 3]), &Discretization::FixedBinCount(5)),
            Err(StepError::DegenerateIntensity)
        );
        // FBS tolerates constant input: everything lands on level 1.
        let flat = intensity_resample(&volume_of(vec![2.0; 3]), &Discretization::FixedBinWidth(25.0)).unwrap();
        assert_eq!(flat.data, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn reshape_dimension_arithmetic_and_ramp() {
        let v = cube(4, |i, j, k| 2.0 * i as f64 + 3.0 * j as f64 + 5.0 * k as f64);
        let out = reshape(&v, &ReshapeTarget::Spacing([2.0; 3]), Interpolation::Trilinear);
        assert_eq!(out.geom.dims, [2, 2, 2]);
        assert_eq!(out.geom.spacing, [2.0; 3]);
        assert_eq!(out.geom.origin, v.geom.origin);

        // Upsampling a ramp reproduces it exactly at interior sample points.
        let up = reshape(&v, &ReshapeTarget::Spacing([0.5; 3]), Interpolation::Trilinear);
        assert_eq!(up.geom.dims, [8, 8, 8]);
        for k in 0..7 {
            for j in 0..7 {
                for i in 0..7 {
                    let expected = 2.0 * (i as f64 * 0.5) + 3.0 * (j as f64 * 0.5) + 5.0 * (k as f64 * 0.5);
                    assert_abs_diff_eq!(up.at(i, j, k), expected, epsilon = 1e-9);
                }
            }
        }

        let flat = reshape(&cube(3, |_, _, _| 42.0), &ReshapeTarget::Dims([5, 2, 7]), Interpolation::Trilinear);
        assert_eq!(flat.geom.dims, [5, 2, 7]);
        assert!(flat.data.iter().all(|&x| x == 42.0));
    }

    #[test]
    fn reshape_mask_stays_binary_and_tracks_volume_geometry() {
        let v = cube(4, |i, _, _| i as f64);
        let mut m = Mask {
            geom: v.geom.clone(),
            data: vec![0; 64],
        };
        for idx in [21, 22, 25, 26] {
            m.data[idx] = 1;
        }
        let target = ReshapeTarget::Spacing([0.5, 0.5, 1.0]);
        let vol_out = reshape(&v, &target, Interpolation::Trilinear);
        let mask_out = reshape_mask(&m, &target);
        assert_eq!(vol_out.geom, mask_out.geom);
        assert!(mask_out.data.iter().all(|&b| b <= 1));
        assert!(mask_out.data.iter().any(|&b| b == 1));
    }

    #[test]
    fn chain_runs_in_order_with_stats() {
        let v = volume_of((0..=100).map(f64::from).collect());
        let params = PreprocessParams {
            steps: vec![
                Step::Rescale { out_min: 0.0, out_max: 1.0 },
                Step::Zscore { scope: Scope::Whole },
            ],
        };
        let out = run_chain(&v, &ctx_plain(), &params).unwrap();
        let final_stats = IntensityStats::of(&out.volume.data).unwrap();
        assert_abs_diff_eq!(final_stats.mean, 0.0, epsilon = 1e-9);
        assert_eq!(out.stats.len(), 2);
        assert_eq!(out.stats[0].name, "rescale");
        assert_eq!(out.stats[0].params, "out_min=0 out_max=1");
        assert_eq!(out.stats[0].input.max, 100.0);
        assert_eq!(out.stats[0].output.max, 1.0);
        assert_eq!(out.stats[1].index, 1);
    }

    #[test]
    fn empty_chain_is_identity() {
        let v = volume_of(vec![3.0, 1.0, 2.0]);
        let out = run_chain(&v, &ctx_plain(), &PreprocessParams::default()).unwrap();
        assert_eq!(out.volume.data, v.data);
        assert!(out.stats.is_empty());
    }

    #[test]
    fn chain_error_names_the_failing_step() {
        let v = volume_of((0..10).map(f64::from).collect());
        let params = PreprocessParams {
            steps: vec![
                Step::Rescale { out_min: 0.0, out_max: 1.0 },
                Step::HistEqualize { bins: 16 },
                Step::N4,
            ],
        };
        match run_chain(&v, &ctx_plain(), &params) {
            Err(PreprocessError::Step { index: 2, name: "n4", source: StepError::Unsupported(_) }) => {}
            other => panic!("expected step-2 failure, got {:?}", other.err().map(|e| e.to_string())),
        }
    }

    #[test]
    fn chain_reshape_carries_the_mask_along() {
        let v = cube(4, |i, j, k| (i + j + k) as f64);
        let mask = Mask {
            geom: v.geom.clone(),
            data: (0..64).map(|i| u8::from(i % 3 == 0)).collect(),
        };
        let refs = BTreeMap::new();
        let ctx = ChainContext::new(Some(&mask), &refs);
        let params = PreprocessParams {
            steps: vec![Step::Reshape {
                target: ReshapeTarget::Dims([2, 2, 2]),
                interpolation: Interpolation::Trilinear,
            }],
        };
        let out = run_chain(&v, &ctx, &params).unwrap();
        assert_eq!(out.mask.as_ref().unwrap().geom, out.volume.geom);
    }

    #[test]
    fn hist_match_needs_its_reference() {
        let v = volume_of((0..10).map(f64::from).collect());
        let params = PreprocessParams {
            steps: vec![Step::HistMatch { reference: "other".into(), levels: 64 }],
        };
        match run_chain(&v, &ctx_plain(), &params) {
            Err(PreprocessError::Step { index: 0, source: StepError::MissingReference(id), .. }) => {
                assert_eq!(id, "other");
            }
            other => panic!("expected missing reference, got {:?}", other.err().map(|e| e.to_string())),
        }

        let mut refs = BTreeMap::new();
        refs.insert("other".to_string(), volume_of((0..10).map(|i| f64::from(i) + 100.0).collect()));
        let ctx = ChainContext::new(None, &refs);
        let out = run_chain(&v, &ctx, &params).unwrap();
        assert!(out.volume.data.iter().all(|&x| (100.0..=110.0).contains(&x)));
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let cases = vec![
            Step::Rescale { out_min: 1.0, out_max: 0.0 },
            Step::HistMatch { reference: "r".into(), levels: 1 },
            Step::HistEqualize { bins: 1 },
            Step::IntensityResample { mode: Discretization::FixedBinCount(1) },
            Step::IntensityResample { mode: Discretization::FixedBinWidth(0.0) },
            Step::Reshape { target: ReshapeTarget::Spacing([1.0, 0.0, 1.0]), interpolation: Interpolation::Trilinear },
            Step::Reshape { target: ReshapeTarget::Dims([0, 2, 2]), interpolation: Interpolation::Nearest },
        ];
        for step in cases {
            let params = PreprocessParams { steps: vec![step.clone()] };
            assert!(
                matches!(params.validate(), Err(PreprocessError::InvalidParams(_))),
                "expected rejection of {step:?}"
            );
        }
    }

    #[test]
    fn params_round_trip_through_json() {
        let text = r#"{
            "steps": [
                {"rescale": {"out_min": 0.0, "out_max": 1.0}},
                {"zscore": {"scope": "roi"}},
                {"hist_match": {"reference": "case_007"}},
                {"hist_equalize": {"bins": 64}},
                {"intensity_resample": {"mode": {"fixed_bin_width": 25.0}}},
                {"reshape": {"target": {"spacing": [1.0, 1.0, 3.0]}}},
                "n4"
            ]
        }"#;
        let params: PreprocessParams = serde_json::from_str(text).unwrap();
        assert_eq!(params.steps.len(), 7);
        assert_eq!(params.steps[2], Step::HistMatch { reference: "case_007".into(), levels: 1024 });
        assert_eq!(
            params.steps[5],
            Step::Reshape {
                target: ReshapeTarget::Spacing([1.0, 1.0, 3.0]),
                interpolation: Interpolation::Trilinear
            }
        );
        assert_eq!(params.steps[6], Step::N4);
        let back: PreprocessParams = serde_json::from_str(&serde_json::to_string(&params).unwrap()).unwrap();
        assert_eq!(back, params);
    }
}
