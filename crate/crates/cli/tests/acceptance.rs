//! Behavior-level acceptance checks for the whole toolkit, one test per
//! criterion. Every numeric result is validated against an independent
//! oracle implemented in this file (or against full enumeration), never
//! against the library's own arithmetic.
//!
//! Each test prints a `[acceptance] ...: pass` line with its runtime; the
//! optional cohort test prints a SKIP line unless its dataset is configured.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use radgate_core::analysis::{self, LoadSpec, NanAxis};
use radgate_core::dicom::{parse_file, ContourSet};
use radgate_core::features::{extract_one, ExtractionParams, Family};
use radgate_core::fixtures::{
    self, build_ct_series, default_preprocess_params, default_quality_spec, encode_object,
    metadata_variant, shape_outline, CtSeriesSpec, Defect, RoiShape,
};
use radgate_core::nrrd;
use radgate_core::preprocess::{run_chain, ChainContext, Discretization};
use radgate_core::qc::{quality_check, CheckFlag};
use radgate_core::rasterize::rasterize;
use radgate_core::volume::{Geometry, Mask, ScalarType, Volume};

fn assert_rel_close(what: &str, got: f64, want: f64, tol: f64) {
    let scale = got.abs().max(want.abs()).max(1.0);
    assert!(
        (got - want).abs() <= tol * scale,
        "{what}: got {got}, oracle says {want} (diff {})",
        (got - want).abs()
    );
}

fn done(label: &str, started: Instant) {
    println!("[acceptance] {label}: pass ({} ms)", started.elapsed().as_millis());
}

// ---------------------------------------------------------------------------
// criterion 1: the quality-check defect matrix is exact

#[test]
fn qc_defect_matrix_is_exact_across_twenty_seeds() {
    let started = Instant::now();
    let qspec = default_quality_spec();

    for seed in 0..20u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(0xDE_FEC7 + seed);
        let spec = CtSeriesSpec::sample(&mut rng, &format!("CASE_{seed:02}"));

        let clean = build_ct_series(&spec).to_series_record();
        let report = quality_check(&[clean], &[], &qspec);
        let row = &report.rows[0];
        assert!(row.overall, "seed {seed}: clean series was flagged: {:?}", row.notes);
        assert_eq!(row.flags.len(), 9, "seed {seed}: expected all nine checks enabled");
        for (kind, flag) in &row.flags {
            assert_eq!(*flag, CheckFlag::Pass, "seed {seed}: false positive on {}", kind.name());
        }

        for defect in Defect::ALL {
            let record = build_ct_series(&spec.clone().with_defect(defect)).to_series_record();
            let report = quality_check(&[record], &[], &qspec);
            let row = &report.rows[0];
            assert!(!row.overall, "seed {seed}: defect {} slipped through", defect.kind_name());
            for (kind, flag) in &row.flags {
                let expected = if *kind == defect.failing_check() { CheckFlag::Fail } else { CheckFlag::Pass };
                assert_eq!(
                    *flag,
                    expected,
                    "seed {seed}, defect {}: check {} reported {:?}",
                    defect.kind_name(),
                    kind.name(),
                    flag
                );
            }
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "defect matrix took {elapsed:?}, limit is 10 s");
    done("QC defect matrix, 20 seeds x (clean + 9 defects), 0 FP / 0 FN", started);
}

// ---------------------------------------------------------------------------
// criterion 2: DICOM metadata round-trips without loss

#[test]
fn dicom_metadata_survives_two_hundred_round_trips() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xD1C0);

    for serial in 0..200u64 {
        let obj = metadata_variant(&mut rng, serial);
        let bytes = encode_object(&obj);
        let back = parse_file(&bytes).unwrap_or_else(|e| panic!("variant {serial} failed to parse: {e}"));
        assert_eq!(obj, back, "variant {serial} changed across encode/parse");
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "round-trips took {elapsed:?}, limit is 5 s");
    done("DICOM round-trip, 200 metadata variants field-for-field", started);
}

// ---------------------------------------------------------------------------
// criterion 3: rasterization agrees with an even-odd oracle

/// Even-odd point-in-polygon in index space, with its own affine transform.
fn oracle_inside(poly: &[[f64; 3]], geom: &Geometry, i: usize, j: usize) -> bool {
    let x = i as f64;
    let y = j as f64;
    let to_index = |p: &[f64; 3]| {
        [
            (p[0] - geom.origin[0]) / geom.spacing[0],
            (p[1] - geom.origin[1]) / geom.spacing[1],
        ]
    };
    let mut count = 0;
    for e in 0..poly.len() {
        let [x1, y1] = to_index(&poly[e]);
        let [x2, y2] = to_index(&poly[(e + 1) % poly.len()]);
        if (y1 <= y && y < y2) || (y2 <= y && y < y1) {
            let xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1);
            if x < xc {
                count += 1;
            }
        }
    }
    count % 2 == 1
}

#[test]
fn rasterization_matches_the_even_odd_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0x6A5);

    for grid in 0..3 {
        let dims = [rng.gen_range(12..40), rng.gen_range(12..40), rng.gen_range(1..4usize)];
        let spacing = [rng.gen_range(0.4..2.0), rng.gen_range(0.4..2.0), rng.gen_range(1.0..5.0)];
        let origin = [rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0), rng.gen_range(-80.0..80.0)];
        let geom = Geometry::axial(dims, spacing, origin);

        let k = dims[2] / 2;
        let z = origin[2] + spacing[2] * k as f64;
        let cx = origin[0] + spacing[0] * (dims[0] - 1) as f64 / 2.0 + rng.gen_range(-1.0..1.0);
        let cy = origin[1] + spacing[1] * (dims[1] - 1) as f64 / 2.0 + rng.gen_range(-1.0..1.0);
        let extent = (spacing[0] * dims[0] as f64).min(spacing[1] * dims[1] as f64);

        let shapes = [
            ("square", RoiShape::Square { half: 0.27 * extent }),
            ("triangle", RoiShape::Triangle { half: 0.33 * extent }),
            ("16-gon", RoiShape::Ngon { vertices: 16, radius: 0.31 * extent }),
        ];
        for (name, shape) in shapes {
            let outline = shape_outline(shape, cx, cy, z);
            let set = ContourSet {
                roi_name: name.to_string(),
                referenced_series_uid: String::new(),
                planar_contours: vec![outline.clone()],
            };
            let (mask, warnings) = rasterize(&set, &geom);
            assert!(warnings.is_empty(), "grid {grid}, {name}: unexpected warnings {warnings:?}");
            for kk in 0..dims[2] {
                for j in 0..dims[1] {
                    for i in 0..dims[0] {
                        let expected = kk == k && oracle_inside(&outline, &geom, i, j);
                        assert_eq!(
                            mask.at(i, j, kk) == 1,
                            expected,
                            "grid {grid}, {name}: voxel ({i},{j},{kk}) disagrees with the oracle"
                        );
                    }
                }
            }
        }
    }
    done("rasterization vs even-odd oracle, 3 shapes x 3 random grids, voxel-for-voxel", started);
}

// ---------------------------------------------------------------------------
// criterion 4: NRRD round-trips are bit-exact

fn assert_volume_bit_exact(v: &Volume, context: &str) {
    let bytes = nrrd::volume_to_bytes(v).expect("serializable volume");
    let back = nrrd::volume_from_bytes(&bytes).expect("parse own output");
    assert_eq!(back.stored, v.stored, "{context}: stored type changed");
    assert_eq!(back.geom.dims, v.geom.dims, "{context}: dims changed");
    assert_eq!(back.data.len(), v.data.len(), "{context}: voxel count changed");
    for (idx, (a, b)) in v.data.iter().zip(&back.data).enumerate() {
        assert_eq!(a.to_bits(), b.to_bits(), "{context}: voxel {idx} not bit-identical");
    }
    let again = nrrd::volume_to_bytes(&back).expect("serializable volume");
    assert_eq!(bytes, again, "{context}: re-serialization differs");
}

#[test]
fn nrrd_round_trip_is_bit_exact_including_preprocess() {
    let started = Instant::now();
    let geom = Geometry::axial([7, 6, 5], [0.9, 1.1, 2.5], [-12.5, 3.25, -40.0]);

    let mut int16_data: Vec<f64> = (0..geom.voxel_count())
        .map(|i| ((i as i64 * 2731 + 17) % 65536 - 32768) as f64)
        .collect();
    int16_data[0] = f64::from(i16::MIN);
    int16_data[1] = f64::from(i16::MAX);
    let mut v16 = Volume {
        geom: geom.clone(),
        data: int16_data,
        stored: ScalarType::Float64,
        intensity_unit: "HU".into(),
    };
    v16.tighten_storage();
    assert_eq!(v16.stored, ScalarType::Int16);
    assert_volume_bit_exact(&v16, "int16 volume");

    // uint8 is what the reader assigns to `uchar` files, so build one as read
    let v8 = Volume {
        geom: geom.clone(),
        data: (0..geom.voxel_count()).map(|i| ((i * 37) % 256) as f64).collect(),
        stored: ScalarType::Uint8,
        intensity_unit: "stored".into(),
    };
    assert_volume_bit_exact(&v8, "uint8 volume");

    // the mask payload is uint8 as well
    let mask = Mask {
        geom: geom.clone(),
        data: (0..geom.voxel_count()).map(|i| u8::from(i % 3 == 0)).collect(),
    };
    let mbytes = nrrd::mask_to_bytes(&mask);
    let dir = tempfile::tempdir().unwrap();
    let mpath = dir.path().join("mask.nrrd");
    nrrd::write_mask(&mask, &mpath).unwrap();
    let mback = nrrd::read_mask(&mpath).unwrap();
    assert_eq!(mback.data, mask.data, "mask payload changed");
    assert_eq!(nrrd::mask_to_bytes(&mback), mbytes, "mask re-serialization differs");

    // after the full default preprocess chain the payload is float, and the
    // round-trip must still be bit-exact
    let params = default_preprocess_params();
    let refs = BTreeMap::new();
    let ctx = ChainContext::new(None, &refs);
    let out = run_chain(&v16, &ctx, &params).expect("default chain");
    assert_eq!(out.volume.stored, ScalarType::Float64);
    assert_volume_bit_exact(&out.volume, "preprocessed volume");

    done("NRRD round-trip bit-exact: int16, uint8, mask, and post-preprocess float", started);
}

// ---------------------------------------------------------------------------
// criterion 5: features agree with a brute-force oracle

mod feature_oracle {
    use std::collections::BTreeMap;

    use radgate_core::preprocess::Discretization;
    use radgate_core::volume::{Mask, Volume};

    /// 1-based levels; a constant list collapses to level 1.
    pub fn levels(values: &[f64], mode: &Discretization) -> Vec<u32> {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min == max {
            return vec![1; values.len()];
        }
        values
            .iter()
            .map(|&x| match *mode {
                Discretization::FixedBinCount(n) => {
                    let raw = (n as f64 * (x - min) / (max - min)).floor() as u32 + 1;
                    raw.min(n as u32)
                }
                Discretization::FixedBinWidth(w) => ((x - min) / w).floor() as u32 + 1,
            })
            .collect()
    }

    pub fn first_order(values: &[f64], mode: &Discretization) -> BTreeMap<&'static str, f64> {
        let n = values.len() as f64;
        let mut sum = 0.0;
        for &x in values {
            sum += x;
        }
        let mean = sum / n;
        let (mut m2, mut m3, mut m4, mut energy) = (0.0, 0.0, 0.0, 0.0);
        for &x in values {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
            energy += x * x;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let (skewness, kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2))
        } else {
            (0.0, 0.0)
        };

        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let len = sorted.len();
        let median = if len % 2 == 1 {
            sorted[len / 2]
        } else {
            (sorted[len / 2 - 1] + sorted[len / 2]) / 2.0
        };
        let pct = |q: f64| {
            let rank = q * (len - 1) as f64;
            let lo = rank.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            let frac = rank - lo as f64;
            (1.0 - frac) * sorted[lo] + frac * sorted[hi]
        };

        let mut hist: BTreeMap<u32, u64> = BTreeMap::new();
        for level in levels(values, mode) {
            *hist.entry(level).or_insert(0) += 1;
        }
        let (mut entropy, mut uniformity) = (0.0, 0.0);
        for &c in hist.values() {
            let p = c as f64 / n;
            entropy -= p * p.log2();
            uniformity += p * p;
        }

        BTreeMap::from([
            ("Energy", energy),
            ("Entropy", entropy),
            ("Kurtosis", kurtosis),
            ("Maximum", sorted[len - 1]),
            ("Mean", mean),
            ("Median", median),
            ("Minimum", sorted[0]),
            ("Percentile10", pct(0.10)),
            ("Percentile90", pct(0.90)),
            ("Range", sorted[len - 1] - sorted[0]),
            ("RootMeanSquared", (energy / n).sqrt()),
            ("Skewness", skewness),
            ("Uniformity", uniformity),
            ("Variance", m2),
        ])
    }

    pub fn shape(m: &Mask) -> BTreeMap<&'static str, f64> {
        let [nx, ny, nz] = m.geom.dims;
        let [sx, sy, sz] = m.geom.spacing;
        let filled = |i: i64, j: i64, k: i64| -> bool {
            i >= 0
                && j >= 0
                && k >= 0
                && i < nx as i64
                && j < ny as i64
                && k < nz as i64
                && m.data[i as usize + nx * (j as usize + ny * k as usize)] == 1
        };

        let mut count = 0u64;
        let mut area = 0.0;
        let mut boundary: Vec<[f64; 3]> = Vec::new();
        for k in 0..nz as i64 {
            for j in 0..ny as i64 {
                for i in 0..nx as i64 {
                    if !filled(i, j, k) {
                        continue;
                    }
                    count += 1;
                    let mut exposed = 0.0;
                    for (di, dj, dk, face) in [
                        (-1, 0, 0, sy * sz),
                        (1, 0, 0, sy * sz),
                        (0, -1, 0, sx * sz),
                        (0, 1, 0, sx * sz),
                        (0, 0, -1, sx * sy),
                        (0, 0, 1, sx * sy),
                    ] {
                        if !filled(i + di, j + dj, k + dk) {
                            exposed += face;
                        }
                    }
                    if exposed > 0.0 {
                        area += exposed;
                        boundary.push([i as f64 * sx, j as f64 * sy, k as f64 * sz]);
                    }
                }
            }
        }

        let volume = count as f64 * sx * sy * sz;
        let mut diameter: f64 = 0.0;
        for (a, p) in boundary.iter().enumerate() {
            for q in &boundary[a + 1..] {
                let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
                diameter = diameter.max(d);
            }
        }

        BTreeMap::from([
            ("Maximum3DDiameter", diameter),
            ("Sphericity", (36.0 * std::f64::consts::PI * volume * volume).cbrt() / area),
            ("SurfaceArea", area),
            ("SurfaceVolumeRatio", area / volume),
            ("VoxelVolume", volume),
        ])
    }

    const DIRECTIONS: [[i64; 3]; 13] = [
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, 1, 0],
        [1, -1, 0],
        [1, 0, 1],
        [1, 0, -1],
        [0, 1, 1],
        [0, 1, -1],
        [1, 1, 1],
        [1, 1, -1],
        [1, -1, 1],
        [1, -1, -1],
    ];

    pub fn glcm(
        v: &Volume,
        m: &Mask,
        mode: &Discretization,
        distance: usize,
    ) -> BTreeMap<&'static str, Option<f64>> {
        let [nx, ny, nz] = v.geom.dims;
        let roi: Vec<f64> = v
            .data
            .iter()
            .zip(&m.data)
            .filter(|(_, &f)| f == 1)
            .map(|(&x, _)| x)
            .collect();
        let roi_levels = levels(&roi, mode);
        let mut grid: Vec<Option<u32>> = vec![None; v.data.len()];
        let mut it = roi_levels.into_iter();
        for (slot, &f) in grid.iter_mut().zip(&m.data) {
            if f == 1 {
                *slot = it.next();
            }
        }
        let level_at = |i: i64, j: i64, k: i64| -> Option<u32> {
            if i < 0 || j < 0 || k < 0 || i >= nx as i64 || j >= ny as i64 || k >= nz as i64 {
                return None;
            }
            grid[i as usize + nx * (j as usize + ny * k as usize)]
        };

        let mut sums: BTreeMap<&'static str, f64> = BTreeMap::new();
        let mut dirs = 0u32;
        let (mut corr_sum, mut corr_dirs) = (0.0, 0u32);

        for dir in DIRECTIONS {
            // scanning both orientations of the offset builds the symmetric
            // matrix directly
            let mut counts: BTreeMap<(u32, u32), u64> = BTreeMap::new();
            let mut total = 0u64;
            for k in 0..nz as i64 {
                for j in 0..ny as i64 {
                    for i in 0..nx as i64 {
                        let Some(a) = level_at(i, j, k) else { continue };
                        for sign in [1i64, -1] {
                            let (qi, qj, qk) = (
                                i + sign * dir[0] * distance as i64,
                                j + sign * dir[1] * distance as i64,
                                k + sign * dir[2] * distance as i64,
                            );
                            if let Some(b) = level_at(qi, qj, qk) {
                                *counts.entry((a, b)).or_insert(0) += 1;
                                total += 1;
                            }
                        }
                    }
                }
            }
            if total == 0 {
                continue;
            }
            dirs += 1;

            let t = total as f64;
            let (mut asm, mut contrast, mut dissim, mut idm, mut entropy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            let mut marginal: BTreeMap<u32, f64> = BTreeMap::new();
            let mut joint = 0.0;
            for (&(a, b), &c) in &counts {
                let p = c as f64 / t;
                let d = f64::from(a) - f64::from(b);
                asm += p * p;
                contrast += p * d * d;
                dissim += p * d.abs();
                idm += p / (1.0 + d * d);
                entropy -= p * p.log2();
                *marginal.entry(a).or_insert(0.0) += p;
                joint += f64::from(a) * f64::from(b) * p;
            }
            *sums.entry("AngularSecondMoment").or_insert(0.0) += asm;
            *sums.entry("Contrast").or_insert(0.0) += contrast;
            *sums.entry("Dissimilarity").or_insert(0.0) += dissim;
            *sums.entry("InverseDifferenceMoment").or_insert(0.0) += idm;
            *sums.entry("JointEntropy").or_insert(0.0) += entropy;

            let mean: f64 = marginal.iter().map(|(&a, &p)| f64::from(a) * p).sum();
            let var: f64 = marginal.iter().map(|(&a, &p)| f64::from(a) * f64::from(a) * p).sum::<f64>() - mean * mean;
            if var > 0.0 {
                corr_sum += (joint - mean * mean) / var;
                corr_dirs += 1;
            }
        }

        let avg = |name: &str| (dirs > 0).then(|| sums[name] / f64::from(dirs));
        BTreeMap::from([
            ("AngularSecondMoment", avg("AngularSecondMoment")),
            ("Contrast", avg("Contrast")),
            ("Correlation", (corr_dirs > 0).then(|| corr_sum / f64::from(corr_dirs))),
            ("Dissimilarity", avg("Dissimilarity")),
            ("InverseDifferenceMoment", avg("InverseDifferenceMoment")),
            ("JointEntropy", avg("JointEntropy")),
        ])
    }
}

fn all_families() -> Vec<Family> {
    vec![Family::Firstorder, Family::Shape, Family::Glcm]
}

#[test]
fn features_match_the_brute_force_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xFEA7);

    for case in 0..50u64 {
        let dims = [
            rng.gen_range(2..=8usize),
            rng.gen_range(2..=8usize),
            rng.gen_range(2..=8usize),
        ];
        let spacing = [
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.5..3.0),
        ];
        let geom = Geometry::axial(dims, spacing, [0.0; 3]);
        let n = geom.voxel_count();

        let data: Vec<f64> = (0..n)
            .map(|_| {
                if case % 3 == 0 {
                    f64::from(rng.gen_range(-100i32..100))
                } else {
                    rng.gen_range(-100.0..100.0)
                }
            })
            .collect();
        let mut mask_data: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.55))).collect();
        if mask_data.iter().all(|&f| f == 0) {
            mask_data[rng.gen_range(0..n)] = 1;
        }

        let v = Volume {
            geom: geom.clone(),
            data,
            stored: ScalarType::Float64,
            intensity_unit: "HU".into(),
        };
        let m = Mask { geom, data: mask_data };

        let mode = match case % 4 {
            0 => Discretization::FixedBinCount(6),
            1 => Discretization::FixedBinCount(16),
            2 => Discretization::FixedBinWidth(8.0),
            _ => Discretization::FixedBinWidth(25.0),
        };
        let distance = 1 + (case % 2) as usize;
        let params = ExtractionParams {
            discretization: mode.clone(),
            resample_spacing: None,
            feature_families: all_families(),
            glcm_distance: distance,
        };
        let got = extract_one(&v, &m, &params).unwrap_or_else(|e| panic!("case {case}: {e}"));

        let roi: Vec<f64> = v
            .data
            .iter()
            .zip(&m.data)
            .filter(|(_, &f)| f == 1)
            .map(|(&x, _)| x)
            .collect();
        for (name, want) in feature_oracle::first_order(&roi, &mode) {
            let column = format!("original_firstorder_{name}");
            assert_rel_close(
                &format!("case {case}, {column}"),
                got[&column].unwrap(),
                want,
                1e-9,
            );
        }
        for (name, want) in feature_oracle::shape(&m) {
            let column = format!("original_shape_{name}");
            assert_rel_close(&format!("case {case}, {column}"), got[&column].unwrap(), want, 1e-9);
        }
        for (name, want) in feature_oracle::glcm(&v, &m, &mode, distance) {
            let column = format!("original_glcm_{name}");
            match (got[&column], want) {
                (Some(g), Some(w)) => assert_rel_close(&format!("case {case}, {column}"), g, w, 1e-9),
                (g, w) => assert_eq!(g, w, "case {case}, {column}: availability mismatch"),
            }
        }
    }
    done("feature extraction vs brute-force oracle, 50 random ROIs, 25 features, 1e-9 relative", started);
}

#[test]
fn analytic_shape_and_glcm_hand_cases_are_exact() {
    let started = Instant::now();

    // a 10 mm cube of 1 mm voxels, floating inside a larger grid
    let geom = Geometry::axial([12, 12, 12], [1.0; 3], [0.0; 3]);
    let mut data = vec![0u8; geom.voxel_count()];
    for k in 1..11 {
        for j in 1..11 {
            for i in 1..11 {
                data[geom.index_of(i, j, k)] = 1;
            }
        }
    }
    let m = Mask { geom: geom.clone(), data };
    let v = Volume {
        geom,
        data: vec![0.0; 12 * 12 * 12],
        stored: ScalarType::Float64,
        intensity_unit: "HU".into(),
    };
    let params = ExtractionParams {
        feature_families: vec![Family::Shape],
        ..Default::default()
    };
    let f = extract_one(&v, &m, &params).unwrap();
    assert_eq!(f["original_shape_VoxelVolume"], Some(1000.0), "cube volume must be exact");
    assert_eq!(f["original_shape_SurfaceArea"], Some(600.0), "cube surface must be exact");

    // hand-enumerated single-direction co-occurrence case
    use radgate_core::features::glcm::{direction_matrix, level_grid};
    let geom = Geometry::axial([3, 3, 1], [1.0; 3], [0.0; 3]);
    let v = Volume {
        geom: geom.clone(),
        data: vec![1.0, 1.0, 2.0, 1.0, 2.0, 2.0, 2.0, 2.0, 1.0],
        stored: ScalarType::Float64,
        intensity_unit: "HU".into(),
    };
    let m = Mask {
        geom,
        data: vec![1; 9],
    };
    let grid = level_grid(&v, &m, &Discretization::FixedBinCount(2));
    let mat = direction_matrix(&grid, [0, 1, 0], 1).expect("pairs exist");
    assert_eq!(mat.contrast(), 0.5, "hand case Contrast must be exact");
    assert_eq!(mat.angular_second_moment(), 38.0 / 144.0, "hand case ASM must be exact");

    done("analytic cases: cube 1000 mm3 / 600 mm2 and co-occurrence Contrast 0.5, ASM 38/144, exact", started);
}

// ---------------------------------------------------------------------------
// criterion 6: rotation and intensity-shift invariance

#[test]
fn features_are_rotation_and_shift_invariant() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0x107A7E);

    let n = 7;
    let nz = 4;
    let geom = Geometry::axial([n, n, nz], [1.3, 1.3, 2.2], [0.0; 3]);
    let data: Vec<f64> = (0..geom.voxel_count()).map(|_| f64::from(rng.gen_range(0i32..=100))).collect();
    let mut mask: Vec<u8> = (0..geom.voxel_count()).map(|_| u8::from(rng.gen_bool(0.6))).collect();
    mask[0] = 1;

    // quarter turn about z: new(i, j, k) = old(j, n-1-i, k)
    let mut rdata = vec![0.0; geom.voxel_count()];
    let mut rmask = vec![0u8; geom.voxel_count()];
    for k in 0..nz {
        for j in 0..n {
            for i in 0..n {
                let src = geom.index_of(j, n - 1 - i, k);
                let dst = geom.index_of(i, j, k);
                rdata[dst] = data[src];
                rmask[dst] = mask[src];
            }
        }
    }

    let volume = |d: Vec<f64>| Volume {
        geom: geom.clone(),
        data: d,
        stored: ScalarType::Float64,
        intensity_unit: "HU".into(),
    };
    let v = volume(data.clone());
    let m = Mask { geom: geom.clone(), data: mask.clone() };
    let rv = volume(rdata);
    let rm = Mask { geom: geom.clone(), data: rmask };

    let params = ExtractionParams {
        discretization: Discretization::FixedBinCount(8),
        resample_spacing: None,
        feature_families: all_families(),
        glcm_distance: 1,
    };
    let base = extract_one(&v, &m, &params).unwrap();
    let rotated = extract_one(&rv, &rm, &params).unwrap();
    for (name, a) in &base {
        match (a, &rotated[name]) {
            (Some(x), Some(y)) => assert_rel_close(&format!("rotation, {name}"), *y, *x, 1e-9),
            (x, y) => assert_eq!(x, y, "rotation, {name}: availability mismatch"),
        }
    }

    // adding a constant: shape untouched, and under fixed-bin-count
    // discretization the level histogram (hence Entropy/Uniformity/GLCM)
    // is untouched too
    let shifted = volume(data.iter().map(|x| x + 500.0).collect());
    let moved = extract_one(&shifted, &m, &params).unwrap();
    for name in base.keys() {
        let invariant = name.starts_with("original_shape_")
            || name.starts_with("original_glcm_")
            || name == "original_firstorder_Entropy"
            || name == "original_firstorder_Uniformity";
        if !invariant {
            continue;
        }
        match (&base[name], &moved[name]) {
            (Some(x), Some(y)) => assert_rel_close(&format!("shift, {name}"), *y, *x, 1e-12),
            (x, y) => assert_eq!(x, y, "shift, {name}: availability mismatch"),
        }
    }

    done("feature invariance: quarter turn about z within 1e-9, intensity shift within 1e-12", started);
}

// ---------------------------------------------------------------------------
// criterion 7: statistics against independent oracles

fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            }
        }
    }
    u
}

#[test]
fn statistics_match_independent_oracles() {
    let started = Instant::now();

    // --- exact Mann-Whitney p vs full enumeration, every tie-free split of
    //     1..=n for all n1 + n2 <= 10
    use radgate_core::analysis::mw::mann_whitney_p;
    for n1 in 1..=9usize {
        for n2 in 1..=(10 - n1) {
            let n = n1 + n2;
            let values: Vec<f64> = (1..=n).map(|x| x as f64).collect();

            // distribution of U over every labeling, by direct counting
            let mut histogram = vec![0u64; n1 * n2 + 1];
            let masks: Vec<u32> = (0..1u32 << n).filter(|m| m.count_ones() as usize == n1).collect();
            for &mask in &masks {
                let a: Vec<f64> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| values[i]).collect();
                let b: Vec<f64> = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| values[i]).collect();
                histogram[u_statistic(&a, &b) as usize] += 1;
            }
            let total: u64 = histogram.iter().sum();

            for &mask in &masks {
                let a: Vec<f64> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| values[i]).collect();
                let b: Vec<f64> = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| values[i]).collect();
                let (u, p, method) = mann_whitney_p(&a, &b);
                assert_eq!(method, "exact", "({n1},{n2}) should use the exact path");
                assert_eq!(u, u_statistic(&a, &b), "({n1},{n2}) mask {mask:b}: U mismatch");
                let u_min = u.min((n1 * n2) as f64 - u) as usize;
                let tail: u64 = histogram[..=u_min].iter().sum();
                let oracle = (2.0 * tail as f64 / total as f64).min(1.0);
                assert!(
                    (p - oracle).abs() <= 1e-12,
                    "({n1},{n2}) mask {mask:b}: p {p} vs enumeration {oracle}"
                );
            }
        }
    }
    let (_, p, method) = mann_whitney_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
    assert_eq!(method, "exact");
    assert!((p - 0.1).abs() <= 1e-12, "fully separated triples must give p = 0.1, got {p}");

    // --- AUC vs pair counting on 1000 random tables (with ties)
    use radgate_core::analysis::roc::roc_points;
    let mut rng = ChaCha12Rng::seed_from_u64(0xA0C);
    for table in 0..1000 {
        let n_pos = rng.gen_range(2..20);
        let n_neg = rng.gen_range(2..20);
        let quantized = rng.gen_bool(0.5);
        let mut score = |positive: bool| {
            let base = if positive { 0.5 } else { -0.5 };
            let x: f64 = rng.gen_range(-5.0..5.0) + base;
            if quantized {
                (x * 2.0).round() / 2.0
            } else {
                x
            }
        };
        let mut pairs: Vec<(f64, bool)> = Vec::new();
        for _ in 0..n_pos {
            pairs.push((score(true), true));
        }
        for _ in 0..n_neg {
            pairs.push((score(false), false));
        }

        let (_, auc) = roc_points(&pairs).expect("both classes present");
        let mut numerator = 0.0;
        for &(sp, yp) in &pairs {
            if !yp {
                continue;
            }
            for &(sn, yn) in &pairs {
                if yn {
                    continue;
                }
                if sp > sn {
                    numerator += 1.0;
                } else if sp == sn {
                    numerator += 0.5;
                }
            }
        }
        let oracle = numerator / (n_pos as f64 * n_neg as f64);
        assert!(
            (auc - oracle).abs() <= 1e-12,
            "table {table}: AUC {auc} vs pair counting {oracle}"
        );
    }

    // --- Spearman vs rank-then-Pearson (own midranks, own Pearson)
    use radgate_core::analysis::spearman;
    let own_midranks = |values: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let mut ranks = vec![0.0; values.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j < order.len() && values[order[j]] == values[order[i]] {
                j += 1;
            }
            let avg = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
            for &idx in &order[i..j] {
                ranks[idx] = avg;
            }
            i = j;
        }
        ranks
    };
    for trial in 0..500 {
        let n = rng.gen_range(3..40);
        let quantized = rng.gen_bool(0.5);
        let mut draw = |scale: f64| {
            let x: f64 = rng.gen_range(-scale..scale);
            if quantized {
                x.round()
            } else {
                x
            }
        };
        let pairs: Vec<(f64, f64)> = (0..n).map(|_| (draw(4.0), draw(4.0))).collect();

        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let rx = own_midranks(&xs);
        let ry = own_midranks(&ys);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mx, my) = (mean(&rx), mean(&ry));
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for i in 0..rx.len() {
            cov += (rx[i] - mx) * (ry[i] - my);
            vx += (rx[i] - mx) * (rx[i] - mx);
            vy += (ry[i] - my) * (ry[i] - my);
        }
        let oracle = if vx > 0.0 && vy > 0.0 { Some(cov / (vx * vy).sqrt()) } else { None };

        match (spearman(&pairs), oracle) {
            (Some(got), Some(want)) => assert!(
                (got - want).abs() <= 1e-12,
                "trial {trial}: Spearman {got} vs rank+Pearson {want}"
            ),
            (got, want) => assert_eq!(got, want, "trial {trial}: availability mismatch"),
        }
    }
    // a constant column has no defined rank correlation, on either route
    assert_eq!(spearman(&[(1.0, 2.0), (1.0, 5.0), (1.0, 3.0)]), None);

    // --- the planted-signal table is fully recovered at default thresholds
    let mut rng = ChaCha12Rng::seed_from_u64(4242);
    let csv = fixtures::binary_feature_csv(&mut rng);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("features.csv");
    std::fs::write(&path, &csv).unwrap();
    let spec = LoadSpec {
        outcome: "1yearsurvival".into(),
        ..Default::default()
    };
    let (raw, summary) = analysis::load(&path, None, &spec).unwrap();
    assert_eq!(summary.counts, vec![42, 58], "planted class balance");
    let (table, dropped) = analysis::handle_nan(&raw, NanAxis::Patients).unwrap();
    assert!(dropped.is_empty());

    let mw = analysis::mann_whitney(&table, 0.05).unwrap();
    let perfect = mw.iter().find(|r| r.feature == "feat_perfect").unwrap();
    assert!(perfect.p_corrected.unwrap() < 0.05, "perfect separator must stay significant after correction");
    assert!(perfect.highlight);
    let noise = mw.iter().find(|r| r.feature == "feat_noise").unwrap();
    assert!(!noise.highlight, "noise must not be flagged at alpha 0.05");

    let roc = analysis::univariate_roc(&table, 0.70).unwrap();
    let perfect = roc.iter().find(|r| r.feature == "feat_perfect").unwrap();
    assert_eq!(perfect.auc, Some(1.0), "perfect separator must reach AUC 1.0 exactly");
    assert!(perfect.highlight);
    let noise = roc.iter().find(|r| r.feature == "feat_noise").unwrap();
    assert!(!noise.highlight, "noise must stay below the 0.70 AUC threshold");

    let va = analysis::volume_analysis(&table, "original_shape_VoxelVolume", 0.75).unwrap();
    let twin = va.correlations.iter().find(|r| r.feature == "feat_volume_twin").unwrap();
    assert!(twin.abs_rho.unwrap() > 0.75, "volume twin must correlate above 0.75");
    assert!(twin.highlight);
    let noise = va.correlations.iter().find(|r| r.feature == "feat_noise").unwrap();
    assert!(!noise.highlight, "noise must not be flagged as volume-confounded");

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(30), "statistics oracles took {elapsed:?}, limit is 30 s");
    done("statistics: exact MW enumeration, AUC pair counting, Spearman rank+Pearson, planted signals", started);
}

// ---------------------------------------------------------------------------
// criterion 8: the full pipeline is byte-deterministic

fn run_cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_radgate"))
        .args(args)
        .output()
        .expect("spawn radgate");
    assert!(
        out.status.success(),
        "radgate {args:?} failed with {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.expect("walk output tree");
        if entry.file_type().is_file() {
            let rel = entry
                .path()
                .strip_prefix(root)
                .unwrap()
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            out.insert(rel, std::fs::read(entry.path()).expect("read output file"));
        }
    }
    out
}

fn run_pipeline(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let rt = |tail: &str| root.join(tail).to_string_lossy().into_owned();
    run_cli(&["gen-fixtures", "--out", &rt("fx"), "--seed", "11"]);
    run_cli(&["describe", "--root", &rt("fx/dicom"), "--mode", "ct", "--out", &rt("out/describe_ct.csv")]);
    run_cli(&["describe", "--root", &rt("fx/dicom"), "--out", &rt("out/describe_files.csv")]);
    run_cli(&["check", "--root", &rt("fx/dicom"), "--spec", &rt("fx/configs/qc_spec.json"), "--out", &rt("out/qc.csv")]);
    run_cli(&["convert", "--root", &rt("fx/dicom"), "--out", &rt("out"), "--roi", "GTV-1"]);
    run_cli(&[
        "preprocess",
        "--root",
        &rt("out/converted_nrrds"),
        "--params",
        &rt("fx/configs/preprocess.json"),
        "--out",
        &rt("out/preprocessed"),
    ]);
    run_cli(&["unroll", "--root", &rt("out/converted_nrrds"), "--out", &rt("out"), "--window", "-150:250"]);
    run_cli(&[
        "extract",
        "--root",
        &rt("out/preprocessed"),
        "--params",
        &rt("fx/configs/extraction.json"),
        "--out",
        &rt("out/features.csv"),
    ]);
    run_cli(&[
        "analyze",
        "--features",
        &rt("fx/tables/features_binary.csv"),
        "--outcome",
        "1yearsurvival",
        "--volume",
        "original_shape_VoxelVolume",
        "--hist-feature",
        "feat_perfect",
        "--out",
        &rt("out/reports"),
    ]);
    run_cli(&[
        "analyze",
        "--features",
        &rt("fx/tables/features_multiclass.csv"),
        "--outcome",
        "Overall.Stage",
        "--out",
        &rt("out/reports_mc"),
    ]);
    tree_bytes(root)
}

#[test]
fn end_to_end_pipeline_is_byte_identical_across_runs() {
    let started = Instant::now();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = run_pipeline(dir_a.path());
    let b = run_pipeline(dir_b.path());

    let keys_a: Vec<&String> = a.keys().collect();
    let keys_b: Vec<&String> = b.keys().collect();
    assert_eq!(keys_a, keys_b, "the two runs produced different file sets");
    let mut svgs = 0;
    for (path, bytes) in &a {
        assert_eq!(bytes, &b[path], "{path} differs between runs");
        if path.ends_with(".svg") {
            svgs += 1;
        }
    }
    assert!(svgs >= 8, "expected the chart set in both report directories, found {svgs} SVGs");
    done(
        &format!(
            "end-to-end determinism: two seeded runs, {} files byte-identical ({} SVGs)",
            a.len(),
            svgs
        ),
        started,
    );
}

// ---------------------------------------------------------------------------
// optional: cohort shares on a locally available clinical table

#[test]
fn cohort_shares_match_when_the_dataset_is_present() {
    let started = Instant::now();
    let Some(path) = std::env::var_os("RADGATE_LUNG1_CLINICAL").map(PathBuf::from) else {
        println!(
            "[acceptance] cohort shares (optional): SKIP — point RADGATE_LUNG1_CLINICAL at the \
             cohort's clinical CSV (patient id first, `1yearsurvival` and `Overall.Stage` columns) to enable"
        );
        return;
    };

    // survival: two classes near 0.42 / 0.58
    let spec = LoadSpec {
        outcome: "1yearsurvival".into(),
        include: Some(vec!["Survival.time".into()]),
        ..Default::default()
    };
    let (_, summary) = analysis::load(&path, None, &spec).unwrap();
    let mut shares: BTreeMap<&str, f64> = BTreeMap::new();
    for (label, share) in summary.labels.iter().zip(&summary.balance) {
        shares.insert(label, *share);
    }
    let died = shares.get("0").copied().unwrap_or(0.0);
    let survived = shares.get("1").copied().unwrap_or(0.0);
    assert!((died - 0.42).abs() <= 0.01, "class 0 share {died} not within 0.01 of 0.42");
    assert!((survived - 0.58).abs() <= 0.01, "class 1 share {survived} not within 0.01 of 0.58");

    // stage: published shares, one unknown patient dropped by NaN handling
    let spec = LoadSpec {
        outcome: "Overall.Stage".into(),
        include: Some(vec!["Survival.time".into()]),
        ..Default::default()
    };
    let (table, summary) = analysis::load(&path, None, &spec).unwrap();
    let mut known = 0.0;
    for (label, want) in [("I", 0.24), ("II", 0.09), ("IIIa", 0.23), ("IIIb", 0.42)] {
        let idx = summary.labels.iter().position(|l| l == label);
        let share = idx.map(|i| summary.balance[i]).unwrap_or(0.0);
        assert!((share - want).abs() <= 0.01, "stage {label} share {share} not within 0.01 of {want}");
        known += share;
    }
    assert!((1.0 - known - 0.01).abs() <= 0.01, "unknown-stage share {} not near 0.01", 1.0 - known);
    let (_, dropped) = analysis::handle_nan(&table, NanAxis::Patients).unwrap();
    assert_eq!(dropped.len(), 1, "exactly one patient lacks a stage label");

    done("cohort shares: survival 0.42/0.58, stage 0.24/0.09/0.23/0.42/0.01, one dropped patient", started);
}
