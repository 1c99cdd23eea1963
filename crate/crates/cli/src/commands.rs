//! One function per subcommand. Everything here maps library results onto
//! the CLI's two error classes and keeps log output deterministic: parallel
//! sections collect their messages and print them in input order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use radgate_core::analysis::{self, AnalysisError, NanAxis, Thresholds};
use radgate_core::catalog::{
    self, CatalogError, DatasetLayout, DescribeMode, SeriesRecord, Table,
};
use radgate_core::dicom::{decode_pixels, parse_file, parse_rtstruct, ContourSet, PixelGrid};
use radgate_core::features::{self, ExtractionParams};
use radgate_core::fixtures;
use radgate_core::nrrd;
use radgate_core::plot::{Bar, Curve, SvgPlot};
use radgate_core::preprocess::{run_chain, ChainContext, PreprocessParams, Step, StepStats};
use radgate_core::qc::{quality_check, QualitySpec};
use radgate_core::rasterize::rasterize;
use radgate_core::util::write_atomic;
use radgate_core::volume::{build_volume, Volume, VolumeError};

use crate::{
    log, AnalyzeArgs, CheckArgs, CliError, ConvertArgs, DescribeArgs, DescribeModeArg,
    ExtractArgs, GenFixturesArgs, NanAxisArg, PreprocessArgs, UnrollArgs,
};

// ---------------------------------------------------------------------------
// error mapping and small helpers

fn catalog_err(e: CatalogError) -> CliError {
    match e {
        CatalogError::Io { .. } => CliError::io(e),
        CatalogError::EmptyDataset => CliError::validation(e),
    }
}

fn volume_err(e: VolumeError) -> CliError {
    match e {
        VolumeError::Io(_) => CliError::io(e),
        other => CliError::validation(other),
    }
}

fn analysis_err(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::Io { .. } => CliError::io(e),
        other => CliError::validation(other),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("invalid {what} in {}: {e}", path.display())))
}

fn save(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn scan_dicom(root: &Path) -> Result<catalog::ScanResult, CliError> {
    catalog::scan_dataset(&DatasetLayout::dicom(root)).map_err(catalog_err)
}

fn scan_nrrd(root: &Path) -> Result<Vec<catalog::NrrdPatient>, CliError> {
    catalog::scan_nrrd_dataset(&DatasetLayout::nrrd(root, true)).map_err(catalog_err)
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

// ---------------------------------------------------------------------------
// describe

pub fn describe(args: &DescribeArgs) -> Result<(), CliError> {
    let scan = scan_dicom(&args.root)?;
    let patients: BTreeSet<&str> = scan.records.iter().map(|r| r.patient_id.as_str()).collect();
    log(
        "describe",
        format!(
            "{} series across {} patient(s), {} structure set(s), {} file(s) skipped",
            scan.records.len(),
            patients.len(),
            scan.rt_meta.len(),
            scan.skipped.len()
        ),
    );
    for (path, reason) in &scan.skipped {
        log("describe", format!("skipped {}: {reason}", path.display()));
    }
    for ex in &scan.excluded {
        log("describe", format!("excluded series {} of {}: {}", ex.series_uid, ex.patient_id, ex.reason));
    }
    let mode = match args.mode {
        DescribeModeArg::Files => DescribeMode::Default,
        DescribeModeArg::Ct => DescribeMode::Ct,
    };
    let table = catalog::describe(&scan, mode);
    save(&args.out, &table.to_csv_bytes())?;
    log("describe", format!("wrote {}", args.out.display()));
    Ok(())
}

// ---------------------------------------------------------------------------
// check

pub fn check(args: &CheckArgs) -> Result<(), CliError> {
    let spec: QualitySpec = read_json(&args.spec, "quality spec")?;
    spec.validate().map_err(CliError::validation)?;
    let scan = scan_dicom(&args.root)?;
    let report = quality_check(&scan.records, &scan.excluded, &spec);

    let mut failed = 0usize;
    for row in &report.rows {
        if row.overall {
            log("check", format!("{}: pass", row.report_id));
        } else {
            failed += 1;
            log("check", format!("{}: FAIL", row.report_id));
            for note in &row.notes {
                log("check", format!("{}:   {note}", row.report_id));
            }
        }
    }
    log("check", format!("{} of {} series pass", report.rows.len() - failed, report.rows.len()));
    save(&args.out, &report.to_table().to_csv_bytes())?;
    log("check", format!("wrote {}", args.out.display()));
    Ok(())
}

// ---------------------------------------------------------------------------
// convert

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn convert_one(
    record: &SeriesRecord,
    id: &str,
    root: &Path,
    roi: Option<&str>,
    out_root: &Path,
) -> Result<Vec<String>, CliError> {
    let mut notes = Vec::new();

    let grids: Vec<PixelGrid> = record
        .slice_paths
        .iter()
        .map(|rel| {
            let bytes = read_file(&root.join(rel))?;
            let obj = parse_file(&bytes).map_err(CliError::validation)?;
            decode_pixels(&obj).map_err(CliError::validation)
        })
        .collect::<Result<_, _>>()?;

    let (mut volume, warnings) = build_volume(record, &grids).map_err(volume_err)?;
    notes.extend(warnings);
    volume.tighten_storage();

    let patient_dir = out_root.join(id);
    nrrd::write_volume(&volume, &patient_dir.join("image.nrrd")).map_err(volume_err)?;
    notes.push(format!(
        "image.nrrd: {}x{}x{} voxels",
        volume.geom.dims[0], volume.geom.dims[1], volume.geom.dims[2]
    ));

    let mut sets: Vec<ContourSet> = Vec::new();
    for rel in &record.rtstruct_paths {
        let obj = parse_file(&read_file(&root.join(rel))?).map_err(CliError::validation)?;
        let parsed = parse_rtstruct(&obj).map_err(CliError::validation)?;
        sets.extend(
            parsed
                .into_iter()
                .filter(|s| s.referenced_series_uid.is_empty() || s.referenced_series_uid == record.series_uid),
        );
    }

    let mut write_mask = |set: &ContourSet, file: &str| -> Result<(), CliError> {
        let (mask, warnings) = rasterize(set, &volume.geom);
        for w in warnings {
            notes.push(format!("{}: {w}", set.roi_name));
        }
        if mask.ones_count() == 0 {
            notes.push(format!("{}: rasterized mask is empty", set.roi_name));
        }
        nrrd::write_mask(&mask, &patient_dir.join(file)).map_err(volume_err)?;
        notes.push(format!("{file}: ROI {:?}, {} voxel(s)", set.roi_name, mask.ones_count()));
        Ok(())
    };

    match roi {
        Some(name) => match sets.iter().find(|s| s.roi_name == name) {
            Some(set) => write_mask(set, "mask.nrrd")?,
            None => notes.push(format!("no ROI named {name:?} references this series; mask skipped")),
        },
        None => {
            if sets.len() == 1 {
                write_mask(&sets[0], "mask.nrrd")?;
            } else {
                for set in &sets {
                    let file = format!("mask_{}.nrrd", sanitize(&set.roi_name));
                    write_mask(set, &file)?;
                }
            }
        }
    }
    Ok(notes)
}

pub fn convert(args: &ConvertArgs) -> Result<(), CliError> {
    let scan = scan_dicom(&args.root)?;
    let out_root = args.out.join("converted_nrrds");
    let ids = catalog::report_ids(&scan.records);
    let work: Vec<(&String, &SeriesRecord)> = ids.iter().zip(&scan.records).collect();

    let results: Vec<(String, Result<Vec<String>, CliError>)> = work
        .par_iter()
        .map(|(id, record)| {
            let res = convert_one(record, id, &args.root, args.roi.as_deref(), &out_root);
            (id.to_string(), res)
        })
        .collect();

    let mut first_err: Option<CliError> = None;
    let mut converted = 0usize;
    for (id, res) in results {
        match res {
            Ok(notes) => {
                converted += 1;
                for n in notes {
                    log("convert", format!("{id}: {n}"));
                }
            }
            Err(e) => {
                log("convert", format!("{id}: failed: {}", e.message()));
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    log("convert", format!("converted {converted} of {} series into {}", ids.len(), out_root.display()));
    match first_err {
        None => Ok(()),
        Some(CliError::Io(m)) => Err(CliError::io(format!("{} series failed; first: {m}", ids.len() - converted))),
        Some(CliError::Validation(m)) => {
            Err(CliError::validation(format!("{} series failed; first: {m}", ids.len() - converted)))
        }
    }
}

// ---------------------------------------------------------------------------
// preprocess

fn preprocess_err(e: radgate_core::preprocess::PreprocessError) -> CliError {
    CliError::validation(e)
}

pub fn preprocess(args: &PreprocessArgs) -> Result<(), CliError> {
    let params: PreprocessParams = read_json(&args.params, "preprocess params")?;
    params.validate().map_err(preprocess_err)?;
    let patients = scan_nrrd(&args.root)?;

    // histogram-matching references are loaded once, up front
    let mut references: BTreeMap<String, Volume> = BTreeMap::new();
    for step in &params.steps {
        if let Step::HistMatch { reference, .. } = step {
            if references.contains_key(reference) {
                continue;
            }
            let p = patients.iter().find(|p| &p.patient_id == reference).ok_or_else(|| {
                CliError::validation(format!(
                    "hist_match reference {reference:?} is not a patient under {}",
                    args.root.display()
                ))
            })?;
            references.insert(reference.clone(), nrrd::read_volume(&p.image_path).map_err(volume_err)?);
        }
    }

    let results: Vec<(String, Result<Vec<StepStats>, CliError>)> = patients
        .par_iter()
        .map(|p| {
            let run = || -> Result<Vec<StepStats>, CliError> {
                let volume = nrrd::read_volume(&p.image_path).map_err(volume_err)?;
                let mask = match &p.mask_path {
                    Some(mp) => Some(nrrd::read_mask(mp).map_err(volume_err)?),
                    None => None,
                };
                let ctx = ChainContext::new(mask.as_ref(), &references);
                let out = run_chain(&volume, &ctx, &params).map_err(preprocess_err)?;
                let dir = args.out.join(&p.patient_id);
                nrrd::write_volume(&out.volume, &dir.join("image.nrrd")).map_err(volume_err)?;
                if let Some(m) = &out.mask {
                    nrrd::write_mask(m, &dir.join("mask.nrrd")).map_err(volume_err)?;
                }
                Ok(out.stats)
            };
            (p.patient_id.clone(), run())
        })
        .collect();

    let columns = [
        "patient", "step_index", "step", "params", "in_mean", "in_std", "in_min", "in_max", "out_mean",
        "out_std", "out_min", "out_max",
    ];
    let mut table = Table {
        columns: columns.iter().map(|s| s.to_string()).collect(),
        rows: Vec::new(),
    };
    let mut first_err: Option<CliError> = None;
    let mut ok = 0usize;
    for (id, res) in results {
        match res {
            Ok(stats) => {
                ok += 1;
                log("preprocess", format!("{id}: {} step(s) applied", stats.len()));
                for s in stats {
                    table.rows.push(vec![
                        id.clone(),
                        s.index.to_string(),
                        s.name.to_string(),
                        s.params.clone(),
                        fmt_num(s.input.mean),
                        fmt_num(s.input.std),
                        fmt_num(s.input.min),
                        fmt_num(s.input.max),
                        fmt_num(s.output.mean),
                        fmt_num(s.output.std),
                        fmt_num(s.output.min),
                        fmt_num(s.output.max),
                    ]);
                }
            }
            Err(e) => {
                log("preprocess", format!("{id}: failed: {}", e.message()));
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    save(&args.out.join("preprocess_stats.csv"), &table.to_csv_bytes())?;
    log("preprocess", format!("processed {ok} of {} patient(s)", patients.len()));
    match first_err {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// unroll

fn parse_window(s: &str) -> Result<(f64, f64), CliError> {
    let parts = s
        .split_once(':')
        .ok_or_else(|| CliError::validation(format!("--window must be lo:hi, got {s:?}")))?;
    let lo: f64 = parts.0.trim().parse().map_err(|_| CliError::validation(format!("bad window bound {:?}", parts.0)))?;
    let hi: f64 = parts.1.trim().parse().map_err(|_| CliError::validation(format!("bad window bound {:?}", parts.1)))?;
    if !(hi > lo) {
        return Err(CliError::validation(format!("window must satisfy lo < hi, got {s:?}")));
    }
    Ok((lo, hi))
}

pub fn unroll(args: &UnrollArgs) -> Result<(), CliError> {
    let window = args.window.as_deref().map(parse_window).transpose()?;
    let patients = scan_nrrd(&args.root)?;
    let out_root = args.out.join("images_quick_check");

    let results: Vec<(String, Result<usize, CliError>)> = patients
        .par_iter()
        .map(|p| {
            let run = || -> Result<usize, CliError> {
                let volume = nrrd::read_volume(&p.image_path).map_err(volume_err)?;
                let mask = match (&p.mask_path, args.no_mask) {
                    (Some(mp), false) => Some(nrrd::read_mask(mp).map_err(volume_err)?),
                    _ => None,
                };
                let dir = out_root.join(&p.patient_id);
                let paths = radgate_core::unroll::unroll(&volume, mask.as_ref(), window, &p.patient_id, &dir)
                    .map_err(volume_err)?;
                Ok(paths.len())
            };
            (p.patient_id.clone(), run())
        })
        .collect();

    let mut first_err: Option<CliError> = None;
    for (id, res) in results {
        match res {
            Ok(n) => log("unroll", format!("{id}: {n} slice image(s)")),
            Err(e) => {
                log("unroll", format!("{id}: failed: {}", e.message()));
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    log("unroll", format!("wrote {}", out_root.display()));
    match first_err {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// extract

pub fn extract(args: &ExtractArgs) -> Result<(), CliError> {
    let params: ExtractionParams = read_json(&args.params, "extraction params")?;
    params.validate().map_err(CliError::validation)?;
    let patients = scan_nrrd(&args.root)?;

    type RowResult = Result<BTreeMap<String, Option<f64>>, String>;
    let results: Vec<(String, RowResult)> = patients
        .par_iter()
        .map(|p| {
            let run = || -> RowResult {
                let volume = nrrd::read_volume(&p.image_path).map_err(|e| e.to_string())?;
                let mask_path = p.mask_path.as_ref().ok_or_else(|| "no mask file".to_string())?;
                let mask = nrrd::read_mask(mask_path).map_err(|e| e.to_string())?;
                features::extract_one(&volume, &mask, &params).map_err(|e| e.to_string())
            };
            (p.patient_id.clone(), run())
        })
        .collect();

    let mut table = features::FeatureTable::new(&params);
    let mut failures = 0usize;
    for (id, res) in results {
        match res {
            Ok(values) => table.push_success(&id, values),
            Err(reason) => {
                failures += 1;
                log("extract", format!("{id}: failed: {reason}"));
                table.push_failure(&id, &reason);
            }
        }
    }
    table.finish();
    save(&args.out, &table.to_csv_bytes())?;
    log(
        "extract",
        format!("{} patient(s), {} failure(s), {} feature column(s)", patients.len(), failures, table.columns.len()),
    );
    log("extract", format!("wrote {}", args.out.display()));
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze

struct PlotFiles<'a> {
    out: &'a Path,
}

impl PlotFiles<'_> {
    fn emit(&self, name: &str, plot: &SvgPlot, table: Table) -> Result<(), CliError> {
        let svg = self.out.join(format!("{name}.svg"));
        plot.write(&svg).map_err(|e| CliError::io(format!("{}: {e}", svg.display())))?;
        save(&self.out.join(format!("{name}.csv")), &table.to_csv_bytes())?;
        log("analyze", format!("wrote {}", svg.display()));
        Ok(())
    }
}

fn table_of(columns: &[&str], rows: Vec<Vec<String>>) -> Table {
    Table {
        columns: columns.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let spec = analysis::LoadSpec {
        outcome: args.outcome.clone(),
        ..Default::default()
    };
    let (raw, _) = analysis::load(&args.features, args.clinical.as_deref(), &spec).map_err(analysis_err)?;
    let axis = match args.nan_axis {
        NanAxisArg::Patients => NanAxis::Patients,
        NanAxisArg::Features => NanAxis::Features,
    };
    let (table, dropped) = analysis::handle_nan(&raw, axis).map_err(analysis_err)?;
    for d in &dropped {
        log("analyze", format!("dropped {d}: missing values"));
    }

    let summary = analysis::ClassSummary::of(&table.outcomes);
    for ((label, count), share) in summary.labels.iter().zip(&summary.counts).zip(&summary.balance) {
        log("analyze", format!("class {label:?}: n={count}, share={share:.4}"));
    }
    let binary = table.binary_labels().is_ok();
    if !binary {
        log("analyze", format!("outcome has {} classes: skipping Mann-Whitney, ROC and PR views", summary.labels.len()));
    }

    if let Some(vol) = &args.volume {
        if table.feature_index(vol).is_none() {
            return Err(CliError::validation(format!("--volume column {vol:?} not in the table")));
        }
    }
    let thresholds = Thresholds {
        alpha: args.alpha,
        auc: args.auc_threshold,
        corr: args.corr_threshold,
    };
    let files = PlotFiles { out: &args.out };

    // basic statistics table
    let stat_rows = analysis::basic_stats(&table, args.volume.as_deref(), &thresholds);
    let stem = args
        .features
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "features".into());
    let stats_csv = analysis::stats_table(&stat_rows, binary, args.volume.is_some());
    let stats_path = args.out.join(format!("{stem}_basic_stats.csv"));
    save(&stats_path, &stats_csv.to_csv_bytes())?;
    log("analyze", format!("wrote {}", stats_path.display()));

    // class-distribution histogram of one representative feature
    let hist_feature = args
        .hist_feature
        .clone()
        .or_else(|| args.volume.clone())
        .or_else(|| table.sorted_features().first().cloned())
        .ok_or_else(|| CliError::validation("no feature columns to analyze"))?;
    let dist = analysis::distributions(&table, &hist_feature, None).map_err(analysis_err)?;
    let mut rows = Vec::new();
    for (class, counts) in &dist.series {
        for (b, count) in counts.iter().enumerate() {
            rows.push(vec![
                class.clone(),
                fmt_num(dist.bin_edges[b]),
                fmt_num(dist.bin_edges[b + 1]),
                count.to_string(),
            ]);
        }
    }
    let plot = SvgPlot::histogram(
        &format!("{hist_feature} by class"),
        &hist_feature,
        dist.bin_edges.clone(),
        dist.series.clone(),
    );
    files.emit("fig_class_hist", &plot, table_of(&["class", "bin_lo", "bin_hi", "count"], rows))?;

    // feature-by-feature |Spearman| heatmap
    let matrix = analysis::spearman_matrix(&table);
    let values: Vec<Vec<Option<f64>>> = matrix
        .rho
        .iter()
        .map(|row| row.iter().map(|v| v.map(f64::abs)).collect())
        .collect();
    let mut rows = Vec::new();
    for (r, feature) in matrix.features.iter().enumerate() {
        let mut row = vec![feature.clone()];
        row.extend(values[r].iter().map(|v| v.map(fmt_num).unwrap_or_default()));
        rows.push(row);
    }
    let mut columns = vec!["feature"];
    let feature_names: Vec<&str> = matrix.features.iter().map(|s| s.as_str()).collect();
    columns.extend(feature_names);
    let plot = SvgPlot::heatmap("|Spearman rho| between features", matrix.features.clone(), values);
    files.emit("fig_corr_heatmap", &plot, table_of(&columns, rows))?;

    if binary {
        // Mann-Whitney bars as -log10(corrected p)
        let mw = analysis::mann_whitney(&table, thresholds.alpha).map_err(analysis_err)?;
        let bars: Vec<Bar> = mw
            .iter()
            .map(|r| Bar {
                label: r.feature.clone(),
                value: r.p_corrected.map(|p| -p.log10()),
                highlight: r.highlight,
            })
            .collect();
        let rows = mw
            .iter()
            .map(|r| {
                vec![
                    r.feature.clone(),
                    r.n.0.to_string(),
                    r.n.1.to_string(),
                    r.u.map(fmt_num).unwrap_or_default(),
                    r.p_raw.map(fmt_num).unwrap_or_default(),
                    r.p_corrected.map(fmt_num).unwrap_or_default(),
                    r.method.to_string(),
                    u8::from(r.highlight).to_string(),
                ]
            })
            .collect();
        let plot = SvgPlot::bars(
            "Mann-Whitney tests, Bonferroni corrected",
            "-log10(corrected p)",
            bars,
            Some(-thresholds.alpha.log10()),
        );
        files.emit(
            "fig_mw_bars",
            &plot,
            table_of(&["feature", "n1", "n2", "u", "p_raw", "p_corrected", "method", "highlight"], rows),
        )?;

        // per-feature ROC curves
        let roc = analysis::univariate_roc(&table, thresholds.auc).map_err(analysis_err)?;
        let mut curves = Vec::new();
        let mut rows = Vec::new();
        for r in &roc {
            let Some(auc) = r.auc else {
                log("analyze", format!("{}: degenerate score column, no ROC curve", r.feature));
                continue;
            };
            curves.push(Curve {
                label: format!("{} ({auc:.3})", r.feature),
                points: r.points.clone(),
                highlight: r.highlight,
            });
            for (fpr, tpr) in &r.points {
                rows.push(vec![
                    r.feature.clone(),
                    fmt_num(*fpr),
                    fmt_num(*tpr),
                    fmt_num(auc),
                    u8::from(r.highlight).to_string(),
                ]);
            }
        }
        let plot = SvgPlot::roc(&format!("ROC per feature, positive class {:?}", roc.first().map(|r| r.positive_class.as_str()).unwrap_or("")), curves);
        files.emit("fig_roc", &plot, table_of(&["feature", "fpr", "tpr", "auc", "highlight"], rows))?;
    }

    if let Some(vol) = &args.volume {
        let va = analysis::volume_analysis(&table, vol, thresholds.corr).map_err(analysis_err)?;
        if let Some(pr) = &va.pr {
            let rows = pr
                .points
                .iter()
                .map(|(recall, precision)| {
                    vec![
                        fmt_num(*recall),
                        fmt_num(*precision),
                        pr.positive_class.clone(),
                        fmt_num(pr.average_precision),
                    ]
                })
                .collect();
            let curve = Curve {
                label: format!("AP {:.3}", pr.average_precision),
                points: pr.points.clone(),
                highlight: false,
            };
            let plot = SvgPlot::pr(&format!("Precision-recall of {vol}"), vec![curve]);
            files.emit(
                "fig_volume_pr",
                &plot,
                table_of(&["recall", "precision", "positive_class", "average_precision"], rows),
            )?;
        }

        let bars: Vec<Bar> = va
            .correlations
            .iter()
            .filter(|r| &r.feature != vol)
            .map(|r| Bar {
                label: r.feature.clone(),
                value: r.abs_rho,
                highlight: r.highlight,
            })
            .collect();
        let rows = va
            .correlations
            .iter()
            .filter(|r| &r.feature != vol)
            .map(|r| {
                vec![
                    r.feature.clone(),
                    r.abs_rho.map(fmt_num).unwrap_or_default(),
                    u8::from(r.highlight).to_string(),
                ]
            })
            .collect();
        let plot = SvgPlot::bars(
            &format!("|Spearman rho| against {vol}"),
            "|rho|",
            bars,
            Some(thresholds.corr),
        );
        files.emit("fig_volume_corr", &plot, table_of(&["feature", "abs_rho", "highlight"], rows))?;
    }

    log("analyze", format!("report in {}", args.out.display()));
    Ok(())
}

// ---------------------------------------------------------------------------
// gen-fixtures

pub fn gen_fixtures(args: &GenFixturesArgs) -> Result<(), CliError> {
    fixtures::generate_tree(&args.out, args.seed)
        .map_err(|e| CliError::io(format!("{}: {e}", args.out.display())))?;
    log("gen-fixtures", format!("seed {}: fixture tree in {}", args.seed, args.out.display()));
    Ok(())
}
