//! Walking datasets on disk and summarising what was found.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dicom::{self, tags, SliceMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Dicom,
    Nrrd,
}

/// Where a dataset lives and how its files are named.
///
/// DICOM datasets are walked recursively and grouped by the tags inside the
/// files, so the name patterns only matter for NRRD datasets, which follow
/// the `root/<patient>/{image,mask}` convention.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetLayout {
    pub root: PathBuf,
    pub data_format: DataFormat,
    #[serde(default)]
    pub mask_available: bool,
    #[serde(default = "default_image_patterns")]
    pub image_patterns: Vec<String>,
    #[serde(default = "default_mask_patterns")]
    pub mask_patterns: Vec<String>,
}

fn default_image_patterns() -> Vec<String> {
    vec!["image*.nrrd".into()]
}

fn default_mask_patterns() -> Vec<String> {
    vec!["mask*.nrrd".into()]
}

impl DatasetLayout {
    pub fn dicom(root: impl Into<PathBuf>) -> DatasetLayout {
        DatasetLayout {
            root: root.into(),
            data_format: DataFormat::Dicom,
            mask_available: false,
            image_patterns: default_image_patterns(),
            mask_patterns: default_mask_patterns(),
        }
    }

    pub fn nrrd(root: impl Into<PathBuf>, mask_available: bool) -> DatasetLayout {
        DatasetLayout {
            root: root.into(),
            data_format: DataFormat::Nrrd,
            mask_available,
            image_patterns: default_image_patterns(),
            mask_patterns: default_mask_patterns(),
        }
    }
}

/// Lightweight metadata kept for each structure-set file so that dataset
/// description does not have to re-parse it.
#[derive(Debug, Clone, PartialEq)]
pub struct RtMeta {
    pub series_date: Option<String>,
    pub manufacturer: Option<String>,
}

/// One image series of one patient: sorted slice metadata, the files the
/// slices came from, and any structure sets found for the patient.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub patient_id: String,
    pub series_uid: String,
    pub modality: String,
    /// Sorted by position along the slice normal.
    pub slices: Vec<SliceMeta>,
    /// Source file of each slice, parallel to `slices`, relative to the
    /// dataset root.
    pub slice_paths: Vec<PathBuf>,
    /// Structure-set files of this patient, relative to the dataset root.
    pub rtstruct_paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcludedSeries {
    pub patient_id: String,
    pub series_uid: String,
    pub reason: String,
}

/// Outcome of a dataset walk. Series that violate the within-series
/// geometry invariants are not silently dropped: they move to `excluded`
/// with a reason, and the quality report surfaces them as failed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub records: Vec<SeriesRecord>,
    pub excluded: Vec<ExcludedSeries>,
    /// Files that were skipped, with the reason (not DICOM, unsupported
    /// syntax, missing tags, ...). Paths are relative to the root.
    pub skipped: Vec<(PathBuf, String)>,
    /// Structure-set metadata keyed by root-relative path.
    pub rt_meta: BTreeMap<PathBuf, RtMeta>,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("no usable files under the dataset root")]
    EmptyDataset,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

const SPACING_TOL: f64 = 1e-6;
const ORIENT_TOL: f64 = 1e-3;

/// Recursively scan a DICOM dataset and group what parses into series
/// records. RTSTRUCT files attach to every series of the same patient.
pub fn scan_dataset(layout: &DatasetLayout) -> Result<ScanResult, CatalogError> {
    let root = &layout.root;
    let mut groups: BTreeMap<(String, String), Vec<(SliceMeta, PathBuf)>> = BTreeMap::new();
    let mut rtstructs: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    let mut rt_meta: BTreeMap<PathBuf, RtMeta> = BTreeMap::new();
    let mut skipped: Vec<(PathBuf, String)> = Vec::new();
    let mut saw_dicom = false;

    let walker = walkdir::WalkDir::new(root).sort_by_file_name();
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| root.clone());
                return Err(CatalogError::Io { path, source: e.into() });
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let rel = path.strip_prefix(root).unwrap_or(path).to_path_buf();
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) => return Err(CatalogError::Io { path: path.to_path_buf(), source: e }),
        };
        let obj = match dicom::parse_file(&bytes) {
            Ok(o) => o,
            Err(dicom::DicomError::MissingMagic) => {
                skipped.push((rel, "not a DICOM file".into()));
                continue;
            }
            Err(e) => {
                skipped.push((rel, e.to_string()));
                continue;
            }
        };
        saw_dicom = true;

        let modality = match obj.decode_text(tags::MODALITY) {
            Ok(m) => m,
            Err(e) => {
                skipped.push((rel, format!("no modality: {e}")));
                continue;
            }
        };

        if modality == "RTSTRUCT" {
            let patient = obj.decode_text(tags::PATIENT_ID).unwrap_or_default();
            rt_meta.insert(
                rel.clone(),
                RtMeta {
                    series_date: obj.decode_text(tags::SERIES_DATE).ok(),
                    manufacturer: obj.decode_text(tags::MANUFACTURER).ok(),
                },
            );
            rtstructs.entry(patient).or_default().push(rel);
            continue;
        }

        if obj.get(tags::PIXEL_DATA).is_none() {
            skipped.push((rel, format!("{modality} object without pixel data")));
            continue;
        }

        match dicom::extract_slice_meta(&obj) {
            Ok(meta) => {
                groups.entry((meta.patient_id.clone(), meta.series_uid.clone())).or_default().push((meta, rel));
            }
            Err(e) => skipped.push((rel, e.to_string())),
        }
    }

    if !saw_dicom {
        return Err(CatalogError::EmptyDataset);
    }

    let mut records = Vec::new();
    let mut excluded = Vec::new();
    for ((patient_id, series_uid), mut slices) in groups {
        if let Err(reason) = check_series_consistency(&slices) {
            excluded.push(ExcludedSeries { patient_id, series_uid, reason });
            continue;
        }
        slices.sort_by(|a, b| a.0.position_along_normal().partial_cmp(&b.0.position_along_normal()).unwrap());
        let modality = slices[0].0.modality.clone();
        let (slices, slice_paths): (Vec<SliceMeta>, Vec<PathBuf>) = slices.into_iter().unzip();
        let rtstruct_paths = rtstructs.get(&patient_id).cloned().unwrap_or_default();
        records.push(SeriesRecord { patient_id, series_uid, modality, slices, slice_paths, rtstruct_paths });
    }

    // Surface structure sets whose patient has no image series at all.
    let patients_with_images: Vec<&str> = records.iter().map(|r| r.patient_id.as_str()).collect();
    for (patient, paths) in &rtstructs {
        if !patients_with_images.contains(&patient.as_str()) {
            for p in paths {
                skipped.push((p.clone(), format!("RTSTRUCT without an image series for patient {patient:?}")));
            }
        }
    }

    Ok(ScanResult { records, excluded, skipped, rt_meta })
}

fn check_series_consistency(slices: &[(SliceMeta, PathBuf)]) -> Result<(), String> {
    let first = &slices[0].0;
    for (meta, _) in slices.iter().skip(1) {
        if meta.rows != first.rows || meta.cols != first.cols {
            return Err("in-plane dimensions differ between slices".into());
        }
        if (meta.pixel_spacing.0 - first.pixel_spacing.0).abs() > SPACING_TOL
            || (meta.pixel_spacing.1 - first.pixel_spacing.1).abs() > SPACING_TOL
        {
            return Err("pixel spacing differs between slices".into());
        }
        if meta
            .orientation
            .iter()
            .zip(&first.orientation)
            .any(|(a, b)| (a - b).abs() > ORIENT_TOL)
        {
            return Err("orientation differs between slices".into());
        }
        if meta.modality != first.modality {
            return Err("modality differs between slices".into());
        }
    }
    Ok(())
}

/// Display name of each record: the patient id, suffixed `_1`, `_2`, ... in
/// series-uid order when a patient has more than one series.
pub fn report_ids(records: &[SeriesRecord]) -> Vec<String> {
    let mut per_patient: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        per_patient.entry(&r.patient_id).or_default().push(i);
    }
    let mut ids = vec![String::new(); records.len()];
    for (patient, mut idxs) in per_patient {
        idxs.sort_by(|&a, &b| records[a].series_uid.cmp(&records[b].series_uid));
        if idxs.len() == 1 {
            ids[idxs[0]] = patient.to_string();
        } else {
            for (k, &i) in idxs.iter().enumerate() {
                ids[i] = format!("{}_{}", patient, k + 1);
            }
        }
    }
    ids
}

/// A plain rectangular table, the interchange shape for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.columns).expect("csv write");
        for row in &self.rows {
            w.write_record(row).expect("csv write");
        }
        w.into_inner().expect("csv flush")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescribeMode {
    /// One row per file with the generic column set.
    Default,
    /// One row per CT series with the acquisition column set.
    Ct,
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_spacing(s: (f64, f64)) -> String {
    format!("{}\\{}", s.0, s.1)
}

/// Summarise scanned records as a table.
///
/// Default mode lists every file, structure sets included; fields a file
/// does not carry stay empty. CT mode keeps one row per CT series with the
/// acquisition parameters of its first slice.
pub fn describe(scan: &ScanResult, mode: DescribeMode) -> Table {
    match mode {
        DescribeMode::Default => {
            let columns =
                ["file", "modality", "slice_thickness", "pixel_spacing", "date", "manufacturer"];
            let mut rows = Vec::new();
            for record in &scan.records {
                for (meta, path) in record.slices.iter().zip(&record.slice_paths) {
                    rows.push(vec![
                        path.to_string_lossy().into_owned(),
                        meta.modality.clone(),
                        fmt_opt_f64(meta.slice_thickness),
                        fmt_spacing(meta.pixel_spacing),
                        meta.series_date.clone().unwrap_or_default(),
                        meta.manufacturer.clone().unwrap_or_default(),
                    ]);
                }
            }
            let mut seen: Vec<&PathBuf> = Vec::new();
            for record in &scan.records {
                for path in &record.rtstruct_paths {
                    if seen.contains(&path) {
                        continue;
                    }
                    seen.push(path);
                    let meta = scan.rt_meta.get(path);
                    rows.push(vec![
                        path.to_string_lossy().into_owned(),
                        "RTSTRUCT".into(),
                        String::new(),
                        String::new(),
                        meta.and_then(|m| m.series_date.clone()).unwrap_or_default(),
                        meta.and_then(|m| m.manufacturer.clone()).unwrap_or_default(),
                    ]);
                }
            }
            rows.sort_by(|a, b| a[0].cmp(&b[0]));
            Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows }
        }
        DescribeMode::Ct => {
            let columns = [
                "patient",
                "kernel",
                "slice_thickness",
                "pixel_spacing",
                "kvp",
                "exposure",
                "tube_current",
                "series_date",
            ];
            let ids = report_ids(&scan.records);
            let mut rows = Vec::new();
            for (record, id) in scan.records.iter().zip(&ids) {
                if record.modality != "CT" {
                    continue;
                }
                let first = &record.slices[0];
                rows.push(vec![
                    id.clone(),
                    first.convolution_kernel.clone().unwrap_or_default(),
                    fmt_opt_f64(first.slice_thickness),
                    fmt_spacing(first.pixel_spacing),
                    fmt_opt_f64(first.kvp),
                    fmt_opt_f64(first.exposure),
                    fmt_opt_f64(first.tube_current),
                    first.series_date.clone().unwrap_or_default(),
                ]);
            }
            Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows }
        }
    }
}

/// One patient directory of an NRRD dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct NrrdPatient {
    pub patient_id: String,
    pub image_path: PathBuf,
    pub mask_path: Option<PathBuf>,
}

/// Walk an NRRD dataset laid out as `root/<patient>/...`, matching image and
/// mask files against the layout's name patterns (case-insensitive, `*`
/// wildcard). When several files match, the lexicographically first wins.
pub fn scan_nrrd_dataset(layout: &DatasetLayout) -> Result<Vec<NrrdPatient>, CatalogError> {
    let root = &layout.root;
    let read_dir = |p: &Path| -> Result<Vec<PathBuf>, CatalogError> {
        let mut entries: Vec<PathBuf> = fs::read_dir(p)
            .map_err(|e| CatalogError::Io { path: p.to_path_buf(), source: e })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        Ok(entries)
    };

    let mut patients = Vec::new();
    for dir in read_dir(root)? {
        if !dir.is_dir() {
            continue;
        }
        let files = read_dir(&dir)?;
        let find = |patterns: &[String]| {
            files.iter().find(|f| {
                f.file_name()
                    .map(|n| patterns.iter().any(|p| glob_match(p, &n.to_string_lossy())))
                    .unwrap_or(false)
            })
        };
        let image = match find(&layout.image_patterns) {
            Some(p) => p.clone(),
            None => continue,
        };
        let mask = if layout.mask_available { find(&layout.mask_patterns).cloned() } else { None };
        patients.push(NrrdPatient {
            patient_id: dir.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            image_path: image,
            mask_path: mask,
        });
    }

    if patients.is_empty() {
        return Err(CatalogError::EmptyDataset);
    }
    Ok(patients)
}

/// Case-insensitive glob with `*` as the only metacharacter.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.to_ascii_lowercase().chars().collect();
    let n: Vec<char> = name.to_ascii_lowercase().chars().collect();
    // Classic two-pointer wildcard match with backtracking to the last star.
    let (mut pi, mut ni) = (0usize, 0usize);
    let (mut star, mut mark) = (None::<usize>, 0usize);
    while ni < n.len() {
        if pi < p.len() && (p[pi] == n[ni]) {
            pi += 1;
            ni += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some(pi);
            mark = ni;
            pi += 1;
        } else if let Some(s) = star {
            pi = s + 1;
            mark += 1;
            ni = mark;
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}
