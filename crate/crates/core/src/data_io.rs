//! Dataset manifests, CSV matrix serialization, and the synthetic
//! multi-view generator.
//!
//! A dataset on disk is a directory with one manifest (line-oriented
//! `key=value` text) pointing at one CSV file per view and an optional
//! label file. All paths in the manifest are relative to the manifest's
//! directory. Matrix CSV files carry a `# rows cols` header line and one
//! comma-separated row per line, with 17 significant digits per value so
//! that save → load round-trips are bit-exact for 64-bit floats.

use crate::anchor_graph::ViewMatrix;
use crate::numerics::DenseMatrix;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const MANIFEST_VERSION: u64 = 1;
pub const DEFAULT_N_PER_CLUSTER: usize = 50;
pub const DEFAULT_K: usize = 4;
pub const DEFAULT_SEP: f64 = 10.0;

/// A named multi-view dataset: v views over the same n samples, with
/// optional ground-truth labels in {0..k-1}, every class nonempty.
#[derive(Debug, Clone)]
pub struct MultiViewDataset {
    views: Vec<ViewMatrix>,
    labels: Option<Vec<usize>>,
    name: String,
}

impl MultiViewDataset {
    pub fn new(
        views: Vec<ViewMatrix>,
        labels: Option<Vec<usize>>,
        name: impl Into<String>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::invalid("dataset needs at least one view"));
        }
        let n = views[0].n();
        for view in &views {
            if view.n() != n {
                return Err(Error::shape(
                    format!("view {}", view.view_index()),
                    format!("{n} rows"),
                    format!("{} rows", view.n()),
                ));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::shape(
                    "labels",
                    format!("{n} entries"),
                    format!("{} entries", labels.len()),
                ));
            }
            validate_label_range(labels)?;
        }
        Ok(Self {
            views,
            labels,
            name: name.into(),
        })
    }

    pub fn views(&self) -> &[ViewMatrix] {
        &self.views
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of samples (shared by all views).
    pub fn n(&self) -> usize {
        self.views[0].n()
    }

    /// Number of views.
    pub fn v(&self) -> usize {
        self.views.len()
    }

    /// Number of ground-truth classes, when labels are present.
    pub fn k_true(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }
}

/// Labels must be exactly {0..k-1} with every class populated.
fn validate_label_range(labels: &[usize]) -> Result<()> {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    if let Some(hole) = seen.iter().position(|&s| !s) {
        return Err(Error::invalid(format!(
            "labels use values up to {} but class {hole} is empty",
            k - 1
        )));
    }
    Ok(())
}

/// Parsed dataset manifest: file layout and declared shapes, validated
/// against the actual file contents on load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub version: u64,
    pub name: String,
    pub n: usize,
    pub v: usize,
    pub view_files: Vec<PathBuf>,
    pub dims: Vec<usize>,
    pub label_file: Option<PathBuf>,
}

impl DatasetManifest {
    /// Parse a manifest file. Lines are `key=value`; blank lines and lines
    /// starting with `#` are ignored.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut version = None;
        let mut name = None;
        let mut n = None;
        let mut v = None;
        let mut label_file = None;
        let mut view_files: Vec<Option<PathBuf>> = Vec::new();
        let mut dims: Vec<Option<usize>> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::parse(path, lineno + 1, message);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let as_count = |what: &str| -> Result<usize> {
                value
                    .parse::<usize>()
                    .map_err(|_| parse_err(format!("{what} must be an integer, got {value:?}")))
            };
            match key {
                "version" => version = Some(as_count("version")? as u64),
                "name" => name = Some(value.to_string()),
                "n" => n = Some(as_count("n")?),
                "v" => v = Some(as_count("v")?),
                "labels" => label_file = Some(PathBuf::from(value)),
                _ if key.starts_with("view.") || key.starts_with("dim.") => {
                    let (prefix, idx) = key.split_once('.').expect("checked by the guard");
                    let idx: usize = idx
                        .parse()
                        .map_err(|_| parse_err(format!("bad view index in key {key:?}")))?;
                    if prefix == "view" {
                        if view_files.len() <= idx {
                            view_files.resize(idx + 1, None);
                        }
                        view_files[idx] = Some(PathBuf::from(value));
                    } else {
                        if dims.len() <= idx {
                            dims.resize(idx + 1, None);
                        }
                        dims[idx] = Some(as_count("dim")?);
                    }
                }
                _ => {
                    return Err(parse_err(format!("unknown manifest key {key:?}")));
                }
            }
        }

        let missing = |what: &str| Error::parse(path, 0, format!("manifest is missing {what}"));
        let version = version.ok_or_else(|| missing("version"))?;
        if version != MANIFEST_VERSION {
            return Err(Error::invalid(format!(
                "unsupported manifest version {version}, expected {MANIFEST_VERSION}"
            )));
        }
        let n = n.ok_or_else(|| missing("n"))?;
        let v = v.ok_or_else(|| missing("v"))?;
        let view_files: Vec<PathBuf> = view_files
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.ok_or_else(|| missing(&format!("view.{i}"))))
            .collect::<Result<_>>()?;
        let dims: Vec<usize> = dims
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.ok_or_else(|| missing(&format!("dim.{i}"))))
            .collect::<Result<_>>()?;
        if view_files.len() != v || dims.len() != v {
            return Err(Error::invalid(format!(
                "manifest declares v = {v} but lists {} view files and {} dims",
                view_files.len(),
                dims.len()
            )));
        }
        let name = name.unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".to_string())
        });
        Ok(Self {
            version,
            name,
            n,
            v,
            view_files,
            dims,
            label_file,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!("version={}\n", self.version));
        out.push_str(&format!("name={}\n", self.name));
        out.push_str(&format!("n={}\n", self.n));
        out.push_str(&format!("v={}\n", self.v));
        for (i, file) in self.view_files.iter().enumerate() {
            out.push_str(&format!("view.{i}={}\n", file.display()));
        }
        for (i, dim) in self.dims.iter().enumerate() {
            out.push_str(&format!("dim.{i}={dim}\n"));
        }
        if let Some(labels) = &self.label_file {
            out.push_str(&format!("labels={}\n", labels.display()));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Write a matrix as CSV: a `# rows cols` header, then one row per line
/// with 17-significant-digit values (bit-exact round-trip).
pub fn save_matrix(matrix: &DenseMatrix, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let write = |out: &mut std::io::BufWriter<fs::File>, s: &str| -> Result<()> {
        out.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
    };
    write(&mut out, &format!("# {} {}\n", matrix.rows(), matrix.cols()))?;
    let mut line = String::new();
    for i in 0..matrix.rows() {
        line.clear();
        for (j, v) in matrix.row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        line.push('\n');
        write(&mut out, &line)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Read a matrix written by [`save_matrix`]. The `# rows cols` header is
/// optional; when present it is checked against the parsed body.
pub fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut declared: Option<(usize, usize)> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::parse(path, lineno + 1, message);
        if let Some(rest) = line.strip_prefix('#') {
            if lineno == 0 {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() == 2 {
                    if let (Ok(r), Ok(c)) = (parts[0].parse(), parts[1].parse()) {
                        declared = Some((r, c));
                    }
                }
            }
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let value: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad number {:?}", field.trim())))?;
            if !value.is_finite() {
                return Err(parse_err(format!("non-finite value {value}")));
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(format!(
                    "row has {} columns, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, 0, "matrix file has no data rows"));
    }
    if let Some((r, c)) = declared {
        if r != rows.len() || c != rows[0].len() {
            return Err(Error::parse(
                path,
                1,
                format!(
                    "header declares {r}x{c} but body is {}x{}",
                    rows.len(),
                    rows[0].len()
                ),
            ));
        }
    }
    DenseMatrix::from_rows(&rows)
}

/// Write labels, one integer per line.
pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 4);
    for l in labels {
        out.push_str(&format!("{l}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read labels written by [`save_labels`].
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let label = line
            .parse::<usize>()
            .map_err(|_| Error::parse(path, lineno + 1, format!("bad label {line:?}")))?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::parse(path, 0, "label file has no entries"));
    }
    Ok(labels)
}

/// Load a dataset from its manifest, validating every declared shape
/// against the file contents.
pub fn load_dataset(manifest_path: &Path) -> Result<MultiViewDataset> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut views = Vec::with_capacity(manifest.v);
    for (i, rel) in manifest.view_files.iter().enumerate() {
        let data = load_matrix(&base.join(rel))?;
        if data.rows() != manifest.n {
            return Err(Error::shape(
                format!("view {i} ({})", rel.display()),
                format!("{} rows", manifest.n),
                format!("{} rows", data.rows()),
            ));
        }
        if data.cols() != manifest.dims[i] {
            return Err(Error::shape(
                format!("view {i} ({})", rel.display()),
                format!("{} columns", manifest.dims[i]),
                format!("{} columns", data.cols()),
            ));
        }
        views.push(ViewMatrix::new(data, i)?);
    }
    let labels = manifest
        .label_file
        .as_ref()
        .map(|rel| load_labels(&base.join(rel)))
        .transpose()?;
    MultiViewDataset::new(views, labels, manifest.name)
}

/// Write a dataset into `dir` (created if needed): one CSV per view,
/// optional labels, and `manifest.txt`. Returns the manifest path.
pub fn save_dataset(dataset: &MultiViewDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut view_files = Vec::with_capacity(dataset.v());
    let mut dims = Vec::with_capacity(dataset.v());
    for (i, view) in dataset.views().iter().enumerate() {
        let rel = PathBuf::from(format!("view{i}.csv"));
        save_matrix(view.data(), &dir.join(&rel))?;
        view_files.push(rel);
        dims.push(view.dim());
    }
    let label_file = match dataset.labels() {
        Some(labels) => {
            let rel = PathBuf::from("labels.csv");
            save_labels(labels, &dir.join(&rel))?;
            Some(rel)
        }
        None => None,
    };
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        name: dataset.name().to_string(),
        n: dataset.n(),
        v: dataset.v(),
        view_files,
        dims,
        label_file,
    };
    let manifest_path = dir.join("manifest.txt");
    manifest.write(&manifest_path)?;
    Ok(manifest_path)
}

/// Synthetic two-view dataset: k balanced clusters of `n_per_cluster`
/// 2-D Gaussian samples per view. Each view draws its own layout of
/// cluster means on a circle of radius `sep` (equally spaced slots, a
/// random rotation, and a random cluster-to-slot permutation), so the
/// views share memberships but not geometry. Noise is unit-variance
/// isotropic. Deterministic per seed.
pub fn generate_simulated(
    seed: u64,
    n_per_cluster: usize,
    k: usize,
    sep: f64,
) -> Result<MultiViewDataset> {
    if !(sep > 0.0) || !sep.is_finite() {
        return Err(Error::invalid(format!(
            "generate_simulated: sep must be positive, got {sep}"
        )));
    }
    if n_per_cluster == 0 || k == 0 {
        return Err(Error::invalid(
            "generate_simulated: n_per_cluster and k must be positive",
        ));
    }
    let n = n_per_cluster * k;
    let labels: Vec<usize> = (0..n).map(|i| i / n_per_cluster).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut views = Vec::with_capacity(2);
    for view_index in 0..2 {
        let centers = circle_layout(k, sep, &mut rng);
        let mut data = DenseMatrix::zeros(n, 2);
        for (i, &label) in labels.iter().enumerate() {
            let (cx, cy) = centers[label];
            let nx: f64 = StandardNormal.sample(&mut rng);
            let ny: f64 = StandardNormal.sample(&mut rng);
            data.set(i, 0, cx + nx);
            data.set(i, 1, cy + ny);
        }
        views.push(ViewMatrix::new(data, view_index)?);
    }
    MultiViewDataset::new(views, Some(labels), format!("simulated-{seed}"))
}

/// k cluster means on a circle of radius `sep`: equally spaced slots,
/// rotated by a random offset, with clusters assigned to slots by a
/// random permutation.
fn circle_layout(k: usize, sep: f64, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let offset: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut slot_of: Vec<usize> = (0..k).collect();
    // Fisher–Yates with the shared stream keeps the whole dataset a pure
    // function of the seed.
    for i in (1..k).rev() {
        let j = rng.gen_range(0..=i);
        slot_of.swap(i, j);
    }
    (0..k)
        .map(|cluster| {
            let angle = offset + std::f64::consts::TAU * slot_of[cluster] as f64 / k as f64;
            (sep * angle.cos(), sep * angle.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn tempdir() -> tempfile::TempDir {
        tempfile::tempdir().expect("create temp dir")
    }

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let dir = tempdir();
        let path = dir.path().join("m.csv");
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut m = DenseMatrix::zeros(9, 4);
        for i in 0..9 {
            for j in 0..4 {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m.set(i, j, v * 10f64.powi(rng.gen_range(-12..12)));
            }
        }
        save_matrix(&m, &path).unwrap();
        let back = load_matrix(&path).unwrap();
        assert_eq!(m.as_slice(), back.as_slice());
    }

    #[test]
    fn load_matrix_reports_line_numbers() {
        let dir = tempdir();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "1.0,2.0\n3.0,oops\n").unwrap();
        let err = load_matrix(&path).unwrap_err().to_string();
        assert!(err.contains("line 2"), "unhelpful error: {err}");
    }

    #[test]
    fn load_matrix_accepts_headerless_files() {
        let dir = tempdir();
        let path = dir.path().join("plain.csv");
        fs::write(&path, "1.5,2.5\n-3.0,4.0\n").unwrap();
        let m = load_matrix(&path).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert_eq!(m.get(1, 0), -3.0);
    }

    #[test]
    fn load_matrix_rejects_ragged_rows_and_bad_headers() {
        let dir = tempdir();
        let ragged = dir.path().join("ragged.csv");
        fs::write(&ragged, "1.0,2.0\n3.0\n").unwrap();
        assert!(load_matrix(&ragged).is_err());

        let lying = dir.path().join("lying.csv");
        fs::write(&lying, "# 3 2\n1.0,2.0\n").unwrap();
        assert!(load_matrix(&lying).unwrap_err().to_string().contains("3x2"));
    }

    #[test]
    fn dataset_round_trip_preserves_everything() {
        let dir = tempdir();
        let dataset = generate_simulated(5, 10, 3, 4.0).unwrap();
        let manifest_path = save_dataset(&dataset, dir.path()).unwrap();
        let back = load_dataset(&manifest_path).unwrap();
        assert_eq!(back.name(), dataset.name());
        assert_eq!(back.n(), dataset.n());
        assert_eq!(back.v(), dataset.v());
        assert_eq!(back.labels(), dataset.labels());
        for (a, b) in back.views().iter().zip(dataset.views()) {
            assert_eq!(a.data().as_slice(), b.data().as_slice());
        }
    }

    #[test]
    fn manifest_dim_mismatch_names_the_view() {
        let dir = tempdir();
        let dataset = generate_simulated(1, 5, 2, 3.0).unwrap();
        let manifest_path = save_dataset(&dataset, dir.path()).unwrap();
        // Corrupt the declared dim of view 1.
        let text = fs::read_to_string(&manifest_path).unwrap();
        fs::write(&manifest_path, text.replace("dim.1=2", "dim.1=3")).unwrap();
        let err = load_dataset(&manifest_path).unwrap_err().to_string();
        assert!(err.contains("view 1"), "error does not name the view: {err}");
    }

    #[test]
    fn missing_view_file_is_a_clean_error() {
        let dir = tempdir();
        let dataset = generate_simulated(2, 5, 2, 3.0).unwrap();
        let manifest_path = save_dataset(&dataset, dir.path()).unwrap();
        fs::remove_file(dir.path().join("view0.csv")).unwrap();
        assert!(load_dataset(&manifest_path).is_err());
    }

    #[test]
    fn generator_defaults_match_the_simulation_shape() {
        let d = generate_simulated(7, DEFAULT_N_PER_CLUSTER, DEFAULT_K, DEFAULT_SEP).unwrap();
        assert_eq!(d.n(), 200);
        assert_eq!(d.v(), 2);
        assert_eq!(d.views()[0].dim(), 2);
        assert_eq!(d.views()[1].dim(), 2);
        assert_eq!(d.k_true(), Some(4));
        let labels = d.labels().unwrap();
        for c in 0..4 {
            assert_eq!(labels.iter().filter(|&&l| l == c).count(), 50);
        }
    }

    #[test]
    fn generator_is_deterministic_and_rejects_bad_sep() {
        let a = generate_simulated(9, 10, 3, 5.0).unwrap();
        let b = generate_simulated(9, 10, 3, 5.0).unwrap();
        for (va, vb) in a.views().iter().zip(b.views()) {
            assert_eq!(va.data().as_slice(), vb.data().as_slice());
        }
        assert!(generate_simulated(9, 10, 3, 0.0).is_err());
        assert!(generate_simulated(9, 10, 3, -1.0).is_err());
        assert!(generate_simulated(9, 0, 3, 1.0).is_err());
    }

    #[test]
    fn class_means_sit_near_the_circle() {
        // Empirical class means should be within ~3σ/√50 of centers that
        // lie on the radius-`sep` circle.
        let sep = 10.0;
        let d = generate_simulated(3, 50, 4, sep).unwrap();
        let labels = d.labels().unwrap();
        for view in d.views() {
            for c in 0..4 {
                let members: Vec<usize> =
                    (0..d.n()).filter(|&i| labels[i] == c).collect();
                let mean: Vec<f64> = (0..2)
                    .map(|j| {
                        members.iter().map(|&i| view.data().get(i, j)).sum::<f64>()
                            / members.len() as f64
                    })
                    .collect();
                let radius = (mean[0] * mean[0] + mean[1] * mean[1]).sqrt();
                assert!(
                    (radius - sep).abs() < 0.9,
                    "class {c} mean radius {radius} too far from {sep}"
                );
            }
        }
    }

    #[test]
    fn dataset_invariants_are_enforced() {
        let v0 = ViewMatrix::new(DenseMatrix::zeros(3, 2), 0).unwrap();
        let v1 = ViewMatrix::new(DenseMatrix::zeros(4, 2), 1).unwrap();
        assert!(MultiViewDataset::new(vec![v0.clone(), v1], None, "bad").is_err());
        // Label 2 present but class 1 empty.
        assert!(MultiViewDataset::new(vec![v0], Some(vec![0, 0, 2]), "bad").is_err());
    }
}
