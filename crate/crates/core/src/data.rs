//! Dataset representation, CSV ingestion, label encoding, class counting,
//! and deterministic stratified splitting.
//!
//! A [`Dataset`] is a dense real-valued feature matrix (rows = samples) with
//! integer class labels and the class-name table that defines the label
//! encoding. Label indices are assigned by lexicographic order of the distinct
//! label strings, so the encoding is reproducible without configuration.
//!
//! The CSV interchange format used by every pipeline stage: UTF-8, comma
//! separated, first line is a header, decimal reals with `.` separator, no
//! quoting (labels must not contain commas). [`save_csv`] writes features with
//! 17 significant digits so a load/save round trip preserves every value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::substream;

/// Feature matrix plus labels and the class-name table.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Build a dataset, validating every invariant: at least one row, at least
    /// one feature, finite values only, labels in range, at least two classes,
    /// and unique non-empty comma-free class names.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let (m, d) = features.dim();
        if m == 0 {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if d == 0 {
            return Err(Error::Data("dataset has no feature columns".into()));
        }
        if labels.len() != m {
            return Err(Error::Data(format!(
                "label count {} does not match row count {}",
                labels.len(),
                m
            )));
        }
        if class_names.len() < 2 {
            return Err(Error::Data("fewer than 2 classes".into()));
        }
        for (i, name) in class_names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Data(format!("class {i} has an empty name")));
            }
            if name.contains(',') {
                return Err(Error::Data(format!("class name '{name}' contains a comma")));
            }
            if class_names[..i].contains(name) {
                return Err(Error::Data(format!("duplicate class name '{name}'")));
            }
        }
        let c = class_names.len();
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::Data(format!("label index {bad} out of range for {c} classes")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("features contain NaN or infinity".into()));
        }
        Ok(Self {
            features,
            labels,
            class_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// New dataset holding the given rows (in the given order). The class
    /// table is kept whole so label indices stay comparable across subsets.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::Data("subset selects no rows".into()));
        }
        let features = self.features.select(ndarray::Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(features, labels, self.class_names.clone())
    }

    /// Enforce that every feature row lies on the probability simplex:
    /// entries non-negative and summing to 1 within `tol`.
    pub fn require_simplex(&self, tol: f64) -> Result<()> {
        for (i, row) in self.features.rows().into_iter().enumerate() {
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::Data(format!("row {i} has a negative feature value")));
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::Data(format!(
                    "row {i} sums to {sum}, not 1 within {tol}"
                )));
            }
        }
        Ok(())
    }
}

/// Samples per class; `counts[c]` is the number of rows labelled `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDistribution {
    counts: Vec<usize>,
}

impl ClassDistribution {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Count rows per class.
pub fn class_counts(ds: &Dataset) -> ClassDistribution {
    let mut counts = vec![0usize; ds.n_classes()];
    for &l in ds.labels() {
        counts[l] += 1;
    }
    ClassDistribution::new(counts)
}

/// Train/validation/test fractions plus the shuffle seed.
///
/// Train and test fractions must be positive; the validation fraction may be
/// exactly zero. Fractions must sum to 1 within 1e-9.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, val_fraction: f64, test_fraction: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            train_fraction,
            val_fraction,
            test_fraction,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let sum = self.train_fraction + self.val_fraction + self.test_fraction;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions sum to {sum}, not 1")));
        }
        if !(self.train_fraction > 0.0) || !(self.test_fraction > 0.0) {
            return Err(Error::Config(
                "train and test fractions must both be positive".into(),
            ));
        }
        if self.val_fraction < 0.0 {
            return Err(Error::Config("validation fraction must be >= 0".into()));
        }
        Ok(())
    }
}

/// Deterministic per-class split.
///
/// Each class's row indices are shuffled with a seeded generator (one
/// substream per class), then allocated floor(n_c * train) to train,
/// floor(n_c * val) to validation, remainder to test. Rows within each output
/// split keep their original dataset order. The validation dataset is `None`
/// when `val_fraction` is zero.
///
/// Errors if any class cannot put at least one sample into every
/// nonzero-fraction split.
pub fn stratified_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Option<Dataset>, Dataset)> {
    spec.validate()?;
    let c = ds.n_classes();
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &l) in ds.labels().iter().enumerate() {
        per_class[l].push(i);
    }

    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class, indices) in per_class.iter_mut().enumerate() {
        let n = indices.len();
        let n_train = (n as f64 * spec.train_fraction).floor() as usize;
        let n_val = (n as f64 * spec.val_fraction).floor() as usize;
        let n_test = n - n_train - n_val;
        let starved = n_train == 0 || n_test == 0 || (spec.val_fraction > 0.0 && n_val == 0);
        if starved {
            return Err(Error::Data(format!(
                "class '{}' has too few samples ({}) to populate every nonzero split",
                ds.class_names()[class],
                n
            )));
        }
        indices.shuffle(&mut substream(spec.seed, class as u64));
        train_idx.extend_from_slice(&indices[..n_train]);
        val_idx.extend_from_slice(&indices[n_train..n_train + n_val]);
        test_idx.extend_from_slice(&indices[n_train + n_val..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    test_idx.sort_unstable();

    let train = ds.subset(&train_idx)?;
    let val = if spec.val_fraction > 0.0 {
        Some(ds.subset(&val_idx)?)
    } else {
        None
    };
    let test = ds.subset(&test_idx)?;
    Ok((train, val, test))
}

/// Parse the CSV interchange format. `label_column` names the header column
/// holding class labels; all remaining columns must parse as decimal reals
/// and become features in header order.
pub fn load_csv(path: &Path, label_column: &str) -> Result<Dataset> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot open '{}': {e}", path.display())))?;
    parse_csv(&text, label_column)
}

fn parse_csv(text: &str, label_column: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data("empty file: missing header line".into()))?;
    let columns: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    let label_positions: Vec<usize> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == label_column)
        .map(|(i, _)| i)
        .collect();
    let label_pos = match label_positions.as_slice() {
        [] => {
            return Err(Error::Data(format!(
                "label column '{label_column}' not found in header"
            )))
        }
        [pos] => *pos,
        _ => {
            return Err(Error::Data(format!(
                "label column '{label_column}' appears more than once in header"
            )))
        }
    };
    let d = columns.len() - 1;
    if d == 0 {
        return Err(Error::Data("no feature columns in header".into()));
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut label_strings: Vec<String> = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1; // 1-based file line number
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(Error::Data(format!(
                "line {line_no}: expected {} columns, found {}",
                columns.len(),
                cells.len()
            )));
        }
        for (i, cell) in cells.iter().enumerate() {
            if i == label_pos {
                label_strings.push(cell.to_string());
            } else {
                let value: f64 = cell.parse().map_err(|_| {
                    Error::Data(format!("line {line_no}: cannot parse '{cell}' as a real number"))
                })?;
                if !value.is_finite() {
                    return Err(Error::Data(format!(
                        "line {line_no}: non-finite feature value '{cell}'"
                    )));
                }
                rows.push(value);
            }
        }
    }
    if label_strings.is_empty() {
        return Err(Error::Data("file has no data rows".into()));
    }

    let mut class_names: Vec<String> = label_strings.clone();
    class_names.sort();
    class_names.dedup();
    let labels: Vec<usize> = label_strings
        .iter()
        .map(|s| class_names.binary_search(s).expect("label came from class set"))
        .collect();

    let m = label_strings.len();
    let features = Array2::from_shape_vec((m, d), rows)
        .map_err(|e| Error::Data(format!("feature matrix shape error: {e}")))?;
    Dataset::new(features, labels, class_names)
}

/// Write the dataset in the CSV interchange format: features as columns
/// `f0..f{d-1}` with 17 significant digits, label strings in a final `label`
/// column.
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for j in 0..ds.n_features() {
        let _ = write!(out, "f{j},");
    }
    out.push_str("label\n");
    for (row, &label) in ds.features().rows().into_iter().zip(ds.labels()) {
        for v in row.iter() {
            let _ = write!(out, "{v:.16e},");
        }
        out.push_str(&ds.class_names()[label]);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// In-memory CSV serialization, used for split digests in run manifests.
pub fn to_csv_string(ds: &Dataset) -> String {
    let mut out = String::new();
    for j in 0..ds.n_features() {
        let _ = write!(out, "f{j},");
    }
    out.push_str("label\n");
    for (row, &label) in ds.features().rows().into_iter().zip(ds.labels()) {
        for v in row.iter() {
            let _ = write!(out, "{v:.16e},");
        }
        out.push_str(&ds.class_names()[label]);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn two_class_csv() -> &'static str {
        "f0,f1,label\n0.9,0.1,cat\n0.2,0.8,dog\n"
    }

    #[test]
    fn load_csv_basic() {
        let ds = parse_csv(two_class_csv(), "label").unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.class_names(), &["cat".to_string(), "dog".to_string()]);
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.features()[[0, 0]], 0.9);
        assert_eq!(ds.features()[[1, 1]], 0.8);
    }

    #[test]
    fn load_csv_label_column_anywhere() {
        let ds = parse_csv("a,label,b\n0.5,x,1.5\n0.25,y,2.5\n", "label").unwrap();
        assert_eq!(ds.n_features(), 2);
        // feature order follows header order with the label removed
        assert_eq!(ds.features()[[0, 0]], 0.5);
        assert_eq!(ds.features()[[0, 1]], 1.5);
    }

    #[test]
    fn load_csv_single_class_rejected() {
        let err = parse_csv("f0,f1,label\n1.0,0.0,a\n", "label").unwrap_err();
        assert!(err.to_string().contains("fewer than 2 classes"), "{err}");
    }

    #[test]
    fn load_csv_parse_error_names_line() {
        let err = parse_csv("f0,f1,label\n0.9,0.1,cat\n0.x9,0.8,dog\n", "label").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(err.to_string().contains("0.x9"), "{err}");
    }

    #[test]
    fn load_csv_missing_and_duplicate_label_column() {
        let err = parse_csv("f0,f1\n0.9,0.1\n", "label").unwrap_err();
        assert!(err.to_string().contains("not found"), "{err}");
        let err = parse_csv("label,label\nx,y\n", "label").unwrap_err();
        assert!(err.to_string().contains("more than once"), "{err}");
    }

    #[test]
    fn load_csv_inconsistent_columns() {
        let err = parse_csv("f0,f1,label\n0.9,0.1,cat\n0.9,dog\n", "label").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(err.to_string().contains("columns"), "{err}");
    }

    #[test]
    fn load_csv_missing_file() {
        let err = load_csv(Path::new("/nonexistent/nope.csv"), "label").unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn class_counts_basic() {
        let ds = Dataset::new(
            Array2::zeros((3, 1)),
            vec![0, 0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert_eq!(class_counts(&ds).counts(), &[2, 1]);
    }

    #[test]
    fn dataset_rejects_bad_inputs() {
        assert!(Dataset::new(Array2::zeros((0, 2)), vec![], vec!["a".into(), "b".into()]).is_err());
        assert!(Dataset::new(
            Array2::from_elem((1, 1), f64::NAN),
            vec![0],
            vec!["a".into(), "b".into()]
        )
        .is_err());
        assert!(Dataset::new(Array2::zeros((1, 1)), vec![2], vec!["a".into(), "b".into()]).is_err());
        assert!(Dataset::new(Array2::zeros((1, 1)), vec![0], vec!["a".into(), "a".into()]).is_err());
        assert!(Dataset::new(Array2::zeros((1, 1)), vec![0], vec!["a,b".into(), "c".into()]).is_err());
    }

    fn random_dataset(rng: &mut impl Rng, min_per_class: usize) -> Dataset {
        let c = rng.gen_range(2..=5usize);
        let d = rng.gen_range(1..=6usize);
        let mut labels = Vec::new();
        for class in 0..c {
            let n = rng.gen_range(min_per_class..min_per_class + 12);
            labels.extend(std::iter::repeat(class).take(n));
        }
        let m = labels.len();
        let features = Array2::from_shape_fn((m, d), |_| rng.gen_range(-3.0..3.0));
        let names = (0..c).map(|i| format!("c{i}")).collect();
        Dataset::new(features, labels, names).unwrap()
    }

    #[test]
    fn split_allocation_examples() {
        // 193 samples at 0.75/0.125/0.125 -> 144/24/25
        let mut labels = vec![0usize; 193];
        labels.extend(vec![1usize; 40]);
        let m = labels.len();
        let ds = Dataset::new(
            Array2::from_shape_fn((m, 2), |(i, j)| (i * 2 + j) as f64),
            labels,
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let spec = SplitSpec::new(0.75, 0.125, 0.125, 7).unwrap();
        let (train, val, test) = stratified_split(&ds, &spec).unwrap();
        let count = |d: &Dataset, c: usize| d.labels().iter().filter(|&&l| l == c).count();
        assert_eq!(count(&train, 0), 144);
        assert_eq!(count(val.as_ref().unwrap(), 0), 24);
        assert_eq!(count(&test, 0), 25);

        // n_c = 8 at 0.5/0.25/0.25 -> 4/2/2
        let ds8 = Dataset::new(
            Array2::from_shape_fn((16, 1), |(i, _)| i as f64),
            (0..16).map(|i| i % 2).collect(),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let spec8 = SplitSpec::new(0.5, 0.25, 0.25, 3).unwrap();
        let (train, val, test) = stratified_split(&ds8, &spec8).unwrap();
        assert_eq!(count(&train, 0), 4);
        assert_eq!(count(val.as_ref().unwrap(), 0), 2);
        assert_eq!(count(&test, 0), 2);
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        assert!(SplitSpec::new(1.0, 0.0, 0.0, 0).is_err());
        assert!(SplitSpec::new(0.5, 0.25, 0.3, 0).is_err());
        assert!(SplitSpec::new(0.5, 0.5, 0.0, 0).is_err()); // test fraction zero
    }

    #[test]
    fn split_rejects_starved_class() {
        let ds = Dataset::new(
            Array2::zeros((5, 1)),
            vec![0, 0, 0, 0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let spec = SplitSpec::new(0.5, 0.25, 0.25, 0).unwrap();
        let err = stratified_split(&ds, &spec).unwrap_err();
        assert!(err.to_string().contains("too few samples"), "{err}");
    }

    #[test]
    fn split_partitions_exactly() {
        let mut rng = substream(42, 0);
        for case in 0..200 {
            let ds = random_dataset(&mut rng, 4);
            let spec = SplitSpec::new(0.6, 0.2, 0.2, case).unwrap();
            let (train, val, test) = stratified_split(&ds, &spec).unwrap();
            let mut got: Vec<(Vec<u64>, usize)> = Vec::new();
            for part in [Some(&train), val.as_ref(), Some(&test)].into_iter().flatten() {
                for (row, &l) in part.features().rows().into_iter().zip(part.labels()) {
                    got.push((row.iter().map(|v| v.to_bits()).collect(), l));
                }
            }
            let mut want: Vec<(Vec<u64>, usize)> = ds
                .features()
                .rows()
                .into_iter()
                .zip(ds.labels())
                .map(|(row, &l)| (row.iter().map(|v| v.to_bits()).collect(), l))
                .collect();
            got.sort();
            want.sort();
            assert_eq!(got, want, "case {case}: splits are not a partition");
        }
    }

    #[test]
    fn split_deterministic_and_seed_sensitive() {
        let mut rng = substream(1, 0);
        let ds = random_dataset(&mut rng, 6);
        let spec = SplitSpec::new(0.6, 0.2, 0.2, 99).unwrap();
        let a = stratified_split(&ds, &spec).unwrap();
        let b = stratified_split(&ds, &spec).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);

        let baseline = stratified_split(&ds, &spec).unwrap().0;
        let mut any_differ = false;
        for seed in 0..20 {
            let spec_s = SplitSpec::new(0.6, 0.2, 0.2, seed).unwrap();
            let train = stratified_split(&ds, &spec_s).unwrap().0;
            if train != baseline {
                any_differ = true;
                break;
            }
        }
        assert!(any_differ, "20 different seeds all produced the same train split");
    }

    #[test]
    fn split_is_stratified() {
        let mut rng = substream(7, 0);
        for case in 0..50 {
            let ds = random_dataset(&mut rng, 5);
            let spec = SplitSpec::new(0.7, 0.0, 0.3, case).unwrap();
            let (train, _, _) = stratified_split(&ds, &spec).unwrap();
            let totals = class_counts(&ds);
            let trains = class_counts(&train);
            for c in 0..ds.n_classes() {
                let n_c = totals.counts()[c] as f64;
                let share = trains.counts()[c] as f64 / n_c;
                assert!(
                    (share - spec.train_fraction).abs() <= 1.0 / n_c + 1e-12,
                    "class {c}: share {share} too far from {}",
                    spec.train_fraction
                );
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        let mut rng = substream(5, 0);
        for _ in 0..20 {
            let ds = random_dataset(&mut rng, 3);
            save_csv(&ds, &path).unwrap();
            let back = load_csv(&path, "label").unwrap();
            assert_eq!(back.labels(), ds.labels());
            assert_eq!(back.class_names(), ds.class_names());
            for (a, b) in back.features().iter().zip(ds.features().iter()) {
                let rel = (a - b).abs() / b.abs().max(1.0);
                assert!(rel <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn simplex_check() {
        let ds = Dataset::new(
            Array2::from_shape_vec((2, 2), vec![0.4, 0.6, 0.5, 0.5]).unwrap(),
            vec![0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(ds.require_simplex(1e-6).is_ok());
        let bad = Dataset::new(
            Array2::from_shape_vec((1, 2), vec![0.4, 0.7]).unwrap(),
            vec![0],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(bad.require_simplex(1e-6).is_err());
    }
}
