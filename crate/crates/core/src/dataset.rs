//! Multi-view datasets, the known/novel class split and label encodings.
//!
//! Views are stored feature-major: a view with `d` features over `n` samples
//! is a `d × n` matrix, so every sample is one contiguous column.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// One feature view over the shared sample axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMatrix {
    data: DMatrix<f64>,
    view_index: usize,
}

impl ViewMatrix {
    pub fn new(data: DMatrix<f64>, view_index: usize) -> Result<Self> {
        for (j, col) in data.column_iter().enumerate() {
            if let Some(i) = col.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    view: view_index,
                    feature: i,
                    sample: j,
                });
            }
        }
        Ok(ViewMatrix { data, view_index })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn view_index(&self) -> usize {
        self.view_index
    }

    /// Feature dimension `d_v`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.data.ncols()
    }
}

/// A validated multi-view dataset with its known/novel partition.
///
/// Labels of novel-class samples are kept for evaluation only; the solver
/// never reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<ViewMatrix>,
    labels: Vec<usize>,
    num_classes: usize,
    known_classes: Vec<usize>,
    novel_classes: Vec<usize>,
    labeled_indices: Vec<usize>,
    unlabeled_indices: Vec<usize>,
}

impl MultiViewDataset {
    /// Builds a dataset whose known classes are the first half of the ids.
    pub fn with_default_split(views: Vec<DMatrix<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let (known, _) = split_known_novel(&labels, num_classes)?;
        Self::new(views, labels, num_classes, known)
    }

    /// Builds a dataset with an explicit set of known classes. Every other
    /// class id in `0..num_classes` is novel.
    pub fn new(
        views: Vec<DMatrix<f64>>,
        labels: Vec<usize>,
        num_classes: usize,
        known_classes: Vec<usize>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::EmptyInput("dataset needs at least one view"));
        }
        let n = labels.len();
        let views = views
            .into_iter()
            .enumerate()
            .map(|(v, data)| {
                if data.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: data.ncols(),
                        what: format!("sample count of view {v}"),
                    });
                }
                ViewMatrix::new(data, v)
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, &label) in labels.iter().enumerate() {
            if label >= num_classes {
                return Err(Error::LabelOutOfRange {
                    sample: i,
                    label,
                    num_classes,
                });
            }
        }

        let mut known = known_classes;
        known.sort_unstable();
        known.dedup();
        if let Some(&bad) = known.iter().find(|&&c| c >= num_classes) {
            return Err(Error::InvalidSplit(format!(
                "known class {bad} is outside [0, {num_classes})"
            )));
        }
        if known.is_empty() || known.len() >= num_classes {
            return Err(Error::InvalidSplit(
                "need at least one known and one novel class".to_string(),
            ));
        }
        let mut is_known = vec![false; num_classes];
        for &c in &known {
            is_known[c] = true;
        }
        let novel: Vec<usize> = (0..num_classes).filter(|&c| !is_known[c]).collect();

        let (labeled, unlabeled): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_known[labels[i]]);

        let ds = MultiViewDataset {
            views,
            labels,
            num_classes,
            known_classes: known,
            novel_classes: novel,
            labeled_indices: labeled,
            unlabeled_indices: unlabeled,
        };
        debug_assert!(ds.check_invariants());
        Ok(ds)
    }

    fn check_invariants(&self) -> bool {
        let n = self.num_samples();
        let same_n = self.views.iter().all(|v| v.num_samples() == n);
        let covers = self.labeled_indices.len() + self.unlabeled_indices.len() == n;
        let sizes = self.known_classes.len() + self.novel_classes.len() == self.num_classes;
        let labeled_known = self
            .labeled_indices
            .iter()
            .all(|&i| self.known_classes.binary_search(&self.labels[i]).is_ok());
        same_n && covers && sizes && labeled_known
    }

    pub fn views(&self) -> &[ViewMatrix] {
        &self.views
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(ViewMatrix::dim).collect()
    }

    /// Class id of every sample, including novel ones (evaluation only).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn known_classes(&self) -> &[usize] {
        &self.known_classes
    }

    pub fn novel_classes(&self) -> &[usize] {
        &self.novel_classes
    }

    pub fn labeled_indices(&self) -> &[usize] {
        &self.labeled_indices
    }

    pub fn unlabeled_indices(&self) -> &[usize] {
        &self.unlabeled_indices
    }

    /// Ground-truth ids of the unlabeled samples, in dataset order.
    pub fn novel_truth(&self) -> Vec<usize> {
        self.unlabeled_indices.iter().map(|&i| self.labels[i]).collect()
    }

    /// One-hot row of a class: known classes occupy rows `0..k_l` in sorted
    /// order, novel classes rows `k_l..k`.
    pub fn row_of_class(&self, class: usize) -> usize {
        match self.known_classes.binary_search(&class) {
            Ok(r) => r,
            Err(_) => {
                self.known_classes.len()
                    + self
                        .novel_classes
                        .binary_search(&class)
                        .expect("class id outside the dataset")
            }
        }
    }

    pub fn class_of_row(&self, row: usize) -> usize {
        let k_l = self.known_classes.len();
        if row < k_l {
            self.known_classes[row]
        } else {
            self.novel_classes[row - k_l]
        }
    }

    fn map_views(&self, mut f: impl FnMut(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        let mut out = self.clone();
        for view in &mut out.views {
            view.data = f(&view.data);
        }
        out
    }
}

/// Splits `0..k` into known and novel classes: the numerically first
/// `⌊k/2⌋` ids are known, the remaining `⌈k/2⌉` are novel.
pub fn split_known_novel(labels: &[usize], k: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if k < 2 {
        return Err(Error::InvalidSplit(format!("need at least 2 classes, got {k}")));
    }
    if let Some((i, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
        return Err(Error::LabelOutOfRange {
            sample: i,
            label,
            num_classes: k,
        });
    }
    let k_l = k / 2;
    Ok(((0..k_l).collect(), (k_l..k).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizeMode {
    /// Each feature row to mean 0 and unit population standard deviation.
    #[default]
    ZScore,
    /// Each sample column to unit Euclidean norm.
    L2,
    None,
}

impl core::str::FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zscore" => Ok(NormalizeMode::ZScore),
            "l2" => Ok(NormalizeMode::L2),
            "none" => Ok(NormalizeMode::None),
            other => Err(Error::InvalidConfig(format!("unknown normalization {other:?}"))),
        }
    }
}

impl core::fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            NormalizeMode::ZScore => "zscore",
            NormalizeMode::L2 => "l2",
            NormalizeMode::None => "none",
        })
    }
}

/// Normalizes every view. Statistics use all samples, labeled and unlabeled.
/// Zero-variance feature rows become all-zero; zero columns stay zero.
pub fn normalize_features(ds: &MultiViewDataset, mode: NormalizeMode) -> MultiViewDataset {
    match mode {
        NormalizeMode::None => ds.clone(),
        NormalizeMode::ZScore => ds.map_views(zscore_rows),
        NormalizeMode::L2 => ds.map_views(l2_columns),
    }
}

pub(crate) fn zscore_rows(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    let mut out = x.clone();
    if n == 0 {
        return out;
    }
    for i in 0..x.nrows() {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / n as f64;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let scale = 1.0 + mean * mean;
        if var <= 1e-24 * scale {
            out.row_mut(i).fill(0.0);
        } else {
            let std = libm::sqrt(var);
            for v in out.row_mut(i).iter_mut() {
                *v = (*v - mean) / std;
            }
        }
    }
    out
}

pub(crate) fn l2_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    out
}

/// Hard assignment of `m` samples to `k` classes, viewed as a `k × m`
/// `{0,1}` matrix with exactly one 1 per column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotLabels {
    assignment: Vec<usize>,
    k: usize,
}

impl OneHotLabels {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if let Some((i, &label)) = assignment.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::LabelOutOfRange {
                sample: i,
                label,
                num_classes: k,
            });
        }
        Ok(OneHotLabels { assignment, k })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub(crate) fn assignment_mut(&mut self) -> &mut [usize] {
        &mut self.assignment
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Number of columns assigned to each row.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &l in &self.assignment {
            counts[l] += 1;
        }
        counts
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(self.k, self.assignment.len());
        for (j, &l) in self.assignment.iter().enumerate() {
            y[(l, j)] = 1.0;
        }
        y
    }
}

pub fn encode_onehot(labels: &[usize], k: usize) -> Result<OneHotLabels> {
    OneHotLabels::new(labels.to_vec(), k)
}

/// Recovers the class index of every column of a one-hot matrix.
pub fn decode_onehot(y: &DMatrix<f64>) -> Result<Vec<usize>> {
    y.column_iter()
        .enumerate()
        .map(|(j, col)| {
            let ones: Vec<usize> = col
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, _)| i)
                .collect();
            match ones.as_slice() {
                [i] if col[*i] == 1.0 => Ok(*i),
                _ => Err(Error::DimensionMismatch {
                    expected: 1,
                    found: ones.len(),
                    what: format!("nonzero count of one-hot column {j}"),
                }),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tiny() -> MultiViewDataset {
        let v0 = DMatrix::from_row_slice(3, 4, &[1., 2., 3., 4., 0., 1., 0., 1., 5., 5., 6., 6.]);
        let v1 = DMatrix::from_row_slice(2, 4, &[1., 1., 2., 2., 3., 4., 3., 4.]);
        MultiViewDataset::new(vec![v0, v1], vec![0, 0, 1, 1], 2, vec![0]).unwrap()
    }

    #[test]
    fn split_sizes() {
        let (k, nv) = split_known_novel(&[], 10).unwrap();
        assert_eq!(k, (0..5).collect::<Vec<_>>());
        assert_eq!(nv, (5..10).collect::<Vec<_>>());
        let (k, nv) = split_known_novel(&[], 7).unwrap();
        assert_eq!(k, vec![0, 1, 2]);
        assert_eq!(nv, vec![3, 4, 5, 6]);
        let (k, nv) = split_known_novel(&[0, 1], 2).unwrap();
        assert_eq!((k, nv), (vec![0], vec![1]));
        assert!(matches!(split_known_novel(&[0], 1), Err(Error::InvalidSplit(_))));
        assert!(matches!(
            split_known_novel(&[0, 3], 3),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn dataset_partition() {
        let ds = tiny();
        assert_eq!(ds.num_views(), 2);
        assert_eq!(ds.num_samples(), 4);
        assert_eq!(ds.labeled_indices(), &[0, 1]);
        assert_eq!(ds.unlabeled_indices(), &[2, 3]);
        assert_eq!(ds.novel_truth(), vec![1, 1]);
        assert_eq!(ds.dims(), vec![3, 2]);
    }

    #[test]
    fn custom_split_rows() {
        let x = DMatrix::from_element(1, 4, 1.0);
        let ds = MultiViewDataset::new(vec![x], vec![0, 1, 2, 3], 4, vec![3, 1]).unwrap();
        assert_eq!(ds.known_classes(), &[1, 3]);
        assert_eq!(ds.novel_classes(), &[0, 2]);
        assert_eq!(ds.row_of_class(3), 1);
        assert_eq!(ds.row_of_class(0), 2);
        for r in 0..4 {
            assert_eq!(ds.row_of_class(ds.class_of_row(r)), r);
        }
    }

    #[test]
    fn construction_errors() {
        let a = DMatrix::zeros(2, 4);
        let b = DMatrix::zeros(2, 5);
        let err = MultiViewDataset::new(vec![a.clone(), b], vec![0, 0, 1, 1], 2, vec![0]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));

        let mut c = a.clone();
        c[(1, 2)] = f64::NAN;
        let err = MultiViewDataset::new(vec![c], vec![0, 0, 1, 1], 2, vec![0]);
        assert_eq!(
            err,
            Err(Error::NonFinite {
                view: 0,
                feature: 1,
                sample: 2
            })
        );

        let err = MultiViewDataset::new(vec![a.clone()], vec![0, 0, 1, 2], 2, vec![0]);
        assert!(matches!(err, Err(Error::LabelOutOfRange { label: 2, .. })));

        let err = MultiViewDataset::new(vec![a], vec![0, 0, 1, 1], 2, vec![0, 1]);
        assert!(matches!(err, Err(Error::InvalidSplit(_))));
    }

    #[test]
    fn zscore_row() {
        let x = DMatrix::from_row_slice(1, 3, &[1., 2., 3.]);
        let z = zscore_rows(&x);
        assert_abs_diff_eq!(z[(0, 0)], -1.224744871391589, epsilon = 1e-6);
        assert_abs_diff_eq!(z[(0, 1)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z[(0, 2)], 1.224744871391589, epsilon = 1e-6);
    }

    #[test]
    fn zscore_constant_row_is_zeroed() {
        let x = DMatrix::from_row_slice(2, 3, &[7., 7., 7., 0., 1., 2.]);
        let z = zscore_rows(&x);
        assert!(z.row(0).iter().all(|&v| v == 0.0));
        assert_eq!(z.nrows(), 2);
    }

    #[test]
    fn l2_column() {
        let x = DMatrix::from_column_slice(2, 2, &[3., 4., 0., 0.]);
        let y = l2_columns(&x);
        assert_abs_diff_eq!(y[(0, 0)], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(y[(1, 0)], 0.8, epsilon = 1e-15);
        assert_eq!(y.column(1).iter().copied().collect::<Vec<_>>(), vec![0., 0.]);
    }

    #[test]
    fn normalize_none_is_identity() {
        let ds = tiny();
        assert_eq!(normalize_features(&ds, NormalizeMode::None), ds);
    }

    #[test]
    fn onehot_examples() {
        let y = encode_onehot(&[1], 3).unwrap().to_matrix();
        assert_eq!(y.as_slice(), &[0., 1., 0.]);
        let y = encode_onehot(&[0, 2], 3).unwrap().to_matrix();
        assert_eq!(y.as_slice(), &[1., 0., 0., 0., 0., 1.]);
        assert!(encode_onehot(&[3], 3).is_err());
        let bad = DMatrix::from_column_slice(2, 1, &[1., 1.]);
        assert!(decode_onehot(&bad).is_err());
    }

    proptest! {
        #[test]
        fn onehot_round_trip(k in 1usize..8, raw in proptest::collection::vec(0usize..1000, 0..40)) {
            let labels: Vec<usize> = raw.iter().map(|l| l % k).collect();
            let y = encode_onehot(&labels, k).unwrap();
            prop_assert_eq!(decode_onehot(&y.to_matrix()).unwrap(), labels);
        }

        #[test]
        fn zscore_idempotent(vals in proptest::collection::vec(-50.0f64..50.0, 12)) {
            let x = DMatrix::from_row_slice(3, 4, &vals);
            let once = zscore_rows(&x);
            let twice = zscore_rows(&once);
            for (a, b) in once.iter().zip(twice.iter()) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn split_size_relation(k in 2usize..200) {
            let (known, novel) = split_known_novel(&[], k).unwrap();
            prop_assert_eq!(known.len() + novel.len(), k);
            prop_assert!(novel.len() - known.len() <= 1);
        }
    }
}
