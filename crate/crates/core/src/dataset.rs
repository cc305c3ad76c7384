use crate::{Error, Result};

/// One observation: a fixed-length vector of finite reals plus an optional
/// class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    label: Option<u32>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_label(values, None)
    }

    pub fn with_label(values: Vec<f64>, label: Option<u32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a sample needs at least one value"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "sample value at index {i} is not finite"
            )));
        }
        Ok(Sample { values, label })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<u32> {
        self.label
    }
}

/// An ordered collection of samples sharing one dimension.
///
/// Label presence is uniform: either every sample is labeled or none is.
/// A dataset may be empty (its dimension is declared up front).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn empty(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dataset dimension must be positive"));
        }
        Ok(Dataset {
            dim,
            samples: Vec::new(),
        })
    }

    pub fn from_samples(dim: usize, samples: Vec<Sample>) -> Result<Self> {
        let mut ds = Dataset::empty(dim)?;
        ds.samples.reserve(samples.len());
        for s in samples {
            ds.push(s)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, sample: Sample) -> Result<()> {
        if sample.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: sample.dim(),
            });
        }
        if let Some(first) = self.samples.first() {
            if first.label().is_some() != sample.label().is_some() {
                return Err(Error::invalid(
                    "label presence must be uniform across the dataset",
                ));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    pub fn is_labeled(&self) -> bool {
        self.samples.first().is_some_and(|s| s.label().is_some())
    }

    /// Distinct labels in ascending order; empty when unlabeled.
    pub fn distinct_labels(&self) -> Vec<u32> {
        let mut labels: Vec<u32> = self.samples.iter().filter_map(Sample::label).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    /// (min, max) of one coordinate over the dataset.
    pub fn column_range(&self, d: usize) -> Result<(f64, f64)> {
        if d >= self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: d,
            });
        }
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.samples {
            let v = s.values()[d];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }

    /// (min, max) over every coordinate of every sample.
    pub fn value_range(&self) -> Result<(f64, f64)> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.samples {
            for &v in s.values() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok((lo, hi))
    }
}
