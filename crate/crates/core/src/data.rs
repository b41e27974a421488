use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Same-shape samples with integer class labels and optional subject ids.
///
/// Labels are arbitrary integers; the set of classes is the sorted list of
/// distinct labels present, so every class has at least one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTensorSet {
    samples: Vec<DenseTensor>,
    labels: Vec<usize>,
    subjects: Option<Vec<usize>>,
    classes: Vec<usize>,
    class_of: Vec<usize>,
    class_names: Option<Vec<String>>,
}

impl LabeledTensorSet {
    pub fn new(samples: Vec<DenseTensor>, labels: Vec<usize>) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("labeled set"))?;
        if labels.len() != samples.len() {
            return Err(Error::Data(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if let Some((i, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| s.shape() != first.shape())
        {
            return Err(Error::Data(format!(
                "sample {i} has shape {:?}, expected {:?}",
                s.shape(),
                first.shape()
            )));
        }
        let mut classes = labels.clone();
        classes.sort_unstable();
        classes.dedup();
        let class_of = labels
            .iter()
            .map(|l| classes.binary_search(l).expect("label present"))
            .collect();
        Ok(Self {
            samples,
            labels,
            subjects: None,
            classes,
            class_of,
            class_names: None,
        })
    }

    pub fn with_subjects(mut self, subjects: Vec<usize>) -> Result<Self> {
        if subjects.len() != self.samples.len() {
            return Err(Error::Data(format!(
                "{} samples but {} subject ids",
                self.samples.len(),
                subjects.len()
            )));
        }
        self.subjects = Some(subjects);
        Ok(self)
    }

    /// Human-readable names indexed by label value.
    pub fn with_class_names(mut self, names: Vec<String>) -> Self {
        self.class_names = Some(names);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_shape(&self) -> &[usize] {
        self.samples[0].shape()
    }

    pub fn samples(&self) -> &[DenseTensor] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn subjects(&self) -> Option<&[usize]> {
        self.subjects.as_deref()
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Position of sample `i`'s label within [`classes`](Self::classes).
    pub fn class_index(&self, i: usize) -> usize {
        self.class_of[i]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &c in &self.class_of {
            counts[c] += 1;
        }
        counts
    }

    /// Sample indices grouped by class position.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.classes.len()];
        for (i, &c) in self.class_of.iter().enumerate() {
            groups[c].push(i);
        }
        groups
    }

    /// New set holding the listed samples in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let samples = indices.iter().map(|&i| self.samples[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut out = Self::new(samples, labels)?;
        if let Some(subjects) = &self.subjects {
            out.subjects = Some(indices.iter().map(|&i| subjects[i]).collect());
        }
        out.class_names = self.class_names.clone();
        Ok(out)
    }

    /// Replaces every sample through `f`, keeping labels and subjects.
    pub fn map_samples(
        &self,
        mut f: impl FnMut(&DenseTensor) -> Result<DenseTensor>,
    ) -> Result<Self> {
        let samples = self.samples.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        let mut out = Self::new(samples, self.labels.clone())?;
        out.subjects = self.subjects.clone();
        out.class_names = self.class_names.clone();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: f64) -> DenseTensor {
        DenseTensor::new(vec![2], vec![v, -v]).unwrap()
    }

    #[test]
    fn classes_are_sorted_distinct_labels() {
        let set = LabeledTensorSet::new(vec![t(1.0), t(2.0), t(3.0)], vec![7, 2, 7]).unwrap();
        assert_eq!(set.classes(), &[2, 7]);
        assert_eq!(set.class_counts(), vec![1, 2]);
        assert_eq!(set.class_index(0), 1);
        assert_eq!(set.indices_by_class(), vec![vec![1], vec![0, 2]]);
    }

    #[test]
    fn rejects_inconsistent_input() {
        assert!(LabeledTensorSet::new(vec![], vec![]).is_err());
        assert!(LabeledTensorSet::new(vec![t(1.0)], vec![0, 1]).is_err());
        let odd = DenseTensor::new(vec![3], vec![0.0; 3]).unwrap();
        assert!(LabeledTensorSet::new(vec![t(1.0), odd], vec![0, 1]).is_err());
        let set = LabeledTensorSet::new(vec![t(1.0)], vec![0]).unwrap();
        assert!(set.with_subjects(vec![1, 2]).is_err());
    }

    #[test]
    fn subset_keeps_subjects() {
        let set = LabeledTensorSet::new(vec![t(1.0), t(2.0), t(3.0)], vec![0, 1, 0])
            .unwrap()
            .with_subjects(vec![5, 6, 7])
            .unwrap();
        let sub = set.subset(&[2, 1]).unwrap();
        assert_eq!(sub.labels(), &[0, 1]);
        assert_eq!(sub.subjects(), Some(&[7, 6][..]));
    }
}
