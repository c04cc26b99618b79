use crate::error::{Error, Result};

/// `C x C` counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    /// From rows of counts (row = true class).
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let c = rows.len();
        if rows.iter().any(|r| r.len() != c) {
            return Err(Error::DimensionMismatch(
                "confusion matrix must be square".into(),
            ));
        }
        Ok(Self {
            classes: c,
            counts: rows.concat(),
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Count for true class `t` and predicted class `p`, both 1-based.
    pub fn get(&self, t: u32, p: u32) -> u64 {
        self.counts[(t as usize - 1) * self.classes + p as usize - 1]
    }

    pub fn add(&mut self, t: u32, p: u32) -> Result<()> {
        let c = self.classes as u32;
        if t == 0 || t > c || p == 0 || p > c {
            return Err(Error::InvalidLabel(format!(
                "pair ({t}, {p}) outside classes 1..={c}"
            )));
        }
        self.counts[(t as usize - 1) * self.classes + p as usize - 1] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {} classes",
                self.classes, other.classes
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes)
            .map(|i| self.counts[i * self.classes + i])
            .sum()
    }

    fn row_sum(&self, i: usize) -> u64 {
        self.counts[i * self.classes..(i + 1) * self.classes]
            .iter()
            .sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        (0..self.classes)
            .map(|i| self.counts[i * self.classes + j])
            .sum()
    }

    fn check_total(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::InvalidArgument("confusion matrix is empty".into())),
            t => Ok(t as f64),
        }
    }

    /// Overall accuracy.
    pub fn oa(&self) -> Result<f64> {
        let total = self.check_total()?;
        Ok(self.trace() as f64 / total)
    }

    /// Classes (1-based) without any true sample; [`aa`](Self::aa) skips them.
    pub fn empty_classes(&self) -> Vec<u32> {
        (0..self.classes)
            .filter(|&i| self.row_sum(i) == 0)
            .map(|i| i as u32 + 1)
            .collect()
    }

    /// Average of per-class recalls over the classes that have samples.
    pub fn aa(&self) -> Result<f64> {
        self.check_total()?;
        let recalls: Vec<f64> = (0..self.classes)
            .filter_map(|i| {
                let n = self.row_sum(i);
                (n > 0).then(|| self.counts[i * self.classes + i] as f64 / n as f64)
            })
            .collect();
        Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
    }

    /// Cohen's kappa. When chance agreement is already 1 the result is 1 for
    /// perfect agreement and 0 otherwise.
    pub fn kappa(&self) -> Result<f64> {
        let total = self.check_total()?;
        let po = self.trace() as f64 / total;
        let pe = (0..self.classes)
            .map(|i| self.row_sum(i) as f64 * self.col_sum(i) as f64)
            .sum::<f64>()
            / (total * total);
        if 1.0 - pe == 0.0 {
            return Ok(if po == 1.0 { 1.0 } else { 0.0 });
        }
        Ok((po - pe) / (1.0 - pe))
    }
}

/// Accumulates `truth` against `pred` over classes `1..=classes`.
pub fn confusion(truth: &[u32], pred: &[u32], classes: usize) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} true labels, {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let mut m = ConfusionMatrix::new(classes);
    for (&t, &p) in truth.iter().zip(pred) {
        m.add(t, p)?;
    }
    Ok(m)
}
