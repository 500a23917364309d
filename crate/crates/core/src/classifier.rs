use crate::error::Result;

/// A trained model that scores each class for a feature vector.
pub trait Classifier {
    fn n_features(&self) -> usize;

    fn n_classes(&self) -> usize;

    /// Per-class scores: network outputs, or vote counts for one-vs-one SVMs.
    fn scores(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Highest-scoring class, lowest index on ties.
    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.scores(x)?))
    }

    fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|x| self.predict(x)).collect()
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).scores(x)
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        (**self).predict(x)
    }
}

/// Index of the maximum, first one wins ties. NaN never wins.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] || values[best].is_nan() && !v.is_nan() {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::argmax;

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[3.0, 1.0, 1.0, 1.0]), 0);
        assert_eq!(argmax(&[2.0, 2.0, 1.0, 1.0]), 0);
        assert_eq!(argmax(&[0.0, 1.0]), 1);
        assert_eq!(argmax(&[1.0, 5.0, 5.0]), 1);
        assert_eq!(argmax(&[f64::NAN, 0.5]), 1);
    }
}
