//! Neumaier-compensated summation in a fixed order.

/// Running compensated sum. Adding the same terms in the same order always
/// yields the same bits, independent of how the terms were produced.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of a slice, left to right.
pub fn neumaier_sum(terms: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for &t in terms {
        acc.add(t);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let terms = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(&terms), 2.0);
        assert_ne!(terms.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn many_tenths() {
        let terms = vec![0.1; 1_000_000];
        assert!((neumaier_sum(&terms) - 100_000.0).abs() < 1e-9);
    }
}
