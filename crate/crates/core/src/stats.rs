use crate::Point;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Coordinatewise sample mean and standard error of the mean.
///
/// Sums are compensated so that merging partial accumulators computed on
/// different threads agrees with a sequential pass to within rounding.
#[derive(Debug, Clone)]
pub struct MeanAccumulator {
    count: u64,
    sums: Vec<CompensatedSum>,
    squares: Vec<CompensatedSum>,
}

impl MeanAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            sums: vec![CompensatedSum::default(); dim],
            squares: vec![CompensatedSum::default(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.sums.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, v: &Point) {
        debug_assert_eq!(v.len(), self.sums.len());
        self.count += 1;
        for (i, &x) in v.iter().enumerate() {
            self.sums[i].add(x);
            self.squares[i].add(x * x);
        }
    }

    pub fn push_scalar(&mut self, x: f64) {
        debug_assert_eq!(self.sums.len(), 1);
        self.count += 1;
        self.sums[0].add(x);
        self.squares[0].add(x * x);
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        assert_eq!(self.dim(), other.dim());
        self.count += other.count;
        for i in 0..self.sums.len() {
            self.sums[i].merge(&other.sums[i]);
            self.squares[i].merge(&other.squares[i]);
        }
    }

    pub fn mean(&self) -> Point {
        let n = self.count as f64;
        Point::from_iterator(self.dim(), self.sums.iter().map(|s| s.value() / n))
    }

    /// Standard error of the mean per coordinate (unbiased variance estimate).
    /// Zero when fewer than two samples were pushed.
    pub fn std_error(&self) -> Point {
        let n = self.count as f64;
        Point::from_iterator(
            self.dim(),
            self.sums.iter().zip(&self.squares).map(|(s, q)| {
                if self.count < 2 {
                    return 0.0;
                }
                let mean = s.value() / n;
                let var = ((q.value() - n * mean * mean) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            }),
        )
    }
}
