//! Observation masks: the set Ω of observed entries of an `n₁ × n₂` matrix.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
    count: usize,
}

impl ObservationMask {
    pub fn full(rows: usize, cols: usize) -> Self {
        ObservationMask {
            rows,
            cols,
            observed: vec![true; rows * cols],
            count: rows * cols,
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        ObservationMask {
            rows,
            cols,
            observed: vec![false; rows * cols],
            count: 0,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut observed = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                observed.push(f(r, c));
            }
        }
        ObservationMask::from_flags(rows, cols, observed).expect("length matches by construction")
    }

    /// Row-major flags, `true` = observed.
    pub fn from_flags(rows: usize, cols: usize, observed: Vec<bool>) -> Result<Self> {
        if observed.len() != rows * cols {
            return Err(Error::dims(format!("{} flags", rows * cols), format!("{}", observed.len())));
        }
        let count = observed.iter().filter(|b| **b).count();
        Ok(ObservationMask {
            rows,
            cols,
            observed,
            count,
        })
    }

    /// Zero-based `(row, col)` pairs. Out-of-range or repeated indices are rejected.
    pub fn from_indices(rows: usize, cols: usize, indices: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut m = ObservationMask::empty(rows, cols);
        for (r, c) in indices {
            if r >= rows || c >= cols {
                return Err(Error::param("mask", format!("index ({r}, {c}) outside {rows}x{cols}")));
            }
            let n = r * cols + c;
            if m.observed[n] {
                return Err(Error::param("mask", format!("duplicate index ({r}, {c})")));
            }
            m.observed[n] = true;
            m.count += 1;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.observed[r * self.cols + c]
    }

    /// Observed flag by flat row-major index.
    #[inline]
    pub fn at(&self, n: usize) -> bool {
        self.observed[n]
    }

    pub fn flags(&self) -> &[bool] {
        &self.observed
    }

    /// |Ω|.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Sampling ratio ρ = |Ω| / (n₁n₂); zero for a 0×0 mask.
    pub fn ratio(&self) -> f64 {
        let n = self.rows * self.cols;
        if n == 0 {
            0.0
        } else {
            self.count as f64 / n as f64
        }
    }

    pub fn complement(&self) -> ObservationMask {
        ObservationMask {
            rows: self.rows,
            cols: self.cols,
            observed: self.observed.iter().map(|b| !b).collect(),
            count: self.rows * self.cols - self.count,
        }
    }

    /// Observed indices in row-major (sorted) order.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols.max(1);
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(n, _)| (n / cols, n % cols))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_ratio() {
        let m = ObservationMask::from_indices(2, 3, [(0, 0), (1, 2)]).unwrap();
        assert_eq!(m.count(), 2);
        assert!((m.ratio() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.complement().count(), 4);
        assert_eq!(m.indices().collect::<Vec<_>>(), vec![(0, 0), (1, 2)]);
        assert_eq!(ObservationMask::full(4, 4).ratio(), 1.0);
        assert_eq!(ObservationMask::empty(4, 4).ratio(), 0.0);
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(ObservationMask::from_indices(2, 2, [(2, 0)]).is_err());
        assert!(ObservationMask::from_indices(2, 2, [(1, 1), (1, 1)]).is_err());
        assert!(ObservationMask::from_flags(2, 2, vec![true]).is_err());
    }
}
