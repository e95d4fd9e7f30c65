use crate::error::{Axis, Error, Result};

/// Table dimensions: `rows` is the size of the X domain, `cols` of the Y domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::domain(format!("contingency tables need at least 2x2 cells, got {rows}x{cols}")));
        }
        Ok(Self { rows, cols })
    }

    /// Number of cells, `m = m_x * m_y`.
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    /// One-based row-major index: `(x - 1) * m_y + y`.
    pub fn flatten(&self, x: usize, y: usize) -> Result<usize> {
        if x == 0 || x > self.rows || y == 0 || y > self.cols {
            return Err(Error::domain(format!("cell ({x}, {y}) outside [1, {}] x [1, {}]", self.rows, self.cols)));
        }
        Ok((x - 1) * self.cols + y)
    }

    /// Inverse of [`Shape::flatten`].
    pub fn unflatten(&self, k: usize) -> Result<(usize, usize)> {
        if k == 0 || k > self.cells() {
            return Err(Error::domain(format!("flat index {k} outside [1, {}]", self.cells())));
        }
        Ok(((k - 1) / self.cols + 1, (k - 1) % self.cols + 1))
    }
}

/// `(x - 1) * m_y + y` for one-based `x`, `y`.
pub fn flatten_index(x: usize, y: usize, m_y: usize) -> Result<usize> {
    if x == 0 || y == 0 || y > m_y {
        return Err(Error::domain(format!("cell ({x}, {y}) invalid for m_y = {m_y}")));
    }
    Ok((x - 1) * m_y + y)
}

pub fn unflatten_index(k: usize, m_y: usize) -> Result<(usize, usize)> {
    if k == 0 || m_y == 0 {
        return Err(Error::domain(format!("flat index {k} invalid for m_y = {m_y}")));
    }
    Ok(((k - 1) / m_y + 1, (k - 1) % m_y + 1))
}

/// Integer joint counts over `[m_x] x [m_y]`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    shape: Shape,
    counts: Vec<i64>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl ContingencyTable {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        let shape = Shape::new(rows, cols)?;
        Ok(Self {
            shape,
            counts: vec![0; shape.cells()],
            row_labels: (1..=rows).map(|i| format!("x{i}")).collect(),
            col_labels: (1..=cols).map(|j| format!("y{j}")).collect(),
        })
    }

    /// Builds a table from row-major counts.
    pub fn from_counts(rows: usize, cols: usize, counts: Vec<i64>) -> Result<Self> {
        let mut table = Self::zeros(rows, cols)?;
        if counts.len() != table.shape.cells() {
            return Err(Error::domain(format!("expected {} counts, got {}", table.shape.cells(), counts.len())));
        }
        table.counts = counts;
        Ok(table)
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let m_x = rows.len();
        let m_y = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m_y) {
            return Err(Error::domain("ragged rows"));
        }
        Self::from_counts(m_x, m_y, rows.concat())
    }

    pub fn with_labels(mut self, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        if row_labels.len() != self.shape.rows || col_labels.len() != self.shape.cols {
            return Err(Error::domain("label count does not match table shape"));
        }
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape.rows
    }

    pub fn cols(&self) -> usize {
        self.shape.cols
    }

    /// Row-major counts; position `flatten(x, y) - 1` holds cell `(x, y)`.
    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    /// Zero-based cell access.
    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.counts[row * self.shape.cols + col]
    }

    pub fn add_to(&mut self, row: usize, col: usize, delta: i64) {
        self.counts[row * self.shape.cols + col] += delta;
    }

    pub fn set(&mut self, row: usize, col: usize, value: i64) {
        self.counts[row * self.shape.cols + col] = value;
    }

    pub fn transpose(&self) -> Self {
        let Shape { rows, cols } = self.shape;
        let mut counts = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                counts.push(self.get(i, j));
            }
        }
        Self {
            shape: Shape { rows: cols, cols: rows },
            counts,
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
        }
    }

    /// Cell-wise sum of tables sharing a shape.
    pub fn merge<'a>(tables: impl IntoIterator<Item = &'a ContingencyTable>) -> Result<Self> {
        let mut iter = tables.into_iter();
        let first = iter.next().ok_or_else(|| Error::domain("cannot merge zero tables"))?;
        let mut out = first.clone();
        for t in iter {
            if t.shape != out.shape {
                return Err(Error::domain("cannot merge tables of different shapes"));
            }
            for (a, b) in out.counts.iter_mut().zip(&t.counts) {
                *a += b;
            }
        }
        Ok(out)
    }

    /// Checks the per-client bound `|v| <= M`.
    pub fn check_bound(&self, bound: i64) -> Result<()> {
        match self.counts.iter().position(|v| v.abs() > bound) {
            Some(k) => Err(Error::Precondition(format!(
                "cell {} has |{}| > M = {bound}",
                k + 1,
                self.counts[k]
            ))),
            None => Ok(()),
        }
    }

    pub fn marginals(&self) -> Marginals {
        let Shape { rows, cols } = self.shape;
        let mut row_sums = vec![0i64; rows];
        let mut col_sums = vec![0i64; cols];
        for i in 0..rows {
            for j in 0..cols {
                let v = self.get(i, j);
                row_sums[i] += v;
                col_sums[j] += v;
            }
        }
        let total = row_sums.iter().sum();
        Marginals { row_sums, col_sums, total }
    }
}

/// Row sums `v_x`, column sums `v_y` and the grand total `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marginals {
    pub row_sums: Vec<i64>,
    pub col_sums: Vec<i64>,
    pub total: i64,
}

impl Marginals {
    pub fn new(row_sums: Vec<i64>, col_sums: Vec<i64>) -> Result<Self> {
        let total: i64 = row_sums.iter().sum();
        if total != col_sums.iter().sum::<i64>() {
            return Err(Error::Precondition("row and column sums disagree on the total".into()));
        }
        Ok(Self { row_sums, col_sums, total })
    }

    pub fn shape(&self) -> Shape {
        Shape { rows: self.row_sums.len(), cols: self.col_sums.len() }
    }

    pub fn is_consistent(&self) -> bool {
        self.row_sums.iter().sum::<i64>() == self.total && self.col_sums.iter().sum::<i64>() == self.total
    }

    /// Fails on the first zero (or negative) marginal; every expected count
    /// must be strictly positive for the statistic to exist.
    pub fn require_positive(&self) -> Result<()> {
        if let Some(i) = self.row_sums.iter().position(|&v| v <= 0) {
            return Err(Error::ZeroMarginal { axis: Axis::Row, index: i + 1 });
        }
        if let Some(j) = self.col_sums.iter().position(|&v| v <= 0) {
            return Err(Error::ZeroMarginal { axis: Axis::Column, index: j + 1 });
        }
        Ok(())
    }

    /// Expected count `v_x * v_y / v` for zero-based `(row, col)`.
    pub fn expected(&self, row: usize, col: usize) -> f64 {
        self.row_sums[row] as f64 * self.col_sums[col] as f64 / self.total as f64
    }

    /// Expected counts for every cell, row-major.
    pub fn expected_counts(&self) -> Vec<f64> {
        let cols = self.col_sums.len();
        (0..self.row_sums.len() * cols).map(|k| self.expected(k / cols, k % cols)).collect()
    }
}

/// Centralized statistic `sum (v_xy - e_xy)^2 / e_xy` over the global table.
pub fn chi2_statistic(table: &ContingencyTable) -> Result<f64> {
    let marginals = table.marginals();
    marginals.require_positive()?;
    let counts: Vec<f64> = table.counts().iter().map(|&v| v as f64).collect();
    Ok(chi2_against(&counts, &marginals))
}

/// The statistic for real-valued counts whose marginals are `marginals`.
pub fn chi2_from_real_counts(counts: &[f64], marginals: &Marginals) -> Result<f64> {
    marginals.require_positive()?;
    if counts.len() != marginals.shape().cells() {
        return Err(Error::domain("count vector length does not match marginals"));
    }
    Ok(chi2_against(counts, marginals))
}

fn chi2_against(counts: &[f64], marginals: &Marginals) -> f64 {
    counts
        .iter()
        .zip(marginals.expected_counts())
        .map(|(&v, e)| (v - e) * (v - e) / e)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flatten_examples() {
        assert_eq!(flatten_index(1, 1, 4).unwrap(), 1);
        assert_eq!(flatten_index(2, 3, 4).unwrap(), 7);
        assert!(flatten_index(0, 1, 4).is_err());
        assert!(flatten_index(1, 5, 4).is_err());
        let shape = Shape::new(3, 4).unwrap();
        assert!(shape.flatten(4, 1).is_err());
        assert!(shape.unflatten(13).is_err());
    }

    #[test]
    fn flatten_is_bijective_on_5x7() {
        let shape = Shape::new(5, 7).unwrap();
        let mut seen = vec![false; shape.cells() + 1];
        for x in 1..=5 {
            for y in 1..=7 {
                let k = shape.flatten(x, y).unwrap();
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(shape.unflatten(k).unwrap(), (x, y));
                assert_eq!(unflatten_index(k, 7).unwrap(), (x, y));
            }
        }
        assert!(seen[1..].iter().all(|&s| s));
    }

    #[test]
    fn marginals_examples() {
        let t = ContingencyTable::from_rows(&[vec![10, 20], vec![20, 10]]).unwrap();
        let m = t.marginals();
        assert_eq!(m.row_sums, vec![30, 30]);
        assert_eq!(m.col_sums, vec![30, 30]);
        assert_eq!(m.total, 60);

        let z = ContingencyTable::zeros(3, 3).unwrap().marginals();
        assert_eq!((z.row_sums, z.col_sums, z.total), (vec![0; 3], vec![0; 3], 0));

        let mut one = ContingencyTable::zeros(3, 4).unwrap();
        one.set(1, 2, 5);
        let m = one.marginals();
        assert_eq!(m.row_sums, vec![0, 5, 0]);
        assert_eq!(m.col_sums, vec![0, 0, 5, 0]);
        assert_eq!(m.total, 5);
    }

    #[test]
    fn chi2_examples() {
        let t = ContingencyTable::from_rows(&[vec![10, 20], vec![20, 10]]).unwrap();
        // every expected count is 15: 4 * 25 / 15
        assert!((chi2_statistic(&t).unwrap() - 100.0 / 15.0).abs() < 1e-12);
        assert!((chi2_statistic(&t.transpose()).unwrap() - 100.0 / 15.0).abs() < 1e-12);

        // outer product of (1, 2, 3) and (2, 5)
        let indep = ContingencyTable::from_rows(&[vec![2, 5], vec![4, 10], vec![6, 15]]).unwrap();
        assert_eq!(chi2_statistic(&indep).unwrap(), 0.0);
    }

    #[test]
    fn zero_marginal_is_reported() {
        let t = ContingencyTable::from_rows(&[vec![1, 0, 2], vec![3, 0, 4]]).unwrap();
        match chi2_statistic(&t) {
            Err(Error::ZeroMarginal { axis: Axis::Column, index: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bound_check() {
        let t = ContingencyTable::from_rows(&[vec![1, -7], vec![3, 2]]).unwrap();
        assert!(t.check_bound(7).is_ok());
        assert!(t.check_bound(6).is_err());
    }

    proptest! {
        #[test]
        fn marginals_are_consistent(rows in 2usize..6, cols in 2usize..6, seed in any::<u64>()) {
            let counts: Vec<i64> = (0..rows * cols)
                .map(|k| (crate::seed::derive(seed, &[k as u64]) % 2001) as i64 - 1000)
                .collect();
            let t = ContingencyTable::from_counts(rows, cols, counts).unwrap();
            prop_assert!(t.marginals().is_consistent());
        }

        #[test]
        fn chi2_nonnegative_and_transpose_invariant(rows in 2usize..6, cols in 2usize..6, seed in any::<u64>()) {
            let counts: Vec<i64> = (0..rows * cols)
                .map(|k| (crate::seed::derive(seed, &[k as u64]) % 50) as i64 + 1)
                .collect();
            let t = ContingencyTable::from_counts(rows, cols, counts).unwrap();
            let s = chi2_statistic(&t).unwrap();
            prop_assert!(s >= 0.0);
            let st = chi2_statistic(&t.transpose()).unwrap();
            prop_assert!((s - st).abs() <= 1e-9 * s.max(1.0));
        }
    }
}
