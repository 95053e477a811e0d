use super::gamma::regularized_gamma_q;
use crate::error::{Error, Result};

/// Smallest p-value ever reported.
pub const P_FLOOR: f64 = 1e-300;

/// Row-major `rows × cols` table of counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
}

impl ContingencyTable {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            counts: vec![0; rows * cols],
        }
    }

    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        assert!(rows.iter().all(|r| r.as_ref().len() == cols), "ragged table");
        Self {
            rows: rows.len(),
            cols,
            counts: rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect(),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, n: u64) {
        self.counts[row * self.cols + col] += n;
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub stat: f64,
    pub df: usize,
}

/// Pearson statistic of the table with all-zero rows and columns removed.
pub fn chisq_statistic(t: &ContingencyTable) -> Result<ChiSquare> {
    let row_sums: Vec<u64> = (0..t.rows).map(|i| (0..t.cols).map(|j| t.get(i, j)).sum()).collect();
    let col_sums: Vec<u64> = (0..t.cols).map(|j| (0..t.rows).map(|i| t.get(i, j)).sum()).collect();
    let live_rows: Vec<usize> = (0..t.rows).filter(|&i| row_sums[i] > 0).collect();
    let live_cols: Vec<usize> = (0..t.cols).filter(|&j| col_sums[j] > 0).collect();
    if live_rows.len() < 2 || live_cols.len() < 2 {
        return Err(Error::DegenerateTable);
    }
    let total = row_sums.iter().sum::<u64>() as f64;
    let mut stat = 0.0;
    for &i in &live_rows {
        for &j in &live_cols {
            let expected = row_sums[i] as f64 * col_sums[j] as f64 / total;
            let diff = t.get(i, j) as f64 - expected;
            stat += diff * diff / expected;
        }
    }
    Ok(ChiSquare {
        stat,
        df: (live_rows.len() - 1) * (live_cols.len() - 1),
    })
}

/// Upper-tail probability of a chi-squared variate with `df` degrees of freedom.
pub fn chisq_pvalue(stat: f64, df: usize) -> f64 {
    assert!(df > 0, "degrees of freedom must be positive");
    if stat <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(df as f64 / 2.0, stat / 2.0).max(P_FLOOR)
}

/// p-value of the independence test; degenerate tables carry no
/// information and get p = 1.
pub fn chisq_test(t: &ContingencyTable) -> f64 {
    match chisq_statistic(t) {
        Ok(c) => chisq_pvalue(c.stat, c.df),
        Err(_) => 1.0,
    }
}
