use serde::{Deserialize, Serialize};

use super::special::chi_square_sf;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub chi2: f64,
    pub dof: u32,
    pub p_value: f64,
}

/// Pearson chi-square test of independence on an R×C table of counts.
pub fn chi_square_independence(table: &[Vec<f64>]) -> Result<ChiSquareResult, StatsError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 {
        return Err(StatsError::DegenerateTable(format!("need at least 2x2, got {rows}x{cols}")));
    }
    if table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::DegenerateTable("ragged table".into()));
    }
    if table.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(StatsError::DegenerateTable("counts must be finite and non-negative".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    if let Some(i) = row_sums.iter().position(|s| *s == 0.0) {
        return Err(StatsError::DegenerateTable(format!("row {i} sums to zero")));
    }
    if let Some(j) = col_sums.iter().position(|s| *s == 0.0) {
        return Err(StatsError::DegenerateTable(format!("column {j} sums to zero")));
    }
    let total: f64 = row_sums.iter().sum();
    let mut chi2 = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, observed) in row.iter().enumerate() {
            let expected = row_sums[r] * col_sums[c] / total;
            let diff = observed - expected;
            chi2 += diff * diff / expected;
        }
    }
    let dof = ((rows - 1) * (cols - 1)) as u32;
    Ok(ChiSquareResult { chi2, dof, p_value: chi_square_sf(chi2, dof as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_table_is_independent() {
        let r = chi_square_independence(&[vec![10.0, 10.0], vec![10.0, 10.0]]).unwrap();
        assert_eq!(r.chi2, 0.0);
        assert_eq!(r.dof, 1);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_closed_form() {
        // N (ad - bc)^2 / ((a+b)(c+d)(a+c)(b+d)) = 80 * 800^2 / 40^4 = 20
        let r = chi_square_independence(&[vec![30.0, 10.0], vec![10.0, 30.0]]).unwrap();
        assert!((r.chi2 - 20.0).abs() < 1e-9);
        assert_eq!(r.dof, 1);
        // Q(1/2, 10) = erfc(sqrt(10))
        assert!((r.p_value - 7.744_216_431_044_1e-6).abs() < 1e-15);
    }

    #[test]
    fn degenerate_tables() {
        assert!(matches!(
            chi_square_independence(&[vec![0.0, 0.0], vec![1.0, 2.0]]),
            Err(StatsError::DegenerateTable(_))
        ));
        assert!(matches!(
            chi_square_independence(&[vec![3.0, 0.0], vec![1.0, 0.0]]),
            Err(StatsError::DegenerateTable(_))
        ));
        assert!(chi_square_independence(&[vec![1.0, 2.0]]).is_err());
        assert!(chi_square_independence(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(chi_square_independence(&[vec![1.0, -2.0], vec![1.0, 3.0]]).is_err());
    }

    #[test]
    fn proportional_rows_give_zero() {
        let r = chi_square_independence(&[vec![2.0, 6.0], vec![5.0, 15.0], vec![1.0, 3.0]]).unwrap();
        assert!(r.chi2.abs() < 1e-12);
        assert_eq!(r.dof, 2);
    }
}
