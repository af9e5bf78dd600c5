use std::io::Write;

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Empirical P(X ≥ x) at each distinct sample value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfCurve {
    /// `(x, p)` with x strictly increasing and p non-increasing from 1.
    pub points: Vec<(f64, f64)>,
}

pub fn ccdf(samples: &[f64]) -> Result<CcdfCurve, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if let Some(bad) = samples.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(StatsError::Domain(format!("sample {bad} is not a finite non-negative value")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut points = Vec::new();
    let mut i = 0;
    while i < n {
        let x = sorted[i];
        points.push((x, (n - i) as f64 / n as f64));
        while i < n && sorted[i] == x {
            i += 1;
        }
    }
    Ok(CcdfCurve { points })
}

/// Least-squares slope of ln p against ln x over points with `x ≥ x_from`
/// and `p ≥ p_floor`. Diagnostic only; tail exponents come from
/// [`super::fit_power_law_tail`].
pub fn loglog_slope(curve: &CcdfCurve, x_from: f64, p_floor: f64) -> Result<f64, StatsError> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|(x, p)| *x > 0.0 && *x >= x_from && *p >= p_floor && *p > 0.0)
        .map(|(x, p)| (x.ln(), p.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(StatsError::DegenerateInput(format!("{} points in slope range", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StatsError::DegenerateInput("single x value in slope range".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Two columns `x p` with a header row.
pub fn write_ccdf<W: Write>(out: W, curve: &CcdfCurve) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    w.write_record(["x", "p"])?;
    for (x, p) in &curve.points {
        w.write_record([x.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn direct_count() {
        let c = ccdf(&[1.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(c.points, vec![(1.0, 1.0), (2.0, 0.5), (4.0, 0.25)]);
    }

    #[test]
    fn constant_samples() {
        assert_eq!(ccdf(&[3.0; 5]).unwrap().points, vec![(3.0, 1.0)]);
    }

    #[test]
    fn empty_and_negative_inputs() {
        assert_eq!(ccdf(&[]), Err(StatsError::EmptyInput));
        assert!(matches!(ccdf(&[1.0, -1.0]), Err(StatsError::Domain(_))));
    }

    #[test]
    fn exact_power_law_has_exact_slope() {
        let curve = CcdfCurve {
            points: (1..=20).map(|k| (k as f64, (k as f64).powf(-1.5))).collect(),
        };
        assert!((loglog_slope(&curve, 1.0, 0.0).unwrap() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn writes_two_columns() {
        let mut buf = Vec::new();
        write_ccdf(&mut buf, &ccdf(&[1.0, 1.0, 2.0, 4.0]).unwrap()).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x\tp\n1\t1\n2\t0.5\n4\t0.25\n");
    }

    proptest! {
        #[test]
        fn starts_at_one_and_never_increases(samples in proptest::collection::vec(0u32..50, 1..200)) {
            let s: Vec<f64> = samples.iter().map(|&v| v as f64).collect();
            let c = ccdf(&s).unwrap();
            prop_assert_eq!(c.points[0].1, 1.0);
            for w in c.points.windows(2) {
                prop_assert!(w[0].0 < w[1].0);
                prop_assert!(w[0].1 >= w[1].1);
            }
        }
    }
}
