//! Log-log slope fitting for power-law scaling curves.

use crate::HarnessError;

/// Ordinary least squares on (log₁₀ x, log₁₀ y) over all points.
pub fn ols_loglog(points: &[(f64, f64)]) -> Result<f64, HarnessError> {
    if points.len() < 2 {
        return Err(HarnessError::Slope(format!(
            "need ≥ 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(HarnessError::Slope(
            "log-log fit needs strictly positive coordinates".into(),
        ));
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.log10(), y.log10());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(HarnessError::Slope("degenerate abscissa".into()));
    }
    Ok((n * sxy - sx * sy) / denom)
}

/// Least-squares slope restricted to the asymptotic tail of the budget
/// grid: points with budget at or above the geometric midpoint of the grid
/// range. Requires at least 3 tail points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<f64, HarnessError> {
    if points.iter().any(|&(b, e)| b <= 0.0 || e <= 0.0) {
        return Err(HarnessError::Slope(
            "log-log fit needs strictly positive coordinates".into(),
        ));
    }
    let min = points.iter().map(|&(b, _)| b).fold(f64::INFINITY, f64::min);
    let max = points.iter().map(|&(b, _)| b).fold(0.0f64, f64::max);
    let cut = (min * max).sqrt();
    let tail: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(b, _)| b >= cut * (1.0 - 1e-12))
        .collect();
    if tail.len() < 3 {
        return Err(HarnessError::Slope(format!(
            "only {} tail points at budgets ≥ {cut:.1}",
            tail.len()
        )));
    }
    ols_loglog(&tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(exponent: f64) -> Vec<(f64, f64)> {
        (0..12)
            .map(|i| {
                let b = 10.0 * 2f64.powi(i);
                (b, 3.7 * b.powf(exponent))
            })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        assert!((fit_loglog_slope(&curve(-1.0)).unwrap() + 1.0).abs() < 1e-12);
        assert!((fit_loglog_slope(&curve(-0.5)).unwrap() + 0.5).abs() < 1e-12);
        assert!((ols_loglog(&curve(-1.0)).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_ignores_early_plateau() {
        // flat until the midpoint, then b^{-1}: the tail fit sees only
        // the decaying branch
        let points: Vec<(f64, f64)> = (0..13)
            .map(|i| {
                let b = 2f64.powi(i);
                let e = if b < 64.0 { 1.0 } else { 64.0 / b };
                (b, e)
            })
            .collect();
        let slope = fit_loglog_slope(&points).unwrap();
        assert!((slope + 1.0).abs() < 1e-9, "slope {slope}");
    }

    #[test]
    fn error_cases() {
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 0.0), (2.0, 0.5), (4.0, 0.2), (8.0, 0.1)]).is_err());
        assert!(ols_loglog(&[(5.0, 1.0)]).is_err());
    }
}
