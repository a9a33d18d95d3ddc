use crate::error::{invalid, Result};
use crate::grid::Grid;

/// `γ̂(h)` for `h = 1..=max_lag`: half the mean squared increment along both axes.
pub fn empirical_variogram(x: &Grid, max_lag: usize) -> Result<Vec<f64>> {
    let n = x.side();
    if max_lag == 0 || 2 * max_lag > n {
        return Err(invalid(format!("max_lag must be in 1..={} for side {n}", n / 2)));
    }
    Ok((1..=max_lag)
        .map(|h| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n - h {
                    let a = x.get(i, j + h) - x.get(i, j);
                    let b = x.get(j + h, i) - x.get(j, i);
                    s += a * a + b * b;
                }
            }
            s / (4 * n * (n - h)) as f64
        })
        .collect())
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_has_zero_variogram() {
        let x = Grid::from_fn(8, |_, _| 1.5);
        assert!(empirical_variogram(&x, 4).unwrap().iter().all(|&g| g == 0.0));
        assert!(empirical_variogram(&x, 5).is_err());
    }

    #[test]
    fn linear_ramp() {
        let x = Grid::from_fn(8, |i, _| i as f64);
        let g = empirical_variogram(&x, 3).unwrap();
        // Only the first axis increments: h² / 2 averaged with zero.
        for (h, v) in g.iter().enumerate() {
            let h = (h + 1) as f64;
            assert!((v - h * h / 4.0).abs() < 1e-12);
        }
    }
}
