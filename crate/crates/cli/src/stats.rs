use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Least-squares line `y = a + b x` with a two-sided confidence interval on
/// the slope `b`.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
}

impl SlopeFit {
    pub fn excludes_zero_above(&self) -> bool {
        self.ci_low > 0.0
    }

    pub fn contains_zero(&self) -> bool {
        self.ci_low <= 0.0 && 0.0 <= self.ci_high
    }
}

/// `None` with fewer than three points or no spread in `x`.
pub fn slope_fit(x: &[f64], y: &[f64], level: f64) -> Option<SlopeFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0).ok()?.inverse_cdf(0.5 + level / 2.0);
    Some(SlopeFit {
        n,
        slope,
        intercept,
        stderr,
        ci_low: slope - t * stderr,
        ci_high: slope + t * stderr,
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_zero_width() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = slope_fit(&x, &y, 0.95).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(f.stderr < 1e-12 && f.excludes_zero_above());
    }

    #[test]
    fn reference_interval() {
        // Residuals +-1 around y = x: se = sqrt(6 / 4 / 10), t_{0.975, 4} = 2.776445.
        let x = [-2.0, -1.0, 0.0, 1.0, 2.0, 0.0];
        let y = [-1.0, -2.0, 1.0, 0.0, 3.0, -1.0];
        let f = slope_fit(&x, &y, 0.95).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        let se = (6.0f64 / 4.0 / 10.0).sqrt();
        assert!((f.stderr - se).abs() < 1e-12);
        assert!((f.ci_high - (1.0 + 2.776445105 * se)).abs() < 1e-6);
        assert!(slope_fit(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0], 0.95).is_none());
    }
}
