use serde::Serialize;

use crate::error::{param, Result};
use crate::report::{sig17, sig17_vec};

/// Least-squares line log d = intercept + slope · log n.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    #[serde(serialize_with = "sig17")]
    pub slope: f64,
    #[serde(serialize_with = "sig17")]
    pub intercept: f64,
    #[serde(serialize_with = "sig17_vec")]
    pub residuals: Vec<f64>,
}

pub fn rate_fit(ns: &[f64], distances: &[f64]) -> Result<RateFit> {
    if ns.len() != distances.len() || ns.len() < 2 {
        return param("rate fit needs at least two (n, distance) pairs of equal length");
    }
    if ns.iter().chain(distances).any(|&v| !(v > 0.0 && v.is_finite())) {
        return param("rate fit needs positive finite n and distances");
    }
    let x: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = distances.iter().map(|v| v.ln()).collect();
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return param("rate fit needs at least two distinct n");
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x.iter().zip(&y).map(|(a, b)| b - intercept - slope * a).collect();
    Ok(RateFit { slope, intercept, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let ns = [50.0, 100.0, 200.0, 400.0];
        let f = rate_fit(&ns, &ns.map(|n: f64| n.powf(-0.5))).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.intercept.abs() < 1e-11);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-12));
        let c = rate_fit(&ns, &[0.1; 4]).unwrap();
        assert!(c.slope.abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(rate_fit(&[10.0], &[0.1]).is_err());
        assert!(rate_fit(&[10.0, 10.0], &[0.1, 0.2]).is_err());
        assert!(rate_fit(&[10.0, 20.0], &[0.0, 0.2]).is_err());
        assert!(rate_fit(&[10.0, 20.0], &[0.1]).is_err());
    }
}
