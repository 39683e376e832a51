//! Local polynomial fitting: kernel-weighted least squares of degree p at a
//! grid point, the kernel density estimate, and the grid-sweep driver.
//!
//! The normal equations are formed in the scaled variable u = (X_i - x0)/h,
//! which is the h^j column scaling that keeps the design well-conditioned
//! for small bandwidths; coefficients are rescaled back on exit.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FitConfig};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::{sym_solve, SolveError};

/// Fitted local polynomial at one grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalFit {
    pub x0: f64,
    /// beta_0..beta_p; beta_0 estimates m(x0), j! beta_j the jth derivative.
    pub beta: Vec<f64>,
    /// Kernel density estimate at x0.
    pub fhat: f64,
    /// Number of observations with positive kernel weight.
    pub n_eff: usize,
    /// Coefficients in the scaled variable (X-x0)/h; beta_j = gamma_j / h^j.
    pub(crate) gamma: Vec<f64>,
    pub(crate) bandwidth: f64,
}

impl LocalFit {
    pub fn degree(&self) -> usize {
        self.beta.len() - 1
    }

    /// Value of the fitted local polynomial at x.
    pub fn predict(&self, x: f64) -> f64 {
        let u = (x - self.x0) / self.bandwidth;
        self.gamma.iter().rev().fold(0.0, |acc, g| acc * u + g)
    }
}

/// Kernel density estimate n^{-1} sum_i K_h(X_i - x0).
pub fn kde(data: &Dataset, x0: f64, h: f64, kernel: Kernel) -> f64 {
    let n = data.len() as f64;
    data.x()
        .iter()
        .map(|&xi| kernel.eval((xi - x0) / h) / h)
        .sum::<f64>()
        / n
}

/// Kernel weights K_h(X_i - x0) for every observation.
pub(crate) fn weights(data: &Dataset, x0: f64, h: f64, kernel: Kernel) -> Vec<f64> {
    data.x()
        .iter()
        .map(|&xi| kernel.eval((xi - x0) / h) / h)
        .collect()
}

/// Solve the degree-p kernel-weighted least squares problem at x0.
pub fn local_fit(data: &Dataset, x0: f64, config: &FitConfig) -> Result<LocalFit> {
    let h = config.bandwidth;
    let p = config.degree;
    let w = weights(data, x0, h, config.kernel);
    let n = data.len() as f64;
    let fhat = w.iter().sum::<f64>() / n;
    if fhat <= 0.0 {
        return Err(Error::EmptyWindow { x0 });
    }

    // distinct covariate values among positive-weight points
    let mut active: Vec<f64> = data
        .x()
        .iter()
        .zip(&w)
        .filter(|(_, &wi)| wi > 0.0)
        .map(|(&xi, _)| xi)
        .collect();
    let n_eff = active.len();
    active.sort_by(f64::total_cmp);
    active.dedup();
    if active.len() < p + 1 {
        return Err(Error::SingularDesign {
            x0,
            reason: format!(
                "{} distinct covariate values in window, degree {p} needs {}",
                active.len(),
                p + 1
            ),
        });
    }

    let k = p + 1;
    // moments of u = (X_i - x0)/h up to order 2p, and weighted responses
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    let mut pow = vec![0.0; 2 * p + 1];
    for (i, &wi) in w.iter().enumerate() {
        if wi <= 0.0 {
            continue;
        }
        let u = (data.x()[i] - x0) / h;
        let mut uj = 1.0;
        for entry in pow.iter_mut() {
            *entry = uj;
            uj *= u;
        }
        let yi = data.y()[i];
        for r in 0..k {
            b[r] += wi * yi * pow[r];
            for c in r..k {
                a[r * k + c] += wi * pow[r + c];
            }
        }
    }
    for r in 0..k {
        for c in 0..r {
            a[r * k + c] = a[c * k + r];
        }
    }

    let solve = sym_solve(&a, k).map_err(|e| Error::SingularDesign {
        x0,
        reason: match e {
            SolveError::Singular => "singular normal equations".to_string(),
            SolveError::IllConditioned(c) => format!("condition number {c:.3e}"),
        },
    })?;
    let gamma = solve.apply(&b);
    let beta: Vec<f64> = gamma
        .iter()
        .enumerate()
        .map(|(j, g)| g / h.powi(j as i32))
        .collect();

    Ok(LocalFit {
        x0,
        beta,
        fhat,
        n_eff,
        gamma,
        bandwidth: h,
    })
}

/// Local fits over the whole grid. Per-point failures are kept in place so
/// callers can report them with their grid index.
#[derive(Debug)]
pub struct Curve {
    pub fits: Vec<Result<LocalFit>>,
    pub config: FitConfig,
}

impl Curve {
    pub fn feasible(&self) -> impl Iterator<Item = (usize, &LocalFit)> {
        self.fits
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.as_ref().ok().map(|f| (i, f)))
    }

    pub fn failures(&self) -> impl Iterator<Item = (usize, &Error)> {
        self.fits
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.as_ref().err().map(|e| (i, e)))
    }
}

/// Fit at every grid point of `config.grid`, in grid order.
pub fn curve(data: &Dataset, config: &FitConfig) -> Curve {
    let fits = config
        .grid
        .points()
        .map(|x0| local_fit(data, x0, config))
        .collect();
    Curve {
        fits,
        config: *config,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GridSpec;

    fn cfg(p: usize, h: f64, kernel: Kernel) -> FitConfig {
        FitConfig::new(p, h, kernel, GridSpec::new(0.0, 2.0, 5).unwrap()).unwrap()
    }

    #[test]
    fn kde_spot_values() {
        let d = Dataset::new(vec![-0.5, 0.5], vec![0.0, 0.0]).unwrap();
        assert!((kde(&d, 0.0, 1.0, Kernel::Uniform) - 0.5).abs() < 1e-15);
        // point outside every window
        assert_eq!(kde(&d, 5.0, 1.0, Kernel::Uniform), 0.0);
    }

    #[test]
    fn recovers_exact_line() {
        let d = Dataset::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]).unwrap();
        let fit = local_fit(&d, 1.0, &cfg(1, 5.0, Kernel::Epanechnikov)).unwrap();
        assert!((fit.beta[0] - 1.0).abs() < 1e-10);
        assert!((fit.beta[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_response() {
        let c = 7.25;
        let d = Dataset::new(vec![0.0, 1.0, 2.0], vec![c, c, c]).unwrap();
        let fit = local_fit(&d, 1.0, &cfg(1, 5.0, Kernel::Epanechnikov)).unwrap();
        assert!((fit.beta[0] - c).abs() < 1e-12);
        assert!(fit.beta[1].abs() < 1e-12);
    }

    #[test]
    fn uniform_wide_window_equals_ols() {
        // all weights equal -> ordinary least squares re-centered at x0
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![1.0, 0.5, 2.5, 2.0, 4.0];
        let d = Dataset::new(x.clone(), y.clone()).unwrap();
        let x0 = 1.5;
        let fit = local_fit(&d, x0, &cfg(1, 100.0, Kernel::Uniform)).unwrap();
        // closed-form OLS on centered covariate
        let n = x.len() as f64;
        let xc: Vec<f64> = x.iter().map(|v| v - x0).collect();
        let sx = xc.iter().sum::<f64>() / n;
        let sy = y.iter().sum::<f64>() / n;
        let sxx: f64 = xc.iter().map(|v| (v - sx) * (v - sx)).sum();
        let sxy: f64 = xc.iter().zip(&y).map(|(v, w)| (v - sx) * (w - sy)).sum();
        let slope = sxy / sxx;
        let intercept = sy - slope * sx;
        assert!((fit.beta[1] - slope).abs() < 1e-10);
        assert!((fit.beta[0] - intercept).abs() < 1e-10);
    }

    #[test]
    fn nadaraya_watson_special_case() {
        let d = Dataset::new(vec![0.1, 0.4, 0.5, 0.9], vec![2.0, -1.0, 0.5, 3.0]).unwrap();
        let x0 = 0.45;
        let h = 0.6;
        let fit = local_fit(&d, x0, &cfg(0, h, Kernel::Epanechnikov)).unwrap();
        let w = weights(&d, x0, h, Kernel::Epanechnikov);
        let nw: f64 = w.iter().zip(d.y()).map(|(wi, yi)| wi * yi).sum::<f64>() / w.iter().sum::<f64>();
        assert!((fit.beta[0] - nw).abs() < 1e-12);
    }

    #[test]
    fn residual_orthogonality() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() * 0.5 + 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| (3.0 * v).cos() + 0.3 * v).collect();
        let d = Dataset::new(x, y).unwrap();
        let config = cfg(2, 0.4, Kernel::Epanechnikov);
        let fit = local_fit(&d, 0.5, &config).unwrap();
        let w = weights(&d, 0.5, config.bandwidth, config.kernel);
        let scale: f64 = d.y().iter().map(|v| v.abs()).fold(0.0, f64::max);
        for j in 0..=config.degree {
            let s: f64 = (0..d.len())
                .map(|i| {
                    let r = d.y()[i] - fit.predict(d.x()[i]);
                    w[i] * r * (d.x()[i] - 0.5).powi(j as i32)
                })
                .sum();
            assert!(s.abs() < 1e-8 * scale.max(1.0), "j={j}: {s}");
        }
    }

    #[test]
    fn singular_window_detected() {
        // only one distinct x inside the window at x0=0
        let d = Dataset::new(vec![0.0, 0.0, 5.0], vec![1.0, 2.0, 3.0]).unwrap();
        let err = local_fit(&d, 0.0, &cfg(1, 0.5, Kernel::Uniform)).unwrap_err();
        assert!(matches!(err, Error::SingularDesign { .. }));
    }

    #[test]
    fn empty_window_detected() {
        let d = Dataset::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let err = local_fit(&d, 10.0, &cfg(1, 0.5, Kernel::Uniform)).unwrap_err();
        assert!(matches!(err, Error::EmptyWindow { .. }));
    }

    #[test]
    fn curve_reports_failures_per_point() {
        // cluster of data far from the grid start
        let d = Dataset::new(vec![1.8, 1.9, 2.0], vec![1.0, 2.0, 3.0]).unwrap();
        let config =
            FitConfig::new(1, 0.2, Kernel::Uniform, GridSpec::new(0.0, 2.0, 11).unwrap()).unwrap();
        let c = curve(&d, &config);
        assert_eq!(c.fits.len(), 11);
        assert!(c.failures().count() > 0);
        assert!(c.feasible().count() > 0);
        for (i, f) in c.feasible() {
            assert_eq!(f.x0, config.grid.point(i));
        }
    }
}
