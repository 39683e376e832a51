//! Exact per-grid-point ANOVA decomposition SST(x;h) = SSE_p(x;h) + SSR_p(x;h)
//! and the pointwise R-squared. All three sums are kernel-weighted means
//! normalized by the density estimate, with deviations taken from the
//! full-sample mean Ybar (never a local weighted mean).

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FitConfig};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::lpfit::{local_fit, weights, LocalFit};

/// Pointwise ANOVA quantities at one grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalAnova {
    pub x0: f64,
    pub sst: f64,
    pub sse: f64,
    pub ssr: f64,
    /// None when local SST is below tolerance (constant-response window).
    pub r2: Option<f64>,
}

fn sst_tolerance(ybar: f64) -> f64 {
    1e-12 * ybar.mul_add(ybar, 0.0).max(1.0)
}

/// Weighted mean of `f(i)` under kernel weights, normalized by fhat.
fn weighted_mean<F: Fn(usize) -> f64>(data: &Dataset, w: &[f64], fhat: f64, f: F) -> f64 {
    let n = data.len() as f64;
    let s: f64 = w
        .iter()
        .enumerate()
        .filter(|(_, &wi)| wi > 0.0)
        .map(|(i, &wi)| wi * f(i))
        .sum();
    s / (n * fhat)
}

/// SSE_p(x;h): weighted mean squared local residual; estimates sigma^2(x).
pub fn local_sse(data: &Dataset, fit: &LocalFit, config: &FitConfig) -> Result<f64> {
    if fit.fhat <= 0.0 {
        return Err(Error::EmptyWindow { x0: fit.x0 });
    }
    let w = weights(data, fit.x0, config.bandwidth, config.kernel);
    Ok(weighted_mean(data, &w, fit.fhat, |i| {
        let r = data.y()[i] - fit.predict(data.x()[i]);
        r * r
    }))
}

/// SST(x;h): weighted second moment of Y around the global mean Ybar.
pub fn local_sst(data: &Dataset, x0: f64, config: &FitConfig) -> Result<f64> {
    let w = weights(data, x0, config.bandwidth, config.kernel);
    let fhat = w.iter().sum::<f64>() / data.len() as f64;
    if fhat <= 0.0 {
        return Err(Error::EmptyWindow { x0 });
    }
    let ybar = data.y_mean();
    Ok(weighted_mean(data, &w, fhat, |i| {
        let d = data.y()[i] - ybar;
        d * d
    }))
}

/// SSR_p(x;h): weighted second moment of the fitted values around Ybar.
pub fn local_ssr(data: &Dataset, fit: &LocalFit, config: &FitConfig) -> Result<f64> {
    if fit.fhat <= 0.0 {
        return Err(Error::EmptyWindow { x0: fit.x0 });
    }
    let w = weights(data, fit.x0, config.bandwidth, config.kernel);
    let ybar = data.y_mean();
    Ok(weighted_mean(data, &w, fit.fhat, |i| {
        let d = fit.predict(data.x()[i]) - ybar;
        d * d
    }))
}

/// All three pointwise sums plus R^2 at the fit's grid point.
pub fn local_anova(data: &Dataset, fit: &LocalFit, config: &FitConfig) -> Result<LocalAnova> {
    let sst = local_sst(data, fit.x0, config)?;
    let sse = local_sse(data, fit, config)?;
    let ssr = local_ssr(data, fit, config)?;
    let r2 = if sst > sst_tolerance(data.y_mean()) {
        Some((1.0 - sse / sst).clamp(0.0, 1.0))
    } else {
        None
    };
    Ok(LocalAnova {
        x0: fit.x0,
        sst,
        sse,
        ssr,
        r2,
    })
}

/// Fit at x0 and decompose in one call.
pub fn local_anova_at(data: &Dataset, x0: f64, config: &FitConfig) -> Result<LocalAnova> {
    let fit = local_fit(data, x0, config)?;
    local_anova(data, &fit, config)
}

/// Pointwise R-squared, erroring on constant-response windows.
pub fn local_r2(anova: &LocalAnova) -> Result<f64> {
    anova.r2.ok_or(Error::UndefinedR2 { x0: anova.x0 })
}

/// |LHS - RHS| of the SSE_1 identity relating local linear SSE to the
/// Nadaraya-Watson weighted squared error, each side computed independently.
pub fn nw_sse_identity_gap(data: &Dataset, x0: f64, h: f64, kernel: Kernel) -> Result<f64> {
    let grid = crate::data::GridSpec::new(x0 - 1.0, x0 + 1.0, 2)?;
    let config = FitConfig::new(1, h, kernel, grid)?;
    let fit = local_fit(data, x0, &config)?;
    let lhs = local_sse(data, &fit, &config)?;

    let w = weights(data, x0, h, kernel);
    let n = data.len() as f64;
    let fhat = w.iter().sum::<f64>() / n;
    if fhat <= 0.0 {
        return Err(Error::EmptyWindow { x0 });
    }
    let nw: f64 = w.iter().zip(data.y()).map(|(wi, yi)| wi * yi).sum::<f64>() / (n * fhat);
    let xbar_k: f64 = w.iter().zip(data.x()).map(|(wi, xi)| wi * xi).sum::<f64>() / (n * fhat);
    let sq_resid = weighted_mean(data, &w, fhat, |i| {
        let r = data.y()[i] - nw;
        r * r
    });
    let x_spread = weighted_mean(data, &w, fhat, |i| {
        let d = data.x()[i] - xbar_k;
        d * d
    });
    let rhs = sq_resid - fit.beta[1] * fit.beta[1] * x_spread;
    Ok((lhs - rhs).abs())
}
