//! Varying coefficient models: Y = sum_k a_k(U) X_k + sigma(U) eps, with the
//! coefficient functions estimated by local polynomials in U and the same
//! exact local/global ANOVA decomposition as the bivariate case.
//!
//! The least squares criterion divides by ghat(u;h) in the source model;
//! that factor is a positive constant at fixed u, so the undivided system
//! is solved here (the minimizer is identical).

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FitConfig};
use crate::error::{Error, Result};
use crate::global_anova::{integrate_anova, GlobalAnova, HStar, HSTAR_N_CAP};
use crate::linalg::{sym_solve, SolveError};
use crate::local_anova::LocalAnova;
use crate::quad::trapezoid_weight;

/// (U_i, X_i1..X_id, Y_i) records; the first covariate column is all ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcmDataset {
    u: Vec<f64>,
    /// Row-major n x d.
    x: Vec<f64>,
    y: Vec<f64>,
    d: usize,
}

impl VcmDataset {
    pub fn new(u: Vec<f64>, x: Vec<f64>, y: Vec<f64>, d: usize) -> Result<Self> {
        let n = u.len();
        if d < 1 {
            return Err(Error::InvalidInput("d must be at least 1".to_string()));
        }
        if y.len() != n || x.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: x.len(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if u.iter().chain(&x).chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("nonfinite value in VCM data".to_string()));
        }
        for i in 0..n {
            if x[i * d] != 1.0 {
                return Err(Error::InvalidInput(format!(
                    "covariate column 1 must be identically 1 (row {i} has {})",
                    x[i * d]
                )));
            }
        }
        Ok(VcmDataset { u, x, y, d })
    }

    /// Wrap a bivariate dataset as a d = 1 VCM (intercept-only covariate).
    pub fn from_bivariate(data: &Dataset) -> Self {
        VcmDataset {
            u: data.x().to_vec(),
            x: vec![1.0; data.len()],
            y: data.y().to_vec(),
            d: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn covariate(&self, i: usize, k: usize) -> f64 {
        self.x[i * self.d + k]
    }

    pub fn y_mean(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.y.len() as f64
    }

    pub fn sst_raw(&self) -> f64 {
        let ybar = self.y_mean();
        self.y.iter().map(|v| (v - ybar) * (v - ybar)).sum()
    }

    pub fn u_range(&self) -> (f64, f64) {
        let lo = self.u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Solution of the VCM weighted least squares at one grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VcmFit {
    pub u0: f64,
    /// Coefficient block beta_{k,j}, covariate-major: block k holds powers
    /// j = 0..p of (U_i - u0).
    pub beta: Vec<f64>,
    /// Kernel density estimate ghat(u0; h).
    pub ghat: f64,
    /// (beta_{1,0}, ..., beta_{d,0}): the estimated coefficient functions.
    pub a_hat: Vec<f64>,
    pub degree: usize,
    pub dim: usize,
    gamma: Vec<f64>,
    bandwidth: f64,
}

impl VcmFit {
    /// Fitted value for observation i at this grid point.
    pub fn predict_row(&self, data: &VcmDataset, i: usize) -> f64 {
        let p = self.degree;
        let us = (data.u()[i] - self.u0) / self.bandwidth;
        let mut acc = 0.0;
        for k in 0..self.dim {
            let block = &self.gamma[k * (p + 1)..(k + 1) * (p + 1)];
            let poly = block.iter().rev().fold(0.0, |a, g| a * us + g);
            acc += poly * data.covariate(i, k);
        }
        acc
    }
}

fn kernel_weights(data: &VcmDataset, u0: f64, config: &FitConfig) -> Vec<f64> {
    let h = config.bandwidth;
    data.u()
        .iter()
        .map(|&ui| config.kernel.eval((ui - u0) / h) / h)
        .collect()
}

/// Locally weighted least squares for all d coefficient functions at u0.
pub fn vcm_local_fit(data: &VcmDataset, u0: f64, config: &FitConfig) -> Result<VcmFit> {
    let h = config.bandwidth;
    let p = config.degree;
    let d = data.dim();
    let k = (p + 1) * d;
    let w = kernel_weights(data, u0, config);
    let n = data.len() as f64;
    let ghat = w.iter().sum::<f64>() / n;
    if ghat <= 0.0 {
        return Err(Error::EmptyWindow { x0: u0 });
    }
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    let mut basis = vec![0.0; k];
    for (i, &wi) in w.iter().enumerate() {
        if wi <= 0.0 {
            continue;
        }
        let us = (data.u()[i] - u0) / h;
        for cov in 0..d {
            let xik = data.covariate(i, cov);
            let mut uj = 1.0;
            for j in 0..=p {
                basis[cov * (p + 1) + j] = xik * uj;
                uj *= us;
            }
        }
        let yi = data.y()[i];
        for r in 0..k {
            b[r] += wi * yi * basis[r];
            for c in r..k {
                a[r * k + c] += wi * basis[r] * basis[c];
            }
        }
    }
    for r in 0..k {
        for c in 0..r {
            a[r * k + c] = a[c * k + r];
        }
    }
    let solve = sym_solve(&a, k).map_err(|e| Error::SingularDesign {
        x0: u0,
        reason: match e {
            SolveError::Singular => {
                "weighted VCM design is rank deficient (collinear covariates or window too small)"
                    .to_string()
            }
            SolveError::IllConditioned(c) => format!("condition number {c:.3e}"),
        },
    })?;
    let gamma = solve.apply(&b);
    let beta: Vec<f64> = gamma
        .iter()
        .enumerate()
        .map(|(idx, g)| g / h.powi((idx % (p + 1)) as i32))
        .collect();
    let a_hat: Vec<f64> = (0..d).map(|cov| beta[cov * (p + 1)]).collect();
    Ok(VcmFit {
        u0,
        beta,
        ghat,
        a_hat,
        degree: p,
        dim: d,
        gamma,
        bandwidth: h,
    })
}

/// Exact pointwise decomposition at the fit's grid point.
pub fn vcm_local_anova(data: &VcmDataset, fit: &VcmFit, config: &FitConfig) -> Result<LocalAnova> {
    if fit.ghat <= 0.0 {
        return Err(Error::EmptyWindow { x0: fit.u0 });
    }
    let w = kernel_weights(data, fit.u0, config);
    let n = data.len() as f64;
    let ybar = data.y_mean();
    let norm = n * fit.ghat;
    let mut sst = 0.0;
    let mut sse = 0.0;
    let mut ssr = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        if wi <= 0.0 {
            continue;
        }
        let yi = data.y()[i];
        let yhat = fit.predict_row(data, i);
        sst += wi * (yi - ybar) * (yi - ybar);
        sse += wi * (yi - yhat) * (yi - yhat);
        ssr += wi * (yhat - ybar) * (yhat - ybar);
    }
    sst /= norm;
    sse /= norm;
    ssr /= norm;
    let tol = 1e-12 * (ybar * ybar).max(1.0);
    let r2 = if sst > tol {
        Some((1.0 - sse / sst).clamp(0.0, 1.0))
    } else {
        None
    };
    Ok(LocalAnova {
        x0: fit.u0,
        sst,
        sse,
        ssr,
        r2,
    })
}

/// Global ANOVA for the VCM, with the H_u* trace optionally attached.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VcmGlobalAnova {
    pub anova: GlobalAnova,
    pub dim: usize,
    /// tr(H_u*), informational only (VCM degrees of freedom and F-tests
    /// are out of scope).
    pub hu_trace: Option<f64>,
}

/// Integrate the pointwise VCM decomposition over the grid.
pub fn vcm_global(data: &VcmDataset, config: &FitConfig, with_trace: bool) -> Result<VcmGlobalAnova> {
    let grid = config.grid;
    let mut locals: Vec<Result<LocalAnova>> = Vec::with_capacity(grid.count);
    let mut ghat = Vec::with_capacity(grid.count);
    for (i, u0) in grid.points().enumerate() {
        match vcm_local_fit(data, u0, config) {
            Ok(fit) => {
                ghat.push(fit.ghat);
                locals.push(vcm_local_anova(data, &fit, config).map_err(|e| e.at_grid_point(i)));
            }
            Err(e) => {
                ghat.push(0.0);
                locals.push(Err(e.at_grid_point(i)));
            }
        }
    }
    let curve = crate::global_anova::AnovaCurve { locals, fhat: ghat };
    let anova = integrate_anova(
        &curve,
        &grid,
        data.sst_raw() / data.len() as f64,
        data.len(),
    )?;
    let hu_trace = if with_trace {
        Some(vcm_hstar_trace(data, config)?)
    } else {
        None
    };
    Ok(VcmGlobalAnova {
        anova,
        dim: data.dim(),
        hu_trace,
    })
}

struct VcmSlice {
    active: Vec<usize>,
    scaled_basis: Vec<f64>,
    solve: crate::linalg::SymSolve,
}

/// Same contract as the bivariate grid slice: `None` drops an
/// underpopulated window (too few weighted points, or fewer than p+1
/// distinct index values) from the quadrature; a populated window that
/// fails to factor aborts.
fn vcm_slice(
    data: &VcmDataset,
    u0: f64,
    config: &FitConfig,
    index: usize,
) -> Result<Option<VcmSlice>> {
    let h = config.bandwidth;
    let p = config.degree;
    let d = data.dim();
    let k = (p + 1) * d;
    let w = kernel_weights(data, u0, config);
    let active: Vec<usize> = (0..data.len()).filter(|&i| w[i] > 0.0).collect();
    if active.len() < k {
        return Ok(None);
    }
    let mut distinct: Vec<f64> = active.iter().map(|&i| data.u()[i]).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < p + 1 {
        return Ok(None);
    }
    let mut a = vec![0.0; k * k];
    let mut scaled_basis = vec![0.0; active.len() * k];
    let mut basis = vec![0.0; k];
    for (slot, &i) in active.iter().enumerate() {
        let us = (data.u()[i] - u0) / h;
        let wi = w[i];
        for cov in 0..d {
            let xik = data.covariate(i, cov);
            let mut uj = 1.0;
            for j in 0..=p {
                basis[cov * (p + 1) + j] = xik * uj;
                uj *= us;
            }
        }
        for r in 0..k {
            scaled_basis[slot * k + r] = wi * basis[r];
            for c in r..k {
                a[r * k + c] += wi * basis[r] * basis[c];
            }
        }
    }
    for r in 0..k {
        for c in 0..r {
            a[r * k + c] = a[c * k + r];
        }
    }
    let solve = sym_solve(&a, k)
        .map_err(|e| {
            Error::SingularDesign {
                x0: u0,
                reason: match e {
                    SolveError::Singular => "singular VCM design".to_string(),
                    SolveError::IllConditioned(c) => format!("condition number {c:.3e}"),
                },
            }
            .at_grid_point(index)
        })?;
    Ok(Some(VcmSlice {
        active,
        scaled_basis,
        solve,
    }))
}

/// tr(H_u*) by diagonal-only quadrature.
pub fn vcm_hstar_trace(data: &VcmDataset, config: &FitConfig) -> Result<f64> {
    let grid = config.grid;
    let step = grid.step();
    let k = (config.degree + 1) * data.dim();
    let mut trace = 0.0;
    for g in 0..grid.count {
        let slice = match vcm_slice(data, grid.point(g), config, g)? {
            Some(slice) => slice,
            None => continue,
        };
        let wq = trapezoid_weight(g, grid.count, step);
        for si in 0..slice.active.len() {
            let t = &slice.scaled_basis[si * k..(si + 1) * k];
            trace += wq * slice.solve.quad_form(t, t);
        }
    }
    Ok(trace)
}

/// Assemble H_u* = int W_u H_u ghat du (same contract as the bivariate H*).
pub fn vcm_hstar(data: &VcmDataset, config: &FitConfig) -> Result<HStar> {
    let n = data.len();
    if n > HSTAR_N_CAP {
        return Err(Error::ProblemTooLarge { n, cap: HSTAR_N_CAP });
    }
    let grid = config.grid;
    let step = grid.step();
    let k = (config.degree + 1) * data.dim();
    let mut matrix = vec![0.0; n * n];
    let mut skipped = Vec::new();
    for g in 0..grid.count {
        let slice = match vcm_slice(data, grid.point(g), config, g)? {
            Some(slice) => slice,
            None => {
                skipped.push(grid.point(g));
                continue;
            }
        };
        let wq = trapezoid_weight(g, grid.count, step);
        let m = slice.active.len();
        let mut solved = vec![0.0; m * k];
        for j in 0..m {
            let t = &slice.scaled_basis[j * k..(j + 1) * k];
            let c = slice.solve.apply(t);
            solved[j * k..(j + 1) * k].copy_from_slice(&c);
        }
        for (si, &i) in slice.active.iter().enumerate() {
            let ti = &slice.scaled_basis[si * k..(si + 1) * k];
            for (sj, &j) in slice.active.iter().enumerate().skip(si) {
                let cj = &solved[sj * k..(sj + 1) * k];
                let v: f64 = ti.iter().zip(cj).map(|(a, b)| a * b).sum();
                matrix[i * n + j] += wq * v;
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            matrix[j * n + i] = matrix[i * n + j];
        }
    }
    let trace = (0..n).map(|i| matrix[i * n + i]).sum();
    Ok(HStar {
        n,
        matrix,
        trace,
        grid,
        x: data.u().to_vec(),
        bandwidth: config.bandwidth,
        kernel: config.kernel,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GridSpec;
    use crate::kernel::Kernel;
    use crate::local_anova::local_anova_at;
    use crate::rng::{derive_seed, Rng};

    fn random_vcm(n: usize, d: usize, seed: u64) -> VcmDataset {
        let mut ur = Rng::new(derive_seed(seed, 1));
        let mut xr = Rng::new(derive_seed(seed, 2));
        let mut er = Rng::new(derive_seed(seed, 3));
        let u: Vec<f64> = (0..n).map(|_| ur.next_f64()).collect();
        let mut x = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        for &ui in &u {
            let mut row = vec![1.0];
            for _ in 1..d {
                row.push(xr.next_normal());
            }
            // a_1(u) = sin(2 pi u), a_k(u) = k * u for k >= 2
            let mut m = (2.0 * std::f64::consts::PI * ui).sin();
            for (k, &xv) in row.iter().enumerate().skip(1) {
                m += (k + 1) as f64 * ui * xv;
            }
            y.push(m + 0.5 * er.next_normal());
            x.extend(row);
        }
        VcmDataset::new(u, x, y, d).unwrap()
    }

    fn cfg(p: usize, h: f64) -> FitConfig {
        FitConfig::new(p, h, Kernel::Epanechnikov, GridSpec::new(0.1, 0.9, 40).unwrap()).unwrap()
    }

    #[test]
    fn d1_reduces_to_bivariate() {
        let data = random_vcm(60, 1, 5);
        let biv = Dataset::new(data.u().to_vec(), data.y().to_vec()).unwrap();
        let config = cfg(1, 0.3);
        for &u0 in &[0.3, 0.5, 0.7] {
            let vfit = vcm_local_fit(&data, u0, &config).unwrap();
            let bfit = crate::lpfit::local_fit(&biv, u0, &config).unwrap();
            for (a, b) in vfit.beta.iter().zip(&bfit.beta) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
            }
            assert!((vfit.ghat - bfit.fhat).abs() < 1e-15);
            let va = vcm_local_anova(&data, &vfit, &config).unwrap();
            let ba = local_anova_at(&biv, u0, &config).unwrap();
            assert!((va.sst - ba.sst).abs() <= 1e-12 * ba.sst.max(1.0));
            assert!((va.sse - ba.sse).abs() <= 1e-12 * ba.sse.max(1.0));
            assert!((va.ssr - ba.ssr).abs() <= 1e-12 * ba.ssr.max(1.0));
        }
        let vg = vcm_global(&data, &config, true).unwrap();
        let bg = crate::global_anova::global_anova(&biv, &config).unwrap();
        assert!((vg.anova.sse - bg.sse).abs() <= 1e-12 * bg.sse.max(1.0));
        assert!((vg.anova.ssr - bg.ssr).abs() <= 1e-12 * bg.ssr.max(1.0));
        let bt = crate::global_anova::hstar_trace(&biv, &config).unwrap();
        assert!((vg.hu_trace.unwrap() - bt).abs() <= 1e-12 * bt);
    }

    #[test]
    fn constant_coefficients_match_ols() {
        // sigma = 0, constant a_k, window spanning everything: multivariate OLS
        let n = 40;
        let mut xr = Rng::new(11);
        let u: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        let (a1, a2) = (2.0, -1.5);
        for _ in 0..n {
            let x2 = xr.next_normal();
            x.extend([1.0, x2]);
            y.push(a1 + a2 * x2);
        }
        let data = VcmDataset::new(u, x, y, 2).unwrap();
        let config = FitConfig::new(
            1,
            100.0,
            Kernel::Uniform,
            GridSpec::new(0.0, 1.0, 5).unwrap(),
        )
        .unwrap();
        let fit = vcm_local_fit(&data, 0.5, &config).unwrap();
        assert!((fit.a_hat[0] - a1).abs() < 1e-9);
        assert!((fit.a_hat[1] - a2).abs() < 1e-9);
    }

    #[test]
    fn linear_coefficient_recovered_at_p1() {
        // y = 2 + 3 u x2, noiseless; coefficients linear in u are exactly
        // representable at p = 1
        let n = 60;
        let mut xr = Rng::new(3);
        let u: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for &ui in &u {
            let x2 = xr.next_normal();
            x.extend([1.0, x2]);
            y.push(2.0 + 3.0 * ui * x2);
        }
        let data = VcmDataset::new(u, x, y, 2).unwrap();
        let config = cfg(1, 0.25);
        let u0 = 0.5;
        let fit = vcm_local_fit(&data, u0, &config).unwrap();
        assert!((fit.a_hat[0] - 2.0).abs() < 1e-6, "{}", fit.a_hat[0]);
        assert!((fit.a_hat[1] - 3.0 * u0).abs() < 1e-6, "{}", fit.a_hat[1]);
        let a = vcm_local_anova(&data, &fit, &config).unwrap();
        assert!(a.sse < 1e-12 * a.sst.max(1.0));
    }

    #[test]
    fn exact_decomposition_random_vcm() {
        let data = random_vcm(80, 3, 17);
        let config = cfg(1, 0.3);
        for &u0 in &[0.25, 0.5, 0.75] {
            let fit = vcm_local_fit(&data, u0, &config).unwrap();
            let a = vcm_local_anova(&data, &fit, &config).unwrap();
            assert!(
                (a.sst - a.sse - a.ssr).abs() <= 1e-9 * a.sst,
                "u0={u0}: {} vs {}",
                a.sst,
                a.sse + a.ssr
            );
        }
        let g = vcm_global(&data, &config, false).unwrap();
        let gap = (g.anova.sst_integrated - g.anova.sse - g.anova.ssr).abs();
        assert!(gap <= 1e-9 * g.anova.sst_integrated);
    }

    #[test]
    fn covariate_scale_covariance() {
        let data = random_vcm(70, 2, 23);
        let c = 10.0;
        let scaled = {
            let mut x = Vec::new();
            for i in 0..data.len() {
                x.push(1.0);
                x.push(c * data.covariate(i, 1));
            }
            VcmDataset::new(data.u().to_vec(), x, data.y().to_vec(), 2).unwrap()
        };
        let config = cfg(1, 0.3);
        let f1 = vcm_local_fit(&data, 0.5, &config).unwrap();
        let f2 = vcm_local_fit(&scaled, 0.5, &config).unwrap();
        for j in 0..=config.degree {
            let b1 = f1.beta[config.degree + 1 + j];
            let b2 = f2.beta[config.degree + 1 + j];
            assert!((b2 - b1 / c).abs() <= 1e-9 * b1.abs().max(1.0), "j={j}");
        }
        let a1 = vcm_local_anova(&data, &f1, &config).unwrap();
        let a2 = vcm_local_anova(&scaled, &f2, &config).unwrap();
        assert!((a1.sse - a2.sse).abs() <= 1e-9 * a1.sse.max(1e-12));
        assert!((a1.ssr - a2.ssr).abs() <= 1e-9 * a1.ssr.max(1e-12));
    }

    #[test]
    fn rejects_missing_intercept_column() {
        let err = VcmDataset::new(
            vec![0.0, 1.0],
            vec![1.0, 2.0, 0.5, 3.0],
            vec![1.0, 2.0],
            2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn collinear_covariates_detected() {
        let n = 30;
        let u: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut x = Vec::new();
        for _ in 0..n {
            x.extend([1.0, 2.0]); // column 2 is 2 * column 1
        }
        let y: Vec<f64> = u.iter().map(|v| v + 1.0).collect();
        let data = VcmDataset::new(u, x, y, 2).unwrap();
        let err = vcm_local_fit(&data, 0.5, &cfg(1, 0.4)).unwrap_err();
        assert!(matches!(err, Error::SingularDesign { .. }));
    }
}
