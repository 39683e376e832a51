//! Global ANOVA quantities: density-weighted trapezoid integrals of the
//! pointwise decomposition, and the symmetric quasi-projection matrix
//! H* = int W H fhat(x;h) dx with its trace and diagnostics.
//!
//! The fhat factors cancel in the H* integrand, leaving
//! H*_ij = int K_h(X_i-x) K_h(X_j-x) phi_i^T S(x)^{-1} phi_j dx with
//! S(x) = sum_k K_h(X_k-x) phi_k phi_k^T, which is what gets assembled.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FitConfig, GridSpec};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::{sym_solve, SolveError};
use crate::local_anova::{local_anova, LocalAnova};
use crate::lpfit::{curve, local_fit, weights};
use crate::quad::trapezoid_weight;

/// Refuse to materialize H* beyond this n (the matrix is dense).
pub const HSTAR_N_CAP: usize = 5000;

/// Which SST normalizes the global R-squared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SstConvention {
    /// n^{-1} sum (Y_i - Ybar)^2; bandwidth-free.
    Sample,
    /// int SST(x;h) fhat dx; makes the decomposition identity exact.
    Integrated,
}

/// Integrated ANOVA decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalAnova {
    /// int SST(x;h) fhat dx.
    pub sst_integrated: f64,
    /// n^{-1} sum (Y_i - Ybar)^2.
    pub sst_sample: f64,
    pub sse: f64,
    pub ssr: f64,
    /// SSR / SST under each convention; both are reported.
    pub r2_integrated: f64,
    pub r2_sample: f64,
    /// Grid points excluded from all three integrals (infeasible or
    /// constant-response windows), identically so the identity survives.
    pub skipped_points: usize,
    pub n: usize,
}

impl GlobalAnova {
    pub fn r2(&self, convention: SstConvention) -> f64 {
        match convention {
            SstConvention::Sample => self.r2_sample,
            SstConvention::Integrated => self.r2_integrated,
        }
    }

    pub fn sst(&self, convention: SstConvention) -> f64 {
        match convention {
            SstConvention::Sample => self.sst_sample,
            SstConvention::Integrated => self.sst_integrated,
        }
    }

    /// Adjusted R-squared from the H* trace. Uses the integrated SST so
    /// that adjusted <= unadjusted whenever the trace exceeds 1; may be
    /// negative.
    pub fn r2_adjusted(&self, trace: f64) -> f64 {
        let n = self.n as f64;
        1.0 - (self.sse / (n - trace)) / (self.sst_integrated / (n - 1.0))
    }
}

/// Pointwise decomposition across the grid plus the densities needed to
/// integrate it.
#[derive(Debug)]
pub struct AnovaCurve {
    pub locals: Vec<Result<LocalAnova>>,
    pub fhat: Vec<f64>,
}

/// Decompose at every grid point of `config.grid`.
pub fn anova_curve(data: &Dataset, config: &FitConfig) -> AnovaCurve {
    let fits = curve(data, config);
    let mut locals = Vec::with_capacity(config.grid.count);
    let mut fhat = Vec::with_capacity(config.grid.count);
    for (i, fit) in fits.fits.into_iter().enumerate() {
        match fit {
            Ok(fit) => {
                fhat.push(fit.fhat);
                locals.push(local_anova(data, &fit, config).map_err(|e| e.at_grid_point(i)));
            }
            Err(e) => {
                fhat.push(0.0);
                locals.push(Err(e.at_grid_point(i)));
            }
        }
    }
    AnovaCurve { locals, fhat }
}

/// Trapezoid-integrate the pointwise quantities, weighted by fhat.
/// Flagged points are excluded from all three integrals identically.
pub fn integrate_anova(
    curve: &AnovaCurve,
    grid: &GridSpec,
    sst_sample: f64,
    n: usize,
) -> Result<GlobalAnova> {
    let step = grid.step();
    let mut sst = 0.0;
    let mut sse = 0.0;
    let mut ssr = 0.0;
    let mut skipped = 0usize;
    let mut used = 0usize;
    for (i, local) in curve.locals.iter().enumerate() {
        match local {
            Ok(a) if a.r2.is_some() => {
                let w = trapezoid_weight(i, grid.count, step) * curve.fhat[i];
                sst += w * a.sst;
                sse += w * a.sse;
                ssr += w * a.ssr;
                used += 1;
            }
            _ => skipped += 1,
        }
    }
    if used < 2 {
        return Err(Error::AllPointsInfeasible);
    }
    Ok(GlobalAnova {
        sst_integrated: sst,
        sst_sample,
        sse,
        ssr,
        r2_integrated: if sst > 0.0 { ssr / sst } else { 0.0 },
        r2_sample: if sst_sample > 0.0 { ssr / sst_sample } else { 0.0 },
        skipped_points: skipped,
        n,
    })
}

/// Full pipeline: fit, decompose and integrate.
pub fn global_anova(data: &Dataset, config: &FitConfig) -> Result<GlobalAnova> {
    let curve = anova_curve(data, config);
    integrate_anova(
        &curve,
        &config.grid,
        data.sst_raw() / data.len() as f64,
        data.len(),
    )
}

/// The symmetric quasi-projection matrix and its provenance.
#[derive(Debug, Clone)]
pub struct HStar {
    pub n: usize,
    /// Row-major n x n; exactly symmetric by construction.
    pub matrix: Vec<f64>,
    pub trace: f64,
    pub grid: GridSpec,
    pub x: Vec<f64>,
    pub bandwidth: f64,
    pub kernel: Kernel,
    /// Grid positions of underpopulated slices whose contribution was
    /// dropped. Observations within a kernel radius of one of these lose a
    /// little integral mass, so interiorness accounts for them.
    pub skipped: Vec<f64>,
}

impl HStar {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        Ok((0..self.n)
            .map(|i| {
                self.matrix[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(v)
                    .map(|(m, y)| m * y)
                    .sum()
            })
            .collect())
    }

    /// Indices whose kernel window lies inside the grid and clear of any
    /// skipped slice.
    pub fn interior_rows(&self) -> Vec<usize> {
        self.deep_interior_rows(1)
    }

    /// Rows with `depth` kernel radii of clearance from the grid edges and
    /// from every skipped slice. Depth 1 suffices for single-application
    /// diagnostics (row sums, polynomial reproduction); iterated
    /// applications like the idempotency residual pick up second-hand
    /// boundary error through neighbors and need more clearance.
    pub fn deep_interior_rows(&self, depth: usize) -> Vec<usize> {
        let d = depth as f64 * self.kernel.support_radius() * self.bandwidth;
        self.x
            .iter()
            .enumerate()
            .filter(|(_, &xi)| {
                xi - d >= self.grid.start
                    && xi + d <= self.grid.stop
                    && self.skipped.iter().all(|&s| (xi - s).abs() >= d)
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.matrix[i * self.n..(i + 1) * self.n].iter().sum())
            .collect()
    }

    /// Largest |row sum - 1| over interior rows.
    pub fn max_interior_row_sum_dev(&self) -> f64 {
        let sums = self.row_sums();
        self.interior_rows()
            .iter()
            .map(|&i| (sums[i] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

struct GridSlice {
    /// Indices with positive kernel weight at this grid point.
    active: Vec<usize>,
    /// k_i * phi_i for each active i, contiguous, stride p+1.
    scaled_basis: Vec<f64>,
    solve: crate::linalg::SymSolve,
}

/// Number of distinct values among the x entries at `indices`.
fn distinct_count(x: &[f64], indices: &[usize]) -> usize {
    let mut vals: Vec<f64> = indices.iter().map(|&i| x[i]).collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    vals.len()
}

/// Weights, design moments and factorization at one grid point. Returns
/// `None` for underpopulated windows (fewer than p+1 distinct weighted
/// points): their integrand contribution is dropped, mirroring how the
/// quadrature of the pointwise decomposition skips infeasible grid points.
/// A populated window whose normal equations still fail to factor is a
/// genuine numerical failure and aborts.
fn grid_slice(
    data: &Dataset,
    x0: f64,
    config: &FitConfig,
    index: usize,
) -> Result<Option<GridSlice>> {
    let h = config.bandwidth;
    let k = config.degree + 1;
    let w = weights(data, x0, h, config.kernel);
    let active: Vec<usize> = (0..data.len()).filter(|&i| w[i] > 0.0).collect();
    if distinct_count(data.x(), &active) < k {
        return Ok(None);
    }
    let mut a = vec![0.0; k * k];
    let mut scaled_basis = vec![0.0; active.len() * k];
    let mut pow = vec![0.0; 2 * config.degree + 1];
    for (slot, &i) in active.iter().enumerate() {
        let u = (data.x()[i] - x0) / h;
        let mut uj = 1.0;
        for entry in pow.iter_mut() {
            *entry = uj;
            uj *= u;
        }
        let wi = w[i];
        for r in 0..k {
            scaled_basis[slot * k + r] = wi * pow[r];
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
    let solve = sym_solve(&a, k)
        .map_err(|e| {
            Error::SingularDesign {
                x0,
                reason: match e {
                    SolveError::Singular => "singular normal equations".to_string(),
                    SolveError::IllConditioned(c) => format!("condition number {c:.3e}"),
                },
            }
            .at_grid_point(index)
        })?;
    Ok(Some(GridSlice {
        active,
        scaled_basis,
        solve,
    }))
}

/// Assemble H* by element-wise quadrature over the grid. Underpopulated
/// windows (the slivers a padded grid creates near the data edges)
/// contribute nothing and are counted; a populated window that fails to
/// factor aborts with its grid index, since a missing interior slice would
/// corrupt the matrix.
pub fn hstar(data: &Dataset, config: &FitConfig) -> Result<HStar> {
    let n = data.len();
    if n > HSTAR_N_CAP {
        return Err(Error::ProblemTooLarge { n, cap: HSTAR_N_CAP });
    }
    let grid = config.grid;
    let step = grid.step();
    let k = config.degree + 1;
    let mut matrix = vec![0.0; n * n];
    let mut skipped = Vec::new();
    for g in 0..grid.count {
        let slice = match grid_slice(data, grid.point(g), config, g)? {
            Some(slice) => slice,
            None => {
                skipped.push(grid.point(g));
                continue;
            }
        };
        let wq = trapezoid_weight(g, grid.count, step);
        let m = slice.active.len();
        // c_j = A^{-1} t_j for each active j
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
    // mirror the upper triangle: symmetric by construction
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
        x: data.x().to_vec(),
        bandwidth: config.bandwidth,
        kernel: config.kernel,
        skipped,
    })
}

/// tr(H*) without materializing the matrix: only diagonal contributions.
pub fn hstar_trace(data: &Dataset, config: &FitConfig) -> Result<f64> {
    let grid = config.grid;
    let step = grid.step();
    let k = config.degree + 1;
    let mut trace = 0.0;
    for g in 0..grid.count {
        let slice = match grid_slice(data, grid.point(g), config, g)? {
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

/// y* = H* y.
pub fn projected_response(hstar: &HStar, y: &[f64]) -> Result<Vec<f64>> {
    hstar.matvec(y)
}

/// y* computed from the integral form: y*_i = int P_x(X_i) K_h(X_i - x) dx,
/// with P_x the fitted local polynomial at grid point x. Cross-validates
/// the matrix assembly (both paths must agree to quadrature accuracy).
pub fn projected_response_integral(data: &Dataset, config: &FitConfig) -> Result<Vec<f64>> {
    let grid = config.grid;
    let step = grid.step();
    let h = config.bandwidth;
    let k = config.degree + 1;
    let mut out = vec![0.0; data.len()];
    for g in 0..grid.count {
        let x0 = grid.point(g);
        // same skip rule as the matrix assembly, so both routes agree
        let w = weights(data, x0, h, config.kernel);
        let active: Vec<usize> = (0..data.len()).filter(|&i| w[i] > 0.0).collect();
        if distinct_count(data.x(), &active) < k {
            continue;
        }
        let fit = local_fit(data, x0, config).map_err(|e| e.at_grid_point(g))?;
        let wq = trapezoid_weight(g, grid.count, step);
        for (i, &xi) in data.x().iter().enumerate() {
            let kw = config.kernel.eval((xi - x0) / h) / h;
            if kw > 0.0 {
                out[i] += wq * fit.predict(xi) * kw;
            }
        }
    }
    Ok(out)
}

/// Relative gaps between the H* quadratic forms and the integrated sums
/// of squares.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadFormGaps {
    pub sse_gap: f64,
    pub ssr_gap: f64,
    pub sse_quadratic: f64,
    pub ssr_quadratic: f64,
}

/// Compare n^{-1} y^T (I - H*) y with the integrated SSE, and
/// n^{-1} y^T (H* - L) y with the integrated SSR.
pub fn quadratic_form_check(hstar: &HStar, y: &[f64], global: &GlobalAnova) -> Result<QuadFormGaps> {
    if y.len() != hstar.n {
        return Err(Error::DimensionMismatch {
            expected: hstar.n,
            got: y.len(),
        });
    }
    let n = hstar.n as f64;
    let hy = hstar.matvec(y)?;
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    let ybar = y.iter().sum::<f64>() / n;
    let q_sse = (yy - yhy) / n;
    let q_ssr = (yhy - n * ybar * ybar) / n;
    let rel = |gap: f64, reference: f64| gap.abs() / reference.abs().max(1e-300);
    Ok(QuadFormGaps {
        sse_gap: rel(q_sse - global.sse, global.sse),
        ssr_gap: rel(q_ssr - global.ssr, global.ssr),
        sse_quadratic: q_sse,
        ssr_quadratic: q_ssr,
    })
}

/// max_i |((H* - H*^2) m)_i| over interior rows; shrinks as H* approaches a
/// projection.
pub fn idempotency_residual(hstar: &HStar, m_values: &[f64]) -> Result<f64> {
    let hm = hstar.matvec(m_values)?;
    let hhm = hstar.matvec(&hm)?;
    let interior = hstar.deep_interior_rows(3);
    let rows = if interior.is_empty() {
        (0..hstar.n).collect()
    } else {
        interior
    };
    Ok(rows
        .iter()
        .map(|&i| (hm[i] - hhm[i]).abs())
        .fold(0.0, f64::max))
}
