//! Data generators for the bump and twisted-pear models, the five-way
//! R-squared comparison, and seeded Monte Carlo studies (R-squared
//! distributions and F-test size/power sweeps).

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FitConfig, GridSpec};
use crate::error::{Error, Result};
use crate::global_anova::{global_anova, hstar_trace};
use crate::inference::{f_test, FVariant};
use crate::rng::{derive_seed, Rng};

/// Simulation model family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Family {
    /// Y = 2 - 5(X - e^{-100(X-0.5)^2}) + sigma eps, X ~ Uniform(0,1).
    Bump { sigma: f64 },
    /// Y = 5 + 0.1 X e^{5-0.5X} + ((1+0.5X)/3) sigma eps, X ~ N(1.2, (1/3)^2).
    TwistedPear { sigma: f64 },
    /// Y = 2 - a(X - e^{-100(X-0.5)^2}) + eps; a = 0 is the no-effect null.
    BumpScaled { a: f64 },
    /// Y = 5 + a X e^{5-0.5X} + ((1+0.5X)/3) eps.
    PearScaled { a: f64 },
}

impl Family {
    /// True regression function.
    pub fn mean(&self, x: f64) -> f64 {
        match *self {
            Family::Bump { .. } => 2.0 - 5.0 * (x - (-100.0 * (x - 0.5) * (x - 0.5)).exp()),
            Family::BumpScaled { a } => 2.0 - a * (x - (-100.0 * (x - 0.5) * (x - 0.5)).exp()),
            Family::TwistedPear { .. } => 5.0 + 0.1 * x * (5.0 - 0.5 * x).exp(),
            Family::PearScaled { a } => 5.0 + a * x * (5.0 - 0.5 * x).exp(),
        }
    }

    /// Noise standard deviation at x.
    pub fn noise_sd(&self, x: f64) -> f64 {
        match *self {
            Family::Bump { sigma } => sigma,
            Family::BumpScaled { .. } => 1.0,
            Family::TwistedPear { sigma } => (1.0 + 0.5 * x) / 3.0 * sigma,
            Family::PearScaled { .. } => (1.0 + 0.5 * x) / 3.0,
        }
    }

    fn draw_x(&self, rng: &mut Rng) -> f64 {
        match self {
            Family::Bump { .. } | Family::BumpScaled { .. } => rng.next_f64(),
            Family::TwistedPear { .. } | Family::PearScaled { .. } => {
                1.2 + rng.next_normal() / 3.0
            }
        }
    }
}

/// A model family with a sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub family: Family,
    pub n: usize,
}

/// Draw a dataset. X and eps come from independent sub-streams of `seed`,
/// so the design is reproducible independently of the noise.
pub fn generate(gen: &Generator, seed: u64) -> Dataset {
    let mut x_rng = Rng::new(derive_seed(seed, 1));
    let mut e_rng = Rng::new(derive_seed(seed, 2));
    let mut x = Vec::with_capacity(gen.n);
    let mut y = Vec::with_capacity(gen.n);
    for _ in 0..gen.n {
        let xi = gen.family.draw_x(&mut x_rng);
        let eps = e_rng.next_normal();
        x.push(xi);
        y.push(gen.family.mean(xi) + gen.family.noise_sd(xi) * eps);
    }
    Dataset::new(x, y).expect("generated data is finite and n >= 2")
}

/// The five coefficients of determination compared in the studies.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RsqSuite {
    /// Global ANOVA R-squared, SSR/(SSE+SSR) from the integrated
    /// decomposition.
    pub r2_anova: f64,
    /// Adjusted ANOVA R-squared (uses tr(H*)).
    pub r2_anova_adj: f64,
    /// Correlation-based R-squared between kernel-regression fitted values
    /// (degree 0, same bandwidth and kernel) and responses; undefined for
    /// constant fits or responses.
    pub r2_rho: Option<f64>,
    /// 1 - RSS/SST with RSS from the design-point fits.
    pub r2_s: f64,
    /// R-squared of the simple linear model.
    pub r2_linear: f64,
    pub trace: f64,
}

/// Curve values on the grid nodes, with `fallback` imputed wherever the
/// fit failed, then linearly interpolated to each design point. Imputation
/// rather than skipping keeps every design point represented, and lets
/// the estimators that depend on mhat(X_i) degrade visibly (rather than
/// silently) when the bandwidth cannot support the fit in a sparse region
/// -- the source of the heavy left tails these estimators are known for.
fn interpolated_mhat(
    data: &Dataset,
    node_values: &[f64],
    grid: &crate::data::GridSpec,
) -> Vec<f64> {
    let step = grid.step();
    data.x()
        .iter()
        .map(|&xi| {
            let t = ((xi - grid.start) / step).clamp(0.0, (grid.count - 1) as f64);
            let i = (t.floor() as usize).min(grid.count.saturating_sub(2));
            let frac = t - i as f64;
            node_values[i] * (1.0 - frac) + node_values[i + 1] * frac
        })
        .collect()
}

/// Evaluate all five estimators on one dataset. mhat(X_i) comes from the
/// grid curve, with the global mean imputed at nodes where the configured
/// fit fails; the correlation estimator uses the kernel-regression
/// (degree 0) values at the same bandwidth, following its source
/// definition, over the same imputation set.
pub fn rsq_suite(data: &Dataset, config: &FitConfig) -> Result<RsqSuite> {
    let global = global_anova(data, config)?;
    let trace = hstar_trace(data, config)?;
    let r2_anova = global.r2_integrated;
    let r2_anova_adj = global.r2_adjusted(trace);

    let n = data.len() as f64;
    let ybar = data.y_mean();
    let nw_config = FitConfig::new(0, config.bandwidth, config.kernel, config.grid)?;
    let fits = crate::lpfit::curve(data, config);
    let nw_fits = crate::lpfit::curve(data, &nw_config);
    let mut nodes = Vec::with_capacity(config.grid.count);
    let mut nw_nodes = Vec::with_capacity(config.grid.count);
    for (f, f0) in fits.fits.iter().zip(&nw_fits.fits) {
        match (f, f0) {
            (Ok(f), Ok(f0)) => {
                nodes.push(f.beta[0]);
                nw_nodes.push(f0.beta[0]);
            }
            _ => {
                nodes.push(ybar);
                nw_nodes.push(ybar);
            }
        }
    }
    let mhat = interpolated_mhat(data, &nodes, &config.grid);
    let nwhat = interpolated_mhat(data, &nw_nodes, &config.grid);
    let nwbar = nwhat.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_m = 0.0;
    let mut var_y = 0.0;
    let mut rss = 0.0;
    for (i, (&mi, &gi)) in mhat.iter().zip(&nwhat).enumerate() {
        let yi = data.y()[i];
        cov += (gi - nwbar) * (yi - ybar);
        var_m += (gi - nwbar) * (gi - nwbar);
        var_y += (yi - ybar) * (yi - ybar);
        rss += (yi - mi) * (yi - mi);
    }
    let r2_rho = if var_m > 0.0 && var_y > 0.0 {
        Some((cov * cov) / (var_m * var_y))
    } else {
        None
    };
    let r2_s = if var_y > 0.0 { 1.0 - rss / var_y } else { 0.0 };

    // simple linear model R^2
    let xbar = data.x().iter().sum::<f64>() / n;
    let sxx: f64 = data.x().iter().map(|v| (v - xbar) * (v - xbar)).sum();
    let sxy: f64 = data
        .x()
        .iter()
        .zip(data.y())
        .map(|(xv, yv)| (xv - xbar) * (yv - ybar))
        .sum();
    let r2_linear = if sxx > 0.0 && var_y > 0.0 {
        (sxy * sxy) / (sxx * var_y)
    } else {
        0.0
    };

    Ok(RsqSuite {
        r2_anova,
        r2_anova_adj,
        r2_rho,
        r2_s,
        r2_linear,
        trace,
    })
}

/// Per-replicate values of one estimator with summary statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyResult {
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    /// min, q1, median, q3, max (boxplot quantiles).
    pub quantiles: [f64; 5],
}

impl StudyResult {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let t = p * (sorted.len() - 1) as f64;
            let i = t.floor() as usize;
            let frac = t - i as f64;
            if i + 1 < sorted.len() {
                sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
            } else {
                sorted[i]
            }
        };
        let quantiles = [q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)];
        values.shrink_to_fit();
        StudyResult {
            values,
            mean,
            sd,
            quantiles,
        }
    }
}

/// Distributions of the five estimators over seeded replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RsqStudy {
    pub anova: StudyResult,
    pub anova_adj: StudyResult,
    pub rho: StudyResult,
    pub s: StudyResult,
    pub linear: StudyResult,
    pub replicates: usize,
    pub failed: usize,
    pub base_seed: u64,
}

/// Maximum tolerated fraction of failed replicates before a study aborts.
const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Run `reps` seeded replicates of the R-squared comparison. The grid is
/// re-derived from each replicate's data range when `config.grid` is the
/// data-range convention, which the caller signals by passing the count in
/// `grid_count`.
pub fn rsq_study(
    gen: &Generator,
    degree: usize,
    bandwidth: f64,
    kernel: crate::kernel::Kernel,
    grid_count: usize,
    reps: usize,
    seed: u64,
) -> Result<RsqStudy> {
    let mut anova = Vec::with_capacity(reps);
    let mut adj = Vec::with_capacity(reps);
    let mut rho = Vec::with_capacity(reps);
    let mut s = Vec::with_capacity(reps);
    let mut linear = Vec::with_capacity(reps);
    let mut failed = 0usize;
    for rep in 0..reps {
        let data = generate(gen, derive_seed(seed, rep as u64 + 1));
        let grid = GridSpec::data_range(&data, grid_count)?;
        let config = FitConfig::new(degree, bandwidth, kernel, grid)?;
        match rsq_suite(&data, &config) {
            Ok(suite) => {
                anova.push(suite.r2_anova);
                adj.push(suite.r2_anova_adj);
                if let Some(v) = suite.r2_rho {
                    rho.push(v);
                }
                s.push(suite.r2_s);
                linear.push(suite.r2_linear);
            }
            Err(_) => failed += 1,
        }
    }
    if (failed as f64) > MAX_FAILURE_FRACTION * reps as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total: reps,
        });
    }
    Ok(RsqStudy {
        anova: StudyResult::from_values(anova),
        anova_adj: StudyResult::from_values(adj),
        rho: StudyResult::from_values(rho),
        s: StudyResult::from_values(s),
        linear: StudyResult::from_values(linear),
        replicates: reps,
        failed,
        base_seed: seed,
    })
}

/// One cell of a power sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerRow {
    pub a: f64,
    pub n: usize,
    pub h: f64,
    pub reject_rate: f64,
    /// Binomial Monte Carlo standard error of the rejection rate.
    pub mc_se: f64,
    pub failed: usize,
}

/// Which scaled family drives a power sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaledFamily {
    BumpScaled,
    PearScaled,
}

impl ScaledFamily {
    pub fn with_effect(self, a: f64) -> Family {
        match self {
            ScaledFamily::BumpScaled => Family::BumpScaled { a },
            ScaledFamily::PearScaled => Family::PearScaled { a },
        }
    }
}

/// Rejection rates of the conservative F-test over a sweep of effect sizes
/// and bandwidths at one sample size.
#[allow(clippy::too_many_arguments)]
pub fn power_study(
    family: ScaledFamily,
    a_values: &[f64],
    n: usize,
    h_values: &[f64],
    degree: usize,
    kernel: crate::kernel::Kernel,
    grid_count: usize,
    reps: usize,
    level: f64,
    seed: u64,
) -> Result<Vec<PowerRow>> {
    let mut rows = Vec::new();
    for (ai, &a) in a_values.iter().enumerate() {
        for (hi, &h) in h_values.iter().enumerate() {
            let cell_seed = derive_seed(derive_seed(seed, ai as u64 + 101), hi as u64 + 1);
            let gen = Generator {
                family: family.with_effect(a),
                n,
            };
            let mut rejects = 0usize;
            let mut failed = 0usize;
            for rep in 0..reps {
                let data = generate(&gen, derive_seed(cell_seed, rep as u64 + 1));
                let outcome = (|| -> Result<bool> {
                    let grid = GridSpec::data_range(&data, grid_count)?;
                    let config = FitConfig::new(degree, h, kernel, grid)?;
                    let global = global_anova(&data, &config)?;
                    let trace = hstar_trace(&data, &config)?;
                    let ft = f_test(&global, trace, FVariant::Conservative)?;
                    Ok(ft.p_value < level)
                })();
                match outcome {
                    Ok(true) => rejects += 1,
                    Ok(false) => {}
                    Err(_) => failed += 1,
                }
            }
            if (failed as f64) > MAX_FAILURE_FRACTION * reps as f64 {
                return Err(Error::TooManyFailures {
                    failed,
                    total: reps,
                });
            }
            let used = reps - failed;
            let rate = rejects as f64 / used as f64;
            rows.push(PowerRow {
                a,
                n,
                h,
                reject_rate: rate,
                mc_se: (rate * (1.0 - rate) / used as f64).sqrt(),
                failed,
            });
        }
    }
    Ok(rows)
}
