//! Kernel weight functions and the analytic/numeric constants consumed by
//! the ANOVA formulas: moments, squared-kernel moments, self-convolutions
//! and the projected-response variance constant kappa0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{trapezoid_uniform, QuadratureSpec};

/// Effective support half-width for the Gaussian kernel. Tail mass beyond
/// 8 standard deviations is below 1e-15, so all integrals stay finite-range.
pub const GAUSSIAN_CUTOFF: f64 = 8.0;

/// Grid size for the tabulated self-convolutions.
pub const CONV_TABLE_POINTS: usize = 4001;

/// Symmetric probability-density kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Epanechnikov,
    Gaussian,
    Uniform,
}

impl Kernel {
    /// K(u). Zero outside the (effective) support.
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            Kernel::Gaussian => {
                if u.abs() >= GAUSSIAN_CUTOFF {
                    0.0
                } else {
                    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
                }
            }
            Kernel::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    /// Support interval used for quadrature.
    pub fn support(self) -> (f64, f64) {
        match self {
            Kernel::Gaussian => (-GAUSSIAN_CUTOFF, GAUSSIAN_CUTOFF),
            _ => (-1.0, 1.0),
        }
    }

    /// Half-width of the support, in bandwidth units.
    pub fn support_radius(self) -> f64 {
        self.support().1
    }

    /// Closed-form moment mu_j = int u^j K(u) du, when the family admits one.
    fn moment_closed(self, j: usize) -> Option<f64> {
        if j % 2 == 1 {
            return Some(0.0);
        }
        let jf = j as f64;
        match self {
            Kernel::Epanechnikov => Some(3.0 / ((jf + 1.0) * (jf + 3.0))),
            Kernel::Uniform => Some(1.0 / (jf + 1.0)),
            Kernel::Gaussian => Some(double_factorial_odd(j)),
        }
    }

    /// Closed-form nu_j = int u^j K^2(u) du.
    fn sq_moment_closed(self, j: usize) -> Option<f64> {
        if j % 2 == 1 {
            return Some(0.0);
        }
        let jf = j as f64;
        match self {
            Kernel::Epanechnikov => {
                Some(9.0 / 8.0 * (1.0 / (jf + 1.0) - 2.0 / (jf + 3.0) + 1.0 / (jf + 5.0)))
            }
            Kernel::Uniform => Some(0.5 / (jf + 1.0)),
            Kernel::Gaussian => {
                let root_pi = std::f64::consts::PI.sqrt();
                Some(double_factorial_odd(j) / (2.0 * root_pi * 2f64.powi(j as i32 / 2)))
            }
        }
    }
}

/// (j-1)!! for even j, with (-1)!! = 1.
fn double_factorial_odd(j: usize) -> f64 {
    let mut acc = 1.0;
    let mut k = 1;
    while k + 1 < j {
        k += 2;
        acc *= k as f64;
    }
    if j >= 2 {
        acc
    } else {
        1.0
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Ok(Kernel::Epanechnikov),
            "gaussian" | "normal" => Ok(Kernel::Gaussian),
            "uniform" | "box" => Ok(Kernel::Uniform),
            other => Err(Error::InvalidInput(format!(
                "unknown kernel '{other}' (expected epanechnikov, gaussian or uniform)"
            ))),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Gaussian => "gaussian",
            Kernel::Uniform => "uniform",
        };
        f.write_str(name)
    }
}

/// A function tabulated on a uniform grid, evaluated by linear interpolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvTable {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl ConvTable {
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    pub fn eval(&self, v: f64) -> f64 {
        if v <= self.lo || v >= self.hi {
            return 0.0;
        }
        let t = (v - self.lo) / self.step();
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn integral(&self) -> f64 {
        trapezoid_uniform(&self.values, self.step())
    }

    /// Trapezoid integral of the product of two tables on the same grid.
    pub fn product_integral(&self, other: &ConvTable) -> f64 {
        let prod: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        trapezoid_uniform(&prod, self.step())
    }
}

/// Kernel constants: moments mu_j, squared-kernel moments nu_j, the
/// self-convolutions K0*, K1* and the variance constant kappa0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelInfo {
    pub kernel: Kernel,
    /// mu_j = int u^j K(u) du for j = 0..=2p+2.
    pub mu: Vec<f64>,
    /// nu_j = int u^j K^2(u) du for j = 0..=2p+2.
    pub nu: Vec<f64>,
    /// K0*(v) = int K(u) K(v-u) du.
    pub k0conv: ConvTable,
    /// K1*(v): self-convolution of u K(u).
    pub k1conv: ConvTable,
    pub kappa0: f64,
}

impl KernelInfo {
    pub fn mu2(&self) -> f64 {
        self.mu[2]
    }
}

/// Build the constants for `kernel` at polynomial degree `p`.
///
/// Closed forms are used for the moment sequences; the same integrals are
/// recomputed by Simpson quadrature and the two paths must agree to 1e-8,
/// otherwise the achieved gap is reported as a quadrature failure.
pub fn kernel_info(kernel: Kernel, p: usize, quad: &QuadratureSpec) -> Result<KernelInfo> {
    let (lo, hi) = kernel.support();
    let jmax = 2 * p + 2;

    let mut mu = Vec::with_capacity(jmax + 1);
    let mut nu = Vec::with_capacity(jmax + 1);
    for j in 0..=jmax {
        let mu_num = quad.integrate(|u| u.powi(j as i32) * kernel.eval(u), lo, hi);
        let nu_num = quad.integrate(
            |u| {
                let k = kernel.eval(u);
                u.powi(j as i32) * k * k
            },
            lo,
            hi,
        );
        let mu_j = match kernel.moment_closed(j) {
            Some(cf) => {
                check_agreement(cf, mu_num)?;
                cf
            }
            None => mu_num,
        };
        let nu_j = match kernel.sq_moment_closed(j) {
            Some(cf) => {
                check_agreement(cf, nu_num)?;
                cf
            }
            None => nu_num,
        };
        mu.push(mu_j);
        nu.push(nu_j);
    }

    let k0conv = tabulate_convolution(kernel, quad, false);
    let k1conv = tabulate_convolution(kernel, quad, true);

    let mu2 = mu[2];
    let kappa0 = k0conv.product_integral(&k0conv)
        - (2.0 / mu2) * k0conv.product_integral(&k1conv)
        + (1.0 / (mu2 * mu2)) * k1conv.product_integral(&k1conv);

    Ok(KernelInfo {
        kernel,
        mu,
        nu,
        k0conv,
        k1conv,
        kappa0,
    })
}

fn check_agreement(closed: f64, numeric: f64) -> Result<()> {
    let gap = (closed - numeric).abs() / closed.abs().max(1.0);
    if gap > 1e-8 {
        Err(Error::QuadratureNonconvergence { achieved: gap })
    } else {
        Ok(())
    }
}

/// Tabulate the self-convolution of K (or of u K(u) when `first_moment`)
/// on a uniform grid over the doubled support.
fn tabulate_convolution(kernel: Kernel, quad: &QuadratureSpec, first_moment: bool) -> ConvTable {
    let (lo, hi) = kernel.support();
    let (clo, chi) = (2.0 * lo, 2.0 * hi);
    let n = CONV_TABLE_POINTS;
    let step = (chi - clo) / (n - 1) as f64;
    // the inner integrand is smooth on the overlap interval
    let inner = QuadratureSpec::new(quad.nodes.min(501));
    let g = |u: f64| {
        let k = kernel.eval(u);
        if first_moment {
            u * k
        } else {
            k
        }
    };
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let v = clo + i as f64 * step;
            let a = lo.max(v - hi);
            let b = hi.min(v - lo);
            if a >= b {
                0.0
            } else {
                inner.integrate(|u| g(u) * g(v - u), a, b)
            }
        })
        .collect();
    ConvTable {
        lo: clo,
        hi: chi,
        values,
    }
}

/// kappa0 / nu0: the variance inflation of the projected response relative
/// to the local linear estimator.
pub fn variance_inflation_ratio(kernel: Kernel, quad: &QuadratureSpec) -> Result<f64> {
    let info = kernel_info(kernel, 1, quad)?;
    Ok(info.kappa0 / info.nu[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn eval_spot_values() {
        assert_eq!(Kernel::Epanechnikov.eval(0.0), 0.75);
        assert_eq!(Kernel::Epanechnikov.eval(1.2), 0.0);
        assert_eq!(Kernel::Uniform.eval(0.5), 0.5);
        assert_eq!(Kernel::Uniform.eval(-1.5), 0.0);
        assert!((Kernel::Gaussian.eval(0.0) - 0.3989422804014327).abs() < 1e-15);
    }

    #[test]
    fn symmetry_and_normalization() {
        let q = quad();
        for k in [Kernel::Epanechnikov, Kernel::Gaussian, Kernel::Uniform] {
            for i in 0..50 {
                let u = -2.5 + 0.1 * i as f64;
                assert_eq!(k.eval(u), k.eval(-u), "{k} asymmetric at {u}");
                assert!(k.eval(u) >= 0.0);
            }
            let (lo, hi) = k.support();
            let mass = q.integrate(|u| k.eval(u), lo, hi);
            assert!((mass - 1.0).abs() < 1e-10, "{k} mass {mass}");
        }
    }

    #[test]
    fn moment_values() {
        let q = quad();
        let epa = kernel_info(Kernel::Epanechnikov, 1, &q).unwrap();
        assert!((epa.mu[2] - 0.2).abs() < 1e-12);
        assert!((epa.nu[0] - 0.6).abs() < 1e-12);
        assert!((epa.nu[2] - 3.0 / 35.0).abs() < 1e-12);
        let uni = kernel_info(Kernel::Uniform, 1, &q).unwrap();
        assert!((uni.mu[2] - 1.0 / 3.0).abs() < 1e-12);
        assert!((uni.nu[0] - 0.5).abs() < 1e-12);
        let gau = kernel_info(Kernel::Gaussian, 1, &q).unwrap();
        assert!((gau.mu[2] - 1.0).abs() < 1e-12);
        // mu_0 = 1 and odd moments vanish for all families
        for info in [&epa, &uni, &gau] {
            assert!((info.mu[0] - 1.0).abs() < 1e-12);
            assert!(info.mu[1].abs() < 1e-12);
            assert!(info.mu[3].abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_consistency() {
        let q = quad();
        for k in [Kernel::Epanechnikov, Kernel::Gaussian, Kernel::Uniform] {
            let info = kernel_info(k, 1, &q).unwrap();
            // K0* integrates to 1
            assert!(
                (info.k0conv.integral() - 1.0).abs() < 1e-8,
                "{k}: int K0* = {}",
                info.k0conv.integral()
            );
            // K0*(0) = int K^2 = nu0
            assert!(
                (info.k0conv.eval(0.0) - info.nu[0]).abs() < 1e-8,
                "{k}: K0*(0) = {} vs nu0 = {}",
                info.k0conv.eval(0.0),
                info.nu[0]
            );
            assert!(info.kappa0 >= 0.0);
            assert!(info.mu.iter().chain(&info.nu).all(|v| v.is_finite()));
        }
    }

    #[test]
    fn epanechnikov_convolution_closed_form() {
        // K0*(v) for the Epanechnikov kernel on [0, 2]:
        // (9/16) * (2-v)^3 (v^2 + 6v + 4) / 30 evaluated by direct expansion;
        // check a few nodes against fresh Simpson quadrature at higher depth.
        let q = QuadratureSpec::new(4001);
        let info = kernel_info(Kernel::Epanechnikov, 1, &quad()).unwrap();
        for &v in &[0.0, 0.35, 0.8, 1.3, 1.9] {
            let reference = q.integrate(
                |u| Kernel::Epanechnikov.eval(u) * Kernel::Epanechnikov.eval(v - u),
                -1.0,
                1.0,
            );
            assert!(
                (info.k0conv.eval(v) - reference).abs() < 1e-6,
                "v={v}: {} vs {reference}",
                info.k0conv.eval(v)
            );
        }
    }

    #[test]
    fn variance_inflation_ratios() {
        let q = quad();
        let epa = variance_inflation_ratio(Kernel::Epanechnikov, &q).unwrap();
        assert!((epa - 1.38).abs() < 0.01, "epanechnikov ratio {epa}");
        // analytic value for the normal kernel: the integrand reduces to
        // phi_2(v)(3/2 - v^2/4) with phi_2 the N(0,2) density, giving
        // kappa0 = 1.6875/(2 sqrt(2 pi)) and ratio 1.19324269...
        let gau = variance_inflation_ratio(Kernel::Gaussian, &q).unwrap();
        assert!((gau - 1.193242693).abs() < 1e-6, "gaussian ratio {gau}");
        let uni = variance_inflation_ratio(Kernel::Uniform, &q).unwrap();
        assert!(uni >= 1.0, "uniform ratio {uni}");
    }

    #[test]
    fn info_reproducible() {
        let q = quad();
        let a = kernel_info(Kernel::Epanechnikov, 2, &q).unwrap();
        let b = kernel_info(Kernel::Epanechnikov, 2, &q).unwrap();
        assert_eq!(a.kappa0.to_bits(), b.kappa0.to_bits());
        assert_eq!(a.k0conv.values, b.k0conv.values);
    }

    #[test]
    fn kernel_name_round_trip() {
        for k in [Kernel::Epanechnikov, Kernel::Gaussian, Kernel::Uniform] {
            assert_eq!(k.to_string().parse::<Kernel>().unwrap(), k);
        }
        assert!("triweight".parse::<Kernel>().is_err());
    }
}
