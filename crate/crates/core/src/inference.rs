//! F statistics with real-valued degrees of freedom, the F-distribution CDF
//! via the regularized incomplete beta function, and ANOVA table rendering.

use serde::{Deserialize, Serialize};

use crate::data::FitConfig;
use crate::error::{Error, Result};
use crate::global_anova::GlobalAnova;

/// Which F statistic to form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FVariant {
    /// SSR/(tr-1) over SSE/(n-tr).
    Standard,
    /// Denominator (sum (Y_i-Ybar)^2 - SSR_raw)/(n-tr); absorbs boundary
    /// loss and is the default for hypothesis tests.
    Conservative,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FTestResult {
    pub f_stat: f64,
    pub df_model: f64,
    pub df_resid: f64,
    pub p_value: f64,
    pub variant: FVariant,
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cont_frac(a: f64, b: f64, x: f64) -> Result<f64> {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-12;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::QuadratureNonconvergence { achieved: EPS })
}

/// Regularized incomplete beta I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "regularized incomplete beta domain violation: a={a}, b={b}, x={x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let front = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cont_frac(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_cont_frac(b, a, 1.0 - x)? / b)
    }
}

/// CDF of the F distribution with real degrees of freedom (d1, d2).
pub fn f_cdf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "degrees of freedom must be positive: ({d1}, {d2})"
        )));
    }
    if x < 0.0 {
        return Err(Error::InvalidInput(format!("F argument must be >= 0: {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let t = d1 * x / (d1 * x + d2);
    reg_inc_beta(d1 / 2.0, d2 / 2.0, t)
}

/// Form the F statistic for no effect from the global decomposition and
/// tr(H*). SSE = 0 exactly yields an infinite F with p-value 0.
pub fn f_test(global: &GlobalAnova, trace: f64, variant: FVariant) -> Result<FTestResult> {
    let n = global.n as f64;
    let df_model = trace - 1.0;
    let df_resid = n - trace;
    if df_model <= 0.0 || df_resid <= 0.0 {
        return Err(Error::DegenerateDf { df_model, df_resid });
    }
    let ssr_raw = n * global.ssr;
    let denom_ss = match variant {
        FVariant::Standard => n * global.sse,
        FVariant::Conservative => n * global.sst_sample - ssr_raw,
    };
    if denom_ss < 0.0 {
        return Err(Error::NonpositiveDenominator { value: denom_ss });
    }
    let numerator = ssr_raw / df_model;
    let f_stat = if denom_ss == 0.0 {
        f64::INFINITY
    } else {
        numerator / (denom_ss / df_resid)
    };
    let p_value = 1.0 - f_cdf(f_stat, df_model, df_resid)?;
    Ok(FTestResult {
        f_stat,
        df_model,
        df_resid,
        p_value,
        variant,
    })
}

/// One source row of the ANOVA table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: String,
    pub df: f64,
    /// Raw (un-normalized) sum of squares.
    pub ss_raw: f64,
    /// Per-n scale, n^{-1} y^T (...) y.
    pub ss_per_n: f64,
    pub ms: Option<f64>,
    pub f: Option<f64>,
    pub p_value: Option<f64>,
}

/// Three-row ANOVA table plus the bandwidth-free sample total.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnovaTable {
    pub n: usize,
    pub bandwidth: f64,
    pub kernel: String,
    pub degree: usize,
    pub trace: f64,
    pub rows: Vec<AnovaRow>,
    /// Raw sample total sum of squares, free of the bandwidth; differs from
    /// the decomposed total under boundary effects.
    pub total_sample_raw: f64,
    pub f_test: FTestResult,
}

pub fn anova_table(
    global: &GlobalAnova,
    trace: f64,
    config: &FitConfig,
    variant: FVariant,
) -> Result<AnovaTable> {
    let ft = f_test(global, trace, variant)?;
    let n = global.n as f64;
    let ssr_raw = n * global.ssr;
    let sse_raw = n * global.sse;
    let rows = vec![
        AnovaRow {
            source: "Regression".to_string(),
            df: ft.df_model,
            ss_raw: ssr_raw,
            ss_per_n: global.ssr,
            ms: Some(ssr_raw / ft.df_model),
            f: Some(ft.f_stat),
            p_value: Some(ft.p_value),
        },
        AnovaRow {
            source: "Residual".to_string(),
            df: ft.df_resid,
            ss_raw: sse_raw,
            ss_per_n: global.sse,
            ms: Some(sse_raw / ft.df_resid),
            f: None,
            p_value: None,
        },
        AnovaRow {
            source: "Total".to_string(),
            df: n - 1.0,
            ss_raw: ssr_raw + sse_raw,
            ss_per_n: global.ssr + global.sse,
            ms: None,
            f: None,
            p_value: None,
        },
    ];
    Ok(AnovaTable {
        n: global.n,
        bandwidth: config.bandwidth,
        kernel: config.kernel.to_string(),
        degree: config.degree,
        trace,
        rows,
        total_sample_raw: n * global.sst_sample,
        f_test: ft,
    })
}

impl AnovaTable {
    /// Aligned text rendering, 4 decimals.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "ANOVA table for local polynomial regression (kernel={}, h={}, p={}, n={}, tr(H*)={:.4})\n",
            self.kernel, self.bandwidth, self.degree, self.n, self.trace
        ));
        out.push_str(&format!(
            "{:<12} {:>12} {:>14} {:>14} {:>12} {:>12}\n",
            "Source", "Df", "SS(raw)", "MS", "F", "p-value"
        ));
        for row in &self.rows {
            let ms = row.ms.map_or(String::new(), |v| format!("{v:.4}"));
            let f = row.f.map_or(String::new(), |v| format!("{v:.4}"));
            let p = row.p_value.map_or(String::new(), |v| format!("{v:.4e}"));
            out.push_str(&format!(
                "{:<12} {:>12.4} {:>14.4} {:>14} {:>12} {:>12}\n",
                row.source, row.df, row.ss_raw, ms, f, p
            ));
        }
        out.push_str(&format!(
            "{:<12} {:>12.4} {:>14.4}\n",
            "Total(smpl)",
            self.n as f64 - 1.0,
            self.total_sample_raw
        ));
        out
    }

    /// CSV rendering: one row per source, 17 significant digits.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("source,df,ss_raw,ss_per_n,ms,f,p_value\n");
        for row in &self.rows {
            let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.17e}"));
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{},{},{}\n",
                row.source,
                row.df,
                row.ss_raw,
                row.ss_per_n,
                opt(row.ms),
                opt(row.f),
                opt(row.p_value)
            ));
        }
        out
    }
}
