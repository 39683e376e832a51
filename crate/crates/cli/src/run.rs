//! Subcommand dispatch.

use crate::load::{load_bivariate, load_vcm};
use crate::output::{fmt4, json_with_provenance, sig17, Provenance};
use crate::{Cmd, FamilyArg, FitArgs, Format, InferArgs, SimArgs, SstArg, VariantArg};
use lpanova::data::{Dataset, FitConfig, GridSpec};
use lpanova::vcm::VcmDataset;
use lpanova::*;
use serde::Serialize;
use std::result::Result;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable/malformed input: exit 1.
    Input(String),
    /// Library failure, classified by the caller: exit 1 or 2.
    Lib(lpanova::Error),
}

impl From<lpanova::Error> for CliError {
    fn from(e: lpanova::Error) -> Self {
        CliError::Lib(e)
    }
}

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Resolve the grid and fit configuration from the flags and data range.
fn resolve(args: &FitArgs, data: &Dataset) -> Result<FitConfig, CliError> {
    if !(args.h > 0.0 && args.h.is_finite()) {
        return Err(input_err(format!("--h must be positive and finite, got {}", args.h)));
    }
    if args.grid_count < 2 {
        return Err(input_err(format!(
            "--grid-count must be at least 2, got {}",
            args.grid_count
        )));
    }
    let explicit = args.grid_start.is_some() || args.grid_stop.is_some();
    if explicit && args.padded {
        return Err(input_err("--padded conflicts with --grid-start/--grid-stop"));
    }
    let grid = match (args.grid_start, args.grid_stop, args.grid_step) {
        (Some(start), Some(stop), Some(step)) => {
            if step <= 0.0 {
                return Err(input_err(format!("--grid-step must be positive, got {step}")));
            }
            GridSpec::from_step(start, stop, step)?
        }
        (Some(start), Some(stop), None) => GridSpec::new(start, stop, args.grid_count)?,
        (None, None, Some(_)) => {
            return Err(input_err("--grid-step requires --grid-start and --grid-stop"));
        }
        (None, None, None) => {
            if args.padded {
                GridSpec::padded(data, args.kernel.into(), args.h, args.grid_count)?
            } else {
                GridSpec::data_range(data, args.grid_count)?
            }
        }
        _ => {
            return Err(input_err("--grid-start and --grid-stop must be given together"));
        }
    };
    Ok(FitConfig::new(args.p, args.h, args.kernel.into(), grid)?)
}

fn resolve_vcm(args: &FitArgs, data: &VcmDataset) -> Result<FitConfig, CliError> {
    // reuse the bivariate resolution against the index range
    let proxy = Dataset::new(data.u().to_vec(), vec![0.0; data.len()])?;
    resolve(args, &proxy)
}

pub fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Fit(args) => fit_cmd(args),
        Cmd::LocalAnova(args) => local_anova_cmd(args),
        Cmd::Anova(args) => anova_cmd(args),
        Cmd::Ftest(args) => ftest_cmd(args),
        Cmd::Vcm(args) => vcm_cmd(args),
        Cmd::Hstar(args) => hstar_cmd(args),
        Cmd::Simulate(args) => simulate_cmd(args),
    }
}

fn fit_cmd(args: FitArgs) -> Result<(), CliError> {
    let data = load_bivariate(&args.input, args.has_header)?;
    let config = resolve(&args, &data)?;
    let prov = Provenance::new("fit", config, None);
    let curve = curve(&data, &config);
    let feasible: Vec<(usize, &LocalFit)> = curve.feasible().collect();
    if feasible.is_empty() {
        return Err(lpanova::Error::AllPointsInfeasible.into());
    }
    let failures = curve.failures().count();
    if failures > 0 {
        eprintln!("lpanova: {failures} of {} grid points infeasible, skipped", config.grid.count);
    }
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Point<'a> {
                x0: f64,
                beta: &'a [f64],
                fhat: f64,
            }
            let points: Vec<Point> = feasible
                .iter()
                .map(|(_, f)| Point {
                    x0: f.x0,
                    beta: &f.beta,
                    fhat: f.fhat,
                })
                .collect();
            println!("{}", json_with_provenance(&prov, points));
        }
        Format::Csv | Format::Text => {
            let (num, sep): (fn(f64) -> String, &str) = match args.format {
                Format::Csv => (sig17, ","),
                _ => (fmt4, "\t"),
            };
            print!("{}", prov.comment_header());
            let betas: Vec<String> = (0..=config.degree).map(|j| format!("beta_{j}")).collect();
            println!("x0{sep}{}{sep}fhat", betas.join(sep));
            for (_, f) in &feasible {
                let b: Vec<String> = f.beta.iter().map(|&v| num(v)).collect();
                println!("{}{sep}{}{sep}{}", num(f.x0), b.join(sep), num(f.fhat));
            }
        }
    }
    Ok(())
}

fn local_anova_cmd(args: FitArgs) -> Result<(), CliError> {
    let data = load_bivariate(&args.input, args.has_header)?;
    let config = resolve(&args, &data)?;
    let prov = Provenance::new("local-anova", config, None);
    let curve = anova_curve(&data, &config);
    let rows: Vec<(&lpanova::local_anova::LocalAnova, f64)> = curve
        .locals
        .iter()
        .zip(&curve.fhat)
        .filter_map(|(l, &f)| l.as_ref().ok().map(|l| (l, f)))
        .collect();
    if rows.is_empty() {
        return Err(lpanova::Error::AllPointsInfeasible.into());
    }
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                #[serde(flatten)]
                local: &'a lpanova::local_anova::LocalAnova,
                fhat: f64,
            }
            let out: Vec<Row> = rows.iter().map(|&(l, f)| Row { local: l, fhat: f }).collect();
            println!("{}", json_with_provenance(&prov, out));
        }
        Format::Csv | Format::Text => {
            let (num, sep): (fn(f64) -> String, &str) = match args.format {
                Format::Csv => (sig17, ","),
                _ => (fmt4, "\t"),
            };
            print!("{}", prov.comment_header());
            println!("x0{sep}fhat{sep}sst{sep}sse{sep}ssr{sep}r2");
            for (l, f) in rows {
                let r2 = l.r2.map(num).unwrap_or_default();
                println!(
                    "{}{sep}{}{sep}{}{sep}{}{sep}{}{sep}{r2}",
                    num(l.x0),
                    num(f),
                    num(l.sst),
                    num(l.sse),
                    num(l.ssr)
                );
            }
        }
    }
    Ok(())
}

fn variant_of(v: VariantArg) -> FVariant {
    match v {
        VariantArg::Standard => FVariant::Standard,
        VariantArg::Conservative => FVariant::Conservative,
    }
}

fn sst_of(s: SstArg) -> SstConvention {
    match s {
        SstArg::Sample => SstConvention::Sample,
        SstArg::Integrated => SstConvention::Integrated,
    }
}

fn anova_cmd(args: InferArgs) -> Result<(), CliError> {
    let data = load_bivariate(&args.fit.input, args.fit.has_header)?;
    let config = resolve(&args.fit, &data)?;
    let prov = Provenance::new("anova", config, None);
    let global = global_anova(&data, &config)?;
    let trace = hstar_trace(&data, &config)?;
    let table = lpanova::inference::anova_table(&global, trace, &config, variant_of(args.variant))?;
    let r2 = global.r2(sst_of(args.sst));
    match args.fit.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                table: AnovaTable,
                r2: f64,
            }
            println!("{}", json_with_provenance(&prov, Out { table, r2 }));
        }
        Format::Csv => {
            print!("{}", prov.comment_header());
            println!("source,df,ss,ms,f,p");
            for row in &table.rows {
                println!(
                    "{},{},{},{},{},{}",
                    row.source,
                    sig17(row.df),
                    sig17(row.ss_raw),
                    row.ms.map(sig17).unwrap_or_default(),
                    row.f.map(sig17).unwrap_or_default(),
                    row.p_value.map(sig17).unwrap_or_default()
                );
            }
            println!("r2,{},,,,", sig17(r2));
        }
        Format::Text => {
            print!("{}", prov.comment_header());
            println!("{:<12}{:>10}{:>12}{:>12}{:>10}{:>10}", "Source", "df", "SS", "MS", "F", "p");
            for row in &table.rows {
                println!(
                    "{:<12}{:>10}{:>12}{:>12}{:>10}{:>10}",
                    row.source,
                    fmt4(row.df),
                    fmt4(row.ss_raw),
                    row.ms.map(fmt4).unwrap_or_default(),
                    row.f.map(fmt4).unwrap_or_default(),
                    row.p_value.map(fmt4).unwrap_or_default()
                );
            }
            println!("tr(H*) = {}  raw total SS = {}", fmt4(trace), fmt4(table.total_sample_raw));
            println!("R2 = {}", fmt4(r2));
        }
    }
    Ok(())
}

fn ftest_cmd(args: InferArgs) -> Result<(), CliError> {
    let data = load_bivariate(&args.fit.input, args.fit.has_header)?;
    let config = resolve(&args.fit, &data)?;
    let prov = Provenance::new("ftest", config, None);
    let global = global_anova(&data, &config)?;
    let trace = hstar_trace(&data, &config)?;
    let result = f_test(&global, trace, variant_of(args.variant))?;
    match args.fit.format {
        Format::Text => {
            print!("{}", prov.comment_header());
            println!("F = {}  df = ({}, {})  p = {}", fmt4(result.f_stat), fmt4(result.df_model), fmt4(result.df_resid), fmt4(result.p_value));
        }
        _ => println!("{}", json_with_provenance(&prov, result)),
    }
    Ok(())
}

fn vcm_cmd(args: InferArgs) -> Result<(), CliError> {
    let data = load_vcm(&args.fit.input, args.fit.has_header)?;
    let config = resolve_vcm(&args.fit, &data)?;
    let prov = Provenance::new("vcm", config, None);
    let global = vcm_global(&data, &config, true)?;
    let fits: Vec<VcmFit> = config
        .grid
        .points()
        .filter_map(|u0| vcm_local_fit(&data, u0, &config).ok())
        .collect();
    if fits.is_empty() {
        return Err(lpanova::Error::AllPointsInfeasible.into());
    }
    match args.fit.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Point<'a> {
                u0: f64,
                a_hat: &'a [f64],
                ghat: f64,
            }
            #[derive(Serialize)]
            struct Out<'a> {
                curve: Vec<Point<'a>>,
                anova: &'a lpanova::vcm::VcmGlobalAnova,
            }
            let curve: Vec<Point> = fits
                .iter()
                .map(|f| Point {
                    u0: f.u0,
                    a_hat: &f.a_hat,
                    ghat: f.ghat,
                })
                .collect();
            println!("{}", json_with_provenance(&prov, Out { curve, anova: &global }));
        }
        Format::Csv | Format::Text => {
            let (num, sep): (fn(f64) -> String, &str) = match args.fit.format {
                Format::Csv => (sig17, ","),
                _ => (fmt4, "\t"),
            };
            print!("{}", prov.comment_header());
            let heads: Vec<String> = (1..=data.dim()).map(|k| format!("a_{k}")).collect();
            println!("u0{sep}{}{sep}ghat", heads.join(sep));
            for f in &fits {
                let a: Vec<String> = f.a_hat.iter().map(|&v| num(v)).collect();
                println!("{}{sep}{}{sep}{}", num(f.u0), a.join(sep), num(f.ghat));
            }
            eprintln!(
                "lpanova: vcm global: sse {} ssr {} r2 {} tr(Hu*) {}",
                fmt4(global.anova.sse),
                fmt4(global.anova.ssr),
                fmt4(global.anova.r2(sst_of(args.sst))),
                global.hu_trace.map(fmt4).unwrap_or_default()
            );
        }
    }
    Ok(())
}

fn hstar_cmd(args: FitArgs) -> Result<(), CliError> {
    let data = load_bivariate(&args.input, args.has_header)?;
    let config = resolve(&args, &data)?;
    let prov = Provenance::new("hstar", config, None);
    let hs = hstar(&data, &config)?;
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                n: usize,
                trace: f64,
                skipped_grid_points: Vec<f64>,
                interior_rows: Vec<usize>,
                /// Row-major n x n.
                matrix: Vec<f64>,
            }
            let out = Out {
                n: hs.n,
                trace: hs.trace,
                skipped_grid_points: hs.skipped.clone(),
                interior_rows: hs.interior_rows(),
                matrix: hs.matrix.clone(),
            };
            println!("{}", json_with_provenance(&prov, out));
        }
        Format::Text => {
            print!("{}", prov.comment_header());
            println!("n = {}", hs.n);
            println!("tr(H*) = {}", fmt4(hs.trace));
            println!("skipped grid points = {}", hs.skipped.len());
            println!("interior rows = {}", hs.interior_rows().len());
        }
        Format::Csv => {
            print!("{}", prov.comment_header());
            println!("# trace: {}", sig17(hs.trace));
            println!("# skipped grid points: {}", hs.skipped.len());
            for i in 0..hs.n {
                let row: Vec<String> =
                    (0..hs.n).map(|j| sig17(hs.get(i, j))).collect();
                println!("{}", row.join(","));
            }
        }
    }
    Ok(())
}

fn simulate_cmd(args: SimArgs) -> Result<(), CliError> {
    if args.h.is_empty() {
        return Err(input_err("--h requires at least one bandwidth"));
    }
    if args.reps == 0 {
        return Err(input_err("--reps must be positive"));
    }
    #[derive(Serialize)]
    struct SimConfig<'a> {
        family: String,
        sigma: f64,
        a_values: &'a [f64],
        n: usize,
        h: &'a [f64],
        p: usize,
        kernel: Kernel,
        grid_count: usize,
        reps: usize,
        level: f64,
    }
    let config = SimConfig {
        family: format!("{:?}", args.family),
        sigma: args.sigma,
        a_values: &args.a_values,
        n: args.n,
        h: &args.h,
        p: args.p,
        kernel: args.kernel.into(),
        grid_count: args.grid_count,
        reps: args.reps,
        level: args.level,
    };
    let prov = Provenance::new("simulate", &config, Some(args.seed));

    let rsq_family = match args.family {
        FamilyArg::Bump => Some(Family::Bump { sigma: args.sigma }),
        FamilyArg::TwistedPear => Some(Family::TwistedPear { sigma: args.sigma }),
        _ => None,
    };

    if let Some(path) = &args.emit_data {
        let family = rsq_family
            .unwrap_or_else(|| scaled_of(args.family).with_effect(args.a_values[0]));
        let gen = Generator { family, n: args.n };
        let data = generate(&gen, derive_seed(args.seed, 1));
        let mut out = String::from("x,y\n");
        for (x, y) in data.x().iter().zip(data.y()) {
            out.push_str(&format!("{},{}\n", sig17(*x), sig17(*y)));
        }
        std::fs::write(path, out)
            .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    }

    match rsq_family {
        Some(family) => {
            let gen = Generator { family, n: args.n };
            let study = rsq_study(
                &gen,
                args.p,
                args.h[0],
                args.kernel.into(),
                args.grid_count,
                args.reps,
                args.seed,
            )?;
            match args.format {
                Format::Json => println!("{}", json_with_provenance(&prov, &study)),
                Format::Csv | Format::Text => {
                    let (num, sep): (fn(f64) -> String, &str) = match args.format {
                        Format::Csv => (sig17, ","),
                        _ => (fmt4, "\t"),
                    };
                    print!("{}", prov.comment_header());
                    println!("estimator{sep}mean{sep}sd{sep}min{sep}q1{sep}median{sep}q3{sep}max");
                    for (name, r) in [
                        ("r2_anova", &study.anova),
                        ("r2_anova_adj", &study.anova_adj),
                        ("r2_rho", &study.rho),
                        ("r2_s", &study.s),
                        ("r2_linear", &study.linear),
                    ] {
                        let q: Vec<String> = r.quantiles.iter().map(|&v| num(v)).collect();
                        println!("{name}{sep}{}{sep}{}{sep}{}", num(r.mean), num(r.sd), q.join(sep));
                    }
                    eprintln!("lpanova: {} replicates, {} failed", study.replicates, study.failed);
                }
            }
        }
        None => {
            let rows = power_study(
                scaled_of(args.family),
                &args.a_values,
                args.n,
                &args.h,
                args.p,
                args.kernel.into(),
                args.grid_count,
                args.reps,
                args.level,
                args.seed,
            )?;
            match args.format {
                Format::Json => println!("{}", json_with_provenance(&prov, &rows)),
                Format::Csv | Format::Text => {
                    let (num, sep): (fn(f64) -> String, &str) = match args.format {
                        Format::Csv => (sig17, ","),
                        _ => (fmt4, "\t"),
                    };
                    print!("{}", prov.comment_header());
                    println!("a{sep}n{sep}h{sep}reject_rate{sep}mc_se{sep}failed");
                    for r in &rows {
                        println!(
                            "{}{sep}{}{sep}{}{sep}{}{sep}{}{sep}{}",
                            num(r.a),
                            r.n,
                            num(r.h),
                            num(r.reject_rate),
                            num(r.mc_se),
                            r.failed
                        );
                    }
                }
            }
        }
    }
    Ok(())
}

fn scaled_of(f: FamilyArg) -> ScaledFamily {
    match f {
        FamilyArg::BumpScaled => ScaledFamily::BumpScaled,
        FamilyArg::PearScaled => ScaledFamily::PearScaled,
        _ => unreachable!("non-scaled families handled earlier"),
    }
}
