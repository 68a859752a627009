use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

use kdtli::alignment;
use kdtli::coefficients::Motion;
use kdtli::constants::ANGSTROM3;
use kdtli::fitting::{self, FitOptions, FitSetup};
use kdtli::oracle;
use kdtli::pattern;

use crate::config::RunConfig;
use crate::dataset;
use crate::output::{emit, write_pairs, Cell, Table};

/// Exit status for a completed run whose checks failed.
pub const CHECKS_FAILED: u8 = 1;
pub const NOT_CONVERGED: u8 = 2;

/// Relative systematic uncertainties of laser power and vertical waist.
const POWER_SYSTEMATIC: f64 = 0.05;
const WAIST_SYSTEMATIC: f64 = 0.10;
const CURVE_POINTS: usize = 101;

/// `points` values from `lo` to `hi` inclusive; a single point sits at `lo`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        bail!("--points must be at least 1");
    }
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        bail!("range must be finite with max >= min, got [{lo}, {hi}]");
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { hi } else { lo + step * i as f64 }).collect())
}

pub struct CurveArgs<'a> {
    pub config: &'a Path,
    pub xi: Vec<f64>,
    pub classical: bool,
    pub phi0: Option<f64>,
    pub n0: Option<f64>,
    pub power: Option<f64>,
    pub velocity: Option<f64>,
}

pub fn visibility_curve<W: Write>(args: CurveArgs, out: W, gnuplot: Option<&Path>) -> Result<u8> {
    let cfg = RunConfig::from_path(args.config)?;
    let (phi0, n0) = match (args.phi0, args.n0) {
        (Some(p), Some(n)) => (p, n),
        (p, n) => {
            let Some(power) = args.power else {
                bail!("give both --phi0 and --n0, or --power to derive them from the config");
            };
            let v = args.velocity.unwrap_or(cfg.mean_v);
            let derived = cfg.interferometer(power)?.interaction(&cfg.molecule, v)?;
            (p.unwrap_or(derived.phi0), n.unwrap_or(derived.n0))
        }
    };
    if !(phi0.is_finite() && phi0 >= 0.0 && n0.is_finite() && n0 >= 0.0) {
        bail!("phi0 and n0 must be nonnegative, got {phi0} and {n0}");
    }
    if args.xi.iter().any(|&x| x < 0.0) {
        bail!("Talbot parameter must be nonnegative");
    }
    let mut header = vec!["xi", "V_qm"];
    if args.classical {
        header.push("V_cl");
    }
    let mut table = Table::new(header);
    for &xi in &args.xi {
        let mut row = vec![Cell::Num(xi), Cell::Num(pattern::visibility(Motion::Quantum, xi, phi0, n0, cfg.f1, cfg.f3))];
        if args.classical {
            row.push(Cell::Num(pattern::visibility(Motion::Classical, xi, phi0, n0, cfg.f1, cfg.f3)));
        }
        table.push(row);
    }
    emit(&table, out, gnuplot)?;
    Ok(0)
}

pub fn power_scan<W: Write>(config: &Path, powers: Vec<f64>, out: W, gnuplot: Option<&Path>) -> Result<u8> {
    let cfg = RunConfig::from_path(config)?;
    if powers.iter().any(|&p| p < 0.0) {
        bail!("laser power must be nonnegative");
    }
    let scan = pattern::power_scan(&cfg.molecule, &cfg.interferometer(0.0)?, &cfg.velocities()?, &powers)?;
    let mut table = Table::new(vec!["P_W", "V_qm_avg", "V_cl_avg"]);
    for p in scan {
        table.push(vec![Cell::Num(p.power), Cell::Num(p.visibility_qm), Cell::Num(p.visibility_cl)]);
    }
    emit(&table, out, gnuplot)?;
    Ok(0)
}

pub fn synthesize<W: Write>(config: &Path, powers: Vec<f64>, noise: f64, seed: Option<u64>, out: W) -> Result<u8> {
    let cfg = RunConfig::from_path(config)?;
    let data = fitting::synthesize(
        &cfg.molecule,
        &cfg.interferometer(0.0)?,
        &cfg.velocities()?,
        &powers,
        noise,
        seed.unwrap_or(cfg.seed),
    )?;
    let mut table = Table::new(dataset::HEADER.to_vec());
    for p in &data.points {
        table.push(vec![Cell::Num(p.power), Cell::Num(p.visibility), Cell::Num(p.sigma)]);
    }
    table.write_csv(out)?;
    Ok(0)
}

pub struct FitArgs<'a> {
    pub config: &'a Path,
    pub data: &'a Path,
    pub motion: Motion,
    pub systematics: bool,
    pub curve_out: Option<PathBuf>,
}

pub fn fit<W: Write>(args: FitArgs, mut out: W, gnuplot: Option<&Path>) -> Result<u8> {
    let cfg = RunConfig::from_path(args.config)?;
    let data = dataset::read(args.data)?;
    let setup = FitSetup {
        molecule: cfg.molecule.clone(),
        interferometer: cfg.interferometer(0.0)?,
        velocities: cfg.velocities()?,
        motion: args.motion,
    };
    let options = FitOptions::default();
    // The config's molecular parameters are the starting point; a zero cross
    // section starts well below the scale where absorption matters.
    let alpha0 = cfg.molecule.alpha_opt;
    if !(alpha0 > 0.0) {
        bail!("[molecule] alpha_A3 must be positive to start a fit");
    }
    let sigma0 = match cfg.molecule.sigma_abs {
        s if s > 0.0 => s,
        _ => 1e-3 * setup.balanced_sigma(alpha0)?,
    };
    let initial = (alpha0, sigma0);
    let r = fitting::fit(&data, &setup, initial, &options)?;

    let upper = r.sigma_upper_bound.map_or(Cell::Text("none".into()), Cell::Num);
    let mut pairs = vec![
        ("model", Cell::Text(r.motion.label().into())),
        ("points", Cell::Int(data.points.len() as u64)),
        ("alpha_A3", Cell::Num(r.alpha / ANGSTROM3)),
        ("alpha_err_A3", Cell::Num(r.alpha_err / ANGSTROM3)),
        ("sigma_abs_m2", Cell::Num(r.sigma_abs)),
        ("sigma_abs_err_m2", Cell::Num(r.sigma_err)),
        ("sigma_abs_upper_m2", upper),
        ("chi2", Cell::Num(r.chi2)),
        ("dof", Cell::Int(r.dof as u64)),
        ("chi2_per_dof", Cell::Num(r.chi2_per_dof())),
        ("iterations", Cell::Int(r.iterations as u64)),
        ("converged", Cell::Text(r.converged.to_string())),
    ];
    if args.systematics && r.converged {
        let band = fitting::systematic_band(&data, &setup, &r, POWER_SYSTEMATIC, WAIST_SYSTEMATIC, &options)?;
        pairs.extend([
            ("alpha_sys_lo_A3", Cell::Num(band.alpha.0 / ANGSTROM3)),
            ("alpha_sys_hi_A3", Cell::Num(band.alpha.1 / ANGSTROM3)),
            ("sigma_abs_sys_lo_m2", Cell::Num(band.sigma_abs.0)),
            ("sigma_abs_sys_hi_m2", Cell::Num(band.sigma_abs.1)),
            ("systematics_converged", Cell::Text(band.all_converged.to_string())),
        ]);
    }
    write_pairs(&mut out, &pairs)?;

    let p_max = data.powers().into_iter().fold(0.0, f64::max);
    let mut curve = Table::new(vec!["P_W", "V_model"]);
    for p in linspace(0.0, p_max, CURVE_POINTS)? {
        curve.push(vec![Cell::Num(p), Cell::Num(setup.model(r.alpha, r.sigma_abs, p)?)]);
    }
    match &args.curve_out {
        Some(path) => emit(&curve, std::fs::File::create(path)?, gnuplot)?,
        None => {
            writeln!(out)?;
            emit(&curve, &mut out, gnuplot)?;
        }
    }
    Ok(if r.converged { 0 } else { NOT_CONVERGED })
}

pub fn alignment_check<W: Write>(config: &Path, out: W) -> Result<u8> {
    let cfg = RunConfig::from_path(config)?;
    let report = alignment::check(&cfg.alignment_state()?, &cfg.interferometer(0.0)?)?;
    let mut table = Table::new(vec!["criterion", "measured", "limit", "unit", "status"]);
    for row in &report.rows {
        table.push(vec![
            Cell::Text(row.criterion.label().into()),
            Cell::Num(row.measured),
            Cell::Num(row.limit),
            Cell::Text(row.criterion.unit().into()),
            Cell::Text(if row.passed { "PASS" } else { "FAIL" }.into()),
        ]);
    }
    table.write_csv(out)?;
    Ok(if report.all_passed() { 0 } else { CHECKS_FAILED })
}

pub fn oracle_verify<W: Write>(fast: bool, out: W) -> Result<u8> {
    let report = oracle::verify_all(fast);
    let mut table = Table::new(vec!["check", "max_error", "tolerance", "points", "status"]);
    for c in &report.checks {
        table.push(vec![
            Cell::Text(c.name.clone()),
            Cell::Num(c.max_error),
            Cell::Num(c.tolerance),
            Cell::Int(c.points as u64),
            Cell::Text(if c.passed() { "PASS" } else { "FAIL" }.into()),
        ]);
    }
    table.write_csv(out)?;
    Ok(if report.all_passed() { 0 } else { NOT_CONVERGED })
}
