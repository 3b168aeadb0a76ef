//! The five subcommands. Each writes its files under `out` and returns the
//! text to print plus the exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use wedgeflow::density::{density_expanded, normalize, NormalizedDensity, PolarGrid};
use wedgeflow::quadrature::QuadratureSpec;
use wedgeflow::sim::{
    biane_formula, compare, duality_check, simulate_srbm, survival_mc, DihedralGroup,
    PolarHistogram, PushScheme, SimConfig, SurvivalConfig,
};
use wedgeflow::validation::{validate, ValidateOptions};
use wedgeflow::WedgeError;

use crate::config::{Push, RunConfig};
use crate::csv::{num, Table};
use crate::exit::{CliError, EXIT_FAIL, EXIT_OK, EXIT_UNSTABLE};

pub struct Outcome {
    pub exit: u8,
    pub message: String,
}

fn write(out: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    fs::write(out.join(name), contents)?;
    Ok(())
}

fn key_values(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn normalized(cfg: &RunConfig) -> Result<NormalizedDensity, WedgeError> {
    let (g, d) = (cfg.geometry()?, cfg.drift()?);
    normalize(
        &density_expanded(&g, &d)?,
        QuadratureSpec::new(cfg.quad_nodes),
    )
}

/// `terms.csv` (the construction as built) and `grid.csv` (raw and
/// normalized values on a polar grid).
pub fn density(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let (g, d) = (cfg.geometry()?, cfg.drift()?);
    let sum = density_expanded(&g, &d)?;
    let den = normalize(&sum, QuadratureSpec::new(cfg.quad_nodes))?;

    let mut terms = Table::new(&["coeff", "d_x", "d_y", "label_kind", "label_angle"]);
    for t in sum.terms() {
        let (kind, angle) = match t.label {
            Some(l) => (l.kind().to_string(), num(l.angle())),
            None => (String::new(), String::new()),
        };
        terms.row([
            num(t.coeff),
            num(t.exponent.x),
            num(t.exponent.y),
            kind,
            angle,
        ]);
    }
    write(out, "terms.csv", &terms.finish())?;

    let r_max = cfg
        .grid_r_max
        .unwrap_or_else(|| den.radius_for_tail_mass(1e-4));
    let grid = PolarGrid::new(g.xi(), r_max, cfg.grid_n_theta, cfg.grid_n_r);
    let mut table = Table::new(&["theta", "r", "value", "normalized"]);
    for theta in grid.thetas() {
        for r in grid.radii() {
            let x = r * wedgeflow::geometry::unit(theta);
            table.row([num(theta), num(r), num(sum.eval(&x)), num(den.eval(&x))]);
        }
    }
    write(out, "grid.csv", &table.finish())?;

    let ell = (sum.len() - 1) / 2;
    Ok(Outcome {
        exit: EXIT_OK,
        message: format!(
            "ell={ell}\nterms={}\nnormalizing_constant={}\nquadrature_error_estimate={}\n",
            sum.len(),
            num(den.normalizing_constant()),
            num(den.quadrature_error_estimate())
        ),
    })
}

/// Runs every check; exit 1 if any fails.
pub fn validate_cmd(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let (g, d) = (cfg.geometry()?, cfg.drift()?);
    let opts = ValidateOptions {
        quad: QuadratureSpec::new(cfg.quad_nodes),
        interior_theta: cfg.interior_theta,
        interior_r: cfg.interior_r,
        face_points: cfg.face_points,
        lambdas: cfg.lambdas,
        perturb: cfg.perturb,
        ..ValidateOptions::default()
    };
    let report = validate(&g, &d, &opts)?;
    let mut text = String::new();
    if report.passed {
        text.push_str("all checks passed\n");
    } else {
        let _ = writeln!(text, "failed checks: {}", report.failures.join(", "));
    }
    text.push_str(&key_values(&report.to_key_values()));
    write(out, "report.txt", &text)?;
    Ok(Outcome {
        exit: if report.passed { EXIT_OK } else { EXIT_FAIL },
        message: text,
    })
}

/// Histogram of the simulated process and, when the closed form exists,
/// its distance to it.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let (g, d) = (cfg.geometry()?, cfg.drift()?);
    let den = match normalized(cfg) {
        Ok(den) => Some(den),
        Err(e @ WedgeError::Unstable { .. }) => return Err(e.into()),
        Err(WedgeError::NotSumOfExponentials { .. } | WedgeError::DegenerateDrift(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let template = match (cfg.hist_r_max, &den) {
        (Some(r), _) => PolarHistogram::new(g.xi(), r, cfg.hist_n_theta, cfg.hist_n_r),
        (None, Some(den)) => PolarHistogram::for_density(den, cfg.hist_n_theta, cfg.hist_n_r),
        (None, None) => PolarHistogram::new(g.xi(), 10.0, cfg.hist_n_theta, cfg.hist_n_r),
    };
    let sim = SimConfig {
        dt: cfg.dt,
        steps: cfg.steps,
        paths: cfg.paths,
        seed: cfg.seed,
        start: cfg.start,
        burn_in: cfg.burn_in,
        push: match cfg.push {
            Push::Mirror => PushScheme::Mirror,
            Push::Project => PushScheme::Project,
        },
        noise: true,
    };
    let res = simulate_srbm(&g, &d, &sim, &template)?;
    write(out, "histogram.csv", &res.histogram.to_csv())?;

    let (halves, halves_se) = res.halves_l1();
    let mut kv = vec![
        ("visits".to_string(), res.visits.to_string()),
        (
            "vertex_projections".into(),
            res.vertex_projections.to_string(),
        ),
        ("mean_radius".into(), num(res.mean_radius)),
        ("mean_radius_se".into(), num(res.mean_radius_se)),
        ("halves_l1".into(), num(halves)),
        ("halves_l1_se".into(), num(halves_se)),
        ("unstable".into(), res.unstable.to_string()),
    ];
    if let Some(den) = &den {
        let c = compare(&res, den);
        kv.extend([
            ("l1".into(), num(c.l1)),
            ("l1_noise".into(), num(c.l1_noise)),
            ("l2".into(), num(c.l2)),
            ("closed_form_tail_mass".into(), num(c.tail_mass)),
        ]);
    }
    let text = key_values(&kv);
    write(out, "comparison.txt", &text)?;
    Ok(Outcome {
        exit: if res.unstable { EXIT_UNSTABLE } else { EXIT_OK },
        message: text,
    })
}

/// Monte Carlo survival from `-x` against the group formula; exit 1 if they
/// differ by more than 3 standard errors.
pub fn survival(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let (g, d) = (cfg.geometry()?, cfg.drift()?);
    let group = DihedralGroup::for_angle(g.xi())?;
    let formula = biane_formula(&group, &d, &cfg.x)?;
    let sc = SurvivalConfig {
        dt: cfg.survival_dt,
        paths: cfg.survival_paths,
        seed: cfg.seed,
    };
    let e = survival_mc(&g, &d, &cfg.x, cfg.horizon, &sc)?;
    let z = if e.standard_error > 0.0 {
        (e.estimate - formula) / e.standard_error
    } else if e.estimate == formula {
        0.0
    } else {
        f64::INFINITY
    };
    let mut table = Table::new(&[
        "x_x",
        "x_y",
        "horizon",
        "estimate",
        "standard_error",
        "half_horizon_estimate",
        "formula",
    ]);
    table.row([
        num(cfg.x.x),
        num(cfg.x.y),
        num(cfg.horizon),
        num(e.estimate),
        num(e.standard_error),
        num(e.half_horizon_estimate),
        num(formula),
    ]);
    write(out, "survival.csv", &table.finish())?;
    let agree = z.abs() <= 3.0;
    let text = key_values(&[
        ("estimate".into(), num(e.estimate)),
        ("standard_error".into(), num(e.standard_error)),
        ("half_horizon_estimate".into(), num(e.half_horizon_estimate)),
        (
            "horizon_converged".into(),
            e.horizon_converged().to_string(),
        ),
        ("formula".into(), num(formula)),
        ("z".into(), num(z)),
        ("agree".into(), agree.to_string()),
    ]);
    Ok(Outcome {
        exit: if agree { EXIT_OK } else { EXIT_FAIL },
        message: text,
    })
}

/// Stationary mass below `x` against the survival probability from `-x`;
/// exit 1 if they differ by more than `1e-6` plus the quadrature error.
pub fn duality(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let (g, d) = (cfg.geometry()?, cfg.drift()?);
    let c = duality_check(&g, &d, &cfg.x, QuadratureSpec::new(cfg.quad_nodes))?;
    let mut table = Table::new(&[
        "x_x",
        "x_y",
        "lhs",
        "rhs",
        "diff",
        "quadrature_error_estimate",
    ]);
    table.row([
        num(cfg.x.x),
        num(cfg.x.y),
        num(c.lhs),
        num(c.rhs),
        num(c.diff),
        num(c.quadrature_error_estimate),
    ]);
    write(out, "duality.csv", &table.finish())?;
    let agree = c.diff.abs() <= 1e-6 + c.quadrature_error_estimate;
    let text = key_values(&[
        ("lhs".into(), num(c.lhs)),
        ("rhs".into(), num(c.rhs)),
        ("diff".into(), num(c.diff)),
        (
            "quadrature_error_estimate".into(),
            num(c.quadrature_error_estimate),
        ),
        ("agree".into(), agree.to_string()),
    ]);
    Ok(Outcome {
        exit: if agree { EXIT_OK } else { EXIT_FAIL },
        message: text,
    })
}
