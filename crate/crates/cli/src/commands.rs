//! Subcommand implementations. Each writes CSV and returns an error carrying
//! its exit code.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use landau_core::bounds::{self, BoundInputs};
use landau_core::functionals::{entropy_production, entropy_production_direct, fisher_directional, MatrixField};
use landau_core::gamma2::{self, Family, FamilyKind, SphereGrid};
use landau_core::lifted::{self, LiftedField};
use landau_core::linalg::SymMat;
use landau_core::solver::{simulate, DiagnosticsRecord, RunOutput};

use crate::config::RunConfig;
use crate::error::CliError;

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn fmt_order(l: f64) -> String {
    if l.fract() == 0.0 {
        format!("{l:.0}")
    } else {
        format!("{l}")
    }
}

/// Column names of the simulation CSV.
pub fn simulate_header(d: usize, orders: &[f64]) -> Vec<String> {
    let mut h: Vec<String> = ["t", "H", "H_rel", "D_dasI", "D_rel", "ddtD_fd", "ddtD_formula", "good", "bad"]
        .map(String::from)
        .to_vec();
    h.extend((1..=d).map(|i| format!("T{i}")));
    h.extend((1..=d).map(|i| format!("Tex{i}")));
    h.extend(orders.iter().map(|&l| format!("m_{}", fmt_order(l))));
    h.extend(
        ["dv_monitor", "cerc_monitor", "mass", "energy", "key_lhs", "key_rhs", "l1_exact"].map(String::from),
    );
    h
}

fn simulate_row(r: &DiagnosticsRecord) -> Vec<String> {
    let mut row = vec![
        fmt_num(r.t),
        fmt_num(r.entropy),
        fmt_num(r.relative_entropy),
        fmt_num(r.d_dasi),
        fmt_num(r.d_rel),
        fmt_opt(r.ddt_fd),
        fmt_opt(r.ddt_formula),
        fmt_opt(r.good),
        fmt_opt(r.bad),
    ];
    row.extend(r.temperature.iter().map(|&x| fmt_num(x)));
    row.extend(r.temperature_exact.iter().map(|&x| fmt_num(x)));
    row.extend(r.moments.iter().map(|&(_, m)| fmt_num(m)));
    row.extend([
        fmt_num(r.dv_monitor),
        fmt_num(r.cerc_monitor),
        fmt_num(r.mass),
        fmt_num(r.energy),
        fmt_opt(r.key_lhs),
        fmt_opt(r.key_rhs),
        fmt_opt(r.l1_exact),
    ]);
    row
}

/// Runs a simulation and writes its CSV to `output` (or the configured path).
pub fn cmd_simulate(cfg: &RunConfig, output: Option<&Path>) -> Result<RunOutput, CliError> {
    let path = output
        .or(cfg.output.path.as_deref())
        .ok_or_else(|| CliError::Config("no output path (set [output] path or pass --output)".into()))?;
    let grid = cfg.build_grid()?;
    let f0 = cfg.initial_density(grid)?;
    let opts = cfg.diagnostics();
    let run = simulate(&f0, &cfg.solver_config(), &opts)?;
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(simulate_header(f0.dim(), &opts.moment_orders))?;
    for r in &run.records {
        w.write_record(simulate_row(r))?;
    }
    w.flush()?;
    Ok(run)
}

/// Flags of the `t0` subcommand.
#[derive(Debug, Clone, Copy)]
pub struct T0Args {
    pub d: usize,
    pub ell: f64,
    pub mbar: f64,
    pub tmax: f64,
    pub lambda: Option<f64>,
}

pub fn cmd_t0(args: &T0Args, out: &mut impl Write) -> Result<(), CliError> {
    let mut inp = BoundInputs::new(args.d, args.ell, args.mbar, args.tmax);
    if let Some(l) = args.lambda {
        inp.lambda = l;
    }
    let cfg_err = |e: landau_core::Error| CliError::Config(e.to_string());
    inp.validate().map_err(cfg_err)?;
    let explicit = bounds::t0_explicit(&inp).map_err(cfg_err)?;
    let implicit = bounds::t0_implicit(&inp)?;
    let cbar = bounds::constant_cbar(inp.d, inp.ell, inp.lambda).map_err(cfg_err)?;
    let lambda_delta = bounds::lambda_delta(inp.d, inp.ell, inp.t0_max, inp.mbar, inp.lambda).map_err(cfg_err)?;
    let alpha = bounds::alpha_lower(inp.t0_max, inp.d).map_err(cfg_err)?;
    let beta = bounds::beta_lower(inp.t0_max, inp.d).map_err(cfg_err)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "value"])?;
    for (k, v) in [
        ("lambda", inp.lambda),
        ("cbar", cbar),
        ("t0_explicit", explicit),
        ("t0_implicit", implicit),
        ("lambda_delta", lambda_delta),
        ("alpha_lower", alpha),
        ("beta_lower", beta),
    ] {
        w.write_record([k.to_string(), fmt_num(v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Flags of the `gamma2` subcommand.
#[derive(Debug, Clone)]
pub struct Gamma2Args {
    pub d: usize,
    pub family: Option<FamilyKind>,
    /// Explicit members; when empty the default family for `d` is scanned.
    pub members: Vec<Vec<f64>>,
    pub amplitude: f64,
    pub steps: usize,
    /// Circle points (d = 2) or colatitude rings (d = 3, twice as many longitudes).
    pub resolution: Option<usize>,
}

pub fn cmd_gamma2(args: &Gamma2Args, out: &mut impl Write) -> Result<gamma2::ScanResult, CliError> {
    let cfg_err = |e: landau_core::Error| CliError::Config(e.to_string());
    let family = if args.members.is_empty() {
        let fam = Family::default_for(args.d, args.amplitude, args.steps).map_err(cfg_err)?;
        if args.family.is_some_and(|k| k != fam.kind) {
            return Err(CliError::Config("non-default families need explicit --members".into()));
        }
        fam
    } else {
        let kind = args.family.ok_or_else(|| CliError::Config("--members requires --family".into()))?;
        Family { kind, members: args.members.clone() }
    };
    let grid = match (args.d, args.resolution) {
        (2, Some(n)) => SphereGrid::circle(n),
        (3, Some(n)) => SphereGrid::sphere(n, 2 * n),
        (d, _) => gamma2::default_grid(d),
    }
    .map_err(cfg_err)?;
    let scan = gamma2::scan_family(args.d, &family, Arc::new(grid)).map_err(cfg_err)?;
    let width = scan.rows.first().map_or(0, |r| r.params.len());
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header = family.kind.parameter_names(width);
    header.extend(["ratio", "fourth_lhs", "fourth_rhs"].map(String::from));
    w.write_record(&header)?;
    for r in &scan.rows {
        let mut row: Vec<String> = r.params.iter().map(|&x| fmt_num(x)).collect();
        row.extend([fmt_num(r.ratio), fmt_num(r.fourth_lhs), fmt_num(r.fourth_rhs)]);
        w.write_record(&row)?;
    }
    w.write_record(["min_ratio", "bound"])?;
    w.write_record([fmt_num(scan.min_ratio), fmt_num(scan.bound)])?;
    w.flush()?;
    Ok(scan)
}

/// One line of `lifted-verify` output.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedCheck {
    pub name: &'static str,
    pub value: f64,
    pub reference: Option<f64>,
}

/// Evaluates the two-particle identities on the configured initial condition.
pub fn lifted_checks(cfg: &RunConfig) -> Result<Vec<LiftedCheck>, CliError> {
    if cfg.grid.dimension != 2 {
        return Err(CliError::Config("lifted-verify needs dimension = 2".into()));
    }
    let f = cfg.initial_density(cfg.build_grid()?)?;
    let field = LiftedField::new(&f)?;
    let t = *f.temperature();
    let id = SymMat::identity(2);
    let k = lifted::lifted_k(&t)?;
    let good = lifted::good_term(&field, &k)?;
    let bad = lifted::bad_term(&f, &t)?;
    let check = |name, value, reference| LiftedCheck { name, value, reference: Some(reference) };
    Ok(vec![
        check(
            "tensorization_identity",
            lifted::lifted_fisher(&field, &lifted::lifted_constant(id)),
            2.0 * fisher_directional(&f, &MatrixField::Constant(id)),
        ),
        check(
            "tensorization_deviation",
            lifted::lifted_fisher(&field, &lifted::lifted_deviation(&t)),
            2.0 * fisher_directional(&f, &MatrixField::Constant(t.deviation())),
        ),
        check("tensorization_k", lifted::lifted_fisher(&field, &k), 2.0 * (entropy_production(&f, &t)? + 2.0)),
        check("bad_term_routes", bad, lifted::bad_term_relative_route(&field, &t)),
        check("entropy_production_routes", entropy_production(&f, &t)?, entropy_production_direct(&f)?),
        LiftedCheck { name: "good_term", value: good, reference: None },
        LiftedCheck { name: "ddt_formula", value: bad - good, reference: None },
    ])
}

pub fn cmd_lifted_verify(cfg: &RunConfig, out: &mut impl Write) -> Result<Vec<LiftedCheck>, CliError> {
    let checks = lifted_checks(cfg)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "value", "reference", "abs_diff"])?;
    for c in &checks {
        w.write_record([
            c.name.to_string(),
            fmt_num(c.value),
            fmt_opt(c.reference),
            fmt_opt(c.reference.map(|r| (c.value - r).abs())),
        ])?;
    }
    w.flush()?;
    Ok(checks)
}
