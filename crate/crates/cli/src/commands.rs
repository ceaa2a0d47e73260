use std::fs::File;
use std::path::Path;

use mmot_decouple::decouple::{
    build_decoupling, modica_check, verify_decoupled_pde, verify_global_inequality, verify_on_solution_identity,
};
use mmot_decouple::examples::{
    kink, run_ac_logsumexp, run_ac_quadratic, run_quadratic_coupling, ExampleRun, QuadraticCouplingParams,
};
use mmot_decouple::mmot1d::{
    brute_force_oracle, build_potentials_with, certify, coupling_cost, default_resolution, solve_monotone,
    DiscreteMarginal,
};
use mmot_decouple::nonlinearity::{
    check_orientable, registry, registry::SpecConfig, verify_equivalence, BoxDomain, NonlinearitySpec, Orientation,
    SampleGrid,
};
use mmot_decouple::pde::{
    check_h_monotone, check_monotone, max_norm, solve_system_bvp, system_residual, FieldBundle, InitialGuess, Mesh1D,
};
use mmot_decouple::rearrange::{rectangular_rearrangement, tilted_field, verify_energy_decrease, BoxField, TiltParams};
use mmot_decouple::{Error, Result};
use serde_json::json;

use crate::envelope::{Checks, Envelope};
use crate::{Common, ExampleArgs, InputArgs, MmotArgs, SolveArgs};

/// Left and right values of the rising component in the coupled quadratic example.
const QC_BOUNDARY: (f64, f64) = (1e-12, 3.0);

fn spec_from(common: &Common, m_default: Option<usize>) -> Result<NonlinearitySpec> {
    match (&common.spec, &common.spec_config) {
        (Some(_), Some(_)) => Err(Error::Config("give --spec or --spec-config, not both".into())),
        (None, Some(path)) => {
            let spec = SpecConfig::load(path)?.build()?;
            match common.m {
                Some(m) if m != spec.m() => {
                    Err(Error::Config(format!("--m {m} disagrees with m = {} in the config", spec.m())))
                }
                _ => Ok(spec),
            }
        }
        (Some(name), None) => {
            let m = common.m.or(m_default).unwrap_or(2);
            registry::build(name, m)
        }
        (None, None) => Err(Error::Config("missing --spec or --spec-config".into())),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Config(format!("cannot parse {what} entry `{s}`"))))
        .collect()
}

fn parse_signs(text: Option<&str>, m: usize) -> Result<Vec<i8>> {
    let signs = match text {
        Some(t) => parse_list::<i8>(t, "sign")?,
        None => vec![1; m],
    };
    if signs.len() != m || signs.iter().any(|s| s.abs() != 1) {
        return Err(Error::Config(format!("expected {m} signs, each 1 or -1")));
    }
    Ok(signs)
}

fn resolution(common: &Common, m: usize) -> usize {
    common.resolution.unwrap_or_else(|| default_resolution(m))
}

fn out_file(common: &Common, name: &str) -> Result<Option<File>> {
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Ok(Some(File::create(dir.join(name))?))
        }
        None => Ok(None),
    }
}

pub fn analyze(common: &Common) -> Result<Envelope> {
    let tol = common.tolerances()?;
    let spec = spec_from(common, None)?;
    let grid = SampleGrid::default_for(&spec.domain, common.seed)?;
    let mut checks = Checks::default();
    let data = match verify_equivalence(&spec, &grid, &tol) {
        Ok(r) => {
            checks.flag("classifiers_agree", true);
            json!({ "spec": spec.name(), "m": spec.m(), "domain": spec.domain, "equivalence": r })
        }
        Err(Error::InconsistentClassification(detail)) => {
            checks.flag("classifiers_agree", false);
            json!({ "spec": spec.name(), "m": spec.m(), "domain": spec.domain, "inconsistent": detail })
        }
        Err(e) => return Err(e),
    };
    Ok(Envelope::new("analyze", common.seed, checks.0, data))
}

pub fn mmot(args: &MmotArgs) -> Result<Envelope> {
    let common = &args.common;
    let tol = common.tolerances()?;
    let marginals = args
        .marginals
        .iter()
        .map(|p| DiscreteMarginal::read_csv(File::open(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?))
        .collect::<Result<Vec<_>>>()?;
    let m = marginals.len();
    let spec = spec_from(common, Some(m))?;
    if spec.m() != m {
        return Err(Error::DimensionMismatch { expected: spec.m(), got: m });
    }
    let mut checks = Checks::default();
    let orientation = match &args.theta {
        Some(t) => Orientation::new(parse_list(t, "theta")?)?,
        None => {
            let grid = SampleGrid::default_for(&spec.domain, common.seed)?;
            let cls = check_orientable(&spec, &grid, &tol)?;
            checks.flag("orientable", cls.holds());
            match cls.theta.clone().filter(|_| cls.holds()) {
                Some(theta) => Orientation::new(theta)?,
                None => return Ok(Envelope::new("mmot", common.seed, checks.0, json!({ "classification": cls }))),
            }
        }
    };
    let res = resolution(common, m);
    let coupling = solve_monotone(&marginals, &orientation)?;
    let potentials = build_potentials_with(&coupling, &spec, res)?;
    let cert = certify(&coupling, &potentials, &spec, res, &tol)?;
    checks.at_most("feasibility", cert.max_violation, tol.dual);
    checks.at_most("support_equality", cert.max_support_gap, tol.dual);
    checks.flag("certificate", cert.pass);
    let mut data = json!({
        "theta": orientation.as_slice(),
        "cost": coupling_cost(&coupling, &spec)?,
        "certificate": cert,
        "coupling": { "support": coupling.support, "weights": coupling.weights },
        "potentials": potentials,
    });
    if args.oracle {
        let oracle = brute_force_oracle(&marginals, &spec)?;
        let gap = coupling_cost(&coupling, &spec)? - oracle.min_cost;
        checks.at_most("oracle_gap", gap, 1e-12);
        data["oracle"] = serde_json::to_value(&oracle)?;
    }
    if let Some(f) = out_file(common, "coupling.csv")? {
        coupling.write_csv(f)?;
    }
    Ok(Envelope::new("mmot", common.seed, checks.0, data))
}

/// Default Dirichlet data for the built-in examples.
fn default_boundary(spec: &NonlinearitySpec, length: f64, signs: &[i8]) -> Result<Vec<(f64, f64)>> {
    match spec.name() {
        "ac-quadratic" | "ac-logsumexp" => {
            Ok(signs.iter().map(|&s| (f64::from(s) * kink(-length), f64::from(s) * kink(length))).collect())
        }
        "quadratic-coupling" => Ok(vec![QC_BOUNDARY, (QC_BOUNDARY.1, QC_BOUNDARY.0)]),
        other => Err(Error::Config(format!("no default boundary data for `{other}`; pass --bc"))),
    }
}

fn default_length(spec: &NonlinearitySpec) -> f64 {
    if spec.name() == "quadratic-coupling" {
        12.0
    } else {
        10.0
    }
}

fn default_n(spec: &NonlinearitySpec) -> usize {
    if spec.name() == "quadratic-coupling" {
        601
    } else {
        401
    }
}

pub fn solve(args: &SolveArgs) -> Result<Envelope> {
    let common = &args.common;
    let tol = common.tolerances()?;
    // `--signs` fixes m when `--m` is absent.
    let spec = spec_from(common, args.signs.as_deref().map(|t| t.split(',').count()))?;
    let m = spec.m();
    let length = common.length.unwrap_or_else(|| default_length(&spec));
    let mesh = Mesh1D::symmetric(length, common.n.unwrap_or_else(|| default_n(&spec)))?;
    let boundary = match &args.bc {
        Some(text) => text
            .split(',')
            .map(|pair| {
                let (a, b) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("boundary entry `{pair}` must be a:b")))?;
                let p = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number `{s}`")));
                Ok((p(a)?, p(b)?))
            })
            .collect::<Result<Vec<_>>>()?,
        None => default_boundary(&spec, length, &parse_signs(args.signs.as_deref(), m)?)?,
    };
    if boundary.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: boundary.len() });
    }
    // The solver only admits data inside the domain; widen it to cover the data.
    let mut lo = spec.domain.lo.clone();
    let mut hi = spec.domain.hi.clone();
    for (i, &(a, b)) in boundary.iter().enumerate() {
        lo[i] = lo[i].min(a.min(b));
        hi[i] = hi[i].max(a.max(b));
    }
    let spec = spec.with_domain(BoxDomain::new(lo, hi)?)?;
    let (field, report) = solve_system_bvp(&spec, mesh, &boundary, InitialGuess::Linear, &tol)?;
    let residual = max_norm(&system_residual(&spec, &field)?);
    let mut checks = Checks::default();
    checks.flag("converged", report.converged);
    checks.at_most("residual", residual, tol.newton);
    let h_monotone = check_h_monotone(&field, &spec, &tol).ok();
    if let Some(f) = out_file(common, "profile.csv")? {
        field.write_csv(f)?;
    }
    let data = json!({
        "spec": spec.name(),
        "mesh": mesh,
        "boundary": boundary,
        "solve": report,
        "residual": residual,
        "monotonicity": check_monotone(&field, &tol),
        "h_monotone": h_monotone,
    });
    Ok(Envelope::new("solve", common.seed, checks.0, data))
}

fn read_profile(path: Option<&Path>) -> Result<FieldBundle> {
    let path = path.ok_or_else(|| Error::Config("missing --input".into()))?;
    FieldBundle::read_csv(File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?)
}

pub fn decouple(args: &InputArgs) -> Result<Envelope> {
    let common = &args.common;
    let tol = common.tolerances()?;
    let field = read_profile(args.input.as_deref())?;
    let spec = spec_from(common, Some(field.m()))?;
    let pots = build_decoupling(&field, &spec, &tol)?;
    let mut checks = Checks::default();
    let identity = verify_on_solution_identity(&field, &pots, &spec)?;
    checks.at_most("on_solution_identity", identity, tol.decouple);
    let ineq = verify_global_inequality(&field, &pots, &spec, resolution(common, field.m()), &tol);
    let ineq_json = match ineq {
        Ok(r) => {
            checks.at_most("global_inequality", r.max_violation.max(0.0), tol.decouple);
            serde_json::to_value(&r)?
        }
        Err(e @ Error::NotHMonotone(_)) => {
            checks.flag("h_monotone", false);
            json!({ "refused": e.to_string() })
        }
        Err(e) => return Err(e),
    };
    let pde = verify_decoupled_pde(&field, &pots, &tol)?;
    checks.at_most("decoupled_pde", pde.max_residual, pde.threshold);
    let modica = modica_check(&field, &pots, &spec, &tol)?;
    if let Some(pass) = modica.pass {
        let gap = modica.nonnegative_gap.map_or(modica.max_gap, |g| g.max(modica.max_gap));
        checks.push("modica", pass, gap, tol.decouple);
    }
    if let Some(dir) = &common.out {
        pots.write_artifacts(dir, &serde_json::to_value(&checks.0)?)?;
    }
    let data = json!({
        "gauge": pots.gauge,
        "coupled_residual": pots.coupled_residual,
        "warnings": pots.warnings,
        "identity_gap": identity,
        "inequality": ineq_json,
        "decoupled_pde": pde,
        "modica": {
            "max_gap": modica.max_gap,
            "v_bar": modica.v_bar,
            "refinement_gap": modica.refinement_gap,
            "limit_gap": modica.limit_gap,
            "nonnegative_gap": modica.nonnegative_gap,
            "end_kinetic": modica.end_kinetic,
            "applicable": modica.applicable,
        },
    });
    Ok(Envelope::new("decouple", common.seed, checks.0, data))
}

pub fn rearrange(args: &InputArgs) -> Result<Envelope> {
    let common = &args.common;
    let tol = common.tolerances()?;
    let field = match &args.input {
        Some(p) => BoxField::read_csv(File::open(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?)?,
        None => tilted_field(&TiltParams::new(common.m.unwrap_or(2), common.seed))?,
    };
    let spec = spec_from(common, Some(field.m()))?;
    let report = verify_energy_decrease(&field, &spec, &tol)?;
    let mut checks = Checks::default();
    checks.push("dirichlet_decrease", report.dirichlet_decrease >= -tol.rearr, report.dirichlet_decrease, -tol.rearr);
    if report.consistent {
        checks.push(
            "potential_decrease",
            report.potential_decrease >= -tol.rearr,
            report.potential_decrease,
            -tol.rearr,
        );
    }
    checks.flag("energy_decrease", report.pass);
    if let Some(f) = out_file(common, "rearranged.csv")? {
        rectangular_rearrangement(&field, &tol)?.profile.write_csv(f)?;
    }
    Ok(Envelope::new("rearrange", common.seed, checks.0, serde_json::to_value(&report)?))
}

pub fn examples(args: &ExampleArgs) -> Result<Envelope> {
    let common = &args.common;
    let tol = common.tolerances()?;
    let cases: Vec<&str> = match args.case.as_str() {
        "all" => mmot_decouple::examples::CASES.to_vec(),
        c if mmot_decouple::examples::CASES.contains(&c) => vec![c],
        other => return Err(Error::Config(format!("unknown case `{other}`"))),
    };
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for case in &cases {
        let run: ExampleRun = match *case {
            "ac-quadratic" => {
                let m = common.m.unwrap_or(2);
                let mesh = Mesh1D::symmetric(common.length.unwrap_or(10.0), common.n.unwrap_or(401))?;
                run_ac_quadratic(m, mesh, &tol)?
            }
            "ac-logsumexp" => {
                let signs = match (&args.signs, common.m) {
                    (Some(s), _) => parse_signs(Some(s), s.split(',').count())?,
                    (None, m) => vec![1; m.unwrap_or(3)],
                };
                let mesh = Mesh1D::symmetric(common.length.unwrap_or(10.0), common.n.unwrap_or(401))?;
                run_ac_logsumexp(signs.len(), mesh, &signs, &tol)?
            }
            _ => {
                let mut p = QuadraticCouplingParams::default();
                p.length = common.length.unwrap_or(p.length);
                p.n = common.n.unwrap_or(p.n);
                run_quadratic_coupling(&p, &tol)?
            }
        };
        if let Some(dir) = &common.out {
            run.write_artifacts(&dir.join(case))?;
        }
        for c in &run.report.checks {
            let mut c = c.clone();
            if cases.len() > 1 {
                c.name = format!("{case}/{}", c.name);
            }
            checks.push(c);
        }
        reports.push(run.report);
    }
    Ok(Envelope::new("examples", common.seed, checks, json!({ "reports": reports })))
}
