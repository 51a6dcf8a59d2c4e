use std::fs::File;
use std::io::Write;

use rand::Rng;
use touchpoint_core::envelopes::{
    check_envelope_properties, dyadic_grid, dyadic_sharpness, envelope, envelope_separable, fmt_real, GridFn, Side,
};
use touchpoint_core::matcone::{axiom_check, ConeKind, ConeSpec};
use touchpoint_core::operators::{
    kelvin, moving_sphere_radius, probe_l_conditions, Condition, FieldOracle, OperatorSpec, ProbeConfig,
};
use touchpoint_core::perron::{
    random_starts, solve_from, uniqueness_experiment, Direction, DirichletProblem, SolverConfig,
};
use touchpoint_core::radial::{build_counterexample, CtexKind, CtexParams};
use touchpoint_core::rng::seeded;
use touchpoint_core::text::parse_rational;
use touchpoint_core::viscosity::{
    moving_sphere_check, scan_variation, touching_experiment, Geometry, PerturbationParams, SphereConfig, TouchVerdict,
    Variation,
};

use crate::config::{key, usage, CliError, Key, RunConfig};

/// Outcome of a run, mapped to the exit code by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// A violation was certified and that was the expected outcome.
    ExpectedViolation,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::ExpectedViolation => 2,
        }
    }

    fn from_pass(pass: bool) -> Status {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

type Runner = fn(&RunConfig, &mut Vec<u8>) -> Result<Status, CliError>;

pub struct CommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
    pub run: Runner,
}

const PROBLEM_KEYS: [Key; 12] = [
    key("problem", "annulus-psi1", "annulus-psi1 | annulus-quad | plane-box | file"),
    key("input", "", "problem file for problem=file"),
    key("n", "3", "ambient dimension of the radial problems"),
    key("grid", "1000", "intervals (radial) or nodes per axis (plane-box)"),
    key("alpha", "1", "alpha of quad:alpha:beta for annulus-quad"),
    key("beta", "0", "beta of quad:alpha:beta for annulus-quad"),
    key("inner", "0", "data at r = 1/2 for annulus-quad"),
    key("outer", "1", "data at r = 1 for annulus-quad"),
    key("cone", "trace", "admissible set for plane-box"),
    key("tol", "1e-10", "residual tolerance"),
    key("max-sweeps", "100000", "sweep cap"),
    key("order", "lexicographic", "lexicographic | red_black"),
];

pub const COMMANDS: &[CommandSpec] = &[
    CommandSpec {
        name: "cone-axioms",
        about: "Sample the structural axioms of an admissible set",
        keys: &[
            key("cone", "gamma_k:2", "gamma_k:<k> | posdef | one_pos | trace | neg_gamma_c:<k> | neg:<inner>"),
            key("n", "3", "matrix dimension"),
            key("samples", "2000", "random members drawn per axiom"),
        ],
        run: cone_axioms,
    },
    CommandSpec {
        name: "ctex",
        about: "Build and certify a radial counterexample pair",
        keys: &[
            key("kind", "beta-sign", "beta-sign | nondec | bprime | holder"),
            key("alpha", "", "coefficient of s|p|^6 (rational); default depends on the kind"),
            key("r0", "", "touching radius"),
            key("gamma", "0.5", "Holder exponent"),
            key("n", "3", "ambient dimension"),
            key("rgrid", "2001", "radial scan points"),
            key("table", "rows", "rows | roots"),
        ],
        run: ctex,
    },
    CommandSpec {
        name: "envelope",
        about: "Sup/inf-convolution envelope of a grid function",
        keys: &[
            key("input", "", "CSV with columns x[,y],value; overrides source"),
            key("source", "dyadic", "dyadic | piecewise"),
            key("eps", "0.01", "regularization parameter"),
            key("side", "lower", "upper | lower"),
            key("method", "exhaustive", "exhaustive | separable"),
            key("check", "true", "also check the envelope properties at eps"),
        ],
        run: envelope_cmd,
    },
    CommandSpec {
        name: "dyadic",
        about: "Sharpness of the envelope bounds on the dyadic staircase",
        keys: &[],
        run: dyadic,
    },
    CommandSpec {
        name: "first-variation",
        about: "Smallest gap eigenvalue of the perturbed operator over random jets",
        keys: &[
            key("operator", "quadvar:tanh", "operator text form"),
            key("n", "3", "dimension"),
            key("big-m", "1", "bound on |psi|"),
            key("samples", "1000", "random jets per side"),
            key("search-seed", "7", "seed of the constant search"),
        ],
        run: first_variation,
    },
    CommandSpec {
        name: "perron",
        about: "Solve a Dirichlet problem by monotone Perron iteration",
        keys: &[
            PROBLEM_KEYS[0],
            PROBLEM_KEYS[1],
            PROBLEM_KEYS[2],
            PROBLEM_KEYS[3],
            PROBLEM_KEYS[4],
            PROBLEM_KEYS[5],
            PROBLEM_KEYS[6],
            PROBLEM_KEYS[7],
            PROBLEM_KEYS[8],
            PROBLEM_KEYS[9],
            PROBLEM_KEYS[10],
            PROBLEM_KEYS[11],
            key("direction", "descending", "descending | ascending"),
            key("table", "summary", "summary | nodes"),
        ],
        run: perron,
    },
    CommandSpec {
        name: "uniqueness",
        about: "Solve from the sub, the super and random starts and compare the limits",
        keys: &[
            PROBLEM_KEYS[0],
            PROBLEM_KEYS[1],
            PROBLEM_KEYS[2],
            key("grid", "200", "intervals (radial) or nodes per axis (plane-box)"),
            PROBLEM_KEYS[4],
            PROBLEM_KEYS[5],
            PROBLEM_KEYS[6],
            PROBLEM_KEYS[7],
            PROBLEM_KEYS[8],
            PROBLEM_KEYS[9],
            PROBLEM_KEYS[10],
            PROBLEM_KEYS[11],
            key("starts", "4", "random starting functions"),
        ],
        run: uniqueness,
    },
    CommandSpec {
        name: "kelvin",
        about: "Kelvin transform involution or moving-sphere comparison",
        keys: &[
            key("mode", "involution", "involution | spheres"),
            key("field", "bubble", "bubble | const:<c> | fundamental[:<mu>] | log-singular:<mu>:<alpha>:<beta>"),
            key("n", "3", "dimension"),
            key("center", "", "comma-separated centre; default the origin"),
            key("lambda", "0.5", "inversion radius (involution)"),
            key("points", "100", "random points (involution)"),
            key("centers", "8", "extra random centres in B(0,1/2) (spheres)"),
            key("grid", "81", "slice nodes per axis (spheres)"),
            key("sup", "", "sup of the field on B(0,1); sampled when empty"),
            key("inf", "", "inf of the field on B(0,1); sampled when empty"),
        ],
        run: kelvin_cmd,
    },
    CommandSpec {
        name: "touching",
        about: "Touching set of an ordered pair and propagation to the boundary",
        keys: &[
            key("pair", "ctex:beta-sign", "ctex:<kind> | quad | punctured | file"),
            key("input", "", "CSV with columns x[,y],w,v for pair=file"),
            key("geometry", "radial:3", "geometry for pair=file"),
            key("grid", "1001", "nodes (punctured) or intervals (quad)"),
            key("alpha", "1", "alpha of quad:alpha:beta (quad)"),
            key("beta", "0.5", "beta of quad:alpha:beta (quad)"),
            key("gap", "0.1", "boundary data gap between the two solutions (quad)"),
            key("tol", "1e-12", "touching tolerance"),
            key("expect", "", "consistent | violated; default from the pair"),
        ],
        run: touching,
    },
    CommandSpec {
        name: "probe-L",
        about: "Probe the structural conditions on a lower-order term",
        keys: &[
            key("operator", "quadvar:tanh", "operator text form"),
            key("n", "3", "dimension"),
            key("r", "1", "radius of the x-box"),
            key("lambda", "1", "ellipticity bound"),
            key("m", "2", "growth exponent"),
            key("samples", "400", "random samples"),
            key(
                "require",
                "x_lipschitz,s_lipschitz,gradient_structure,monotone_in_s",
                "comma-separated conditions that decide the exit status, or all",
            ),
            key("expect", "hold", "hold | violate"),
        ],
        run: probe_l,
    },
];

pub fn find(name: &str) -> Option<&'static CommandSpec> {
    COMMANDS.iter().find(|c| c.name == name)
}

fn reference(out: &mut Vec<u8>, what: &str) -> Result<(), CliError> {
    writeln!(out, "# paper_ref: {what}")?;
    Ok(())
}

fn row(out: &mut Vec<u8>, fields: &[String]) -> Result<(), CliError> {
    writeln!(out, "{}", fields.join(","))?;
    Ok(())
}

fn real(v: f64) -> String {
    fmt_real(v)
}

fn opt_real(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

fn cone_axioms(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Status, CliError> {
    let n: usize = cfg.parse("n")?;
    let cone = ConeSpec::parse(cfg.raw("cone"), n).map_err(|e| CliError::Usage(e.to_string()))?;
    let rep = axiom_check(&cone, cfg.parse("samples")?, cfg.seed)?;
    reference(out, "structural axioms of the admissible set U")?;
    row(out, &["axiom", "claimed", "tested", "violations", "witness_eigenvalues"].map(String::from))?;
    for r in &rep.rows {
        let witness = r.witness.as_ref().map(|w| w.iter().map(|v| real(*v)).collect::<Vec<_>>().join(" "));
        row(
            out,
            &[
                r.axiom.label().into(),
                r.claimed.to_string(),
                r.tested.to_string(),
                r.violations.to_string(),
                witness.unwrap_or_default(),
            ],
        )?;
    }
    writeln!(out, "# unsampled={}", rep.unsampled)?;
    Ok(if !rep.claims_hold() {
        Status::Fail
    } else if rep.rows.iter().any(|r| r.violations > 0) {
        Status::ExpectedViolation
    } else {
        Status::Pass
    })
}

fn ctex_params(cfg: &RunConfig) -> Result<CtexParams, CliError> {
    let alpha = match cfg.opt("alpha") {
        Some(a) => Some(parse_rational(a).map_err(|e| CliError::Usage(format!("bad alpha: {e}")))?),
        None => None,
    };
    Ok(CtexParams { alpha, r0: cfg.real_opt("r0")?, gamma: cfg.real("gamma")?, n: cfg.parse("n")? })
}

fn ctex_reference(kind: CtexKind) -> &'static str {
    match kind {
        CtexKind::BetaSign => "comparison fails when the lower-order term changes sign in s",
        CtexKind::NonDecL => "comparison fails for a lower-order term that is non-decreasing in s",
        CtexKind::HolderRhs => "comparison fails for a Holder continuous lower-order term",
        CtexKind::BPrimeNonzero => "comparison fails when b(0) = 0 and b'(0) is not zero",
    }
}

fn ctex(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Status, CliError> {
    let kind: CtexKind = cfg.parse("kind")?;
    let params = ctex_params(cfg)?;
    let table = cfg.raw("table");
    if table != "rows" && table != "roots" {
        return usage(format!("table must be rows or roots, got '{table}'"));
    }
    let c = build_counterexample(kind, &params, cfg.parse("rgrid")?)?;
    reference(out, ctex_reference(kind))?;
    writeln!(out, "# operator={} cone={} r0={} delta={}", c.operator, c.cone, real(c.r0), real(c.delta))?;
    for cl in &c.clauses {
        writeln!(
            out,
            "# clause: {}={}{}",
            cl.name,
            if cl.pass { "pass" } else { "fail" },
            cl.witness_r.map(|r| format!(" at r={}", real(r))).unwrap_or_default()
        )?;
    }
    let touching: Vec<String> = c.touching.iter().map(|r| real(*r)).collect();
    writeln!(out, "# touching: {}", touching.join(" "))?;
    writeln!(out, "# lambda1_max={}", opt_real(c.lambda1_max))?;
    writeln!(out, "# verdict: {}", if c.pass() { "pass" } else { "fail" })?;
    if table == "rows" {
        c.write_rows_csv(out)?;
    } else {
        c.write_roots_csv(out)?;
    }
    Ok(Status::from_pass(c.pass()))
}

/// Piecewise smooth test function with random jumps.
fn piecewise_source(seed: u64) -> Result<GridFn, CliError> {
    let mut rng = seeded(seed);
    let nb = rng.gen_range(2..5);
    let mut breaks: Vec<f64> = (0..nb).map(|_| rng.gen_range(-0.9..0.9)).collect();
    breaks.sort_by(f64::total_cmp);
    let coef: Vec<[f64; 3]> =
        (0..=nb).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)]).collect();
    let f = move |x: f64| {
        let c = coef[breaks.iter().filter(|&&b| x > b).count()];
        c[0] + c[1] * x * x + c[2] * (3.0 * x).sin()
    };
    Ok(GridFn::new_1d(-1.0, 1.0, 201, f)?)
}

fn envelope_cmd(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Status, CliError> {
    let side: Side = match cfg.raw("side") {
        "upper" => Side::Upper,
        "lower" => Side::Lower,
        s => return usage(format!("side must be upper or lower, got '{s}'")),
    };
    let eps = cfg.real("eps")?;
    let src = match cfg.opt("input") {
        Some(path) => GridFn::read_csv(File::open(path)?)?,
        None => match cfg.raw("source") {
            "dyadic" => dyadic_grid(10)?,
            "piecewise" => piecewise_source(cfg.seed)?,
            s => return usage(format!("source must be dyadic or piecewise, got '{s}'")),
        },
    };
    let res = match cfg.raw("method") {
        "exhaustive" => envelope(&src, eps, side)?,
        "separable" => envelope_separable(&src, eps, side)?,
        m => return usage(format!("method must be exhaustive or separable, got '{m}'")),
    };
    reference(out, "properties of the sup/inf-convolution envelopes")?;
    let mut pass = true;
    if cfg.flag("check")? {
        let rep = check_envelope_properties(&src, &[eps], side)?;
        for r in &rep.rows {
            writeln!(
                out,
                "# property: {} eps={} {} worst={}",
                r.property.label(),
                real(r.eps),
                if r.pass { "pass" } else { "fail" },
                real(r.worst)
            )?;
        }
        pass = rep.all_pass();
    }
    res.write_csv(&src, out)?;
    Ok(Status::from_pass(pass))
}

fn dyadic(_cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Status, CliError> {
    let rep = dyadic_sharpness()?;
    reference(out, "sharpness of the envelope value and displacement bounds on the dyadic staircase")?;
    writeln!(out, "# h={}", real(rep.h))?;
    row(
        out,
        &["k", "eps", "x", "env", "env_bound", "argpt_x", "displacement", "displacement_bound", "window_min", "pass"]
            .map(String::from),
    )?;
    for r in &rep.rows {
        row(
            out,
            &[
                r.k.to_string(),
                real(r.eps),
                real(r.x),
                real(r.env),
                real(r.env_bound),
                real(r.argpt_x),
                real(r.displacement),
                real(r.displacement_bound),
                real(r.window_min),
                r.pass.to_string(),
            ],
        )?;
    }
    Ok(Status::from_pass(rep.pass()))
}

fn operator(cfg: &RunConfig, k: &str) -> Result<OperatorSpec, CliError> {
    cfg.raw(k).parse().map_err(|e: touchpoint_core::Error| CliError::Usage(e.to_string()))
}

fn first_variation(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Status, CliError> {
    let f = operator(cfg, "operator")?;
    let n: usize = cfg.parse("n")?;
    let samples: usize = cfg.parse("samples")?;
    let params = PerturbationParams::search(&f, n, cfg.real("big-m")?, cfg.parse("search-seed")?)?;
    reference(out, "first variation of F under the strict sub/supersolution perturbations")?;
    writeln!(
        out,
        "# constants: C={} alpha={} beta={} delta={} mu={} k0={}",
        real(params.c),
        real(params.alpha),
        real(params.beta),
        real(params.delta),
        real(params.mu),
        real(params.k0)
    )?;
    row(out, &["side", "tested", "min_eig", "pass"].map(String::from))?;
    let mut pass = true;
    for (k, side) in [Variation::Tilde, Variation::Hat].into_iter().enumerate() {
        let s = scan_variation(&f, &params, side, n, samples, cfg.seed.wrapping_add(k as u64))?;
        pass &= s.pass();
        row(out, &[side.label().into(), s.tested.to_string(), real(s.min_eig), s.pass().to_string()])?;
    }
    Ok(Status::from_pass(pass))
}

type Exact = Box<dyn Fn(&[f64]) -> f64>;

fn solver_config(cfg: &RunConfig) -> Result<SolverConfig, CliError> {
    Ok(SolverConfig {
        tol: cfg.real("tol")?,
        max_sweeps: cfg.parse("max-sweeps")?,
        order: cfg.parse("order")?,
        ..SolverConfig::default()
    })
}

/// The problem selected by the shared problem keys, with its exact
/// solution when one is known.
fn build_problem(cfg: &RunConfig) -> Result<(DirichletProblem, Option<Exact>), CliError> {
    let n: usize = cfg.parse("n")?;
    let grid: usize = cfg.parse("grid")?;
    match cfg.raw("problem") {
        "annulus-psi1" => {
            // ψ₁ = ln(r^{2−n} + 1)
            let inner = (2f64.powi(n as i32 - 2) + 1.0).ln();
            let (p, exact) = DirichletProblem::annulus_quad(1.0, 0.0, n, inner, 2f64.ln(), grid)?;
            Ok((p, Some(Box::new(move |x: &[f64]| exact(x[0])))))
        }
        "annulus-quad" => {
            let (p, exact) = DirichletProblem::annulus_quad(
                cfg.real("alpha")?,
                cfg.real("beta")?,
                n,
                cfg.real("inner")?,
                cfg.real("outer")?,
                grid,
            )?;
            Ok((p, Some(Box::new(move |x: &[f64]| exact(x[0])))))
        }
        "plane-box" => {
            let cone: ConeKind =
                cfg.raw("cone").parse().map_err(|e: touchpoint_core::Error| CliError::Usage(e.to_string()))?;
            Ok((DirichletProblem::plane_box(grid, cone)?, None))
        }
        "file" => {
            let Some(path) = cfg.opt("input") else {
                return usage("problem=file needs input=<path>");
            };
            Ok((DirichletProblem::read(File::open(path)?)?.0, None))
        }
        other => usage(format!("unknown problem '{other}'")),
    }
}

fn perron(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Status, CliError> {
    let (p, exact) = build_problem(cfg)?;
    let scfg = solver_config(cfg)?;
    let (dir, init) = match cfg.raw("direction") {
        "descending" => (Direction::Descending, &p.sup),
        "ascending" => (Direction::Ascending, &p.sub),
        d => return usage(format!("direction must be descending or ascending, got '{d}'")),
    };
    let table = cfg.raw("table");
    if table != "summary" && table != "nodes" {
        return usage(format!("table must be summary or nodes, got '{table}'"));
    }
    let r = solve_from(&p, &scfg, init, dir)?;
    reference(out, "existence for the Dirichlet problem by Perron's method")?;
    writeln!(out, "# problem: geometry={} F={} U={}", p.geom, p.f, p.u)?;
    let err_at = |i: usize| exact.as_ref().map(|e| (r.u.value(i) - e(&r.u.coords(i))).abs());
    let sup_error = exact.as_ref().map(|_| (0..r.u.len()).filter_map(err_at).fold(0.0, f64::max));
    let h = r.u.h_max();
    if table == "summary" {
        row(
            out,
            &[
                "grid",
                "h",
                "sweeps",
                "newton_steps",
                "converged",
                "residual",
                "error_estimate",
                "sandwich",
                "monotone",
                "sup_error",
                "sup_error_over_h",
            ]
            .map(String::from),
        )?;
        row(
            out,
            &[
                cfg.raw("grid").into(),
                real(h),
                r.sweeps.to_string(),
                r.newton_steps.to_string(),
                r.converged.to_string(),
                real(r.residual),
                real(r.error_estimate),
                r.sandwich_ok.to_string(),
                r.monotone_ok.to_string(),
                opt_real(sup_error),
                opt_real(sup_error.map(|e| e / h)),
            ],
        )?;
    } else {
        let mut class = vec!["dirichlet"; r.u.len()];
        for (i, c) in &r.classes {
            class[*i] = c.verdict.label();
        }
        let mut head = vec!["node", "x"];
        if r.u.dim() == 2 {
            head.push("y");
        }
        head.extend(["u", "exact", "error", "residual_class"]);
        row(out, &head.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
        for (i, cls) in class.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(r.u.coords(i).iter().map(|c| real(*c)));
            rec.push(real(r.u.value(i)));
            rec.push(opt_real(exact.as_ref().map(|e| e(&r.u.coords(i)))));
            rec.push(opt_real(err_at(i)));
            rec.push((*cls).into());
            row(out, &rec)?;
        }
    }
    Ok(Status::from_pass(r.converged && r.sandwich_ok && r.monotone_ok))
}

fn uniqueness(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Status, CliError> {
    let (p, _) = build_problem(cfg)?;
    let scfg = solver_config(cfg)?;
    let starts = random_starts(&p, cfg.parse("starts")?, cfg.seed);
    let rep = uniqueness_experiment(&p, &scfg, &starts)?;
    reference(out, "uniqueness of the Dirichlet solution")?;
    writeln!(
        out,
        "# max_distance={} tol={} inconclusive={} pass={}",
        real(rep.max_distance),
        real(rep.tol),
        rep.inconclusive,
        rep.pass
    )?;
    row(out, &["run", "converged", "sweeps", "residual"].map(String::from))?;
    for r in &rep.runs {
        row(out, &[r.label.clone(), r.converged.to_string(), r.sweeps.to_string(), real(r.residual)])?;
    }
    Ok(Status::from_pass(rep.pass))
}

fn parse_field(text: &str, n: usize) -> Result<FieldOracle, CliError> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    let num =
        |t: &str| touchpoint_core::text::parse_real(t).map_err(|e| CliError::Usage(format!("bad field '{text}': {e}")));
    Ok(match parts.as_slice() {
        ["bubble"] => FieldOracle::Bubble { n },
        ["const", c] => FieldOracle::Constant(num(c)?),
        ["fundamental"] => FieldOracle::ShiftedFundamental { n, mu: 0.0 },
        ["fundamental", mu] => FieldOracle::ShiftedFundamental { n, mu: num(mu)? },
        ["log-singular", mu, a, b] => FieldOracle::LogSingular { n, mu: num(mu)?, alpha: num(a)?, beta: num(b)? },
        _ => return usage(format!("unknown field '{text}'")),
    })
}

fn random_in_ball(rng: &mut touchpoint_core::rng::Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..=radius)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
            return x;
        }
    }
}

fn kelvin_cmd(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Status, CliError> {
    let n: usize = cfg.parse("n")?;
    let u = parse_field(cfg.raw("field"), n)?;
    let centre = match cfg.opt("center") {
        Some(_) => cfg.reals("center")?,
        None => vec![0.0; n],
    };
    if centre.len() != n {
        return usage(format!("center has {} coordinates, need {n}", centre.len()));
    }
    let mut rng = seeded(cfg.seed);
    match cfg.raw("mode") {
        "involution" => {
            let lam = cfg.real("lambda")?;
            let points: usize = cfg.parse("points")?;
            reference(out, "the Kelvin transform is an involution")?;
            let mut head: Vec<String> = (1..=n).map(|k| format!("y{k}")).collect();
            head.extend(["u", "kelvin", "kelvin_twice", "deviation"].map(String::from));
            row(out, &head)?;
            let mut worst: f64 = 0.0;
            let mut done = 0;
            while done < points {
                let y = random_in_ball(&mut rng, n, 1.0);
                let d2: f64 = y.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 < 1e-6 {
                    continue;
                }
                let once = kelvin(&u, &centre, lam, &y, n)?;
                let inner = |z: &[f64]| kelvin(&u, &centre, lam, z, n).unwrap_or(f64::NAN);
                let twice = kelvin(&inner, &centre, lam, &y, n)?;
                let uy = u.value(&y);
                let dev = (twice - uy).abs();
                worst = worst.max(dev / uy.abs().max(1.0));
                let mut rec: Vec<String> = y.iter().map(|v| real(*v)).collect();
                rec.extend([real(uy), real(once), real(twice), real(dev)]);
                row(out, &rec)?;
                done += 1;
            }
            writeln!(out, "# max_relative_deviation={}", real(worst))?;
            Ok(Status::from_pass(worst <= 1e-10))
        }
        "spheres" => {
            let scfg = SphereConfig {
                n,
                grid: cfg.parse("grid")?,
                sup_u: cfg.real_opt("sup")?,
                inf_u: cfg.real_opt("inf")?,
                ..SphereConfig::default()
            };
            let mut xs = vec![centre];
            for _ in 0..cfg.parse::<usize>("centers")? {
                xs.push(random_in_ball(&mut rng, n, 0.5));
            }
            // the radius is recomputed by the check; it is needed here to place the λ's
            let (sup_u, inf_u) = match (scfg.sup_u, scfg.inf_u) {
                (Some(s), Some(i)) => (s, i),
                _ => {
                    let probe = moving_sphere_check(&u, &xs[..1], &[vec![]], &scfg)?;
                    (probe.sup_u, probe.inf_u)
                }
            };
            let radius = moving_sphere_radius(sup_u, inf_u, n)?;
            let lams: Vec<Vec<f64>> =
                xs.iter().map(|_| [0.1, 0.25, 0.5, 0.75, 1.0].iter().map(|t| t * radius).collect()).collect();
            let scfg = SphereConfig { sup_u: Some(sup_u), inf_u: Some(inf_u), ..scfg };
            let rep = moving_sphere_check(&u, &xs, &lams, &scfg)?;
            reference(out, "moving-sphere comparison below the critical radius")?;
            writeln!(out, "# radius={} sup_u={} inf_u={}", real(rep.radius), real(rep.sup_u), real(rep.inf_u))?;
            row(
                out,
                &["x", "lambda", "max_excess", "nodes", "sphere_dev", "boundary_excess", "pass"].map(String::from),
            )?;
            for r in &rep.rows {
                let x: Vec<String> = r.x.iter().map(|v| real(*v)).collect();
                row(
                    out,
                    &[
                        x.join(" "),
                        real(r.lambda),
                        real(r.max_excess),
                        r.nodes.to_string(),
                        real(r.sphere_dev),
                        real(r.boundary_excess),
                        r.pass.to_string(),
                    ],
                )?;
            }
            Ok(Status::from_pass(rep.pass()))
        }
        m => usage(format!("mode must be involution or spheres, got '{m}'")),
    }
}

fn touching(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Status, CliError> {
    let tol = cfg.real("tol")?;
    let pair = cfg.raw("pair").to_string();
    let (w, v, geom, expected_violation) = if let Some(kind) = pair.strip_prefix("ctex:") {
        let kind: CtexKind = kind.parse().map_err(|e: touchpoint_core::Error| CliError::Usage(e.to_string()))?;
        let c = build_counterexample(kind, &CtexParams::default(), 2001)?;
        let (w, v) = c.pair_grids()?;
        (w, v, Geometry::Radial { n: 3 }, true)
    } else {
        match pair.as_str() {
            "quad" => {
                let (alpha, beta, gap) = (cfg.real("alpha")?, cfg.real("beta")?, cfg.real("gap")?);
                let grid: usize = cfg.parse("grid")?;
                let scfg = SolverConfig { tol: 1e-11, ..SolverConfig::default() };
                let lower = DirichletProblem::annulus_quad(alpha, beta, 3, 0.0, 0.0, grid)?.0;
                let upper = DirichletProblem::annulus_quad(alpha, beta, 3, gap, gap, grid)?.0;
                let w = solve_from(&upper, &scfg, &upper.sup, Direction::Descending)?;
                let v = solve_from(&lower, &scfg, &lower.sup, Direction::Descending)?;
                if !(w.converged && v.converged) {
                    writeln!(out, "# solver did not converge")?;
                    return Ok(Status::Fail);
                }
                (w.u, v.u, Geometry::Radial { n: 3 }, false)
            }
            "punctured" => {
                let count: usize = cfg.parse("grid")?;
                let psi = |mu: f64| move |r: f64| if r == 0.0 { f64::INFINITY } else { (1.0 / r + mu).ln() };
                let w = GridFn::new_1d(0.0, 1.0, count, psi(1.0))?;
                let v = GridFn::new_1d(0.0, 1.0, count, psi(0.0))?;
                (w, v, Geometry::Radial { n: 3 }, false)
            }
            "file" => {
                let Some(path) = cfg.opt("input") else {
                    return usage("pair=file needs input=<path>");
                };
                let geom: Geometry = cfg.parse("geometry")?;
                let mut g = GridFn::read_csv_columns(File::open(path)?, &["w", "v"])?;
                let v = g.pop().expect("two columns");
                let w = g.pop().expect("two columns");
                (w, v, geom, false)
            }
            other => return usage(format!("unknown pair '{other}'")),
        }
    };
    let expected_violation = match cfg.opt("expect") {
        None => expected_violation,
        Some("violated") => true,
        Some("consistent") => false,
        Some(e) => return usage(format!("expect must be consistent or violated, got '{e}'")),
    };
    let rep = touching_experiment(&w, &v, geom, tol)?;
    reference(out, "propagation of touching points to the boundary")?;
    writeln!(
        out,
        "# inf_gap={} at node {} strict_on_boundary={}",
        real(rep.inf_gap),
        rep.inf_gap_node,
        rep.strict_on_boundary
    )?;
    rep.write_csv(out)?;
    let violated = rep.verdict == TouchVerdict::PropagationViolated;
    Ok(match (violated, expected_violation) {
        (true, true) => Status::ExpectedViolation,
        (false, false) => Status::Pass,
        _ => Status::Fail,
    })
}

fn probe_l(cfg: &RunConfig, out: &mut Vec<u8>) -> Result<Status, CliError> {
    let f = operator(cfg, "operator")?;
    let pc = ProbeConfig {
        r: cfg.real("r")?,
        lambda: cfg.real("lambda")?,
        m: cfg.real("m")?,
        samples: cfg.parse("samples")?,
        seed: cfg.seed,
        n: cfg.parse("n")?,
    };
    let expect_violation = match cfg.raw("expect") {
        "hold" => false,
        "violate" => true,
        e => return usage(format!("expect must be hold or violate, got '{e}'")),
    };
    let rep = probe_l_conditions(&f, &pc)?;
    reference(out, "structural conditions on the lower-order term L")?;
    row(out, &["condition", "tested", "constant", "theta_bar", "holds", "witness_value"].map(String::from))?;
    for r in &rep.rows {
        row(
            out,
            &[
                r.condition.label().into(),
                r.tested.to_string(),
                opt_real(r.constant),
                opt_real(r.theta_bar),
                r.holds().to_string(),
                opt_real(r.witness.as_ref().map(|w| w.value)),
            ],
        )?;
    }
    let required: Vec<&str> = cfg.raw("require").split(',').map(str::trim).collect();
    for name in &required {
        if *name != "all" && !Condition::ALL.iter().any(|c| c.label() == *name) {
            return usage(format!("unknown condition '{name}'"));
        }
    }
    let all = rep
        .rows
        .iter()
        .filter(|r| required.contains(&"all") || required.contains(&r.condition.label()))
        .all(|r| r.holds());
    Ok(match (all, expect_violation) {
        (true, false) => Status::Pass,
        (false, true) => Status::ExpectedViolation,
        _ => Status::Fail,
    })
}
