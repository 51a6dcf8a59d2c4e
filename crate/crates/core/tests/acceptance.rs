//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::Rng;
use touchpoint_core::envelopes::{check_envelope_properties, dyadic_sharpness, envelope, GridFn, Side};
use touchpoint_core::matcone::SymMatrix;
use touchpoint_core::operators::{conformal_hessian_u, consistency_check, kelvin, FieldOracle, Jet2, OperatorSpec};
use touchpoint_core::perron::{perron_solve, perron_solve_ascending, DirichletProblem, SolverConfig};
use touchpoint_core::radial::{
    build_counterexample, interp_endpoints_exact, quartic_eval_exact, CtexKind, CtexParams, QuarticSpec,
};
use touchpoint_core::rng::seeded;
use touchpoint_core::viscosity::{
    moving_sphere_check, scan_variation, touching_experiment, Geometry, PerturbationParams, SphereConfig, TouchVerdict,
    Variation,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = fn() -> Outcome;

fn exact_rationals() -> Outcome {
    let q = QuarticSpec::p4_tilde(Ratio::new(-36, 25)).unwrap();
    let r = |a: i64, b: i64| Ratio::new(a, b);
    let cases = [
        (r(-2, 1), r(-85682, 1)),
        (r(-3, 1), r(96309, 1)),
        (r(2, 1), r(-82766, 1)),
        (r(-8, 5), r(-1966568, 25)),
        (r(8, 5), r(-1908248, 25)),
    ];
    let mut bad = Vec::new();
    for (t, want) in cases {
        let got = quartic_eval_exact(&q, t).unwrap();
        if got != want {
            bad.push(format!("P({t}) = {got}, want {want}"));
        }
    }
    let (lo, hi) = interp_endpoints_exact().unwrap();
    if lo != r(-245821, 364500) || hi != r(238531, 364500) {
        bad.push(format!("interpolation endpoints {lo}, {hi}"));
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() { "5 quartic values and 2 endpoints exact".into() } else { bad.join("; ") },
    )
}

fn certificates() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (kind, limit) in [(CtexKind::BetaSign, 5.0), (CtexKind::NonDecL, 5.0), (CtexKind::BPrimeNonzero, 5.0)] {
        let start = Instant::now();
        let params = CtexParams {
            alpha: if kind == CtexKind::BetaSign { Some(Ratio::from_integer(-3)) } else { None },
            ..CtexParams::default()
        };
        let c = build_counterexample(kind, &params, 2001).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let mut pass = c.pass() && c.touching == vec![c.r0] && secs < limit;
        if kind != CtexKind::BPrimeNonzero {
            let t: Vec<f64> = c.roots.iter().map(|r| r.t).collect();
            let seps: [f64; 3] = if kind == CtexKind::BetaSign { [-2.0, 0.0, 2.25] } else { [-2.0, -1.6, 2.0] };
            pass &= t.len() == 4
                && t[0] < seps[0]
                && seps[0] < t[1]
                && t[1] < seps[1]
                && seps[1] < t[2]
                && t[2] < seps[2]
                && seps[2] < t[3]
                && c.lambda1_max.is_some_and(|l| l <= 1e-9);
        }
        ok &= pass;
        notes.push(format!(
            "{kind}: {} ({secs:.2}s{})",
            if pass { "ok" } else { "FAIL" },
            fmt_failed(&c.failed_clauses())
        ));
    }
    outcome(ok, notes.join(", "))
}

fn fmt_failed(f: &[&str]) -> String {
    if f.is_empty() {
        String::new()
    } else {
        format!(", failed {}", f.join("/"))
    }
}

/// Piecewise smooth function with jumps at random breakpoints.
fn piecewise(x: &[f64], breaks: &[f64], coef: &[[f64; 4]]) -> f64 {
    let t = x[0] + if x.len() > 1 { 0.5 * x[1] } else { 0.0 };
    let k = breaks.iter().filter(|&&b| t > b).count();
    let c = coef[k];
    let r2: f64 = x.iter().map(|v| v * v).sum();
    c[0] + c[1] * x[0] + c[2] * r2 + c[3] * (3.0 * t).sin()
}

fn envelope_suite() -> Outcome {
    let start = Instant::now();
    let dy = dyadic_sharpness().unwrap();
    let mut rng = seeded(2024);
    let eps = [0.5, 0.1, 0.02, 0.004];
    let mut failures = Vec::new();
    let mut dual_ok = true;
    for g in 0..20 {
        let nb = rng.gen_range(2..5);
        let mut breaks: Vec<f64> = (0..nb).map(|_| rng.gen_range(-0.9..0.9)).collect();
        breaks.sort_by(f64::total_cmp);
        let coef: Vec<[f64; 4]> = (0..=nb)
            .map(|_| {
                [rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)]
            })
            .collect();
        let src = if g < 15 {
            GridFn::new_1d(-1.0, 1.0, 201, |x| piecewise(&[x], &breaks, &coef)).unwrap()
        } else {
            GridFn::new_2d([-1.0, -1.0], [1.0, 1.0], [33, 33], |x| piecewise(x, &breaks, &coef)).unwrap()
        };
        for side in [Side::Upper, Side::Lower] {
            let rep = check_envelope_properties(&src, &eps, side).unwrap();
            if !rep.all_pass() {
                failures.push(format!(
                    "grid {g} {side}: {:?}",
                    rep.failures().iter().map(|r| r.property).collect::<Vec<_>>()
                ));
            }
        }
        let neg = src.map(|v| -v);
        for &e in &eps {
            let lo = envelope(&src, e, Side::Lower).unwrap();
            let up = envelope(&neg, e, Side::Upper).unwrap();
            if lo.env.values().iter().zip(up.env.values()).any(|(a, b)| *a != -*b) {
                dual_ok = false;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = dy.pass() && failures.is_empty() && dual_ok && secs < 30.0;
    outcome(
        pass,
        format!(
            "dyadic k=2..6 {}, 20 random grids x 2 sides {}, duality {} ({secs:.1}s){}",
            if dy.pass() { "ok" } else { "FAIL" },
            if failures.is_empty() { "ok" } else { "FAIL" },
            if dual_ok { "exact" } else { "FAIL" },
            if failures.is_empty() { String::new() } else { format!(": {}", failures.join("; ")) }
        ),
    )
}

fn random_point(rng: &mut touchpoint_core::rng::Rng, n: usize, rmin: f64, rmax: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            let target = rng.gen_range(rmin..rmax);
            return x.iter().map(|v| v * target / r).collect();
        }
    }
}

fn operator_identities() -> Outcome {
    let mut rng = seeded(41);
    let n = 3;
    let fields = [
        FieldOracle::Constant(2.0),
        FieldOracle::ShiftedFundamental { n, mu: 1.0 },
        FieldOracle::Bubble { n },
        FieldOracle::LogSingular { n, mu: 1.0, alpha: 1.0, beta: 0.0 },
        FieldOracle::Quadratic { c: 3.0, g: vec![0.2, -0.1, 0.3], h: SymMatrix::diag(&[0.5, -0.25, 0.1]) },
    ];
    let mut worst: f64 = 0.0;
    for f in &fields {
        for _ in 0..50 {
            let x = random_point(&mut rng, n, 0.2, 0.9);
            worst = worst.max(consistency_check(f, &x, n, 1e-10).unwrap().deviation);
        }
    }
    let mut fund: f64 = 0.0;
    for dim in [3, 4, 5] {
        for _ in 0..50 {
            let x = random_point(&mut rng, dim, 0.3, 2.0);
            let j = FieldOracle::ShiftedFundamental { n: dim, mu: 0.0 }.jet(&x).unwrap();
            fund = fund.max(conformal_hessian_u(&j, dim).unwrap().max_abs());
        }
    }
    let b = FieldOracle::Bubble { n };
    let mut kel: f64 = 0.0;
    for _ in 0..100 {
        let x = random_point(&mut rng, n, 0.0, 0.5);
        let y = random_point(&mut rng, n, 0.1, 1.0);
        let lam = rng.gen_range(0.1..0.8);
        if y.iter().zip(&x).map(|(a, c)| (a - c).powi(2)).sum::<f64>() < 1e-6 {
            continue;
        }
        let inner = |z: &[f64]| kelvin(&b, &x, lam, z, n).unwrap();
        kel = kel.max((kelvin(&inner, &x, lam, &y, n).unwrap() - b.value(&y)).abs());
    }
    let qc = OperatorSpec::QuadConst { alpha: 1.0, beta: 0.5 };
    let conf = OperatorSpec::ConformalA;
    let mut same = true;
    for _ in 0..100 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let h = SymMatrix::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
        let j = Jet2::new(x, rng.gen_range(-1.0..1.0), p, h).unwrap();
        same &= qc.eval(&j) == conf.eval(&j);
    }
    let pass = worst <= 1e-10 && fund <= 1e-10 && kel <= 1e-10 && same;
    outcome(
        pass,
        format!(
            "consistency {worst:.1e}, fundamental {fund:.1e}, Kelvin involution {kel:.1e}, quad:1:0.5 == conformal {}",
            if same { "exact" } else { "FAIL" }
        ),
    )
}

fn first_variation() -> Outcome {
    let start = Instant::now();
    let f = OperatorSpec::quadvar_tanh();
    let params = PerturbationParams::search(&f, 3, 1.0, 7).unwrap();
    let t = scan_variation(&f, &params, Variation::Tilde, 3, 1000, 11).unwrap();
    let h = scan_variation(&f, &params, Variation::Hat, 3, 1000, 12).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = t.pass() && h.pass() && t.tested == 1000 && h.tested == 1000 && secs < 10.0;
    outcome(
        pass,
        format!(
            "C={} beta={} min eig tilde {:.2e}, hat {:.2e} over 1000 jets each ({secs:.2}s)",
            params.c, params.beta, t.min_eig, h.min_eig
        ),
    )
}

fn perron() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig { tol: 1e-10, ..SolverConfig::default() };
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    let mut invariants = true;
    let mut converged = true;
    let mut agree: f64 = 0.0;
    let mut lip_ref = None;
    for n in [250usize, 500, 1000] {
        let p = DirichletProblem::annulus(n).unwrap();
        let d = perron_solve(&p, &cfg).unwrap();
        let a = perron_solve_ascending(&p, &cfg).unwrap();
        invariants &= d.sandwich_ok && d.monotone_ok && a.sandwich_ok && a.monotone_ok;
        converged &= d.converged && a.converged;
        let u = &d.u;
        let h = u.h()[0];
        let err = (0..u.len())
            .map(|i| (u.value(i) - DirichletProblem::annulus_exact(u.coord(i, 0))).abs())
            .fold(0.0, f64::max);
        agree = agree.max((0..u.len()).map(|i| (u.value(i) - a.u.value(i)).abs()).fold(0.0, f64::max));
        if lip_ref.is_none() {
            // reference constant: discrete Lipschitz constant of the coarsest solution
            lip_ref = Some((1..u.len()).map(|i| ((u.value(i) - u.value(i - 1)) / h).abs()).fold(0.0, f64::max));
        }
        errs.push(err);
        hs.push(h);
    }
    let lip = lip_ref.unwrap();
    let within = errs.iter().zip(&hs).all(|(e, h)| *e <= 2e-2 * h * lip);
    // least-squares slope of log err against log h
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / 3.0, ly.iter().sum::<f64>() / 3.0);
    let order = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let secs = start.elapsed().as_secs_f64();
    let pass = within && order >= 0.9 && invariants && converged && agree <= 10.0 * cfg.tol && secs < 20.0;
    outcome(
        pass,
        format!(
            "errors {:.2e}/{:.2e}/{:.2e} (bound 2e-2*h*{lip:.3}), order {order:.2}, invariants {}, ascending vs descending {agree:.1e} ({secs:.2}s)",
            errs[0],
            errs[1],
            errs[2],
            if invariants { "ok" } else { "FAIL" }
        ),
    )
}

fn touching() -> Outcome {
    let c = build_counterexample(CtexKind::BetaSign, &CtexParams::default(), 2001).unwrap();
    let (w, v) = c.pair_grids().unwrap();
    let rep = touching_experiment(&w, &v, Geometry::Radial { n: 3 }, 1e-12).unwrap();
    let r0_node = (0..w.len()).find(|&i| w.coord(i, 0) == c.r0);
    let violated = rep.verdict == TouchVerdict::PropagationViolated
        && rep.components.len() == 1
        && !rep.components[0].boundary_contact
        && Some(rep.components[0].nodes.clone()) == r0_node.map(|i| vec![i]);

    let mut rng = seeded(77);
    let cfg = SolverConfig { tol: 1e-11, ..SolverConfig::default() };
    let mut consistent = 0;
    for _ in 0..20 {
        let (alpha, beta) = loop {
            let a: f64 = rng.gen_range(-1.0..2.0);
            let b: f64 = rng.gen_range(0.05..1.0);
            if (a - 3.0 * b).abs() > 0.05 {
                break (a, b);
            }
        };
        let (g0, g1) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (d0, d1) = (rng.gen_range(1e-3..0.5), rng.gen_range(1e-3..0.5));
        let lower = DirichletProblem::annulus_quad(alpha, beta, 3, g0, g1, 200).unwrap().0;
        let upper = DirichletProblem::annulus_quad(alpha, beta, 3, g0 + d0, g1 + d1, 200).unwrap().0;
        let (wu, vl) = (perron_solve(&upper, &cfg).unwrap(), perron_solve(&lower, &cfg).unwrap());
        if !(wu.converged && vl.converged) {
            continue;
        }
        match touching_experiment(&wu.u, &vl.u, Geometry::Radial { n: 3 }, 1e-10) {
            Ok(r) if r.verdict == TouchVerdict::PropagationConsistent && r.strict_on_boundary => consistent += 1,
            _ => {}
        }
    }

    // ψ₁ against ψ₀ on the punctured ball, centre masked
    let mut gaps = Vec::new();
    let mut punctured_ok = true;
    for count in [101usize, 1001, 10001] {
        let w =
            GridFn::new_1d(0.0, 1.0, count, |r| if r == 0.0 { f64::INFINITY } else { (1.0 / r + 1.0).ln() }).unwrap();
        let v = GridFn::new_1d(0.0, 1.0, count, |r| if r == 0.0 { f64::INFINITY } else { (1.0 / r).ln() }).unwrap();
        let r = touching_experiment(&w, &v, Geometry::Radial { n: 3 }, 1e-12).unwrap();
        let h = w.h()[0];
        punctured_ok &= r.components.is_empty() && (r.inf_gap - (1.0 + h).ln()).abs() <= 1e-12 && r.inf_gap_node == 1;
        gaps.push(r.inf_gap);
    }
    punctured_ok &= gaps.windows(2).all(|g| g[1] < g[0] / 5.0);
    let pass = violated && consistent == 20 && punctured_ok;
    outcome(
        pass,
        format!(
            "counterexample pair {} ({}), random quad pairs consistent {consistent}/20, punctured inf(w-v) {:.2e} -> {:.2e} -> {:.2e}",
            rep.verdict,
            rep.summary(),
            gaps[0],
            gaps[1],
            gaps[2]
        ),
    )
}

fn moving_spheres() -> Outcome {
    let n = 3;
    let u = FieldOracle::Bubble { n };
    let cfg = SphereConfig { sup_u: Some(1.0), inf_u: Some(0.5f64.sqrt()), ..SphereConfig::default() };
    let radius = touchpoint_core::operators::moving_sphere_radius(1.0, 0.5f64.sqrt(), n).unwrap();
    let mut rng = seeded(99);
    let mut xs = vec![vec![0.0; n], vec![0.5, 0.0, 0.0], vec![0.0, -0.5, 0.0], vec![0.3, 0.3, 0.2]];
    for _ in 0..8 {
        xs.push(random_point(&mut rng, n, 0.0, 0.5));
    }
    let lams: Vec<Vec<f64>> =
        xs.iter().map(|_| [0.1, 0.25, 0.5, 0.75, 1.0].iter().map(|t| t * radius).collect()).collect();
    let rep = moving_sphere_check(&u, &xs, &lams, &cfg).unwrap();
    let worst = rep.rows.iter().map(|r| r.max_excess).fold(f64::NEG_INFINITY, f64::max);
    let sphere = rep.rows.iter().map(|r| r.sphere_dev).fold(0.0, f64::max);
    let bnd = rep.rows.iter().map(|r| r.boundary_excess).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        rep.pass(),
        format!(
            "R={:.4}, {} (x, lambda) pairs, max excess {worst:.1e}, sphere deviation {sphere:.1e}, boundary excess {bnd:.1e}",
            rep.radius,
            rep.rows.len()
        ),
    )
}

fn main() {
    let checks: [(&str, Check); 8] = [
        ("exact rational reproduction", exact_rationals),
        ("counterexample certificates", certificates),
        ("envelope suite", envelope_suite),
        ("operator identities", operator_identities),
        ("first-variation gaps", first_variation),
        ("Perron solver", perron),
        ("propagation of touching points", touching),
        ("moving spheres", moving_spheres),
    ];
    let mut failed = 0;
    let mut total = Duration::ZERO;
    for (k, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let dt = start.elapsed();
        total += dt;
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let slow = k == 0 && dt.as_secs_f64() >= 1.0;
        if !o.pass || slow {
            failed += 1;
        }
        println!("criterion {} {tag} {name}: {} [{:.2}s]", k + 1, o.detail, dt.as_secs_f64());
    }
    println!("acceptance: {} of 8 passed in {:.1}s", 8 - failed, total.as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
