use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{arg, Error, Result};
use crate::rng::{seeded, Rng as SeededRng};

use super::eigen::{eigen_sym, Spectrum};
use super::sigma::sigma_all;
use super::sym::{check_dim, SymMatrix};

/// Shape of an open set `U` of symmetric matrices, described through the
/// eigenvalues.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConeKind {
    /// `Γ_k`: `σ_j(λ) > 0` for all `1 ≤ j ≤ k`.
    GammaK(usize),
    PosDef,
    /// At least one positive eigenvalue.
    AtLeastOnePositive,
    /// `tr > 0`.
    TraceCone,
    /// `S \ (−Γ̄_k)`.
    NegGammaComplement(usize),
    /// `S \ (−Ū)` for the inner set `U`.
    Negated(Box<ConeKind>),
}

/// Structural axioms an open set `U` may satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axiom {
    /// `A ∈ U, B > 0 ⇒ A + B ∈ U`.
    PositiveShift,
    /// `A ∈ U, c > 0 ⇒ cA ∈ U`.
    Cone,
    /// `A ∈ U, c ∈ (0, 1) ⇒ cA ∈ U`.
    Shrink,
    /// `A ∈ U, c ∈ (1, ∞) ⇒ cA ∈ U`.
    Stretch,
    /// `U ⊂ {tr > 0}`.
    TracePositive,
}

impl Axiom {
    pub const ALL: [Axiom; 5] =
        [Axiom::PositiveShift, Axiom::Cone, Axiom::Shrink, Axiom::Stretch, Axiom::TracePositive];

    pub fn label(self) -> &'static str {
        match self {
            Axiom::PositiveShift => "positive_shift",
            Axiom::Cone => "cone",
            Axiom::Shrink => "shrink",
            Axiom::Stretch => "stretch",
            Axiom::TracePositive => "trace_positive",
        }
    }
}

/// Signed `|σ_j|^{1/j}`, homogeneous of degree one.
fn root_sigma(e: f64, j: usize) -> f64 {
    if j == 1 {
        e
    } else {
        e.signum() * e.abs().powf(1.0 / j as f64)
    }
}

fn negate_sorted(lam: &[f64]) -> Vec<f64> {
    lam.iter().rev().map(|v| -v).collect()
}

impl ConeKind {
    /// Smallest slack of the defining inequalities; positive exactly on `U`.
    /// Every slack is positively homogeneous of degree one in `λ`.
    pub fn margin(&self, lam: &[f64]) -> f64 {
        match self {
            ConeKind::GammaK(k) => {
                let e = sigma_all(lam);
                (1..=*k).map(|j| root_sigma(e[j], j)).fold(f64::INFINITY, f64::min)
            }
            ConeKind::PosDef => lam[0],
            ConeKind::AtLeastOnePositive => lam[lam.len() - 1],
            ConeKind::TraceCone => lam.iter().sum(),
            ConeKind::NegGammaComplement(k) => -ConeKind::GammaK(*k).margin(&negate_sorted(lam)),
            ConeKind::Negated(inner) => -inner.margin(&negate_sorted(lam)),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            ConeKind::GammaK(k) | ConeKind::NegGammaComplement(k) => {
                if *k == 0 || *k > n {
                    return arg(format!("cone index k = {k} outside 1..={n}"));
                }
                Ok(())
            }
            ConeKind::Negated(inner) => inner.validate(n),
            _ => Ok(()),
        }
    }

    /// Whether only the trace is needed to compute the margin.
    fn trace_only(&self) -> bool {
        matches!(self, ConeKind::TraceCone | ConeKind::GammaK(1))
    }

    /// `U ⊂ {tr > 0}`.
    fn inside_trace_halfspace(&self) -> bool {
        match self {
            ConeKind::GammaK(_) | ConeKind::PosDef | ConeKind::TraceCone => true,
            ConeKind::AtLeastOnePositive => false,
            ConeKind::NegGammaComplement(k) => *k == 1,
            ConeKind::Negated(inner) => inner.contains_trace_halfspace(),
        }
    }

    /// `{tr > 0} ⊂ U`.
    fn contains_trace_halfspace(&self) -> bool {
        match self {
            ConeKind::GammaK(k) => *k == 1,
            ConeKind::PosDef => false,
            ConeKind::TraceCone | ConeKind::AtLeastOnePositive | ConeKind::NegGammaComplement(_) => true,
            ConeKind::Negated(inner) => inner.inside_trace_halfspace(),
        }
    }
}

impl fmt::Display for ConeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeKind::GammaK(k) => write!(f, "gamma_k:{k}"),
            ConeKind::PosDef => write!(f, "posdef"),
            ConeKind::AtLeastOnePositive => write!(f, "one_pos"),
            ConeKind::TraceCone => write!(f, "trace"),
            ConeKind::NegGammaComplement(k) => write!(f, "neg_gamma_c:{k}"),
            ConeKind::Negated(inner) => write!(f, "neg:{inner}"),
        }
    }
}

impl FromStr for ConeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_k = |t: &str| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad cone index in '{s}'")));
        if let Some(rest) = s.strip_prefix("neg:") {
            return Ok(ConeKind::Negated(Box::new(rest.parse()?)));
        }
        if let Some(rest) = s.strip_prefix("gamma_k:") {
            return Ok(ConeKind::GammaK(parse_k(rest)?));
        }
        if let Some(rest) = s.strip_prefix("neg_gamma_c:") {
            return Ok(ConeKind::NegGammaComplement(parse_k(rest)?));
        }
        match s {
            "posdef" => Ok(ConeKind::PosDef),
            "one_pos" => Ok(ConeKind::AtLeastOnePositive),
            "trace" => Ok(ConeKind::TraceCone),
            _ => Err(Error::Parse(format!("unknown cone '{s}'"))),
        }
    }
}

/// An open set `U ⊂ S^{n×n}` of the listed kinds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub n: usize,
}

impl ConeSpec {
    pub fn new(kind: ConeKind, n: usize) -> Result<Self> {
        check_dim(n)?;
        kind.validate(n)?;
        Ok(ConeSpec { kind, n })
    }

    /// Parses the textual form (`gamma_k:2`, `posdef`, `neg:trace`, …).
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        Self::new(text.parse()?, n)
    }

    pub fn margin(&self, lam: &Spectrum) -> f64 {
        self.kind.margin(lam.values())
    }

    /// Margin from a sorted eigenvalue slice.
    pub fn margin_sorted(&self, lam: &[f64]) -> f64 {
        self.kind.margin(lam)
    }

    /// Margin of a matrix; skips the eigen solve when the trace suffices.
    pub fn margin_matrix(&self, m: &SymMatrix) -> f64 {
        assert_eq!(m.dim(), self.n, "matrix and cone dimensions differ");
        if self.kind.trace_only() {
            m.trace()
        } else {
            self.kind.margin(eigen_sym(m).values())
        }
    }

    /// Whether the set claims the given axiom.
    pub fn claims(&self, axiom: Axiom) -> bool {
        match axiom {
            Axiom::PositiveShift | Axiom::Cone | Axiom::Shrink | Axiom::Stretch => true,
            Axiom::TracePositive => self.kind.inside_trace_halfspace(),
        }
    }
}

impl fmt::Display for ConeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}

/// Membership of an eigenvalue vector in the open set.
pub fn in_cone(lambda: &Spectrum, u: &ConeSpec) -> bool {
    assert_eq!(lambda.len(), u.n, "spectrum and cone dimensions differ");
    u.margin(lambda) > 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Outside,
    Boundary,
    Interior,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Outside => "outside",
            Verdict::Boundary => "boundary",
            Verdict::Interior => "interior",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeClass {
    pub verdict: Verdict,
    pub margin: f64,
}

impl ConeClass {
    pub fn from_margin(margin: f64, tol: f64) -> Self {
        let verdict = if margin > tol {
            Verdict::Interior
        } else if margin < -tol {
            Verdict::Outside
        } else {
            Verdict::Boundary
        };
        ConeClass { verdict, margin }
    }
}

/// Interior / Boundary / Outside of `M` relative to `U` at tolerance `tol`.
pub fn classify(m: &SymMatrix, u: &ConeSpec, tol: f64) -> ConeClass {
    ConeClass::from_margin(u.margin_matrix(m), tol)
}

pub fn classify_spectrum(lambda: &Spectrum, u: &ConeSpec, tol: f64) -> ConeClass {
    ConeClass::from_margin(u.margin(lambda), tol)
}

#[derive(Debug, Clone)]
pub struct AxiomRow {
    pub axiom: Axiom,
    pub claimed: bool,
    pub tested: usize,
    pub violations: usize,
    /// Eigenvalues of the first offending matrix.
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub cone: ConeSpec,
    pub rows: Vec<AxiomRow>,
    /// Samples for which no member of `U` could be drawn.
    pub unsampled: usize,
}

impl AxiomReport {
    pub fn row(&self, axiom: Axiom) -> &AxiomRow {
        self.rows.iter().find(|r| r.axiom == axiom).expect("all axioms reported")
    }

    /// True if no claimed axiom was violated.
    pub fn claims_hold(&self) -> bool {
        self.rows.iter().all(|r| !r.claimed || r.violations == 0)
    }
}

fn random_sym(n: usize, scale: f64, rng: &mut SeededRng) -> SymMatrix {
    SymMatrix::from_fn(n, |i, j| {
        let g: f64 = rng.sample(StandardNormal);
        if i == j {
            scale * g
        } else {
            scale * g * std::f64::consts::FRAC_1_SQRT_2
        }
    })
}

fn random_posdef(n: usize, rng: &mut SeededRng) -> SymMatrix {
    let g: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    let scale = rng.gen_range(-3.0f64..3.0).exp();
    let mut b =
        SymMatrix::from_fn(n, |i, j| (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>() * scale / n as f64);
    b.add_diag(1e-3 * scale);
    b
}

/// Draws a member of `U` with a margin safely away from zero.
fn sample_member(u: &ConeSpec, rng: &mut SeededRng) -> Option<SymMatrix> {
    for attempt in 0..64 {
        let scale = rng.gen_range(-2.0f64..2.0).exp();
        let mut m = random_sym(u.n, scale, rng);
        if attempt >= 8 {
            m.add_diag(0.5 * scale * (attempt - 7) as f64);
        }
        if u.margin_matrix(&m) > 1e-9 * (1.0 + m.frobenius()) {
            return Some(m);
        }
    }
    None
}

/// Sampling-based check of the axioms for `U`.
pub fn axiom_check(u: &ConeSpec, samples: usize, seed: u64) -> Result<AxiomReport> {
    if samples == 0 {
        return arg("axiom_check needs at least one sample");
    }
    let mut rng = seeded(seed);
    let mut rows: Vec<AxiomRow> = Axiom::ALL
        .iter()
        .map(|&axiom| AxiomRow { axiom, claimed: u.claims(axiom), tested: 0, violations: 0, witness: None })
        .collect();
    let mut unsampled = 0;
    let record = |rows: &mut Vec<AxiomRow>, axiom: Axiom, ok: bool, m: &SymMatrix| {
        let row = rows.iter_mut().find(|r| r.axiom == axiom).unwrap();
        row.tested += 1;
        if !ok {
            row.violations += 1;
            if row.witness.is_none() {
                row.witness = Some(eigen_sym(m).values().to_vec());
            }
        }
    };
    for _ in 0..samples {
        let Some(a) = sample_member(u, &mut rng) else {
            unsampled += 1;
            continue;
        };
        let b = random_posdef(u.n, &mut rng);
        let sum = &a + &b;
        record(&mut rows, Axiom::PositiveShift, u.margin_matrix(&sum) > 0.0, &sum);

        let c = rng.gen_range(-4.0f64..4.0).exp();
        let ca = a.scale(c);
        record(&mut rows, Axiom::Cone, u.margin_matrix(&ca) > 0.0, &ca);

        let c = rng.gen_range(0.01f64..0.99);
        let ca = a.scale(c);
        record(&mut rows, Axiom::Shrink, u.margin_matrix(&ca) > 0.0, &ca);

        let c = 1.0 / rng.gen_range(0.01f64..0.99);
        let ca = a.scale(c);
        record(&mut rows, Axiom::Stretch, u.margin_matrix(&ca) > 0.0, &ca);

        record(&mut rows, Axiom::TracePositive, a.trace() > 0.0, &a);
    }
    Ok(AxiomReport { cone: u.clone(), rows, unsampled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(text: &str, n: usize) -> ConeSpec {
        ConeSpec::parse(text, n).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(in_cone(&Spectrum::new(vec![1.0, 1.0, 1.0]), &spec("gamma_k:3", 3)));
        assert!(!in_cone(&Spectrum::new(vec![2.0, 2.0, -1.0]), &spec("gamma_k:2", 3)));
        assert!(in_cone(&Spectrum::new(vec![-1.0, -1.0, 5.0]), &spec("gamma_k:1", 3)));
    }

    #[test]
    fn classify_examples() {
        let z = SymMatrix::zeros(3);
        for k in 1..=3 {
            let c = classify(&z, &ConeSpec::new(ConeKind::GammaK(k), 3).unwrap(), 1e-12);
            assert_eq!(c.verdict, Verdict::Boundary);
            assert_eq!(c.margin, 0.0);
        }
        let id = SymMatrix::identity(3);
        assert_eq!(classify(&id, &spec("posdef", 3), 1e-9).verdict, Verdict::Interior);
        let mid = id.scale(-1.0);
        let c = classify(&mid, &spec("trace", 3), 1e-9);
        assert_eq!(c.verdict, Verdict::Outside);
        assert_eq!(c.margin, -3.0);
    }

    #[test]
    fn gamma_n_is_posdef_and_gamma_1_is_trace() {
        for lam in [[1.0, 2.0, 3.0], [-0.5, 1.0, 2.0], [-1.0, -1.0, 5.0], [0.0, 1.0, 1.0]] {
            let s = Spectrum::new(lam.to_vec());
            assert_eq!(in_cone(&s, &spec("gamma_k:3", 3)), in_cone(&s, &spec("posdef", 3)));
            assert_eq!(in_cone(&s, &spec("gamma_k:1", 3)), in_cone(&s, &spec("trace", 3)));
        }
    }

    #[test]
    fn text_round_trip() {
        for t in ["gamma_k:2", "posdef", "one_pos", "trace", "neg_gamma_c:3", "neg:neg:posdef"] {
            assert_eq!(spec(t, 3).to_string(), t);
        }
        assert!(ConeSpec::parse("gamma_k:4", 3).is_err());
        assert!(ConeSpec::parse("gamma_k:0", 3).is_err());
        assert!(ConeSpec::parse("cube", 3).is_err());
    }

    #[test]
    fn negation_pairs() {
        // S \ (−Ū) swaps "positive definite" and "one positive eigenvalue".
        let pd = spec("posdef", 3);
        let neg_one = spec("neg:one_pos", 3);
        let op = spec("one_pos", 3);
        let neg_pd = spec("neg:posdef", 3);
        for lam in [[1.0, 2.0, 3.0], [-1.0, 0.5, 2.0], [-3.0, -2.0, -1.0], [-1.0, -1.0, 0.1]] {
            let s = Spectrum::new(lam.to_vec());
            assert_eq!(in_cone(&s, &pd), in_cone(&s, &neg_one));
            assert_eq!(in_cone(&s, &op), in_cone(&s, &neg_pd));
            let a = spec("neg_gamma_c:2", 3);
            let b = spec("neg:gamma_k:2", 3);
            assert_eq!(a.margin(&s), b.margin(&s));
        }
    }

    #[test]
    fn axiom_examples() {
        let r = axiom_check(&spec("gamma_k:2", 3), 400, 7).unwrap();
        assert!(r.rows.iter().all(|row| row.violations == 0), "{r:?}");

        let r = axiom_check(&spec("one_pos", 3), 400, 7).unwrap();
        assert_eq!(r.row(Axiom::PositiveShift).violations, 0);
        let trace_row = r.row(Axiom::TracePositive);
        assert!(trace_row.violations > 0);
        let w = trace_row.witness.as_ref().unwrap();
        assert!(w.iter().sum::<f64>() <= 0.0 && w[2] > 0.0);
        assert!(r.claims_hold());

        let r = axiom_check(&spec("trace", 4), 300, 1).unwrap();
        assert!(r.rows.iter().all(|row| row.violations == 0));

        for t in ["posdef", "neg_gamma_c:2", "neg:gamma_k:3", "neg_gamma_c:1"] {
            let r = axiom_check(&spec(t, 3), 300, 3).unwrap();
            assert!(r.claims_hold(), "{t}: {r:?}");
            assert_eq!(r.unsampled, 0);
        }
    }

    /// Points satisfying the σ-characterization of Γ_k lie in the component of
    /// {σ_k > 0} that contains the positive orthant: the straight segment to
    /// (1, …, 1) stays inside {σ_k > 0}.
    #[test]
    fn gamma_k_characterization_is_path_connected() {
        use rand::Rng;
        let mut rng = seeded(11);
        for n in 2..=3 {
            for k in 1..=n {
                let mut hits = 0;
                while hits < 200 {
                    let lam: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let e = sigma_all(&lam);
                    if !(1..=k).all(|j| e[j] > 0.0) {
                        continue;
                    }
                    hits += 1;
                    for step in 0..=100 {
                        let t = step as f64 / 100.0;
                        let pt: Vec<f64> = lam.iter().map(|l| (1.0 - t) * l + t).collect();
                        assert!(sigma_all(&pt)[k] > 0.0, "n={n} k={k} lam={lam:?} t={t}");
                    }
                }
            }
        }
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    proptest! {
        #[test]
        fn monotone_in_each_eigenvalue(
            lam in prop::collection::vec(-3.0f64..3.0, 3),
            bump in prop::collection::vec(0.0f64..2.0, 3),
            k in 1usize..=3,
        ) {
            let u = ConeSpec::new(ConeKind::GammaK(k), 3).unwrap();
            let mu: Vec<f64> = lam.iter().zip(&bump).map(|(a, b)| a + b).collect();
            if in_cone(&Spectrum::new(lam), &u) {
                prop_assert!(in_cone(&Spectrum::new(mu), &u));
            }
        }

        #[test]
        fn cones_are_nested(lam in prop::collection::vec(-3.0f64..3.0, 4), k in 2usize..=4) {
            let s = Spectrum::new(lam);
            if in_cone(&s, &ConeSpec::new(ConeKind::GammaK(k), 4).unwrap()) {
                for j in 1..k {
                    prop_assert!(in_cone(&s, &ConeSpec::new(ConeKind::GammaK(j), 4).unwrap()));
                }
            }
        }

        #[test]
        fn verdict_scale_invariant(lam in prop::collection::vec(-3.0f64..3.0, 3), c in 0.01f64..100.0, which in 0usize..6) {
            let kinds = [
                ConeKind::GammaK(2), ConeKind::PosDef, ConeKind::AtLeastOnePositive,
                ConeKind::TraceCone, ConeKind::NegGammaComplement(2),
                ConeKind::Negated(Box::new(ConeKind::GammaK(3))),
            ];
            let u = ConeSpec::new(kinds[which].clone(), 3).unwrap();
            let lam = sorted(lam);
            let m = u.margin_sorted(&lam);
            let scaled: Vec<f64> = lam.iter().map(|v| c * v).collect();
            let ms = u.margin_sorted(&scaled);
            // margins are homogeneous of degree one, so verdicts at tol scaled by c agree
            prop_assert!((ms - c * m).abs() <= 1e-9 * c * (1.0 + m.abs()));
            let tol = 1e-6;
            prop_assert_eq!(
                ConeClass::from_margin(m, tol).verdict,
                ConeClass::from_margin(ms, c * tol).verdict
            );
        }

        #[test]
        fn positive_shift_never_lowers_verdict(
            lam in prop::collection::vec(-3.0f64..3.0, 3),
            bump in prop::collection::vec(0.0f64..2.0, 3),
            which in 0usize..6,
        ) {
            let kinds = [
                ConeKind::GammaK(2), ConeKind::PosDef, ConeKind::AtLeastOnePositive,
                ConeKind::TraceCone, ConeKind::NegGammaComplement(2),
                ConeKind::Negated(Box::new(ConeKind::GammaK(3))),
            ];
            let u = ConeSpec::new(kinds[which].clone(), 3).unwrap();
            let a = SymMatrix::diag(&lam);
            let b = SymMatrix::diag(&bump);
            let before = classify(&a, &u, 1e-9).verdict;
            let after = classify(&(&a + &b), &u, 1e-9).verdict;
            if before == Verdict::Interior {
                prop_assert_eq!(after, Verdict::Interior);
            }
        }
    }
}
