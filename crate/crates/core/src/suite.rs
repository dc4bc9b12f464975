//! Bundled invariant batteries behind `siegel verify <suite>`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::complex::{build_complex, realize_polytope, verify_isomorphism, SimplicialComplex};
use crate::config::{admissibility, gale_dual, gale_transform, verify_gale_dual, Configuration};
use crate::corpus::{self, CorpusRng};
use crate::error::{Error, Result};
use crate::json::format_real;
use crate::leaf::{flow, lp_norm, retract, LeafSolver, SolverSettings};
use crate::mac::{default_schedule, mac_contains, project_plimit, CombinatorialProjector};
use crate::rational::RationalMatrix;
use crate::verify::{
    jacobian_rank, rigidity_check, sample_cube_face, sample_orthant, Stratum, DEFAULT_FD_STEP,
};

pub const SUITES: [&str; 6] = [
    "admissibility",
    "combinatorics",
    "minimization",
    "projection",
    "rigidity",
    "jacobian",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: Value) {
        self.0.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    /// Records an error as a failed check instead of aborting the suite.
    fn run(&mut self, name: &str, f: impl FnOnce() -> Result<(bool, Value)>) {
        match f() {
            Ok((passed, detail)) => self.push(name, passed, detail),
            Err(e) => self.push(name, false, json!({ "error": e.to_string() })),
        }
    }
}

fn real(x: f64) -> Value {
    serde_json::from_str(&format_real(x)).expect("formatted float parses")
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    let mut rng = corpus::rng(seed);
    let mut checks = Checks::default();
    match name {
        "admissibility" => admissibility_suite(&mut checks, &mut rng),
        "combinatorics" => combinatorics_suite(&mut checks, &mut rng),
        "minimization" => minimization_suite(&mut checks, &mut rng),
        "projection" => projection_suite(&mut checks, &mut rng),
        "rigidity" => rigidity_suite(&mut checks, &mut rng),
        "jacobian" => jacobian_suite(&mut checks, &mut rng),
        other => return Err(Error::UnknownSuite(other.to_string())),
    }
    let checks = checks.0;
    Ok(SuiteReport {
        suite: name.to_string(),
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn admissibility_suite(checks: &mut Checks, rng: &mut CorpusRng) {
    let r = admissibility(&corpus::example());
    checks.push(
        "example admissible and centered",
        r.siegel && r.weak_hyperbolicity && r.centered,
        serde_json::to_value(&r).expect("serializable"),
    );
    checks.run("counterexample violates weak hyperbolicity", || {
        let a = gale_transform(&corpus::counterexample_dual())?;
        let r = admissibility(&a);
        let size = r.violating_subset.as_ref().map_or(0, Vec::len);
        Ok((r.siegel && !r.weak_hyperbolicity && size == 2, serde_json::to_value(&r).expect("serializable")))
    });
    let r = admissibility(&corpus::uncentered());
    checks.push("uncentered tuple reported", !r.centered, json!({ "centered": r.centered }));
    let mut bad = 0;
    for _ in 0..20 {
        let a = corpus::random_admissible_centered(rng, 3, 7);
        let r = admissibility(&a);
        let cert_ok = r
            .siegel_certificate
            .as_ref()
            .is_some_and(|c| c.verify(a.columns()));
        if !(r.admissible() && r.centered && cert_ok) {
            bad += 1;
        }
    }
    checks.push("random corpus certificates", bad == 0, json!({ "configurations": 20, "failures": bad }));
}

fn four_cycle() -> SimplicialComplex {
    SimplicialComplex::from_index_sets(5, &[vec![0, 2], vec![2, 1], vec![1, 3], vec![3, 0]])
}

fn combinatorics_suite(checks: &mut Checks, rng: &mut CorpusRng) {
    let a = corpus::example();
    checks.run("example gale dual", || {
        let v = gale_dual(&a)?;
        let known = corpus::example_dual();
        Ok((
            verify_gale_dual(&a, &known) && v.row_equivalent(&known),
            json!({ "V": v.to_rows().iter().map(|r| r.iter().map(crate::rational::format_rational).collect::<Vec<_>>()).collect::<Vec<_>>() }),
        ))
    });
    checks.run("example complex is the 4-cycle", || {
        let k = build_complex(&a)?;
        Ok((k == four_cycle(), serde_json::to_value(&k).expect("serializable")))
    });
    checks.run("example polytope realization", || {
        let r = realize_polytope(&a)?;
        Ok((
            r.vertex_indices == vec![0, 1, 2, 3] && r.interior_indices == vec![4] && r.boundary == r.complex,
            json!({ "vertices": [1, 2, 3, 4], "interior": r.interior_indices.iter().map(|i| i + 1).collect::<Vec<_>>() }),
        ))
    });
    checks.run("counterexample transform", || {
        let a = gale_transform(&corpus::counterexample_dual())?;
        let known = RationalMatrix::from_i64_rows(&[&[0, 0, 1, -1], &[1, -1, 0, 0]]);
        Ok((a.matrix().row_equivalent(&known), serde_json::to_value(&a).expect("serializable")))
    });
    let mut bad = Vec::new();
    for k in 0..20 {
        let a = corpus::random_admissible_centered(rng, 3, 7);
        let perm = corpus::random_permutation(rng, a.m());
        let ok = (|| -> Result<bool> {
            let v = gale_dual(&a)?;
            let back = gale_transform(&v)?;
            let round_trip = back.matrix().row_equivalent(&a.matrix());
            let k = build_complex(&a)?;
            let equivariant = build_complex(&a.permute(&perm)?)? == k.map(&perm)
                && verify_isomorphism(&k, &k.map(&perm), &perm)?;
            let realized = realize_polytope(&a)?.boundary == k;
            Ok(round_trip && equivariant && realized)
        })();
        if !matches!(ok, Ok(true)) {
            bad.push(k);
        }
    }
    checks.push(
        "random gale round trip, equivariance, realization",
        bad.is_empty(),
        json!({ "configurations": 20, "failures": bad }),
    );
}

fn minimization_suite(checks: &mut Checks, rng: &mut CorpusRng) {
    let settings = SolverSettings::default();
    let (mut residual, mut equivariance, mut idempotence, mut sandwich) = (0.0f64, 0.0f64, 0.0f64, true);
    let mut errors = Vec::new();
    for k in 0..20 {
        let a = corpus::random_admissible_centered(rng, 3, 8);
        for _ in 0..3 {
            let z = corpus::random_point(rng, a.m());
            let t0: Vec<f64> = (0..a.d()).map(|_| rand::Rng::random_range(rng, -1.0..1.0)).collect();
            let step = (|| -> Result<()> {
                let solver = LeafSolver::new(&a, &z)?;
                let min = solver.solve(2.0, &settings)?;
                residual = residual.max(min.residual);
                let shifted = flow(&a, &z, &t0)?;
                let min2 = LeafSolver::new(&a, &shifted)?.solve(2.0, &settings)?;
                for ((s, t), o) in min2.t.iter().zip(&min.t).zip(&t0) {
                    equivariance = equivariance.max((s - (t - o)).abs());
                }
                let x = retract(&a, &z, 2.0)?;
                idempotence = idempotence.max(retract(&a, &x, 2.0)?.max_abs_diff(&x));
                let moduli = flow(&a, &z, &t0)?.moduli();
                for p in [1.5, 2.0, 3.0] {
                    let q = p / (p - 1.0);
                    let np = lp_norm(&moduli, p);
                    let n1 = lp_norm(&moduli, 1.0);
                    let bound = (a.m() as f64).powf(1.0 / q) * np;
                    sandwich &= np <= n1 * (1.0 + 1e-12) && n1 <= bound * (1.0 + 1e-12);
                }
                Ok(())
            })();
            if let Err(e) = step {
                errors.push(json!({ "configuration": k, "error": e.to_string() }));
            }
        }
    }
    checks.push("no solver errors", errors.is_empty(), Value::Array(errors));
    checks.push("critical residual < 1e-10", residual < 1e-10, json!({ "max": real(residual) }));
    checks.push("leaf equivariance < 1e-8", equivariance < 1e-8, json!({ "max": real(equivariance) }));
    checks.push("retraction idempotence < 1e-8", idempotence < 1e-8, json!({ "max": real(idempotence) }));
    checks.push("norm sandwich", sandwich, json!({}));
}

fn projection_suite(checks: &mut Checks, rng: &mut CorpusRng) {
    let settings = SolverSettings::default();
    let (mut dt, mut dy, mut recon) = (0.0f64, 0.0f64, 0.0f64);
    let mut outside = 0;
    let mut errors = Vec::new();
    let mut samples = 0;
    for k in 0..20 {
        let a = corpus::random_admissible_centered(rng, 3, 8);
        let z = if k % 4 == 3 {
            match corpus::random_stratum_point(rng, &a) {
                Some(z) => z,
                None => continue,
            }
        } else {
            corpus::random_point(rng, a.m())
        };
        samples += 1;
        let step = (|| -> Result<()> {
            let proj = CombinatorialProjector::new(&a)?;
            let c = proj.project(&z)?;
            let p = project_plimit(&a, &z, &default_schedule(), &settings)?.result;
            dt = dt.max(c.t_inf.iter().zip(&p.t_inf).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
            dy = dy.max(c.y.max_abs_diff(&p.y));
            for r in [&c, &p] {
                recon = recon.max(r.reconstruction_error(&a, &z)?);
                if !mac_contains(proj.complex(), &r.y, 1e-8)?.inside {
                    outside += 1;
                }
            }
            Ok(())
        })();
        if let Err(e) = step {
            errors.push(json!({ "sample": k, "error": e.to_string() }));
        }
    }
    checks.push("no projection errors", errors.is_empty(), Value::Array(errors));
    checks.push(
        "combinatorial and p-limit agree",
        dt < 1e-6 && dy < 1e-4,
        json!({ "samples": samples, "max_T_difference": real(dt), "max_y_difference": real(dy) }),
    );
    checks.push("outputs lie in the moment-angle complex", outside == 0, json!({ "outside": outside }));
    checks.push("reconstruction < 1e-9", recon < 1e-9, json!({ "max": real(recon) }));
}

fn rigidity_suite(checks: &mut Checks, rng: &mut CorpusRng) {
    let a = corpus::example();
    for k in 0..5 {
        let perm = corpus::random_permutation(rng, a.m());
        checks.run(&format!("example permuted {k}"), || {
            let b = a.permute(&perm)?;
            let r = rigidity_check(&a, &b, &perm, 3, rng, 1e-8)?;
            Ok((r.passed, serde_json::to_value(&r).expect("serializable")))
        });
    }
    checks.run("self-isomorphism swapping equal columns", || {
        let r = rigidity_check(&a, &a, &[0, 1, 3, 2, 4], 3, rng, 1e-8)?;
        Ok((r.passed, serde_json::to_value(&r).expect("serializable")))
    });
}

fn jacobian_suite(checks: &mut Checks, rng: &mut CorpusRng) {
    let cases: Vec<(String, Configuration)> = vec![
        ("example".into(), corpus::example()),
        ("simplex boundary".into(), Configuration::zero_dimensional(3).expect("m > 0")),
        ("segment".into(), corpus::segment()),
    ];
    for (label, a) in cases {
        let k = match build_complex(&a) {
            Ok(k) => k,
            Err(e) => {
                checks.push(label, false, json!({ "error": e.to_string() }));
                continue;
            }
        };
        for sigma in k.maximal_index_sets() {
            checks.run(&format!("{label} cube face {:?}", sigma.iter().map(|i| i + 1).collect::<Vec<_>>()), || {
                let x = sample_cube_face(rng, a.m(), &sigma);
                let c = jacobian_rank(&a, &Stratum::CubeFace(sigma.clone()), &x, DEFAULT_FD_STEP)?;
                Ok((c.full_rank(1e-4), serde_json::to_value(&c).expect("serializable")))
            });
        }
        checks.run(&format!("{label} orthant"), || {
            let x = sample_orthant(rng, &a)?;
            let c = jacobian_rank(&a, &Stratum::Orthant, &x, DEFAULT_FD_STEP)?;
            Ok((c.full_rank(1e-4), serde_json::to_value(&c).expect("serializable")))
        });
    }
}
