//! Numerical certificates: the rigidity round trip between two
//! configurations with isomorphic complexes, and finite-difference
//! Jacobian ranks of the retraction on corner strata.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Serialize, Serializer};

use crate::complex::{build_complex, verify_isomorphism, Face};
use crate::config::{check_permutation, is_admissible, AmbientPoint, Configuration};
use crate::corpus::{random_point, CorpusRng};
use crate::error::{Error, Result};
use crate::geometry::affine_nullspace;
use crate::leaf::{retract_with, xap_residual, SolverSettings};
use crate::mac::CombinatorialProjector;
use crate::rational::to_f64;

pub const DEFAULT_RIGIDITY_TOL: f64 = 1e-8;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Relative singular value threshold for the numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-6;
const ON_STRATUM_TOL: f64 = 1e-9;

fn one_based<S: Serializer>(v: &[usize], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|i| i + 1).collect::<Vec<_>>().serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityReport {
    /// 1-based: coordinate `i` of A goes to coordinate `permutation[i]` of A'.
    #[serde(serialize_with = "one_based")]
    pub permutation: Vec<usize>,
    pub isomorphism: bool,
    pub samples: usize,
    /// Max over samples of `||x'' - x||_inf` after going to A' and back.
    #[serde(serialize_with = "crate::json::real")]
    pub diagram_residual: f64,
    /// Max X_{A'}(2) defect of the forward images.
    #[serde(serialize_with = "crate::json::real")]
    pub forward_residual: f64,
    #[serde(serialize_with = "crate::json::real")]
    pub tolerance: f64,
    pub passed: bool,
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &j) in perm.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// Carries X_A(2) to X_{A'}(2) through the moment-angle complexes, where
/// the permutation acts directly, and back again.
///
/// Forward: `x -> project_A(x) -> permute -> retract_{A'}`. Back:
/// `x' -> project_{A'}(x') -> permute^{-1} -> retract_A`. Each stage is
/// constant on leaves, so the round trip is the identity on X_A(2).
pub fn rigidity_check(
    a: &Configuration,
    a_prime: &Configuration,
    perm: &[usize],
    n_samples: usize,
    rng: &mut CorpusRng,
    tol: f64,
) -> Result<RigidityReport> {
    if a.m() != a_prime.m() {
        return Err(Error::DimensionMismatch {
            expected: a.m(),
            found: a_prime.m(),
        });
    }
    check_permutation(perm, a.m())?;
    let proj = CombinatorialProjector::new(a)?;
    let proj_prime = CombinatorialProjector::new(a_prime)?;
    if !verify_isomorphism(proj.complex(), proj_prime.complex(), perm)? {
        return Err(Error::NotAnIsomorphism);
    }
    let inv = inverse(perm);
    let settings = SolverSettings::default();
    let mut diagram_residual = 0.0f64;
    let mut forward_residual = 0.0f64;
    for _ in 0..n_samples {
        let z = random_point(rng, a.m());
        let x = retract_with(a, &z, 2.0, &settings)?;
        let y = proj.project(&x)?.y.permute(perm)?;
        let x_prime = retract_with(a_prime, &y, 2.0, &settings)?;
        let (moment, norm) = xap_residual(a_prime, &x_prime, 2.0)?;
        forward_residual = forward_residual.max(moment).max(norm);
        let back = proj_prime.project(&x_prime)?.y.permute(&inv)?;
        let x_back = retract_with(a, &back, 2.0, &settings)?;
        diagram_residual = diagram_residual.max(x_back.max_abs_diff(&x));
    }
    Ok(RigidityReport {
        permutation: perm.to_vec(),
        isomorphism: true,
        samples: n_samples,
        diagram_residual,
        forward_residual,
        tolerance: tol,
        passed: diagram_residual < tol && forward_residual < tol,
    })
}

/// A corner stratum of X_A(2) or X_A(1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stratum {
    /// `D(sigma)`: `|y_i| < 1` on `sigma`, `|y_i| = 1` elsewhere (0-based).
    CubeFace(Vec<usize>),
    /// Positive points of X_A(1): `sum A_i x_i = 0`, `sum x_i = 1`, `x > 0`.
    Orthant,
}

impl Serialize for Stratum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            kind: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            face: Option<Vec<usize>>,
        }
        match self {
            Stratum::CubeFace(f) => Doc {
                kind: "cube_face",
                face: Some(f.iter().map(|i| i + 1).collect()),
            },
            Stratum::Orthant => Doc {
                kind: "orthant",
                face: None,
            },
        }
        .serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianCertificate {
    pub stratum: Stratum,
    #[serde(serialize_with = "crate::json::reals")]
    pub point: Vec<f64>,
    /// Descending.
    #[serde(serialize_with = "crate::json::reals")]
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub expected_rank: usize,
    /// Smallest retained singular value over the largest (1 for rank 0).
    #[serde(serialize_with = "crate::json::real")]
    pub margin: f64,
    #[serde(serialize_with = "crate::json::real")]
    pub h: f64,
    pub richardson: bool,
    pub certified_at_sample_points_only: bool,
}

impl JacobianCertificate {
    pub fn full_rank(&self, min_margin: f64) -> bool {
        self.rank == self.expected_rank && self.margin >= min_margin
    }
}

/// Orthonormal basis (columns) of `{v : sum A_i v_i = 0, sum v_i = 0}`.
fn orthant_tangent(a: &Configuration) -> DMatrix<f64> {
    let null = affine_nullspace(&a.matrix());
    let rows = null.to_rows();
    let m = a.m();
    if rows.is_empty() {
        return DMatrix::zeros(m, 0);
    }
    let mut basis = DMatrix::<f64>::zeros(m, rows.len());
    for (c, row) in rows.iter().enumerate() {
        for (r, v) in row.iter().enumerate() {
            basis[(r, c)] = to_f64(v);
        }
    }
    basis.qr().q()
}

/// Tangent basis (columns) and expected rank, after checking the point.
fn stratum_frame(a: &Configuration, stratum: &Stratum, point: &[f64]) -> Result<DMatrix<f64>> {
    let m = a.m();
    match stratum {
        Stratum::CubeFace(sigma) => {
            let face = Face::from_indices(sigma.iter().copied());
            let k = build_complex(a)?;
            if !k.contains(face) || sigma.iter().any(|&i| i >= m) {
                return Err(Error::FaceNotInComplex(sigma.iter().map(|i| i + 1).collect()));
            }
            let mut off = 0.0f64;
            for (i, &y) in point.iter().enumerate() {
                off = off.max(if face.contains(i) {
                    if y > 0.0 && y < 1.0 {
                        0.0
                    } else {
                        f64::max(-y, y - 1.0).max(2.0 * ON_STRATUM_TOL)
                    }
                } else {
                    (y - 1.0).abs()
                });
            }
            if off > ON_STRATUM_TOL {
                return Err(Error::OffStratum(off));
            }
            let idx = face.indices();
            let mut basis = DMatrix::<f64>::zeros(m, idx.len());
            for (c, &i) in idx.iter().enumerate() {
                basis[(i, c)] = 1.0;
            }
            Ok(basis)
        }
        Stratum::Orthant => {
            let cols = a.columns_f64();
            let mut off = point.iter().map(|&x| if x > 0.0 { 0.0 } else { 1.0 }).fold(0.0, f64::max);
            for k in 0..a.d() {
                off = off.max(cols.iter().zip(point).map(|(c, x)| c[k] * x).sum::<f64>().abs());
            }
            off = off.max((point.iter().sum::<f64>() - 1.0).abs());
            if off > ON_STRATUM_TOL {
                return Err(Error::OffStratum(off));
            }
            Ok(orthant_tangent(a))
        }
    }
}

fn retract_real(a: &Configuration, x: &[f64], settings: &SolverSettings) -> Result<DVector<f64>> {
    let y = retract_with(a, &AmbientPoint::real(x), 2.0, settings)?;
    Ok(DVector::from_iterator(x.len(), y.coords().iter().map(|c| c.re)))
}

fn central_differences(
    a: &Configuration,
    point: &[f64],
    basis: &DMatrix<f64>,
    h: f64,
    settings: &SolverSettings,
) -> Result<DMatrix<f64>> {
    let m = point.len();
    let mut jac = DMatrix::<f64>::zeros(m, basis.ncols());
    for (c, dir) in basis.column_iter().enumerate() {
        let plus: Vec<f64> = point.iter().zip(dir.iter()).map(|(x, v)| x + h * v).collect();
        let minus: Vec<f64> = point.iter().zip(dir.iter()).map(|(x, v)| x - h * v).collect();
        let diff = (retract_real(a, &plus, settings)? - retract_real(a, &minus, settings)?) / (2.0 * h);
        jac.set_column(c, &diff);
    }
    Ok(jac)
}

fn singular_values(jac: &DMatrix<f64>) -> Vec<f64> {
    if jac.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = jac.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

fn near_threshold(s: &[f64]) -> bool {
    let top = s.first().copied().unwrap_or(0.0);
    s.iter()
        .any(|&v| v > 0.1 * RANK_THRESHOLD * top && v < 10.0 * RANK_THRESHOLD * top)
}

/// Finite-difference Jacobian of the retraction onto X_A(2) along the
/// tangent space of `stratum` at a real `point` of it.
pub fn jacobian_rank(
    a: &Configuration,
    stratum: &Stratum,
    point: &[f64],
    h: f64,
) -> Result<JacobianCertificate> {
    if !a.is_centered() {
        return Err(Error::NotCentered);
    }
    if !is_admissible(a) {
        return Err(Error::NotAdmissible);
    }
    if point.len() != a.m() {
        return Err(Error::DimensionMismatch {
            expected: a.m(),
            found: point.len(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h = {h} must be positive")));
    }
    let basis = stratum_frame(a, stratum, point)?;
    let settings = SolverSettings {
        tol: 1e-14,
        ..SolverSettings::default()
    };
    let mut jac = central_differences(a, point, &basis, h, &settings)?;
    let mut s = singular_values(&jac);
    let mut richardson = false;
    if near_threshold(&s) {
        let half = central_differences(a, point, &basis, h / 2.0, &settings)?;
        jac = (half * 4.0 - jac) / 3.0;
        s = singular_values(&jac);
        richardson = true;
    }
    let top = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&v| v > RANK_THRESHOLD * top).count();
    let margin = if rank == 0 { 1.0 } else { s[rank - 1] / top };
    Ok(JacobianCertificate {
        stratum: stratum.clone(),
        point: point.to_vec(),
        singular_values: s,
        rank,
        expected_rank: basis.ncols(),
        margin,
        h,
        richardson,
        certified_at_sample_points_only: true,
    })
}

/// A point of `D(sigma)`: moduli in `[1/5, 4/5]` on `sigma`, 1 elsewhere.
pub fn sample_cube_face(rng: &mut CorpusRng, m: usize, sigma: &[usize]) -> Vec<f64> {
    (0..m)
        .map(|i| if sigma.contains(&i) { rng.random_range(0.2..0.8) } else { 1.0 })
        .collect()
}

/// A positive point of X_A(1) for centered A: `1/m` plus a random tangent
/// step of sup-norm at most `1/(2m)`.
pub fn sample_orthant(rng: &mut CorpusRng, a: &Configuration) -> Result<Vec<f64>> {
    if !a.is_centered() {
        return Err(Error::NotCentered);
    }
    let m = a.m();
    let basis = orthant_tangent(a);
    let coef = DVector::from_iterator(basis.ncols(), (0..basis.ncols()).map(|_| rng.random_range(-1.0..1.0)));
    let step = &basis * coef;
    let size = step.amax();
    let scale = if size > 0.0 { 0.5 / (m as f64 * size) } else { 0.0 };
    Ok((0..m).map(|i| 1.0 / m as f64 + scale * step[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{example, rng, segment};

    #[test]
    fn identity_rigidity() {
        let a = example();
        let id: Vec<usize> = (0..5).collect();
        let r = rigidity_check(&a, &a, &id, 3, &mut rng(0), 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.diagram_residual < 1e-10);
    }

    #[test]
    fn duplicate_columns_swap() {
        let a = example();
        let r = rigidity_check(&a, &a, &[0, 1, 3, 2, 4], 3, &mut rng(1), 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn non_isomorphism_rejected() {
        let a = example();
        let err = rigidity_check(&a, &a, &[1, 2, 0, 3, 4], 1, &mut rng(0), 1e-8).unwrap_err();
        assert_eq!(err, Error::NotAnIsomorphism);
    }

    #[test]
    fn example_cube_face_rank() {
        let a = example();
        let x = sample_cube_face(&mut rng(3), 5, &[0, 2]);
        let c = jacobian_rank(&a, &Stratum::CubeFace(vec![0, 2]), &x, DEFAULT_FD_STEP).unwrap();
        assert_eq!((c.rank, c.expected_rank), (2, 2));
        assert!(c.margin > 1e-4);
    }

    #[test]
    fn simplex_boundary_cube_face() {
        let a = Configuration::zero_dimensional(3).unwrap();
        let x = sample_cube_face(&mut rng(0), 3, &[0, 1]);
        let c = jacobian_rank(&a, &Stratum::CubeFace(vec![0, 1]), &x, DEFAULT_FD_STEP).unwrap();
        assert_eq!((c.rank, c.expected_rank), (2, 2));
    }

    #[test]
    fn segment_orthant_is_a_point() {
        let a = segment();
        let x = sample_orthant(&mut rng(0), &a).unwrap();
        assert_eq!(x, vec![0.5, 0.5]);
        let c = jacobian_rank(&a, &Stratum::Orthant, &x, DEFAULT_FD_STEP).unwrap();
        assert_eq!((c.rank, c.expected_rank), (0, 0));
    }

    #[test]
    fn off_stratum_rejected() {
        let a = example();
        let err = jacobian_rank(&a, &Stratum::CubeFace(vec![0, 2]), &[0.5, 0.9, 0.5, 1.0, 1.0], 1e-5);
        assert!(matches!(err, Err(Error::OffStratum(_))));
        let err = jacobian_rank(&a, &Stratum::CubeFace(vec![0, 1]), &[0.5, 0.5, 1.0, 1.0, 1.0], 1e-5);
        assert!(matches!(err, Err(Error::FaceNotInComplex(_))));
    }
}
