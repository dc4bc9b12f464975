//! Exact convex geometry on small rational point sets, plus the floating
//! point radial decomposition used by the p = infinity projector.

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{maximize, LpOutcome};
use crate::rational::{dot, int, serde_rational, to_f64, Rational, RationalMatrix};

/// Convex coefficients witnessing that the origin lies in the hull of a
/// point list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HullCertificate {
    #[serde(with = "serde_rational::vec")]
    pub lambda: Vec<Rational>,
    /// Set for relative-interior certificates (every coefficient positive).
    pub strict: bool,
}

impl HullCertificate {
    /// Re-checks the certificate against `points` in exact arithmetic.
    pub fn verify(&self, points: &[Vec<Rational>]) -> bool {
        if self.lambda.len() != points.len() {
            return false;
        }
        let sign_ok = if self.strict {
            self.lambda.iter().all(Signed::is_positive)
        } else {
            self.lambda.iter().all(|l| !l.is_negative())
        };
        let sum: Rational = self.lambda.iter().sum();
        if !sign_ok || !sum.is_one() {
            return false;
        }
        let d = points.first().map_or(0, Vec::len);
        (0..d).all(|k| {
            points
                .iter()
                .zip(&self.lambda)
                .fold(Rational::zero(), |acc, (p, l)| acc + l * &p[k])
                .is_zero()
        })
    }
}

fn common_dimension(points: &[Vec<Rational>]) -> Result<usize> {
    let d = points
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty point list".into()))?
        .len();
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
    }
    Ok(d)
}

/// Decides `0 in conv(points)` exactly.
pub fn origin_in_hull(points: &[Vec<Rational>]) -> Result<Option<HullCertificate>> {
    let d = common_dimension(points)?;
    let k = points.len();
    let mut a: Vec<Vec<Rational>> = (0..d)
        .map(|c| points.iter().map(|p| p[c].clone()).collect())
        .collect();
    a.push(vec![Rational::one(); k]);
    let mut b = vec![Rational::zero(); d];
    b.push(Rational::one());
    let cost = vec![Rational::zero(); k];
    Ok(match maximize(&a, &b, &cost) {
        LpOutcome::Optimal { x, .. } => Some(HullCertificate {
            lambda: x,
            strict: false,
        }),
        _ => None,
    })
}

/// Decides whether the origin is in the relative interior of `conv(points)`
/// by maximizing the smallest convex coefficient.
pub fn origin_in_relint(points: &[Vec<Rational>]) -> Result<Option<HullCertificate>> {
    let d = common_dimension(points)?;
    let k = points.len();
    // lambda_i = s_i + t with s >= 0, t >= 0; maximize t
    let mut a: Vec<Vec<Rational>> = (0..d)
        .map(|c| {
            let mut row: Vec<Rational> = points.iter().map(|p| p[c].clone()).collect();
            row.push(points.iter().map(|p| &p[c]).sum());
            row
        })
        .collect();
    let mut last = vec![Rational::one(); k];
    last.push(int(k as i64));
    a.push(last);
    let mut b = vec![Rational::zero(); d];
    b.push(Rational::one());
    let mut cost = vec![Rational::zero(); k];
    cost.push(Rational::one());
    match maximize(&a, &b, &cost) {
        LpOutcome::Optimal { x, value } if value.is_positive() => {
            let t = &x[k];
            let lambda = x[..k].iter().map(|s| s + t).collect();
            Ok(Some(HullCertificate {
                lambda,
                strict: true,
            }))
        }
        _ => Ok(None),
    }
}

/// Basis of `{x : sum V_i x_i = 0, sum x_i = 0}` where `V_i` are the
/// columns of `v`, returned as rows.
pub fn affine_nullspace(v: &RationalMatrix) -> RationalMatrix {
    v.with_ones_row().nullspace()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    /// Indices of the input points lying on the supporting hyperplane.
    pub indices: Vec<usize>,
    /// Outward normal `h` with `h.x <= offset` on the whole point set.
    #[serde(with = "serde_rational::vec")]
    pub normal: Vec<Rational>,
    #[serde(with = "serde_rational")]
    pub offset: Rational,
}

impl Facet {
    pub fn slack(&self, p: &[Rational]) -> Rational {
        dot(&self.normal, p) - &self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HullFacets {
    pub dimension: usize,
    pub facets: Vec<Facet>,
    pub vertices: Vec<usize>,
    /// Points strictly inside every facet.
    pub interior: Vec<usize>,
    /// Points on the boundary that are not vertices.
    pub boundary: Vec<usize>,
}

/// Enumerates every facet of `conv(points)` by testing all affinely
/// independent n-subsets. Exponential; meant for n <= 6 and a few dozen
/// points.
pub fn facet_enumeration(points: &[Vec<Rational>]) -> Result<HullFacets> {
    let n = common_dimension(points)?;
    let diffs: Vec<Vec<Rational>> = points
        .iter()
        .skip(1)
        .map(|p| p.iter().zip(&points[0]).map(|(a, b)| a - b).collect())
        .collect();
    let span = RationalMatrix::from_rows(diffs, n)?.rank();
    if span < n {
        return Err(Error::DegenerateSpan { rank: span, dim: n });
    }
    if n == 0 {
        let first = &points[0];
        let boundary = (1..points.len()).filter(|&i| points[i] == *first).collect();
        return Ok(HullFacets {
            dimension: 0,
            facets: Vec::new(),
            vertices: vec![0],
            interior: Vec::new(),
            boundary,
        });
    }

    let mut found: BTreeMap<Vec<usize>, Facet> = BTreeMap::new();
    for combo in (0..points.len()).combinations(n) {
        let base = &points[combo[0]];
        let rows: Vec<Vec<Rational>> = combo[1..]
            .iter()
            .map(|&j| points[j].iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        let null = RationalMatrix::from_rows(rows, n)?.nullspace();
        if null.rows() != 1 {
            continue;
        }
        let mut normal = null.row(0).to_vec();
        let mut offset = dot(&normal, base);
        let slacks: Vec<Rational> = points.iter().map(|p| dot(&normal, p) - &offset).collect();
        let pos = slacks.iter().any(Signed::is_positive);
        let neg = slacks.iter().any(Signed::is_negative);
        if pos && neg {
            continue;
        }
        if pos {
            normal.iter_mut().for_each(|x| *x = -x.clone());
            offset = -offset;
        }
        let indices: Vec<usize> = (0..points.len()).filter(|&i| slacks[i].is_zero()).collect();
        if found.contains_key(&indices) {
            continue;
        }
        let scale = normal
            .iter()
            .find(|x| !x.is_zero())
            .map(|x| x.abs())
            .expect("nullspace row is nonzero");
        normal.iter_mut().for_each(|x| *x /= &scale);
        offset /= &scale;
        found.insert(
            indices.clone(),
            Facet {
                indices,
                normal,
                offset,
            },
        );
    }
    let facets: Vec<Facet> = found.into_values().collect();

    let mut vertices = Vec::new();
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for (k, p) in points.iter().enumerate() {
        if facets.iter().all(|f| f.slack(p).is_negative()) {
            interior.push(k);
        } else if is_extreme(points, k)? {
            vertices.push(k);
        } else {
            boundary.push(k);
        }
    }
    Ok(HullFacets {
        dimension: n,
        facets,
        vertices,
        interior,
        boundary,
    })
}

/// A point is extreme when it is not in the hull of the other points; among
/// exact duplicates only the lowest index counts.
fn is_extreme(points: &[Vec<Rational>], k: usize) -> Result<bool> {
    let p = &points[k];
    if points[..k].iter().any(|q| q == p) {
        return Ok(false);
    }
    let others: Vec<Vec<Rational>> = points
        .iter()
        .filter(|q| *q != p)
        .map(|q| q.iter().zip(p).map(|(a, b)| a - b).collect())
        .collect();
    if others.is_empty() {
        return Ok(true);
    }
    Ok(origin_in_hull(&others)?.is_none())
}

/// `nu = rho * sum_i mu_i v_i` with the `v_i` spanning a boundary face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialDecomposition {
    pub rho: f64,
    /// Indices into the polytope's vertex list, increasing.
    pub face: Vec<usize>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone)]
struct ScaledFacet {
    /// normal scaled so that `normal . x <= 1` on the polytope
    normal: DVector<f64>,
    indices: Vec<usize>,
}

/// A full-dimensional polytope with the origin in its interior, prepared
/// for repeated radial decompositions.
#[derive(Debug, Clone)]
pub struct RadialPolytope {
    dimension: usize,
    vertices: Vec<DVector<f64>>,
    facets: Vec<ScaledFacet>,
}

const HIT_TOL: f64 = 1e-9;
const MU_TOL: f64 = 1e-12;

impl RadialPolytope {
    pub fn new(vertices: &[Vec<Rational>]) -> Result<Self> {
        let n = common_dimension(vertices)?;
        let float_vertices: Vec<DVector<f64>> = vertices
            .iter()
            .map(|v| DVector::from_iterator(n, v.iter().map(to_f64)))
            .collect();
        if n == 0 {
            return Ok(Self {
                dimension: 0,
                vertices: float_vertices,
                facets: Vec::new(),
            });
        }
        if origin_in_relint(vertices)?.is_none() {
            return Err(Error::OriginNotInterior);
        }
        let hull = facet_enumeration(vertices).map_err(|e| match e {
            Error::DegenerateSpan { .. } => Error::OriginNotInterior,
            other => other,
        })?;
        let mut facets = Vec::with_capacity(hull.facets.len());
        for f in &hull.facets {
            if !f.offset.is_positive() {
                return Err(Error::OriginNotInterior);
            }
            let normal = DVector::from_iterator(n, f.normal.iter().map(|h| to_f64(&(h / &f.offset))));
            facets.push(ScaledFacet {
                normal,
                indices: f.indices.clone(),
            });
        }
        Ok(Self {
            dimension: n,
            vertices: float_vertices,
            facets,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    /// Vertex index sets of the facets, in the current scan order.
    pub fn facet_indices(&self) -> Vec<Vec<usize>> {
        self.facets.iter().map(|f| f.indices.clone()).collect()
    }

    /// Reorders the facet scan; `order` must be a permutation of the facets.
    pub fn reorder_facets(&mut self, order: &[usize]) {
        assert_eq!(order.len(), self.facets.len());
        self.facets = order.iter().map(|&i| self.facets[i].clone()).collect();
    }

    pub fn decompose(&self, nu: &[f64]) -> Result<RadialDecomposition> {
        if nu.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: nu.len(),
            });
        }
        let nu = DVector::from_column_slice(nu);
        let norm = nu.norm();
        if norm == 0.0 || self.dimension == 0 {
            return Ok(RadialDecomposition {
                rho: 0.0,
                face: Vec::new(),
                mu: Vec::new(),
            });
        }
        let support: Vec<f64> = self.facets.iter().map(|f| f.normal.dot(&nu)).collect();
        let rho = support.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut face: Option<Vec<usize>> = None;
        for (f, s) in self.facets.iter().zip(&support) {
            if *s >= rho * (1.0 - HIT_TOL) {
                face = Some(match face {
                    None => f.indices.clone(),
                    Some(prev) => prev.into_iter().filter(|i| f.indices.contains(i)).collect(),
                });
            }
        }
        let mut face = face.expect("a bounded polytope has a facet hit by every ray");
        let target = &nu / rho;
        loop {
            let mu = self.barycentric(&face, &target);
            match mu.iter().position(|&x| x <= MU_TOL) {
                Some(_) if face.len() > 1 => {
                    face = face
                        .iter()
                        .zip(&mu)
                        .filter(|(_, &m)| m > MU_TOL)
                        .map(|(&i, _)| i)
                        .collect();
                }
                _ => {
                    return Ok(RadialDecomposition { rho, face, mu });
                }
            }
        }
    }

    /// Affine coordinates of `target` with respect to the vertices in `face`.
    fn barycentric(&self, face: &[usize], target: &DVector<f64>) -> Vec<f64> {
        let n = self.dimension;
        let mut m = DMatrix::<f64>::zeros(n + 1, face.len());
        for (c, &i) in face.iter().enumerate() {
            m.view_mut((0, c), (n, 1)).copy_from(&self.vertices[i]);
            m[(n, c)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(target);
        rhs[n] = 1.0;
        least_squares(&m, &rhs).iter().copied().collect()
    }

    pub fn reconstruct(&self, d: &RadialDecomposition) -> Vec<f64> {
        let mut out = DVector::<f64>::zeros(self.dimension);
        for (&i, &m) in d.face.iter().zip(&d.mu) {
            out += &self.vertices[i] * (d.rho * m);
        }
        out.iter().copied().collect()
    }
}

/// One-shot form of [`RadialPolytope::decompose`].
pub fn radial_decompose(vertices: &[Vec<Rational>], nu: &[f64]) -> Result<RadialDecomposition> {
    RadialPolytope::new(vertices)?.decompose(nu)
}

/// Minimum-norm least-squares solution via SVD.
pub(crate) fn least_squares(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if m.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-13 * (m.nrows().max(m.ncols()) as f64);
    svd.solve(rhs, eps).expect("u and v were computed")
}

/// Positive coefficients on the generators of one cone of a fan.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeHit {
    pub cone: usize,
    /// `(generator index, coefficient)` pairs with coefficient > 0.
    pub coefficients: Vec<(usize, f64)>,
}

/// Locates `target` in a simplicial fan: returns the first listed cone in
/// which it has nonnegative coordinates, with zero coordinates dropped.
pub fn cone_decompose(
    generators: &[DVector<f64>],
    cones: &[Vec<usize>],
    target: &DVector<f64>,
) -> Option<ConeHit> {
    let n = target.len();
    let scale = generators
        .iter()
        .map(|g| g.amax())
        .fold(target.amax(), f64::max)
        .max(1.0);
    let tol = 1e-10 * scale;
    for (ci, cone) in cones.iter().enumerate() {
        let mut m = DMatrix::<f64>::zeros(n, cone.len());
        for (c, &g) in cone.iter().enumerate() {
            m.set_column(c, &generators[g]);
        }
        let a = least_squares(&m, target);
        if (&m * &a - target).amax() > tol || a.iter().any(|&x| x < -tol) {
            continue;
        }
        let coefficients = cone
            .iter()
            .zip(a.iter())
            .filter(|(_, &x)| x > tol)
            .map(|(&g, &x)| (g, x))
            .collect();
        return Some(ConeHit {
            cone: ci,
            coefficients,
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn pts(raw: &[&[i64]]) -> Vec<Vec<Rational>> {
        raw.iter().map(|p| p.iter().map(|&x| int(x)).collect()).collect()
    }

    fn example_columns() -> Vec<Vec<Rational>> {
        vec![
            vec![int(0), int(1)],
            vec![int(0), rat(1, 2)],
            vec![int(1), int(0)],
            vec![int(1), int(0)],
            vec![int(-2), rat(-3, 2)],
        ]
    }

    #[test]
    fn hull_symmetric_pair() {
        let c = origin_in_hull(&pts(&[&[1], &[-1]])).unwrap().unwrap();
        assert_eq!(c.lambda, vec![rat(1, 2), rat(1, 2)]);
        assert!(c.verify(&pts(&[&[1], &[-1]])));
    }

    #[test]
    fn hull_open_halfspace_is_absent() {
        assert!(origin_in_hull(&pts(&[&[1, 0], &[0, 1]])).unwrap().is_none());
    }

    #[test]
    fn hull_example_columns() {
        let p = example_columns();
        let c = origin_in_hull(&p).unwrap().unwrap();
        assert!(c.verify(&p));
    }

    #[test]
    fn hull_dimension_mismatch() {
        let p = vec![vec![int(1)], vec![int(1), int(2)]];
        assert!(matches!(
            origin_in_hull(&p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn relint_cases() {
        let c = origin_in_relint(&pts(&[&[1], &[-1]])).unwrap().unwrap();
        assert!(c.strict && c.verify(&pts(&[&[1], &[-1]])));
        assert!(origin_in_relint(&pts(&[&[0, 1], &[0, -1], &[1, 0]]))
            .unwrap()
            .is_none());
        let p = example_columns();
        let c = origin_in_relint(&p).unwrap().unwrap();
        assert!(c.strict && c.verify(&p));
    }

    #[test]
    fn nullspace_of_example_v() {
        let v = RationalMatrix::from_i64_rows(&[&[0, 0, -1, 1, 0], &[6, -9, 2, 0, 1]]);
        let b = affine_nullspace(&v);
        assert_eq!(b.rows(), 2);
        let a_rows = vec![
            vec![int(0), int(0), int(1), int(1), int(-2)],
            vec![int(1), rat(1, 2), int(0), int(0), rat(-3, 2)],
        ];
        let a = RationalMatrix::from_rows(a_rows, 5).unwrap();
        assert!(b.row_equivalent(&a));
    }

    #[test]
    fn nullspace_trivial() {
        let v = RationalMatrix::from_i64_rows(&[&[-1, 1]]);
        let b = affine_nullspace(&v);
        assert_eq!((b.rows(), b.cols()), (0, 2));
    }

    #[test]
    fn square_facets() {
        let h = facet_enumeration(&pts(&[&[1, 1], &[1, -1], &[-1, -1], &[-1, 1]])).unwrap();
        assert_eq!(h.facets.len(), 4);
        assert_eq!(h.vertices, vec![0, 1, 2, 3]);
        assert!(h.interior.is_empty());
    }

    #[test]
    fn example_v_facets() {
        let v = pts(&[&[0, 6], &[0, -9], &[-1, 2], &[1, 0], &[0, 1]]);
        let h = facet_enumeration(&v).unwrap();
        let sets: Vec<Vec<usize>> = h.facets.iter().map(|f| f.indices.clone()).collect();
        assert_eq!(sets, vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]]);
        assert_eq!(h.vertices, vec![0, 1, 2, 3]);
        assert_eq!(h.interior, vec![4]);
    }

    #[test]
    fn degenerate_span_is_reported() {
        let e = facet_enumeration(&pts(&[&[0, 0], &[1, 1], &[2, 2]])).unwrap_err();
        assert_eq!(e, Error::DegenerateSpan { rank: 1, dim: 2 });
    }

    #[test]
    fn radial_square_edge() {
        let sq = pts(&[&[1, 1], &[1, -1], &[-1, -1], &[-1, 1]]);
        let d = radial_decompose(&sq, &[2.0, 0.0]).unwrap();
        assert!((d.rho - 2.0).abs() < 1e-12);
        assert_eq!(d.face, vec![0, 1]);
        assert!((d.mu[0] - 0.5).abs() < 1e-12 && (d.mu[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn radial_square_vertex_is_minimal_face() {
        let sq = pts(&[&[1, 1], &[1, -1], &[-1, -1], &[-1, 1]]);
        let d = radial_decompose(&sq, &[3.0, 3.0]).unwrap();
        assert_eq!(d.face, vec![0]);
        assert!((d.rho - 3.0).abs() < 1e-12);
    }

    #[test]
    fn radial_zero_vector() {
        let sq = pts(&[&[1, 1], &[1, -1], &[-1, -1], &[-1, 1]]);
        let d = radial_decompose(&sq, &[0.0, 0.0]).unwrap();
        assert_eq!(d.rho, 0.0);
        assert!(d.face.is_empty());
    }

    #[test]
    fn radial_requires_interior_origin() {
        let off = pts(&[&[1, 1], &[2, 1], &[1, 2]]);
        assert_eq!(
            radial_decompose(&off, &[1.0, 0.0]).unwrap_err(),
            Error::OriginNotInterior
        );
    }

    #[test]
    fn cone_lookup_in_quadrant_fan() {
        let g: Vec<DVector<f64>> = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
            .iter()
            .map(|v| DVector::from_column_slice(v))
            .collect();
        let cones = vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]];
        let hit = cone_decompose(&g, &cones, &DVector::from_column_slice(&[-2.0, 3.0])).unwrap();
        assert_eq!(hit.cone, 1);
        assert_eq!(hit.coefficients.len(), 2);
        let hit = cone_decompose(&g, &cones, &DVector::from_column_slice(&[0.0, 3.0])).unwrap();
        assert_eq!(hit.coefficients, vec![(1, 3.0)]);
    }
}
