//! Vector configurations, their admissibility, Gale duality and Siegel-set
//! membership of ambient points.

use itertools::Itertools;
use num::complex::Complex64;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{affine_nullspace, origin_in_hull, HullCertificate};
use crate::rational::{serde_rational, to_f64, Rational, RationalMatrix};

/// An m-tuple of rational d-vectors. For `d = 0` every column is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    d: usize,
    m: usize,
    columns: Vec<Vec<Rational>>,
}

impl Configuration {
    pub fn from_columns(d: usize, columns: Vec<Vec<Rational>>) -> Result<Self> {
        let m = columns.len();
        for c in &columns {
            if c.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.len(),
                });
            }
        }
        if m <= d {
            return Err(Error::InvalidArgument(format!(
                "a configuration needs m > d (got m = {m}, d = {d})"
            )));
        }
        Ok(Self { d, m, columns })
    }

    /// Rows of the `d x m` matrix whose columns are the `A_i`.
    pub fn from_matrix(a: &RationalMatrix) -> Result<Self> {
        Self::from_columns(a.rows(), a.columns())
    }

    /// The configuration with `d = 0` and `m` empty columns.
    pub fn zero_dimensional(m: usize) -> Result<Self> {
        Self::from_columns(0, vec![Vec::new(); m])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn columns(&self) -> &[Vec<Rational>] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &[Rational] {
        &self.columns[i]
    }

    pub fn matrix(&self) -> RationalMatrix {
        let rows = (0..self.d)
            .map(|r| self.columns.iter().map(|c| c[r].clone()).collect())
            .collect();
        RationalMatrix::from_rows(rows, self.m).expect("columns share the dimension d")
    }

    pub fn columns_f64(&self) -> Vec<Vec<f64>> {
        self.columns
            .iter()
            .map(|c| c.iter().map(to_f64).collect())
            .collect()
    }

    pub fn subtuple(&self, indices: &[usize]) -> Vec<Vec<Rational>> {
        indices.iter().map(|&i| self.columns[i].clone()).collect()
    }

    /// Column `perm[i]` of the result is column `i` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.m)?;
        let mut columns = vec![Vec::new(); self.m];
        for (i, &j) in perm.iter().enumerate() {
            columns[j] = self.columns[i].clone();
        }
        Self::from_columns(self.d, columns)
    }

    pub fn augmented(&self) -> AugmentedConfiguration {
        AugmentedConfiguration {
            columns: self
                .columns
                .iter()
                .map(|c| {
                    let mut a = c.clone();
                    a.push(Rational::one());
                    a
                })
                .collect(),
        }
    }

    pub fn is_centered(&self) -> bool {
        (0..self.d).all(|r| self.columns.iter().map(|c| &c[r]).sum::<Rational>().is_zero())
    }
}

pub(crate) fn check_permutation(perm: &[usize], m: usize) -> Result<()> {
    if perm.len() != m {
        return Err(Error::NotABijection);
    }
    let mut seen = vec![false; m];
    for &j in perm {
        if j >= m || seen[j] {
            return Err(Error::NotABijection);
        }
        seen[j] = true;
    }
    Ok(())
}

/// JSON form `{"d": int, "m": int, "A": [[rational-string, ...] per row]}`.
#[derive(Serialize, Deserialize)]
struct ConfigurationDoc {
    d: usize,
    m: usize,
    #[serde(rename = "A", with = "serde_rational::rows")]
    a: Vec<Vec<Rational>>,
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConfigurationDoc {
            d: self.d,
            m: self.m,
            a: self.matrix().to_rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ConfigurationDoc::deserialize(d)?;
        if doc.a.len() != doc.d {
            return Err(D::Error::custom(format!(
                "expected {} rows in A, found {}",
                doc.d,
                doc.a.len()
            )));
        }
        let a = RationalMatrix::from_rows(doc.a, doc.m).map_err(D::Error::custom)?;
        let columns = if doc.d == 0 {
            vec![Vec::new(); doc.m]
        } else {
            a.columns()
        };
        Configuration::from_columns(doc.d, columns).map_err(D::Error::custom)
    }
}

/// The columns `(A_i, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedConfiguration {
    pub columns: Vec<Vec<Rational>>,
}

impl AugmentedConfiguration {
    pub fn rank_of(&self, indices: &[usize]) -> usize {
        let Some(first) = indices.first() else {
            return 0;
        };
        let rows = indices.iter().map(|&i| self.columns[i].clone()).collect();
        RationalMatrix::from_rows(rows, self.columns[*first].len())
            .expect("augmented columns share a length")
            .rank()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub siegel: bool,
    pub siegel_certificate: Option<HullCertificate>,
    pub weak_hyperbolicity: bool,
    /// 1-based, as in the JSON reports.
    pub violating_subset: Option<Vec<usize>>,
    pub violating_certificate: Option<HullCertificate>,
    pub centered: bool,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.siegel && self.weak_hyperbolicity
    }

    pub fn violating_indices(&self) -> Option<Vec<usize>> {
        self.violating_subset
            .as_ref()
            .map(|v| v.iter().map(|i| i - 1).collect())
    }
}

/// Siegel condition, weak hyperbolicity and centering. Weak hyperbolicity
/// is decided on subsets of size at most d, smallest first.
pub fn admissibility(a: &Configuration) -> AdmissibilityReport {
    let siegel_certificate = origin_in_hull(a.columns()).expect("columns share the dimension d");
    let mut violating = None;
    'outer: for k in 1..=a.d() {
        for subset in (0..a.m()).combinations(k) {
            let pts = a.subtuple(&subset);
            if let Some(cert) = origin_in_hull(&pts).expect("columns share the dimension d") {
                violating = Some((subset, cert));
                break 'outer;
            }
        }
    }
    let (violating_subset, violating_certificate) = match violating {
        Some((s, c)) => (Some(s.into_iter().map(|i| i + 1).collect()), Some(c)),
        None => (None, None),
    };
    AdmissibilityReport {
        siegel: siegel_certificate.is_some(),
        siegel_certificate,
        weak_hyperbolicity: violating_subset.is_none(),
        violating_subset,
        violating_certificate,
        centered: a.is_centered(),
    }
}

pub fn is_admissible(a: &Configuration) -> bool {
    admissibility(a).admissible()
}

/// Rank of the augmented subtuple `(A_i, 1), i in I` over the rationals.
pub fn augmented_rank(a: &Configuration, indices: &[usize]) -> Result<usize> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= a.m()) {
        return Err(Error::InvalidArgument(format!("index {bad} out of range")));
    }
    Ok(a.augmented().rank_of(indices))
}

/// The configuration whose rows span `{x : sum V_i x_i = 0, sum x_i = 0}`.
pub fn gale_transform(v: &RationalMatrix) -> Result<Configuration> {
    let basis = affine_nullspace(v);
    let d = basis.rows();
    if d == 0 {
        return Configuration::zero_dimensional(v.cols());
    }
    Configuration::from_matrix(&basis)
}

/// As [`gale_transform`], checking that `(V; 1)` has rank `m - d`.
pub fn gale_transform_with_dim(v: &RationalMatrix, d: usize) -> Result<Configuration> {
    let rank = v.with_ones_row().rank();
    let m = v.cols();
    if rank + d != m {
        return Err(Error::RankMismatch {
            expected: m.saturating_sub(d),
            found: rank,
        });
    }
    gale_transform(v)
}

/// The `(m - d - 1) x m` matrix whose columns `V_i` solve
/// `sum A_i x_i = 0, sum x_i = 0`. Requires a centered configuration.
pub fn gale_dual(a: &Configuration) -> Result<RationalMatrix> {
    if !a.is_centered() {
        return Err(Error::NotCentered);
    }
    Ok(affine_nullspace(&a.matrix()))
}

/// True when the rows of `v` form a basis of the solutions of the system
/// `sum A_i x_i = 0, sum x_i = 0`.
pub fn verify_gale_dual(a: &Configuration, v: &RationalMatrix) -> bool {
    if v.cols() != a.m() {
        return false;
    }
    let system = a.matrix().with_ones_row();
    let annihilated = (0..v.rows()).all(|r| system.mul_vec(v.row(r)).iter().all(Zero::is_zero));
    let nullity = a.m() - system.rank();
    annihilated && v.rank() == v.rows() && v.rows() == nullity
}

/// A point of C^m with the index set of its nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientPoint {
    coords: Vec<Complex64>,
    support: Vec<usize>,
}

impl AmbientPoint {
    /// Support is the set of coordinates with nonzero modulus.
    pub fn new(coords: Vec<Complex64>) -> Self {
        Self::with_threshold(coords, 0.0)
    }

    /// Entries with modulus at most `threshold` are treated as exact zeros.
    pub fn with_threshold(mut coords: Vec<Complex64>, threshold: f64) -> Self {
        let mut support = Vec::with_capacity(coords.len());
        for (i, z) in coords.iter_mut().enumerate() {
            if z.norm() > threshold {
                support.push(i);
            } else {
                *z = Complex64::zero();
            }
        }
        Self { coords, support }
    }

    pub fn real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Builds a point with a prescribed support; entries off the support are
    /// set to zero.
    pub(crate) fn from_parts(mut coords: Vec<Complex64>, support: Vec<usize>) -> Self {
        let mut on = vec![false; coords.len()];
        for &i in &support {
            on[i] = true;
        }
        for (z, keep) in coords.iter_mut().zip(on) {
            if !keep {
                *z = Complex64::zero();
            }
        }
        Self { coords, support }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Indices of the zero coordinates.
    pub fn zero_set(&self) -> Vec<usize> {
        (0..self.coords.len())
            .filter(|i| !self.support.contains(i))
            .collect()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.coords.iter().map(|z| z.norm()).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.coords.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Unit phases; 1 on zero coordinates.
    pub fn phases(&self) -> Vec<Complex64> {
        self.coords
            .iter()
            .map(|z| {
                let r = z.norm();
                if r > 0.0 {
                    z / r
                } else {
                    Complex64::one()
                }
            })
            .collect()
    }

    pub fn scale(&self, r: f64) -> Self {
        Self::from_parts(self.coords.iter().map(|z| z * r).collect(), self.support.clone())
    }

    pub fn rotate(&self, phases: &[Complex64]) -> Self {
        Self::from_parts(
            self.coords.iter().zip(phases).map(|(z, w)| z * w).collect(),
            self.support.clone(),
        )
    }

    /// Moves coordinate `i` to position `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.len())?;
        let mut coords = vec![Complex64::zero(); self.len()];
        for (i, &j) in perm.iter().enumerate() {
            coords[j] = self.coords[i];
        }
        let mut support: Vec<usize> = self.support.iter().map(|&i| perm[i]).collect();
        support.sort_unstable();
        Ok(Self::from_parts(coords, support))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiegelMembership {
    pub member: bool,
    /// 1-based support `I_z`.
    pub support: Vec<usize>,
    /// Coefficients indexed over all m columns, zero off the support.
    pub certificate: Option<HullCertificate>,
}

/// `z` is in S_A exactly when `0 in conv A(I_z)`.
pub fn siegel_membership(a: &Configuration, z: &AmbientPoint) -> Result<SiegelMembership> {
    if z.len() != a.m() {
        return Err(Error::DimensionMismatch {
            expected: a.m(),
            found: z.len(),
        });
    }
    let support = z.support().to_vec();
    let certificate = if support.is_empty() {
        None
    } else {
        origin_in_hull(&a.subtuple(&support))?.map(|c| {
            let mut lambda = vec![Rational::zero(); a.m()];
            for (&i, l) in support.iter().zip(c.lambda) {
                lambda[i] = l;
            }
            HullCertificate {
                lambda,
                strict: false,
            }
        })
    };
    Ok(SiegelMembership {
        member: certificate.is_some(),
        support: support.iter().map(|i| i + 1).collect(),
        certificate,
    })
}

pub(crate) fn require_siegel(a: &Configuration, z: &AmbientPoint) -> Result<()> {
    if siegel_membership(a, z)?.member {
        Ok(())
    } else {
        Err(Error::NotInSiegelSet {
            support: z.support().iter().map(|i| i + 1).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    pub(crate) fn example() -> Configuration {
        let rows = vec![
            vec![int(0), int(0), int(1), int(1), int(-2)],
            vec![int(1), rat(1, 2), int(0), int(0), rat(-3, 2)],
        ];
        Configuration::from_matrix(&RationalMatrix::from_rows(rows, 5).unwrap()).unwrap()
    }

    fn remark() -> Configuration {
        Configuration::from_matrix(&RationalMatrix::from_i64_rows(&[
            &[0, 0, 1, -1],
            &[1, -1, 0, 0],
        ]))
        .unwrap()
    }

    #[test]
    fn example_is_admissible_and_centered() {
        let r = admissibility(&example());
        assert!(r.siegel && r.weak_hyperbolicity && r.centered);
        assert!(r.siegel_certificate.unwrap().verify(example().columns()));
    }

    #[test]
    fn remark_violates_weak_hyperbolicity() {
        let a = remark();
        let r = admissibility(&a);
        assert!(r.siegel);
        assert!(!r.weak_hyperbolicity);
        let bad = r.violating_indices().unwrap();
        assert_eq!(bad.len(), 2);
        assert!(r.violating_certificate.unwrap().verify(&a.subtuple(&bad)));
    }

    #[test]
    fn zero_dimensional_is_admissible() {
        let a = Configuration::zero_dimensional(4).unwrap();
        let r = admissibility(&a);
        assert!(r.siegel && r.weak_hyperbolicity && r.centered);
    }

    #[test]
    fn augmented_ranks() {
        let a = example();
        assert_eq!(augmented_rank(&a, &[0, 1, 2, 3, 4]).unwrap(), 3);
        assert_eq!(augmented_rank(&a, &[2, 3]).unwrap(), 1);
        assert_eq!(augmented_rank(&remark(), &[0, 1]).unwrap(), 2);
    }

    #[test]
    fn gale_transform_of_example_v() {
        let v = RationalMatrix::from_i64_rows(&[&[0, 0, -1, 1, 0], &[6, -9, 2, 0, 1]]);
        let a = gale_transform_with_dim(&v, 2).unwrap();
        assert!(a.matrix().row_equivalent(&example().matrix()));
        assert!(matches!(
            gale_transform_with_dim(&v, 1),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn gale_transform_of_remark_v() {
        let v = RationalMatrix::from_i64_rows(&[&[-1, -1, 1, 1]]);
        let a = gale_transform(&v).unwrap();
        assert!(a.matrix().row_equivalent(&remark().matrix()));
        assert!(!is_admissible(&a));
    }

    #[test]
    fn gale_transform_trivial_system() {
        let v = RationalMatrix::from_i64_rows(&[&[-1, 1]]);
        let a = gale_transform(&v).unwrap();
        assert_eq!((a.d(), a.m()), (0, 2));
    }

    #[test]
    fn gale_dual_of_example_accepts_paper_v() {
        let a = example();
        let v = gale_dual(&a).unwrap();
        assert!(verify_gale_dual(&a, &v));
        let paper_v = RationalMatrix::from_i64_rows(&[&[0, 0, -1, 1, 0], &[6, -9, 2, 0, 1]]);
        assert!(verify_gale_dual(&a, &paper_v));
        assert!(gale_transform(&v).unwrap().matrix().row_equivalent(&a.matrix()));
    }

    #[test]
    fn gale_dual_of_segment_is_zero_dimensional() {
        let a = Configuration::from_matrix(&RationalMatrix::from_i64_rows(&[&[1, -1]])).unwrap();
        let v = gale_dual(&a).unwrap();
        assert_eq!((v.rows(), v.cols()), (0, 2));
    }

    #[test]
    fn gale_dual_rejects_uncentered() {
        let a = Configuration::from_matrix(&RationalMatrix::from_i64_rows(&[
            &[1, 1, 4, -2],
            &[4, -2, 1, 1],
        ]))
        .unwrap();
        assert!(is_admissible(&a));
        assert_eq!(gale_dual(&a).unwrap_err(), Error::NotCentered);
    }

    #[test]
    fn siegel_membership_examples() {
        let a = example();
        assert!(siegel_membership(&a, &AmbientPoint::real(&[1.0; 5])).unwrap().member);
        assert!(
            !siegel_membership(&a, &AmbientPoint::real(&[1.0, 1.0, 0.0, 0.0, 1.0]))
                .unwrap()
                .member
        );
        let s = siegel_membership(&a, &AmbientPoint::real(&[0.0, 1.0, 1.0, 1.0, 1.0])).unwrap();
        let cert = s.certificate.unwrap();
        assert_eq!(cert.lambda[0], int(0));
        assert_eq!(cert.lambda[1], rat(1, 2));
        assert_eq!(&cert.lambda[2] + &cert.lambda[3], rat(1, 3));
        assert_eq!(cert.lambda[4], rat(1, 6));
        assert!(cert.verify(a.columns()));
    }

    #[test]
    fn siegel_membership_size_mismatch() {
        assert!(matches!(
            siegel_membership(&example(), &AmbientPoint::real(&[1.0; 4])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn threshold_controls_support() {
        let z = AmbientPoint::with_threshold(
            vec![Complex64::new(1e-14, 0.0), Complex64::new(1.0, 1.0)],
            1e-12,
        );
        assert_eq!(z.support(), &[1]);
        assert_eq!(z.coords()[0], Complex64::zero());
    }

    #[test]
    fn configuration_json() {
        let a = example();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(
            s,
            r#"{"d":2,"m":5,"A":[["0","0","1","1","-2"],["1","1/2","0","0","-3/2"]]}"#
        );
        let back: Configuration = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        let z: Configuration = serde_json::from_str(r#"{"d":0,"m":3,"A":[]}"#).unwrap();
        assert_eq!((z.d(), z.m()), (0, 3));
    }
}
