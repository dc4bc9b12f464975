//! The simplicial complex K_A and the polytope realizing it.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{admissibility, check_permutation, gale_dual, Configuration};
use crate::error::{Error, Result};
use crate::geometry::{facet_enumeration, origin_in_hull, Facet};
use crate::rational::RationalMatrix;

/// A subset of `[m]`, `m <= 64`, as a bit set.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Face(u64);

impl Face {
    pub const EMPTY: Face = Face(0);

    pub fn from_bits(bits: u64) -> Self {
        Face(bits)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Face(indices.into_iter().fold(0, |acc, i| {
            assert!(i < 64, "face index {i} exceeds 63");
            acc | (1u64 << i)
        }))
    }

    /// All of `[m]`.
    pub fn full(m: usize) -> Self {
        if m == 64 {
            Face(u64::MAX)
        } else {
            Face((1u64 << m) - 1)
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 & (1u64 << i) != 0
    }

    pub fn is_subset(self, other: Face) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Face) -> Face {
        Face(self.0 | other.0)
    }

    pub fn intersection(self, other: Face) -> Face {
        Face(self.0 & other.0)
    }

    pub fn minus(self, other: Face) -> Face {
        Face(self.0 & !other.0)
    }

    pub fn with(self, i: usize) -> Face {
        Face(self.0 | (1u64 << i))
    }

    pub fn complement(self, m: usize) -> Face {
        Face::full(m).minus(self)
    }

    pub fn indices(self) -> Vec<usize> {
        (0..64).filter(|&i| self.contains(i)).collect()
    }

    /// Image under `i -> perm[i]`.
    pub fn map(self, perm: &[usize]) -> Face {
        Face::from_indices(self.indices().into_iter().map(|i| perm[i]))
    }

    fn lex_key(self) -> Vec<usize> {
        self.indices()
    }
}

impl fmt::Debug for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.indices()).finish()
    }
}

/// A downward-closed family of subsets of `[m]`, stored by its maximal faces.
#[derive(Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    m: usize,
    maximal: Vec<Face>,
}

impl fmt::Debug for SimplicialComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimplicialComplex")
            .field("m", &self.m)
            .field("maximal", &self.maximal)
            .finish()
    }
}

impl SimplicialComplex {
    /// Closes `generators` downward; non-maximal generators are discarded.
    pub fn from_faces<I: IntoIterator<Item = Face>>(m: usize, generators: I) -> Self {
        let mut faces: Vec<Face> = generators.into_iter().collect();
        faces.sort_by_key(|f| std::cmp::Reverse(f.len()));
        faces.dedup();
        let mut maximal: Vec<Face> = Vec::new();
        for f in faces {
            if !maximal.iter().any(|g| f.is_subset(*g)) {
                maximal.push(f);
            }
        }
        maximal.sort_by_key(|f| f.lex_key());
        Self { m, maximal }
    }

    pub fn from_index_sets(m: usize, sets: &[Vec<usize>]) -> Self {
        Self::from_faces(m, sets.iter().map(|s| Face::from_indices(s.iter().copied())))
    }

    /// The complex with `{}` as its only face.
    pub fn void(m: usize) -> Self {
        Self::from_faces(m, [Face::EMPTY])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn maximal_faces(&self) -> &[Face] {
        &self.maximal
    }

    pub fn maximal_index_sets(&self) -> Vec<Vec<usize>> {
        self.maximal.iter().map(|f| f.indices()).collect()
    }

    pub fn contains(&self, face: Face) -> bool {
        self.maximal.iter().any(|g| face.is_subset(*g))
    }

    pub fn dimension(&self) -> isize {
        self.maximal.iter().map(|f| f.len() as isize).max().unwrap_or(0) - 1
    }

    /// Every face, sorted by size then lexicographically.
    pub fn faces(&self) -> Vec<Face> {
        let mut all: HashSet<Face> = HashSet::new();
        for &g in &self.maximal {
            let bits = g.indices();
            for mask in 0u64..(1u64 << bits.len()) {
                all.insert(Face::from_indices(
                    bits.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &i)| i),
                ));
            }
        }
        let mut v: Vec<Face> = all.into_iter().collect();
        v.sort_by_key(|f| (f.len(), f.lex_key()));
        v
    }

    /// Singletons `{i}` in the complex.
    pub fn vertices(&self) -> Vec<usize> {
        (0..self.m)
            .filter(|&i| self.contains(Face::from_indices([i])))
            .collect()
    }

    /// `{tau : tau | sigma in K, tau & sigma = {}}`.
    pub fn link(&self, sigma: Face) -> Result<Self> {
        self.require(sigma)?;
        Ok(Self::from_faces(
            self.m,
            self.maximal
                .iter()
                .filter(|g| sigma.is_subset(**g))
                .map(|g| g.minus(sigma)),
        ))
    }

    /// Downward closure of `{tau in K : sigma subset of tau}`.
    pub fn star(&self, sigma: Face) -> Result<Self> {
        self.require(sigma)?;
        Ok(Self::from_faces(
            self.m,
            self.maximal.iter().copied().filter(|g| sigma.is_subset(*g)),
        ))
    }

    fn require(&self, sigma: Face) -> Result<()> {
        if self.contains(sigma) {
            Ok(())
        } else {
            Err(Error::FaceNotInComplex(
                sigma.indices().iter().map(|i| i + 1).collect(),
            ))
        }
    }

    pub fn map(&self, perm: &[usize]) -> Self {
        Self::from_faces(self.m, self.maximal.iter().map(|f| f.map(perm)))
    }
}

#[derive(Serialize, Deserialize)]
struct ComplexDoc {
    m: usize,
    maximal_faces: Vec<Vec<usize>>,
}

impl Serialize for SimplicialComplex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ComplexDoc {
            m: self.m,
            maximal_faces: self
                .maximal
                .iter()
                .map(|f| f.indices().iter().map(|i| i + 1).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimplicialComplex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ComplexDoc::deserialize(d)?;
        let mut faces = Vec::with_capacity(doc.maximal_faces.len());
        for f in doc.maximal_faces {
            if f.iter().any(|&i| i == 0 || i > doc.m) {
                return Err(D::Error::custom("vertex index out of range 1..=m"));
            }
            faces.push(Face::from_indices(f.into_iter().map(|i| i - 1)));
        }
        Ok(SimplicialComplex::from_faces(doc.m, faces))
    }
}

pub(crate) fn hull_contains_origin(a: &Configuration, face: Face) -> bool {
    let rest = face.complement(a.m()).indices();
    !rest.is_empty()
        && origin_in_hull(&a.subtuple(&rest))
            .expect("columns share the dimension d")
            .is_some()
}

/// `K_A = {sigma : 0 in conv A([m] \ sigma)}`, enumerated by increasing
/// size; a set is tested only when all its facets are already faces.
pub fn build_complex(a: &Configuration) -> Result<SimplicialComplex> {
    let m = a.m();
    if m > 64 {
        return Err(Error::TooLarge(m));
    }
    if !admissibility(a).admissible() {
        return Err(Error::NotAdmissible);
    }
    let mut maximal = Vec::new();
    let mut level: Vec<Face> = vec![Face::EMPTY];
    while !level.is_empty() {
        let known: HashSet<Face> = level.iter().copied().collect();
        let mut next: Vec<Face> = Vec::new();
        let mut seen: HashSet<Face> = HashSet::new();
        let mut rejected: HashSet<Face> = HashSet::new();
        for &f in &level {
            let mut extended = false;
            for i in 0..m {
                if f.contains(i) {
                    continue;
                }
                let g = f.with(i);
                if seen.contains(&g) {
                    extended = true;
                    continue;
                }
                if rejected.contains(&g) {
                    continue;
                }
                let closed = g
                    .indices()
                    .into_iter()
                    .all(|j| known.contains(&g.minus(Face::from_indices([j]))));
                if closed && hull_contains_origin(a, g) {
                    seen.insert(g);
                    next.push(g);
                    extended = true;
                } else {
                    rejected.insert(g);
                }
            }
            if !extended {
                maximal.push(f);
            }
        }
        level = next;
    }
    Ok(SimplicialComplex::from_faces(m, maximal))
}

/// True iff `perm` carries the faces of `k` bijectively onto those of `other`.
pub fn verify_isomorphism(
    k: &SimplicialComplex,
    other: &SimplicialComplex,
    perm: &[usize],
) -> Result<bool> {
    check_permutation(perm, k.m())?;
    if k.m() != other.m() {
        return Ok(false);
    }
    Ok(k.map(perm) == *other)
}

/// Gale dual points of a centered admissible configuration, classified into
/// hull vertices and interior points, with the boundary complex checked
/// against `K_A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeRealization {
    pub v: RationalMatrix,
    /// 0-based indices `i` with `{i}` in K_A.
    pub vertex_indices: Vec<usize>,
    pub interior_indices: Vec<usize>,
    /// Facets of the hull of the vertex points, indices into `[m]`.
    pub facets: Vec<Facet>,
    pub boundary: SimplicialComplex,
    pub complex: SimplicialComplex,
}

pub fn realize_polytope(a: &Configuration) -> Result<PolytopeRealization> {
    if !a.is_centered() {
        return Err(Error::NotCentered);
    }
    let complex = build_complex(a)?;
    let v = gale_dual(a)?;
    let points = v.columns();
    let vertex_indices = complex.vertices();
    let n = v.rows();

    if n == 0 {
        // P_A is a point and K_A = {{}}
        if complex != SimplicialComplex::void(a.m()) {
            return Err(Error::BoundaryMismatch);
        }
        return Ok(PolytopeRealization {
            v,
            vertex_indices,
            interior_indices: (0..a.m()).collect(),
            facets: Vec::new(),
            boundary: complex.clone(),
            complex,
        });
    }

    let vertex_points: Vec<_> = vertex_indices.iter().map(|&i| points[i].clone()).collect();
    let hull = facet_enumeration(&vertex_points)?;
    if hull.vertices.len() != vertex_points.len() {
        return Err(Error::BoundaryMismatch);
    }
    let facets: Vec<Facet> = hull
        .facets
        .into_iter()
        .map(|f| Facet {
            indices: f.indices.iter().map(|&k| vertex_indices[k]).collect(),
            ..f
        })
        .collect();
    let interior_indices: Vec<usize> = (0..a.m())
        .filter(|i| !vertex_indices.contains(i))
        .collect();
    for &j in &interior_indices {
        if !facets.iter().all(|f| num::Signed::is_negative(&f.slack(&points[j]))) {
            return Err(Error::BoundaryMismatch);
        }
    }
    let boundary = SimplicialComplex::from_index_sets(
        a.m(),
        &facets.iter().map(|f| f.indices.clone()).collect::<Vec<_>>(),
    );
    if boundary != complex {
        return Err(Error::BoundaryMismatch);
    }
    Ok(PolytopeRealization {
        v,
        vertex_indices,
        interior_indices,
        facets,
        boundary,
        complex,
    })
}
