//! Seeded generators for test configurations and ambient points.

use std::f64::consts::TAU;

use num::complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{build_complex, Face};
use crate::config::{is_admissible, AmbientPoint, Configuration};
use crate::rational::{int, rat, Rational, RationalMatrix};

pub type CorpusRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CorpusRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A = [[0,0,1,1,-2],[1,1/2,0,0,-3/2]]`, admissible and centered.
pub fn example() -> Configuration {
    let rows = vec![
        vec![int(0), int(0), int(1), int(1), int(-2)],
        vec![int(1), rat(1, 2), int(0), int(0), rat(-3, 2)],
    ];
    Configuration::from_matrix(&RationalMatrix::from_rows(rows, 5).expect("5 columns"))
        .expect("m > d")
}

/// `V = [[0,0,-1,1,0],[6,-9,2,0,1]]`, a Gale dual of [`example`].
pub fn example_dual() -> RationalMatrix {
    RationalMatrix::from_i64_rows(&[&[0, 0, -1, 1, 0], &[6, -9, 2, 0, 1]])
}

/// The non-centered tuple `[[1,1,4,-2],[4,-2,1,1]]`.
pub fn uncentered() -> Configuration {
    Configuration::from_matrix(&RationalMatrix::from_i64_rows(&[&[1, 1, 4, -2], &[4, -2, 1, 1]]))
        .expect("m > d")
}

/// `V = (-1,-1,1,1)`.
pub fn counterexample_dual() -> RationalMatrix {
    RationalMatrix::from_i64_rows(&[&[-1, -1, 1, 1]])
}

/// `A = (1, -1)`.
pub fn segment() -> Configuration {
    Configuration::from_matrix(&RationalMatrix::from_i64_rows(&[&[1, -1]])).expect("m > d")
}

/// A random admissible configuration centered at the origin, with
/// `1 <= d <= max_d` and `d + 2 <= m <= max_m`. The first `m - 1` columns
/// have integer entries in `[-3, 3]`; the last one balances the sum.
pub fn random_admissible_centered(rng: &mut CorpusRng, max_d: usize, max_m: usize) -> Configuration {
    assert!(max_d >= 1 && max_m >= max_d + 2);
    loop {
        let d = rng.random_range(1..=max_d);
        let m = rng.random_range(d + 2..=max_m);
        let mut columns: Vec<Vec<Rational>> = (0..m - 1)
            .map(|_| (0..d).map(|_| int(rng.random_range(-3..=3))).collect())
            .collect();
        let last = (0..d)
            .map(|k| -columns.iter().map(|c| &c[k]).sum::<Rational>())
            .collect();
        columns.push(last);
        let a = Configuration::from_columns(d, columns).expect("m > d");
        if is_admissible(&a) {
            return a;
        }
    }
}

/// Moduli uniform in `[1/2, 2]`, phases uniform. Full support, so the
/// point lies in S_A for every admissible A.
pub fn random_point(rng: &mut CorpusRng, m: usize) -> AmbientPoint {
    AmbientPoint::new(
        (0..m)
            .map(|_| Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..TAU)))
            .collect(),
    )
}

/// Real positive version of [`random_point`].
pub fn random_positive_point(rng: &mut CorpusRng, m: usize) -> AmbientPoint {
    AmbientPoint::real(&(0..m).map(|_| rng.random_range(0.5..2.0)).collect::<Vec<_>>())
}

/// A random point whose zero set is a nonempty face of `K_A` (drawn among
/// the vertices and edges of the complex). `None` when `K_A` has no vertex.
pub fn random_stratum_point(rng: &mut CorpusRng, a: &Configuration) -> Option<AmbientPoint> {
    let k = build_complex(a).ok()?;
    let faces: Vec<Face> = k
        .faces()
        .into_iter()
        .filter(|f| (1..=2).contains(&f.len()))
        .collect();
    if faces.is_empty() {
        return None;
    }
    let zero = faces[rng.random_range(0..faces.len())];
    let z = random_point(rng, a.m());
    let coords = z
        .coords()
        .iter()
        .enumerate()
        .map(|(i, c)| if zero.contains(i) { Complex64::new(0.0, 0.0) } else { *c })
        .collect();
    Some(AmbientPoint::new(coords))
}

/// A uniformly random permutation of `[m]`.
pub fn random_permutation(rng: &mut CorpusRng, m: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..m).collect();
    p.shuffle(rng);
    p
}

/// A point of the unit sup-sphere with full support (so in S_A) whose
/// strict set is a random non-face `tau` of `K_A`: moduli in `[1/2, 0.9]`
/// on `tau`, 1 elsewhere. `None` when every proper subset is a face.
pub fn random_off_complex_target(rng: &mut CorpusRng, a: &Configuration) -> Option<AmbientPoint> {
    let k = build_complex(a).ok()?;
    let m = a.m();
    let non_faces: Vec<Face> = (1..(1u64 << m) - 1)
        .map(Face::from_bits)
        .filter(|f| !k.contains(*f))
        .collect();
    if non_faces.is_empty() {
        return None;
    }
    let tau = non_faces[rng.random_range(0..non_faces.len())];
    Some(AmbientPoint::new(
        (0..m)
            .map(|i| {
                let r = if tau.contains(i) { rng.random_range(0.5..0.9) } else { 1.0 };
                Complex64::from_polar(r, rng.random_range(0.0..TAU))
            })
            .collect(),
    ))
}
