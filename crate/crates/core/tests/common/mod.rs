#![allow(dead_code)]

use itertools::Itertools;
use num::{BigRational, One, Signed, Zero};
use siegel_core::config::Configuration;

/// Solves the square system `m x = b` by fraction Gaussian elimination;
/// `None` when singular.
#[allow(clippy::needless_range_loop)]
fn solve_square(mut m: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[col][col];
                for c in col..n {
                    let delta = &f * &m[col][c];
                    m[r][c] -= delta;
                }
                let delta = &f * &b[col];
                b[r] -= delta;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &m[i][i]).collect())
}

/// `0 in conv(points)` by brute force over affinely independent subsets:
/// some subset of at most `d + 1` points has unique barycentric
/// coordinates for the origin, all nonnegative.
pub fn caratheodory_contains_origin(points: &[Vec<BigRational>]) -> bool {
    if points.is_empty() {
        return false;
    }
    let d = points[0].len();
    for k in 1..=points.len().min(d + 1) {
        for subset in (0..points.len()).combinations(k) {
            // normal equations of [P_S; 1] lambda = (0, 1), exact
            let rows: Vec<Vec<BigRational>> = (0..d)
                .map(|r| subset.iter().map(|&i| points[i][r].clone()).collect())
                .chain(std::iter::once(vec![BigRational::one(); k]))
                .collect();
            let mut rhs = vec![BigRational::zero(); d];
            rhs.push(BigRational::one());
            let gram: Vec<Vec<BigRational>> = (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| rows.iter().map(|r| &r[i] * &r[j]).sum())
                        .collect()
                })
                .collect();
            let atb: Vec<BigRational> = (0..k)
                .map(|i| rows.iter().zip(&rhs).map(|(r, b)| &r[i] * b).sum())
                .collect();
            let Some(lambda) = solve_square(gram, atb) else {
                continue;
            };
            let consistent = rows
                .iter()
                .zip(&rhs)
                .all(|(r, b)| r.iter().zip(&lambda).map(|(x, l)| x * l).sum::<BigRational>() == *b);
            if consistent && lambda.iter().all(|l| !l.is_negative()) {
                return true;
            }
        }
    }
    false
}

/// Faces of K_A by definition: every `sigma` with `0 in conv A([m] - sigma)`.
pub fn brute_force_faces(a: &Configuration) -> Vec<Vec<usize>> {
    let m = a.m();
    (0..1u64 << m)
        .map(|bits| (0..m).filter(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|sigma| {
            let rest: Vec<usize> = (0..m).filter(|i| !sigma.contains(i)).collect();
            caratheodory_contains_origin(&a.subtuple(&rest))
        })
        .collect()
}

/// Root of the increasing function `f` on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `T_p` for `d = 1` from the scalar critical equation
/// `sum a_i |z_i|^p exp(p a_i T) = 0`, solved in log form.
pub fn scalar_critical_point(a: &[f64], moduli: &[f64], p: f64) -> f64 {
    let g = |t: f64| {
        let s: Vec<f64> = a
            .iter()
            .zip(moduli)
            .filter(|(_, r)| **r > 0.0)
            .map(|(ai, r)| p * (r.ln() + ai * t))
            .collect();
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        a.iter()
            .zip(moduli)
            .filter(|(_, r)| **r > 0.0)
            .zip(&s)
            .map(|((ai, _), si)| ai * (si - top).exp())
            .sum::<f64>()
    };
    bisect(g, -60.0, 60.0)
}
