//! L^p-norm minima along the leaves of the action
//! `F(z, T) = (z_i exp<A_i, T>)_i`, the retraction onto `X_A(p)` and the
//! chart inversion.
//!
//! The solver works with the log-sum-exp form of the objective,
//! `phi(T) = (1/p) ln sum_{i in I_z} exp(p (ln|z_i| + <A_i, T>))`, which has
//! the same minimizer as `sum |z_i|^p exp(p <A_i, T>)`, equals `ln ||F(z,T)||_p`
//! and stays finite for large p. Its gradient is the normalized critical
//! equation `sum A_i w_i` with softmax weights `w`.

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{require_siegel, AmbientPoint, Configuration};
use crate::error::{Error, Result};
use crate::geometry::least_squares;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub shrink: f64,
    pub sufficient_decrease: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidArgument(
                "solver settings need tol > 0 and 0 < shrink < 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafMinimum {
    #[serde(serialize_with = "crate::json::real")]
    pub p: f64,
    #[serde(rename = "T", serialize_with = "crate::json::reals")]
    pub t: Vec<f64>,
    pub f_p: AmbientPoint,
    #[serde(serialize_with = "crate::json::real")]
    pub norm: f64,
    #[serde(serialize_with = "crate::json::real")]
    pub residual: f64,
    pub iterations: usize,
}

/// The leaf through one point, ready for repeated solves.
#[derive(Debug, Clone)]
pub struct LeafSolver {
    d: usize,
    point: AmbientPoint,
    /// columns A_i for i in the support
    columns: Vec<DVector<f64>>,
    log_moduli: Vec<f64>,
}

/// Longest Newton step in T.
const MAX_STEP: f64 = 1.0;

/// Cold starts above this exponent go through a doubling schedule.
const DIRECT_P_LIMIT: f64 = 16.0;

impl LeafSolver {
    /// Fails unless `z` lies in the Siegel set of `a`.
    pub fn new(a: &Configuration, z: &AmbientPoint) -> Result<Self> {
        require_siegel(a, z)?;
        Ok(Self::new_unchecked(a, z))
    }

    pub(crate) fn new_unchecked(a: &Configuration, z: &AmbientPoint) -> Self {
        let all = a.columns_f64();
        let columns = z
            .support()
            .iter()
            .map(|&i| DVector::from_column_slice(&all[i]))
            .collect();
        let log_moduli = z.support().iter().map(|&i| z.coords()[i].norm().ln()).collect();
        Self {
            d: a.d(),
            point: z.clone(),
            columns,
            log_moduli,
        }
    }

    pub fn point(&self) -> &AmbientPoint {
        &self.point
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// `ln|z_i| + <A_i, T>` over the support.
    fn exponents(&self, t: &DVector<f64>) -> Vec<f64> {
        self.columns
            .iter()
            .zip(&self.log_moduli)
            .map(|(a, l)| l + a.dot(t))
            .collect()
    }

    /// `ln ||F(z, T)||_p`.
    pub fn log_norm(&self, p: f64, t: &[f64]) -> f64 {
        log_sum_exp_scaled(&self.exponents(&DVector::from_column_slice(t)), p)
    }

    fn evaluate(&self, p: f64, t: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let s = self.exponents(t);
        let phi = log_sum_exp_scaled(&s, p);
        let weights: Vec<f64> = s.iter().map(|si| (p * (si - phi)).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut g = DVector::<f64>::zeros(self.d);
        for (a, w) in self.columns.iter().zip(&weights) {
            g.axpy(w / total, a, 1.0);
        }
        // centered second moment, PSD even when one weight dominates
        let mut h = DMatrix::<f64>::zeros(self.d, self.d);
        for (a, w) in self.columns.iter().zip(&weights) {
            let c = a - &g;
            h.ger(p * w / total, &c, &c, 1.0);
        }
        (phi, g, h)
    }

    /// Hessian of `phi` at `T`.
    pub fn hessian(&self, p: f64, t: &[f64]) -> DMatrix<f64> {
        self.evaluate(p, &DVector::from_column_slice(t)).2
    }

    /// Normalized critical-equation residual at `T`.
    pub fn residual(&self, p: f64, t: &[f64]) -> f64 {
        self.evaluate(p, &DVector::from_column_slice(t)).1.amax()
    }

    /// Regularized damped Newton from `start`.
    pub fn newton(&self, p: f64, settings: &SolverSettings, start: &[f64]) -> Result<LeafMinimum> {
        let mut t = DVector::from_column_slice(start);
        let mut iterations = 0;
        loop {
            let (phi, g, h) = self.evaluate(p, &t);
            let residual = g.amax();
            if residual < settings.tol || self.d == 0 {
                return Ok(self.finish(p, t, residual, iterations));
            }
            if iterations == settings.max_iter {
                return Err(Error::NonConvergence {
                    p,
                    iterations,
                    residual,
                });
            }
            iterations += 1;
            // regularized by |g|: a gradient step far out, Newton near the minimum
            let shift = DMatrix::<f64>::identity(self.d, self.d) * g.norm();
            let mut step = match (h.clone() + shift).cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => least_squares(&h, &(-&g)),
            };
            if !(g.dot(&step) < 0.0) {
                step = -&g;
            }
            // a dominant weight makes the Hessian nearly singular
            let len = step.norm();
            if len > MAX_STEP {
                step *= MAX_STEP / len;
            }
            let slope = g.dot(&step);
            if -slope < 1e-13 * (1.0 + phi.abs()) {
                // inside the quadratic region the decrease is below rounding
                t += step;
                continue;
            }
            let mut alpha = 1.0;
            loop {
                let candidate = &t + &step * alpha;
                let phi_new = log_sum_exp_scaled(&self.exponents(&candidate), p);
                if phi_new <= phi + settings.sufficient_decrease * alpha * slope {
                    t = candidate;
                    break;
                }
                alpha *= settings.shrink;
                if alpha < 1e-20 {
                    return Err(Error::NonConvergence {
                        p,
                        iterations,
                        residual,
                    });
                }
            }
        }
    }

    /// Minimizer for exponent `p`, starting at `T = 0` (through a doubling
    /// schedule when `p` is large).
    pub fn solve(&self, p: f64, settings: &SolverSettings) -> Result<LeafMinimum> {
        check_exponent(p)?;
        settings.validate()?;
        let mut start = vec![0.0; self.d];
        if p > DIRECT_P_LIMIT {
            let mut q = 2.0;
            while q < p {
                start = self.newton(q, settings, &start)?.t;
                q *= 2.0;
            }
        }
        self.newton(p, settings, &start)
    }

    fn finish(&self, p: f64, t: DVector<f64>, residual: f64, iterations: usize) -> LeafMinimum {
        let s = self.exponents(&t);
        let phi = log_sum_exp_scaled(&s, p);
        let f_p = self.scaled_point(&s, 0.0);
        LeafMinimum {
            p,
            t: t.iter().copied().collect(),
            f_p,
            norm: phi.exp(),
            residual,
            iterations,
        }
    }

    /// `phase_i * exp(s_i - shift)` on the support, zero elsewhere.
    fn scaled_point(&self, s: &[f64], shift: f64) -> AmbientPoint {
        let phases = self.point.phases();
        let mut coords = vec![Complex64::new(0.0, 0.0); self.point.len()];
        for (&i, si) in self.point.support().iter().zip(s) {
            coords[i] = phases[i] * (si - shift).exp();
        }
        AmbientPoint::from_parts(coords, self.point.support().to_vec())
    }

    /// `F(z, T) / ||F(z, T)||_p` computed without forming `F(z, T)`.
    pub fn normalized(&self, p: f64, t: &[f64]) -> AmbientPoint {
        let s = self.exponents(&DVector::from_column_slice(t));
        let phi = log_sum_exp_scaled(&s, p);
        self.scaled_point(&s, phi)
    }

    /// `F(z, T) / ||F(z, T)||_inf`.
    pub fn sup_normalized(&self, t: &[f64]) -> AmbientPoint {
        let s = self.exponents(&DVector::from_column_slice(t));
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.scaled_point(&s, top)
    }

    /// `ln|F(z,T)_i|` over the support, in support order.
    pub fn log_moduli_at(&self, t: &[f64]) -> Vec<f64> {
        self.exponents(&DVector::from_column_slice(t))
    }
}

/// `(1/p) ln sum exp(p s_i)` with the maximum factored out.
pub(crate) fn log_sum_exp_scaled(s: &[f64], p: f64) -> f64 {
    let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    let sum: f64 = s.iter().map(|si| (p * (si - top)).exp()).sum();
    top + sum.ln() / p
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("exponent p = {p} must be finite and >= 1")))
    }
}

/// `F(z, T) = (z_i exp<A_i, T>)`; falls back to `exp(ln|z_i| + <A_i, T>)`
/// times the phase when the factor alone would overflow or underflow.
pub fn flow(a: &Configuration, z: &AmbientPoint, t: &[f64]) -> Result<AmbientPoint> {
    if z.len() != a.m() {
        return Err(Error::DimensionMismatch {
            expected: a.m(),
            found: z.len(),
        });
    }
    if t.len() != a.d() {
        return Err(Error::DimensionMismatch {
            expected: a.d(),
            found: t.len(),
        });
    }
    let cols = a.columns_f64();
    let coords = z
        .coords()
        .iter()
        .zip(&cols)
        .map(|(zi, ai)| {
            let r = zi.norm();
            if r == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let shift: f64 = ai.iter().zip(t).map(|(x, y)| x * y).sum();
            let factor = shift.exp();
            if factor.is_normal() {
                zi * factor
            } else {
                (zi / r) * (r.ln() + shift).exp()
            }
        })
        .collect();
    Ok(AmbientPoint::from_parts(coords, z.support().to_vec()))
}

/// The unique critical point of `T -> ||F(z, T)||_p` for `z` in S_A.
pub fn minimize(
    a: &Configuration,
    z: &AmbientPoint,
    p: f64,
    settings: &SolverSettings,
) -> Result<LeafMinimum> {
    check_exponent(p)?;
    LeafSolver::new(a, z)?.solve(p, settings)
}

/// `f_p(z) / ||f_p(z)||_p`, the retraction of S_A onto X_A(p).
pub fn retract(a: &Configuration, z: &AmbientPoint, p: f64) -> Result<AmbientPoint> {
    retract_with(a, z, p, &SolverSettings::default())
}

pub fn retract_with(
    a: &Configuration,
    z: &AmbientPoint,
    p: f64,
    settings: &SolverSettings,
) -> Result<AmbientPoint> {
    let solver = LeafSolver::new(a, z)?;
    let min = solver.solve(p, settings)?;
    Ok(solver.normalized(p, &min.t))
}

/// `(||sum A_i |x_i|^p||_inf, | ||x||_p - 1 |)`.
pub fn xap_residual(a: &Configuration, x: &AmbientPoint, p: f64) -> Result<(f64, f64)> {
    if x.len() != a.m() {
        return Err(Error::DimensionMismatch {
            expected: a.m(),
            found: x.len(),
        });
    }
    let cols = a.columns_f64();
    let powers: Vec<f64> = x.moduli().iter().map(|r| r.powf(p)).collect();
    let moment = (0..a.d())
        .map(|k| cols.iter().zip(&powers).map(|(c, w)| c[k] * w).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let norm = lp_norm(&x.moduli(), p);
    Ok((moment, (norm - 1.0).abs()))
}

/// `||x||_p` with the largest entry factored out.
pub fn lp_norm(moduli: &[f64], p: f64) -> f64 {
    let top = moduli.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    top * moduli.iter().map(|r| (r / top).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Coordinates `(x, T, r)` with `y = r F(x, T)` and `x` on X_A(p).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartCoordinates {
    pub x: AmbientPoint,
    #[serde(rename = "T", serialize_with = "crate::json::reals")]
    pub t: Vec<f64>,
    #[serde(serialize_with = "crate::json::real")]
    pub r: f64,
}

/// Inverts `(x, T, r) -> r F(x, T)` on S_A: `x = retract(y)`,
/// `T = -T_p(y)`, `r = ||f_p(y)||_p`.
pub fn chart_invert(a: &Configuration, y: &AmbientPoint, p: f64) -> Result<ChartCoordinates> {
    check_exponent(p)?;
    let solver = LeafSolver::new(a, y)?;
    let min = solver.solve(p, &SolverSettings::default())?;
    Ok(ChartCoordinates {
        x: solver.normalized(p, &min.t),
        t: min.t.iter().map(|v| -v).collect(),
        r: min.norm,
    })
}

/// `r F(x, T)`.
pub fn chart_apply(a: &Configuration, x: &AmbientPoint, t: &[f64], r: f64) -> Result<AmbientPoint> {
    Ok(flow(a, x, t)?.scale(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalMatrix;
    use std::f64::consts::{E, SQRT_2};

    fn segment() -> Configuration {
        Configuration::from_matrix(&RationalMatrix::from_i64_rows(&[&[1, -1]])).unwrap()
    }

    fn example() -> Configuration {
        serde_json::from_str(r#"{"d":2,"m":5,"A":[["0","0","1","1","-2"],["1","1/2","0","0","-3/2"]]}"#)
            .unwrap()
    }

    #[test]
    fn flow_identity_and_closed_form() {
        let a = segment();
        let z = AmbientPoint::real(&[1.0, E * E]);
        assert_eq!(flow(&a, &z, &[0.0]).unwrap().max_abs_diff(&z), 0.0);
        let y = flow(&a, &z, &[1.0]).unwrap();
        assert!((y.coords()[0].re - E).abs() < 1e-14);
        assert!((y.coords()[1].re - E).abs() < 1e-14);
    }

    #[test]
    fn flow_size_mismatch() {
        let z = AmbientPoint::real(&[1.0, 1.0, 1.0]);
        assert!(matches!(flow(&segment(), &z, &[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn segment_minimum_is_p_independent() {
        let a = segment();
        let z = AmbientPoint::real(&[1.0, E * E]);
        for p in [1.0, 1.5, 2.0, 3.0, 10.0, 100.0, 1024.0] {
            let m = minimize(&a, &z, p, &SolverSettings::default()).unwrap();
            assert!((m.t[0] - 1.0).abs() < 1e-10, "p = {p}: T = {}", m.t[0]);
        }
    }

    #[test]
    fn critical_point_returns_zero() {
        let a = segment();
        let z = AmbientPoint::real(&[0.3, 0.3]);
        let m = minimize(&a, &z, 2.0, &SolverSettings::default()).unwrap();
        assert_eq!(m.t, vec![0.0]);
        assert_eq!(m.iterations, 0);
    }

    #[test]
    fn retract_segment() {
        let x = retract(&segment(), &AmbientPoint::real(&[1.0, E * E]), 2.0).unwrap();
        for c in x.coords() {
            assert!((c.re - 1.0 / SQRT_2).abs() < 1e-12);
        }
        let (moment, norm) = xap_residual(&segment(), &x, 2.0).unwrap();
        assert!(moment < 1e-15 && norm < 1e-15);
    }

    #[test]
    fn zero_coordinates_stay_zero() {
        let a = example();
        let z = AmbientPoint::real(&[0.0, 1.0, 1.0, 1.0, 1.0]);
        let x = retract(&a, &z, 2.0).unwrap();
        assert_eq!(x.coords()[0].norm(), 0.0);
        let (moment, norm) = xap_residual(&a, &x, 2.0).unwrap();
        assert!(moment < 1e-10 && norm < 1e-12);
    }

    #[test]
    fn outside_siegel_set_is_an_error() {
        let a = example();
        let z = AmbientPoint::real(&[1.0, 1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            minimize(&a, &z, 2.0, &SolverSettings::default()),
            Err(Error::NotInSiegelSet { .. })
        ));
    }

    #[test]
    fn residual_of_coordinate_vector() {
        let a = example();
        let (moment, _) = xap_residual(&a, &AmbientPoint::real(&[1.0, 0.0, 0.0, 0.0, 0.0]), 2.0).unwrap();
        assert_eq!(moment, 1.0);
    }

    #[test]
    fn chart_of_segment_point() {
        let a = segment();
        let y = AmbientPoint::real(&[1.0, E * E]);
        let c = chart_invert(&a, &y, 2.0).unwrap();
        assert!((c.t[0] + 1.0).abs() < 1e-12);
        assert!((c.r - E * SQRT_2).abs() < 1e-12);
        let back = chart_apply(&a, &c.x, &c.t, c.r).unwrap();
        assert!(back.max_abs_diff(&y) < 1e-12 * E * E);
    }

    #[test]
    fn bad_exponent_is_rejected() {
        let z = AmbientPoint::real(&[1.0, 1.0]);
        assert!(minimize(&segment(), &z, 0.5, &SolverSettings::default()).is_err());
        assert!(minimize(&segment(), &z, f64::INFINITY, &SolverSettings::default()).is_err());
    }
}
