//! The p = infinity endpoint: membership in the moment-angle complex
//! `(D^2, S^1)^K` and two independent projectors onto it along leaves.
//!
//! The combinatorial projector works in log coordinates. With `V` a Gale
//! dual of `A`, a point `y = r F(z, T)` lies in the complex exactly when
//! `u = ln|y|` is nonpositive with support in a face of `K_A` and
//! `sum V_i u_i = sum V_i ln|z_i|`, `sum (ln|z_i| - u_i) = m c` with
//! `r = exp(-c)`. The first equation is solved by the radial decomposition
//! of `nu = sum V_i ln|z_i|` against `conv{-V_i : {i} in K_A}`. Zero
//! coordinates are handled in the quotient by `span{V_i : z_i = 0}`, where
//! the cones over the link of the zero set form a complete fan.
//!
//! The p-limit projector follows the minimizers `T_p` along a doubling
//! schedule and finishes with an active-set solve of the min-max problem
//! `min_T max_i (ln|z_i| + <A_i, T>)`, whose optimality condition is the
//! same face condition.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use serde::Serialize;

use crate::complex::{build_complex, Face, SimplicialComplex};
use crate::config::{require_siegel, AmbientPoint, Configuration};
use crate::error::{Error, Result};
use crate::geometry::{cone_decompose, least_squares, origin_in_hull, RadialPolytope};
use crate::leaf::{LeafSolver, SolverSettings};
use crate::rational::{to_f64, Rational};

pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentAngleMembership {
    pub inside: bool,
    #[serde(serialize_with = "crate::json::real")]
    pub max_norm: f64,
    /// 1-based `{i : |y_i| < 1 - tol}`.
    pub strict_set: Vec<usize>,
    /// Minimal face containing the strict set, when it is a face.
    pub carrier: Option<Vec<usize>>,
}

pub fn mac_contains(k: &SimplicialComplex, y: &AmbientPoint, tol: f64) -> Result<MomentAngleMembership> {
    if y.len() != k.m() {
        return Err(Error::DimensionMismatch {
            expected: k.m(),
            found: y.len(),
        });
    }
    let moduli = y.moduli();
    let max_norm = moduli.iter().copied().fold(0.0, f64::max);
    let strict = Face::from_indices((0..moduli.len()).filter(|&i| moduli[i] < 1.0 - tol));
    let is_face = k.contains(strict);
    let inside = is_face && (max_norm - 1.0).abs() <= tol && moduli.iter().all(|&r| r <= 1.0 + tol);
    let one_based = |f: Face| f.indices().iter().map(|i| i + 1).collect::<Vec<_>>();
    Ok(MomentAngleMembership {
        inside,
        max_norm,
        strict_set: one_based(strict),
        carrier: is_face.then(|| one_based(strict)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Combinatorial,
    Plimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    pub method: ProjectionMethod,
    pub y: AmbientPoint,
    #[serde(rename = "T_inf", serialize_with = "crate::json::reals")]
    pub t_inf: Vec<f64>,
    #[serde(serialize_with = "crate::json::real")]
    pub r: f64,
    /// 1-based carrier face: the zero set together with `{i : u_i < 0}`.
    pub sigma: Vec<usize>,
    #[serde(serialize_with = "crate::json::reals")]
    pub u: Vec<f64>,
    /// Correction supported on the zero set.
    #[serde(serialize_with = "crate::json::reals")]
    pub x: Vec<f64>,
    #[serde(serialize_with = "crate::json::real")]
    pub c: f64,
    #[serde(serialize_with = "crate::json::complexes")]
    pub phases: Vec<Complex64>,
}

impl ProjectionResult {
    /// `max_i |r F(z, T)_i - y_i|`.
    pub fn reconstruction_error(&self, a: &Configuration, z: &AmbientPoint) -> Result<f64> {
        let back = crate::leaf::flow(a, z, &self.t_inf)?.scale(self.r);
        Ok(back.max_abs_diff(&self.y))
    }
}

fn check_centered(a: &Configuration) -> Result<()> {
    if a.is_centered() {
        Ok(())
    } else {
        Err(Error::NotCentered)
    }
}

/// `chi(z_i) ln|z_i|`: the log-modulus, or 0 on zero coordinates.
fn log_moduli(z: &AmbientPoint) -> Vec<f64> {
    z.coords()
        .iter()
        .map(|c| if c.norm() > 0.0 { c.norm().ln() } else { 0.0 })
        .collect()
}

/// Solves `<A_i, T> = rhs_i` for all `i`; the system is consistent by
/// construction, so a residual above `1e-9` (relative) is reported.
fn solve_for_t(a_cols: &[DVector<f64>], d: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    let m = a_cols.len();
    let mut at = DMatrix::<f64>::zeros(m, d);
    for (i, col) in a_cols.iter().enumerate() {
        at.set_row(i, &col.transpose());
    }
    let b = DVector::from_column_slice(rhs);
    let t = least_squares(&at, &b);
    let scale = b.amax().max(1.0);
    let residual = (&at * &t - &b).amax() / scale;
    if residual > 1e-9 {
        return Err(Error::Inconsistent(residual));
    }
    Ok(t.iter().copied().collect())
}

/// Precomputed data for projecting many points of one configuration.
#[derive(Debug, Clone)]
pub struct CombinatorialProjector {
    config: Configuration,
    complex: SimplicialComplex,
    a_cols: Vec<DVector<f64>>,
    v_cols: Vec<DVector<f64>>,
    /// `conv{-V_i : {i} in K_A}`; absent when `m - d - 1 = 0`.
    polytope: Option<RadialPolytope>,
    /// polytope vertex index -> index in `[m]`
    polytope_labels: Vec<usize>,
    /// rotation applied to the cone scan in the zero-coordinate branch
    cone_rotation: usize,
}

impl CombinatorialProjector {
    pub fn new(a: &Configuration) -> Result<Self> {
        check_centered(a)?;
        let complex = build_complex(a)?;
        let v = crate::config::gale_dual(a)?;
        let n = v.rows();
        let v_columns = v.columns();
        let v_cols = v_columns
            .iter()
            .map(|c| DVector::from_iterator(n, c.iter().map(to_f64)))
            .collect();
        let polytope_labels = complex.vertices();
        let polytope = if n == 0 {
            None
        } else {
            let verts: Vec<Vec<Rational>> = polytope_labels
                .iter()
                .map(|&i| v_columns[i].iter().map(|x| -x.clone()).collect())
                .collect();
            Some(RadialPolytope::new(&verts)?)
        };
        let a_cols = a
            .columns_f64()
            .into_iter()
            .map(DVector::from_vec)
            .collect();
        Ok(Self {
            config: a.clone(),
            complex,
            a_cols,
            v_cols,
            polytope,
            polytope_labels,
            cone_rotation: 0,
        })
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn facet_count(&self) -> usize {
        self.polytope.as_ref().map_or(0, RadialPolytope::facet_count)
    }

    /// Changes the order in which facets and link cones are scanned. The
    /// projection itself is unique, so results must not depend on it.
    pub fn reorder(&mut self, facet_order: &[usize], cone_rotation: usize) {
        if let Some(p) = self.polytope.as_mut() {
            p.reorder_facets(facet_order);
        }
        self.cone_rotation = cone_rotation;
    }

    pub fn project(&self, z: &AmbientPoint) -> Result<ProjectionResult> {
        let a = &self.config;
        let m = a.m();
        if z.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: z.len(),
            });
        }
        require_siegel(a, z)?;
        let ell = log_moduli(z);
        let n = self.v_cols.first().map_or(0, DVector::len);
        let mut nu = DVector::<f64>::zeros(n);
        for (v, l) in self.v_cols.iter().zip(&ell) {
            nu.axpy(*l, v, 1.0);
        }
        let zero_set = z.zero_set();
        let mut u = vec![0.0; m];
        let mut x = vec![0.0; m];

        if zero_set.is_empty() {
            if let Some(poly) = &self.polytope {
                let dec = poly.decompose(nu.as_slice())?;
                for (&k, mu) in dec.face.iter().zip(&dec.mu) {
                    u[self.polytope_labels[k]] = -dec.rho * mu;
                }
            }
        } else {
            self.stratum_coefficients(&zero_set, &nu, &mut u, &mut x)?;
        }

        let total: f64 = ell.iter().sum::<f64>() - u.iter().sum::<f64>() - x.iter().sum::<f64>();
        let c = total / m as f64;
        let rhs: Vec<f64> = (0..m).map(|i| u[i] + x[i] + c - ell[i]).collect();
        let t_inf = solve_for_t(&self.a_cols, a.d(), &rhs)?;

        let phases = z.phases();
        let coords = (0..m)
            .map(|i| {
                if zero_set.contains(&i) {
                    Complex64::new(0.0, 0.0)
                } else {
                    phases[i] * u[i].exp()
                }
            })
            .collect();
        let sigma_face = Face::from_indices(zero_set.iter().copied())
            .union(Face::from_indices((0..m).filter(|&i| u[i] < 0.0)));
        Ok(ProjectionResult {
            method: ProjectionMethod::Combinatorial,
            y: AmbientPoint::from_parts(coords, z.support().to_vec()),
            t_inf,
            r: (-c).exp(),
            sigma: sigma_face.indices().iter().map(|i| i + 1).collect(),
            u,
            x,
            c,
            phases,
        })
    }

    /// Zero-coordinate branch: decompose the projection of `nu` in the fan
    /// of the link of the zero set, then absorb the remainder into the
    /// zero coordinates, whose `V_i` are linearly independent.
    fn stratum_coefficients(
        &self,
        zero_set: &[usize],
        nu: &DVector<f64>,
        u: &mut [f64],
        x: &mut [f64],
    ) -> Result<()> {
        let n = nu.len();
        if n == 0 {
            return Ok(());
        }
        let zero_face = Face::from_indices(zero_set.iter().copied());
        let link = self.complex.link(zero_face)?;
        let mut w = DMatrix::<f64>::zeros(n, zero_set.len());
        for (c, &i) in zero_set.iter().enumerate() {
            w.set_column(c, &self.v_cols[i]);
        }
        let q = w.clone().svd(true, false).u.expect("u was requested");
        let rank = zero_set.len().min(n);
        let q = q.columns(0, rank).into_owned();
        let project = |v: &DVector<f64>| v - &q * (q.transpose() * v);

        let labels: Vec<usize> = (0..self.config.m()).collect();
        let generators: Vec<DVector<f64>> = labels.iter().map(|&i| project(&(-&self.v_cols[i]))).collect();
        let mut cones: Vec<Vec<usize>> = link.maximal_index_sets();
        if !cones.is_empty() {
            let k = self.cone_rotation % cones.len();
            cones.rotate_left(k);
        }
        let target = project(nu);
        let hit = cone_decompose(&generators, &cones, &target).ok_or_else(|| {
            Error::Precondition("projected vector lies in no cone of the link fan".into())
        })?;
        let mut vu = DVector::<f64>::zeros(n);
        for &(i, coef) in &hit.coefficients {
            u[i] = -coef;
            vu.axpy(-coef, &self.v_cols[i], 1.0);
        }
        let remainder = nu - vu;
        let xs = least_squares(&w, &remainder);
        let miss = (&w * &xs - &remainder).amax() / remainder.amax().max(1.0);
        if miss > 1e-9 {
            return Err(Error::Inconsistent(miss));
        }
        for (&i, v) in zero_set.iter().zip(xs.iter()) {
            x[i] = *v;
        }
        Ok(())
    }
}

/// The unique `(y, T, r)` with `y = r F(z, T)` in the moment-angle complex.
pub fn project_combinatorial(a: &Configuration, z: &AmbientPoint) -> Result<ProjectionResult> {
    CombinatorialProjector::new(a)?.project(z)
}

/// `2, 4, 8, ..., 1024`.
pub fn default_schedule() -> Vec<f64> {
    (1..=10).map(|k| f64::from(1u32 << k)).collect()
}

/// Parses `start:stop:xFACTOR` (geometric) or `start:stop:+STEP`.
pub fn parse_schedule(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("bad schedule {spec:?}, expected start:stop:xFACTOR"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let mut out = Vec::new();
    if let Some(f) = parts[2].strip_prefix('x') {
        let factor: f64 = f.parse().map_err(|_| bad())?;
        if !(factor > 1.0) || !(start >= 1.0) {
            return Err(bad());
        }
        let mut p = start;
        while p <= stop * (1.0 + 1e-12) {
            out.push(p);
            p *= factor;
        }
    } else if let Some(s) = parts[2].strip_prefix('+') {
        let step: f64 = s.parse().map_err(|_| bad())?;
        if !(step > 0.0) || !(start >= 1.0) {
            return Err(bad());
        }
        let mut k = 0.0;
        while start + k * step <= stop * (1.0 + 1e-12) {
            out.push(start + k * step);
            k += 1.0;
        }
    } else {
        return Err(bad());
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty()
        || schedule.iter().any(|p| !(p.is_finite() && *p >= 1.0))
        || schedule.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidArgument(
            "schedule must be a nonempty increasing list of exponents >= 1".into(),
        ));
    }
    Ok(())
}

/// One row of a p-sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepStep {
    #[serde(serialize_with = "crate::json::real")]
    pub p: f64,
    #[serde(rename = "T", serialize_with = "crate::json::reals")]
    pub t: Vec<f64>,
    /// `||f_p(z)||_p`
    #[serde(serialize_with = "crate::json::real")]
    pub norm_p: f64,
    /// `||x_p||_inf` for `x_p = f_p / ||f_p||_p`
    #[serde(serialize_with = "crate::json::real")]
    pub x_inf: f64,
    #[serde(serialize_with = "crate::json::real")]
    pub residual: f64,
    /// `||T_p - T_prev||_2`, absent on the first row.
    #[serde(serialize_with = "crate::json::opt_real")]
    pub increment: Option<f64>,
}

/// Warm-started minimizers along `schedule`.
pub fn sweep(
    a: &Configuration,
    z: &AmbientPoint,
    schedule: &[f64],
    settings: &SolverSettings,
) -> Result<Vec<SweepStep>> {
    check_schedule(schedule)?;
    let solver = LeafSolver::new(a, z)?;
    sweep_with(&solver, schedule, settings)
}

fn sweep_with(solver: &LeafSolver, schedule: &[f64], settings: &SolverSettings) -> Result<Vec<SweepStep>> {
    let mut steps: Vec<SweepStep> = Vec::with_capacity(schedule.len());
    let mut t = vec![0.0; solver.dimension()];
    for (k, &p) in schedule.iter().enumerate() {
        let min = if k == 0 {
            solver.solve(p, settings)?
        } else {
            solver.newton(p, settings, &t)?
        };
        let increment = (k > 0).then(|| {
            min.t
                .iter()
                .zip(&t)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        });
        t = min.t.clone();
        let x = solver.normalized(p, &t);
        steps.push(SweepStep {
            p,
            t: min.t,
            norm_p: min.norm,
            x_inf: x.sup_norm(),
            residual: min.residual,
            increment,
        });
    }
    Ok(steps)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PLimitReport {
    pub result: ProjectionResult,
    pub steps: Vec<SweepStep>,
    /// `T_p` at the last scheduled exponent, before the active-set finish.
    #[serde(rename = "T_last", serialize_with = "crate::json::reals")]
    pub t_last: Vec<f64>,
    /// 1-based active set `{i : |y_i| = 1}` used by the finishing solve.
    pub active_set: Vec<usize>,
    /// False when no candidate active set verified; `result` then comes
    /// from `T_last` directly.
    pub refined: bool,
}

/// Candidates beyond `d + 1` considered for the active set.
const ACTIVE_SET_SLACK: usize = 4;

/// Projection by continuation in p; the schedule must end at p >= 1024.
pub fn project_plimit(
    a: &Configuration,
    z: &AmbientPoint,
    schedule: &[f64],
    settings: &SolverSettings,
) -> Result<PLimitReport> {
    check_centered(a)?;
    check_schedule(schedule)?;
    if *schedule.last().expect("nonempty") < 1024.0 {
        return Err(Error::InvalidArgument("the p-limit schedule must reach p >= 1024".into()));
    }
    if z.len() != a.m() {
        return Err(Error::DimensionMismatch {
            expected: a.m(),
            found: z.len(),
        });
    }
    let solver = LeafSolver::new(a, z)?;
    let steps = sweep_with(&solver, schedule, settings)?;
    let t_last = steps.last().expect("nonempty").t.clone();

    let support = z.support().to_vec();
    let (t_inf, active, refined) = match refine_active_set(a, &solver, &t_last)? {
        Some((t, active)) => (t, active, true),
        None => {
            let s = solver.log_moduli_at(&t_last);
            let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let active = support
                .iter()
                .zip(&s)
                .filter(|(_, &v)| v >= top - DEFAULT_MEMBERSHIP_TOL)
                .map(|(&i, _)| i)
                .collect();
            (t_last.clone(), active, false)
        }
    };

    let s = solver.log_moduli_at(&t_inf);
    let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = a.m();
    let mut u = vec![0.0; m];
    for (&i, &si) in support.iter().zip(&s) {
        u[i] = if active.contains(&i) { 0.0 } else { (si - top).min(0.0) };
    }
    let phases = z.phases();
    let coords = (0..m)
        .map(|i| {
            if support.contains(&i) {
                phases[i] * u[i].exp()
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let sigma = (0..m)
        .filter(|&i| !support.contains(&i) || u[i] < -1e-12)
        .map(|i| i + 1)
        .collect();
    Ok(PLimitReport {
        result: ProjectionResult {
            method: ProjectionMethod::Plimit,
            y: AmbientPoint::from_parts(coords, support.clone()),
            t_inf,
            r: (-top).exp(),
            sigma,
            u,
            x: vec![0.0; m],
            c: top,
            phases,
        },
        steps,
        t_last,
        active_set: active.iter().map(|i| i + 1).collect(),
        refined,
    })
}

/// Active-set solve of `min_T max_{i in I_z} (ln|z_i| + <A_i, T>)` near
/// `guess`. A candidate set `P` is accepted when `0 in conv A(P)`, the
/// equations `ln|z_i| + <A_i, T> = M (i in P)` are consistent, and no other
/// coordinate exceeds `M`; these are the optimality conditions, so any
/// accepted set yields the unique minimizer.
fn refine_active_set(
    a: &Configuration,
    solver: &LeafSolver,
    guess: &[f64],
) -> Result<Option<(Vec<f64>, Vec<usize>)>> {
    let z = solver.point();
    let support = z.support();
    let d = a.d();
    let s = solver.log_moduli_at(guess);
    let mut order: Vec<usize> = (0..support.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));
    let pool = &order[..support.len().min(d + 1 + ACTIVE_SET_SLACK)];
    let ell: Vec<f64> = support.iter().map(|&i| z.coords()[i].norm().ln()).collect();
    let cols = a.columns_f64();
    let scale = ell.iter().fold(1.0f64, |acc, l| acc.max(l.abs()));

    for k in 1..=pool.len() {
        for combo in pool.iter().copied().combinations(k) {
            let labels: Vec<usize> = combo.iter().map(|&j| support[j]).collect();
            let pts: Vec<Vec<Rational>> = a.subtuple(&labels);
            if origin_in_hull(&pts)?.is_none() {
                continue;
            }
            // unknowns (T, M): <A_i, T> - M = -ln|z_i|
            let mut mat = DMatrix::<f64>::zeros(k, d + 1);
            let mut rhs = DVector::<f64>::zeros(k);
            for (r, &j) in combo.iter().enumerate() {
                for c in 0..d {
                    mat[(r, c)] = cols[support[j]][c];
                }
                mat[(r, d)] = -1.0;
                rhs[r] = -ell[j];
            }
            let sol = least_squares(&mat, &rhs);
            if (&mat * &sol - &rhs).amax() > 1e-10 * scale {
                continue;
            }
            let t: Vec<f64> = sol.iter().take(d).copied().collect();
            let level = sol[d];
            let values = solver.log_moduli_at(&t);
            if values.iter().all(|&v| v <= level + 1e-10 * scale) {
                let mut active = labels;
                active.sort_unstable();
                return Ok(Some((t, active)));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeReport {
    pub escaped: bool,
    /// First scheduled exponent at which the retraction left `C(z')`.
    #[serde(serialize_with = "crate::json::opt_real")]
    pub p: Option<f64>,
    /// 1-based coordinate with `|x_i| > |z'_i|` at that exponent.
    pub coordinate: Option<usize>,
}

/// Follows `f_p(z)/||f_p(z)||_p` along `schedule` and reports whether it
/// leaves `C(z') = {x : |x_i| <= |z'_i|}` for a target `z'` of the unit
/// sup-sphere in S_A lying off the moment-angle complex.
pub fn escape_check(
    a: &Configuration,
    z: &AmbientPoint,
    target: &AmbientPoint,
    schedule: &[f64],
    settings: &SolverSettings,
) -> Result<EscapeReport> {
    check_schedule(schedule)?;
    if target.len() != a.m() {
        return Err(Error::DimensionMismatch {
            expected: a.m(),
            found: target.len(),
        });
    }
    if (target.sup_norm() - 1.0).abs() > DEFAULT_MEMBERSHIP_TOL {
        return Err(Error::Precondition("target must have sup-norm 1".into()));
    }
    require_siegel(a, target)?;
    let k = build_complex(a)?;
    if mac_contains(&k, target, DEFAULT_MEMBERSHIP_TOL)?.inside {
        return Err(Error::Precondition(
            "target lies in the moment-angle complex".into(),
        ));
    }
    let solver = LeafSolver::new(a, z)?;
    let bounds = target.moduli();
    let mut t = vec![0.0; a.d()];
    for (idx, &p) in schedule.iter().enumerate() {
        let min = if idx == 0 {
            solver.solve(p, settings)?
        } else {
            solver.newton(p, settings, &t)?
        };
        t = min.t;
        let x = solver.normalized(p, &t);
        if let Some(i) = x.moduli().iter().zip(&bounds).position(|(xi, bi)| xi > bi) {
            return Ok(EscapeReport {
                escaped: true,
                p: Some(p),
                coordinate: Some(i + 1),
            });
        }
    }
    Ok(EscapeReport {
        escaped: false,
        p: None,
        coordinate: None,
    })
}
