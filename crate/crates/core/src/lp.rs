//! Two-phase primal simplex over the rationals with Bland's rule.
//!
//! Only the small standard-form programs needed by the hull predicates are
//! solved here: `maximize c.x  s.t.  A x = b, x >= 0`.

use num::{Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<Rational>, value: Rational },
}

struct Tableau {
    /// constraint rows, each of length `n + 1` (last entry is the rhs)
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    n: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rational {
        &self.rows[i][self.n]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for x in self.rows[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[Rational], j: usize) -> Rational {
        let mut r = cost[j].clone();
        for (i, &b) in self.basis.iter().enumerate() {
            if !cost[b].is_zero() && !self.rows[i][j].is_zero() {
                r -= &cost[b] * &self.rows[i][j];
            }
        }
        r
    }

    /// Maximizes `cost` over the current basis, entering only `allowed`
    /// columns. Returns false when unbounded.
    fn optimize(&mut self, cost: &[Rational], allowed: usize) -> bool {
        loop {
            let entering = (0..allowed)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.reduced_cost(cost, j).is_positive());
            let Some(c) = entering else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    fn solution(&self, n: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs(i).clone();
            }
        }
        x
    }
}

/// Solves `maximize c.x s.t. A x = b, x >= 0` exactly.
pub(crate) fn maximize(a: &[Vec<Rational>], b: &[Rational], c: &[Rational]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    debug_assert_eq!(b.len(), m);
    debug_assert!(a.iter().all(|row| row.len() == n));

    // phase one: one artificial per row, rows flipped so that b >= 0
    let total = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, bi)) in a.iter().zip(b).enumerate() {
        let flip = bi.is_negative();
        let mut t: Vec<Rational> = row
            .iter()
            .map(|x| if flip { -x.clone() } else { x.clone() })
            .collect();
        t.extend((0..m).map(|k| {
            if k == i {
                Rational::from_integer(1.into())
            } else {
                Rational::zero()
            }
        }));
        t.push(if flip { -bi.clone() } else { bi.clone() });
        rows.push(t);
    }
    let mut tab = Tableau {
        rows,
        basis: (n..total).collect(),
        n: total,
    };
    let mut phase_one = vec![Rational::zero(); total];
    for x in phase_one.iter_mut().skip(n) {
        *x = Rational::from_integer((-1).into());
    }
    tab.optimize(&phase_one, total);
    let infeasibility: Rational = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= n)
        .map(|(i, _)| tab.rhs(i).clone())
        .sum();
    if infeasibility.is_positive() {
        return LpOutcome::Infeasible;
    }

    // drive remaining (zero-valued) artificials out, dropping redundant rows
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| !tab.rows[i][j].is_zero()) {
                Some(j) => {
                    tab.pivot(i, j);
                    i += 1;
                }
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }

    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(Rational::zero(), m));
    if !tab.optimize(&cost, n) {
        return LpOutcome::Unbounded;
    }
    let x = tab.solution(n);
    let value = x.iter().zip(c).fold(Rational::zero(), |acc, (xi, ci)| acc + xi * ci);
    LpOutcome::Optimal { x, value }
}
