//! Exact linear programming over the rationals.
//!
//! A small two-phase simplex with Bland's anti-cycling rule, used to decide
//! cone-intersection questions exactly. Problems here are tiny (a handful of
//! variables and equations), so the dense tableau is plenty.

use super::{Rat, RatMatrix, RatVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, x: Vec<Rat> },
}

struct Tableau {
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, pr: usize, pc: usize) {
        let inv = self.rows[pr][pc].recip().expect("pivot entry is nonzero");
        for e in self.rows[pr].iter_mut() {
            *e *= &inv;
        }
        self.rhs[pr] *= &inv;
        for r in 0..self.rows.len() {
            if r == pr || self.rows[r][pc].is_zero() {
                continue;
            }
            let factor = self.rows[r][pc].clone();
            let pivot_row = self.rows[pr].clone();
            for (e, p) in self.rows[r].iter_mut().zip(pivot_row.iter()) {
                *e -= &(&factor * p);
            }
            let delta = &factor * &self.rhs[pr];
            self.rhs[r] -= &delta;
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations maximizing `costs`, entering only columns
    /// `< ncols_allowed`. Returns `None` when the objective is unbounded.
    fn run(&mut self, costs: &[Rat], ncols_allowed: usize) -> Option<()> {
        loop {
            let reduced = |j: usize| -> Rat {
                let mut r = costs[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    if !row[j].is_zero() {
                        r -= &(&costs[self.basis[i]] * &row[j]);
                    }
                }
                r
            };
            // Bland's rule: smallest improving column index.
            let entering = (0..ncols_allowed).find(|&j| reduced(j).is_positive());
            let Some(pc) = entering else {
                return Some(());
            };
            // Ratio test, ties broken by smallest basis index.
            let mut best: Option<(usize, Rat)> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][pc].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &self.rows[i][pc];
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
            let (pr, _) = best?;
            self.pivot(pr, pc);
        }
    }

    fn objective(&self, costs: &[Rat]) -> Rat {
        self.basis
            .iter()
            .zip(self.rhs.iter())
            .map(|(&j, b)| &costs[j] * b)
            .sum()
    }
}

/// Maximizes `c · x` subject to `a x = b`, `x >= 0`, in exact arithmetic.
pub fn maximize(a: &RatMatrix, b: &RatVector, c: &[Rat]) -> LpOutcome {
    let m = a.nrows();
    let n = a.ncols();
    assert_eq!(b.dim(), m, "rhs length must match constraint count");
    assert_eq!(c.len(), n, "cost length must match variable count");

    // Build [A | I] with b >= 0; the identity columns are artificials.
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row: Vec<Rat> = (0..n)
            .map(|j| {
                let e = a.get(i, j);
                if flip {
                    -e
                } else {
                    e.clone()
                }
            })
            .collect();
        row.extend((0..m).map(|k| if k == i { Rat::one() } else { Rat::zero() }));
        rows.push(row);
        rhs.push(if flip { -&b[i] } else { b[i].clone() });
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis: (n..n + m).collect(),
    };

    // Phase 1: drive the artificial variables to zero.
    let mut phase1_costs = vec![Rat::zero(); n + m];
    for cost in phase1_costs.iter_mut().skip(n) {
        *cost = -Rat::one();
    }
    t.run(&phase1_costs, n + m)
        .expect("phase-1 objective is bounded above by zero");
    if t.objective(&phase1_costs).is_negative() {
        return LpOutcome::Infeasible;
    }

    // Pivot leftover artificials out of the basis; rows where that is
    // impossible are redundant equations and can be dropped.
    let mut i = 0;
    while i < t.basis.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // Phase 2: the real objective, artificial columns barred from entering.
    let mut costs = c.to_vec();
    costs.extend(std::iter::repeat_with(Rat::zero).take(m));
    if t.run(&costs, n).is_none() {
        return LpOutcome::Unbounded;
    }

    let mut x = vec![Rat::zero(); n];
    for (i, &j) in t.basis.iter().enumerate() {
        if j < n {
            x[j] = t.rhs[i].clone();
        }
    }
    LpOutcome::Optimal {
        value: t.objective(&costs),
        x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&n| Rat::from_int(n)).collect()
    }

    #[test]
    fn optimum_on_a_simplex_face() {
        // max x0 + 2 x1 s.t. x0 + x1 = 1, x >= 0  ->  x = (0, 1), value 2.
        let a = RatMatrix::from_int_rows(&[&[1, 1]]);
        let b = RatVector::from_ints(&[1]);
        match maximize(&a, &b, &ints(&[1, 2])) {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, Rat::from_int(2));
                assert_eq!(x, vec![Rat::zero(), Rat::one()]);
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x0 + x1 = -1 has no nonnegative solution.
        let a = RatMatrix::from_int_rows(&[&[1, 1]]);
        let b = RatVector::from_ints(&[-1]);
        assert_eq!(maximize(&a, &b, &ints(&[1, 0])), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // x0 - x1 = 0 allows x = (t, t) with t arbitrary; max x0 unbounded.
        let a = RatMatrix::from_int_rows(&[&[1, -1]]);
        let b = RatVector::from_ints(&[0]);
        assert_eq!(maximize(&a, &b, &ints(&[1, 0])), LpOutcome::Unbounded);
    }

    #[test]
    fn handles_redundant_equations() {
        // Duplicate rows force an artificial to be dropped as redundant.
        let a = RatMatrix::from_int_rows(&[&[1, 1], &[2, 2]]);
        let b = RatVector::from_ints(&[1, 2]);
        match maximize(&a, &b, &ints(&[3, 1])) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, Rat::from_int(3)),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn rational_data_stays_exact() {
        // max x1 with x0/2 + x1/3 = 1/6: best is x = (0, 1/2).
        let a = RatMatrix::from_rows(vec![RatVector::new(vec![
            Rat::frac(1, 2),
            Rat::frac(1, 3),
        ])])
        .unwrap();
        let b = RatVector::new(vec![Rat::frac(1, 6)]);
        match maximize(&a, &b, &[Rat::zero(), Rat::one()]) {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, Rat::frac(1, 2));
                assert_eq!(x, vec![Rat::zero(), Rat::frac(1, 2)]);
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }
}
