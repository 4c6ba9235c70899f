//! Dense two-phase tableau simplex.
//!
//! Entering variables follow the most-negative reduced cost until a run of
//! degenerate pivots is seen, after which the solver switches permanently to
//! Bland's smallest-index rule, which cannot cycle.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` pairs.
    pub coefs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// `max c^T x` subject to the rows and `x >= 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LpProblem {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
    pub names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Whether the anti-cycling rule was engaged.
    pub bland: bool,
}

impl LpProblem {
    pub fn new(n_vars: usize) -> Self {
        LpProblem {
            n_vars,
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
            names: (0..n_vars).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) {
        self.rows.push(Constraint { coefs, kind, rhs });
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |m, v| m.max(-v));
        for r in &self.rows {
            let lhs: f64 = r.coefs.iter().map(|&(j, c)| c * x[j]).sum();
            let v = match r.kind {
                RowKind::Le => lhs - r.rhs,
                RowKind::Ge => r.rhs - lhs,
                RowKind::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    /// CPLEX-style LP text.
    pub fn to_lp_text(&self) -> String {
        let term = |c: f64, j: usize| format!("{} {} {}", if c < 0.0 { "-" } else { "+" }, c.abs(), self.names[j]);
        let mut s = String::from("Maximize\n obj:");
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                let _ = write!(s, " {}", term(c, j));
            }
        }
        s.push_str("\nSubject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(s, " c{i}:");
            for &(j, c) in &r.coefs {
                let _ = write!(s, " {}", term(c, j));
            }
            let op = match r.kind {
                RowKind::Le => "<=",
                RowKind::Ge => ">=",
                RowKind::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", r.rhs);
        }
        s.push_str("End\n");
        s
    }
}

struct Tableau {
    m: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    bland: bool,
    streak: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, obj: &mut [f64], r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (x, y) in obj.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Maximizes with reduced-cost row `obj` (`obj[j] < 0` means improving).
    fn optimize(&mut self, obj: &mut [f64], allowed: &[bool], max_iters: usize) -> LpStatus {
        loop {
            if self.iterations >= max_iters {
                return LpStatus::IterLimit;
            }
            let entering = if self.bland {
                (0..self.width - 1).find(|&j| allowed[j] && obj[j] < -OPT_TOL)
            } else {
                (0..self.width - 1)
                    .filter(|&j| allowed[j] && obj[j] < -OPT_TOL)
                    .min_by(|&a, &b| obj[a].partial_cmp(&obj[b]).unwrap().then(a.cmp(&b)))
            };
            let Some(c) = entering else { return LpStatus::Optimal };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[r]) {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else { return LpStatus::Unbounded };
            if ratio <= 1e-12 {
                self.streak += 1;
                if self.streak >= DEGENERATE_STREAK {
                    self.bland = true;
                }
            } else {
                self.streak = 0;
            }
            self.pivot(obj, r, c);
        }
    }
}

/// Solves `lp` with at most `max_iters` pivots over both phases.
pub fn solve(lp: &LpProblem, max_iters: usize) -> SimplexResult {
    let n = lp.n_vars;
    let m = lp.rows.len();
    // normalize to nonnegative right-hand sides
    let rows: Vec<(Vec<(usize, f64)>, RowKind, f64)> = lp
        .rows
        .iter()
        .map(|r| {
            if r.rhs < 0.0 {
                let kind = match r.kind {
                    RowKind::Le => RowKind::Ge,
                    RowKind::Ge => RowKind::Le,
                    RowKind::Eq => RowKind::Eq,
                };
                (r.coefs.iter().map(|&(j, c)| (j, -c)).collect(), kind, -r.rhs)
            } else {
                (r.coefs.clone(), r.kind, r.rhs)
            }
        })
        .collect();
    let n_slack = rows.iter().filter(|r| r.1 != RowKind::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != RowKind::Le).count();
    let total = n + n_slack + n_art;
    let width = total + 1;
    let mut t = Tableau { m, width, data: vec![0.0; m * width], basis: vec![0; m], iterations: 0, bland: false, streak: 0 };
    let (mut si, mut ai) = (n, n + n_slack);
    let mut is_art = vec![false; total];
    for (i, (coefs, kind, rhs)) in rows.iter().enumerate() {
        for &(j, c) in coefs {
            t.data[i * width + j] += c;
        }
        t.data[i * width + total] = *rhs;
        match kind {
            RowKind::Le => {
                t.data[i * width + si] = 1.0;
                t.basis[i] = si;
                si += 1;
            }
            RowKind::Ge => {
                t.data[i * width + si] = -1.0;
                si += 1;
                t.data[i * width + ai] = 1.0;
                is_art[ai] = true;
                t.basis[i] = ai;
                ai += 1;
            }
            RowKind::Eq => {
                t.data[i * width + ai] = 1.0;
                is_art[ai] = true;
                t.basis[i] = ai;
                ai += 1;
            }
        }
    }

    let finish = |t: &Tableau, status: LpStatus| {
        let mut x = vec![0.0; n];
        for i in 0..t.m {
            if t.basis[i] < n {
                x[t.basis[i]] = t.rhs(i);
            }
        }
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        SimplexResult { status, x, value, iterations: t.iterations, bland: t.bland }
    };

    let all = vec![true; total];
    if n_art > 0 {
        // phase 1: maximize -sum(artificials)
        let mut obj = vec![0.0; width];
        for j in 0..total {
            if is_art[j] {
                obj[j] = 1.0;
            }
        }
        for i in 0..m {
            if is_art[t.basis[i]] {
                for j in 0..width {
                    obj[j] -= t.at(i, j);
                }
            }
        }
        match t.optimize(&mut obj, &all, max_iters) {
            LpStatus::IterLimit => return finish(&t, LpStatus::IterLimit),
            LpStatus::Unbounded => unreachable!("phase one is bounded"),
            _ => {}
        }
        if -obj[total] > FEAS_TOL {
            return finish(&t, LpStatus::Infeasible);
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if is_art[t.basis[i]] {
                if let Some(c) = (0..total).find(|&j| !is_art[j] && t.at(i, j).abs() > PIVOT_TOL) {
                    let mut dummy = vec![0.0; width];
                    t.pivot(&mut dummy, i, c);
                }
            }
        }
    }
    let allowed: Vec<bool> = (0..total).map(|j| !is_art[j]).collect();
    let mut obj = vec![0.0; width];
    for (j, &c) in lp.objective.iter().enumerate() {
        obj[j] = -c;
    }
    for i in 0..m {
        let b = t.basis[i];
        let f = obj[b];
        if f != 0.0 {
            for j in 0..width {
                obj[j] -= f * t.at(i, j);
            }
        }
    }
    let status = t.optimize(&mut obj, &allowed, max_iters);
    finish(&t, status)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_bound() {
        let mut lp = LpProblem::new(1);
        lp.objective[0] = 1.0;
        lp.add_row(vec![(0, 1.0)], RowKind::Le, 1.0);
        let r = solve(&lp, 100);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LpProblem::new(2);
        lp.objective = vec![3.0, 5.0];
        lp.add_row(vec![(0, 1.0)], RowKind::Le, 4.0);
        lp.add_row(vec![(1, 2.0)], RowKind::Le, 12.0);
        lp.add_row(vec![(0, 3.0), (1, 2.0)], RowKind::Le, 18.0);
        let r = solve(&lp, 100);
        assert!((r.value - 36.0).abs() < 1e-9);
        assert!((r.x[0] - 2.0).abs() < 1e-9 && (r.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn phases_and_statuses() {
        // max x + y, x + y = 1, x >= 0.25 -> 1
        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], RowKind::Eq, 1.0);
        lp.add_row(vec![(0, 1.0)], RowKind::Ge, 0.25);
        let r = solve(&lp, 100);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!(r.x[0] >= 0.25 - 1e-12 && lp.max_violation(&r.x) < 1e-9);

        let mut lp = LpProblem::new(1);
        lp.add_row(vec![(0, 1.0)], RowKind::Ge, 2.0);
        lp.add_row(vec![(0, 1.0)], RowKind::Le, 1.0);
        assert_eq!(solve(&lp, 100).status, LpStatus::Infeasible);

        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.add_row(vec![(0, 1.0), (1, -1.0)], RowKind::Le, 1.0);
        assert_eq!(solve(&lp, 100).status, LpStatus::Unbounded);

        let mut lp = LpProblem::new(1);
        lp.objective = vec![-1.0];
        lp.add_row(vec![(0, -1.0)], RowKind::Le, -3.0);
        let r = solve(&lp, 100);
        assert!((r.value + 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under the textbook rule without anti-cycling
        let mut lp = LpProblem::new(4);
        lp.objective = vec![0.75, -150.0, 0.02, -6.0];
        lp.add_row(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], RowKind::Le, 0.0);
        lp.add_row(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], RowKind::Le, 0.0);
        lp.add_row(vec![(2, 1.0)], RowKind::Le, 1.0);
        let r = solve(&lp, 10_000);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value - 0.05).abs() < 1e-9);
    }

    #[test]
    fn lp_text() {
        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, -2.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], RowKind::Eq, 1.0);
        let s = lp.to_lp_text();
        assert!(s.contains("obj: + 1 x0 - 2 x1"));
        assert!(s.contains("c0: + 1 x0 + 1 x1 = 1"));
    }
}
