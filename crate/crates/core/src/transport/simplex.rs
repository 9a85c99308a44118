//! Transportation simplex on a dense cost matrix.
//!
//! The basis is a spanning tree of the bipartite row/column graph built by the
//! northwest-corner rule. Entering cells follow Dantzig's rule (most negative
//! reduced cost, first in row-major order on ties) and the leaving cell is the
//! first minimal cell in row-major order. After a run of degenerate pivots the
//! solver switches to Bland's rule for good.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::ops::{Add, Sub};

use num_traits::{Signed, Zero};

use crate::Q;

const DEGENERATE_RUN: usize = 50;

/// Ordered field the solver runs over. Exact for rationals, toleranced for floats.
pub trait Scalar: Clone + PartialOrd + Debug + Zero + Add<Output = Self> + Sub<Output = Self> {
    fn mul(&self, other: &Self) -> Self;
    /// Slack below which a value counts as zero, given the magnitude of the data.
    fn tolerance(scale: &Self) -> Self;
    fn abs(&self) -> Self;
}

impl Scalar for Q {
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn tolerance(_: &Self) -> Self {
        Q::zero()
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

impl Scalar for f64 {
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn tolerance(scale: &Self) -> Self {
        1e-12 * scale.max(1.0)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

#[derive(Clone, Debug)]
pub struct Solved<S> {
    /// Basic cells carrying positive mass, row-major.
    pub flows: Vec<(usize, usize, S)>,
    pub u: Vec<S>,
    pub v: Vec<S>,
    pub cost: S,
    pub pivots: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Row(usize),
    Col(usize),
}

struct Tableau<'a, S> {
    m: usize,
    n: usize,
    cost: &'a [Vec<S>],
    x: Vec<Option<S>>,
}

impl<S: Scalar> Tableau<'_, S> {
    fn basic(&self, i: usize, j: usize) -> Option<&S> {
        self.x[i * self.n + j].as_ref()
    }

    fn adjacency(&self) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let mut rows = vec![Vec::new(); self.m];
        let mut cols = vec![Vec::new(); self.n];
        for i in 0..self.m {
            for j in 0..self.n {
                if self.basic(i, j).is_some() {
                    rows[i].push(j);
                    cols[j].push(i);
                }
            }
        }
        (rows, cols)
    }

    fn potentials(&self, rows: &[Vec<usize>], cols: &[Vec<usize>]) -> (Vec<S>, Vec<S>) {
        let mut u: Vec<Option<S>> = vec![None; self.m];
        let mut v: Vec<Option<S>> = vec![None; self.n];
        u[0] = Some(S::zero());
        let mut queue = VecDeque::from([Node::Row(0)]);
        while let Some(node) = queue.pop_front() {
            match node {
                Node::Row(i) => {
                    let ui = u[i].clone().unwrap();
                    for &j in &rows[i] {
                        if v[j].is_none() {
                            v[j] = Some(self.cost[i][j].clone() - ui.clone());
                            queue.push_back(Node::Col(j));
                        }
                    }
                }
                Node::Col(j) => {
                    let vj = v[j].clone().unwrap();
                    for &i in &cols[j] {
                        if u[i].is_none() {
                            u[i] = Some(self.cost[i][j].clone() - vj.clone());
                            queue.push_back(Node::Row(i));
                        }
                    }
                }
            }
        }
        (
            u.into_iter().map(|x| x.expect("basis spans every row")).collect(),
            v.into_iter().map(|x| x.expect("basis spans every column")).collect(),
        )
    }

    /// Tree path from row `i` to column `j`, as cells in order of traversal.
    fn path(&self, rows: &[Vec<usize>], cols: &[Vec<usize>], i: usize, j: usize) -> Vec<(usize, usize)> {
        let mut parent_row: Vec<Option<usize>> = vec![None; self.m];
        let mut parent_col: Vec<Option<usize>> = vec![None; self.n];
        let mut seen_row = vec![false; self.m];
        seen_row[i] = true;
        let mut queue = VecDeque::from([Node::Row(i)]);
        'search: while let Some(node) = queue.pop_front() {
            match node {
                Node::Row(r) => {
                    for &c in &rows[r] {
                        if parent_col[c].is_none() {
                            parent_col[c] = Some(r);
                            if c == j {
                                break 'search;
                            }
                            queue.push_back(Node::Col(c));
                        }
                    }
                }
                Node::Col(c) => {
                    for &r in &cols[c] {
                        if !seen_row[r] {
                            seen_row[r] = true;
                            parent_row[r] = Some(c);
                            queue.push_back(Node::Row(r));
                        }
                    }
                }
            }
        }
        let mut cells = Vec::new();
        let mut c = j;
        loop {
            let r = parent_col[c].expect("basis tree connects row and column");
            cells.push((r, c));
            if r == i {
                break;
            }
            c = parent_row[r].unwrap();
            cells.push((r, c));
        }
        cells.reverse();
        cells
    }
}

/// Minimises `Σ c_ij x_ij` over couplings of `supply` and `demand` (equal totals).
pub fn solve<S: Scalar>(supply: &[S], demand: &[S], cost: &[Vec<S>]) -> Solved<S> {
    let (m, n) = (supply.len(), demand.len());
    assert!(m > 0 && n > 0, "empty marginal");
    assert!(cost.len() == m && cost.iter().all(|r| r.len() == n), "cost shape");
    let scale = cost
        .iter()
        .flatten()
        .map(Scalar::abs)
        .fold(S::zero(), |a, b| if b > a { b } else { a });
    let tol = S::tolerance(&scale);
    let neg_tol = S::zero() - tol.clone();

    let mut t = Tableau {
        m,
        n,
        cost,
        x: vec![None; m * n],
    };
    let (mut s, mut d) = (supply.to_vec(), demand.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let q = if s[i] <= d[j] { s[i].clone() } else { d[j].clone() };
        s[i] = s[i].clone() - q.clone();
        d[j] = d[j].clone() - q.clone();
        t.x[i * n + j] = Some(q);
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || s[i] <= tol {
            i += 1;
        } else {
            j += 1;
        }
    }

    let mut pivots = 0;
    let mut degenerate = 0;
    let mut bland = false;
    loop {
        let (rows, cols) = t.adjacency();
        let (u, v) = t.potentials(&rows, &cols);
        let mut entering: Option<((usize, usize), S)> = None;
        'scan: for r in 0..m {
            for c in 0..n {
                if t.basic(r, c).is_some() {
                    continue;
                }
                let red = cost[r][c].clone() - u[r].clone() - v[c].clone();
                if red < neg_tol {
                    if bland {
                        entering = Some(((r, c), red));
                        break 'scan;
                    }
                    if entering.as_ref().map_or(true, |(_, best)| red < *best) {
                        entering = Some(((r, c), red));
                    }
                }
            }
        }
        let Some(((ei, ej), _)) = entering else {
            let mut flows = Vec::new();
            let mut total = S::zero();
            for r in 0..m {
                for c in 0..n {
                    if let Some(x) = t.basic(r, c) {
                        if *x > tol {
                            total = total + x.mul(&cost[r][c]);
                            flows.push((r, c, x.clone()));
                        }
                    }
                }
            }
            return Solved {
                flows,
                u,
                v,
                cost: total,
                pivots,
            };
        };
        let path = t.path(&rows, &cols, ei, ej);
        let mut leaving: Option<((usize, usize), S)> = None;
        for &(r, c) in path.iter().step_by(2) {
            let x = t.basic(r, c).unwrap().clone();
            let better = match &leaving {
                None => true,
                Some(((lr, lc), lx)) => x < *lx || (x == *lx && (r, c) < (*lr, *lc)),
            };
            if better {
                leaving = Some(((r, c), x));
            }
        }
        let ((li, lj), theta) = leaving.expect("cycle has a decreasing cell");
        for (k, &(r, c)) in path.iter().enumerate() {
            let cell = t.x[r * n + c].take().unwrap();
            t.x[r * n + c] = Some(if k % 2 == 0 {
                cell - theta.clone()
            } else {
                cell + theta.clone()
            });
        }
        t.x[ei * n + ej] = Some(theta.clone());
        t.x[li * n + lj] = None;
        pivots += 1;
        if theta <= tol {
            degenerate += 1;
            if degenerate >= DEGENERATE_RUN {
                bland = true;
            }
        } else {
            degenerate = 0;
        }
    }
}
