//! Exact 1-Wasserstein distance between finitely supported measures.
//!
//! [`w1`] solves the transportation problem between the two supports and returns
//! the optimal plan together with a potential `f` that is 1-Lipschitz for the
//! ground metric and satisfies `∫f dμ − ∫f dν = W₁(μ, ν)`. The potential is the
//! c-transform `f(p) = min_j (d(p, y_j) − v_j)` of the optimal column duals, which
//! is 1-Lipschitz everywhere, not only on the supports.

mod circle;
pub mod simplex;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

pub use circle::w1_circle;
use simplex::{solve, Scalar};

use crate::measures::DiscreteMeasure;
use crate::rational::{dist_to_q, q_to_f64};
use crate::spaces::{MetricSpace, Point, SystemSpec};
use crate::{Dist, Error, Result, Q};

/// A ground metric on points.
pub trait Ground {
    fn ground(&self, x: &Point, y: &Point) -> Result<Dist>;
}

impl Ground for MetricSpace {
    fn ground(&self, x: &Point, y: &Point) -> Result<Dist> {
        self.dist_points(x, y)
    }
}

impl Ground for SystemSpec {
    fn ground(&self, x: &Point, y: &Point) -> Result<Dist> {
        self.distance(x, y)
    }
}

/// The Bowen metric `d_n` of a system.
pub struct Bowen<'a> {
    pub spec: &'a SystemSpec,
    pub n: usize,
}

impl Ground for Bowen<'_> {
    fn ground(&self, x: &Point, y: &Point) -> Result<Dist> {
        self.spec.bowen_distance(x, y, self.n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan<S> {
    /// `(source, target, mass)` sorted by source then target.
    pub entries: Vec<(Point, Point, S)>,
    pub cost: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate<S> {
    /// Potential on the union of the two supports.
    pub potential: BTreeMap<Point, S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct W1Solution<S> {
    pub cost: S,
    pub plan: TransportPlan<S>,
    pub certificate: DualCertificate<S>,
}

trait FromParts: Scalar {
    fn from_q(q: &Q) -> Self;
    fn from_dist(d: Dist) -> Self;
}

impl FromParts for Q {
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn from_dist(d: Dist) -> Self {
        dist_to_q(d)
    }
}

impl FromParts for f64 {
    fn from_q(q: &Q) -> Self {
        q_to_f64(q)
    }
    fn from_dist(d: Dist) -> Self {
        *d.numer() as f64 / *d.denom() as f64
    }
}

fn solve_generic<S: FromParts, G: Ground + ?Sized>(
    ground: &G,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<W1Solution<S>> {
    let xs: Vec<&Point> = mu.support().collect();
    let ys: Vec<&Point> = nu.support().collect();
    let union: BTreeSet<&Point> = xs.iter().chain(&ys).copied().collect();
    // Validate every support point against the ground metric before any shortcut.
    for p in &union {
        ground.ground(p, p)?;
    }
    let zero = S::zero();
    if mu == nu {
        let entries = mu.atoms().iter().map(|(p, w)| (p.clone(), p.clone(), S::from_q(w))).collect();
        return Ok(W1Solution {
            cost: zero.clone(),
            plan: TransportPlan {
                entries,
                cost: zero.clone(),
            },
            certificate: DualCertificate {
                potential: union.into_iter().map(|p| (p.clone(), zero.clone())).collect(),
            },
        });
    }
    if xs.len() == 1 || ys.len() == 1 {
        // One side is a Dirac mass: the only coupling sends everything to or from it.
        let (hub, from_hub) = if xs.len() == 1 { (xs[0], true) } else { (ys[0], false) };
        let other = if from_hub { nu } else { mu };
        let mut entries = Vec::new();
        let mut cost = zero.clone();
        for (p, w) in other.atoms() {
            let w = S::from_q(w);
            cost = cost + w.mul(&S::from_dist(ground.ground(hub, p)?));
            entries.push(if from_hub {
                (hub.clone(), p.clone(), w)
            } else {
                (p.clone(), hub.clone(), w)
            });
        }
        let mut potential = BTreeMap::new();
        for p in union {
            let d = S::from_dist(ground.ground(p, hub)?);
            potential.insert(p.clone(), if from_hub { zero.clone() - d } else { d });
        }
        return Ok(W1Solution {
            cost: cost.clone(),
            plan: TransportPlan { entries, cost },
            certificate: DualCertificate { potential },
        });
    }
    let cost: Vec<Vec<S>> = xs
        .iter()
        .map(|x| ys.iter().map(|y| Ok(S::from_dist(ground.ground(x, y)?))).collect())
        .collect::<Result<_>>()?;
    let supply: Vec<S> = mu.atoms().values().map(S::from_q).collect();
    let demand: Vec<S> = nu.atoms().values().map(S::from_q).collect();
    let solved = solve(&supply, &demand, &cost);
    let entries = solved
        .flows
        .iter()
        .map(|(i, j, x)| (xs[*i].clone(), ys[*j].clone(), x.clone()))
        .collect();
    let mut potential = BTreeMap::new();
    for p in union {
        let mut best: Option<S> = None;
        for (j, y) in ys.iter().enumerate() {
            let val = S::from_dist(ground.ground(p, y)?) - solved.v[j].clone();
            if best.as_ref().map_or(true, |b| val < *b) {
                best = Some(val);
            }
        }
        potential.insert(p.clone(), best.unwrap());
    }
    Ok(W1Solution {
        cost: solved.cost.clone(),
        plan: TransportPlan {
            entries,
            cost: solved.cost,
        },
        certificate: DualCertificate { potential },
    })
}

/// Exact W₁ with optimal plan and dual certificate.
pub fn w1<G: Ground + ?Sized>(ground: &G, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<W1Solution<Q>> {
    solve_generic(ground, mu, nu)
}

/// W₁ in floating point, for grids too large for exact pivoting.
pub fn w1_float<G: Ground + ?Sized>(ground: &G, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<W1Solution<f64>> {
    solve_generic(ground, mu, nu)
}

pub fn w1_cost<G: Ground + ?Sized>(ground: &G, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Q> {
    Ok(w1(ground, mu, nu)?.cost)
}

/// Result of checking a solution against both marginals and the ground metric.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateCheck {
    pub marginals_ok: bool,
    pub plan_cost_ok: bool,
    pub lipschitz_ok: bool,
    /// `cost − (∫f dμ − ∫f dν)`.
    pub gap: Q,
}

impl CertificateCheck {
    pub fn is_exact(&self) -> bool {
        self.marginals_ok && self.plan_cost_ok && self.lipschitz_ok && self.gap.is_zero()
    }
}

pub fn check_solution<G: Ground + ?Sized>(
    ground: &G,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    sol: &W1Solution<Q>,
) -> Result<CertificateCheck> {
    let mut rows: BTreeMap<&Point, Q> = BTreeMap::new();
    let mut cols: BTreeMap<&Point, Q> = BTreeMap::new();
    let mut plan_cost = Q::zero();
    let mut nonneg = true;
    for (x, y, m) in &sol.plan.entries {
        nonneg &= *m >= Q::zero();
        *rows.entry(x).or_insert_with(Q::zero) += m;
        *cols.entry(y).or_insert_with(Q::zero) += m;
        plan_cost += m * dist_to_q(ground.ground(x, y)?);
    }
    let marginal = |sums: &BTreeMap<&Point, Q>, target: &DiscreteMeasure| {
        sums.len() <= target.len()
            && target.atoms().iter().all(|(p, w)| sums.get(p).is_some_and(|s| s == w))
    };
    let marginals_ok = nonneg && marginal(&rows, mu) && marginal(&cols, nu);
    let f = &sol.certificate.potential;
    let pts: Vec<&Point> = f.keys().collect();
    let mut lipschitz_ok = mu.support().chain(nu.support()).all(|p| f.contains_key(p));
    for (a, p) in pts.iter().enumerate() {
        for q in &pts[a + 1..] {
            let d = dist_to_q(ground.ground(p, q)?);
            lipschitz_ok &= num_traits::Signed::abs(&(&f[*p] - &f[*q])) <= d;
        }
    }
    let integral = |m: &DiscreteMeasure| -> Q { m.atoms().iter().map(|(p, w)| w * f.get(p).cloned().unwrap_or_default()).sum() };
    let gap = &sol.cost - (integral(mu) - integral(nu));
    Ok(CertificateCheck {
        marginals_ok,
        plan_cost_ok: plan_cost == sol.cost,
        lipschitz_ok,
        gap,
    })
}

/// Lower bound `μ(S∖S′) · d(S∖S′, S′)` for `μ` carried by `S` and `ν` by `S′`.
pub fn support_bound<G: Ground + ?Sized>(
    ground: &G,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    s: &BTreeSet<Point>,
    s_prime: &BTreeSet<Point>,
) -> Result<Q> {
    if let Some(p) = mu.support().find(|p| !s.contains(*p)) {
        return Err(Error::SupportViolation(format!("μ charges {p} outside S")));
    }
    if let Some(p) = nu.support().find(|p| !s_prime.contains(*p)) {
        return Err(Error::SupportViolation(format!("ν charges {p} outside S′")));
    }
    let diff: Vec<&Point> = s.iter().filter(|p| !s_prime.contains(*p)).collect();
    let mass = mu.mass_where(|p| diff.contains(&p));
    if diff.is_empty() || mass.is_zero() {
        return Ok(Q::zero());
    }
    let mut sep: Option<Dist> = None;
    for x in &diff {
        for y in s_prime {
            let d = ground.ground(x, y)?;
            sep = Some(sep.map_or(d, |v| v.min(d)));
        }
    }
    Ok(mass * dist_to_q(sep.unwrap_or_default()))
}

fn require_orbit(mu: &DiscreteMeasure, nu: &DiscreteMeasure, required: usize, what: &str) -> Result<()> {
    for p in mu.support().chain(nu.support()) {
        if let Point::Word(w) = p {
            if w.len() < required {
                return Err(Error::DepthExhausted {
                    what: what.to_string(),
                    required,
                    available: w.len(),
                });
            }
        }
    }
    Ok(())
}

/// The terms `W(T_*^{km}μ, T_*^{km}ν)` for `0 ≤ k < n`.
pub fn wnm_terms(spec: &SystemSpec, mu: &DiscreteMeasure, nu: &DiscreteMeasure, n: usize, m: usize) -> Result<Vec<Q>> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("W_n^m needs n, m >= 1".into()));
    }
    require_orbit(mu, nu, (n - 1) * m + 1, &format!("W_{n}^{m}"))?;
    let (mut a, mut b) = (mu.clone(), nu.clone());
    let mut terms = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            a = a.pushforward_n(spec, m)?;
            b = b.pushforward_n(spec, m)?;
        }
        terms.push(w1_cost(spec, &a, &b)?);
    }
    Ok(terms)
}

/// `W_n^m(μ, ν) = max_{0 ≤ k < n} W(T_*^{km}μ, T_*^{km}ν)`.
pub fn wnm(spec: &SystemSpec, mu: &DiscreteMeasure, nu: &DiscreteMeasure, n: usize, m: usize) -> Result<Q> {
    Ok(wnm_terms(spec, mu, nu, n, m)?.into_iter().max().unwrap())
}

/// W₁ for the Bowen metric `d_n`.
pub fn w_bowen(spec: &SystemSpec, mu: &DiscreteMeasure, nu: &DiscreteMeasure, n: usize) -> Result<Q> {
    if n == 0 {
        return Err(Error::InvalidParameter("W_{d_n} needs n >= 1".into()));
    }
    require_orbit(mu, nu, n, &format!("W_d{n}"))?;
    w1_cost(&Bowen { spec, n }, mu, nu)
}
