//! Separated and spanning counts, entropy at a fixed scale, measure grids,
//! the explicit `H_n` family, the covering bound for measure spaces and power-law fits.
//!
//! Separation is strict: `E` is ε-separated when `d(x, y) > ε` for distinct `x, y ∈ E`.
//! Covering balls are closed: `y` is covered by `x` when `d(x, y) ≤ ε`.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cube::SampledCover;
use crate::independence::{block_summary, pick_anchors, BlockSummary, IndependenceWindow};
use crate::measures::{h_family, multi_index_unrank, xi, AnchorFamily, CubePoint, DiscreteMeasure, SimplexPoint};
use crate::rational::{dist_to_q, fmt_q, pow2_neg, q_frac, q_int, q_pow, q_to_dist};
use crate::spaces::{first_difference, gamma_closed_form, IePair, MetricSpace, Point, SystemKind, SystemSpec};
use crate::transport::{w1_cost, w_bowen, wnm};
use crate::{Dist, Error, Result, Q};

/// Largest family handled by the exact maximum independent set search.
pub const MAX_EXACT: usize = 64;
/// Largest point family for quadratic greedy counting.
pub const MAX_GREEDY: usize = 1 << 15;
/// Largest measure grid materialized.
pub const MAX_GRID: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    Greedy,
    Exact,
}

/// Threshold comparison that stays in `Rational64` when `ε` fits.
#[derive(Clone, Debug)]
pub struct Threshold {
    q: Q,
    d: Option<Dist>,
}

impl Threshold {
    pub fn new(eps: &Q) -> Self {
        Threshold {
            q: eps.clone(),
            d: q_to_dist(eps).ok(),
        }
    }

    pub fn value(&self) -> &Q {
        &self.q
    }

    pub fn exceeded_by(&self, d: &Dist) -> bool {
        match &self.d {
            Some(e) => d > e,
            None => dist_to_q(*d) > self.q,
        }
    }
}

/// Indices of a maximal separated subfamily, scanning in order.
pub fn greedy_separated(len: usize, mut separated: impl FnMut(usize, usize) -> Result<bool>) -> Result<Vec<usize>> {
    if len > MAX_GREEDY {
        return Err(Error::Refused(format!("greedy separation over {len} points")));
    }
    let mut chosen: Vec<usize> = Vec::new();
    'next: for i in 0..len {
        for &j in &chosen {
            if !separated(j, i)? {
                continue 'next;
            }
        }
        chosen.push(i);
    }
    Ok(chosen)
}

/// Conflict graph `i ~ j ⇔ not separated`, as adjacency bitmasks.
pub fn conflict_graph(len: usize, mut separated: impl FnMut(usize, usize) -> Result<bool>) -> Result<Vec<u64>> {
    if len > MAX_EXACT {
        return Err(Error::Refused(format!(
            "exact separated count over {len} points (limit {MAX_EXACT})"
        )));
    }
    let mut adj = vec![0u64; len];
    for i in 0..len {
        for j in i + 1..len {
            if !separated(i, j)? {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    Ok(adj)
}

/// Maximum independent set size by branch and bound.
pub fn maximum_independent_set(adj: &[u64]) -> usize {
    fn go(cand: u64, adj: &[u64], size: usize, best: &mut usize) {
        if cand == 0 {
            *best = (*best).max(size);
            return;
        }
        if size + cand.count_ones() as usize <= *best {
            return;
        }
        let mut min_v = 0;
        let mut min_deg = u32::MAX;
        let mut max_v = 0;
        let mut max_deg = 0;
        let mut rest = cand;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let deg = (adj[v] & cand).count_ones();
            if deg < min_deg {
                (min_v, min_deg) = (v, deg);
            }
            if deg >= max_deg {
                (max_v, max_deg) = (v, deg);
            }
        }
        if min_deg <= 1 {
            // Some maximum set contains a vertex of degree at most one.
            go(cand & !(adj[min_v] | 1 << min_v), adj, size + 1, best);
            return;
        }
        go(cand & !(adj[max_v] | 1 << max_v), adj, size + 1, best);
        go(cand & !(1 << max_v), adj, size, best);
    }
    let all = if adj.len() == 64 { u64::MAX } else { (1u64 << adj.len()) - 1 };
    let mut best = 0;
    go(all, adj, 0, &mut best);
    best
}

pub fn separated_count(len: usize, separated: impl FnMut(usize, usize) -> Result<bool>, mode: CountMode) -> Result<usize> {
    match mode {
        CountMode::Greedy => Ok(greedy_separated(len, separated)?.len()),
        CountMode::Exact => Ok(maximum_independent_set(&conflict_graph(len, separated)?)),
    }
}

/// Separated count of a finite metric space at scale ε.
pub fn space_separated_count(space: &MetricSpace, eps: &Q, mode: CountMode) -> Result<usize> {
    let t = Threshold::new(eps);
    separated_count(space.len(), |i, j| Ok(t.exceeded_by(&space.dist(i, j))), mode)
}

/// Greedy set cover by closed ε-balls centred at family points: an upper bound on the
/// covering number, at most `(1 + ln N)` times the minimum.
pub fn spanning_count(len: usize, mut within: impl FnMut(usize, usize) -> Result<bool>) -> Result<usize> {
    if len > MAX_GREEDY {
        return Err(Error::Refused(format!("spanning count over {len} points")));
    }
    let balls: Vec<Vec<usize>> = (0..len)
        .map(|i| (0..len).filter_map(|j| match within(i, j) {
            Ok(true) => Some(Ok(j)),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        }).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut uncovered = vec![true; len];
    let mut left = len;
    let mut count = 0;
    while left > 0 {
        let (best, _) = balls
            .iter()
            .enumerate()
            .map(|(i, b)| (i, b.iter().filter(|&&j| uncovered[j]).count()))
            .max_by_key(|&(i, c)| (c, std::cmp::Reverse(i)))
            .expect("nonempty family");
        for &j in &balls[best] {
            if uncovered[j] {
                uncovered[j] = false;
                left -= 1;
            }
        }
        count += 1;
    }
    Ok(count)
}

pub fn space_spanning_count(space: &MetricSpace, eps: &Q) -> Result<usize> {
    let t = Threshold::new(eps);
    spanning_count(space.len(), |i, j| Ok(!t.exceeded_by(&space.dist(i, j))))
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationCount {
    pub n: usize,
    pub points: usize,
    pub greedy: usize,
    pub exact: Option<usize>,
}

impl SeparationCount {
    pub fn best(&self) -> usize {
        self.exact.unwrap_or(self.greedy)
    }
}

/// `s_k(T^p) ≤ s_{kp}(T)` at the level of computed counts. `embedded` records that the
/// set found for `T^p` is itself `(kp, ε)`-separated for `T`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Subadditivity {
    pub k: usize,
    pub p: usize,
    pub lhs: usize,
    pub rhs: usize,
    pub embedded: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    pub metric: String,
    #[serde(serialize_with = "ser_q")]
    pub eps: Q,
    pub counts: Vec<SeparationCount>,
    pub slope: f64,
    pub monotone_in_n: bool,
    pub subadditivity: Vec<Subadditivity>,
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(q))
}

/// Depth beyond which symbols cannot separate at scale ε under `d_n` on a shift.
fn shift_resolution(eps: &Q) -> usize {
    let mut r = 0usize;
    while q_pow(&q_int(2), r as u32).recip() > *eps {
        r += 1;
    }
    r
}

/// Represented points relevant to `d_n` at scale ε: words truncated to `n − 1 + r`
/// symbols where `2^{-r} ≤ ε` (deeper symbols never separate), the full grid on the circle.
fn bowen_family(spec: &SystemSpec, eps: &Q, horizon: usize) -> Result<SystemSpec> {
    match spec.depth() {
        Some(depth) => {
            spec.require_depth(horizon, "entropy estimate")?;
            spec.with_depth(depth.min((horizon - 1 + shift_resolution(eps)).max(horizon)))
        }
        None => Ok(spec.clone()),
    }
}

/// Exponent `e` with `max_{i<k} d(T^{ip}x, T^{ip}y) = 2^{-e}` on words; `None` when they agree.
fn power_word_exponent(a: &[u8], b: &[u8], k: usize, p: usize) -> Option<usize> {
    (0..k)
        .map(|i| i * p)
        .take_while(|&s| s < a.len())
        .filter_map(|s| first_difference(&a[s..], &b[s..]))
        .min()
}

/// `max_{i<k} d(T^{ip}x, T^{ip}y)`: the Bowen metric of `T^p`.
fn power_bowen(spec: &SystemSpec, x: &Point, y: &Point, k: usize, p: usize) -> Result<Dist> {
    let (mut a, mut b) = (x.clone(), y.clone());
    let mut best = spec.distance(&a, &b)?;
    for _ in 1..k {
        match (&a, &b) {
            (Point::Word(u), _) if u.len() <= p => break,
            _ => {}
        }
        a = spec.iterate(&a, p)?;
        b = spec.iterate(&b, p)?;
        best = best.max(spec.distance(&a, &b)?);
    }
    Ok(best)
}

/// `s_n(d, T, X, ε)` over represented points for each `n`, with a least-squares slope
/// of `log s_n` against `n`. The slope is a finite-n estimate, not a limit.
pub fn entropy_estimate(spec: &SystemSpec, eps: &Q, ns: &[usize]) -> Result<SeparationReport> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::InvalidParameter("n range must be nonempty and start at 1 or later".into()));
    }
    if *eps <= Q::zero() {
        return Err(Error::InvalidParameter("ε must be positive".into()));
    }
    let t = Threshold::new(eps);
    let mut counts = Vec::new();
    for &n in ns {
        let fam = bowen_family(spec, eps, n)?;
        let points = fam.points()?;
        // On words d_n depends only on the first difference, so precompute the verdicts.
        let by_difference: Option<Vec<bool>> = fam
            .depth()
            .map(|depth| (0..depth).map(|j| t.exceeded_by(&pow2_neg((j - j.min(n - 1)) as u32))).collect());
        let sep = |i: usize, j: usize| -> Result<bool> {
            match (&by_difference, &points[i], &points[j]) {
                (Some(table), Point::Word(a), Point::Word(b)) => Ok(first_difference(a, b).is_some_and(|d| table[d])),
                _ => Ok(t.exceeded_by(&fam.bowen_distance(&points[i], &points[j], n)?)),
            }
        };
        let greedy = separated_count(points.len(), sep, CountMode::Greedy)?;
        let exact = if points.len() <= MAX_EXACT {
            Some(separated_count(points.len(), sep, CountMode::Exact)?)
        } else {
            None
        };
        counts.push(SeparationCount {
            n,
            points: points.len(),
            greedy,
            exact,
        });
    }
    let xs: Vec<f64> = counts.iter().map(|c| c.n as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.best() as f64).ln()).collect();
    let slope = least_squares(&xs, &ys).map_or(0.0, |(_, b)| b);
    let mut sorted = counts.clone();
    sorted.sort_by_key(|c| c.n);
    let monotone_in_n = sorted.windows(2).all(|w| w[0].best() <= w[1].best());

    let mut subadditivity = Vec::new();
    let max_n = *ns.iter().max().unwrap();
    for p in [2usize, 3] {
        for k in 1..=max_n / p {
            let n = k * p;
            if !ns.contains(&n) {
                continue;
            }
            let fam = bowen_family(spec, eps, n)?;
            let points = fam.points()?;
            let by_exponent: Option<Vec<bool>> =
                fam.depth().map(|depth| (0..depth).map(|e| t.exceeded_by(&pow2_neg(e as u32))).collect());
            let chosen = greedy_separated(points.len(), |i, j| match (&by_exponent, &points[i], &points[j]) {
                (Some(table), Point::Word(a), Point::Word(b)) => {
                    Ok(power_word_exponent(a, b, k, p).is_some_and(|e| table[e]))
                }
                _ => Ok(t.exceeded_by(&power_bowen(&fam, &points[i], &points[j], k, p)?)),
            })?;
            let mut embedded = true;
            'pairs: for (a, &i) in chosen.iter().enumerate() {
                for &j in &chosen[a + 1..] {
                    if !t.exceeded_by(&fam.bowen_distance(&points[i], &points[j], n)?) {
                        embedded = false;
                        break 'pairs;
                    }
                }
            }
            let rhs = counts.iter().find(|c| c.n == n).unwrap().best();
            subadditivity.push(Subadditivity {
                k,
                p,
                lhs: chosen.len(),
                rhs,
                embedded,
                holds: embedded && chosen.len() <= rhs,
            });
        }
    }
    Ok(SeparationReport {
        metric: "bowen".into(),
        eps: eps.clone(),
        counts,
        slope,
        monotone_in_n,
        subadditivity,
    })
}

/// All measures with weights in `(1/g)ℤ` on a finite support.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureGrid {
    pub g: usize,
    pub support: Vec<Point>,
    /// Cylinder length when the support consists of cylinder representatives.
    pub level: Option<usize>,
}

impl MeasureGrid {
    pub fn on_points(support: Vec<Point>, g: usize) -> Result<Self> {
        if g == 0 || support.is_empty() {
            return Err(Error::InvalidParameter("measure grid needs g >= 1 and a nonempty support".into()));
        }
        Ok(MeasureGrid { g, support, level: None })
    }

    /// Support = one representative per admissible cylinder of length `level`:
    /// the lexicographically smallest admissible extension to full depth.
    pub fn cylinders(spec: &SystemSpec, level: usize, g: usize) -> Result<Self> {
        let lang = spec
            .language()
            .ok_or_else(|| Error::InvalidParameter("cylinder grids need a shift".into()))?;
        let depth = spec.depth().unwrap();
        spec.require_depth(level, "measure grid")?;
        let support = lang
            .words(level)?
            .into_iter()
            .filter_map(|w| {
                let fixed = w.iter().enumerate().map(|(i, &s)| (i, s)).collect();
                lang.realize(depth, &fixed).map(Point::Word)
            })
            .collect();
        let mut grid = Self::on_points(support, g)?;
        grid.level = Some(level);
        Ok(grid)
    }

    /// `C(g + N − 1, N − 1)`.
    pub fn size(&self) -> BigUint {
        let n = self.support.len();
        let mut c = BigUint::one();
        for i in 0..n - 1 {
            c = c * BigUint::from(self.g + i + 1) / BigUint::from(i + 1);
        }
        c
    }

    /// Measures in lexicographic order of their weight vectors (first point most significant, descending).
    pub fn measures(&self) -> Result<Vec<DiscreteMeasure>> {
        let size = self.size();
        if size > BigUint::from(MAX_GRID) {
            return Err(Error::Refused(format!("measure grid of {size} measures (limit {MAX_GRID})")));
        }
        let n = self.support.len();
        let mut out = Vec::new();
        let mut parts = vec![0usize; n];
        fn fill(grid: &MeasureGrid, i: usize, left: usize, parts: &mut Vec<usize>, out: &mut Vec<DiscreteMeasure>) -> Result<()> {
            if i + 1 == parts.len() {
                parts[i] = left;
                out.push(DiscreteMeasure::from_masses(
                    grid.support
                        .iter()
                        .zip(parts.iter())
                        .map(|(p, &c)| (p.clone(), q_frac(c as i64, grid.g as i64))),
                )?);
                return Ok(());
            }
            for c in (0..=left).rev() {
                parts[i] = c;
                fill(grid, i + 1, left - c, parts, out)?;
            }
            Ok(())
        }
        fill(self, 0, self.g, &mut parts, &mut out)?;
        Ok(out)
    }
}

/// Pairwise separation of measures under an exact metric, evaluated lazily with memo.
fn measure_count(
    measures: &[DiscreteMeasure],
    eps: &Q,
    mut metric: impl FnMut(&DiscreteMeasure, &DiscreteMeasure) -> Result<Q>,
) -> Result<(usize, Option<usize>)> {
    let greedy = greedy_separated(measures.len(), |i, j| Ok(metric(&measures[i], &measures[j])? > *eps))?.len();
    let exact = if measures.len() <= MAX_EXACT {
        Some(separated_count(
            measures.len(),
            |i, j| Ok(metric(&measures[i], &measures[j])? > *eps),
            CountMode::Exact,
        )?)
    } else {
        None
    };
    Ok((greedy, exact))
}

/// The explicit family `{Ξ(t) : t ∈ H^{I^m_n}}` built from verified anchors.
#[derive(Clone, Debug)]
pub struct HnFamily {
    pub m: usize,
    pub n: usize,
    pub q_m: usize,
    pub gamma: Q,
    pub slots: Vec<usize>,
    pub anchors: AnchorFamily,
    pub measures: Vec<DiscreteMeasure>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HCheck {
    pub size: usize,
    /// `(2^{2^{q_m}} − 1)^{#I^m_n}`.
    pub certified_cardinality: String,
    #[serde(serialize_with = "ser_q")]
    pub threshold: Q,
    pub pairs_checked: usize,
    #[serde(serialize_with = "ser_opt_q")]
    pub min_distance: Option<Q>,
    pub all_separated: bool,
}

fn ser_opt_q<S: serde::Serializer>(q: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match q {
        Some(q) => s.serialize_some(&fmt_q(q)),
        None => s.serialize_none(),
    }
}

/// Largest `H_n` family materialized.
pub const MAX_H_FAMILY: usize = 1 << 12;

impl HnFamily {
    /// Builds the family for window `I` with density parameter `δ`.
    pub fn build(spec: &SystemSpec, window: &IndependenceWindow, delta: &Q, m: usize, n: usize) -> Result<Self> {
        let summary: BlockSummary = block_summary(window, m, delta)?;
        let q = summary.q_m;
        if q == 0 {
            return Err(Error::InvalidParameter(format!("q_m = 0 at m = {m}: the H family is a single point")));
        }
        let anchors = pick_anchors(spec, window, &summary, n)?;
        let slots = anchors.slots().to_vec();
        let h = h_family(q)?;
        let size = (h.len() as u128).checked_pow(slots.len() as u32).unwrap_or(u128::MAX);
        if size > MAX_H_FAMILY as u128 {
            return Err(Error::Refused(format!("H_n family of {size} measures")));
        }
        let measures = (0..size as usize)
            .map(|r| {
                let idx = multi_index_unrank(r, h.len(), slots.len());
                let t = CubePoint::new(idx.iter().map(|&i| h[i].clone()).collect::<Vec<SimplexPoint>>())?;
                xi(&t, &anchors)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HnFamily {
            m,
            n,
            q_m: q,
            gamma: gamma_closed_form(spec, window.pair(), m)?,
            slots,
            anchors,
            measures,
        })
    }

    /// Full shift defaults: `U_0 = [0]`, `U_1 = [1]`, `I = ℕ`, `δ = 1`.
    pub fn full_shift(spec: &SystemSpec, m: usize, n: usize) -> Result<Self> {
        let window = IndependenceWindow::naturals(n * m, IePair::first_symbol());
        Self::build(spec, &window, &Q::one(), m, n)
    }

    /// `γ_m / 2^{q_m}`.
    pub fn threshold(&self) -> Q {
        &self.gamma / q_pow(&q_int(2), self.q_m as u32)
    }

    pub fn certified_cardinality(&self) -> BigUint {
        let per = (BigUint::one() << (1usize << self.q_m)) - BigUint::one();
        per.pow(self.slots.len() as u32)
    }

    /// Checks every pair is `W_n^m`-separated above the threshold; refuses beyond `max_pairs`.
    pub fn verify(&self, spec: &SystemSpec, max_pairs: usize) -> Result<HCheck> {
        let len = self.measures.len();
        let pairs = len * len.saturating_sub(1) / 2;
        if pairs > max_pairs {
            return Err(Error::Refused(format!("{pairs} pairwise W_n^m solves (limit {max_pairs})")));
        }
        let threshold = self.threshold();
        let mut min: Option<Q> = None;
        for i in 0..len {
            for j in i + 1..len {
                let d = wnm(spec, &self.measures[i], &self.measures[j], self.n, self.m)?;
                if min.as_ref().is_none_or(|v| d < *v) {
                    min = Some(d);
                }
            }
        }
        Ok(HCheck {
            size: len,
            certified_cardinality: self.certified_cardinality().to_string(),
            all_separated: min.as_ref().is_none_or(|v| *v > threshold),
            threshold,
            pairs_checked: pairs,
            min_distance: min,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InducedReport {
    pub n: usize,
    pub m: usize,
    #[serde(serialize_with = "ser_q")]
    pub eps: Q,
    pub grid_g: usize,
    pub grid_level: Option<usize>,
    pub grid_size: usize,
    pub greedy: usize,
    pub exact: Option<usize>,
    pub h_family: Option<HCheck>,
}

/// Separated count of a measure grid under `W_n^m` at scale ε; on full shifts the
/// `H_n` family is checked as well when it is small enough.
pub fn induced_separated(spec: &SystemSpec, grid: &MeasureGrid, eps: &Q, n: usize, m: usize) -> Result<InducedReport> {
    spec.require_depth((n.max(1) - 1) * m + 1, "induced separated count")?;
    let measures = grid.measures()?;
    let (greedy, exact) = measure_count(&measures, eps, |a, b| wnm(spec, a, b, n, m))?;
    let h_family = match spec.kind() {
        SystemKind::FullShift { .. } if spec.depth().unwrap_or(0) >= n * m => match HnFamily::full_shift(spec, m, n) {
            Ok(h) => Some(h.verify(spec, 1000)?),
            Err(Error::InvalidParameter(_)) | Err(Error::Refused(_)) => None,
            Err(e) => return Err(e),
        },
        _ => None,
    };
    Ok(InducedReport {
        n,
        m,
        eps: eps.clone(),
        grid_g: grid.g,
        grid_level: grid.level,
        grid_size: measures.len(),
        greedy,
        exact,
        h_family,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringBound {
    #[serde(serialize_with = "ser_q")]
    pub eps: Q,
    /// Greedy covering number of the space at `ε/2`.
    pub s_hat: usize,
    /// `(1/ε)^{ŝ}`.
    #[serde(serialize_with = "ser_q")]
    pub bound: Q,
}

/// `(1/ε)^{s(X, d, ε/2)}` with the covering number replaced by its greedy upper bound,
/// which only weakens the bound.
pub fn covering_upper_bound(space: &MetricSpace, eps: &Q) -> Result<CoveringBound> {
    if *eps <= Q::zero() || *eps >= Q::one() {
        return Err(Error::InvalidParameter(format!("ε = {} must lie in (0, 1)", fmt_q(eps))));
    }
    let s_hat = space_spanning_count(space, &(eps / q_int(2)))?;
    Ok(CoveringBound {
        eps: eps.clone(),
        s_hat,
        bound: q_pow(&eps.recip(), s_hat as u32),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PackingCheck {
    pub covering: CoveringBound,
    pub grid_size: usize,
    pub packing: usize,
    pub exact: bool,
    pub holds: bool,
}

/// Packing of a measure grid under `W` at scale ε against the covering bound.
pub fn check_packing(space: &MetricSpace, grid: &MeasureGrid, eps: &Q) -> Result<PackingCheck> {
    let covering = covering_upper_bound(space, eps)?;
    let measures = grid.measures()?;
    let (greedy, exact) = measure_count(&measures, eps, |a, b| w1_cost(space, a, b))?;
    let packing = exact.unwrap_or(greedy);
    Ok(PackingCheck {
        holds: Q::from_integer(packing.into()) <= covering.bound,
        covering,
        grid_size: measures.len(),
        packing,
        exact: exact.is_some(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderEstimate {
    #[serde(serialize_with = "ser_q")]
    pub eps: Q,
    pub grid_size: usize,
    pub counts: Vec<(usize, usize)>,
    /// Slope of `log log s_n` against `n` over the counts above 1.
    pub slope: Option<f64>,
    pub warnings: Vec<String>,
}

/// Doubly logarithmic growth of grid packings under `W_{d_n}`. The grid truncates the
/// supremum over all measures, so this is a grid-relative estimate.
pub fn entropy_order_estimate(spec: &SystemSpec, grid: &MeasureGrid, eps: &Q, ns: &[usize]) -> Result<OrderEstimate> {
    let measures = grid.measures()?;
    let mut counts = Vec::new();
    let mut warnings = Vec::new();
    for &n in ns {
        let (greedy, exact) = measure_count(&measures, eps, |a, b| w_bowen(spec, a, b, n))?;
        let c = exact.unwrap_or(greedy);
        if c <= 1 {
            warnings.push(format!("n = {n}: count {c}, log log undefined; skipped"));
        }
        counts.push((n, c));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = counts
        .iter()
        .filter(|(_, c)| *c > 1)
        .map(|&(n, c)| (n as f64, (c as f64).ln().ln()))
        .unzip();
    let slope = least_squares(&xs, &ys).map(|(_, b)| b);
    if slope.is_none() {
        warnings.push("fewer than two usable counts; no slope".into());
    }
    Ok(OrderEstimate {
        eps: eps.clone(),
        grid_size: measures.len(),
        counts,
        slope,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub samples: Vec<(f64, f64)>,
    pub c: f64,
    pub alpha: f64,
    /// `log value − log(C ε^{−α})` per sample.
    pub residuals: Vec<f64>,
    pub residual_norm: f64,
}

/// Least squares fit of `value ≈ C·ε^{−α}` in log-log coordinates.
pub fn rate_fit(samples: &[(f64, f64)]) -> Result<RateFit> {
    if samples.len() < 3 {
        return Err(Error::InvalidParameter(format!("rate fit needs at least 3 samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(e, v)| !(e > 0.0 && v > 0.0 && e.is_finite() && v.is_finite())) {
        return Err(Error::InvalidParameter("rate fit needs positive finite samples".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (a, b) = least_squares(&xs, &ys)
        .ok_or_else(|| Error::InvalidParameter("rate fit needs at least two distinct scales".into()))?;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (a + b * x)).collect();
    Ok(RateFit {
        samples: samples.to_vec(),
        c: a.exp(),
        alpha: -b,
        residual_norm: residuals.iter().map(|r| r * r).sum::<f64>().sqrt(),
        residuals,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub m: usize,
    pub q_m: usize,
    #[serde(serialize_with = "ser_q")]
    pub gamma: Q,
    /// `γ_m / 2^{q_m}`.
    #[serde(serialize_with = "ser_q")]
    pub scale: Q,
    pub i_m_n: usize,
    /// `(1/(nm)) · #I^m_n · log(2^{2^{q_m}} − 1)`.
    pub bound: f64,
    /// Outcome of the pairwise check of the `H_n` family; `None` when it was too large to check.
    pub verified: Option<bool>,
}

/// Certified lower bounds for `(1/(nm)) log s_n(W, T_*^m, M(X), γ_m/2^{q_m})` on a
/// shift with `U_0 = [0]`, `U_1 = [1]`, `I = ℕ`.
pub fn lower_bound_curve(spec: &SystemSpec, ms: &[usize], n: usize, max_pairs: usize) -> Result<Vec<CurvePoint>> {
    if ms.is_empty() || n == 0 {
        return Err(Error::InvalidParameter("lower bound curve needs m values and n >= 1".into()));
    }
    let pair = IePair::first_symbol();
    let mut out = Vec::new();
    for &m in ms {
        spec.require_depth(n * m, "lower bound curve")?;
        let window = IndependenceWindow::naturals(n * m, pair.clone());
        let summary = block_summary(&window, m, &Q::one())?;
        let q = summary.q_m;
        let i_m_n = summary.i_m_below(n).len();
        let gamma = gamma_closed_form(spec, &pair, m)?;
        let scale = &gamma / q_pow(&q_int(2), q as u32);
        let per = ((BigUint::one() << (1usize << q)) - BigUint::one()).to_f64().unwrap_or(f64::INFINITY);
        let bound = i_m_n as f64 * per.ln() / (n * m) as f64;
        let verified = if q == 0 {
            Some(true)
        } else {
            match HnFamily::build(spec, &window, &Q::one(), m, n) {
                Ok(h) => match h.verify(spec, max_pairs) {
                    Ok(c) => Some(c.all_separated),
                    Err(Error::Refused(_)) => None,
                    Err(e) => return Err(e),
                },
                Err(Error::Refused(_)) => None,
                Err(e) => return Err(e),
            }
        };
        out.push(CurvePoint {
            m,
            q_m: q,
            gamma,
            scale,
            i_m_n,
            bound,
            verified,
        });
    }
    Ok(out)
}

/// Cover of a finite sample of `L_n` by closed `W_n^m`-balls of radius `r` around net
/// points, with cube faces read through the sample's cube coordinates.
pub fn ball_cover(
    spec: &SystemSpec,
    samples: &[(CubePoint, DiscreteMeasure)],
    net: &[usize],
    r: &Q,
    n: usize,
    m: usize,
) -> Result<SampledCover> {
    let (k, slots) = match samples.first() {
        Some((t, _)) => (t.k(), t.n()),
        None => return Err(Error::InvalidParameter("empty sample".into())),
    };
    let supports: Vec<Vec<u64>> = samples
        .iter()
        .map(|(t, _)| {
            t.factors()
                .iter()
                .map(|f| f.support().iter().fold(0u64, |acc, &j| acc | 1 << j))
                .collect()
        })
        .collect();
    let mut elements = Vec::with_capacity(net.len());
    for &c in net {
        let mut members = Vec::new();
        for (p, (_, mu)) in samples.iter().enumerate() {
            if p == c || wnm(spec, &samples[c].1, mu, n, m)? <= *r {
                members.push(p);
            }
        }
        elements.push(members);
    }
    let cover = SampledCover::new(k, slots, supports, &elements)?;
    if !cover.covers() {
        return Err(Error::InvalidParameter(format!(
            "net of {} points with radius {} does not cover the {} samples",
            net.len(),
            fmt_q(r),
            samples.len()
        )));
    }
    Ok(cover)
}

/// Distinct supports of a measure family, used to describe grid contents.
pub fn support_union(measures: &[DiscreteMeasure]) -> BTreeSet<Point> {
    measures.iter().flat_map(|m| m.support().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_ln;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_point() -> MetricSpace {
        MetricSpace::from_table(
            vec![Point::Grid(0), Point::Grid(1)],
            vec![vec![Dist::from_integer(0), Dist::from_integer(1)], vec![Dist::from_integer(1), Dist::from_integer(0)]],
        )
        .unwrap()
    }

    /// Admissible words of length `len` by transfer matrix powers on `(window)`-blocks.
    fn transfer_count(spec: &SystemSpec, len: usize) -> u128 {
        let lang = spec.language().unwrap();
        let a = lang.alphabet();
        if len == 1 {
            return a as u128;
        }
        let mut v = vec![1u128; a];
        for _ in 1..len {
            let mut next = vec![0u128; a];
            for (s, &c) in v.iter().enumerate() {
                for t in 0..a {
                    if lang.is_admissible(&[s as u8, t as u8]) {
                        next[t] += c;
                    }
                }
            }
            v = next;
        }
        v.iter().sum()
    }

    fn subset_oracle(adj: &[u64]) -> usize {
        let n = adj.len();
        (0u64..1 << n)
            .filter(|&s| (0..n).all(|i| s >> i & 1 == 0 || adj[i] & s == 0))
            .map(|s| s.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn trivial_counts() {
        let space = SystemSpec::full_shift(2, 3).unwrap().build_space().unwrap();
        // Distances are 1, 1/2, 1/4.
        assert_eq!(space_separated_count(&space, &q_frac(1, 8), CountMode::Exact).unwrap(), 8);
        assert_eq!(space_separated_count(&space, &q_frac(1, 4), CountMode::Exact).unwrap(), 4);
        assert_eq!(space_separated_count(&two_point(), &Q::one(), CountMode::Greedy).unwrap(), 1);
        assert_eq!(space_spanning_count(&space, &Q::one()).unwrap(), 1);
        assert_eq!(space_spanning_count(&space, &q_frac(1, 1000)).unwrap(), 8);
    }

    #[test]
    fn exact_matches_subset_oracle_on_measures() {
        let spec = SystemSpec::full_shift(2, 4).unwrap();
        let points = spec.points().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let measures: Vec<DiscreteMeasure> = (0..20)
                .map(|_| {
                    let atoms: Vec<(Point, Q)> =
                        (0..3).map(|_| (points[rng.gen_range(0..16)].clone(), q_int(rng.gen_range(1..4)))).collect();
                    let total: Q = atoms.iter().map(|(_, w)| w).sum();
                    DiscreteMeasure::from_masses(atoms.into_iter().map(|(p, w)| (p, w / &total))).unwrap()
                })
                .collect();
            let eps = q_frac(1, 10);
            let adj = conflict_graph(20, |i, j| Ok(w1_cost(&spec, &measures[i], &measures[j])? > eps)).unwrap();
            let exact = maximum_independent_set(&adj);
            let greedy = greedy_separated(20, |i, j| Ok(w1_cost(&spec, &measures[i], &measures[j])? > eps)).unwrap().len();
            assert_eq!(exact, subset_oracle(&adj));
            assert!(greedy <= exact);
        }
    }

    #[test]
    fn exact_matches_oracle_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.gen_range(1..=16);
            let mut adj = vec![0u64; n];
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(0.4) {
                        adj[i] |= 1 << j;
                        adj[j] |= 1 << i;
                    }
                }
            }
            assert_eq!(maximum_independent_set(&adj), subset_oracle(&adj));
        }
        assert!(conflict_graph(65, |_, _| Ok(true)).is_err());
    }

    #[test]
    fn spanning_within_log_factor() {
        let space = SystemSpec::full_shift(2, 3).unwrap().build_space().unwrap();
        for eps in [q_frac(1, 4), q_frac(1, 2), q_frac(3, 8)] {
            let within = |i: usize, j: usize| space.dist(i, j) <= q_to_dist(&eps).unwrap();
            let exact = (1u32..256)
                .filter(|s| (0..8).all(|j| (0..8).any(|i| s >> i & 1 == 1 && within(i, j))))
                .map(|s| s.count_ones() as usize)
                .min()
                .unwrap();
            let greedy = space_spanning_count(&space, &eps).unwrap();
            assert!(exact <= greedy && (greedy as f64) <= exact as f64 * (1.0 + 8f64.ln()));
        }
    }

    #[test]
    fn full_shift_slope() {
        let spec = SystemSpec::full_shift(2, 16).unwrap();
        let ns: Vec<usize> = (4..=12).collect();
        let report = entropy_estimate(&spec, &q_frac(3, 10), &ns).unwrap();
        for c in &report.counts {
            assert_eq!(c.best() as u128, transfer_count(&spec, c.n + 1));
        }
        assert!((report.slope - 2f64.ln()).abs() <= 0.05 * 2f64.ln());
        assert!(report.monotone_in_n);
        assert!(report.subadditivity.iter().all(|s| s.holds));
    }

    #[test]
    fn golden_mean_slope() {
        let spec = SystemSpec::golden_mean(16).unwrap();
        let ns: Vec<usize> = (4..=12).collect();
        let report = entropy_estimate(&spec, &q_frac(3, 10), &ns).unwrap();
        for c in &report.counts {
            assert_eq!(c.best() as u128, transfer_count(&spec, c.n + 1));
        }
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((report.slope - phi.ln()).abs() <= 0.05 * phi.ln());
        assert!(report.subadditivity.iter().all(|s| s.holds));
    }

    #[test]
    fn power_bowen_word_path() {
        let spec = SystemSpec::full_shift(2, 7).unwrap();
        let pts = spec.points().unwrap();
        for (k, p) in [(1, 2), (2, 2), (3, 2), (2, 3)] {
            for x in pts.iter().step_by(5) {
                for y in pts.iter().step_by(3) {
                    let (Point::Word(a), Point::Word(b)) = (x, y) else { unreachable!() };
                    let expect = power_word_exponent(a, b, k, p).map_or(Dist::zero(), |e| pow2_neg(e as u32));
                    assert_eq!(power_bowen(&spec, x, y, k, p).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn counts_fall_with_eps() {
        let spec = SystemSpec::full_shift(2, 10).unwrap();
        let mut prev = usize::MAX;
        for eps in [q_frac(1, 16), q_frac(1, 8), q_frac(3, 10), q_frac(1, 2), Q::one()] {
            let r = entropy_estimate(&spec, &eps, &[3]).unwrap();
            assert!(r.counts[0].best() <= prev);
            prev = r.counts[0].best();
        }
        let flat = entropy_estimate(&spec, &q_int(2), &[2, 3, 4]).unwrap();
        assert!(flat.counts.iter().all(|c| c.best() == 1));
        assert_eq!(flat.slope, 0.0);
    }

    #[test]
    fn grid_sizes_and_order() {
        let spec = SystemSpec::full_shift(2, 4).unwrap();
        let grid = MeasureGrid::cylinders(&spec, 2, 2).unwrap();
        assert_eq!(grid.size(), BigUint::from(10u32));
        let ms = grid.measures().unwrap();
        assert_eq!(ms.len(), 10);
        assert_eq!(ms[0], DiscreteMeasure::dirac(Point::Word(vec![0, 0, 0, 0])));
        assert_eq!(support_union(&ms).len(), 4);
        let tiny = induced_separated(&spec, &grid, &q_frac(1, 1000), 1, 1).unwrap();
        assert_eq!(tiny.exact, Some(10));
    }

    #[test]
    fn dirac_grid_recovers_space_count() {
        let spec = SystemSpec::full_shift(2, 3).unwrap();
        let grid = MeasureGrid::on_points(spec.points().unwrap(), 1).unwrap();
        let space = spec.build_space().unwrap();
        for eps in [q_frac(1, 8), q_frac(1, 4), q_frac(1, 2)] {
            let r = induced_separated(&spec, &grid, &eps, 1, 1).unwrap();
            assert_eq!(r.exact.unwrap(), space_separated_count(&space, &eps, CountMode::Exact).unwrap());
        }
    }

    #[test]
    fn h_family_m2_n2() {
        let spec = SystemSpec::full_shift(2, 4).unwrap();
        let h = HnFamily::full_shift(&spec, 2, 2).unwrap();
        assert_eq!(h.measures.len(), 9);
        assert_eq!(h.threshold(), q_frac(1, 16));
        let check = h.verify(&spec, 100).unwrap();
        assert_eq!(check.pairs_checked, 36);
        assert!(check.all_separated);
        assert_eq!(check.certified_cardinality, "9");
        // A grid containing the family separates at least as many measures.
        let grid: Vec<DiscreteMeasure> = h
            .measures
            .iter()
            .cloned()
            .chain(spec.points().unwrap().into_iter().take(5).map(DiscreteMeasure::dirac))
            .collect();
        let (_, exact) = measure_count(&grid, &h.threshold(), |a, b| wnm(&spec, a, b, 2, 2)).unwrap();
        assert!(exact.unwrap() >= 9);
    }

    #[test]
    fn covering_bound_examples() {
        let two = two_point();
        let b = covering_upper_bound(&two, &q_frac(1, 4)).unwrap();
        assert_eq!((b.s_hat, b.bound.clone()), (2, q_int(16)));
        let check = check_packing(&two, &MeasureGrid::on_points(two.points().to_vec(), 8).unwrap(), &q_frac(1, 4)).unwrap();
        assert!(check.holds && check.exact);
        assert_eq!(check.packing, 3);
        let close = MetricSpace::from_table(two.points().to_vec(), vec![vec![Dist::from_integer(0), Dist::new(1, 4)], vec![Dist::new(1, 4), Dist::from_integer(0)]]).unwrap();
        let near = covering_upper_bound(&close, &q_frac(99, 100)).unwrap();
        assert_eq!(near.s_hat, 1);
        assert!(covering_upper_bound(&two, &Q::one()).is_err());
        let eight = SystemSpec::full_shift(2, 3).unwrap().build_space().unwrap();
        let c = check_packing(&eight, &MeasureGrid::on_points(eight.points().to_vec(), 2).unwrap(), &q_frac(1, 8)).unwrap();
        assert!(c.holds);
    }

    #[test]
    fn order_estimate() {
        let spec = SystemSpec::full_shift(2, 4).unwrap();
        let grid = MeasureGrid::cylinders(&spec, 4, 2).unwrap();
        let est = entropy_order_estimate(&spec, &grid, &q_frac(1, 10), &[1, 2, 3, 4]).unwrap();
        assert!(est.slope.unwrap() > 0.0);
        let dead = entropy_order_estimate(&spec, &grid, &q_int(2), &[1, 2]).unwrap();
        assert!(dead.slope.is_none() && !dead.warnings.is_empty());
    }

    #[test]
    fn rate_fit_round_trip() {
        let (c0, a0) = (0.7, 1.3);
        let samples: Vec<(f64, f64)> = [0.5, 0.25, 0.125, 0.0625].iter().map(|&e: &f64| (e, c0 * e.powf(-a0))).collect();
        let fit = rate_fit(&samples).unwrap();
        assert!((fit.c - c0).abs() < 1e-6 && (fit.alpha - a0).abs() < 1e-6);
        let flat = rate_fit(&[(0.5, 2.0), (0.25, 2.0), (0.1, 2.0)]).unwrap();
        assert!(flat.alpha.abs() < 1e-12);
        assert!(rate_fit(&samples[..2]).is_err());
    }

    #[test]
    fn curve_values() {
        let spec = SystemSpec::full_shift(2, 16).unwrap();
        let curve = lower_bound_curve(&spec, &[1, 2, 3, 4], 4, 0).unwrap();
        let expect = [0.0, q_ln(&q_int(3)) / 2.0, q_ln(&q_int(3)) / 3.0, q_ln(&q_int(15)) / 4.0];
        for (p, e) in curve.iter().zip(expect) {
            assert!((p.bound - e).abs() < 1e-12);
        }
        assert_eq!(curve[1].scale, q_frac(1, 16));
        assert_eq!(curve[3].scale, q_frac(1, 128));
    }
}
