//! Independence sets of an IE-pair at a finite horizon, block bookkeeping
//! (`q_m`, `I^m`) and the anchor points `x_𝐢` realizing prescribed visit patterns.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::measures::{multi_index_unrank, AnchorFamily};
use crate::rational::{fmt_q, q_int};
use crate::spaces::{IePair, Point, Region, SystemSpec};
use crate::{Error, Result, Q};

/// Largest `|J|` ever checked exhaustively.
pub const MAX_EXHAUSTIVE: usize = 24;
/// Largest anchor family `pick_anchors` will build.
pub const MAX_ANCHORS: usize = 1 << 16;

/// A candidate independence set `I ⊆ [0, N)` for an IE-pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceWindow {
    indices: Vec<usize>,
    horizon: usize,
    pair: IePair,
}

impl IndependenceWindow {
    pub fn new(indices: impl IntoIterator<Item = usize>, horizon: usize, pair: IePair) -> Result<Self> {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&i| i >= horizon) {
            return Err(Error::InvalidParameter(format!("index {bad} lies beyond the horizon {horizon}")));
        }
        Ok(IndependenceWindow {
            indices: set.into_iter().collect(),
            horizon,
            pair,
        })
    }

    pub fn naturals(horizon: usize, pair: IePair) -> Self {
        Self::new(0..horizon, horizon, pair).expect("indices below horizon")
    }

    pub fn evens(horizon: usize, pair: IePair) -> Self {
        Self::new((0..horizon).step_by(2), horizon, pair).expect("indices below horizon")
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn pair(&self) -> &IePair {
        &self.pair
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// `#I_n = #(I ∩ [0, n))`.
    pub fn count_below(&self, n: usize) -> usize {
        self.indices.partition_point(|&i| i < n)
    }

    /// `#I_n` for every `n ≤ N`.
    pub fn density_record(&self) -> Vec<usize> {
        (0..=self.horizon).map(|n| self.count_below(n)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Independence {
    /// Every pattern over `J` is realized; witnesses are listed in pattern order.
    Certificate { j: Vec<usize>, patterns: usize, witnesses: Vec<String> },
    /// First pattern (lexicographic, earliest index most significant) with no realizing point.
    Counterexample { j: Vec<usize>, zeta: Vec<u8> },
}

/// Smallest represented point `x` with `T^j x ∈ U_{ζ(j)}` for every `(j, ζ(j))` in `pattern`.
pub fn realize_pattern(spec: &SystemSpec, pair: &IePair, pattern: &[(usize, u8)]) -> Result<Option<Point>> {
    if let Some(lang) = spec.language() {
        let depth = spec.depth().unwrap();
        let mut pins: BTreeMap<usize, u8> = BTreeMap::new();
        for &(j, side) in pattern {
            let Region::Cylinder(c) = pair.region(side) else {
                return Err(Error::InvalidParameter("shift systems need cylinder regions".into()));
            };
            if j + c.len() > depth {
                return Err(Error::DepthExhausted {
                    what: format!("visit to a cylinder at time {j}"),
                    required: j + c.len(),
                    available: depth,
                });
            }
            for (off, &s) in c.iter().enumerate() {
                if *pins.entry(j + off).or_insert(s) != s {
                    return Ok(None);
                }
            }
        }
        return Ok(lang.realize(depth, &pins).map(Point::Word));
    }
    for p in spec.points()? {
        if visits(spec, pair, &p, pattern)? {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Whether the orbit of `p` visits `U_{a_ℓ}` at every prescribed time `ℓ`.
pub fn visits(spec: &SystemSpec, pair: &IePair, p: &Point, pattern: &[(usize, u8)]) -> Result<bool> {
    for &(l, side) in pattern {
        if !pair.region(side).contains(&spec.iterate(p, l)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks every `ζ: J → {0,1}` for a point of `⋂_{j∈J} T^{-j} U_{ζ(j)}`.
pub fn verify_independence(spec: &SystemSpec, pair: &IePair, j: &[usize], bound: usize) -> Result<Independence> {
    let js: Vec<usize> = j.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if js.len() > bound.min(MAX_EXHAUSTIVE) {
        return Err(Error::Refused(format!(
            "|J| = {} exceeds the exhaustive bound {}",
            js.len(),
            bound.min(MAX_EXHAUSTIVE)
        )));
    }
    pair.separation(spec)?;
    let size = js.len();
    let mut witnesses = Vec::with_capacity(1 << size);
    for mask in 0u32..(1 << size) {
        let zeta: Vec<u8> = (0..size).map(|b| (mask >> (size - 1 - b) & 1) as u8).collect();
        let pattern: Vec<(usize, u8)> = js.iter().copied().zip(zeta.iter().copied()).collect();
        match realize_pattern(spec, pair, &pattern)? {
            Some(p) => witnesses.push(spec.label(&p)),
            None => return Ok(Independence::Counterexample { j: js, zeta }),
        }
    }
    Ok(Independence::Certificate {
        j: js,
        patterns: witnesses.len(),
        witnesses,
    })
}

/// Block bookkeeping for block length `m` and density parameter `δ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSummary {
    pub m: usize,
    pub delta: Q,
    /// `q_m = ⌊m·δ/2⌋`.
    pub q_m: usize,
    /// `#([km, (k+1)m) ∩ I)` for each full block inside the horizon.
    pub block_counts: Vec<usize>,
    /// Blocks whose count exceeds `q_m`.
    pub i_m: Vec<usize>,
}

/// One instance of `#I_{mn} ≤ m·#I^m_n + q_m·(n − #I^m_n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountingIdentity {
    pub n: usize,
    pub lhs: usize,
    pub rhs: usize,
    pub holds: bool,
}

impl BlockSummary {
    pub fn blocks(&self) -> usize {
        self.block_counts.len()
    }

    /// `I^m_n = I^m ∩ [0, n)`.
    pub fn i_m_below(&self, n: usize) -> Vec<usize> {
        self.i_m.iter().copied().filter(|&k| k < n).collect()
    }

    pub fn counting_identity(&self, window: &IndependenceWindow, n: usize) -> Result<CountingIdentity> {
        if n > self.blocks() {
            return Err(Error::InvalidParameter(format!(
                "n = {n} exceeds the {} full blocks in the window",
                self.blocks()
            )));
        }
        let lhs = window.count_below(self.m * n);
        let big = self.i_m_below(n).len();
        let rhs = self.m * big + self.q_m * (n - big);
        Ok(CountingIdentity {
            n,
            lhs,
            rhs,
            holds: lhs <= rhs,
        })
    }

    /// The identity for every `n ≤ N/m`.
    pub fn counting_identities(&self, window: &IndependenceWindow) -> Vec<CountingIdentity> {
        (0..=self.blocks())
            .map(|n| self.counting_identity(window, n).expect("n within blocks"))
            .collect()
    }

    /// `#I^m_n / n` over the window, for sanity reporting only.
    pub fn window_density(&self) -> Q {
        if self.blocks() == 0 {
            return Q::zero();
        }
        Q::new((self.i_m.len() as i64).into(), (self.blocks() as i64).into())
    }

    /// `E_k`: the first `q_m` indices of `[km, (k+1)m) ∩ I`.
    pub fn e_k(&self, window: &IndependenceWindow, k: usize) -> Vec<usize> {
        window
            .indices()
            .iter()
            .copied()
            .filter(|&i| i >= k * self.m && i < (k + 1) * self.m)
            .take(self.q_m)
            .collect()
    }
}

/// `q_m = ⌊m·δ/2⌋`.
pub fn q_m(m: usize, delta: &Q) -> usize {
    (q_int(m as i64) * delta / q_int(2)).floor().to_integer().try_into().unwrap_or(0)
}

pub fn block_summary(window: &IndependenceWindow, m: usize, delta: &Q) -> Result<BlockSummary> {
    if !delta.is_positive() || *delta > Q::one() {
        return Err(Error::InvalidParameter(format!("density δ = {} must lie in (0, 1]", fmt_q(delta))));
    }
    if m == 0 || window.horizon() < m {
        return Err(Error::InvalidParameter(format!(
            "block length m = {m} must lie in 1..={}",
            window.horizon()
        )));
    }
    let q = q_m(m, delta);
    let blocks = window.horizon() / m;
    let block_counts: Vec<usize> = (0..blocks)
        .map(|k| window.count_below((k + 1) * m) - window.count_below(k * m))
        .collect();
    let i_m = (0..blocks).filter(|&k| block_counts[k] > q).collect();
    Ok(BlockSummary {
        m,
        delta: delta.clone(),
        q_m: q,
        block_counts,
        i_m,
    })
}

/// `x_𝐢` for every `𝐢 ∈ ⟦2^{q_m}⟧^{I^m_n}`: the smallest point whose orbit visits
/// `U_{a_ℓ^k}` at each `ℓ ∈ E_k`, where `ψ_k(i)` writes `i` in binary (most
/// significant bit first) over `E_k` in increasing order.
pub fn pick_anchors(
    spec: &SystemSpec,
    window: &IndependenceWindow,
    summary: &BlockSummary,
    n: usize,
) -> Result<AnchorFamily> {
    if n == 0 || n > summary.blocks() {
        return Err(Error::InvalidParameter(format!(
            "n = {n} must lie in 1..={} (full blocks in the window)",
            summary.blocks()
        )));
    }
    let slots = summary.i_m_below(n);
    let q = summary.q_m;
    let k = 1usize << q;
    let total = (k as u128).checked_pow(slots.len() as u32).unwrap_or(u128::MAX);
    if total > MAX_ANCHORS as u128 {
        return Err(Error::Refused(format!("{total} anchors")));
    }
    let e: Vec<Vec<usize>> = slots.iter().map(|&s| summary.e_k(window, s)).collect();
    let pair = window.pair();
    let mut anchors = Vec::with_capacity(total as usize);
    for rank in 0..total as usize {
        let idx = multi_index_unrank(rank, k, slots.len());
        let pattern = anchor_pattern(&idx, &e, q);
        let x = realize_pattern(spec, pair, &pattern)?.ok_or(Error::Unrealizable { pattern: pattern.clone() })?;
        if !visits(spec, pair, &x, &pattern)? {
            return Err(Error::Unrealizable { pattern });
        }
        anchors.push(x);
    }
    AnchorFamily::new(k, slots, anchors)
}

/// The visit pattern `(ℓ, a_ℓ)` prescribed by the multi-index `idx`.
pub fn anchor_pattern(idx: &[usize], e: &[Vec<usize>], q: usize) -> Vec<(usize, u8)> {
    let mut pattern: Vec<(usize, u8)> = idx
        .iter()
        .zip(e)
        .flat_map(|(&i, ek)| ek.iter().enumerate().map(move |(b, &l)| (l, (i >> (q - 1 - b) & 1) as u8)))
        .collect();
    pattern.sort();
    pattern
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_frac;
    use proptest::prelude::*;

    fn w(s: &str) -> Point {
        Point::Word(s.bytes().map(|b| b - b'0').collect())
    }

    #[test]
    fn full_shift_is_independent() {
        let spec = SystemSpec::full_shift(2, 4).unwrap();
        match verify_independence(&spec, &IePair::first_symbol(), &[0, 1, 2], 12).unwrap() {
            Independence::Certificate { patterns, witnesses, .. } => {
                assert_eq!(patterns, 8);
                assert_eq!(witnesses[5], "1010");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn golden_mean_counterexample_and_certificate() {
        let gm = SystemSpec::golden_mean(4).unwrap();
        let out = verify_independence(&gm, &IePair::first_symbol(), &[0, 1], 12).unwrap();
        assert_eq!(out, Independence::Counterexample { j: vec![0, 1], zeta: vec![1, 1] });
        let pair = IePair::new(Region::Cylinder(vec![0]), Region::Cylinder(vec![1, 0]));
        match verify_independence(&gm, &pair, &[0, 2], 12).unwrap() {
            Independence::Certificate { patterns, .. } => assert_eq!(patterns, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn golden_mean_oracle_agrees() {
        // Oracle: a pattern is realizable iff some admissible length-6 word (no "11") matches it.
        let gm = SystemSpec::golden_mean(6).unwrap();
        let words: Vec<String> = (0..64u32)
            .map(|x| format!("{x:06b}"))
            .filter(|s| !s.contains("11"))
            .collect();
        let pair = IePair::first_symbol();
        for mask in 1u32..64 {
            let js: Vec<usize> = (0..6).filter(|i| mask >> i & 1 == 1).collect();
            let expected = (0u32..1 << js.len()).all(|z| {
                words.iter().any(|wd| {
                    js.iter().enumerate().all(|(b, &j)| wd.as_bytes()[j] - b'0' == (z >> b & 1) as u8)
                })
            });
            let got = matches!(verify_independence(&gm, &pair, &js, 12).unwrap(), Independence::Certificate { .. });
            assert_eq!(got, expected, "J = {js:?}");
        }
    }

    #[test]
    fn refuses_large_j() {
        let spec = SystemSpec::full_shift(2, 20).unwrap();
        let js: Vec<usize> = (0..13).collect();
        assert!(matches!(
            verify_independence(&spec, &IePair::first_symbol(), &js, 12),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn circle_independence() {
        // U_0 = [0, 1/4), U_1 = [1/2, 3/4) on the 64-point grid: visits at even times are free.
        let spec = SystemSpec::circle(2, 64).unwrap();
        let pair = IePair::new(Region::Grid((0..16).collect()), Region::Grid((32..48).collect()));
        assert!(matches!(
            verify_independence(&spec, &pair, &[0, 2, 4], 12).unwrap(),
            Independence::Certificate { patterns: 8, .. }
        ));
        assert!(matches!(
            verify_independence(&spec, &pair, &[0, 1], 12).unwrap(),
            Independence::Counterexample { .. }
        ));
    }

    #[test]
    fn block_summary_examples() {
        let pair = IePair::first_symbol();
        let nat = IndependenceWindow::naturals(20, pair.clone());
        let s = block_summary(&nat, 2, &Q::one()).unwrap();
        assert_eq!(s.q_m, 1);
        assert!(s.block_counts.iter().all(|&c| c == 2));
        assert_eq!(s.i_m, (0..10).collect::<Vec<_>>());
        let evens = IndependenceWindow::evens(40, pair.clone());
        let s = block_summary(&evens, 4, &q_frac(1, 2)).unwrap();
        assert_eq!(s.q_m, 1);
        assert_eq!(s.i_m.len(), 10);
        let id = s.counting_identity(&evens, 10).unwrap();
        assert_eq!((id.lhs, id.rhs, id.holds), (20, 40, true));
        assert!(block_summary(&evens, 4, &Q::zero()).is_err());
        assert!(block_summary(&evens, 4, &q_frac(3, 2)).is_err());
        assert_eq!(nat.density_record()[7], 7);
    }

    #[test]
    fn anchors_for_full_shift() {
        let spec = SystemSpec::full_shift(2, 4).unwrap();
        let window = IndependenceWindow::naturals(8, IePair::first_symbol());
        let s = block_summary(&window, 2, &Q::one()).unwrap();
        let one = pick_anchors(&spec, &window, &s, 1).unwrap();
        assert_eq!(one.anchors(), &[w("0000"), w("1000")]);
        let two = pick_anchors(&spec, &window, &s, 2).unwrap();
        assert_eq!(two.anchors(), &[w("0000"), w("0010"), w("1000"), w("1010")]);
        assert_eq!(two.slots(), &[0, 1]);
    }

    #[test]
    fn anchors_for_golden_mean_avoid_forbidden_words() {
        let spec = SystemSpec::golden_mean(8).unwrap();
        let window = IndependenceWindow::evens(8, IePair::first_symbol());
        let s = block_summary(&window, 4, &q_frac(1, 2)).unwrap();
        let fam = pick_anchors(&spec, &window, &s, 2).unwrap();
        assert_eq!(fam.len(), 4);
        for a in fam.anchors() {
            assert!(!a.to_string().contains("11"));
        }
    }

    #[test]
    fn unrealizable_pattern_is_reported() {
        let spec = SystemSpec::golden_mean(6).unwrap();
        let window = IndependenceWindow::naturals(6, IePair::first_symbol());
        let s = block_summary(&window, 4, &Q::one()).unwrap();
        assert_eq!(s.q_m, 2);
        match pick_anchors(&spec, &window, &s, 1) {
            Err(Error::Unrealizable { pattern }) => assert_eq!(pattern, vec![(0, 1), (1, 1)]),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn counting_identity_holds(bits in prop::collection::vec(any::<bool>(), 12..60), m in 1usize..7, num in 1i64..=4) {
            let horizon = bits.len();
            let idx = (0..horizon).filter(|&i| bits[i]);
            let window = IndependenceWindow::new(idx, horizon, IePair::first_symbol()).unwrap();
            prop_assume!(m <= horizon);
            let s = block_summary(&window, m, &q_frac(num, 4)).unwrap();
            for id in s.counting_identities(&window) {
                prop_assert!(id.holds);
            }
        }

        #[test]
        fn anchor_count_and_injectivity(m in 1usize..5, n in 1usize..4) {
            let spec = SystemSpec::full_shift(2, m * n).unwrap();
            let window = IndependenceWindow::naturals(m * n, IePair::first_symbol());
            let s = block_summary(&window, m, &Q::one()).unwrap();
            let fam = pick_anchors(&spec, &window, &s, n).unwrap();
            let expected = (1usize << s.q_m).pow(s.i_m_below(n).len() as u32);
            prop_assert_eq!(fam.len(), expected);
            let distinct: BTreeSet<&Point> = fam.anchors().iter().collect();
            prop_assert_eq!(distinct.len(), fam.len());
        }
    }
}
