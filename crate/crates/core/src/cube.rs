//! Faces of `Δ_k`, box covers of generalized cubes `Δ_k^n`, cover order and the
//! separating property.
//!
//! A point of `Δ_k^n` is `n` probability vectors of length `k`. A face of `Δ_k`
//! is an index set `I`: the vectors supported in `I`. The opposite face is the
//! complement; the empty face (two disjoint faces meeting) has the whole simplex
//! as opposite face.
//!
//! A cover is separating when, for every slot `i`, every subfamily `(U_j)` with
//! nonempty common intersection and every choice of `(k−1)`-faces `F^j` with
//! `U_j ∩ F^j_i ≠ ∅`, the intersection `⋂ U_j` misses the opposite face of `⋂ F^j`
//! at slot `i`. Writing `F^j = ⟦k⟧ ∖ {v_j}`, that opposite face is exactly the
//! face spanned by `V = {v_j}`, so the check runs over achievable vertex sets `V`.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rational::{fmt_q, parse_q, q_frac, q_int, q_pow};
use crate::{Error, Result, Q};

/// Face of `Δ_k` as an index set (bit `j` set when vertex `j` belongs to the face).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceId {
    k: usize,
    mask: u64,
}

impl FaceId {
    /// A nonempty face.
    pub fn new(k: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        if k == 0 || k > 64 {
            return Err(Error::InvalidParameter(format!("simplex size k = {k} must lie in 1..=64")));
        }
        let mut mask = 0u64;
        for i in indices {
            if i >= k {
                return Err(Error::InvalidParameter(format!("vertex {i} outside ⟦{k}⟧")));
            }
            mask |= 1 << i;
        }
        if mask == 0 {
            return Err(Error::InvalidParameter("a face needs at least one vertex".into()));
        }
        Ok(FaceId { k, mask })
    }

    /// Any index set, including the empty face.
    pub fn from_mask(k: usize, mask: u64) -> Self {
        FaceId { k, mask: mask & full_mask(k) }
    }

    pub fn full(k: usize) -> Self {
        Self::from_mask(k, full_mask(k))
    }

    /// The `(k−1)`-face omitting vertex `v`.
    pub fn facet(k: usize, v: usize) -> Self {
        Self::from_mask(k, full_mask(k) & !(1 << v))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.k).filter(|&i| self.mask >> i & 1 == 1).collect()
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.k && self.mask >> v & 1 == 1
    }

    /// Complement index set; the empty face maps to the whole simplex.
    pub fn opposite(&self) -> Self {
        Self::from_mask(self.k, !self.mask)
    }

    pub fn meet(&self, other: &Self) -> Result<Self> {
        if self.k != other.k {
            return Err(Error::DimensionMismatch(format!("faces of Δ_{} and Δ_{}", self.k, other.k)));
        }
        Ok(Self::from_mask(self.k, self.mask & other.mask))
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.indices().into_iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

fn full_mask(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// A face placed in factor `slot` of a generalized cube.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotFace {
    pub slot: usize,
    pub face: FaceId,
}

/// Intersection of faces sharing a slot.
pub fn face_meet(faces: &[SlotFace]) -> Result<SlotFace> {
    let first = faces
        .first()
        .ok_or_else(|| Error::InvalidParameter("face_meet needs at least one face".into()))?;
    let mut face = first.face;
    for f in &faces[1..] {
        if f.slot != first.slot {
            return Err(Error::InvalidParameter(format!(
                "faces in slots {} and {} cannot be intersected",
                first.slot, f.slot
            )));
        }
        face = face.meet(&f.face)?;
    }
    Ok(SlotFace { slot: first.slot, face })
}

/// `ε_m = γ_m² / (diam · 2^{q_m+1})`.
pub fn epsilon_m(gamma: &Q, q_m: usize, diam: &Q) -> Result<Q> {
    if *gamma <= Q::zero() || *diam <= Q::zero() {
        return Err(Error::InvalidParameter("ε_m needs γ_m > 0 and diam > 0".into()));
    }
    Ok(gamma * gamma / (diam * q_pow(&q_int(2), q_m as u32 + 1)))
}

/// Interval with open or closed ends.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Q,
    pub hi: Q,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: Q, hi: Q, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        let iv = Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        };
        if iv.is_empty() {
            return Err(Error::InvalidParameter(format!("empty interval {iv}")));
        }
        Ok(iv)
    }

    pub fn closed(lo: Q, hi: Q) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn unit() -> Self {
        Interval {
            lo: Q::zero(),
            hi: Q::one(),
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn point(x: Q) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: &Q) -> bool {
        let above = if self.lo_closed { *x >= self.lo } else { *x > self.lo };
        let below = if self.hi_closed { *x <= self.hi } else { *x < self.hi };
        above && below
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            std::cmp::Ordering::Greater => (self.lo.clone(), self.lo_closed),
            std::cmp::Ordering::Less => (other.lo.clone(), other.lo_closed),
            std::cmp::Ordering::Equal => (self.lo.clone(), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            std::cmp::Ordering::Less => (self.hi.clone(), self.hi_closed),
            std::cmp::Ordering::Greater => (other.hi.clone(), other.hi_closed),
            std::cmp::Ordering::Equal => (self.hi.clone(), self.hi_closed && other.hi_closed),
        };
        Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Self) -> Self {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            std::cmp::Ordering::Less => (self.lo.clone(), self.lo_closed),
            std::cmp::Ordering::Greater => (other.lo.clone(), other.lo_closed),
            std::cmp::Ordering::Equal => (self.lo.clone(), self.lo_closed || other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            std::cmp::Ordering::Greater => (self.hi.clone(), self.hi_closed),
            std::cmp::Ordering::Less => (other.hi.clone(), other.hi_closed),
            std::cmp::Ordering::Equal => (self.hi.clone(), self.hi_closed || other.hi_closed),
        };
        Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            fmt_q(&self.lo),
            fmt_q(&self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Whether some probability vector has its coordinates in the given intervals.
pub fn simplex_meets(intervals: &[Interval]) -> bool {
    let unit = Interval::unit();
    let clipped: Vec<Interval> = intervals.iter().map(|iv| iv.intersect(&unit)).collect();
    if clipped.iter().any(Interval::is_empty) {
        return false;
    }
    // The attainable sums form an interval; an end is attained iff every coordinate attains its end.
    let lo: Q = clipped.iter().map(|iv| &iv.lo).sum();
    let hi: Q = clipped.iter().map(|iv| &iv.hi).sum();
    let sums = Interval {
        lo,
        hi,
        lo_closed: clipped.iter().all(|iv| iv.lo_closed),
        hi_closed: clipped.iter().all(|iv| iv.hi_closed),
    };
    sums.contains(&Q::one())
}

/// Axis-parallel box in `([0,1]^k)^n`: one interval per factor and coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AxisBox {
    factors: Vec<Vec<Interval>>,
}

impl AxisBox {
    pub fn new(factors: Vec<Vec<Interval>>) -> Result<Self> {
        let k = factors.first().map_or(0, Vec::len);
        if k == 0 || factors.iter().any(|f| f.len() != k) {
            return Err(Error::DimensionMismatch("box factors must share k >= 1".into()));
        }
        Ok(AxisBox { factors })
    }

    pub fn whole(k: usize, n: usize) -> Self {
        AxisBox {
            factors: vec![vec![Interval::unit(); k]; n],
        }
    }

    pub fn factors(&self) -> &[Vec<Interval>] {
        &self.factors
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn k(&self) -> usize {
        self.factors[0].len()
    }

    pub fn interval(&self, slot: usize, coord: usize) -> &Interval {
        &self.factors[slot][coord]
    }

    pub fn intersect(&self, other: &Self) -> Self {
        AxisBox {
            factors: self
                .factors
                .iter()
                .zip(&other.factors)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.intersect(y)).collect())
                .collect(),
        }
    }

    pub fn hull(&self, other: &Self) -> Self {
        AxisBox {
            factors: self
                .factors
                .iter()
                .zip(&other.factors)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.hull(y)).collect())
                .collect(),
        }
    }

    /// Exact test of `box ∩ Δ_k^n ≠ ∅`.
    pub fn meets_cube(&self) -> bool {
        self.factors.iter().all(|f| simplex_meets(f))
    }

    /// Exact test of `box ∩ F_slot ≠ ∅` for the face `face` placed at `slot`.
    pub fn meets_face(&self, slot: usize, face: &FaceId) -> bool {
        if face.is_empty() {
            return false;
        }
        let zero = Interval::point(Q::zero());
        self.factors.iter().enumerate().all(|(s, f)| {
            if s == slot {
                let restricted: Vec<Interval> = f
                    .iter()
                    .enumerate()
                    .map(|(j, iv)| if face.contains(j) { iv.clone() } else { iv.intersect(&zero) })
                    .collect();
                simplex_meets(&restricted)
            } else {
                simplex_meets(f)
            }
        })
    }

    pub fn contains(&self, point: &[Vec<Q>]) -> bool {
        self.factors
            .iter()
            .zip(point)
            .all(|(f, x)| f.iter().zip(x).all(|(iv, v)| iv.contains(v)))
    }
}

/// Anything whose elements can be intersected and tested against faces of a generalized cube.
pub trait FaceGeometry {
    type Piece: Clone;
    fn k(&self) -> usize;
    fn n(&self) -> usize;
    fn len(&self) -> usize;
    fn element(&self, e: usize) -> Self::Piece;
    fn meet(&self, a: &Self::Piece, b: &Self::Piece) -> Self::Piece;
    /// Whether the piece contains a point of the cube.
    fn is_nonempty(&self, p: &Self::Piece) -> bool;
    fn meets_face(&self, p: &Self::Piece, slot: usize, face: &FaceId) -> bool;
}

/// Finite cover of `Δ_k^n` by boxes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxCover {
    k: usize,
    n: usize,
    boxes: Vec<AxisBox>,
}

impl BoxCover {
    pub fn new(k: usize, n: usize, boxes: Vec<AxisBox>) -> Result<Self> {
        if k < 1 || n < 1 || k > 64 {
            return Err(Error::InvalidParameter(format!("unsupported cube Δ_{k}^{n}")));
        }
        if boxes.iter().any(|b| b.k() != k || b.n() != n) {
            return Err(Error::DimensionMismatch(format!("every box must live in ([0,1]^{k})^{n}")));
        }
        Ok(BoxCover { k, n, boxes })
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Cover of `Δ_2` given by intervals for the first barycentric coordinate.
    pub fn of_segment(intervals: Vec<Interval>) -> Result<Self> {
        let boxes = intervals
            .into_iter()
            .map(|iv| AxisBox::new(vec![vec![iv, Interval::unit()]]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(2, 1, boxes)
    }

    /// `{[0,3/5), (2/5,1]}`.
    pub fn two_interval_segment() -> Self {
        Self::of_segment(vec![
            Interval::new(Q::zero(), q_frac(3, 5), true, false).unwrap(),
            Interval::new(q_frac(2, 5), Q::one(), false, true).unwrap(),
        ])
        .unwrap()
    }

    /// `{[0,2/5), (3/10,7/10), (3/5,1]}`.
    pub fn three_interval_segment() -> Self {
        Self::of_segment(vec![
            Interval::new(Q::zero(), q_frac(2, 5), true, false).unwrap(),
            Interval::new(q_frac(3, 10), q_frac(7, 10), false, false).unwrap(),
            Interval::new(q_frac(3, 5), Q::one(), false, true).unwrap(),
        ])
        .unwrap()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CoverDoc = serde_json::from_str(text)?;
        let boxes = doc
            .boxes
            .iter()
            .map(|b| {
                AxisBox::new(
                    b.iter()
                        .map(|f| f.iter().map(|s| parse_interval(s)).collect::<Result<Vec<_>>>())
                        .collect::<Result<Vec<_>>>()?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.k, doc.n, boxes)
    }

    pub fn to_json(&self) -> String {
        let doc = CoverDoc {
            k: self.k,
            n: self.n,
            boxes: self
                .boxes
                .iter()
                .map(|b| b.factors.iter().map(|f| f.iter().map(|iv| iv.to_string()).collect()).collect())
                .collect(),
        };
        serde_json::to_string(&doc).expect("cover serializes")
    }

    /// True when no box constrains the last barycentric coordinate of any factor.
    fn last_coordinate_free(&self) -> bool {
        let unit = Interval::unit();
        self.boxes
            .iter()
            .all(|b| b.factors.iter().all(|f| f[self.k - 1].intersect(&unit) == unit))
    }

    /// Representative points of the cells cut out of `Δ_k` by the endpoints of the
    /// first `k−1` coordinates, one per factor.
    fn factor_samples(&self, slot: usize) -> Vec<Vec<Q>> {
        let k = self.k;
        let axes: Vec<Vec<(Q, Q)>> = (0..k - 1)
            .map(|c| {
                let mut ends: BTreeSet<Q> = [Q::zero(), Q::one()].into();
                for b in &self.boxes {
                    let iv = &b.factors[slot][c];
                    for e in [&iv.lo, &iv.hi] {
                        if *e >= Q::zero() && *e <= Q::one() {
                            ends.insert(e.clone());
                        }
                    }
                }
                let ends: Vec<Q> = ends.into_iter().collect();
                // Each piece is (start, length): a single endpoint or an open gap.
                let mut pieces: Vec<(Q, Q)> = ends.iter().map(|e| (e.clone(), Q::zero())).collect();
                pieces.extend(ends.windows(2).map(|w| (w[0].clone(), &w[1] - &w[0])));
                pieces
            })
            .collect();
        let mut out = Vec::new();
        let mut choice = vec![0usize; k - 1];
        loop {
            let lo: Q = choice.iter().enumerate().map(|(c, &i)| &axes[c][i].0).sum();
            let gaps: Q = choice.iter().enumerate().map(|(c, &i)| &axes[c][i].1).sum();
            let has_gap = !gaps.is_zero();
            if lo < Q::one() || (lo == Q::one() && !has_gap) {
                // Step into every open gap by a common fraction small enough to stay in the simplex.
                let t = if has_gap {
                    (q_frac(1, 2)).min((Q::one() - &lo) / (q_int(2) * &gaps))
                } else {
                    Q::zero()
                };
                let mut point: Vec<Q> = choice
                    .iter()
                    .enumerate()
                    .map(|(c, &i)| &axes[c][i].0 + &axes[c][i].1 * &t)
                    .collect();
                let rest = Q::one() - point.iter().sum::<Q>();
                point.push(rest);
                out.push(point);
            }
            let mut c = 0;
            loop {
                if c == k - 1 {
                    return out;
                }
                choice[c] += 1;
                if choice[c] < axes[c].len() {
                    break;
                }
                choice[c] = 0;
                c += 1;
            }
        }
    }

    /// Checks that every arrangement cell of the cube lies in some box. Exact when
    /// the boxes leave the last coordinate of each factor unconstrained; otherwise
    /// it is a check on the sampled cells only, as recorded in the result.
    pub fn certify_covering(&self, max_points: usize) -> Result<CoveringCertificate> {
        let samples: Vec<Vec<Vec<Q>>> = (0..self.n).map(|s| self.factor_samples(s)).collect();
        let total: u128 = samples.iter().map(|s| s.len() as u128).product();
        if total > max_points as u128 {
            return Err(Error::Refused(format!("{total} covering sample points")));
        }
        let exact = self.last_coordinate_free();
        let mut idx = vec![0usize; self.n];
        let mut checked = 0usize;
        loop {
            let point: Vec<Vec<Q>> = idx.iter().enumerate().map(|(s, &i)| samples[s][i].clone()).collect();
            checked += 1;
            if !self.boxes.iter().any(|b| b.contains(&point)) {
                return Ok(CoveringCertificate {
                    covered: false,
                    exact,
                    points_checked: checked,
                    uncovered: Some(point),
                });
            }
            let mut s = 0;
            loop {
                if s == self.n {
                    return Ok(CoveringCertificate {
                        covered: true,
                        exact,
                        points_checked: checked,
                        uncovered: None,
                    });
                }
                idx[s] += 1;
                if idx[s] < samples[s].len() {
                    break;
                }
                idx[s] = 0;
                s += 1;
            }
        }
    }
}

impl FaceGeometry for BoxCover {
    type Piece = AxisBox;
    fn k(&self) -> usize {
        self.k
    }
    fn n(&self) -> usize {
        self.n
    }
    fn len(&self) -> usize {
        self.boxes.len()
    }
    fn element(&self, e: usize) -> AxisBox {
        self.boxes[e].clone()
    }
    fn meet(&self, a: &AxisBox, b: &AxisBox) -> AxisBox {
        a.intersect(b)
    }
    fn is_nonempty(&self, p: &AxisBox) -> bool {
        p.meets_cube()
    }
    fn meets_face(&self, p: &AxisBox, slot: usize, face: &FaceId) -> bool {
        p.meets_face(slot, face)
    }
}

#[derive(Serialize, Deserialize)]
struct CoverDoc {
    k: usize,
    n: usize,
    boxes: Vec<Vec<Vec<String>>>,
}

/// Parses `[a,b]`, `(a,b)`, `[a,b)` or `(a,b]` with exact rational ends.
pub fn parse_interval(s: &str) -> Result<Interval> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("malformed interval {s:?}"));
    let lo_closed = match s.chars().next() {
        Some('[') => true,
        Some('(') => false,
        _ => return Err(bad()),
    };
    let hi_closed = match s.chars().last() {
        Some(']') => true,
        Some(')') => false,
        _ => return Err(bad()),
    };
    let (a, b) = s[1..s.len() - 1].split_once(',').ok_or_else(bad)?;
    Interval::new(parse_q(a)?, parse_q(b)?, lo_closed, hi_closed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringCertificate {
    pub covered: bool,
    /// Whether the sampled cells exhaust the arrangement.
    pub exact: bool,
    pub points_checked: usize,
    pub uncovered: Option<Vec<Vec<Q>>>,
}

/// Maximum number of elements with a common point, minus one (`−1` for an empty family).
pub fn cover_order<G: FaceGeometry>(geom: &G) -> i64 {
    fn dfs<G: FaceGeometry>(g: &G, start: usize, piece: &G::Piece, size: usize, best: &mut usize) {
        *best = (*best).max(size);
        for e in start..g.len() {
            if size + (g.len() - e) <= *best {
                return;
            }
            let next = g.meet(piece, &g.element(e));
            if g.is_nonempty(&next) {
                dfs(g, e + 1, &next, size + 1, best);
            }
        }
    }
    let mut best = 0;
    for e in 0..geom.len() {
        if geom.len() - e <= best {
            break;
        }
        let piece = geom.element(e);
        if geom.is_nonempty(&piece) {
            dfs(geom, e + 1, &piece, 1, &mut best);
        }
    }
    best as i64 - 1
}

/// A witness that a cover is not separating.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeparationViolation {
    pub slot: usize,
    /// Indices of the subfamily `(U_j)`.
    pub family: Vec<usize>,
    /// Vertex `v_j` omitted by the face `F^j` chosen for each member, in family order.
    pub omitted: Vec<usize>,
    /// Index set of the opposite face `V` that the common intersection reaches.
    pub opposite_face: Vec<usize>,
}

impl fmt::Display for SeparationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "slot {}: elements {:?} meeting faces omitting {:?} jointly reach the opposite face {:?}",
            self.slot, self.family, self.omitted, self.opposite_face
        )
    }
}

/// Exact separating check; returns the first violation in (slot, subfamily) order.
pub fn is_separating<G: FaceGeometry>(geom: &G) -> Option<SeparationViolation> {
    let k = geom.k();
    for slot in 0..geom.n() {
        // Vertices v such that element e meets the facet omitting v.
        let touch: Vec<Vec<usize>> = (0..geom.len())
            .map(|e| {
                let piece = geom.element(e);
                (0..k).filter(|&v| geom.meets_face(&piece, slot, &FaceId::facet(k, v))).collect()
            })
            .collect();
        let active: Vec<usize> = (0..geom.len()).filter(|&e| !touch[e].is_empty()).collect();
        let mut family = Vec::new();
        // Achievable vertex sets, each with one witnessing choice of omitted vertices.
        let start: Vec<(u64, Vec<usize>)> = vec![(0, Vec::new())];
        if let Some(v) = separation_dfs(geom, slot, &active, &touch, 0, None, &start, &mut family) {
            return Some(v);
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn separation_dfs<G: FaceGeometry>(
    geom: &G,
    slot: usize,
    active: &[usize],
    touch: &[Vec<usize>],
    from: usize,
    piece: Option<&G::Piece>,
    achievable: &[(u64, Vec<usize>)],
    family: &mut Vec<usize>,
) -> Option<SeparationViolation> {
    let k = geom.k();
    for a in from..active.len() {
        let e = active[a];
        let element = geom.element(e);
        let next = match piece {
            Some(p) => geom.meet(p, &element),
            None => element,
        };
        if !geom.is_nonempty(&next) {
            continue;
        }
        let mut sets: Vec<(u64, Vec<usize>)> = Vec::new();
        for (mask, choice) in achievable {
            for &v in &touch[e] {
                let m = mask | 1 << v;
                if !sets.iter().any(|(s, _)| *s == m) {
                    let mut c = choice.clone();
                    c.push(v);
                    sets.push((m, c));
                }
            }
        }
        sets.sort_by_key(|(m, _)| *m);
        family.push(e);
        for (mask, choice) in &sets {
            if geom.meets_face(&next, slot, &FaceId::from_mask(k, *mask)) {
                let violation = SeparationViolation {
                    slot,
                    family: family.clone(),
                    omitted: choice.clone(),
                    opposite_face: FaceId::from_mask(k, *mask).indices(),
                };
                family.pop();
                return Some(violation);
            }
        }
        let found = separation_dfs(geom, slot, active, touch, a + 1, Some(&next), &sets, family);
        family.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Finite sample of a generalized cube (read through an embedding) covered by
/// finite sets of sample indices.
#[derive(Clone, Debug)]
pub struct SampledCover {
    k: usize,
    n: usize,
    /// Support of each factor of each sample point, as vertex masks.
    supports: Vec<Vec<u64>>,
    elements: Vec<Vec<u64>>,
    words: usize,
}

impl SampledCover {
    /// `supports[p][slot]` is the vertex mask of factor `slot` of sample `p`;
    /// `elements` lists the sample indices in each cover element.
    pub fn new(k: usize, n: usize, supports: Vec<Vec<u64>>, elements: &[Vec<usize>]) -> Result<Self> {
        let words = supports.len().div_ceil(64).max(1);
        if supports.iter().any(|s| s.len() != n) {
            return Err(Error::DimensionMismatch("sample supports must have one mask per slot".into()));
        }
        let mut bits = Vec::with_capacity(elements.len());
        for el in elements {
            let mut b = vec![0u64; words];
            for &p in el {
                if p >= supports.len() {
                    return Err(Error::InvalidParameter(format!("sample {p} out of range")));
                }
                b[p / 64] |= 1 << (p % 64);
            }
            bits.push(b);
        }
        Ok(SampledCover {
            k,
            n,
            supports,
            elements: bits,
            words,
        })
    }

    /// Whether every sample lies in some element.
    pub fn covers(&self) -> bool {
        (0..self.supports.len()).all(|p| self.elements.iter().any(|b| b[p / 64] >> (p % 64) & 1 == 1))
    }

    fn members<'a>(&'a self, piece: &'a [u64]) -> impl Iterator<Item = usize> + 'a {
        (0..self.supports.len()).filter(move |&p| piece[p / 64] >> (p % 64) & 1 == 1)
    }
}

impl FaceGeometry for SampledCover {
    type Piece = Vec<u64>;
    fn k(&self) -> usize {
        self.k
    }
    fn n(&self) -> usize {
        self.n
    }
    fn len(&self) -> usize {
        self.elements.len()
    }
    fn element(&self, e: usize) -> Vec<u64> {
        self.elements[e].clone()
    }
    fn meet(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        (0..self.words).map(|w| a[w] & b[w]).collect()
    }
    fn is_nonempty(&self, p: &Vec<u64>) -> bool {
        p.iter().any(|&w| w != 0)
    }
    fn meets_face(&self, p: &Vec<u64>, slot: usize, face: &FaceId) -> bool {
        self.members(p).any(|s| self.supports[s][slot] & !face.mask() == 0)
    }
}

/// One proposal of the cover search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchStep {
    pub iteration: usize,
    pub mv: &'static str,
    /// Order of the proposed cover when it is a separating cover, else `None`.
    pub order: Option<i64>,
    pub covering: bool,
    pub separating: bool,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub initial_order: i64,
    pub best_order: i64,
    pub witness: BoxCover,
    pub budget_exhausted: bool,
    pub trace: Vec<SearchStep>,
}

/// Separating grid cover of `Δ_k^n`: in every factor, coordinates `0..k−1` are cut into
/// `2k−1` overlapping cells of width below `1/(2k−2)` and the last coordinate is free.
/// A cell touching the facet omitting `v` keeps `x_v` below its width, so no subfamily
/// can reach a face spanned by the touched vertices.
pub fn initial_grid_cover(k: usize, n: usize) -> Result<BoxCover> {
    if k < 2 || n < 1 || k * n > 8 {
        return Err(Error::InvalidParameter(format!("grid cover needs k >= 2, n >= 1, kn <= 8 (got k={k}, n={n})")));
    }
    let g = 2 * k as i64 - 1;
    let eta = q_frac(1, 4 * g * (g - 1));
    let cells: Vec<Interval> = (0..g)
        .map(|a| {
            let lo = q_frac(a, g) - &eta;
            let hi = q_frac(a + 1, g) + &eta;
            Interval::new(
                lo.clone().max(Q::zero()),
                hi.clone().min(Q::one()),
                a == 0,
                a == g - 1,
            )
            .expect("grid cell nonempty")
        })
        .collect();
    // Per-factor cells meeting Δ_k, as interval lists.
    let mut factor_cells: Vec<Vec<Interval>> = Vec::new();
    let mut idx = vec![0usize; k - 1];
    loop {
        let mut f: Vec<Interval> = idx.iter().map(|&i| cells[i].clone()).collect();
        f.push(Interval::unit());
        if simplex_meets(&f) {
            factor_cells.push(f);
        }
        let mut c = 0;
        loop {
            if c == k - 1 {
                break;
            }
            idx[c] += 1;
            if idx[c] < cells.len() {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
        if c == k - 1 {
            break;
        }
    }
    let mut boxes = Vec::new();
    let mut pick = vec![0usize; n];
    loop {
        boxes.push(AxisBox::new(pick.iter().map(|&i| factor_cells[i].clone()).collect())?);
        let mut s = 0;
        loop {
            if s == n {
                return BoxCover::new(k, n, boxes);
            }
            pick[s] += 1;
            if pick[s] < factor_cells.len() {
                break;
            }
            pick[s] = 0;
            s += 1;
        }
    }
}

const COVER_SAMPLE_LIMIT: usize = 200_000;

/// Local search for separating box covers of small order. Moves delete a box,
/// merge two boxes into their hull, or shift one endpoint of a free coordinate
/// along the grid lattice; a proposal is accepted when it still covers, is
/// separating, and does not raise the order. The result is an upper bound on
/// the minimal order over separating covers, nothing more.
pub fn search_min_separating_order(k: usize, n: usize, budget: usize, seed: u64) -> Result<SearchResult> {
    let initial = initial_grid_cover(k, n)?;
    let initial_order = cover_order(&initial);
    let g = 2 * k as i64 - 1;
    let unit = q_frac(1, 4 * g * (g - 1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = initial.clone();
    let mut current_order = initial_order;
    let mut best = (initial_order, initial.clone());
    let mut trace = Vec::with_capacity(budget);
    for iteration in 0..budget {
        let boxes = current.boxes().to_vec();
        let (mv, proposal) = match rng.gen_range(0..3) {
            0 if boxes.len() > 1 => {
                let mut b = boxes;
                b.remove(rng.gen_range(0..b.len()));
                ("delete", b)
            }
            1 if boxes.len() > 1 => {
                let i = rng.gen_range(0..boxes.len());
                let mut j = rng.gen_range(0..boxes.len() - 1);
                if j >= i {
                    j += 1;
                }
                let hull = boxes[i].hull(&boxes[j]);
                let mut b: Vec<AxisBox> = boxes
                    .iter()
                    .enumerate()
                    .filter(|(x, _)| *x != i && *x != j)
                    .map(|(_, b)| b.clone())
                    .collect();
                b.push(hull);
                ("merge", b)
            }
            _ => {
                let mut b = boxes;
                let i = rng.gen_range(0..b.len());
                let slot = rng.gen_range(0..n);
                let coord = rng.gen_range(0..k - 1);
                let step = if rng.gen_bool(0.5) { unit.clone() } else { -unit.clone() };
                let iv = &mut b[i].factors[slot][coord];
                if rng.gen_bool(0.5) {
                    iv.lo = (&iv.lo + &step).max(Q::zero());
                } else {
                    iv.hi = (&iv.hi + &step).min(Q::one());
                }
                if iv.is_empty() {
                    trace.push(SearchStep {
                        iteration,
                        mv: "nudge",
                        order: None,
                        covering: false,
                        separating: false,
                        accepted: false,
                    });
                    continue;
                }
                ("nudge", b)
            }
        };
        let candidate = BoxCover::new(k, n, proposal)?;
        let covering = candidate.certify_covering(COVER_SAMPLE_LIMIT)?.covered;
        let separating = covering && is_separating(&candidate).is_none();
        let order = if separating { Some(cover_order(&candidate)) } else { None };
        let accepted = order.is_some_and(|o| o <= current_order);
        trace.push(SearchStep {
            iteration,
            mv,
            order,
            covering,
            separating,
            accepted,
        });
        if accepted {
            current_order = order.unwrap();
            current = candidate;
            if current_order < best.0 || (current_order == best.0 && current.boxes().len() < best.1.boxes().len()) {
                best = (current_order, current.clone());
            }
        }
    }
    Ok(SearchResult {
        initial_order,
        best_order: best.0,
        witness: best.1,
        budget_exhausted: true,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: (i64, i64), hi: (i64, i64), lc: bool, hc: bool) -> Interval {
        Interval::new(q_frac(lo.0, lo.1), q_frac(hi.0, hi.1), lc, hc).unwrap()
    }

    #[test]
    fn face_examples() {
        let a = FaceId::new(3, [0, 1]).unwrap();
        let b = FaceId::new(3, [1, 2]).unwrap();
        assert_eq!(a.meet(&b).unwrap().indices(), vec![1]);
        assert_eq!(FaceId::facet(3, 2).opposite().indices(), vec![2]);
        let empty = FaceId::new(2, [0]).unwrap().meet(&FaceId::new(2, [1]).unwrap()).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.opposite(), FaceId::full(2));
        let mixed = face_meet(&[
            SlotFace { slot: 0, face: a },
            SlotFace { slot: 1, face: b },
        ]);
        assert!(mixed.is_err());
        assert!(FaceId::new(3, []).is_err());
        // m distinct facets meet in a face with k − m vertices.
        let meet = face_meet(&[
            SlotFace { slot: 0, face: FaceId::facet(4, 0) },
            SlotFace { slot: 0, face: FaceId::facet(4, 1) },
        ])
        .unwrap();
        assert_eq!(meet.face.len(), 2);
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_m(&q_frac(1, 8), 1, &Q::one()).unwrap(), q_frac(1, 256));
        assert_eq!(epsilon_m(&q_frac(1, 4), 0, &Q::one()).unwrap(), q_frac(1, 32));
        assert_eq!(epsilon_m(&q_frac(1, 4), 1, &Q::one()).unwrap(), q_frac(4, 256));
        assert!(epsilon_m(&Q::zero(), 1, &Q::one()).is_err());
    }

    #[test]
    fn simplex_feasibility_respects_open_ends() {
        // x0 ∈ [0, 1/2), x1 ∈ [0, 1/2): sums stay below 1.
        assert!(!simplex_meets(&[iv((0, 1), (1, 2), true, false), iv((0, 1), (1, 2), true, false)]));
        assert!(simplex_meets(&[iv((0, 1), (1, 2), true, true), iv((0, 1), (1, 2), true, true)]));
        assert!(simplex_meets(&[iv((0, 1), (1, 2), true, false), iv((0, 1), (3, 5), true, false)]));
    }

    #[test]
    fn segment_examples() {
        let two = BoxCover::two_interval_segment();
        assert_eq!(cover_order(&two), 1);
        let v = is_separating(&two).expect("violation");
        assert_eq!(v.family, vec![0, 1]);
        assert_eq!(v.opposite_face, vec![0, 1]);
        let three = BoxCover::three_interval_segment();
        assert_eq!(cover_order(&three), 1);
        assert!(is_separating(&three).is_none());
        assert!(three.certify_covering(1000).unwrap().covered);
        let pairwise = BoxCover::of_segment(vec![
            iv((0, 1), (3, 5), true, false),
            iv((1, 5), (4, 5), false, false),
            iv((2, 5), (1, 1), false, true),
        ])
        .unwrap();
        assert_eq!(cover_order(&pairwise), 2);
    }

    #[test]
    fn vacuous_separation() {
        // Every element stays inside the open interior of Δ_3, so none meets a facet.
        let inner = AxisBox::new(vec![vec![iv((1, 10), (1, 2), false, false); 3]]).unwrap();
        let cover = BoxCover::new(3, 1, vec![inner.clone(), inner]).unwrap();
        assert!(is_separating(&cover).is_none());
    }

    #[test]
    fn uncovered_gap_is_found() {
        let gap = BoxCover::of_segment(vec![iv((0, 1), (1, 2), true, false), iv((1, 2), (1, 1), false, true)]).unwrap();
        let cert = gap.certify_covering(1000).unwrap();
        assert!(!cert.covered && cert.exact);
        assert_eq!(cert.uncovered.unwrap()[0][0], q_frac(1, 2));
    }

    #[test]
    fn initial_grid_covers_are_separating() {
        for (k, n) in [(2, 1), (2, 2), (3, 1), (2, 3), (4, 1)] {
            let cover = initial_grid_cover(k, n).unwrap();
            assert!(cover.certify_covering(COVER_SAMPLE_LIMIT).unwrap().covered, "k={k} n={n}");
            assert!(is_separating(&cover).is_none(), "k={k} n={n}");
        }
        assert_eq!(cover_order(&initial_grid_cover(2, 1).unwrap()), 1);
        assert_eq!(cover_order(&initial_grid_cover(2, 2).unwrap()), 3);
    }

    #[test]
    fn search_examples() {
        let zero = search_min_separating_order(2, 1, 0, 1).unwrap();
        assert_eq!(zero.best_order, zero.initial_order);
        assert_eq!(zero.witness, initial_grid_cover(2, 1).unwrap());
        let one = search_min_separating_order(2, 1, 200, 3).unwrap();
        assert_eq!(one.best_order, 1);
        assert!(is_separating(&one.witness).is_none());
        let two = search_min_separating_order(2, 2, 100, 5).unwrap();
        assert!(two.best_order <= two.initial_order);
        assert!(is_separating(&two.witness).is_none());
        assert_eq!(cover_order(&two.witness), two.best_order);
    }

    #[test]
    fn json_round_trip() {
        let cover = BoxCover::three_interval_segment();
        assert_eq!(BoxCover::from_json(&cover.to_json()).unwrap(), cover);
        assert!(parse_interval("[1/2,1/4]").is_err());
        assert!(parse_interval("1/2,1").is_err());
    }

    #[test]
    fn sampled_cover_matches_definition() {
        // Δ_2 sampled at the two vertices and the centre.
        let supports = vec![vec![0b01], vec![0b11], vec![0b10]];
        let sep = SampledCover::new(2, 1, supports.clone(), &[vec![0], vec![1], vec![2]]).unwrap();
        assert!(sep.covers());
        assert!(is_separating(&sep).is_none());
        let fat = SampledCover::new(2, 1, supports, &[vec![0, 1], vec![1, 2]]).unwrap();
        assert!(is_separating(&fat).is_some());
        assert_eq!(cover_order(&fat), 1);
    }

    fn arb_interval() -> impl Strategy<Value = Interval> {
        (0i64..=10, 0i64..=10, any::<bool>(), any::<bool>()).prop_filter_map("nonempty", |(a, b, lc, hc)| {
            let (lo, hi) = (a.min(b), a.max(b));
            Interval::new(q_frac(lo, 10), q_frac(hi, 10), lc, hc).ok()
        })
    }

    /// Boxes constrain the first k−1 coordinates; the last one is free.
    fn arb_cover(k: usize, n: usize, max: usize) -> impl Strategy<Value = BoxCover> {
        prop::collection::vec(prop::collection::vec(prop::collection::vec(arb_interval(), k - 1), n), 1..=max).prop_map(
            move |raw| {
                let boxes = raw
                    .into_iter()
                    .map(|fs| {
                        AxisBox::new(
                            fs.into_iter()
                                .map(|mut f| {
                                    f.push(Interval::unit());
                                    f
                                })
                                .collect(),
                        )
                        .unwrap()
                    })
                    .collect();
                BoxCover::new(k, n, boxes).unwrap()
            },
        )
    }

    /// Multiplicity oracle over arrangement cells of the free coordinates. All endpoints are
    /// multiples of 1/10, so stepping 1/1000 into each open gap stays inside any cell that
    /// meets the simplex.
    fn order_oracle(cover: &BoxCover) -> i64 {
        let (k, n) = (cover.k(), cover.n());
        let mut values: Vec<Q> = Vec::new();
        for t in 0..=10 {
            values.push(q_frac(t, 10));
            if t < 10 {
                values.push(q_frac(100 * t + 1, 1000));
            }
        }
        let per_factor: Vec<Vec<Q>> = {
            let mut out = Vec::new();
            let mut idx = vec![0usize; k - 1];
            'outer: loop {
                let mut p: Vec<Q> = idx.iter().map(|&i| values[i].clone()).collect();
                let s: Q = p.iter().sum();
                if s <= Q::one() {
                    p.push(Q::one() - s);
                    out.push(p);
                }
                for c in 0..k - 1 {
                    idx[c] += 1;
                    if idx[c] < values.len() {
                        continue 'outer;
                    }
                    idx[c] = 0;
                }
                break;
            }
            out
        };
        let mut best = 0;
        let mut pick = vec![0usize; n];
        'points: loop {
            let point: Vec<Vec<Q>> = pick.iter().map(|&i| per_factor[i].clone()).collect();
            best = best.max(cover.boxes().iter().filter(|b| b.contains(&point)).count());
            for s in 0..n {
                pick[s] += 1;
                if pick[s] < per_factor.len() {
                    continue 'points;
                }
                pick[s] = 0;
            }
            break;
        }
        best as i64 - 1
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn order_matches_oracle_segment(cover in arb_cover(2, 1, 10)) {
            prop_assert_eq!(cover_order(&cover), order_oracle(&cover));
        }

        #[test]
        fn order_matches_oracle_square(cover in arb_cover(2, 2, 8)) {
            prop_assert_eq!(cover_order(&cover), order_oracle(&cover));
        }

        #[test]
        fn order_matches_oracle_triangle(cover in arb_cover(3, 1, 8)) {
            prop_assert_eq!(cover_order(&cover), order_oracle(&cover));
        }

        #[test]
        fn opposite_is_involutive_and_meet_commutes(k in 1usize..8, a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
            let (fa, fb, fc) = (FaceId::from_mask(k, a), FaceId::from_mask(k, b), FaceId::from_mask(k, c));
            prop_assert_eq!(fa.opposite().opposite(), fa);
            prop_assert_eq!(fa.meet(&fb).unwrap(), fb.meet(&fa).unwrap());
            prop_assert_eq!(fa.meet(&fb).unwrap().meet(&fc).unwrap(), fa.meet(&fb.meet(&fc).unwrap()).unwrap());
        }

        #[test]
        fn splitting_preserves_separation(cut in 1i64..10, which in 0usize..3) {
            let cover = BoxCover::three_interval_segment();
            let b = &cover.boxes()[which];
            let x = q_frac(cut, 10);
            let first = &b.factors()[0][0];
            prop_assume!(first.lo < x && x < first.hi);
            let left = Interval::new(first.lo.clone(), x.clone(), first.lo_closed, true).unwrap();
            let right = Interval::new(x, first.hi.clone(), true, first.hi_closed).unwrap();
            let mut boxes = cover.boxes().to_vec();
            boxes.remove(which);
            boxes.push(AxisBox::new(vec![vec![left, Interval::unit()]]).unwrap());
            boxes.push(AxisBox::new(vec![vec![right, Interval::unit()]]).unwrap());
            let split = BoxCover::new(2, 1, boxes).unwrap();
            prop_assert!(is_separating(&split).is_none());
        }
    }
}
