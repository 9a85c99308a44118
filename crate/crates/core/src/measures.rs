//! Finitely supported probability measures and the embeddings of simplices,
//! generalized cubes and point tuples into measure space.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{fmt_q, parse_q};
use crate::spaces::{Point, SystemKind, SystemSpec};
use crate::{Error, Result, Q};

/// Probability measure with finitely many atoms and exact rational weights.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiscreteMeasure {
    atoms: BTreeMap<Point, Q>,
}

impl DiscreteMeasure {
    /// Distinct support points with positive weights summing to exactly one.
    pub fn new(atoms: impl IntoIterator<Item = (Point, Q)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (p, w) in atoms {
            if !w.is_positive() {
                return Err(Error::InvalidMeasure(format!("weight {} at {p} is not positive", fmt_q(&w))));
            }
            if map.insert(p.clone(), w).is_some() {
                return Err(Error::InvalidMeasure(format!("support point {p} repeated")));
            }
        }
        Self::checked(map)
    }

    /// Sums weights of repeated points and drops zero weights before validating.
    pub fn from_masses(atoms: impl IntoIterator<Item = (Point, Q)>) -> Result<Self> {
        let mut map: BTreeMap<Point, Q> = BTreeMap::new();
        for (p, w) in atoms {
            if w.is_negative() {
                return Err(Error::InvalidMeasure(format!("negative weight at {p}")));
            }
            *map.entry(p).or_insert_with(Q::zero) += w;
        }
        map.retain(|_, w| !w.is_zero());
        Self::checked(map)
    }

    fn checked(atoms: BTreeMap<Point, Q>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        let total: Q = atoms.values().sum();
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!("weights sum to {}, not 1", fmt_q(&total))));
        }
        Ok(DiscreteMeasure { atoms })
    }

    pub fn dirac(p: Point) -> Self {
        DiscreteMeasure {
            atoms: BTreeMap::from([(p, Q::one())]),
        }
    }

    pub fn uniform(points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let pts: BTreeSet<Point> = points.into_iter().collect();
        let w = Q::new(1.into(), (pts.len().max(1) as i64).into());
        Self::new(pts.into_iter().map(|p| (p, w.clone())))
    }

    pub fn atoms(&self) -> &BTreeMap<Point, Q> {
        &self.atoms
    }

    pub fn support(&self) -> impl Iterator<Item = &Point> {
        self.atoms.keys()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> Q {
        self.atoms.values().sum()
    }

    pub fn weight(&self, p: &Point) -> Q {
        self.atoms.get(p).cloned().unwrap_or_else(Q::zero)
    }

    /// `μ(S)`.
    pub fn mass_where(&self, mut pred: impl FnMut(&Point) -> bool) -> Q {
        self.atoms.iter().filter(|(p, _)| pred(p)).map(|(_, w)| w).sum()
    }

    pub fn mass_in(&self, set: &BTreeSet<Point>) -> Q {
        self.mass_where(|p| set.contains(p))
    }

    /// `λμ + (1−λ)ν`.
    pub fn mix(lambda: &Q, mu: &Self, nu: &Self) -> Result<Self> {
        if lambda.is_negative() || *lambda > Q::one() {
            return Err(Error::InvalidParameter(format!("mixing weight {} outside [0,1]", fmt_q(lambda))));
        }
        let rest = Q::one() - lambda;
        Self::from_masses(
            mu.atoms
                .iter()
                .map(|(p, w)| (p.clone(), w * lambda))
                .chain(nu.atoms.iter().map(|(p, w)| (p.clone(), w * &rest))),
        )
    }

    /// `T_* μ`, merging the weights of colliding images.
    pub fn pushforward(&self, spec: &SystemSpec) -> Result<Self> {
        self.pushforward_n(spec, 1)
    }

    /// `T_*^k μ`.
    pub fn pushforward_n(&self, spec: &SystemSpec, k: usize) -> Result<Self> {
        if k == 0 {
            return Ok(self.clone());
        }
        let images = self
            .atoms
            .iter()
            .map(|(p, w)| Ok((spec.iterate(p, k)?, w.clone())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_masses(images)
    }

    pub fn from_json(spec: &SystemSpec, text: &str) -> Result<Self> {
        let doc: MeasureDoc = serde_json::from_str(text)?;
        if doc.support.len() != doc.weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} support points but {} weights",
                doc.support.len(),
                doc.weights.len()
            )));
        }
        let atoms = doc
            .support
            .iter()
            .zip(&doc.weights)
            .map(|(p, w)| Ok((spec.parse_point(p)?, parse_q(w)?)))
            .collect::<Result<Vec<_>>>()?;
        let mu = Self::new(atoms)?;
        if let Some(depth) = spec.depth() {
            if let Some(p) = mu.support().find(|p| p.as_word().is_some_and(|w| w.len() != depth)) {
                return Err(Error::MissingPoint(format!("{} has the wrong depth", spec.label(p))));
            }
        }
        Ok(mu)
    }

    pub fn to_json(&self, spec: &SystemSpec) -> String {
        let doc = MeasureDoc {
            support: self.atoms.keys().map(|p| spec.label(p)).collect(),
            weights: self.atoms.values().map(fmt_q).collect(),
        };
        serde_json::to_string(&doc).expect("measure serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureDoc {
    support: Vec<String>,
    weights: Vec<String>,
}

/// Normalized weighted Dirac sum `Σ k_i δ_{x_i} / Σ k_i`. Default weights are `k_i = 2^{i−1}`.
pub fn dirac_embedding(points: &[Point], weights: Option<&[u64]>) -> Result<DiscreteMeasure> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidParameter("dirac embedding needs at least one point".into()));
    }
    let k: Vec<u64> = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::DimensionMismatch(format!("{n} points but {} weights", w.len())));
            }
            if w.contains(&0) {
                return Err(Error::InvalidParameter("embedding weights must be positive".into()));
            }
            check_subset_sums(w)?;
            w.to_vec()
        }
        None => {
            if n > 62 {
                return Err(Error::Refused(format!("default weights overflow for n = {n}")));
            }
            (0..n).map(|i| 1u64 << i).collect()
        }
    };
    let total: u128 = k.iter().map(|&x| x as u128).sum();
    let total = Q::from_integer((total as i128).into());
    DiscreteMeasure::from_masses(
        points
            .iter()
            .zip(&k)
            .map(|(p, &ki)| (p.clone(), Q::from_integer(ki.into()) / &total)),
    )
}

/// Exhaustive check that all `2^n` subset sums are distinct; reports a colliding pair.
pub fn check_subset_sums(k: &[u64]) -> Result<()> {
    if k.len() > 24 {
        return Err(Error::Refused(format!("exhaustive subset-sum check over {} weights", k.len())));
    }
    let mut seen: HashMap<u128, u32> = HashMap::with_capacity(1 << k.len());
    for mask in 0u32..(1 << k.len()) {
        let sum: u128 = (0..k.len()).filter(|i| mask >> i & 1 == 1).map(|i| k[i] as u128).sum();
        if let Some(&other) = seen.get(&sum) {
            let members = |m: u32| (0..k.len()).filter(|i| m >> i & 1 == 1).collect();
            return Err(Error::SubsetSumCollision {
                left: members(other),
                right: members(mask),
            });
        }
        seen.insert(sum, mask);
    }
    Ok(())
}

/// Probability vector in `Δ_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimplexPoint(Vec<Q>);

impl SimplexPoint {
    pub fn new(coords: Vec<Q>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("simplex point needs k >= 1".into()));
        }
        if coords.iter().any(Signed::is_negative) {
            return Err(Error::InvalidParameter("negative simplex coordinate".into()));
        }
        let total: Q = coords.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidParameter(format!("coordinates sum to {}", fmt_q(&total))));
        }
        Ok(SimplexPoint(coords))
    }

    pub fn vertex(k: usize, i: usize) -> Self {
        let mut c = vec![Q::zero(); k];
        c[i] = Q::one();
        SimplexPoint(c)
    }

    /// Uniform vector on the index set `subset` (nonempty).
    pub fn uniform_on(k: usize, subset: &BTreeSet<usize>) -> Result<Self> {
        if subset.is_empty() || subset.iter().any(|&i| i >= k) {
            return Err(Error::InvalidParameter("uniform vector needs a nonempty index set".into()));
        }
        let w = Q::new(1.into(), (subset.len() as i64).into());
        Ok(SimplexPoint((0..k).map(|i| if subset.contains(&i) { w.clone() } else { Q::zero() }).collect()))
    }

    /// `* = (1/k, …, 1/k)`.
    pub fn center(k: usize) -> Self {
        Self::uniform_on(k, &(0..k).collect()).expect("k >= 1")
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Q] {
        &self.0
    }

    /// Indices with positive coordinate.
    pub fn support(&self) -> BTreeSet<usize> {
        (0..self.0.len()).filter(|&i| self.0[i].is_positive()).collect()
    }

    /// `λu + (1−λ)v`.
    pub fn mix(lambda: &Q, u: &Self, v: &Self) -> Result<Self> {
        if u.k() != v.k() {
            return Err(Error::DimensionMismatch("simplices of different dimension".into()));
        }
        let rest = Q::one() - lambda;
        Self::new(u.0.iter().zip(&v.0).map(|(a, b)| a * lambda + b * &rest).collect())
    }
}

/// Point of the generalized cube `Δ_k^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CubePoint(Vec<SimplexPoint>);

impl CubePoint {
    pub fn new(factors: Vec<SimplexPoint>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::InvalidParameter("cube point needs n >= 1".into()));
        };
        if factors.iter().any(|f| f.k() != first.k()) {
            return Err(Error::DimensionMismatch("cube factors must share k".into()));
        }
        Ok(CubePoint(factors))
    }

    pub fn factors(&self) -> &[SimplexPoint] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn k(&self) -> usize {
        self.0[0].k()
    }

    pub fn with_factor(&self, slot: usize, f: SimplexPoint) -> Result<Self> {
        let mut factors = self.0.clone();
        *factors
            .get_mut(slot)
            .ok_or_else(|| Error::InvalidParameter(format!("slot {slot} out of range")))? = f;
        Self::new(factors)
    }
}

/// Index of a multi-index in lexicographic order, first factor most significant.
pub fn multi_index_rank(idx: &[usize], k: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * k + i)
}

pub fn multi_index_unrank(mut rank: usize, k: usize, n: usize) -> Vec<usize> {
    let mut idx = vec![0; n];
    for slot in (0..n).rev() {
        idx[slot] = rank % k;
        rank /= k;
    }
    idx
}

/// Sparse product weights `(𝐢, ∏_m t_{m,i_m})` over the positive coordinates, lexicographic in `𝐢`.
fn product_weights(t: &CubePoint) -> Vec<(Vec<usize>, Q)> {
    let mut out = vec![(Vec::new(), Q::one())];
    for f in t.factors() {
        let mut next = Vec::with_capacity(out.len() * f.k());
        for (idx, w) in &out {
            for (i, c) in f.coords().iter().enumerate() {
                if c.is_positive() {
                    let mut j = idx.clone();
                    j.push(i);
                    next.push((j, w * c));
                }
            }
        }
        out = next;
    }
    out
}

/// `Θ(t)`: the `k^n`-vector of coordinate products.
pub fn theta(t: &CubePoint) -> Result<SimplexPoint> {
    let (k, n) = (t.k(), t.n());
    let len = (k as u128).checked_pow(n as u32).filter(|&l| l <= 1 << 22);
    let Some(len) = len else {
        return Err(Error::Refused(format!("Θ into Δ_{{{k}^{n}}} is too large")));
    };
    let mut coords = vec![Q::zero(); len as usize];
    for (idx, w) in product_weights(t) {
        coords[multi_index_rank(&idx, k)] = w;
    }
    SimplexPoint::new(coords)
}

/// Points `x_𝐢` indexed by `𝐢 ∈ ⟦k⟧^{slots}`, stored in lexicographic order of `𝐢`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnchorFamily {
    k: usize,
    slots: Vec<usize>,
    anchors: Vec<Point>,
}

impl AnchorFamily {
    /// `slots` are the labels of the cube factors (block indices `k ∈ I_n^m`).
    pub fn new(k: usize, slots: Vec<usize>, anchors: Vec<Point>) -> Result<Self> {
        let expected = (k as u128).checked_pow(slots.len() as u32);
        if k == 0 || expected != Some(anchors.len() as u128) {
            return Err(Error::DimensionMismatch(format!(
                "{} anchors for k = {k} and {} slots",
                anchors.len(),
                slots.len()
            )));
        }
        let distinct: BTreeSet<&Point> = anchors.iter().collect();
        if distinct.len() != anchors.len() {
            return Err(Error::InvalidParameter("anchors must be pairwise distinct".into()));
        }
        Ok(AnchorFamily { k, slots, anchors })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn anchors(&self) -> &[Point] {
        &self.anchors
    }

    pub fn anchor(&self, idx: &[usize]) -> &Point {
        &self.anchors[multi_index_rank(idx, self.k)]
    }

    /// `S_{Ξ(F_slot)}`: anchors whose index at `slot` lies in the face index set.
    pub fn face_support(&self, slot: usize, face: &BTreeSet<usize>) -> BTreeSet<Point> {
        self.anchors
            .iter()
            .enumerate()
            .filter(|(r, _)| face.contains(&multi_index_unrank(*r, self.k, self.n())[slot]))
            .map(|(_, p)| p.clone())
            .collect()
    }
}

/// `Ξ(t) = Σ_𝐢 (∏_m t_{m,i_m}) δ_{x_𝐢}`.
pub fn xi(t: &CubePoint, anchors: &AnchorFamily) -> Result<DiscreteMeasure> {
    if t.k() != anchors.k() || t.n() != anchors.n() {
        return Err(Error::DimensionMismatch(format!(
            "cube point in Δ_{}^{} but anchors indexed by ⟦{}⟧^{}",
            t.k(),
            t.n(),
            anchors.k(),
            anchors.n()
        )));
    }
    DiscreteMeasure::from_masses(
        product_weights(t)
            .into_iter()
            .map(|(idx, w)| (anchors.anchor(&idx).clone(), w)),
    )
}

/// Splits `t = λ t' + (1−λ) t''` with `t'` in the face `F` at `slot` and `t''` in its
/// opposite face, `λ = Σ_{j∈F} t_{slot,j}`. When one side carries no mass its point is
/// the uniform vector on that face.
pub fn decompose(t: &CubePoint, slot: usize, face: &BTreeSet<usize>) -> Result<(Q, CubePoint, CubePoint)> {
    let k = t.k();
    if slot >= t.n() {
        return Err(Error::InvalidParameter(format!("slot {slot} out of range")));
    }
    let opposite: BTreeSet<usize> = (0..k).filter(|j| !face.contains(j)).collect();
    if face.is_empty() || opposite.is_empty() {
        return Err(Error::InvalidParameter("decomposition needs a proper nonempty face".into()));
    }
    let coords = t.factors()[slot].coords();
    let restrict = |set: &BTreeSet<usize>| -> Result<(Q, SimplexPoint)> {
        let mass: Q = set.iter().map(|&j| &coords[j]).sum();
        let f = if mass.is_zero() {
            SimplexPoint::uniform_on(k, set)?
        } else {
            SimplexPoint::new(
                (0..k)
                    .map(|j| if set.contains(&j) { &coords[j] / &mass } else { Q::zero() })
                    .collect(),
            )?
        };
        Ok((mass, f))
    };
    let (lambda, inside) = restrict(face)?;
    let (_, outside) = restrict(&opposite)?;
    Ok((lambda, t.with_factor(slot, inside)?, t.with_factor(slot, outside)?))
}

/// Uniform vectors on the nonempty subsets of `⟦2^q⟧`, in bitmask order.
pub fn h_family(q: usize) -> Result<Vec<SimplexPoint>> {
    if q == 0 {
        return Err(Error::InvalidParameter("h_family needs q >= 1".into()));
    }
    if q > 4 {
        return Err(Error::Refused(format!("2^(2^{q}) - 1 vectors")));
    }
    let k = 1usize << q;
    (1u64..1 << k)
        .map(|mask| SimplexPoint::uniform_on(k, &(0..k).filter(|i| mask >> i & 1 == 1).collect()))
        .collect()
}

/// `f_m(a) = π_*(μ_{a_1} × μ_{a_2} × ⋯)`: the measure on words of length `a.len()·m`
/// whose consecutive length-`m` blocks are independent with laws `a_j` over `A^m`
/// (block words ranked lexicographically).
pub fn block_product_embedding(spec: &SystemSpec, m: usize, a: &[SimplexPoint]) -> Result<DiscreteMeasure> {
    let SystemKind::FullShift { alphabet, .. } = spec.kind() else {
        return Err(Error::InvalidParameter("block product embedding needs a full shift".into()));
    };
    if m == 0 || a.is_empty() {
        return Err(Error::InvalidParameter("block product needs m >= 1 and at least one block".into()));
    }
    spec.require_depth(a.len() * m, "block product embedding")?;
    let size = alphabet.len();
    let block_count = (size as u128).checked_pow(m as u32).filter(|&c| c <= 1 << 22);
    let Some(block_count) = block_count else {
        return Err(Error::Refused(format!("{size}^{m} block words")));
    };
    if let Some(bad) = a.iter().find(|s| s.k() as u128 != block_count) {
        return Err(Error::DimensionMismatch(format!(
            "block law has {} coordinates, expected |A|^m = {block_count}",
            bad.k()
        )));
    }
    let cube = CubePoint::new(a.to_vec())?;
    DiscreteMeasure::from_masses(product_weights(&cube).into_iter().map(|(idx, w)| {
        let word = idx
            .iter()
            .flat_map(|&b| multi_index_unrank(b, size, m))
            .map(|s| s as u8)
            .collect();
        (Point::Word(word), w)
    }))
}

/// Shorthand for a probability vector from integer numerators over a common denominator.
pub fn simplex_from_ints(num: &[i64], den: i64) -> Result<SimplexPoint> {
    SimplexPoint::new(num.iter().map(|&x| Q::new(x.into(), den.into())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_frac;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Point {
        Point::Word(s.bytes().map(|b| b - b'0').collect())
    }

    fn random_simplex(rng: &mut ChaCha8Rng, k: usize, den: i64) -> SimplexPoint {
        // Integer composition of `den` into k parts.
        let mut cuts: Vec<i64> = (0..k - 1).map(|_| rng.gen_range(0..=den)).collect();
        cuts.sort();
        let mut parts = Vec::with_capacity(k);
        let mut prev = 0;
        for c in cuts.into_iter().chain([den]) {
            parts.push(c - prev);
            prev = c;
        }
        simplex_from_ints(&parts, den).unwrap()
    }

    #[test]
    fn measure_validation() {
        assert!(DiscreteMeasure::new([(w("0"), q_frac(1, 2))]).is_err());
        assert!(DiscreteMeasure::new([(w("0"), q_frac(1, 2)), (w("0"), q_frac(1, 2))]).is_err());
        assert!(DiscreteMeasure::new([(w("0"), q_frac(3, 2)), (w("1"), q_frac(-1, 2))]).is_err());
        assert!(DiscreteMeasure::new([(w("0"), q_frac(1, 3)), (w("1"), q_frac(2, 3))]).is_ok());
    }

    #[test]
    fn pushforward_examples() {
        let shift = SystemSpec::full_shift(2, 4).unwrap();
        assert_eq!(
            DiscreteMeasure::dirac(w("0110")).pushforward(&shift).unwrap(),
            DiscreteMeasure::dirac(w("110"))
        );
        let circle = SystemSpec::circle(2, 4).unwrap();
        let mu = DiscreteMeasure::new([(Point::Grid(1), q_frac(1, 2)), (Point::Grid(3), q_frac(1, 2))]).unwrap();
        assert_eq!(mu.pushforward(&circle).unwrap(), DiscreteMeasure::dirac(Point::Grid(2)));
        let shift3 = SystemSpec::full_shift(2, 3).unwrap();
        let mu = DiscreteMeasure::uniform(["000", "001", "010", "011"].map(w)).unwrap();
        let image = mu.pushforward(&shift3).unwrap();
        assert_eq!(image, DiscreteMeasure::uniform(["00", "01", "10", "11"].map(w)).unwrap());
        assert!(DiscreteMeasure::dirac(w("1")).pushforward(&shift).is_err());
    }

    #[test]
    fn dirac_embedding_examples() {
        let x = w("00");
        let y = w("01");
        let z = w("10");
        assert_eq!(dirac_embedding(&[x.clone()], Some(&[5])).unwrap(), DiscreteMeasure::dirac(x.clone()));
        let mu = dirac_embedding(&[x.clone(), y.clone()], Some(&[1, 2])).unwrap();
        assert_eq!(mu.weight(&x), q_frac(1, 3));
        assert_eq!(mu.weight(&y), q_frac(2, 3));
        let mu = dirac_embedding(&[x.clone(), y.clone(), z.clone()], None).unwrap();
        assert_eq!(
            [mu.weight(&x), mu.weight(&y), mu.weight(&z)],
            [q_frac(1, 7), q_frac(2, 7), q_frac(4, 7)]
        );
        assert!(check_subset_sums(&[1, 2, 4]).is_ok());
        match dirac_embedding(&[x, y, z], Some(&[1, 2, 3])) {
            Err(Error::SubsetSumCollision { left, right }) => {
                let sum = |s: &[usize]| s.iter().map(|&i| [1, 2, 3][i]).sum::<u64>();
                assert_eq!(sum(&left), sum(&right));
                assert_ne!(left, right);
            }
            other => panic!("expected collision, got {other:?}"),
        }
    }

    #[test]
    fn dirac_embedding_injective_on_distinct_tuples() {
        // Every ordered triple of distinct points in an 8-point space gives a distinct measure.
        let pts = SystemSpec::full_shift(2, 3).unwrap().points().unwrap();
        let mut seen = std::collections::HashSet::new();
        for a in &pts {
            for b in &pts {
                for c in &pts {
                    if a != b && b != c && a != c {
                        let mu = dirac_embedding(&[a.clone(), b.clone(), c.clone()], None).unwrap();
                        assert!(seen.insert(mu));
                    }
                }
            }
        }
        assert_eq!(seen.len(), 8 * 7 * 6);
    }

    #[test]
    fn block_product_examples() {
        let spec = SystemSpec::full_shift(2, 4).unwrap();
        let e0 = SimplexPoint::vertex(2, 0);
        assert_eq!(
            block_product_embedding(&spec, 1, &[e0.clone(), e0]).unwrap(),
            DiscreteMeasure::dirac(w("00"))
        );
        let half = SimplexPoint::center(2);
        assert_eq!(
            block_product_embedding(&spec, 1, &[half.clone(), half]).unwrap(),
            DiscreteMeasure::uniform(["00", "01", "10", "11"].map(w)).unwrap()
        );
        assert!(block_product_embedding(&spec, 2, &[SimplexPoint::center(2)]).is_err());
        assert!(block_product_embedding(&spec, 2, &vec![SimplexPoint::center(4); 3]).is_err());
    }

    #[test]
    fn block_product_is_shift_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = SystemSpec::full_shift(2, 6).unwrap();
        for _ in 0..20 {
            let a: Vec<SimplexPoint> = (0..3).map(|_| random_simplex(&mut rng, 4, 12)).collect();
            let lhs = block_product_embedding(&spec, 2, &a[1..]).unwrap();
            let rhs = block_product_embedding(&spec, 2, &a).unwrap().pushforward_n(&spec, 2).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn theta_examples() {
        let (t, s) = (q_frac(1, 3), q_frac(3, 5));
        let one = Q::one();
        let u = SimplexPoint::new(vec![t.clone(), &one - &t]).unwrap();
        let v = SimplexPoint::new(vec![s.clone(), &one - &s]).unwrap();
        let out = theta(&CubePoint::new(vec![u, v]).unwrap()).unwrap();
        assert_eq!(
            out.coords(),
            &[&t * &s, &t * (&one - &s), (&one - &t) * &s, (&one - &t) * (&one - &s)]
        );
        let vertex = CubePoint::new(vec![SimplexPoint::vertex(3, 2), SimplexPoint::vertex(3, 1)]).unwrap();
        assert_eq!(theta(&vertex).unwrap(), SimplexPoint::vertex(9, 2 * 3 + 1));
    }

    #[test]
    fn theta_injective_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = CubePoint::new(vec![random_simplex(&mut rng, 2, 20), random_simplex(&mut rng, 2, 20)]).unwrap();
            let b = CubePoint::new(vec![random_simplex(&mut rng, 2, 20), random_simplex(&mut rng, 2, 20)]).unwrap();
            assert_eq!(a == b, theta(&a).unwrap() == theta(&b).unwrap());
        }
    }

    fn four_anchors() -> AnchorFamily {
        AnchorFamily::new(2, vec![0, 1], ["0000", "0010", "1000", "1010"].map(w).to_vec()).unwrap()
    }

    #[test]
    fn xi_examples() {
        let anchors = four_anchors();
        let vertex = CubePoint::new(vec![SimplexPoint::vertex(2, 1), SimplexPoint::vertex(2, 0)]).unwrap();
        assert_eq!(xi(&vertex, &anchors).unwrap(), DiscreteMeasure::dirac(w("1000")));
        // Centre at slot 0: both values of the first index carry equal weight.
        let t = CubePoint::new(vec![SimplexPoint::center(2), simplex_from_ints(&[1, 3], 4).unwrap()]).unwrap();
        let mu = xi(&t, &anchors).unwrap();
        for j in 0..2 {
            assert_eq!(mu.weight(anchors.anchor(&[0, j])), mu.weight(anchors.anchor(&[1, j])));
        }
        let bad = CubePoint::new(vec![SimplexPoint::center(3)]).unwrap();
        assert!(xi(&bad, &anchors).is_err());
    }

    #[test]
    fn decomposition_reproduces_measure() {
        let anchors = four_anchors();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t = CubePoint::new(vec![random_simplex(&mut rng, 2, 9), random_simplex(&mut rng, 2, 9)]).unwrap();
            let mu = xi(&t, &anchors).unwrap();
            for slot in 0..2 {
                let face = BTreeSet::from([rng.gen_range(0..2)]);
                let opposite: BTreeSet<usize> = (0..2).filter(|j| !face.contains(j)).collect();
                let (lambda, t1, t2) = decompose(&t, slot, &face).unwrap();
                let mix = DiscreteMeasure::mix(&lambda, &xi(&t1, &anchors).unwrap(), &xi(&t2, &anchors).unwrap()).unwrap();
                assert_eq!(mix, mu);
                let s_face = anchors.face_support(slot, &face);
                let s_opp = anchors.face_support(slot, &opposite);
                assert_eq!(mu.mass_in(&s_face), lambda);
                assert_eq!(mu.mass_in(&s_face) + mu.mass_in(&s_opp), Q::one());
            }
        }
    }

    #[test]
    fn h_family_counts() {
        let h1 = h_family(1).unwrap();
        assert_eq!(
            h1,
            vec![
                SimplexPoint::vertex(2, 0),
                SimplexPoint::vertex(2, 1),
                SimplexPoint::center(2)
            ]
        );
        assert_eq!(h_family(2).unwrap().len(), 15);
        assert_eq!(h_family(3).unwrap().len(), 255);
        assert!(h_family(0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let spec = SystemSpec::full_shift(2, 3).unwrap();
        let mu = DiscreteMeasure::from_json(&spec, r#"{"support":["010","110"],"weights":["1/3","2/3"]}"#).unwrap();
        assert_eq!(mu.weight(&w("110")), q_frac(2, 3));
        assert_eq!(DiscreteMeasure::from_json(&spec, &mu.to_json(&spec)).unwrap(), mu);
        assert!(DiscreteMeasure::from_json(&spec, r#"{"support":["01"],"weights":["1"]}"#).is_err());
        assert!(DiscreteMeasure::from_json(&spec, r#"{"support":["010"],"weights":["1/2"]}"#).is_err());
    }

    fn arb_simplex(k: usize) -> impl Strategy<Value = SimplexPoint> {
        prop::collection::vec(0i64..6, k)
            .prop_filter("nonzero", |v| v.iter().any(|&x| x > 0))
            .prop_map(|v| {
                let total: i64 = v.iter().sum();
                simplex_from_ints(&v, total).unwrap()
            })
    }

    proptest! {
        #[test]
        fn theta_is_multi_affine(
            u in arb_simplex(3), v in arb_simplex(3), other in arb_simplex(3),
            num in 0i64..=8, slot in 0usize..2,
        ) {
            let lambda = q_frac(num, 8);
            let mixed = SimplexPoint::mix(&lambda, &u, &v).unwrap();
            let build = |f: SimplexPoint| {
                let mut fs = vec![other.clone(), other.clone()];
                fs[slot] = f;
                theta(&CubePoint::new(fs).unwrap()).unwrap()
            };
            let lhs = build(mixed);
            let rhs = SimplexPoint::mix(&lambda, &build(u), &build(v)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn pushforward_preserves_mass_and_mixtures(
            a in prop::collection::vec(1i64..5, 8), b in prop::collection::vec(1i64..5, 8), num in 0i64..=6,
        ) {
            let spec = SystemSpec::full_shift(2, 3).unwrap();
            let pts = spec.points().unwrap();
            let make = |v: &[i64]| {
                let total: i64 = v.iter().sum();
                DiscreteMeasure::new(pts.iter().cloned().zip(v.iter().map(|&x| q_frac(x, total)))).unwrap()
            };
            let (mu, nu) = (make(&a), make(&b));
            let lambda = q_frac(num, 6);
            let lhs = DiscreteMeasure::mix(&lambda, &mu, &nu).unwrap().pushforward(&spec).unwrap();
            let rhs = DiscreteMeasure::mix(&lambda, &mu.pushforward(&spec).unwrap(), &nu.pushforward(&spec).unwrap()).unwrap();
            prop_assert_eq!(lhs.total_mass(), Q::one());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn xi_mass_identity(t0 in arb_simplex(2), t1 in arb_simplex(2), slot in 0usize..2, j in 0usize..2) {
            let anchors = four_anchors();
            let mu = xi(&CubePoint::new(vec![t0, t1]).unwrap(), &anchors).unwrap();
            let face = BTreeSet::from([j]);
            let opposite = BTreeSet::from([1 - j]);
            prop_assert_eq!(mu.mass_in(&anchors.face_support(slot, &face)) + mu.mass_in(&anchors.face_support(slot, &opposite)), Q::one());
        }
    }
}
