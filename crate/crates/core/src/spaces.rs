//! Finite metric spaces and truncated dynamical systems.
//!
//! Three families of systems are represented:
//!
//! * the full shift over a finite alphabet, truncated to words of length `L`;
//! * a subshift of finite type given by forbidden words, truncated the same way;
//! * the `×a` map on the circle restricted to the grid `{j/Q}`.
//!
//! Shift words carry their depth explicitly: applying the shift drops the first
//! symbol, so a word of length `L` supports exactly `L - 1` applications. Every
//! operation that would need more symbols fails with [`Error::DepthExhausted`].
//! The shift metric is `d(x, y) = 2^{-min{i : x_i != y_i}}`, which is dyadic and
//! makes the shift exactly 2-Lipschitz.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::rational::{dist_to_q, fmt_dist, parse_dist, pow2_neg, q_int, q_pow, Dist, Q};
use crate::{Error, Result};

/// Largest number of points any enumeration is allowed to materialise.
pub const MAX_POINTS: usize = 1 << 20;

/// A represented point: a finite shift word (symbol indices) or a circle grid index `j` of `j/Q`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Point {
    Word(Vec<u8>),
    Grid(u64),
}

impl Point {
    pub fn as_word(&self) -> Option<&[u8]> {
        match self {
            Point::Word(w) => Some(w),
            Point::Grid(_) => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Word(w) => {
                for s in w {
                    write!(f, "{s}")?;
                }
                Ok(())
            }
            Point::Grid(j) => write!(f, "#{j}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemKind {
    FullShift {
        alphabet: Vec<String>,
        depth: usize,
    },
    Sft {
        alphabet: Vec<String>,
        forbidden: Vec<Vec<u8>>,
        depth: usize,
    },
    Circle {
        a: u64,
        q: u64,
    },
}

/// Admissible words of a subshift of finite type (the full shift has no forbidden words).
#[derive(Clone, Debug)]
pub struct Language {
    alphabet: usize,
    forbidden: Vec<Vec<u8>>,
    window: usize,
    essential: HashSet<Vec<u8>>,
}

impl Language {
    pub fn new(alphabet: usize, forbidden: Vec<Vec<u8>>) -> Self {
        let window = forbidden.iter().map(Vec::len).max().unwrap_or(0).saturating_sub(1);
        let mut lang = Language {
            alphabet,
            forbidden,
            window,
            essential: HashSet::new(),
        };
        lang.essential = lang.essential_states();
        lang
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// True when no forbidden word is a suffix of `word`.
    fn suffix_ok(&self, word: &[u8]) -> bool {
        self.forbidden.iter().all(|f| !word.ends_with(f))
    }

    pub fn is_admissible(&self, word: &[u8]) -> bool {
        (1..=word.len()).all(|end| self.suffix_ok(&word[..end]))
    }

    fn successors(&self, state: &[u8]) -> impl Iterator<Item = Vec<u8>> + '_ {
        let state = state.to_vec();
        (0..self.alphabet as u8).filter_map(move |a| {
            let mut w = state.clone();
            w.push(a);
            if self.suffix_ok(&w) {
                Some(w[w.len() - self.window..].to_vec())
            } else {
                None
            }
        })
    }

    /// States (admissible words of length `window`) from which an infinite path exists.
    fn essential_states(&self) -> HashSet<Vec<u8>> {
        let mut states: HashSet<Vec<u8>> = HashSet::new();
        let mut stack = vec![Vec::new()];
        while let Some(w) = stack.pop() {
            if w.len() == self.window {
                states.insert(w);
                continue;
            }
            for a in 0..self.alphabet as u8 {
                let mut next = w.clone();
                next.push(a);
                if self.suffix_ok(&next) {
                    stack.push(next);
                }
            }
        }
        loop {
            let before = states.len();
            let snapshot = states.clone();
            states.retain(|s| self.successors(s).any(|t| snapshot.contains(&t)));
            if states.len() == before {
                return states;
            }
        }
    }

    /// Whether an admissible word extends to an infinite admissible sequence.
    pub fn is_extendable(&self, word: &[u8]) -> bool {
        if word.len() >= self.window {
            return self.essential.contains(&word[word.len() - self.window..]);
        }
        (0..self.alphabet as u8).any(|a| {
            let mut w = word.to_vec();
            w.push(a);
            self.suffix_ok(&w) && self.is_extendable(&w)
        })
    }

    fn tail<'a>(&self, prefix: &'a [u8]) -> &'a [u8] {
        &prefix[prefix.len().saturating_sub(self.window)..]
    }

    fn completes(
        &self,
        prefix: &mut Vec<u8>,
        len: usize,
        constraints: &BTreeMap<usize, u8>,
        memo: &mut HashMap<(usize, Vec<u8>), bool>,
    ) -> bool {
        let pos = prefix.len();
        if pos == len {
            return self.is_extendable(prefix);
        }
        let key = (pos, self.tail(prefix).to_vec());
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let candidates: Vec<u8> = match constraints.get(&pos) {
            Some(&s) => vec![s],
            None => (0..self.alphabet as u8).collect(),
        };
        let mut ok = false;
        for a in candidates {
            prefix.push(a);
            if self.suffix_ok(prefix) && self.completes(prefix, len, constraints, memo) {
                ok = true;
            }
            prefix.pop();
            if ok {
                break;
            }
        }
        memo.insert(key, ok);
        ok
    }

    /// Lexicographically smallest extendable word of length `len` with the
    /// prescribed symbols at the constrained positions.
    pub fn realize(&self, len: usize, constraints: &BTreeMap<usize, u8>) -> Option<Vec<u8>> {
        if constraints.keys().any(|&p| p >= len) || constraints.values().any(|&s| s as usize >= self.alphabet) {
            return None;
        }
        let mut memo = HashMap::new();
        let mut word = Vec::with_capacity(len);
        if !self.completes(&mut word, len, constraints, &mut memo) {
            return None;
        }
        while word.len() < len {
            let pos = word.len();
            let candidates: Vec<u8> = match constraints.get(&pos) {
                Some(&s) => vec![s],
                None => (0..self.alphabet as u8).collect(),
            };
            let mut placed = false;
            for a in candidates {
                word.push(a);
                if self.suffix_ok(&word) && self.completes(&mut word, len, constraints, &mut memo) {
                    placed = true;
                    break;
                }
                word.pop();
            }
            debug_assert!(placed);
        }
        Some(word)
    }

    /// All extendable words of length `len`, in lexicographic order.
    pub fn words(&self, len: usize) -> Result<Vec<Vec<u8>>> {
        let none = BTreeMap::new();
        let mut memo = HashMap::new();
        let mut out = Vec::new();
        let mut prefix = Vec::with_capacity(len);
        self.collect(&mut prefix, len, &none, &mut memo, &mut out)?;
        Ok(out)
    }

    fn collect(
        &self,
        prefix: &mut Vec<u8>,
        len: usize,
        none: &BTreeMap<usize, u8>,
        memo: &mut HashMap<(usize, Vec<u8>), bool>,
        out: &mut Vec<Vec<u8>>,
    ) -> Result<()> {
        if prefix.len() == len {
            if out.len() >= MAX_POINTS {
                return Err(Error::Refused(format!("more than {MAX_POINTS} words of length {len}")));
            }
            out.push(prefix.clone());
            return Ok(());
        }
        for a in 0..self.alphabet as u8 {
            prefix.push(a);
            if self.suffix_ok(prefix) && self.completes(prefix, len, none, memo) {
                self.collect(prefix, len, none, memo, out)?;
            }
            prefix.pop();
        }
        Ok(())
    }
}

/// A finitely truncated dynamical system together with its Lipschitz constant.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    kind: SystemKind,
    lipschitz: Dist,
    language: Option<Language>,
}

impl PartialEq for SystemSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.lipschitz == other.lipschitz
    }
}

fn default_alphabet(size: usize) -> Vec<String> {
    (0..size).map(|i| i.to_string()).collect()
}

impl SystemSpec {
    pub fn full_shift(alphabet: usize, depth: usize) -> Result<Self> {
        Self::new(
            SystemKind::FullShift {
                alphabet: default_alphabet(alphabet),
                depth,
            },
            None,
        )
    }

    pub fn sft(alphabet: usize, forbidden: Vec<Vec<u8>>, depth: usize) -> Result<Self> {
        Self::new(
            SystemKind::Sft {
                alphabet: default_alphabet(alphabet),
                forbidden,
                depth,
            },
            None,
        )
    }

    /// The golden-mean shift: binary sequences without two consecutive 1s.
    pub fn golden_mean(depth: usize) -> Result<Self> {
        Self::sft(2, vec![vec![1, 1]], depth)
    }

    pub fn circle(a: u64, q: u64) -> Result<Self> {
        Self::new(SystemKind::Circle { a, q }, None)
    }

    /// Validates the parameters; `lipschitz` defaults to 2 for shifts and `a` for the circle.
    pub fn new(kind: SystemKind, lipschitz: Option<Dist>) -> Result<Self> {
        let language = match &kind {
            SystemKind::FullShift { alphabet, depth } => {
                check_shift(alphabet, *depth)?;
                Some(Language::new(alphabet.len(), Vec::new()))
            }
            SystemKind::Sft {
                alphabet,
                forbidden,
                depth,
            } => {
                check_shift(alphabet, *depth)?;
                if forbidden.iter().any(|f| f.is_empty() || f.iter().any(|&s| s as usize >= alphabet.len())) {
                    return Err(Error::InvalidSystem("forbidden words must be nonempty words over the alphabet".into()));
                }
                let lang = Language::new(alphabet.len(), forbidden.clone());
                if lang.realize(*depth, &BTreeMap::new()).is_none() {
                    return Err(Error::EmptySystem { depth: *depth });
                }
                Some(lang)
            }
            SystemKind::Circle { a, q } => {
                if *q < 2 {
                    return Err(Error::InvalidSystem(format!("circle grid needs Q >= 2, got {q}")));
                }
                if *a < 1 || *q > (1 << 24) || a.checked_mul(*q).is_none() {
                    return Err(Error::InvalidSystem(format!("unsupported multiplier {a} for Q = {q}")));
                }
                None
            }
        };
        let lipschitz = match lipschitz {
            Some(k) => {
                if k <= Dist::zero() {
                    return Err(Error::InvalidSystem("Lipschitz constant must be positive".into()));
                }
                k
            }
            None => match &kind {
                SystemKind::Circle { a, .. } => Dist::from_integer(*a as i64),
                _ => Dist::from_integer(2),
            },
        };
        Ok(SystemSpec {
            kind,
            lipschitz,
            language,
        })
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn lipschitz(&self) -> Dist {
        self.lipschitz
    }

    pub fn is_shift(&self) -> bool {
        self.language.is_some()
    }

    pub fn language(&self) -> Option<&Language> {
        self.language.as_ref()
    }

    /// Word length for shifts; `None` for the circle, whose orbits never lose resolution.
    pub fn depth(&self) -> Option<usize> {
        match &self.kind {
            SystemKind::FullShift { depth, .. } | SystemKind::Sft { depth, .. } => Some(*depth),
            SystemKind::Circle { .. } => None,
        }
    }

    pub fn alphabet(&self) -> Option<&[String]> {
        match &self.kind {
            SystemKind::FullShift { alphabet, .. } | SystemKind::Sft { alphabet, .. } => Some(alphabet),
            SystemKind::Circle { .. } => None,
        }
    }

    /// Same system re-truncated at another depth (no-op for the circle).
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        let kind = match &self.kind {
            SystemKind::FullShift { alphabet, .. } => SystemKind::FullShift {
                alphabet: alphabet.clone(),
                depth,
            },
            SystemKind::Sft { alphabet, forbidden, .. } => SystemKind::Sft {
                alphabet: alphabet.clone(),
                forbidden: forbidden.clone(),
                depth,
            },
            c @ SystemKind::Circle { .. } => c.clone(),
        };
        Self::new(kind, Some(self.lipschitz))
    }

    /// Fails unless the truncation supports `required` symbols.
    pub fn require_depth(&self, required: usize, what: &str) -> Result<()> {
        match self.depth() {
            Some(d) if d < required => Err(Error::DepthExhausted {
                what: what.to_string(),
                required,
                available: d,
            }),
            _ => Ok(()),
        }
    }

    /// All represented points, sorted.
    pub fn points(&self) -> Result<Vec<Point>> {
        match (&self.kind, &self.language) {
            (SystemKind::Circle { q, .. }, _) => Ok((0..*q).map(Point::Grid).collect()),
            (_, Some(lang)) => {
                let depth = self.depth().unwrap();
                let words = lang.words(depth)?;
                if words.is_empty() {
                    return Err(Error::EmptySystem { depth });
                }
                Ok(words.into_iter().map(Point::Word).collect())
            }
            _ => unreachable!(),
        }
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        match (&self.kind, p) {
            (SystemKind::Circle { q, .. }, Point::Grid(j)) if j < q => Ok(()),
            (SystemKind::Circle { .. }, _) => Err(Error::MissingPoint(p.to_string())),
            (_, Point::Word(w)) => {
                let lang = self.language.as_ref().unwrap();
                if w.is_empty() || w.iter().any(|&s| s as usize >= lang.alphabet) {
                    Err(Error::MissingPoint(p.to_string()))
                } else {
                    Ok(())
                }
            }
            _ => Err(Error::MissingPoint(p.to_string())),
        }
    }

    /// Ground distance: dyadic first-disagreement metric for shifts, arc length on the circle.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<Dist> {
        self.check_point(x)?;
        self.check_point(y)?;
        match (x, y) {
            (Point::Word(a), Point::Word(b)) => {
                if a.len() != b.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "words of lengths {} and {} are not comparable",
                        a.len(),
                        b.len()
                    )));
                }
                Ok(match first_difference(a, b) {
                    Some(j) => pow2_neg(j as u32),
                    None => Dist::zero(),
                })
            }
            (Point::Grid(i), Point::Grid(j)) => {
                let q = self.grid_size().unwrap();
                let delta = i.abs_diff(*j);
                Ok(Dist::new(delta.min(q - delta) as i64, q as i64))
            }
            _ => Err(Error::DimensionMismatch("mixed point kinds".into())),
        }
    }

    pub fn grid_size(&self) -> Option<u64> {
        match self.kind {
            SystemKind::Circle { q, .. } => Some(q),
            _ => None,
        }
    }

    /// One application of the map: the shift drops the first symbol; the circle multiplies by `a`.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        self.check_point(p)?;
        match (&self.kind, p) {
            (SystemKind::Circle { a, q }, Point::Grid(j)) => Ok(Point::Grid((a * j) % q)),
            (_, Point::Word(w)) => {
                if w.len() < 2 {
                    return Err(Error::DepthExhausted {
                        what: "shift map".into(),
                        required: 2,
                        available: w.len(),
                    });
                }
                Ok(Point::Word(w[1..].to_vec()))
            }
            _ => Err(Error::MissingPoint(p.to_string())),
        }
    }

    /// `T^k p`.
    pub fn iterate(&self, p: &Point, k: usize) -> Result<Point> {
        if let Point::Word(w) = p {
            self.check_point(p)?;
            if w.len() <= k {
                return Err(Error::DepthExhausted {
                    what: format!("{k} shift applications"),
                    required: k + 1,
                    available: w.len(),
                });
            }
            return Ok(Point::Word(w[k..].to_vec()));
        }
        let mut cur = p.clone();
        for _ in 0..k {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// Bowen distance `d_n(x, y) = max_{0 <= i < n} d(T^i x, T^i y)`.
    pub fn bowen_distance(&self, x: &Point, y: &Point, n: usize) -> Result<Dist> {
        if n == 0 {
            return Err(Error::InvalidParameter("Bowen distance needs n >= 1".into()));
        }
        match (x, y) {
            (Point::Word(a), Point::Word(b)) => {
                self.check_point(x)?;
                self.check_point(y)?;
                if a.len() != b.len() {
                    return Err(Error::DimensionMismatch("words of different lengths".into()));
                }
                if a.len() < n {
                    return Err(Error::DepthExhausted {
                        what: format!("d_{n}"),
                        required: n,
                        available: a.len(),
                    });
                }
                // d(T^i x, T^i y) = 2^{-(j - i)} for i <= j, so the maximum sits at i = min(n-1, j).
                Ok(match first_difference(a, b) {
                    Some(j) => pow2_neg((j - j.min(n - 1)) as u32),
                    None => Dist::zero(),
                })
            }
            _ => {
                let mut best = Dist::zero();
                let (mut u, mut v) = (x.clone(), y.clone());
                for i in 0..n {
                    if i > 0 {
                        u = self.apply(&u)?;
                        v = self.apply(&v)?;
                    }
                    best = best.max(self.distance(&u, &v)?);
                }
                Ok(best)
            }
        }
    }

    pub fn build_space(&self) -> Result<MetricSpace> {
        let points = self.points()?;
        MetricSpace::from_fn(points, |x, y| self.distance(x, y))
    }

    /// Exhaustively checks `d(Tx, Ty) <= K d(x, y)` over represented pairs.
    /// Returns the first violating pair, if any.
    pub fn certify_lipschitz(&self) -> Result<Option<(Point, Point)>> {
        let spec = match self.depth() {
            Some(d) if d > 10 => self.with_depth(10)?,
            Some(1) => return Ok(None),
            _ => self.clone(),
        };
        let points = spec.points()?;
        let images: Vec<Point> = points.iter().map(|p| spec.apply(p)).collect::<Result<_>>()?;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let before = spec.distance(&points[i], &points[j])?;
                let after = spec.distance(&images[i], &images[j])?;
                if after > self.lipschitz * before {
                    return Ok(Some((points[i].clone(), points[j].clone())));
                }
            }
        }
        Ok(None)
    }

    /// Human-readable label: the word spelled in the alphabet, or `j/Q`.
    pub fn label(&self, p: &Point) -> String {
        match (p, self.alphabet()) {
            (Point::Word(w), Some(alpha)) => w.iter().map(|&s| alpha[s as usize].as_str()).collect(),
            (Point::Grid(j), _) => format!("{j}/{}", self.grid_size().unwrap_or(0)),
            _ => p.to_string(),
        }
    }

    /// Inverse of [`label`](Self::label). Circle points also accept a bare index `j`.
    pub fn parse_point(&self, s: &str) -> Result<Point> {
        match &self.kind {
            SystemKind::Circle { q, .. } => {
                let j: u64 = match s.split_once('/') {
                    Some((j, den)) => {
                        let den: u64 = den.trim().parse().map_err(|_| Error::MissingPoint(s.into()))?;
                        let j: u64 = j.trim().parse().map_err(|_| Error::MissingPoint(s.into()))?;
                        if den == 0 || (j * q) % den != 0 {
                            return Err(Error::MissingPoint(s.into()));
                        }
                        j * q / den
                    }
                    None => s.trim().parse().map_err(|_| Error::MissingPoint(s.into()))?,
                };
                let p = Point::Grid(j);
                self.check_point(&p)?;
                Ok(p)
            }
            _ => {
                let word = parse_word(self.alphabet().unwrap(), s)?;
                let p = Point::Word(word);
                self.check_point(&p)?;
                Ok(p)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SystemDoc = serde_json::from_str(text)?;
        doc.into_spec()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SystemDoc::from_spec(self)).expect("system spec serializes")
    }
}

fn check_shift(alphabet: &[String], depth: usize) -> Result<()> {
    if alphabet.len() < 2 {
        return Err(Error::InvalidSystem("shift alphabet needs at least 2 symbols".into()));
    }
    if alphabet.len() > u8::MAX as usize {
        return Err(Error::InvalidSystem("alphabet too large".into()));
    }
    if alphabet.iter().any(|s| s.chars().count() != 1) {
        return Err(Error::InvalidSystem("alphabet symbols must be single characters".into()));
    }
    let distinct: BTreeSet<&String> = alphabet.iter().collect();
    if distinct.len() != alphabet.len() {
        return Err(Error::InvalidSystem("alphabet symbols must be distinct".into()));
    }
    if depth == 0 || depth > 62 {
        return Err(Error::InvalidSystem(format!("shift depth must lie in 1..=62, got {depth}")));
    }
    Ok(())
}

fn parse_word(alphabet: &[String], s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| {
            alphabet
                .iter()
                .position(|a| a.starts_with(c))
                .map(|i| i as u8)
                .ok_or_else(|| Error::MissingPoint(format!("{s:?} (symbol {c:?} not in alphabet)")))
        })
        .collect()
}

pub fn first_difference(a: &[u8], b: &[u8]) -> Option<usize> {
    a.iter().zip(b).position(|(x, y)| x != y)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum SystemDoc {
    FullShift {
        alphabet: Vec<String>,
        depth: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<String>,
    },
    Sft {
        alphabet: Vec<String>,
        forbidden: Vec<String>,
        depth: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<String>,
    },
    Circle {
        a: u64,
        #[serde(rename = "Q")]
        q: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<String>,
    },
}

impl SystemDoc {
    fn into_spec(self) -> Result<SystemSpec> {
        let parse_k = |k: Option<String>| k.map(|s| parse_dist(&s)).transpose();
        let declared;
        let spec = match self {
            SystemDoc::FullShift {
                alphabet,
                depth,
                lipschitz,
            } => {
                declared = lipschitz.is_some();
                SystemSpec::new(SystemKind::FullShift { alphabet, depth }, parse_k(lipschitz)?)?
            }
            SystemDoc::Sft {
                alphabet,
                forbidden,
                depth,
                lipschitz,
            } => {
                declared = lipschitz.is_some();
                check_shift(&alphabet, depth)?;
                let forbidden = forbidden
                    .iter()
                    .map(|w| parse_word(&alphabet, w))
                    .collect::<Result<Vec<_>>>()?;
                SystemSpec::new(
                    SystemKind::Sft {
                        alphabet,
                        forbidden,
                        depth,
                    },
                    parse_k(lipschitz)?,
                )?
            }
            SystemDoc::Circle { a, q, lipschitz } => {
                declared = lipschitz.is_some();
                SystemSpec::new(SystemKind::Circle { a, q }, parse_k(lipschitz)?)?
            }
        };
        if declared {
            if let Some((x, y)) = spec.certify_lipschitz()? {
                return Err(Error::InvalidSystem(format!(
                    "declared Lipschitz constant {} fails on ({}, {})",
                    fmt_dist(&spec.lipschitz),
                    spec.label(&x),
                    spec.label(&y)
                )));
            }
        }
        Ok(spec)
    }

    fn from_spec(spec: &SystemSpec) -> Self {
        let k = Some(fmt_dist(&spec.lipschitz));
        match &spec.kind {
            SystemKind::FullShift { alphabet, depth } => SystemDoc::FullShift {
                alphabet: alphabet.clone(),
                depth: *depth,
                lipschitz: k,
            },
            SystemKind::Sft {
                alphabet,
                forbidden,
                depth,
            } => SystemDoc::Sft {
                alphabet: alphabet.clone(),
                forbidden: forbidden
                    .iter()
                    .map(|w| w.iter().map(|&s| alphabet[s as usize].as_str()).collect())
                    .collect(),
                depth: *depth,
                lipschitz: k,
            },
            SystemKind::Circle { a, q } => SystemDoc::Circle {
                a: *a,
                q: *q,
                lipschitz: k,
            },
        }
    }
}

/// Finite point set with an exact, validated distance table.
#[derive(Clone, Debug)]
pub struct MetricSpace {
    points: Vec<Point>,
    index: HashMap<Point, usize>,
    dist: Vec<Dist>,
    diameter: Dist,
}

impl MetricSpace {
    pub fn from_fn(points: Vec<Point>, mut f: impl FnMut(&Point, &Point) -> Result<Dist>) -> Result<Self> {
        let n = points.len();
        if n * n > 1 << 26 {
            return Err(Error::Refused(format!("distance table for {n} points is too large")));
        }
        let mut dist = vec![Dist::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(&points[i], &points[j])?;
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::assemble(points, dist)
    }

    /// Builds a space from an explicit symmetric table, checking every metric axiom.
    pub fn from_table(points: Vec<Point>, table: Vec<Vec<Dist>>) -> Result<Self> {
        let n = points.len();
        if table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("distance table must be square".into()));
        }
        for i in 0..n {
            if !table[i][i].is_zero() {
                return Err(Error::InvalidParameter(format!("d(p{i}, p{i}) must be 0")));
            }
            for j in 0..n {
                if table[i][j] != table[j][i] || table[i][j] < Dist::zero() {
                    return Err(Error::InvalidParameter(format!("d(p{i}, p{j}) is not symmetric and nonnegative")));
                }
                if i != j && table[i][j].is_zero() {
                    return Err(Error::InvalidParameter(format!("distinct points p{i}, p{j} at distance 0")));
                }
            }
        }
        let space = Self::assemble(points, table.into_iter().flatten().collect())?;
        if let Some((a, b, c)) = space.triangle_violation() {
            return Err(Error::InvalidParameter(format!("triangle inequality fails on ({a}, {b}, {c})")));
        }
        Ok(space)
    }

    fn assemble(points: Vec<Point>, dist: Vec<Dist>) -> Result<Self> {
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate point {p}")));
            }
        }
        let diameter = dist.iter().copied().max().unwrap_or_else(Dist::zero);
        Ok(MetricSpace {
            points,
            index,
            dist,
            diameter,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn dist(&self, i: usize, j: usize) -> Dist {
        self.dist[i * self.points.len() + j]
    }

    pub fn dist_points(&self, p: &Point, q: &Point) -> Result<Dist> {
        let i = self.index_of(p).ok_or_else(|| Error::MissingPoint(p.to_string()))?;
        let j = self.index_of(q).ok_or_else(|| Error::MissingPoint(q.to_string()))?;
        Ok(self.dist(i, j))
    }

    pub fn diameter(&self) -> Dist {
        self.diameter
    }

    /// First triple `(i, j, k)` with `d(i, k) > d(i, j) + d(j, k)`.
    pub fn triangle_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.dist(i, k) > self.dist(i, j) + self.dist(j, k) {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }
}

/// One side of an IE-pair: a cylinder `[w]` for shifts or a set of grid indices on the circle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    Cylinder(Vec<u8>),
    Grid(BTreeSet<u64>),
}

impl Region {
    pub fn contains(&self, p: &Point) -> bool {
        match (self, p) {
            (Region::Cylinder(c), Point::Word(w)) => w.starts_with(c),
            (Region::Grid(s), Point::Grid(j)) => s.contains(j),
            _ => false,
        }
    }

    /// Symbols the region pins down when visited at time `at`.
    pub fn constraints_at(&self, at: usize) -> Option<BTreeMap<usize, u8>> {
        match self {
            Region::Cylinder(c) => Some(c.iter().enumerate().map(|(i, &s)| (at + i, s)).collect()),
            Region::Grid(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Region::Cylinder(c) => c.len(),
            Region::Grid(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A pair of regions with disjoint closures at the truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IePair {
    pub u0: Region,
    pub u1: Region,
}

impl IePair {
    pub fn new(u0: Region, u1: Region) -> Self {
        IePair { u0, u1 }
    }

    /// `U_0 = [0]`, `U_1 = [1]`.
    pub fn first_symbol() -> Self {
        IePair::new(Region::Cylinder(vec![0]), Region::Cylinder(vec![1]))
    }

    pub fn region(&self, side: u8) -> &Region {
        if side == 0 {
            &self.u0
        } else {
            &self.u1
        }
    }

    /// `d(U_0, U_1)`; fails unless it is strictly positive.
    pub fn separation(&self, spec: &SystemSpec) -> Result<Dist> {
        let sep = match (&self.u0, &self.u1) {
            (Region::Cylinder(a), Region::Cylinder(b)) => {
                let lang = spec
                    .language()
                    .ok_or_else(|| Error::InvalidParameter("cylinders need a shift system".into()))?;
                let depth = spec.depth().unwrap();
                for c in [a, b] {
                    if c.is_empty() || c.len() > depth {
                        return Err(Error::DepthExhausted {
                            what: "cylinder".into(),
                            required: c.len().max(1),
                            available: depth,
                        });
                    }
                    let pins: BTreeMap<usize, u8> = c.iter().copied().enumerate().collect();
                    if lang.realize(depth, &pins).is_none() {
                        return Err(Error::InvalidParameter(format!("cylinder [{}] is empty", spec.label(&Point::Word(c.clone())))));
                    }
                }
                match first_difference(a, b) {
                    Some(j) => pow2_neg(j as u32),
                    None => Dist::zero(),
                }
            }
            (Region::Grid(a), Region::Grid(b)) => {
                let mut best: Option<Dist> = None;
                for &i in a {
                    for &j in b {
                        let d = spec.distance(&Point::Grid(i), &Point::Grid(j))?;
                        best = Some(best.map_or(d, |x| x.min(d)));
                    }
                }
                best.ok_or_else(|| Error::InvalidParameter("empty region".into()))?
            }
            _ => return Err(Error::InvalidParameter("mixed region kinds".into())),
        };
        if sep.is_zero() {
            return Err(Error::InvalidParameter("regions of an IE-pair must have disjoint closures".into()));
        }
        Ok(sep)
    }

    pub fn from_json(spec: &SystemSpec, text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum RegionDoc {
            Word(String),
            Grid(Vec<u64>),
        }
        #[derive(Deserialize)]
        struct PairDoc {
            u0: RegionDoc,
            u1: RegionDoc,
        }
        let doc: PairDoc = serde_json::from_str(text)?;
        let conv = |r: RegionDoc| -> Result<Region> {
            match r {
                RegionDoc::Word(w) => {
                    let alpha = spec
                        .alphabet()
                        .ok_or_else(|| Error::InvalidParameter("cylinders need a shift system".into()))?;
                    Ok(Region::Cylinder(parse_word(alpha, &w)?))
                }
                RegionDoc::Grid(g) => Ok(Region::Grid(g.into_iter().collect())),
            }
        };
        let pair = IePair::new(conv(doc.u0)?, conv(doc.u1)?);
        pair.separation(spec)?;
        Ok(pair)
    }
}

/// Lipschitz closed form `γ_m = K^{-m} d(U_0, U_1) / 2`.
pub fn gamma_closed_form(spec: &SystemSpec, pair: &IePair, m: usize) -> Result<Q> {
    if m == 0 {
        return Err(Error::InvalidParameter("gamma_m needs m >= 1".into()));
    }
    let sep = dist_to_q(pair.separation(spec)?);
    let k = dist_to_q(spec.lipschitz());
    Ok(sep / (q_int(2) * q_pow(&k, m as u32)))
}

/// Largest table value `γ` such that `d(x, y) < γ` forces `d(T^k x, T^k y) < d(U_0, U_1)`
/// for every `k < m`, over all represented pairs. Capped at the diameter when no pair
/// ever reaches the separation.
pub fn gamma_exact(spec: &SystemSpec, pair: &IePair, m: usize) -> Result<Q> {
    if m == 0 {
        return Err(Error::InvalidParameter("gamma_m needs m >= 1".into()));
    }
    spec.require_depth(m, "exact gamma_m")?;
    let sep = pair.separation(spec)?;
    let points = spec.points()?;
    if points.len() > 4096 {
        return Err(Error::Refused(format!("exact gamma over {} points", points.len())));
    }
    let orbits: Vec<Vec<Point>> = points
        .iter()
        .map(|p| (0..m).map(|k| spec.iterate(p, k)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut best: Option<Dist> = None;
    let mut diameter = Dist::zero();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = spec.distance(&points[i], &points[j])?;
            diameter = diameter.max(d);
            if best.is_some_and(|b| d >= b) {
                continue;
            }
            let mut violates = false;
            for k in 0..m {
                if spec.distance(&orbits[i][k], &orbits[j][k])? >= sep {
                    violates = true;
                    break;
                }
            }
            if violates {
                best = Some(d);
            }
        }
    }
    Ok(dist_to_q(best.unwrap_or(diameter)))
}

/// `d(S, S')` between finite point sets.
pub fn set_distance(spec: &SystemSpec, a: &[Point], b: &[Point]) -> Result<Option<Dist>> {
    let mut best: Option<Dist> = None;
    for x in a {
        for y in b {
            let d = spec.distance(x, y)?;
            best = Some(best.map_or(d, |v| v.min(d)));
        }
    }
    Ok(best)
}
