//! Runnable checkers for the quantitative lemmas behind the lower bounds.
//!
//! Each checker returns a [`CheckReport`] whose verdict is decided by exact rational
//! margins: the slack of the inequality (or the negated defect of the identity) being
//! checked, minimized over trials. Random trials are driven by a recorded seed.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cube::{cover_order, epsilon_m, is_separating};
use crate::entropy::{ball_cover, HnFamily};
use crate::independence::{block_summary, pick_anchors, BlockSummary, IndependenceWindow};
use crate::measures::{decompose, xi, AnchorFamily, CubePoint, DiscreteMeasure, SimplexPoint};
use crate::rational::{dist_to_q, fmt_q, q_frac, q_int};
use crate::spaces::{gamma_closed_form, IePair, Point, SystemKind, SystemSpec};
use crate::transport::{support_bound, w1_cost, wnm};
use crate::{Error, Result, Q};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckParams {
    pub system: String,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub q_m: Option<usize>,
    pub gamma_m: Option<String>,
    pub eps_m: Option<String>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub lemma: String,
    pub params: CheckParams,
    pub trials: usize,
    /// Trials whose preconditions could not be met.
    pub skipped: usize,
    /// Minimum slack over all trials and inequalities; `None` when nothing was checked.
    pub worst_margin: Option<String>,
    /// `Some(true)` when the perturbed construction was rejected as it must be.
    pub negative_control: Option<bool>,
    pub notes: Vec<String>,
    pub verdict: bool,
}

impl CheckReport {
    pub fn summary(&self) -> String {
        format!(
            "{}: {} ({} trials, {} skipped, worst margin {}{})",
            self.lemma,
            if self.verdict { "PASS" } else { "FAIL" },
            self.trials,
            self.skipped,
            self.worst_margin.as_deref().unwrap_or("n/a"),
            match self.negative_control {
                Some(true) => ", negative control rejected",
                Some(false) => ", negative control NOT rejected",
                None => "",
            }
        )
    }
}

/// Running minimum of exact margins.
#[derive(Default)]
struct Margins {
    worst: Option<Q>,
    checked: usize,
}

impl Margins {
    fn push(&mut self, m: Q) {
        self.checked += 1;
        if self.worst.as_ref().is_none_or(|w| m < *w) {
            self.worst = Some(m);
        }
    }

    fn ok(&self) -> bool {
        self.worst.as_ref().is_none_or(|w| !w.is_negative())
    }

    fn worst_string(&self) -> Option<String> {
        self.worst.as_ref().map(fmt_q)
    }
}

fn system_label(spec: &SystemSpec) -> String {
    match spec.kind() {
        SystemKind::FullShift { alphabet, depth } => format!("full-shift |A|={} depth={depth}", alphabet.len()),
        SystemKind::Sft { alphabet, forbidden, depth } => {
            format!("sft |A|={} forbidden={} depth={depth}", alphabet.len(), forbidden.len())
        }
        SystemKind::Circle { a, q } => format!("circle a={a} Q={q}"),
    }
}

/// Lemma setting: `U_0 = [0]`, `U_1 = [1]` (first-symbol cylinders), `I = ℕ` with `δ = 1`.
pub struct LemmaContext {
    pub spec: SystemSpec,
    pub m: usize,
    pub n: usize,
    pub summary: BlockSummary,
    pub anchors: AnchorFamily,
    pub gamma: Q,
    pub eps: Q,
    pub diam: Q,
}

impl LemmaContext {
    pub fn new(spec: &SystemSpec, m: usize, n: usize) -> Result<Self> {
        let pair = IePair::first_symbol();
        spec.require_depth(n * m, "lemma checks")?;
        let window = IndependenceWindow::naturals(n * m, pair.clone());
        Self::with_window(spec, &window, &Q::one(), m, n)
    }

    pub fn with_window(spec: &SystemSpec, window: &IndependenceWindow, delta: &Q, m: usize, n: usize) -> Result<Self> {
        let summary = block_summary(window, m, delta)?;
        if summary.q_m == 0 {
            return Err(Error::InvalidParameter(format!("q_m = 0 at m = {m}; pick a larger block length")));
        }
        let anchors = pick_anchors(spec, window, &summary, n)?;
        if anchors.n() == 0 {
            return Err(Error::InvalidParameter("I^m_n is empty; the cube has no factors".into()));
        }
        let gamma = gamma_closed_form(spec, window.pair(), m)?;
        let diam = if spec.is_shift() {
            Q::one()
        } else {
            dist_to_q(spec.build_space()?.diameter())
        };
        let eps = epsilon_m(&gamma, summary.q_m, &diam)?;
        Ok(LemmaContext {
            spec: spec.clone(),
            m,
            n,
            summary,
            anchors,
            gamma,
            eps,
            diam,
        })
    }

    fn k(&self) -> usize {
        self.anchors.k()
    }

    fn slots(&self) -> usize {
        self.anchors.n()
    }

    fn params(&self, seed: u64) -> CheckParams {
        CheckParams {
            system: system_label(&self.spec),
            m: Some(self.m),
            n: Some(self.n),
            q_m: Some(self.summary.q_m),
            gamma_m: Some(fmt_q(&self.gamma)),
            eps_m: Some(fmt_q(&self.eps)),
            seed,
        }
    }

    fn xi(&self, t: &CubePoint) -> Result<DiscreteMeasure> {
        xi(t, &self.anchors)
    }

    fn wnm(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<Q> {
        wnm(&self.spec, a, b, self.n, self.m)
    }

    fn random_cube_point(&self, rng: &mut ChaCha8Rng) -> Result<CubePoint> {
        CubePoint::new((0..self.slots()).map(|_| random_simplex(self.k(), rng)).collect())
    }
}

/// Random vector: a vertex, the centre, or small random integer weights.
fn random_simplex(k: usize, rng: &mut ChaCha8Rng) -> SimplexPoint {
    match rng.gen_range(0..6) {
        0 => SimplexPoint::vertex(k, rng.gen_range(0..k)),
        1 => SimplexPoint::center(k),
        _ => loop {
            let w: Vec<i64> = (0..k).map(|_| rng.gen_range(0..6)).collect();
            let total: i64 = w.iter().sum();
            if total > 0 {
                break SimplexPoint::new(w.iter().map(|&x| q_frac(x, total)).collect()).unwrap();
            }
        },
    }
}

/// Random proper nonempty face of `⟦k⟧`.
fn random_face(k: usize, rng: &mut ChaCha8Rng) -> BTreeSet<usize> {
    loop {
        let f: BTreeSet<usize> = (0..k).filter(|_| rng.gen_bool(0.5)).collect();
        if !f.is_empty() && f.len() < k {
            return f;
        }
    }
}

fn random_measure(points: &[Point], max_support: usize, rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure> {
    let size = rng.gen_range(1..=max_support.min(points.len()));
    let atoms: Vec<(Point, Q)> = (0..size)
        .map(|_| (points[rng.gen_range(0..points.len())].clone(), q_int(rng.gen_range(1..=6))))
        .collect();
    let total: Q = atoms.iter().map(|(_, w)| w).sum();
    DiscreteMeasure::from_masses(atoms.into_iter().map(|(p, w)| (p, w / &total)))
}

fn sample_points(spec: &SystemSpec) -> Result<Vec<Point>> {
    match spec.depth() {
        Some(d) if d > 10 => spec.with_depth(10)?.points(),
        _ => spec.points(),
    }
}

/// `W(μ, ν) ≥ μ(S∖S′) · d(S∖S′, S′)` on random `(μ, ν, S, S′)` with `supp μ ⊆ S`, `supp ν ⊆ S′`.
pub fn check_support_bound(spec: &SystemSpec, trials: usize, seed: u64) -> Result<CheckReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let points = sample_points(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margins = Margins::default();
    for _ in 0..trials {
        let mu = random_measure(&points, 5, &mut rng)?;
        let nu = random_measure(&points, 5, &mut rng)?;
        let mut s: BTreeSet<Point> = mu.support().cloned().collect();
        let mut s_prime: BTreeSet<Point> = nu.support().cloned().collect();
        for _ in 0..rng.gen_range(0..3) {
            s.insert(points[rng.gen_range(0..points.len())].clone());
            s_prime.insert(points[rng.gen_range(0..points.len())].clone());
        }
        let bound = support_bound(spec, &mu, &nu, &s, &s_prime)?;
        margins.push(w1_cost(spec, &mu, &nu)? - bound);
    }
    Ok(CheckReport {
        lemma: "ffact".into(),
        params: CheckParams {
            system: system_label(spec),
            m: None,
            n: None,
            q_m: None,
            gamma_m: None,
            eps_m: None,
            seed,
        },
        trials,
        skipped: 0,
        worst_margin: margins.worst_string(),
        negative_control: None,
        notes: vec![],
        verdict: margins.ok(),
    })
}

/// Total variation of `a − b`.
fn defect(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Q {
    let keys: BTreeSet<&Point> = a.support().chain(b.support()).collect();
    keys.into_iter().map(|p| (a.weight(p) - b.weight(p)).abs()).sum()
}

/// `Ξ(t) = λ Ξ(t′) + (1−λ) Ξ(t″)` with `λ = Ξ(t)(S_{Ξ(F_i)})`, `Ξ(t′)` carried by
/// `S_{Ξ(F_i)}` and `Ξ(t″)` by `S_{Ξ(F̄_i)}`. Margin: minus the total defect.
pub fn check_decomposition(spec: &SystemSpec, m: usize, n: usize, trials: usize, seed: u64) -> Result<CheckReport> {
    let ctx = LemmaContext::new(spec, m, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margins = Margins::default();
    for _ in 0..trials {
        let t = ctx.random_cube_point(&mut rng)?;
        let slot = rng.gen_range(0..ctx.slots());
        let face = random_face(ctx.k(), &mut rng);
        let opposite: BTreeSet<usize> = (0..ctx.k()).filter(|j| !face.contains(j)).collect();
        let (lambda, t1, t2) = decompose(&t, slot, &face)?;
        let (mu, mu1, mu2) = (ctx.xi(&t)?, ctx.xi(&t1)?, ctx.xi(&t2)?);
        let s_face = ctx.anchors.face_support(slot, &face);
        let s_opp = ctx.anchors.face_support(slot, &opposite);
        let mut bad = defect(&mu, &DiscreteMeasure::mix(&lambda, &mu1, &mu2)?);
        bad += (mu.mass_in(&s_face) - &lambda).abs();
        bad += Q::one() - mu1.mass_in(&s_face);
        bad += Q::one() - mu2.mass_in(&s_opp);
        margins.push(-bad);
    }
    Ok(CheckReport {
        lemma: "decomposition".into(),
        params: ctx.params(seed),
        trials,
        skipped: 0,
        worst_margin: margins.worst_string(),
        negative_control: None,
        notes: vec![],
        verdict: margins.ok(),
    })
}

/// Points of the face `F_i` used for the grid-relative lower bound: every factor ranges
/// over vectors with denominator 2, factor `slot` restricted to the face.
fn face_grid(ctx: &LemmaContext, slot: usize, face: &BTreeSet<usize>) -> Result<Vec<CubePoint>> {
    let k = ctx.k();
    let half: Vec<SimplexPoint> = {
        let mut v: Vec<SimplexPoint> = (0..k).map(|i| SimplexPoint::vertex(k, i)).collect();
        for i in 0..k {
            for j in i + 1..k {
                v.push(SimplexPoint::uniform_on(k, &[i, j].into())?);
            }
        }
        v
    };
    let mut out = Vec::new();
    let choices: Vec<Vec<SimplexPoint>> = (0..ctx.slots())
        .map(|s| {
            if s == slot {
                half.iter().filter(|p| p.support().is_subset(face)).cloned().collect()
            } else {
                half.clone()
            }
        })
        .collect();
    let total: usize = choices.iter().map(Vec::len).product();
    if total > 4096 {
        return Err(Error::Refused(format!("face grid of {total} points")));
    }
    for r in 0..total {
        let mut rest = r;
        let mut factors = Vec::with_capacity(choices.len());
        for c in choices.iter().rev() {
            factors.push(c[rest % c.len()].clone());
            rest /= c.len();
        }
        factors.reverse();
        out.push(CubePoint::new(factors)?);
    }
    Ok(out)
}

/// For `μ = Ξ(t)`, `β = μ(S_{F̄_i})`:
/// lower `W_n^m(μ, ν) ≥ β γ_m` for every grid point `ν` of `F_i` and the witness `Ξ(t′)`;
/// upper `W_n^m(μ, Ξ(t′)) ≤ β W_n^m(Ξ(t′), Ξ(t″)) ≤ β diam`.
pub fn check_tech(spec: &SystemSpec, m: usize, n: usize, trials: usize, seed: u64) -> Result<CheckReport> {
    let ctx = LemmaContext::new(spec, m, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower = Margins::default();
    let mut upper = Margins::default();
    for _ in 0..trials {
        let t = ctx.random_cube_point(&mut rng)?;
        let slot = rng.gen_range(0..ctx.slots());
        let face = random_face(ctx.k(), &mut rng);
        let opposite: BTreeSet<usize> = (0..ctx.k()).filter(|j| !face.contains(j)).collect();
        let (_, t1, t2) = decompose(&t, slot, &face)?;
        let (mu, mu1, mu2) = (ctx.xi(&t)?, ctx.xi(&t1)?, ctx.xi(&t2)?);
        let beta = mu.mass_in(&ctx.anchors.face_support(slot, &opposite));
        let required = &beta * &ctx.gamma;
        let to_witness = ctx.wnm(&mu, &mu1)?;
        lower.push(&to_witness - &required);
        for s in face_grid(&ctx, slot, &face)? {
            lower.push(ctx.wnm(&mu, &ctx.xi(&s)?)? - &required);
        }
        let chain = &beta * ctx.wnm(&mu1, &mu2)?;
        upper.push(&chain - &to_witness);
        upper.push(&beta * &ctx.diam - &chain);
    }
    let mut margins = Margins::default();
    for m in [&lower.worst, &upper.worst].into_iter().flatten() {
        margins.push(m.clone());
    }
    Ok(CheckReport {
        lemma: "tech".into(),
        params: ctx.params(seed),
        trials,
        skipped: 0,
        worst_margin: margins.worst_string(),
        negative_control: None,
        notes: vec![
            format!("lower-bound worst slack {} (face grid, grid-relative)", lower.worst_string().unwrap_or_default()),
            format!("upper-bound worst slack {} (witness chain)", upper.worst_string().unwrap_or_default()),
        ],
        verdict: margins.ok(),
    })
}

/// Witness distance from `Ξ(t)` to the face `I` at `slot` (the whole simplex gives 0).
fn witness_distance(ctx: &LemmaContext, t: &CubePoint, slot: usize, face: &BTreeSet<usize>) -> Result<Q> {
    if face.len() == ctx.k() {
        return Ok(Q::zero());
    }
    let (_, t1, _) = decompose(t, slot, face)?;
    ctx.wnm(&ctx.xi(t)?, &ctx.xi(&t1)?)
}

/// If `W_n^m(μ, F_i) < ε_m` for every face of a family `ℱ` at slot `i` (certified through
/// witnesses), then `W_n^m(μ, ⋂ F_i) ≤ γ_m / 2`. Trials whose constraint fails are skipped;
/// a satisfied constraint with empty intersection is a violation.
pub fn check_inter(spec: &SystemSpec, m: usize, n: usize, trials: usize, seed: u64) -> Result<CheckReport> {
    let ctx = LemmaContext::new(spec, m, n)?;
    let k = ctx.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margins = Margins::default();
    let mut skipped = 0;
    let mut empty_hits = 0;
    let half_gamma = &ctx.gamma / q_int(2);
    for _ in 0..trials {
        let slot = rng.gen_range(0..ctx.slots());
        let family: Vec<BTreeSet<usize>> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let f: BTreeSet<usize> = (0..k).filter(|_| rng.gen_bool(0.6)).collect();
                if f.is_empty() { [rng.gen_range(0..k)].into() } else { f }
            })
            .collect();
        let meet: BTreeSet<usize> = (0..k).filter(|j| family.iter().all(|f| f.contains(j))).collect();
        // Put t_i close to the intersection (or to the first face when it is empty).
        let target: BTreeSet<usize> = if meet.is_empty() { family[0].clone() } else { meet.clone() };
        let eta = [Q::zero(), q_frac(1, 1000), q_frac(1, 600), q_frac(1, 100)][rng.gen_range(0..4)].clone();
        let near = SimplexPoint::mix(
            &(Q::one() - &eta),
            &SimplexPoint::uniform_on(k, &target)?,
            &random_simplex(k, &mut rng),
        )?;
        let t = ctx.random_cube_point(&mut rng)?.with_factor(slot, near)?;
        let mut satisfied = true;
        for f in &family {
            if witness_distance(&ctx, &t, slot, f)? >= ctx.eps {
                satisfied = false;
                break;
            }
        }
        if !satisfied {
            skipped += 1;
            continue;
        }
        if meet.is_empty() {
            empty_hits += 1;
            margins.push(-q_int(1));
            continue;
        }
        margins.push(&half_gamma - witness_distance(&ctx, &t, slot, &meet)?);
    }
    let mut notes = vec![format!("constraint W_n^m(μ, F_i) < ε_m = {} certified by witnesses", fmt_q(&ctx.eps))];
    if empty_hits > 0 {
        notes.push(format!("{empty_hits} trials satisfied the constraint with an empty intersection"));
    }
    Ok(CheckReport {
        lemma: "inter".into(),
        params: ctx.params(seed),
        trials,
        skipped,
        worst_margin: margins.worst_string(),
        negative_control: None,
        notes,
        verdict: margins.ok() && margins.checked > 0,
    })
}

/// Finite sample of `L_n = Ξ(Δ_k^{I^m_n})`: all cube points whose factors have denominator `g`.
pub fn ln_sample(ctx: &LemmaContext, g: i64) -> Result<Vec<(CubePoint, DiscreteMeasure)>> {
    let k = ctx.k();
    let mut factor: Vec<SimplexPoint> = Vec::new();
    let mut parts = vec![0i64; k];
    fn fill(i: usize, left: i64, g: i64, parts: &mut Vec<i64>, out: &mut Vec<SimplexPoint>) {
        if i + 1 == parts.len() {
            parts[i] = left;
            out.push(SimplexPoint::new(parts.iter().map(|&c| q_frac(c, g)).collect()).unwrap());
            return;
        }
        for c in (0..=left).rev() {
            parts[i] = c;
            fill(i + 1, left - c, g, parts, out);
        }
    }
    fill(0, g, g, &mut parts, &mut factor);
    let total = (factor.len() as u128).pow(ctx.slots() as u32);
    if total > 512 {
        return Err(Error::Refused(format!("L_n sample of {total} points")));
    }
    let mut out = Vec::with_capacity(total as usize);
    for r in 0..total as usize {
        let mut rest = r;
        let mut fs = Vec::with_capacity(ctx.slots());
        for _ in 0..ctx.slots() {
            fs.push(factor[rest % factor.len()].clone());
            rest /= factor.len();
        }
        fs.reverse();
        let t = CubePoint::new(fs)?;
        let mu = ctx.xi(&t)?;
        out.push((t, mu));
    }
    Ok(out)
}

/// A cover of the `L_n` sample by `W_n^m`-balls of radius `ε_m/4` around every sample point
/// has diameter below `ε_m` and must be separating. Negative control: radius `2γ_m`
/// must produce a violation.
pub fn check_coversep(spec: &SystemSpec, m: usize, n: usize) -> Result<CheckReport> {
    let ctx = LemmaContext::new(spec, m, n)?;
    let samples = ln_sample(&ctx, 4)?;
    let net: Vec<usize> = (0..samples.len()).collect();
    let radius = &ctx.eps / q_int(4);
    let cover = ball_cover(&ctx.spec, &samples, &net, &radius, n, m)?;
    let violation = is_separating(&cover);
    let fat = ball_cover(&ctx.spec, &samples, &net, &(q_int(2) * &ctx.gamma), n, m)?;
    let fat_violation = is_separating(&fat);
    let mut notes = vec![
        format!(
            "{} samples, radius {}, cover order {}",
            samples.len(),
            fmt_q(&radius),
            cover_order(&cover)
        ),
    ];
    if let Some(v) = &violation {
        notes.push(format!("violation: {v}"));
    }
    match &fat_violation {
        Some(v) => notes.push(format!("negative control (radius {}): {v}", fmt_q(&(q_int(2) * &ctx.gamma)))),
        None => notes.push("negative control unexpectedly separating".into()),
    }
    let margin = if violation.is_none() { Q::zero() } else { -Q::one() };
    Ok(CheckReport {
        lemma: "coversep".into(),
        params: ctx.params(0),
        trials: 1,
        skipped: 0,
        worst_margin: Some(fmt_q(&margin)),
        negative_control: Some(fat_violation.is_some()),
        verdict: violation.is_none() && fat_violation.is_some(),
        notes,
    })
}

/// Every pair of the `H_n` family is `W_n^m`-separated above `γ_m / 2^{q_m}`. Negative
/// control: contracting the family towards a fixed Dirac by the factor
/// `threshold / min distance` must bring the closest pair down to the threshold.
pub fn check_sn(spec: &SystemSpec, m: usize, n: usize) -> Result<CheckReport> {
    let ctx = LemmaContext::new(spec, m, n)?;
    let h = HnFamily::full_shift(spec, m, n)?;
    let check = h.verify(spec, 100_000)?;
    let threshold = h.threshold();
    let margin = check.min_distance.clone().map(|d| d - &threshold);
    let control = match &check.min_distance {
        Some(min) if min.is_positive() => {
            let eta = (&threshold / min).min(Q::one());
            let base = DiscreteMeasure::dirac(ctx.anchors.anchors()[0].clone());
            let shrunk: Vec<DiscreteMeasure> = h
                .measures
                .iter()
                .map(|mu| DiscreteMeasure::mix(&eta, mu, &base))
                .collect::<Result<_>>()?;
            let mut separated = true;
            'pairs: for i in 0..shrunk.len() {
                for j in i + 1..shrunk.len() {
                    if wnm(spec, &shrunk[i], &shrunk[j], n, m)? <= threshold {
                        separated = false;
                        break 'pairs;
                    }
                }
            }
            Some(!separated)
        }
        _ => None,
    };
    Ok(CheckReport {
        lemma: "sn".into(),
        params: ctx.params(0),
        trials: check.pairs_checked,
        skipped: 0,
        worst_margin: margin.as_ref().map(fmt_q),
        negative_control: control,
        notes: vec![
            format!(
                "{} measures, certified cardinality {}, threshold {}, min W_n^m {}",
                check.size,
                check.certified_cardinality,
                fmt_q(&threshold),
                check.min_distance.as_ref().map(fmt_q).unwrap_or_else(|| "n/a".into())
            ),
        ],
        // Strict separation: a zero margin is a failure here.
        verdict: margin.is_some_and(|m| m.is_positive()) && control != Some(false),
    })
}

/// Lemma tags accepted by [`run_check`].
pub const LEMMAS: [&str; 6] = ["ffact", "decomposition", "tech", "inter", "coversep", "sn"];

pub fn run_check(lemma: &str, spec: &SystemSpec, m: usize, n: usize, trials: usize, seed: u64) -> Result<CheckReport> {
    match lemma {
        "ffact" => check_support_bound(spec, trials, seed),
        "decomposition" => check_decomposition(spec, m, n, trials, seed),
        "tech" => check_tech(spec, m, n, trials, seed),
        "inter" => check_inter(spec, m, n, trials, seed),
        "coversep" => check_coversep(spec, m, n),
        "sn" => check_sn(spec, m, n),
        other => Err(Error::InvalidParameter(format!(
            "unknown lemma {other:?}; expected one of {}",
            LEMMAS.join(", ")
        ))),
    }
}
