#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use wmdim_core::cube::{AxisBox, BoxCover, Interval};
use wmdim_core::measures::DiscreteMeasure;
use wmdim_core::rational::q_frac;
use wmdim_core::spaces::{Point, SystemSpec};
use wmdim_core::transport::Ground;
use wmdim_core::{Dist, Q};

pub fn w(s: &str) -> Point {
    Point::Word(s.bytes().map(|b| b - b'0').collect())
}

pub fn random_measure(rng: &mut ChaCha8Rng, pts: &[Point], max_support: usize) -> DiscreteMeasure {
    let size = rng.gen_range(1..=max_support.min(pts.len()));
    let chosen: Vec<&Point> = pts.choose_multiple(rng, size).collect();
    let raw: Vec<i64> = chosen.iter().map(|_| rng.gen_range(1..=5)).collect();
    let total: i64 = raw.iter().sum();
    DiscreteMeasure::new(chosen.into_iter().cloned().zip(raw.iter().map(|&r| q_frac(r, total)))).unwrap()
}

/// Minimum cost over the vertices of the transportation polytope, on integers.
/// A vertex is reached by saturating a cell with `min(s_i, d_j)` and deleting the
/// exhausted row or column, in every order.
pub fn vertex_oracle(supply: &[i128], demand: &[i128], cost: &[Vec<i128>]) -> i128 {
    type Key = (u32, u32, Vec<i128>, Vec<i128>);
    fn go(rows: u32, cols: u32, s: &mut Vec<i128>, d: &mut Vec<i128>, cost: &[Vec<i128>], memo: &mut HashMap<Key, i128>) -> i128 {
        if rows == 0 || cols == 0 {
            return 0;
        }
        let key = (rows, cols, s.clone(), d.clone());
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let mut best = i128::MAX;
        for i in (0..s.len()).filter(|i| rows >> i & 1 == 1) {
            for j in (0..d.len()).filter(|j| cols >> j & 1 == 1) {
                let x = s[i].min(d[j]);
                s[i] -= x;
                d[j] -= x;
                let r = if s[i] == 0 { rows & !(1 << i) } else { rows };
                let c = if d[j] == 0 { cols & !(1 << j) } else { cols };
                best = best.min(x * cost[i][j] + go(r, c, s, d, cost, memo));
                s[i] += x;
                d[j] += x;
            }
        }
        memo.insert(key, best);
        best
    }
    let mut memo = HashMap::new();
    go((1 << supply.len()) - 1, (1 << demand.len()) - 1, &mut supply.to_vec(), &mut demand.to_vec(), cost, &mut memo)
}

pub fn oracle_w1<G: Ground>(g: &G, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Q {
    let dists: Vec<Vec<Dist>> = mu.support().map(|x| nu.support().map(|y| g.ground(x, y).unwrap()).collect()).collect();
    let cden = dists.iter().flatten().fold(1i64, |l, d| l.lcm(d.denom()));
    let wden = mu
        .atoms()
        .values()
        .chain(nu.atoms().values())
        .fold(num_bigint::BigInt::from(1), |l, w| l.lcm(w.denom()));
    let int = |w: &Q| -> i128 { (w * &wden).to_integer().try_into().unwrap() };
    let cost: Vec<Vec<i128>> = dists
        .iter()
        .map(|r| r.iter().map(|d| (d.numer() * (cden / d.denom())) as i128).collect())
        .collect();
    let s: Vec<i128> = mu.atoms().values().map(int).collect();
    let d: Vec<i128> = nu.atoms().values().map(int).collect();
    Q::new(vertex_oracle(&s, &d, &cost).into(), wden * cden)
}

/// Admissible words of length `len`, by powers of the 2-block transfer matrix.
pub fn transfer_count(spec: &SystemSpec, len: usize) -> u128 {
    let lang = spec.language().unwrap();
    let a = lang.alphabet();
    let mut v = vec![1u128; a];
    for _ in 1..len {
        let mut next = vec![0u128; a];
        for (s, &c) in v.iter().enumerate() {
            for (t, slot) in next.iter_mut().enumerate() {
                if lang.is_admissible(&[s as u8, t as u8]) {
                    *slot += c;
                }
            }
        }
        v = next;
    }
    v.iter().sum()
}

/// Random interval with endpoints in `{0, 1/10, …, 1}` and random closedness.
pub fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    loop {
        let a = rng.gen_range(0..=10);
        let b = rng.gen_range(a..=10);
        let (lc, hc) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
        if a == b && !(lc && hc) {
            continue;
        }
        return Interval::new(q_frac(a, 10), q_frac(b, 10), lc, hc).unwrap();
    }
}

pub fn random_box_cover(rng: &mut ChaCha8Rng, k: usize, n: usize, boxes: usize) -> BoxCover {
    let boxes = (0..boxes)
        .map(|_| AxisBox::new((0..n).map(|_| (0..k).map(|_| random_interval(rng)).collect()).collect()).unwrap())
        .collect();
    BoxCover::new(k, n, boxes).unwrap()
}

/// Points of `Δ_k` with coordinates in `(1/60)ℤ`. For intervals with endpoints in
/// `(1/10)ℤ` and `k ≤ 3` this meets every face of the arrangement: vertices lie on
/// the `1/10` lattice, edge midpoints on `1/20`, triangle centroids on `1/30`.
fn lattice(k: usize) -> Vec<Vec<Q>> {
    assert!((1..=3).contains(&k), "lattice oracle is exact only for k <= 3");
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(k: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<Q>>) {
        if cur.len() == k - 1 {
            let mut p: Vec<Q> = cur.iter().map(|&a| q_frac(a, 60)).collect();
            p.push(q_frac(left, 60));
            out.push(p);
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(k, left - a, cur, out);
            cur.pop();
        }
    }
    rec(k, 60, &mut cur, &mut out);
    out
}

/// Largest number of boxes sharing a point of `Δ_k^n`, minus one, by enumeration.
pub fn arrangement_order(cover: &BoxCover) -> i64 {
    let (k, n) = (cover.k(), cover.n());
    let pts = lattice(k);
    // Per factor, the distinct sets of boxes containing some lattice point.
    let signatures: Vec<BTreeSet<u64>> = (0..n)
        .map(|slot| {
            pts.iter()
                .map(|p| {
                    cover.boxes().iter().enumerate().fold(0u64, |acc, (i, b)| {
                        let inside = (0..k).all(|c| b.interval(slot, c).contains(&p[c]));
                        acc | (inside as u64) << i
                    })
                })
                .collect()
        })
        .collect();
    let mut best = 0u32;
    let mut stack = vec![(0usize, u64::MAX >> (64 - cover.boxes().len().max(1)))];
    if cover.boxes().is_empty() {
        return -1;
    }
    while let Some((slot, acc)) = stack.pop() {
        if slot == n {
            best = best.max(acc.count_ones());
            continue;
        }
        for &s in &signatures[slot] {
            stack.push((slot + 1, acc & s));
        }
    }
    best as i64 - 1
}
