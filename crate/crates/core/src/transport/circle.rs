//! W₁ on the circle grid by cumulative mass.
//!
//! Moving mass across the arc between `j/Q` and `(j+1)/Q` costs `1/Q` per unit.
//! With `F_j` the cumulative difference of the two measures up to `j`, any
//! transport plan pushes `F_j − c` across that arc for some constant `c`, so
//! `W₁ = (1/Q) · min_c Σ_j |F_j − c|`, attained at a median of the `F_j`.

use num_traits::{Signed, Zero};

use crate::measures::DiscreteMeasure;
use crate::rational::q_int;
use crate::spaces::{Point, SystemSpec};
use crate::{Error, Result, Q};

pub fn w1_circle(spec: &SystemSpec, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Q> {
    let q = spec
        .grid_size()
        .ok_or_else(|| Error::InvalidParameter("circle transport needs a circle grid".into()))?;
    let mut diff: Vec<(u64, Q)> = Vec::with_capacity(mu.len() + nu.len());
    for (measure, sign) in [(mu, 1), (nu, -1)] {
        for (p, w) in measure.atoms() {
            match p {
                Point::Grid(j) if *j < q => diff.push((*j, if sign > 0 { w.clone() } else { -w.clone() })),
                _ => return Err(Error::DimensionMismatch(format!("{p} is not on the {q}-point circle grid"))),
            }
        }
    }
    diff.sort_by_key(|(j, _)| *j);
    // Cumulative sums are constant between consecutive support points, so each
    // value is weighted by the number of arcs it covers.
    let mut runs: Vec<(Q, u64)> = Vec::new();
    let mut acc = Q::zero();
    for (idx, (j, w)) in diff.iter().enumerate() {
        acc += w;
        let next = diff.get(idx + 1).map_or(q + diff[0].0, |(k, _)| *k);
        if next > *j {
            runs.push((acc.clone(), next - j));
        }
    }
    let mut sorted = runs.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let half = q.div_ceil(2);
    let mut seen = 0;
    let mut median = Q::zero();
    for (value, len) in &sorted {
        seen += len;
        if seen >= half {
            median = value.clone();
            break;
        }
    }
    let total: Q = runs.iter().map(|(f, len)| (f - &median).abs() * q_int(*len as i64)).sum();
    Ok(total / q_int(q as i64))
}
