//! Experiment configs, a deterministic parallel work queue and CSV/SVG output.
//!
//! Every experiment is a list of independent cells evaluated on a bounded thread
//! pool; results are merged in cell order, so the CSV bytes depend only on the
//! config. Each CSV starts with a comment line carrying the SHA-256 of the
//! canonical config.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checks::{run_check, CheckReport, LEMMAS};
use crate::cube::{cover_order, is_separating, search_min_separating_order};
use crate::entropy::{entropy_estimate, induced_separated, lower_bound_curve, space_spanning_count, MeasureGrid};
use crate::rational::{fmt_q, parse_q, q_int, q_pow, q_to_f64};
use crate::spaces::SystemSpec;
use crate::{Error, Result, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Rates,
    Entropy,
    InducedEntropy,
    VerifyAll,
    Cover,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Rates => "rates",
            ExperimentKind::Entropy => "entropy",
            ExperimentKind::InducedEntropy => "induced-entropy",
            ExperimentKind::VerifyAll => "verify-all",
            ExperimentKind::Cover => "cover",
        }
    }
}

/// Inclusive integer range written as `"a..b"`, a single integer, or a list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RangeRepr", into = "Vec<usize>")]
pub struct IntRange(Vec<usize>);

#[derive(Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    One(usize),
    Text(String),
    List(Vec<usize>),
}

impl TryFrom<RangeRepr> for IntRange {
    type Error = String;
    fn try_from(r: RangeRepr) -> std::result::Result<Self, String> {
        match r {
            RangeRepr::One(v) => Ok(IntRange(vec![v])),
            RangeRepr::List(v) if v.is_empty() => Err("empty range".into()),
            RangeRepr::List(v) => Ok(IntRange(v)),
            RangeRepr::Text(s) => s.parse().map_err(|e: Error| e.to_string()),
        }
    }
}

impl From<usize> for IntRange {
    fn from(v: usize) -> Self {
        IntRange(vec![v])
    }
}

impl From<IntRange> for Vec<usize> {
    fn from(r: IntRange) -> Self {
        r.0
    }
}

impl std::str::FromStr for IntRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("malformed range {s:?} (expected a..b or an integer)"));
        let s = s.trim();
        let values = match s.split_once("..") {
            Some((a, b)) => {
                let b = b.strip_prefix('=').unwrap_or(b);
                let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                (a..=b).collect::<Vec<_>>()
            }
            None => vec![s.parse().map_err(|_| bad())?],
        };
        if values.is_empty() {
            return Err(Error::InvalidParameter(format!("range {s:?} is empty")));
        }
        Ok(IntRange(values))
    }
}

impl IntRange {
    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> usize {
        *self.0.iter().max().unwrap()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Weights are multiples of `1/g`.
    pub g: usize,
    /// Cylinder length of the support representatives.
    pub level: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// System JSON object (paths are resolved by the caller before parsing).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<IntRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<IntRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_pairs: Option<usize>,
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parses a config, naming the offending key on failure.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.to_string();
        // Missing fields are reported at the enclosing object; name the field.
        let key = match msg.split('`').nth(1) {
            Some(field) if msg.starts_with("missing field") => match path.as_str() {
                "." => field.to_string(),
                _ => format!("{path}.{field}"),
            },
            _ => path,
        };
        config_error(&key, msg)
    })
}

/// Reads a config file; a string `system` is a path relative to the config's directory.
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| config_error(".", format!("malformed JSON: {e}")))?;
    if let Some(serde_json::Value::String(rel)) = value.get("system") {
        let sys_path = path.parent().unwrap_or(std::path::Path::new(".")).join(rel);
        let sys_text = std::fs::read_to_string(&sys_path)
            .map_err(|e| config_error("system", format!("{}: {e}", sys_path.display())))?;
        let sys: serde_json::Value =
            serde_json::from_str(&sys_text).map_err(|e| config_error("system", format!("malformed JSON: {e}")))?;
        value["system"] = sys;
    }
    parse_config(&value.to_string())
}

impl ExperimentConfig {
    pub fn system(&self) -> Result<SystemSpec> {
        let v = self.system.as_ref().ok_or_else(|| config_error("system", "a system is required"))?;
        SystemSpec::from_json(&v.to_string()).map_err(|e| config_error("system", e.to_string()))
    }

    fn require<'a, T>(&self, v: &'a Option<T>, key: &str) -> Result<&'a T> {
        v.as_ref()
            .ok_or_else(|| config_error(key, format!("required for the {} experiment", self.experiment.name())))
    }

    pub fn eps_values(&self) -> Result<Vec<Q>> {
        let raw = self.require(&self.eps, "eps")?;
        if raw.is_empty() {
            return Err(config_error("eps", "at least one scale is required"));
        }
        raw.iter()
            .enumerate()
            .map(|(i, s)| {
                let q = parse_q(s).map_err(|e| config_error(&format!("eps[{i}]"), e.to_string()))?;
                if q <= Q::from_integer(0.into()) {
                    return Err(config_error(&format!("eps[{i}]"), "scales must be positive"));
                }
                Ok(q)
            })
            .collect()
    }

    /// Canonical JSON: the system is re-serialized from its parsed form.
    pub fn canonical(&self) -> Result<String> {
        let mut c = self.clone();
        if self.system.is_some() {
            c.system = Some(serde_json::from_str(&self.system()?.to_json())?);
        }
        Ok(serde_json::to_string(&c)?)
    }

    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical()?.as_bytes())))
    }

    /// Structural checks and depth consistency, before any computation.
    pub fn validate(&self) -> Result<()> {
        let range_ok = |r: &Option<IntRange>, key: &str| -> Result<()> {
            if let Some(r) = r {
                if r.values().contains(&0) {
                    return Err(config_error(key, "values must be at least 1"));
                }
            }
            Ok(())
        };
        range_ok(&self.m, "m")?;
        range_ok(&self.n, "n")?;
        if let Some(g) = &self.grid {
            if g.g == 0 || g.level == 0 {
                return Err(config_error("grid", "g and level must be at least 1"));
            }
        }
        match self.experiment {
            ExperimentKind::Rates | ExperimentKind::InducedEntropy | ExperimentKind::VerifyAll => {
                let spec = self.system()?;
                let m = self.require(&self.m, "m")?.max();
                let n = self.require(&self.n, "n")?.max();
                if let Some(depth) = spec.depth() {
                    if n * m > depth {
                        return Err(config_error("n", format!("n·m = {} exceeds the system depth {depth}", n * m)));
                    }
                    if let Some(g) = &self.grid {
                        if g.level > depth {
                            return Err(config_error("grid.level", format!("exceeds the system depth {depth}")));
                        }
                    }
                }
                if self.experiment == ExperimentKind::InducedEntropy {
                    self.eps_values()?;
                    self.require(&self.grid, "grid")?;
                }
            }
            ExperimentKind::Entropy => {
                let spec = self.system()?;
                let n = self.require(&self.n, "n")?.max();
                if let Some(depth) = spec.depth() {
                    if n > depth {
                        return Err(config_error("n", format!("n = {n} exceeds the system depth {depth}")));
                    }
                }
                self.eps_values()?;
            }
            ExperimentKind::Cover => {
                let k = *self.require(&self.k, "k")?;
                let n = self.require(&self.n, "n")?;
                if n.values().len() != 1 {
                    return Err(config_error("n", "the cover search takes a single n"));
                }
                if k < 2 || k * n.max() > 8 {
                    return Err(config_error("k", "need k >= 2 and k·n <= 8"));
                }
            }
        }
        Ok(())
    }
}

/// `WMDIM_JOBS` overrides the flag; the default is the number of available cores.
pub fn resolve_jobs(flag: Option<usize>) -> usize {
    std::env::var("WMDIM_JOBS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .or(flag)
        .filter(|&j| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps cells on a pool of `jobs` workers; the output is in input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> Result<R> + Sync) -> Result<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self, comment: &str) -> Result<String> {
        let mut out = Vec::new();
        for line in comment.lines() {
            out.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidParameter(format!("csv: {e}"))
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub kind: ExperimentKind,
    pub hash: String,
    pub table: Table,
    pub svg: Option<String>,
    /// Whether every check embedded in the experiment passed.
    pub passed: bool,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn csv(&self) -> Result<String> {
        self.table
            .to_csv(&format!("wmdim {} config-hash={}", self.kind.name(), self.hash))
    }
}

pub fn run(config: &ExperimentConfig, jobs: usize) -> Result<Outcome> {
    config.validate()?;
    let hash = config.hash()?;
    let (table, svg, passed, notes) = match config.experiment {
        ExperimentKind::Rates => run_rates(config, jobs)?,
        ExperimentKind::Entropy => run_entropy(config, jobs)?,
        ExperimentKind::InducedEntropy => run_induced(config, jobs)?,
        ExperimentKind::VerifyAll => run_verify_all(config, jobs)?,
        ExperimentKind::Cover => run_cover(config)?,
    };
    Ok(Outcome {
        kind: config.experiment,
        hash,
        table,
        svg,
        passed,
        notes,
    })
}

type Parts = (Table, Option<String>, bool, Vec<String>);

/// `ŝ` for the covering bound at scale ε on a shift: closed balls of radius `ε/2` are
/// cylinders, so counting on words truncated at that resolution is exact.
fn shift_covering_exponent(spec: &SystemSpec, eps: &Q) -> Result<Option<usize>> {
    let Some(depth) = spec.depth() else {
        return Ok(None);
    };
    let radius = eps / q_int(2);
    let mut r = 0usize;
    while q_pow(&q_int(2), r as u32).recip() > radius {
        r += 1;
    }
    let truncated = spec.with_depth(r.clamp(1, depth))?;
    let points = truncated.points()?;
    if points.len() > 4096 {
        return Ok(None);
    }
    Ok(Some(space_spanning_count(&truncated.build_space()?, &radius)?))
}

fn run_rates(config: &ExperimentConfig, jobs: usize) -> Result<Parts> {
    let spec = config.system()?;
    let ms = config.m.as_ref().unwrap().values().to_vec();
    let ns = config.n.as_ref().unwrap().values().to_vec();
    let max_pairs = config.max_pairs.unwrap_or(1000);
    let cells: Vec<(usize, usize)> = ns.iter().flat_map(|&n| ms.iter().map(move |&m| (n, m))).collect();
    let results = par_map(&cells, jobs, |&(n, m)| {
        let point = lower_bound_curve(&spec, &[m], n, max_pairs)?.remove(0);
        let grid_count = match &config.grid {
            Some(g) => {
                let grid = MeasureGrid::cylinders(&spec, g.level, g.g)?;
                let r = induced_separated(&spec, &grid, &point.scale, n, m)?;
                Some(r.exact.unwrap_or(r.greedy))
            }
            None => None,
        };
        let s_hat = shift_covering_exponent(&spec, &point.scale)?;
        Ok((n, point, grid_count, s_hat))
    })?;
    let mut table = Table::new(&[
        "m",
        "q_m",
        "gamma_m",
        "scale",
        "certified_lower_bound",
        "grid_count",
        "covering_upper_bound",
        "n",
        "family_verified",
    ]);
    let mut passed = true;
    let mut notes = Vec::new();
    let mut svg_points = Vec::new();
    for (n, p, grid_count, s_hat) in &results {
        if p.verified == Some(false) {
            passed = false;
            notes.push(format!("m = {}: H_n family not separated", p.m));
        }
        if let (Some(c), Some(s)) = (grid_count, s_hat) {
            // (1/scale)^ŝ ≥ count, decided exactly.
            let bound = q_pow(&p.scale.recip(), *s as u32);
            if Q::from_integer((*c as i64).into()) > bound {
                passed = false;
                notes.push(format!("m = {}: grid packing {c} exceeds the covering bound", p.m));
            }
        }
        if p.bound > 0.0 && *n == ns[ns.len() - 1] {
            svg_points.push((q_to_f64(&p.scale.recip()), p.bound));
        }
        table.rows.push(vec![
            p.m.to_string(),
            p.q_m.to_string(),
            fmt_q(&p.gamma),
            fmt_q(&p.scale),
            format!("{:.12}", p.bound),
            grid_count.map_or(String::new(), |c| c.to_string()),
            s_hat.map_or(String::new(), |s| format!("{}^{s}", fmt_q(&p.scale.recip()))),
            n.to_string(),
            p.verified.map_or("unchecked".into(), |v| v.to_string()),
        ]);
    }
    let svg = Some(loglog_svg(
        "certified lower bound vs 1/scale",
        "1/scale",
        "bound",
        &svg_points,
    ));
    Ok((table, svg, passed, notes))
}

fn run_entropy(config: &ExperimentConfig, jobs: usize) -> Result<Parts> {
    let spec = config.system()?;
    let eps = config.eps_values()?;
    let ns = config.n.as_ref().unwrap().values().to_vec();
    let reports = par_map(&eps, jobs, |e| entropy_estimate(&spec, e, &ns))?;
    let mut table = Table::new(&["eps", "n", "points", "greedy", "exact", "slope"]);
    let mut passed = true;
    let mut notes = Vec::new();
    for r in &reports {
        if !r.monotone_in_n || r.subadditivity.iter().any(|s| !s.holds) {
            passed = false;
            notes.push(format!("eps = {}: monotonicity or subadditivity failed", fmt_q(&r.eps)));
        }
        for c in &r.counts {
            table.rows.push(vec![
                fmt_q(&r.eps),
                c.n.to_string(),
                c.points.to_string(),
                c.greedy.to_string(),
                c.exact.map_or(String::new(), |x| x.to_string()),
                format!("{:.12}", r.slope),
            ]);
        }
    }
    Ok((table, None, passed, notes))
}

fn run_induced(config: &ExperimentConfig, jobs: usize) -> Result<Parts> {
    let spec = config.system()?;
    let eps = config.eps_values()?;
    let g = config.grid.as_ref().unwrap();
    let grid = MeasureGrid::cylinders(&spec, g.level, g.g)?;
    let cells: Vec<(Q, usize, usize)> = eps
        .iter()
        .flat_map(|e| {
            config.n.as_ref().unwrap().values().iter().flat_map(move |&n| {
                config.m.as_ref().unwrap().values().iter().map(move |&m| (e.clone(), n, m))
            })
        })
        .collect();
    let reports = par_map(&cells, jobs, |(e, n, m)| induced_separated(&spec, &grid, e, *n, *m))?;
    let mut table = Table::new(&[
        "eps",
        "n",
        "m",
        "grid_size",
        "greedy",
        "exact",
        "h_size",
        "h_certified",
        "h_min_distance",
        "h_separated",
    ]);
    let mut passed = true;
    for r in &reports {
        let h = r.h_family.as_ref();
        if h.is_some_and(|h| !h.all_separated) {
            passed = false;
        }
        table.rows.push(vec![
            fmt_q(&r.eps),
            r.n.to_string(),
            r.m.to_string(),
            r.grid_size.to_string(),
            r.greedy.to_string(),
            r.exact.map_or(String::new(), |x| x.to_string()),
            h.map_or(String::new(), |h| h.size.to_string()),
            h.map_or(String::new(), |h| h.certified_cardinality.clone()),
            h.and_then(|h| h.min_distance.as_ref()).map_or(String::new(), fmt_q),
            h.map_or(String::new(), |h| h.all_separated.to_string()),
        ]);
    }
    Ok((table, None, passed, vec![]))
}

fn run_verify_all(config: &ExperimentConfig, jobs: usize) -> Result<Parts> {
    let spec = config.system()?;
    let trials = config.trials.unwrap_or(100);
    let cells: Vec<(&str, usize, usize)> = LEMMAS
        .iter()
        .flat_map(|&l| {
            config.n.as_ref().unwrap().values().iter().flat_map(move |&n| {
                config.m.as_ref().unwrap().values().iter().map(move |&m| (l, m, n))
            })
        })
        .collect();
    let reports: Vec<CheckReport> = par_map(&cells, jobs, |&(l, m, n)| run_check(l, &spec, m, n, trials, config.seed))?;
    let mut table = Table::new(&[
        "lemma",
        "m",
        "n",
        "trials",
        "skipped",
        "worst_margin",
        "negative_control",
        "verdict",
    ]);
    let mut passed = true;
    let mut notes = Vec::new();
    for (r, (_, m, n)) in reports.iter().zip(&cells) {
        passed &= r.verdict;
        notes.push(r.summary());
        table.rows.push(vec![
            r.lemma.clone(),
            m.to_string(),
            n.to_string(),
            r.trials.to_string(),
            r.skipped.to_string(),
            r.worst_margin.clone().unwrap_or_default(),
            r.negative_control.map_or(String::new(), |v| v.to_string()),
            if r.verdict { "pass".into() } else { "fail".into() },
        ]);
    }
    Ok((table, None, passed, notes))
}

/// Candidate lower bounds on the order of separating covers of `Δ_k^n`.
pub fn lebesgue_candidates(k: usize, n: usize) -> [(String, usize); 2] {
    [("nk".into(), n * k), ("n(k-1)".into(), n * (k - 1))]
}

fn run_cover(config: &ExperimentConfig) -> Result<Parts> {
    let k = config.k.unwrap();
    let n = config.n.as_ref().unwrap().max();
    let budget = config.budget.unwrap_or(200);
    let result = search_min_separating_order(k, n, budget, config.seed)?;
    let mut table = Table::new(&["iteration", "move", "order", "covering", "separating", "accepted"]);
    for s in &result.trace {
        table.rows.push(vec![
            s.iteration.to_string(),
            s.mv.to_string(),
            s.order.map_or(String::new(), |o| o.to_string()),
            s.covering.to_string(),
            s.separating.to_string(),
            s.accepted.to_string(),
        ]);
    }
    let witness_ok = is_separating(&result.witness).is_none() && cover_order(&result.witness) == result.best_order;
    let mut notes = vec![format!(
        "initial order {}, best order {} with {} boxes{}",
        result.initial_order,
        result.best_order,
        result.witness.boxes().len(),
        if result.budget_exhausted { " (budget exhausted)" } else { "" }
    )];
    for (name, value) in lebesgue_candidates(k, n) {
        notes.push(format!(
            "candidate bound {name} = {value}: empirical minimum {} {}",
            result.best_order,
            if result.best_order >= value as i64 { "meets it" } else { "is below it" }
        ));
    }
    notes.push(format!("witness: {}", result.witness.to_json()));
    Ok((table, None, witness_ok, notes))
}

/// Self-contained log-log line chart.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}" stroke="black"/>"#,
        h - pad,
        w - pad,
        h - pad,
        h - pad
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{} (log10)</text>"#,
        w / 2.0,
        h - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{} (log10)</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    if !pts.is_empty() {
        let span = |f: fn(&(f64, f64)) -> f64| {
            let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < 1e-9 { (lo - 0.5, hi + 0.5) } else { (lo, hi) }
        };
        let (x0, x1) = span(|p| p.0);
        let (y0, y1) = span(|p| p.1);
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, path.join(" "));
        for &(x, y) in &pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"><title>({:.4}, {:.4})</title></circle>"#,
                sx(x),
                sy(y),
                10f64.powf(x),
                10f64.powf(y)
            );
        }
        for (v, anchor) in [(x0, "start"), (x1, "end")] {
            let _ = writeln!(svg, r#"<text x="{:.2}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#, sx(v), h - pad + 16.0);
        }
        for v in [y0, y1] {
            let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, pad - 4.0, sy(v) + 4.0);
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Binary full shift truncated at `depth`, as system JSON.
pub fn full_shift_system(depth: usize) -> serde_json::Value {
    serde_json::json!({"kind": "full-shift", "alphabet": ["0", "1"], "depth": depth})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates_config() -> ExperimentConfig {
        parse_config(
            &serde_json::json!({
                "experiment": "rates",
                "system": full_shift_system(8),
                "m": "1..3",
                "n": 2,
                "grid": {"g": 2, "level": 2},
            })
            .to_string(),
        )
        .unwrap()
    }

    #[test]
    fn ranges() {
        assert_eq!("1..4".parse::<IntRange>().unwrap().values(), &[1, 2, 3, 4]);
        assert_eq!("1..=2".parse::<IntRange>().unwrap().values(), &[1, 2]);
        assert_eq!("3".parse::<IntRange>().unwrap().values(), &[3]);
        assert!("4..1".parse::<IntRange>().is_err());
        assert!("x".parse::<IntRange>().is_err());
    }

    #[test]
    fn malformed_config_names_key() {
        let e = parse_config(r#"{"experiment": "rates", "bogus": 1}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "bogus"), "{e}");
        let e = parse_config(r#"{"experiment": "rates", "grid": {"g": 2, "levl": 3}}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "grid.levl"), "{e}");
        let e = parse_config(r#"{"experiment": "rates", "m": "a..b"}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "m"), "{e}");
        let e = parse_config(r#"{"m": 2}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "experiment"), "{e}");
        let mut c = rates_config();
        c.n = Some("5".parse().unwrap());
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "n"));
    }

    #[test]
    fn rates_rows() {
        let out = run(&rates_config(), 2).unwrap();
        assert_eq!(out.table.rows.len(), 3);
        assert!(out.passed, "{:?}", out.notes);
        let csv = out.csv().unwrap();
        assert!(csv.starts_with("# wmdim rates config-hash="));
        assert!(out.svg.unwrap().contains("<polyline"));
    }

    #[test]
    fn csv_is_independent_of_workers() {
        let c = rates_config();
        let one = run(&c, 1).unwrap().csv().unwrap();
        for jobs in [4, 8] {
            assert_eq!(run(&c, jobs).unwrap().csv().unwrap(), one);
        }
    }

    #[test]
    fn hash_ignores_system_formatting() {
        let a = rates_config();
        let mut b = a.clone();
        b.system = Some(serde_json::json!({"depth": 8, "alphabet": ["0", "1"], "kind": "full-shift"}));
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let mut c = a.clone();
        c.seed = 1;
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn cover_experiment() {
        let c = parse_config(r#"{"experiment": "cover", "k": 2, "n": 1, "budget": 50, "seed": 3}"#).unwrap();
        let out = run(&c, 1).unwrap();
        assert!(out.passed);
        assert_eq!(out.table.rows.len(), 50);
    }

    #[test]
    fn svg_is_well_formed() {
        let s = loglog_svg("t", "x", "y", &[(1.0, 2.0), (10.0, 20.0), (100.0, 0.0)]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2);
    }
}
