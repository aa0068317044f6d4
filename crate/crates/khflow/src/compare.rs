//! Time-aligned comparison of two QoI series.
//!
//! Native files are recognized by their schema column. Other files (for
//! instance published reference data) need a column-mapping sidecar named
//! `<file>.columns.toml`:
//!
//! ```toml
//! time_unit = "tbar"   # or "t" for plain time
//! delimiter = ","
//! [columns]
//! t = "time"
//! K = "kinetic_energy"
//! E = "enstrophy"
//! P = "palinstrophy"
//! ```

use crate::kh;
use crate::output::QOI_SCHEMA;
use crate::Error;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// QoI columns indexed by name, with times in units of `t̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub t_tbar: Vec<f64>,
    pub cols: BTreeMap<String, Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    #[serde(default = "tbar")]
    time_unit: String,
    #[serde(default = "comma")]
    delimiter: String,
    columns: BTreeMap<String, String>,
}

fn tbar() -> String {
    "tbar".into()
}
fn comma() -> String {
    ",".into()
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".columns.toml");
    PathBuf::from(s)
}

const QOIS: [&str; 4] = ["K", "E", "P", "delta_ratio"];

pub fn load_series(path: &Path) -> Result<Series, Error> {
    let side = sidecar_path(path);
    let (mapping, unit, delim) = if side.exists() {
        let s: Sidecar = toml::from_str(&std::fs::read_to_string(&side)?).map_err(|e| Error::Format(format!("{}: {e}", side.display())))?;
        if !["tbar", "t"].contains(&s.time_unit.as_str()) {
            return Err(Error::Format(format!("time_unit must be \"tbar\" or \"t\" (got {})", s.time_unit)));
        }
        let d = s.delimiter.as_bytes();
        if d.len() != 1 {
            return Err(Error::Format("delimiter must be a single byte".into()));
        }
        (Some(s.columns), s.time_unit, d[0])
    } else {
        (None, "tbar".into(), b',')
    };
    let mut r = csv::ReaderBuilder::new().delimiter(delim).trim(csv::Trim::All).from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    let head = r.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    let pos = |name: &str| head.iter().position(|h| h == name);
    let schema_col = pos("schema");
    let (tcol, cols): (usize, Vec<(String, usize)>) = match (&mapping, schema_col) {
        (Some(m), _) => {
            let t = m.get("t").ok_or_else(|| Error::Format("sidecar must map column t".into()))?;
            let tc = pos(t).ok_or_else(|| Error::Format(format!("column {t} not found")))?;
            let mut cs = Vec::new();
            for (k, v) in m {
                if k == "t" {
                    continue;
                }
                if !QOIS.contains(&k.as_str()) {
                    return Err(Error::Format(format!("sidecar maps unknown quantity {k}")));
                }
                cs.push((k.clone(), pos(v).ok_or_else(|| Error::Format(format!("column {v} not found")))?));
            }
            (tc, cs)
        }
        (None, Some(_)) => {
            let tc = pos("t_over_tbar").ok_or_else(|| Error::Format("missing t_over_tbar column".into()))?;
            (tc, QOIS.iter().filter_map(|q| pos(q).map(|c| (q.to_string(), c))).collect())
        }
        (None, None) => {
            return Err(Error::Format(format!(
                "{}: unknown schema (no schema column and no column-mapping sidecar {})",
                path.display(),
                side.display()
            )))
        }
    };
    let scale = if unit == "t" { 1.0 / kh::tbar() } else { 1.0 };
    let mut s = Series { t_tbar: Vec::new(), cols: cols.iter().map(|(k, _)| (k.clone(), Vec::new())).collect() };
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        if mapping.is_none() {
            let tag = &rec[schema_col.unwrap()];
            if tag != QOI_SCHEMA {
                return Err(Error::Format(format!("unknown schema version '{tag}' (expected {QOI_SCHEMA})")));
            }
        }
        let f = |c: usize| rec[c].parse::<f64>().map_err(|e| Error::Format(format!("'{}': {e}", &rec[c])));
        s.t_tbar.push(f(tcol)? * scale);
        for (k, c) in &cols {
            s.cols.get_mut(k).unwrap().push(f(*c)?);
        }
    }
    if s.t_tbar.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Format(format!("{}: times must be strictly increasing", path.display())));
    }
    Ok(s)
}

impl Series {
    /// Linear interpolation of column `q` at `t`; `t` must lie in range.
    pub fn at(&self, q: &str, t: f64) -> f64 {
        let v = &self.cols[q];
        let ts = &self.t_tbar;
        let i = ts.partition_point(|x| *x < t);
        if i == 0 {
            return v[0];
        }
        if i == ts.len() {
            return v[ts.len() - 1];
        }
        let w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
        v[i - 1] + w * (v[i] - v[i - 1])
    }

    fn covers(&self, tmax: f64) -> bool {
        let eps = 1e-9 * tmax.max(1.0);
        !self.t_tbar.is_empty() && self.t_tbar[0] <= eps && *self.t_tbar.last().unwrap() >= tmax - eps
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QoiComparison {
    pub qoi: String,
    pub max_rel_deviation: f64,
    /// `t/t̄` where the maximum occurs.
    pub at_tbar: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Max relative deviation `|b − a|/|a|` over `[0, tmax]` (in `t̄`), at the
/// union of both sample sets, interpolating linearly.
pub fn compare(a: &Series, b: &Series, tmax: f64, tolerances: &[(&str, f64)]) -> Result<Vec<QoiComparison>, Error> {
    if !(tmax >= 0.0) {
        return Err(Error::Invalid("tmax must be non-negative".into()));
    }
    for (name, s) in [("A", a), ("B", b)] {
        if !s.covers(tmax) {
            let range = (s.t_tbar.first().copied().unwrap_or(f64::NAN), s.t_tbar.last().copied().unwrap_or(f64::NAN));
            return Err(Error::Invalid(format!(
                "series {name} covers t/tbar in [{}, {}], which does not contain [0, {tmax}]",
                range.0, range.1
            )));
        }
    }
    let mut times: Vec<f64> = a.t_tbar.iter().chain(&b.t_tbar).copied().filter(|t| *t <= tmax).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut out = Vec::new();
    for (q, tol) in tolerances {
        if !a.cols.contains_key(*q) || !b.cols.contains_key(*q) {
            return Err(Error::Invalid(format!("quantity {q} missing from one of the series")));
        }
        let (mut m, mut at) = (0.0f64, 0.0);
        for &t in &times {
            let (x, y) = (a.at(q, t), b.at(q, t));
            let d = if x == y { 0.0 } else { (y - x).abs() / x.abs() };
            if d > m || d.is_nan() {
                m = d;
                at = t;
            }
        }
        out.push(QoiComparison { qoi: q.to_string(), max_rel_deviation: m, at_tbar: at, tolerance: *tol, pass: m <= *tol });
    }
    Ok(out)
}
