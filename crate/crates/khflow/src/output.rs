//! File outputs. Every CSV row carries the schema tag and the config hash;
//! floats are written with 17 significant digits so they round-trip exactly.

use crate::qoi::{ProfileRecord, QoiRecord, SpectrumRecord};
use crate::Error;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const QOI_SCHEMA: &str = "khflow-qoi/1";
pub const SPECTRUM_SCHEMA: &str = "khflow-spectrum/1";
pub const PROFILE_SCHEMA: &str = "khflow-profile/1";
pub const TRAJECTORY_SCHEMA: &str = "khflow-trajectory/1";
pub const META_SCHEMA: &str = "khflow-meta/1";
pub const DIVERGENCE_SCHEMA: &str = "khflow-divergence/1";

pub const QOI_COLUMNS: [&str; 12] =
    ["schema", "engine", "config_hash", "step", "t", "t_over_tbar", "K", "E", "P", "delta_ratio", "eps_int", "eps_rel"];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

pub struct QoiWriter {
    w: csv::Writer<File>,
    engine: String,
    hash: String,
}

impl QoiWriter {
    pub fn create(path: &Path, engine: &str, hash: &str) -> Result<Self, Error> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(QOI_COLUMNS).map_err(csv_err)?;
        Ok(QoiWriter { w, engine: engine.into(), hash: hash.into() })
    }

    pub fn push(&mut self, r: &QoiRecord) -> Result<(), Error> {
        let row = [
            QOI_SCHEMA.to_string(),
            self.engine.clone(),
            self.hash.clone(),
            r.step.to_string(),
            num(r.t),
            num(r.t_over_tbar),
            num(r.k),
            num(r.e),
            num(r.p),
            num(r.delta_ratio),
            num(r.eps_int),
            num(r.eps_rel),
        ];
        self.w.write_record(&row).map_err(csv_err)
    }

    pub fn flush(&mut self) -> Result<(), Error> {
        Ok(self.w.flush()?)
    }
}

/// Reads a file written by [`QoiWriter`]; rejects other schemas.
pub fn read_qoi(path: &Path) -> Result<Vec<QoiRecord>, Error> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let head = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| head.iter().position(|h| h == name).ok_or_else(|| Error::Format(format!("missing column {name}")));
    let c: Vec<usize> = QOI_COLUMNS.iter().map(|n| col(n)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if &rec[c[0]] != QOI_SCHEMA {
            return Err(Error::Format(format!("unknown schema '{}'", &rec[c[0]])));
        }
        let f = |i: usize| rec[c[i]].parse::<f64>().map_err(|e| Error::Format(e.to_string()));
        out.push(QoiRecord {
            step: rec[c[3]].parse().map_err(|e: std::num::ParseIntError| Error::Format(e.to_string()))?,
            t: f(4)?,
            t_over_tbar: f(5)?,
            k: f(6)?,
            e: f(7)?,
            p: f(8)?,
            delta_ratio: f(9)?,
            eps_int: f(10)?,
            eps_rel: f(11)?,
        });
    }
    Ok(out)
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    Ok(w.flush()?)
}

pub fn write_spectrum(path: &Path, hash: &str, s: &SpectrumRecord) -> Result<(), Error> {
    write_rows(
        path,
        &["schema", "config_hash", "t", "kappa", "E_kappa"],
        s.kappa.iter().zip(&s.energy).map(|(k, e)| vec![SPECTRUM_SCHEMA.into(), hash.into(), num(s.t), k.to_string(), num(*e)]),
    )
}

pub fn write_profile(path: &Path, hash: &str, p: &ProfileRecord) -> Result<(), Error> {
    write_rows(
        path,
        &["schema", "config_hash", "t", "y", "mean_u1", "rms_u1"],
        (0..p.y.len()).map(|j| {
            vec![PROFILE_SCHEMA.into(), hash.into(), num(p.t), num(p.y[j]), num(p.mean_u1[j]), num(p.rms_u1[j])]
        }),
    )
}

/// Phase-plane rows `t/t̄, K, E, Q, Λ`.
pub fn write_trajectory(path: &Path, hash: &str, rows: &[[f64; 5]]) -> Result<(), Error> {
    write_rows(
        path,
        &["schema", "config_hash", "t_over_tbar", "K", "E", "Q", "Lambda"],
        rows.iter().map(|r| {
            let mut v = vec![TRAJECTORY_SCHEMA.to_string(), hash.to_string()];
            v.extend(r.iter().map(|x| num(*x)));
            v
        }),
    )
}

/// Sampled fields on a uniform `nx x ny` grid with spacing `(dx, dy)`,
/// stored row by row (`x` fastest).
pub struct GridFields {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub vorticity: Vec<f64>,
    pub velocity: Vec<[f64; 2]>,
}

/// Legacy VTK structured-points text file.
pub fn write_vtk(path: &Path, hash: &str, t_over_tbar: f64, g: &GridFields) -> Result<(), Error> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# vtk DataFile Version 3.0")?;
    writeln!(f, "khflow t_over_tbar={} config_hash={hash}", num(t_over_tbar))?;
    writeln!(f, "ASCII")?;
    writeln!(f, "DATASET STRUCTURED_POINTS")?;
    writeln!(f, "DIMENSIONS {} {} 1", g.nx, g.ny)?;
    writeln!(f, "ORIGIN 0 0 0")?;
    writeln!(f, "SPACING {} {} 1", num(g.dx), num(g.dy))?;
    writeln!(f, "POINT_DATA {}", g.nx * g.ny)?;
    writeln!(f, "SCALARS vorticity double 1")?;
    writeln!(f, "LOOKUP_TABLE default")?;
    for w in &g.vorticity {
        writeln!(f, "{}", num(*w))?;
    }
    writeln!(f, "VECTORS velocity double")?;
    for v in &g.velocity {
        writeln!(f, "{} {} 0", num(v[0]), num(v[1]))?;
    }
    Ok(f.flush()?)
}
