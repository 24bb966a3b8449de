//! File formats: CSV dumps with 17 significant digits, JSON manifests and
//! verdicts, and timestamped result directories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::decomposition::DecompositionResult;
use crate::error::{Error, Result};
use crate::geometry::{NodeField, NullGrid, Slice, Span};
use crate::model::InitialData;
use crate::norms::FunctionSample;
use crate::scalar::C;

/// Shortest decimal that round-trips binary64: 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_row(out: &mut String, vals: &[f64]) {
    for (k, v) in vals.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&fmt17(*v));
    }
    out.push('\n');
}

/// `alpha,beta,<name>_re,<name>_im,...` for every node in `span`.
pub fn fields_csv(grid: &NullGrid<f64>, span: Span, fields: &[(&str, &NodeField<f64>)]) -> String {
    let mut out = String::from("alpha,beta");
    for (name, _) in fields {
        let _ = write!(out, ",re_{name},im_{name}");
    }
    out.push('\n');
    let mut row = Vec::with_capacity(2 + 2 * fields.len());
    for j in 0..grid.n {
        for i in 0..grid.n {
            if !span.contains(i, j) {
                continue;
            }
            row.clear();
            row.push(grid.alpha(i));
            row.push(grid.beta(j));
            for (_, f) in fields {
                let v = f.get(i, j);
                row.push(v.re);
                row.push(v.im);
            }
            push_row(&mut out, &row);
        }
    }
    out
}

pub fn solution_csv(grid: &NullGrid<f64>, span: Span, psi: &NodeField<f64>, phi: &NodeField<f64>) -> String {
    fields_csv(grid, span, &[("psi", psi), ("phi", phi)])
}

pub fn decomposition_csv(grid: &NullGrid<f64>, r: &DecompositionResult<f64>) -> String {
    fields_csv(
        grid,
        r.span,
        &[("psi_l", &r.psi_l), ("psi_n", &r.psi_n), ("phi_l", &r.phi_l), ("phi_n", &r.phi_n)],
    )
}

/// `t,x,re_psi,im_psi,re_phi,im_phi`.
pub fn slices_csv(slices: &[Slice<f64>]) -> String {
    let mut out = String::from("t,x,re_psi,im_psi,re_phi,im_phi\n");
    for s in slices {
        for m in 0..s.len() {
            push_row(&mut out, &[s.t, s.x(m), s.psi[m].re, s.psi[m].im, s.phi[m].re, s.phi[m].im]);
        }
    }
    out
}

/// `x,re_f,im_f,re_g,im_g`.
pub fn initial_data_csv(data: &InitialData<f64>) -> String {
    let mut out = String::from("x,re_f,im_f,re_g,im_g\n");
    for k in 0..data.len() {
        push_row(&mut out, &[data.x(k), data.f[k].re, data.f[k].im, data.g[k].re, data.g[k].im]);
    }
    out
}

/// Generic numeric table.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        push_row(&mut out, r);
    }
    out
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn parse_table(text: &str) -> Result<Table> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| Error::Parse("empty CSV file".into()))?;
    let header: Vec<String> = head.split(',').map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (ln, line) in lines {
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, v)| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}, column {}: not a number: {:?}", ln + 1, col + 1, v)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!(
                "line {}: expected {} fields, found {}",
                ln + 1,
                header.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

impl Table {
    fn col(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("CSV has no column {name:?}")))
    }
}

fn uniform(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::Parse("need at least two samples".into()));
    }
    let h = xs[1] - xs[0];
    let bad = xs
        .windows(2)
        .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1e-300));
    if !(h > 0.0) || bad {
        return Err(Error::Parse("positions are not increasing and uniformly spaced".into()));
    }
    Ok((xs[0], h))
}

pub fn parse_initial_data(text: &str) -> Result<InitialData<f64>> {
    let t = parse_table(text)?;
    let c: Vec<usize> = ["x", "re_f", "im_f", "re_g", "im_g"]
        .iter()
        .map(|n| t.col(n))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = t.rows.iter().map(|r| r[c[0]]).collect();
    let (x0, h) = uniform(&xs)?;
    Ok(InitialData {
        x0,
        h,
        f: t.rows.iter().map(|r| C::new(r[c[1]], r[c[2]])).collect(),
        g: t.rows.iter().map(|r| C::new(r[c[3]], r[c[4]])).collect(),
        spec: None,
    })
}

/// Read one component from a slice dump (`t,x,...`, the latest `t` with at
/// least 4 samples unless `time` is given) or an initial-data dump (`x,re_f,...`, where `psi` and
/// `phi` mean `f` and `g`).
pub fn parse_sample(text: &str, component: &str, time: Option<f64>) -> Result<FunctionSample<f64>> {
    let t = parse_table(text)?;
    let (re, im) = match (component, t.col("t").is_ok()) {
        ("psi", true) => ("re_psi", "im_psi"),
        ("phi", true) => ("re_phi", "im_phi"),
        ("psi", false) => ("re_f", "im_f"),
        ("phi", false) => ("re_g", "im_g"),
        (other, _) => {
            return Err(Error::Unknown {
                what: "component",
                name: other.to_string(),
            })
        }
    };
    let (cx, cre, cim) = (t.col("x")?, t.col(re)?, t.col(im)?);
    let rows: Vec<&Vec<f64>> = match t.col("t") {
        Ok(ct) => {
            let want = match time {
                Some(v) => v,
                None => {
                    let mut counts: Vec<(f64, usize)> = Vec::new();
                    for r in &t.rows {
                        match counts.iter_mut().find(|(v, _)| *v == r[ct]) {
                            Some((_, c)) => *c += 1,
                            None => counts.push((r[ct], 1)),
                        }
                    }
                    counts
                        .iter()
                        .filter(|(_, c)| *c >= 4)
                        .map(|(v, _)| *v)
                        .fold(f64::NEG_INFINITY, f64::max)
                }
            };
            if !want.is_finite() {
                return Err(Error::Parse("no time slice has the 4 samples a norm report needs".into()));
            }
            let picked: Vec<&Vec<f64>> = t.rows.iter().filter(|r| (r[ct] - want).abs() <= 1e-12 * want.abs().max(1.0)).collect();
            if picked.is_empty() {
                return Err(Error::Parse(format!("no rows at t = {want}")));
            }
            picked
        }
        Err(_) => t.rows.iter().collect(),
    };
    let xs: Vec<f64> = rows.iter().map(|r| r[cx]).collect();
    let (a, h) = uniform(&xs)?;
    FunctionSample::new(a, h, rows.iter().map(|r| C::new(r[cre], r[cim])).collect())
}

/// Hex SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_json_pretty<S: Serialize>(value: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    write_text(path, &to_json_pretty(value)?)
}

/// Create `root/<name>/<UTC timestamp>`, suffixing `-1`, `-2`, ... if the
/// directory already exists.
pub fn timestamped_dir(root: &Path, name: &str) -> Result<PathBuf> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
    let base = root.join(name);
    fs::create_dir_all(&base)?;
    let mut dir = base.join(&stamp);
    let mut k = 1;
    while dir.exists() {
        dir = base.join(format!("{stamp}-{k}"));
        k += 1;
    }
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_data, DataSpec, Profile};

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn initial_data_round_trip() {
        let spec = DataSpec::new(Profile::gaussian(1.0, 0.3, 0.1), Profile::unit_box(-0.2, 0.4), 0);
        let d = generate_data::<f64>(&spec, -1.0, 1.0 / 32.0, 65).unwrap();
        let back = parse_initial_data(&initial_data_csv(&d)).unwrap();
        assert_eq!(back.f, d.f);
        assert_eq!(back.g, d.g);
        assert!((back.h - d.h).abs() < 1e-15);
        let s = parse_sample(&initial_data_csv(&d), "phi", None).unwrap();
        assert_eq!(s.values, d.g);
    }

    #[test]
    fn slice_reader_picks_latest_time() {
        let mk = |t: f64, v: f64| Slice {
            t,
            x0: 0.0,
            h: 0.25,
            psi: vec![C::new(v, 0.0); 5],
            phi: vec![C::new(0.0, v); 5],
        };
        let mut top = mk(1.0, 3.0);
        top.psi.truncate(1);
        top.phi.truncate(1);
        let text = slices_csv(&[mk(0.0, 1.0), mk(0.5, 2.0), top]);
        let s = parse_sample(&text, "psi", None).unwrap();
        assert_eq!(s.values[0], C::new(2.0, 0.0));
        let s = parse_sample(&text, "phi", Some(0.0)).unwrap();
        assert_eq!(s.values[0], C::new(0.0, 1.0));
        assert!(parse_sample(&text, "chi", None).is_err());
    }

    #[test]
    fn parse_errors_name_line_and_column() {
        let err = parse_initial_data("x,re_f,im_f,re_g,im_g\n0,0,0,0,0\n1,0,zz,0,0\n").unwrap_err();
        assert!(err.to_string().contains("line 3, column 3"), "{err}");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            content_hash(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn directories_do_not_collide() {
        let tmp = tempfile::tempdir().unwrap();
        let a = timestamped_dir(tmp.path(), "x").unwrap();
        let b = timestamped_dir(tmp.path(), "x").unwrap();
        assert_ne!(a, b);
        assert!(a.is_dir() && b.is_dir());
    }
}
