use crate::run::CliError;
use crate::Format;
use qflab::section::matrix_from_values;
use qflab::SectionPair;
use serde::Serialize;
use std::path::Path;

/// Fixed decimals with trailing zeros and negative zero removed.
pub fn fmt_num(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn parse_vec(s: &str) -> Result<[f64; 2], CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::usage(format!("expected two reals `x,y`, got {s:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let x: f64 = parts[0].parse().map_err(|_| bad())?;
    let y: f64 = parts[1].parse().map_err(|_| bad())?;
    if !x.is_finite() || !y.is_finite() {
        return Err(bad());
    }
    Ok([x, y])
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn to_json<S: Serialize>(v: &S) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
pub struct TranslationRow {
    pub r: f64,
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub m: [[f64; 2]; 2],
}

#[derive(Serialize)]
pub struct TranslationTable {
    pub family: String,
    pub params: Vec<(String, f64)>,
    pub rows: Vec<TranslationRow>,
}

/// n_r log-spaced radii in [1/2, 2] times n_t uniform angles.
pub fn translation_table(s: &SectionPair<f64>, n_r: usize, n_t: usize) -> Result<TranslationTable, CliError> {
    if n_r == 0 || n_t == 0 {
        return Err(CliError::usage("grid sizes must be positive"));
    }
    let rs: Vec<f64> = if n_r == 1 { vec![1.0] } else { qflab::numerics::logspace(0.5, 2.0, n_r) };
    let mut rows = Vec::with_capacity(n_r * n_t);
    for &r in &rs {
        for j in 0..n_t {
            let t = std::f64::consts::TAU * j as f64 / n_t as f64;
            let (a, b) = s.eval(r, t)?;
            rows.push(TranslationRow {
                r,
                t,
                a,
                b,
                m: matrix_from_values(r, t, a, b).rows(),
            });
        }
    }
    Ok(TranslationTable {
        family: s.name().to_string(),
        params: s.params().to_vec(),
        rows,
    })
}

pub fn render_table(tab: &TranslationTable, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(to_json(tab)),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["family".to_string()];
            header.extend(tab.params.iter().map(|(k, _)| k.clone()));
            header.extend(["r", "t", "a", "b", "m11", "m12", "m21", "m22"].map(String::from));
            w.write_record(&header).map_err(csv_err)?;
            for row in &tab.rows {
                let mut rec = vec![tab.family.clone()];
                rec.extend(tab.params.iter().map(|(_, v)| format!("{v:?}")));
                let m = row.m;
                for v in [row.r, row.t, row.a, row.b, m[0][0], m[0][1], m[1][0], m[1][1]] {
                    rec.push(format!("{v:?}"));
                }
                w.write_record(&rec).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::numeric(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv is utf-8"))
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::numeric(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(fmt_num(-1.0, 12), "-1");
        assert_eq!(fmt_num(-1.2e-16, 12), "0");
        assert_eq!(fmt_num(0.5, 12), "0.5");
        assert_eq!(fmt_num(2.0, 0), "2");
        assert_eq!(fmt_num(-0.0, 3), "0");
    }

    #[test]
    fn vectors() {
        assert_eq!(parse_vec("0,1").unwrap(), [0.0, 1.0]);
        assert_eq!(parse_vec(" -2.5 , 3 ").unwrap(), [-2.5, 3.0]);
        assert!(parse_vec("1").is_err());
        assert!(parse_vec("1,x").is_err());
        assert!(parse_vec("1,2,3").is_err());
        assert!(parse_vec("nan,1").is_err());
    }

    #[test]
    fn csv_columns() {
        let tab = translation_table(&SectionPair::complex(), 2, 3).unwrap();
        let text = render_table(&tab, Format::Csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "family,r,t,a,b,m11,m12,m21,m22");
        assert_eq!(text.lines().count(), 7);
    }
}
