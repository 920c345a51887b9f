//! FCIDUMP reader and writer.
//!
//! The header is a Fortran namelist (`&FCI NORB=..., NELEC=..., MS2=..., ORBSYM=..., ISYM=... &END`,
//! the terminator may also be `/`). Each following line is `value i j k l` with 1-based
//! indices; `(ij|kl)` for two-body terms, `i j 0 0` for one-body terms, and all zeros for
//! the core energy. `MS2`, `ORBSYM` and `ISYM` are accepted and ignored.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{permutations, IntegralSet};
use crate::error::{Error, Result};

/// Entries listed twice must agree to this tolerance.
const DUPLICATE_TOLERANCE: f64 = 1e-10;

pub fn load_fcidump_path(path: impl AsRef<Path>) -> Result<IntegralSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::InvalidInput(format!("cannot open FCIDUMP file {}: {e}", path.display())))?;
    load_fcidump(file)
}

pub fn load_fcidump<R: Read>(source: R) -> Result<IntegralSet> {
    let reader = BufReader::new(source);
    let mut header = String::new();
    let mut in_header = false;
    let mut header_done = false;
    let mut n_spatial = 0usize;
    let mut h: Option<DMatrix<f64>> = None;
    let mut h_set: Vec<bool> = Vec::new();
    let mut eri: Vec<f64> = Vec::new();
    let mut eri_set: Vec<bool> = Vec::new();
    let mut e_core: Option<f64> = None;
    let mut n_electrons = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if !header_done {
            if !in_header {
                if trimmed.is_empty() {
                    continue;
                }
                let upper = trimmed.to_ascii_uppercase();
                if !upper.starts_with("&FCI") {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "expected namelist header starting with &FCI".into(),
                    });
                }
                in_header = true;
                header.push_str(&trimmed[4..]);
            } else {
                header.push(' ');
                header.push_str(trimmed);
            }
            if let Some(end) = header_end(&header) {
                header.truncate(end);
                let fields = parse_namelist(&header, lineno)?;
                n_spatial = required_usize(&fields, "NORB", lineno)?;
                n_electrons = required_usize(&fields, "NELEC", lineno)?;
                if n_spatial == 0 {
                    return Err(Error::Parse { line: lineno, message: "NORB must be positive".into() });
                }
                let n = n_spatial;
                h = Some(DMatrix::zeros(n, n));
                h_set = vec![false; n * n];
                eri = vec![0.0; n.pow(4)];
                eri_set = vec![false; n.pow(4)];
                header_done = true;
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 'value i j k l', found {} fields", tokens.len()),
            });
        }
        let value = parse_value(tokens[0]).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("non-numeric integral value '{}'", tokens[0]),
        })?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&tokens[1..]) {
            *slot = tok
                .parse::<usize>()
                .map_err(|_| Error::Parse { line: lineno, message: format!("non-numeric orbital index '{tok}'") })?;
            if *slot > n_spatial {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("orbital index {} exceeds NORB = {n_spatial}", *slot),
                });
            }
        }
        let h = h.as_mut().expect("allocated with header");
        match idx {
            [0, 0, 0, 0] => {
                if let Some(prev) = e_core {
                    if (prev - value).abs() > DUPLICATE_TOLERANCE {
                        return Err(Error::Data(format!(
                            "line {lineno}: core energy given twice ({prev} and {value})"
                        )));
                    }
                }
                e_core = Some(value);
            }
            [p, q, 0, 0] if p != 0 && q != 0 => {
                let n = n_spatial;
                for (a, b) in [(p - 1, q - 1), (q - 1, p - 1)] {
                    let slot = a * n + b;
                    if h_set[slot] && (h[(a, b)] - value).abs() > DUPLICATE_TOLERANCE {
                        return Err(Error::Data(format!(
                            "line {lineno}: one-body element h({p},{q}) = {value} conflicts with {}",
                            h[(a, b)]
                        )));
                    }
                    h[(a, b)] = value;
                    h_set[slot] = true;
                }
            }
            [p, q, r, s] if p != 0 && q != 0 && r != 0 && s != 0 => {
                let n = n_spatial;
                for (a, b, c, d) in permutations(p - 1, q - 1, r - 1, s - 1) {
                    let slot = ((a * n + b) * n + c) * n + d;
                    if eri_set[slot] && (eri[slot] - value).abs() > DUPLICATE_TOLERANCE {
                        return Err(Error::Data(format!(
                            "line {lineno}: ({p}{q}|{r}{s}) = {value} conflicts with symmetry-equivalent entry {}",
                            eri[slot]
                        )));
                    }
                    eri[slot] = value;
                    eri_set[slot] = true;
                }
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("invalid index pattern {} {} {} {}", idx[0], idx[1], idx[2], idx[3]),
                });
            }
        }
    }

    if !header_done {
        return Err(Error::Parse {
            line: 0,
            message: if in_header {
                "namelist header is not terminated by &END or /".into()
            } else {
                "empty input: missing &FCI header".into()
            },
        });
    }
    IntegralSet::new(n_spatial, n_electrons, h.expect("allocated with header"), eri, e_core.unwrap_or(0.0))
}

/// Writes the unique (canonically ordered) nonzero integrals.
pub fn write_fcidump<W: Write>(ints: &IntegralSet, mut out: W) -> Result<()> {
    let n = ints.n_spatial();
    let orbsym = vec!["1"; n].join(",");
    writeln!(out, "&FCI NORB={n},NELEC={},MS2=0,", ints.n_electrons())?;
    writeln!(out, "  ORBSYM={orbsym},")?;
    writeln!(out, "  ISYM=1,")?;
    writeln!(out, "&END")?;
    for p in 0..n {
        for q in 0..=p {
            let pq = p * (p + 1) / 2 + q;
            for r in 0..n {
                for s in 0..=r {
                    let rs = r * (r + 1) / 2 + s;
                    if rs > pq {
                        continue;
                    }
                    let v = ints.eri(p, q, r, s);
                    if v != 0.0 {
                        writeln!(out, "{v:.17e} {} {} {} {}", p + 1, q + 1, r + 1, s + 1)?;
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let v = ints.h_core()[(p, q)];
            if v != 0.0 {
                writeln!(out, "{v:.17e} {} {} 0 0", p + 1, q + 1)?;
            }
        }
    }
    writeln!(out, "{:.17e} 0 0 0 0", ints.e_core())?;
    Ok(())
}

fn header_end(header: &str) -> Option<usize> {
    let upper = header.to_ascii_uppercase();
    match (upper.find("&END"), upper.find('/')) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (Some(a), None) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => None,
    }
}

fn parse_namelist(text: &str, lineno: usize) -> Result<HashMap<String, Vec<String>>> {
    let spaced = text.replace('=', " = ").replace(',', " ");
    let tokens: Vec<&str> = spaced.split_whitespace().collect();
    let mut fields: HashMap<String, Vec<String>> = HashMap::new();
    let mut current: Option<String> = None;
    let mut i = 0;
    while i < tokens.len() {
        if i + 1 < tokens.len() && tokens[i + 1] == "=" {
            let key = tokens[i].to_ascii_uppercase();
            fields.insert(key.clone(), Vec::new());
            current = Some(key);
            i += 2;
            continue;
        }
        match &current {
            Some(key) if tokens[i] != "=" => {
                fields.get_mut(key).expect("inserted above").push(tokens[i].to_string());
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("unexpected token '{}' in namelist header", tokens[i]),
                })
            }
        }
        i += 1;
    }
    Ok(fields)
}

fn required_usize(fields: &HashMap<String, Vec<String>>, key: &str, lineno: usize) -> Result<usize> {
    let values =
        fields.get(key).ok_or_else(|| Error::Parse { line: lineno, message: format!("header is missing {key}") })?;
    let first = values.first().ok_or_else(|| Error::Parse { line: lineno, message: format!("{key} has no value") })?;
    first
        .parse::<usize>()
        .map_err(|_| Error::Parse { line: lineno, message: format!("{key} = '{first}' is not a non-negative integer") })
}

fn parse_value(tok: &str) -> Option<f64> {
    let normalized = tok.replace(['D', 'd'], "E");
    normalized.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::random_two_body;

    #[test]
    fn minimal_one_body_echo() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1\n&END\n 1.0 1 1 0 0\n";
        let ints = load_fcidump(text.as_bytes()).unwrap();
        assert_eq!(ints.n_spatial(), 2);
        assert_eq!(ints.n_electrons(), 2);
        assert_eq!(ints.h_core()[(0, 0)], 1.0);
        assert_eq!(ints.e_core(), 0.0);
    }

    #[test]
    fn missing_nelec_is_parse_error() {
        let text = "&FCI NORB=2, MS2=0 &END\n1.0 1 1 0 0\n";
        let err = load_fcidump(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        assert!(err.to_string().contains("NELEC"));
    }

    #[test]
    fn missing_norb_is_parse_error() {
        let err = load_fcidump("&FCI NELEC=2 /\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("NORB"));
    }

    #[test]
    fn symmetry_completion_and_core() {
        let text = "&FCI NORB=3,NELEC=2 /\n0.25 3 1 2 1\n-0.5 2 1 0 0\n1.5D0 0 0 0 0\n";
        let ints = load_fcidump(text.as_bytes()).unwrap();
        for (a, b, c, d) in permutations(2, 0, 1, 0) {
            assert_eq!(ints.eri(a, b, c, d), 0.25);
        }
        assert_eq!(ints.h_core()[(0, 1)], -0.5);
        assert_eq!(ints.h_core()[(1, 0)], -0.5);
        assert_eq!(ints.e_core(), 1.5);
    }

    #[test]
    fn conflicting_duplicates_are_data_errors() {
        let text = "&FCI NORB=2,NELEC=2 &END\n0.3 1 2 1 2\n0.4 2 1 2 1\n";
        assert!(matches!(load_fcidump(text.as_bytes()), Err(Error::Data(_))));
        let consistent = "&FCI NORB=2,NELEC=2 &END\n0.3 1 2 1 2\n0.3 2 1 2 1\n";
        assert!(load_fcidump(consistent.as_bytes()).is_ok());
    }

    #[test]
    fn bad_tokens_report_line() {
        let text = "&FCI NORB=2,NELEC=2\n&END\n0.3 1 2 1 2\nabc 1 1 0 0\n";
        match load_fcidump(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orbital_energy_pattern_is_invalid() {
        let text = "&FCI NORB=2,NELEC=2 &END\n0.3 1 0 0 0\n";
        assert!(matches!(load_fcidump(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn index_out_of_range() {
        let text = "&FCI NORB=2,NELEC=2 &END\n0.3 3 1 0 0\n";
        assert!(matches!(load_fcidump(text.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn write_then_load_round_trips() {
        let ints = random_two_body(5, 8, 4, 0.7).unwrap();
        let mut buf = Vec::new();
        write_fcidump(&ints, &mut buf).unwrap();
        let back = load_fcidump(buf.as_slice()).unwrap();
        assert_eq!(back, ints);
    }
}
