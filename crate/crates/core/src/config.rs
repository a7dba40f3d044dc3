//! Flat `key = value` configuration files with dotted keys, and the text format
//! for user-defined systems.
//!
//! ```text
//! # comment
//! name = coupled
//! dim.n = 2
//! dim.m = 1
//! ball.radius = 0.5
//! flux.a = 0.5 1.5; 1.5 0.5
//! flux.term.1 = 0 sin 1 0.1 1.0
//! boundary.b1 = 0.5 1.0
//! boundary.b2 = 1.0 0.5
//! ```
//!
//! The time flux is the identity and the flux is `G(u) = A u + Σ terms`, where a
//! term `row fn col c a` adds `c·fn(a·u[col])` to `G[row]` for `fn` in
//! `sin`, `cos`, `exp`, and `row poly col c0 c1 …` adds `Σ cⱼ u[col]ʲ`.
//! Optional keys: `dim.k`, `dim.p` (multiple block, 0-based start and size) and
//! `ball.center`. Boundary maps are linear with rows separated by `;`.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::systems::{
    quadratic_entropy, spectral_decomposition, Multiplicity, SmoothMap, SystemDef, SystemParts,
};
use crate::State;

#[derive(Debug, Clone)]
pub struct Entry {
    pub value: String,
    pub line: usize,
    pub column: usize,
}

/// Parsed key/value document. Keys are consumed by `take_*`; `finish` rejects leftovers.
#[derive(Debug, Clone, Default)]
pub struct KvDoc {
    entries: BTreeMap<String, Entry>,
}

fn cfg_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Config { line, column, message: message.into() }
}

impl KvDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            let Some(eq) = body.find('=') else {
                let col = body.len() - body.trim_start().len() + 1;
                return Err(cfg_err(line, col, "expected `key = value`"));
            };
            let key = body[..eq].trim();
            let key_col = body.len() - body.trim_start().len() + 1;
            if key.is_empty()
                || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_')
            {
                return Err(cfg_err(line, key_col, format!("invalid key `{key}`")));
            }
            let rest = &body[eq + 1..];
            let value = rest.trim();
            let column = eq + 2 + (rest.len() - rest.trim_start().len());
            if entries.contains_key(key) {
                return Err(cfg_err(line, key_col, format!("duplicate key `{key}`")));
            }
            entries.insert(key.to_string(), Entry { value: value.to_string(), line, column });
        }
        Ok(KvDoc { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn peek(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    /// Inserts or replaces `key`; such entries report line 0.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), Entry { value: value.to_string(), line: 0, column: 0 });
    }

    pub fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    pub fn require(&mut self, key: &str) -> Result<Entry> {
        self.take(key).ok_or_else(|| cfg_err(0, 0, format!("missing key `{key}`")))
    }

    /// All keys starting with `prefix`, removed and sorted.
    pub fn take_prefix(&mut self, prefix: &str) -> Vec<(String, Entry)> {
        let keys: Vec<String> =
            self.entries.keys().filter(|k| k.starts_with(prefix)).cloned().collect();
        keys.into_iter().map(|k| {
            let e = self.entries.remove(&k).unwrap();
            (k, e)
        }).collect()
    }

    pub fn take_parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e.parse().map(Some),
        }
    }

    pub fn finish(self) -> Result<()> {
        if let Some((k, e)) = self.entries.into_iter().next() {
            return Err(cfg_err(e.line, 1, format!("unknown key `{k}`")));
        }
        Ok(())
    }
}

impl Entry {
    pub fn err(&self, message: impl Into<String>) -> Error {
        cfg_err(self.line, self.column, message)
    }

    pub fn parse<T: FromStr>(&self) -> Result<T> {
        self.value.parse().map_err(|_| self.err(format!("cannot parse `{}`", self.value)))
    }

    /// Whitespace- or comma-separated numbers.
    pub fn numbers(&self) -> Result<Vec<f64>> {
        split_numbers(&self.value).map_err(|m| self.err(m))
    }

    /// Matrix rows separated by `;`.
    pub fn matrix(&self, cols: usize) -> Result<DMatrix<f64>> {
        let mut data = Vec::new();
        let mut rows = 0;
        for row in self.value.split(';') {
            let v = split_numbers(row).map_err(|m| self.err(m))?;
            if v.len() != cols {
                return Err(self.err(format!("row {} has {} entries, expected {cols}", rows + 1, v.len())));
            }
            data.extend(v);
            rows += 1;
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}

pub fn split_numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

#[derive(Debug, Clone)]
enum Term {
    Sin { row: usize, col: usize, c: f64, a: f64 },
    Cos { row: usize, col: usize, c: f64, a: f64 },
    Exp { row: usize, col: usize, c: f64, a: f64 },
    Poly { row: usize, col: usize, coef: Vec<f64> },
}

impl Term {
    fn parse(e: &Entry, n: usize) -> Result<Self> {
        let toks: Vec<&str> = e.value.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(e.err("expected `row fn col params…`"));
        }
        let idx = |t: &str| -> Result<usize> {
            let i: usize = t.parse().map_err(|_| e.err(format!("`{t}` is not an index")))?;
            if i >= n {
                return Err(e.err(format!("index {i} out of range for n = {n}")));
            }
            Ok(i)
        };
        let row = idx(toks[0])?;
        let col = idx(toks[2])?;
        let params = split_numbers(&toks[3..].join(" ")).map_err(|m| e.err(m))?;
        let ca = || -> Result<(f64, f64)> {
            match params.as_slice() {
                [c] => Ok((*c, 1.0)),
                [c, a] => Ok((*c, *a)),
                _ => Err(e.err("expected `c [a]`")),
            }
        };
        Ok(match toks[1] {
            "sin" => { let (c, a) = ca()?; Term::Sin { row, col, c, a } }
            "cos" => { let (c, a) = ca()?; Term::Cos { row, col, c, a } }
            "exp" => { let (c, a) = ca()?; Term::Exp { row, col, c, a } }
            "poly" | "polynomial" => {
                if params.is_empty() {
                    return Err(e.err("polynomial needs coefficients"));
                }
                Term::Poly { row, col, coef: params }
            }
            other => return Err(e.err(format!("unknown nonlinearity `{other}`"))),
        })
    }

    fn add(&self, u: &State, g: &mut State, j: &mut DMatrix<f64>) {
        match *self {
            Term::Sin { row, col, c, a } => {
                g[row] += c * (a * u[col]).sin();
                j[(row, col)] += c * a * (a * u[col]).cos();
            }
            Term::Cos { row, col, c, a } => {
                g[row] += c * (a * u[col]).cos();
                j[(row, col)] -= c * a * (a * u[col]).sin();
            }
            Term::Exp { row, col, c, a } => {
                g[row] += c * (a * u[col]).exp();
                j[(row, col)] += c * a * (a * u[col]).exp();
            }
            Term::Poly { row, col, ref coef } => {
                let x = u[col];
                let (mut v, mut d) = (0.0, 0.0);
                for &ck in coef.iter().rev() {
                    d = d * x + v;
                    v = v * x + ck;
                }
                g[row] += v;
                j[(row, col)] += d;
            }
        }
    }
}

/// Builds a system from the text format documented at the module level.
pub fn parse_system(text: &str) -> Result<SystemDef> {
    let mut doc = KvDoc::parse(text)?;
    let name = doc.take("name").map(|e| e.value).unwrap_or_else(|| "custom".into());
    let n: usize = doc.require("dim.n")?.parse()?;
    if n == 0 {
        return Err(cfg_err(0, 0, "dim.n must be positive"));
    }
    let m: usize = doc.require("dim.m")?.parse()?;
    let k: usize = doc.take_parsed("dim.k")?.unwrap_or(0);
    let p: usize = doc.take_parsed("dim.p")?.unwrap_or(1);
    let r_ball: f64 = doc.require("ball.radius")?.parse()?;
    let center = match doc.take("ball.center") {
        Some(e) => {
            let v = e.numbers()?;
            if v.len() != n {
                return Err(e.err(format!("center needs {n} components")));
            }
            DVector::from_vec(v)
        }
        None => DVector::zeros(n),
    };
    let a = doc.require("flux.a")?.matrix(n)?;
    if a.nrows() != n {
        return Err(cfg_err(0, 0, format!("flux.a needs {n} rows")));
    }
    let terms = doc
        .take_prefix("flux.term.")
        .iter()
        .map(|(_, e)| Term::parse(e, n))
        .collect::<Result<Vec<_>>>()?;
    let b1e = doc.require("boundary.b1")?;
    let b2e = doc.require("boundary.b2")?;
    let b1 = if n > m { b1e.matrix(n)? } else { DMatrix::zeros(0, n) };
    let b2 = if m > 0 { b2e.matrix(n)? } else { DMatrix::zeros(0, n) };
    if b1.nrows() != n - m {
        return Err(b1e.err(format!("b1 needs {} rows", n - m)));
    }
    if b2.nrows() != m {
        return Err(b2e.err(format!("b2 needs {m} rows")));
    }
    doc.finish()?;

    let mult = Multiplicity { k, p };
    let (g, entropy) = if terms.is_empty() {
        let sd = spectral_decomposition(&a, mult, None)?;
        (SmoothMap::linear(a), Some(quadratic_entropy(&sd, &center)))
    } else {
        let (a1, a2, t1, t2) = (a.clone(), a, terms.clone(), terms);
        let g = SmoothMap::new(n, move |u| {
            let mut g = &a1 * u;
            let mut j = DMatrix::zeros(n, n);
            t1.iter().for_each(|t| t.add(u, &mut g, &mut j));
            g
        })
        .with_jacobian(move |u| {
            let mut g = DVector::zeros(n);
            let mut j = a2.clone();
            t2.iter().for_each(|t| t.add(u, &mut g, &mut j));
            j
        });
        (g, None)
    };
    SystemDef::from_parts(SystemParts {
        name,
        n,
        m,
        mult,
        h: SmoothMap::identity(n),
        g,
        center,
        r_ball,
        b1: SmoothMap::linear(b1),
        b2: SmoothMap::linear(b2),
        entropy,
        anchors: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_positions_and_unknown_keys() {
        let err = KvDoc::parse("a = 1\n  oops\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, column: 3, .. }), "{err}");
        let err = KvDoc::parse("a = 1\na = 2\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let mut d = KvDoc::parse("x.y = 3 # note\nz=4").unwrap();
        assert_eq!(d.take_parsed::<i32>("x.y").unwrap(), Some(3));
        assert!(matches!(d.finish(), Err(Error::Config { line: 2, .. })));
    }

    #[test]
    fn value_column() {
        let d = KvDoc::parse("key =   abc").unwrap();
        let e = d.peek("key").unwrap();
        assert_eq!(e.column, 9);
        assert!(matches!(e.parse::<f64>(), Err(Error::Config { line: 1, column: 9, .. })));
    }

    const LINEAR: &str = "dim.n = 2\ndim.m = 1\nball.radius = 0.5\nflux.a = 0.5 1.5; 1.5 0.5\n\
                          boundary.b1 = 0.5 1\nboundary.b2 = 1 0.5\n";

    #[test]
    fn linear_system_from_text() {
        let sys = parse_system(LINEAR).unwrap();
        assert!(sys.constant_matrix().is_some());
        let sd = sys.eigen(sys.center()).unwrap();
        assert!((sd.lambdas[0] + 1.0).abs() < 1e-14);
        assert!(sys.validate(200).is_ok());
    }

    #[test]
    fn nonlinear_terms() {
        let txt = "dim.n = 2\ndim.m = 1\nball.radius = 0.5\nflux.a = -1 0; 0 2\n\
                   flux.term.1 = 0 sin 1 1\nflux.term.2 = 1 poly 1 0 0 0.5\n\
                   boundary.b1 = 0 1\nboundary.b2 = 1 0\n";
        let sys = parse_system(txt).unwrap();
        let u = DVector::from_vec(vec![0.1, 0.2]);
        let g = sys.eval_g(&u);
        assert!((g[0] - (-0.1 + 0.2f64.sin())).abs() < 1e-15);
        assert!((g[1] - (0.4 + 0.5 * 0.04)).abs() < 1e-15);
        let j = sys.dg(&u);
        assert!((j[(1, 1)] - (2.0 + 0.2)).abs() < 1e-15);
        assert!((j[(0, 1)] - 0.2f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_whitelist_entry() {
        let txt = format!("{LINEAR}flux.term.1 = 0 tanh 1 1\n");
        assert!(matches!(parse_system(&txt), Err(Error::Config { line: 7, .. })));
        let txt = format!("{LINEAR}flux.b = 1\n");
        assert!(matches!(parse_system(&txt), Err(Error::Config { .. })));
    }
}
