use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AttrId, Dataset};
use crate::error::{Error, Result};

/// One conjunct: `attr IN values` (a single value is an equality).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub attr: String,
    pub values: Vec<String>,
}

/// Conjunction of equality / membership predicates. The empty conjunction
/// selects every row.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    terms: Vec<Term>,
}

impl Context {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn eq(attr: impl Into<String>, value: impl Into<String>) -> Self {
        Self::all().and_eq(attr, value)
    }

    pub fn and_eq(self, attr: impl Into<String>, value: impl Into<String>) -> Self {
        self.and_in(attr, [value.into()])
    }

    pub fn and_in<I, S>(mut self, attr: impl Into<String>, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.terms.push(Term { attr: attr.into(), values: values.into_iter().map(Into::into).collect() });
        self
    }

    pub fn and(mut self, other: &Context) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Parses `"A = a, B IN x|y"`. An empty string is the empty conjunction.
    pub fn parse(input: &str) -> Result<Self> {
        let mut ctx = Self::all();
        for raw in input.split(',') {
            let term = raw.trim();
            if term.is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::Parse { input: term.to_owned(), reason: reason.to_owned() };
            if let Some((attr, value)) = term.split_once('=') {
                let (attr, value) = (attr.trim(), value.trim());
                if attr.is_empty() || value.is_empty() {
                    return Err(bad("expected `attr = value`"));
                }
                ctx = ctx.and_eq(attr, value);
                continue;
            }
            let mut parts = term.splitn(3, char::is_whitespace).filter(|s| !s.is_empty());
            let (attr, op, rest) = (parts.next(), parts.next(), parts.next());
            match (attr, op, rest) {
                (Some(attr), Some(op), Some(rest)) if op.eq_ignore_ascii_case("in") => {
                    let values: Vec<&str> = rest.split('|').map(str::trim).filter(|v| !v.is_empty()).collect();
                    if values.is_empty() {
                        return Err(bad("IN needs at least one value"));
                    }
                    ctx = ctx.and_in(attr, values);
                }
                _ => return Err(bad("expected `attr = value` or `attr IN v1|v2`")),
            }
        }
        Ok(ctx)
    }

    /// Renders as a SQL-ish predicate.
    pub fn to_sql(&self) -> String {
        self.terms
            .iter()
            .map(|t| {
                let vals: Vec<String> = t.values.iter().map(|v| format!("'{}'", v.replace('\'', "''"))).collect();
                if vals.len() == 1 {
                    format!("{} = {}", t.attr, vals[0])
                } else {
                    format!("{} IN ({})", t.attr, vals.join(","))
                }
            })
            .collect::<Vec<_>>()
            .join(" AND ")
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                if t.values.len() == 1 {
                    format!("{} = {}", t.attr, t.values[0])
                } else {
                    format!("{} IN {}", t.attr, t.values.join("|"))
                }
            })
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Sorted set of selected row indices. Cloning is cheap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    rows: Arc<[u32]>,
}

impl Selection {
    pub fn all(n_rows: usize) -> Self {
        Self { rows: (0..n_rows as u32).collect() }
    }

    /// Rows are sorted and deduplicated.
    pub fn from_rows(mut rows: Vec<u32>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        Self { rows: rows.into() }
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn intersect(&self, other: &Selection) -> Selection {
        let (a, b) = (&self.rows, &other.rows);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::with_capacity(a.len().min(b.len()));
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Selection { rows: out.into() }
    }

    /// Keeps the rows whose codes match every `(attr, code)` pair.
    pub fn restrict(&self, ds: &Dataset, fixed: &[(AttrId, u32)]) -> Selection {
        let cols: Vec<(&[u32], u32)> = fixed.iter().map(|&(a, c)| (ds.codes(a), c)).collect();
        let rows =
            self.rows.iter().copied().filter(|&r| cols.iter().all(|&(codes, c)| codes[r as usize] == c)).collect::<Vec<_>>();
        Selection { rows: rows.into() }
    }

    /// Keeps the rows whose code for `attr` is in `codes`.
    pub fn restrict_in(&self, ds: &Dataset, attr: AttrId, codes: &[u32]) -> Selection {
        let col = ds.codes(attr);
        let rows = self.rows.iter().copied().filter(|&r| codes.contains(&col[r as usize])).collect::<Vec<_>>();
        Selection { rows: rows.into() }
    }

    /// Stable 64-bit fingerprint of the row set.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::hash::DefaultHasher::new();
        self.rows.len().hash(&mut h);
        self.rows.hash(&mut h);
        h.finish()
    }
}

/// Evaluates a context against a dataset. Values missing from a dictionary
/// select nothing; unknown attributes are an error.
pub fn select(ds: &Dataset, ctx: &Context) -> Result<Selection> {
    let mut sel = Selection::all(ds.n_rows());
    for term in ctx.terms() {
        let attr = ds.attr(&term.attr)?;
        let codes: Vec<u32> = term.values.iter().filter_map(|v| ds.encode(attr, v)).collect();
        sel = sel.restrict_in(ds, attr, &codes);
    }
    Ok(sel)
}
