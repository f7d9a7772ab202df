//! Dictionary-encoded categorical tables and everything that counts over them.

mod context;
mod table;
mod view;

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use context::{select, Context, Selection, Term};
pub use table::{contingency, marginalize, ContingencyTable};
pub use view::{materialize_cache, DataView, EntropyCache};

/// Category used for empty or missing cells.
pub const MISSING: &str = "⟂";

/// Position of an attribute in a [`Dataset`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttrId(pub usize);

impl fmt::Display for AttrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Bidirectional value <-> code map; codes are dense and assigned in order
/// of first appearance.
#[derive(Clone, Debug, Default)]
pub struct Dictionary {
    values: Vec<String>,
    index: HashMap<String, u32>,
}

impl Dictionary {
    pub fn encode(&mut self, value: &str) -> u32 {
        if let Some(&code) = self.index.get(value) {
            return code;
        }
        let code = self.values.len() as u32;
        self.values.push(value.to_owned());
        self.index.insert(value.to_owned(), code);
        code
    }

    pub fn code(&self, value: &str) -> Option<u32> {
        self.index.get(value).copied()
    }

    pub fn value(&self, code: u32) -> Option<&str> {
        self.values.get(code as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }
}

#[derive(Clone, Debug)]
pub struct Column {
    name: String,
    codes: Vec<u32>,
    dict: Dictionary,
}

impl Column {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }
}

/// CSV parsing options. A header row is always required.
#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

/// Immutable columnar table of categorical attributes.
#[derive(Clone, Debug)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
    by_name: HashMap<String, AttrId>,
}

impl Dataset {
    /// Builds a dataset from a header and string rows. Empty cells become
    /// [`MISSING`].
    pub fn from_records<I, R, S>(header: &[String], rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut columns = Self::empty_columns(header)?;
        let mut n_rows = 0usize;
        for (i, row) in rows.into_iter().enumerate() {
            let row = row.as_ref();
            if row.len() != columns.len() {
                return Err(Error::RaggedRow { line: i as u64 + 2, expected: columns.len(), found: row.len() });
            }
            for (col, cell) in columns.iter_mut().zip(row) {
                push_cell(col, cell.as_ref());
            }
            n_rows += 1;
        }
        Self::assemble(columns, n_rows)
    }

    /// Builds a dataset from integer codes; the dictionary of column `j`
    /// holds the strings `"0"`, ..., `"cards[j]-1"`.
    pub fn from_codes(names: &[String], codes: Vec<Vec<u32>>, cards: &[u32]) -> Result<Self> {
        if names.len() != codes.len() || names.len() != cards.len() {
            return Err(Error::InvalidConfig("names, columns and cardinalities differ in length".into()));
        }
        let n_rows = codes.first().map_or(0, Vec::len);
        let mut columns = Self::empty_columns(names)?;
        for ((col, codes), &card) in columns.iter_mut().zip(codes).zip(cards) {
            if codes.len() != n_rows {
                return Err(Error::RaggedRow { line: 0, expected: n_rows, found: codes.len() });
            }
            if let Some(&bad) = codes.iter().find(|&&c| c >= card) {
                return Err(Error::InvalidConfig(format!("code {bad} out of range for `{}`", col.name)));
            }
            for c in 0..card {
                col.dict.encode(&c.to_string());
            }
            col.codes = codes;
        }
        Self::assemble(columns, n_rows)
    }

    pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
        Self::read_csv(std::io::BufReader::new(file), opts)
    }

    pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(opts.delimiter)
            .has_headers(true)
            .flexible(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
        let mut columns = Self::empty_columns(&header)?;
        let mut n_rows = 0usize;
        let mut record = csv::StringRecord::new();
        while rdr.read_record(&mut record).map_err(csv_error)? {
            for (col, cell) in columns.iter_mut().zip(record.iter()) {
                push_cell(col, cell);
            }
            n_rows += 1;
        }
        Self::assemble(columns, n_rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(self.columns.iter().map(|c| c.name.as_str())).map_err(csv_error)?;
        for row in 0..self.n_rows {
            wtr.write_record(self.columns.iter().map(|c| c.dict.values[c.codes[row] as usize].as_str())).map_err(csv_error)?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    fn empty_columns<S: AsRef<str>>(names: &[S]) -> Result<Vec<Column>> {
        let mut seen = std::collections::HashSet::new();
        names
            .iter()
            .map(|n| {
                let name = n.as_ref().to_owned();
                if !seen.insert(name.clone()) {
                    return Err(Error::DuplicateColumn(name));
                }
                Ok(Column { name, codes: Vec::new(), dict: Dictionary::default() })
            })
            .collect()
    }

    fn assemble(columns: Vec<Column>, n_rows: usize) -> Result<Self> {
        let by_name = columns.iter().enumerate().map(|(i, c)| (c.name.clone(), AttrId(i))).collect();
        Ok(Self { columns, n_rows, by_name })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_attrs(&self) -> usize {
        self.columns.len()
    }

    pub fn attr_ids(&self) -> impl Iterator<Item = AttrId> + '_ {
        (0..self.columns.len()).map(AttrId)
    }

    pub fn attr(&self, name: &str) -> Result<AttrId> {
        self.by_name.get(name).copied().ok_or_else(|| Error::UnknownAttribute(name.to_owned()))
    }

    pub fn attrs<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<AttrId>> {
        names.iter().map(|n| self.attr(n.as_ref())).collect()
    }

    pub fn name(&self, id: AttrId) -> &str {
        &self.columns[id.0].name
    }

    pub fn names(&self, ids: &[AttrId]) -> Vec<String> {
        ids.iter().map(|&id| self.name(id).to_owned()).collect()
    }

    pub fn column(&self, id: AttrId) -> &Column {
        &self.columns[id.0]
    }

    pub fn codes(&self, id: AttrId) -> &[u32] {
        &self.columns[id.0].codes
    }

    pub fn cardinality(&self, id: AttrId) -> u32 {
        self.columns[id.0].dict.len() as u32
    }

    pub fn decode(&self, id: AttrId, code: u32) -> &str {
        self.columns[id.0].dict.value(code).unwrap_or(MISSING)
    }

    pub fn encode(&self, id: AttrId, value: &str) -> Option<u32> {
        self.columns[id.0].dict.code(value)
    }

    /// An attribute is an eligible outcome iff its observed domain is a
    /// subset of `{0, 1}`.
    pub fn is_binary_outcome(&self, id: AttrId) -> bool {
        self.columns[id.0].dict.values.iter().all(|v| v == "0" || v == "1")
    }

    /// Numeric 0/1 value behind an outcome code.
    pub fn outcome_value(&self, id: AttrId, code: u32) -> Option<u8> {
        match self.columns[id.0].dict.value(code)? {
            "0" => Some(0),
            "1" => Some(1),
            _ => None,
        }
    }
}

fn push_cell(col: &mut Column, cell: &str) {
    let cell = cell.trim();
    let code = col.dict.encode(if cell.is_empty() { MISSING } else { cell });
    col.codes.push(code);
}

fn csv_error(e: csv::Error) -> Error {
    if let csv::ErrorKind::UnequalLengths { pos, expected_len, len } = e.kind() {
        return Error::RaggedRow {
            line: pos.as_ref().map_or(0, |p| p.line()),
            expected: *expected_len as usize,
            found: *len as usize,
        };
    }
    Error::Csv(e.to_string())
}
