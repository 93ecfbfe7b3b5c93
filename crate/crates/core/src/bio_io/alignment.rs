use super::fasta::parse_fasta_records;
use super::{ParseError, ResidueSequence};
use crate::vocab::{Token, Vocabulary};
use std::fmt::Write as _;

/// Homolog rows aligned to the query's columns. Row 0 is the query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentMatrix {
    cols: usize,
    data: Vec<Token>,
    headers: Vec<String>,
}

impl AlignmentMatrix {
    /// A single-row matrix holding the query.
    pub fn from_query(query: &ResidueSequence) -> Self {
        Self::with_query_header(query, "query")
    }

    pub fn with_query_header(query: &ResidueSequence, header: &str) -> Self {
        Self {
            cols: query.len(),
            data: query.tokens().to_vec(),
            headers: vec![header.to_string()],
        }
    }

    /// Appends a homolog row; it must match the width and use valid tokens.
    pub fn push_row(&mut self, header: impl Into<String>, row: Vec<Token>) -> Result<(), ParseError> {
        if row.len() != self.cols {
            return Err(ParseError::RowLength {
                row: self.rows(),
                found: row.len(),
                expected: self.cols,
            });
        }
        if let Some(&bad) = row.iter().find(|&&t| t as usize >= Vocabulary::SIZE) {
            return Err(ParseError::InvalidCharacter {
                ch: char::from_digit(bad as u32 % 10, 10).unwrap_or('?'),
                context: format!("alignment row {}", self.rows()),
            });
        }
        self.data.extend_from_slice(&row);
        self.headers.push(header.into());
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.headers.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn query_index(&self) -> usize {
        0
    }

    pub fn row(&self, i: usize) -> &[Token] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn query_row(&self) -> &[Token] {
        self.row(0)
    }

    pub fn header(&self, i: usize) -> &str {
        &self.headers[i]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[Token]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows())
    }

    /// Tokens of column `j` across all rows.
    pub fn column(&self, j: usize) -> impl Iterator<Item = Token> + '_ {
        (0..self.rows()).map(move |i| self.data[i * self.cols + j])
    }

    /// Renders the matrix as normalized a2m text: uppercase residues, `-`
    /// for pad, `X` for unknown.
    pub fn to_a2m(&self) -> String {
        let mut out = String::with_capacity(self.data.len() + self.rows() * 16);
        for (header, row) in self.headers.iter().zip(self.iter_rows()) {
            let _ = writeln!(out, ">{header}");
            out.extend(row.iter().map(|&t| Vocabulary::to_char(t)));
            out.push('\n');
        }
        out
    }
}

/// Options for a2m ingestion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct A2mOptions {
    /// When the alignment covers only a domain of the query, the 0-based
    /// query position of its first kept column. `None` requires the kept
    /// columns to span the whole query.
    pub column_offset: Option<usize>,
}

fn normalize_char(b: u8) -> Token {
    Vocabulary::residue_letter(b).unwrap_or(Vocabulary::PAD)
}

/// Parses an a2m alignment: lowercase is uppercased, every non-letter
/// becomes `<pad>`, and only columns where the query row holds a residue are
/// kept.
pub fn parse_a2m(text: &str, query: &ResidueSequence, options: A2mOptions) -> Result<AlignmentMatrix, ParseError> {
    let records = parse_fasta_records(text)?;
    let width = records[0].body.len();
    for (i, rec) in records.iter().enumerate() {
        if rec.body.len() != width {
            return Err(ParseError::RowLength {
                row: i,
                found: rec.body.len(),
                expected: width,
            });
        }
    }

    let query_row: Vec<Token> = records[0].body.bytes().map(normalize_char).collect();
    let kept: Vec<usize> = (0..width).filter(|&j| query_row[j] != Vocabulary::PAD).collect();
    let offset = options.column_offset.unwrap_or(0);
    let fits = match options.column_offset {
        None => kept.len() == query.len(),
        Some(off) => off + kept.len() <= query.len(),
    };
    if !fits {
        return Err(ParseError::ColumnCount {
            found: kept.len(),
            expected: query.len().saturating_sub(offset),
        });
    }
    for (k, &j) in kept.iter().enumerate() {
        let found = query_row[j];
        if found == Vocabulary::UNK {
            log::warn!(
                "alignment query row has non-canonical residue '{}' at column {}",
                records[0].body.as_bytes()[j] as char,
                j + 1
            );
        }
        let expected = query.tokens()[offset + k];
        if found != expected {
            return Err(ParseError::QueryMismatch {
                position: offset + k + 1,
                found: Vocabulary::to_char(found),
                expected: Vocabulary::to_char(expected),
            });
        }
    }

    let mut matrix = AlignmentMatrix::with_query_header(query, &records[0].header);
    for rec in &records[1..] {
        let bytes = rec.body.as_bytes();
        let mut row = vec![Vocabulary::PAD; query.len()];
        for (k, &j) in kept.iter().enumerate() {
            row[offset + k] = normalize_char(bytes[j]);
        }
        matrix.push_row(rec.header.clone(), row)?;
    }
    Ok(matrix)
}

/// Converts a3m text to a2m-style aligned text by deleting insertion
/// characters (lowercase letters and `.`) from every hit row.
pub fn reformat_a3m(text: &str) -> Result<String, ParseError> {
    let records = parse_fasta_records(text)?;
    let query = &records[0].body;
    if let Some(ch) = query.chars().find(|c| c.is_ascii_lowercase()) {
        return Err(ParseError::LowercaseQuery { ch });
    }
    let width = query.len();
    let mut out = String::with_capacity(text.len());
    for (i, rec) in records.iter().enumerate() {
        let body: String = rec
            .body
            .chars()
            .filter(|c| !c.is_ascii_lowercase() && *c != '.')
            .collect();
        if body.len() != width {
            return Err(ParseError::RowLength {
                row: i,
                found: body.len(),
                expected: width,
            });
        }
        let _ = writeln!(out, ">{}", rec.header);
        out.push_str(&body);
        out.push('\n');
    }
    Ok(out)
}
