//! Input formats: FASTA, PDB CA coordinates, a2m/a3m alignments, mutant
//! labels and assay CSVs.

mod alignment;
mod assay;
mod fasta;
mod mutant;
mod pdb;

pub use alignment::{parse_a2m, reformat_a3m, A2mOptions, AlignmentMatrix};
pub use assay::{
    default_protein_key, parse_assay_csv, read_assay_csv, read_mutant_labels, read_scores_csv, write_atomic,
    write_scores_csv, AssayColumns, AssayTable,
};
pub use fasta::{parse_fasta, parse_fasta_records, FastaRecord};
pub use mutant::{parse_mutant_spec, MutantSpec, Substitution};
pub use pdb::{parse_pdb_ca, BackboneCoords, ResidueId};

use crate::vocab::{Token, Vocabulary};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("line {line}: sequence data before any '>' header")]
    MissingHeader { line: usize },
    #[error("record '{header}' has no sequence")]
    EmptyRecord { header: String },
    #[error("invalid character '{ch}' in sequence '{context}'")]
    InvalidCharacter { ch: char, context: String },
    #[error("no residues: input has no ATOM records{}", chain.map(|c| format!(" for chain '{c}'")).unwrap_or_default())]
    NoResidues { chain: Option<char> },
    #[error("residue {residue} is missing a CA atom")]
    MissingCa { residue: String },
    #[error("line {line}: malformed ATOM record: {reason}")]
    MalformedAtom { line: usize, reason: String },
    #[error("alignment row {row} has length {found}, expected {expected}")]
    RowLength { row: usize, found: usize, expected: usize },
    #[error("alignment keeps {found} query columns, expected {expected}")]
    ColumnCount { found: usize, expected: usize },
    #[error("alignment query row does not match the wild type at position {position} (alignment '{found}', wild type '{expected}')")]
    QueryMismatch {
        position: usize,
        found: char,
        expected: char,
    },
    #[error("a3m query row contains lowercase character '{ch}'")]
    LowercaseQuery { ch: char },
    #[error("malformed mutant token '{token}': {reason}")]
    MalformedMutant { token: String, reason: String },
    #[error("mutant '{token}': position {position} out of range 1..={len}")]
    PositionOutOfRange { token: String, position: usize, len: usize },
    #[error("mutant '{token}': position {position} expected {expected}, found {stated}")]
    WildTypeMismatch {
        token: String,
        position: usize,
        expected: char,
        stated: char,
    },
    #[error("mutant '{label}' names position {position} more than once")]
    DuplicatePosition { label: String, position: usize },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("duplicate mutant label '{label}' at row {row}")]
    DuplicateLabel { label: String, row: usize },
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
}

impl IoError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn parse(path: &std::path::Path, source: ParseError) -> Self {
        IoError::Parse {
            path: path.display().to_string(),
            source,
        }
    }
}

/// A wild-type residue sequence with its token encoding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResidueSequence {
    raw: String,
    tokens: Vec<Token>,
}

impl ResidueSequence {
    /// Tokenizes one-letter codes. Lowercase is accepted; non-canonical
    /// letters map to `<unk>` with a warning; gaps and other symbols are
    /// rejected.
    pub fn from_letters(letters: &str) -> Result<Self, ParseError> {
        let mut raw = String::with_capacity(letters.len());
        let mut tokens = Vec::with_capacity(letters.len());
        for b in letters.bytes() {
            let tok = Vocabulary::residue_letter(b).ok_or_else(|| ParseError::InvalidCharacter {
                ch: b as char,
                context: truncate(letters),
            })?;
            if tok == Vocabulary::UNK {
                log::warn!("non-canonical residue '{}' mapped to <unk>", b as char);
            }
            raw.push(b.to_ascii_uppercase() as char);
            tokens.push(tok);
        }
        Ok(Self { raw, tokens })
    }

    /// Builds a sequence from tokens. Pad and the remaining special tokens
    /// are rejected except `<unk>`.
    pub fn from_tokens(tokens: Vec<Token>) -> Result<Self, ParseError> {
        let mut raw = String::with_capacity(tokens.len());
        for &t in &tokens {
            if !(Vocabulary::is_amino_acid(t) || t == Vocabulary::UNK) {
                return Err(ParseError::InvalidCharacter {
                    ch: Vocabulary::to_char(t),
                    context: "token sequence".into(),
                });
            }
            raw.push(Vocabulary::to_char(t));
        }
        Ok(Self { raw, tokens })
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl std::fmt::Display for ResidueSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.raw)
    }
}

fn truncate(s: &str) -> String {
    if s.len() > 24 {
        format!("{}...", &s[..24])
    } else {
        s.to_string()
    }
}

/// Splits text into lines accepting both `\n` and `\r\n`.
pub(crate) fn lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_sequence_rules() {
        let s = ResidueSequence::from_letters("acdX").unwrap();
        assert_eq!(s.as_str(), "ACDX");
        assert_eq!(s.tokens(), &[0, 1, 2, Vocabulary::UNK]);
        assert!(ResidueSequence::from_letters("A-C").is_err());
        assert!(ResidueSequence::from_tokens(vec![0, Vocabulary::PAD]).is_err());
    }
}
