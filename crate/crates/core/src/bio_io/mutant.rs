use super::{ParseError, ResidueSequence};
use crate::vocab::{Token, Vocabulary};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Substitution {
    /// 1-based position in the wild type.
    pub position: usize,
    pub from: Token,
    pub to: Token,
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            Vocabulary::to_char(self.from),
            self.position,
            Vocabulary::to_char(self.to)
        )
    }
}

/// A set of substitutions sorted by position, validated against a wild type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MutantSpec {
    subs: Vec<Substitution>,
    label: String,
}

impl MutantSpec {
    pub fn substitutions(&self) -> &[Substitution] {
        &self.subs
    }

    /// The label exactly as it was given.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Canonical label, substitutions sorted and joined by ':'.
    pub fn canonical_label(&self) -> String {
        self.subs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(":")
    }

    /// Applies the substitutions to `wild_type`.
    pub fn apply(&self, wild_type: &ResidueSequence) -> ResidueSequence {
        let mut tokens = wild_type.tokens().to_vec();
        for s in &self.subs {
            tokens[s.position - 1] = s.to;
        }
        ResidueSequence::from_tokens(tokens).expect("substitutions only introduce amino acids")
    }

    /// The spec that undoes this one when parsed against the mutated sequence.
    pub fn reversed(&self) -> MutantSpec {
        let subs: Vec<Substitution> = self
            .subs
            .iter()
            .map(|s| Substitution {
                position: s.position,
                from: s.to,
                to: s.from,
            })
            .collect();
        let label = subs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(":");
        MutantSpec { subs, label }
    }
}

impl fmt::Display for MutantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn amino_acid(token: &str, b: u8, what: &str) -> Result<Token, ParseError> {
    Vocabulary::amino_acid(b).ok_or_else(|| ParseError::MalformedMutant {
        token: token.to_string(),
        reason: format!("{what} residue '{}' is not a canonical amino acid", b as char),
    })
}

/// Parses `<AA><pos><AA>` tokens joined by ':' (e.g. `Y449G`, `A1C:D5E`)
/// against a wild type, with 1-based positions.
pub fn parse_mutant_spec(label: &str, wild_type: &ResidueSequence) -> Result<MutantSpec, ParseError> {
    let trimmed = label.trim();
    let mut subs = Vec::new();
    for token in trimmed.split(':') {
        let bytes = token.as_bytes();
        if bytes.len() < 3 {
            return Err(ParseError::MalformedMutant {
                token: token.to_string(),
                reason: "expected <AA><position><AA>".into(),
            });
        }
        let from = amino_acid(token, bytes[0], "wild-type")?;
        let to = amino_acid(token, bytes[bytes.len() - 1], "mutant")?;
        let digits = &token[1..token.len() - 1];
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseError::MalformedMutant {
                token: token.to_string(),
                reason: format!("position '{digits}' is not a number"),
            });
        }
        let position: usize = digits.parse().map_err(|_| ParseError::MalformedMutant {
            token: token.to_string(),
            reason: format!("position '{digits}' is not a number"),
        })?;
        if position == 0 || position > wild_type.len() {
            return Err(ParseError::PositionOutOfRange {
                token: token.to_string(),
                position,
                len: wild_type.len(),
            });
        }
        let actual = wild_type.tokens()[position - 1];
        if actual != from {
            return Err(ParseError::WildTypeMismatch {
                token: token.to_string(),
                position,
                expected: Vocabulary::to_char(actual),
                stated: Vocabulary::to_char(from),
            });
        }
        subs.push(Substitution { position, from, to });
    }
    subs.sort_by_key(|s| s.position);
    if let Some(w) = subs.windows(2).find(|w| w[0].position == w[1].position) {
        return Err(ParseError::DuplicatePosition {
            label: trimmed.to_string(),
            position: w[0].position,
        });
    }
    Ok(MutantSpec {
        subs,
        label: trimmed.to_string(),
    })
}
