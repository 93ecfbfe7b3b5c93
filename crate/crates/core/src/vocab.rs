//! Residue vocabulary shared by the language model and the alignment counts.
//!
//! Twenty canonical amino acids occupy indices `0..20`, followed by five
//! special tokens. Every gap character in an alignment is normalized to
//! [`Vocabulary::PAD`].

/// Integer index into the 25-symbol vocabulary.
pub type Token = u8;

/// Canonical one-letter amino acid codes, in token order.
pub const AMINO_ACIDS: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

const SYMBOLS: [&str; 25] = [
    "A", "C", "D", "E", "F", "G", "H", "I", "K", "L", "M", "N", "P", "Q", "R", "S", "T", "V", "W", "Y", "<pad>",
    "<unk>", "<mask>", "<bos>", "<eos>",
];

/// The fixed 25-token residue vocabulary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Vocabulary;

impl Vocabulary {
    pub const SIZE: usize = 25;
    pub const NUM_AMINO_ACIDS: usize = 20;

    pub const PAD: Token = 20;
    pub const UNK: Token = 21;
    pub const MASK: Token = 22;
    pub const BOS: Token = 23;
    pub const EOS: Token = 24;

    pub fn symbols() -> &'static [&'static str; 25] {
        &SYMBOLS
    }

    pub fn symbol(token: Token) -> Option<&'static str> {
        SYMBOLS.get(token as usize).copied()
    }

    /// Looks up a symbol string (`"A"`, `"<pad>"`, ...).
    pub fn index(symbol: &str) -> Option<Token> {
        SYMBOLS.iter().position(|s| *s == symbol).map(|i| i as Token)
    }

    /// Maps an uppercase canonical amino acid letter to its token.
    pub fn amino_acid(letter: u8) -> Option<Token> {
        AMINO_ACIDS.iter().position(|&a| a == letter).map(|i| i as Token)
    }

    /// Maps any ASCII letter (either case) to a residue token; non-canonical
    /// letters become [`Vocabulary::UNK`]. Returns `None` for non-letters.
    pub fn residue_letter(letter: u8) -> Option<Token> {
        if !letter.is_ascii_alphabetic() {
            return None;
        }
        Some(Self::amino_acid(letter.to_ascii_uppercase()).unwrap_or(Self::UNK))
    }

    pub fn is_amino_acid(token: Token) -> bool {
        (token as usize) < Self::NUM_AMINO_ACIDS
    }

    /// One-letter rendering used when writing alignments: pad becomes `-`,
    /// every other special token becomes `X`.
    pub fn to_char(token: Token) -> char {
        match token {
            t if Self::is_amino_acid(t) => AMINO_ACIDS[t as usize] as char,
            Self::PAD => '-',
            _ => 'X',
        }
    }
}

/// Three-letter PDB residue name to one-letter code.
pub fn three_to_one(name: &str) -> Option<u8> {
    let code = match name {
        "ALA" => b'A',
        "CYS" => b'C',
        "ASP" => b'D',
        "GLU" => b'E',
        "PHE" => b'F',
        "GLY" => b'G',
        "HIS" => b'H',
        "ILE" => b'I',
        "LYS" => b'K',
        "LEU" => b'L',
        "MET" => b'M',
        "ASN" => b'N',
        "PRO" => b'P',
        "GLN" => b'Q',
        "ARG" => b'R',
        "SER" => b'S',
        "THR" => b'T',
        "VAL" => b'V',
        "TRP" => b'W',
        "TYR" => b'Y',
        "MSE" => b'M',
        "SEC" => b'U',
        "PYL" => b'O',
        _ => return None,
    };
    Some(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bijection() {
        assert_eq!(Vocabulary::symbols().len(), Vocabulary::SIZE);
        for (i, s) in Vocabulary::symbols().iter().enumerate() {
            assert_eq!(Vocabulary::index(s), Some(i as Token));
            assert_eq!(Vocabulary::symbol(i as Token), Some(*s));
        }
        assert_eq!(Vocabulary::index("<pad>"), Some(Vocabulary::PAD));
    }

    #[test]
    fn letters() {
        assert_eq!(Vocabulary::residue_letter(b'a'), Some(0));
        assert_eq!(Vocabulary::residue_letter(b'X'), Some(Vocabulary::UNK));
        assert_eq!(Vocabulary::residue_letter(b'-'), None);
        assert_eq!(Vocabulary::to_char(Vocabulary::PAD), '-');
        assert_eq!(Vocabulary::to_char(19), 'Y');
    }
}
