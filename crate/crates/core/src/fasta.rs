//! FASTA input and alphabet selection.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

/// The 20 standard amino acids.
pub const PROTEIN_SYMBOLS: &str = "ACDEFGHIKLMNPQRSTVWY";
pub const DNA_SYMBOLS: &str = "ACGT";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceRecord {
    /// First whitespace-delimited token of the header.
    pub id: String,
    /// Uppercased residues with gaps (`-`, `.`) removed.
    pub residues: String,
}

/// Reads a FASTA file; see [`parse_fasta_str`].
pub fn parse_fasta<P: AsRef<Path>>(path: P) -> Result<Vec<SequenceRecord>> {
    parse_fasta_str(&fs::read_to_string(path)?)
}

/// Parses FASTA text. Multi-line sequences are concatenated.
///
/// Errors on input without records, text before the first header, empty
/// or duplicate ids, and records whose sequence is empty after cleaning.
pub fn parse_fasta_str(text: &str) -> Result<Vec<SequenceRecord>> {
    let mut records: Vec<SequenceRecord> = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(header) = line.strip_prefix('>') {
            if let Some(last) = records.last() {
                check_nonempty(last)?;
            }
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "FASTA header without an id".into(),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::Fasta {
                    record: id,
                    message: "duplicate id".into(),
                });
            }
            records.push(SequenceRecord {
                id,
                residues: String::new(),
            });
        } else if let Some(rec) = records.last_mut() {
            rec.residues.extend(
                line.chars()
                    .filter(|c| !c.is_whitespace() && *c != '-' && *c != '.')
                    .map(|c| c.to_ascii_uppercase()),
            );
        } else if !line.trim().is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "sequence data before the first '>' header".into(),
            });
        }
    }
    match records.last() {
        None => Err(Error::EmptyInput("no FASTA records".into())),
        Some(last) => {
            check_nonempty(last)?;
            Ok(records)
        }
    }
}

fn check_nonempty(rec: &SequenceRecord) -> Result<()> {
    if rec.residues.is_empty() {
        return Err(Error::Fasta {
            record: rec.id.clone(),
            message: "empty sequence".into(),
        });
    }
    Ok(())
}

/// The sorted set of symbols observed across all records.
pub fn infer_alphabet(records: &[SequenceRecord]) -> Result<Alphabet> {
    let symbols: BTreeSet<char> = records.iter().flat_map(|r| r.residues.chars()).collect();
    Alphabet::new(symbols)
}

/// Resolves an alphabet specification: `protein` (the 20 standard amino
/// acids), `dna`, `infer` (symbols observed in `records`), or a literal
/// symbol string, which is uppercased to match cleaned residues.
pub fn resolve_alphabet(choice: &str, records: &[SequenceRecord]) -> Result<Alphabet> {
    match choice {
        "protein" => Alphabet::from_str_symbols(PROTEIN_SYMBOLS),
        "dna" => Alphabet::from_str_symbols(DNA_SYMBOLS),
        "infer" => infer_alphabet(records),
        literal => Alphabet::from_str_symbols(&literal.to_ascii_uppercase()),
    }
}

/// Checks every residue against `alphabet`, naming the first offending
/// record, symbol and (0-based) position.
pub fn check_records(records: &[SequenceRecord], alphabet: &Alphabet) -> Result<()> {
    for r in records {
        alphabet.encode(&r.residues).map_err(|e| Error::Fasta {
            record: r.id.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}
