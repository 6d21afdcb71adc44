//! Search-log ingestion.
//!
//! The interchange format is UTF-8 text with LF line endings and five
//! tab-separated columns per line:
//!
//! ```text
//! physician_id  patient_id  visit_id  timestamp  term
//! ```
//!
//! `timestamp` is integer epoch seconds (UTC). All identifier and term
//! fields are opaque tokens; they are trimmed of surrounding whitespace, and
//! terms are optionally lowercased. No clinical vocabulary normalization is
//! applied.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One timestamped search action: physician `physician_id` searched `term`
/// on patient `patient_id` during visit `visit_id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchEvent {
    pub physician_id: String,
    pub patient_id: String,
    pub visit_id: String,
    /// Epoch seconds UTC, never negative.
    pub timestamp: i64,
    pub term: String,
}

/// An ordered list of search events. Input order is preserved and serves as
/// the tie-break when several events in one visit share a timestamp.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<SearchEvent>,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Writes the log back out in the five-column TSV interchange format,
    /// one event per line, no header.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.events {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                e.physician_id, e.patient_id, e.visit_id, e.timestamp, e.term
            )?;
        }
        Ok(())
    }

    pub fn to_tsv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("TSV output is UTF-8")
    }
}

/// Options for [`parse_log`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Skip a single header line at the top of the file.
    pub has_header: bool,
    /// Lowercase terms after trimming.
    pub lowercase_terms: bool,
}

/// Parses a five-column TSV log into an [`EventLog`].
///
/// Events retain input order. Malformed lines (wrong column count,
/// unparsable or negative timestamp, empty field after normalization) abort
/// parsing with an error naming the 1-based line number.
pub fn parse_log<R: BufRead>(reader: R, options: &ParseOptions) -> Result<EventLog> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if options.has_header && line_no == 1 {
            continue;
        }
        events.push(parse_line(&line, line_no, options)?);
    }
    Ok(EventLog { events })
}

fn parse_line(line: &str, line_no: usize, options: &ParseOptions) -> Result<SearchEvent> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected 5 columns, found {}", fields.len()),
        });
    }
    let normalize = |raw: &str, name: &str| -> Result<String> {
        let token = raw.trim();
        if token.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("empty {name} after normalization"),
            });
        }
        Ok(token.to_string())
    };
    let physician_id = normalize(fields[0], "physician_id")?;
    let patient_id = normalize(fields[1], "patient_id")?;
    let visit_id = normalize(fields[2], "visit_id")?;
    let timestamp: i64 = fields[3].trim().parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("invalid timestamp {:?}", fields[3].trim()),
    })?;
    if timestamp < 0 {
        return Err(Error::Parse {
            line: line_no,
            message: format!("negative timestamp {timestamp}"),
        });
    }
    let mut term = normalize(fields[4], "term")?;
    if options.lowercase_terms {
        term = term.to_lowercase();
    }
    Ok(SearchEvent {
        physician_id,
        patient_id,
        visit_id,
        timestamp,
        term,
    })
}
