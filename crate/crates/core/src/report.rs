//! CSV and JSON serialization of experiment outputs.
//!
//! CSV follows RFC 4180 with a header row; fields are quoted only when
//! they contain separators, so numeric columns are never quoted.

use serde::Serialize;

pub fn csv_string<S: Serialize>(rows: &[S]) -> Result<String, csv::Error> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn json_string<S: Serialize>(value: &S) -> Result<String, serde_json::Error> {
    serde_json::to_string_pretty(value)
}
