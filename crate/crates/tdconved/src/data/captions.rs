//! Caption files: one JSON record per line with `video_id` and `caption`
//! fields. String contents round-trip byte-for-byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub video_id: String,
    pub caption: String,
}

/// Parses line-delimited caption records; blank lines are skipped. Errors
/// carry the byte offset of the offending line.
pub fn parse_captions(bytes: &[u8]) -> Result<Vec<CaptionRecord>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Format {
        offset: e.valid_up_to(),
        message: "caption file is not valid UTF-8".to_string(),
    })?;
    let mut records = Vec::new();
    let mut offset = 0usize;
    for line in text.split('\n') {
        let trimmed = line.trim_end_matches('\r');
        if !trimmed.trim().is_empty() {
            let rec: CaptionRecord = serde_json::from_str(trimmed).map_err(|e| Error::Format {
                offset,
                message: format!("bad caption record: {e}"),
            })?;
            records.push(rec);
        }
        offset += line.len() + 1;
    }
    Ok(records)
}

pub fn read_captions(path: &Path) -> Result<Vec<CaptionRecord>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_captions(&bytes)
}

pub fn encode_captions(records: &[CaptionRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for rec in records {
        out.extend_from_slice(
            serde_json::to_string(rec)
                .expect("caption records always serialize")
                .as_bytes(),
        );
        out.push(b'\n');
    }
    out
}

pub fn write_captions(path: &Path, records: &[CaptionRecord]) -> Result<()> {
    std::fs::write(path, encode_captions(records)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_reproduces_strings_byte_for_byte() {
        let records = vec![
            CaptionRecord {
                video_id: "vid0".into(),
                caption: "a man is playing a guitar".into(),
            },
            CaptionRecord {
                video_id: "vid1".into(),
                caption: "weird \"quotes\" and \\ slashes\tand tabs".into(),
            },
        ];
        let bytes = encode_captions(&records);
        let back = parse_captions(&bytes).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn bad_line_reports_its_byte_offset() {
        let good = r#"{"video_id":"a","caption":"x"}"#;
        let text = format!("{good}\nnot json\n");
        let err = parse_captions(text.as_bytes()).unwrap_err();
        match err {
            Error::Format { offset, .. } => assert_eq!(offset, good.len() + 1),
            other => panic!("expected format error, got {other}"),
        }
    }

    #[test]
    fn blank_lines_are_skipped() {
        let text = "\n{\"video_id\":\"a\",\"caption\":\"x\"}\n\n";
        assert_eq!(parse_captions(text.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn invalid_utf8_is_a_format_error() {
        let bytes = vec![b'{', 0xFF, 0xFE];
        assert!(matches!(
            parse_captions(&bytes),
            Err(Error::Format { .. })
        ));
    }
}
