//! Corpus disk format: one JSON object per line with a fixed key order
//! (`stack`, `blame_index`, `problem_class`, `app`, `ts`). `blame_index` is
//! omitted entirely for unlabeled records. Writers go through a
//! temp-file-and-rename so a failed run never leaves a partial file behind.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{parse_frame, Corpus, CrashRecord};
use crate::error::{Error, Result};

/// Wire form of one record. Serde emits struct fields in declaration order,
/// which pins the on-disk key order.
#[derive(Serialize, Deserialize)]
struct RecordLine {
    stack: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blame_index: Option<usize>,
    problem_class: String,
    app: String,
    ts: i64,
}

/// Serializes one record to its JSON line (no trailing newline).
fn record_to_line(record: &CrashRecord) -> String {
    let line = RecordLine {
        stack: record.stack.iter().map(|f| f.raw.clone()).collect(),
        blame_index: record.blame_index,
        problem_class: record.problem_class.clone(),
        app: record.app.clone(),
        ts: record.timestamp,
    };
    serde_json::to_string(&line).expect("record serialization cannot fail")
}

/// Writes `bytes` to `path` atomically: the content lands in a temp file in
/// the same directory and is renamed into place only once fully written.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidData(format!("not a writable path: {}", path.display())))?;
    let tmp_path = path.with_file_name(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    let mut tmp = fs::File::create(&tmp_path)?;
    let write_result = tmp.write_all(bytes).and_then(|()| tmp.sync_all());
    drop(tmp);
    if let Err(e) = write_result {
        let _ = fs::remove_file(&tmp_path);
        return Err(e.into());
    }
    if let Err(e) = fs::rename(&tmp_path, path) {
        let _ = fs::remove_file(&tmp_path);
        return Err(e.into());
    }
    Ok(())
}

/// Saves a corpus as JSON lines, atomically.
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = String::new();
    for record in &corpus.records {
        out.push_str(&record_to_line(record));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Loads a JSON-lines corpus. Any malformed line fails the whole load with
/// an error naming the 1-based line number; blank lines are skipped.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: RecordLine = serde_json::from_str(&line).map_err(|e| Error::CorpusLine {
            line: line_no,
            message: e.to_string(),
        })?;
        let stack = wire.stack.iter().map(|s| parse_frame(s)).collect();
        let record = CrashRecord::new(stack, wire.blame_index, &wire.problem_class, &wire.app, wire.ts)
            .map_err(|e| Error::CorpusLine {
                line: line_no,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(Corpus::new(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Frame;

    fn sample_record(blame: Option<usize>) -> CrashRecord {
        let stack = vec![
            Frame::from_parts("app.dll", "gfx::Queue", "CopyPixelBuffer", Some(0x12)),
            Frame::from_parts("ntdll.dll", "", "RtlUserThreadStart", None),
        ];
        CrashRecord::new(stack, blame, "INVALID_POINTER_READ", "app", 1_700_000_123).unwrap()
    }

    #[test]
    fn line_has_fixed_key_order() {
        let line = record_to_line(&sample_record(Some(0)));
        assert_eq!(
            line,
            r#"{"stack":["app.dll!gfx::Queue::CopyPixelBuffer+0x12","ntdll.dll!RtlUserThreadStart"],"blame_index":0,"problem_class":"INVALID_POINTER_READ","app":"app","ts":1700000123}"#
        );
    }

    #[test]
    fn unlabeled_record_omits_blame_key() {
        let line = record_to_line(&sample_record(None));
        assert!(!line.contains("blame_index"));
    }

    #[test]
    fn save_load_round_trip_preserves_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let corpus = Corpus::new(vec![sample_record(Some(0)), sample_record(None)]);
        save_corpus(&corpus, &path).unwrap();
        let loaded = load_corpus(&path).unwrap();
        assert_eq!(corpus, loaded);
    }

    #[test]
    fn malformed_line_names_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = record_to_line(&sample_record(Some(0)));
        fs::write(&path, format!("{good}\n{{\"stack\":[\"a!b\"],\"app\":\"x\",\"ts\":1}}\n")).unwrap();
        let err = load_corpus(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "got: {msg}");
        assert!(msg.contains("problem_class"), "got: {msg}");
    }

    #[test]
    fn out_of_range_blame_names_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(
            &path,
            "{\"stack\":[\"a!b\"],\"blame_index\":3,\"problem_class\":\"C\",\"app\":\"x\",\"ts\":1}\n",
        )
        .unwrap();
        let err = load_corpus(&path).unwrap_err();
        assert!(err.to_string().contains("line 1"), "got: {err}");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
        // No stray temp files left behind.
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().contains("tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }
}
