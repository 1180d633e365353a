//! File-based review queue: snippets go out as JSONL, reviewed statuses come
//! back in. Import touches nothing but `review_status`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::CodeSnippet;
use crate::error::{Error, Result};

/// Write snippets to a JSONL review file, one object per line with every
/// snippet field present.
pub fn export_review(snippets: &[CodeSnippet], path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    for snippet in snippets {
        serde_json::to_writer(&mut file, snippet)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a review file back and copy each line's `review_status` onto the
/// matching snippet. Returns the number of snippets updated.
pub fn import_review(snippets: &mut [CodeSnippet], path: &Path) -> Result<usize> {
    let mut by_id: BTreeMap<&str, &mut CodeSnippet> = snippets
        .iter_mut()
        .map(|s| (s.id.as_str(), s))
        .collect();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut updated = 0;
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reviewed: CodeSnippet =
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                path: path.to_path_buf(),
                line: index + 1,
                message: e.to_string(),
            })?;
        match by_id.get_mut(reviewed.id.as_str()) {
            Some(snippet) => {
                if snippet.review_status != reviewed.review_status {
                    snippet.review_status = reviewed.review_status;
                    updated += 1;
                }
            }
            None => {
                return Err(Error::UnknownSnippet {
                    id: reviewed.id.clone(),
                })
            }
        }
    }
    Ok(updated)
}
