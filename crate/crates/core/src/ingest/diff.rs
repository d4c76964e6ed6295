use super::FileChange;

/// Splits unified-diff text into per-file added and removed lines.
///
/// A new file starts at `diff --git`, at a `---`/`+++` header pair, or at a
/// hunk that appears before any header (the file path is then empty). Hunk
/// bodies are delimited by the line counts in their `@@` header, so a removed
/// line whose content begins with `--` is not mistaken for a header. Text
/// without any hunk produces no changes.
pub fn parse_unified_diff(diff_text: &str) -> Vec<FileChange> {
    let lines: Vec<&str> = diff_text.lines().collect();
    let mut files: Vec<PendingFile> = Vec::new();
    let mut i = 0;

    while i < lines.len() {
        let line = lines[i];
        if let Some(rest) = line.strip_prefix("diff --git ") {
            files.push(PendingFile::new(git_header_path(rest)));
            i += 1;
        } else if line.starts_with("--- ")
            && lines.get(i + 1).is_some_and(|l| l.starts_with("+++ "))
        {
            let old = header_path(&line[4..]);
            let new = header_path(&lines[i + 1][4..]);
            let path = if new == "/dev/null" { old } else { new };
            match files.last_mut() {
                Some(f) if !f.has_headers && !f.has_hunks => {
                    f.has_headers = true;
                    f.path = path;
                }
                _ => {
                    let mut f = PendingFile::new(path);
                    f.has_headers = true;
                    files.push(f);
                }
            }
            i += 2;
        } else if line.starts_with("@@") {
            if files.is_empty() {
                files.push(PendingFile::new(String::new()));
            }
            let file = files.last_mut().expect("a file was just ensured");
            file.has_hunks = true;
            i = consume_hunk(&lines, i + 1, parse_hunk_counts(line), file);
        } else {
            // Extended headers (index, mode, rename) and free text.
            i += 1;
        }
    }

    files
        .into_iter()
        .filter(|f| f.has_hunks)
        .map(|f| f.change)
        .collect()
}

struct PendingFile {
    change: FileChange,
    path: String,
    has_headers: bool,
    has_hunks: bool,
}

impl PendingFile {
    fn new(path: String) -> Self {
        Self {
            change: FileChange::default(),
            path,
            has_headers: false,
            has_hunks: false,
        }
    }
}

// Returns the index of the first line after the hunk body.
fn consume_hunk(
    lines: &[&str],
    mut i: usize,
    counts: Option<(usize, usize)>,
    file: &mut PendingFile,
) -> usize {
    file.change.file_path.clone_from(&file.path);
    match counts {
        Some((mut old_left, mut new_left)) => {
            while i < lines.len() && (old_left > 0 || new_left > 0) {
                let line = lines[i];
                if let Some(removed) = line.strip_prefix('-') {
                    file.change.removed_lines.push(removed.to_string());
                    old_left = old_left.saturating_sub(1);
                } else if let Some(added) = line.strip_prefix('+') {
                    file.change.added_lines.push(added.to_string());
                    new_left = new_left.saturating_sub(1);
                } else if line.starts_with('\\') {
                    // "\ No newline at end of file"
                } else if line.starts_with(' ') || line.is_empty() {
                    old_left = old_left.saturating_sub(1);
                    new_left = new_left.saturating_sub(1);
                } else {
                    // Truncated hunk: let the outer loop look at this line.
                    break;
                }
                i += 1;
            }
            // A trailing marker belongs to the hunk just consumed.
            while i < lines.len() && lines[i].starts_with('\\') {
                i += 1;
            }
        }
        None => {
            while i < lines.len() {
                let line = lines[i];
                if line.starts_with("@@") || line.starts_with("diff --git ") {
                    break;
                }
                if line.starts_with("--- ")
                    && lines.get(i + 1).is_some_and(|l| l.starts_with("+++ "))
                {
                    break;
                }
                if let Some(removed) = line.strip_prefix('-') {
                    file.change.removed_lines.push(removed.to_string());
                } else if let Some(added) = line.strip_prefix('+') {
                    file.change.added_lines.push(added.to_string());
                }
                i += 1;
            }
        }
    }
    i
}

/// Parses `@@ -a[,b] +c[,d] @@` into (old line count, new line count).
fn parse_hunk_counts(header: &str) -> Option<(usize, usize)> {
    let mut parts = header.split_whitespace().skip(1);
    let old = parts.next()?.strip_prefix('-')?;
    let new = parts.next()?.strip_prefix('+')?;
    Some((range_len(old)?, range_len(new)?))
}

fn range_len(range: &str) -> Option<usize> {
    match range.split_once(',') {
        Some((start, len)) => {
            start.parse::<usize>().ok()?;
            len.parse().ok()
        }
        None => range.parse::<usize>().ok().map(|_| 1),
    }
}

fn header_path(raw: &str) -> String {
    // Strip an optional tab-separated timestamp, then the a/ or b/ prefix.
    let path = raw.split('\t').next().unwrap_or(raw).trim_end();
    path.strip_prefix("a/")
        .or_else(|| path.strip_prefix("b/"))
        .unwrap_or(path)
        .to_string()
}

fn git_header_path(rest: &str) -> String {
    match rest.rsplit_once(" b/") {
        Some((_, new)) => new.to_string(),
        None => rest
            .split_whitespace()
            .last()
            .unwrap_or_default()
            .to_string(),
    }
}
