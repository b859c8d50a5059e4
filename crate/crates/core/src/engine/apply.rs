//! Writing plans to disk with a journal, and undoing them.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{sha256_hex, MigrationPlan};
use crate::jparse::{apply_edits, parse_compilation_unit, EditError, ParseError};

const STATE_DIR: &str = ".retype";

#[derive(Debug, Error)]
pub enum ApplyError {
    #[error("{0} changed on disk since it was parsed")]
    StaleFile(PathBuf),
    #[error("edited {path} no longer parses: {error}")]
    ReparseFailure { path: PathBuf, error: ParseError },
    #[error("cannot edit {path}: {error}")]
    Edit { path: PathBuf, error: EditError },
    #[error("another retype process holds {0}")]
    Locked(PathBuf),
    #[error("no journal found under {0}")]
    NoJournal(PathBuf),
    #[error("journal {0} was already undone")]
    Consumed(PathBuf),
    #[error("malformed journal {path}: {error}")]
    BadJournal { path: PathBuf, error: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JournalFile {
    pub path: PathBuf,
    pub pre_hash: String,
    pub post_hash: String,
    pub original_content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JournalSummary {
    pub root: String,
    pub edits: usize,
    pub import_edits: usize,
    pub failed: usize,
    pub elements: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JournalRecord {
    pub timestamp: String,
    pub pattern_id: u32,
    pub consumed: bool,
    pub summary: JournalSummary,
    pub files: Vec<JournalFile>,
}

/// A journal record and where it is stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditJournal {
    pub path: PathBuf,
    pub record: JournalRecord,
}

/// Exclusive hold on a project's `.retype/lock`, released on drop.
struct Lock(PathBuf);

impl Lock {
    fn acquire(root: &Path) -> Result<Self, ApplyError> {
        let dir = root.join(STATE_DIR);
        fs::create_dir_all(&dir)?;
        let path = dir.join("lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Lock(path)),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(ApplyError::Locked(path)),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Write files, restoring every file already written if one write fails.
fn write_all(root: &Path, contents: &[(PathBuf, String, String)]) -> Result<(), ApplyError> {
    for (i, (path, _, new)) in contents.iter().enumerate() {
        if let Err(e) = fs::write(root.join(path), new) {
            for (p, old, _) in &contents[..i] {
                let _ = fs::write(root.join(p), old);
            }
            return Err(e.into());
        }
    }
    Ok(())
}

pub fn journal_dir(root: &Path) -> PathBuf {
    root.join(STATE_DIR).join("journal")
}

/// Apply `plan` to the files under `root` and record a journal. Nothing is written unless
/// every file is unchanged since planning and every edited file still parses.
pub fn apply_plan(root: &Path, plan: &MigrationPlan) -> Result<EditJournal, ApplyError> {
    let _lock = Lock::acquire(root)?;
    let mut contents = Vec::new();
    for path in plan.files() {
        let old = fs::read_to_string(root.join(&path))?;
        if plan.file_hashes.get(&path) != Some(&sha256_hex(old.as_bytes())) {
            return Err(ApplyError::StaleFile(path));
        }
        let new = apply_edits(&old, &plan.edits_for(&path)).map_err(|error| ApplyError::Edit { path: path.clone(), error })?;
        if let Err(error) = parse_compilation_unit(&new) {
            return Err(ApplyError::ReparseFailure { path, error });
        }
        contents.push((path, old, new));
    }
    write_all(root, &contents)?;

    let now = chrono::Utc::now();
    let record = JournalRecord {
        timestamp: now.to_rfc3339_opts(chrono::SecondsFormat::Micros, true),
        pattern_id: plan.pattern_id,
        consumed: false,
        summary: JournalSummary {
            root: plan.root.label(),
            edits: plan.edit_count(),
            import_edits: plan.import_edits.len(),
            failed: plan.failed.len(),
            elements: plan.elements.len(),
        },
        files: contents
            .iter()
            .map(|(path, old, new)| JournalFile {
                path: path.clone(),
                pre_hash: sha256_hex(old.as_bytes()),
                post_hash: sha256_hex(new.as_bytes()),
                original_content: old.clone(),
            })
            .collect(),
    };
    let dir = journal_dir(root);
    fs::create_dir_all(&dir)?;
    let stem = now.format("%Y%m%dT%H%M%S%6fZ").to_string();
    let mut path = dir.join(format!("{stem}.json"));
    let mut n = 1;
    while path.exists() {
        path = dir.join(format!("{stem}-{n}.json"));
        n += 1;
    }
    if let Err(e) = write_journal(&path, &record) {
        // Without a journal the change cannot be undone; put the files back.
        for (p, old, _) in &contents {
            let _ = fs::write(root.join(p), old);
        }
        return Err(e);
    }
    Ok(EditJournal { path, record })
}

fn write_journal(path: &Path, record: &JournalRecord) -> Result<(), ApplyError> {
    let json = serde_json::to_string_pretty(record).expect("journal serializes");
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_journal(path: &Path) -> Result<EditJournal, ApplyError> {
    let text = fs::read_to_string(path)?;
    let record = serde_json::from_str(&text).map_err(|error| ApplyError::BadJournal { path: path.to_path_buf(), error })?;
    Ok(EditJournal { path: path.to_path_buf(), record })
}

/// The most recent journal under `root`, consumed or not.
pub fn latest_journal(root: &Path) -> Result<PathBuf, ApplyError> {
    let dir = journal_dir(root);
    let entries = match fs::read_dir(&dir) {
        Ok(e) => e,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(ApplyError::NoJournal(dir)),
        Err(e) => return Err(e.into()),
    };
    let mut names: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort_by_key(|p| {
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let (base, n) = stem.split_once('-').map_or((stem.clone(), 0), |(b, n)| (b.to_string(), n.parse().unwrap_or(0)));
        (base, n)
    });
    names.pop().ok_or(ApplyError::NoJournal(dir))
}

/// Restore the pre-apply contents recorded in `journal` and mark it consumed.
pub fn undo(root: &Path, journal: &Path) -> Result<EditJournal, ApplyError> {
    let _lock = Lock::acquire(root)?;
    let mut j = read_journal(journal)?;
    if j.record.consumed {
        return Err(ApplyError::Consumed(journal.to_path_buf()));
    }
    let mut contents = Vec::new();
    for f in &j.record.files {
        let current = fs::read_to_string(root.join(&f.path))?;
        if sha256_hex(current.as_bytes()) != f.post_hash {
            return Err(ApplyError::StaleFile(f.path.clone()));
        }
        contents.push((f.path.clone(), current, f.original_content.clone()));
    }
    write_all(root, &contents)?;
    j.record.consumed = true;
    write_journal(journal, &j.record)?;
    Ok(j)
}
