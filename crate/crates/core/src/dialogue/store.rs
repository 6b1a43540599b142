use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use super::{DialogueError, Session};

/// Session persistence.
pub trait SessionStore: Send + Sync {
    fn get(&self, id: &str) -> Result<Option<Session>, DialogueError>;
    fn put(&self, session: &Session) -> Result<(), DialogueError>;
    fn list(&self) -> Result<Vec<String>, DialogueError>;
}

#[derive(Debug, Default)]
pub struct MemorySessionStore {
    sessions: RwLock<BTreeMap<String, Session>>,
}

impl MemorySessionStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SessionStore for MemorySessionStore {
    fn get(&self, id: &str) -> Result<Option<Session>, DialogueError> {
        Ok(self.sessions.read().expect("store lock").get(id).cloned())
    }

    fn put(&self, session: &Session) -> Result<(), DialogueError> {
        self.sessions.write().expect("store lock").insert(session.id.clone(), session.clone());
        Ok(())
    }

    fn list(&self) -> Result<Vec<String>, DialogueError> {
        Ok(self.sessions.read().expect("store lock").keys().cloned().collect())
    }
}

/// Snapshot directory: one `<id>.jsonl` file per session, one JSON snapshot
/// appended per `put`; the last line is the current state.
#[derive(Debug, Clone)]
pub struct FsSessionStore {
    dir: PathBuf,
}

pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl FsSessionStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, DialogueError> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self { dir: dir.as_ref().to_path_buf() })
    }

    fn path(&self, id: &str) -> Result<PathBuf, DialogueError> {
        if !valid_session_id(id) {
            return Err(DialogueError::InvalidSessionId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.jsonl")))
    }
}

impl SessionStore for FsSessionStore {
    fn get(&self, id: &str) -> Result<Option<Session>, DialogueError> {
        let path = self.path(id)?;
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match text.lines().rev().find(|l| !l.trim().is_empty()) {
            Some(line) => Ok(Some(serde_json::from_str(line)?)),
            None => Ok(None),
        }
    }

    fn put(&self, session: &Session) -> Result<(), DialogueError> {
        let mut line = serde_json::to_string(session)?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(self.path(&session.id)?)?;
        f.write_all(line.as_bytes())?;
        Ok(())
    }

    fn list(&self) -> Result<Vec<String>, DialogueError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = p.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fs_store_last_snapshot_wins() {
        let dir = tempfile::tempdir().unwrap();
        let store = FsSessionStore::open(dir.path()).unwrap();
        assert!(store.get("s1").unwrap().is_none());
        let mut s = Session::new("s1");
        store.put(&s).unwrap();
        s.ended = true;
        store.put(&s).unwrap();
        assert_eq!(store.get("s1").unwrap(), Some(s));
        assert_eq!(store.list().unwrap(), ["s1"]);
        assert!(matches!(store.get("../etc"), Err(DialogueError::InvalidSessionId(_))));
    }

    #[test]
    fn memory_store() {
        let store = MemorySessionStore::new();
        store.put(&Session::new("b")).unwrap();
        store.put(&Session::new("a")).unwrap();
        assert_eq!(store.list().unwrap(), ["a", "b"]);
    }
}
