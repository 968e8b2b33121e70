//! In-memory interactive sessions with idle-time eviction.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use serde::Serialize;
use vidsem_core::{ConceptCandidate, ConceptId, FeedbackState, Label, NormalizedQuery};

#[derive(Debug, Clone, Serialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub video_ids: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Session {
    pub session_id: String,
    pub query: NormalizedQuery,
    pub candidates: Vec<ConceptCandidate>,
    pub confirmed: Vec<ConceptId>,
    /// `None` until concepts are confirmed.
    pub feedback: Option<FeedbackState>,
    pub history: Vec<HistoryEntry>,
    /// Every label submitted so far, latest per video.
    pub judgments: BTreeMap<String, Label>,
    #[serde(skip)]
    last_used: Instant,
}

impl Session {
    pub fn new(
        session_id: String,
        query: NormalizedQuery,
        candidates: Vec<ConceptCandidate>,
    ) -> Self {
        Session {
            session_id,
            query,
            candidates,
            confirmed: Vec::new(),
            feedback: None,
            history: Vec::new(),
            judgments: BTreeMap::new(),
            last_used: Instant::now(),
        }
    }
}

pub type SessionHandle = Arc<Mutex<Session>>;

#[derive(Debug, PartialEq, Eq)]
pub enum Access {
    Missing,
    /// Another request is modifying the session.
    Busy,
}

pub struct SessionStore {
    ttl: Duration,
    sessions: Mutex<HashMap<String, SessionHandle>>,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        SessionStore {
            ttl,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn insert(&self, session: Session) -> SessionHandle {
        let id = session.session_id.clone();
        let handle = Arc::new(Mutex::new(session));
        self.sessions.lock().insert(id, handle.clone());
        handle
    }

    fn handle(&self, id: &str) -> Option<SessionHandle> {
        let sessions = self.sessions.lock();
        sessions.get(id).cloned()
    }

    /// Waits for the session; used by readers.
    pub fn read(&self, id: &str) -> Result<SessionHandle, Access> {
        let handle = self.handle(id).ok_or(Access::Missing)?;
        if self.expired(&handle.lock()) {
            self.remove(id);
            return Err(Access::Missing);
        }
        Ok(handle)
    }

    /// Exclusive access without waiting. A second concurrent writer gets `Busy`.
    pub fn write(&self, id: &str) -> Result<WriteGuard, Access> {
        let handle = self.handle(id).ok_or(Access::Missing)?;
        let Some(mut guard) = handle.try_lock_arc() else {
            return Err(Access::Busy);
        };
        if self.expired(&guard) {
            drop(guard);
            self.remove(id);
            return Err(Access::Missing);
        }
        guard.last_used = Instant::now();
        Ok(WriteGuard(guard))
    }

    fn expired(&self, s: &Session) -> bool {
        s.last_used.elapsed() > self.ttl
    }

    fn remove(&self, id: &str) {
        self.sessions.lock().remove(id);
    }

    /// Drops idle sessions; returns how many were removed. Sessions being
    /// written to are skipped.
    pub fn evict_expired(&self) -> usize {
        let mut sessions = self.sessions.lock();
        let before = sessions.len();
        sessions.retain(|_, h| h.try_lock().is_none_or(|s| !self.expired(&s)));
        before - sessions.len()
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct WriteGuard(parking_lot::ArcMutexGuard<parking_lot::RawMutex, Session>);

impl std::ops::Deref for WriteGuard {
    type Target = Session;
    fn deref(&self) -> &Session {
        &self.0
    }
}

impl std::ops::DerefMut for WriteGuard {
    fn deref_mut(&mut self) -> &mut Session {
        &mut self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vidsem_core::query::normalize;
    use vidsem_core::Stopwords;

    fn session(id: &str) -> Session {
        let q = normalize("news", None, &Stopwords::bundled()).unwrap();
        Session::new(id.into(), q, vec![])
    }

    #[test]
    fn second_writer_is_busy() {
        let store = SessionStore::new(Duration::from_secs(60));
        store.insert(session("a"));
        let first = store.write("a").unwrap();
        assert_eq!(store.write("a").err(), Some(Access::Busy));
        drop(first);
        assert!(store.write("a").is_ok());
        assert_eq!(store.write("zz").err(), Some(Access::Missing));
    }

    #[test]
    fn idle_sessions_expire() {
        let store = SessionStore::new(Duration::from_millis(30));
        store.insert(session("a"));
        store.insert(session("b"));
        std::thread::sleep(Duration::from_millis(60));
        store.write("b").map(drop).unwrap_err();
        assert_eq!(store.len(), 1);
        assert_eq!(store.evict_expired(), 1);
        assert!(store.is_empty());
    }

    #[test]
    fn use_refreshes_ttl() {
        let store = SessionStore::new(Duration::from_millis(80));
        store.insert(session("a"));
        for _ in 0..4 {
            std::thread::sleep(Duration::from_millis(30));
            drop(store.write("a").unwrap());
        }
        assert_eq!(store.evict_expired(), 0);
    }
}
