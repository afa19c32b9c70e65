use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::error::{Result, ServiceError};

/// Exclusive per-project leases: acquire-or-fail, released on drop, and
/// reclaimable once expired so a stuck holder cannot block a project forever.
#[derive(Debug)]
pub struct LeaseTable {
    ttl: Duration,
    held: Mutex<HashMap<String, (u64, Instant)>>,
    next: AtomicU64,
}

#[derive(Debug)]
pub struct Lease<'a> {
    table: &'a LeaseTable,
    project: String,
    token: u64,
}

impl LeaseTable {
    pub fn new(ttl: Duration) -> LeaseTable {
        LeaseTable {
            ttl,
            held: Mutex::new(HashMap::new()),
            next: AtomicU64::new(1),
        }
    }

    pub fn acquire(&self, project: &str) -> Result<Lease<'_>> {
        let mut held = self.held.lock().expect("lease table poisoned");
        let now = Instant::now();
        if let Some((_, expires)) = held.get(project) {
            if *expires > now {
                return Err(ServiceError::ProjectBusy(project.to_string()));
            }
            tracing::warn!(project, "reclaiming expired lease");
        }
        let token = self.next.fetch_add(1, Ordering::Relaxed);
        held.insert(project.to_string(), (token, now + self.ttl));
        Ok(Lease {
            table: self,
            project: project.to_string(),
            token,
        })
    }

    pub fn is_held(&self, project: &str) -> bool {
        let held = self.held.lock().expect("lease table poisoned");
        held.get(project).is_some_and(|(_, e)| *e > Instant::now())
    }
}

impl Drop for Lease<'_> {
    fn drop(&mut self) {
        let mut held = self.table.held.lock().expect("lease table poisoned");
        // an expired lease may have been taken over; leave the new holder alone
        if held.get(&self.project).is_some_and(|(t, _)| *t == self.token) {
            held.remove(&self.project);
        }
    }
}
