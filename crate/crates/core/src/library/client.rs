use std::io::{BufReader, BufWriter};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::Mutex;
use std::time::Duration;

use super::search::Criterion;
use super::wire::{read_frame, write_frame, Request, Response};
use super::{LibraryError, RecordMeta, Result, Segment, Store};

struct Conn {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

/// [`Store`] backed by a remote data-tier endpoint.
pub struct RemoteStore {
    addr: SocketAddr,
    idle: Mutex<Vec<Conn>>,
    timeout: Duration,
}

impl RemoteStore {
    /// Connect and ping once so that a dead endpoint fails early.
    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        let addr = addr
            .to_socket_addrs()
            .map_err(LibraryError::storage)?
            .next()
            .ok_or_else(|| LibraryError::StorageUnavailable("address did not resolve".into()))?;
        let store = RemoteStore {
            addr,
            idle: Mutex::new(Vec::new()),
            timeout: Duration::from_secs(30),
        };
        store.ping()?;
        Ok(store)
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn ping(&self) -> Result<()> {
        self.call(Request::Ping, None).map(|_| ())
    }

    fn open(&self) -> Result<Conn> {
        let stream = TcpStream::connect_timeout(&self.addr, self.timeout).map_err(LibraryError::storage)?;
        stream.set_nodelay(true).map_err(LibraryError::storage)?;
        stream
            .set_read_timeout(Some(self.timeout))
            .map_err(LibraryError::storage)?;
        Ok(Conn {
            reader: BufReader::new(stream.try_clone().map_err(LibraryError::storage)?),
            writer: BufWriter::new(stream),
        })
    }

    fn roundtrip(conn: &mut Conn, body: &[u8]) -> std::io::Result<Option<Vec<u8>>> {
        write_frame(&mut conn.writer, body)?;
        read_frame(&mut conn.reader)
    }

    fn call(&self, req: Request, target: Option<(Segment, &str)>) -> Result<Vec<u8>> {
        let body = req.encode();
        let pooled = self.idle.lock().expect("pool poisoned").pop();
        let mut conn = match pooled {
            Some(c) => c,
            None => self.open()?,
        };
        let reply = match Self::roundtrip(&mut conn, &body) {
            Ok(Some(reply)) => reply,
            // a pooled connection may have gone stale; retry once on a fresh one
            _ => {
                conn = self.open()?;
                Self::roundtrip(&mut conn, &body)
                    .map_err(LibraryError::storage)?
                    .ok_or_else(|| LibraryError::StorageUnavailable("connection closed".into()))?
            }
        };
        self.idle.lock().expect("pool poisoned").push(conn);
        match Response::decode(&reply).map_err(LibraryError::Protocol)? {
            Response::Ok(payload) => Ok(payload),
            Response::Err { code, message } => Err(remote_error(&code, message, target)),
        }
    }
}

fn remote_error(code: &str, message: String, target: Option<(Segment, &str)>) -> LibraryError {
    match (code, target) {
        ("NOT_FOUND", Some((segment, key))) => LibraryError::NotFound {
            segment,
            key: key.to_string(),
        },
        ("SCHEMA_VIOLATION", Some((segment, _))) => LibraryError::SchemaViolation {
            segment,
            reason: message,
        },
        ("UNKNOWN_SEGMENT", _) => LibraryError::UnknownSegment(message),
        ("INVALID_QUERY", _) => LibraryError::InvalidQuery(message),
        ("INVALID_KEY", Some((_, key))) => LibraryError::InvalidKey(key.to_string()),
        ("STORAGE_UNAVAILABLE", _) => LibraryError::StorageUnavailable(message),
        _ => LibraryError::Protocol(format!("{code}: {message}")),
    }
}

fn parse_keys(bytes: &[u8]) -> Result<Vec<String>> {
    serde_json::from_slice(bytes).map_err(|e| LibraryError::Protocol(e.to_string()))
}

impl Store for RemoteStore {
    fn put(&self, segment: Segment, key: &str, value: &[u8]) -> Result<RecordMeta> {
        let payload = self.call(
            Request::Put {
                segment: segment.to_string(),
                key: key.to_string(),
                value: value.to_vec(),
            },
            Some((segment, key)),
        )?;
        serde_json::from_slice(&payload).map_err(|e| LibraryError::Protocol(e.to_string()))
    }

    fn get(&self, segment: Segment, key: &str) -> Result<Vec<u8>> {
        self.call(
            Request::Get {
                segment: segment.to_string(),
                key: key.to_string(),
            },
            Some((segment, key)),
        )
    }

    fn search(&self, segment: Segment, criteria: &[Criterion]) -> Result<Vec<String>> {
        let doc = serde_json::to_vec(criteria).map_err(|e| LibraryError::InvalidQuery(e.to_string()))?;
        parse_keys(&self.call(
            Request::Search {
                segment: segment.to_string(),
                criteria: doc,
            },
            None,
        )?)
    }

    fn keys(&self, segment: Segment) -> Result<Vec<String>> {
        parse_keys(&self.call(
            Request::Keys {
                segment: segment.to_string(),
            },
            None,
        )?)
    }
}
