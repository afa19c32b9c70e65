use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Mutex;

use super::backend::Backend;
use super::{LibraryError, Result, Segment, StoredRecord};

/// A RESP2 reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Reply {
    Simple(String),
    Error(String),
    Integer(i64),
    Bulk(Option<Vec<u8>>),
    Array(Option<Vec<Reply>>),
}

pub(crate) fn encode_command(args: &[&[u8]]) -> Vec<u8> {
    let mut out = format!("*{}\r\n", args.len()).into_bytes();
    for a in args {
        out.extend_from_slice(format!("${}\r\n", a.len()).as_bytes());
        out.extend_from_slice(a);
        out.extend_from_slice(b"\r\n");
    }
    out
}

pub(crate) fn read_reply<R: BufRead>(r: &mut R) -> std::io::Result<Reply> {
    let bad = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string());
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.len() < 3 || !line.ends_with(b"\r\n") {
        return Err(bad("truncated RESP line"));
    }
    let text = std::str::from_utf8(&line[1..line.len() - 2]).map_err(|_| bad("non-UTF-8 header"))?;
    let int = || text.parse::<i64>().map_err(|_| bad("bad RESP length"));
    Ok(match line[0] {
        b'+' => Reply::Simple(text.to_string()),
        b'-' => Reply::Error(text.to_string()),
        b':' => Reply::Integer(int()?),
        b'$' => {
            let n = int()?;
            if n < 0 {
                Reply::Bulk(None)
            } else {
                let mut buf = vec![0u8; n as usize + 2];
                r.read_exact(&mut buf)?;
                buf.truncate(n as usize);
                Reply::Bulk(Some(buf))
            }
        }
        b'*' => {
            let n = int()?;
            if n < 0 {
                Reply::Array(None)
            } else {
                let items = (0..n).map(|_| read_reply(r)).collect::<std::io::Result<_>>()?;
                Reply::Array(Some(items))
            }
        }
        _ => return Err(bad("unknown RESP type")),
    })
}

struct Conn {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

/// Records stored in an external Redis server under `icon:<segment>:<key>`,
/// each value being the JSON-encoded [`StoredRecord`].
pub struct RedisBackend {
    conn: Mutex<Conn>,
    prefix: String,
}

impl RedisBackend {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        let stream = TcpStream::connect(addr).map_err(LibraryError::storage)?;
        stream.set_nodelay(true).map_err(LibraryError::storage)?;
        let backend = RedisBackend {
            conn: Mutex::new(Conn {
                reader: BufReader::new(stream.try_clone().map_err(LibraryError::storage)?),
                writer: BufWriter::new(stream),
            }),
            prefix: "icon".into(),
        };
        match backend.command(&[b"PING"])? {
            Reply::Simple(s) if s == "PONG" => Ok(backend),
            other => Err(LibraryError::StorageUnavailable(format!(
                "unexpected PING reply {other:?}"
            ))),
        }
    }

    pub fn redis_key(&self, segment: Segment, key: &str) -> String {
        format!("{}:{}:{}", self.prefix, segment, key)
    }

    fn command_locked(conn: &mut Conn, args: &[&[u8]]) -> Result<Reply> {
        conn.writer
            .write_all(&encode_command(args))
            .and_then(|_| conn.writer.flush())
            .map_err(LibraryError::storage)?;
        match read_reply(&mut conn.reader).map_err(LibraryError::storage)? {
            Reply::Error(e) => Err(LibraryError::StorageUnavailable(e)),
            r => Ok(r),
        }
    }

    fn command(&self, args: &[&[u8]]) -> Result<Reply> {
        let mut conn = self.conn.lock().expect("redis connection poisoned");
        Self::command_locked(&mut conn, args)
    }

    fn decode(bytes: &[u8]) -> Result<StoredRecord> {
        serde_json::from_slice(bytes).map_err(LibraryError::storage)
    }
}

impl Backend for RedisBackend {
    fn put(&self, segment: Segment, key: &str, value: &[u8]) -> Result<StoredRecord> {
        let rkey = self.redis_key(segment, key);
        let mut conn = self.conn.lock().expect("redis connection poisoned");
        let previous = match Self::command_locked(&mut conn, &[b"GET", rkey.as_bytes()])? {
            Reply::Bulk(Some(b)) => Some(Self::decode(&b)?),
            _ => None,
        };
        let rec = StoredRecord::new(segment, key, value, previous.as_ref());
        let json = serde_json::to_vec(&rec).map_err(LibraryError::storage)?;
        Self::command_locked(&mut conn, &[b"SET", rkey.as_bytes(), &json])?;
        Ok(rec)
    }

    fn get(&self, segment: Segment, key: &str) -> Result<Option<StoredRecord>> {
        let rkey = self.redis_key(segment, key);
        match self.command(&[b"GET", rkey.as_bytes()])? {
            Reply::Bulk(Some(b)) => Self::decode(&b).map(Some),
            Reply::Bulk(None) => Ok(None),
            other => Err(LibraryError::StorageUnavailable(format!(
                "unexpected GET reply {other:?}"
            ))),
        }
    }

    fn keys(&self, segment: Segment) -> Result<Vec<String>> {
        let prefix = self.redis_key(segment, "");
        let pattern = format!("{prefix}*");
        let mut cursor = "0".to_string();
        let mut keys = Vec::new();
        loop {
            let reply = self.command(&[
                b"SCAN",
                cursor.as_bytes(),
                b"MATCH",
                pattern.as_bytes(),
                b"COUNT",
                b"500",
            ])?;
            let Reply::Array(Some(parts)) = reply else {
                return Err(LibraryError::StorageUnavailable("bad SCAN reply".into()));
            };
            let [Reply::Bulk(Some(next)), Reply::Array(Some(batch))] = parts.as_slice() else {
                return Err(LibraryError::StorageUnavailable("bad SCAN reply".into()));
            };
            for k in batch {
                if let Reply::Bulk(Some(k)) = k {
                    if let Some(rest) = String::from_utf8_lossy(k).strip_prefix(&prefix) {
                        keys.push(rest.to_string());
                    }
                }
            }
            cursor = String::from_utf8_lossy(next).into_owned();
            if cursor == "0" {
                break;
            }
        }
        keys.sort();
        keys.dedup();
        Ok(keys)
    }
}
