//! Framed request/response protocol of the data-tier endpoint.
//!
//! Every message is a frame: a 4-byte big-endian body length followed by
//! the body. Request bodies:
//!
//! ```text
//! PUT <segment> <key> <len:u32be><value bytes>
//! GET <segment> <key>
//! SEARCH <segment> <criteria JSON>
//! KEYS <segment>
//! PING
//! ```
//!
//! Fields are separated by a single 0x20 byte. Response bodies are either
//! `OK` optionally followed by 0x20 and a payload, or
//! `ERR <CODE> <message>`. Payloads: PUT returns record metadata as JSON,
//! GET the raw value, SEARCH and KEYS a JSON array of keys, PING nothing.

use std::io::{self, Read, Write};

/// Largest accepted frame body.
pub const MAX_FRAME: u32 = 64 << 20;

pub fn write_frame<W: Write>(w: &mut W, body: &[u8]) -> io::Result<()> {
    let len = u32::try_from(body.len())
        .ok()
        .filter(|&n| n <= MAX_FRAME)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(body)?;
    w.flush()
}

/// Read one frame; `None` on a clean end of stream before the header.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut header = [0u8; 4];
    match r.read_exact(&mut header) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(header);
    if len > MAX_FRAME {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "frame too large"));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body)?;
    Ok(Some(body))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Put {
        segment: String,
        key: String,
        value: Vec<u8>,
    },
    Get {
        segment: String,
        key: String,
    },
    Search {
        segment: String,
        criteria: Vec<u8>,
    },
    Keys {
        segment: String,
    },
    Ping,
}

fn take_field<'a>(body: &'a [u8], what: &str) -> Result<(&'a str, &'a [u8]), String> {
    let end = body.iter().position(|&b| b == b' ').unwrap_or(body.len());
    let field = std::str::from_utf8(&body[..end]).map_err(|_| format!("{what} is not UTF-8"))?;
    if field.is_empty() {
        return Err(format!("missing {what}"));
    }
    let rest = if end < body.len() { &body[end + 1..] } else { &[][..] };
    Ok((field, rest))
}

fn no_trailer(rest: &[u8]) -> Result<(), String> {
    if rest.is_empty() {
        Ok(())
    } else {
        Err("unexpected trailing bytes".into())
    }
}

impl Request {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Request::Put { segment, key, value } => {
                out.extend_from_slice(format!("PUT {segment} {key} ").as_bytes());
                out.extend_from_slice(&(value.len() as u32).to_be_bytes());
                out.extend_from_slice(value);
            }
            Request::Get { segment, key } => {
                out.extend_from_slice(format!("GET {segment} {key}").as_bytes())
            }
            Request::Search { segment, criteria } => {
                out.extend_from_slice(format!("SEARCH {segment} ").as_bytes());
                out.extend_from_slice(criteria);
            }
            Request::Keys { segment } => out.extend_from_slice(format!("KEYS {segment}").as_bytes()),
            Request::Ping => out.extend_from_slice(b"PING"),
        }
        out
    }

    pub fn decode(body: &[u8]) -> Result<Request, String> {
        let (verb, rest) = take_field(body, "verb")?;
        match verb {
            "PUT" => {
                let (segment, rest) = take_field(rest, "segment")?;
                let (key, rest) = take_field(rest, "key")?;
                if rest.len() < 4 {
                    return Err("missing value length".into());
                }
                let len = u32::from_be_bytes([rest[0], rest[1], rest[2], rest[3]]) as usize;
                let value = &rest[4..];
                if value.len() != len {
                    return Err(format!("value length {len} but {} bytes follow", value.len()));
                }
                Ok(Request::Put {
                    segment: segment.into(),
                    key: key.into(),
                    value: value.to_vec(),
                })
            }
            "GET" => {
                let (segment, rest) = take_field(rest, "segment")?;
                let (key, rest) = take_field(rest, "key")?;
                no_trailer(rest)?;
                Ok(Request::Get {
                    segment: segment.into(),
                    key: key.into(),
                })
            }
            "SEARCH" => {
                let (segment, rest) = take_field(rest, "segment")?;
                Ok(Request::Search {
                    segment: segment.into(),
                    criteria: rest.to_vec(),
                })
            }
            "KEYS" => {
                let (segment, rest) = take_field(rest, "segment")?;
                no_trailer(rest)?;
                Ok(Request::Keys {
                    segment: segment.into(),
                })
            }
            "PING" => {
                no_trailer(rest)?;
                Ok(Request::Ping)
            }
            other => Err(format!("unknown verb {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Ok(Vec<u8>),
    Err { code: String, message: String },
}

impl Response {
    pub fn encode(&self) -> Vec<u8> {
        match self {
            Response::Ok(payload) if payload.is_empty() => b"OK".to_vec(),
            Response::Ok(payload) => {
                let mut out = b"OK ".to_vec();
                out.extend_from_slice(payload);
                out
            }
            Response::Err { code, message } => format!("ERR {code} {message}").into_bytes(),
        }
    }

    pub fn decode(body: &[u8]) -> Result<Response, String> {
        if body == b"OK" {
            return Ok(Response::Ok(Vec::new()));
        }
        if let Some(payload) = body.strip_prefix(b"OK ") {
            return Ok(Response::Ok(payload.to_vec()));
        }
        if let Some(rest) = body.strip_prefix(b"ERR ") {
            let (code, message) = take_field(rest, "error code")?;
            return Ok(Response::Err {
                code: code.to_string(),
                message: String::from_utf8_lossy(message).into_owned(),
            });
        }
        Err("response is neither OK nor ERR".into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn put_layout_is_exact() {
        let r = Request::Put {
            segment: "documents".into(),
            key: "d1".into(),
            value: b"xyz".to_vec(),
        };
        assert_eq!(r.encode(), b"PUT documents d1 \x00\x00\x00\x03xyz".to_vec());
        let mut framed = Vec::new();
        write_frame(&mut framed, &r.encode()).unwrap();
        assert_eq!(&framed[..4], &[0, 0, 0, 24]);
    }

    #[test]
    fn error_response_layout() {
        let e = Response::Err {
            code: "NOT_FOUND".into(),
            message: "projects/missing".into(),
        };
        assert_eq!(e.encode(), b"ERR NOT_FOUND projects/missing".to_vec());
        assert_eq!(Response::decode(&e.encode()).unwrap(), e);
    }

    #[test]
    fn malformed_requests() {
        assert!(Request::decode(b"").is_err());
        assert!(Request::decode(b"DELETE documents d1").is_err());
        assert!(Request::decode(b"GET documents").is_err());
        assert!(Request::decode(b"PUT documents d1 \x00\x00\x00\x05ab").is_err());
    }

    #[test]
    fn clean_eof_reads_none() {
        let mut empty: &[u8] = &[];
        assert!(read_frame(&mut empty).unwrap().is_none());
        let mut short: &[u8] = &[0, 0, 0, 9, 1];
        assert!(read_frame(&mut short).is_err());
    }

    proptest! {
        #[test]
        fn request_roundtrip(seg in "[a-z]{1,12}", key in "[A-Za-z0-9._:@-]{1,40}",
                             value in proptest::collection::vec(any::<u8>(), 0..512)) {
            for r in [
                Request::Put { segment: seg.clone(), key: key.clone(), value: value.clone() },
                Request::Get { segment: seg.clone(), key: key.clone() },
                Request::Search { segment: seg.clone(), criteria: value.clone() },
                Request::Keys { segment: seg.clone() },
            ] {
                let mut framed = Vec::new();
                write_frame(&mut framed, &r.encode()).unwrap();
                let body = read_frame(&mut framed.as_slice()).unwrap().unwrap();
                prop_assert_eq!(Request::decode(&body).unwrap(), r);
            }
        }

        #[test]
        fn ok_response_roundtrip(payload in proptest::collection::vec(any::<u8>(), 0..512)) {
            let r = Response::Ok(payload);
            prop_assert_eq!(Response::decode(&r.encode()).unwrap(), r);
        }
    }
}
