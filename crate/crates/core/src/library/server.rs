use std::io::{BufReader, BufWriter};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use super::search::parse_criteria;
use super::wire::{read_frame, write_frame, Request, Response};
use super::{LibraryError, Result, Segment, Store};

/// A running data-tier endpoint. Dropping the handle stops accepting new
/// connections; connections already open finish their current request.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_accepting();
    }

    fn stop_accepting(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept()
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    /// Block until the accept loop ends.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop_accepting();
        }
    }
}

/// Serve `store` over the framed wire protocol, one thread per connection.
pub fn serve<A: ToSocketAddrs>(addr: A, store: Arc<dyn Store>) -> Result<ServerHandle> {
    let listener = TcpListener::bind(addr).map_err(|e| LibraryError::BindFailure(e.to_string()))?;
    let local = listener
        .local_addr()
        .map_err(|e| LibraryError::BindFailure(e.to_string()))?;
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = Arc::clone(&stop);
    let accept = std::thread::Builder::new()
        .name("icon-libd-accept".into())
        .spawn(move || {
            for conn in listener.incoming() {
                if stop_flag.load(Ordering::SeqCst) {
                    break;
                }
                match conn {
                    Ok(stream) => {
                        let store = Arc::clone(&store);
                        let _ = std::thread::Builder::new()
                            .name("icon-libd-conn".into())
                            .spawn(move || {
                                if let Err(e) = handle_connection(stream, store.as_ref()) {
                                    tracing::debug!(error = %e, "connection closed");
                                }
                            });
                    }
                    Err(e) => tracing::warn!(error = %e, "accept failed"),
                }
            }
        })
        .map_err(|e| LibraryError::BindFailure(e.to_string()))?;
    tracing::info!(addr = %local, "library endpoint listening");
    Ok(ServerHandle {
        addr: local,
        stop,
        accept: Some(accept),
    })
}

fn handle_connection(stream: TcpStream, store: &dyn Store) -> std::io::Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    while let Some(body) = read_frame(&mut reader)? {
        let response = match Request::decode(&body) {
            Ok(req) => dispatch(store, req),
            Err(msg) => Response::Err {
                code: "PROTOCOL_ERROR".into(),
                message: msg,
            },
        };
        write_frame(&mut writer, &response.encode())?;
    }
    Ok(())
}

fn to_response(r: Result<Vec<u8>>) -> Response {
    match r {
        Ok(payload) => Response::Ok(payload),
        Err(e) => Response::Err {
            code: e.code().to_string(),
            message: e.to_string(),
        },
    }
}

fn keys_json(keys: Vec<String>) -> Vec<u8> {
    serde_json::to_vec(&keys).expect("string list serializes")
}

pub(super) fn dispatch(store: &dyn Store, req: Request) -> Response {
    to_response((|| match req {
        Request::Ping => Ok(Vec::new()),
        Request::Put { segment, key, value } => {
            let meta = store.put(segment.parse::<Segment>()?, &key, &value)?;
            Ok(serde_json::to_vec(&meta).expect("metadata serializes"))
        }
        Request::Get { segment, key } => store.get(segment.parse()?, &key),
        Request::Search { segment, criteria } => {
            let segment: Segment = segment.parse()?;
            let criteria = parse_criteria(&criteria)?;
            Ok(keys_json(store.search(segment, &criteria)?))
        }
        Request::Keys { segment } => Ok(keys_json(store.keys(segment.parse()?)?)),
    })())
}
