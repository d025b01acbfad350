use std::collections::VecDeque;
use std::io::{self, ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::{Message, WebSocket};

use crate::sim::{SimError, Trace};

use super::protocol::{ClientMessage, ServerMessage};
use super::session::LiveSession;

/// Longest accepted client line; longer input is discarded with an error.
const MAX_LINE: usize = 64 * 1024;
const POLL: Duration = Duration::from_millis(10);
const SNIFF_TIMEOUT: Duration = Duration::from_millis(200);

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("port busy: {0}")]
    PortBusy(io::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Wall-clock period of one simulation tick.
    pub tick_period: Duration,
    /// Messages buffered per client before old state snapshots are dropped.
    pub outbox_limit: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            tick_period: Duration::from_millis(50),
            outbox_limit: 256,
        }
    }
}

/// Per-client queue of outgoing lines. A slow client loses its oldest state
/// snapshots first.
struct Outbox {
    queue: Mutex<(VecDeque<String>, bool)>,
    ready: Condvar,
    limit: usize,
}

impl Outbox {
    fn new(limit: usize) -> Self {
        Self {
            queue: Mutex::new((VecDeque::new(), false)),
            ready: Condvar::new(),
            limit: limit.max(1),
        }
    }

    fn push(&self, line: String) {
        let mut q = self.queue.lock().expect("outbox lock");
        if q.0.len() >= self.limit {
            let victim = q
                .0
                .iter()
                .position(|l| l.starts_with("{\"type\":\"state\""))
                .unwrap_or(0);
            q.0.remove(victim);
        }
        q.0.push_back(line);
        self.ready.notify_one();
    }

    fn close(&self) {
        self.queue.lock().expect("outbox lock").1 = true;
        self.ready.notify_one();
    }

    /// Pending lines and whether the outbox is closed, waiting up to `wait`.
    fn take(&self, wait: Duration) -> (Vec<String>, bool) {
        let q = self.queue.lock().expect("outbox lock");
        let (mut q, _) = self
            .ready
            .wait_timeout_while(q, wait, |q| q.0.is_empty() && !q.1)
            .expect("outbox lock");
        (q.0.drain(..).collect(), q.1)
    }
}

struct Client {
    id: u64,
    outbox: Arc<Outbox>,
    alive: Arc<AtomicBool>,
}

#[derive(Default)]
struct Shared {
    clients: Mutex<Vec<Client>>,
    driver: Mutex<Option<u64>>,
    shutdown: AtomicBool,
    next_id: AtomicU64,
}

impl Shared {
    fn broadcast(&self, line: &str) {
        let mut clients = self.clients.lock().expect("clients lock");
        clients.retain(|c| c.alive.load(Ordering::SeqCst));
        for c in clients.iter() {
            c.outbox.push(line.to_owned());
        }
    }

    /// Make `id` the driver if nobody drives. Returns whether it drives.
    fn claim(&self, id: u64) -> bool {
        let mut d = self.driver.lock().expect("driver lock");
        if d.is_none() {
            *d = Some(id);
        }
        *d == Some(id)
    }

    fn is_driver(&self, id: u64) -> bool {
        *self.driver.lock().expect("driver lock") == Some(id)
    }

    fn release(&self, id: u64) {
        let mut d = self.driver.lock().expect("driver lock");
        if *d == Some(id) {
            *d = None;
        }
    }

    fn has_driver(&self) -> bool {
        self.driver.lock().expect("driver lock").is_some()
    }
}

enum Transport {
    Lines(TcpStream),
    Ws(Box<WebSocket<TcpStream>>),
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut)
}

/// Decide between a WebSocket upgrade and plain lines by peeking at the
/// first bytes. A client that says nothing is treated as a line client.
fn sniff(stream: TcpStream) -> io::Result<Transport> {
    stream.set_read_timeout(Some(SNIFF_TIMEOUT))?;
    let started = Instant::now();
    let mut head = [0u8; 4];
    let mut seen = 0;
    while started.elapsed() < SNIFF_TIMEOUT {
        match stream.peek(&mut head) {
            Ok(0) => break,
            Ok(n) => {
                seen = n;
                if n >= 4 {
                    break;
                }
                thread::sleep(POLL);
            }
            Err(e) if is_timeout(&e) => break,
            Err(e) => return Err(e),
        }
    }
    if seen >= 4 && &head == b"GET " {
        stream.set_read_timeout(None)?;
        let ws = tungstenite::accept(stream).map_err(|e| io::Error::new(ErrorKind::InvalidData, e.to_string()))?;
        ws.get_ref().set_read_timeout(Some(POLL))?;
        Ok(Transport::Ws(Box::new(ws)))
    } else {
        stream.set_read_timeout(Some(POLL))?;
        Ok(Transport::Lines(stream))
    }
}

fn client_loop(mut transport: Transport, id: u64, outbox: Arc<Outbox>, shared: Arc<Shared>, inputs: Sender<ClientMessage>) {
    let mut pending = Vec::new();
    let handle_line = |line: &str, outbox: &Outbox| {
        if line.trim().is_empty() {
            return;
        }
        match ClientMessage::parse(line) {
            Ok(msg) if shared.is_driver(id) => {
                let _ = inputs.send(msg);
            }
            Ok(_) => outbox.push(ServerMessage::error("read-only client: another client is driving").to_line()),
            Err(e) => outbox.push(ServerMessage::error(e).to_line()),
        }
    };
    loop {
        let (lines, closed) = outbox.take(POLL);
        let written: io::Result<()> = lines.iter().try_for_each(|l| match &mut transport {
            Transport::Lines(s) => s.write_all(format!("{l}\n").as_bytes()),
            Transport::Ws(ws) => ws
                .send(Message::text(l.clone()))
                .map_err(|e| io::Error::new(ErrorKind::BrokenPipe, e.to_string())),
        });
        if written.is_err() || (closed && lines.is_empty()) {
            if let Transport::Ws(ws) = &mut transport {
                let _ = ws.close(None);
                let _ = ws.flush();
            }
            break;
        }
        if closed {
            continue;
        }
        let gone = match &mut transport {
            Transport::Lines(s) => {
                let mut buf = [0u8; 4096];
                match s.read(&mut buf) {
                    Ok(0) => true,
                    Ok(n) => {
                        pending.extend_from_slice(&buf[..n]);
                        while let Some(pos) = pending.iter().position(|b| *b == b'\n') {
                            let line: Vec<u8> = pending.drain(..=pos).collect();
                            match std::str::from_utf8(&line) {
                                Ok(text) => handle_line(text, &outbox),
                                Err(_) => outbox.push(ServerMessage::error("line is not UTF-8").to_line()),
                            }
                        }
                        if pending.len() > MAX_LINE {
                            pending.clear();
                            outbox.push(ServerMessage::error("line too long").to_line());
                        }
                        false
                    }
                    Err(e) if is_timeout(&e) => false,
                    Err(_) => true,
                }
            }
            Transport::Ws(ws) => match ws.read() {
                Ok(Message::Text(text)) => {
                    for line in text.as_str().lines() {
                        handle_line(line, &outbox);
                    }
                    false
                }
                Ok(Message::Close(_)) => true,
                Ok(_) => false,
                Err(tungstenite::Error::Io(e)) if is_timeout(&e) => false,
                Err(_) => true,
            },
        };
        if gone {
            break;
        }
    }
    shared.release(id);
    log::info!("client {id} disconnected");
}

/// The live streaming service: one simulation, one driving client, any
/// number of read-only observers.
pub struct Server {
    listener: TcpListener,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs) -> Result<Self, ServeError> {
        let listener = TcpListener::bind(addr).map_err(|e| match e.kind() {
            ErrorKind::AddrInUse | ErrorKind::PermissionDenied => ServeError::PortBusy(e),
            _ => ServeError::Io(e),
        })?;
        Ok(Self { listener })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    fn accept_loop(listener: TcpListener, shared: Arc<Shared>, limit: usize, inputs: Sender<ClientMessage>) -> Vec<JoinHandle<()>> {
        let mut handles = Vec::new();
        while !shared.shutdown.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, peer)) => {
                    let _ = stream.set_nonblocking(false);
                    let _ = stream.set_nodelay(true);
                    let id = shared.next_id.fetch_add(1, Ordering::SeqCst);
                    let outbox = Arc::new(Outbox::new(limit));
                    let alive = Arc::new(AtomicBool::new(true));
                    let (shared2, outbox2, alive2, inputs2) = (shared.clone(), outbox.clone(), alive.clone(), inputs.clone());
                    handles.push(thread::spawn(move || {
                        match sniff(stream) {
                            Ok(transport) => {
                                let driving = shared2.claim(id);
                                log::info!("client {id} from {peer} connected ({})", if driving { "driving" } else { "read-only" });
                                shared2.clients.lock().expect("clients lock").push(Client {
                                    id,
                                    outbox: outbox2.clone(),
                                    alive: alive2.clone(),
                                });
                                if shared2.shutdown.load(Ordering::SeqCst) {
                                    outbox2.close();
                                }
                                client_loop(transport, id, outbox2, shared2.clone(), inputs2);
                            }
                            Err(e) => log::warn!("client {id} from {peer}: {e}"),
                        }
                        alive2.store(false, Ordering::SeqCst);
                        shared2.clients.lock().expect("clients lock").retain(|c| c.id != id);
                    }));
                }
                Err(e) if is_timeout(&e) => thread::sleep(POLL),
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    thread::sleep(POLL);
                }
            }
        }
        handles
    }

    /// Run the session to completion. Ticks only while a driving client is
    /// connected; returns the recorded trace.
    pub fn run(self, mut session: LiveSession, opts: &ServeOptions) -> Result<Trace, ServeError> {
        let shared = Arc::new(Shared::default());
        let (tx, rx): (Sender<ClientMessage>, Receiver<ClientMessage>) = mpsc::channel();
        self.listener.set_nonblocking(true)?;
        let listener = self.listener;
        let acceptor = {
            let shared = shared.clone();
            let limit = opts.outbox_limit;
            thread::spawn(move || Server::accept_loop(listener, shared, limit, tx))
        };

        let mut deadline = Instant::now() + opts.tick_period;
        let mut paused = true;
        let result = loop {
            if shared.has_driver() {
                if paused {
                    log::info!("driver connected, running");
                    paused = false;
                }
                while let Ok(msg) = rx.try_recv() {
                    session.push(msg);
                }
                match session.tick() {
                    Ok(msgs) => {
                        for m in &msgs {
                            shared.broadcast(&m.to_line());
                        }
                    }
                    Err(e) => {
                        shared.broadcast(&ServerMessage::error(e.to_string()).to_line());
                        break Err(ServeError::Sim(e));
                    }
                }
                if session.is_finished() {
                    break Ok(());
                }
            } else {
                if !paused {
                    log::info!("driver disconnected, paused");
                    paused = true;
                }
                // inputs from a departed driver are stale
                while rx.try_recv().is_ok() {}
            }
            let now = Instant::now();
            if deadline > now {
                thread::sleep(deadline - now);
                deadline += opts.tick_period;
            } else {
                deadline = now + opts.tick_period;
            }
        };

        shared.shutdown.store(true, Ordering::SeqCst);
        for c in shared.clients.lock().expect("clients lock").iter() {
            c.outbox.close();
        }
        let handles = acceptor.join().unwrap_or_default();
        // clients that connected after the close above still need closing
        for c in shared.clients.lock().expect("clients lock").iter() {
            c.outbox.close();
        }
        for h in handles {
            let _ = h.join();
        }
        result.map(|()| session.into_trace())
    }
}
