//! Frame streaming service.
//!
//! The scan clock runs on its own thread and owns the [`LiveSim`]. Clients
//! talk to it over WebSocket: their messages are funnelled through a single
//! command queue, and every tick is published on a broadcast channel. A
//! subscriber that falls behind loses its oldest messages; the scan clock
//! never waits for anyone.

use crate::live::LiveSim;
use crate::protocol::{ClientCommand, ClientMessage, RobotKind, ServerCommand, ServerMessage};
use crate::wire::encode_frame;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::mpsc as std_mpsc;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};
use tokio::sync::{broadcast, oneshot};
use tower_http::services::ServeDir;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub preset: String,
    pub robot: Option<RobotKind>,
    /// Simulated seconds per wall-clock second.
    pub time_scale: f64,
    /// Messages kept per subscriber before the oldest are dropped.
    pub channel_capacity: usize,
    pub static_dir: Option<PathBuf>,
}

impl ServeOptions {
    pub fn new(preset: &str) -> Self {
        Self {
            preset: preset.to_string(),
            robot: None,
            time_scale: 1.0,
            channel_capacity: 64,
            static_dir: None,
        }
    }
}

/// Everything published for one scan tick, pre-serialized once for all
/// subscribers.
#[derive(Debug)]
pub enum Published {
    Tick {
        seq: u64,
        frame_json: String,
        frame_wire: Vec<u8>,
        robot_json: Option<String>,
    },
    Session(String),
}

struct Request {
    msg: ClientMessage,
    reply: oneshot::Sender<Option<ServerMessage>>,
}

enum Control {
    Request(Request),
    Stop,
}

/// Shared entry points into a running simulation.
#[derive(Clone)]
pub struct SimHandle {
    commands: std_mpsc::Sender<Control>,
    published: broadcast::Sender<Arc<Published>>,
    session: Arc<Mutex<String>>,
    ticks: Arc<Mutex<u64>>,
}

impl SimHandle {
    pub fn subscribe(&self) -> broadcast::Receiver<Arc<Published>> {
        self.published.subscribe()
    }

    pub fn session_json(&self) -> String {
        self.session.lock().unwrap().clone()
    }

    pub fn ticks(&self) -> u64 {
        *self.ticks.lock().unwrap()
    }

    /// Queues a message for the scan thread; resolves to an error reply if
    /// the message was rejected.
    pub async fn send(&self, msg: ClientMessage) -> Option<ServerMessage> {
        let (reply, rx) = oneshot::channel();
        if self.commands.send(Control::Request(Request { msg, reply })).is_err() {
            return Some(error_message("simulation stopped"));
        }
        rx.await.unwrap_or_else(|_| Some(error_message("simulation stopped")))
    }

    pub fn stop(&self) {
        let _ = self.commands.send(Control::Stop);
    }
}

fn error_message(text: impl Into<String>) -> ServerMessage {
    ServerMessage::Command(ServerCommand::Error { message: text.into() })
}

/// Starts the scan thread.
pub fn spawn_simulation(options: &ServeOptions) -> anyhow::Result<(SimHandle, JoinHandle<()>)> {
    let sim = LiveSim::new(&options.preset, options.robot)?;
    let (tx, rx) = std_mpsc::channel();
    let (published, _) = broadcast::channel(options.channel_capacity.max(1));
    let handle = SimHandle {
        commands: tx,
        published: published.clone(),
        session: Arc::new(Mutex::new(sim.session_message().to_json())),
        ticks: Arc::new(Mutex::new(0)),
    };
    let time_scale = options.time_scale;
    let shared = handle.clone();
    let thread = std::thread::Builder::new()
        .name("scan-clock".into())
        .spawn(move || scan_loop(sim, rx, shared, time_scale))?;
    Ok((handle, thread))
}

fn scan_loop(mut sim: LiveSim, rx: std_mpsc::Receiver<Control>, handle: SimHandle, time_scale: f64) {
    let period = |sim: &LiveSim| Duration::from_secs_f64(sim.frame_period_us() * 1e-6 / time_scale);
    let mut next = Instant::now();
    loop {
        let now = Instant::now();
        if now >= next {
            match sim.step() {
                Ok(tick) => {
                    let published = Published::Tick {
                        seq: tick.frame_message.seq,
                        frame_json: ServerMessage::Frame(tick.frame_message).to_json(),
                        frame_wire: encode_frame(&tick.frame).unwrap_or_default(),
                        robot_json: tick.robot_message.map(|m| ServerMessage::RobotState(m).to_json()),
                    };
                    // No receivers is fine; lagging receivers drop their oldest.
                    let _ = handle.published.send(Arc::new(published));
                    *handle.ticks.lock().unwrap() += 1;
                }
                Err(e) => tracing::error!("scan failed: {e}"),
            }
            next += period(&sim);
            if next < now {
                // Behind schedule: skip missed ticks instead of bursting.
                next = now + period(&sim);
            }
            continue;
        }
        match rx.recv_timeout(next - now) {
            Ok(Control::Request(req)) => {
                let reply = match sim.apply(req.msg) {
                    Ok(changed) => {
                        if changed {
                            let session = sim.session_message().to_json();
                            *handle.session.lock().unwrap() = session.clone();
                            let _ = handle.published.send(Arc::new(Published::Session(session)));
                            next = Instant::now();
                        }
                        None
                    }
                    Err(e) => Some(error_message(e.to_string())),
                };
                let _ = req.reply.send(reply);
            }
            Ok(Control::Stop) | Err(std_mpsc::RecvTimeoutError::Disconnected) => break,
            Err(std_mpsc::RecvTimeoutError::Timeout) => {}
        }
    }
}

pub fn router(handle: SimHandle, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(ws_upgrade)).with_state(handle);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(handle): State<SimHandle>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client_session(socket, handle))
}

async fn client_session(socket: WebSocket, handle: SimHandle) {
    let mut updates = handle.subscribe();
    let (mut sink, mut stream) = socket.split();
    if sink.send(Message::Text(handle.session_json().into())).await.is_err() {
        return;
    }
    let mut binary = false;
    loop {
        tokio::select! {
            update = updates.recv() => {
                let out = match update {
                    Ok(p) => match &*p {
                        Published::Tick { frame_json, frame_wire, robot_json, .. } => {
                            let mut msgs = vec![if binary {
                                Message::Binary(frame_wire.clone().into())
                            } else {
                                Message::Text(frame_json.clone().into())
                            }];
                            msgs.extend(robot_json.iter().map(|r| Message::Text(r.clone().into())));
                            msgs
                        }
                        Published::Session(s) => vec![Message::Text(s.clone().into())],
                    },
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        tracing::debug!("subscriber lagged, dropped {n} messages");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                };
                for m in out {
                    if sink.send(m).await.is_err() {
                        return;
                    }
                }
            }
            incoming = stream.next() => {
                let Some(Ok(msg)) = incoming else { break };
                let text = match msg {
                    Message::Text(t) => t.to_string(),
                    Message::Close(_) => break,
                    _ => continue,
                };
                let reply = match serde_json::from_str::<ClientMessage>(&text) {
                    Ok(ClientMessage::Command(ClientCommand::SetStream { binary: b })) => {
                        binary = b;
                        None
                    }
                    Ok(msg) => handle.send(msg).await,
                    Err(e) => Some(error_message(format!("bad message: {e}"))),
                };
                if let Some(r) = reply {
                    if sink.send(Message::Text(r.to_json().into())).await.is_err() {
                        return;
                    }
                }
            }
        }
    }
}

/// Runs the service until the listener fails.
pub async fn serve(options: ServeOptions, addr: SocketAddr) -> anyhow::Result<()> {
    let (handle, _thread) = spawn_simulation(&options)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on ws://{}/ws", listener.local_addr()?);
    let result = axum::serve(listener, router(handle.clone(), options.static_dir.clone())).await;
    handle.stop();
    Ok(result?)
}
