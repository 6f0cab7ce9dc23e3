//! HTTP/WebSocket front end. Each connection gets its own [`Session`] on a
//! dedicated physics thread, fed through an ordered queue. World-state
//! frames go through a small bounded buffer and are dropped when a client
//! reads slowly; every other message is delivered.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc as std_mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use tokio::sync::mpsc;
use tower_http::services::ServeDir;

use decouple_core::experiment::write_trials_csv;
use decouple_core::Result;

use crate::protocol::{ServerMessage, PROTOCOL_VERSION};
use crate::session::{Pacing, Session, SessionConfig};

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub session: SessionConfig,
    /// Static UI assets served at `/`.
    pub assets: Option<PathBuf>,
    /// Where each session's trials are written when it disconnects.
    pub results_dir: Option<PathBuf>,
    /// World-state frames buffered per client before dropping.
    pub frame_buffer: usize,
}

impl ServerConfig {
    pub fn new(session: SessionConfig) -> Self {
        ServerConfig { session, assets: None, results_dir: None, frame_buffer: 8 }
    }
}

struct AppState {
    config: ServerConfig,
    digest: String,
    connections: AtomicU64,
    started: u64,
}

pub fn router(config: ServerConfig) -> Result<Router> {
    config.session.validate()?;
    let assets = config.assets.clone();
    let state = Arc::new(AppState {
        digest: config.session.scenario.digest(),
        config,
        connections: AtomicU64::new(0),
        started: std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    });
    let app = Router::new()
        .route("/ws", get(upgrade))
        .route("/health", get(|| async { "ok" }))
        .route("/protocol", get(protocol_info))
        .with_state(state);
    Ok(match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    })
}

/// Serves until `shutdown` resolves.
pub async fn serve(listener: tokio::net::TcpListener, config: ServerConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<()> {
    let app = router(config)?;
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn run_session(addr: SocketAddr, config: ServerConfig) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    serve(listener, config, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

async fn protocol_info(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    Json(serde_json::json!({
        "protocol_version": PROTOCOL_VERSION,
        "scenario_digest": state.digest,
        "timestep": state.config.session.scenario.world.timestep,
        "stream_rate": state.config.session.stream_rate,
        "pacing": state.config.session.pacing,
    }))
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, state))
}

enum Inbound {
    Text(String),
    Binary,
}

async fn connection(socket: WebSocket, state: Arc<AppState>) {
    let n = state.connections.fetch_add(1, Ordering::Relaxed) + 1;
    let name = format!("session-{}-{n}", state.started);
    let session = match Session::new(state.config.session.clone()) {
        Ok(s) => s,
        Err(e) => {
            log::error!("cannot start session: {e}");
            return;
        }
    };
    log::info!("{name} connected");
    let (mut sink, mut stream) = socket.split();
    let (in_tx, in_rx) = std_mpsc::channel();
    let (ctl_tx, mut ctl_rx) = mpsc::unbounded_channel::<ServerMessage>();
    let (frame_tx, mut frame_rx) = mpsc::channel::<ServerMessage>(state.config.frame_buffer.max(1));

    let results_dir = state.config.results_dir.clone();
    let thread_name = name.clone();
    let physics = std::thread::Builder::new()
        .name(name.clone())
        .spawn(move || {
            let session = physics_loop(session, in_rx, &ctl_tx, &frame_tx);
            if let Some(dir) = results_dir {
                if let Err(e) = persist(&session, &dir, &thread_name) {
                    log::error!("{thread_name}: cannot save results: {e}");
                }
            }
        })
        .expect("spawn physics thread");

    let writer = tokio::spawn(async move {
        loop {
            let msg = tokio::select! {
                biased;
                Some(m) = ctl_rx.recv() => m,
                Some(m) = frame_rx.recv() => m,
                else => break,
            };
            let text = serde_json::to_string(&msg).expect("server messages serialize");
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    while let Some(Ok(msg)) = stream.next().await {
        let item = match msg {
            Message::Text(t) => Inbound::Text(t.as_str().to_owned()),
            Message::Binary(_) => Inbound::Binary,
            Message::Close(_) => break,
            _ => continue,
        };
        if in_tx.send(item).is_err() {
            break;
        }
    }
    drop(in_tx);
    let _ = tokio::task::spawn_blocking(move || physics.join()).await;
    let _ = writer.await;
    log::info!("{name} disconnected");
}

fn route(msg: ServerMessage, ctl: &mpsc::UnboundedSender<ServerMessage>, frames: &mpsc::Sender<ServerMessage>) {
    match msg {
        ServerMessage::WorldState { .. } => {
            // A full buffer means the client is behind; it gets a later frame.
            let _ = frames.try_send(msg);
        }
        other => {
            let _ = ctl.send(other);
        }
    }
}

fn handle(session: &mut Session, item: Inbound) -> Vec<ServerMessage> {
    match item {
        Inbound::Text(t) => session.handle_text(&t),
        Inbound::Binary => vec![session.reject("binary frames are not supported")],
    }
}

fn physics_loop(
    mut session: Session,
    inbound: std_mpsc::Receiver<Inbound>,
    ctl: &mpsc::UnboundedSender<ServerMessage>,
    frames: &mpsc::Sender<ServerMessage>,
) -> Session {
    match session.config().pacing {
        Pacing::ClientClock => {
            while let Ok(item) = inbound.recv() {
                for m in handle(&mut session, item) {
                    route(m, ctl, frames);
                }
            }
        }
        Pacing::Realtime => {
            let dt = Duration::from_secs_f64(session.config().scenario.world.timestep);
            let mut next = Instant::now();
            'run: loop {
                loop {
                    match inbound.try_recv() {
                        Ok(item) => handle(&mut session, item).into_iter().for_each(|m| route(m, ctl, frames)),
                        Err(std_mpsc::TryRecvError::Empty) => break,
                        Err(std_mpsc::TryRecvError::Disconnected) => break 'run,
                    }
                }
                if let Some(m) = session.step() {
                    route(m, ctl, frames);
                }
                next += dt;
                let now = Instant::now();
                if next > now {
                    std::thread::sleep(next - now);
                } else if now - next > Duration::from_millis(250) {
                    // Too far behind to catch up; slow down instead.
                    log::warn!("physics fell behind real time");
                    next = now;
                }
            }
        }
    }
    session
}

/// Writes the session's completed trials and staircase state.
pub fn persist(session: &Session, dir: &std::path::Path, name: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_trials_csv(std::fs::File::create(dir.join(format!("{name}-trials.csv")))?, session.records())?;
    let summary = serde_json::json!({
        "scenario_digest": session.scenario_digest(),
        "staircases": session.staircases(),
        "jnd": session.jnd_results(),
    });
    std::fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}
