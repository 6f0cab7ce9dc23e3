#![allow(dead_code)]

use std::net::SocketAddr;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio::sync::oneshot;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use decouple_core::dynamics::{BodyId, BodyRole};
use decouple_core::experiment::standard_push;
use decouple_core::math::Pose;
use decouple_core::scenario::Scenario;
use decouple_session::{ClientMessage, ServerConfig, ServerMessage, PROTOCOL_VERSION};

pub struct Server {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    handle: tokio::task::JoinHandle<()>,
}

impl Server {
    pub async fn start(config: ServerConfig) -> Server {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = oneshot::channel();
        let handle = tokio::spawn(async move {
            decouple_session::serve(listener, config, async {
                let _ = rx.await;
            })
            .await
            .unwrap();
        });
        Server { addr, stop: Some(tx), handle }
    }

    pub async fn stop(mut self) {
        let _ = self.stop.take().unwrap().send(());
        let _ = tokio::time::timeout(Duration::from_secs(5), self.handle).await;
    }
}

pub struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    pub seq: u64,
    /// Simulated steps requested so far (client-clock pacing).
    pub steps: u64,
    pub dt: f64,
    /// World-state messages seen, in arrival order.
    pub frames: Vec<ServerMessage>,
}

impl Client {
    pub async fn connect(addr: SocketAddr) -> Client {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
        Client { ws, seq: 0, steps: 0, dt: 1.0 / 240.0, frames: Vec::new() }
    }

    pub async fn send(&mut self, msg: &ClientMessage) {
        self.ws.send(Message::Text(serde_json::to_string(msg).unwrap().into())).await.unwrap();
    }

    pub async fn send_raw(&mut self, text: &str) {
        self.ws.send(Message::Text(text.to_owned().into())).await.unwrap();
    }

    pub fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    pub async fn close(mut self) {
        let _ = self.ws.close(None).await;
    }

    /// Next message of any kind.
    pub async fn recv(&mut self) -> ServerMessage {
        loop {
            let msg = tokio::time::timeout(Duration::from_secs(30), self.ws.next())
                .await
                .expect("server reply timed out")
                .expect("connection closed")
                .unwrap();
            if let Message::Text(t) = msg {
                return serde_json::from_str(t.as_str()).unwrap();
            }
        }
    }

    /// Next message that is not a world state; frames seen on the way are
    /// kept in `frames`.
    pub async fn recv_control(&mut self) -> ServerMessage {
        loop {
            let m = self.recv().await;
            if matches!(m, ServerMessage::WorldState { .. }) {
                self.frames.push(m);
            } else {
                return m;
            }
        }
    }

    pub async fn hello(&mut self) -> ServerMessage {
        let seq = self.next_seq();
        self.send(&ClientMessage::Hello { seq, protocol_version: PROTOCOL_VERSION }).await;
        self.recv_control().await
    }

    /// Pose at the current client time; no simulated time passes.
    pub async fn place(&mut self, pose: Pose) {
        let seq = self.next_seq();
        let t = self.steps as f64 * self.dt;
        self.send(&ClientMessage::PoseUpdate { seq, t, position: pose.position, orientation: pose.orientation }).await;
    }

    /// Plays the standard push for `masses`, one pose per simulated step,
    /// exactly as the offline harness does.
    pub async fn push(&mut self, scenario: &Scenario, masses: &[f64]) {
        let traj = standard_push(scenario, masses).unwrap();
        let n = (traj.duration() / self.dt).ceil() as u64 + 1;
        for i in 1..=n {
            let (pose, _) = traj.sample(i as f64 * self.dt).unwrap();
            self.steps += 1;
            let seq = self.next_seq();
            let t = self.steps as f64 * self.dt;
            self.send(&ClientMessage::PoseUpdate { seq, t, position: pose.position, orientation: pose.orientation }).await;
        }
    }
}

/// Start pose of the standard push (independent of the masses).
pub fn push_start(scenario: &Scenario) -> Pose {
    standard_push(scenario, &scenario.cubes.masses).unwrap().start()
}

/// Peak clone displacement per cube as seen in world-state frames: a frame
/// counts for the cube the clone is pressed against.
pub fn perceived_peaks(frames: &[ServerMessage], cubes: &[BodyId], reach: f64) -> Vec<f64> {
    let mut peaks = vec![0.0; cubes.len()];
    for f in frames {
        let ServerMessage::WorldState { decoupling, bodies, .. } = f else { continue };
        let Some(clone) = bodies.iter().find(|b| b.role == BodyRole::EffectorClone) else { continue };
        for (i, id) in cubes.iter().enumerate() {
            let Some(cube) = bodies.iter().find(|b| b.id == *id) else { continue };
            let d = cube.position - clone.position;
            if d.x.abs().max(d.y.abs()) <= reach {
                peaks[i] = f64::max(peaks[i], *decoupling);
            }
        }
    }
    peaks
}
