//! WebSocket server: one simulation session per connection.
//!
//! Per connection, a reader task parses client frames and hands them to the
//! simulation task, which owns the session and hands encoded frames to a
//! writer task. Each handoff is a single-producer, single-consumer channel.
//!
//! The simulation task wakes every `frame_ticks` control periods, applies
//! pending client messages, steps that many ticks and emits the latest
//! state. Late wakeups are delayed rather than skipped, so under load the
//! simulated clock falls behind wall time instead of dropping steps.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio::time::MissedTickBehavior;
use tokio_tungstenite::tungstenite::Message;

use prosim_core::plant::{ObjectKind, ObjectModel};
use prosim_core::{CalibrationProfile, Session, SessionConfig};

use crate::protocol::{encode, parse_client, Inbound, ServerMessage};

/// Control ticks per telemetry frame; 10 ticks at 500 Hz is 50 frames/s.
pub const DEFAULT_FRAME_TICKS: usize = 10;

#[derive(Debug, Clone)]
pub struct ServerContext {
    pub cfg: SessionConfig,
    pub profile: CalibrationProfile,
    pub initial: ObjectKind,
    pub frame_ticks: usize,
}

impl ServerContext {
    pub fn new(cfg: SessionConfig, profile: CalibrationProfile, initial: ObjectKind) -> prosim_core::Result<Self> {
        Session::new(cfg.clone(), profile.clone(), ObjectModel::preset(initial))?;
        Ok(Self {
            cfg,
            profile,
            initial,
            frame_ticks: DEFAULT_FRAME_TICKS,
        })
    }

    fn session(&self) -> prosim_core::Result<Session> {
        Session::new(
            self.cfg.clone(),
            self.profile.clone(),
            ObjectModel::preset(self.initial),
        )
    }
}

pub async fn serve(addr: SocketAddr, ctx: ServerContext) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    log::info!("listening on ws://{}", listener.local_addr()?);
    run(listener, Arc::new(ctx)).await
}

/// Accepts connections until the listener fails.
pub async fn run(listener: TcpListener, ctx: Arc<ServerContext>) -> std::io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        let ctx = Arc::clone(&ctx);
        tokio::spawn(async move {
            log::info!("{peer} connected");
            if let Err(e) = handle(stream, ctx).await {
                log::warn!("{peer}: {e}");
            }
            log::info!("{peer} disconnected");
        });
    }
}

async fn handle(stream: TcpStream, ctx: Arc<ServerContext>) -> Result<(), tokio_tungstenite::tungstenite::Error> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    let (mut sink, mut source) = ws.split();
    let (in_tx, in_rx) = mpsc::unbounded_channel::<Inbound>();
    let (out_tx, mut out_rx) = mpsc::channel::<String>(64);

    let session = match ctx.session() {
        Ok(s) => s,
        Err(e) => {
            sink.send(Message::text(encode(&ServerMessage::Error { msg: e.to_string() })))
                .await?;
            return Ok(());
        }
    };
    let sim = tokio::spawn(simulate(session, ctx.frame_ticks, in_rx, out_tx));
    let writer = tokio::spawn(async move {
        while let Some(text) = out_rx.recv().await {
            if sink.send(Message::text(text)).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    while let Some(msg) = source.next().await {
        let inbound = match msg {
            Ok(Message::Text(t)) => parse_client(t.as_str()),
            Ok(Message::Binary(_)) => Inbound::Rejected("binary frames are not supported".into()),
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        if in_tx.send(inbound).is_err() {
            break;
        }
    }
    drop(in_tx);
    let _ = sim.await;
    let _ = writer.await;
    Ok(())
}

async fn simulate(
    mut session: Session,
    frame_ticks: usize,
    mut rx: mpsc::UnboundedReceiver<Inbound>,
    tx: mpsc::Sender<String>,
) {
    let period = Duration::from_secs_f64(session.tick_s() * frame_ticks as f64);
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        interval.tick().await;
        let mut replies = Vec::new();
        loop {
            match rx.try_recv() {
                Ok(Inbound::Activation(cmd)) => {
                    session.apply_command(&cmd);
                }
                Ok(Inbound::Scenario(kind)) => {
                    if let Err(e) = session.select_object(ObjectModel::preset(kind)) {
                        replies.push(ServerMessage::Error { msg: e.to_string() });
                    }
                }
                Ok(Inbound::Reset) => session.reset(),
                Ok(Inbound::Rejected(msg)) => replies.push(ServerMessage::Error { msg }),
                Err(mpsc::error::TryRecvError::Empty) => break,
                Err(mpsc::error::TryRecvError::Disconnected) => return,
            }
        }
        let mut last = None;
        for _ in 0..frame_ticks {
            match session.tick() {
                Ok(t) => last = Some(t),
                Err(e) => {
                    replies.push(ServerMessage::Error { msg: e.to_string() });
                    break;
                }
            }
        }
        replies.extend(last.map(ServerMessage::State));
        for r in replies {
            if tx.send(encode(&r)).await.is_err() {
                return;
            }
        }
    }
}
