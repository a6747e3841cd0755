//! Socket endpoint: `/ws`, `/healthz`, and static files at `/`.
//!
//! Each session is a task that owns its [`Session`] and processes one
//! queue of inputs, ticks and provider results. Connections only forward
//! decoded messages into that queue and write back what comes out.

use std::collections::HashMap;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;

use super::{decode, encode, Body, HelloAck, SceneSync, WireMessage};
use crate::provider::Provider;
use crate::scene::Scene;
use crate::session::{Input, Session, TICK_MS};
use crate::trigger::TriggerConfig;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub trigger: TriggerConfig,
    /// Virtual milliseconds per wall-clock millisecond.
    pub time_scale: f64,
    pub journal_dir: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            trigger: TriggerConfig::default(),
            time_scale: 1.0,
            journal_dir: None,
            static_dir: None,
        }
    }
}

enum SessionMsg {
    Attach {
        client: mpsc::UnboundedSender<Body>,
        reply: oneshot::Sender<Scene>,
    },
    Input(Input),
}

pub struct ServerState {
    options: ServeOptions,
    provider: Arc<dyn Provider>,
    sessions: Mutex<HashMap<String, mpsc::UnboundedSender<SessionMsg>>>,
}

impl ServerState {
    pub fn new(provider: Arc<dyn Provider>, options: ServeOptions) -> Arc<Self> {
        Arc::new(Self {
            options,
            provider,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    /// Returns the session queue and whether the session already existed.
    fn session(self: &Arc<Self>, id: &str) -> (mpsc::UnboundedSender<SessionMsg>, bool) {
        let mut map = self.sessions.lock().expect("session registry poisoned");
        if let Some(tx) = map.get(id).filter(|tx| !tx.is_closed()) {
            return (tx.clone(), true);
        }
        let (tx, rx) = mpsc::unbounded_channel();
        map.insert(id.to_owned(), tx.clone());
        let session = Session::new(id, self.options.trigger);
        tokio::spawn(run_session(session, rx, tx.clone(), Arc::clone(self)));
        (tx, false)
    }
}

fn append_journal(dir: &Path, session: &Session, from: usize) {
    let path = dir.join(format!("{}.ndjson", session.id));
    let result = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .and_then(|mut f| {
            session.journal()[from..]
                .iter()
                .try_for_each(|e| writeln!(f, "{}", e.to_line()))
        });
    if let Err(e) = result {
        log::error!("journal {}: {e}", path.display());
    }
}

async fn run_session(
    mut session: Session,
    mut rx: mpsc::UnboundedReceiver<SessionMsg>,
    me: mpsc::UnboundedSender<SessionMsg>,
    state: Arc<ServerState>,
) {
    let scale = state.options.time_scale;
    let start = Instant::now();
    let mut ticker = tokio::time::interval(Duration::from_secs_f64(TICK_MS as f64 / 1000.0 / scale));
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    let mut client: Option<mpsc::UnboundedSender<Body>> = None;
    loop {
        let input = tokio::select! {
            msg = rx.recv() => match msg {
                None => return,
                Some(SessionMsg::Attach { client: c, reply }) => {
                    // A new connection supersedes the old one, which closes
                    // once its sender is dropped here.
                    client = Some(c);
                    let _ = reply.send(session.scene().clone());
                    continue;
                }
                Some(SessionMsg::Input(input)) => input,
            },
            _ = ticker.tick() => Input::Tick,
        };
        let now_ms = (start.elapsed().as_secs_f64() * 1000.0 * scale) as i64;
        let before = session.journal().len();
        let fx = session.handle(input, now_ms);
        for ev in &session.journal()[before..] {
            log::info!("[{}] #{} t={} {}", session.id, ev.seq, ev.t_ms, ev.kind);
        }
        if let Some(dir) = &state.options.journal_dir {
            append_journal(dir, &session, before);
        }
        for req in fx.requests {
            let provider = Arc::clone(&state.provider);
            let me = me.clone();
            tokio::task::spawn_blocking(move || {
                let result = provider.propose(&req);
                let _ = me.send(SessionMsg::Input(Input::ProviderResult {
                    proposal_id: req.proposal_id,
                    result,
                }));
            });
        }
        if let Some(c) = &client {
            if fx.outbound.into_iter().any(|o| c.send(o.into()).is_err()) {
                client = None;
            }
        }
    }
}

fn to_input(body: Body) -> Option<Input> {
    Some(match body {
        Body::CanvasEdit(b) => Input::CanvasEdit {
            script_text: b.script_text,
            base_version: b.base_version,
        },
        Body::TranscriptSegment(seg) => Input::Segment(seg),
        Body::SuggestionAccept(b) => Input::Accept {
            proposal_id: b.proposal_id,
        },
        Body::SuggestionReject(b) => Input::Reject {
            proposal_id: b.proposal_id,
        },
        _ => return None,
    })
}

enum Out {
    Body(Body),
    Close,
}

async fn connection(socket: WebSocket, state: Arc<ServerState>) {
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<Out>();
    let session_id: Arc<Mutex<String>> = Arc::default();
    let generation = Arc::new(AtomicU64::new(0));

    let writer_id = Arc::clone(&session_id);
    let writer = tokio::spawn(async move {
        let mut seq = 0u64;
        while let Some(Out::Body(body)) = out_rx.recv().await {
            let session = writer_id.lock().expect("id lock").clone();
            let text = encode(&WireMessage { session, seq, body });
            seq += 1;
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    let reply = |body: Body| {
        let _ = out_tx.send(Out::Body(body));
    };

    let mut queue: Option<mpsc::UnboundedSender<SessionMsg>> = None;
    while let Some(Ok(frame)) = stream.next().await {
        let bytes = match frame {
            Message::Text(t) => t.as_str().as_bytes().to_vec(),
            Message::Binary(b) => b.to_vec(),
            Message::Close(_) => break,
            _ => continue,
        };
        let msg = match decode(&bytes) {
            Ok(m) if m.body.is_client() => m,
            Ok(m) => {
                reply(Body::error("bad_message", format!("{} is server-only", m.body.type_name())));
                continue;
            }
            Err(e) => {
                reply(Body::error("bad_message", e.reason));
                continue;
            }
        };
        if let Body::Hello(_) = msg.body {
            if msg.session.is_empty() {
                reply(Body::error("bad_message", "hello needs a session id"));
                continue;
            }
            let (tx, resumed) = state.session(&msg.session);
            let (client_tx, mut client_rx) = mpsc::unbounded_channel::<Body>();
            let (reply_tx, reply_rx) = oneshot::channel();
            let attach = SessionMsg::Attach {
                client: client_tx,
                reply: reply_tx,
            };
            let scene = match tx.send(attach) {
                Ok(()) => reply_rx.await.ok(),
                Err(_) => None,
            };
            let Some(scene) = scene else {
                reply(Body::error("unavailable", "session ended"));
                continue;
            };
            *session_id.lock().expect("id lock") = msg.session.clone();
            let my_gen = generation.fetch_add(1, Ordering::SeqCst) + 1;
            reply(Body::HelloAck(HelloAck { resumed }));
            reply(Body::SceneSync(SceneSync { scene }));
            // Forward session output until another connection takes over.
            let pump_out = out_tx.clone();
            let gen = Arc::clone(&generation);
            tokio::spawn(async move {
                while let Some(body) = client_rx.recv().await {
                    if pump_out.send(Out::Body(body)).is_err() {
                        return;
                    }
                }
                if gen.load(Ordering::SeqCst) == my_gen {
                    let _ = pump_out.send(Out::Close);
                }
            });
            queue = Some(tx);
            continue;
        }
        let Some(q) = &queue else {
            reply(Body::error("expected_hello", "send hello first"));
            continue;
        };
        let current = session_id.lock().expect("id lock").clone();
        if msg.session != current {
            reply(Body::error("bad_message", format!("connection belongs to session {current}")));
            continue;
        }
        if let Some(input) = to_input(msg.body) {
            if q.send(SessionMsg::Input(input)).is_err() {
                break;
            }
        }
    }
    let _ = out_tx.send(Out::Close);
    let _ = writer.await;
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<Arc<ServerState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, state))
}

const PLACEHOLDER: &str = "<!doctype html><title>drawdash</title><p>No UI bundle configured. Connect a client to <code>/ws</code>.</p>\n";

pub fn router(state: Arc<ServerState>) -> Router {
    let static_dir = state.options.static_dir.clone();
    let app = Router::new()
        .route("/ws", get(ws_handler))
        .route("/healthz", get(|| async { "ok" }));
    let app = match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(PLACEHOLDER) })),
    };
    app.with_state(state)
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<TcpListener> {
    TcpListener::bind(addr).await
}

pub async fn serve(listener: TcpListener, state: Arc<ServerState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
