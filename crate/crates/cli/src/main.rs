use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use drawdash::config::Config;
use drawdash::provider::{Provider, RemoteProvider, RuleProvider};
use drawdash::session::{self, read_journal, read_trace, run_trace, Summary, TraceOptions};
use drawdash::svg::export_svg;
use drawdash::wire::{self, ServeOptions, ServerState};
use drawdash::Scene;

const EXIT_BAD_FLAGS: u8 = 2;
const EXIT_BIND: u8 = 3;
const EXIT_CORRUPT: u8 = 4;
const EXIT_PROVIDER: u8 = 5;

#[derive(Parser)]
#[command(name = "drawdash", version, about = "Proactive whiteboard diagram completion")]
struct Cli {
    /// Settings file (key = value lines); DRAWDASH_* variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderKind {
    Rule,
    Remote,
}

#[derive(Subcommand)]
enum Cmd {
    /// Serve the socket endpoint.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, value_enum, default_value = "rule")]
        provider: ProviderKind,
        /// Append each session's journal to DIR/<session>.ndjson.
        #[arg(long)]
        journal_dir: Option<PathBuf>,
        /// UI bundle served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Virtual milliseconds per real millisecond.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
    },
    /// Run a trace fixture headlessly on a virtual clock.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "rule")]
        provider: ProviderKind,
        /// Accept every proposal as soon as it is presented.
        #[arg(long)]
        auto_accept: bool,
        /// Final scene JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Session journal (NDJSON).
        #[arg(long)]
        journal_out: Option<PathBuf>,
        /// Keep ticking this long after the last trace event.
        #[arg(long, default_value_t = 2000)]
        tail_ms: i64,
    },
    /// Rebuild a session from its journal and check it replays exactly.
    Verify {
        #[arg(long)]
        journal: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Render a scene JSON file as SVG.
    ExportSvg {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("drawdash: {msg}");
    ExitCode::from(code)
}

fn load_config(path: Option<&Path>) -> Result<Config, ExitCode> {
    let text = match path {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| fail(EXIT_BAD_FLAGS, format!("{}: {e}", p.display())))?),
        None => None,
    };
    Config::load(text.as_deref()).map_err(|e| fail(EXIT_BAD_FLAGS, e))
}

fn provider_for(kind: ProviderKind, cfg: &Config) -> Result<Arc<dyn Provider>, ExitCode> {
    match kind {
        ProviderKind::Rule => Ok(Arc::new(RuleProvider::default())),
        ProviderKind::Remote => cfg
            .remote()
            .map(|r| Arc::new(RemoteProvider::new(r)) as Arc<dyn Provider>)
            .ok_or_else(|| fail(EXIT_PROVIDER, "remote provider needs DRAWDASH_MODEL_URL or model_url")),
    }
}

fn write_outputs(scene: &Scene, out: Option<&Path>, svg: Option<&Path>) -> Result<(), ExitCode> {
    let write = |path: &Path, text: String| {
        std::fs::write(path, text).map_err(|e| fail(1, format!("{}: {e}", path.display())))
    };
    if let Some(p) = out {
        write(p, scene.to_json() + "\n")?;
    }
    if let Some(p) = svg {
        write(p, export_svg(scene))?;
    }
    Ok(())
}

fn serve(cfg: Config, port: Option<u16>, provider: Arc<dyn Provider>, opts: ServeOptions) -> ExitCode {
    if !(opts.time_scale.is_finite() && opts.time_scale > 0.0) {
        return fail(EXIT_BAD_FLAGS, "--time-scale must be positive");
    }
    let addr = SocketAddr::from((Ipv4Addr::UNSPECIFIED, port.unwrap_or(cfg.port)));
    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => return fail(1, e),
    };
    rt.block_on(async move {
        let listener = match wire::bind(addr).await {
            Ok(l) => l,
            Err(e) => return fail(EXIT_BIND, format!("cannot bind {addr}: {e}")),
        };
        log::info!("listening on {addr}");
        match wire::serve(listener, ServerState::new(provider, opts)).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(1, e),
        }
    })
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Cmd::Serve {
            port,
            provider,
            journal_dir,
            static_dir,
            time_scale,
        } => {
            let p = provider_for(provider, &cfg)?;
            let opts = ServeOptions {
                trigger: cfg.trigger,
                time_scale,
                journal_dir: journal_dir.or_else(|| cfg.journal_dir.clone()),
                static_dir: static_dir.or_else(|| cfg.static_dir.clone()),
            };
            if let Some(dir) = &opts.journal_dir {
                std::fs::create_dir_all(dir).map_err(|e| fail(EXIT_BAD_FLAGS, format!("{}: {e}", dir.display())))?;
            }
            Ok(serve(cfg, port, p, opts))
        }
        Cmd::Replay {
            trace,
            provider,
            auto_accept,
            out,
            svg,
            journal_out,
            tail_ms,
        } => {
            if tail_ms < 0 {
                return Err(fail(EXIT_BAD_FLAGS, "--tail-ms must not be negative"));
            }
            let text = std::fs::read_to_string(&trace)
                .map_err(|e| fail(EXIT_CORRUPT, format!("{}: {e}", trace.display())))?;
            let events = read_trace(&text).map_err(|e| fail(EXIT_CORRUPT, e))?;
            let p = provider_for(provider, &cfg)?;
            let opts = TraceOptions { auto_accept, tail_ms };
            let session = run_trace(&events, p.as_ref(), cfg.trigger, opts).map_err(|e| fail(EXIT_CORRUPT, e))?;
            write_outputs(session.scene(), out.as_deref(), svg.as_deref())?;
            if let Some(path) = journal_out {
                std::fs::write(&path, session.journal_text()).map_err(|e| fail(1, format!("{}: {e}", path.display())))?;
            }
            let summary = Summary::of(&session);
            println!("{summary}");
            if provider == ProviderKind::Remote && summary.provider_errors > 0 {
                return Err(fail(EXIT_PROVIDER, format!("{} provider error(s)", summary.provider_errors)));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { journal, out, svg } => {
            let text = std::fs::read_to_string(&journal)
                .map_err(|e| fail(EXIT_CORRUPT, format!("{}: {e}", journal.display())))?;
            let events = read_journal(&text).map_err(|e| fail(EXIT_CORRUPT, e))?;
            let session = session::replay(&events, cfg.trigger).map_err(|e| fail(EXIT_CORRUPT, e))?;
            write_outputs(session.scene(), out.as_deref(), svg.as_deref())?;
            println!("{}", Summary::of(&session));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::ExportSvg { scene, out } => {
            let text = std::fs::read_to_string(&scene)
                .map_err(|e| fail(EXIT_CORRUPT, format!("{}: {e}", scene.display())))?;
            let parsed = Scene::from_json(&text).map_err(|e| fail(EXIT_CORRUPT, e))?;
            if let Err(v) = parsed.validate() {
                return Err(fail(EXIT_CORRUPT, format!("invalid scene: {}", v[0])));
            }
            match out {
                Some(p) => write_outputs(&parsed, None, Some(&p))?,
                None => print!("{}", export_svg(&parsed)),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_BAD_FLAGS)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.command {
        Cmd::Serve { .. } => "info",
        _ => "warn",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    run(cli).unwrap_or_else(|code| code)
}
