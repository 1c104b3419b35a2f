//! The `memtrace` command line: run, serve, replay and export.

use std::ffi::OsString;
use std::io::{BufRead, IsTerminal, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use memtrace_core::analysis::LayoutPrefs;
use memtrace_core::snapshot::Dialect;
use memtrace_core::trace::Trace;
use memtrace_core::SystemClock;

use crate::render::render_view;
use crate::session::{Action, CreateRequest, Session, SessionError, SessionManager, StepPayload, Timeline};

#[derive(Debug, Parser)]
#[command(name = "memtrace", version, about = "Step through small programs and inspect stack and heap at every step")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Start a session on a source file and step through it interactively.
    Run {
        file: PathBuf,
        #[arg(long)]
        dialect: Dialect,
        /// Breakpoint line; may be repeated.
        #[arg(long = "break", value_name = "LINE")]
        breakpoints: Vec<u32>,
        #[arg(long, env = "MEMTRACE_TRACE_DIR", default_value = "memtrace-traces")]
        trace_dir: PathBuf,
    },
    /// Serve the HTTP API (and optionally the web UI assets).
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "MEMTRACE_TRACE_DIR", default_value = "memtrace-traces")]
        trace_dir: PathBuf,
        /// Directory of static files served for non-API paths.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Navigate a stored trace offline.
    Replay { trace_dir: PathBuf },
    /// Print one stored snapshot document.
    Export {
        trace_dir: PathBuf,
        #[arg(long)]
        step: u64,
    },
}

/// What the REPL drives: a live session or a stored trace.
pub trait Driver {
    fn apply(&mut self, action: Action) -> Result<StepPayload, SessionError>;
    fn current(&self) -> Result<StepPayload, SessionError>;
}

impl Driver for Arc<Session> {
    fn apply(&mut self, action: Action) -> Result<StepPayload, SessionError> {
        self.command(action)
    }

    fn current(&self) -> Result<StepPayload, SessionError> {
        Session::current(self)
    }
}

/// Read-only navigation over a trace on disk.
pub struct Replay {
    timeline: Timeline,
    prefs: LayoutPrefs,
}

impl Replay {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let trace = Trace::open(dir)?;
        Ok(Replay { timeline: Timeline::new(trace, true), prefs: LayoutPrefs::default() })
    }
}

impl Driver for Replay {
    fn apply(&mut self, action: Action) -> Result<StepPayload, SessionError> {
        if action.is_live() {
            return Err(SessionError::BadRequest("replay is read-only; use back, fwd or jump".into()));
        }
        self.timeline.navigate(action, &self.prefs)
    }

    fn current(&self) -> Result<StepPayload, SessionError> {
        self.timeline.payload(self.timeline.cursor().position(), &self.prefs)
    }
}

const HELP: &str = "\
commands:
  si | so | sr     step into / over / return
  cont             run to the next breakpoint
  back | fwd       previous / next visible step
  jump N           go to step N
  print            show the current step
  quit
";

enum Line {
    Act(Action),
    Print,
    Help,
    Quit,
    Blank,
}

fn parse_line(line: &str) -> Result<Line, String> {
    let mut words = line.split_whitespace();
    let Some(cmd) = words.next() else { return Ok(Line::Blank) };
    let act = |a| Ok(Line::Act(a));
    match cmd {
        "si" | "into" => act(Action::StepInto),
        "so" | "over" => act(Action::StepOver),
        "sr" | "return" => act(Action::StepReturn),
        "cont" | "run" | "c" => act(Action::Run),
        "back" | "b" => act(Action::BackStep),
        "fwd" | "f" => act(Action::ForwardStep),
        "jump" | "j" => match words.next().map(str::parse) {
            Some(Ok(n)) => act(Action::Jump(n)),
            _ => Err("usage: jump N".to_string()),
        },
        "print" | "p" => Ok(Line::Print),
        "help" | "h" | "?" => Ok(Line::Help),
        "quit" | "q" | "exit" => Ok(Line::Quit),
        other => Err(format!("unknown command `{other}` (try help)")),
    }
}

/// Reads commands until `quit` or end of input, printing a table after
/// each one. Errors are reported and the loop goes on.
pub fn repl(driver: &mut dyn Driver, input: impl BufRead, out: &mut dyn Write, prompt: bool) -> std::io::Result<()> {
    let show = |out: &mut dyn Write, r: Result<StepPayload, SessionError>| match r {
        Ok(p) => write!(out, "{}", render_view(&p.view)),
        Err(e) => writeln!(out, "error: {e}"),
    };
    let mut lines = input.lines();
    loop {
        if prompt {
            write!(out, "(memtrace) ")?;
            out.flush()?;
        }
        let Some(line) = lines.next() else { return Ok(()) };
        match parse_line(&line?) {
            Ok(Line::Act(a)) => show(out, driver.apply(a))?,
            Ok(Line::Print) => show(out, driver.current())?,
            Ok(Line::Help) => write!(out, "{HELP}")?,
            Ok(Line::Quit) => return Ok(()),
            Ok(Line::Blank) => {}
            Err(msg) => writeln!(out, "error: {msg}")?,
        }
    }
}

/// Entry point behind the binary. Returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("memtrace: {msg}");
            1
        }
    }
}

fn execute(cli: Cli) -> Result<(), String> {
    let stdin = std::io::stdin();
    let prompt = stdin.is_terminal();
    let mut stdout = std::io::stdout();
    match cli.command {
        Command::Run { file, dialect, breakpoints, trace_dir } => {
            let source = std::fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
            let manager = SessionManager::new(trace_dir, Arc::new(SystemClock));
            let req = CreateRequest {
                source,
                dialect,
                breakpoints,
                source_file: Some(file.display().to_string()),
            };
            let (mut session, first) = manager.create(req).map_err(|e| describe(&e))?;
            writeln!(stdout, "trace: {}", session.trace_dir().display()).map_err(|e| e.to_string())?;
            write!(stdout, "{}", render_view(&first.view)).map_err(|e| e.to_string())?;
            repl(&mut session, stdin.lock(), &mut stdout, prompt).map_err(|e| e.to_string())
        }
        Command::Replay { trace_dir } => {
            let mut replay = Replay::open(trace_dir).map_err(|e| e.to_string())?;
            let first = replay.current().map_err(|e| e.to_string())?;
            write!(stdout, "{}", render_view(&first.view)).map_err(|e| e.to_string())?;
            repl(&mut replay, stdin.lock(), &mut stdout, prompt).map_err(|e| e.to_string())
        }
        Command::Export { trace_dir, step } => {
            let trace = Trace::open(trace_dir).map_err(|e| e.to_string())?;
            let text = trace.read_raw(step).map_err(|e| e.to_string())?;
            stdout.write_all(text.as_bytes()).map_err(|e| e.to_string())
        }
        Command::Serve { port, host, trace_dir, assets } => serve(SocketAddr::new(host, port), trace_dir, assets),
    }
}

fn describe(e: &SessionError) -> String {
    match e {
        SessionError::Diagnostic(d) => format!("{d}"),
        other => other.to_string(),
    }
}

fn serve(addr: SocketAddr, trace_dir: PathBuf, assets: Option<PathBuf>) -> Result<(), String> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async move {
        let manager = Arc::new(SessionManager::new(trace_dir, Arc::new(SystemClock)));
        let app = crate::http::router(manager, assets);
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| format!("{addr}: {e}"))?;
        eprintln!("memtrace: listening on http://{}", listener.local_addr().map_err(|e| e.to_string())?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| e.to_string())
    })
}
