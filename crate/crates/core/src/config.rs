//! TOML configuration and wiring of the stub-backed runtime.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerConfig;
use crate::audio::VadConfig;
use crate::board::{fen_decode, BoardTool, EngineConfig, SimCamera, START_FEN};
use crate::event_log::EventLog;
use crate::orchestrator::{Orchestrator, OrchestratorConfig};
use crate::providers::{
    KeywordSummarizer, LanguageModel, PassThroughSynthesizer, StubLanguageModel, StubRecognizer, StubTable,
};
use crate::tools::builtin::{register_builtins, BuiltinStores};
use crate::tools::ToolRegistry;
use crate::transport::{Runtime, SessionConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {message}")]
    Io { path: String, message: String },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoardConfig {
    pub start_fen: String,
    pub n: usize,
    pub tau: f64,
    /// Per-square flip probability of the simulated camera.
    pub noise: f64,
    pub engine: EngineConfig,
}

impl Default for BoardConfig {
    fn default() -> Self {
        BoardConfig {
            start_fen: START_FEN.to_string(),
            n: 5,
            tau: 0.6,
            noise: 0.0,
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub listen: String,
    pub tts_chunk_bytes: usize,
    pub tts_interval_ms: u64,
    pub trace_dir: Option<PathBuf>,
    /// Tools exposed to the planner; all registered tools when absent.
    pub allowlist: Option<Vec<String>>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: "127.0.0.1:7878".into(),
            tts_chunk_bytes: 3200,
            tts_interval_ms: 20,
            trace_dir: None,
            allowlist: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QaConfig {
    /// Exit status is nonzero below this accuracy.
    pub accuracy_floor: f64,
}

impl Default for QaConfig {
    fn default() -> Self {
        QaConfig { accuracy_floor: 0.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub seed: u64,
    pub orchestrator: OrchestratorConfig,
    pub answer: AnswerConfig,
    pub vad: VadConfig,
    pub board: BoardConfig,
    pub server: ServerConfig,
    pub qa: QaConfig,
}

impl AppConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let cfg: AppConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.vad.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        fen_decode(&self.board.start_fen).map_err(|e| ConfigError::Invalid(format!("board.start_fen: {e}")))?;
        if !(0.0..=1.0).contains(&self.board.noise) {
            return Err(ConfigError::Invalid("board.noise must lie in [0, 1]".into()));
        }
        if self.orchestrator.budget == 0 {
            return Err(ConfigError::Invalid("orchestrator.budget must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Runtime, its session settings and handles on the tool stores.
pub struct Assembled {
    pub runtime: Runtime,
    pub session: SessionConfig,
    pub stores: BuiltinStores,
    pub board: Arc<Mutex<BoardTool>>,
}

/// Wires stub providers, the built-in tools and the orchestrator.
pub fn assemble(cfg: &AppConfig, lm_table: StubTable, asr_table: StubTable, log: EventLog) -> Result<Assembled, ConfigError> {
    cfg.validate()?;
    let start = fen_decode(&cfg.board.start_fen).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let tool = BoardTool::new(&start, cfg.board.n, cfg.board.tau, cfg.board.engine)
        .map_err(|e| ConfigError::Invalid(format!("board: {e}")))?
        .with_camera(SimCamera::new(&start, cfg.board.noise, cfg.seed));
    let board = Arc::new(Mutex::new(tool));

    let lm: Arc<dyn LanguageModel> = Arc::new(StubLanguageModel::new(lm_table));
    let mut registry = ToolRegistry::new();
    let stores = register_builtins(&mut registry, board.clone(), lm.clone())
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let allowlist = match &cfg.server.allowlist {
        Some(names) => registry
            .allowlist(names.iter().map(String::as_str))
            .map_err(|e| ConfigError::Invalid(format!("server.allowlist: {e}")))?,
        None => registry.allow_all(),
    };
    let orchestrator = Orchestrator::new(
        Arc::new(registry),
        allowlist,
        lm,
        Arc::new(KeywordSummarizer::default()),
        cfg.orchestrator.clone(),
    );
    Ok(Assembled {
        runtime: Runtime {
            orchestrator: Arc::new(orchestrator),
            asr: Arc::new(StubRecognizer::new(asr_table)),
            tts: Arc::new(PassThroughSynthesizer),
        },
        session: SessionConfig {
            vad: cfg.vad.clone(),
            tts_chunk_bytes: cfg.server.tts_chunk_bytes,
            tts_interval_ms: cfg.server.tts_interval_ms,
            trace_dir: cfg.server.trace_dir.clone(),
            initial_log: log,
        },
        stores,
        board,
    })
}
