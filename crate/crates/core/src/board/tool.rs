use serde::{Deserialize, Serialize};

use super::{
    best_move, fen_encode, BoardError, BoardState, Castling, Color, Commit, EngineConfig, Kind, Move, ObservationGrid,
    PieceClass, Placement, SimCamera, Square, VoteBuffer, VoteError,
};
use crate::providers::LanguageModel;

/// Position fields that cannot be read off the board image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameMeta {
    pub side_to_move: Color,
    pub castling: Castling,
    pub en_passant: Option<Square>,
    pub halfmove: u32,
    pub fullmove: u32,
}

impl Default for GameMeta {
    fn default() -> Self {
        GameMeta::of(&BoardState::start())
    }
}

impl GameMeta {
    pub fn of(s: &BoardState) -> GameMeta {
        GameMeta {
            side_to_move: s.side_to_move,
            castling: s.castling,
            en_passant: s.en_passant,
            halfmove: s.halfmove,
            fullmove: s.fullmove,
        }
    }

    /// Combines a perceived placement with this metadata, dropping
    /// castling and en-passant claims the placement contradicts.
    pub fn state_for(&self, placement: &Placement) -> BoardState {
        let at = |sq: usize| placement[sq];
        let mut c = self.castling;
        let wk = at(4) == PieceClass::WhiteKing;
        let bk = at(60) == PieceClass::BlackKing;
        c.white_king &= wk && at(7) == PieceClass::WhiteRook;
        c.white_queen &= wk && at(0) == PieceClass::WhiteRook;
        c.black_king &= bk && at(63) == PieceClass::BlackRook;
        c.black_queen &= bk && at(56) == PieceClass::BlackRook;

        let en_passant = self.en_passant.filter(|&ep| {
            // The pawn that just double-pushed sits behind the target square.
            let (victim, pawn) = match self.side_to_move {
                Color::White => (ep as usize - 8, PieceClass::piece(Color::Black, Kind::Pawn)),
                Color::Black => (ep as usize + 8, PieceClass::piece(Color::White, Kind::Pawn)),
            };
            at(ep as usize) == PieceClass::Empty && at(victim) == pawn
        });

        BoardState {
            placement: *placement,
            side_to_move: self.side_to_move,
            castling: c,
            en_passant,
            halfmove: self.halfmove,
            fullmove: self.fullmove,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    #[serde(rename = "move")]
    pub mv: String,
    /// Pawns, from the mover's perspective.
    pub score: f64,
    pub fen: String,
    pub text: String,
}

pub fn coach_prompt(m: &Move) -> String {
    format!("As a board-game coach, explain the idea behind move {m} given the current position.")
}

fn advise(state: &BoardState, cfg: &EngineConfig, lm: &dyn LanguageModel) -> Result<Advice, BoardError> {
    let r = best_move(state, cfg)?;
    let mv = r.best.to_string();
    let text = match lm.complete(&coach_prompt(&r.best)) {
        Ok(t) if t.contains(&mv) => t,
        Ok(t) => format!("{mv}: {}", t.trim()),
        Err(e) => {
            tracing::warn!(error = %e, "coach explanation unavailable");
            format!("Suggested move {mv} (evaluation {:+.2}).", r.score())
        }
    };
    Ok(Advice {
        mv,
        score: r.score(),
        fen: fen_encode(state),
        text,
    })
}

/// Feeds `frames` through the vote buffer, then searches and explains
/// the best move on the committed board.
pub fn execute_board_tool(
    frames: &[ObservationGrid],
    buf: &mut VoteBuffer,
    meta: &GameMeta,
    cfg: &EngineConfig,
    lm: &dyn LanguageModel,
) -> Result<Advice, BoardError> {
    for f in frames {
        buf.push(*f);
    }
    if !buf.is_full() {
        return Err(BoardError::PerceptionUnstable(format!(
            "only {} of {} frames buffered",
            buf.len(),
            buf.size()
        )));
    }
    let state = meta.state_for(buf.committed());
    state.validate().map_err(|e| match e {
        BoardError::InvalidPosition(why) => BoardError::PerceptionUnstable(why),
        other => other,
    })?;
    advise(&state, cfg, lm)
}

/// Per-session board tool: vote buffer, tracked metadata and an
/// optional simulated camera.
#[derive(Debug, Clone)]
pub struct BoardTool {
    buffer: VoteBuffer,
    meta: GameMeta,
    engine: EngineConfig,
    camera: Option<SimCamera>,
}

impl BoardTool {
    /// `start` seeds both the committed board and the metadata.
    pub fn new(start: &BoardState, n: usize, tau: f64, engine: EngineConfig) -> Result<Self, VoteError> {
        Ok(BoardTool {
            buffer: VoteBuffer::new(n, tau, start.placement)?,
            meta: GameMeta::of(start),
            engine,
            camera: None,
        })
    }

    pub fn with_camera(mut self, camera: SimCamera) -> Self {
        self.camera = Some(camera);
        self
    }

    pub fn camera_mut(&mut self) -> Option<&mut SimCamera> {
        self.camera.as_mut()
    }

    pub fn set_meta(&mut self, meta: GameMeta) {
        self.meta = meta;
    }

    pub fn meta(&self) -> &GameMeta {
        &self.meta
    }

    pub fn engine(&self) -> &EngineConfig {
        &self.engine
    }

    pub fn buffer(&self) -> &VoteBuffer {
        &self.buffer
    }

    pub fn observe(&mut self, grid: ObservationGrid) -> Commit {
        self.buffer.push(grid)
    }

    pub fn state(&self) -> BoardState {
        self.meta.state_for(self.buffer.committed())
    }

    /// Captures a full buffer of frames from the camera, if any, then
    /// advises on the committed board.
    pub fn suggest(&mut self, lm: &dyn LanguageModel) -> Result<Advice, BoardError> {
        let frames: Vec<ObservationGrid> = match self.camera.as_mut() {
            Some(cam) => (0..self.buffer.size()).map(|_| cam.capture()).collect(),
            None => Vec::new(),
        };
        execute_board_tool(&frames, &mut self.buffer, &self.meta, &self.engine, lm)
    }

    /// Advises on an explicit position, bypassing perception.
    pub fn suggest_for(&self, state: &BoardState, lm: &dyn LanguageModel) -> Result<Advice, BoardError> {
        state.validate()?;
        advise(state, &self.engine, lm)
    }
}
