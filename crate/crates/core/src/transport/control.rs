//! Control-message vocabulary carried in control frames as UTF-8 JSON.

use serde::{Deserialize, Serialize};

use super::frame::{Frame, FrameType};
use crate::tools::{ToolCall, ToolResult, ToolSchema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlMessage {
    /// Client: optional explicit handshake. Server: assigns the session id.
    Hello {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client: Option<String>,
    },
    Query {
        id: String,
        text: String,
    },
    Response {
        id: String,
        text: String,
        partial: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    ConfirmRequest {
        id: String,
        call: ToolCall,
        prompt: String,
        deadline_ms: u64,
    },
    ConfirmReply {
        id: String,
        approve: bool,
    },
    ClarifyQuestion {
        id: String,
        question: String,
        deadline_ms: u64,
    },
    ClarifyReply {
        id: String,
        text: String,
    },
    /// `id` is the turn id; `index` the position in the plan.
    ToolCall {
        id: String,
        index: usize,
        call: ToolCall,
    },
    ToolResult {
        id: String,
        index: usize,
        name: String,
        result: ToolResult,
    },
    /// Client: text that bypasses ASR. Server: the ASR output for a segment.
    Transcript {
        id: String,
        text: String,
    },
    Halt {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
    },
    ToolsList {
        session_id: String,
        tools: Vec<ToolSchema>,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        message: String,
    },
}

impl ControlMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ControlMessage::Hello { .. } => "hello",
            ControlMessage::Query { .. } => "query",
            ControlMessage::Response { .. } => "response",
            ControlMessage::ConfirmRequest { .. } => "confirm_request",
            ControlMessage::ConfirmReply { .. } => "confirm_reply",
            ControlMessage::ClarifyQuestion { .. } => "clarify_question",
            ControlMessage::ClarifyReply { .. } => "clarify_reply",
            ControlMessage::ToolCall { .. } => "tool_call",
            ControlMessage::ToolResult { .. } => "tool_result",
            ControlMessage::Transcript { .. } => "transcript",
            ControlMessage::Halt { .. } => "halt",
            ControlMessage::ToolsList { .. } => "tools_list",
            ControlMessage::Error { .. } => "error",
        }
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            ControlMessage::Query { id, .. }
            | ControlMessage::Response { id, .. }
            | ControlMessage::ConfirmRequest { id, .. }
            | ControlMessage::ConfirmReply { id, .. }
            | ControlMessage::ClarifyQuestion { id, .. }
            | ControlMessage::ClarifyReply { id, .. }
            | ControlMessage::ToolCall { id, .. }
            | ControlMessage::ToolResult { id, .. }
            | ControlMessage::Transcript { id, .. } => Some(id),
            ControlMessage::Halt { id } | ControlMessage::Error { id, .. } => id.as_deref(),
            ControlMessage::Hello { .. } | ControlMessage::ToolsList { .. } => None,
        }
    }

    pub fn error(id: Option<&str>, message: impl Into<String>) -> Self {
        ControlMessage::Error {
            id: id.map(str::to_string),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("control messages serialize")
    }

    pub fn to_frame(&self) -> Frame {
        Frame::control(&self.to_json())
    }

    pub fn parse(payload: &[u8]) -> Result<Self, String> {
        let text = std::str::from_utf8(payload).map_err(|e| format!("control payload is not UTF-8: {e}"))?;
        serde_json::from_str(text).map_err(|e| format!("bad control message: {e}"))
    }

    pub fn from_frame(frame: &Frame) -> Result<Self, String> {
        if frame.frame_type != FrameType::Control {
            return Err(format!("expected a control frame, got {:?}", frame.frame_type));
        }
        Self::parse(&frame.payload)
    }
}
