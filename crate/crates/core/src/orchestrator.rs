//! Plan, confirm, execute, synthesize. Plans run strictly in order and
//! stop at the first failure; nothing already done is rolled back.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::clarifier::{
    apply_reply, decide, propose_candidates, score_candidates, ClarifierConfig, ClarifierDecision, ClarifierInput,
    Interpretation,
};
use crate::context::{assemble_context, ContextBundle, ContextConfig};
use crate::event_log::{EventLog, Modality};
use crate::providers::{LanguageModel, Summarizer};
use crate::tools::{validate_args, Allowlist, ToolCall, ToolRegistry, ToolResult, ToolSchema};

pub const DEFAULT_CONFIRM_DEADLINE_MS: u64 = 30_000;
pub const FALLBACK_RESPONSE: &str = "Sorry, I could not put together a response right now.";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

impl Plan {
    pub fn new(calls: Vec<ToolCall>) -> Self {
        Plan { calls, rationale: None }
    }

    pub fn is_empty(&self) -> bool {
        self.calls.is_empty()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlannedCall {
    name: String,
    arguments: serde_json::Map<String, Value>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PlanWire {
    Calls(Vec<PlannedCall>),
    WithRationale {
        calls: Vec<PlannedCall>,
        rationale: Option<String>,
    },
}

/// Parses planner output: a JSON array of `{"name", "arguments"}`
/// objects, or an object `{"calls": [...], "rationale": "..."}`.
pub fn parse_plan(text: &str) -> Result<Plan, String> {
    let wire: PlanWire = serde_json::from_str(text.trim()).map_err(|e| e.to_string())?;
    let (calls, rationale) = match wire {
        PlanWire::Calls(c) => (c, None),
        PlanWire::WithRationale { calls, rationale } => (calls, rationale),
    };
    Ok(Plan {
        calls: calls
            .into_iter()
            .map(|c| ToolCall {
                name: c.name,
                arguments: c.arguments,
            })
            .collect(),
        rationale,
    })
}

pub fn planning_prompt(query: &str, ctx: &ContextBundle, tools: &[ToolSchema]) -> String {
    let schemas = serde_json::to_string_pretty(tools).expect("schemas serialize");
    let context = if ctx.is_empty() {
        "(no context available)".to_string()
    } else {
        ctx.render()
    };
    format!(
        "You coordinate tools for a wearable assistant.\n\
         Available tools (JSON schemas):\n{schemas}\n\
         Context:\n{context}\n\
         Reply with only a JSON array of calls, each {{\"name\": ..., \"arguments\": {{...}}}}, \
         in the order they should run. Reply [] if no tool is needed.\n\
         plan for: {query}"
    )
}

fn repair_prompt(first: &str, error: &str, query: &str) -> String {
    format!(
        "{first}\nYour previous reply could not be parsed as a plan ({error}). \
         Reply with only the JSON array.\nplan for: {query}"
    )
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub plan: Plan,
    /// The first reply failed to parse and a repair was requested.
    pub repaired: bool,
    /// Both attempts failed; the turn answers directly.
    pub fell_back: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parse_errors: Vec<String>,
}

pub fn generate_plan(query: &str, ctx: &ContextBundle, tools: &[ToolSchema], lm: &dyn LanguageModel) -> PlanOutcome {
    let prompt = planning_prompt(query, ctx, tools);
    let mut out = PlanOutcome::default();
    let first = lm.complete(&prompt).map_err(|e| e.to_string()).and_then(|t| parse_plan(&t));
    let err = match first {
        Ok(plan) => {
            out.plan = plan;
            return out;
        }
        Err(e) => e,
    };
    tracing::warn!(error = %err, "plan did not parse, retrying once");
    out.repaired = true;
    out.parse_errors.push(err.clone());
    match lm
        .complete(&repair_prompt(&prompt, &err, query))
        .map_err(|e| e.to_string())
        .and_then(|t| parse_plan(&t))
    {
        Ok(plan) => out.plan = plan,
        Err(e) => {
            tracing::warn!(error = %e, "repaired plan did not parse, answering directly");
            out.parse_errors.push(e);
            out.fell_back = true;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationRequest {
    pub call: ToolCall,
    pub prompt: String,
    pub deadline_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfirmationReply {
    Approved,
    Denied,
    TimedOut,
}

/// The user side of a turn. Both calls block until a reply or the
/// deadline; a missed deadline is `TimedOut` / `None`.
pub trait UserPrompter: Send + Sync {
    fn confirm(&self, request: &ConfirmationRequest) -> ConfirmationReply;
    fn clarify(&self, question: &str, deadline_ms: u64) -> Option<String>;
}

/// Answers every prompt the same way.
#[derive(Debug, Clone, Default)]
pub struct FixedPrompter {
    pub approve: bool,
    pub clarify_reply: Option<String>,
}

impl FixedPrompter {
    pub fn approving() -> Self {
        FixedPrompter {
            approve: true,
            clarify_reply: None,
        }
    }

    pub fn denying() -> Self {
        FixedPrompter::default()
    }
}

impl UserPrompter for FixedPrompter {
    fn confirm(&self, _: &ConfirmationRequest) -> ConfirmationReply {
        if self.approve {
            ConfirmationReply::Approved
        } else {
            ConfirmationReply::Denied
        }
    }

    fn clarify(&self, _: &str, _: u64) -> Option<String> {
        self.clarify_reply.clone()
    }
}

/// Replays queued replies and records what was asked. An exhausted queue
/// behaves like a missed deadline.
#[derive(Debug, Default)]
pub struct ScriptedPrompter {
    confirmations: Mutex<VecDeque<ConfirmationReply>>,
    clarifications: Mutex<VecDeque<String>>,
    asked: Mutex<Vec<String>>,
}

impl ScriptedPrompter {
    pub fn new(confirmations: Vec<ConfirmationReply>, clarifications: Vec<String>) -> Self {
        ScriptedPrompter {
            confirmations: Mutex::new(confirmations.into()),
            clarifications: Mutex::new(clarifications.into()),
            asked: Mutex::new(Vec::new()),
        }
    }

    /// Every confirmation and clarification prompt seen so far.
    pub fn asked(&self) -> Vec<String> {
        self.asked.lock().expect("poisoned").clone()
    }
}

impl UserPrompter for ScriptedPrompter {
    fn confirm(&self, request: &ConfirmationRequest) -> ConfirmationReply {
        self.asked.lock().expect("poisoned").push(request.prompt.clone());
        self.confirmations
            .lock()
            .expect("poisoned")
            .pop_front()
            .unwrap_or(ConfirmationReply::TimedOut)
    }

    fn clarify(&self, question: &str, _: u64) -> Option<String> {
        self.asked.lock().expect("poisoned").push(question.to_string());
        self.clarifications.lock().expect("poisoned").pop_front()
    }
}

/// Hooks for streaming execution progress, e.g. onto the wire.
pub trait ExecutionObserver {
    fn on_tool_call(&self, _index: usize, _call: &ToolCall) {}
    fn on_tool_result(&self, _index: usize, _call: &ToolCall, _result: &ToolResult) {}
}

pub struct NoopObserver;

impl ExecutionObserver for NoopObserver {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub call: ToolCall,
    pub result: ToolResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confirmation: Option<ConfirmationReply>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionContext {
    pub results: Vec<CallRecord>,
    /// Index of the failing call, present only when later calls were skipped.
    pub aborted_at: Option<usize>,
    pub skipped: Vec<ToolCall>,
}

impl ExecutionContext {
    /// Whether any call ended in an error.
    pub fn partial(&self) -> bool {
        self.results.iter().any(|r| !r.result.is_ok())
    }

    pub fn len(&self) -> usize {
        self.results.len() + self.skipped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn render_args(call: &ToolCall) -> String {
    call.arguments
        .iter()
        .map(|(k, v)| match v {
            Value::String(s) => format!("{k}={s}"),
            other => format!("{k}={other}"),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn confirmation_prompt(schema: &ToolSchema, call: &ToolCall) -> String {
    let args = render_args(call);
    if args.is_empty() {
        format!("Shall I run {}? {}", call.name, schema.description)
    } else {
        format!("Shall I run {} ({args})? {}", call.name, schema.description)
    }
}

/// Runs `plan` in order. Side-effecting calls run only after an
/// approval; the first error or refusal skips everything after it.
pub fn execute_plan(
    plan: &Plan,
    registry: &ToolRegistry,
    allowlist: &Allowlist,
    prompter: &dyn UserPrompter,
    observer: &dyn ExecutionObserver,
    confirm_deadline_ms: u64,
) -> ExecutionContext {
    let mut ctx = ExecutionContext::default();
    for (i, call) in plan.calls.iter().enumerate() {
        observer.on_tool_call(i, call);
        let gated = registry.schema(&call.name).filter(|s| {
            s.side_effecting && allowlist.contains(&s.name) && validate_args(s, call).is_ok()
        });
        let mut confirmation = None;
        let result = match gated {
            Some(schema) => {
                let request = ConfirmationRequest {
                    call: call.clone(),
                    prompt: confirmation_prompt(schema, call),
                    deadline_ms: confirm_deadline_ms,
                };
                let reply = prompter.confirm(&request);
                confirmation = Some(reply);
                match reply {
                    ConfirmationReply::Approved => registry.call_tool(allowlist, call),
                    ConfirmationReply::Denied => ToolResult::error("Denied: the user declined this action"),
                    ConfirmationReply::TimedOut => ToolResult::error("ConfirmationTimeout: no reply before the deadline"),
                }
            }
            None => registry.call_tool(allowlist, call),
        };
        observer.on_tool_result(i, call, &result);
        let failed = !result.is_ok();
        ctx.results.push(CallRecord {
            call: call.clone(),
            result,
            confirmation,
        });
        if failed {
            ctx.skipped = plan.calls[i + 1..].to_vec();
            if !ctx.skipped.is_empty() {
                ctx.aborted_at = Some(i);
            }
            break;
        }
    }
    ctx
}

/// `interpreted` is the clarified reading of `query`, when it differs.
pub fn synthesis_prompt(query: &str, interpreted: Option<&str>, ctx: &ContextBundle, exec: &ExecutionContext) -> String {
    let mut s = String::from("You are a wearable assistant. Answer the user briefly and concretely.\n");
    if !ctx.is_empty() {
        s.push_str(&format!("Context:\n{}\n", ctx.render()));
    }
    if let Some(i) = interpreted {
        s.push_str(&format!("Interpreted as: {i}\n"));
    }
    if !exec.results.is_empty() {
        s.push_str("Tool results:\n");
        for (i, r) in exec.results.iter().enumerate() {
            let outcome = if r.result.is_ok() {
                format!("ok {}", r.result.payload)
            } else {
                format!("error {}", r.result.error_detail.as_deref().unwrap_or(""))
            };
            s.push_str(&format!("{}. {} -> {outcome}\n", i + 1, r.call));
        }
    }
    if !exec.skipped.is_empty() {
        s.push_str("Skipped:\n");
        for c in &exec.skipped {
            s.push_str(&format!("- {c}\n"));
        }
    }
    if exec.partial() {
        s.push_str(
            "Some steps failed. Summarize the partial result for the user; do not retry or undo anything.\n",
        );
    }
    s.push_str(&format!("respond to: {query}"));
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClarificationTrace {
    pub candidates: Vec<Interpretation>,
    pub decision: ClarifierDecision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub query: String,
    pub context: ContextBundle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clarification: Option<ClarificationTrace>,
    pub plan: PlanOutcome,
    pub trace: ExecutionContext,
    pub response: String,
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestratorConfig {
    pub budget: usize,
    pub use_context: bool,
    pub context: ContextConfig,
    pub clarifier: ClarifierConfig,
    pub confirm_deadline_ms: u64,
    pub clarify_deadline_ms: u64,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        OrchestratorConfig {
            budget: 2048,
            use_context: true,
            context: ContextConfig::default(),
            clarifier: ClarifierConfig::default(),
            confirm_deadline_ms: DEFAULT_CONFIRM_DEADLINE_MS,
            clarify_deadline_ms: DEFAULT_CONFIRM_DEADLINE_MS,
        }
    }
}

/// Shared, read-only turn handler; sessions call `handle_turn`
/// concurrently.
#[derive(Clone)]
pub struct Orchestrator {
    pub registry: Arc<ToolRegistry>,
    pub allowlist: Allowlist,
    pub lm: Arc<dyn LanguageModel>,
    pub summarizer: Arc<dyn Summarizer>,
    pub config: OrchestratorConfig,
}

impl Orchestrator {
    pub fn new(
        registry: Arc<ToolRegistry>,
        allowlist: Allowlist,
        lm: Arc<dyn LanguageModel>,
        summarizer: Arc<dyn Summarizer>,
        config: OrchestratorConfig,
    ) -> Self {
        Orchestrator {
            registry,
            allowlist,
            lm,
            summarizer,
            config,
        }
    }

    fn context_for(&self, query: &str, log: &EventLog, now: u64) -> ContextBundle {
        if !self.config.use_context {
            return ContextBundle::empty(self.config.budget);
        }
        assemble_context(
            query,
            None,
            log,
            self.summarizer.as_ref(),
            self.config.budget,
            now,
            &self.config.context,
        )
        .unwrap_or_else(|e| {
            tracing::warn!(error = %e, "context assembly failed, continuing without context");
            ContextBundle::empty(self.config.budget)
        })
    }

    /// Runs the gate and returns the query to plan for.
    fn clarify(
        &self,
        query: &str,
        ctx: &ContextBundle,
        tools: &[ToolSchema],
        prompter: &dyn UserPrompter,
    ) -> (String, Option<ClarificationTrace>) {
        let cfg = &self.config.clarifier;
        if !cfg.applies_to(tools.iter().map(|t| t.name.as_str())) {
            return (query.to_string(), None);
        }
        let visual = ctx
            .storyline
            .iter()
            .filter(|e| e.modality == Modality::Visual)
            .cloned()
            .collect();
        let input = ClarifierInput::new(vec![query.to_string()], visual, "");
        let offered = propose_candidates(&input, query, self.lm.as_ref());
        if offered.len() < 2 {
            return (query.to_string(), None);
        }
        let candidates = score_candidates(&input, &offered, self.lm.as_ref());
        let decision = decide(&candidates, cfg);
        let mut trace = ClarificationTrace {
            candidates,
            decision: decision.clone(),
            reply: None,
            resolved: None,
        };
        let effective = match decision {
            ClarifierDecision::Answer { id } => offered[id].clone(),
            ClarifierDecision::Ask { question } => {
                match prompter.clarify(&question, self.config.clarify_deadline_ms) {
                    Some(reply) if !reply.trim().is_empty() => {
                        let updated = apply_reply(&input, &reply, &offered);
                        trace.reply = Some(reply.clone());
                        trace.resolved = updated.resolved.clone();
                        match updated.resolved {
                            Some(p) => p,
                            None => format!("{query} (clarification: {})", reply.trim()),
                        }
                    }
                    _ => query.to_string(),
                }
            }
        };
        (effective, Some(trace))
    }

    pub fn handle_turn(
        &self,
        query: &str,
        log: &EventLog,
        now: u64,
        prompter: &dyn UserPrompter,
        observer: &dyn ExecutionObserver,
    ) -> Turn {
        let context = self.context_for(query, log, now);
        let tools = self.registry.list_tools(&self.allowlist);
        let (planned_for, clarification) = self.clarify(query, &context, &tools, prompter);
        let plan = generate_plan(&planned_for, &context, &tools, self.lm.as_ref());
        let trace = execute_plan(
            &plan.plan,
            &self.registry,
            &self.allowlist,
            prompter,
            observer,
            self.config.confirm_deadline_ms,
        );
        let interpreted = Some(planned_for.as_str()).filter(|p| *p != query);
        let (response, error) = match self.lm.complete(&synthesis_prompt(query, interpreted, &context, &trace)) {
            Ok(text) if !text.trim().is_empty() => (text.trim().to_string(), None),
            Ok(_) => (FALLBACK_RESPONSE.to_string(), Some("empty synthesis".to_string())),
            Err(e) => {
                tracing::warn!(error = %e, "synthesis failed");
                (FALLBACK_RESPONSE.to_string(), Some(e.to_string()))
            }
        };
        Turn {
            query: query.to_string(),
            context,
            clarification,
            plan,
            partial: trace.partial(),
            trace,
            response,
            error,
        }
    }
}
