//! Tool registry: typed schemas, discovery filtered by an allowlist,
//! strict argument validation and a logged invocation boundary.
//!
//! Arguments are never coerced. A call whose arguments do not match the
//! schema exactly is aborted, and the attempt is still appended to the
//! invocation log.

pub mod builtin;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub type Arguments = Map<String, Value>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("tool `{0}` is already registered")]
    DuplicateName(String),
    #[error("tool `{0}` is not registered")]
    UnknownTool(String),
    #[error("invalid schema for `{tool}`: {reason}")]
    InvalidSchema { tool: String, reason: String },
}

#[derive(Debug, Clone, Error, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationError {
    #[error("missing required parameter `{param}`")]
    MissingRequired { param: String },
    #[error("parameter `{param}` expects {expected}, got {got}")]
    TypeMismatch {
        param: String,
        expected: String,
        got: String,
    },
    #[error("unknown parameter `{param}`")]
    UnknownParam { param: String },
    #[error("call names `{got}` but schema is `{expected}`")]
    WrongTool { expected: String, got: String },
}

/// Semantic parameter types. `real` accepts any JSON number, `integer`
/// only numbers without a fractional representation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    Text,
    Integer,
    Real,
    Boolean,
    Enum(Vec<String>),
}

impl ParamType {
    fn name(&self) -> &'static str {
        match self {
            ParamType::Text => "text",
            ParamType::Integer => "integer",
            ParamType::Real => "real",
            ParamType::Boolean => "boolean",
            ParamType::Enum(_) => "enum",
        }
    }

    fn describe(&self) -> String {
        match self {
            ParamType::Enum(values) => format!("enum({})", values.join("|")),
            other => other.name().to_string(),
        }
    }

    fn accepts(&self, value: &Value) -> bool {
        match (self, value) {
            (ParamType::Text, Value::String(_)) => true,
            (ParamType::Integer, Value::Number(n)) => n.is_i64() || n.is_u64(),
            (ParamType::Real, Value::Number(_)) => true,
            (ParamType::Boolean, Value::Bool(_)) => true,
            (ParamType::Enum(values), Value::String(s)) => values.contains(s),
            _ => false,
        }
    }
}

/// JSON kind of a value as reported in mismatch errors.
pub fn value_kind(value: &Value) -> String {
    match value {
        Value::Null => "null".into(),
        Value::Bool(_) => "boolean".into(),
        Value::Number(n) if n.is_i64() || n.is_u64() => "integer".into(),
        Value::Number(_) => "real".into(),
        Value::String(s) => format!("text({s:?})"),
        Value::Array(_) => "array".into(),
        Value::Object(_) => "object".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub ty: ParamType,
    pub required: bool,
    pub description: String,
}

impl ParamSpec {
    pub fn required(name: &str, ty: ParamType, description: &str) -> Self {
        ParamSpec {
            name: name.into(),
            ty,
            required: true,
            description: description.into(),
        }
    }

    pub fn optional(name: &str, ty: ParamType, description: &str) -> Self {
        ParamSpec {
            required: false,
            ..ParamSpec::required(name, ty, description)
        }
    }
}

// Wire form: {"name", "type", "required", "description", "enum"?}
#[derive(Serialize, Deserialize)]
struct WireParam {
    name: String,
    #[serde(rename = "type")]
    ty: String,
    required: bool,
    description: String,
    #[serde(rename = "enum", default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<String>>,
}

impl Serialize for ParamSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        WireParam {
            name: self.name.clone(),
            ty: self.ty.name().into(),
            required: self.required,
            description: self.description.clone(),
            values: match &self.ty {
                ParamType::Enum(v) => Some(v.clone()),
                _ => None,
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParamSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = WireParam::deserialize(d)?;
        let ty = match (w.ty.as_str(), w.values) {
            ("text", None) => ParamType::Text,
            ("integer", None) => ParamType::Integer,
            ("real", None) => ParamType::Real,
            ("boolean", None) => ParamType::Boolean,
            ("enum", Some(v)) => ParamType::Enum(v),
            (t, _) => {
                return Err(serde::de::Error::custom(format!(
                    "bad parameter type `{t}` for `{}`",
                    w.name
                )))
            }
        };
        Ok(ParamSpec {
            name: w.name,
            ty,
            required: w.required,
            description: w.description,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub side_effecting: bool,
}

impl ToolSchema {
    pub fn new(name: &str, description: &str) -> Self {
        ToolSchema {
            name: name.into(),
            description: description.into(),
            params: Vec::new(),
            side_effecting: false,
        }
    }

    pub fn param(mut self, p: ParamSpec) -> Self {
        self.params.push(p);
        self
    }

    pub fn side_effecting(mut self) -> Self {
        self.side_effecting = true;
        self
    }

    fn check(&self) -> Result<(), RegistryError> {
        let bad = |reason: String| RegistryError::InvalidSchema {
            tool: self.name.clone(),
            reason,
        };
        if self.name.trim().is_empty() {
            return Err(bad("empty name".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &self.params {
            if !seen.insert(p.name.as_str()) {
                return Err(bad(format!("duplicate parameter `{}`", p.name)));
            }
            if matches!(&p.ty, ParamType::Enum(v) if v.is_empty()) {
                return Err(bad(format!("enum parameter `{}` has no values", p.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    #[serde(default)]
    pub arguments: Arguments,
}

impl ToolCall {
    pub fn new(name: &str, arguments: Value) -> Self {
        ToolCall {
            name: name.into(),
            arguments: match arguments {
                Value::Object(m) => m,
                _ => Map::new(),
            },
        }
    }
}

impl fmt::Display for ToolCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.name, Value::Object(self.arguments.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub status: ToolStatus,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_detail: Option<String>,
}

impl ToolResult {
    pub fn ok(payload: Value) -> Self {
        ToolResult {
            status: ToolStatus::Ok,
            payload,
            error_detail: None,
        }
    }

    pub fn error(detail: impl Into<String>) -> Self {
        ToolResult {
            status: ToolStatus::Error,
            payload: Value::Null,
            error_detail: Some(detail.into()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ToolStatus::Ok
    }
}

/// Failure reported by a tool implementation.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct ToolError(pub String);

pub trait Tool: Send + Sync {
    /// Receives only argument maps that passed schema validation.
    fn call(&self, args: &Arguments) -> Result<Value, ToolError>;
}

impl<F> Tool for F
where
    F: Fn(&Arguments) -> Result<Value, ToolError> + Send + Sync,
{
    fn call(&self, args: &Arguments) -> Result<Value, ToolError> {
        self(args)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allowlist(BTreeSet<String>);

impl Allowlist {
    pub fn empty() -> Self {
        Allowlist::default()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum InvocationOutcome {
    Ok,
    NotAllowed,
    UnknownTool,
    Rejected { error: ValidationError },
    Failed { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvocationRecord {
    pub seq: u64,
    /// Microseconds since the registry was created.
    pub at_us: u64,
    pub call: ToolCall,
    #[serde(flatten)]
    pub outcome: InvocationOutcome,
}

struct Entry {
    schema: ToolSchema,
    tool: Arc<dyn Tool>,
}

/// Registration happens up front; afterwards the registry is shared
/// read-only and only the invocation log grows.
pub struct ToolRegistry {
    entries: Vec<Entry>,
    index: BTreeMap<String, usize>,
    log: Mutex<Vec<InvocationRecord>>,
    created: Instant,
}

impl Default for ToolRegistry {
    fn default() -> Self {
        ToolRegistry::new()
    }
}

impl fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToolRegistry")
            .field("tools", &self.index.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl ToolRegistry {
    pub fn new() -> Self {
        ToolRegistry {
            entries: Vec::new(),
            index: BTreeMap::new(),
            log: Mutex::new(Vec::new()),
            created: Instant::now(),
        }
    }

    pub fn register(&mut self, schema: ToolSchema, tool: impl Tool + 'static) -> Result<(), RegistryError> {
        self.register_arc(schema, Arc::new(tool))
    }

    pub fn register_arc(&mut self, schema: ToolSchema, tool: Arc<dyn Tool>) -> Result<(), RegistryError> {
        schema.check()?;
        if self.index.contains_key(&schema.name) {
            return Err(RegistryError::DuplicateName(schema.name));
        }
        self.index.insert(schema.name.clone(), self.entries.len());
        self.entries.push(Entry { schema, tool });
        Ok(())
    }

    pub fn schema(&self, name: &str) -> Option<&ToolSchema> {
        self.index.get(name).map(|&i| &self.entries[i].schema)
    }

    /// All registered schemas in registration order.
    pub fn schemas(&self) -> impl Iterator<Item = &ToolSchema> {
        self.entries.iter().map(|e| &e.schema)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Allowlist of exactly `names`; each must be registered.
    pub fn allowlist<I, S>(&self, names: I) -> Result<Allowlist, RegistryError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for n in names {
            let n = n.as_ref();
            if !self.index.contains_key(n) {
                return Err(RegistryError::UnknownTool(n.to_string()));
            }
            set.insert(n.to_string());
        }
        Ok(Allowlist(set))
    }

    pub fn allow_all(&self) -> Allowlist {
        Allowlist(self.index.keys().cloned().collect())
    }

    /// Allowlisted schemas in registration order.
    pub fn list_tools(&self, allowlist: &Allowlist) -> Vec<ToolSchema> {
        self.schemas()
            .filter(|s| allowlist.contains(&s.name))
            .cloned()
            .collect()
    }

    pub fn call_tool(&self, allowlist: &Allowlist, call: &ToolCall) -> ToolResult {
        if !allowlist.contains(&call.name) {
            self.record(call, InvocationOutcome::NotAllowed);
            return ToolResult::error(format!("NotAllowed: `{}` is not on the allowlist", call.name));
        }
        let Some(&i) = self.index.get(&call.name) else {
            self.record(call, InvocationOutcome::UnknownTool);
            return ToolResult::error(format!("UnknownTool: `{}`", call.name));
        };
        let entry = &self.entries[i];
        let args = match validate_args(&entry.schema, call) {
            Ok(a) => a,
            Err(error) => {
                let detail = format!("InvalidArguments: {error}");
                self.record(call, InvocationOutcome::Rejected { error });
                return ToolResult::error(detail);
            }
        };
        let outcome = catch_unwind(AssertUnwindSafe(|| entry.tool.call(&args)));
        match outcome {
            Ok(Ok(payload)) => {
                self.record(call, InvocationOutcome::Ok);
                ToolResult::ok(payload)
            }
            Ok(Err(e)) => {
                self.record(call, InvocationOutcome::Failed { detail: e.0.clone() });
                ToolResult::error(e.0)
            }
            Err(panic) => {
                let detail = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "tool panicked".into());
                self.record(call, InvocationOutcome::Failed { detail: detail.clone() });
                ToolResult::error(detail)
            }
        }
    }

    fn record(&self, call: &ToolCall, outcome: InvocationOutcome) {
        let mut log = self.log.lock().expect("invocation log poisoned");
        let rec = InvocationRecord {
            seq: log.len() as u64,
            at_us: self.created.elapsed().as_micros() as u64,
            call: call.clone(),
            outcome,
        };
        tracing::debug!(tool = %rec.call.name, outcome = ?rec.outcome, "tool invocation");
        log.push(rec);
    }

    pub fn invocation_log(&self) -> Vec<InvocationRecord> {
        self.log.lock().expect("invocation log poisoned").clone()
    }

    pub fn invocation_count(&self) -> usize {
        self.log.lock().expect("invocation log poisoned").len()
    }
}

/// Checks `call` against `schema` without altering any value.
pub fn validate_args(schema: &ToolSchema, call: &ToolCall) -> Result<Arguments, ValidationError> {
    if call.name != schema.name {
        return Err(ValidationError::WrongTool {
            expected: schema.name.clone(),
            got: call.name.clone(),
        });
    }
    if let Some(unknown) = call
        .arguments
        .keys()
        .find(|k| !schema.params.iter().any(|p| &p.name == *k))
    {
        return Err(ValidationError::UnknownParam {
            param: unknown.clone(),
        });
    }
    for p in &schema.params {
        match call.arguments.get(&p.name) {
            None if p.required => {
                return Err(ValidationError::MissingRequired {
                    param: p.name.clone(),
                })
            }
            None => {}
            Some(v) if !p.ty.accepts(v) => {
                return Err(ValidationError::TypeMismatch {
                    param: p.name.clone(),
                    expected: p.ty.describe(),
                    got: value_kind(v),
                })
            }
            Some(_) => {}
        }
    }
    Ok(call.arguments.clone())
}
