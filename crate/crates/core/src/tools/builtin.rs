//! Stub tools shipped with the runtime: static lookup tables and small
//! in-memory stores.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Arguments, ParamSpec, ParamType, RegistryError, ToolError, ToolRegistry, ToolSchema};
use crate::board::{fen_decode, BoardTool};
use crate::event_log::Epoch;
use crate::providers::LanguageModel;

/// kcal per 100 g.
const NUTRITION: &[(&str, u32)] = &[
    ("apple", 52),
    ("banana", 89),
    ("bread", 265),
    ("broccoli", 34),
    ("carrot", 41),
    ("chicken", 239),
    ("egg", 155),
    ("milk", 42),
    ("orange", 47),
    ("rice", 130),
];

/// (city, condition, temperature in Celsius)
const WEATHER: &[(&str, &str, f64)] = &[
    ("berlin", "overcast", 12.0),
    ("london", "light rain", 14.0),
    ("new york", "clear", 20.0),
    ("paris", "sunny", 17.0),
    ("shenzhen", "humid, scattered showers", 28.0),
    ("tokyo", "partly cloudy", 22.0),
];

pub const DEFAULT_EVENT_MINUTES: i64 = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarEntry {
    pub id: u64,
    pub title: String,
    pub time: String,
    pub duration_minutes: i64,
}

/// Handles on the mutable state behind the built-in tools.
#[derive(Debug, Clone, Default)]
pub struct BuiltinStores {
    pub calendar: Arc<Mutex<Vec<CalendarEntry>>>,
    pub memos: Arc<Mutex<Vec<String>>>,
}

impl BuiltinStores {
    pub fn calendar_entries(&self) -> Vec<CalendarEntry> {
        self.calendar.lock().expect("calendar poisoned").clone()
    }

    pub fn memo_entries(&self) -> Vec<String> {
        self.memos.lock().expect("memos poisoned").clone()
    }
}

fn text_arg<'a>(args: &'a Arguments, name: &str) -> &'a str {
    args.get(name).and_then(Value::as_str).unwrap_or("")
}

fn lookup_food(food: &str) -> Option<(&'static str, u32)> {
    let key = food.trim().to_lowercase();
    let singular = key.strip_suffix('s').unwrap_or(&key);
    NUTRITION
        .iter()
        .find(|(name, _)| *name == key || *name == singular)
        .copied()
}

pub fn nutrition_schema() -> ToolSchema {
    ToolSchema::new("nutrition.lookup", "Energy content of a common food per 100 g.")
        .param(ParamSpec::required("food", ParamType::Text, "Food name, e.g. apple"))
}

pub fn calendar_schema() -> ToolSchema {
    ToolSchema::new("calendar.add", "Add an event to the user's calendar.")
        .param(ParamSpec::required("title", ParamType::Text, "Event title"))
        .param(ParamSpec::required("time", ParamType::Text, "Start time of day, HH:MM"))
        .param(ParamSpec::optional(
            "duration_minutes",
            ParamType::Integer,
            "Length in minutes, default 30",
        ))
        .side_effecting()
}

pub fn memo_add_schema() -> ToolSchema {
    ToolSchema::new("memo.add", "Save a short note.").param(ParamSpec::required("text", ParamType::Text, "Note text"))
}

pub fn memo_list_schema() -> ToolSchema {
    ToolSchema::new("memo.list", "List saved notes in the order they were added.")
}

pub fn weather_schema() -> ToolSchema {
    ToolSchema::new("weather.lookup", "Current weather for a city.")
        .param(ParamSpec::required("city", ParamType::Text, "City name"))
        .param(ParamSpec::optional(
            "unit",
            ParamType::Enum(vec!["celsius".into(), "fahrenheit".into()]),
            "Temperature unit, default celsius",
        ))
}

pub fn board_schema() -> ToolSchema {
    ToolSchema::new(
        "board.suggest_move",
        "Suggest and explain the best move on the observed board, or on the given FEN.",
    )
    .param(ParamSpec::optional("fen", ParamType::Text, "Position to analyse instead of the camera view"))
}

/// Registers every built-in tool and returns handles on their stores.
pub fn register_builtins(
    reg: &mut ToolRegistry,
    board: Arc<Mutex<BoardTool>>,
    coach: Arc<dyn LanguageModel>,
) -> Result<BuiltinStores, RegistryError> {
    let stores = BuiltinStores::default();

    reg.register(nutrition_schema(), |args: &Arguments| {
        let food = text_arg(args, "food");
        let (name, kcal) = lookup_food(food).ok_or_else(|| ToolError(format!("no nutrition entry for `{food}`")))?;
        Ok(json!({"food": name, "kcal_per_100g": kcal}))
    })?;

    let calendar = stores.calendar.clone();
    reg.register(calendar_schema(), move |args: &Arguments| {
        let title = text_arg(args, "title").trim().to_string();
        let time = text_arg(args, "time").trim().to_string();
        if title.is_empty() {
            return Err(ToolError("event title is empty".into()));
        }
        if time.split(':').count() != 2 || Epoch::parse_time_of_day(&time).is_none() {
            return Err(ToolError(format!("time `{time}` is not HH:MM")));
        }
        let duration = args
            .get("duration_minutes")
            .and_then(Value::as_i64)
            .unwrap_or(DEFAULT_EVENT_MINUTES);
        if duration <= 0 {
            return Err(ToolError(format!("duration {duration} must be positive")));
        }
        let mut cal = calendar.lock().expect("calendar poisoned");
        let entry = CalendarEntry {
            id: cal.len() as u64 + 1,
            title,
            time,
            duration_minutes: duration,
        };
        cal.push(entry.clone());
        Ok(serde_json::to_value(entry).expect("serializable"))
    })?;

    let memos = stores.memos.clone();
    reg.register(memo_add_schema(), move |args: &Arguments| {
        let text = text_arg(args, "text").trim().to_string();
        if text.is_empty() {
            return Err(ToolError("memo text is empty".into()));
        }
        let mut m = memos.lock().expect("memos poisoned");
        m.push(text);
        Ok(json!({"id": m.len(), "count": m.len()}))
    })?;

    let memos = stores.memos.clone();
    reg.register(memo_list_schema(), move |_: &Arguments| {
        Ok(json!({"memos": *memos.lock().expect("memos poisoned")}))
    })?;

    reg.register(weather_schema(), |args: &Arguments| {
        let city = text_arg(args, "city");
        let key = city.trim().to_lowercase();
        let &(name, condition, celsius) = WEATHER
            .iter()
            .find(|(n, _, _)| *n == key)
            .ok_or_else(|| ToolError(format!("no weather data for `{city}`")))?;
        let unit = args.get("unit").and_then(Value::as_str).unwrap_or("celsius");
        let temperature = if unit == "fahrenheit" { celsius * 9.0 / 5.0 + 32.0 } else { celsius };
        Ok(json!({"city": name, "condition": condition, "temperature": temperature, "unit": unit}))
    })?;

    reg.register(board_schema(), move |args: &Arguments| {
        let mut tool = board.lock().expect("board tool poisoned");
        let advice = match args.get("fen").and_then(Value::as_str) {
            Some(fen) => {
                let state = fen_decode(fen).map_err(|e| ToolError(e.to_string()))?;
                tool.suggest_for(&state, coach.as_ref())
            }
            None => tool.suggest(coach.as_ref()),
        }
        .map_err(|e| ToolError(e.to_string()))?;
        Ok(serde_json::to_value(advice).expect("serializable"))
    })?;

    Ok(stores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::{BoardState, EngineConfig, SimCamera};
    use crate::providers::{StubLanguageModel, StubTable};
    use crate::tools::{ToolCall, ToolStatus};

    fn setup() -> (ToolRegistry, BuiltinStores) {
        let start = BoardState::start();
        let board = BoardTool::new(&start, 5, 0.6, EngineConfig::with_depth(1))
            .unwrap()
            .with_camera(SimCamera::new(&start, 0.0, 7));
        let coach: Arc<dyn LanguageModel> = Arc::new(StubLanguageModel::new(StubTable::new("Central control.")));
        let mut reg = ToolRegistry::new();
        let stores = register_builtins(&mut reg, Arc::new(Mutex::new(board)), coach).unwrap();
        (reg, stores)
    }

    #[test]
    fn schemas_in_order() {
        let (reg, _) = setup();
        let names: Vec<&str> = reg.schemas().map(|s| s.name.as_str()).collect();
        assert_eq!(
            names,
            ["nutrition.lookup", "calendar.add", "memo.add", "memo.list", "weather.lookup", "board.suggest_move"]
        );
        let side: Vec<&str> = reg.schemas().filter(|s| s.side_effecting).map(|s| s.name.as_str()).collect();
        assert_eq!(side, ["calendar.add"]);
    }

    #[test]
    fn lookups() {
        let (reg, _) = setup();
        let all = reg.allow_all();
        let r = reg.call_tool(&all, &ToolCall::new("nutrition.lookup", json!({"food": "Apples"})));
        assert_eq!(r.payload, json!({"food": "apple", "kcal_per_100g": 52}));
        let r = reg.call_tool(&all, &ToolCall::new("nutrition.lookup", json!({"food": "granite"})));
        assert_eq!(r.status, ToolStatus::Error);
        let r = reg.call_tool(
            &all,
            &ToolCall::new("weather.lookup", json!({"city": "Paris", "unit": "fahrenheit"})),
        );
        assert_eq!(r.payload["temperature"], json!(62.6));
    }

    #[test]
    fn stores() {
        let (reg, stores) = setup();
        let all = reg.allow_all();
        let r = reg.call_tool(&all, &ToolCall::new("calendar.add", json!({"title": "Dentist", "time": "09:30"})));
        assert!(r.is_ok());
        assert_eq!(stores.calendar_entries()[0].duration_minutes, DEFAULT_EVENT_MINUTES);
        let r = reg.call_tool(&all, &ToolCall::new("calendar.add", json!({"title": "x", "time": "9am"})));
        assert_eq!(r.status, ToolStatus::Error);
        assert_eq!(stores.calendar_entries().len(), 1);

        reg.call_tool(&all, &ToolCall::new("memo.add", json!({"text": "buy milk"})));
        let r = reg.call_tool(&all, &ToolCall::new("memo.list", json!({})));
        assert_eq!(r.payload, json!({"memos": ["buy milk"]}));
    }

    #[test]
    fn board_tool_paths() {
        let (reg, _) = setup();
        let all = reg.allow_all();
        let r = reg.call_tool(&all, &ToolCall::new("board.suggest_move", json!({})));
        assert!(r.is_ok(), "{r:?}");
        assert!(r.payload["fen"].as_str().unwrap().starts_with("rnbqkbnr/"));
        let r = reg.call_tool(
            &all,
            &ToolCall::new("board.suggest_move", json!({"fen": "4k3/8/8/3q4/8/8/8/3RK3 w - - 0 1"})),
        );
        assert_eq!(r.payload["move"], json!("d1d5"));
        let r = reg.call_tool(&all, &ToolCall::new("board.suggest_move", json!({"fen": "nonsense"})));
        assert_eq!(r.status, ToolStatus::Error);
    }
}
