use std::sync::{Arc, Mutex};

use egopilot_core::orchestrator::{execute_plan, ConfirmationReply, FixedPrompter, NoopObserver, Plan, ScriptedPrompter};
use egopilot_core::tools::{
    validate_args, Allowlist, Arguments, InvocationOutcome, ParamSpec, ParamType, ToolCall, ToolError, ToolRegistry,
    ToolSchema, ValidationError,
};
use proptest::prelude::*;
use serde_json::{json, Map, Value};

use super::{run_cases, Outcome};

pub const WRITE: &str = "t.write";

pub type Executions = Arc<Mutex<Vec<ToolCall>>>;

fn schemas() -> Vec<ToolSchema> {
    use ParamType::*;
    vec![
        ToolSchema::new("t.echo", "Echo text")
            .param(ParamSpec::required("text", Text, ""))
            .param(ParamSpec::optional("n", Integer, "")),
        ToolSchema::new("t.sum", "Add two numbers")
            .param(ParamSpec::required("a", Real, ""))
            .param(ParamSpec::required("b", Real, "")),
        ToolSchema::new("t.flag", "Set a flag")
            .param(ParamSpec::required("on", Boolean, ""))
            .param(ParamSpec::optional("mode", Enum(vec!["fast".into(), "slow".into()]), "")),
        ToolSchema::new(WRITE, "Store a value")
            .param(ParamSpec::required("key", Text, ""))
            .param(ParamSpec::required("value", Integer, ""))
            .side_effecting(),
        ToolSchema::new("t.fail", "Always fails").param(ParamSpec::optional("why", Text, "")),
        ToolSchema::new("t.hidden", "Registered but not allowlisted"),
    ]
}

/// The first four schemas accept well-formed calls and succeed.
const CALLABLE: usize = 4;

/// Registry whose tools log every invocation that reaches them.
pub fn registry() -> (ToolRegistry, Allowlist, Executions) {
    let runs: Executions = Arc::default();
    let mut reg = ToolRegistry::new();
    for schema in schemas() {
        let runs = runs.clone();
        let name = schema.name.clone();
        reg.register(schema, move |args: &Arguments| {
            runs.lock().unwrap().push(ToolCall {
                name: name.clone(),
                arguments: args.clone(),
            });
            if name == "t.fail" {
                return Err(ToolError("injected failure".into()));
            }
            Ok(json!({"ok": true}))
        })
        .unwrap();
    }
    let allow = reg
        .allowlist(reg.schemas().map(|s| s.name.clone()).filter(|n| n != "t.hidden"))
        .unwrap();
    (reg, allow, runs)
}

fn value_for(ty: &ParamType) -> BoxedStrategy<Value> {
    match ty {
        ParamType::Text => "[a-z ]{0,8}".prop_map(Value::from).boxed(),
        ParamType::Integer => any::<i64>().prop_map(Value::from).boxed(),
        ParamType::Real => prop_oneof![(-1e6f64..1e6).prop_map(Value::from), any::<i32>().prop_map(Value::from)].boxed(),
        ParamType::Boolean => any::<bool>().prop_map(Value::from).boxed(),
        ParamType::Enum(v) => proptest::sample::select(v.clone()).prop_map(Value::from).boxed(),
    }
}

/// Values that no reading of `ty` may accept.
fn wrong_for(ty: &ParamType) -> Vec<Value> {
    match ty {
        ParamType::Text => vec![json!(1), json!(1.5), json!(true), Value::Null, json!([]), json!({})],
        ParamType::Integer => vec![json!(1.5), json!("5"), json!(true), Value::Null, json!([1]), json!({"v": 1}), json!(1e20)],
        ParamType::Real => vec![json!("1.0"), json!(true), Value::Null, json!([1.0]), json!({})],
        ParamType::Boolean => vec![json!("true"), json!(1), json!(0), Value::Null, json!([])],
        ParamType::Enum(_) => vec![json!("medium"), json!("FAST"), json!(1), Value::Null, json!(true)],
    }
}

fn call_for(schema: ToolSchema) -> BoxedStrategy<ToolCall> {
    let parts: Vec<BoxedStrategy<Option<(String, Value)>>> = schema
        .params
        .iter()
        .map(|p| {
            let name = p.name.clone();
            let v = value_for(&p.ty).prop_map(move |v| (name.clone(), v));
            if p.required {
                v.prop_map(Some).boxed()
            } else {
                proptest::option::of(v).boxed()
            }
        })
        .collect();
    parts
        .prop_map(move |kv| ToolCall {
            name: schema.name.clone(),
            arguments: kv.into_iter().flatten().collect(),
        })
        .boxed()
}

pub fn valid_call() -> BoxedStrategy<ToolCall> {
    let all = schemas();
    proptest::sample::select((0..CALLABLE).collect::<Vec<_>>())
        .prop_flat_map(move |i| call_for(all[i].clone()))
        .boxed()
}

fn harmless_call() -> BoxedStrategy<ToolCall> {
    valid_call().prop_filter("no confirmation needed", |c| c.name != WRITE).boxed()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    Missing,
    WrongType,
    Unknown,
}

fn kind_of(e: &ValidationError) -> Defect {
    match e {
        ValidationError::MissingRequired { .. } => Defect::Missing,
        ValidationError::TypeMismatch { .. } => Defect::WrongType,
        ValidationError::UnknownParam { .. } => Defect::Unknown,
        ValidationError::WrongTool { .. } => panic!("registry never validates against another schema"),
    }
}

/// A call with exactly one defect, and that defect.
pub fn malformed_call() -> BoxedStrategy<(ToolCall, Defect)> {
    let all = schemas();
    (0..CALLABLE, 0usize..3, any::<prop::sample::Index>(), any::<prop::sample::Index>(), "[a-z]{1,6}")
        .prop_flat_map(move |(i, defect, pick, bad, extra)| {
            let schema = all[i].clone();
            call_for(schema.clone()).prop_map(move |mut call| {
                match defect {
                    0 => {
                        let required: Vec<&ParamSpec> = schema.params.iter().filter(|p| p.required).collect();
                        call.arguments.remove(&pick.get(&required).name);
                        (call, Defect::Missing)
                    }
                    1 => {
                        let p = pick.get(&schema.params);
                        call.arguments.insert(p.name.clone(), bad.get(&wrong_for(&p.ty)).clone());
                        (call, Defect::WrongType)
                    }
                    _ => {
                        call.arguments.insert(format!("x_{extra}"), json!(extra.clone()));
                        (call, Defect::Unknown)
                    }
                }
            })
        })
        .boxed()
}

fn check_malformed((call, defect): (ToolCall, Defect)) -> Result<(), TestCaseError> {
    let (reg, allow, runs) = registry();
    let schema = reg.schema(&call.name).unwrap().clone();
    let err = match validate_args(&schema, &call) {
        Ok(_) => return Err(TestCaseError::fail(format!("accepted {call}"))),
        Err(e) => e,
    };
    prop_assert_eq!(kind_of(&err), defect);

    let r = reg.call_tool(&allow, &call);
    prop_assert!(!r.is_ok());
    prop_assert!(r.error_detail.as_deref().unwrap_or("").starts_with("InvalidArguments"));
    let log = reg.invocation_log();
    prop_assert_eq!(log.len(), 1);
    prop_assert_eq!(&log[0].outcome, &InvocationOutcome::Rejected { error: err });

    // inside a plan the defect aborts the rest, without asking first
    let follow = ToolCall::new("t.echo", json!({"text": "after"}));
    let prompter = ScriptedPrompter::new(vec![ConfirmationReply::Approved; 4], vec![]);
    let exec = execute_plan(
        &Plan::new(vec![call.clone(), follow.clone()]),
        &reg,
        &allow,
        &prompter,
        &NoopObserver,
        1000,
    );
    prop_assert_eq!(exec.results.len(), 1);
    prop_assert!(!exec.results[0].result.is_ok());
    prop_assert_eq!(exec.skipped, vec![follow]);
    prop_assert_eq!(exec.aborted_at, Some(0));
    prop_assert!(prompter.asked().is_empty());
    prop_assert_eq!(reg.invocation_log().len(), 2);
    prop_assert!(runs.lock().unwrap().is_empty(), "a malformed call reached its tool");
    Ok(())
}

/// Every malformed call is rejected before reaching its tool, logged,
/// and aborts the plan it is in.
pub fn malformed_fuzz(cases: u32) -> Outcome {
    run_cases(cases, malformed_call(), check_malformed)?;
    Ok(format!("{cases} malformed calls rejected and logged, none executed"))
}

/// Well-formed calls reach their tool with the exact arguments given.
pub fn no_coercion(cases: u32) -> Outcome {
    run_cases(cases, valid_call(), |call| {
        let (reg, allow, runs) = registry();
        prop_assert!(reg.call_tool(&allow, &call).is_ok());
        prop_assert_eq!(runs.lock().unwrap().clone(), vec![call]);
        Ok(())
    })?;
    Ok(format!("{cases} valid calls passed through unchanged"))
}

fn reply() -> impl Strategy<Value = ConfirmationReply> {
    prop_oneof![
        Just(ConfirmationReply::Approved),
        Just(ConfirmationReply::Denied),
        Just(ConfirmationReply::TimedOut)
    ]
}

/// Side-effecting calls run only right after an approval of that call.
pub fn confirmation_gate(cases: u32) -> Outcome {
    let seen = Arc::new(Mutex::new((0usize, 0usize)));
    let tally = seen.clone();
    let strategy = (
        proptest::collection::vec(valid_call(), 1..8),
        proptest::collection::vec(reply(), 0..8),
        any::<bool>(),
    );
    run_cases(cases, strategy, move |(calls, replies, fixed_deny)| {
        let (reg, allow, runs) = registry();
        let plan = Plan::new(calls);
        let scripted = ScriptedPrompter::new(replies, vec![]);
        let denying = FixedPrompter::denying();
        let prompter: &dyn egopilot_core::orchestrator::UserPrompter =
            if fixed_deny { &denying } else { &scripted };
        let exec = execute_plan(&plan, &reg, &allow, prompter, &NoopObserver, 1000);

        let approved: Vec<ToolCall> = exec
            .results
            .iter()
            .filter(|r| r.call.name == WRITE)
            .filter(|r| r.confirmation == Some(ConfirmationReply::Approved))
            .map(|r| r.call.clone())
            .collect();
        for r in exec.results.iter().filter(|r| r.call.name == WRITE) {
            prop_assert!(r.confirmation.is_some(), "side-effecting call ran unconfirmed");
            let ok = r.confirmation == Some(ConfirmationReply::Approved);
            prop_assert_eq!(r.result.is_ok(), ok);
            let mut t = tally.lock().unwrap();
            t.0 += 1;
            if !ok {
                t.1 += 1;
            }
        }
        let writes: Vec<ToolCall> = runs.lock().unwrap().iter().filter(|c| c.name == WRITE).cloned().collect();
        prop_assert_eq!(writes, approved);
        if fixed_deny {
            prop_assert!(runs.lock().unwrap().iter().all(|c| c.name != WRITE));
        }
        Ok(())
    })?;
    let (total, refused) = *seen.lock().unwrap();
    Ok(format!(
        "{cases} plans, {total} side-effecting calls, {refused} without approval, all {refused} blocked"
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Injected {
    ToolError,
    Malformed,
    NotAllowed,
    Unknown,
    Denied,
    TimedOut,
}

fn injected() -> impl Strategy<Value = Injected> {
    prop_oneof![
        Just(Injected::ToolError),
        Just(Injected::Malformed),
        Just(Injected::NotAllowed),
        Just(Injected::Unknown),
        Just(Injected::Denied),
        Just(Injected::TimedOut),
    ]
}

fn failing_plan() -> impl Strategy<Value = (Vec<ToolCall>, usize, Injected)> {
    (
        proptest::collection::vec(valid_call(), 1..9),
        any::<prop::sample::Index>(),
        injected(),
        malformed_call(),
    )
        .prop_map(|(mut calls, at, how, (bad, _))| {
            let k = at.index(calls.len());
            calls[k] = match how {
                Injected::ToolError => ToolCall::new("t.fail", json!({})),
                Injected::Malformed => bad,
                Injected::NotAllowed => ToolCall::new("t.hidden", json!({})),
                Injected::Unknown => ToolCall::new("t.missing", json!({})),
                Injected::Denied | Injected::TimedOut => ToolCall::new(WRITE, json!({"key": "k", "value": 1})),
            };
            (calls, k, how)
        })
}

/// A failure at step k leaves k + 1 results, skips the rest and runs
/// nothing after it.
pub fn skip_on_failure(cases: u32) -> Outcome {
    run_cases(cases, failing_plan(), |(calls, k, how)| {
        let (reg, allow, runs) = registry();
        // approve every write before the failure, then refuse or go silent
        let mut replies: Vec<ConfirmationReply> = calls[..k]
            .iter()
            .filter(|c| c.name == WRITE)
            .map(|_| ConfirmationReply::Approved)
            .collect();
        if how == Injected::Denied {
            replies.push(ConfirmationReply::Denied);
        }
        let prompter = ScriptedPrompter::new(replies, vec![]);
        let exec = execute_plan(&Plan::new(calls.clone()), &reg, &allow, &prompter, &NoopObserver, 1000);

        prop_assert_eq!(exec.results.len(), k + 1);
        prop_assert_eq!(exec.results.len() + exec.skipped.len(), calls.len());
        prop_assert_eq!(&exec.skipped[..], &calls[k + 1..]);
        prop_assert_eq!(exec.aborted_at, (k + 1 < calls.len()).then_some(k));
        prop_assert!(exec.results[..k].iter().all(|r| r.result.is_ok()));
        prop_assert!(!exec.results[k].result.is_ok());
        prop_assert!(exec.partial());
        let mut want: Vec<ToolCall> = calls[..k].to_vec();
        if how == Injected::ToolError {
            want.push(calls[k].clone());
        }
        prop_assert_eq!(runs.lock().unwrap().clone(), want);
        Ok(())
    })?;
    Ok(format!("{cases} injected-failure plans, results + skipped = plan, nothing ran after a failure"))
}

/// Builds an argument map from pairs, for hand-written cases.
pub fn args(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}
