use std::collections::BTreeMap;

use egopilot_core::answer::AnswerConfig;
use egopilot_core::context::{assemble_context, estimate_tokens, partition_chunks, ContextConfig};
use egopilot_core::event_log::{Epoch, Event, EventLog, Modality};
use egopilot_core::harness::synthetic::NUM_OPTIONS;
use egopilot_core::harness::{parse_qa_fixture, run_qa, synthetic_qa, QaItem, QaRun};
use egopilot_core::providers::{KeywordSummarizer, LanguageModel, StubLanguageModel, StubTable};
use proptest::prelude::*;

use super::{run_cases, Outcome};

const WORDS: &[&str] = &[
    "kitchen", "mug", "keys", "door", "laptop", "window", "coffee", "garden", "phone", "table", "book", "stairs",
    "chess", "knight", "rain", "bus", "lunch", "meeting", "the", "on", "picked", "left", "saw", "said",
];
const HOUR: u64 = 3_600_000;

fn sentence() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::sample::select(WORDS), 1..12).prop_map(|w| w.join(" "))
}

fn log() -> impl Strategy<Value = EventLog> {
    proptest::collection::vec((0u64..6 * HOUR, any::<bool>(), sentence()), 0..80).prop_map(|raw| {
        let mut events: Vec<Event> = raw
            .into_iter()
            .map(|(t, spoken, text)| {
                let m = if spoken { Modality::Spoken } else { Modality::Visual };
                Event::new(t, m, "src", &text).unwrap()
            })
            .collect();
        events.sort_by_key(|e| e.timestamp);
        EventLog::from_events(Epoch::from_time_of_day(8, 0, 0), events)
    })
}

fn query() -> impl Strategy<Value = String> {
    let hint = proptest::sample::select(vec![
        "",
        " at 09:15",
        " at 13:40",
        " between 08:30 and 09:45",
        " between 11:00 and 10:00",
        " in the last 20 minutes",
        " in the last 90 seconds",
    ]);
    (sentence(), hint).prop_map(|(s, h)| format!("where is the {s}{h}"))
}

fn config() -> impl Strategy<Value = ContextConfig> {
    (
        proptest::sample::select(vec![600_000u64, 1_800_000, HOUR]),
        1usize..64,
        0.0f64..1.0,
        proptest::sample::select(vec![60_000u64, 900_000, 2 * HOUR]),
    )
        .prop_map(|(chunk, cap, share, window)| ContextConfig {
            chunk_duration_ms: chunk,
            summary_cap_tokens: cap,
            long_term_share: share,
            default_window_ms: window,
            ..ContextConfig::default()
        })
}

/// `used` never exceeds the budget and always measures the rendered text.
pub fn budget_respected(cases: u32) -> Outcome {
    let strategy = (log(), query(), 1usize..800, 0u64..HOUR, config(), 16usize..400);
    run_cases(cases, strategy, |(log, query, budget, ahead, cfg, max_chars)| {
        let now = log.last_timestamp().unwrap_or(0) + ahead;
        let s = KeywordSummarizer { max_chars };
        let b = assemble_context(&query, None, &log, &s, budget, now, &cfg).unwrap();
        prop_assert!(b.used <= budget, "used {} > budget {budget}", b.used);
        prop_assert_eq!(b.used, estimate_tokens(&b.render()));
        let w = b.window.unwrap();
        prop_assert!(w.start <= w.end && w.end <= now);
        // the storyline is the newest events of the window, in order
        let in_window = log.query_range(w);
        prop_assert!(in_window.ends_with(&b.storyline));
        // summaries cover chunks that ended before the window, oldest first
        prop_assert!(b.long_term.iter().all(|c| c.window.end < w.start && c.relevance > 0.0));
        prop_assert!(b.long_term.windows(2).all(|p| p[0].window.start < p[1].window.start));
        Ok(())
    })?;
    Ok(format!("{cases} randomized assemblies, used <= budget in all"))
}

/// Chunks are exactly the non-empty epoch-aligned buckets of the log.
pub fn partition_exact(cases: u32) -> Outcome {
    let strategy = (log(), proptest::sample::select(vec![1u64, 1000, 60_000, 600_000, HOUR, 5 * HOUR, 100 * HOUR]));
    run_cases(cases, strategy, |(log, d)| {
        let mut buckets: BTreeMap<u64, Vec<Event>> = BTreeMap::new();
        for e in log.events() {
            buckets.entry(e.timestamp / d).or_default().push(e.clone());
        }
        let chunks = partition_chunks(&log, d).unwrap();
        prop_assert_eq!(chunks.len(), buckets.len());
        for (c, (k, events)) in chunks.iter().zip(&buckets) {
            prop_assert_eq!(c.window.start, k * d);
            prop_assert_eq!(c.window.end, k * d + d - 1);
            prop_assert_eq!(&c.events, events);
        }
        let flat: Vec<Event> = chunks.into_iter().flat_map(|c| c.events).collect();
        prop_assert_eq!(&flat[..], log.events());
        Ok(())
    })?;
    Ok(format!("{cases} random logs partitioned exactly"))
}

pub struct QaScores {
    pub with_context: f64,
    pub without_context: f64,
    pub from_files: f64,
}

fn accuracy(items: &[QaItem], log: &EventLog, lm: &dyn LanguageModel, use_context: bool) -> f64 {
    let run = QaRun {
        log,
        summarizer: &KeywordSummarizer::default(),
        lm,
        budget: 2048,
        answer: AnswerConfig {
            use_context,
            ..AnswerConfig::default()
        },
        accuracy_floor: 0.0,
    };
    run_qa(items, &run).aggregate
}

pub fn qa_scores() -> QaScores {
    let syn = synthetic_qa(50, 11);
    let lm = StubLanguageModel::new(syn.lm_table.clone());
    let dir = crate::common::fixtures::root().join("qa");
    let read = |f: &str| std::fs::read_to_string(dir.join(f)).unwrap();
    let items = parse_qa_fixture(&read("qa50.jsonl"), "qa50.jsonl").unwrap();
    let log = EventLog::parse(&read("qa50.log"), Epoch::from_time_of_day(8, 0, 0)).unwrap();
    let file_lm = StubLanguageModel::new(StubTable::parse(&read("qa50.lm.tsv")).unwrap());
    QaScores {
        with_context: accuracy(&syn.items, &syn.log, &lm, true),
        without_context: accuracy(&syn.items, &syn.log, &lm, false),
        from_files: accuracy(&items, &log, &file_lm, true),
    }
}

/// Context lifts the synthetic QA set from chance to perfect.
pub fn qa_contrast() -> Outcome {
    let s = qa_scores();
    let chance = 1.0 / NUM_OPTIONS as f64;
    let detail = format!(
        "QA50 {:.2} with context ({:.2} from fixture files), {:.2} without (chance {chance:.2})",
        s.with_context, s.from_files, s.without_context
    );
    if s.with_context == 1.0 && s.from_files == 1.0 && (s.without_context - chance).abs() <= 0.10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
