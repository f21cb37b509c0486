//! Generated QA benchmark where the answer is recoverable only from
//! context: each question's object appears in exactly one narration line,
//! far in the past, and the scripted model answers from that line.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::qa::{QaItem, QaRecord};
use crate::event_log::{Epoch, EventLog, Modality};
use crate::providers::StubTable;

const OBJECTS: &[&str] = &[
    "passport", "umbrella", "stapler", "harmonica", "thermos", "compass", "screwdriver", "wallet",
    "headphones", "sunglasses", "notebook", "charger", "toothbrush", "scissors", "flashlight",
    "calculator", "paintbrush", "kettle", "sketchbook", "whistle", "binoculars", "corkscrew",
    "ladle", "magnifier", "ruler", "spatula", "tweezers", "yoyo", "abacus", "bookmark", "candle",
    "dice", "envelope", "funnel", "glove", "hammer", "inkpot", "jigsaw", "keyring", "lantern",
    "metronome", "napkin", "oven-mitt", "pincushion", "quill", "racket", "snorkel", "tambourine",
    "ukulele", "violin", "wrench", "xylophone", "zipper-pouch", "padlock", "hourglass", "kazoo",
];

const PLACES: &[&str] = &[
    "kitchen counter", "bookshelf", "bedside table", "windowsill", "sofa cushion", "desk drawer",
    "coat rack", "bathroom shelf", "dining table", "garage bench", "hallway cabinet", "laundry basket",
];

const FILLER: &[&str] = &[
    "Walked down the hallway.",
    "Checked the clock on the wall.",
    "Drank a glass of water.",
    "Opened the window for some air.",
    "Sat down for a moment.",
    "Stretched both arms.",
    "Turned on the radio.",
    "Looked out at the street.",
];

/// Stub default without context: always the first option.
pub const BLIND_REPLY: &str = "The answer is A";
pub const NUM_OPTIONS: usize = 4;
const STEP_MS: u64 = 600_000;
const TAIL_MS: u64 = 3 * 3_600_000;

pub struct SyntheticQa {
    pub log: EventLog,
    pub records: Vec<QaRecord>,
    pub items: Vec<QaItem>,
    /// Maps each object's narration line to its gold letter.
    pub lm_table: StubTable,
}

fn line_for(object: &str, place: &str) -> String {
    format!("Noticed the {object} on the {place}.")
}

/// `n` questions (at most the object vocabulary). Gold letters cycle
/// A, B, C, D so a fixed guess scores about 1/4.
pub fn synthetic_qa(n: usize, seed: u64) -> SyntheticQa {
    let n = n.min(OBJECTS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = EventLog::new(Epoch::from_time_of_day(8, 0, 0));
    let mut records = Vec::with_capacity(n);
    let mut lm_table = StubTable::new(BLIND_REPLY);
    for (i, object) in OBJECTS.iter().take(n).enumerate() {
        let t = i as u64 * STEP_MS;
        log.append_raw(t, Modality::Visual, "cam", FILLER[i % FILLER.len()])
            .expect("filler is non-empty");
        let mut places: Vec<&str> = PLACES.to_vec();
        places.shuffle(&mut rng);
        let options: Vec<String> = places[..NUM_OPTIONS].iter().map(|p| p.to_string()).collect();
        let gold = i % NUM_OPTIONS;
        let line = line_for(object, &options[gold]);
        log.append_raw(t + STEP_MS / 2, Modality::Visual, "cam", &line)
            .expect("line is non-empty");
        let letter = (b'A' + gold as u8) as char;
        lm_table.push(line.trim_end_matches('.'), format!("The answer is {letter}"));
        records.push(QaRecord {
            id: Some(format!("syn-{:02}", i + 1)),
            question: format!("Where did I leave the {object}?"),
            options,
            answer: letter.to_string(),
            hint: None,
            now_ms: None,
        });
    }
    let end = n as u64 * STEP_MS;
    let mut t = end;
    while t <= end + TAIL_MS {
        log.append_raw(t, Modality::Visual, "cam", FILLER[(t / STEP_MS) as usize % FILLER.len()])
            .expect("filler is non-empty");
        t += STEP_MS / 2;
    }
    let items = records
        .iter()
        .enumerate()
        .map(|(i, r)| QaItem::from_record(r, i).expect("generated records are valid"))
        .collect();
    SyntheticQa {
        log,
        records,
        items,
        lm_table,
    }
}
