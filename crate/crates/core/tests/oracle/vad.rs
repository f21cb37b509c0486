//! Reference reading of the client audio loop, written directly from the
//! algorithm's pseudocode with durations kept in milliseconds.

#[derive(Clone, Debug)]
pub struct Params {
    pub rate: f64,
    pub chunk: usize,
    pub gain: f64,
    pub theta_start: f64,
    pub theta_barge_in: f64,
    pub t_silence_ms: f64,
    pub t_min_ms: f64,
    pub preroll_ms: f64,
}

impl Params {
    /// Same settings as the crate's config, in this module's units.
    pub fn from_config(cfg: &egopilot_core::audio::VadConfig) -> Self {
        Params {
            rate: cfg.sample_rate as f64,
            chunk: cfg.chunk_samples,
            gain: cfg.gain,
            theta_start: cfg.theta_start,
            theta_barge_in: cfg.theta_barge_in,
            t_silence_ms: cfg.t_silence_ms as f64,
            t_min_ms: cfg.t_min_ms as f64,
            preroll_ms: cfg.preroll_ms as f64,
        }
    }
}

impl Default for Params {
    fn default() -> Self {
        Params {
            rate: 16000.0,
            chunk: 320,
            gain: 5.0,
            theta_start: 0.10,
            theta_barge_in: 0.25,
            t_silence_ms: 700.0,
            t_min_ms: 250.0,
            preroll_ms: 300.0,
        }
    }
}

/// (chunk index, "halt" | "dispatch", dispatched samples)
pub type Ev = (usize, &'static str, Option<usize>);

pub fn run(audio: &[i16], prm: &Params, playing: &dyn Fn(usize) -> bool) -> Vec<Ev> {
    let ring_cap = (prm.preroll_ms * prm.rate / 1000.0) as usize;
    let mut recording = false;
    let mut ring: Vec<i16> = Vec::new();
    let mut seg: Vec<i16> = Vec::new();
    let mut silence_ms = 0.0;
    let mut out = Vec::new();

    for (i, b) in audio.chunks(prm.chunk).enumerate() {
        let gained: Vec<i16> = b
            .iter()
            .map(|&x| {
                let y = (x as f64 * prm.gain).round();
                y.max(-32768.0).min(32767.0) as i16
            })
            .collect();
        let peak = b.iter().map(|&x| (x as i32).abs()).max().unwrap_or(0);
        let a = (prm.gain * peak as f64 / 32768.0).min(1.0);

        ring.extend_from_slice(&gained);
        if ring.len() > ring_cap {
            ring.drain(..ring.len() - ring_cap);
        }
        if playing(i) && a > prm.theta_barge_in {
            out.push((i, "halt", None));
        }
        if !recording {
            if a > prm.theta_start {
                recording = true;
                seg = ring.clone();
                silence_ms = 0.0;
            }
        } else {
            seg.extend_from_slice(&gained);
            if a < prm.theta_start {
                silence_ms += b.len() as f64 * 1000.0 / prm.rate;
                if silence_ms >= prm.t_silence_ms {
                    let duration_ms = seg.len() as f64 * 1000.0 / prm.rate;
                    if duration_ms > prm.t_min_ms {
                        out.push((i, "dispatch", Some(seg.len())));
                    }
                    seg.clear();
                    recording = false;
                    silence_ms = 0.0;
                }
            } else {
                silence_ms = 0.0;
            }
        }
    }
    out
}
