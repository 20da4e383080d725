#![allow(dead_code)]

//! Shared fixtures for integration tests: a synthetic story generator
//! whose endings are diverse enough to separate real matches from chance
//! overlap, and a minimal scripted HTTP server for exercising the remote
//! backends without a network.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use storyend::rng::stream_for;

const NAMES: [&str; 48] = [
    "Mia", "Ben", "Ava", "Leo", "Zoe", "Sam", "Ivy", "Max", "Una", "Kai", "Rex", "Lia", "Dov",
    "Nia", "Eli", "Joy", "Ada", "Gus", "Fay", "Tom", "Ida", "Roy", "Amy", "Ned", "Lou", "Sue",
    "Abe", "Dot", "Hal", "Meg", "Sid", "Ora", "Vic", "Pam", "Jud", "Bea", "Art", "Fern", "Cole",
    "Dawn", "Reed", "June", "Wade", "Hope", "Clay", "Rosa", "Glen", "Tess",
];

const OBJECTS: [&str; 40] = [
    "lantern",
    "ladder",
    "compass",
    "teapot",
    "saddle",
    "anchor",
    "whistle",
    "banjo",
    "carving",
    "bracelet",
    "tapestry",
    "sundial",
    "spyglass",
    "hammock",
    "quilt",
    "flute",
    "barrel",
    "mirror",
    "locket",
    "atlas",
    "easel",
    "kettle",
    "marionette",
    "telescope",
    "paddle",
    "satchel",
    "trellis",
    "mosaic",
    "harp",
    "globe",
    "stencil",
    "chisel",
    "awning",
    "bellows",
    "gavel",
    "loom",
    "pulley",
    "scroll",
    "lyre",
    "weathervane",
];

const ADJECTIVES: [&str; 32] = [
    "copper",
    "dusty",
    "gleaming",
    "crooked",
    "velvet",
    "sturdy",
    "faded",
    "ornate",
    "narrow",
    "polished",
    "rustic",
    "slender",
    "woven",
    "painted",
    "carved",
    "gilded",
    "mended",
    "spotted",
    "striped",
    "tarnished",
    "braided",
    "lacquered",
    "pleated",
    "stitched",
    "burnished",
    "checkered",
    "dappled",
    "embossed",
    "frosted",
    "glazed",
    "hollow",
    "knotted",
];

const PLACES: [&str; 32] = [
    "harbor", "orchard", "market", "foundry", "library", "meadow", "quarry", "station", "bakery",
    "chapel", "cannery", "vineyard", "mill", "plaza", "wharf", "grove", "arcade", "atrium",
    "depot", "gallery", "hangar", "jetty", "kiln", "lodge", "pier", "rotunda", "sawmill",
    "stable", "terrace", "tower", "workshop", "yard",
];

const FEELINGS: [&str; 24] = [
    "proud",
    "relieved",
    "delighted",
    "thankful",
    "hopeful",
    "content",
    "amazed",
    "satisfied",
    "cheerful",
    "grateful",
    "pleased",
    "joyful",
    "serene",
    "giddy",
    "smug",
    "buoyant",
    "radiant",
    "merry",
    "upbeat",
    "sunny",
    "jolly",
    "gleeful",
    "chipper",
    "elated",
];

const VERBS: [&str; 16] = [
    "repaired",
    "polished",
    "traded",
    "painted",
    "measured",
    "restored",
    "wrapped",
    "auctioned",
    "displayed",
    "catalogued",
    "varnished",
    "engraved",
    "balanced",
    "weighed",
    "tested",
    "tuned",
];

const ADVERBS: [&str; 16] = [
    "carefully",
    "quietly",
    "eagerly",
    "slowly",
    "gladly",
    "neatly",
    "boldly",
    "calmly",
    "gently",
    "swiftly",
    "warmly",
    "brightly",
    "deftly",
    "keenly",
    "softly",
    "proudly",
];

/// One synthetic story: title, four body sentences, and an ending drawn
/// from twenty templates over large slot pools. Every ending has at
/// least eight tokens; random pairs of endings share little beyond
/// function words.
pub fn synthetic_story(index: usize, seed: u64) -> [String; 6] {
    let mut rng = stream_for(seed, index as u64);
    let pick = |rng: &mut storyend::rng::SplitMix64, pool: &[&str]| -> String {
        pool[rng.next_below(pool.len())].to_string()
    };
    let n = pick(&mut rng, &NAMES);
    let n2 = pick(&mut rng, &NAMES);
    let o = pick(&mut rng, &OBJECTS);
    let o2 = pick(&mut rng, &OBJECTS);
    let a = pick(&mut rng, &ADJECTIVES);
    let a2 = pick(&mut rng, &ADJECTIVES);
    let p = pick(&mut rng, &PLACES);
    let f = pick(&mut rng, &FEELINGS);
    let v = pick(&mut rng, &VERBS);
    let d = pick(&mut rng, &ADVERBS);
    let t = if rng.next_below(2) == 0 { "." } else { "!" };

    let ending = match rng.next_below(20) {
        0 => format!("{n} {d} carried {n2}'s {a} {o} home{t}"),
        1 => format!("everyone near {p} row admired {n}'s {a} {o}{t}"),
        2 => format!("{n} felt {f} about {n2}'s {a} {o}{t}"),
        3 => format!("later {n} {v} {o} after {a} {o2} alike{t}"),
        4 => format!("one {f} morning {n} returned {d} toward {p} row{t}"),
        5 => format!("{n2}'s {a} {o} rested beside {n}'s {a2} {o2}{t}"),
        6 => format!("{n} mailed {n2} sketches of every {a} {o}{t}"),
        7 => format!("afterward {n} wandered {p} row whenever {n2} {v} anything{t}"),
        8 => format!("{n} {v} and then shelved {n2}'s {o} until dusk{t}"),
        9 => format!("{n2} repaid {n} using {a} {o} tokens{t}"),
        10 => format!("rumors about {n}'s {a} {o} reached distant {p} row{t}"),
        11 => format!("{n} kept {o} nearby and stayed {f}{t}"),
        12 => format!("{f} beyond words, {n} {v} {n2}'s {o}{t}"),
        13 => format!("{n} traded {a} {o} for {n2}'s {a2} {o2}{t}"),
        14 => format!("{p} row crowned {n} its most {f} visitor{t}"),
        15 => format!("{n} hung {n2}'s {a} {o} above {o2} shelves{t}"),
        16 => format!("{d} {n} tucked {o} inside {a} {o2} crates{t}"),
        17 => {
            let stem = v.strip_suffix("ed").unwrap_or(&v);
            format!("{n} taught {n2} to {stem} {a} {o}s{t}")
        }
        18 => format!("{o} collectors from {p} row {v} {n}'s find{t}"),
        _ => format!("{n} named {o2} after {n2}'s {f} laughter{t}"),
    };

    [
        format!("Tale {index}"),
        format!("{n} had wanted a {a} {o} for a long time."),
        format!("On a {a2} morning {n} walked over to the {p}."),
        format!("A {f} keeper showed {n} several {o2} designs there."),
        format!("{n} weighed each option and chose {d}."),
        ending,
    ]
}

fn csv_field(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Corpus CSV text for `n` synthetic stories.
pub fn synthetic_corpus_csv(n: usize, seed: u64) -> String {
    let mut out =
        String::from("storyid,storytitle,sentence1,sentence2,sentence3,sentence4,sentence5\n");
    for i in 0..n {
        let [title, s1, s2, s3, s4, s5] = synthetic_story(i, seed);
        out.push_str(&csv_field(&format!("story-{i:04}")));
        for field in [&title, &s1, &s2, &s3, &s4, &s5] {
            out.push(',');
            out.push_str(&csv_field(field));
        }
        out.push('\n');
    }
    out
}

pub fn write_synthetic_corpus(path: &Path, n: usize, seed: u64) {
    std::fs::write(path, synthetic_corpus_csv(n, seed)).expect("write corpus");
}

#[derive(Debug, Clone)]
pub struct CapturedRequest {
    pub path: String,
    pub authorization: Option<String>,
    pub body: serde_json::Value,
}

/// Scripted HTTP server on a loopback port. Responses are served in
/// order (status, JSON body), falling back to `200 {}` when the script
/// runs out; every received request is captured for assertions.
pub struct MockServer {
    addr: SocketAddr,
    requests: Arc<Mutex<Vec<CapturedRequest>>>,
    stop: Arc<AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    pub fn start(responses: Vec<(u16, String)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        let addr = listener.local_addr().expect("local addr");
        let requests: Arc<Mutex<Vec<CapturedRequest>>> = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let queue = Arc::new(Mutex::new(VecDeque::from(responses)));

        let handle = {
            let requests = requests.clone();
            let stop = stop.clone();
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { break };
                    let _ = serve_one(stream, &requests, &queue);
                }
            })
        };
        Self {
            addr,
            requests,
            stop,
            handle: Some(handle),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub fn requests(&self) -> Vec<CapturedRequest> {
        self.requests.lock().expect("requests lock").clone()
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().expect("requests lock").len()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve_one(
    mut stream: TcpStream,
    requests: &Mutex<Vec<CapturedRequest>>,
    queue: &Mutex<VecDeque<(u16, String)>>,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("/")
        .to_string();

    let mut content_length = 0usize;
    let mut authorization = None;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            match name.to_ascii_lowercase().as_str() {
                "content-length" => content_length = value.trim().parse().unwrap_or(0),
                "authorization" => authorization = Some(value.trim().to_string()),
                _ => {}
            }
        }
    }

    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let body = serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null);
    requests.lock().expect("requests lock").push(CapturedRequest {
        path,
        authorization,
        body,
    });

    let (status, response) = queue
        .lock()
        .expect("queue lock")
        .pop_front()
        .unwrap_or((200, "{}".to_string()));
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        401 => "Unauthorized",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{response}",
        response.len()
    )?;
    stream.flush()
}

pub fn chat_response(content: &str) -> String {
    serde_json::json!({
        "choices": [{ "message": { "role": "assistant", "content": content } }]
    })
    .to_string()
}

pub fn embedding_response(vector: &[f64]) -> String {
    serde_json::json!({ "data": [{ "embedding": vector }] }).to_string()
}
