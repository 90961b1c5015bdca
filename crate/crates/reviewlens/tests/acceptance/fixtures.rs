//! Synthetic inputs for the acceptance checks.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use reviewlens_core::topics::TopicDoc;

struct Theme {
    sentences: &'static [&'static str],
    /// (noun, verb surface, verb lemma) for the parsed opening sentence.
    subject: (&'static str, &'static str, &'static str),
    ratings: &'static [f64],
}

const THEMES: [Theme; 5] = [
    Theme {
        sentences: &[
            "the app crashes when i open the camera",
            "it keeps crashing after the update",
            "crash on startup every single time",
            "the app freezes then crashes",
        ],
        subject: ("app", "crashes", "crash"),
        ratings: &[1.0, 1.0, 2.0],
    },
    Theme {
        sentences: &[
            "battery drain is terrible since the update",
            "this app drains my battery fast",
            "huge battery drain overnight",
            "battery drain makes it useless",
        ],
        subject: ("battery", "drains", "drain"),
        ratings: &[1.0, 2.0, 2.0],
    },
    Theme {
        sentences: &[
            "cannot login with my account",
            "login fails with an error message",
            "the login screen keeps loading",
            "login error again today",
        ],
        subject: ("login", "fails", "fail"),
        ratings: &[1.0, 2.0, 3.0],
    },
    Theme {
        sentences: &[
            "love the new design",
            "the new design looks clean",
            "great design and smooth scrolling",
            "clean design great colors",
        ],
        subject: ("design", "rocks", "rock"),
        ratings: &[4.0, 5.0, 5.0],
    },
    Theme {
        sentences: &[
            "videos load slowly and buffer",
            "video playback stutters on wifi",
            "the video player is great",
            "video quality is awesome",
        ],
        subject: ("video", "lags", "lag"),
        ratings: &[2.0, 3.0, 4.0],
    },
];

const REGIONS: [&str; 4] = ["US", "GB", "SG", "IN"];
const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

/// Review dump and aligned CoNLL-U sidecar. Each version favours a
/// different mix of themes; about a third of the reviews open with a parsed
/// "The <noun> <verb>." sentence.
pub fn app_corpus(rng: &mut ChaCha8Rng, versions: usize, per_version: usize) -> (String, String) {
    let mut reviews = String::new();
    let mut conllu = String::new();
    let mut line_no = 0;
    for v in 0..versions {
        for _ in 0..per_version {
            line_no += 1;
            let theme = if rng.random_bool(0.6) {
                &THEMES[(v + rng.random_range(0..2)) % THEMES.len()]
            } else {
                THEMES.choose(rng).unwrap()
            };
            let mut sentences: Vec<String> = Vec::new();
            if rng.random_bool(0.35) {
                let (noun, verb, lemma) = theme.subject;
                sentences.push(format!("The {noun} {verb}"));
                conllu.push_str(&format!(
                    "# review_id = {line_no}\n\
                     1\tThe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n\
                     2\t{noun}\t{noun}\tNOUN\t_\t_\t3\tnsubj\t_\t_\n\
                     3\t{verb}\t{lemma}\tVERB\t_\t_\t0\troot\t_\t_\n\
                     4\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_\n\n"
                ));
            }
            for _ in 0..rng.random_range(1..=3) {
                sentences.push(capitalize(theme.sentences.choose(rng).unwrap()));
            }
            let text = sentences.join(". ") + if rng.random_bool(0.5) { "!" } else { "." };
            let rating = *theme.ratings.choose(rng).unwrap();
            let month = MONTHS[(v * 2 + rng.random_range(0..2)) % 12];
            reviews.push_str(&format!(
                "{rating:?}******{text}******{month} {}, 2021******3.{v}******{}\n",
                rng.random_range(1..=28),
                REGIONS.choose(rng).unwrap()
            ));
        }
    }
    (reviews, conllu)
}

const CLUSTER_A: [&str; 10] = ["crash", "freez", "launch", "bug", "error", "load", "fail", "stuck", "close", "reboot"];
const CLUSTER_B: [&str; 10] = ["design", "color", "theme", "font", "layout", "icon", "menu", "button", "dark", "style"];

/// `n` documents of `len` tokens, alternating between two disjoint
/// vocabularies.
pub fn two_cluster(rng: &mut ChaCha8Rng, n: usize, len: usize) -> (Vec<TopicDoc>, [&'static [&'static str]; 2]) {
    let docs = (0..n)
        .map(|i| {
            let words: &[&str] = if i % 2 == 0 { &CLUSTER_A } else { &CLUSTER_B };
            TopicDoc {
                review_id: i + 1,
                tokens: (0..len).map(|_| words.choose(rng).unwrap().to_string()).collect(),
            }
        })
        .collect();
    (docs, [&CLUSTER_A, &CLUSTER_B])
}

const QUIET: [&[&str]; 3] = [
    &["crash", "freez", "launch", "bug", "error", "stuck", "reboot", "close"],
    &["design", "color", "theme", "font", "layout", "icon", "menu", "dark"],
    &["login", "password", "account", "email", "verifi", "code", "sign", "reset"],
];
const BURST: &[&str] = &["subscript", "price", "charg", "refund", "payment", "bill", "money", "trial"];

fn theme_docs(rng: &mut ChaCha8Rng, first_id: usize, n: usize, words: &[&str]) -> Vec<TopicDoc> {
    (0..n)
        .map(|i| TopicDoc {
            review_id: first_id + i,
            tokens: (0..20).map(|_| words.choose(rng).unwrap().to_string()).collect(),
        })
        .collect()
}

/// Three quiet versions of evenly mixed themes, then a version that adds a
/// 200-review burst on a vocabulary never seen before.
pub fn burst_versions(rng: &mut ChaCha8Rng) -> Vec<Vec<TopicDoc>> {
    let mut versions = Vec::new();
    let mut next_id = 1;
    for v in 0..4 {
        let mut docs = Vec::new();
        for words in QUIET {
            docs.extend(theme_docs(rng, next_id, 100, words));
            next_id += 100;
        }
        if v == 3 {
            docs.extend(theme_docs(rng, next_id, 200, BURST));
            next_id += 200;
        }
        versions.push(docs);
    }
    versions
}
