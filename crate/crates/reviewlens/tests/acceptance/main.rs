//! Acceptance checks. Runs without the libtest harness and prints one
//! `PASS`/`FAIL` line per criterion; exits non-zero if any fails.

mod fixtures;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reviewlens::project::export_document;
use reviewlens_core::analytics::{
    priority_order, prioritize, river_width, search, RiverOrientation, ReviewQuery,
};
use reviewlens_core::embedding::{pair_gradient, pair_loss, train_sgns, EmbeddingModel};
use reviewlens_core::ingest::{format_review_line, group_by_version, parse_review_line, parse_reviews, RawReview, Version};
use reviewlens_core::opinion::{extract_pairs, parse_conllu, Relation};
use reviewlens_core::pipeline::{run_pipeline, PipelineInputs, ProjectConfig, Snapshot, BUILTIN_SEEDS};
use reviewlens_core::preprocess::{clean_text, porter_stem, preprocess_review, tokenize_and_normalize};
use reviewlens_core::sentiment::{add_user_seeds, label_of, load_base_seeds, Scorer, SeedLexicon};
use reviewlens_core::topics::{detect_emerging, fit_version, TopicConfig, TopicState, TopWord, TopicSummary};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_secs {
        Ok(())
    } else {
        Err(format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64()))
    }
}

fn format_fidelity() -> Check {
    let start = Instant::now();
    let line = "1.0******Pls fix this. The last update fails to load and play video.******Mar 29, 2017******12.11******SG";
    let r = parse_review_line(line, 1).map_err(|e| e.to_string())?;
    ensure!(r.rating == 1.0, "rating {}", r.rating);
    ensure!(r.text == "Pls fix this. The last update fails to load and play video.", "text {:?}", r.text);
    ensure!(r.post_date == NaiveDate::from_ymd_opt(2017, 3, 29).unwrap(), "date {}", r.post_date);
    ensure!(r.version.as_str() == "12.11", "version {}", r.version);
    ensure!(r.region == "SG", "region {}", r.region);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let alphabet: Vec<char> = (' '..='~').collect();
    for i in 0..10_000 {
        let text: String = loop {
            let len = rng.random_range(1..80);
            let t: String = (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
            if !t.trim().is_empty() && !t.contains("******") {
                break t;
            }
        };
        let segments = rng.random_range(1..=4);
        let version = (0..segments)
            .map(|_| rng.random_range(0..200u32).to_string())
            .collect::<Vec<_>>()
            .join(".");
        let original = RawReview {
            rating: if rng.random_bool(0.5) {
                rng.random_range(1..=5) as f64
            } else {
                rng.random_range(1.0..=5.0)
            },
            text,
            post_date: NaiveDate::from_ymd_opt(rng.random_range(2008..2030), rng.random_range(1..=12), rng.random_range(1..=28))
                .unwrap(),
            version: Version::parse(&version).unwrap(),
            region: (0..2).map(|_| rng.random_range(b'A'..=b'Z') as char).collect(),
            review_id: i + 1,
        };
        let back = parse_review_line(&format_review_line(&original), i + 1).map_err(|e| format!("{e} on {original:?}"))?;
        ensure!(back == original, "round trip changed {original:?} into {back:?}");
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("example exact, 10000 round trips, {:.3}s", start.elapsed().as_secs_f64()))
}

fn preprocessing() -> Check {
    let start = Instant::now();
    ensure!(clean_text("suuuuper") == "super", "suuuuper -> {:?}", clean_text("suuuuper"));
    let t = tokenize_and_normalize("very very annoying");
    ensure!(t == ["very", "annoying"], "very very annoying -> {t:?}");

    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures");
    let voc = std::fs::read_to_string(dir.join("porter_voc.txt")).map_err(|e| e.to_string())?;
    let out = std::fs::read_to_string(dir.join("porter_output.txt")).map_err(|e| e.to_string())?;
    let mut total = 0;
    let mut wrong = Vec::new();
    for (w, expected) in voc.lines().zip(out.lines()) {
        total += 1;
        if porter_stem(w) != expected {
            wrong.push(w.to_string());
        }
    }
    ensure!(total == 23_531, "vocabulary has {total} entries");
    ensure!(wrong.is_empty(), "{} mismatches, first {:?}", wrong.len(), &wrong[..wrong.len().min(5)]);
    within(start.elapsed(), 5.0)?;
    Ok(format!("examples hold, Porter {total}/{total}, {:.3}s", start.elapsed().as_secs_f64()))
}

const PARSED_EXAMPLES: &str = "\
# text = This app crashed on launch.
1\tThis\tthis\tDET\t_\t_\t2\tdet\t_\t_
2\tapp\tapp\tNOUN\t_\t_\t3\tnsubj\t_\t_
3\tcrashed\tcrash\tVERB\t_\t_\t0\troot\t_\t_
4\ton\ton\tADP\t_\t_\t5\tcase\t_\t_
5\tlaunch\tlaunch\tNOUN\t_\t_\t3\tobl\t_\t_
6\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_

# text = I dislike the app.
1\tI\tI\tPRON\t_\t_\t2\tnsubj\t_\t_
2\tdislike\tdislike\tVERB\t_\t_\t0\troot\t_\t_
3\tthe\tthe\tDET\t_\t_\t4\tdet\t_\t_
4\tapp\tapp\tNOUN\t_\t_\t2\tobj\t_\t_
5\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_

# text = Book the cheapest flight.
1\tBook\tbook\tVERB\t_\t_\t0\troot\t_\t_
2\tthe\tthe\tDET\t_\t_\t4\tdet\t_\t_
3\tcheapest\tcheap\tADJ\t_\t_\t4\tamod\t_\t_
4\tflight\tflight\tNOUN\t_\t_\t1\tobj\t_\t_
5\t.\t.\tPUNCT\t_\t_\t1\tpunct\t_\t_

# text = it is so slow and it glitches up
1\tit\tit\tPRON\t_\t_\t4\tnsubj\t_\t_
2\tis\tbe\tAUX\t_\t_\t4\tcop\t_\t_
3\tso\tso\tADV\t_\t_\t4\tadvmod\t_\t_
4\tslow\tslow\tADJ\t_\t_\t0\troot\t_\t_
5\tand\tand\tCCONJ\t_\t_\t7\tcc\t_\t_
6\tit\tit\tPRON\t_\t_\t7\tnsubj\t_\t_
7\tglitches\tglitch\tVERB\t_\t_\t4\tconj\t_\t_
8\tup\tup\tADP\t_\t_\t7\tcompound:prt\t_\t_

";

fn opinion_extraction() -> Check {
    use Relation::*;
    let sentences = parse_conllu(PARSED_EXAMPLES).map_err(|e| e.to_string())?;
    ensure!(sentences.len() == 4, "{} sentences parsed", sentences.len());
    let expected: [&[(&str, &str, Relation)]; 4] = [
        &[("app", "crash", NounOfSubject)],
        &[("app", "dislik", DirectObject)],
        &[("flight", "cheap", AdjectiveModifier), ("flight", "book", DirectObject)],
        &[("it", "slow", NounOfSubject), ("it", "glitch", NounOfSubject)],
    ];
    for (s, want) in sentences.iter().zip(expected) {
        let got: Vec<(&str, &str, Relation)> = extract_pairs(&s.tokens)
            .iter()
            .map(|p| (p.aspect.as_str(), p.opinion.as_str(), p.relation))
            .collect::<Vec<_>>()
            .into_iter()
            .map(|(a, o, r)| (leak(a), leak(o), r))
            .collect();
        ensure!(got == want, "expected {want:?}, got {got:?}");
    }
    Ok("4 hand-parsed sentences give exactly the expected pairs".into())
}

fn leak(s: &str) -> &'static str {
    Box::leak(s.to_string().into_boxed_str())
}

fn seeds(pos: &[&str], neg: &[&str]) -> SeedLexicon {
    let mut text = String::new();
    for p in pos {
        text.push_str(&format!("{p}\tpositive\n"));
    }
    for n in neg {
        text.push_str(&format!("{n}\tnegative\n"));
    }
    load_base_seeds(&text).unwrap().0
}

/// Word score recomputed from raw vectors: mean cosine to the negative seeds
/// minus mean cosine to the positive seeds, clamped.
fn score_oracle(w: &[f64], pos: &[Vec<f64>], neg: &[Vec<f64>]) -> f64 {
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        d / (na * nb)
    };
    let mean = |s: &[Vec<f64>]| s.iter().map(|v| cos(w, v)).sum::<f64>() / s.len() as f64;
    (mean(neg) - mean(pos)).clamp(-1.0, 1.0)
}

fn sentiment_scores() -> Check {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let lex = seeds(&["p"], &["n"]);
    for (v, want) in [([1.0, 0.0], -1.0), ([0.0, 1.0], 1.0), ([h, h], 0.0)] {
        let model = EmbeddingModel::from_rows(vec![("w", v.to_vec()), ("p", vec![1.0, 0.0]), ("n", vec![0.0, 1.0])])
            .map_err(|e| e.to_string())?;
        let s = Scorer::new(&model, &lex).map_err(|e| e.to_string())?.score("w").map_err(|e| e.to_string())?;
        ensure!((s.score - want).abs() <= 1e-12, "v={v:?}: score {} want {want}", s.score);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0usize;
    for _ in 0..1000 {
        let dim = rng.random_range(2..=8);
        let n_words = rng.random_range(8..=16);
        let words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
        let mut rows: Vec<(String, Vec<f64>)> = words
            .iter()
            .map(|w| (w.clone(), (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let n_pos = rng.random_range(1..=3);
        let n_neg = rng.random_range(1..=3);
        let pos: Vec<&str> = words[..n_pos].iter().map(String::as_str).collect();
        let neg: Vec<&str> = words[n_pos..n_pos + n_neg].iter().map(String::as_str).collect();
        let lex = seeds(&pos, &neg);
        let model = EmbeddingModel::from_rows(rows.clone()).map_err(|e| e.to_string())?;
        let scorer = Scorer::new(&model, &lex).map_err(|e| e.to_string())?;
        let scaled = model.scaled(rng.random_range(0.01..100.0));
        let scaled_scorer = Scorer::new(&scaled, &lex).map_err(|e| e.to_string())?;
        let pos_v: Vec<Vec<f64>> = rows[..n_pos].iter().map(|r| r.1.clone()).collect();
        let neg_v: Vec<Vec<f64>> = rows[n_pos..n_pos + n_neg].iter().map(|r| r.1.clone()).collect();

        for w in &words {
            let s = scorer.score(w).map_err(|e| e.to_string())?;
            ensure!((-1.0..=1.0).contains(&s.score), "score {} out of bounds", s.score);
            ensure!(label_of(s.score) == s.label, "label mismatch");
            let oracle = score_oracle(model.vector(w).unwrap(), &pos_v, &neg_v);
            ensure!((s.score - oracle).abs() <= 1e-12, "{w}: {} vs oracle {oracle}", s.score);
            let t = scaled_scorer.score(w).map_err(|e| e.to_string())?;
            ensure!((s.score - t.score).abs() <= 1e-12, "scaling moved {w} from {} to {}", s.score, t.score);
            ensure!(s.label == t.label || (s.score * 4.0).fract().abs() < 1e-9, "scaling changed the label of {w}");
            checked += 1;
        }

        // Pull one negative seed towards the scored word: cos(w, n) rises and
        // nothing else changes, so S(w) must not fall.
        let target = n_pos + n_neg + rng.random_range(0..n_words - n_pos - n_neg);
        let wv = rows[target].1.clone();
        let wn = wv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let before = scorer.score(&words[target]).map_err(|e| e.to_string())?.score;
        let seed = n_pos + rng.random_range(0..n_neg);
        let step = rng.random_range(0.01..2.0);
        for (x, y) in rows[seed].1.iter_mut().zip(&wv) {
            *x += step * y / wn;
        }
        let moved = EmbeddingModel::from_rows(rows).map_err(|e| e.to_string())?;
        let after = Scorer::new(&moved, &lex)
            .map_err(|e| e.to_string())?
            .score(&words[target])
            .map_err(|e| e.to_string())?
            .score;
        ensure!(after >= before - 1e-15, "moving a negative seed closer lowered S from {before} to {after}");
    }
    Ok(format!("3 examples to 1e-12; bounds, oracle, scale invariance and monotonicity on 1000 models ({checked} words)"))
}

fn sgns_gradient() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dim = rng.random_range(5..=50);
        let k = rng.random_range(1..=5);
        let vec_ = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.random_range(-0.8..0.8)).collect() };
        let c = vec_(&mut rng);
        let o = vec_(&mut rng);
        let negs: Vec<Vec<f64>> = (0..k).map(|_| vec_(&mut rng)).collect();
        let loss = |c: &[f64], o: &[f64], negs: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
            pair_loss(c, o, &refs)
        };
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = pair_gradient(&c, &o, &refs);

        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for i in 0..dim {
            let (mut p, mut m) = (c.clone(), c.clone());
            p[i] += eps;
            m[i] -= eps;
            numeric.push((loss(&p, &o, &negs) - loss(&m, &o, &negs)) / (2.0 * eps));
            analytic.push(g.center[i]);
        }
        for i in 0..dim {
            let (mut p, mut m) = (o.clone(), o.clone());
            p[i] += eps;
            m[i] -= eps;
            numeric.push((loss(&c, &p, &negs) - loss(&c, &m, &negs)) / (2.0 * eps));
            analytic.push(g.context[i]);
        }
        for j in 0..k {
            for i in 0..dim {
                let (mut p, mut m) = (negs.clone(), negs.clone());
                p[j][i] += eps;
                m[j][i] -= eps;
                numeric.push((loss(&c, &o, &p) - loss(&c, &o, &m)) / (2.0 * eps));
                analytic.push(g.negatives[j][i]);
            }
        }
        let diff = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
        let rel = diff / scale.max(1e-300);
        worst = worst.max(rel);
    }
    ensure!(worst < 1e-4, "worst relative error {worst:e}");
    within(start.elapsed(), 10.0)?;
    Ok(format!("100 triples, worst relative error {worst:.2e}, {:.3}s", start.elapsed().as_secs_f64()))
}

fn normalized(s: &TopicState) -> Result<(), String> {
    for (name, rows) in [("phi", &s.phi), ("theta", &s.theta)] {
        for row in rows.iter() {
            let sum: f64 = row.iter().sum();
            ensure!((sum - 1.0).abs() <= 1e-9, "{name} row sums to {sum}");
            ensure!(row.iter().all(|&x| x >= 0.0), "{name} has a negative entry");
        }
    }
    Ok(())
}

const TOPIC_ITERATIONS: usize = 200;

fn topic_model() -> Check {
    let start = Instant::now();
    let mut pure_runs = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (docs, clusters) = fixtures::two_cluster(&mut rng, 500, 20);
        let cfg = TopicConfig {
            k: 2,
            iterations: TOPIC_ITERATIONS,
            seed,
            ..TopicConfig::default()
        };
        let s = fit_version(&docs, 0, &[], &cfg).map_err(|e| e.to_string())?;
        normalized(&s)?;
        let pure = (0..2).all(|k| {
            let top: BTreeSet<String> = s.top_words(k, 10).into_iter().map(|(w, _)| w).collect();
            clusters
                .iter()
                .any(|c| top.iter().all(|w| c.contains(&w.as_str())))
        });
        pure_runs += usize::from(pure);
        if seed < 3 {
            let again = fit_version(&docs, 0, &[], &cfg).map_err(|e| e.to_string())?;
            ensure!(again.phi == s.phi && again.theta == s.theta, "seed {seed}: refit differs");
        }
    }
    ensure!(pure_runs >= 95, "purity 1.0 in only {pure_runs}/100 runs");
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "K=2, 500 docs, {TOPIC_ITERATIONS} sweeps: pure in {pure_runs}/100 runs, normalized within 1e-9, deterministic, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

/// One more topic than quiet themes, so the burst has room to land.
const BURST_K: usize = 4;
/// Pseudo-counts comparable to a theme's token mass, so topic indices stay
/// aligned across versions.
const BURST_PRIOR_STRENGTH: f64 = 1000.0;

fn emerging_detection() -> Check {
    let start = Instant::now();
    let mut min_burst = usize::MAX;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let versions = fixtures::burst_versions(&mut rng);
        let mut history: Vec<TopicState> = Vec::new();
        for (t, docs) in versions.iter().enumerate() {
            let cfg = TopicConfig {
                k: BURST_K,
                prior_strength: BURST_PRIOR_STRENGTH,
                seed: seed * 31 + t as u64,
                ..TopicConfig::default()
            };
            let state = fit_version(docs, t, &history[history.len().saturating_sub(cfg.window)..], &cfg)
                .map_err(|e| e.to_string())?;
            normalized(&state)?;
            let flagged = detect_emerging(&state, &history, cfg.window, 2.0);
            if t < 3 {
                ensure!(flagged.is_empty(), "seed {seed}: quiet version {t} flagged {flagged:?}");
            } else {
                ensure!(!flagged.is_empty(), "seed {seed}: burst version flagged nothing");
                min_burst = min_burst.min(flagged.len());
            }
            history.push(state);
        }
    }
    Ok(format!(
        "20 seeds, K={BURST_K}, s={BURST_PRIOR_STRENGTH}, lambda=2: quiet versions flag 0, burst flags >= {min_burst}, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn small_config() -> ProjectConfig {
    let mut c = ProjectConfig {
        k: 4,
        iterations: 200,
        ..ProjectConfig::default()
    };
    c.embedding.dim = 50;
    c
}

/// Bigram count recomputed from raw review text.
fn brute_force_count(reviews: &[RawReview], a: &str, b: &str) -> usize {
    let mut n = 0;
    for r in reviews {
        let Ok(c) = preprocess_review(r) else { continue };
        for i in 1..c.tokens.len() {
            if c.token_map[i].sentence == c.token_map[i - 1].sentence && c.tokens[i - 1] == a && c.tokens[i] == b {
                n += 1;
            }
        }
    }
    n
}

fn river() -> Check {
    let w = river_width(&[(10, 0.2)], RiverOrientation::NegativeWide);
    ensure!((w - 10f64.ln() * 0.6).abs() <= 1e-12, "ln(10)*0.6 example gave {w}");
    for s in [-1.0, -0.3, 0.0, 0.7, 1.0] {
        let w = river_width(&[(1, s)], RiverOrientation::NegativeWide);
        ensure!(w == 0.0, "count 1 with S={s} gave {w}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (reviews, conllu) = fixtures::app_corpus(&mut rng, 2, 120);
    let config = small_config();
    let inputs = PipelineInputs {
        reviews: &reviews,
        conllu: &conllu,
        seeds: None,
        vectors: None,
    };
    let snapshot = run_pipeline(inputs, &config).map_err(|e| e.to_string())?;
    let exported: Snapshot = serde_json::from_str(&export_document(&snapshot)).map_err(|e| e.to_string())?;
    ensure!(exported.river.len() == 2, "{} slices", exported.river.len());

    // Independent scorer: same corpus, same embedding settings, scores from raw vectors.
    let parsed = parse_reviews(&reviews);
    let clean: Vec<_> = group_by_version(parsed.reviews)
        .iter()
        .flat_map(|c| c.reviews.iter().filter_map(|r| preprocess_review(r).ok()).collect::<Vec<_>>())
        .collect();
    let model = train_sgns(&clean, None, &exported.config.embedding).map_err(|e| e.to_string())?;
    let lex = add_user_seeds(&load_base_seeds(BUILTIN_SEEDS).unwrap().0, &[]).unwrap();
    let usable = |p| -> Vec<Vec<f64>> {
        lex.with_polarity(p)
            .filter_map(|w| model.vector(w))
            .filter(|v| v.iter().any(|&x| x != 0.0))
            .map(<[f64]>::to_vec)
            .collect()
    };
    let pos = usable(reviewlens_core::sentiment::Polarity::Positive);
    let neg = usable(reviewlens_core::sentiment::Polarity::Negative);

    let mut labels = 0;
    for (slice, version) in exported.river.iter().zip(&exported.versions) {
        ensure!(slice.widths.len() == config.k, "slice has {} widths", slice.widths.len());
        for (k, topic) in version.topics.iter().enumerate() {
            let mut width = 0.0;
            for p in &topic.summary.phrase_labels {
                let count = brute_force_count(&version.reviews, &p.words[0], &p.words[1]);
                ensure!(count == p.count, "{:?}: exported count {} vs recount {count}", p.phrase, p.count);
                let scores: Vec<f64> = p
                    .words
                    .iter()
                    .filter_map(|w| model.vector(w))
                    .map(|v| score_oracle(v, &pos, &neg))
                    .collect();
                let s = (!scores.is_empty()).then(|| (scores.iter().sum::<f64>() / scores.len() as f64).clamp(-1.0, 1.0));
                match (s, p.sentiment) {
                    (Some(a), Some(b)) => ensure!((a - b).abs() <= 1e-12, "{:?}: S {b} vs oracle {a}", p.phrase),
                    (None, None) => {}
                    other => return Err(format!("{:?}: scoreability differs {other:?}", p.phrase)),
                }
                // S matched the oracle to 1e-12 above. The library logarithm is
                // used because std's `ln` may differ in the last bit.
                if let Some(s) = p.sentiment {
                    width += libm::log(count as f64) * ((s + 1.0) / 2.0);
                }
                labels += 1;
            }
            let width = width.max(0.0);
            ensure!(
                width.to_bits() == slice.widths[k].to_bits(),
                "version {} topic {k}: exported {} vs oracle {width}",
                slice.version_index,
                slice.widths[k]
            );
        }
    }
    ensure!(labels > 0, "fixture produced no phrase labels");
    Ok(format!("example to 1e-12, count 1 gives 0, two-version fixture: {labels} labels recounted, widths bit-identical"))
}

fn summary_for(k: usize) -> TopicSummary {
    TopicSummary {
        topic_id: k,
        top_words: vec![TopWord { word: "crash".into(), probability: 0.1 }],
        phrase_labels: vec![],
        sentences: vec![],
        emerging: false,
        sentiment_label: reviewlens_core::sentiment::SentimentLabel::Negative,
        word_sentiments: BTreeMap::new(),
        no_scorable_words: true,
    }
}

fn prioritization() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let texts = ["Crashes on open", "love it", "crash crash", "meh", "Login CRASHED"];
    let mut draws = 0;
    let summary = summary_for(0);
    while draws < 10_000 {
        let n = rng.random_range(1..=25);
        let mut reviews = Vec::new();
        let mut theta = BTreeMap::new();
        let mut ids: Vec<usize> = (1..=n * 3).collect();
        ids.shuffle(&mut rng);
        for &id in &ids[..n] {
            // Coarse values so that relevance and date ties both occur.
            let t0 = rng.random_range(1..20) as f64 / 20.0;
            theta.insert(id, vec![t0, 1.0 - t0]);
            reviews.push(RawReview {
                rating: rng.random_range(1..=5) as f64,
                text: texts[rng.random_range(0..texts.len())].into(),
                post_date: NaiveDate::from_ymd_opt(2021, 1, rng.random_range(1..=4)).unwrap(),
                version: Version::parse("1.0").unwrap(),
                region: "US".into(),
                review_id: id,
            });
            draws += 1;
        }
        let threshold = [0.0, 0.25, 0.5, 0.9][rng.random_range(0..4)];
        let listing = prioritize(&reviews, &theta, &summary, threshold);

        let mut oracle: Vec<(f64, NaiveDate, usize)> = reviews
            .iter()
            .filter(|r| theta[&r.review_id][0] >= threshold)
            .map(|r| (theta[&r.review_id][0], r.post_date, r.review_id))
            .collect();
        oracle.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        let got: Vec<(f64, NaiveDate, usize)> =
            listing.iter().map(|p| (p.relevance, p.review.post_date, p.review.review_id)).collect();
        ensure!(got == oracle, "order differs from the sort oracle");
        for w in listing.windows(2) {
            ensure!(priority_order(&w[0], &w[1]).is_lt(), "adjacent entries not strictly ordered");
        }
        ensure!(prioritize(&reviews, &theta, &summary, 1.0).is_empty(), "threshold 1 listed reviews");

        let query = ReviewQuery {
            text: rng.random_bool(0.5).then(|| ["crash", "LOVE", "x"][rng.random_range(0..3)].to_string()),
            min_rating: rng.random_bool(0.5).then(|| rng.random_range(1..=5) as f64),
            from: rng.random_bool(0.3).then(|| NaiveDate::from_ymd_opt(2021, 1, 2).unwrap()),
            to: rng.random_bool(0.3).then(|| NaiveDate::from_ymd_opt(2021, 1, 3).unwrap()),
        };
        let once = search(&listing, &query).map_err(|e| e.to_string())?;
        let twice = search(&once, &query).map_err(|e| e.to_string())?;
        ensure!(once == twice, "search is not idempotent");
        let mut it = listing.iter();
        ensure!(once.iter().all(|x| it.any(|y| y == x)), "search result is not an ordered subset");
    }
    Ok(format!("{draws} theta draws: order matches oracle, search idempotent and subset, threshold 1 empty"))
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (reviews, conllu) = fixtures::app_corpus(&mut rng, 3, 150);
    std::fs::write(d.join("reviews.txt"), reviews).map_err(|e| e.to_string())?;
    std::fs::write(d.join("reviews.conllu"), conllu).map_err(|e| e.to_string())?;
    std::fs::write(d.join("config.json"), "{}").map_err(|e| e.to_string())?;
    let mut docs = Vec::new();
    for run in ["a.json", "b.json"] {
        let out = Command::new(env!("CARGO_BIN_EXE_reviewlens"))
            .arg("run")
            .arg("--reviews")
            .arg(d.join("reviews.txt"))
            .arg("--conllu")
            .arg(d.join("reviews.conllu"))
            .arg("--config")
            .arg(d.join("config.json"))
            .arg("--out")
            .arg(d.join(run))
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "run failed: {}", String::from_utf8_lossy(&out.stderr));
        docs.push(std::fs::read(d.join(run)).map_err(|e| e.to_string())?);
    }
    ensure!(docs[0] == docs[1], "the two exported snapshots differ");
    Ok(format!(
        "default config, 3 versions x 150 reviews: two CLI runs byte-identical ({} bytes), {:.1}s",
        docs[0].len(),
        start.elapsed().as_secs_f64()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("format fidelity", format_fidelity),
        ("preprocessing conformance", preprocessing),
        ("opinion extraction", opinion_extraction),
        ("sentiment score properties", sentiment_scores),
        ("SGNS gradient check", sgns_gradient),
        ("topic model", topic_model),
        ("emerging detection", emerging_detection),
        ("river width", river),
        ("prioritization and search", prioritization),
        ("end-to-end determinism", end_to_end),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
