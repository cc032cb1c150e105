//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use hragent_core::backends::{
    BaselineExtractor, BaselineSelector, SelectionRequest, SentimentScore, SentimentScorer, SelectorConfig, Span,
};
use hragent_core::datagen::{filter_scenario, parse_scenarios, FilterConfig, FilterReason};
use hragent_core::engine::{
    is_affirmative, ActionKind, AgentAction, Backends, ConfirmDecision, Engine, EngineConfig, HandlerRegistry,
};
use hragent_core::metrics::{dst_eval, rouge_tokens, selection_prf, SlotMap};
use hragent_core::normalize::{normalize_date, normalize_for_slot, ReferenceContext};
use hragent_core::schema::{parse_schema, Phase, TaskSchema, TerminationReason};
use hragent_core::Exact;
use hragent_service::app::{router, AppState};
use hragent_service::background::BackgroundServer;
use hragent_service::bench::{read_latency_csv, run_bench};
use hragent_service::config::ServiceConfig;
use hragent_service::eval::read_dst_jsonl;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema(name: &str) -> TaskSchema {
    parse_schema(&std::fs::read_to_string(root().join("schemas").join(format!("{name}.json"))).unwrap()).unwrap()
}

// ---------------------------------------------------------------- 1

fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    // Longest subsequence of `a` (by subset enumeration) that is also a subsequence of `b`.
    let is_subseq = |sub: &[&String]| {
        let mut it = b.iter();
        sub.iter().all(|x| it.any(|y| y == *x))
    };
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let n = mask.count_ones() as usize;
        if n <= best {
            continue;
        }
        let sub: Vec<&String> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
        if is_subseq(&sub) {
            best = n;
        }
    }
    best
}

fn oracle_prf(hits: usize, cand: usize, reference: usize) -> (Exact, Exact, Exact) {
    if cand == 0 && reference == 0 {
        return (Exact::one(), Exact::one(), Exact::one());
    }
    if cand == 0 || reference == 0 || hits == 0 {
        return (Exact::zero(), Exact::zero(), Exact::zero());
    }
    let p = Exact::new(hits as i64, cand as i64);
    let r = Exact::new(hits as i64, reference as i64);
    (p, r, Exact::from_integer(2) * p * r / (p + r))
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let vocab = ["leave", "next", "monday", "vacation", "day", "the", "a", "claim", "doctor", "email"];
    for i in 0..1000 {
        let seq = |rng: &mut StdRng| -> Vec<String> {
            let n = rng.random_range(0..=12);
            (0..n).map(|_| vocab.choose(rng).unwrap().to_string()).collect()
        };
        let cand = seq(&mut rng);
        let reference = seq(&mut rng);
        let got = rouge_tokens::<Exact, _>(&cand, &reference);

        let lcs = oracle_lcs(&cand, &reference);
        let (p, r, f) = oracle_prf(lcs, cand.len(), reference.len());
        ensure!(
            (got.rouge_l.precision, got.rouge_l.recall, got.rouge_l.f1) == (p, r, f),
            "pair {i}: rouge-L {:?} vs oracle {:?}",
            got.rouge_l,
            (p, r, f)
        );

        let mut counts: HashMap<&str, i64> = HashMap::new();
        for t in &reference {
            *counts.entry(t).or_default() += 1;
        }
        let mut overlap = 0;
        for t in &cand {
            if let Some(c) = counts.get_mut(t.as_str()) {
                if *c > 0 {
                    *c -= 1;
                    overlap += 1;
                }
            }
        }
        let (p, r, f) = oracle_prf(overlap, cand.len(), reference.len());
        ensure!(
            (got.rouge1.precision, got.rouge1.recall, got.rouge1.f1) == (p, r, f),
            "pair {i}: rouge-1 mismatch"
        );
    }

    let labels = ['a', 'b', 'c', 'd', 'e', 'f'];
    let pairs: Vec<(BTreeSet<char>, BTreeSet<char>)> = (0..500)
        .map(|_| {
            let set = |rng: &mut StdRng| -> BTreeSet<char> {
                let n = rng.random_range(1..=4);
                (0..n).map(|_| *labels.choose(rng).unwrap()).collect()
            };
            (set(&mut rng), set(&mut rng))
        })
        .collect();
    let (mut tp, mut fp, mut fn_) = (0i64, 0i64, 0i64);
    for (gold, pred) in &pairs {
        for l in labels {
            match (gold.contains(&l), pred.contains(&l)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
    }
    let eval = selection_prf::<Exact, char>(&pairs).map_err(|e| e.to_string())?;
    let p = Exact::new(tp, tp + fp);
    let r = Exact::new(tp, tp + fn_);
    ensure!(eval.micro.precision == p && eval.micro.recall == r, "micro P/R mismatch");
    ensure!(eval.micro.f1 == Exact::from_integer(2) * p * r / (p + r), "micro F1 mismatch");
    let elapsed = started.elapsed();
    ensure!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    Ok(format!("1000 rouge pairs and 500 selection pairs exact in {:.2}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- 2

fn oracle_aga(pred: &[SlotMap], gold: &[SlotMap]) -> Exact {
    let clean = |v: &str| v.trim().to_lowercase();
    let (mut active, mut correct) = (0i64, 0i64);
    for (p, g) in pred.iter().zip(gold) {
        for (slot, gv) in g {
            if clean(gv).is_empty() {
                continue;
            }
            active += 1;
            if p.get(slot).is_some_and(|pv| clean(pv) == clean(gv)) {
                correct += 1;
            }
        }
    }
    Exact::new(correct, active)
}

fn criterion_2() -> Outcome {
    let gold = read_dst_jsonl(&root().join("fixtures/dst_gold.jsonl")).map_err(|e| e.to_string())?;
    let pred = read_dst_jsonl(&root().join("fixtures/dst_pred.jsonl")).map_err(|e| e.to_string())?;
    ensure!(gold.len() == 20, "fixture has {} dialogues", gold.len());
    for (i, (p, g)) in pred.iter().zip(&gold).enumerate() {
        let e = dst_eval::<Exact>(p, g).map_err(|e| e.to_string())?;
        ensure!(e.jga == Exact::one() && e.aga == Some(Exact::one()), "dialogue {i}: {e:?}");
    }
    let flat_p: Vec<SlotMap> = pred.iter().flatten().cloned().collect();
    let flat_g: Vec<SlotMap> = gold.iter().flatten().cloned().collect();
    let all = dst_eval::<Exact>(&flat_p, &flat_g).map_err(|e| e.to_string())?;
    ensure!(all.jga == Exact::one() && all.aga == Some(Exact::one()), "pooled {all:?}");

    let five = gold.iter().find(|d| d.len() == 5).ok_or("no 5-turn dialogue")?;
    let mut corrupted = five.clone();
    let slot = corrupted[2].keys().next().unwrap().clone();
    corrupted[2].insert(slot, "something else".into());
    let e = dst_eval::<Exact>(&corrupted, five).map_err(|e| e.to_string())?;
    let expected_aga = oracle_aga(&corrupted, five);
    ensure!(e.jga == Exact::new(4, 5), "JGA {} != 4/5", e.jga);
    ensure!(e.aga == Some(expected_aga), "AGA {:?} != oracle {expected_aga}", e.aga);
    Ok(format!("identity JGA=AGA=1 on 20 dialogues; one corruption JGA=0.800, AGA={expected_aga}"))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let utterance = "I am taking next Monday off as a vacation day.";
    let s = schema("time_off");
    let req = SelectionRequest::new(utterance, s.slots.iter().map(|sl| (sl.id.clone(), sl.question.clone())))
        .map_err(|e| e.to_string())?;
    let labels = BaselineSelector::new(SelectorConfig::default()).select_labels(&req);
    ensure!(labels == BTreeSet::from(['a', 'd']), "selected {labels:?}");

    let engine = Engine::baseline();
    let ctx = ReferenceContext::from_date(NaiveDate::from_ymd_opt(2023, 10, 13).unwrap(), 0);
    let (id, _) = engine.start_session(s.clone(), EngineConfig::default(), ctx).map_err(|e| e.to_string())?;
    let action = engine.handle_user_turn(&id, utterance).map_err(|e| e.to_string())?;
    let filled = &action.state_snapshot.filled;
    let keys: BTreeSet<&str> = filled.keys().map(String::as_str).collect();
    ensure!(keys == BTreeSet::from(["timeOffStartDate", "timeOffType"]), "filled {keys:?}");
    for (slot, want) in [("timeOffStartDate", "next Monday"), ("timeOffType", "vacation day")] {
        let v = &filled[slot];
        ensure!(v.raw_span == want, "{slot} = {:?}", v.raw_span);
        let question = &s.slot(slot).unwrap().question;
        let span: Span = BaselineExtractor.extract_span(question, utterance).ok_or("no span")?;
        ensure!(span.text == want && span.is_valid_in(utterance), "{slot} span {span:?}");
    }
    Ok("selected {a, d}; spans \"next Monday\" and \"vacation day\" with valid offsets".into())
}

// ---------------------------------------------------------------- 4

#[derive(Default)]
struct ScriptedSentiment(Mutex<f64>);

impl SentimentScorer for ScriptedSentiment {
    fn score(&self, _text: &str) -> SentimentScore {
        SentimentScore {
            negative_prob: *self.0.lock().unwrap(),
        }
    }
}

fn criterion_4() -> Outcome {
    let sentiment = Arc::new(ScriptedSentiment::default());
    let backends = Backends {
        sentiment: sentiment.clone(),
        ..Backends::baseline()
    };
    let engine = Engine::new(backends, HandlerRegistry::with_stubs(None));
    let s = schema("time_off");
    let ctx = ReferenceContext::from_date(NaiveDate::from_ymd_opt(2023, 10, 13).unwrap(), 0);
    let mut rng = StdRng::seed_from_u64(4);
    let pool = [
        "hmm", "I am not sure", "what?", "next Monday", "vacation day", "My name is Dana Smith", "the weather is nice",
    ];
    let (mut repeat, mut senti) = (0, 0);
    for seq in 0..10_000 {
        let (id, first) = engine.start_session(s.clone(), EngineConfig::default(), ctx).map_err(|e| e.to_string())?;
        let mut clarifies: HashMap<String, u32> = HashMap::new();
        let mut last = first;
        for turn in 1..=rng.random_range(1..=14u32) {
            if last.state_snapshot.phase != Phase::Collecting {
                break;
            }
            let p: f64 = if rng.random_bool(0.3) { rng.random_range(0.5..=1.0) } else { rng.random_range(0.0..=0.5) };
            *sentiment.0.lock().unwrap() = p;
            let before = last.state_snapshot.clone();
            let a = engine.handle_user_turn(&id, pool.choose(&mut rng).unwrap()).map_err(|e| e.to_string())?;
            for slot in a.state_snapshot.filled.keys() {
                clarifies.remove(slot);
            }
            match (a.kind, a.reason) {
                (ActionKind::Clarify, _) => {
                    let slot = a.slot_id.clone().ok_or("clarify without slot")?;
                    let n = clarifies.entry(slot.clone()).or_default();
                    *n += 1;
                    ensure!(*n <= 3, "seq {seq}: clarification #{n} on {slot} did not terminate");
                    ensure!(!(turn % 4 == 0 && p > 0.5), "seq {seq} turn {turn}: sentiment {p} ignored");
                }
                (ActionKind::Terminated, Some(TerminationReason::RepeatLimit)) => {
                    repeat += 1;
                    let over: Vec<_> = a.state_snapshot.clarify_count.iter().filter(|(_, &n)| n > 3).collect();
                    ensure!(over.len() == 1, "seq {seq}: repeat limit with counts {:?}", a.state_snapshot.clarify_count);
                    let slot = over[0].0;
                    ensure!(
                        clarifies.get(slot) == Some(&3) && before.clarify_count[slot] == 3,
                        "seq {seq}: repeat limit on {slot} after {:?} clarifications",
                        clarifies.get(slot)
                    );
                }
                (ActionKind::Terminated, Some(TerminationReason::SentimentLimit)) => {
                    senti += 1;
                    ensure!(turn % 4 == 0 && p > 0.5, "seq {seq}: sentiment stop at turn {turn} with {p}");
                }
                (ActionKind::Terminated, other) => return Err(format!("seq {seq}: unexpected termination {other:?}")),
                _ => ensure!(!(turn % 4 == 0 && p > 0.5), "seq {seq} turn {turn}: sentiment {p} ignored"),
            }
            last = a;
        }
        engine.remove(&id);
    }

    // The fixed cases, spelled out.
    *sentiment.0.lock().unwrap() = 0.0;
    let (id, _) = engine.start_session(s.clone(), EngineConfig::default(), ctx).map_err(|e| e.to_string())?;
    let kinds: Vec<ActionKind> = (0..4).map(|_| engine.handle_user_turn(&id, "hmm").unwrap().kind).collect();
    ensure!(
        kinds == [ActionKind::Clarify, ActionKind::Clarify, ActionKind::Clarify, ActionKind::Terminated],
        "fourth clarification: {kinds:?}"
    );
    *sentiment.0.lock().unwrap() = 0.9;
    let (id, _) = engine.start_session(s.clone(), EngineConfig::default(), ctx).map_err(|e| e.to_string())?;
    let a = engine.handle_user_turn(&id, "next Monday").unwrap();
    let b = engine.handle_user_turn(&id, "vacation day").unwrap();
    let c = engine.handle_user_turn(&id, "hmm").unwrap();
    ensure!(
        [a.kind, b.kind, c.kind].iter().all(|k| *k != ActionKind::Terminated),
        "sentiment 0.9 at turn 3 terminated"
    );
    let d = engine.handle_user_turn(&id, "My name is Dana Smith").unwrap();
    ensure!(d.reason == Some(TerminationReason::SentimentLimit), "turn 4: {:?}", d.reason);
    Ok(format!("10000 random sequences, 0 violations ({repeat} repeat-limit, {senti} sentiment-limit stops)"))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let ref_date = NaiveDate::from_ymd_opt(2023, 10, 31).unwrap();
    let t = normalize_date("tomorrow", &ReferenceContext::from_date(ref_date, 0));
    ensure!(t.canonical == "2023-11-01", "tomorrow -> {}", t.canonical);

    let days = [Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu, Weekday::Fri, Weekday::Sat, Weekday::Sun];
    let names = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"];
    let monday = NaiveDate::from_ymd_opt(2023, 10, 30).unwrap();
    let mut canon = vec![t.canonical.clone()];
    for offset in 0..7u64 {
        let reference = monday + Days::new(offset);
        for (target, name) in days.iter().zip(names) {
            let mut d = reference + Days::new(1);
            while d.weekday() != *target {
                d = d + Days::new(1);
            }
            let got = normalize_date(&format!("next {name}"), &ReferenceContext::from_date(reference, 0));
            let want = d.format("%Y-%m-%d").to_string();
            ensure!(got.canonical == want, "next {name} from {reference}: {} != {want}", got.canonical);
            canon.push(got.canonical);
        }
    }
    let ctx = ReferenceContext::from_date(ref_date, 0);
    for c in &canon {
        ensure!(normalize_date(c, &ctx).canonical == *c, "date {c} not idempotent");
    }
    for s in ["time_off", "medical_claim", "draft_email", "set_status"] {
        let s = schema(s);
        for slot in &s.slots {
            for raw in ["10am", "$12,550", "next Friday", "June 2", "2:30 pm", "tomorrow", "high", "Seattle"] {
                let once = normalize_for_slot(slot, raw, &ctx);
                if once.is_resolved() {
                    let twice = normalize_for_slot(slot, &once.canonical, &ctx);
                    ensure!(twice.canonical == once.canonical, "{}: {raw} -> {} -> {}", slot.id, once.canonical, twice.canonical);
                }
            }
        }
    }
    Ok("tomorrow -> 2023-11-01; 49/49 next-weekday cases match the calendar walk; idempotent".into())
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let r = run_bench(1000, &[], 2000.0).map_err(|e| e.to_string())?;
    ensure!(r.overhead.p99 < 50.0, "overhead p99 {:.3} ms", r.overhead.p99);
    let mock = read_latency_csv(&root().join("fixtures/mock_latency.csv")).map_err(|e| e.to_string())?;
    ensure!(mock.len() == 100 && mock.iter().filter(|&&x| x < 2000.0).count() == 94, "fixture shape");
    let b = run_bench(1000, &mock, 2000.0).map_err(|e| e.to_string())?;
    ensure!(b.fraction_under == Exact::new(94, 100), "fraction {}", b.fraction_under);
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_hragent"))
        .args(["bench", "--turns", "1000", "--mock-latency-file"])
        .arg(root().join("fixtures/mock_latency.csv"))
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    ensure!(
        out.status.success() && stdout.lines().any(|l| l == "fraction_under_2000ms,0.94"),
        "bench output: {stdout}"
    );
    Ok(format!("overhead p99 {:.3} ms over 1000 turns; bench fraction_under(2000) = 0.94", r.overhead.p99))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let text = std::fs::read_to_string(root().join("fixtures/datagen_batch.txt")).map_err(|e| e.to_string())?;
    let expected: Vec<Value> =
        serde_json::from_str(&std::fs::read_to_string(root().join("fixtures/datagen_expected.json")).unwrap()).unwrap();
    let parsed = parse_scenarios(&text);
    ensure!(parsed.scenarios.len() == 50 && parsed.diagnostics.is_empty(), "parsed {}", parsed.scenarios.len());
    let mut kept = 0;
    for (i, (s, e)) in parsed.scenarios.iter().zip(&expected).enumerate() {
        let v = filter_scenario(s, &FilterConfig::default());
        let want: Vec<FilterReason> = serde_json::from_value(e["reasons"].clone()).unwrap();
        ensure!(v.reasons == want, "scenario {i}: {:?} != {want:?}", v.reasons);
        kept += usize::from(v.kept);
    }
    ensure!(kept == 40, "kept {kept}");

    let appendix = "User Response: I would like to schedule a doctor's appointment for next Tuesday at 2pm to get a physical exam.\n\nList of Questions:\na. What type of appointment does the user want to schedule?\nb. When does the user want to schedule the appointment?\nc. What time does the user want the appointment?\nd. What is the purpose of the appointment?\ne. What action does the user want the recipient to take?\nf. On what date is the user requesting the appointment?\ng. Does the user provide the date for the requested appointment?\nh. Does the user provide the time for the requested appointment?\nOutput1: a, b, c, d\nOutput2: schedule, next Tuesday, 2pm, physical exam";
    let p = parse_scenarios(appendix);
    ensure!(p.scenarios.len() == 1, "appendix block: {:?}", p.diagnostics);
    ensure!(
        p.scenarios[0].output2 == ["schedule", "next Tuesday", "2pm", "physical exam"],
        "answers {:?}",
        p.scenarios[0].output2
    );
    Ok("40/50 kept with the seeded reasons; appendix block yields 4 answers incl. \"physical exam\"".into())
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let engine = Engine::baseline();
    let s = schema("time_off");
    let ctx = ReferenceContext::from_date(NaiveDate::from_ymd_opt(2023, 10, 13).unwrap(), 0);
    let mut rng = StdRng::seed_from_u64(8);
    let pool = [
        "I am taking next Monday off as a vacation day.",
        "next Thursday",
        "sick leave",
        "My name is Dana Smith",
        "Luis Ortega",
        "yes",
        "yes that's right",
        "no, the date is wrong",
        "change the name",
        "hmm",
        "I finished the safety training and want my manager to approve it",
        "cancel",
        "yeah but wait",
    ];
    let mut dispatched = 0;
    for trace in 0..10_000 {
        let (id, mut last) = engine.start_session(s.clone(), EngineConfig::default(), ctx).map_err(|e| e.to_string())?;
        for _ in 0..rng.random_range(1..=12) {
            if matches!(last.state_snapshot.phase, Phase::Dispatched | Phase::Terminated) {
                break;
            }
            let structured = last.kind == ActionKind::ConfirmSummary && rng.random_bool(0.2);
            let (action, affirmative): (AgentAction, bool) = if structured {
                if rng.random_bool(0.7) {
                    (engine.confirm(&id, ConfirmDecision::Affirm).map_err(|e| e.to_string())?, true)
                } else {
                    let slot = last.state_snapshot.filled.keys().next().unwrap().clone();
                    let a = engine
                        .confirm(&id, ConfirmDecision::Correct { slots: vec![slot] })
                        .map_err(|e| e.to_string())?;
                    (a, false)
                }
            } else {
                let u = pool.choose(&mut rng).unwrap();
                (engine.handle_user_turn(&id, u).map_err(|e| e.to_string())?, is_affirmative(u))
            };
            if action.kind == ActionKind::Dispatched {
                dispatched += 1;
                ensure!(
                    last.kind == ActionKind::ConfirmSummary && affirmative,
                    "trace {trace}: dispatch after {:?} (affirmative {affirmative})",
                    last.kind
                );
                ensure!(action.receipt.is_some(), "trace {trace}: dispatch without receipt");
            }
            if action.kind == ActionKind::ConfirmSummary {
                let snap = engine.snapshot(&id).map_err(|e| e.to_string())?;
                let user_text: Vec<&str> = snap.transcript.user_turns().map(|t| t.text.as_str()).collect();
                for line in action.summary.as_deref().unwrap_or_default() {
                    ensure!(
                        user_text.iter().any(|u| u.contains(&line.raw)),
                        "trace {trace}: summary value {:?} is not in any user turn",
                        line.raw
                    );
                }
                for v in snap.state.filled.values() {
                    let turn = snap.transcript.turn(v.source_turn).ok_or("dangling source turn")?;
                    ensure!(turn.text.contains(&v.raw_span), "trace {trace}: {} not in its source turn", v.raw_span);
                }
            }
            last = action;
        }
        engine.remove(&id);
    }
    ensure!(dispatched > 100, "only {dispatched} traces reached dispatch");
    Ok(format!("10000 traces, {dispatched} dispatches, all after summary + affirmative; all values verbatim"))
}

// ---------------------------------------------------------------- 9

#[derive(Clone, Default)]
struct LogBuf(Arc<Mutex<Vec<u8>>>);

impl Write for LogBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn post(agent: &ureq::Agent, url: &str, body: Value) -> Result<(u16, Value), String> {
    let mut resp = agent.post(url).send_json(body).map_err(|e| e.to_string())?;
    let status = resp.status().as_u16();
    Ok((status, resp.body_mut().read_json().map_err(|e| e.to_string())?))
}

fn get(agent: &ureq::Agent, url: &str) -> Result<Value, String> {
    agent.get(url).call().map_err(|e| e.to_string())?.body_mut().read_json().map_err(|e| e.to_string())
}

fn criterion_9(logs: &LogBuf) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ServiceConfig {
        persistence_dir: Some(dir.path().join("sessions")),
        audit_dir: Some(dir.path().join("audit")),
        ..ServiceConfig::default()
    };
    let schemas: BTreeMap<String, TaskSchema> =
        ["time_off", "draft_email"].into_iter().map(|n| (n.to_string(), schema(n))).collect();
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();

    let a_turns = ["I am taking next Monday off as a vacation day.", "My name is Dana Smith"];
    let b_turns = ["Send an email to Priya Nair", "the topic is the quarterly budget review"];
    let (a, b, before) = {
        let server = BackgroundServer::start(router(AppState::new(&cfg, schemas.clone()).map_err(|e| e.to_string())?))
            .map_err(|e| e.to_string())?;
        let base = server.url();
        let (st, a) = post(&agent, &format!("{base}/v1/sessions"), json!({"schema_id": "time_off", "reference_datetime": "2023-10-13T09:00:00Z"}))?;
        ensure!(st == 201, "create A: {st}");
        let (st, b) = post(&agent, &format!("{base}/v1/sessions"), json!({"schema_id": "draft_email"}))?;
        ensure!(st == 201, "create B: {st}");
        let a = a["session_id"].as_str().unwrap().to_string();
        let b = b["session_id"].as_str().unwrap().to_string();
        for (ta, tb) in a_turns.iter().zip(b_turns) {
            let (st, _) = post(&agent, &format!("{base}/v1/sessions/{a}/messages"), json!({ "text": ta }))?;
            ensure!(st == 200, "A turn: {st}");
            let (st, _) = post(&agent, &format!("{base}/v1/sessions/{b}/messages"), json!({ "text": tb }))?;
            ensure!(st == 200, "B turn: {st}");
        }
        let sa = get(&agent, &format!("{base}/v1/sessions/{a}/state"))?;
        let sb = get(&agent, &format!("{base}/v1/sessions/{b}/state"))?;
        let texts = |s: &Value| -> Vec<String> {
            s["transcript"]["turns"]
                .as_array()
                .unwrap()
                .iter()
                .filter(|t| t["speaker"] == "user")
                .map(|t| t["text"].as_str().unwrap().to_string())
                .collect()
        };
        ensure!(texts(&sa) == a_turns, "A transcript {:?}", texts(&sa));
        ensure!(texts(&sb) == b_turns, "B transcript {:?}", texts(&sb));
        let a_slots: BTreeSet<&str> = sa["state"]["filled"].as_object().unwrap().keys().map(String::as_str).collect();
        let b_slots: BTreeSet<&str> = sb["state"]["filled"].as_object().unwrap().keys().map(String::as_str).collect();
        ensure!(a_slots == BTreeSet::from(["employeeName", "timeOffStartDate", "timeOffType"]), "A slots {a_slots:?}");
        ensure!(b_slots.iter().all(|s| ["recipientName", "emailTopic", "urgency"].contains(s)) && !b_slots.is_empty(), "B slots {b_slots:?}");
        (a, b, [sa, sb])
    };

    let server = BackgroundServer::start(router(AppState::new(&cfg, schemas).map_err(|e| e.to_string())?))
        .map_err(|e| e.to_string())?;
    let base = server.url();
    for (id, old) in [&a, &b].into_iter().zip(&before) {
        let now = get(&agent, &format!("{base}/v1/sessions/{id}/state"))?;
        ensure!(now["state"] == old["state"] && now["transcript"] == old["transcript"], "session {id} differs after restart");
    }
    let (st, done) = post(&agent, &format!("{base}/v1/sessions/{a}/confirm"), json!({"decision": "affirm"}))?;
    ensure!(st == 200 && done["action"]["kind"] == "dispatched", "confirm after restart: {st} {done}");
    drop(server);

    let captured = String::from_utf8(logs.0.lock().unwrap().clone()).unwrap();
    ensure!(captured.contains("turn handled"), "no service logs captured");
    for text in a_turns.iter().chain(&b_turns).chain(&["Dana Smith", "vacation day", "Priya Nair", "quarterly budget"]) {
        ensure!(!captured.contains(text), "log contains user text {text:?}");
    }
    Ok(format!("no cross-talk; replayed snapshots identical; {} bytes of logs free of user text", captured.len()))
}

fn main() {
    let logs = LogBuf::default();
    let writer = logs.clone();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::new("info"))
        .with_writer(move || writer.clone())
        .init();

    let criteria: Vec<(u32, Box<dyn Fn() -> Outcome>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(criterion_6)),
        (7, Box::new(criterion_7)),
        (8, Box::new(criterion_8)),
        (9, Box::new({
            let logs = logs.clone();
            move || criterion_9(&logs)
        })),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS - {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL - {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
