//! Membership oracles and test labeling.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{Ta, TimedWord};
use crate::semantics::{accepts_lenient, AcceptOptions};
use crate::testgen::TestData;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("cannot start oracle process `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("oracle process failed on {word}: {reason}")]
    Crashed { word: TimedWord, reason: String },
    #[error("oracle process timed out after {seconds}s on {word}")]
    Timeout { word: TimedWord, seconds: f64 },
    #[error("garbled oracle reply to {word}: {reply:?}")]
    Garbled { word: TimedWord, reply: String },
    #[error("no recorded verdict for {0}")]
    Unrecorded(TimedWord),
    #[error("invalid recorded verdicts: {0}")]
    Recording(#[from] serde_json::Error),
}

#[derive(Serialize)]
struct Request<'a> {
    word: &'a TimedWord,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Reply {
    accept: bool,
}

/// A verdict as stored in a recording, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Test {
    pub word: TimedWord,
    pub verdict: bool,
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// An oracle behind a child process speaking line-delimited JSON.
///
/// The process is started on the first query and reused; queries are
/// strictly sequential.
pub struct ExternalProcess {
    command: Vec<String>,
    timeout: Duration,
    running: Option<Running>,
}

impl std::fmt::Debug for ExternalProcess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalProcess")
            .field("command", &self.command)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl ExternalProcess {
    /// `command[0]` is the program, the rest its arguments.
    pub fn new(command: Vec<String>, timeout: Duration) -> Self {
        assert!(!command.is_empty(), "oracle command must name a program");
        ExternalProcess {
            command,
            timeout,
            running: None,
        }
    }

    fn start(&mut self) -> Result<&mut Running, OracleError> {
        if self.running.is_none() {
            let spawn_err = |source| OracleError::Spawn {
                command: self.command.join(" "),
                source,
            };
            let mut child = Command::new(&self.command[0])
                .args(&self.command[1..])
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(spawn_err)?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            let (tx, rx) = mpsc::channel();
            std::thread::spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            });
            self.running = Some(Running {
                child,
                stdin,
                lines: rx,
            });
        }
        Ok(self.running.as_mut().expect("just started"))
    }

    fn stop(&mut self) {
        if let Some(mut r) = self.running.take() {
            let _ = r.child.kill();
            let _ = r.child.wait();
        }
    }

    pub fn query(&mut self, w: &TimedWord) -> Result<bool, OracleError> {
        let timeout = self.timeout;
        let request = serde_json::to_string(&Request { word: w }).expect("serializable");
        let running = self.start()?;
        let crashed = |reason: String| OracleError::Crashed {
            word: w.clone(),
            reason,
        };
        let sent = writeln!(running.stdin, "{request}").and_then(|_| running.stdin.flush());
        let outcome = match sent {
            Err(e) => Err(crashed(e.to_string())),
            Ok(()) => match running.lines.recv_timeout(timeout) {
                Ok(Ok(line)) => serde_json::from_str::<Reply>(line.trim())
                    .map(|r| r.accept)
                    .map_err(|_| OracleError::Garbled {
                        word: w.clone(),
                        reply: line,
                    }),
                Ok(Err(e)) => Err(crashed(e.to_string())),
                Err(RecvTimeoutError::Disconnected) => Err(crashed("process closed its output".into())),
                Err(RecvTimeoutError::Timeout) => Err(OracleError::Timeout {
                    word: w.clone(),
                    seconds: timeout.as_secs_f64(),
                }),
            },
        };
        if outcome.is_err() {
            // the protocol state is unknown after any failure
            self.stop();
        }
        outcome
    }
}

impl Drop for ExternalProcess {
    fn drop(&mut self) {
        self.stop();
    }
}

#[derive(Debug)]
pub enum OracleBackend {
    /// Membership in the language of a known automaton.
    TaBacked(Box<Ta>),
    ExternalProcess(ExternalProcess),
    /// Verdicts read from a recording.
    RecordedMap(HashMap<TimedWord, bool>),
}

impl OracleBackend {
    pub fn recorded_from_jsonl(text: &str) -> Result<Self, OracleError> {
        let mut map = HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let t: Test = serde_json::from_str(line)?;
            map.insert(t.word, t.verdict);
        }
        Ok(OracleBackend::RecordedMap(map))
    }

    fn query(&mut self, w: &TimedWord) -> Result<bool, OracleError> {
        match self {
            OracleBackend::TaBacked(ta) => Ok(accepts_lenient(ta, w, AcceptOptions::default())),
            OracleBackend::ExternalProcess(p) => p.query(w),
            OracleBackend::RecordedMap(m) => m.get(w).copied().ok_or_else(|| OracleError::Unrecorded(w.clone())),
        }
    }
}

/// A backend with a per-run verdict cache.
#[derive(Debug)]
pub struct Oracle {
    backend: OracleBackend,
    cache: HashMap<TimedWord, bool>,
    backend_queries: usize,
}

impl Oracle {
    pub fn new(backend: OracleBackend) -> Self {
        Oracle {
            backend,
            cache: HashMap::new(),
            backend_queries: 0,
        }
    }

    pub fn from_ta(ta: Ta) -> Self {
        Oracle::new(OracleBackend::TaBacked(Box::new(ta)))
    }

    pub fn query(&mut self, w: &TimedWord) -> Result<bool, OracleError> {
        if let Some(v) = self.cache.get(w) {
            return Ok(*v);
        }
        let v = self.backend.query(w)?;
        self.backend_queries += 1;
        self.cache.insert(w.clone(), v);
        Ok(v)
    }

    /// Queries that reached the backend.
    pub fn backend_queries(&self) -> usize {
        self.backend_queries
    }

    /// Every verdict obtained so far, in word order.
    pub fn recording(&self) -> String {
        let mut entries: Vec<(&TimedWord, &bool)> = self.cache.iter().collect();
        entries.sort();
        let mut out = String::new();
        for (w, v) in entries {
            let t = Test {
                word: w.clone(),
                verdict: *v,
            };
            out.push_str(&serde_json::to_string(&t).expect("serializable"));
            out.push('\n');
        }
        out
    }
}

/// Labeled tests after prefix filtering.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub tests: Vec<Test>,
}

impl TestSuite {
    /// Tests that must be accepted.
    pub fn mba(&self) -> impl Iterator<Item = &Test> {
        self.tests.iter().filter(|t| t.verdict)
    }

    /// Tests that must be rejected.
    pub fn mbr(&self) -> impl Iterator<Item = &Test> {
        self.tests.iter().filter(|t| !t.verdict)
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Keeps maximal accepted and minimal rejected words, in input order.
pub fn filter_tests(tests: Vec<Test>) -> TestSuite {
    let accepted_prefixes: BTreeSet<TimedWord> = tests
        .iter()
        .filter(|t| t.verdict)
        .flat_map(|t| (0..t.word.len()).map(|k| t.word.prefix(k)))
        .collect();
    let rejected: BTreeSet<&TimedWord> = tests.iter().filter(|t| !t.verdict).map(|t| &t.word).collect();
    let keep = |t: &Test| {
        if t.verdict {
            !accepted_prefixes.contains(&t.word)
        } else {
            !(0..t.word.len()).any(|k| rejected.contains(&t.word.prefix(k)))
        }
    };
    let tests = tests.iter().filter(|t| keep(t)).cloned().collect();
    TestSuite { tests }
}

/// Queries every word of `td` and filters the verdicts.
pub fn label_tests(td: &TestData, oracle: &mut Oracle) -> Result<TestSuite, OracleError> {
    let mut tests = Vec::with_capacity(td.len());
    for w in td.words() {
        tests.push(Test {
            word: w.clone(),
            verdict: oracle.query(w)?,
        });
    }
    Ok(filter_tests(tests))
}

/// Tests on which `ta_init` disagrees with the oracle.
pub fn failing_tests(ts: &TestSuite, ta_init: &Ta) -> Vec<Test> {
    ts.tests
        .iter()
        .filter(|t| accepts_lenient(ta_init, &t.word, AcceptOptions::default()) != t.verdict)
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{running_pta, running_ta, valuation};
    use crate::rational::int;
    use crate::semantics::{build_epzg, EpzgConfig};
    use crate::testgen::{generate_test_data, Policy, TestgenConfig};

    fn word(steps: &[(&str, &str)]) -> TimedWord {
        TimedWord::parse(steps).unwrap()
    }

    fn t(steps: &[(&str, &str)], verdict: bool) -> Test {
        Test {
            word: word(steps),
            verdict,
        }
    }

    #[test]
    fn ta_backed_queries() {
        let mut o = Oracle::from_ta(running_ta());
        assert!(o.query(&word(&[("a", "2.5"), ("c", "4.5")])).unwrap());
        assert!(!o.query(&word(&[("a", "1"), ("c", "5")])).unwrap());
        assert!(o.query(&TimedWord::empty()).unwrap());
        assert!(!o.query(&word(&[("z", "1")])).unwrap());
    }

    #[test]
    fn cache_avoids_repeat_queries() {
        let mut o = Oracle::from_ta(running_ta());
        let w = word(&[("a", "1")]);
        o.query(&w).unwrap();
        o.query(&w).unwrap();
        assert_eq!(o.backend_queries(), 1);
        assert_eq!(o.recording(), "{\"word\":[[\"a\",\"1\"]],\"verdict\":true}\n");
    }

    #[test]
    fn accepted_prefixes_are_dropped() {
        let ts = filter_tests(vec![t(&[("a", "1")], true), t(&[("a", "1"), ("b", "2")], true)]);
        assert_eq!(ts.tests, vec![t(&[("a", "1"), ("b", "2")], true)]);
    }

    #[test]
    fn rejected_extensions_are_dropped() {
        let ts = filter_tests(vec![t(&[("a", "9")], false), t(&[("a", "9"), ("b", "10")], false)]);
        assert_eq!(ts.tests, vec![t(&[("a", "9")], false)]);
    }

    #[test]
    fn filtering_is_idempotent() {
        let ts = filter_tests(vec![
            t(&[("a", "1")], true),
            t(&[("a", "1"), ("c", "5")], false),
            t(&[("a", "1"), ("c", "5"), ("b", "6")], false),
            t(&[("a", "3")], false),
        ]);
        assert_eq!(filter_tests(ts.tests.clone()), ts);
        assert_eq!(ts.mba().count(), 1);
        assert_eq!(ts.mbr().count(), 2);
    }

    fn running_suite(oracle_ta: Ta) -> TestSuite {
        let pta = running_pta();
        let g = build_epzg(&pta, EpzgConfig { depth: 2, merge: true }).unwrap();
        let td = generate_test_data(&pta, &g, &TestgenConfig::new(Policy::MinMaxPm1, 2)).unwrap();
        label_tests(&td, &mut Oracle::from_ta(oracle_ta)).unwrap()
    }

    #[test]
    fn identical_oracle_has_no_failing_tests() {
        assert!(failing_tests(&running_suite(running_ta()), &running_ta()).is_empty());
    }

    #[test]
    fn distant_oracle_exposes_a_failing_test() {
        // (1, 4, 4) lies at L1 distance 2 from (2, 3, 4)
        let v = valuation(&[("p2", int(1)), ("p3", int(4)), ("p4", int(4))]);
        let oracle = running_pta().apply_valuation(&v).unwrap();
        let failing = failing_tests(&running_suite(oracle), &running_ta());
        assert!(!failing.is_empty());
        for f in &failing {
            let init = accepts_lenient(&running_ta(), &f.word, AcceptOptions::default());
            assert_ne!(init, f.verdict);
        }
    }

    #[test]
    fn single_disagreeing_word_is_listed() {
        let ts = TestSuite {
            tests: vec![t(&[("a", "2.5"), ("c", "4.5")], false)],
        };
        assert_eq!(failing_tests(&ts, &running_ta()), ts.tests);
    }

    #[test]
    fn recorded_map_answers_and_misses() {
        let text = "{\"word\":[[\"a\",\"1\"]],\"verdict\":false}\n";
        let mut o = Oracle::new(OracleBackend::recorded_from_jsonl(text).unwrap());
        assert!(!o.query(&word(&[("a", "1")])).unwrap());
        assert!(matches!(o.query(&word(&[("a", "2")])), Err(OracleError::Unrecorded(_))));
    }

    #[test]
    fn suite_json_round_trip() {
        let ts = running_suite(running_ta());
        assert_eq!(TestSuite::from_json(&ts.to_json()).unwrap(), ts);
    }

    fn sh(script: &str, timeout: Duration) -> Oracle {
        let cmd = vec!["sh".into(), "-c".into(), script.into()];
        Oracle::new(OracleBackend::ExternalProcess(ExternalProcess::new(cmd, timeout)))
    }

    #[test]
    fn external_process_protocol() {
        // accepts exactly the words mentioning action c
        let mut o = sh(
            r#"while read -r l; do case "$l" in *'"c"'*) echo '{"accept":true}';; *) echo '{"accept":false}';; esac; done"#,
            DEFAULT_TIMEOUT,
        );
        assert!(o.query(&word(&[("a", "1"), ("c", "5/2")])).unwrap());
        assert!(!o.query(&word(&[("a", "1")])).unwrap());
        assert_eq!(o.backend_queries(), 2);
    }

    #[test]
    fn external_process_failures_carry_the_word() {
        let w = word(&[("a", "1")]);
        let garbled = sh("while read -r l; do echo nope; done", DEFAULT_TIMEOUT).query(&w);
        assert!(matches!(garbled, Err(OracleError::Garbled { ref reply, .. }) if reply == "nope"));
        let crashed = sh("exit 0", DEFAULT_TIMEOUT).query(&w);
        assert!(matches!(crashed, Err(OracleError::Crashed { ref word, .. }) if *word == w));
        let slow = sh("sleep 5", Duration::from_millis(200)).query(&w);
        assert!(matches!(slow, Err(OracleError::Timeout { .. })));
        let missing = Oracle::new(OracleBackend::ExternalProcess(ExternalProcess::new(
            vec!["/nonexistent/oracle".into()],
            DEFAULT_TIMEOUT,
        )))
        .query(&w);
        assert!(matches!(missing, Err(OracleError::Spawn { .. })));
    }
}
