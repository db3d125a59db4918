//! HTTP endpoint probing.
//!
//! The prober is deliberately strict about declaring things dead: an entity
//! is only treated as unavailable when its URL is unreachable or answers
//! 404, and across retries the *best* observed outcome wins, so a flaky
//! success is never downgraded by a later failure.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::LivenessError;

/// Outcome of probing one URL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "code")]
pub enum ProbeOutcome {
    /// Got an HTTP response with a non-error-ish status (2xx/3xx).
    Ok,
    /// The request answered 404.
    NotFound404,
    /// No HTTP response was obtained at all.
    Unreachable,
    /// Any other HTTP status.
    OtherStatus(u16),
}

impl ProbeOutcome {
    pub fn from_status(status: Option<u16>) -> ProbeOutcome {
        match status {
            None => ProbeOutcome::Unreachable,
            Some(404) => ProbeOutcome::NotFound404,
            Some(code) if (200..400).contains(&code) => ProbeOutcome::Ok,
            Some(code) => ProbeOutcome::OtherStatus(code),
        }
    }

    /// Availability ranking: higher is "more available". Only unreachable
    /// and 404 count as dead signals, so they rank below every status that
    /// proves a server answered.
    pub fn rank(self) -> u8 {
        match self {
            ProbeOutcome::Ok => 3,
            ProbeOutcome::OtherStatus(_) => 2,
            ProbeOutcome::NotFound404 => 1,
            ProbeOutcome::Unreachable => 0,
        }
    }

    /// A dead-class signal under the strict rule: unreachable or 404.
    pub fn is_dead_signal(self) -> bool {
        matches!(self, ProbeOutcome::NotFound404 | ProbeOutcome::Unreachable)
    }

    pub fn best(a: ProbeOutcome, b: ProbeOutcome) -> ProbeOutcome {
        if b.rank() > a.rank() {
            b
        } else {
            a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub url: String,
    pub outcome: ProbeOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetched_body_excerpt: Option<String>,
    /// Unix seconds. Fixture replays carry the canned value so runs stay
    /// byte-identical.
    pub probe_time: i64,
    /// 1-based attempt number that produced this outcome.
    pub attempt: u32,
}

/// A probe result together with the full fetched body (when any); the
/// excerpt in [`ProbeResult`] is evidence-sized, the body is for content
/// checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeCapture {
    pub result: ProbeResult,
    pub body: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ProbePolicy {
    pub timeout: Duration,
    /// Total attempts per URL.
    pub retries: u32,
    pub retry_gap: Duration,
    /// Minimum spacing between requests to the same host.
    pub per_host_gap: Duration,
}

impl Default for ProbePolicy {
    fn default() -> Self {
        ProbePolicy {
            timeout: Duration::from_secs(10),
            retries: 3,
            retry_gap: Duration::from_millis(200),
            per_host_gap: Duration::from_secs(1),
        }
    }
}

const EXCERPT_LEN: usize = 200;
const BODY_CAP: usize = 256 * 1024;

pub fn excerpt_of(body: &str) -> String {
    body.chars().take(EXCERPT_LEN).collect()
}

/// Source of probe captures: the live prober or a fixture store.
pub trait ProbeSource: Sync {
    fn capture(&self, url: &str) -> Result<ProbeCapture, LivenessError>;
}

/// Live HTTP prober with retries, best-of outcome selection, and a per-host
/// rate limit.
pub struct LiveProber {
    client: reqwest::blocking::Client,
    policy: ProbePolicy,
    host_last: Mutex<HashMap<String, Instant>>,
}

impl LiveProber {
    pub fn new(policy: ProbePolicy) -> Result<LiveProber, LivenessError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(policy.timeout)
            .build()
            .map_err(|e| LivenessError::Client(e.to_string()))?;
        Ok(LiveProber {
            client,
            policy,
            host_last: Mutex::new(HashMap::new()),
        })
    }

    fn wait_for_host_slot(&self, host: &str) {
        loop {
            let wait = {
                let mut last = self.host_last.lock().expect("host limiter lock");
                let now = Instant::now();
                match last.get(host) {
                    Some(&prev) => {
                        let elapsed = now.duration_since(prev);
                        if elapsed >= self.policy.per_host_gap {
                            last.insert(host.to_string(), now);
                            None
                        } else {
                            Some(self.policy.per_host_gap - elapsed)
                        }
                    }
                    None => {
                        last.insert(host.to_string(), now);
                        None
                    }
                }
            };
            match wait {
                None => return,
                Some(d) => std::thread::sleep(d),
            }
        }
    }

    /// Probe one URL: up to `retries` attempts, keeping the most-available
    /// outcome. Network-layer failures map to `Unreachable`, never to an
    /// error; only a syntactically invalid URL is an error.
    pub fn probe(&self, url: &str) -> Result<ProbeCapture, LivenessError> {
        let parsed =
            url::Url::parse(url).map_err(|e| LivenessError::InvalidUrl {
                url: url.to_string(),
                message: e.to_string(),
            })?;
        let host = parsed.host_str().unwrap_or("").to_string();
        let mut best: Option<(ProbeOutcome, Option<String>, u32)> = None;
        for attempt in 1..=self.policy.retries.max(1) {
            if !host.is_empty() {
                self.wait_for_host_slot(&host);
            }
            let (outcome, body) = match self.client.get(url.to_string()).send() {
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    let body = resp.text().ok().map(|mut t| {
                        t.truncate(BODY_CAP);
                        t
                    });
                    (ProbeOutcome::from_status(Some(status)), body)
                }
                Err(_) => (ProbeOutcome::Unreachable, None),
            };
            let replace = best
                .as_ref()
                .map_or(true, |(prev, _, _)| outcome.rank() > prev.rank());
            if replace {
                best = Some((outcome, body, attempt));
            }
            if outcome == ProbeOutcome::Ok {
                break;
            }
            if attempt < self.policy.retries {
                std::thread::sleep(self.policy.retry_gap);
            }
        }
        let (outcome, body, attempt) = best.expect("at least one attempt");
        let probe_time = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0);
        Ok(ProbeCapture {
            result: ProbeResult {
                url: url.to_string(),
                outcome,
                fetched_body_excerpt: body.as_deref().map(excerpt_of),
                probe_time,
                attempt,
            },
            body,
        })
    }
}

impl ProbeSource for LiveProber {
    fn capture(&self, url: &str) -> Result<ProbeCapture, LivenessError> {
        self.probe(url)
    }
}

/// Merge several captures of the same URL, best-of.
pub fn merge_captures(captures: Vec<ProbeCapture>) -> Option<ProbeCapture> {
    captures
        .into_iter()
        .max_by_key(|c| c.result.outcome.rank())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read as _, Write as _};
    use std::net::TcpListener;

    #[test]
    fn outcome_from_status() {
        assert_eq!(ProbeOutcome::from_status(Some(200)), ProbeOutcome::Ok);
        assert_eq!(ProbeOutcome::from_status(Some(301)), ProbeOutcome::Ok);
        assert_eq!(ProbeOutcome::from_status(Some(404)), ProbeOutcome::NotFound404);
        assert_eq!(
            ProbeOutcome::from_status(Some(500)),
            ProbeOutcome::OtherStatus(500)
        );
        assert_eq!(ProbeOutcome::from_status(None), ProbeOutcome::Unreachable);
    }

    #[test]
    fn best_of_prefers_more_available() {
        use ProbeOutcome::*;
        assert_eq!(ProbeOutcome::best(NotFound404, Ok), Ok);
        assert_eq!(ProbeOutcome::best(Unreachable, NotFound404), NotFound404);
        assert_eq!(ProbeOutcome::best(Ok, Unreachable), Ok);
    }

    /// One-shot HTTP stub answering the given status lines in order.
    fn spawn_stub(responses: Vec<(u16, &'static str)>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = match listener.accept() {
                    Ok(s) => s,
                    Err(_) => return,
                };
                let mut buf = [0u8; 1024];
                let _ = stream.read(&mut buf);
                let reason = match status {
                    200 => "OK",
                    404 => "Not Found",
                    _ => "Status",
                };
                let resp = format!(
                    "HTTP/1.1 {status} {reason}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(resp.as_bytes());
            }
        });
        format!("http://{addr}/")
    }

    fn fast_policy(retries: u32) -> ProbePolicy {
        ProbePolicy {
            timeout: Duration::from_secs(2),
            retries,
            retry_gap: Duration::from_millis(10),
            per_host_gap: Duration::from_millis(10),
        }
    }

    #[test]
    fn probe_ok_server() {
        let url = spawn_stub(vec![(200, "hello")]);
        let prober = LiveProber::new(fast_policy(1)).unwrap();
        let cap = prober.probe(&url).unwrap();
        assert_eq!(cap.result.outcome, ProbeOutcome::Ok);
        assert_eq!(cap.body.as_deref(), Some("hello"));
    }

    #[test]
    fn probe_all_404() {
        let url = spawn_stub(vec![(404, "gone"), (404, "gone"), (404, "gone")]);
        let prober = LiveProber::new(fast_policy(3)).unwrap();
        let cap = prober.probe(&url).unwrap();
        assert_eq!(cap.result.outcome, ProbeOutcome::NotFound404);
    }

    #[test]
    fn probe_best_of_404_then_200() {
        let url = spawn_stub(vec![(404, "gone"), (200, "back")]);
        let prober = LiveProber::new(fast_policy(3)).unwrap();
        let cap = prober.probe(&url).unwrap();
        assert_eq!(cap.result.outcome, ProbeOutcome::Ok);
        assert_eq!(cap.result.attempt, 2);
    }

    #[test]
    fn probe_unreachable_maps_to_outcome_not_error() {
        // Bind then drop, so the port refuses connections.
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let prober = LiveProber::new(fast_policy(1)).unwrap();
        let cap = prober.probe(&format!("http://{addr}/")).unwrap();
        assert_eq!(cap.result.outcome, ProbeOutcome::Unreachable);
    }

    #[test]
    fn probe_invalid_url_is_error() {
        let prober = LiveProber::new(fast_policy(1)).unwrap();
        assert!(matches!(
            prober.probe("not a url"),
            Err(LivenessError::InvalidUrl { .. })
        ));
    }
}
