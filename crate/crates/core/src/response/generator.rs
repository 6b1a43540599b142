use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::text::{capitalize, sentences};

/// Default timeout for generator calls.
pub const GENERATOR_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Promoter,
    Curiosity,
    Recipe,
    QaPair,
    ZeroShotReply,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRequest {
    pub kind: GeneratorKind,
    pub grounding: String,
    #[serde(default)]
    pub constraints: BTreeMap<String, Value>,
}

impl GeneratorRequest {
    pub fn new(kind: GeneratorKind, grounding: impl Into<String>) -> Self {
        Self { kind, grounding: grounding.into(), constraints: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.constraints.insert(key.to_string(), value.into());
        self
    }

    pub fn constraint_str(&self, key: &str) -> Option<&str> {
        self.constraints.get(key).and_then(Value::as_str)
    }

    pub fn constraint_list(&self, key: &str) -> Vec<String> {
        self.constraints
            .get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeneratorResponse {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingredients: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<String>>,
    /// Question half of a generated QA pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
}

impl GeneratorResponse {
    pub fn text(text: impl Into<String>) -> Self {
        Self { text: text.into(), ..Default::default() }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeneratorError {
    #[error("generator unavailable: {0}")]
    Unavailable(String),
    #[error("generator timed out")]
    Timeout,
    #[error("malformed generator response: {0}")]
    BadResponse(String),
}

/// Text generation provider.
pub trait Generator: Send + Sync {
    fn generate(&self, request: &GeneratorRequest) -> Result<GeneratorResponse, GeneratorError>;
}

impl<G: Generator + ?Sized> Generator for std::sync::Arc<G> {
    fn generate(&self, request: &GeneratorRequest) -> Result<GeneratorResponse, GeneratorError> {
        (**self).generate(request)
    }
}

/// Deterministic offline generator built from the request alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubGenerator;

fn join_and(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

impl Generator for StubGenerator {
    fn generate(&self, req: &GeneratorRequest) -> Result<GeneratorResponse, GeneratorError> {
        Ok(match req.kind {
            GeneratorKind::Curiosity => {
                let fact = sentences(&req.grounding).into_iter().next().unwrap_or_default();
                if fact.is_empty() {
                    return Err(GeneratorError::BadResponse("no grounding to build a curiosity from".into()));
                }
                GeneratorResponse::text(format!("Did you know? {fact}"))
            }
            GeneratorKind::Promoter => {
                let ings: Vec<String> = req.constraint_list("ingredients").into_iter().take(3).collect();
                if ings.is_empty() {
                    GeneratorResponse::text("A simple homemade favorite that comes together quickly.")
                } else {
                    GeneratorResponse::text(format!(
                        "A simple homemade favorite with {} that comes together quickly.",
                        join_and(&ings)
                    ))
                }
            }
            GeneratorKind::Recipe => {
                let ings = req.constraint_list("ingredients");
                let styles = req.constraint_list("styles");
                if ings.is_empty() {
                    return Err(GeneratorError::BadResponse("recipe request without ingredients".into()));
                }
                let lead = styles.first().map(|s| format!("{} ", capitalize(s))).unwrap_or_default();
                let title =
                    format!("{lead}{} Bake", ings.iter().map(|i| capitalize(i)).collect::<Vec<_>>().join(" and "));
                let mut all = ings.clone();
                all.extend(["olive oil".to_string(), "salt".to_string()]);
                let steps = vec![
                    "Preheat the oven to 200 C.".to_string(),
                    format!("Chop the {} into even pieces.", join_and(&ings)),
                    "Toss everything with olive oil and salt in a baking dish.".to_string(),
                    "Bake for 25 minutes until tender and golden.".to_string(),
                ];
                GeneratorResponse {
                    text: format!("{title}: an easy bake with {}.", join_and(&ings)),
                    title: Some(title),
                    ingredients: Some(all),
                    steps: Some(steps),
                    question: None,
                }
            }
            GeneratorKind::QaPair => {
                let step = req.grounding.trim();
                let focus = req.constraint_str("focus").unwrap_or("this step");
                GeneratorResponse {
                    text: format!("The step says: {step}"),
                    question: Some(format!("What should I do with the {focus}?")),
                    ..Default::default()
                }
            }
            GeneratorKind::ZeroShotReply => {
                GeneratorResponse::text("I'm not sure about that, but I'm happy to keep helping with your task.")
            }
        })
    }
}

/// One canned response. `key`, when set, must equal the request's `title`
/// constraint or occur in its grounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub kind: GeneratorKind,
    #[serde(default)]
    pub key: Option<String>,
    pub response: GeneratorResponse,
}

/// Plays back canned responses: the first fixture whose kind and key fit.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FixtureGenerator {
    fixtures: Vec<Fixture>,
}

impl FixtureGenerator {
    pub fn new(fixtures: Vec<Fixture>) -> Self {
        Self { fixtures }
    }

    pub fn load(path: &Path) -> Result<Self, super::ResponseError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

impl Generator for FixtureGenerator {
    fn generate(&self, req: &GeneratorRequest) -> Result<GeneratorResponse, GeneratorError> {
        self.fixtures
            .iter()
            .find(|f| {
                f.kind == req.kind
                    && f.key
                        .as_deref()
                        .is_none_or(|k| req.constraint_str("title") == Some(k) || req.grounding.contains(k))
            })
            .map(|f| f.response.clone())
            .ok_or_else(|| GeneratorError::Unavailable(format!("no fixture for {:?}", req.kind)))
    }
}

/// Client for an operator-supplied completion endpoint: POST the request
/// as JSON, read a [`GeneratorResponse`] back.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    url: String,
    agent: ureq::Agent,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>) -> Self {
        Self::with_timeout(url, GENERATOR_TIMEOUT)
    }

    pub fn with_timeout(url: impl Into<String>, timeout: Duration) -> Self {
        Self { url: url.into(), agent: ureq::AgentBuilder::new().timeout(timeout).build() }
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, req: &GeneratorRequest) -> Result<GeneratorResponse, GeneratorError> {
        let body = serde_json::to_value(req).map_err(|e| GeneratorError::BadResponse(e.to_string()))?;
        match self.agent.post(&self.url).send_json(body) {
            Ok(resp) => resp.into_json().map_err(|e| GeneratorError::BadResponse(e.to_string())),
            Err(ureq::Error::Transport(t)) if t.kind() == ureq::ErrorKind::Io => {
                let msg = t.to_string();
                if msg.contains("timed out") {
                    Err(GeneratorError::Timeout)
                } else {
                    Err(GeneratorError::Unavailable(msg))
                }
            }
            Err(e) => Err(GeneratorError::Unavailable(e.to_string())),
        }
    }
}

type GenFn = dyn Fn(&GeneratorRequest) -> Result<GeneratorResponse, GeneratorError> + Send + Sync;

/// Generator backed by a closure.
pub struct FnGenerator(Box<GenFn>);

impl FnGenerator {
    pub fn new(
        f: impl Fn(&GeneratorRequest) -> Result<GeneratorResponse, GeneratorError> + Send + Sync + 'static,
    ) -> Self {
        Self(Box::new(f))
    }
}

impl Generator for FnGenerator {
    fn generate(&self, req: &GeneratorRequest) -> Result<GeneratorResponse, GeneratorError> {
        (self.0)(req)
    }
}

/// Wraps a generator and records every request/response pair that crosses
/// the provider boundary.
pub struct Recording<G> {
    inner: G,
    log: Mutex<Vec<(GeneratorRequest, Result<GeneratorResponse, GeneratorError>)>>,
    calls: AtomicUsize,
}

impl<G: Generator> Recording<G> {
    pub fn new(inner: G) -> Self {
        Self { inner, log: Mutex::new(Vec::new()), calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn log(&self) -> Vec<(GeneratorRequest, Result<GeneratorResponse, GeneratorError>)> {
        self.log.lock().expect("log lock").clone()
    }
}

impl<G: Generator> Generator for Recording<G> {
    fn generate(&self, req: &GeneratorRequest) -> Result<GeneratorResponse, GeneratorError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let r = self.inner.generate(req);
        self.log.lock().expect("log lock").push((req.clone(), r.clone()));
        r
    }
}
