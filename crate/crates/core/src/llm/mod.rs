//! Prompt construction, chat-completion calls (remote or stubbed) and
//! extraction of the transformed function.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cfront::{self, ParseError};
use crate::corpus::CandidateSnippet;

pub const PLACEHOLDER: &str = "{provided_code_snippet}";

const DEFAULT_TEMPLATE: &str = include_str!("prompt_default.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub role: String,
    pub task: String,
    pub steps: String,
    pub alignment: String,
    pub positive_example: String,
    pub negative_example: String,
    pub output_format: String,
    pub snippet: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateOverride {
    role: Option<String>,
    task: Option<String>,
    steps: Option<String>,
    alignment: Option<String>,
    positive_example: Option<String>,
    negative_example: Option<String>,
    output_format: Option<String>,
    snippet: Option<String>,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        toml::from_str(DEFAULT_TEMPLATE).expect("embedded template parses")
    }
}

impl PromptTemplate {
    /// Defaults with any section present in `path` replaced.
    pub fn with_overrides(path: &Path) -> anyhow::Result<PromptTemplate> {
        let text = std::fs::read_to_string(path)?;
        let o: TemplateOverride = toml::from_str(&text)?;
        let d = PromptTemplate::default();
        let t = PromptTemplate {
            role: o.role.unwrap_or(d.role),
            task: o.task.unwrap_or(d.task),
            steps: o.steps.unwrap_or(d.steps),
            alignment: o.alignment.unwrap_or(d.alignment),
            positive_example: o.positive_example.unwrap_or(d.positive_example),
            negative_example: o.negative_example.unwrap_or(d.negative_example),
            output_format: o.output_format.unwrap_or(d.output_format),
            snippet: o.snippet.unwrap_or(d.snippet),
        };
        anyhow::ensure!(
            t.snippet.matches(PLACEHOLDER).count() == 1,
            "the snippet section must contain {PLACEHOLDER} exactly once"
        );
        Ok(t)
    }

    pub fn sections(&self) -> [&str; 8] {
        [
            &self.role,
            &self.task,
            &self.steps,
            &self.alignment,
            &self.positive_example,
            &self.negative_example,
            &self.output_format,
            &self.snippet,
        ]
    }
}

pub fn build_prompt(snippet: &CandidateSnippet, template: &PromptTemplate) -> String {
    let parts: Vec<String> = template
        .sections()
        .iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    // substitute last so snippet text that happens to contain the placeholder is left alone
    let joined = parts.join("\n\n");
    let at = joined.rfind(PLACEHOLDER).expect("template has a placeholder");
    format!("{}{}{}\n", &joined[..at], snippet.text.trim_end(), &joined[at + PLACEHOLDER.len()..])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LlmMode {
    Remote,
    Stub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub api_key_env: String,
    pub mode: LlmMode,
    /// Directory of `<snippet-id>.response.txt` files used in stub mode.
    pub stub_dir: Option<PathBuf>,
    pub request_timeout: Duration,
    /// Waits before each retry; the number of entries bounds the retries.
    pub backoff: Vec<Duration>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            max_tokens: 512,
            temperature: 0.7,
            api_key_env: "OPENAI_API_KEY".into(),
            mode: LlmMode::Stub,
            stub_dir: None,
            request_timeout: Duration::from_secs(120),
            backoff: vec![Duration::from_secs(1), Duration::from_secs(4), Duration::from_secs(16)],
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("HTTP status {0}")]
    HttpError(u16),
    #[error("request timed out")]
    Timeout,
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("response contains no fenced code block")]
    NoCodeBlock,
    #[error("response contains {0} fenced code blocks")]
    MultipleCodeBlocks(usize),
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Violation {
    NotSingleFunction,
    NonNumericParam,
    NonNumericReturn,
    UnsupportedConstruct,
    ParseError,
    NoCodeBlock,
    MultipleCodeBlocks,
}

impl Violation {
    pub fn as_str(self) -> &'static str {
        match self {
            Violation::NotSingleFunction => "not-single-function",
            Violation::NonNumericParam => "non-numeric-param",
            Violation::NonNumericReturn => "non-numeric-return",
            Violation::UnsupportedConstruct => "unsupported-construct",
            Violation::ParseError => "parse-error",
            Violation::NoCodeBlock => "no-code-block",
            Violation::MultipleCodeBlocks => "multiple-code-blocks",
        }
    }

    /// Violations of the numeric-I/O requirement.
    pub fn is_io(self) -> bool {
        matches!(self, Violation::NonNumericParam | Violation::NonNumericReturn)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformResult {
    pub snippet_id: String,
    pub raw_response: String,
    pub extracted_code: Option<String>,
    pub violations: Vec<Violation>,
    pub attempts: u32,
}

/// The contents of the single fenced code block in `response`.
pub fn extract_code(response: &str) -> Result<String, LlmError> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in response.lines() {
        let fence = line.trim_start().starts_with("```");
        match (&mut current, fence) {
            (None, true) => current = Some(Vec::new()),
            (Some(body), true) => {
                blocks.push(body.join("\n"));
                current = None;
            }
            (Some(body), false) => body.push(line),
            (None, false) => {}
        }
    }
    match blocks.len() {
        0 => Err(LlmError::NoCodeBlock),
        1 => {
            let mut code = blocks.pop().unwrap();
            code.push('\n');
            Ok(code)
        }
        n => Err(LlmError::MultipleCodeBlocks(n)),
    }
}

/// Syntax-level alignment problems of a transformed function; empty means aligned.
pub fn check_alignment(code: &str) -> Vec<Violation> {
    match cfront::parse_function(code) {
        Err(ParseError::Syntax { .. }) => vec![Violation::ParseError],
        Err(ParseError::Unsupported { .. }) => vec![Violation::UnsupportedConstruct],
        Err(ParseError::NotSingleFunction { .. }) => vec![Violation::NotSingleFunction],
        Ok(unit) => {
            let mut v = Vec::new();
            if !unit.function.param_tys.iter().all(|t| t.is_numeric_or_numeric_pointer()) {
                v.push(Violation::NonNumericParam);
            }
            if !unit.function.ret_ty.is_arith() {
                v.push(Violation::NonNumericReturn);
            }
            v
        }
    }
}

/// Transform one snippet. Extraction failures are reported as violations;
/// transport failures are errors.
pub fn transform_snippet(
    snippet: &CandidateSnippet,
    template: &PromptTemplate,
    config: &LlmConfig,
) -> Result<TransformResult, LlmError> {
    let (raw, attempts) = match config.mode {
        LlmMode::Stub => (stub_response(snippet, config), 0),
        LlmMode::Remote => {
            let prompt = build_prompt(snippet, template);
            remote_complete(&prompt, config)?
        }
    };
    let (extracted_code, violations) = match extract_code(&raw) {
        Ok(code) => {
            let v = check_alignment(&code);
            (Some(code), v)
        }
        Err(LlmError::MultipleCodeBlocks(_)) => (None, vec![Violation::MultipleCodeBlocks]),
        Err(_) => (None, vec![Violation::NoCodeBlock]),
    };
    Ok(TransformResult {
        snippet_id: snippet.id.clone(),
        raw_response: raw,
        extracted_code,
        violations,
        attempts,
    })
}

fn stub_response(snippet: &CandidateSnippet, config: &LlmConfig) -> String {
    let Some(dir) = &config.stub_dir else { return String::new() };
    let path = dir.join(format!("{}.response.txt", snippet.id));
    std::fs::read_to_string(path).unwrap_or_default()
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    max_tokens: u32,
    temperature: f64,
}

/// POST the prompt, retrying rate limits, server errors and timeouts.
/// Returns the reply text and the number of attempts made.
pub fn remote_complete(prompt: &str, config: &LlmConfig) -> Result<(String, u32), LlmError> {
    let key = std::env::var(&config.api_key_env)
        .map_err(|_| LlmError::MissingApiKey(config.api_key_env.clone()))?;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(config.request_timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let body = ChatRequest {
        model: &config.model,
        messages: vec![ChatMessage { role: "user", content: prompt }],
        max_tokens: config.max_tokens,
        temperature: config.temperature,
    };
    let mut attempt = 0u32;
    loop {
        attempt += 1;
        let outcome = agent
            .post(&config.endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(&body);
        let err = match outcome {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                if status == 200 {
                    let v: serde_json::Value = resp
                        .body_mut()
                        .read_json()
                        .map_err(|e| LlmError::Malformed(e.to_string()))?;
                    let text = v["choices"][0]["message"]["content"]
                        .as_str()
                        .ok_or_else(|| LlmError::Malformed("missing choices[0].message.content".into()))?;
                    log::info!("chat completion succeeded after {attempt} attempt(s)");
                    return Ok((text.to_string(), attempt));
                }
                if status == 429 {
                    LlmError::RateLimited { attempts: attempt }
                } else {
                    LlmError::HttpError(status)
                }
            }
            Err(ureq::Error::Timeout(_)) => LlmError::Timeout,
            Err(e) => LlmError::Transport(e.to_string()),
        };
        let retryable = match &err {
            LlmError::RateLimited { .. } | LlmError::Timeout => true,
            LlmError::HttpError(s) => *s >= 500,
            _ => false,
        };
        let Some(wait) = config.backoff.get(attempt as usize - 1).filter(|_| retryable) else {
            return Err(err);
        };
        log::warn!("attempt {attempt} failed ({err}), retrying in {wait:?}");
        std::thread::sleep(*wait);
    }
}

/// Transform many snippets with at most `jobs` requests in flight. Results
/// keep the input order.
pub fn transform_all(
    snippets: &[CandidateSnippet],
    template: &PromptTemplate,
    config: &LlmConfig,
    jobs: usize,
) -> Vec<Result<TransformResult, LlmError>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    pool.install(|| snippets.par_iter().map(|s| transform_snippet(s, template, config)).collect())
}
