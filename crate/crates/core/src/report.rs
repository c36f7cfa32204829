//! Machine-readable claim reports and the hashed envelope every emitted
//! report is wrapped in.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{GftError, Result};

/// Outcome of one computed comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The comparison cannot be decided by computation (e.g. a sampled
    /// probe of a universally quantified statement).
    Indeterminate,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    /// Conjunction: any fail is a fail, otherwise any indeterminate wins.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Indeterminate, _) | (_, Indeterminate) => Indeterminate,
            _ => Pass,
        }
    }
}

/// Record of one claim check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub claim_id: String,
    /// The mathematical statement being measured.
    pub anchor: String,
    pub inputs: BTreeMap<String, Value>,
    pub computed: BTreeMap<String, f64>,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub seed: Option<u64>,
    pub notes: Vec<String>,
}

impl ClaimReport {
    pub fn new(claim_id: impl Into<String>, anchor: impl Into<String>, tolerance: f64) -> Self {
        Self {
            claim_id: claim_id.into(),
            anchor: anchor.into(),
            inputs: BTreeMap::new(),
            computed: BTreeMap::new(),
            verdict: Verdict::Pass,
            tolerance,
            seed: None,
            notes: Vec::new(),
        }
    }

    pub fn input(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_owned(), value.into());
        self
    }

    /// Records a computed number. Non-finite values cannot travel through
    /// JSON, so they are dropped with a note instead.
    pub fn record(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.computed.insert(key.to_owned(), value);
        } else {
            self.notes.push(format!("{key} is not finite ({value})"));
        }
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    /// Folds one comparison into the verdict.
    pub fn require(&mut self, verdict: Verdict) {
        self.verdict = self.verdict.and(verdict);
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

pub const REPORT_FORMAT: &str = "gftlab-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeHeader {
    pub format: String,
    pub kind: String,
    /// Hex SHA-256 of the canonical JSON of `{"body": .., "config": ..}`.
    pub content_hash: String,
}

/// A report body together with the configuration that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub header: EnvelopeHeader,
    pub config: Value,
    pub body: Value,
}

fn canonical_hash(config: &Value, body: &Value) -> String {
    // serde_json's default map is ordered, so this string is canonical.
    let mut doc = serde_json::Map::new();
    doc.insert("body".into(), body.clone());
    doc.insert("config".into(), config.clone());
    let text = Value::Object(doc).to_string();
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Envelope {
    pub fn wrap<T: Serialize>(kind: &str, config: &RunConfig, body: &T) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let body = serde_json::to_value(body)?;
        let content_hash = canonical_hash(&config, &body);
        Ok(Self {
            header: EnvelopeHeader {
                format: REPORT_FORMAT.to_owned(),
                kind: kind.to_owned(),
                content_hash,
            },
            config,
            body,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses an envelope and checks its hash against its contents.
    pub fn parse_verified(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text)?;
        let expected = canonical_hash(&env.config, &env.body);
        if expected != env.header.content_hash {
            return Err(GftError::Parse(format!(
                "content hash mismatch: header {} but contents hash to {expected}",
                env.header.content_hash
            )));
        }
        Ok(env)
    }
}

/// Structural check of a serialized [`ClaimReport`]: exact field set and types.
pub fn validate_claim_report(v: &Value) -> std::result::Result<(), String> {
    let obj = v.as_object().ok_or("claim report is not an object")?;
    const FIELDS: [&str; 8] = [
        "claim_id", "anchor", "inputs", "computed", "verdict", "tolerance", "seed", "notes",
    ];
    for key in obj.keys() {
        if !FIELDS.contains(&key.as_str()) {
            return Err(format!("unexpected field {key:?}"));
        }
    }
    let field = |k: &str| obj.get(k).ok_or_else(|| format!("missing field {k:?}"));
    if field("claim_id")?.as_str().is_none_or(str::is_empty) {
        return Err("claim_id must be a non-empty string".into());
    }
    if field("anchor")?.as_str().is_none_or(str::is_empty) {
        return Err("anchor must be a non-empty string".into());
    }
    if !field("inputs")?.is_object() {
        return Err("inputs must be an object".into());
    }
    let computed = field("computed")?.as_object().ok_or("computed must be an object")?;
    if let Some((k, _)) = computed.iter().find(|(_, v)| !v.is_number()) {
        return Err(format!("computed.{k} is not a number"));
    }
    match field("verdict")?.as_str() {
        Some("pass" | "fail" | "indeterminate") => {}
        _ => return Err("verdict must be pass, fail or indeterminate".into()),
    }
    if !field("tolerance")?.is_number() {
        return Err("tolerance must be a number".into());
    }
    let seed = field("seed")?;
    if !(seed.is_null() || seed.is_u64()) {
        return Err("seed must be null or an unsigned integer".into());
    }
    let notes = field("notes")?.as_array().ok_or("notes must be an array")?;
    if notes.iter().any(|n| !n.is_string()) {
        return Err("notes must contain strings".into());
    }
    Ok(())
}
