//! Experiment descriptions and their on-disk format.
//!
//! The text format is flat `key = value` lines followed by optional
//! whitespace-separated tables:
//!
//! ```text
//! # four validators, one of them byzantine from the start
//! n = 4
//! delta = 2
//! protocol = TOB1
//! horizon = 80
//! seed = 7
//! byzantine = 3
//! adversary = EQUIVOCATE_SPLIT
//!
//! [sleep]
//! # validator  asleep_from  asleep_until (exclusive)
//! 1 10 20
//!
//! [corrupt]
//! # validator  scheduled_at (effective one delta later)
//! 2 40
//! ```
//!
//! GA scenarios may add an `[input]` table (`validator path`, where a path
//! such as `a/c` names the log `[G, a, c]`), and scripted adversaries a
//! `[script]` table (`kind sender recipient view path send_tick delay`).
//! JSON with the same field names is accepted as well.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::types::{BlockId, Log, MessageKind, Tick, ValidatorId, GENESIS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "GA2")]
    Ga2,
    #[serde(rename = "GA3")]
    Ga3,
    #[serde(rename = "TOB1")]
    Tob1,
    #[serde(rename = "TOB2")]
    Tob2,
    #[serde(rename = "TOB1_LMD")]
    Tob1Lmd,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] =
        [ProtocolKind::Ga2, ProtocolKind::Ga3, ProtocolKind::Tob1, ProtocolKind::Tob2, ProtocolKind::Tob1Lmd];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Ga2 => "GA2",
            ProtocolKind::Ga3 => "GA3",
            ProtocolKind::Tob1 => "TOB1",
            ProtocolKind::Tob2 => "TOB2",
            ProtocolKind::Tob1Lmd => "TOB1_LMD",
        }
    }

    pub fn is_ga(self) -> bool {
        matches!(self, ProtocolKind::Ga2 | ProtocolKind::Ga3)
    }

    pub fn is_tob(self) -> bool {
        !self.is_ga()
    }

    /// View length in Δ for the total-order protocols.
    pub fn view_length(self) -> Option<u64> {
        match self {
            ProtocolKind::Tob1 | ProtocolKind::Tob1Lmd => Some(4),
            ProtocolKind::Tob2 => Some(5),
            _ => None,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s)).ok_or_else(|| format!("unknown protocol {s:?}"))
    }
}

/// Vote expiration period in views. `Infinite` never expires.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Eta {
    Finite(u64),
    Infinite,
}

impl Eta {
    /// First view still inside the window of `view`.
    pub fn window_start(self, view: u64) -> u64 {
        match self {
            Eta::Finite(e) => view.saturating_sub(e),
            Eta::Infinite => 0,
        }
    }

    pub fn exceeds(self, pi: u64) -> bool {
        match self {
            Eta::Finite(e) => pi < e,
            Eta::Infinite => true,
        }
    }

    pub fn is_zero(self) -> bool {
        self == Eta::Finite(0)
    }
}

impl fmt::Display for Eta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Eta::Finite(e) => write!(f, "{e}"),
            Eta::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Eta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "infinite" | "∞" => Ok(Eta::Infinite),
            _ => s.parse().map(Eta::Finite).map_err(|_| format!("bad eta {s:?}")),
        }
    }
}

impl Serialize for Eta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Eta::Finite(e) => s.serialize_u64(*e),
            Eta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Eta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Eta::Finite(n)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A single period of asynchrony covering views `last_sync_view + 1 ..= last_sync_view + pi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsynchronyWindow {
    pub last_sync_view: u64,
    pub pi: u64,
}

impl AsynchronyWindow {
    /// Tick range `[start, end)` of the asynchronous views.
    pub fn ticks(&self, view_ticks: u64) -> (Tick, Tick) {
        ((self.last_sync_view + 1) * view_ticks, (self.last_sync_view + self.pi + 1) * view_ticks)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AdversaryStrategy {
    Silent,
    EquivocateSplit,
    WithholdMaxDelay,
    AsyncPartition,
    Scripted,
}

impl AdversaryStrategy {
    pub const ALL: [AdversaryStrategy; 5] = [
        AdversaryStrategy::Silent,
        AdversaryStrategy::EquivocateSplit,
        AdversaryStrategy::WithholdMaxDelay,
        AdversaryStrategy::AsyncPartition,
        AdversaryStrategy::Scripted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryStrategy::Silent => "SILENT",
            AdversaryStrategy::EquivocateSplit => "EQUIVOCATE_SPLIT",
            AdversaryStrategy::WithholdMaxDelay => "WITHHOLD_MAX_DELAY",
            AdversaryStrategy::AsyncPartition => "ASYNC_PARTITION",
            AdversaryStrategy::Scripted => "SCRIPTED",
        }
    }
}

impl FromStr for AdversaryStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AdversaryStrategy::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown adversary strategy {s:?}"))
    }
}

/// How the adversary schedules deliveries inside the synchrony bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayPolicy {
    Random,
    Max,
    Zero,
}

impl FromStr for DelayPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(DelayPolicy::Random),
            "max" => Ok(DelayPolicy::Max),
            "zero" => Ok(DelayPolicy::Zero),
            _ => Err(format!("unknown delay policy {s:?}")),
        }
    }
}

impl fmt::Display for DelayPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DelayPolicy::Random => "random",
            DelayPolicy::Max => "max",
            DelayPolicy::Zero => "zero",
        })
    }
}

/// Asleep during `[from, until)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SleepInterval {
    pub validator: ValidatorId,
    pub from: Tick,
    pub until: Tick,
}

/// Corruption scheduled at `scheduled_at`, effective one Δ later.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corruption {
    pub validator: ValidatorId,
    pub scheduled_at: Tick,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaInput {
    pub validator: ValidatorId,
    pub path: String,
}

/// One message sent by a corrupted validator under the scripted strategy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedSend {
    pub kind: MessageKind,
    pub sender: ValidatorId,
    pub recipient: ValidatorId,
    pub view: u64,
    pub path: String,
    pub send_tick: Tick,
    pub delay: Tick,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub n: u32,
    pub delta: u64,
    pub protocol: ProtocolKind,
    pub horizon: Tick,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Eta>,
    #[serde(default)]
    pub byzantine: Vec<ValidatorId>,
    #[serde(default = "default_strategy")]
    pub adversary: AdversaryStrategy,
    #[serde(default = "default_delay")]
    pub delay: DelayPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asynchrony: Option<AsynchronyWindow>,
    #[serde(default)]
    pub sleep: Vec<SleepInterval>,
    #[serde(default)]
    pub corrupt: Vec<Corruption>,
    #[serde(default)]
    pub input: Vec<GaInput>,
    #[serde(default)]
    pub script: Vec<ScriptedSend>,
}

fn default_strategy() -> AdversaryStrategy {
    AdversaryStrategy::Silent
}

fn default_delay() -> DelayPolicy {
    DelayPolicy::Random
}

/// Label used for honest GA inputs when the scenario names none.
pub const DEFAULT_INPUT_PATH: &str = "a";

impl Scenario {
    /// All validators awake and honest, silent adversary.
    pub fn new(n: u32, delta: u64, protocol: ProtocolKind, horizon: Tick) -> Self {
        Self {
            name: String::new(),
            n,
            delta,
            protocol,
            horizon,
            seed: 0,
            eta: None,
            byzantine: Vec::new(),
            adversary: AdversaryStrategy::Silent,
            delay: DelayPolicy::Random,
            asynchrony: None,
            sleep: Vec::new(),
            corrupt: Vec::new(),
            input: Vec::new(),
            script: Vec::new(),
        }
    }

    pub fn validators(&self) -> impl Iterator<Item = ValidatorId> {
        (0..self.n).map(ValidatorId)
    }

    /// Length of one view in ticks (TOB protocols only).
    pub fn view_ticks(&self) -> Option<u64> {
        self.protocol.view_length().map(|k| k * self.delta)
    }

    pub fn eta_or_zero(&self) -> Eta {
        self.eta.unwrap_or(Eta::Finite(0))
    }

    pub fn is_awake(&self, v: ValidatorId, t: Tick) -> bool {
        !self.sleep.iter().any(|s| s.validator == v && s.from <= t && t < s.until)
    }

    /// Tick at which `v` becomes adversarial, if ever.
    pub fn corrupted_at(&self, v: ValidatorId) -> Option<Tick> {
        if self.byzantine.contains(&v) {
            return Some(0);
        }
        self.corrupt.iter().filter(|c| c.validator == v).map(|c| c.scheduled_at + self.delta).min()
    }

    /// Checks every cross-field rule.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::semantic(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.delta == 0 {
            return bad("delta must be positive".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        let known = |v: ValidatorId| v.0 < self.n;
        let mut seen = BTreeSet::new();
        for &b in &self.byzantine {
            if !known(b) {
                return bad(format!("byzantine validator {} does not exist", b.0));
            }
            if !seen.insert(b) {
                return bad(format!("byzantine validator {} listed twice", b.0));
            }
        }
        for s in &self.sleep {
            if !known(s.validator) {
                return bad(format!("sleep entry for unknown validator {}", s.validator.0));
            }
            if s.from >= s.until {
                return bad(format!("empty sleep interval [{}, {})", s.from, s.until));
            }
            if s.until > self.horizon {
                return bad(format!("sleep interval ends after horizon {}", self.horizon));
            }
        }
        let mut corrupted = BTreeSet::new();
        for c in &self.corrupt {
            if !known(c.validator) {
                return bad(format!("corruption of unknown validator {}", c.validator.0));
            }
            if self.byzantine.contains(&c.validator) {
                return bad(format!("validator {} is already byzantine", c.validator.0));
            }
            if !corrupted.insert(c.validator) {
                return bad(format!("validator {} corrupted twice", c.validator.0));
            }
            if c.scheduled_at >= self.horizon {
                return bad(format!("corruption scheduled after horizon {}", self.horizon));
            }
        }
        if self.eta.is_some() && self.protocol != ProtocolKind::Tob1Lmd {
            return bad(format!("eta is only meaningful for TOB1_LMD, not {}", self.protocol));
        }
        if let Some(w) = &self.asynchrony {
            if self.protocol != ProtocolKind::Tob1Lmd {
                return bad("an asynchrony window requires protocol TOB1_LMD".into());
            }
            if !self.eta_or_zero().exceeds(w.pi) {
                return bad(format!("asynchrony window pi = {} must be below eta = {}", w.pi, self.eta_or_zero()));
            }
        }
        if self.adversary == AdversaryStrategy::AsyncPartition && self.asynchrony.is_none() {
            return bad("ASYNC_PARTITION needs an asynchrony window".into());
        }
        if !self.input.is_empty() && !self.protocol.is_ga() {
            return bad("input table is only valid for GA protocols".into());
        }
        let mut inputs = BTreeSet::new();
        for i in &self.input {
            if !known(i.validator) {
                return bad(format!("input for unknown validator {}", i.validator.0));
            }
            if !inputs.insert(i.validator) {
                return bad(format!("validator {} has two inputs", i.validator.0));
            }
            check_path(&i.path).map_err(ScenarioError::semantic)?;
        }
        if !self.script.is_empty() && self.adversary != AdversaryStrategy::Scripted {
            return bad("script table requires adversary = SCRIPTED".into());
        }
        for s in &self.script {
            if !known(s.sender) || !known(s.recipient) {
                return bad("script row names an unknown validator".into());
            }
            if s.delay > self.delta {
                return bad(format!("scripted delay {} exceeds delta {}", s.delay, self.delta));
            }
            check_path(&s.path).map_err(ScenarioError::semantic)?;
        }
        Ok(())
    }

    /// Logs named by label paths in the input and script tables. Every
    /// distinct path prefix gets one block id, in sorted order, so shared
    /// prefixes share blocks.
    pub fn labelled_logs(&self) -> BTreeMap<String, Log> {
        let mut prefixes = BTreeSet::new();
        let paths = self
            .input
            .iter()
            .map(|i| i.path.as_str())
            .chain(self.script.iter().map(|s| s.path.as_str()))
            .chain(std::iter::once(DEFAULT_INPUT_PATH));
        for p in paths {
            let labels = split_path(p);
            for k in 1..=labels.len() {
                prefixes.insert(labels[..k].join("/"));
            }
        }
        let ids: BTreeMap<String, BlockId> =
            prefixes.iter().enumerate().map(|(i, p)| (p.clone(), BlockId(i as u64 + 1))).collect();
        let mut out = BTreeMap::new();
        out.insert("genesis".to_string(), Log::genesis());
        for p in &prefixes {
            let labels = split_path(p);
            let mut blocks = vec![GENESIS];
            for k in 1..=labels.len() {
                blocks.push(ids[&labels[..k].join("/")]);
            }
            out.insert(p.clone(), Log::from_blocks(blocks).expect("starts at genesis"));
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Json(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Parses either format: JSON when the text starts with `{`.
    pub fn parse_any(text: &str) -> Result<Self, ScenarioError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            text.parse()
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.name.is_empty() {
            let _ = writeln!(out, "name = {}", self.name);
        }
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "delta = {}", self.delta);
        let _ = writeln!(out, "protocol = {}", self.protocol);
        let _ = writeln!(out, "horizon = {}", self.horizon);
        let _ = writeln!(out, "seed = {}", self.seed);
        if let Some(eta) = self.eta {
            let _ = writeln!(out, "eta = {eta}");
        }
        let byz: Vec<String> = self.byzantine.iter().map(|b| b.0.to_string()).collect();
        let _ = writeln!(out, "byzantine = {}", byz.join(", "));
        let _ = writeln!(out, "adversary = {}", self.adversary.name());
        let _ = writeln!(out, "delay = {}", self.delay);
        if let Some(w) = self.asynchrony {
            let _ = writeln!(out, "async_view = {}", w.last_sync_view);
            let _ = writeln!(out, "async_pi = {}", w.pi);
        }
        if !self.sleep.is_empty() {
            out.push_str("\n[sleep]\n");
            for s in &self.sleep {
                let _ = writeln!(out, "{} {} {}", s.validator.0, s.from, s.until);
            }
        }
        if !self.corrupt.is_empty() {
            out.push_str("\n[corrupt]\n");
            for c in &self.corrupt {
                let _ = writeln!(out, "{} {}", c.validator.0, c.scheduled_at);
            }
        }
        if !self.input.is_empty() {
            out.push_str("\n[input]\n");
            for i in &self.input {
                let _ = writeln!(out, "{} {}", i.validator.0, i.path);
            }
        }
        if !self.script.is_empty() {
            out.push_str("\n[script]\n");
            for s in &self.script {
                let kind = match s.kind {
                    MessageKind::GaInput => "input",
                    MessageKind::Proposal => "proposal",
                };
                let _ =
                    writeln!(out, "{kind} {} {} {} {} {} {}", s.sender.0, s.recipient.0, s.view, s.path, s.send_tick, s.delay);
            }
        }
        out
    }
}

fn split_path(p: &str) -> Vec<&str> {
    if p == "genesis" {
        Vec::new()
    } else {
        p.split('/').collect()
    }
}

fn check_path(p: &str) -> Result<(), String> {
    if p == "genesis" {
        return Ok(());
    }
    for label in p.split('/') {
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || label == "genesis" {
            return Err(format!("bad log path {p:?}"));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Sleep,
    Corrupt,
    Input,
    Script,
}

fn num<T: FromStr>(line: usize, field: &str, raw: &str) -> Result<T, ScenarioError> {
    raw.parse().map_err(|_| ScenarioError::parse(line, field, format!("expected a number, got {raw:?}")))
}

impl FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut header: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut section = Section::Header;
        let mut s = Scenario::new(0, 0, ProtocolKind::Tob1, 0);
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ScenarioError::parse(line_no, "section", "missing ']'"))?;
                section = match name.trim() {
                    "sleep" => Section::Sleep,
                    "corrupt" => Section::Corrupt,
                    "input" => Section::Input,
                    "script" => Section::Script,
                    other => return Err(ScenarioError::parse(line_no, "section", format!("unknown section {other:?}"))),
                };
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let want = |k: usize, field: &str| {
                if cols.len() == k {
                    Ok(())
                } else {
                    Err(ScenarioError::parse(line_no, field, format!("expected {k} columns, got {}", cols.len())))
                }
            };
            match section {
                Section::Header => {
                    let (k, v) =
                        line.split_once('=').ok_or_else(|| ScenarioError::parse(line_no, "header", "expected key = value"))?;
                    let key = k.trim().to_string();
                    if header.insert(key.clone(), (line_no, v.trim().to_string())).is_some() {
                        return Err(ScenarioError::parse(line_no, key, "duplicate key"));
                    }
                }
                Section::Sleep => {
                    want(3, "sleep")?;
                    s.sleep.push(SleepInterval {
                        validator: ValidatorId(num(line_no, "sleep.validator", cols[0])?),
                        from: num(line_no, "sleep.from", cols[1])?,
                        until: num(line_no, "sleep.until", cols[2])?,
                    });
                }
                Section::Corrupt => {
                    want(2, "corrupt")?;
                    s.corrupt.push(Corruption {
                        validator: ValidatorId(num(line_no, "corrupt.validator", cols[0])?),
                        scheduled_at: num(line_no, "corrupt.scheduled_at", cols[1])?,
                    });
                }
                Section::Input => {
                    want(2, "input")?;
                    check_path(cols[1]).map_err(|m| ScenarioError::parse(line_no, "input.path", m))?;
                    s.input.push(GaInput {
                        validator: ValidatorId(num(line_no, "input.validator", cols[0])?),
                        path: cols[1].to_string(),
                    });
                }
                Section::Script => {
                    want(7, "script")?;
                    let kind = match cols[0] {
                        "input" => MessageKind::GaInput,
                        "proposal" => MessageKind::Proposal,
                        other => return Err(ScenarioError::parse(line_no, "script.kind", format!("unknown kind {other:?}"))),
                    };
                    check_path(cols[4]).map_err(|m| ScenarioError::parse(line_no, "script.path", m))?;
                    s.script.push(ScriptedSend {
                        kind,
                        sender: ValidatorId(num(line_no, "script.sender", cols[1])?),
                        recipient: ValidatorId(num(line_no, "script.recipient", cols[2])?),
                        view: num(line_no, "script.view", cols[3])?,
                        path: cols[4].to_string(),
                        send_tick: num(line_no, "script.send_tick", cols[5])?,
                        delay: num(line_no, "script.delay", cols[6])?,
                    });
                }
            }
        }

        let mut take = |key: &str| header.remove(key);
        let required =
            |v: Option<(usize, String)>, key: &str| v.ok_or_else(|| ScenarioError::parse(0, key, "missing required key"));
        let (l, v) = required(take("n"), "n")?;
        s.n = num(l, "n", &v)?;
        let (l, v) = required(take("delta"), "delta")?;
        s.delta = num(l, "delta", &v)?;
        let (l, v) = required(take("protocol"), "protocol")?;
        s.protocol = v.parse().map_err(|m: String| ScenarioError::parse(l, "protocol", m))?;
        let (l, v) = required(take("horizon"), "horizon")?;
        s.horizon = num(l, "horizon", &v)?;
        if let Some((l, v)) = take("name") {
            let _ = l;
            s.name = v;
        }
        if let Some((l, v)) = take("seed") {
            s.seed = num(l, "seed", &v)?;
        }
        if let Some((l, v)) = take("eta") {
            s.eta = Some(v.parse().map_err(|m: String| ScenarioError::parse(l, "eta", m))?);
        }
        if let Some((l, v)) = take("byzantine") {
            for item in v.split(',').map(str::trim).filter(|x| !x.is_empty()) {
                s.byzantine.push(ValidatorId(num(l, "byzantine", item)?));
            }
        }
        if let Some((l, v)) = take("adversary") {
            s.adversary = v.parse().map_err(|m: String| ScenarioError::parse(l, "adversary", m))?;
        }
        if let Some((l, v)) = take("delay") {
            s.delay = v.parse().map_err(|m: String| ScenarioError::parse(l, "delay", m))?;
        }
        match (take("async_view"), take("async_pi")) {
            (None, None) => {}
            (Some((l1, v)), Some((l2, p))) => {
                s.asynchrony =
                    Some(AsynchronyWindow { last_sync_view: num(l1, "async_view", &v)?, pi: num(l2, "async_pi", &p)? });
            }
            (Some((l, _)), None) | (None, Some((l, _))) => {
                return Err(ScenarioError::parse(l, "async", "async_view and async_pi go together"));
            }
        }
        if let Some((key, (l, _))) = header.into_iter().next() {
            return Err(ScenarioError::parse(l, key, "unknown key"));
        }
        s.validate()?;
        Ok(s)
    }
}
