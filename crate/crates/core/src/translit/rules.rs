//! Ordered, context-sensitive grapheme rewrite rules.
//!
//! A [`RuleTable`] is applied in a single left-to-right pass. At each
//! position the rules are tried longest source first (ties by ascending
//! priority); the first rule whose source and literal contexts match fires.
//! Contexts are matched against the *input* text, never against output that
//! has already been produced.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TranslitError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableMode {
    G2p,
    Romanize,
}

impl TableMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TableMode::G2p => "g2p",
            TableMode::Romanize => "rom",
        }
    }
}

impl FromStr for TableMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "g2p" | "ipa" => Ok(TableMode::G2p),
            "rom" | "romanize" => Ok(TableMode::Romanize),
            other => Err(format!("unknown table mode `{other}`")),
        }
    }
}

impl fmt::Display for TableMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What happens to a character no rule matches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Passthrough {
    #[default]
    Keep,
    Drop,
    Error,
}

impl FromStr for Passthrough {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "keep" => Ok(Passthrough::Keep),
            "drop" => Ok(Passthrough::Drop),
            "error" => Ok(Passthrough::Error),
            other => Err(format!("unknown passthrough policy `{other}`")),
        }
    }
}

/// Text preparation applied before the rules run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocess {
    #[default]
    None,
    /// Split precomposed Hangul syllables into conjoining jamo.
    Hangul,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteRule {
    pub source: String,
    pub target: String,
    pub left_context: Option<String>,
    pub right_context: Option<String>,
    pub priority: i64,
}

impl RewriteRule {
    pub fn new(source: impl Into<String>, target: impl Into<String>, priority: i64) -> Self {
        RewriteRule {
            source: source.into(),
            target: target.into(),
            left_context: None,
            right_context: None,
            priority,
        }
    }

    pub fn with_left(mut self, ctx: impl Into<String>) -> Self {
        self.left_context = Some(ctx.into()).filter(|c: &String| !c.is_empty());
        self
    }

    pub fn with_right(mut self, ctx: impl Into<String>) -> Self {
        self.right_context = Some(ctx.into()).filter(|c: &String| !c.is_empty());
        self
    }

    fn matches_at(&self, text: &str, pos: usize) -> bool {
        let rest = &text[pos..];
        if !rest.starts_with(&self.source) {
            return false;
        }
        if let Some(left) = &self.left_context {
            if !text[..pos].ends_with(left.as_str()) {
                return false;
            }
        }
        if let Some(right) = &self.right_context {
            if !rest[self.source.len()..].starts_with(right.as_str()) {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RuleTableRepr", into = "RuleTableRepr")]
pub struct RuleTable {
    lang: String,
    mode: TableMode,
    passthrough: Passthrough,
    preprocess: Preprocess,
    rules: Vec<RewriteRule>,
    /// first char of source -> rule indices, in match order
    index: HashMap<char, Vec<usize>>,
}

impl PartialEq for RuleTable {
    fn eq(&self, other: &Self) -> bool {
        self.lang == other.lang
            && self.mode == other.mode
            && self.passthrough == other.passthrough
            && self.preprocess == other.preprocess
            && self.rules == other.rules
    }
}

#[derive(Serialize, Deserialize)]
struct RuleTableRepr {
    lang: String,
    mode: TableMode,
    passthrough: Passthrough,
    #[serde(default)]
    preprocess: Preprocess,
    rules: Vec<RewriteRule>,
}

impl TryFrom<RuleTableRepr> for RuleTable {
    type Error = TranslitError;

    fn try_from(r: RuleTableRepr) -> Result<Self, Self::Error> {
        Ok(RuleTable::new(r.lang, r.mode, r.rules, r.passthrough)?.with_preprocess(r.preprocess))
    }
}

impl From<RuleTable> for RuleTableRepr {
    fn from(t: RuleTable) -> Self {
        RuleTableRepr {
            lang: t.lang,
            mode: t.mode,
            passthrough: t.passthrough,
            preprocess: t.preprocess,
            rules: t.rules,
        }
    }
}

impl RuleTable {
    pub fn new(
        lang: impl Into<String>,
        mode: TableMode,
        mut rules: Vec<RewriteRule>,
        passthrough: Passthrough,
    ) -> Result<Self, TranslitError> {
        let mut priorities = HashSet::new();
        let mut keys = HashSet::new();
        for rule in &rules {
            if rule.source.is_empty() {
                return Err(TranslitError::InvalidTable("rule with empty source".into()));
            }
            if !priorities.insert(rule.priority) {
                return Err(TranslitError::InvalidTable(format!("duplicate priority {}", rule.priority)));
            }
            if !keys.insert((&rule.source, &rule.left_context, &rule.right_context)) {
                return Err(TranslitError::InvalidTable(format!(
                    "duplicate rule for `{}` with identical contexts",
                    rule.source
                )));
            }
        }
        rules.sort_by(|a, b| {
            b.source
                .chars()
                .count()
                .cmp(&a.source.chars().count())
                .then(a.priority.cmp(&b.priority))
        });
        let mut index: HashMap<char, Vec<usize>> = HashMap::new();
        for (i, rule) in rules.iter().enumerate() {
            let first = rule.source.chars().next().expect("non-empty source");
            index.entry(first).or_default().push(i);
        }
        Ok(RuleTable {
            lang: lang.into(),
            mode,
            passthrough,
            preprocess: Preprocess::None,
            rules,
            index,
        })
    }

    pub fn with_preprocess(mut self, preprocess: Preprocess) -> Self {
        self.preprocess = preprocess;
        self
    }

    /// An empty table; with [`Passthrough::Keep`] it is the identity.
    pub fn identity(lang: impl Into<String>, mode: TableMode) -> Self {
        RuleTable::new(lang, mode, Vec::new(), Passthrough::Keep).expect("empty table is valid")
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn passthrough(&self) -> Passthrough {
        self.passthrough
    }

    pub fn preprocess(&self) -> Preprocess {
        self.preprocess
    }

    /// Rules in match order.
    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    /// Runs the rules over `text` (after any preprocessing).
    pub fn apply(&self, text: &str) -> Result<String, TranslitError> {
        match self.preprocess {
            Preprocess::None => self.apply_rules(text),
            Preprocess::Hangul => self.apply_rules(&super::hangul::to_conjoining_jamo(text)),
        }
    }

    /// Runs the rules over `text` exactly as given.
    pub fn apply_rules(&self, text: &str) -> Result<String, TranslitError> {
        let mut out = String::with_capacity(text.len());
        let mut pos = 0;
        let mut char_pos = 0;
        while let Some(ch) = text[pos..].chars().next() {
            let fired = self
                .index
                .get(&ch)
                .and_then(|idxs| idxs.iter().map(|&i| &self.rules[i]).find(|r| r.matches_at(text, pos)));
            match fired {
                Some(rule) => {
                    out.push_str(&rule.target);
                    char_pos += rule.source.chars().count();
                    pos += rule.source.len();
                }
                None => {
                    match self.passthrough {
                        Passthrough::Keep => out.push(ch),
                        Passthrough::Drop => {}
                        Passthrough::Error => {
                            return Err(TranslitError::Unmatched {
                                position: char_pos,
                                ch,
                            })
                        }
                    }
                    char_pos += 1;
                    pos += ch.len_utf8();
                }
            }
        }
        Ok(out)
    }

    /// Parses the tab-separated table format.
    ///
    /// Each rule line is `source \t target \t left_context \t right_context \t priority`;
    /// trailing fields may be omitted (a missing priority becomes one more
    /// than the highest priority so far). Lines starting with `#` are
    /// comments, except the header comments `# lang: ..`, `# mode: ..`,
    /// `# passthrough: ..` and `# preprocess: ..` which set table properties.
    pub fn parse(text: &str) -> Result<Self, TranslitError> {
        Self::parse_with_defaults(text, None, None)
    }

    fn parse_with_defaults(
        text: &str,
        default_lang: Option<&str>,
        default_mode: Option<TableMode>,
    ) -> Result<Self, TranslitError> {
        let mut lang = default_lang.map(str::to_string);
        let mut mode = default_mode;
        let mut passthrough = Passthrough::Keep;
        let mut preprocess = Preprocess::None;
        let mut rules = Vec::new();
        let bad = |line: usize, message: String| TranslitError::TableSyntax { line, message };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.trim().split_once(':') {
                    let value = value.trim();
                    match key.trim() {
                        "lang" => lang = Some(value.to_string()),
                        "mode" => mode = Some(value.parse().map_err(|e| bad(line_no, e))?),
                        "passthrough" => passthrough = value.parse().map_err(|e| bad(line_no, e))?,
                        "preprocess" => {
                            preprocess = match value {
                                "hangul" => Preprocess::Hangul,
                                "none" => Preprocess::None,
                                other => return Err(bad(line_no, format!("unknown preprocess `{other}`"))),
                            }
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 2 || fields.len() > 5 {
                return Err(bad(line_no, format!("expected 2 to 5 tab-separated fields, found {}", fields.len())));
            }
            let priority = match fields.get(4).map(|p| p.trim()).filter(|p| !p.is_empty()) {
                Some(p) => p.parse().map_err(|_| bad(line_no, format!("invalid priority `{p}`")))?,
                None => rules.iter().map(|r: &RewriteRule| r.priority + 1).max().unwrap_or(0),
            };
            let mut rule = RewriteRule::new(fields[0], fields[1], priority);
            if let Some(left) = fields.get(2) {
                rule = rule.with_left(*left);
            }
            if let Some(right) = fields.get(3) {
                rule = rule.with_right(*right);
            }
            if rule.source.is_empty() {
                return Err(bad(line_no, "empty source".into()));
            }
            rules.push(rule);
        }

        let lang = lang.ok_or_else(|| bad(0, "missing `# lang:` header".into()))?;
        let mode = mode.ok_or_else(|| bad(0, "missing `# mode:` header".into()))?;
        Ok(RuleTable::new(lang, mode, rules, passthrough)?.with_preprocess(preprocess))
    }

    /// Loads a table file. `<lang>.<mode>.tsv` file names supply the language
    /// and mode when the header does not.
    pub fn load(path: &Path) -> Result<Self, TranslitError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TranslitError::Io(format!("{}: {e}", path.display())))?;
        let stem = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let mut parts = stem.split('.');
        let lang = parts.next().filter(|s| !s.is_empty());
        let mode = parts.next().and_then(|m| m.parse().ok());
        Self::parse_with_defaults(&text, lang, mode)
    }

    /// Serializes back to the tab-separated format.
    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "# lang: {}\n# mode: {}\n# passthrough: {}\n",
            self.lang,
            self.mode,
            match self.passthrough {
                Passthrough::Keep => "keep",
                Passthrough::Drop => "drop",
                Passthrough::Error => "error",
            }
        );
        if self.preprocess == Preprocess::Hangul {
            out.push_str("# preprocess: hangul\n");
        }
        for r in &self.rules {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                r.source,
                r.target,
                r.left_context.as_deref().unwrap_or(""),
                r.right_context.as_deref().unwrap_or(""),
                r.priority
            ));
        }
        out
    }
}
