//! Flat `key = value` config files with `[section]` headers.
//!
//! Parse errors carry the 1-based line number so the CLI can point at the
//! offending line.

#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Default)]
pub struct SectionedConfig {
    /// `(section, key, value, line)`; keys before any header get section "".
    entries: Vec<(String, String, String, usize)>,
}

impl SectionedConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError {
                    line,
                    message: format!("unterminated section header {content:?}"),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError {
                line,
                message: format!("expected 'key = value', got {content:?}"),
            })?;
            entries.push((
                section.clone(),
                key.trim().to_string(),
                value.trim().to_string(),
                line,
            ));
        }
        Ok(Self { entries })
    }

    pub fn section_pairs(&self, section: &str) -> Vec<(String, String)> {
        self.entries
            .iter()
            .filter(|(s, ..)| s == section)
            .map(|(_, k, v, _)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn get(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .find(|(s, k, ..)| s == section && k == key)
            .map(|(_, _, v, line)| (v.as_str(), *line))
    }

    pub fn require(&self, section: &str, key: &str) -> Result<(&str, usize), ConfigError> {
        self.get(section, key).ok_or_else(|| ConfigError {
            line: 0,
            message: format!("missing key {key:?} in section [{section}]"),
        })
    }

    pub fn parse_value<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
    ) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let (value, line) = self.require(section, key)?;
        value.parse::<T>().map_err(|e| ConfigError {
            line,
            message: format!("key {key:?}: {e}"),
        })
    }
}

/// Comma-separated list of positive integers (for sample-size grids).
pub fn parse_u64_list(text: &str) -> Result<Vec<u64>, String> {
    text.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<u64>()
                .map_err(|e| format!("bad integer {piece:?}: {e}"))
        })
        .collect()
}
