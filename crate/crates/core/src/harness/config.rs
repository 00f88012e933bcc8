//! `key = value` configuration files.

use std::collections::BTreeMap;

use crate::error::{MmcError, Result};

/// Parses `key = value` lines. `#` starts a comment; blank lines are
/// skipped; keys may appear once.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| MmcError::Parse { line: idx + 1, msg };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(err("empty key".into()));
        }
        if out.insert(key.to_owned(), value.trim().to_owned()).is_some() {
            return Err(err(format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let cfg = parse_config("# grid\n trials = 20 \n\np = 0.2, 0.4 # two\nseed=7\n").unwrap();
        assert_eq!(cfg.len(), 3);
        assert_eq!(cfg["trials"], "20");
        assert_eq!(cfg["p"], "0.2, 0.4");
        assert_eq!(cfg["seed"], "7");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(parse_config("a = 1\nb\n"), Err(MmcError::Parse { line: 2, .. })));
        assert!(parse_config(" = 3").is_err());
        assert!(parse_config("a = 1\na = 2").is_err());
    }
}
