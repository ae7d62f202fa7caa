//! Flat `key = value` config files.
//!
//! Keys are the long flag names of the subcommand (`iterations = 5000` is
//! `--iterations 5000`). Blank lines and `#` comments are ignored. Flags given
//! on the command line win over the file.

use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            location: format!("config line {}", i + 1),
            detail: format!("expected 'key = value', got '{line}'"),
        })?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() || k.contains(char::is_whitespace) {
            return Err(Error::Parse { location: format!("config line {}", i + 1), detail: format!("bad key '{k}'") });
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<Vec<(String, String)>> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Splices config entries into `argv` right after the subcommand, so later
/// command-line flags override them. Boolean flags are written as
/// `key = true`; `false` drops the flag.
pub fn splice_config(argv: &[String], entries: &[(String, String)], subcommand_pos: usize) -> Vec<String> {
    let mut out: Vec<String> = argv[..=subcommand_pos].to_vec();
    for (k, v) in entries {
        match v.as_str() {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => {
                out.push(format!("--{k}"));
                out.push(v.clone());
            }
        }
    }
    out.extend_from_slice(&argv[subcommand_pos + 1..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_splices() {
        let e = parse_config("# c\niterations = 50\n\nallow_large = true\nwarm = false\n").unwrap();
        assert_eq!(e[0], ("iterations".into(), "50".into()));
        let argv: Vec<String> = ["subbms", "mjmcmc", "--seed", "3"].iter().map(|s| s.to_string()).collect();
        let s = splice_config(&argv, &e, 1);
        assert_eq!(s, ["subbms", "mjmcmc", "--iterations", "50", "--allow-large", "--seed", "3"]);
        assert!(parse_config("novalue").is_err());
    }
}
