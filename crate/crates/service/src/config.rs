//! Service configuration: a TOML file, then `VIDSEM_*` environment overrides,
//! then command-line flags (applied by the caller).

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use vidsem_core::feedback::DEFAULT_ALPHA;
use vidsem_core::ingest::CorpusFiles;
use vidsem_core::Stopwords;

pub const ENV_PREFIX: &str = "VIDSEM_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub concepts: Option<PathBuf>,
    pub contexts: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub shot_counts: Option<PathBuf>,
    /// Directory holding `en.txt` / `ar.txt`; the bundled lists are used otherwise.
    pub stopwords_dir: Option<PathBuf>,
    pub keyframes_dir: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub alpha: f64,
    pub judge_depth: usize,
    pub result_limit: usize,
    pub listen: SocketAddr,
    pub session_ttl_secs: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            concepts: None,
            contexts: None,
            lexicon: None,
            shot_counts: None,
            stopwords_dir: None,
            keyframes_dir: None,
            snapshot: None,
            alpha: DEFAULT_ALPHA,
            judge_depth: 60,
            result_limit: 60,
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            session_ttl_secs: 3600,
        }
    }
}

/// Environment variables recognised by [`ServiceConfig::apply_env`].
pub const ENV_VARS: &[&str] = &[
    "VIDSEM_CONCEPTS",
    "VIDSEM_CONTEXTS",
    "VIDSEM_LEXICON",
    "VIDSEM_SHOT_COUNTS",
    "VIDSEM_STOPWORDS_DIR",
    "VIDSEM_KEYFRAMES_DIR",
    "VIDSEM_SNAPSHOT",
    "VIDSEM_ALPHA",
    "VIDSEM_JUDGE_DEPTH",
    "VIDSEM_RESULT_LIMIT",
    "VIDSEM_LISTEN",
    "VIDSEM_SESSION_TTL_SECS",
];

fn parse_var<T: std::str::FromStr>(name: &str, value: &str) -> anyhow::Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| anyhow::anyhow!("{name}={value:?}: {e}"))
}

impl ServiceConfig {
    /// Reads `path` if given, then applies the process environment.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => ServiceConfig::default(),
        };
        config.apply_env(|name| std::env::var(name).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> anyhow::Result<()> {
        let var = |suffix: &str| lookup(&format!("{ENV_PREFIX}{suffix}")).filter(|v| !v.is_empty());
        let path_vars: [(&str, &mut Option<PathBuf>); 7] = [
            ("CONCEPTS", &mut self.concepts),
            ("CONTEXTS", &mut self.contexts),
            ("LEXICON", &mut self.lexicon),
            ("SHOT_COUNTS", &mut self.shot_counts),
            ("STOPWORDS_DIR", &mut self.stopwords_dir),
            ("KEYFRAMES_DIR", &mut self.keyframes_dir),
            ("SNAPSHOT", &mut self.snapshot),
        ];
        for (suffix, slot) in path_vars {
            if let Some(v) = var(suffix) {
                *slot = Some(PathBuf::from(v));
            }
        }
        if let Some(v) = var("ALPHA") {
            self.alpha = parse_var("VIDSEM_ALPHA", &v)?;
        }
        if let Some(v) = var("JUDGE_DEPTH") {
            self.judge_depth = parse_var("VIDSEM_JUDGE_DEPTH", &v)?;
        }
        if let Some(v) = var("RESULT_LIMIT") {
            self.result_limit = parse_var("VIDSEM_RESULT_LIMIT", &v)?;
        }
        if let Some(v) = var("LISTEN") {
            self.listen = parse_var("VIDSEM_LISTEN", &v)?;
        }
        if let Some(v) = var("SESSION_TTL_SECS") {
            self.session_ttl_secs = parse_var("VIDSEM_SESSION_TTL_SECS", &v)?;
        }
        Ok(())
    }

    /// Checks numeric knobs and that every configured path exists.
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            bail!("alpha must be > 0, got {}", self.alpha);
        }
        if self.judge_depth == 0 || self.result_limit == 0 {
            bail!("judge_depth and result_limit must be at least 1");
        }
        if self.session_ttl_secs == 0 {
            bail!("session_ttl_secs must be at least 1");
        }
        let paths = [
            ("concepts", &self.concepts),
            ("contexts", &self.contexts),
            ("lexicon", &self.lexicon),
            ("shot_counts", &self.shot_counts),
            ("stopwords_dir", &self.stopwords_dir),
            ("keyframes_dir", &self.keyframes_dir),
            ("snapshot", &self.snapshot),
        ];
        for (key, path) in paths {
            if let Some(p) = path {
                if !p.exists() {
                    bail!("{key}: {} does not exist", p.display());
                }
            }
        }
        Ok(())
    }

    pub fn corpus_files(&self) -> anyhow::Result<CorpusFiles> {
        let Some(concepts) = self.concepts.clone() else {
            bail!("no concepts XML configured (set `concepts` or VIDSEM_CONCEPTS)");
        };
        Ok(CorpusFiles {
            concepts,
            contexts: self.contexts.clone(),
            lexicon: self.lexicon.clone(),
            shot_counts: self.shot_counts.clone(),
        })
    }

    pub fn stopwords(&self) -> anyhow::Result<Stopwords> {
        Ok(match &self.stopwords_dir {
            Some(dir) => Stopwords::from_dir(dir)?,
            None => Stopwords::bundled(),
        })
    }

    pub fn session_ttl(&self) -> Duration {
        Duration::from_secs(self.session_ttl_secs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn toml_fields_and_defaults() {
        let c: ServiceConfig =
            toml::from_str("concepts = \"a.xml\"\nalpha = 0.5\nlisten = \"0.0.0.0:9000\"\n")
                .unwrap();
        assert_eq!(c.concepts, Some(PathBuf::from("a.xml")));
        assert_eq!(c.alpha, 0.5);
        assert_eq!(c.listen.port(), 9000);
        assert_eq!(c.judge_depth, 60);
        assert!(toml::from_str::<ServiceConfig>("alhpa = 1").is_err());
    }

    #[test]
    fn env_overrides_file_values() {
        let env: HashMap<&str, &str> = [
            ("VIDSEM_ALPHA", "0.3"),
            ("VIDSEM_LEXICON", "lex.tsv"),
            ("VIDSEM_SESSION_TTL_SECS", "10"),
            ("VIDSEM_CONTEXTS", ""),
        ]
        .into();
        let mut c = ServiceConfig {
            contexts: Some("ctx.xml".into()),
            ..ServiceConfig::default()
        };
        c.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(c.alpha, 0.3);
        assert_eq!(c.lexicon, Some(PathBuf::from("lex.tsv")));
        assert_eq!(c.session_ttl(), Duration::from_secs(10));
        assert_eq!(c.contexts, Some(PathBuf::from("ctx.xml")));

        let bad: HashMap<&str, &str> = [("VIDSEM_JUDGE_DEPTH", "many")].into();
        let err = c
            .apply_env(|k| bad.get(k).map(|v| v.to_string()))
            .unwrap_err();
        assert!(err.to_string().contains("VIDSEM_JUDGE_DEPTH"));
    }

    #[test]
    fn validation() {
        assert!(ServiceConfig::default().validate().is_ok());
        let c = ServiceConfig {
            alpha: 0.0,
            ..ServiceConfig::default()
        };
        assert!(c.validate().is_err());
        let c = ServiceConfig {
            concepts: Some("/definitely/not/here.xml".into()),
            ..ServiceConfig::default()
        };
        assert!(c.validate().unwrap_err().to_string().contains("concepts"));
        assert!(ServiceConfig::default().corpus_files().is_err());
    }

    #[test]
    fn env_var_list_matches_fields() {
        for name in ENV_VARS {
            assert!(name.starts_with(ENV_PREFIX));
            let mut c = ServiceConfig::default();
            let value = if name.ends_with("LISTEN") {
                "127.0.0.1:1"
            } else {
                "7"
            };
            c.apply_env(|k| (k == *name).then(|| value.to_string()))
                .unwrap();
            assert_ne!(c, ServiceConfig::default(), "{name} had no effect");
        }
    }
}
