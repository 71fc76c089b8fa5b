//! Layered settings: command-line flags override environment variables,
//! which override the optional TOML config file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::codec::{self, EncoderSpec};
use crate::{Error, Result};

pub const ENV_ENCODER_CMD: &str = "ROICOMP_ENCODER_CMD";
pub const ENV_TMPDIR: &str = "ROICOMP_TMPDIR";

/// Contents of a `roicomp.toml` file. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub encoder_cmd: Option<String>,
    pub decoder_cmd: Option<String>,
    pub tmpdir: Option<PathBuf>,
    pub timeout_secs: Option<u64>,
    pub square_side: Option<usize>,
    pub crf_roi: Option<u8>,
    pub crf_bg: Option<u8>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Settings given explicitly on the command line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlagConfig {
    pub encoder_cmd: Option<String>,
    pub decoder_cmd: Option<String>,
    pub tmpdir: Option<PathBuf>,
    pub timeout_secs: Option<u64>,
    pub square_side: Option<usize>,
    pub crf_roi: Option<u8>,
    pub crf_bg: Option<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub encoder_cmd: String,
    pub decoder_cmd: String,
    pub tmpdir: Option<PathBuf>,
    pub timeout: Duration,
    pub square_side: usize,
    pub crf_roi: u8,
    pub crf_bg: u8,
}

impl Settings {
    /// Resolves each key as flag, then environment (via `env`), then file,
    /// then built-in default.
    pub fn resolve(flags: &FlagConfig, env: impl Fn(&str) -> Option<String>, file: &FileConfig) -> Self {
        let env_encoder = env(ENV_ENCODER_CMD).filter(|s| !s.trim().is_empty());
        let env_tmpdir = env(ENV_TMPDIR).filter(|s| !s.is_empty()).map(PathBuf::from);
        Settings {
            encoder_cmd: flags
                .encoder_cmd
                .clone()
                .or(env_encoder)
                .or_else(|| file.encoder_cmd.clone())
                .unwrap_or_else(|| codec::DEFAULT_ENCODE_TEMPLATE.to_string()),
            decoder_cmd: flags
                .decoder_cmd
                .clone()
                .or_else(|| file.decoder_cmd.clone())
                .unwrap_or_else(|| codec::DEFAULT_DECODE_TEMPLATE.to_string()),
            tmpdir: flags.tmpdir.clone().or(env_tmpdir).or_else(|| file.tmpdir.clone()),
            timeout: Duration::from_secs(
                flags
                    .timeout_secs
                    .or(file.timeout_secs)
                    .unwrap_or(codec::DEFAULT_TIMEOUT.as_secs()),
            ),
            square_side: flags.square_side.or(file.square_side).unwrap_or(128),
            crf_roi: flags.crf_roi.or(file.crf_roi).unwrap_or(20),
            crf_bg: flags.crf_bg.or(file.crf_bg).unwrap_or(40),
        }
    }

    pub fn from_process_env(flags: &FlagConfig, file: &FileConfig) -> Self {
        Self::resolve(flags, |k| std::env::var(k).ok(), file)
    }

    pub fn external_encoder(&self) -> Result<EncoderSpec> {
        let mut spec = EncoderSpec::external(&self.encoder_cmd, &self.decoder_cmd)?.with_timeout(self.timeout);
        if let Some(dir) = &self.tmpdir {
            spec = spec.with_scratch_dir(dir);
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flag_env_file() {
        let file = FileConfig {
            encoder_cmd: Some("file {input} {output} {crf}".into()),
            tmpdir: Some("/file".into()),
            crf_bg: Some(45),
            ..Default::default()
        };
        let env = |k: &str| match k {
            ENV_ENCODER_CMD => Some("env {input} {output} {crf}".to_string()),
            ENV_TMPDIR => Some("/env".to_string()),
            _ => None,
        };
        let none = FlagConfig::default();
        let s = Settings::resolve(&none, env, &file);
        assert_eq!(s.encoder_cmd, "env {input} {output} {crf}");
        assert_eq!(s.tmpdir.as_deref(), Some(Path::new("/env")));
        assert_eq!((s.crf_roi, s.crf_bg), (20, 45));

        let flags = FlagConfig {
            encoder_cmd: Some("flag {input} {output} {crf}".into()),
            tmpdir: Some("/flag".into()),
            ..Default::default()
        };
        let s = Settings::resolve(&flags, env, &file);
        assert_eq!(s.encoder_cmd, "flag {input} {output} {crf}");
        assert_eq!(s.tmpdir.as_deref(), Some(Path::new("/flag")));

        let s = Settings::resolve(&none, |_| None, &file);
        assert_eq!(s.encoder_cmd, "file {input} {output} {crf}");
        let s = Settings::resolve(&none, |_| None, &FileConfig::default());
        assert_eq!(s.encoder_cmd, codec::DEFAULT_ENCODE_TEMPLATE);
        assert_eq!(s.square_side, 128);
    }

    #[test]
    fn file_rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("crf_roi = 18\n").is_ok());
        assert!(toml::from_str::<FileConfig>("crf = 18\n").is_err());
    }
}
