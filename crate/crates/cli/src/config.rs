use std::path::{Path, PathBuf};

use convrank::corpus::FilterConfig;
use convrank::rankers::RankerConfigs;
use convrank::synth::GeneratorConfig;
use convrank::text::TextResources;
use serde::Deserialize;

use crate::CliError;

/// Contents of the `--config` TOML file. Every section is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub generator: GeneratorConfig,
    pub filter: FilterConfig,
    pub rankers: RankerConfigs,
    pub resources: ResourcePaths,
}

/// Replacement word lists; absent entries keep the bundled defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    pub lexicon: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub dull_phrases: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| convrank::Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn resources(&self) -> Result<TextResources, CliError> {
        let mut res = TextResources::default();
        let paths = &self.resources;
        if let Some(p) = &paths.lexicon {
            res.load_lexicon(p)?;
        }
        if let Some(p) = &paths.gazetteer {
            res.load_gazetteer(p)?;
        }
        if let Some(p) = &paths.stopwords {
            res.load_stopwords(p)?;
        }
        if let Some(p) = &paths.dull_phrases {
            res.load_dull_phrases(p)?;
        }
        Ok(res)
    }
}
