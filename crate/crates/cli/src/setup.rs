//! Resolving the noise configuration (preset or profile file) and its
//! providers from command-line paths.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use geckit_core::noise::{NoisePreset, NoiseProfile};
use geckit_core::providers::{Lexicon, MorphLexicon, Providers};
use geckit_core::typical::{default_rules, load_rules, TypicalErrorRule};

/// Everything the noiser needs, owned so a `Noiser` can borrow it.
pub struct NoiseSetup {
    pub profile: NoiseProfile,
    pub providers: Providers,
    pub rules: Vec<TypicalErrorRule>,
}

pub fn resolve_noise(
    preset: Option<&str>,
    profile_path: Option<&Path>,
    lexicon: Option<&Path>,
    morph_lexicon: Option<&Path>,
    rules_path: Option<&Path>,
) -> Result<NoiseSetup> {
    let profile = match (preset, profile_path) {
        (Some(name), None) => name.parse::<NoisePreset>()?.profile(),
        (None, Some(path)) => {
            let mut profile =
                NoiseProfile::load(path).with_context(|| format!("loading {}", path.display()))?;
            // rule paths inside a profile are relative to the profile file
            if let Some(rules) = &profile.rule_set_path {
                if rules.is_relative() {
                    let base = path.parent().unwrap_or_else(|| Path::new(""));
                    profile.rule_set_path = Some(base.join(rules));
                }
            }
            profile
        }
        (None, None) => bail!("one of --preset or --profile is required"),
        (Some(_), Some(_)) => bail!("--preset and --profile are mutually exclusive"),
    };

    let lexicon = lexicon
        .map(|p| Lexicon::load(p).with_context(|| format!("loading lexicon {}", p.display())))
        .transpose()?;
    let morph = morph_lexicon
        .map(|p| {
            MorphLexicon::load(p)
                .with_context(|| format!("loading morphological lexicon {}", p.display()))
        })
        .transpose()?;
    let providers = Providers::new(lexicon, morph);

    let rules = if profile.typical_errors_enabled {
        let explicit: Option<PathBuf> = rules_path
            .map(Path::to_path_buf)
            .or_else(|| profile.rule_set_path.clone());
        match explicit {
            Some(path) => {
                load_rules(&path).with_context(|| format!("loading rules {}", path.display()))?
            }
            None => default_rules(),
        }
    } else {
        Vec::new()
    };

    Ok(NoiseSetup {
        profile,
        providers,
        rules,
    })
}

/// splitmix64 step for deriving independent stream seeds from the CLI
/// seed.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
