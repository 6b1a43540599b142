use serde::{Deserialize, Serialize};

/// Politeness register of system responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ToneOfVoice {
    #[default]
    Neutral,
    SomewhatPolite,
    Polite,
    VeryPolite,
}

impl ToneOfVoice {
    pub const ALL: [ToneOfVoice; 4] =
        [ToneOfVoice::Neutral, ToneOfVoice::SomewhatPolite, ToneOfVoice::Polite, ToneOfVoice::VeryPolite];

    /// Phrase used in prompts: "neutral", "somewhat polite", ...
    pub fn phrase(self) -> &'static str {
        match self {
            ToneOfVoice::Neutral => "neutral",
            ToneOfVoice::SomewhatPolite => "somewhat polite",
            ToneOfVoice::Polite => "polite",
            ToneOfVoice::VeryPolite => "very polite",
        }
    }
}

impl std::str::FromStr for ToneOfVoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', '-'], " ");
        ToneOfVoice::ALL.into_iter().find(|t| t.phrase() == norm).ok_or_else(|| format!("unknown tone {s:?}"))
    }
}
