use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DialogueError, DialogueState, Session};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScreenKind {
    Welcome,
    SearchResults,
    FridgePicker,
    IngredientsList,
    StepView,
    VideoView,
}

impl ScreenKind {
    pub const ALL: [ScreenKind; 6] = [
        ScreenKind::Welcome,
        ScreenKind::SearchResults,
        ScreenKind::FridgePicker,
        ScreenKind::IngredientsList,
        ScreenKind::StepView,
        ScreenKind::VideoView,
    ];

    /// Screen owned by a state; `None` for sub-flows that keep the screen
    /// of the state beneath them.
    pub fn for_state(state: DialogueState) -> Option<Self> {
        match state {
            DialogueState::Greeting | DialogueState::TaskCompleted => Some(ScreenKind::Welcome),
            DialogueState::Grounding => Some(ScreenKind::SearchResults),
            DialogueState::TaskOverview => Some(ScreenKind::IngredientsList),
            DialogueState::TaskExecution => Some(ScreenKind::StepView),
            DialogueState::VideoNavSubflow => Some(ScreenKind::VideoView),
            DialogueState::CreativeCookingSubflow => Some(ScreenKind::FridgePicker),
            DialogueState::CuriositySubflow | DialogueState::QaSubflow => None,
        }
    }
}

/// One card or row on a screen.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScreenItem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

impl ScreenItem {
    pub fn text(label: impl Into<String>) -> Self {
        Self { label: label.into(), ..Default::default() }
    }
}

/// Instruction for the video player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeekFragment {
    pub video_id: String,
    pub seek_to_s: f64,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub index: usize,
    pub count: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenPayload {
    pub screen_kind: ScreenKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    #[serde(default)]
    pub items: Vec<ScreenItem>,
    #[serde(default)]
    pub tips: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video: Option<SeekFragment>,
}

impl ScreenPayload {
    pub fn new(screen_kind: ScreenKind) -> Self {
        Self {
            screen_kind,
            title: None,
            description: None,
            image_ref: None,
            items: Vec::new(),
            tips: String::new(),
            step: None,
            video: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tip {
    pub text: String,
    /// Screens the tip applies to; empty means a global tip.
    #[serde(default)]
    pub screens: Vec<ScreenKind>,
}

/// Contextual tips shown under each screen.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TipBook(pub Vec<Tip>);

static DEFAULT_TIPS: &str = include_str!("../../assets/tips.json");

impl TipBook {
    pub fn shipped() -> Self {
        serde_json::from_str(DEFAULT_TIPS).expect("shipped tips are valid")
    }

    pub fn load(path: &Path) -> Result<Self, DialogueError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Tips for `kind`, or the global tips when none target it.
    pub fn for_screen(&self, kind: ScreenKind) -> Vec<&str> {
        let own: Vec<&str> = self.0.iter().filter(|t| t.screens.contains(&kind)).map(|t| t.text.as_str()).collect();
        if !own.is_empty() {
            return own;
        }
        self.0.iter().filter(|t| t.screens.is_empty()).map(|t| t.text.as_str()).collect()
    }
}

/// Next tip for `kind`, cycling through its list without repeats until the
/// list is exhausted.
pub fn rotate_tip(session: &mut Session, book: &TipBook, kind: ScreenKind) -> String {
    let tips = book.for_screen(kind);
    if tips.is_empty() {
        return String::new();
    }
    let cursor = session.tip_cursor.entry(kind).or_insert(0);
    let tip = tips[*cursor % tips.len()].to_string();
    *cursor = (*cursor + 1) % tips.len();
    tip
}
