use serde::{Deserialize, Serialize};

/// Dialogue states: five backbone states and four self-contained sub-flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DialogueState {
    Greeting,
    Grounding,
    TaskOverview,
    TaskExecution,
    TaskCompleted,
    CuriositySubflow,
    QaSubflow,
    VideoNavSubflow,
    CreativeCookingSubflow,
}

impl DialogueState {
    pub const ALL: [DialogueState; 9] = [
        DialogueState::Greeting,
        DialogueState::Grounding,
        DialogueState::TaskOverview,
        DialogueState::TaskExecution,
        DialogueState::TaskCompleted,
        DialogueState::CuriositySubflow,
        DialogueState::QaSubflow,
        DialogueState::VideoNavSubflow,
        DialogueState::CreativeCookingSubflow,
    ];

    pub fn is_backbone(self) -> bool {
        matches!(
            self,
            DialogueState::Greeting
                | DialogueState::Grounding
                | DialogueState::TaskOverview
                | DialogueState::TaskExecution
                | DialogueState::TaskCompleted
        )
    }

    pub fn is_subflow(self) -> bool {
        !self.is_backbone()
    }

    pub fn name(self) -> &'static str {
        match self {
            DialogueState::Greeting => "GREETING",
            DialogueState::Grounding => "GROUNDING",
            DialogueState::TaskOverview => "TASK_OVERVIEW",
            DialogueState::TaskExecution => "TASK_EXECUTION",
            DialogueState::TaskCompleted => "TASK_COMPLETED",
            DialogueState::CuriositySubflow => "CURIOSITY_SUBFLOW",
            DialogueState::QaSubflow => "QA_SUBFLOW",
            DialogueState::VideoNavSubflow => "VIDEO_NAV_SUBFLOW",
            DialogueState::CreativeCookingSubflow => "CREATIVE_COOKING_SUBFLOW",
        }
    }
}

impl std::fmt::Display for DialogueState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
