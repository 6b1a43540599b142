//! Event-driven dialogue state machine: a backbone flow with self-contained
//! sub-flows stacked on top, task pause/resume and session persistence.

mod event;
mod machine;
mod screen;
mod session;
mod state;
mod store;

use thiserror::Error;

pub use event::{Action, ActionPlan, Event, ResponseCase};
pub use machine::{lookup_task, MachineConfig, StateMachine};
pub use screen::{rotate_tip, ScreenItem, ScreenKind, ScreenPayload, SeekFragment, StepInfo, Tip, TipBook};
pub use session::{
    screen_for, step_utterance, ActiveTask, Checkpoint, Direction, Modality, Navigation, PausedTask, RecentRing,
    Session, Turn,
};
pub use state::DialogueState;
pub use store::{valid_session_id, FsSessionStore, MemorySessionStore, SessionStore};

/// Maximum number of sub-flows open at once.
pub const MAX_SUBFLOW_DEPTH: usize = 8;

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("session invariant violated: {0}")]
    SessionCorrupt(String),
    #[error("sub-flow stack depth {MAX_SUBFLOW_DEPTH} exceeded")]
    StackDepthExceeded,
    #[error("not in a sub-flow")]
    NotInSubflow,
    #[error("{0} is not a sub-flow state")]
    NotASubflow(DialogueState),
    #[error("no active task")]
    NoActiveTask,
    #[error("step navigation requires TASK_EXECUTION, not {0}")]
    NotInTaskExecution(DialogueState),
    #[error("task {0:?} is not paused")]
    UnknownPausedTask(String),
    #[error("invalid session id {0:?}")]
    InvalidSessionId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
