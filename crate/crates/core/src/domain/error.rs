use thiserror::Error;

use super::types::Phase;

/// Broad failure category, used by transports to pick a status code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    /// Malformed or out-of-range input.
    Validation,
    /// The event's phase does not allow the command.
    Lifecycle,
    /// The command collides with existing state.
    Conflict,
    /// A referenced entity does not exist.
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("event name must be 1..=120 characters")]
    InvalidName,
    #[error("unknown icon `{0}`")]
    InvalidIcon(String),
    #[error("event start must be strictly before its end")]
    InvalidSchedule,
    #[error("invalid coordinates or radius")]
    InvalidGeo,
    #[error("marker lies outside 1.5x the event radius")]
    OutOfEventArea,
    #[error("cannot move from {from} to {to}")]
    IllegalTransition { from: Phase, to: Phase },
    #[error("{command} is not allowed while the event is {phase}")]
    WrongPhase { phase: Phase, command: &'static str },
    #[error("quest title must not be empty")]
    InvalidTitle,
    #[error("target_count requires target_type and must be at least 1")]
    InvalidTarget,
    #[error("unknown polluted area `{0}`")]
    UnknownArea(String),
    #[error("display name must not be empty")]
    InvalidDisplayName,
    #[error("display name `{0}` is already registered")]
    DuplicateName(String),
    #[error("team name must not be empty")]
    InvalidTeamName,
    #[error("team name `{0}` is already taken")]
    DuplicateTeamName(String),
    #[error("participant `{0}` is already in a team")]
    AlreadyInTeam(String),
    #[error("unknown team `{0}`")]
    UnknownTeam(String),
    #[error("unknown participant `{0}`")]
    UnknownParticipant(String),
    #[error("unknown quest `{0}`")]
    UnknownQuest(String),
    #[error("quest `{quest}` already started by `{participant}`")]
    AlreadyStarted { participant: String, quest: String },
    #[error("quest `{quest}` has not been started by `{participant}`")]
    QuestNotStarted { participant: String, quest: String },
    #[error("bin drop-offs must carry a weight")]
    MissingWeight,
    #[error("weight must be a non-negative number of kilograms")]
    InvalidWeight,
    #[error("bag recorded outside the event window")]
    OutsideEventWindow,
    #[error("unknown bag claim `{0}`")]
    UnknownClaim(String),
    #[error("bag claim `{0}` was already dropped off")]
    ClaimAlreadyUsed(String),
    #[error("bag claim `{0}` does not match the scanned payload")]
    ClaimMismatch(String),
    #[error("event already exists")]
    EventExists,
}

impl DomainError {
    pub fn class(&self) -> ErrorClass {
        use DomainError::*;
        match self {
            InvalidName | InvalidIcon(_) | InvalidSchedule | InvalidGeo | OutOfEventArea
            | InvalidTitle | InvalidTarget | InvalidDisplayName | InvalidTeamName
            | MissingWeight | InvalidWeight | ClaimMismatch(_) => ErrorClass::Validation,
            IllegalTransition { .. } | WrongPhase { .. } | OutsideEventWindow
            | QuestNotStarted { .. } => ErrorClass::Lifecycle,
            DuplicateName(_) | DuplicateTeamName(_) | AlreadyInTeam(_) | AlreadyStarted { .. }
            | ClaimAlreadyUsed(_) | EventExists => ErrorClass::Conflict,
            UnknownArea(_) | UnknownTeam(_) | UnknownParticipant(_) | UnknownQuest(_)
            | UnknownClaim(_) => ErrorClass::NotFound,
        }
    }
}
