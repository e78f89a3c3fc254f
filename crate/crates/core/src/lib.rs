//! Core of the EcoQ cleanup-event platform.
//!
//! Organizers define waste-collection events, mark polluted areas and create
//! quests; participants join solo or in teams and register garbage bags from
//! the app or at smart bins, earning points on per-event leaderboards.

pub mod domain;
pub mod geo;
pub mod ids;
pub mod scoring;
pub mod sgb;
pub mod storage;
pub mod verification;

pub use domain::{Command, DomainError, EventAggregate, ErrorClass, Fact};
pub use ids::{AreaId, BagId, BinId, EventId, ParticipantId, QuestId, TeamId};

#[cfg(feature = "testkit")]
pub mod testkit;
