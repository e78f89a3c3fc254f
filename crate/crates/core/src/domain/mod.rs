//! Event aggregate and its lifecycle.
//!
//! Every mutation is a [`Command`] applied to an [`EventAggregate`]. Commands are
//! validated in full before anything changes, so a rejected command leaves the
//! aggregate untouched. Ids are derived from the aggregate's own contents, which
//! makes replaying a command log reproduce the aggregate exactly.

mod error;
mod types;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use error::{DomainError, ErrorClass};
pub use types::*;

use crate::geo;
use crate::ids::{AreaId, BagId, EventId, ParticipantId, QuestId, TeamId};
use crate::scoring;

pub type Result<T, E = DomainError> = std::result::Result<T, E>;

/// Quest bonus used when the organizer does not give one.
pub const DEFAULT_QUEST_BONUS: u32 = 50;

pub fn create_event(event_id: EventId, spec: &EventSpec) -> Result<EventRecord> {
    let name_len = spec.name.chars().count();
    if spec.name.trim().is_empty() || name_len > MAX_EVENT_NAME_CHARS {
        return Err(DomainError::InvalidName);
    }
    if !ICONS.contains(&spec.icon.as_str()) {
        return Err(DomainError::InvalidIcon(spec.icon.clone()));
    }
    if spec.start_time >= spec.end_time {
        return Err(DomainError::InvalidSchedule);
    }
    spec.area_center.validate()?;
    if !(spec.area_radius_m.is_finite() && spec.area_radius_m > 0.0) {
        return Err(DomainError::InvalidGeo);
    }
    Ok(EventRecord {
        event_id,
        name: spec.name.clone(),
        icon: spec.icon.clone(),
        start_time: spec.start_time,
        end_time: spec.end_time,
        area_center: spec.area_center,
        area_radius_m: spec.area_radius_m,
        phase: Phase::Defined,
        polluted_areas: Vec::new(),
        collection_points: Vec::new(),
    })
}

pub fn advance_phase(event: &EventRecord, target: Phase) -> Result<EventRecord> {
    if event.phase.successor() != Some(target) {
        return Err(DomainError::IllegalTransition {
            from: event.phase,
            to: target,
        });
    }
    Ok(EventRecord {
        phase: target,
        ..event.clone()
    })
}

fn require_open(event: &EventRecord, command: &'static str) -> Result<()> {
    if event.phase.is_open() {
        Ok(())
    } else {
        Err(DomainError::WrongPhase {
            phase: event.phase,
            command,
        })
    }
}

fn require_active(event: &EventRecord, command: &'static str) -> Result<()> {
    if event.phase == Phase::Active {
        Ok(())
    } else {
        Err(DomainError::WrongPhase {
            phase: event.phase,
            command,
        })
    }
}

fn require_within_area(event: &EventRecord, point: &GeoPoint) -> Result<()> {
    point.validate()?;
    let distance_m = geo::haversine_distance(&event.area_center, point) * 1000.0;
    if distance_m > event.area_radius_m * AREA_TOLERANCE_FACTOR {
        return Err(DomainError::OutOfEventArea);
    }
    Ok(())
}

pub fn add_polluted_area(
    event: &EventRecord,
    center: GeoPoint,
    radius_m: f64,
    note: &str,
) -> Result<EventRecord> {
    require_open(event, "add_polluted_area")?;
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(DomainError::InvalidGeo);
    }
    require_within_area(event, &center)?;
    let mut next = event.clone();
    next.polluted_areas.push(PollutedArea {
        area_id: AreaId::nth(event.polluted_areas.len() + 1),
        center,
        radius_m,
        note: note.to_owned(),
    });
    Ok(next)
}

pub fn add_collection_point(event: &EventRecord, point: GeoPoint) -> Result<EventRecord> {
    require_open(event, "add_collection_point")?;
    require_within_area(event, &point)?;
    let mut next = event.clone();
    next.collection_points.push(point);
    Ok(next)
}

/// A state change request against one event aggregate.
///
/// Serialized as `{"kind": ..., "payload": {...}}`, which is also the shape of
/// a command log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Command {
    CreateEvent {
        event_id: EventId,
        #[serde(flatten)]
        spec: EventSpec,
    },
    AdvancePhase {
        target: Phase,
    },
    AddPollutedArea {
        center: GeoPoint,
        radius_m: f64,
        #[serde(default)]
        note: String,
    },
    AddCollectionPoint {
        point: GeoPoint,
    },
    CreateQuest {
        title: String,
        target_type: Option<WasteType>,
        target_count: Option<u32>,
        area: Option<AreaId>,
        bonus_points: Option<u32>,
    },
    RegisterParticipant {
        display_name: String,
        mode: ParticipationMode,
    },
    Team {
        participant_id: ParticipantId,
        #[serde(flatten)]
        action: TeamAction,
    },
    StartQuest {
        participant_id: ParticipantId,
        quest_id: QuestId,
        now: Timestamp,
    },
    RecordBag {
        participant_id: ParticipantId,
        waste_type: WasteType,
        source: BagSource,
        quest_id: Option<QuestId>,
        weight_kg: Option<Weight>,
        #[serde(default)]
        flagged: bool,
        now: Timestamp,
    },
    IssueClaim {
        participant_id: ParticipantId,
        waste_type: WasteType,
        quest_id: Option<QuestId>,
    },
    /// A bin drop-off of a previously issued claim.
    RecordDrop {
        bag_id: BagId,
        waste_type: WasteType,
        weight_kg: Weight,
        now: Timestamp,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CreateEvent { .. } => "create_event",
            Command::AdvancePhase { .. } => "advance_phase",
            Command::AddPollutedArea { .. } => "add_polluted_area",
            Command::AddCollectionPoint { .. } => "add_collection_point",
            Command::CreateQuest { .. } => "create_quest",
            Command::RegisterParticipant { .. } => "register_participant",
            Command::Team { .. } => "team_action",
            Command::StartQuest { .. } => "start_quest",
            Command::RecordBag { .. } => "record_bag",
            Command::IssueClaim { .. } => "issue_claim",
            Command::RecordDrop { .. } => "record_drop",
        }
    }
}

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "fact", rename_all = "snake_case")]
pub enum Fact {
    EventCreated { event: EventRecord },
    PhaseAdvanced { event: EventRecord },
    AreaAdded { area: PollutedArea },
    CollectionPointAdded { point: GeoPoint },
    QuestCreated { quest: Quest },
    ParticipantRegistered { participant: Participant },
    TeamChanged { team: Team },
    QuestStarted { participation: Participation },
    BagRecorded { bag: BagRecord },
    QuestCompleted { participation: Participation },
    ClaimIssued { claim: PendingClaim },
}

/// Per-type totals in an [`EventSummary`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeTotals {
    pub bags: u64,
    pub weight_kg: Weight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSummary {
    pub event_id: EventId,
    pub by_type: BTreeMap<WasteType, TypeTotals>,
    pub total_bags: u64,
    pub participant_count: usize,
    pub quest_completions: usize,
}

/// The full state of one event: record, quests, people, participations and bags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAggregate {
    pub event: EventRecord,
    pub quests: Vec<Quest>,
    pub participants: Vec<Participant>,
    pub teams: Vec<Team>,
    pub participations: Vec<Participation>,
    pub bags: Vec<BagRecord>,
    pub claims: Vec<PendingClaim>,
}

impl EventAggregate {
    /// Starts an aggregate from a `CreateEvent` command.
    pub fn create(command: &Command) -> Result<(Self, Vec<Fact>)> {
        let Command::CreateEvent { event_id, spec } = command else {
            return Err(DomainError::WrongPhase {
                phase: Phase::Defined,
                command: command.name(),
            });
        };
        let event = create_event(event_id.clone(), spec)?;
        let agg = Self {
            event: event.clone(),
            quests: Vec::new(),
            participants: Vec::new(),
            teams: Vec::new(),
            participations: Vec::new(),
            bags: Vec::new(),
            claims: Vec::new(),
        };
        Ok((agg, vec![Fact::EventCreated { event }]))
    }

    /// Pure form of [`execute`](Self::execute).
    pub fn apply(&self, command: &Command) -> Result<(Self, Vec<Fact>)> {
        let mut next = self.clone();
        let facts = next.execute(command)?;
        Ok((next, facts))
    }

    /// Applies `command` in place. On error nothing has changed.
    pub fn execute(&mut self, command: &Command) -> Result<Vec<Fact>> {
        match command {
            Command::CreateEvent { .. } => Err(DomainError::EventExists),
            Command::AdvancePhase { target } => {
                self.event = advance_phase(&self.event, *target)?;
                Ok(vec![Fact::PhaseAdvanced {
                    event: self.event.clone(),
                }])
            }
            Command::AddPollutedArea {
                center,
                radius_m,
                note,
            } => {
                self.event = add_polluted_area(&self.event, *center, *radius_m, note)?;
                let area = self.event.polluted_areas.last().cloned().expect("area was just added");
                Ok(vec![Fact::AreaAdded { area }])
            }
            Command::AddCollectionPoint { point } => {
                self.event = add_collection_point(&self.event, *point)?;
                Ok(vec![Fact::CollectionPointAdded { point: *point }])
            }
            Command::CreateQuest {
                title,
                target_type,
                target_count,
                area,
                bonus_points,
            } => {
                let quest = self.create_quest(title, *target_type, *target_count, area.clone(), *bonus_points)?;
                Ok(vec![Fact::QuestCreated { quest }])
            }
            Command::RegisterParticipant { display_name, mode } => {
                let participant = self.register_participant(display_name, *mode)?;
                Ok(vec![Fact::ParticipantRegistered { participant }])
            }
            Command::Team {
                participant_id,
                action,
            } => {
                let team = self.team_action(participant_id, action)?;
                Ok(vec![Fact::TeamChanged { team }])
            }
            Command::StartQuest {
                participant_id,
                quest_id,
                now,
            } => {
                let participation = self.start_quest(participant_id, quest_id, *now)?;
                Ok(vec![Fact::QuestStarted { participation }])
            }
            Command::RecordBag {
                participant_id,
                waste_type,
                source,
                quest_id,
                weight_kg,
                flagged,
                now,
            } => self.record_bag(BagInput {
                participant_id,
                waste_type: *waste_type,
                source: *source,
                quest_id: quest_id.as_ref(),
                weight_kg: *weight_kg,
                flagged: *flagged,
                now: *now,
                claim: None,
            }),
            Command::IssueClaim {
                participant_id,
                waste_type,
                quest_id,
            } => {
                let claim = self.issue_claim(participant_id, *waste_type, quest_id.as_ref())?;
                Ok(vec![Fact::ClaimIssued { claim }])
            }
            Command::RecordDrop {
                bag_id,
                waste_type,
                weight_kg,
                now,
            } => self.record_drop(bag_id, *waste_type, *weight_kg, *now),
        }
    }

    pub fn participant(&self, id: &ParticipantId) -> Option<&Participant> {
        self.participants.iter().find(|p| &p.participant_id == id)
    }

    pub fn quest(&self, id: &QuestId) -> Option<&Quest> {
        self.quests.iter().find(|q| &q.quest_id == id)
    }

    pub fn team(&self, id: &TeamId) -> Option<&Team> {
        self.teams.iter().find(|t| &t.team_id == id)
    }

    pub fn team_of(&self, participant: &ParticipantId) -> Option<&Team> {
        self.teams.iter().find(|t| t.member_ids.contains(participant))
    }

    /// Latest participation of `participant` in `quest`, active or not.
    pub fn participation(&self, participant: &ParticipantId, quest: &QuestId) -> Option<&Participation> {
        self.participations
            .iter()
            .rev()
            .find(|p| &p.participant_id == participant && &p.quest_id == quest)
    }

    fn create_quest(
        &mut self,
        title: &str,
        target_type: Option<WasteType>,
        target_count: Option<u32>,
        area: Option<AreaId>,
        bonus_points: Option<u32>,
    ) -> Result<Quest> {
        require_open(&self.event, "create_quest")?;
        if title.trim().is_empty() {
            return Err(DomainError::InvalidTitle);
        }
        match (target_type, target_count) {
            (None, Some(_)) | (_, Some(0)) => return Err(DomainError::InvalidTarget),
            _ => {}
        }
        if let Some(area) = &area {
            if !self.event.polluted_areas.iter().any(|a| &a.area_id == area) {
                return Err(DomainError::UnknownArea(area.to_string()));
            }
        }
        let quest = Quest {
            quest_id: QuestId::nth(self.quests.len() + 1),
            event_id: self.event.event_id.clone(),
            title: title.to_owned(),
            target_type,
            target_count,
            area,
            bonus_points: bonus_points.unwrap_or(DEFAULT_QUEST_BONUS),
        };
        self.quests.push(quest.clone());
        Ok(quest)
    }

    fn register_participant(&mut self, display_name: &str, mode: ParticipationMode) -> Result<Participant> {
        require_open(&self.event, "register_participant")?;
        if display_name.trim().is_empty() {
            return Err(DomainError::InvalidDisplayName);
        }
        if self.participants.iter().any(|p| p.display_name == display_name) {
            return Err(DomainError::DuplicateName(display_name.to_owned()));
        }
        let participant = Participant {
            participant_id: ParticipantId::nth(self.participants.len() + 1),
            display_name: display_name.to_owned(),
            mode,
        };
        self.participants.push(participant.clone());
        Ok(participant)
    }

    fn require_participant(&self, id: &ParticipantId) -> Result<()> {
        if self.participant(id).is_none() {
            return Err(DomainError::UnknownParticipant(id.to_string()));
        }
        Ok(())
    }

    fn team_action(&mut self, participant_id: &ParticipantId, action: &TeamAction) -> Result<Team> {
        require_open(&self.event, "team_action")?;
        self.require_participant(participant_id)?;
        if self.team_of(participant_id).is_some() {
            return Err(DomainError::AlreadyInTeam(participant_id.to_string()));
        }
        match action {
            TeamAction::Create { name } => {
                if name.trim().is_empty() {
                    return Err(DomainError::InvalidTeamName);
                }
                if self.teams.iter().any(|t| &t.name == name) {
                    return Err(DomainError::DuplicateTeamName(name.clone()));
                }
                let team = Team {
                    team_id: TeamId::nth(self.teams.len() + 1),
                    event_id: self.event.event_id.clone(),
                    name: name.clone(),
                    member_ids: BTreeSet::from([participant_id.clone()]),
                };
                self.teams.push(team.clone());
                Ok(team)
            }
            TeamAction::Join { team_id } => {
                let team = self
                    .teams
                    .iter_mut()
                    .find(|t| &t.team_id == team_id)
                    .ok_or_else(|| DomainError::UnknownTeam(team_id.to_string()))?;
                team.member_ids.insert(participant_id.clone());
                Ok(team.clone())
            }
        }
    }

    fn start_quest(
        &mut self,
        participant_id: &ParticipantId,
        quest_id: &QuestId,
        now: Timestamp,
    ) -> Result<Participation> {
        require_active(&self.event, "start_quest")?;
        self.require_participant(participant_id)?;
        if self.quest(quest_id).is_none() {
            return Err(DomainError::UnknownQuest(quest_id.to_string()));
        }
        if self
            .participation(participant_id, quest_id)
            .is_some_and(Participation::is_active)
        {
            return Err(DomainError::AlreadyStarted {
                participant: participant_id.to_string(),
                quest: quest_id.to_string(),
            });
        }
        let participation = Participation {
            participant_id: participant_id.clone(),
            quest_id: quest_id.clone(),
            started_at: now,
            completed_at: None,
            matching_bags: 0,
            completed_by: None,
        };
        self.participations.push(participation.clone());
        Ok(participation)
    }

    fn next_bag_id(&self) -> BagId {
        let claimed = self.claims.iter().filter(|c| !c.used).count();
        BagId::nth(self.bags.len() + claimed + 1)
    }

    fn issue_claim(
        &mut self,
        participant_id: &ParticipantId,
        waste_type: WasteType,
        quest_id: Option<&QuestId>,
    ) -> Result<PendingClaim> {
        require_active(&self.event, "issue_claim")?;
        self.require_participant(participant_id)?;
        if let Some(q) = quest_id {
            if self.quest(q).is_none() {
                return Err(DomainError::UnknownQuest(q.to_string()));
            }
            if self.participation(participant_id, q).is_none() {
                return Err(DomainError::QuestNotStarted {
                    participant: participant_id.to_string(),
                    quest: q.to_string(),
                });
            }
        }
        let claim = PendingClaim {
            bag_id: self.next_bag_id(),
            participant_id: participant_id.clone(),
            waste_type,
            quest_id: quest_id.cloned(),
            used: false,
        };
        self.claims.push(claim.clone());
        Ok(claim)
    }

    fn record_drop(
        &mut self,
        bag_id: &BagId,
        waste_type: WasteType,
        weight: Weight,
        now: Timestamp,
    ) -> Result<Vec<Fact>> {
        require_active(&self.event, "record_drop")?;
        let idx = self
            .claims
            .iter()
            .position(|c| &c.bag_id == bag_id)
            .ok_or_else(|| DomainError::UnknownClaim(bag_id.to_string()))?;
        let claim = self.claims[idx].clone();
        if claim.used {
            return Err(DomainError::ClaimAlreadyUsed(bag_id.to_string()));
        }
        if claim.waste_type != waste_type {
            return Err(DomainError::ClaimMismatch(bag_id.to_string()));
        }
        let facts = self.record_bag(BagInput {
            participant_id: &claim.participant_id,
            waste_type,
            source: BagSource::Bin,
            quest_id: claim.quest_id.as_ref(),
            weight_kg: Some(weight),
            flagged: false,
            now,
            claim: Some(bag_id.clone()),
        })?;
        self.claims[idx].used = true;
        Ok(facts)
    }

    fn record_bag(&mut self, input: BagInput<'_>) -> Result<Vec<Fact>> {
        require_active(&self.event, "record_bag")?;
        self.require_participant(input.participant_id)?;
        if input.source == BagSource::Bin && input.weight_kg.is_none() {
            return Err(DomainError::MissingWeight);
        }
        if input.now < self.event.start_time || input.now > self.event.end_time {
            return Err(DomainError::OutsideEventWindow);
        }

        let mut participation_idx = None;
        let mut completing_quest = None;
        if let Some(quest_id) = input.quest_id {
            let quest = self
                .quest(quest_id)
                .ok_or_else(|| DomainError::UnknownQuest(quest_id.to_string()))?;
            let not_started = || DomainError::QuestNotStarted {
                participant: input.participant_id.to_string(),
                quest: quest_id.to_string(),
            };
            let idx = self
                .participations
                .iter()
                .rposition(|p| &p.participant_id == input.participant_id && &p.quest_id == quest_id)
                .ok_or_else(not_started)?;
            let participation = &self.participations[idx];
            if input.now < participation.started_at {
                return Err(not_started());
            }
            let counts = quest.target_type.is_none_or(|t| t == input.waste_type);
            if participation.is_active() && counts {
                participation_idx = Some(idx);
                let matched = participation.matching_bags + 1;
                if quest.target_count == Some(matched) {
                    completing_quest = Some(quest.clone());
                }
            }
        }

        let bag_id = input.claim.unwrap_or_else(|| self.next_bag_id());
        let bag = BagRecord {
            bag_id: bag_id.clone(),
            event_id: self.event.event_id.clone(),
            participant_id: input.participant_id.clone(),
            quest_id: input.quest_id.cloned(),
            team_id: self.team_of(input.participant_id).map(|t| t.team_id.clone()),
            waste_type: input.waste_type,
            weight_kg: input.weight_kg,
            points: scoring::score_record(input.waste_type, completing_quest.as_ref()),
            recorded_at: input.now,
            source: input.source,
            flagged: input.flagged,
        };

        let mut facts = Vec::new();
        if let Some(idx) = participation_idx {
            let participation = &mut self.participations[idx];
            participation.matching_bags += 1;
            if completing_quest.is_some() {
                participation.completed_at = Some(input.now);
                participation.completed_by = Some(bag_id);
            }
        }
        self.bags.push(bag.clone());
        facts.push(Fact::BagRecorded { bag });
        if completing_quest.is_some() {
            let participation = self.participations[participation_idx.expect("completion implies a participation")].clone();
            facts.push(Fact::QuestCompleted { participation });
        }
        Ok(facts)
    }

    pub fn summary(&self) -> EventSummary {
        let mut by_type: BTreeMap<WasteType, TypeTotals> =
            WasteType::ALL.iter().map(|t| (*t, TypeTotals::default())).collect();
        for bag in &self.bags {
            let totals = by_type.entry(bag.waste_type).or_default();
            totals.bags += 1;
            if let Some(w) = bag.weight_kg {
                totals.weight_kg = totals.weight_kg + w;
            }
        }
        EventSummary {
            event_id: self.event.event_id.clone(),
            by_type,
            total_bags: self.bags.len() as u64,
            participant_count: self.participants.len(),
            quest_completions: self
                .participations
                .iter()
                .filter(|p| p.completed_at.is_some())
                .count(),
        }
    }
}

struct BagInput<'a> {
    participant_id: &'a ParticipantId,
    waste_type: WasteType,
    source: BagSource,
    quest_id: Option<&'a QuestId>,
    weight_kg: Option<Weight>,
    flagged: bool,
    now: Timestamp,
    claim: Option<BagId>,
}
