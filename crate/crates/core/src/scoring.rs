//! Bag points, quest bonuses and leaderboards.
//!
//! Points are count-based: weight never changes a score. The bonus of a quest
//! is carried by the bag whose registration reaches the quest target exactly,
//! so summing bag points always gives the leaderboard total.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{BagRecord, Quest, Timestamp, WasteType};

pub fn score_bag(waste_type: WasteType) -> u32 {
    match waste_type {
        WasteType::Mixed => 10,
        WasteType::Paper => 10,
        WasteType::Plastic => 15,
        WasteType::Glass => 15,
        WasteType::Metal => 20,
        WasteType::Hazardous => 30,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("quest `{0}` has no target count")]
    NoTarget(String),
}

/// The quest bonus earned when `bags_matching` bags have been credited.
///
/// Non-zero only on exact attainment of the target, so the bonus is paid once.
pub fn apply_quest_bonus(quest: &Quest, bags_matching: u32) -> Result<u32, ScoringError> {
    let target = quest
        .target_count
        .ok_or_else(|| ScoringError::NoTarget(quest.quest_id.to_string()))?;
    Ok(if bags_matching == target {
        quest.bonus_points
    } else {
        0
    })
}

/// Points for one bag; `completes` is the quest this bag brings to its target, if any.
pub fn score_record(waste_type: WasteType, completes: Option<&Quest>) -> u32 {
    let bonus = completes
        .and_then(|q| q.target_count.map(|target| apply_quest_bonus(q, target)))
        .and_then(Result::ok)
        .unwrap_or(0);
    score_bag(waste_type) + bonus
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Individual,
    Team,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub subject_id: String,
    pub total_points: u64,
    pub bag_count: u64,
    pub last_scored_at: Option<Timestamp>,
}

/// Board order: most points first, then whoever scored their last bag earlier,
/// then ascending subject id.
pub fn board_order(a: &LeaderboardEntry, b: &LeaderboardEntry) -> Ordering {
    b.total_points
        .cmp(&a.total_points)
        .then_with(|| match (a.last_scored_at, b.last_scored_at) {
            (Some(x), Some(y)) => x.cmp(&y),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        })
        .then_with(|| a.subject_id.cmp(&b.subject_id))
}

/// Ranks the subjects that registered at least one bag.
///
/// `Team` scope only counts bags recorded while the participant was in a team.
pub fn leaderboard(bags: &[BagRecord], scope: Scope) -> Vec<LeaderboardEntry> {
    let mut by_subject: HashMap<&str, LeaderboardEntry> = HashMap::new();
    for bag in bags {
        let subject = match scope {
            Scope::Individual => bag.participant_id.as_str(),
            Scope::Team => match &bag.team_id {
                Some(team) => team.as_str(),
                None => continue,
            },
        };
        let entry = by_subject.entry(subject).or_insert_with(|| LeaderboardEntry {
            subject_id: subject.to_owned(),
            total_points: 0,
            bag_count: 0,
            last_scored_at: None,
        });
        entry.total_points += u64::from(bag.points);
        entry.bag_count += 1;
        entry.last_scored_at = entry.last_scored_at.max(Some(bag.recorded_at));
    }
    let mut entries: Vec<_> = by_subject.into_values().collect();
    entries.sort_by(board_order);
    entries
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{EventId, QuestId};

    fn quest(target: Option<u32>, bonus: u32) -> Quest {
        Quest {
            quest_id: QuestId::new("q1"),
            event_id: EventId::new("e1"),
            title: "Plastic sweep".into(),
            target_type: target.map(|_| WasteType::Plastic),
            target_count: target,
            area: None,
            bonus_points: bonus,
        }
    }

    #[test]
    fn points_table() {
        assert_eq!(score_bag(WasteType::Plastic), 15);
        assert_eq!(score_bag(WasteType::Mixed), 10);
        assert_eq!(score_bag(WasteType::Hazardous), 30);
        assert_eq!(score_bag(WasteType::Paper), 10);
        assert_eq!(score_bag(WasteType::Glass), 15);
        assert_eq!(score_bag(WasteType::Metal), 20);
    }

    #[test]
    fn bonus_paid_on_exact_attainment_only() {
        let q = quest(Some(5), 50);
        assert_eq!(apply_quest_bonus(&q, 5), Ok(50));
        assert_eq!(apply_quest_bonus(&q, 4), Ok(0));
        assert_eq!(apply_quest_bonus(&q, 6), Ok(0));
    }

    #[test]
    fn bonus_requires_target() {
        let q = quest(None, 50);
        assert_eq!(apply_quest_bonus(&q, 1), Err(ScoringError::NoTarget("q1".into())));
        assert_eq!(score_record(WasteType::Plastic, Some(&q)), 15);
    }

    #[test]
    fn empty_board() {
        assert!(leaderboard(&[], Scope::Individual).is_empty());
        assert!(leaderboard(&[], Scope::Team).is_empty());
    }
}
