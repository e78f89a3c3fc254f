//! Straightforward re-derivations of library results, written without
//! reusing the code under test.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap};

use crate::domain::{BagRecord, Command, WasteType};
use crate::ids::{BagId, ParticipantId, QuestId};
use crate::scoring::{LeaderboardEntry, Scope};

/// Bit-at-a-time reflected CRC-32 (polynomial 0xEDB88320).
pub fn crc32(bytes: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc ^= u32::from(b);
        for _ in 0..8 {
            crc = if crc & 1 == 1 { (crc >> 1) ^ 0xEDB8_8320 } else { crc >> 1 };
        }
    }
    !crc
}

fn base_points(t: WasteType) -> u32 {
    match t {
        WasteType::Mixed | WasteType::Paper => 10,
        WasteType::Plastic | WasteType::Glass => 15,
        WasteType::Metal => 20,
        WasteType::Hazardous => 30,
    }
}

/// Groups bags by subject and sorts by (points desc, latest bag asc, id asc).
pub fn leaderboard(bags: &[BagRecord], scope: Scope) -> Vec<LeaderboardEntry> {
    let mut groups: BTreeMap<String, Vec<&BagRecord>> = BTreeMap::new();
    for bag in bags {
        let subject = match scope {
            Scope::Individual => Some(bag.participant_id.to_string()),
            Scope::Team => bag.team_id.as_ref().map(|t| t.to_string()),
        };
        if let Some(s) = subject {
            groups.entry(s).or_default().push(bag);
        }
    }
    let mut rows: Vec<LeaderboardEntry> = groups
        .into_iter()
        .map(|(subject_id, bags)| LeaderboardEntry {
            subject_id,
            total_points: bags.iter().map(|b| u64::from(b.points)).sum(),
            bag_count: bags.len() as u64,
            last_scored_at: bags.iter().map(|b| b.recorded_at).max(),
        })
        .collect();
    rows.sort_by_key(|r| (Reverse(r.total_points), r.last_scored_at, r.subject_id.clone()));
    rows
}

struct QuestDef {
    target_type: Option<WasteType>,
    target_count: Option<u32>,
    bonus: u32,
}

#[derive(Default)]
struct Progress {
    matched: u32,
    done: bool,
}

fn score(
    progress: &mut HashMap<(ParticipantId, QuestId), Progress>,
    quests: &[QuestDef],
    participant: &ParticipantId,
    quest: &Option<QuestId>,
    waste: WasteType,
) -> u32 {
    let mut p = base_points(waste);
    if let Some(q) = quest {
        let idx: usize = q.as_str()[1..].parse().expect("sequential quest id");
        let def = &quests[idx - 1];
        let prog = progress.entry((participant.clone(), q.clone())).or_default();
        if !prog.done && def.target_type.is_none_or(|t| t == waste) {
            prog.matched += 1;
            if def.target_count == Some(prog.matched) {
                prog.done = true;
                p += def.bonus;
            }
        }
    }
    p
}

/// Replays an accepted command history and returns the expected points of
/// every bag, in recording order.
pub fn bag_points(commands: &[Command]) -> Vec<u32> {
    let mut quests: Vec<QuestDef> = Vec::new();
    let mut progress: HashMap<(ParticipantId, QuestId), Progress> = HashMap::new();
    let mut claims: HashMap<BagId, (ParticipantId, Option<QuestId>)> = HashMap::new();
    let mut reserved = 0usize;
    let mut points = Vec::new();

    for cmd in commands {
        match cmd {
            Command::CreateQuest {
                target_type,
                target_count,
                bonus_points,
                ..
            } => quests.push(QuestDef {
                target_type: *target_type,
                target_count: *target_count,
                bonus: bonus_points.unwrap_or(50),
            }),
            Command::StartQuest {
                participant_id, quest_id, ..
            } => {
                progress.insert((participant_id.clone(), quest_id.clone()), Progress::default());
            }
            Command::RecordBag {
                participant_id,
                quest_id,
                waste_type,
                ..
            } => {
                points.push(score(&mut progress, &quests, participant_id, quest_id, *waste_type));
                reserved += 1;
            }
            Command::IssueClaim {
                participant_id,
                quest_id,
                ..
            } => {
                reserved += 1;
                claims.insert(BagId::nth(reserved), (participant_id.clone(), quest_id.clone()));
            }
            Command::RecordDrop { bag_id, waste_type, .. } => {
                let (participant, quest) = claims.remove(bag_id).expect("drop of an issued claim");
                points.push(score(&mut progress, &quests, &participant, &quest, *waste_type));
            }
            _ => {}
        }
    }
    points
}
