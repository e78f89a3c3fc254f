//! Static pre-shared tokens.
//!
//! ```text
//! organizer:<secret>
//! participant:<event_id>:<participant_id>:<mac>
//! bin:<bin_id>:<mac>
//! ```
//!
//! `mac` is the first 16 hex digits of SHA-256 over the token seed, the role
//! and the ids, joined with `|`. Nothing is stored server-side.

use ecoq_core::{BinId, EventId, ParticipantId};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("missing or invalid token")]
    Unauthorized,
    #[error("token does not grant this action")]
    Forbidden,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Role {
    Organizer,
    Participant { event_id: EventId, participant_id: ParticipantId },
    Bin { bin_id: BinId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiToken {
    pub role: Role,
    pub secret: String,
}

#[derive(Debug, Clone)]
pub struct TokenAuthority {
    organizer_secret: String,
    seed: String,
}

fn constant_time_eq(a: &str, b: &str) -> bool {
    a.len() == b.len() && a.bytes().zip(b.bytes()).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

impl TokenAuthority {
    pub fn new(organizer_secret: impl Into<String>, seed: impl Into<String>) -> Self {
        Self {
            organizer_secret: organizer_secret.into(),
            seed: seed.into(),
        }
    }

    fn mac(&self, parts: &[&str]) -> String {
        let mut h = Sha256::new();
        h.update(self.seed.as_bytes());
        for p in parts {
            h.update(b"|");
            h.update(p.as_bytes());
        }
        hex::encode(h.finalize())[..16].to_owned()
    }

    pub fn organizer_token(&self) -> String {
        format!("organizer:{}", self.organizer_secret)
    }

    pub fn participant_token(&self, event_id: &EventId, participant_id: &ParticipantId) -> String {
        let mac = self.mac(&["participant", event_id.as_str(), participant_id.as_str()]);
        format!("participant:{event_id}:{participant_id}:{mac}")
    }

    pub fn bin_token(&self, bin_id: &BinId) -> String {
        let mac = self.mac(&["bin", bin_id.as_str()]);
        format!("bin:{bin_id}:{mac}")
    }

    /// Checks the token's secret. Says nothing yet about what it may do.
    pub fn authenticate(&self, token: Option<&str>) -> Result<ApiToken, AuthError> {
        let token = token.ok_or(AuthError::Unauthorized)?;
        let parts: Vec<&str> = token.split(':').collect();
        let (role, secret) = match parts[..] {
            ["organizer", secret] if constant_time_eq(secret, &self.organizer_secret) => (Role::Organizer, secret),
            ["participant", event, participant, mac]
                if constant_time_eq(mac, &self.mac(&["participant", event, participant])) =>
            {
                (
                    Role::Participant {
                        event_id: EventId::new(event),
                        participant_id: ParticipantId::new(participant),
                    },
                    mac,
                )
            }
            ["bin", bin, mac] if constant_time_eq(mac, &self.mac(&["bin", bin])) => {
                (Role::Bin { bin_id: BinId::new(bin) }, mac)
            }
            _ => return Err(AuthError::Unauthorized),
        };
        Ok(ApiToken {
            role,
            secret: secret.to_owned(),
        })
    }

    pub fn authorize(&self, token: Option<&str>, required: &Role) -> Result<ApiToken, AuthError> {
        let parsed = self.authenticate(token)?;
        parsed.permits(required)?;
        Ok(parsed)
    }
}

impl ApiToken {
    /// Roles do not nest: the organizer cannot act as a participant or a bin.
    pub fn permits(&self, required: &Role) -> Result<(), AuthError> {
        if &self.role == required {
            Ok(())
        } else {
            Err(AuthError::Forbidden)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn authority() -> TokenAuthority {
        TokenAuthority::new("s3cret", "seed")
    }

    #[test]
    fn organizer_and_participant_gates() {
        let a = authority();
        let org = a.organizer_token();
        assert_eq!(a.authorize(Some(&org), &Role::Organizer).unwrap().role, Role::Organizer);

        let p = a.participant_token(&"e1".into(), &"p1".into());
        assert_eq!(a.authorize(Some(&p), &Role::Organizer), Err(AuthError::Forbidden));
        let role = Role::Participant {
            event_id: "e1".into(),
            participant_id: "p1".into(),
        };
        assert!(a.authorize(Some(&p), &role).is_ok());
        assert_eq!(a.authorize(Some(&org), &role), Err(AuthError::Forbidden));

        for garbage in ["", "organizer:nope", "participant:e1:p1:0000000000000000", "hello"] {
            assert_eq!(a.authorize(Some(garbage), &Role::Organizer), Err(AuthError::Unauthorized));
        }
        assert_eq!(a.authorize(None, &Role::Organizer), Err(AuthError::Unauthorized));
    }

    #[test]
    fn tokens_are_bound_to_ids_and_seed() {
        let a = authority();
        let p1 = a.participant_token(&"e1".into(), &"p1".into());
        let forged = p1.replace(":p1:", ":p2:");
        assert_eq!(a.authenticate(Some(&forged)), Err(AuthError::Unauthorized));
        let other = TokenAuthority::new("s3cret", "other-seed");
        assert_eq!(other.authenticate(Some(&p1)), Err(AuthError::Unauthorized));
        let bin = a.bin_token(&"bin-1".into());
        assert_eq!(a.authenticate(Some(&bin)).unwrap().role, Role::Bin { bin_id: "bin-1".into() });
    }
}
