//! Bag hand-over QR payloads and waste-type verification.
//!
//! Payload grammar (UTF-8, no surrounding whitespace):
//!
//! ```text
//! ECOQ1|<event_id>|<bag_id>|<WASTE_TYPE>|<crc32 as 8 lowercase hex digits>
//! ```
//!
//! The checksum is the IEEE CRC-32 of everything before the last `|`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::WasteType;
use crate::ids::{BagId, EventId};

pub const PAYLOAD_VERSION: &str = "ECOQ1";
pub const DEFAULT_OVERRIDE_THRESHOLD: f64 = 0.8;
pub const STUB_CONFIDENCE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QrError {
    #[error("ids must be non-empty and must not contain `|`")]
    InvalidId,
    #[error("malformed payload: {0}")]
    MalformedPayload(&'static str),
    #[error("unknown waste type `{0}`")]
    UnknownWasteType(String),
    #[error("checksum mismatch")]
    ChecksumMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagClaim {
    pub event_id: EventId,
    pub bag_id: BagId,
    pub waste_type: WasteType,
    /// 8 lowercase hex digits.
    pub checksum: String,
}

fn checksum(body: &str) -> String {
    format!("{:08x}", crc32fast::hash(body.as_bytes()))
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.contains('|')
}

pub fn encode_bag_qr(event_id: &EventId, bag_id: &BagId, waste_type: WasteType) -> Result<String, QrError> {
    if !valid_id(event_id.as_str()) || !valid_id(bag_id.as_str()) {
        return Err(QrError::InvalidId);
    }
    let body = format!("{PAYLOAD_VERSION}|{event_id}|{bag_id}|{waste_type}");
    let crc = checksum(&body);
    Ok(format!("{body}|{crc}"))
}

pub fn decode_bag_qr(payload: &str) -> Result<BagClaim, QrError> {
    let fields: Vec<&str> = payload.split('|').collect();
    let [version, event_id, bag_id, waste, crc] = fields[..] else {
        return Err(QrError::MalformedPayload("expected 5 fields"));
    };
    if version != PAYLOAD_VERSION {
        return Err(QrError::MalformedPayload("unsupported version"));
    }
    if event_id.is_empty() || bag_id.is_empty() {
        return Err(QrError::MalformedPayload("empty id"));
    }
    if crc.len() != 8 || !crc.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return Err(QrError::MalformedPayload("checksum must be 8 lowercase hex digits"));
    }
    let body = &payload[..payload.len() - crc.len() - 1];
    if checksum(body) != crc {
        return Err(QrError::ChecksumMismatch);
    }
    let waste_type = waste
        .parse::<WasteType>()
        .map_err(|_| QrError::UnknownWasteType(waste.to_owned()))?;
    Ok(BagClaim {
        event_id: EventId::new(event_id),
        bag_id: BagId::new(bag_id),
        waste_type,
        checksum: crc.to_owned(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierVerdict {
    pub predicted: WasteType,
    confidence: f64,
}

impl ClassifierVerdict {
    /// Confidence is clamped into `[0, 1]`; NaN becomes 0.
    pub fn new(predicted: WasteType, confidence: f64) -> Self {
        let confidence = if confidence.is_nan() { 0.0 } else { confidence.clamp(0.0, 1.0) };
        Self { predicted, confidence }
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }
}

/// Anything that can guess a bag's waste type from an image reference.
pub trait WasteClassifier: Send + Sync {
    fn classify(&self, image_ref: &str) -> ClassifierVerdict;
}

/// Reads the waste type from a label embedded in the image name, e.g.
/// `uploads/glass_0042.jpg`. Unlabelled images are `Mixed` with zero confidence.
#[derive(Debug, Clone, Copy, Default)]
pub struct LabelClassifier;

impl WasteClassifier for LabelClassifier {
    fn classify(&self, image_ref: &str) -> ClassifierVerdict {
        let name = image_ref.rsplit(['/', '\\']).next().unwrap_or(image_ref).to_ascii_uppercase();
        let label = name
            .split(|c: char| !c.is_ascii_alphabetic())
            .find_map(|token| token.parse::<WasteType>().ok());
        match label {
            Some(t) => ClassifierVerdict::new(t, STUB_CONFIDENCE),
            None => ClassifierVerdict::new(WasteType::Mixed, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "waste_type", rename_all = "snake_case")]
pub enum VerificationOutcome {
    Accept,
    Override(WasteType),
    /// Keep the claimed type but mark the record for review.
    Flag,
}

pub fn verify_waste_type(claimed: WasteType, verdict: &ClassifierVerdict, threshold: f64) -> VerificationOutcome {
    if verdict.predicted == claimed {
        VerificationOutcome::Accept
    } else if verdict.confidence >= threshold {
        VerificationOutcome::Override(verdict.predicted)
    } else {
        VerificationOutcome::Flag
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_layout() {
        let payload = encode_bag_qr(&"e1".into(), &"b1".into(), WasteType::Plastic).unwrap();
        // crc frozen from zlib.crc32(b"ECOQ1|e1|b1|PLASTIC")
        assert_eq!(payload, "ECOQ1|e1|b1|PLASTIC|8cc29574");
        assert_eq!(decode_bag_qr(&payload).unwrap().checksum, "8cc29574");
    }

    #[test]
    fn rejects_delimiter_in_ids() {
        assert_eq!(encode_bag_qr(&"e|1".into(), &"b1".into(), WasteType::Glass), Err(QrError::InvalidId));
        assert_eq!(encode_bag_qr(&"e1".into(), &"".into(), WasteType::Glass), Err(QrError::InvalidId));
    }

    #[test]
    fn detects_tampering() {
        let mut payload = encode_bag_qr(&"e1".into(), &"b1".into(), WasteType::Plastic).unwrap();
        let last = payload.pop().unwrap();
        payload.push(if last == '0' { '1' } else { '0' });
        assert_eq!(decode_bag_qr(&payload), Err(QrError::ChecksumMismatch));
    }

    #[test]
    fn version_gate() {
        let payload = encode_bag_qr(&"e1".into(), &"b1".into(), WasteType::Plastic).unwrap();
        let v2 = payload.replacen("ECOQ1", "ECOQ2", 1);
        assert!(matches!(decode_bag_qr(&v2), Err(QrError::MalformedPayload(_))));
        assert!(matches!(decode_bag_qr("ECOQ1|e1|b1"), Err(QrError::MalformedPayload(_))));
        assert!(matches!(decode_bag_qr(""), Err(QrError::MalformedPayload(_))));
    }

    #[test]
    fn unknown_type_with_valid_checksum() {
        let body = "ECOQ1|e1|b1|WOOD";
        let payload = format!("{body}|{}", checksum(body));
        assert_eq!(decode_bag_qr(&payload), Err(QrError::UnknownWasteType("WOOD".into())));
    }

    #[test]
    fn verification_rules() {
        let t = DEFAULT_OVERRIDE_THRESHOLD;
        let v = |p, c| ClassifierVerdict::new(p, c);
        assert_eq!(verify_waste_type(WasteType::Plastic, &v(WasteType::Plastic, 0.3), t), VerificationOutcome::Accept);
        assert_eq!(
            verify_waste_type(WasteType::Plastic, &v(WasteType::Metal, 0.95), t),
            VerificationOutcome::Override(WasteType::Metal)
        );
        assert_eq!(verify_waste_type(WasteType::Plastic, &v(WasteType::Metal, 0.5), t), VerificationOutcome::Flag);
    }

    #[test]
    fn stub_reads_labels() {
        let c = LabelClassifier;
        assert_eq!(c.classify("uploads/glass_0042.jpg"), ClassifierVerdict::new(WasteType::Glass, 0.9));
        assert_eq!(c.classify("IMG-HAZARDOUS.png").predicted, WasteType::Hazardous);
        assert_eq!(c.classify("photo.jpg"), ClassifierVerdict::new(WasteType::Mixed, 0.0));
        assert_eq!(c.classify("C:\\paper\\img.jpg").predicted, WasteType::Mixed);
    }

    #[test]
    fn verdict_confidence_is_clamped() {
        assert_eq!(ClassifierVerdict::new(WasteType::Paper, 3.0).confidence(), 1.0);
        assert_eq!(ClassifierVerdict::new(WasteType::Paper, -1.0).confidence(), 0.0);
        assert_eq!(ClassifierVerdict::new(WasteType::Paper, f64::NAN).confidence(), 0.0);
    }
}
