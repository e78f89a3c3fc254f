use ecoq_core::domain::WasteType;
use ecoq_core::testkit::oracle;
use ecoq_core::verification::{
    decode_bag_qr, encode_bag_qr, verify_waste_type, ClassifierVerdict, QrError, VerificationOutcome,
};
use ecoq_core::{BagId, EventId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn bitwise_crc_matches_known_values() {
    assert_eq!(oracle::crc32(b"123456789"), 0xcbf4_3926);
    assert_eq!(oracle::crc32(b""), 0);
    assert_eq!(oracle::crc32(b"ECOQ1|e1|b1|PLASTIC"), 0x8cc2_9574);
}

fn random_id(rng: &mut impl Rng, prefix: char) -> String {
    let len = rng.gen_range(1..12);
    let tail: String = (0..len)
        .map(|_| *b"abcdefghijklmnopqrstuvwxyz0123456789-_".get(rng.gen_range(0..38)).unwrap() as char)
        .collect();
    format!("{prefix}{tail}")
}

#[test]
fn round_trip_and_single_byte_tamper() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut mutations, mut rejected) = (0u32, 0u32);
    for _ in 0..1000 {
        let event = EventId::new(random_id(&mut rng, 'e'));
        let bag = BagId::new(random_id(&mut rng, 'b'));
        let waste = WasteType::ALL[rng.gen_range(0..WasteType::ALL.len())];
        let payload = encode_bag_qr(&event, &bag, waste).unwrap();

        let body = &payload[..payload.len() - 9];
        assert_eq!(&payload[payload.len() - 8..], format!("{:08x}", oracle::crc32(body.as_bytes())));

        let claim = decode_bag_qr(&payload).unwrap();
        assert_eq!((claim.event_id, claim.bag_id, claim.waste_type), (event, bag, waste));

        let mut bytes = payload.into_bytes();
        let i = rng.gen_range(0..bytes.len());
        let original = bytes[i];
        let mut replacement = original;
        while replacement == original {
            replacement = rng.gen_range(0x20u8..0x7f);
        }
        bytes[i] = replacement;
        mutations += 1;
        if decode_bag_qr(std::str::from_utf8(&bytes).unwrap()).is_err() {
            rejected += 1;
        }
    }
    let rate = f64::from(rejected) / f64::from(mutations);
    assert!(rate >= 0.996, "rejected {rejected}/{mutations}");
}

#[test]
fn decode_errors_by_kind() {
    let good = encode_bag_qr(&EventId::new("e1"), &BagId::new("b1"), WasteType::Plastic).unwrap();
    assert_eq!(good, "ECOQ1|e1|b1|PLASTIC|8cc29574");
    assert!(matches!(decode_bag_qr("ECOQ1|e1|b1|PLASTIC"), Err(QrError::MalformedPayload(_))));
    assert!(matches!(decode_bag_qr("ECOQ2|e1|b1|PLASTIC|8cc29574"), Err(QrError::MalformedPayload(_))));
    assert_eq!(decode_bag_qr("ECOQ1|e1|b1|PLASTIC|8cc29575"), Err(QrError::ChecksumMismatch));
    let body = "ECOQ1|e1|b1|WOOD";
    let forged = format!("{body}|{:08x}", oracle::crc32(body.as_bytes()));
    assert_eq!(decode_bag_qr(&forged), Err(QrError::UnknownWasteType("WOOD".into())));
}

proptest! {
    #[test]
    fn decode_never_panics(s in "\\PC{0,64}") {
        let _ = decode_bag_qr(&s);
    }

    #[test]
    fn verification_is_total(
        claimed in proptest::sample::select(WasteType::ALL.to_vec()),
        predicted in proptest::sample::select(WasteType::ALL.to_vec()),
        confidence in proptest::num::f64::ANY,
        threshold in 0.0f64..=1.0,
    ) {
        let verdict = ClassifierVerdict::new(predicted, confidence);
        prop_assert!((0.0..=1.0).contains(&verdict.confidence()));
        let out = verify_waste_type(claimed, &verdict, threshold);
        let expected = if predicted == claimed {
            VerificationOutcome::Accept
        } else if verdict.confidence() >= threshold {
            VerificationOutcome::Override(predicted)
        } else {
            VerificationOutcome::Flag
        };
        prop_assert_eq!(out, expected);
    }
}
