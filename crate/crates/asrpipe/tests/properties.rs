//! Property tests for format round-trips and metric/normalization
//! invariants.

use proptest::prelude::*;

use asrpipe::decoder::{read_emissions, write_emissions, EmissionMatrix};
use asrpipe::manifest::{read_manifest, write_manifest, LanguageTag, ManifestEntry};
use asrpipe::pipeline::{temperature_weights, MixSpec};
use asrpipe::textnorm::{preprocess, strip_diacritics};

fn arb_lang() -> impl Strategy<Value = LanguageTag> {
    prop_oneof![
        Just(LanguageTag::En),
        Just(LanguageTag::Ig),
        Just(LanguageTag::Yo),
        Just(LanguageTag::Pd),
        Just(LanguageTag::Ha),
    ]
}

fn arb_entry() -> impl Strategy<Value = ManifestEntry> {
    (
        "[a-z0-9_./-]{1,24}",
        0.0f64..7200.0,
        "[ -~àáèéìíòóùúọẹṣịụṅ]{0,60}",
        arb_lang(),
        proptest::option::of(0.000001f64..=1.0),
        proptest::option::of("[a-z0-9_-]{1,12}"),
    )
        .prop_map(|(audio_path, duration_s, text, lang, confidence, source)| {
            ManifestEntry {
                audio_path,
                duration_s,
                text,
                lang,
                // keep six stable decimals so write->read is exact
                confidence: confidence.map(|c| {
                    let c = (c * 1e6).round() / 1e6;
                    if c <= 0.0 {
                        1e-6
                    } else {
                        c
                    }
                }),
                source,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn manifest_write_read_is_identity(entries in proptest::collection::vec(arb_entry(), 0..12)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        write_manifest(&entries, &path).unwrap();
        let back = read_manifest(&path).unwrap();
        prop_assert_eq!(back, entries);
    }

    #[test]
    fn preprocess_is_idempotent(text in "\\PC{0,80}", spell in any::<bool>()) {
        let once = preprocess(&text, spell);
        prop_assert_eq!(preprocess(&once, spell), once);
    }

    #[test]
    fn strip_diacritics_is_idempotent(text in "\\PC{0,80}") {
        let once = strip_diacritics(&text);
        prop_assert_eq!(strip_diacritics(&once), once);
    }

    #[test]
    fn emissions_round_trip_bit_exact(
        frames in 1usize..8,
        classes in 2usize..6,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vocab: Vec<String> = (0..classes).map(|i| format!("t{i}")).collect();
        let mut log_probs = Vec::with_capacity(frames * classes);
        for _ in 0..frames {
            let raw: Vec<f64> = (0..classes).map(|_| rng.gen_range(0.01..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            log_probs.extend(raw.iter().map(|p| ((p / sum).ln()) as f32));
        }
        let em = EmissionMatrix::new(log_probs, frames, classes, 0, vocab).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.ctce");
        write_emissions(&em, &path).unwrap();
        let back = read_emissions(&path).unwrap();
        let a: Vec<u32> = em.log_probs().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = back.log_probs().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
        prop_assert_eq!(em.vocab(), back.vocab());
    }

    #[test]
    fn wer_swap_exchanges_insertions_and_deletions(
        r in proptest::collection::vec("[a-d]{1,3}", 1..8),
        h in proptest::collection::vec("[a-d]{1,3}", 0..8),
    ) {
        use asrpipe::eval::wer_raw;
        let r = r.join(" ");
        let h = h.join(" ");
        prop_assume!(!h.trim().is_empty());
        let fwd = wer_raw(&r, &h).unwrap();
        let rev = wer_raw(&h, &r).unwrap();
        prop_assert_eq!(fwd.substitutions, rev.substitutions);
        prop_assert_eq!(fwd.insertions, rev.deletions);
        prop_assert_eq!(fwd.deletions, rev.insertions);
    }

    #[test]
    fn temperature_weights_normalize_and_flatten(
        counts in proptest::collection::btree_map("[a-f]", 1.0f64..1000.0, 2..5),
        temperature in 1.0f64..100.0,
    ) {
        let spec = MixSpec { counts: counts.clone().into_iter().map(|(k, v)| (k.to_string(), v)).collect(), temperature };
        let w = temperature_weights(&spec).unwrap();
        let sum: f64 = w.values().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);

        let hotter = MixSpec { counts: spec.counts.clone(), temperature: temperature * 2.0 };
        let w2 = temperature_weights(&hotter).unwrap();
        let spread = |m: &std::collections::BTreeMap<String, f64>| {
            let max = m.values().cloned().fold(f64::MIN, f64::max);
            let min = m.values().cloned().fold(f64::MAX, f64::min);
            max - min
        };
        prop_assert!(spread(&w2) <= spread(&w) + 1e-12);
    }
}
