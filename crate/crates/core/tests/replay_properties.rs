use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmac::hmac::hmac;
use tmac::replay::sign_with_identifier;
use tmac::{sign, HashAlgorithm, OutcomeKind, SecretKey, TmacSuite, VerificationOutcome, Verifier};

const BASE: u64 = 1_700_000_000;

fn key() -> SecretKey {
    SecretKey::new(b"integration master key".to_vec()).unwrap()
}

#[test]
fn tampering_never_accepted() {
    let suite = TmacSuite::sha256();
    let verifier = Verifier::new(suite, key(), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut accepted = 0;
    for trial in 0..1200 {
        let msg: Vec<u8> = (0..rng.gen_range(1..64)).map(|_| rng.gen()).collect();
        let mut env = sign(&suite, &key(), &msg, None, BASE).unwrap();
        let field = match trial % 3 {
            0 => &mut env.message,
            1 => &mut env.identifier,
            _ => &mut env.mac,
        };
        let bit = rng.gen_range(0..field.len() * 8);
        field[bit / 8] ^= 1 << (bit % 8);
        let outcome = verifier.verify(&env, BASE).unwrap();
        assert_eq!(outcome, VerificationOutcome::InvalidMac, "trial {trial}");
        accepted += usize::from(outcome.is_accept());
    }
    assert_eq!(accepted, 0);
    // Nothing was retained from any rejected envelope.
    assert_eq!(verifier.cache().identifier_count(), 0);
}

#[test]
fn forgery_without_the_key_fails() {
    let suite = TmacSuite::sha256();
    let verifier = Verifier::new(suite, key(), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..500 {
        let guess: Vec<u8> = (0..32).map(|_| rng.gen()).collect();
        let guess = SecretKey::new(guess).unwrap();
        let fresh_id: Vec<u8> = (0..16).map(|_| rng.gen()).collect();
        // The adversary can compute I = HMAC(s', m) and sign it, just not under K.
        let forged = sign_with_identifier(&suite, &guess, b"transfer 100", fresh_id, BASE).unwrap();
        assert_eq!(verifier.verify(&forged, BASE).unwrap(), VerificationOutcome::InvalidMac);
    }
}

#[test]
fn cache_never_exceeds_window() {
    let suite = TmacSuite::sha256();
    for window in 1..=4u64 {
        let verifier = Verifier::new(suite, key(), window).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(window);
        let mut now = BASE;
        for _ in 0..300 {
            now += rng.gen_range(0..20);
            let signed_at = now - rng.gen_range(0..(window * 30).min(now - BASE + 1));
            let env = sign(&suite, &key(), b"m", None, signed_at).unwrap();
            verifier.verify(&env, now).unwrap();
            assert!(verifier.cache().window_count() as u64 <= window);
            let current = suite.counter_at(now).unwrap();
            for (counter, _) in verifier.cache().snapshot() {
                assert!(counter <= current && counter.0 + window > current.0);
            }
        }
    }
}

#[test]
fn concurrent_identical_envelopes_accept_once() {
    let suite = TmacSuite::sha256();
    for round in 0..50 {
        let verifier = Arc::new(Verifier::new(suite, key(), 2).unwrap());
        let envs: Vec<_> = (0..8).map(|i| sign(&suite, &key(), format!("{round}-{i}").as_bytes(), None, BASE).unwrap()).collect();
        let handles: Vec<_> = (0..16)
            .map(|t| {
                let verifier = Arc::clone(&verifier);
                let envs = envs.clone();
                std::thread::spawn(move || {
                    envs.iter()
                        .cycle()
                        .skip(t)
                        .take(envs.len())
                        .map(|e| verifier.verify(e, BASE).unwrap().kind())
                        .filter(|k| *k == OutcomeKind::Accept)
                        .count()
                })
            })
            .collect();
        let accepts: usize = handles.into_iter().map(|h| h.join().unwrap()).sum();
        assert_eq!(accepts, envs.len());
    }
}

proptest! {
    #[test]
    fn sign_verify_round_trip(
        msg in prop::collection::vec(any::<u8>(), 0..256),
        signed_offset in 0u64..1_000_000,
        lag in 0u64..120,
        window in 1u64..=4,
    ) {
        let suite = TmacSuite::sha256();
        let signed_at = BASE + signed_offset;
        let verified_at = signed_at + lag;
        let env = sign(&suite, &key(), &msg, None, signed_at).unwrap();
        let verifier = Verifier::new(suite, key(), window).unwrap();
        let sign_counter = suite.counter_at(signed_at).unwrap();
        let verify_counter = suite.counter_at(verified_at).unwrap();
        let outcome = verifier.verify(&env, verified_at).unwrap();
        if verify_counter.0 - sign_counter.0 < window {
            prop_assert_eq!(outcome, VerificationOutcome::Accept { counter: sign_counter });
            prop_assert_eq!(verifier.verify(&env, verified_at).unwrap().kind(), OutcomeKind::ReplayDetected);
        } else {
            prop_assert_eq!(outcome, VerificationOutcome::InvalidMac);
        }
    }

    #[test]
    fn mac_is_nested_composition(
        msg in prop::collection::vec(any::<u8>(), 0..128),
        id in prop::collection::vec(any::<u8>(), 8..40),
        now in BASE..BASE + 10_000_000,
    ) {
        let alg = HashAlgorithm::Sha256;
        let suite = TmacSuite::sha256();
        let env = sign(&suite, &key(), &msg, Some(&id), now).unwrap();
        let counter = suite.counter_at(now).unwrap().to_be_bytes();
        let expected = hmac(&alg, &hmac(&alg, key().as_bytes(), &counter), &hmac(&alg, &id, &msg));
        prop_assert_eq!(env.mac, expected);
    }
}
