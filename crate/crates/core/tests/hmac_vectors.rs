// HMAC-SHA-256 vectors from RFC 4231 and HMAC-SHA-1 vectors from RFC 2202.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmac::{hmac, HashAlgorithm, HashFunction};

struct Vector {
    key: Vec<u8>,
    data: Vec<u8>,
    mac: &'static str,
}

fn v(key: Vec<u8>, data: &[u8], mac: &'static str) -> Vector {
    Vector { key, data: data.to_vec(), mac }
}

fn rfc4231() -> Vec<Vector> {
    vec![
        v(vec![0x0b; 20], b"Hi There", "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"),
        v(b"Jefe".to_vec(), b"what do ya want for nothing?", "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"),
        v(vec![0xaa; 20], &[0xdd; 50], "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe"),
        v((1..=25).collect(), &[0xcd; 50], "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b"),
        // Test case 5 publishes only the leading 128 bits.
        v(vec![0x0c; 20], b"Test With Truncation", "a3b6167473100ee06e0c796c2955552b"),
        v(vec![0xaa; 131], b"Test Using Larger Than Block-Size Key - Hash Key First", "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54"),
        v(
            vec![0xaa; 131],
            b"This is a test using a larger than block-size key and a larger than block-size data. The key needs to be hashed before being used by the HMAC algorithm.",
            "9b09ffa71b942fcb27635fbcd5b0e944bfdc63644f0713938a7f51535c3a35e2",
        ),
    ]
}

fn rfc2202() -> Vec<Vector> {
    vec![
        v(vec![0x0b; 20], b"Hi There", "b617318655057264e28bc0b6fb378c8ef146be00"),
        v(b"Jefe".to_vec(), b"what do ya want for nothing?", "effcdf6ae5eb2fa2d27416d5f184df9c259a7c79"),
        v(vec![0xaa; 20], &[0xdd; 50], "125d7342b9ac11cd91a39af48aa17b4f63f175d3"),
        v((1..=25).collect(), &[0xcd; 50], "4c9007f4026250c6bc8414f9bf50c86c2d7235da"),
        v(vec![0x0c; 20], b"Test With Truncation", "4c1a03424b55e07fe7f27be1d58bb9324a9a5a04"),
        v(vec![0xaa; 80], b"Test Using Larger Than Block-Size Key - Hash Key First", "aa4ae5e15272d00e95705637ce8a3b55ed402112"),
        v(vec![0xaa; 80], b"Test Using Larger Than Block-Size Key and Larger Than One Block-Size Data", "e8e99d0f45237d786d6bbaa7965c7808bbff1a91"),
    ]
}

fn check(alg: HashAlgorithm, vectors: &[Vector]) {
    for (i, vector) in vectors.iter().enumerate() {
        let mac = hex::encode(hmac(&alg, &vector.key, &vector.data));
        assert_eq!(&mac[..vector.mac.len()], vector.mac, "{alg} case {}", i + 1);
    }
}

#[test]
fn hmac_sha256_rfc4231() {
    check(HashAlgorithm::Sha256, &rfc4231());
}

#[test]
fn hmac_sha1_rfc2202() {
    check(HashAlgorithm::Sha1, &rfc2202());
}

#[test]
fn single_bit_flips_change_the_mac() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let alg = HashAlgorithm::Sha256;
    for _ in 0..1000 {
        let key: Vec<u8> = (0..rng.gen_range(1..100)).map(|_| rng.gen()).collect();
        let msg: Vec<u8> = (0..rng.gen_range(1..200)).map(|_| rng.gen()).collect();
        let base = hmac(&alg, &key, &msg);

        let mut flipped_msg = msg.clone();
        let bit = rng.gen_range(0..msg.len() * 8);
        flipped_msg[bit / 8] ^= 1 << (bit % 8);
        assert_ne!(base, hmac(&alg, &key, &flipped_msg));

        let mut flipped_key = key.clone();
        let bit = rng.gen_range(0..key.len() * 8);
        flipped_key[bit / 8] ^= 1 << (bit % 8);
        assert_ne!(base, hmac(&alg, &flipped_key, &msg));
    }
}

proptest! {
    #[test]
    fn output_length_matches_algorithm(
        key in prop::collection::vec(any::<u8>(), 1..200),
        msg in prop::collection::vec(any::<u8>(), 0..300),
    ) {
        for alg in HashAlgorithm::ALL {
            prop_assert_eq!(hmac(&alg, &key, &msg).len(), alg.output_len());
        }
    }

    #[test]
    fn deterministic(key in prop::collection::vec(any::<u8>(), 1..80), msg in prop::collection::vec(any::<u8>(), 0..80)) {
        prop_assert_eq!(hmac(&HashAlgorithm::Sha256, &key, &msg), hmac(&HashAlgorithm::Sha256, &key, &msg));
    }
}
