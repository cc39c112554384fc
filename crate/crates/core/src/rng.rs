//! Keyed random streams.
//!
//! Every random draw in a run comes from a ChaCha stream whose seed is a hash of
//! the run seed, a domain tag and a tuple of indices. Draws for one link, one
//! slot or one device therefore do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Server = 1,
    Device = 2,
    Request = 3,
    Shadowing = 4,
    Game = 5,
    InitialPartition = 6,
    Preference = 7,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn stream_key(seed: u64, domain: Domain, keys: &[u64]) -> u64 {
    let mut h = splitmix(seed ^ splitmix(domain as u64));
    for &k in keys {
        h = splitmix(h ^ splitmix(k.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

pub fn stream(seed: u64, domain: Domain, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, domain, keys))
}
