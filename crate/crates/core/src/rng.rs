//! Seeded random streams.
//!
//! Every random quantity in the simulator comes from a ChaCha8 generator keyed
//! by the master seed. Independent consumers are separated by the ChaCha
//! *stream* word rather than by re-seeding:
//!
//! ```text
//! stream_id = fold(splitmix64, tag, indices...)
//! rng       = ChaCha8Rng::seed_from_u64(master_seed).set_stream(stream_id)
//! ```
//!
//! `tag` names the consumer (placement, shadowing, a swarm velocity draw, ...)
//! and `indices` pin the draw to a position in the computation, e.g.
//! `[iteration, particle]`. Results therefore do not depend on scheduling or
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Consumers of randomness. The discriminant is the stream tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Placement = 1,
    Shadowing = 2,
    Pilots = 3,
    Channel = 4,
    MonteCarlo = 5,
    RandomSelection = 6,
    SwarmInit = 7,
    Velocity = 8,
    Position = 9,
    RandomPower = 10,
    Fixture = 11,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream word for a tag and index path.
pub fn stream_id(tag: Stream, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(tag as u64), |acc, &i| splitmix64(acc ^ splitmix64(i)))
}

/// Generator for one consumer of the master seed.
pub fn stream_rng(seed: u64, tag: Stream, indices: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(tag, indices));
    rng
}
