//! Counter-based stream derivation: every path draws from its own ChaCha
//! stream, selected by path index, under a per-component key derived from
//! the master seed. Results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent consumers of randomness within one experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Principal,
    QBand,
    RBand,
    Refinement,
    Diagnostics,
}

impl Component {
    fn tag(self) -> u64 {
        match self {
            Component::Principal => 0x5851_f42d_4c95_7f2d,
            Component::QBand => 0x1405_7b7e_f767_814f,
            Component::RBand => 0x2545_f491_4f6c_dd1d,
            Component::Refinement => 0x9e6c_63d0_676a_9a99,
            Component::Diagnostics => 0xd6e8_feb8_6659_fd93,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key of one component under the master seed.
pub fn component_seed(seed: u64, component: Component) -> u64 {
    splitmix64(splitmix64(seed) ^ component.tag())
}

/// Generator for path `index` of a component.
pub fn path_rng(component_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(component_seed);
    rng.set_stream(index);
    rng
}
