//! Players, coalitions and subset lattices.
//!
//! A coalition is a bitmask over one modality's players. Lattice code works on
//! "compressed" indices: the subsets of a base coalition with `k` members are
//! numbered `0..2^k` by packing the member bits of the base into the low `k` bits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of players in one modality.
pub const MAX_PLAYERS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Image,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayerSet {
    modality: Modality,
    labels: Vec<String>,
}

impl PlayerSet {
    pub fn new(modality: Modality, labels: Vec<String>) -> Result<Self> {
        if labels.len() > MAX_PLAYERS {
            return Err(Error::PlayerSetTooLarge {
                size: labels.len(),
                cap: MAX_PLAYERS,
            });
        }
        Ok(Self { modality, labels })
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The grand coalition N.
    pub fn full(&self) -> Coalition {
        Coalition::full(self.size())
    }

    pub fn empty(&self) -> Coalition {
        Coalition::empty(self.size())
    }

    pub fn coalition<I: IntoIterator<Item = usize>>(&self, members: I) -> Result<Coalition> {
        Coalition::from_indices(self.size(), members)
    }
}

/// A subset of the players `0..width` of some player set.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition {
    bits: u32,
    width: u8,
}

impl Coalition {
    pub fn empty(width: usize) -> Self {
        debug_assert!(width <= MAX_PLAYERS);
        Self {
            bits: 0,
            width: width as u8,
        }
    }

    pub fn full(width: usize) -> Self {
        debug_assert!(width <= MAX_PLAYERS);
        Self {
            bits: low_mask(width as u32),
            width: width as u8,
        }
    }

    pub fn from_bits(width: usize, bits: u32) -> Result<Self> {
        if width > MAX_PLAYERS {
            return Err(Error::PlayerSetTooLarge {
                size: width,
                cap: MAX_PLAYERS,
            });
        }
        if bits & !low_mask(width as u32) != 0 {
            return Err(Error::PlayerOutOfRange {
                index: (31 - bits.leading_zeros()) as usize,
                size: width,
            });
        }
        Ok(Self {
            bits,
            width: width as u8,
        })
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(width: usize, members: I) -> Result<Self> {
        let mut bits = 0u32;
        for i in members {
            if i >= width {
                return Err(Error::PlayerOutOfRange { index: i, size: width });
            }
            bits |= 1 << i;
        }
        Self::from_bits(width, bits)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Size of the owning player set.
    pub fn width(self) -> usize {
        self.width as usize
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn contains(self, player: usize) -> bool {
        player < 32 && self.bits & (1 << player) != 0
    }

    pub fn is_subset_of(self, other: Coalition) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn union(self, other: Coalition) -> Coalition {
        debug_assert_eq!(self.width, other.width);
        Coalition {
            bits: self.bits | other.bits,
            width: self.width,
        }
    }

    pub fn intersection(self, other: Coalition) -> Coalition {
        debug_assert_eq!(self.width, other.width);
        Coalition {
            bits: self.bits & other.bits,
            width: self.width,
        }
    }

    pub fn with(self, player: usize) -> Coalition {
        debug_assert!(player < self.width());
        Coalition {
            bits: self.bits | (1 << player),
            width: self.width,
        }
    }

    pub fn without(self, player: usize) -> Coalition {
        Coalition {
            bits: self.bits & !(1 << player),
            width: self.width,
        }
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let bits = self.bits;
        (0..32).filter(move |i| bits & (1 << i) != 0)
    }

    /// Number of subsets of this coalition, `2^len`.
    pub fn lattice_len(self) -> usize {
        1usize << self.len()
    }

    /// Index of `sub` among the subsets of `self` (compressed index).
    pub fn compress(self, sub: Coalition) -> Option<usize> {
        if !sub.is_subset_of(self) {
            return None;
        }
        Some(extract_bits(sub.bits, self.bits) as usize)
    }

    /// Inverse of [`Coalition::compress`].
    pub fn expand(self, index: usize) -> Coalition {
        debug_assert!(index < self.lattice_len());
        Coalition {
            bits: deposit_bits(index as u32, self.bits),
            width: self.width,
        }
    }

    /// All subsets of `self` in compressed-index order.
    pub fn subsets(self) -> impl Iterator<Item = Coalition> {
        (0..self.lattice_len()).map(move |i| self.expand(i))
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}/{}", self.width)
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// All subsets of `base`, ordered by increasing size and then by bitmask.
pub fn enumerate_sublattice(base: Coalition) -> Vec<Coalition> {
    let mut subsets: Vec<Coalition> = base.subsets().collect();
    subsets.sort_by_key(|c| (c.len(), c.bits()));
    subsets
}

fn low_mask(width: u32) -> u32 {
    if width >= 32 {
        u32::MAX
    } else {
        (1u32 << width) - 1
    }
}

// Software pext: gather the bits of `value` selected by `mask` into the low bits.
fn extract_bits(value: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut k = 0;
    let mut m = mask;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if value & low != 0 {
            out |= 1 << k;
        }
        k += 1;
        m &= m - 1;
    }
    out
}

// Software pdep: scatter the low bits of `value` to the positions set in `mask`.
fn deposit_bits(value: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut k = 0;
    let mut m = mask;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if value & (1 << k) != 0 {
            out |= low;
        }
        k += 1;
        m &= m - 1;
    }
    out
}
