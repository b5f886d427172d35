use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_mt::Mt64;

use crate::adapt::CodeSelection;
use crate::ldpc::ParityCheckMatrix;
use crate::{Error, Result};

/// Role of one frame position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PositionKind {
    Payload,
    Punctured,
    Shortened,
}

/// Partition of the frame positions into payload, punctured and shortened
/// sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLayout {
    kinds: Vec<PositionKind>,
    payload: Vec<u32>,
    punctured: Vec<u32>,
    shortened: Vec<u32>,
}

impl FrameLayout {
    pub fn from_kinds(kinds: Vec<PositionKind>) -> Self {
        let collect = |k| {
            kinds
                .iter()
                .enumerate()
                .filter(|&(_, &x)| x == k)
                .map(|(i, _)| i as u32)
                .collect()
        };
        FrameLayout {
            payload: collect(PositionKind::Payload),
            punctured: collect(PositionKind::Punctured),
            shortened: collect(PositionKind::Shortened),
            kinds,
        }
    }

    /// Layout for `selection` on `h`.
    ///
    /// Punctured positions are the first `p` untainted columns; when `p`
    /// exceeds `p_R` the remaining ones are drawn from the other columns with
    /// the shared generator. Shortened positions are drawn from what is left
    /// and every other column carries payload.
    pub fn for_selection(h: &ParityCheckMatrix, selection: &CodeSelection, shared: &mut Mt64) -> Result<Self> {
        let n = h.n_cols();
        let (p, s) = (selection.punctured, selection.shortened);
        if p + s >= n {
            return Err(Error::Config(format!(
                "selection with p = {p}, s = {s} leaves no payload in a {n}-bit frame"
            )));
        }
        let mut kinds = vec![PositionKind::Payload; n];
        let untainted = h.untainted_columns();
        for &c in untainted.iter().take(p) {
            kinds[c as usize] = PositionKind::Punctured;
        }
        let mut rest: Vec<u32> = (0..n as u32)
            .filter(|&c| kinds[c as usize] == PositionKind::Payload)
            .collect();
        rest.shuffle(shared);
        let extra = p.saturating_sub(untainted.len());
        for &c in &rest[..extra] {
            kinds[c as usize] = PositionKind::Punctured;
        }
        for &c in &rest[extra..extra + s] {
            kinds[c as usize] = PositionKind::Shortened;
        }
        Ok(FrameLayout::from_kinds(kinds))
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, i: usize) -> PositionKind {
        self.kinds[i]
    }

    /// Payload positions in ascending order.
    pub fn payload_positions(&self) -> &[u32] {
        &self.payload
    }

    pub fn punctured_positions(&self) -> &[u32] {
        &self.punctured
    }

    pub fn shortened_positions(&self) -> &[u32] {
        &self.shortened
    }
}

/// One party's view of a frame: layout, interleaver and position values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameAssembly {
    pub layout: FrameLayout,
    /// `bits[payload_positions[j]] = subblock[permutation[j]]`.
    pub permutation: Vec<u32>,
    /// Values of all frame positions.
    pub bits: Vec<u8>,
    /// Order in which payload positions are disclosed, synchronized.
    pub payload_disclosure_order: Vec<u32>,
    /// Per-frame key of the verification hash.
    pub hash_key: u64,
}

/// Assembles a frame.
///
/// Derives, in this order, from the shared Mersenne Twister stream: the
/// layout, the interleaver, the shortened values, the payload disclosure
/// order and the hash key. Punctured values come from `true_random`.
pub fn build_frame(
    subblock: &[u8],
    h: &ParityCheckMatrix,
    selection: &CodeSelection,
    frame_seed: u64,
    true_random: &mut dyn RngCore,
) -> Result<FrameAssembly> {
    let mut shared = Mt64::new(frame_seed);
    let layout = FrameLayout::for_selection(h, selection, &mut shared)?;
    let payload = layout.payload_positions();
    if subblock.len() != payload.len() {
        return Err(Error::Config(format!(
            "subblock has {} bits, frame layout expects {}",
            subblock.len(),
            payload.len()
        )));
    }
    let mut permutation: Vec<u32> = (0..payload.len() as u32).collect();
    permutation.shuffle(&mut shared);

    let mut bits = vec![0u8; layout.len()];
    for (&pos, &src) in payload.iter().zip(&permutation) {
        bits[pos as usize] = subblock[src as usize];
    }
    for &pos in layout.shortened_positions() {
        bits[pos as usize] = shared.gen::<bool>() as u8;
    }
    let mut payload_disclosure_order = payload.to_vec();
    payload_disclosure_order.shuffle(&mut shared);
    let hash_key = shared.next_u64();
    for &pos in layout.punctured_positions() {
        bits[pos as usize] = true_random.gen::<bool>() as u8;
    }
    Ok(FrameAssembly {
        layout,
        permutation,
        bits,
        payload_disclosure_order,
        hash_key,
    })
}

impl FrameAssembly {
    /// Payload in original subblock order.
    pub fn deinterleave(&self, bits: &[u8]) -> Vec<u8> {
        let payload = self.layout.payload_positions();
        let mut out = vec![0u8; payload.len()];
        for (&pos, &dst) in payload.iter().zip(&self.permutation) {
            out[dst as usize] = bits[pos as usize];
        }
        out
    }
}

const MERSENNE_61: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % MERSENNE_61 as u128) as u64
}

/// Keyed 64-bit polynomial hash of a bit string over GF(2^61 - 1).
///
/// Bits are packed into 56-bit limbs; the bit length is folded in last, so
/// strings of different length never share a limb sequence.
pub fn verification_hash(key: u64, bits: &[u8]) -> u64 {
    let k = key % (MERSENNE_61 - 1) + 1;
    let mut acc = 0u64;
    for chunk in bits.chunks(56) {
        let limb = chunk
            .iter()
            .enumerate()
            .fold(0u64, |v, (i, &b)| v | (u64::from(b & 1) << i));
        acc = (mul_mod(acc, k) + limb + 1) % MERSENNE_61;
    }
    (mul_mod(acc, k) + bits.len() as u64) % MERSENNE_61
}

/// Mixes a session seed and a frame number into an independent frame seed.
pub fn frame_seed(session_seed: u64, frame_id: u32) -> u64 {
    splitmix64(session_seed ^ splitmix64(u64::from(frame_id) + 1))
}

/// Public value both sides compare to confirm they derived the same frame
/// seed.
pub fn seed_commitment(frame_seed: u64) -> u64 {
    splitmix64(frame_seed ^ 0x5EED_C0DE_5EED_C0DE)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{peg_construct, CodeRate, DegreeDistribution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashSet;

    fn matrix() -> ParityCheckMatrix {
        peg_construct(2000, 500, &DegreeDistribution::column_weight_three(0.75), 3).unwrap()
    }

    fn sel(p: usize, s: usize) -> CodeSelection {
        CodeSelection {
            rate: CodeRate::from_percent(75).unwrap(),
            punctured: p,
            shortened: s,
            qber_hat: 0.03,
        }
    }

    fn subblock(len: usize, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen::<bool>() as u8).collect()
    }

    #[test]
    fn all_shortened_has_no_punctured_positions() {
        let h = matrix();
        let a = build_frame(&subblock(1700, 1), &h, &sel(0, 300), 9, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        assert!(a.layout.punctured_positions().is_empty());
        assert_eq!(a.layout.shortened_positions().len(), 300);
        assert_eq!(a.layout.payload_positions().len(), 1700);
    }

    #[test]
    fn equal_seeds_synchronize() {
        let h = matrix();
        let alice = build_frame(&subblock(1700, 1), &h, &sel(100, 200), 42, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let bob = build_frame(&subblock(1700, 2), &h, &sel(100, 200), 42, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        assert_eq!(alice.layout, bob.layout);
        assert_eq!(alice.permutation, bob.permutation);
        assert_eq!(alice.payload_disclosure_order, bob.payload_disclosure_order);
        assert_eq!(alice.hash_key, bob.hash_key);
        for &pos in alice.layout.shortened_positions() {
            assert_eq!(alice.bits[pos as usize], bob.bits[pos as usize]);
        }
    }

    #[test]
    fn punctured_positions_are_untainted() {
        let h = matrix();
        let p = h.max_punctured().min(300);
        let a = build_frame(&subblock(1700, 1), &h, &sel(p, 300 - p), 5, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let untainted: HashSet<u32> = h.untainted_columns().iter().copied().collect();
        let punctured = a.layout.punctured_positions();
        assert_eq!(punctured.len(), p);
        assert_eq!(punctured.iter().collect::<HashSet<_>>().len(), p);
        assert!(punctured.iter().all(|c| untainted.contains(c)));
    }

    #[test]
    fn layout_partitions_frame() {
        let h = matrix();
        let a = build_frame(&subblock(1700, 1), &h, &sel(300, 0), 5, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let l = &a.layout;
        let mut all: Vec<u32> = [l.payload_positions(), l.punctured_positions(), l.shortened_positions()].concat();
        all.sort_unstable();
        assert_eq!(all, (0..2000).collect::<Vec<u32>>());
        let untainted: HashSet<u32> = h.untainted_columns().iter().copied().collect();
        let from_untainted = l.punctured_positions().iter().filter(|c| untainted.contains(c)).count();
        assert_eq!(from_untainted, h.max_punctured().min(300));
    }

    #[test]
    fn interleaving_roundtrip() {
        let h = matrix();
        let sb = subblock(1700, 7);
        let a = build_frame(&sb, &h, &sel(40, 260), 11, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.deinterleave(&a.bits), sb);
        assert_ne!(a.permutation, (0..1700).collect::<Vec<u32>>());
    }

    #[test]
    fn wrong_subblock_length() {
        let h = matrix();
        assert!(build_frame(&subblock(1000, 7), &h, &sel(0, 300), 1, &mut ChaCha20Rng::seed_from_u64(3)).is_err());
    }

    #[test]
    fn hash_behaviour() {
        assert_eq!(verification_hash(5, &[]), verification_hash(5, &[]));
        let a = subblock(1700, 1);
        let mut b = a.clone();
        assert_eq!(verification_hash(77, &a), verification_hash(77, &b));
        b[1000] ^= 1;
        assert_ne!(verification_hash(77, &a), verification_hash(77, &b));
        assert_ne!(verification_hash(77, &[0]), verification_hash(77, &[0, 0]));
        assert_ne!(verification_hash(1, &a), verification_hash(2, &a));
    }

    #[test]
    fn hash_matches_direct_polynomial() {
        // Limbs 0b101 and 0b1 (bits 56..58), length 58, key k = 3:
        // h = ((0 * 3 + 5 + 1) * 3 + 1 + 1) * 3 + 58 = 118.
        let mut bits = vec![0u8; 58];
        bits[0] = 1;
        bits[2] = 1;
        bits[56] = 1;
        assert_eq!(verification_hash(2, &bits), 118);
    }

    #[test]
    fn frame_seeds_differ() {
        let seeds: HashSet<u64> = (0..1000).map(|i| frame_seed(1, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(frame_seed(1, 0), frame_seed(2, 0));
    }
}
