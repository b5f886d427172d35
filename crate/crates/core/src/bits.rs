//! Bit-vector helpers. Bits are stored one per byte (`0` or `1`).

/// Packs bits 8 per byte, least significant bit first.
pub fn pack(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

/// Inverse of [`pack`]; `len` is the number of bits to extract.
pub fn unpack(bytes: &[u8], len: usize) -> Vec<u8> {
    (0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect()
}

/// Number of positions where `a` and `b` differ.
pub fn hamming_distance(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub fn weight(bits: &[u8]) -> usize {
    bits.iter().filter(|&&b| b != 0).count()
}

pub fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}
