//! MSB-first bit packing shared by the binary encoding format and the
//! baseline compressor.

/// Accumulates bits most-significant-first and zero-pads to a byte boundary.
#[derive(Debug, Default)]
pub(crate) struct BitWriter {
    bytes: Vec<u8>,
    nbits: usize,
}

impl BitWriter {
    pub fn new() -> BitWriter {
        BitWriter::default()
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value < (1u64 << width));
        for i in (0..width).rev() {
            let bit = (value >> i) & 1;
            let byte_idx = self.nbits / 8;
            if byte_idx == self.bytes.len() {
                self.bytes.push(0);
            }
            if bit == 1 {
                self.bytes[byte_idx] |= 1 << (7 - (self.nbits % 8));
            }
            self.nbits += 1;
        }
    }

    /// Zero-padded bytes.
    pub fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

/// Reads bits most-significant-first from a byte slice.
#[derive(Debug)]
pub(crate) struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize, // bit position
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> BitReader<'a> {
        BitReader { bytes, pos: 0 }
    }

    /// Reads `width` bits; `None` if the input is exhausted.
    pub fn read_bits(&mut self, width: u32) -> Option<u64> {
        debug_assert!(width <= 64);
        if self.pos + width as usize > self.bytes.len() * 8 {
            return None;
        }
        let mut value = 0u64;
        for _ in 0..width {
            let byte = self.bytes[self.pos / 8];
            let bit = (byte >> (7 - (self.pos % 8))) & 1;
            value = (value << 1) | bit as u64;
            self.pos += 1;
        }
        Some(value)
    }

    /// Bits left before the end of the underlying slice.
    pub fn remaining_bits(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }

    /// True if every remaining bit is zero padding within the final byte.
    pub fn only_zero_padding_left(&self) -> bool {
        if self.remaining_bits() >= 8 {
            return false;
        }
        let mut probe = BitReader {
            bytes: self.bytes,
            pos: self.pos,
        };
        while probe.remaining_bits() > 0 {
            if probe.read_bits(1) != Some(0) {
                return false;
            }
        }
        true
    }
}
