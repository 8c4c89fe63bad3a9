//! LZW encoder producing the `.Z` format of the Unix `compress` utility
//! (16-bit maximum code width, block mode with adaptive table resets).
//!
//! Codes are packed LSB-first in groups of eight; whenever the code width
//! changes or the table is cleared the current group is padded out to
//! `n_bits` bytes, because decoders only notice the width change after
//! consuming the group.

const MAGIC: [u8; 2] = [0x1f, 0x9d];
const BLOCK_MODE: u8 = 0x80;
const MAX_BITS: u32 = 16;
const INIT_BITS: u32 = 9;
const CLEAR: u32 = 256;
const FIRST: u32 = 257;
const CHECK_GAP: u64 = 10_000;
const MAX_MAX_CODE: u32 = 1 << MAX_BITS;

const TABLE_BITS: u32 = 18;
const TABLE_SIZE: usize = 1 << TABLE_BITS;
const EMPTY: u32 = u32::MAX;

/// Open-addressed map from (prefix code, next byte) to code.
struct CodeTable {
    keys: Vec<u32>,
    codes: Vec<u32>,
}

impl CodeTable {
    fn new() -> Self {
        CodeTable {
            keys: vec![EMPTY; TABLE_SIZE],
            codes: vec![0; TABLE_SIZE],
        }
    }

    fn clear(&mut self) {
        self.keys.fill(EMPTY);
    }

    fn slot(&self, key: u32) -> (usize, bool) {
        let mut i = (key.wrapping_mul(0x9E37_79B1) >> (32 - TABLE_BITS)) as usize;
        loop {
            match self.keys[i] {
                EMPTY => return (i, false),
                k if k == key => return (i, true),
                _ => i = (i + 1) & (TABLE_SIZE - 1),
            }
        }
    }
}

struct CodeWriter {
    out: Vec<u8>,
    group: [u8; MAX_BITS as usize],
    offset: u32,
    n_bits: u32,
    max_code: u32,
    bytes_out: u64,
}

impl CodeWriter {
    fn put(&mut self, code: u32) {
        for bit in 0..self.n_bits {
            if (code >> bit) & 1 == 1 {
                let pos = self.offset + bit;
                self.group[(pos / 8) as usize] |= 1 << (pos % 8);
            }
        }
        self.offset += self.n_bits;
        if self.offset == self.n_bits * 8 {
            self.flush_group(self.n_bits as usize);
        }
    }

    fn flush_group(&mut self, len: usize) {
        self.out.extend_from_slice(&self.group[..len]);
        self.bytes_out += len as u64;
        self.group = [0; MAX_BITS as usize];
        self.offset = 0;
    }

    /// Pads the current group and moves to the next code width.
    fn widen(&mut self) {
        if self.offset > 0 {
            self.flush_group(self.n_bits as usize);
        }
        self.n_bits += 1;
        self.max_code = if self.n_bits == MAX_BITS {
            MAX_MAX_CODE
        } else {
            (1 << self.n_bits) - 1
        };
    }

    /// Emits CLEAR, pads the group and drops back to the initial width.
    fn clear(&mut self) {
        self.put(CLEAR);
        if self.offset > 0 {
            self.flush_group(self.n_bits as usize);
        }
        self.n_bits = INIT_BITS;
        self.max_code = (1 << INIT_BITS) - 1;
    }

    fn finish(mut self) -> Vec<u8> {
        if self.offset > 0 {
            let len = self.offset.div_ceil(8) as usize;
            self.flush_group(len);
        }
        self.out
    }
}

/// Compresses `input` into a complete `.Z` stream.
pub fn compress(input: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(input.len() / 2 + 16);
    out.extend_from_slice(&MAGIC);
    out.push(BLOCK_MODE | MAX_BITS as u8);
    let Some((&first, rest)) = input.split_first() else {
        return out;
    };

    let mut writer = CodeWriter {
        out,
        group: [0; MAX_BITS as usize],
        offset: 0,
        n_bits: INIT_BITS,
        max_code: (1 << INIT_BITS) - 1,
        bytes_out: 3,
    };
    let mut table = CodeTable::new();
    let mut free_ent = FIRST;
    let mut ratio: u64 = 0;
    let mut checkpoint = CHECK_GAP;
    let mut in_count: u64 = 1;
    let mut ent = u32::from(first);

    for &c in rest {
        in_count += 1;
        let key = (ent << 8) | u32::from(c);
        let (slot, found) = table.slot(key);
        if found {
            ent = table.codes[slot];
            continue;
        }
        writer.put(ent);
        ent = u32::from(c);
        if free_ent < MAX_MAX_CODE {
            table.keys[slot] = key;
            table.codes[slot] = free_ent;
            free_ent += 1;
            // The decoder adds each entry one code later, so the width
            // grows only once the table is one past the current limit.
            if free_ent > writer.max_code + 1 {
                writer.widen();
            }
        } else if in_count >= checkpoint {
            checkpoint = in_count + CHECK_GAP;
            let rat = if in_count > 0x007f_ffff {
                match writer.bytes_out >> 8 {
                    0 => 0x7fff_ffff,
                    r => in_count / r,
                }
            } else {
                (in_count << 8) / writer.bytes_out
            };
            if rat > ratio {
                ratio = rat;
            } else {
                ratio = 0;
                table.clear();
                free_ent = FIRST;
                writer.clear();
            }
        }
    }
    writer.put(ent);
    writer.finish()
}
