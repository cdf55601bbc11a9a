//! Arithmetic in GF(2), GF(2^4) and GF(2^8).
//!
//! Elements are stored in the low `q` bits of a `u8`. Multiplication uses
//! log/antilog tables built at compile time; table construction panics (and
//! therefore fails the build) if the chosen generator is not primitive for
//! the reduction polynomial.

use std::fmt;

use super::RlncError;

/// x^4 + x + 1
const POLY_GF16: u16 = 0x13;
/// x^8 + x^4 + x^3 + x + 1
const POLY_GF256: u16 = 0x11B;

struct Tables {
    /// exp[i] = g^i, stored twice over so `exp[log a + log b]` needs no reduction.
    exp: [u8; 512],
    log: [u8; 256],
}

const fn build_tables(bits: u32, poly: u16, generator: u16) -> Tables {
    let order = (1usize << bits) - 1;
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut seen = [false; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < order {
        assert!(!seen[x as usize], "generator is not primitive");
        seen[x as usize] = true;
        exp[i] = x as u8;
        exp[i + order] = x as u8;
        log[x as usize] = i as u8;
        x = clmul_reduce(x, generator, bits, poly);
        i += 1;
    }
    assert!(x == 1, "generator order does not match the field");
    Tables { exp, log }
}

/// Carry-less multiply followed by reduction modulo `poly`.
const fn clmul_reduce(a: u16, b: u16, bits: u32, poly: u16) -> u16 {
    let mut acc: u16 = 0;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        a <<= 1;
        if a & (1 << bits) != 0 {
            a ^= poly;
        }
        b >>= 1;
    }
    acc
}

static GF16: Tables = build_tables(4, POLY_GF16, 0x02);
// 0x02 is not primitive under 0x11B; 0x03 is.
static GF256: Tables = build_tables(8, POLY_GF256, 0x03);

/// Field size selector: GF(2^q) for q in {1, 4, 8}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FieldOrder {
    Gf2,
    Gf16,
    #[default]
    Gf256,
}

impl FieldOrder {
    pub fn from_q(q: u8) -> Result<Self, RlncError> {
        match q {
            1 => Ok(FieldOrder::Gf2),
            4 => Ok(FieldOrder::Gf16),
            8 => Ok(FieldOrder::Gf256),
            _ => Err(RlncError::UnsupportedField(q as u32)),
        }
    }

    /// Accepts the field size (2, 16 or 256).
    pub fn from_size(size: u32) -> Result<Self, RlncError> {
        match size {
            2 => Ok(FieldOrder::Gf2),
            16 => Ok(FieldOrder::Gf16),
            256 => Ok(FieldOrder::Gf256),
            _ => Err(RlncError::UnsupportedField(size)),
        }
    }

    pub fn q(self) -> u8 {
        match self {
            FieldOrder::Gf2 => 1,
            FieldOrder::Gf16 => 4,
            FieldOrder::Gf256 => 8,
        }
    }

    pub fn size(self) -> u32 {
        1 << self.q()
    }

    /// Reduction polynomial, with the leading term.
    pub fn polynomial(self) -> u16 {
        match self {
            FieldOrder::Gf2 => 0b11,
            FieldOrder::Gf16 => POLY_GF16,
            FieldOrder::Gf256 => POLY_GF256,
        }
    }

    /// Field elements packed into one payload byte.
    pub fn symbols_per_byte(self) -> usize {
        8 / self.q() as usize
    }

    fn mask(self) -> u8 {
        (self.size() - 1) as u8
    }

    pub fn contains(self, a: u8) -> bool {
        a & !self.mask() == 0
    }

    pub fn add(self, a: u8, b: u8) -> u8 {
        a ^ b
    }

    pub fn mul(self, a: u8, b: u8) -> u8 {
        debug_assert!(self.contains(a) && self.contains(b));
        if a == 0 || b == 0 {
            return 0;
        }
        match self {
            FieldOrder::Gf2 => 1,
            FieldOrder::Gf16 => GF16.exp[GF16.log[a as usize] as usize + GF16.log[b as usize] as usize],
            FieldOrder::Gf256 => GF256.exp[GF256.log[a as usize] as usize + GF256.log[b as usize] as usize],
        }
    }

    pub fn inv(self, a: u8) -> Result<u8, RlncError> {
        if a == 0 {
            return Err(RlncError::ZeroInverse);
        }
        debug_assert!(self.contains(a));
        Ok(match self {
            FieldOrder::Gf2 => 1,
            FieldOrder::Gf16 => GF16.exp[15 - GF16.log[a as usize] as usize],
            FieldOrder::Gf256 => GF256.exp[255 - GF256.log[a as usize] as usize],
        })
    }

    /// Multiplies every symbol packed in a payload byte by `c`.
    pub fn scale_byte(self, c: u8, byte: u8) -> u8 {
        match self {
            FieldOrder::Gf256 => self.mul(c, byte),
            FieldOrder::Gf16 => (self.mul(c, byte >> 4) << 4) | self.mul(c, byte & 0x0F),
            FieldOrder::Gf2 => {
                if c == 0 {
                    0
                } else {
                    byte
                }
            }
        }
    }

    /// `table[x] == scale_byte(c, x)`, for hot loops over payloads.
    pub fn scale_table(self, c: u8) -> [u8; 256] {
        let mut table = [0u8; 256];
        for (x, slot) in table.iter_mut().enumerate() {
            *slot = self.scale_byte(c, x as u8);
        }
        table
    }

    /// `dst += c * src`, symbol-wise over packed payload bytes.
    pub fn axpy(self, dst: &mut [u8], c: u8, src: &[u8]) {
        debug_assert_eq!(dst.len(), src.len());
        match c {
            0 => {}
            1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
            _ => {
                let table = self.scale_table(c);
                dst.iter_mut().zip(src).for_each(|(d, &s)| *d ^= table[s as usize]);
            }
        }
    }

    /// `dst *= c` in place.
    pub fn scale_in_place(self, dst: &mut [u8], c: u8) {
        if c == 1 {
            return;
        }
        let table = self.scale_table(c);
        dst.iter_mut().for_each(|d| *d = table[*d as usize]);
    }
}

impl fmt::Display for FieldOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.size())
    }
}

pub fn gf_mul(a: u8, b: u8, field: FieldOrder) -> u8 {
    field.mul(a, b)
}

pub fn gf_inv(a: u8, field: FieldOrder) -> Result<u8, RlncError> {
    field.inv(a)
}
