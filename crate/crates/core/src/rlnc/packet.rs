use super::{FieldOrder, RlncError};

/// A coding vector and the matching combination of the source payloads.
///
/// Wire layout: `M` as big-endian u16, `q` as one byte, the coding vector
/// packed MSB-first (one element per byte for q=8, two for q=4, eight for
/// q=1), then the payload bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPacket {
    field: FieldOrder,
    coefficients: Vec<u8>,
    payload: Vec<u8>,
}

impl CodedPacket {
    pub(crate) fn from_parts(field: FieldOrder, coefficients: Vec<u8>, payload: Vec<u8>) -> Self {
        Self {
            field,
            coefficients,
            payload,
        }
    }

    pub fn new(field: FieldOrder, coefficients: Vec<u8>, payload: Vec<u8>) -> Result<Self, RlncError> {
        if coefficients.is_empty() {
            return Err(RlncError::EmptyGeneration);
        }
        if coefficients.len() > u16::MAX as usize {
            return Err(RlncError::GenerationTooLarge(coefficients.len()));
        }
        if let Some(&bad) = coefficients.iter().find(|&&c| !field.contains(c)) {
            return Err(RlncError::ElementOutOfField(bad));
        }
        Ok(Self::from_parts(field, coefficients, payload))
    }

    pub fn field(&self) -> FieldOrder {
        self.field
    }

    pub fn coefficients(&self) -> &[u8] {
        &self.coefficients
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    fn packed_len(m: usize, field: FieldOrder) -> usize {
        m.div_ceil(field.symbols_per_byte())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let m = self.coefficients.len();
        let per_byte = self.field.symbols_per_byte();
        let q = self.field.q();
        let mut out = Vec::with_capacity(3 + Self::packed_len(m, self.field) + self.payload.len());
        out.extend_from_slice(&(m as u16).to_be_bytes());
        out.push(q);
        for chunk in self.coefficients.chunks(per_byte) {
            let mut byte = 0u8;
            for (slot, &c) in chunk.iter().enumerate() {
                byte |= c << (8 - q as usize * (slot + 1));
            }
            out.push(byte);
        }
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RlncError> {
        if bytes.len() < 3 {
            return Err(RlncError::Malformed("header shorter than 3 bytes"));
        }
        let m = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
        if m == 0 {
            return Err(RlncError::Malformed("zero generation size"));
        }
        let field = FieldOrder::from_q(bytes[2])?;
        let packed = Self::packed_len(m, field);
        let body = &bytes[3..];
        if body.len() < packed {
            return Err(RlncError::Malformed("truncated coding vector"));
        }
        let q = field.q() as usize;
        let mask = (field.size() - 1) as u8;
        let per_byte = field.symbols_per_byte();
        let coefficients: Vec<u8> = (0..m)
            .map(|j| (body[j / per_byte] >> (8 - q * (j % per_byte + 1))) & mask)
            .collect();
        // padding bits of the last coefficient byte must be zero
        let used = (m - 1) % per_byte + 1;
        if used < per_byte && body[packed - 1] & ((1u8 << (8 - q * used)) - 1) != 0 {
            return Err(RlncError::Malformed("non-zero coefficient padding"));
        }
        Ok(Self::from_parts(field, coefficients, body[packed..].to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gf256_layout() {
        let p = CodedPacket::new(FieldOrder::Gf256, vec![0xAB, 0x01], vec![9, 8, 7]).unwrap();
        assert_eq!(p.to_bytes(), vec![0x00, 0x02, 0x08, 0xAB, 0x01, 9, 8, 7]);
    }

    #[test]
    fn packed_layouts() {
        let p = CodedPacket::new(FieldOrder::Gf16, vec![0xA, 0xB, 0xC], vec![0xFF]).unwrap();
        assert_eq!(p.to_bytes(), vec![0x00, 0x03, 0x04, 0xAB, 0xC0, 0xFF]);
        let p = CodedPacket::new(FieldOrder::Gf2, vec![1, 0, 1, 1, 0, 0, 0, 0, 1], vec![]).unwrap();
        assert_eq!(p.to_bytes(), vec![0x00, 0x09, 0x01, 0b1011_0000, 0b1000_0000]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(CodedPacket::from_bytes(&[0, 1]).is_err());
        assert!(CodedPacket::from_bytes(&[0, 0, 8]).is_err());
        assert_eq!(
            CodedPacket::from_bytes(&[0, 1, 3, 0]),
            Err(RlncError::UnsupportedField(3))
        );
        assert!(CodedPacket::from_bytes(&[0, 4, 8, 1, 2]).is_err());
        assert!(CodedPacket::from_bytes(&[0, 1, 4, 0x11]).is_err());
    }

    fn arb_packet() -> impl Strategy<Value = CodedPacket> {
        (
            prop_oneof![Just(FieldOrder::Gf2), Just(FieldOrder::Gf16), Just(FieldOrder::Gf256)],
            1usize..40,
        )
            .prop_flat_map(|(field, m)| {
                let mask = (field.size() - 1) as u8;
                (
                    Just(field),
                    prop::collection::vec(any::<u8>().prop_map(move |c| c & mask), m),
                    prop::collection::vec(any::<u8>(), 0..24),
                )
            })
            .prop_map(|(field, c, p)| CodedPacket::new(field, c, p).unwrap())
    }

    proptest! {
        #[test]
        fn wire_roundtrip(packet in arb_packet()) {
            prop_assert_eq!(CodedPacket::from_bytes(&packet.to_bytes()).unwrap(), packet);
        }
    }
}
