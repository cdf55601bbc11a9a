//! Online Gauss-Jordan elimination.
//!
//! Received rows are kept in reduced row echelon form: every stored row has
//! a leading 1 in its pivot column and zeros in every other pivot column.
//! Once `M` pivots exist the payload of the row pivoting on column `j` is
//! source packet `j`.

use super::{CodedPacket, FieldOrder, Generation, RlncError};

#[derive(Debug, Clone)]
struct Row {
    pivot: usize,
    coefficients: Vec<u8>,
    payload: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct DecoderState {
    field: FieldOrder,
    generation_size: usize,
    packet_size: Option<usize>,
    rows: Vec<Row>,
    row_for_column: Vec<Option<usize>>,
}

impl DecoderState {
    pub fn new(generation_size: usize, field: FieldOrder) -> Result<Self, RlncError> {
        if generation_size == 0 {
            return Err(RlncError::EmptyGeneration);
        }
        Ok(Self {
            field,
            generation_size,
            packet_size: None,
            rows: Vec::with_capacity(generation_size),
            row_for_column: vec![None; generation_size],
        })
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.generation_size
    }

    /// Adds a packet; returns whether it increased the rank.
    pub fn push(&mut self, packet: &CodedPacket) -> Result<bool, RlncError> {
        if packet.field() != self.field {
            return Err(RlncError::FieldMismatch {
                expected: self.field,
                got: packet.field(),
            });
        }
        if packet.coefficients().len() != self.generation_size {
            return Err(RlncError::CoefficientLength {
                expected: self.generation_size,
                got: packet.coefficients().len(),
            });
        }
        match self.packet_size {
            Some(size) if size != packet.payload().len() => {
                return Err(RlncError::PayloadLength {
                    expected: size,
                    got: packet.payload().len(),
                })
            }
            None => self.packet_size = Some(packet.payload().len()),
            _ => {}
        }
        if self.is_complete() {
            return Ok(false);
        }

        let field = self.field;
        let mut coefficients = packet.coefficients().to_vec();
        let mut payload = packet.payload().to_vec();
        for row in &self.rows {
            let c = coefficients[row.pivot];
            if c != 0 {
                field.axpy(&mut coefficients, c, &row.coefficients);
                field.axpy(&mut payload, c, &row.payload);
            }
        }

        let Some(pivot) = coefficients.iter().position(|&c| c != 0) else {
            return Ok(false);
        };
        let inv = field.inv(coefficients[pivot])?;
        for c in coefficients.iter_mut() {
            *c = field.mul(*c, inv);
        }
        field.scale_in_place(&mut payload, inv);

        for row in &mut self.rows {
            let c = row.coefficients[pivot];
            if c != 0 {
                field.axpy(&mut row.coefficients, c, &coefficients);
                field.axpy(&mut row.payload, c, &payload);
            }
        }
        self.row_for_column[pivot] = Some(self.rows.len());
        self.rows.push(Row {
            pivot,
            coefficients,
            payload,
        });
        Ok(true)
    }

    /// The decoded generation, once the rank is full.
    pub fn generation(&self) -> Option<Generation> {
        if !self.is_complete() {
            return None;
        }
        let packets = self
            .row_for_column
            .iter()
            .map(|r| self.rows[r.expect("full rank")].payload.clone())
            .collect();
        Generation::new(packets, self.field).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeOutcome {
    Decoded(Generation),
    RankDeficient { rank: usize },
}

/// Feeds `packets` in order and reports either the generation or the rank reached.
pub fn decode(packets: &[CodedPacket], generation_size: usize, field: FieldOrder) -> Result<DecodeOutcome, RlncError> {
    let mut state = DecoderState::new(generation_size, field)?;
    for packet in packets {
        state.push(packet)?;
    }
    Ok(match state.generation() {
        Some(generation) => DecodeOutcome::Decoded(generation),
        None => DecodeOutcome::RankDeficient { rank: state.rank() },
    })
}

/// Row rank of a coefficient matrix.
pub fn rank(matrix: &[Vec<u8>], field: FieldOrder) -> usize {
    let mut rows: Vec<Vec<u8>> = matrix.to_vec();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut rank = 0;
    for col in 0..cols {
        let Some(found) = (rank..rows.len()).find(|&r| rows[r].get(col).is_some_and(|&c| c != 0)) else {
            continue;
        };
        rows.swap(rank, found);
        let inv = field.inv(rows[rank][col]).expect("non-zero pivot");
        let pivot_row: Vec<u8> = rows[rank].iter().map(|&c| field.mul(c, inv)).collect();
        for row in rows.iter_mut().skip(rank + 1) {
            let c = row.get(col).copied().unwrap_or(0);
            if c != 0 {
                let n = row.len().min(pivot_row.len());
                field.axpy(&mut row[..n], c, &pivot_row[..n]);
            }
        }
        rank += 1;
    }
    rank
}
