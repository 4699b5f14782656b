//! Binary frame encoding.
//!
//! Little-endian layout, 16-byte header then the codes:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `RSWT`                  |
//! | 4      | 1    | version (1)                   |
//! | 5      | 1    | rows                          |
//! | 6      | 1    | cols                          |
//! | 7      | 1    | reserved (0)                  |
//! | 8      | 8    | `t_start_us` as u64           |
//! | 16     | 2·n  | `rows*cols` u16 codes, row-major |

use crossknit_core::{Frame, Grid};
use std::io::{Read, Write};

pub const MAGIC: [u8; 4] = *b"RSWT";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported wire version {0}")]
    UnsupportedVersion(u8),
    #[error("frame of {rows}x{cols} does not fit the u8 header fields")]
    TooLarge { rows: usize, cols: usize },
    #[error("empty frame dimensions")]
    Empty,
    #[error("truncated frame: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn encoded_len(rows: usize, cols: usize) -> usize {
    HEADER_LEN + 2 * rows * cols
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, WireError> {
    let (rows, cols) = (frame.rows(), frame.cols());
    if rows > u8::MAX as usize || cols > u8::MAX as usize {
        return Err(WireError::TooLarge { rows, cols });
    }
    let mut out = Vec::with_capacity(encoded_len(rows, cols));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[VERSION, rows as u8, cols as u8, 0]);
    out.extend_from_slice(&(frame.t_start_us.max(0.0).round() as u64).to_le_bytes());
    for &c in frame.counts.as_slice() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    Ok(out)
}

/// Decodes one frame from the front of `bytes`, returning it and the number
/// of bytes consumed.
pub fn decode_frame(bytes: &[u8]) -> Result<(Frame, usize), WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated {
            need: HEADER_LEN,
            have: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    if bytes[4] != VERSION {
        return Err(WireError::UnsupportedVersion(bytes[4]));
    }
    let (rows, cols) = (bytes[5] as usize, bytes[6] as usize);
    if rows == 0 || cols == 0 {
        return Err(WireError::Empty);
    }
    let need = encoded_len(rows, cols);
    if bytes.len() < need {
        return Err(WireError::Truncated {
            need,
            have: bytes.len(),
        });
    }
    let t_start_us = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let codes = bytes[HEADER_LEN..need]
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    let counts = Grid::from_vec(rows, cols, codes).expect("length checked");
    Ok((Frame::new(t_start_us as f64, counts), need))
}

pub fn write_frames<W: Write>(frames: &[Frame], mut out: W) -> Result<(), WireError> {
    for f in frames {
        out.write_all(&encode_frame(f)?)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads back-to-back frames until end of input.
pub fn read_frames<R: Read>(mut input: R) -> Result<Vec<Frame>, WireError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut frames = Vec::new();
    let mut at = 0;
    while at < bytes.len() {
        let (f, used) = decode_frame(&bytes[at..])?;
        frames.push(f);
        at += used;
    }
    Ok(frames)
}
