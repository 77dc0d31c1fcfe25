//! Binary snapshots: little-endian `u64 N, u64 M, f64 L, f64 t`, then `u`
//! and `u_t` as row-major `f64` arrays of shape `N x M`.

use std::io::{Read, Write};

use super::{FieldState, SolverError};
use crate::scalar::{lit, to_f64, Real};

pub const SNAPSHOT_HEADER_BYTES: usize = 32;

fn io_err(e: std::io::Error) -> SolverError {
    SolverError::Io(e.to_string())
}

pub fn write_snapshot<T: Real, W: Write>(mut w: W, state: &FieldState<T>, half_length: T) -> Result<(), SolverError> {
    let mut buf = Vec::with_capacity(SNAPSHOT_HEADER_BYTES + 16 * state.u().len());
    buf.extend((state.n_components() as u64).to_le_bytes());
    buf.extend((state.points() as u64).to_le_bytes());
    buf.extend(to_f64(half_length).to_le_bytes());
    buf.extend(to_f64(state.t()).to_le_bytes());
    for v in state.u().iter().chain(state.ut()) {
        buf.extend(to_f64(*v).to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err)
}

/// Returns the state and the box half-length.
pub fn read_snapshot<T: Real, R: Read>(mut r: R) -> Result<(FieldState<T>, T), SolverError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err)?;
    if bytes.len() < SNAPSHOT_HEADER_BYTES {
        return Err(SolverError::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8 bytes") };
    let n = u64::from_le_bytes(word(0)) as usize;
    let m = u64::from_le_bytes(word(1)) as usize;
    let half_length = f64::from_le_bytes(word(2));
    let t = f64::from_le_bytes(word(3));
    let expected = n
        .checked_mul(m)
        .and_then(|nm| nm.checked_mul(16))
        .and_then(|b| b.checked_add(SNAPSHOT_HEADER_BYTES))
        .ok_or_else(|| SolverError::Format(format!("implausible shape {n}x{m}")))?;
    if bytes.len() != expected {
        return Err(SolverError::Format(format!("expected {expected} bytes for {n}x{m}, found {}", bytes.len())));
    }
    let values: Vec<T> = (0..2 * n * m).map(|i| lit(f64::from_le_bytes(word(4 + i)))).collect();
    let (u, ut) = values.split_at(n * m);
    let state = FieldState::new(lit(t), n, m, u.to_vec(), ut.to_vec())?;
    Ok((state, lit(half_length)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let u: Vec<f64> = (0..8).map(|i| i as f64 * 0.5 - 1.0).collect();
        let ut: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let s = FieldState::new(3.25, 2, 4, u, ut).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s, 12.5).unwrap();
        assert_eq!(buf.len(), SNAPSHOT_HEADER_BYTES + 16 * 8);
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        let (back, l) = read_snapshot::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        assert_eq!(l, 12.5);
    }

    #[test]
    fn truncated_file_rejected() {
        let s = FieldState::<f64>::zeros(1, 4);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s, 1.0).unwrap();
        buf.pop();
        assert!(matches!(read_snapshot::<f64, _>(buf.as_slice()), Err(SolverError::Format(_))));
    }
}
