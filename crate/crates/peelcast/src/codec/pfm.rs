//! Portable Float Map codec, grayscale ("Pf") only.
//!
//! Layout: three header lines (`Pf`, `<width> <height>`, `<scale>`) followed
//! by raw 32-bit floats, rows bottom-up per the PFM convention. This crate
//! always writes scale -1.0 (little-endian); big-endian files (positive
//! scale) are rejected rather than silently mis-read.

use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Writes a grayscale PFM; `data` is row-major, top row first.
pub fn write_pfm(path: &Path, width: u32, height: u32, data: &[f32]) -> Result<()> {
    if data.len() != (width as usize) * (height as usize) {
        return Err(Error::shape(format!(
            "PFM buffer has {} values, expected {}x{}",
            data.len(),
            width,
            height
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "Pf\n{width} {height}\n-1.0\n").map_err(io)?;
    let stride = width as usize;
    for row in (0..height as usize).rev() {
        let mut bytes = Vec::with_capacity(stride * 4);
        for &v in &data[row * stride..(row + 1) * stride] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a grayscale PFM written by [`write_pfm`] (or any little-endian
/// single-channel PFM). Returns `(width, height, row-major top-down data)`.
pub fn read_pfm(path: &Path) -> Result<(u32, u32, Vec<f32>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let magic = read_token(&mut r, path)?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => {
            return Err(Error::decode(
                path,
                "color PFM (PF) not supported; expected grayscale Pf",
            ))
        }
        other => {
            return Err(Error::decode(
                path,
                format!("not a PFM file (magic {other:?})"),
            ))
        }
    }

    let width: u32 = parse_token(&mut r, path, "width")?;
    let height: u32 = parse_token(&mut r, path, "height")?;
    let scale: f32 = parse_token(&mut r, path, "scale")?;
    if scale >= 0.0 {
        return Err(Error::decode(
            path,
            format!("big-endian PFM (scale {scale}) is not supported"),
        ));
    }

    let count = (width as usize) * (height as usize);
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::decode(path, format!("truncated pixel data: {e}")))?;

    let mut data = vec![0f32; count];
    let stride = width as usize;
    for (bottom_row, chunk) in bytes.chunks_exact(stride * 4).enumerate() {
        let row = height as usize - 1 - bottom_row;
        for (i, b) in chunk.chunks_exact(4).enumerate() {
            data[row * stride + i] = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        }
    }
    Ok((width, height, data))
}

/// Reads one whitespace-delimited header token.
fn read_token(r: &mut impl Read, path: &Path) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match r.read(&mut byte) {
            Ok(0) => break,
            Ok(_) => {
                if byte[0].is_ascii_whitespace() {
                    if token.is_empty() {
                        continue; // leading whitespace
                    }
                    break;
                }
                token.push(byte[0]);
                if token.len() > 64 {
                    return Err(Error::decode(path, "header token too long"));
                }
            }
            Err(e) => return Err(Error::io(path, e)),
        }
    }
    if token.is_empty() {
        return Err(Error::decode(path, "unexpected end of header"));
    }
    String::from_utf8(token).map_err(|_| Error::decode(path, "non-UTF-8 header"))
}

fn parse_token<T: std::str::FromStr>(r: &mut impl Read, path: &Path, what: &str) -> Result<T> {
    let tok = read_token(r, path)?;
    tok.parse()
        .map_err(|_| Error::decode(path, format!("bad {what}: {tok:?}")))
}
