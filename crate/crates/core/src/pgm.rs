//! Minimal binary PGM (P5) writer for field slices.
//!
//! PGM keeps image export dependency-free and byte-stable for golden tests.
//! Slice intensity is `round(255 * value)`; file rows advance along the
//! slice's slow axis (for a z-slice, top-to-bottom in +y).

use crate::field::FieldSlice;

/// Encode an 8-bit grayscale image as binary PGM. Comment lines are embedded
/// after the magic, one `#` line each.
pub fn encode(width: usize, height: usize, pixels: &[u8], comments: &[String]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel buffer size mismatch");
    let mut out = Vec::with_capacity(pixels.len() + 64);
    out.extend_from_slice(b"P5\n");
    for c in comments {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    out.extend_from_slice(format!("{width} {height}\n255\n").as_bytes());
    out.extend_from_slice(pixels);
    out
}

/// Render a field slice as PGM bytes.
pub fn slice_to_pgm(slice: &FieldSlice, comments: &[String]) -> Vec<u8> {
    let pixels: Vec<u8> = slice
        .values
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    encode(slice.dims[0], slice.dims[1], &pixels, comments)
}
