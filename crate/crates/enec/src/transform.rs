//! Branch-free integer mapping between raw exponents and compact codes.
//!
//! The forward map is `y = (b - x) mod 2^n`: exponents near the mapping
//! parameter `b` become small codes, exponents above `b` wrap into the top
//! half of the code range via two's complement. The inverse sign-extends the
//! n-bit code and subtracts it from `b`. Both directions reduce to wrapping
//! adds, shifts and masks, so the batch forms run over whole lane arrays
//! with no per-element conditionals.

use crate::error::{Error, Result};

/// True iff `x` lies in the safe mapping window `|b - x| < 2^(n-1)`.
pub fn window_contains(b: u16, n: u8, x: u16) -> bool {
    let half = 1i32 << (n - 1);
    let diff = b as i32 - x as i32;
    -half < diff && diff < half
}

/// Map one exponent to its n-bit code.
///
/// Fails with [`Error::Window`] when `x` is outside the mapping window;
/// block encoders treat that as the signal to fall back to a raw block.
pub fn forward_map(x: u16, b: u16, n: u8) -> Result<u16> {
    debug_assert!((1..=9).contains(&n));
    if !window_contains(b, n, x) {
        return Err(Error::Window { exponent: x, b, n });
    }
    Ok(forward_map_raw(x, b, n))
}

/// The raw mapping formula, total over all inputs.
#[inline]
pub fn forward_map_raw(x: u16, b: u16, n: u8) -> u16 {
    b.wrapping_sub(x) & code_mask(n)
}

/// Recover the exponent from an n-bit code: `x = b - sext_n(y)`.
#[inline]
pub fn inverse_map(y: u16, b: u16, n: u8) -> u16 {
    debug_assert!((1..=9).contains(&n));
    debug_assert!(y <= code_mask(n));
    let shift = 16 - n as u32;
    let sext = (((y << shift) as i16) >> shift) as u16;
    b.wrapping_sub(sext)
}

/// Map a whole lane array in place. Callers must have checked the window.
pub fn forward_map_batch(lanes: &mut [u16], b: u16, n: u8) {
    let mask = code_mask(n);
    for lane in lanes {
        *lane = b.wrapping_sub(*lane) & mask;
    }
}

/// Invert a whole lane array of codes in place.
pub fn inverse_map_batch(lanes: &mut [u16], b: u16, n: u8) {
    let shift = 16 - n as u32;
    for lane in lanes {
        *lane = b.wrapping_sub((((*lane << shift) as i16) >> shift) as u16);
    }
}

#[inline]
const fn code_mask(n: u8) -> u16 {
    ((1u32 << n) - 1) as u16
}
