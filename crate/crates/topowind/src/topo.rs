//! Discrete winding number of a circle-valued sequence.
//!
//! For φ_i = re_i + i·im_i sampled on a closed loop, the winding number is
//! the net number of revolutions of the phase: the sum over consecutive
//! sites of the principal argument of φ_{i+1}/φ_i, divided by 2π. The
//! principal-increment sum is exact whenever every true step is smaller than
//! a half turn, which is the standard lattice definition of the degree of a
//! map S¹ → S¹.

use thiserror::Error;

/// Moduli below this leave the phase numerically undefined.
pub const MIN_MODULUS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TopoError {
    #[error("phase undefined at site {site}: modulus {modulus:.3e} < 1e-9")]
    VanishingModulus { site: usize, modulus: f64 },
    #[error("winding needs at least 2 sites, got {0}")]
    TooShort(usize),
    #[error("re has {re} sites but im has {im}")]
    LengthMismatch { re: usize, im: usize },
}

/// Winding measurement: the integer count and the pre-rounding real value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    /// Nearest integer to `raw` (ties round away from zero).
    pub n: i64,
    /// (1/2π) Σ Δ_i before rounding; exactly integral for closed loops.
    pub raw: f64,
}

fn check(re: &[f64], im: &[f64]) -> Result<(), TopoError> {
    if re.len() != im.len() {
        return Err(TopoError::LengthMismatch { re: re.len(), im: im.len() });
    }
    if re.len() < 2 {
        return Err(TopoError::TooShort(re.len()));
    }
    for (i, (&r, &m)) in re.iter().zip(im).enumerate() {
        let modulus = r.hypot(m);
        if modulus < MIN_MODULUS {
            return Err(TopoError::VanishingModulus { site: i + 1, modulus });
        }
    }
    Ok(())
}

/// Principal argument of φ_b/φ_a in (−π, π].
///
/// Computed as arg(φ_b · conj(φ_a)), which has the same argument as the
/// quotient without a division. atan2 returns −π only for a negative real
/// with negative-zero imaginary part; that edge is folded onto +π so the
/// branch is closed above.
fn principal_step(re_a: f64, im_a: f64, re_b: f64, im_b: f64) -> f64 {
    let re = re_b * re_a + im_b * im_a;
    let im = im_b * re_a - re_b * im_a;
    let d = im.atan2(re);
    if d == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        d
    }
}

/// Measures the winding number of the sequence.
///
/// Sums the principal phase increments over sites 1..L−1; the loop is closed
/// by the data's own boundary (site L equals site 1 for periodic inputs).
/// Errors if any site's modulus is below [`MIN_MODULUS`].
pub fn winding_number(re: &[f64], im: &[f64]) -> Result<Winding, TopoError> {
    check(re, im)?;
    let mut total = 0.0;
    for i in 0..re.len() - 1 {
        total += principal_step(re[i], im[i], re[i + 1], im[i + 1]);
    }
    let raw = total / (2.0 * std::f64::consts::PI);
    Ok(Winding { n: raw.round() as i64, raw })
}

/// Distance of the pre-rounding winding value from the nearest integer.
///
/// Near-half values flag sequences whose discrete winding is marginal
/// (some step close to ±π, or an unclosed loop).
pub fn winding_residual(re: &[f64], im: &[f64]) -> Result<f64, TopoError> {
    let w = winding_number(re, im)?;
    Ok((w.raw - w.raw.round()).abs())
}
