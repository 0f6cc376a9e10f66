//! Complementary Gray-code temporal unwrapping, used to produce ground-truth
//! fringe orders.
//!
//! With wrapped phase in `(-pi, pi]`, fringe `k` covers continuous phase
//! `(2 pi k - pi, 2 pi k + pi]`. Writing `u = (Phi + pi) / 2 pi` for the
//! projector coordinate in fringe units, the `n` Gray patterns encode
//! `floor(u)` and the complementary pattern is the least significant bit of
//! the Gray code of `floor(2 u)`, whose edges fall mid-fringe. Decoding picks
//! the order from the complementary code near fringe edges and from the plain
//! code in the middle band, which removes order errors at fringe boundaries.

use crate::error::{Error, Result};
use crate::formats::{check_dims, FloatMap, Mask, OrderMap};
use crate::scalar::Real;

/// Axis along which the fringe index varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FringeDirection {
    /// Vertical fringes: the index grows along columns.
    Vertical,
    /// Horizontal fringes: the index grows along rows.
    Horizontal,
}

/// Gray-code images plus the per-pixel binarization reference.
#[derive(Debug, Clone, PartialEq)]
pub struct GraycodeSet<T> {
    n_bits: usize,
    num_fringes: usize,
    /// `n_bits` Gray images, most significant first, then the complementary one.
    images: Vec<FloatMap<T>>,
    threshold: FloatMap<T>,
}

/// Bits needed so that `2^bits >= num_fringes`.
pub fn bits_for(num_fringes: usize) -> usize {
    num_fringes.max(1).next_power_of_two().trailing_zeros() as usize
}

#[inline]
pub fn gray_encode(i: u32) -> u32 {
    i ^ (i >> 1)
}

#[inline]
pub fn gray_decode(mut g: u32) -> u32 {
    let mut b = 0;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}

impl<T: Real> GraycodeSet<T> {
    pub fn new(
        num_fringes: usize,
        images: Vec<FloatMap<T>>,
        threshold: FloatMap<T>,
    ) -> Result<Self> {
        if num_fringes == 0 {
            return Err(Error::InvalidParameter("fringe count must be >= 1".into()));
        }
        let n_bits = bits_for(num_fringes);
        if images.len() != n_bits + 1 {
            return Err(Error::InvalidParameter(format!(
                "{num_fringes} fringes need {} code images, got {}",
                n_bits + 1,
                images.len()
            )));
        }
        for im in &images {
            threshold.check_same_dims(im)?;
        }
        Ok(Self {
            n_bits,
            num_fringes,
            images,
            threshold,
        })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn num_fringes(&self) -> usize {
        self.num_fringes
    }

    pub fn images(&self) -> &[FloatMap<T>] {
        &self.images
    }

    pub fn threshold(&self) -> &FloatMap<T> {
        &self.threshold
    }

    /// Replaces the binarization reference, e.g. with the decoded background.
    pub fn with_threshold(self, threshold: FloatMap<T>) -> Result<Self> {
        Self::new(self.num_fringes, self.images, threshold)
    }

    pub fn width(&self) -> usize {
        self.threshold.width()
    }

    pub fn height(&self) -> usize {
        self.threshold.height()
    }
}

/// Code bits at projector coordinate `u` (fringe units): the `n_bits` Gray
/// bits of `floor(u)` (most significant first) and the complementary bit.
pub fn code_bits(u: f64, n_bits: usize) -> (u32, bool) {
    let k = u.floor().max(0.0) as u32;
    let half = (2.0 * u).floor().max(0.0) as u32;
    (
        gray_encode(k) & ((1u32 << n_bits) - 1),
        gray_encode(half) & 1 == 1,
    )
}

/// Renders code images for a known continuous-phase map. Bright code
/// points take `background + modulation`, dark ones `background - modulation`,
/// and the background is the binarization reference.
pub fn graycode_from_phase<T: Real>(
    phi: &FloatMap<T>,
    num_fringes: usize,
    background: &FloatMap<T>,
    modulation: &FloatMap<T>,
) -> Result<GraycodeSet<T>> {
    phi.check_same_dims(background)?;
    phi.check_same_dims(modulation)?;
    let n_bits = bits_for(num_fringes);
    let tau = std::f64::consts::TAU;
    let codes: Vec<(u32, bool)> = phi
        .data()
        .iter()
        .map(|p| code_bits((p.as_f64() + std::f64::consts::PI) / tau, n_bits))
        .collect();
    let render = |bit: &dyn Fn(usize) -> bool| {
        let data = (0..phi.len())
            .map(|i| {
                let (a, b) = (background.at(i), modulation.at(i));
                if bit(i) {
                    a + b
                } else {
                    a - b
                }
            })
            .collect();
        FloatMap::new(phi.width(), phi.height(), data)
    };
    let mut images = Vec::with_capacity(n_bits + 1);
    for b in 0..n_bits {
        let shift = n_bits - 1 - b;
        images.push(render(&|i| (codes[i].0 >> shift) & 1 == 1)?);
    }
    images.push(render(&|i| codes[i].1)?);
    GraycodeSet::new(num_fringes, images, background.clone())
}

/// Flat-field code patterns for `num_fringes` fringes across the image.
///
/// Images are 0/1 with a constant 0.5 reference. The fringe index at pixel
/// centre `x` along the fringe axis is `floor(num_fringes * (x + 0.5) / extent)`,
/// matching the carrier `2 pi num_fringes (x + 0.5) / extent - pi`.
pub fn synthesize_graycode<T: Real>(
    num_fringes: usize,
    width: usize,
    height: usize,
    direction: FringeDirection,
) -> Result<GraycodeSet<T>> {
    let phi = linear_carrier::<T>(num_fringes as f64, width, height, direction);
    let half = FloatMap::filled(width, height, T::lit(0.5));
    graycode_from_phase(&phi, num_fringes, &half, &half)
}

/// `2 pi fringes (x + 0.5) / extent - pi` along the fringe axis.
pub fn linear_carrier<T: Real>(
    fringes: f64,
    width: usize,
    height: usize,
    direction: FringeDirection,
) -> FloatMap<T> {
    let tau = std::f64::consts::TAU;
    FloatMap::from_fn(width, height, |r, c| {
        let (x, extent) = match direction {
            FringeDirection::Vertical => (c, width),
            FringeDirection::Horizontal => (r, height),
        };
        T::lit(tau * fringes * (x as f64 + 0.5) / extent as f64 - std::f64::consts::PI)
    })
}

/// Fringe orders from binarized codes and the wrapped phase.
///
/// `k1` is the plain Gray decode; `k2` decodes the codes plus complementary bit
/// as one `(n + 1)`-bit Gray number and `k2' = floor((k2 + 1) / 2)`. The order
/// is `k2'` for `phi < -pi/2`, `k2' - 1` for `phi >= pi/2` and `k1` otherwise.
/// Orders outside `[0, num_fringes)` are invalid.
pub fn decode_fringe_order<T: Real>(set: &GraycodeSet<T>, phi: &FloatMap<T>) -> Result<OrderMap> {
    check_dims(set.width(), set.height(), phi.width(), phi.height())?;
    let n = set.n_bits;
    let half_pi = T::FRAC_PI_2();
    let mut orders = Vec::with_capacity(phi.len());
    let mut valid = Vec::with_capacity(phi.len());
    for i in 0..phi.len() {
        let reference = set.threshold.at(i);
        let mut gray = 0u32;
        for im in &set.images[..n] {
            gray = (gray << 1) | (im.at(i) > reference) as u32;
        }
        let comp = (set.images[n].at(i) > reference) as u32;
        let k1 = gray_decode(gray);
        let k2 = gray_decode((gray << 1) | comp);
        let k2p = ((k2 + 1) / 2) as i64;
        let p = phi.at(i);
        let k = if p < -half_pi {
            k2p
        } else if p >= half_pi {
            k2p - 1
        } else {
            k1 as i64
        };
        let ok = phi.is_valid(i) && k >= 0 && k < set.num_fringes as i64;
        valid.push(ok);
        orders.push(if ok { k as i32 } else { 0 });
    }
    OrderMap::new(
        phi.width(),
        phi.height(),
        orders,
        Mask::new(phi.width(), phi.height(), valid)?,
    )
}

/// `Phi = phi + 2 pi k` at points valid in both inputs.
pub fn tpu_unwrap<T: Real>(phi: &FloatMap<T>, orders: &OrderMap) -> Result<FloatMap<T>> {
    check_dims(phi.width(), phi.height(), orders.width(), orders.height())?;
    let tau = T::two_pi();
    let valid = phi.valid_mask().and(orders.validity())?;
    let data = phi
        .data()
        .iter()
        .zip(orders.orders())
        .map(|(&p, &k)| p + tau * T::lit(k as f64))
        .collect();
    FloatMap::new(phi.width(), phi.height(), data)?.with_validity(valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gray_helpers() {
        assert_eq!(gray_decode(0b0110), 4);
        assert_eq!(gray_decode(0), 0);
        for i in 0..64 {
            assert_eq!(gray_decode(gray_encode(i)), i);
            // Adjacent codes differ in one bit.
            assert_eq!((gray_encode(i) ^ gray_encode(i + 1)).count_ones(), 1);
        }
        assert_eq!(bits_for(16), 4);
        assert_eq!(bits_for(17), 5);
        assert_eq!(bits_for(1), 0);
    }

    #[test]
    fn sixteen_fringes_give_five_images() {
        let set = synthesize_graycode::<f64>(16, 64, 4, FringeDirection::Vertical).unwrap();
        assert_eq!(set.n_bits(), 4);
        assert_eq!(set.images().len(), 5);
        // Fringe 0 occupies columns 0..4: all Gray bits dark.
        for im in &set.images()[..4] {
            for c in 0..4 {
                assert_eq!(im.get(0, c), 0.0);
            }
        }
    }

    #[test]
    fn code_images_follow_reflected_gray_sequence() {
        let set = synthesize_graycode::<f64>(16, 64, 1, FringeDirection::Vertical).unwrap();
        for fringe in 0..16u32 {
            let col = fringe as usize * 4 + 1;
            let mut code = 0;
            for im in &set.images()[..4] {
                code = (code << 1) | (im.get(0, col) > 0.5) as u32;
            }
            assert_eq!(code, fringe ^ (fringe >> 1));
        }
    }

    #[test]
    fn flat_decode_is_exact() {
        let (w, h) = (256, 8);
        let set = synthesize_graycode::<f64>(16, w, h, FringeDirection::Vertical).unwrap();
        let carrier = linear_carrier::<f64>(16.0, w, h, FringeDirection::Vertical);
        let phi = carrier.map(crate::phase_decode::wrap_angle);
        let k = decode_fringe_order(&set, &phi).unwrap();
        for r in 0..h {
            for c in 0..w {
                assert_eq!(k.get(r, c), (c / 16) as i32);
            }
        }
        let unwrapped = tpu_unwrap(&phi, &k).unwrap();
        for i in 0..phi.len() {
            assert!((unwrapped.at(i) - carrier.at(i)).abs() < 1e-9);
        }
    }

    #[test]
    fn horizontal_direction() {
        let set = synthesize_graycode::<f64>(8, 4, 64, FringeDirection::Horizontal).unwrap();
        let carrier = linear_carrier::<f64>(8.0, 4, 64, FringeDirection::Horizontal);
        let phi = carrier.map(crate::phase_decode::wrap_angle);
        let k = decode_fringe_order(&set, &phi).unwrap();
        assert_eq!(k.get(63, 2), 7);
        assert_eq!(k.get(9, 0), 1);
    }

    #[test]
    fn zero_codes_zero_phase() {
        let zero = FloatMap::filled(1, 1, 0.0f64);
        let half = FloatMap::filled(1, 1, 0.5f64);
        let set = GraycodeSet::new(16, vec![zero.clone(); 5], half).unwrap();
        let k = decode_fringe_order(&set, &zero).unwrap();
        assert_eq!(k.at(0), 0);
        assert!(k.validity().at(0));
    }

    #[test]
    fn out_of_range_order_is_invalid() {
        // Codes of fringe 0 with phase in the last quarter would give order -1.
        let zero = FloatMap::filled(1, 1, 0.0f64);
        let half = FloatMap::filled(1, 1, 0.5f64);
        let set = GraycodeSet::new(16, vec![zero; 5], half).unwrap();
        let phi = FloatMap::filled(1, 1, 3.0f64);
        let k = decode_fringe_order(&set, &phi).unwrap();
        assert!(!k.validity().at(0));
    }

    #[test]
    fn tpu_examples() {
        let phi = FloatMap::filled(1, 1, 1.0f64);
        let k = OrderMap::new(1, 1, vec![3], Mask::filled(1, 1, true)).unwrap();
        let out = tpu_unwrap(&phi, &k).unwrap();
        assert!((out.at(0) - (1.0 + 6.0 * PI)).abs() < 1e-12);
        assert!((out.at(0) - 19.84956).abs() < 1e-5);
        let k0 = OrderMap::new(1, 1, vec![0], Mask::filled(1, 1, true)).unwrap();
        assert_eq!(tpu_unwrap(&phi, &k0).unwrap().at(0), 1.0);
    }

    #[test]
    fn rejects_wrong_image_count() {
        let z = FloatMap::filled(1, 1, 0.0f64);
        assert!(GraycodeSet::new(16, vec![z.clone(); 4], z).is_err());
    }
}
