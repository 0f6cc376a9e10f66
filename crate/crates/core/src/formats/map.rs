use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-point boolean raster, row-major, top-left origin. `true` means valid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::BadLength {
                width,
                height,
                actual: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, value: bool) {
        self.bits[idx] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_dims(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }

    /// Pointwise conjunction.
    pub fn and(&self, other: &Mask) -> Result<Mask> {
        check_dims(self.width, self.height, other.width, other.height)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a && b)
            .collect();
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    /// True when every `true` point of `self` is also `true` in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.same_dims(other.width, other.height)
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

pub(crate) fn check_dims(w0: usize, h0: usize, w1: usize, h1: usize) -> Result<()> {
    if w0 != w1 || h0 != h1 {
        return Err(Error::DimensionMismatch(format!("{w0}x{h0} vs {w1}x{h1}")));
    }
    Ok(())
}

/// Single-channel real raster with optional validity.
///
/// Values are row-major with the origin at the top-left. Every stored value is
/// finite; invalid points conventionally hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
    validity: Option<Mask>,
}

impl<T: Real> FloatMap<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BadLength {
                width,
                height,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            width,
            height,
            data,
            validity: None,
        })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        debug_assert!(value.is_finite());
        Self {
            width,
            height,
            data: vec![value; width * height],
            validity: None,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, T::zero())
    }

    /// Builds a map from `f(row, col)`. The closure must return finite values.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                let v = f(row, col);
                debug_assert!(v.is_finite(), "non-finite value at ({row}, {col})");
                data.push(v);
            }
        }
        Self {
            width,
            height,
            data,
            validity: None,
        }
    }

    /// Attaches a validity mask; invalid points are reset to zero.
    pub fn with_validity(mut self, mask: Mask) -> Result<Self> {
        check_dims(self.width, self.height, mask.width, mask.height)?;
        for (v, &ok) in self.data.iter_mut().zip(mask.bits()) {
            if !ok {
                *v = T::zero();
            }
        }
        self.validity = Some(mask);
        Ok(self)
    }

    pub fn without_validity(mut self) -> Self {
        self.validity = None;
        self
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> T {
        self.data[idx]
    }

    pub fn validity(&self) -> Option<&Mask> {
        self.validity.as_ref()
    }

    #[inline]
    pub fn is_valid(&self, idx: usize) -> bool {
        self.validity.as_ref().map_or(true, |m| m.at(idx))
    }

    /// The validity mask, all-true when none is attached.
    pub fn valid_mask(&self) -> Mask {
        self.validity
            .clone()
            .unwrap_or_else(|| Mask::filled(self.width, self.height, true))
    }

    pub fn valid_count(&self) -> usize {
        self.validity.as_ref().map_or(self.len(), Mask::count)
    }

    pub fn same_dims<U>(&self, other: &FloatMap<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_dims<U>(&self, other: &FloatMap<U>) -> Result<()> {
        check_dims(self.width, self.height, other.width, other.height)
    }

    /// Applies `f` to every value, keeping validity.
    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
            validity: self.validity.clone(),
        }
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> FloatMap<U> {
        FloatMap {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
            validity: self.validity.clone(),
        }
    }
}

/// Integer fringe-order raster with validity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderMap {
    width: usize,
    height: usize,
    orders: Vec<i32>,
    validity: Mask,
}

impl OrderMap {
    pub fn new(width: usize, height: usize, orders: Vec<i32>, validity: Mask) -> Result<Self> {
        if orders.len() != width * height {
            return Err(Error::BadLength {
                width,
                height,
                actual: orders.len(),
            });
        }
        check_dims(width, height, validity.width(), validity.height())?;
        Ok(Self {
            width,
            height,
            orders,
            validity,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn orders(&self) -> &[i32] {
        &self.orders
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.orders[row * self.width + col]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> i32 {
        self.orders[idx]
    }

    pub fn validity(&self) -> &Mask {
        &self.validity
    }
}
