use crate::error::{Error, FormatError, Result};
use crate::formats::map::{check_dims, FloatMap, Mask};
use crate::scalar::Real;

/// N co-registered phase-shifted intensity frames of one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeStack<T> {
    frames: Vec<FloatMap<T>>,
}

impl<T: Real> FringeStack<T> {
    pub fn new(frames: Vec<FloatMap<T>>) -> Result<Self> {
        if frames.len() < 3 {
            return Err(Error::TooFewSteps(frames.len()));
        }
        let (w, h) = (frames[0].width(), frames[0].height());
        for f in &frames[1..] {
            check_dims(w, h, f.width(), f.height())?;
        }
        Ok(Self { frames })
    }

    pub fn n_steps(&self) -> usize {
        self.frames.len()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn frames(&self) -> &[FloatMap<T>] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<FloatMap<T>> {
        self.frames
    }

    /// Applies `f` to every frame.
    pub fn map_frames(&self, f: impl FnMut(&FloatMap<T>) -> FloatMap<T>) -> Result<Self> {
        Self::new(self.frames.iter().map(f).collect())
    }
}

/// Three-class point label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Class {
    Background = 0,
    Unreliable = 1,
    Reliable = 2,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::Background, Class::Unreliable, Class::Reliable];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<u8> for Class {
    type Error = u8;

    fn try_from(v: u8) -> std::result::Result<Self, u8> {
        match v {
            0 => Ok(Class::Background),
            1 => Ok(Class::Unreliable),
            2 => Ok(Class::Reliable),
            other => Err(other),
        }
    }
}

/// Per-point classification map.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<Class>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<Class>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::BadLength {
                width,
                height,
                actual: labels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, class: Class) -> Self {
        Self {
            width,
            height,
            labels: vec![class; width * height],
        }
    }

    /// Builds a map from raw bytes, rejecting anything outside {0, 1, 2}.
    pub fn from_raw(width: usize, height: usize, raw: &[u8]) -> Result<Self> {
        let labels = raw
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                Class::try_from(value).map_err(|_| FormatError::InvalidLabel { index, value })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(width, height, labels)
    }

    /// Validity mask as a label map: 2 where valid, 0 elsewhere.
    pub fn from_validity(mask: &Mask) -> Self {
        Self {
            width: mask.width(),
            height: mask.height(),
            labels: mask
                .bits()
                .iter()
                .map(|&b| {
                    if b {
                        Class::Reliable
                    } else {
                        Class::Background
                    }
                })
                .collect(),
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

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Class {
        self.labels[row * self.width + col]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Class {
        self.labels[idx]
    }

    pub fn count(&self, class: Class) -> usize {
        self.labels.iter().filter(|&&c| c == class).count()
    }
}

/// Three-channel composite of normalized phase, modulation and background intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct PmiImage<T> {
    phase: FloatMap<T>,
    modulation: FloatMap<T>,
    intensity: FloatMap<T>,
}

impl<T: Real> PmiImage<T> {
    pub fn new(
        phase: FloatMap<T>,
        modulation: FloatMap<T>,
        intensity: FloatMap<T>,
    ) -> Result<Self> {
        phase.check_same_dims(&modulation)?;
        phase.check_same_dims(&intensity)?;
        for channel in [&phase, &modulation, &intensity] {
            if channel
                .data()
                .iter()
                .any(|&v| v < T::zero() || v > T::one())
            {
                return Err(Error::InvalidParameter(
                    "PMI channel value outside [0, 1]".into(),
                ));
            }
        }
        Ok(Self {
            phase,
            modulation,
            intensity,
        })
    }

    pub fn phase(&self) -> &FloatMap<T> {
        &self.phase
    }

    pub fn modulation(&self) -> &FloatMap<T> {
        &self.modulation
    }

    pub fn intensity(&self) -> &FloatMap<T> {
        &self.intensity
    }

    pub fn width(&self) -> usize {
        self.phase.width()
    }

    pub fn height(&self) -> usize {
        self.phase.height()
    }
}
