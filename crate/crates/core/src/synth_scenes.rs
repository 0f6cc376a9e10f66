//! Deterministic synthetic scenes: ground-truth phase, reflectivity, shadows,
//! labels and degraded fringe stacks.
//!
//! A scene spec is a small TOML document; [`generate_scene`] renders it and
//! [`scene_suite`] draws seeded families of specs per scene category.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{Class, FloatMap, FringeStack, LabelMap, Mask, OrderMap};
use crate::phase_decode::{decode_modulation, synthesize_fringes, wrap_with_turns};
use crate::scalar::Real;
use crate::unwrap_temporal::{graycode_from_phase, FringeDirection, GraycodeSet};

/// Modulation at or below which a point is background.
pub const BACKGROUND_MODULATION: f64 = 2.0;
/// Predicted phase noise above which a point is unreliable.
pub const PHASE_NOISE_LIMIT: f64 = PI / 4.0;
/// Neighbor phase jump treated as a surface discontinuity.
pub const JUMP_THRESHOLD: f64 = PI / 2.0;
/// Depth of the reference plane; surface relief is added in phase units.
pub const DEPTH_BASE: f64 = 100.0;

fn default_steps() -> usize {
    4
}
fn default_direction() -> FringeDirection {
    FringeDirection::Vertical
}
fn default_background() -> f64 {
    128.0
}
fn default_modulation() -> f64 {
    100.0
}

/// Surface relief added to the carrier, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Primitive {
    /// `row_slope * row + col_slope * col + offset`.
    Plane {
        row_slope: f64,
        col_slope: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Gaussian bump centred at `(row, col)`.
    Bump {
        row: f64,
        col: f64,
        sigma: f64,
        height: f64,
    },
    /// Adds `height` on the side of the line through `(row, col)` that the
    /// unit normal `(cos angle, sin angle)` (col, row components) points to.
    Step {
        row: f64,
        col: f64,
        angle: f64,
        height: f64,
    },
}

impl Primitive {
    fn eval(&self, row: f64, col: f64) -> f64 {
        match *self {
            Primitive::Plane {
                row_slope,
                col_slope,
                offset,
            } => row_slope * row + col_slope * col + offset,
            Primitive::Bump {
                row: r0,
                col: c0,
                sigma,
                height,
            } => {
                let d2 = (row - r0).powi(2) + (col - c0).powi(2);
                height * (-d2 / (2.0 * sigma * sigma)).exp()
            }
            Primitive::Step {
                row: r0,
                col: c0,
                angle,
                height,
            } => {
                if (col - c0) * angle.cos() + (row - r0) * angle.sin() > 0.0 {
                    height
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Primitive::Plane {
                row_slope,
                col_slope,
                offset,
            } => [row_slope, col_slope, offset].iter().all(|v| v.is_finite()),
            Primitive::Bump {
                row,
                col,
                sigma,
                height,
            } => [row, col, sigma, height].iter().all(|v| v.is_finite()) && sigma > 0.0,
            Primitive::Step {
                row,
                col,
                angle,
                height,
            } => [row, col, angle, height].iter().all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("bad primitive {self:?}")))
        }
    }
}

/// Rectangle `[row0, row1) x [col0, col1)` with reduced reflectivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityPatch {
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
    pub factor: f64,
}

impl ReflectivityPatch {
    fn contains(&self, row: usize, col: usize) -> bool {
        (self.row0..self.row1).contains(&row) && (self.col0..self.col1).contains(&col)
    }

    fn overlaps(&self, other: &ReflectivityPatch) -> bool {
        self.row0 < other.row1
            && other.row0 < self.row1
            && self.col0 < other.col1
            && other.col0 < self.col1
    }
}

/// Closed polygon in pixel coordinates `[col, row]`, filled with the
/// even-odd rule at pixel centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowPolygon {
    pub vertices: Vec<[f64; 2]>,
}

impl ShadowPolygon {
    pub fn rectangle(row0: f64, col0: f64, row1: f64, col1: f64) -> Self {
        ShadowPolygon {
            vertices: vec![[col0, row0], [col1, row0], [col1, row1], [col0, row1]],
        }
    }

    fn contains(&self, row: f64, col: f64) -> bool {
        let v = &self.vertices;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (xi, yi) = (v[i][0], v[i][1]);
            let (xj, yj) = (v[j][0], v[j][1]);
            if (yi > row) != (yj > row) && col < (xj - xi) * (row - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlurDirection {
    Horizontal,
    Vertical,
}

/// Normalized box kernel applied along one axis of every frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blur {
    pub length: usize,
    pub direction: BlurDirection,
}

/// Kind of degradation present in a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Degradation {
    LowReflectivity,
    MotionBlur,
    Discontinuity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Carrier fringe count across the image.
    pub fringes: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_direction")]
    pub direction: FringeDirection,
    #[serde(default)]
    pub primitives: Vec<Primitive>,
    #[serde(default)]
    pub reflectivity: Vec<ReflectivityPatch>,
    #[serde(default)]
    pub shadows: Vec<ShadowPolygon>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub blur: Option<Blur>,
    /// Background level `I'_0`.
    #[serde(default = "default_background")]
    pub background: f64,
    /// Modulation level `I''_0`.
    #[serde(default = "default_modulation")]
    pub modulation: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    /// Flat carrier-only scene with default levels and no degradations.
    pub fn flat(width: usize, height: usize, fringes: f64) -> Self {
        SceneSpec {
            width,
            height,
            fringes,
            n_steps: default_steps(),
            direction: default_direction(),
            primitives: Vec::new(),
            reflectivity: Vec::new(),
            shadows: Vec::new(),
            noise_sigma: 0.0,
            blur: None,
            background: default_background(),
            modulation: default_modulation(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!(
                "dims {}x{} must be positive",
                self.width, self.height
            ));
        }
        if !(self.fringes >= 1.0 && self.fringes.is_finite()) {
            return bad(format!("fringe count {} must be >= 1", self.fringes));
        }
        if self.n_steps < 3 {
            return bad(format!("n_steps {} must be >= 3", self.n_steps));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {} must be >= 0", self.noise_sigma));
        }
        if let Some(b) = &self.blur {
            if b.length < 1 {
                return bad("blur length must be >= 1".into());
            }
        }
        if !(self.background.is_finite() && self.background >= 0.0) {
            return bad(format!("background {} must be >= 0", self.background));
        }
        if !(self.modulation.is_finite() && self.modulation > 0.0) {
            return bad(format!("modulation {} must be > 0", self.modulation));
        }
        for p in &self.primitives {
            p.validate()?;
        }
        for (i, p) in self.reflectivity.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.factor) {
                return bad(format!("reflectivity factor {} outside [0, 1]", p.factor));
            }
            if p.row0 >= p.row1 || p.col0 >= p.col1 {
                return bad(format!("empty reflectivity patch {p:?}"));
            }
            for q in &self.reflectivity[..i] {
                if p.overlaps(q) && p.factor != q.factor {
                    return bad(format!(
                        "overlapping patches with factors {} and {}",
                        q.factor, p.factor
                    ));
                }
            }
        }
        for s in &self.shadows {
            if s.vertices.len() < 3 || s.vertices.iter().flatten().any(|v| !v.is_finite()) {
                return bad("shadow polygons need >= 3 finite vertices".into());
            }
        }
        Ok(())
    }

    pub fn degradations(&self) -> Vec<Degradation> {
        let mut out = Vec::new();
        if self.reflectivity.iter().any(|p| p.factor < 0.5) {
            out.push(Degradation::LowReflectivity);
        }
        if self.blur.as_ref().is_some_and(|b| b.length > 1) {
            out.push(Degradation::MotionBlur);
        }
        if self
            .primitives
            .iter()
            .any(|p| matches!(p, Primitive::Step { height, .. } if height.abs() >= JUMP_THRESHOLD))
        {
            out.push(Degradation::Discontinuity);
        }
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene specs always serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SceneSpec =
            toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    fn relief(&self, row: usize, col: usize) -> f64 {
        self.primitives
            .iter()
            .map(|p| p.eval(row as f64, col as f64))
            .sum()
    }

    fn carrier(&self, row: usize, col: usize) -> f64 {
        let (x, extent) = match self.direction {
            FringeDirection::Vertical => (col, self.width),
            FringeDirection::Horizontal => (row, self.height),
        };
        TAU * self.fringes * (x as f64 + 0.5) / extent as f64 - PI
    }

    fn reflectivity_at(&self, row: usize, col: usize) -> f64 {
        self.reflectivity
            .iter()
            .find(|p| p.contains(row, col))
            .map_or(1.0, |p| p.factor)
    }

    fn lit(&self, row: usize, col: usize) -> bool {
        !self
            .shadows
            .iter()
            .any(|s| s.contains(row as f64, col as f64))
    }
}

/// Everything rendered for one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTruth<T> {
    pub spec: SceneSpec,
    pub phi_gt: FloatMap<T>,
    pub k_gt: OrderMap,
    pub labels: LabelMap,
    /// Reference depth, invalid (0) in shadows.
    pub depth_gt: FloatMap<T>,
    /// Degraded fringe stack.
    pub stack: FringeStack<T>,
    /// Fringe stack before blur and noise.
    pub clean_stack: FringeStack<T>,
    pub graycode: GraycodeSet<T>,
    pub background_gt: FloatMap<T>,
    pub modulation_gt: FloatMap<T>,
}

fn box_blur(data: &[f64], w: usize, h: usize, blur: &Blur) -> Vec<f64> {
    let len = blur.length as isize;
    let start = -(len / 2);
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut out = vec![0.0; data.len()];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for o in start..start + len {
                let (rr, cc) = match blur.direction {
                    BlurDirection::Horizontal => (r, clamp(c as isize + o, w)),
                    BlurDirection::Vertical => (clamp(r as isize + o, h), c),
                };
                acc += data[rr * w + cc];
            }
            out[r * w + c] = acc / len as f64;
        }
    }
    out
}

/// Chebyshev dilation of `seeds` by `radius`.
fn dilate(seeds: &[bool], w: usize, h: usize, radius: usize) -> Vec<bool> {
    let mut out = vec![false; seeds.len()];
    for r in 0..h {
        for c in 0..w {
            if !seeds[r * w + c] {
                continue;
            }
            for rr in r.saturating_sub(radius)..(r + radius + 1).min(h) {
                for cc in c.saturating_sub(radius)..(c + radius + 1).min(w) {
                    out[rr * w + cc] = true;
                }
            }
        }
    }
    out
}

fn to_map<T: Real>(w: usize, h: usize, data: &[f64]) -> Result<FloatMap<T>> {
    FloatMap::new(w, h, data.iter().map(|&v| T::lit(v)).collect())
}

/// Renders a scene. Deterministic for a given spec.
pub fn generate_scene<T: Real>(spec: &SceneSpec) -> Result<SceneTruth<T>> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let n = w * h;
    let idx = |i: usize| (i / w, i % w);

    let relief: Vec<f64> = (0..n).map(|i| spec.relief(idx(i).0, idx(i).1)).collect();
    let mut phi: Vec<f64> = (0..n)
        .map(|i| spec.carrier(idx(i).0, idx(i).1) + relief[i])
        .collect();
    // Shift by whole turns so projector coordinates stay non-negative.
    let u = |p: f64| (p + PI) / TAU;
    let u_min = phi.iter().copied().map(u).fold(f64::INFINITY, f64::min);
    if u_min < 0.0 {
        let shift = TAU * (-u_min).ceil();
        phi.iter_mut().for_each(|p| *p += shift);
    }
    let u_max = phi.iter().copied().map(u).fold(f64::NEG_INFINITY, f64::max);
    let num_fringes = (u_max.floor() as usize + 1).max(1);

    let lit: Vec<bool> = (0..n).map(|i| spec.lit(idx(i).0, idx(i).1)).collect();
    let rho: Vec<f64> = (0..n)
        .map(|i| spec.reflectivity_at(idx(i).0, idx(i).1))
        .collect();
    let modulation: Vec<f64> = (0..n)
        .map(|i| {
            if lit[i] {
                spec.modulation * rho[i]
            } else {
                0.0
            }
        })
        .collect();
    // Ambient light plus the reflected share of the projector's mean level.
    let background: Vec<f64> = (0..n)
        .map(|i| spec.background * (0.25 + 0.75 * if lit[i] { rho[i] } else { 0.0 }))
        .collect();

    let phi_gt = to_map::<f64>(w, h, &phi)?;
    let bg_map = to_map::<f64>(w, h, &background)?;
    let mod_map = to_map::<f64>(w, h, &modulation)?;
    let clean = synthesize_fringes(&phi_gt, &bg_map, &mod_map, spec.n_steps)?;
    let code = graycode_from_phase(&phi_gt, num_fringes, &bg_map, &mod_map)?;

    let blurred = |frame: &FloatMap<f64>| match &spec.blur {
        Some(b) if b.length > 1 => box_blur(frame.data(), w, h, b),
        _ => frame.data().to_vec(),
    };
    let blurred_frames: Vec<Vec<f64>> = clean.frames().iter().map(blurred).collect();
    let blurred_codes: Vec<Vec<f64>> = code.images().iter().map(blurred).collect();
    let blurred_stack = FringeStack::new(
        blurred_frames
            .iter()
            .map(|f| to_map::<f64>(w, h, f))
            .collect::<Result<_>>()?,
    )?;
    let effective_modulation = decode_modulation(&blurred_stack);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal =
        Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut noisy = |f: &[f64]| -> Vec<f64> {
        if spec.noise_sigma == 0.0 {
            f.to_vec()
        } else {
            f.iter().map(|&v| v + normal.sample(&mut rng)).collect()
        }
    };
    let frames: Vec<Vec<f64>> = blurred_frames.iter().map(|f| noisy(f)).collect();
    let codes: Vec<Vec<f64>> = blurred_codes.iter().map(|f| noisy(f)).collect();

    let stack64 = FringeStack::new(
        frames
            .iter()
            .map(|f| to_map::<f64>(w, h, f))
            .collect::<Result<_>>()?,
    )?;
    let degraded_modulation = decode_modulation(&stack64);

    // Labels.
    let mut jump = vec![false; n];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            for j in [(c + 1 < w).then(|| i + 1), (r + 1 < h).then(|| i + w)]
                .into_iter()
                .flatten()
            {
                if (phi[i] - phi[j]).abs() >= JUMP_THRESHOLD {
                    jump[i] = true;
                    jump[j] = true;
                }
            }
        }
    }
    let band = spec.blur.as_ref().map_or(1, |b| b.length.max(1));
    let near_jump = dilate(&jump, w, h, band);
    let sqrt_n = (spec.n_steps as f64).sqrt();
    let labels: Vec<Class> = (0..n)
        .map(|i| {
            if !lit[i] || degraded_modulation.at(i) <= BACKGROUND_MODULATION {
                return Class::Background;
            }
            let m = effective_modulation.at(i);
            let sigma_phi = if m > 0.0 {
                std::f64::consts::SQRT_2 * spec.noise_sigma / (m * sqrt_n)
            } else {
                f64::INFINITY
            };
            if sigma_phi > PHASE_NOISE_LIMIT || near_jump[i] {
                Class::Unreliable
            } else {
                Class::Reliable
            }
        })
        .collect();

    let orders: Vec<i32> = phi.iter().map(|&p| wrap_with_turns(p).1 as i32).collect();
    let k_gt = OrderMap::new(w, h, orders, Mask::filled(w, h, true))?;
    let lit_mask = Mask::new(w, h, lit.clone())?;
    let depth: Vec<f64> = (0..n)
        .map(|i| if lit[i] { DEPTH_BASE + relief[i] } else { 0.0 })
        .collect();

    let cast = |m: &FloatMap<f64>| m.cast::<T>();
    let code_maps: Vec<FloatMap<T>> = codes
        .iter()
        .map(|f| to_map::<T>(w, h, f))
        .collect::<Result<_>>()?;
    Ok(SceneTruth {
        spec: spec.clone(),
        phi_gt: to_map(w, h, &phi)?,
        k_gt,
        labels: LabelMap::new(w, h, labels)?,
        depth_gt: to_map::<T>(w, h, &depth)?.with_validity(lit_mask)?,
        stack: FringeStack::new(
            frames
                .iter()
                .map(|f| to_map::<T>(w, h, f))
                .collect::<Result<_>>()?,
        )?,
        clean_stack: FringeStack::new(clean.frames().iter().map(cast).collect())?,
        graycode: GraycodeSet::new(num_fringes, code_maps, cast(&bg_map))?,
        background_gt: cast(&bg_map),
        modulation_gt: cast(&mod_map),
    })
}

/// Scene categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Simple,
    Reflectivity,
    Blur,
    Discontinuity,
    Complex,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Simple,
        Suite::Reflectivity,
        Suite::Blur,
        Suite::Discontinuity,
        Suite::Complex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Simple => "simple",
            Suite::Reflectivity => "reflectivity",
            Suite::Blur => "blur",
            Suite::Discontinuity => "discontinuity",
            Suite::Complex => "complex",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

/// Smooth relief whose 4-neighbor phase steps stay well under the jump threshold.
fn smooth_relief(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<Primitive> {
    let mut out = vec![Primitive::Plane {
        row_slope: rng.random_range(-0.08..0.08),
        col_slope: rng.random_range(-0.08..0.08),
        offset: 0.0,
    }];
    let scale = w.min(h) as f64 / 256.0;
    for _ in 0..rng.random_range(0..=3) {
        let sigma = rng.random_range(15.0..40.0) * scale.max(0.25);
        // Peak gradient is |height| / (sigma sqrt(e)).
        let max_height = 0.3 * sigma * std::f64::consts::E.sqrt();
        out.push(Primitive::Bump {
            row: rng.random_range(0.0..h as f64),
            col: rng.random_range(0.0..w as f64),
            sigma,
            height: rng.random_range(-max_height..max_height),
        });
    }
    out
}

fn reflectivity_patches(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<ReflectivityPatch> {
    let mut out: Vec<ReflectivityPatch> = Vec::new();
    let factor = rng.random_range(0.02..0.08);
    for _ in 0..rng.random_range(1..=3) {
        let ph = rng.random_range(h / 8..=h / 3).max(2);
        let pw = rng.random_range(w / 8..=w / 3).max(2);
        let row0 = rng.random_range(0..=h - ph);
        let col0 = rng.random_range(0..=w - pw);
        out.push(ReflectivityPatch {
            row0,
            col0,
            row1: row0 + ph,
            col1: col0 + pw,
            factor,
        });
    }
    out
}

fn steps(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<Primitive> {
    (0..rng.random_range(1..=2))
        .map(|_| {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            Primitive::Step {
                row: rng.random_range(h as f64 * 0.25..h as f64 * 0.75),
                col: rng.random_range(w as f64 * 0.25..w as f64 * 0.75),
                angle: rng.random_range(0.0..TAU),
                height: sign * rng.random_range(PI..3.0 * PI),
            }
        })
        .collect()
}

fn shadow(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ShadowPolygon {
    let (cr, cc) = (
        rng.random_range(0.0..h as f64),
        rng.random_range(0.0..w as f64),
    );
    let radius = rng.random_range(0.05..0.15) * w.min(h) as f64;
    let vertices = (0..rng.random_range(3..=6))
        .map(|k| {
            let a = TAU * k as f64 / 6.0 + rng.random_range(0.0..0.5);
            let r = radius * rng.random_range(0.6..1.0);
            [cc + r * a.cos(), cr + r * a.sin()]
        })
        .collect();
    ShadowPolygon { vertices }
}

fn blur(rng: &mut ChaCha8Rng) -> Blur {
    Blur {
        length: rng.random_range(5..=15),
        direction: if rng.random_bool(0.5) {
            BlurDirection::Horizontal
        } else {
            BlurDirection::Vertical
        },
    }
}

fn draw_spec(suite: Suite, seed: u64, w: usize, h: usize) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = SceneSpec::flat(w, h, rng.random_range(8.0..20.0_f64).round());
    spec.seed = rng.next_u64();
    spec.primitives = smooth_relief(&mut rng, w, h);
    if suite == Suite::Simple {
        return spec;
    }
    spec.modulation = 50.0;
    spec.noise_sigma = rng.random_range(1.5..3.5);
    let kinds: Vec<Degradation> = match suite {
        Suite::Simple => unreachable!(),
        Suite::Reflectivity => vec![Degradation::LowReflectivity],
        Suite::Blur => vec![Degradation::MotionBlur],
        Suite::Discontinuity => vec![Degradation::Discontinuity],
        Suite::Complex => {
            let all = [
                Degradation::LowReflectivity,
                Degradation::MotionBlur,
                Degradation::Discontinuity,
            ];
            let skip = rng.random_range(0..4);
            all.into_iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, d)| d)
                .collect()
        }
    };
    for kind in kinds {
        match kind {
            Degradation::LowReflectivity => {
                spec.reflectivity = reflectivity_patches(&mut rng, w, h)
            }
            Degradation::MotionBlur => spec.blur = Some(blur(&mut rng)),
            Degradation::Discontinuity => {
                spec.primitives.extend(steps(&mut rng, w, h));
            }
        }
    }
    if rng.random_bool(0.5) {
        spec.shadows.push(shadow(&mut rng, w, h));
    }
    spec
}

/// Seeded family of `count` specs of the given category at `width x height`.
pub fn scene_suite_sized(
    suite: Suite,
    count: usize,
    master_seed: u64,
    width: usize,
    height: usize,
) -> Result<Vec<SceneSpec>> {
    if count == 0 {
        return Err(Error::InvalidParameter("suite count must be >= 1".into()));
    }
    if width < 16 || height < 16 {
        return Err(Error::InvalidParameter(format!(
            "suite scenes need >= 16x16, got {width}x{height}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    Ok((0..count)
        .map(|_| draw_spec(suite, rng.next_u64(), width, height))
        .collect())
}

/// Seeded family of `count` 256x256 specs of the named category.
pub fn scene_suite(name: &str, count: usize, master_seed: u64) -> Result<Vec<SceneSpec>> {
    scene_suite_sized(name.parse()?, count, master_seed, 256, 256)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_decode::{decode_wrapped, wrap};

    #[test]
    fn flat_scene_is_clean() {
        let t = generate_scene::<f64>(&SceneSpec::flat(64, 32, 8.0)).unwrap();
        assert_eq!(t.labels.count(Class::Reliable), 64 * 32);
        let phi = decode_wrapped(&t.stack);
        for i in 0..phi.len() {
            let want = wrap(t.phi_gt.at(i)).unwrap();
            let d = wrap(phi.at(i) - want).unwrap();
            assert!(d.abs() < 1e-9, "{i}: {d}");
        }
        assert_eq!(t.stack, t.clean_stack);
        assert_eq!(t.graycode.num_fringes(), 8);
    }

    #[test]
    fn orders_reconstruct_truth() {
        let mut spec = SceneSpec::flat(48, 40, 10.0);
        spec.primitives.push(Primitive::Bump {
            row: 20.0,
            col: 20.0,
            sigma: 8.0,
            height: -9.0,
        });
        let t = generate_scene::<f64>(&spec).unwrap();
        for i in 0..t.phi_gt.len() {
            let phi = t.phi_gt.at(i);
            let back = wrap(phi).unwrap() + TAU * t.k_gt.at(i) as f64;
            assert!((back - phi).abs() < 1e-9);
            assert!(phi >= -PI);
        }
    }

    #[test]
    fn shadow_is_background() {
        let mut spec = SceneSpec::flat(32, 32, 4.0);
        spec.shadows
            .push(ShadowPolygon::rectangle(8.0, 8.0, 16.5, 20.5));
        spec.noise_sigma = 1.0;
        spec.seed = 3;
        let t = generate_scene::<f64>(&spec).unwrap();
        assert_eq!(t.modulation_gt.get(10, 10), 0.0);
        assert_eq!(t.labels.get(10, 10), Class::Background);
        assert_eq!(t.labels.get(16, 20), Class::Background);
        assert_eq!(t.labels.get(17, 10), Class::Reliable);
        assert_eq!(t.labels.count(Class::Background), 9 * 13);
        assert!(!t.depth_gt.is_valid(10 * 32 + 10));
        assert_eq!(t.depth_gt.get(10, 10), 0.0);
    }

    #[test]
    fn low_reflectivity_patch_is_unreliable() {
        let mut spec = SceneSpec::flat(64, 64, 8.0);
        spec.modulation = 50.0;
        spec.noise_sigma = 2.78;
        spec.reflectivity.push(ReflectivityPatch {
            row0: 16,
            col0: 16,
            row1: 48,
            col1: 48,
            factor: 0.05,
        });
        let t = generate_scene::<f64>(&spec).unwrap();
        let patch = (16..48).flat_map(|r| (16..48).map(move |c| (r, c)));
        assert!(patch
            .clone()
            .all(|(r, c)| t.labels.get(r, c) != Class::Reliable));
        assert!(patch
            .clone()
            .any(|(r, c)| t.labels.get(r, c) == Class::Unreliable));
        assert_eq!(t.labels.get(2, 2), Class::Reliable);
    }

    #[test]
    fn phase_noise_formula_matches_monte_carlo() {
        // sigma_phi = sqrt(2) sigma / (I'' sqrt(N)) at high SNR.
        let (bmod, sigma, n) = (50.0, 3.0, 4usize);
        let mut spec = SceneSpec::flat(128, 128, 8.0);
        spec.modulation = bmod;
        spec.noise_sigma = sigma;
        spec.n_steps = n;
        spec.seed = 11;
        let t = generate_scene::<f64>(&spec).unwrap();
        let phi = decode_wrapped(&t.stack);
        let errs: Vec<f64> = (0..phi.len())
            .map(|i| wrap(phi.at(i) - t.phi_gt.at(i)).unwrap())
            .collect();
        let rms = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        let predicted = 2f64.sqrt() * sigma / (bmod * (n as f64).sqrt());
        assert!((rms / predicted - 1.0).abs() < 0.05, "{rms} vs {predicted}");
    }

    #[test]
    fn step_band_follows_blur_length() {
        let mut spec = SceneSpec::flat(64, 32, 4.0);
        spec.primitives.push(Primitive::Step {
            row: 0.0,
            col: 31.5,
            angle: 0.0,
            height: 4.0,
        });
        let t = generate_scene::<f64>(&spec).unwrap();
        let row: Vec<Class> = (0..64).map(|c| t.labels.get(5, c)).collect();
        assert_eq!(row[29], Class::Reliable);
        assert!(row[30..34].iter().all(|&c| c == Class::Unreliable));
        assert_eq!(row[34], Class::Reliable);
        spec.blur = Some(Blur {
            length: 5,
            direction: BlurDirection::Horizontal,
        });
        let t = generate_scene::<f64>(&spec).unwrap();
        assert_eq!(t.labels.get(5, 26), Class::Unreliable);
        assert_eq!(t.labels.get(5, 25), Class::Reliable);
    }

    #[test]
    fn contradictory_patches_rejected() {
        let mut spec = SceneSpec::flat(16, 16, 2.0);
        let patch = |f| ReflectivityPatch {
            row0: 0,
            col0: 0,
            row1: 8,
            col1: 8,
            factor: f,
        };
        spec.reflectivity = vec![patch(0.1), patch(0.1)];
        assert!(spec.validate().is_ok());
        spec.reflectivity = vec![patch(0.1), patch(0.2)];
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
        let mut bad = SceneSpec::flat(16, 16, 0.5);
        assert!(bad.validate().is_err());
        bad.fringes = 2.0;
        bad.blur = Some(Blur {
            length: 0,
            direction: BlurDirection::Vertical,
        });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let specs = scene_suite_sized(Suite::Complex, 3, 5, 64, 64).unwrap();
        for s in specs {
            assert_eq!(SceneSpec::from_toml(&s.to_toml()).unwrap(), s);
        }
        let minimal = "width = 8\nheight = 4\nfringes = 2.0\n";
        let s = SceneSpec::from_toml(minimal).unwrap();
        assert_eq!(s.n_steps, 4);
        assert_eq!(s.direction, FringeDirection::Vertical);
    }

    #[test]
    fn suites() {
        let a = scene_suite("simple", 3, 7).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a
            .iter()
            .all(|s| s.degradations().is_empty() && s.noise_sigma == 0.0));
        assert_eq!(a, scene_suite("simple", 3, 7).unwrap());
        let c = scene_suite_sized(Suite::Complex, 20, 1, 64, 64).unwrap();
        assert!(c.iter().all(|s| s.degradations().len() >= 2));
        assert!(matches!(
            scene_suite("nope", 1, 0),
            Err(Error::UnknownSuite(_))
        ));
        assert!(scene_suite("simple", 0, 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = &scene_suite_sized(Suite::Complex, 1, 9, 48, 48).unwrap()[0];
        let a = generate_scene::<f64>(spec).unwrap();
        let b = generate_scene::<f64>(spec).unwrap();
        assert_eq!(a, b);
    }
}
