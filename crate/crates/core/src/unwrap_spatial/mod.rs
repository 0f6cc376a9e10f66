//! Spatial phase unwrapping over a validity mask.
//!
//! Three unwrappers share one result type:
//! * [`flood_fill_unwrap`]: breadth-first from a seed at the middle of each
//!   region's column-major point sequence;
//! * [`modu_sort_unwrap`]: quality-guided, highest modulation first;
//! * [`fspu_unwrap`]: reliability-sorted edges merged along a noncontinuous
//!   path, reliability from second differences.
//!
//! All of them track integer fringe orders and only form the continuous phase
//! `phi + 2 pi k` at the end, so `Phi - phi` is an exact multiple of `2 pi`
//! up to a single rounding.

mod flood;
mod fspu;
mod modu;

pub use flood::{flood_fill_unwrap, select_seed};
pub use fspu::{fspu_unwrap, second_difference_reliability, FSPU_EPSILON};
pub use modu::modu_sort_unwrap;

use crate::error::Result;
use crate::formats::{check_dims, FloatMap, Mask, OrderMap};
use crate::masking::RegionDecomposition;
use crate::phase_decode::wrap_with_turns;
use crate::scalar::Real;

/// Output of every spatial unwrapper.
#[derive(Debug, Clone, PartialEq)]
pub struct UnwrapResult<T> {
    /// Continuous phase; 0 and invalid outside the mask.
    pub phase: FloatMap<T>,
    /// Fringe order `k` with `phase = phi + 2 pi k` at valid points.
    pub orders: OrderMap,
    pub regions: RegionDecomposition,
    /// `(row, col)` of each region's anchor, indexed by `region id - 1`.
    pub seeds: Vec<(usize, usize)>,
}

/// Which spatial unwrapper to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    FloodFill,
    ModuSort,
    Fspu,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::FloodFill, Method::ModuSort, Method::Fspu];

    pub fn name(self) -> &'static str {
        match self {
            Method::FloodFill => "flood",
            Method::ModuSort => "modu",
            Method::Fspu => "fspu",
        }
    }
}

/// Dispatches to the selected unwrapper. `quality` is required by MODU-sort
/// and ignored otherwise.
pub fn unwrap_with<T: Real>(
    method: Method,
    phi: &FloatMap<T>,
    mask: &Mask,
    quality: &FloatMap<T>,
) -> Result<UnwrapResult<T>> {
    match method {
        Method::FloodFill => flood_fill_unwrap(phi, mask),
        Method::ModuSort => modu_sort_unwrap(phi, quality, mask),
        Method::Fspu => fspu_unwrap(phi, mask),
    }
}

/// The mask actually unwrapped: caller's mask restricted to decodable phase.
fn effective_mask<T: Real>(phi: &FloatMap<T>, mask: &Mask) -> Result<Mask> {
    check_dims(phi.width(), phi.height(), mask.width(), mask.height())?;
    match phi.validity() {
        Some(v) => mask.and(v),
        None => Ok(mask.clone()),
    }
}

/// Order step when moving from `from` to `to`: `k_to = k_from - turns`, which
/// makes `Phi_to - Phi_from = wrap(phi_to - phi_from)`.
#[inline]
fn turns<T: Real>(phi_to: T, phi_from: T) -> i64 {
    wrap_with_turns(phi_to - phi_from).1
}

fn assemble<T: Real>(
    phi: &FloatMap<T>,
    mask: Mask,
    regions: RegionDecomposition,
    orders: Vec<i64>,
    seeds: Vec<usize>,
) -> Result<UnwrapResult<T>> {
    let (w, h) = (phi.width(), phi.height());
    let tau = T::two_pi();
    let data = phi
        .data()
        .iter()
        .zip(&orders)
        .enumerate()
        .map(|(i, (&p, &k))| {
            if mask.at(i) {
                p + tau * T::lit(k as f64)
            } else {
                T::zero()
            }
        })
        .collect();
    let phase = FloatMap::new(w, h, data)?.with_validity(mask.clone())?;
    let orders = orders
        .iter()
        .enumerate()
        .map(|(i, &k)| if mask.at(i) { k as i32 } else { 0 })
        .collect();
    Ok(UnwrapResult {
        phase,
        orders: OrderMap::new(w, h, orders, mask)?,
        regions,
        seeds: seeds.into_iter().map(|s| (s / w, s % w)).collect(),
    })
}
