//! In-memory containers and the bit-exact interchange formats.

mod codec;
mod map;
mod types;

pub use codec::{
    decode_fpm, decode_labelmap, decode_orders, encode_fpm, encode_label_bytes, encode_labelmap,
    encode_orders, ORDER_INVALID,
};
pub(crate) use map::check_dims;
pub use map::{FloatMap, Mask, OrderMap};
pub use types::{Class, FringeStack, LabelMap, PmiImage};
