//! Byte-level encoders and decoders for the interchange formats.
//!
//! * `.fpm`: `FPM1\n<width> <height>\n` followed by `width*height` little-endian
//!   binary32 values, row-major.
//! * label PGM: `P5\n<width> <height>\n255\n` followed by one byte per point
//!   holding the raw class value 0, 1 or 2.
//! * `.fpk`: `FPK1\n<width> <height>\n` followed by little-endian `i16` fringe
//!   orders, row-major, with `i16::MIN` marking invalid points.

use crate::error::{FormatError, Result};
use crate::formats::map::{FloatMap, Mask, OrderMap};
use crate::formats::types::LabelMap;
use crate::scalar::Real;

const FPM_MAGIC: &[u8] = b"FPM1\n";
const FPK_MAGIC: &[u8] = b"FPK1\n";

/// Sentinel stored in `.fpk` files for points without a fringe order.
pub const ORDER_INVALID: i16 = i16::MIN;

fn dims_line(width: usize, height: usize) -> String {
    format!("{width} {height}\n")
}

/// Parses the `<width> <height>\n` line that follows a magic, returning the
/// dimensions and the offset of the first payload byte.
fn parse_dims_line(bytes: &[u8], start: usize) -> Result<(usize, usize, usize), FormatError> {
    let rest = &bytes[start..];
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FormatError::Header("missing dimension line".into()))?;
    let line = std::str::from_utf8(&rest[..nl])
        .map_err(|_| FormatError::Header("dimension line is not ASCII".into()))?;
    let mut parts = line.split(' ');
    let mut next = |what: &str| -> Result<usize, FormatError> {
        parts
            .next()
            .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::Header(format!("bad {what} in {line:?}")))
    };
    let width = next("width")?;
    let height = next("height")?;
    if parts.next().is_some() {
        return Err(FormatError::Header(format!("trailing fields in {line:?}")));
    }
    Ok((width, height, start + nl + 1))
}

fn expect_payload(actual: usize, expected: usize) -> Result<(), FormatError> {
    if actual != expected {
        return Err(FormatError::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// Encodes a float map as `.fpm`. Values are stored at binary32 precision.
pub fn encode_fpm<T: Real>(map: &FloatMap<T>) -> Result<Vec<u8>, FormatError> {
    let header = dims_line(map.width(), map.height());
    let mut out = Vec::with_capacity(FPM_MAGIC.len() + header.len() + 4 * map.len());
    out.extend_from_slice(FPM_MAGIC);
    out.extend_from_slice(header.as_bytes());
    for (i, v) in map.data().iter().enumerate() {
        let f = v
            .to_f32()
            .filter(|f| f.is_finite())
            .ok_or(FormatError::NonFinite(i))?;
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_fpm<T: Real>(bytes: &[u8]) -> Result<FloatMap<T>> {
    if !bytes.starts_with(FPM_MAGIC) {
        return Err(FormatError::BadMagic { expected: "FPM1" }.into());
    }
    let (width, height, offset) = parse_dims_line(bytes, FPM_MAGIC.len())?;
    let payload = &bytes[offset..];
    let n = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| FormatError::Header("dimensions overflow".into()))?;
    expect_payload(payload.len(), n)?;
    let mut data = Vec::with_capacity(width * height);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let f = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !f.is_finite() {
            return Err(FormatError::NonFinite(i).into());
        }
        data.push(T::lit(f as f64));
    }
    FloatMap::new(width, height, data)
}

pub fn encode_labelmap(labels: &LabelMap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", labels.width(), labels.height()).into_bytes();
    out.extend(labels.labels().iter().map(|&c| c as u8));
    out
}

/// Encodes raw bytes as a label PGM, rejecting values outside {0, 1, 2}.
pub fn encode_label_bytes(width: usize, height: usize, raw: &[u8]) -> Result<Vec<u8>> {
    Ok(encode_labelmap(&LabelMap::from_raw(width, height, raw)?))
}

/// Splits the PGM header into its three numeric tokens. Comments are skipped.
fn pgm_header(bytes: &[u8]) -> Result<([usize; 3], usize), FormatError> {
    if !bytes.starts_with(b"P5") {
        return Err(FormatError::BadMagic { expected: "P5" });
    }
    let mut pos = 2;
    let mut values = [0usize; 3];
    for value in values.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(FormatError::Header("truncated PGM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(FormatError::Header(
                "expected a number in PGM header".into(),
            ));
        }
        *value = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::Header("number out of range".into()))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => Ok((values, pos + 1)),
        _ => Err(FormatError::Header("missing separator after maxval".into())),
    }
}

pub fn decode_labelmap(bytes: &[u8]) -> Result<LabelMap> {
    let ([width, height, maxval], offset) = pgm_header(bytes)?;
    if maxval != 255 {
        return Err(FormatError::Header(format!("maxval {maxval}, expected 255")).into());
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| FormatError::Header("dimensions overflow".into()))?;
    expect_payload(bytes.len() - offset, n)?;
    LabelMap::from_raw(width, height, &bytes[offset..])
}

/// Encodes fringe orders as `.fpk`; invalid points are written as [`ORDER_INVALID`].
pub fn encode_orders(orders: &OrderMap) -> Result<Vec<u8>, FormatError> {
    let header = dims_line(orders.width(), orders.height());
    let mut out = Vec::with_capacity(FPK_MAGIC.len() + header.len() + 2 * orders.orders().len());
    out.extend_from_slice(FPK_MAGIC);
    out.extend_from_slice(header.as_bytes());
    for (i, &k) in orders.orders().iter().enumerate() {
        let v = if orders.validity().at(i) {
            match i16::try_from(k) {
                Ok(v) if v != ORDER_INVALID => v,
                _ => return Err(FormatError::OrderOverflow(k)),
            }
        } else {
            ORDER_INVALID
        };
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_orders(bytes: &[u8]) -> Result<OrderMap> {
    if !bytes.starts_with(FPK_MAGIC) {
        return Err(FormatError::BadMagic { expected: "FPK1" }.into());
    }
    let (width, height, offset) = parse_dims_line(bytes, FPK_MAGIC.len())?;
    let payload = &bytes[offset..];
    let n = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(2))
        .ok_or_else(|| FormatError::Header("dimensions overflow".into()))?;
    expect_payload(payload.len(), n)?;
    let mut orders = Vec::with_capacity(width * height);
    let mut valid = Vec::with_capacity(width * height);
    for chunk in payload.chunks_exact(2) {
        let v = i16::from_le_bytes([chunk[0], chunk[1]]);
        valid.push(v != ORDER_INVALID);
        orders.push(if v == ORDER_INVALID { 0 } else { v as i32 });
    }
    OrderMap::new(width, height, orders, Mask::new(width, height, valid)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::formats::types::Class;

    #[test]
    fn fpm_two_values_bit_layout() {
        let m = FloatMap::new(2, 1, vec![0.5f64, -1.0]).unwrap();
        let bytes = encode_fpm(&m).unwrap();
        let mut expected = b"FPM1\n2 1\n".to_vec();
        expected.extend_from_slice(&[0x00, 0x00, 0x00, 0x3F, 0x00, 0x00, 0x80, 0xBF]);
        assert_eq!(bytes, expected);
        assert_eq!(decode_fpm::<f64>(&bytes).unwrap(), m);
    }

    #[test]
    fn fpm_zero_payload() {
        let m = FloatMap::new(1, 1, vec![0.0f32]).unwrap();
        let bytes = encode_fpm(&m).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 0, 0, 0]);
    }

    #[test]
    fn fpm_rejects_values_overflowing_binary32() {
        let m = FloatMap::new(1, 1, vec![1e300f64]).unwrap();
        assert_eq!(encode_fpm(&m), Err(FormatError::NonFinite(0)));
    }

    #[test]
    fn fpm_decode_errors_are_distinct() {
        let good = encode_fpm(&FloatMap::new(2, 1, vec![1.0f32, 2.0]).unwrap()).unwrap();

        let truncated = &good[..good.len() - 1];
        assert!(matches!(
            decode_fpm::<f32>(truncated),
            Err(Error::Format(FormatError::LengthMismatch {
                expected: 8,
                actual: 7
            }))
        ));

        let mut bad_magic = good.clone();
        bad_magic[3] = b'X';
        assert!(matches!(
            decode_fpm::<f32>(&bad_magic),
            Err(Error::Format(FormatError::BadMagic { .. }))
        ));

        let mut nan = good.clone();
        let n = nan.len();
        nan[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            decode_fpm::<f32>(&nan),
            Err(Error::Format(FormatError::NonFinite(1)))
        ));

        let mut bad_dims = b"FPM1\n2 x\n".to_vec();
        bad_dims.extend_from_slice(&[0; 8]);
        assert!(matches!(
            decode_fpm::<f32>(&bad_dims),
            Err(Error::Format(FormatError::Header(_)))
        ));
    }

    #[test]
    fn labelmap_layout_and_errors() {
        let l = LabelMap::new(2, 1, vec![Class::Background, Class::Reliable]).unwrap();
        let bytes = encode_labelmap(&l);
        assert_eq!(bytes, b"P5\n2 1\n255\n\x00\x02".to_vec());
        assert_eq!(decode_labelmap(&bytes).unwrap(), l);

        let zeros = encode_labelmap(&LabelMap::filled(3, 3, Class::Background));
        assert_eq!(&zeros[zeros.len() - 9..], &[0u8; 9]);

        let mut invalid = bytes.clone();
        *invalid.last_mut().unwrap() = 3;
        assert!(matches!(
            decode_labelmap(&invalid),
            Err(Error::Format(FormatError::InvalidLabel {
                index: 1,
                value: 3
            }))
        ));

        let maxval = b"P5\n2 1\n15\n\x00\x02".to_vec();
        assert!(matches!(
            decode_labelmap(&maxval),
            Err(Error::Format(FormatError::Header(_)))
        ));

        assert!(encode_label_bytes(1, 1, &[7]).is_err());
    }

    #[test]
    fn labelmap_header_comments_accepted() {
        let bytes = b"P5\n# made by hand\n2 1\n255\n\x01\x02".to_vec();
        let l = decode_labelmap(&bytes).unwrap();
        assert_eq!(l.labels(), &[Class::Unreliable, Class::Reliable]);
    }

    #[test]
    fn orders_roundtrip_and_sentinel() {
        let mask = Mask::new(3, 1, vec![true, false, true]).unwrap();
        let o = OrderMap::new(3, 1, vec![-4, 0, 17], mask).unwrap();
        let bytes = encode_orders(&o).unwrap();
        assert_eq!(&bytes[..9], b"FPK1\n3 1\n");
        assert_eq!(&bytes[11..13], &ORDER_INVALID.to_le_bytes());
        assert_eq!(decode_orders(&bytes).unwrap(), o);

        let big = OrderMap::new(1, 1, vec![40_000], Mask::filled(1, 1, true)).unwrap();
        assert_eq!(encode_orders(&big), Err(FormatError::OrderOverflow(40_000)));
    }
}
