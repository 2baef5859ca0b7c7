//! Minimal `.dex` reader: header, string table, and type table only.
//!
//! Network detection on raw packages needs the type descriptors and
//! nothing else, so this reader stops at the `type_ids` section instead
//! of modeling the full format. Only little-endian images are supported.

use std::fmt;

const HEADER_SIZE: usize = 0x70;
const ENDIAN_CONSTANT: u32 = 0x1234_5678;
const REVERSE_ENDIAN_CONSTANT: u32 = 0x7856_3412;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DexError {
    TooShort { len: usize },
    BadMagic,
    ReverseEndianUnsupported,
    BadEndianTag(u32),
    OutOfBounds { what: &'static str, offset: usize },
    BadStringIndex { type_idx: usize, string_idx: usize },
    BadUleb128 { offset: usize },
    UnterminatedString { offset: usize },
}

impl fmt::Display for DexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DexError::TooShort { len } => {
                write!(f, "file too short for a dex header ({len} bytes)")
            }
            DexError::BadMagic => write!(f, "missing dex magic"),
            DexError::ReverseEndianUnsupported => {
                write!(f, "byte-swapped dex files are not supported")
            }
            DexError::BadEndianTag(tag) => write!(f, "unrecognized endian tag {tag:#010x}"),
            DexError::OutOfBounds { what, offset } => {
                write!(f, "{what} at offset {offset} is out of bounds")
            }
            DexError::BadStringIndex { type_idx, string_idx } => {
                write!(f, "type {type_idx} references invalid string {string_idx}")
            }
            DexError::BadUleb128 { offset } => write!(f, "bad uleb128 at offset {offset}"),
            DexError::UnterminatedString { offset } => {
                write!(f, "unterminated string data at offset {offset}")
            }
        }
    }
}

impl std::error::Error for DexError {}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32, DexError> {
    let end = offset.checked_add(4).ok_or(DexError::OutOfBounds {
        what: "u32",
        offset,
    })?;
    let slice = bytes.get(offset..end).ok_or(DexError::OutOfBounds {
        what: "u32",
        offset,
    })?;
    Ok(u32::from_le_bytes(slice.try_into().unwrap()))
}

fn read_uleb128(bytes: &[u8], offset: &mut usize) -> Result<u32, DexError> {
    let start = *offset;
    let mut result: u32 = 0;
    for i in 0..5 {
        let byte = *bytes.get(*offset).ok_or(DexError::BadUleb128 { offset: start })?;
        *offset += 1;
        result |= u32::from(byte & 0x7f) << (7 * i);
        if byte & 0x80 == 0 {
            return Ok(result);
        }
    }
    Err(DexError::BadUleb128 { offset: start })
}

/// Reads every type descriptor (e.g. `Lcom/mopub/mobileads/MoPubView;`)
/// out of a dex image. String payloads are decoded leniently: MUTF-8 and
/// UTF-8 agree on the ASCII range that descriptors use, and anything
/// outside it is replaced rather than rejected.
pub fn type_descriptors(bytes: &[u8]) -> Result<Vec<String>, DexError> {
    if bytes.len() < HEADER_SIZE {
        return Err(DexError::TooShort { len: bytes.len() });
    }
    if &bytes[0..4] != b"dex\n" || bytes[7] != 0 {
        return Err(DexError::BadMagic);
    }
    match read_u32(bytes, 0x28)? {
        ENDIAN_CONSTANT => {}
        REVERSE_ENDIAN_CONSTANT => return Err(DexError::ReverseEndianUnsupported),
        tag => return Err(DexError::BadEndianTag(tag)),
    }

    let string_ids_size = read_u32(bytes, 0x38)? as usize;
    let string_ids_off = read_u32(bytes, 0x3c)? as usize;
    let type_ids_size = read_u32(bytes, 0x40)? as usize;
    let type_ids_off = read_u32(bytes, 0x44)? as usize;

    let mut descriptors = Vec::with_capacity(type_ids_size);
    for type_idx in 0..type_ids_size {
        let string_idx = read_u32(bytes, type_ids_off + 4 * type_idx)? as usize;
        if string_idx >= string_ids_size {
            return Err(DexError::BadStringIndex { type_idx, string_idx });
        }
        let mut data_off = read_u32(bytes, string_ids_off + 4 * string_idx)? as usize;
        // The leading uleb128 is the utf16 length; the byte payload is
        // NUL-terminated.
        read_uleb128(bytes, &mut data_off)?;
        let rest = bytes.get(data_off..).ok_or(DexError::OutOfBounds {
            what: "string data",
            offset: data_off,
        })?;
        let end = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or(DexError::UnterminatedString { offset: data_off })?;
        descriptors.push(String::from_utf8_lossy(&rest[..end]).into_owned());
    }
    Ok(descriptors)
}

/// Assembles a minimal little-endian dex image whose type table holds
/// exactly `descriptors`. The image carries no code, checksum, or
/// signature; it exists so fixtures and tests can exercise the raw-dex
/// scanning path without real packages.
pub fn assemble_type_table(descriptors: &[&str]) -> Vec<u8> {
    let mut data = Vec::new();
    let mut string_offsets = Vec::with_capacity(descriptors.len());
    let data_base = HEADER_SIZE + 8 * descriptors.len();
    for desc in descriptors {
        string_offsets.push((data_base + data.len()) as u32);
        let utf16_len = desc.encode_utf16().count() as u32;
        let mut len = utf16_len;
        loop {
            let byte = (len & 0x7f) as u8;
            len >>= 7;
            if len == 0 {
                data.push(byte);
                break;
            }
            data.push(byte | 0x80);
        }
        data.extend_from_slice(desc.as_bytes());
        data.push(0);
    }

    let file_size = (data_base + data.len()) as u32;
    let mut out = Vec::with_capacity(file_size as usize);
    out.extend_from_slice(b"dex\n035\0");
    out.extend_from_slice(&[0u8; 4]); // checksum, unverified
    out.extend_from_slice(&[0u8; 20]); // sha-1 signature, unverified
    out.extend_from_slice(&file_size.to_le_bytes());
    out.extend_from_slice(&(HEADER_SIZE as u32).to_le_bytes());
    out.extend_from_slice(&ENDIAN_CONSTANT.to_le_bytes());
    out.extend_from_slice(&[0u8; 8]); // link_size, link_off
    out.extend_from_slice(&[0u8; 4]); // map_off
    out.extend_from_slice(&(descriptors.len() as u32).to_le_bytes());
    out.extend_from_slice(&(HEADER_SIZE as u32).to_le_bytes());
    out.extend_from_slice(&(descriptors.len() as u32).to_le_bytes());
    out.extend_from_slice(&((HEADER_SIZE + 4 * descriptors.len()) as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 32]); // proto, field, method ids; class defs
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(&(data_base as u32).to_le_bytes());
    debug_assert_eq!(out.len(), HEADER_SIZE);

    for off in &string_offsets {
        out.extend_from_slice(&off.to_le_bytes());
    }
    for i in 0..descriptors.len() as u32 {
        out.extend_from_slice(&i.to_le_bytes());
    }
    out.extend_from_slice(&data);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_type_descriptors() {
        let descriptors = [
            "Lcom/example/Main;",
            "Lcom/mopub/mobileads/MoPubView;",
            "Ljava/lang/Object;",
        ];
        let image = assemble_type_table(&descriptors);
        let parsed = type_descriptors(&image).unwrap();
        assert_eq!(parsed, descriptors);
    }

    #[test]
    fn parsed_strings_match_raw_byte_scan() {
        // Independent check: the descriptor must exist verbatim in the
        // raw image bytes.
        let needle = "Lcom/mopub/mobileads/MoPubView;";
        let image = assemble_type_table(&["Lcom/example/A;", needle]);
        let haystack = image
            .windows(needle.len())
            .any(|w| w == needle.as_bytes());
        assert!(haystack);
        assert!(type_descriptors(&image).unwrap().contains(&needle.to_string()));
    }

    #[test]
    fn rejects_truncated_and_corrupt_headers() {
        assert!(matches!(
            type_descriptors(&[0u8; 16]),
            Err(DexError::TooShort { .. })
        ));
        let mut image = assemble_type_table(&["Lx;"]);
        image[0] = b'x';
        assert!(matches!(type_descriptors(&image), Err(DexError::BadMagic)));
    }

    #[test]
    fn rejects_bad_endian_tag() {
        let mut image = assemble_type_table(&["Lx;"]);
        image[0x28..0x2c].copy_from_slice(&0xdead_beefu32.to_le_bytes());
        assert!(matches!(
            type_descriptors(&image),
            Err(DexError::BadEndianTag(_))
        ));
        image[0x28..0x2c].copy_from_slice(&REVERSE_ENDIAN_CONSTANT.to_le_bytes());
        assert!(matches!(
            type_descriptors(&image),
            Err(DexError::ReverseEndianUnsupported)
        ));
    }

    #[test]
    fn rejects_out_of_range_string_index() {
        let mut image = assemble_type_table(&["Lx;"]);
        // type table begins after one 4-byte string id
        let type_off = HEADER_SIZE + 4;
        image[type_off..type_off + 4].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            type_descriptors(&image),
            Err(DexError::BadStringIndex { .. })
        ));
    }

    #[test]
    fn empty_type_table_is_valid() {
        let image = assemble_type_table(&[]);
        assert!(type_descriptors(&image).unwrap().is_empty());
    }
}
