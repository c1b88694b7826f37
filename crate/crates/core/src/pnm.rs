//! Binary Netpbm I/O: PGM (`P5`) and PPM (`P6`), maxval 255 only.
//!
//! Samples load as `p / 255` and save as `round(clamp(v, 0, 1) * 255)`, so an
//! in-range image survives a save/load cycle within `1 / 510` per pixel.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, PnmError, Result};
use crate::image::{ColorImage, GrayImage};

/// A decoded Netpbm file of either flavour.
#[derive(Debug, Clone, PartialEq)]
pub enum Pnm {
    Gray(GrayImage),
    Color(ColorImage),
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    payload_offset: usize,
}

fn parse_header(bytes: &[u8]) -> std::result::Result<Header, PnmError> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(PnmError::BadMagic {
            expected: "P5 or P6",
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned(),
        });
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and comments between tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(PnmError::MalformedHeader(format!(
                "expected {} at byte {start}",
                ["width", "height", "maxval"][i]
            )));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| PnmError::MalformedHeader(format!("number {text} out of range")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(PnmError::MalformedHeader(
                "missing whitespace after maxval".into(),
            ))
        }
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(PnmError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval(maxval));
    }
    Ok(Header {
        magic,
        width: width as usize,
        height: height as usize,
        payload_offset: pos,
    })
}

fn payload<'a>(bytes: &'a [u8], header: &Header, channels: usize) -> std::result::Result<&'a [u8], PnmError> {
    let expected = header.width * header.height * channels;
    let found = bytes.len() - header.payload_offset;
    if found < expected {
        return Err(PnmError::Truncated { expected, found });
    }
    Ok(&bytes[header.payload_offset..header.payload_offset + expected])
}

fn to_unit(p: u8) -> f64 {
    f64::from(p) / 255.0
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, PnmError> {
    let header = parse_header(bytes)?;
    if &header.magic != b"P5" {
        return Err(PnmError::BadMagic {
            expected: "P5",
            found: String::from_utf8_lossy(&header.magic).into_owned(),
        });
    }
    let data = payload(bytes, &header, 1)?.iter().map(|&p| to_unit(p)).collect();
    Ok(GrayImage::new(header.height, header.width, data).expect("header dims are valid"))
}

pub fn decode_ppm(bytes: &[u8]) -> std::result::Result<ColorImage, PnmError> {
    let header = parse_header(bytes)?;
    if &header.magic != b"P6" {
        return Err(PnmError::BadMagic {
            expected: "P6",
            found: String::from_utf8_lossy(&header.magic).into_owned(),
        });
    }
    let raw = payload(bytes, &header, 3)?;
    let plane = |c: usize| {
        let data = raw.iter().skip(c).step_by(3).map(|&p| to_unit(p)).collect();
        GrayImage::new(header.height, header.width, data).expect("header dims are valid")
    };
    Ok(ColorImage::new(plane(0), plane(1), plane(2)).expect("planes share dims"))
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| to_byte(v)));
    out
}

pub fn encode_ppm(img: &ColorImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    let [r, g, b] = img.planes();
    for ((&r, &g), &b) in r.data().iter().zip(g.data()).zip(b.data()) {
        out.extend_from_slice(&[to_byte(r), to_byte(g), to_byte(b)]);
    }
    out
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn pnm_err(path: &Path) -> impl FnOnce(PnmError) -> Error + '_ {
    move |source| Error::Pnm {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    decode_pgm(&read(path)?).map_err(pnm_err(path))
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &encode_pgm(img))
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<ColorImage> {
    let path = path.as_ref();
    decode_ppm(&read(path)?).map_err(pnm_err(path))
}

pub fn save_ppm(img: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &encode_ppm(img))
}

/// Loads a `P5` or `P6` file, dispatching on the magic number.
pub fn load_pnm(path: impl AsRef<Path>) -> Result<Pnm> {
    let path = path.as_ref();
    let bytes = read(path)?;
    match bytes.get(..2) {
        Some(b"P6") => decode_ppm(&bytes).map(Pnm::Color).map_err(pnm_err(path)),
        _ => decode_pgm(&bytes).map(Pnm::Gray).map_err(pnm_err(path)),
    }
}

pub fn save_pnm(img: &Pnm, path: impl AsRef<Path>) -> Result<()> {
    match img {
        Pnm::Gray(g) => save_pgm(g, path),
        Pnm::Color(c) => save_ppm(c, path),
    }
}
