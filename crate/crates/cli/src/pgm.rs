use std::path::Path;

use crate::error::{CliError, CliResult};

/// An 8-bit grayscale image with intensities scaled to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

fn header_tokens(bytes: &[u8], count: usize) -> CliResult<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(CliError::validation("truncated PGM header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    Ok((tokens, i + 1))
}

/// Reads a binary (P5) PGM with maxval ≤ 255.
pub fn read_pgm(path: &Path) -> CliResult<Image> {
    let bytes = std::fs::read(path).map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let (t, offset) = header_tokens(&bytes, 4)?;
    if t[0] != "P5" {
        return Err(CliError::validation(format!("{}: not a binary PGM (P5)", path.display())));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| CliError::validation(format!("bad PGM header field {s:?}")));
    let (width, height, maxval) = (num(&t[1])?, num(&t[2])?, num(&t[3])?);
    if width == 0 || height == 0 || maxval == 0 || maxval > 255 {
        return Err(CliError::validation("PGM must be non-empty 8-bit"));
    }
    let raster = bytes.get(offset..offset + width * height).ok_or_else(|| CliError::validation("truncated PGM raster"))?;
    Ok(Image { width, height, pixels: raster.iter().map(|&b| b as f64 / maxval as f64).collect() })
}

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let img = Image { width: 3, height: 2, pixels: vec![0.0, 1.0, 0.2, 0.4, 0.6, 0.8] };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        std::fs::write(&p, encode_pgm(&img)).unwrap();
        let back = read_pgm(&p).unwrap();
        assert_eq!((back.width, back.height), (3, 2));
        for (a, b) in back.pixels.iter().zip(&img.pixels) {
            assert!((a - b).abs() <= 0.5 / 255.0);
        }
    }
}
