//! Entry-wise mixing of two images and binary PGM (P5) I/O.

use rand::Rng;

use crate::error::{MmcError, Result};
use crate::model::{AssignmentMasks, DenseMatrix, MixtureProblem, ObservedMixture};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageMixture {
    pub problem: MixtureProblem,
    /// The two inputs coincide, so pixel classification is undefined.
    pub identical: bool,
}

/// Fully observed mixture taking each entry from `a` or `b` with
/// probability 1/2.
pub fn mix_images(a: &DenseMatrix, b: &DenseMatrix, seed: u64) -> Result<ImageMixture> {
    a.check_same_shape(b)?;
    let (d, n) = a.shape();
    let mut rng = substream(seed, &[]);
    let labels: Vec<u8> = (0..d * n).map(|_| if rng.random::<bool>() { 1 } else { 2 }).collect();
    let values = DenseMatrix::from_fn(d, n, |i, j| if labels[i * n + j] == 1 { a.get(i, j) } else { b.get(i, j) })?;
    let assignments = AssignmentMasks::from_labels(d, n, &labels, 2)?;
    let problem = MixtureProblem::new(
        vec![a.clone(), b.clone()],
        assignments,
        ObservedMixture::full(values),
        d.min(n),
        seed,
    )?;
    Ok(ImageMixture {
        problem,
        identical: a == b,
    })
}

fn pgm_err(msg: impl Into<String>) -> MmcError {
    MmcError::Parse { line: 0, msg: msg.into() }
}

/// Reads an 8-bit binary PGM into a matrix of gray levels.
pub fn read_pgm(bytes: &[u8]) -> Result<DenseMatrix> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(pgm_err("truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(pgm_err("not a binary PGM (P5)"));
    }
    let mut number = |what: &str| -> Result<usize> {
        let t = token()?;
        t.parse().map_err(|_| pgm_err(format!("bad {what} `{t}`")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if width == 0 || height == 0 {
        return Err(pgm_err("empty image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(pgm_err(format!("maxval {maxval} is not 8-bit")));
    }
    // `token` stops at the single whitespace byte that ends the header.
    let data = bytes.get(pos + 1..).unwrap_or(&[]);
    if data.len() < width * height {
        return Err(pgm_err(format!(
            "expected {} pixels, found {}",
            width * height,
            data.len()
        )));
    }
    DenseMatrix::new(height, width, data[..width * height].iter().map(|&v| v as f64).collect())
}

/// Writes `m` as an 8-bit binary PGM, rounding and clamping to `0..=255`.
pub fn write_pgm(m: &DenseMatrix) -> Vec<u8> {
    let (h, w) = m.shape();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(m.as_slice().iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_with_comments() {
        let m = DenseMatrix::from_fn(3, 5, |i, j| (i * 40 + j * 7) as f64).unwrap();
        let bytes = write_pgm(&m);
        assert_eq!(read_pgm(&bytes).unwrap(), m);
        let mut commented = b"P5 # gray\n# size next\n5 3\n255\n".to_vec();
        commented.extend(&bytes[bytes.len() - 15..]);
        assert_eq!(read_pgm(&commented).unwrap(), m);
    }

    #[test]
    fn pgm_rejects_bad_input() {
        assert!(read_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(read_pgm(b"P5\n2 2\n255\n\x01\x02").is_err());
        assert!(read_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        let clamp = DenseMatrix::from_rows(&[vec![-3.0, 300.0, 12.4]]).unwrap();
        let back = read_pgm(&write_pgm(&clamp)).unwrap();
        assert_eq!(back.as_slice(), &[0.0, 255.0, 12.0]);
    }

    #[test]
    fn mixing_is_balanced_and_seeded() {
        let a = DenseMatrix::from_fn(400, 250, |i, j| (i + j) as f64).unwrap();
        let b = DenseMatrix::from_fn(400, 250, |i, j| -((i * j) as f64) - 1.0).unwrap();
        let mix = mix_images(&a, &b, 3).unwrap();
        assert!(!mix.identical);
        let frac = mix.problem.assignments().mask(0).count_ones() as f64 / 1e5;
        assert!((frac - 0.5).abs() <= 0.02, "{frac}");
        assert_eq!(mix.problem.observed().num_observed(), 100_000);
        assert_eq!(mix_images(&a, &b, 3).unwrap(), mix);
        assert_ne!(mix_images(&a, &b, 4).unwrap(), mix);
    }

    #[test]
    fn identical_inputs_are_flagged() {
        let a = DenseMatrix::from_fn(4, 4, |i, j| (i * j) as f64).unwrap();
        let mix = mix_images(&a, &a, 0).unwrap();
        assert!(mix.identical);
        assert_eq!(mix.problem.observed().zero_filled(), &a);
        let wide = DenseMatrix::zeros(4, 5);
        assert!(mix_images(&a, &wide, 0).is_err());
    }
}
