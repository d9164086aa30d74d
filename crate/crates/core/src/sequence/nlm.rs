use crate::error::{Error, Result};

fn at(signal: &[f64], width: usize, r: isize, c: isize) -> f64 {
    let height = (signal.len() / width) as isize;
    if r < 0 || c < 0 || r >= height || c >= width as isize {
        0.0
    } else {
        signal[r as usize * width + c as usize]
    }
}

/// Non-local means. A 1-D signal when `width` is None, otherwise a row-major
/// image of that width. Patches of radius `rho` are zero-padded; weights are
/// exp(−‖Δpatch‖² / (2h²·patch size)) over a search window of radius `search`.
pub fn nlm_denoise(signal: &[f64], width: Option<usize>, rho: usize, h: f64, search: usize) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::invalid("bandwidth must be positive"));
    }
    if search < rho {
        return Err(Error::invalid(format!("search radius {search} below patch radius {rho}")));
    }
    let width = width.unwrap_or(signal.len().max(1));
    if width == 0 || !signal.len().is_multiple_of(width) {
        return Err(Error::invalid(format!("width {width} does not divide {} samples", signal.len())));
    }
    let height = signal.len() / width;
    let (rho, search) = (rho as isize, search as isize);
    // a 1-D signal is a single-row image
    let rows_r = if height == 1 { 0 } else { rho };
    let rows_s = if height == 1 { 0 } else { search };
    let size = ((2 * rows_r + 1) * (2 * rho + 1)) as f64;
    let denom = 2.0 * h * h * size;
    let out = crate::par::map_range(signal.len(), |idx| {
        let (r, c) = ((idx / width) as isize, (idx % width) as isize);
        let (mut num, mut total) = (0.0, 0.0);
        for dr in -rows_s..=rows_s {
            for dc in -search..=search {
                let (r2, c2) = (r + dr, c + dc);
                if r2 < 0 || c2 < 0 || r2 >= height as isize || c2 >= width as isize {
                    continue;
                }
                let mut d2 = 0.0;
                for pr in -rows_r..=rows_r {
                    for pc in -rho..=rho {
                        let diff = at(signal, width, r + pr, c + pc) - at(signal, width, r2 + pr, c2 + pc);
                        d2 += diff * diff;
                    }
                }
                let w = (-d2 / denom).exp();
                num += w * at(signal, width, r2, c2);
                total += w;
            }
        }
        num / total
    });
    Ok(out)
}

/// Moving average with Gaussian weights exp(−d²/2σ²) over |d| ≤ radius.
pub fn gaussian_moving_average(signal: &[f64], radius: usize, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let n = signal.len() as isize;
    let r = radius as isize;
    Ok((0..n)
        .map(|t| {
            let (mut num, mut total) = (0.0, 0.0);
            for s in (t - r).max(0)..=(t + r).min(n - 1) {
                let w = (-((s - t) as f64).powi(2) / (2.0 * sigma * sigma)).exp();
                num += w * signal[s as usize];
                total += w;
            }
            num / total
        })
        .collect())
}
