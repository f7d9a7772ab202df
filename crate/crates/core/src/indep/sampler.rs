use rand::Rng;
use rand_distr::{Distribution, Hypergeometric};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// Draws a random two-way table with the given row and column margins.
///
/// The law is that of the table obtained by shuffling one variable's
/// labels against the other's (multivariate hypergeometric). Each row is
/// filled by a chain of univariate hypergeometric draws against the column
/// counts still unallocated. Returns the table row-major.
pub fn fixed_margin_sample<R: Rng + ?Sized>(row_margins: &[u64], col_margins: &[u64], rng: &mut R) -> Result<Vec<u64>> {
    let rows_total: u64 = row_margins.iter().sum();
    let cols_total: u64 = col_margins.iter().sum();
    if rows_total != cols_total {
        return Err(Error::MarginMismatch { rows: rows_total, cols: cols_total });
    }
    if rows_total == 0 {
        return Err(Error::EmptyTable);
    }
    let (r, c) = (row_margins.len(), col_margins.len());
    let mut table = vec![0u64; r * c];
    let mut col_left = col_margins.to_vec();
    for (i, &row) in row_margins.iter().enumerate() {
        let out = &mut table[i * c..(i + 1) * c];
        if i + 1 == r {
            out.copy_from_slice(&col_left);
            break;
        }
        let mut need = row;
        let mut pool: u64 = col_left.iter().sum();
        for j in 0..c {
            if need == 0 {
                break;
            }
            let avail = col_left[j];
            let x = if j + 1 == c || avail == pool {
                need
            } else if avail == 0 {
                0
            } else {
                hypergeometric(pool, avail, need, rng)
            };
            out[j] = x;
            pool -= avail;
            col_left[j] -= x;
            need -= x;
        }
    }
    Ok(table)
}

/// Successes in `k` draws without replacement from `n` items of which
/// `good` are successes.
fn hypergeometric<R: Rng + ?Sized>(n: u64, good: u64, k: u64, rng: &mut R) -> u64 {
    match Hypergeometric::new(n, good, k) {
        Ok(h) => h.sample(rng),
        // the fast sampler's setup overflows on some large populations
        Err(_) => hypergeometric_from_mode(n, good, k, rng),
    }
}

/// Inverse-transform sampling over the support visited outward from the
/// mode, with the pmf advanced by its ratio recurrence.
fn hypergeometric_from_mode<R: Rng + ?Sized>(n: u64, good: u64, k: u64, rng: &mut R) -> u64 {
    let lo = (k + good).saturating_sub(n);
    let hi = good.min(k);
    let mode = (((k + 1) as f64 * (good + 1) as f64 / (n + 2) as f64).floor() as u64).clamp(lo, hi);
    let ln_pmf = |x: u64| ln_binomial(good, x) + ln_binomial(n - good, k - x) - ln_binomial(n, k);
    let up = |x: u64| ((good - x) as f64 * (k - x) as f64) / ((x + 1) as f64 * ((n - good) as f64 - (k - x) as f64 + 1.0));
    let u: f64 = rng.random();
    let p_mode = ln_pmf(mode).exp();
    let mut acc = p_mode;
    if u < acc {
        return mode;
    }
    let (mut below, mut p_below) = (mode, p_mode);
    let (mut above, mut p_above) = (mode, p_mode);
    while below > lo || above < hi {
        if above < hi {
            p_above *= up(above);
            above += 1;
            acc += p_above;
            if u < acc {
                return above;
            }
        }
        if below > lo {
            p_below /= up(below - 1);
            below -= 1;
            acc += p_below;
            if u < acc {
                return below;
            }
        }
    }
    mode
}
