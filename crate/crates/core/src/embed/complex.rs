//! ComplEx scoring over the packed real layout `[re_0..re_h, im_0..im_h]`.

use crate::error::{Error, Result};

/// `Re(sum_i a_i * b_i * conj(c_i))`.
pub fn complex_score(a: &[f64], b: &[f64], c: &[f64]) -> Result<f64> {
    if a.len() != b.len() || b.len() != c.len() || a.len() % 2 != 0 {
        return Err(Error::domain(format!(
            "complex vectors of mismatched or odd lengths {}, {}, {}",
            a.len(),
            b.len(),
            c.len()
        )));
    }
    Ok(score(a, b, c))
}

pub(crate) fn score(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let h = a.len() / 2;
    let (ar, ai) = a.split_at(h);
    let (br, bi) = b.split_at(h);
    let (cr, ci) = c.split_at(h);
    let mut s = 0.0;
    for i in 0..h {
        let pr = ar[i] * br[i] - ai[i] * bi[i];
        let pi = ar[i] * bi[i] + ai[i] * br[i];
        s += pr * cr[i] + pi * ci[i];
    }
    s
}

/// Elementwise complex product `a * b` written into `out`.
pub(crate) fn product(a: &[f64], b: &[f64], out: &mut [f64]) {
    let h = a.len() / 2;
    for i in 0..h {
        out[i] = a[i] * b[i] - a[h + i] * b[h + i];
        out[h + i] = a[i] * b[h + i] + a[h + i] * b[i];
    }
}

/// `Re(<p, conj(c)>)` for a precomputed product `p = a * b`.
pub(crate) fn dot(p: &[f64], c: &[f64]) -> f64 {
    p.iter().zip(c).map(|(x, y)| x * y).sum()
}

/// Gradient of the score with respect to the first slot, given `upstream`
/// (the accumulated `sum_j g_j * c_j`), through `b`. Adds into `out`.
pub(crate) fn grad_first(b: &[f64], upstream: &[f64], scale: f64, out: &mut [f64]) {
    let h = b.len() / 2;
    for i in 0..h {
        let (ur, ui) = (upstream[i], upstream[h + i]);
        out[i] += scale * (ur * b[i] + ui * b[h + i]);
        out[h + i] += scale * (-ur * b[h + i] + ui * b[i]);
    }
}

pub fn conj(v: &[f64]) -> Vec<f64> {
    let h = v.len() / 2;
    v.iter()
        .enumerate()
        .map(|(i, &x)| if i < h { x } else { -x })
        .collect()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binary cross-entropy of `sigmoid(x)` against target `y`.
pub(crate) fn bce_logit(x: f64, y: f64) -> f64 {
    softplus(x) - y * x
}
