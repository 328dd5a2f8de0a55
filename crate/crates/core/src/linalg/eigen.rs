use alloc::vec;
use alloc::vec::Vec;

use super::{LinalgError, Matrix};
use crate::math;

/// Eigenvalues of a general real square matrix as `(re, im)` pairs.
///
/// Balancing, elimination to Hessenberg form, then shifted QR.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<(f64, f64)>, LinalgError> {
    a.ensure_square()?;
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hqr(&mut h)
}

/// `max Re λ(A)`.
pub fn spectral_abscissa(a: &Matrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues(a)?.iter().fold(f64::NEG_INFINITY, |m, (re, _)| m.max(*re)))
}

/// `max |λ(A)|`.
pub fn spectral_radius(a: &Matrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues(a)?.iter().fold(0.0, |m, (re, im)| m.max(math::hypot(*re, *im))))
}

/// Strict Hurwitz test.
pub fn is_hurwitz(a: &Matrix) -> Result<bool, LinalgError> {
    Ok(spectral_abscissa(a)? < 0.0)
}

/// Strict Schur test.
pub fn is_schur_stable(a: &Matrix) -> Result<bool, LinalgError> {
    Ok(spectral_radius(a)? < 1.0)
}

fn balance(a: &mut Matrix) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let n = a.rows();
    let mut done = false;
    let mut guard = 0;
    while !done && guard < 1000 {
        guard += 1;
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += math::abs(a[(j, i)]);
                    r += math::abs(a[(i, j)]);
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg(a: &mut Matrix) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    for m in 1..(n - 1) {
        let mut x = 0.0;
        let mut i = m;
        for j in m..n {
            if math::abs(a[(j, m - 1)]) > math::abs(x) {
                x = a[(j, m - 1)];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..n {
                let t = a[(i, j)];
                a[(i, j)] = a[(m, j)];
                a[(m, j)] = t;
            }
            for j in 0..n {
                let t = a[(j, i)];
                a[(j, i)] = a[(j, m)];
                a[(j, m)] = t;
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[(i, m - 1)];
                if y != 0.0 {
                    y /= x;
                    a[(i, m - 1)] = y;
                    for j in m..n {
                        let v = a[(m, j)];
                        a[(i, j)] -= y * v;
                    }
                    for j in 0..n {
                        let v = a[(j, i)];
                        a[(j, m)] += y * v;
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..(i - 1) {
            a[(i, j)] = 0.0;
        }
    }
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        math::abs(a)
    } else {
        -math::abs(a)
    }
}

#[allow(unused_assignments)]
fn hqr(a: &mut Matrix) -> Result<Vec<(f64, f64)>, LinalgError> {
    let n = a.rows();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += math::abs(a[(i, j)]);
        }
    }
    let at = |a: &Matrix, i: isize, j: isize| a[(i as usize, j as usize)];
    let mut nn: isize = n as isize - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r) = (0.0f64, 0.0f64, 0.0f64);
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 1 {
                let mut s = math::abs(at(a, l - 1, l - 1)) + math::abs(at(a, l, l));
                if s == 0.0 {
                    s = anorm;
                }
                if math::abs(at(a, l, l - 1)) + s == s {
                    a[(l as usize, l as usize - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = at(a, nn, nn);
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = at(a, nn - 1, nn - 1);
            let mut w = at(a, nn, nn - 1) * at(a, nn - 1, nn);
            if l == nn - 1 {
                p = 0.5 * (y - x);
                q = p * p + w;
                let mut z = math::sqrt(math::abs(q));
                x += t;
                let (i0, i1) = (nn as usize - 1, nn as usize);
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[i0] = x + z;
                    wr[i1] = x + z;
                    if z != 0.0 {
                        wr[i1] = x - w / z;
                    }
                    wi[i0] = 0.0;
                    wi[i1] = 0.0;
                } else {
                    wr[i0] = x + p;
                    wr[i1] = x + p;
                    wi[i0] = -z;
                    wi[i1] = z;
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(LinalgError::NoConvergence);
            }
            if its == 10 || its == 20 || its == 40 {
                t += x;
                for i in 0..=(nn as usize) {
                    a[(i, i)] -= x;
                }
                let s = math::abs(at(a, nn, nn - 1)) + math::abs(at(a, nn - 1, nn - 2));
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            let mut z;
            loop {
                z = at(a, m, m);
                r = x - z;
                let s = y - z;
                p = (r * s - w) / at(a, m + 1, m) + at(a, m, m + 1);
                q = at(a, m + 1, m + 1) - z - r - s;
                r = at(a, m + 2, m + 1);
                let s = math::abs(p) + math::abs(q) + math::abs(r);
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = math::abs(at(a, m, m - 1)) * (math::abs(q) + math::abs(r));
                let v = math::abs(p)
                    * (math::abs(at(a, m - 1, m - 1)) + math::abs(z) + math::abs(at(a, m + 1, m + 1)));
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                a[(i as usize, i as usize - 2)] = 0.0;
                if i != m + 2 {
                    a[(i as usize, i as usize - 3)] = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = at(a, k, k - 1);
                    q = at(a, k + 1, k - 1);
                    r = 0.0;
                    if k != nn - 1 {
                        r = at(a, k + 2, k - 1);
                    }
                    x = math::abs(p) + math::abs(q) + math::abs(r);
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign(math::sqrt(p * p + q * q + r * r), p);
                if s != 0.0 {
                    let ku = k as usize;
                    if k == m {
                        if l != m {
                            a[(ku, ku - 1)] = -a[(ku, ku - 1)];
                        }
                    } else {
                        a[(ku, ku - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in ku..=(nn as usize) {
                        p = a[(ku, j)] + q * a[(ku + 1, j)];
                        if k != nn - 1 {
                            p += r * a[(ku + 2, j)];
                            a[(ku + 2, j)] -= p * z;
                        }
                        a[(ku + 1, j)] -= p * y;
                        a[(ku, j)] -= p * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in (l as usize)..=(mmin as usize) {
                        p = x * a[(i, ku)] + y * a[(i, ku + 1)];
                        if k != nn - 1 {
                            p += z * a[(i, ku + 2)];
                            a[(i, ku + 2)] -= p * r;
                        }
                        a[(i, ku + 1)] -= p * q;
                        a[(i, ku)] -= p;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}
