use num_complex::Complex64;

use super::{ComplexMatrix, LinalgError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Eigenvalues of a general complex matrix, in no particular order, with a
/// backward-error scale: for each reported λ the smallest singular value of
/// (M - λI) relative to ‖M‖ is bounded by `residual_bound`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<Complex64>,
    residual_bound: f64,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn residual_bound(&self) -> f64 {
        self.residual_bound
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Eigenvalues of a general square complex matrix: balance, Householder
/// reduction to Hessenberg form, then implicit-deflation QR iteration with
/// Wilkinson shifts. Iteration budget is 30 per eigenvalue.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Spectrum, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let residual_bound = 100.0 * n as f64 * f64::EPSILON;
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            residual_bound,
        });
    }
    let mut h = m.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let eigenvalues = hessenberg_qr(&mut h, 30 * n)?;
    Ok(Spectrum {
        eigenvalues,
        residual_bound,
    })
}

/// Parlett-Reinsch balancing: diagonal similarity with powers of two so that
/// row and column 1-norms are comparable. Exact in floating point.
fn balance(h: &mut ComplexMatrix) {
    let n = h.rows();
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += abs1(h[(j, i)]);
                    row += abs1(h[(i, j)]);
                }
            }
            if col == 0.0 || row == 0.0 || !col.is_finite() || !row.is_finite() {
                continue;
            }
            let s = col + row;
            let mut c = col;
            let mut f = 1.0;
            let mut g = row / RADIX;
            while c < g {
                f *= RADIX;
                c *= SQRDX;
            }
            g = row * RADIX;
            while c > g {
                f /= RADIX;
                c /= SQRDX;
            }
            if (c + row) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    h[(i, j)] *= inv;
                }
                for j in 0..n {
                    h[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(h: &mut ComplexMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut u = vec![ZERO; n];
    for k in 0..n - 2 {
        let mut norm_sqr = 0.0;
        for i in k + 1..n {
            norm_sqr += h[(i, k)].norm_sqr();
        }
        let sigma = norm_sqr.sqrt();
        if sigma == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let x0n = x0.norm();
        let phase = if x0n == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0n
        };
        let alpha = -phase * sigma;
        // reflector u = x - alpha*e1 maps the column to alpha*e1
        u[k + 1] = x0 - alpha;
        let mut u_norm_sqr = u[k + 1].norm_sqr();
        for i in k + 2..n {
            u[i] = h[(i, k)];
            u_norm_sqr += u[i].norm_sqr();
        }
        if u_norm_sqr == 0.0 {
            continue;
        }
        let beta = 2.0 / u_norm_sqr;
        // left: H <- (I - beta*u*u^H) H on columns k+1..n
        for j in k + 1..n {
            let mut s = ZERO;
            for i in k + 1..n {
                s += u[i].conj() * h[(i, j)];
            }
            s *= beta;
            for i in k + 1..n {
                let t = s * u[i];
                h[(i, j)] -= t;
            }
        }
        // right: H <- H (I - beta*u*u^H) on rows 0..n
        for i in 0..n {
            let mut s = ZERO;
            for j in k + 1..n {
                s += h[(i, j)] * u[j];
            }
            s *= beta;
            for j in k + 1..n {
                let t = s * u[j].conj();
                h[(i, j)] -= t;
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Complex Givens rotation: returns (c, s, r) with c real so that
/// [c s; -conj(s) c] * [a; b] = [r; 0].
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64, Complex64) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO, a);
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn, Complex64::new(bn, 0.0));
    }
    let rho = an.hypot(bn);
    let phase = a / an;
    (an / rho, phase * b.conj() / rho, phase * rho)
}

/// Both eigenvalues of a 2x2 complex block, the second computed from the
/// determinant to avoid cancellation.
fn eig2x2(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
) -> (Complex64, Complex64) {
    let scale = abs1(a) + abs1(b) + abs1(c) + abs1(d);
    if scale == 0.0 {
        return (ZERO, ZERO);
    }
    let inv = 1.0 / scale;
    let (a, b, c, d) = (a * inv, b * inv, c * inv, d * inv);
    let mid = (a + d) * 0.5;
    let p = (a - d) * 0.5;
    let s = (p * p + b * c).sqrt();
    let q = if (mid + s).norm_sqr() >= (mid - s).norm_sqr() {
        s
    } else {
        -s
    };
    let big = mid + q;
    if big == ZERO {
        return (ZERO, ZERO);
    }
    let small = (a * d - b * c) / big;
    (small * scale, big * scale)
}

/// Shift: eigenvalue of the trailing 2x2 block closest to its (2,2) entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let p = (a - d) * 0.5;
    let bc = b * c;
    let s = (p * p + bc).sqrt();
    let q = if (p + s).norm_sqr() >= (p - s).norm_sqr() {
        s
    } else {
        -s
    };
    let denom = p + q;
    if denom == ZERO {
        return d;
    }
    d - bc / denom
}

/// One explicit-shift QR step on the decoupled window [lo, hi): factor
/// H - σI = QR by Givens rotations, form RQ + σI. Only window entries are
/// touched; off-window blocks do not affect the spectrum.
fn qr_step(h: &mut ComplexMatrix, lo: usize, hi: usize, sigma: Complex64) {
    for k in lo..hi {
        h[(k, k)] -= sigma;
    }
    let mut rotations = Vec::with_capacity(hi - lo - 1);
    for k in lo..hi - 1 {
        let (c, s, r) = givens(h[(k, k)], h[(k + 1, k)]);
        h[(k, k)] = r;
        h[(k + 1, k)] = ZERO;
        for j in k + 1..hi {
            let t1 = h[(k, j)];
            let t2 = h[(k + 1, j)];
            h[(k, j)] = c * t1 + s * t2;
            h[(k + 1, j)] = -s.conj() * t1 + c * t2;
        }
        rotations.push((c, s));
    }
    for (idx, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + idx;
        let row_end = (k + 2).min(hi);
        for i in lo..row_end {
            let t1 = h[(i, k)];
            let t2 = h[(i, k + 1)];
            h[(i, k)] = c * t1 + s.conj() * t2;
            h[(i, k + 1)] = -s * t1 + c * t2;
        }
    }
    for k in lo..hi {
        h[(k, k)] += sigma;
    }
}

/// QR iteration with deflation on an upper Hessenberg matrix.
fn hessenberg_qr(
    h: &mut ComplexMatrix,
    max_iterations: usize,
) -> Result<Vec<Complex64>, LinalgError> {
    let n = h.rows();
    let mut eigs = vec![ZERO; n];
    let eps = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / eps);
    let hnorm: f64 = h.entries().iter().map(|&e| abs1(e)).sum::<f64>();

    let mut hi = n;
    let mut since_deflation = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // scan upward for a negligible subdiagonal bounding the active block
        let mut lo = hi - 1;
        while lo > 0 {
            let sub = abs1(h[(lo, lo - 1)]);
            let mut tst = abs1(h[(lo - 1, lo - 1)]) + abs1(h[(lo, lo)]);
            if tst == 0.0 {
                tst = hnorm;
            }
            if sub <= smlnum || sub <= eps * tst {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            eigs[hi - 1] = h[(hi - 1, hi - 1)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if lo == hi - 2 {
            let (l1, l2) = eig2x2(
                h[(hi - 2, hi - 2)],
                h[(hi - 2, hi - 1)],
                h[(hi - 1, hi - 2)],
                h[(hi - 1, hi - 1)],
            );
            eigs[hi - 2] = l1;
            eigs[hi - 1] = l2;
            hi -= 2;
            since_deflation = 0;
            continue;
        }
        if total >= max_iterations {
            return Err(LinalgError::EigenFailure { iterations: total });
        }
        since_deflation += 1;
        total += 1;
        let sigma = if since_deflation % 10 == 0 {
            // exceptional shift to break symmetric orbits
            h[(hi - 1, hi - 1)] + Complex64::new(0.75 * h[(hi - 1, hi - 2)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 2, hi - 2)],
                h[(hi - 2, hi - 1)],
                h[(hi - 1, hi - 2)],
                h[(hi - 1, hi - 1)],
            )
        };
        qr_step(h, lo, hi, sigma);
    }
    Ok(eigs)
}

/// Greedy nearest-neighbor multiset matching; returns the largest matched
/// pair distance (infinite on length mismatch). QR output order is
/// arbitrary, so tests compare spectra through this.
pub fn max_multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut remaining: Vec<Complex64> = b.to_vec();
    let mut worst = 0.0f64;
    for &x in a {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("non-empty by length check");
        worst = worst.max(dist);
        remaining.swap_remove(idx);
    }
    worst
}
