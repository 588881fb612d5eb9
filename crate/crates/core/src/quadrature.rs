//! Adaptive Gauss-Kronrod quadrature on a finite interval. The 7-15 pair
//! gives the error estimate; the worst interval is bisected until the summed
//! error meets the requested tolerance.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("empty or inverted interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
    #[error(
        "failed to converge: error estimate {error:e} after {intervals} intervals"
    )]
    NonConvergence { error: f64, intervals: usize },
}

// 15-point Kronrod abscissae on [0, 1] side (symmetric), QUADPACK dqk15.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
// embedded 7-point Gauss weights
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod 7-15 panel: returns (kronrod value, error estimate).
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut values = [0.0f64; 15];
    values[7] = fc;

    for (k, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let flo = f(center - dx);
        let fhi = f(center + dx);
        values[k] = flo;
        values[14 - k] = fhi;
        kronrod += WGK[k] * (flo + fhi);
        if k % 2 == 1 {
            gauss += WG[k / 2] * (flo + fhi);
        }
    }

    // QUADPACK-style scaled error estimate
    let mean = kronrod * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for (k, &v) in values.iter().enumerate() {
        let w = WGK[if k <= 7 { k } else { 14 - k }];
        if k != 7 {
            resasc += w * (v - mean).abs();
        }
    }
    resasc *= half.abs();

    let raw = ((kronrod - gauss) * half).abs();
    let error = if resasc != 0.0 && raw != 0.0 {
        resasc * (200.0 * raw / resasc).powf(1.5).min(1.0)
    } else {
        raw
    };
    (kronrod * half, error)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Integrates f over [a, b] to the requested absolute/relative tolerance by
/// adaptively bisecting the interval with the largest error estimate.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<f64, QuadratureError> {
    if !(a < b) {
        return Err(QuadratureError::BadInterval { a, b });
    }
    let (value, error) = gk15(&mut f, a, b);
    let mut panels = vec![Panel {
        a,
        b,
        value,
        error,
    }];

    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= max_intervals {
            return Err(QuadratureError::NonConvergence {
                error: total_err,
                intervals: panels.len(),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval at floating-point resolution; accept what we have
            let (value, error) = gk15(&mut f, a, b);
            panels.push(Panel { a, b, value, error });
            let total: f64 = panels.iter().map(|p| p.value).sum();
            return Ok(total);
        }
        let (lv, le) = gk15(&mut f, a, mid);
        let (rv, re) = gk15(&mut f, mid, b);
        panels.push(Panel {
            a,
            b: mid,
            value: lv,
            error: le,
        });
        panels.push(Panel {
            a: mid,
            b,
            value: rv,
            error: re,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 1.0, 1e-12, 1e-12, 100).unwrap();
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let v = integrate(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-12, 1e-12, 1000)
            .unwrap();
        let exact = (1.0 - (10.0 * std::f64::consts::PI).cos()) / 10.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn endpoint_log_singularity() {
        // integral of ln(1-t) over [0,1] is -1
        let v = integrate(|t| (1.0 - t).ln(), 0.0, 1.0, 1e-12, 1e-12, 10_000).unwrap();
        assert!((v + 1.0).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn bad_interval_rejected() {
        assert!(matches!(
            integrate(|x| x, 1.0, 0.0, 1e-6, 1e-6, 10),
            Err(QuadratureError::BadInterval { .. })
        ));
    }

    #[test]
    fn interval_budget_reported() {
        // a needle the budget cannot resolve
        let res = integrate(
            |x| 1.0 / ((x - 0.31830988618).powi(2) + 1e-24),
            0.0,
            1.0,
            1e-14,
            1e-14,
            8,
        );
        assert!(matches!(res, Err(QuadratureError::NonConvergence { .. })));
    }
}
