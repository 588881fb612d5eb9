//! Stereographic projection onto the Riemann sphere (radius 1/2 centered at
//! (0, 0, 1/2)) and the unit sphere, plus the logarithmic energy measured two
//! independent ways: the pairwise definition and the polynomial three-term
//! decomposition.

use num_complex::Complex64;

use crate::pevp::RootSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SphereError {
    #[error("point {index} is off the {model:?} sphere by {deviation:e}")]
    OffSphere {
        model: SphereModel,
        index: usize,
        deviation: f64,
    },
    #[error("points {i} and {j} coincide; the energy diverges")]
    CoincidentPoints { i: usize, j: usize },
    #[error("roots {i} and {j} are closer than 1e-12; derivative product is unreliable")]
    RepeatedRoots { i: usize, j: usize },
    #[error("expected a {expected:?} energy value, got {got:?}")]
    WrongModel {
        expected: SphereModel,
        got: SphereModel,
    },
    #[error("configuration is degenerate (no roots were extracted)")]
    DegenerateRootSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereModel {
    /// Sphere of radius 1/2 centered at (0, 0, 1/2); the projection target.
    Riemann,
    /// The unit sphere.
    UnitS2,
}

pub type Point3 = [f64; 3];

/// A point configuration tagged with the sphere model it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalConfiguration {
    model: SphereModel,
    points: Vec<Point3>,
}

const ON_SPHERE_TOL: f64 = 1e-12;

fn riemann_deviation(p: &Point3) -> f64 {
    let dz = p[2] - 0.5;
    ((p[0] * p[0] + p[1] * p[1] + dz * dz).sqrt() - 0.5).abs()
}

fn unit_deviation(p: &Point3) -> f64 {
    ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs()
}

impl SphericalConfiguration {
    pub fn new(model: SphereModel, points: Vec<Point3>) -> Result<Self, SphereError> {
        for (index, p) in points.iter().enumerate() {
            let deviation = match model {
                SphereModel::Riemann => riemann_deviation(p),
                SphereModel::UnitS2 => unit_deviation(p),
            };
            if !(deviation <= ON_SPHERE_TOL) {
                return Err(SphereError::OffSphere {
                    model,
                    index,
                    deviation,
                });
            }
        }
        Ok(SphericalConfiguration { model, points })
    }

    pub fn model(&self) -> SphereModel {
        self.model
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Maps a Riemann-sphere configuration to the unit sphere through the
    /// affine change (a, b, c) -> (2a, 2b, 2c-1).
    pub fn to_unit_sphere(&self) -> Result<SphericalConfiguration, SphereError> {
        if self.model != SphereModel::Riemann {
            return Err(SphereError::WrongModel {
                expected: SphereModel::Riemann,
                got: self.model,
            });
        }
        let points = self.points.iter().map(riemann_to_s2_unchecked).collect();
        Ok(SphericalConfiguration {
            model: SphereModel::UnitS2,
            points,
        })
    }
}

/// A logarithmic energy in natural-log units, tagged with its sphere model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyValue {
    pub value: f64,
    pub model: SphereModel,
    pub n: usize,
}

/// Inverse stereographic projection from the plane through the north pole:
/// z maps to (Re z, Im z, |z|^2)/(1 + |z|^2) on the Riemann sphere, which
/// satisfies the chordal identity
/// dist(z^, w^) = |z - w| / sqrt((1+|z|^2)(1+|w|^2)).
pub fn project_riemann(z: Complex64) -> Point3 {
    let denom = 1.0 + z.norm_sqr();
    [z.re / denom, z.im / denom, z.norm_sqr() / denom]
}

fn riemann_to_s2_unchecked(p: &Point3) -> Point3 {
    [2.0 * p[0], 2.0 * p[1], 2.0 * p[2] - 1.0]
}

/// The affine map (a, b, c) -> (2a, 2b, 2c-1) from the Riemann sphere to the
/// unit sphere; inputs off-sphere beyond 1e-9 are rejected.
pub fn riemann_to_s2(p: Point3) -> Result<Point3, SphereError> {
    let deviation = riemann_deviation(&p);
    if !(deviation <= 1e-9) {
        return Err(SphereError::OffSphere {
            model: SphereModel::Riemann,
            index: 0,
            deviation,
        });
    }
    Ok(riemann_to_s2_unchecked(&p))
}

/// Projects a root set onto the Riemann sphere.
pub fn project_roots(rs: &RootSet) -> Result<SphericalConfiguration, SphereError> {
    if rs.degenerate() {
        return Err(SphereError::DegenerateRootSet);
    }
    let points = rs.roots().iter().map(|&z| project_riemann(z)).collect();
    // projected points are on-sphere identically; skip re-validation
    Ok(SphericalConfiguration {
        model: SphereModel::Riemann,
        points,
    })
}

/// The logarithmic energy -sum_{i<j} ln dist(x_i, x_j) by the exact pairwise
/// double loop. A single point has zero energy by the empty sum.
pub fn log_energy(config: &SphericalConfiguration) -> Result<EnergyValue, SphereError> {
    let pts = &config.points;
    let mut acc = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let dx = pts[i][0] - pts[j][0];
            let dy = pts[i][1] - pts[j][1];
            let dz = pts[i][2] - pts[j][2];
            let dist = (dx * dx + dy * dy + dz * dz).sqrt();
            if dist < 1e-300 {
                return Err(SphereError::CoincidentPoints { i, j });
            }
            acc -= dist.ln();
        }
    }
    Ok(EnergyValue {
        value: acc,
        model: config.model,
        n: pts.len(),
    })
}

/// The Riemann-sphere energy through the polynomial decomposition
/// V = (N-1) sum ln sqrt(1+|z_i|^2) - 1/2 sum ln|F'(z_i)| + (N/2) ln|a_N|,
/// with F'(z_i) = a_N prod_{j != i} (z_i - z_j) from the factored form.
pub fn energy_three_term(rs: &RootSet) -> Result<EnergyValue, SphereError> {
    if rs.degenerate() {
        return Err(SphereError::DegenerateRootSet);
    }
    let roots = rs.roots();
    let n = roots.len();
    let ln_lead = rs.leading_det().norm().ln();

    let mut lift_sum = 0.0f64;
    for z in roots {
        lift_sum += 0.5 * (1.0 + z.norm_sqr()).ln();
    }

    let mut dlog_sum = 0.0f64;
    for i in 0..n {
        let mut ln_prod = 0.0f64;
        for j in 0..n {
            if i == j {
                continue;
            }
            let gap = (roots[i] - roots[j]).norm();
            if gap < 1e-12 {
                return Err(SphereError::RepeatedRoots { i: i.min(j), j: i.max(j) });
            }
            ln_prod += gap.ln();
        }
        dlog_sum += ln_lead + ln_prod;
    }

    let nf = n as f64;
    let value = (nf - 1.0) * lift_sum - 0.5 * dlog_sum + nf / 2.0 * ln_lead;
    Ok(EnergyValue {
        value,
        model: SphereModel::Riemann,
        n,
    })
}

/// Transports a Riemann-sphere energy to the unit sphere: the two differ by
/// exactly N(N-1)/2 * ln 2.
pub fn riemann_energy_to_s2(v: EnergyValue) -> Result<EnergyValue, SphereError> {
    if v.model != SphereModel::Riemann {
        return Err(SphereError::WrongModel {
            expected: SphereModel::Riemann,
            got: v.model,
        });
    }
    let nf = v.n as f64;
    Ok(EnergyValue {
        value: v.value - nf * (nf - 1.0) / 2.0 * std::f64::consts::LN_2,
        model: SphereModel::UnitS2,
        n: v.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pevp::{pevp_roots, EnsembleParams};
    use crate::sampling::RngStream;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn projection_of_origin_and_one() {
        assert_eq!(project_riemann(c(0.0, 0.0)), [0.0, 0.0, 0.0]);
        let p = project_riemann(c(1.0, 0.0));
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!(p[1].abs() < 1e-15);
        assert!((p[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chordal_identity_random_pairs() {
        let mut s = RngStream::substream(31, 0);
        for _ in 0..10_000 {
            let z = s.sample_complex_gaussian(2.0).unwrap();
            let w = s.sample_complex_gaussian(2.0).unwrap();
            let pz = project_riemann(z);
            let pw = project_riemann(w);
            let chord = ((pz[0] - pw[0]).powi(2)
                + (pz[1] - pw[1]).powi(2)
                + (pz[2] - pw[2]).powi(2))
            .sqrt();
            let formula =
                (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt();
            assert!((chord - formula).abs() < 1e-12);
        }
    }

    #[test]
    fn projected_points_sit_on_riemann_sphere() {
        let mut s = RngStream::substream(31, 1);
        for _ in 0..1000 {
            let z = s.sample_complex_gaussian(4.0).unwrap();
            assert!(riemann_deviation(&project_riemann(z)) <= 1e-12);
        }
    }

    #[test]
    fn riemann_to_s2_known_points() {
        assert_eq!(riemann_to_s2([0.0, 0.0, 0.0]).unwrap(), [0.0, 0.0, -1.0]);
        assert_eq!(riemann_to_s2([0.0, 0.0, 1.0]).unwrap(), [0.0, 0.0, 1.0]);
        let mapped = riemann_to_s2([0.5, 0.0, 0.5]).unwrap();
        assert!((mapped[0] - 1.0).abs() < 1e-15);
        assert!(mapped[1].abs() < 1e-15 && mapped[2].abs() < 1e-15);
        assert!(riemann_to_s2([0.3, 0.3, 0.9]).is_err());
    }

    #[test]
    fn antipodal_pair_energy() {
        let config = SphericalConfiguration::new(
            SphereModel::UnitS2,
            vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]],
        )
        .unwrap();
        let e = log_energy(&config).unwrap();
        assert!((e.value + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn single_point_zero_energy() {
        let config =
            SphericalConfiguration::new(SphereModel::UnitS2, vec![[0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(log_energy(&config).unwrap().value, 0.0);
    }

    #[test]
    fn equilateral_equator_triangle() {
        // three points at 120 degrees on the equator: pairwise distance
        // sqrt(3), so V = -3 ln sqrt(3) = -(3/2) ln 3
        let pts: Vec<Point3> = (0..3)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        let config = SphericalConfiguration::new(SphereModel::UnitS2, pts).unwrap();
        let e = log_energy(&config).unwrap();
        assert!((e.value + 1.5 * 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_flagged() {
        let config = SphericalConfiguration::new(
            SphereModel::UnitS2,
            vec![[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]],
        )
        .unwrap();
        assert!(matches!(
            log_energy(&config),
            Err(SphereError::CoincidentPoints { i: 0, j: 1 })
        ));
    }

    #[test]
    fn energy_invariant_to_point_order() {
        let mut s = RngStream::substream(31, 2);
        let params = EnsembleParams::new(3, 2).unwrap();
        let rs = pevp_roots(&mut s, params).unwrap();
        let config = project_roots(&rs).unwrap();
        let forward = log_energy(&config).unwrap().value;
        let mut reversed = config.points().to_vec();
        reversed.reverse();
        let back = log_energy(
            &SphericalConfiguration::new(SphereModel::Riemann, reversed).unwrap(),
        )
        .unwrap()
        .value;
        assert_eq!(forward, back);
    }

    #[test]
    fn off_sphere_configuration_rejected() {
        let err =
            SphericalConfiguration::new(SphereModel::UnitS2, vec![[0.0, 0.0, 0.5]]).unwrap_err();
        assert!(matches!(err, SphereError::OffSphere { index: 0, .. }));
    }

    #[test]
    fn three_term_matches_pairwise_for_monic_quadratic() {
        // r = 1 monic quadratic with roots ±i: build the RootSet directly
        let rs = RootSet::synthetic_for_tests(
            EnsembleParams::new(2, 1).unwrap(),
            vec![c(0.0, 1.0), c(0.0, -1.0)],
            c(1.0, 0.0),
        );
        let decomposed = energy_three_term(&rs).unwrap().value;
        let pairwise = log_energy(&project_roots(&rs).unwrap()).unwrap().value;
        assert!((decomposed - pairwise).abs() < 1e-10);
    }

    #[test]
    fn three_term_single_root_is_zero() {
        let rs = RootSet::synthetic_for_tests(
            EnsembleParams::new(1, 1).unwrap(),
            vec![c(0.0, 0.0)],
            c(1.0, 0.0),
        );
        assert_eq!(energy_three_term(&rs).unwrap().value, 0.0);
    }

    #[test]
    fn three_term_matches_pairwise_on_random_instance() {
        let mut s = RngStream::substream(31, 3);
        let params = EnsembleParams::new(3, 2).unwrap();
        let rs = pevp_roots(&mut s, params).unwrap();
        let decomposed = energy_three_term(&rs).unwrap().value;
        let pairwise = log_energy(&project_roots(&rs).unwrap()).unwrap().value;
        assert!(
            (decomposed - pairwise).abs() <= 1e-6 * (1.0 + pairwise.abs()),
            "{decomposed} vs {pairwise}"
        );
    }

    #[test]
    fn repeated_roots_rejected() {
        let rs = RootSet::synthetic_for_tests(
            EnsembleParams::new(2, 1).unwrap(),
            vec![c(0.5, 0.5), c(0.5, 0.5 + 1e-13)],
            c(1.0, 0.0),
        );
        assert!(matches!(
            energy_three_term(&rs),
            Err(SphereError::RepeatedRoots { .. })
        ));
    }

    #[test]
    fn s2_shift_matches_direct_computation() {
        let mut s = RngStream::substream(31, 4);
        let params = EnsembleParams::new(2, 3).unwrap();
        let rs = pevp_roots(&mut s, params).unwrap();
        let riemann_cfg = project_roots(&rs).unwrap();
        let riemann = log_energy(&riemann_cfg).unwrap();
        let shifted = riemann_energy_to_s2(riemann).unwrap();
        let direct = log_energy(&riemann_cfg.to_unit_sphere().unwrap()).unwrap();
        assert!((shifted.value - direct.value).abs() < 1e-9);
        assert_eq!(shifted.model, SphereModel::UnitS2);
    }

    #[test]
    fn s2_shift_edge_counts() {
        let one = EnergyValue {
            value: 3.25,
            model: SphereModel::Riemann,
            n: 1,
        };
        assert_eq!(riemann_energy_to_s2(one).unwrap().value, 3.25);
        let two = EnergyValue {
            value: 0.0,
            model: SphereModel::Riemann,
            n: 2,
        };
        let shifted = riemann_energy_to_s2(two).unwrap();
        assert!((shifted.value + std::f64::consts::LN_2).abs() < 1e-15);
        // wrong model tag is rejected
        assert!(riemann_energy_to_s2(shifted).is_err());
    }
}
