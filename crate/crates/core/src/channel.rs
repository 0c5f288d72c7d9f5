//! Multipath channel generation (sum of rank-one path contributions over a
//! uniform linear array) and the distance-based large-scale loss.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// One propagation path: complex gain plus arrival/departure angles (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    pub aoa: f64,
    pub aod: f64,
}

/// A drawn small-scale channel: `h` is `n_ant x n_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
    pub paths: Vec<PathComponent>,
}

impl ChannelRealization {
    pub fn n_ant(&self) -> usize {
        self.h.rows()
    }

    pub fn n_t(&self) -> usize {
        self.h.cols()
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }
}

/// Large-scale path loss at a carrier frequency and distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeScale {
    pub fc_ghz: f64,
    pub d_m: f64,
    /// Path loss in dB.
    pub pl_db: f64,
    /// Linear power gain, `10^(-pl_db/10)`.
    pub rho: f64,
}

/// Half-wavelength uniform linear array steering vector
/// `(1/sqrt(n)) [1, e^{j pi sin(phi)}, ..., e^{j pi (n-1) sin(phi)}]^T`,
/// returned as an `n x 1` column with unit Euclidean norm.
pub fn array_response(n_elems: usize, phi: f64) -> ComplexMatrix {
    assert!(n_elems >= 1, "array needs at least one element");
    let norm = 1.0 / (n_elems as f64).sqrt();
    let step = std::f64::consts::PI * phi.sin();
    ComplexMatrix::from_fn(n_elems, 1, |i, _| {
        Complex64::from_polar(norm, step * i as f64)
    })
}

/// Assemble the channel from explicit path components:
/// `h = sqrt(n_t*n_ant/L) * sum_l gain_l * a_r(aoa_l) a_t^H(aod_l)`.
pub fn channel_from_paths(n_ant: usize, n_t: usize, paths: &[PathComponent]) -> Result<ChannelRealization> {
    if n_ant == 0 || n_t == 0 || paths.is_empty() {
        return Err(Error::InvalidParameter(
            "channel_from_paths: counts and path list must be nonempty".into(),
        ));
    }
    let l = paths.len();
    let scale = ((n_t * n_ant) as f64 / l as f64).sqrt();
    let mut h = ComplexMatrix::zeros(n_ant, n_t);
    for p in paths {
        let ar = array_response(n_ant, p.aoa);
        let at = array_response(n_t, p.aod);
        let outer = ar.matmul(&at.hermitian())?;
        h = h.add(&outer.scale_complex(p.gain))?;
    }
    Ok(ChannelRealization { h: h.scale(scale), paths: paths.to_vec() })
}

/// Draw a channel with `l_paths` i.i.d. paths: gains standard complex normal,
/// arrival/departure angles uniform on [-pi/2, pi/2]. The draw order per path
/// is fixed (gain re, gain im, aoa, aod), so a given random stream always
/// produces a bit-identical realization.
pub fn gen_channel<R: Rng + ?Sized>(
    n_ant: usize,
    n_t: usize,
    l_paths: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if n_ant == 0 || n_t == 0 || l_paths == 0 {
        return Err(Error::InvalidParameter(
            "gen_channel: all counts must be at least 1".into(),
        ));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let paths: Vec<PathComponent> = (0..l_paths)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let aoa = rng.random_range(-half_pi..half_pi);
            let aod = rng.random_range(-half_pi..half_pi);
            PathComponent {
                gain: Complex64::new(re * inv_sqrt2, im * inv_sqrt2),
                aoa,
                aod,
            }
        })
        .collect();
    channel_from_paths(n_ant, n_t, &paths)
}

/// Distance-based path loss `PL = 32.4 + 20 log10(fc) + 30 log10(d)` with
/// `fc` in GHz and `d` in meters, and the linear gain `rho = 10^(-PL/10)`.
pub fn path_loss(fc_ghz: f64, d_m: f64) -> Result<LargeScale> {
    if fc_ghz <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "path_loss: carrier frequency must be positive, got {fc_ghz}"
        )));
    }
    if d_m < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "path_loss: distance must be at least 1 m, got {d_m}"
        )));
    }
    let pl_db = 32.4 + 20.0 * fc_ghz.log10() + 30.0 * d_m.log10();
    Ok(LargeScale {
        fc_ghz,
        d_m,
        pl_db,
        rho: 10f64.powf(-pl_db / 10.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn array_response_single_element() {
        let a = array_response(1, 0.73);
        assert_eq!(a.shape(), (1, 1));
        assert!((a.get(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn array_response_broadside() {
        let a = array_response(4, 0.0);
        for i in 0..4 {
            assert!((a.get(i, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn array_response_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(1..40usize);
            let phi = rng.random_range(-1.5..1.5f64);
            let a = array_response(n, phi);
            assert!((a.frobenius_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_path_closed_form() {
        let paths = [PathComponent { gain: Complex64::new(1.0, 0.0), aoa: 0.0, aod: 0.0 }];
        let ch = channel_from_paths(4, 2, &paths).unwrap();
        // sqrt(n_t*n_ant) * a_r a_t^H with broadside angles: every entry equals
        // sqrt(8) * (1/2) * (1/sqrt(2)).
        let want = (8f64).sqrt() * 0.5 * std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..4 {
            for j in 0..2 {
                assert!((ch.h.get(i, j) - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_bounded_by_path_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = gen_channel(6, 5, 2, &mut rng).unwrap();
        let na = nalgebra::DMatrix::from_fn(6, 5, |i, j| ch.h.get(i, j));
        let svd = na.svd(false, false);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|s| **s > 1e-9 * smax).count();
        assert!(rank <= 2, "rank {rank} exceeds path count");
    }

    #[test]
    fn frobenius_normalization_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (n_ant, n_t, l) = (8usize, 4usize, 10usize);
        let trials = 10_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let ch = gen_channel(n_ant, n_t, l, &mut rng).unwrap();
            let f = ch.h.frobenius_norm();
            acc += f * f;
        }
        let mean = acc / trials as f64;
        let target = (n_ant * n_t) as f64;
        assert!(
            (mean - target).abs() < 0.05 * target,
            "mean ||H||_F^2 = {mean}, expected about {target}"
        );
    }

    #[test]
    fn same_seed_same_channel() {
        let a = gen_channel(5, 3, 4, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = gen_channel(5, 3, 4, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn columns_live_in_receive_steering_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ch = gen_channel(6, 3, 2, &mut rng).unwrap();
        // Project a column of H onto the orthogonal complement of the two
        // receive steering vectors; the residual must vanish.
        let a0 = array_response(6, ch.paths[0].aoa);
        let a1 = array_response(6, ch.paths[1].aoa);
        let basis = nalgebra::DMatrix::from_fn(6, 2, |i, j| if j == 0 { a0.get(i, 0) } else { a1.get(i, 0) });
        let col = nalgebra::DVector::from_fn(6, |i, _| ch.h.get(i, 0));
        let qr = basis.qr();
        let q = qr.q();
        let resid = &col - &q * (q.adjoint() * &col);
        assert!(resid.norm() < 1e-9 * col.norm().max(1.0));
    }

    #[test]
    fn path_loss_reference_points() {
        let base = path_loss(1.0, 1.0).unwrap();
        assert!((base.pl_db - 32.4).abs() < 1e-12);

        let op = path_loss(28.0, 100.0).unwrap();
        let expect = 32.4 + 20.0 * 28f64.log10() + 60.0;
        assert!((op.pl_db - expect).abs() < 1e-12);
        assert!((op.pl_db - 121.34).abs() < 5e-3);
        assert!((op.rho - 10f64.powf(-12.134)).abs() < 1e-3 * op.rho.max(1e-300));
    }

    #[test]
    fn doubling_distance_adds_nine_db() {
        let a = path_loss(28.0, 50.0).unwrap();
        let b = path_loss(28.0, 100.0).unwrap();
        assert!((b.pl_db - a.pl_db - 30.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn path_loss_rejects_bad_inputs() {
        assert!(path_loss(0.0, 10.0).is_err());
        assert!(path_loss(28.0, 0.5).is_err());
    }
}
