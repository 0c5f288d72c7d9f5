//! System-level figures of merit: achievable rate, receiver power
//! consumption, energy efficiency, and the feasibility checks that every
//! selection algorithm in this crate optimizes against.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::topology::ConnectionMatrix;

/// Singular-value cutoff used for the noise-covariance pseudo-inverse.
const PINV_TOL: f64 = 1e-12;

/// How the low-noise-amplifier term of the power model is accounted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LnaMode {
    /// One LNA per active antenna (default).
    #[default]
    PerElement,
    /// LNA sum nested inside the RF-chain sum, so each active antenna's LNA
    /// is counted once per RF chain.
    Literal,
}

/// All scalar system parameters. Powers are in watts; dBm-valued inputs are
/// converted once at configuration load.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub n_t: usize,
    pub n_ant: usize,
    pub n_rf: usize,
    pub n_s: usize,
    /// Transmit power (W).
    pub p_t: f64,
    /// Noise power (W).
    pub n0: f64,
    /// Insertion loss in [0, 1].
    pub beta: f64,
    /// Baseband processing power (W), static.
    pub p_bb: f64,
    /// Per-RF-chain circuit power (W).
    pub p_rf: f64,
    /// Per-ADC power (W).
    pub p_adc: f64,
    /// Per-LNA power (W).
    pub p_lna: f64,
    /// Per-phase-shifter power (W).
    pub p_ps: f64,
    /// Max power support of one RF chain (W).
    pub p_o: f64,
    /// System power cap (W).
    pub p_max: f64,
    /// QoS rate requirement (bits/s/Hz).
    pub r_req: f64,
    /// Large-scale gain (linear).
    pub rho: f64,
    /// LNA accounting used wherever this struct travels.
    pub lna_mode: LnaMode,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_ant == 0 || self.n_rf == 0 || self.n_s == 0 {
            return Err(Error::InvalidParameter("all counts must be positive".into()));
        }
        if !(self.n_s <= self.n_rf && self.n_rf <= self.n_ant) {
            return Err(Error::InvalidParameter(format!(
                "need n_s <= n_rf <= n_ant, got {} / {} / {}",
                self.n_s, self.n_rf, self.n_ant
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [0,1], got {}",
                self.beta
            )));
        }
        for (name, v) in [
            ("p_t", self.p_t),
            ("n0", self.n0),
            ("p_bb", self.p_bb),
            ("p_rf", self.p_rf),
            ("p_adc", self.p_adc),
            ("p_lna", self.p_lna),
            ("p_ps", self.p_ps),
            ("p_o", self.p_o),
            ("p_max", self.p_max),
            ("rho", self.rho),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a finite non-negative number, got {v}"
                )));
            }
        }
        if self.n0 <= 0.0 {
            return Err(Error::InvalidParameter("noise power must be positive".into()));
        }
        Ok(())
    }
}

/// Binary on/off decisions for RF chains and antennas.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionState {
    pub delta: Vec<bool>,
    pub theta: Vec<bool>,
}

impl SelectionState {
    pub fn all_on(n_rf: usize, n_ant: usize) -> Self {
        Self {
            delta: vec![true; n_rf],
            theta: vec![true; n_ant],
        }
    }

    pub fn all_off(n_rf: usize, n_ant: usize) -> Self {
        Self {
            delta: vec![false; n_rf],
            theta: vec![false; n_ant],
        }
    }

    pub fn active_rf(&self) -> usize {
        self.delta.iter().filter(|&&b| b).count()
    }

    pub fn active_ant(&self) -> usize {
        self.theta.iter().filter(|&&b| b).count()
    }
}

/// Analog and baseband beamformer pair. Every analog entry must have unit
/// modulus; the constructor enforces it.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformers {
    w_rf: ComplexMatrix,
    w_bb: ComplexMatrix,
}

impl Beamformers {
    const UNIT_MODULUS_TOL: f64 = 1e-9;

    pub fn new(w_rf: ComplexMatrix, w_bb: ComplexMatrix) -> Result<Self> {
        if w_bb.cols() != w_rf.rows() {
            return Err(Error::DimensionMismatch(format!(
                "beamformers: w_bb {}x{} does not chain with w_rf {}x{}",
                w_bb.rows(),
                w_bb.cols(),
                w_rf.rows(),
                w_rf.cols()
            )));
        }
        for (idx, v) in w_rf.entries().iter().enumerate() {
            if (v.norm() - 1.0).abs() > Self::UNIT_MODULUS_TOL {
                return Err(Error::InvalidParameter(format!(
                    "analog beamformer entry {idx} has modulus {:.6}, expected 1",
                    v.norm()
                )));
            }
        }
        Ok(Self { w_rf, w_bb })
    }

    /// Random initialization: analog entries `e^{j theta}` with phases
    /// uniform on [0, 2pi), baseband entries standard complex normal.
    pub fn random<R: Rng + ?Sized>(n_s: usize, n_rf: usize, n_ant: usize, rng: &mut R) -> Self {
        let two_pi = std::f64::consts::TAU;
        let w_rf = ComplexMatrix::from_fn(n_rf, n_ant, |_, _| {
            Complex64::from_polar(1.0, rng.random_range(0.0..two_pi))
        });
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let w_bb = ComplexMatrix::from_fn(n_s, n_rf, |_, _| {
            let re: f64 = rng.sample(rand_distr::StandardNormal);
            let im: f64 = rng.sample(rand_distr::StandardNormal);
            Complex64::new(re * inv_sqrt2, im * inv_sqrt2)
        });
        Self { w_rf, w_bb }
    }

    pub fn w_rf(&self) -> &ComplexMatrix {
        &self.w_rf
    }

    pub fn w_bb(&self) -> &ComplexMatrix {
        &self.w_bb
    }

    pub fn n_s(&self) -> usize {
        self.w_bb.rows()
    }

    pub fn n_rf(&self) -> usize {
        self.w_rf.rows()
    }

    pub fn n_ant(&self) -> usize {
        self.w_rf.cols()
    }
}

fn check_dims(
    p: &SystemParams,
    sel: &SelectionState,
    bf: &Beamformers,
    c: &ConnectionMatrix,
    h: &ChannelRealization,
) -> Result<()> {
    let ok = sel.delta.len() == p.n_rf
        && sel.theta.len() == p.n_ant
        && bf.n_rf() == p.n_rf
        && bf.n_ant() == p.n_ant
        && bf.n_s() == p.n_s
        && c.n_rf() == p.n_rf
        && c.n_ant() == p.n_ant
        && h.n_ant() == p.n_ant
        && h.n_t() == p.n_t;
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "params ({}T/{}ant/{}rf/{}s) vs delta {} theta {} w_rf {}x{} w_bb {}x{} c {}x{} h {}x{}",
            p.n_t,
            p.n_ant,
            p.n_rf,
            p.n_s,
            sel.delta.len(),
            sel.theta.len(),
            bf.n_rf(),
            bf.n_ant(),
            bf.n_s(),
            bf.n_rf(),
            c.n_rf(),
            c.n_ant(),
            h.n_ant(),
            h.n_t()
        )))
    }
}

/// Achievable rate in bits/s/Hz:
///
/// `R = log2 det( I + (P_T rho (1-beta))/(N0 N_T) * G * Q^+ )`
///
/// with signal Gram `G = W_BB D (C o W_RF) T H (.)^H` and noise covariance
/// `Q = W_BB (C o W_RF) (C o W_RF)^H W_BB^H`. The masked analog beamformer
/// appears in both terms. The determinant is evaluated through the symmetric
/// sandwich `det(I + s E G E)` with `E = (Q^+)^{1/2}`, which is the same
/// determinant but keeps the log-det argument Hermitian PSD.
pub fn achievable_rate(
    p: &SystemParams,
    sel: &SelectionState,
    bf: &Beamformers,
    c: &ConnectionMatrix,
    h: &ChannelRealization,
) -> Result<f64> {
    check_dims(p, sel, bf, c, h)?;
    let ctx = EvalContext::new(p, bf, c, h)?;
    ctx.rate(sel)
}

/// Receiver power consumption in watts. Every active element contributes its
/// component power; active links (selected chain, selected antenna, link
/// present) contribute one phase shifter each. In [`LnaMode::Literal`] the
/// per-antenna LNA sum is replicated once per RF chain.
pub fn power_consumption(
    p: &SystemParams,
    sel: &SelectionState,
    c: &ConnectionMatrix,
    mode: LnaMode,
) -> f64 {
    let rf_on = sel.active_rf() as f64;
    let ant_on = sel.active_ant() as f64;
    let mut links_on = 0usize;
    for n in 0..c.n_rf() {
        if !sel.delta[n] {
            continue;
        }
        for m in 0..c.n_ant() {
            if sel.theta[m] && c.get(n, m) {
                links_on += 1;
            }
        }
    }
    let lna_units = match mode {
        LnaMode::PerElement => ant_on,
        LnaMode::Literal => p.n_rf as f64 * ant_on,
    };
    p.p_bb + rf_on * (p.p_rf + p.p_adc) + lna_units * p.p_lna + links_on as f64 * p.p_ps
}

/// Rate divided by power, bits/J/Hz.
pub fn energy_efficiency(rate: f64, power: f64) -> Result<f64> {
    if power <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "energy efficiency needs positive power, got {power}"
        )));
    }
    Ok(rate / power)
}

/// Per-constraint verdict for one system state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    /// RF selections binary (holds by construction of `SelectionState`).
    pub binary_rf: bool,
    /// Antenna selections binary (holds by construction).
    pub binary_ant: bool,
    /// `n_s <= sum(delta) <= sum(theta)`.
    pub stream_bounds: bool,
    /// `rate >= r_req`.
    pub rate_qos: bool,
    /// `power <= p_max`.
    pub power_cap: bool,
    /// Per selected chain: `p_ps * sum_m theta_m C_nm <= (1-beta) p_o`.
    pub insertion_loss: bool,
    /// Every analog beamformer entry has unit modulus.
    pub unit_modulus: bool,
    pub rate: f64,
    pub power: f64,
}

impl ConstraintReport {
    pub fn feasible(&self) -> bool {
        self.binary_rf
            && self.binary_ant
            && self.stream_bounds
            && self.rate_qos
            && self.power_cap
            && self.insertion_loss
            && self.unit_modulus
    }
}

/// Stream-count bounds (the only constraint that needs no matrix work).
pub fn stream_bounds_ok(p: &SystemParams, sel: &SelectionState) -> bool {
    let d = sel.active_rf();
    let t = sel.active_ant();
    p.n_s <= d && d <= t
}

/// Insertion-loss budget per selected RF chain. Chains that are switched off
/// draw no phase-shifter power, so only `delta_n = 1` rows are tested.
pub fn insertion_loss_ok(p: &SystemParams, sel: &SelectionState, c: &ConnectionMatrix) -> bool {
    let budget = (1.0 - p.beta) * p.p_o;
    for n in 0..c.n_rf() {
        if !sel.delta[n] {
            continue;
        }
        let connected_on = (0..c.n_ant())
            .filter(|&m| sel.theta[m] && c.get(n, m))
            .count();
        if p.p_ps * connected_on as f64 > budget {
            return false;
        }
    }
    true
}

/// Evaluate every constraint of the selection problem and return the
/// per-constraint flags together with the rate and power that were computed
/// along the way.
pub fn check_constraints(
    p: &SystemParams,
    sel: &SelectionState,
    bf: &Beamformers,
    c: &ConnectionMatrix,
    h: &ChannelRealization,
) -> Result<ConstraintReport> {
    check_dims(p, sel, bf, c, h)?;
    let rate = achievable_rate(p, sel, bf, c, h)?;
    let power = power_consumption(p, sel, c, p.lna_mode);
    let unit_modulus = bf
        .w_rf()
        .entries()
        .iter()
        .all(|v| (v.norm() - 1.0).abs() <= Beamformers::UNIT_MODULUS_TOL);
    Ok(ConstraintReport {
        binary_rf: true,
        binary_ant: true,
        stream_bounds: stream_bounds_ok(p, sel),
        rate_qos: rate >= p.r_req,
        power_cap: power <= p.p_max,
        insertion_loss: insertion_loss_ok(p, sel, c),
        unit_modulus,
        rate,
        power,
    })
}

/// A fixed (params, beamformers, connection, channel) tuple with the
/// selection-independent pieces of the rate formula precomputed, so the
/// selection search loops only pay for the selection-dependent products.
pub struct EvalContext<'a> {
    pub params: &'a SystemParams,
    pub bf: &'a Beamformers,
    pub conn: &'a ConnectionMatrix,
    pub chan: &'a ChannelRealization,
    /// `P_T rho (1-beta) / (N0 N_T)`.
    snr_scale: f64,
    /// `C o W_RF`.
    masked_wrf: ComplexMatrix,
    /// `(Q^+)^{1/2}` for `Q = W_BB (C o W_RF) (.)^H W_BB^H`.
    noise_inv_sqrt: ComplexMatrix,
}

impl<'a> EvalContext<'a> {
    pub fn new(
        params: &'a SystemParams,
        bf: &'a Beamformers,
        conn: &'a ConnectionMatrix,
        chan: &'a ChannelRealization,
    ) -> Result<Self> {
        let sel_probe = SelectionState::all_on(params.n_rf, params.n_ant);
        check_dims(params, &sel_probe, bf, conn, chan)?;
        let masked_wrf = conn.to_mask().hadamard(bf.w_rf())?;
        let u = bf.w_bb().matmul(&masked_wrf)?;
        let q = u.matmul(&u.hermitian())?;
        let noise_inv_sqrt = q.psd_inverse_sqrt(PINV_TOL)?;
        let snr_scale = params.p_t * params.rho * (1.0 - params.beta) / (params.n0 * params.n_t as f64);
        Ok(Self {
            params,
            bf,
            conn,
            chan,
            snr_scale,
            masked_wrf,
            noise_inv_sqrt,
        })
    }

    pub fn rate(&self, sel: &SelectionState) -> Result<f64> {
        if sel.delta.len() != self.params.n_rf || sel.theta.len() != self.params.n_ant {
            return Err(Error::DimensionMismatch(format!(
                "selection ({}, {}) vs params ({}, {})",
                sel.delta.len(),
                sel.theta.len(),
                self.params.n_rf,
                self.params.n_ant
            )));
        }
        if self.snr_scale == 0.0 {
            return Ok(0.0);
        }
        let analog = self
            .masked_wrf
            .zero_rows(&sel.delta)?
            .zero_cols(&sel.theta)?;
        let t = self.bf.w_bb().matmul(&analog)?.matmul(&self.chan.h)?;
        let g = t.matmul(&t.hermitian())?;
        let e = &self.noise_inv_sqrt;
        let sandwich = e.matmul(&g)?.matmul(e)?;
        let arg = ComplexMatrix::identity(self.params.n_s).add(&sandwich.scale(self.snr_scale))?;
        Ok(arg.log2_det_hermitian_psd()?.max(0.0))
    }

    pub fn power(&self, sel: &SelectionState) -> f64 {
        power_consumption(self.params, sel, self.conn, self.params.lna_mode)
    }

    pub fn constraints(&self, sel: &SelectionState) -> Result<ConstraintReport> {
        let rate = self.rate(sel)?;
        let power = self.power(sel);
        let unit_modulus = self
            .bf
            .w_rf()
            .entries()
            .iter()
            .all(|v| (v.norm() - 1.0).abs() <= Beamformers::UNIT_MODULUS_TOL);
        Ok(ConstraintReport {
            binary_rf: true,
            binary_ant: true,
            stream_bounds: stream_bounds_ok(self.params, sel),
            rate_qos: rate >= self.params.r_req,
            power_cap: power <= self.params.p_max,
            insertion_loss: insertion_loss_ok(self.params, sel, self.conn),
            unit_modulus,
            rate,
            power,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_from_paths, gen_channel, PathComponent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Table-style reference parameters used across the tests.
    pub(crate) fn table_params(n_t: usize, n_ant: usize, n_rf: usize, n_s: usize) -> SystemParams {
        SystemParams {
            n_t,
            n_ant,
            n_rf,
            n_s,
            p_t: 0.1,
            n0: 10f64.powf(-8.5) / 1000.0,
            beta: 0.3,
            p_bb: 0.8,
            p_rf: 0.04,
            p_adc: 0.1,
            p_lna: 0.01,
            p_ps: 0.01,
            p_o: 10f64.powf(2.5) / 1000.0,
            p_max: 10f64.powf(4.4) / 1000.0,
            r_req: 3.0,
            rho: 10f64.powf(-12.134),
            lna_mode: LnaMode::PerElement,
        }
    }

    fn siso_setup(h11: Complex64, beta: f64) -> (SystemParams, SelectionState, Beamformers, ConnectionMatrix, ChannelRealization) {
        let mut p = table_params(1, 1, 1, 1);
        p.beta = beta;
        p.rho = 1e-9;
        let sel = SelectionState::all_on(1, 1);
        let bf = Beamformers::new(
            ComplexMatrix::from_rows(&[vec![Complex64::new(1.0, 0.0)]]).unwrap(),
            ComplexMatrix::from_rows(&[vec![Complex64::new(1.0, 0.0)]]).unwrap(),
        )
        .unwrap();
        let c = ConnectionMatrix::full(1, 1);
        let h = ChannelRealization {
            h: ComplexMatrix::from_rows(&[vec![h11]]).unwrap(),
            paths: vec![PathComponent { gain: h11, aoa: 0.0, aod: 0.0 }],
        };
        (p, sel, bf, c, h)
    }

    #[test]
    fn rate_zero_at_full_insertion_loss() {
        let (p, sel, bf, c, h) = siso_setup(Complex64::new(0.8, -0.3), 1.0);
        assert_eq!(achievable_rate(&p, &sel, &bf, &c, &h).unwrap(), 0.0);
    }

    #[test]
    fn rate_zero_with_no_antennas() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let p = table_params(2, 4, 2, 1);
        let bf = Beamformers::random(1, 2, 4, &mut rng);
        let c = ConnectionMatrix::full(2, 4);
        let h = gen_channel(4, 2, 3, &mut rng).unwrap();
        let sel = SelectionState {
            delta: vec![true, true],
            theta: vec![false; 4],
        };
        let r = achievable_rate(&p, &sel, &bf, &c, &h).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn siso_closed_form() {
        let h11 = Complex64::new(0.6, 0.45);
        let (p, sel, bf, c, h) = siso_setup(h11, 0.3);
        let got = achievable_rate(&p, &sel, &bf, &c, &h).unwrap();
        let snr = p.p_t * p.rho * (1.0 - p.beta) * h11.norm_sqr() / p.n0;
        let want = (1.0 + snr).log2();
        assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
    }

    #[test]
    fn rate_monotone_in_insertion_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let bf = Beamformers::random(2, 3, 6, &mut rng);
        let c = crate::topology::build_ldpc_connection(3, 6, 3, &mut rng).unwrap();
        let h = gen_channel(6, 2, 4, &mut rng).unwrap();
        let sel = SelectionState::all_on(3, 6);
        let mut prev = f64::INFINITY;
        for i in 0..=7 {
            let mut p = table_params(2, 6, 3, 2);
            p.rho = 1e-9;
            p.beta = 0.1 * i as f64;
            let r = achievable_rate(&p, &sel, &bf, &c, &h).unwrap();
            assert!(r <= prev + 1e-12, "rate increased when beta grew");
            prev = r;
        }
    }

    #[test]
    fn power_all_off_is_static_term() {
        let p = table_params(4, 128, 32, 4);
        let c = ConnectionMatrix::full(32, 128);
        let sel = SelectionState::all_off(32, 128);
        let got = power_consumption(&p, &sel, &c, LnaMode::PerElement);
        assert_eq!(got, 0.8);
    }

    #[test]
    fn power_reference_point_per_element() {
        // 32 chains on, 128 antennas on, 4 links per chain.
        let p = table_params(4, 128, 32, 4);
        let rows: Vec<Vec<usize>> = (0..32).map(|n| (0..4).map(|j| (4 * n + j) % 128).collect()).collect();
        let c = ConnectionMatrix::from_row_sets(32, 128, 4, &rows).unwrap();
        let sel = SelectionState::all_on(32, 128);
        let got = power_consumption(&p, &sel, &c, LnaMode::PerElement);
        assert!((got - 7.84).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn power_reference_point_literal() {
        let p = table_params(4, 128, 32, 4);
        let rows: Vec<Vec<usize>> = (0..32).map(|n| (0..4).map(|j| (4 * n + j) % 128).collect()).collect();
        let c = ConnectionMatrix::from_row_sets(32, 128, 4, &rows).unwrap();
        let sel = SelectionState::all_on(32, 128);
        let got = power_consumption(&p, &sel, &c, LnaMode::Literal);
        // LNA contribution becomes 32 * 128 * 0.01 = 40.96 W.
        let want = 0.8 + 32.0 * 0.14 + 40.96 + 1.28;
        assert!((got - want).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn power_monotone_in_each_flip() {
        let p = table_params(2, 5, 3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let c = crate::topology::build_ldpc_connection(3, 5, 3, &mut rng).unwrap();
        for mask in 0u32..(1 << 8) {
            let sel = SelectionState {
                delta: (0..3).map(|i| mask & (1 << i) != 0).collect(),
                theta: (0..5).map(|i| mask & (1 << (3 + i)) != 0).collect(),
            };
            let base = power_consumption(&p, &sel, &c, LnaMode::PerElement);
            for i in 0..3 {
                if !sel.delta[i] {
                    let mut up = sel.clone();
                    up.delta[i] = true;
                    assert!(power_consumption(&p, &up, &c, LnaMode::PerElement) >= base);
                }
            }
            for i in 0..5 {
                if !sel.theta[i] {
                    let mut up = sel.clone();
                    up.theta[i] = true;
                    assert!(power_consumption(&p, &up, &c, LnaMode::PerElement) >= base);
                }
            }
        }
    }

    #[test]
    fn energy_efficiency_basics() {
        let ee = energy_efficiency(1.1 * 9.88, 9.88).unwrap();
        assert!((ee - 1.1).abs() < 1e-12);
        assert_eq!(energy_efficiency(0.0, 2.0).unwrap(), 0.0);
        let full = energy_efficiency(3.0, 2.0).unwrap();
        let halved = energy_efficiency(3.0, 4.0).unwrap();
        assert!((full - 2.0 * halved).abs() < 1e-12);
        assert!(energy_efficiency(1.0, 0.0).is_err());
    }

    #[test]
    fn constraint_insertion_loss_reference() {
        // All-on, 4 links per chain: 4 * 0.01 = 0.04 <= 0.7 * 0.3162.
        let p = table_params(4, 8, 2, 1);
        let rows = vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]];
        let c = ConnectionMatrix::from_row_sets(2, 8, 4, &rows).unwrap();
        let sel = SelectionState::all_on(2, 8);
        assert!(insertion_loss_ok(&p, &sel, &c));
    }

    #[test]
    fn constraint_insertion_loss_binds_at_23_antennas() {
        // Full connection with Table values and beta = 0.3: the budget is
        // 0.7 * 0.31623 = 0.2214 W, so 23 phase shifters (0.23 W) break it
        // while 22 (0.22 W) do not.
        for n_ant in [22usize, 23] {
            let p = table_params(4, n_ant, 2, 1);
            let c = ConnectionMatrix::full(2, n_ant);
            let sel = SelectionState::all_on(2, n_ant);
            let ok = insertion_loss_ok(&p, &sel, &c);
            assert_eq!(ok, n_ant < 23, "n_ant={n_ant}");
        }
    }

    #[test]
    fn constraint_stream_bounds() {
        let p = table_params(2, 4, 3, 2);
        // One active chain when two streams are required.
        let sel = SelectionState {
            delta: vec![true, false, false],
            theta: vec![true; 4],
        };
        assert!(!stream_bounds_ok(&p, &sel));
        // Chains on but no antennas.
        let sel = SelectionState {
            delta: vec![true, true, false],
            theta: vec![false; 4],
        };
        assert!(!stream_bounds_ok(&p, &sel));
        let sel = SelectionState::all_on(3, 4);
        assert!(stream_bounds_ok(&p, &sel));
    }

    #[test]
    fn full_report_flags() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut p = table_params(2, 6, 3, 1);
        p.rho = 1e-9;
        p.r_req = 0.1;
        let bf = Beamformers::random(1, 3, 6, &mut rng);
        let c = crate::topology::build_ldpc_connection(3, 6, 3, &mut rng).unwrap();
        let h = gen_channel(6, 2, 4, &mut rng).unwrap();
        let sel = SelectionState::all_on(3, 6);
        let report = check_constraints(&p, &sel, &bf, &c, &h).unwrap();
        assert!(report.binary_rf && report.binary_ant && report.unit_modulus);
        assert!(report.stream_bounds && report.power_cap && report.insertion_loss);
        assert!(report.rate > 0.0);
        assert_eq!(report.feasible(), report.rate >= p.r_req);
    }

    #[test]
    fn context_rate_matches_free_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let mut p = table_params(2, 6, 3, 2);
        p.rho = 1e-9;
        let bf = Beamformers::random(2, 3, 6, &mut rng);
        let c = crate::topology::build_ldpc_connection(3, 6, 3, &mut rng).unwrap();
        let h = gen_channel(6, 2, 4, &mut rng).unwrap();
        let ctx = EvalContext::new(&p, &bf, &c, &h).unwrap();
        for mask in 0..8u32 {
            let sel = SelectionState {
                delta: (0..3).map(|i| mask & (1 << i) != 0).collect(),
                theta: vec![true; 6],
            };
            let a = ctx.rate(&sel).unwrap();
            let b = achievable_rate(&p, &sel, &bf, &c, &h).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_from_paths_used_in_rate_is_finite() {
        let paths = [PathComponent { gain: Complex64::new(0.3, 0.1), aoa: 0.2, aod: -0.4 }];
        let h = channel_from_paths(4, 2, &paths).unwrap();
        assert!(h.h.is_finite());
    }
}
