//! Network geometry, large-scale fading, pilots and channel estimation.

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Receiver noise temperature in kelvin.
pub const NOISE_TEMPERATURE_K: f64 = 290.0;

/// Scenario parameters. Defaults follow the reference simulation setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area_side_km: f64,
    pub num_aps: usize,
    pub num_users: usize,
    pub antennas_per_ap: usize,
    pub low_res_antennas: usize,
    pub users_per_ap: usize,
    pub coherence_samples: usize,
    pub pilot_samples: usize,
    pub pilot_power_watt: f64,
    pub uplink_power_watt: f64,
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub shadowing_std_db: f64,
    pub ap_height_m: f64,
    pub user_height_m: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_side_km: 1.0,
            num_aps: 50,
            num_users: 8,
            antennas_per_ap: 4,
            low_res_antennas: 3,
            users_per_ap: 5,
            coherence_samples: 10,
            pilot_samples: 10,
            pilot_power_watt: 0.1,
            uplink_power_watt: 0.1,
            carrier_ghz: 1.9,
            bandwidth_hz: 20e6,
            noise_figure_db: 9.0,
            shadowing_std_db: 8.0,
            ap_height_m: 15.0,
            user_height_m: 1.65,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Number of high-resolution antennas per AP.
    pub fn high_res_antennas(&self) -> usize {
        self.antennas_per_ap - self.low_res_antennas
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_aps == 0 {
            return fail("at least one AP is required".into());
        }
        if self.num_users == 0 {
            return fail("at least one user is required".into());
        }
        if self.antennas_per_ap == 0 {
            return fail("APs need at least one antenna".into());
        }
        if self.users_per_ap == 0 || self.users_per_ap > self.num_users {
            return fail(format!(
                "users per AP must lie in 1..={} (got {})",
                self.num_users, self.users_per_ap
            ));
        }
        if self.num_users > self.num_aps * self.users_per_ap {
            return fail(format!(
                "{} users cannot all be served by {} APs with {} users each",
                self.num_users, self.num_aps, self.users_per_ap
            ));
        }
        if self.low_res_antennas > self.antennas_per_ap {
            return fail(format!(
                "{} low-resolution antennas exceed {} antennas per AP",
                self.low_res_antennas, self.antennas_per_ap
            ));
        }
        if self.pilot_samples == 0 {
            return fail("pilot length must be at least one sample".into());
        }
        let positive = [
            ("area side", self.area_side_km),
            ("pilot power", self.pilot_power_watt),
            ("uplink power", self.uplink_power_watt),
            ("carrier frequency", self.carrier_ghz),
            ("bandwidth", self.bandwidth_hz),
            ("AP height", self.ap_height_m),
            ("user height", self.user_height_m),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return fail(format!("{name} must be positive and finite (got {value})"));
            }
        }
        if self.shadowing_std_db.is_nan() || self.shadowing_std_db < 0.0 {
            return fail("shadowing deviation must be non-negative".into());
        }
        Ok(())
    }
}

/// AP and user coordinates in km.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Positions {
    pub aps: Vec<[f64; 2]>,
    pub users: Vec<[f64; 2]>,
}

impl Positions {
    pub fn distance_km(&self, m: usize, k: usize) -> f64 {
        let [ax, ay] = self.aps[m];
        let [ux, uy] = self.users[k];
        (ax - ux).hypot(ay - uy)
    }
}

/// Drops APs and users uniformly over the `D x D` square.
pub fn place_nodes(config: &ScenarioConfig, seed: u64) -> Positions {
    let mut rng = stream_rng(seed, Stream::Placement, &[]);
    let side = config.area_side_km;
    let mut draw = |count: usize| -> Vec<[f64; 2]> {
        (0..count)
            .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
            .collect()
    };
    let aps = draw(config.num_aps);
    let users = draw(config.num_users);
    Positions { aps, users }
}

/// Three-slope path-loss model.
///
/// With `f` in MHz, heights in metres and `d` in km:
///
/// ```text
/// L      = 46.3 + 33.9 log10 f - 13.82 log10 h_AP
///          - (1.1 log10 f - 0.7) h_UE + (1.56 log10 f - 0.8)
/// PL(d)  = -L - 35 log10 d                          d > d1
///        = -L - 15 log10 d1 - 20 log10 d            d0 < d <= d1
///        = -L - 15 log10 d1 - 20 log10 d0           d <= d0
/// ```
///
/// with breakpoints `d0 = 10 m` and `d1 = 50 m`. The value is a gain in dB
/// (negative for any realistic geometry).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeSlope {
    pub offset_db: f64,
    pub d0_km: f64,
    pub d1_km: f64,
}

impl ThreeSlope {
    pub const D0_KM: f64 = 0.010;
    pub const D1_KM: f64 = 0.050;

    pub fn from_config(config: &ScenarioConfig) -> Self {
        let f_mhz = config.carrier_ghz * 1e3;
        let lf = f_mhz.log10();
        let offset_db = 46.3 + 33.9 * lf - 13.82 * config.ap_height_m.log10() - (1.1 * lf - 0.7) * config.user_height_m
            + (1.56 * lf - 0.8);
        Self {
            offset_db,
            d0_km: Self::D0_KM,
            d1_km: Self::D1_KM,
        }
    }

    /// Outer slope, valid beyond `d1`.
    pub fn far(&self, d_km: f64) -> f64 {
        -self.offset_db - 35.0 * d_km.log10()
    }

    /// Middle slope, valid on `(d0, d1]`.
    pub fn mid(&self, d_km: f64) -> f64 {
        -self.offset_db - 15.0 * self.d1_km.log10() - 20.0 * d_km.log10()
    }

    pub fn gain_db(&self, d_km: f64) -> f64 {
        if d_km > self.d1_km {
            self.far(d_km)
        } else if d_km > self.d0_km {
            self.mid(d_km)
        } else {
            self.mid(self.d0_km)
        }
    }
}

/// Path-loss gain in dB at `distance_km`.
pub fn path_loss(distance_km: f64, config: &ScenarioConfig) -> f64 {
    ThreeSlope::from_config(config).gain_db(distance_km.max(0.0))
}

/// `beta[m, k] = PL(d_mk) * 10^(sigma z_mk / 10)` with i.i.d. standard normal `z`.
pub fn large_scale_fading(positions: &Positions, config: &ScenarioConfig, seed: u64) -> Array2<f64> {
    let model = ThreeSlope::from_config(config);
    let mut rng = stream_rng(seed, Stream::Shadowing, &[]);
    let (m_count, k_count) = (positions.aps.len(), positions.users.len());
    let mut beta = Array2::zeros((m_count, k_count));
    for m in 0..m_count {
        for k in 0..k_count {
            let z: f64 = StandardNormal.sample(&mut rng);
            let pl_db = model.gain_db(positions.distance_km(m, k));
            beta[[m, k]] = 10f64.powf((pl_db + config.shadowing_std_db * z) / 10.0);
        }
    }
    beta
}

/// Thermal noise power `k_B T B F` in watts.
pub fn noise_power_watt(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    BOLTZMANN * NOISE_TEMPERATURE_K * bandwidth_hz * 10f64.powf(noise_figure_db / 10.0)
}

/// Pilot and data transmit powers normalized by the noise power.
pub fn normalized_snrs(config: &ScenarioConfig) -> (f64, f64) {
    let noise = noise_power_watt(config.bandwidth_hz, config.noise_figure_db);
    (config.pilot_power_watt / noise, config.uplink_power_watt / noise)
}

/// Pilot indices into an orthonormal book of `tau_p` sequences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotAssignment {
    pub index: Vec<usize>,
    /// `|phi_k^H phi_i|^2`; binary because the book is orthonormal.
    pub gram: Array2<f64>,
}

impl PilotAssignment {
    pub fn from_indices(index: Vec<usize>) -> Self {
        let k_count = index.len();
        let gram = Array2::from_shape_fn(
            (k_count, k_count),
            |(a, b)| {
                if index[a] == index[b] {
                    1.0
                } else {
                    0.0
                }
            },
        );
        Self { index, gram }
    }
}

/// Orthogonal pilots when `K <= tau_p`, otherwise uniform draws from the book.
pub fn assign_pilots(num_users: usize, tau_p: usize, seed: u64) -> PilotAssignment {
    assert!(tau_p >= 1, "pilot length must be positive");
    let index = if num_users <= tau_p {
        (0..num_users).collect()
    } else {
        let mut rng = stream_rng(seed, Stream::Pilots, &[]);
        (0..num_users).map(|_| rng.random_range(0..tau_p)).collect()
    };
    PilotAssignment::from_indices(index)
}

/// MMSE estimation statistics: effective gains `gamma` and scaling `c`.
///
/// ```text
/// c_mk     = sqrt(tau_p rho_p) beta_mk / (tau_p rho_p sum_k' beta_mk' |phi_k'^H phi_k|^2 + 1)
/// gamma_mk = sqrt(tau_p rho_p) beta_mk c_mk
/// ```
pub fn effective_gain(
    beta: &Array2<f64>,
    pilot_gram: &Array2<f64>,
    rho_p: f64,
    tau_p: usize,
) -> (Array2<f64>, Array2<f64>) {
    let (m_count, k_count) = beta.dim();
    let scale = tau_p as f64 * rho_p;
    let root = scale.sqrt();
    let mut gamma = Array2::zeros((m_count, k_count));
    let mut c_coef = Array2::zeros((m_count, k_count));
    for m in 0..m_count {
        for k in 0..k_count {
            let contamination: f64 = (0..k_count).map(|j| beta[[m, j]] * pilot_gram[[j, k]]).sum();
            let denom = scale * contamination + 1.0;
            c_coef[[m, k]] = root * beta[[m, k]] / denom;
            gamma[[m, k]] = scale * beta[[m, k]] * beta[[m, k]] / denom;
        }
    }
    (gamma, c_coef)
}

/// Everything the analysis needs about one drop of the network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    pub positions: Positions,
    pub beta: Array2<f64>,
    pub pilots: PilotAssignment,
    pub gamma: Array2<f64>,
    pub c_coef: Array2<f64>,
    pub rho_p: f64,
    pub rho_u: f64,
    pub tau_p: usize,
    pub antennas_per_ap: usize,
}

impl NetworkInstance {
    /// Builds a drop from `config`, keyed by `config.rng_seed`.
    pub fn generate(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let seed = config.rng_seed;
        let positions = place_nodes(config, seed);
        let beta = large_scale_fading(&positions, config, seed);
        let pilots = assign_pilots(config.num_users, config.pilot_samples, seed);
        let (rho_p, rho_u) = normalized_snrs(config);
        Ok(Self::from_parts(
            positions,
            beta,
            pilots,
            rho_p,
            rho_u,
            config.pilot_samples,
            config.antennas_per_ap,
        ))
    }

    /// Assembles an instance from explicit large-scale gains.
    pub fn from_parts(
        positions: Positions,
        beta: Array2<f64>,
        pilots: PilotAssignment,
        rho_p: f64,
        rho_u: f64,
        tau_p: usize,
        antennas_per_ap: usize,
    ) -> Self {
        let (gamma, c_coef) = effective_gain(&beta, &pilots.gram, rho_p, tau_p);
        Self {
            positions,
            beta,
            pilots,
            gamma,
            c_coef,
            rho_p,
            rho_u,
            tau_p,
            antennas_per_ap,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.beta.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.beta.ncols()
    }
}

/// One small-scale realization, indexed `[m, k, n]`.
#[derive(Clone, Debug)]
pub struct ChannelDraw {
    pub g: Array3<Complex64>,
    pub g_hat: Array3<Complex64>,
    pub g_tilde: Array3<Complex64>,
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Draws true channels and forms their MMSE estimates from a simulated pilot
/// observation, so estimates of pilot-sharing users are correlated.
pub fn draw_channels_with<R: Rng + ?Sized>(instance: &NetworkInstance, rng: &mut R) -> ChannelDraw {
    let (m_count, k_count, n_count) = (instance.num_aps(), instance.num_users(), instance.antennas_per_ap);
    let num_pilots = instance.pilots.index.iter().max().map_or(0, |&p| p + 1);
    let root = (instance.tau_p as f64 * instance.rho_p).sqrt();
    let mut g = Array3::zeros((m_count, k_count, n_count));
    let mut g_hat = Array3::zeros((m_count, k_count, n_count));
    let mut noise = vec![Complex64::new(0.0, 0.0); num_pilots * n_count];
    // Received pilot signal projected on each book entry, per antenna.
    let mut projected = vec![Complex64::new(0.0, 0.0); num_pilots * n_count];
    for m in 0..m_count {
        for k in 0..k_count {
            for n in 0..n_count {
                g[[m, k, n]] = complex_gaussian(rng, instance.beta[[m, k]]);
            }
        }
        for w in noise.iter_mut() {
            *w = complex_gaussian(rng, 1.0);
        }
        projected.copy_from_slice(&noise);
        for k in 0..k_count {
            let p = instance.pilots.index[k];
            for n in 0..n_count {
                projected[p * n_count + n] += root * g[[m, k, n]];
            }
        }
        for k in 0..k_count {
            let p = instance.pilots.index[k];
            for n in 0..n_count {
                g_hat[[m, k, n]] = instance.c_coef[[m, k]] * projected[p * n_count + n];
            }
        }
    }
    let g_tilde = &g - &g_hat;
    ChannelDraw { g, g_hat, g_tilde }
}

pub fn draw_channels(instance: &NetworkInstance, seed: u64) -> ChannelDraw {
    let mut rng = stream_rng(seed, Stream::Channel, &[]);
    draw_channels_with(instance, &mut rng)
}
