//! Closed-form uplink rate with MRC and AQNM, its coefficient form, and a
//! Monte Carlo check of every expectation the closed form relies on.
//!
//! For user `k` the rate is `log2(1 + Gamma_k / Lambda_k)` with
//!
//! ```text
//! Gamma_k  = rho eta_k (sum_m gamma_mk Tr(D_mk A_m))^2
//! Lambda_k = sum_i (delta1_ki + delta2_ki) eta_i + sum_{i != k} delta3_ki eta_i + lambda1_k
//!
//! delta1_ki = rho sum_m gamma_mk beta_mi Tr(D_mk A_m)
//! delta2_ki = rho sum_m gamma_mk gamma_mi Tr(D_mk A_m (I - A_m)) |phi_k^H phi_i|^2
//! delta3_ki = rho (sum_m gamma_mk beta_mi / beta_mk Tr(D_mk A_m))^2 |phi_k^H phi_i|^2
//! lambda1_k = sum_m gamma_mk Tr(D_mk A_m)
//! ```
//!
//! Since `delta3_kk eta_k = Gamma_k`, the SINR denominator plus numerator is
//! `sum_i (delta1 + delta2 + delta3)_ki eta_i + lambda1_k`.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adc_energy::{AdcProfile, EnergyReport, SelectionTensor};
use crate::channel::{complex_gaussian, draw_channels_with, NetworkInstance};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Per `(m, k)` traces of the selection-weighted impairment matrices.
#[derive(Clone, Debug)]
pub struct Traces {
    /// `Tr(D_mk A_m)`
    pub da: Array2<f64>,
    /// `Tr(D_mk A_m^2)`
    pub da_sq: Array2<f64>,
    /// `Tr(D_mk A_m (I - A_m))`
    pub da_q: Array2<f64>,
}

impl Traces {
    pub fn new(profile: &AdcProfile, selection: &SelectionTensor) -> Self {
        let (m_count, n_count, k_count) = selection.dim();
        let mut da = Array2::zeros((m_count, k_count));
        let mut da_sq = Array2::zeros((m_count, k_count));
        let mut da_q = Array2::zeros((m_count, k_count));
        for m in 0..m_count {
            for n in 0..n_count {
                let a = profile.alpha[[m, n]];
                for k in 0..k_count {
                    if selection.get(m, n, k) {
                        da[[m, k]] += a;
                        da_sq[[m, k]] += a * a;
                        da_q[[m, k]] += a * (1.0 - a);
                    }
                }
            }
        }
        Self { da, da_sq, da_q }
    }
}

/// Power-independent coefficients of the SINR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub delta1: Array2<f64>,
    pub delta2: Array2<f64>,
    pub delta3: Array2<f64>,
    pub lambda1: Vec<f64>,
}

impl Coefficients {
    pub fn new(instance: &NetworkInstance, profile: &AdcProfile, selection: &SelectionTensor) -> Self {
        let traces = Traces::new(profile, selection);
        Self::from_traces(instance, &traces)
    }

    pub fn from_traces(instance: &NetworkInstance, traces: &Traces) -> Self {
        let (m_count, k_count) = instance.beta.dim();
        let rho = instance.rho_u;
        let (beta, gamma, gram) = (&instance.beta, &instance.gamma, &instance.pilots.gram);
        let mut delta1 = Array2::zeros((k_count, k_count));
        let mut delta2 = Array2::zeros((k_count, k_count));
        let mut delta3 = Array2::zeros((k_count, k_count));
        let mut lambda1 = vec![0.0; k_count];
        for k in 0..k_count {
            for m in 0..m_count {
                lambda1[k] += gamma[[m, k]] * traces.da[[m, k]];
            }
            for i in 0..k_count {
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                let mut coherent = 0.0;
                for m in 0..m_count {
                    let g = gamma[[m, k]];
                    if g == 0.0 {
                        continue;
                    }
                    d1 += g * beta[[m, i]] * traces.da[[m, k]];
                    d2 += g * gamma[[m, i]] * traces.da_q[[m, k]];
                    coherent += g * beta[[m, i]] / beta[[m, k]] * traces.da[[m, k]];
                }
                delta1[[k, i]] = rho * d1;
                delta2[[k, i]] = rho * d2 * gram[[k, i]];
                delta3[[k, i]] = rho * coherent * coherent * gram[[k, i]];
            }
        }
        Self {
            delta1,
            delta2,
            delta3,
            lambda1,
        }
    }

    pub fn num_users(&self) -> usize {
        self.lambda1.len()
    }

    /// User `k` has at least one useful serving antenna.
    pub fn is_active(&self, k: usize) -> bool {
        self.lambda1[k] > 0.0
    }

    pub fn gamma_num(&self, k: usize, eta: &[f64]) -> f64 {
        self.delta3[[k, k]] * eta[k]
    }

    pub fn lambda_den(&self, k: usize, eta: &[f64]) -> f64 {
        let mut acc = self.lambda1[k];
        for (i, &e) in eta.iter().enumerate() {
            acc += (self.delta1[[k, i]] + self.delta2[[k, i]]) * e;
            if i != k {
                acc += self.delta3[[k, i]] * e;
            }
        }
        acc
    }

    /// Per-user rates in bit/s/Hz; zero for users without serving antennas.
    pub fn rates(&self, eta: &[f64]) -> Vec<f64> {
        (0..self.num_users())
            .map(|k| {
                if !self.is_active(k) {
                    return 0.0;
                }
                let num = self.gamma_num(k, eta);
                let den = self.lambda_den(k, eta);
                (1.0 + num / den).log2()
            })
            .collect()
    }

    pub fn sum_rate(&self, eta: &[f64]) -> f64 {
        self.rates(eta).iter().sum()
    }

    pub fn breakdown(&self, eta: &[f64]) -> RateBreakdown {
        let k_count = self.num_users();
        let gamma_num: Vec<f64> = (0..k_count).map(|k| self.gamma_num(k, eta)).collect();
        let lambda_den: Vec<f64> = (0..k_count).map(|k| self.lambda_den(k, eta)).collect();
        RateBreakdown {
            rate_bps_hz: self.rates(eta),
            gamma_num,
            lambda_den,
            delta1: self.delta1.clone(),
            delta2: self.delta2.clone(),
            delta3: self.delta3.clone(),
            lambda1: self.lambda1.clone(),
        }
    }
}

/// Signal and interference-plus-noise powers for every user, with the
/// coefficient decomposition that feeds power control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown {
    pub gamma_num: Vec<f64>,
    pub lambda_den: Vec<f64>,
    pub delta1: Array2<f64>,
    pub delta2: Array2<f64>,
    pub delta3: Array2<f64>,
    pub lambda1: Vec<f64>,
    pub rate_bps_hz: Vec<f64>,
}

pub fn check_power(eta: &[f64]) -> Result<()> {
    for (user, &value) in eta.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidPower { user, value });
        }
    }
    Ok(())
}

/// Closed-form rates for a given selection and power vector.
pub fn rate_terms(
    instance: &NetworkInstance,
    profile: &AdcProfile,
    selection: &SelectionTensor,
    eta: &[f64],
) -> Result<RateBreakdown> {
    assert_eq!(eta.len(), instance.num_users());
    check_power(eta)?;
    Ok(Coefficients::new(instance, profile, selection).breakdown(eta))
}

/// `Lambda_k` evaluated term by term as the theorem states it, without the
/// coefficient regrouping.
pub fn lambda_direct(
    instance: &NetworkInstance,
    profile: &AdcProfile,
    selection: &SelectionTensor,
    eta: &[f64],
) -> Vec<f64> {
    let t = Traces::new(profile, selection);
    let (m_count, k_count) = instance.beta.dim();
    let (beta, gamma, gram, rho) = (&instance.beta, &instance.gamma, &instance.pilots.gram, instance.rho_u);
    (0..k_count)
        .map(|k| {
            let mut contamination = 0.0;
            for i in (0..k_count).filter(|&i| i != k) {
                let s: f64 = (0..m_count)
                    .filter(|&m| gamma[[m, k]] > 0.0)
                    .map(|m| gamma[[m, k]] * beta[[m, i]] / beta[[m, k]] * t.da[[m, k]])
                    .sum();
                contamination += eta[i] * s * s * gram[[k, i]];
            }
            let mut leakage = 0.0;
            for i in 0..k_count {
                leakage += eta[i]
                    * (0..m_count)
                        .map(|m| gamma[[m, k]] * beta[[m, i]] * t.da[[m, k]])
                        .sum::<f64>();
            }
            let noise: f64 = (0..m_count).map(|m| gamma[[m, k]] * t.da[[m, k]]).sum();
            let quant: f64 = (0..m_count)
                .map(|m| {
                    let load: f64 = (0..k_count).map(|i| eta[i] * gamma[[m, i]] * gram[[k, i]]).sum();
                    gamma[[m, k]] * load * t.da_q[[m, k]]
                })
                .sum();
            rho * contamination + rho * leakage + noise + rho * quant
        })
        .collect()
}

pub fn sum_rate(breakdown: &RateBreakdown) -> f64 {
    breakdown.rate_bps_hz.iter().sum()
}

/// Sum-rate energy efficiency in bit/s/Hz/W.
pub fn sree(sum_rate: f64, energy: &EnergyReport) -> Result<f64> {
    if energy.total_watt <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok(sum_rate / energy.total_watt)
}

/// Sum-rate divided by the number of users served per AP.
pub fn effective_sum_rate(sum_rate: f64, users_per_ap: usize) -> f64 {
    assert!(users_per_ap >= 1);
    sum_rate / users_per_ap as f64
}

/// Expected powers of the received-signal components for one user.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermValues {
    /// `|DS_k|^2`
    pub ds: f64,
    /// `E|BU_k|^2`
    pub bu: f64,
    /// `sum_{i != k} E|IUI_ki|^2`
    pub iui: f64,
    pub gn: f64,
    pub qn: f64,
}

impl TermValues {
    pub fn bu_iui(&self) -> f64 {
        self.bu + self.iui
    }

    /// Interference-plus-noise power, i.e. `Lambda_k`.
    pub fn lambda(&self) -> f64 {
        self.bu + self.iui + self.gn + self.qn
    }
}

/// Each expectation in the use-and-forget bound, evaluated separately.
///
/// These keep the `Tr(D A^2)` and `Tr(D A (I - A))` contributions apart;
/// summing them merges into `Tr(D A)` and reproduces `Lambda_k`.
pub fn closed_form_terms(
    instance: &NetworkInstance,
    profile: &AdcProfile,
    selection: &SelectionTensor,
    eta: &[f64],
    k: usize,
) -> TermValues {
    let t = Traces::new(profile, selection);
    let (m_count, k_count) = instance.beta.dim();
    let (beta, gamma, gram, rho) = (&instance.beta, &instance.gamma, &instance.pilots.gram, instance.rho_u);

    let coherent = |i: usize| -> f64 {
        (0..m_count)
            .filter(|&m| gamma[[m, k]] > 0.0)
            .map(|m| gamma[[m, k]] * beta[[m, i]] / beta[[m, k]] * t.da[[m, k]])
            .sum()
    };
    let spread = |i: usize| -> f64 {
        (0..m_count)
            .map(|m| gamma[[m, k]] * beta[[m, i]] * t.da_sq[[m, k]])
            .sum()
    };

    let signal: f64 = (0..m_count).map(|m| gamma[[m, k]] * t.da[[m, k]]).sum();
    let ds = rho * eta[k] * signal * signal;
    let bu = rho * eta[k] * spread(k);
    let iui = (0..k_count)
        .filter(|&i| i != k)
        .map(|i| {
            let c = coherent(i);
            rho * eta[i] * (gram[[k, i]] * c * c + spread(i))
        })
        .sum();
    let gn = (0..m_count).map(|m| gamma[[m, k]] * t.da_sq[[m, k]]).sum();
    let qn = (0..m_count)
        .map(|m| {
            let load: f64 = (0..k_count)
                .map(|i| eta[i] * (beta[[m, i]] + gamma[[m, i]] * gram[[k, i]]))
                .sum();
            gamma[[m, k]] * (rho * load + 1.0) * t.da_q[[m, k]]
        })
        .sum();
    TermValues { ds, bu, iui, gn, qn }
}

/// A sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }

    /// `|mean - reference|` in standard errors.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.mean - reference).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.se
        }
    }
}

/// Monte Carlo estimates of the received-signal component powers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McTermEstimate {
    pub ds: Estimate,
    pub bu: Estimate,
    pub iui: Estimate,
    pub bu_iui: Estimate,
    pub gn: Estimate,
    pub qn: Estimate,
    pub trials: usize,
}

struct TrialSample {
    /// `sum_m ghat_mk^H D_mk A_m g_mk`
    beamforming: Complex64,
    iui: f64,
    gn: f64,
    qn: f64,
}

const MC_CHUNK: usize = 2048;

fn mc_trial<R: Rng>(
    instance: &NetworkInstance,
    profile: &AdcProfile,
    selection: &SelectionTensor,
    eta: &[f64],
    k: usize,
    rng: &mut R,
) -> TrialSample {
    let draw = draw_channels_with(instance, rng);
    let (m_count, k_count, n_count) = draw.g.dim();
    let rho = instance.rho_u;

    // Combined gain toward each user's channel.
    let mut cross = vec![Complex64::new(0.0, 0.0); k_count];
    let mut gn = Complex64::new(0.0, 0.0);
    let mut qn = Complex64::new(0.0, 0.0);
    for m in 0..m_count {
        for n in 0..n_count {
            let alpha = profile.alpha[[m, n]];
            let received_power: f64 = (0..k_count).map(|i| eta[i] * draw.g[[m, i, n]].norm_sqr()).sum();
            // Quantization noise is drawn for every antenna so the stream
            // layout does not depend on the selection.
            let thermal = complex_gaussian(rng, 1.0);
            let quant = complex_gaussian(rng, alpha * (1.0 - alpha) * (rho * received_power + 1.0));
            if !selection.get(m, n, k) {
                continue;
            }
            let w = draw.g_hat[[m, k, n]].conj();
            for (i, c) in cross.iter_mut().enumerate() {
                *c += alpha * w * draw.g[[m, i, n]];
            }
            gn += alpha * w * thermal;
            qn += w * quant;
        }
    }
    let mut interference = Complex64::new(0.0, 0.0);
    for (i, c) in cross.iter().enumerate() {
        let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        if i != k {
            interference += (rho * eta[i]).sqrt() * c * Complex64::from_polar(1.0, phase);
        }
    }
    TrialSample {
        beamforming: cross[k],
        iui: interference.norm_sqr(),
        gn: gn.norm_sqr(),
        qn: qn.norm_sqr(),
    }
}

/// Simulates the MRC output for user `k` and estimates the power of each
/// component. Quantization noise is Gaussian with the AQNM covariance
/// conditioned on the channel realization.
pub fn mc_estimate_terms(
    instance: &NetworkInstance,
    profile: &AdcProfile,
    selection: &SelectionTensor,
    eta: &[f64],
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<McTermEstimate> {
    check_power(eta)?;
    assert!(trials >= 2, "need at least two trials for a standard error");
    let chunks = trials.div_ceil(MC_CHUNK);
    let samples: Vec<TrialSample> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, Stream::MonteCarlo, &[k as u64, chunk as u64]);
            let len = MC_CHUNK.min(trials - chunk * MC_CHUNK);
            (0..len)
                .map(|_| mc_trial(instance, profile, selection, eta, k, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let n = samples.len() as f64;
    let rho_eta = instance.rho_u * eta[k];
    let mean_bf = samples.iter().map(|s| s.beamforming).sum::<Complex64>() / n;

    // Delta method for |mean|^2 along the direction of the mean.
    let ds = if mean_bf.norm() > 0.0 {
        let unit = mean_bf.conj() / mean_bf.norm();
        let projected: Vec<f64> = samples.iter().map(|s| (s.beamforming * unit).re).collect();
        let proj = Estimate::from_samples(&projected);
        Estimate {
            mean: rho_eta * mean_bf.norm_sqr(),
            se: rho_eta * 2.0 * mean_bf.norm() * proj.se,
        }
    } else {
        Estimate { mean: 0.0, se: 0.0 }
    };
    let bu: Vec<f64> = samples
        .iter()
        .map(|s| rho_eta * (s.beamforming - mean_bf).norm_sqr())
        .collect();
    let iui: Vec<f64> = samples.iter().map(|s| s.iui).collect();
    let bu_iui: Vec<f64> = bu.iter().zip(&iui).map(|(a, b)| a + b).collect();
    let gn: Vec<f64> = samples.iter().map(|s| s.gn).collect();
    let qn: Vec<f64> = samples.iter().map(|s| s.qn).collect();
    Ok(McTermEstimate {
        ds,
        bu: Estimate::from_samples(&bu),
        iui: Estimate::from_samples(&iui),
        bu_iui: Estimate::from_samples(&bu_iui),
        gn: Estimate::from_samples(&gn),
        qn: Estimate::from_samples(&qn),
        trials: samples.len(),
    })
}

/// One closed-form term next to its Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermCheck {
    pub user: usize,
    pub term: String,
    pub closed_form: f64,
    pub mc_mean: f64,
    pub mc_se: f64,
}

impl TermCheck {
    /// Distance between the two routes in standard errors.
    pub fn z_score(&self) -> f64 {
        Estimate {
            mean: self.mc_mean,
            se: self.mc_se,
        }
        .z_score(self.closed_form)
    }
}

/// Compares `DS^2`, `BU + IUI`, `GN` and `QN` against simulation for every
/// user, plus `BU` and `IUI` on their own.
pub fn validate_terms(
    instance: &NetworkInstance,
    profile: &AdcProfile,
    selection: &SelectionTensor,
    eta: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<TermCheck>> {
    let mut checks = Vec::new();
    for k in 0..instance.num_users() {
        let cf = closed_form_terms(instance, profile, selection, eta, k);
        let mc = mc_estimate_terms(instance, profile, selection, eta, k, trials, seed)?;
        let rows = [
            ("ds2", cf.ds, mc.ds),
            ("bu_iui", cf.bu_iui(), mc.bu_iui),
            ("gn", cf.gn, mc.gn),
            ("qn", cf.qn, mc.qn),
            ("bu", cf.bu, mc.bu),
            ("iui", cf.iui, mc.iui),
        ];
        for (term, closed_form, est) in rows {
            checks.push(TermCheck {
                user: k,
                term: term.to_string(),
                closed_form,
                mc_mean: est.mean,
                mc_se: est.se,
            });
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{PilotAssignment, Positions};
    use approx::assert_relative_eq;
    use ndarray::array;

    fn single_user() -> (NetworkInstance, AdcProfile, SelectionTensor) {
        // tau_p rho_p beta = 10 gives gamma = 10/11; rho_u = 1 so rho eta = 1.
        let inst = NetworkInstance::from_parts(
            Positions {
                aps: vec![[0.0, 0.0]],
                users: vec![[0.0, 0.0]],
            },
            array![[1.0]],
            PilotAssignment::from_indices(vec![0]),
            10.0,
            1.0,
            1,
            4,
        );
        let profile = AdcProfile::mixed(1, 4, 0);
        let sel = SelectionTensor::ones(1, 4, 1);
        (inst, profile, sel)
    }

    #[test]
    fn single_user_rate() {
        let (inst, profile, sel) = single_user();
        let b = rate_terms(&inst, &profile, &sel, &[1.0]).unwrap();
        assert_relative_eq!(b.gamma_num[0] / b.lambda_den[0], 20.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(sum_rate(&b), 1.494_764_691_749_578, max_relative = 1e-14);
        let terms = closed_form_terms(&inst, &profile, &sel, &[1.0], 0);
        assert_eq!(terms.qn, 0.0);
    }

    #[test]
    fn zero_power_and_empty_selection() {
        let (inst, profile, sel) = single_user();
        let b = rate_terms(&inst, &profile, &sel, &[0.0]).unwrap();
        assert_eq!(b.gamma_num[0], 0.0);
        assert_eq!(sum_rate(&b), 0.0);
        let empty = SelectionTensor::zeros(1, 4, 1);
        let b = rate_terms(&inst, &profile, &empty, &[1.0]).unwrap();
        assert_eq!(b.gamma_num[0], 0.0);
        assert_eq!(b.rate_bps_hz[0], 0.0);
    }

    #[test]
    fn rejects_out_of_range_power() {
        let (inst, profile, sel) = single_user();
        assert!(matches!(
            rate_terms(&inst, &profile, &sel, &[1.5]),
            Err(Error::InvalidPower { user: 0, .. })
        ));
        assert!(rate_terms(&inst, &profile, &sel, &[f64::NAN]).is_err());
    }

    #[test]
    fn decoupled_users_add_up() {
        // Two users on separate APs with orthogonal pilots and no cross gain
        // path strong enough to matter: make the cross gains tiny but positive.
        let beta = array![[1.0, 1e-30], [1e-30, 1.0]];
        let inst = NetworkInstance::from_parts(
            Positions {
                aps: vec![[0.0, 0.0]; 2],
                users: vec![[0.0, 0.0]; 2],
            },
            beta,
            PilotAssignment::from_indices(vec![0, 1]),
            10.0,
            1.0,
            1,
            4,
        );
        let profile = AdcProfile::mixed(2, 4, 0);
        let mut d = ndarray::Array3::from_elem((2, 4, 2), false);
        for n in 0..4 {
            d[[0, n, 0]] = true;
            d[[1, n, 1]] = true;
        }
        let sel = SelectionTensor::from_tensor(d);
        let b = rate_terms(&inst, &profile, &sel, &[1.0, 1.0]).unwrap();
        assert_relative_eq!(sum_rate(&b), 2.0 * 1.494_764_691_749_578, max_relative = 1e-12);
    }

    #[test]
    fn efficiency_metrics() {
        let report = EnergyReport {
            per_ap_watt: vec![0.12532],
            total_watt: 0.12532,
            budget_watt: 1.0,
            feasible: true,
        };
        assert_relative_eq!(
            sree(1.494_764_691_749_578, &report).unwrap(),
            11.927_582_921_717_03,
            max_relative = 1e-12
        );
        assert_eq!(sree(0.0, &report).unwrap(), 0.0);
        let doubled = EnergyReport {
            total_watt: 0.25064,
            ..report.clone()
        };
        assert_relative_eq!(sree(3.0, &doubled).unwrap() * 2.0, sree(3.0, &report).unwrap());
        let zero = EnergyReport {
            total_watt: 0.0,
            ..report
        };
        assert!(matches!(sree(1.0, &zero), Err(Error::ZeroEnergy)));
        assert_eq!(effective_sum_rate(3.5, 1), 3.5);
        assert_eq!(effective_sum_rate(10.0, 5), 2.0);
    }
}
