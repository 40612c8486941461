//! Mixed-resolution ADC impairments and the AP energy model.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::association::SelectionMask;
use crate::error::{Error, Result};

/// AQNM gain for 1..=5 bit converters.
#[allow(clippy::approx_constant)]
pub const IMPAIRMENT_TABLE: [f64; 5] = [0.6366, 0.8825, 0.96546, 0.990503, 0.997501];

/// Resolution of one antenna's converter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Bits(u32),
    /// Treated as unquantized (`alpha = 1`).
    High,
}

/// `1 - (pi sqrt(3) / 2) 2^(-2b)`, the high-resolution approximation.
pub fn impairment_approx(bits: u32) -> f64 {
    1.0 - std::f64::consts::PI * 3f64.sqrt() / 2.0 * 2f64.powi(-2 * bits as i32)
}

/// AQNM linear gain `alpha` for a `bits`-bit converter.
pub fn impairment_factor(bits: i64) -> Result<f64> {
    match bits {
        b if b <= 0 => Err(Error::InvalidBits(b)),
        1..=5 => Ok(IMPAIRMENT_TABLE[bits as usize - 1]),
        b => Ok(impairment_approx(b.min(i64::from(u32::MAX)) as u32)),
    }
}

impl Resolution {
    pub fn alpha(self) -> f64 {
        match self {
            Resolution::Bits(b) => impairment_factor(i64::from(b)).expect("resolution has at least one bit"),
            Resolution::High => 1.0,
        }
    }
}

/// Per-AP, per-antenna converter resolutions and their AQNM gains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdcProfile {
    pub resolution: Array2<Resolution>,
    pub alpha: Array2<f64>,
    pub low_res_antennas: usize,
}

impl AdcProfile {
    /// Antenna `i` (1-based) of every AP gets an `i`-bit converter for
    /// `i <= N1`; the rest are high resolution.
    pub fn mixed(num_aps: usize, antennas_per_ap: usize, low_res_antennas: usize) -> Self {
        assert!(low_res_antennas <= antennas_per_ap);
        let resolution = Array2::from_shape_fn((num_aps, antennas_per_ap), |(_, n)| {
            if n < low_res_antennas {
                Resolution::Bits(n as u32 + 1)
            } else {
                Resolution::High
            }
        });
        let alpha = resolution.mapv(Resolution::alpha);
        Self {
            resolution,
            alpha,
            low_res_antennas,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn antennas_per_ap(&self) -> usize {
        self.alpha.ncols()
    }
}

/// Binary antenna–user selection `d[m, n, k]` and the derived antenna states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionTensor {
    d: Array3<bool>,
    antenna_state: Array2<bool>,
}

impl SelectionTensor {
    pub fn zeros(num_aps: usize, antennas_per_ap: usize, num_users: usize) -> Self {
        Self {
            d: Array3::from_elem((num_aps, antennas_per_ap, num_users), false),
            antenna_state: Array2::from_elem((num_aps, antennas_per_ap), false),
        }
    }

    pub fn ones(num_aps: usize, antennas_per_ap: usize, num_users: usize) -> Self {
        Self {
            d: Array3::from_elem((num_aps, antennas_per_ap, num_users), true),
            antenna_state: Array2::from_elem((num_aps, antennas_per_ap), true),
        }
    }

    pub fn from_tensor(d: Array3<bool>) -> Self {
        let antenna_state = Self::states_of(&d);
        Self { d, antenna_state }
    }

    /// Switches on exactly the masked triples whose bit is set.
    pub fn from_mask_bits(mask: &SelectionMask, bits: &[bool]) -> Self {
        assert_eq!(mask.len(), bits.len());
        let mut sel = Self::zeros(mask.num_aps, mask.antennas_per_ap, mask.num_users);
        for (&(m, n, k), &on) in mask.triples.iter().zip(bits) {
            if on {
                sel.d[[m, n, k]] = true;
                sel.antenna_state[[m, n]] = true;
            }
        }
        sel
    }

    /// All masked triples on.
    pub fn full_on_mask(mask: &SelectionMask) -> Self {
        Self::from_mask_bits(mask, &vec![true; mask.len()])
    }

    fn states_of(d: &Array3<bool>) -> Array2<bool> {
        let (m_count, n_count, _) = d.dim();
        Array2::from_shape_fn((m_count, n_count), |(m, n)| {
            d.slice(ndarray::s![m, n, ..]).iter().any(|&b| b)
        })
    }

    pub fn d(&self) -> &Array3<bool> {
        &self.d
    }

    pub fn get(&self, m: usize, n: usize, k: usize) -> bool {
        self.d[[m, n, k]]
    }

    pub fn antenna_state(&self) -> &Array2<bool> {
        &self.antenna_state
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.d.dim()
    }

    /// Sets one entry and refreshes the state of antenna `(m, n)`.
    pub fn set(&mut self, m: usize, n: usize, k: usize, on: bool) {
        self.d[[m, n, k]] = on;
        self.antenna_state[[m, n]] = on || self.d.slice(ndarray::s![m, n, ..]).iter().any(|&b| b);
        debug_assert!(self.state_is_consistent());
    }

    /// Recomputes every antenna state from `d` and compares.
    pub fn state_is_consistent(&self) -> bool {
        Self::states_of(&self.d) == self.antenna_state
    }

    /// True when nothing outside `mask` is switched on.
    pub fn respects(&self, mask: &SelectionMask) -> bool {
        let mut allowed = Array3::from_elem(self.d.dim(), false);
        for &(m, n, k) in &mask.triples {
            allowed[[m, n, k]] = true;
        }
        self.d.iter().zip(allowed.iter()).all(|(&on, &ok)| !on || ok)
    }

    pub fn is_empty(&self) -> bool {
        !self.antenna_state.iter().any(|&b| b)
    }
}

/// Constants of the per-AP energy model, in watts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConstants {
    /// Scales `2^b` for each active low-resolution converter.
    pub c0: f64,
    /// Charged once per AP when any of low-resolution antennas `2..=N1` is active.
    pub shared_low_res_watt: f64,
    /// Per active high-resolution converter.
    pub c2: f64,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        Self {
            c0: 3e-5,
            shared_low_res_watt: 0.002,
            c2: 0.1229,
        }
    }
}

/// Energy drawn by one AP.
///
/// `E = c0 sum_{n <= N1} d_n 2^(b_n) + 0.002 c1 + c2 sum_{n > N1} d_n`, where
/// `c1 = 1` iff some antenna among `2..=N1` is on. The 1-bit antenna alone
/// does not trigger the shared term.
pub fn ap_energy(
    antenna_state: &[bool],
    resolution: &[Resolution],
    low_res_antennas: usize,
    constants: &EnergyConstants,
) -> f64 {
    debug_assert_eq!(antenna_state.len(), resolution.len());
    let mut converters = 0.0;
    let mut high = 0.0;
    for (n, (&on, res)) in antenna_state.iter().zip(resolution).enumerate() {
        if !on {
            continue;
        }
        match (n < low_res_antennas, res) {
            (true, Resolution::Bits(b)) => converters += 2f64.powi(*b as i32),
            (true, Resolution::High) => converters += 2f64.powi(n as i32 + 1),
            (false, _) => high += 1.0,
        }
    }
    let c1 = antenna_state.iter().take(low_res_antennas).skip(1).any(|&on| on);
    constants.c0 * converters + if c1 { constants.shared_low_res_watt } else { 0.0 } + constants.c2 * high
}

/// Per-AP and total energy against a budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub per_ap_watt: Vec<f64>,
    pub total_watt: f64,
    pub budget_watt: f64,
    /// `total < budget`, strictly.
    pub feasible: bool,
}

fn total_for_states(states: &Array2<bool>, profile: &AdcProfile, constants: &EnergyConstants) -> Vec<f64> {
    (0..states.nrows())
        .map(|m| {
            let row: Vec<bool> = states.row(m).to_vec();
            let res: Vec<Resolution> = profile.resolution.row(m).to_vec();
            ap_energy(&row, &res, profile.low_res_antennas, constants)
        })
        .collect()
}

/// Energy with every antenna switched on.
pub fn max_system_energy(profile: &AdcProfile, constants: &EnergyConstants) -> f64 {
    let all_on = Array2::from_elem(profile.alpha.dim(), true);
    total_for_states(&all_on, profile, constants).iter().sum()
}

/// Energy of a bare antenna-state matrix, without building a report.
pub fn state_energy(states: &Array2<bool>, profile: &AdcProfile, constants: &EnergyConstants) -> f64 {
    total_for_states(states, profile, constants).iter().sum()
}

pub fn system_energy(
    selection: &SelectionTensor,
    profile: &AdcProfile,
    constants: &EnergyConstants,
    budget_watt: f64,
) -> EnergyReport {
    let per_ap_watt = total_for_states(selection.antenna_state(), profile, constants);
    let total_watt: f64 = per_ap_watt.iter().sum();
    EnergyReport {
        feasible: total_watt < budget_watt,
        per_ap_watt,
        total_watt,
        budget_watt,
    }
}

/// Cheapest energy of any selection with exactly one antenna switched on.
pub fn cheapest_single_antenna(profile: &AdcProfile, constants: &EnergyConstants) -> f64 {
    let n_count = profile.antennas_per_ap();
    let res: Vec<Resolution> = profile.resolution.row(0).to_vec();
    (0..n_count)
        .map(|n| {
            let mut state = vec![false; n_count];
            state[n] = true;
            ap_energy(&state, &res, profile.low_res_antennas, constants)
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    #[allow(clippy::approx_constant)]
    fn impairment_values() {
        assert_eq!(impairment_factor(1).unwrap(), 0.6366);
        assert_eq!(impairment_factor(5).unwrap(), 0.997501);
        assert_relative_eq!(impairment_factor(6).unwrap(), 0.999_335_766_834_386_9, epsilon = 1e-15);
        assert!((impairment_factor(6).unwrap() - 0.9993359).abs() < 1e-6);
        assert!(matches!(impairment_factor(0), Err(Error::InvalidBits(0))));
        assert!(impairment_factor(-3).is_err());
        let mut prev = 0.0;
        for b in 1..40 {
            let a = impairment_factor(b).unwrap();
            assert!(a > prev || (a == 1.0 && prev == 1.0));
            assert!(a <= 1.0);
            prev = a;
        }
        assert!(1.0 - impairment_factor(30).unwrap() < 1e-15);
        // Table and closed form agree loosely at 5 bits.
        assert!((impairment_approx(5) - IMPAIRMENT_TABLE[4]).abs() < 2e-4);
        assert_eq!(Resolution::High.alpha(), 1.0);
    }

    #[test]
    fn mixed_profile_layout() {
        let p = AdcProfile::mixed(2, 4, 3);
        assert_eq!(p.resolution[[1, 0]], Resolution::Bits(1));
        assert_eq!(p.resolution[[1, 2]], Resolution::Bits(3));
        assert_eq!(p.resolution[[0, 3]], Resolution::High);
        assert_eq!(p.alpha[[0, 3]], 1.0);
        assert_eq!(p.alpha[[0, 1]], 0.8825);
    }

    #[test]
    fn ap_energy_hand_values() {
        let p = AdcProfile::mixed(1, 4, 3);
        let res: Vec<Resolution> = p.resolution.row(0).to_vec();
        let c = EnergyConstants::default();
        assert_eq!(ap_energy(&[false; 4], &res, 3, &c), 0.0);
        assert_relative_eq!(ap_energy(&[true; 4], &res, 3, &c), 0.12532, epsilon = 1e-15);
        assert_relative_eq!(
            ap_energy(&[true, false, false, false], &res, 3, &c),
            6e-5,
            epsilon = 1e-18
        );
        assert_relative_eq!(
            ap_energy(&[false, true, false, false], &res, 3, &c),
            3e-5 * 4.0 + 0.002,
            epsilon = 1e-15
        );
    }

    #[test]
    fn system_energy_examples() {
        let p = AdcProfile::mixed(1, 4, 3);
        let c = EnergyConstants::default();
        let emax = max_system_energy(&p, &c);
        assert_relative_eq!(emax, 0.12532, epsilon = 1e-15);
        let full = SelectionTensor::ones(1, 4, 2);
        let report = system_energy(&full, &p, &c, 0.75 * emax);
        assert_relative_eq!(report.total_watt, emax, epsilon = 1e-15);
        assert!(!report.feasible);
        let none = SelectionTensor::zeros(1, 4, 2);
        assert!(system_energy(&none, &p, &c, 1e-9).feasible);
        assert_eq!(cheapest_single_antenna(&p, &c), 6e-5);
    }

    #[test]
    fn energy_monotone_in_active_antennas() {
        let p = AdcProfile::mixed(1, 6, 4);
        let res: Vec<Resolution> = p.resolution.row(0).to_vec();
        let c = EnergyConstants::default();
        for mask in 0u32..64 {
            let state: Vec<bool> = (0..6).map(|n| mask >> n & 1 == 1).collect();
            let base = ap_energy(&state, &res, 4, &c);
            for n in 0..6 {
                let mut more = state.clone();
                more[n] = true;
                assert!(ap_energy(&more, &res, 4, &c) >= base);
            }
        }
    }

    #[test]
    fn state_tracks_random_mutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut sel = SelectionTensor::zeros(3, 4, 5);
        for _ in 0..10_000 {
            let (m, n, k) = (rng.random_range(0..3), rng.random_range(0..4), rng.random_range(0..5));
            sel.set(m, n, k, rng.random_bool(0.4));
            assert!(sel.state_is_consistent());
        }
    }
}
