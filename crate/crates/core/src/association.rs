//! User-centric AP–user association.

use std::cmp::Ordering;
use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which APs serve which users.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    /// `theta[m, k]` is true when AP `m` serves user `k`.
    pub theta: Array2<bool>,
    /// Users served by each AP, ascending.
    pub serving_users: Vec<Vec<usize>>,
    /// APs serving each user, ascending.
    pub serving_aps: Vec<Vec<usize>>,
}

impl Association {
    pub fn from_theta(theta: Array2<bool>) -> Self {
        let (m_count, k_count) = theta.dim();
        let serving_users = (0..m_count)
            .map(|m| (0..k_count).filter(|&k| theta[[m, k]]).collect())
            .collect();
        let serving_aps = (0..k_count)
            .map(|k| (0..m_count).filter(|&m| theta[[m, k]]).collect())
            .collect();
        Self {
            theta,
            serving_users,
            serving_aps,
        }
    }

    /// Every AP serves every user.
    pub fn cell_free(num_aps: usize, num_users: usize) -> Self {
        Self::from_theta(Array2::from_elem((num_aps, num_users), true))
    }

    pub fn num_aps(&self) -> usize {
        self.theta.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.theta.ncols()
    }

    pub fn max_load(&self) -> usize {
        self.serving_users.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn covers_all_users(&self) -> bool {
        self.serving_aps.iter().all(|aps| !aps.is_empty())
    }

    /// Writes `theta` as a 0/1 CSV with one row per AP.
    pub fn write_theta_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let header: Vec<String> = std::iter::once("ap".to_string())
            .chain((0..self.num_users()).map(|k| format!("user_{k}")))
            .collect();
        csv.write_record(&header)?;
        for m in 0..self.num_aps() {
            let row: Vec<String> = std::iter::once(m.to_string())
                .chain((0..self.num_users()).map(|k| u8::from(self.theta[[m, k]]).to_string()))
                .collect();
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Descending by gain, lowest index first on ties.
fn by_gain_desc(gains: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| {
        gains[b]
            .partial_cmp(&gains[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    }
}

/// Greedy user selection followed by a coverage repair loop.
///
/// Each AP first keeps its `L` strongest users. While some user is unserved,
/// the one with the strongest best link is repaired first: its strongest AP
/// that can take it without uncovering anyone swaps out its weakest user
/// still served elsewhere. When no AP qualifies the plain strongest AP
/// evicts its weakest user. The loop is capped at `K * M` swaps.
pub fn select_users(gamma: &Array2<f64>, users_per_ap: usize) -> Result<Association> {
    let (m_count, k_count) = gamma.dim();
    if users_per_ap == 0 || users_per_ap > k_count {
        return Err(Error::InvalidConfig(format!(
            "users per AP must lie in 1..={k_count} (got {users_per_ap})"
        )));
    }
    if k_count > m_count * users_per_ap {
        return Err(Error::InvalidConfig(format!(
            "{k_count} users cannot be covered by {m_count} APs serving {users_per_ap} each"
        )));
    }

    let mut theta = Array2::from_elem((m_count, k_count), false);
    for m in 0..m_count {
        let row: Vec<f64> = gamma.row(m).to_vec();
        let mut order: Vec<usize> = (0..k_count).collect();
        order.sort_by(by_gain_desc(&row));
        for &k in order.iter().take(users_per_ap) {
            theta[[m, k]] = true;
        }
    }

    let best_gain: Vec<f64> = (0..k_count)
        .map(|k| (0..m_count).map(|m| gamma[[m, k]]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut repair_order: Vec<usize> = (0..k_count).collect();
    repair_order.sort_by(by_gain_desc(&best_gain));

    let mut ap_order: Vec<Vec<usize>> = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let col: Vec<f64> = gamma.column(k).to_vec();
        let mut order: Vec<usize> = (0..m_count).collect();
        order.sort_by(by_gain_desc(&col));
        ap_order.push(order);
    }

    let cap = k_count * m_count;
    let mut iterations = 0;
    let is_served = |theta: &Array2<bool>, k: usize| (0..m_count).any(|m| theta[[m, k]]);
    while let Some(k) = repair_order.iter().copied().find(|&k| !is_served(&theta, k)) {
        if iterations == cap {
            let unserved = (0..k_count).filter(|&k| !is_served(&theta, k)).collect();
            return Err(Error::AssociationStalled { iterations, unserved });
        }
        iterations += 1;

        let load = |theta: &Array2<bool>, m: usize| (0..k_count).filter(|&j| theta[[m, j]]).count();
        let weakest = |theta: &Array2<bool>, m: usize, covered_elsewhere: bool| {
            (0..k_count)
                .filter(|&j| theta[[m, j]])
                .filter(|&j| !covered_elsewhere || (0..m_count).any(|o| o != m && theta[[o, j]]))
                .reduce(|a, b| if gamma[[m, b]] < gamma[[m, a]] { b } else { a })
        };
        let safe = ap_order[k]
            .iter()
            .copied()
            .find(|&m| load(&theta, m) < users_per_ap || weakest(&theta, m, true).is_some());
        let (ap, evicted) = match safe {
            Some(m) if load(&theta, m) < users_per_ap => (m, None),
            Some(m) => (m, weakest(&theta, m, true)),
            None => {
                let m = ap_order[k][0];
                (m, weakest(&theta, m, false))
            }
        };
        theta[[ap, k]] = true;
        if let Some(j) = evicted {
            theta[[ap, j]] = false;
        }
    }

    let association = Association::from_theta(theta);
    debug_assert!(association.max_load() <= users_per_ap);
    Ok(association)
}

/// The `(m, n, k)` triples a selection tensor may switch on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionMask {
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_users: usize,
    /// Lexicographic in `(m, n, k)`.
    pub triples: Vec<(usize, usize, usize)>,
}

impl SelectionMask {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Size of the unrestricted search space exponent, `M * N * K`.
    pub fn full_size(&self) -> usize {
        self.num_aps * self.antennas_per_ap * self.num_users
    }
}

/// Triples `(m, n, k)` with `theta[m, k] = 1`.
pub fn selection_mask(association: &Association, antennas_per_ap: usize) -> SelectionMask {
    let (m_count, k_count) = association.theta.dim();
    let mut triples = Vec::new();
    for m in 0..m_count {
        for n in 0..antennas_per_ap {
            for k in 0..k_count {
                if association.theta[[m, k]] {
                    triples.push((m, n, k));
                }
            }
        }
    }
    SelectionMask {
        num_aps: m_count,
        antennas_per_ap,
        num_users: k_count,
        triples,
    }
}
