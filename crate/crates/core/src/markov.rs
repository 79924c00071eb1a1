//! Birth-death occupancy chains and the blocking / non-completion figures
//! derived from them.
//!
//! A chain tracks how many of a band's `C` channels the primary user holds.
//! Each step occupancy goes up by one with probability `p` (if below `C`),
//! down by one with probability `q` (if above 0), and otherwise stays put.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancyChain {
    capacity: u32,
    birth: f64,
    death: f64,
}

impl OccupancyChain {
    pub fn new(capacity: u32, birth: f64, death: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidChain("capacity must be at least 1".into()));
        }
        for (name, v) in [("p", birth), ("q", death)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidChain(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if birth + death > 1.0 + 1e-12 {
            return Err(Error::InvalidChain(format!(
                "p + q = {} exceeds 1",
                birth + death
            )));
        }
        Ok(OccupancyChain {
            capacity,
            birth,
            death,
        })
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn birth(&self) -> f64 {
        self.birth
    }

    pub fn death(&self) -> f64 {
        self.death
    }

    pub fn is_frozen(&self) -> bool {
        self.birth == 0.0 && self.death == 0.0
    }

    pub fn states(&self) -> usize {
        self.capacity as usize + 1
    }

    /// Probability of moving up from occupancy `k`.
    pub fn up(&self, k: u32) -> f64 {
        if k < self.capacity {
            self.birth
        } else {
            0.0
        }
    }

    /// Probability of moving down from occupancy `k`.
    pub fn down(&self, k: u32) -> f64 {
        if k > 0 {
            self.death
        } else {
            0.0
        }
    }

    pub fn transition_matrix(&self) -> Matrix {
        let n = self.states();
        let mut m = Matrix::zeros(n);
        for k in 0..self.capacity + 1 {
            let i = k as usize;
            let up = self.up(k);
            let down = self.down(k);
            if up > 0.0 {
                m[(i, i + 1)] = up;
            }
            if down > 0.0 {
                m[(i, i - 1)] = down;
            }
            m[(i, i)] = 1.0 - up - down;
        }
        m
    }

    /// Stationary law, `pi_k` proportional to `(p/q)^k`.
    pub fn stationary(&self) -> Result<Distribution> {
        if self.is_frozen() {
            return Err(Error::NoUniqueStationary);
        }
        let n = self.states();
        let mut weights = vec![0.0; n];
        if self.death == 0.0 {
            weights[n - 1] = 1.0;
        } else if self.birth == 0.0 {
            weights[0] = 1.0;
        } else if self.birth <= self.death {
            let r = self.birth / self.death;
            let mut w = 1.0;
            for slot in weights.iter_mut() {
                *slot = w;
                w *= r;
            }
        } else {
            // Count down from the top so the weights stay <= 1.
            let r = self.death / self.birth;
            let mut w = 1.0;
            for slot in weights.iter_mut().rev() {
                *slot = w;
                w *= r;
            }
        }
        Ok(Distribution::from_weights(weights))
    }

    /// Probability that at least `demand` channels are free at stationarity.
    pub fn prob_free_at_least(&self, demand: u32) -> Result<f64> {
        if demand > self.capacity {
            return Err(Error::DemandExceedsCapacity {
                demand,
                capacity: self.capacity,
            });
        }
        let pi = self.stationary()?;
        Ok(pi.mass_up_to(self.capacity - demand))
    }

    /// Probability that an admitted session is dropped before completing,
    /// on this band alone with no handover target.
    ///
    /// The session is admitted at stationary occupancy conditioned on
    /// `free >= demand`. Each step it completes with probability
    /// `completion`; otherwise occupancy moves. Landing exactly on the
    /// boundary `occupancy + demand == capacity` triggers an instantaneous
    /// negotiation that yields one channel with probability `grant` and drops
    /// the session otherwise. Landing past the boundary drops it.
    pub fn noncompletion_probability(&self, demand: u32, completion: f64, grant: f64) -> Result<f64> {
        let pi = self.stationary()?;
        self.noncompletion_from(&pi, demand, completion, grant)
    }

    /// As [`noncompletion_probability`](Self::noncompletion_probability),
    /// with admission occupancy drawn from `law` instead of the stationary
    /// law (still conditioned on `free >= demand`).
    pub fn noncompletion_from(&self, law: &Distribution, demand: u32, completion: f64, grant: f64) -> Result<f64> {
        if demand > self.capacity {
            return Err(Error::DemandExceedsCapacity {
                demand,
                capacity: self.capacity,
            });
        }
        if completion == 0.0 {
            return Err(Error::NeverCompletes);
        }
        if !(0.0..=1.0).contains(&completion) {
            return Err(Error::InvalidParameter {
                name: "c",
                reason: format!("{completion} is outside (0, 1]"),
            });
        }
        if !(0.0..=1.0).contains(&grant) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("{grant} is outside [0, 1]"),
            });
        }
        if law.probabilities().len() != self.states() {
            return Err(Error::InvalidParameter {
                name: "law",
                reason: format!("{} states, chain has {}", law.probabilities().len(), self.states()),
            });
        }
        let boundary = self.capacity - demand;
        let admitted = law.mass_up_to(boundary);
        if admitted == 0.0 {
            return Err(Error::InvalidParameter {
                name: "law",
                reason: "no admissible occupancy".into(),
            });
        }
        let drop = self.drop_probabilities(demand, completion, grant)?;
        let weighted: f64 = drop
            .iter()
            .zip(law.probabilities())
            .map(|(x, p)| x * p)
            .sum();
        Ok(weighted / admitted)
    }

    /// Drop probability of a transmitting session, per occupancy state
    /// `0..=capacity - demand`, from the absorbing-chain solve
    /// `(I - Q) x = b`.
    pub fn drop_probabilities(&self, demand: u32, completion: f64, grant: f64) -> Result<Vec<f64>> {
        if demand > self.capacity {
            return Err(Error::DemandExceedsCapacity {
                demand,
                capacity: self.capacity,
            });
        }
        let boundary = (self.capacity - demand) as usize;
        let n = boundary + 1;
        let survive = 1.0 - completion;
        let mut q = Matrix::zeros(n);
        let mut b = vec![0.0; n];
        for k in 0..n {
            let ku = k as u32;
            let moves = [
                (k + 1, self.up(ku)),
                (k.wrapping_sub(1), self.down(ku)),
                (k, 1.0 - self.up(ku) - self.down(ku)),
            ];
            for (next, prob) in moves {
                if prob == 0.0 {
                    continue;
                }
                let mass = survive * prob;
                if next < boundary {
                    q[(k, next)] += mass;
                } else if next == boundary {
                    if boundary >= 1 {
                        q[(k, boundary - 1)] += mass * grant;
                        b[k] += mass * (1.0 - grant);
                    } else {
                        // An idle PU has nothing to yield.
                        b[k] += mass;
                    }
                } else {
                    b[k] += mass;
                }
            }
        }
        let mut a = Matrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] -= q[(i, j)];
            }
        }
        a.solve(&b)
    }
}

/// Probability that no band can admit `demand` channels, with bands
/// independent and each at stationarity. Bands smaller than `demand`
/// never admit.
pub fn blocking_probability(bands: &[OccupancyChain], demand: u32) -> Result<f64> {
    if bands.is_empty() {
        return Err(Error::NoSpectrum);
    }
    bands.iter().try_fold(1.0, |acc, band| {
        if demand > band.capacity() {
            return Ok(acc);
        }
        let short = band.stationary()?.mass_above(band.capacity() - demand);
        Ok(acc * short)
    })
}

/// A probability vector indexed by occupancy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn from_weights(mut weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        Distribution(weights)
    }

    pub fn point_mass(states: usize, at: usize) -> Self {
        let mut v = vec![0.0; states];
        v[at] = 1.0;
        Distribution(v)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    /// Total mass on states `0..=k`.
    pub fn mass_up_to(&self, k: u32) -> f64 {
        self.0.iter().take(k as usize + 1).sum()
    }

    /// Total mass on states above `k`.
    pub fn mass_above(&self, k: u32) -> f64 {
        self.0.iter().skip(k as usize + 1).sum()
    }

    /// `pi * P`.
    pub fn propagate(&self, p: &Matrix) -> Vec<f64> {
        let n = self.0.len();
        (0..n)
            .map(|j| (0..n).map(|i| self.0[i] * p[(i, j)]).sum())
            .collect()
    }
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Solves `self * x = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        assert_eq!(rhs.len(), n, "right-hand side length mismatch");
        let mut a = self.data.clone();
        let mut x = rhs.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
                .expect("non-empty range");
            if a[pivot * n + col].abs() < 1e-300 {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                x.swap(col, pivot);
            }
            let diag = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / diag;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                x[r] -= f * x[col];
            }
        }
        for col in (0..n).rev() {
            let tail: f64 = (col + 1..n).map(|j| a[col * n + j] * x[j]).sum();
            x[col] = (x[col] - tail) / a[col * n + col];
        }
        Ok(x)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain(c: u32, p: f64, q: f64) -> OccupancyChain {
        OccupancyChain::new(c, p, q).unwrap()
    }

    #[test]
    fn transition_examples() {
        assert_eq!(chain(1, 0.3, 0.2).transition_matrix().rows(), vec![vec![0.7, 0.3], vec![0.2, 0.8]]);
        assert_eq!(chain(5, 0.0, 0.0).transition_matrix(), Matrix::identity(6));
        let m = chain(2, 0.2, 0.4).transition_matrix();
        let mid = m.row(1);
        assert!((mid[0] - 0.4).abs() < 1e-15 && (mid[1] - 0.4).abs() < 1e-15 && (mid[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_chains() {
        assert!(OccupancyChain::new(0, 0.1, 0.1).is_err());
        assert!(OccupancyChain::new(4, -0.1, 0.1).is_err());
        assert!(OccupancyChain::new(4, 0.6, 0.5).is_err());
    }

    #[test]
    fn stationary_examples() {
        let u = chain(8, 0.2, 0.2).stationary().unwrap();
        for &x in u.probabilities() {
            assert!((x - 1.0 / 9.0).abs() < 1e-14);
        }
        let empty = chain(8, 0.0, 0.3).stationary().unwrap();
        assert_eq!(empty.probabilities()[0], 1.0);
        let s = chain(2, 0.2, 0.4).stationary().unwrap();
        let want = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
        for (a, b) in s.probabilities().iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(chain(3, 0.0, 0.0).stationary(), Err(Error::NoUniqueStationary));
        let full = chain(3, 0.5, 0.0).stationary().unwrap();
        assert_eq!(full.probabilities()[3], 1.0);
    }

    #[test]
    fn free_probability_examples() {
        assert_eq!(chain(8, 0.3, 0.1).prob_free_at_least(0).unwrap(), 1.0);
        assert_eq!(chain(8, 0.0, 0.1).prob_free_at_least(8).unwrap(), 1.0);
        assert!((chain(8, 0.2, 0.2).prob_free_at_least(4).unwrap() - 5.0 / 9.0).abs() < 1e-12);
        assert!(matches!(
            chain(8, 0.2, 0.2).prob_free_at_least(9),
            Err(Error::DemandExceedsCapacity { .. })
        ));
    }

    #[test]
    fn blocking_examples() {
        let canon = chain(8, 0.2, 0.2);
        assert_eq!(blocking_probability(&[canon, chain(8, 0.0, 0.5)], 4).unwrap(), 0.0);
        assert!((blocking_probability(&[canon], 4).unwrap() - 4.0 / 9.0).abs() < 1e-12);
        assert!((blocking_probability(&[canon, canon], 4).unwrap() - 16.0 / 81.0).abs() < 1e-12);
        assert_eq!(blocking_probability(&[], 4), Err(Error::NoSpectrum));
        assert_eq!(blocking_probability(&[chain(2, 0.1, 0.1)], 3).unwrap(), 1.0);
    }

    #[test]
    fn noncompletion_examples() {
        let flat = chain(8, 0.0, 0.3);
        for gamma in [0.0, 0.4, 1.0] {
            assert_eq!(flat.noncompletion_probability(4, 0.2, gamma).unwrap(), 0.0);
        }
        assert_eq!(chain(8, 0.2, 0.2).noncompletion_probability(4, 1.0, 0.3).unwrap(), 0.0);
        // Frozen by forward mass propagation of the session process.
        let x = chain(2, 0.3, 0.3).noncompletion_probability(1, 0.1, 0.5).unwrap();
        assert!((x - 0.641_489_361_702_127_3).abs() < 1e-12, "{x}");
        assert_eq!(
            chain(2, 0.3, 0.3).noncompletion_probability(1, 0.0, 0.5),
            Err(Error::NeverCompletes)
        );
    }

    #[test]
    fn full_demand_always_drops_unless_completed() {
        // demand == capacity: the band is admitted only when empty and the PU
        // has nothing to give back on the first negotiation.
        let x = chain(2, 0.0, 0.3).noncompletion_probability(2, 0.25, 1.0).unwrap();
        assert!((x - 0.75).abs() < 1e-12);
    }

    #[test]
    fn solve_small_system() {
        let mut a = Matrix::zeros(2);
        a[(0, 0)] = 0.0;
        a[(0, 1)] = 2.0;
        a[(1, 0)] = 1.0;
        a[(1, 1)] = 1.0;
        let x = a.solve(&[4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert_eq!(Matrix::zeros(2).solve(&[1.0, 1.0]), Err(Error::Singular));
    }

    fn arb_chain() -> impl Strategy<Value = OccupancyChain> {
        (1u32..=16, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(c, a, b)| {
            let p = a * 0.5;
            let q = b * 0.5;
            chain(c, p, q)
        })
    }

    proptest! {
        #[test]
        fn rows_are_stochastic(ch in arb_chain()) {
            let m = ch.transition_matrix();
            for i in 0..m.size() {
                let s: f64 = m.row(i).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
                prop_assert!(m.row(i).iter().all(|&x| x >= 0.0));
            }
        }

        #[test]
        fn stationary_is_fixed_point(ch in arb_chain()) {
            prop_assume!(!ch.is_frozen());
            let pi = ch.stationary().unwrap();
            let next = pi.propagate(&ch.transition_matrix());
            let total: f64 = pi.probabilities().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for (a, b) in pi.probabilities().iter().zip(next) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn blocking_monotone_in_demand(ch in arb_chain(), other in arb_chain()) {
            prop_assume!(!ch.is_frozen() && !other.is_frozen());
            let bands = [ch, other];
            let max = ch.capacity().max(other.capacity()) + 1;
            let mut last = -1.0;
            for d in 0..=max {
                let b = blocking_probability(&bands, d).unwrap();
                prop_assert!(b >= last - 1e-12);
                last = b;
            }
        }
    }

    #[test]
    fn noncompletion_monotone_on_grid() {
        for (c_cap, p, q) in [(2, 0.3, 0.3), (8, 0.2, 0.2), (6, 0.35, 0.15), (5, 0.1, 0.4)] {
            let ch = chain(c_cap, p, q);
            for d in 1..=c_cap {
                for ci in 1..=10 {
                    let c = ci as f64 / 10.0;
                    let mut last = f64::INFINITY;
                    for gi in 0..=10 {
                        let g = gi as f64 / 10.0;
                        let x = ch.noncompletion_probability(d, c, g).unwrap();
                        assert!((0.0..=1.0 + 1e-12).contains(&x));
                        assert!(x <= last + 1e-12, "not nonincreasing in gamma");
                        last = x;
                    }
                }
                for gi in 0..=10 {
                    let g = gi as f64 / 10.0;
                    let mut last = f64::INFINITY;
                    for ci in 1..=10 {
                        let x = ch.noncompletion_probability(d, ci as f64 / 10.0, g).unwrap();
                        assert!(x <= last + 1e-12, "not nonincreasing in c");
                        last = x;
                    }
                }
            }
        }
    }
}
