//! Weighted latent configurations ("worlds") and the sufficient statistics
//! accumulated over them. Exact enumeration and likelihood weighting both
//! produce a list of worlds; everything downstream is shared.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::evidence::Evidence;
use crate::model::{Network, NodeKind};
use crate::scalar::Probability;

/// Latent bit layout: risk factor `i` is bit `i`, disease `j` is bit `n_rf + j`.
pub(crate) const MAX_LATENTS: usize = 128;

#[derive(Debug, Clone, Copy)]
pub(crate) struct World<T> {
    pub active: u128,
    pub log_weight: T,
}

/// Evidence compiled to layer positions.
pub(crate) struct Observed {
    pub risk: Vec<Option<bool>>,
    pub symptom: Vec<Option<bool>>,
}

impl Observed {
    pub fn compile<T: Probability>(net: &Network<T>, e: &Evidence) -> Self {
        let mut risk = vec![None; net.risk_factors().len()];
        let mut symptom = vec![None; net.symptoms().len()];
        for (id, p) in e.iter() {
            if let Some(r) = net.lookup(id.as_str()) {
                match r.kind {
                    NodeKind::RiskFactor => risk[r.index] = Some(p.is_present()),
                    NodeKind::Symptom => symptom[r.index] = Some(p.is_present()),
                    NodeKind::Disease => {}
                }
            }
        }
        Self { risk, symptom }
    }

    pub fn unobserved_symptoms(&self) -> Vec<usize> {
        (0..self.symptom.len()).filter(|&i| self.symptom[i].is_none()).collect()
    }
}

#[inline]
pub(crate) fn bit(mask: u128, i: usize) -> bool {
    mask >> i & 1 == 1
}

/// Noisy-OR activation probability given which parents are on.
#[inline]
pub(crate) fn noisy_or<T: Probability>(leak: T, parents: &[(usize, T)], on: impl Fn(usize) -> bool) -> T {
    let one = T::one();
    let mut off = one - leak;
    for &(p, w) in parents {
        if on(p) {
            off = off * (one - w);
        }
    }
    one - off
}

#[inline]
pub(crate) fn ln_state<T: Probability>(p: T, present: bool) -> T {
    if present {
        p.ln()
    } else {
        (T::one() - p).ln()
    }
}

fn disease_probability<T: Probability>(net: &Network<T>, d: usize, mask: u128) -> T {
    noisy_or(net.diseases()[d].cpt.leak, net.disease_parents(d), |rf| bit(mask, rf))
}

pub(crate) fn symptom_probability<T: Probability>(net: &Network<T>, s: usize, mask: u128) -> T {
    let n_rf = net.risk_factors().len();
    noisy_or(net.symptoms()[s].cpt.leak, net.symptom_parents(s), |d| {
        bit(mask, n_rf + d)
    })
}

fn observed_symptom_log_likelihood<T: Probability>(net: &Network<T>, obs: &Observed, mask: u128) -> T {
    let mut lw = T::zero();
    for (s, state) in obs.symptom.iter().enumerate() {
        if let Some(present) = *state {
            lw = lw + ln_state(symptom_probability(net, s, mask), present);
            if lw == T::neg_infinity() {
                break;
            }
        }
    }
    lw
}

/// Log of the joint probability of the latent configuration and the evidence.
fn enumerated_log_weight<T: Probability>(net: &Network<T>, obs: &Observed, mask: u128) -> T {
    let n_rf = net.risk_factors().len();
    let mut lw = T::zero();
    for (i, rf) in net.risk_factors().iter().enumerate() {
        lw = lw + ln_state(rf.prior, bit(mask, i));
    }
    for d in 0..net.diseases().len() {
        lw = lw + ln_state(disease_probability(net, d, mask), bit(mask, n_rf + d));
    }
    if lw == T::neg_infinity() {
        return lw;
    }
    lw + observed_symptom_log_likelihood(net, obs, mask)
}

/// All latent configurations consistent with observed risk factors.
pub(crate) fn enumerate<T: Probability>(net: &Network<T>, obs: &Observed) -> Vec<World<T>> {
    let n_rf = net.risk_factors().len();
    let mut fixed = 0u128;
    let mut free = Vec::new();
    for (i, state) in obs.risk.iter().enumerate() {
        match state {
            Some(true) => fixed |= 1 << i,
            Some(false) => {}
            None => free.push(i),
        }
    }
    free.extend((0..net.diseases().len()).map(|d| n_rf + d));
    assert!(free.len() < 64, "enumeration over {} latents", free.len());

    let mut worlds = Vec::with_capacity(1usize << free.len());
    for combo in 0u64..(1u64 << free.len()) {
        let mut mask = fixed;
        for (k, &b) in free.iter().enumerate() {
            if combo >> k & 1 == 1 {
                mask |= 1 << b;
            }
        }
        worlds.push(World {
            active: mask,
            log_weight: enumerated_log_weight(net, obs, mask),
        });
    }
    worlds
}

/// Likelihood weighting: latents drawn top-down from priors and CPTs,
/// observed nodes contribute their likelihood to the weight.
pub(crate) fn sample<T: Probability>(net: &Network<T>, obs: &Observed, n: usize, seed: u64) -> Vec<World<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_rf = net.risk_factors().len();
    let mut worlds = Vec::with_capacity(n);
    for _ in 0..n {
        let mut mask = 0u128;
        let mut lw = T::zero();
        for (i, rf) in net.risk_factors().iter().enumerate() {
            match obs.risk[i] {
                Some(present) => {
                    if present {
                        mask |= 1 << i;
                    }
                    lw = lw + ln_state(rf.prior, present);
                }
                None => {
                    if rng.random::<f64>() < rf.prior.as_f64() {
                        mask |= 1 << i;
                    }
                }
            }
        }
        for d in 0..net.diseases().len() {
            if rng.random::<f64>() < disease_probability(net, d, mask).as_f64() {
                mask |= 1 << (n_rf + d);
            }
        }
        if lw != T::neg_infinity() {
            lw = lw + observed_symptom_log_likelihood(net, obs, mask);
        }
        worlds.push(World {
            active: mask,
            log_weight: lw,
        });
    }
    worlds
}

/// Weighted sums over worlds. Weights are rescaled by the largest log weight,
/// so every field is only meaningful relative to `total`.
#[derive(Debug, Clone)]
pub(crate) struct Moments<T> {
    pub total: T,
    pub sq_total: T,
    /// Σ w·[d active], per disease.
    pub disease: Vec<T>,
    /// Σ w²·[d active], per disease.
    pub sq_disease: Vec<T>,
    /// Symptoms whose predictive statistics are tracked.
    pub tracked: Vec<usize>,
    /// Σ w·P(s present | world), per tracked symptom.
    pub symptom: Vec<T>,
    /// Σ w·[d active]·P(s present | world), row-major over (tracked symptom, disease).
    pub joint: Vec<T>,
}

impl<T: Probability> Moments<T> {
    /// Returns `None` when every world has zero weight.
    pub fn accumulate(net: &Network<T>, worlds: &[World<T>], tracked: Vec<usize>) -> Option<Self> {
        let n_rf = net.risk_factors().len();
        let n_dis = net.diseases().len();
        let max = worlds
            .iter()
            .map(|w| w.log_weight)
            .fold(T::neg_infinity(), |a, b| a.max(b));
        if max == T::neg_infinity() || max.is_nan() {
            return None;
        }
        let zero = T::zero();
        let mut m = Moments {
            total: zero,
            sq_total: zero,
            disease: vec![zero; n_dis],
            sq_disease: vec![zero; n_dis],
            symptom: vec![zero; tracked.len()],
            joint: vec![zero; tracked.len() * n_dis],
            tracked,
        };
        let mut active = Vec::with_capacity(n_dis);
        for w in worlds {
            let wt = (w.log_weight - max).exp();
            if wt == zero {
                continue;
            }
            let wt2 = wt * wt;
            m.total = m.total + wt;
            m.sq_total = m.sq_total + wt2;
            active.clear();
            for d in 0..n_dis {
                if bit(w.active, n_rf + d) {
                    active.push(d);
                    m.disease[d] = m.disease[d] + wt;
                    m.sq_disease[d] = m.sq_disease[d] + wt2;
                }
            }
            for (k, &s) in m.tracked.iter().enumerate() {
                let ws = wt * symptom_probability(net, s, w.active);
                m.symptom[k] = m.symptom[k] + ws;
                let row = &mut m.joint[k * n_dis..(k + 1) * n_dis];
                for &d in &active {
                    row[d] = row[d] + ws;
                }
            }
        }
        Some(m)
    }

    pub fn marginal(&self, d: usize) -> T {
        clamp01(self.disease[d] / self.total)
    }

    /// P(tracked symptom k present | evidence).
    pub fn predictive(&self, k: usize) -> T {
        clamp01(self.symptom[k] / self.total)
    }

    /// P(d | evidence, tracked symptom k = present/absent). `None` when that
    /// answer has zero probability.
    pub fn conditional(&self, k: usize, d: usize, present: bool) -> Option<T> {
        let n_dis = self.disease.len();
        let joint = self.joint[k * n_dis + d];
        let (num, den) = if present {
            (joint, self.symptom[k])
        } else {
            (self.disease[d] - joint, self.total - self.symptom[k])
        };
        (den > T::zero()).then(|| clamp01(num / den))
    }

    /// Effective sample size (Σw)² / Σw².
    pub fn effective_sample_size(&self) -> T {
        self.total * self.total / self.sq_total
    }

    /// Delta-method standard error of a self-normalized weighted mean.
    pub fn standard_error(&self, d: usize) -> T {
        let mu = self.disease[d] / self.total;
        let two = T::one() + T::one();
        let num = self.sq_disease[d] * (T::one() - two * mu) + mu * mu * self.sq_total;
        (num.max(T::zero())).sqrt() / self.total
    }
}

pub(crate) fn clamp01<T: Probability>(p: T) -> T {
    p.max(T::zero()).min(T::one())
}
